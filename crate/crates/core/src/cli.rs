//! Batch front end: `shape`, `spectrum`, `convert` and `cluster`.
//!
//! Every command validates the whole configuration first, computes all of
//! its results in memory, and only then writes files, so a failed run leaves
//! nothing behind.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::config::RunConfig;
use crate::converter::{convert, response_identity};
use crate::driving::DrivingProfile;
use crate::error::Error;
use crate::gaussian::{
    cluster_state, cluster_unitary_reference, co_mode_duan, compose_cluster_unitary, nullifier_variances, orthogonal_mode_duan,
    symplectic_defect, unitarity_defect, unitary_to_symplectic, AdjacencyMatrix,
};
use crate::grid::ModeProfile;
use crate::kernel::{full_kernel, half_kernel, write};
use crate::output::{csv, format_float, indexed_csv, json};
use crate::schmidt::decompose;
use crate::shaper::{shape_driving, ShaperReport};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NUMERICAL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

const OUTPUT_HELP: &str = "\
OUTPUT FILES (all CSV files have a header row; floats use 17 significant digits)
  shape     driving_<i>.csv          t, F
            shape_report.json        per supermode: steps, residuals, leakage,
                                     kernel discrepancy, leading-mode overlap
  spectrum  eigenvalues.csv          k, lambda, kernel_eigenvalue
            eigenvalues_constant.csv k, lambda, kernel_eigenvalue
            schmidt_modes.csv        t, phi_1 .. phi_4
            spin_wave.csv            z, B
            spectrum_report.json
  convert   output_<i>_<j>.csv       t, A_out, L_j
            fidelity.csv             i, j, fidelity, efficiency, cross_talk
            amplitude_maps.json      M[j][k] per pair, identity check
  cluster   cluster_report.json      U, residuals, nullifiers, Duan values
  every     schema.json              column description of the files above

EXIT CODES
  0 success, 1 numerical failure, 2 configuration error";

#[derive(Debug, Parser)]
#[command(name = "qmshape", version, about = "Raman memory mode shaping and cluster-state checks", after_help = OUTPUT_HELP)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Design driving envelopes for the requested supermodes.
    Shape,
    /// Schmidt spectrum of the full memory cycle.
    Spectrum,
    /// Write one supermode and read it out on another profile.
    Convert,
    /// Build the four-node cluster and check its nullifiers.
    Cluster,
}

#[derive(Debug, Default, Args)]
pub struct Overrides {
    /// JSON configuration file.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[arg(long = "n-t", global = true)]
    pub n_t: Option<usize>,
    #[arg(long = "n-z", global = true)]
    pub n_z: Option<usize>,
    #[arg(long = "t-w", global = true)]
    pub t_w: Option<f64>,
    #[arg(long = "l-phys", global = true)]
    pub l_phys: Option<f64>,
    #[arg(long = "l-search", global = true, allow_negative_numbers = true)]
    pub l_search: Option<f64>,
    /// Comma-separated supermode indices.
    #[arg(long, global = true, value_delimiter = ',')]
    pub modes: Option<Vec<usize>>,
    #[arg(long = "max-steps", global = true)]
    pub max_steps: Option<usize>,
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Reserved; no command uses randomness.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

impl Overrides {
    pub fn resolve(&self) -> Result<RunConfig, Error> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        macro_rules! set {
            ($field:ident) => {
                if let Some(v) = self.$field.clone() {
                    cfg.$field = v;
                }
            };
        }
        set!(out);
        set!(n_t);
        set!(n_z);
        set!(t_w);
        set!(l_phys);
        set!(modes);
        if let Some(v) = self.l_search {
            cfg.l_search = Some(v);
        }
        if let Some(v) = self.max_steps {
            cfg.shaper.max_steps = v;
        }
        if let Some(v) = self.tol {
            cfg.shaper.tol = v;
        }
        if self.seed.is_some() {
            cfg.seed = self.seed;
        }
        Ok(cfg)
    }
}

/// Files produced by a command, written together at the end.
#[derive(Debug, Default)]
pub struct Bundle {
    pub files: Vec<(String, String)>,
}

impl Bundle {
    fn add(&mut self, name: impl Into<String>, contents: String) {
        self.files.push((name.into(), contents));
    }

    fn write_to(&self, dir: &Path) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        for (name, contents) in &self.files {
            std::fs::write(dir.join(name), contents)?;
        }
        Ok(())
    }
}

#[derive(Debug)]
pub enum Failure {
    Config(Error),
    Numerical(Error),
    Io(std::io::Error),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Config(_) => EXIT_CONFIG,
            Failure::Numerical(_) | Failure::Io(_) => EXIT_NUMERICAL,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Config(e) => write!(f, "configuration error: {e}"),
            Failure::Numerical(e) => write!(f, "numerical failure: {e}"),
            Failure::Io(e) => write!(f, "cannot write output: {e}"),
        }
    }
}

/// Parse arguments, run, and return the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match run(&cli) {
        Ok(dir) => {
            eprintln!("wrote results to {}", dir.display());
            EXIT_OK
        }
        Err(f) => {
            eprintln!("qmshape: {f}");
            f.exit_code()
        }
    }
}

/// Execute a parsed command; returns the output directory.
pub fn run(cli: &Cli) -> Result<PathBuf, Failure> {
    let cfg = cli.overrides.resolve().map_err(Failure::Config)?;
    cfg.validate().map_err(Failure::Config)?;
    let bundle = compute(cli.command, &cfg).map_err(Failure::Numerical)?;
    bundle.write_to(&cfg.out).map_err(Failure::Io)?;
    Ok(cfg.out.clone())
}

/// Run a command without touching the file system.
pub fn compute(command: Command, cfg: &RunConfig) -> Result<Bundle, Error> {
    match command {
        Command::Shape => cmd_shape(cfg),
        Command::Spectrum => cmd_spectrum(cfg),
        Command::Convert => cmd_convert(cfg),
        Command::Cluster => cmd_cluster(cfg),
    }
}

fn shape_all(cfg: &RunConfig, modes: &[usize], basis: &[ModeProfile]) -> Result<Vec<ShaperReport>, Error> {
    modes.par_iter().map(|&k| shape_driving(&cfg.shaper_config(k), &basis[k - 1])).collect()
}

fn shaped_driving_map(cfg: &RunConfig, modes: &[usize], basis: &[ModeProfile]) -> Result<Vec<(usize, DrivingProfile)>, Error> {
    let mut unique: Vec<usize> = modes.to_vec();
    unique.sort_unstable();
    unique.dedup();
    let reports = shape_all(cfg, &unique, basis)?;
    Ok(unique.into_iter().zip(reports.into_iter().map(|r| r.driving)).collect())
}

fn lookup(map: &[(usize, DrivingProfile)], k: usize) -> &DrivingProfile {
    &map.iter().find(|(m, _)| *m == k).expect("shaped above").1
}

#[derive(Serialize)]
struct ShapeEntry {
    mode: usize,
    steps: usize,
    residuals: Vec<f64>,
    residual_at_step_9: Option<f64>,
    total_q: f64,
    leakage: f64,
    kernel_discrepancy: f64,
    leading_mode_overlap: f64,
    kernel_eigenvalues: Vec<f64>,
}

fn cmd_shape(cfg: &RunConfig) -> Result<Bundle, Error> {
    let basis = cfg.basis()?;
    let grid = cfg.time_grid()?;
    let reports = shape_all(cfg, &cfg.modes, &basis)?;
    let mut bundle = Bundle::default();
    let mut entries = Vec::new();
    for (&k, r) in cfg.modes.iter().zip(&reports) {
        bundle.add(format!("driving_{k}.csv"), csv(&["t", "F"], &[&grid.points(), r.driving.samples()]));
        entries.push(ShapeEntry {
            mode: k,
            steps: r.steps,
            residuals: r.residuals.clone(),
            residual_at_step_9: r.residual_at(9),
            total_q: r.driving.total_q(),
            leakage: r.leakage,
            kernel_discrepancy: r.kernel_discrepancy,
            leading_mode_overlap: r.leading_mode_overlap,
            kernel_eigenvalues: r.kernel_eigenvalues.clone(),
        });
    }
    bundle.add("shape_report.json", json(&json!({ "config": cfg, "modes": entries })));
    bundle.add("schema.json", schema(Command::Shape));
    Ok(bundle)
}

fn spectrum_table(lambda: &[f64], mu: &[f64], rows: usize) -> String {
    let n = rows.min(lambda.len());
    let index: Vec<usize> = (1..=n).collect();
    indexed_csv(&["k", "lambda", "kernel_eigenvalue"], &index, &[&lambda[..n], &mu[..n]])
}

fn cmd_spectrum(cfg: &RunConfig) -> Result<Bundle, Error> {
    let basis = cfg.basis()?;
    let grid = cfg.time_grid()?;
    let space = cfg.space_grid()?;
    let mode = cfg.modes[0];
    let driving = shape_all(cfg, &[mode], &basis)?.remove(0).driving;
    let shaped = decompose(&full_kernel(&driving, &driving, &space)?)?;
    let constant = DrivingProfile::constant(grid);
    let flat = decompose(&full_kernel(&constant, &constant, &space)?)?;
    let wave = write(&basis[mode - 1], &half_kernel(&driving, &space)?)?;

    let mut bundle = Bundle::default();
    bundle.add("eigenvalues.csv", spectrum_table(&shaped.eigenvalues, &shaped.kernel_eigenvalues, 20));
    bundle.add("eigenvalues_constant.csv", spectrum_table(&flat.eigenvalues, &flat.kernel_eigenvalues, 20));
    let t = grid.points();
    let mut cols: Vec<&[f64]> = vec![&t];
    cols.extend(shaped.modes.iter().take(4).map(|m| m.samples()));
    let names: Vec<String> = (1..cols.len()).map(|k| format!("phi_{k}")).collect();
    let mut header = vec!["t"];
    header.extend(names.iter().map(String::as_str));
    bundle.add("schmidt_modes.csv", csv(&header, &cols));
    bundle.add("spin_wave.csv", csv(&["z", "B"], &[&space.points(), wave.samples()]));
    bundle.add(
        "spectrum_report.json",
        json(&json!({
            "mode": mode,
            "lambda": &shaped.eigenvalues[..6],
            "kernel_eigenvalues": &shaped.kernel_eigenvalues[..6],
            "constant_lambda": &flat.eigenvalues[..6],
            "constant_ratio": flat.eigenvalues[1] / flat.eigenvalues[0],
            "spin_wave_norm": wave.norm(),
            "spin_wave_exit": wave.last(),
            "spin_wave_exit_relative": wave.last().abs() / wave.max_abs(),
        })),
    );
    bundle.add("schema.json", schema(Command::Spectrum));
    Ok(bundle)
}

fn cmd_convert(cfg: &RunConfig) -> Result<Bundle, Error> {
    let basis = cfg.basis()?;
    let grid = cfg.time_grid()?;
    let space = cfg.space_grid()?;
    let mut needed: Vec<usize> = cfg.pairs.iter().flat_map(|&(i, j)| [i, j]).collect();
    needed.extend(&cfg.modes);
    let drivings = shaped_driving_map(cfg, &needed, &basis)?;

    let results = cfg
        .pairs
        .iter()
        .map(|&(i, j)| convert(lookup(&drivings, i), lookup(&drivings, j), &basis, &space))
        .collect::<Result<Vec<_>, _>>()?;

    let identity_drivings: Vec<DrivingProfile> = cfg.modes.iter().map(|&k| lookup(&drivings, k).clone()).collect();
    let targets: Vec<ModeProfile> = cfg.modes.iter().map(|&k| basis[k - 1].clone()).collect();
    let identity = response_identity(&identity_drivings, &targets, &space)?;

    let mut bundle = Bundle::default();
    let t = grid.points();
    let mut maps = Vec::new();
    for r in &results {
        let (i, j) = r.pair;
        bundle.add(format!("output_{i}_{j}.csv"), csv(&["t", "A_out", "L_j"], &[&t, r.output.samples(), basis[j - 1].samples()]));
        let rows: Vec<Vec<f64>> = r.amplitudes.row_iter().map(|row| row.iter().copied().collect()).collect();
        maps.push(json!({
            "write_mode": i,
            "read_mode": j,
            "fidelity": r.fidelity,
            "efficiency": r.efficiency,
            "cross_talk": r.cross_talk(4),
            "multimode": r.multimode,
            "amplitudes": rows,
        }));
    }
    let mut table = String::from("i,j,fidelity,efficiency,cross_talk\n");
    for r in &results {
        let values = [r.fidelity, r.efficiency, r.cross_talk(4)].map(format_float);
        table.push_str(&format!("{},{},{}\n", r.pair.0, r.pair.1, values.join(",")));
    }
    bundle.add("fidelity.csv", table);
    let overlaps: Vec<Vec<f64>> = identity.row_iter().map(|row| row.iter().copied().collect()).collect();
    bundle.add(
        "amplitude_maps.json",
        json(&json!({
            "pairs": maps,
            "identity": { "modes": cfg.modes, "overlaps": overlaps, "min_overlap": identity.min() },
        })),
    );
    bundle.add("schema.json", schema(Command::Convert));
    Ok(bundle)
}

fn cmd_cluster(cfg: &RunConfig) -> Result<Bundle, Error> {
    let u = compose_cluster_unitary();
    let reference = cluster_unitary_reference();
    let decomposition_residual = u.matrix().iter().zip(reference.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    let s = unitary_to_symplectic(&u)?;
    let v = AdjacencyMatrix::linear_chain(4)?;
    let lossless = nullifier_variances(&cluster_state(&cfg.variances, None)?, &v)?;
    let lossy = match cfg.loss_eta {
        Some(eta) => Some(nullifier_variances(&cluster_state(&cfg.variances, Some(eta))?, &v)?),
        None => None,
    };
    let re: Vec<Vec<f64>> = u.matrix().row_iter().map(|r| r.iter().map(|z| z.re).collect()).collect();
    let im: Vec<Vec<f64>> = u.matrix().row_iter().map(|r| r.iter().map(|z| z.im).collect()).collect();
    let orth = orthogonal_mode_duan(0.05)?;
    let report = json!({
        "unitary": { "re": re, "im": im },
        "decomposition_residual": decomposition_residual,
        "unitarity_residual": unitarity_defect(u.matrix()),
        "symplectic_residual": symplectic_defect(&s),
        "variances": cfg.variances,
        "nullifiers": lossless,
        "loss_eta": cfg.loss_eta,
        "nullifiers_with_loss": lossy,
        "duan": {
            "squeezed_variance": 0.05,
            "co_mode": co_mode_duan(0.05)?,
            "orthogonal_cross_profile": orth.cross_profile,
            "orthogonal_co_profile": orth.co_profile,
        },
    });
    let mut bundle = Bundle::default();
    bundle.add("cluster_report.json", json(&report));
    bundle.add("schema.json", schema(Command::Cluster));
    Ok(bundle)
}

fn schema(command: Command) -> String {
    let files = match command {
        Command::Shape => json!({
            "driving_<i>.csv": ["t", "F"],
            "shape_report.json": "config and per-supermode convergence report",
        }),
        Command::Spectrum => json!({
            "eigenvalues.csv": ["k", "lambda", "kernel_eigenvalue"],
            "eigenvalues_constant.csv": ["k", "lambda", "kernel_eigenvalue"],
            "schmidt_modes.csv": ["t", "phi_1", "phi_2", "phi_3", "phi_4"],
            "spin_wave.csv": ["z", "B"],
            "spectrum_report.json": "leading eigenvalues, constant-driving contrast, spin wave at the exit face",
        }),
        Command::Convert => json!({
            "output_<i>_<j>.csv": ["t", "A_out", "L_j"],
            "fidelity.csv": ["i", "j", "fidelity", "efficiency", "cross_talk"],
            "amplitude_maps.json": "amplitude matrix M[j][k] per pair and spin-wave identity overlaps",
        }),
        Command::Cluster => json!({
            "cluster_report.json": "unitary, residuals, nullifier variances and baselines, Duan sums",
        }),
    };
    json(&json!({ "float_format": "scientific, 17 significant digits", "files": files }))
}
