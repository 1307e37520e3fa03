//! Acceptance criteria. Each test prints one `criterion N: PASS|FAIL` line
//! before asserting.

use std::io::Write;
use std::time::Instant;

use qmshape::converter::response_identity;
use qmshape::driving::DrivingProfile;
use qmshape::dynamics::{integrate_dynamics, Direction};
use qmshape::gaussian::{
    cluster_state, cluster_unitary_reference, co_mode_duan, compose_cluster_unitary, nullifier_variances, orthogonal_mode_duan,
    symplectic_defect, unitarity_defect, unitary_to_symplectic, AdjacencyMatrix,
};
use qmshape::grid::{hermite_basis, make_space_grid, make_time_grid, HermiteBasisConfig, ModeProfile, SpaceGrid};
use qmshape::kernel::{full_kernel, half_kernel, read, write};
use qmshape::schmidt::decompose;
use qmshape::shaper::{bracket_values, series_coefficients, shape_driving, BracketMode, ShaperConfig};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

const T_W: f64 = 9.0;
const L_PHYS: f64 = 10.0;
const L_SEARCH: f64 = 5.0;
const N: usize = 513;

/// Written to the process stdout directly so the line survives output capture.
fn report(n: u32, pass: bool, detail: String) {
    let line = format!("criterion {n}: {} {detail}\n", if pass { "PASS" } else { "FAIL" });
    let _ = std::io::stdout().lock().write_all(line.as_bytes());
    assert!(pass, "criterion {n} failed: {detail}");
}

fn setup(n: usize) -> (Vec<ModeProfile>, SpaceGrid) {
    let t = make_time_grid(T_W, n).unwrap();
    let basis = hermite_basis(&t, &HermiteBasisConfig::for_window(T_W)).unwrap();
    (basis, make_space_grid(L_PHYS, n).unwrap())
}

fn shaped(mode: usize, target: &ModeProfile, l_search: f64, n_z: usize) -> DrivingProfile {
    let cfg = ShaperConfig { l_search, n_z, ..ShaperConfig::new(mode, L_PHYS, T_W) };
    shape_driving(&cfg, target).unwrap().driving
}

fn overlap(a: &ModeProfile, b: &ModeProfile) -> f64 {
    qmshape::grid::overlap(a, b).unwrap()
}

#[test]
fn criterion_01_restoration_fidelity() {
    let start = Instant::now();
    let (basis, z) = setup(N);
    let mut fidelities = Vec::new();
    for i in 1..=4 {
        let d = shaped(i, &basis[i - 1], L_SEARCH, N);
        let k = half_kernel(&d, &z).unwrap();
        let out = read(&write(&basis[i - 1], &k).unwrap(), &k).unwrap();
        fidelities.push(overlap(&out, &basis[i - 1]));
    }
    let elapsed = start.elapsed().as_secs_f64();
    let pass = fidelities.iter().all(|f| (f - 0.953).abs() <= 0.02) && elapsed < 60.0;
    report(1, pass, format!("fidelities {fidelities:.4?} in {elapsed:.1} s (target 0.953 ± 0.02, < 60 s)"));
}

#[test]
fn criterion_02_leakage_without_length_correction() {
    let (basis, z) = setup(N);
    let cfg = ShaperConfig { l_search: L_PHYS, ..ShaperConfig::new(1, L_PHYS, T_W) };
    let r = shape_driving(&cfg, &basis[0]).unwrap();
    let direct = qmshape::shaper::leakage(&basis[0], &r.driving, &z).unwrap();
    let pass = (r.leakage - 0.09).abs() <= 0.03 && (direct - r.leakage).abs() < 1e-12;
    report(2, pass, format!("leakage {:.4} (target 0.09 ± 0.03)", r.leakage));
}

#[test]
fn criterion_03_shaper_convergence() {
    let (basis, _) = setup(N);
    let mut residuals = Vec::new();
    for i in 1..=4 {
        let cfg = ShaperConfig { l_search: L_SEARCH, ..ShaperConfig::new(i, L_PHYS, T_W) };
        let r = shape_driving(&cfg, &basis[i - 1]).unwrap();
        residuals.push(r.residual_at(9).unwrap());
    }
    let pass = residuals.iter().all(|&r| r <= 0.05);
    report(
        3,
        pass,
        format!("residual by step 9 {:?} (target ≤ 0.05)", residuals.iter().map(|r| format!("{r:.2e}")).collect::<Vec<_>>()),
    );
}

fn double_sum(k: usize, lt: &BigRational) -> f64 {
    let fact = |n: usize| (1..=n).fold(BigInt::one(), |a, m| a * BigInt::from(m));
    let mut inner = BigRational::zero();
    for m in 0..=k {
        let d = fact(k - m) * fact(m);
        inner += BigRational::new(BigInt::one(), &d * &d);
    }
    let pow = (0..=k).fold(BigRational::one(), |a, _| a * lt);
    (inner * pow / BigRational::from_integer(BigInt::from(k + 1))).to_f64().unwrap()
}

#[test]
fn criterion_04_coefficient_identity() {
    let mut worst_coeff = 0.0f64;
    for &(l, t) in &[(L_SEARCH, T_W), (1.0, 1.0), (0.3, 9.0)] {
        let lt = BigRational::from_float(l * t).unwrap();
        let c = series_coefficients(l, t, 20).unwrap();
        for (k, ck) in c.iter().enumerate() {
            worst_coeff = worst_coeff.max((ck / double_sum(k, &lt) - 1.0).abs());
        }
    }

    // dual evaluation along the iterates of runs where the series is enabled
    let (basis, _) = setup(N);
    let mut worst_bracket = 0.0f64;
    for &l_search in &[1.0, 2.0, 3.0] {
        let series = ShaperConfig { l_search, bracket: BracketMode::Series, ..ShaperConfig::new(1, 2.0 * l_search, T_W) };
        let quad = ShaperConfig { bracket: BracketMode::Quadrature, ..series.clone() };
        let mut d = DrivingProfile::from_profile(basis[0].clone()).unwrap();
        for _ in 0..6 {
            let a = bracket_values(&d, &series).unwrap();
            let b = bracket_values(&d, &quad).unwrap();
            for (x, y) in a.iter().zip(&b) {
                worst_bracket = worst_bracket.max((x - y).abs());
            }
            d = qmshape::shaper::iteration_step(&d, &basis[0], &quad).unwrap();
        }
    }
    let pass = worst_coeff <= 1e-12 && worst_bracket <= 1e-6;
    report(4, pass, format!("C_k relative error {worst_coeff:.1e} (≤ 1e-12), bracket gap {worst_bracket:.1e} (≤ 1e-6)"));
}

fn relative_l2(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    let den: f64 = b.iter().map(|y| y * y).sum();
    (num / den).sqrt()
}

#[test]
fn criterion_05_oracle_equivalence() {
    let n = 1024;
    let (basis, z) = setup(n);
    let t = *basis[0].grid();
    let drivings = [("shaped", shaped(1, &basis[0], L_SEARCH, n)), ("constant", DrivingProfile::constant(t))];
    let mut worst = 0.0f64;
    let mut details = Vec::new();
    for (name, d) in &drivings {
        let k = half_kernel(d, &z).unwrap();
        let b_kernel = write(&basis[0], &k).unwrap();
        let b_oracle = integrate_dynamics(&basis[0], None, d, &z, Direction::Write).unwrap().spin_wave;
        let write_err = relative_l2(b_oracle.samples(), b_kernel.samples());
        let a_kernel = read(&b_kernel, &k).unwrap();
        let a_oracle = integrate_dynamics(&ModeProfile::zeros(t), Some(&b_kernel), d, &z, Direction::Read).unwrap().exit_field;
        let read_err = relative_l2(a_oracle.samples(), a_kernel.samples());
        worst = worst.max(write_err).max(read_err);
        details.push(format!("{name}: write {write_err:.1e}, read {read_err:.1e}"));
    }
    report(5, worst <= 0.02, format!("{} (≤ 0.02 at 1024²)", details.join("; ")));
}

#[test]
fn criterion_06_single_mode_spectrum() {
    let (basis, z) = setup(N);
    let d = shaped(1, &basis[0], L_SEARCH, N);
    let s = decompose(&full_kernel(&d, &d, &z).unwrap()).unwrap();
    let c = DrivingProfile::constant(*basis[0].grid());
    let flat = decompose(&full_kernel(&c, &c, &z).unwrap()).unwrap();
    let ratio = flat.eigenvalues[1] / flat.eigenvalues[0];
    let (l1, l2) = (s.eigenvalues[0], s.eigenvalues[1]);
    let pass = l1 >= 0.90 && l2 <= 0.05 && ratio > 0.2;
    report(6, pass, format!("shaped λ1 {l1:.4} (≥ 0.90), λ2 {l2:.4} (≤ 0.05); constant λ2/λ1 {ratio:.4} (> 0.2)"));
}

#[test]
fn criterion_07_response_identity() {
    let (basis, z) = setup(N);
    let drivings: Vec<_> = (1..=4).map(|i| shaped(i, &basis[i - 1], L_SEARCH, N)).collect();
    let m = response_identity(&drivings, &basis[..4], &z).unwrap();
    let worst = m.min();
    report(7, worst >= 0.98, format!("smallest pairwise overlap {worst:.6} (≥ 0.98)"));
}

#[test]
fn criterion_08_unitary_reconstruction() {
    let u = compose_cluster_unitary();
    let reference = cluster_unitary_reference();
    let gap = u.matrix().iter().zip(reference.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    let unitarity = unitarity_defect(u.matrix());
    let symplectic = symplectic_defect(&unitary_to_symplectic(&u).unwrap());
    let pass = gap <= 1e-12 && unitarity <= 1e-12 && symplectic <= 1e-10;
    report(8, pass, format!("|U - U_ref| {gap:.1e}, |U†U - I| {unitarity:.1e}, |SΩSᵀ - Ω| {symplectic:.1e}"));
}

#[test]
fn criterion_09_cluster_certification() {
    let v = AdjacencyMatrix::linear_chain(4).unwrap();
    let measured = nullifier_variances(&cluster_state(&[0.10, 0.12, 0.14, 0.18], None).unwrap(), &v).unwrap();
    let ideal = nullifier_variances(&cluster_state(&[1e-6; 4], None).unwrap(), &v).unwrap();
    let lossy = nullifier_variances(&cluster_state(&[0.10, 0.12, 0.14, 0.18], Some(0.953)).unwrap(), &v).unwrap();
    let baselines_ok = measured.baselines == [0.5, 0.75, 0.75, 0.5];
    let ideal_ok = ideal.variances.iter().all(|&x| x <= 1e-4);
    let pass = baselines_ok && measured.all_below() && ideal_ok && lossy.all_below();
    report(
        9,
        pass,
        format!(
            "reference inputs {:.3?}, ideal max {:.1e}, with loss {:.3?} vs baselines {:?}",
            measured.variances,
            ideal.variances.iter().copied().fold(0.0, f64::max),
            lossy.variances,
            measured.baselines
        ),
    );
}

#[test]
fn criterion_10_duan_no_go() {
    let orth = orthogonal_mode_duan(0.05).unwrap();
    let strong = orthogonal_mode_duan(1e-4).unwrap();
    let co = co_mode_duan(0.05).unwrap();
    let pass = orth.cross_profile >= 0.5 && strong.cross_profile >= 0.5 && co < 0.5;
    report(10, pass, format!("orthogonal D {:.4} (≥ 1/2), co-mode D {co:.4} (< 1/2)", orth.cross_profile));
}
