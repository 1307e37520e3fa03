//! Shape conversion: write with a driving shaped for one supermode, read with
//! a driving shaped for another.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::driving::DrivingProfile;
use crate::error::{invalid, Error, Result};
use crate::grid::{overlap, ModeProfile, SpaceGrid, SpinWave};
use crate::kernel::{full_from_halves, half_kernel, read, write, MemoryKernel};
use crate::schmidt::DEGENERATE_RESPONSE_NORM;

#[derive(Debug, Clone, PartialEq)]
pub struct ConversionResult {
    /// Output for unit input in the designated input mode.
    pub output: ModeProfile,
    /// `amplitudes[(j, k)]`: overlap with basis mode `j + 1` of the output for
    /// unit input in basis mode `k + 1`.
    pub amplitudes: DMatrix<f64>,
    /// Designated pair `(i, j)`, 1-based: input supermode, output profile.
    pub pair: (usize, usize),
    pub fidelity: f64,
    pub efficiency: f64,
    /// Set when either driving was not shaped for a supermode.
    pub multimode: bool,
}

impl ConversionResult {
    /// `M[j][k]` with 1-based indices.
    pub fn entry(&self, j: usize, k: usize) -> f64 {
        self.amplitudes[(j - 1, k - 1)]
    }

    /// Largest `|M[j][k]|` over `k ≤ k_max` excluding the designated entry.
    pub fn cross_talk(&self, k_max: usize) -> f64 {
        let (i, j) = self.pair;
        let mut worst = 0.0f64;
        for k in 1..=k_max.min(self.amplitudes.ncols()) {
            for jj in 1..=self.amplitudes.nrows() {
                if (jj, k) != (j, i) {
                    worst = worst.max(self.entry(jj, k).abs());
                }
            }
        }
        worst
    }
}

fn check_basis(basis: &[ModeProfile], write_driving: &DrivingProfile) -> Result<()> {
    if basis.is_empty() {
        return Err(invalid("empty conversion basis"));
    }
    for mode in basis {
        write_driving.grid().ensure_same(mode.grid(), "conversion basis")?;
    }
    Ok(())
}

/// Propagate each basis mode through write-then-read and project onto the
/// basis. The designated pair is taken from the drivings' `shaped_for`
/// labels, falling back to mode 1.
pub fn convert(
    write_driving: &DrivingProfile,
    read_driving: &DrivingProfile,
    basis: &[ModeProfile],
    space: &SpaceGrid,
) -> Result<ConversionResult> {
    check_basis(basis, write_driving)?;
    write_driving.grid().ensure_same(read_driving.grid(), "conversion drivings")?;
    let i = write_driving.shaped_for.unwrap_or(1);
    let j = read_driving.shaped_for.unwrap_or(1);
    let n = basis.len();
    if i > n || j > n {
        return Err(invalid(format!("pair ({i}, {j}) outside a basis of {n} modes")));
    }
    let kw = half_kernel(write_driving, space)?;
    let kr = half_kernel(read_driving, space)?;
    let outputs = basis.par_iter().map(|mode| transfer(mode, &kw, &kr)).collect::<Result<Vec<_>>>()?;

    let mut amplitudes = DMatrix::zeros(n, n);
    for (k, out) in outputs.iter().enumerate() {
        for (jj, mode) in basis.iter().enumerate() {
            amplitudes[(jj, k)] = overlap(out, mode)?;
        }
    }
    let output = outputs[i - 1].clone();
    Ok(ConversionResult {
        fidelity: amplitudes[(j - 1, i - 1)],
        efficiency: output.norm(),
        output,
        amplitudes,
        pair: (i, j),
        multimode: write_driving.shaped_for.is_none() || read_driving.shaped_for.is_none(),
    })
}

/// `read(write(A))` through the given half kernels.
pub fn transfer(input: &ModeProfile, write_kernel: &MemoryKernel, read_kernel: &MemoryKernel) -> Result<ModeProfile> {
    read(&write(input, write_kernel)?, read_kernel)
}

/// Unit spin wave written by each target through its own driving.
pub fn written_spin_waves(drivings: &[DrivingProfile], targets: &[ModeProfile], space: &SpaceGrid) -> Result<Vec<SpinWave>> {
    if drivings.len() != targets.len() || drivings.is_empty() {
        return Err(invalid("need one target per driving"));
    }
    drivings
        .par_iter()
        .zip(targets)
        .map(|(d, l)| {
            let b = write(l, &half_kernel(d, space)?)?;
            let norm = b.norm();
            if !(norm >= DEGENERATE_RESPONSE_NORM) {
                return Err(Error::DegenerateResponse(format!("written spin wave norm {norm:e}")));
            }
            Ok(b.scaled(1.0 / norm))
        })
        .collect()
}

/// Pairwise overlaps of the normalized spin waves written by `L_i` through
/// `F_i`.
pub fn response_identity(drivings: &[DrivingProfile], targets: &[ModeProfile], space: &SpaceGrid) -> Result<DMatrix<f64>> {
    let waves = written_spin_waves(drivings, targets, space)?;
    let n = waves.len();
    let mut m = DMatrix::zeros(n, n);
    for a in 0..n {
        for b in a..n {
            let v = overlap(&waves[a], &waves[b])?;
            m[(a, b)] = v;
            m[(b, a)] = v;
        }
    }
    Ok(m)
}

/// Relative max-norm distance of the composed kernel from the separable form
/// `(∫ g_i g_j dz) L_j(t) L_i(t')`, with `g` the unnormalized written waves.
pub fn rank_one_defect(
    write_driving: &DrivingProfile,
    read_driving: &DrivingProfile,
    input: &ModeProfile,
    output: &ModeProfile,
    space: &SpaceGrid,
) -> Result<f64> {
    let kw = half_kernel(write_driving, space)?;
    let kr = half_kernel(read_driving, space)?;
    let g = full_from_halves(&kw, &kr)?;
    let gi = write(input, &kw)?;
    let gj = write(output, &kr)?;
    let c = overlap(&gi, &gj)?;
    let (lo, li) = (output.samples(), input.samples());
    let model = DMatrix::from_fn(lo.len(), li.len(), |t, s| c * lo[t] * li[s]);
    let scale = model.amax();
    if scale == 0.0 {
        return Err(Error::DegenerateResponse("separable model vanishes".into()));
    }
    Ok((g.matrix() - model).amax() / scale)
}
