//! Half-cycle and full-cycle memory kernels.
//!
//! The half-cycle kernel `K(t, z) = F(t) J0(2 sqrt(Q(t) z))` maps a signal
//! envelope onto the spin wave (writing) and back (backward readout). All
//! amplitudes are real: the phase rotations of the exact solution are assumed
//! compensated outside the cell. The time label of the writing kernel counts
//! `Q` from the start of the record, which in the lab corresponds to the
//! record entering the cell tail first (see [`crate::dynamics`]).

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::bessel::j0_unchecked;
use crate::driving::DrivingProfile;
use crate::error::{invalid, Result};
use crate::grid::{ModeProfile, SpaceGrid, SpinWave, TimeGrid};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelKind {
    /// Rows indexed by time, columns by position.
    Half { time: TimeGrid, space: SpaceGrid },
    /// Rows indexed by output time, columns by input time.
    Full { time: TimeGrid },
}

/// A discretized integral kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct MemoryKernel {
    kind: KernelKind,
    matrix: DMatrix<f64>,
}

impl MemoryKernel {
    pub fn kind(&self) -> &KernelKind {
        &self.kind
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.matrix
    }

    /// Wrap a full-cycle kernel matrix sampled on `time` × `time`.
    pub fn full_from_matrix(time: TimeGrid, matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.nrows() != time.len() || matrix.ncols() != time.len() {
            return Err(invalid(format!(
                "full kernel must be {n}x{n}, got {}x{}",
                matrix.nrows(),
                matrix.ncols(),
                n = time.len()
            )));
        }
        Ok(Self { kind: KernelKind::Full { time }, matrix })
    }

    fn half_grids(&self) -> Result<(TimeGrid, SpaceGrid)> {
        match self.kind {
            KernelKind::Half { time, space } => Ok((time, space)),
            KernelKind::Full { .. } => Err(invalid("expected a half-cycle kernel")),
        }
    }

    /// `A_out(t) = ∫ dt' G(t, t') A_in(t')` for a full-cycle kernel.
    pub fn apply(&self, input: &ModeProfile) -> Result<ModeProfile> {
        let KernelKind::Full { time } = self.kind else {
            return Err(invalid("expected a full-cycle kernel"));
        };
        time.ensure_same(input.grid(), "full kernel application")?;
        let weighted = weighted_vector(input.samples(), &time.weights());
        let out = &self.matrix * weighted;
        ModeProfile::new(time, out.as_slice().to_vec())
    }

    /// Relative max-norm asymmetry `max|G - Gᵀ| / max|G|`.
    pub fn asymmetry(&self) -> f64 {
        let scale = self.matrix.amax();
        if scale == 0.0 {
            return 0.0;
        }
        (&self.matrix - self.matrix.transpose()).amax() / scale
    }
}

fn weighted_vector(samples: &[f64], weights: &[f64]) -> nalgebra::DVector<f64> {
    nalgebra::DVector::from_iterator(samples.len(), samples.iter().zip(weights).map(|(a, w)| a * w))
}

/// `K[t][z] = F(t) J0(2 sqrt(Q(t) z))`.
pub fn half_kernel(driving: &DrivingProfile, space: &SpaceGrid) -> Result<MemoryKernel> {
    let time = *driving.grid();
    let z = space.points();
    let rows: Vec<Vec<f64>> = driving
        .samples()
        .par_iter()
        .zip(driving.q().par_iter())
        .map(|(&f, &q)| z.iter().map(|&z| f * j0_unchecked(2.0 * (q * z).sqrt())).collect())
        .collect();
    let matrix = DMatrix::from_fn(time.len(), space.len(), |i, j| rows[i][j]);
    Ok(MemoryKernel { kind: KernelKind::Half { time, space: *space }, matrix })
}

/// Writing: `B(z) = ∫ dt A_in(t) K(t, z)`.
pub fn write(input: &ModeProfile, kernel: &MemoryKernel) -> Result<SpinWave> {
    let (time, space) = kernel.half_grids()?;
    time.ensure_same(input.grid(), "write")?;
    let weighted = weighted_vector(input.samples(), &time.weights());
    let b = kernel.matrix.tr_mul(&weighted);
    SpinWave::new(space, b.as_slice().to_vec())
}

/// Backward readout: `A_out(t) = ∫ dz B(z) K(t, z)`.
pub fn read(spin_wave: &SpinWave, kernel: &MemoryKernel) -> Result<ModeProfile> {
    let (time, space) = kernel.half_grids()?;
    space.ensure_same(spin_wave.grid(), "read")?;
    let weighted = weighted_vector(spin_wave.samples(), &space.weights());
    let a = &kernel.matrix * weighted;
    ModeProfile::new(time, a.as_slice().to_vec())
}

/// Full-cycle kernel `G(t, t') = ∫ dz K_read(t, z) K_write(t', z)`.
pub fn full_kernel(write_driving: &DrivingProfile, read_driving: &DrivingProfile, space: &SpaceGrid) -> Result<MemoryKernel> {
    write_driving.grid().ensure_same(read_driving.grid(), "full kernel")?;
    let kw = half_kernel(write_driving, space)?;
    let kr = if write_driving == read_driving { kw.clone() } else { half_kernel(read_driving, space)? };
    full_from_halves(&kw, &kr)
}

/// Compose a writing and a readout half kernel into a full-cycle kernel.
pub fn full_from_halves(write_kernel: &MemoryKernel, read_kernel: &MemoryKernel) -> Result<MemoryKernel> {
    let (tw, sw) = write_kernel.half_grids()?;
    let (tr, sr) = read_kernel.half_grids()?;
    tw.ensure_same(&tr, "full kernel time grids")?;
    sw.ensure_same(&sr, "full kernel space grids")?;
    let w = nalgebra::DVector::from_vec(sw.weights());
    let mut weighted_write = write_kernel.matrix.clone();
    for (mut col, wz) in weighted_write.column_iter_mut().zip(w.iter()) {
        col *= *wz;
    }
    let g = &read_kernel.matrix * weighted_write.transpose();
    Ok(MemoryKernel { kind: KernelKind::Full { time: tw }, matrix: g })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{hermite_mode, make_space_grid, make_time_grid, overlap, HermiteBasisConfig};

    fn grids(n: usize, length: f64) -> (TimeGrid, SpaceGrid) {
        (make_time_grid(9.0, n).unwrap(), make_space_grid(length, n).unwrap())
    }

    #[test]
    fn unit_driving_kernel_is_bessel_of_tz() {
        let (t, z) = grids(33, 10.0);
        let k = half_kernel(&DrivingProfile::constant(t), &z).unwrap();
        for i in [0, 5, 17, 32] {
            for j in [0, 3, 20, 32] {
                let expect = libm::j0(2.0 * (t.point(i) * z.point(j)).sqrt());
                assert!((k.matrix()[(i, j)] - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn kernel_edges() {
        let (t, z) = grids(65, 10.0);
        let d = DrivingProfile::new(t, t.points().iter().map(|x| 0.3 + 0.1 * x.sin()).collect()).unwrap();
        let k = half_kernel(&d, &z).unwrap();
        for i in 0..65 {
            assert_eq!(k.matrix()[(i, 0)], d.samples()[i]);
        }
        for j in 0..65 {
            assert_eq!(k.matrix()[(0, j)], d.samples()[0]);
        }
    }

    #[test]
    fn write_and_read_are_linear() {
        let (t, z) = grids(129, 10.0);
        let d = DrivingProfile::new(t, t.points().iter().map(|x| 0.2 + 0.05 * x).collect()).unwrap();
        let k = half_kernel(&d, &z).unwrap();
        let b0 = write(&ModeProfile::zeros(t), &k).unwrap();
        assert!(b0.samples().iter().all(|&v| v == 0.0));
        assert!(read(&SpinWave::zeros(z), &k).unwrap().samples().iter().all(|&v| v == 0.0));

        let cfg = HermiteBasisConfig::for_window(9.0);
        let a = hermite_mode(1, &t, &cfg).unwrap();
        let b = hermite_mode(2, &t, &cfg).unwrap();
        let wa = write(&a, &k).unwrap();
        let w3a = write(&a.scaled(3.0), &k).unwrap();
        for (x, y) in wa.samples().iter().zip(w3a.samples()) {
            assert!((3.0 * x - y).abs() < 1e-12);
        }
        let sum = ModeProfile::new(t, a.samples().iter().zip(b.samples()).map(|(x, y)| x - 2.0 * y).collect()).unwrap();
        let wb = write(&b, &k).unwrap();
        let ws = write(&sum, &k).unwrap();
        for i in 0..z.len() {
            assert!((ws.samples()[i] - (wa.samples()[i] - 2.0 * wb.samples()[i])).abs() < 1e-12);
        }
        let ra = read(&wa, &k).unwrap();
        let rb = read(&wa.scaled(-0.5), &k).unwrap();
        for (x, y) in ra.samples().iter().zip(rb.samples()) {
            assert!((-0.5 * x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn kind_mismatch_rejected() {
        let (t, z) = grids(33, 10.0);
        let d = DrivingProfile::constant(t);
        let full = full_kernel(&d, &d, &z).unwrap();
        assert!(write(&ModeProfile::zeros(t), &full).is_err());
        assert!(read(&SpinWave::zeros(z), &full).is_err());
        let half = half_kernel(&d, &z).unwrap();
        assert!(half.apply(&ModeProfile::zeros(t)).is_err());
        let other = make_time_grid(9.0, 65).unwrap();
        assert!(write(&ModeProfile::zeros(other), &half).is_err());
        assert!(full_kernel(&d, &DrivingProfile::constant(other), &z).is_err());
    }

    #[test]
    fn equal_drivings_give_symmetric_full_kernel() {
        let (t, z) = grids(257, 10.0);
        let d = DrivingProfile::new(t, t.points().iter().map(|x| 0.4 * (-(x - 4.5f64).powi(2) / 4.0).exp()).collect()).unwrap();
        let g = full_kernel(&d, &d, &z).unwrap();
        assert!(g.asymmetry() <= 1e-12, "{}", g.asymmetry());
    }

    #[test]
    fn full_kernel_equals_write_then_read() {
        let (t, z) = grids(257, 10.0);
        let dw = DrivingProfile::new(t, t.points().iter().map(|x| 0.3 + 0.02 * x).collect()).unwrap();
        let dr = DrivingProfile::new(t, t.points().iter().map(|x| 0.5 - 0.03 * x).collect()).unwrap();
        let a = hermite_mode(3, &t, &HermiteBasisConfig::for_window(9.0)).unwrap();
        let g = full_kernel(&dw, &dr, &z).unwrap();
        let direct = g.apply(&a).unwrap();
        let two_step = read(&write(&a, &half_kernel(&dw, &z).unwrap()).unwrap(), &half_kernel(&dr, &z).unwrap()).unwrap();
        for (x, y) in direct.samples().iter().zip(two_step.samples()) {
            assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn short_cell_kernel_scales_with_length() {
        let t = make_time_grid(9.0, 65).unwrap();
        let d = DrivingProfile::new(t, t.points().iter().map(|x| 0.5 + 0.1 * x).collect()).unwrap();
        for length in [1e-6, 2e-6] {
            let z = make_space_grid(length, 17).unwrap();
            let g = full_kernel(&d, &d, &z).unwrap();
            for i in [0, 20, 64] {
                for j in [0, 33, 64] {
                    let expect = length * d.samples()[i] * d.samples()[j];
                    assert!((g.matrix()[(i, j)] / expect - 1.0).abs() < 1e-3);
                }
            }
        }
    }

    #[test]
    fn passive_for_moderate_driving() {
        let (t, z) = grids(513, 10.0);
        let cfg = HermiteBasisConfig::for_window(9.0);
        for scale in [0.1, 0.3, 0.6] {
            let d = DrivingProfile::new(t, vec![scale; 513]).unwrap();
            let k = half_kernel(&d, &z).unwrap();
            for mode in 1..=4 {
                let a = hermite_mode(mode, &t, &cfg).unwrap();
                let b = write(&a, &k).unwrap();
                assert!(b.norm_squared() <= 1.0 + 1e-6);
                let out = read(&b, &k).unwrap();
                assert!(out.norm() <= b.norm() + 1e-6);
                assert!(overlap(&out, &a).unwrap().abs() <= 1.0);
            }
        }
    }
}
