//! Schmidt decomposition of the full-cycle kernel and the spatial response
//! functions of its time modes.
//!
//! The symmetric kernel is discretized with trapezoid weights `w`, so the
//! eigenproblem solved is `W^½ G W^½ v = μ v`. Each `μ_k` is the kernel
//! eigenvalue `√λ_k`; the time mode is `φ_k = W^-½ v_k`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{invalid, Error, Result};
use crate::grid::{ModeProfile, SpinWave, TimeGrid};
use crate::kernel::{KernelKind, MemoryKernel};

/// Kernel eigenvalues below this are treated as a quadrature inconsistency.
pub const NEGATIVE_EIGENVALUE_LIMIT: f64 = -1e-6;

/// Raw response norms below this are degenerate.
pub const DEGENERATE_RESPONSE_NORM: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct SchmidtSpectrum {
    /// Kernel eigenvalues `√λ_k`, descending.
    pub kernel_eigenvalues: Vec<f64>,
    /// Efficiencies `λ_k`, carrying the sign of roundoff-level negative
    /// kernel eigenvalues.
    pub eigenvalues: Vec<f64>,
    pub modes: Vec<ModeProfile>,
    /// Spatial response functions for the leading modes, once attached.
    pub responses: Vec<SpinWave>,
}

impl SchmidtSpectrum {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn time_grid(&self) -> &TimeGrid {
        self.modes[0].grid()
    }

    /// `Σ_k √λ_k φ_k(t) φ_k(t')` over the first `terms` modes.
    pub fn reconstruct(&self, terms: usize) -> DMatrix<f64> {
        let n = self.time_grid().len();
        let mut g = DMatrix::zeros(n, n);
        for (mu, phi) in self.kernel_eigenvalues.iter().zip(&self.modes).take(terms) {
            let v = DVector::from_column_slice(phi.samples());
            g += *mu * &v * v.transpose();
        }
        g
    }

    /// Attach response functions `g_k` of `writer` for every mode with
    /// `λ_k > min_lambda`.
    pub fn attach_responses(&mut self, writer: &MemoryKernel, min_lambda: f64) -> Result<()> {
        let mut out = Vec::new();
        for (phi, &lambda) in self.modes.iter().zip(&self.eigenvalues) {
            if lambda <= min_lambda {
                break;
            }
            out.push(response_function(phi, writer)?.1);
        }
        self.responses = out;
        Ok(())
    }
}

/// Eigendecomposition of a full-cycle kernel.
pub fn decompose(kernel: &MemoryKernel) -> Result<SchmidtSpectrum> {
    let KernelKind::Full { time } = *kernel.kind() else {
        return Err(invalid("Schmidt decomposition needs a full-cycle kernel"));
    };
    let g = kernel.matrix();
    if !g.is_square() {
        return Err(invalid(format!("kernel is {}x{}, not square", g.nrows(), g.ncols())));
    }
    let n = g.nrows();
    let root_w: Vec<f64> = time.weights().iter().map(|w| w.sqrt()).collect();
    let sym = DMatrix::from_fn(n, n, |i, j| 0.5 * (g[(i, j)] + g[(j, i)]) * root_w[i] * root_w[j]);
    let eig = SymmetricEigen::new(sym);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let mut kernel_eigenvalues = Vec::with_capacity(n);
    let mut modes = Vec::with_capacity(n);
    for &k in &order {
        let mu = eig.eigenvalues[k];
        if mu < NEGATIVE_EIGENVALUE_LIMIT {
            return Err(Error::Spectrum(format!("kernel eigenvalue {mu} is negative")));
        }
        let v = eig.eigenvectors.column(k);
        let mut samples: Vec<f64> = v.iter().zip(&root_w).map(|(x, r)| x / r).collect();
        let peak = samples.iter().copied().fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
        if peak < 0.0 {
            samples.iter_mut().for_each(|x| *x = -*x);
        }
        kernel_eigenvalues.push(mu);
        modes.push(ModeProfile::new(time, samples)?.with_label(modes.len() + 1));
    }
    let eigenvalues = kernel_eigenvalues.iter().map(|mu| mu * mu.abs()).collect();
    Ok(SchmidtSpectrum { kernel_eigenvalues, eigenvalues, modes, responses: Vec::new() })
}

/// `λ^¼ g(z) = ∫ dt φ(t) K(t, z)`; returns the norm `λ^¼` and unit `g`.
pub fn response_function(phi: &ModeProfile, writer: &MemoryKernel) -> Result<(f64, SpinWave)> {
    let raw = crate::kernel::write(phi, writer)?;
    let norm = raw.norm();
    if !(norm >= DEGENERATE_RESPONSE_NORM) {
        return Err(Error::DegenerateResponse(format!("response norm {norm:e}")));
    }
    Ok((norm, raw.scaled(1.0 / norm)))
}

/// Half kernel rebuilt as `Σ_k λ_k^¼ φ_k(t) g_k(z)` over the attached responses.
pub fn expand_half_kernel(spectrum: &SchmidtSpectrum) -> Result<DMatrix<f64>> {
    let Some(first) = spectrum.responses.first() else {
        return Err(invalid("no response functions attached"));
    };
    let (nt, nz) = (spectrum.time_grid().len(), first.grid().len());
    let mut k = DMatrix::zeros(nt, nz);
    for ((g, phi), mu) in spectrum.responses.iter().zip(&spectrum.modes).zip(&spectrum.kernel_eigenvalues) {
        let col = DVector::from_column_slice(phi.samples());
        let row = DVector::from_column_slice(g.samples());
        k += mu.sqrt() * col * row.transpose();
    }
    Ok(k)
}
