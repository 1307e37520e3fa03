//! Fixed-point design of a driving envelope that writes a single signal mode.
//!
//! Starting from `F⁽⁰⁾ = L_i`, each step sets
//!
//! ```text
//! F_new(t) = L_i(t) / sqrt( ∫_0^L dz J0²(2 sqrt(z Q_prev(t))) )
//! ```
//!
//! which makes the writing kernel separable, `K(t, z) ≈ L_i(t) g(z)`, when the
//! iteration settles. The bracket is evaluated either by Gauss-Legendre
//! quadrature in `z` or by the alternating power series in `Q/T_W` with
//! coefficients `C_k`. The iterates are not rescaled between steps: the
//! bracket fixes the driving's amplitude, and rescaling it changes which
//! kernel the iteration converges to.

use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;
use serde::{Deserialize, Serialize};

use crate::bessel::j0_unchecked;
use crate::driving::DrivingProfile;
use crate::error::{invalid, Error, Result};
use crate::grid::{overlap, ModeProfile, SpaceGrid};
use crate::kernel::{full_kernel, half_kernel, write};
use crate::schmidt::decompose;

/// Above this value of `L·T_W` the automatic mode abandons the series.
pub const SERIES_LIMIT: f64 = 30.0;

/// Largest acceptable ratio of the biggest series term to the sum.
const SERIES_GROWTH_LIMIT: f64 = 1e9;

const GL_DEGREE: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BracketMode {
    Series,
    Quadrature,
    /// Series when `L·T_W ≤ 30`, quadrature otherwise.
    Auto,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ShaperConfig {
    /// Supermode index the driving is shaped for (1-based).
    pub target: usize,
    /// Cell length used inside the iteration.
    pub l_search: f64,
    /// Physical cell length, used for the report.
    pub l_phys: f64,
    pub t_w: f64,
    pub max_steps: usize,
    /// Sup-norm relative change at which the iteration stops.
    pub tol: f64,
    pub bracket: BracketMode,
    pub series_k_max: usize,
    /// Space samples for the report's kernels.
    pub n_z: usize,
}

impl Default for ShaperConfig {
    fn default() -> Self {
        Self::new(1, 10.0, 9.0)
    }
}

impl ShaperConfig {
    /// Defaults with the length correction `L_search = L_phys / 2`.
    pub fn new(target: usize, l_phys: f64, t_w: f64) -> Self {
        Self {
            target,
            l_search: l_phys / 2.0,
            l_phys,
            t_w,
            max_steps: 15,
            tol: 1e-3,
            bracket: BracketMode::Auto,
            series_k_max: 400,
            n_z: 513,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.target == 0 {
            return Err(invalid("target supermode index starts at 1"));
        }
        for (name, v) in [("l_search", self.l_search), ("l_phys", self.l_phys), ("t_w", self.t_w)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.tol.is_finite() && self.tol >= 0.0) {
            return Err(invalid(format!("tol must be non-negative, got {}", self.tol)));
        }
        if self.n_z < 2 {
            return Err(invalid("n_z must be at least 2"));
        }
        Ok(())
    }

    fn uses_series(&self) -> bool {
        match self.bracket {
            BracketMode::Series => true,
            BracketMode::Quadrature => false,
            BracketMode::Auto => self.l_search * self.t_w <= SERIES_LIMIT,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShaperReport {
    pub driving: DrivingProfile,
    pub steps: usize,
    /// Sup-norm relative change of the envelope at each step.
    pub residuals: Vec<f64>,
    /// `max|G - L_i L_iᵀ| / max|L_i L_iᵀ|` at the physical length.
    pub kernel_discrepancy: f64,
    /// `|⟨φ_1, L_i⟩|` for the leading Schmidt mode at the physical length.
    pub leading_mode_overlap: f64,
    /// Kernel eigenvalues `√λ_k` at the physical length, leading few.
    pub kernel_eigenvalues: Vec<f64>,
    pub leakage: f64,
}

impl ShaperReport {
    /// Residual after step `step` (1-based), or the last one if the run
    /// stopped earlier.
    pub fn residual_at(&self, step: usize) -> Option<f64> {
        if self.residuals.is_empty() {
            return None;
        }
        Some(self.residuals[step.min(self.residuals.len()).max(1) - 1])
    }
}

fn ln_coefficient(k: usize, lt: f64) -> f64 {
    let kf = k as f64;
    kf * 4f64.ln() + libm::lgamma(kf + 0.5) - 0.5 * std::f64::consts::PI.ln() - 3.0 * libm::lgamma(kf + 1.0)
        + (kf + 1.0) * lt.ln()
        - (kf + 1.0).ln()
}

/// `C_k = 4^k Γ(k+½) / (√π (k!)³) · (L T_W)^{k+1} / (k+1)` for `k = 0..=k_max`.
pub fn series_coefficients(length: f64, t_w: f64, k_max: usize) -> Result<Vec<f64>> {
    if !(length > 0.0 && t_w > 0.0) {
        return Err(invalid("length and T_W must be positive"));
    }
    let lt = length * t_w;
    (0..=k_max)
        .map(|k| {
            let c = ln_coefficient(k, lt).exp();
            if c.is_finite() {
                Ok(c)
            } else {
                Err(Error::Range(format!("C_{k} overflows for L·T_W = {lt}")))
            }
        })
        .collect()
}

/// `Σ_k (-1)^k C_k (Q/T_W)^k`, which equals `T_W ∫_0^L J0²(2√(zQ)) dz`.
fn series_bracket(q: f64, length: f64, t_w: f64, k_max: usize, t: f64) -> Result<f64> {
    let lt = length * t_w;
    let ln_a = (q / t_w).ln();
    let mut sum = lt;
    let mut biggest = lt;
    let mut converged = q == 0.0;
    if !converged {
        for k in 1..=k_max {
            let term = (ln_coefficient(k, lt) + k as f64 * ln_a).exp();
            biggest = biggest.max(term);
            sum += if k % 2 == 0 { term } else { -term };
            if term <= 1e-17 * biggest {
                converged = true;
                break;
            }
        }
    }
    if !converged {
        return Err(Error::Range(format!("series bracket not converged in {k_max} terms at t = {t}")));
    }
    if !(sum > 0.0) || biggest > SERIES_GROWTH_LIMIT * sum {
        return Err(Error::NumericalCancellation { t, bracket: sum / t_w });
    }
    Ok(sum / t_w)
}

/// `∫_0^L J0²(2√(zQ)) dz` by composite Gauss-Legendre quadrature.
fn quadrature_bracket(rule: &GaussLegendre, q: f64, length: f64) -> f64 {
    if q == 0.0 {
        return length;
    }
    // one panel per unit of the Bessel argument keeps each panel smooth
    let panels = (2.0 * (q * length).sqrt()).ceil().max(1.0) as usize;
    let h = length / panels as f64;
    (0..panels)
        .map(|p| {
            let a = p as f64 * h;
            rule.integrate(a, a + h, |z| {
                let j = j0_unchecked(2.0 * (z * q).sqrt());
                j * j
            })
        })
        .sum()
}

fn gl_rule() -> GaussLegendre {
    GaussLegendre::new(NonZeroUsize::new(GL_DEGREE).expect("nonzero degree"))
}

/// Bracket values on every sample of `prev`.
pub fn bracket_values(prev: &DrivingProfile, cfg: &ShaperConfig) -> Result<Vec<f64>> {
    let grid = prev.grid();
    if cfg.uses_series() {
        prev.q()
            .iter()
            .enumerate()
            .map(|(i, &q)| series_bracket(q, cfg.l_search, cfg.t_w, cfg.series_k_max, grid.point(i)))
            .collect()
    } else {
        let rule = gl_rule();
        Ok(prev.q().iter().map(|&q| quadrature_bracket(&rule, q, cfg.l_search)).collect())
    }
}

/// One fixed-point step.
pub fn iteration_step(prev: &DrivingProfile, target: &ModeProfile, cfg: &ShaperConfig) -> Result<DrivingProfile> {
    cfg.validate()?;
    prev.grid().ensure_same(target.grid(), "iteration step")?;
    let bracket = bracket_values(prev, cfg)?;
    let samples =
        target
            .samples()
            .iter()
            .zip(&bracket)
            .enumerate()
            .map(|(i, (l, b))| {
                if *b > 0.0 {
                    Ok(l / b.sqrt())
                } else {
                    Err(Error::NumericalCancellation { t: prev.grid().point(i), bracket: *b })
                }
            })
            .collect::<Result<Vec<_>>>()?;
    Ok(DrivingProfile::new(*target.grid(), samples)?.with_shaped_for(cfg.target))
}

fn sup_relative_change(new: &DrivingProfile, old: &DrivingProfile) -> f64 {
    let scale = new.profile().max_abs();
    let diff = new.samples().iter().zip(old.samples()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

/// Iterate to convergence and report on the result at the physical length.
pub fn shape_driving(cfg: &ShaperConfig, target: &ModeProfile) -> Result<ShaperReport> {
    cfg.validate()?;
    let grid = target.grid();
    if (grid.end() - cfg.t_w).abs() > 1e-12 * cfg.t_w {
        return Err(invalid(format!("target spans {} but T_W is {}", grid.end(), cfg.t_w)));
    }
    if !target.is_normalized(1e-6) {
        return Err(invalid("target mode must be normalized"));
    }
    let mut driving = DrivingProfile::from_profile(target.clone())?.with_shaped_for(cfg.target);
    let mut residuals = Vec::new();
    for _ in 0..cfg.max_steps {
        let next = iteration_step(&driving, target, cfg)?;
        let r = sup_relative_change(&next, &driving);
        residuals.push(r);
        driving = next;
        if r <= cfg.tol {
            break;
        }
    }

    let space = crate::grid::make_space_grid(cfg.l_phys, cfg.n_z)?;
    let g = full_kernel(&driving, &driving, &space)?;
    let spectrum = decompose(&g)?;
    let li = target.samples();
    let scale = li.iter().fold(0.0f64, |m, x| m.max(x * x));
    let mut discrepancy = 0.0f64;
    for (j, col) in g.matrix().column_iter().enumerate() {
        for (i, v) in col.iter().enumerate() {
            discrepancy = discrepancy.max((v - li[i] * li[j]).abs());
        }
    }
    Ok(ShaperReport {
        steps: residuals.len(),
        residuals,
        kernel_discrepancy: discrepancy / scale,
        leading_mode_overlap: overlap(&spectrum.modes[0], target)?.abs(),
        kernel_eigenvalues: spectrum.kernel_eigenvalues.iter().take(6).copied().collect(),
        leakage: leakage(target, &driving, &space)?,
        driving,
    })
}

/// Fraction of the signal not written: `1 - ∫ B² dz`.
pub fn leakage(target: &ModeProfile, driving: &DrivingProfile, space: &SpaceGrid) -> Result<f64> {
    let b = write(target, &half_kernel(driving, space)?)?;
    Ok(1.0 - b.norm_squared())
}
