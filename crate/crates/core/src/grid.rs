//! Uniform sampling grids, sampled profiles and trapezoid quadrature.
//!
//! All time quantities are in the dimensionless units where the driving Rabi
//! frequency sets the clock, and all lengths are optical depths. Both axes use
//! the same [`Grid`] type, tagged with a zero-sized axis marker so a spin wave
//! can never be integrated against a time profile by accident.

use std::fmt;
use std::marker::PhantomData;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Marker for the time axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Time;

/// Marker for the longitudinal axis of the cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Space;

/// Uniform grid on `[start, end]` with `len` samples, endpoints included.
pub struct Grid<A> {
    start: f64,
    end: f64,
    len: usize,
    _axis: PhantomData<A>,
}

pub type TimeGrid = Grid<Time>;
pub type SpaceGrid = Grid<Space>;

impl<A> Clone for Grid<A> {
    fn clone(&self) -> Self {
        *self
    }
}

impl<A> Copy for Grid<A> {}

impl<A> PartialEq for Grid<A> {
    fn eq(&self, other: &Self) -> bool {
        self.start == other.start && self.end == other.end && self.len == other.len
    }
}

impl<A> fmt::Debug for Grid<A> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid").field("start", &self.start).field("end", &self.end).field("len", &self.len).finish()
    }
}

impl<A> Grid<A> {
    pub fn new(start: f64, end: f64, len: usize) -> Result<Self> {
        if !start.is_finite() || !end.is_finite() {
            return Err(invalid("grid bounds must be finite"));
        }
        if end <= start {
            return Err(invalid(format!("grid span must be positive, got [{start}, {end}]")));
        }
        if len < 2 {
            return Err(invalid(format!("grid needs at least 2 samples, got {len}")));
        }
        Ok(Self { start, end, len, _axis: PhantomData })
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn end(&self) -> f64 {
        self.end
    }

    pub fn span(&self) -> f64 {
        self.end - self.start
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn step(&self) -> f64 {
        self.span() / (self.len - 1) as f64
    }

    /// Sample `i`; the last sample is exactly `end`.
    pub fn point(&self, i: usize) -> f64 {
        if i + 1 == self.len {
            self.end
        } else {
            self.start + i as f64 * self.step()
        }
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.len).map(|i| self.point(i)).collect()
    }

    /// Trapezoid quadrature weights.
    pub fn weights(&self) -> Vec<f64> {
        let h = self.step();
        let mut w = vec![h; self.len];
        w[0] = 0.5 * h;
        w[self.len - 1] = 0.5 * h;
        w
    }

    /// Definite trapezoid integral of `samples` over the grid.
    pub fn integrate(&self, samples: &[f64]) -> f64 {
        debug_assert_eq!(samples.len(), self.len);
        let h = self.step();
        let inner: f64 = samples[1..self.len - 1].iter().sum();
        h * (inner + 0.5 * (samples[0] + samples[self.len - 1]))
    }

    /// Running trapezoid integral, zero at the first sample.
    pub fn cumulative(&self, samples: &[f64]) -> Vec<f64> {
        debug_assert_eq!(samples.len(), self.len);
        let h = self.step();
        let mut out = Vec::with_capacity(self.len);
        let mut acc = 0.0;
        out.push(0.0);
        for pair in samples.windows(2) {
            acc += 0.5 * h * (pair[0] + pair[1]);
            out.push(acc);
        }
        out
    }

    pub(crate) fn ensure_same(&self, other: &Self, what: &str) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(invalid(format!("{what}: grids differ ({self:?} vs {other:?})")))
        }
    }
}

/// Time grid covering `[0, t_w]`.
pub fn make_time_grid(t_w: f64, n_t: usize) -> Result<TimeGrid> {
    if !(t_w > 0.0) {
        return Err(invalid(format!("writing time must be positive, got {t_w}")));
    }
    Grid::new(0.0, t_w, n_t)
}

/// Space grid covering `[0, length]`.
pub fn make_space_grid(length: f64, n_z: usize) -> Result<SpaceGrid> {
    if !(length > 0.0) {
        return Err(invalid(format!("cell length must be positive, got {length}")));
    }
    Grid::new(0.0, length, n_z)
}

/// A real profile sampled on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile<A> {
    grid: Grid<A>,
    samples: Vec<f64>,
    /// Supermode index (1-based) when the profile is a basis mode.
    pub label: Option<usize>,
}

/// Time profile: signal mode, driving envelope or retrieved field.
pub type ModeProfile = Profile<Time>;

/// Spatial profile of the collective spin coherence along the cell.
pub type SpinWave = Profile<Space>;

impl<A> Profile<A> {
    pub fn new(grid: Grid<A>, samples: Vec<f64>) -> Result<Self> {
        if samples.len() != grid.len() {
            return Err(invalid(format!("profile has {} samples but grid has {}", samples.len(), grid.len())));
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(invalid("profile samples must be finite"));
        }
        Ok(Self { grid, samples, label: None })
    }

    pub fn zeros(grid: Grid<A>) -> Self {
        Self { grid, samples: vec![0.0; grid.len()], label: None }
    }

    pub fn from_fn(grid: Grid<A>, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(grid, grid.points().into_iter().map(f).collect())
    }

    pub fn with_label(mut self, label: usize) -> Self {
        self.label = Some(label);
        self
    }

    pub fn grid(&self) -> &Grid<A> {
        &self.grid
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn norm_squared(&self) -> f64 {
        let sq: Vec<f64> = self.samples.iter().map(|v| v * v).collect();
        self.grid.integrate(&sq)
    }

    pub fn norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }

    pub fn is_normalized(&self, eps: f64) -> bool {
        (self.norm_squared() - 1.0).abs() <= eps
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self { grid: self.grid, samples: self.samples.iter().map(|v| v * factor).collect(), label: self.label }
    }

    /// Unit-normalized copy; `None` when the profile vanishes.
    pub fn normalized(&self) -> Option<Self> {
        let n = self.norm();
        (n > 0.0).then(|| self.scaled(1.0 / n))
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn last(&self) -> f64 {
        self.samples[self.samples.len() - 1]
    }

    /// Relative L2 distance `|self - other| / |other|`.
    pub fn relative_l2(&self, other: &Self) -> Result<f64> {
        self.grid.ensure_same(&other.grid, "relative L2")?;
        let diff: Vec<f64> = self.samples.iter().zip(&other.samples).map(|(a, b)| (a - b) * (a - b)).collect();
        Ok((self.grid.integrate(&diff) / other.norm_squared()).sqrt())
    }
}

/// Placement of the Hermite–Gaussian supermode basis on the time window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HermiteBasisConfig {
    pub center: f64,
    pub width: f64,
    pub max_index: usize,
}

impl HermiteBasisConfig {
    /// Basis centred on the window with width `t_w / 10` and six modes.
    pub fn for_window(t_w: f64) -> Self {
        Self { center: 0.5 * t_w, width: 0.1 * t_w, max_index: 6 }
    }

    pub fn validate(&self, grid: &TimeGrid) -> Result<()> {
        if !(self.width > 0.0) || !self.width.is_finite() {
            return Err(invalid(format!("basis width must be positive, got {}", self.width)));
        }
        if !(self.center > grid.start() && self.center < grid.end()) {
            return Err(invalid(format!("basis center {} outside ({}, {})", self.center, grid.start(), grid.end())));
        }
        if self.max_index == 0 {
            return Err(invalid("basis needs at least one mode"));
        }
        Ok(())
    }
}

/// Physicists' Hermite polynomial `H_n(x)` by the three-term recurrence.
pub fn hermite_polynomial(n: usize, x: f64) -> f64 {
    let mut prev = 1.0;
    if n == 0 {
        return prev;
    }
    let mut cur = 2.0 * x;
    for k in 1..n {
        let next = 2.0 * x * cur - 2.0 * k as f64 * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Supermode `k` (1-based) of the Hermite–Gaussian basis, unit-normalized
/// under trapezoid quadrature. `k = 1` is the Gaussian.
pub fn hermite_mode(k: usize, grid: &TimeGrid, cfg: &HermiteBasisConfig) -> Result<ModeProfile> {
    cfg.validate(grid)?;
    if k == 0 || k > cfg.max_index {
        return Err(invalid(format!("supermode index {k} outside 1..={}", cfg.max_index)));
    }
    let order = k - 1;
    let raw = ModeProfile::from_fn(*grid, |t| {
        let x = (t - cfg.center) / cfg.width;
        hermite_polynomial(order, x) * (-0.5 * x * x).exp()
    })?;
    let mode = raw.normalized().ok_or_else(|| invalid(format!("supermode {k} vanishes on the grid")))?;
    Ok(mode.with_label(k))
}

/// The first `cfg.max_index` supermodes.
pub fn hermite_basis(grid: &TimeGrid, cfg: &HermiteBasisConfig) -> Result<Vec<ModeProfile>> {
    (1..=cfg.max_index).map(|k| hermite_mode(k, grid, cfg)).collect()
}

/// Trapezoid inner product of two profiles on the same grid.
pub fn overlap<A>(a: &Profile<A>, b: &Profile<A>) -> Result<f64> {
    a.grid.ensure_same(&b.grid, "overlap")?;
    let prod: Vec<f64> = a.samples.iter().zip(&b.samples).map(|(x, y)| x * y).collect();
    Ok(a.grid.integrate(&prod))
}

/// Matrix of pairwise overlaps.
pub fn gram_matrix<A>(modes: &[Profile<A>]) -> Result<DMatrix<f64>> {
    let first = modes.first().ok_or_else(|| invalid("gram matrix of an empty mode list"))?;
    for m in &modes[1..] {
        first.grid.ensure_same(&m.grid, "gram matrix")?;
    }
    let n = modes.len();
    let mut g = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = overlap(&modes[i], &modes[j])?;
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    Ok(g)
}

/// Largest absolute deviation of a Gram matrix from the identity.
pub fn orthonormality_defect(gram: &DMatrix<f64>) -> f64 {
    let n = gram.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((gram[(i, j)] - target).abs());
        }
    }
    worst
}
