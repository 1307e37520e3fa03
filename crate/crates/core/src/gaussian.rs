//! Gaussian states of a few optical modes, the linear network that turns
//! four squeezed beams into a linear cluster, and nullifier checks.
//!
//! Quadratures are ordered `(x_1, y_1, ..., x_n, y_n)` with `a = x + i y`,
//! so the vacuum variance is 1/4. Mode indices are 1-based throughout this
//! module.

use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

pub const VACUUM_VARIANCE: f64 = 0.25;

/// Tolerance of the uncertainty check on covariance matrices.
pub const UNCERTAINTY_TOLERANCE: f64 = 1e-9;

const UNITARITY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Quadrature {
    X,
    Y,
}

/// `Ω = ⊕ [[0, 1], [-1, 0]]`.
pub fn symplectic_form(n: usize) -> DMatrix<f64> {
    let mut omega = DMatrix::zeros(2 * n, 2 * n);
    for k in 0..n {
        omega[(2 * k, 2 * k + 1)] = 1.0;
        omega[(2 * k + 1, 2 * k)] = -1.0;
    }
    omega
}

fn check_mode(n: usize, mode: usize) -> Result<()> {
    if mode == 0 || mode > n {
        return Err(invalid(format!("mode {mode} outside 1..={n}")));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
}

impl GaussianState {
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let dim = mean.len();
        if dim == 0 || dim % 2 != 0 || cov.shape() != (dim, dim) {
            return Err(invalid(format!("mean of length {dim} and covariance {:?} do not describe modes", cov.shape())));
        }
        let scale = cov.amax().max(1.0);
        if (&cov - cov.transpose()).amax() > 1e-12 * scale {
            return Err(invalid("covariance is not symmetric"));
        }
        let state = Self { mean, cov };
        let margin = state.uncertainty_margin();
        if margin < -UNCERTAINTY_TOLERANCE * scale {
            return Err(invalid(format!("covariance violates the uncertainty bound by {margin:e}")));
        }
        Ok(state)
    }

    pub fn vacuum(n: usize) -> Self {
        Self { mean: DVector::zeros(2 * n), cov: DMatrix::identity(2 * n, 2 * n) * VACUUM_VARIANCE }
    }

    /// Product of pure squeezed states: variance `v` in the given quadrature
    /// and `1/(16 v)` in its conjugate.
    pub fn squeezed(modes: &[(Quadrature, f64)]) -> Result<Self> {
        let n = modes.len();
        let mut cov = DMatrix::zeros(2 * n, 2 * n);
        for (k, &(quad, v)) in modes.iter().enumerate() {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(format!("squeezed variance must be positive, got {v}")));
            }
            let anti = 1.0 / (16.0 * v);
            let (vx, vy) = match quad {
                Quadrature::X => (v, anti),
                Quadrature::Y => (anti, v),
            };
            cov[(2 * k, 2 * k)] = vx;
            cov[(2 * k + 1, 2 * k + 1)] = vy;
        }
        Self::new(DVector::zeros(2 * n), cov)
    }

    pub fn modes(&self) -> usize {
        self.mean.len() / 2
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.cov
    }

    /// Smallest eigenvalue of `Σ + iΩ/4`.
    pub fn uncertainty_margin(&self) -> f64 {
        let dim = self.cov.nrows();
        let omega = symplectic_form(dim / 2) * 0.25;
        let mut embed = DMatrix::zeros(2 * dim, 2 * dim);
        embed.view_mut((0, 0), (dim, dim)).copy_from(&self.cov);
        embed.view_mut((dim, dim), (dim, dim)).copy_from(&self.cov);
        embed.view_mut((0, dim), (dim, dim)).copy_from(&(-&omega));
        embed.view_mut((dim, 0), (dim, dim)).copy_from(&omega);
        SymmetricEigen::new(embed).eigenvalues.min()
    }

    /// Variance of the linear form `cᵀ r`.
    pub fn variance(&self, coefficients: &DVector<f64>) -> Result<f64> {
        if coefficients.len() != self.mean.len() {
            return Err(invalid("linear form has the wrong length"));
        }
        Ok(coefficients.dot(&(&self.cov * coefficients)))
    }

    /// Reorder modes: mode `k` of the result is mode `order[k-1]` here.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        let n = self.modes();
        if order.len() != n {
            return Err(invalid("permutation has the wrong length"));
        }
        let mut seen = vec![false; n];
        for &m in order {
            check_mode(n, m)?;
            if std::mem::replace(&mut seen[m - 1], true) {
                return Err(invalid("not a permutation"));
            }
        }
        let idx = |r: usize| 2 * (order[r / 2] - 1) + r % 2;
        Ok(Self {
            mean: DVector::from_fn(2 * n, |r, _| self.mean[idx(r)]),
            cov: DMatrix::from_fn(2 * n, 2 * n, |r, c| self.cov[(idx(r), idx(c))]),
        })
    }
}

/// Input beams for the cluster: odd modes squeezed in `y`, even in `x`.
pub fn cluster_inputs(variances: &[f64]) -> Result<GaussianState> {
    let modes: Vec<_> =
        variances.iter().enumerate().map(|(k, &v)| (if k % 2 == 0 { Quadrature::Y } else { Quadrature::X }, v)).collect();
    GaussianState::squeezed(&modes)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModeUnitary {
    matrix: DMatrix<Complex64>,
}

impl ModeUnitary {
    pub fn new(matrix: DMatrix<Complex64>) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() == 0 {
            return Err(invalid("mode transformation must be a non-empty square matrix"));
        }
        let defect = unitarity_defect(&matrix);
        if defect > UNITARITY_TOLERANCE {
            return Err(invalid(format!("matrix is not unitary (defect {defect:e})")));
        }
        Ok(Self { matrix })
    }

    pub fn identity(n: usize) -> Self {
        Self { matrix: DMatrix::identity(n, n) }
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn modes(&self) -> usize {
        self.matrix.nrows()
    }

    /// `self · other`: `other` acts first.
    pub fn compose(&self, other: &ModeUnitary) -> Result<ModeUnitary> {
        if self.modes() != other.modes() {
            return Err(invalid("cannot compose transformations of different sizes"));
        }
        Ok(Self { matrix: &self.matrix * &other.matrix })
    }
}

/// `max |U†U - I|`.
pub fn unitarity_defect(u: &DMatrix<Complex64>) -> f64 {
    let n = u.nrows();
    let p = u.adjoint() * u;
    (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| (p[(i, j)] - if i == j { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) }).norm())
        .fold(0.0, f64::max)
}

/// Phase `e^{iθ}` on one mode.
pub fn phase_shifter(n: usize, mode: usize, angle: f64) -> Result<ModeUnitary> {
    check_mode(n, mode)?;
    if !angle.is_finite() {
        return Err(invalid("phase must be finite"));
    }
    let mut m = DMatrix::identity(n, n);
    let (s, c) = angle.sin_cos();
    m[(mode - 1, mode - 1)] = Complex64::new(c, s);
    Ok(ModeUnitary { matrix: m })
}

/// Beamsplitter with transmission `T` between modes `i` and `j`:
/// block `[[√(1-T), √T], [√T, -√(1-T)]]`.
pub fn beamsplitter(n: usize, i: usize, j: usize, transmission: f64) -> Result<ModeUnitary> {
    check_mode(n, i)?;
    check_mode(n, j)?;
    if i == j {
        return Err(invalid("beamsplitter needs two distinct modes"));
    }
    if !(0.0..=1.0).contains(&transmission) {
        return Err(invalid(format!("transmission {transmission} outside [0, 1]")));
    }
    let t = Complex64::new(transmission.sqrt(), 0.0);
    let r = Complex64::new((1.0 - transmission).sqrt(), 0.0);
    let mut m = DMatrix::identity(n, n);
    m[(i - 1, i - 1)] = r;
    m[(i - 1, j - 1)] = t;
    m[(j - 1, i - 1)] = t;
    m[(j - 1, j - 1)] = -r;
    Ok(ModeUnitary { matrix: m })
}

/// `U = F3·F2·BS1·BS2·F3·F4·BS3·F3·F2` for the four-node linear cluster.
pub fn compose_cluster_unitary() -> ModeUnitary {
    use std::f64::consts::FRAC_PI_2;
    let f2 = phase_shifter(4, 2, FRAC_PI_2).expect("valid mode");
    let f3 = phase_shifter(4, 3, -FRAC_PI_2).expect("valid mode");
    let f4 = phase_shifter(4, 4, FRAC_PI_2).expect("valid mode");
    let bs1 = beamsplitter(4, 1, 2, 0.5).expect("valid modes");
    let bs2 = beamsplitter(4, 3, 4, 0.5).expect("valid modes");
    let bs3 = beamsplitter(4, 2, 3, 0.8).expect("valid modes");
    [&f3, &f2, &bs1, &bs2, &f3, &f4, &bs3, &f3, &f2]
        .iter()
        .fold(ModeUnitary::identity(4), |acc, f| acc.compose(f).expect("same size"))
}

/// The cluster transformation in closed form.
pub fn cluster_unitary_reference() -> DMatrix<Complex64> {
    let a = FRAC_1_SQRT_2;
    let b = 1.0 / 10f64.sqrt();
    let c = |re: f64, im: f64| Complex64::new(re, im);
    DMatrix::from_row_slice(
        4,
        4,
        &[
            c(a, 0.0),
            c(0.0, b),
            c(0.0, -2.0 * b),
            c(0.0, 0.0),
            c(0.0, a),
            c(b, 0.0),
            c(-2.0 * b, 0.0),
            c(0.0, 0.0),
            c(0.0, 0.0),
            c(0.0, -2.0 * b),
            c(0.0, -b),
            c(a, 0.0),
            c(0.0, 0.0),
            c(2.0 * b, 0.0),
            c(b, 0.0),
            c(0.0, -a),
        ],
    )
}

/// Quadrature map of `a -> U a`.
pub fn unitary_to_symplectic(u: &ModeUnitary) -> Result<DMatrix<f64>> {
    let defect = unitarity_defect(u.matrix());
    if defect > UNITARITY_TOLERANCE {
        return Err(invalid(format!("matrix is not unitary (defect {defect:e})")));
    }
    let n = u.modes();
    let m = u.matrix();
    Ok(DMatrix::from_fn(2 * n, 2 * n, |r, c| {
        let z = m[(r / 2, c / 2)];
        match (r % 2, c % 2) {
            (0, 0) | (1, 1) => z.re,
            (0, 1) => -z.im,
            _ => z.im,
        }
    }))
}

/// `max |S Ω Sᵀ - Ω|`.
pub fn symplectic_defect(s: &DMatrix<f64>) -> f64 {
    let omega = symplectic_form(s.nrows() / 2);
    (s * &omega * s.transpose() - omega).amax()
}

pub fn apply(state: &GaussianState, s: &DMatrix<f64>) -> Result<GaussianState> {
    let dim = state.mean.len();
    if s.shape() != (dim, dim) {
        return Err(invalid(format!("transformation {:?} does not act on {} modes", s.shape(), dim / 2)));
    }
    let cov = s * &state.cov * s.transpose();
    let cov = (&cov + cov.transpose()) * 0.5;
    GaussianState::new(s * &state.mean, cov)
}

/// Pure loss: `Σ -> η² Σ + (1-η²)/4` on the mode, couplings scaled by `η`.
pub fn memory_loss_channel(state: &GaussianState, mode: usize, eta: f64) -> Result<GaussianState> {
    check_mode(state.modes(), mode)?;
    if !(0.0..=1.0).contains(&eta) {
        return Err(invalid(format!("transmissivity {eta} outside [0, 1]")));
    }
    let dim = state.mean.len();
    let scale = DVector::from_fn(dim, |r, _| if r / 2 == mode - 1 { eta } else { 1.0 });
    let mut cov = DMatrix::from_fn(dim, dim, |r, c| scale[r] * scale[c] * state.cov[(r, c)]);
    for r in [2 * (mode - 1), 2 * mode - 1] {
        cov[(r, r)] += (1.0 - eta * eta) * VACUUM_VARIANCE;
    }
    GaussianState::new(state.mean.component_mul(&scale), cov)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdjacencyMatrix {
    matrix: DMatrix<f64>,
}

impl AdjacencyMatrix {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() == 0 {
            return Err(invalid("adjacency matrix must be non-empty and square"));
        }
        let n = matrix.nrows();
        for i in 0..n {
            if matrix[(i, i)] != 0.0 {
                return Err(invalid("adjacency matrix needs a zero diagonal"));
            }
            for j in 0..n {
                let v = matrix[(i, j)];
                if v != 0.0 && v != 1.0 {
                    return Err(invalid("adjacency entries must be 0 or 1"));
                }
                if v != matrix[(j, i)] {
                    return Err(invalid("adjacency matrix must be symmetric"));
                }
            }
        }
        Ok(Self { matrix })
    }

    /// Path graph `1 - 2 - ... - n`.
    pub fn linear_chain(n: usize) -> Result<Self> {
        Self::new(DMatrix::from_fn(n, n, |i, j| if i.abs_diff(j) == 1 { 1.0 } else { 0.0 }))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn nodes(&self) -> usize {
        self.matrix.nrows()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NullifierReport {
    pub variances: Vec<f64>,
    /// Values for an all-vacuum input.
    pub baselines: Vec<f64>,
    /// Whether each variance is strictly below its baseline.
    pub below_baseline: Vec<bool>,
}

impl NullifierReport {
    pub fn all_below(&self) -> bool {
        self.below_baseline.iter().all(|&b| b)
    }
}

/// Variances of `N_k = y_k - Σ_m V_km x_m`.
pub fn nullifier_variances(state: &GaussianState, adjacency: &AdjacencyMatrix) -> Result<NullifierReport> {
    let n = adjacency.nodes();
    if state.modes() != n {
        return Err(invalid(format!("state has {} modes, graph has {n} nodes", state.modes())));
    }
    let v = adjacency.matrix();
    let mut variances = Vec::with_capacity(n);
    let mut baselines = Vec::with_capacity(n);
    for k in 0..n {
        let mut c = DVector::zeros(2 * n);
        c[2 * k + 1] = 1.0;
        for m in 0..n {
            c[2 * m] = -v[(k, m)];
        }
        variances.push(state.variance(&c)?);
        baselines.push(VACUUM_VARIANCE * (1.0 + v.row(k).iter().map(|x| x * x).sum::<f64>()));
    }
    let below_baseline = variances.iter().zip(&baselines).map(|(a, b)| a < b).collect();
    Ok(NullifierReport { variances, baselines, below_baseline })
}

/// Squeezed inputs, optional memory loss on every beam, then the cluster
/// network.
pub fn cluster_state(variances: &[f64], eta: Option<f64>) -> Result<GaussianState> {
    if variances.len() != 4 {
        return Err(invalid(format!("the cluster network takes 4 beams, got {}", variances.len())));
    }
    let mut state = cluster_inputs(variances)?;
    if let Some(eta) = eta {
        for mode in 1..=4 {
            state = memory_loss_channel(&state, mode, eta)?;
        }
    }
    apply(&state, &unitary_to_symplectic(&compose_cluster_unitary())?)
}

/// `var((x_i + s_x x_j)/√2) + var((y_i + s_y y_j)/√2)`; signs must be ±1.
pub fn duan_sum(state: &GaussianState, pair: (usize, usize), signs: (f64, f64)) -> Result<f64> {
    let n = state.modes();
    let (i, j) = pair;
    check_mode(n, i)?;
    check_mode(n, j)?;
    if i == j {
        return Err(invalid("Duan sum needs two distinct modes"));
    }
    if signs.0.abs() != 1.0 || signs.1.abs() != 1.0 {
        return Err(invalid("Duan signs must be +1 or -1"));
    }
    let mut cx = DVector::zeros(2 * n);
    cx[2 * (i - 1)] = FRAC_1_SQRT_2;
    cx[2 * (j - 1)] = signs.0 * FRAC_1_SQRT_2;
    let mut cy = DVector::zeros(2 * n);
    cy[2 * i - 1] = FRAC_1_SQRT_2;
    cy[2 * j - 1] = signs.1 * FRAC_1_SQRT_2;
    Ok(state.variance(&cx)? + state.variance(&cy)?)
}

/// Smallest Duan sum over the four sign choices.
pub fn min_duan_sum(state: &GaussianState, pair: (usize, usize)) -> Result<f64> {
    let mut best = f64::INFINITY;
    for sx in [1.0, -1.0] {
        for sy in [1.0, -1.0] {
            best = best.min(duan_sum(state, pair, (sx, sy))?);
        }
    }
    Ok(best)
}

/// Two co-profile beams squeezed in `x` and `y` with variance `v`, mixed
/// 50:50. Returns the Duan sum of the outputs.
pub fn co_mode_duan(v: f64) -> Result<f64> {
    let input = GaussianState::squeezed(&[(Quadrature::X, v), (Quadrature::Y, v)])?;
    let bs = unitary_to_symplectic(&beamsplitter(2, 1, 2, 0.5)?)?;
    duan_sum(&apply(&input, &bs)?, (1, 2), (1.0, -1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OrthogonalMixing {
    /// Best Duan sum between output 1 in `L_1` and output 2 in `L_2`.
    pub cross_profile: f64,
    /// Best Duan sum between the two outputs in `L_1`.
    pub co_profile: f64,
}

/// Beam 1 carries an `x`-squeezed `L_1` mode, beam 2 a `y`-squeezed `L_2`
/// mode, each with vacuum in the other profile. Mixing 50:50 acts on each
/// profile separately. Mode order: beam 1 `L_1`, beam 1 `L_2`, beam 2 `L_1`,
/// beam 2 `L_2`.
pub fn orthogonal_mode_duan(v: f64) -> Result<OrthogonalMixing> {
    let input = GaussianState::new(
        DVector::zeros(8),
        DMatrix::from_diagonal(&DVector::from_vec(vec![
            v,
            1.0 / (16.0 * v),
            VACUUM_VARIANCE,
            VACUUM_VARIANCE,
            VACUUM_VARIANCE,
            VACUUM_VARIANCE,
            1.0 / (16.0 * v),
            v,
        ])),
    )?;
    let mixer = beamsplitter(4, 1, 3, 0.5)?.compose(&beamsplitter(4, 2, 4, 0.5)?)?;
    let out = apply(&input, &unitary_to_symplectic(&mixer)?)?;
    Ok(OrthogonalMixing { cross_profile: min_duan_sum(&out, (1, 4))?, co_profile: min_duan_sum(&out, (1, 3))? })
}
