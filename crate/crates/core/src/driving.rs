//! Driving-field envelopes and the pulsed-train to envelope passage.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::{ModeProfile, TimeGrid};

/// Envelope `F(t)` of the driving together with its accumulated energy
/// `Q(t) = ∫_0^t F²`.
#[derive(Debug, Clone, PartialEq)]
pub struct DrivingProfile {
    profile: ModeProfile,
    q: Vec<f64>,
    /// Supermode the envelope was shaped for, if any.
    pub shaped_for: Option<usize>,
}

impl DrivingProfile {
    /// Wraps the samples and fills `Q` by cumulative trapezoid of `F²`.
    pub fn new(grid: TimeGrid, samples: Vec<f64>) -> Result<Self> {
        Self::from_profile(ModeProfile::new(grid, samples)?)
    }

    pub fn from_profile(profile: ModeProfile) -> Result<Self> {
        let sq: Vec<f64> = profile.samples().iter().map(|f| f * f).collect();
        let q = profile.grid().cumulative(&sq);
        Ok(Self { profile, q, shaped_for: None })
    }

    /// Unit envelope, which satisfies `Q(T_W) = T_W` on a grid starting at 0.
    pub fn constant(grid: TimeGrid) -> Self {
        let profile = ModeProfile::from_fn(grid, |_| 1.0).expect("finite constant");
        Self::from_profile(profile).expect("finite constant")
    }

    pub fn grid(&self) -> &TimeGrid {
        self.profile.grid()
    }

    pub fn samples(&self) -> &[f64] {
        self.profile.samples()
    }

    pub fn profile(&self) -> &ModeProfile {
        &self.profile
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }

    /// Total accumulated energy `Q(T_W)`.
    pub fn total_q(&self) -> f64 {
        self.q[self.q.len() - 1]
    }

    /// Whether `Q(T_W) / T_W` equals one within `eps`.
    pub fn is_normalized(&self, eps: f64) -> bool {
        (self.total_q() / self.grid().end() - 1.0).abs() <= eps
    }

    pub fn with_shaped_for(mut self, mode: usize) -> Self {
        self.shaped_for = Some(mode);
        self
    }
}

/// Fill `Q` for an envelope; with `renormalize` the envelope is rescaled by
/// `sqrt(T_W / Q(T_W))` so that `Q(T_W) = T_W`.
pub fn accumulate_q(envelope: &ModeProfile, renormalize: bool) -> Result<DrivingProfile> {
    let driving = DrivingProfile::from_profile(envelope.clone())?;
    if !renormalize {
        return Ok(driving);
    }
    let total = driving.total_q();
    if !(total > 0.0) {
        return Err(Error::DegenerateDriving("envelope has zero energy".into()));
    }
    let scale = (envelope.grid().end() / total).sqrt();
    let mut out = DrivingProfile::from_profile(envelope.scaled(scale))?;
    out.shaped_for = driving.shaped_for;
    Ok(out)
}

/// Apply the duty-cycle factor `sqrt(T_0 / T)` to an envelope.
pub fn envelope_rescale(envelope: &ModeProfile, pulse_len: f64, period: f64) -> Result<DrivingProfile> {
    if !(pulse_len > 0.0) || !(period > 0.0) {
        return Err(invalid("pulse length and period must be positive"));
    }
    if pulse_len > period {
        return Err(invalid(format!("pulse length {pulse_len} exceeds period {period}")));
    }
    DrivingProfile::from_profile(envelope.scaled((pulse_len / period).sqrt()))
}

/// Train of `count` rectangular windows of width `pulse_len` spaced `period`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulsedTrain {
    pub count: usize,
    pub period: f64,
    pub pulse_len: f64,
}

impl PulsedTrain {
    /// `(N - 1) T + T_0`.
    pub fn duration(&self) -> f64 {
        (self.count.saturating_sub(1)) as f64 * self.period + self.pulse_len
    }

    fn validate(&self, grid: &TimeGrid) -> Result<()> {
        if self.count == 0 {
            return Err(invalid("pulse train needs at least one pulse"));
        }
        if !(self.pulse_len > 0.0) || !(self.period > 0.0) || self.pulse_len > self.period {
            return Err(invalid(format!("need 0 < T_0 <= T, got T_0 = {}, T = {}", self.pulse_len, self.period)));
        }
        if self.duration() > grid.span() * (1.0 + 1e-12) {
            return Err(invalid(format!("train lasts {} but the grid spans {}", self.duration(), grid.span())));
        }
        Ok(())
    }

    /// Whether `t` lies inside one of the windows (closed on both sides).
    pub fn gate(&self, t: f64) -> bool {
        let slack = 1e-12 * self.period;
        let n0 = (t / self.period).floor() as i64;
        (n0 - 1..=n0 + 1).filter(|&n| n >= 0 && (n as usize) < self.count).any(|n| {
            let start = n as f64 * self.period;
            t >= start - slack && t - start <= self.pulse_len + slack
        })
    }
}

/// Sampled pulsed driving `f(t) = Σ_n F(t) Θ(t - (n-1)T)`.
pub fn build_pulse_train(envelope: &DrivingProfile, train: &PulsedTrain) -> Result<ModeProfile> {
    let grid = *envelope.grid();
    train.validate(&grid)?;
    let samples =
        grid.points().iter().zip(envelope.samples()).map(|(&t, &f)| if train.gate(t - grid.start()) { f } else { 0.0 }).collect();
    ModeProfile::new(grid, samples)
}

/// Physical rates used only to report dimensionful equivalents.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DimensionlessScaling {
    /// Peak Rabi frequency of the driving.
    pub omega_0: f64,
    /// One-photon detuning.
    pub delta: f64,
    /// Single-atom coupling constant.
    pub g: f64,
    /// Linear atomic density `N_at / L`.
    pub density: f64,
    /// Excited-state decay rate.
    pub gamma: f64,
}

impl DimensionlessScaling {
    /// Physical time corresponding to a dimensionless time.
    pub fn physical_time(&self, t: f64) -> f64 {
        t * self.delta.abs() / (self.omega_0 * self.omega_0)
    }

    /// Physical length corresponding to a dimensionless optical depth.
    pub fn physical_length(&self, z: f64) -> f64 {
        z * self.delta.abs() / (self.g * self.g * self.density)
    }

    /// `|Δ| / γ`; the Raman regime needs this to be large.
    pub fn raman_ratio(&self) -> f64 {
        self.delta.abs() / self.gamma
    }
}
