//! Run configuration for the command-line front end.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::grid::{
    gram_matrix, hermite_basis, make_space_grid, make_time_grid, orthonormality_defect, HermiteBasisConfig, ModeProfile,
    SpaceGrid, TimeGrid,
};
use crate::shaper::{BracketMode, ShaperConfig};

/// Largest accepted `‖Gram - I‖_max` of the Hermite basis.
pub const BASIS_GATE: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShaperSettings {
    pub max_steps: usize,
    pub tol: f64,
    pub bracket: BracketMode,
    pub series_k_max: usize,
}

impl Default for ShaperSettings {
    fn default() -> Self {
        let d = ShaperConfig::default();
        Self { max_steps: d.max_steps, tol: d.tol, bracket: d.bracket, series_k_max: d.series_k_max }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub n_t: usize,
    pub n_z: usize,
    pub t_w: f64,
    pub l_phys: f64,
    /// Defaults to `l_phys / 2` when absent.
    pub l_search: Option<f64>,
    /// Supermodes to shape, 1-based.
    pub modes: Vec<usize>,
    /// Defaults to a basis centred on the window with width `t_w / 10`.
    pub basis: Option<HermiteBasisConfig>,
    pub shaper: ShaperSettings,
    /// Squeezed-quadrature variances of the four cluster inputs.
    pub variances: Vec<f64>,
    /// Conversion pairs `(write mode, read mode)`.
    pub pairs: Vec<(usize, usize)>,
    /// Memory transmissivity applied to each cluster input; `None` skips it.
    pub loss_eta: Option<f64>,
    pub out: PathBuf,
    /// Reserved; nothing is random.
    pub seed: Option<u64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            n_t: 513,
            n_z: 513,
            t_w: 9.0,
            l_phys: 10.0,
            l_search: None,
            modes: vec![1, 2, 3, 4],
            basis: None,
            shaper: ShaperSettings::default(),
            variances: vec![0.10, 0.12, 0.14, 0.18],
            pairs: vec![(1, 1), (2, 2), (3, 3), (4, 4), (2, 1)],
            loss_eta: Some(0.953),
            out: PathBuf::from("out"),
            seed: None,
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| invalid(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn l_search(&self) -> f64 {
        self.l_search.unwrap_or(0.5 * self.l_phys)
    }

    pub fn basis_config(&self) -> HermiteBasisConfig {
        self.basis.unwrap_or_else(|| HermiteBasisConfig::for_window(self.t_w))
    }

    pub fn time_grid(&self) -> Result<TimeGrid> {
        make_time_grid(self.t_w, self.n_t)
    }

    pub fn space_grid(&self) -> Result<SpaceGrid> {
        make_space_grid(self.l_phys, self.n_z)
    }

    pub fn basis(&self) -> Result<Vec<ModeProfile>> {
        hermite_basis(&self.time_grid()?, &self.basis_config())
    }

    pub fn shaper_config(&self, target: usize) -> ShaperConfig {
        ShaperConfig {
            target,
            l_search: self.l_search(),
            l_phys: self.l_phys,
            t_w: self.t_w,
            max_steps: self.shaper.max_steps,
            tol: self.shaper.tol,
            bracket: self.shaper.bracket,
            series_k_max: self.shaper.series_k_max,
            n_z: self.n_z,
        }
    }

    /// Every check that can fail before any numerical work starts.
    pub fn validate(&self) -> Result<()> {
        let grid = self.time_grid()?;
        self.space_grid()?;
        let cfg = self.basis_config();
        cfg.validate(&grid)?;
        let defect = orthonormality_defect(&gram_matrix(&self.basis()?)?);
        if defect > BASIS_GATE {
            return Err(invalid(format!("Hermite basis is not orthonormal on this grid (defect {defect:e})")));
        }
        if self.modes.is_empty() {
            return Err(invalid("no supermodes requested"));
        }
        let in_basis = |k: usize| k >= 1 && k <= cfg.max_index;
        if let Some(k) = self.modes.iter().copied().find(|&k| !in_basis(k)) {
            return Err(invalid(format!("supermode {k} outside 1..={}", cfg.max_index)));
        }
        if let Some(p) = self.pairs.iter().find(|(i, j)| !in_basis(*i) || !in_basis(*j)) {
            return Err(invalid(format!("conversion pair {p:?} outside the basis")));
        }
        for &k in &self.modes {
            self.shaper_config(k).validate()?;
        }
        if self.variances.len() != 4 {
            return Err(invalid(format!("need 4 squeezing variances, got {}", self.variances.len())));
        }
        if let Some(v) = self.variances.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(invalid(format!("squeezing variance must be positive, got {v}")));
        }
        if let Some(eta) = self.loss_eta {
            if !(0.0..=1.0).contains(&eta) {
                return Err(invalid(format!("loss_eta {eta} outside [0, 1]")));
            }
        }
        Ok(())
    }
}
