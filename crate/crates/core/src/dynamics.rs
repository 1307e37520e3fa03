//! Finite-difference integration of the noise-free Raman equations.
//!
//! In retarded time and with the phase rotations removed, the signal `a` and
//! the spin coherence `B` obey
//!
//! ```text
//! ∂_s a(τ, s) = -σ f(τ) B(τ, s)
//! ∂_τ B(τ, s) =  σ f(τ) a(τ, s)
//! ```
//!
//! where `s` is the distance travelled by the signal inside the cell. The
//! system is integrated with the trapezoid rule in both variables (a box
//! scheme, second order). It is independent of the Bessel-kernel solutions
//! and serves as their oracle.
//!
//! Orientation conventions, chosen so the oracle reproduces the kernels as
//! they are used throughout the crate:
//!
//! * Writing: the signal enters at `z = 0`; the kernel's time label `t` maps
//!   to lab time `τ = T_W - t`, i.e. the record is played tail first.
//! * Readout: backward, entering at `z = L` and leaving at `z = 0`; lab time
//!   equals the kernel time. The readout couples with `σ = -1`, which is the
//!   compensated π phase of the retrieved field.

use crate::driving::DrivingProfile;
use crate::error::{invalid, Result};
use crate::grid::{ModeProfile, SpaceGrid, SpinWave};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Write,
    Read,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DynamicsOutcome {
    /// Spin wave after the driving has passed, in cell coordinates.
    pub spin_wave: SpinWave,
    /// Signal at the exit face, labelled by kernel time.
    pub exit_field: ModeProfile,
}

/// March the coupled system over the driving's time grid.
///
/// `initial` is the spin wave present before the interaction (vacuum when
/// `None`); `input` is the signal entering the cell.
pub fn integrate_dynamics(
    input: &ModeProfile,
    initial: Option<&SpinWave>,
    driving: &DrivingProfile,
    space: &SpaceGrid,
    direction: Direction,
) -> Result<DynamicsOutcome> {
    let time = *driving.grid();
    time.ensure_same(input.grid(), "dynamics input")?;
    if let Some(b) = initial {
        space.ensure_same(b.grid(), "dynamics initial spin wave")?;
    }
    let dt = time.step();
    let dz = space.step();
    if dt > dz {
        return Err(invalid(format!("time step {dt} exceeds space step {dz}")));
    }

    let nz = space.len();
    let mut b0 = initial.map_or_else(|| vec![0.0; nz], |b| b.samples().to_vec());

    let (f, a_in, sigma): (Vec<f64>, Vec<f64>, f64) = match direction {
        Direction::Write => {
            (driving.samples().iter().rev().copied().collect(), input.samples().iter().rev().copied().collect(), 1.0)
        }
        Direction::Read => {
            b0.reverse();
            (driving.samples().to_vec(), input.samples().to_vec(), -1.0)
        }
    };

    let (mut b_final, mut exit) = march(&a_in, &f, b0, dt, dz, sigma);

    match direction {
        Direction::Write => exit.reverse(),
        Direction::Read => b_final.reverse(),
    }
    Ok(DynamicsOutcome { spin_wave: SpinWave::new(*space, b_final)?, exit_field: ModeProfile::new(time, exit)? })
}

/// Box-scheme march along the signal's direction of travel.
fn march(a_in: &[f64], f: &[f64], mut b: Vec<f64>, dt: f64, dz: f64, sigma: f64) -> (Vec<f64>, Vec<f64>) {
    let nt = f.len();
    let nz = b.len();
    let mut a = vec![0.0; nz];
    let mut exit = Vec::with_capacity(nt);

    let f0 = sigma * f[0];
    a[0] = a_in[0];
    for j in 0..nz - 1 {
        a[j + 1] = a[j] - 0.5 * dz * f0 * (b[j] + b[j + 1]);
    }
    exit.push(a[nz - 1]);

    let mut a_prev = vec![0.0; nz];
    let mut b_prev = vec![0.0; nz];
    for n in 0..nt - 1 {
        a_prev.copy_from_slice(&a);
        b_prev.copy_from_slice(&b);
        let fp = sigma * f[n];
        let fc = sigma * f[n + 1];
        a[0] = a_in[n + 1];
        b[0] = b_prev[0] + 0.5 * dt * (fp * a_prev[0] + fc * a[0]);
        let denom = 1.0 + 0.25 * dz * dt * fc * fc;
        for j in 0..nz - 1 {
            let carry = b_prev[j + 1] + 0.5 * dt * fp * a_prev[j + 1];
            let next = (a[j] - 0.5 * dz * fc * (b[j] + carry)) / denom;
            a[j + 1] = next;
            b[j + 1] = carry + 0.5 * dt * fc * next;
        }
        exit.push(a[nz - 1]);
    }
    (b, exit)
}
