//! Bessel function of the first kind, order zero.
//!
//! Small arguments use the alternating power series directly. Past
//! `SERIES_LIMIT` the series' largest term grows like `I0(x)` and the
//! rounding loss becomes visible, so the rational/asymptotic form from
//! `libm` (the FreeBSD msun implementation) takes over.

use crate::error::{invalid, Result};

const SERIES_LIMIT: f64 = 5.0;

/// `J0(x)` for finite `x >= 0`.
pub fn bessel_j0(x: f64) -> Result<f64> {
    if !x.is_finite() || x < 0.0 {
        return Err(invalid(format!("J0 needs a finite non-negative argument, got {x}")));
    }
    Ok(j0_unchecked(x))
}

#[inline]
pub(crate) fn j0_unchecked(x: f64) -> f64 {
    if x <= SERIES_LIMIT {
        j0_series(x)
    } else {
        libm::j0(x)
    }
}

/// `sum_m (-1)^m / (m!)^2 (x/2)^(2m)` until the terms drop below rounding.
fn j0_series(x: f64) -> f64 {
    let y = 0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut m = 1.0;
    loop {
        term *= -y / (m * m);
        sum += term;
        if term.abs() < 1e-17 * sum.abs().max(1e-300) {
            break;
        }
        m += 1.0;
        if m > 200.0 {
            break;
        }
    }
    sum
}
