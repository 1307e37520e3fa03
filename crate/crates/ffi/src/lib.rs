//! C interface to `qmshape`.
//!
//! Every function returns a [`QmStatus`]; on failure a message is available
//! from [`qm_last_error`] on the same thread. Handles are opaque and must be
//! released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use qmshape::driving::DrivingProfile;
use qmshape::gaussian::{cluster_state, nullifier_variances, AdjacencyMatrix};
use qmshape::grid::{hermite_basis, make_space_grid, make_time_grid, overlap, HermiteBasisConfig, ModeProfile, SpaceGrid};
use qmshape::kernel::{full_kernel, half_kernel, read, write};
use qmshape::schmidt::decompose;
use qmshape::shaper::{shape_driving, BracketMode, ShaperConfig};
use qmshape::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QmStatus {
    Ok = 0,
    InvalidArgument = 1,
    NullPointer = 2,
    BufferTooSmall = 3,
    DegenerateDriving = 4,
    DegenerateResponse = 5,
    NumericalCancellation = 6,
    Range = 7,
    Spectrum = 8,
    Panic = 9,
}

pub const QM_BRACKET_AUTO: i32 = 0;
pub const QM_BRACKET_SERIES: i32 = 1;
pub const QM_BRACKET_QUADRATURE: i32 = 2;

/// Shaping run for one Hermite supermode on a uniform grid.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QmShaperParams {
    /// Supermode index, 1-based.
    pub target: usize,
    pub l_search: f64,
    pub l_phys: f64,
    pub t_w: f64,
    pub max_steps: usize,
    pub tol: f64,
    /// One of the `QM_BRACKET_*` constants.
    pub bracket: i32,
    pub n_t: usize,
    pub n_z: usize,
}

/// Shaped driving together with the grids and target it was built for.
pub struct QmDriving {
    driving: DrivingProfile,
    target: ModeProfile,
    space: SpaceGrid,
    steps: usize,
    leakage: f64,
}

pub struct QmSpectrum {
    lambdas: Vec<f64>,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(err: &Error) -> QmStatus {
    match err {
        Error::InvalidArgument(_) => QmStatus::InvalidArgument,
        Error::DegenerateDriving(_) => QmStatus::DegenerateDriving,
        Error::DegenerateResponse(_) => QmStatus::DegenerateResponse,
        Error::NumericalCancellation { .. } => QmStatus::NumericalCancellation,
        Error::Range(_) => QmStatus::Range,
        Error::Spectrum(_) => QmStatus::Spectrum,
    }
}

struct Fail(QmStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(QmStatus::NullPointer, format!("{what} is null"))
}

/// Run `f`, translating errors and panics into a status.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> QmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            QmStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(&format!("internal panic: {msg}"));
            QmStatus::Panic
        }
    }
}

unsafe fn copy_out(src: &[f64], buf: *mut f64, cap: usize, written: *mut usize) -> Result<(), Fail> {
    if !written.is_null() {
        *written = src.len();
    }
    if cap < src.len() {
        return Err(Fail(QmStatus::BufferTooSmall, format!("need {} values, buffer holds {cap}", src.len())));
    }
    if buf.is_null() {
        return Err(null("output buffer"));
    }
    std::ptr::copy_nonoverlapping(src.as_ptr(), buf, src.len());
    Ok(())
}

fn bracket_mode(code: i32) -> Result<BracketMode, Fail> {
    match code {
        QM_BRACKET_AUTO => Ok(BracketMode::Auto),
        QM_BRACKET_SERIES => Ok(BracketMode::Series),
        QM_BRACKET_QUADRATURE => Ok(BracketMode::Quadrature),
        other => Err(Fail(QmStatus::InvalidArgument, format!("unknown bracket mode {other}"))),
    }
}

/// Reference parameters: T_W = 9, L_phys = 10, L_search = 5, 513 points.
#[no_mangle]
pub extern "C" fn qm_shaper_params_default(target: usize) -> QmShaperParams {
    let c = ShaperConfig::new(target, 10.0, 9.0);
    QmShaperParams {
        target,
        l_search: c.l_search,
        l_phys: c.l_phys,
        t_w: c.t_w,
        max_steps: c.max_steps,
        tol: c.tol,
        bracket: QM_BRACKET_AUTO,
        n_t: c.n_z,
        n_z: c.n_z,
    }
}

/// Shape a driving for Hermite mode `params.target`. On success `*out`
/// owns a new handle.
///
/// # Safety
/// `params` must point to a valid struct and `out` to writable storage.
#[no_mangle]
pub unsafe extern "C" fn qm_shape_driving(params: *const QmShaperParams, out: *mut *mut QmDriving) -> QmStatus {
    guard(|| {
        let p = params.as_ref().ok_or_else(|| null("params"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let grid = make_time_grid(p.t_w, p.n_t)?;
        let basis_cfg = HermiteBasisConfig::for_window(p.t_w);
        if p.target == 0 || p.target > basis_cfg.max_index {
            return Err(Fail(QmStatus::InvalidArgument, format!("target {} outside 1..={}", p.target, basis_cfg.max_index)));
        }
        let target = hermite_basis(&grid, &basis_cfg)?.swap_remove(p.target - 1);
        let cfg = ShaperConfig {
            target: p.target,
            l_search: p.l_search,
            l_phys: p.l_phys,
            t_w: p.t_w,
            max_steps: p.max_steps,
            tol: p.tol,
            bracket: bracket_mode(p.bracket)?,
            n_z: p.n_z,
            ..ShaperConfig::default()
        };
        let report = shape_driving(&cfg, &target)?;
        let handle = QmDriving {
            driving: report.driving,
            target,
            space: make_space_grid(p.l_phys, p.n_z)?,
            steps: report.steps,
            leakage: report.leakage,
        };
        *out = Box::into_raw(Box::new(handle));
        Ok(())
    })
}

/// Number of time samples, 0 for a null handle.
///
/// # Safety
/// `d` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qm_driving_len(d: *const QmDriving) -> usize {
    d.as_ref().map_or(0, |d| d.driving.samples().len())
}

/// Copy the envelope samples into `buf` (capacity `cap`); `*written`
/// receives the sample count even when the buffer is too small.
///
/// # Safety
/// `d` must be a live handle; `buf` must hold `cap` doubles; `written` may be null.
#[no_mangle]
pub unsafe extern "C" fn qm_driving_samples(d: *const QmDriving, buf: *mut f64, cap: usize, written: *mut usize) -> QmStatus {
    guard(|| {
        let d = d.as_ref().ok_or_else(|| null("driving"))?;
        copy_out(d.driving.samples(), buf, cap, written)
    })
}

/// Iterations taken and energy fraction lost at the physical length.
///
/// # Safety
/// `d` must be a live handle; outputs may be null.
#[no_mangle]
pub unsafe extern "C" fn qm_driving_stats(d: *const QmDriving, steps: *mut usize, leakage: *mut f64) -> QmStatus {
    guard(|| {
        let d = d.as_ref().ok_or_else(|| null("driving"))?;
        if !steps.is_null() {
            *steps = d.steps;
        }
        if !leakage.is_null() {
            *leakage = d.leakage;
        }
        Ok(())
    })
}

/// # Safety
/// `d` must be null or a handle from [`qm_shape_driving`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qm_driving_free(d: *mut QmDriving) {
    if !d.is_null() {
        drop(Box::from_raw(d));
    }
}

/// Overlap of write-then-read output with the target mode.
///
/// # Safety
/// `d` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn qm_restoration_fidelity(d: *const QmDriving, out: *mut f64) -> QmStatus {
    guard(|| {
        let d = d.as_ref().ok_or_else(|| null("driving"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let k = half_kernel(&d.driving, &d.space)?;
        let restored = read(&write(&d.target, &k)?, &k)?;
        *out = overlap(&restored, &d.target)?;
        Ok(())
    })
}

/// Schmidt spectrum of the full cycle with this driving for write and read.
///
/// # Safety
/// `d` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn qm_spectrum_compute(d: *const QmDriving, out: *mut *mut QmSpectrum) -> QmStatus {
    guard(|| {
        let d = d.as_ref().ok_or_else(|| null("driving"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let s = decompose(&full_kernel(&d.driving, &d.driving, &d.space)?)?;
        *out = Box::into_raw(Box::new(QmSpectrum { lambdas: s.eigenvalues }));
        Ok(())
    })
}

/// # Safety
/// `s` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qm_spectrum_len(s: *const QmSpectrum) -> usize {
    s.as_ref().map_or(0, |s| s.lambdas.len())
}

/// Descending eigenvalues λ_k.
///
/// # Safety
/// `s` must be a live handle; `buf` must hold `cap` doubles; `written` may be null.
#[no_mangle]
pub unsafe extern "C" fn qm_spectrum_lambdas(s: *const QmSpectrum, buf: *mut f64, cap: usize, written: *mut usize) -> QmStatus {
    guard(|| {
        let s = s.as_ref().ok_or_else(|| null("spectrum"))?;
        copy_out(&s.lambdas, buf, cap, written)
    })
}

/// # Safety
/// `s` must be null or a handle from [`qm_spectrum_compute`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qm_spectrum_free(s: *mut QmSpectrum) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Nullifier variances of the four-node linear cluster built from squeezed
/// inputs with the given variances. `eta < 0` skips the memory loss channel.
/// `baselines` may be null.
///
/// # Safety
/// `variances`, `out` (and `baselines` when non-null) must hold 4 doubles.
#[no_mangle]
pub unsafe extern "C" fn qm_cluster_nullifiers(variances: *const f64, eta: f64, out: *mut f64, baselines: *mut f64) -> QmStatus {
    guard(|| {
        if variances.is_null() {
            return Err(null("variances"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let v = std::slice::from_raw_parts(variances, 4);
        let loss = if eta < 0.0 { None } else { Some(eta) };
        let report = nullifier_variances(&cluster_state(v, loss)?, &AdjacencyMatrix::linear_chain(4)?)?;
        copy_out(&report.variances, out, 4, std::ptr::null_mut())?;
        if !baselines.is_null() {
            copy_out(&report.baselines, baselines, 4, std::ptr::null_mut())?;
        }
        Ok(())
    })
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qm_bessel_j0(x: f64, out: *mut f64) -> QmStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = qmshape::bessel::bessel_j0(x)?;
        Ok(())
    })
}

/// Message for the last failed call on this thread; empty after success.
/// Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn qm_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

#[no_mangle]
pub extern "C" fn qm_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
