//! C ABI over `fso-capacity`.
//!
//! Every fallible call returns an [`FsoStatus`] and writes results through
//! out-pointers. On failure the message is available from
//! [`fso_last_error`] on the same thread. Channels are opaque handles
//! created by [`fso_channel_new`] and released with [`fso_channel_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use fso_capacity::capacity::log_space;
use fso_capacity::cli::commands::{cmd_optimal, cmd_select, row_evaluator, DetectorBank};
use fso_capacity::cli::{Model, RunConfig};
use fso_capacity::physics::{NoiseParams, PhotodiodeParams};
use fso_capacity::special;
use fso_capacity::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FsoStatus {
    Ok = 0,
    NullPointer = 1,
    /// Invalid parameter or argument outside the function's domain.
    Invalid = 2,
    /// Numeric failure: peak not bracketed, convergence condition, degenerate channel.
    Numeric = 3,
    /// A Rust panic was caught at the boundary.
    Panic = 4,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FsoModel {
    Thermal = 0,
    Pointing = 1,
    Turbulence = 2,
    Egc = 3,
    Mrc = 4,
    Shotnoise = 5,
}

impl From<FsoModel> for Model {
    fn from(m: FsoModel) -> Model {
        match m {
            FsoModel::Thermal => Model::Thermal,
            FsoModel::Pointing => Model::Pointing,
            FsoModel::Turbulence => Model::Turbulence,
            FsoModel::Egc => Model::Egc,
            FsoModel::Mrc => Model::Mrc,
            FsoModel::Shotnoise => Model::Shotnoise,
        }
    }
}

/// Link parameters in SI units. `nu_bar <= 0` means no transit-time limit.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FsoParams {
    pub d: f64,
    pub eps0: f64,
    pub eps_r: f64,
    pub resistance: f64,
    pub nu_bar: f64,
    pub mu0: f64,
    pub rho: f64,
    pub x0: f64,
    pub y0: f64,
    pub n0: f64,
    pub lambda_b: f64,
    pub sigma_p: f64,
    pub eta: f64,
    pub array_area: f64,
    pub detectors: u32,
    pub photon_scale: f64,
}

/// Opaque channel handle.
pub struct FsoChannel {
    cfg: RunConfig,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> FsoStatus {
    match e.exit_code() {
        3 => FsoStatus::Numeric,
        _ => FsoStatus::Invalid,
    }
}

// runs `f`, recording the error message and catching panics
fn guard<F: FnOnce() -> Result<(), Error>>(f: F) -> FsoStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            FsoStatus::Ok
        }
        Ok(Err(e)) => {
            set_error(&e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic");
            FsoStatus::Panic
        }
    }
}

fn invalid(field: &str, msg: &str) -> Error {
    Error::Validation {
        field: field.into(),
        msg: msg.into(),
    }
}

fn config_from(p: &FsoParams) -> Result<RunConfig, Error> {
    let base = RunConfig::default();
    let cfg = RunConfig {
        photodiode: PhotodiodeParams {
            d: p.d,
            eps0: p.eps0,
            eps_r: p.eps_r,
            resistance: p.resistance,
            nu_bar: (p.nu_bar > 0.0).then_some(p.nu_bar),
        },
        mu0: p.mu0,
        rho: p.rho,
        x0: p.x0,
        y0: p.y0,
        noise: NoiseParams {
            n0: p.n0,
            lambda_b: p.lambda_b,
        },
        sigma_p: p.sigma_p,
        eta: p.eta,
        array_area: p.array_area,
        detectors: u64::from(p.detectors),
        photon_scale: p.photon_scale,
        ..base
    };
    cfg.validate()?;
    Ok(cfg)
}

/// Default parameter set (0.1 um depletion, 10 ohm, 10 mW peak, 2 mm beam, ...).
#[no_mangle]
pub extern "C" fn fso_params_default() -> FsoParams {
    let c = RunConfig::default();
    FsoParams {
        d: c.photodiode.d,
        eps0: c.photodiode.eps0,
        eps_r: c.photodiode.eps_r,
        resistance: c.photodiode.resistance,
        nu_bar: c.photodiode.nu_bar.unwrap_or(0.0),
        mu0: c.mu0,
        rho: c.rho,
        x0: c.x0,
        y0: c.y0,
        n0: c.noise.n0,
        lambda_b: c.noise.lambda_b,
        sigma_p: c.sigma_p,
        eta: c.eta,
        array_area: c.array_area,
        detectors: c.detectors as u32,
        photon_scale: c.photon_scale,
    }
}

/// Validates `params` and creates a channel. `*out` is set to NULL on failure.
///
/// # Safety
/// `params` must point to a valid `FsoParams`; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fso_channel_new(
    params: *const FsoParams,
    out: *mut *mut FsoChannel,
) -> FsoStatus {
    if params.is_null() || out.is_null() {
        set_error("null pointer argument");
        return FsoStatus::NullPointer;
    }
    *out = ptr::null_mut();
    let p = *params;
    guard(|| {
        let cfg = config_from(&p)?;
        *out = Box::into_raw(Box::new(FsoChannel { cfg }));
        Ok(())
    })
}

/// Releases a channel. NULL is ignored.
///
/// # Safety
/// `ch` must come from `fso_channel_new` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn fso_channel_free(ch: *mut FsoChannel) {
    if !ch.is_null() {
        drop(Box::from_raw(ch));
    }
}

/// Capacity (bit/s) at detector `area` (m^2). Fading models return the
/// ergodic capacity; array models use the configured tiling.
///
/// # Safety
/// `ch` must be a live handle; `out_bps` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fso_capacity(
    ch: *const FsoChannel,
    model: FsoModel,
    area: f64,
    out_bps: *mut f64,
) -> FsoStatus {
    if ch.is_null() || out_bps.is_null() {
        set_error("null pointer argument");
        return FsoStatus::NullPointer;
    }
    let cfg = &(*ch).cfg;
    guard(|| {
        let eval = row_evaluator(cfg, model.into())?;
        *out_bps = eval(area)?.capacity_bps;
        Ok(())
    })
}

/// Capacity-maximizing area. Closed-form models ignore the window; numeric
/// ones search `[a_lo, a_hi]`.
///
/// # Safety
/// `ch` must be a live handle; both out-pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn fso_optimal_area(
    ch: *const FsoChannel,
    model: FsoModel,
    a_lo: f64,
    a_hi: f64,
    out_area: *mut f64,
    out_bps: *mut f64,
) -> FsoStatus {
    if ch.is_null() || out_area.is_null() || out_bps.is_null() {
        set_error("null pointer argument");
        return FsoStatus::NullPointer;
    }
    let mut cfg = (*ch).cfg.clone();
    guard(|| {
        cfg.sweep.a_lo = a_lo;
        cfg.sweep.a_hi = a_hi;
        let r = cmd_optimal(&cfg, model.into())?;
        *out_area = r.area_star;
        *out_bps = r.capacity_star;
        Ok(())
    })
}

/// Fills `areas` and `capacities` (each `points` long) with a log-spaced
/// sweep from `a_lo` to `a_hi`.
///
/// # Safety
/// `ch` must be a live handle; both arrays must hold `points` doubles.
#[no_mangle]
pub unsafe extern "C" fn fso_curve(
    ch: *const FsoChannel,
    model: FsoModel,
    a_lo: f64,
    a_hi: f64,
    points: usize,
    areas: *mut f64,
    capacities: *mut f64,
) -> FsoStatus {
    if ch.is_null() || areas.is_null() || capacities.is_null() {
        set_error("null pointer argument");
        return FsoStatus::NullPointer;
    }
    let cfg = &(*ch).cfg;
    guard(|| {
        if !(a_lo > 0.0 && a_lo < a_hi && a_hi.is_finite()) || points < 2 {
            return Err(invalid("sweep", "requires 0 < a_lo < a_hi and points >= 2"));
        }
        let eval = row_evaluator(cfg, model.into())?;
        let grid = log_space(a_lo, a_hi, points);
        let rows = grid
            .iter()
            .map(|&a| eval(a))
            .collect::<Result<Vec<_>, _>>()?;
        let areas = std::slice::from_raw_parts_mut(areas, points);
        let caps = std::slice::from_raw_parts_mut(capacities, points);
        for (i, r) in rows.iter().enumerate() {
            areas[i] = r.area;
            caps[i] = r.capacity_bps;
        }
        Ok(())
    })
}

/// Index of the best of `n` candidate areas (strictly increasing) for a
/// peak-intensity estimate. Ties go to the smaller area.
///
/// # Safety
/// `ch` must be a live handle; `areas` must hold `n` doubles; `out_index`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn fso_select(
    ch: *const FsoChannel,
    model: FsoModel,
    areas: *const f64,
    n: usize,
    intensity: f64,
    out_index: *mut usize,
) -> FsoStatus {
    if ch.is_null() || out_index.is_null() || (areas.is_null() && n > 0) {
        set_error("null pointer argument");
        return FsoStatus::NullPointer;
    }
    let mut cfg = (*ch).cfg.clone();
    cfg.model = model.into();
    let list: &[f64] = if n == 0 {
        &[]
    } else {
        std::slice::from_raw_parts(areas, n)
    };
    guard(|| {
        let bank = DetectorBank::new(
            list.iter()
                .enumerate()
                .map(|(i, &a)| (i.to_string(), a))
                .collect(),
        )?;
        let s = cmd_select(&bank, intensity, &cfg)?;
        *out_index = s.label.parse().expect("labels are indices");
        Ok(())
    })
}

/// Principal branch `W0(y)` for `y >= -1/e`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fso_lambert_w0(y: f64, out: *mut f64) -> FsoStatus {
    if out.is_null() {
        set_error("null pointer argument");
        return FsoStatus::NullPointer;
    }
    guard(|| {
        *out = special::lambert_w0(y)?;
        Ok(())
    })
}

/// Message of the last failed call on this thread, or an empty string. The
/// pointer stays valid until the next call into this library on the thread.
#[no_mangle]
pub extern "C" fn fso_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}
