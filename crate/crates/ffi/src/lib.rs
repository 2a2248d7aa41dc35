//! C ABI over `gnforge`.
//!
//! Functions and grids are opaque handles created by `gn_*_new`-style
//! constructors and released with the matching `_free`. Every fallible call
//! returns a [`GnStatus`]; on failure the message is available from
//! [`gn_last_error_message`] on the same thread. Exponents are passed as
//! `double`, with `INFINITY` meaning `∞`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use gnforge::funcspace::sample;
use gnforge::lorentz::lorentz_norm_of;
use gnforge::smoothnorms::{
    besov_finite, besov_norm, tl_finite, tl_lorentz_norm, AnalyticEvolution, QuadratureSpec, SmoothnessIndex,
};
use gnforge::verifier::{verify_theorem, Theorem};
use gnforge::{AnalyticFunction, Error, Exponent, GridSpec, LorentzIndex};

/// Status codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GnStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Admissibility = 3,
    NonIntegrable = 4,
    Numeric = 5,
    Panic = 6,
}

/// Opaque function handle.
pub struct GnFunction(AnalyticFunction);

/// Opaque grid handle.
pub struct GnGrid(GridSpec);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let msg = CString::new(msg.replace('\0', " ")).expect("interior nuls removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn status_of(e: &Error) -> GnStatus {
    match e {
        Error::AdmissibilityViolation(_) | Error::IndexViolation(_) => GnStatus::Admissibility,
        Error::NonIntegrable(_) => GnStatus::NonIntegrable,
        Error::Numeric(_) | Error::QuadratureUnderresolved { .. } | Error::TailDivergent(_) => GnStatus::Numeric,
        _ => GnStatus::InvalidArgument,
    }
}

enum Failure {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn guard(body: impl FnOnce() -> Result<(), Failure>) -> GnStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            GnStatus::Ok
        }
        Ok(Err(Failure::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            GnStatus::NullPointer
        }
        Ok(Err(Failure::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic".into());
            GnStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    // SAFETY: the caller guarantees `p` is null or a live handle from this library.
    unsafe { p.as_ref() }.ok_or(Failure::Null(what))
}

unsafe fn out<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Failure> {
    // SAFETY: the caller guarantees `p` is null or valid for writes.
    unsafe { p.as_mut() }.ok_or(Failure::Null(what))
}

unsafe fn text<'a>(p: *const c_char, what: &'static str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    // SAFETY: non-null and NUL-terminated per the caller contract.
    unsafe { CStr::from_ptr(p) }
        .to_str()
        .map_err(|_| Failure::Lib(Error::InvalidArgument(format!("{what} is not valid UTF-8"))))
}

fn exponent(x: f64) -> Result<Exponent, Failure> {
    Ok(Exponent::new(x)?)
}

/// Message of the last call on this thread if it failed, NULL after a
/// success. Valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn gn_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Parses a function descriptor from JSON.
///
/// # Safety
/// `json` must be NUL-terminated; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gn_function_from_json(json: *const c_char, out_fn: *mut *mut GnFunction) -> GnStatus {
    guard(|| {
        let slot = unsafe { out(out_fn, "out_fn") }?;
        let f = AnalyticFunction::from_json(unsafe { text(json, "json") }?)?;
        *slot = Box::into_raw(Box::new(GnFunction(f)));
        Ok(())
    })
}

/// Single Gaussian `amp·exp(−|x − center|²/(4·width))` in `dim` dimensions.
///
/// # Safety
/// `center` must point to `dim` doubles; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gn_function_gaussian(
    amp: f64,
    center: *const f64,
    dim: usize,
    width: f64,
    out_fn: *mut *mut GnFunction,
) -> GnStatus {
    guard(|| {
        let slot = unsafe { out(out_fn, "out_fn") }?;
        if center.is_null() {
            return Err(Failure::Null("center"));
        }
        // SAFETY: `center` holds `dim` doubles per the caller contract.
        let c = unsafe { std::slice::from_raw_parts(center, dim) }.to_vec();
        *slot = Box::into_raw(Box::new(GnFunction(AnalyticFunction::gaussian(amp, c, width)?)));
        Ok(())
    })
}

/// `x ↦ f(λx)` as a new handle.
///
/// # Safety
/// `f` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gn_function_dilate(
    f: *const GnFunction,
    lambda: f64,
    out_fn: *mut *mut GnFunction,
) -> GnStatus {
    guard(|| {
        let f = unsafe { deref(f, "f") }?;
        let slot = unsafe { out(out_fn, "out_fn") }?;
        *slot = Box::into_raw(Box::new(GnFunction(f.0.dilate(lambda)?)));
        Ok(())
    })
}

/// Spatial dimension of `f`, or 0 for NULL.
///
/// # Safety
/// `f` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gn_function_dim(f: *const GnFunction) -> usize {
    unsafe { f.as_ref() }.map_or(0, |f| f.0.dim())
}

/// Releases a function handle; NULL is ignored.
///
/// # Safety
/// `f` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gn_function_free(f: *mut GnFunction) {
    if !f.is_null() {
        // SAFETY: created by Box::into_raw in this library.
        drop(unsafe { Box::from_raw(f) });
    }
}

/// Grid wide enough for `f` with `points` cells per axis.
///
/// # Safety
/// `f` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gn_grid_for(f: *const GnFunction, points: usize, out_grid: *mut *mut GnGrid) -> GnStatus {
    guard(|| {
        let f = unsafe { deref(f, "f") }?;
        let slot = unsafe { out(out_grid, "out_grid") }?;
        *slot = Box::into_raw(Box::new(GnGrid(GridSpec::adequate_for(&f.0, points)?)));
        Ok(())
    })
}

/// Cell-centred grid on `[−half_width, half_width]^dim`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gn_grid_new(
    dim: usize,
    half_width: f64,
    points: usize,
    out_grid: *mut *mut GnGrid,
) -> GnStatus {
    guard(|| {
        let slot = unsafe { out(out_grid, "out_grid") }?;
        *slot = Box::into_raw(Box::new(GnGrid(GridSpec::new(dim, half_width, points)?)));
        Ok(())
    })
}

/// Releases a grid handle; NULL is ignored.
///
/// # Safety
/// `g` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gn_grid_free(g: *mut GnGrid) {
    if !g.is_null() {
        // SAFETY: created by Box::into_raw in this library.
        drop(unsafe { Box::from_raw(g) });
    }
}

/// `‖f‖_{L^{p,q}}` of `f` sampled on `g`.
///
/// # Safety
/// Handles must be live; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gn_lorentz_norm(
    f: *const GnFunction,
    g: *const GnGrid,
    p: f64,
    q: f64,
    out_value: *mut f64,
) -> GnStatus {
    guard(|| {
        let (f, g) = (unsafe { deref(f, "f") }?, unsafe { deref(g, "g") }?);
        let slot = unsafe { out(out_value, "out_value") }?;
        *slot = lorentz_norm_of(&sample(&f.0, &g.0)?, LorentzIndex::new(exponent(p)?, exponent(q)?)?)?;
        Ok(())
    })
}

fn order(m: i32) -> Option<u32> {
    u32::try_from(m).ok()
}

/// Thermic Besov quasinorm; a negative `m` selects the default order.
///
/// # Safety
/// `f` must be live; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gn_besov_norm(
    f: *const GnFunction,
    s: f64,
    p: f64,
    q: f64,
    m: i32,
    out_value: *mut f64,
) -> GnStatus {
    guard(|| {
        let f = unsafe { deref(f, "f") }?;
        let slot = unsafe { out(out_value, "out_value") }?;
        let idx = SmoothnessIndex::new(s, exponent(p)?, exponent(q)?, order(m))?;
        if !besov_finite(&f.0, s, idx.p, idx.q) {
            return Err(Error::NonIntegrable(format!(
                "Besov quasinorm with s={s}, p={p}, q={q} is infinite for this function"
            ))
            .into());
        }
        *slot = besov_norm(&f.0, &idx, &QuadratureSpec::default())?.value;
        Ok(())
    })
}

/// Triebel-Lizorkin quasinorm with the aggregate measured in `L^{p,r}` of
/// the grid box; a negative `m` selects the default order.
///
/// # Safety
/// Handles must be live; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gn_tl_lorentz_norm(
    f: *const GnFunction,
    g: *const GnGrid,
    s: f64,
    p: f64,
    q: f64,
    r: f64,
    m: i32,
    out_value: *mut f64,
) -> GnStatus {
    guard(|| {
        let (f, g) = (unsafe { deref(f, "f") }?, unsafe { deref(g, "g") }?);
        let slot = unsafe { out(out_value, "out_value") }?;
        let idx = SmoothnessIndex::new(s, exponent(p)?, exponent(q)?, order(m))?;
        let r = exponent(r)?;
        if !tl_finite(&f.0, s, idx.p, r) {
            return Err(Error::NonIntegrable(format!(
                "Triebel-Lizorkin quasinorm with s={s}, p={p}, r={r} is infinite for this function"
            ))
            .into());
        }
        let ev = AnalyticEvolution::new(&f.0, &g.0)?;
        *slot = tl_lorentz_norm(&ev, &idx, r, &QuadratureSpec::default())?.value;
        Ok(())
    })
}

/// Evaluates one theorem ratio. `params_json` holds the theorem's index
/// object; the ratio goes to `out_ratio` and, when `out_json` is non-NULL,
/// the full report as a string to be released with [`gn_string_free`].
///
/// # Safety
/// Strings must be NUL-terminated; handles must be live; `out_ratio` must be
/// valid for writes and `out_json` NULL or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gn_verify(
    theorem: *const c_char,
    params_json: *const c_char,
    f: *const GnFunction,
    g: *const GnGrid,
    out_ratio: *mut f64,
    out_json: *mut *mut c_char,
) -> GnStatus {
    guard(|| {
        let theorem = Theorem::parse(unsafe { text(theorem, "theorem") }?)?;
        let params: serde_json::Value =
            serde_json::from_str(unsafe { text(params_json, "params_json") }?).map_err(Error::from)?;
        let (f, g) = (unsafe { deref(f, "f") }?, unsafe { deref(g, "g") }?);
        let slot = unsafe { out(out_ratio, "out_ratio") }?;
        let report = verify_theorem(theorem, &params, &f.0, &g.0, &QuadratureSpec::default())?;
        *slot = report.ratio;
        if let Some(js) = unsafe { out_json.as_mut() } {
            let body = serde_json::to_string(&report).map_err(Error::from)?;
            *js = CString::new(body).expect("JSON has no interior nul").into_raw();
        }
        Ok(())
    })
}

/// Releases a string returned by this library; NULL is ignored.
///
/// # Safety
/// `s` must be NULL or a string from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gn_string_free(s: *mut c_char) {
    if !s.is_null() {
        // SAFETY: created by CString::into_raw in this library.
        drop(unsafe { CString::from_raw(s) });
    }
}
