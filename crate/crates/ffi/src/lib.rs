//! C ABI over `pdecont`.
//!
//! States are opaque `PdcState` handles created by `pdc_demo_init` or
//! `pdc_load_point` and released with `pdc_state_free`. Every fallible call
//! returns a `PdcStatus`; on failure the message is available from
//! `pdc_last_error` until the next failing call on the same thread.
//! Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use libc::{c_char, size_t};
use pdecont::problem::ProblemState;
use pdecont::{continuation, demos, io, spcont, switching, timeint, Error};

/// Status codes; `PDC_STATUS_OK` is zero.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PdcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    BufferTooSmall = 3,
    Domain = 4,
    Dimension = 5,
    Singular = 6,
    NotConverged = 7,
    UnknownDemo = 8,
    Format = 9,
    Io = 10,
    Panic = 11,
}

/// Opaque continuation state.
pub struct PdcState {
    inner: ProblemState,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> PdcStatus {
    match e {
        Error::Domain(_) => PdcStatus::Domain,
        Error::Dimension { .. } => PdcStatus::Dimension,
        Error::Singular(_) => PdcStatus::Singular,
        Error::NotConverged(_) => PdcStatus::NotConverged,
        Error::UnknownDemo(_) => PdcStatus::UnknownDemo,
        Error::Format(_) => PdcStatus::Format,
        Error::Io(_) => PdcStatus::Io,
    }
}

/// Failure inside a call: a status plus message.
struct Fail(PdcStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

type Res<T = ()> = Result<T, Fail>;

fn guard(f: impl FnOnce() -> Res) -> PdcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PdcStatus::Ok,
        Ok(Err(Fail(s, msg))) => {
            set_error(msg);
            s
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            PdcStatus::Panic
        }
    }
}

fn null(what: &str) -> Fail {
    Fail(PdcStatus::NullPointer, format!("`{what}` is null"))
}

unsafe fn str_arg<'a>(s: *const c_char, what: &str) -> Res<&'a str> {
    if s.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| Fail(PdcStatus::InvalidUtf8, format!("`{what}` is not UTF-8")))
}

unsafe fn state<'a>(s: *mut PdcState) -> Res<&'a mut ProblemState> {
    s.as_mut().map(|s| &mut s.inner).ok_or_else(|| null("state"))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Res<&'a mut T> {
    p.as_mut().ok_or_else(|| null(what))
}

fn boxed(p: ProblemState) -> *mut PdcState {
    Box::into_raw(Box::new(PdcState { inner: p }))
}

/// Message of the last failing call on this thread, or NULL. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn pdc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Creates the initial state of demo `name` with its embedded config.
///
/// # Safety
/// `name` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pdc_demo_init(name: *const c_char, out_state: *mut *mut PdcState) -> PdcStatus {
    guard(|| {
        let o = out(out_state, "out_state")?;
        *o = ptr::null_mut();
        let p = demos::init_default(str_arg(name, "name")?)?;
        *o = boxed(p);
        Ok(())
    })
}

/// Loads point file `name` from directory `dir`.
///
/// # Safety
/// `dir` and `name` must be NUL-terminated strings; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pdc_load_point(
    dir: *const c_char,
    name: *const c_char,
    out_state: *mut *mut PdcState,
) -> PdcStatus {
    guard(|| {
        let o = out(out_state, "out_state")?;
        *o = ptr::null_mut();
        let p = io::load_point(str_arg(dir, "dir")?.as_ref(), str_arg(name, "name")?)?;
        *o = boxed(p);
        Ok(())
    })
}

/// Independent copy of a state.
///
/// # Safety
/// `s` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pdc_state_clone(s: *mut PdcState, out_state: *mut *mut PdcState) -> PdcStatus {
    guard(|| {
        let o = out(out_state, "out_state")?;
        *o = boxed(state(s)?.clone());
        Ok(())
    })
}

/// Releases a handle; NULL is ignored.
///
/// # Safety
/// `s` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pdc_state_free(s: *mut PdcState) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Directory receiving point and branch files; NULL disables output.
///
/// # Safety
/// `s` must be a live handle; `dir` NULL or NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn pdc_set_output_dir(s: *mut PdcState, dir: *const c_char) -> PdcStatus {
    guard(|| {
        let p = state(s)?;
        if dir.is_null() {
            p.dir = None;
            return Ok(());
        }
        let d = PathBuf::from(str_arg(dir, "dir")?);
        std::fs::create_dir_all(&d).map_err(Error::from)?;
        p.dir = Some(d);
        Ok(())
    })
}

/// Sets the continuation step size `ds` for the next run.
///
/// # Safety
/// `s` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn pdc_set_ds(s: *mut PdcState, ds: f64) -> PdcStatus {
    guard(|| {
        let p = state(s)?;
        if !(ds.is_finite() && ds != 0.0) {
            return Err(Fail(PdcStatus::Domain, format!("invalid ds {ds}")));
        }
        p.nc.ds = ds;
        p.sol.ds = ds;
        Ok(())
    })
}

/// Sets the window `[lammin, lammax]` of the primary parameter.
///
/// # Safety
/// `s` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn pdc_set_window(s: *mut PdcState, lammin: f64, lammax: f64) -> PdcStatus {
    guard(|| {
        let p = state(s)?;
        let old = (p.nc.lammin, p.nc.lammax);
        p.nc.lammin = lammin;
        p.nc.lammax = lammax;
        if let Err(e) = p.nc.validate() {
            (p.nc.lammin, p.nc.lammax) = old;
            return Err(e.into());
        }
        Ok(())
    })
}

/// Toggles bifurcation and fold detection.
///
/// # Safety
/// `s` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn pdc_set_checks(s: *mut PdcState, bifcheck: bool, foldcheck: bool) -> PdcStatus {
    guard(|| {
        let p = state(s)?;
        p.sw.bifcheck = bifcheck;
        p.sw.foldcheck = foldcheck;
        Ok(())
    })
}

/// Runs at most `nsteps` continuation steps; the number taken goes to
/// `out_steps` (may be NULL).
///
/// # Safety
/// `s` must be a live handle; `out_steps` NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn pdc_cont(s: *mut PdcState, nsteps: size_t, out_steps: *mut size_t) -> PdcStatus {
    guard(|| {
        let rep = continuation::cont(state(s)?, nsteps)?;
        if let Some(o) = out_steps.as_mut() {
            *o = rep.steps;
        }
        Ok(())
    })
}

/// Continues until `nbif` bifurcation points are found. The located points
/// go to `out_points` (up to `cap` handles, which the caller frees) and their
/// number to `out_found`.
///
/// # Safety
/// `s` must be a live handle; `out_points` must hold `cap` slots (may be
/// NULL when `cap` is 0); `out_found` writable.
#[no_mangle]
pub unsafe extern "C" fn pdc_findbif(
    s: *mut PdcState,
    nbif: size_t,
    nsteps: size_t,
    out_points: *mut *mut PdcState,
    cap: size_t,
    out_found: *mut size_t,
) -> PdcStatus {
    guard(|| {
        let found = out(out_found, "out_found")?;
        if cap > 0 && out_points.is_null() {
            return Err(null("out_points"));
        }
        let p = state(s)?;
        let rep = switching::findbif(p, nbif, nsteps)?;
        let bifs: Vec<_> = rep
            .points
            .iter()
            .filter(|sp| sp.ptype == pdecont::problem::ptype::BIFURCATION)
            .collect();
        *found = bifs.len();
        for (k, sp) in bifs.iter().take(cap).enumerate() {
            *out_points.add(k) = boxed(sp.state(p));
        }
        Ok(())
    })
}

/// Prepares branch switching at a bifurcation point.
///
/// # Safety
/// `s` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn pdc_swibra(s: *mut PdcState, ds: f64) -> PdcStatus {
    guard(|| {
        switching::swibra(state(s)?, ds)?;
        Ok(())
    })
}

/// Replaces the active parameters (1-based indices, primary first).
///
/// # Safety
/// `s` must be a live handle; `ilam` must hold `n` entries.
#[no_mangle]
pub unsafe extern "C" fn pdc_swipar(s: *mut PdcState, ilam: *const size_t, n: size_t) -> PdcStatus {
    guard(|| {
        if ilam.is_null() {
            return Err(null("ilam"));
        }
        let v = std::slice::from_raw_parts(ilam, n).to_vec();
        state(s)?.swipar(v)?;
        Ok(())
    })
}

/// Enters fold or branch-point continuation with `extra` (1-based) free.
///
/// # Safety
/// `s` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn pdc_spcontini(s: *mut PdcState, extra: size_t) -> PdcStatus {
    guard(|| {
        spcont::spcontini(state(s)?, extra)?;
        Ok(())
    })
}

/// Leaves fold or branch-point continuation.
///
/// # Safety
/// `s` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn pdc_spcontexit(s: *mut PdcState, primary: size_t) -> PdcStatus {
    guard(|| {
        spcont::spcontexit(state(s)?, primary)?;
        Ok(())
    })
}

/// Time integration; `semilinear` selects the single-factorization scheme.
///
/// # Safety
/// `s` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn pdc_time_integrate(
    s: *mut PdcState,
    dt: f64,
    nt: size_t,
    pmod: size_t,
    semilinear: bool,
) -> PdcStatus {
    guard(|| {
        let p = state(s)?;
        if semilinear {
            timeint::tints(p, dt, nt, pmod)?;
        } else {
            timeint::tint(p, dt, nt, pmod)?;
        }
        Ok(())
    })
}

/// Length of the unknown vector `u` (PDE part followed by parameters).
///
/// # Safety
/// `s` must be a live handle or NULL (returns 0).
#[no_mangle]
pub unsafe extern "C" fn pdc_u_len(s: *const PdcState) -> size_t {
    s.as_ref().map_or(0, |s| s.inner.u.len())
}

/// Number of PDE unknowns at the start of `u`.
///
/// # Safety
/// `s` must be a live handle or NULL (returns 0).
#[no_mangle]
pub unsafe extern "C" fn pdc_nu(s: *const PdcState) -> size_t {
    s.as_ref().map_or(0, |s| s.inner.nu)
}

/// Copies `u` into `buf` of length `len`.
///
/// # Safety
/// `s` must be a live handle; `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn pdc_get_u(s: *mut PdcState, buf: *mut f64, len: size_t) -> PdcStatus {
    guard(|| {
        let p = state(s)?;
        if buf.is_null() {
            return Err(null("buf"));
        }
        if len < p.u.len() {
            return Err(Fail(
                PdcStatus::BufferTooSmall,
                format!("buffer holds {len}, need {}", p.u.len()),
            ));
        }
        ptr::copy_nonoverlapping(p.u.as_ptr(), buf, p.u.len());
        Ok(())
    })
}

/// Parameter `i` (1-based).
///
/// # Safety
/// `s` must be a live handle; `out_value` writable.
#[no_mangle]
pub unsafe extern "C" fn pdc_get_param(s: *mut PdcState, i: size_t, out_value: *mut f64) -> PdcStatus {
    guard(|| {
        let o = out(out_value, "out_value")?;
        *o = state(s)?.param(i)?;
        Ok(())
    })
}

/// Sets parameter `i` (1-based); invalidates the tangent.
///
/// # Safety
/// `s` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn pdc_set_param(s: *mut PdcState, i: size_t, v: f64) -> PdcStatus {
    guard(|| {
        let p = state(s)?;
        p.set_param(i, v)?;
        p.tau = None;
        Ok(())
    })
}

/// Norm of the full residual at the current point.
///
/// # Safety
/// `s` must be a live handle; `out_value` writable.
#[no_mangle]
pub unsafe extern "C" fn pdc_residual_norm(s: *mut PdcState, out_value: *mut f64) -> PdcStatus {
    guard(|| {
        let o = out(out_value, "out_value")?;
        let p = state(s)?;
        *o = p.residual_norm(&p.residual(&p.u)?);
        Ok(())
    })
}

/// Point type of the current point (see the branch file `ptype` column).
///
/// # Safety
/// `s` must be a live handle or NULL (returns 0).
#[no_mangle]
pub unsafe extern "C" fn pdc_ptype(s: *const PdcState) -> i32 {
    s.as_ref().map_or(0, |s| s.inner.sol.ptype as i32)
}

/// Analytic against finite-difference derivatives; `out_spjac` receives NaN
/// when the model has no second derivative.
///
/// # Safety
/// `s` must be a live handle; both outputs writable.
#[no_mangle]
pub unsafe extern "C" fn pdc_check(s: *mut PdcState, out_jac: *mut f64, out_spjac: *mut f64) -> PdcStatus {
    guard(|| {
        let j = out(out_jac, "out_jac")?;
        let sp = out(out_spjac, "out_spjac")?;
        let (a, b) = demos::check(state(s)?)?;
        *j = a;
        *sp = b.unwrap_or(f64::NAN);
        Ok(())
    })
}

/// Writes the current point to `path`.
///
/// # Safety
/// `s` must be a live handle; `path` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn pdc_save_point(s: *mut PdcState, path: *const c_char) -> PdcStatus {
    guard(|| {
        let p = state(s)?;
        io::save_to(p, str_arg(path, "path")?.as_ref())?;
        Ok(())
    })
}

#[cfg(test)]
mod tests;
