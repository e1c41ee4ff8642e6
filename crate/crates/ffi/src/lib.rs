//! C ABI for `khessian`.
//!
//! Objects live behind opaque handles that the caller releases with the
//! matching `*_free`. Every call returns a [`KhStatus`]; on failure the
//! message is kept per thread and can be fetched with
//! [`kh_last_error_message`]. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::CString;
use std::os::raw::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use khessian::barenblatt::BarenblattSolution;
use khessian::grid::{RadialGrid, RadialProfile};
use khessian::operator::apply_sk_radial;
use khessian::params::{make_params, ProblemParams};
use khessian::stationary::{check_ball_bound, check_torsion_bound, solve_on_ball, StationarySolution};
use khessian::Error;

/// Result of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KhStatus {
    Ok = 0,
    NullPointer = 1,
    /// `(n, k)` or another parameter outside its domain.
    ParamDomain = 2,
    InvalidArgument = 3,
    /// A caller buffer is shorter than the data.
    BufferTooSmall = 4,
    /// Iteration failed to converge or a tolerance was missed.
    Numerical = 5,
    /// Internal invariant breach; please report.
    Invariant = 6,
    Panic = 7,
}

/// Problem dimension, order and derived constants.
pub struct KhParams(ProblemParams);

/// Stationary profile sampled on a uniform grid over a ball.
pub struct KhStationary(StationarySolution);

/// One member of the k-Barenblatt family.
pub struct KhBarenblatt(BarenblattSolution);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> KhStatus {
    match err {
        Error::ParamDomain(_) | Error::StationaryRequiresK2(_) => KhStatus::ParamDomain,
        Error::NoConvergence { .. } | Error::NoZeroCrossing { .. } => KhStatus::Numerical,
        Error::Invariant(_)
        | Error::Unstable { .. }
        | Error::AdmissibilityLost { .. }
        | Error::NegativeRoot { .. } => KhStatus::Invariant,
        _ => KhStatus::InvalidArgument,
    }
}

/// Runs `f`, recording the error message and mapping panics.
fn guard(f: impl FnOnce() -> Result<(), (KhStatus, String)>) -> KhStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => KhStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            KhStatus::Panic
        }
    }
}

fn core(err: Error) -> (KhStatus, String) {
    (status_of(&err), err.to_string())
}

fn null(what: &str) -> (KhStatus, String) {
    (KhStatus::NullPointer, format!("{what} is null"))
}

/// # Safety
/// `p` must be null or a valid pointer to `T`.
unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, (KhStatus, String)> {
    p.as_ref().ok_or_else(|| null(what))
}

/// # Safety
/// `out` must be null or valid for a write of `T`.
unsafe fn write_out<T>(out: *mut T, value: T, what: &str) -> Result<(), (KhStatus, String)> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

/// Boxes `value` into a new handle at `*out`; nothing is allocated when
/// `out` is null.
///
/// # Safety
/// `out` must be null or valid for a pointer write.
unsafe fn store<T>(out: *mut *mut T, value: T) -> Result<(), (KhStatus, String)> {
    if out.is_null() {
        return Err(null("out"));
    }
    out.write(Box::into_raw(Box::new(value)));
    Ok(())
}

/// Length in bytes of the last error message on this thread, including the
/// terminating NUL; 0 when there is none.
#[no_mangle]
pub extern "C" fn kh_last_error_length() -> usize {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(0, |c| c.as_bytes_with_nul().len()))
}

/// Copies the last error message (NUL-terminated, truncated to `len`) into
/// `buf`. Returns the full length including the NUL, or 0 if there is none.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes of writes.
#[no_mangle]
pub unsafe extern "C" fn kh_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else { return 0 };
        let bytes = msg.as_bytes_with_nul();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len);
            ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n - 1) = 0;
        }
        bytes.len()
    })
}

/// Validates `(n, k)` and stores a new handle in `*out`.
///
/// # Safety
/// `out` must be valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn kh_params_new(n: usize, k: usize, out: *mut *mut KhParams) -> KhStatus {
    guard(|| {
        let p = make_params(n, k).map_err(core)?;
        store(out, KhParams(p))
    })
}

/// # Safety
/// `p` must be null or a handle from [`kh_params_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn kh_params_free(p: *mut KhParams) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// `binom(n, k) / n`, `alpha` and `beta` of the similarity scaling.
///
/// # Safety
/// `p` must be a live handle; each output must be null (skipped) or writable.
#[no_mangle]
pub unsafe extern "C" fn kh_params_constants(
    p: *const KhParams,
    c_nk: *mut f64,
    alpha: *mut f64,
    beta: *mut f64,
) -> KhStatus {
    guard(|| {
        let p = &deref(p, "params")?.0;
        for (out, v) in [(c_nk, p.c_nk), (alpha, p.alpha), (beta, p.beta)] {
            if !out.is_null() {
                out.write(v);
            }
        }
        Ok(())
    })
}

/// Applies the discrete radial `S_k` to `values[0..=cells]` on a ball of
/// radius `radius`, writing `cells + 1` entries to `out`.
///
/// # Safety
/// `values` and `out` must each hold `cells + 1` doubles.
#[no_mangle]
pub unsafe extern "C" fn kh_apply_sk_radial(
    p: *const KhParams,
    radius: f64,
    cells: usize,
    values: *const f64,
    out: *mut f64,
) -> KhStatus {
    guard(|| {
        let p = &deref(p, "params")?.0;
        if values.is_null() || out.is_null() {
            return Err(null("values/out"));
        }
        let grid = RadialGrid::new(radius, cells).map_err(core)?;
        let input = std::slice::from_raw_parts(values, cells + 1).to_vec();
        let profile = RadialProfile::new(grid, input).map_err(core)?;
        let sk = apply_sk_radial(&profile, p).map_err(core)?;
        ptr::copy_nonoverlapping(sk.values().as_ptr(), out, cells + 1);
        Ok(())
    })
}

/// Shoots the stationary profile and rescales it onto the ball of radius
/// `radius` with `cells` cells.
///
/// # Safety
/// `p` must be a live handle and `out` valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn kh_stationary_solve(
    p: *const KhParams,
    radius: f64,
    cells: usize,
    ode_steps: usize,
    out: *mut *mut KhStationary,
) -> KhStatus {
    guard(|| {
        let p = &deref(p, "params")?.0;
        let sol = solve_on_ball(radius, p, cells, ode_steps).map_err(core)?;
        store(out, KhStationary(sol))
    })
}

/// # Safety
/// `s` must be null or a handle from [`kh_stationary_solve`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn kh_stationary_free(s: *mut KhStationary) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Number of grid nodes (`cells + 1`).
///
/// # Safety
/// `s` must be a live handle and `len` writable.
#[no_mangle]
pub unsafe extern "C" fn kh_stationary_len(s: *const KhStationary, len: *mut usize) -> KhStatus {
    guard(|| {
        let s = &deref(s, "stationary")?.0;
        write_out(len, s.profile.len(), "len")
    })
}

/// Copies node radii and profile values. `r` may be null.
///
/// # Safety
/// `theta` (and `r` if non-null) must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn kh_stationary_profile(
    s: *const KhStationary,
    r: *mut f64,
    theta: *mut f64,
    len: usize,
) -> KhStatus {
    guard(|| {
        let s = &deref(s, "stationary")?.0;
        if theta.is_null() {
            return Err(null("theta"));
        }
        let values = s.profile.values();
        if len < values.len() {
            return Err((
                KhStatus::BufferTooSmall,
                format!("buffer holds {len} values, profile has {}", values.len()),
            ));
        }
        ptr::copy_nonoverlapping(values.as_ptr(), theta, values.len());
        if !r.is_null() {
            for (i, x) in s.profile.grid().nodes().enumerate() {
                r.add(i).write(x);
            }
        }
        Ok(())
    })
}

/// Summary of a stationary solve.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct KhStationaryInfo {
    pub residual: f64,
    pub sup_norm: f64,
    pub center_value: f64,
    pub boundary_slope: f64,
    /// Zero of the unit shot before rescaling.
    pub crossing_radius: f64,
    pub ball_bound: f64,
    pub torsion_bound: f64,
    pub bounds_satisfied: bool,
}

/// # Safety
/// `s` must be a live handle and `info` writable.
#[no_mangle]
pub unsafe extern "C" fn kh_stationary_info(s: *const KhStationary, info: *mut KhStationaryInfo) -> KhStatus {
    guard(|| {
        let s = &deref(s, "stationary")?.0;
        let ball = check_ball_bound(s, &s.params);
        let torsion = check_torsion_bound(s, &s.params);
        let value = KhStationaryInfo {
            residual: s.residual,
            sup_norm: s.sup_norm,
            center_value: s.center_value,
            boundary_slope: s.boundary_slope,
            crossing_radius: s.crossing_radius,
            ball_bound: ball.bound_value,
            torsion_bound: torsion.bound_value,
            bounds_satisfied: ball.satisfied && torsion.satisfied,
        };
        write_out(info, value, "info")
    })
}

/// Family member with profile constant `c`.
///
/// # Safety
/// `p` must be a live handle and `out` valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn kh_barenblatt_new(
    p: *const KhParams,
    c: f64,
    out: *mut *mut KhBarenblatt,
) -> KhStatus {
    guard(|| {
        let p = &deref(p, "params")?.0;
        let sol = BarenblattSolution::new(p, c).map_err(core)?;
        store(out, KhBarenblatt(sol))
    })
}

/// Family member carrying total mass `mass`.
///
/// # Safety
/// `p` must be a live handle and `out` valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn kh_barenblatt_from_mass(
    p: *const KhParams,
    mass: f64,
    out: *mut *mut KhBarenblatt,
) -> KhStatus {
    guard(|| {
        let p = &deref(p, "params")?.0;
        let sol = BarenblattSolution::from_mass(p, mass).map_err(core)?;
        store(out, KhBarenblatt(sol))
    })
}

/// # Safety
/// `b` must be null or a live Barenblatt handle.
#[no_mangle]
pub unsafe extern "C" fn kh_barenblatt_free(b: *mut KhBarenblatt) {
    if !b.is_null() {
        drop(Box::from_raw(b));
    }
}

/// Profile constant, closed-form mass and `r0`; outputs may be null.
///
/// # Safety
/// `b` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn kh_barenblatt_constants(
    b: *const KhBarenblatt,
    c: *mut f64,
    mass: *mut f64,
    r0: *mut f64,
) -> KhStatus {
    guard(|| {
        let b = &deref(b, "barenblatt")?.0;
        for (out, v) in [(c, b.c), (mass, b.mass), (r0, b.r0)] {
            if !out.is_null() {
                out.write(v);
            }
        }
        Ok(())
    })
}

/// `U(t, r)`.
///
/// # Safety
/// `b` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn kh_barenblatt_value(
    b: *const KhBarenblatt,
    t: f64,
    r: f64,
    out: *mut f64,
) -> KhStatus {
    guard(|| {
        let b = &deref(b, "barenblatt")?.0;
        let v = b.value(t, r).map_err(core)?;
        write_out(out, v, "out")
    })
}

/// Radius of the support at time `t`.
///
/// # Safety
/// `b` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn kh_barenblatt_support_radius(
    b: *const KhBarenblatt,
    t: f64,
    out: *mut f64,
) -> KhStatus {
    guard(|| {
        let b = &deref(b, "barenblatt")?.0;
        let v = b.support_radius(t).map_err(core)?;
        write_out(out, v, "out")
    })
}
