//! C interface to `asqg-core`.
//!
//! Every function returns an [`AsqgStatus`]; results come back through out
//! pointers. Tables and simulations are opaque handles released with their
//! `_free` functions. The message of the last failure on the calling thread is
//! available from [`asqg_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use asqg_core::contour::{grad_e, rhs_f};
use asqg_core::dispersion::{omega, FrequencyTable};
use asqg_core::integrator::{SimConfig, Stepper, BLOW_UP_LIMIT};
use asqg_core::quadrature::QuadratureRule;
use asqg_core::{build_table, Alpha, Error, GridFunction, SpectralField};

/// Status codes shared by all functions.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AsqgStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidAlpha = 2,
    InvalidArgument = 3,
    Domain = 4,
    InvariantViolation = 5,
    BlowUp = 6,
    Internal = 7,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> AsqgStatus {
    match err {
        Error::InvalidAlpha(_) | Error::AlphaIsOne(_) => AsqgStatus::InvalidAlpha,
        Error::InvalidArgument(_) | Error::Config(_) => AsqgStatus::InvalidArgument,
        Error::Domain(_) | Error::Pole(_) | Error::RemovableSingularity { .. } => AsqgStatus::Domain,
        Error::InvariantViolation { .. } => AsqgStatus::InvariantViolation,
        Error::BlowUp { .. } => AsqgStatus::BlowUp,
        Error::Step { source, .. } => status_of(source),
        _ => AsqgStatus::Internal,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (AsqgStatus, String)>) -> AsqgStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => AsqgStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            AsqgStatus::Internal
        }
    }
}

trait IntoFfi<T> {
    fn ffi(self) -> Result<T, (AsqgStatus, String)>;
}

impl<T> IntoFfi<T> for asqg_core::Result<T> {
    fn ffi(self) -> Result<T, (AsqgStatus, String)> {
        self.map_err(|e| (status_of(&e), e.to_string()))
    }
}

fn null(name: &str) -> (AsqgStatus, String) {
    (AsqgStatus::NullPointer, format!("{name} is null"))
}

/// Frequency table handle.
pub struct AsqgTable {
    inner: FrequencyTable,
}

/// Simulation handle: configuration, current state and time.
pub struct AsqgSimulation {
    stepper: Stepper,
    state: SpectralField,
    time: f64,
    dt: f64,
}

/// Copies the last error message of this thread into `buf` (NUL terminated, truncated to `len`).
///
/// Returns the full message length without the terminator, or 0 when there is none.
///
/// # Safety
/// `buf` must be null or valid for `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn asqg_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else { return 0 };
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            // SAFETY: the caller guarantees `len` writable bytes at `buf`.
            unsafe {
                ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, n);
                *buf.add(n) = 0;
            }
        }
        bytes.len()
    })
}

/// `omega(j)` for the given `alpha`.
///
/// # Safety
/// `out` must be null or point to writable memory for one `double`.
#[no_mangle]
pub unsafe extern "C" fn asqg_omega(alpha: f64, j: i64, out: *mut f64) -> AsqgStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let a = Alpha::new(alpha).ffi()?;
        // SAFETY: checked non-null; the caller guarantees validity.
        unsafe { *out = omega(a, j) };
        Ok(())
    })
}

/// Builds and certifies the frequency table for `0 <= j <= j_max`.
///
/// # Safety
/// `out` must be null or point to writable memory for one pointer.
#[no_mangle]
pub unsafe extern "C" fn asqg_table_new(alpha: f64, j_max: usize, out: *mut *mut AsqgTable) -> AsqgStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let a = Alpha::new(alpha).ffi()?;
        let inner = build_table(a, j_max).ffi()?;
        // SAFETY: checked non-null.
        unsafe { *out = Box::into_raw(Box::new(AsqgTable { inner })) };
        Ok(())
    })
}

/// Releases a table; null is ignored.
///
/// # Safety
/// `table` must come from [`asqg_table_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn asqg_table_free(table: *mut AsqgTable) {
    if !table.is_null() {
        // SAFETY: ownership returns from the caller.
        drop(unsafe { Box::from_raw(table) });
    }
}

/// `omega(j)` from the table, `|j| <= j_max`.
///
/// # Safety
/// `table` must be a live handle and `out` writable for one `double`.
#[no_mangle]
pub unsafe extern "C" fn asqg_table_omega(table: *const AsqgTable, j: i64, out: *mut f64) -> AsqgStatus {
    guard(|| {
        // SAFETY: the caller guarantees a live handle or null.
        let t = unsafe { table.as_ref() }.ok_or_else(|| null("table"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        if j.unsigned_abs() as usize > t.inner.j_max() {
            return Err((AsqgStatus::InvalidArgument, format!("|j| = {} exceeds j_max", j.abs())));
        }
        // SAFETY: checked non-null.
        unsafe { *out = t.inner.omega(j) };
        Ok(())
    })
}

/// Minimum three-wave gap over `|n|, |j| <= range`; the realizing triple goes to `n`, `j`, `k`.
///
/// # Safety
/// `table` must be a live handle; each out pointer must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn asqg_table_min_gap(
    table: *const AsqgTable,
    range: usize,
    gap: *mut f64,
    n: *mut i64,
    j: *mut i64,
    k: *mut i64,
) -> AsqgStatus {
    guard(|| {
        // SAFETY: the caller guarantees a live handle or null.
        let t = unsafe { table.as_ref() }.ok_or_else(|| null("table"))?;
        if gap.is_null() {
            return Err(null("gap"));
        }
        let g = t.inner.min_three_wave_gap(range).ffi()?;
        // SAFETY: each pointer is checked before writing.
        unsafe {
            *gap = g.gap;
            if !n.is_null() {
                *n = g.n;
            }
            if !j.is_null() {
                *j = g.j;
            }
            if !k.is_null() {
                *k = g.k;
            }
        }
        Ok(())
    })
}

unsafe fn grid_from<'a>(ptr: *const f64, n: usize) -> Result<&'a [f64], (AsqgStatus, String)> {
    if ptr.is_null() {
        return Err(null("input"));
    }
    // SAFETY: the caller guarantees `n` readable values.
    Ok(unsafe { slice::from_raw_parts(ptr, n) })
}

unsafe fn write_grid(out: *mut f64, g: &GridFunction) -> Result<(), (AsqgStatus, String)> {
    if out.is_null() {
        return Err(null("out"));
    }
    // SAFETY: the caller guarantees `g.n()` writable values.
    unsafe { ptr::copy_nonoverlapping(g.samples().as_ptr(), out, g.n()) };
    Ok(())
}

/// `grad E(f)` on `n` grid samples with `m` quadrature nodes.
///
/// # Safety
/// `f` must hold `n` readable values and `out` `n` writable values.
#[no_mangle]
pub unsafe extern "C" fn asqg_grad_e(alpha: f64, n: usize, m: usize, f: *const f64, out: *mut f64) -> AsqgStatus {
    guard(|| {
        let a = Alpha::new(alpha).ffi()?;
        let f = GridFunction::new(unsafe { grid_from(f, n) }?.to_vec()).ffi()?;
        let g = grad_e(&f, a, &QuadratureRule::new(m).ffi()?).ffi()?;
        unsafe { write_grid(out, &g) }
    })
}

/// `d/dx grad E(f)` on `n` grid samples with `m` quadrature nodes.
///
/// # Safety
/// `f` must hold `n` readable values and `out` `n` writable values.
#[no_mangle]
pub unsafe extern "C" fn asqg_rhs_f(alpha: f64, n: usize, m: usize, f: *const f64, out: *mut f64) -> AsqgStatus {
    guard(|| {
        let a = Alpha::new(alpha).ffi()?;
        let f = GridFunction::new(unsafe { grid_from(f, n) }?.to_vec()).ffi()?;
        let g = rhs_f(&f, a, &QuadratureRule::new(m).ffi()?).ffi()?;
        unsafe { write_grid(out, &g) }
    })
}

/// Creates a simulation from `n` samples of `f(0)`.
///
/// `m = 0` selects `4 n` quadrature nodes and `dt <= 0` the stability bound.
///
/// # Safety
/// `f0` must hold `n` readable values; `out` must be writable for one pointer.
#[no_mangle]
pub unsafe extern "C" fn asqg_sim_new(
    alpha: f64,
    n: usize,
    m: usize,
    dt: f64,
    f0: *const f64,
    out: *mut *mut AsqgSimulation,
) -> AsqgStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let a = Alpha::new(alpha).ffi()?;
        let f = GridFunction::new(unsafe { grid_from(f0, n) }?.to_vec()).ffi()?;
        let mut cfg = SimConfig::new(a, n, 0.0);
        cfg.m = (m > 0).then_some(m);
        cfg.dt = (dt > 0.0).then_some(dt);
        let stepper = Stepper::new(&cfg).ffi()?;
        let sim = AsqgSimulation {
            stepper,
            state: f.spectrum(),
            time: 0.0,
            dt: cfg.time_step(),
        };
        // SAFETY: checked non-null.
        unsafe { *out = Box::into_raw(Box::new(sim)) };
        Ok(())
    })
}

/// Releases a simulation; null is ignored.
///
/// # Safety
/// `sim` must come from [`asqg_sim_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn asqg_sim_free(sim: *mut AsqgSimulation) {
    if !sim.is_null() {
        // SAFETY: ownership returns from the caller.
        drop(unsafe { Box::from_raw(sim) });
    }
}

/// Advances by `steps` time steps. On failure the state stays at the last good step.
///
/// # Safety
/// `sim` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn asqg_sim_step(sim: *mut AsqgSimulation, steps: u64) -> AsqgStatus {
    guard(|| {
        // SAFETY: the caller guarantees a live handle or null.
        let s = unsafe { sim.as_mut() }.ok_or_else(|| null("sim"))?;
        for _ in 0..steps {
            let next = s.stepper.step(&s.state, s.dt).ffi()?;
            let sup = next.to_grid().sup_norm();
            if !(sup <= BLOW_UP_LIMIT) {
                return Err(Error::BlowUp { t: s.time + s.dt, sup }).ffi();
            }
            s.state = next;
            s.time += s.dt;
        }
        Ok(())
    })
}

/// Current time and time step.
///
/// # Safety
/// `sim` must be a live handle; `time` and `dt` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn asqg_sim_time(sim: *const AsqgSimulation, time: *mut f64, dt: *mut f64) -> AsqgStatus {
    guard(|| {
        // SAFETY: the caller guarantees a live handle or null.
        let s = unsafe { sim.as_ref() }.ok_or_else(|| null("sim"))?;
        // SAFETY: each pointer is checked before writing.
        unsafe {
            if !time.is_null() {
                *time = s.time;
            }
            if !dt.is_null() {
                *dt = s.dt;
            }
        }
        Ok(())
    })
}

/// Copies the `n` grid samples of the current `f` into `out`.
///
/// # Safety
/// `sim` must be a live handle and `out` writable for `n` values.
#[no_mangle]
pub unsafe extern "C" fn asqg_sim_state(sim: *const AsqgSimulation, n: usize, out: *mut f64) -> AsqgStatus {
    guard(|| {
        // SAFETY: the caller guarantees a live handle or null.
        let s = unsafe { sim.as_ref() }.ok_or_else(|| null("sim"))?;
        if n != s.state.n() {
            return Err((
                AsqgStatus::InvalidArgument,
                format!("buffer holds {n} values, state has {}", s.state.n()),
            ));
        }
        unsafe { write_grid(out, &s.state.to_grid()) }
    })
}
