//! C ABI over the taxislab simulator.
//!
//! Functions return a [`TaxislabStatus`]. On failure the message is kept per
//! thread and can be read with [`taxislab_last_error_message`]. Handles are
//! opaque and must be released with [`taxislab_simulation_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use taxislab::diagnostics::DiagnosticsRow;
use taxislab::experiments::{cmd_check, ScenarioConfig};
use taxislab::solver::{detect_blowup, BlowupStatus, Simulation};
use taxislab::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TaxislabStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    Config = 4,
    Numerical = 5,
    Io = 6,
    BufferTooSmall = 7,
    UnknownField = 8,
    /// The run stopped because `‖u‖∞` crossed the blow-up threshold or
    /// jumped by more than the allowed factor in one step.
    BlowUp = 9,
    /// Hypothesis check ran but at least one condition failed.
    CheckFailed = 10,
    Panic = 99,
}

/// Diagnostics of the current state, mirroring one timeseries row.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct TaxislabDiagnostics {
    pub t: f64,
    pub mass_u: f64,
    pub mass_w: f64,
    pub mass_h: f64,
    pub max_u: f64,
    pub max_h: f64,
    pub max_v: f64,
    pub max_w: f64,
    pub min_v: f64,
    pub entropy_u: f64,
    pub dirichlet_h: f64,
    pub dirichlet_v: f64,
    pub dirichlet_w: f64,
    pub l2_w: f64,
    pub energy: f64,
    pub dissipation: f64,
    pub dt: f64,
    pub clipped_mass: f64,
    pub lin_iterations: u64,
}

impl From<DiagnosticsRow> for TaxislabDiagnostics {
    fn from(r: DiagnosticsRow) -> Self {
        Self {
            t: r.t,
            mass_u: r.mass_u,
            mass_w: r.mass_w,
            mass_h: r.mass_h,
            max_u: r.max_u,
            max_h: r.max_h,
            max_v: r.max_v,
            max_w: r.max_w,
            min_v: r.min_v,
            entropy_u: r.entropy_u,
            dirichlet_h: r.dirichlet_h,
            dirichlet_v: r.dirichlet_v,
            dirichlet_w: r.dirichlet_w,
            l2_w: r.l2_w,
            energy: r.energy,
            dissipation: r.dissipation,
            dt: r.dt,
            clipped_mass: r.clipped_mass,
            lin_iterations: r.lin_iterations as u64,
        }
    }
}

/// Opaque simulation handle.
pub struct TaxislabSimulation {
    sim: Simulation,
    blown_up: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(err: &Error) -> TaxislabStatus {
    match err {
        Error::Config { .. }
        | Error::UnknownKey { .. }
        | Error::MissingFields { .. }
        | Error::Json(_) => TaxislabStatus::Config,
        Error::Input(_) => TaxislabStatus::InvalidArgument,
        Error::NonFinite { .. } | Error::LinearSolve { .. } => TaxislabStatus::Numerical,
        Error::Io { .. } => TaxislabStatus::Io,
    }
}

fn fail(status: TaxislabStatus, msg: impl Into<String>) -> TaxislabStatus {
    set_error(msg);
    status
}

fn from_error(err: Error) -> TaxislabStatus {
    let status = status_of(&err);
    fail(status, err.to_string())
}

/// Runs `f`, turning panics into [`TaxislabStatus::Panic`].
fn guard(f: impl FnOnce() -> TaxislabStatus) -> TaxislabStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => fail(TaxislabStatus::Panic, "internal panic"),
    }
}

unsafe fn read_str<'a>(s: *const c_char) -> Result<&'a str, TaxislabStatus> {
    if s.is_null() {
        return Err(fail(TaxislabStatus::NullPointer, "null string argument"));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| fail(TaxislabStatus::InvalidUtf8, "argument is not valid UTF-8"))
}

unsafe fn handle<'a>(
    sim: *mut TaxislabSimulation,
) -> Result<&'a mut TaxislabSimulation, TaxislabStatus> {
    sim.as_mut()
        .ok_or_else(|| fail(TaxislabStatus::NullPointer, "null simulation handle"))
}

macro_rules! tri {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(s) => return s,
        }
    };
}

/// Creates a simulation at `t = 0` from a scenario JSON document.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn taxislab_simulation_from_json(
    json: *const c_char,
    out: *mut *mut TaxislabSimulation,
) -> TaxislabStatus {
    guard(|| {
        if out.is_null() {
            return fail(TaxislabStatus::NullPointer, "null output pointer");
        }
        *out = ptr::null_mut();
        let text = tri!(read_str(json));
        let sim = ScenarioConfig::from_json_str(text)
            .and_then(|cfg| cfg.scenario("ffi"))
            .and_then(Simulation::new);
        match sim {
            Ok(sim) => {
                *out = Box::into_raw(Box::new(TaxislabSimulation {
                    sim,
                    blown_up: false,
                }));
                TaxislabStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `sim` must come from [`taxislab_simulation_from_json`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn taxislab_simulation_free(sim: *mut TaxislabSimulation) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

fn advance(h: &mut TaxislabSimulation, target: f64) -> Result<f64, TaxislabStatus> {
    if h.blown_up {
        return Err(fail(
            TaxislabStatus::BlowUp,
            "simulation already stopped by blow-up detection",
        ));
    }
    let previous = h.sim.state().u.max_abs();
    let report = h.sim.step_toward(target).map_err(from_error)?;
    if detect_blowup(h.sim.state(), &h.sim.scenario().solver, Some(previous)) != BlowupStatus::None
    {
        h.blown_up = true;
        return Err(fail(
            TaxislabStatus::BlowUp,
            format!("blow-up detected at t = {}", h.sim.time()),
        ));
    }
    Ok(report.dt)
}

/// Advances one step toward the configured horizon; `dt_out` may be null.
/// Does nothing once the horizon is reached.
///
/// # Safety
/// `sim` must be a live handle; `dt_out` null or valid.
#[no_mangle]
pub unsafe extern "C" fn taxislab_simulation_step(
    sim: *mut TaxislabSimulation,
    dt_out: *mut f64,
) -> TaxislabStatus {
    guard(|| {
        let h = tri!(handle(sim));
        let dt = if h.sim.finished() {
            0.0
        } else {
            tri!(advance(h, f64::INFINITY))
        };
        if let Some(d) = dt_out.as_mut() {
            *d = dt;
        }
        TaxislabStatus::Ok
    })
}

/// Steps until `t` (clamped to the horizon), landing on it exactly.
///
/// # Safety
/// `sim` must be a live handle; `steps_out` null or valid.
#[no_mangle]
pub unsafe extern "C" fn taxislab_simulation_run_until(
    sim: *mut TaxislabSimulation,
    t: f64,
    steps_out: *mut u64,
) -> TaxislabStatus {
    guard(|| {
        let h = tri!(handle(sim));
        if !t.is_finite() {
            return fail(
                TaxislabStatus::InvalidArgument,
                "target time must be finite",
            );
        }
        let target = t.min(h.sim.scenario().solver.t_end);
        let mut steps = 0u64;
        let mut status = TaxislabStatus::Ok;
        while target - h.sim.time() > 1e-12 * target.abs().max(1.0) {
            if let Err(s) = advance(h, target) {
                status = s;
                break;
            }
            steps += 1;
        }
        if let Some(n) = steps_out.as_mut() {
            *n = steps;
        }
        status
    })
}

/// Current simulation time; NaN for a null handle.
///
/// # Safety
/// `sim` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn taxislab_simulation_time(sim: *const TaxislabSimulation) -> f64 {
    sim.as_ref().map_or(f64::NAN, |h| h.sim.time())
}

/// # Safety
/// `sim` must be a live handle; `nx`, `ny` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn taxislab_simulation_grid_size(
    sim: *const TaxislabSimulation,
    nx: *mut usize,
    ny: *mut usize,
) -> TaxislabStatus {
    guard(|| {
        let Some(h) = sim.as_ref() else {
            return fail(TaxislabStatus::NullPointer, "null simulation handle");
        };
        if nx.is_null() || ny.is_null() {
            return fail(TaxislabStatus::NullPointer, "null output pointer");
        }
        let g = h.sim.state().grid();
        *nx = g.nx();
        *ny = g.ny();
        TaxislabStatus::Ok
    })
}

/// Copies field `name` (`"u"`, `"h"`, `"v"` or `"w"`) in row-major order
/// (`index = i + j·nx`). `len` must be at least `nx·ny`.
///
/// # Safety
/// `sim` must be a live handle, `name` NUL-terminated, `buf` valid for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn taxislab_simulation_copy_field(
    sim: *const TaxislabSimulation,
    name: *const c_char,
    buf: *mut f64,
    len: usize,
) -> TaxislabStatus {
    guard(|| {
        let Some(h) = sim.as_ref() else {
            return fail(TaxislabStatus::NullPointer, "null simulation handle");
        };
        let name = tri!(read_str(name));
        let Some((_, field)) = h.sim.state().fields().into_iter().find(|(n, _)| *n == name) else {
            return fail(
                TaxislabStatus::UnknownField,
                format!("unknown field `{name}`"),
            );
        };
        let values = field.values();
        if buf.is_null() {
            return fail(TaxislabStatus::NullPointer, "null buffer");
        }
        if len < values.len() {
            return fail(
                TaxislabStatus::BufferTooSmall,
                format!("need {} values, buffer holds {len}", values.len()),
            );
        }
        ptr::copy_nonoverlapping(values.as_ptr(), buf, values.len());
        TaxislabStatus::Ok
    })
}

/// # Safety
/// `sim` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn taxislab_simulation_diagnostics(
    sim: *const TaxislabSimulation,
    out: *mut TaxislabDiagnostics,
) -> TaxislabStatus {
    guard(|| {
        let Some(h) = sim.as_ref() else {
            return fail(TaxislabStatus::NullPointer, "null simulation handle");
        };
        let Some(out) = out.as_mut() else {
            return fail(TaxislabStatus::NullPointer, "null output pointer");
        };
        *out = h.sim.diagnostics_row().into();
        TaxislabStatus::Ok
    })
}

/// Checks the scenario's kinetics against its `hypothesis_budget` and
/// writes the report table to `*report_out` (free with
/// [`taxislab_string_free`]). Returns `CheckFailed` when any condition fails.
///
/// # Safety
/// `json` must be NUL-terminated and `report_out` valid.
#[no_mangle]
pub unsafe extern "C" fn taxislab_check_hypotheses_json(
    json: *const c_char,
    report_out: *mut *mut c_char,
) -> TaxislabStatus {
    guard(|| {
        if report_out.is_null() {
            return fail(TaxislabStatus::NullPointer, "null output pointer");
        }
        *report_out = ptr::null_mut();
        let text = tri!(read_str(json));
        let report = match ScenarioConfig::from_json_str(text).and_then(|cfg| cmd_check(&cfg)) {
            Ok(r) => r,
            Err(e) => return from_error(e),
        };
        let table = CString::new(report.to_table()).expect("table has no NULs");
        *report_out = table.into_raw();
        if report.all_passed() {
            TaxislabStatus::Ok
        } else {
            TaxislabStatus::CheckFailed
        }
    })
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn taxislab_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Copies the calling thread's last error message into `buf` (truncated,
/// always NUL-terminated when `len > 0`). Returns the full message length
/// including the terminator, or 0 when there is no error.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn taxislab_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else {
            return 0;
        };
        let bytes = msg.as_bytes_with_nul();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len);
            ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, n);
            *buf.add(n - 1) = 0;
        }
        bytes.len()
    })
}
