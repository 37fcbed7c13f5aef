//! C ABI for the sigma2 curvature engine.
//!
//! Every fallible function returns a [`Sigma2Status`]. On anything other
//! than `SIGMA2_STATUS_OK` a message is available from
//! [`sigma2_last_error`] on the same thread. Handles are opaque and must be
//! released with their matching `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use sigma2::curvature::curvature_data;
use sigma2::flow::{flow_run, init_grid_with_t, FlowError, FlowState, TrajectoryRow};
use sigma2::functionals::ResidualRecord;
use sigma2::identities::{run_suite, SuiteConfig};
use sigma2::metric::{catalog_metric, load_metric_spec, MetricChart, MetricError};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sigma2Status {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    /// Malformed metric document or expression.
    Parse = 3,
    UnknownMetric = 4,
    /// Point outside the chart's domain, or a degenerate metric there.
    Domain = 5,
    InvalidArgument = 6,
    /// The flow could not find a descent step. The handle keeps the last
    /// accepted state.
    Stalled = 7,
    /// A flow step left the positive-definite region.
    Degenerate = 8,
    Panic = 9,
}

/// A parsed metric chart.
pub struct Sigma2Chart(MetricChart);

/// A metric on a periodic grid together with its trajectory so far.
pub struct Sigma2Flow {
    state: FlowState,
    rows: Vec<TrajectoryRow>,
}

/// Residuals of the critical-point equations at one point.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Sigma2Residuals {
    pub scalar_curvature: f64,
    pub grad_ft_norm: f64,
    pub eq1_norm: f64,
    pub eq2_value: f64,
    pub weitzenbock_residual: f64,
    pub pde_residual: f64,
    pub cor34_slack: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Sigma2TrajectoryRow {
    pub step: usize,
    pub energy: f64,
    pub grad_norm: f64,
    pub max_abs_ric: f64,
    pub max_neg_r: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl ToString) {
    let msg = CString::new(msg.to_string().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

struct Failure(Sigma2Status, String);

impl From<MetricError> for Failure {
    fn from(e: MetricError) -> Self {
        let status = match e {
            MetricError::UnknownMetric(_) => Sigma2Status::UnknownMetric,
            MetricError::GuardViolation { .. }
            | MetricError::NotPositiveDefinite { .. }
            | MetricError::SingularInverse { .. }
            | MetricError::Jet(_) => Sigma2Status::Domain,
            _ => Sigma2Status::Parse,
        };
        Failure(status, e.to_string())
    }
}

impl From<FlowError> for Failure {
    fn from(e: FlowError) -> Self {
        let status = match e {
            FlowError::Metric(m) => return m.into(),
            FlowError::Stalled { .. } => Sigma2Status::Stalled,
            FlowError::Degenerate { .. } => Sigma2Status::Degenerate,
            _ => Sigma2Status::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

fn fail(status: Sigma2Status, msg: impl ToString) -> Failure {
    Failure(status, msg.to_string())
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> Sigma2Status {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => Sigma2Status::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            Sigma2Status::Panic
        }
    }
}

unsafe fn text<'a>(s: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if s.is_null() {
        return Err(fail(Sigma2Status::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(s).to_str().map_err(|_| fail(Sigma2Status::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn get<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| fail(Sigma2Status::NullPointer, format!("{what} is null")))
}

unsafe fn get_mut<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| fail(Sigma2Status::NullPointer, format!("{what} is null")))
}

unsafe fn point(p: *const f64) -> Result<[f64; 3], Failure> {
    if p.is_null() {
        return Err(fail(Sigma2Status::NullPointer, "point is null"));
    }
    let q = [*p, *p.add(1), *p.add(2)];
    if q.iter().all(|c| c.is_finite()) {
        Ok(q)
    } else {
        Err(fail(Sigma2Status::InvalidArgument, "point has a non-finite coordinate"))
    }
}

/// Message for the most recent failure on this thread, or an empty string.
/// The pointer stays valid until the next call into this library on the
/// same thread.
#[no_mangle]
pub extern "C" fn sigma2_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sigma2_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Looks up a catalog metric (`flat`, `round_sphere`, `gv_example`,
/// `warped_template:<expr>`).
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sigma2_chart_from_catalog(name: *const c_char, out: *mut *mut Sigma2Chart) -> Sigma2Status {
    guard(|| {
        let out = get_mut(out, "out")?;
        let chart = catalog_metric(text(name, "name")?)?;
        *out = Box::into_raw(Box::new(Sigma2Chart(chart)));
        Ok(())
    })
}

/// Parses a metric document (`key = "expression"` lines).
///
/// # Safety
/// `document` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sigma2_chart_from_document(
    document: *const c_char,
    out: *mut *mut Sigma2Chart,
) -> Sigma2Status {
    guard(|| {
        let out = get_mut(out, "out")?;
        let chart = load_metric_spec(text(document, "document")?)?;
        *out = Box::into_raw(Box::new(Sigma2Chart(chart)));
        Ok(())
    })
}

/// # Safety
/// `chart` must come from this library and not be used afterwards. Null is
/// accepted.
#[no_mangle]
pub unsafe extern "C" fn sigma2_chart_free(chart: *mut Sigma2Chart) {
    if !chart.is_null() {
        drop(Box::from_raw(chart));
    }
}

/// Scalar curvature at `point_xyz` (three doubles).
///
/// # Safety
/// `chart` must be a live handle, `point_xyz` must hold three doubles and `out`
/// must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sigma2_scalar_curvature(
    chart: *const Sigma2Chart,
    point_xyz: *const f64,
    out: *mut f64,
) -> Sigma2Status {
    guard(|| {
        let chart = get(chart, "chart")?;
        let out = get_mut(out, "out")?;
        *out = curvature_data(&chart.0, point(point_xyz)?)?.scalar;
        Ok(())
    })
}

/// All residuals at `point_xyz` for the coupling `t`.
///
/// # Safety
/// As for [`sigma2_scalar_curvature`].
#[no_mangle]
pub unsafe extern "C" fn sigma2_residuals(
    chart: *const Sigma2Chart,
    point_xyz: *const f64,
    t: f64,
    out: *mut Sigma2Residuals,
) -> Sigma2Status {
    guard(|| {
        let chart = get(chart, "chart")?;
        let out = get_mut(out, "out")?;
        if !t.is_finite() {
            return Err(fail(Sigma2Status::InvalidArgument, "t must be finite"));
        }
        let r = ResidualRecord::from_curvature(&curvature_data(&chart.0, point(point_xyz)?)?, t);
        *out = Sigma2Residuals {
            scalar_curvature: r.scalar_curvature,
            grad_ft_norm: r.grad_ft_norm,
            eq1_norm: r.eq1_norm,
            eq2_value: r.eq2_value,
            weitzenbock_residual: r.weitzenbock_residual,
            pde_residual: r.pde_residual,
            cor34_slack: r.cor34_slack,
        };
        Ok(())
    })
}

/// Runs the identity suite and stores 1 in `passed` if every check passed.
///
/// # Safety
/// `passed` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sigma2_run_identities(
    seed: u64,
    matrix_trials: usize,
    chart_trials: usize,
    passed: *mut i32,
) -> Sigma2Status {
    guard(|| {
        let passed = get_mut(passed, "passed")?;
        let cfg = SuiteConfig { seed, n_matrix_trials: matrix_trials, n_chart_trials: chart_trials, ..SuiteConfig::default() };
        let report = run_suite(&cfg).map_err(|e| fail(Sigma2Status::InvalidArgument, e))?;
        *passed = i32::from(report.passed());
        Ok(())
    })
}

/// A randomly perturbed flat metric on an `n³` grid.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sigma2_flow_new(
    n: usize,
    amplitude: f64,
    seed: u64,
    t: f64,
    out: *mut *mut Sigma2Flow,
) -> Sigma2Status {
    guard(|| {
        let out = get_mut(out, "out")?;
        let state = init_grid_with_t(n, amplitude, seed, t)?;
        *out = Box::into_raw(Box::new(Sigma2Flow { state, rows: Vec::new() }));
        Ok(())
    })
}

/// # Safety
/// `flow` must come from this library and not be used afterwards. Null is
/// accepted.
#[no_mangle]
pub unsafe extern "C" fn sigma2_flow_free(flow: *mut Sigma2Flow) {
    if !flow.is_null() {
        drop(Box::from_raw(flow));
    }
}

/// Takes up to `max_steps` descent steps, stopping early once the gradient
/// norm is at most `target_grad_norm`. Rows are appended to the handle's
/// trajectory. On `SIGMA2_STATUS_STALLED` the handle holds the last
/// accepted state.
///
/// # Safety
/// `flow` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn sigma2_flow_run(
    flow: *mut Sigma2Flow,
    max_steps: usize,
    target_grad_norm: f64,
    eta: f64,
) -> Sigma2Status {
    guard(|| {
        let flow = get_mut(flow, "flow")?;
        let (state, rows, err) = match flow_run(flow.state.clone(), max_steps, target_grad_norm, eta) {
            Ok((state, traj)) => (state, traj.rows, None),
            Err(FlowError::Stalled { state, eta, trajectory }) => {
                let err = FlowError::Stalled { state: state.clone(), eta, trajectory: Default::default() };
                (*state, trajectory.rows, Some(err))
            }
            Err(e) => return Err(e.into()),
        };
        let skip = usize::from(flow.rows.last().is_some_and(|r| Some(r.step) == rows.first().map(|r| r.step)));
        flow.rows.extend(rows.into_iter().skip(skip));
        flow.state = state;
        match err {
            Some(e) => Err(e.into()),
            None => Ok(()),
        }
    })
}

/// Discrete energy of the current state.
///
/// # Safety
/// `flow` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sigma2_flow_energy(flow: *const Sigma2Flow, out: *mut f64) -> Sigma2Status {
    guard(|| {
        let flow = get(flow, "flow")?;
        *get_mut(out, "out")? = flow.state.discrete_energy();
        Ok(())
    })
}

/// Number of accepted steps so far. Returns 0 for a null handle.
///
/// # Safety
/// `flow` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn sigma2_flow_steps(flow: *const Sigma2Flow) -> usize {
    flow.as_ref().map_or(0, |f| f.state.step)
}

/// Number of trajectory rows recorded. Returns 0 for a null handle.
///
/// # Safety
/// `flow` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn sigma2_flow_trajectory_len(flow: *const Sigma2Flow) -> usize {
    flow.as_ref().map_or(0, |f| f.rows.len())
}

/// # Safety
/// `flow` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sigma2_flow_trajectory_row(
    flow: *const Sigma2Flow,
    index: usize,
    out: *mut Sigma2TrajectoryRow,
) -> Sigma2Status {
    guard(|| {
        let flow = get(flow, "flow")?;
        let out = get_mut(out, "out")?;
        let r = flow.rows.get(index).ok_or_else(|| {
            fail(Sigma2Status::InvalidArgument, format!("row {index} out of range ({} rows)", flow.rows.len()))
        })?;
        *out = Sigma2TrajectoryRow {
            step: r.step,
            energy: r.energy,
            grad_norm: r.grad_norm,
            max_abs_ric: r.max_abs_ric,
            max_neg_r: r.max_neg_r,
        };
        Ok(())
    })
}
