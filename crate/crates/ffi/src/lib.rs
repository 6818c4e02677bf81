//! C ABI over the `qgraph` library.
//!
//! Conventions:
//! - Every fallible function returns a [`QgStatus`]; results go through out-pointers.
//! - Objects are opaque handles, each released by its `qg_*_free` function.
//!   Passing NULL to a free function is a no-op.
//! - On failure, [`qg_last_error_message`] describes the most recent error on the calling thread.
//! - Strings returned to the caller are owned by the caller and released with [`qg_string_free`].
//! - Panics never cross the boundary; they are reported as [`QgStatus::Panic`].

use qgraph::bowtie::{dst_branch_events, intersection_threshold, DstEventKind};
use qgraph::classify::{classify, compute_thetas, default_zero_tol, refine_singular_point, BifurcationKind, Side};
use qgraph::continuation::{constant_seed, continue_branch, Branch, ContinuationSettings, EventTag, Orientation};
use qgraph::discretize::DiscreteSystem;
use qgraph::graph::{build_dumbbell, build_interval, build_lollipop, MetricGraph};
use qgraph::shooting::{find_standing_waves, dumbbell_intervals, shot_value, ScanSettings};
use qgraph::spectrum::{find_modes, ModeFamily, ModeSet};
use qgraph::Error;
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QgStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Numerical = 3,
    Io = 4,
    OutOfRange = 5,
    Panic = 6,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let s = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(s).ok());
}

fn status_of(e: &Error) -> QgStatus {
    match e {
        Error::InvalidGraph(_) | Error::InvalidArgument(_) | Error::IncompatibleSymmetry { .. } => QgStatus::InvalidArgument,
        Error::Io(_) | Error::Json(_) | Error::Csv(_) => QgStatus::Io,
        _ => QgStatus::Numerical,
    }
}

/// Run `f`, recording any error or panic for [`qg_last_error_message`].
fn guard(f: impl FnOnce() -> Result<(), QgStatusError>) -> QgStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => QgStatus::Ok,
        Ok(Err(e)) => {
            set_error(e.message);
            e.status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            QgStatus::Panic
        }
    }
}

struct QgStatusError {
    status: QgStatus,
    message: String,
}

impl From<Error> for QgStatusError {
    fn from(e: Error) -> Self {
        Self { status: status_of(&e), message: e.to_string() }
    }
}

fn fail(status: QgStatus, message: impl Into<String>) -> QgStatusError {
    QgStatusError { status, message: message.into() }
}

fn non_null<T>(p: *const T, name: &str) -> Result<(), QgStatusError> {
    if p.is_null() {
        Err(fail(QgStatus::NullPointer, format!("{name} is NULL")))
    } else {
        Ok(())
    }
}

/// # Safety
/// `p` must be NULL or a NUL-terminated string.
unsafe fn read_str<'a>(p: *const c_char, name: &str) -> Result<&'a str, QgStatusError> {
    non_null(p, name)?;
    CStr::from_ptr(p).to_str().map_err(|_| fail(QgStatus::InvalidArgument, format!("{name} is not UTF-8")))
}

fn into_c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).map(CString::into_raw).unwrap_or(ptr::null_mut())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn qg_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copy of the last error message on this thread, or NULL if there is none.
/// Release with [`qg_string_free`].
#[no_mangle]
pub extern "C" fn qg_last_error_message() -> *mut c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map(|s| s.clone().into_raw()).unwrap_or(ptr::null_mut()))
}

/// # Safety
/// `s` must be NULL or a string returned by this library that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn qg_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

// ---------------------------------------------------------------- graphs

/// A metric graph.
pub struct QgGraph {
    inner: MetricGraph,
}

/// Graph families understood by [`qg_graph_new`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QgGraphKind {
    Dumbbell = 0,
    Lollipop = 1,
    Interval = 2,
}

/// Build a dumbbell or lollipop (bridge or stem of length `2 length`) or an interval of length `length`.
///
/// # Safety
/// `out` must be valid for writing a pointer.
#[no_mangle]
pub unsafe extern "C" fn qg_graph_new(kind: QgGraphKind, length: f64, out: *mut *mut QgGraph) -> QgStatus {
    guard(|| {
        non_null(out, "out")?;
        let g = match kind {
            QgGraphKind::Dumbbell => build_dumbbell(length),
            QgGraphKind::Lollipop => build_lollipop(length),
            QgGraphKind::Interval => build_interval(length),
        }?;
        *out = Box::into_raw(Box::new(QgGraph { inner: g }));
        Ok(())
    })
}

/// Parse a graph JSON document `{vertices, edges, markers}`.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` valid for writing.
#[no_mangle]
pub unsafe extern "C" fn qg_graph_from_json(json: *const c_char, out: *mut *mut QgGraph) -> QgStatus {
    guard(|| {
        non_null(out, "out")?;
        let g = MetricGraph::from_json(read_str(json, "json")?)?;
        g.validate()?;
        *out = Box::into_raw(Box::new(QgGraph { inner: g }));
        Ok(())
    })
}

/// Serialize to JSON; release the string with [`qg_string_free`].
///
/// # Safety
/// `graph` must be a live handle and `out` valid for writing.
#[no_mangle]
pub unsafe extern "C" fn qg_graph_to_json(graph: *const QgGraph, out: *mut *mut c_char) -> QgStatus {
    guard(|| {
        non_null(graph, "graph")?;
        non_null(out, "out")?;
        *out = into_c_string((*graph).inner.to_json()?);
        Ok(())
    })
}

/// # Safety
/// `graph` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn qg_graph_edge_count(graph: *const QgGraph, out: *mut usize) -> QgStatus {
    guard(|| {
        non_null(graph, "graph")?;
        non_null(out, "out")?;
        *out = (*graph).inner.edges.len();
        Ok(())
    })
}

/// # Safety
/// `graph` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn qg_graph_total_length(graph: *const QgGraph, out: *mut f64) -> QgStatus {
    guard(|| {
        non_null(graph, "graph")?;
        non_null(out, "out")?;
        *out = (*graph).inner.total_length();
        Ok(())
    })
}

/// # Safety
/// `graph` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qg_graph_free(graph: *mut QgGraph) {
    if !graph.is_null() {
        drop(Box::from_raw(graph));
    }
}

// ---------------------------------------------------------------- spectrum

/// Linear dumbbell spectrum.
pub struct QgModes {
    inner: ModeSet,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QgModeFamily {
    Constant = 0,
    Even = 1,
    Odd = 2,
    Loop = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QgMode {
    pub k: f64,
    pub lambda: f64,
    pub family: QgModeFamily,
    pub multiplicity: usize,
}

/// All dumbbell modes with wavenumber at most `k_max`, sorted by `k`.
///
/// # Safety
/// `out` must be valid for writing.
#[no_mangle]
pub unsafe extern "C" fn qg_dumbbell_modes(half_length: f64, k_max: f64, out: *mut *mut QgModes) -> QgStatus {
    guard(|| {
        non_null(out, "out")?;
        *out = Box::into_raw(Box::new(QgModes { inner: find_modes(half_length, k_max)? }));
        Ok(())
    })
}

/// # Safety
/// `modes` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn qg_modes_len(modes: *const QgModes) -> usize {
    modes.as_ref().map_or(0, |m| m.inner.modes.len())
}

/// # Safety
/// `modes` must be a live handle and `out` valid for writing.
#[no_mangle]
pub unsafe extern "C" fn qg_modes_get(modes: *const QgModes, index: usize, out: *mut QgMode) -> QgStatus {
    guard(|| {
        non_null(modes, "modes")?;
        non_null(out, "out")?;
        let modes = &*modes;
        let m = modes
            .inner
            .modes
            .get(index)
            .ok_or_else(|| fail(QgStatus::OutOfRange, format!("mode index {index} out of range")))?;
        let family = match m.family {
            ModeFamily::Constant => QgModeFamily::Constant,
            ModeFamily::Even => QgModeFamily::Even,
            ModeFamily::Odd => QgModeFamily::Odd,
            ModeFamily::Loop => QgModeFamily::Loop,
        };
        *out = QgMode { k: m.k, lambda: m.lambda, family, multiplicity: m.multiplicity };
        Ok(())
    })
}

/// # Safety
/// `modes` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qg_modes_free(modes: *mut QgModes) {
    if !modes.is_null() {
        drop(Box::from_raw(modes));
    }
}

// ---------------------------------------------------------------- continuation

/// A continued branch together with the discretization it lives on.
pub struct QgBranch {
    sys: DiscreteSystem,
    branch: Branch,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QgContinuationSettings {
    /// Target grid spacing.
    pub h: f64,
    pub ds: f64,
    pub ds_min: f64,
    pub ds_max: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub max_steps: usize,
    pub newton_tol: f64,
    pub max_newton: usize,
    pub detect_events: bool,
    pub psi_tol: f64,
}

/// Library defaults with grid spacing 0.05.
#[no_mangle]
pub extern "C" fn qg_continuation_settings_default() -> QgContinuationSettings {
    let d = ContinuationSettings::default();
    QgContinuationSettings {
        h: 0.05,
        ds: d.ds,
        ds_min: d.ds_min,
        ds_max: d.ds_max,
        lambda_min: d.lambda_min,
        lambda_max: d.lambda_max,
        max_steps: d.max_steps,
        newton_tol: d.newton_tol,
        max_newton: d.max_newton,
        detect_events: d.detect_events,
        psi_tol: d.psi_tol,
    }
}

fn to_settings(s: &QgContinuationSettings) -> ContinuationSettings {
    ContinuationSettings {
        ds: s.ds,
        ds_min: s.ds_min,
        ds_max: s.ds_max,
        lambda_min: s.lambda_min,
        lambda_max: s.lambda_max,
        max_steps: s.max_steps,
        newton_tol: s.newton_tol,
        max_newton: s.max_newton,
        detect_events: s.detect_events,
        psi_tol: s.psi_tol,
    }
}

/// Continue the constant branch from `min(lambda_max, -ds)` towards decreasing lambda.
///
/// # Safety
/// `graph` must be a live handle; `settings` and `out` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn qg_continue_constant(
    graph: *const QgGraph,
    settings: *const QgContinuationSettings,
    out: *mut *mut QgBranch,
) -> QgStatus {
    guard(|| {
        non_null(graph, "graph")?;
        non_null(settings, "settings")?;
        non_null(out, "out")?;
        let s = &*settings;
        let cs = to_settings(s);
        cs.validate()?;
        let sys = DiscreteSystem::new(&(*graph).inner, s.h)?;
        let start = s.lambda_max.min(-s.ds);
        if start <= s.lambda_min {
            return Err(fail(QgStatus::InvalidArgument, "window contains no negative lambda"));
        }
        let seed = constant_seed(&sys, start)?;
        let branch = continue_branch(&sys, &seed, &Orientation::DecreasingLambda, &cs)?;
        *out = Box::into_raw(Box::new(QgBranch { sys, branch }));
        Ok(())
    })
}

/// Bit flags in [`QgBranchPoint::tags`].
pub const QG_TAG_START: u32 = 1;
pub const QG_TAG_FOLD: u32 = 2;
pub const QG_TAG_BRANCH_POINT: u32 = 4;
pub const QG_TAG_END: u32 = 8;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QgBranchPoint {
    pub s: f64,
    pub lambda: f64,
    pub q: f64,
    /// Bitwise OR of `QG_TAG_*`.
    pub tags: u32,
}

/// # Safety
/// `branch` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qg_branch_len(branch: *const QgBranch) -> usize {
    branch.as_ref().map_or(0, |b| b.branch.points.len())
}

/// # Safety
/// `branch` must be a live handle and `out` valid for writing.
#[no_mangle]
pub unsafe extern "C" fn qg_branch_point(branch: *const QgBranch, index: usize, out: *mut QgBranchPoint) -> QgStatus {
    guard(|| {
        non_null(branch, "branch")?;
        non_null(out, "out")?;
        let branch = &*branch;
        let p = branch
            .branch
            .points
            .get(index)
            .ok_or_else(|| fail(QgStatus::OutOfRange, format!("point index {index} out of range")))?;
        let tags = p
            .tags
            .iter()
            .map(|t| match t {
                EventTag::Start => QG_TAG_START,
                EventTag::Fold => QG_TAG_FOLD,
                EventTag::BranchPoint => QG_TAG_BRANCH_POINT,
                EventTag::End => QG_TAG_END,
            })
            .fold(0, |a, b| a | b);
        *out = QgBranchPoint { s: p.s, lambda: p.lambda, q: p.q, tags };
        Ok(())
    })
}

/// Write the branch CSV (`s, lambda, Q, tags`).
///
/// # Safety
/// `branch` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn qg_branch_write_csv(branch: *const QgBranch, path: *const c_char) -> QgStatus {
    guard(|| {
        non_null(branch, "branch")?;
        let path = Path::new(read_str(path, "path")?);
        let f = std::fs::File::create(path).map_err(Error::from)?;
        (*branch).branch.write_csv(std::io::BufWriter::new(f))?;
        Ok(())
    })
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QgBifurcationKind {
    SaddleNode = 0,
    Transcritical = 1,
    Pitchfork = 2,
    Unresolved = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QgSide {
    Below = 0,
    Above = 1,
    NotApplicable = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QgClassification {
    pub kind: QgBifurcationKind,
    pub side: QgSide,
    pub lambda0: f64,
    /// Theta_1 .. Theta_5; entries whose bit is clear in `theta_present` are NaN.
    pub theta: [f64; 5],
    pub theta_present: u32,
    pub zero_tol: f64,
}

/// Polish point `index` onto the singular point and classify it.
/// A non-positive `zero_tol` selects the default `1e-6 max(1, Q)`.
///
/// # Safety
/// `branch` must be a live handle and `out` valid for writing.
#[no_mangle]
pub unsafe extern "C" fn qg_branch_classify(
    branch: *const QgBranch,
    index: usize,
    zero_tol: f64,
    out: *mut QgClassification,
) -> QgStatus {
    guard(|| {
        non_null(branch, "branch")?;
        non_null(out, "out")?;
        let b = &*branch;
        let p = b
            .branch
            .points
            .get(index)
            .ok_or_else(|| fail(QgStatus::OutOfRange, format!("point index {index} out of range")))?;
        let (phi, lambda) = refine_singular_point(&b.sys, &p.state, p.lambda)?;
        let th = compute_thetas(&b.sys, &phi, lambda)?;
        let tol = if zero_tol > 0.0 { zero_tol } else { default_zero_tol(&th) };
        let c = classify(&th, tol);
        let arr = th.as_array();
        let mut theta = [f64::NAN; 5];
        let mut present = 0;
        for (i, v) in arr.iter().enumerate() {
            if let Some(v) = v {
                theta[i] = *v;
                present |= 1 << i;
            }
        }
        *out = QgClassification {
            kind: match c.kind {
                BifurcationKind::SaddleNode => QgBifurcationKind::SaddleNode,
                BifurcationKind::Transcritical => QgBifurcationKind::Transcritical,
                BifurcationKind::Pitchfork => QgBifurcationKind::Pitchfork,
                BifurcationKind::Unresolved => QgBifurcationKind::Unresolved,
            },
            side: match c.side {
                Side::Below => QgSide::Below,
                Side::Above => QgSide::Above,
                Side::NotApplicable => QgSide::NotApplicable,
            },
            lambda0: th.lambda0,
            theta,
            theta_present: present,
            zero_tol: tol,
        };
        Ok(())
    })
}

/// # Safety
/// `branch` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qg_branch_free(branch: *mut QgBranch) {
    if !branch.is_null() {
        drop(Box::from_raw(branch));
    }
}

// ---------------------------------------------------------------- bowtie

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QgDstEventKind {
    Pitchfork = 0,
    Transcritical = 1,
    Fold = 2,
    SymmetryBreaking = 3,
    SaddleNode = 4,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QgDstEvent {
    pub from: u8,
    pub to: u8,
    pub kind: QgDstEventKind,
    pub theta: f64,
    pub omega: f64,
    pub q: f64,
}

/// Write up to `capacity` bowtie events into `out` and the total count into `count`.
/// Call with `capacity = 0` to query the count.
///
/// # Safety
/// `out` must hold `capacity` elements (may be NULL when `capacity` is 0); `count` must be valid.
#[no_mangle]
pub unsafe extern "C" fn qg_bowtie_events(out: *mut QgDstEvent, capacity: usize, count: *mut usize) -> QgStatus {
    guard(|| {
        non_null(count, "count")?;
        let events = dst_branch_events()?;
        *count = events.len();
        if capacity > 0 {
            non_null(out, "out")?;
        }
        for (i, e) in events.iter().take(capacity).enumerate() {
            let kind = match e.kind {
                DstEventKind::Pitchfork => QgDstEventKind::Pitchfork,
                DstEventKind::Transcritical => QgDstEventKind::Transcritical,
                DstEventKind::Fold => QgDstEventKind::Fold,
                DstEventKind::SymmetryBreaking => QgDstEventKind::SymmetryBreaking,
                DstEventKind::SaddleNode => QgDstEventKind::SaddleNode,
            };
            *out.add(i) = QgDstEvent { from: e.from, to: e.to, kind, theta: e.theta, omega: e.omega, q: e.q };
        }
        Ok(())
    })
}

/// Radius at which the circle-hyperbola intersection count changes from 2 to 4.
///
/// # Safety
/// `out` must be valid for writing.
#[no_mangle]
pub unsafe extern "C" fn qg_bowtie_intersection_threshold(out: *mut f64) -> QgStatus {
    guard(|| {
        non_null(out, "out")?;
        *out = intersection_threshold()?;
        Ok(())
    })
}

// ---------------------------------------------------------------- shooting

/// Shooting function `f(q)` on the dumbbell; NaN when the shot diverges.
///
/// # Safety
/// `out` must be valid for writing.
#[no_mangle]
pub unsafe extern "C" fn qg_shot_value(q: f64, lambda: f64, half_length: f64, out: *mut f64) -> QgStatus {
    guard(|| {
        non_null(out, "out")?;
        *out = shot_value(q, lambda, half_length).finite().unwrap_or(f64::NAN);
        Ok(())
    })
}

/// Standing-wave initial values `q` in `(0, q_max]`, sorted. Writes up to `capacity` roots and
/// the total into `count`.
///
/// # Safety
/// `out` must hold `capacity` elements (may be NULL when `capacity` is 0); `count` must be valid.
#[no_mangle]
pub unsafe extern "C" fn qg_shoot_roots(
    lambda: f64,
    half_length: f64,
    q_max: f64,
    grid: usize,
    out: *mut f64,
    capacity: usize,
    count: *mut usize,
) -> QgStatus {
    guard(|| {
        non_null(count, "count")?;
        let settings = ScanSettings { q_max, grid, ..Default::default() };
        let ws = find_standing_waves(lambda, half_length, &settings, dumbbell_intervals(half_length, 0.05))?;
        *count = ws.scan.roots.len();
        if capacity > 0 {
            non_null(out, "out")?;
        }
        for (i, q) in ws.scan.roots.iter().take(capacity).enumerate() {
            *out.add(i) = *q;
        }
        Ok(())
    })
}
