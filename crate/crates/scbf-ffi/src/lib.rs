//! C ABI over the barrier-synthesis and safety-filter library.
//!
//! The surface follows the usual handle pattern: opaque pointers created
//! and destroyed by paired `*_load`/`*_parse` and `*_free` calls, status
//! codes on every fallible function, and a thread-local error message
//! retrievable with [`scbf_last_error_message`]. `build.rs` generates the
//! matching C header into `include/scbf.h`.
//!
//! Conventions:
//!
//! * Every function returning [`ScbfStatus`] clears the thread's error
//!   message on success and sets it on failure.
//! * Output parameters are written only on [`ScbfStatus::Ok`].
//! * Joint vectors are dense `double` arrays whose length must equal
//!   [`scbf_robot_dof`]; passing the wrong length is reported as
//!   [`ScbfStatus::InvalidArgument`] where it is detectable (the length is
//!   an explicit parameter everywhere).
//! * Handles are not thread-safe; share them across threads only with
//!   external synchronization. Distinct handles are independent.
//! * Panics never unwind across the boundary: they are caught and
//!   reported as [`ScbfStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use libc::{c_char, size_t};

use scbf::cbfsyn::{evaluate_cbf, synthesize, CbfError, SynthesisOptions};
use scbf::consts::{DEFAULT_ALPHA, DEFAULT_BETA, DEFAULT_DT, DEFAULT_EPS, DEFAULT_LAMBDA};
use scbf::control::{
    decrease_scale, filter_input, load_certificate, parse_robot, parse_scene, save_certificate,
    simulate, CertificateFile, ControlError, QpStatus, RunOutcome, SimConfig, FORMAT_VERSION,
};
use scbf::robot::{reachable_ball, JointConfig, RobotModel};
use scbf::scenario::{required_samples, ScenarioError};
use scbf::sdfield::{overall_sdf, Scene};


/// Status code returned by every fallible function of this ABI.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScbfStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// Dimensions, ranges, or values outside the documented domain.
    InvalidArgument = 3,
    /// A description file failed to parse or validate.
    ParseError = 4,
    /// The file system refused a read or write.
    IoError = 5,
    /// No certified invariant set exists at the requested state.
    NoCertifiedSet = 6,
    /// Every sampled configuration was unobstructed; there is nothing to
    /// certify against (treat the state as unconstrained).
    NoScenarios = 7,
    /// The numerical kernel failed (eigensolver or SDP breakdown).
    NumericalError = 8,
    /// An internal panic was caught at the boundary.
    Panic = 9,
}

/// Safety-filter verdict, mirroring the library's `QpStatus`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScbfQpStatus {
    /// No barrier was in force; the input passed through untouched.
    Unconstrained = 0,
    /// The barrier constraint was satisfied by the desired input.
    Inactive = 1,
    /// The input was projected onto the constraint boundary.
    Active = 2,
    /// No admissible input satisfies the constraint; the returned input
    /// is zero (stop).
    Infeasible = 3,
}

impl From<QpStatus> for ScbfQpStatus {
    fn from(s: QpStatus) -> Self {
        match s {
            QpStatus::Unconstrained => ScbfQpStatus::Unconstrained,
            QpStatus::Inactive => ScbfQpStatus::Inactive,
            QpStatus::Active => ScbfQpStatus::Active,
            QpStatus::Infeasible => ScbfQpStatus::Infeasible,
        }
    }
}

/// How a simulation run ended.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScbfRunOutcome {
    GoalReached = 0,
    Collision = 1,
    Stuck = 2,
    HorizonExhausted = 3,
}

impl From<RunOutcome> for ScbfRunOutcome {
    fn from(o: RunOutcome) -> Self {
        match o {
            RunOutcome::GoalReached => ScbfRunOutcome::GoalReached,
            RunOutcome::Collision => ScbfRunOutcome::Collision,
            RunOutcome::Stuck => ScbfRunOutcome::Stuck,
            RunOutcome::HorizonExhausted => ScbfRunOutcome::HorizonExhausted,
        }
    }
}

/// An n-joint kinematic chain with collision geometry (opaque).
pub struct ScbfRobot(RobotModel);

/// A set of convex obstacles, fixed or on motion schedules (opaque).
pub struct ScbfScene(Scene);

/// A synthesized barrier certificate: the quadratic barrier plus the ball,
/// batch size, and risk bound it was certified with (opaque).
pub struct ScbfCbf(CertificateFile);

/// Synthesis knobs. Zero-initialize and overwrite, or start from
/// [`scbf_synth_config_default`]. `n_samples = 0` sizes the batch from the
/// certificate dimension at risk 0.1.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct ScbfSynthConfig {
    /// Control period the reachable ball is sized for, seconds.
    pub dt: f64,
    /// Scenario batch size; 0 picks the default.
    pub n_samples: size_t,
    pub seed: u64,
    /// Class-K gain of the decrease rows (used only with a candidate).
    pub alpha: f64,
    /// Confidence parameter of the risk bound.
    pub beta: f64,
    /// Count support constraints exactly (slower, tighter risk).
    pub count_support: bool,
}

/// Simulation knobs; see [`scbf_sim_config_default`]. `n_samples = 0`
/// picks the default batch size.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct ScbfSimConfig {
    /// Control period, seconds.
    pub dt: f64,
    /// Step budget before the run is cut off.
    pub horizon: size_t,
    /// Scenario batch size per step; 0 picks the default.
    pub n_samples: size_t,
    pub seed: u64,
    /// Class-K gain of the synthesis decrease rows.
    pub alpha: f64,
    /// Barrier-rate gain of the safety filter, 1/s (`lambda·dt ≤ 1`).
    pub lambda: f64,
    /// Confidence parameter of the per-step risk certificates.
    pub beta: f64,
    /// Count support constraints exactly (slower, tighter risk).
    pub count_support: bool,
}

/// Provenance and risk figures of a certificate.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct ScbfCertificateInfo {
    /// Barrier value at its center (the certified apex).
    pub d_b: f64,
    /// Radius of the reachable ball the barrier is contained in, radians.
    pub ball_radius: f64,
    /// Control period the ball was sized for, seconds.
    pub dt: f64,
    /// Scenario batch size behind the certificate.
    pub n_samples: size_t,
    /// Complexity the risk bound was evaluated at.
    pub c_star: size_t,
    /// Certified upper bound on the violation probability.
    pub eps_hi: f64,
    /// Confidence parameter backing `eps_hi`.
    pub beta: f64,
}

/// End-of-run digest of [`scbf_simulate`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct ScbfRunSummary {
    pub outcome: ScbfRunOutcome,
    /// Executed steps (= trace rows).
    pub steps: size_t,
    /// Minimum overall signed distance across the run, meters.
    pub min_sd_ov: f64,
    /// Smallest certified apex seen; NaN if no step was certified.
    pub min_d_b: f64,
    /// Waypoints passed, counting the goal.
    pub waypoints_reached: size_t,
    pub wall_ms: f64,
    /// Total synthesis wall-clock across steps, ms.
    pub synth_ms_total: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl std::fmt::Display) {
    let text = msg.to_string().replace('\0', "\\0");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(text).ok();
    });
}

fn clear_error() {
    LAST_ERROR.with(|slot| slot.borrow_mut().take());
}

/// Byte length (excluding the terminator) of the calling thread's last
/// error message; 0 when there is none.
#[no_mangle]
pub extern "C" fn scbf_last_error_length() -> size_t {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(0, |s| s.as_bytes().len()))
}

/// Copies the calling thread's last error message into `buf` (at most
/// `cap − 1` bytes plus a NUL terminator) and returns the number of bytes
/// written, excluding the terminator. Returns 0 when there is no message,
/// `buf` is null, or `cap` is 0.
///
/// # Safety
/// `buf` must point to at least `cap` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn scbf_last_error_message(buf: *mut c_char, cap: size_t) -> size_t {
    if buf.is_null() || cap == 0 {
        return 0;
    }
    LAST_ERROR.with(|slot| {
        let borrow = slot.borrow();
        let Some(msg) = borrow.as_ref() else {
            return 0;
        };
        let bytes = msg.as_bytes();
        let n = bytes.len().min(cap - 1);
        std::ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, n);
        *buf.add(n) = 0;
        n
    })
}

/// The library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn scbf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// The description-file format revision this build reads and writes.
#[no_mangle]
pub extern "C" fn scbf_format_version() -> u32 {
    FORMAT_VERSION
}

fn control_status(e: &ControlError) -> ScbfStatus {
    match e {
        ControlError::Io { .. } => ScbfStatus::IoError,
        ControlError::Parse { .. } => ScbfStatus::ParseError,
        ControlError::Invalid(_) => ScbfStatus::InvalidArgument,
        ControlError::Cbf(c) => cbf_status(c),
        _ => ScbfStatus::InvalidArgument,
    }
}

fn cbf_status(e: &CbfError) -> ScbfStatus {
    match e {
        CbfError::NoCertifiedSet { .. } => ScbfStatus::NoCertifiedSet,
        CbfError::NoScenarios(_) => ScbfStatus::NoScenarios,
        CbfError::Invalid(_) => ScbfStatus::InvalidArgument,
        CbfError::Scenario(ScenarioError::InvalidArgument(_)) => ScbfStatus::InvalidArgument,
        _ => ScbfStatus::NumericalError,
    }
}

/// Runs `body` with panics converted to [`ScbfStatus::Panic`]; clears the
/// error slot first so stale messages never outlive the call that set them.
fn guarded(body: impl FnOnce() -> ScbfStatus) -> ScbfStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal panic: {msg}"));
            ScbfStatus::Panic
        }
    }
}

/// # Safety: `ptr` must be null or a valid NUL-terminated string.
unsafe fn str_arg<'a>(ptr: *const c_char, what: &str) -> Result<&'a str, ScbfStatus> {
    if ptr.is_null() {
        set_error(format!("{what} is null"));
        return Err(ScbfStatus::NullPointer);
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| {
        set_error(format!("{what} is not valid UTF-8"));
        ScbfStatus::InvalidUtf8
    })
}

/// # Safety: `ptr` must be null or valid for `len` reads.
unsafe fn slice_arg<'a>(
    ptr: *const f64,
    len: size_t,
    what: &str,
) -> Result<&'a [f64], ScbfStatus> {
    if ptr.is_null() {
        set_error(format!("{what} is null"));
        return Err(ScbfStatus::NullPointer);
    }
    Ok(std::slice::from_raw_parts(ptr, len))
}

fn require<'a, T>(ptr: *const T, what: &str) -> Result<&'a T, ScbfStatus> {
    // SAFETY: the caller contract of every public function demands valid
    // handles; only the null case is detectable here.
    unsafe { ptr.as_ref() }.ok_or_else(|| {
        set_error(format!("{what} is null"));
        ScbfStatus::NullPointer
    })
}

fn require_out<'a, T>(ptr: *mut T, what: &str) -> Result<&'a mut T, ScbfStatus> {
    // SAFETY: as in `require`.
    unsafe { ptr.as_mut() }.ok_or_else(|| {
        set_error(format!("{what} is null"));
        ScbfStatus::NullPointer
    })
}

fn default_samples(n: usize, beta: f64) -> Result<usize, ScenarioError> {
    Ok(required_samples(scbf::cbfsyn::theory_dimension(n), DEFAULT_EPS, beta, 100_000, 1e-3)?.0)
}

// ---------------------------------------------------------------------
// Robot handles
// ---------------------------------------------------------------------

/// Parses a robot description from JSON text into a new handle.
///
/// # Safety
/// `json` must be a valid NUL-terminated string; `out` must be a valid
/// pointer. The returned handle must be released with [`scbf_robot_free`].
#[no_mangle]
pub unsafe extern "C" fn scbf_robot_parse(
    json: *const c_char,
    out: *mut *mut ScbfRobot,
) -> ScbfStatus {
    guarded(|| {
        let out = match require_out(out, "out") {
            Ok(v) => v,
            Err(s) => return s,
        };
        let text = match str_arg(json, "json") {
            Ok(v) => v,
            Err(s) => return s,
        };
        match parse_robot(text, "<memory>") {
            Ok(model) => {
                *out = Box::into_raw(Box::new(ScbfRobot(model)));
                ScbfStatus::Ok
            }
            Err(e) => {
                set_error(&e);
                control_status(&e)
            }
        }
    })
}

/// Loads a robot description file into a new handle.
///
/// # Safety
/// `path` must be a valid NUL-terminated string; `out` must be a valid
/// pointer. The returned handle must be released with [`scbf_robot_free`].
#[no_mangle]
pub unsafe extern "C" fn scbf_robot_load(
    path: *const c_char,
    out: *mut *mut ScbfRobot,
) -> ScbfStatus {
    guarded(|| {
        let out = match require_out(out, "out") {
            Ok(v) => v,
            Err(s) => return s,
        };
        let path = match str_arg(path, "path") {
            Ok(v) => v,
            Err(s) => return s,
        };
        match scbf::control::load_robot(Path::new(path)) {
            Ok(model) => {
                *out = Box::into_raw(Box::new(ScbfRobot(model)));
                ScbfStatus::Ok
            }
            Err(e) => {
                set_error(&e);
                control_status(&e)
            }
        }
    })
}

/// Releases a robot handle; null is a no-op.
///
/// # Safety
/// `robot` must be null or a pointer returned by `scbf_robot_parse`/
/// `scbf_robot_load` that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn scbf_robot_free(robot: *mut ScbfRobot) {
    if !robot.is_null() {
        drop(Box::from_raw(robot));
    }
}

/// Joint count of the chain; 0 when `robot` is null.
///
/// # Safety
/// `robot` must be null or a live robot handle.
#[no_mangle]
pub unsafe extern "C" fn scbf_robot_dof(robot: *const ScbfRobot) -> size_t {
    robot.as_ref().map_or(0, |r| r.0.n())
}

/// Copies the per-joint speed bounds (rad/s) into `out`, which must hold
/// exactly `len == dof` values.
///
/// # Safety
/// `robot` must be a live handle; `out` must be valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn scbf_robot_speed_bounds(
    robot: *const ScbfRobot,
    out: *mut f64,
    len: size_t,
) -> ScbfStatus {
    guarded(|| {
        let robot = match require(robot, "robot") {
            Ok(v) => v,
            Err(s) => return s,
        };
        if out.is_null() {
            set_error("out is null");
            return ScbfStatus::NullPointer;
        }
        let bounds = robot.0.speed_bounds();
        if len != bounds.len() {
            set_error(format!("len is {len}, robot has {} joints", bounds.len()));
            return ScbfStatus::InvalidArgument;
        }
        std::ptr::copy_nonoverlapping(bounds.as_ptr(), out, bounds.len());
        ScbfStatus::Ok
    })
}

// ---------------------------------------------------------------------
// Scene handles
// ---------------------------------------------------------------------

/// Parses a scene description from JSON text into a new handle.
///
/// # Safety
/// As in [`scbf_robot_parse`]; release with [`scbf_scene_free`].
#[no_mangle]
pub unsafe extern "C" fn scbf_scene_parse(
    json: *const c_char,
    out: *mut *mut ScbfScene,
) -> ScbfStatus {
    guarded(|| {
        let out = match require_out(out, "out") {
            Ok(v) => v,
            Err(s) => return s,
        };
        let text = match str_arg(json, "json") {
            Ok(v) => v,
            Err(s) => return s,
        };
        match parse_scene(text, "<memory>") {
            Ok(scene) => {
                *out = Box::into_raw(Box::new(ScbfScene(scene)));
                ScbfStatus::Ok
            }
            Err(e) => {
                set_error(&e);
                control_status(&e)
            }
        }
    })
}

/// Loads a scene description file into a new handle.
///
/// # Safety
/// As in [`scbf_robot_load`]; release with [`scbf_scene_free`].
#[no_mangle]
pub unsafe extern "C" fn scbf_scene_load(
    path: *const c_char,
    out: *mut *mut ScbfScene,
) -> ScbfStatus {
    guarded(|| {
        let out = match require_out(out, "out") {
            Ok(v) => v,
            Err(s) => return s,
        };
        let path = match str_arg(path, "path") {
            Ok(v) => v,
            Err(s) => return s,
        };
        match scbf::control::load_scene(Path::new(path)) {
            Ok(scene) => {
                *out = Box::into_raw(Box::new(ScbfScene(scene)));
                ScbfStatus::Ok
            }
            Err(e) => {
                set_error(&e);
                control_status(&e)
            }
        }
    })
}

/// Releases a scene handle; null is a no-op.
///
/// # Safety
/// `scene` must be null or a live scene handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn scbf_scene_free(scene: *mut ScbfScene) {
    if !scene.is_null() {
        drop(Box::from_raw(scene));
    }
}

/// Number of obstacles; 0 when `scene` is null.
///
/// # Safety
/// `scene` must be null or a live scene handle.
#[no_mangle]
pub unsafe extern "C" fn scbf_scene_size(scene: *const ScbfScene) -> size_t {
    scene.as_ref().map_or(0, |s| s.0.len())
}

// ---------------------------------------------------------------------
// Distance queries
// ---------------------------------------------------------------------

/// Evaluates the overall signed distance (arm-vs-obstacles and
/// self-collision, whichever is smaller) at configuration `q` and scene
/// time `t`. Writes a large positive sentinel when nothing constrains the
/// arm.
///
/// # Safety
/// `robot` and `scene` must be live handles, `q` valid for `n` reads,
/// `out_sd` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn scbf_overall_sd(
    robot: *const ScbfRobot,
    scene: *const ScbfScene,
    q: *const f64,
    n: size_t,
    t: f64,
    out_sd: *mut f64,
) -> ScbfStatus {
    guarded(|| {
        let (robot, scene) = match (require(robot, "robot"), require(scene, "scene")) {
            (Ok(r), Ok(s)) => (r, s),
            (Err(s), _) | (_, Err(s)) => return s,
        };
        let out_sd = match require_out(out_sd, "out_sd") {
            Ok(v) => v,
            Err(s) => return s,
        };
        let q = match slice_arg(q, n, "q") {
            Ok(v) => v,
            Err(s) => return s,
        };
        let config = JointConfig::new(q.to_vec());
        match overall_sdf(&robot.0, &config, &scene.0, t) {
            Ok(sample) => {
                *out_sd = sample.sd_ov;
                ScbfStatus::Ok
            }
            Err(e) => {
                set_error(&e);
                ScbfStatus::InvalidArgument
            }
        }
    })
}

// ---------------------------------------------------------------------
// Barrier synthesis and certificates
// ---------------------------------------------------------------------

/// The default synthesis configuration: 10 ms period, automatic batch
/// size, seed 0.
#[no_mangle]
pub extern "C" fn scbf_synth_config_default() -> ScbfSynthConfig {
    ScbfSynthConfig {
        dt: DEFAULT_DT,
        n_samples: 0,
        seed: 0,
        alpha: DEFAULT_ALPHA,
        beta: DEFAULT_BETA,
        count_support: false,
    }
}

/// Synthesizes a barrier certificate at state `q` against the scene.
/// On success writes a new certificate handle to `out` (release with
/// [`scbf_cbf_free`]). [`ScbfStatus::NoCertifiedSet`] and
/// [`ScbfStatus::NoScenarios`] are expected outcomes, not usage errors.
///
/// # Safety
/// `robot` and `scene` must be live handles, `q` valid for `n` reads,
/// `config` null (defaults) or a valid pointer, `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn scbf_synthesize(
    robot: *const ScbfRobot,
    scene: *const ScbfScene,
    q: *const f64,
    n: size_t,
    config: *const ScbfSynthConfig,
    out: *mut *mut ScbfCbf,
) -> ScbfStatus {
    guarded(|| {
        let (robot, scene) = match (require(robot, "robot"), require(scene, "scene")) {
            (Ok(r), Ok(s)) => (r, s),
            (Err(s), _) | (_, Err(s)) => return s,
        };
        let out = match require_out(out, "out") {
            Ok(v) => v,
            Err(s) => return s,
        };
        let q = match slice_arg(q, n, "q") {
            Ok(v) => v,
            Err(s) => return s,
        };
        let cfg = if config.is_null() {
            scbf_synth_config_default()
        } else {
            *config
        };
        let x_k = JointConfig::new(q.to_vec());
        let n_bar = if cfg.n_samples == 0 {
            match default_samples(robot.0.n(), cfg.beta) {
                Ok(v) => v,
                Err(e) => {
                    set_error(&e);
                    return ScbfStatus::InvalidArgument;
                }
            }
        } else {
            cfg.n_samples
        };
        let options = SynthesisOptions {
            alpha: cfg.alpha,
            count_support: cfg.count_support,
            beta: cfg.beta,
            ..SynthesisOptions::default()
        };
        let report = match synthesize(&robot.0, &scene.0, &x_k, cfg.dt, n_bar, cfg.seed, &options)
        {
            Ok(r) => r,
            Err(e) => {
                set_error(&e);
                return cbf_status(&e);
            }
        };
        let ball = match reachable_ball(&robot.0, &x_k, cfg.dt) {
            Ok(b) => b,
            Err(e) => {
                set_error(&e);
                return ScbfStatus::InvalidArgument;
            }
        };
        let file = CertificateFile {
            format_version: FORMAT_VERSION,
            state: x_k.q,
            dt: cfg.dt,
            ball_radius: ball.radius,
            cbf: report.cbf,
            n_samples: report.n_samples,
            c_star: report.c_star,
            eps_hi: report.risk.eps_hi,
            beta: report.risk.beta,
        };
        *out = Box::into_raw(Box::new(ScbfCbf(file)));
        ScbfStatus::Ok
    })
}

/// Loads a certificate file written by [`scbf_cbf_save`] (or the CLI's
/// `synth --out`) into a new handle.
///
/// # Safety
/// `path` must be a valid NUL-terminated string; `out` a valid pointer.
/// Release the handle with [`scbf_cbf_free`].
#[no_mangle]
pub unsafe extern "C" fn scbf_cbf_load(path: *const c_char, out: *mut *mut ScbfCbf) -> ScbfStatus {
    guarded(|| {
        let out = match require_out(out, "out") {
            Ok(v) => v,
            Err(s) => return s,
        };
        let path = match str_arg(path, "path") {
            Ok(v) => v,
            Err(s) => return s,
        };
        match load_certificate(Path::new(path)) {
            Ok(file) => {
                *out = Box::into_raw(Box::new(ScbfCbf(file)));
                ScbfStatus::Ok
            }
            Err(e) => {
                set_error(&e);
                control_status(&e)
            }
        }
    })
}

/// Writes a certificate handle to a JSON file.
///
/// # Safety
/// `cbf` must be a live handle; `path` a valid NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn scbf_cbf_save(cbf: *const ScbfCbf, path: *const c_char) -> ScbfStatus {
    guarded(|| {
        let cbf = match require(cbf, "cbf") {
            Ok(v) => v,
            Err(s) => return s,
        };
        let path = match str_arg(path, "path") {
            Ok(v) => v,
            Err(s) => return s,
        };
        match save_certificate(Path::new(path), &cbf.0) {
            Ok(()) => ScbfStatus::Ok,
            Err(e) => {
                set_error(&e);
                control_status(&e)
            }
        }
    })
}

/// Releases a certificate handle; null is a no-op.
///
/// # Safety
/// `cbf` must be null or a live certificate handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn scbf_cbf_free(cbf: *mut ScbfCbf) {
    if !cbf.is_null() {
        drop(Box::from_raw(cbf));
    }
}

/// Fills `out` with the certificate's provenance and risk figures.
///
/// # Safety
/// `cbf` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn scbf_cbf_info(
    cbf: *const ScbfCbf,
    out: *mut ScbfCertificateInfo,
) -> ScbfStatus {
    guarded(|| {
        let cbf = match require(cbf, "cbf") {
            Ok(v) => v,
            Err(s) => return s,
        };
        let out = match require_out(out, "out") {
            Ok(v) => v,
            Err(s) => return s,
        };
        *out = ScbfCertificateInfo {
            d_b: cbf.0.cbf.d_b(),
            ball_radius: cbf.0.ball_radius,
            dt: cbf.0.dt,
            n_samples: cbf.0.n_samples,
            c_star: cbf.0.c_star,
            eps_hi: cbf.0.eps_hi,
            beta: cbf.0.beta,
        };
        ScbfStatus::Ok
    })
}

/// Evaluates the barrier at `q`: writes `b(q)` to `out_b` and, when
/// `out_grad` is non-null, the gradient to `out_grad[0..n]`.
///
/// # Safety
/// `cbf` must be a live handle, `q` valid for `n` reads, `out_b` a valid
/// pointer, and `out_grad` null or valid for `n` writes.
#[no_mangle]
pub unsafe extern "C" fn scbf_cbf_value(
    cbf: *const ScbfCbf,
    q: *const f64,
    n: size_t,
    out_b: *mut f64,
    out_grad: *mut f64,
) -> ScbfStatus {
    guarded(|| {
        let cbf = match require(cbf, "cbf") {
            Ok(v) => v,
            Err(s) => return s,
        };
        let out_b = match require_out(out_b, "out_b") {
            Ok(v) => v,
            Err(s) => return s,
        };
        let q = match slice_arg(q, n, "q") {
            Ok(v) => v,
            Err(s) => return s,
        };
        if n != cbf.0.cbf.center().len() {
            set_error(format!(
                "q has {n} entries, the barrier is {}-dimensional",
                cbf.0.cbf.center().len()
            ));
            return ScbfStatus::InvalidArgument;
        }
        let (b, grad) = evaluate_cbf(&cbf.0.cbf, &JointConfig::new(q.to_vec()));
        *out_b = b;
        if !out_grad.is_null() {
            std::ptr::copy_nonoverlapping(grad.as_ptr(), out_grad, grad.len());
        }
        ScbfStatus::Ok
    })
}

// ---------------------------------------------------------------------
// Safety filter
// ---------------------------------------------------------------------

/// Projects a desired velocity onto the barrier constraint
/// `∇b(q)ᵀu + lambda·b(q) ≥ 0` intersected with the robot's speed box,
/// writing the filtered input to `out_u` and the verdict to `out_status`.
/// An infeasible constraint yields zero input and
/// [`ScbfQpStatus::Infeasible`] — with status [`ScbfStatus::Ok`], since
/// infeasibility is an outcome, not a usage error.
///
/// # Safety
/// `robot` and `cbf` must be live handles; `q` and `u_des` valid for `n`
/// reads; `out_u` valid for `n` writes; `out_status` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn scbf_filter_input(
    robot: *const ScbfRobot,
    cbf: *const ScbfCbf,
    q: *const f64,
    u_des: *const f64,
    n: size_t,
    lambda: f64,
    out_u: *mut f64,
    out_status: *mut ScbfQpStatus,
) -> ScbfStatus {
    guarded(|| {
        let (robot, cbf) = match (require(robot, "robot"), require(cbf, "cbf")) {
            (Ok(r), Ok(c)) => (r, c),
            (Err(s), _) | (_, Err(s)) => return s,
        };
        let out_status = match require_out(out_status, "out_status") {
            Ok(v) => v,
            Err(s) => return s,
        };
        let (q, u_des) = match (slice_arg(q, n, "q"), slice_arg(u_des, n, "u_des")) {
            (Ok(a), Ok(b)) => (a, b),
            (Err(s), _) | (_, Err(s)) => return s,
        };
        if out_u.is_null() {
            set_error("out_u is null");
            return ScbfStatus::NullPointer;
        }
        let bounds = robot.0.speed_bounds();
        match filter_input(
            &cbf.0.cbf,
            &JointConfig::new(q.to_vec()),
            u_des,
            lambda,
            &bounds,
        ) {
            Ok((u, status)) => {
                std::ptr::copy_nonoverlapping(u.as_ptr(), out_u, u.len());
                *out_status = status.into();
                ScbfStatus::Ok
            }
            Err(e) => {
                set_error(&e);
                control_status(&e)
            }
        }
    })
}

/// Largest `s ∈ [0, 1]` such that applying `s·u` for one period `dt`
/// keeps the one-step barrier decrease within `lambda`: the braking
/// stage applied after the filter.
///
/// # Safety
/// `cbf` must be a live handle; `q` and `u` valid for `n` reads;
/// `out_scale` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn scbf_decrease_scale(
    cbf: *const ScbfCbf,
    q: *const f64,
    u: *const f64,
    n: size_t,
    lambda: f64,
    dt: f64,
    out_scale: *mut f64,
) -> ScbfStatus {
    guarded(|| {
        let cbf = match require(cbf, "cbf") {
            Ok(v) => v,
            Err(s) => return s,
        };
        let out_scale = match require_out(out_scale, "out_scale") {
            Ok(v) => v,
            Err(s) => return s,
        };
        let (q, u) = match (slice_arg(q, n, "q"), slice_arg(u, n, "u")) {
            (Ok(a), Ok(b)) => (a, b),
            (Err(s), _) | (_, Err(s)) => return s,
        };
        if n != cbf.0.cbf.center().len() {
            set_error(format!(
                "q has {n} entries, the barrier is {}-dimensional",
                cbf.0.cbf.center().len()
            ));
            return ScbfStatus::InvalidArgument;
        }
        if !(lambda > 0.0 && dt > 0.0 && lambda.is_finite() && dt.is_finite()) {
            set_error(format!("lambda and dt must be > 0, got {lambda} and {dt}"));
            return ScbfStatus::InvalidArgument;
        }
        *out_scale = decrease_scale(&cbf.0.cbf, &JointConfig::new(q.to_vec()), u, lambda, dt);
        ScbfStatus::Ok
    })
}

// ---------------------------------------------------------------------
// Simulation
// ---------------------------------------------------------------------

/// The default simulation configuration: 10 ms period, 20 000-step
/// horizon, automatic batch size, `lambda·dt = 0.5`.
#[no_mangle]
pub extern "C" fn scbf_sim_config_default() -> ScbfSimConfig {
    ScbfSimConfig {
        dt: DEFAULT_DT,
        horizon: 20_000,
        n_samples: 0,
        seed: 0,
        alpha: DEFAULT_ALPHA,
        lambda: DEFAULT_LAMBDA,
        beta: DEFAULT_BETA,
        count_support: false,
    }
}

/// Runs the closed loop over robot/scene/plan description files, writes
/// the trace CSV when `trace_path` is non-null, and fills `out` with the
/// run digest. Collision, stuck, and horizon endings are reported in
/// `out.outcome` with status [`ScbfStatus::Ok`].
///
/// # Safety
/// The three path arguments must be valid NUL-terminated strings;
/// `config` must be null (defaults) or valid; `trace_path` null or a
/// valid string; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn scbf_simulate(
    robot_path: *const c_char,
    scene_path: *const c_char,
    plan_path: *const c_char,
    config: *const ScbfSimConfig,
    trace_path: *const c_char,
    out: *mut ScbfRunSummary,
) -> ScbfStatus {
    guarded(|| {
        let out = match require_out(out, "out") {
            Ok(v) => v,
            Err(s) => return s,
        };
        let robot = match str_arg(robot_path, "robot_path") {
            Ok(v) => v,
            Err(s) => return s,
        };
        let scene = match str_arg(scene_path, "scene_path") {
            Ok(v) => v,
            Err(s) => return s,
        };
        let plan = match str_arg(plan_path, "plan_path") {
            Ok(v) => v,
            Err(s) => return s,
        };
        let trace = if trace_path.is_null() {
            None
        } else {
            match str_arg(trace_path, "trace_path") {
                Ok(v) => Some(v),
                Err(s) => return s,
            }
        };
        let c = if config.is_null() {
            scbf_sim_config_default()
        } else {
            *config
        };
        let cfg = SimConfig {
            dt: c.dt,
            horizon: c.horizon,
            n_samples: (c.n_samples > 0).then_some(c.n_samples),
            seed: c.seed,
            alpha: c.alpha,
            lambda: c.lambda,
            beta: c.beta,
            count_support: c.count_support,
        };
        match simulate(
            Path::new(robot),
            Path::new(scene),
            Path::new(plan),
            &cfg,
            trace.map(Path::new),
        ) {
            Ok(artifacts) => {
                let s = &artifacts.summary;
                *out = ScbfRunSummary {
                    outcome: s.outcome.into(),
                    steps: s.steps,
                    min_sd_ov: s.min_sd_ov,
                    min_d_b: s.min_d_b,
                    waypoints_reached: s.waypoints_reached,
                    wall_ms: s.wall_ms,
                    synth_ms_total: s.synth_ms_total,
                };
                ScbfStatus::Ok
            }
            Err(e) => {
                set_error(&e);
                control_status(&e)
            }
        }
    })
}
