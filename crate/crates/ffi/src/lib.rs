//! C ABI over `wfprod`.
//!
//! Every fallible call returns a [`WfStatus`]; on failure the message is
//! available from [`wf_last_error`] until the next call on the same thread.
//! Scenarios and reports are opaque handles released with their `_free`
//! functions.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use wfprod::classifier::{classify_regime, ClassifierConfig};
use wfprod::cli::output::{read_observations, write_simulation};
use wfprod::cli::scenario::{parse_scenario_str, Scenario};
use wfprod::cli::CliError;
use wfprod::simulator::{run_monte_carlo, SimReport};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InputError = 3,
    RuntimeError = 4,
    OutOfRange = 5,
    Panic = 6,
}

/// Parsed, validated scenario.
pub struct WfScenario {
    inner: Scenario,
}

/// Result of a simulation run.
pub struct WfReport {
    inner: SimReport,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).unwrap_or_default());
}

fn guard<F>(f: F) -> WfStatus
where
    F: FnOnce() -> Result<(), (WfStatus, String)>,
{
    set_error("");
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => WfStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            WfStatus::Panic
        }
    }
}

fn core_err(e: wfprod::Error) -> (WfStatus, String) {
    (WfStatus::InvalidArgument, e.to_string())
}

fn cli_err(e: CliError) -> (WfStatus, String) {
    match e {
        CliError::Input(m) => (WfStatus::InputError, m),
        CliError::Runtime(m) => (WfStatus::RuntimeError, m),
    }
}

fn null(what: &str) -> (WfStatus, String) {
    (WfStatus::NullPointer, format!("`{what}` is null"))
}

unsafe fn c_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, (WfStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (WfStatus::InvalidArgument, format!("`{what}` is not valid UTF-8")))
}

unsafe fn write_out<T>(out: *mut T, value: T, what: &str) -> Result<(), (WfStatus, String)> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

/// Message for the last failed call on this thread; empty after success.
/// The pointer stays valid until the next `wf_*` call on the thread.
#[no_mangle]
pub extern "C" fn wf_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// `a * b` for two probabilities.
///
/// # Safety
/// `out` must be a valid pointer to a `double`.
#[no_mangle]
pub unsafe extern "C" fn wf_event_probability(a: f64, b: f64, out: *mut f64) -> WfStatus {
    guard(|| {
        let p = wfprod::model::event_probability(a, b).map_err(core_err)?;
        write_out(out, p, "out")
    })
}

/// `base^(1/ratio)`.
///
/// # Safety
/// `out` must be a valid pointer to a `double`.
#[no_mangle]
pub unsafe extern "C" fn wf_tilt_precision(base: f64, ratio: f64, out: *mut f64) -> WfStatus {
    guard(|| {
        let p = wfprod::regimes::tilt_precision(base, ratio).map_err(core_err)?;
        write_out(out, p, "out")
    })
}

/// Shannon entropy in bits of `len` probabilities.
///
/// # Safety
/// `probs` must point to `len` readable doubles and `out` to a `double`.
#[no_mangle]
pub unsafe extern "C" fn wf_shannon_entropy(probs: *const f64, len: usize, out: *mut f64) -> WfStatus {
    guard(|| {
        if probs.is_null() {
            return Err(null("probs"));
        }
        let slice = std::slice::from_raw_parts(probs, len);
        let h = wfprod::metrics::shannon_entropy(slice).map_err(core_err)?;
        write_out(out, h, "out")
    })
}

/// Parses TOML scenario text. With `lenient`, unknown keys are tolerated.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn wf_scenario_parse(text: *const c_char, lenient: bool, out: *mut *mut WfScenario) -> WfStatus {
    guard(|| {
        let text = c_str(text, "text")?;
        let (inner, _) = parse_scenario_str(text, lenient).map_err(cli_err)?;
        write_out(out, Box::into_raw(Box::new(WfScenario { inner })), "out")
    })
}

/// Reads and parses a scenario file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn wf_scenario_load(path: *const c_char, lenient: bool, out: *mut *mut WfScenario) -> WfStatus {
    guard(|| {
        let path = c_str(path, "path")?;
        let (inner, _) = wfprod::cli::scenario::parse_scenario(path.as_ref(), lenient).map_err(cli_err)?;
        write_out(out, Box::into_raw(Box::new(WfScenario { inner })), "out")
    })
}

/// # Safety
/// `scenario` must come from `wf_scenario_parse`/`wf_scenario_load` and not
/// be freed twice. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn wf_scenario_free(scenario: *mut WfScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// Runs the scenario with its own seed and trial count on `workers` threads
/// (0 means 1).
///
/// # Safety
/// `scenario` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn wf_simulate(scenario: *const WfScenario, workers: u32, out: *mut *mut WfReport) -> WfStatus {
    guard(|| {
        let s = scenario.as_ref().ok_or_else(|| null("scenario"))?;
        let built = s.inner.build().map_err(cli_err)?;
        let mut opts = built.options.clone();
        opts.workers = workers.max(1) as usize;
        let report = run_monte_carlo(&built.graph, &built.assignment, &opts)
            .map_err(|e| (WfStatus::RuntimeError, e.to_string()))?;
        write_out(out, Box::into_raw(Box::new(WfReport { inner: report })), "out")
    })
}

/// # Safety
/// `report` must come from `wf_simulate` and not be freed twice. Null is
/// ignored.
#[no_mangle]
pub unsafe extern "C" fn wf_report_free(report: *mut WfReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Number of workflow nodes in the report; 0 for a null handle.
///
/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn wf_report_node_count(report: *const WfReport) -> usize {
    report.as_ref().map_or(0, |r| r.inner.nodes.len())
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct WfNodeStats {
    pub trials: u64,
    pub successes: u64,
    pub success_rate: f64,
    pub std_error: f64,
    pub mean_time: f64,
    pub entropy_bits: f64,
    /// NaN when too few completions were recorded.
    pub flow_cv: f64,
    pub utilization: f64,
    pub saturated: bool,
}

/// Summary statistics of node `index` (declaration order).
///
/// # Safety
/// `report` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn wf_report_node_stats(report: *const WfReport, index: usize, out: *mut WfNodeStats) -> WfStatus {
    guard(|| {
        let r = report.as_ref().ok_or_else(|| null("report"))?;
        let n = r.inner.nodes.get(index).ok_or_else(|| {
            (
                WfStatus::OutOfRange,
                format!("node index {index} out of range (report has {})", r.inner.nodes.len()),
            )
        })?;
        let stats = WfNodeStats {
            trials: r.inner.trials,
            successes: n.successes,
            success_rate: n.success_rate,
            std_error: n.stderr,
            mean_time: n.mean_time,
            entropy_bits: n.entropy_bits,
            flow_cv: n.flow_cv.unwrap_or(f64::NAN),
            utilization: n.utilization,
            saturated: n.saturated,
        };
        write_out(out, stats, "out")
    })
}

/// Fraction of trials in which every node hit its target.
///
/// # Safety
/// `report` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn wf_report_end_to_end(report: *const WfReport, out: *mut f64) -> WfStatus {
    guard(|| {
        let r = report.as_ref().ok_or_else(|| null("report"))?;
        write_out(out, r.inner.end_to_end.success_rate, "out")
    })
}

/// Writes the summary, histogram, observation and JSON report files into
/// `dir`, creating it if needed.
///
/// # Safety
/// `report` must be a live handle and `dir` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn wf_report_write(report: *const WfReport, dir: *const c_char) -> WfStatus {
    guard(|| {
        let r = report.as_ref().ok_or_else(|| null("report"))?;
        let dir = PathBuf::from(c_str(dir, "dir")?);
        write_simulation(&dir, &r.inner).map_err(cli_err)?;
        Ok(())
    })
}

/// Classifies an observation CSV. `regime` receives the letter `A`..`G`,
/// `confidence` the bootstrap agreement in `[0, 1]`.
///
/// # Safety
/// `path` must be a NUL-terminated string; `regime` and `confidence` valid
/// pointers.
#[no_mangle]
pub unsafe extern "C" fn wf_classify_csv(
    path: *const c_char,
    alpha: f64,
    bootstrap: u32,
    seed: u64,
    regime: *mut c_char,
    confidence: *mut f64,
) -> WfStatus {
    guard(|| {
        let path = c_str(path, "path")?;
        if regime.is_null() {
            return Err(null("regime"));
        }
        if confidence.is_null() {
            return Err(null("confidence"));
        }
        let obs = read_observations(path.as_ref()).map_err(cli_err)?;
        let cfg = ClassifierConfig {
            alpha,
            bootstrap_resamples: bootstrap as usize,
            seed,
            ..ClassifierConfig::default()
        };
        let c = classify_regime(&obs, &cfg).map_err(|e| (WfStatus::InputError, e.to_string()))?;
        regime.write(c.regime.letter() as c_char);
        confidence.write(c.confidence);
        Ok(())
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn wf_version() -> *const c_char {
    static VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr().cast()
}
