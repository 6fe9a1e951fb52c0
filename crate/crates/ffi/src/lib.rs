//! C interface to `trl-core`.
//!
//! Scenarios live behind the opaque [`TrlScenario`] handle. Every fallible
//! function returns a [`TrlStatus`]; after a failure,
//! [`trl_last_error_message`] describes it on the calling thread. Strings
//! handed out by the library must be released with [`trl_string_free`].
//!
//! Labels cross the boundary as `int8_t` values `-1` or `+1`. A pointer paired
//! with a length of zero may be null.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;
use std::sync::OnceLock;

use trl_core::adversary::{attack, AttackBudget, Learner};
use trl_core::bounds::agnostic_bound;
use trl_core::combinatorics::{relaxed_robust_dimension, vc_dimension};
use trl_core::experiment::{run_experiment, summary_json, VERSION};
use trl_core::learner::{RobustSelector, SelectionRule};
use trl_core::model::{Label, LabeledDataset};
use trl_core::scenario::{ExperimentConfig, Scenario};
use trl_core::Error;

pub const TRL_RULE_REALIZABLE: u32 = 0;
pub const TRL_RULE_AGNOSTIC: u32 = 1;

pub const TRL_ATTACK_EXACT: u32 = 0;
pub const TRL_ATTACK_GREEDY: u32 = 1;
pub const TRL_ATTACK_RANDOM_RESTART: u32 = 2;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TrlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    /// Malformed input: bad labels, indices, probabilities, configs.
    InvalidInput = 3,
    /// The realizable selector found no robustly consistent member.
    Infeasible = 4,
    DomainTooLarge = 5,
    BudgetExceeded = 6,
    PreconditionViolated = 7,
    Io = 8,
    /// A Rust panic was caught at the boundary.
    Panic = 9,
}

/// A parsed and validated scenario.
pub struct TrlScenario {
    inner: Scenario,
}

/// Bounds for one configuration, each clamped to `[0, 1]`.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct TrlBounds {
    pub realizable_eps: f64,
    pub agnostic_eps_vc: f64,
    pub agnostic_eps_rdim: f64,
    pub agnostic_eps: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct TrlAttackOutcome {
    /// Test errors at the maximizer.
    pub errors: usize,
    pub total: usize,
    pub error: f64,
    pub evaluations: u64,
    /// Whether the search was exhaustive.
    pub exact: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure {
    status: TrlStatus,
    message: String,
}

impl Failure {
    fn new(status: TrlStatus, message: impl Into<String>) -> Self {
        Self {
            status,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Infeasible => TrlStatus::Infeasible,
            Error::DomainTooLarge { .. } => TrlStatus::DomainTooLarge,
            Error::BudgetExceeded { .. } => TrlStatus::BudgetExceeded,
            Error::PreconditionViolated(_) => TrlStatus::PreconditionViolated,
            Error::Io(_) => TrlStatus::Io,
            _ => TrlStatus::InvalidInput,
        };
        Self::new(status, e.to_string())
    }
}

fn set_last_error(message: Option<String>) {
    let message = message.map(|m| CString::new(m.replace('\0', " ")).unwrap_or_default());
    LAST_ERROR.with(|slot| *slot.borrow_mut() = message);
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> TrlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error(None);
            TrlStatus::Ok
        }
        Ok(Err(failure)) => {
            set_last_error(Some(failure.message));
            failure.status
        }
        Err(payload) => {
            let what = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(Some(format!("panic: {what}")));
            TrlStatus::Panic
        }
    }
}

unsafe fn non_null<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref()
        .ok_or_else(|| Failure::new(TrlStatus::NullPointer, format!("{what} is null")))
}

unsafe fn out_ref<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut()
        .ok_or_else(|| Failure::new(TrlStatus::NullPointer, format!("{what} is null")))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::new(TrlStatus::NullPointer, format!("{what} is null")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a, T>(p: *mut T, len: usize, what: &str) -> Result<&'a mut [T], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(Failure::new(TrlStatus::NullPointer, format!("{what} is null")));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn string<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::new(TrlStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| Failure::new(TrlStatus::InvalidUtf8, format!("{what}: {e}")))
}

fn rule(code: u32) -> Result<SelectionRule, Failure> {
    match code {
        TRL_RULE_REALIZABLE => Ok(SelectionRule::Realizable),
        TRL_RULE_AGNOSTIC => Ok(SelectionRule::Agnostic),
        other => Err(Failure::new(TrlStatus::InvalidInput, format!("unknown selection rule {other}"))),
    }
}

fn budget(mode: u32, restarts: usize, seed: u64) -> Result<AttackBudget, Failure> {
    let mut b = match mode {
        TRL_ATTACK_EXACT => AttackBudget::exact(),
        TRL_ATTACK_GREEDY => AttackBudget::greedy(),
        TRL_ATTACK_RANDOM_RESTART => AttackBudget::random_restart(restarts, seed),
        other => return Err(Failure::new(TrlStatus::InvalidInput, format!("unknown attack mode {other}"))),
    };
    b.seed = seed;
    Ok(b)
}

fn dataset(s: &Scenario, xs: &[usize], ys: &[i8]) -> Result<LabeledDataset, Failure> {
    let points = xs
        .iter()
        .zip(ys)
        .map(|(&x, &y)| Ok((x, Label::from_sign(y as i64)?)))
        .collect::<Result<Vec<_>, Error>>()?;
    Ok(LabeledDataset::new(&s.domain, points)?)
}

/// The library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn trl_version() -> *const c_char {
    static V: OnceLock<CString> = OnceLock::new();
    V.get_or_init(|| CString::new(VERSION).unwrap_or_default()).as_ptr()
}

/// The message of the last failed call on this thread, or null if the last
/// call succeeded. Valid until the next call into the library on this thread.
#[no_mangle]
pub extern "C" fn trl_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |m| m.as_ptr()))
}

/// Releases a string returned by the library. Null is ignored.
///
/// # Safety
/// `s` must be null or a pointer obtained from this library that has not
/// been freed yet.
#[no_mangle]
pub unsafe extern "C" fn trl_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses a scenario from JSON text.
///
/// # Safety
/// `json` must be null or a NUL-terminated string; `out` must be null or
/// writable.
#[no_mangle]
pub unsafe extern "C" fn trl_scenario_from_json(json: *const c_char, out: *mut *mut TrlScenario) -> TrlStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = ptr::null_mut();
        let inner = Scenario::from_json(string(json, "json")?)?;
        *out = Box::into_raw(Box::new(TrlScenario { inner }));
        Ok(())
    })
}

/// Reads a scenario file.
///
/// # Safety
/// As for [`trl_scenario_from_json`].
#[no_mangle]
pub unsafe extern "C" fn trl_scenario_load(path: *const c_char, out: *mut *mut TrlScenario) -> TrlStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = ptr::null_mut();
        let inner = Scenario::load(Path::new(string(path, "path")?))?;
        *out = Box::into_raw(Box::new(TrlScenario { inner }));
        Ok(())
    })
}

/// Releases a scenario. Null is ignored.
///
/// # Safety
/// `s` must be null or a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn trl_scenario_free(s: *mut TrlScenario) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Domain size and class size of a scenario.
///
/// # Safety
/// `s` must be a live handle; the outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn trl_scenario_sizes(
    s: *const TrlScenario,
    domain_size: *mut usize,
    class_size: *mut usize,
) -> TrlStatus {
    guard(|| {
        let s = &non_null(s, "scenario")?.inner;
        *out_ref(domain_size, "domain_size")? = s.domain.size();
        *out_ref(class_size, "class_size")? = s.class.len();
        Ok(())
    })
}

/// VC dimension of the class and relaxed robust dimension for `U⁻¹`.
///
/// # Safety
/// `s` must be a live handle; the outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn trl_dims(s: *const TrlScenario, vc: *mut usize, rdim: *mut usize) -> TrlStatus {
    guard(|| {
        let s = &non_null(s, "scenario")?.inner;
        let vc = out_ref(vc, "vc")?;
        let rdim = out_ref(rdim, "rdim")?;
        *vc = vc_dimension(&s.class)?;
        *rdim = relaxed_robust_dimension(&s.class, &s.relation.invert())?.0;
        Ok(())
    })
}

/// Runs a selector on perturbed training pairs and test points. Writes the
/// `m` predicted labels to `labels` and the chosen class index to `chosen`.
///
/// # Safety
/// Each array must hold at least as many elements as its length argument.
#[no_mangle]
pub unsafe extern "C" fn trl_select(
    s: *const TrlScenario,
    rule_code: u32,
    train_x: *const usize,
    train_y: *const i8,
    n: usize,
    test_x: *const usize,
    m: usize,
    labels: *mut i8,
    chosen: *mut usize,
) -> TrlStatus {
    guard(|| {
        let s = &non_null(s, "scenario")?.inner;
        let rule = rule(rule_code)?;
        let train = dataset(s, slice(train_x, n, "train_x")?, slice(train_y, n, "train_y")?)?;
        let test = slice(test_x, m, "test_x")?;
        for &z in test {
            s.domain.check(z)?;
        }
        let labels = slice_mut(labels, m, "labels")?;
        let chosen = out_ref(chosen, "chosen")?;
        let r = RobustSelector::new(&s.class, &s.relation)?.select(rule, &train, test)?;
        for (slot, y) in labels.iter_mut().zip(&r.labels) {
            *slot = y.sign();
        }
        *chosen = r.chosen_index;
        Ok(())
    })
}

/// Attacks a selector on a clean sample. `perturbed_test` receives the `m`
/// test points at the maximizer. The training points are attacked too when
/// `attack_train` is set.
///
/// # Safety
/// Each array must hold at least as many elements as its length argument.
#[no_mangle]
pub unsafe extern "C" fn trl_attack(
    s: *const TrlScenario,
    rule_code: u32,
    mode: u32,
    restarts: usize,
    seed: u64,
    attack_train: bool,
    train_x: *const usize,
    train_y: *const i8,
    n: usize,
    test_x: *const usize,
    test_y: *const i8,
    m: usize,
    perturbed_test: *mut usize,
    outcome: *mut TrlAttackOutcome,
) -> TrlStatus {
    guard(|| {
        let s = &non_null(s, "scenario")?.inner;
        let rule = rule(rule_code)?;
        let budget = budget(mode, restarts, seed)?;
        let train = dataset(s, slice(train_x, n, "train_x")?, slice(train_y, n, "train_y")?)?;
        let test = dataset(s, slice(test_x, m, "test_x")?, slice(test_y, m, "test_y")?)?;
        let perturbed = slice_mut(perturbed_test, m, "perturbed_test")?;
        let outcome = out_ref(outcome, "outcome")?;
        let selector = RobustSelector::new(&s.class, &s.relation)?;
        let learner = Learner::Selector {
            selector: &selector,
            rule,
            worst_member: false,
        };
        let r = attack(learner, &train, &test, &s.relation, attack_train, &budget)?;
        perturbed.copy_from_slice(&r.perturbed_test);
        *outcome = TrlAttackOutcome {
            errors: r.achieved_error.errors,
            total: r.achieved_error.total,
            error: r.achieved_error.value(),
            evaluations: r.evaluations,
            exact: r.exact,
        };
        Ok(())
    })
}

/// Evaluates every bound for the given dimensions and composed optimum.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn trl_bounds(
    vc: usize,
    rdim: usize,
    opt_composed: f64,
    n: usize,
    delta: f64,
    vc_constant: f64,
    out: *mut TrlBounds,
) -> TrlStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let r = agnostic_bound(vc, rdim, opt_composed, n, delta, vc_constant)?;
        *out = TrlBounds {
            realizable_eps: r.realizable_eps,
            agnostic_eps_vc: r.agnostic_eps_vc,
            agnostic_eps_rdim: r.agnostic_eps_rdim,
            agnostic_eps: r.agnostic_eps,
        };
        Ok(())
    })
}

/// Runs a Monte-Carlo experiment on `s` and returns its summary as JSON in
/// `summary`, to be released with [`trl_string_free`]. The config's
/// `scenario` path is ignored in favor of the handle and its `outputs` are
/// not written. `threads` of 0 picks the default pool size.
///
/// # Safety
/// `config_json` must be a NUL-terminated string; `summary` must be writable.
#[no_mangle]
pub unsafe extern "C" fn trl_experiment(
    s: *const TrlScenario,
    config_json: *const c_char,
    threads: usize,
    summary: *mut *mut c_char,
) -> TrlStatus {
    guard(|| {
        let s = &non_null(s, "scenario")?.inner;
        let summary = out_ref(summary, "summary")?;
        *summary = ptr::null_mut();
        let config = ExperimentConfig::from_json(string(config_json, "config_json")?)?;
        let run = run_experiment(&config, s, (threads > 0).then_some(threads))?;
        let text = summary_json(&run.summary)?;
        *summary = CString::new(text)
            .map_err(|e| Failure::new(TrlStatus::InvalidInput, e.to_string()))?
            .into_raw();
        Ok(())
    })
}
