//! C interface to `qst-core`.
//!
//! Every function returns a [`QstStatus`]; on failure a description is kept
//! per thread and can be read with [`qst_last_error`]. Objects cross the
//! boundary as opaque handles that the caller releases with the matching
//! `_free` function. Output buffers are caller-owned; functions that fill a
//! variable-length buffer take its capacity and report the required length.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use qst_core::dqn::{self, DqnConfig};
use qst_core::dynamics::{natural_evolution, ChainConfig, ControlAction, PropagatorSet, NUM_ACTIONS};
use qst_core::environment::{sequence_fidelity_profile, EpisodeConfig};
use qst_core::ga::{self, GaConfig};
use qst_core::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QstStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidConfig = 3,
    /// Eigensolver failure, loss of unitarity or training divergence.
    Numerical = 4,
    BufferTooSmall = 5,
    Io = 6,
    Panic = 7,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let msg = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn fail(status: QstStatus, msg: impl Into<String>) -> QstStatus {
    set_last_error(msg.into());
    status
}

fn status_of(err: &Error) -> QstStatus {
    match err {
        Error::InvalidConfig(_) | Error::SearchBudgetExceeded(_) | Error::OracleTooLarge(_) => {
            QstStatus::InvalidConfig
        }
        Error::EigenNonConvergence(_)
        | Error::NonUnitary(_)
        | Error::NotSymmetric(_)
        | Error::NotNormalized(_)
        | Error::Diverged(_) => QstStatus::Numerical,
        Error::Io(_) => QstStatus::Io,
        _ => QstStatus::InvalidArgument,
    }
}

/// Runs `f`, converting errors and panics into a status.
fn guard(f: impl FnOnce() -> Result<(), Error>) -> QstStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => QstStatus::Ok,
        Ok(Err(e)) => fail(status_of(&e), e.to_string()),
        Err(_) => fail(QstStatus::Panic, "internal panic"),
    }
}

macro_rules! non_null {
    ($($p:ident),+) => {
        $(if $p.is_null() {
            return fail(QstStatus::NullPointer, concat!("`", stringify!($p), "` is null"));
        })+
    };
}

/// Message for the last failure on this thread, or null.
///
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn qst_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn qst_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

#[no_mangle]
pub extern "C" fn qst_num_actions() -> usize {
    NUM_ACTIONS
}

/// Writes the three left-end and three right-end field flags (0 or 1) of an action.
#[no_mangle]
pub unsafe extern "C" fn qst_action_masks(id: usize, left: *mut u8, right: *mut u8) -> QstStatus {
    non_null!(left, right);
    match ControlAction::from_id(id) {
        Ok(a) => {
            for k in 0..3 {
                *left.add(k) = a.left_mask()[k] as u8;
                *right.add(k) = a.right_mask()[k] as u8;
            }
            QstStatus::Ok
        }
        Err(e) => fail(status_of(&e), e.to_string()),
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QstChainParams {
    pub n_sites: usize,
    pub coupling: f64,
    pub field_strength: f64,
    pub dt: f64,
}

impl From<QstChainParams> for ChainConfig {
    fn from(p: QstChainParams) -> Self {
        ChainConfig {
            n_sites: p.n_sites,
            coupling: p.coupling,
            field_strength: p.field_strength,
            dt: p.dt,
        }
    }
}

#[no_mangle]
pub extern "C" fn qst_chain_params_default() -> QstChainParams {
    let c = ChainConfig::default();
    QstChainParams {
        n_sites: c.n_sites,
        coupling: c.coupling,
        field_strength: c.field_strength,
        dt: c.dt,
    }
}

/// Cached propagators of the 16 actions for one chain.
pub struct QstPropagatorSet {
    inner: PropagatorSet,
}

#[no_mangle]
pub unsafe extern "C" fn qst_propagator_set_new(
    params: *const QstChainParams,
    out: *mut *mut QstPropagatorSet,
) -> QstStatus {
    non_null!(params, out);
    *out = ptr::null_mut();
    let chain = ChainConfig::from(*params);
    guard(|| {
        let inner = PropagatorSet::build(&chain)?;
        *out = Box::into_raw(Box::new(QstPropagatorSet { inner }));
        Ok(())
    })
}

/// Releases a set; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn qst_propagator_set_free(set: *mut QstPropagatorSet) {
    if !set.is_null() {
        drop(Box::from_raw(set));
    }
}

#[no_mangle]
pub unsafe extern "C" fn qst_propagator_set_n_sites(set: *const QstPropagatorSet) -> usize {
    set.as_ref().map_or(0, |s| s.inner.n_sites())
}

/// Fidelity with the last site after each action of `sequence`.
///
/// `fidelities` must hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn qst_sequence_profile(
    set: *const QstPropagatorSet,
    sequence: *const usize,
    len: usize,
    fidelities: *mut f64,
) -> QstStatus {
    non_null!(set);
    if len > 0 {
        non_null!(sequence, fidelities);
    }
    let set = &(*set).inner;
    let seq: &[usize] = if len == 0 { &[] } else { std::slice::from_raw_parts(sequence, len) };
    guard(|| {
        let cfg = EpisodeConfig::new(*set.config()).with_horizon(len.max(1));
        let profile = sequence_fidelity_profile(seq, &cfg, set)?;
        for (j, (_, f)) in profile.into_iter().enumerate() {
            *fidelities.add(j) = f;
        }
        Ok(())
    })
}

/// Uncontrolled transfer probability at `samples` evenly spaced times in `[0, t_max]`.
///
/// `times` and `probabilities` must each hold `samples` values.
#[no_mangle]
pub unsafe extern "C" fn qst_natural_evolution(
    params: *const QstChainParams,
    t_max: f64,
    samples: usize,
    times: *mut f64,
    probabilities: *mut f64,
) -> QstStatus {
    non_null!(params, times, probabilities);
    let chain = ChainConfig::from(*params);
    guard(|| {
        for (i, (t, p)) in natural_evolution(&chain, t_max, samples)?.into_iter().enumerate() {
            *times.add(i) = t;
            *probabilities.add(i) = p;
        }
        Ok(())
    })
}

/// GA settings; zero `horizon` selects ceil(2.5 * n_sites).
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QstGaParams {
    pub population_size: usize,
    pub num_parents: usize,
    pub generations: usize,
    pub mutation_probability: f64,
    pub horizon: usize,
    /// Evaluation threads; 0 uses all cores, 1 runs serially.
    pub workers: usize,
    pub seed: u64,
}

#[no_mangle]
pub extern "C" fn qst_ga_params_default() -> QstGaParams {
    let g = GaConfig::default();
    QstGaParams {
        population_size: g.population_size,
        num_parents: g.num_parents,
        generations: g.generations,
        mutation_probability: g.mutation_probability,
        horizon: 0,
        workers: g.workers,
        seed: g.seed,
    }
}

/// DQN settings; zero `horizon` selects ceil(2.5 * n_sites).
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QstDqnParams {
    pub episodes: usize,
    pub alpha: f64,
    pub gamma: f64,
    pub epsilon_decay: f64,
    pub horizon: usize,
    pub seed: u64,
}

#[no_mangle]
pub extern "C" fn qst_dqn_params_default() -> QstDqnParams {
    let d = DqnConfig::default();
    QstDqnParams {
        episodes: d.episodes,
        alpha: d.alpha,
        gamma: d.gamma,
        epsilon_decay: d.epsilon_decay,
        horizon: 0,
        seed: d.seed,
    }
}

/// Outcome of an optimization run.
pub struct QstOptimizationResult {
    sequence: Vec<usize>,
    fidelity: f64,
    /// Best fidelity after each generation or episode.
    history: Vec<f64>,
}

fn episode_for(set: &PropagatorSet, horizon: usize) -> EpisodeConfig {
    let cfg = EpisodeConfig::new(*set.config());
    if horizon == 0 {
        cfg
    } else {
        cfg.with_horizon(horizon)
    }
}

#[no_mangle]
pub unsafe extern "C" fn qst_ga_run(
    set: *const QstPropagatorSet,
    params: *const QstGaParams,
    out: *mut *mut QstOptimizationResult,
) -> QstStatus {
    non_null!(set, params, out);
    *out = ptr::null_mut();
    let (set, p) = (&(*set).inner, *params);
    guard(|| {
        let gacfg = GaConfig {
            population_size: p.population_size,
            num_parents: p.num_parents,
            generations: p.generations,
            mutation_probability: p.mutation_probability,
            workers: p.workers,
            seed: p.seed,
            ..GaConfig::default()
        };
        let report = ga::run_ga_with(&gacfg, &episode_for(set, p.horizon), set)?;
        *out = Box::into_raw(Box::new(QstOptimizationResult {
            fidelity: report.best_fidelity,
            history: report.best_fidelity_history,
            sequence: report.best.into_genes(),
        }));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn qst_dqn_run(
    set: *const QstPropagatorSet,
    params: *const QstDqnParams,
    out: *mut *mut QstOptimizationResult,
) -> QstStatus {
    non_null!(set, params, out);
    *out = ptr::null_mut();
    let (set, p) = (&(*set).inner, *params);
    guard(|| {
        let dqncfg = DqnConfig {
            episodes: p.episodes,
            alpha: p.alpha,
            gamma: p.gamma,
            epsilon_decay: p.epsilon_decay,
            seed: p.seed,
            ..DqnConfig::default()
        };
        let report = dqn::train_with(&dqncfg, &episode_for(set, p.horizon), set)?;
        *out = Box::into_raw(Box::new(QstOptimizationResult {
            fidelity: report.best_fidelity,
            history: report.history.iter().map(|r| r.best_fidelity).collect(),
            sequence: report.best_sequence,
        }));
        Ok(())
    })
}

/// Releases a result; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn qst_result_free(result: *mut QstOptimizationResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}

#[no_mangle]
pub unsafe extern "C" fn qst_result_best_fidelity(result: *const QstOptimizationResult, fidelity: *mut f64) -> QstStatus {
    non_null!(result, fidelity);
    *fidelity = (*result).fidelity;
    QstStatus::Ok
}

unsafe fn copy_out<T: Copy>(src: &[T], buf: *mut T, capacity: usize, len: *mut usize) -> QstStatus {
    *len = src.len();
    if buf.is_null() && capacity == 0 {
        return QstStatus::Ok;
    }
    if capacity < src.len() {
        return fail(
            QstStatus::BufferTooSmall,
            format!("buffer holds {capacity} values, {} needed", src.len()),
        );
    }
    if !src.is_empty() {
        non_null!(buf);
        ptr::copy_nonoverlapping(src.as_ptr(), buf, src.len());
    }
    QstStatus::Ok
}

/// Copies the best sequence into `buf` and stores its length in `len`.
///
/// Pass a null `buf` with zero capacity to query the length only.
#[no_mangle]
pub unsafe extern "C" fn qst_result_sequence(
    result: *const QstOptimizationResult,
    buf: *mut usize,
    capacity: usize,
    len: *mut usize,
) -> QstStatus {
    non_null!(result, len);
    copy_out(&(*result).sequence, buf, capacity, len)
}

/// Copies the best-fidelity history; same buffer protocol as `qst_result_sequence`.
#[no_mangle]
pub unsafe extern "C" fn qst_result_history(
    result: *const QstOptimizationResult,
    buf: *mut f64,
    capacity: usize,
    len: *mut usize,
) -> QstStatus {
    non_null!(result, len);
    copy_out(&(*result).history, buf, capacity, len)
}
