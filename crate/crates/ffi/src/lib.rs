//! C ABI over `tnss-core`.
//!
//! Datasets and search results are opaque heap handles owned by the caller
//! and released with the matching `*_free` function. Every fallible call
//! returns a [`TnssStatus`]; on failure, [`tnss_last_error_message`] describes
//! the error for the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;
use std::slice;

use tnss_core::harness::{generate_synthetic, load_bundle, save_bundle};
use tnss_core::objective::{Evaluator, FitConfig, Source};
use tnss_core::search::{
    exhaustive_search, run_local_search, EnumConfig, NeighborhoodConfig, StoppingConfig, Strategy,
};
use tnss_core::{Error, TNStructure, TensorDataset};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TnssStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Numerical = 4,
    SearchSpaceTooLarge = 5,
    BufferTooSmall = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TnssAlgorithm {
    Exhaustive = 0,
    /// Alternating per-variable enumeration.
    Tnale = 1,
    /// Random neighborhood sampling.
    Tnls = 2,
}

/// Opaque dataset handle.
pub struct TnssDataset {
    inner: TensorDataset,
}

/// Opaque search result handle.
pub struct TnssResult {
    ranks: Vec<usize>,
    evaluation: TnssEvaluation,
    evals_used: usize,
    evals_to_best: usize,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TnssEvaluation {
    pub objective: f64,
    pub phi: f64,
    pub mean_relative_error: f64,
    pub param_count: usize,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TnssSearchOptions {
    pub algorithm: TnssAlgorithm,
    pub lambda: f64,
    pub r_max: usize,
    pub max_evals: usize,
    pub patience: usize,
    /// Candidates per iteration for `Tnls`.
    pub n_sample: usize,
    pub fit_max_iters: usize,
    pub seed: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> TnssStatus {
    match err {
        Error::Io { .. } | Error::Bundle { .. } | Error::Json(_) => TnssStatus::Io,
        Error::NumericalFailure { .. } | Error::ZeroNorm => TnssStatus::Numerical,
        Error::SearchSpaceTooLarge { .. } => TnssStatus::SearchSpaceTooLarge,
        _ => TnssStatus::InvalidArgument,
    }
}

struct Failure(TnssStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(TnssStatus::NullPointer, format!("{what} is null"))
}

/// Runs `f`, translating errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> TnssStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => TnssStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_last_error(message);
            status
        }
        Err(_) => {
            set_last_error("internal panic".into());
            TnssStatus::Panic
        }
    }
}

unsafe fn path_arg<'a>(path: *const c_char) -> Result<&'a Path, Failure> {
    if path.is_null() {
        return Err(null("path"));
    }
    let s = CStr::from_ptr(path)
        .to_str()
        .map_err(|_| Failure(TnssStatus::InvalidArgument, "path is not valid UTF-8".into()))?;
    Ok(Path::new(s))
}

unsafe fn slice_arg<'a, T>(data: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if data.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts(data, len))
}

unsafe fn dataset_arg<'a>(dataset: *const TnssDataset) -> Result<&'a TensorDataset, Failure> {
    dataset.as_ref().map(|d| &d.inner).ok_or_else(|| null("dataset"))
}

/// Message for the last failed call on this thread, or null if none. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn tnss_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Loads a tensor bundle directory.
///
/// # Safety
/// `path` must be a nul-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tnss_dataset_load(path: *const c_char, out: *mut *mut TnssDataset) -> TnssStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let inner = load_bundle(path_arg(path)?)?;
        *out = Box::into_raw(Box::new(TnssDataset { inner }));
        Ok(())
    })
}

/// Generates a min-max normalized synthetic dataset at a planted structure.
///
/// # Safety
/// `shape` must point to `order` values, `ranks` to `n_ranks` values, and
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tnss_dataset_generate(
    shape: *const usize,
    order: usize,
    ranks: *const usize,
    n_ranks: usize,
    samples: usize,
    noise_sigma: f64,
    seed: u64,
    out: *mut *mut TnssDataset,
) -> TnssStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let shape = slice_arg(shape, order, "shape")?;
        let ranks = slice_arg(ranks, n_ranks, "ranks")?;
        let planted = TNStructure::new(order, ranks.to_vec())?;
        let inner = generate_synthetic(shape, &planted, samples, noise_sigma, seed)?;
        *out = Box::into_raw(Box::new(TnssDataset { inner }));
        Ok(())
    })
}

/// Writes the dataset as a tensor bundle directory.
///
/// # Safety
/// `dataset` must come from this library and `path` must be nul-terminated.
#[no_mangle]
pub unsafe extern "C" fn tnss_dataset_save(dataset: *const TnssDataset, path: *const c_char) -> TnssStatus {
    guard(|| {
        save_bundle(dataset_arg(dataset)?, path_arg(path)?)?;
        Ok(())
    })
}

/// Number of samples, or 0 for a null handle.
///
/// # Safety
/// `dataset` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn tnss_dataset_len(dataset: *const TnssDataset) -> usize {
    dataset.as_ref().map_or(0, |d| d.inner.len())
}

/// Tensor order, or 0 for a null handle.
///
/// # Safety
/// `dataset` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn tnss_dataset_order(dataset: *const TnssDataset) -> usize {
    dataset.as_ref().map_or(0, |d| d.inner.shape().len())
}

/// # Safety
/// `dataset` must be null or come from this library and not be used again.
#[no_mangle]
pub unsafe extern "C" fn tnss_dataset_free(dataset: *mut TnssDataset) {
    if !dataset.is_null() {
        drop(Box::from_raw(dataset));
    }
}

fn fit_config(max_iters: usize, seed: u64) -> FitConfig {
    FitConfig {
        max_iters,
        seed,
        ..FitConfig::default()
    }
}

/// Fits every sample at one structure and reports the objective.
///
/// # Safety
/// `dataset` must come from this library, `ranks` must point to `n_ranks`
/// values, and `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tnss_evaluate(
    dataset: *const TnssDataset,
    ranks: *const usize,
    n_ranks: usize,
    lambda: f64,
    fit_max_iters: usize,
    seed: u64,
    out: *mut TnssEvaluation,
) -> TnssStatus {
    guard(|| {
        let dataset = dataset_arg(dataset)?;
        let ranks = slice_arg(ranks, n_ranks, "ranks")?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let structure = TNStructure::new(dataset.shape().len(), ranks.to_vec())?;
        let evaluator = Evaluator::new(dataset, lambda, fit_config(fit_max_iters, seed))?;
        let r = evaluator.evaluate(&structure, Source::Init)?.into_result();
        *out = TnssEvaluation {
            objective: r.objective,
            phi: r.phi,
            mean_relative_error: r.mean_relative_error,
            param_count: r.param_count,
        };
        Ok(())
    })
}

/// Defaults: alternating search, lambda 10, r_max 4, 500 evaluations,
/// patience 5, 4 samples per neighborhood, 500 fit iterations, seed 0.
#[no_mangle]
pub extern "C" fn tnss_search_options_default() -> TnssSearchOptions {
    TnssSearchOptions {
        algorithm: TnssAlgorithm::Tnale,
        lambda: 10.0,
        r_max: 4,
        max_evals: StoppingConfig::default().max_evals,
        patience: StoppingConfig::default().patience,
        n_sample: 4,
        fit_max_iters: FitConfig::default().max_iters,
        seed: 0,
    }
}

/// Searches from the all-ones structure (or the whole box for `Exhaustive`).
///
/// # Safety
/// `dataset` must come from this library and `options`, `out` must be valid
/// pointers.
#[no_mangle]
pub unsafe extern "C" fn tnss_search(
    dataset: *const TnssDataset,
    options: *const TnssSearchOptions,
    out: *mut *mut TnssResult,
) -> TnssStatus {
    guard(|| {
        let dataset = dataset_arg(dataset)?;
        let options = *options.as_ref().ok_or_else(|| null("options"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let order = dataset.shape().len();
        let evaluator = Evaluator::new(dataset, options.lambda, fit_config(options.fit_max_iters, options.seed))?;
        let stopping = StoppingConfig {
            max_evals: options.max_evals,
            patience: options.patience,
            delta: 0.0,
        };
        let best = match options.algorithm {
            TnssAlgorithm::Exhaustive => exhaustive_search(&evaluator, order, options.r_max)?,
            TnssAlgorithm::Tnale | TnssAlgorithm::Tnls => {
                let strategy = if options.algorithm == TnssAlgorithm::Tnale {
                    Strategy::Alternating(EnumConfig::new(options.r_max))
                } else {
                    Strategy::Neighborhood(NeighborhoodConfig::new(options.n_sample, options.r_max, options.seed))
                };
                run_local_search(&evaluator, &TNStructure::all_ones(order)?, &strategy, &stopping)?.best
            }
        };
        let history = evaluator.cache().history();
        let evals_to_best = history
            .iter()
            .find(|r| r.objective == best.objective)
            .map_or(best.eval_index, |r| r.eval_index);
        let result = TnssResult {
            ranks: best.structure.ranks().to_vec(),
            evaluation: TnssEvaluation {
                objective: best.objective,
                phi: best.phi,
                mean_relative_error: best.mean_relative_error,
                param_count: best.param_count,
            },
            evals_used: history.len(),
            evals_to_best,
        };
        *out = Box::into_raw(Box::new(result));
        Ok(())
    })
}

/// Length of the best rank vector, or 0 for a null handle.
///
/// # Safety
/// `result` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn tnss_result_num_ranks(result: *const TnssResult) -> usize {
    result.as_ref().map_or(0, |r| r.ranks.len())
}

/// Copies the best rank vector into `buf`, which holds `capacity` values.
///
/// # Safety
/// `result` must come from this library and `buf` must have room for
/// `capacity` values.
#[no_mangle]
pub unsafe extern "C" fn tnss_result_ranks(result: *const TnssResult, buf: *mut usize, capacity: usize) -> TnssStatus {
    guard(|| {
        let result = result.as_ref().ok_or_else(|| null("result"))?;
        if capacity < result.ranks.len() {
            return Err(Failure(
                TnssStatus::BufferTooSmall,
                format!("need room for {} ranks, got {capacity}", result.ranks.len()),
            ));
        }
        if buf.is_null() {
            return Err(null("buf"));
        }
        ptr::copy_nonoverlapping(result.ranks.as_ptr(), buf, result.ranks.len());
        Ok(())
    })
}

/// # Safety
/// `result` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn tnss_result_evaluation(result: *const TnssResult, out: *mut TnssEvaluation) -> TnssStatus {
    guard(|| {
        let result = result.as_ref().ok_or_else(|| null("result"))?;
        *out.as_mut().ok_or_else(|| null("out"))? = result.evaluation;
        Ok(())
    })
}

/// Distinct structures evaluated, or 0 for a null handle.
///
/// # Safety
/// `result` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn tnss_result_evals_used(result: *const TnssResult) -> usize {
    result.as_ref().map_or(0, |r| r.evals_used)
}

/// Evaluation index at which the best objective first appeared.
///
/// # Safety
/// `result` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn tnss_result_evals_to_best(result: *const TnssResult) -> usize {
    result.as_ref().map_or(0, |r| r.evals_to_best)
}

/// # Safety
/// `result` must be null or come from this library and not be used again.
#[no_mangle]
pub unsafe extern "C" fn tnss_result_free(result: *mut TnssResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}
