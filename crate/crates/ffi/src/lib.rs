//! C interface to the kpagg solver.
//!
//! Objects are exposed as opaque handles created by `*_generate`, `*_read`,
//! `*_learn`, `*_load` or `kpagg_train` and released by the matching
//! `*_free`. Every fallible call returns a [`KpaggStatus`]; on failure the
//! message is kept per thread and read back with
//! [`kpagg_last_error_message`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use kpagg::aggregation::{feature_table, learn_aggregation, AggregationPolicy, QLearningParams};
use kpagg::baselines::{dp_solve, greedy_solve};
use kpagg::dataset_io::{read_dataset, write_dataset};
use kpagg::generate::generate;
use kpagg::neural::{checkpoint, ActionMode, ActorCritic};
use kpagg::trainer::{solve_with_policy, train, TrainConfig};
use kpagg::{Dataset, Error, Family, Solution};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KpaggStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parameter = 3,
    Domain = 4,
    Parse = 5,
    Dimension = 6,
    Resource = 7,
    Numeric = 8,
    Usage = 9,
    Integrity = 10,
    Io = 11,
    Config = 12,
    Panic = 13,
}

/// Instance family selector for [`kpagg_dataset_generate`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KpaggFamily {
    Random = 0,
    FixedCapacity = 1,
    Hard = 2,
}

/// A set of knapsack instances.
pub struct KpaggDataset(Dataset);

/// A learned aggregation policy.
pub struct KpaggAggregation(AggregationPolicy);

/// A trained actor-critic model.
pub struct KpaggModel(ActorCritic);

/// Value and weight of one solution, in the instance's scaled units.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct KpaggSolution {
    pub value: u64,
    pub weight: u64,
    pub item_count: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn status_of(err: &Error) -> KpaggStatus {
    match err {
        Error::Parameter(_) => KpaggStatus::Parameter,
        Error::Domain(_) => KpaggStatus::Domain,
        Error::Parse { .. } => KpaggStatus::Parse,
        Error::Dimension(_) => KpaggStatus::Dimension,
        Error::Resource(_) => KpaggStatus::Resource,
        Error::Numeric(_) => KpaggStatus::Numeric,
        Error::Usage(_) => KpaggStatus::Usage,
        Error::Integrity(_) => KpaggStatus::Integrity,
        Error::Io { .. } => KpaggStatus::Io,
        Error::Config(_) => KpaggStatus::Config,
    }
}

struct Failure(KpaggStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> KpaggStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            KpaggStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            KpaggStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(KpaggStatus::NullPointer, format!("{what} is null"))
}

unsafe fn path_arg(p: *const c_char) -> Result<PathBuf, Failure> {
    if p.is_null() {
        return Err(null("path"));
    }
    // SAFETY: caller passes a NUL-terminated string.
    let s = unsafe { CStr::from_ptr(p) }
        .to_str()
        .map_err(|_| Failure(KpaggStatus::InvalidUtf8, "path is not UTF-8".into()))?;
    Ok(PathBuf::from(s))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    // SAFETY: caller passes a live handle or null.
    unsafe { p.as_ref() }.ok_or_else(|| null(what))
}

fn instance(ds: &Dataset, index: usize) -> Result<&kpagg::KpInstance, Failure> {
    ds.instances.get(index).ok_or_else(|| {
        Failure(
            KpaggStatus::Parameter,
            format!("instance index {index} outside 0..{}", ds.len()),
        )
    })
}

unsafe fn write_solution(out: *mut KpaggSolution, s: &Solution) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("out"));
    }
    // SAFETY: `out` is non-null and points to writable storage.
    unsafe {
        *out = KpaggSolution {
            value: s.total_value,
            weight: s.total_weight,
            item_count: s.selected.len(),
        }
    };
    Ok(())
}

unsafe fn write_handle<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("out"));
    }
    // SAFETY: `out` is non-null and points to writable storage.
    unsafe { *out = Box::into_raw(Box::new(value)) };
    Ok(())
}

/// Copies the calling thread's last error message into `buf` (NUL
/// terminated, truncated to `len - 1` bytes) and returns the full message
/// length in bytes, excluding the terminator.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn kpagg_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            // SAFETY: `buf` holds `len` bytes and `n < len`.
            unsafe {
                ptr::copy_nonoverlapping(msg.as_ptr(), buf.cast::<u8>(), n);
                *buf.add(n) = 0;
            }
        }
        msg.len()
    })
}

/// Generates `m` instances of up to `n` items. `capacity` overrides the fixed
/// capacity of the fixed-capacity family when non-zero.
///
/// # Safety
/// `out` must point to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn kpagg_dataset_generate(
    family: KpaggFamily,
    m: usize,
    n: usize,
    r: u64,
    seed: u64,
    capacity: u64,
    out: *mut *mut KpaggDataset,
) -> KpaggStatus {
    guard(|| {
        let family = match family {
            KpaggFamily::Random => Family::Random,
            KpaggFamily::FixedCapacity => Family::FixedCapacity,
            KpaggFamily::Hard => Family::Hard,
        };
        let cap = (capacity > 0).then_some(capacity);
        let ds = generate(family, m, n, r, seed, cap)?;
        unsafe { write_handle(out, KpaggDataset(ds)) }
    })
}

/// # Safety
/// `path` must be a NUL-terminated string; `out` must point to writable
/// storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn kpagg_dataset_read(
    path: *const c_char,
    out: *mut *mut KpaggDataset,
) -> KpaggStatus {
    guard(|| {
        let path = unsafe { path_arg(path) }?;
        let ds = read_dataset(path)?;
        unsafe { write_handle(out, KpaggDataset(ds)) }
    })
}

/// # Safety
/// `ds` must be a live dataset handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn kpagg_dataset_write(
    ds: *const KpaggDataset,
    path: *const c_char,
) -> KpaggStatus {
    guard(|| {
        let ds = unsafe { handle(ds, "dataset") }?;
        let path = unsafe { path_arg(path) }?;
        write_dataset(&ds.0, path)?;
        Ok(())
    })
}

/// Number of instances, or 0 for a null handle.
///
/// # Safety
/// `ds` must be null or a live dataset handle.
#[no_mangle]
pub unsafe extern "C" fn kpagg_dataset_len(ds: *const KpaggDataset) -> usize {
    unsafe { ds.as_ref() }.map_or(0, |d| d.0.len())
}

/// Largest instance size `N` the dataset admits, or 0 for a null handle.
///
/// # Safety
/// `ds` must be null or a live dataset handle.
#[no_mangle]
pub unsafe extern "C" fn kpagg_dataset_n_max(ds: *const KpaggDataset) -> usize {
    unsafe { ds.as_ref() }.map_or(0, |d| d.0.n_max())
}

/// # Safety
/// `ds` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn kpagg_dataset_free(ds: *mut KpaggDataset) {
    if !ds.is_null() {
        // SAFETY: the handle came from Box::into_raw.
        drop(unsafe { Box::from_raw(ds) });
    }
}

/// Greedy value-to-weight solution of instance `index` (0-based).
///
/// # Safety
/// `ds` must be a live dataset handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn kpagg_solve_greedy(
    ds: *const KpaggDataset,
    index: usize,
    out: *mut KpaggSolution,
) -> KpaggStatus {
    guard(|| {
        let ds = unsafe { handle(ds, "dataset") }?;
        let s = greedy_solve(instance(&ds.0, index)?);
        unsafe { write_solution(out, &s) }
    })
}

/// Exact dynamic-programming solution of instance `index` (0-based).
///
/// # Safety
/// `ds` must be a live dataset handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn kpagg_solve_dp(
    ds: *const KpaggDataset,
    index: usize,
    out: *mut KpaggSolution,
) -> KpaggStatus {
    guard(|| {
        let ds = unsafe { handle(ds, "dataset") }?;
        let s = dp_solve(instance(&ds.0, index)?)?;
        unsafe { write_solution(out, &s) }
    })
}

/// Learns an aggregation policy from `ds` with default Q-learning settings.
///
/// # Safety
/// `ds` must be a live dataset handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn kpagg_aggregation_learn(
    ds: *const KpaggDataset,
    seed: u64,
    out: *mut *mut KpaggAggregation,
) -> KpaggStatus {
    guard(|| {
        let ds = unsafe { handle(ds, "dataset") }?;
        let table = feature_table(&ds.0.instances, ds.0.n_max())?;
        let outcome = learn_aggregation(&table, &QLearningParams::default(), seed)?;
        unsafe { write_handle(out, KpaggAggregation(outcome.policy)) }
    })
}

/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn kpagg_aggregation_read(
    path: *const c_char,
    out: *mut *mut KpaggAggregation,
) -> KpaggStatus {
    guard(|| {
        let path = unsafe { path_arg(path) }?;
        let policy = AggregationPolicy::load(path)?;
        unsafe { write_handle(out, KpaggAggregation(policy)) }
    })
}

/// # Safety
/// `agg` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn kpagg_aggregation_write(
    agg: *const KpaggAggregation,
    path: *const c_char,
) -> KpaggStatus {
    guard(|| {
        let agg = unsafe { handle(agg, "aggregation") }?;
        let path = unsafe { path_arg(path) }?;
        agg.0.save(path)?;
        Ok(())
    })
}

/// # Safety
/// `agg` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn kpagg_aggregation_free(agg: *mut KpaggAggregation) {
    if !agg.is_null() {
        // SAFETY: the handle came from Box::into_raw.
        drop(unsafe { Box::from_raw(agg) });
    }
}

/// Trains a model on `ds` for `t_max` steps with default settings. `agg` may
/// be null to train on the raw feature vector. When `best` is non-null it
/// receives the best value found per instance (`kpagg_dataset_len` entries).
///
/// # Safety
/// `ds` must be a live dataset handle, `agg` null or a live handle, `best`
/// null or writable for `kpagg_dataset_len(ds)` values, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn kpagg_train(
    ds: *const KpaggDataset,
    agg: *const KpaggAggregation,
    t_max: u64,
    seed: u64,
    best: *mut u64,
    out: *mut *mut KpaggModel,
) -> KpaggStatus {
    guard(|| {
        let ds = unsafe { handle(ds, "dataset") }?;
        let agg = unsafe { agg.as_ref() }.map(|a| &a.0);
        let mut cfg = TrainConfig::for_n(ds.0.n_max());
        cfg.t_max = t_max;
        cfg.seed = seed;
        let outcome = train(&ds.0, agg, &cfg)?;
        if !best.is_null() {
            // SAFETY: caller provides room for one value per instance.
            let dst = unsafe { std::slice::from_raw_parts_mut(best, ds.0.len()) };
            dst.copy_from_slice(&outcome.best.values);
        }
        unsafe { write_handle(out, KpaggModel(outcome.model)) }
    })
}

/// Loads a checkpoint written by `kpagg train` or [`kpagg_model_save`].
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn kpagg_model_load(
    path: *const c_char,
    out: *mut *mut KpaggModel,
) -> KpaggStatus {
    guard(|| {
        let path = unsafe { path_arg(path) }?;
        let model = checkpoint::load(path, None)?;
        unsafe { write_handle(out, KpaggModel(model)) }
    })
}

/// # Safety
/// `model` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn kpagg_model_save(
    model: *const KpaggModel,
    path: *const c_char,
) -> KpaggStatus {
    guard(|| {
        let model = unsafe { handle(model, "model") }?;
        let path = unsafe { path_arg(path) }?;
        checkpoint::save(&model.0, path)?;
        Ok(())
    })
}

/// Item count `N` the model was trained for, or 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn kpagg_model_n_max(model: *const KpaggModel) -> usize {
    unsafe { model.as_ref() }.map_or(0, |m| m.0.n_max())
}

/// Solves instance `index` of `ds` with the model. `episodes == 0` runs one
/// greedy rollout; otherwise the best of the greedy rollout and `episodes`
/// sampled ones is returned. `agg` may be null for a model trained without
/// aggregation.
///
/// # Safety
/// `model` and `ds` must be live handles, `agg` null or live, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn kpagg_model_solve(
    model: *const KpaggModel,
    agg: *const KpaggAggregation,
    ds: *const KpaggDataset,
    index: usize,
    episodes: usize,
    seed: u64,
    out: *mut KpaggSolution,
) -> KpaggStatus {
    guard(|| {
        let model = unsafe { handle(model, "model") }?;
        let ds = unsafe { handle(ds, "dataset") }?;
        let agg = unsafe { agg.as_ref() }.map(|a| &a.0);
        let mode = if episodes == 0 {
            ActionMode::Greedy
        } else {
            ActionMode::Sample
        };
        let s = solve_with_policy(&model.0, agg, instance(&ds.0, index)?, mode, episodes, seed)?;
        unsafe { write_solution(out, &s) }
    })
}

/// # Safety
/// `model` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn kpagg_model_free(model: *mut KpaggModel) {
    if !model.is_null() {
        // SAFETY: the handle came from Box::into_raw.
        drop(unsafe { Box::from_raw(model) });
    }
}
