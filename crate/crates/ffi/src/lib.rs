//! C ABI for the pairrank recommender core.
//!
//! Every function returns a [`PrStatus`]; results come back through out
//! pointers. Handles are opaque and freed with their `_free` function.
//! On any non-OK status, `pr_last_error_message` returns a
//! NUL-terminated description valid until the next call on the same
//! thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use pairrank::dataset::{
    binarize_and_index, filter_min_interactions, load_interactions, loo_split, ColumnFormat,
    InteractionDataset, LooSplit,
};
use pairrank::error::Error;
use pairrank::evaluation::{evaluate_full, top_k_lists, EvalContext};
use pairrank::explainability::{
    build_explainability, build_neighborhoods, explain_recommendation, ExplainabilityMatrix,
    ItemNeighborhoods, ItemVectors,
};
use pairrank::model::FactorModel;
use pairrank::propensity::{NeighborhoodVariant, PropensityModel};
use pairrank::training::{train, train_merged, LossKind, TrainingConfig};

/// Status codes returned by every entry point.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum PrStatus {
    Ok = 0,
    /// Invalid arguments or configuration.
    Usage = 1,
    /// Input data or artifact problem.
    Data = 2,
    /// Numeric failure during training.
    Numeric = 3,
    /// A required pointer argument was NULL.
    NullArg = 4,
    /// Unexpected internal failure.
    Internal = 5,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_error(message: &str) {
    let sanitized = message.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap();
    });
}

fn status_of(err: &Error) -> PrStatus {
    match err.exit_code() {
        1 => PrStatus::Usage,
        3 => PrStatus::Numeric,
        _ => PrStatus::Data,
    }
}

/// Message describing the most recent error on this thread; empty when
/// the last call succeeded. The pointer stays valid until the next
/// pairrank call on the same thread.
#[no_mangle]
pub extern "C" fn pr_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Crate version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn pr_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Binarized, filtered interaction dataset.
pub struct PrDataset {
    inner: InteractionDataset,
}

/// Leave-one-out split of a dataset.
pub struct PrSplit {
    dataset: InteractionDataset,
    inner: LooSplit,
}

/// Explainability matrices, propensities and neighborhoods for one
/// neighborhood size, covering the training, merged-retrain and
/// evaluation phases.
pub struct PrComponents {
    eta: usize,
    e_train: ExplainabilityMatrix,
    e_merged: ExplainabilityMatrix,
    e_eval: ExplainabilityMatrix,
    prop_train: PropensityModel,
    prop_merged: PropensityModel,
    nbrs_full: ItemNeighborhoods,
    merged: InteractionDataset,
    full: InteractionDataset,
}

/// Trained latent-factor model.
pub struct PrModel {
    inner: FactorModel,
    seed: u64,
    loss: LossKind,
}

/// Loss kinds, matching the training losses by name.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum PrLoss {
    Bpr = 0,
    Ubpr = 1,
    Ebpr = 2,
    Puebpr = 3,
    Uebpr = 4,
}

impl PrLoss {
    fn to_kind(self) -> LossKind {
        match self {
            PrLoss::Bpr => LossKind::Bpr,
            PrLoss::Ubpr => LossKind::Ubpr,
            PrLoss::Ebpr => LossKind::Ebpr,
            PrLoss::Puebpr => LossKind::PUebpr,
            PrLoss::Uebpr => LossKind::Uebpr,
        }
    }
}

/// Training configuration. `merged_epochs` of 0 trains on the train
/// partition with per-epoch validation and early stopping; a positive
/// value retrains on the merged train+validation data for exactly that
/// many epochs.
#[repr(C)]
#[derive(Clone, Copy)]
pub struct PrTrainConfig {
    pub loss: PrLoss,
    pub latent_dim: u32,
    pub batch_size: u32,
    pub l2: f64,
    pub learning_rate: f64,
    pub max_epochs: u32,
    pub patience: u32,
    pub seed: u64,
    /// Non-zero clamps instance weights into [0, 1].
    pub weight_clip: u8,
    pub merged_epochs: u32,
}

/// Full metric table at one cutoff.
#[repr(C)]
#[derive(Clone, Copy, Default)]
pub struct PrMetrics {
    pub hr: f64,
    pub ndcg: f64,
    pub mep: f64,
    pub wmep: f64,
    pub efd: f64,
    pub avg_pop: f64,
    pub div: f64,
}

fn guarded<F: FnOnce() -> PrStatus>(body: F) -> PrStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(panic) => {
            let message = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".to_string());
            set_error(&message);
            PrStatus::Internal
        }
    }
}

macro_rules! nonnull {
    ($ptr:expr) => {
        match unsafe { $ptr.as_ref() } {
            Some(r) => r,
            None => {
                set_error(concat!(stringify!($ptr), " is NULL"));
                return PrStatus::NullArg;
            }
        }
    };
}

unsafe fn read_path(path: *const c_char) -> Result<PathBuf, PrStatus> {
    if path.is_null() {
        set_error("path is NULL");
        return Err(PrStatus::NullArg);
    }
    match CStr::from_ptr(path).to_str() {
        Ok(s) => Ok(PathBuf::from(s)),
        Err(_) => {
            set_error("path is not valid UTF-8");
            Err(PrStatus::Usage)
        }
    }
}

fn deliver<T>(value: T, out: *mut *mut T) -> PrStatus {
    if out.is_null() {
        set_error("out pointer is NULL");
        return PrStatus::NullArg;
    }
    unsafe { *out = Box::into_raw(Box::new(value)) };
    set_error("");
    PrStatus::Ok
}

/// Load a delimiter-separated interaction log (columns user, item,
/// value, timestamp), binarize at `threshold` and drop users with
/// fewer than `min_interactions` positives.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pr_dataset_load(
    path: *const c_char,
    delimiter: c_char,
    threshold: f64,
    min_interactions: u32,
    out: *mut *mut PrDataset,
) -> PrStatus {
    guarded(|| {
        let path = match read_path(path) {
            Ok(p) => p,
            Err(s) => return s,
        };
        let format = ColumnFormat {
            delimiter: (delimiter as u8) as char,
            ..ColumnFormat::default()
        };
        match load_interactions(&path, &format) {
            Ok((raw, _warnings)) => {
                let ds = filter_min_interactions(
                    &binarize_and_index(&raw, threshold),
                    min_interactions as usize,
                );
                deliver(PrDataset { inner: ds }, out)
            }
            Err(e) => {
                set_error(&e.to_string());
                status_of(&e)
            }
        }
    })
}

/// # Safety
/// `dataset` must come from `pr_dataset_load` and not be used after.
#[no_mangle]
pub unsafe extern "C" fn pr_dataset_free(dataset: *mut PrDataset) {
    if !dataset.is_null() {
        drop(Box::from_raw(dataset));
    }
}

/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn pr_dataset_stats(
    dataset: *const PrDataset,
    users: *mut u64,
    items: *mut u64,
    interactions: *mut u64,
) -> PrStatus {
    guarded(|| {
        let ds = nonnull!(dataset);
        if users.is_null() || items.is_null() || interactions.is_null() {
            set_error("stats out pointers are NULL");
            return PrStatus::NullArg;
        }
        *users = ds.inner.n_users() as u64;
        *items = ds.inner.n_items() as u64;
        *interactions = ds.inner.interaction_count() as u64;
        set_error("");
        PrStatus::Ok
    })
}

/// Leave-one-out split with `n_negatives` sampled evaluation negatives
/// per holdout, deterministic in `seed`.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn pr_split_create(
    dataset: *const PrDataset,
    n_negatives: u32,
    seed: u64,
    out: *mut *mut PrSplit,
) -> PrStatus {
    guarded(|| {
        let ds = nonnull!(dataset);
        match loo_split(&ds.inner, n_negatives as usize, seed) {
            Ok(split) => deliver(
                PrSplit {
                    dataset: ds.inner.clone(),
                    inner: split,
                },
                out,
            ),
            Err(e) => {
                set_error(&e.to_string());
                status_of(&e)
            }
        }
    })
}

/// # Safety
/// `split` must come from `pr_split_create` and not be used after.
#[no_mangle]
pub unsafe extern "C" fn pr_split_free(split: *mut PrSplit) {
    if !split.is_null() {
        drop(Box::from_raw(split));
    }
}

/// Build neighborhoods, explainability matrices and propensities for
/// all protocol phases at neighborhood size `eta`.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn pr_components_build(
    split: *const PrSplit,
    eta: u32,
    out: *mut *mut PrComponents,
) -> PrStatus {
    guarded(|| {
        let sp = nonnull!(split);
        if eta == 0 {
            set_error("eta must be at least 1");
            return PrStatus::Usage;
        }
        let eta = eta as usize;
        let merged = sp.inner.merged_train();
        let full = sp.inner.full_dataset();
        let nbrs_train = build_neighborhoods(&sp.inner.train, eta);
        let nbrs_merged = build_neighborhoods(&merged, eta);
        let nbrs_full = build_neighborhoods(&full, eta);
        let prop_train =
            match PropensityModel::build(&sp.inner.train, &nbrs_train, NeighborhoodVariant::PaperSum)
            {
                Ok(p) => p,
                Err(e) => {
                    set_error(&e.to_string());
                    return status_of(&e);
                }
            };
        let prop_merged =
            match PropensityModel::build(&merged, &nbrs_merged, NeighborhoodVariant::PaperSum) {
                Ok(p) => p,
                Err(e) => {
                    set_error(&e.to_string());
                    return status_of(&e);
                }
            };
        let components = PrComponents {
            eta,
            e_train: build_explainability(&sp.inner.train, &nbrs_train),
            e_merged: build_explainability(&merged, &nbrs_merged),
            e_eval: build_explainability(&full, &nbrs_full),
            prop_train,
            prop_merged,
            nbrs_full,
            merged,
            full,
        };
        deliver(components, out)
    })
}

/// # Safety
/// `components` must come from `pr_components_build`.
#[no_mangle]
pub unsafe extern "C" fn pr_components_free(components: *mut PrComponents) {
    if !components.is_null() {
        drop(Box::from_raw(components));
    }
}

/// Train a model on the split with the configured loss.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn pr_train(
    split: *const PrSplit,
    components: *const PrComponents,
    config: *const PrTrainConfig,
    out: *mut *mut PrModel,
) -> PrStatus {
    guarded(|| {
        let sp = nonnull!(split);
        let comp = nonnull!(components);
        let cfg = nonnull!(config);
        let loss = cfg.loss.to_kind();
        let merged = cfg.merged_epochs > 0;
        let training_config = TrainingConfig {
            loss,
            latent_dim: cfg.latent_dim.max(1) as usize,
            batch_size: cfg.batch_size.max(1) as usize,
            l2: cfg.l2,
            eta: comp.eta,
            learning_rate: cfg.learning_rate,
            max_epochs: cfg.max_epochs as usize,
            patience: cfg.patience.max(1) as usize,
            seed: cfg.seed,
            weight_clip: cfg.weight_clip != 0,
            ..TrainingConfig::default()
        };
        let (e, prop) = if merged {
            (&comp.e_merged, &comp.prop_merged)
        } else {
            (&comp.e_train, &comp.prop_train)
        };
        let result = if merged {
            train_merged(
                &sp.inner,
                &training_config,
                cfg.merged_epochs as usize,
                loss.needs_explainability().then_some(e),
                loss.needs_propensity().then_some(prop),
            )
        } else {
            train(
                &sp.inner,
                &training_config,
                loss.needs_explainability().then_some(e),
                loss.needs_propensity().then_some(prop),
            )
        };
        match result {
            Ok((model, _history)) => deliver(
                PrModel {
                    inner: model,
                    seed: cfg.seed,
                    loss,
                },
                out,
            ),
            Err(e) => {
                set_error(&e.to_string());
                status_of(&e)
            }
        }
    })
}

/// # Safety
/// `model` must come from `pr_train` or `pr_model_load`.
#[no_mangle]
pub unsafe extern "C" fn pr_model_free(model: *mut PrModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Dot-product score of one user-item pair.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn pr_model_score(
    model: *const PrModel,
    user: u32,
    item: u32,
    out: *mut f64,
) -> PrStatus {
    guarded(|| {
        let m = nonnull!(model);
        if out.is_null() {
            set_error("out pointer is NULL");
            return PrStatus::NullArg;
        }
        if user as usize >= m.inner.n_users() || item as usize >= m.inner.n_items() {
            set_error("user or item index out of range");
            return PrStatus::Usage;
        }
        *out = m.inner.score(user, item);
        set_error("");
        PrStatus::Ok
    })
}

/// Persist the model checkpoint (header plus little-endian f32 rows).
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn pr_model_save(model: *const PrModel, path: *const c_char) -> PrStatus {
    guarded(|| {
        let m = nonnull!(model);
        let path = match read_path(path) {
            Ok(p) => p,
            Err(s) => return s,
        };
        match m.inner.save(&path, m.seed, m.loss.tag()) {
            Ok(()) => {
                set_error("");
                PrStatus::Ok
            }
            Err(e) => {
                set_error(&e.to_string());
                status_of(&e)
            }
        }
    })
}

/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn pr_model_load(path: *const c_char, out: *mut *mut PrModel) -> PrStatus {
    guarded(|| {
        let path = match read_path(path) {
            Ok(p) => p,
            Err(s) => return s,
        };
        match FactorModel::load(&path) {
            Ok((model, seed, tag)) => {
                let loss = tag.parse().unwrap_or(LossKind::Bpr);
                deliver(
                    PrModel {
                        inner: model,
                        seed,
                        loss,
                    },
                    out,
                )
            }
            Err(e) => {
                set_error(&e.to_string());
                status_of(&e)
            }
        }
    })
}

/// Full metric table (HR, NDCG, MEP, WMEP, EFD, Avg_Pop, Div) at
/// cutoff `k`.
///
/// # Safety
/// All pointers must be valid; the split and components must come from
/// the same dataset the model was trained on.
#[no_mangle]
pub unsafe extern "C" fn pr_evaluate(
    model: *const PrModel,
    split: *const PrSplit,
    components: *const PrComponents,
    k: u32,
    out: *mut PrMetrics,
) -> PrStatus {
    guarded(|| {
        let m = nonnull!(model);
        let sp = nonnull!(split);
        let comp = nonnull!(components);
        if out.is_null() {
            set_error("out pointer is NULL");
            return PrStatus::NullArg;
        }
        if k == 0 {
            set_error("k must be at least 1");
            return PrStatus::Usage;
        }
        let vectors = ItemVectors::new(&comp.merged);
        let ctx = EvalContext {
            split: &sp.inner,
            seen: &comp.merged,
            e_eval: &comp.e_eval,
            prop: &comp.prop_merged,
            vectors: &vectors,
            k_cut: k as usize,
            propensity_floor: pairrank::propensity::DEFAULT_PROPENSITY_FLOOR,
        };
        let metrics = evaluate_full(&m.inner, &ctx);
        *out = PrMetrics {
            hr: metrics.hr,
            ndcg: metrics.ndcg,
            mep: metrics.mep,
            wmep: metrics.wmep,
            efd: metrics.efd,
            avg_pop: metrics.avg_pop,
            div: metrics.div,
        };
        set_error("");
        PrStatus::Ok
    })
}

/// Top-k recommendations for one user over the full catalog minus the
/// user's merged train positives. On entry `*len` is the capacity of
/// both arrays; on success it holds the number of entries written.
///
/// # Safety
/// `items` and `scores` must point to at least `*len` elements.
#[no_mangle]
pub unsafe extern "C" fn pr_topk(
    model: *const PrModel,
    split: *const PrSplit,
    user: u32,
    k: u32,
    items: *mut u32,
    scores: *mut f64,
    len: *mut usize,
) -> PrStatus {
    guarded(|| {
        let m = nonnull!(model);
        let sp = nonnull!(split);
        if items.is_null() || scores.is_null() || len.is_null() {
            set_error("output buffers are NULL");
            return PrStatus::NullArg;
        }
        if user as usize >= m.inner.n_users() {
            set_error("user index out of range");
            return PrStatus::Usage;
        }
        let capacity = *len;
        if capacity < k as usize {
            set_error("buffer capacity below k");
            return PrStatus::Usage;
        }
        let merged = sp.inner.merged_train();
        let lists = top_k_lists(&m.inner, &merged, k as usize);
        let list = &lists[user as usize];
        for (slot, (&i, &s)) in (0..capacity).zip(list.items.iter().zip(&list.scores)) {
            *items.add(slot) = i;
            *scores.add(slot) = s;
        }
        *len = list.items.len().min(capacity);
        set_error("");
        PrStatus::Ok
    })
}

/// Item-based explanation for (user, item): the explainability value
/// plus the interacted neighbors and their similarities,
/// similarity-descending. `*len` is the buffer capacity on entry and
/// the written count on exit.
///
/// # Safety
/// `neighbors` and `similarities` must point to at least `*len`
/// elements.
#[no_mangle]
pub unsafe extern "C" fn pr_explain(
    split: *const PrSplit,
    components: *const PrComponents,
    user: u32,
    item: u32,
    e_value: *mut f64,
    neighbors: *mut u32,
    similarities: *mut f64,
    len: *mut usize,
) -> PrStatus {
    guarded(|| {
        let sp = nonnull!(split);
        let comp = nonnull!(components);
        if e_value.is_null() || neighbors.is_null() || similarities.is_null() || len.is_null() {
            set_error("output pointers are NULL");
            return PrStatus::NullArg;
        }
        if user as usize >= sp.dataset.n_users() || item as usize >= sp.dataset.n_items() {
            set_error("user or item index out of range");
            return PrStatus::Usage;
        }
        let explanation = explain_recommendation(user, item, &comp.nbrs_full, &comp.full);
        *e_value = explanation.e_value;
        let capacity = *len;
        for (slot, (j, sim)) in explanation
            .interacted_neighbors
            .iter()
            .take(capacity)
            .enumerate()
        {
            *neighbors.add(slot) = *j;
            *similarities.add(slot) = *sim;
        }
        *len = explanation.interacted_neighbors.len().min(capacity);
        set_error("");
        PrStatus::Ok
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ffi::CString;
    use std::io::Write;

    fn write_synth(path: &std::path::Path) {
        // popularity-skewed toy log in ml-100k column order
        let mut out = std::fs::File::create(path).unwrap();
        let mut ts = 0;
        for u in 0..20 {
            for k in 0..8 {
                let item = (u + k * k) % 15;
                writeln!(out, "u{u}\ti{item}\t{}\t{ts}", 1 + (u + k) % 5).unwrap();
                ts += 1;
            }
        }
    }

    fn c_path(p: &std::path::Path) -> CString {
        CString::new(p.to_str().unwrap()).unwrap()
    }

    fn last_error() -> String {
        unsafe {
            CStr::from_ptr(pr_last_error_message())
                .to_string_lossy()
                .into_owned()
        }
    }

    #[test]
    fn full_chain_through_the_c_abi() {
        let dir = tempfile::tempdir().unwrap();
        let data = dir.path().join("log.tsv");
        write_synth(&data);

        unsafe {
            let mut ds: *mut PrDataset = std::ptr::null_mut();
            let status = pr_dataset_load(c_path(&data).as_ptr(), b'\t' as c_char, 0.0, 3, &mut ds);
            assert_eq!(status, PrStatus::Ok, "{}", last_error());

            let (mut users, mut items, mut interactions) = (0u64, 0u64, 0u64);
            assert_eq!(
                pr_dataset_stats(ds, &mut users, &mut items, &mut interactions),
                PrStatus::Ok
            );
            assert!(users > 0 && items > 0 && interactions > 0);

            let mut split: *mut PrSplit = std::ptr::null_mut();
            assert_eq!(pr_split_create(ds, 3, 7, &mut split), PrStatus::Ok, "{}", last_error());

            let mut comp: *mut PrComponents = std::ptr::null_mut();
            assert_eq!(pr_components_build(split, 3, &mut comp), PrStatus::Ok, "{}", last_error());

            let cfg = PrTrainConfig {
                loss: PrLoss::Ebpr,
                latent_dim: 4,
                batch_size: 16,
                l2: 0.0,
                learning_rate: 0.05,
                max_epochs: 5,
                patience: 5,
                seed: 3,
                weight_clip: 0,
                merged_epochs: 4,
            };
            let mut model: *mut PrModel = std::ptr::null_mut();
            assert_eq!(pr_train(split, comp, &cfg, &mut model), PrStatus::Ok, "{}", last_error());

            let mut score = f64::NAN;
            assert_eq!(pr_model_score(model, 0, 0, &mut score), PrStatus::Ok);
            assert!(score.is_finite());

            let mut metrics = PrMetrics::default();
            assert_eq!(
                pr_evaluate(model, split, comp, 5, &mut metrics),
                PrStatus::Ok,
                "{}",
                last_error()
            );
            assert!((0.0..=1.0).contains(&metrics.hr));
            assert!(metrics.mep >= metrics.wmep);

            let mut topk_items = [0u32; 5];
            let mut topk_scores = [0f64; 5];
            let mut len = topk_items.len();
            assert_eq!(
                pr_topk(
                    model,
                    split,
                    0,
                    5,
                    topk_items.as_mut_ptr(),
                    topk_scores.as_mut_ptr(),
                    &mut len
                ),
                PrStatus::Ok
            );
            assert_eq!(len, 5);
            for w in topk_scores.windows(2) {
                assert!(w[0] >= w[1]);
            }

            let mut e_value = f64::NAN;
            let mut nbrs = [0u32; 8];
            let mut sims = [0f64; 8];
            let mut n_len = nbrs.len();
            assert_eq!(
                pr_explain(
                    split,
                    comp,
                    0,
                    topk_items[0],
                    &mut e_value,
                    nbrs.as_mut_ptr(),
                    sims.as_mut_ptr(),
                    &mut n_len
                ),
                PrStatus::Ok
            );
            assert!((0.0..=1.0).contains(&e_value));
            assert_eq!(n_len, (e_value * 3.0).round() as usize);

            // checkpoint round-trip through the ABI
            let model_path = dir.path().join("m.bin");
            assert_eq!(pr_model_save(model, c_path(&model_path).as_ptr()), PrStatus::Ok);
            let mut reloaded: *mut PrModel = std::ptr::null_mut();
            assert_eq!(
                pr_model_load(c_path(&model_path).as_ptr(), &mut reloaded),
                PrStatus::Ok
            );
            let mut score2 = f64::NAN;
            assert_eq!(pr_model_score(reloaded, 0, 0, &mut score2), PrStatus::Ok);
            // parameters round through f32 on disk
            assert!((score2 - score).abs() < 1e-5, "{score2} vs {score}");

            pr_model_free(reloaded);
            pr_model_free(model);
            pr_components_free(comp);
            pr_split_free(split);
            pr_dataset_free(ds);
        }
    }

    #[test]
    fn errors_carry_status_and_message() {
        unsafe {
            let mut ds: *mut PrDataset = std::ptr::null_mut();
            let missing = CString::new("/no/such/file.tsv").unwrap();
            let status = pr_dataset_load(missing.as_ptr(), b'\t' as c_char, 0.0, 1, &mut ds);
            assert_eq!(status, PrStatus::Data);
            assert!(last_error().contains("/no/such/file.tsv"));

            // NULL handles
            let mut users = 0u64;
            let mut items = 0u64;
            let mut n = 0u64;
            assert_eq!(
                pr_dataset_stats(std::ptr::null(), &mut users, &mut items, &mut n),
                PrStatus::NullArg
            );

            // out-of-range user is a usage error
            let dir = tempfile::tempdir().unwrap();
            let data = dir.path().join("log.tsv");
            write_synth(&data);
            let status = pr_dataset_load(c_path(&data).as_ptr(), b'\t' as c_char, 0.0, 3, &mut ds);
            assert_eq!(status, PrStatus::Ok);
            let mut split: *mut PrSplit = std::ptr::null_mut();
            assert_eq!(pr_split_create(ds, 2, 1, &mut split), PrStatus::Ok);
            let mut comp: *mut PrComponents = std::ptr::null_mut();
            assert_eq!(pr_components_build(split, 2, &mut comp), PrStatus::Ok);
            let cfg = PrTrainConfig {
                loss: PrLoss::Bpr,
                latent_dim: 2,
                batch_size: 8,
                l2: 0.0,
                learning_rate: 0.05,
                max_epochs: 2,
                patience: 2,
                seed: 1,
                weight_clip: 0,
                merged_epochs: 1,
            };
            let mut model: *mut PrModel = std::ptr::null_mut();
            assert_eq!(pr_train(split, comp, &cfg, &mut model), PrStatus::Ok);
            let mut score = 0f64;
            assert_eq!(
                pr_model_score(model, 10_000, 0, &mut score),
                PrStatus::Usage
            );
            assert!(last_error().contains("out of range"));

            pr_model_free(model);
            pr_components_free(comp);
            pr_split_free(split);
            pr_dataset_free(ds);
        }
    }

    #[test]
    fn generated_header_exists_and_compiles() {
        let header = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("include/pairrank.h");
        assert!(header.exists(), "cbindgen should generate include/pairrank.h");
        let text = std::fs::read_to_string(&header).unwrap();
        for symbol in [
            "pr_dataset_load",
            "pr_split_create",
            "pr_components_build",
            "pr_train",
            "pr_evaluate",
            "pr_topk",
            "pr_explain",
            "pr_last_error_message",
        ] {
            assert!(text.contains(symbol), "header misses {symbol}");
        }
        // syntax-check with the system C compiler when available
        if let Ok(out) = std::process::Command::new("cc")
            .args(["-std=c99", "-fsyntax-only"])
            .arg(&header)
            .output()
        {
            assert!(
                out.status.success(),
                "header failed C compilation:\n{}",
                String::from_utf8_lossy(&out.stderr)
            );
        }
    }
}
