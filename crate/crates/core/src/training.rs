//! The five pairwise loss kinds as per-triple weights over a common
//! `-log sigma(f)` core, the analytic gradient, the SGD loop, and the
//! random hyperparameter search protocol.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::str::FromStr;

use crate::dataset::{LooSplit, Triple};
use crate::error::{Error, Result};
use crate::evaluation::{self, RankingMetrics};
use crate::explainability::ExplainabilityMatrix;
use crate::model::FactorModel;
use crate::propensity::{clamp_propensity, PropensityModel, DEFAULT_PROPENSITY_FLOOR};
use crate::seeds;

/// Which per-triple weighting the loss applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LossKind {
    Bpr,
    Ubpr,
    Ebpr,
    PUebpr,
    Uebpr,
}

pub const ALL_LOSS_KINDS: [LossKind; 5] = [
    LossKind::Bpr,
    LossKind::Ubpr,
    LossKind::Ebpr,
    LossKind::PUebpr,
    LossKind::Uebpr,
];

impl LossKind {
    pub fn tag(self) -> &'static str {
        match self {
            LossKind::Bpr => "BPR",
            LossKind::Ubpr => "UBPR",
            LossKind::Ebpr => "EBPR",
            LossKind::PUebpr => "pUEBPR",
            LossKind::Uebpr => "UEBPR",
        }
    }

    pub fn needs_explainability(self) -> bool {
        matches!(self, LossKind::Ebpr | LossKind::PUebpr | LossKind::Uebpr)
    }

    pub fn needs_propensity(self) -> bool {
        matches!(self, LossKind::Ubpr | LossKind::PUebpr | LossKind::Uebpr)
    }

    pub fn needs_neighborhood_propensity(self) -> bool {
        matches!(self, LossKind::Uebpr)
    }
}

impl std::fmt::Display for LossKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "BPR" => Ok(LossKind::Bpr),
            "UBPR" => Ok(LossKind::Ubpr),
            "EBPR" => Ok(LossKind::Ebpr),
            "PUEBPR" => Ok(LossKind::PUebpr),
            "UEBPR" => Ok(LossKind::Uebpr),
            other => Err(Error::InvalidConfig(format!("unknown loss kind {other:?}"))),
        }
    }
}

/// Hyperparameter grids from the tuning protocol.
pub const LATENT_DIM_GRID: [usize; 5] = [5, 10, 20, 50, 100];
pub const BATCH_SIZE_GRID: [usize; 3] = [50, 100, 500];
pub const L2_GRID: [f64; 3] = [0.0, 1e-5, 1e-3];

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingConfig {
    pub loss: LossKind,
    pub latent_dim: usize,
    pub batch_size: usize,
    pub l2: f64,
    pub eta: usize,
    pub learning_rate: f64,
    pub max_epochs: usize,
    /// Epochs without a validation-NDCG improvement before stopping.
    pub patience: usize,
    pub seed: u64,
    /// Clamp final instance weights into [0, 1].
    pub weight_clip: bool,
    pub propensity_floor: f64,
    /// Throughput mode: lock-free parallel updates, races tolerated,
    /// results not reproducible. Never used for reported numbers.
    pub parallel: bool,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            loss: LossKind::Bpr,
            latent_dim: 10,
            batch_size: 100,
            l2: 0.0,
            eta: 20,
            learning_rate: 0.05,
            max_epochs: 200,
            patience: 20,
            seed: 42,
            weight_clip: false,
            propensity_floor: DEFAULT_PROPENSITY_FLOOR,
            parallel: false,
        }
    }
}

/// Per-triple loss weights for a loss kind, with the data they need.
///
/// Sampled triples always have an interacted positive and a
/// non-interacted negative, so the interaction indicators inside the
/// estimator weights are constants (1 and 0) and only the remaining
/// factors survive.
pub struct InstanceWeights<'a> {
    kind: LossKind,
    explainability: Option<&'a ExplainabilityMatrix>,
    propensity: Option<&'a PropensityModel>,
    clip: bool,
    floor: f64,
}

impl<'a> InstanceWeights<'a> {
    pub fn new(
        kind: LossKind,
        explainability: Option<&'a ExplainabilityMatrix>,
        propensity: Option<&'a PropensityModel>,
        clip: bool,
        floor: f64,
    ) -> Result<Self> {
        if kind.needs_explainability() && explainability.is_none() {
            return Err(Error::MissingComponent {
                loss: kind.tag().to_string(),
                what: "an explainability matrix",
            });
        }
        if kind.needs_propensity() && propensity.is_none() {
            return Err(Error::MissingComponent {
                loss: kind.tag().to_string(),
                what: "a propensity model",
            });
        }
        Ok(InstanceWeights {
            kind,
            explainability,
            propensity,
            clip,
            floor,
        })
    }

    pub fn weight(&self, t: &Triple) -> f64 {
        let w = match self.kind {
            LossKind::Bpr => 1.0,
            LossKind::Ubpr => self.inv_theta(t.pos),
            LossKind::Ebpr => self.explainable_pair(t),
            LossKind::PUebpr => self.inv_theta(t.pos) * self.explainable_pair(t),
            LossKind::Uebpr => {
                let e = self.explainability.unwrap();
                let p = self.propensity.unwrap();
                let tn_pos = clamp_propensity(p.neighborhood[t.pos as usize], self.floor);
                let tn_neg = clamp_propensity(p.neighborhood[t.neg as usize], self.floor);
                self.inv_theta(t.pos)
                    * (e.get(t.user, t.pos) / tn_pos)
                    * (1.0 - e.get(t.user, t.neg) / tn_neg)
            }
        };
        if self.clip {
            w.clamp(0.0, 1.0)
        } else {
            w
        }
    }

    fn inv_theta(&self, item: u32) -> f64 {
        let p = self.propensity.unwrap();
        1.0 / clamp_propensity(p.item[item as usize], self.floor)
    }

    fn explainable_pair(&self, t: &Triple) -> f64 {
        let e = self.explainability.unwrap();
        e.get(t.user, t.pos) * (1.0 - e.get(t.user, t.neg))
    }
}

/// One-off weight computation matching the per-operation contract.
pub fn instance_weight(
    kind: LossKind,
    t: &Triple,
    explainability: Option<&ExplainabilityMatrix>,
    propensity: Option<&PropensityModel>,
    clip: bool,
    floor: f64,
) -> Result<f64> {
    Ok(InstanceWeights::new(kind, explainability, propensity, clip, floor)?.weight(t))
}

/// Overflow-safe `log(1 + e^x)`.
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// `sigma(x) = 1 / (1 + e^-x)` in the branch that never overflows.
fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `w * softplus(-f)`, which equals `-w log sigma(f)` exactly in real
/// arithmetic.
pub fn triple_loss(model: &FactorModel, t: &Triple, w: f64) -> f64 {
    w * softplus(-model.preference(t.user, t.pos, t.neg))
}

/// Sparse gradient of one weighted triple over the three touched rows.
#[derive(Debug, Clone)]
pub struct TripleGradient {
    pub d_user: Vec<f64>,
    pub d_pos: Vec<f64>,
    pub d_neg: Vec<f64>,
}

/// Analytic gradient of `triple_loss` plus an L2 ridge on the touched
/// rows: the common scalar is `g = -w sigma(-f)`, giving
/// `g (Q_+ - Q_-)` for the user row, `g P_u` for the positive item and
/// `-g P_u` for the negative item, each plus `l2 * row`.
pub fn triple_gradient(model: &FactorModel, t: &Triple, w: f64, l2: f64) -> TripleGradient {
    let f = model.preference(t.user, t.pos, t.neg);
    let g = -w * sigmoid(-f);
    let pu = model.user_row(t.user);
    let qp = model.item_row(t.pos);
    let qn = model.item_row(t.neg);
    let k = model.k();
    let mut d_user = Vec::with_capacity(k);
    let mut d_pos = Vec::with_capacity(k);
    let mut d_neg = Vec::with_capacity(k);
    for idx in 0..k {
        d_user.push(g * (qp[idx] - qn[idx]) + l2 * pu[idx]);
        d_pos.push(g * pu[idx] + l2 * qp[idx]);
        d_neg.push(-g * pu[idx] + l2 * qn[idx]);
    }
    TripleGradient {
        d_user,
        d_pos,
        d_neg,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub mean_loss: f64,
    pub val_ndcg: Option<f64>,
    pub val_hr: Option<f64>,
}

#[derive(Debug, Clone, Default)]
pub struct TrainingHistory {
    pub epochs: Vec<EpochRecord>,
    /// Index of the epoch whose snapshot was kept (argmax of validation
    /// NDCG when validation ran; the final epoch otherwise).
    pub best_epoch: usize,
    pub stopped_early: bool,
}

/// Scratch accumulators for one mini-batch: full-size buffers plus
/// dirty-row lists so zeroing stays proportional to the batch.
struct BatchAccum {
    user_grad: Vec<f64>,
    item_grad: Vec<f64>,
    dirty_users: Vec<u32>,
    dirty_items: Vec<u32>,
    user_touched: Vec<bool>,
    item_touched: Vec<bool>,
}

impl BatchAccum {
    fn new(n_users: usize, n_items: usize, k: usize) -> Self {
        BatchAccum {
            user_grad: vec![0.0; n_users * k],
            item_grad: vec![0.0; n_items * k],
            dirty_users: Vec::new(),
            dirty_items: Vec::new(),
            user_touched: vec![false; n_users],
            item_touched: vec![false; n_items],
        }
    }

    fn touch_user(&mut self, u: u32) {
        if !self.user_touched[u as usize] {
            self.user_touched[u as usize] = true;
            self.dirty_users.push(u);
        }
    }

    fn touch_item(&mut self, i: u32) {
        if !self.item_touched[i as usize] {
            self.item_touched[i as usize] = true;
            self.dirty_items.push(i);
        }
    }
}

/// Train on the split's train partition with per-epoch validation and
/// early stopping; returns the best-validation snapshot.
pub fn train(
    split: &LooSplit,
    cfg: &TrainingConfig,
    explainability: Option<&ExplainabilityMatrix>,
    propensity: Option<&PropensityModel>,
) -> Result<(FactorModel, TrainingHistory)> {
    train_inner(split, cfg, explainability, propensity, None)
}

/// Retrain on the merged train+validation positives for a fixed number
/// of epochs (no validation data remains to stop on).
pub fn train_merged(
    split: &LooSplit,
    cfg: &TrainingConfig,
    epochs: usize,
    explainability: Option<&ExplainabilityMatrix>,
    propensity: Option<&PropensityModel>,
) -> Result<(FactorModel, TrainingHistory)> {
    train_inner(split, cfg, explainability, propensity, Some(epochs))
}

fn train_inner(
    split: &LooSplit,
    cfg: &TrainingConfig,
    explainability: Option<&ExplainabilityMatrix>,
    propensity: Option<&PropensityModel>,
    merged_epochs: Option<usize>,
) -> Result<(FactorModel, TrainingHistory)> {
    let weights = InstanceWeights::new(
        cfg.loss,
        explainability,
        propensity,
        cfg.weight_clip,
        cfg.propensity_floor,
    )?;
    let merged = merged_epochs.is_some();
    let max_epochs = merged_epochs.unwrap_or(cfg.max_epochs);
    let n_users = split.train.n_users();
    let n_items = split.train.n_items();
    let mut model = FactorModel::init(n_users, n_items, cfg.latent_dim, cfg.seed);
    let mut accum = BatchAccum::new(n_users, n_items, cfg.latent_dim);

    let mut history = TrainingHistory::default();
    let mut best_snapshot = model.clone();
    let mut best_ndcg = f64::NEG_INFINITY;
    let mut epochs_since_best = 0usize;

    for epoch in 0..max_epochs {
        let epoch_seed = seeds::derive(cfg.seed, 1 + epoch as u64);
        let mut triples = if merged {
            split.sample_training_triples_merged(epoch_seed)?
        } else {
            split.sample_training_triples(epoch_seed)?
        };
        let mut shuffle_rng = ChaCha8Rng::seed_from_u64(seeds::derive(epoch_seed, 0x53485546));
        triples.shuffle(&mut shuffle_rng);

        let mean_loss = if cfg.parallel {
            run_epoch_parallel(&mut model, &triples, &weights, cfg)
        } else {
            run_epoch_batched(&mut model, &triples, &weights, cfg, &mut accum, epoch)?
        };

        let (val_ndcg, val_hr) = if merged {
            (None, None)
        } else {
            let m = evaluation::ranking_over_holdouts(&model, &split.validation, 10);
            (Some(m.ndcg), Some(m.hr))
        };
        history.epochs.push(EpochRecord {
            epoch,
            mean_loss,
            val_ndcg,
            val_hr,
        });

        if let Some(ndcg) = val_ndcg {
            if ndcg > best_ndcg {
                best_ndcg = ndcg;
                best_snapshot = model.clone();
                history.best_epoch = epoch;
                epochs_since_best = 0;
            } else {
                epochs_since_best += 1;
                if epochs_since_best >= cfg.patience {
                    history.stopped_early = true;
                    break;
                }
            }
        } else {
            history.best_epoch = epoch;
        }
    }

    let final_model = if merged { model } else { best_snapshot };
    Ok((final_model, history))
}

fn run_epoch_batched(
    model: &mut FactorModel,
    triples: &[Triple],
    weights: &InstanceWeights,
    cfg: &TrainingConfig,
    accum: &mut BatchAccum,
    epoch: usize,
) -> Result<f64> {
    let k = model.k();
    let mut loss_sum = 0.0;
    for (batch_idx, batch) in triples.chunks(cfg.batch_size).enumerate() {
        for t in batch {
            let w = weights.weight(t);
            let f = model.preference(t.user, t.pos, t.neg);
            loss_sum += w * softplus(-f);
            let g = -w * sigmoid(-f);

            accum.touch_user(t.user);
            accum.touch_item(t.pos);
            accum.touch_item(t.neg);
            let u_at = t.user as usize * k;
            let p_at = t.pos as usize * k;
            let n_at = t.neg as usize * k;
            let pu = model.user_row(t.user);
            let qp = model.item_row(t.pos);
            let qn = model.item_row(t.neg);
            for idx in 0..k {
                accum.user_grad[u_at + idx] += g * (qp[idx] - qn[idx]) + cfg.l2 * pu[idx];
                accum.item_grad[p_at + idx] += g * pu[idx] + cfg.l2 * qp[idx];
                accum.item_grad[n_at + idx] += -g * pu[idx] + cfg.l2 * qn[idx];
            }
        }

        let step = cfg.learning_rate / batch.len() as f64;
        let mut finite = true;
        for &u in &accum.dirty_users {
            let at = u as usize * k;
            let row = model.user_row_mut(u);
            for (slot, grad) in row.iter_mut().zip(&mut accum.user_grad[at..at + k]) {
                *slot -= step * *grad;
                *grad = 0.0;
                finite &= slot.is_finite();
            }
            accum.user_touched[u as usize] = false;
        }
        for &i in &accum.dirty_items {
            let at = i as usize * k;
            let row = model.item_row_mut(i);
            for (slot, grad) in row.iter_mut().zip(&mut accum.item_grad[at..at + k]) {
                *slot -= step * *grad;
                *grad = 0.0;
                finite &= slot.is_finite();
            }
            accum.item_touched[i as usize] = false;
        }
        accum.dirty_users.clear();
        accum.dirty_items.clear();
        if !finite {
            return Err(Error::NonFinite {
                epoch,
                batch: batch_idx,
            });
        }
    }
    Ok(loss_sum / triples.len().max(1) as f64)
}

/// Lock-free parallel epoch: workers apply per-triple updates straight
/// onto the shared parameter matrices; concurrent writes to the same
/// row may race and are tolerated. Not reproducible.
fn run_epoch_parallel(
    model: &mut FactorModel,
    triples: &[Triple],
    weights: &InstanceWeights,
    cfg: &TrainingConfig,
) -> f64 {
    struct RawParams {
        p: *mut f64,
        q: *mut f64,
        k: usize,
    }
    // Workers write to disjoint-or-raced rows through raw pointers;
    // the mode's contract tolerates those races.
    unsafe impl Sync for RawParams {}
    impl RawParams {
        fn user_ptr(&self, u: u32) -> *mut f64 {
            unsafe { self.p.add(u as usize * self.k) }
        }
        fn item_ptr(&self, i: u32) -> *mut f64 {
            unsafe { self.q.add(i as usize * self.k) }
        }
    }

    let lr = cfg.learning_rate;
    let l2 = cfg.l2;
    let (p, q, k) = model.raw_parts_mut();
    let raw = RawParams {
        p: p.as_mut_ptr(),
        q: q.as_mut_ptr(),
        k,
    };

    let chunk = (triples.len() / rayon::current_num_threads().max(1)).max(1);
    let loss_sum: f64 = triples
        .par_chunks(chunk)
        .map(|chunk| {
            let mut local = 0.0;
            for t in chunk {
                let w = weights.weight(t);
                // rows stay in bounds; concurrent row access is the
                // tolerated race of this mode
                unsafe {
                    let pu = std::slice::from_raw_parts_mut(raw.user_ptr(t.user), k);
                    let qp = std::slice::from_raw_parts_mut(raw.item_ptr(t.pos), k);
                    let qn = std::slice::from_raw_parts_mut(raw.item_ptr(t.neg), k);
                    let mut f = 0.0;
                    for idx in 0..k {
                        f += pu[idx] * (qp[idx] - qn[idx]);
                    }
                    local += w * softplus(-f);
                    let g = -w * sigmoid(-f);
                    for idx in 0..k {
                        let du = g * (qp[idx] - qn[idx]) + l2 * pu[idx];
                        let dp = g * pu[idx] + l2 * qp[idx];
                        let dn = -g * pu[idx] + l2 * qn[idx];
                        pu[idx] -= lr * du;
                        qp[idx] -= lr * dp;
                        qn[idx] -= lr * dn;
                    }
                }
            }
            local
        })
        .sum();
    loss_sum / triples.len().max(1) as f64
}

/// One evaluated configuration of the random search.
#[derive(Debug, Clone)]
pub struct SearchPoint {
    pub config: TrainingConfig,
    pub replicate_seeds: Vec<u64>,
    pub replicate_ndcg: Vec<f64>,
    pub replicate_hr: Vec<f64>,
    pub replicate_best_epoch: Vec<usize>,
}

impl SearchPoint {
    pub fn mean_ndcg(&self) -> f64 {
        self.replicate_ndcg.iter().sum::<f64>() / self.replicate_ndcg.len().max(1) as f64
    }

    /// Epoch budget for the merged retrain: the mean best epoch of the
    /// replicates, as a 1-based count, never below 1.
    pub fn recommended_epochs(&self) -> usize {
        if self.replicate_best_epoch.is_empty() {
            return 1;
        }
        let mean = self
            .replicate_best_epoch
            .iter()
            .map(|e| (e + 1) as f64)
            .sum::<f64>()
            / self.replicate_best_epoch.len() as f64;
        (mean.round() as usize).max(1)
    }
}

#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub points: Vec<SearchPoint>,
    pub best_index: usize,
    /// Set when the requested sample count exceeded the grid.
    pub grid_exhausted: bool,
}

impl SearchOutcome {
    pub fn best(&self) -> &SearchPoint {
        &self.points[self.best_index]
    }
}

/// The tuning grid: every (latent_dim, batch_size, l2) combination.
pub fn search_grid(base: &TrainingConfig) -> Vec<TrainingConfig> {
    let mut grid = Vec::new();
    for &latent_dim in &LATENT_DIM_GRID {
        for &batch_size in &BATCH_SIZE_GRID {
            for &l2 in &L2_GRID {
                grid.push(TrainingConfig {
                    latent_dim,
                    batch_size,
                    l2,
                    ..base.clone()
                });
            }
        }
    }
    grid
}

/// Random hyperparameter search: `n_configs` grid points sampled
/// without replacement, each trained `replicates` times with distinct
/// derived seeds; the argmax of mean validation NDCG@10 wins.
///
/// The evaluator maps (config, replicate seed) to
/// (validation NDCG@10, validation HR@10, best epoch), so tests can
/// stub training entirely.
pub fn hyperparameter_search_with<F>(
    base: &TrainingConfig,
    n_configs: usize,
    replicates: usize,
    seed: u64,
    evaluator: F,
) -> Result<SearchOutcome>
where
    F: Fn(&TrainingConfig, u64) -> Result<(f64, f64, usize)> + Sync,
{
    let grid = search_grid(base);
    let grid_exhausted = n_configs > grid.len();
    let take = n_configs.min(grid.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seeds::derive(seed, 0x53454152));
    let picks = rand::seq::index::sample(&mut rng, grid.len(), take);
    let chosen: Vec<TrainingConfig> = picks.iter().map(|ix| grid[ix].clone()).collect();

    // Evaluate every (config, replicate) pair; parallel dispatch is safe
    // because each run is fully determined by its own derived seed.
    let jobs: Vec<(usize, usize, TrainingConfig, u64)> = chosen
        .iter()
        .enumerate()
        .flat_map(|(ci, cfg)| {
            (0..replicates).map(move |r| {
                let rep_seed = seeds::derive(seeds::derive(seed, 0x434647 + ci as u64), r as u64);
                let mut rep_cfg = cfg.clone();
                rep_cfg.seed = rep_seed;
                (ci, r, rep_cfg, rep_seed)
            })
        })
        .collect();

    type JobResult = (usize, usize, u64, (f64, f64, usize));
    let results: Vec<JobResult> = jobs
        .into_par_iter()
        .map(|(ci, r, rep_cfg, rep_seed)| {
            let out = evaluator(&rep_cfg, rep_seed)?;
            Ok((ci, r, rep_seed, out))
        })
        .collect::<Result<_>>()?;

    let mut points: Vec<SearchPoint> = chosen
        .into_iter()
        .map(|config| SearchPoint {
            config,
            replicate_seeds: vec![0; replicates],
            replicate_ndcg: vec![0.0; replicates],
            replicate_hr: vec![0.0; replicates],
            replicate_best_epoch: vec![0; replicates],
        })
        .collect();
    for (ci, r, rep_seed, (ndcg, hr, best_epoch)) in results {
        points[ci].replicate_seeds[r] = rep_seed;
        points[ci].replicate_ndcg[r] = ndcg;
        points[ci].replicate_hr[r] = hr;
        points[ci].replicate_best_epoch[r] = best_epoch;
    }

    let best_index = points
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.mean_ndcg().partial_cmp(&b.1.mean_ndcg()).unwrap())
        .map(|(i, _)| i)
        .unwrap_or(0);
    Ok(SearchOutcome {
        points,
        best_index,
        grid_exhausted,
    })
}

/// The real search: each evaluation trains on the split's train
/// partition and scores the validation holdout.
pub fn hyperparameter_search(
    split: &LooSplit,
    base: &TrainingConfig,
    n_configs: usize,
    replicates: usize,
    seed: u64,
    explainability: Option<&ExplainabilityMatrix>,
    propensity: Option<&PropensityModel>,
) -> Result<SearchOutcome> {
    hyperparameter_search_with(base, n_configs, replicates, seed, |cfg, _| {
        let (_, history) = train(split, cfg, explainability, propensity)?;
        let best = &history.epochs[history.best_epoch];
        Ok((
            best.val_ndcg.unwrap_or(0.0),
            best.val_hr.unwrap_or(0.0),
            history.best_epoch,
        ))
    })
}

/// Validation metrics of an untrained model with this config's seed;
/// the baseline for learning smoke tests.
pub fn untrained_validation(split: &LooSplit, cfg: &TrainingConfig) -> RankingMetrics {
    let model = FactorModel::init(
        split.train.n_users(),
        split.train.n_items(),
        cfg.latent_dim,
        cfg.seed,
    );
    evaluation::ranking_over_holdouts(&model, &split.validation, 10)
}
