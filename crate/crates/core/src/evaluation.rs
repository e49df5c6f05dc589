//! Ranking, explainability and popularity-debiasing metrics over top-K
//! recommendation lists, under the leave-one-out protocol (held-out
//! item ranked against its sampled negatives) and the unbiased-test-set
//! protocol (randomly assigned rated items).

use rayon::prelude::*;
use std::path::Path;

use crate::dataset::{HoldoutRow, InteractionDataset, LooSplit};
use crate::error::{Error, Result};
use crate::explainability::{ExplainabilityMatrix, ItemVectors};
use crate::model::{top_k, FactorModel, RankedList};
use crate::propensity::{clamp_propensity, PropensityModel};
use crate::seeds;
use crate::training::{self, TrainingConfig};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankingMetrics {
    pub hr: f64,
    pub ndcg: f64,
}

/// 1-based rank of `item` among `item` plus `negatives`, ties broken by
/// ascending item index (the same rule `top_k` sorts with).
pub fn holdout_rank(model: &FactorModel, user: u32, item: u32, negatives: &[u32]) -> usize {
    let s = model.score(user, item);
    let mut rank = 1;
    for &n in negatives {
        let sn = model.score(user, n);
        if sn > s || (sn == s && n < item) {
            rank += 1;
        }
    }
    rank
}

/// HR@K and NDCG@K over a holdout table: HR counts ranks within the
/// cutoff, NDCG scores them `1/log2(1+rank)`, both averaged over users.
pub fn ranking_over_holdouts(
    model: &FactorModel,
    holdouts: &[HoldoutRow],
    k_cut: usize,
) -> RankingMetrics {
    let mut hits = 0.0;
    let mut gain = 0.0;
    for (u, h) in holdouts.iter().enumerate() {
        let rank = holdout_rank(model, u as u32, h.item, &h.negatives);
        if rank <= k_cut {
            hits += 1.0;
            gain += 1.0 / ((1 + rank) as f64).log2();
        }
    }
    let n = holdouts.len().max(1) as f64;
    RankingMetrics {
        hr: hits / n,
        ndcg: gain / n,
    }
}

/// Test-set ranking under the leave-one-out protocol.
pub fn evaluate_ranking(model: &FactorModel, split: &LooSplit, k_cut: usize) -> RankingMetrics {
    ranking_over_holdouts(model, &split.test, k_cut)
}

/// Top-K lists over the full catalog, excluding each user's positives
/// in `exclude` (the interactions the model was trained on).
pub fn top_k_lists(
    model: &FactorModel,
    exclude: &InteractionDataset,
    k_cut: usize,
) -> Vec<RankedList> {
    (0..model.n_users() as u32)
        .into_par_iter()
        .map(|u| {
            let seen = exclude.positives(u);
            let mut candidates = Vec::with_capacity(model.n_items() - seen.len());
            let mut it = seen.iter().peekable();
            for i in 0..model.n_items() as u32 {
                if it.peek().is_some_and(|p| p.item == i) {
                    it.next();
                } else {
                    candidates.push(i);
                }
            }
            top_k(model, u, &candidates, k_cut)
        })
        .collect()
}

/// MEP@K: fraction of recommended items with `E > 0`; WMEP@K: their `E`
/// values summed and divided by K, each averaged over users.
pub fn evaluate_explainability(
    lists: &[RankedList],
    e_eval: &ExplainabilityMatrix,
    k_cut: usize,
) -> (f64, f64) {
    let mut mep = 0.0;
    let mut wmep = 0.0;
    for list in lists {
        let mut explainable = 0.0;
        let mut weighted = 0.0;
        for &i in list.items.iter().take(k_cut) {
            let e = e_eval.get(list.user, i);
            if e > 0.0 {
                explainable += 1.0;
                weighted += e;
            }
        }
        mep += explainable / k_cut as f64;
        wmep += weighted / k_cut as f64;
    }
    let n = lists.len().max(1) as f64;
    (mep / n, wmep / n)
}

/// EFD@K (expected free discovery, `-log2 theta` averaged over the
/// list), Avg_Pop@K (mean propensity) and Div@K (pairwise cosine under
/// the literal `1/(K(K-1))` normalization, so 0.5 is the maximum).
pub fn evaluate_popularity(
    lists: &[RankedList],
    prop: &PropensityModel,
    vectors: &ItemVectors,
    k_cut: usize,
    floor: f64,
) -> (f64, f64, f64) {
    let per_user: Vec<(f64, f64, f64)> = lists
        .par_iter()
        .map(|list| {
            let items = &list.items[..list.items.len().min(k_cut)];
            let mut efd = 0.0;
            let mut pop = 0.0;
            for &i in items {
                let theta = prop.item[i as usize];
                efd += -clamp_propensity(theta, floor).log2();
                pop += theta;
            }
            let mut sim = 0.0;
            for (a, &i) in items.iter().enumerate() {
                for &j in items.iter().skip(a + 1) {
                    sim += vectors.cosine(i, j);
                }
            }
            let div = if k_cut > 1 {
                sim / (k_cut * (k_cut - 1)) as f64
            } else {
                0.0
            };
            (efd / k_cut as f64, pop / k_cut as f64, div)
        })
        .collect();
    let n = lists.len().max(1) as f64;
    let sum = per_user
        .iter()
        .fold((0.0, 0.0, 0.0), |acc, x| (acc.0 + x.0, acc.1 + x.1, acc.2 + x.2));
    (sum.0 / n, sum.1 / n, sum.2 / n)
}

/// Per-user randomly-assigned rated items: the unbiased evaluation
/// candidates.
#[derive(Debug, Clone, Default)]
pub struct UnbiasedTestset {
    /// (user index, [(item index, rating)]).
    pub rows: Vec<(u32, Vec<(u32, f64)>)>,
    /// Input rows whose user or item is unknown to the dataset.
    pub skipped_rows: usize,
}

impl UnbiasedTestset {
    /// Parse `user<TAB>item<TAB>rating` rows against a dataset's id maps.
    pub fn load(path: &Path, ds: &InteractionDataset) -> Result<UnbiasedTestset> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut by_user: std::collections::HashMap<u32, Vec<(u32, f64)>> = Default::default();
        let mut skipped_rows = 0usize;
        for (lineno, line) in text.lines().enumerate() {
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() < 3 {
                return Err(Error::Malformed {
                    path: path.to_path_buf(),
                    line: lineno + 1,
                    message: format!("expected 3 fields, got {}", fields.len()),
                });
            }
            let rating: f64 = fields[2].trim().parse().map_err(|_| Error::Malformed {
                path: path.to_path_buf(),
                line: lineno + 1,
                message: format!("bad rating {:?}", fields[2]),
            })?;
            match (
                ds.user_index_of(fields[0].trim()),
                ds.item_index_of(fields[1].trim()),
            ) {
                (Some(u), Some(i)) => by_user.entry(u).or_default().push((i, rating)),
                _ => skipped_rows += 1,
            }
        }
        let mut rows: Vec<(u32, Vec<(u32, f64)>)> = by_user.into_iter().collect();
        rows.sort_unstable_by_key(|r| r.0);
        Ok(UnbiasedTestset { rows, skipped_rows })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnbiasedMetrics {
    pub ndcg: f64,
    pub map: f64,
    pub evaluated_users: usize,
    /// Users with no relevant item; excluded from the means.
    pub no_relevant_users: usize,
}

/// Rank each user's assigned items by model score and measure binary
/// relevance (`rating >= threshold`) with NDCG@K and MAP@K. Average
/// precision truncates at K and normalizes by `min(K, n_relevant)`.
pub fn evaluate_unbiased_testset(
    model: &FactorModel,
    testset: &UnbiasedTestset,
    k_cut: usize,
    relevance_threshold: f64,
) -> UnbiasedMetrics {
    let mut ndcg_sum = 0.0;
    let mut map_sum = 0.0;
    let mut evaluated = 0usize;
    let mut no_relevant = 0usize;
    for (u, items) in &testset.rows {
        let relevant_count = items
            .iter()
            .filter(|(_, r)| *r >= relevance_threshold)
            .count();
        if relevant_count == 0 {
            no_relevant += 1;
            continue;
        }
        let mut ranked: Vec<(u32, f64, bool)> = items
            .iter()
            .map(|(i, r)| (*i, model.score(*u, *i), *r >= relevance_threshold))
            .collect();
        ranked.sort_unstable_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));

        let mut hits = 0usize;
        let mut ap = 0.0;
        let mut dcg = 0.0;
        for (pos, (_, _, rel)) in ranked.iter().take(k_cut).enumerate() {
            if *rel {
                hits += 1;
                ap += hits as f64 / (pos + 1) as f64;
                dcg += 1.0 / ((pos + 2) as f64).log2();
            }
        }
        let ideal_hits = relevant_count.min(k_cut);
        let idcg: f64 = (0..ideal_hits).map(|p| 1.0 / ((p + 2) as f64).log2()).sum();
        ndcg_sum += dcg / idcg;
        map_sum += ap / ideal_hits as f64;
        evaluated += 1;
    }
    let n = evaluated.max(1) as f64;
    UnbiasedMetrics {
        ndcg: ndcg_sum / n,
        map: map_sum / n,
        evaluated_users: evaluated,
        no_relevant_users: no_relevant,
    }
}

/// One full metric sweep at a cutoff.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub hr: f64,
    pub ndcg: f64,
    pub mep: f64,
    pub wmep: f64,
    pub efd: f64,
    pub avg_pop: f64,
    pub div: f64,
}

pub const METRIC_NAMES: [&str; 7] = ["HR", "NDCG", "MEP", "WMEP", "EFD", "Avg_Pop", "Div"];

impl Metrics {
    pub fn values(&self) -> [f64; 7] {
        [
            self.hr,
            self.ndcg,
            self.mep,
            self.wmep,
            self.efd,
            self.avg_pop,
            self.div,
        ]
    }

    pub fn from_values(v: [f64; 7]) -> Metrics {
        Metrics {
            hr: v[0],
            ndcg: v[1],
            mep: v[2],
            wmep: v[3],
            efd: v[4],
            avg_pop: v[5],
            div: v[6],
        }
    }
}

/// Everything the full evaluation needs besides the model.
pub struct EvalContext<'a> {
    pub split: &'a LooSplit,
    /// Interactions the model has seen; its positives are excluded from
    /// recommendation candidates.
    pub seen: &'a InteractionDataset,
    pub e_eval: &'a ExplainabilityMatrix,
    pub prop: &'a PropensityModel,
    pub vectors: &'a ItemVectors,
    pub k_cut: usize,
    pub propensity_floor: f64,
}

/// Full metric table for one trained model.
pub fn evaluate_full(model: &FactorModel, ctx: &EvalContext) -> Metrics {
    let ranking = evaluate_ranking(model, ctx.split, ctx.k_cut);
    let lists = top_k_lists(model, ctx.seen, ctx.k_cut);
    let (mep, wmep) = evaluate_explainability(&lists, ctx.e_eval, ctx.k_cut);
    let (efd, avg_pop, div) =
        evaluate_popularity(&lists, ctx.prop, ctx.vectors, ctx.k_cut, ctx.propensity_floor);
    Metrics {
        hr: ranking.hr,
        ndcg: ranking.ndcg,
        mep,
        wmep,
        efd,
        avg_pop,
        div,
    }
}

#[derive(Debug, Clone)]
pub struct ReplicateSummary {
    pub replicate_seeds: Vec<u64>,
    pub reports: Vec<Metrics>,
    pub mean: Metrics,
    pub std: Metrics,
}

/// Mean and standard deviation over replicate evaluations produced by
/// `evaluator(replicate index, derived seed)`.
pub fn run_replicates_with<F>(n: usize, seed: u64, evaluator: F) -> Result<ReplicateSummary>
where
    F: Fn(usize, u64) -> Result<Metrics> + Sync,
{
    let jobs: Vec<(usize, u64)> = (0..n)
        .map(|r| (r, seeds::derive(seed, 0x5245_5045 + r as u64)))
        .collect();
    let reports: Vec<Metrics> = jobs
        .par_iter()
        .map(|(r, s)| evaluator(*r, *s))
        .collect::<Result<_>>()?;
    let replicate_seeds = jobs.into_iter().map(|(_, s)| s).collect();

    let count = reports.len().max(1) as f64;
    let mut mean = [0.0; 7];
    for rep in &reports {
        for (m, v) in mean.iter_mut().zip(rep.values()) {
            *m += v / count;
        }
    }
    let mut var = [0.0; 7];
    if reports.len() > 1 {
        for rep in &reports {
            for ((s, v), m) in var.iter_mut().zip(rep.values()).zip(mean) {
                *s += (v - m) * (v - m) / (count - 1.0);
            }
        }
    }
    Ok(ReplicateSummary {
        replicate_seeds,
        reports,
        mean: Metrics::from_values(mean),
        std: Metrics::from_values(var.map(f64::sqrt)),
    })
}

/// The reporting protocol: train `n` merged-retrain models with
/// distinct derived seeds and average their full metric tables.
#[allow(clippy::too_many_arguments)]
pub fn run_replicates(
    split: &LooSplit,
    cfg: &TrainingConfig,
    n: usize,
    merged_epochs: usize,
    e_train: Option<&ExplainabilityMatrix>,
    prop_train: Option<&PropensityModel>,
    ctx: &EvalContext,
) -> Result<ReplicateSummary> {
    run_replicates_with(n, cfg.seed, |_, rep_seed| {
        let mut rep_cfg = cfg.clone();
        rep_cfg.seed = rep_seed;
        let (model, _) = training::train_merged(split, &rep_cfg, merged_epochs, e_train, prop_train)?;
        Ok(evaluate_full(&model, ctx))
    })
}
