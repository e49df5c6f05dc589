//! Interaction ingestion, binarization, leave-one-out splitting and
//! per-epoch training-triple sampling.

use std::collections::HashMap;
use std::io::{BufRead, BufReader};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::seeds;

/// One parsed interaction record, prior to binarization.
#[derive(Debug, Clone, PartialEq)]
pub struct RawInteraction {
    pub user_id: String,
    pub item_id: String,
    /// Rating or play count; non-negative.
    pub value: f64,
    /// Dataset-native ordering key (seconds, or a file-order surrogate
    /// when the input has no timestamp column).
    pub timestamp: i64,
}

/// A rejected input line, reported but not fatal.
#[derive(Debug, Clone)]
pub struct ParseWarning {
    pub line: usize,
    pub message: String,
}

/// Column layout of a delimiter-separated interaction log.
///
/// The default matches MovieLens `u.data`: tab-separated
/// user / item / rating / timestamp.
#[derive(Debug, Clone)]
pub struct ColumnFormat {
    pub delimiter: char,
    pub user_col: usize,
    pub item_col: usize,
    pub value_col: usize,
    /// `None` assigns the line number as an ordering surrogate.
    pub timestamp_col: Option<usize>,
}

impl Default for ColumnFormat {
    fn default() -> Self {
        ColumnFormat {
            delimiter: '\t',
            user_col: 0,
            item_col: 1,
            value_col: 2,
            timestamp_col: Some(3),
        }
    }
}

/// Parse an interaction log. Malformed lines are skipped and reported
/// with their line numbers; an unreadable file is fatal.
pub fn load_interactions(
    path: &Path,
    format: &ColumnFormat,
) -> Result<(Vec<RawInteraction>, Vec<ParseWarning>)> {
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let reader = BufReader::new(file);

    let needed = format
        .user_col
        .max(format.item_col)
        .max(format.value_col)
        .max(format.timestamp_col.unwrap_or(0));

    let mut records = Vec::new();
    let mut warnings = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(format.delimiter).collect();
        let mut warn = |message: String| {
            warnings.push(ParseWarning {
                line: lineno,
                message,
            })
        };
        if fields.len() <= needed {
            warn(format!(
                "expected at least {} fields, found {}",
                needed + 1,
                fields.len()
            ));
            continue;
        }
        let value: f64 = match fields[format.value_col].trim().parse() {
            Ok(v) => v,
            Err(_) => {
                warn(format!("non-numeric value {:?}", fields[format.value_col]));
                continue;
            }
        };
        if !value.is_finite() || value < 0.0 {
            warn(format!("value {value} out of range"));
            continue;
        }
        let timestamp: i64 = match format.timestamp_col {
            Some(c) => match fields[c].trim().parse() {
                Ok(t) => t,
                Err(_) => {
                    warn(format!("non-numeric timestamp {:?}", fields[c]));
                    continue;
                }
            },
            None => lineno as i64,
        };
        records.push(RawInteraction {
            user_id: fields[format.user_col].trim().to_string(),
            item_id: fields[format.item_col].trim().to_string(),
            value,
            timestamp,
        });
    }
    Ok((records, warnings))
}

/// One binarized positive of a user.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Interaction {
    pub item: u32,
    pub timestamp: i64,
    /// Position in the raw input; breaks timestamp ties (later wins).
    pub order: u64,
}

/// Binarized user-item interaction store with dense contiguous indices.
///
/// Immutable after construction; cheap to share across threads.
#[derive(Debug, Clone)]
pub struct InteractionDataset {
    user_ids: Vec<String>,
    item_ids: Vec<String>,
    user_index: HashMap<String, u32>,
    item_index: HashMap<String, u32>,
    /// Per user, sorted by item index.
    positives: Vec<Vec<Interaction>>,
    interaction_count: usize,
}

impl InteractionDataset {
    pub fn n_users(&self) -> usize {
        self.user_ids.len()
    }

    pub fn n_items(&self) -> usize {
        self.item_ids.len()
    }

    pub fn interaction_count(&self) -> usize {
        self.interaction_count
    }

    /// Sparsity as reported for interaction datasets: 1 - density.
    pub fn sparsity(&self) -> f64 {
        let cells = self.n_users() as f64 * self.n_items() as f64;
        if cells == 0.0 {
            return 0.0;
        }
        1.0 - self.interaction_count as f64 / cells
    }

    /// The user's positives, sorted by item index.
    pub fn positives(&self, user: u32) -> &[Interaction] {
        &self.positives[user as usize]
    }

    pub fn has_interaction(&self, user: u32, item: u32) -> bool {
        self.positives[user as usize]
            .binary_search_by_key(&item, |p| p.item)
            .is_ok()
    }

    pub fn raw_user_id(&self, user: u32) -> &str {
        &self.user_ids[user as usize]
    }

    pub fn raw_item_id(&self, item: u32) -> &str {
        &self.item_ids[item as usize]
    }

    pub fn user_index_of(&self, raw: &str) -> Option<u32> {
        self.user_index.get(raw).copied()
    }

    pub fn item_index_of(&self, raw: &str) -> Option<u32> {
        self.item_index.get(raw).copied()
    }

    /// Interactions per item.
    pub fn item_counts(&self) -> Vec<u32> {
        let mut counts = vec![0u32; self.n_items()];
        for row in &self.positives {
            for p in row {
                counts[p.item as usize] += 1;
            }
        }
        counts
    }

    /// The user's latest interaction: max (timestamp, file order).
    pub fn latest(&self, user: u32) -> Option<&Interaction> {
        self.positives[user as usize]
            .iter()
            .max_by_key(|p| (p.timestamp, p.order))
    }

    /// Rebuild with a subset of each user's positives removed, keeping
    /// the same index spaces.
    fn without<F>(&self, mut drop: F) -> InteractionDataset
    where
        F: FnMut(u32, &Interaction) -> bool,
    {
        let mut positives = Vec::with_capacity(self.positives.len());
        let mut count = 0usize;
        for (u, row) in self.positives.iter().enumerate() {
            let kept: Vec<Interaction> = row
                .iter()
                .filter(|p| !drop(u as u32, p))
                .copied()
                .collect();
            count += kept.len();
            positives.push(kept);
        }
        InteractionDataset {
            user_ids: self.user_ids.clone(),
            item_ids: self.item_ids.clone(),
            user_index: self.user_index.clone(),
            item_index: self.item_index.clone(),
            positives,
            interaction_count: count,
        }
    }

    /// Rebuild with extra positives inserted (item-sorted per user),
    /// keeping the same index spaces.
    fn with_added(&self, extra: impl Iterator<Item = (u32, Interaction)>) -> InteractionDataset {
        let mut ds = self.clone();
        for (u, p) in extra {
            let row = &mut ds.positives[u as usize];
            match row.binary_search_by_key(&p.item, |q| q.item) {
                Ok(_) => {}
                Err(pos) => {
                    row.insert(pos, p);
                    ds.interaction_count += 1;
                }
            }
        }
        ds
    }
}

/// Keep interactions with `value > threshold`, collapse duplicate
/// (user, item) pairs to the latest timestamp, and assign dense indices
/// in order of first appearance.
pub fn binarize_and_index(raw: &[RawInteraction], threshold: f64) -> InteractionDataset {
    let mut user_index: HashMap<String, u32> = HashMap::new();
    let mut item_index: HashMap<String, u32> = HashMap::new();
    let mut user_ids = Vec::new();
    let mut item_ids = Vec::new();
    // (user, item) -> Interaction, keeping max (timestamp, order)
    let mut pairs: HashMap<(u32, u32), Interaction> = HashMap::new();

    for (order, rec) in raw.iter().enumerate() {
        if rec.value <= threshold {
            continue;
        }
        let u = *user_index.entry(rec.user_id.clone()).or_insert_with(|| {
            user_ids.push(rec.user_id.clone());
            (user_ids.len() - 1) as u32
        });
        let i = *item_index.entry(rec.item_id.clone()).or_insert_with(|| {
            item_ids.push(rec.item_id.clone());
            (item_ids.len() - 1) as u32
        });
        let cand = Interaction {
            item: i,
            timestamp: rec.timestamp,
            order: order as u64,
        };
        pairs
            .entry((u, i))
            .and_modify(|p| {
                if (cand.timestamp, cand.order) > (p.timestamp, p.order) {
                    *p = cand;
                }
            })
            .or_insert(cand);
    }

    let mut positives = vec![Vec::new(); user_ids.len()];
    for ((u, _), p) in pairs.iter() {
        positives[*u as usize].push(*p);
    }
    for row in &mut positives {
        row.sort_unstable_by_key(|p| p.item);
    }
    let interaction_count = positives.iter().map(Vec::len).sum();
    InteractionDataset {
        user_ids,
        item_ids,
        user_index,
        item_index,
        positives,
        interaction_count,
    }
}

/// Drop users with fewer than `min_interactions` positives and re-index
/// the remaining users densely. Items are untouched; items that lose
/// all their interactions keep their indices.
pub fn filter_min_interactions(
    ds: &InteractionDataset,
    min_interactions: usize,
) -> InteractionDataset {
    let mut user_ids = Vec::new();
    let mut user_index = HashMap::new();
    let mut positives = Vec::new();
    for (u, row) in ds.positives.iter().enumerate() {
        if row.len() >= min_interactions {
            user_index.insert(ds.user_ids[u].clone(), user_ids.len() as u32);
            user_ids.push(ds.user_ids[u].clone());
            positives.push(row.clone());
        }
    }
    let interaction_count = positives.iter().map(Vec::len).sum();
    InteractionDataset {
        user_ids,
        item_ids: ds.item_ids.clone(),
        user_index,
        item_index: ds.item_index.clone(),
        positives,
        interaction_count,
    }
}

/// Drop items with fewer than `min_interactions` interactions and
/// re-index the remaining items densely. Users keep their indices even
/// if they end up with no positives. Used by the sparsity study.
pub fn filter_min_item_interactions(
    ds: &InteractionDataset,
    min_interactions: usize,
) -> InteractionDataset {
    let counts = ds.item_counts();
    let mut item_ids = Vec::new();
    let mut item_index = HashMap::new();
    let mut remap: Vec<Option<u32>> = vec![None; ds.n_items()];
    for (i, c) in counts.iter().enumerate() {
        if *c as usize >= min_interactions {
            remap[i] = Some(item_ids.len() as u32);
            item_index.insert(ds.item_ids[i].clone(), item_ids.len() as u32);
            item_ids.push(ds.item_ids[i].clone());
        }
    }
    let mut positives = Vec::with_capacity(ds.n_users());
    for row in &ds.positives {
        let mut kept: Vec<Interaction> = row
            .iter()
            .filter_map(|p| {
                remap[p.item as usize].map(|item| Interaction {
                    item,
                    timestamp: p.timestamp,
                    order: p.order,
                })
            })
            .collect();
        kept.sort_unstable_by_key(|p| p.item);
        positives.push(kept);
    }
    let interaction_count = positives.iter().map(Vec::len).sum();
    InteractionDataset {
        user_ids: ds.user_ids.clone(),
        item_ids,
        user_index: ds.user_index.clone(),
        item_index,
        positives,
        interaction_count,
    }
}

/// A held-out interaction plus its sampled evaluation negatives.
#[derive(Debug, Clone, PartialEq)]
pub struct HoldoutRow {
    pub item: u32,
    pub timestamp: i64,
    pub order: u64,
    pub negatives: Vec<u32>,
}

/// Leave-one-out split: per user, the latest interaction is the test
/// item and the latest remaining one the validation item, each paired
/// with disjoint sets of sampled evaluation negatives.
#[derive(Debug, Clone)]
pub struct LooSplit {
    pub train: InteractionDataset,
    pub validation: Vec<HoldoutRow>,
    pub test: Vec<HoldoutRow>,
    pub seed: u64,
    pub n_negatives: usize,
}

/// One training comparison: positive item vs sampled negative.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Triple {
    pub user: u32,
    pub pos: u32,
    pub neg: u32,
}

const TRIPLE_STREAM: u64 = 0x7452_4950;

pub fn loo_split(ds: &InteractionDataset, n_eval_negatives: usize, seed: u64) -> Result<LooSplit> {
    let mut rng = ChaCha8Rng::seed_from_u64(seeds::derive(seed, 0x53504c49));
    let n_items = ds.n_items();
    let mut validation = Vec::with_capacity(ds.n_users());
    let mut test = Vec::with_capacity(ds.n_users());

    for u in 0..ds.n_users() as u32 {
        let row = ds.positives(u);
        if row.len() < 3 {
            return Err(Error::TooFewPositives {
                user: ds.raw_user_id(u).to_string(),
                have: row.len(),
                need: 3,
            });
        }
        let test_p = *row.iter().max_by_key(|p| (p.timestamp, p.order)).unwrap();
        let val_p = *row
            .iter()
            .filter(|p| p.item != test_p.item)
            .max_by_key(|p| (p.timestamp, p.order))
            .unwrap();

        // I_u^-: items the user never interacted with, ascending.
        let mut candidates = Vec::with_capacity(n_items - row.len());
        let mut pos_iter = row.iter().peekable();
        for i in 0..n_items as u32 {
            if pos_iter.peek().is_some_and(|p| p.item == i) {
                pos_iter.next();
            } else {
                candidates.push(i);
            }
        }
        if candidates.len() < 2 * n_eval_negatives {
            return Err(Error::TooFewNegatives {
                user: ds.raw_user_id(u).to_string(),
                available: candidates.len(),
                needed: 2 * n_eval_negatives,
            });
        }
        let picks = rand::seq::index::sample(&mut rng, candidates.len(), 2 * n_eval_negatives);
        let sampled: Vec<u32> = picks.iter().map(|ix| candidates[ix]).collect();
        test.push(HoldoutRow {
            item: test_p.item,
            timestamp: test_p.timestamp,
            order: test_p.order,
            negatives: sampled[..n_eval_negatives].to_vec(),
        });
        validation.push(HoldoutRow {
            item: val_p.item,
            timestamp: val_p.timestamp,
            order: val_p.order,
            negatives: sampled[n_eval_negatives..].to_vec(),
        });
    }

    let train = ds.without(|u, p| {
        p.item == test[u as usize].item || p.item == validation[u as usize].item
    });
    Ok(LooSplit {
        train,
        validation,
        test,
        seed,
        n_negatives: n_eval_negatives,
    })
}

impl LooSplit {
    /// Train plus validation positives; the retrain target after
    /// hyperparameter selection.
    pub fn merged_train(&self) -> InteractionDataset {
        self.train
            .with_added(self.validation.iter().enumerate().map(|(u, h)| {
                (
                    u as u32,
                    Interaction {
                        item: h.item,
                        timestamp: h.timestamp,
                        order: h.order,
                    },
                )
            }))
    }

    /// All interactions including both held-out items.
    pub fn full_dataset(&self) -> InteractionDataset {
        self.merged_train()
            .with_added(self.test.iter().enumerate().map(|(u, h)| {
                (
                    u as u32,
                    Interaction {
                        item: h.item,
                        timestamp: h.timestamp,
                        order: h.order,
                    },
                )
            }))
    }

    /// One (user, positive, sampled negative) triple per training
    /// positive. Negatives are drawn uniformly from the user's
    /// non-interacted items, excluding the held-out validation and test
    /// items; deterministic given `epoch_seed`.
    pub fn sample_training_triples(&self, epoch_seed: u64) -> Result<Vec<Triple>> {
        self.sample_triples_inner(epoch_seed, false)
    }

    /// Triple stream over the merged train+validation positives; only
    /// the test item stays excluded from negative candidates.
    pub fn sample_training_triples_merged(&self, epoch_seed: u64) -> Result<Vec<Triple>> {
        self.sample_triples_inner(epoch_seed, true)
    }

    fn sample_triples_inner(&self, epoch_seed: u64, merged: bool) -> Result<Vec<Triple>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seeds::derive(epoch_seed, TRIPLE_STREAM));
        let n_items = self.train.n_items() as u32;
        let mut triples = Vec::new();
        let mut pos_items: Vec<u32> = Vec::new();
        for u in 0..self.train.n_users() as u32 {
            let row = self.train.positives(u);
            let vrow = &self.validation[u as usize];
            let trow = &self.test[u as usize];

            pos_items.clear();
            pos_items.extend(row.iter().map(|p| p.item));
            if merged {
                if let Err(at) = pos_items.binary_search(&vrow.item) {
                    pos_items.insert(at, vrow.item);
                }
            }

            // Excluded from negative candidates: the user's positives in
            // this phase plus every held-out item.
            let mut excluded = pos_items.len();
            if !merged {
                excluded += 1; // validation item
            }
            excluded += 1; // test item
            if n_items as usize <= excluded {
                return Err(Error::NoNegatives {
                    user: self.train.raw_user_id(u).to_string(),
                });
            }

            for &pos in &pos_items {
                let neg = loop {
                    let cand = rng.random_range(0..n_items);
                    let hit = pos_items.binary_search(&cand).is_ok()
                        || cand == trow.item
                        || (!merged && cand == vrow.item);
                    if !hit {
                        break cand;
                    }
                };
                triples.push(Triple { user: u, pos, neg });
            }
        }
        Ok(triples)
    }

    /// Persist the split as a replayable text manifest: one row per
    /// user with the held-out items and both negative lists.
    pub fn write_manifest(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        out.push_str("# pairrank split manifest v1\n");
        out.push_str(&format!("users\t{}\n", self.train.n_users()));
        out.push_str(&format!("items\t{}\n", self.train.n_items()));
        out.push_str(&format!("seed\t{}\n", self.seed));
        out.push_str(&format!("negatives\t{}\n", self.n_negatives));
        for u in 0..self.train.n_users() {
            let t = &self.test[u];
            let v = &self.validation[u];
            let tn: Vec<String> = t.negatives.iter().map(|i| i.to_string()).collect();
            let vn: Vec<String> = v.negatives.iter().map(|i| i.to_string()).collect();
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\n",
                u,
                t.item,
                v.item,
                tn.join(","),
                vn.join(",")
            ));
        }
        std::fs::write(path, out).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    /// Rebuild a split from its manifest and the full filtered dataset
    /// it was produced from.
    pub fn read_manifest(ds: &InteractionDataset, path: &Path) -> Result<LooSplit> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let bad = |message: String| Error::Artifact {
            path: path.to_path_buf(),
            message,
        };
        let mut seed = 0u64;
        let mut n_negatives = 0usize;
        let mut validation = vec![None; ds.n_users()];
        let mut test = vec![None; ds.n_users()];
        for line in text.lines() {
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            match fields[0] {
                "users" if fields.len() == 2 => {
                    let n: usize = fields[1].parse().map_err(|_| bad("bad users".into()))?;
                    if n != ds.n_users() {
                        return Err(bad(format!(
                            "manifest has {n} users, dataset has {}",
                            ds.n_users()
                        )));
                    }
                }
                "items" if fields.len() == 2 => {
                    let n: usize = fields[1].parse().map_err(|_| bad("bad items".into()))?;
                    if n != ds.n_items() {
                        return Err(bad(format!(
                            "manifest has {n} items, dataset has {}",
                            ds.n_items()
                        )));
                    }
                }
                "seed" if fields.len() == 2 => {
                    seed = fields[1].parse().map_err(|_| bad("bad seed".into()))?
                }
                "negatives" if fields.len() == 2 => {
                    n_negatives = fields[1].parse().map_err(|_| bad("bad negatives".into()))?
                }
                _ => {
                    if fields.len() != 5 {
                        return Err(bad(format!("expected 5 fields, got {}", fields.len())));
                    }
                    let u: u32 = fields[0].parse().map_err(|_| bad("bad user".into()))?;
                    let t_item: u32 = fields[1].parse().map_err(|_| bad("bad test item".into()))?;
                    let v_item: u32 = fields[2].parse().map_err(|_| bad("bad val item".into()))?;
                    let parse_list = |s: &str| -> Result<Vec<u32>> {
                        s.split(',')
                            .filter(|x| !x.is_empty())
                            .map(|x| x.parse().map_err(|_| bad(format!("bad negative {x:?}"))))
                            .collect()
                    };
                    let find = |item: u32| -> Result<&Interaction> {
                        ds.positives(u)
                            .iter()
                            .find(|p| p.item == item)
                            .ok_or_else(|| {
                                bad(format!("held-out item {item} is not a positive of {u}"))
                            })
                    };
                    let tp = find(t_item)?;
                    test[u as usize] = Some(HoldoutRow {
                        item: tp.item,
                        timestamp: tp.timestamp,
                        order: tp.order,
                        negatives: parse_list(fields[3])?,
                    });
                    let vp = find(v_item)?;
                    validation[u as usize] = Some(HoldoutRow {
                        item: vp.item,
                        timestamp: vp.timestamp,
                        order: vp.order,
                        negatives: parse_list(fields[4])?,
                    });
                }
            }
        }
        let test: Vec<HoldoutRow> = test
            .into_iter()
            .enumerate()
            .map(|(u, h)| h.ok_or_else(|| bad(format!("user {u} missing from manifest"))))
            .collect::<Result<_>>()?;
        let validation: Vec<HoldoutRow> = validation
            .into_iter()
            .enumerate()
            .map(|(u, h)| h.ok_or_else(|| bad(format!("user {u} missing from manifest"))))
            .collect::<Result<_>>()?;
        let train = ds.without(|u, p| {
            p.item == test[u as usize].item || p.item == validation[u as usize].item
        });
        Ok(LooSplit {
            train,
            validation,
            test,
            seed,
            n_negatives,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write as _;

    fn write_tmp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    fn raw(u: &str, i: &str, v: f64, t: i64) -> RawInteraction {
        RawInteraction {
            user_id: u.into(),
            item_id: i.into(),
            value: v,
            timestamp: t,
        }
    }

    /// Toy dataset: `n_users` users, each interacting with `per_user`
    /// items spread over the item space, timestamps increasing.
    fn toy(n_users: usize, n_items: usize, per_user: usize) -> InteractionDataset {
        let mut recs = Vec::new();
        for u in 0..n_users {
            for k in 0..per_user {
                let i = (u * 3 + k) % n_items;
                recs.push(raw(
                    &format!("u{u}"),
                    &format!("i{i}"),
                    1.0,
                    (u * per_user + k) as i64,
                ));
            }
        }
        binarize_and_index(&recs, 0.0)
    }

    #[test]
    fn load_parses_and_reports_bad_lines() {
        let f = write_tmp("1\t10\t4\t100\n2\t20\t3\t101\nbroken\tline\tx\t102\n3\t30\t5\t103\n");
        let (recs, warns) = load_interactions(f.path(), &ColumnFormat::default()).unwrap();
        assert_eq!(recs.len(), 3);
        assert_eq!(warns.len(), 1);
        assert_eq!(warns[0].line, 3);
        assert_eq!(recs[0].user_id, "1");
        assert_eq!(recs[0].timestamp, 100);
    }

    #[test]
    fn load_empty_file() {
        let f = write_tmp("");
        let (recs, warns) = load_interactions(f.path(), &ColumnFormat::default()).unwrap();
        assert!(recs.is_empty());
        assert!(warns.is_empty());
    }

    #[test]
    fn load_missing_file_is_fatal() {
        let err = load_interactions(Path::new("/no/such/file"), &ColumnFormat::default());
        assert!(matches!(err, Err(Error::Io { .. })));
    }

    #[test]
    fn load_without_timestamp_column_uses_file_order() {
        let f = write_tmp("a,1,5\nb,2,4\n");
        let fmt = ColumnFormat {
            delimiter: ',',
            timestamp_col: None,
            ..ColumnFormat::default()
        };
        let (recs, _) = load_interactions(f.path(), &fmt).unwrap();
        assert_eq!(recs[0].timestamp, 1);
        assert_eq!(recs[1].timestamp, 2);
    }

    #[test]
    fn binarize_strict_threshold() {
        let recs = vec![raw("a", "x", 0.0, 1), raw("a", "y", 1.0, 2)];
        let ds = binarize_and_index(&recs, 0.0);
        assert_eq!(ds.interaction_count(), 1);
        assert_eq!(ds.n_items(), 1);
        assert_eq!(ds.raw_item_id(0), "y");
    }

    #[test]
    fn binarize_collapses_duplicates_keeping_latest() {
        let recs = vec![raw("a", "x", 1.0, 10), raw("a", "x", 2.0, 20)];
        let ds = binarize_and_index(&recs, 0.0);
        assert_eq!(ds.interaction_count(), 1);
        assert_eq!(ds.positives(0)[0].timestamp, 20);
    }

    #[test]
    fn binarize_duplicate_timestamp_tie_breaks_by_file_order() {
        let recs = vec![raw("a", "x", 1.0, 10), raw("a", "x", 2.0, 10)];
        let ds = binarize_and_index(&recs, 0.0);
        assert_eq!(ds.positives(0)[0].order, 1);
    }

    #[test]
    fn filter_min_interactions_boundaries() {
        let mut recs = Vec::new();
        for k in 0..9 {
            recs.push(raw("nine", &format!("i{k}"), 1.0, k));
        }
        for k in 0..10 {
            recs.push(raw("ten", &format!("i{k}"), 1.0, k));
        }
        let ds = binarize_and_index(&recs, 0.0);
        let filtered = filter_min_interactions(&ds, 10);
        assert_eq!(filtered.n_users(), 1);
        assert_eq!(filtered.raw_user_id(0), "ten");
        // items untouched
        assert_eq!(filtered.n_items(), ds.n_items());
    }

    #[test]
    fn filter_identity_when_all_pass() {
        let ds = toy(4, 10, 6);
        let filtered = filter_min_interactions(&ds, 3);
        assert_eq!(filtered.n_users(), ds.n_users());
        assert_eq!(filtered.interaction_count(), ds.interaction_count());
        for u in 0..ds.n_users() as u32 {
            assert_eq!(filtered.positives(u), ds.positives(u));
        }
    }

    #[test]
    fn filter_min_item_interactions_reindexes_items() {
        let recs = vec![
            raw("a", "x", 1.0, 1),
            raw("b", "x", 1.0, 2),
            raw("a", "y", 1.0, 3),
        ];
        let ds = binarize_and_index(&recs, 0.0);
        let filtered = filter_min_item_interactions(&ds, 2);
        assert_eq!(filtered.n_items(), 1);
        assert_eq!(filtered.raw_item_id(0), "x");
        assert_eq!(filtered.n_users(), 2);
        assert_eq!(filtered.interaction_count(), 2);
    }

    #[test]
    fn loo_picks_latest_and_second_latest() {
        let recs = vec![
            raw("a", "x", 1.0, 5),
            raw("a", "y", 1.0, 9),
            raw("a", "z", 1.0, 12),
        ];
        let ds = binarize_and_index(&recs, 0.0);
        let split = loo_split(&ds, 0, 7).unwrap();
        assert_eq!(split.test[0].item, ds.item_index_of("z").unwrap());
        assert_eq!(split.validation[0].item, ds.item_index_of("y").unwrap());
        assert_eq!(split.train.positives(0).len(), 1);
        assert_eq!(split.train.positives(0)[0].item, ds.item_index_of("x").unwrap());
    }

    #[test]
    fn loo_is_deterministic() {
        let ds = toy(6, 30, 8);
        let a = loo_split(&ds, 5, 99).unwrap();
        let b = loo_split(&ds, 5, 99).unwrap();
        assert_eq!(a.test, b.test);
        assert_eq!(a.validation, b.validation);
    }

    #[test]
    fn loo_negative_purity_and_disjointness() {
        let ds = toy(8, 40, 10);
        let split = loo_split(&ds, 8, 1).unwrap();
        for u in 0..ds.n_users() as u32 {
            let t = &split.test[u as usize];
            let v = &split.validation[u as usize];
            assert_eq!(t.negatives.len(), 8);
            assert_eq!(v.negatives.len(), 8);
            for n in t.negatives.iter().chain(v.negatives.iter()) {
                assert!(!ds.has_interaction(u, *n), "negative {n} is a positive of {u}");
            }
            for n in &t.negatives {
                assert!(!v.negatives.contains(n), "test/val negatives overlap");
            }
        }
    }

    #[test]
    fn loo_rejects_users_with_too_few_positives() {
        let recs = vec![raw("a", "x", 1.0, 1), raw("a", "y", 1.0, 2)];
        let ds = binarize_and_index(&recs, 0.0);
        match loo_split(&ds, 0, 1) {
            Err(Error::TooFewPositives { user, have, .. }) => {
                assert_eq!(user, "a");
                assert_eq!(have, 2);
            }
            other => panic!("expected TooFewPositives, got {other:?}"),
        }
    }

    #[test]
    fn loo_rejects_insufficient_negatives() {
        let ds = toy(3, 8, 4);
        match loo_split(&ds, 100, 1) {
            Err(Error::TooFewNegatives { needed, .. }) => assert_eq!(needed, 200),
            other => panic!("expected TooFewNegatives, got {other:?}"),
        }
    }

    #[test]
    fn split_partition_property() {
        let ds = toy(8, 40, 10);
        let split = loo_split(&ds, 8, 3).unwrap();
        for u in 0..ds.n_users() as u32 {
            let mut rebuilt: Vec<u32> = split.train.positives(u).iter().map(|p| p.item).collect();
            rebuilt.push(split.validation[u as usize].item);
            rebuilt.push(split.test[u as usize].item);
            rebuilt.sort_unstable();
            let mut original: Vec<u32> = ds.positives(u).iter().map(|p| p.item).collect();
            original.sort_unstable();
            assert_eq!(rebuilt, original);
            assert_ne!(split.validation[u as usize].item, split.test[u as usize].item);
        }
    }

    #[test]
    fn triples_one_per_positive_and_pure() {
        let ds = toy(20, 50, 8);
        let split = loo_split(&ds, 5, 11).unwrap();
        let triples = split.sample_training_triples(123).unwrap();
        assert_eq!(triples.len(), split.train.interaction_count());
        for t in &triples {
            assert!(!ds.has_interaction(t.user, t.neg));
            assert_ne!(t.neg, split.validation[t.user as usize].item);
            assert_ne!(t.neg, split.test[t.user as usize].item);
            assert!(split.train.has_interaction(t.user, t.pos));
        }
    }

    #[test]
    fn triples_deterministic_per_seed() {
        let ds = toy(10, 30, 6);
        let split = loo_split(&ds, 4, 2).unwrap();
        assert_eq!(
            split.sample_training_triples(7).unwrap(),
            split.sample_training_triples(7).unwrap()
        );
        assert_ne!(
            split.sample_training_triples(7).unwrap(),
            split.sample_training_triples(8).unwrap()
        );
    }

    #[test]
    fn merged_triples_include_validation_item() {
        let ds = toy(6, 30, 8);
        let split = loo_split(&ds, 4, 5).unwrap();
        let triples = split.sample_training_triples_merged(9).unwrap();
        assert_eq!(triples.len(), split.train.interaction_count() + ds.n_users());
        for u in 0..ds.n_users() as u32 {
            let v = split.validation[u as usize].item;
            assert!(triples.iter().any(|t| t.user == u && t.pos == v));
            // test item still excluded from negatives
            assert!(triples
                .iter()
                .filter(|t| t.user == u)
                .all(|t| t.neg != split.test[u as usize].item && t.neg != v));
        }
    }

    #[test]
    fn triples_fail_on_degenerate_universe() {
        // every user interacted with every item
        let mut recs = Vec::new();
        for u in 0..3 {
            for i in 0..5 {
                recs.push(raw(&format!("u{u}"), &format!("i{i}"), 1.0, i as i64));
            }
        }
        let ds = binarize_and_index(&recs, 0.0);
        let split = loo_split(&ds, 0, 1).unwrap();
        assert!(matches!(
            split.sample_training_triples(1),
            Err(Error::NoNegatives { .. })
        ));
    }

    #[test]
    fn merged_and_full_reconstruction() {
        let ds = toy(5, 30, 7);
        let split = loo_split(&ds, 4, 13).unwrap();
        let merged = split.merged_train();
        assert_eq!(merged.interaction_count(), split.train.interaction_count() + ds.n_users());
        let full = split.full_dataset();
        assert_eq!(full.interaction_count(), ds.interaction_count());
        for u in 0..ds.n_users() as u32 {
            assert_eq!(full.positives(u), ds.positives(u));
        }
    }

    proptest::proptest! {
        /// Partition invariant over generated datasets: per user, the
        /// train positives plus the two holdouts rebuild the original
        /// positive set exactly, and no sampled negative is a positive.
        #[test]
        fn split_partition_and_purity(
            n_users in 3usize..8,
            per_user in 3usize..8,
            n_items in 24usize..40,
            seed in 0u64..500,
        ) {
            let ds = toy(n_users, n_items, per_user);
            let split = loo_split(&ds, 4, seed).unwrap();
            for u in 0..ds.n_users() as u32 {
                let mut rebuilt: Vec<u32> =
                    split.train.positives(u).iter().map(|p| p.item).collect();
                rebuilt.push(split.validation[u as usize].item);
                rebuilt.push(split.test[u as usize].item);
                rebuilt.sort_unstable();
                let original: Vec<u32> = ds.positives(u).iter().map(|p| p.item).collect();
                proptest::prop_assert_eq!(rebuilt, original);
                for n in split.test[u as usize]
                    .negatives
                    .iter()
                    .chain(&split.validation[u as usize].negatives)
                {
                    proptest::prop_assert!(!ds.has_interaction(u, *n));
                }
            }
            let triples = split.sample_training_triples(seed ^ 0x5a5a).unwrap();
            proptest::prop_assert_eq!(triples.len(), split.train.interaction_count());
            for t in &triples {
                proptest::prop_assert!(!ds.has_interaction(t.user, t.neg));
            }
        }
    }

    #[test]
    fn manifest_round_trip_is_byte_identical() {
        let ds = toy(6, 30, 8);
        let split = loo_split(&ds, 5, 21).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p1 = dir.path().join("split.txt");
        let p2 = dir.path().join("split2.txt");
        split.write_manifest(&p1).unwrap();
        let reread = LooSplit::read_manifest(&ds, &p1).unwrap();
        reread.write_manifest(&p2).unwrap();
        assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
        assert_eq!(reread.test, split.test);
        assert_eq!(reread.validation, split.validation);
        assert_eq!(reread.train.interaction_count(), split.train.interaction_count());
    }
}
