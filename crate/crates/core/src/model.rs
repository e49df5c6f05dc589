//! Matrix-factorization scoring model.
//!
//! A user latent matrix `P` and item latent matrix `Q`; the score for
//! (u, i) is the dot product of the corresponding rows, and pairwise
//! preference is the difference of the positive and negative scores.

use std::io::{Read, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

const INIT_SCALE: f64 = 0.01;

#[derive(Debug, Clone, PartialEq)]
pub struct FactorModel {
    n_users: usize,
    n_items: usize,
    k: usize,
    /// Row-major |U| x K.
    p: Vec<f64>,
    /// Row-major |I| x K.
    q: Vec<f64>,
}

impl FactorModel {
    /// Initialize with i.i.d. zero-mean normal entries at scale 0.01,
    /// deterministic in `seed`.
    pub fn init(n_users: usize, n_items: usize, k: usize, seed: u64) -> FactorModel {
        assert!(k >= 1, "latent dimension must be at least 1");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, INIT_SCALE).unwrap();
        let p = (0..n_users * k).map(|_| normal.sample(&mut rng)).collect();
        let q = (0..n_items * k).map(|_| normal.sample(&mut rng)).collect();
        FactorModel {
            n_users,
            n_items,
            k,
            p,
            q,
        }
    }

    pub fn n_users(&self) -> usize {
        self.n_users
    }

    pub fn n_items(&self) -> usize {
        self.n_items
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn user_row(&self, u: u32) -> &[f64] {
        let at = u as usize * self.k;
        &self.p[at..at + self.k]
    }

    pub fn item_row(&self, i: u32) -> &[f64] {
        let at = i as usize * self.k;
        &self.q[at..at + self.k]
    }

    pub fn user_row_mut(&mut self, u: u32) -> &mut [f64] {
        let at = u as usize * self.k;
        &mut self.p[at..at + self.k]
    }

    pub fn item_row_mut(&mut self, i: u32) -> &mut [f64] {
        let at = i as usize * self.k;
        &mut self.q[at..at + self.k]
    }

    pub(crate) fn raw_parts_mut(&mut self) -> (&mut [f64], &mut [f64], usize) {
        (&mut self.p, &mut self.q, self.k)
    }

    pub fn score(&self, u: u32, i: u32) -> f64 {
        dot(self.user_row(u), self.item_row(i))
    }

    /// `f(u, i+, i-) = score(u, i+) - score(u, i-)`; the preference
    /// probability is `sigma(f)`.
    pub fn preference(&self, u: u32, i_plus: u32, i_minus: u32) -> f64 {
        self.score(u, i_plus) - self.score(u, i_minus)
    }

    pub fn all_finite(&self) -> bool {
        self.p.iter().chain(self.q.iter()).all(|v| v.is_finite())
    }

    /// Persist as a portable checkpoint: little-endian header plus
    /// row-major P then Q as 32-bit floats.
    pub fn save(&self, path: &Path, seed: u64, loss_tag: &str) -> Result<()> {
        let io_err = |source| Error::Io {
            path: path.to_path_buf(),
            source,
        };
        let mut f = std::io::BufWriter::new(std::fs::File::create(path).map_err(io_err)?);
        let mut write = |bytes: &[u8]| f.write_all(bytes).map_err(io_err);
        write(b"PRNK")?;
        write(&1u32.to_le_bytes())?;
        write(&(self.n_users as u64).to_le_bytes())?;
        write(&(self.n_items as u64).to_le_bytes())?;
        write(&(self.k as u64).to_le_bytes())?;
        write(&seed.to_le_bytes())?;
        write(&(loss_tag.len() as u32).to_le_bytes())?;
        write(loss_tag.as_bytes())?;
        for v in self.p.iter().chain(self.q.iter()) {
            write(&(*v as f32).to_le_bytes())?;
        }
        Ok(())
    }

    /// Load a checkpoint; returns the model plus the seed and loss tag
    /// recorded in the header.
    pub fn load(path: &Path) -> Result<(FactorModel, u64, String)> {
        let io_err = |source| Error::Io {
            path: path.to_path_buf(),
            source,
        };
        let bad = |message: &str| Error::Artifact {
            path: path.to_path_buf(),
            message: message.to_string(),
        };
        let mut f = std::io::BufReader::new(std::fs::File::open(path).map_err(io_err)?);
        let mut buf8 = [0u8; 8];
        let mut buf4 = [0u8; 4];
        f.read_exact(&mut buf4).map_err(io_err)?;
        if &buf4 != b"PRNK" {
            return Err(bad("not a pairrank checkpoint"));
        }
        f.read_exact(&mut buf4).map_err(io_err)?;
        if u32::from_le_bytes(buf4) != 1 {
            return Err(bad("unsupported checkpoint version"));
        }
        let mut read_u64 = |f: &mut std::io::BufReader<std::fs::File>| -> Result<u64> {
            f.read_exact(&mut buf8).map_err(io_err)?;
            Ok(u64::from_le_bytes(buf8))
        };
        let n_users = read_u64(&mut f)? as usize;
        let n_items = read_u64(&mut f)? as usize;
        let k = read_u64(&mut f)? as usize;
        let seed = read_u64(&mut f)?;
        f.read_exact(&mut buf4).map_err(io_err)?;
        let tag_len = u32::from_le_bytes(buf4) as usize;
        let mut tag_bytes = vec![0u8; tag_len];
        f.read_exact(&mut tag_bytes).map_err(io_err)?;
        let loss_tag = String::from_utf8(tag_bytes).map_err(|_| bad("bad loss tag"))?;
        let mut read_matrix = |len: usize| -> Result<Vec<f64>> {
            let mut out = Vec::with_capacity(len);
            let mut b = [0u8; 4];
            for _ in 0..len {
                f.read_exact(&mut b).map_err(io_err)?;
                out.push(f32::from_le_bytes(b) as f64);
            }
            Ok(out)
        };
        let p = read_matrix(n_users * k)?;
        let q = read_matrix(n_items * k)?;
        Ok((
            FactorModel {
                n_users,
                n_items,
                k,
                p,
                q,
            },
            seed,
            loss_tag,
        ))
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Top-K recommendation list for one user.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedList {
    pub user: u32,
    pub items: Vec<u32>,
    /// Non-increasing; matches `items`.
    pub scores: Vec<f64>,
    /// Set when fewer candidates than `k_cut` were available.
    pub truncated: bool,
}

/// The `k_cut` highest-scoring candidates, ties broken by ascending
/// item index. The caller guarantees `candidates` excludes the user's
/// train positives.
pub fn top_k(model: &FactorModel, user: u32, candidates: &[u32], k_cut: usize) -> RankedList {
    assert!(!candidates.is_empty(), "top_k needs at least one candidate");
    let mut scored: Vec<(u32, f64)> = candidates
        .iter()
        .map(|&i| (i, model.score(user, i)))
        .collect();
    scored.sort_unstable_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
    let truncated = scored.len() < k_cut;
    scored.truncate(k_cut);
    RankedList {
        user,
        items: scored.iter().map(|e| e.0).collect(),
        scores: scored.iter().map(|e| e.1).collect(),
        truncated,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn init_is_deterministic_and_shaped() {
        let a = FactorModel::init(10, 10, 5, 7);
        let b = FactorModel::init(10, 10, 5, 7);
        assert_eq!(a, b);
        assert_eq!(a.user_row(9).len(), 5);
        assert_eq!(a.item_row(9).len(), 5);
        assert_ne!(a, FactorModel::init(10, 10, 5, 8));
    }

    #[test]
    fn init_mean_is_near_zero() {
        // 10^6 draws; mean must sit within 3 standard errors of 0.
        let m = FactorModel::init(1000, 1000, 500, 3);
        let n = 1_000_000f64;
        let mean: f64 = (0..1000u32)
            .map(|u| m.user_row(u).iter().sum::<f64>())
            .sum::<f64>()
            / n;
        let se = INIT_SCALE / n.sqrt();
        assert!(
            mean.abs() < 3.0 * se,
            "init mean {mean} exceeds 3 standard errors {}",
            3.0 * se
        );
    }

    #[test]
    fn score_matches_elementwise_mac() {
        let m = FactorModel::init(4, 4, 8, 11);
        for u in 0..4u32 {
            for i in 0..4u32 {
                let mut acc = 0.0;
                for t in 0..8 {
                    acc += m.user_row(u)[t] * m.item_row(i)[t];
                }
                assert_abs_diff_eq!(m.score(u, i), acc, epsilon = 0.0);
            }
        }
    }

    #[test]
    fn zero_item_vector_scores_zero() {
        let mut m = FactorModel::init(2, 2, 3, 1);
        m.item_row_mut(0).fill(0.0);
        assert_abs_diff_eq!(m.score(1, 0), 0.0);
    }

    #[test]
    fn preference_arithmetic_and_antisymmetry() {
        let mut m = FactorModel::init(1, 2, 2, 5);
        m.user_row_mut(0).copy_from_slice(&[1.0, 2.0]);
        m.item_row_mut(0).copy_from_slice(&[3.0, -1.0]);
        m.item_row_mut(1).copy_from_slice(&[0.0, 0.0]);
        assert_abs_diff_eq!(m.score(0, 0), 1.0);
        assert_abs_diff_eq!(m.preference(0, 0, 1), 1.0);
        assert_abs_diff_eq!(m.preference(0, 0, 0), 0.0);
        assert_abs_diff_eq!(m.preference(0, 0, 1), -m.preference(0, 1, 0));
    }

    #[test]
    fn top_k_single_candidate_and_order() {
        let m = FactorModel::init(1, 5, 4, 9);
        let single = top_k(&m, 0, &[3], 10);
        assert_eq!(single.items, vec![3]);
        assert!(single.truncated);

        let all = top_k(&m, 0, &[0, 1, 2, 3, 4], 5);
        for w in all.scores.windows(2) {
            assert!(w[0] >= w[1]);
        }
        assert!(!all.truncated);
    }

    #[test]
    fn top_k_matches_full_sort_oracle() {
        let m = FactorModel::init(3, 101, 6, 13);
        let candidates: Vec<u32> = (0..101).collect();
        for u in 0..3u32 {
            let list = top_k(&m, u, &candidates, 10);
            // independent full sort
            let mut oracle: Vec<(u32, f64)> =
                candidates.iter().map(|&i| (i, m.score(u, i))).collect();
            oracle.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
            let want: Vec<u32> = oracle[..10].iter().map(|e| e.0).collect();
            assert_eq!(list.items, want);
        }
    }

    #[test]
    fn top_k_is_pure_in_scores() {
        // same scores (tie everywhere) -> index-ascending output
        let mut m = FactorModel::init(1, 6, 2, 1);
        for i in 0..6u32 {
            m.item_row_mut(i).fill(0.0);
        }
        let list = top_k(&m, 0, &[5, 2, 4, 0], 3);
        assert_eq!(list.items, vec![0, 2, 4]);
    }

    #[test]
    fn checkpoint_round_trip() {
        let m = FactorModel::init(7, 9, 4, 21);
        let dir = tempfile::tempdir().unwrap();
        let p1 = dir.path().join("m1.bin");
        let p2 = dir.path().join("m2.bin");
        m.save(&p1, 21, "EBPR").unwrap();
        let (loaded, seed, tag) = FactorModel::load(&p1).unwrap();
        assert_eq!(seed, 21);
        assert_eq!(tag, "EBPR");
        assert_eq!(loaded.n_users(), 7);
        assert_eq!(loaded.k(), 4);
        // file -> model -> file is byte-identical
        loaded.save(&p2, seed, &tag).unwrap();
        assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
        // values round through f32 exactly
        for u in 0..7u32 {
            for (a, b) in m.user_row(u).iter().zip(loaded.user_row(u)) {
                assert_abs_diff_eq!(*a as f32 as f64, *b, epsilon = 0.0);
            }
        }
    }

    #[test]
    fn load_rejects_garbage() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.bin");
        std::fs::write(&p, b"not a checkpoint").unwrap();
        assert!(matches!(FactorModel::load(&p), Err(Error::Artifact { .. })));
    }
}
