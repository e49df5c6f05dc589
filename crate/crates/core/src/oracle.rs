//! Monte Carlo verification of the estimators' bias properties on
//! synthetic worlds with known exposure and relevance probabilities.
//!
//! Worlds partition the items into blocks of `eta + 1`; every item's
//! neighborhood is drawn from its own block and the exposure
//! probability is constant within a block. That realizes the
//! conditional-independence premise of the unbiasedness argument
//! constructively: the mean of the observed explainability equals the
//! neighborhood propensity times the ideal explainability, exactly.
//!
//! All full sums skip the `i+ == i-` diagonal. A self-pair carries no
//! pairwise-ranking information, and the factorization
//! `E[Y+ (1 - Y-/theta)] = gamma+ (1 - gamma-)` needs the two draws to
//! be independent items. The normalization stays `1/(|U| |I|^2)`.
//!
//! The estimators take the explainability factors as the exact
//! neighborhood interaction probabilities of the world (the probability
//! the per-draw counting formula estimates). The per-draw counting
//! variant is available behind [`ExplainabilityMode::DrawCounting`] for
//! exploration; it correlates with the indicator factors through the
//! shared neighborhood draws and measurably shifts both estimators, so
//! the conformance checks never use it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::explainability::ItemNeighborhoods;
use crate::model::FactorModel;
use crate::seeds;

pub const MAX_WORLD_USERS: usize = 8;
pub const MAX_WORLD_ITEMS: usize = 16;

/// Ground-truth exposure and relevance probabilities plus the fixed
/// scoring model whose loss the estimators measure.
#[derive(Debug, Clone)]
pub struct SyntheticWorld {
    pub n_users: usize,
    pub n_items: usize,
    pub eta: usize,
    /// Per-item exposure probability; constant within each block and
    /// independent of the user by construction.
    pub theta_item: Vec<f64>,
    /// Row-major user-by-item relevance probabilities.
    pub gamma: Vec<f64>,
    pub neighborhoods: ItemNeighborhoods,
    pub blocks: Vec<Vec<u32>>,
    pub model: FactorModel,
}

/// Which estimator the oracle measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleEstimator {
    PUebpr,
    Uebpr,
}

impl OracleEstimator {
    pub fn tag(self) -> &'static str {
        match self {
            OracleEstimator::PUebpr => "pUEBPR",
            OracleEstimator::Uebpr => "UEBPR",
        }
    }
}

/// Where the estimator's explainability factors come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExplainabilityMode {
    /// The exact neighborhood interaction probability
    /// `mean_{j in N_i} theta_j gamma_uj`; the quantity the estimator
    /// definitions denote, and the mode conformance checks use.
    TruePopulation,
    /// The per-draw counting estimate `|N_i ∩ I_u^+| / eta`.
    /// Exploration only.
    DrawCounting,
}

pub fn generate_world(n_users: usize, n_items: usize, eta: usize, seed: u64) -> SyntheticWorld {
    assert!(n_items > eta, "need at least eta + 1 items");
    assert!(
        n_users <= MAX_WORLD_USERS && n_items <= MAX_WORLD_ITEMS,
        "oracle worlds are desk-scale: at most {MAX_WORLD_USERS} users and {MAX_WORLD_ITEMS} items"
    );
    let mut rng = ChaCha8Rng::seed_from_u64(seeds::derive(seed, 0x574f_524c));

    // blocks of eta + 1; the last block absorbs any remainder so every
    // neighborhood can hold exactly eta same-block items
    let block_size = eta + 1;
    let n_blocks = (n_items / block_size).max(1);
    let mut blocks: Vec<Vec<u32>> = vec![Vec::new(); n_blocks];
    for i in 0..n_items as u32 {
        let b = ((i as usize) / block_size).min(n_blocks - 1);
        blocks[b].push(i);
    }

    let mut theta_item = vec![0.0; n_items];
    for block in &blocks {
        let t = rng.random_range(0.2..=1.0);
        for &i in block {
            theta_item[i as usize] = t;
        }
    }
    let gamma: Vec<f64> = (0..n_users * n_items)
        .map(|_| rng.random_range(0.1..=0.9))
        .collect();

    let neighbors: Vec<Vec<(u32, f64)>> = (0..n_items as u32)
        .map(|i| {
            let b = ((i as usize) / block_size).min(n_blocks - 1);
            blocks[b]
                .iter()
                .filter(|&&j| j != i)
                .take(eta)
                .map(|&j| (j, 1.0))
                .collect()
        })
        .collect();
    let neighborhoods = ItemNeighborhoods::from_lists(eta, neighbors);

    // a fixed random scoring model with spread-out preferences
    let mut model = FactorModel::init(n_users, n_items, 4, seeds::derive(seed, 0x4d4f_444c));
    for u in 0..n_users as u32 {
        for v in model.user_row_mut(u) {
            *v *= 50.0;
        }
    }
    for i in 0..n_items as u32 {
        for v in model.item_row_mut(i) {
            *v *= 50.0;
        }
    }

    SyntheticWorld {
        n_users,
        n_items,
        eta,
        theta_item,
        gamma,
        neighborhoods,
        blocks,
        model,
    }
}

impl SyntheticWorld {
    pub fn theta(&self, _user: u32, item: u32) -> f64 {
        self.theta_item[item as usize]
    }

    pub fn gamma(&self, user: u32, item: u32) -> f64 {
        self.gamma[user as usize * self.n_items + item as usize]
    }

    /// Override every exposure probability (still block-constant).
    pub fn with_uniform_theta(mut self, theta: f64) -> SyntheticWorld {
        self.theta_item.iter_mut().for_each(|t| *t = theta);
        self
    }

    pub fn with_uniform_gamma(mut self, gamma: f64) -> SyntheticWorld {
        self.gamma.iter_mut().for_each(|g| *g = gamma);
        self
    }

    /// Mean relevance probability over the neighborhood: the ideal
    /// explainability.
    pub fn e_ideal(&self, user: u32, item: u32) -> f64 {
        let nbrs = self.neighborhoods.neighbors(item);
        if nbrs.is_empty() {
            return 0.0;
        }
        nbrs.iter().map(|(j, _)| self.gamma(user, *j)).sum::<f64>() / nbrs.len() as f64
    }

    /// Mean exposure probability over the neighborhood (definitional
    /// mean): the neighborhood propensity.
    pub fn theta_n(&self, user: u32, item: u32) -> f64 {
        let _ = user;
        let nbrs = self.neighborhoods.neighbors(item);
        if nbrs.is_empty() {
            return 0.0;
        }
        nbrs.iter()
            .map(|(j, _)| self.theta_item[*j as usize])
            .sum::<f64>()
            / nbrs.len() as f64
    }

    /// Exact probability that the user interacted with a neighborhood
    /// member: `mean theta_j gamma_uj = theta_N * E_ideal` under the
    /// block-constant construction.
    pub fn e_population(&self, user: u32, item: u32) -> f64 {
        let nbrs = self.neighborhoods.neighbors(item);
        if nbrs.is_empty() {
            return 0.0;
        }
        nbrs.iter()
            .map(|(j, _)| self.theta_item[*j as usize] * self.gamma(user, *j))
            .sum::<f64>()
            / nbrs.len() as f64
    }
}

fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Precomputed `-log sigma(f(u, i+, i-))` over the whole triple space.
fn loss_core(world: &SyntheticWorld) -> Vec<f64> {
    let (nu, ni) = (world.n_users, world.n_items);
    let mut core = vec![0.0; nu * ni * ni];
    for u in 0..nu as u32 {
        for ip in 0..ni as u32 {
            for im in 0..ni as u32 {
                let f = world.model.preference(u, ip, im);
                core[u as usize * ni * ni + ip as usize * ni + im as usize] = softplus(-f);
            }
        }
    }
    core
}

#[derive(Debug, Clone)]
pub struct IdealQuantities {
    /// Row-major user-by-item ideal explainability.
    pub e_ideal: Vec<f64>,
    /// Row-major user-by-item neighborhood propensity.
    pub theta_n: Vec<f64>,
    pub l_ideal: f64,
}

impl SyntheticWorld {
    pub fn ideal(&self) -> IdealQuantities {
        let mut e_ideal = vec![0.0; self.n_users * self.n_items];
        let mut theta_n = vec![0.0; self.n_users * self.n_items];
        for u in 0..self.n_users as u32 {
            for i in 0..self.n_items as u32 {
                e_ideal[u as usize * self.n_items + i as usize] = self.e_ideal(u, i);
                theta_n[u as usize * self.n_items + i as usize] = self.theta_n(u, i);
            }
        }
        IdealQuantities {
            e_ideal,
            theta_n,
            l_ideal: ideal_ebpr_loss(self),
        }
    }
}

/// The ideal loss: relevance-weighted, ideal-explainability-weighted
/// ranking loss summed over all user and distinct item pairs.
pub fn ideal_ebpr_loss(world: &SyntheticWorld) -> f64 {
    let (nu, ni) = (world.n_users, world.n_items);
    let core = loss_core(world);
    let mut total = 0.0;
    for u in 0..nu as u32 {
        for ip in 0..ni as u32 {
            let wp = world.gamma(u, ip) * world.e_ideal(u, ip);
            for im in 0..ni as u32 {
                if ip == im {
                    continue;
                }
                let wn = (1.0 - world.gamma(u, im)) * (1.0 - world.e_ideal(u, im));
                total += wp * wn * core[u as usize * ni * ni + ip as usize * ni + im as usize];
            }
        }
    }
    total / (nu as f64 * (ni * ni) as f64)
}

/// One draw of the interaction matrix: `Y = O * R` with independent
/// exposure and relevance coins per cell. Row-major user-by-item.
pub fn sample_interactions(world: &SyntheticWorld, draw_seed: u64) -> Vec<u8> {
    let mut rng = ChaCha8Rng::seed_from_u64(seeds::derive(draw_seed, 0x4452_4157));
    let mut y = vec![0u8; world.n_users * world.n_items];
    for u in 0..world.n_users as u32 {
        for i in 0..world.n_items as u32 {
            let o = rng.random::<f64>() < world.theta(u, i);
            let r = rng.random::<f64>() < world.gamma(u, i);
            y[u as usize * world.n_items + i as usize] = u8::from(o && r);
        }
    }
    y
}

/// Full-sum estimator loss over one draw.
pub fn empirical_estimator_loss(
    world: &SyntheticWorld,
    y: &[u8],
    kind: OracleEstimator,
    mode: ExplainabilityMode,
) -> f64 {
    let core = loss_core(world);
    empirical_loss_with_core(world, y, kind, mode, &core)
}

fn explainability_factors(
    world: &SyntheticWorld,
    y: &[u8],
    mode: ExplainabilityMode,
) -> Vec<f64> {
    let (nu, ni) = (world.n_users, world.n_items);
    let mut e = vec![0.0; nu * ni];
    for u in 0..nu as u32 {
        for i in 0..ni as u32 {
            e[u as usize * ni + i as usize] = match mode {
                ExplainabilityMode::TruePopulation => world.e_population(u, i),
                ExplainabilityMode::DrawCounting => {
                    let nbrs = world.neighborhoods.neighbors(i);
                    let count = nbrs
                        .iter()
                        .filter(|(j, _)| y[u as usize * ni + *j as usize] == 1)
                        .count();
                    count as f64 / world.eta as f64
                }
            };
        }
    }
    e
}

fn empirical_loss_with_core(
    world: &SyntheticWorld,
    y: &[u8],
    kind: OracleEstimator,
    mode: ExplainabilityMode,
    core: &[f64],
) -> f64 {
    let (nu, ni) = (world.n_users, world.n_items);
    let e = explainability_factors(world, y, mode);
    let mut total = 0.0;
    for u in 0..nu {
        let row = u * ni;
        for ip in 0..ni {
            let yp = y[row + ip] as f64;
            if yp == 0.0 {
                continue;
            }
            let e_pos = e[row + ip];
            let pos_factor = match kind {
                OracleEstimator::PUebpr => yp / world.theta_item[ip] * e_pos,
                OracleEstimator::Uebpr => {
                    let tn = world.theta_n(0, ip as u32);
                    yp / world.theta_item[ip] * (e_pos / tn)
                }
            };
            for im in 0..ni {
                if ip == im {
                    continue;
                }
                let ym = y[row + im] as f64;
                let e_neg = e[row + im];
                let neg_factor = match kind {
                    OracleEstimator::PUebpr => {
                        (1.0 - ym / world.theta_item[im]) * (1.0 - e_neg)
                    }
                    OracleEstimator::Uebpr => {
                        let tn = world.theta_n(0, im as u32);
                        (1.0 - ym / world.theta_item[im]) * (1.0 - e_neg / tn)
                    }
                };
                total += pos_factor * neg_factor * core[u * ni * ni + ip * ni + im];
            }
        }
    }
    total / (nu as f64 * (ni * ni) as f64)
}

/// The expectation the partially-unbiased estimator actually converges
/// to: the ideal loss with each ideal explainability replaced by
/// `theta_N * E_ideal` (the mean of the observed explainability).
pub fn puebpr_analytic_expectation(world: &SyntheticWorld) -> f64 {
    let (nu, ni) = (world.n_users, world.n_items);
    let core = loss_core(world);
    let mut total = 0.0;
    for u in 0..nu as u32 {
        for ip in 0..ni as u32 {
            let wp = world.gamma(u, ip) * world.e_population(u, ip);
            for im in 0..ni as u32 {
                if ip == im {
                    continue;
                }
                let wn = (1.0 - world.gamma(u, im)) * (1.0 - world.e_population(u, im));
                total += wp * wn
                    * core[u as usize * ni * ni + ip as usize * ni + im as usize];
            }
        }
    }
    total / (nu as f64 * (ni * ni) as f64)
}

#[derive(Debug, Clone)]
pub struct BiasMeasurement {
    pub estimator: OracleEstimator,
    pub mode: ExplainabilityMode,
    pub n_draws: usize,
    pub mean: f64,
    pub std_error: f64,
    pub l_ideal: f64,
    pub bias: f64,
    /// `|bias| / std_error`.
    pub sigmas: f64,
}

impl BiasMeasurement {
    /// The 3-sigma unbiasedness verdict.
    pub fn consistent_with_unbiased(&self) -> bool {
        self.sigmas <= 3.0
    }
}

/// Monte Carlo mean of the estimator over independent draws, its
/// standard error, and the gap to the ideal loss.
pub fn measure_bias(
    world: &SyntheticWorld,
    kind: OracleEstimator,
    n_draws: usize,
    seed: u64,
    mode: ExplainabilityMode,
) -> Result<BiasMeasurement> {
    if n_draws < 2 {
        return Err(Error::InvalidConfig(
            "measure_bias needs at least 2 draws".into(),
        ));
    }
    let core = loss_core(world);
    let values: Vec<f64> = (0..n_draws)
        .into_par_iter()
        .map(|d| {
            let y = sample_interactions(world, seeds::derive(seed, d as u64));
            empirical_loss_with_core(world, &y, kind, mode, &core)
        })
        .collect();
    let n = n_draws as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    let std_error = (var / n).sqrt();
    let l_ideal = ideal_ebpr_loss(world);
    let bias = mean - l_ideal;
    Ok(BiasMeasurement {
        estimator: kind,
        mode,
        n_draws,
        mean,
        std_error,
        l_ideal,
        bias,
        sigmas: bias.abs() / std_error,
    })
}
