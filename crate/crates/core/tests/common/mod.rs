//! Shared helpers for the integration and acceptance suites.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::HashSet;
use std::path::Path;
use std::process::Output;

/// Write a popularity-skewed implicit-feedback log: every user rates
/// between `min_per_user` and `max_per_user` distinct items, items drawn
/// with probability proportional to `1/(index+1)^0.8`, ml-100k column
/// layout (user, item, rating 1-5, timestamp).
pub fn write_synth_tsv(
    path: &Path,
    n_users: usize,
    n_items: usize,
    min_per_user: usize,
    max_per_user: usize,
    seed: u64,
) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weights: Vec<f64> = (0..n_items).map(|i| 1.0 / ((i + 1) as f64).powf(0.8)).collect();
    let total: f64 = weights.iter().sum();
    let mut out = String::new();
    let mut ts = 0i64;
    for u in 0..n_users {
        let count = rng.random_range(min_per_user..=max_per_user);
        let mut chosen: HashSet<usize> = HashSet::new();
        while chosen.len() < count {
            let mut mass = rng.random::<f64>() * total;
            let mut pick = n_items - 1;
            for (i, w) in weights.iter().enumerate() {
                if mass < *w {
                    pick = i;
                    break;
                }
                mass -= w;
            }
            chosen.insert(pick);
        }
        let mut items: Vec<usize> = chosen.into_iter().collect();
        items.sort_unstable();
        for i in items {
            let rating = rng.random_range(1..=5);
            out.push_str(&format!("u{u}\ti{i}\t{rating}\t{ts}\n"));
            ts += 1;
        }
    }
    std::fs::write(path, out).unwrap();
}

pub fn pairrank_bin() -> &'static str {
    env!("CARGO_BIN_EXE_pairrank")
}

/// Run the CLI against an artifact directory; panics on spawn failure.
pub fn run_cli(args: &[&str]) -> Output {
    std::process::Command::new(pairrank_bin())
        .args(args)
        .output()
        .expect("failed to spawn pairrank")
}

pub fn assert_success(out: &Output, what: &str) {
    assert!(
        out.status.success(),
        "{what} failed\nstdout:\n{}\nstderr:\n{}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}
