//! Exposure propensities estimated from relative item popularity, plus
//! per-item neighborhood propensities for the debiased estimators.

use std::path::Path;

use crate::dataset::InteractionDataset;
use crate::error::{Error, Result};
use crate::explainability::ItemNeighborhoods;

/// Default floor applied wherever a propensity lands in a denominator.
pub const DEFAULT_PROPENSITY_FLOOR: f64 = 1e-3;

/// How the per-item neighborhood propensity aggregates the neighbors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NeighborhoodVariant {
    /// Plain sum over the neighborhood; the form the training losses
    /// use. Values can exceed 1.
    PaperSum,
    /// Sum divided by eta: the mean exposure probability over the
    /// neighborhood, which the bias oracle requires.
    DefinitionalMean,
}

impl NeighborhoodVariant {
    pub fn tag(self) -> &'static str {
        match self {
            NeighborhoodVariant::PaperSum => "paper_sum",
            NeighborhoodVariant::DefinitionalMean => "definitional_mean",
        }
    }
}

/// Per-item exposure propensities and neighborhood propensities.
#[derive(Debug, Clone, PartialEq)]
pub struct PropensityModel {
    pub item: Vec<f64>,
    pub neighborhood: Vec<f64>,
    pub eta: usize,
    pub variant: NeighborhoodVariant,
}

/// `theta_i = sqrt(count_i / max_count)`: square-root relative item
/// popularity. User-independent; the most popular item gets exactly 1.
pub fn estimate_item_propensity(ds: &InteractionDataset) -> Result<Vec<f64>> {
    let counts = ds.item_counts();
    let max = counts.iter().copied().max().unwrap_or(0);
    if max == 0 {
        return Err(Error::EmptyDataset);
    }
    Ok(counts
        .iter()
        .map(|&c| (c as f64 / max as f64).sqrt())
        .collect())
}

/// Aggregate item propensities over each item's neighborhood. An empty
/// neighborhood yields 0 (callers clamp before dividing).
pub fn neighborhood_propensity(
    theta: &[f64],
    nbrs: &ItemNeighborhoods,
    variant: NeighborhoodVariant,
) -> Vec<f64> {
    (0..nbrs.n_items() as u32)
        .map(|i| {
            let sum: f64 = nbrs.neighbors(i).iter().map(|(j, _)| theta[*j as usize]).sum();
            match variant {
                NeighborhoodVariant::PaperSum => sum,
                NeighborhoodVariant::DefinitionalMean => sum / nbrs.eta as f64,
            }
        })
        .collect()
}

/// `max(theta, floor)`; applied wherever a propensity is a denominator.
pub fn clamp_propensity(theta: f64, floor: f64) -> f64 {
    theta.max(floor)
}

impl PropensityModel {
    pub fn build(
        ds: &InteractionDataset,
        nbrs: &ItemNeighborhoods,
        variant: NeighborhoodVariant,
    ) -> Result<PropensityModel> {
        let item = estimate_item_propensity(ds)?;
        let neighborhood = neighborhood_propensity(&item, nbrs, variant);
        Ok(PropensityModel {
            item,
            neighborhood,
            eta: nbrs.eta,
            variant,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        out.push_str("# pairrank propensities v1\n");
        out.push_str(&format!("eta\t{}\n", self.eta));
        out.push_str(&format!("variant\t{}\n", self.variant.tag()));
        out.push_str(&format!("items\t{}\n", self.item.len()));
        for (i, (t, tn)) in self.item.iter().zip(&self.neighborhood).enumerate() {
            out.push_str(&format!("{i}\t{t}\t{tn}\n"));
        }
        std::fs::write(path, out).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn read(path: &Path) -> Result<PropensityModel> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let bad = |message: String| Error::Artifact {
            path: path.to_path_buf(),
            message,
        };
        let mut eta = 0usize;
        let mut variant = NeighborhoodVariant::PaperSum;
        let mut item = Vec::new();
        let mut neighborhood = Vec::new();
        for line in text.lines() {
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            match fields[0] {
                "eta" if fields.len() == 2 => {
                    eta = fields[1].parse().map_err(|_| bad("bad eta".into()))?
                }
                "variant" if fields.len() == 2 => {
                    variant = match fields[1] {
                        "paper_sum" => NeighborhoodVariant::PaperSum,
                        "definitional_mean" => NeighborhoodVariant::DefinitionalMean,
                        other => return Err(bad(format!("bad variant {other:?}"))),
                    }
                }
                "items" if fields.len() == 2 => {
                    let n: usize = fields[1].parse().map_err(|_| bad("bad items".into()))?;
                    item.reserve(n);
                    neighborhood.reserve(n);
                }
                _ => {
                    if fields.len() != 3 {
                        return Err(bad(format!("expected 3 fields, got {}", fields.len())));
                    }
                    item.push(fields[1].parse().map_err(|_| bad("bad theta".into()))?);
                    neighborhood.push(fields[2].parse().map_err(|_| bad("bad theta_N".into()))?);
                }
            }
        }
        Ok(PropensityModel {
            item,
            neighborhood,
            eta,
            variant,
        })
    }
}
