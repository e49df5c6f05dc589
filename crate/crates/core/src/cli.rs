//! Command-line pipeline orchestration:
//! ingest -> split -> precompute -> tune -> train -> evaluate, plus the
//! explanation renderer, the neighborhood-size sweep, the sparsity
//! study and the estimator-bias oracle.
//!
//! Every subcommand reads its inputs from the artifact directory the
//! earlier stages wrote, and records a manifest (config, seeds,
//! version, dataset hash) sufficient to replay its outputs.

use clap::{Args, Parser, Subcommand};
use std::path::{Path, PathBuf};

use crate::artifacts::{dataset_hash, KvRecord, Table};
use crate::dataset::{
    binarize_and_index, filter_min_interactions, filter_min_item_interactions, load_interactions,
    ColumnFormat, InteractionDataset, LooSplit,
};
use crate::error::{Error, Result};
use crate::evaluation::{
    self, evaluate_full, EvalContext, Metrics, ReplicateSummary, UnbiasedTestset, METRIC_NAMES,
};
use crate::explainability::{
    average_explainability, build_explainability, build_neighborhoods, explain_recommendation,
    ExplainabilityMatrix, ItemNeighborhoods, ItemVectors,
};
use crate::model::FactorModel;
use crate::oracle::{
    generate_world, measure_bias, puebpr_analytic_expectation, ExplainabilityMode,
    OracleEstimator,
};
use crate::propensity::{NeighborhoodVariant, PropensityModel};
use crate::training::{
    self, hyperparameter_search, LossKind, SearchOutcome, TrainingConfig,
};

pub const ENV_DATA_DIR: &str = "PAIRRANK_DATA_DIR";

#[derive(Parser)]
#[command(
    name = "pairrank",
    version,
    about = "Explainable and debiased pairwise-ranking recommenders over matrix factorization"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Artifact directory shared by all pipeline stages.
    #[arg(long, default_value = "artifacts")]
    out: PathBuf,
    /// Flat key=value config file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct TrainFlags {
    #[arg(long)]
    latent_dim: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    l2: Option<f64>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    max_epochs: Option<usize>,
    #[arg(long)]
    patience: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Clamp instance weights into [0, 1].
    #[arg(long)]
    weight_clip: bool,
    /// Lock-free parallel updates (throughput mode, not reproducible).
    #[arg(long)]
    parallel: bool,
    #[arg(long)]
    propensity_floor: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Parse, binarize and filter an interaction log; report its stats.
    Ingest {
        #[command(flatten)]
        common: CommonArgs,
        /// Interaction log; defaults to $PAIRRANK_DATA_DIR/u.data.
        #[arg(long)]
        data: Option<PathBuf>,
        /// Field delimiter: "tab", "comma", "space" or a single char.
        #[arg(long)]
        delimiter: Option<String>,
        /// Binarization threshold: keep value > threshold.
        #[arg(long)]
        threshold: Option<f64>,
        /// Drop users with fewer positives than this.
        #[arg(long)]
        min_interactions: Option<usize>,
    },
    /// Leave-one-out split with sampled evaluation negatives.
    Split {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        negatives: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Neighborhoods, explainability matrices (all phases) and
    /// propensities.
    Precompute {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        eta: Option<usize>,
    },
    /// Random hyperparameter search for one loss kind.
    Tune {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        loss: LossArg,
        #[arg(long)]
        configs: Option<usize>,
        #[arg(long)]
        replicates: Option<usize>,
        #[command(flatten)]
        flags: TrainFlags,
    },
    /// Train one model; by default the merged retrain of the tuned
    /// configuration.
    Train {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        loss: LossArg,
        /// Use the tuned best configuration (requires `tune` output).
        #[arg(long)]
        from_best: bool,
        /// Retrain on merged train+validation for a fixed epoch count.
        #[arg(long)]
        merged: bool,
        /// Epoch count for --merged (defaults to the tuned epoch budget).
        #[arg(long)]
        epochs: Option<usize>,
        #[command(flatten)]
        flags: TrainFlags,
    },
    /// Metric table for a trained model, or the full replicate protocol.
    Evaluate {
        #[command(flatten)]
        common: CommonArgs,
        /// Losses to evaluate (comma separated).
        #[arg(long, value_delimiter = ',')]
        loss: Vec<LossArg>,
        #[arg(long)]
        k: Option<usize>,
        /// Retrain this many merged replicates and report mean and std;
        /// 0 evaluates the stored checkpoint once.
        #[arg(long, default_value_t = 0)]
        replicates: usize,
        /// Unbiased test set of `user<TAB>item<TAB>rating` rows.
        #[arg(long)]
        testset: Option<PathBuf>,
        #[arg(long)]
        relevance_threshold: Option<f64>,
        #[command(flatten)]
        flags: TrainFlags,
    },
    /// Render item-based explanations for a user's recommendations.
    Explain {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        loss: LossArg,
        /// Raw user id as it appears in the input data.
        #[arg(long)]
        user: String,
        /// Restrict to one raw item id.
        #[arg(long)]
        item: Option<String>,
        #[arg(long)]
        k: Option<usize>,
    },
    /// Re-train tuned models across neighborhood sizes.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, value_delimiter = ',')]
        eta: Vec<usize>,
        #[arg(long, value_delimiter = ',')]
        loss: Vec<LossArg>,
        #[arg(long)]
        k: Option<usize>,
        #[command(flatten)]
        flags: TrainFlags,
    },
    /// Average explainability against sparsity under item filtering.
    SparsityStudy {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, value_delimiter = ',')]
        thresholds: Vec<usize>,
        #[arg(long)]
        eta: Option<usize>,
    },
    /// Monte Carlo check of the estimators' bias on synthetic worlds.
    Oracle {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        users: Option<usize>,
        #[arg(long)]
        items: Option<usize>,
        #[arg(long)]
        eta: Option<usize>,
        #[arg(long)]
        draws: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Use the per-draw counting explainability instead of the
        /// population probability (exploration only).
        #[arg(long)]
        draw_counting: bool,
    },
    /// Run ingest through evaluate in one invocation.
    Pipeline {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        loss: Vec<LossArg>,
        #[arg(long)]
        replicates: Option<usize>,
        #[command(flatten)]
        flags: TrainFlags,
    },
}

/// Loss kind as a clap-friendly newtype.
#[derive(Clone, Copy, Debug)]
struct LossArg(LossKind);

impl std::str::FromStr for LossArg {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        s.parse::<LossKind>()
            .map(LossArg)
            .map_err(|e| e.to_string())
    }
}

pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            // help/version are not usage errors
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Defaults, overridden by the config file, overridden by flags.
struct Settings {
    file: KvRecord,
}

impl Settings {
    fn load(common: &CommonArgs) -> Result<Settings> {
        let file = match &common.config {
            Some(path) => KvRecord::read(path)?,
            None => KvRecord::new(),
        };
        Ok(Settings { file })
    }

    fn get<T: std::str::FromStr>(&self, key: &str, flag: Option<T>, default: T) -> Result<T> {
        if let Some(v) = flag {
            return Ok(v);
        }
        match self.file.get(key) {
            Some(raw) => raw.parse::<T>().map_err(|_| {
                Error::InvalidConfig(format!("config key {key:?} has invalid value {raw:?}"))
            }),
            None => Ok(default),
        }
    }

    fn training_config(&self, loss: LossKind, eta: usize, flags: &TrainFlags) -> Result<TrainingConfig> {
        let d = TrainingConfig::default();
        Ok(TrainingConfig {
            loss,
            latent_dim: self.get("latent_dim", flags.latent_dim, d.latent_dim)?,
            batch_size: self.get("batch_size", flags.batch_size, d.batch_size)?,
            l2: self.get("l2", flags.l2, d.l2)?,
            eta,
            learning_rate: self.get("learning_rate", flags.learning_rate, d.learning_rate)?,
            max_epochs: self.get("max_epochs", flags.max_epochs, d.max_epochs)?,
            patience: self.get("patience", flags.patience, d.patience)?,
            seed: self.get("seed", flags.seed, d.seed)?,
            weight_clip: flags.weight_clip
                || self.get("weight_clip", None::<bool>, false)?,
            propensity_floor: self.get(
                "propensity_floor",
                flags.propensity_floor,
                d.propensity_floor,
            )?,
            parallel: flags.parallel,
        })
    }
}

// artifact file names
const INGEST_MANIFEST: &str = "ingest.manifest";
const STATS: &str = "stats.txt";
const USERS_TSV: &str = "users.tsv";
const ITEMS_TSV: &str = "items.tsv";
const SPLIT_FILE: &str = "split.txt";
const SPLIT_MANIFEST: &str = "split.manifest";
const NBRS_TRAIN: &str = "nbrs_train.txt";
const NBRS_MERGED: &str = "nbrs_merged.txt";
const NBRS_FULL: &str = "nbrs_full.txt";
const E_TRAIN: &str = "e_train.txt";
const E_MERGED: &str = "e_merged.txt";
const E_EVAL: &str = "e_eval.txt";
const PROP_TRAIN: &str = "prop_train.txt";
const PROP_MERGED: &str = "prop_merged.txt";
const PRECOMPUTE_MANIFEST: &str = "precompute.manifest";

fn model_file(loss: LossKind) -> String {
    format!("model_{}.bin", loss.tag())
}

fn best_config_file(loss: LossKind) -> String {
    format!("best_config_{}.txt", loss.tag())
}

fn require_artifact(dir: &Path, name: &str, producer: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    if !path.exists() {
        return Err(Error::Artifact {
            path,
            message: format!("missing; run `pairrank {producer}` first"),
        });
    }
    Ok(path)
}

fn write_manifest(dir: &Path, name: &str, rec: &mut KvRecord) -> Result<()> {
    rec.push("version", env!("CARGO_PKG_VERSION"));
    rec.write(&dir.join(name))
}

fn parse_delimiter(raw: &str) -> Result<char> {
    match raw {
        "tab" | "\\t" => Ok('\t'),
        "comma" => Ok(','),
        "space" => Ok(' '),
        s if s.chars().count() == 1 => Ok(s.chars().next().unwrap()),
        other => Err(Error::InvalidConfig(format!("bad delimiter {other:?}"))),
    }
}

fn load_dataset(dir: &Path) -> Result<InteractionDataset> {
    let manifest_path = require_artifact(dir, INGEST_MANIFEST, "ingest")?;
    let manifest = KvRecord::read(&manifest_path)?;
    let data = PathBuf::from(manifest.require("data", &manifest_path)?);
    let delimiter = parse_delimiter(manifest.require("delimiter", &manifest_path)?)?;
    let threshold: f64 = manifest
        .require("threshold", &manifest_path)?
        .parse()
        .map_err(|_| Error::InvalidConfig("bad threshold in ingest manifest".into()))?;
    let min_interactions: usize = manifest
        .require("min_interactions", &manifest_path)?
        .parse()
        .map_err(|_| Error::InvalidConfig("bad min_interactions in ingest manifest".into()))?;
    let format = ColumnFormat {
        delimiter,
        ..ColumnFormat::default()
    };
    let (raw, _) = load_interactions(&data, &format)?;
    let ds = filter_min_interactions(&binarize_and_index(&raw, threshold), min_interactions);
    let recorded = manifest.require("dataset_hash", &manifest_path)?;
    let actual = dataset_hash(&ds);
    if recorded != actual {
        return Err(Error::Artifact {
            path: manifest_path,
            message: format!("dataset changed since ingest: {recorded} != {actual}"),
        });
    }
    Ok(ds)
}

fn load_split(dir: &Path) -> Result<(InteractionDataset, LooSplit)> {
    let ds = load_dataset(dir)?;
    let split_path = require_artifact(dir, SPLIT_FILE, "split")?;
    let split = LooSplit::read_manifest(&ds, &split_path)?;
    Ok((ds, split))
}

struct Precomputed {
    e_train: ExplainabilityMatrix,
    e_merged: ExplainabilityMatrix,
    e_eval: ExplainabilityMatrix,
    prop_train: PropensityModel,
    prop_merged: PropensityModel,
    nbrs_full: ItemNeighborhoods,
    eta: usize,
}

fn load_precomputed(dir: &Path) -> Result<Precomputed> {
    let manifest = KvRecord::read(&require_artifact(dir, PRECOMPUTE_MANIFEST, "precompute")?)?;
    let eta: usize = manifest
        .get("eta")
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| Error::InvalidConfig("bad eta in precompute manifest".into()))?;
    Ok(Precomputed {
        e_train: ExplainabilityMatrix::read(&require_artifact(dir, E_TRAIN, "precompute")?)?,
        e_merged: ExplainabilityMatrix::read(&require_artifact(dir, E_MERGED, "precompute")?)?,
        e_eval: ExplainabilityMatrix::read(&require_artifact(dir, E_EVAL, "precompute")?)?,
        prop_train: PropensityModel::read(&require_artifact(dir, PROP_TRAIN, "precompute")?)?,
        prop_merged: PropensityModel::read(&require_artifact(dir, PROP_MERGED, "precompute")?)?,
        nbrs_full: ItemNeighborhoods::read(&require_artifact(dir, NBRS_FULL, "precompute")?)?,
        eta,
    })
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Ingest {
            common,
            data,
            delimiter,
            threshold,
            min_interactions,
        } => cmd_ingest(common, data, delimiter, threshold, min_interactions),
        Command::Split {
            common,
            negatives,
            seed,
        } => cmd_split(common, negatives, seed),
        Command::Precompute { common, eta } => cmd_precompute(common, eta),
        Command::Tune {
            common,
            loss,
            configs,
            replicates,
            flags,
        } => cmd_tune(common, loss.0, configs, replicates, flags),
        Command::Train {
            common,
            loss,
            from_best,
            merged,
            epochs,
            flags,
        } => cmd_train(common, loss.0, from_best, merged, epochs, flags),
        Command::Evaluate {
            common,
            loss,
            k,
            replicates,
            testset,
            relevance_threshold,
            flags,
        } => cmd_evaluate(
            common,
            loss.into_iter().map(|l| l.0).collect(),
            k,
            replicates,
            testset,
            relevance_threshold,
            flags,
        ),
        Command::Explain {
            common,
            loss,
            user,
            item,
            k,
        } => cmd_explain(common, loss.0, user, item, k),
        Command::Sweep {
            common,
            eta,
            loss,
            k,
            flags,
        } => cmd_sweep(
            common,
            eta,
            loss.into_iter().map(|l| l.0).collect(),
            k,
            flags,
        ),
        Command::SparsityStudy {
            common,
            thresholds,
            eta,
        } => cmd_sparsity_study(common, thresholds, eta),
        Command::Oracle {
            common,
            users,
            items,
            eta,
            draws,
            seed,
            draw_counting,
        } => cmd_oracle(common, users, items, eta, draws, seed, draw_counting),
        Command::Pipeline {
            common,
            data,
            loss,
            replicates,
            flags,
        } => cmd_pipeline(
            common,
            data,
            loss.into_iter().map(|l| l.0).collect(),
            replicates,
            flags,
        ),
    }
}

fn cmd_ingest(
    common: CommonArgs,
    data: Option<PathBuf>,
    delimiter: Option<String>,
    threshold: Option<f64>,
    min_interactions: Option<usize>,
) -> Result<()> {
    let settings = Settings::load(&common)?;
    let data = match data.or_else(|| settings.file.get("data").map(PathBuf::from)) {
        Some(d) => d,
        None => match std::env::var(ENV_DATA_DIR) {
            Ok(dir) => Path::new(&dir).join("u.data"),
            Err(_) => {
                return Err(Error::InvalidConfig(format!(
                    "no --data given and {ENV_DATA_DIR} is unset"
                )))
            }
        },
    };
    let delimiter_raw = settings.get("delimiter", delimiter, "tab".to_string())?;
    let delimiter = parse_delimiter(&delimiter_raw)?;
    let threshold = settings.get("threshold", threshold, 0.0)?;
    let min_interactions = settings.get("min_interactions", min_interactions, 10)?;

    std::fs::create_dir_all(&common.out).map_err(|source| Error::Io {
        path: common.out.clone(),
        source,
    })?;

    let format = ColumnFormat {
        delimiter,
        ..ColumnFormat::default()
    };
    let (raw, warnings) = load_interactions(&data, &format)?;
    for w in &warnings {
        eprintln!("warning: {}:{}: {}", data.display(), w.line, w.message);
    }
    let ds = filter_min_interactions(&binarize_and_index(&raw, threshold), min_interactions);

    let mut stats = KvRecord::new();
    stats.push("users", ds.n_users());
    stats.push("items", ds.n_items());
    stats.push("interactions", ds.interaction_count());
    stats.push("sparsity", ds.sparsity());
    stats.push("rejected_lines", warnings.len());
    stats.write(&common.out.join(STATS))?;
    for (k, v) in stats.iter() {
        println!("{k}\t{v}");
    }

    let mut users = String::new();
    for u in 0..ds.n_users() as u32 {
        users.push_str(&format!("{u}\t{}\n", ds.raw_user_id(u)));
    }
    std::fs::write(common.out.join(USERS_TSV), users).map_err(|source| Error::Io {
        path: common.out.join(USERS_TSV),
        source,
    })?;
    let mut items = String::new();
    for i in 0..ds.n_items() as u32 {
        items.push_str(&format!("{i}\t{}\n", ds.raw_item_id(i)));
    }
    std::fs::write(common.out.join(ITEMS_TSV), items).map_err(|source| Error::Io {
        path: common.out.join(ITEMS_TSV),
        source,
    })?;

    let mut manifest = KvRecord::new();
    manifest.push("command", "ingest");
    manifest.push("data", data.display());
    manifest.push("delimiter", delimiter_raw);
    manifest.push("threshold", threshold);
    manifest.push("min_interactions", min_interactions);
    manifest.push("dataset_hash", dataset_hash(&ds));
    write_manifest(&common.out, INGEST_MANIFEST, &mut manifest)
}

fn cmd_split(common: CommonArgs, negatives: Option<usize>, seed: Option<u64>) -> Result<()> {
    let settings = Settings::load(&common)?;
    let negatives = settings.get("negatives", negatives, 100)?;
    let seed = settings.get("split_seed", seed, 42u64)?;
    let ds = load_dataset(&common.out)?;
    let split = crate::dataset::loo_split(&ds, negatives, seed)?;
    split.write_manifest(&common.out.join(SPLIT_FILE))?;
    println!(
        "split: {} users, {} eval negatives per holdout, seed {}",
        ds.n_users(),
        negatives,
        seed
    );
    let mut manifest = KvRecord::new();
    manifest.push("command", "split");
    manifest.push("negatives", negatives);
    manifest.push("seed", seed);
    manifest.push("dataset_hash", dataset_hash(&ds));
    write_manifest(&common.out, SPLIT_MANIFEST, &mut manifest)
}

fn cmd_precompute(common: CommonArgs, eta: Option<usize>) -> Result<()> {
    let settings = Settings::load(&common)?;
    let eta = settings.get("eta", eta, 20)?;
    let (_, split) = load_split(&common.out)?;

    let merged = split.merged_train();
    let full = split.full_dataset();

    let nbrs_train = build_neighborhoods(&split.train, eta);
    let nbrs_merged = build_neighborhoods(&merged, eta);
    let nbrs_full = build_neighborhoods(&full, eta);

    let e_train = build_explainability(&split.train, &nbrs_train);
    let e_merged = build_explainability(&merged, &nbrs_merged);
    let mut e_eval = build_explainability(&full, &nbrs_full);
    e_eval.source = crate::explainability::ExplainabilitySource::Full;

    let prop_train =
        PropensityModel::build(&split.train, &nbrs_train, NeighborhoodVariant::PaperSum)?;
    let prop_merged = PropensityModel::build(&merged, &nbrs_merged, NeighborhoodVariant::PaperSum)?;

    nbrs_train.write(&common.out.join(NBRS_TRAIN))?;
    nbrs_merged.write(&common.out.join(NBRS_MERGED))?;
    nbrs_full.write(&common.out.join(NBRS_FULL))?;
    e_train.write(&common.out.join(E_TRAIN))?;
    e_merged.write(&common.out.join(E_MERGED))?;
    e_eval.write(&common.out.join(E_EVAL))?;
    prop_train.write(&common.out.join(PROP_TRAIN))?;
    prop_merged.write(&common.out.join(PROP_MERGED))?;

    println!(
        "precompute: eta {}, train E entries {}, eval E entries {}, avg eval E {:.4}",
        eta,
        e_train.stored_entries(),
        e_eval.stored_entries(),
        average_explainability(&e_eval, &full)
    );

    let mut manifest = KvRecord::new();
    manifest.push("command", "precompute");
    manifest.push("eta", eta);
    manifest.push("avg_e_eval", average_explainability(&e_eval, &full));
    write_manifest(&common.out, PRECOMPUTE_MANIFEST, &mut manifest)
}

fn search_report(out: &SearchOutcome) -> Table {
    let mut table = Table::new(&[
        "rank", "K", "batch", "l2", "mean_NDCG@10", "mean_HR@10", "epochs",
    ]);
    let mut order: Vec<usize> = (0..out.points.len()).collect();
    order.sort_by(|&a, &b| {
        out.points[b]
            .mean_ndcg()
            .partial_cmp(&out.points[a].mean_ndcg())
            .unwrap()
    });
    for (rank, idx) in order.iter().enumerate() {
        let p = &out.points[*idx];
        let hr = p.replicate_hr.iter().sum::<f64>() / p.replicate_hr.len().max(1) as f64;
        table.row(vec![
            (rank + 1).to_string(),
            p.config.latent_dim.to_string(),
            p.config.batch_size.to_string(),
            p.config.l2.to_string(),
            format!("{:.4}", p.mean_ndcg()),
            format!("{hr:.4}"),
            p.recommended_epochs().to_string(),
        ]);
    }
    table
}

fn cmd_tune(
    common: CommonArgs,
    loss: LossKind,
    configs: Option<usize>,
    replicates: Option<usize>,
    flags: TrainFlags,
) -> Result<()> {
    let settings = Settings::load(&common)?;
    let n_configs = settings.get("configs", configs, 15)?;
    let replicates = settings.get("replicates_tune", replicates, 2)?;
    let (_, split) = load_split(&common.out)?;
    let pre = load_precomputed(&common.out)?;
    let base = settings.training_config(loss, pre.eta, &flags)?;

    let outcome = hyperparameter_search(
        &split,
        &base,
        n_configs,
        replicates,
        base.seed,
        loss.needs_explainability().then_some(&pre.e_train),
        loss.needs_propensity().then_some(&pre.prop_train),
    )?;
    if outcome.grid_exhausted {
        eprintln!(
            "warning: requested {n_configs} configurations but the grid only has {}",
            outcome.points.len()
        );
    }

    let table = search_report(&outcome);
    print!("{}", table.render());
    std::fs::write(
        common.out.join(format!("tune_{}.txt", loss.tag())),
        table.render(),
    )
    .map_err(|source| Error::Io {
        path: common.out.join(format!("tune_{}.txt", loss.tag())),
        source,
    })?;

    let best = outcome.best();
    let mut best_rec = KvRecord::new();
    best_rec.push("loss", loss.tag());
    best_rec.push("latent_dim", best.config.latent_dim);
    best_rec.push("batch_size", best.config.batch_size);
    best_rec.push("l2", best.config.l2);
    best_rec.push("eta", best.config.eta);
    best_rec.push("learning_rate", best.config.learning_rate);
    best_rec.push("epochs", best.recommended_epochs());
    best_rec.push("mean_val_ndcg", best.mean_ndcg());
    best_rec.push("weight_clip", base.weight_clip);
    best_rec.push("propensity_floor", base.propensity_floor);
    best_rec.write(&common.out.join(best_config_file(loss)))?;
    println!(
        "best {}: K={} batch={} l2={} val NDCG@10 {:.4}, retrain epochs {}",
        loss.tag(),
        best.config.latent_dim,
        best.config.batch_size,
        best.config.l2,
        best.mean_ndcg(),
        best.recommended_epochs()
    );

    let mut manifest = KvRecord::new();
    manifest.push("command", "tune");
    manifest.push("loss", loss.tag());
    manifest.push("configs", n_configs);
    manifest.push("replicates", replicates);
    manifest.push("search_seed", base.seed);
    manifest.push("learning_rate", base.learning_rate);
    manifest.push("max_epochs", base.max_epochs);
    manifest.push("patience", base.patience);
    write_manifest(&common.out, &format!("tune_{}.manifest", loss.tag()), &mut manifest)
}

/// The tuned configuration plus its merged-retrain epoch budget.
fn load_best_config(
    dir: &Path,
    loss: LossKind,
    base: &TrainingConfig,
) -> Result<(TrainingConfig, usize)> {
    let path = require_artifact(dir, &best_config_file(loss), "tune")?;
    let rec = KvRecord::read(&path)?;
    let parse = |key: &str| -> Result<f64> {
        rec.require(key, &path)?
            .parse()
            .map_err(|_| Error::InvalidConfig(format!("bad {key} in {}", path.display())))
    };
    let cfg = TrainingConfig {
        loss,
        latent_dim: parse("latent_dim")? as usize,
        batch_size: parse("batch_size")? as usize,
        l2: parse("l2")?,
        eta: parse("eta")? as usize,
        learning_rate: parse("learning_rate")?,
        ..base.clone()
    };
    Ok((cfg, parse("epochs")? as usize))
}

fn cmd_train(
    common: CommonArgs,
    loss: LossKind,
    from_best: bool,
    merged: bool,
    epochs: Option<usize>,
    flags: TrainFlags,
) -> Result<()> {
    let settings = Settings::load(&common)?;
    let (_, split) = load_split(&common.out)?;
    let pre = load_precomputed(&common.out)?;
    let base = settings.training_config(loss, pre.eta, &flags)?;

    let (cfg, tuned_epochs) = if from_best {
        let (cfg, epochs) = load_best_config(&common.out, loss, &base)?;
        (cfg, Some(epochs))
    } else {
        (base, None)
    };

    let (e, prop) = if merged || from_best {
        (&pre.e_merged, &pre.prop_merged)
    } else {
        (&pre.e_train, &pre.prop_train)
    };
    let e_opt = loss.needs_explainability().then_some(e);
    let prop_opt = loss.needs_propensity().then_some(prop);

    let (model, history) = if merged || from_best {
        let epochs = epochs.or(tuned_epochs).ok_or_else(|| {
            Error::InvalidConfig("merged retrain needs --epochs or --from-best".into())
        })?;
        training::train_merged(&split, &cfg, epochs, e_opt, prop_opt)?
    } else {
        training::train(&split, &cfg, e_opt, prop_opt)?
    };

    let model_path = common.out.join(model_file(loss));
    model.save(&model_path, cfg.seed, loss.tag())?;

    let mut hist = String::from("epoch\tmean_loss\tval_ndcg10\tval_hr10\n");
    for e in &history.epochs {
        hist.push_str(&format!(
            "{}\t{}\t{}\t{}\n",
            e.epoch,
            e.mean_loss,
            e.val_ndcg.map_or("-".into(), |v| v.to_string()),
            e.val_hr.map_or("-".into(), |v| v.to_string()),
        ));
    }
    std::fs::write(common.out.join(format!("history_{}.txt", loss.tag())), hist).map_err(
        |source| Error::Io {
            path: common.out.join(format!("history_{}.txt", loss.tag())),
            source,
        },
    )?;

    println!(
        "trained {} for {} epochs (best epoch {}), model at {}",
        loss.tag(),
        history.epochs.len(),
        history.best_epoch,
        model_path.display()
    );

    let ds = load_dataset(&common.out)?;
    let mut manifest = KvRecord::new();
    manifest.push("command", "train");
    manifest.push("loss", loss.tag());
    manifest.push("merged", merged || from_best);
    manifest.push("latent_dim", cfg.latent_dim);
    manifest.push("batch_size", cfg.batch_size);
    manifest.push("l2", cfg.l2);
    manifest.push("eta", cfg.eta);
    manifest.push("learning_rate", cfg.learning_rate);
    manifest.push("epochs_run", history.epochs.len());
    manifest.push("best_epoch", history.best_epoch);
    manifest.push("seed", cfg.seed);
    manifest.push("weight_clip", cfg.weight_clip);
    manifest.push("parallel", cfg.parallel);
    manifest.push("dataset_hash", dataset_hash(&ds));
    write_manifest(&common.out, &format!("train_{}.manifest", loss.tag()), &mut manifest)
}

fn metric_table(rows: &[(String, Metrics, Option<Metrics>)], k: usize) -> Table {
    let mut headers = vec!["model".to_string()];
    for m in METRIC_NAMES {
        headers.push(format!("{m}@{k}"));
    }
    let headers_ref: Vec<&str> = headers.iter().map(String::as_str).collect();
    let mut table = Table::new(&headers_ref);
    for (name, mean, std) in rows {
        let mut cells = vec![name.clone()];
        for (v, s) in mean.values().iter().zip(
            std.map(|s| s.values())
                .unwrap_or([f64::NAN; 7])
                .iter(),
        ) {
            if s.is_nan() {
                cells.push(format!("{v:.4}"));
            } else {
                cells.push(format!("{v:.4}±{s:.4}"));
            }
        }
        table.row(cells);
    }
    table
}

fn machine_rows(loss: LossKind, k: usize, summary: &ReplicateSummary) -> String {
    let mut out = String::new();
    for (rep, (metrics, seed)) in summary
        .reports
        .iter()
        .zip(&summary.replicate_seeds)
        .enumerate()
    {
        for (name, value) in METRIC_NAMES.iter().zip(metrics.values()) {
            out.push_str(&format!(
                "model={}\tmetric={}@{}\treplicate={}\tseed={}\tvalue={}\n",
                loss.tag(),
                name,
                k,
                rep,
                seed,
                value
            ));
        }
    }
    out
}

fn cmd_evaluate(
    common: CommonArgs,
    losses: Vec<LossKind>,
    k: Option<usize>,
    replicates: usize,
    testset: Option<PathBuf>,
    relevance_threshold: Option<f64>,
    flags: TrainFlags,
) -> Result<()> {
    let settings = Settings::load(&common)?;
    let k = settings.get("k_cut", k, 10)?;
    if losses.is_empty() {
        return Err(Error::InvalidConfig("evaluate needs --loss".into()));
    }
    let (_, split) = load_split(&common.out)?;
    let pre = load_precomputed(&common.out)?;
    let merged = split.merged_train();
    let vectors = ItemVectors::new(&merged);

    if let Some(testset_path) = testset {
        let ds = load_dataset(&common.out)?;
        let threshold = settings.get("relevance_threshold", relevance_threshold, 4.0)?;
        let ts = UnbiasedTestset::load(&testset_path, &ds)?;
        let mut table = Table::new(&["model", "NDCG@5", "MAP@5", "users", "skipped_users"]);
        for loss in &losses {
            let model_path = require_artifact(&common.out, &model_file(*loss), "train")?;
            let (model, _, _) = FactorModel::load(&model_path)?;
            let r = evaluation::evaluate_unbiased_testset(&model, &ts, 5, threshold);
            table.row(vec![
                loss.tag().to_string(),
                format!("{:.4}", r.ndcg),
                format!("{:.4}", r.map),
                r.evaluated_users.to_string(),
                r.no_relevant_users.to_string(),
            ]);
        }
        print!("{}", table.render());
        std::fs::write(common.out.join("eval_unbiased.txt"), table.render()).map_err(
            |source| Error::Io {
                path: common.out.join("eval_unbiased.txt"),
                source,
            },
        )?;
        return Ok(());
    }

    let ctx = EvalContext {
        split: &split,
        seen: &merged,
        e_eval: &pre.e_eval,
        prop: &pre.prop_merged,
        vectors: &vectors,
        k_cut: k,
        propensity_floor: flags
            .propensity_floor
            .unwrap_or(crate::propensity::DEFAULT_PROPENSITY_FLOOR),
    };

    let mut rows = Vec::new();
    let mut machine = String::new();
    for loss in &losses {
        if replicates == 0 {
            let model_path = require_artifact(&common.out, &model_file(*loss), "train")?;
            let (model, seed, _) = FactorModel::load(&model_path)?;
            let metrics = evaluate_full(&model, &ctx);
            for (name, value) in METRIC_NAMES.iter().zip(metrics.values()) {
                machine.push_str(&format!(
                    "model={}\tmetric={name}@{k}\treplicate=0\tseed={seed}\tvalue={value}\n",
                    loss.tag()
                ));
            }
            rows.push((loss.tag().to_string(), metrics, None));
        } else {
            let base = settings.training_config(*loss, pre.eta, &flags)?;
            let (cfg, epochs) = load_best_config(&common.out, *loss, &base)?;
            let summary = evaluation::run_replicates(
                &split,
                &cfg,
                replicates,
                epochs,
                loss.needs_explainability().then_some(&pre.e_merged),
                loss.needs_propensity().then_some(&pre.prop_merged),
                &ctx,
            )?;
            machine.push_str(&machine_rows(*loss, k, &summary));
            rows.push((loss.tag().to_string(), summary.mean, Some(summary.std)));
        }
    }

    let table = metric_table(&rows, k);
    print!("{}", table.render());
    let report_path = common.out.join("eval_report.txt");
    std::fs::write(&report_path, table.render()).map_err(|source| Error::Io {
        path: report_path.clone(),
        source,
    })?;
    std::fs::write(common.out.join("eval_rows.txt"), machine).map_err(|source| Error::Io {
        path: common.out.join("eval_rows.txt"),
        source,
    })?;

    let mut manifest = KvRecord::new();
    manifest.push("command", "evaluate");
    manifest.push(
        "losses",
        losses
            .iter()
            .map(|l| l.tag())
            .collect::<Vec<_>>()
            .join(","),
    );
    manifest.push("k_cut", k);
    manifest.push("replicates", replicates);
    write_manifest(&common.out, "eval.manifest", &mut manifest)
}

fn cmd_explain(
    common: CommonArgs,
    loss: LossKind,
    user: String,
    item: Option<String>,
    k: Option<usize>,
) -> Result<()> {
    let settings = Settings::load(&common)?;
    let k = settings.get("k_cut", k, 10)?;
    let ds = load_dataset(&common.out)?;
    let (_, split) = load_split(&common.out)?;
    let pre = load_precomputed(&common.out)?;
    let full = split.full_dataset();

    let u = ds.user_index_of(&user).ok_or_else(|| {
        Error::UnknownUser(format!(
            "{user} (see {} for the id map)",
            common.out.join(USERS_TSV).display()
        ))
    })?;

    let model_path = require_artifact(&common.out, &model_file(loss), "train")?;
    let (model, _, _) = FactorModel::load(&model_path)?;

    let items: Vec<u32> = match item {
        Some(raw) => vec![ds
            .item_index_of(&raw)
            .ok_or_else(|| Error::UnknownItem(raw.clone()))?],
        None => {
            let merged = split.merged_train();
            let lists = evaluation::top_k_lists(&model, &merged, k);
            lists[u as usize].items.clone()
        }
    };

    println!("user {user} (index {u}), model {}", loss.tag());
    for (rank, &i) in items.iter().enumerate() {
        let ex = explain_recommendation(u, i, &pre.nbrs_full, &full);
        println!(
            "{:>2}. item {} score {:.4} E {:.4}",
            rank + 1,
            ds.raw_item_id(i),
            model.score(u, i),
            ex.e_value
        );
        if ex.interacted_neighbors.is_empty() {
            println!("    no item-based explanation (user interacted with none of its neighbors)");
        } else {
            for (j, sim) in &ex.interacted_neighbors {
                println!(
                    "    because you liked {} (similarity {:.4})",
                    ds.raw_item_id(*j),
                    sim
                );
            }
        }
        // rendered E must agree with the persisted evaluation matrix
        debug_assert_eq!(ex.e_value, pre.e_eval.get(u, i));
    }
    Ok(())
}

fn cmd_sweep(
    common: CommonArgs,
    etas: Vec<usize>,
    losses: Vec<LossKind>,
    k: Option<usize>,
    flags: TrainFlags,
) -> Result<()> {
    let settings = Settings::load(&common)?;
    let k = settings.get("k_cut", k, 10)?;
    if etas.is_empty() || losses.is_empty() {
        return Err(Error::InvalidConfig("sweep needs --eta and --loss".into()));
    }
    let (_, split) = load_split(&common.out)?;
    let merged = split.merged_train();
    let full = split.full_dataset();
    let vectors = ItemVectors::new(&merged);

    let mut headers = vec!["eta".to_string(), "model".to_string()];
    for m in METRIC_NAMES {
        headers.push(format!("{m}@{k}"));
    }
    let headers_ref: Vec<&str> = headers.iter().map(String::as_str).collect();
    let mut table = Table::new(&headers_ref);

    for &eta in &etas {
        let nbrs_merged = build_neighborhoods(&merged, eta);
        let nbrs_full = build_neighborhoods(&full, eta);
        let e_merged = build_explainability(&merged, &nbrs_merged);
        let mut e_eval = build_explainability(&full, &nbrs_full);
        e_eval.source = crate::explainability::ExplainabilitySource::Full;
        let prop_merged =
            PropensityModel::build(&merged, &nbrs_merged, NeighborhoodVariant::PaperSum)?;
        let ctx = EvalContext {
            split: &split,
            seen: &merged,
            e_eval: &e_eval,
            prop: &prop_merged,
            vectors: &vectors,
            k_cut: k,
            propensity_floor: flags
                .propensity_floor
                .unwrap_or(crate::propensity::DEFAULT_PROPENSITY_FLOOR),
        };
        for &loss in &losses {
            let base = settings.training_config(loss, eta, &flags)?;
            let (mut cfg, epochs) = load_best_config(&common.out, loss, &base)?;
            cfg.eta = eta;
            cfg.seed = crate::seeds::derive(base.seed, (eta as u64) << 8 | losses.len() as u64);
            let (model, _) = training::train_merged(
                &split,
                &cfg,
                epochs,
                loss.needs_explainability().then_some(&e_merged),
                loss.needs_propensity().then_some(&prop_merged),
            )?;
            let metrics = evaluate_full(&model, &ctx);
            let mut cells = vec![eta.to_string(), loss.tag().to_string()];
            for v in metrics.values() {
                cells.push(format!("{v:.4}"));
            }
            table.row(cells);
        }
    }

    print!("{}", table.render());
    std::fs::write(common.out.join("sweep.txt"), table.render()).map_err(|source| Error::Io {
        path: common.out.join("sweep.txt"),
        source,
    })?;
    let mut manifest = KvRecord::new();
    manifest.push("command", "sweep");
    manifest.push(
        "etas",
        etas.iter().map(|e| e.to_string()).collect::<Vec<_>>().join(","),
    );
    write_manifest(&common.out, "sweep.manifest", &mut manifest)
}

fn cmd_sparsity_study(
    common: CommonArgs,
    thresholds: Vec<usize>,
    eta: Option<usize>,
) -> Result<()> {
    let settings = Settings::load(&common)?;
    let eta = settings.get("eta", eta, 20)?;
    let thresholds = if thresholds.is_empty() {
        vec![5, 10, 15, 20, 25, 30, 35, 40]
    } else {
        thresholds
    };
    let ds = load_dataset(&common.out)?;

    let mut table = Table::new(&[
        "min_item_interactions",
        "users",
        "items",
        "interactions",
        "sparsity",
        "avg_explainability",
    ]);
    for &t in &thresholds {
        let filtered = filter_min_item_interactions(&ds, t);
        if filtered.n_items() == 0 {
            eprintln!("warning: threshold {t} removes every item; skipped");
            continue;
        }
        let nbrs = build_neighborhoods(&filtered, eta);
        let e = build_explainability(&filtered, &nbrs);
        table.row(vec![
            t.to_string(),
            filtered.n_users().to_string(),
            filtered.n_items().to_string(),
            filtered.interaction_count().to_string(),
            format!("{:.6}", filtered.sparsity()),
            format!("{:.6}", average_explainability(&e, &filtered)),
        ]);
    }

    print!("{}", table.render());
    std::fs::write(common.out.join("sparsity_study.txt"), table.render()).map_err(|source| {
        Error::Io {
            path: common.out.join("sparsity_study.txt"),
            source,
        }
    })?;
    let mut manifest = KvRecord::new();
    manifest.push("command", "sparsity-study");
    manifest.push("eta", eta);
    manifest.push(
        "thresholds",
        thresholds
            .iter()
            .map(|t| t.to_string())
            .collect::<Vec<_>>()
            .join(","),
    );
    write_manifest(&common.out, "sparsity.manifest", &mut manifest)
}

fn cmd_oracle(
    common: CommonArgs,
    users: Option<usize>,
    items: Option<usize>,
    eta: Option<usize>,
    draws: Option<usize>,
    seed: Option<u64>,
    draw_counting: bool,
) -> Result<()> {
    let settings = Settings::load(&common)?;
    let users = settings.get("oracle_users", users, 6)?;
    let items = settings.get("oracle_items", items, 12)?;
    let eta = settings.get("oracle_eta", eta, 3)?;
    let draws = settings.get("oracle_draws", draws, 10_000)?;
    let seed = settings.get("oracle_seed", seed, 7u64)?;
    if draws < 1000 {
        return Err(Error::InvalidConfig(
            "the bias oracle needs at least 1000 draws".into(),
        ));
    }
    let mode = if draw_counting {
        ExplainabilityMode::DrawCounting
    } else {
        ExplainabilityMode::TruePopulation
    };

    let world = generate_world(users, items, eta, seed);
    let l_ideal = crate::oracle::ideal_ebpr_loss(&world);
    let analytic = puebpr_analytic_expectation(&world);

    let mut out = String::new();
    out.push_str(&format!(
        "world: users={users} items={items} eta={eta} seed={seed} draws={draws} mode={mode:?}\n"
    ));
    out.push_str(&format!(
        "theta blocks: {}\n",
        world
            .blocks
            .iter()
            .map(|b| format!("{:.4}", world.theta_item[b[0] as usize]))
            .collect::<Vec<_>>()
            .join(" ")
    ));
    out.push_str(&format!("ideal loss: {l_ideal}\n"));
    out.push_str(&format!("pUEBPR analytic expectation: {analytic}\n"));
    for kind in [OracleEstimator::PUebpr, OracleEstimator::Uebpr] {
        let m = measure_bias(&world, kind, draws, seed, mode)?;
        let verdict = match (kind, m.consistent_with_unbiased()) {
            (OracleEstimator::Uebpr, true) => "PASS (unbiased within 3 sigma)",
            (OracleEstimator::Uebpr, false) => "FAIL (bias detected)",
            (OracleEstimator::PUebpr, false) => "PASS (bias detected as claimed)",
            (OracleEstimator::PUebpr, true) => "FAIL (no detectable bias)",
        };
        out.push_str(&format!(
            "{}: mean={} stderr={} bias={} ({:.2} sigma) {}\n",
            kind.tag(),
            m.mean,
            m.std_error,
            m.bias,
            m.sigmas,
            verdict
        ));
    }
    print!("{out}");
    std::fs::create_dir_all(&common.out).map_err(|source| Error::Io {
        path: common.out.clone(),
        source,
    })?;
    std::fs::write(common.out.join("oracle_report.txt"), &out).map_err(|source| Error::Io {
        path: common.out.join("oracle_report.txt"),
        source,
    })?;
    let mut manifest = KvRecord::new();
    manifest.push("command", "oracle");
    manifest.push("users", users);
    manifest.push("items", items);
    manifest.push("eta", eta);
    manifest.push("draws", draws);
    manifest.push("seed", seed);
    manifest.push("mode", format!("{mode:?}"));
    write_manifest(&common.out, "oracle.manifest", &mut manifest)
}

fn cmd_pipeline(
    common: CommonArgs,
    data: Option<PathBuf>,
    losses: Vec<LossKind>,
    replicates: Option<usize>,
    flags: TrainFlags,
) -> Result<()> {
    let settings = Settings::load(&common)?;
    let losses = if losses.is_empty() {
        vec![LossKind::Bpr]
    } else {
        losses
    };
    let replicates = settings.get("replicates", replicates, 5)?;

    cmd_ingest(common.clone(), data, None, None, None)?;
    cmd_split(common.clone(), None, None)?;
    cmd_precompute(common.clone(), None)?;
    for &loss in &losses {
        cmd_tune(common.clone(), loss, None, None, flags.clone())?;
        cmd_train(common.clone(), loss, true, true, None, flags.clone())?;
    }
    cmd_evaluate(
        common,
        losses,
        None,
        replicates,
        None,
        None,
        flags,
    )
}
