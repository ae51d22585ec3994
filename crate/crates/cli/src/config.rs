//! Declarative run description shared by every subcommand.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use plsk_core::harness::EvalLimits;
use plsk_core::neural::{AdamConfig, TrainConfig, TrainRegime};
use plsk_core::seed::derive_seed;
use plsk_core::{GridShape, KnowledgeLevel};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub n: usize,
    /// Root of every random stream in the run.
    pub seed: u64,
    pub pool_size: usize,
    /// Deconstructions per pool solution.
    pub passes: usize,
    /// Fraction of examples held out for evaluation; no split when absent.
    pub test_fraction: Option<f64>,
    pub train: TrainSection,
    pub eval: EvalSection,
    /// Output locations. Not part of the config hash.
    pub paths: PathSection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub epochs: usize,
    pub batch_size: usize,
    pub hidden: Vec<usize>,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub chunk_size: usize,
    pub grad_groups: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    pub levels: Vec<String>,
    /// Inclusive fill-level band for the summary mean.
    pub band: [usize; 2],
    /// Static-search node budget per completion check; 0 is unlimited.
    pub node_budget: u64,
    /// Settle budget overruns with the exact completability check.
    pub exact_fallback: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathSection {
    pub out_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            n: 10,
            seed: 1,
            pool_size: 10_000,
            passes: 1,
            test_fraction: None,
            train: TrainSection::default(),
            eval: EvalSection::default(),
            paths: PathSection::default(),
        }
    }
}

impl Default for TrainSection {
    fn default() -> Self {
        let t = TrainConfig::default();
        Self {
            epochs: t.epochs,
            batch_size: t.batch_size,
            hidden: t.hidden,
            learning_rate: t.adam.learning_rate,
            beta1: t.adam.beta1,
            beta2: t.adam.beta2,
            epsilon: t.adam.epsilon,
            chunk_size: t.chunk_size,
            grad_groups: t.grad_groups,
        }
    }
}

impl Default for EvalSection {
    fn default() -> Self {
        let limits = EvalLimits::default();
        Self {
            levels: vec!["none".into()],
            band: [
                plsk_core::harness::DEFAULT_BAND.0,
                plsk_core::harness::DEFAULT_BAND.1,
            ],
            node_budget: limits.node_limit.unwrap_or(0),
            exact_fallback: limits.exact_fallback,
        }
    }
}

/// Seeds of the individual pipeline stages, all derived from the root seed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StageSeeds {
    pub pool: u64,
    pub deconstruct: u64,
    pub split: u64,
    pub init: u64,
    pub shuffle: u64,
    pub eval: u64,
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        toml::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serializes")
    }

    pub fn shape(&self) -> CliResult<GridShape> {
        Ok(GridShape::new(self.n)?)
    }

    pub fn validate(&self) -> CliResult<()> {
        self.shape()?;
        if self.pool_size == 0 || self.passes == 0 {
            return Err(CliError::config("pool_size and passes must be positive"));
        }
        if let Some(f) = self.test_fraction {
            if !(f > 0.0 && f < 1.0) {
                return Err(CliError::config(format!("test_fraction {f} not in (0, 1)")));
            }
        }
        if self.train.epochs == 0 || self.train.batch_size == 0 {
            return Err(CliError::config("epochs and batch_size must be positive"));
        }
        if self.eval.band[0] > self.eval.band[1] {
            return Err(CliError::config("eval band is reversed"));
        }
        self.eval_levels()?;
        Ok(())
    }

    /// Hash of everything that affects results; output paths are excluded.
    pub fn config_hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.paths = PathSection::default();
        let digest = Sha256::digest(canonical.to_toml().as_bytes());
        hex::encode(&digest[..8])
    }

    pub fn seeds(&self) -> StageSeeds {
        let stage = |name: &str| derive_seed(self.seed, name, 0);
        StageSeeds {
            pool: stage("stage/pool"),
            deconstruct: stage("stage/deconstruct"),
            split: stage("stage/split"),
            init: stage("stage/init"),
            shuffle: stage("stage/shuffle"),
            eval: stage("stage/eval"),
        }
    }

    /// Every regime shares the initial weights and the batch order, so runs
    /// differ only in the loss.
    pub fn train_config(&self, regime: TrainRegime) -> TrainConfig {
        let seeds = self.seeds();
        let t = &self.train;
        TrainConfig {
            epochs: t.epochs,
            batch_size: t.batch_size,
            hidden: t.hidden.clone(),
            adam: AdamConfig {
                learning_rate: t.learning_rate,
                beta1: t.beta1,
                beta2: t.beta2,
                epsilon: t.epsilon,
            },
            chunk_size: t.chunk_size,
            grad_groups: t.grad_groups,
            init_seed: seeds.init,
            shuffle_seed: seeds.shuffle,
            ..TrainConfig::for_regime(regime)
        }
    }

    pub fn eval_levels(&self) -> CliResult<Vec<KnowledgeLevel>> {
        self.eval
            .levels
            .iter()
            .map(|s| s.parse().map_err(|_| CliError::config(format!("unknown eval level {s:?}"))))
            .collect()
    }

    pub fn eval_limits(&self) -> EvalLimits {
        EvalLimits {
            node_limit: (self.eval.node_budget > 0).then_some(self.eval.node_budget),
            exact_fallback: self.eval.exact_fallback,
        }
    }

    pub fn band(&self) -> (usize, usize) {
        (self.eval.band[0], self.eval.band[1])
    }

    pub fn out_dir(&self) -> PathBuf {
        self.paths.out_dir.clone().unwrap_or_else(|| PathBuf::from("."))
    }

    /// Flags that reproduce this configuration, paths excepted.
    pub fn to_args(&self) -> String {
        let t = &self.train;
        let e = &self.eval;
        let mut s = format!(
            "--n {} --seed {} --pool-size {} --passes {}",
            self.n, self.seed, self.pool_size, self.passes
        );
        if let Some(f) = self.test_fraction {
            let _ = write!(s, " --test-fraction {f}");
        }
        let hidden: Vec<String> = t.hidden.iter().map(ToString::to_string).collect();
        let _ = write!(
            s,
            " --epochs {} --batch-size {} --hidden {} --learning-rate {} --beta1 {} --beta2 {} --epsilon {} \
             --chunk-size {} --grad-groups {} --eval-level {} --band {}-{} --node-budget {} --exact-fallback {}",
            t.epochs,
            t.batch_size,
            hidden.join(","),
            t.learning_rate,
            t.beta1,
            t.beta2,
            t.epsilon,
            t.chunk_size,
            t.grad_groups,
            e.levels.join(","),
            e.band[0],
            e.band[1],
            e.node_budget,
            e.exact_fallback,
        );
        s
    }
}
