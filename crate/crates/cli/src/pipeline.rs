//! Pipeline stages driven by a [`RunConfig`], with their file outputs.
//!
//! Every writer embeds provenance: pool and dataset formats have no spare
//! field, so they get a `<file>.prov` sidecar; models carry it in their
//! trailer and CSV files in `#` comment lines.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use log::info;
use plsk_core::datagen::{read_dataset, read_pool, write_dataset, write_pool};
use plsk_core::harness::{evaluate_limited, EstimatorKind};
use plsk_core::neural::{read_model, train, write_model, EpochStats, Mlp, ModelMeta, NetworkEstimator, TrainRegime};
use plsk_core::{build_dataset, gen_pool, split, BuildStats, Dataset, FeasibilityReport, KnowledgeLevel, SolutionPool};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

/// Sidecar suffix for formats without a provenance slot.
pub const PROVENANCE_SUFFIX: &str = "prov";

/// `key=value` lines identifying the run and stage that produced a file.
pub fn provenance(cfg: &RunConfig, stage: &str, extra: &[(&str, String)]) -> Vec<(String, String)> {
    let mut lines = vec![
        ("tool".to_string(), format!("plsk {}", env!("CARGO_PKG_VERSION"))),
        ("stage".to_string(), stage.to_string()),
        ("config_hash".to_string(), cfg.config_hash()),
        ("root_seed".to_string(), cfg.seed.to_string()),
    ];
    lines.extend(extra.iter().map(|(k, v)| (k.to_string(), v.clone())));
    lines.push(("args".to_string(), format!("plsk {stage} {}", cfg.to_args())));
    lines
}

fn render(lines: &[(String, String)]) -> String {
    lines.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".");
    name.push(PROVENANCE_SUFFIX);
    PathBuf::from(name)
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    Ok(BufWriter::new(File::create(path).map_err(|e| CliError::io(path, e))?))
}

fn open(path: &Path) -> CliResult<BufReader<File>> {
    Ok(BufReader::new(File::open(path).map_err(|e| CliError::io(path, e))?))
}

fn finish(mut w: BufWriter<File>, path: &Path) -> CliResult<()> {
    w.flush().map_err(|e| CliError::io(path, e))
}

fn with_file<T>(path: &Path, result: plsk_core::Result<T>) -> CliResult<T> {
    result.map_err(|e| CliError::from(e).in_file(path))
}

fn write_sidecar(path: &Path, lines: &[(String, String)]) -> CliResult<()> {
    let side = sidecar_path(path);
    std::fs::write(&side, render(lines)).map_err(|e| CliError::io(&side, e))
}

pub fn gen_pool_stage(cfg: &RunConfig) -> CliResult<SolutionPool> {
    let seeds = cfg.seeds();
    info!("generating {} solutions of order {}", cfg.pool_size, cfg.n);
    Ok(gen_pool(cfg.shape()?, cfg.pool_size, seeds.pool)?)
}

pub fn save_pool(cfg: &RunConfig, pool: &SolutionPool, path: &Path) -> CliResult<()> {
    let mut w = create(path)?;
    with_file(path, write_pool(pool, &mut w))?;
    finish(w, path)?;
    let seeds = cfg.seeds();
    write_sidecar(
        path,
        &provenance(cfg, "gen-pool", &[("stage_seed", seeds.pool.to_string()), ("count", pool.len().to_string())]),
    )
}

pub fn load_pool(path: &Path) -> CliResult<SolutionPool> {
    with_file(path, read_pool(open(path)?))
}

/// A deduplicated dataset and, when a test fraction is set, its split.
pub struct BuiltData {
    pub full: Dataset,
    pub split: Option<(Dataset, Dataset)>,
    pub stats: BuildStats,
}

pub fn build_dataset_stage(cfg: &RunConfig, pool: &SolutionPool) -> CliResult<BuiltData> {
    if pool.shape().n() != cfg.n {
        return Err(CliError::config(format!(
            "pool has order {}, config says {}",
            pool.shape().n(),
            cfg.n
        )));
    }
    let seeds = cfg.seeds();
    let (full, stats) = build_dataset(pool, cfg.passes, seeds.deconstruct)?;
    info!("{} examples generated, {} after deduplication", stats.generated, stats.kept);
    let split = match cfg.test_fraction {
        Some(f) => Some(split(&full, f, seeds.split)?),
        None => None,
    };
    Ok(BuiltData { full, split, stats })
}

pub fn save_dataset(cfg: &RunConfig, data: &Dataset, role: &str, path: &Path) -> CliResult<()> {
    let mut w = create(path)?;
    with_file(path, write_dataset(data, &mut w))?;
    finish(w, path)?;
    let seeds = cfg.seeds();
    write_sidecar(
        path,
        &provenance(
            cfg,
            "build-dataset",
            &[
                ("role", role.to_string()),
                ("deconstruct_seed", seeds.deconstruct.to_string()),
                ("split_seed", seeds.split.to_string()),
                ("examples", data.len().to_string()),
            ],
        ),
    )
}

pub fn load_dataset(path: &Path) -> CliResult<Dataset> {
    with_file(path, read_dataset(open(path)?))
}

/// Trains one regime; `log` receives the per-epoch CSV.
pub fn train_stage(
    cfg: &RunConfig,
    regime: TrainRegime,
    train_set: &Dataset,
    mut log: Option<&mut dyn Write>,
) -> CliResult<Mlp<f32>> {
    if train_set.shape().n() != cfg.n {
        return Err(CliError::config(format!(
            "dataset has order {}, config says {}",
            train_set.shape().n(),
            cfg.n
        )));
    }
    let tc = cfg.train_config(regime);
    if let Some(w) = log.as_deref_mut() {
        let mut head = provenance(cfg, "train", &[("regime", regime.as_str().to_string())]);
        head.push(("lambda".into(), tc.lambda.to_string()));
        head.push(("knowledge_level".into(), tc.knowledge_level.to_string()));
        for (k, v) in head {
            writeln!(w, "# {k}={v}").map_err(|e| CliError::new(crate::error::Category::Io, e.to_string()))?;
        }
        writeln!(w, "epoch,examples,loss,crossentropy,sbr")
            .map_err(|e| CliError::new(crate::error::Category::Io, e.to_string()))?;
    }
    let mut log_err = None;
    let model = train::<f32>(train_set, &tc, |s: &EpochStats| {
        info!(
            "{regime} epoch {}/{}: loss {:.6} (crossentropy {:.6}, sbr {:.6})",
            s.epoch, tc.epochs, s.mean_loss, s.mean_crossentropy, s.mean_sbr
        );
        if let Some(w) = log.as_deref_mut() {
            let line = writeln!(
                w,
                "{},{},{},{},{}",
                s.epoch, s.examples, s.mean_loss, s.mean_crossentropy, s.mean_sbr
            );
            if let Err(e) = line {
                log_err.get_or_insert(e);
            }
        }
    })?;
    if let Some(e) = log_err {
        return Err(CliError::new(crate::error::Category::Io, format!("training log: {e}")));
    }
    Ok(model)
}

pub fn model_meta(cfg: &RunConfig, regime: TrainRegime) -> ModelMeta {
    let tc = cfg.train_config(regime);
    ModelMeta {
        n: cfg.n as u16,
        lambda: tc.lambda,
        level: tc.knowledge_level,
        epochs: tc.epochs as u32,
        batch_size: tc.batch_size as u32,
        init_seed: tc.init_seed,
        shuffle_seed: tc.shuffle_seed,
        provenance: render(&provenance(cfg, "train", &[("regime", regime.as_str().to_string())])),
    }
}

pub fn save_model(cfg: &RunConfig, regime: TrainRegime, model: &Mlp<f32>, path: &Path) -> CliResult<()> {
    let mut w = create(path)?;
    with_file(path, write_model(model, &model_meta(cfg, regime), &mut w))?;
    finish(w, path)
}

pub fn load_model(path: &Path) -> CliResult<(Mlp<f32>, ModelMeta)> {
    with_file(path, read_model(open(path)?))
}

/// Evaluates one estimator at one level, labelling the report.
pub fn evaluate_stage(
    cfg: &RunConfig,
    kind: &EstimatorKind<'_>,
    level: KnowledgeLevel,
    test_set: &Dataset,
) -> CliResult<FeasibilityReport> {
    if let EstimatorKind::Network { model, .. } = kind {
        let m = test_set.shape().m();
        if model.model().output_width() != m || model.model().input_width() != m {
            return Err(CliError::config(format!(
                "model scores {} pairs, test set has {m}",
                model.model().output_width()
            )));
        }
    }
    info!("evaluating {} at level {level} on {} examples", kind.name(), test_set.len());
    let report = evaluate_limited(test_set, level, kind, cfg.seeds().eval, cfg.eval_limits())?;
    let mut report = report.labelled(kind.name(), kind.training_level());
    report.meta.provenance = provenance(
        cfg,
        "evaluate",
        &[("test_examples", test_set.len().to_string())],
    );
    Ok(report)
}

pub fn save_report(report: &FeasibilityReport, path: &Path) -> CliResult<()> {
    let mut w = create(path)?;
    with_file(path, report.write_csv(&mut w))?;
    finish(w, path)
}

pub fn load_report(path: &Path) -> CliResult<FeasibilityReport> {
    with_file(path, FeasibilityReport::read_csv(open(path)?))
}

/// Conventional file names under an output directory.
pub mod names {
    use std::path::{Path, PathBuf};

    use plsk_core::neural::TrainRegime;
    use plsk_core::KnowledgeLevel;

    pub fn pool(dir: &Path) -> PathBuf {
        dir.join("pool.txt")
    }

    pub fn dataset(dir: &Path) -> PathBuf {
        dir.join("dataset.plsd")
    }

    pub fn train_set(dir: &Path) -> PathBuf {
        dir.join("train.plsd")
    }

    pub fn test_set(dir: &Path) -> PathBuf {
        dir.join("test.plsd")
    }

    pub fn model(dir: &Path, regime: TrainRegime) -> PathBuf {
        dir.join(format!("model-{regime}.plsw"))
    }

    pub fn train_log(dir: &Path, regime: TrainRegime) -> PathBuf {
        dir.join(format!("train-{regime}.csv"))
    }

    pub fn report(dir: &Path, estimator: &str, level: KnowledgeLevel) -> PathBuf {
        dir.join(format!("report-{estimator}-{level}.csv"))
    }
}

/// Loads a network estimator for `regime`, warning when the file says it was
/// trained differently.
pub fn load_estimator(path: &Path, regime: TrainRegime) -> CliResult<NetworkEstimator> {
    let (model, meta) = load_model(path)?;
    if meta.level != regime.level() || meta.lambda != regime.lambda() {
        log::warn!(
            "{} was trained with lambda {} at level {}, not as {regime}",
            path.display(),
            meta.lambda,
            meta.level
        );
    }
    Ok(NetworkEstimator::new(model))
}
