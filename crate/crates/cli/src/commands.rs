//! Argument parsing and subcommand dispatch.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use log::info;
use plsk_core::harness::{ComparisonRow, EstimatorKind};
use plsk_core::neural::{NetworkEstimator, TrainRegime};

use crate::config::RunConfig;
use crate::error::{Category, CliError, CliResult};
use crate::pipeline::{self, names};

#[derive(Debug, Parser)]
#[command(name = "plsk", version, about = "Partial Latin square completion with neural feasibility estimators")]
pub struct Cli {
    /// TOML run description; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Also write the effective configuration to this file.
    #[arg(long, global = true)]
    pub write_config: Option<PathBuf>,
    #[command(flatten)]
    pub overrides: Overrides,
    #[command(subcommand)]
    pub command: Command,
}

/// Flags mirroring [`RunConfig`] fields.
#[derive(Debug, Default, Args)]
pub struct Overrides {
    #[arg(long, global = true)]
    pub n: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub pool_size: Option<usize>,
    #[arg(long, global = true)]
    pub passes: Option<usize>,
    #[arg(long, global = true)]
    pub test_fraction: Option<f64>,
    #[arg(long, global = true)]
    pub epochs: Option<usize>,
    #[arg(long, global = true)]
    pub batch_size: Option<usize>,
    /// Hidden layer widths, comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    pub hidden: Option<Vec<usize>>,
    #[arg(long, global = true)]
    pub learning_rate: Option<f64>,
    #[arg(long, global = true)]
    pub beta1: Option<f64>,
    #[arg(long, global = true)]
    pub beta2: Option<f64>,
    #[arg(long, global = true)]
    pub epsilon: Option<f64>,
    #[arg(long, global = true)]
    pub chunk_size: Option<usize>,
    #[arg(long, global = true)]
    pub grad_groups: Option<usize>,
    /// Evaluation knowledge levels: none, rows, rowscols.
    #[arg(long, global = true, value_delimiter = ',')]
    pub eval_level: Option<Vec<String>>,
    /// Fill-level band for summaries, as `lo-hi`.
    #[arg(long, global = true, value_parser = parse_band)]
    pub band: Option<[usize; 2]>,
    /// Node budget of the static completion search; 0 is unlimited.
    #[arg(long, global = true)]
    pub node_budget: Option<u64>,
    #[arg(long, global = true)]
    pub exact_fallback: Option<bool>,
    /// Directory for outputs that are not given explicit paths.
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
}

fn parse_band(s: &str) -> Result<[usize; 2], String> {
    let (lo, hi) = s.split_once('-').ok_or_else(|| format!("expected lo-hi, got {s:?}"))?;
    let lo = lo.trim().parse().map_err(|e| format!("{lo:?}: {e}"))?;
    let hi = hi.trim().parse().map_err(|e| format!("{hi:?}: {e}"))?;
    Ok([lo, hi])
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a pool of distinct solutions.
    GenPool {
        /// Number of solutions (same as --pool-size).
        #[arg(long)]
        count: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Deconstruct a pool into a deduplicated dataset, optionally split.
    BuildDataset {
        #[arg(long)]
        pool: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        train_out: Option<PathBuf>,
        #[arg(long)]
        test_out: Option<PathBuf>,
    },
    /// Train a network under one regime.
    Train {
        /// agn, rows or full.
        #[arg(long)]
        regime: TrainRegime,
        /// Training set (defaults to the split's train file).
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Per-epoch loss CSV.
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Feasibility curves for estimators at evaluation knowledge levels.
    Evaluate {
        /// rnd, agn, rows or full; comma separated or repeated.
        #[arg(long, value_delimiter = ',', required = true)]
        estimator: Vec<String>,
        /// Model files, one per network estimator in the same order.
        #[arg(long)]
        model: Vec<PathBuf>,
        /// Test set (defaults to the split's test file).
        #[arg(long)]
        test: Option<PathBuf>,
        /// Output file; only valid for a single estimator and level.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Merge report CSVs into a comparison table.
    Report {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

impl Overrides {
    pub fn apply(&self, cfg: &mut RunConfig) {
        macro_rules! set {
            ($($field:ident => $($target:ident).+),* $(,)?) => {
                $(if let Some(v) = self.$field.clone() { cfg.$($target).+ = v; })*
            };
        }
        set! {
            n => n,
            seed => seed,
            pool_size => pool_size,
            passes => passes,
            epochs => train.epochs,
            batch_size => train.batch_size,
            hidden => train.hidden,
            learning_rate => train.learning_rate,
            beta1 => train.beta1,
            beta2 => train.beta2,
            epsilon => train.epsilon,
            chunk_size => train.chunk_size,
            grad_groups => train.grad_groups,
            eval_level => eval.levels,
            band => eval.band,
            node_budget => eval.node_budget,
            exact_fallback => eval.exact_fallback,
        }
        if let Some(f) = self.test_fraction {
            cfg.test_fraction = Some(f);
        }
        if let Some(dir) = &self.out_dir {
            cfg.paths.out_dir = Some(dir.clone());
        }
    }
}

impl Cli {
    /// File values first, then flags.
    pub fn effective_config(&self) -> CliResult<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        self.overrides.apply(&mut cfg);
        if let Command::GenPool { count: Some(c), .. } = &self.command {
            cfg.pool_size = *c;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

pub fn run(cli: Cli) -> CliResult<()> {
    if let Some(jobs) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build_global()
            .map_err(|e| CliError::config(format!("cannot size the thread pool: {e}")))?;
    }
    let cfg = cli.effective_config()?;
    if let Some(path) = &cli.write_config {
        std::fs::write(path, cfg.to_toml()).map_err(|e| CliError::io(path, e))?;
    }
    let dir = cfg.out_dir();
    let pick = |given: &Option<PathBuf>, default: PathBuf| given.clone().unwrap_or(default);

    match &cli.command {
        Command::GenPool { out, .. } => {
            let path = pick(out, names::pool(&dir));
            let pool = pipeline::gen_pool_stage(&cfg)?;
            pipeline::save_pool(&cfg, &pool, &path)?;
            info!("wrote {} solutions to {}", pool.len(), path.display());
        }
        Command::BuildDataset {
            pool,
            out,
            train_out,
            test_out,
        } => {
            let pool = pipeline::load_pool(&pick(pool, names::pool(&dir)))?;
            let built = pipeline::build_dataset_stage(&cfg, &pool)?;
            let path = pick(out, names::dataset(&dir));
            pipeline::save_dataset(&cfg, &built.full, "full", &path)?;
            info!("wrote {} examples to {}", built.full.len(), path.display());
            if let Some((train, test)) = &built.split {
                let train_path = pick(train_out, names::train_set(&dir));
                let test_path = pick(test_out, names::test_set(&dir));
                pipeline::save_dataset(&cfg, train, "train", &train_path)?;
                pipeline::save_dataset(&cfg, test, "test", &test_path)?;
                info!("split into {} train and {} test examples", train.len(), test.len());
            }
        }
        Command::Train {
            regime,
            dataset,
            out,
            log,
        } => {
            let data = pipeline::load_dataset(&pick(dataset, names::train_set(&dir)))?;
            let log_path = pick(log, names::train_log(&dir, *regime));
            let mut log_file = create_file(&log_path)?;
            let model = pipeline::train_stage(&cfg, *regime, &data, Some(&mut log_file))?;
            log_file.flush().map_err(|e| CliError::io(&log_path, e))?;
            let path = pick(out, names::model(&dir, *regime));
            pipeline::save_model(&cfg, *regime, &model, &path)?;
            info!("wrote model to {}", path.display());
        }
        Command::Evaluate {
            estimator,
            model,
            test,
            out,
        } => evaluate(&cfg, &dir, estimator, model, test.as_deref(), out.as_deref())?,
        Command::Report { inputs, out } => report(&cfg, inputs, out.as_deref())?,
    }
    Ok(())
}

fn create_file(path: &Path) -> CliResult<BufWriter<File>> {
    if let Some(parent) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
    }
    Ok(BufWriter::new(File::create(path).map_err(|e| CliError::io(path, e))?))
}

enum Choice {
    Uniform,
    Network(TrainRegime),
}

fn evaluate(
    cfg: &RunConfig,
    dir: &Path,
    estimators: &[String],
    models: &[PathBuf],
    test: Option<&Path>,
    out: Option<&Path>,
) -> CliResult<()> {
    let choices: Vec<Choice> = estimators
        .iter()
        .map(|name| match name.to_ascii_lowercase().as_str() {
            "rnd" | "uniform" => Ok(Choice::Uniform),
            other => other
                .parse()
                .map(Choice::Network)
                .map_err(|_| CliError::config(format!("unknown estimator {name:?}"))),
        })
        .collect::<CliResult<_>>()?;
    let networks = choices.iter().filter(|c| matches!(c, Choice::Network(_))).count();
    if !models.is_empty() && models.len() != networks {
        return Err(CliError::config(format!(
            "{} model files for {networks} network estimators",
            models.len()
        )));
    }
    let levels = cfg.eval_levels()?;
    if out.is_some() && choices.len() * levels.len() != 1 {
        return Err(CliError::config("--out needs exactly one estimator and one level"));
    }

    let test_set = pipeline::load_dataset(&test.map_or_else(|| names::test_set(dir), Path::to_path_buf))?;
    let mut model_files = models.iter();
    let mut loaded: Vec<(TrainRegime, NetworkEstimator)> = Vec::new();
    for choice in &choices {
        if let Choice::Network(regime) = choice {
            let path = model_files.next().cloned().unwrap_or_else(|| names::model(dir, *regime));
            if !path.exists() {
                return Err(CliError::config(format!(
                    "no model for {regime}: {} does not exist",
                    path.display()
                )));
            }
            loaded.push((*regime, pipeline::load_estimator(&path, *regime)?));
        }
    }

    let mut networks = loaded.iter();
    for choice in &choices {
        let kind = match choice {
            Choice::Uniform => EstimatorKind::Uniform,
            Choice::Network(_) => {
                let (regime, model) = networks.next().expect("one model per network estimator");
                EstimatorKind::Network { regime: *regime, model }
            }
        };
        for &level in &levels {
            let report = pipeline::evaluate_stage(cfg, &kind, level, &test_set)?;
            let path = out.map_or_else(|| names::report(dir, kind.name(), level), Path::to_path_buf);
            pipeline::save_report(&report, &path)?;
            let mean = report.mean_ratio(cfg.band());
            info!(
                "{} at {level}: mean ratio {} over fill {}-{}, wrote {}",
                kind.name(),
                mean.map_or("n/a".to_string(), |m| format!("{m:.4}")),
                cfg.eval.band[0],
                cfg.eval.band[1],
                path.display()
            );
        }
    }
    Ok(())
}

/// Summary rows for a set of reports, in input order.
pub fn comparison_table(reports: &[plsk_core::FeasibilityReport], band: (usize, usize)) -> String {
    let mut s = String::from(ComparisonRow::CSV_HEADER);
    s.push('\n');
    for r in reports {
        s.push_str(&ComparisonRow::from_report(r, band).to_csv_line());
        s.push('\n');
    }
    s
}

fn report(cfg: &RunConfig, inputs: &[PathBuf], out: Option<&Path>) -> CliResult<()> {
    let reports = inputs
        .iter()
        .map(|p| pipeline::load_report(p))
        .collect::<CliResult<Vec<_>>>()?;
    if let Some(r) = reports.iter().find(|r| r.meta.n != reports[0].meta.n) {
        return Err(CliError::config(format!(
            "reports mix orders {} and {}",
            reports[0].meta.n, r.meta.n
        )));
    }
    let table = comparison_table(&reports, cfg.band());
    match out {
        Some(path) => std::fs::write(path, table).map_err(|e| CliError::io(path, e))?,
        None => std::io::stdout()
            .write_all(table.as_bytes())
            .map_err(|e| CliError::new(Category::Io, e.to_string()))?,
    }
    Ok(())
}
