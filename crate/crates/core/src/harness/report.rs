//! Fill-level feasibility curves and their CSV form.

use std::io::{BufRead, Write};

use super::FeastestOutcome;
use crate::error::{Error, Result};
use crate::propagate::KnowledgeLevel;

/// Fill levels averaged by the summary statistic, inclusive.
pub const DEFAULT_BAND: (usize, usize) = (30, 70);

const HEADER: &str = "fill,tested,feasible,ratio";

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct FillBin {
    pub tested: u64,
    pub feasible: u64,
}

impl FillBin {
    pub fn ratio(&self) -> Option<f64> {
        (self.tested > 0).then(|| self.feasible as f64 / self.tested as f64)
    }
}

/// Outcomes other than a plain verdict. `no_candidate`, `assigned_cell` and
/// `node_limit` are also included in the tested counts as infeasible.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct OutcomeTally {
    pub no_candidate: u64,
    pub assigned_cell: u64,
    pub node_limit: u64,
    pub skipped_full: u64,
    /// Verdicts settled by the exact check after the node limit ran out.
    /// These are ordinary verdicts and are not counted as infeasible.
    pub exact_fallback: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReportMeta {
    pub estimator: String,
    pub training_level: Option<KnowledgeLevel>,
    pub eval_level: KnowledgeLevel,
    pub seed: u64,
    pub node_limit: Option<u64>,
    pub exact_fallback: bool,
    pub n: usize,
    /// Extra `key=value` lines written to the preamble in order.
    pub provenance: Vec<(String, String)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FeasibilityReport {
    pub meta: ReportMeta,
    /// One bin per fill level `0..n*n`.
    pub bins: Vec<FillBin>,
    pub tally: OutcomeTally,
}

impl FeasibilityReport {
    pub fn empty(meta: ReportMeta) -> Self {
        let bins = vec![FillBin::default(); meta.n * meta.n];
        Self {
            meta,
            bins,
            tally: OutcomeTally::default(),
        }
    }

    pub fn labelled(mut self, estimator: &str, training_level: Option<KnowledgeLevel>) -> Self {
        self.meta.estimator = estimator.to_string();
        self.meta.training_level = training_level;
        self
    }

    pub(crate) fn record(&mut self, fill: usize, outcome: FeastestOutcome) {
        let bin = &mut self.bins[fill];
        bin.tested += 1;
        match outcome {
            FeastestOutcome::Feasible => bin.feasible += 1,
            FeastestOutcome::Infeasible => {}
            FeastestOutcome::NoCandidate => self.tally.no_candidate += 1,
            FeastestOutcome::AssignedCell => self.tally.assigned_cell += 1,
            FeastestOutcome::NodeLimit => self.tally.node_limit += 1,
        }
    }

    pub fn tested(&self) -> u64 {
        self.bins.iter().map(|b| b.tested).sum()
    }

    pub fn feasible(&self) -> u64 {
        self.bins.iter().map(|b| b.feasible).sum()
    }

    pub fn ratio(&self, fill: usize) -> Option<f64> {
        self.bins.get(fill).and_then(FillBin::ratio)
    }

    /// Unweighted mean of the defined per-level ratios with fill in
    /// `lo..=hi`; `None` when no level in the band was tested.
    pub fn mean_ratio(&self, (lo, hi): (usize, usize)) -> Option<f64> {
        let ratios: Vec<f64> = self
            .bins
            .iter()
            .enumerate()
            .filter(|(k, _)| (lo..=hi).contains(k))
            .filter_map(|(_, b)| b.ratio())
            .collect();
        (!ratios.is_empty()).then(|| ratios.iter().sum::<f64>() / ratios.len() as f64)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let m = &self.meta;
        writeln!(w, "# estimator={}", m.estimator)?;
        writeln!(
            w,
            "# training_level={}",
            m.training_level.map_or("-", KnowledgeLevel::as_str)
        )?;
        writeln!(w, "# eval_level={}", m.eval_level)?;
        writeln!(w, "# seed={}", m.seed)?;
        writeln!(w, "# node_limit={}", m.node_limit.map_or("-".to_string(), |l| l.to_string()))?;
        writeln!(w, "# exact_fallback={}", m.exact_fallback)?;
        writeln!(w, "# n={}", m.n)?;
        writeln!(w, "# no_candidate={}", self.tally.no_candidate)?;
        writeln!(w, "# assigned_cell={}", self.tally.assigned_cell)?;
        writeln!(w, "# node_limit_hits={}", self.tally.node_limit)?;
        writeln!(w, "# skipped_full={}", self.tally.skipped_full)?;
        writeln!(w, "# exact_verdicts={}", self.tally.exact_fallback)?;
        for (k, v) in &m.provenance {
            writeln!(w, "# {k}={v}")?;
        }
        writeln!(w, "{HEADER}")?;
        for (fill, bin) in self.bins.iter().enumerate() {
            match bin.ratio() {
                Some(r) => writeln!(w, "{fill},{},{},{r:.6}", bin.tested, bin.feasible)?,
                None => writeln!(w, "{fill},{},{},", bin.tested, bin.feasible)?,
            }
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut meta = ReportMeta {
            estimator: String::new(),
            training_level: None,
            eval_level: KnowledgeLevel::None,
            seed: 0,
            node_limit: None,
            exact_fallback: false,
            n: 0,
            provenance: Vec::new(),
        };
        let mut tally = OutcomeTally::default();
        let mut bins = Vec::new();
        let mut seen_header = false;

        for (i, line) in r.lines().enumerate() {
            let line = line?;
            let lineno = i + 1;
            let err = |msg: String| Error::Parse { line: lineno, msg };
            let int = |s: &str| s.trim().parse::<u64>().map_err(|e| err(format!("{s:?}: {e}")));

            if let Some(rest) = line.strip_prefix('#') {
                let Some((key, value)) = rest.trim().split_once('=') else {
                    continue;
                };
                let value = value.trim();
                match key.trim() {
                    "estimator" => meta.estimator = value.to_string(),
                    "training_level" if value == "-" => meta.training_level = None,
                    "training_level" => meta.training_level = Some(value.parse()?),
                    "eval_level" => meta.eval_level = value.parse()?,
                    "seed" => meta.seed = int(value)?,
                    "node_limit" if value == "-" => meta.node_limit = None,
                    "node_limit" => meta.node_limit = Some(int(value)?),
                    "exact_fallback" => {
                        meta.exact_fallback = value
                            .parse()
                            .map_err(|_| err(format!("exact_fallback {value:?} is not a boolean")))?
                    }
                    "n" => meta.n = int(value)? as usize,
                    "no_candidate" => tally.no_candidate = int(value)?,
                    "assigned_cell" => tally.assigned_cell = int(value)?,
                    "node_limit_hits" => tally.node_limit = int(value)?,
                    "skipped_full" => tally.skipped_full = int(value)?,
                    "exact_verdicts" => tally.exact_fallback = int(value)?,
                    other => meta.provenance.push((other.to_string(), value.to_string())),
                }
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            if !seen_header {
                if line.trim() != HEADER {
                    return Err(err(format!("expected header {HEADER:?}")));
                }
                seen_header = true;
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 4 {
                return Err(err(format!("expected 4 fields, found {}", fields.len())));
            }
            let fill = int(fields[0])? as usize;
            if fill != bins.len() {
                return Err(err(format!("fill level {fill} out of sequence")));
            }
            let bin = FillBin {
                tested: int(fields[1])?,
                feasible: int(fields[2])?,
            };
            if bin.feasible > bin.tested {
                return Err(err("more feasible than tested".into()));
            }
            bins.push(bin);
        }
        if !seen_header {
            return Err(Error::Format("report has no header row".into()));
        }
        if meta.n * meta.n != bins.len() {
            return Err(Error::Format(format!(
                "{} fill levels for order {}",
                bins.len(),
                meta.n
            )));
        }
        Ok(Self { meta, bins, tally })
    }
}

/// One line of the regime comparison summary.
#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonRow {
    pub estimator: String,
    pub training_level: Option<KnowledgeLevel>,
    pub eval_level: KnowledgeLevel,
    pub band: (usize, usize),
    pub mean_ratio: Option<f64>,
    pub tested: u64,
}

impl ComparisonRow {
    pub fn from_report(report: &FeasibilityReport, band: (usize, usize)) -> Self {
        Self {
            estimator: report.meta.estimator.clone(),
            training_level: report.meta.training_level,
            eval_level: report.meta.eval_level,
            band,
            mean_ratio: report.mean_ratio(band),
            tested: report.tested(),
        }
    }

    pub const CSV_HEADER: &'static str = "estimator,eval_level,band_lo,band_hi,mean_ratio,tested";

    pub fn to_csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.estimator,
            self.eval_level,
            self.band.0,
            self.band.1,
            self.mean_ratio.map_or(String::new(), |r| format!("{r:.6}")),
            self.tested
        )
    }
}
