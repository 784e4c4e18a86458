//! λ/β grid sweeps against the unweighted cross-entropy baseline.
//!
//! Every grid point is trained best-of-n on the same data. Points run on a
//! rayon pool of `jobs` threads; each point is a pure function of its inputs
//! and rows are sorted before rendering, so output bytes never depend on
//! scheduling.

use std::cmp::Ordering;
use std::fmt::Write as _;

use rayon::prelude::*;
use verdict_loss_core::train::train_best_of_n;
use verdict_loss_core::{
    class_balanced_weights, evaluate, mcnemar, select_best_of_n, Beta, ClassCounts, Dataset, LossKind,
    LossSpec, McNemarMethod, McNemarResult, TrainConfig,
};

use crate::error::{CliError, CliResult};
use crate::report::{p_value_cell, signed_points};
use verdict_loss_core::metrics::format_percent;

pub const DEFAULT_LAMBDAS: [f64; 6] = [0.03125, 0.0625, 0.125, 0.25, 0.5, 1.0];
pub const DEFAULT_BETAS: [f64; 4] = [0.0, 0.9999, 0.99999, 0.999999];

#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    pub kinds: Vec<LossKind>,
    pub lambdas: Vec<f64>,
    /// `0` means unweighted.
    pub betas: Vec<f64>,
}

impl Default for SweepGrid {
    fn default() -> Self {
        SweepGrid { kinds: LossKind::ALL.to_vec(), lambdas: DEFAULT_LAMBDAS.to_vec(), betas: DEFAULT_BETAS.to_vec() }
    }
}

/// One trained configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub kind: LossKind,
    /// Always 0 for cross-entropy.
    pub lambda: f64,
    pub beta: f64,
}

impl SweepPoint {
    pub const BASELINE: SweepPoint = SweepPoint { kind: LossKind::CrossEntropy, lambda: 0.0, beta: 0.0 };

    pub fn weighting(&self) -> bool {
        self.beta > 0.0
    }

    fn order(&self, other: &Self) -> Ordering {
        self.kind
            .cmp(&other.kind)
            .then(self.lambda.total_cmp(&other.lambda))
            .then(self.beta.total_cmp(&other.beta))
    }
}

fn dedup(values: &[f64], name: &str, warnings: &mut Vec<String>) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::new();
    for &v in values {
        if out.contains(&v) {
            warnings.push(format!("duplicate {name} {v} in grid ignored"));
        } else {
            out.push(v);
        }
    }
    out
}

impl SweepGrid {
    pub fn validate(&self) -> CliResult<()> {
        if self.kinds.is_empty() || self.lambdas.is_empty() || self.betas.is_empty() {
            return Err(CliError::Usage("sweep grid lists must not be empty".into()));
        }
        for &l in &self.lambdas {
            LossSpec::new(LossKind::OneVsAll, l)?;
        }
        for &b in &self.betas {
            Beta::new(b)?;
        }
        Ok(())
    }

    /// Sorted, duplicate-free points plus warnings for dropped duplicates.
    /// The unweighted CE baseline is always included.
    pub fn points(&self) -> CliResult<(Vec<SweepPoint>, Vec<String>)> {
        self.validate()?;
        let mut warnings = Vec::new();
        let lambdas = dedup(&self.lambdas, "lambda", &mut warnings);
        let betas = dedup(&self.betas, "beta", &mut warnings);
        let mut kinds = Vec::new();
        for &k in &self.kinds {
            if kinds.contains(&k) {
                warnings.push(format!("duplicate loss {} in grid ignored", k.as_str()));
            } else {
                kinds.push(k);
            }
        }
        let mut points = vec![SweepPoint::BASELINE];
        for &kind in &kinds {
            let ls: &[f64] = if kind == LossKind::CrossEntropy { &[0.0] } else { &lambdas };
            for &lambda in ls {
                for &beta in &betas {
                    let p = SweepPoint { kind, lambda, beta };
                    if !points.contains(&p) {
                        points.push(p);
                    }
                }
            }
        }
        points.sort_by(SweepPoint::order);
        Ok((points, warnings))
    }
}

/// Everything except the grid that shapes a sweep.
#[derive(Debug, Clone, Copy)]
pub struct SweepSettings {
    /// Loss field is ignored; epochs, learning rate, seed etc. apply to every
    /// point.
    pub base: TrainConfig,
    pub runs: usize,
    pub jobs: usize,
    /// Evidence cutoff; `None` skips FEVER scoring.
    pub fever_cutoff: Option<usize>,
}

#[derive(Debug, Clone)]
struct PointOutcome {
    point: SweepPoint,
    correct: Vec<bool>,
    label_correct: u64,
    fever_correct: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub point: SweepPoint,
    pub label_correct: u64,
    pub fever_correct: Option<u64>,
    pub total: u64,
    /// Correct-count differences against the baseline.
    pub delta_label: i64,
    pub delta_fever: Option<i64>,
    pub mcnemar: McNemarResult,
    /// Highest dev LA within its loss kind.
    pub best_of_kind: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub rows: Vec<ReportRow>,
    pub warnings: Vec<String>,
}

fn spec_for(point: &SweepPoint, counts: &ClassCounts) -> CliResult<LossSpec> {
    let spec = LossSpec::new(point.kind, point.lambda)?;
    Ok(if point.weighting() {
        spec.with_weights(Some(class_balanced_weights(counts, Beta::new(point.beta)?)))
    } else {
        spec
    })
}

fn run_point(train: &Dataset, dev: &Dataset, settings: &SweepSettings, point: SweepPoint) -> CliResult<PointOutcome> {
    let counts = ClassCounts::new(train.class_counts())?;
    let config = TrainConfig { loss: spec_for(&point, &counts)?, ..settings.base };
    let runs = train_best_of_n(&train.samples, &dev.samples, &config, settings.runs)?;
    let best = &runs[select_best_of_n(&runs).expect("at least one run")];
    let records: Vec<_> = dev.samples.iter().zip(&best.dev_predictions).map(|(s, &p)| s.to_prediction(p)).collect();
    let report = evaluate(&records, settings.fever_cutoff)?;
    Ok(PointOutcome {
        point,
        correct: records.iter().map(|r| r.label_correct()).collect(),
        label_correct: report.label_correct,
        fever_correct: report.fever_correct,
    })
}

pub fn run_sweep(train: &Dataset, dev: &Dataset, grid: &SweepGrid, settings: &SweepSettings) -> CliResult<SweepReport> {
    if settings.jobs == 0 {
        return Err(CliError::Usage("--jobs must be at least 1".into()));
    }
    if dev.is_empty() {
        return Err(CliError::Invalid("dev split is empty".into()));
    }
    let (points, warnings) = grid.points()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(settings.jobs)
        .build()
        .map_err(|e| CliError::Invalid(format!("cannot start worker pool: {e}")))?;
    let outcomes: Vec<PointOutcome> = pool.install(|| {
        points.par_iter().map(|&p| run_point(train, dev, settings, p)).collect::<CliResult<Vec<_>>>()
    })?;

    let baseline = outcomes.iter().find(|o| o.point == SweepPoint::BASELINE).expect("baseline is always in the grid");
    let total = dev.len() as u64;
    let mut rows: Vec<ReportRow> = outcomes
        .iter()
        .map(|o| {
            Ok(ReportRow {
                point: o.point,
                label_correct: o.label_correct,
                fever_correct: o.fever_correct,
                total,
                delta_label: o.label_correct as i64 - baseline.label_correct as i64,
                delta_fever: o.fever_correct.zip(baseline.fever_correct).map(|(a, b)| a as i64 - b as i64),
                mcnemar: mcnemar(&o.correct, &baseline.correct, McNemarMethod::Auto)?,
                best_of_kind: false,
            })
        })
        .collect::<CliResult<_>>()?;
    rows.sort_by(|a, b| a.point.order(&b.point));
    mark_best(&mut rows);
    Ok(SweepReport { rows, warnings })
}

/// Rows must be sorted; the first row with the maximal count wins, which
/// prefers smaller λ and then smaller β.
fn mark_best(rows: &mut [ReportRow]) {
    for kind in LossKind::ALL {
        let mut best: Option<usize> = None;
        for (i, r) in rows.iter().enumerate().filter(|(_, r)| r.point.kind == kind) {
            if best.is_none_or(|b| r.label_correct > rows[b].label_correct) {
                best = Some(i);
            }
        }
        if let Some(b) = best {
            rows[b].best_of_kind = true;
        }
    }
}

fn beta_cell(p: &SweepPoint) -> String {
    if p.weighting() { format!("yes ({})", p.beta) } else { "no".to_string() }
}

fn opt_percent(n: Option<u64>, total: u64) -> String {
    n.map(|n| format_percent(n, total)).unwrap_or_else(|| "-".into())
}

/// Aligned text table. `>` marks the best row of each loss kind.
pub fn render_table(report: &SweepReport) -> String {
    let mut lines = vec![[
        String::new(),
        "Loss".into(),
        "lambda".into(),
        "Weighting".into(),
        "LA".into(),
        "FS".into(),
        "dLA".into(),
        "dFS".into(),
        "McNemar p".into(),
    ]];
    for r in &report.rows {
        lines.push([
            if r.best_of_kind { ">".into() } else { String::new() },
            r.point.kind.display_name().into(),
            if r.point.kind == LossKind::CrossEntropy { "-".into() } else { r.point.lambda.to_string() },
            beta_cell(&r.point),
            format_percent(r.label_correct, r.total),
            opt_percent(r.fever_correct, r.total),
            signed_points(r.delta_label, r.total),
            r.delta_fever.map(|d| signed_points(d, r.total)).unwrap_or_else(|| "-".into()),
            p_value_cell(&r.mcnemar),
        ]);
    }
    let widths: Vec<usize> = (0..9).map(|c| lines.iter().map(|l| l[c].len()).max().unwrap_or(0)).collect();
    let mut s = String::new();
    for l in &lines {
        let mut line = String::new();
        for (c, cell) in l.iter().enumerate() {
            if c > 0 {
                line.push_str("  ");
            }
            if c <= 3 {
                let _ = write!(line, "{cell:<w$}", w = widths[c]);
            } else {
                let _ = write!(line, "{cell:>w$}", w = widths[c]);
            }
        }
        s.push_str(line.trim_end());
        s.push('\n');
    }
    s
}

/// Tuned-λ OvA against the fixed λ = 1 OvA, each at its best β. `None` when
/// the sweep has no OvA row with λ = 1.
pub fn render_ova_comparison(report: &SweepReport) -> Option<String> {
    let ova: Vec<&ReportRow> = report.rows.iter().filter(|r| r.point.kind == LossKind::OneVsAll).collect();
    let pick = |rows: &mut dyn Iterator<Item = &&ReportRow>| -> Option<ReportRow> {
        let mut best: Option<&ReportRow> = None;
        for r in rows {
            if best.is_none_or(|b| r.label_correct > b.label_correct) {
                best = Some(r);
            }
        }
        best.cloned()
    };
    let fixed = pick(&mut ova.iter().filter(|r| r.point.lambda == 1.0))?;
    let tuned = pick(&mut ova.iter())?;
    let mut s = String::from("OvA: tuned lambda vs lambda = 1\n");
    let rows = [(format!("OvA (tuned, lambda={})", tuned.point.lambda), &tuned), ("OvA (lambda=1)".to_string(), &fixed)];
    let w = rows.iter().map(|(n, _)| n.len()).max().unwrap_or(0);
    let bw = rows.iter().map(|(_, r)| beta_cell(&r.point).len()).max().unwrap_or(0).max("Weighting".len());
    let _ = writeln!(s, "{:<w$}  {:<bw$}  {:>6}  {:>6}", "Loss", "Weighting", "LA", "FS");
    for (name, r) in rows {
        let _ = writeln!(
            s,
            "{name:<w$}  {:<bw$}  {:>6}  {:>6}",
            beta_cell(&r.point),
            format_percent(r.label_correct, r.total),
            opt_percent(r.fever_correct, r.total)
        );
    }
    Some(s)
}

pub fn render_csv(report: &SweepReport) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "loss", "lambda", "weighting", "beta", "dev_la", "dev_fs", "delta_la", "delta_fs", "mcnemar_b", "mcnemar_c",
        "mcnemar_p", "best",
    ])
    .expect("in-memory write");
    for r in &report.rows {
        w.write_record([
            r.point.kind.as_str().to_string(),
            r.point.lambda.to_string(),
            r.point.weighting().to_string(),
            r.point.beta.to_string(),
            format_percent(r.label_correct, r.total),
            r.fever_correct.map(|n| format_percent(n, r.total)).unwrap_or_default(),
            signed_points(r.delta_label, r.total),
            r.delta_fever.map(|d| signed_points(d, r.total)).unwrap_or_default(),
            r.mcnemar.b.to_string(),
            r.mcnemar.c.to_string(),
            r.mcnemar.p_value.to_string(),
            r.best_of_kind.to_string(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii csv")
}
