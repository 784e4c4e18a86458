//! Command-line surface. Exit codes: 0 success, 1 failed check, 2 usage or
//! validation error.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::json;
use verdict_loss_core::gradcheck::{run_gradcheck, GradCheckConfig};
use verdict_loss_core::synthetic::{DEFAULT_SCALE, DEFAULT_SEED};
use verdict_loss_core::{
    class_balanced_weights, evaluate, generate_synthetic, mcnemar, select_best_of_n, train_best_of_n, Beta,
    ClassCounts, Dataset, LossKind, LossSpec, McNemarMethod, PredictionRecord, Split, SyntheticConfig,
    TrainConfig, DEFAULT_EVIDENCE_CUTOFF,
};

use crate::checkpoint::{Checkpoint, TrainedWith};
use crate::error::{CliError, CliResult, EXIT_OK};
use crate::jsonl::{load_dataset, load_predictions, save_dataset, save_predictions, FieldPolicy};
use crate::report::{confusion_table, eval_csv, p_value_cell, score_lines};
use crate::sweep::{render_csv, render_ova_comparison, render_table, run_sweep, SweepGrid, SweepSettings, DEFAULT_BETAS, DEFAULT_LAMBDAS};

/// Beta used by `--weighting` when no beta is given.
pub const DEFAULT_BETA: f64 = 0.999999;

#[derive(Debug, Parser)]
#[command(name = "verdict-loss", version, about = "Verdict-prediction losses: training, evaluation, sweeps and checks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train best-of-n linear models and write a checkpoint.
    Train(TrainArgs),
    /// Score predictions: label accuracy, FEVER score, confusion matrix.
    Evaluate(EvaluateArgs),
    /// Train a lambda/beta grid and compare every point with the CE baseline.
    Sweep(SweepArgs),
    /// Compare analytic and finite-difference gradients.
    Gradcheck(GradcheckArgs),
    /// Paired McNemar test between two prediction files.
    Mcnemar(McnemarArgs),
    /// Write the synthetic train/dev splits as JSONL.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    /// Use generated data instead of files.
    #[arg(long, conflicts_with_all = ["dataset", "dev"])]
    pub synthetic: bool,
    /// Size of the synthetic data relative to the full FEVER counts.
    #[arg(long, default_value_t = DEFAULT_SCALE, requires = "synthetic")]
    pub scale: f64,
    /// Seed of the synthetic data generator.
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub data_seed: u64,
    /// Training split (dataset JSONL).
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Dev split (dataset JSONL).
    #[arg(long)]
    pub dev: Option<PathBuf>,
    /// Ignore unknown JSONL fields instead of rejecting them.
    #[arg(long)]
    pub lenient: bool,
}

#[derive(Debug, Clone, Args)]
pub struct LossArgs {
    #[arg(long, default_value = "ce")]
    pub loss: LossKind,
    /// Weight of the auxiliary term.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Class-balanced weighting.
    #[arg(long)]
    pub weighting: bool,
    /// Smoothing parameter of the class weights, in [0, 1).
    #[arg(long, conflicts_with = "beta_nines")]
    pub beta: Option<f64>,
    /// Beta written as a number of nines: 6 means 0.999999.
    #[arg(long)]
    pub beta_nines: Option<u32>,
}

#[derive(Debug, Clone, Args)]
pub struct OptimArgs {
    /// Base seed; run i of best-of-n uses seed + i.
    #[arg(long, env = "VERDICT_LOSS_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 30)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0.1)]
    pub lr: f64,
    #[arg(long, default_value_t = 32)]
    pub batch_size: usize,
    /// Best-of-n repetitions.
    #[arg(long, default_value_t = 3)]
    pub runs: usize,
    /// Use raw class weights instead of rescaling them to unit mean.
    #[arg(long)]
    pub raw_weights: bool,
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub loss: LossArgs,
    #[command(flatten)]
    pub optim: OptimArgs,
    /// Checkpoint path.
    #[arg(long, default_value = "checkpoint.json")]
    pub out: PathBuf,
    /// Training report (JSON) path.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Write dev predictions of the selected run (JSONL).
    #[arg(long)]
    pub predictions: Option<PathBuf>,
    /// Evidence cutoff for the FEVER score.
    #[arg(long, default_value_t = DEFAULT_EVIDENCE_CUTOFF)]
    pub k: usize,
}

#[derive(Debug, Clone, Args)]
pub struct EvaluateArgs {
    /// Prediction JSONL to score.
    #[arg(long, conflicts_with_all = ["checkpoint", "dataset", "synthetic"])]
    pub predictions: Option<PathBuf>,
    /// Checkpoint to run on --dataset or on the synthetic dev split.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long, requires = "checkpoint")]
    pub dataset: Option<PathBuf>,
    #[arg(long, requires = "checkpoint", conflicts_with = "dataset")]
    pub synthetic: bool,
    #[arg(long, default_value_t = DEFAULT_SCALE, requires = "synthetic")]
    pub scale: f64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub data_seed: u64,
    /// Also compute the FEVER score; needs evidence fields.
    #[arg(long)]
    pub fever_score: bool,
    #[arg(long, default_value_t = DEFAULT_EVIDENCE_CUTOFF)]
    pub k: usize,
    /// Write metrics as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long)]
    pub lenient: bool,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub optim: OptimArgs,
    /// Loss kinds to sweep (comma separated); CE is always included.
    #[arg(long, value_delimiter = ',', default_values_t = LossKind::ALL.map(|k| k.as_str().to_string()))]
    pub loss: Vec<String>,
    /// Lambda grid (comma separated).
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_LAMBDAS)]
    pub lambda: Vec<f64>,
    /// Beta grid (comma separated); 0 means unweighted.
    #[arg(long, value_delimiter = ',', conflicts_with = "beta_nines")]
    pub beta: Vec<f64>,
    /// Beta grid as numbers of nines (comma separated); 0 means unweighted.
    #[arg(long, value_delimiter = ',')]
    pub beta_nines: Vec<u32>,
    /// Worker threads.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Write the report rows as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_EVIDENCE_CUTOFF)]
    pub k: usize,
}

#[derive(Debug, Clone, Args)]
pub struct GradcheckArgs {
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    #[arg(long, env = "VERDICT_LOSS_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Negative control: flips the sign of one analytic component.
    #[arg(long, hide = true)]
    pub inject_sign_bug: bool,
}

#[derive(Debug, Clone, Args)]
pub struct McnemarArgs {
    /// Predictions of system A.
    pub a: PathBuf,
    /// Predictions of system B.
    pub b: PathBuf,
    #[arg(long)]
    pub lenient: bool,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = DEFAULT_SCALE)]
    pub scale: f64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub data_seed: u64,
    #[arg(long)]
    pub train_out: PathBuf,
    #[arg(long)]
    pub dev_out: PathBuf,
}

/// `"0." + "9" * n`, parsed as a decimal; 0 nines is 0.
pub fn beta_from_nines(n: u32) -> CliResult<f64> {
    if n == 0 {
        return Ok(0.0);
    }
    let text = format!("0.{}", "9".repeat(n as usize));
    let beta: f64 = text.parse().expect("decimal literal");
    Beta::new(beta).map_err(|_| CliError::Usage(format!("--beta-nines {n} rounds to 1; use at most 15 nines")))?;
    Ok(beta)
}

fn warn(msg: impl std::fmt::Display) {
    eprintln!("warning: {msg}");
}

fn policy(lenient: bool) -> FieldPolicy {
    if lenient { FieldPolicy::Lenient } else { FieldPolicy::Strict }
}

fn synthetic(scale: f64, seed: u64) -> CliResult<(Dataset, Dataset)> {
    let config = SyntheticConfig { seed, ..SyntheticConfig::at_scale(scale)? };
    Ok(generate_synthetic(&config)?)
}

fn load_splits(data: &DataArgs) -> CliResult<(Dataset, Dataset)> {
    if data.synthetic {
        return synthetic(data.scale, data.data_seed);
    }
    match (&data.dataset, &data.dev) {
        (Some(train), Some(dev)) => {
            let train = load_dataset(train, Split::Train, policy(data.lenient))?;
            let dev = load_dataset(dev, Split::Dev, policy(data.lenient))?;
            if train.is_empty() || dev.is_empty() {
                return Err(CliError::Invalid("training and dev splits must not be empty".into()));
            }
            if train.dim() != dev.dim() {
                return Err(CliError::Invalid(format!(
                    "feature dimensions differ: train {:?}, dev {:?}",
                    train.dim(),
                    dev.dim()
                )));
            }
            Ok((train, dev))
        }
        _ => Err(CliError::Usage("give --synthetic, or both --dataset and --dev".into())),
    }
}

fn base_config(optim: &OptimArgs, loss: LossSpec) -> CliResult<TrainConfig> {
    let config = TrainConfig {
        loss,
        epochs: optim.epochs,
        batch_size: optim.batch_size,
        learning_rate: optim.lr,
        seed: optim.seed,
        shuffle: true,
        rescale_weights: !optim.raw_weights,
    };
    config.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    if optim.runs == 0 {
        return Err(CliError::Usage("--runs must be at least 1".into()));
    }
    Ok(config)
}

fn check_cutoff(k: usize) -> CliResult<()> {
    if k == 0 {
        return Err(CliError::Usage("--k must be at least 1".into()));
    }
    Ok(())
}

fn resolve_beta(loss: &LossArgs) -> CliResult<Option<f64>> {
    let beta = match (loss.beta, loss.beta_nines) {
        (Some(b), _) => Some(b),
        (None, Some(n)) => Some(beta_from_nines(n)?),
        (None, None) => None,
    };
    match (loss.weighting, beta) {
        (false, Some(_)) => Err(CliError::Usage("--beta/--beta-nines need --weighting".into())),
        (false, None) => Ok(None),
        (true, b) => {
            let b = b.unwrap_or(DEFAULT_BETA);
            Beta::new(b).map_err(|e| CliError::Usage(e.to_string()))?;
            Ok(Some(b))
        }
    }
}

fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

pub fn cmd_train(args: &TrainArgs) -> CliResult<()> {
    check_cutoff(args.k)?;
    let lambda = match (args.loss.loss, args.loss.lambda) {
        (LossKind::CrossEntropy, Some(l)) => {
            warn(format!("--lambda {l} is ignored for the CE loss"));
            0.0
        }
        (_, Some(l)) => l,
        (_, None) => 1.0,
    };
    let spec = LossSpec::new(args.loss.loss, lambda).map_err(|e| CliError::Usage(e.to_string()))?;
    let beta = resolve_beta(&args.loss)?;
    base_config(&args.optim, spec)?;
    let (train, dev) = load_splits(&args.data)?;

    let raw_weights = match beta {
        Some(b) => Some(class_balanced_weights(
            &ClassCounts::new(train.class_counts()).map_err(|_| CliError::Invalid("class weighting needs every class in the training split".into()))?,
            Beta::new(b)?,
        )),
        None => None,
    };
    let config = base_config(&args.optim, spec.with_weights(raw_weights))?;
    let runs = train_best_of_n(&train.samples, &dev.samples, &config, args.optim.runs)?;
    let best = select_best_of_n(&runs).expect("runs >= 1");
    let run = &runs[best];

    let records: Vec<PredictionRecord> =
        dev.samples.iter().zip(&run.dev_predictions).map(|(s, &p)| s.to_prediction(p)).collect();
    let cutoff = dev.has_evidence().then_some(args.k);
    let report = evaluate(&records, cutoff)?;

    let ckpt = Checkpoint::new(
        &run.model,
        TrainedWith {
            loss: args.loss.loss.as_str().to_string(),
            lambda,
            weighting: beta.is_some(),
            beta: beta.unwrap_or(0.0),
            class_weights: raw_weights.map(|w| *w.as_array()),
            rescale_weights: config.rescale_weights,
            epochs: config.epochs,
            batch_size: config.batch_size,
            learning_rate: config.learning_rate,
            base_seed: config.seed,
            runs: args.optim.runs,
            selected_run: best,
            selected_seed: run.report.seed,
            dev_label_accuracy: run.report.dev_label_accuracy,
        },
    );
    ckpt.save(&args.out)?;
    if let Some(path) = &args.report {
        let body = json!({
            "selected_run": best,
            "runs": runs.iter().map(|r| json!({
                "seed": r.report.seed,
                "dev_label_accuracy": r.report.dev_label_accuracy,
                "dev_prediction_totals": r.report.dev_prediction_totals,
                "epoch_losses": r.report.epoch_losses,
            })).collect::<Vec<_>>(),
        });
        write_file(path, &format!("{}\n", serde_json::to_string_pretty(&body).expect("report serializes")))?;
    }
    if let Some(path) = &args.predictions {
        save_predictions(&records, path)?;
    }

    for (i, r) in runs.iter().enumerate() {
        let mark = if i == best { "*" } else { " " };
        println!(
            "{mark} run {i} seed {}: dev LA {}",
            r.report.seed,
            verdict_loss_core::metrics::format_ratio_percent(r.report.dev_label_accuracy)
        );
    }
    print!("{}", score_lines(&report));
    println!("checkpoint written to {}", args.out.display());
    Ok(())
}

fn dataset_for_evaluation(args: &EvaluateArgs) -> CliResult<Dataset> {
    if args.synthetic {
        return Ok(synthetic(args.scale, args.data_seed)?.1);
    }
    match &args.dataset {
        Some(path) => load_dataset(path, Split::Dev, policy(args.lenient)),
        None => Err(CliError::Usage("--checkpoint needs --dataset or --synthetic".into())),
    }
}

pub fn cmd_evaluate(args: &EvaluateArgs) -> CliResult<()> {
    check_cutoff(args.k)?;
    let records = match (&args.predictions, &args.checkpoint) {
        (Some(path), _) => load_predictions(path, policy(args.lenient))?,
        (None, Some(ckpt)) => {
            let model = Checkpoint::load(ckpt)?.model()?;
            let data = dataset_for_evaluation(args)?;
            data.samples
                .iter()
                .map(|s| Ok(s.to_prediction(model.predict(&s.features)?)))
                .collect::<CliResult<Vec<_>>>()?
        }
        (None, None) => return Err(CliError::Usage("give --predictions, or --checkpoint with data".into())),
    };
    if records.is_empty() {
        return Err(CliError::Invalid("no predictions to evaluate".into()));
    }
    let report = evaluate(&records, args.fever_score.then_some(args.k))
        .map_err(|e| CliError::Invalid(format!("cannot score predictions: {e}")))?;
    print!("{}", confusion_table(&report.confusion));
    println!();
    print!("{}", score_lines(&report));
    if let Some(path) = &args.csv {
        write_file(path, &eval_csv(&report))?;
    }
    Ok(())
}

fn sweep_kinds(names: &[String]) -> CliResult<Vec<LossKind>> {
    names
        .iter()
        .map(|n| n.parse::<LossKind>().map_err(|e| CliError::Usage(e.to_string())))
        .collect()
}

pub fn cmd_sweep(args: &SweepArgs) -> CliResult<()> {
    check_cutoff(args.k)?;
    let betas = if !args.beta_nines.is_empty() {
        args.beta_nines.iter().map(|&n| beta_from_nines(n)).collect::<CliResult<_>>()?
    } else if !args.beta.is_empty() {
        args.beta.clone()
    } else {
        DEFAULT_BETAS.to_vec()
    };
    let grid = SweepGrid { kinds: sweep_kinds(&args.loss)?, lambdas: args.lambda.clone(), betas };
    grid.points().map_err(|e| CliError::Usage(e.to_string()))?;
    if args.jobs == 0 {
        return Err(CliError::Usage("--jobs must be at least 1".into()));
    }
    let settings = SweepSettings {
        base: base_config(&args.optim, LossSpec::cross_entropy())?,
        runs: args.optim.runs,
        jobs: args.jobs,
        fever_cutoff: None,
    };
    let (train, dev) = load_splits(&args.data)?;
    let settings = SweepSettings { fever_cutoff: dev.has_evidence().then_some(args.k), ..settings };
    let report = run_sweep(&train, &dev, &grid, &settings)?;
    for w in &report.warnings {
        warn(w);
    }
    print!("{}", render_table(&report));
    if let Some(cmp) = render_ova_comparison(&report) {
        println!();
        print!("{cmp}");
    }
    if let Some(path) = &args.csv {
        write_file(path, &render_csv(&report))?;
    }
    Ok(())
}

pub fn cmd_gradcheck(args: &GradcheckArgs) -> CliResult<()> {
    if args.samples == 0 {
        return Err(CliError::Usage("--samples must be at least 1".into()));
    }
    let config = GradCheckConfig {
        samples: args.samples,
        seed: args.seed,
        inject_sign_bug: args.inject_sign_bug,
        ..GradCheckConfig::default()
    };
    let report = run_gradcheck(&config);
    println!("{:<5} {:>6} {:>8} {:>14} {:>14}", "loss", "cases", "failures", "max rel err", "max abs err");
    for (kind, s) in &report.per_kind {
        println!(
            "{:<5} {:>6} {:>8} {:>14.3e} {:>14.3e}",
            kind.display_name(),
            s.cases,
            s.failures,
            s.max_rel_err,
            s.max_abs_err_small
        );
    }
    let describe = |c: &verdict_loss_core::gradcheck::GradCheckCase| {
        format!(
            "kind={} lambda={} y={} z={:?} analytic={:?} numeric={:?}",
            c.spec.kind().display_name(),
            c.spec.lambda(),
            c.gold.symbol(),
            c.logits,
            c.analytic,
            c.numeric
        )
    };
    if let Some(worst) = &report.worst {
        println!("worst case: {}", describe(worst));
    }
    let tol = format!("rel {:e} (abs {:e} below {:e})", config.rel_tol, config.abs_tol, config.small_magnitude);
    if report.passed() {
        println!("all {} cases within {tol}", args.samples);
        Ok(())
    } else {
        let failures: usize = report.per_kind.iter().map(|(_, s)| s.failures).sum();
        let worst = report.worst.as_ref().map(describe).unwrap_or_default();
        Err(CliError::CheckFailed(format!(
            "gradient check failed: {failures} of {} cases outside {tol}; worst {worst}",
            args.samples
        )))
    }
}

pub fn cmd_mcnemar(args: &McnemarArgs) -> CliResult<()> {
    let a = load_predictions(&args.a, policy(args.lenient))?;
    let b = load_predictions(&args.b, policy(args.lenient))?;
    let a: BTreeMap<u64, PredictionRecord> = a.into_iter().map(|r| (r.claim_id, r)).collect();
    let b: BTreeMap<u64, PredictionRecord> = b.into_iter().map(|r| (r.claim_id, r)).collect();
    let ids_a: BTreeSet<u64> = a.keys().copied().collect();
    let ids_b: BTreeSet<u64> = b.keys().copied().collect();
    let diff: Vec<u64> = ids_a.symmetric_difference(&ids_b).copied().collect();
    if !diff.is_empty() {
        let shown: Vec<String> = diff.iter().take(10).map(u64::to_string).collect();
        return Err(CliError::Invalid(format!(
            "claim sets differ in {} ids (first {}: {})",
            diff.len(),
            shown.len(),
            shown.join(", ")
        )));
    }
    for (id, ra) in &a {
        if ra.gold != b[id].gold {
            return Err(CliError::Invalid(format!("claim {id}: gold labels differ between the files")));
        }
    }
    let ca: Vec<bool> = a.values().map(PredictionRecord::label_correct).collect();
    let cb: Vec<bool> = b.values().map(PredictionRecord::label_correct).collect();
    let r = mcnemar(&ca, &cb, McNemarMethod::Auto)?;
    println!("claims     {}", ca.len());
    println!("b          {}  (A correct, B wrong)", r.b);
    println!("c          {}  (A wrong, B correct)", r.c);
    println!("method     {}", r.method.as_str());
    match r.statistic {
        Some(s) => println!("statistic  {s:.4}"),
        None => println!("statistic  -"),
    }
    println!("p-value    {}  ({})", p_value_cell(&r), r.p_value);
    Ok(())
}

pub fn cmd_synth(args: &SynthArgs) -> CliResult<()> {
    let (train, dev) = synthetic(args.scale, args.data_seed)?;
    save_dataset(&train, &args.train_out)?;
    save_dataset(&dev, &args.dev_out)?;
    println!("train: {} samples {:?}", train.len(), train.class_counts());
    println!("dev:   {} samples {:?}", dev.len(), dev.class_counts());
    Ok(())
}

pub fn execute(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Train(a) => cmd_train(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Gradcheck(a) => cmd_gradcheck(a),
        Command::Mcnemar(a) => cmd_mcnemar(a),
        Command::Synth(a) => cmd_synth(a),
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let code = match execute(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    let _ = std::io::stdout().flush();
    code
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nines() {
        assert_eq!(beta_from_nines(0).unwrap(), 0.0);
        assert_eq!(beta_from_nines(4).unwrap(), 0.9999);
        assert_eq!(beta_from_nines(6).unwrap(), 0.999999);
        assert!(beta_from_nines(17).is_err());
    }

    #[test]
    fn beta_requires_weighting() {
        let base = LossArgs { loss: LossKind::Sr, lambda: None, weighting: false, beta: Some(0.9), beta_nines: None };
        assert!(matches!(resolve_beta(&base), Err(CliError::Usage(_))));
        let w = LossArgs { weighting: true, beta: None, ..base.clone() };
        assert_eq!(resolve_beta(&w).unwrap(), Some(DEFAULT_BETA));
        let w = LossArgs { weighting: true, beta: Some(1.0), ..base };
        assert!(resolve_beta(&w).is_err());
    }

    #[test]
    fn clap_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
