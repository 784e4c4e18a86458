//! Mini-batch gradient descent for [`LinearModel`] and best-of-n selection.
//!
//! A run is fully determined by the datasets and the [`TrainConfig`]: the
//! initial parameters and every shuffle come from one ChaCha8 stream seeded
//! with `config.seed`. No momentum, no early stopping.

use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dataset::Sample;
use crate::error::{Error, Result};
use crate::label::{VerdictLabel, NUM_CLASSES};
use crate::loss::LossSpec;
use crate::model::LinearModel;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub loss: LossSpec,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub shuffle: bool,
    /// Rescale class weights so the mean per-sample weight on the training
    /// split is 1. Only the overall scale changes, not the class ratios.
    pub rescale_weights: bool,
}

impl TrainConfig {
    pub fn new(loss: LossSpec) -> Self {
        TrainConfig {
            loss,
            epochs: 30,
            batch_size: 32,
            learning_rate: 0.1,
            seed: 0,
            shuffle: true,
            rescale_weights: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::invalid("epochs must be at least 1"));
        }
        if self.batch_size == 0 {
            return Err(Error::invalid("batch size must be at least 1"));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::invalid("learning rate must be positive and finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    /// Mean training objective per epoch, accumulated over the epoch's batches
    /// before each step.
    pub epoch_losses: Vec<f64>,
    pub dev_label_accuracy: f64,
    /// How often each class was predicted on the dev split.
    pub dev_prediction_totals: [u64; NUM_CLASSES],
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainRun {
    pub model: LinearModel,
    pub report: TrainReport,
    /// Predictions on the dev split, in dev order.
    pub dev_predictions: Vec<VerdictLabel>,
}

fn check_split(name: &str, samples: &[Sample], dim: usize) -> Result<()> {
    if samples.is_empty() {
        return Err(Error::invalid(alloc::format!("{name} split is empty")));
    }
    for s in samples {
        if s.features.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: s.features.len() });
        }
    }
    Ok(())
}

/// Trains one model.
pub fn train(train: &[Sample], dev: &[Sample], config: &TrainConfig) -> Result<TrainRun> {
    config.validate()?;
    let dim = train.first().map(|s| s.features.len()).unwrap_or(0);
    check_split("training", train, dim)?;
    check_split("dev", dev, dim)?;

    let mut spec = config.loss;
    if let (Some(w), true) = (spec.weights().copied(), config.rescale_weights) {
        let mut counts = [0u64; NUM_CLASSES];
        for s in train {
            counts[s.gold.index()] += 1;
        }
        spec = spec.with_weights(Some(w.scaled_to_unit_mean(&counts)));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut model = LinearModel::random_init(dim, &mut rng)?;
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut epoch_losses = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        if config.shuffle {
            order.shuffle(&mut rng);
        }
        let mut total = 0.0;
        for (batch_index, chunk) in order.chunks(config.batch_size).enumerate() {
            let non_finite = || Error::NonFiniteLoss { epoch, batch: batch_index };
            let batch = chunk.iter().map(|&i| (train[i].features.as_slice(), train[i].gold.one_hot()));
            let (loss, grad) = model.gradient(&spec, batch).map_err(|e| match e {
                Error::InvalidInput(_) => non_finite(),
                other => other,
            })?;
            if !loss.value.is_finite() {
                return Err(non_finite());
            }
            total += loss.value * chunk.len() as f64;
            model.apply_step(&grad, config.learning_rate);
            if !model.is_finite() {
                return Err(non_finite());
            }
        }
        epoch_losses.push(total / train.len() as f64);
    }

    let dev_predictions = dev.iter().map(|s| model.predict(&s.features)).collect::<Result<Vec<_>>>()?;
    let mut totals = [0u64; NUM_CLASSES];
    let mut correct = 0u64;
    for (s, p) in dev.iter().zip(&dev_predictions) {
        totals[p.index()] += 1;
        if s.gold == *p {
            correct += 1;
        }
    }
    Ok(TrainRun {
        model,
        report: TrainReport {
            epoch_losses,
            dev_label_accuracy: correct as f64 / dev.len() as f64,
            dev_prediction_totals: totals,
            seed: config.seed,
        },
        dev_predictions,
    })
}

/// Seed of the `run`-th repetition of a best-of-n protocol.
pub fn run_seed(base: u64, run: usize) -> u64 {
    base.wrapping_add(run as u64)
}

/// Trains `runs` models with seeds `seed, seed + 1, ...`.
pub fn train_best_of_n(
    train_split: &[Sample],
    dev: &[Sample],
    config: &TrainConfig,
    runs: usize,
) -> Result<Vec<TrainRun>> {
    if runs == 0 {
        return Err(Error::invalid("number of runs must be at least 1"));
    }
    (0..runs)
        .map(|i| {
            let cfg = TrainConfig { seed: run_seed(config.seed, i), ..*config };
            train(train_split, dev, &cfg)
        })
        .collect()
}

/// Index of the run with the highest dev label accuracy; ties go to the
/// lowest index. `None` for an empty slice.
pub fn select_best_of_n(runs: &[TrainRun]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, run) in runs.iter().enumerate() {
        match best {
            Some(b) if run.report.dev_label_accuracy <= runs[b].report.dev_label_accuracy => {}
            _ => best = Some(i),
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn run_with_la(la: f64) -> TrainRun {
        TrainRun {
            model: LinearModel::zeros(1).unwrap(),
            report: TrainReport {
                epoch_losses: vec![],
                dev_label_accuracy: la,
                dev_prediction_totals: [0; 3],
                seed: 0,
            },
            dev_predictions: vec![],
        }
    }

    #[test]
    fn best_of_n_selection() {
        assert_eq!(select_best_of_n(&[]), None);
        assert_eq!(select_best_of_n(&[run_with_la(0.5)]), Some(0));
        let runs = [run_with_la(0.70), run_with_la(0.75), run_with_la(0.72)];
        assert_eq!(select_best_of_n(&runs), Some(1));
        assert_eq!(select_best_of_n(&[run_with_la(0.75), run_with_la(0.75)]), Some(0));
    }

    #[test]
    fn config_validation() {
        let base = TrainConfig::new(LossSpec::cross_entropy());
        assert!(base.validate().is_ok());
        assert!(TrainConfig { epochs: 0, ..base }.validate().is_err());
        assert!(TrainConfig { batch_size: 0, ..base }.validate().is_err());
        assert!(TrainConfig { learning_rate: 0.0, ..base }.validate().is_err());
        assert!(TrainConfig { learning_rate: f64::NAN, ..base }.validate().is_err());
    }

    #[test]
    fn divergence_names_the_batch() {
        let samples: Vec<Sample> = (0..8)
            .map(|i| {
                let gold = VerdictLabel::ALL[i % 3];
                Sample::new(i as u64, vec![1e300 * (i as f64 + 1.0), -1e300], gold)
            })
            .collect();
        let cfg = TrainConfig { learning_rate: 1e10, batch_size: 2, shuffle: false, ..TrainConfig::new(LossSpec::cross_entropy()) };
        match train(&samples, &samples, &cfg) {
            Err(Error::NonFiniteLoss { epoch: 0, .. }) => {}
            other => panic!("expected divergence, got {other:?}"),
        }
    }
}
