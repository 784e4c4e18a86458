//! Objectives and evaluation for three-way verdict prediction
//! (SUPPORTS / REFUTES / NOT ENOUGH INFO).
//!
//! The crate is `no_std` and only needs `alloc`. It contains:
//!
//! * [`loss`]: cross-entropy, one-versus-all (OvA), SRN and SR objectives with
//!   exact gradients with respect to the pre-softmax logits, optionally
//!   class-weighted.
//! * [`weights`]: class-balanced weights from per-class sample counts.
//! * [`metrics`]: confusion matrices, label accuracy and FEVER score.
//! * [`mcnemar`]: paired significance test between two classifiers.
//! * [`model`] and [`train`]: a linear softmax classifier trained by plain
//!   mini-batch gradient descent with any of the objectives.
//! * [`synthetic`]: seeded generator for imbalanced three-class datasets.
//! * [`gradcheck`]: central finite-difference verification of the gradients.
//!
//! All floating point math goes through `libm` so results are bitwise
//! reproducible regardless of whether the standard library is linked.
#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

mod dataset;
mod error;
pub mod gradcheck;
pub mod label;
pub mod loss;
pub mod mcnemar;
pub mod metrics;
pub mod model;
pub mod synthetic;
pub mod train;
pub mod weights;

pub use error::{Error, Result};
pub use label::{softmax, Logits, OneHot, ProbDist, VerdictLabel, NUM_CLASSES};
pub use loss::{
    aux_loss, batch_loss, complement_indicator, loss_gradient, total_loss, BatchLoss,
    ComplementIndicator, LossKind, LossResult, LossSpec,
};
pub use mcnemar::{mcnemar, mcnemar_from_counts, McNemarMethod, McNemarResult};
pub use metrics::{
    confusion_matrix, evaluate, fever_score, label_accuracy, ConfusionMatrix, EvalReport,
    EvidenceItem, PredictionRecord, DEFAULT_EVIDENCE_CUTOFF,
};
pub use model::LinearModel;
pub use dataset::{Dataset, Sample, Split};
pub use synthetic::{generate_synthetic, SyntheticConfig};
pub use train::{select_best_of_n, train, train_best_of_n, TrainConfig, TrainReport, TrainRun};
pub use weights::{class_balanced_weights, inverse_frequency_limit, Beta, ClassCounts, ClassWeights};
