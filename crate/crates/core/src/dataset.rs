//! In-memory labelled datasets.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::label::{VerdictLabel, NUM_CLASSES};
use crate::metrics::{EvidenceItem, PredictionRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Split {
    Train,
    Dev,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Test => "test",
        }
    }
}

/// One labelled claim with its feature vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub claim_id: u64,
    pub features: Vec<f64>,
    pub gold: VerdictLabel,
    pub gold_evidence: Option<Vec<Vec<EvidenceItem>>>,
    pub retrieved: Option<Vec<EvidenceItem>>,
}

impl Sample {
    pub fn new(claim_id: u64, features: Vec<f64>, gold: VerdictLabel) -> Self {
        Sample { claim_id, features, gold, gold_evidence: None, retrieved: None }
    }

    /// Pairs this sample with a prediction, carrying the evidence along.
    pub fn to_prediction(&self, predicted: VerdictLabel) -> PredictionRecord {
        PredictionRecord {
            claim_id: self.claim_id,
            gold: self.gold,
            predicted,
            gold_evidence: self.gold_evidence.clone(),
            retrieved: self.retrieved.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub split: Split,
    pub samples: Vec<Sample>,
}

impl Dataset {
    /// Builds a dataset, checking unique ids, finite features and a
    /// consistent dimension.
    pub fn new(split: Split, samples: Vec<Sample>) -> Result<Self> {
        let mut ids = BTreeSet::new();
        let dim = samples.first().map(|s| s.features.len());
        for s in &samples {
            if !ids.insert(s.claim_id) {
                return Err(Error::DuplicateClaimId(s.claim_id));
            }
            if Some(s.features.len()) != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim.unwrap_or(0),
                    found: s.features.len(),
                });
            }
            if s.features.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid(alloc::format!(
                    "claim {}: features must be finite",
                    s.claim_id
                )));
            }
        }
        Ok(Dataset { split, samples })
    }

    /// Feature dimension, `None` when empty.
    pub fn dim(&self) -> Option<usize> {
        self.samples.first().map(|s| s.features.len())
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn class_counts(&self) -> [u64; NUM_CLASSES] {
        let mut n = [0; NUM_CLASSES];
        for s in &self.samples {
            n[s.gold.index()] += 1;
        }
        n
    }

    pub fn has_evidence(&self) -> bool {
        self.samples.iter().all(|s| s.gold_evidence.is_some() && s.retrieved.is_some())
    }
}
