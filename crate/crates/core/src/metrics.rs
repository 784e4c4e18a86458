//! Label accuracy, FEVER score and confusion matrices.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::label::{VerdictLabel, NUM_CLASSES};

/// Number of retrieved sentences considered by the FEVER score.
pub const DEFAULT_EVIDENCE_CUTOFF: usize = 5;

/// A sentence reference: page identifier and sentence index.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EvidenceItem {
    page: String,
    sentence: u64,
}

impl EvidenceItem {
    pub fn new(page: impl Into<String>, sentence: u64) -> Result<Self> {
        let page = page.into();
        if page.is_empty() {
            return Err(Error::invalid("evidence page must not be empty"));
        }
        Ok(EvidenceItem { page, sentence })
    }

    pub fn page(&self) -> &str {
        &self.page
    }

    pub fn sentence(&self) -> u64 {
        self.sentence
    }
}

/// Per-claim scoring input.
///
/// Evidence fields are optional because label accuracy does not need them;
/// the FEVER score rejects S/R records whose gold evidence is missing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredictionRecord {
    pub claim_id: u64,
    pub gold: VerdictLabel,
    pub predicted: VerdictLabel,
    pub gold_evidence: Option<Vec<Vec<EvidenceItem>>>,
    pub retrieved: Option<Vec<EvidenceItem>>,
}

impl PredictionRecord {
    pub fn new(claim_id: u64, gold: VerdictLabel, predicted: VerdictLabel) -> Self {
        PredictionRecord { claim_id, gold, predicted, gold_evidence: None, retrieved: None }
    }

    pub fn with_evidence(
        mut self,
        gold_evidence: Vec<Vec<EvidenceItem>>,
        retrieved: Vec<EvidenceItem>,
    ) -> Self {
        self.gold_evidence = Some(gold_evidence);
        self.retrieved = Some(retrieved);
        self
    }

    pub fn label_correct(&self) -> bool {
        self.gold == self.predicted
    }

    /// Checks the record-level invariant: no duplicate retrieved items.
    pub fn validate(&self) -> Result<()> {
        if let Some(retrieved) = &self.retrieved {
            let mut seen = BTreeSet::new();
            for item in retrieved {
                if !seen.insert(item) {
                    return Err(Error::invalid(alloc::format!(
                        "claim {}: retrieved evidence lists [{:?}, {}] twice",
                        self.claim_id,
                        item.page(),
                        item.sentence()
                    )));
                }
            }
        }
        Ok(())
    }

    /// Whether this record counts towards the FEVER score with cutoff `k`.
    pub fn fever_correct(&self, k: usize) -> Result<bool> {
        if self.gold == VerdictLabel::NotEnoughInfo {
            return Ok(self.label_correct());
        }
        let sets = match &self.gold_evidence {
            Some(sets) if !sets.is_empty() && sets.iter().all(|s| !s.is_empty()) => sets,
            Some(_) => {
                return Err(Error::invalid(alloc::format!(
                    "claim {}: {} claim needs at least one non-empty gold evidence set",
                    self.claim_id,
                    self.gold
                )))
            }
            None => {
                return Err(Error::invalid(alloc::format!(
                    "claim {}: gold evidence missing",
                    self.claim_id
                )))
            }
        };
        let retrieved = self.retrieved.as_ref().ok_or_else(|| {
            Error::invalid(alloc::format!("claim {}: retrieved evidence missing", self.claim_id))
        })?;
        if !self.label_correct() {
            return Ok(false);
        }
        let top: BTreeSet<&EvidenceItem> = retrieved.iter().take(k).collect();
        Ok(sets.iter().any(|set| set.iter().all(|item| top.contains(item))))
    }
}

/// Counts indexed `[gold][predicted]`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct ConfusionMatrix {
    counts: [[u64; NUM_CLASSES]; NUM_CLASSES],
}

impl ConfusionMatrix {
    pub fn from_counts(counts: [[u64; NUM_CLASSES]; NUM_CLASSES]) -> Self {
        ConfusionMatrix { counts }
    }

    pub fn record(&mut self, gold: VerdictLabel, predicted: VerdictLabel) {
        self.counts[gold.index()][predicted.index()] += 1;
    }

    /// Adds another partial matrix (associative and commutative).
    pub fn merge(&mut self, other: &ConfusionMatrix) {
        for (row, other_row) in self.counts.iter_mut().zip(other.counts.iter()) {
            for (c, o) in row.iter_mut().zip(other_row) {
                *c += o;
            }
        }
    }

    pub fn counts(&self) -> &[[u64; NUM_CLASSES]; NUM_CLASSES] {
        &self.counts
    }

    pub fn get(&self, gold: VerdictLabel, predicted: VerdictLabel) -> u64 {
        self.counts[gold.index()][predicted.index()]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..NUM_CLASSES).map(|i| self.counts[i][i]).sum()
    }

    /// Records per gold class.
    pub fn row_sums(&self) -> [u64; NUM_CLASSES] {
        core::array::from_fn(|g| self.counts[g].iter().sum())
    }

    /// Number of times each class is predicted (the "Total" row).
    pub fn prediction_totals(&self) -> [u64; NUM_CLASSES] {
        core::array::from_fn(|p| self.counts.iter().map(|row| row[p]).sum())
    }
}

fn check_unique_ids(records: &[PredictionRecord]) -> Result<()> {
    let mut seen = BTreeSet::new();
    for r in records {
        if !seen.insert(r.claim_id) {
            return Err(Error::DuplicateClaimId(r.claim_id));
        }
    }
    Ok(())
}

pub fn confusion_matrix(records: &[PredictionRecord]) -> Result<ConfusionMatrix> {
    if records.is_empty() {
        return Err(Error::invalid("no prediction records"));
    }
    check_unique_ids(records)?;
    let mut cm = ConfusionMatrix::default();
    for r in records {
        cm.record(r.gold, r.predicted);
    }
    Ok(cm)
}

/// `trace / total`.
pub fn label_accuracy(cm: &ConfusionMatrix) -> Result<f64> {
    match cm.total() {
        0 => Err(Error::invalid("confusion matrix is empty")),
        total => Ok(cm.trace() as f64 / total as f64),
    }
}

fn fever_correct_count(records: &[PredictionRecord], k: usize) -> Result<u64> {
    if k == 0 {
        return Err(Error::invalid("evidence cutoff k must be at least 1"));
    }
    let mut correct = 0;
    for r in records {
        if r.fever_correct(k)? {
            correct += 1;
        }
    }
    Ok(correct)
}

/// Fraction of records with the correct label and, for S/R claims, some gold
/// evidence set fully inside the first `k` retrieved items.
pub fn fever_score(records: &[PredictionRecord], k: usize) -> Result<f64> {
    if records.is_empty() {
        return Err(Error::invalid("no prediction records"));
    }
    Ok(fever_correct_count(records, k)? as f64 / records.len() as f64)
}

/// Aggregated evaluation of a record set.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub label_accuracy: f64,
    /// Present when evidence scoring was requested.
    pub fever_score: Option<f64>,
    pub confusion: ConfusionMatrix,
    pub prediction_totals: [u64; NUM_CLASSES],
    pub label_correct: u64,
    pub fever_correct: Option<u64>,
    pub total: u64,
}

impl EvalReport {
    /// Label accuracy as a percentage with two decimals, rounded half up.
    pub fn label_accuracy_percent(&self) -> String {
        format_percent(self.label_correct, self.total)
    }

    pub fn fever_score_percent(&self) -> Option<String> {
        self.fever_correct.map(|c| format_percent(c, self.total))
    }
}

/// Scores a record set; `fever_cutoff = None` skips the evidence check.
pub fn evaluate(records: &[PredictionRecord], fever_cutoff: Option<usize>) -> Result<EvalReport> {
    let confusion = confusion_matrix(records)?;
    let total = confusion.total();
    let fever_correct = fever_cutoff.map(|k| fever_correct_count(records, k)).transpose()?;
    Ok(EvalReport {
        label_accuracy: label_accuracy(&confusion)?,
        fever_score: fever_correct.map(|c| c as f64 / total as f64),
        prediction_totals: confusion.prediction_totals(),
        label_correct: confusion.trace(),
        fever_correct,
        total,
        confusion,
    })
}

/// `100 * numer / denom` with two decimals, rounded half up, computed in
/// exact integer arithmetic.
pub fn format_percent(numer: u64, denom: u64) -> String {
    assert!(denom > 0, "percentage of an empty set");
    let (n, d) = (numer as u128, denom as u128);
    let hundredths = (2 * n * 10_000 + d) / (2 * d);
    alloc::format!("{}.{:02}", hundredths / 100, hundredths % 100)
}

/// Percentage rendering for an arbitrary ratio in `[0, 1]`, half up.
pub fn format_ratio_percent(ratio: f64) -> String {
    let hundredths = libm::floor(ratio * 10_000.0 + 0.5) as u64;
    alloc::format!("{}.{:02}", hundredths / 100, hundredths % 100)
}
