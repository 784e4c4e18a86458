//! Verdict classes and the three-component vectors built on them.

use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};

/// Number of verdict classes.
pub const NUM_CLASSES: usize = 3;

/// Tolerance on `|sum(p) - 1|` accepted by [`ProbDist::new`].
pub const SIMPLEX_TOLERANCE: f64 = 1e-12;

/// The three verdict classes, indexed 0, 1, 2 in that order.
///
/// Ordering follows the class index, so `Supported < Refuted < NotEnoughInfo`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum VerdictLabel {
    Supported,
    Refuted,
    NotEnoughInfo,
}

impl VerdictLabel {
    pub const ALL: [VerdictLabel; NUM_CLASSES] =
        [VerdictLabel::Supported, VerdictLabel::Refuted, VerdictLabel::NotEnoughInfo];

    /// Zero-based class index (S = 0, R = 1, N = 2).
    pub fn index(self) -> usize {
        match self {
            VerdictLabel::Supported => 0,
            VerdictLabel::Refuted => 1,
            VerdictLabel::NotEnoughInfo => 2,
        }
    }

    pub fn from_index(index: usize) -> Option<Self> {
        Self::ALL.get(index).copied()
    }

    /// Interchange spelling: `SUPPORTS`, `REFUTES`, `NOT ENOUGH INFO`.
    pub fn as_str(self) -> &'static str {
        match self {
            VerdictLabel::Supported => "SUPPORTS",
            VerdictLabel::Refuted => "REFUTES",
            VerdictLabel::NotEnoughInfo => "NOT ENOUGH INFO",
        }
    }

    /// One-letter symbol used in tables.
    pub fn symbol(self) -> char {
        match self {
            VerdictLabel::Supported => 'S',
            VerdictLabel::Refuted => 'R',
            VerdictLabel::NotEnoughInfo => 'N',
        }
    }

    pub fn one_hot(self) -> OneHot {
        OneHot { label: self }
    }
}

impl fmt::Display for VerdictLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Case-sensitive parse of the interchange spelling.
impl FromStr for VerdictLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "SUPPORTS" => Ok(VerdictLabel::Supported),
            "REFUTES" => Ok(VerdictLabel::Refuted),
            "NOT ENOUGH INFO" => Ok(VerdictLabel::NotEnoughInfo),
            other => Err(Error::invalid(alloc::format!("unknown verdict label {other:?}"))),
        }
    }
}

/// One-hot encoding of a gold class.
///
/// Stored as the label itself, so the one-hot invariant cannot be broken.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct OneHot {
    label: VerdictLabel,
}

impl OneHot {
    /// Validates a raw vector: every component 0 or 1, exactly one 1.
    pub fn from_vector(y: [f64; NUM_CLASSES]) -> Result<Self> {
        if y.iter().any(|&v| v != 0.0 && v != 1.0) {
            return Err(Error::invalid("one-hot components must be 0 or 1"));
        }
        let mut hot = y.iter().enumerate().filter(|(_, &v)| v == 1.0).map(|(i, _)| i);
        match (hot.next(), hot.next()) {
            (Some(i), None) => Ok(OneHot { label: VerdictLabel::ALL[i] }),
            _ => Err(Error::invalid("one-hot vector must contain exactly one 1")),
        }
    }

    pub fn label(self) -> VerdictLabel {
        self.label
    }

    pub fn index(self) -> usize {
        self.label.index()
    }

    /// Component `y_i`.
    pub fn get(self, i: usize) -> f64 {
        if i == self.label.index() {
            1.0
        } else {
            0.0
        }
    }

    pub fn to_vector(self) -> [f64; NUM_CLASSES] {
        core::array::from_fn(|i| self.get(i))
    }
}

impl From<VerdictLabel> for OneHot {
    fn from(label: VerdictLabel) -> Self {
        label.one_hot()
    }
}

/// A predicted class distribution on the 3-simplex.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbDist([f64; NUM_CLASSES]);

impl ProbDist {
    pub fn new(p: [f64; NUM_CLASSES]) -> Result<Self> {
        if p.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
            return Err(Error::invalid("probabilities must lie in [0, 1]"));
        }
        let sum: f64 = p.iter().sum();
        if libm::fabs(sum - 1.0) > SIMPLEX_TOLERANCE {
            return Err(Error::invalid(alloc::format!(
                "probabilities must sum to 1 (got {sum})"
            )));
        }
        Ok(ProbDist(p))
    }

    pub fn as_array(&self) -> &[f64; NUM_CLASSES] {
        &self.0
    }

    pub fn get(&self, i: usize) -> f64 {
        self.0[i]
    }

    /// Most probable class; exact ties go to the lowest index.
    pub fn argmax(&self) -> VerdictLabel {
        let mut best = 0;
        for i in 1..NUM_CLASSES {
            if self.0[i] > self.0[best] {
                best = i;
            }
        }
        VerdictLabel::ALL[best]
    }
}

/// Unnormalized pre-softmax scores.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Logits([f64; NUM_CLASSES]);

impl Logits {
    pub fn new(z: [f64; NUM_CLASSES]) -> Result<Self> {
        if z.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("logits must be finite"));
        }
        Ok(Logits(z))
    }

    pub fn as_array(&self) -> &[f64; NUM_CLASSES] {
        &self.0
    }

    pub fn get(&self, i: usize) -> f64 {
        self.0[i]
    }

    /// Returns the max-shifted exponentials `exp(z_i - max z)` and their sum.
    pub(crate) fn shifted_exp(&self) -> ([f64; NUM_CLASSES], f64) {
        let max = self.0.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let e: [f64; NUM_CLASSES] = core::array::from_fn(|i| libm::exp(self.0[i] - max));
        let sum = e[0] + e[1] + e[2];
        (e, sum)
    }
}

/// Max-shifted softmax. The result is invariant under adding a constant
/// to every logit as long as that shift is exact in floating point.
pub fn softmax(z: &Logits) -> ProbDist {
    let (e, sum) = z.shifted_exp();
    ProbDist(core::array::from_fn(|i| e[i] / sum))
}

/// Softmax on a raw array, rejecting non-finite input.
pub fn softmax_checked(z: [f64; NUM_CLASSES]) -> Result<ProbDist> {
    Logits::new(z).map(|z| softmax(&z))
}
