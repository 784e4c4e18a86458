//! Class-balanced weights `w_i = (1 - beta) / (1 - beta^n_i)`.
//!
//! `beta = 0` gives uniform weights; as `beta -> 1` the weights approach the
//! inverse class frequency. Weights are returned unnormalized.

use crate::error::{Error, Result};
use crate::label::{VerdictLabel, NUM_CLASSES};

/// Training samples per class. Every count is at least 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ClassCounts([u64; NUM_CLASSES]);

impl ClassCounts {
    pub fn new(n: [u64; NUM_CLASSES]) -> Result<Self> {
        if n.contains(&0) {
            return Err(Error::invalid("class counts must be at least 1"));
        }
        Ok(ClassCounts(n))
    }

    /// Tallies labels. Fails if some class never occurs.
    pub fn from_labels<I: IntoIterator<Item = VerdictLabel>>(labels: I) -> Result<Self> {
        let mut n = [0u64; NUM_CLASSES];
        for label in labels {
            n[label.index()] += 1;
        }
        Self::new(n)
    }

    pub fn as_array(&self) -> &[u64; NUM_CLASSES] {
        &self.0
    }

    pub fn get(&self, i: usize) -> u64 {
        self.0[i]
    }

    pub fn total(&self) -> u64 {
        self.0.iter().sum()
    }
}

/// Smoothing hyperparameter, `0 <= beta < 1`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Beta(f64);

impl Beta {
    pub const ZERO: Beta = Beta(0.0);

    pub fn new(beta: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&beta) {
            return Err(Error::invalid(alloc::format!("beta must lie in [0, 1), got {beta}")));
        }
        Ok(Beta(beta))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Positive, finite per-class weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassWeights([f64; NUM_CLASSES]);

impl ClassWeights {
    pub const UNIFORM: ClassWeights = ClassWeights([1.0; NUM_CLASSES]);

    pub fn new(w: [f64; NUM_CLASSES]) -> Result<Self> {
        if w.iter().any(|&v| !(v.is_finite() && v > 0.0)) {
            return Err(Error::invalid("class weights must be positive and finite"));
        }
        Ok(ClassWeights(w))
    }

    pub fn as_array(&self) -> &[f64; NUM_CLASSES] {
        &self.0
    }

    pub fn get(&self, i: usize) -> f64 {
        self.0[i]
    }

    /// Rescales so that the count-weighted mean weight is 1, i.e.
    /// `sum_i n_i w_i = sum_i n_i`. Ratios between classes are preserved.
    /// Returns `self` unchanged when every count is zero.
    pub fn scaled_to_unit_mean(&self, counts: &[u64; NUM_CLASSES]) -> ClassWeights {
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return *self;
        }
        let mass: f64 = (0..NUM_CLASSES).map(|i| counts[i] as f64 * self.0[i]).sum();
        let scale = total as f64 / mass;
        ClassWeights(core::array::from_fn(|i| self.0[i] * scale))
    }
}

/// `w_i = (1 - beta) / (1 - beta^n_i)`.
///
/// `1 - beta^n` is evaluated as `-expm1(n * log1p(-(1 - beta)))`, which stays
/// accurate for beta close to 1 and large n. `beta = 0` returns exactly
/// `(1, 1, 1)`.
pub fn class_balanced_weights(counts: &ClassCounts, beta: Beta) -> ClassWeights {
    let b = beta.value();
    if b == 0.0 {
        return ClassWeights::UNIFORM;
    }
    // exact when b >= 0.5
    let one_minus_beta = 1.0 - b;
    let log_beta = libm::log1p(-one_minus_beta);
    ClassWeights(core::array::from_fn(|i| {
        let n = counts.get(i) as f64;
        let denom = -libm::expm1(n * log_beta);
        one_minus_beta / denom
    }))
}

/// The `beta -> 1` limit: weights proportional to `1 / n_i`, scaled so the
/// largest weight is 1. For display and comparison only.
pub fn inverse_frequency_limit(counts: &ClassCounts) -> ClassWeights {
    let min = counts.as_array().iter().copied().min().unwrap_or(1) as f64;
    ClassWeights(core::array::from_fn(|i| min / counts.get(i) as f64))
}
