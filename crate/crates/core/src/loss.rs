//! Verdict-prediction objectives and their gradients with respect to logits.
//!
//! Every objective has the form
//!
//! ```text
//! L(y, p) = w_g * ( -log p_g  -  lambda * sum_i ybar_i * log(1 - p_i) )
//! ```
//!
//! where `g` is the gold class, `w_g` its class weight (1 when unweighted) and
//! `ybar` the complement indicator of the loss kind:
//!
//! | kind | gold S    | gold R    | gold N    |
//! |------|-----------|-----------|-----------|
//! | CE   | (0, 0, 0) | (0, 0, 0) | (0, 0, 0) |
//! | OvA  | (0, 1, 1) | (1, 0, 1) | (1, 1, 0) |
//! | SRN  | (0, 1, 0) | (1, 0, 0) | (1, 1, 0) |
//! | SR   | (0, 1, 0) | (1, 0, 0) | (0, 0, 0) |
//!
//! Inside the logarithms probabilities are clamped to `[EPS, 1 - EPS]`; when a
//! clamp is active the result carries `saturated = true`.

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};
use crate::label::{Logits, OneHot, ProbDist, VerdictLabel, NUM_CLASSES};
use crate::weights::ClassWeights;

/// Clamp bound used inside log terms.
pub const EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LossKind {
    /// Plain cross-entropy.
    CrossEntropy,
    /// Multi-label logistic (one-versus-all) loss on softmax outputs.
    OneVsAll,
    /// N is removed from the complement sets of S and R.
    Srn,
    /// Penalizes only S/R confusion; nothing extra for gold N.
    Sr,
}

impl LossKind {
    pub const ALL: [LossKind; 4] =
        [LossKind::CrossEntropy, LossKind::OneVsAll, LossKind::Srn, LossKind::Sr];

    /// Lower-case flag spelling (`ce`, `ova`, `srn`, `sr`).
    pub fn as_str(self) -> &'static str {
        match self {
            LossKind::CrossEntropy => "ce",
            LossKind::OneVsAll => "ova",
            LossKind::Srn => "srn",
            LossKind::Sr => "sr",
        }
    }

    /// Table spelling (`CE`, `OvA`, `SRN`, `SR`).
    pub fn display_name(self) -> &'static str {
        match self {
            LossKind::CrossEntropy => "CE",
            LossKind::OneVsAll => "OvA",
            LossKind::Srn => "SRN",
            LossKind::Sr => "SR",
        }
    }

    pub fn has_auxiliary_term(self) -> bool {
        self != LossKind::CrossEntropy
    }
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.display_name())
    }
}

impl FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ce" => Ok(LossKind::CrossEntropy),
            "ova" => Ok(LossKind::OneVsAll),
            "srn" => Ok(LossKind::Srn),
            "sr" => Ok(LossKind::Sr),
            _ => Err(Error::invalid(alloc::format!("unknown loss kind {s:?}"))),
        }
    }
}

/// Objective configuration: kind, auxiliary weight `lambda` and optional
/// class weights. Absent weights behave exactly like `(1, 1, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossSpec {
    kind: LossKind,
    lambda: f64,
    weights: Option<ClassWeights>,
}

impl LossSpec {
    pub fn new(kind: LossKind, lambda: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(Error::invalid(alloc::format!(
                "lambda must be finite and non-negative, got {lambda}"
            )));
        }
        Ok(LossSpec { kind, lambda, weights: None })
    }

    pub fn cross_entropy() -> Self {
        LossSpec { kind: LossKind::CrossEntropy, lambda: 0.0, weights: None }
    }

    pub fn with_weights(mut self, weights: Option<ClassWeights>) -> Self {
        self.weights = weights;
        self
    }

    pub fn kind(&self) -> LossKind {
        self.kind
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn weights(&self) -> Option<&ClassWeights> {
        self.weights.as_ref()
    }
}

/// Membership indicator `ybar` of the complement set of the gold class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplementIndicator([f64; NUM_CLASSES]);

impl ComplementIndicator {
    pub fn as_array(&self) -> &[f64; NUM_CLASSES] {
        &self.0
    }

    pub fn get(&self, i: usize) -> f64 {
        self.0[i]
    }

    fn is_zero(&self) -> bool {
        self.0.iter().all(|&v| v == 0.0)
    }
}

pub fn complement_indicator(kind: LossKind, y: OneHot) -> ComplementIndicator {
    let gold_is_nei = y.label() == VerdictLabel::NotEnoughInfo;
    ComplementIndicator(core::array::from_fn(|i| {
        let not_gold = 1.0 - y.get(i);
        let is_nei = i == VerdictLabel::NotEnoughInfo.index();
        match kind {
            LossKind::CrossEntropy => 0.0,
            LossKind::OneVsAll => not_gold,
            LossKind::Srn if is_nei => 0.0,
            LossKind::Srn => not_gold,
            LossKind::Sr if is_nei || gold_is_nei => 0.0,
            LossKind::Sr => not_gold,
        }
    }))
}

fn ln_upper() -> f64 {
    libm::log1p(-EPS)
}

fn ln_lower() -> f64 {
    libm::log(EPS)
}

/// Clamps a log-probability to `[log EPS, log(1 - EPS)]`.
fn clamp_log(v: f64) -> (f64, bool) {
    let (lo, hi) = (ln_lower(), ln_upper());
    if v < lo {
        (lo, true)
    } else if v > hi {
        (hi, false)
    } else {
        (v, false)
    }
}

fn clamp_prob(v: f64) -> f64 {
    v.clamp(EPS, 1.0 - EPS)
}

/// `R(y, p) = -sum_i ybar_i log(1 - p_i)`, zero for cross-entropy.
///
/// `1 - p_i` is clamped to at least `EPS`, so the result is always finite.
pub fn aux_loss(kind: LossKind, y: OneHot, p: &ProbDist) -> f64 {
    let ybar = complement_indicator(kind, y);
    let mut acc = 0.0;
    for i in 0..NUM_CLASSES {
        if ybar.get(i) != 0.0 {
            acc -= ybar.get(i) * libm::log(1.0 - clamp_prob(p.get(i)));
        }
    }
    acc
}

/// Full objective value for a probability vector.
pub fn total_loss(spec: &LossSpec, y: OneHot, p: &ProbDist) -> f64 {
    let g = y.index();
    let ce = -libm::log(clamp_prob(p.get(g)));
    let value = ce + spec.lambda * aux_loss(spec.kind, y, p);
    match spec.weights {
        Some(w) => w.get(g) * value,
        None => value,
    }
}

/// True when some log term of [`total_loss`] hit the clamp.
pub fn is_saturated(spec: &LossSpec, y: OneHot, p: &ProbDist) -> bool {
    let ybar = complement_indicator(spec.kind, y);
    p.get(y.index()) < EPS || (0..NUM_CLASSES).any(|i| ybar.get(i) != 0.0 && 1.0 - p.get(i) < EPS)
}

/// Objective value and gradient for a single sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossResult {
    pub value: f64,
    /// `d value / d z`.
    pub grad_z: [f64; NUM_CLASSES],
    /// A log term was clamped.
    pub saturated: bool,
}

/// Softmax over every logit except `skip`; entry `skip` is 0.
fn others_softmax(z: &Logits, skip: usize) -> [f64; NUM_CLASSES] {
    let z = z.as_array();
    let max = (0..NUM_CLASSES).filter(|&k| k != skip).map(|k| z[k]).fold(f64::NEG_INFINITY, f64::max);
    let e: [f64; NUM_CLASSES] = core::array::from_fn(|k| if k == skip { 0.0 } else { libm::exp(z[k] - max) });
    let sum: f64 = e.iter().sum();
    e.map(|v| v / sum)
}

/// Evaluates the objective on `softmax(z)` and its exact gradient.
///
/// `log p` and `log(1 - p_i)` come from log-sum-exp over the shifted logits,
/// with `1 - p_i` formed as the sum of the other classes' mass. The CE part of
/// the gradient is `p - y`; each auxiliary term `-c log(1 - p_i)` adds
/// `c p_i (delta_ij - p_j) / (1 - p_i)` to component `j`. The whole result is
/// scaled by the gold class weight.
pub fn loss_gradient(spec: &LossSpec, y: OneHot, z: &Logits) -> LossResult {
    let (e, sum) = z.shifted_exp();
    let ln_sum = libm::log(sum);
    let p: [f64; NUM_CLASSES] = core::array::from_fn(|i| e[i] / sum);
    let g = y.index();

    let max = z.as_array().iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (log_pg, mut saturated) = clamp_log(z.get(g) - max - ln_sum);
    let ce = -log_pg;
    let grad_ce: [f64; NUM_CLASSES] = core::array::from_fn(|j| p[j] - y.get(j));

    let ybar = complement_indicator(spec.kind, y);
    let (value, mut grad) = if ybar.is_zero() {
        (ce, grad_ce)
    } else {
        let mut aux = 0.0;
        let mut grad_aux = [0.0; NUM_CLASSES];
        for (i, &c) in ybar.as_array().iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let others: f64 = (0..NUM_CLASSES).filter(|&k| k != i).map(|k| e[k]).sum();
            let (log_rest, sat) = clamp_log(libm::log(others) - ln_sum);
            saturated |= sat;
            aux -= c * log_rest;
            // d/dz_j of -log(1 - p_i) is p_i for j = i and -p_i q_j otherwise,
            // q being the softmax over the remaining logits
            let q = others_softmax(z, i);
            for (j, gj) in grad_aux.iter_mut().enumerate() {
                *gj += c * p[i] * if i == j { 1.0 } else { -q[j] };
            }
        }
        let lambda = spec.lambda;
        (ce + lambda * aux, core::array::from_fn(|j| grad_ce[j] + lambda * grad_aux[j]))
    };

    let value = match spec.weights {
        Some(w) => {
            let wg = w.get(g);
            for gj in grad.iter_mut() {
                *gj *= wg;
            }
            wg * value
        }
        None => value,
    };
    LossResult { value, grad_z: grad, saturated }
}

/// Mean objective over a batch, with the per-sample gradients kept for the
/// trainer.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchLoss {
    pub value: f64,
    /// Mean of the per-sample gradients.
    pub grad_z: [f64; NUM_CLASSES],
    pub per_sample: Vec<LossResult>,
    pub saturated: bool,
}

pub fn batch_loss(spec: &LossSpec, batch: &[(OneHot, Logits)]) -> Result<BatchLoss> {
    if batch.is_empty() {
        return Err(Error::invalid("batch must not be empty"));
    }
    let per_sample: Vec<LossResult> =
        batch.iter().map(|(y, z)| loss_gradient(spec, *y, z)).collect();
    let n = per_sample.len() as f64;
    let mut value = 0.0;
    let mut grad = [0.0; NUM_CLASSES];
    for r in &per_sample {
        value += r.value;
        for (acc, gj) in grad.iter_mut().zip(r.grad_z) {
            *acc += gj;
        }
    }
    Ok(BatchLoss {
        value: value / n,
        grad_z: grad.map(|g| g / n),
        saturated: per_sample.iter().any(|r| r.saturated),
        per_sample,
    })
}
