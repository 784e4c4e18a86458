//! Central finite-difference check of [`loss_gradient`].
//!
//! The numeric side differentiates [`total_loss`] composed with [`softmax`],
//! which shares no code with the analytic gradient beyond the softmax itself.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::label::{softmax, Logits, OneHot, VerdictLabel, NUM_CLASSES};
use crate::loss::{loss_gradient, total_loss, LossKind, LossSpec};
use crate::weights::ClassWeights;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckConfig {
    pub samples: usize,
    pub seed: u64,
    /// Finite-difference step.
    pub step: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Components with `|analytic|` below this use `abs_tol`.
    pub small_magnitude: f64,
    /// Negative control: flip the sign of the first analytic component.
    pub inject_sign_bug: bool,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        GradCheckConfig {
            samples: 1000,
            seed: 0,
            step: 1e-6,
            rel_tol: 1e-5,
            abs_tol: 1e-8,
            small_magnitude: 1e-3,
            inject_sign_bug: false,
        }
    }
}

/// One checked draw.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckCase {
    pub spec: LossSpec,
    pub gold: VerdictLabel,
    pub logits: [f64; NUM_CLASSES],
    pub analytic: [f64; NUM_CLASSES],
    pub numeric: [f64; NUM_CLASSES],
    /// Largest error over components, as a multiple of its tolerance.
    pub score: f64,
    pub max_rel_err: f64,
    pub max_abs_err_small: f64,
}

impl GradCheckCase {
    pub fn passed(&self) -> bool {
        self.score <= 1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct KindSummary {
    pub cases: usize,
    pub failures: usize,
    /// Over components with magnitude at least `small_magnitude`.
    pub max_rel_err: f64,
    /// Over components below `small_magnitude`.
    pub max_abs_err_small: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub per_kind: [(LossKind, KindSummary); 4],
    pub worst: Option<GradCheckCase>,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.per_kind.iter().all(|(_, s)| s.failures == 0)
    }
}

/// Central difference of the objective along each logit.
pub fn numeric_gradient(spec: &LossSpec, y: OneHot, z: [f64; NUM_CLASSES], h: f64) -> [f64; NUM_CLASSES] {
    let f = |z: [f64; NUM_CLASSES]| total_loss(spec, y, &softmax(&Logits::new(z).expect("finite")));
    core::array::from_fn(|j| {
        let mut plus = z;
        let mut minus = z;
        plus[j] += h;
        minus[j] -= h;
        (f(plus) - f(minus)) / (2.0 * h)
    })
}

pub fn check_case(config: &GradCheckConfig, spec: LossSpec, gold: VerdictLabel, z: [f64; NUM_CLASSES]) -> GradCheckCase {
    let y = gold.one_hot();
    let mut analytic = loss_gradient(&spec, y, &Logits::new(z).expect("finite")).grad_z;
    if config.inject_sign_bug {
        analytic[0] = -analytic[0];
    }
    let numeric = numeric_gradient(&spec, y, z, config.step);
    let mut score: f64 = 0.0;
    let mut max_rel: f64 = 0.0;
    let mut max_abs: f64 = 0.0;
    for j in 0..NUM_CLASSES {
        let err = libm::fabs(analytic[j] - numeric[j]);
        if libm::fabs(analytic[j]) < config.small_magnitude {
            max_abs = max_abs.max(err);
            score = score.max(err / config.abs_tol);
        } else {
            let rel = err / libm::fabs(analytic[j]);
            max_rel = max_rel.max(rel);
            score = score.max(rel / config.rel_tol);
        }
    }
    GradCheckCase {
        spec,
        gold,
        logits: z,
        analytic,
        numeric,
        score,
        max_rel_err: max_rel,
        max_abs_err_small: max_abs,
    }
}

/// Draws `samples` random cases, cycling through the loss kinds:
/// `lambda ~ U[0, 1]`, uniform gold class, `z ~ U[-5, 5]^3`,
/// weights `~ U[0.1, 10]^3`.
pub fn random_case<R: Rng + ?Sized>(rng: &mut R, kind: LossKind) -> (LossSpec, VerdictLabel, [f64; NUM_CLASSES]) {
    let lambda = rng.random_range(0.0..=1.0);
    let gold = VerdictLabel::ALL[rng.random_range(0..NUM_CLASSES)];
    let z = core::array::from_fn(|_| rng.random_range(-5.0..=5.0));
    let w = ClassWeights::new(core::array::from_fn(|_| rng.random_range(0.1..=10.0))).expect("positive");
    let spec = LossSpec::new(kind, lambda).expect("valid lambda").with_weights(Some(w));
    (spec, gold, z)
}

pub fn run_gradcheck(config: &GradCheckConfig) -> GradCheckReport {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut per_kind = LossKind::ALL.map(|k| (k, KindSummary::default()));
    let mut worst: Option<GradCheckCase> = None;
    for i in 0..config.samples {
        let slot = i % LossKind::ALL.len();
        let (spec, gold, z) = random_case(&mut rng, LossKind::ALL[slot]);
        let case = check_case(config, spec, gold, z);
        let summary = &mut per_kind[slot].1;
        summary.cases += 1;
        if !case.passed() {
            summary.failures += 1;
        }
        summary.max_rel_err = summary.max_rel_err.max(case.max_rel_err);
        summary.max_abs_err_small = summary.max_abs_err_small.max(case.max_abs_err_small);
        if worst.is_none_or(|w| case.score > w.score) {
            worst = Some(case);
        }
    }
    GradCheckReport { per_kind, worst }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_suite_passes() {
        let report = run_gradcheck(&GradCheckConfig::default());
        assert!(report.passed(), "{:?}", report.worst);
        assert_eq!(report.per_kind.iter().map(|(_, s)| s.cases).sum::<usize>(), 1000);
    }

    #[test]
    fn sign_bug_is_caught() {
        let config = GradCheckConfig { samples: 8, inject_sign_bug: true, ..Default::default() };
        assert!(!run_gradcheck(&config).passed());
    }
}
