//! Seeded synthetic datasets with the FEVER class imbalance.
//!
//! Each class is an isotropic unit-variance Gaussian around one vertex of an
//! equilateral triangle (side `cluster_separation`) embedded in the first two
//! feature dimensions. The training split is drawn by exact per-class counts,
//! the dev split is balanced. Label noise detaches a sample's features from
//! its label: a noisy sample keeps its label but draws its features from a
//! uniformly chosen cluster, so class counts stay exact.
//!
//! Evidence is synthetic too: every S/R claim gets one or two gold evidence
//! sets on its own page, and a fixed fraction of them (`evidence_coverage`,
//! rounded down) have their first gold set inside the top five retrieved
//! sentences.

use alloc::format;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::dataset::{Dataset, Sample, Split};
use crate::error::{Error, Result};
use crate::label::{VerdictLabel, NUM_CLASSES};
use crate::metrics::{EvidenceItem, DEFAULT_EVIDENCE_CUTOFF};
use crate::weights::ClassCounts;

/// Training-set class counts of the full FEVER 2018 release (S, R, N).
pub const FEVER_TRAIN_COUNTS: [u64; NUM_CLASSES] = [80_035, 29_775, 35_639];

/// Per-class dev-set size of the full release.
pub const FEVER_DEV_PER_CLASS: u64 = 6_666;

/// Default desk scale.
pub const DEFAULT_SCALE: f64 = 1.0 / 20.0;

/// Seed used by the shipped experiments.
pub const DEFAULT_SEED: u64 = 20_240_521;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticConfig {
    pub seed: u64,
    pub train_counts: ClassCounts,
    pub dev_per_class: u64,
    pub dim: usize,
    pub cluster_separation: f64,
    /// Probability that a training sample's features come from a random
    /// cluster.
    pub label_noise: f64,
    /// Fraction of S/R claims whose gold evidence is retrieved.
    pub evidence_coverage: f64,
    pub with_evidence: bool,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self::at_scale(DEFAULT_SCALE).expect("default scale is valid")
    }
}

impl SyntheticConfig {
    /// FEVER-ratio counts multiplied by `scale`, rounded, at least 1 per class.
    pub fn at_scale(scale: f64) -> Result<Self> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::invalid(format!("scale must be positive, got {scale}")));
        }
        let scaled = |n: u64| (libm::round(n as f64 * scale) as u64).max(1);
        Ok(SyntheticConfig {
            seed: DEFAULT_SEED,
            train_counts: ClassCounts::new(FEVER_TRAIN_COUNTS.map(scaled))?,
            dev_per_class: scaled(FEVER_DEV_PER_CLASS),
            dim: 8,
            cluster_separation: 2.0,
            label_noise: 0.1,
            evidence_coverage: 0.95,
            with_evidence: true,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim < 2 {
            return Err(Error::invalid("synthetic data needs at least 2 dimensions"));
        }
        if self.dev_per_class == 0 {
            return Err(Error::invalid("dev_per_class must be at least 1"));
        }
        if !(self.cluster_separation.is_finite() && self.cluster_separation > 0.0) {
            return Err(Error::invalid("cluster separation must be positive"));
        }
        if !(0.0..1.0).contains(&self.label_noise) {
            return Err(Error::invalid("label noise must lie in [0, 1)"));
        }
        if !(0.0..=1.0).contains(&self.evidence_coverage) {
            return Err(Error::invalid("evidence coverage must lie in [0, 1]"));
        }
        Ok(())
    }

    /// Class centres: vertices of an equilateral triangle with side
    /// `cluster_separation`, zero beyond the first two coordinates.
    pub fn centroids(&self) -> [Vec<f64>; NUM_CLASSES] {
        let radius = self.cluster_separation / libm::sqrt(3.0);
        core::array::from_fn(|k| {
            let angle = core::f64::consts::FRAC_PI_2 + k as f64 * 2.0 * core::f64::consts::PI / 3.0;
            let mut c = alloc::vec![0.0; self.dim];
            c[0] = radius * libm::cos(angle);
            c[1] = radius * libm::sin(angle);
            c
        })
    }
}

struct Generator<'a> {
    config: &'a SyntheticConfig,
    centroids: [Vec<f64>; NUM_CLASSES],
    rng: ChaCha8Rng,
}

impl Generator<'_> {
    fn features(&mut self, cluster: usize) -> Vec<f64> {
        let rng = &mut self.rng;
        self.centroids[cluster].iter().map(|c| c + rng.sample::<f64, _>(StandardNormal)).collect()
    }

    fn split(&mut self, split: Split, counts: [u64; NUM_CLASSES], first_id: u64, noise: f64) -> Result<Dataset> {
        let mut labels: Vec<VerdictLabel> = VerdictLabel::ALL
            .iter()
            .flat_map(|&l| core::iter::repeat_n(l, counts[l.index()] as usize))
            .collect();
        labels.shuffle(&mut self.rng);

        let mut samples = Vec::with_capacity(labels.len());
        for (offset, &gold) in labels.iter().enumerate() {
            let noisy = noise > 0.0 && self.rng.random::<f64>() < noise;
            let cluster = if noisy { self.rng.random_range(0..NUM_CLASSES) } else { gold.index() };
            let features = self.features(cluster);
            samples.push(Sample::new(first_id + offset as u64, features, gold));
        }
        if self.config.with_evidence {
            self.attach_evidence(&mut samples);
        }
        Dataset::new(split, samples)
    }

    fn attach_evidence(&mut self, samples: &mut [Sample]) {
        let mut verifiable: Vec<usize> = samples
            .iter()
            .enumerate()
            .filter(|(_, s)| s.gold != VerdictLabel::NotEnoughInfo)
            .map(|(i, _)| i)
            .collect();
        let covered = libm::floor(self.config.evidence_coverage * verifiable.len() as f64) as usize;
        verifiable.shuffle(&mut self.rng);
        let mut is_covered = alloc::vec![false; samples.len()];
        for &i in &verifiable[..covered] {
            is_covered[i] = true;
        }

        for (i, s) in samples.iter_mut().enumerate() {
            let page = format!("Claim_{}", s.claim_id);
            let distractor = |j: u64| EvidenceItem::new(format!("Other_{}", s.claim_id), j).expect("non-empty page");
            let mut retrieved: Vec<EvidenceItem> = (0..DEFAULT_EVIDENCE_CUTOFF as u64 + 2).map(distractor).collect();
            if s.gold == VerdictLabel::NotEnoughInfo {
                s.gold_evidence = Some(Vec::new());
                s.retrieved = Some(retrieved);
                continue;
            }
            let num_sets = self.rng.random_range(1..=2u64);
            let sets: Vec<Vec<EvidenceItem>> = (0..num_sets)
                .map(|k| {
                    let size = self.rng.random_range(1..=2u64);
                    (0..size)
                        .map(|j| EvidenceItem::new(page.clone(), 10 * k + j).expect("non-empty page"))
                        .collect()
                })
                .collect();
            let first = &sets[0];
            if is_covered[i] {
                // place the first gold set inside the top five
                let mut slots: Vec<usize> = (0..DEFAULT_EVIDENCE_CUTOFF).collect();
                slots.shuffle(&mut self.rng);
                let mut slots = slots[..first.len()].to_vec();
                slots.sort_unstable();
                for (item, slot) in first.iter().zip(slots) {
                    retrieved[slot] = item.clone();
                }
            } else {
                // first gold set just below the cutoff
                let tail = DEFAULT_EVIDENCE_CUTOFF;
                for (j, item) in first.iter().enumerate() {
                    retrieved[tail + j] = item.clone();
                }
            }
            s.gold_evidence = Some(sets);
            s.retrieved = Some(retrieved);
        }
    }
}

/// Generates `(train, dev)`. Claim ids are `0..` across both splits.
pub fn generate_synthetic(config: &SyntheticConfig) -> Result<(Dataset, Dataset)> {
    config.validate()?;
    let mut generator = Generator {
        config,
        centroids: config.centroids(),
        rng: ChaCha8Rng::seed_from_u64(config.seed),
    };
    let train_counts = *config.train_counts.as_array();
    let train = generator.split(Split::Train, train_counts, 0, config.label_noise)?;
    let dev = generator.split(
        Split::Dev,
        [config.dev_per_class; NUM_CLASSES],
        train.len() as u64,
        0.0,
    )?;
    Ok((train, dev))
}
