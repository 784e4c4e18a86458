//! McNemar's test for two classifiers scored on the same claims.
//!
//! Only discordant pairs matter: `b` counts claims system A got right and B
//! got wrong, `c` the reverse. With `b + c <= 25` the exact two-sided binomial
//! test is used, otherwise the continuity-corrected chi-square statistic
//! `(|b - c| - 1)^2 / (b + c)` with one degree of freedom.

use crate::error::{Error, Result};

/// Largest discordant count handled by the exact branch in [`McNemarMethod::Auto`].
pub const EXACT_THRESHOLD: u64 = 25;

/// Significance level for the asterisk convention.
pub const SIGNIFICANCE_LEVEL: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum McNemarMethod {
    /// Exact when `b + c <= 25`, chi-square otherwise.
    Auto,
    ExactBinomial,
    ChiSquareCorrected,
}

impl McNemarMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            McNemarMethod::Auto => "auto",
            McNemarMethod::ExactBinomial => "exact-binomial",
            McNemarMethod::ChiSquareCorrected => "chi-square-corrected",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McNemarResult {
    /// A correct, B wrong.
    pub b: u64,
    /// A wrong, B correct.
    pub c: u64,
    /// Chi-square statistic; `None` for the exact branch.
    pub statistic: Option<f64>,
    pub p_value: f64,
    /// The branch that ran (never `Auto`).
    pub method: McNemarMethod,
}

impl McNemarResult {
    pub fn is_significant(&self) -> bool {
        self.p_value < SIGNIFICANCE_LEVEL
    }
}

/// Runs the test on aligned per-claim correctness vectors.
pub fn mcnemar(a_correct: &[bool], b_correct: &[bool], method: McNemarMethod) -> Result<McNemarResult> {
    if a_correct.len() != b_correct.len() {
        return Err(Error::invalid(alloc::format!(
            "correctness vectors differ in length ({} vs {})",
            a_correct.len(),
            b_correct.len()
        )));
    }
    if a_correct.is_empty() {
        return Err(Error::invalid("no paired observations"));
    }
    let mut b = 0;
    let mut c = 0;
    for (&a, &bb) in a_correct.iter().zip(b_correct) {
        match (a, bb) {
            (true, false) => b += 1,
            (false, true) => c += 1,
            _ => {}
        }
    }
    Ok(mcnemar_from_counts(b, c, method))
}

pub fn mcnemar_from_counts(b: u64, c: u64, method: McNemarMethod) -> McNemarResult {
    let n = b + c;
    let method = match method {
        McNemarMethod::Auto if n <= EXACT_THRESHOLD => McNemarMethod::ExactBinomial,
        McNemarMethod::Auto => McNemarMethod::ChiSquareCorrected,
        m => m,
    };
    let (statistic, p_value) = match method {
        McNemarMethod::ExactBinomial => (None, exact_two_sided(b.min(c), n)),
        _ => {
            if n == 0 {
                (Some(0.0), 1.0)
            } else {
                let diff = b.abs_diff(c) as f64 - 1.0;
                let stat = diff * diff / n as f64;
                (Some(stat), chi_square_1df_survival(stat))
            }
        }
    };
    McNemarResult { b, c, statistic, p_value, method }
}

/// `min(1, 2 * P(X <= k))` for `X ~ Binomial(n, 1/2)`.
fn exact_two_sided(k: u64, n: u64) -> f64 {
    let tail = if n <= 120 {
        // exact integer binomial sums
        let mut term: u128 = 1;
        let mut sum: u128 = 1;
        for i in 1..=k as u128 {
            term = term * (n as u128 + 1 - i) / i;
            sum += term;
        }
        libm::ldexp(sum as f64, -(n as i32))
    } else {
        let ln_n_fact = libm::lgamma(n as f64 + 1.0);
        let ln_half_n = n as f64 * core::f64::consts::LN_2;
        (0..=k)
            .map(|i| {
                let i = i as f64;
                libm::exp(
                    ln_n_fact - libm::lgamma(i + 1.0) - libm::lgamma(n as f64 - i + 1.0) - ln_half_n,
                )
            })
            .sum()
    };
    (2.0 * tail).min(1.0)
}

/// Survival function of the chi-square distribution with one degree of
/// freedom: `P(X > x) = erfc(sqrt(x / 2))`.
pub fn chi_square_1df_survival(x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    libm::erfc(libm::sqrt(x / 2.0)).clamp(0.0, 1.0)
}
