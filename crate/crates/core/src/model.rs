//! Linear softmax classifier `z = W x + b`.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};
use crate::label::{softmax, Logits, OneHot, ProbDist, VerdictLabel, NUM_CLASSES};
use crate::loss::{batch_loss, BatchLoss, LossSpec};

/// Half-width of the uniform initialization interval.
pub const INIT_RANGE: f64 = 0.01;

/// `W` is stored row-major, one row of length `dim` per class.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    dim: usize,
    weights: Vec<f64>,
    bias: [f64; NUM_CLASSES],
}

/// Gradient of a batch objective with respect to the model parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelGradient {
    pub weights: Vec<f64>,
    pub bias: [f64; NUM_CLASSES],
}

impl LinearModel {
    pub fn zeros(dim: usize) -> Result<Self> {
        Self::from_parts(dim, vec![0.0; NUM_CLASSES * dim], [0.0; NUM_CLASSES])
    }

    pub fn from_parts(dim: usize, weights: Vec<f64>, bias: [f64; NUM_CLASSES]) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("feature dimension must be at least 1"));
        }
        if weights.len() != NUM_CLASSES * dim {
            return Err(Error::invalid(alloc::format!(
                "weight matrix needs {} entries, got {}",
                NUM_CLASSES * dim,
                weights.len()
            )));
        }
        if weights.iter().chain(bias.iter()).any(|v| !v.is_finite()) {
            return Err(Error::invalid("model parameters must be finite"));
        }
        Ok(LinearModel { dim, weights, bias })
    }

    /// Every parameter uniform in `[-INIT_RANGE, INIT_RANGE]`.
    pub fn random_init<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<Self> {
        let weights = (0..NUM_CLASSES * dim).map(|_| rng.random_range(-INIT_RANGE..=INIT_RANGE)).collect();
        let bias = core::array::from_fn(|_| rng.random_range(-INIT_RANGE..=INIT_RANGE));
        Self::from_parts(dim, weights, bias)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> &[f64; NUM_CLASSES] {
        &self.bias
    }

    pub fn row(&self, class: usize) -> &[f64] {
        &self.weights[class * self.dim..(class + 1) * self.dim]
    }

    pub fn forward(&self, x: &[f64]) -> Result<Logits> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: x.len() });
        }
        let z = core::array::from_fn(|k| {
            let dot: f64 = self.row(k).iter().zip(x).map(|(w, v)| w * v).sum();
            dot + self.bias[k]
        });
        Logits::new(z)
    }

    pub fn predict_proba(&self, x: &[f64]) -> Result<ProbDist> {
        self.forward(x).map(|z| softmax(&z))
    }

    /// Argmax prediction; exact ties go to the lowest class index.
    pub fn predict(&self, x: &[f64]) -> Result<VerdictLabel> {
        self.predict_proba(x).map(|p| p.argmax())
    }

    /// Mean objective over `batch` and its gradient:
    /// `dW = mean_s g_s x_s^T`, `db = mean_s g_s` with `g_s = dL_s/dz_s`.
    pub fn gradient<'a, I>(&self, spec: &LossSpec, batch: I) -> Result<(BatchLoss, ModelGradient)>
    where
        I: IntoIterator<Item = (&'a [f64], OneHot)>,
    {
        let mut inputs = Vec::new();
        let mut pairs = Vec::new();
        for (x, y) in batch {
            pairs.push((y, self.forward(x)?));
            inputs.push(x);
        }
        let loss = batch_loss(spec, &pairs)?;
        let n = inputs.len() as f64;
        let mut gw = vec![0.0; NUM_CLASSES * self.dim];
        for (x, r) in inputs.iter().zip(&loss.per_sample) {
            for k in 0..NUM_CLASSES {
                let row = &mut gw[k * self.dim..(k + 1) * self.dim];
                for (acc, v) in row.iter_mut().zip(x.iter()) {
                    *acc += r.grad_z[k] * v;
                }
            }
        }
        for g in gw.iter_mut() {
            *g /= n;
        }
        let grad = ModelGradient { weights: gw, bias: loss.grad_z };
        Ok((loss, grad))
    }

    /// Plain gradient-descent step `theta -= lr * grad`.
    pub fn apply_step(&mut self, grad: &ModelGradient, learning_rate: f64) {
        for (w, g) in self.weights.iter_mut().zip(&grad.weights) {
            *w -= learning_rate * g;
        }
        for (b, g) in self.bias.iter_mut().zip(grad.bias) {
            *b -= learning_rate * g;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().chain(self.bias.iter()).all(|v| v.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_model_is_uniform() {
        let m = LinearModel::zeros(4).unwrap();
        let z = m.forward(&[1.0, -2.0, 3.0, 0.5]).unwrap();
        assert_eq!(z.as_array(), &[0.0; 3]);
        let p = m.predict_proba(&[1.0, -2.0, 3.0, 0.5]).unwrap();
        assert!(p.as_array().iter().all(|&v| v == 1.0 / 3.0));
    }

    #[test]
    fn bias_only_model() {
        let bias = [libm::log(7.0), libm::log(2.0), 0.0];
        let m = LinearModel::from_parts(2, vec![0.0; 6], bias).unwrap();
        for x in [[0.0, 0.0], [5.0, -3.0]] {
            let p = m.predict_proba(&x).unwrap();
            for (got, want) in p.as_array().iter().zip([0.7, 0.2, 0.1]) {
                assert!(libm::fabs(got - want) < 1e-15);
            }
        }
    }

    #[test]
    fn affine_map() {
        let m = LinearModel::from_parts(1, vec![1.0, 0.0, -1.0], [0.0; 3]).unwrap();
        assert_eq!(m.forward(&[2.0]).unwrap().as_array(), &[2.0, 0.0, -2.0]);
        assert_eq!(m.predict(&[2.0]).unwrap(), VerdictLabel::Supported);
        assert_eq!(m.predict(&[-2.0]).unwrap(), VerdictLabel::NotEnoughInfo);
    }

    #[test]
    fn dimension_checks() {
        let m = LinearModel::zeros(2).unwrap();
        assert_eq!(
            m.forward(&[1.0]),
            Err(Error::DimensionMismatch { expected: 2, found: 1 })
        );
        assert!(LinearModel::zeros(0).is_err());
        assert!(LinearModel::from_parts(2, vec![0.0; 5], [0.0; 3]).is_err());
        assert!(LinearModel::from_parts(1, vec![f64::NAN, 0.0, 0.0], [0.0; 3]).is_err());
    }
}
