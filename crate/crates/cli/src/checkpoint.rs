//! JSON checkpoints of a trained [`LinearModel`].
//!
//! ```text
//! {
//!   "format": "verdict-loss-checkpoint",
//!   "version": 1,
//!   "dim": 8,
//!   "weights": [...],          // 3 * dim values, row-major, rows S, R, N
//!   "bias": [b_S, b_R, b_N],
//!   "config": { ... }          // how the model was trained
//! }
//! ```
//!
//! Floats are written in shortest round-trip form, so a checkpoint reloads
//! to the bit-identical model.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use verdict_loss_core::{LinearModel, NUM_CLASSES};

use crate::error::{CliError, CliResult};

pub const FORMAT: &str = "verdict-loss-checkpoint";
pub const VERSION: u32 = 1;

/// Training provenance stored alongside the parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainedWith {
    pub loss: String,
    pub lambda: f64,
    pub weighting: bool,
    pub beta: f64,
    /// Class weights before rescaling, `None` when unweighted.
    pub class_weights: Option<[f64; NUM_CLASSES]>,
    pub rescale_weights: bool,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub base_seed: u64,
    pub runs: usize,
    /// Index of the run kept by best-of-n selection.
    pub selected_run: usize,
    pub selected_seed: u64,
    pub dev_label_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub dim: usize,
    pub weights: Vec<f64>,
    pub bias: [f64; NUM_CLASSES],
    pub config: TrainedWith,
}

impl Checkpoint {
    pub fn new(model: &LinearModel, config: TrainedWith) -> Self {
        Checkpoint {
            format: FORMAT.to_string(),
            version: VERSION,
            dim: model.dim(),
            weights: model.weights().to_vec(),
            bias: *model.bias(),
            config,
        }
    }

    pub fn model(&self) -> CliResult<LinearModel> {
        Ok(LinearModel::from_parts(self.dim, self.weights.clone(), self.bias)?)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("checkpoint serializes");
        s.push('\n');
        s
    }

    pub fn save(&self, path: &Path) -> CliResult<()> {
        fs::write(path, self.to_json()).map_err(|e| CliError::io(path, e))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let ckpt: Checkpoint = serde_json::from_str(&text)
            .map_err(|e| CliError::Invalid(format!("{}: not a checkpoint: {e}", path.display())))?;
        if ckpt.format != FORMAT || ckpt.version != VERSION {
            return Err(CliError::Invalid(format!(
                "{}: unsupported checkpoint {:?} version {}",
                path.display(),
                ckpt.format,
                ckpt.version
            )));
        }
        ckpt.model()?;
        Ok(ckpt)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Checkpoint {
        let model = LinearModel::from_parts(2, vec![0.1, -0.2, 1e-300, 3.0, 0.1 + 0.2, -0.0], [1.0 / 3.0, 0.0, -7.5]).unwrap();
        Checkpoint::new(
            &model,
            TrainedWith {
                loss: "sr".into(),
                lambda: 0.25,
                weighting: true,
                beta: 0.999999,
                class_weights: Some([1.3e-5, 3.4e-5, 2.8e-5]),
                rescale_weights: true,
                epochs: 30,
                batch_size: 32,
                learning_rate: 0.1,
                base_seed: 0,
                runs: 3,
                selected_run: 1,
                selected_seed: 1,
                dev_label_accuracy: 0.75,
            },
        )
    }

    #[test]
    fn round_trips_bit_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ckpt.json");
        let c = sample();
        c.save(&path).unwrap();
        let back = Checkpoint::load(&path).unwrap();
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&back.weights), bits(&c.weights));
        assert_eq!(bits(&back.bias), bits(&c.bias));
        assert_eq!(back, c);
    }

    #[test]
    fn rejects_bad_checkpoints() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ckpt.json");
        let mut c = sample();
        c.version = 2;
        c.save(&path).unwrap();
        assert!(Checkpoint::load(&path).is_err());
        let mut c = sample();
        c.weights.pop();
        c.save(&path).unwrap();
        assert!(Checkpoint::load(&path).is_err());
        std::fs::write(&path, "{}").unwrap();
        assert!(Checkpoint::load(&path).is_err());
    }
}
