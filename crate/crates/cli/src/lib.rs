//! File formats, checkpoints and the `verdict-loss` command line built on
//! `verdict-loss-core`.

pub mod checkpoint;
pub mod commands;
pub mod error;
pub mod jsonl;
pub mod report;
pub mod sweep;

pub use checkpoint::Checkpoint;
pub use commands::run;
pub use error::{CliError, CliResult};
pub use jsonl::{load_dataset, load_predictions, save_dataset, save_predictions, FieldPolicy};
