//! JSONL interchange formats.
//!
//! Dataset line:
//!
//! ```text
//! {"claim_id": 7, "label": "SUPPORTS", "features": [0.1, -2.0],
//!  "gold_evidence": [[["Page", 0], ["Page", 3]]], "retrieved": [["Page", 0]]}
//! ```
//!
//! Prediction line:
//!
//! ```text
//! {"claim_id": 7, "gold": "SUPPORTS", "predicted": "REFUTES",
//!  "gold_evidence": [...], "retrieved": [...]}
//! ```
//!
//! Evidence fields are optional (`null` counts as absent). Blank lines are
//! skipped. In strict mode unknown fields are rejected.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::{Map, Value};
use verdict_loss_core::{Dataset, EvidenceItem, PredictionRecord, Sample, Split, VerdictLabel};

use crate::error::{CliError, CliResult};

/// How unknown fields are treated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FieldPolicy {
    #[default]
    Strict,
    Lenient,
}

const DATASET_FIELDS: [&str; 5] = ["claim_id", "label", "features", "gold_evidence", "retrieved"];
const PREDICTION_FIELDS: [&str; 5] = ["claim_id", "gold", "predicted", "gold_evidence", "retrieved"];

struct Line<'a> {
    path: &'a Path,
    number: usize,
    object: Map<String, Value>,
}

impl Line<'_> {
    fn error(&self, field: &str, msg: impl std::fmt::Display) -> CliError {
        CliError::Format {
            path: self.path.to_path_buf(),
            line: self.number,
            msg: format!("field `{field}`: {msg}"),
        }
    }

    fn required(&self, field: &str) -> CliResult<&Value> {
        match self.object.get(field) {
            Some(Value::Null) | None => Err(self.error(field, "missing")),
            Some(v) => Ok(v),
        }
    }

    fn optional(&self, field: &str) -> Option<&Value> {
        self.object.get(field).filter(|v| !v.is_null())
    }

    fn claim_id(&self) -> CliResult<u64> {
        self.required("claim_id")?
            .as_u64()
            .ok_or_else(|| self.error("claim_id", "expected a non-negative integer"))
    }

    fn label(&self, field: &str) -> CliResult<VerdictLabel> {
        let s = self.required(field)?.as_str().ok_or_else(|| self.error(field, "expected a string"))?;
        s.parse().map_err(|_| {
            self.error(field, format!("unknown label {s:?} (expected SUPPORTS, REFUTES or NOT ENOUGH INFO)"))
        })
    }

    fn features(&self) -> CliResult<Vec<f64>> {
        let arr = self
            .required("features")?
            .as_array()
            .ok_or_else(|| self.error("features", "expected an array of numbers"))?;
        arr.iter()
            .enumerate()
            .map(|(i, v)| match v.as_f64() {
                Some(x) if x.is_finite() => Ok(x),
                _ => Err(self.error("features", format!("element {i} is not a finite number"))),
            })
            .collect()
    }

    fn item(&self, field: &str, v: &Value) -> CliResult<EvidenceItem> {
        let bad = || self.error(field, "evidence items are [page, sentence_index] pairs");
        match v.as_array().map(Vec::as_slice) {
            Some([page, idx]) => {
                let page = page.as_str().ok_or_else(bad)?;
                let idx = idx.as_u64().ok_or_else(bad)?;
                EvidenceItem::new(page, idx).map_err(|e| self.error(field, e))
            }
            _ => Err(bad()),
        }
    }

    fn items(&self, field: &str, v: &Value) -> CliResult<Vec<EvidenceItem>> {
        v.as_array()
            .ok_or_else(|| self.error(field, "expected an array of evidence items"))?
            .iter()
            .map(|item| self.item(field, item))
            .collect()
    }

    fn gold_evidence(&self) -> CliResult<Option<Vec<Vec<EvidenceItem>>>> {
        let Some(v) = self.optional("gold_evidence") else { return Ok(None) };
        let sets = v
            .as_array()
            .ok_or_else(|| self.error("gold_evidence", "expected an array of evidence sets"))?;
        sets.iter().map(|set| self.items("gold_evidence", set)).collect::<CliResult<_>>().map(Some)
    }

    fn retrieved(&self) -> CliResult<Option<Vec<EvidenceItem>>> {
        self.optional("retrieved").map(|v| self.items("retrieved", v)).transpose()
    }
}

/// Calls `f` on every non-blank line parsed as a JSON object.
fn for_each_object(
    path: &Path,
    policy: FieldPolicy,
    allowed: &[&str],
    mut f: impl FnMut(Line<'_>) -> CliResult<()>,
) -> CliResult<()> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let number = i + 1;
        let text = line.map_err(|e| CliError::io(path, e))?;
        if text.trim().is_empty() {
            continue;
        }
        let format_error = |msg: String| CliError::Format { path: path.to_path_buf(), line: number, msg };
        let object = match serde_json::from_str::<Value>(&text) {
            Ok(Value::Object(map)) => map,
            Ok(_) => return Err(format_error("expected a JSON object".into())),
            Err(e) => return Err(format_error(format!("invalid JSON: {e}"))),
        };
        if policy == FieldPolicy::Strict {
            if let Some(key) = object.keys().find(|k| !allowed.contains(&k.as_str())) {
                return Err(format_error(format!("unknown field `{key}`")));
            }
        }
        f(Line { path, number, object })?;
    }
    Ok(())
}

fn check_new_id(seen: &mut BTreeSet<u64>, line: &Line<'_>, id: u64) -> CliResult<()> {
    if seen.insert(id) {
        Ok(())
    } else {
        Err(line.error("claim_id", format!("duplicate claim_id {id}")))
    }
}

pub fn load_dataset(path: &Path, split: Split, policy: FieldPolicy) -> CliResult<Dataset> {
    let mut samples = Vec::new();
    let mut seen = BTreeSet::new();
    let mut dim = None;
    for_each_object(path, policy, &DATASET_FIELDS, |line| {
        let id = line.claim_id()?;
        check_new_id(&mut seen, &line, id)?;
        let features = line.features()?;
        match dim {
            None => dim = Some(features.len()),
            Some(d) if d != features.len() => {
                return Err(line.error("features", format!("expected {d} values, found {}", features.len())))
            }
            _ => {}
        }
        let mut sample = Sample::new(id, features, line.label("label")?);
        sample.gold_evidence = line.gold_evidence()?;
        sample.retrieved = line.retrieved()?;
        sample.to_prediction(sample.gold).validate().map_err(|e| line.error("retrieved", e))?;
        samples.push(sample);
        Ok(())
    })?;
    Dataset::new(split, samples).map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))
}

pub fn load_predictions(path: &Path, policy: FieldPolicy) -> CliResult<Vec<PredictionRecord>> {
    let mut records = Vec::new();
    let mut seen = BTreeSet::new();
    for_each_object(path, policy, &PREDICTION_FIELDS, |line| {
        let id = line.claim_id()?;
        check_new_id(&mut seen, &line, id)?;
        let record = PredictionRecord {
            claim_id: id,
            gold: line.label("gold")?,
            predicted: line.label("predicted")?,
            gold_evidence: line.gold_evidence()?,
            retrieved: line.retrieved()?,
        };
        record.validate().map_err(|e| line.error("retrieved", e))?;
        records.push(record);
        Ok(())
    })?;
    Ok(records)
}

#[derive(Serialize)]
struct ItemOut<'a>(&'a str, u64);

fn items_out(items: &[EvidenceItem]) -> Vec<ItemOut<'_>> {
    items.iter().map(|e| ItemOut(e.page(), e.sentence())).collect()
}

fn sets_out(sets: &[Vec<EvidenceItem>]) -> Vec<Vec<ItemOut<'_>>> {
    sets.iter().map(|s| items_out(s)).collect()
}

#[derive(Serialize)]
struct PredictionOut<'a> {
    claim_id: u64,
    gold: &'static str,
    predicted: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    gold_evidence: Option<Vec<Vec<ItemOut<'a>>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    retrieved: Option<Vec<ItemOut<'a>>>,
}

#[derive(Serialize)]
struct SampleOut<'a> {
    claim_id: u64,
    label: &'static str,
    features: &'a [f64],
    #[serde(skip_serializing_if = "Option::is_none")]
    gold_evidence: Option<Vec<Vec<ItemOut<'a>>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    retrieved: Option<Vec<ItemOut<'a>>>,
}

fn write_lines<T: Serialize>(path: &Path, lines: impl IntoIterator<Item = T>) -> CliResult<()> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = BufWriter::new(file);
    for line in lines {
        serde_json::to_writer(&mut w, &line).map_err(|e| CliError::io(path, e.into()))?;
        w.write_all(b"\n").map_err(|e| CliError::io(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Writes one prediction per line; absent evidence fields are omitted.
pub fn save_predictions(records: &[PredictionRecord], path: &Path) -> CliResult<()> {
    write_lines(
        path,
        records.iter().map(|r| PredictionOut {
            claim_id: r.claim_id,
            gold: r.gold.as_str(),
            predicted: r.predicted.as_str(),
            gold_evidence: r.gold_evidence.as_deref().map(sets_out),
            retrieved: r.retrieved.as_deref().map(items_out),
        }),
    )
}

pub fn save_dataset(dataset: &Dataset, path: &Path) -> CliResult<()> {
    write_lines(
        path,
        dataset.samples.iter().map(|s| SampleOut {
            claim_id: s.claim_id,
            label: s.gold.as_str(),
            features: &s.features,
            gold_evidence: s.gold_evidence.as_deref().map(sets_out),
            retrieved: s.retrieved.as_deref().map(items_out),
        }),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn file_with(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    fn format_error(err: CliError) -> (usize, String) {
        match err {
            CliError::Format { line, msg, .. } => (line, msg),
            other => panic!("expected a format error, got {other}"),
        }
    }

    #[test]
    fn empty_file_is_an_empty_dataset() {
        let f = file_with("");
        let d = load_dataset(f.path(), Split::Train, FieldPolicy::Strict).unwrap();
        assert!(d.is_empty());
        assert!(load_predictions(f.path(), FieldPolicy::Strict).unwrap().is_empty());
    }

    #[test]
    fn parses_labels_and_evidence() {
        let f = file_with(concat!(
            r#"{"claim_id": 1, "label": "SUPPORTS", "features": [1, 2.5], "gold_evidence": [[["A", 0]]], "retrieved": [["A", 0], ["B", 2]]}"#,
            "\n\n",
            r#"{"claim_id": 2, "label": "NOT ENOUGH INFO", "features": [0, 0], "gold_evidence": null}"#,
            "\n",
        ));
        let d = load_dataset(f.path(), Split::Dev, FieldPolicy::Strict).unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d.samples[0].gold, VerdictLabel::Supported);
        assert_eq!(d.samples[0].features, vec![1.0, 2.5]);
        assert_eq!(d.samples[0].retrieved.as_ref().unwrap()[1], EvidenceItem::new("B", 2).unwrap());
        assert_eq!(d.samples[1].gold, VerdictLabel::NotEnoughInfo);
        assert!(d.samples[1].gold_evidence.is_none());
    }

    #[test]
    fn errors_cite_line_and_field() {
        let ok = r#"{"claim_id": 1, "label": "SUPPORTS", "features": [1]}"#;
        let cases = [
            (r#"{"claim_id": 2, "label": "supports", "features": [1]}"#, "label"),
            (r#"{"claim_id": 1, "label": "SUPPORTS", "features": [1]}"#, "duplicate"),
            (r#"{"claim_id": 2, "label": "SUPPORTS", "features": [1, 2]}"#, "features"),
            (r#"{"claim_id": -2, "label": "SUPPORTS", "features": [1]}"#, "claim_id"),
            (r#"{"claim_id": 2, "label": "SUPPORTS"}"#, "features"),
            (r#"{"claim_id": 2, "label": "SUPPORTS", "features": [1], "extra": 0}"#, "extra"),
            (r#"{"claim_id": 2, "label": "SUPPORTS", "features": [1], "retrieved": [["A"]]}"#, "retrieved"),
            (r#"{"claim_id": 2, "label": "SUPPORTS", "features": [1], "retrieved": [["A", 0], ["A", 0]]}"#, "twice"),
            (r#"[1, 2]"#, "object"),
            (r#"{"claim_id": 2,"#, "invalid JSON"),
        ];
        for (bad, needle) in cases {
            let f = file_with(&format!("{ok}\n{bad}\n"));
            let (line, msg) = format_error(load_dataset(f.path(), Split::Train, FieldPolicy::Strict).unwrap_err());
            assert_eq!(line, 2, "{bad}");
            assert!(msg.contains(needle), "{msg:?} should mention {needle:?}");
        }
    }

    #[test]
    fn lenient_mode_ignores_unknown_fields() {
        let f = file_with(r#"{"claim_id": 3, "gold": "REFUTES", "predicted": "REFUTES", "score": 0.9}"#);
        assert!(load_predictions(f.path(), FieldPolicy::Strict).is_err());
        let r = load_predictions(f.path(), FieldPolicy::Lenient).unwrap();
        assert_eq!(r, vec![PredictionRecord::new(3, VerdictLabel::Refuted, VerdictLabel::Refuted)]);
    }

    #[test]
    fn missing_file_is_an_io_error() {
        let err = load_predictions(Path::new("/nonexistent/p.jsonl"), FieldPolicy::Strict).unwrap_err();
        assert!(matches!(err, CliError::Io { .. }));
    }

    #[test]
    fn empty_record_list_writes_empty_file() {
        let f = tempfile::NamedTempFile::new().unwrap();
        save_predictions(&[], f.path()).unwrap();
        assert_eq!(std::fs::read(f.path()).unwrap(), b"");
    }
}
