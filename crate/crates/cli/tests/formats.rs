use proptest::prelude::*;
use proptest::strategy::ValueTree;
use verdict_loss::{load_dataset, load_predictions, save_dataset, save_predictions, FieldPolicy};
use verdict_loss_core::{
    confusion_matrix, generate_synthetic, Dataset, EvidenceItem, PredictionRecord, Split, SyntheticConfig,
    VerdictLabel,
};

fn label() -> impl Strategy<Value = VerdictLabel> {
    (0usize..3).prop_map(|i| VerdictLabel::ALL[i])
}

fn item() -> impl Strategy<Value = EvidenceItem> {
    ("[A-Za-z_()\u{e9}\"\\\\ ]{1,12}", 0u64..1000).prop_map(|(p, s)| EvidenceItem::new(p, s).unwrap())
}

fn record() -> impl Strategy<Value = PredictionRecord> {
    (
        label(),
        label(),
        prop::option::of(prop::collection::vec(prop::collection::vec(item(), 1..4), 0..4)),
        prop::option::of(prop::collection::btree_set(item(), 0..6)),
    )
        .prop_map(|(gold, predicted, gold_evidence, retrieved)| PredictionRecord {
            claim_id: 0,
            gold,
            predicted,
            gold_evidence,
            retrieved: retrieved.map(|s| s.into_iter().collect()),
        })
}

fn records(max: usize) -> impl Strategy<Value = Vec<PredictionRecord>> {
    (prop::collection::vec(record(), 0..max), any::<u32>()).prop_map(|(mut v, offset)| {
        for (i, r) in v.iter_mut().enumerate() {
            r.claim_id = offset as u64 * 7 + i as u64 * 3;
        }
        v
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn predictions_round_trip(rs in records(40)) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.jsonl");
        save_predictions(&rs, &path).unwrap();
        prop_assert_eq!(load_predictions(&path, FieldPolicy::Strict).unwrap(), rs);
    }

    #[test]
    fn dataset_features_round_trip_bit_exactly(
        features in prop::collection::vec(prop::collection::vec(any::<f64>().prop_filter("finite", |v| v.is_finite()), 3), 1..30),
        labels in prop::collection::vec(label(), 30),
    ) {
        let samples = features
            .into_iter()
            .zip(labels)
            .enumerate()
            .map(|(i, (f, l))| verdict_loss_core::Sample::new(i as u64, f, l))
            .collect();
        let d = Dataset::new(Split::Train, samples).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.jsonl");
        save_dataset(&d, &path).unwrap();
        let back = load_dataset(&path, Split::Train, FieldPolicy::Strict).unwrap();
        for (a, b) in d.samples.iter().zip(&back.samples) {
            let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
            prop_assert_eq!(bits(&a.features), bits(&b.features));
        }
        prop_assert_eq!(back, d);
    }
}

#[test]
fn thousand_record_round_trip() {
    let mut runner = proptest::test_runner::TestRunner::deterministic();
    let rs = prop::collection::vec(record(), 1000)
        .new_tree(&mut runner)
        .unwrap()
        .current()
        .into_iter()
        .enumerate()
        .map(|(i, r)| PredictionRecord { claim_id: i as u64, ..r })
        .collect::<Vec<_>>();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.jsonl");
    save_predictions(&rs, &path).unwrap();
    assert_eq!(load_predictions(&path, FieldPolicy::Strict).unwrap(), rs);
}

#[test]
fn every_label_pair_survives_reload() {
    let mut rs = Vec::new();
    for (i, (g, p)) in VerdictLabel::ALL
        .iter()
        .flat_map(|&g| VerdictLabel::ALL.iter().map(move |&p| (g, p)))
        .enumerate()
    {
        for j in 0..=i {
            rs.push(PredictionRecord::new((i * 100 + j) as u64, g, p));
        }
    }
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.jsonl");
    save_predictions(&rs, &path).unwrap();
    let back = load_predictions(&path, FieldPolicy::Strict).unwrap();
    assert_eq!(confusion_matrix(&back).unwrap(), confusion_matrix(&rs).unwrap());
}

#[test]
fn synthetic_splits_round_trip() {
    let config = SyntheticConfig::at_scale(0.005).unwrap();
    let (train, dev) = generate_synthetic(&config).unwrap();
    let dir = tempfile::tempdir().unwrap();
    for (d, split) in [(&train, Split::Train), (&dev, Split::Dev)] {
        let path = dir.path().join("d.jsonl");
        save_dataset(d, &path).unwrap();
        assert_eq!(&load_dataset(&path, split, FieldPolicy::Strict).unwrap(), d);
    }
}

#[test]
fn label_spelling_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.jsonl");
    std::fs::write(
        &path,
        "{\"claim_id\":1,\"gold\":\"SUPPORTS\",\"predicted\":\"NOT ENOUGH INFO\"}\n{\"claim_id\":2,\"gold\":\"REFUTES\",\"predicted\":\"SUPPORTS\"}\n",
    )
    .unwrap();
    let rs = load_predictions(&path, FieldPolicy::Strict).unwrap();
    assert_eq!(rs[0].gold, VerdictLabel::Supported);
    assert_eq!(rs[0].predicted, VerdictLabel::NotEnoughInfo);
    assert_eq!(rs[1].gold, VerdictLabel::Refuted);
    std::fs::write(&path, "{\"claim_id\":1,\"gold\":\"Supports\",\"predicted\":\"SUPPORTS\"}\n").unwrap();
    assert!(load_predictions(&path, FieldPolicy::Strict).is_err());
}
