use std::collections::BTreeMap;

use tensorhar::eval::{accuracy, compute_report};
use tensorhar::io::{load_custom_csv_files, load_model, load_uci_har, save_model, CsvOptions, ModelDocument};
use tensorhar::io::{Representation, Split};
use tensorhar::models::{ModelFamily, ModelSpec};
use tensorhar::signal::{StandardizeMode, Standardizer};
use tensorhar::synth::{write_custom_csv_set, write_uci_layout, SynthCsvConfig, SynthUciConfig, AGE_GROUPS};
use tensorhar::{Classifier, Dataset, Exec};

fn uci() -> (tempfile::TempDir, Dataset, Dataset, Dataset, Dataset) {
    let dir = tempfile::tempdir().unwrap();
    write_uci_layout(dir.path(), &SynthUciConfig { seed: 3, ..SynthUciConfig::default() }).unwrap();
    let train_x = load_uci_har(dir.path(), Split::Train, Representation::FeatureVectors).unwrap();
    let test_x = load_uci_har(dir.path(), Split::Test, Representation::FeatureVectors).unwrap();
    let train_t = load_uci_har(dir.path(), Split::Train, Representation::RawTensors).unwrap();
    let test_t = load_uci_har(dir.path(), Split::Test, Representation::RawTensors).unwrap();
    (dir, train_x, test_x, train_t, test_t)
}

#[test]
fn synthetic_uci_layout_loads_in_both_representations() {
    let (_dir, train_x, test_x, train_t, test_t) = uci();
    assert_eq!(train_x.len(), 240);
    assert_eq!(test_x.len(), 90);
    assert_eq!(train_x.sample_shape(), Some(&[561][..]));
    assert_eq!(train_t.sample_shape(), Some(&[128, 9][..]));
    assert_eq!(train_x.labels, train_t.labels);
    assert_eq!(test_x.subjects, test_t.subjects);
    assert_eq!(train_x.class_counts(), vec![40; 6]);
}

#[test]
fn every_family_learns_the_synthetic_task_and_round_trips() {
    let (dir, train_x, test_x, train_t, test_t) = uci();
    let std = Standardizer::fit_dataset(&train_t, StandardizeMode::PerLastMode, Exec::Auto).unwrap();
    let (train_t, test_t) = (std.transform_dataset(&train_t).unwrap(), std.transform_dataset(&test_t).unwrap());
    for family in ModelFamily::ALL {
        let (train, test) = if family.prefers_tensors() { (&train_t, &test_t) } else { (&train_x, &test_x) };
        let spec = ModelSpec::default_for(family);
        let model = spec.fit(train, Exec::Auto).unwrap();
        let acc = accuracy(&model, test, Exec::Auto).unwrap();
        assert!(acc > 0.8, "{family}: {acc}");

        let path = dir.path().join(format!("{family}.json"));
        save_model(&path, &ModelDocument::new(model.clone(), serde_json::json!({"seed": 0}))).unwrap();
        let loaded = load_model(&path).unwrap().model;
        for x in test.samples.iter().take(30) {
            assert_eq!(model.predict_scores(x).unwrap(), loaded.predict_scores(x).unwrap());
        }
    }
}

#[test]
fn custom_csv_set_matches_the_age_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = SynthCsvConfig { segments_per_activity: 1, ..SynthCsvConfig::default() };
    let paths = write_custom_csv_set(dir.path(), &cfg).unwrap();
    let out = load_custom_csv_files(&paths, &CsvOptions::default()).unwrap();
    assert_eq!(out.age_groups.len(), 15);
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for g in out.age_groups.values() {
        *counts.entry(g.as_str()).or_default() += 1;
    }
    for (group, n) in AGE_GROUPS {
        assert_eq!(counts[group], n);
        assert!(
            (n as f64 / 15.0 * 100.0 - [20.0, 26.7, 33.3, 20.0][AGE_GROUPS.iter().position(|g| g.0 == group).unwrap()])
                .abs()
                < 0.05
        );
    }
    assert_eq!(out.dataset.distinct_subjects().len(), 15);
    assert!(out.dataset.len() > 15 * 4);
    assert!(out.dropped_windows > 0);
}

#[test]
fn report_on_perfect_predictions_has_full_recall() {
    let (_dir, _, test_x, _, _) = uci();
    let r = compute_report(&test_x.labels, &test_x.labels, &test_x.classes).unwrap();
    assert_eq!(r.accuracy, 1.0);
    assert_eq!(r.per_class[0].recall, 1.0);
}
