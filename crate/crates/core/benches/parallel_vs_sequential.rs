use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use tensorhar::io::{load_uci_har, Representation, Split};
use tensorhar::models::{ModelFamily, ModelSpec};
use tensorhar::synth::{write_uci_layout, SynthUciConfig};
use tensorhar::{Classifier, Dataset, Exec};

fn synthetic() -> (Dataset, Dataset) {
    let dir = tempfile::tempdir().expect("tempdir");
    write_uci_layout(dir.path(), &SynthUciConfig { seed: 7, ..SynthUciConfig::default() }).expect("synthetic data");
    let train = load_uci_har(dir.path(), Split::Train, Representation::FeatureVectors).expect("train split");
    let test = load_uci_har(dir.path(), Split::Test, Representation::FeatureVectors).expect("test split");
    (train, test)
}

fn policies() -> [(&'static str, Exec); 2] {
    [("sequential", Exec::Sequential), ("parallel", Exec::Parallel { jobs: 0 })]
}

fn fit(c: &mut Criterion) {
    let (train, _) = synthetic();
    let mut group = c.benchmark_group("fit");
    group.sample_size(10);
    for family in [ModelFamily::Svm, ModelFamily::Forest] {
        let spec = ModelSpec::default_for(family);
        for (name, exec) in policies() {
            group.bench_with_input(BenchmarkId::new(family.as_str(), name), &exec, |b, &exec| {
                b.iter(|| spec.fit(&train, exec).expect("fit"))
            });
        }
    }
    group.finish();
}

fn predict(c: &mut Criterion) {
    let (train, test) = synthetic();
    let mut group = c.benchmark_group("predict_batch");
    for family in [ModelFamily::Svm, ModelFamily::Knn] {
        let model = ModelSpec::default_for(family).fit(&train, Exec::Auto).expect("fit");
        for (name, exec) in policies() {
            group.bench_with_input(BenchmarkId::new(family.as_str(), name), &exec, |b, &exec| {
                b.iter(|| model.predict_batch(&test.samples, exec).expect("predict"))
            });
        }
    }
    group.finish();
}

criterion_group!(benches, fit, predict);
criterion_main!(benches);
