use proptest::prelude::*;
use tensorhar::baselines::{train_logreg, KnnConfig, KnnLearner, LogRegConfig};
use tensorhar::eval::{compute_report, cross_validate, stratified_kfold, Grouping};
use tensorhar::models::{ModelFamily, ModelSpec};
use tensorhar::stm::{train_stm_binary, StmConfig};
use tensorhar::svm::{train_binary_svm, SvmConfig};
use tensorhar::{Classifier, Dataset, Exec, LabelMap, Learner, Tensor};

fn binary() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<f64>)> {
    (4usize..24, 1usize..5).prop_flat_map(|(n, d)| {
        (prop::collection::vec(prop::collection::vec(-3.0f64..3.0, d), n), prop::collection::vec(any::<bool>(), n))
            .prop_filter("both classes", |(_, y)| y.iter().any(|&b| b) && y.iter().any(|&b| !b))
            .prop_map(|(mut xs, y)| {
                let y: Vec<f64> = y.into_iter().map(|b| if b { 1.0 } else { -1.0 }).collect();
                for (x, l) in xs.iter_mut().zip(&y) {
                    x[0] += l;
                }
                (xs, y)
            })
    })
}

fn labels(n_classes: usize) -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(0..n_classes, 1..80)
}

fn classes(n: usize) -> LabelMap {
    LabelMap::new((0..n).map(|c| format!("c{c}"))).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn svm_satisfies_kkt((xs, y) in binary(), c in prop::sample::select(vec![0.1, 1.0, 10.0])) {
        let rows: Vec<&[f64]> = xs.iter().map(Vec::as_slice).collect();
        let m = train_binary_svm(&rows, &y, &SvmConfig::linear(c)).unwrap();
        let mut alpha = vec![0.0; xs.len()];
        for (&i, &a) in m.support_indices.iter().zip(&m.alphas) {
            alpha[i] = a;
        }
        let balance: f64 = alpha.iter().zip(&y).map(|(a, l)| a * l).sum();
        prop_assert!(balance.abs() <= 1e-8);
        let tol = 1e-3;
        for i in 0..xs.len() {
            let margin = y[i] * m.decision_value(rows[i]).unwrap();
            prop_assert!(alpha[i] >= 0.0 && alpha[i] <= c);
            if alpha[i] == 0.0 {
                prop_assert!(margin >= 1.0 - tol);
            } else if alpha[i] >= c {
                prop_assert!(margin <= 1.0 + tol);
            } else {
                prop_assert!((margin - 1.0).abs() <= tol, "free alpha {} margin {margin} ({:?})", alpha[i], m.stats);
            }
        }
    }

    /// Scaling by a power of two is exact in floating point, so the whole
    /// solver trajectory scales and the labels cannot move.
    #[test]
    fn feature_scaling_keeps_labels((xs, y) in binary(), k in prop::sample::select(vec![-2i32, -1, 1, 2])) {
        let s = 2f64.powi(k);
        let rows: Vec<&[f64]> = xs.iter().map(Vec::as_slice).collect();
        let scaled: Vec<Vec<f64>> = xs.iter().map(|x| x.iter().map(|v| v * s).collect()).collect();
        let srows: Vec<&[f64]> = scaled.iter().map(Vec::as_slice).collect();
        let a = train_binary_svm(&rows, &y, &SvmConfig::linear(1.0)).unwrap();
        let b = train_binary_svm(&srows, &y, &SvmConfig::linear(1.0 / (s * s))).unwrap();
        for (r, sr) in rows.iter().zip(&srows) {
            prop_assert_eq!(a.predict(r).unwrap(), b.predict(sr).unwrap());
        }
    }

    #[test]
    fn order_one_stm_is_the_svm((xs, y) in binary()) {
        let rows: Vec<&[f64]> = xs.iter().map(Vec::as_slice).collect();
        let svm = train_binary_svm(&rows, &y, &SvmConfig::linear(1.0)).unwrap();
        let ts: Vec<Tensor> = xs.iter().map(|x| Tensor::vector(x.clone()).unwrap()).collect();
        let refs: Vec<&Tensor> = ts.iter().collect();
        let stm = train_stm_binary(&refs, &y, &StmConfig::default()).unwrap();
        prop_assert!(stm.converged);
        for (r, t) in rows.iter().zip(&ts) {
            prop_assert_eq!(svm.predict(r).unwrap(), stm.predict(t).unwrap().label);
        }
    }

    #[test]
    fn logreg_loss_never_increases((xs, y) in binary()) {
        let rows: Vec<&[f64]> = xs.iter().map(Vec::as_slice).collect();
        let labels: Vec<usize> = y.iter().map(|&l| usize::from(l > 0.0)).collect();
        let m = train_logreg(&rows, &labels, 2, &LogRegConfig::default()).unwrap();
        for w in m.loss_trace.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-12);
        }
    }

    #[test]
    fn one_nn_has_zero_training_error((xs, y) in binary()) {
        let mut xs = xs;
        for (i, x) in xs.iter_mut().enumerate() {
            x[0] += i as f64 * 1e-3;
        }
        let data = Dataset::new(
            xs.iter().map(|x| Tensor::vector(x.clone()).unwrap()).collect(),
            y.iter().map(|&l| usize::from(l > 0.0)).collect(),
            vec![0; xs.len()],
            classes(2),
        )
        .unwrap();
        let model = KnnLearner { config: KnnConfig { k: 1, ..KnnConfig::default() } }.fit(&data, Exec::Sequential).unwrap();
        prop_assert_eq!(model.predict_batch(&data.samples, Exec::Sequential).unwrap(), data.labels);
    }

    #[test]
    fn perfect_report_and_weighted_recall(y in labels(4), pred in labels(4)) {
        let r = compute_report(&y, &y, &classes(4)).unwrap();
        prop_assert_eq!(r.accuracy, 1.0);
        let n = y.len().min(pred.len());
        let r = compute_report(&y[..n], &pred[..n], &classes(4)).unwrap();
        prop_assert!((r.weighted_avg.recall - r.accuracy).abs() <= 1e-12);
    }

    #[test]
    fn metrics_ignore_sample_order(pairs in prop::collection::vec((0usize..3, 0usize..3), 1..60), seed in any::<u64>()) {
        let (y, p): (Vec<usize>, Vec<usize>) = pairs.iter().copied().unzip();
        let mut order: Vec<usize> = (0..pairs.len()).collect();
        order.sort_by_key(|&i| (i as u64).wrapping_mul(seed | 1).rotate_left(17));
        let ys: Vec<usize> = order.iter().map(|&i| y[i]).collect();
        let ps: Vec<usize> = order.iter().map(|&i| p[i]).collect();
        let a = compute_report(&y, &p, &classes(3)).unwrap();
        let b = compute_report(&ys, &ps, &classes(3)).unwrap();
        prop_assert_eq!(a.confusion, b.confusion);
        prop_assert_eq!(a.per_class, b.per_class);
    }
}

#[test]
fn cv_mean_ignores_fold_order() {
    let samples: Vec<Tensor> = (0..40).map(|i| Tensor::vector(vec![i as f64, (i % 3) as f64]).unwrap()).collect();
    let labels: Vec<usize> = (0..40).map(|i| usize::from(i >= 20)).collect();
    let data = Dataset::new(samples, labels, vec![0; 40], classes(2)).unwrap();
    let mut folds = stratified_kfold(&data, 5, 3, Grouping::None).unwrap();
    let spec = ModelSpec::default_for(ModelFamily::Knn);
    let a = cross_validate(&spec, &data, &folds, Exec::Auto).unwrap();
    folds.reverse();
    let b = cross_validate(&spec, &data, &folds, Exec::Auto).unwrap();
    assert!((a.mean - b.mean).abs() <= 1e-12);
}
