use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::classifier::{Classifier, Learner};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::rng::substream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Grouping {
    #[default]
    None,
    /// Every subject's samples land in a single test fold.
    BySubject,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// `k` train/test splits with disjoint test sets covering every sample.
///
/// Ungrouped folds are stratified: each class is shuffled and dealt
/// round-robin, and the dealing position carries over from one class to the
/// next, so per-class fold counts differ by at most one and fold sizes stay
/// balanced. Grouped folds deal whole subjects, largest first.
pub fn stratified_kfold(data: &Dataset, k: usize, seed: u64, grouping: Grouping) -> Result<Vec<Fold>> {
    if k < 2 {
        return Err(Error::param("folds", format!("must be at least 2, got {k}")));
    }
    if data.is_empty() {
        return Err(Error::EmptyInput("dataset"));
    }
    let mut rng = substream(seed, "cv-folds");
    let mut fold_of = vec![0usize; data.len()];
    match grouping {
        Grouping::None => {
            let mut by_class = vec![Vec::new(); data.n_classes()];
            for (i, &l) in data.labels.iter().enumerate() {
                by_class[l].push(i);
            }
            for (c, members) in by_class.iter().enumerate() {
                if !members.is_empty() && members.len() < k {
                    return Err(Error::ClassTooSmall {
                        class: data.classes.class_name(c),
                        count: members.len(),
                        folds: k,
                    });
                }
            }
            let mut next = 0;
            for members in &mut by_class {
                members.shuffle(&mut rng);
                for &i in members.iter() {
                    fold_of[i] = next;
                    next = (next + 1) % k;
                }
            }
        }
        Grouping::BySubject => {
            let mut subjects = data.distinct_subjects();
            if subjects.len() < k {
                return Err(Error::Partition(format!("{} subjects cannot fill {k} folds", subjects.len())));
            }
            subjects.shuffle(&mut rng);
            let size = |s: u32| data.subjects.iter().filter(|&&x| x == s).count();
            subjects.sort_by_key(|&s| std::cmp::Reverse(size(s)));
            for (pos, s) in subjects.iter().enumerate() {
                for (i, _) in data.subjects.iter().enumerate().filter(|(_, &x)| x == *s) {
                    fold_of[i] = pos % k;
                }
            }
        }
    }
    Ok((0..k)
        .map(|f| {
            let (test, train) = (0..data.len()).partition(|&i| fold_of[i] == f);
            Fold { train, test }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub fold_accuracies: Vec<f64>,
    pub mean: f64,
    /// Population standard deviation over folds.
    pub std: f64,
}

impl CvResult {
    pub fn from_scores(fold_accuracies: Vec<f64>) -> Self {
        let n = fold_accuracies.len().max(1) as f64;
        let mean = fold_accuracies.iter().sum::<f64>() / n;
        let std = (fold_accuracies.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / n).sqrt();
        CvResult { fold_accuracies, mean, std }
    }
}

pub fn accuracy<M: Classifier + ?Sized>(model: &M, data: &Dataset, exec: Exec) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::EmptyInput("evaluation set"));
    }
    let pred = model.predict_batch(&data.samples, exec)?;
    Ok(pred.iter().zip(&data.labels).filter(|(p, t)| p == t).count() as f64 / data.len() as f64)
}

/// Fit on each fold's training part and score accuracy on its test part.
/// Folds run in parallel under `exec`; scores are kept in fold order.
pub fn cross_validate<L: Learner>(learner: &L, data: &Dataset, folds: &[Fold], exec: Exec) -> Result<CvResult> {
    let scores = exec.try_map(folds.len(), |f| {
        let model = learner.fit(&data.subset(&folds[f].train), Exec::Sequential)?;
        accuracy(&model, &data.subset(&folds[f].test), Exec::Sequential)
    })?;
    Ok(CvResult::from_scores(scores))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::LabelMap;
    use crate::tensor::Tensor;

    fn dataset(labels: Vec<usize>, subjects: Vec<u32>) -> Dataset {
        let samples = (0..labels.len()).map(|i| Tensor::vector(vec![i as f64]).unwrap()).collect();
        let n = labels.iter().max().unwrap() + 1;
        Dataset::new(samples, labels, subjects, LabelMap::new((0..n).map(|c| format!("c{c}"))).unwrap()).unwrap()
    }

    #[test]
    fn balanced_two_class_gives_one_of_each_per_fold() {
        let d = dataset((0..10).map(|i| i % 2).collect(), vec![1; 10]);
        let folds = stratified_kfold(&d, 5, 3, Grouping::None).unwrap();
        for f in &folds {
            let mut counts = [0; 2];
            f.test.iter().for_each(|&i| counts[d.labels[i]] += 1);
            assert_eq!(counts, [1, 1]);
            assert_eq!(f.train.len(), 8);
        }
    }

    #[test]
    fn folds_partition_the_index_set() {
        let d = dataset((0..37).map(|i| i % 3).collect(), vec![1; 37]);
        let folds = stratified_kfold(&d, 4, 9, Grouping::None).unwrap();
        let mut seen = [0; 37];
        for f in &folds {
            f.test.iter().for_each(|&i| seen[i] += 1);
            assert_eq!(f.train.len() + f.test.len(), 37);
        }
        assert!(seen.iter().all(|&c| c == 1));
    }

    #[test]
    fn by_subject_keeps_subjects_whole() {
        let subjects: Vec<u32> = (0..150).map(|i| (i % 15) as u32 + 1).collect();
        let d = dataset((0..150).map(|i| i % 6).collect(), subjects.clone());
        let folds = stratified_kfold(&d, 5, 1, Grouping::BySubject).unwrap();
        for f in &folds {
            let mut s: Vec<u32> = f.test.iter().map(|&i| subjects[i]).collect();
            s.sort_unstable();
            s.dedup();
            assert_eq!(s.len(), 3);
            assert!(f.train.iter().all(|&i| !s.contains(&subjects[i])));
        }
    }

    #[test]
    fn small_class_is_named() {
        let mut labels = vec![0; 10];
        labels[0] = 1;
        let d = dataset(labels, vec![1; 10]);
        match stratified_kfold(&d, 5, 0, Grouping::None) {
            Err(Error::ClassTooSmall { class, count, folds }) => {
                assert_eq!((class.as_str(), count, folds), ("c1", 1, 5));
            }
            other => panic!("{other:?}"),
        }
    }
}
