use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::cv::{stratified_kfold, CvResult, Grouping};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::rng::substream;

/// One hyperparameter assignment, keyed by config field name.
pub type Candidate = BTreeMap<String, Value>;

fn default_folds() -> usize {
    5
}

/// Finite grid of candidate values per hyperparameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchSpace {
    pub params: BTreeMap<String, Vec<Value>>,
    /// Number of distinct candidates to sample; `None` or anything at least
    /// the grid size evaluates the whole grid.
    #[serde(default)]
    pub n_candidates: Option<usize>,
    #[serde(default = "default_folds")]
    pub folds: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub grouping: Grouping,
}

impl SearchSpace {
    pub fn new(params: BTreeMap<String, Vec<Value>>) -> Self {
        SearchSpace { params, n_candidates: None, folds: default_folds(), seed: 0, grouping: Grouping::None }
    }

    pub fn size(&self) -> usize {
        self.params.values().map(Vec::len).product()
    }

    pub fn validate(&self) -> Result<()> {
        if let Some((name, _)) = self.params.iter().find(|(_, v)| v.is_empty()) {
            return Err(Error::param("params", format!("`{name}` has no candidate values")));
        }
        if self.n_candidates == Some(0) {
            return Err(Error::param("n_candidates", "must be at least 1"));
        }
        if self.folds < 2 {
            return Err(Error::param("folds", format!("must be at least 2, got {}", self.folds)));
        }
        Ok(())
    }

    /// Grid point `index` in mixed radix, the last parameter varying fastest.
    pub fn candidate(&self, mut index: usize) -> Candidate {
        let mut out = Candidate::new();
        for (name, values) in self.params.iter().rev() {
            out.insert(name.clone(), values[index % values.len()].clone());
            index /= values.len();
        }
        out
    }

    /// Grid indices to evaluate, in evaluation order.
    pub fn sample_indices(&self) -> Vec<usize> {
        let size = self.size();
        match self.n_candidates {
            Some(n) if n < size => sample(&mut substream(self.seed, "search-candidates"), size, n).into_vec(),
            _ => (0..size).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateResult {
    /// Position in the grid.
    pub index: usize,
    pub params: Candidate,
    pub cv: CvResult,
    /// 1 is best; equal means keep evaluation order.
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub space_size: usize,
    pub folds: usize,
    pub n_fits: usize,
    pub candidates: Vec<CandidateResult>,
    /// Position of the winner in `candidates`.
    pub best: usize,
}

impl SearchResult {
    pub fn best(&self) -> &CandidateResult {
        &self.candidates[self.best]
    }
}

/// Evaluate sampled candidates with stratified k-fold CV and pick the best
/// mean accuracy; ties go to the candidate evaluated first.
///
/// `fit_score(candidate, train, test)` fits one model and returns its test
/// accuracy. All candidate × fold pairs run as one parallel batch under
/// `exec`, reduced in order.
pub fn randomized_search<F>(space: &SearchSpace, data: &Dataset, exec: Exec, fit_score: F) -> Result<SearchResult>
where
    F: Fn(&Candidate, &Dataset, &Dataset) -> Result<f64> + Sync,
{
    space.validate()?;
    let folds = stratified_kfold(data, space.folds, space.seed, space.grouping)?;
    let indices = space.sample_indices();
    let candidates: Vec<Candidate> = indices.iter().map(|&i| space.candidate(i)).collect();
    let k = folds.len();
    let fits = AtomicUsize::new(0);
    let scores = exec.try_map(candidates.len() * k, |job| {
        let (c, f) = (job / k, job % k);
        let score = fit_score(&candidates[c], &data.subset(&folds[f].train), &data.subset(&folds[f].test))?;
        fits.fetch_add(1, Ordering::Relaxed);
        Ok::<_, Error>(score)
    })?;
    let mut results: Vec<CandidateResult> = candidates
        .into_iter()
        .zip(&indices)
        .enumerate()
        .map(|(c, (params, &index))| CandidateResult {
            index,
            params,
            cv: CvResult::from_scores(scores[c * k..(c + 1) * k].to_vec()),
            rank: 0,
        })
        .collect();
    let mut order: Vec<usize> = (0..results.len()).collect();
    order.sort_by(|&a, &b| results[b].cv.mean.total_cmp(&results[a].cv.mean).then(a.cmp(&b)));
    for (r, &pos) in order.iter().enumerate() {
        results[pos].rank = r + 1;
    }
    Ok(SearchResult {
        space_size: space.size(),
        folds: k,
        n_fits: fits.into_inner(),
        candidates: results,
        best: order[0],
    })
}

/// Overlay a candidate onto a base config's JSON form.
pub fn apply_candidate(base: &Value, candidate: &Candidate) -> Result<Value> {
    let mut merged = base.clone();
    let obj = merged.as_object_mut().ok_or_else(|| Error::Document("base config is not an object".into()))?;
    for (k, v) in candidate {
        obj.insert(k.clone(), v.clone());
    }
    Ok(merged)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::LabelMap;
    use crate::tensor::Tensor;
    use serde_json::json;

    fn data() -> Dataset {
        let samples = (0..20).map(|i| Tensor::vector(vec![i as f64]).unwrap()).collect();
        Dataset::new(samples, (0..20).map(|i| i % 2).collect(), vec![1; 20], LabelMap::new(["a", "b"]).unwrap())
            .unwrap()
    }

    #[test]
    fn enumerates_the_grid_in_mixed_radix() {
        let space = SearchSpace::new(BTreeMap::from([
            ("a".to_string(), vec![json!(1), json!(2)]),
            ("b".to_string(), vec![json!("x"), json!("y"), json!("z")]),
        ]));
        assert_eq!(space.size(), 6);
        assert_eq!(space.candidate(0), Candidate::from([("a".into(), json!(1)), ("b".into(), json!("x"))]));
        assert_eq!(space.candidate(5), Candidate::from([("a".into(), json!(2)), ("b".into(), json!("z"))]));
    }

    #[test]
    fn samples_without_replacement_and_caps_at_grid_size() {
        let mut space = SearchSpace::new(BTreeMap::from([("a".to_string(), (0..10).map(|i| json!(i)).collect())]));
        space.n_candidates = Some(4);
        let mut s = space.sample_indices();
        assert_eq!(s, space.sample_indices());
        s.sort_unstable();
        s.dedup();
        assert_eq!(s.len(), 4);
        space.n_candidates = Some(50);
        assert_eq!(space.sample_indices(), (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn counts_fits_and_picks_the_better_candidate() {
        let space = SearchSpace::new(BTreeMap::from([("q".to_string(), vec![json!(0.2), json!(0.9), json!(0.5)])]));
        let r = randomized_search(&space, &data(), Exec::Parallel { jobs: 3 }, |c, _, _| Ok(c["q"].as_f64().unwrap()))
            .unwrap();
        assert_eq!(r.n_fits, 15);
        assert_eq!(r.best().params["q"], json!(0.9));
        assert_eq!(r.best().rank, 1);
    }

    #[test]
    fn single_point_space() {
        let space = SearchSpace::new(BTreeMap::new());
        let r = randomized_search(&space, &data(), Exec::Sequential, |_, _, _| Ok(0.5)).unwrap();
        assert_eq!((r.candidates.len(), r.n_fits), (1, 5));
        assert!(r.best().params.is_empty());
    }

    #[test]
    fn applies_candidate_over_base() {
        let merged =
            apply_candidate(&json!({"C": 1.0, "k": 3}), &Candidate::from([("C".into(), json!(10.0))])).unwrap();
        assert_eq!(merged, json!({"C": 10.0, "k": 3}));
    }
}
