//! Labelled sample collections.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Activity names of the six-class task, in class-id order.
pub const HAR6_NAMES: [&str; 6] =
    ["walking", "walking_upstairs", "walking_downstairs", "sitting", "standing", "laying"];

/// Bijection between class names and contiguous ids `0..n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LabelMap {
    names: Vec<String>,
}

fn normalize(token: &str) -> String {
    token.trim().to_ascii_lowercase().replace(['-', ' '], "_")
}

impl LabelMap {
    pub fn new<S: Into<String>>(names: impl IntoIterator<Item = S>) -> Result<Self> {
        let names: Vec<String> = names.into_iter().map(|s| normalize(&s.into())).collect();
        if names.is_empty() {
            return Err(Error::EmptyInput("label map"));
        }
        for (i, n) in names.iter().enumerate() {
            if names[..i].contains(n) {
                return Err(Error::param("labels", format!("duplicate class name `{n}`")));
            }
        }
        Ok(LabelMap { names })
    }

    /// Six activities, ids 0..=5.
    pub fn har6() -> Self {
        LabelMap { names: HAR6_NAMES.iter().map(|s| s.to_string()).collect() }
    }

    /// Locomotion subset: walking → 0, upstairs → 1, downstairs → 2.
    pub fn har3() -> Self {
        LabelMap { names: HAR6_NAMES[..3].iter().map(|s| s.to_string()).collect() }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, id: usize) -> Option<&str> {
        self.names.get(id).map(String::as_str)
    }

    pub fn id(&self, name: &str) -> Option<usize> {
        let key = normalize(name);
        let key = match key.as_str() {
            "lying" => "laying".to_string(),
            "upstairs" => "walking_upstairs".to_string(),
            "downstairs" => "walking_downstairs".to_string(),
            _ => key,
        };
        self.names.iter().position(|n| *n == key)
    }

    /// Resolve a label token: a class name or a numeric id.
    pub fn parse(&self, token: &str) -> Result<usize> {
        if let Some(id) = self.id(token) {
            return Ok(id);
        }
        match token.trim().parse::<usize>() {
            Ok(id) if id < self.len() => Ok(id),
            _ => Err(Error::UnknownLabel(token.trim().to_string())),
        }
    }

    pub fn class_name(&self, id: usize) -> String {
        self.name(id).map_or_else(|| id.to_string(), str::to_string)
    }
}

/// Samples with class ids and participant ids. Feature vectors are order-1
/// tensors; raw windows are order-2 `(T, C)` tensors.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub samples: Vec<Tensor>,
    pub labels: Vec<usize>,
    pub subjects: Vec<u32>,
    pub classes: LabelMap,
}

impl Dataset {
    pub fn new(samples: Vec<Tensor>, labels: Vec<usize>, subjects: Vec<u32>, classes: LabelMap) -> Result<Self> {
        if labels.len() != samples.len() {
            return Err(Error::DimensionMismatch { expected: samples.len(), got: labels.len() });
        }
        if subjects.len() != samples.len() {
            return Err(Error::DimensionMismatch { expected: samples.len(), got: subjects.len() });
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= classes.len()) {
            return Err(Error::UnknownLabel(bad.to_string()));
        }
        if let Some(first) = samples.first() {
            if let Some(s) = samples.iter().find(|s| s.shape() != first.shape()) {
                return Err(Error::ShapeMismatch { expected: first.shape().to_vec(), got: s.shape().to_vec() });
            }
        }
        Ok(Dataset { samples, labels, subjects, classes })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn sample_shape(&self) -> Option<&[usize]> {
        self.samples.first().map(Tensor::shape)
    }

    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            samples: indices.iter().map(|&i| self.samples[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            subjects: indices.iter().map(|&i| self.subjects[i]).collect(),
            classes: self.classes.clone(),
        }
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes()];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Same samples viewed as flattened order-1 tensors.
    pub fn flattened(&self) -> Dataset {
        Dataset {
            samples: self
                .samples
                .iter()
                .map(|s| Tensor::new(vec![s.len()], s.data().to_vec()).expect("non-empty sample"))
                .collect(),
            labels: self.labels.clone(),
            subjects: self.subjects.clone(),
            classes: self.classes.clone(),
        }
    }

    /// Keep only samples whose class is in `keep`, remapping ids to positions in `keep`.
    pub fn restrict_classes(&self, keep: &[usize]) -> Result<Dataset> {
        let names: Vec<String> = keep.iter().map(|&c| self.classes.class_name(c)).collect();
        let classes = LabelMap::new(names)?;
        let mut idx = Vec::new();
        let mut labels = Vec::new();
        for (i, l) in self.labels.iter().enumerate() {
            if let Some(pos) = keep.iter().position(|k| k == l) {
                idx.push(i);
                labels.push(pos);
            }
        }
        let mut out = self.subset(&idx);
        out.labels = labels;
        out.classes = classes;
        Ok(out)
    }

    pub fn distinct_subjects(&self) -> Vec<u32> {
        let mut s = self.subjects.clone();
        s.sort_unstable();
        s.dedup();
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn label_map_is_a_bijection() {
        let map = LabelMap::har6();
        for id in 0..map.len() {
            assert_eq!(map.id(map.name(id).unwrap()), Some(id));
        }
        assert_eq!(map.parse("WALKING_UPSTAIRS").unwrap(), 1);
        assert_eq!(map.parse("lying").unwrap(), 5);
        assert_eq!(map.parse("3").unwrap(), 3);
        assert!(matches!(map.parse("jogging"), Err(Error::UnknownLabel(_))));
        assert!(map.parse("6").is_err());
        assert!(LabelMap::new(["a", "A"]).is_err());
    }

    #[test]
    fn har3_maps_locomotion_to_0_1_2() {
        let map = LabelMap::har3();
        assert_eq!(map.parse("walking").unwrap(), 0);
        assert_eq!(map.parse("walking upstairs").unwrap(), 1);
        assert_eq!(map.parse("walking-downstairs").unwrap(), 2);
        assert!(map.parse("sitting").is_err());
    }

    #[test]
    fn restrict_classes_remaps() {
        let samples = (0..4).map(|i| Tensor::vector(vec![i as f64]).unwrap()).collect();
        let ds = Dataset::new(samples, vec![0, 3, 5, 3], vec![1, 1, 2, 2], LabelMap::har6()).unwrap();
        let r = ds.restrict_classes(&[3, 5]).unwrap();
        assert_eq!(r.labels, vec![0, 1, 0]);
        assert_eq!(r.classes.names(), &["sitting".to_string(), "laying".to_string()]);
    }

    #[test]
    fn rejects_ragged_input() {
        let samples = vec![Tensor::vector(vec![1.0]).unwrap(), Tensor::vector(vec![1.0, 2.0]).unwrap()];
        assert!(Dataset::new(samples, vec![0, 0], vec![0, 0], LabelMap::har3()).is_err());
    }
}
