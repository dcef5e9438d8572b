use serde::{Deserialize, Serialize};

use super::{check_dim, BaseClassifier, ClassifierError};
use crate::error::{Error, Result};

/// Labelled points backing a 1-nearest-neighbour classifier.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabeledDataset {
    dim: usize,
    coords: Vec<f64>,
    labels: Vec<usize>,
    classes: usize,
}

impl LabeledDataset {
    pub fn new(dim: usize, coords: Vec<f64>, labels: Vec<usize>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidClassifier("dataset dimension must be positive".into()));
        }
        if labels.is_empty() {
            return Err(Error::InvalidClassifier("dataset is empty".into()));
        }
        if coords.len() != dim * labels.len() {
            return Err(Error::DimensionMismatch { expected: dim * labels.len(), actual: coords.len() });
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidClassifier("dataset coordinates must be finite".into()));
        }
        let classes = labels.iter().max().map_or(0, |m| m + 1);
        Ok(LabeledDataset { dim, coords, labels, classes })
    }

    pub fn from_points(points: &[Vec<f64>], labels: Vec<usize>) -> Result<Self> {
        let dim = points.first().map_or(0, Vec::len);
        if let Some(bad) = points.iter().find(|p| p.len() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, actual: bad.len() });
        }
        Self::new(dim, points.concat(), labels)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Index of the Euclidean-nearest point; ties go to the lowest index.
    pub fn nearest(&self, z: &[f64]) -> usize {
        let mut best = 0;
        let mut best_d2 = f64::INFINITY;
        for (i, p) in self.coords.chunks_exact(self.dim).enumerate() {
            let d2: f64 = p.iter().zip(z).map(|(a, b)| (a - b) * (a - b)).sum();
            if d2 < best_d2 {
                best = i;
                best_d2 = d2;
            }
        }
        best
    }

    /// Distance from `z` to the nearest point whose label satisfies `keep`.
    pub fn distance_to(&self, z: &[f64], keep: impl Fn(usize) -> bool) -> Option<f64> {
        self.coords
            .chunks_exact(self.dim)
            .zip(&self.labels)
            .filter(|(_, &l)| keep(l))
            .map(|(p, _)| p.iter().zip(z).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
            .min_by(f64::total_cmp)
            .map(f64::sqrt)
    }
}

impl BaseClassifier for LabeledDataset {
    fn dim(&self) -> usize {
        self.dim
    }

    fn num_classes(&self) -> usize {
        self.classes
    }

    fn classify(&self, z: &[f64]) -> Result<usize, ClassifierError> {
        check_dim(self.dim, z)?;
        Ok(self.labels[self.nearest(z)])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_hit_returns_its_label() {
        let ds = LabeledDataset::from_points(&[vec![0.0, 0.0], vec![1.0, 1.0], vec![2.0, 0.0]], vec![0, 1, 2]).unwrap();
        assert_eq!(ds.classify(&[1.0, 1.0]).unwrap(), 1);
        assert_eq!(ds.classify(&[2.0, 0.0]).unwrap(), 2);
        assert_eq!(ds.num_classes(), 3);
    }

    #[test]
    fn ties_go_to_lower_index() {
        let ds = LabeledDataset::from_points(&[vec![-1.0], vec![1.0]], vec![1, 0]).unwrap();
        assert_eq!(ds.classify(&[0.0]).unwrap(), 1);
        let ds = LabeledDataset::from_points(&[vec![1.0], vec![-1.0]], vec![0, 1]).unwrap();
        assert_eq!(ds.classify(&[0.0]).unwrap(), 0);
    }

    #[test]
    fn single_point_always_wins() {
        let ds = LabeledDataset::from_points(&[vec![5.0, 5.0]], vec![3]).unwrap();
        for z in [[0.0, 0.0], [100.0, -3.0], [5.0, 5.0]] {
            assert_eq!(ds.classify(&z).unwrap(), 3);
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(LabeledDataset::new(2, vec![], vec![]).is_err());
        assert!(LabeledDataset::new(2, vec![1.0], vec![0]).is_err());
        let ds = LabeledDataset::from_points(&[vec![0.0, 0.0]], vec![0]).unwrap();
        assert!(ds.classify(&[0.0]).is_err());
    }
}
