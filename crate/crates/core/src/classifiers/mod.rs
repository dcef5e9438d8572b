//! Hard base classifiers.
//!
//! Analytic families (halfspace, slab) come with closed-form smoothed values
//! and gradient norms and serve as exact oracles. The nearest-neighbour
//! classifier backs the Swiss-roll experiment, and [`external`] talks to an
//! out-of-process model over a line protocol.

mod analytic;
pub mod external;
mod nn;

pub use analytic::{worst_case_slab, AnalyticSmoothing, Constant, Halfspace, Slab, SmoothedValue};
pub use external::{ExternalClassifier, ProtocolError};
pub use nn::LabeledDataset;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ClassifierError {
    #[error("point has dimension {actual}, classifier expects {expected}")]
    Dimension { expected: usize, actual: usize },

    #[error(transparent)]
    Protocol(#[from] ProtocolError),
}

/// A hard classifier mapping a point to a class index.
///
/// Implementations are shared across sampling workers, so they must be
/// `Sync`. Batches are row-major: `coords.len()` is a multiple of
/// [`dim`](BaseClassifier::dim).
pub trait BaseClassifier: Sync {
    fn dim(&self) -> usize;

    fn num_classes(&self) -> usize;

    fn classify(&self, z: &[f64]) -> Result<usize, ClassifierError>;

    fn classify_batch(&self, coords: &[f64]) -> Result<Vec<usize>, ClassifierError> {
        let d = self.dim();
        if d == 0 || coords.len() % d != 0 {
            return Err(ClassifierError::Dimension { expected: d, actual: coords.len() });
        }
        coords.chunks_exact(d).map(|z| self.classify(z)).collect()
    }
}

impl<T: BaseClassifier + ?Sized> BaseClassifier for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn num_classes(&self) -> usize {
        (**self).num_classes()
    }

    fn classify(&self, z: &[f64]) -> Result<usize, ClassifierError> {
        (**self).classify(z)
    }

    fn classify_batch(&self, coords: &[f64]) -> Result<Vec<usize>, ClassifierError> {
        (**self).classify_batch(coords)
    }
}

impl<T: BaseClassifier + ?Sized> BaseClassifier for Box<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn num_classes(&self) -> usize {
        (**self).num_classes()
    }

    fn classify(&self, z: &[f64]) -> Result<usize, ClassifierError> {
        (**self).classify(z)
    }

    fn classify_batch(&self, coords: &[f64]) -> Result<Vec<usize>, ClassifierError> {
        (**self).classify_batch(coords)
    }
}

pub(crate) fn check_dim(expected: usize, z: &[f64]) -> Result<(), ClassifierError> {
    if z.len() != expected {
        return Err(ClassifierError::Dimension { expected, actual: z.len() });
    }
    Ok(())
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
