//! Binary classifiers queried by the explainers.

mod analytic;
mod grid;
mod mlp;
mod train;

pub use analytic::{AnalyticClassifier, Region};
pub use grid::{GridClassifier, MAX_GRID_POINTS};
pub use mlp::{Activation, DenseLayer, MlpModel, MLP_SCHEMA_VERSION};
pub use train::{train_mlp, TrainConfig, TrainedModel};

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{DistanceMetric, FeatureVector};

/// One of the two class labels of a binary problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum ClassLabel {
    Zero,
    One,
}

impl ClassLabel {
    pub fn index(self) -> usize {
        match self {
            ClassLabel::Zero => 0,
            ClassLabel::One => 1,
        }
    }

    pub fn from_index(index: usize) -> Result<Self> {
        match index {
            0 => Ok(ClassLabel::Zero),
            1 => Ok(ClassLabel::One),
            other => Err(Error::InvalidParameter(format!(
                "class label must be 0 or 1, got {other}"
            ))),
        }
    }

    pub fn other(self) -> Self {
        match self {
            ClassLabel::Zero => ClassLabel::One,
            ClassLabel::One => ClassLabel::Zero,
        }
    }
}

impl TryFrom<u8> for ClassLabel {
    type Error = Error;

    fn try_from(v: u8) -> Result<Self> {
        Self::from_index(v as usize)
    }
}

impl From<ClassLabel> for u8 {
    fn from(l: ClassLabel) -> u8 {
        l.index() as u8
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.index())
    }
}

/// A deterministic binary decision function over feature vectors.
pub trait Classifier {
    fn input_dim(&self) -> usize;

    /// Label of `x`; `x.len()` must equal [`Classifier::input_dim`].
    fn predict(&self, x: &[f64]) -> ClassLabel;

    fn classify(&self, x: &FeatureVector) -> Result<ClassLabel> {
        x.check_dim(self.input_dim())?;
        Ok(self.predict(x))
    }

    /// Exact counterfactual distance of `x`, where the classifier can
    /// compute it under `metric`.
    fn counterfactual_distance(&self, _metric: &DistanceMetric, _x: &FeatureVector) -> Option<f64> {
        None
    }
}

impl<C: Classifier + ?Sized> Classifier for &C {
    fn input_dim(&self) -> usize {
        (**self).input_dim()
    }

    fn predict(&self, x: &[f64]) -> ClassLabel {
        (**self).predict(x)
    }

    fn counterfactual_distance(&self, metric: &DistanceMetric, x: &FeatureVector) -> Option<f64> {
        (**self).counterfactual_distance(metric, x)
    }
}

impl<C: Classifier + ?Sized> Classifier for Box<C> {
    fn input_dim(&self) -> usize {
        (**self).input_dim()
    }

    fn predict(&self, x: &[f64]) -> ClassLabel {
        (**self).predict(x)
    }

    fn counterfactual_distance(&self, metric: &DistanceMetric, x: &FeatureVector) -> Option<f64> {
        (**self).counterfactual_distance(metric, x)
    }
}
