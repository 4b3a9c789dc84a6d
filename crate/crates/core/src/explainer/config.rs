use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::DistanceMetric;

/// Step 2: how many of the ordered candidates survive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum DistanceSelection {
    /// Keep the `count` closest candidates.
    NumberBased { count: usize },
    /// Keep candidates within `(1 + tolerance) * m`, `m` being the closest
    /// candidate's distance.
    DistanceBased { tolerance: f64 },
}

/// Step 3: when a candidate counts as different from those already kept.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum DiversitySelection {
    /// Cosine distance of the directions from the input is at least
    /// `threshold` (in `[0, 2]`).
    AngleBased { threshold: f64 },
    /// Distance to every kept candidate is at least `(1 + threshold) * m`
    /// (`threshold` in `[0, 1]`).
    DistanceBased { threshold: f64 },
}

/// Which training points count as step-1 candidates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CandidateSource {
    /// Points the classifier assigns to the other class.
    #[default]
    Prediction,
    /// Points whose dataset label is the other class.
    DatasetLabel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplainerConfig {
    pub metric: DistanceMetric,
    pub distance_selection: DistanceSelection,
    pub diversity_selection: DiversitySelection,
    /// Bisection accuracy.
    pub gamma: f64,
    /// Tolerance of the exhaustive explainer; used for safety margins.
    pub epsilon: f64,
    pub max_counterfactuals: usize,
    pub minimise: bool,
    #[serde(default)]
    pub candidate_source: CandidateSource,
}

impl Default for ExplainerConfig {
    fn default() -> Self {
        Self {
            metric: DistanceMetric::euclidean(),
            distance_selection: DistanceSelection::NumberBased { count: 50 },
            diversity_selection: DiversitySelection::AngleBased { threshold: 0.5 },
            gamma: 0.1,
            epsilon: 0.1,
            max_counterfactuals: 5,
            minimise: true,
            candidate_source: CandidateSource::Prediction,
        }
    }
}

impl ExplainerConfig {
    /// Defaults with the step-2 count picked by training-set size: 50 below
    /// 1000 examples, 1000 otherwise.
    pub fn for_dataset_size(n: usize) -> Self {
        Self {
            distance_selection: DistanceSelection::NumberBased {
                count: if n < 1000 { 50 } else { 1000 },
            },
            ..Self::default()
        }
    }

    /// Single minimised nearest counterfactual, no diversity filtering.
    pub fn singleton_baseline(&self) -> Self {
        Self {
            diversity_selection: DiversitySelection::AngleBased { threshold: 0.0 },
            max_counterfactuals: 1,
            minimise: true,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if !(self.gamma.is_finite() && self.gamma > 0.0) {
            return bad(format!("gamma must be positive, got {}", self.gamma));
        }
        if !(self.epsilon.is_finite() && self.epsilon >= 0.0) {
            return bad(format!(
                "epsilon must be non-negative, got {}",
                self.epsilon
            ));
        }
        if self.max_counterfactuals == 0 {
            return bad("max_counterfactuals must be at least 1".into());
        }
        match self.distance_selection {
            DistanceSelection::NumberBased { count } if count == 0 => {
                return bad("step-2 count must be positive".into())
            }
            DistanceSelection::DistanceBased { tolerance }
                if !(tolerance >= 0.0 && tolerance.is_finite()) =>
            {
                return bad(format!(
                    "step-2 tolerance must be non-negative, got {tolerance}"
                ))
            }
            _ => {}
        }
        match self.diversity_selection {
            DiversitySelection::AngleBased { threshold } if !(0.0..=2.0).contains(&threshold) => {
                bad(format!(
                    "angle threshold must lie in [0, 2], got {threshold}"
                ))
            }
            DiversitySelection::DistanceBased { threshold }
                if !(0.0..=1.0).contains(&threshold) =>
            {
                bad(format!(
                    "distance threshold must lie in [0, 1], got {threshold}"
                ))
            }
            _ => Ok(()),
        }
    }
}
