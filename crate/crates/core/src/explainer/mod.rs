//! Counterfactual explainers.
//!
//! [`exhaustive_explain`] returns every ε-approximate counterfactual of a
//! finite grid domain. [`explain`] is the practical four-step pipeline:
//! order training points of the other class by distance, keep the closest
//! ones, greedily keep a diverse subset, then pull each survivor towards
//! the input by bisection along the connecting segment.

mod bisection;
mod config;
mod exhaustive;
mod pipeline;

pub use bisection::{
    binary_search_cf, bisect_boundary, ray_counterfactual, BinarySearchStats, Bracket,
};
pub use config::{CandidateSource, DistanceSelection, DiversitySelection, ExplainerConfig};
pub use exhaustive::{
    exhaustive_explain, exhaustive_members, safety_margin, SafetyMargin, MEMBERSHIP_TOL,
};
pub use pipeline::{
    distance_filter, diversity_filter, explain, order_candidates, DiversityOutcome,
    PipelineExplainer,
};

use serde::{Deserialize, Serialize};

use crate::classifiers::ClassLabel;
use crate::error::Result;
use crate::geometry::{FeatureVector, PointSet};

pub const EXPLANATION_SCHEMA_VERSION: u32 = 1;

/// A training point of the other class, with its distance to the input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub point: FeatureVector,
    pub distance: f64,
    pub source_index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Counterfactual {
    pub point: FeatureVector,
    pub distance: f64,
    /// `cfd(x) + ε - d(x, c)`, when the classifier knows `cfd(x)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub safety_margin: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub search: Option<BinarySearchStats>,
    /// Index of the originating training point or grid point.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_index: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExplanationStatus {
    Ok,
    NoCounterfactual,
}

/// Number of candidates after each pipeline step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageSizes {
    pub ordered: usize,
    pub distance_filtered: usize,
    pub diversity_filtered: usize,
    pub returned: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterfactualSet {
    pub schema_version: u32,
    pub reference: FeatureVector,
    pub reference_label: ClassLabel,
    pub status: ExplanationStatus,
    /// Ordered by ascending distance to `reference`.
    pub counterfactuals: Vec<Counterfactual>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stages: Option<StageSizes>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl CounterfactualSet {
    pub(crate) fn empty(reference: FeatureVector, reference_label: ClassLabel) -> Self {
        Self {
            schema_version: EXPLANATION_SCHEMA_VERSION,
            reference,
            reference_label,
            status: ExplanationStatus::NoCounterfactual,
            counterfactuals: Vec::new(),
            stages: None,
            warnings: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.counterfactuals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counterfactuals.is_empty()
    }

    pub fn points(&self) -> Vec<FeatureVector> {
        self.counterfactuals
            .iter()
            .map(|c| c.point.clone())
            .collect()
    }

    /// The counterfactual points as a [`PointSet`]; `None` when empty.
    pub fn point_set(&self) -> Option<PointSet> {
        PointSet::new(self.points()).ok()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Anything that maps an input to a counterfactual set.
pub trait CounterfactualExplainer {
    fn explain(&self, x: &FeatureVector) -> Result<CounterfactualSet>;
}

impl<F> CounterfactualExplainer for F
where
    F: Fn(&FeatureVector) -> Result<CounterfactualSet>,
{
    fn explain(&self, x: &FeatureVector) -> Result<CounterfactualSet> {
        self(x)
    }
}
