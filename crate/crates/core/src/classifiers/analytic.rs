use serde::{Deserialize, Serialize};

use super::{ClassLabel, Classifier};
use crate::error::{Error, Result};
use crate::geometry::{DistanceMetric, FeatureVector, MetricKind};

/// Decision region of an [`AnalyticClassifier`]; points in the closed
/// region receive the inside label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Region {
    /// `{ x : norm(x - center) <= radius }`. A Euclidean norm gives a ball,
    /// Manhattan a diamond and Chebyshev a cube.
    NormBall {
        center: FeatureVector,
        radius: f64,
        norm: MetricKind,
    },
    /// `{ x : normal . x <= offset }`.
    Halfspace { normal: Vec<f64>, offset: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyticClassifier {
    region: Region,
    inside: ClassLabel,
    outside: ClassLabel,
}

impl AnalyticClassifier {
    pub fn new(region: Region, inside: ClassLabel) -> Result<Self> {
        match &region {
            Region::NormBall { radius, .. } => {
                if !(radius.is_finite() && *radius > 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "radius must be positive, got {radius}"
                    )));
                }
            }
            Region::Halfspace { normal, offset } => {
                if normal.is_empty() || normal.iter().any(|v| !v.is_finite()) || !offset.is_finite()
                {
                    return Err(Error::InvalidParameter("halfspace must be finite".into()));
                }
                if normal.iter().all(|v| *v == 0.0) {
                    return Err(Error::InvalidParameter(
                        "halfspace normal must be non-zero".into(),
                    ));
                }
            }
        }
        Ok(Self {
            region,
            inside,
            outside: inside.other(),
        })
    }

    fn norm_ball(center: FeatureVector, radius: f64, norm: MetricKind) -> Result<Self> {
        Self::new(
            Region::NormBall {
                center,
                radius,
                norm,
            },
            ClassLabel::Zero,
        )
    }

    /// Euclidean ball; inside is label 0.
    pub fn ball(center: FeatureVector, radius: f64) -> Result<Self> {
        Self::norm_ball(center, radius, MetricKind::Euclidean)
    }

    /// Manhattan ball; inside is label 0.
    pub fn diamond(center: FeatureVector, radius: f64) -> Result<Self> {
        Self::norm_ball(center, radius, MetricKind::Manhattan)
    }

    /// Chebyshev ball; inside is label 0.
    pub fn cube(center: FeatureVector, radius: f64) -> Result<Self> {
        Self::norm_ball(center, radius, MetricKind::Chebyshev)
    }

    /// `normal . x <= offset` is label 0.
    pub fn halfspace(normal: Vec<f64>, offset: f64) -> Result<Self> {
        Self::new(Region::Halfspace { normal, offset }, ClassLabel::Zero)
    }

    pub fn region(&self) -> &Region {
        &self.region
    }

    pub fn inside_label(&self) -> ClassLabel {
        self.inside
    }

    pub fn outside_label(&self) -> ClassLabel {
        self.outside
    }

    /// Signed amount by which `x` lies outside the region under the native
    /// metric: negative inside, zero on the boundary.
    fn signed_gap(&self, x: &[f64]) -> f64 {
        match &self.region {
            Region::NormBall {
                center,
                radius,
                norm,
            } => DistanceMetric::new(*norm).eval(center, x) - radius,
            Region::Halfspace { normal, offset } => {
                let dot: f64 = normal.iter().zip(x).map(|(n, v)| n * v).sum();
                let len = normal.iter().map(|n| n * n).sum::<f64>().sqrt();
                (dot - offset) / len
            }
        }
    }

    /// Distance from `x` to the decision boundary under the native metric
    /// (the region's norm, or Euclidean for a halfspace).
    pub fn cfd_analytic(&self, x: &FeatureVector) -> Result<f64> {
        x.check_dim(self.input_dim())?;
        Ok(self.signed_gap(x).abs())
    }
}

impl Classifier for AnalyticClassifier {
    fn input_dim(&self) -> usize {
        match &self.region {
            Region::NormBall { center, .. } => center.len(),
            Region::Halfspace { normal, .. } => normal.len(),
        }
    }

    fn predict(&self, x: &[f64]) -> ClassLabel {
        if self.signed_gap(x) <= 0.0 {
            self.inside
        } else {
            self.outside
        }
    }

    fn counterfactual_distance(&self, metric: &DistanceMetric, x: &FeatureVector) -> Option<f64> {
        if metric.weights().is_some() || x.len() != self.input_dim() {
            return None;
        }
        match &self.region {
            Region::NormBall { norm, .. } if *norm == metric.kind() => {
                Some(self.signed_gap(x).abs())
            }
            Region::NormBall { .. } => None,
            Region::Halfspace { normal, offset } => {
                // Distance to a hyperplane under a norm is |n.x - b| over the
                // dual norm of n.
                let dual = match metric.kind() {
                    MetricKind::Manhattan => MetricKind::Chebyshev,
                    MetricKind::Euclidean => MetricKind::Euclidean,
                    MetricKind::Chebyshev => MetricKind::Manhattan,
                };
                let dot: f64 = normal.iter().zip(x.iter()).map(|(n, v)| n * v).sum();
                Some((dot - offset).abs() / DistanceMetric::new(dual).norm(normal))
            }
        }
    }
}
