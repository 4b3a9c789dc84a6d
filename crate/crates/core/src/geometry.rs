//! Point and set distances over normalized feature space.
//!
//! Every distance here is a true metric (definite, symmetric, triangle
//! inequality), which is what the robustness checks in [`crate::metrics`]
//! rely on.

use std::fmt;
use std::ops::Deref;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A finite, non-empty vector of feature values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct FeatureVector(Vec<f64>);

impl FeatureVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyVector);
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self(values))
    }

    /// Caller guarantees the values are non-empty and finite.
    pub(crate) fn from_vec_unchecked(values: Vec<f64>) -> Self {
        debug_assert!(!values.is_empty() && values.iter().all(|v| v.is_finite()));
        Self(values)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Midpoint of the segment between `self` and `other`.
    pub fn midpoint(&self, other: &FeatureVector) -> FeatureVector {
        let values = self
            .0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| 0.5 * (a + b))
            .collect();
        Self::from_vec_unchecked(values)
    }

    /// Component-wise `self - origin`.
    pub fn offset_from(&self, origin: &FeatureVector) -> Vec<f64> {
        self.0.iter().zip(&origin.0).map(|(a, b)| a - b).collect()
    }

    pub(crate) fn check_dim(&self, expected: usize) -> Result<()> {
        if self.0.len() == expected {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected,
                found: self.0.len(),
            })
        }
    }
}

impl Deref for FeatureVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for FeatureVector {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Self::new(values)
    }
}

impl From<FeatureVector> for Vec<f64> {
    fn from(v: FeatureVector) -> Self {
        v.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricKind {
    /// L1
    Manhattan,
    /// L2
    Euclidean,
    /// L-infinity
    Chebyshev,
}

impl MetricKind {
    pub fn short_name(self) -> &'static str {
        match self {
            MetricKind::Manhattan => "l1",
            MetricKind::Euclidean => "l2",
            MetricKind::Chebyshev => "linf",
        }
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl FromStr for MetricKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "l1" | "manhattan" => Ok(MetricKind::Manhattan),
            "l2" | "euclidean" => Ok(MetricKind::Euclidean),
            "linf" | "chebyshev" => Ok(MetricKind::Chebyshev),
            other => Err(Error::InvalidParameter(format!("unknown metric `{other}`"))),
        }
    }
}

/// A (possibly weighted) Manhattan, Euclidean or Chebyshev distance.
///
/// Weights scale each coordinate difference before aggregation, so the
/// weighted Euclidean distance is `sqrt(sum((w_i * |a_i - b_i|)^2))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceMetric {
    kind: MetricKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    weights: Option<Vec<f64>>,
}

impl DistanceMetric {
    pub fn new(kind: MetricKind) -> Self {
        Self {
            kind,
            weights: None,
        }
    }

    pub fn manhattan() -> Self {
        Self::new(MetricKind::Manhattan)
    }

    pub fn euclidean() -> Self {
        Self::new(MetricKind::Euclidean)
    }

    pub fn chebyshev() -> Self {
        Self::new(MetricKind::Chebyshev)
    }

    pub fn weighted(kind: MetricKind, weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidWeights(
                "weights must be finite and non-negative".into(),
            ));
        }
        if !weights.iter().any(|w| *w > 0.0) {
            return Err(Error::InvalidWeights(
                "at least one weight must be positive".into(),
            ));
        }
        Ok(Self {
            kind,
            weights: Some(weights),
        })
    }

    pub fn kind(&self) -> MetricKind {
        self.kind
    }

    pub fn weights(&self) -> Option<&[f64]> {
        self.weights.as_deref()
    }

    /// Checked distance between two feature vectors.
    pub fn distance(&self, a: &FeatureVector, b: &FeatureVector) -> Result<f64> {
        b.check_dim(a.len())?;
        if let Some(w) = &self.weights {
            a.check_dim(w.len())?;
        }
        Ok(self.eval(a, b))
    }

    /// Distance without dimension checks; slices must have equal length.
    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        debug_assert_eq!(a.len(), b.len());
        let terms = a.iter().zip(b).enumerate().map(|(i, (x, y))| {
            let diff = (x - y).abs();
            match &self.weights {
                Some(w) => w[i] * diff,
                None => diff,
            }
        });
        match self.kind {
            MetricKind::Manhattan => terms.sum(),
            MetricKind::Euclidean => terms.map(|t| t * t).sum::<f64>().sqrt(),
            MetricKind::Chebyshev => terms.fold(0.0, f64::max),
        }
    }

    /// Norm of a difference vector, i.e. the distance from the origin.
    pub fn norm(&self, v: &[f64]) -> f64 {
        let zero = vec![0.0; v.len()];
        self.eval(v, &zero)
    }
}

impl Default for DistanceMetric {
    fn default() -> Self {
        Self::euclidean()
    }
}

/// Non-empty collection of equal-length points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSet(Vec<FeatureVector>);

impl PointSet {
    pub fn new(points: Vec<FeatureVector>) -> Result<Self> {
        let first = points.first().ok_or(Error::EmptySet)?;
        let dim = first.len();
        for p in &points {
            p.check_dim(dim)?;
        }
        Ok(Self(points))
    }

    pub fn points(&self) -> &[FeatureVector] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.0[0].len()
    }
}

/// For every point in `from`, its distance to the nearest point of `to`.
fn nearest_distances<'a>(
    metric: &'a DistanceMetric,
    from: &'a PointSet,
    to: &'a PointSet,
) -> impl Iterator<Item = f64> + 'a {
    from.points().iter().map(move |a| {
        to.points()
            .iter()
            .map(|b| metric.eval(a, b))
            .fold(f64::INFINITY, f64::min)
    })
}

fn check_sets(metric: &DistanceMetric, s1: &PointSet, s2: &PointSet) -> Result<()> {
    if s1.dim() != s2.dim() {
        return Err(Error::DimensionMismatch {
            expected: s1.dim(),
            found: s2.dim(),
        });
    }
    if let Some(w) = metric.weights() {
        if w.len() != s1.dim() {
            return Err(Error::DimensionMismatch {
                expected: w.len(),
                found: s1.dim(),
            });
        }
    }
    Ok(())
}

/// Average set distance: half the mean nearest distance from `s1` to `s2`
/// plus half the mean nearest distance from `s2` to `s1`.
pub fn set_distance_sum(metric: &DistanceMetric, s1: &PointSet, s2: &PointSet) -> Result<f64> {
    check_sets(metric, s1, s2)?;
    let forward = nearest_distances(metric, s1, s2).sum::<f64>() / s1.len() as f64;
    let backward = nearest_distances(metric, s2, s1).sum::<f64>() / s2.len() as f64;
    Ok(0.5 * forward + 0.5 * backward)
}

/// Maximum set distance: the mean of the two directed max-of-min distances.
pub fn set_distance_max(metric: &DistanceMetric, s1: &PointSet, s2: &PointSet) -> Result<f64> {
    check_sets(metric, s1, s2)?;
    let forward = nearest_distances(metric, s1, s2).fold(0.0, f64::max);
    let backward = nearest_distances(metric, s2, s1).fold(0.0, f64::max);
    Ok(0.5 * (forward + backward))
}

/// `1 - cos(angle(u, v))`, in `[0, 2]`. `None` when either vector is zero.
pub fn cosine_distance(u: &[f64], v: &[f64]) -> Option<f64> {
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    let nu = u.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nv = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    if nu == 0.0 || nv == 0.0 {
        return None;
    }
    let cos = (dot / (nu * nv)).clamp(-1.0, 1.0);
    Some(1.0 - cos)
}
