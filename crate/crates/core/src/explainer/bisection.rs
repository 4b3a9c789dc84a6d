use serde::{Deserialize, Serialize};

use crate::classifiers::Classifier;
use crate::error::{Error, Result};
use crate::geometry::{DistanceMetric, FeatureVector};

/// Accounting for one run of [`binary_search_cf`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinarySearchStats {
    pub iterations: usize,
    pub initial_distance: f64,
    /// Classifier evaluations, including the two endpoint checks.
    pub queries: usize,
    /// Distance between the final input-side and counterfactual-side iterates.
    pub final_gap: f64,
}

impl BinarySearchStats {
    /// `ceil(log2(D / gamma)) + 1`, the most iterations a search over an
    /// initial distance `D` may take.
    pub fn iteration_bound(initial_distance: f64, gamma: f64) -> usize {
        if initial_distance <= gamma {
            return 1;
        }
        (initial_distance / gamma).log2().ceil() as usize + 1
    }
}

/// Final bracket of a boundary search on the segment from `x` to `c`.
#[derive(Debug, Clone, PartialEq)]
pub struct Bracket {
    /// Last iterate with `x`'s class.
    pub near: FeatureVector,
    /// Last iterate with `c`'s class; the counterfactual.
    pub far: FeatureVector,
    pub stats: BinarySearchStats,
}

/// Bisects the segment from `x` to `c` until the two iterates are within
/// `gamma`.
///
/// `x` and `c` must be classified differently.
pub fn bisect_boundary<C: Classifier + ?Sized>(
    classifier: &C,
    metric: &DistanceMetric,
    x: &FeatureVector,
    c: &FeatureVector,
    gamma: f64,
) -> Result<Bracket> {
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "gamma must be positive, got {gamma}"
        )));
    }
    let initial_distance = metric.distance(x, c)?;
    let x_label = classifier.classify(x)?;
    if classifier.classify(c)? == x_label {
        return Err(Error::SameClass);
    }

    let mut near = x.clone();
    let mut far = c.clone();
    let mut gap = initial_distance;
    let mut iterations = 0;
    while gap > gamma {
        let mid = near.midpoint(&far);
        // stop once the segment can no longer be split in floating point
        if mid == near || mid == far {
            break;
        }
        if classifier.predict(&mid) == x_label {
            near = mid;
        } else {
            far = mid;
        }
        iterations += 1;
        gap = metric.eval(&near, &far);
    }
    let stats = BinarySearchStats {
        iterations,
        initial_distance,
        queries: iterations + 2,
        final_gap: gap,
    };
    Ok(Bracket { near, far, stats })
}

/// [`bisect_boundary`], keeping only the counterfactual side.
///
/// The returned point keeps `c`'s class and a point of `x`'s class lies
/// within `gamma` of it on the segment.
pub fn binary_search_cf<C: Classifier + ?Sized>(
    classifier: &C,
    metric: &DistanceMetric,
    x: &FeatureVector,
    c: &FeatureVector,
    gamma: f64,
) -> Result<(FeatureVector, BinarySearchStats)> {
    bisect_boundary(classifier, metric, x, c, gamma).map(|b| (b.far, b.stats))
}

/// Nearest counterfactual along the ray from `x` in `direction`: walks out
/// to distance `reach` and bisects back. `None` when the point at `reach`
/// has the same class as `x`.
pub fn ray_counterfactual<C: Classifier + ?Sized>(
    classifier: &C,
    metric: &DistanceMetric,
    x: &FeatureVector,
    direction: &[f64],
    reach: f64,
    gamma: f64,
) -> Result<Option<(FeatureVector, BinarySearchStats)>> {
    x.check_dim(direction.len())?;
    let len = metric.norm(direction);
    if !(len > 0.0) {
        return Err(Error::InvalidParameter(
            "ray direction must be non-zero".into(),
        ));
    }
    let far = FeatureVector::new(
        x.iter()
            .zip(direction)
            .map(|(v, d)| v + reach * d / len)
            .collect(),
    )?;
    if classifier.classify(&far)? == classifier.classify(x)? {
        return Ok(None);
    }
    binary_search_cf(classifier, metric, x, &far, gamma).map(Some)
}
