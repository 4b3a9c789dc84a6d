use serde::{Deserialize, Serialize};

use super::{Counterfactual, CounterfactualSet, ExplanationStatus, EXPLANATION_SCHEMA_VERSION};
use crate::classifiers::{Classifier, GridClassifier};
use crate::error::{Error, Result};
use crate::geometry::{DistanceMetric, FeatureVector};

/// Slack for floating-point ties in `d(x, c) <= cfd(x) + ε`. Grid
/// coordinates such as `0.8 - 0.5` are not exact, and the membership test
/// must not depend on the last bit.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SafetyMargin {
    /// `cfd(x) + ε - d(x, c)`.
    pub delta: f64,
    /// Whether `c` is an ε-approximate counterfactual of `x` (`delta >= 0`
    /// up to [`MEMBERSHIP_TOL`]).
    pub within_tolerance: bool,
}

pub fn safety_margin(
    metric: &DistanceMetric,
    x: &FeatureVector,
    c: &FeatureVector,
    epsilon: f64,
    cfd: f64,
) -> Result<SafetyMargin> {
    if !cfd.is_finite() {
        return Err(Error::InvalidParameter("cfd must be finite".into()));
    }
    let delta = cfd + epsilon - metric.distance(x, c)?;
    Ok(SafetyMargin {
        delta,
        within_tolerance: delta >= -MEMBERSHIP_TOL,
    })
}

/// Grid indices of every ε-approximate counterfactual of grid point
/// `x_index`, given its precomputed `cfd`, in index order.
pub fn exhaustive_members(
    grid: &GridClassifier,
    metric: &DistanceMetric,
    points: &[FeatureVector],
    x_index: usize,
    cfd: f64,
    epsilon: f64,
) -> Vec<usize> {
    if !cfd.is_finite() {
        return Vec::new();
    }
    let label = grid.label_at(x_index);
    let x = &points[x_index];
    let bound = cfd + epsilon + MEMBERSHIP_TOL;
    (0..grid.len())
        .filter(|&j| grid.label_at(j) != label && metric.eval(x, &points[j]) <= bound)
        .collect()
}

/// All grid points `c` with a different label than `x` and
/// `d(x, c) <= cfd(x) + epsilon`, each with its safety margin, ordered by
/// distance then grid index. The result is not capped.
pub fn exhaustive_explain(
    grid: &GridClassifier,
    metric: &DistanceMetric,
    x: &FeatureVector,
    epsilon: f64,
) -> Result<CounterfactualSet> {
    if !(epsilon.is_finite() && epsilon >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "epsilon must be non-negative, got {epsilon}"
        )));
    }
    let label = grid.classify(x)?;
    let cfd = grid.cfd_bruteforce(metric, x)?;
    if !cfd.is_finite() {
        let mut set = CounterfactualSet::empty(x.clone(), label);
        set.warnings
            .push("no counterfactual exists: the domain is single-class".into());
        return Ok(set);
    }
    let bound = cfd + epsilon + MEMBERSHIP_TOL;
    let mut items: Vec<Counterfactual> = (0..grid.len())
        .filter(|&j| grid.label_at(j) != label)
        .filter_map(|j| {
            let point = grid.point(j);
            let distance = metric.eval(x, &point);
            (distance <= bound).then(|| Counterfactual {
                point,
                distance,
                safety_margin: Some(cfd + epsilon - distance),
                search: None,
                source_index: Some(j),
            })
        })
        .collect();
    items.sort_by(|a, b| a.distance.total_cmp(&b.distance));
    Ok(CounterfactualSet {
        schema_version: EXPLANATION_SCHEMA_VERSION,
        reference: x.clone(),
        reference_label: label,
        status: ExplanationStatus::Ok,
        counterfactuals: items,
        stages: None,
        warnings: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::ClassLabel;

    fn threshold_grid() -> GridClassifier {
        GridClassifier::from_fn(vec![GridClassifier::uniform_axis(0.0, 1.0, 11)], |x| {
            if x[0] >= 0.7 - 1e-9 {
                ClassLabel::One
            } else {
                ClassLabel::Zero
            }
        })
        .unwrap()
    }

    fn coords(set: &CounterfactualSet) -> Vec<f64> {
        set.counterfactuals.iter().map(|c| c.point[0]).collect()
    }

    /// Independent enumeration over the raw axis values.
    fn brute_force(x: f64, eps: f64) -> Vec<f64> {
        let axis: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
        let other: Vec<f64> = axis.iter().copied().filter(|v| *v >= 0.7 - 1e-9).collect();
        let cfd = other
            .iter()
            .map(|v| (v - x).abs())
            .fold(f64::INFINITY, f64::min);
        other
            .into_iter()
            .filter(|v| (v - x).abs() <= cfd + eps + 1e-9)
            .collect()
    }

    #[test]
    fn threshold_grid_explanations() {
        let grid = threshold_grid();
        let l2 = DistanceMetric::euclidean();
        let x = FeatureVector::new(vec![0.5]).unwrap();
        let wide = exhaustive_explain(&grid, &l2, &x, 0.1).unwrap();
        assert_eq!(brute_force(0.5, 0.1), vec![0.7, 0.8]);
        assert_eq!(coords(&wide), brute_force(0.5, 0.1));
        let strong = exhaustive_explain(&grid, &l2, &x, 0.0).unwrap();
        assert_eq!(coords(&strong), vec![0.7]);
        assert_eq!(strong.status, ExplanationStatus::Ok);
        // strong counterfactuals are ε-safe
        let m = wide.counterfactuals[0].safety_margin.unwrap();
        assert!((m - 0.1).abs() < 1e-12);
    }

    #[test]
    fn single_class_domain() {
        let grid = GridClassifier::from_fn(vec![GridClassifier::uniform_axis(0.0, 1.0, 5)], |_| {
            ClassLabel::Zero
        })
        .unwrap();
        let x = FeatureVector::new(vec![0.5]).unwrap();
        let set = exhaustive_explain(&grid, &DistanceMetric::euclidean(), &x, 0.1).unwrap();
        assert!(set.is_empty());
        assert_eq!(set.status, ExplanationStatus::NoCounterfactual);
    }

    #[test]
    fn margins() {
        let l2 = DistanceMetric::euclidean();
        let x = FeatureVector::new(vec![0.0]).unwrap();
        let c = |v: f64| FeatureVector::new(vec![v]).unwrap();
        assert!((safety_margin(&l2, &x, &c(0.2), 0.1, 0.2).unwrap().delta - 0.1).abs() < 1e-15);
        let boundary = safety_margin(&l2, &x, &c(0.3), 0.1, 0.2).unwrap();
        assert!(boundary.delta.abs() < 1e-15 && boundary.within_tolerance);
        assert!((safety_margin(&l2, &x, &c(0.25), 0.1, 0.2).unwrap().delta - 0.05).abs() < 1e-15);
        let outside = safety_margin(&l2, &x, &c(0.5), 0.1, 0.2).unwrap();
        assert!(!outside.within_tolerance);
        assert!(safety_margin(&l2, &x, &c(0.5), 0.1, f64::INFINITY).is_err());
    }

    #[test]
    fn members_match_explanation() {
        let grid = threshold_grid();
        let l2 = DistanceMetric::euclidean();
        let points = grid.points();
        for i in 0..grid.len() {
            let cfd = grid.cfd_bruteforce(&l2, &points[i]).unwrap();
            let mut expected: Vec<usize> = exhaustive_explain(&grid, &l2, &points[i], 0.15)
                .unwrap()
                .counterfactuals
                .iter()
                .map(|c| c.source_index.unwrap())
                .collect();
            expected.sort_unstable();
            assert_eq!(
                exhaustive_members(&grid, &l2, &points, i, cfd, 0.15),
                expected
            );
        }
    }
}
