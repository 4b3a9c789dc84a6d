use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geometry::{DistanceMetric, FeatureVector, PointSet};

/// Mean distance from `x` to the points of `set`.
pub fn k_distance(metric: &DistanceMetric, x: &FeatureVector, set: &PointSet) -> Result<f64> {
    let mut total = 0.0;
    for p in set.points() {
        total += metric.distance(x, p)?;
    }
    Ok(total / set.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiversityScore {
    pub value: f64,
    /// Set because the set has fewer than two points; `value` is then 0.
    pub degenerate: bool,
}

/// Mean pairwise distance over the unordered pairs of `set`.
pub fn k_diversity(metric: &DistanceMetric, set: &PointSet) -> Result<DiversityScore> {
    let points = set.points();
    if points.len() < 2 {
        return Ok(DiversityScore {
            value: 0.0,
            degenerate: true,
        });
    }
    let mut total = 0.0;
    let mut pairs = 0usize;
    for (i, a) in points.iter().enumerate() {
        for b in &points[i + 1..] {
            total += metric.distance(a, b)?;
            pairs += 1;
        }
    }
    Ok(DiversityScore {
        value: total / pairs as f64,
        degenerate: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn set(points: &[&[f64]]) -> PointSet {
        PointSet::new(
            points
                .iter()
                .map(|p| FeatureVector::new(p.to_vec()).unwrap())
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn k_distance_examples() {
        let l2 = DistanceMetric::euclidean();
        let x = FeatureVector::new(vec![0.0, 0.0]).unwrap();
        assert_eq!(
            k_distance(&l2, &x, &set(&[&[1.0, 0.0], &[0.0, 2.0]])).unwrap(),
            1.5
        );
        assert_eq!(k_distance(&l2, &x, &set(&[&[0.0, 0.0]])).unwrap(), 0.0);
        assert_eq!(k_distance(&l2, &x, &set(&[&[3.0, 4.0]])).unwrap(), 5.0);
    }

    #[test]
    fn k_diversity_examples() {
        let l2 = DistanceMetric::euclidean();
        let l1 = DistanceMetric::manhattan();
        assert_eq!(
            k_diversity(&l2, &set(&[&[0.0, 0.0], &[3.0, 4.0]]))
                .unwrap()
                .value,
            5.0
        );
        let tri = k_diversity(&l1, &set(&[&[0.0, 0.0], &[1.0, 0.0], &[0.0, 1.0]])).unwrap();
        assert!((tri.value - 4.0 / 3.0).abs() < 1e-15);
        assert_eq!(
            k_diversity(&l2, &set(&[&[0.5, 0.5], &[0.5, 0.5]]))
                .unwrap()
                .value,
            0.0
        );
        let single = k_diversity(&l2, &set(&[&[1.0, 1.0]])).unwrap();
        assert!(single.degenerate);
        assert_eq!(single.value, 0.0);
    }

    proptest! {
        #[test]
        fn diversity_is_permutation_invariant(
            points in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 3), 2..7),
            rotate in 0usize..7,
        ) {
            let l1 = DistanceMetric::manhattan();
            let fvs: Vec<FeatureVector> = points.into_iter().map(|p| FeatureVector::new(p).unwrap()).collect();
            let mut shuffled = fvs.clone();
            shuffled.reverse();
            let n = shuffled.len();
            shuffled.rotate_left(rotate % n);
            let a = k_diversity(&l1, &PointSet::new(fvs).unwrap()).unwrap().value;
            let b = k_diversity(&l1, &PointSet::new(shuffled).unwrap()).unwrap().value;
            prop_assert!((a - b).abs() < 1e-12);
        }
    }
}
