use super::{ClassLabel, Classifier};
use crate::error::{Error, Result};
use crate::geometry::{DistanceMetric, FeatureVector};

/// Largest grid accepted by the constructors.
pub const MAX_GRID_POINTS: usize = 1 << 20;

/// Tolerance used when matching a point against axis values.
const SNAP_TOL: f64 = 1e-9;

/// A classifier on a finite Cartesian-product domain.
///
/// Labels are stored densely in row-major order (last axis fastest).
/// Off-grid queries are answered by the label of the nearest grid point
/// along each axis.
#[derive(Debug, Clone, PartialEq)]
pub struct GridClassifier {
    axes: Vec<Vec<f64>>,
    strides: Vec<usize>,
    labels: Vec<ClassLabel>,
}

impl GridClassifier {
    /// `n` evenly spaced values from `lo` to `hi` inclusive.
    pub fn uniform_axis(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        match n {
            0 => Vec::new(),
            1 => vec![lo],
            _ => (0..n)
                .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
                .collect(),
        }
    }

    pub fn from_labels(axes: Vec<Vec<f64>>, labels: Vec<ClassLabel>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::InvalidParameter(
                "grid needs at least one axis".into(),
            ));
        }
        for axis in &axes {
            if axis.is_empty() {
                return Err(Error::InvalidParameter(
                    "grid axes must be non-empty".into(),
                ));
            }
            if axis.iter().any(|v| !v.is_finite()) || axis.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidParameter(
                    "grid axes must be finite and strictly increasing".into(),
                ));
            }
        }
        let size = product(&axes)?;
        if labels.len() != size {
            return Err(Error::DimensionMismatch {
                expected: size,
                found: labels.len(),
            });
        }
        let mut strides = vec![1; axes.len()];
        for d in (0..axes.len() - 1).rev() {
            strides[d] = strides[d + 1] * axes[d + 1].len();
        }
        Ok(Self {
            axes,
            strides,
            labels,
        })
    }

    /// Labels every grid point with `label_of`.
    pub fn from_fn(axes: Vec<Vec<f64>>, label_of: impl Fn(&[f64]) -> ClassLabel) -> Result<Self> {
        let size = product(&axes)?;
        let mut grid = Self::from_labels(axes, vec![ClassLabel::Zero; size])?;
        for i in 0..size {
            grid.labels[i] = label_of(&grid.coords(i));
        }
        Ok(grid)
    }

    /// Grid whose labels are those `classifier` assigns to each grid point.
    pub fn sample<C: Classifier + ?Sized>(axes: Vec<Vec<f64>>, classifier: &C) -> Result<Self> {
        if axes.len() != classifier.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: classifier.input_dim(),
                found: axes.len(),
            });
        }
        Self::from_fn(axes, |x| classifier.predict(x))
    }

    pub fn axes(&self) -> &[Vec<f64>] {
        &self.axes
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[ClassLabel] {
        &self.labels
    }

    pub fn label_at(&self, index: usize) -> ClassLabel {
        self.labels[index]
    }

    fn coords(&self, index: usize) -> Vec<f64> {
        self.axes
            .iter()
            .zip(&self.strides)
            .map(|(axis, stride)| axis[(index / stride) % axis.len()])
            .collect()
    }

    pub fn point(&self, index: usize) -> FeatureVector {
        FeatureVector::from_vec_unchecked(self.coords(index))
    }

    /// All grid points in index order.
    pub fn points(&self) -> Vec<FeatureVector> {
        (0..self.len()).map(|i| self.point(i)).collect()
    }

    /// Index of the grid point equal to `x`, if `x` lies on the grid.
    pub fn index_of(&self, x: &[f64]) -> Option<usize> {
        if x.len() != self.axes.len() {
            return None;
        }
        let mut index = 0;
        for ((axis, stride), v) in self.axes.iter().zip(&self.strides).zip(x) {
            let i = nearest_on_axis(axis, *v);
            if (axis[i] - v).abs() > SNAP_TOL {
                return None;
            }
            index += i * stride;
        }
        Some(index)
    }

    fn nearest_index(&self, x: &[f64]) -> usize {
        self.axes
            .iter()
            .zip(&self.strides)
            .zip(x)
            .map(|((axis, stride), v)| nearest_on_axis(axis, *v) * stride)
            .sum()
    }

    /// Minimum distance from `x` to a grid point of the other class;
    /// `f64::INFINITY` when no such point exists.
    pub fn cfd_bruteforce(&self, metric: &DistanceMetric, x: &FeatureVector) -> Result<f64> {
        x.check_dim(self.axes.len())?;
        let label = self.predict(x);
        Ok((0..self.len())
            .filter(|&i| self.labels[i] != label)
            .map(|i| metric.eval(x, &self.coords(i)))
            .fold(f64::INFINITY, f64::min))
    }

    pub fn is_single_class(&self) -> bool {
        self.labels.windows(2).all(|w| w[0] == w[1])
    }
}

fn product(axes: &[Vec<f64>]) -> Result<usize> {
    let size = axes
        .iter()
        .fold(1usize, |acc, a| acc.saturating_mul(a.len()));
    if size > MAX_GRID_POINTS {
        return Err(Error::GridTooLarge {
            size,
            limit: MAX_GRID_POINTS,
        });
    }
    Ok(size)
}

fn nearest_on_axis(axis: &[f64], v: f64) -> usize {
    let upper = axis.partition_point(|a| *a < v);
    if upper == 0 {
        0
    } else if upper == axis.len() {
        axis.len() - 1
    } else if (v - axis[upper - 1]) <= (axis[upper] - v) {
        upper - 1
    } else {
        upper
    }
}

impl Classifier for GridClassifier {
    fn input_dim(&self) -> usize {
        self.axes.len()
    }

    fn predict(&self, x: &[f64]) -> ClassLabel {
        self.labels[self.nearest_index(x)]
    }

    fn counterfactual_distance(&self, metric: &DistanceMetric, x: &FeatureVector) -> Option<f64> {
        self.index_of(x)?;
        self.cfd_bruteforce(metric, x)
            .ok()
            .filter(|d| d.is_finite())
    }
}
