//! Antipodal inputs around the centre of a ball.
//!
//! Two inputs `x` and `-x` lie a tiny `gap` apart at the centre of a
//! Euclidean ball of radius `r`. Their nearest counterfactuals sit on
//! opposite ends of the diameter, so single-counterfactual explanations
//! jump by `2r` for an input change of `gap`. A diverse set drawn from a
//! shared candidate pool stays put.

use std::fmt::Write as _;

use serde::Serialize;

use crate::classifiers::AnalyticClassifier;
use crate::data::{sample_uniform, Dataset};
use crate::error::{Error, Result};
use crate::explainer::{explain, ray_counterfactual, CounterfactualSet, ExplainerConfig};
use crate::geometry::{set_distance_max, DistanceMetric, FeatureVector, PointSet};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AntipodalConfig {
    pub radius: f64,
    pub gap: f64,
    pub gamma: f64,
    /// Candidate pool drawn uniformly from `[-2r, 2r]^2`.
    pub samples: usize,
    pub seed: u64,
}

impl Default for AntipodalConfig {
    fn default() -> Self {
        Self {
            radius: 1.0,
            gap: 0.01,
            gamma: 0.001,
            samples: 2000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AntipodalDemo {
    pub config: AntipodalConfig,
    pub inputs: [FeatureVector; 2],
    /// Nearest counterfactual of each input.
    pub singletons: [FeatureVector; 2],
    pub singleton_set_distance: f64,
    pub pipeline: [CounterfactualSet; 2],
    pub pipeline_set_distance: f64,
}

impl AntipodalDemo {
    /// Long-format table: `record,method,input,x0,x1,value`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("record,method,input,x0,x1,value\n");
        for (i, x) in self.inputs.iter().enumerate() {
            let _ = writeln!(out, "input,,{i},{},{},", x[0], x[1]);
        }
        for (i, c) in self.singletons.iter().enumerate() {
            let d = DistanceMetric::euclidean().eval(&self.inputs[i], c);
            let _ = writeln!(out, "counterfactual,singleton,{i},{},{},{d}", c[0], c[1]);
        }
        for (i, set) in self.pipeline.iter().enumerate() {
            for c in &set.counterfactuals {
                let _ = writeln!(
                    out,
                    "counterfactual,pipeline,{i},{},{},{}",
                    c.point[0], c.point[1], c.distance
                );
            }
        }
        let _ = writeln!(
            out,
            "set_distance_max,singleton,,,,{}",
            self.singleton_set_distance
        );
        let _ = writeln!(
            out,
            "set_distance_max,pipeline,,,,{}",
            self.pipeline_set_distance
        );
        out
    }
}

pub fn antipodal_demo(
    config: &AntipodalConfig,
    explainer: &ExplainerConfig,
) -> Result<AntipodalDemo> {
    let r = config.radius;
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "radius must be positive, got {r}"
        )));
    }
    if !(config.gap > 0.0 && config.gap < r) {
        return Err(Error::InvalidParameter(format!(
            "gap must lie in (0, r), got {}",
            config.gap
        )));
    }
    let l2 = DistanceMetric::euclidean();
    let ball = AnalyticClassifier::ball(FeatureVector::new(vec![0.0, 0.0])?, r)?;
    let half = config.gap / 2.0;
    let inputs = [
        FeatureVector::new(vec![half, 0.0])?,
        FeatureVector::new(vec![-half, 0.0])?,
    ];

    let mut singletons = Vec::with_capacity(2);
    for x in &inputs {
        let (point, _) = ray_counterfactual(&ball, &l2, x, x.as_slice(), 2.0 * r, config.gamma)?
            .ok_or_else(|| Error::Degenerate("ray never leaves the ball".into()))?;
        singletons.push(point);
    }
    let singleton_set_distance = set_distance_max(
        &l2,
        &PointSet::new(vec![singletons[0].clone()])?,
        &PointSet::new(vec![singletons[1].clone()])?,
    )?;

    let pool: Dataset = sample_uniform(&ball, -2.0 * r, 2.0 * r, config.samples, config.seed)?;
    let explainer = ExplainerConfig {
        gamma: config.gamma,
        ..explainer.clone()
    };
    let a = explain(&ball, &pool, &inputs[0], &explainer)?;
    let b = explain(&ball, &pool, &inputs[1], &explainer)?;
    let (sa, sb) = match (a.point_set(), b.point_set()) {
        (Some(sa), Some(sb)) => (sa, sb),
        _ => {
            return Err(Error::Degenerate(
                "pipeline returned no counterfactual".into(),
            ))
        }
    };
    let pipeline_set_distance = set_distance_max(&l2, &sa, &sb)?;
    let [s0, s1]: [FeatureVector; 2] = singletons.try_into().expect("two inputs");
    Ok(AntipodalDemo {
        config: config.clone(),
        inputs,
        singletons: [s0, s1],
        singleton_set_distance,
        pipeline: [a, b],
        pipeline_set_distance,
    })
}
