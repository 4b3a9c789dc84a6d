//! Exhaustive checks of the robustness guarantees on finite grids.
//!
//! Every grid point is its own input. `cfd` and the exhaustive explanation
//! of each point are computed by brute force, then three properties are
//! checked over all same-class pairs:
//!
//! * Lipschitz bound: `cfd(x1) <= d(x1, x2) + cfd(x2)`.
//! * Weak robustness: for `d(x1, x2) < ε/2`, every strong counterfactual of
//!   `x1` belongs to the exhaustive explanation of `x2`.
//! * Safety persistence: a member `c` of the explanation of `x` with margin
//!   `δ > 0` stays a member for every `x'` with `d(x, x') < δ/2`.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::classifiers::{ClassLabel, GridClassifier};
use crate::data::SyntheticKind;
use crate::error::{Error, Result};
use crate::explainer::{exhaustive_members, MEMBERSHIP_TOL};
use crate::geometry::{set_distance_max, DistanceMetric, FeatureVector, PointSet};

/// Largest grid [`verify_theory`] will enumerate.
pub const MAX_VERIFY_POINTS: usize = 10_000;

const MAX_COUNTEREXAMPLES: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationConfig {
    pub epsilon: f64,
    /// Robustness constant the sampled pairs are compared against.
    pub k: f64,
    pub metric: DistanceMetric,
    /// Same-class pairs sampled for the robustness estimate.
    pub pair_budget: usize,
    pub seed: u64,
}

impl Default for VerificationConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.2,
            k: 1.0,
            metric: DistanceMetric::euclidean(),
            pair_budget: 200,
            seed: 0,
        }
    }
}

impl VerificationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon.is_finite() && self.epsilon >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "epsilon must be non-negative, got {}",
                self.epsilon
            )));
        }
        if !(self.k.is_finite() && self.k > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "k must be positive, got {}",
                self.k
            )));
        }
        Ok(())
    }
}

/// Labelled grids over `[0, 1]^2` used by the verification harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridScenario {
    /// Label 1 iff `x0 >= 0.6`.
    Halfspace,
    Ball,
    Diamond,
    Cube,
}

impl GridScenario {
    pub const ALL: [GridScenario; 4] = [
        GridScenario::Halfspace,
        GridScenario::Ball,
        GridScenario::Diamond,
        GridScenario::Cube,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GridScenario::Halfspace => "halfspace",
            GridScenario::Ball => "ball",
            GridScenario::Diamond => "diamond",
            GridScenario::Cube => "cube",
        }
    }

    /// An `n x n` grid with the scenario's labels.
    pub fn build(self, n: usize) -> Result<GridClassifier> {
        if n < 2 {
            return Err(Error::InvalidParameter(
                "grid needs at least 2 points per axis".into(),
            ));
        }
        let axis = GridClassifier::uniform_axis(0.0, 1.0, n);
        let axes = vec![axis.clone(), axis];
        let kind = match self {
            GridScenario::Halfspace => {
                // the slack keeps 0.6 itself on the upper side despite rounding
                return GridClassifier::from_fn(axes, |p| {
                    if p[0] >= 0.6 - 1e-9 {
                        ClassLabel::One
                    } else {
                        ClassLabel::Zero
                    }
                });
            }
            GridScenario::Ball => SyntheticKind::Ball,
            GridScenario::Diamond => SyntheticKind::Diamond,
            GridScenario::Cube => SyntheticKind::Cube,
        };
        let classifier = kind.analytic_classifier().expect("region scenario");
        GridClassifier::sample(axes, &classifier)
    }
}

impl fmt::Display for GridScenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GridScenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        GridScenario::ALL
            .into_iter()
            .find(|g| g.name() == s.to_ascii_lowercase())
            .ok_or_else(|| {
                Error::InvalidParameter(format!(
                    "unknown scenario {s:?} (expected halfspace, ball, diamond or cube)"
                ))
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Counterexample {
    pub x1: Vec<f64>,
    pub x2: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counterfactual: Option<Vec<f64>>,
    /// The two sides of the violated inequality.
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub checked: u64,
    pub violations: u64,
    /// At most ten, in enumeration order.
    pub counterexamples: Vec<Counterexample>,
}

impl CheckResult {
    fn record(&mut self, ok: bool, example: impl FnOnce() -> Counterexample) {
        self.checked += 1;
        if !ok {
            self.violations += 1;
            if self.counterexamples.len() < MAX_COUNTEREXAMPLES {
                self.counterexamples.push(example());
            }
        }
    }
}

/// Largest `set_distance_max / d` seen over sampled same-class pairs with
/// `0 < d < ε`; the smallest `k` the sample is consistent with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessEstimate {
    pub pairs: usize,
    pub empirical_k: f64,
    /// Pairs whose ratio exceeds the configured `k`.
    pub exceeding: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub points: usize,
    pub epsilon: f64,
    pub k: f64,
    pub metric: String,
    pub lipschitz: CheckResult,
    pub weak_robustness: CheckResult,
    pub safety: CheckResult,
    pub robustness: RobustnessEstimate,
}

impl VerificationReport {
    pub fn violations(&self) -> u64 {
        self.lipschitz.violations + self.weak_robustness.violations + self.safety.violations
    }
}

pub fn verify_theory(
    grid: &GridClassifier,
    config: &VerificationConfig,
) -> Result<VerificationReport> {
    verify_theory_with(grid, config, |_, members| members)
}

/// Like [`verify_theory`], but every exhaustive explanation passes through
/// `tamper(x_index, members)` first. Used to check that the harness notices
/// a broken explainer.
pub fn verify_theory_with(
    grid: &GridClassifier,
    config: &VerificationConfig,
    tamper: impl Fn(usize, Vec<usize>) -> Vec<usize>,
) -> Result<VerificationReport> {
    config.validate()?;
    let n = grid.len();
    if n > MAX_VERIFY_POINTS {
        return Err(Error::GridTooLarge {
            size: n,
            limit: MAX_VERIFY_POINTS,
        });
    }
    let metric = &config.metric;
    let eps = config.epsilon;
    let points = grid.points();
    let labels = grid.labels();

    let cfd: Vec<f64> = (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| labels[j] != labels[i])
                .map(|j| metric.eval(&points[i], &points[j]))
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let members: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            let mut m = tamper(i, exhaustive_members(grid, metric, &points, i, cfd[i], eps));
            m.sort_unstable();
            m
        })
        .collect();
    let is_member = |x: usize, c: usize| members[x].binary_search(&c).is_ok();
    let pt = |i: usize| points[i].as_slice().to_vec();

    // same-class neighbours within ε, nearest first
    let mut near: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    let mut lipschitz = CheckResult::default();
    for i in 0..n {
        for j in 0..n {
            if labels[i] != labels[j] {
                continue;
            }
            let d = metric.eval(&points[i], &points[j]);
            if cfd[i].is_finite() || cfd[j].is_finite() {
                let rhs = d + cfd[j];
                lipschitz.record(cfd[i] <= rhs + 1e-9, || Counterexample {
                    x1: pt(i),
                    x2: pt(j),
                    counterfactual: None,
                    lhs: cfd[i],
                    rhs,
                });
            }
            if d < eps {
                near[i].push((j, d));
            }
        }
        near[i].sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    }

    let mut weak = CheckResult::default();
    for x1 in 0..n {
        if !cfd[x1].is_finite() {
            continue;
        }
        let strong: Vec<usize> = (0..n)
            .filter(|&c| {
                labels[c] != labels[x1]
                    && metric.eval(&points[x1], &points[c]) <= cfd[x1] + MEMBERSHIP_TOL
            })
            .collect();
        for &(x2, _) in near[x1].iter().take_while(|(_, d)| *d < eps / 2.0) {
            for &c in &strong {
                weak.record(is_member(x2, c), || Counterexample {
                    x1: pt(x1),
                    x2: pt(x2),
                    counterfactual: Some(pt(c)),
                    lhs: metric.eval(&points[x2], &points[c]),
                    rhs: cfd[x2] + eps,
                });
            }
        }
    }

    let mut safety = CheckResult::default();
    for x in 0..n {
        for &c in &members[x] {
            let delta = cfd[x] + eps - metric.eval(&points[x], &points[c]);
            if !(delta > 0.0) {
                continue;
            }
            for &(x2, _) in near[x].iter().take_while(|(_, d)| *d < delta / 2.0) {
                safety.record(is_member(x2, c), || Counterexample {
                    x1: pt(x),
                    x2: pt(x2),
                    counterfactual: Some(pt(c)),
                    lhs: metric.eval(&points[x2], &points[c]),
                    rhs: cfd[x2] + eps,
                });
            }
        }
    }

    let robustness = estimate_k(config, &points, &members, &near)?;
    Ok(VerificationReport {
        points: n,
        epsilon: eps,
        k: config.k,
        metric: metric.kind().short_name().to_string(),
        lipschitz,
        weak_robustness: weak,
        safety,
        robustness,
    })
}

fn estimate_k(
    config: &VerificationConfig,
    points: &[FeatureVector],
    members: &[Vec<usize>],
    near: &[Vec<(usize, f64)>],
) -> Result<RobustnessEstimate> {
    let candidates: Vec<usize> = (0..points.len())
        .filter(|&i| {
            !members[i].is_empty()
                && near[i]
                    .iter()
                    .any(|&(j, d)| d > 0.0 && !members[j].is_empty())
        })
        .collect();
    let mut estimate = RobustnessEstimate {
        pairs: 0,
        empirical_k: 0.0,
        exceeding: 0,
    };
    if candidates.is_empty() {
        return Ok(estimate);
    }
    let set_of = |i: usize| PointSet::new(members[i].iter().map(|&c| points[c].clone()).collect());
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    for _ in 0..config.pair_budget {
        let i = candidates[rng.random_range(0..candidates.len())];
        let partners: Vec<(usize, f64)> = near[i]
            .iter()
            .copied()
            .filter(|&(j, d)| d > 0.0 && !members[j].is_empty())
            .collect();
        let (j, d) = partners[rng.random_range(0..partners.len())];
        let ratio = set_distance_max(&config.metric, &set_of(i)?, &set_of(j)?)? / d;
        estimate.pairs += 1;
        estimate.empirical_k = estimate.empirical_k.max(ratio);
        if ratio > config.k {
            estimate.exceeding += 1;
        }
    }
    Ok(estimate)
}
