//! Gaussian perturbation protocol.
//!
//! Each input is explained, then perturbed `repetitions` times into a
//! same-class neighbour that is explained as well; the two explanation sets
//! are compared under L1 and L2. Aggregates pool every trial (they are not
//! averaged per input first) and use the population standard deviation.

use std::fmt::Write as _;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::perturb::{perturb_same_class, trial_rng, PerturbationConfig};
use super::quality::{k_distance, k_diversity};
use crate::classifiers::Classifier;
use crate::error::{Error, Result};
use crate::explainer::{CounterfactualExplainer, CounterfactualSet};
use crate::geometry::{
    set_distance_max, set_distance_sum, DistanceMetric, FeatureVector, PointSet,
};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    pub perturbation: PerturbationConfig,
    pub repetitions: usize,
    pub seed: u64,
    /// Wall-clock times make reports non-reproducible, so they are opt-in.
    pub record_timings: bool,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self {
            perturbation: PerturbationConfig::default(),
            repetitions: 3,
            seed: 0,
            record_timings: false,
        }
    }
}

/// Proximity and diversity of a single explanation set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SetQuality {
    pub k_distance: f64,
    pub k_diversity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputRecord {
    pub input_id: usize,
    pub size: usize,
    pub l1: SetQuality,
    pub l2: SetQuality,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_ms: Option<f64>,
}

/// Measures of the perturbed explanation and its distance to the original.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialMeasures {
    pub k_distance: f64,
    pub k_diversity: f64,
    pub set_distance_sum: f64,
    pub set_distance_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub input_id: usize,
    pub perturbation_id: usize,
    pub draws: usize,
    pub size: usize,
    pub l1: TrialMeasures,
    pub l2: TrialMeasures,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_ms: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureRecord {
    pub input_id: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perturbation_id: Option<usize>,
    pub reason: String,
}

/// One line of the aggregate CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub method: String,
    pub dataset: String,
    pub metric: String,
    pub mean: f64,
    pub std: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessReport {
    pub schema_version: u32,
    pub method: String,
    pub dataset: String,
    pub sigma: f64,
    pub repetitions: usize,
    pub seed: u64,
    pub aggregation: String,
    pub inputs: Vec<InputRecord>,
    pub trials: Vec<TrialRecord>,
    pub failures: Vec<FailureRecord>,
    pub aggregates: Vec<AggregateRow>,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

impl RobustnessReport {
    /// Rebuilds [`RobustnessReport::aggregates`] from the records.
    ///
    /// `k_distance_*`, `k_diversity_*` and `size` pool the input and trial
    /// explanations; the set distances pool the trials.
    pub fn compute_aggregates(&self) -> Vec<AggregateRow> {
        let mut rows = Vec::new();
        let mut push = |metric: &str, values: Vec<f64>| {
            let (mean, std) = mean_std(&values);
            rows.push(AggregateRow {
                method: self.method.clone(),
                dataset: self.dataset.clone(),
                metric: metric.to_string(),
                mean,
                std,
                count: values.len(),
            });
        };
        let inputs = &self.inputs;
        let trials = &self.trials;
        let pooled = |fi: fn(&InputRecord) -> f64, ft: fn(&TrialRecord) -> f64| -> Vec<f64> {
            inputs.iter().map(fi).chain(trials.iter().map(ft)).collect()
        };
        push(
            "k_distance_l1",
            pooled(|i| i.l1.k_distance, |t| t.l1.k_distance),
        );
        push(
            "k_distance_l2",
            pooled(|i| i.l2.k_distance, |t| t.l2.k_distance),
        );
        push(
            "k_diversity_l1",
            pooled(|i| i.l1.k_diversity, |t| t.l1.k_diversity),
        );
        push(
            "k_diversity_l2",
            pooled(|i| i.l2.k_diversity, |t| t.l2.k_diversity),
        );
        push(
            "set_distance_sum_l1",
            trials.iter().map(|t| t.l1.set_distance_sum).collect(),
        );
        push(
            "set_distance_sum_l2",
            trials.iter().map(|t| t.l2.set_distance_sum).collect(),
        );
        push(
            "set_distance_max_l1",
            trials.iter().map(|t| t.l1.set_distance_max).collect(),
        );
        push(
            "set_distance_max_l2",
            trials.iter().map(|t| t.l2.set_distance_max).collect(),
        );
        push("size", pooled(|i| i.size as f64, |t| t.size as f64));
        let times: Vec<f64> = inputs
            .iter()
            .filter_map(|i| i.wall_time_ms)
            .chain(trials.iter().filter_map(|t| t.wall_time_ms))
            .collect();
        if !times.is_empty() {
            push("wall_time_ms", times);
        }
        rows
    }

    pub fn aggregate(&self, metric: &str) -> Option<&AggregateRow> {
        self.aggregates.iter().find(|r| r.metric == metric)
    }

    /// Mean of a trial measure per input, in input order. `select` picks
    /// the measure from a trial.
    pub fn per_input_mean(&self, select: impl Fn(&TrialRecord) -> f64) -> Vec<(usize, f64)> {
        let mut out: Vec<(usize, f64)> = Vec::new();
        for input in &self.inputs {
            let values: Vec<f64> = self
                .trials
                .iter()
                .filter(|t| t.input_id == input.input_id)
                .map(&select)
                .collect();
            if !values.is_empty() {
                out.push((input.input_id, mean_std(&values).0));
            }
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn aggregate_csv(&self) -> String {
        write_aggregate_csv(std::slice::from_ref(self))
    }
}

/// Aggregate table of several reports with the fixed column order
/// `method,dataset,metric,mean,std`.
pub fn write_aggregate_csv(reports: &[RobustnessReport]) -> String {
    let mut out = String::from("method,dataset,metric,mean,std\n");
    for report in reports {
        for row in &report.aggregates {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                csv_field(&row.method),
                csv_field(&row.dataset),
                csv_field(&row.metric),
                row.mean,
                row.std
            );
        }
    }
    out
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn quality(metric: &DistanceMetric, x: &FeatureVector, set: &PointSet) -> Result<SetQuality> {
    Ok(SetQuality {
        k_distance: k_distance(metric, x, set)?,
        k_diversity: k_diversity(metric, set)?.value,
    })
}

fn timed<T>(enabled: bool, f: impl FnOnce() -> T) -> (T, Option<f64>) {
    let start = Instant::now();
    let out = f();
    let elapsed = enabled.then(|| start.elapsed().as_secs_f64() * 1e3);
    (out, elapsed)
}

fn non_empty(set: &CounterfactualSet) -> std::result::Result<PointSet, String> {
    set.point_set()
        .ok_or_else(|| "explanation is empty".to_string())
}

/// Runs the perturbation protocol for `explainer` over `inputs`.
///
/// Input `i` uses the random stream [`trial_rng`]`(seed, i, r)` for
/// repetition `r`. Inputs and trials whose explanation fails or comes back
/// empty are recorded in `failures` and left out of the aggregates.
pub fn robustness_protocol<C, E>(
    classifier: &C,
    explainer: &E,
    inputs: &[FeatureVector],
    method: &str,
    dataset: &str,
    config: &ProtocolConfig,
) -> Result<RobustnessReport>
where
    C: Classifier + ?Sized,
    E: CounterfactualExplainer + ?Sized,
{
    if !(config.perturbation.sigma > 0.0) {
        return Err(Error::InvalidParameter("sigma must be positive".into()));
    }
    let l1 = DistanceMetric::manhattan();
    let l2 = DistanceMetric::euclidean();
    let mut report = RobustnessReport {
        schema_version: REPORT_SCHEMA_VERSION,
        method: method.to_string(),
        dataset: dataset.to_string(),
        sigma: config.perturbation.sigma,
        repetitions: config.repetitions,
        seed: config.seed,
        aggregation: "pooled over all trials; population std".into(),
        inputs: Vec::new(),
        trials: Vec::new(),
        failures: Vec::new(),
        aggregates: Vec::new(),
    };

    for (input_id, x) in inputs.iter().enumerate() {
        let (explained, wall) = timed(config.record_timings, || explainer.explain(x));
        let original = match explained
            .map_err(|e| e.to_string())
            .and_then(|s| non_empty(&s))
        {
            Ok(set) => set,
            Err(reason) => {
                report.failures.push(FailureRecord {
                    input_id,
                    perturbation_id: None,
                    reason,
                });
                continue;
            }
        };
        report.inputs.push(InputRecord {
            input_id,
            size: original.len(),
            l1: quality(&l1, x, &original)?,
            l2: quality(&l2, x, &original)?,
            wall_time_ms: wall,
        });

        for rep in 0..config.repetitions {
            let mut rng = trial_rng(config.seed, input_id, rep);
            let perturbed = match perturb_same_class(classifier, x, &config.perturbation, &mut rng)
            {
                Ok(p) => p,
                Err(e) => {
                    report.failures.push(FailureRecord {
                        input_id,
                        perturbation_id: Some(rep),
                        reason: e.to_string(),
                    });
                    continue;
                }
            };
            let (explained, wall) = timed(config.record_timings, || {
                explainer.explain(&perturbed.point)
            });
            let other = match explained
                .map_err(|e| e.to_string())
                .and_then(|s| non_empty(&s))
            {
                Ok(set) => set,
                Err(reason) => {
                    report.failures.push(FailureRecord {
                        input_id,
                        perturbation_id: Some(rep),
                        reason,
                    });
                    continue;
                }
            };
            let measures = |metric: &DistanceMetric| -> Result<TrialMeasures> {
                let q = quality(metric, &perturbed.point, &other)?;
                Ok(TrialMeasures {
                    k_distance: q.k_distance,
                    k_diversity: q.k_diversity,
                    set_distance_sum: set_distance_sum(metric, &original, &other)?,
                    set_distance_max: set_distance_max(metric, &original, &other)?,
                })
            };
            report.trials.push(TrialRecord {
                input_id,
                perturbation_id: rep,
                draws: perturbed.draws,
                size: other.len(),
                l1: measures(&l1)?,
                l2: measures(&l2)?,
                wall_time_ms: wall,
            });
        }
    }
    report.aggregates = report.compute_aggregates();
    Ok(report)
}
