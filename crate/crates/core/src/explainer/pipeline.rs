use log::{debug, warn};

use super::{
    binary_search_cf, Candidate, CandidateSource, Counterfactual, CounterfactualExplainer,
    CounterfactualSet, DistanceSelection, DiversitySelection, ExplainerConfig, ExplanationStatus,
    StageSizes, EXPLANATION_SCHEMA_VERSION,
};
use crate::classifiers::Classifier;
use crate::data::Dataset;
use crate::error::{Error, Result, Step};
use crate::geometry::{cosine_distance, DistanceMetric, FeatureVector};

/// Cosine distances at or below this are treated as the same direction.
const PARALLEL_TOL: f64 = 1e-12;

/// Step 1: points of `dataset` in the other class than `x`, ascending by
/// distance, ties kept in dataset order.
pub fn order_candidates<C: Classifier + ?Sized>(
    dataset: &Dataset,
    classifier: &C,
    metric: &DistanceMetric,
    x: &FeatureVector,
    source: CandidateSource,
) -> Result<Vec<Candidate>> {
    x.check_dim(dataset.dim())?;
    let label = classifier.classify(x)?;
    let mut candidates = Vec::new();
    for (i, e) in dataset.examples().iter().enumerate() {
        let other = match source {
            CandidateSource::Prediction => classifier.classify(&e.features)? != label,
            CandidateSource::DatasetLabel => e.label != label,
        };
        if other {
            candidates.push(Candidate {
                point: e.features.clone(),
                distance: metric.distance(x, &e.features)?,
                source_index: i,
            });
        }
    }
    candidates.sort_by(|a, b| a.distance.total_cmp(&b.distance));
    Ok(candidates)
}

/// Step 2 over candidates sorted by ascending distance.
pub fn distance_filter(candidates: &[Candidate], selection: DistanceSelection) -> Vec<Candidate> {
    let Some(first) = candidates.first() else {
        return Vec::new();
    };
    match selection {
        DistanceSelection::NumberBased { count } => {
            candidates.iter().take(count).cloned().collect()
        }
        DistanceSelection::DistanceBased { tolerance } => {
            let threshold = (1.0 + tolerance) * first.distance;
            candidates
                .iter()
                .take_while(|c| c.distance <= threshold)
                .cloned()
                .collect()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiversityOutcome {
    pub kept: Vec<Candidate>,
    /// Candidates dropped in angle mode because they coincide with the input.
    pub degenerate: usize,
}

/// Step 3: greedy pass in order; a candidate is kept when it differs enough
/// from every candidate kept so far. `m` is the closest candidate distance,
/// used by the distance mode.
pub fn diversity_filter(
    candidates: &[Candidate],
    x: &FeatureVector,
    selection: DiversitySelection,
    metric: &DistanceMetric,
    m: f64,
) -> Result<DiversityOutcome> {
    let mut kept: Vec<Candidate> = Vec::new();
    let mut degenerate = 0;
    match selection {
        DiversitySelection::AngleBased { threshold } => {
            let mut directions: Vec<Vec<f64>> = Vec::new();
            for c in candidates {
                let dir = c.point.offset_from(x);
                if dir.iter().all(|v| *v == 0.0) {
                    degenerate += 1;
                    continue;
                }
                let diverse = directions.iter().all(|k| {
                    let d = cosine_distance(&dir, k).expect("non-zero directions");
                    d >= threshold && d > PARALLEL_TOL
                });
                if diverse {
                    directions.push(dir);
                    kept.push(c.clone());
                }
            }
        }
        DiversitySelection::DistanceBased { threshold } => {
            if !(m > 0.0 && m.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "distance-based diversity needs a positive minimum distance, got {m}"
                )));
            }
            let min_gap = (1.0 + threshold) * m;
            for c in candidates {
                if kept
                    .iter()
                    .all(|k| metric.eval(&c.point, &k.point) >= min_gap)
                {
                    kept.push(c.clone());
                }
            }
        }
    }
    Ok(DiversityOutcome { kept, degenerate })
}

/// Runs steps 1-4 and truncates to `config.max_counterfactuals`.
///
/// Every returned point is re-checked with `classifier`; points that do not
/// flip the label are dropped with a warning. With `minimise` the
/// survivors are bisected towards `x` and re-sorted by their new distance
/// before truncation.
pub fn explain<C: Classifier + ?Sized>(
    classifier: &C,
    dataset: &Dataset,
    x: &FeatureVector,
    config: &ExplainerConfig,
) -> Result<CounterfactualSet> {
    config.validate()?;
    let metric = &config.metric;
    let label = classifier
        .classify(x)
        .map_err(Error::at(Step::OrderCandidates))?;

    let ordered = order_candidates(dataset, classifier, metric, x, config.candidate_source)
        .map_err(Error::at(Step::OrderCandidates))?;
    if ordered.is_empty() {
        let mut set = CounterfactualSet::empty(x.clone(), label);
        set.warnings
            .push("no candidate of the other class in the dataset".into());
        return Ok(set);
    }
    let filtered = distance_filter(&ordered, config.distance_selection);
    let m = ordered[0].distance;
    let diverse = diversity_filter(&filtered, x, config.diversity_selection, metric, m)
        .map_err(Error::at(Step::DiversityFilter))?;
    debug!(
        "candidates: {} ordered, {} after distance filter, {} after diversity filter",
        ordered.len(),
        filtered.len(),
        diverse.kept.len()
    );

    let mut warnings = Vec::new();
    if diverse.degenerate > 0 {
        warnings.push(format!(
            "{} candidate(s) coincide with the input and were skipped",
            diverse.degenerate
        ));
    }

    let mut items = Vec::with_capacity(diverse.kept.len());
    for cand in &diverse.kept {
        if classifier.predict(&cand.point) == label {
            warnings.push(format!(
                "candidate {} does not flip the prediction and was dropped",
                cand.source_index
            ));
            continue;
        }
        if config.minimise {
            let (point, stats) = binary_search_cf(classifier, metric, x, &cand.point, config.gamma)
                .map_err(Error::at(Step::BinarySearch))?;
            if classifier.predict(&point) == label {
                warnings.push(format!(
                    "bisection of candidate {} ended on the input's class",
                    cand.source_index
                ));
                continue;
            }
            items.push(Counterfactual {
                distance: metric.eval(x, &point),
                point,
                safety_margin: None,
                search: Some(stats),
                source_index: Some(cand.source_index),
            });
        } else {
            items.push(Counterfactual {
                point: cand.point.clone(),
                distance: cand.distance,
                safety_margin: None,
                search: None,
                source_index: Some(cand.source_index),
            });
        }
    }
    items.sort_by(|a, b| a.distance.total_cmp(&b.distance));
    items.truncate(config.max_counterfactuals);

    if let Some(cfd) = classifier.counterfactual_distance(metric, x) {
        for item in &mut items {
            item.safety_margin = Some(cfd + config.epsilon - item.distance);
        }
    }
    for w in &warnings {
        warn!("{w}");
    }

    let status = if items.is_empty() {
        ExplanationStatus::NoCounterfactual
    } else {
        ExplanationStatus::Ok
    };
    Ok(CounterfactualSet {
        schema_version: EXPLANATION_SCHEMA_VERSION,
        reference: x.clone(),
        reference_label: label,
        status,
        stages: Some(StageSizes {
            ordered: ordered.len(),
            distance_filtered: filtered.len(),
            diversity_filtered: diverse.kept.len(),
            returned: items.len(),
        }),
        counterfactuals: items,
        warnings,
    })
}

/// [`explain`] bound to a classifier, a candidate pool and a configuration.
pub struct PipelineExplainer<'a, C: ?Sized> {
    pub classifier: &'a C,
    pub dataset: &'a Dataset,
    pub config: ExplainerConfig,
}

impl<'a, C: Classifier + ?Sized> PipelineExplainer<'a, C> {
    pub fn new(classifier: &'a C, dataset: &'a Dataset, config: ExplainerConfig) -> Self {
        Self {
            classifier,
            dataset,
            config,
        }
    }
}

impl<C: Classifier + ?Sized> CounterfactualExplainer for PipelineExplainer<'_, C> {
    fn explain(&self, x: &FeatureVector) -> Result<CounterfactualSet> {
        explain(self.classifier, self.dataset, x, &self.config)
    }
}
