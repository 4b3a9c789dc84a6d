//! Diverse, input-robust counterfactual explanations for tabular binary
//! classifiers, together with the brute-force machinery used to check the
//! robustness guarantees on small finite domains.

pub mod classifiers;
pub mod data;
pub mod error;
pub mod explainer;
pub mod geometry;
pub mod metrics;

pub use classifiers::{
    AnalyticClassifier, ClassLabel, Classifier, GridClassifier, MlpModel, TrainConfig,
};
pub use data::{Dataset, Example, MinMaxScaler, SplitSpec, SyntheticKind};
pub use error::{Error, Result, Step};
pub use explainer::{
    exhaustive_explain, explain, CounterfactualExplainer, CounterfactualSet, ExplainerConfig,
};
pub use geometry::{
    set_distance_max, set_distance_sum, DistanceMetric, FeatureVector, MetricKind, PointSet,
};
