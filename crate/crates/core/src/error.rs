use thiserror::Error;

/// Pipeline stage, used to tag errors raised inside [`crate::explainer::explain`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Step {
    OrderCandidates,
    DistanceFilter,
    DiversityFilter,
    BinarySearch,
}

impl std::fmt::Display for Step {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Step::OrderCandidates => "step 1 (order candidates)",
            Step::DistanceFilter => "step 2 (distance filter)",
            Step::DiversityFilter => "step 3 (diversity filter)",
            Step::BinarySearch => "step 4 (binary search)",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("feature vector must not be empty")]
    EmptyVector,

    #[error("feature value at position {index} is not finite")]
    NonFinite { index: usize },

    #[error("point set must not be empty")]
    EmptySet,

    #[error("invalid metric weights: {0}")]
    InvalidWeights(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("binary search requires endpoints of different classes")]
    SameClass,

    #[error("degenerate data: {0}")]
    Degenerate(String),

    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: usize,
        message: String,
    },

    #[error("grid has {size} points, more than the supported {limit}")]
    GridTooLarge { size: usize, limit: usize },

    #[error("no same-class perturbation found after {retries} draws")]
    PerturbationExhausted { retries: usize },

    #[error("{step} failed: {source}")]
    Pipeline {
        step: Step,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn at(step: Step) -> impl FnOnce(Error) -> Error {
        move |source| Error::Pipeline {
            step,
            source: Box::new(source),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
