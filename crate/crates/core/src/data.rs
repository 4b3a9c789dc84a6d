//! Dataset ingestion, min-max scaling, splitting and synthetic generators.

use std::path::Path;
use std::str::FromStr;

use log::warn;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::classifiers::{AnalyticClassifier, ClassLabel, Classifier};
use crate::error::{Error, Result};
use crate::geometry::FeatureVector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Example {
    pub features: FeatureVector,
    pub label: ClassLabel,
}

impl Example {
    pub fn new(features: FeatureVector, label: ClassLabel) -> Self {
        Self { features, label }
    }
}

/// Per-feature affine map onto `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinMaxScaler {
    pub mins: Vec<f64>,
    pub maxs: Vec<f64>,
}

impl MinMaxScaler {
    /// Fits on `dataset`. Constant features are reported in the second
    /// element by index; they map to 0.
    pub fn fit(dataset: &Dataset) -> (Self, Vec<usize>) {
        let dim = dataset.dim();
        let mut mins = vec![f64::INFINITY; dim];
        let mut maxs = vec![f64::NEG_INFINITY; dim];
        for e in dataset.examples() {
            for (f, v) in e.features.iter().enumerate() {
                mins[f] = mins[f].min(*v);
                maxs[f] = maxs[f].max(*v);
            }
        }
        let constant = (0..dim).filter(|&f| mins[f] == maxs[f]).collect();
        (Self { mins, maxs }, constant)
    }

    pub fn dim(&self) -> usize {
        self.mins.len()
    }

    pub fn transform(&self, x: &FeatureVector) -> Result<FeatureVector> {
        x.check_dim(self.dim())?;
        let values = x
            .iter()
            .zip(self.mins.iter().zip(&self.maxs))
            .map(|(v, (lo, hi))| if hi > lo { (v - lo) / (hi - lo) } else { 0.0 })
            .collect();
        FeatureVector::new(values)
    }

    /// Inverse of [`MinMaxScaler::transform`]; constant features return
    /// their single observed value.
    pub fn inverse(&self, x: &FeatureVector) -> Result<FeatureVector> {
        x.check_dim(self.dim())?;
        let values = x
            .iter()
            .zip(self.mins.iter().zip(&self.maxs))
            .map(|(v, (lo, hi))| if hi > lo { lo + v * (hi - lo) } else { *lo })
            .collect();
        FeatureVector::new(values)
    }

    pub fn transform_dataset(&self, dataset: &Dataset) -> Result<Dataset> {
        let examples = dataset
            .examples()
            .iter()
            .map(|e| Ok(Example::new(self.transform(&e.features)?, e.label)))
            .collect::<Result<Vec<_>>>()?;
        let mut out = Dataset::new(
            dataset.feature_names().to_vec(),
            examples,
            dataset.provenance(),
        )?;
        out.scaling = Some(self.clone());
        Ok(out)
    }
}

/// Labeled examples with feature metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    feature_names: Vec<String>,
    examples: Vec<Example>,
    scaling: Option<MinMaxScaler>,
    provenance: String,
}

impl Dataset {
    pub fn new(
        feature_names: Vec<String>,
        examples: Vec<Example>,
        provenance: impl Into<String>,
    ) -> Result<Self> {
        if feature_names.is_empty() {
            return Err(Error::InvalidParameter(
                "dataset needs at least one feature".into(),
            ));
        }
        if examples.is_empty() {
            return Err(Error::Degenerate("dataset has no examples".into()));
        }
        for e in &examples {
            e.features.check_dim(feature_names.len())?;
        }
        Ok(Self {
            feature_names,
            examples,
            scaling: None,
            provenance: provenance.into(),
        })
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn examples(&self) -> &[Example] {
        &self.examples
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.feature_names.len()
    }

    /// Scaling that produced these values from raw data, if any.
    pub fn scaling(&self) -> Option<&MinMaxScaler> {
        self.scaling.as_ref()
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    pub fn points(&self) -> Vec<FeatureVector> {
        self.examples.iter().map(|e| e.features.clone()).collect()
    }

    pub fn class_counts(&self) -> [usize; 2] {
        let mut counts = [0, 0];
        for e in &self.examples {
            counts[e.label.index()] += 1;
        }
        counts
    }

    /// Copy of the dataset with every label replaced by `classifier`'s prediction.
    pub fn relabel<C: Classifier + ?Sized>(&self, classifier: &C) -> Result<Dataset> {
        let examples = self
            .examples
            .iter()
            .map(|e| {
                Ok(Example::new(
                    e.features.clone(),
                    classifier.classify(&e.features)?,
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut out = Dataset::new(
            self.feature_names.clone(),
            examples,
            self.provenance.clone(),
        )?;
        out.scaling = self.scaling.clone();
        Ok(out)
    }

    fn subset(&self, indices: &[usize]) -> Result<Dataset> {
        let examples = indices.iter().map(|&i| self.examples[i].clone()).collect();
        let mut out = Dataset::new(
            self.feature_names.clone(),
            examples,
            self.provenance.clone(),
        )?;
        out.scaling = self.scaling.clone();
        Ok(out)
    }
}

/// Reads a headered CSV whose last column is a 0/1 label and whose other
/// columns are numeric features.
pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path)?;
    read_dataset(file, &path.display().to_string())
}

/// [`load_dataset`] over any reader. Rows and columns in errors are 1-based;
/// row 1 is the header.
pub fn read_dataset(reader: impl std::io::Read, provenance: &str) -> Result<Dataset> {
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = csv.headers()?.clone();
    if header.len() < 2 || header.iter().all(|h| h.is_empty()) {
        return Err(Error::Parse {
            row: 1,
            column: header.len(),
            message: "need at least one feature column and a label column".into(),
        });
    }
    let feature_names: Vec<String> = header
        .iter()
        .take(header.len() - 1)
        .map(String::from)
        .collect();
    let label_col = header.len();

    let mut examples = Vec::new();
    for (i, record) in csv.records().enumerate() {
        let row = i + 2;
        let record = record.map_err(|e| Error::Parse {
            row,
            column: 0,
            message: e.to_string(),
        })?;
        if record.len() != header.len() {
            return Err(Error::Parse {
                row,
                column: record.len(),
                message: format!("expected {} columns, found {}", header.len(), record.len()),
            });
        }
        let mut values = Vec::with_capacity(feature_names.len());
        for (c, cell) in record.iter().take(feature_names.len()).enumerate() {
            let v = f64::from_str(cell)
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::Parse {
                    row,
                    column: c + 1,
                    message: format!("`{cell}` is not a finite number"),
                })?;
            values.push(v);
        }
        let cell = &record[label_col - 1];
        let label = match cell.parse::<f64>() {
            Ok(v) if v == 0.0 => ClassLabel::Zero,
            Ok(v) if v == 1.0 => ClassLabel::One,
            _ => {
                return Err(Error::Parse {
                    row,
                    column: label_col,
                    message: format!("label `{cell}` is not 0 or 1"),
                })
            }
        };
        examples.push(Example::new(FeatureVector::new(values)?, label));
    }
    if examples.len() < 2 {
        return Err(Error::Parse {
            row: examples.len() + 2,
            column: 0,
            message: "need at least 2 data rows".into(),
        });
    }
    Dataset::new(feature_names, examples, provenance)
}

/// Scales every feature of `dataset` onto `[0, 1]` using its own ranges.
///
/// Returns the indices of constant features, which map to 0.
pub fn minmax_scale(dataset: &Dataset) -> Result<(Dataset, Vec<usize>)> {
    let (scaler, constant) = MinMaxScaler::fit(dataset);
    for f in &constant {
        warn!(
            "feature `{}` is constant; scaled to 0",
            dataset.feature_names()[*f]
        );
    }
    Ok((scaler.transform_dataset(dataset)?, constant))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub test_fraction: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            test_fraction: 0.25,
            seed: 0,
        }
    }
}

/// Shuffles with `spec.seed` and splits into `(train, test)`.
///
/// The test split gets `round(n * fraction)` examples, clamped so both
/// splits are non-empty. Each split keeps the original relative order.
pub fn train_test_split(dataset: &Dataset, spec: &SplitSpec) -> Result<(Dataset, Dataset)> {
    if !(spec.test_fraction > 0.0 && spec.test_fraction < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "test fraction must lie in (0, 1), got {}",
            spec.test_fraction
        )));
    }
    let n = dataset.len();
    if n < 2 {
        return Err(Error::Degenerate(
            "need at least 2 examples to split".into(),
        ));
    }
    let n_test = ((n as f64 * spec.test_fraction).round() as usize).clamp(1, n - 1);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(spec.seed));
    let mut test: Vec<usize> = order[..n_test].to_vec();
    let mut train: Vec<usize> = order[n_test..].to_vec();
    test.sort_unstable();
    train.sort_unstable();
    Ok((dataset.subset(&train)?, dataset.subset(&test)?))
}

/// Two-dimensional synthetic problems on the unit square.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SyntheticKind {
    Ball,
    Diamond,
    Cube,
    TwoGaussians,
}

impl FromStr for SyntheticKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ball" => Ok(SyntheticKind::Ball),
            "diamond" => Ok(SyntheticKind::Diamond),
            "cube" => Ok(SyntheticKind::Cube),
            "two_gaussians" | "two-gaussians" => Ok(SyntheticKind::TwoGaussians),
            other => Err(Error::InvalidParameter(format!(
                "unknown synthetic kind `{other}`"
            ))),
        }
    }
}

impl SyntheticKind {
    pub fn name(self) -> &'static str {
        match self {
            SyntheticKind::Ball => "ball",
            SyntheticKind::Diamond => "diamond",
            SyntheticKind::Cube => "cube",
            SyntheticKind::TwoGaussians => "two_gaussians",
        }
    }

    /// The classifier that labels the uniform kinds. Each region is centred
    /// at (0.5, 0.5) and sized to cover roughly a third of the square.
    pub fn analytic_classifier(self) -> Option<AnalyticClassifier> {
        let center = FeatureVector::from_vec_unchecked(vec![0.5, 0.5]);
        match self {
            SyntheticKind::Ball => AnalyticClassifier::ball(center, 0.3).ok(),
            SyntheticKind::Diamond => AnalyticClassifier::diamond(center, 0.4).ok(),
            SyntheticKind::Cube => AnalyticClassifier::cube(center, 0.3).ok(),
            SyntheticKind::TwoGaussians => None,
        }
    }
}

/// Generates `n` labeled points in `[0, 1]^2`.
///
/// Region kinds draw uniformly and label with
/// [`SyntheticKind::analytic_classifier`]. `TwoGaussians` alternates labels
/// and draws from N((0.3, 0.3), 0.12^2 I) for label 0 and
/// N((0.7, 0.7), 0.12^2 I) for label 1, clipped to the square.
pub fn synthetic_dataset(kind: SyntheticKind, n: usize, seed: u64) -> Result<Dataset> {
    if n < 10 {
        return Err(Error::InvalidParameter(format!(
            "synthetic datasets need n >= 10, got {n}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let names = vec!["x0".to_string(), "x1".to_string()];
    let provenance = format!("synthetic:{}:n={n}:seed={seed}", kind.name());
    let examples = match kind.analytic_classifier() {
        Some(classifier) => (0..n)
            .map(|_| {
                let x = FeatureVector::from_vec_unchecked(vec![rng.random(), rng.random()]);
                let label = classifier.predict(&x);
                Example::new(x, label)
            })
            .collect(),
        None => {
            let noise = Normal::new(0.0f64, 0.12).expect("positive std");
            (0..n)
                .map(|i| {
                    let label = if i % 2 == 0 {
                        ClassLabel::Zero
                    } else {
                        ClassLabel::One
                    };
                    let mean: f64 = if label == ClassLabel::Zero { 0.3 } else { 0.7 };
                    let x = FeatureVector::from_vec_unchecked(
                        (0..2)
                            .map(|_| (mean + noise.sample(&mut rng)).clamp(0.0, 1.0))
                            .collect(),
                    );
                    Example::new(x, label)
                })
                .collect()
        }
    };
    Dataset::new(names, examples, provenance)
}

/// `n` points drawn uniformly from `[lo, hi]^dim`, labeled by `classifier`.
pub fn sample_uniform<C: Classifier + ?Sized>(
    classifier: &C,
    lo: f64,
    hi: f64,
    n: usize,
    seed: u64,
) -> Result<Dataset> {
    if !(lo < hi) {
        return Err(Error::InvalidParameter("sampling box is empty".into()));
    }
    let dim = classifier.input_dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let examples = (0..n)
        .map(|_| {
            let x = FeatureVector::from_vec_unchecked(
                (0..dim).map(|_| rng.random_range(lo..hi)).collect(),
            );
            let label = classifier.predict(&x);
            Example::new(x, label)
        })
        .collect();
    let names = (0..dim).map(|i| format!("x{i}")).collect();
    Dataset::new(
        names,
        examples,
        format!("uniform[{lo},{hi}]^{dim}:n={n}:seed={seed}"),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn csv_dataset(text: &str) -> Result<Dataset> {
        read_dataset(text.as_bytes(), "inline")
    }

    #[test]
    fn loads_small_csv() {
        let d = csv_dataset("a,b,label\n1,2,0\n3,4,1\n5,6.5,1\n").unwrap();
        assert_eq!(d.len(), 3);
        assert_eq!(d.dim(), 2);
        assert_eq!(d.feature_names(), &["a", "b"]);
        assert_eq!(d.examples()[2].features.as_slice(), &[5.0, 6.5]);
        assert_eq!(d.class_counts(), [1, 2]);
    }

    #[test]
    fn csv_errors_name_location() {
        match csv_dataset("a,b,label\n1,2,0\n3,4,2\n") {
            Err(Error::Parse {
                row: 3, column: 3, ..
            }) => {}
            other => panic!("unexpected {other:?}"),
        }
        match csv_dataset("a,b,label\n1,x,0\n3,4,1\n") {
            Err(Error::Parse {
                row: 2, column: 2, ..
            }) => {}
            other => panic!("unexpected {other:?}"),
        }
        assert!(csv_dataset("").is_err());
        assert!(csv_dataset("a,label\n1,0\n").is_err());
        assert!(csv_dataset("label\n0\n1\n").is_err());
    }

    #[test]
    fn scaling_examples() {
        let d = csv_dataset("a,b,label\n2,5,0\n4,5,1\n6,5,0\n").unwrap();
        let (scaled, constant) = minmax_scale(&d).unwrap();
        let a: Vec<f64> = scaled.examples().iter().map(|e| e.features[0]).collect();
        let b: Vec<f64> = scaled.examples().iter().map(|e| e.features[1]).collect();
        assert_eq!(a, vec![0.0, 0.5, 1.0]);
        assert_eq!(b, vec![0.0, 0.0, 0.0]);
        assert_eq!(constant, vec![1]);
        assert!(scaled.scaling().is_some());
    }

    #[test]
    fn split_sizes_and_determinism() {
        let d = synthetic_dataset(SyntheticKind::Ball, 100, 3).unwrap();
        let spec = SplitSpec {
            test_fraction: 0.25,
            seed: 0,
        };
        let (train, test) = train_test_split(&d, &spec).unwrap();
        assert_eq!((train.len(), test.len()), (75, 25));
        let (train2, test2) = train_test_split(&d, &spec).unwrap();
        assert_eq!(train, train2);
        assert_eq!(test, test2);

        let small = csv_dataset("a,label\n1,0\n2,1\n3,0\n").unwrap();
        let (tr, te) = train_test_split(
            &small,
            &SplitSpec {
                test_fraction: 0.5,
                seed: 1,
            },
        )
        .unwrap();
        assert_eq!((tr.len(), te.len()), (1, 2));

        assert!(train_test_split(
            &d,
            &SplitSpec {
                test_fraction: 1.0,
                seed: 0
            }
        )
        .is_err());
        assert!(train_test_split(
            &d,
            &SplitSpec {
                test_fraction: 0.0,
                seed: 0
            }
        )
        .is_err());
    }

    #[test]
    fn split_is_a_partition() {
        let d = synthetic_dataset(SyntheticKind::TwoGaussians, 57, 4).unwrap();
        let (train, test) = train_test_split(
            &d,
            &SplitSpec {
                test_fraction: 0.3,
                seed: 9,
            },
        )
        .unwrap();
        let mut all: Vec<Vec<f64>> = train
            .examples()
            .iter()
            .chain(test.examples())
            .map(|e| e.features.as_slice().to_vec())
            .collect();
        let mut orig: Vec<Vec<f64>> = d
            .examples()
            .iter()
            .map(|e| e.features.as_slice().to_vec())
            .collect();
        all.sort_by(|a, b| a.partial_cmp(b).unwrap());
        orig.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(all, orig);
    }

    #[test]
    fn synthetic_labels_match_generator() {
        for kind in [
            SyntheticKind::Ball,
            SyntheticKind::Diamond,
            SyntheticKind::Cube,
        ] {
            let d = synthetic_dataset(kind, 200, 11).unwrap();
            let clf = kind.analytic_classifier().unwrap();
            for e in d.examples() {
                assert_eq!(clf.predict(&e.features), e.label);
                assert!(e.features.iter().all(|v| (0.0..=1.0).contains(v)));
            }
            let counts = d.class_counts();
            assert!(counts[0] > 0 && counts[1] > 0, "{kind:?}: {counts:?}");
            assert_eq!(d, synthetic_dataset(kind, 200, 11).unwrap());
        }
        assert!(synthetic_dataset(SyntheticKind::Ball, 9, 0).is_err());
    }

    proptest! {
        #[test]
        fn scaling_round_trips_and_is_monotone(
            rows in prop::collection::vec(prop::collection::vec(-10.0f64..10.0, 3), 2..30)
        ) {
            let examples = rows
                .iter()
                .map(|r| Example::new(FeatureVector::new(r.clone()).unwrap(), ClassLabel::Zero))
                .collect();
            let d = Dataset::new(vec!["a".into(), "b".into(), "c".into()], examples, "p").unwrap();
            let (scaler, constant) = MinMaxScaler::fit(&d);
            for (e, r) in d.examples().iter().zip(&rows) {
                let s = scaler.transform(&e.features).unwrap();
                prop_assert!(s.iter().all(|v| (0.0..=1.0).contains(v)));
                let back = scaler.inverse(&s).unwrap();
                for f in 0..3 {
                    if !constant.contains(&f) {
                        prop_assert!((back[f] - r[f]).abs() <= 1e-12);
                    }
                }
            }
            for f in 0..3 {
                for a in d.examples() {
                    for b in d.examples() {
                        if a.features[f] < b.features[f] {
                            prop_assert!(
                                scaler.transform(&a.features).unwrap()[f]
                                    <= scaler.transform(&b.features).unwrap()[f]
                            );
                        }
                    }
                }
            }
        }
    }
}
