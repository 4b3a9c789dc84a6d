use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ClassLabel, Classifier};
use crate::data::MinMaxScaler;
use crate::error::{Error, Result};

pub const MLP_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Identity,
}

impl Activation {
    fn apply(self, v: f64) -> f64 {
        match self {
            Activation::Relu => v.max(0.0),
            Activation::Identity => v,
        }
    }
}

/// Fully connected layer computing `weights * input + bias`.
///
/// `weights` is row-major with `rows` outputs and `cols` inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    pub rows: usize,
    pub cols: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl DenseLayer {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            weights: vec![0.0; rows * cols],
            bias: vec![0.0; rows],
        }
    }

    pub(crate) fn forward_into(&self, input: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(
            self.weights
                .chunks_exact(self.cols)
                .zip(&self.bias)
                .map(|(row, b)| row.iter().zip(input).map(|(w, x)| w * x).sum::<f64>() + b),
        );
    }
}

/// On-disk layout of a model file.
#[derive(Serialize, Deserialize)]
struct ModelFile {
    schema_version: u32,
    layers: Vec<DenseLayer>,
    activations: Vec<Activation>,
    labels: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    preprocessing: Option<MinMaxScaler>,
}

/// Feed-forward network with one or two outputs.
///
/// Two outputs are read as logits and compared (ties go to label 0); a
/// single output is a logit thresholded at zero (probability 0.5), again
/// with ties going to label 0.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    layers: Vec<DenseLayer>,
    activations: Vec<Activation>,
    labels: Vec<String>,
    preprocessing: Option<MinMaxScaler>,
}

impl MlpModel {
    pub fn new(layers: Vec<DenseLayer>, activations: Vec<Activation>) -> Result<Self> {
        let model = Self {
            layers,
            activations,
            labels: vec!["0".into(), "1".into()],
            preprocessing: None,
        };
        model.validate()?;
        Ok(model)
    }

    fn validate(&self) -> Result<()> {
        let invalid = |msg: String| Err(Error::InvalidParameter(msg));
        if self.layers.is_empty() {
            return invalid("model has no layers".into());
        }
        if self.activations.len() != self.layers.len() {
            return invalid(format!(
                "{} activations for {} layers",
                self.activations.len(),
                self.layers.len()
            ));
        }
        if self.labels.len() != 2 {
            return invalid(format!("expected 2 label names, got {}", self.labels.len()));
        }
        for (i, layer) in self.layers.iter().enumerate() {
            if layer.rows == 0 || layer.cols == 0 {
                return invalid(format!("layer {i} has an empty shape"));
            }
            if layer.weights.len() != layer.rows * layer.cols || layer.bias.len() != layer.rows {
                return invalid(format!(
                    "layer {i}: {}x{} weights need {} values and {} biases",
                    layer.rows,
                    layer.cols,
                    layer.rows * layer.cols,
                    layer.rows
                ));
            }
            if layer
                .weights
                .iter()
                .chain(&layer.bias)
                .any(|v| !v.is_finite())
            {
                return invalid(format!("layer {i} contains non-finite parameters"));
            }
            if i > 0 && layer.cols != self.layers[i - 1].rows {
                return invalid(format!(
                    "layer {i} expects {} inputs but layer {} produces {}",
                    layer.cols,
                    i - 1,
                    self.layers[i - 1].rows
                ));
            }
        }
        let outputs = self.layers[self.layers.len() - 1].rows;
        if !(outputs == 1 || outputs == 2) {
            return invalid(format!(
                "output layer must have 1 or 2 units, got {outputs}"
            ));
        }
        if let Some(scaler) = &self.preprocessing {
            if scaler.dim() != self.input_dim() {
                return invalid("preprocessing dimension differs from model input".into());
            }
        }
        Ok(())
    }

    /// A network whose output ignores the input and always selects `label`.
    pub fn constant(input_dim: usize, hidden: &[usize], label: ClassLabel) -> Result<Self> {
        let mut dims = vec![input_dim];
        dims.extend_from_slice(hidden);
        dims.push(2);
        let mut layers: Vec<DenseLayer> = dims
            .windows(2)
            .map(|w| DenseLayer::zeros(w[1], w[0]))
            .collect();
        let last = layers.last_mut().expect("at least one layer");
        last.bias[label.index()] = 1.0;
        let mut activations = vec![Activation::Relu; layers.len()];
        *activations.last_mut().expect("at least one layer") = Activation::Identity;
        Self::new(layers, activations)
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        self.labels = labels;
        self.validate()?;
        Ok(self)
    }

    pub fn with_preprocessing(mut self, scaler: MinMaxScaler) -> Result<Self> {
        self.preprocessing = Some(scaler);
        self.validate()?;
        Ok(self)
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    pub(crate) fn layers_mut(&mut self) -> &mut [DenseLayer] {
        &mut self.layers
    }

    pub fn activations(&self) -> &[Activation] {
        &self.activations
    }

    pub fn label_names(&self) -> &[String] {
        &self.labels
    }

    /// Scaling the model was trained behind, if recorded.
    pub fn preprocessing(&self) -> Option<&MinMaxScaler> {
        self.preprocessing.as_ref()
    }

    /// Output-layer values for `x`.
    pub fn logits(&self, x: &[f64]) -> Vec<f64> {
        let mut current = x.to_vec();
        let mut next = Vec::new();
        for (layer, act) in self.layers.iter().zip(&self.activations) {
            layer.forward_into(&current, &mut next);
            next.iter_mut().for_each(|v| *v = act.apply(*v));
            std::mem::swap(&mut current, &mut next);
        }
        current
    }

    pub fn to_json(&self) -> Result<String> {
        let file = ModelFile {
            schema_version: MLP_SCHEMA_VERSION,
            layers: self.layers.clone(),
            activations: self.activations.clone(),
            labels: self.labels.clone(),
            preprocessing: self.preprocessing.clone(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text)?;
        if file.schema_version != MLP_SCHEMA_VERSION {
            return Err(Error::InvalidParameter(format!(
                "unsupported model schema version {}",
                file.schema_version
            )));
        }
        let model = Self {
            layers: file.layers,
            activations: file.activations,
            labels: file.labels,
            preprocessing: file.preprocessing,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}

impl Classifier for MlpModel {
    fn input_dim(&self) -> usize {
        self.layers[0].cols
    }

    fn predict(&self, x: &[f64]) -> ClassLabel {
        let out = self.logits(x);
        let one = match out.as_slice() {
            [z] => *z > 0.0,
            [z0, z1] => z1 > z0,
            _ => unreachable!("validated output width"),
        };
        if one {
            ClassLabel::One
        } else {
            ClassLabel::Zero
        }
    }
}
