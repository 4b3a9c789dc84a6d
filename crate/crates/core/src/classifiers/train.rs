//! Mini-batch gradient descent for the fixed-architecture MLP.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{Activation, ClassLabel, Classifier, DenseLayer, MlpModel};
use crate::data::Dataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub hidden: Vec<usize>,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            hidden: vec![20, 10],
            epochs: 100,
            batch_size: 8,
            learning_rate: 0.01,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub model: MlpModel,
    pub training_accuracy: f64,
}

/// Trains a ReLU network with two softmax outputs on cross-entropy loss.
///
/// Weights use He-normal initialisation from a ChaCha stream seeded with
/// `config.seed`, so a fixed seed reproduces the model bit for bit. If
/// every feature is constant the result is a constant model predicting the
/// majority class.
pub fn train_mlp(dataset: &Dataset, config: &TrainConfig) -> Result<TrainedModel> {
    if config.batch_size == 0 || !(config.learning_rate > 0.0) {
        return Err(Error::InvalidParameter(
            "batch size and learning rate must be positive".into(),
        ));
    }
    let examples = dataset.examples();
    let counts = dataset.class_counts();
    if counts[0] == 0 || counts[1] == 0 {
        return Err(Error::Degenerate(
            "training data must contain both classes".into(),
        ));
    }
    let dim = dataset.dim();

    let constant_features = (0..dim).all(|f| {
        let first = examples[0].features[f];
        examples.iter().all(|e| e.features[f] == first)
    });
    if constant_features {
        let majority = if counts[1] > counts[0] {
            ClassLabel::One
        } else {
            ClassLabel::Zero
        };
        let model = MlpModel::constant(dim, &config.hidden, majority)?;
        let training_accuracy = counts[majority.index()] as f64 / examples.len() as f64;
        return Ok(TrainedModel {
            model,
            training_accuracy,
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut dims = vec![dim];
    dims.extend_from_slice(&config.hidden);
    dims.push(2);
    let layers = dims
        .windows(2)
        .map(|w| {
            let (fan_in, fan_out) = (w[0], w[1]);
            let normal = Normal::new(0.0, (2.0 / fan_in as f64).sqrt()).expect("positive std");
            let mut layer = DenseLayer::zeros(fan_out, fan_in);
            layer
                .weights
                .iter_mut()
                .for_each(|v| *v = normal.sample(&mut rng));
            layer
        })
        .collect::<Vec<_>>();
    let mut activations = vec![Activation::Relu; layers.len()];
    *activations.last_mut().expect("non-empty") = Activation::Identity;
    let mut model = MlpModel::new(layers, activations)?;

    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut grads: Vec<DenseLayer> = model
        .layers()
        .iter()
        .map(|l| DenseLayer::zeros(l.rows, l.cols))
        .collect();
    let mut acts: Vec<Vec<f64>> = vec![Vec::new(); dims.len()];
    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(config.batch_size) {
            grads.iter_mut().for_each(|g| {
                g.weights.iter_mut().for_each(|v| *v = 0.0);
                g.bias.iter_mut().for_each(|v| *v = 0.0);
            });
            for &i in batch {
                let example = &examples[i];
                accumulate_gradient(
                    &model,
                    &example.features,
                    example.label,
                    &mut acts,
                    &mut grads,
                );
            }
            let step = config.learning_rate / batch.len() as f64;
            for (layer, grad) in model.layers_mut().iter_mut().zip(&grads) {
                layer
                    .weights
                    .iter_mut()
                    .zip(&grad.weights)
                    .for_each(|(w, g)| *w -= step * g);
                layer
                    .bias
                    .iter_mut()
                    .zip(&grad.bias)
                    .for_each(|(b, g)| *b -= step * g);
            }
        }
    }

    let correct = examples
        .iter()
        .filter(|e| model.predict(&e.features) == e.label)
        .count();
    Ok(TrainedModel {
        model,
        training_accuracy: correct as f64 / examples.len() as f64,
    })
}

/// Adds the cross-entropy gradient of one example into `grads`.
fn accumulate_gradient(
    model: &MlpModel,
    x: &[f64],
    label: ClassLabel,
    acts: &mut [Vec<f64>],
    grads: &mut [DenseLayer],
) {
    let layers = model.layers();
    acts[0].clear();
    acts[0].extend_from_slice(x);
    for (l, (layer, act)) in layers.iter().zip(model.activations()).enumerate() {
        let (before, after) = acts.split_at_mut(l + 1);
        layer.forward_into(&before[l], &mut after[0]);
        if *act == Activation::Relu {
            after[0].iter_mut().for_each(|v| *v = v.max(0.0));
        }
    }

    // softmax - onehot
    let logits = &acts[layers.len()];
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    let mut delta: Vec<f64> = exps.iter().map(|e| e / total).collect();
    delta[label.index()] -= 1.0;

    for l in (0..layers.len()).rev() {
        let input = &acts[l];
        let grad = &mut grads[l];
        let cols = layers[l].cols;
        for (r, d) in delta.iter().enumerate() {
            grad.bias[r] += d;
            let row = &mut grad.weights[r * cols..(r + 1) * cols];
            row.iter_mut().zip(input).for_each(|(g, a)| *g += d * a);
        }
        if l == 0 {
            break;
        }
        let mut prev = vec![0.0; cols];
        for (r, d) in delta.iter().enumerate() {
            let row = &layers[l].weights[r * cols..(r + 1) * cols];
            prev.iter_mut().zip(row).for_each(|(p, w)| *p += d * w);
        }
        // hidden layers are ReLU: gradient passes only where the unit was active
        prev.iter_mut().zip(input).for_each(|(p, a)| {
            if *a <= 0.0 {
                *p = 0.0;
            }
        });
        delta = prev;
    }
}
