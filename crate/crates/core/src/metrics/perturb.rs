use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::classifiers::Classifier;
use crate::error::{Error, Result};
use crate::geometry::FeatureVector;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbationConfig {
    /// Per-coordinate standard deviation in normalized space.
    pub sigma: f64,
    pub max_retries: usize,
    /// Box every draw is clipped to.
    pub clip: Option<(f64, f64)>,
}

impl Default for PerturbationConfig {
    fn default() -> Self {
        Self {
            sigma: 0.05,
            max_retries: 100,
            clip: Some((0.0, 1.0)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Perturbation {
    pub point: FeatureVector,
    /// Draws taken, including the accepted one.
    pub draws: usize,
}

/// Random stream for one protocol trial, fixed by `(seed, input, repetition)`.
pub fn trial_rng(seed: u64, input_id: usize, repetition: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((input_id as u64) << 32) | repetition as u64);
    rng
}

/// Draws `x + N(0, sigma^2 I)`, clipped, until the draw has `x`'s class.
pub fn perturb_same_class<C: Classifier + ?Sized, R: Rng + ?Sized>(
    classifier: &C,
    x: &FeatureVector,
    config: &PerturbationConfig,
    rng: &mut R,
) -> Result<Perturbation> {
    if !(config.sigma.is_finite() && config.sigma > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "sigma must be positive, got {}",
            config.sigma
        )));
    }
    let label = classifier.classify(x)?;
    let noise = Normal::new(0.0, config.sigma).expect("validated sigma");
    for draw in 1..=config.max_retries {
        let values = x
            .iter()
            .map(|v| {
                let p = v + noise.sample(rng);
                match config.clip {
                    Some((lo, hi)) => p.clamp(lo, hi),
                    None => p,
                }
            })
            .collect();
        let point = FeatureVector::from_vec_unchecked(values);
        if classifier.predict(&point) == label {
            return Ok(Perturbation { point, draws: draw });
        }
    }
    Err(Error::PerturbationExhausted {
        retries: config.max_retries,
    })
}
