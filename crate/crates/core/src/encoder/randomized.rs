//! Client-side randomization: bit flipping and k-ary randomized response.

use rand::distributions::{Bernoulli, Distribution};
use rand::Rng;

use super::EncoderError;

/// Largest epsilon used in the response probability; beyond it `e^eps`
/// already swamps any realistic domain size.
pub const MAX_RR_EPSILON: f64 = 50.0;

/// Flips each bit independently with probability `flip_prob`.
pub fn flip_bits<R: Rng + ?Sized>(bitmap: &[bool], flip_prob: f64, rng: &mut R) -> Result<Vec<bool>, EncoderError> {
    let coin =
        Bernoulli::new(flip_prob).map_err(|_| EncoderError::InvalidParameter("flip probability outside [0, 1]"))?;
    Ok(bitmap.iter().map(|&b| b ^ coin.sample(rng)).collect())
}

/// Probability that k-ary randomized response reports the true value.
pub fn rr_keep_probability(k: usize, epsilon: f64) -> f64 {
    let e = epsilon.min(MAX_RR_EPSILON).exp();
    e / (e + k as f64 - 1.0)
}

/// Reports `true_value` with probability `e^eps / (e^eps + k - 1)`, otherwise
/// a uniformly chosen other value.
pub fn k_ary_randomized_response<R: Rng + ?Sized>(
    true_value: usize,
    k: usize,
    epsilon: f64,
    rng: &mut R,
) -> Result<usize, EncoderError> {
    if k < 2 {
        return Err(EncoderError::InvalidParameter("randomized response needs k >= 2"));
    }
    if true_value >= k {
        return Err(EncoderError::InvalidParameter("true value outside [0, k)"));
    }
    if !(epsilon >= 0.0) {
        return Err(EncoderError::InvalidParameter("epsilon must be non-negative"));
    }
    if rng.gen::<f64>() < rr_keep_probability(k, epsilon) {
        return Ok(true_value);
    }
    let other = rng.gen_range(0..k - 1);
    Ok(if other >= true_value { other + 1 } else { other })
}

/// Unbiased frequency estimates from randomized-response counts.
#[derive(Clone, Copy, Debug)]
pub struct RrEstimator {
    pub k: usize,
    pub epsilon: f64,
}

impl RrEstimator {
    fn probabilities(&self) -> (f64, f64) {
        let p = rr_keep_probability(self.k, self.epsilon);
        let q = (1.0 - p) / (self.k as f64 - 1.0);
        (p, q)
    }

    /// Inverts the response matrix: `(c - n q) / (p - q)` per value.
    pub fn estimate(&self, observed: &[u64], n: u64) -> Vec<f64> {
        let (p, q) = self.probabilities();
        observed.iter().map(|&c| (c as f64 - n as f64 * q) / (p - q)).collect()
    }

    /// Probability that a given other value is reported in place of the truth.
    pub fn null_probability(&self) -> f64 {
        self.probabilities().1
    }
}
