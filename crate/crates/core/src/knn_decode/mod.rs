//! Example-based decoding: the vanilla next-token distribution mixed with
//! a temperature softmax over retrieved neighbors,
//!
//! ```text
//! p_kNN(t) ∝ Σ_{j : v_j = t} exp(-d_j / T)
//! p_EB     = λ · p_kNN + (1 - λ) · p_vanilla
//! ```
//!
//! and the bookkeeping that ties every emitted token back to the training
//! example supporting it.

mod beam;
mod example;

use serde::{Deserialize, Serialize};

use crate::datastore::{Neighbor, SearchMode};
use crate::error::{Error, Result};
use crate::seq2seq::{TokenDistribution, MAX_POSITIONS};

pub use beam::{correct, correct_observed, vanilla_beam, CorrectionResult, StepRecord};
pub use example::{choose_example, output_words, present, Example};

/// How a stored squared distance enters the kNN exponent.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistanceExponent {
    /// `exp(-d² / T)`
    #[default]
    Squared,
    /// `exp(-d / T)`
    Plain,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DecodeConfig {
    pub lambda: f64,
    pub k: usize,
    pub temperature: f64,
    pub beam_width: usize,
    /// Emitted tokens per hypothesis, EOS included.
    pub max_len: usize,
    /// Examples farther than this squared distance are not presented.
    pub distance_threshold: Option<f32>,
    pub search_mode: SearchMode,
    pub distance_exponent: DistanceExponent,
}

impl Default for DecodeConfig {
    fn default() -> Self {
        DecodeConfig {
            lambda: 0.5,
            k: 16,
            temperature: 1000.0,
            beam_width: 5,
            max_len: 100,
            distance_threshold: None,
            search_mode: SearchMode::Exact,
            distance_exponent: DistanceExponent::Squared,
        }
    }
}

pub(crate) fn check_lambda(lambda: f64) -> Result<()> {
    if (0.0..=1.0).contains(&lambda) {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!("lambda {lambda} outside [0, 1]")))
    }
}

impl DecodeConfig {
    pub fn validate(&self) -> Result<()> {
        check_lambda(self.lambda)?;
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "temperature {} must be positive and finite",
                self.temperature
            )));
        }
        if self.k == 0 || self.beam_width == 0 || self.max_len == 0 {
            return Err(Error::InvalidConfig(
                "k, beam_width and max_len must be at least 1".into(),
            ));
        }
        if self.max_len >= MAX_POSITIONS {
            return Err(Error::InvalidConfig(format!(
                "max_len must be below {MAX_POSITIONS}"
            )));
        }
        if matches!(self.distance_threshold, Some(t) if !(t >= 0.0)) {
            return Err(Error::InvalidConfig(
                "distance_threshold must be non-negative".into(),
            ));
        }
        Ok(())
    }

    pub fn with_lambda(&self, lambda: f64) -> Self {
        DecodeConfig {
            lambda,
            ..self.clone()
        }
    }
}

/// Temperature softmax of negative neighbor distances, summed per value
/// token. No neighbors gives the all-zero distribution, which
/// [`interpolate`] treats as "nothing retrieved".
pub fn knn_distribution(
    neighbors: &[Neighbor],
    vocab_size: usize,
    temperature: f64,
    exponent: DistanceExponent,
) -> TokenDistribution {
    let mut probs = vec![0.0f64; vocab_size];
    if neighbors.is_empty() {
        return TokenDistribution { probs };
    }
    let dist = |n: &Neighbor| match exponent {
        DistanceExponent::Squared => n.squared_distance as f64,
        DistanceExponent::Plain => (n.squared_distance as f64).sqrt(),
    };
    // shifting by the minimum leaves the normalized result unchanged
    let d_min = neighbors.iter().map(dist).fold(f64::INFINITY, f64::min);
    let mut z = 0.0;
    for n in neighbors {
        let w = (-(dist(n) - d_min) / temperature).exp();
        probs[n.value.token as usize] += w;
        z += w;
    }
    for p in probs.iter_mut() {
        *p /= z;
    }
    TokenDistribution { probs }
}

/// `λ · p_knn + (1 - λ) · p_vanilla`, or `p_vanilla` unchanged when
/// `p_knn` is the all-zero marker.
pub fn interpolate(
    p_vanilla: &TokenDistribution,
    p_knn: &TokenDistribution,
    lambda: f64,
) -> Result<TokenDistribution> {
    check_lambda(lambda)?;
    if p_vanilla.len() != p_knn.len() {
        return Err(Error::InvalidInput(format!(
            "distributions over {} and {} tokens",
            p_vanilla.len(),
            p_knn.len()
        )));
    }
    if p_knn.probs.iter().all(|&p| p == 0.0) {
        return Ok(p_vanilla.clone());
    }
    let probs = p_vanilla
        .probs
        .iter()
        .zip(&p_knn.probs)
        .map(|(&v, &k)| lambda * k + (1.0 - lambda) * v)
        .collect();
    Ok(TokenDistribution { probs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datastore::Value;

    fn nb(token: u32, d: f32) -> Neighbor {
        Neighbor {
            index: 0,
            key: vec![],
            value: Value {
                token,
                pair_id: 0,
                position: 0,
            },
            squared_distance: d,
        }
    }

    #[test]
    fn two_neighbor_golden_values() {
        let p = knn_distribution(&[nb(4, 1.0), nb(5, 2.0)], 6, 1.0, DistanceExponent::Squared);
        let e1 = (-1.0f64).exp();
        let e2 = (-2.0f64).exp();
        assert!((p.probs[4] - e1 / (e1 + e2)).abs() < 1e-12);
        assert!((p.probs[4] - 0.7311).abs() < 1e-4);
        assert!((p.probs[5] - 0.2689).abs() < 1e-4);
        assert_eq!(p.probs[0], 0.0);
    }

    #[test]
    fn shared_token_takes_all_mass() {
        let p = knn_distribution(&[nb(7, 0.3), nb(7, 9.0)], 8, 1.0, DistanceExponent::Squared);
        assert_eq!(p.probs[7], 1.0);
    }

    #[test]
    fn huge_temperature_counts_multiplicity() {
        let p = knn_distribution(
            &[nb(4, 0.0), nb(4, 3.0), nb(5, 8.0)],
            6,
            1e9,
            DistanceExponent::Squared,
        );
        assert!((p.probs[4] - 2.0 / 3.0).abs() < 1e-6);
        assert!((p.probs[5] - 1.0 / 3.0).abs() < 1e-6);
    }

    #[test]
    fn plain_exponent_uses_root() {
        let p = knn_distribution(&[nb(4, 1.0), nb(5, 4.0)], 6, 1.0, DistanceExponent::Plain);
        let (a, b) = ((-1.0f64).exp(), (-2.0f64).exp());
        assert!((p.probs[4] - a / (a + b)).abs() < 1e-12);
    }

    #[test]
    fn interpolation_limits_and_arithmetic() {
        let van = TokenDistribution {
            probs: vec![0.6, 0.4],
        };
        let knn = TokenDistribution {
            probs: vec![0.2, 0.8],
        };
        assert_eq!(interpolate(&van, &knn, 0.0).unwrap(), van);
        assert_eq!(interpolate(&van, &knn, 1.0).unwrap(), knn);
        let mid = interpolate(&van, &knn, 0.5).unwrap();
        assert!((mid.probs[0] - 0.4).abs() < 1e-12);
        let empty = TokenDistribution {
            probs: vec![0.0, 0.0],
        };
        assert_eq!(interpolate(&van, &empty, 1.0).unwrap(), van);
        assert!(interpolate(&van, &knn, 1.5).is_err());
        assert!(interpolate(&van, &knn, f64::NAN).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(DecodeConfig::default().validate().is_ok());
        for bad in [
            DecodeConfig {
                temperature: 0.0,
                ..Default::default()
            },
            DecodeConfig {
                beam_width: 0,
                ..Default::default()
            },
            DecodeConfig {
                lambda: -0.1,
                ..Default::default()
            },
            DecodeConfig {
                distance_threshold: Some(-1.0),
                ..Default::default()
            },
        ] {
            assert!(matches!(bad.validate(), Err(Error::InvalidConfig(_))));
        }
    }
}
