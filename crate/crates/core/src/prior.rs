//! Discrete priors over arm means.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance for the probability-mass normalization check.
const PROB_SUM_TOL: f64 = 1e-12;

/// A finite-support distribution over mean values in `[0, 1]`.
///
/// Support values are strictly increasing; probabilities are non-negative and
/// sum to one. Point masses (a single support value) are allowed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscretePrior {
    support: Vec<f64>,
    probs: Vec<f64>,
}

impl DiscretePrior {
    pub fn new(support: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        if support.is_empty() {
            return Err(Error::domain("prior support must be non-empty"));
        }
        if support.len() != probs.len() {
            return Err(Error::config(format!(
                "support has {} values but probs has {}",
                support.len(),
                probs.len()
            )));
        }
        for &v in &support {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::domain(format!("support value {v} outside [0, 1]")));
            }
        }
        for w in support.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::domain(format!(
                    "support values must be strictly increasing ({} then {})",
                    w[0], w[1]
                )));
            }
        }
        let mut sum = 0.0;
        for &p in &probs {
            if p < 0.0 {
                return Err(Error::domain(format!("negative probability {p}")));
            }
            sum += p;
        }
        if (sum - 1.0).abs() > PROB_SUM_TOL {
            return Err(Error::domain(format!("probabilities sum to {sum}, not 1")));
        }
        Ok(Self { support, probs })
    }

    /// Point mass at `value`.
    pub fn point_mass(value: f64) -> Result<Self> {
        Self::new(vec![value], vec![1.0])
    }

    /// Uniform over the given (strictly increasing) values.
    pub fn uniform(values: Vec<f64>) -> Result<Self> {
        let n = values.len();
        Self::new(values, vec![1.0 / n as f64; n])
    }

    pub fn support(&self) -> &[f64] {
        &self.support
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        false // construction rejects empty supports
    }

    /// Minimum gap between distinct support values; `None` for a point mass.
    pub fn min_gap(&self) -> Option<f64> {
        if self.support.len() < 2 {
            return None;
        }
        self.support
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(None, |acc: Option<f64>, g| {
                Some(acc.map_or(g, |a| a.min(g)))
            })
    }
}
