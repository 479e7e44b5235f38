//! Experience dynamics: the cumulative weight ladder, its interpolation
//! function, the linear pattern response and the per-trial update.

use serde::{Deserialize, Serialize};

use crate::error::{check_positive, check_probability, Error, Result};
use crate::model::{EventOutcome, Experience};

/// Fraction of the hit gain credited on a miss.
pub const MISS_FACTOR: f64 = 0.1;

/// Cumulative experience weights paired with their trial ordinals `1..=n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightLadder {
    entries: Vec<(f64, u64)>,
}

impl WeightLadder {
    pub fn new(weights: &[f64]) -> Result<Self> {
        for (k, w) in weights.iter().enumerate() {
            if !(*w >= 0.0) || !w.is_finite() {
                return Err(Error::Data(format!("ladder weight {} is invalid ({w})", k + 1)));
            }
            if k > 0 && *w < weights[k - 1] {
                return Err(Error::Data(format!("ladder decreases at trial {}", k + 1)));
            }
        }
        Ok(Self {
            entries: weights.iter().zip(1u64..).map(|(w, k)| (*w, k)).collect(),
        })
    }

    pub fn from_experience(exp: &Experience) -> Self {
        Self {
            entries: exp.weights().iter().zip(1u64..).map(|(w, k)| (*w, k)).collect(),
        }
    }

    pub fn entries(&self) -> &[(f64, u64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Cumulative total `I^i_x`: the top rung.
    pub fn total(&self) -> Option<f64> {
        self.entries.last().map(|e| e.0)
    }

    /// The last increment `I^i_n`; the sole weight for a one-rung ladder.
    pub fn last_increment(&self) -> Option<f64> {
        match self.entries.as_slice() {
            [] => None,
            [only] => Some(only.0),
            [.., prev, last] => Some(last.0 - prev.0),
        }
    }
}

/// `(probe - I^i_x) / I^i_n + i` over the ladder.
pub fn interpolate(ladder: &WeightLadder, probe: f64, i: f64) -> Result<f64> {
    let total = ladder
        .total()
        .ok_or_else(|| Error::DegenerateLadder("empty ladder".into()))?;
    let step = ladder.last_increment().unwrap_or(0.0);
    if step <= 0.0 {
        return Err(Error::DegenerateLadder(format!(
            "last increment is {step}; interpolation needs a positive step"
        )));
    }
    Ok((probe - total) / step + i)
}

/// Linear pattern response `f_1 P_1 + f_2 P_2 + ... + f_n P_n`.
pub fn pattern_response(responses: &[f64], precisions: &[f64]) -> Result<f64> {
    if responses.len() != precisions.len() {
        return Err(Error::Data(format!(
            "pattern_response length mismatch: {} responses, {} precisions",
            responses.len(),
            precisions.len()
        )));
    }
    if responses.is_empty() {
        return Err(Error::Data("pattern_response needs at least one term".into()));
    }
    for p in precisions {
        check_probability("precisions", *p)?;
    }
    Ok(responses.iter().zip(precisions).map(|(f, p)| f * p).sum())
}

/// Grows experience geometrically after a trial: a hit adds `gain` times the
/// current total, a miss adds [`MISS_FACTOR`] of that. Empty or zero
/// experience is first seeded at the floor.
pub fn update_experience(exp: &Experience, outcome: &EventOutcome, gain: f64) -> Result<Experience> {
    check_positive("gain", gain)?;
    let mut next = exp.clone().floored();
    let factor = if outcome.precision_hit { 1.0 } else { MISS_FACTOR };
    let increment = gain * next.magnitude() * factor;
    next.push_increment(increment);
    Ok(next)
}
