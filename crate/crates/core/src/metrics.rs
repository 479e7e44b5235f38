//! Entropy, flow-regularity and saturation measurements.

use serde::{Deserialize, Serialize};

use crate::error::{check_positive, check_probability, Error, Result};

/// Binned counts; `counts.len() == edges.len() - 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    edges: Vec<f64>,
    counts: Vec<u64>,
}

/// Upper bound on the bins a Freedman–Diaconis histogram may use.
pub const MAX_BINS: usize = 10_000;

impl Histogram {
    pub fn new(edges: Vec<f64>, counts: Vec<u64>) -> Result<Self> {
        if edges.len() < 2 || counts.len() != edges.len() - 1 {
            return Err(Error::Data(format!(
                "histogram needs len(counts) = len(edges) - 1 >= 1 (got {} edges, {} counts)",
                edges.len(),
                counts.len()
            )));
        }
        if edges.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Data("histogram edges must be strictly increasing".into()));
        }
        Ok(Self { edges, counts })
    }

    /// Bins `samples` with Freedman–Diaconis widths `2 IQR n^(-1/3)`.
    ///
    /// A sample with zero spread gets one unit-wide bin centred on its value;
    /// a zero IQR with nonzero range falls back to Sturges' bin count.
    pub fn freedman_diaconis(samples: &[f64]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InsufficientData { required: 1, got: 0 });
        }
        if samples.iter().any(|x| !x.is_finite()) {
            return Err(Error::Data("histogram samples must be finite".into()));
        }
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len();
        let (min, max) = (sorted[0], sorted[n - 1]);
        if min == max {
            return Self::new(vec![min - 0.5, min + 0.5], vec![n as u64]);
        }
        let range = max - min;
        let iqr = quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25);
        let width = 2.0 * iqr * (n as f64).powf(-1.0 / 3.0);
        let bins = if width > 0.0 {
            (range / width).ceil() as usize
        } else {
            ((n as f64).log2().ceil() as usize) + 1
        }
        .clamp(1, MAX_BINS);
        let width = range / bins as f64;
        let mut edges: Vec<f64> = (0..bins).map(|k| min + k as f64 * width).collect();
        edges.push(max);
        let mut counts = vec![0u64; bins];
        for &x in &sorted {
            let k = (((x - min) / width) as usize).min(bins - 1);
            counts[k] += 1;
        }
        Self::new(edges, counts)
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// `(lo, hi, count)` rows.
    pub fn bins(&self) -> impl Iterator<Item = (f64, f64, u64)> + '_ {
        self.edges.windows(2).zip(&self.counts).map(|(e, c)| (e[0], e[1], *c))
    }
}

/// Linear-interpolation quantile of sorted data.
pub(crate) fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Shannon entropy in bits, with `0 log 0 = 0`.
pub fn shannon_entropy(probs: &[f64]) -> Result<f64> {
    for p in probs {
        check_probability("probs", *p)?;
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::Normalization {
            sum,
            deficit: 1.0 - sum,
        });
    }
    let h: f64 = probs.iter().filter(|&&p| p > 0.0).map(|&p| -p * p.log2()).sum();
    Ok(h.max(0.0))
}

/// Entropy of a Bernoulli(p) outcome in bits.
pub fn binary_entropy(p: f64) -> Result<f64> {
    check_probability("p", p)?;
    if p == 0.0 || p == 1.0 {
        return Ok(0.0);
    }
    Ok(-p * p.log2() - (1.0 - p) * (1.0 - p).log2())
}

/// Binary entropy of each per-trial success probability.
pub fn entropy_trajectory(trial_precisions: &[f64]) -> Result<Vec<f64>> {
    trial_precisions.iter().map(|&p| binary_entropy(p)).collect()
}

/// Coefficient of variation (population standard deviation over mean) of
/// the gaps between successive completions. Zero is a perfectly regular
/// flow.
pub fn flow_regularity(completion_times: &[f64]) -> Result<f64> {
    if completion_times.len() < 3 {
        return Err(Error::InsufficientData {
            required: 3,
            got: completion_times.len(),
        });
    }
    if completion_times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Data("completion times must be nondecreasing".into()));
    }
    let gaps: Vec<f64> = completion_times.windows(2).map(|w| w[1] - w[0]).collect();
    let n = gaps.len() as f64;
    let mean = gaps.iter().sum::<f64>() / n;
    if !(mean > 0.0) {
        return Err(Error::DegenerateFlow(format!("mean inter-completion gap is {mean}")));
    }
    let var = gaps.iter().map(|g| (g - mean).powi(2)).sum::<f64>() / n;
    Ok(var.sqrt() / mean)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Saturation {
    pub utilization: f64,
    pub saturated: bool,
}

/// Queueing utilization `arrival / service`; saturated from 1 upwards.
pub fn saturation_flag(arrival_rate: f64, service_rate: f64) -> Result<Saturation> {
    check_positive("service_rate", service_rate)?;
    if !(arrival_rate >= 0.0) || !arrival_rate.is_finite() {
        return Err(Error::Domain {
            arg: "arrival_rate",
            value: arrival_rate,
            expected: "[0, inf)",
        });
    }
    let utilization = arrival_rate / service_rate;
    Ok(Saturation {
        utilization,
        saturated: utilization >= 1.0,
    })
}
