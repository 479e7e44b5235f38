//! Identifies which m-distribution regime best explains a set of workflow
//! observations.
//!
//! The decision combines support detection on the precision column, the
//! experience/information ordering of each row, and a one-sided
//! Kolmogorov–Smirnov comparison of the precision and information CDFs on
//! min-max normalized scales. Confidence is the fraction of bootstrap
//! resamples on which the same decision is reached.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{RegimeKind, Support};
use crate::simulator::derive_seed;

/// Fewest rows any classification or support call accepts.
pub const MIN_OBSERVATIONS: usize = 30;

/// Distinct-value fraction at or below which a sample counts as discrete.
pub const DISCRETE_DISTINCT_FRACTION: f64 = 0.05;

/// Tolerance of the lattice test on range-scaled values.
pub const LATTICE_TOLERANCE: f64 = 1e-9;

/// Row fraction the experience ordering must hold on for the tilted rules.
pub const ORDERING_FRACTION: f64 = 0.95;

/// 0.999 quantile of chi-square with 4 degrees of freedom.
const CHI2_4_999: f64 = 18.4668;
const COVARIATE_BINS: usize = 5;

/// Columnar observation rows `(info, precision, time, experience?)` with
/// optional external-source covariates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationSet {
    info: Vec<f64>,
    precision: Vec<f64>,
    time: Vec<f64>,
    experience: Option<Vec<f64>>,
    covariates: Vec<(String, Vec<f64>)>,
}

impl ObservationSet {
    pub fn new(
        info: Vec<f64>,
        precision: Vec<f64>,
        time: Vec<f64>,
        experience: Option<Vec<f64>>,
        covariates: Vec<(String, Vec<f64>)>,
    ) -> Result<Self> {
        let n = info.len();
        let same = |len: usize, what: &str| {
            if len == n {
                Ok(())
            } else {
                Err(Error::Data(format!("column `{what}` has {len} rows, `info` has {n}")))
            }
        };
        same(precision.len(), "precision")?;
        same(time.len(), "time")?;
        if let Some(e) = &experience {
            same(e.len(), "experience")?;
        }
        for (name, c) in &covariates {
            same(c.len(), name)?;
        }
        for (row, x) in info.iter().enumerate() {
            if !x.is_finite() {
                return Err(Error::Data(format!("row {row}: info is not finite")));
            }
        }
        for (row, p) in precision.iter().enumerate() {
            if !(0.0..=1.0).contains(p) {
                return Err(Error::Data(format!("row {row}: precision {p} outside [0, 1]")));
            }
        }
        for (row, t) in time.iter().enumerate() {
            if !(*t > 0.0) || !t.is_finite() {
                return Err(Error::Data(format!("row {row}: time {t} must be positive")));
            }
        }
        for (row, x) in experience.iter().flatten().enumerate() {
            if !x.is_finite() {
                return Err(Error::Data(format!("row {row}: experience is not finite")));
            }
        }
        for (name, c) in &covariates {
            if let Some(row) = c.iter().position(|x| !x.is_finite()) {
                return Err(Error::Data(format!("row {row}: covariate `{name}` is not finite")));
            }
        }
        Ok(Self {
            info,
            precision,
            time,
            experience,
            covariates,
        })
    }

    pub fn len(&self) -> usize {
        self.info.len()
    }

    pub fn is_empty(&self) -> bool {
        self.info.is_empty()
    }

    pub fn info(&self) -> &[f64] {
        &self.info
    }

    pub fn precision(&self) -> &[f64] {
        &self.precision
    }

    pub fn time(&self) -> &[f64] {
        &self.time
    }

    pub fn experience(&self) -> Option<&[f64]> {
        self.experience.as_deref()
    }

    pub fn covariates(&self) -> &[(String, Vec<f64>)] {
        &self.covariates
    }

    /// Copy without external covariates.
    pub fn without_covariates(&self) -> Self {
        Self {
            covariates: Vec::new(),
            ..self.clone()
        }
    }
}

/// Right-continuous step CDF `F(x) = #{samples <= x} / n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalCdf {
    values: Vec<f64>,
    heights: Vec<f64>,
    n: usize,
}

impl EmpiricalCdf {
    /// Builds from sorted values and per-value multiplicities (zeros skipped).
    fn from_sorted_weighted<I>(sorted: I, n: usize) -> Self
    where
        I: IntoIterator<Item = (f64, u32)>,
    {
        let mut values: Vec<f64> = Vec::new();
        let mut counts: Vec<u64> = Vec::new();
        for (v, w) in sorted {
            if w == 0 {
                continue;
            }
            match values.last() {
                Some(&last) if last == v => *counts.last_mut().expect("parallel vectors") += w as u64,
                _ => {
                    values.push(v);
                    counts.push(w as u64);
                }
            }
        }
        let total = n as f64;
        let mut acc = 0u64;
        let heights = counts
            .iter()
            .map(|c| {
                acc += c;
                acc as f64 / total
            })
            .collect();
        Self { values, heights, n }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let k = self.values.partition_point(|v| *v <= x);
        if k == 0 {
            0.0
        } else {
            self.heights[k - 1]
        }
    }

    /// Distinct sample values, ascending.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// CDF height at each distinct value.
    pub fn heights(&self) -> &[f64] {
        &self.heights
    }

    pub fn sample_count(&self) -> usize {
        self.n
    }

    /// The same CDF on the min-max normalized scale `[0, 1]`.
    pub fn normalized(&self) -> Result<Self> {
        let (lo, hi) = match (self.values.first(), self.values.last()) {
            (Some(&lo), Some(&hi)) => (lo, hi),
            _ => return Err(Error::Data("empty CDF cannot be normalized".into())),
        };
        let range = hi - lo;
        if !(range > 0.0) {
            return Err(Error::Data(format!(
                "degenerate range [{lo}, {hi}]: cannot map onto a normalized scale"
            )));
        }
        Ok(Self {
            values: self.values.iter().map(|v| (v - lo) / range).collect(),
            heights: self.heights.clone(),
            n: self.n,
        })
    }
}

pub fn empirical_cdf(samples: &[f64]) -> Result<EmpiricalCdf> {
    if samples.is_empty() {
        return Err(Error::Data("empirical CDF needs at least one sample".into()));
    }
    if samples.iter().any(|x| x.is_nan()) {
        return Err(Error::Data("empirical CDF samples contain NaN".into()));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(EmpiricalCdf::from_sorted_weighted(
        sorted.into_iter().map(|v| (v, 1)),
        samples.len(),
    ))
}

/// Discrete when few distinct values or when they sit on a lattice.
pub fn detect_support(samples: &[f64]) -> Result<Support> {
    if samples.len() < MIN_OBSERVATIONS {
        return Err(Error::InsufficientData {
            required: MIN_OBSERVATIONS,
            got: samples.len(),
        });
    }
    let cdf = empirical_cdf(samples)?;
    Ok(support_of_distinct(cdf.values(), samples.len()))
}

fn support_of_distinct(distinct: &[f64], n: usize) -> Support {
    if distinct.len() as f64 / n as f64 <= DISCRETE_DISTINCT_FRACTION || on_lattice(distinct, n) {
        Support::Discrete
    } else {
        Support::Continuous
    }
}

/// Whether sorted distinct values share a common spacing: the approximate
/// gcd of their range-scaled differences divides every scaled value, and the
/// lattice has at most `10 n` cells.
fn on_lattice(distinct: &[f64], n: usize) -> bool {
    let (lo, hi) = match (distinct.first(), distinct.last()) {
        (Some(&lo), Some(&hi)) if hi > lo => (lo, hi),
        _ => return true,
    };
    let range = hi - lo;
    let finest = 1.0 / (10.0 * n as f64);
    let mut g = 1.0;
    for w in distinct.windows(2) {
        g = approx_gcd(g, (w[1] - w[0]) / range, LATTICE_TOLERANCE);
        if g < finest {
            return false;
        }
    }
    distinct.iter().all(|v| {
        let s = (v - lo) / range / g;
        (s - s.round()).abs() * g <= LATTICE_TOLERANCE
    })
}

fn approx_gcd(a: f64, b: f64, tol: f64) -> f64 {
    let (mut a, mut b) = if a >= b { (a, b) } else { (b, a) };
    while b > tol {
        let mut r = a % b;
        if b - r <= tol {
            r = 0.0;
        }
        a = b;
        b = r;
    }
    a
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Dominance {
    PrecisionDominates,
    InfoDominates,
    Inconclusive,
}

impl Dominance {
    pub fn swapped(self) -> Self {
        match self {
            Dominance::PrecisionDominates => Dominance::InfoDominates,
            Dominance::InfoDominates => Dominance::PrecisionDominates,
            Dominance::Inconclusive => Dominance::Inconclusive,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DominanceTest {
    pub verdict: Dominance,
    /// `sup (F_I - F_P)`: evidence that precision sits above information.
    pub d_plus: f64,
    /// `sup (F_P - F_I)`.
    pub d_minus: f64,
    pub critical: f64,
    pub alpha: f64,
}

/// Two-sample Kolmogorov critical value `c(alpha) sqrt((n + m) / (n m))`.
pub fn ks_critical_value(alpha: f64, n: usize, m: usize) -> f64 {
    let c = (-(alpha / 2.0).ln() / 2.0).sqrt();
    let (n, m) = (n as f64, m as f64);
    c * ((n + m) / (n * m)).sqrt()
}

/// Relative gap below which values of the two CDFs count as tied, so that
/// lattices that differ only by rounding line up.
pub const TIE_TOLERANCE: f64 = 1e-9;

/// Compares two CDFs already placed on a shared scale. Precision dominates
/// when its CDF lies significantly below the information CDF somewhere and
/// never significantly above it; information dominates symmetrically.
pub fn dominance_test(precision_cdf: &EmpiricalCdf, info_cdf: &EmpiricalCdf, alpha: f64) -> Result<DominanceTest> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain {
            arg: "alpha",
            value: alpha,
            expected: "(0, 1)",
        });
    }
    for cdf in [precision_cdf, info_cdf] {
        if cdf.n < MIN_OBSERVATIONS {
            return Err(Error::InsufficientData {
                required: MIN_OBSERVATIONS,
                got: cdf.n,
            });
        }
    }
    let (mut d_plus, mut d_minus) = (0.0f64, 0.0f64);
    let (p, q) = (precision_cdf, info_cdf);
    let (mut i, mut j) = (0usize, 0usize);
    let (mut fp, mut fq) = (0.0, 0.0);
    while i < p.values.len() || j < q.values.len() {
        let x = match (p.values.get(i), q.values.get(j)) {
            (Some(&a), Some(&b)) => a.min(b),
            (Some(&a), None) => a,
            (None, Some(&b)) => b,
            (None, None) => unreachable!(),
        };
        let x = x + TIE_TOLERANCE * x.abs().max(1.0);
        while i < p.values.len() && p.values[i] <= x {
            fp = p.heights[i];
            i += 1;
        }
        while j < q.values.len() && q.values[j] <= x {
            fq = q.heights[j];
            j += 1;
        }
        d_plus = d_plus.max(fq - fp);
        d_minus = d_minus.max(fp - fq);
    }
    let critical = ks_critical_value(alpha, p.n, q.n);
    let verdict = match (d_plus > critical, d_minus > critical) {
        (true, false) => Dominance::PrecisionDominates,
        (false, true) => Dominance::InfoDominates,
        _ => Dominance::Inconclusive,
    };
    Ok(DominanceTest {
        verdict,
        d_plus,
        d_minus,
        critical,
        alpha,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifierConfig {
    pub alpha: f64,
    pub bootstrap_resamples: usize,
    pub seed: u64,
    /// Absolute row-order correlation of experience above which experience
    /// counts as trending.
    pub trend_threshold: f64,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        Self {
            alpha: 0.05,
            bootstrap_resamples: 200,
            seed: 0,
            trend_threshold: 0.5,
        }
    }
}

/// What the decision tree saw.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evidence {
    pub rows: usize,
    pub rule: String,
    pub distinct_precision: usize,
    pub precision_support: Support,
    pub experience_trend: Option<f64>,
    pub frac_experience_above: Option<f64>,
    pub frac_experience_below: Option<f64>,
    pub dominance: Option<DominanceTest>,
    /// Largest between-bin chi-square statistic over external covariates.
    pub external_dependence: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub regime: RegimeKind,
    pub confidence: f64,
    pub evidence: Evidence,
}

/// Sort orders computed once and shared by every resample.
struct Prepared<'a> {
    obs: &'a ObservationSet,
    by_precision: Vec<usize>,
    by_info: Vec<usize>,
    by_covariate: Vec<Vec<usize>>,
}

impl<'a> Prepared<'a> {
    fn new(obs: &'a ObservationSet) -> Self {
        let order = |col: &[f64]| {
            let mut idx: Vec<usize> = (0..col.len()).collect();
            idx.sort_by(|&a, &b| col[a].total_cmp(&col[b]).then(a.cmp(&b)));
            idx
        };
        Self {
            obs,
            by_precision: order(&obs.precision),
            by_info: order(&obs.info),
            by_covariate: obs.covariates.iter().map(|(_, c)| order(c)).collect(),
        }
    }

    fn decide(&self, w: &[u32], cfg: &ClassifierConfig) -> Result<(RegimeKind, Evidence)> {
        let obs = self.obs;
        let n: usize = w.iter().map(|&x| x as usize).sum();
        let precision_cdf =
            EmpiricalCdf::from_sorted_weighted(self.by_precision.iter().map(|&r| (obs.precision[r], w[r])), n);
        let distinct = precision_cdf.values().len();
        let precision_support = support_of_distinct(precision_cdf.values(), n);
        let mut ev = Evidence {
            rows: n,
            rule: String::new(),
            distinct_precision: distinct,
            precision_support,
            experience_trend: None,
            frac_experience_above: None,
            frac_experience_below: None,
            dominance: None,
            external_dependence: None,
        };

        if !obs.covariates.is_empty() {
            let stat = self
                .by_covariate
                .iter()
                .map(|order| between_bin_statistic(order, &obs.precision, w, n))
                .fold(0.0, f64::max);
            ev.external_dependence = Some(stat);
            if stat > CHI2_4_999 {
                ev.rule = "precision depends on external covariates".into();
                return Ok((RegimeKind::JointExternal, ev));
            }
        }

        if let Some(exp) = &obs.experience {
            ev.experience_trend = Some(order_correlation(exp, w));
        }
        let trending = ev.experience_trend.is_some_and(|r| r.abs() > cfg.trend_threshold);
        if distinct == 2 && !trending {
            ev.rule = "two-valued precision without experience trend".into();
            return Ok((RegimeKind::Bernoulli, ev));
        }
        if distinct == 1 {
            ev.rule = "precision degenerate at a single value".into();
            return Ok((RegimeKind::Deterministic, ev));
        }

        let exp = obs.experience.as_ref().ok_or(Error::MissingField("experience"))?;
        let (mut above, mut below) = (0usize, 0usize);
        for r in 0..obs.len() {
            let k = w[r] as usize;
            if exp[r] > obs.info[r] {
                above += k;
            } else if exp[r] < obs.info[r] {
                below += k;
            }
        }
        let frac_above = above as f64 / n as f64;
        let frac_below = below as f64 / n as f64;
        ev.frac_experience_above = Some(frac_above);
        ev.frac_experience_below = Some(frac_below);

        let info_cdf = EmpiricalCdf::from_sorted_weighted(self.by_info.iter().map(|&r| (obs.info[r], w[r])), n);
        let test = dominance_test(&precision_cdf.normalized()?, &info_cdf.normalized()?, cfg.alpha)?;
        ev.dominance = Some(test);

        let kind = match precision_support {
            Support::Discrete => {
                if frac_above > ORDERING_FRACTION && test.verdict == Dominance::PrecisionDominates {
                    ev.rule = "discrete, experience above information, precision dominates".into();
                    RegimeKind::DiscreteDecreasing
                } else if frac_below > ORDERING_FRACTION && test.verdict == Dominance::InfoDominates {
                    ev.rule = "discrete, experience below information, information dominates".into();
                    RegimeKind::DiscreteIncreasing
                } else {
                    match test.verdict {
                        Dominance::PrecisionDominates => {
                            ev.rule = "discrete, precision dominates (ordering not met)".into();
                            RegimeKind::DiscreteDecreasing
                        }
                        Dominance::InfoDominates => {
                            ev.rule = "discrete, information dominates (ordering not met)".into();
                            RegimeKind::DiscreteIncreasing
                        }
                        Dominance::Inconclusive => {
                            ev.rule = "discrete without dominance".into();
                            RegimeKind::Deterministic
                        }
                    }
                }
            }
            Support::Continuous => match test.verdict {
                Dominance::PrecisionDominates => {
                    ev.rule = "continuous, precision dominates".into();
                    RegimeKind::ContinuousDecreasing
                }
                Dominance::InfoDominates => {
                    ev.rule = "continuous, information dominates".into();
                    RegimeKind::ContinuousIncreasing
                }
                Dominance::Inconclusive => {
                    let mp = normalized_mean(&obs.precision, w, n);
                    let mi = normalized_mean(&obs.info, w, n);
                    ev.rule = "continuous without dominance, split on normalized means".into();
                    if mp >= mi {
                        RegimeKind::ContinuousDecreasing
                    } else {
                        RegimeKind::ContinuousIncreasing
                    }
                }
            },
        };
        Ok((kind, ev))
    }
}

/// Pearson correlation between row position and `values` under weights.
fn order_correlation(values: &[f64], w: &[u32]) -> f64 {
    let (mut sw, mut sx, mut sy) = (0.0, 0.0, 0.0);
    for (r, (&y, &k)) in values.iter().zip(w).enumerate() {
        let k = k as f64;
        sw += k;
        sx += k * r as f64;
        sy += k * y;
    }
    let (mx, my) = (sx / sw, sy / sw);
    let (mut cxy, mut cxx, mut cyy) = (0.0, 0.0, 0.0);
    for (r, (&y, &k)) in values.iter().zip(w).enumerate() {
        let k = k as f64;
        let (dx, dy) = (r as f64 - mx, y - my);
        cxy += k * dx * dy;
        cxx += k * dx * dx;
        cyy += k * dy * dy;
    }
    if cxx <= 0.0 || cyy <= 1e-24 * (1.0 + my * my) * sw {
        0.0
    } else {
        cxy / (cxx * cyy).sqrt()
    }
}

fn normalized_mean(col: &[f64], w: &[u32], n: usize) -> f64 {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for (x, &k) in col.iter().zip(w) {
        if k > 0 {
            lo = lo.min(*x);
            hi = hi.max(*x);
        }
    }
    let range = (hi - lo).max(f64::MIN_POSITIVE);
    col.iter().zip(w).map(|(x, &k)| k as f64 * (x - lo) / range).sum::<f64>() / n as f64
}

/// Between-bin chi-square statistic of `values` over equal-weight bins of a
/// covariate's order; approximately chi-square(4) when independent.
fn between_bin_statistic(order: &[usize], values: &[f64], w: &[u32], n: usize) -> f64 {
    let total = n as f64;
    let mean = order.iter().map(|&r| w[r] as f64 * values[r]).sum::<f64>() / total;
    let var = order.iter().map(|&r| w[r] as f64 * (values[r] - mean).powi(2)).sum::<f64>() / total;
    if var <= 0.0 {
        return 0.0;
    }
    let mut sums = [0.0; COVARIATE_BINS];
    let mut counts = [0.0; COVARIATE_BINS];
    let mut cum = 0usize;
    for &r in order {
        let k = w[r] as usize;
        if k == 0 {
            continue;
        }
        let bin = (cum * COVARIATE_BINS / n).min(COVARIATE_BINS - 1);
        sums[bin] += k as f64 * values[r];
        counts[bin] += k as f64;
        cum += k;
    }
    sums.iter()
        .zip(&counts)
        .filter(|(_, &c)| c > 0.0)
        .map(|(s, c)| c * (s / c - mean).powi(2))
        .sum::<f64>()
        / var
}

/// Classifies `obs` with bootstrap confidence.
pub fn classify_regime(obs: &ObservationSet, cfg: &ClassifierConfig) -> Result<Classification> {
    if obs.len() < MIN_OBSERVATIONS {
        return Err(Error::InsufficientData {
            required: MIN_OBSERVATIONS,
            got: obs.len(),
        });
    }
    let prepared = Prepared::new(obs);
    let n = obs.len();
    let (regime, evidence) = prepared.decide(&vec![1; n], cfg)?;
    let resamples = cfg.bootstrap_resamples;
    let confidence = if resamples == 0 {
        1.0
    } else {
        let agree = (0..resamples as u64)
            .into_par_iter()
            .filter(|&b| {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, b));
                let mut w = vec![0u32; n];
                for _ in 0..n {
                    w[rng.random_range(0..n)] += 1;
                }
                matches!(prepared.decide(&w, cfg), Ok((k, _)) if k == regime)
            })
            .count();
        agree as f64 / resamples as f64
    };
    Ok(Classification {
        regime,
        confidence,
        evidence,
    })
}
