//! Evaluators for the seven m-distribution regimes.
//!
//! Each regime turns an agent's experience, a task's information and the
//! regime parameters into an [`MDistribution`]: the effective probability
//! that precision reaches its target, plus a description of the support the
//! graded precision outcome lives on.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_positive, check_probability, Error, Result};
use crate::model::{experience_ratio, DensityKind, DensitySpec, Experience, ExternalSource, InfoSource, RegimeKind, TimeModel};
use crate::quadrature::{adaptive_simpson, DEFAULT_MAX_DEPTH, DEFAULT_TOLERANCE};

/// Tolerance on the total mass of tabulated distributions and joint tables.
pub const MASS_TOLERANCE: f64 = 1e-12;

/// Minimum Monte Carlo sample count for the joint external evaluator.
pub const MIN_JOINT_SAMPLES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SupportDescription {
    PointMass,
    TwoPoint,
    Tabulated,
    ContinuousTail,
}

/// The distribution `m` an event's precision follows under a regime.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MDistribution {
    kind: RegimeKind,
    precision_prob: f64,
    support: SupportDescription,
    tabulated: Option<Vec<(f64, f64)>>,
}

impl MDistribution {
    fn new(kind: RegimeKind, precision_prob: f64, support: SupportDescription) -> Result<Self> {
        check_probability("precision_prob", precision_prob)?;
        Ok(Self {
            kind,
            precision_prob,
            support,
            tabulated: None,
        })
    }

    /// Tabulated `(value, probability)` distribution; rejected unless the
    /// probabilities are nonnegative and sum to 1 within [`MASS_TOLERANCE`].
    pub fn tabulated(kind: RegimeKind, pairs: Vec<(f64, f64)>, precision_prob: f64) -> Result<Self> {
        check_mass(pairs.iter().map(|p| p.1))?;
        let mut d = Self::new(kind, precision_prob, SupportDescription::Tabulated)?;
        d.tabulated = Some(pairs);
        Ok(d)
    }

    pub fn kind(&self) -> RegimeKind {
        self.kind
    }

    pub fn precision_prob(&self) -> f64 {
        self.precision_prob
    }

    pub fn support(&self) -> SupportDescription {
        self.support
    }

    pub fn table(&self) -> Option<&[(f64, f64)]> {
        self.tabulated.as_deref()
    }

    /// Success and failure masses of a two-point distribution.
    pub fn two_point_masses(&self) -> (f64, f64) {
        (self.precision_prob, 1.0 - self.precision_prob)
    }
}

fn check_mass(probs: impl Iterator<Item = f64>) -> Result<()> {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for p in probs {
        if !(p >= 0.0) || !p.is_finite() {
            return Err(Error::Data(format!("probability {p} is not a nonnegative finite number")));
        }
        // Neumaier summation keeps long tables honest at 1e-12.
        let t = sum + p;
        if sum.abs() >= p.abs() {
            comp += (sum - t) + p;
        } else {
            comp += (p - t) + sum;
        }
        sum = t;
    }
    let sum = sum + comp;
    if (sum - 1.0).abs() > MASS_TOLERANCE {
        return Err(Error::Normalization {
            sum,
            deficit: 1.0 - sum,
        });
    }
    Ok(())
}

/// Joint probability table over index vectors `(i_1, ..., i_n)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<(Vec<u32>, f64)>", into = "Vec<(Vec<u32>, f64)>")]
pub struct JointTable {
    outcomes: Vec<(Vec<u32>, f64)>,
}

impl JointTable {
    pub fn new(outcomes: Vec<(Vec<u32>, f64)>) -> Result<Self> {
        if outcomes.is_empty() {
            return Err(Error::Data("joint table has no outcomes".into()));
        }
        for (k, (idx, _)) in outcomes.iter().enumerate() {
            if outcomes[..k].iter().any(|(other, _)| other == idx) {
                return Err(Error::Data(format!("joint table repeats outcome {idx:?}")));
            }
        }
        check_mass(outcomes.iter().map(|o| o.1))?;
        Ok(Self { outcomes })
    }

    /// A single outcome carrying all the mass.
    pub fn point_mass(index: Vec<u32>) -> Self {
        Self {
            outcomes: vec![(index, 1.0)],
        }
    }

    pub fn outcomes(&self) -> &[(Vec<u32>, f64)] {
        &self.outcomes
    }

    pub fn position(&self, index: &[u32]) -> Option<usize> {
        self.outcomes.iter().position(|(i, _)| i.as_slice() == index)
    }
}

impl TryFrom<Vec<(Vec<u32>, f64)>> for JointTable {
    type Error = Error;

    fn try_from(v: Vec<(Vec<u32>, f64)>) -> Result<Self> {
        JointTable::new(v)
    }
}

impl From<JointTable> for Vec<(Vec<u32>, f64)> {
    fn from(t: JointTable) -> Self {
        t.outcomes
    }
}

/// Regime-specific parameters beyond the shared base precision.
#[derive(Debug, Clone, PartialEq)]
pub enum RegimeShape {
    Bernoulli,
    Deterministic {
        table: JointTable,
        success: Vec<u32>,
    },
    DiscreteDecreasing,
    DiscreteIncreasing,
    /// Precision mass between `threshold` and the agent's experience, capped
    /// at `ceiling` and at the top of the density's support.
    ContinuousDecreasing {
        density: DensitySpec,
        threshold: f64,
        ceiling: f64,
    },
    /// Rate-scaled read-out of a sampled precision CDF at the task's
    /// information magnitude.
    ContinuousIncreasing {
        cdf: Vec<(f64, f64)>,
        rate: f64,
    },
    JointExternal {
        samples: usize,
    },
}

impl RegimeShape {
    pub fn kind(&self) -> RegimeKind {
        match self {
            RegimeShape::Bernoulli => RegimeKind::Bernoulli,
            RegimeShape::Deterministic { .. } => RegimeKind::Deterministic,
            RegimeShape::DiscreteDecreasing => RegimeKind::DiscreteDecreasing,
            RegimeShape::DiscreteIncreasing => RegimeKind::DiscreteIncreasing,
            RegimeShape::ContinuousDecreasing { .. } => RegimeKind::ContinuousDecreasing,
            RegimeShape::ContinuousIncreasing { .. } => RegimeKind::ContinuousIncreasing,
            RegimeShape::JointExternal { .. } => RegimeKind::JointExternal,
        }
    }
}

/// Which regime governs an event, its untilted processing probability and
/// the time model for the event.
#[derive(Debug, Clone, PartialEq)]
pub struct RegimeSpec {
    pub shape: RegimeShape,
    pub base_precision: f64,
    pub time_model: TimeModel,
}

impl RegimeSpec {
    pub fn new(shape: RegimeShape, base_precision: f64, time_model: TimeModel) -> Result<Self> {
        check_probability("base_precision", base_precision)?;
        time_model.validate()?;
        match &shape {
            RegimeShape::Deterministic { table, success } => {
                if table.position(success).is_none() {
                    return Err(Error::Data(format!("success outcome {success:?} not in joint table")));
                }
            }
            RegimeShape::ContinuousDecreasing {
                density,
                threshold,
                ceiling,
            } => {
                let (lo, hi) = density.support();
                if !(*threshold >= lo && *threshold < hi) {
                    return Err(Error::Domain {
                        arg: "threshold",
                        value: *threshold,
                        expected: "the density support [lo, hi)",
                    });
                }
                if !(*ceiling > *threshold) {
                    return Err(Error::Domain {
                        arg: "ceiling",
                        value: *ceiling,
                        expected: "(threshold, inf)",
                    });
                }
            }
            RegimeShape::ContinuousIncreasing { cdf, rate } => {
                check_cdf_samples(cdf)?;
                if !rate.is_finite() || *rate < 0.0 {
                    return Err(Error::Domain {
                        arg: "rate",
                        value: *rate,
                        expected: "[0, inf)",
                    });
                }
            }
            RegimeShape::JointExternal { samples } => {
                if *samples < MIN_JOINT_SAMPLES {
                    return Err(Error::Domain {
                        arg: "samples",
                        value: *samples as f64,
                        expected: "[100, inf)",
                    });
                }
            }
            _ => {}
        }
        Ok(Self {
            shape,
            base_precision,
            time_model,
        })
    }

    pub fn kind(&self) -> RegimeKind {
        self.shape.kind()
    }
}

/// Bernoulli regime: success mass `p`, failure mass `1 - p`.
pub fn eval_bernoulli(p: f64) -> Result<MDistribution> {
    check_probability("p", p)?;
    MDistribution::new(RegimeKind::Bernoulli, p, SupportDescription::TwoPoint)
}

/// Deterministic regime over a normalized joint table. A single-outcome
/// table always reaches full precision; otherwise the success outcome's mass
/// is the precision probability and the table is carried as
/// `(outcome ordinal, probability)` pairs.
pub fn eval_deterministic(table: &JointTable, success: &[u32]) -> Result<MDistribution> {
    let pos = table
        .position(success)
        .ok_or_else(|| Error::Data(format!("success outcome {success:?} not in joint table")))?;
    if table.outcomes().len() == 1 {
        return MDistribution::new(RegimeKind::Deterministic, 1.0, SupportDescription::PointMass);
    }
    let pairs = table
        .outcomes()
        .iter()
        .enumerate()
        .map(|(k, (_, p))| (k as f64, *p))
        .collect();
    let p = table.outcomes()[pos].1.min(1.0);
    MDistribution::tabulated(RegimeKind::Deterministic, pairs, p)
}

/// Power tilt of a base probability by an experience/information ratio:
/// `base^(1/ratio)`. Ratios above 1 raise the probability, below 1 lower it.
pub fn tilt_precision(base: f64, ratio: f64) -> Result<f64> {
    check_positive("ratio", ratio)?;
    check_probability("base", base)?;
    if base == 0.0 || base == 1.0 {
        return Ok(base);
    }
    Ok(base.powf(ratio.recip()))
}

/// Monotone discrete regimes: C needs experience above the information,
/// D needs it below.
pub fn eval_monotone(spec: &RegimeSpec, exp: &Experience, info: &InfoSource) -> Result<MDistribution> {
    let kind = spec.kind();
    let ratio = experience_ratio(exp, info)?;
    match kind {
        RegimeKind::DiscreteDecreasing if ratio <= 1.0 => Err(Error::RegimeMismatch {
            regime: kind.label(),
            required: "experience > information (I^i > I)",
            ratio,
        }),
        RegimeKind::DiscreteIncreasing if ratio >= 1.0 => Err(Error::RegimeMismatch {
            regime: kind.label(),
            required: "experience < information (I^i < I)",
            ratio,
        }),
        RegimeKind::DiscreteDecreasing | RegimeKind::DiscreteIncreasing => {
            let p = tilt_precision(spec.base_precision, ratio)?;
            MDistribution::new(kind, p, SupportDescription::Tabulated)
        }
        other => Err(Error::Data(format!("eval_monotone called with regime {other}"))),
    }
}

/// Mass of `density` over `[lower, upper]` by adaptive Simpson quadrature.
pub fn eval_continuous_decreasing(density: &DensitySpec, lower: f64, upper: f64) -> Result<f64> {
    if !(lower < upper) {
        return Err(Error::Domain {
            arg: "lower",
            value: lower,
            expected: "(-inf, upper)",
        });
    }
    let (lo, hi) = density.support();
    let slack = 1e-12 * (hi - lo).abs().max(1.0);
    if lower < lo - slack {
        return Err(Error::Domain {
            arg: "lower",
            value: lower,
            expected: "the density support",
        });
    }
    if upper > hi + slack {
        return Err(Error::Domain {
            arg: "upper",
            value: upper,
            expected: "the density support",
        });
    }
    let (lower, upper) = (lower.max(lo), upper.min(hi));
    // Integrate a tabulated pdf knot to knot so each piece is smooth.
    let mut cuts = vec![lower];
    if let (DensityKind::TabulatedPdf, Some(t)) = (density.kind(), density.table()) {
        cuts.extend(t.iter().map(|p| p.0).filter(|&x| x > lower && x < upper));
    }
    cuts.push(upper);
    let tol = DEFAULT_TOLERANCE / (cuts.len() - 1) as f64;
    let mut total = 0.0;
    for w in cuts.windows(2) {
        total += adaptive_simpson(|x| density.pdf(x), w[0], w[1], tol, DEFAULT_MAX_DEPTH)?;
    }
    Ok(total)
}

fn check_cdf_samples(samples: &[(f64, f64)]) -> Result<()> {
    if samples.len() < 2 {
        return Err(Error::Data("CDF needs at least two samples".into()));
    }
    for (k, &(x, f)) in samples.iter().enumerate() {
        if !x.is_finite() || !f.is_finite() {
            return Err(Error::Data(format!("CDF sample {k} is not finite")));
        }
        if k > 0 && (x < samples[k - 1].0 || f < samples[k - 1].1) {
            return Err(Error::Data(format!("CDF samples are not monotone at point {k}")));
        }
    }
    if samples[0].0 == samples[samples.len() - 1].0 {
        return Err(Error::Data("CDF samples span an empty range".into()));
    }
    Ok(())
}

/// Linear interpolation of monotone `(x, F(x))` samples; right-continuous at
/// repeated abscissae.
pub fn interpolate_cdf(samples: &[(f64, f64)], at: f64) -> Result<f64> {
    check_cdf_samples(samples)?;
    let (lo, hi) = (samples[0].0, samples[samples.len() - 1].0);
    if !(at >= lo && at <= hi) {
        return Err(Error::Extrapolation { at, lo, hi });
    }
    let pos = samples.partition_point(|s| s.0 <= at);
    if pos == samples.len() {
        return Ok(samples[pos - 1].1);
    }
    let (x0, f0) = samples[pos - 1];
    let (x1, f1) = samples[pos];
    if x0 == at {
        return Ok(f0);
    }
    Ok(f0 + (f1 - f0) * (at - x0) / (x1 - x0))
}

/// Rate-scaled CDF read-out `rate * F(at)`.
pub fn eval_continuous_increasing(cdf_samples: &[(f64, f64)], at: f64, rate: f64) -> Result<f64> {
    if !rate.is_finite() {
        return Err(Error::Domain {
            arg: "rate",
            value: rate,
            expected: "a finite real",
        });
    }
    Ok(rate * interpolate_cdf(cdf_samples, at)?)
}

/// Result of a Monte Carlo mass estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MassEstimate {
    pub estimate: f64,
    pub standard_error: f64,
}

/// Draws one point from the product of the source's marginal densities.
pub fn sample_external<R: Rng + ?Sized>(src: &ExternalSource, rng: &mut R, out: &mut Vec<f64>) {
    out.clear();
    out.extend(src.densities().iter().map(|d| d.quantile(rng.random::<f64>())));
}

/// Monte Carlo estimate of the joint density mass inside the source's box.
///
/// Points are drawn from the product density by inverse-CDF sampling and the
/// estimate is the fraction landing inside the box; its standard error is
/// the sample standard deviation of the hit indicator over `sqrt(samples)`.
pub fn eval_joint_external(src: &ExternalSource, samples: usize, seed: u64) -> Result<MassEstimate> {
    if samples < MIN_JOINT_SAMPLES {
        return Err(Error::Domain {
            arg: "samples",
            value: samples as f64,
            expected: "[100, inf)",
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut point = Vec::with_capacity(src.dimension());
    let mut hits = 0u64;
    for _ in 0..samples {
        sample_external(src, &mut rng, &mut point);
        if src.contains(&point) {
            hits += 1;
        }
    }
    let n = samples as f64;
    let p = hits as f64 / n;
    let var = p * (1.0 - p) * n / (n - 1.0);
    Ok(MassEstimate {
        estimate: p,
        standard_error: var.sqrt() / n.sqrt(),
    })
}

/// Inputs to [`build_distribution`] that only some regimes need.
#[derive(Debug, Clone, Copy, Default)]
pub struct RegimeContext<'a> {
    pub external: Option<&'a ExternalSource>,
    /// Seed for the joint external evaluator.
    pub seed: u64,
}

/// Dispatches to the evaluator matching `spec`'s regime.
pub fn build_distribution(
    spec: &RegimeSpec,
    exp: &Experience,
    info: &InfoSource,
    ctx: RegimeContext<'_>,
) -> Result<MDistribution> {
    let kind = spec.kind();
    match (kind, ctx.external) {
        (RegimeKind::JointExternal, None) => return Err(Error::MissingExternalSource),
        (RegimeKind::JointExternal, Some(_)) => {}
        (_, Some(_)) => return Err(Error::UnexpectedExternalSource),
        _ => {}
    }
    match &spec.shape {
        RegimeShape::Bernoulli => eval_bernoulli(spec.base_precision),
        RegimeShape::Deterministic { table, success } => eval_deterministic(table, success),
        RegimeShape::DiscreteDecreasing | RegimeShape::DiscreteIncreasing => eval_monotone(spec, exp, info),
        RegimeShape::ContinuousDecreasing {
            density,
            threshold,
            ceiling,
        } => {
            let (_, hi) = density.support();
            let upper = exp.magnitude().min(*ceiling).min(hi);
            let p = if upper <= *threshold {
                0.0
            } else {
                eval_continuous_decreasing(density, *threshold, upper)?.clamp(0.0, 1.0)
            };
            MDistribution::new(kind, p, SupportDescription::ContinuousTail)
        }
        RegimeShape::ContinuousIncreasing { cdf, rate } => {
            let p = eval_continuous_increasing(cdf, info.magnitude, *rate)?;
            // quadrature-free read-out may land a hair above 1 through rounding
            let p = if p > 1.0 && p < 1.0 + 1e-12 { 1.0 } else { p };
            MDistribution::new(kind, p, SupportDescription::ContinuousTail)
        }
        RegimeShape::JointExternal { samples } => {
            let src = ctx.external.ok_or(Error::MissingExternalSource)?;
            let est = eval_joint_external(src, *samples, ctx.seed)?;
            MDistribution::new(kind, est.estimate, SupportDescription::TwoPoint)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Support;

    fn fixed() -> TimeModel {
        TimeModel::Fixed { base_time: 1.0 }
    }

    #[test]
    fn bernoulli_examples() {
        assert_eq!(eval_bernoulli(1.0).unwrap().two_point_masses(), (1.0, 0.0));
        assert_eq!(eval_bernoulli(0.0).unwrap().two_point_masses(), (0.0, 1.0));
        assert_eq!(eval_bernoulli(0.3).unwrap().two_point_masses(), (0.3, 0.7));
        assert!(eval_bernoulli(1.01).is_err());
        assert!(eval_bernoulli(f64::NAN).is_err());
    }

    #[test]
    fn deterministic_examples() {
        let pm = JointTable::new(vec![(vec![0], 1.0)]).unwrap();
        let d = eval_deterministic(&pm, &[0]).unwrap();
        assert_eq!(d.precision_prob(), 1.0);
        assert_eq!(d.support(), SupportDescription::PointMass);

        let half = JointTable::new(vec![(vec![0], 0.5), (vec![1], 0.5)]).unwrap();
        assert_eq!(eval_deterministic(&half, &[0]).unwrap().precision_prob(), 0.5);

        match JointTable::new(vec![(vec![0], 0.6), (vec![1], 0.5)]) {
            Err(Error::Normalization { sum, deficit }) => {
                assert!((sum - 1.1).abs() < 1e-12);
                assert!((deficit + 0.1).abs() < 1e-12);
            }
            other => panic!("expected normalization error, got {other:?}"),
        }
    }

    #[test]
    fn tilt_examples() {
        assert_eq!(tilt_precision(0.5, 1.0).unwrap(), 0.5);
        // 0.5^(1/2) to 17 significant digits: 0.70710678118654752
        assert_eq!(tilt_precision(0.5, 2.0).unwrap(), 0.7071067811865476);
        assert_eq!(tilt_precision(0.5, 0.5).unwrap(), 0.25);
        assert_eq!(tilt_precision(0.0, 3.0).unwrap(), 0.0);
        assert_eq!(tilt_precision(1.0, 0.1).unwrap(), 1.0);
        assert!(tilt_precision(0.5, 0.0).is_err());
        assert!(tilt_precision(0.5, -1.0).is_err());
    }

    #[test]
    fn monotone_examples() {
        let info = InfoSource::new(4.0, Support::Discrete).unwrap();
        let c = RegimeSpec::new(RegimeShape::DiscreteDecreasing, 0.6, fixed()).unwrap();
        let d = RegimeSpec::new(RegimeShape::DiscreteIncreasing, 0.6, fixed()).unwrap();
        let e8 = Experience::new(8.0).unwrap();
        let e2 = Experience::new(2.0).unwrap();
        // 0.6^(1/2) = 0.77459666924148337...
        let pc = eval_monotone(&c, &e8, &info).unwrap().precision_prob();
        assert!((pc - 0.774_596_669_241_483_4).abs() < 1e-15);
        let pd = eval_monotone(&d, &e2, &info).unwrap().precision_prob();
        assert!((pd - 0.36).abs() < 1e-15);
        let err = eval_monotone(&c, &e2, &info).unwrap_err();
        assert!(err.to_string().contains("I^i > I"), "{err}");
        assert!(eval_monotone(&d, &e8, &info).is_err());
    }

    #[test]
    fn continuous_decreasing_examples() {
        let u = DensitySpec::uniform(0.0, 1.0).unwrap();
        assert!((eval_continuous_decreasing(&u, 0.0, 1.0).unwrap() - 1.0).abs() < 1e-12);
        assert!((eval_continuous_decreasing(&u, 0.25, 0.75).unwrap() - 0.5).abs() < 1e-12);
        // antiderivative -(1 - x)^2: mass on [0.5, 1] is (1 - 0.5)^2 = 0.25
        let tri = DensitySpec::triangular_decreasing(0.0, 1.0).unwrap();
        assert!((eval_continuous_decreasing(&tri, 0.5, 1.0).unwrap() - 0.25).abs() < 1e-12);
        assert!(eval_continuous_decreasing(&u, 0.5, 1.5).is_err());
        assert!(eval_continuous_decreasing(&u, -0.5, 0.5).is_err());
        assert!(eval_continuous_decreasing(&u, 0.5, 0.5).is_err());
    }

    #[test]
    fn continuous_decreasing_tabulated_kinks() {
        let t = DensitySpec::tabulated(vec![(0.0, 0.0), (1.0, 1.0), (2.0, 0.0)]).unwrap();
        assert!((eval_continuous_decreasing(&t, 0.0, 2.0).unwrap() - 1.0).abs() < 1e-12);
        assert!((eval_continuous_decreasing(&t, 0.5, 1.5).unwrap() - 0.75).abs() < 1e-12);
    }

    #[test]
    fn continuous_increasing_examples() {
        let id = [(0.0, 0.0), (1.0, 1.0)];
        assert_eq!(eval_continuous_increasing(&id, 0.5, 1.0).unwrap(), 0.5);
        assert_eq!(eval_continuous_increasing(&id, 0.5, 0.0).unwrap(), 0.0);
        let f = [(0.0, 0.0), (1.0, 0.8), (2.0, 1.0)];
        assert!((eval_continuous_increasing(&f, 1.5, 2.0).unwrap() - 1.8).abs() < 1e-15);
        assert!(matches!(
            eval_continuous_increasing(&f, 2.5, 1.0),
            Err(Error::Extrapolation { .. })
        ));
        let bad = [(0.0, 0.5), (1.0, 0.2)];
        assert!(matches!(eval_continuous_increasing(&bad, 0.5, 1.0), Err(Error::Data(_))));
    }

    #[test]
    fn joint_external_examples() {
        let one = ExternalSource::new(vec![DensitySpec::uniform(0.0, 1.0).unwrap()], vec![(0.0, 1.0)]).unwrap();
        let est = eval_joint_external(&one, 1000, 7).unwrap();
        assert_eq!(est.estimate, 1.0);
        assert_eq!(est.standard_error, 0.0);

        let u = DensitySpec::uniform(0.0, 1.0).unwrap();
        let two = ExternalSource::new(vec![u.clone(), u], vec![(0.0, 0.5), (0.0, 0.5)]).unwrap();
        let est = eval_joint_external(&two, 10_000, 11).unwrap();
        assert!((est.estimate - 0.25).abs() <= 3.0 * est.standard_error, "{est:?}");

        let again = eval_joint_external(&two, 10_000, 11).unwrap();
        assert_eq!(est.estimate.to_bits(), again.estimate.to_bits());
        assert!(eval_joint_external(&two, 99, 11).is_err());
    }

    #[test]
    fn build_distribution_dispatch() {
        let exp = Experience::new(1.0).unwrap();
        let info = InfoSource::new(1.0, Support::Discrete).unwrap();
        let a = RegimeSpec::new(RegimeShape::Bernoulli, 0.4, fixed()).unwrap();
        let d = build_distribution(&a, &exp, &info, RegimeContext::default()).unwrap();
        assert_eq!(d.kind(), RegimeKind::Bernoulli);
        assert_eq!(d.two_point_masses(), (0.4, 0.6));

        let b = RegimeSpec::new(
            RegimeShape::Deterministic {
                table: JointTable::point_mass(vec![0]),
                success: vec![0],
            },
            1.0,
            fixed(),
        )
        .unwrap();
        assert_eq!(
            build_distribution(&b, &exp, &info, RegimeContext::default())
                .unwrap()
                .precision_prob(),
            1.0
        );

        let g = RegimeSpec::new(RegimeShape::JointExternal { samples: 1000 }, 0.5, fixed()).unwrap();
        assert_eq!(
            build_distribution(&g, &exp, &info, RegimeContext::default()).unwrap_err(),
            Error::MissingExternalSource
        );
    }

    #[test]
    fn tabulated_mdistribution_normalization() {
        assert!(MDistribution::tabulated(RegimeKind::Deterministic, vec![(0.0, 0.3), (1.0, 0.7)], 0.3).is_ok());
        assert!(MDistribution::tabulated(RegimeKind::Deterministic, vec![(0.0, 0.3), (1.0, 0.7 + 1e-9)], 0.3).is_err());
    }
}
