//! Domain types shared across the toolkit and the productivity equation
//! itself: an event's probability is the product of an experience term and
//! an information-conditioned processing term.
//!
//! Information `I`, experience `I^i` and external-source bounds all live on
//! one abstract information-complexity scale so that order comparisons
//! between them are meaningful.

use serde::{Deserialize, Serialize};

use crate::error::{check_nonnegative, check_positive, check_probability, Error, Result};

/// Support of an information source (or of any observed quantity).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Support {
    Discrete,
    Continuous,
}

/// The information `I` carried by a task.
///
/// `spread` is the relative half-width of per-instance variation: a workflow
/// instance realizes its information uniformly in
/// `magnitude * [1 - spread, 1 + spread]`, on an 11-point lattice when the
/// support is discrete. With `spread = 0` every instance sees `magnitude`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfoSource {
    pub magnitude: f64,
    pub support: Support,
    pub dimension: u32,
    pub spread: f64,
}

impl InfoSource {
    pub fn new(magnitude: f64, support: Support) -> Result<Self> {
        Self::with_shape(magnitude, support, 1, 0.0)
    }

    pub fn with_shape(magnitude: f64, support: Support, dimension: u32, spread: f64) -> Result<Self> {
        check_nonnegative("info.magnitude", magnitude)?;
        if dimension == 0 {
            return Err(Error::Domain {
                arg: "info.dimension",
                value: 0.0,
                expected: "[1, inf)",
            });
        }
        if !(0.0..1.0).contains(&spread) {
            return Err(Error::Domain {
                arg: "info.spread",
                value: spread,
                expected: "[0, 1)",
            });
        }
        Ok(Self {
            magnitude,
            support,
            dimension,
            spread,
        })
    }
}

/// Experience floor applied to an empty or zero experience before its first
/// update, so that experience/information ratios are defined.
pub const EXPERIENCE_FLOOR: f64 = 1.0;

/// An agent's accumulated experience `I^i`.
///
/// `weights` is the cumulative ladder `I^i_1 <= I^i_2 <= ... <= I^i_n`; the
/// magnitude is always its last rung when the ladder is nonempty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ExperienceRepr", into = "ExperienceRepr")]
pub struct Experience {
    magnitude: f64,
    weights: Vec<f64>,
    trials_completed: u64,
}

#[derive(Serialize, Deserialize)]
struct ExperienceRepr {
    magnitude: f64,
    weights: Vec<f64>,
    trials_completed: u64,
}

impl TryFrom<ExperienceRepr> for Experience {
    type Error = Error;

    fn try_from(r: ExperienceRepr) -> Result<Self> {
        let mut exp = if r.weights.is_empty() {
            Experience::new(r.magnitude)?
        } else {
            let exp = Experience::from_weights(r.weights)?;
            if exp.magnitude != r.magnitude {
                return Err(Error::Data(format!(
                    "experience magnitude {} differs from last ladder weight {}",
                    r.magnitude, exp.magnitude
                )));
            }
            exp
        };
        exp.trials_completed = r.trials_completed;
        Ok(exp)
    }
}

impl From<Experience> for ExperienceRepr {
    fn from(e: Experience) -> Self {
        Self {
            magnitude: e.magnitude,
            weights: e.weights,
            trials_completed: e.trials_completed,
        }
    }
}

impl Experience {
    /// A fresh experience of the given magnitude: a one-rung ladder, or an
    /// empty ladder for magnitude zero.
    pub fn new(magnitude: f64) -> Result<Self> {
        check_nonnegative("experience.magnitude", magnitude)?;
        let weights = if magnitude > 0.0 { vec![magnitude] } else { Vec::new() };
        Ok(Self {
            magnitude,
            weights,
            trials_completed: 0,
        })
    }

    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        for (k, w) in weights.iter().enumerate() {
            check_nonnegative("experience.weights", *w)?;
            if k > 0 && *w < weights[k - 1] {
                return Err(Error::Data(format!(
                    "experience ladder decreases at rung {}: {} < {}",
                    k + 1,
                    w,
                    weights[k - 1]
                )));
            }
        }
        let magnitude = weights.last().copied().unwrap_or(0.0);
        Ok(Self {
            magnitude,
            weights,
            trials_completed: 0,
        })
    }

    pub fn magnitude(&self) -> f64 {
        self.magnitude
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn trials_completed(&self) -> u64 {
        self.trials_completed
    }

    /// Returns this experience seeded at [`EXPERIENCE_FLOOR`] when it is
    /// empty or zero; otherwise unchanged.
    pub fn floored(mut self) -> Self {
        if self.magnitude <= 0.0 || self.weights.is_empty() {
            self.magnitude = EXPERIENCE_FLOOR;
            self.weights = vec![EXPERIENCE_FLOOR];
        }
        self
    }

    /// Appends a rung `increment` above the current total.
    pub(crate) fn push_increment(&mut self, increment: f64) {
        let next = self.magnitude + increment.max(0.0);
        self.weights.push(next);
        self.magnitude = next;
        self.trials_completed += 1;
    }
}

/// Which of the seven m-distribution regimes governs an event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RegimeKind {
    #[serde(rename = "A_Bernoulli", alias = "A")]
    Bernoulli,
    #[serde(rename = "B_Deterministic", alias = "B")]
    Deterministic,
    #[serde(rename = "C_DiscreteDecreasing", alias = "C")]
    DiscreteDecreasing,
    #[serde(rename = "D_DiscreteIncreasing", alias = "D")]
    DiscreteIncreasing,
    #[serde(rename = "E_ContinuousDecreasing", alias = "E")]
    ContinuousDecreasing,
    #[serde(rename = "F_ContinuousIncreasing", alias = "F")]
    ContinuousIncreasing,
    #[serde(rename = "G_JointExternal", alias = "G")]
    JointExternal,
}

impl RegimeKind {
    pub const ALL: [RegimeKind; 7] = [
        RegimeKind::Bernoulli,
        RegimeKind::Deterministic,
        RegimeKind::DiscreteDecreasing,
        RegimeKind::DiscreteIncreasing,
        RegimeKind::ContinuousDecreasing,
        RegimeKind::ContinuousIncreasing,
        RegimeKind::JointExternal,
    ];

    pub fn label(self) -> &'static str {
        match self {
            RegimeKind::Bernoulli => "A_Bernoulli",
            RegimeKind::Deterministic => "B_Deterministic",
            RegimeKind::DiscreteDecreasing => "C_DiscreteDecreasing",
            RegimeKind::DiscreteIncreasing => "D_DiscreteIncreasing",
            RegimeKind::ContinuousDecreasing => "E_ContinuousDecreasing",
            RegimeKind::ContinuousIncreasing => "F_ContinuousIncreasing",
            RegimeKind::JointExternal => "G_JointExternal",
        }
    }

    /// Single-letter code `A`..`G`.
    pub fn letter(self) -> char {
        self.label().as_bytes()[0] as char
    }

    /// Accepts either the letter or the full label, case-insensitively.
    pub fn parse(s: &str) -> Option<Self> {
        let s = s.trim();
        Self::ALL.into_iter().find(|k| {
            k.label().eq_ignore_ascii_case(s)
                || (s.len() == 1 && s.chars().next().map(|c| c.to_ascii_uppercase()) == Some(k.letter()))
        })
    }
}

impl std::fmt::Display for RegimeKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// Concrete density carrier for continuous regimes and external sources.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DensityKind {
    Uniform,
    TriangularDecreasing,
    TriangularIncreasing,
    TabulatedPdf,
}

/// A validated one-dimensional probability density on a bounded support.
///
/// Uniform and triangular kinds take `params = [lo, hi]`; the tabulated kind
/// is piecewise linear through its `(x, f(x))` table. Every density must
/// integrate to 1 over its support within 1e-6.
#[derive(Debug, Clone, PartialEq)]
pub struct DensitySpec {
    kind: DensityKind,
    params: Vec<f64>,
    table: Option<Vec<(f64, f64)>>,
    /// Total tabulated mass; 1 for closed-form kinds.
    mass: f64,
}

const DENSITY_MASS_TOL: f64 = 1e-6;

impl DensitySpec {
    pub fn new(kind: DensityKind, params: Vec<f64>, table: Option<Vec<(f64, f64)>>) -> Result<Self> {
        match kind {
            DensityKind::TabulatedPdf => {
                let table = table.ok_or(Error::MissingField("table"))?;
                Self::tabulated(table)
            }
            _ => {
                if params.len() != 2 {
                    return Err(Error::Data(format!(
                        "{kind:?} density takes params [lo, hi], got {} values",
                        params.len()
                    )));
                }
                let (lo, hi) = (params[0], params[1]);
                if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                    return Err(Error::Data(format!("density bounds must satisfy lo < hi, got [{lo}, {hi}]")));
                }
                Ok(Self {
                    kind,
                    params,
                    table: None,
                    mass: 1.0,
                })
            }
        }
    }

    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        Self::new(DensityKind::Uniform, vec![lo, hi], None)
    }

    pub fn triangular_decreasing(lo: f64, hi: f64) -> Result<Self> {
        Self::new(DensityKind::TriangularDecreasing, vec![lo, hi], None)
    }

    pub fn triangular_increasing(lo: f64, hi: f64) -> Result<Self> {
        Self::new(DensityKind::TriangularIncreasing, vec![lo, hi], None)
    }

    pub fn tabulated(table: Vec<(f64, f64)>) -> Result<Self> {
        if table.len() < 2 {
            return Err(Error::Data("tabulated pdf needs at least two points".into()));
        }
        for (k, &(x, y)) in table.iter().enumerate() {
            if !x.is_finite() || !y.is_finite() {
                return Err(Error::Data(format!("tabulated pdf point {k} is not finite")));
            }
            if y < 0.0 {
                return Err(Error::Data(format!("tabulated pdf ordinate {k} is negative ({y})")));
            }
            if k > 0 && x <= table[k - 1].0 {
                return Err(Error::Data(format!(
                    "tabulated pdf abscissae must be strictly increasing (point {k})"
                )));
            }
        }
        let mass: f64 = table
            .windows(2)
            .map(|w| 0.5 * (w[0].1 + w[1].1) * (w[1].0 - w[0].0))
            .sum();
        if (mass - 1.0).abs() > DENSITY_MASS_TOL {
            return Err(Error::Normalization {
                sum: mass,
                deficit: 1.0 - mass,
            });
        }
        Ok(Self {
            kind: DensityKind::TabulatedPdf,
            params: Vec::new(),
            table: Some(table),
            mass,
        })
    }

    pub fn kind(&self) -> DensityKind {
        self.kind
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn table(&self) -> Option<&[(f64, f64)]> {
        self.table.as_deref()
    }

    /// Closed support `[lo, hi]`.
    pub fn support(&self) -> (f64, f64) {
        match &self.table {
            Some(t) => (t[0].0, t[t.len() - 1].0),
            None => (self.params[0], self.params[1]),
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        let (lo, hi) = self.support();
        if x < lo || x > hi {
            return 0.0;
        }
        let w = hi - lo;
        match self.kind {
            DensityKind::Uniform => 1.0 / w,
            DensityKind::TriangularDecreasing => 2.0 * (hi - x) / (w * w),
            DensityKind::TriangularIncreasing => 2.0 * (x - lo) / (w * w),
            DensityKind::TabulatedPdf => {
                let t = self.table.as_deref().unwrap_or_default();
                let k = segment_index(t, x);
                let ((x0, y0), (x1, y1)) = (t[k], t[k + 1]);
                y0 + (y1 - y0) * (x - x0) / (x1 - x0)
            }
        }
    }

    /// Closed-form cumulative distribution, normalized to reach exactly 1 at
    /// the top of the support.
    pub fn cdf(&self, x: f64) -> f64 {
        let (lo, hi) = self.support();
        if x <= lo {
            return 0.0;
        }
        if x >= hi {
            return 1.0;
        }
        let w = hi - lo;
        match self.kind {
            DensityKind::Uniform => (x - lo) / w,
            DensityKind::TriangularDecreasing => 1.0 - ((hi - x) / w).powi(2),
            DensityKind::TriangularIncreasing => ((x - lo) / w).powi(2),
            DensityKind::TabulatedPdf => {
                let t = self.table.as_deref().unwrap_or_default();
                let k = segment_index(t, x);
                let before: f64 = t[..=k]
                    .windows(2)
                    .map(|s| 0.5 * (s[0].1 + s[1].1) * (s[1].0 - s[0].0))
                    .sum();
                let ((x0, y0), (x1, y1)) = (t[k], t[k + 1]);
                let d = x - x0;
                let partial = y0 * d + 0.5 * (y1 - y0) * d * d / (x1 - x0);
                ((before + partial) / self.mass).clamp(0.0, 1.0)
            }
        }
    }

    /// Inverse of [`cdf`](Self::cdf) for `u` in `[0, 1]`.
    pub fn quantile(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        let (lo, hi) = self.support();
        let w = hi - lo;
        match self.kind {
            DensityKind::Uniform => lo + u * w,
            DensityKind::TriangularDecreasing => hi - w * (1.0 - u).sqrt(),
            DensityKind::TriangularIncreasing => lo + w * u.sqrt(),
            DensityKind::TabulatedPdf => {
                let t = self.table.as_deref().unwrap_or_default();
                let target = u * self.mass;
                let mut acc = 0.0;
                for s in t.windows(2) {
                    let ((x0, y0), (x1, y1)) = (s[0], s[1]);
                    let h = x1 - x0;
                    let seg = 0.5 * (y0 + y1) * h;
                    if acc + seg >= target && seg > 0.0 {
                        // solve y0 d + (y1 - y0) d^2 / (2h) = r for d in [0, h]
                        let r = target - acc;
                        let a = 0.5 * (y1 - y0) / h;
                        let d = if a.abs() < 1e-15 {
                            r / y0
                        } else {
                            let disc = (y0 * y0 + 4.0 * a * r).max(0.0);
                            2.0 * r / (y0 + disc.sqrt())
                        };
                        return (x0 + d).clamp(x0, x1);
                    }
                    acc += seg;
                }
                hi
            }
        }
    }
}

fn segment_index(t: &[(f64, f64)], x: f64) -> usize {
    let pos = t.partition_point(|p| p.0 <= x);
    pos.saturating_sub(1).min(t.len() - 2)
}

/// Multi-dimensional external source `S^i`: independent per-dimension
/// densities and the box over which their joint mass is taken.
#[derive(Debug, Clone, PartialEq)]
pub struct ExternalSource {
    densities: Vec<DensitySpec>,
    bounds: Vec<(f64, f64)>,
}

impl ExternalSource {
    pub fn new(densities: Vec<DensitySpec>, bounds: Vec<(f64, f64)>) -> Result<Self> {
        if densities.is_empty() || densities.len() != bounds.len() {
            return Err(Error::Data(format!(
                "external source needs equal, nonzero numbers of densities and bounds (got {} and {})",
                densities.len(),
                bounds.len()
            )));
        }
        for (k, &(lo, hi)) in bounds.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::Data(format!("external bound {k} must satisfy lo <= hi, got [{lo}, {hi}]")));
            }
        }
        Ok(Self { densities, bounds })
    }

    pub fn densities(&self) -> &[DensitySpec] {
        &self.densities
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn dimension(&self) -> usize {
        self.densities.len()
    }

    /// Exact box mass from the closed-form marginal CDFs.
    pub fn box_mass(&self) -> f64 {
        self.densities
            .iter()
            .zip(&self.bounds)
            .map(|(d, &(lo, hi))| d.cdf(hi) - d.cdf(lo))
            .product()
    }

    pub fn contains(&self, point: &[f64]) -> bool {
        point
            .iter()
            .zip(&self.bounds)
            .all(|(x, &(lo, hi))| *x >= lo && *x <= hi)
    }
}

/// How the time `T` of an event is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TimeModel {
    /// Constant `base_time`.
    Fixed { base_time: f64 },
    /// Attempts are repeated until resolution, each attempt costing
    /// `base_time`; an attempt resolves with probability `resolve_prob`.
    GeometricRetries { base_time: f64, resolve_prob: f64 },
    /// Exponentially distributed service time with the given rate.
    Exponential { rate: f64 },
}

impl TimeModel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            TimeModel::Fixed { base_time } => check_positive("time.base_time", base_time).map(drop),
            TimeModel::GeometricRetries {
                base_time,
                resolve_prob,
            } => {
                check_positive("time.base_time", base_time)?;
                if !(resolve_prob > 0.0 && resolve_prob <= 1.0) {
                    return Err(Error::Domain {
                        arg: "time.resolve_prob",
                        value: resolve_prob,
                        expected: "(0, 1]",
                    });
                }
                Ok(())
            }
            TimeModel::Exponential { rate } => check_positive("time.rate", rate).map(drop),
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            TimeModel::Fixed { base_time } => base_time,
            TimeModel::GeometricRetries {
                base_time,
                resolve_prob,
            } => base_time / resolve_prob,
            TimeModel::Exponential { rate } => 1.0 / rate,
        }
    }
}

/// A realized event: whether precision reached its target, the graded
/// precision value, and the time it took.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventOutcome {
    pub precision_hit: bool,
    pub precision_value: f64,
    pub time_spent: f64,
    pub regime: RegimeKind,
}

/// Event probability: experience term times the information-conditioned
/// processing term.
pub fn event_probability(prob_experience: f64, prob_conditional: f64) -> Result<f64> {
    let a = check_probability("prob_experience", prob_experience)?;
    let b = check_probability("prob_conditional", prob_conditional)?;
    Ok(a * b)
}

/// Ratio of two magnitudes on the shared information-complexity scale.
pub fn magnitude_ratio(numerator: f64, denominator: f64) -> Result<f64> {
    if !(denominator > 0.0) || !denominator.is_finite() {
        return Err(Error::DegenerateInfo(format!(
            "information magnitude must be positive, got {denominator}"
        )));
    }
    check_nonnegative("magnitude", numerator)?;
    Ok(numerator / denominator)
}

/// `I^i / I`: above 1 when experience exceeds the task's information, below
/// 1 when it falls short.
pub fn experience_ratio(exp: &Experience, info: &InfoSource) -> Result<f64> {
    magnitude_ratio(exp.magnitude(), info.magnitude)
}
