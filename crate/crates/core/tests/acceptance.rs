//! Acceptance suite: one PASS/FAIL line per criterion, with its runtime
//! budget. Run with `cargo test --test acceptance`.

mod common;

use std::path::Path;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use wfprod::classifier::{classify_regime, ClassifierConfig};
use wfprod::learning::{interpolate, pattern_response, WeightLadder};
use wfprod::metrics::{entropy_trajectory, flow_regularity, saturation_flag, shannon_entropy};
use wfprod::model::{event_probability, DensitySpec, ExternalSource, RegimeKind, TimeModel};
use wfprod::regimes::{eval_continuous_decreasing, eval_joint_external, tilt_precision, JointTable, MDistribution};
use wfprod::simulator::{run_monte_carlo, MonteCarloOptions};

use common::*;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

// Exact sums: every probability is a multiple of 2^-44, so integer
// arithmetic in those units decides normalization without rounding.
const UNIT_BITS: i32 = 44;
const MASS_TOL: f64 = 1e-12;

fn c1_normalization() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC1);
    let unit = 2f64.powi(-UNIT_BITS);
    let one: i128 = 1 << UNIT_BITS;
    let (mut false_accepts, mut false_rejects, mut accepted) = (0, 0, 0);
    for case in 0..1000 {
        let len = rng.random_range(1..=12usize);
        // coarse dyadic weights summing to exactly one
        let coarse = 1i128 << 20;
        let mut cuts: Vec<i128> = (0..len - 1).map(|_| rng.random_range(0..=coarse)).collect();
        cuts.push(0);
        cuts.push(coarse);
        cuts.sort();
        let mut units: Vec<i128> = cuts.windows(2).map(|w| (w[1] - w[0]) << (UNIT_BITS - 20)).collect();
        // perturb one entry by a chosen number of 2^-44 units
        let delta: i128 = match case % 5 {
            0 => 0,
            1 => rng.random_range(-17..=17),
            2 => rng.random_range(18..=40) * if rng.random::<bool>() { 1 } else { -1 },
            3 => rng.random_range(1..1000) << 20,
            _ => -(rng.random_range(1..1000) << 20),
        };
        let k = rng.random_range(0..len);
        if units[k] + delta < 0 {
            units[k] = 0;
        } else {
            units[k] += delta;
        }
        let exact: i128 = units.iter().sum();
        let should_accept = ((exact - one).abs() as f64) * unit <= MASS_TOL;
        let probs: Vec<f64> = units.iter().map(|u| *u as f64 * unit).collect();
        let ok = if case % 2 == 0 {
            let pairs = probs.iter().enumerate().map(|(i, p)| (i as f64, *p)).collect();
            MDistribution::tabulated(RegimeKind::Deterministic, pairs, 0.0).is_ok()
        } else {
            let outcomes = probs.iter().enumerate().map(|(i, p)| (vec![i as u32, 0], *p)).collect();
            JointTable::new(outcomes).is_ok()
        };
        match (ok, should_accept) {
            (true, false) => false_accepts += 1,
            (false, true) => false_rejects += 1,
            (true, true) => accepted += 1,
            _ => {}
        }
    }
    ensure!(
        false_accepts == 0 && false_rejects == 0,
        "{false_accepts} false accepts, {false_rejects} false rejects"
    );
    Ok(format!("1000 tables, {accepted} normalized, 0 misclassified"))
}

fn c2_reductions() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC2);
    for _ in 0..10_000 {
        let q: f64 = rng.random();
        let got = event_probability(1.0, q).map_err(|e| e.to_string())?;
        ensure!(got == q, "event_probability(1, {q}) = {got}");
    }
    for p in [0.0, 1.0] {
        let g = chain(vec![bernoulli_node("a", p, fixed_time())]);
        let agents = agents_for(&g, 1.0, 0.1);
        let report = run_monte_carlo(&g, &agents, &MonteCarloOptions::new(10_000, 5)).map_err(|e| e.to_string())?;
        let hits = report.trace.iter().filter(|t| t.nodes[0].outcome.precision_hit).count();
        let expected = if p == 1.0 { 10_000 } else { 0 };
        ensure!(hits == expected, "p = {p}: {hits} hits of 10000");
        ensure!(report.nodes[0].success_rate == p, "p = {p}: rate {}", report.nodes[0].success_rate);
    }
    Ok("identity exact on 10^4 draws; p in {0, 1} deterministic over 10^4 trials".into())
}

fn c3_tilt() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC3);
    let tilt = |p: f64, r: f64| tilt_precision(p, r).map_err(|e| e.to_string());
    for _ in 0..10_000 {
        let p = rng.random_range(1e-3..=1.0 - 1e-3);
        let r = 10f64.powf(rng.random_range(-2.0..2.0));
        let r2 = r * (1.0 + rng.random_range(1e-3..1.0));
        let (a, b) = (tilt(p, r)?, tilt(p, r2)?);
        ensure!(b > a, "not increasing: p={p}, r={r} -> {a}, r={r2} -> {b}");
        ensure!(tilt(p, 1.0)? == p, "fixed point fails at p={p}");
        let lo = tilt(p, 1e-6)?;
        let hi = tilt(p, 1e6)?;
        ensure!(lo < 1e-3, "limit r->0 at p={p}: {lo}");
        ensure!(hi > 1.0 - 1e-3, "limit r->inf at p={p}: {hi}");
    }
    Ok("10^4 pairs: strictly increasing, fixed at r = 1, limits within 1e-3".into())
}

fn c4_quadrature() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC4);
    let mut worst = 0.0f64;
    for case in 0..100 {
        let lo: f64 = rng.random_range(-5.0..5.0);
        let hi = lo + rng.random_range(0.1..10.0);
        let mut a = rng.random_range(lo..hi);
        let mut b = rng.random_range(lo..hi);
        if a > b {
            std::mem::swap(&mut a, &mut b);
        }
        if b - a < 1e-6 {
            b = (a + 1e-3).min(hi);
        }
        let w = hi - lo;
        let (density, exact) = match case % 3 {
            0 => (DensitySpec::uniform(lo, hi), (b - a) / w),
            1 => {
                let cdf = |x: f64| 1.0 - ((hi - x) / w).powi(2);
                (DensitySpec::triangular_decreasing(lo, hi), cdf(b) - cdf(a))
            }
            _ => {
                let cdf = |x: f64| ((x - lo) / w).powi(2);
                (DensitySpec::triangular_increasing(lo, hi), cdf(b) - cdf(a))
            }
        };
        let density = density.map_err(|e| e.to_string())?;
        let got = eval_continuous_decreasing(&density, a, b).map_err(|e| e.to_string())?;
        worst = worst.max((got - exact).abs());
        ensure!((got - exact).abs() < 1e-8, "case {case}: [{a}, {b}] on [{lo}, {hi}] gave {got}, exact {exact}");
    }
    Ok(format!("100 intervals, worst error {worst:.2e}"))
}

fn c5_joint() -> Outcome {
    let src = ExternalSource::new(
        vec![
            DensitySpec::uniform(0.0, 1.0).map_err(|e| e.to_string())?,
            DensitySpec::uniform(-1.0, 3.0).map_err(|e| e.to_string())?,
        ],
        vec![(0.2, 0.7), (0.0, 2.2)],
    )
    .map_err(|e| e.to_string())?;
    let exact = 0.5 * (2.2 / 4.0);
    let mut inside = 0;
    for seed in 0..100u64 {
        let est = eval_joint_external(&src, 10_000, seed).map_err(|e| e.to_string())?;
        if (est.estimate - exact).abs() <= 3.0 * est.standard_error {
            inside += 1;
        }
    }
    ensure!(inside >= 99, "only {inside}/100 estimates within 3 SE of {exact}");
    Ok(format!("{inside}/100 estimates within 3 SE of {exact}"))
}

fn c6_learning() -> Outcome {
    use wfprod::model::{InfoSource, Support};
    use wfprod::regimes::{RegimeShape, RegimeSpec};
    let spec = RegimeSpec::new(RegimeShape::DiscreteDecreasing, 0.5, fixed_time()).map_err(|e| e.to_string())?;
    let g = chain(vec![node("learn", spec, InfoSource::new(1.0, Support::Discrete).unwrap())]);
    let agents = agents_for(&g, 2.0, 0.1);
    let mut opts = MonteCarloOptions::new(200, 11);
    opts.reset_experience = false;
    let report = run_monte_carlo(&g, &agents, &opts).map_err(|e| e.to_string())?;
    let ps = report.precision_probs("learn").map_err(|e| e.to_string())?;
    ensure!(ps.len() == 200, "{} trials recorded", ps.len());
    ensure!(ps.windows(2).all(|w| w[1] >= w[0]), "precision sequence decreases somewhere");
    let last = *ps.last().unwrap();
    ensure!(last > 0.99, "final precision {last}");

    // hand-computed: (probe - total) / last_increment + i
    let interp_cases: [(&[f64], f64, f64, f64); 10] = [
        (&[4.0, 8.0, 10.0], 10.0, 0.0, 0.0),
        (&[4.0, 8.0, 10.0], 14.0, 0.0, 2.0),
        (&[4.0, 8.0, 10.0], 6.0, 3.0, 1.0),
        (&[5.0], 10.0, 1.0, 2.0),
        (&[1.0, 2.0], 2.5, 0.0, 0.5),
        (&[1.0, 3.0, 7.0], 9.0, 2.0, 2.5),
        (&[0.5, 1.0, 1.5, 2.0], 3.0, 4.0, 6.0),
        (&[2.0, 2.25], 2.0, 1.0, 0.0),
        (&[8.0], 2.0, 0.0, -0.75),
        (&[1.0, 1.5, 2.5, 4.5], 4.5, 7.0, 7.0),
    ];
    for (weights, probe, i, want) in interp_cases {
        let ladder = WeightLadder::new(weights).map_err(|e| e.to_string())?;
        let got = interpolate(&ladder, probe, i).map_err(|e| e.to_string())?;
        ensure!((got - want).abs() <= 1e-12, "interpolate({weights:?}, {probe}, {i}) = {got}, want {want}");
    }
    let pattern_cases: [(&[f64], &[f64], f64); 10] = [
        (&[1.0], &[1.0], 1.0),
        (&[2.0, 3.0], &[0.0, 0.0], 0.0),
        (&[1.0, 2.0, 3.0], &[0.5, 0.5, 0.5], 3.0),
        (&[4.0, -2.0], &[0.25, 0.5], 0.0),
        (&[1.5, 2.5], &[1.0, 0.5], 2.75),
        (&[10.0, 20.0, 30.0], &[0.1, 0.2, 0.3], 14.0),
        (&[0.5; 4], &[1.0; 4], 2.0),
        (&[3.0], &[0.125], 0.375),
        (&[-1.0, -1.0, 2.0], &[1.0, 0.5, 0.75], 0.0),
        (&[8.0, 4.0, 2.0, 1.0], &[0.5, 0.25, 0.125, 0.0625], 5.3125),
    ];
    for (f, p, want) in pattern_cases {
        let got = pattern_response(f, p).map_err(|e| e.to_string())?;
        ensure!((got - want).abs() <= 1e-12, "pattern_response({f:?}, {p:?}) = {got}, want {want}");
    }
    Ok(format!("200 trials nondecreasing to {last:.6}; 20 fixed cases exact"))
}

fn c7_convergence() -> Outcome {
    let n = 100_000u64;
    let band = 4.0 * (0.3f64 * 0.7 / n as f64).sqrt();
    let g = chain(vec![bernoulli_node("a", 0.3, fixed_time())]);
    let report =
        run_monte_carlo(&g, &agents_for(&g, 1.0, 0.1), &MonteCarloOptions::new(n, 7)).map_err(|e| e.to_string())?;
    let rate = report.nodes[0].success_rate;
    ensure!((rate - 0.3).abs() < band, "single node rate {rate}, band {band}");

    let ps = [0.9, 0.8, 0.7];
    let g = chain(
        ps.iter()
            .enumerate()
            .map(|(k, p)| bernoulli_node(&format!("s{k}"), *p, fixed_time()))
            .collect(),
    );
    let report =
        run_monte_carlo(&g, &agents_for(&g, 1.0, 0.1), &MonteCarloOptions::new(n, 8)).map_err(|e| e.to_string())?;
    let product: f64 = ps.iter().product();
    let e2e = report.end_to_end.success_rate;
    ensure!((e2e - product).abs() < band, "chain rate {e2e}, product {product}, band {band}");
    Ok(format!("rate {rate:.5}, chain {e2e:.5} vs {product:.3}, band {band:.5}"))
}

const DETERMINISM_SCENARIO: &str = r#"
spec_version = 1
seed = 2024
n_trials = 2000

[[agents]]
id = "ana"
experience = 8.0

[[agents]]
id = "bo"
experience = 1.0

[[nodes]]
id = "intake"
agent = "ana"
info = { magnitude = 4.0, support = "discrete", spread = 0.5 }
regime = { kind = "C", base_precision = 0.5, time = { kind = "exponential", rate = 2.0 } }

[[nodes]]
id = "check"
agent = "bo"
info = { magnitude = 4.0, support = "continuous", spread = 0.5 }
regime = { kind = "F", base_precision = 0.5, cdf = [[0.0, 0.0], [10.0, 1.0]], rate = 0.5, time = { kind = "geometric_retries", base_time = 0.5, resolve_prob = 0.6 } }

[[nodes]]
id = "field"
agent = "bo"
info = { magnitude = 1.0, support = "continuous" }
regime = { kind = "G", base_precision = 0.5, samples = 5000 }
external = { densities = [{ kind = "uniform", params = [0.0, 1.0] }, { kind = "triangular_decreasing", params = [0.0, 2.0] }], bounds = [[0.1, 0.8], [0.0, 1.0]] }

[[nodes]]
id = "merge"
agent = "ana"
info = { magnitude = 1.0, support = "discrete" }
regime = { kind = "A", base_precision = 0.8 }

[[edges]]
from = "intake"
to = "check"

[[edges]]
from = "intake"
to = "field"

[[edges]]
from = "check"
to = "merge"

[[edges]]
from = "field"
to = "merge"
"#;

fn read_dir_sorted(dir: &Path) -> Result<Vec<(String, Vec<u8>)>, String> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .map_err(|e| e.to_string())?
        .map(|e| {
            let e = e.map_err(|e| e.to_string())?;
            let bytes = std::fs::read(e.path()).map_err(|e| e.to_string())?;
            Ok((e.file_name().to_string_lossy().into_owned(), bytes))
        })
        .collect::<Result<_, String>>()?;
    files.sort();
    Ok(files)
}

fn c8_determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let scenario = tmp.path().join("scenario.toml");
    std::fs::write(&scenario, DETERMINISM_SCENARIO).map_err(|e| e.to_string())?;
    let mut outputs = Vec::new();
    for workers in [1usize, 4, 8] {
        let out = tmp.path().join(format!("out-{workers}"));
        let args = [
            "wfprod".to_string(),
            "simulate".into(),
            scenario.display().to_string(),
            "--workers".into(),
            workers.to_string(),
            "--out".into(),
            out.display().to_string(),
        ];
        let (mut so, mut se) = (Vec::new(), Vec::new());
        let code = wfprod::cli::run(args, &mut so, &mut se);
        ensure!(code == 0, "workers {workers}: exit {code}: {}", String::from_utf8_lossy(&se));
        let files = read_dir_sorted(&out)?;
        outputs.push((workers, files, so));
    }
    let (_, reference, ref_stdout) = &outputs[0];
    ensure!(reference.len() >= 6, "only {} report files written", reference.len());
    for (workers, files, stdout) in &outputs[1..] {
        ensure!(files == reference, "files differ between 1 and {workers} workers");
        ensure!(stdout == ref_stdout, "stdout differs between 1 and {workers} workers");
    }
    Ok(format!("{} files byte-identical across 1, 4 and 8 workers", reference.len()))
}

fn c9_classifier() -> Outcome {
    let reps = 100u64;
    let n = 10_000u64;
    let cfg = |seed| ClassifierConfig {
        seed,
        ..ClassifierConfig::default()
    };
    let mut summary = Vec::new();
    let mut failures = Vec::new();
    for kind in &RegimeKind::ALL[..6] {
        let (g, agents) = canonical(*kind);
        let mut good = 0;
        let mut saw = std::collections::BTreeMap::new();
        for rep in 0..reps {
            let report = run_monte_carlo(&g, &agents, &MonteCarloOptions::new(n, 1000 * rep + kind.letter() as u64))
                .map_err(|e| e.to_string())?;
            let obs = report.observations(&g.nodes[0].id).map_err(|e| e.to_string())?;
            ensure!(obs.covariates().is_empty(), "{kind} exported covariates");
            let c = classify_regime(&obs, &cfg(rep)).map_err(|e| format!("{kind} rep {rep}: {e}"))?;
            ensure!(c.regime != RegimeKind::JointExternal, "{kind} rep {rep}: G without covariates");
            *saw.entry(c.regime.letter()).or_insert(0) += 1;
            if c.regime == *kind && c.confidence >= 0.90 {
                good += 1;
            }
        }
        summary.push(format!("{}:{good}", kind.letter()));
        if good * 100 < 95 * reps {
            failures.push(format!("{kind}: {good}/{reps} correct with confidence >= 0.90 (saw {saw:?})"));
        }
    }

    // G is detected from covariates, and never without them.
    let (g, agents) = canonical(RegimeKind::JointExternal);
    let mut detected = 0;
    for rep in 0..20u64 {
        let report = run_monte_carlo(&g, &agents, &MonteCarloOptions::new(n, 77 + rep)).map_err(|e| e.to_string())?;
        let obs = report.observations(&g.nodes[0].id).map_err(|e| e.to_string())?;
        ensure!(!obs.covariates().is_empty(), "G run exported no covariates");
        let with = classify_regime(&obs, &cfg(rep)).map_err(|e| e.to_string())?;
        if with.regime == RegimeKind::JointExternal {
            detected += 1;
        }
        let without = classify_regime(&obs.without_covariates(), &cfg(rep)).map_err(|e| e.to_string())?;
        ensure!(
            without.regime != RegimeKind::JointExternal,
            "G returned without covariates (rep {rep})"
        );
    }
    summary.push(format!("G with covariates {detected}/20"));
    ensure!(failures.is_empty(), "{}", failures.join("; "));
    Ok(summary.join(" "))
}

fn c10_entropy() -> Outcome {
    let exact = [(vec![1.0], 0.0), (vec![0.5, 0.5], 1.0), (vec![0.25; 4], 2.0)];
    for (probs, want) in exact {
        let h = shannon_entropy(&probs).map_err(|e| e.to_string())?;
        ensure!((h - want).abs() <= 1e-12, "H({probs:?}) = {h}, want {want}");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0xC10);
    for path in 0..200 {
        let len = rng.random_range(3..60);
        let mut ps: Vec<f64> = (0..len).map(|_| rng.random::<f64>()).collect();
        ps.push(rng.random_range(0.0..0.5));
        ps.push(rng.random_range(0.5..1.0));
        ps.sort_by(f64::total_cmp);
        if path % 2 == 1 {
            ps.reverse();
        }
        let h = entropy_trajectory(&ps).map_err(|e| e.to_string())?;
        // unimodal: nondecreasing up to the peak, nonincreasing after
        let peak = h
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(k, _)| k)
            .unwrap();
        let rising = h[..=peak].windows(2).all(|w| w[1] >= w[0]);
        let falling = h[peak..].windows(2).all(|w| w[1] <= w[0]);
        ensure!(rising && falling, "path {path} not unimodal: {h:?}");
    }
    Ok("exact values within 1e-12; 200 monotone paths unimodal".into())
}

fn c11_saturation() -> Outcome {
    let cv = flow_regularity(&[0.0, 1.5, 3.0, 4.5, 6.0]).map_err(|e| e.to_string())?;
    ensure!(cv == 0.0, "constant gaps gave CV {cv}");
    let s = saturation_flag(1.0, 1.0).map_err(|e| e.to_string())?;
    ensure!(s.saturated, "arrival 1, service 1 not saturated");

    let rate = 2.0;
    let n = 100_000u64;
    let g = chain(vec![bernoulli_node("svc", 0.5, TimeModel::Exponential { rate })]);
    let report =
        run_monte_carlo(&g, &agents_for(&g, 1.0, 0.1), &MonteCarloOptions::new(n, 3)).map_err(|e| e.to_string())?;
    let dwell = report.dwell_times("svc").map_err(|e| e.to_string())?;
    let mean = dwell.iter().sum::<f64>() / n as f64;
    let var = dwell.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let se = (var / n as f64).sqrt();
    ensure!(
        (mean - 1.0 / rate).abs() <= 3.0 * se,
        "mean dwell {mean}, expected {} +- {}",
        1.0 / rate,
        3.0 * se
    );
    ensure!(
        (report.nodes[0].mean_time - mean).abs() < 1e-12,
        "summary mean {} differs from trace mean {mean}",
        report.nodes[0].mean_time
    );
    Ok(format!("mean dwell {mean:.5} vs {}, 3 SE = {:.5}", 1.0 / rate, 3.0 * se))
}

struct Criterion {
    id: u32,
    name: &'static str,
    budget: Duration,
    run: fn() -> Outcome,
}

fn main() {
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let criteria = [
        Criterion { id: 1, name: "normalization", budget: Duration::from_secs(1), run: c1_normalization },
        Criterion { id: 2, name: "reduction identities", budget: Duration::from_secs(1), run: c2_reductions },
        Criterion { id: 3, name: "tilt law", budget: Duration::from_secs(1), run: c3_tilt },
        Criterion { id: 4, name: "quadrature oracle", budget: Duration::from_secs(1), run: c4_quadrature },
        Criterion { id: 5, name: "joint integral oracle", budget: Duration::from_secs(10), run: c5_joint },
        Criterion { id: 6, name: "learning curve", budget: Duration::from_secs(1), run: c6_learning },
        Criterion { id: 7, name: "monte carlo convergence", budget: Duration::from_secs(5), run: c7_convergence },
        Criterion { id: 8, name: "determinism", budget: Duration::from_secs(10), run: c8_determinism },
        Criterion { id: 9, name: "classifier round-trip", budget: Duration::from_secs(120), run: c9_classifier },
        Criterion { id: 10, name: "entropy", budget: Duration::from_secs(1), run: c10_entropy },
        Criterion { id: 11, name: "saturation and flow", budget: Duration::from_secs(5), run: c11_saturation },
    ];
    let mut failed = 0;
    for c in &criteria {
        if !filter.is_empty() && !filter.iter().any(|f| c.name.contains(f.as_str()) || c.id.to_string() == *f) {
            continue;
        }
        let start = Instant::now();
        let outcome = (c.run)();
        let elapsed = start.elapsed();
        let (verdict, detail) = match outcome {
            Ok(_) if elapsed > c.budget => ("FAIL", format!("over budget {:?}", c.budget)),
            Ok(d) => ("PASS", d),
            Err(e) => ("FAIL", e),
        };
        if verdict == "FAIL" {
            failed += 1;
        }
        println!(
            "[{verdict}] criterion {:>2} {:<24} {:>8.3}s  {detail}",
            c.id,
            c.name,
            elapsed.as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
