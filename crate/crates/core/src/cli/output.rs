//! Report files and observation CSVs.
//!
//! Every writer formats floats with Rust's shortest round-trip notation, so
//! identical inputs give byte-identical files.

use std::fs;
use std::path::{Path, PathBuf};

use crate::classifier::ObservationSet;
use crate::cli::CliError;
use crate::metrics::{binary_entropy, Histogram};
use crate::simulator::{NodeSummary, SimReport, REPORT_FORMAT, REPORT_VERSION};

pub const SUMMARY_HEADER: [&str; 9] = [
    "node_id",
    "trials",
    "success_rate",
    "stderr",
    "mean_time",
    "entropy_bits",
    "flow_cv",
    "utilization",
    "saturated",
];

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(format!("{}: {e}", path.display()))
}

fn write_csv<R>(path: &Path, header: &[&str], rows: R) -> Result<(), CliError>
where
    R: IntoIterator<Item = Vec<String>>,
{
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(|e| io_err(path, e))?;
    w.write_record(header).map_err(|e| io_err(path, e))?;
    for row in rows {
        w.write_record(&row).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

fn histogram_rows(h: &Histogram) -> impl Iterator<Item = Vec<String>> + '_ {
    h.bins().map(|(lo, hi, c)| vec![lo.to_string(), hi.to_string(), c.to_string()])
}

pub fn summary_line(n: &NodeSummary) -> String {
    format!(
        "{}: success {:.4} ± {:.4}, mean time {:.4}, entropy {:.4} bits, utilization {:.4}{}",
        n.id,
        n.success_rate,
        n.stderr,
        n.mean_time,
        n.entropy_bits,
        n.utilization,
        if n.saturated { " SATURATED" } else { "" }
    )
}

/// `summary.csv`, `dwell_<node>.csv`, `observations_<node>.csv` and
/// `report.json` under `dir`.
pub fn write_simulation(dir: &Path, report: &SimReport) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let mut written = Vec::new();

    let summary = dir.join("summary.csv");
    write_csv(
        &summary,
        &SUMMARY_HEADER,
        report.nodes.iter().map(|n| {
            vec![
                n.id.clone(),
                report.trials.to_string(),
                n.success_rate.to_string(),
                n.stderr.to_string(),
                n.mean_time.to_string(),
                n.entropy_bits.to_string(),
                n.flow_cv.map_or_else(|| "NA".to_string(), |v| v.to_string()),
                n.utilization.to_string(),
                n.saturated.to_string(),
            ]
        }),
    )?;
    written.push(summary);

    for n in &report.nodes {
        let hist = crate::simulator::dwelling_time_distribution(report, &n.id)
            .map_err(|e| CliError::Runtime(format!("{}: {e}", n.id)))?;
        let path = dir.join(format!("dwell_{}.csv", n.id));
        write_csv(&path, &["bin_lo", "bin_hi", "count"], histogram_rows(&hist))?;
        written.push(path);

        let obs = report
            .observations(&n.id)
            .map_err(|e| CliError::Runtime(format!("{}: {e}", n.id)))?;
        let path = dir.join(format!("observations_{}.csv", n.id));
        write_observations(&path, &obs)?;
        written.push(path);
    }

    let json_path = dir.join("report.json");
    let json = serde_json::to_string(report).map_err(|e| CliError::Runtime(e.to_string()))?;
    fs::write(&json_path, json + "\n").map_err(|e| io_err(&json_path, e))?;
    written.push(json_path);
    Ok(written)
}

pub fn write_observations(path: &Path, obs: &ObservationSet) -> Result<(), CliError> {
    let mut header = vec!["info", "precision", "time"];
    if obs.experience().is_some() {
        header.push("experience");
    }
    header.extend(obs.covariates().iter().map(|(name, _)| name.as_str()));
    let rows = (0..obs.len()).map(|r| {
        let mut row = vec![
            obs.info()[r].to_string(),
            obs.precision()[r].to_string(),
            obs.time()[r].to_string(),
        ];
        if let Some(e) = obs.experience() {
            row.push(e[r].to_string());
        }
        row.extend(obs.covariates().iter().map(|(_, c)| c[r].to_string()));
        row
    });
    write_csv(path, &header, rows)
}

fn is_covariate(name: &str) -> bool {
    name.len() > 1 && name.starts_with('s') && name[1..].bytes().all(|b| b.is_ascii_digit())
}

/// Reads `info,precision,time[,experience][,s1..]`. Column diagnostics name
/// missing or unexpected columns.
pub fn read_observations(path: &Path) -> Result<ObservationSet, CliError> {
    let input = |msg: String| CliError::Input(format!("{}: {msg}", path.display()));
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| input(e.to_string()))?;
    let headers: Vec<String> = rdr
        .headers()
        .map_err(|e| input(e.to_string()))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let missing: Vec<&str> = ["info", "precision", "time"]
        .into_iter()
        .filter(|c| col(c).is_none())
        .collect();
    if !missing.is_empty() {
        return Err(input(format!(
            "missing column(s) {} (found: {})",
            missing.join(", "),
            headers.join(",")
        )));
    }
    let unexpected: Vec<&str> = headers
        .iter()
        .map(String::as_str)
        .filter(|h| !matches!(*h, "info" | "precision" | "time" | "experience") && !is_covariate(h))
        .collect();
    if !unexpected.is_empty() {
        return Err(input(format!(
            "unexpected column(s) {} (expected info,precision,time[,experience][,s1..])",
            unexpected.join(", ")
        )));
    }
    let covariate_cols: Vec<(String, usize)> = headers
        .iter()
        .enumerate()
        .filter(|(_, h)| is_covariate(h))
        .map(|(k, h)| (h.clone(), k))
        .collect();

    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); headers.len()];
    for (r, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| input(e.to_string()))?;
        for (k, field) in rec.iter().enumerate() {
            let v: f64 = field.trim().parse().map_err(|_| {
                input(format!("row {}: column `{}` has non-numeric value `{field}`", r + 1, headers[k]))
            })?;
            columns[k].push(v);
        }
    }
    let take = |k: usize, columns: &mut Vec<Vec<f64>>| std::mem::take(&mut columns[k]);
    let info = take(col("info").expect("checked"), &mut columns);
    let precision = take(col("precision").expect("checked"), &mut columns);
    let time = take(col("time").expect("checked"), &mut columns);
    let experience = col("experience").map(|k| take(k, &mut columns));
    let covariates = covariate_cols
        .into_iter()
        .map(|(name, k)| (name, take(k, &mut columns)))
        .collect();
    ObservationSet::new(info, precision, time, experience, covariates).map_err(|e| input(e.to_string()))
}

/// Reads a `report.json`, refusing foreign or truncated files.
pub fn read_report(path: &Path) -> Result<SimReport, CliError> {
    let input = |msg: String| CliError::Input(format!("{}: {msg}", path.display()));
    let text = fs::read_to_string(path).map_err(|e| input(e.to_string()))?;
    let report: SimReport = serde_json::from_str(&text).map_err(|e| input(format!("not a simulation report ({e})")))?;
    if report.format != REPORT_FORMAT || report.version != REPORT_VERSION {
        return Err(input(format!(
            "unsupported report format `{}` version {}",
            report.format, report.version
        )));
    }
    if report.trace.iter().any(|t| t.nodes.len() != report.nodes.len()) {
        return Err(input("trace rows do not match the node list".into()));
    }
    Ok(report)
}

/// Histogram, entropy and (for learning-mode runs) learning-curve tables.
pub fn write_report_tables(dir: &Path, report: &SimReport) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let mut written = Vec::new();
    for (k, n) in report.nodes.iter().enumerate() {
        let hist = crate::simulator::dwelling_time_distribution(report, &n.id)
            .map_err(|e| CliError::Runtime(format!("{}: {e}", n.id)))?;
        let path = dir.join(format!("dwell_{}.csv", n.id));
        write_csv(&path, &["bin_lo", "bin_hi", "count"], histogram_rows(&hist))?;
        written.push(path);

        let mut rows = Vec::with_capacity(report.trace.len());
        for t in &report.trace {
            let p = t.nodes[k].precision_prob;
            let h = binary_entropy(p).map_err(|e| CliError::Input(format!("{}: {e}", n.id)))?;
            rows.push(vec![t.trial_index.to_string(), p.to_string(), h.to_string()]);
        }
        let path = dir.join(format!("entropy_{}.csv", n.id));
        write_csv(&path, &["trial", "precision_prob", "entropy_bits"], rows)?;
        written.push(path);

        if !report.reset_experience {
            let rows = report.trace.iter().map(|t| {
                let r = &t.nodes[k];
                vec![
                    t.trial_index.to_string(),
                    r.experience.to_string(),
                    r.precision_prob.to_string(),
                    u8::from(r.outcome.precision_hit).to_string(),
                ]
            });
            let path = dir.join(format!("learning_{}.csv", n.id));
            write_csv(&path, &["trial", "experience", "precision_prob", "hit"], rows)?;
            written.push(path);
        }
    }
    Ok(written)
}
