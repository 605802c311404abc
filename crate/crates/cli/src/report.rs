use std::fs::OpenOptions;
use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use robust_coreset::coreset::Solution;
use robust_coreset::engine::RoundTrace;
use robust_coreset::verify::{CentroidAudit, CoresetAudit, ProxyAudit};
use robust_coreset::{CoresetConfig, Exec, FinalSolver};
use serde::Serialize;

use crate::args::Source;

/// Bumped whenever a field is renamed or removed.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub command: &'static str,
    pub config: ConfigEcho,
    pub seed: u64,
    pub n: usize,
    /// Whether gamma lies where the size and quality bounds are proven.
    pub within_guarantee_range: bool,
    pub result: RunResult,
    pub rounds: Vec<RoundTrace>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub planted: Option<PlantedRecovery>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub audits: Option<Audits>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timings: Option<Timings>,
}

#[derive(Debug, Serialize)]
pub struct ConfigEcho {
    pub source: Source,
    pub coreset: CoresetConfig,
    pub final_solver: FinalSolver,
    pub exec: Exec,
    pub parallel_available: bool,
}

#[derive(Debug, Serialize)]
pub struct RunResult {
    pub k_prime: usize,
    pub reducers: usize,
    pub radius: f64,
    pub subset_radii: Vec<f64>,
    /// |T|
    pub coreset_size: usize,
    pub size_ratio: f64,
    /// |C|
    pub union_size: usize,
    /// |C′|, improved variant only.
    pub compressed_size: Option<usize>,
    /// Final solver objective on the weighted coreset.
    pub coreset_objective: f64,
    /// Cost on the full input with `full_outliers` points discarded.
    pub full_cost: f64,
    pub full_outliers: usize,
    pub centers: Vec<usize>,
    pub iterations: usize,
    pub converged: bool,
    pub center_budget: usize,
    pub outlier_weight: u64,
}

impl RunResult {
    pub fn new(sol: &Solution, n: usize) -> Self {
        let c = &sol.coreset;
        RunResult {
            k_prime: c.k_prime,
            reducers: c.reducers,
            radius: c.radius,
            subset_radii: c.subset_radii.clone(),
            coreset_size: c.coreset.len(),
            size_ratio: c.coreset.len() as f64 / n as f64,
            union_size: c.union_size,
            compressed_size: c.compressed_size,
            coreset_objective: sol.solution.value,
            full_cost: sol.full_cost,
            full_outliers: sol.full_outliers,
            centers: sol.solution.centers.as_slice().to_vec(),
            iterations: sol.solution.iterations,
            converged: sol.solution.converged,
            center_budget: sol.solution.center_budget,
            outlier_weight: sol.solution.outlier_weight,
        }
    }
}

/// How many planted outliers the solution discards on the full input.
#[derive(Debug, Serialize)]
pub struct PlantedRecovery {
    pub planted: usize,
    pub discarded: usize,
    pub recall: f64,
}

#[derive(Debug, Default, Serialize)]
pub struct Audits {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub approx_coreset: Option<CoresetAudit>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub centroid_set: Option<CentroidAudit>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub proxy_bound: Option<ProxyAudit>,
    pub passed: bool,
}

#[derive(Debug, Serialize)]
pub struct Timings {
    pub coreset_secs: f64,
    pub final_secs: f64,
    pub audit_secs: f64,
    pub total_secs: f64,
}

/// One CSV line, shared by `run --csv` and `sweep`.
#[derive(Debug, Serialize)]
pub struct SummaryRow {
    pub n: usize,
    pub k: usize,
    pub z: usize,
    pub gamma: f64,
    pub variant: String,
    pub solver: String,
    pub reducers: usize,
    pub k_prime: usize,
    pub coreset_size: usize,
    pub size_ratio: f64,
    pub union_size: usize,
    pub compressed_size: Option<usize>,
    pub round1_peak: usize,
    pub round2_peak: usize,
    pub round3_peak: usize,
    pub coreset_objective: f64,
    pub full_cost: f64,
    pub coreset_secs: f64,
    pub final_secs: f64,
}

impl SummaryRow {
    pub fn new(report: &Report) -> Self {
        let cfg = &report.config.coreset;
        let r = &report.result;
        let peak = |i: usize| report.rounds.get(i).map_or(0, |t| t.max_local);
        let (coreset_secs, final_secs) = report
            .timings
            .as_ref()
            .map_or((0.0, 0.0), |t| (t.coreset_secs, t.final_secs));
        SummaryRow {
            n: report.n,
            k: cfg.k,
            z: cfg.z,
            gamma: cfg.gamma,
            variant: format!("{:?}", cfg.variant).to_lowercase(),
            solver: solver_name(&report.config.final_solver).to_string(),
            reducers: r.reducers,
            k_prime: r.k_prime,
            coreset_size: r.coreset_size,
            size_ratio: r.size_ratio,
            union_size: r.union_size,
            compressed_size: r.compressed_size,
            round1_peak: peak(0),
            round2_peak: peak(1),
            round3_peak: peak(2),
            coreset_objective: r.coreset_objective,
            full_cost: r.full_cost,
            coreset_secs,
            final_secs,
        }
    }
}

pub fn solver_name(s: &FinalSolver) -> &'static str {
    match s {
        FinalSolver::LsOutlier(_) => "ls-outlier",
        FinalSolver::KmeansOut(_) => "kmeans-out",
        FinalSolver::BruteForce { .. } => "brute",
    }
}

pub fn emit_json<T: Serialize>(value: &T, path: Option<&Path>) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    match path {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

/// Appends rows, writing the header only when the file is new or empty.
pub fn append_csv(path: &Path, rows: &[SummaryRow]) -> Result<()> {
    let fresh = std::fs::metadata(path).map_or(true, |m| m.len() == 0);
    let file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .with_context(|| format!("opening {}", path.display()))?;
    write_rows(csv::WriterBuilder::new().has_headers(fresh).from_writer(file), rows)
}

pub fn write_rows<W: Write>(mut w: csv::Writer<W>, rows: &[SummaryRow]) -> Result<()> {
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}
