use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use robust_coreset::coreset::{Reducers, SeqSolver};
use robust_coreset::cover::ScanPolicy;
use robust_coreset::datagen::GenSpec;
use robust_coreset::engine::PartitionPolicy;
use robust_coreset::solvers::{EnumBudget, LocalSearchConfig};
use robust_coreset::verify::AuditMode;
use robust_coreset::{CoresetConfig, Exec, FinalSolver, Variant};
use serde::Serialize;

#[derive(Parser, Debug)]
#[command(name = "robust-coreset", version, about = "Distributed coresets for k-means with outliers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Build a coreset, solve on it, and report the cost on the full input.
    Run(RunArgs),
    /// Like `run`, then audit the coreset; exits nonzero if an audit fails.
    Verify(VerifyArgs),
    /// Generate a planted instance.
    Gen(GenCommand),
    /// Run the pipeline on generated instances of increasing size.
    Sweep(SweepArgs),
}

#[derive(Args, Debug, Clone)]
pub struct InputArgs {
    /// Point file: one point per line, whitespace- or comma-separated.
    #[arg(long, group = "source")]
    pub input: Option<PathBuf>,
    /// Distance-matrix file: n, then n rows of n distances.
    #[arg(long, group = "source")]
    pub dmat: Option<PathBuf>,
    /// Generate the instance from the --gen-* parameters.
    #[arg(long, group = "source")]
    pub gen: bool,
    #[command(flatten)]
    pub spec: GenArgs,
}

#[derive(Args, Debug, Clone)]
pub struct GenArgs {
    #[arg(id = "gen-n", long = "gen-n", default_value_t = 1000)]
    pub n: usize,
    #[arg(id = "gen-dim", long = "gen-dim", default_value_t = 2)]
    pub dim: usize,
    /// Planted clusters.
    #[arg(id = "gen-k", long = "gen-k", default_value_t = 5)]
    pub k_true: usize,
    /// Per-coordinate standard deviation inside a cluster.
    #[arg(id = "gen-spread", long = "gen-spread", default_value_t = 1.0)]
    pub spread: f64,
    /// Minimum distance between planted centers.
    #[arg(id = "gen-sep", long = "gen-sep", default_value_t = 20.0)]
    pub sep: f64,
    /// Planted outliers.
    #[arg(id = "gen-z", long = "gen-z", default_value_t = 10)]
    pub z_true: usize,
    /// Minimum distance of an outlier from every center.
    #[arg(id = "gen-outlier-dist", long = "gen-outlier-dist", default_value_t = 200.0)]
    pub outlier_dist: f64,
    #[arg(id = "gen-seed", long = "gen-seed", default_value_t = 0)]
    pub seed: u64,
}

impl GenArgs {
    pub fn spec(&self, n: usize) -> GenSpec {
        GenSpec {
            n,
            dim: self.dim,
            k_true: self.k_true,
            spread: self.spread,
            sep: self.sep,
            z_true: self.z_true,
            outlier_dist: self.outlier_dist,
            seed: self.seed,
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum VariantArg {
    Basic,
    Improved,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverArg {
    LsOutlier,
    KmeansOut,
    Brute,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeqSolverArg {
    LocalSearch,
    Exact,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrderArg {
    Ordered,
    Shuffled,
}

#[derive(Args, Debug, Clone)]
pub struct PipelineArgs {
    #[arg(long)]
    pub k: usize,
    #[arg(long, default_value_t = 0)]
    pub z: usize,
    #[arg(long, default_value_t = 0.1)]
    pub gamma: f64,
    /// Assumed approximation ratio of the in-round k-means solver.
    #[arg(long, default_value_t = 16.0)]
    pub beta: f64,
    /// Center inflation allowed to the final solver.
    #[arg(long, default_value_t = 1.0)]
    pub rho: f64,
    /// Outlier inflation allowed to the final solver.
    #[arg(long, default_value_t = 1.0)]
    pub tau: f64,
    /// Number of reducers, or `auto`.
    #[arg(long = "L", default_value = "auto", value_parser = parse_reducers)]
    pub reducers: Reducers,
    #[arg(long, value_enum, default_value_t = VariantArg::Basic)]
    pub variant: VariantArg,
    #[arg(long, value_enum, default_value_t = SolverArg::LsOutlier)]
    pub solver: SolverArg,
    #[arg(long, default_value_t = 0.1)]
    pub epsilon: f64,
    #[arg(long = "rho-swap", default_value_t = 1)]
    pub rho_swap: usize,
    /// Cap on accepted local-search steps.
    #[arg(long = "max-iters")]
    pub max_iters: Option<usize>,
    /// k-means solver used inside the coreset rounds.
    #[arg(long = "seq-solver", value_enum, default_value_t = SeqSolverArg::LocalSearch)]
    pub seq_solver: SeqSolverArg,
    /// Point limit of every exhaustive search.
    #[arg(long = "brute-max-points", default_value_t = 25)]
    pub brute_max_points: usize,
    /// Center limit of every exhaustive search.
    #[arg(long = "brute-max-k", default_value_t = 3)]
    pub brute_max_k: usize,
    #[arg(long, value_enum, default_value_t = OrderArg::Ordered)]
    pub partition: OrderArg,
    /// Order in which covers pick ball centers.
    #[arg(long, value_enum, default_value_t = OrderArg::Ordered)]
    pub scan: OrderArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Run everything on one thread.
    #[arg(long)]
    pub sequential: bool,
    /// Leave the intermediate weighted sets out of the result.
    #[arg(long)]
    pub slim: bool,
}

fn parse_reducers(s: &str) -> Result<Reducers, String> {
    if s == "auto" {
        return Ok(Reducers::Auto);
    }
    match s.parse::<usize>() {
        Ok(l) if l >= 1 => Ok(Reducers::Fixed(l)),
        _ => Err(format!("expected `auto` or a positive integer, got {s:?}")),
    }
}

impl PipelineArgs {
    pub fn exec(&self) -> Exec {
        if self.sequential {
            Exec::Sequential
        } else {
            Exec::default()
        }
    }

    pub fn budget(&self) -> EnumBudget {
        EnumBudget {
            max_points: self.brute_max_points,
            max_k: self.brute_max_k,
        }
    }

    pub fn coreset_config(&self) -> CoresetConfig {
        let mut cfg = CoresetConfig::new(self.k, self.z, self.gamma);
        cfg.beta = self.beta;
        cfg.rho = self.rho;
        cfg.tau = self.tau;
        cfg.reducers = self.reducers;
        cfg.variant = match self.variant {
            VariantArg::Basic => Variant::Basic,
            VariantArg::Improved => Variant::Improved,
        };
        cfg.seed = self.seed;
        cfg.seq_solver = match self.seq_solver {
            SeqSolverArg::LocalSearch => SeqSolver::LocalSearch,
            SeqSolverArg::Exact => SeqSolver::Exact {
                budget: self.budget(),
            },
        };
        cfg.partition = match self.partition {
            OrderArg::Ordered => PartitionPolicy::RoundRobin,
            OrderArg::Shuffled => PartitionPolicy::Shuffled { seed: self.seed },
        };
        cfg.scan = match self.scan {
            OrderArg::Ordered => ScanPolicy::Ascending,
            OrderArg::Shuffled => ScanPolicy::Shuffled { seed: self.seed },
        };
        cfg.slim = self.slim;
        cfg.exec = self.exec();
        cfg
    }

    pub fn final_solver(&self) -> FinalSolver {
        let ls = LocalSearchConfig {
            epsilon: self.epsilon,
            rho_swap: self.rho_swap,
            max_iters: self.max_iters,
            seed: self.seed,
            exec: self.exec(),
        };
        match self.solver {
            SolverArg::LsOutlier => FinalSolver::LsOutlier(ls),
            SolverArg::KmeansOut => FinalSolver::KmeansOut(ls),
            SolverArg::Brute => FinalSolver::BruteForce {
                budget: self.budget(),
            },
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct OutputArgs {
    /// JSON report path; printed to stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write the coreset as `index weight` lines.
    #[arg(long = "coreset-out")]
    pub coreset_out: Option<PathBuf>,
    /// Append a one-row summary to this CSV file.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Omit wall-clock timings so reports of identical runs are identical.
    #[arg(long = "no-timings")]
    pub no_timings: bool,
}

#[derive(Args, Debug)]
pub struct RunArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AuditKind {
    ApproxCoreset,
    CentroidSet,
    ProxyBound,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum AuditModeArg {
    Exhaustive,
    Sampled,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Audits to run; all of them when absent.
    #[arg(long, value_enum, value_delimiter = ',')]
    pub audit: Vec<AuditKind>,
    #[arg(long = "audit-mode", value_enum, default_value_t = AuditModeArg::Exhaustive)]
    pub audit_mode: AuditModeArg,
    #[arg(long = "audit-trials", default_value_t = 100_000)]
    pub audit_trials: usize,
    #[arg(long = "audit-seed", default_value_t = 0)]
    pub audit_seed: u64,
}

impl VerifyArgs {
    pub fn mode(&self) -> AuditMode {
        match self.audit_mode {
            AuditModeArg::Exhaustive => AuditMode::Exhaustive,
            AuditModeArg::Sampled => AuditMode::Sampled {
                trials: self.audit_trials,
                seed: self.audit_seed,
            },
        }
    }

    pub fn audits(&self) -> Vec<AuditKind> {
        if self.audit.is_empty() {
            vec![AuditKind::ApproxCoreset, AuditKind::CentroidSet, AuditKind::ProxyBound]
        } else {
            self.audit.clone()
        }
    }
}

#[derive(Args, Debug)]
pub struct GenCommand {
    #[command(flatten)]
    pub spec: GenArgs,
    /// Point file to write.
    #[arg(long)]
    pub out: PathBuf,
    /// Ground-truth JSON; defaults to the point file with `.truth.json`.
    #[arg(long)]
    pub truth: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    /// Instance sizes, comma-separated.
    #[arg(long, value_delimiter = ',', default_value = "1000,2000,4000,8000")]
    pub sizes: Vec<usize>,
    #[command(flatten)]
    pub spec: GenArgs,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    /// CSV output; printed to stdout when absent.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

/// Where the instance comes from, echoed into reports.
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Source {
    Points { path: PathBuf },
    Matrix { path: PathBuf },
    Generated { spec: GenSpec },
}

impl InputArgs {
    pub fn source(&self) -> Result<Source> {
        match (&self.input, &self.dmat, self.gen) {
            (Some(path), None, false) => Ok(Source::Points { path: path.clone() }),
            (None, Some(path), false) => Ok(Source::Matrix { path: path.clone() }),
            (None, None, true) => Ok(Source::Generated {
                spec: self.spec.spec(self.spec.n),
            }),
            _ => bail!("exactly one of --input, --dmat or --gen is required"),
        }
    }
}

pub fn default_truth_path(out: &std::path::Path) -> Result<PathBuf> {
    let name = out
        .file_name()
        .context("output path has no file name")?
        .to_string_lossy()
        .into_owned();
    Ok(out.with_file_name(format!("{name}.truth.json")))
}
