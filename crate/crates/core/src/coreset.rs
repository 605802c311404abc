//! Two-round distributed coreset construction and the three-round solver
//! built on top of it.
//!
//! Round 1 splits the input into `L` balanced subsets. Each reducer solves
//! k-means without outliers with `k′` centers on its subset, derives the
//! radius `R_i = √(cost(P_i,S_i)/|P_i|)`, and covers `P_i` around `S_i`,
//! producing a weighted set `C_i`.
//!
//! Round 2 broadcasts every `(|P_j|, R_j, C_j)`. Each reducer computes the
//! global radius `R = √(Σ_j |P_j|·R_j²/|P|)` and covers its subset again,
//! around `C = ∪ C_j` in the basic variant, or around a compressed
//! `C′ ⊆ C` in the improved variant. `C′` comes from a weighted k-means
//! solution `S_C` on `(C, w^C)` followed by a weighted cover of `C`.
//!
//! The third round gathers the union `T` of the round-2 covers in a single
//! reducer and runs a weighted k-means-with-outliers solver on it.

use serde::{Deserialize, Serialize};

use crate::cover::{cover_with_balls, cover_with_balls_weighted, CoverOptions, ScanPolicy};
use crate::engine::{run_round, Items, Partition, PartitionPolicy, Reduced, RoundTrace};
use crate::error::{invalid, Error, Result};
use crate::exec::Exec;
use crate::metric::{cost_on, cost_out, IndexSubset, PointSet, Proxy, ProxySet, WeightFn};
use crate::solvers::{
    brute_force_opt, brute_force_solution, kmeans_out_weighted, ls_outlier_weighted,
    seq_kmeans_weighted, EnumBudget, LocalSearchConfig, OutlierSolution,
};

pub use crate::engine::{suggest_l, Variant};

/// Largest `γ` for which the basic construction's guarantees hold: `√(3/8) − 1/2`.
pub fn basic_gamma_limit() -> f64 {
    (3.0f64 / 8.0).sqrt() - 0.5
}

/// Largest `γ` for which the improved construction's guarantees hold: `(√3 − √2)/6`.
pub fn improved_gamma_limit() -> f64 {
    (3.0f64.sqrt() - 2.0f64.sqrt()) / 6.0
}

/// The k-means (no outliers) subroutine used inside the rounds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum SeqSolver {
    /// D²-sampling plus single-swap refinement.
    #[default]
    LocalSearch,
    /// Exhaustive search; only for instances within the budget.
    Exact { budget: EnumBudget },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Reducers {
    /// `max(1, min(suggest_l, ⌊n/k′⌋))`.
    #[default]
    Auto,
    Fixed(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoresetConfig {
    pub k: usize,
    pub z: usize,
    pub gamma: f64,
    /// Assumed approximation ratio of the k-means subroutine.
    pub beta: f64,
    /// Center inflation of the final solver.
    pub rho: f64,
    /// Outlier inflation of the final solver.
    pub tau: f64,
    pub reducers: Reducers,
    pub variant: Variant,
    pub seed: u64,
    pub seq_solver: SeqSolver,
    pub partition: PartitionPolicy,
    pub scan: ScanPolicy,
    /// Drop the intermediate weighted sets from the output.
    pub slim: bool,
    #[serde(skip)]
    pub exec: Exec,
}

impl CoresetConfig {
    pub fn new(k: usize, z: usize, gamma: f64) -> Self {
        Self {
            k,
            z,
            gamma,
            beta: 16.0,
            rho: 1.0,
            tau: 1.0,
            reducers: Reducers::Auto,
            variant: Variant::Basic,
            seed: 0,
            seq_solver: SeqSolver::LocalSearch,
            partition: PartitionPolicy::RoundRobin,
            scan: ScanPolicy::Ascending,
            slim: false,
            exec: Exec::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(invalid("k", "must be at least 1"));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(invalid("gamma", format!("must lie in (0,1), got {}", self.gamma)));
        }
        if !(self.beta >= 1.0 && self.beta.is_finite()) {
            return Err(invalid("beta", format!("must be at least 1, got {}", self.beta)));
        }
        if !(self.rho >= 1.0 && self.rho.is_finite()) {
            return Err(invalid("rho", format!("must be at least 1, got {}", self.rho)));
        }
        if !(self.tau >= 1.0 && self.tau.is_finite()) {
            return Err(invalid("tau", format!("must be at least 1, got {}", self.tau)));
        }
        if self.reducers == Reducers::Fixed(0) {
            return Err(invalid("L", "must be at least 1"));
        }
        Ok(())
    }

    /// Whether `γ` lies in the range where the variant's quality
    /// guarantees are proven.
    pub fn within_guarantee_range(&self) -> bool {
        let limit = match self.variant {
            Variant::Basic => basic_gamma_limit(),
            Variant::Improved => improved_gamma_limit(),
        };
        self.gamma > 0.0 && self.gamma <= limit
    }

    /// `k′ = ⌈ρk⌉ + ⌈τz⌉`.
    pub fn k_prime(&self) -> usize {
        ceil_tolerant(self.rho * self.k as f64) + ceil_tolerant(self.tau * self.z as f64)
    }

    /// `⌈τz⌉`, the outlier count the final solution is evaluated with.
    pub fn inflated_z(&self) -> usize {
        ceil_tolerant(self.tau * self.z as f64)
    }

    /// Cover precision `δ = γ/√(2β)`.
    pub fn delta(&self) -> f64 {
        self.gamma / (2.0 * self.beta).sqrt()
    }

    pub fn resolve_reducers(&self, n: usize) -> usize {
        match self.reducers {
            Reducers::Fixed(l) => l,
            Reducers::Auto => {
                let suggested = suggest_l(n, self.k, self.z, self.rho, self.tau, self.variant);
                suggested.min(n / self.k_prime().max(1)).max(1)
            }
        }
    }

    fn cover_options(&self) -> CoverOptions {
        CoverOptions {
            scan: self.scan,
            exec: self.exec,
        }
    }

    fn kmeans(&self, ps: &PointSet, points: &IndexSubset, w: &WeightFn, stream: u64) -> Result<IndexSubset> {
        let k = self.k_prime().min(points.len());
        match self.seq_solver {
            SeqSolver::LocalSearch => {
                seq_kmeans_weighted(ps, points, w, k, mix_seed(self.seed, stream), self.exec)
            }
            SeqSolver::Exact { budget } => {
                brute_force_opt(ps, points, w, k, 0, budget, self.exec).map(|(s, _)| s)
            }
        }
    }
}

fn ceil_tolerant(x: f64) -> usize {
    (x - 1e-9).ceil().max(0.0) as usize
}

/// Independent per-stream seeds from one user seed (SplitMix64 finalizer).
fn mix_seed(seed: u64, stream: u64) -> u64 {
    let mut x = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

const SHARED_STREAM: u64 = u64::MAX;

/// What a round-1 reducer emits for its subset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetSummary {
    /// `S_i`.
    pub centers: IndexSubset,
    /// `R_i`.
    pub radius: f64,
    /// `(C_i, w^{C_i})` and the proxy map `P_i → C_i`.
    pub cover: ProxySet,
    /// `|P_i|`.
    pub size: usize,
}

impl Items for SubsetSummary {
    fn items(&self) -> usize {
        // C_i plus the (|P_i|, R_i) pair
        self.cover.len() + 1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Round1Output {
    pub partition: Partition,
    pub subsets: Vec<SubsetSummary>,
    pub trace: RoundTrace,
}

impl Round1Output {
    /// `R = √(Σ_j |P_j|·R_j² / |P|)`.
    pub fn global_radius(&self) -> f64 {
        global_radius(self.subsets.iter().map(|s| (s.size, s.radius)))
    }

    /// `(C, w^C)` with the proxy map `P → C`.
    pub fn union(&self) -> ProxySet {
        let mut members = Vec::new();
        let mut weights = WeightFn::new();
        let mut proxy = Vec::new();
        for s in &self.subsets {
            members.extend(s.cover.members.iter());
            for (p, w) in s.cover.weights.iter() {
                weights.set(p, w);
            }
            proxy.extend(s.cover.proxy.iter());
        }
        ProxySet {
            members: IndexSubset::from_unsorted(members),
            weights,
            proxy: Proxy::from_pairs(proxy),
        }
    }
}

pub fn global_radius(parts: impl IntoIterator<Item = (usize, f64)>) -> f64 {
    let (mut num, mut total) = (0.0, 0usize);
    for (size, r) in parts {
        num += size as f64 * r * r;
        total += size;
    }
    if total == 0 {
        0.0
    } else {
        (num / total as f64).sqrt()
    }
}

/// Output of the two coreset rounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoresetOutput {
    /// `(T, w^T)` with the proxy map `P → T`.
    pub coreset: ProxySet,
    /// Global radius `R`.
    pub radius: f64,
    pub k_prime: usize,
    pub reducers: usize,
    pub variant: Variant,
    pub subset_radii: Vec<f64>,
    pub union_size: usize,
    /// `(C, w^C, π^C)`; absent in slim mode.
    pub union: Option<ProxySet>,
    pub compressed_size: Option<usize>,
    /// `(C′, w^{C′})` with the composite proxy `P → C → C′`; improved
    /// variant only, absent in slim mode.
    pub compressed: Option<ProxySet>,
    pub traces: Vec<RoundTrace>,
}

/// Round 1: per-subset k-means with `k′` centers, radius, and cover.
pub fn round1(ps: &PointSet, partition: &Partition, cfg: &CoresetConfig) -> Result<Round1Output> {
    let k_prime = cfg.k_prime();
    let delta = cfg.delta();
    let subsets = partition.subsets();
    let (summaries, trace) = run_round(1, &subsets, cfg.exec, |i, part: &IndexSubset| {
        if part.len() < k_prime {
            return Err(Error::SubsetTooSmall {
                subset: i,
                size: part.len(),
                k_prime,
            });
        }
        let unit = WeightFn::unit(part.iter());
        let centers = cfg.kmeans(ps, part, &unit, i as u64)?;
        let radius = (cost_on(ps, part.as_slice(), centers.as_slice()) / part.len() as f64).sqrt();
        let cover = cover_with_balls(ps, part, &centers, delta, radius, cfg.cover_options())?;
        let working = centers.len() + cover.len() + 1;
        Ok(Reduced::new(
            SubsetSummary {
                centers,
                radius,
                cover,
                size: part.len(),
            },
            working,
        ))
    })?;
    Ok(Round1Output {
        partition: partition.clone(),
        subsets: summaries,
        trace,
    })
}

/// A round-2 reducer's input: its subset plus everything broadcast to it.
struct Round2Input {
    part: IndexSubset,
    broadcast_items: usize,
}

impl Items for Round2Input {
    fn items(&self) -> usize {
        self.part.len() + self.broadcast_items
    }
}

fn round2_inputs(r1: &Round1Output, union_size: usize) -> Vec<Round2Input> {
    // every reducer receives all triplets (|P_j|, R_j, C_j)
    let broadcast_items = union_size + r1.subsets.len();
    r1.partition
        .subsets()
        .into_iter()
        .map(|part| Round2Input {
            part,
            broadcast_items,
        })
        .collect()
}

fn assemble(parts: Vec<ProxySet>) -> ProxySet {
    let mut members = Vec::new();
    let mut weights = WeightFn::new();
    let mut proxy = Vec::new();
    for t in parts {
        members.extend(t.members.iter());
        for (p, w) in t.weights.iter() {
            weights.set(p, w);
        }
        proxy.extend(t.proxy.iter());
    }
    ProxySet {
        members: IndexSubset::from_unsorted(members),
        weights,
        proxy: Proxy::from_pairs(proxy),
    }
}

/// Round 2, basic variant: cover each subset around `C = ∪ C_j`.
pub fn round2_basic(ps: &PointSet, r1: &Round1Output, cfg: &CoresetConfig) -> Result<CoresetOutput> {
    let union = r1.union();
    let radius = r1.global_radius();
    let delta = cfg.delta();
    let inputs = round2_inputs(r1, union.len());
    let (parts, trace) = run_round(2, &inputs, cfg.exec, |_, input: &Round2Input| {
        let t = cover_with_balls(ps, &input.part, &union.members, delta, radius, cfg.cover_options())?;
        let working = t.len();
        Ok(Reduced::new(TPart(t), working))
    })?;
    Ok(finish(r1, cfg, radius, union, None, parts, trace))
}

/// `(S_C, C′)`: the compressed center set all improved-variant reducers
/// derive identically from the broadcast `(C, w^C)`.
pub fn compress_union(
    ps: &PointSet,
    union: &ProxySet,
    radius: f64,
    cfg: &CoresetConfig,
) -> Result<(IndexSubset, ProxySet)> {
    let centers = cfg.kmeans(ps, &union.members, &union.weights, SHARED_STREAM)?;
    let compressed = cover_with_balls_weighted(
        ps,
        &union.members,
        &union.weights,
        &centers,
        cfg.delta(),
        radius,
        cfg.cover_options(),
    )?;
    Ok((centers, compressed))
}

/// Round 2, improved variant: compress `C` to `C′`, then cover each subset
/// around `C′`. The compression is identical across reducers, so it is
/// computed once and charged to every reducer's memory.
pub fn round2_improved(
    ps: &PointSet,
    r1: &Round1Output,
    cfg: &CoresetConfig,
) -> Result<CoresetOutput> {
    let union = r1.union();
    let radius = r1.global_radius();
    let delta = cfg.delta();
    let (s_c, compressed) = compress_union(ps, &union, radius, cfg)?;
    let shared_items = s_c.len() + compressed.len();
    let inputs = round2_inputs(r1, union.len());
    let (parts, trace) = run_round(2, &inputs, cfg.exec, |_, input: &Round2Input| {
        let t = cover_with_balls(
            ps,
            &input.part,
            &compressed.members,
            delta,
            radius,
            cfg.cover_options(),
        )?;
        let working = shared_items + t.len();
        Ok(Reduced::new(TPart(t), working))
    })?;
    // P → C → C′
    let compressed = ProxySet {
        proxy: union.proxy.then(&compressed.proxy),
        ..compressed
    };
    Ok(finish(r1, cfg, radius, union, Some(compressed), parts, trace))
}

struct TPart(ProxySet);

impl Items for TPart {
    fn items(&self) -> usize {
        self.0.len()
    }
}

fn finish(
    r1: &Round1Output,
    cfg: &CoresetConfig,
    radius: f64,
    union: ProxySet,
    compressed: Option<ProxySet>,
    parts: Vec<TPart>,
    trace: RoundTrace,
) -> CoresetOutput {
    let coreset = assemble(parts.into_iter().map(|t| t.0).collect());
    CoresetOutput {
        coreset,
        radius,
        k_prime: cfg.k_prime(),
        reducers: r1.subsets.len(),
        variant: cfg.variant,
        subset_radii: r1.subsets.iter().map(|s| s.radius).collect(),
        union_size: union.len(),
        union: (!cfg.slim).then_some(union),
        compressed_size: compressed.as_ref().map(ProxySet::len),
        compressed: compressed.filter(|_| !cfg.slim),
        traces: vec![r1.trace.clone(), trace],
    }
}

/// The two coreset rounds end to end.
pub fn mr_coreset(ps: &PointSet, cfg: &CoresetConfig) -> Result<CoresetOutput> {
    cfg.validate()?;
    let reducers = cfg.resolve_reducers(ps.len());
    let partition = Partition::new(ps.len(), reducers, cfg.partition)?;
    let r1 = round1(ps, &partition, cfg)?;
    match cfg.variant {
        Variant::Basic => round2_basic(ps, &r1, cfg),
        Variant::Improved => round2_improved(ps, &r1, cfg),
    }
}

/// Weighted k-means-with-outliers solver run on the gathered coreset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum FinalSolver {
    LsOutlier(LocalSearchConfig),
    KmeansOut(LocalSearchConfig),
    BruteForce { budget: EnumBudget },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub coreset: CoresetOutput,
    /// The final solver's result on `(T, w^T)`.
    pub solution: OutlierSolution,
    /// `cost_out(P, S, ⌈τz⌉)` on the full input.
    pub full_cost: f64,
    pub full_outliers: usize,
    /// Traces of all three rounds.
    pub traces: Vec<RoundTrace>,
}

impl Items for OutlierSolution {
    fn items(&self) -> usize {
        self.centers.len()
    }
}

/// The three-round pipeline: coreset rounds, then `final_solver` on the
/// coreset in a single reducer.
pub fn solve(ps: &PointSet, cfg: &CoresetConfig, final_solver: &FinalSolver) -> Result<Solution> {
    let coreset = mr_coreset(ps, cfg)?;
    finish_solve(ps, cfg, coreset, final_solver)
}

/// Round 3 alone, on a coreset built earlier with the same `cfg`.
pub fn finish_solve(
    ps: &PointSet,
    cfg: &CoresetConfig,
    coreset: CoresetOutput,
    final_solver: &FinalSolver,
) -> Result<Solution> {
    let t = &coreset.coreset;
    let gathered = vec![t.members.clone()];
    let (mut outputs, trace) = run_round(3, &gathered, Exec::Sequential, |_, members: &IndexSubset| {
        let z = cfg.z as u64;
        let solution = match final_solver {
            FinalSolver::LsOutlier(ls) => {
                ls_outlier_weighted(ps, members, &t.weights, cfg.k, z, &with_exec(ls, cfg.exec))?
            }
            FinalSolver::KmeansOut(ls) => {
                kmeans_out_weighted(ps, members, &t.weights, cfg.k, z, &with_exec(ls, cfg.exec))?
            }
            FinalSolver::BruteForce { budget } => {
                brute_force_solution(ps, members, &t.weights, cfg.k, z, *budget, cfg.exec)?
            }
        };
        let working = solution.centers.len();
        Ok(Reduced::new(solution, working))
    })?;
    let solution = outputs.pop().expect("one reducer");
    let full_outliers = cfg.inflated_z().min(ps.len());
    let full_cost = cost_out(ps, &solution.centers, full_outliers)?;
    let mut traces = coreset.traces.clone();
    traces.push(trace);
    Ok(Solution {
        coreset,
        solution,
        full_cost,
        full_outliers,
        traces,
    })
}

fn with_exec(ls: &LocalSearchConfig, exec: Exec) -> LocalSearchConfig {
    LocalSearchConfig { exec, ..*ls }
}
