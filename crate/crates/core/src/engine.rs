//! In-process simulation of round-structured MapReduce execution.
//!
//! A round hands one payload to each reducer, applies a pure reduce
//! function to every payload independently, and records how many items
//! (points, coreset entries, broadcast values) each reducer held. Memory is
//! counted in items, not bytes.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::exec::Exec;
use crate::metric::IndexSubset;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PartitionPolicy {
    /// Point `i` goes to subset `i mod L`.
    #[default]
    RoundRobin,
    /// A seeded shuffle followed by round-robin dealing.
    Shuffled { seed: u64 },
}

/// A balanced assignment of points to `L` subsets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    subsets: usize,
    assignment: Vec<usize>,
}

impl Partition {
    pub fn new(n: usize, subsets: usize, policy: PartitionPolicy) -> Result<Self> {
        if subsets == 0 || subsets > n {
            return Err(invalid("L", format!("must lie in 1..={n}, got {subsets}")));
        }
        let mut order: Vec<usize> = (0..n).collect();
        if let PartitionPolicy::Shuffled { seed } = policy {
            order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        }
        let mut assignment = vec![0; n];
        for (slot, &p) in order.iter().enumerate() {
            assignment[p] = slot % subsets;
        }
        Ok(Self {
            subsets,
            assignment,
        })
    }

    pub fn num_subsets(&self) -> usize {
        self.subsets
    }

    pub fn subset_of(&self, p: usize) -> usize {
        self.assignment[p]
    }

    /// Members of each subset in ascending point order.
    pub fn subsets(&self) -> Vec<IndexSubset> {
        let mut parts = vec![Vec::new(); self.subsets];
        for (p, &s) in self.assignment.iter().enumerate() {
            parts[s].push(p);
        }
        parts.into_iter().map(IndexSubset::from_unsorted).collect()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.subsets];
        for &s in &self.assignment {
            sizes[s] += 1;
        }
        sizes
    }
}

/// Item counts for one reducer invocation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReducerLoad {
    pub input_items: usize,
    pub output_items: usize,
    pub peak_items: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundTrace {
    pub round: usize,
    pub per_reducer: Vec<ReducerLoad>,
    pub max_local: usize,
}

impl RoundTrace {
    pub fn from_loads(round: usize, per_reducer: Vec<ReducerLoad>) -> Self {
        let max_local = per_reducer.iter().map(|l| l.peak_items).max().unwrap_or(0);
        Self {
            round,
            per_reducer,
            max_local,
        }
    }
}

/// Number of items a value occupies in reducer memory.
pub trait Items {
    fn items(&self) -> usize;
}

impl Items for IndexSubset {
    fn items(&self) -> usize {
        self.len()
    }
}

impl<T> Items for Vec<T> {
    fn items(&self) -> usize {
        self.len()
    }
}

/// What a reducer returns: its output and the items it held in addition
/// to its input while running (scratch structures and the output itself).
#[derive(Debug, Clone)]
pub struct Reduced<O> {
    pub output: O,
    pub working_items: usize,
}

impl<O> Reduced<O> {
    pub fn new(output: O, working_items: usize) -> Self {
        Self {
            output,
            working_items,
        }
    }
}

/// Runs one round: `reducer(i, &inputs[i])` for every `i`, possibly in
/// parallel. Outputs come back in reducer order regardless of strategy.
/// A failing reducer aborts the round with its id attached.
pub fn run_round<I, O, F>(
    round: usize,
    inputs: &[I],
    exec: Exec,
    reducer: F,
) -> Result<(Vec<O>, RoundTrace)>
where
    I: Items + Sync,
    O: Items + Send,
    F: Fn(usize, &I) -> Result<Reduced<O>> + Sync + Send,
{
    let indexed: Vec<(usize, &I)> = inputs.iter().enumerate().collect();
    let results = exec.map(&indexed, |&(i, input)| reducer(i, input));
    let mut outputs = Vec::with_capacity(inputs.len());
    let mut loads = Vec::with_capacity(inputs.len());
    for ((i, input), result) in indexed.into_iter().zip(results) {
        let reduced = result.map_err(|e| Error::Reducer {
            round,
            reducer: i,
            inner: Box::new(e),
        })?;
        let input_items = input.items();
        let output_items = reduced.output.items();
        let peak_items = (input_items + reduced.working_items).max(output_items);
        loads.push(ReducerLoad {
            input_items,
            output_items,
            peak_items,
        });
        outputs.push(reduced.output);
    }
    Ok((outputs, RoundTrace::from_loads(round, loads)))
}

/// Which round-2 construction the number of reducers is tuned for.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    #[default]
    Basic,
    Improved,
}

/// Memory-balancing number of reducers: `(n/(ρk+τz))^{1/3}` for the basic
/// construction and `(n/(ρk+τz))^{1/2}` for the improved one, floored and
/// at least 1.
pub fn suggest_l(n: usize, k: usize, z: usize, rho: f64, tau: f64, variant: Variant) -> usize {
    let denom = rho * k as f64 + tau * z as f64;
    if denom.is_nan() || denom <= 0.0 || n as f64 <= denom {
        return 1;
    }
    let ratio = (n as f64 / denom).ceil();
    let root = match variant {
        Variant::Basic => ratio.cbrt(),
        Variant::Improved => ratio.sqrt(),
    };
    ((root + 1e-9).floor() as usize).max(1)
}
