//! Solver-versus-oracle comparison, for one instance or a seeded batch.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use sample_design::oracle::{subset_value, weak_duality_against};
use sample_design::problem::random_small_instance;
use sample_design::{exhaustive_best_subset, solve, OracleConfig, ProblemInstance, SolverConfig};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InstanceComparison {
    pub index: usize,
    pub n: usize,
    pub k: usize,
    pub p: usize,
    pub solver_subset: Vec<usize>,
    /// Objective of the solver's subset, scored by the oracle's evaluator.
    pub solver_value: f64,
    /// The solver's own evaluation of its subset, the value its gap refers to.
    pub solver_primal: f64,
    pub oracle_subset: Vec<usize>,
    pub oracle_value: f64,
    /// `(solver − oracle) / oracle`
    pub relative_excess: f64,
    /// The solver's subset attains the oracle optimum (ties included).
    pub subsets_match: bool,
    pub best_dual: f64,
    pub gap: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Largest per-iteration dual value seen on the trace.
    pub trace_max_dual: f64,
    /// `best_dual ≤ oracle_value` and every traced dual value as well.
    pub weak_duality_holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareSummary {
    pub count: usize,
    pub matches: usize,
    pub match_rate: f64,
    pub max_relative_excess: f64,
    pub weak_duality_violations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareReport {
    pub summary: CompareSummary,
    pub instances: Vec<InstanceComparison>,
}

pub fn compare_instance(
    index: usize,
    instance: &ProblemInstance,
    solver: &SolverConfig,
    oracle: &OracleConfig,
) -> Result<InstanceComparison, CliError> {
    let oracle_res = exhaustive_best_subset(instance, oracle)?;
    let res = solve(instance, solver)?;
    let trace_max_dual = res
        .trace
        .iter()
        .map(|r| r.dual_value)
        .fold(f64::NEG_INFINITY, f64::max);
    let solver_value = subset_value(instance, &res.selected).unwrap_or(f64::INFINITY);
    let holds = weak_duality_against(res.best_dual, oracle_res.best_value).holds
        && weak_duality_against(trace_max_dual, oracle_res.best_value).holds;
    Ok(InstanceComparison {
        index,
        n: instance.n,
        k: instance.k,
        p: instance.p,
        subsets_match: oracle_res.ties.contains(&res.selected),
        relative_excess: (solver_value - oracle_res.best_value) / oracle_res.best_value,
        solver_subset: res.selected,
        solver_value,
        solver_primal: res.primal_rounded,
        oracle_subset: oracle_res.best_subset,
        oracle_value: oracle_res.best_value,
        best_dual: res.best_dual,
        gap: res.gap,
        iterations: res.iterations,
        converged: res.converged,
        trace_max_dual,
        weak_duality_holds: holds,
    })
}

/// Instance `index` of the batch seeded by `seed`; each index draws from its
/// own ChaCha stream, so instances do not depend on evaluation order.
pub fn batch_instance(seed: u64, index: usize) -> Result<ProblemInstance, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    Ok(random_small_instance(&mut rng)?)
}

pub fn summarize(instances: Vec<InstanceComparison>) -> CompareReport {
    let count = instances.len();
    let matches = instances.iter().filter(|c| c.subsets_match).count();
    let max_relative_excess = instances
        .iter()
        .map(|c| c.relative_excess)
        .fold(0.0, f64::max);
    let weak_duality_violations = instances.iter().filter(|c| !c.weak_duality_holds).count();
    CompareReport {
        summary: CompareSummary {
            count,
            matches,
            match_rate: if count == 0 { 0.0 } else { matches as f64 / count as f64 },
            max_relative_excess,
            weak_duality_violations,
        },
        instances,
    }
}

/// Worker count from `SAMPLE_DESIGN_THREADS`, if set to a positive integer.
pub fn thread_cap() -> Option<usize> {
    std::env::var("SAMPLE_DESIGN_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
}

pub fn compare_batch(
    count: usize,
    seed: u64,
    solver: &SolverConfig,
    oracle: &OracleConfig,
) -> Result<CompareReport, CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = thread_cap() {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::Internal(format!("thread pool: {e}")))?;
    let results: Result<Vec<_>, CliError> = pool.install(|| {
        (0..count)
            .into_par_iter()
            .map(|i| compare_instance(i, &batch_instance(seed, i)?, solver, oracle))
            .collect()
    });
    Ok(summarize(results?))
}
