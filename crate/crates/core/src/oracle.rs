//! Ground truth at desk scale: exhaustive subset search plus primal
//! feasibility and weak-duality checks.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::SymMatrix;
use crate::problem::{ProblemInstance, SelectionWeights};
use crate::solver::{dual_value, lmi_blocks, DualState, SINGULAR_RCOND};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleConfig {
    /// Largest `C(N, K)` the search will attempt.
    pub cap: u128,
    /// Relative tolerance for reporting ties with the optimum.
    pub tie_tol: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self { cap: 2_000_000, tie_tol: 1e-9 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleResult {
    pub best_subset: Vec<usize>,
    pub best_value: f64,
    /// Number of subsets visited, `C(N, K)`.
    pub evaluated: u128,
    pub singular_skipped: u128,
    /// Subsets within `tie_tol` of the optimum, in lexicographic order.
    pub ties: Vec<Vec<usize>>,
}

pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul((n - i) as u128) / (i as u128 + 1);
    }
    acc
}

/// `Σ_p ψ_p [A_S⁻¹]_pp` via Cholesky, or `None` when `A_S` is singular.
pub fn subset_value(instance: &ProblemInstance, subset: &[usize]) -> Option<f64> {
    let p = instance.p;
    let mut a = DMatrix::<f64>::zeros(p, p);
    for &i in subset {
        a += instance.fims[i].as_matrix();
    }
    let chol = a.cholesky()?;
    let l = chol.l_dirty();
    let diag: Vec<f64> = (0..p).map(|i| l[(i, i)] * l[(i, i)]).collect();
    let max = diag.iter().cloned().fold(0.0, f64::max);
    let min = diag.iter().cloned().fold(f64::INFINITY, f64::min);
    // Pivot ratio as a cheap conditioning screen, matching the solver's
    // eigenvalue-ratio threshold.
    if !(max > 0.0 && min > SINGULAR_RCOND * max) {
        return None;
    }
    let inv = chol.inverse();
    Some(instance.psi.iter().enumerate().map(|(j, w)| w * inv[(j, j)]).sum())
}

/// Lexicographic successor of a `k`-combination of `0..n`.
fn next_combination(c: &mut [usize], n: usize) -> bool {
    let k = c.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if c[i] < n - k + i {
            c[i] += 1;
            for j in (i + 1)..k {
                c[j] = c[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Minimizes the CRLB objective over every size-`K` subset.
///
/// Subsets whose information matrix is singular are skipped. Among equal
/// values the lexicographically smallest subset wins.
pub fn exhaustive_best_subset(instance: &ProblemInstance, cfg: &OracleConfig) -> Result<OracleResult> {
    crate::problem::validate(instance).into_result()?;
    let (n, k) = (instance.n, instance.k);
    let count = binomial(n, k);
    if count > cfg.cap {
        return Err(Error::OracleCap { n, k, count, cap: cfg.cap });
    }
    let mut values: Vec<(Vec<usize>, f64)> = Vec::new();
    let mut best: Option<(Vec<usize>, f64)> = None;
    let mut evaluated = 0u128;
    let mut skipped = 0u128;
    let mut comb: Vec<usize> = (0..k).collect();
    loop {
        evaluated += 1;
        match subset_value(instance, &comb) {
            Some(v) => {
                if best.as_ref().is_none_or(|(_, b)| v < *b) {
                    best = Some((comb.clone(), v));
                }
                values.push((comb.clone(), v));
            }
            None => skipped += 1,
        }
        if !next_combination(&mut comb, n) {
            break;
        }
    }
    let (best_subset, best_value) = best.ok_or(Error::AllSubsetsSingular { k })?;
    let slack = cfg.tie_tol * best_value.abs();
    let ties = values
        .into_iter()
        .filter(|(_, v)| *v - best_value <= slack)
        .map(|(s, _)| s)
        .collect();
    Ok(OracleResult {
        best_subset,
        best_value,
        evaluated,
        singular_skipped: skipped,
        ties,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeasibilityReport {
    pub budget_ok: bool,
    pub bounds_ok: bool,
    /// Minimum eigenvalue of each LMI block.
    pub block_min_eigs: Vec<f64>,
    /// Blocks whose minimum eigenvalue is below `−eig_tol`.
    pub infeasible_blocks: Vec<usize>,
}

impl FeasibilityReport {
    pub fn is_feasible(&self) -> bool {
        self.budget_ok && self.bounds_ok && self.infeasible_blocks.is_empty()
    }
}

/// Checks `w ∈ W` and `[A(w) e_p; e_pᵀ μ_p] ⪰ 0` up to `eig_tol · (1 + ‖block‖_F)`.
pub fn check_primal_feasibility(
    instance: &ProblemInstance,
    w: &SelectionWeights,
    mu: &[f64],
    eig_tol: f64,
) -> Result<FeasibilityReport> {
    if mu.len() != instance.p {
        return Err(Error::DimensionMismatch { expected: instance.p, found: mu.len() });
    }
    let k = instance.k as f64;
    let budget_ok = (w.total() - k).abs() <= 1e-9 * k;
    let bounds_ok = w.as_slice().iter().all(|v| (0.0..=1.0).contains(v));
    let a = crate::solver::information_matrix(instance, w)?;
    let mut block_min_eigs = Vec::with_capacity(mu.len());
    let mut infeasible_blocks = Vec::new();
    for (p, block) in lmi_blocks(&a, mu).iter().enumerate() {
        let min = block.min_eigenvalue()?;
        if min < -block.eig_tol(eig_tol) {
            infeasible_blocks.push(p);
        }
        block_min_eigs.push(min);
    }
    Ok(FeasibilityReport {
        budget_ok,
        bounds_ok,
        block_min_eigs,
        infeasible_blocks,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeakDualityReport {
    pub dual_value: f64,
    pub primal_bound: f64,
    /// `dual_value − primal_bound`; nonpositive up to slack when duality holds.
    pub excess: f64,
    pub holds: bool,
}

/// `q(G) ≤ best + 1e-9 · (1 + |best|)` against a primal value `best`.
pub fn weak_duality_against(dual: f64, best: f64) -> WeakDualityReport {
    WeakDualityReport {
        dual_value: dual,
        primal_bound: best,
        excess: dual - best,
        holds: dual <= best + 1e-9 * (1.0 + best.abs()),
    }
}

pub fn check_weak_duality(
    instance: &ProblemInstance,
    state: &DualState,
    oracle: &OracleResult,
) -> Result<WeakDualityReport> {
    Ok(weak_duality_against(dual_value(instance, state)?, oracle.best_value))
}

/// A random PSD matrix `R Rᵀ` of the given dimension with a random rank.
pub fn random_psd<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> SymMatrix {
    let rank = rng.random_range(1..=dim);
    let r = DMatrix::<f64>::from_fn(dim, rank, |_, _| StandardNormal.sample(rng));
    SymMatrix::symmetrized(&r * r.transpose())
}

/// A random point of `χ_ψ`: each block is a random PSD matrix rescaled so
/// its corner equals `ψ_p`.
pub fn sample_feasible_dual_state<R: Rng + ?Sized>(rng: &mut R, psi: &[f64]) -> DualState {
    let dim = psi.len() + 1;
    let blocks = psi
        .iter()
        .map(|&w| loop {
            let m = random_psd(rng, dim);
            let corner = m.get(dim - 1, dim - 1);
            if corner > 1e-6 {
                break m.scaled(w / corner);
            }
        })
        .collect();
    DualState::from_matrices(blocks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::{crlb_mu, SingularPolicy};

    fn scalar_instance() -> ProblemInstance {
        let fims = [1.0, 2.0, 3.0].map(|v| SymMatrix::from_diagonal(&[v])).to_vec();
        ProblemInstance::new(2, fims, vec![1.0])
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(10, 4), 210);
        assert_eq!(binomial(5, 0), 1);
        assert_eq!(binomial(3, 5), 0);
        assert_eq!(binomial(60, 30), 118_264_581_564_861_424);
    }

    #[test]
    fn combinations_are_lexicographic() {
        let mut c = vec![0, 1];
        let mut all = vec![c.clone()];
        while next_combination(&mut c, 4) {
            all.push(c.clone());
        }
        assert_eq!(all, vec![[0, 1], [0, 2], [0, 3], [1, 2], [1, 3], [2, 3]]);
    }

    #[test]
    fn scalar_example() {
        let res = exhaustive_best_subset(&scalar_instance(), &OracleConfig::default()).unwrap();
        assert_eq!(res.best_subset, vec![1, 2]);
        assert!((res.best_value - 0.2).abs() <= 1e-12);
        assert_eq!(res.evaluated, 3);
        assert_eq!(res.ties, vec![vec![1, 2]]);
    }

    #[test]
    fn full_budget_has_one_subset() {
        let mut inst = scalar_instance();
        inst.k = 3;
        let res = exhaustive_best_subset(&inst, &OracleConfig::default()).unwrap();
        assert_eq!(res.best_subset, vec![0, 1, 2]);
        assert_eq!(res.evaluated, 1);
    }

    #[test]
    fn ties_go_to_lexicographically_first() {
        let fims = vec![SymMatrix::identity(1); 4];
        let inst = ProblemInstance::new(2, fims, vec![1.0]);
        let res = exhaustive_best_subset(&inst, &OracleConfig::default()).unwrap();
        assert_eq!(res.best_subset, vec![0, 1]);
        assert_eq!(res.ties.len(), 6);
    }

    #[test]
    fn cap_and_singularity_errors() {
        let inst = ProblemInstance::new(2, vec![SymMatrix::identity(1); 6], vec![1.0]);
        let cfg = OracleConfig { cap: 10, ..Default::default() };
        assert!(matches!(exhaustive_best_subset(&inst, &cfg), Err(Error::OracleCap { count: 15, .. })));

        let f = SymMatrix::outer(&[1.0, 0.0], 1.0);
        let inst = ProblemInstance::new(2, vec![f; 3], vec![1.0, 1.0]);
        assert!(matches!(
            exhaustive_best_subset(&inst, &OracleConfig::default()),
            Err(Error::AllSubsetsSingular { k: 2 })
        ));
    }

    #[test]
    fn singular_subsets_are_skipped() {
        let fims = vec![
            SymMatrix::outer(&[1.0, 0.0], 1.0),
            SymMatrix::outer(&[2.0, 0.0], 1.0),
            SymMatrix::outer(&[0.0, 1.0], 1.0),
        ];
        let inst = ProblemInstance::new(2, fims, vec![1.0, 1.0]);
        let res = exhaustive_best_subset(&inst, &OracleConfig::default()).unwrap();
        assert_eq!(res.singular_skipped, 1);
        assert_eq!(res.best_subset, vec![1, 2]);
        assert!((res.best_value - 1.25).abs() < 1e-14);
    }

    fn two_param_instance() -> ProblemInstance {
        let fims = vec![
            SymMatrix::from_row_major(2, &[2.0, 0.5, 0.5, 1.0]).unwrap(),
            SymMatrix::from_row_major(2, &[1.0, -0.3, -0.3, 3.0]).unwrap(),
            SymMatrix::from_row_major(2, &[0.5, 0.0, 0.0, 0.5]).unwrap(),
        ];
        ProblemInstance::new(2, fims, vec![1.0, 2.0])
    }

    #[test]
    fn crlb_point_is_feasible() {
        let inst = two_param_instance();
        let w = SelectionWeights(vec![1.0, 1.0, 0.0]);
        let mu = crlb_mu(&inst, &w, SingularPolicy::Ridge).unwrap().mu;
        let rep = check_primal_feasibility(&inst, &w, &mu, 1e-9).unwrap();
        assert!(rep.is_feasible(), "{rep:?}");
    }

    #[test]
    fn reduced_mu_is_infeasible() {
        let inst = two_param_instance();
        let w = SelectionWeights(vec![1.0, 1.0, 0.0]);
        let mut mu = crlb_mu(&inst, &w, SingularPolicy::Ridge).unwrap().mu;
        mu[1] *= 0.9;
        let rep = check_primal_feasibility(&inst, &w, &mu, 1e-9).unwrap();
        assert_eq!(rep.infeasible_blocks, vec![1]);
    }

    #[test]
    fn short_budget_is_infeasible() {
        let inst = two_param_instance();
        let w = SelectionWeights(vec![1.0, 0.0, 0.0]);
        let rep = check_primal_feasibility(&inst, &w, &[10.0, 10.0], 1e-9).unwrap();
        assert!(!rep.budget_ok);
        assert!(!rep.is_feasible());
    }

    #[test]
    fn initial_state_satisfies_weak_duality() {
        let inst = two_param_instance();
        let oracle = exhaustive_best_subset(&inst, &OracleConfig::default()).unwrap();
        let rep = check_weak_duality(&inst, &DualState::initial(&inst.psi), &oracle).unwrap();
        assert_eq!(rep.dual_value, 0.0);
        assert!(rep.holds);
    }
}
