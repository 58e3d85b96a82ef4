//! Projected subgradient ascent on the Lagrange dual of the CRLB design
//! problem.
//!
//! The primal problem is
//!
//! ```text
//! minimize   Σ_p ψ_p μ_p
//! subject to [A(w)  e_p; e_pᵀ  μ_p] ⪰ 0,  p = 1..P
//!            w ∈ W = { Σ w = K, 0 ≤ w ≤ 1 },   A(w) = Σ_n w_n F_n
//! ```
//!
//! with one PSD multiplier `G_p = [G̃_p γ_p; γ_pᵀ g_p]` of size `P+1` per
//! block. Minimizing the Lagrangian over `μ` forces `g_p = ψ_p`; over `w` it
//! picks the `K` largest scores `ξ_n = ⟨F_n, Σ_p G̃_p⟩`. The dual function is
//!
//! ```text
//! q(G) = −Σ_n w*_n ξ_n − 2 Σ_p γ_p[p]
//! ```
//!
//! and `−[A(w*) e_p; e_pᵀ μ_p]` is a supergradient component for block `p`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{frobenius_inner, SymMatrix};
use crate::problem::{ProblemInstance, SelectionWeights};
use crate::projection::{project_constrained, ConstraintSpec, ProjectionConfig};

/// Eigenvalue ratio below which `A(w)` counts as singular.
pub const SINGULAR_RCOND: f64 = 1e-12;
/// `μ_p` under [`SingularPolicy::Cap`].
pub const MU_CAP: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StepKind {
    Constant,
    /// `α_k = α₀ / √k`
    Diminishing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SingularPolicy {
    /// Invert `A + εI` with `ε = 1e-10 · trace(A) / P`.
    Ridge,
    /// Set every `μ_p` to [`MU_CAP`].
    Cap,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TieBreak {
    LowestIndex,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverConfig {
    pub step: StepKind,
    /// Base step; `None` uses `1 / (1 + max_n ‖F_n‖_F)`.
    pub alpha0: Option<f64>,
    pub max_iters: usize,
    /// Stop once `(primal − best_dual) / max(1, |primal|) ≤ gap_tol`.
    pub gap_tol: f64,
    pub tie_break: TieBreak,
    pub singular: SingularPolicy,
    #[serde(skip)]
    pub projection: ProjectionConfig,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            step: StepKind::Diminishing,
            alpha0: None,
            max_iters: 1000,
            gap_tol: 1e-6,
            tie_break: TieBreak::LowestIndex,
            singular: SingularPolicy::Ridge,
            projection: ProjectionConfig::default(),
        }
    }
}

impl SolverConfig {
    pub fn check(&self) -> Result<()> {
        if let Some(a) = self.alpha0 {
            if !(a.is_finite() && a > 0.0) {
                return Err(Error::InvalidConfig(format!("alpha0 must be positive, got {a}")));
            }
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidConfig("max_iters must be at least 1".into()));
        }
        if self.gap_tol.is_nan() || self.gap_tol < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "gap_tol must be non-negative, got {}",
                self.gap_tol
            )));
        }
        Ok(())
    }

    pub fn base_step(&self, instance: &ProblemInstance) -> f64 {
        self.alpha0.unwrap_or_else(|| {
            let max_norm = instance
                .fims
                .iter()
                .map(SymMatrix::frobenius_norm)
                .fold(0.0, f64::max);
            1.0 / (1.0 + max_norm)
        })
    }

    fn step_size(&self, alpha0: f64, iter: usize) -> f64 {
        match self.step {
            StepKind::Constant => alpha0,
            StepKind::Diminishing => alpha0 / (iter as f64).sqrt(),
        }
    }
}

/// One multiplier `G_p` of dimension `P + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualBlock {
    pub matrix: SymMatrix,
}

impl DualBlock {
    fn p(&self) -> usize {
        self.matrix.dim() - 1
    }

    /// Leading `P×P` block `G̃_p`.
    pub fn g_tilde(&self) -> DMatrix<f64> {
        let p = self.p();
        self.matrix.as_matrix().view((0, 0), (p, p)).into_owned()
    }

    /// First `P` entries of the last column, `γ_p`.
    pub fn gamma(&self) -> Vec<f64> {
        let p = self.p();
        (0..p).map(|i| self.matrix.get(i, p)).collect()
    }

    /// Corner entry `g_p`.
    pub fn g_scalar(&self) -> f64 {
        let p = self.p();
        self.matrix.get(p, p)
    }
}

/// A dual point `{G_p}`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualState {
    pub blocks: Vec<DualBlock>,
    pub iteration: usize,
}

impl DualState {
    /// `G_p = ψ_p · e_{P+1} e_{P+1}ᵀ`, which gives `ξ ≡ 0`.
    pub fn initial(psi: &[f64]) -> Self {
        let dim = psi.len() + 1;
        let blocks = psi
            .iter()
            .map(|&w| DualBlock {
                matrix: SymMatrix::coordinate_indicator(dim, dim - 1).scaled(w),
            })
            .collect();
        Self { blocks, iteration: 0 }
    }

    pub fn from_matrices(matrices: Vec<SymMatrix>) -> Self {
        Self {
            blocks: matrices.into_iter().map(|matrix| DualBlock { matrix }).collect(),
            iteration: 0,
        }
    }

    fn check(&self, instance: &ProblemInstance) -> Result<()> {
        if self.blocks.len() != instance.p {
            return Err(Error::DimensionMismatch {
                expected: instance.p,
                found: self.blocks.len(),
            });
        }
        for b in &self.blocks {
            if b.matrix.dim() != instance.p + 1 {
                return Err(Error::DimensionMismatch {
                    expected: instance.p + 1,
                    found: b.matrix.dim(),
                });
            }
        }
        Ok(())
    }

    /// `Σ_p G̃_p`, summed in block order.
    pub fn g_tilde_sum(&self) -> DMatrix<f64> {
        let p = self.blocks.first().map_or(0, DualBlock::p);
        let mut sum = DMatrix::zeros(p, p);
        for b in &self.blocks {
            sum += b.matrix.as_matrix().view((0, 0), (p, p));
        }
        sum
    }

    /// `Σ_p γ_p[p]`
    pub fn gamma_diagonal_sum(&self) -> f64 {
        let p = self.blocks.len();
        self.blocks.iter().enumerate().map(|(i, b)| b.matrix.get(i, p)).sum()
    }
}

/// Scores `ξ_n = ⟨F_n, Σ_p G̃_p⟩`.
pub fn compute_xi(instance: &ProblemInstance, state: &DualState) -> Result<Vec<f64>> {
    state.check(instance)?;
    let sum = state.g_tilde_sum();
    Ok(instance.fims.iter().map(|f| f.as_matrix().dot(&sum)).collect())
}

/// Indicator of the `k` largest scores; equal scores go to the lower index.
pub fn select_top_k(xi: &[f64], k: usize, tie_break: TieBreak) -> SelectionWeights {
    let TieBreak::LowestIndex = tie_break;
    SelectionWeights::from_indices(xi.len(), &top_k_indices(xi, k))
}

/// Indices of the `k` largest values, ascending; ties by lowest index.
pub(crate) fn top_k_indices(values: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    let k = k.min(values.len());
    if k == 0 {
        return Vec::new();
    }
    let order = |&a: &usize, &b: &usize| values[b].total_cmp(&values[a]).then(a.cmp(&b));
    if k < idx.len() {
        idx.select_nth_unstable_by(k - 1, order);
        idx.truncate(k);
    }
    idx.sort_unstable();
    idx
}

/// `A(w) = Σ_n w_n F_n`.
pub fn information_matrix(instance: &ProblemInstance, w: &SelectionWeights) -> Result<DMatrix<f64>> {
    if w.len() != instance.n {
        return Err(Error::DimensionMismatch { expected: instance.n, found: w.len() });
    }
    let mut a = DMatrix::zeros(instance.p, instance.p);
    for (f, &wn) in instance.fims.iter().zip(w.as_slice()) {
        if wn != 0.0 {
            a.zip_apply(f.as_matrix(), |x, y| *x += wn * y);
        }
    }
    Ok(a)
}

/// CRLB values `μ_p = [A(w)⁻¹]_pp`.
#[derive(Debug, Clone, PartialEq)]
pub struct Crlb {
    pub mu: Vec<f64>,
    /// `A(w)` was singular and the singular policy supplied `μ`.
    pub singular: bool,
}

pub fn crlb_mu(instance: &ProblemInstance, w: &SelectionWeights, policy: SingularPolicy) -> Result<Crlb> {
    crlb_from_information(information_matrix(instance, w)?, policy)
}

pub(crate) fn crlb_from_information(a: DMatrix<f64>, policy: SingularPolicy) -> Result<Crlb> {
    let p = a.nrows();
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteInformation);
    }
    let trace = a.trace();
    let eig = SymMatrix::symmetrized(a).eigen()?;
    let d_max = eig.eigenvalues.max();
    let d_min = eig.eigenvalues.min();
    let singular = !(d_max > 0.0 && d_min > SINGULAR_RCOND * d_max);
    let shift = match (singular, policy) {
        (false, _) => 0.0,
        (true, SingularPolicy::Cap) => {
            return Ok(Crlb { mu: vec![MU_CAP; p], singular });
        }
        (true, SingularPolicy::Ridge) => {
            let scale = if trace > 0.0 { trace / p as f64 } else { 1.0 };
            1e-10 * scale
        }
    };
    let v = &eig.eigenvectors;
    let mu = (0..p)
        .map(|row| {
            eig.eigenvalues
                .iter()
                .enumerate()
                .map(|(i, &d)| {
                    let d = if singular { d.max(0.0) + shift } else { d };
                    v[(row, i)] * v[(row, i)] / d
                })
                .sum()
        })
        .collect();
    Ok(Crlb { mu, singular })
}

/// `Σ_p ψ_p μ_p(w)` together with the singular flag.
pub fn primal_value_flagged(
    instance: &ProblemInstance,
    w: &SelectionWeights,
    policy: SingularPolicy,
) -> Result<(f64, bool)> {
    let crlb = crlb_mu(instance, w, policy)?;
    Ok((weighted_sum(&instance.psi, &crlb.mu), crlb.singular))
}

/// `Σ_p ψ_p μ_p(w)`
pub fn primal_value(instance: &ProblemInstance, w: &SelectionWeights, policy: SingularPolicy) -> Result<f64> {
    Ok(primal_value_flagged(instance, w, policy)?.0)
}

fn weighted_sum(psi: &[f64], mu: &[f64]) -> f64 {
    psi.iter().zip(mu).map(|(a, b)| a * b).sum()
}

fn dual_from_scores(xi: &[f64], w: &SelectionWeights, state: &DualState) -> f64 {
    let lin: f64 = xi.iter().zip(w.as_slice()).map(|(x, w)| x * w).sum();
    -lin - 2.0 * state.gamma_diagonal_sum()
}

/// `q(G) = −Σ_n w*_n ξ_n − 2 Σ_p γ_p[p]` with `w*` the top-`K` indicator.
pub fn dual_value(instance: &ProblemInstance, state: &DualState) -> Result<f64> {
    let xi = compute_xi(instance, state)?;
    let w = select_top_k(&xi, instance.k, TieBreak::LowestIndex);
    Ok(dual_from_scores(&xi, &w, state))
}

/// Supergradient components `−[A(w) e_p; e_pᵀ μ_p]`.
pub fn subgradient(instance: &ProblemInstance, w: &SelectionWeights, mu: &[f64]) -> Result<Vec<SymMatrix>> {
    if mu.len() != instance.p {
        return Err(Error::DimensionMismatch { expected: instance.p, found: mu.len() });
    }
    let a = information_matrix(instance, w)?;
    Ok(lmi_blocks(&a, mu).into_iter().map(|m| m.scaled(-1.0)).collect())
}

/// The primal constraint blocks `[A e_p; e_pᵀ μ_p]`.
pub fn lmi_blocks(a: &DMatrix<f64>, mu: &[f64]) -> Vec<SymMatrix> {
    let p = a.nrows();
    mu.iter()
        .enumerate()
        .map(|(idx, &m)| {
            let mut block = DMatrix::zeros(p + 1, p + 1);
            block.view_mut((0, 0), (p, p)).copy_from(a);
            block[(idx, p)] = 1.0;
            block[(p, idx)] = 1.0;
            block[(p, p)] = m;
            SymMatrix::symmetrized(block)
        })
        .collect()
}

/// `G_p ← P_{K_{ψ_p}}(G_p + α ∇q_p)` for every block. Returns the new state
/// and the largest projection residual.
pub fn ascent_step(
    state: &DualState,
    grads: &[SymMatrix],
    alpha: f64,
    psi: &[f64],
    cfg: &ProjectionConfig,
) -> Result<(DualState, f64)> {
    if grads.len() != state.blocks.len() || psi.len() != state.blocks.len() {
        return Err(Error::DimensionMismatch {
            expected: state.blocks.len(),
            found: grads.len().min(psi.len()),
        });
    }
    let mut max_residual = 0.0f64;
    let mut blocks = Vec::with_capacity(grads.len());
    for ((block, grad), &weight) in state.blocks.iter().zip(grads).zip(psi) {
        let moved = block.matrix.add_scaled(grad, alpha)?;
        let spec = ConstraintSpec::last_coordinate(moved.dim(), weight)?;
        let report = project_constrained(&moved, &spec, cfg)?;
        max_residual = max_residual.max(report.residual);
        blocks.push(DualBlock { matrix: report.result });
    }
    Ok((
        DualState {
            blocks,
            iteration: state.iteration + 1,
        },
        max_residual,
    ))
}

/// One row of the convergence trace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRecord {
    pub iter: usize,
    pub alpha: f64,
    pub dual_value: f64,
    pub best_dual: f64,
    /// Best rounded primal value found so far.
    pub primal_rounded: f64,
    pub gap: f64,
    pub max_projection_residual: f64,
    pub singular_flag: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverResult {
    /// Sorted indices of the `K` selected candidates.
    pub selected: Vec<usize>,
    pub w_rounded: SelectionWeights,
    /// Mean of the per-iteration Lagrangian minimizers.
    pub w_averaged: SelectionWeights,
    pub best_dual: f64,
    pub primal_rounded: f64,
    pub gap: f64,
    pub iterations: usize,
    pub converged: bool,
    #[serde(skip)]
    pub trace: Vec<TraceRecord>,
}

impl SolverResult {
    pub fn relative_gap(&self) -> f64 {
        relative_gap(self.primal_rounded, self.best_dual)
    }
}

fn relative_gap(primal: f64, dual: f64) -> f64 {
    (primal - dual) / primal.abs().max(1.0)
}

/// Iterator-style driver for the ascent; [`solve`] runs it to completion.
#[derive(Debug, Clone)]
pub struct DualAscent<'a> {
    instance: &'a ProblemInstance,
    config: SolverConfig,
    alpha0: f64,
    state: DualState,
    w_sum: Vec<f64>,
    best_dual: f64,
    best_primal: f64,
    best_selection: Option<Vec<usize>>,
    trace: Vec<TraceRecord>,
    converged: bool,
}

impl<'a> DualAscent<'a> {
    pub fn new(instance: &'a ProblemInstance, config: SolverConfig) -> Result<Self> {
        config.check()?;
        crate::problem::validate(instance).into_result()?;
        let alpha0 = config.base_step(instance);
        Ok(Self {
            instance,
            alpha0,
            state: DualState::initial(&instance.psi),
            w_sum: vec![0.0; instance.n],
            best_dual: f64::NEG_INFINITY,
            best_primal: f64::INFINITY,
            best_selection: None,
            trace: Vec::with_capacity(config.max_iters.min(100_000)),
            converged: false,
            config,
        })
    }

    pub fn state(&self) -> &DualState {
        &self.state
    }

    pub fn converged(&self) -> bool {
        self.converged
    }

    pub fn iterations(&self) -> usize {
        self.trace.len()
    }

    pub fn trace(&self) -> &[TraceRecord] {
        &self.trace
    }

    pub fn done(&self) -> bool {
        self.converged || self.trace.len() >= self.config.max_iters
    }

    fn consider(&mut self, indices: Vec<usize>) -> Result<bool> {
        let w = SelectionWeights::from_indices(self.instance.n, &indices);
        let (value, singular) = primal_value_flagged(self.instance, &w, self.config.singular)?;
        if !singular && value < self.best_primal {
            self.best_primal = value;
            self.best_selection = Some(indices);
        }
        Ok(singular)
    }

    /// Runs one iteration and returns its trace record.
    pub fn step(&mut self) -> Result<&TraceRecord> {
        let iter = self.trace.len() + 1;
        let inst = self.instance;
        let xi = compute_xi(inst, &self.state)?;
        let chosen = top_k_indices(&xi, inst.k);
        let w = SelectionWeights::from_indices(inst.n, &chosen);

        let q = dual_from_scores(&xi, &w, &self.state);
        if !q.is_finite() {
            return Err(Error::NonFiniteDual(iter));
        }
        self.best_dual = self.best_dual.max(q);

        let a = information_matrix(inst, &w)?;
        let crlb = crlb_from_information(a.clone(), self.config.singular)?;
        if !crlb.singular {
            let value = weighted_sum(&inst.psi, &crlb.mu);
            if value < self.best_primal {
                self.best_primal = value;
                self.best_selection = Some(chosen.clone());
            }
        }

        for &i in &chosen {
            self.w_sum[i] += 1.0;
        }
        let rounded = top_k_indices(&self.w_sum, inst.k);
        if rounded != chosen {
            self.consider(rounded)?;
        }

        let gap = self.best_primal - self.best_dual;
        let alpha = self.config.step_size(self.alpha0, iter);
        self.converged = relative_gap(self.best_primal, self.best_dual) <= self.config.gap_tol;

        let mut max_residual = 0.0;
        if !self.converged {
            let grads: Vec<SymMatrix> =
                lmi_blocks(&a, &crlb.mu).into_iter().map(|m| m.scaled(-1.0)).collect();
            let (next, residual) = ascent_step(
                &self.state,
                &grads,
                alpha,
                &inst.psi,
                &self.config.projection,
            )
            .map_err(|e| Error::Projection { iter, source: Box::new(e) })?;
            self.state = next;
            max_residual = residual;
        }

        self.trace.push(TraceRecord {
            iter,
            alpha,
            dual_value: q,
            best_dual: self.best_dual,
            primal_rounded: self.best_primal,
            gap,
            max_projection_residual: max_residual,
            singular_flag: crlb.singular,
        });
        Ok(self.trace.last().expect("just pushed"))
    }

    pub fn finish(self) -> Result<SolverResult> {
        let n = self.instance.n;
        let iters = self.trace.len().max(1) as f64;
        let w_averaged = SelectionWeights(self.w_sum.iter().map(|&s| s / iters).collect());
        let (selected, primal) = match self.best_selection {
            Some(sel) => (sel, self.best_primal),
            // Every candidate seen was singular.
            None => (top_k_indices(&self.w_sum, self.instance.k), f64::INFINITY),
        };
        Ok(SolverResult {
            w_rounded: SelectionWeights::from_indices(n, &selected),
            selected,
            w_averaged,
            best_dual: self.best_dual,
            primal_rounded: primal,
            gap: primal - self.best_dual,
            iterations: self.trace.len(),
            converged: self.converged,
            trace: self.trace,
        })
    }
}

/// Runs the ascent until the relative gap reaches `gap_tol` or
/// `max_iters` iterations have run.
pub fn solve(instance: &ProblemInstance, config: &SolverConfig) -> Result<SolverResult> {
    let mut run = DualAscent::new(instance, config.clone())?;
    while !run.done() {
        run.step()?;
    }
    run.finish()
}

/// Writes trace rows as CSV with a header line.
pub fn write_trace<W: std::io::Write>(trace: &[TraceRecord], out: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(out);
    for rec in trace {
        wr.serialize(rec)?;
    }
    wr.flush()?;
    Ok(())
}

/// `Σ_p ⟨∇q_p, D_p⟩` for a direction given block by block.
pub fn directional_inner(grads: &[SymMatrix], direction: &[SymMatrix]) -> Result<f64> {
    grads
        .iter()
        .zip(direction)
        .map(|(g, d)| frobenius_inner(g, d))
        .sum()
}
