//! Projection onto the PSD cone and onto the slice
//! `K_φ = { U ⪰ 0 : ⟨U, E⟩ = φ }` for a PSD constraint matrix `E`.
//!
//! The slice projection is `P_C(G + λE)` where `λ` solves the scalar
//! equation `f(λ) = ⟨P_C(G + λE), E⟩ − φ = 0`. `f` is continuous and
//! nondecreasing, so the root is bracketed by doubling and then found by
//! bisection; every evaluation of `f` costs one symmetric
//! eigendecomposition.

use nalgebra::{DMatrix, Dyn, SymmetricEigen};

use crate::error::{Error, Result};
use crate::matrix::{check_dims, SymMatrix};

/// Root-finder and PSD tolerances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectionConfig {
    /// Accept `λ` once `|f(λ)| ≤ root_tol · max(1, φ)`.
    pub root_tol: f64,
    /// Relative eigenvalue slack; the absolute slack is `eig_tol · (1 + ‖·‖_F)`.
    pub eig_tol: f64,
    pub max_doublings: usize,
    pub max_bisections: usize,
}

impl Default for ProjectionConfig {
    fn default() -> Self {
        Self {
            root_tol: 1e-10,
            eig_tol: 1e-9,
            max_doublings: 60,
            max_bisections: 200,
        }
    }
}

/// The constraint `⟨U, E⟩ = φ`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintSpec {
    e_matrix: SymMatrix,
    phi: f64,
    // Set when E = e_i e_iᵀ, so ⟨P_C(M), E⟩ reads one eigenvector row.
    indicator: Option<usize>,
}

impl ConstraintSpec {
    /// Validates that `e_matrix` is PSD (up to the default eigenvalue slack)
    /// and `phi ≥ 0`.
    pub fn new(e_matrix: SymMatrix, phi: f64) -> Result<Self> {
        if !phi.is_finite() || phi < 0.0 {
            return Err(Error::InvalidConstraint(format!(
                "phi must be finite and non-negative, got {phi}"
            )));
        }
        if !e_matrix.is_psd(ProjectionConfig::default().eig_tol)? {
            return Err(Error::InvalidConstraint("E is not PSD".into()));
        }
        let indicator = detect_indicator(&e_matrix);
        Ok(Self { e_matrix, phi, indicator })
    }

    /// `E = e_last e_lastᵀ`, the corner indicator used by the dual blocks.
    pub fn last_coordinate(dim: usize, phi: f64) -> Result<Self> {
        Self::new(SymMatrix::coordinate_indicator(dim, dim - 1), phi)
    }

    pub fn e_matrix(&self) -> &SymMatrix {
        &self.e_matrix
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn dim(&self) -> usize {
        self.e_matrix.dim()
    }

    fn tolerance(&self, cfg: &ProjectionConfig) -> f64 {
        cfg.root_tol * self.phi.max(1.0)
    }

    /// `⟨V D₊ Vᵀ, E⟩ = Σᵢ max(dᵢ, 0) · vᵢᵀ E vᵢ`
    fn projected_inner(&self, eig: &SymmetricEigen<f64, Dyn>) -> f64 {
        let v = &eig.eigenvectors;
        let mut total = 0.0;
        for (i, &d) in eig.eigenvalues.iter().enumerate() {
            if d <= 0.0 {
                continue;
            }
            let quad = match self.indicator {
                Some(r) => v[(r, i)] * v[(r, i)],
                None => {
                    let col = v.column(i);
                    (self.e_matrix.as_matrix() * col).dot(&col)
                }
            };
            total += d * quad;
        }
        total
    }
}

fn detect_indicator(e: &SymMatrix) -> Option<usize> {
    let n = e.dim();
    let mut hit = None;
    for i in 0..n {
        for j in 0..n {
            let v = e.get(i, j);
            if v == 0.0 {
                continue;
            }
            if i != j || v != 1.0 || hit.is_some() {
                return None;
            }
            hit = Some(i);
        }
    }
    hit
}

/// Diagnostics from [`project_constrained`].
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionReport {
    pub result: SymMatrix,
    pub lambda: f64,
    /// `|f(λ)|` at the accepted root.
    pub residual: f64,
    pub eig_calls: usize,
    pub bracket: (f64, f64),
}

fn reconstruct_positive(eig: &SymmetricEigen<f64, Dyn>) -> SymMatrix {
    let n = eig.eigenvalues.len();
    let mut scaled = eig.eigenvectors.clone();
    for (i, &d) in eig.eigenvalues.iter().enumerate() {
        let s = if d > 0.0 { d } else { 0.0 };
        scaled.column_mut(i).scale_mut(s);
    }
    let m: DMatrix<f64> = &scaled * eig.eigenvectors.transpose();
    debug_assert_eq!(m.nrows(), n);
    SymMatrix::symmetrized(m)
}

/// Euclidean projection onto the PSD cone: clip the negative eigenvalues.
pub fn project_psd(g: &SymMatrix) -> Result<SymMatrix> {
    Ok(reconstruct_positive(&g.eigen()?))
}

fn shifted(g: &SymMatrix, spec: &ConstraintSpec, lambda: f64) -> Result<SymMatrix> {
    match spec.indicator {
        Some(r) => {
            let mut m = g.clone();
            m.add_to_diagonal(r, lambda);
            Ok(m)
        }
        None => g.add_scaled(&spec.e_matrix, lambda),
    }
}

fn evaluate(
    g: &SymMatrix,
    spec: &ConstraintSpec,
    lambda: f64,
) -> Result<(f64, SymmetricEigen<f64, Dyn>)> {
    let eig = shifted(g, spec, lambda)?.eigen()?;
    Ok((spec.projected_inner(&eig) - spec.phi, eig))
}

/// `f(λ) = ⟨P_C(G + λE), E⟩ − φ`, nondecreasing in `λ`.
pub fn constraint_residual(g: &SymMatrix, spec: &ConstraintSpec, lambda: f64) -> Result<f64> {
    check_dims(g, &spec.e_matrix)?;
    Ok(evaluate(g, spec, lambda)?.0)
}

/// Projects `g` onto `K_φ` by solving `f(λ) = 0`.
///
/// The search starts from the symmetric bracket `±(1 + ‖g‖_F + φ)`, doubles
/// each end until `f` changes sign, then bisects. The first midpoint is
/// `λ = 0`, so points already in `K_φ` are returned unchanged.
pub fn project_constrained(
    g: &SymMatrix,
    spec: &ConstraintSpec,
    cfg: &ProjectionConfig,
) -> Result<ProjectionReport> {
    check_dims(g, &spec.e_matrix)?;
    if !g.is_finite() {
        return Err(Error::NonFinite);
    }
    let tol = spec.tolerance(cfg);
    let radius = 1.0 + g.frobenius_norm() + spec.phi;
    let mut eig_calls = 0usize;

    let accept = |lambda: f64, f: f64, eig: &SymmetricEigen<f64, Dyn>, calls, bracket| {
        ProjectionReport {
            result: reconstruct_positive(eig),
            lambda,
            residual: f.abs(),
            eig_calls: calls,
            bracket,
        }
    };

    let mut lo = -radius;
    let (mut f_lo, eig) = evaluate(g, spec, lo)?;
    eig_calls += 1;
    let mut doublings = 0;
    while f_lo > tol {
        if doublings == cfg.max_doublings {
            return Err(Error::BracketNotFound(doublings));
        }
        lo *= 2.0;
        doublings += 1;
        f_lo = evaluate(g, spec, lo)?.0;
        eig_calls += 1;
    }
    if f_lo.abs() <= tol {
        let eig = if doublings == 0 { eig } else { evaluate(g, spec, lo)?.1 };
        return Ok(accept(lo, f_lo, &eig, eig_calls, (lo, lo)));
    }

    let mut hi = radius;
    let (mut f_hi, mut eig_hi) = evaluate(g, spec, hi)?;
    eig_calls += 1;
    let mut doublings = 0;
    while f_hi < -tol {
        if doublings == cfg.max_doublings {
            return Err(Error::BracketNotFound(doublings));
        }
        hi *= 2.0;
        doublings += 1;
        (f_hi, eig_hi) = evaluate(g, spec, hi)?;
        eig_calls += 1;
    }
    let bracket = (lo, hi);
    if f_hi.abs() <= tol {
        return Ok(accept(hi, f_hi, &eig_hi, eig_calls, bracket));
    }

    let mut best = f64::INFINITY;
    for _ in 0..cfg.max_bisections {
        let mid = 0.5 * (lo + hi);
        let (f_mid, eig) = evaluate(g, spec, mid)?;
        eig_calls += 1;
        if f_mid.abs() <= tol {
            return Ok(accept(mid, f_mid, &eig, eig_calls, bracket));
        }
        best = best.min(f_mid.abs());
        if f_mid < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::RootTolerance {
        tol,
        iters: cfg.max_bisections,
        residual: best,
    })
}
