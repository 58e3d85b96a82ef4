//! Problem instances: candidate Fisher information matrices, the sampling
//! budget and the CRLB weights.

use std::fmt;
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::SymMatrix;

/// Select `k` of the `n` candidate samples; candidate `i` contributes
/// `fims[i]` to the information matrix and the objective is
/// `Σ_p psi[p] · [A⁻¹]_pp`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    pub n: usize,
    pub k: usize,
    pub p: usize,
    pub fims: Vec<SymMatrix>,
    pub psi: Vec<f64>,
    /// Sampling-point descriptors, carried along but never read by the solver.
    pub labels: Option<Vec<Vec<f64>>>,
    pub meta: Option<serde_json::Value>,
}

impl ProblemInstance {
    /// Builds an instance, taking `n` and `p` from the matrices. Does not
    /// validate; see [`validate`].
    pub fn new(k: usize, fims: Vec<SymMatrix>, psi: Vec<f64>) -> Self {
        let p = fims.first().map_or(psi.len(), SymMatrix::dim);
        Self {
            n: fims.len(),
            k,
            p,
            fims,
            psi,
            labels: None,
            meta: None,
        }
    }

    pub fn with_labels(mut self, labels: Vec<Vec<f64>>) -> Self {
        self.labels = Some(labels);
        self
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ValidationOptions {
    /// Accept `psi[p] == 0` (still rejects negatives).
    pub allow_zero_psi: bool,
    /// Relative eigenvalue slack for the PSD check of each FIM.
    pub eig_tol: f64,
}

impl Default for ValidationOptions {
    fn default() -> Self {
        Self { allow_zero_psi: false, eig_tol: 1e-9 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValidationIssue {
    pub field: String,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub issues: Vec<ValidationIssue>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.issues.is_empty()
    }

    fn push(&mut self, field: impl Into<String>, message: impl Into<String>) {
        self.issues.push(ValidationIssue {
            field: field.into(),
            message: message.into(),
        });
    }

    pub fn into_result(self) -> Result<()> {
        if self.is_ok() {
            Ok(())
        } else {
            Err(Error::InvalidInstance(self.to_string()))
        }
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.issues.is_empty() {
            return write!(f, "ok");
        }
        for (i, issue) in self.issues.iter().enumerate() {
            if i > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{}: {}", issue.field, issue.message)?;
        }
        Ok(())
    }
}

pub fn validate(instance: &ProblemInstance) -> ValidationReport {
    validate_with(instance, &ValidationOptions::default())
}

pub fn validate_with(instance: &ProblemInstance, opts: &ValidationOptions) -> ValidationReport {
    let mut report = ValidationReport::default();
    if instance.p == 0 {
        report.push("p", "parameter dimension must be at least 1");
    }
    if instance.k == 0 {
        report.push("k", "budget must be at least 1");
    }
    if instance.k > instance.n {
        report.push("k", "budget exceeds candidates");
    }
    if instance.fims.len() != instance.n {
        report.push(
            "fims",
            format!("expected {} matrices, found {}", instance.n, instance.fims.len()),
        );
    }
    if instance.psi.len() != instance.p {
        report.push(
            "psi",
            format!("expected {} weights, found {}", instance.p, instance.psi.len()),
        );
    }
    for (i, &w) in instance.psi.iter().enumerate() {
        let ok = w.is_finite() && (w > 0.0 || (opts.allow_zero_psi && w == 0.0));
        if !ok {
            report.push(format!("psi[{i}]"), format!("weight must be positive, got {w}"));
        }
    }
    for (i, f) in instance.fims.iter().enumerate() {
        if f.dim() != instance.p {
            report.push(
                format!("fims[{i}]"),
                format!("expected dimension {}, found {}", instance.p, f.dim()),
            );
            continue;
        }
        match f.min_eigenvalue() {
            Ok(min) if min >= -f.eig_tol(opts.eig_tol) => {}
            Ok(min) => report.push(
                format!("fims[{i}]"),
                format!("FIM not PSD (min eigenvalue {min:e})"),
            ),
            Err(_) => report.push(format!("fims[{i}]"), "FIM has non-finite entries"),
        }
    }
    if let Some(labels) = &instance.labels {
        if labels.len() != instance.n {
            report.push(
                "labels",
                format!("expected {} labels, found {}", instance.n, labels.len()),
            );
        }
    }
    report
}

/// Selection weights `w ∈ [0, 1]ᴺ` with `Σ w = K`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SelectionWeights(pub Vec<f64>);

impl SelectionWeights {
    /// Indicator of `indices` among `n` candidates.
    pub fn from_indices(n: usize, indices: &[usize]) -> Self {
        let mut w = vec![0.0; n];
        for &i in indices {
            w[i] = 1.0;
        }
        Self(w)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    /// Membership in `{ w : Σ w = k, 0 ≤ w ≤ 1 }` with `|Σ w − k| ≤ 1e-9 · k`.
    pub fn is_feasible(&self, k: usize) -> bool {
        let k = k as f64;
        self.0.iter().all(|&v| (0.0..=1.0).contains(&v)) && (self.total() - k).abs() <= 1e-9 * k
    }

    /// Indices with nonzero weight, ascending.
    pub fn support(&self) -> Vec<usize> {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0.0)
            .map(|(i, _)| i)
            .collect()
    }
}

// ---------------------------------------------------------------------------
// Fisher information generators

/// Observation models with Gaussian noise whose FIMs have closed forms.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelSpec {
    /// `y = xₙᵀθ + e`, `e ~ N(0, σ²)`: `Fₙ = xₙxₙᵀ / σ²`.
    LinearGaussian { design: Vec<Vec<f64>>, noise_var: f64 },
    /// `y(t) = a·cos(ωt + φ) + e` with `θ = (a, ω, φ)`.
    Sinusoid {
        amplitude: f64,
        frequency: f64,
        phase: f64,
        noise_var: f64,
        grid: Vec<f64>,
    },
    /// `y(t) = a·exp(−bt) + e` with `θ = (a, b)`.
    ExponentialDecay {
        amplitude: f64,
        rate: f64,
        noise_var: f64,
        grid: Vec<f64>,
    },
    Explicit { fims: Vec<SymMatrix> },
}

impl ModelSpec {
    pub fn fims(&self) -> Result<Vec<SymMatrix>> {
        match self {
            ModelSpec::LinearGaussian { design, noise_var } => {
                gen_linear_gaussian(design, *noise_var)
            }
            ModelSpec::Sinusoid { amplitude, frequency, phase, noise_var, grid } => {
                let grads: Vec<Vec<f64>> = grid
                    .iter()
                    .map(|&t| {
                        let arg = frequency * t + phase;
                        vec![arg.cos(), -amplitude * t * arg.sin(), -amplitude * arg.sin()]
                    })
                    .collect();
                gen_linear_gaussian(&grads, *noise_var)
            }
            ModelSpec::ExponentialDecay { amplitude, rate, noise_var, grid } => {
                let grads: Vec<Vec<f64>> = grid
                    .iter()
                    .map(|&t| {
                        let decay = (-rate * t).exp();
                        vec![decay, -amplitude * t * decay]
                    })
                    .collect();
                gen_linear_gaussian(&grads, *noise_var)
            }
            ModelSpec::Explicit { fims } => Ok(fims.clone()),
        }
    }

    /// Sampling-point descriptors for each candidate.
    pub fn labels(&self) -> Option<Vec<Vec<f64>>> {
        match self {
            ModelSpec::LinearGaussian { design, .. } => Some(design.clone()),
            ModelSpec::Sinusoid { grid, .. } | ModelSpec::ExponentialDecay { grid, .. } => {
                Some(grid.iter().map(|&t| vec![t]).collect())
            }
            ModelSpec::Explicit { .. } => None,
        }
    }

    /// Instance with budget `k` and weights `psi`, validated.
    pub fn instance(&self, k: usize, psi: Vec<f64>) -> Result<ProblemInstance> {
        let fims = self.fims()?;
        let mut inst = ProblemInstance::new(k, fims, psi);
        inst.labels = self.labels();
        validate(&inst).into_result()?;
        Ok(inst)
    }
}

/// `Fₙ = xₙxₙᵀ / σ²` for each design vector.
pub fn gen_linear_gaussian(design_vectors: &[Vec<f64>], noise_var: f64) -> Result<Vec<SymMatrix>> {
    if !(noise_var.is_finite() && noise_var > 0.0) {
        return Err(Error::InvalidInstance(format!(
            "noise variance must be positive, got {noise_var}"
        )));
    }
    let p = match design_vectors.first() {
        Some(x) if !x.is_empty() => x.len(),
        Some(_) => return Err(Error::InvalidInstance("empty design vector".into())),
        None => return Ok(Vec::new()),
    };
    design_vectors
        .iter()
        .map(|x| {
            if x.len() != p {
                return Err(Error::DimensionMismatch { expected: p, found: x.len() });
            }
            Ok(SymMatrix::outer(x, 1.0 / noise_var))
        })
        .collect()
}

/// `n` standard-normal design vectors in `ℝᵖ`.
pub fn random_design<R: Rng + ?Sized>(rng: &mut R, n: usize, p: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| (0..p).map(|_| StandardNormal.sample(rng)).collect())
        .collect()
}

/// Linear-Gaussian instance with standard-normal design vectors, unit
/// noise and unit weights.
pub fn random_linear_gaussian<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    p: usize,
    k: usize,
) -> Result<ProblemInstance> {
    let design = random_design(rng, n, p);
    let fims = ModelSpec::LinearGaussian { design, noise_var: 1.0 }.fims()?;
    let mut out = ProblemInstance::new(k, fims, vec![1.0; p]);
    out.p = p;
    Ok(out)
}

/// Small random instance for oracle comparisons: `P ≤ 3`, `P ≤ K ≤ 4`,
/// `K ≤ N ≤ 10`, linear-Gaussian FIMs and weights in `[0.5, 2]`.
pub fn random_small_instance<R: Rng + ?Sized>(rng: &mut R) -> Result<ProblemInstance> {
    let p = rng.random_range(1..=3);
    let k = rng.random_range(p..=4);
    let n = rng.random_range(k..=10);
    let mut inst = random_linear_gaussian(rng, n, p, k)?;
    inst.psi = (0..p).map(|_| rng.random_range(0.5..=2.0)).collect();
    Ok(inst)
}

// ---------------------------------------------------------------------------
// Instance files

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceFile {
    n: usize,
    k: usize,
    p: usize,
    psi: Vec<f64>,
    fims: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    labels: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    meta: Option<serde_json::Value>,
}

fn schema(path: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Schema {
        path: path.into(),
        message: message.into(),
    }
}

/// Parses an instance from its JSON text.
pub fn parse_instance(text: &str) -> Result<ProblemInstance> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let file: InstanceFile = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        if inner.is_syntax() || inner.is_eof() {
            Error::Parse(inner.to_string())
        } else {
            schema(path, inner.to_string())
        }
    })?;

    if file.psi.len() != file.p {
        return Err(schema("psi", format!("expected {} entries, found {}", file.p, file.psi.len())));
    }
    if file.fims.len() != file.n {
        return Err(schema("fims", format!("expected {} matrices, found {}", file.n, file.fims.len())));
    }
    if let Some(labels) = &file.labels {
        if labels.len() != file.n {
            return Err(schema("labels", format!("expected {} entries, found {}", file.n, labels.len())));
        }
    }
    for (i, &v) in file.psi.iter().enumerate() {
        if !v.is_finite() {
            return Err(schema(format!("psi[{i}]"), "non-finite number"));
        }
    }
    let mut fims = Vec::with_capacity(file.n);
    for (i, entries) in file.fims.iter().enumerate() {
        if entries.len() != file.p * file.p {
            return Err(schema(
                format!("fims[{i}]"),
                format!("expected {} entries, found {}", file.p * file.p, entries.len()),
            ));
        }
        if let Some(j) = entries.iter().position(|v| !v.is_finite()) {
            return Err(schema(format!("fims[{i}][{j}]"), "non-finite number"));
        }
        fims.push(SymMatrix::from_row_major(file.p, entries).map_err(|e| schema(format!("fims[{i}]"), e.to_string()))?);
    }
    Ok(ProblemInstance {
        n: file.n,
        k: file.k,
        p: file.p,
        fims,
        psi: file.psi,
        labels: file.labels,
        meta: file.meta,
    })
}

pub fn instance_to_json(instance: &ProblemInstance) -> Result<String> {
    let file = InstanceFile {
        n: instance.n,
        k: instance.k,
        p: instance.p,
        psi: instance.psi.clone(),
        fims: instance.fims.iter().map(SymMatrix::to_row_major).collect(),
        labels: instance.labels.clone(),
        meta: instance.meta.clone(),
    };
    let mut text = serde_json::to_string_pretty(&file).map_err(|e| Error::Parse(e.to_string()))?;
    text.push('\n');
    Ok(text)
}

pub fn load_instance(path: impl AsRef<Path>) -> Result<ProblemInstance> {
    parse_instance(&std::fs::read_to_string(path)?)
}

pub fn save_instance(instance: &ProblemInstance, path: impl AsRef<Path>) -> Result<()> {
    let numbers_finite = instance.psi.iter().all(|v| v.is_finite())
        && instance.fims.iter().all(SymMatrix::is_finite);
    if !numbers_finite {
        return Err(Error::InvalidInstance("cannot save non-finite numbers".into()));
    }
    std::fs::write(path, instance_to_json(instance)?)?;
    Ok(())
}
