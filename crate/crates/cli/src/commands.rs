use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::Value;

use sample_design::problem::{instance_to_json, random_design, validate_with, ValidationOptions};
use sample_design::solver::write_trace;
use sample_design::{
    exhaustive_best_subset, load_instance, solve as run_solver, validate as validate_instance, ModelSpec,
    OracleConfig, SolverConfig, SolverResult, SymMatrix,
};

use crate::args::{CompareArgs, GenArgs, ModelKind, OracleArgs, SolveArgs, ValidateArgs};
use crate::compare::{compare_batch, compare_instance, summarize, CompareReport};
use crate::{CliError, Outcome};

/// Record of one command invocation, written with `--manifest`.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub instance: Option<PathBuf>,
    pub config: Value,
    pub seed: Option<u64>,
    pub started_unix_ms: u128,
    pub finished_unix_ms: u128,
    pub artifacts: Vec<PathBuf>,
}

fn now_ms() -> u128 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis())
        .unwrap_or(0)
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::Internal(format!("writing {}: {e}", path.display())))
}

fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::Internal(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

struct ManifestDraft {
    command: &'static str,
    instance: Option<PathBuf>,
    config: Value,
    seed: Option<u64>,
    started: u128,
}

impl ManifestDraft {
    fn new(command: &'static str, instance: Option<&Path>, config: Value, seed: Option<u64>) -> Self {
        Self {
            command,
            instance: instance.map(Path::to_path_buf),
            config,
            seed,
            started: now_ms(),
        }
    }

    fn write(self, path: Option<&Path>, artifacts: Vec<PathBuf>) -> Result<(), CliError> {
        let Some(path) = path else { return Ok(()) };
        let manifest = RunManifest {
            command: self.command.into(),
            instance: self.instance,
            config: self.config,
            seed: self.seed,
            started_unix_ms: self.started,
            finished_unix_ms: now_ms(),
            artifacts,
        };
        write_file(path, to_json(&manifest)?.as_bytes())
    }
}

fn read_explicit_fims(path: &Path) -> Result<Vec<SymMatrix>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))?;
    let value: Value = serde_json::from_str(&text).map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))?;
    let bad = |i: usize, why: &str| CliError::Invalid(format!("fims[{i}]: {why}"));
    let Value::Array(items) = value else {
        return Err(CliError::Invalid("fims file must hold a JSON array of matrices".into()));
    };
    items
        .iter()
        .enumerate()
        .map(|(i, item)| {
            let rows = item.as_array().ok_or_else(|| bad(i, "expected an array"))?;
            let flat: Vec<f64> = if rows.iter().all(Value::is_array) {
                rows.iter()
                    .flat_map(|r| r.as_array().into_iter().flatten())
                    .map(|v| v.as_f64().ok_or_else(|| bad(i, "non-numeric entry")))
                    .collect::<Result<_, _>>()?
            } else {
                rows.iter()
                    .map(|v| v.as_f64().ok_or_else(|| bad(i, "non-numeric entry")))
                    .collect::<Result<_, _>>()?
            };
            let dim = (flat.len() as f64).sqrt().round() as usize;
            if dim == 0 || dim * dim != flat.len() {
                return Err(bad(i, "entry count is not a perfect square"));
            }
            SymMatrix::from_row_major(dim, &flat).map_err(|e| bad(i, &e.to_string()))
        })
        .collect()
}

fn uniform_grid(n: usize) -> Vec<f64> {
    (0..n).map(|i| i as f64 / n as f64).collect()
}

pub fn gen(args: &GenArgs) -> Result<Outcome, CliError> {
    let draft = ManifestDraft::new(
        "gen",
        None,
        serde_json::json!({
            "model": format!("{:?}", args.model).to_lowercase(),
            "n": args.n, "p": args.p, "k": args.k, "noise_var": args.noise_var,
        }),
        Some(args.seed),
    );
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let need_n = || args.n.ok_or_else(|| CliError::Invalid("--n is required for this model".into()));
    let check_p = |fixed: usize| match args.p {
        Some(p) if p != fixed => Err(CliError::Invalid(format!("this model has p = {fixed}, got --p {p}"))),
        _ => Ok(()),
    };
    let model = match args.model {
        ModelKind::Linear => {
            let n = need_n()?;
            let p = args.p.ok_or_else(|| CliError::Invalid("--p is required for the linear model".into()))?;
            if p == 0 {
                return Err(CliError::Invalid("--p must be at least 1".into()));
            }
            let design = random_design(&mut rng, n, p);
            ModelSpec::LinearGaussian { design, noise_var: args.noise_var }
        }
        ModelKind::Sinusoid => {
            check_p(3)?;
            ModelSpec::Sinusoid {
                amplitude: 1.0,
                frequency: rng.random_range(2.0..6.0) * std::f64::consts::PI,
                phase: rng.random_range(0.0..std::f64::consts::PI),
                noise_var: args.noise_var,
                grid: uniform_grid(need_n()?),
            }
        }
        ModelKind::Exponential => {
            check_p(2)?;
            ModelSpec::ExponentialDecay {
                amplitude: 1.0,
                rate: rng.random_range(1.0..5.0),
                noise_var: args.noise_var,
                grid: uniform_grid(need_n()?),
            }
        }
        ModelKind::Explicit => {
            let path = args
                .fims
                .as_ref()
                .ok_or_else(|| CliError::Invalid("--fims is required for the explicit model".into()))?;
            ModelSpec::Explicit { fims: read_explicit_fims(path)? }
        }
    };
    let fims = model.fims()?;
    let p = fims.first().map(SymMatrix::dim).or(args.p).unwrap_or(1);
    let psi = args.psi.clone().unwrap_or_else(|| vec![1.0; p]);
    let mut instance = sample_design::ProblemInstance::new(args.k, fims, psi);
    instance.p = p;
    instance.labels = model.labels();
    validate_instance(&instance).into_result()?;
    write_file(&args.out, instance_to_json(&instance)?.as_bytes())?;
    draft.write(args.manifest.as_deref(), vec![args.out.clone()])?;
    Ok(Outcome::Done)
}

pub fn validate(args: &ValidateArgs) -> Result<Outcome, CliError> {
    let instance = load_instance(&args.instance)?;
    let opts = ValidationOptions { allow_zero_psi: args.allow_zero_psi, ..Default::default() };
    let report = validate_with(&instance, &opts);
    println!("{report}");
    report.into_result()?;
    Ok(Outcome::Done)
}

#[derive(Serialize)]
struct SolveOutput<'a> {
    #[serde(flatten)]
    result: &'a SolverResult,
    relative_gap: f64,
    config: &'a SolverConfig,
}

pub fn solve(args: &SolveArgs) -> Result<Outcome, CliError> {
    let config = args.solver.config();
    let draft = ManifestDraft::new(
        "solve",
        Some(&args.instance),
        serde_json::to_value(&config).unwrap_or(Value::Null),
        None,
    );
    let instance = load_instance(&args.instance)?;
    validate_instance(&instance).into_result()?;
    let result = run_solver(&instance, &config)?;
    let out = SolveOutput {
        result: &result,
        relative_gap: result.relative_gap(),
        config: &config,
    };
    write_file(&args.out, to_json(&out)?.as_bytes())?;
    let mut artifacts = vec![args.out.clone()];
    if let Some(trace) = &args.trace {
        let mut buf = Vec::new();
        write_trace(&result.trace, &mut buf)?;
        write_file(trace, &buf)?;
        artifacts.push(trace.clone());
    }
    println!(
        "selected {:?} primal {} best_dual {} gap {} iterations {}{}",
        result.selected,
        result.primal_rounded,
        result.best_dual,
        result.gap,
        result.iterations,
        if result.converged { "" } else { " (not converged)" }
    );
    draft.write(args.manifest.as_deref(), artifacts)?;
    Ok(if result.converged { Outcome::Done } else { Outcome::IterationCapped })
}

pub fn oracle(args: &OracleArgs) -> Result<Outcome, CliError> {
    let cfg = OracleConfig { cap: args.oracle_cap, ..Default::default() };
    let draft = ManifestDraft::new(
        "oracle",
        Some(&args.instance),
        serde_json::json!({ "oracle_cap": args.oracle_cap.to_string(), "tie_tol": cfg.tie_tol }),
        None,
    );
    let instance = load_instance(&args.instance)?;
    let res = exhaustive_best_subset(&instance, &cfg)?;
    println!(
        "best subset {:?} value {} ({} subsets, {} singular, {} tied)",
        res.best_subset,
        res.best_value,
        res.evaluated,
        res.singular_skipped,
        res.ties.len()
    );
    let mut artifacts = Vec::new();
    if let Some(out) = &args.out {
        write_file(out, to_json(&res)?.as_bytes())?;
        artifacts.push(out.clone());
    }
    draft.write(args.manifest.as_deref(), artifacts)?;
    Ok(Outcome::Done)
}

pub fn compare(args: &CompareArgs) -> Result<Outcome, CliError> {
    let solver = args.solver.config();
    let oracle = OracleConfig { cap: args.oracle_cap, ..Default::default() };
    let draft = ManifestDraft::new(
        "compare",
        args.instance.as_deref(),
        serde_json::json!({
            "solver": serde_json::to_value(&solver).unwrap_or(Value::Null),
            "oracle_cap": args.oracle_cap.to_string(),
            "batch": args.batch,
        }),
        args.batch.map(|_| args.seed),
    );
    let report: CompareReport = match (&args.instance, args.batch) {
        (Some(path), _) => {
            let instance = load_instance(path)?;
            summarize(vec![compare_instance(0, &instance, &solver, &oracle)?])
        }
        (None, Some(count)) => compare_batch(count, args.seed, &solver, &oracle)?,
        (None, None) => return Err(CliError::Invalid("one of --instance or --batch is required".into())),
    };
    for c in &report.instances {
        println!(
            "#{:<4} n={:<3} k={} p={} solver {:.12e} oracle {:.12e} excess {:.3e} match {} dual {:.12e} weak-duality {}",
            c.index,
            c.n,
            c.k,
            c.p,
            c.solver_value,
            c.oracle_value,
            c.relative_excess,
            c.subsets_match,
            c.best_dual,
            if c.weak_duality_holds { "ok" } else { "VIOLATED" },
        );
    }
    let s = &report.summary;
    println!(
        "instances {} matches {} match-rate {:.4} max-excess {:.6e} weak-duality-violations {}",
        s.count, s.matches, s.match_rate, s.max_relative_excess, s.weak_duality_violations
    );
    let mut artifacts = Vec::new();
    if let Some(out) = &args.out {
        write_file(out, to_json(&report)?.as_bytes())?;
        artifacts.push(out.clone());
    }
    draft.write(args.manifest.as_deref(), artifacts)?;
    if s.weak_duality_violations > 0 {
        return Err(CliError::Internal(format!(
            "weak duality violated on {} instance(s)",
            s.weak_duality_violations
        )));
    }
    Ok(Outcome::Done)
}
