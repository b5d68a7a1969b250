//! The three subcommands. Each returns an [`Outcome`] once its artifacts are
//! written; configuration and validation problems surface as [`CliError`].

use std::path::Path;

use pqspectra_core::energy::{coercivity_constants, estimate_c_star};
use pqspectra_core::solvers::{
    constrained_global_minimize, eigen_sweep, found_violations, geometric_grid, minimize_in_ball, mountain_endpoint,
    mountain_pass, nehari_minimize, sample_mountain_geometry, sigma_estimate, solve_sublinear_family,
    ConstraintSpace, SolveReport, SweepOptions,
};
use pqspectra_core::{classify_case, CaseClass, Error, ProblemConfig};
use serde_json::{json, Value};

use crate::config::{RunConfig, Spacing};
use crate::output::OutputDir;
use crate::CliError;

pub const EXIT_OK: i32 = 0;
pub const EXIT_UNCONVERGED: i32 = 2;

#[derive(Debug, Clone)]
pub struct Outcome {
    pub exit_code: i32,
    pub message: String,
    pub config_hash: String,
}

/// Solver failures that mean "ran, found nothing" rather than "bad input".
fn is_solver_failure(e: &Error) -> bool {
    matches!(
        e,
        Error::BelowThreshold(_)
            | Error::Geometry(_)
            | Error::PathCollapse(_)
            | Error::Singular(_)
            | Error::NonFiniteEnergy(_)
    )
}

fn resolve_case(run: &RunConfig, cfg: &ProblemConfig) -> Result<CaseClass, CliError> {
    let case = run.case_override()?.unwrap_or_else(|| classify_case(cfg));
    if case == CaseClass::Unclassified {
        return Err(CliError::Config(format!(
            "the data satisfy none of the case hypotheses (p in [{}, {}], q in [{}, {}], r in [{}, {}])",
            cfg.p.inf(),
            cfg.p.sup(),
            cfg.q.inf(),
            cfg.q.sup(),
            cfg.r.inf(),
            cfg.r.sup()
        )));
    }
    Ok(case)
}

fn require_lambda(run: &RunConfig) -> Result<f64, CliError> {
    run.problem
        .lambda
        .ok_or_else(|| CliError::Config("problem.lambda is required for this case".into()))
}

struct Solved {
    primary: Option<SolveReport>,
    extra: Value,
    failure: Option<String>,
}

fn solve_case(run: &RunConfig, case: CaseClass) -> Result<Solved, CliError> {
    let s = &run.solver;
    let solved = |rep: SolveReport, extra: Value| Solved { primary: Some(rep), extra, failure: None };
    let result: Result<Solved, Error> = match case {
        CaseClass::SublinearA => {
            let cfg = run.problem(Some(require_lambda(run)?))?;
            solve_sublinear_family(&cfg, s.family).map(|fam| {
                let family: Vec<Value> = fam
                    .iter()
                    .map(|r| json!({ "seed_amplitude": r.seed_amplitude, "summary": r.summary() }))
                    .collect();
                let primary = fam.iter().min_by(|a, b| a.energy.total_cmp(&b.energy)).cloned();
                let failure = primary.is_none().then(|| "no seed converged to a nontrivial solution".to_string());
                Solved { primary, extra: json!({ "family": family }), failure }
            })
        }
        CaseClass::SmallLambdaB => {
            let base = run.problem(None)?;
            let th = estimate_c_star(&base, s.probes, s.seed)?;
            let lambda = match run.problem.lambda {
                Some(l) => l,
                None => th
                    .safe_lambda()
                    .ok_or_else(|| CliError::Config("no lambda cap available; set problem.lambda".into()))?,
            };
            let cfg = base.with_lambda(lambda);
            minimize_in_ball(&cfg, &th).map(|b| {
                let extra = json!({
                    "thresholds": th,
                    "rho": b.rho,
                    "lower_bound": b.lower_bound,
                    "interior": b.interior,
                    "sphere_energy_min": b.sphere_energies.iter().copied().fold(f64::INFINITY, f64::min),
                    "sphere_samples": b.sphere_energies.len(),
                });
                solved(b.report, extra)
            })
        }
        CaseClass::SuperlinearC => {
            let cfg = run.problem(Some(require_lambda(run)?))?;
            mountain_endpoint(&cfg)
                .and_then(|zeta| mountain_pass(&cfg, &zeta, s.path_points, s.seed))
                .map(|mp| {
                    let extra = json!({
                        "geometry": mp.geometry,
                        "path_max_energy": mp.path_max_energy,
                        "path_energies": mp.path_energies,
                        "nehari_defect": mp.nehari_defect,
                    });
                    solved(mp.report, extra)
                })
        }
        CaseClass::HomogeneousPPlusLtQ => {
            let cfg = run.problem(Some(require_lambda(run)?))?;
            nehari_minimize(&cfg, s.restarts, s.seed).map(|r| solved(r, json!({})))
        }
        CaseClass::HomogeneousQLtPMinus => {
            let cfg = run.problem(Some(require_lambda(run)?))?;
            constrained_global_minimize(&cfg, s.seed).map(|r| solved(r, json!({})))
        }
        CaseClass::Unclassified => unreachable!("rejected by resolve_case"),
    };
    match result {
        Ok(s) => Ok(s),
        Err(e) if is_solver_failure(&e) => Ok(Solved { primary: None, extra: json!({}), failure: Some(e.to_string()) }),
        Err(e) => Err(e.into()),
    }
}

/// `solve`: writes `report.json`, `solution.field` and `trace.csv`.
pub fn cmd_solve(run: &RunConfig, out: &Path) -> Result<Outcome, CliError> {
    let hash = run.hash();
    let case = resolve_case(run, &run.problem(None)?)?;
    let dir = OutputDir::create(out, hash.clone())?;
    let solved = solve_case(run, case)?;
    let found = solved.primary.as_ref().is_some_and(SolveReport::found);
    let mut report = json!({
        "command": "solve",
        "case": case,
        "seed": run.solver.seed,
        "found": found,
        "summary": solved.primary.as_ref().map(SolveReport::summary),
        "failure": solved.failure,
    });
    if let (Value::Object(r), Value::Object(extra)) = (&mut report, solved.extra) {
        r.extend(extra);
    }
    dir.json("report.json", &report)?;
    let message = match &solved.primary {
        Some(rep) => {
            dir.field("solution.field", rep)?;
            dir.trace("trace.csv", rep)?;
            format!(
                "{case}: lambda = {:e}, energy = {:e}, residual = {:e}, ||u|| = {:e}, {}",
                rep.lambda,
                rep.energy,
                rep.residual,
                rep.u_norm,
                if found { "converged" } else { "NOT converged to a nontrivial solution" }
            )
        }
        None => format!("{case}: no solution: {}", solved.failure.as_deref().unwrap_or("unknown failure")),
    };
    Ok(Outcome { exit_code: if found { EXIT_OK } else { EXIT_UNCONVERGED }, message, config_hash: hash })
}

fn homogeneous_space(case: CaseClass) -> Result<ConstraintSpace, CliError> {
    ConstraintSpace::for_case(case)
        .ok_or_else(|| CliError::Config(format!("this command needs a homogeneous case, got {case}")))
}

/// `sweep`: writes `sweep.csv` (one row per lambda, ascending) and `report.json`.
pub fn cmd_sweep(run: &RunConfig, out: &Path) -> Result<Outcome, CliError> {
    let hash = run.hash();
    let grid_cfg = run
        .sweep
        .as_ref()
        .ok_or_else(|| CliError::Config("sweep.min, sweep.max and sweep.steps are required".into()))?;
    let cfg = run.problem(None)?;
    let case = resolve_case(run, &cfg)?;
    let space = homogeneous_space(case)?;
    let dir = OutputDir::create(out, hash.clone())?;
    let s = &run.solver;
    let sigma = sigma_estimate(&cfg, space, s.restarts, s.seed)?;
    let unit = if grid_cfg.relative_to_sigma { sigma.value } else { 1.0 };
    let (lo, hi) = (grid_cfg.min * unit, grid_cfg.max * unit);
    let lambdas = match grid_cfg.spacing {
        Spacing::Geometric => geometric_grid(lo, hi, grid_cfg.steps),
        Spacing::Linear if grid_cfg.steps == 1 => vec![lo],
        Spacing::Linear => {
            (0..grid_cfg.steps).map(|k| lo + (hi - lo) * k as f64 / (grid_cfg.steps - 1) as f64).collect()
        }
    };
    let opts = SweepOptions { restarts: s.restarts, seed: s.seed, sigma_ref: Some(sigma.value) };
    let rows = eigen_sweep(&cfg, &lambdas, &opts)?;
    dir.sweep("sweep.csv", &rows)?;
    let violations = found_violations(&rows);
    dir.json(
        "report.json",
        &json!({
            "command": "sweep",
            "case": case,
            "seed": s.seed,
            "constraint_space": space,
            "sigma": { "value": sigma.value, "spread": sigma.spread, "restarts": sigma.restarts },
            "monotonicity_violations": violations,
            "rows": rows,
        }),
    )?;
    let found = rows.iter().filter(|r| r.found).count();
    Ok(Outcome {
        exit_code: EXIT_OK,
        message: format!(
            "{case}: sigma = {:e}; {found}/{} lambda points found; {} monotonicity violations",
            sigma.value,
            rows.len(),
            violations.len()
        ),
        config_hash: hash,
    })
}

/// `thresholds`: writes `thresholds.json` with the constants relevant to the case.
pub fn cmd_thresholds(run: &RunConfig, out: &Path) -> Result<Outcome, CliError> {
    let hash = run.hash();
    let cfg = run.problem(None)?;
    let case = resolve_case(run, &cfg)?;
    let dir = OutputDir::create(out, hash.clone())?;
    let s = &run.solver;
    let (body, message) = match case {
        CaseClass::HomogeneousPPlusLtQ | CaseClass::HomogeneousQLtPMinus => {
            let space = homogeneous_space(case)?;
            let sigma = sigma_estimate(&cfg, space, s.restarts, s.seed)?;
            (
                json!({
                    "sigma": { "constraint_space": space, "value": sigma.value, "spread": sigma.spread, "restarts": sigma.restarts },
                }),
                format!("{case}: sigma = {:e} (spread {:e})", sigma.value, sigma.spread),
            )
        }
        CaseClass::SuperlinearC => {
            let cfg = cfg.with_lambda(require_lambda(run)?);
            let zeta = mountain_endpoint(&cfg)?;
            let g = sample_mountain_geometry(&cfg, &zeta, s.seed)?;
            let msg = format!("{case}: eta = {:e}, b = {:e}", g.eta, g.b);
            (json!({ "mountain_geometry": g }), msg)
        }
        CaseClass::SublinearA | CaseClass::SmallLambdaB => {
            let th = estimate_c_star(&cfg, s.probes, s.seed)?;
            let mut body = json!({ "c_star": th, "safe_lambda": th.safe_lambda() });
            if case == CaseClass::SublinearA {
                if let Some(l) = run.problem.lambda {
                    body["coercivity"] = json!(coercivity_constants(&cfg.with_lambda(l))?);
                }
            }
            let msg = format!(
                "{case}: C* >= {:e}, rho = {:e}, Lambda = {}",
                th.c_star_lower,
                th.rho,
                th.lambda_cap.map_or("n/a".to_string(), |l| format!("{l:e}"))
            );
            (body, msg)
        }
        CaseClass::Unclassified => unreachable!("rejected by resolve_case"),
    };
    let mut body = body;
    body["command"] = json!("thresholds");
    body["case"] = json!(case);
    body["seed"] = json!(s.seed);
    body["subcritical_margin"] = json!(cfg.subcritical_margin());
    dir.json("thresholds.json", &body)?;
    Ok(Outcome { exit_code: EXIT_OK, message, config_hash: hash })
}
