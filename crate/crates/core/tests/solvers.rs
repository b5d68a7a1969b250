//! End-to-end behaviour of the case solvers on small fixtures.

use std::sync::Arc;

use pqspectra_core::energy::{constraint_g1, constraint_g2, estimate_c_star, phi, phi_grad};
use pqspectra_core::random::{smooth_field, task_rng};
use pqspectra_core::solvers::*;
use pqspectra_core::*;

fn mesh(n: usize, side: f64) -> Arc<MeshDomain> {
    Arc::new(build_rectangle_mesh(side, side, n, n).unwrap())
}

fn cfg(m: &Arc<MeshDomain>, p: f64, q: f64, r: FieldSpec, beta: f64, lambda: f64) -> ProblemConfig {
    let c = |v: f64| FieldSpec::Constant(v);
    ProblemConfig::from_specs(m.clone(), &c(p), &c(q), &r, &c(1.0), &c(beta), &c(beta), lambda).unwrap()
}

fn sublinear(n: usize) -> ProblemConfig {
    cfg(&mesh(n, 1.0), 2.0, 3.0, 1.5.into(), 1.0, 1.0)
}

fn homogeneous(n: usize, p: f64, q: f64, lambda: f64) -> ProblemConfig {
    cfg(&mesh(n, 1.0), p, q, q.into(), 0.0, lambda)
}

/// A converged report must be re-verifiable from `(u, cfg)` alone.
fn replay(rep: &SolveReport, cfg: &ProblemConfig) {
    let g = phi_grad(&rep.u, cfg).unwrap();
    assert_eq!(g.relative_residual, rep.residual);
    assert_eq!(phi(&rep.u, cfg).unwrap(), rep.energy);
    if rep.converged {
        assert!(g.is_stationary(cfg.tolerances.residual, cfg.tolerances.residual_abs));
    }
}

#[test]
fn descent_on_the_sublinear_fixture() {
    let c = sublinear(16);
    let u0 = DiscreteFunction::new(c.mesh.clone(), smooth_field(&c.mesh, 3, &mut task_rng(5, 0))).unwrap();
    let rep = minimize_descent(&c, &u0, 20_000).unwrap();
    assert!(rep.converged && rep.nontrivial && rep.energy < 0.0);
    replay(&rep, &c);
    assert!(rep.trace.windows(2).all(|w| w[1].energy <= w[0].energy + 1e-14 * w[0].energy.abs()));
}

#[test]
fn sublinear_family_is_sorted_deduplicated_and_negative() {
    let c = sublinear(16);
    let fam = solve_sublinear_family(&c, 3).unwrap();
    assert!(fam.len() >= 2);
    for r in &fam {
        assert!(r.found() && r.energy < 0.0);
        replay(r, &c);
    }
    assert!(fam.windows(2).all(|w| w[0].u_norm <= w[1].u_norm));
    for (i, a) in fam.iter().enumerate() {
        for b in &fam[i + 1..] {
            assert!(a.u.max_distance(&b.u) >= 1e-6);
        }
    }
}

#[test]
fn ball_minimiser_on_the_plateau_fixture() {
    let m = mesh(16, 1.0);
    let r = FieldSpec::Expression("2.5 - min(1, min(min(x, 1 - x), min(y, 1 - y)) / 0.1)".into());
    let c = cfg(&m, 2.0, 3.0, r, 1.0, 1.0);
    assert_eq!(classify_case(&c), CaseClass::SmallLambdaB);
    let th = estimate_c_star(&c, 4, 0).unwrap();
    let c = c.with_lambda(th.safe_lambda().unwrap());
    let b = minimize_in_ball(&c, &th).unwrap();
    assert!(b.interior && b.report.found() && b.report.energy < 0.0);
    assert!(b.sphere_energies.len() >= 32 && b.sphere_energies.iter().all(|&e| e > 0.0));
    assert!(b.report.energy >= b.lower_bound);
}

#[test]
fn ball_minimiser_rejects_lambda_above_the_cap() {
    let m = mesh(8, 1.0);
    let r = FieldSpec::Expression("2.5 - min(1, min(min(x, 1 - x), min(y, 1 - y)) / 0.1)".into());
    let c = cfg(&m, 2.0, 3.0, r, 1.0, 1.0);
    let th = estimate_c_star(&c, 2, 0).unwrap();
    let c = c.with_lambda(2.0 * th.lambda_cap.unwrap());
    assert!(matches!(minimize_in_ball(&c, &th), Err(Error::Precondition(_))));
}

#[test]
fn mountain_pass_keeps_endpoints_and_finds_a_saddle() {
    let c = cfg(&mesh(10, 1.0), 2.0, 2.5, 4.0.into(), 1.0, 1.0);
    let zeta = mountain_endpoint(&c).unwrap();
    assert!(phi(&zeta, &c).unwrap() < 0.0);
    let s = mountain_pass(&c, &zeta, 21, 1).unwrap();
    assert_eq!(s.path_energies.len(), 21);
    assert_eq!(s.path_energies[0], 0.0);
    assert_eq!(*s.path_energies.last().unwrap(), phi(&zeta, &c).unwrap());
    assert!(s.report.found() && s.report.energy >= s.geometry.b && s.geometry.b > 0.0);
    assert!(s.nehari_defect < 1e-6);
    replay(&s.report, &c);
}

#[test]
fn nehari_minimiser_is_feasible_and_satisfies_the_energy_identity() {
    let c = homogeneous(12, 2.5, 4.0, 1.0);
    let sigma = sigma_threshold(&c, ConstraintSpace::Cq, 2, 0).unwrap();
    let c = c.with_lambda(2.0 * sigma);
    let rep = nehari_minimize(&c, 2, 0).unwrap();
    assert!(rep.found() && rep.energy > 0.0);
    replay(&rep, &c);
    let scale = c.lambda * pqspectra_core::spaces::lebesgue_modular(&rep.u, &ExponentField::constant(&c.mesh, 4.0).unwrap()).unwrap();
    assert!(constraint_g1(&rep.u, &c).unwrap().abs() < 1e-8 * scale);
    assert!(constraint_g2(&rep.u, &c.alpha, 4.0).unwrap().abs() < 1e-8 * scale);
    assert!(energy_identity_defect(&rep.u, &c).unwrap() < 1e-8);
    let Some(Multipliers::Nehari { c: cm, d, .. }) = rep.multipliers else { panic!("missing multipliers") };
    assert!(cm.abs() < 1e-6 && d.abs() < 1e-6);
}

#[test]
fn lagrange_residual_grows_with_perturbation() {
    let c = homogeneous(10, 2.5, 4.0, 1.0);
    let sigma = sigma_threshold(&c, ConstraintSpace::Cq, 1, 0).unwrap();
    let c = c.with_lambda(2.0 * sigma);
    let rep = nehari_minimize(&c, 1, 0).unwrap();
    let base = lagrange_residuals(&rep.u, &c).unwrap();
    let q2 = 4.0 - 1.0;
    let alpha_mass: f64 = rep.u.values().iter().zip(c.mesh.node_weights()).map(|(v, w)| w * v.abs().powf(2.0)).sum();
    assert!((base.b_coefficient - q2 * alpha_mass).abs() < 1e-12 * base.b_coefficient);
    let dir = DiscreteFunction::new(c.mesh.clone(), smooth_field(&c.mesh, 3, &mut task_rng(9, 0))).unwrap();
    let mut last = base.stationarity;
    for eps in [1e-4, 1e-3, 1e-2, 1e-1] {
        let s = lagrange_residuals(&rep.u.axpby(1.0, &dir, eps), &c).unwrap().stationarity;
        assert!(s > last, "eps {eps}: {s} <= {last}");
        last = s;
    }
}

#[test]
fn constrained_minimiser_above_and_below_threshold() {
    let c = homogeneous(12, 4.0, 3.0, 1.0);
    let sigma = sigma_threshold(&c, ConstraintSpace::C, 2, 0).unwrap();
    let above = constrained_global_minimize(&c.with_lambda(2.0 * sigma), 0).unwrap();
    assert!(above.found() && above.energy < 0.0);
    let Some(Multipliers::Single { a, .. }) = above.multipliers else { panic!("missing multiplier") };
    assert!(a.abs() < 1e-6);
    let below = constrained_global_minimize(&c.with_lambda(0.5 * sigma), 0).unwrap();
    assert!(!below.found());
}

#[test]
fn sigma_scales_with_the_square_of_the_domain() {
    let unit = homogeneous(24, 1.5, 2.0, 1.0);
    let big = cfg(&mesh(24, 2.0), 1.5, 2.0, 2.0.into(), 0.0, 1.0);
    let a = sigma_threshold(&unit, ConstraintSpace::Cq, 1, 0).unwrap();
    let b = sigma_threshold(&big, ConstraintSpace::Cq, 1, 0).unwrap();
    assert!((b / a - 0.25).abs() < 0.02 * 0.25);
}

#[test]
fn sigma_is_stable_across_seeds() {
    let c = homogeneous(12, 2.5, 4.0, 1.0);
    let v: Vec<f64> = (0..5).map(|s| sigma_threshold(&c, ConstraintSpace::Cq, 1, s).unwrap()).collect();
    let (lo, hi) = v.iter().fold((f64::INFINITY, 0.0f64), |(l, h), &x| (l.min(x), h.max(x)));
    assert!(lo > 0.0 && (hi - lo) / lo < 0.05, "{v:?}");
}

#[test]
fn scaling_alpha_against_lambda_leaves_solutions_unchanged() {
    let c = homogeneous(10, 2.5, 4.0, 1.0);
    let sigma = sigma_threshold(&c, ConstraintSpace::Cq, 1, 0).unwrap();
    let c = c.with_lambda(2.0 * sigma);
    let rep = nehari_minimize(&c, 1, 0).unwrap();
    let mut scaled = c.with_lambda(c.lambda / 3.0);
    scaled.alpha = c.alpha.scaled(3.0);
    let g = phi_grad(&rep.u, &scaled).unwrap();
    assert!(g.relative_residual < 1e-7);
    assert!((phi(&rep.u, &scaled).unwrap() - rep.energy).abs() < 1e-10 * rep.energy);
}

#[test]
fn sweep_brackets_the_threshold() {
    let c = homogeneous(10, 2.5, 4.0, 1.0);
    let sigma = sigma_threshold(&c, ConstraintSpace::Cq, 2, 0).unwrap();
    let rows = eigen_sweep(&c, &[2.0 * sigma, 0.5 * sigma], &SweepOptions { restarts: 2, seed: 0, sigma_ref: Some(sigma) })
        .unwrap();
    assert!(rows[0].lambda < rows[1].lambda);
    assert!(!rows[0].found && rows[1].found);
    assert!(rows.iter().all(|r| r.sigma_ref == sigma && !r.monotonicity_violation));
    let one = eigen_sweep(&c, &[sigma], &SweepOptions { restarts: 1, seed: 0, sigma_ref: Some(sigma) }).unwrap();
    assert_eq!(one.len(), 1);
}

#[test]
fn sequential_and_parallel_runs_agree() {
    let mut c = homogeneous(8, 2.5, 4.0, 1.0);
    let opts = SweepOptions { restarts: 2, seed: 3, sigma_ref: None };
    let grid = geometric_grid(10.0, 200.0, 4);
    let par = eigen_sweep(&c, &grid, &opts).unwrap();
    c.execution = Execution::Sequential;
    let seq = eigen_sweep(&c, &grid, &opts).unwrap();
    for (a, b) in par.iter().zip(&seq) {
        assert_eq!(a.found, b.found);
        assert_eq!(a.energy.to_bits(), b.energy.to_bits());
        assert_eq!(a.sigma_ref.to_bits(), b.sigma_ref.to_bits());
    }
}
