//! Unconstrained and ball-constrained minimisation of the energy.

use std::sync::Arc;

use crate::energy::{Energy, GradientAssembly, ThresholdReport};
use crate::error::{Error, Result};
use crate::fields::{classify_case, CaseClass, ProblemConfig};
use crate::linalg::Preconditioner;
use crate::mesh::{Axis, MeshDomain};
use crate::random::{smooth_field, task_rng};
use crate::spaces::DiscreteFunction;

use super::descent::{self, Grad, Objective};
use super::{settings, SolveReport};

/// Reflection parity `(x, y)`: `+1` even, `-1` odd under the mirror of that axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SymmetryClass {
    pub x: i8,
    pub y: i8,
}

/// Seed parities in the order they are used: even-even, x-odd, xy-odd, y-odd.
pub const SYMMETRY_CLASSES: [SymmetryClass; 4] = [
    SymmetryClass { x: 1, y: 1 },
    SymmetryClass { x: -1, y: 1 },
    SymmetryClass { x: -1, y: -1 },
    SymmetryClass { x: 1, y: -1 },
];

impl SymmetryClass {
    /// Orthogonal projection onto the parity class (average over the reflection group).
    pub(crate) fn project(&self, mesh: &MeshDomain, v: &mut [f64]) {
        let n = v.len();
        let src = v.to_vec();
        let (sx, sy) = (f64::from(self.x), f64::from(self.y));
        for i in 0..n {
            let ix = mesh.mirror_node(i, Axis::X);
            let iy = mesh.mirror_node(i, Axis::Y);
            let ixy = mesh.mirror_node(ix, Axis::Y);
            v[i] = 0.25 * (src[i] + sx * src[ix] + sy * src[iy] + sx * sy * src[ixy]);
        }
    }
}

/// Energy with optional parity restriction and radial retraction onto a ball.
struct EnergyObjective<'a> {
    energy: Energy<'a>,
    symmetry: Option<SymmetryClass>,
    ball: Option<f64>,
}

impl<'a> EnergyObjective<'a> {
    fn new(cfg: &'a ProblemConfig) -> Self {
        Self { energy: Energy::new(cfg), symmetry: None, ball: None }
    }
}

pub(crate) fn grad_of(a: GradientAssembly) -> Grad {
    Grad { relative: a.relative_residual, absolute: a.residual_norm, covector: a.nodal_covector }
}

impl Objective for EnergyObjective<'_> {
    fn value(&self, x: &[f64]) -> f64 {
        self.energy.value(x)
    }

    fn gradient(&self, x: &[f64]) -> Grad {
        grad_of(self.energy.gradient(x))
    }

    fn retract(&self, mut x: Vec<f64>) -> Option<Vec<f64>> {
        if let Some(s) = self.symmetry {
            s.project(&self.energy.cfg.mesh, &mut x);
        }
        if let Some(rho) = self.ball {
            let n = self.energy.m1_norm(&x);
            if !n.is_finite() {
                return None;
            }
            if n > rho {
                let c = rho / n;
                x.iter_mut().for_each(|v| *v *= c);
            }
        }
        Some(x)
    }

    fn project_direction(&self, d: &mut [f64]) {
        if let Some(s) = self.symmetry {
            s.project(&self.energy.cfg.mesh, d);
        }
    }
}

/// Log-spaced amplitudes `10^{k/4}` for `k` in `[-40, 12]`.
fn amplitude_grid() -> impl Iterator<Item = f64> {
    (-40..=12).map(|k| 10f64.powf(k as f64 / 4.0))
}

/// Amplitude `t` on the grid minimising `Phi(t v)`, if that minimum is negative.
fn best_negative_scaling(energy: &Energy<'_>, v: &[f64], admissible: impl Fn(f64) -> bool) -> Option<(f64, f64)> {
    amplitude_grid()
        .filter(|&t| admissible(t))
        .map(|t| {
            let tv: Vec<f64> = v.iter().map(|a| t * a).collect();
            (t, energy.value(&tv))
        })
        .filter(|(_, e)| e.is_finite() && *e < 0.0)
        .min_by(|a, b| a.1.total_cmp(&b.1))
}

fn case_of(cfg: &ProblemConfig) -> CaseClass {
    classify_case(cfg)
}

/// Gradient descent with Armijo backtracking from `u0`.
///
/// From `u0 = 0`, where the derivative vanishes, the iteration starts at the
/// best negative-energy multiple of the constant function when one exists.
pub fn minimize_descent(cfg: &ProblemConfig, u0: &DiscreteFunction, max_iter: usize) -> Result<SolveReport> {
    u0.check_same_mesh(cfg.mesh.shape())?;
    cfg.check_subcritical()?;
    let obj = EnergyObjective::new(cfg);
    let mut x0 = u0.values().to_vec();
    if u0.is_zero() {
        let ones = vec![1.0; x0.len()];
        if let Some((t, _)) = best_negative_scaling(&obj.energy, &ones, |_| true) {
            x0 = vec![t; x0.len()];
        }
    }
    run(cfg, obj, x0, max_iter)
}

fn run(cfg: &ProblemConfig, obj: EnergyObjective<'_>, x0: Vec<f64>, max_iter: usize) -> Result<SolveReport> {
    let metric = Preconditioner::sobolev(&cfg.mesh);
    let mut s = settings(cfg);
    s.max_iter = max_iter;
    let out = descent::minimize(&obj, &metric, x0, s);
    if out.status == descent::Status::NonFinite {
        return Err(Error::NonFiniteEnergy(format!("descent diverged after {} iterations", out.iterations)));
    }
    let mut rep = SolveReport::from_outcome(cfg, out, case_of(cfg));
    if rep.status == super::SolveStatus::LineSearchFailed {
        rep.diagnostic = Some("line search could not decrease the energy".into());
    }
    Ok(rep)
}

/// `k` bumps with pairwise disjoint nodal supports, each a product of sines on
/// its own lattice-aligned sub-rectangle and zero elsewhere.
pub fn disjoint_support_seeds(m: &Arc<MeshDomain>, k: usize, amplitude: f64) -> Result<Vec<DiscreteFunction>> {
    if k == 0 {
        return Ok(Vec::new());
    }
    let s = m.shape();
    let cols = (k as f64).sqrt().ceil() as usize;
    let rows = k.div_ceil(cols);
    if s.nx / cols < 2 || s.ny / rows < 2 {
        return Err(Error::Precondition(format!(
            "{k} disjoint bumps need a {cols}x{rows} layout of sub-rectangles at least 2 cells wide; mesh is {}x{}",
            s.nx, s.ny
        )));
    }
    let (hx, hy) = (s.lx / s.nx as f64, s.ly / s.ny as f64);
    let pi = std::f64::consts::PI;
    Ok((0..k)
        .map(|j| {
            let (cx, cy) = (j % cols, j / cols);
            let x0 = (cx * s.nx / cols) as f64 * hx;
            let x1 = ((cx + 1) * s.nx / cols) as f64 * hx;
            let y0 = (cy * s.ny / rows) as f64 * hy;
            let y1 = ((cy + 1) * s.ny / rows) as f64 * hy;
            DiscreteFunction::from_fn(m.clone(), |x, y| {
                if x <= x0 || x >= x1 || y <= y0 || y >= y1 {
                    0.0
                } else {
                    amplitude * (pi * (x - x0) / (x1 - x0)).sin() * (pi * (y - y0) / (y1 - y0)).sin()
                }
            })
        })
        .collect())
}

/// Descent from parity-patterned combinations of the four quadrant bumps.
///
/// Seed `j` carries the sign pattern of [`SYMMETRY_CLASSES`]`[j]` and amplitude
/// `2^{-j}`. When the mesh and every field are mirror symmetric, each run is
/// restricted to its seed's parity class; by symmetry of the energy, a
/// critical point within the class is a critical point overall, which the
/// reported residual (from the unrestricted derivative) confirms.
pub fn solve_sublinear_family(cfg: &ProblemConfig, k: usize) -> Result<Vec<SolveReport>> {
    if classify_case(cfg) != CaseClass::SublinearA {
        return Err(Error::Precondition(format!("sublinear family needs the Sublinear-A case, got {}", classify_case(cfg))));
    }
    if k == 0 || k > SYMMETRY_CLASSES.len() {
        return Err(Error::Precondition(format!("seed count must be in 1..=4, got {k}")));
    }
    let bumps = disjoint_support_seeds(&cfg.mesh, 4, 1.0)?;
    let symmetric = cfg.is_mirror_symmetric(Axis::X) && cfg.is_mirror_symmetric(Axis::Y);
    let runs = cfg.execution.map_indexed(k, |j| {
        let class = SYMMETRY_CLASSES[j];
        let amplitude = 0.5f64.powi(j as i32);
        let mut x0 = vec![0.0; cfg.mesh.num_nodes()];
        for (b, bump) in bumps.iter().enumerate() {
            let (cx, cy) = (b % 2, b / 2);
            let sign = f64::from(if cx == 1 { class.x } else { 1 }) * f64::from(if cy == 1 { class.y } else { 1 });
            for (xi, bi) in x0.iter_mut().zip(bump.values()) {
                *xi += amplitude * sign * bi;
            }
        }
        let mut obj = EnergyObjective::new(cfg);
        if symmetric {
            obj.symmetry = Some(class);
        }
        run(cfg, obj, x0, cfg.tolerances.max_iter).map(|mut r| {
            r.seed_amplitude = Some(amplitude);
            r
        })
    });
    let mut kept: Vec<SolveReport> = Vec::new();
    for rep in runs {
        let rep = rep?;
        if !(rep.found() && rep.energy <= 0.0) {
            continue;
        }
        match kept.iter_mut().find(|k| k.u.max_distance(&rep.u) < 1e-6) {
            Some(existing) if rep.residual < existing.residual => *existing = rep,
            Some(_) => {}
            None => kept.push(rep),
        }
    }
    kept.sort_by(|a, b| a.u_norm.total_cmp(&b.u_norm));
    Ok(kept)
}

/// Result of ball-constrained minimisation together with its geometry checks.
#[derive(Debug, Clone)]
pub struct BallSolution {
    pub report: SolveReport,
    pub rho: f64,
    /// Energies at sampled points of the sphere `||u||_{M,1} = rho` (the first is the constant direction).
    pub sphere_energies: Vec<f64>,
    /// `-lambda alpha^+ (C* rho)^{r^-} / r^-`.
    pub lower_bound: f64,
    /// Minimiser strictly inside the ball.
    pub interior: bool,
}

pub const SPHERE_SAMPLES: usize = 32;

/// Projected descent on `{ ||u||_{M,1} <= rho }` with radial retraction.
pub fn minimize_in_ball(cfg: &ProblemConfig, thresholds: &ThresholdReport) -> Result<BallSolution> {
    let case = classify_case(cfg);
    if case != CaseClass::SmallLambdaB {
        return Err(Error::Precondition(format!("ball minimisation needs the SmallLambda-B case, got {case}")));
    }
    let cap = thresholds
        .lambda_cap
        .ok_or_else(|| Error::Precondition("threshold report carries no lambda cap".into()))?;
    if !(cfg.lambda < cap) {
        return Err(Error::Precondition(format!("lambda = {} is not below Lambda = {cap}", cfg.lambda)));
    }
    let rho = thresholds.rho;
    let mut obj = EnergyObjective::new(cfg);
    obj.ball = Some(rho);
    let n = cfg.mesh.num_nodes();
    let ones = vec![1.0; n];
    let one_norm = obj.energy.m1_norm(&ones);
    let x0 = match best_negative_scaling(&obj.energy, &ones, |t| t * one_norm <= rho) {
        Some((t, _)) => vec![t; n],
        None => vec![0.5 * rho / one_norm; n],
    };
    let sphere_energies = sample_sphere(cfg, rho, SPHERE_SAMPLES, thresholds.seed);
    let report = run(cfg, obj, x0, cfg.tolerances.max_iter)?;
    let interior = report.u_norm < rho * (1.0 - 1e-9);
    let r_inf = cfg.r.inf();
    let lower_bound = -cfg.lambda * cfg.alpha.sup() * (thresholds.c_star_lower * rho).powf(r_inf) / r_inf;
    if !interior {
        return Err(Error::Geometry(format!(
            "minimiser reached the sphere (norm {:e} vs rho {rho:e}); lambda too large or C* underestimated",
            report.u_norm
        )));
    }
    Ok(BallSolution { report, rho, sphere_energies, lower_bound, interior })
}

/// Energies at `count` points of `{ ||u||_{M,1} = radius }`: the constant direction, then random smooth fields.
pub(crate) fn sample_sphere(cfg: &ProblemConfig, radius: f64, count: usize, seed: u64) -> Vec<f64> {
    sample_sphere_with(cfg, radius, count, seed, &[])
}

pub(crate) fn sample_sphere_with(
    cfg: &ProblemConfig,
    radius: f64,
    count: usize,
    seed: u64,
    extra: &[Vec<f64>],
) -> Vec<f64> {
    let energy = Energy::new(cfg);
    let n = cfg.mesh.num_nodes();
    let dirs: Vec<Vec<f64>> = std::iter::once(vec![1.0; n])
        .chain(extra.iter().cloned())
        .chain((0..).map(|i| smooth_field(&cfg.mesh, 3, &mut task_rng(seed, 1000 + i))))
        .take(count.max(1 + extra.len()))
        .collect();
    cfg.execution.map_slice(&dirs, |d| {
        let nrm = energy.m1_norm(d);
        let v: Vec<f64> = d.iter().map(|a| a * radius / nrm).collect();
        energy.value(&v)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::FieldSpec;
    use crate::mesh::build_rectangle_mesh;

    fn sublinear(n: usize, lambda: f64) -> ProblemConfig {
        let m = Arc::new(build_rectangle_mesh(1.0, 1.0, n, n).unwrap());
        let c = |v: f64| FieldSpec::Constant(v);
        ProblemConfig::from_specs(m, &c(2.0), &c(3.0), &c(1.5), &c(1.0), &c(1.0), &c(1.0), lambda).unwrap()
    }

    #[test]
    fn seeds_have_disjoint_supports() {
        let m = Arc::new(build_rectangle_mesh(1.0, 1.0, 16, 16).unwrap());
        let s = disjoint_support_seeds(&m, 2, 1.0).unwrap();
        assert_eq!(s.len(), 2);
        assert!(s[0].values().iter().zip(s[1].values()).all(|(a, b)| a * b == 0.0));
        let one = disjoint_support_seeds(&m, 1, 1.0).unwrap();
        assert!(one[0].values().iter().any(|&v| v > 0.5));
        for &b in m.boundary_nodes() {
            assert_eq!(one[0].values()[b], 0.0);
        }
        assert!(disjoint_support_seeds(&m, 100, 1.0).is_err());
    }

    #[test]
    fn small_multiples_of_seeds_have_negative_energy() {
        let cfg = sublinear(16, 1.0);
        let e = Energy::new(&cfg);
        for s in disjoint_support_seeds(&cfg.mesh, 3, 1.0).unwrap() {
            assert!(best_negative_scaling(&e, s.values(), |_| true).is_some());
        }
    }

    #[test]
    fn descent_from_zero_leaves_zero() {
        let cfg = sublinear(16, 1.0);
        let rep = minimize_descent(&cfg, &DiscreteFunction::zeros(cfg.mesh.clone()), 5000).unwrap();
        assert!(rep.converged, "{:?} residual {} iters {}", rep.status, rep.residual, rep.iterations);
        assert!(rep.energy < 0.0);
        for w in rep.trace.windows(2) {
            assert!(w[1].energy <= w[0].energy + 1e-14 * w[0].energy.abs());
        }
    }

    #[test]
    fn zero_forcing_decays_to_zero() {
        let cfg = sublinear(8, 0.0);
        let u0 = DiscreteFunction::from_fn(cfg.mesh.clone(), |x, y| 0.3 + x * y);
        let rep = minimize_descent(&cfg, &u0, 5000).unwrap();
        assert!(rep.converged, "{:?}", rep.status);
        assert!(rep.energy.abs() < 1e-12);
        assert!(rep.u.values().iter().all(|v| v.abs() < 1e-6));
    }

    #[test]
    fn parity_projection_is_idempotent() {
        let m = build_rectangle_mesh(1.0, 1.0, 6, 4).unwrap();
        let v: Vec<f64> = (0..m.num_nodes()).map(|i| (i as f64 * 0.37).sin()).collect();
        for c in SYMMETRY_CLASSES {
            let mut a = v.clone();
            c.project(&m, &mut a);
            let mut b = a.clone();
            c.project(&m, &mut b);
            assert!(a.iter().zip(&b).all(|(x, y)| (x - y).abs() < 1e-15));
        }
    }
}
