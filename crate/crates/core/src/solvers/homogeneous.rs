//! Threshold estimation and constrained minimisation for the homogeneous
//! Neumann problems (`r = q` constant, `beta = 0`).

use serde::{Deserialize, Serialize};

use crate::energy::{nehari_integrals, rayleigh_parts, Energy};
use crate::error::{Error, Result};
use crate::fields::{classify_case, CaseClass, ProblemConfig};
use crate::linalg::Preconditioner;
use crate::random::{smooth_field, task_rng};
use crate::spaces::DiscreteFunction;

use super::descent::{self, Grad, Objective};
use super::global::grad_of;
use super::projections::{nehari_scale, shift_onto_constraint};
use super::{settings, Multipliers, SolveReport, SolveStatus};

/// Which constraint set the threshold is taken over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConstraintSpace {
    /// `C_q`, used when `p^+ < q`.
    Cq,
    /// `C`, used when `q < p^-`.
    C,
}

impl ConstraintSpace {
    pub fn for_case(case: CaseClass) -> Option<Self> {
        match case {
            CaseClass::HomogeneousPPlusLtQ => Some(ConstraintSpace::Cq),
            CaseClass::HomogeneousQLtPMinus => Some(ConstraintSpace::C),
            _ => None,
        }
    }
}

/// Constant `q` and Neumann boundary: the data every threshold needs.
fn threshold_exponent(cfg: &ProblemConfig, space: ConstraintSpace) -> Result<f64> {
    let q = cfg
        .q
        .constant_value()
        .ok_or_else(|| Error::Precondition("threshold estimation needs a constant q".into()))?;
    if !cfg.is_neumann() {
        return Err(Error::Precondition("threshold estimation needs beta1 = beta2 = 0".into()));
    }
    let consistent = match space {
        ConstraintSpace::Cq => cfg.p.sup() < q || q <= 2.0,
        ConstraintSpace::C => q < cfg.p.inf(),
    };
    if !consistent {
        return Err(Error::Precondition(format!(
            "constraint space {space:?} does not match p in [{}, {}], q = {q}",
            cfg.p.inf(),
            cfg.p.sup()
        )));
    }
    Ok(q)
}

/// `int |grad u|^q / int alpha |u|^q` over `{int alpha |u|^{q-2} u = 0}`, normalised to unit denominator.
struct RayleighObjective<'a> {
    cfg: &'a ProblemConfig,
    q: f64,
    /// Stop as soon as the quotient drops below this value.
    stop_below: Option<f64>,
}

impl RayleighObjective<'_> {
    fn normalise(&self, mut x: Vec<f64>) -> Option<Vec<f64>> {
        let (_, den) = rayleigh_parts(&self.cfg.mesh, &x, self.cfg.alpha.values(), self.q);
        if !(den > 0.0 && den.is_finite()) {
            return None;
        }
        let c = den.powf(-1.0 / self.q);
        x.iter_mut().for_each(|v| *v *= c);
        Some(x)
    }
}

impl Objective for RayleighObjective<'_> {
    fn value(&self, x: &[f64]) -> f64 {
        let (num, den) = rayleigh_parts(&self.cfg.mesh, x, self.cfg.alpha.values(), self.q);
        num / den
    }

    fn gradient(&self, x: &[f64]) -> Grad {
        let m = &self.cfg.mesh;
        let q = self.q;
        let al = self.cfg.alpha.values();
        let (num, den) = rayleigh_parts(m, x, al, q);
        let r = num / den;
        let mut dn = vec![0.0; x.len()];
        for (t, cell) in m.cells().iter().enumerate() {
            let [gx, gy] = m.cell_gradient(x, t);
            let g2 = gx * gx + gy * gy;
            if g2 == 0.0 {
                continue;
            }
            let a = q * m.cell_areas()[t] * g2.powf(0.5 * q - 1.0);
            let gr = &m.cell_gradients()[t];
            for k in 0..3 {
                dn[cell[k]] += a * (gx * gr[k][0] + gy * gr[k][1]);
            }
        }
        let dd: Vec<f64> = m
            .node_weights()
            .iter()
            .enumerate()
            .map(|(i, w)| {
                let v = x[i];
                if v == 0.0 {
                    0.0
                } else {
                    q * w * al[i] * v.abs().powf(q - 1.0) * v.signum()
                }
            })
            .collect();
        let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
        let scale = (norm(&dn) + r * norm(&dd)) / den;
        let covector: Vec<f64> = dn.iter().zip(&dd).map(|(a, b)| (a - r * b) / den).collect();
        let absolute = norm(&covector);
        let relative = if absolute == 0.0 { 0.0 } else { absolute / scale };
        Grad { covector, relative, absolute }
    }

    fn retract(&self, x: Vec<f64>) -> Option<Vec<f64>> {
        let shifted = shift_onto_constraint(&self.cfg.mesh, self.cfg.alpha.values(), self.q, &x);
        self.normalise(shifted)
    }

    fn collapsed(&self, x: &[f64]) -> bool {
        self.stop_below.is_some_and(|s| self.value(x) < s)
    }
}

/// Rayleigh-quotient minimisation across seeded restarts.
#[derive(Debug, Clone)]
pub struct SigmaEstimate {
    /// Best (smallest) quotient found: the threshold estimate.
    pub value: f64,
    /// Final quotient of each restart, in restart order.
    pub restarts: Vec<f64>,
    /// `(max - min) / min` over converged restarts.
    pub spread: f64,
    /// Minimiser attaining `value`, normalised to `int alpha |u|^q = 1`.
    pub minimizer: DiscreteFunction,
    pub seed: u64,
}

fn rayleigh_descent(
    cfg: &ProblemConfig,
    metric: &Preconditioner,
    q: f64,
    x0: Vec<f64>,
    stop_below: Option<f64>,
) -> descent::Outcome {
    let obj = RayleighObjective { cfg, q, stop_below };
    descent::minimize(&obj, metric, x0, settings(cfg))
}

fn random_start(cfg: &ProblemConfig, seed: u64, index: u64) -> Vec<f64> {
    smooth_field(&cfg.mesh, 4, &mut task_rng(seed, index))
}

/// Estimate of `sigma = inf { int |grad u|^q / int alpha |u|^q : u in the constraint set, u != 0 }`.
pub fn sigma_estimate(cfg: &ProblemConfig, space: ConstraintSpace, restarts: usize, seed: u64) -> Result<SigmaEstimate> {
    let q = threshold_exponent(cfg, space)?;
    let metric = Preconditioner::sobolev(&cfg.mesh);
    let runs = cfg.execution.map_indexed(restarts.max(1), |k| {
        let out = rayleigh_descent(cfg, &metric, q, random_start(cfg, seed, k as u64), None);
        (out.value, out.x, out.status)
    });
    let restarts_v: Vec<f64> = runs.iter().map(|r| r.0).collect();
    let (best, x, _) = runs
        .into_iter()
        .filter(|r| r.0.is_finite() && r.0 > 0.0)
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .ok_or_else(|| Error::Precondition("every restart was infeasible".into()))?;
    let finite: Vec<f64> = restarts_v.iter().copied().filter(|v| v.is_finite() && *v > 0.0).collect();
    let hi = finite.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(SigmaEstimate {
        value: best,
        spread: (hi - best) / best,
        restarts: restarts_v,
        minimizer: DiscreteFunction::new(cfg.mesh.clone(), x)?,
        seed,
    })
}

/// Threshold estimate; see [`sigma_estimate`].
pub fn sigma_threshold(cfg: &ProblemConfig, space: ConstraintSpace, restarts: usize, seed: u64) -> Result<f64> {
    sigma_estimate(cfg, space, restarts, seed).map(|s| s.value)
}

/// Energy restricted to `N_lambda` intersected with `C_q` (shift, then fibering rescale).
struct NehariObjective<'a> {
    energy: Energy<'a>,
    q: f64,
}

impl Objective for NehariObjective<'_> {
    fn value(&self, x: &[f64]) -> f64 {
        self.energy.value(x)
    }

    fn gradient(&self, x: &[f64]) -> Grad {
        grad_of(self.energy.gradient(x))
    }

    fn retract(&self, x: Vec<f64>) -> Option<Vec<f64>> {
        let cfg = self.energy.cfg;
        let y = shift_onto_constraint(&cfg.mesh, cfg.alpha.values(), self.q, &x);
        let t = nehari_scale(cfg, &y).ok()?;
        Some(y.into_iter().map(|v| t * v).collect())
    }
}

fn require_case(cfg: &ProblemConfig, want: CaseClass) -> Result<f64> {
    let case = classify_case(cfg);
    if case != want {
        return Err(Error::Precondition(format!("needs the {want} case, got {case}")));
    }
    Ok(cfg.homogeneous_q().expect("homogeneous case has constant q"))
}

/// Minimiser of the energy over the Nehari manifold within `C_q`.
///
/// Each restart first lowers the Rayleigh quotient of a random field below
/// `lambda` so that the fibering rescale exists, then descends on the
/// manifold. The best converged restart is returned.
pub fn nehari_minimize(cfg: &ProblemConfig, restarts: usize, seed: u64) -> Result<SolveReport> {
    let q = require_case(cfg, CaseClass::HomogeneousPPlusLtQ)?;
    let metric = Preconditioner::sobolev(&cfg.mesh);
    let runs = cfg.execution.map_indexed(restarts.max(1), |k| -> Result<SolveReport> {
        let pre = rayleigh_descent(cfg, &metric, q, random_start(cfg, seed, k as u64), Some(cfg.lambda * (1.0 - 1e-6)));
        if !(pre.value < cfg.lambda) {
            return Err(Error::BelowThreshold(format!(
                "restart {k}: Rayleigh quotient {:e} stays above lambda = {:e}",
                pre.value, cfg.lambda
            )));
        }
        let obj = NehariObjective { energy: Energy::new(cfg), q };
        let x0 = obj
            .retract(pre.x)
            .ok_or_else(|| Error::BelowThreshold(format!("restart {k}: no Nehari scaling")))?;
        let out = descent::minimize(&obj, &metric, x0, settings(cfg));
        let mut rep = SolveReport::from_outcome(cfg, out, CaseClass::HomogeneousPPlusLtQ);
        if let Ok(l) = lagrange_residuals(&rep.u, cfg) {
            rep.multipliers = Some(Multipliers::Nehari { c: l.c, d: l.d, stationarity: l.stationarity });
        }
        Ok(rep)
    });
    best_report(runs)
}

/// Best converged nontrivial report by energy, else the best attempt, else the first error.
fn best_report(runs: Vec<Result<SolveReport>>) -> Result<SolveReport> {
    let mut first_err = None;
    let mut reports = Vec::new();
    for r in runs {
        match r {
            Ok(rep) => reports.push(rep),
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    let key = |r: &SolveReport| (!r.found(), r.energy);
    reports
        .into_iter()
        .min_by(|a, b| {
            let (ka, kb) = (key(a), key(b));
            ka.0.cmp(&kb.0).then(ka.1.total_cmp(&kb.1))
        })
        .ok_or_else(|| first_err.expect("at least one restart ran"))
}

/// Multiplier fit `Phi' + c G1' + d G2' = 0` and the decoupled test-function coefficients.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LagrangeResiduals {
    pub c: f64,
    pub d: f64,
    /// `|Phi' + c G1' + d G2'|` relative to the scale of `Phi'`.
    pub stationarity: f64,
    /// Coefficient of the `a u` test direction: `int (p - q) |grad u|^p`.
    pub a_coefficient: f64,
    /// Coefficient of the constant test direction: `(q - 1) int alpha |u|^{q-2}`.
    pub b_coefficient: f64,
}

/// Covectors `(G1'(u), G2'(u))` with raw gradient magnitudes.
fn constraint_covectors(cfg: &ProblemConfig, u: &[f64], q: f64) -> (Vec<f64>, Vec<f64>) {
    let m = &cfg.mesh;
    let (pc, qc) = (cfg.p.cell_values(), cfg.q.cell_values());
    let al = cfg.alpha.values();
    let mut g1 = vec![0.0; u.len()];
    for (t, cell) in m.cells().iter().enumerate() {
        let [gx, gy] = m.cell_gradient(u, t);
        let g2 = gx * gx + gy * gy;
        if g2 == 0.0 {
            continue;
        }
        let a = m.cell_areas()[t] * (pc[t] * g2.powf(0.5 * pc[t] - 1.0) + qc[t] * g2.powf(0.5 * qc[t] - 1.0));
        let gr = &m.cell_gradients()[t];
        for k in 0..3 {
            g1[cell[k]] += a * (gx * gr[k][0] + gy * gr[k][1]);
        }
    }
    let mut g2v = vec![0.0; u.len()];
    for (i, w) in m.node_weights().iter().enumerate() {
        let a = u[i].abs();
        let pw = if a == 0.0 { if q == 2.0 { 1.0 } else { 0.0 } } else { a.powf(q - 2.0) };
        g1[i] -= cfg.lambda * q * w * al[i] * pw * u[i];
        g2v[i] = (q - 1.0) * w * al[i] * pw;
    }
    (g1, g2v)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Least-squares multipliers `(c, d)` for `Phi' + c G1' + d G2' = 0` at a feasible `u`.
pub fn lagrange_residuals(u: &DiscreteFunction, cfg: &ProblemConfig) -> Result<LagrangeResiduals> {
    u.check_same_mesh(cfg.mesh.shape())?;
    let q = cfg
        .homogeneous_q()
        .ok_or_else(|| Error::Precondition("multipliers need the homogeneous Neumann case".into()))?;
    let x = u.values();
    let grad = Energy::new(cfg).gradient(x);
    let (g1, g2) = constraint_covectors(cfg, x, q);
    let b_coefficient: f64 = g2.iter().sum();
    let n = nehari_integrals(cfg, x);
    let a_coefficient = if let Some(p) = cfg.p.constant_value() {
        (p - q) * n.grad_p
    } else {
        let m = &cfg.mesh;
        (0..m.num_cells())
            .map(|t| {
                let [gx, gy] = m.cell_gradient(x, t);
                let p = cfg.p.cell_values()[t];
                m.cell_areas()[t] * (p - q) * (gx * gx + gy * gy).sqrt().powf(p)
            })
            .sum()
    };
    let mass: f64 = cfg.mesh.node_weights().iter().zip(cfg.alpha.values()).map(|(w, a)| w * a).sum();
    if !(b_coefficient > 1e-14 * (q - 1.0) * mass * u_scale(x).powf(q - 2.0)) {
        return Err(Error::Singular(format!("(q-1) int alpha |u|^(q-2) = {b_coefficient:e} vanishes")));
    }
    let (a11, a12, a22) = (dot(&g1, &g1), dot(&g1, &g2), dot(&g2, &g2));
    let det = a11 * a22 - a12 * a12;
    if !(det > 1e-14 * a11 * a22) {
        return Err(Error::Singular(format!("normal matrix is singular (det = {det:e})")));
    }
    let phi = &grad.nodal_covector;
    let (r1, r2) = (-dot(&g1, phi), -dot(&g2, phi));
    let c = (a22 * r1 - a12 * r2) / det;
    let d = (a11 * r2 - a12 * r1) / det;
    let res: Vec<f64> = (0..x.len()).map(|i| phi[i] + c * g1[i] + d * g2[i]).collect();
    let stationarity = dot(&res, &res).sqrt() / grad.scale.max(f64::MIN_POSITIVE);
    Ok(LagrangeResiduals { c, d, stationarity, a_coefficient, b_coefficient })
}

fn u_scale(x: &[f64]) -> f64 {
    x.iter().fold(0.0f64, |a, v| a.max(v.abs()))
}

/// Single multiplier for `Phi' + a G2' = 0`: least squares, and from testing with `v = 1`.
fn single_multiplier(cfg: &ProblemConfig, u: &[f64], q: f64) -> Multipliers {
    let grad = Energy::new(cfg).gradient(u);
    let (_, g2) = constraint_covectors(cfg, u, q);
    let phi = &grad.nodal_covector;
    let a = -dot(&g2, phi) / dot(&g2, &g2);
    let a_unit_test = -phi.iter().sum::<f64>() / g2.iter().sum::<f64>();
    Multipliers::Single { a, a_unit_test }
}

/// Energy on `C` (constant shift retraction) that stops once the iterate is trivial.
struct ShiftObjective<'a> {
    energy: Energy<'a>,
    q: f64,
    trivial: f64,
}

impl Objective for ShiftObjective<'_> {
    fn value(&self, x: &[f64]) -> f64 {
        self.energy.value(x)
    }

    fn gradient(&self, x: &[f64]) -> Grad {
        grad_of(self.energy.gradient(x))
    }

    fn retract(&self, x: Vec<f64>) -> Option<Vec<f64>> {
        let cfg = self.energy.cfg;
        Some(shift_onto_constraint(&cfg.mesh, cfg.alpha.values(), self.q, &x))
    }

    fn collapsed(&self, x: &[f64]) -> bool {
        self.energy.m1_norm(x) < self.trivial
    }
}

/// Global minimiser of the energy over `C` for `q < p^-`.
///
/// Warm-starts from the best negative-energy multiple of a Rayleigh minimiser
/// on `C`; when no multiple has negative energy (expected for `lambda` at or
/// below the threshold) it starts from a random field of the seed's stream.
pub fn constrained_global_minimize(cfg: &ProblemConfig, seed: u64) -> Result<SolveReport> {
    let q = require_case(cfg, CaseClass::HomogeneousQLtPMinus)?;
    let metric = Preconditioner::sobolev(&cfg.mesh);
    let energy = Energy::new(cfg);
    let w = rayleigh_descent(cfg, &metric, q, random_start(cfg, seed, 0), None).x;
    let warm = (-40..=12)
        .map(|k| 10f64.powf(k as f64 / 4.0))
        .map(|t| {
            let tw: Vec<f64> = w.iter().map(|v| t * v).collect();
            let e = energy.value(&tw);
            (tw, e)
        })
        .filter(|(_, e)| *e < 0.0)
        .min_by(|a, b| a.1.total_cmp(&b.1));
    let (x0, warm_started) = match warm {
        Some((x, _)) => (x, true),
        None => (random_start(cfg, seed, 1), false),
    };
    let obj = ShiftObjective { energy, q, trivial: 1e-3 * cfg.tolerances.triviality };
    let out = descent::minimize(&obj, &metric, x0, settings(cfg));
    let mut rep = SolveReport::from_outcome(cfg, out, CaseClass::HomogeneousQLtPMinus);
    rep.multipliers = Some(single_multiplier(cfg, rep.u.values(), q));
    if !warm_started {
        rep.diagnostic = Some("no negative-energy multiple of the Rayleigh minimiser; cold start".into());
    }
    if rep.status == SolveStatus::CollapsedToZero || !rep.nontrivial {
        rep.diagnostic = Some("iterate collapsed to zero".into());
    }
    Ok(rep)
}

/// `|Phi(u) - ((q-p)/(qp)) int |grad u|^p| / |Phi(u)|`, zero on the Nehari manifold for constant `p`.
pub fn energy_identity_defect(u: &DiscreteFunction, cfg: &ProblemConfig) -> Result<f64> {
    u.check_same_mesh(cfg.mesh.shape())?;
    let q = cfg
        .homogeneous_q()
        .ok_or_else(|| Error::Precondition("the identity needs the homogeneous Neumann case".into()))?;
    let p = cfg
        .p
        .constant_value()
        .ok_or_else(|| Error::Precondition("the identity needs a constant p".into()))?;
    let e = Energy::new(cfg).value(u.values());
    let n = nehari_integrals(cfg, u.values());
    let rhs = (q - p) / (q * p) * n.grad_p;
    Ok((e - rhs).abs() / e.abs().max(f64::MIN_POSITIVE))
}

/// One row of an eigenvalue sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepRecord {
    pub lambda: f64,
    /// A converged nontrivial critical point was found.
    pub found: bool,
    pub energy: f64,
    pub residual: f64,
    pub u_norm: f64,
    /// Threshold estimate in force for the sweep.
    pub sigma_ref: f64,
    pub multipliers: Option<Multipliers>,
    /// Relative defect of the homogeneous energy identity at found points with constant `p`.
    pub identity_defect: Option<f64>,
    /// `found` breaks monotonicity in lambda at this row.
    pub monotonicity_violation: bool,
    pub note: Option<String>,
}

#[derive(Debug, Clone)]
pub struct SweepOptions {
    pub restarts: usize,
    pub seed: u64,
    /// Threshold to report; estimated with `restarts` restarts when absent.
    pub sigma_ref: Option<f64>,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self { restarts: 4, seed: 0, sigma_ref: None }
    }
}

/// `steps` geometrically spaced points from `lo` to `hi` inclusive.
pub fn geometric_grid(lo: f64, hi: f64, steps: usize) -> Vec<f64> {
    if steps <= 1 {
        return vec![lo];
    }
    let r = (hi / lo).ln() / (steps - 1) as f64;
    (0..steps).map(|k| if k == steps - 1 { hi } else { lo * (r * k as f64).exp() }).collect()
}

/// Runs the homogeneous-case solver at every `lambda`, sorted ascending.
pub fn eigen_sweep(cfg: &ProblemConfig, lambdas: &[f64], opts: &SweepOptions) -> Result<Vec<SweepRecord>> {
    let case = classify_case(cfg);
    let space = ConstraintSpace::for_case(case)
        .ok_or_else(|| Error::Precondition(format!("sweeps need a homogeneous case, got {case}")))?;
    let sigma_ref = match opts.sigma_ref {
        Some(s) => s,
        None => sigma_threshold(cfg, space, opts.restarts, opts.seed)?,
    };
    let mut lambdas = lambdas.to_vec();
    lambdas.sort_by(f64::total_cmp);
    let rows = cfg.execution.map_slice(&lambdas, |&lambda| {
        let c = cfg.with_lambda(lambda);
        let res = match space {
            ConstraintSpace::Cq => nehari_minimize(&c, opts.restarts, opts.seed),
            ConstraintSpace::C => constrained_global_minimize(&c, opts.seed),
        };
        match res {
            Ok(rep) => {
                let found = rep.found();
                let identity_defect =
                    if found && space == ConstraintSpace::Cq { energy_identity_defect(&rep.u, &c).ok() } else { None };
                SweepRecord {
                    lambda,
                    found,
                    energy: rep.energy,
                    residual: rep.residual,
                    u_norm: rep.u_norm,
                    sigma_ref,
                    multipliers: rep.multipliers,
                    identity_defect,
                    monotonicity_violation: false,
                    note: rep.diagnostic.or_else(|| (!found).then(|| format!("{:?}", rep.status))),
                }
            }
            Err(e) => SweepRecord {
                lambda,
                found: false,
                energy: 0.0,
                residual: f64::NAN,
                u_norm: 0.0,
                sigma_ref,
                multipliers: None,
                identity_defect: None,
                monotonicity_violation: false,
                note: Some(e.to_string()),
            },
        }
    });
    let mut rows = rows;
    for i in found_violations(&rows) {
        rows[i].monotonicity_violation = true;
    }
    Ok(rows)
}

/// Rows reporting `found = false` after an earlier row reported `found = true`.
pub fn found_violations(rows: &[SweepRecord]) -> Vec<usize> {
    let mut seen = false;
    let mut out = Vec::new();
    for (i, r) in rows.iter().enumerate() {
        if r.found {
            seen = true;
        } else if seen {
            out.push(i);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::FieldSpec;
    use crate::mesh::build_rectangle_mesh;
    use std::sync::Arc;

    fn neumann(n: usize, p: f64, q: f64, lambda: f64) -> ProblemConfig {
        let m = Arc::new(build_rectangle_mesh(1.0, 1.0, n, n).unwrap());
        let c = |v: f64| FieldSpec::Constant(v);
        ProblemConfig::from_specs(m, &c(p), &c(q), &c(q), &c(1.0), &c(0.0), &c(0.0), lambda).unwrap()
    }

    #[test]
    fn geometric_grid_endpoints() {
        let g = geometric_grid(0.25, 4.0, 12);
        assert_eq!(g.len(), 12);
        assert_eq!(g[0], 0.25);
        assert_eq!(g[11], 4.0);
        assert!((g[1] / g[0] - 16f64.powf(1.0 / 11.0)).abs() < 1e-12);
        assert_eq!(geometric_grid(1.0, 2.0, 1), vec![1.0]);
    }

    #[test]
    fn sigma_for_q2_matches_discrete_neumann_eigenvalue() {
        let cfg = neumann(16, 1.5, 2.0, 1.0);
        let s = sigma_threshold(&cfg, ConstraintSpace::Cq, 2, 1).unwrap();
        let h = 1.0 / 16.0;
        let exact = 4.0 * (std::f64::consts::PI * h / 2.0).sin().powi(2) / (h * h);
        assert!((s - exact).abs() < 1e-6 * exact, "{s} vs {exact}");
    }

    #[test]
    fn sigma_rejects_mismatched_space() {
        let cfg = neumann(8, 2.5, 4.0, 1.0);
        assert!(sigma_threshold(&cfg, ConstraintSpace::C, 1, 0).is_err());
    }

    #[test]
    fn violations_are_flagged() {
        let row = |found| SweepRecord {
            lambda: 1.0,
            found,
            energy: 0.0,
            residual: 0.0,
            u_norm: 0.0,
            sigma_ref: 1.0,
            multipliers: None,
            identity_defect: None,
            monotonicity_violation: false,
            note: None,
        };
        let rows = vec![row(false), row(true), row(false), row(true)];
        assert_eq!(found_violations(&rows), vec![2]);
    }
}
