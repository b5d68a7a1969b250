//! The energy functional, its derivative, the operators `L_{p,beta}`, the
//! constraint functionals of the homogeneous problems and explicit thresholds.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{ExponentField, ProblemConfig, WeightField};
use crate::mesh::MeshDomain;
use crate::random::{smooth_field, task_rng};
use crate::spaces::{self, DiscreteFunction};

/// `((|g|^2 + eps^2)^{s/2} - eps^s) / s`
#[inline]
fn psi(g2: f64, eps: f64, s: f64) -> f64 {
    if eps == 0.0 {
        g2.powf(0.5 * s) / s
    } else {
        ((g2 + eps * eps).powf(0.5 * s) - eps.powf(s)) / s
    }
}

/// `(|g|^2 + eps^2)^{(s-2)/2}`, the scalar factor of `d psi / d g`.
#[inline]
fn psi_factor(g2: f64, eps: f64, s: f64) -> f64 {
    let m = g2 + eps * eps;
    if m == 0.0 {
        0.0
    } else {
        m.powf(0.5 * s - 1.0)
    }
}

/// `|t|^{s-1} sign(t)`.
#[inline]
fn signed_pow(t: f64, s: f64) -> f64 {
    if t == 0.0 {
        0.0
    } else {
        t.signum() * t.abs().powf(s - 1.0)
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Derivative of the energy at `u`, split into its elliptic and forcing parts.
#[derive(Debug, Clone)]
pub struct GradientAssembly {
    /// `<Phi'(u), phi_i>` for every nodal basis function `phi_i`.
    pub nodal_covector: Vec<f64>,
    /// Euclidean norm of the covector.
    pub residual_norm: f64,
    /// Mass-weighted dual-norm surrogate `sqrt(sum_i g_i^2 / m_i)`.
    pub weighted_residual: f64,
    /// `|Phi'(u)| / (|elliptic part| + |forcing part|)`, the scale-free stationarity measure.
    pub relative_residual: f64,
    /// `|elliptic part| + |forcing part|` (Euclidean).
    pub scale: f64,
}

impl GradientAssembly {
    fn new(mesh: &MeshDomain, elliptic: Vec<f64>, forcing: &[f64]) -> Self {
        let scale = norm2(&elliptic) + norm2(forcing);
        let mut g = elliptic;
        for (gi, fi) in g.iter_mut().zip(forcing) {
            *gi -= fi;
        }
        Self::from_covector(mesh, g, scale)
    }

    pub(crate) fn from_covector(mesh: &MeshDomain, g: Vec<f64>, scale: f64) -> Self {
        let residual_norm = norm2(&g);
        let weighted_residual =
            g.iter().zip(mesh.node_weights()).map(|(gi, w)| gi * gi / w).sum::<f64>().sqrt();
        let relative_residual = if residual_norm == 0.0 { 0.0 } else { residual_norm / scale };
        Self { nodal_covector: g, residual_norm, weighted_residual, relative_residual, scale }
    }

    /// Pairing `<Phi'(u), v>` for nodal `v`.
    pub fn pair(&self, v: &[f64]) -> f64 {
        dot(&self.nodal_covector, v)
    }

    /// Stationarity test shared by every solver.
    pub fn is_stationary(&self, rel_tol: f64, abs_tol: f64) -> bool {
        self.relative_residual < rel_tol || self.residual_norm < abs_tol
    }
}

/// Energy of one [`ProblemConfig`], evaluated on raw nodal slices.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Energy<'a> {
    pub cfg: &'a ProblemConfig,
}

impl<'a> Energy<'a> {
    pub fn new(cfg: &'a ProblemConfig) -> Self {
        Self { cfg }
    }

    fn mesh(&self) -> &'a MeshDomain {
        &self.cfg.mesh
    }

    /// `(elliptic part, forcing part)` of the energy.
    pub fn parts(&self, u: &[f64]) -> (f64, f64) {
        let cfg = self.cfg;
        let m = self.mesh();
        let eps = cfg.epsilon_reg;
        let (pc, qc) = (cfg.p.cell_values(), cfg.q.cell_values());
        let mut vol = 0.0;
        for t in 0..m.num_cells() {
            let [gx, gy] = m.cell_gradient(u, t);
            let g2 = gx * gx + gy * gy;
            vol += m.cell_areas()[t] * (psi(g2, eps, pc[t]) + psi(g2, eps, qc[t]));
        }
        let (pn, qn) = (cfg.p.values(), cfg.q.values());
        let (b1, b2) = (cfg.beta1.values(), cfg.beta2.values());
        let mut bnd = 0.0;
        for (&n, w) in m.boundary_nodes().iter().zip(m.boundary_weights()) {
            let a = u[n].abs();
            bnd += w * (b1[n] * a.powf(pn[n]) / pn[n] + b2[n] * a.powf(qn[n]) / qn[n]);
        }
        let (rn, al) = (cfg.r.values(), cfg.alpha.values());
        let forcing: f64 = m
            .node_weights()
            .iter()
            .enumerate()
            .map(|(i, w)| w * al[i] * u[i].abs().powf(rn[i]) / rn[i])
            .sum();
        (vol + bnd, cfg.lambda * forcing)
    }

    pub fn value(&self, u: &[f64]) -> f64 {
        let (e, f) = self.parts(u);
        e - f
    }

    pub fn gradient(&self, u: &[f64]) -> GradientAssembly {
        let cfg = self.cfg;
        let m = self.mesh();
        let eps = cfg.epsilon_reg;
        let (pc, qc) = (cfg.p.cell_values(), cfg.q.cell_values());
        let mut ell = vec![0.0; m.num_nodes()];
        for (t, cell) in m.cells().iter().enumerate() {
            let gr = &m.cell_gradients()[t];
            let [gx, gy] = m.cell_gradient(u, t);
            let g2 = gx * gx + gy * gy;
            let a = m.cell_areas()[t] * (psi_factor(g2, eps, pc[t]) + psi_factor(g2, eps, qc[t]));
            if a == 0.0 {
                continue;
            }
            for k in 0..3 {
                ell[cell[k]] += a * (gx * gr[k][0] + gy * gr[k][1]);
            }
        }
        let (pn, qn) = (cfg.p.values(), cfg.q.values());
        let (b1, b2) = (cfg.beta1.values(), cfg.beta2.values());
        for (&n, w) in m.boundary_nodes().iter().zip(m.boundary_weights()) {
            ell[n] += w * (b1[n] * signed_pow(u[n], pn[n]) + b2[n] * signed_pow(u[n], qn[n]));
        }
        let (rn, al) = (cfg.r.values(), cfg.alpha.values());
        let forcing: Vec<f64> = m
            .node_weights()
            .iter()
            .enumerate()
            .map(|(i, w)| cfg.lambda * w * al[i] * signed_pow(u[i], rn[i]))
            .collect();
        GradientAssembly::new(m, ell, &forcing)
    }

    /// `||u||_{M,1}`: Robin norm with unit weight and exponent `M = max{p, q}`.
    pub fn m1_norm(&self, u: &[f64]) -> f64 {
        let m = self.mesh();
        let mexp = self.cfg.m_exponent();
        spaces::sobolev_norm_raw(m, u, &mexp, &vec![1.0; m.num_nodes()]).unwrap_or(f64::NAN)
    }
}

fn check_fn(u: &DiscreteFunction, cfg: &ProblemConfig) -> Result<()> {
    u.check_same_mesh(cfg.mesh.shape())
}

/// The energy `Phi_lambda(u)` with the regularised gradient magnitude.
pub fn phi(u: &DiscreteFunction, cfg: &ProblemConfig) -> Result<f64> {
    check_fn(u, cfg)?;
    let v = Energy::new(cfg).value(u.values());
    if !v.is_finite() {
        return Err(Error::NonFiniteEnergy(format!("Phi = {v}")));
    }
    Ok(v)
}

/// Exact derivative of [`phi`] tested against every nodal basis function.
pub fn phi_grad(u: &DiscreteFunction, cfg: &ProblemConfig) -> Result<GradientAssembly> {
    check_fn(u, cfg)?;
    let g = Energy::new(cfg).gradient(u.values());
    if !g.residual_norm.is_finite() {
        return Err(Error::NonFiniteEnergy("non-finite derivative".into()));
    }
    Ok(g)
}

/// `||u||_{M,1}` for the problem's exponents.
pub fn m1_norm(u: &DiscreteFunction, cfg: &ProblemConfig) -> Result<f64> {
    check_fn(u, cfg)?;
    let mexp = cfg.m_exponent();
    spaces::sobolev_norm_raw(&cfg.mesh, u.values(), &mexp, &vec![1.0; cfg.mesh.num_nodes()])
}

/// `<L_{p,beta}(u), v>` with the gradient magnitude regularised by `epsilon`.
pub fn apply_l(
    u: &DiscreteFunction,
    v: &DiscreteFunction,
    p: &ExponentField,
    beta: &WeightField,
    epsilon: f64,
) -> Result<f64> {
    u.check_same_mesh(p.shape())?;
    v.check_same_mesh(p.shape())?;
    u.check_same_mesh(beta.shape())?;
    if !beta.is_robin() {
        return Err(Error::InvalidWeight("apply_l needs a positive boundary weight".into()));
    }
    let m = u.mesh();
    let pc = p.cell_values();
    let mut vol = 0.0;
    for t in 0..m.num_cells() {
        let gu = u.gradient(t);
        let gv = v.gradient(t);
        let g2 = gu[0] * gu[0] + gu[1] * gu[1];
        vol += m.cell_areas()[t] * psi_factor(g2, epsilon, pc[t]) * (gu[0] * gv[0] + gu[1] * gv[1]);
    }
    let (uu, vv, pn, b) = (u.values(), v.values(), p.values(), beta.values());
    let bnd: f64 = m
        .boundary_nodes()
        .iter()
        .zip(m.boundary_weights())
        .map(|(&n, w)| w * b[n] * signed_pow(uu[n], pn[n]) * vv[n])
        .sum();
    Ok(vol + bnd)
}

/// `(|a|^{s-2} a - |b|^{s-2} b) . (a - b)`, nonnegative for every `s > 1`.
pub fn monotonicity_gap(a: [f64; 2], b: [f64; 2], sigma: f64) -> f64 {
    let f = |v: [f64; 2]| {
        let n = (v[0] * v[0] + v[1] * v[1]).sqrt();
        if n == 0.0 {
            [0.0, 0.0]
        } else {
            let c = n.powf(sigma - 2.0);
            [c * v[0], c * v[1]]
        }
    };
    let (fa, fb) = (f(a), f(b));
    (fa[0] - fb[0]) * (a[0] - b[0]) + (fa[1] - fb[1]) * (a[1] - b[1])
}

/// `int alpha |u|^{q-2} u dx`: the constraint defining `C_q` (and `C`).
pub fn constraint_g2(u: &DiscreteFunction, alpha: &WeightField, q: f64) -> Result<f64> {
    u.check_same_mesh(alpha.shape())?;
    if !(q > 1.0) {
        return Err(Error::Precondition(format!("constraint exponent must exceed 1, got {q}")));
    }
    Ok(g2_raw(u.mesh(), u.values(), alpha.values(), q))
}

pub(crate) fn g2_raw(m: &MeshDomain, u: &[f64], alpha: &[f64], q: f64) -> f64 {
    m.node_weights().iter().enumerate().map(|(i, w)| w * alpha[i] * signed_pow(u[i], q)).sum()
}

/// Integrals entering the Nehari quantities of the homogeneous problem, all with raw `|grad u|`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct NehariIntegrals {
    /// `int |grad u|^p`
    pub grad_p: f64,
    /// `int |grad u|^q`
    pub grad_q: f64,
    /// `int alpha |u|^q`
    pub mass_q: f64,
}

pub(crate) fn nehari_integrals(cfg: &ProblemConfig, u: &[f64]) -> NehariIntegrals {
    let m = &cfg.mesh;
    let grad_p = spaces::gradient_modular(m, u, cfg.p.cell_values());
    let grad_q = spaces::gradient_modular(m, u, cfg.q.cell_values());
    let (al, qn) = (cfg.alpha.values(), cfg.q.values());
    let mass_q = m.node_weights().iter().enumerate().map(|(i, w)| w * al[i] * u[i].abs().powf(qn[i])).sum();
    NehariIntegrals { grad_p, grad_q, mass_q }
}

fn require_homogeneous(cfg: &ProblemConfig) -> Result<f64> {
    cfg.homogeneous_q().ok_or_else(|| {
        Error::Precondition("needs the homogeneous Neumann case (r = q constant > 2, beta = 0)".into())
    })
}

/// Nehari defect `int |grad u|^p + |grad u|^q - lambda int alpha |u|^q`.
pub fn constraint_g1(u: &DiscreteFunction, cfg: &ProblemConfig) -> Result<f64> {
    check_fn(u, cfg)?;
    require_homogeneous(cfg)?;
    let n = nehari_integrals(cfg, u.values());
    Ok(n.grad_p + n.grad_q - cfg.lambda * n.mass_q)
}

/// `int |grad u|^q / int alpha |u|^q`.
pub fn rayleigh_q(u: &DiscreteFunction, alpha: &WeightField, q: f64) -> Result<f64> {
    u.check_same_mesh(alpha.shape())?;
    let m = u.mesh();
    let (num, den) = rayleigh_parts(m, u.values(), alpha.values(), q);
    if !(den > 0.0) {
        return Err(Error::ZeroDenominator("u vanishes at every quadrature point".into()));
    }
    Ok(num / den)
}

pub(crate) fn rayleigh_parts(m: &MeshDomain, u: &[f64], alpha: &[f64], q: f64) -> (f64, f64) {
    let num = (0..m.num_cells())
        .map(|t| {
            let [gx, gy] = m.cell_gradient(u, t);
            m.cell_areas()[t] * (gx * gx + gy * gy).powf(0.5 * q)
        })
        .sum();
    let den = m.node_weights().iter().enumerate().map(|(i, w)| w * alpha[i] * u[i].abs().powf(q)).sum();
    (num, den)
}

/// Explicit constants of the small-lambda and superlinear regimes.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ThresholdReport {
    /// Probe-based lower estimate of `C* = sup ||u||_{L^r} / ||u||_{M,1}`.
    pub c_star_lower: f64,
    /// Ball radius `rho in (0, min{1/C*, 1})`.
    pub rho: f64,
    /// `Lambda(rho, C*)`; `None` when the formula does not apply.
    pub lambda_cap: Option<f64>,
    /// Factor applied to `lambda_cap` by acceptance runs.
    pub safety_factor: f64,
    /// `(M*)^- - r^+`.
    pub subcritical_margin: f64,
    pub probes: usize,
    pub seed: u64,
}

impl ThresholdReport {
    pub fn safe_lambda(&self) -> Option<f64> {
        self.lambda_cap.map(|l| l * self.safety_factor)
    }
}

pub const LAMBDA_SAFETY_FACTOR: f64 = 0.1;

fn embedding_quotient(cfg: &ProblemConfig, mexp: &ExponentField, ones: &[f64], u: &[f64]) -> f64 {
    let m = &cfg.mesh;
    let den = match spaces::sobolev_norm_raw(m, u, mexp, ones) {
        Ok(d) if d > 0.0 => d,
        _ => return 0.0,
    };
    let r = &cfg.r;
    let num = spaces::luxemburg_root(|tau| {
        m.node_weights().iter().zip(u).zip(r.values()).map(|((w, v), e)| w * (v.abs() / tau).powf(*e)).sum()
    })
    .unwrap_or(0.0);
    num / den
}

/// Quotient `||u||_{L^{r}} / ||u||_{M,1}` whose supremum is `C*`.
pub fn embedding_ratio(u: &DiscreteFunction, cfg: &ProblemConfig) -> Result<f64> {
    check_fn(u, cfg)?;
    let ones = vec![1.0; cfg.mesh.num_nodes()];
    Ok(embedding_quotient(cfg, &cfg.m_exponent(), &ones, u.values()))
}

const HILL_CLIMB_STEPS: usize = 40;

/// Lower estimate of `C*` by random probes with local hill climbing.
///
/// Probe 0 is the constant function; probe `k` draws from its own stream
/// `(seed, k)`, so adding probes never lowers the estimate.
pub fn estimate_c_star(cfg: &ProblemConfig, probes: usize, seed: u64) -> Result<ThresholdReport> {
    cfg.check_subcritical()?;
    let mexp = cfg.m_exponent();
    let m = &cfg.mesh;
    let ones = vec![1.0; m.num_nodes()];
    let best_of = |k: usize| -> f64 {
        if k == 0 {
            return embedding_quotient(cfg, &mexp, &ones, &ones);
        }
        let mut rng = task_rng(seed, k as u64);
        let mut u: Vec<f64> = smooth_field(m, 2, &mut rng).iter().map(|v| 1.0 + v).collect();
        let mut best = embedding_quotient(cfg, &mexp, &ones, &u);
        let mut step = 0.5;
        for _ in 0..HILL_CLIMB_STEPS {
            let d = smooth_field(m, 2, &mut rng);
            let cand: Vec<f64> = u.iter().zip(&d).map(|(a, b)| a + step * b).collect();
            let val = embedding_quotient(cfg, &mexp, &ones, &cand);
            if val > best {
                best = val;
                u = cand;
            } else {
                step *= 0.8;
            }
        }
        best
    };
    let values = cfg.execution.map_indexed(probes.max(1), best_of);
    let c_star_lower = values.into_iter().fold(0.0, f64::max);
    if !(c_star_lower > 0.0) {
        return Err(Error::RootFinding("embedding quotient vanished on every probe".into()));
    }
    let rho = default_rho(c_star_lower);
    let lambda_cap = lambda_cap(cfg, rho, c_star_lower).ok();
    Ok(ThresholdReport {
        c_star_lower,
        rho,
        lambda_cap,
        safety_factor: LAMBDA_SAFETY_FACTOR,
        subcritical_margin: cfg.subcritical_margin(),
        probes: probes.max(1),
        seed,
    })
}

/// Midpoint choice `0.5 * min{1/C*, 1}`.
pub fn default_rho(c_star: f64) -> f64 {
    0.5 * (1.0 / c_star).min(1.0)
}

/// `Lambda = min{1, beta1^-, beta2^-} r^- rho^{2(M^+ - r^-)} / (max{p^+, q^+} alpha^+ C*^{r^-})`.
pub fn lambda_cap(cfg: &ProblemConfig, rho: f64, c_star: f64) -> Result<f64> {
    if !(c_star > 0.0) {
        return Err(Error::Precondition(format!("C* must be positive, got {c_star}")));
    }
    let upper = (1.0 / c_star).min(1.0);
    if !(rho > 0.0 && rho < upper) {
        return Err(Error::Precondition(format!("rho = {rho} outside (0, {upper})")));
    }
    let bmin = 1f64.min(cfg.beta1.inf()).min(cfg.beta2.inf());
    let r_inf = cfg.r.inf();
    let pq_sup = cfg.p.sup().max(cfg.q.sup());
    let num = bmin * r_inf * rho.powf(2.0 * (pq_sup - r_inf));
    Ok(num / (pq_sup * cfg.alpha.sup() * c_star.powf(r_inf)))
}

/// Explicit constants of the coercivity estimate in the sublinear regime.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CoercivityConstants {
    /// `min{1, beta1^-, beta2^-} / max{p^+, q^+}`.
    pub c2: f64,
    /// Young parameter `r^- C2 / (2 lambda alpha^+)`.
    pub young_eps: f64,
    /// `max_x (1 - r/M) (r / (eps M))^{r/(M-r)}`, so `|s|^r <= eps |s|^M + C1` everywhere.
    pub c1: f64,
}

pub fn coercivity_constants(cfg: &ProblemConfig) -> Result<CoercivityConstants> {
    let mexp = cfg.m_exponent();
    let (rv, mv) = (cfg.r.values(), mexp.values());
    if rv.iter().zip(mv).any(|(r, m)| r >= m) {
        return Err(Error::Precondition("coercivity constants need r < max{p, q} pointwise".into()));
    }
    if !(cfg.lambda > 0.0) {
        return Err(Error::Precondition("coercivity constants need lambda > 0".into()));
    }
    let c2 = 1f64.min(cfg.beta1.inf()).min(cfg.beta2.inf()) / cfg.p.sup().max(cfg.q.sup());
    let young_eps = cfg.r.inf() * c2 / (2.0 * cfg.lambda * cfg.alpha.sup());
    let c1 = rv
        .iter()
        .zip(mv)
        .map(|(&r, &m)| (1.0 - r / m) * (r / (young_eps * m)).powf(r / (m - r)))
        .fold(0.0, f64::max);
    Ok(CoercivityConstants { c2, young_eps, c1 })
}

/// Lower bounds for `Phi(u)` from the coercivity argument.
#[derive(Debug, Clone, Copy)]
pub struct CoercivityBound {
    /// `C2 rho_{M,1}(u) - (C2/2) int |u|^M - lambda alpha^+ C1 |Omega| / r^-`: holds for every `u`.
    pub unconditional: f64,
    /// `(C2/2) rho_{M,1}(u) - lambda alpha^+ C1 |Omega| / r^-`: holds when `int |u|^M <= rho_{M,1}(u)`.
    pub absorbed: f64,
    /// `rho_{M,1}(u) = int |grad u|^M + int_{boundary} |u|^M`.
    pub sobolev_modular: f64,
    /// `int |u|^M`.
    pub volume_modular: f64,
}

pub fn coercivity_bound(u: &DiscreteFunction, cfg: &ProblemConfig) -> Result<CoercivityBound> {
    check_fn(u, cfg)?;
    let k = coercivity_constants(cfg)?;
    let m = &cfg.mesh;
    let mexp = cfg.m_exponent();
    let ones = vec![1.0; m.num_nodes()];
    let sob = spaces::sobolev_modular_raw(m, u.values(), &mexp, &ones);
    let vol = spaces::volume_modular(m, u.values(), mexp.values());
    let offset = cfg.lambda * cfg.alpha.sup() * k.c1 * m.area() / cfg.r.inf();
    Ok(CoercivityBound {
        unconditional: k.c2 * sob - 0.5 * k.c2 * vol - offset,
        absorbed: 0.5 * k.c2 * sob - offset,
        sobolev_modular: sob,
        volume_modular: vol,
    })
}
