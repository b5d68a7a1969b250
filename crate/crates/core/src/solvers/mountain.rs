//! Mountain-pass saddle search for the superlinear regime.
//!
//! A discrete path from `0` to an endpoint `zeta` with negative energy is
//! relaxed by a string iteration: every interior node moves along the
//! component of its preconditioned gradient normal to the path, and the nodes
//! are redistributed by arc length every few sweeps. The highest node of the
//! relaxed path seeds a final descent on the Nehari manifold
//! `{<Phi'(u), u> = 0}`, whose fibering maxima are exactly the path maxima of
//! rays through the origin.

use serde::{Deserialize, Serialize};

use crate::energy::Energy;
use crate::error::{Error, Result};
use crate::fields::{classify_case, CaseClass, ProblemConfig};
use crate::linalg::Preconditioner;
use crate::spaces::DiscreteFunction;

use super::descent::{self, Grad, Objective};
use super::global::{grad_of, sample_sphere_with};
use super::projections::fibering_peak;
use super::{settings, SolveReport};

const SPHERE_SAMPLES: usize = 32;
const REPARAM_EVERY: usize = 10;
const STRING_ITERS: usize = 400;

/// Sampled mountain geometry around the origin.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MountainGeometry {
    /// Sphere radius `eta` in the `||.||_{M,1}` norm.
    pub eta: f64,
    /// Smallest sampled energy on the sphere of radius `eta`.
    pub b: f64,
    pub zeta_norm: f64,
    pub zeta_energy: f64,
    pub samples: usize,
}

/// Saddle candidate with the diagnostics of its path.
#[derive(Debug, Clone)]
pub struct MountainPassSolution {
    pub report: SolveReport,
    pub geometry: MountainGeometry,
    /// Highest node energy along the relaxed path. The nodes sample the path
    /// only discretely, so this need not bound the saddle energy.
    pub path_max_energy: f64,
    /// Energies of the relaxed path nodes, from `0` to `zeta`.
    pub path_energies: Vec<f64>,
    /// `|<Phi'(u), u>| / (|<A(u), u>| + lambda int alpha |u|^r)` at the saddle.
    pub nehari_defect: f64,
}

/// Searches radii `||zeta|| 2^-j` for the sphere with the largest sampled minimum energy.
///
/// `extra` directions are included in every sphere sample.
fn geometry_with(
    cfg: &ProblemConfig,
    zeta: &[f64],
    seed: u64,
    extra: &[Vec<f64>],
) -> Result<MountainGeometry> {
    let energy = Energy::new(cfg);
    let zeta_norm = energy.m1_norm(zeta);
    let zeta_energy = energy.value(zeta);
    if !(zeta_energy < 0.0) {
        return Err(Error::Geometry(format!("endpoint energy {zeta_energy:e} is not negative")));
    }
    let mut best: Option<(f64, f64)> = None;
    for j in 1..=40 {
        let eta = zeta_norm * 0.5f64.powi(j);
        let b = sample_sphere_with(cfg, eta, SPHERE_SAMPLES, seed, extra)
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        if b > 0.0 && best.is_none_or(|(_, bb)| b > bb) {
            best = Some((eta, b));
        }
    }
    let (eta, b) =
        best.ok_or_else(|| Error::Geometry("no sampled sphere has positive minimum energy".into()))?;
    Ok(MountainGeometry { eta, b, zeta_norm, zeta_energy, samples: SPHERE_SAMPLES + extra.len() })
}

/// Radius `eta` and level `b > 0` with `Phi >= b` on all sampled points of the `eta`-sphere.
pub fn sample_mountain_geometry(cfg: &ProblemConfig, zeta: &DiscreteFunction, seed: u64) -> Result<MountainGeometry> {
    zeta.check_same_mesh(cfg.mesh.shape())?;
    geometry_with(cfg, zeta.values(), seed, &[])
}

/// Endpoint `t 1` with negative energy: the first power of two past the sign change, doubled.
pub fn mountain_endpoint(cfg: &ProblemConfig) -> Result<DiscreteFunction> {
    let energy = Energy::new(cfg);
    let n = cfg.mesh.num_nodes();
    (0..60)
        .map(|k| 2f64.powi(k))
        .find(|&t| energy.value(&vec![t; n]) < 0.0)
        .map(|t| DiscreteFunction::constant(cfg.mesh.clone(), 2.0 * t))
        .ok_or_else(|| Error::Geometry("no multiple of 1 has negative energy".into()))
}

struct Path<'a> {
    energy: Energy<'a>,
    metric: &'a Preconditioner,
    nodes: Vec<Vec<f64>>,
}

impl Path<'_> {
    fn energies(&self) -> Vec<f64> {
        self.nodes.iter().map(|x| self.energy.value(x)).collect()
    }

    /// Redistributes interior nodes uniformly in `P`-arc length.
    fn reparametrize(&mut self) -> Result<()> {
        let k = self.nodes.len();
        let mut s = vec![0.0; k];
        for i in 1..k {
            let d: Vec<f64> = self.nodes[i].iter().zip(&self.nodes[i - 1]).map(|(a, b)| a - b).collect();
            s[i] = s[i - 1] + self.metric.quadratic_form(&d).max(0.0).sqrt();
        }
        let total = s[k - 1];
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::PathCollapse("path has zero length".into()));
        }
        let old = self.nodes.clone();
        let mut seg = 0;
        for i in 1..k - 1 {
            let target = total * i as f64 / (k - 1) as f64;
            while seg + 1 < k - 1 && s[seg + 1] < target {
                seg += 1;
            }
            let len = s[seg + 1] - s[seg];
            let w = if len > 0.0 { (target - s[seg]) / len } else { 0.0 };
            self.nodes[i] = old[seg].iter().zip(&old[seg + 1]).map(|(a, b)| (1.0 - w) * a + w * b).collect();
        }
        Ok(())
    }

    /// One normal-gradient sweep with step `h` over the interior nodes of
    /// positive energy; nodes already below zero lie past the barrier and
    /// stay put, since the energy is unbounded below there.
    fn sweep(&self, h: f64, energies: &[f64], exec: crate::par::Execution) -> Vec<Vec<f64>> {
        let k = self.nodes.len();
        let moved = exec.map_indexed(k - 2, |j| {
            let i = j + 1;
            let x = &self.nodes[i];
            if !(energies[i] > 0.0) {
                return x.clone();
            }
            let g = self.energy.gradient(x).nodal_covector;
            let d = self.metric.apply_inverse(&g);
            let tau: Vec<f64> = self.nodes[i + 1].iter().zip(&self.nodes[i - 1]).map(|(a, b)| a - b).collect();
            let tt = self.metric.quadratic_form(&tau);
            let c = if tt > 0.0 { self.metric.inner(&d, &tau) / tt } else { 0.0 };
            let y: Vec<f64> = x.iter().zip(&d).zip(&tau).map(|((xi, di), ti)| xi - h * (di - c * ti)).collect();
            // A barrier node that would land past the ridge stays, so the
            // discrete path keeps sampling the barrier.
            if self.energy.value(&y) > 0.0 {
                y
            } else {
                x.clone()
            }
        });
        let mut out = Vec::with_capacity(k);
        out.push(self.nodes[0].clone());
        out.extend(moved);
        out.push(self.nodes[k - 1].clone());
        out
    }
}

/// Energy restricted to the Nehari manifold via the fibering maximum.
struct NehariPeak<'a> {
    energy: Energy<'a>,
}

impl Objective for NehariPeak<'_> {
    fn value(&self, x: &[f64]) -> f64 {
        self.energy.value(x)
    }

    fn gradient(&self, x: &[f64]) -> Grad {
        grad_of(self.energy.gradient(x))
    }

    fn retract(&self, x: Vec<f64>) -> Option<Vec<f64>> {
        let t = fibering_peak(&self.energy, &x)?;
        Some(x.into_iter().map(|v| t * v).collect())
    }
}

/// Path maximum, `NaN` if any node energy is not finite.
fn path_top(energies: &[f64]) -> f64 {
    if energies.iter().all(|e| e.is_finite()) {
        energies.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    } else {
        f64::NAN
    }
}

fn nehari_defect(cfg: &ProblemConfig, u: &[f64]) -> f64 {
    let energy = Energy::new(cfg);
    let pair = energy.gradient(u).pair(u);
    let (rn, al) = (cfg.r.values(), cfg.alpha.values());
    let forcing: f64 = cfg
        .mesh
        .node_weights()
        .iter()
        .enumerate()
        .map(|(i, w)| cfg.lambda * w * al[i] * u[i].abs().powf(rn[i]))
        .sum();
    let elliptic = pair + forcing;
    pair.abs() / (elliptic.abs() + forcing).max(f64::MIN_POSITIVE)
}

/// Mountain-pass critical point between `0` and `zeta`.
pub fn mountain_pass(
    cfg: &ProblemConfig,
    zeta: &DiscreteFunction,
    path_points: usize,
    seed: u64,
) -> Result<MountainPassSolution> {
    zeta.check_same_mesh(cfg.mesh.shape())?;
    cfg.check_subcritical()?;
    if path_points < 3 {
        return Err(Error::Precondition(format!("path needs at least 3 points, got {path_points}")));
    }
    let case = classify_case(cfg);
    if case != CaseClass::SuperlinearC {
        return Err(Error::Precondition(format!("mountain pass needs the superlinear case, got {case}")));
    }
    let z = zeta.values();
    geometry_with(cfg, z, seed, &[])?;

    let energy = Energy::new(cfg);
    let metric = Preconditioner::sobolev(&cfg.mesh);
    let k = path_points;
    let mut path = Path {
        energy,
        metric: &metric,
        nodes: (0..k).map(|i| z.iter().map(|v| v * i as f64 / (k - 1) as f64).collect()).collect(),
    };
    let mut h = 1.0;
    let mut energies = path.energies();
    let mut top = path_top(&energies);
    for it in 1..=STRING_ITERS {
        let trial = path.sweep(h, &energies, cfg.execution);
        let old = std::mem::replace(&mut path.nodes, trial);
        let trial_energies = path.energies();
        let new_top = path_top(&trial_energies);
        if !new_top.is_finite() || new_top > top + 1e-12 * top.abs() {
            path.nodes = old;
            h *= 0.5;
            if h < 1e-12 {
                break;
            }
            continue;
        }
        let settled = top - new_top <= 1e-10 * new_top.abs();
        top = new_top;
        energies = trial_energies;
        if it % REPARAM_EVERY == 0 {
            path.reparametrize()?;
            energies = path.energies();
        }
        if settled {
            break;
        }
        h = (h * 1.5).min(1.0);
    }
    let path_energies = path.energies();
    let (imax, &path_max_energy) = path_energies
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("path has nodes");
    if imax == 0 || imax == k - 1 || !(path_max_energy > 0.0) {
        return Err(Error::PathCollapse(format!("path maximum at node {imax} with energy {path_max_energy:e}")));
    }

    let obj = NehariPeak { energy };
    let out = descent::minimize(&obj, &metric, path.nodes[imax].clone(), settings(cfg));
    let mut report = SolveReport::from_outcome(cfg, out, case);
    if !report.nontrivial {
        return Err(Error::PathCollapse("saddle candidate collapsed to zero".into()));
    }
    let u = report.u.values().to_vec();
    let geometry = geometry_with(cfg, z, seed, &[u.clone()])?;
    if report.energy < geometry.b {
        report.diagnostic = Some(format!("saddle energy {:e} below sampled level b = {:e}", report.energy, geometry.b));
    }
    Ok(MountainPassSolution { nehari_defect: nehari_defect(cfg, &u), report, geometry, path_max_energy, path_energies })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::FieldSpec;
    use crate::mesh::build_rectangle_mesh;
    use std::sync::Arc;

    fn superlinear(n: usize) -> ProblemConfig {
        let m = Arc::new(build_rectangle_mesh(1.0, 1.0, n, n).unwrap());
        let c = |v: f64| FieldSpec::Constant(v);
        ProblemConfig::from_specs(m, &c(2.0), &c(2.5), &c(4.0), &c(1.0), &c(1.0), &c(1.0), 1.0).unwrap()
    }

    #[test]
    fn endpoint_has_negative_energy() {
        let cfg = superlinear(8);
        let z = mountain_endpoint(&cfg).unwrap();
        assert!(crate::energy::phi(&z, &cfg).unwrap() < 0.0);
    }

    #[test]
    fn geometry_requires_negative_endpoint() {
        let cfg = superlinear(8);
        let z = DiscreteFunction::constant(cfg.mesh.clone(), 0.1);
        assert!(matches!(sample_mountain_geometry(&cfg, &z, 0), Err(Error::Geometry(_))));
    }

    #[test]
    fn saddle_on_small_mesh() {
        let cfg = superlinear(8);
        let z = mountain_endpoint(&cfg).unwrap();
        let s = mountain_pass(&cfg, &z, 11, 3).unwrap();
        assert!(s.report.converged, "{:?}", s.report.summary());
        assert!(s.report.energy >= s.geometry.b && s.geometry.b > 0.0);
        assert!(s.path_max_energy > 0.0);
        assert!(s.nehari_defect < 1e-6);
    }

    #[test]
    fn rejects_wrong_case() {
        let m = Arc::new(build_rectangle_mesh(1.0, 1.0, 4, 4).unwrap());
        let c = |v: f64| FieldSpec::Constant(v);
        let cfg = ProblemConfig::from_specs(m, &c(2.0), &c(3.0), &c(1.5), &c(1.0), &c(1.0), &c(1.0), 1.0).unwrap();
        let z = DiscreteFunction::constant(cfg.mesh.clone(), 1.0);
        assert!(matches!(mountain_pass(&cfg, &z, 5, 0), Err(Error::Precondition(_))));
    }
}
