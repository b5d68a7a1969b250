//! Modulars and Luxemburg norms of variable-exponent Lebesgue and Sobolev spaces.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fields::{ExponentField, WeightField, WeightSupport};
use crate::mesh::MeshDomain;

/// Nodal (piecewise-linear) function on a mesh.
#[derive(Debug, Clone)]
pub struct DiscreteFunction {
    mesh: Arc<MeshDomain>,
    values: Vec<f64>,
}

impl DiscreteFunction {
    pub fn new(mesh: Arc<MeshDomain>, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.num_nodes() {
            return Err(Error::MeshMismatch(format!(
                "function has {} values, mesh has {} nodes",
                values.len(),
                mesh.num_nodes()
            )));
        }
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { index, value });
        }
        Ok(Self { mesh, values })
    }

    pub fn zeros(mesh: Arc<MeshDomain>) -> Self {
        let n = mesh.num_nodes();
        Self { mesh, values: vec![0.0; n] }
    }

    pub fn constant(mesh: Arc<MeshDomain>, c: f64) -> Self {
        let n = mesh.num_nodes();
        Self { mesh, values: vec![c; n] }
    }

    pub fn from_fn(mesh: Arc<MeshDomain>, f: impl Fn(f64, f64) -> f64) -> Self {
        let values = mesh.sample_nodes(f);
        Self { mesh, values }
    }

    pub fn mesh(&self) -> &Arc<MeshDomain> {
        &self.mesh
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Same mesh, new nodal values (length is not re-checked beyond a debug assertion).
    pub fn with_values(&self, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), self.values.len());
        Self { mesh: self.mesh.clone(), values }
    }

    pub fn scaled(&self, c: f64) -> Self {
        self.with_values(self.values.iter().map(|v| c * v).collect())
    }

    /// `a*self + b*other`.
    pub fn axpby(&self, a: f64, other: &DiscreteFunction, b: f64) -> Self {
        self.with_values(self.values.iter().zip(&other.values).map(|(x, y)| a * x + b * y).collect())
    }

    /// Piecewise-constant gradient on `cell`.
    pub fn gradient(&self, cell: usize) -> [f64; 2] {
        self.mesh.cell_gradient(&self.values, cell)
    }

    /// Maximum nodal distance to `other`.
    pub fn max_distance(&self, other: &DiscreteFunction) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub(crate) fn check_same_mesh(&self, other_shape: crate::mesh::MeshShape) -> Result<()> {
        if self.mesh.shape() != other_shape {
            return Err(Error::MeshMismatch("function and field live on different meshes".into()));
        }
        Ok(())
    }
}

/// `sum_i w_i |u_i|^{p_i}` over the nodal (trapezoid) quadrature.
pub(crate) fn volume_modular(mesh: &MeshDomain, u: &[f64], p: &[f64]) -> f64 {
    mesh.node_weights().iter().zip(u).zip(p).map(|((w, v), e)| w * v.abs().powf(*e)).sum()
}

/// `sum_T |T| |grad u|_T^{p_T}` with raw gradient magnitudes.
pub(crate) fn gradient_modular(mesh: &MeshDomain, u: &[f64], p_cell: &[f64]) -> f64 {
    (0..mesh.num_cells())
        .map(|t| {
            let [gx, gy] = mesh.cell_gradient(u, t);
            mesh.cell_areas()[t] * (gx * gx + gy * gy).sqrt().powf(p_cell[t])
        })
        .sum()
}

/// `sum_j w_j beta_j |u_j|^{p_j}` over boundary nodes.
pub(crate) fn boundary_modular(mesh: &MeshDomain, u: &[f64], p: &[f64], beta: &[f64]) -> f64 {
    mesh.boundary_nodes()
        .iter()
        .zip(mesh.boundary_weights())
        .map(|(&n, w)| w * beta[n] * u[n].abs().powf(p[n]))
        .sum()
}

pub fn lebesgue_modular(u: &DiscreteFunction, p: &ExponentField) -> Result<f64> {
    u.check_same_mesh(p.shape())?;
    Ok(volume_modular(&u.mesh, &u.values, p.values()))
}

fn check_robin(u: &DiscreteFunction, beta: &WeightField) -> Result<()> {
    u.check_same_mesh(beta.shape())?;
    if beta.support() != WeightSupport::Boundary {
        return Err(Error::InvalidWeight("beta must be a boundary weight".into()));
    }
    if !beta.is_robin() {
        return Err(Error::InvalidWeight(
            "beta vanishes on the boundary; the Robin norm degenerates".into(),
        ));
    }
    Ok(())
}

/// `int |grad u|^p dx + int beta |u|^p dsigma`.
pub fn sobolev_beta_modular(u: &DiscreteFunction, p: &ExponentField, beta: &WeightField) -> Result<f64> {
    u.check_same_mesh(p.shape())?;
    check_robin(u, beta)?;
    Ok(sobolev_modular_raw(&u.mesh, &u.values, p, beta.values()))
}

pub(crate) fn sobolev_modular_raw(mesh: &MeshDomain, u: &[f64], p: &ExponentField, beta: &[f64]) -> f64 {
    gradient_modular(mesh, u, p.cell_values()) + boundary_modular(mesh, u, p.values(), beta)
}

const NORM_REL_TOL: f64 = 1e-12;
const NORM_MAX_ITER: usize = 400;

/// Solves `modular(u / tau) = 1` for `tau` by geometric bisection.
///
/// `modular` must be continuous and strictly decreasing in `tau`; the caller
/// passes the scaled modular as a closure.
pub(crate) fn luxemburg_root(modular: impl Fn(f64) -> f64) -> Result<f64> {
    let at_one = modular(1.0);
    if at_one == 0.0 {
        return Ok(0.0);
    }
    let mut lo = 1e-16;
    let mut hi = at_one.max(1.0) + 1.0;
    let mut expansions = 0;
    while modular(hi) > 1.0 {
        hi *= 2.0;
        expansions += 1;
        if expansions > 2000 || !hi.is_finite() {
            return Err(Error::RootFinding(format!("cannot bracket from above: hi = {hi:e}")));
        }
    }
    while modular(lo) < 1.0 {
        lo *= 0.5;
        expansions += 1;
        if expansions > 4000 || lo == 0.0 {
            return Err(Error::RootFinding(format!("cannot bracket from below: lo = {lo:e}")));
        }
    }
    for _ in 0..NORM_MAX_ITER {
        if hi - lo <= NORM_REL_TOL * 0.25 * hi {
            return Ok(0.5 * (lo + hi));
        }
        let mid = if hi / lo > 4.0 { (lo * hi).sqrt() } else { 0.5 * (lo + hi) };
        if modular(mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::RootFinding(format!(
        "bisection stalled with bracket [{lo:e}, {hi:e}] after {NORM_MAX_ITER} iterations"
    )))
}

fn scaled_powers(values: &[f64], exps: &[f64], tau: f64, weights: impl Iterator<Item = f64>) -> f64 {
    weights.zip(values).zip(exps).map(|((w, v), e)| w * (v.abs() / tau).powf(*e)).sum()
}

pub fn luxemburg_norm(u: &DiscreteFunction, p: &ExponentField) -> Result<f64> {
    u.check_same_mesh(p.shape())?;
    let m = &u.mesh;
    luxemburg_root(|tau| scaled_powers(&u.values, p.values(), tau, m.node_weights().iter().copied()))
}

/// Luxemburg-type norm generated by [`sobolev_beta_modular`].
pub fn sobolev_beta_norm(u: &DiscreteFunction, p: &ExponentField, beta: &WeightField) -> Result<f64> {
    u.check_same_mesh(p.shape())?;
    check_robin(u, beta)?;
    Ok(sobolev_norm_raw(&u.mesh, &u.values, p, beta.values())?)
}

pub(crate) fn sobolev_norm_raw(mesh: &MeshDomain, u: &[f64], p: &ExponentField, beta: &[f64]) -> Result<f64> {
    // Precompute |grad u| per cell and |u| on the boundary once; the bisection
    // then only rescales.
    let grads: Vec<f64> = (0..mesh.num_cells())
        .map(|t| {
            let [gx, gy] = mesh.cell_gradient(u, t);
            (gx * gx + gy * gy).sqrt()
        })
        .collect();
    let pc = p.cell_values();
    let pn = p.values();
    let bnodes = mesh.boundary_nodes();
    let bw = mesh.boundary_weights();
    luxemburg_root(|tau| {
        let vol: f64 = (0..grads.len()).map(|t| mesh.cell_areas()[t] * (grads[t] / tau).powf(pc[t])).sum();
        let bnd: f64 = bnodes
            .iter()
            .zip(bw)
            .map(|(&n, w)| w * beta[n] * (u[n].abs() / tau).powf(pn[n]))
            .sum();
        vol + bnd
    })
}

/// `(int |u v| dx, 2 ||u||_{p} ||v||_{p'})` with `p' = p/(p-1)`.
pub fn holder_pair_bound(u: &DiscreteFunction, v: &DiscreteFunction, p: &ExponentField) -> Result<(f64, f64)> {
    u.check_same_mesh(p.shape())?;
    v.check_same_mesh(p.shape())?;
    let m = &u.mesh;
    let lhs = m.node_weights().iter().zip(&u.values).zip(&v.values).map(|((w, a), b)| w * (a * b).abs()).sum();
    let conj = p.conjugate(m);
    let rhs = 2.0 * luxemburg_norm(u, p)? * luxemburg_norm(v, &conj)?;
    Ok((lhs, rhs))
}
