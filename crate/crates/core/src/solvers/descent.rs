//! Preconditioned gradient descent with Armijo backtracking and a retraction.
//!
//! The search direction is `-P^{-1} g` with `P` the H^1 Riesz map of the mesh,
//! so step lengths are resolution independent. The initial trial step is a
//! Barzilai-Borwein estimate from the previous iterate, safeguarded by
//! backtracking. Constrained problems supply a retraction that maps a trial
//! point back onto the feasible set (or rejects it).

use crate::linalg::Preconditioner;

/// Gradient of an objective together with its stationarity measures.
#[derive(Debug, Clone)]
pub(crate) struct Grad {
    pub covector: Vec<f64>,
    /// Scale-relative residual compared against the relative tolerance.
    pub relative: f64,
    /// Euclidean norm of the covector.
    pub absolute: f64,
}

pub(crate) trait Objective {
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64]) -> Grad;
    /// Maps a trial point to the feasible set; `None` rejects it.
    fn retract(&self, x: Vec<f64>) -> Option<Vec<f64>> {
        Some(x)
    }
    /// Restricts a search direction (e.g. to a symmetry class).
    fn project_direction(&self, _d: &mut [f64]) {}
    /// Stops the iteration early when the iterate has collapsed to zero.
    fn collapsed(&self, _x: &[f64]) -> bool {
        false
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Settings {
    pub max_iter: usize,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub c1: f64,
    pub shrink: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Status {
    Converged,
    MaxIter,
    LineSearchFailed,
    Collapsed,
    NonFinite,
}

#[derive(Debug, Clone)]
pub(crate) struct Outcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub status: Status,
    /// `(value, relative residual)` per iteration, starting with the initial point.
    pub trace: Vec<(f64, f64)>,
}

const MAX_BACKTRACKS: usize = 60;
const STEP_MIN: f64 = 1e-14;
const STEP_MAX: f64 = 1e14;
/// Relative energy noise tolerated by the line search.
const ENERGY_NOISE: f64 = 1e-14;
/// Below this predicted relative decrease the energy cannot resolve progress
/// and the line search switches to the dual norm of the gradient as merit.
const ROUNDOFF_REGIME: f64 = 1e-10;

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Iterate with its gradient and projected search direction `d = -P^{-1} g`.
struct Point {
    x: Vec<f64>,
    f: f64,
    g: Grad,
    d: Vec<f64>,
    /// `g . d = -|g|^2_{P^{-1}}` (after projection).
    slope: f64,
}

fn point<O: Objective>(obj: &O, metric: &Preconditioner, x: Vec<f64>, f: f64) -> Point {
    let g = obj.gradient(&x);
    let mut d = metric.apply_inverse(&g.covector);
    d.iter_mut().for_each(|v| *v = -*v);
    obj.project_direction(&mut d);
    let slope = dot(&g.covector, &d);
    Point { x, f, g, d, slope }
}

pub(crate) fn minimize<O: Objective>(
    obj: &O,
    metric: &Preconditioner,
    x0: Vec<f64>,
    settings: Settings,
) -> Outcome {
    let x = obj.retract(x0.clone()).unwrap_or(x0);
    let f = obj.value(&x);
    let mut cur = point(obj, metric, x, f);
    let mut trace = vec![(cur.f, cur.g.relative)];
    let mut step = 1.0;
    let mut prev: Option<(Vec<f64>, Vec<f64>)> = None;
    let finish = |p: Point, it, status, trace| Outcome {
        x: p.x,
        value: p.f,
        iterations: it,
        status,
        trace,
    };

    for it in 0..settings.max_iter {
        if !cur.f.is_finite() || !cur.g.absolute.is_finite() {
            return finish(cur, it, Status::NonFinite, trace);
        }
        if cur.g.relative < settings.rel_tol || cur.g.absolute < settings.abs_tol {
            return finish(cur, it, Status::Converged, trace);
        }
        if obj.collapsed(&cur.x) {
            return finish(cur, it, Status::Collapsed, trace);
        }
        if !(cur.slope < 0.0) {
            return finish(cur, it, Status::LineSearchFailed, trace);
        }

        // Barzilai-Borwein estimate in the metric norm: |s|_P^2 / (s . y).
        if let Some((xp, gp)) = &prev {
            let s: Vec<f64> = cur.x.iter().zip(xp).map(|(a, b)| a - b).collect();
            let y: Vec<f64> = cur.g.covector.iter().zip(gp).map(|(a, b)| a - b).collect();
            let sy = dot(&s, &y);
            let bb = metric.quadratic_form(&s) / sy;
            step = if sy > 0.0 && bb.is_finite() && bb > 0.0 { bb } else { 2.0 * step };
        }
        step = step.clamp(STEP_MIN, STEP_MAX);

        let roundoff = -cur.slope * step < ROUNDOFF_REGIME * cur.f.abs();
        let noise = ENERGY_NOISE * cur.f.abs();
        let mut next = None;
        let mut t = step;
        for _ in 0..MAX_BACKTRACKS {
            let trial: Vec<f64> = cur.x.iter().zip(&cur.d).map(|(a, b)| a + t * b).collect();
            if let Some(xt) = obj.retract(trial) {
                let ft = obj.value(&xt);
                if ft.is_finite() {
                    if !roundoff {
                        if ft <= cur.f + settings.c1 * t * cur.slope {
                            next = Some((point(obj, metric, xt, ft), t));
                            break;
                        }
                    } else if ft <= cur.f + noise {
                        let p = point(obj, metric, xt, ft);
                        if p.slope > cur.slope {
                            next = Some((p, t));
                            break;
                        }
                    }
                }
            }
            t *= settings.shrink;
            if t < STEP_MIN {
                break;
            }
        }
        let Some((p, t)) = next else {
            return finish(cur, it, Status::LineSearchFailed, trace);
        };
        step = t;
        let old = std::mem::replace(&mut cur, p);
        prev = Some((old.x, old.g.covector));
        trace.push((cur.f, cur.g.relative));
    }
    let converged = cur.g.relative < settings.rel_tol || cur.g.absolute < settings.abs_tol;
    let status = if converged { Status::Converged } else { Status::MaxIter };
    finish(cur, settings.max_iter, status, trace)
}
