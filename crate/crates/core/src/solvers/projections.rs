//! Retractions onto the constraint sets of the homogeneous problems.

use crate::energy::nehari_integrals;
use crate::error::{Error, Result};
use crate::fields::{ProblemConfig, WeightField};
use crate::mesh::MeshDomain;
use crate::spaces::DiscreteFunction;

/// Shift `s` with `int alpha |u - s|^{q-2} (u - s) = 0`.
///
/// The left side is strictly decreasing in `s` and changes sign on
/// `[min u, max u]`; Newton steps are safeguarded by bisection.
pub(crate) fn constraint_shift(mesh: &MeshDomain, alpha: &[f64], q: f64, u: &[f64]) -> f64 {
    let w = mesh.node_weights();
    let (mut lo, mut hi) = u.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    if hi - lo == 0.0 {
        return lo;
    }
    let h = |s: f64| -> (f64, f64) {
        let mut val = 0.0;
        let mut der = 0.0;
        for i in 0..u.len() {
            let d = u[i] - s;
            let a = d.abs();
            if a > 0.0 {
                let pw = a.powf(q - 2.0);
                val += w[i] * alpha[i] * pw * d;
                der += w[i] * alpha[i] * pw;
            }
        }
        (val, (q - 1.0) * der)
    };
    let total_w: f64 = w.iter().zip(alpha).map(|(a, b)| a * b).sum();
    let mut s = w.iter().zip(alpha).zip(u).map(|((a, b), v)| a * b * v).sum::<f64>() / total_w;
    let width = hi - lo;
    for _ in 0..200 {
        let (val, der) = h(s);
        if val == 0.0 {
            return s;
        }
        if val > 0.0 {
            lo = s;
        } else {
            hi = s;
        }
        if hi - lo <= 1e-16 * width.max(s.abs()) {
            break;
        }
        let newton = if der > 0.0 { s + val / der } else { f64::NAN };
        s = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if (newton - s).abs() == 0.0 && (val / der).abs() <= 1e-17 * width.max(s.abs()) {
            break;
        }
    }
    s
}

pub(crate) fn shift_onto_constraint(mesh: &MeshDomain, alpha: &[f64], q: f64, u: &[f64]) -> Vec<f64> {
    let s = constraint_shift(mesh, alpha, q, u);
    u.iter().map(|v| v - s).collect()
}

/// Projects `u` onto `{int alpha |u|^{q-2} u = 0}` by a constant shift.
pub fn project_to_constraint(u: &DiscreteFunction, alpha: &WeightField, q: f64) -> Result<DiscreteFunction> {
    u.check_same_mesh(alpha.shape())?;
    if !(q > 1.0) {
        return Err(Error::Precondition(format!("constraint exponent must exceed 1, got {q}")));
    }
    Ok(u.with_values(shift_onto_constraint(u.mesh(), alpha.values(), q, u.values())))
}

/// Direction of monotonicity of `t -> t^{p-q}` over the mesh.
fn p_minus_q_sign(cfg: &ProblemConfig, q: f64) -> Result<f64> {
    if cfg.p.sup() < q {
        Ok(-1.0)
    } else if cfg.p.inf() > q {
        Ok(1.0)
    } else {
        Err(Error::Precondition(format!(
            "p - q changes sign (p in [{}, {}], q = {q}); the Nehari scaling is not unique",
            cfg.p.inf(),
            cfg.p.sup()
        )))
    }
}

/// Scaling `t > 0` with `G1(t u) = 0`, i.e. `int t^{p-q} |grad u|^p = lambda int alpha |u|^q - int |grad u|^q`.
pub(crate) fn nehari_scale(cfg: &ProblemConfig, u: &[f64]) -> Result<f64> {
    let q = cfg
        .homogeneous_q()
        .ok_or_else(|| Error::Precondition("Nehari projection needs the homogeneous Neumann case".into()))?;
    let sign = p_minus_q_sign(cfg, q)?;
    let n = nehari_integrals(cfg, u);
    let rhs = cfg.lambda * n.mass_q - n.grad_q;
    if !(rhs > 0.0) {
        return Err(Error::BelowThreshold(format!(
            "lambda int alpha|u|^q = {:e} does not exceed int |grad u|^q = {:e}",
            cfg.lambda * n.mass_q,
            n.grad_q
        )));
    }
    if !(n.grad_p > 0.0) {
        return Err(Error::Precondition("u has zero gradient; no Nehari scaling exists".into()));
    }
    if let Some(p) = cfg.p.constant_value() {
        return Ok((rhs / n.grad_p).powf(1.0 / (p - q)));
    }
    let m = &cfg.mesh;
    let pc = cfg.p.cell_values();
    let grads: Vec<f64> = (0..m.num_cells())
        .map(|t| {
            let [gx, gy] = m.cell_gradient(u, t);
            (gx * gx + gy * gy).sqrt()
        })
        .collect();
    // F(ln t) - rhs is monotone with slope sign `sign`.
    let f = |lt: f64| -> f64 {
        (0..grads.len())
            .filter(|&t| grads[t] > 0.0)
            .map(|t| m.cell_areas()[t] * ((pc[t] - q) * lt + pc[t] * grads[t].ln()).exp())
            .sum::<f64>()
            - rhs
    };
    let (mut lo, mut hi) = (-1.0, 1.0);
    let mut guard = 0;
    while sign * f(lo) > 0.0 || sign * f(hi) < 0.0 {
        lo -= 2.0 * (hi - lo);
        hi += 2.0 * (hi - lo);
        guard += 1;
        if guard > 60 {
            return Err(Error::RootFinding("cannot bracket the Nehari scaling".into()));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if sign * f(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    Ok((0.5 * (lo + hi)).exp())
}

/// Fibering scale `t` placing `t u` on the Nehari manifold of the homogeneous problem.
pub fn nehari_project(u: &DiscreteFunction, cfg: &ProblemConfig) -> Result<f64> {
    u.check_same_mesh(cfg.mesh.shape())?;
    nehari_scale(cfg, u.values())
}

/// `t > 0` maximising `t -> Phi(t u)`, from the sign change of `<Phi'(t u), u>`.
pub(crate) fn fibering_peak(energy: &crate::energy::Energy<'_>, u: &[f64]) -> Option<f64> {
    let h = |t: f64| -> f64 {
        let tu: Vec<f64> = u.iter().map(|v| t * v).collect();
        energy.gradient(&tu).pair(u)
    };
    let (mut lo, mut hi) = (1.0, 1.0);
    let mut guard = 0;
    if h(1.0) > 0.0 {
        while h(hi) > 0.0 {
            lo = hi;
            hi *= 2.0;
            guard += 1;
            if guard > 200 {
                return None;
            }
        }
    } else {
        while h(lo) <= 0.0 {
            hi = lo;
            lo *= 0.5;
            guard += 1;
            if guard > 200 {
                return None;
            }
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if h(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    Some(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::{constraint_g1, constraint_g2};
    use crate::fields::FieldSpec;
    use crate::mesh::build_rectangle_mesh;
    use approx::assert_relative_eq;
    use std::sync::Arc;

    fn homogeneous(p: FieldSpec, q: f64, lambda: f64) -> ProblemConfig {
        let m = Arc::new(build_rectangle_mesh(1.0, 1.0, 8, 8).unwrap());
        ProblemConfig::from_specs(m, &p, &q.into(), &q.into(), &1.0.into(), &0.0.into(), &0.0.into(), lambda).unwrap()
    }

    #[test]
    fn shift_lands_on_constraint() {
        let c = homogeneous(2.5.into(), 4.0, 10.0);
        let u = DiscreteFunction::from_fn(c.mesh.clone(), |x, y| (x * 3.0).exp() + y);
        for q in [1.5, 2.0, 3.0, 4.0] {
            let v = project_to_constraint(&u, &c.alpha, q).unwrap();
            let g = constraint_g2(&v, &c.alpha, q).unwrap();
            let scale = constraint_g2(&v.with_values(v.values().iter().map(|a| a.abs()).collect()), &c.alpha, q).unwrap();
            assert!(g.abs() < 1e-12 * scale, "q={q}: {g}");
        }
        let q2 = project_to_constraint(&u, &c.alpha, 2.0).unwrap();
        let mean: f64 = q2.values().iter().zip(c.mesh.node_weights()).map(|(a, w)| a * w).sum();
        assert!(mean.abs() < 1e-13);
    }

    #[test]
    fn closed_form_example() {
        // lambda int alpha |u|^q - int |grad u|^q = 2 int |grad u|^p with p = 2, q = 4 gives t^{-2} = 2.
        let c = homogeneous(2.0.into(), 4.0, 1.0);
        let pi = std::f64::consts::PI;
        let u = DiscreteFunction::from_fn(c.mesh.clone(), |x, _| (pi * x).cos());
        let n = nehari_integrals(&c, u.values());
        let cfg = c.with_lambda((n.grad_q + 2.0 * n.grad_p) / n.mass_q);
        let t = nehari_project(&u, &cfg).unwrap();
        assert_relative_eq!(t, std::f64::consts::FRAC_1_SQRT_2, max_relative = 1e-12);
    }

    #[test]
    fn fixed_point_and_postcondition() {
        let c = homogeneous("2.2 + 0.5*x*y".into(), 4.0, 400.0);
        let u = DiscreteFunction::from_fn(c.mesh.clone(), |x, y| (2.0 * x).sin() - y * y + 0.1);
        let u = project_to_constraint(&u, &c.alpha, 4.0).unwrap();
        let t = nehari_project(&u, &c).unwrap();
        let w = u.scaled(t);
        let g1 = constraint_g1(&w, &c).unwrap();
        let mass: f64 = nehari_integrals(&c, w.values()).mass_q * c.lambda;
        assert!(g1.abs() < 1e-9 * mass, "{g1}");
        let again = nehari_project(&w, &c).unwrap();
        assert_relative_eq!(again, 1.0, max_relative = 1e-9);
    }

    #[test]
    fn below_threshold_is_reported() {
        let c = homogeneous(2.5.into(), 4.0, 1e-6);
        let u = DiscreteFunction::from_fn(c.mesh.clone(), |x, _| x - 0.5);
        assert!(matches!(nehari_project(&u, &c), Err(Error::BelowThreshold(_))));
        let mixed = homogeneous("3 + 2*x".into(), 4.0, 1e6);
        assert!(matches!(nehari_project(&u, &mixed), Err(Error::Precondition(_))));
    }
}
