//! One solver per existence regime, all built on a shared preconditioned
//! descent engine.
//!
//! | regime | solver |
//! |---|---|
//! | sublinear (`r^+ < min{p^-, q^-}`) | [`minimize_descent`], [`solve_sublinear_family`] |
//! | small lambda (`r^- < min{p^-, q^-} <= r^+`) | [`minimize_in_ball`] |
//! | superlinear (`M^+ < r^-`) | [`mountain_pass`] |
//! | homogeneous, `p^+ < q` | [`sigma_threshold`], [`nehari_minimize`], [`eigen_sweep`] |
//! | homogeneous, `q < p^-` | [`sigma_threshold`], [`constrained_global_minimize`], [`eigen_sweep`] |

use serde::{Deserialize, Serialize};

use crate::energy::Energy;
use crate::fields::{CaseClass, ProblemConfig};
use crate::spaces::DiscreteFunction;

pub(crate) mod descent;
mod global;
mod homogeneous;
mod mountain;
mod projections;

pub use global::{
    disjoint_support_seeds, minimize_descent, minimize_in_ball, solve_sublinear_family, BallSolution,
    SymmetryClass, SYMMETRY_CLASSES,
};
pub use homogeneous::{
    constrained_global_minimize, eigen_sweep, energy_identity_defect, found_violations, geometric_grid,
    lagrange_residuals, nehari_minimize, sigma_estimate, sigma_threshold, ConstraintSpace, LagrangeResiduals,
    SigmaEstimate, SweepOptions, SweepRecord,
};
pub use mountain::{mountain_endpoint, mountain_pass, sample_mountain_geometry, MountainGeometry, MountainPassSolution};
pub use projections::{nehari_project, project_to_constraint};

/// Why an iteration stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Converged,
    MaxIterations,
    LineSearchFailed,
    CollapsedToZero,
    NonFinite,
}

impl From<descent::Status> for SolveStatus {
    fn from(s: descent::Status) -> Self {
        match s {
            descent::Status::Converged => SolveStatus::Converged,
            descent::Status::MaxIter => SolveStatus::MaxIterations,
            descent::Status::LineSearchFailed => SolveStatus::LineSearchFailed,
            descent::Status::Collapsed => SolveStatus::CollapsedToZero,
            descent::Status::NonFinite => SolveStatus::NonFinite,
        }
    }
}

/// Lagrange multipliers attached to a constrained critical point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Multipliers {
    /// `Phi' + c G1' + d G2' = 0` on the Nehari manifold intersected with `C_q`.
    Nehari { c: f64, d: f64, stationarity: f64 },
    /// `Phi' + a G2' = 0` on `C`; `a_unit_test` is the value implied by testing with `v = 1`.
    Single { a: f64, a_unit_test: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub energy: f64,
    pub residual: f64,
}

/// Critical-point candidate returned by every solver.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub u: DiscreteFunction,
    pub lambda: f64,
    /// `Phi_lambda(u)`.
    pub energy: f64,
    /// Scale-relative residual `|Phi'(u)| / (|elliptic part| + |forcing part|)`.
    pub residual: f64,
    /// Euclidean norm of the nodal covector of `Phi'(u)`.
    pub residual_abs: f64,
    /// Mass-weighted dual-norm surrogate of `Phi'(u)`.
    pub residual_weighted: f64,
    pub iterations: usize,
    pub converged: bool,
    pub status: SolveStatus,
    pub case: CaseClass,
    pub multipliers: Option<Multipliers>,
    /// `||u||_{M,1}`.
    pub u_norm: f64,
    /// `u_norm` exceeds the triviality threshold.
    pub nontrivial: bool,
    pub trace: Vec<TracePoint>,
    /// Amplitude of the seed the run started from, when seeded.
    pub seed_amplitude: Option<f64>,
    pub diagnostic: Option<String>,
}

/// Scalar part of a [`SolveReport`], suitable for serialisation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportSummary {
    pub case: CaseClass,
    pub lambda: f64,
    pub energy: f64,
    pub residual: f64,
    pub residual_abs: f64,
    pub residual_weighted: f64,
    pub iterations: usize,
    pub converged: bool,
    pub status: SolveStatus,
    pub u_norm: f64,
    pub nontrivial: bool,
    pub multipliers: Option<Multipliers>,
    pub diagnostic: Option<String>,
}

impl SolveReport {
    /// Converged and nontrivial: a discrete eigenpair witness.
    pub fn found(&self) -> bool {
        self.converged && self.nontrivial
    }

    pub fn summary(&self) -> ReportSummary {
        ReportSummary {
            case: self.case,
            lambda: self.lambda,
            energy: self.energy,
            residual: self.residual,
            residual_abs: self.residual_abs,
            residual_weighted: self.residual_weighted,
            iterations: self.iterations,
            converged: self.converged,
            status: self.status,
            u_norm: self.u_norm,
            nontrivial: self.nontrivial,
            multipliers: self.multipliers,
            diagnostic: self.diagnostic.clone(),
        }
    }

    /// Builds a report at `x`, recomputing every diagnostic from `(x, cfg)`.
    pub(crate) fn at(cfg: &ProblemConfig, x: Vec<f64>, case: CaseClass) -> Self {
        let energy = Energy::new(cfg);
        let g = energy.gradient(&x);
        let u_norm = energy.m1_norm(&x);
        let tol = &cfg.tolerances;
        let converged = g.is_stationary(tol.residual, tol.residual_abs);
        SolveReport {
            lambda: cfg.lambda,
            energy: energy.value(&x),
            residual: g.relative_residual,
            residual_abs: g.residual_norm,
            residual_weighted: g.weighted_residual,
            iterations: 0,
            converged,
            status: if converged { SolveStatus::Converged } else { SolveStatus::MaxIterations },
            case,
            multipliers: None,
            nontrivial: u_norm > tol.triviality,
            u_norm,
            trace: Vec::new(),
            seed_amplitude: None,
            diagnostic: None,
            u: DiscreteFunction::new(cfg.mesh.clone(), x).expect("solver iterates are finite"),
        }
    }

    pub(crate) fn from_outcome(cfg: &ProblemConfig, out: descent::Outcome, case: CaseClass) -> Self {
        let status: SolveStatus = out.status.into();
        let mut rep = Self::at(cfg, out.x, case);
        rep.iterations = out.iterations;
        rep.trace = out.trace.into_iter().map(|(energy, residual)| TracePoint { energy, residual }).collect();
        // A run may stop for another reason while sitting on a stationary point.
        if !rep.converged {
            rep.status = status;
        }
        rep
    }
}

pub(crate) fn settings(cfg: &ProblemConfig) -> descent::Settings {
    let t = &cfg.tolerances;
    descent::Settings {
        max_iter: t.max_iter,
        rel_tol: t.residual,
        abs_tol: t.residual_abs,
        c1: t.armijo_c1,
        shrink: t.armijo_shrink,
    }
}
