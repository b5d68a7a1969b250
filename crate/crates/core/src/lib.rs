//! Variational solvers for the Robin/Neumann eigenproblem of the
//! `(p(x), q(x))`-Laplacian with a weighted `r(x)`-power forcing term,
//! discretised with piecewise-linear elements on rectangles.
//!
//! The crate is layered bottom-up: [`mesh`] (geometry and quadrature),
//! [`fields`] (exponents, weights, problem data), [`spaces`] (modulars and
//! Luxemburg norms), [`energy`] (the functional, its derivative and the
//! explicit thresholds) and [`solvers`] (one algorithm per existence regime).

pub mod energy;
pub mod error;
pub mod fields;
mod linalg;
pub mod mesh;
pub mod par;
pub mod random;
pub mod solvers;
pub mod spaces;

pub use error::{Error, Result};
pub use fields::{
    classify_case, critical_exponent, make_exponent, pointwise_max_exponent, CaseClass, ExponentField, FieldSpec,
    ProblemConfig, Tolerances, WeightField, WeightSupport,
};
pub use mesh::{build_rectangle_mesh, integrate_boundary, integrate_volume, MeshDomain, MeshShape};
pub use par::Execution;
pub use spaces::{
    holder_pair_bound, lebesgue_modular, luxemburg_norm, sobolev_beta_modular, sobolev_beta_norm, DiscreteFunction,
};
