//! Flat dotted-key TOML run configuration.
//!
//! ```toml
//! mesh.nx = 32
//! mesh.ny = 32
//! problem.p = "2 + 0.5*x"
//! problem.q = 3
//! problem.r = 1.5
//! problem.lambda = 1.0
//! solver.seed = 7
//! ```

use std::path::Path;
use std::sync::Arc;

use pqspectra_core::{build_rectangle_mesh, CaseClass, FieldSpec, ProblemConfig};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshSection {
    #[serde(default = "one")]
    pub lx: f64,
    #[serde(default = "one")]
    pub ly: f64,
    pub nx: usize,
    pub ny: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSection {
    pub p: FieldSpec,
    pub q: FieldSpec,
    pub r: FieldSpec,
    #[serde(default = "unit_spec")]
    pub alpha: FieldSpec,
    #[serde(default = "unit_spec")]
    pub beta1: FieldSpec,
    #[serde(default = "unit_spec")]
    pub beta2: FieldSpec,
    /// Required by `solve` except in the small-lambda case, where it defaults to the safe cap.
    pub lambda: Option<f64>,
    /// Case tag such as `"Sublinear-A"`; selects the solver instead of the classifier.
    pub case: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    #[default]
    Geometric,
    Linear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub min: f64,
    pub max: f64,
    pub steps: usize,
    #[serde(default)]
    pub spacing: Spacing,
    /// Interpret `min` and `max` as multiples of the estimated threshold.
    #[serde(default)]
    pub relative_to_sigma: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    #[serde(default = "default_path_points")]
    pub path_points: usize,
    #[serde(default = "default_probes")]
    pub probes: usize,
    /// Number of disjoint-support seeds in the sublinear case.
    #[serde(default = "default_family")]
    pub family: usize,
    #[serde(default = "default_epsilon")]
    pub epsilon_reg: f64,
}

impl Default for SolverSection {
    fn default() -> Self {
        Self {
            tol: default_tol(),
            max_iter: default_max_iter(),
            seed: 0,
            restarts: default_restarts(),
            path_points: default_path_points(),
            probes: default_probes(),
            family: default_family(),
            epsilon_reg: default_epsilon(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mesh: MeshSection,
    pub problem: ProblemSection,
    pub sweep: Option<SweepSection>,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub output: OutputSection,
}

fn one() -> f64 {
    1.0
}
fn unit_spec() -> FieldSpec {
    FieldSpec::Constant(1.0)
}
fn default_tol() -> f64 {
    1e-8
}
fn default_max_iter() -> usize {
    20_000
}
fn default_restarts() -> usize {
    4
}
fn default_path_points() -> usize {
    21
}
fn default_probes() -> usize {
    8
}
fn default_family() -> usize {
    3
}
fn default_epsilon() -> f64 {
    1e-8
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    fn validate(&self) -> Result<(), CliError> {
        let s = &self.solver;
        if !(s.tol > 0.0 && s.tol.is_finite()) {
            return Err(CliError::Config(format!("solver.tol must be positive, got {}", s.tol)));
        }
        if !(s.epsilon_reg >= 0.0 && s.epsilon_reg.is_finite()) {
            return Err(CliError::Config(format!("solver.epsilon_reg must be >= 0, got {}", s.epsilon_reg)));
        }
        if s.max_iter == 0 || s.restarts == 0 || s.probes == 0 {
            return Err(CliError::Config("solver.max_iter, solver.restarts and solver.probes must be >= 1".into()));
        }
        if let Some(w) = &self.sweep {
            if w.steps == 0 {
                return Err(CliError::Config("sweep.steps must be >= 1".into()));
            }
            if !(w.min > 0.0 && w.max >= w.min && w.max.is_finite()) {
                return Err(CliError::Config(format!("sweep range must satisfy 0 < min <= max, got [{}, {}]", w.min, w.max)));
            }
        }
        if let Some(l) = self.problem.lambda {
            if !(l >= 0.0 && l.is_finite()) {
                return Err(CliError::Config(format!("problem.lambda must be finite and >= 0, got {l}")));
            }
        }
        self.case_override()?;
        Ok(())
    }

    pub fn case_override(&self) -> Result<Option<CaseClass>, CliError> {
        match &self.problem.case {
            None => Ok(None),
            Some(tag) => CaseClass::from_tag(tag)
                .map(Some)
                .ok_or_else(|| CliError::Config(format!("problem.case: unknown case tag `{tag}`"))),
        }
    }

    /// Applies command-line overrides.
    pub fn with_overrides(mut self, seed: Option<u64>, tol: Option<f64>) -> Result<Self, CliError> {
        if let Some(s) = seed {
            self.solver.seed = s;
        }
        if let Some(t) = tol {
            self.solver.tol = t;
        }
        self.validate()?;
        Ok(self)
    }

    /// SHA-256 of the resolved configuration, output location excluded.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.output = OutputSection::default();
        let json = serde_json::to_string(&canonical).expect("config serialises");
        Sha256::digest(json.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Builds the problem at `lambda` (or the configured value, or 1 as a placeholder).
    pub fn problem(&self, lambda: Option<f64>) -> Result<ProblemConfig, CliError> {
        let m = &self.mesh;
        let mesh = Arc::new(build_rectangle_mesh(m.lx, m.ly, m.nx, m.ny)?);
        let p = &self.problem;
        let lambda = lambda.or(p.lambda).unwrap_or(1.0);
        let mut cfg = ProblemConfig::from_specs(mesh, &p.p, &p.q, &p.r, &p.alpha, &p.beta1, &p.beta2, lambda)?;
        cfg.tolerances.residual = self.solver.tol;
        cfg.tolerances.max_iter = self.solver.max_iter;
        cfg.epsilon_reg = self.solver.epsilon_reg;
        Ok(cfg)
    }
}
