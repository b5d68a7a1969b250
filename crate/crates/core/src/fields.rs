//! Variable exponents, weights and the problem data they assemble into.

use std::fmt;
use std::sync::Arc;

use evalexpr::{
    build_operator_tree, ContextWithMutableVariables, DefaultNumericTypes, HashMapContext, Value,
};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{Axis, MeshDomain, MeshShape};
use crate::par::Execution;

/// A scalar field given either as a constant or as an expression in `x`, `y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FieldSpec {
    Constant(f64),
    Expression(String),
}

impl From<f64> for FieldSpec {
    fn from(v: f64) -> Self {
        FieldSpec::Constant(v)
    }
}

impl From<&str> for FieldSpec {
    fn from(s: &str) -> Self {
        FieldSpec::Expression(s.to_owned())
    }
}

impl FieldSpec {
    /// Evaluates the field at every mesh node.
    pub fn sample(&self, mesh: &MeshDomain) -> Result<Vec<f64>> {
        match self {
            FieldSpec::Constant(c) => Ok(vec![*c; mesh.num_nodes()]),
            FieldSpec::Expression(expr) => {
                let err = |message: String| Error::Expression { expr: expr.clone(), message };
                let tree = build_operator_tree::<DefaultNumericTypes>(expr)
                    .map_err(|e| err(e.to_string()))?;
                let mut ctx = HashMapContext::<DefaultNumericTypes>::new();
                let mut out = Vec::with_capacity(mesh.num_nodes());
                for &[x, y] in mesh.nodes() {
                    ctx.set_value("x".into(), Value::Float(x)).map_err(|e| err(e.to_string()))?;
                    ctx.set_value("y".into(), Value::Float(y)).map_err(|e| err(e.to_string()))?;
                    let v = tree
                        .eval_number_with_context(&ctx)
                        .map_err(|e| err(e.to_string()))?;
                    if !v.is_finite() {
                        return Err(err(format!("non-finite value {v} at ({x}, {y})")));
                    }
                    out.push(v);
                }
                Ok(out)
            }
        }
    }
}

/// Variable exponent in C+(closure of the domain), stored at the nodes.
#[derive(Debug, Clone)]
pub struct ExponentField {
    shape: MeshShape,
    values: Vec<f64>,
    cell_values: Vec<f64>,
    inf_val: f64,
    sup_val: f64,
}

/// Validates nodal exponent values: all finite and strictly greater than 1.
pub fn make_exponent(mesh: &MeshDomain, values: Vec<f64>) -> Result<ExponentField> {
    check_len(mesh, values.len(), "exponent")?;
    for (node, &value) in values.iter().enumerate() {
        if !value.is_finite() || value <= 1.0 {
            return Err(Error::ExponentOutOfRange { node, value });
        }
    }
    Ok(ExponentField::from_values_unchecked(mesh, values))
}

fn check_len(mesh: &MeshDomain, len: usize, what: &str) -> Result<()> {
    if len != mesh.num_nodes() {
        return Err(Error::MeshMismatch(format!(
            "{what} has {len} nodal values, mesh has {}",
            mesh.num_nodes()
        )));
    }
    Ok(())
}

fn min_max(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

impl ExponentField {
    fn from_values_unchecked(mesh: &MeshDomain, values: Vec<f64>) -> Self {
        let cell_values = (0..mesh.num_cells()).map(|c| mesh.cell_mean(&values, c)).collect();
        let (inf_val, sup_val) = min_max(values.iter().copied());
        Self { shape: mesh.shape(), values, cell_values, inf_val, sup_val }
    }

    pub fn constant(mesh: &MeshDomain, value: f64) -> Result<Self> {
        make_exponent(mesh, vec![value; mesh.num_nodes()])
    }

    pub fn from_spec(mesh: &MeshDomain, spec: &FieldSpec) -> Result<Self> {
        make_exponent(mesh, spec.sample(mesh)?)
    }

    pub fn shape(&self) -> MeshShape {
        self.shape
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Exponent at cell centroids, used for gradient terms.
    pub fn cell_values(&self) -> &[f64] {
        &self.cell_values
    }

    pub fn inf(&self) -> f64 {
        self.inf_val
    }

    pub fn sup(&self) -> f64 {
        self.sup_val
    }

    pub fn constant_value(&self) -> Option<f64> {
        (self.inf_val == self.sup_val).then_some(self.inf_val)
    }

    /// Pointwise conjugate exponent `p / (p - 1)`.
    pub fn conjugate(&self, mesh: &MeshDomain) -> ExponentField {
        let v = self.values.iter().map(|&p| p / (p - 1.0)).collect();
        ExponentField::from_values_unchecked(mesh, v)
    }

    fn is_mirror_invariant(&self, mesh: &MeshDomain, axis: Axis) -> bool {
        mirror_invariant(mesh, &self.values, axis)
    }
}

fn mirror_invariant(mesh: &MeshDomain, values: &[f64], axis: Axis) -> bool {
    values.iter().enumerate().all(|(i, &v)| {
        let w = values[mesh.mirror_node(i, axis)];
        (v - w).abs() <= 1e-12 * v.abs().max(w.abs()).max(1.0)
    })
}

/// `M = max{p, q}` nodewise.
pub fn pointwise_max_exponent(
    mesh: &MeshDomain,
    p: &ExponentField,
    q: &ExponentField,
) -> Result<ExponentField> {
    if p.shape != q.shape || p.shape != mesh.shape() {
        return Err(Error::MeshMismatch("exponents live on different meshes".into()));
    }
    let values = p.values.iter().zip(&q.values).map(|(a, b)| a.max(*b)).collect();
    Ok(ExponentField::from_values_unchecked(mesh, values))
}

/// Sobolev critical exponent `n M / (n - M)` where `M < n`, `+inf` otherwise.
#[derive(Debug, Clone)]
pub struct CriticalExponent {
    pub values: Vec<f64>,
}

impl CriticalExponent {
    pub fn inf(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

pub fn critical_exponent(m: &ExponentField, n: usize) -> Result<CriticalExponent> {
    if n < 2 {
        return Err(Error::Precondition(format!("dimension must be at least 2, got {n}")));
    }
    let nf = n as f64;
    let values = m
        .values
        .iter()
        .map(|&p| if p < nf { nf * p / (nf - p) } else { f64::INFINITY })
        .collect();
    Ok(CriticalExponent { values })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WeightSupport {
    /// Weight on the domain (alpha).
    Volume,
    /// Weight on the boundary (beta); only boundary nodes are read.
    Boundary,
}

#[derive(Debug, Clone)]
pub struct WeightField {
    shape: MeshShape,
    support: WeightSupport,
    values: Vec<f64>,
    inf_val: f64,
    sup_val: f64,
}

impl WeightField {
    /// Volume weight with strictly positive infimum.
    pub fn volume(mesh: &MeshDomain, values: Vec<f64>) -> Result<Self> {
        check_len(mesh, values.len(), "weight")?;
        let (inf_val, sup_val) = min_max(values.iter().copied());
        if !values.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidWeight("non-finite volume weight".into()));
        }
        if inf_val <= 0.0 {
            return Err(Error::InvalidWeight(format!(
                "volume weight must have positive infimum, got {inf_val}"
            )));
        }
        Ok(Self { shape: mesh.shape(), support: WeightSupport::Volume, values, inf_val, sup_val })
    }

    /// Boundary weight: strictly positive on the boundary (Robin) or identically zero (Neumann).
    pub fn boundary(mesh: &MeshDomain, values: Vec<f64>) -> Result<Self> {
        check_len(mesh, values.len(), "weight")?;
        let on_boundary = mesh.boundary_nodes().iter().map(|&n| values[n]);
        if !on_boundary.clone().all(f64::is_finite) {
            return Err(Error::InvalidWeight("non-finite boundary weight".into()));
        }
        let (inf_val, sup_val) = min_max(on_boundary);
        if inf_val < 0.0 || (inf_val == 0.0 && sup_val != 0.0) {
            return Err(Error::InvalidWeight(format!(
                "boundary weight must be positive or identically zero, got range [{inf_val}, {sup_val}]"
            )));
        }
        Ok(Self { shape: mesh.shape(), support: WeightSupport::Boundary, values, inf_val, sup_val })
    }

    pub fn volume_from_spec(mesh: &MeshDomain, spec: &FieldSpec) -> Result<Self> {
        Self::volume(mesh, spec.sample(mesh)?)
    }

    pub fn boundary_from_spec(mesh: &MeshDomain, spec: &FieldSpec) -> Result<Self> {
        Self::boundary(mesh, spec.sample(mesh)?)
    }

    pub fn unit_boundary(mesh: &MeshDomain) -> Self {
        Self::boundary(mesh, vec![1.0; mesh.num_nodes()]).expect("unit weight is valid")
    }

    pub fn shape(&self) -> MeshShape {
        self.shape
    }

    pub fn support(&self) -> WeightSupport {
        self.support
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn inf(&self) -> f64 {
        self.inf_val
    }

    pub fn sup(&self) -> f64 {
        self.sup_val
    }

    pub fn is_zero(&self) -> bool {
        self.sup_val == 0.0
    }

    pub fn is_robin(&self) -> bool {
        self.inf_val > 0.0
    }

    /// Rescaled copy (used by argmin-invariance checks).
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| v * c).collect(),
            inf_val: self.inf_val * c,
            sup_val: self.sup_val * c,
            ..self.clone()
        }
    }
}

/// Tolerances and line-search parameters shared by every solver.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Scale-relative stationarity tolerance.
    pub residual: f64,
    /// Absolute floor on the Euclidean gradient norm, counts as converged.
    pub residual_abs: f64,
    pub max_iter: usize,
    pub armijo_c1: f64,
    pub armijo_shrink: f64,
    /// Minimal `||u||_{M,1}` of a nontrivial solution.
    pub triviality: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            residual: 1e-8,
            residual_abs: 1e-16,
            max_iter: 20_000,
            armijo_c1: 1e-4,
            armijo_shrink: 0.5,
            triviality: 1e-6,
        }
    }
}

/// One instance of the boundary value problem.
#[derive(Debug, Clone)]
pub struct ProblemConfig {
    pub mesh: Arc<MeshDomain>,
    pub p: ExponentField,
    pub q: ExponentField,
    pub r: ExponentField,
    pub alpha: WeightField,
    pub beta1: WeightField,
    pub beta2: WeightField,
    pub lambda: f64,
    pub epsilon_reg: f64,
    pub tolerances: Tolerances,
    pub execution: Execution,
}

impl ProblemConfig {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        mesh: Arc<MeshDomain>,
        p: ExponentField,
        q: ExponentField,
        r: ExponentField,
        alpha: WeightField,
        beta1: WeightField,
        beta2: WeightField,
        lambda: f64,
    ) -> Result<Self> {
        let shape = mesh.shape();
        for (name, s) in [("p", p.shape), ("q", q.shape), ("r", r.shape)] {
            if s != shape {
                return Err(Error::MeshMismatch(format!("exponent {name} is on another mesh")));
            }
        }
        for (name, w) in [("alpha", &alpha), ("beta1", &beta1), ("beta2", &beta2)] {
            if w.shape != shape {
                return Err(Error::MeshMismatch(format!("weight {name} is on another mesh")));
            }
        }
        if alpha.support != WeightSupport::Volume {
            return Err(Error::InvalidWeight("alpha must be a volume weight".into()));
        }
        if beta1.support != WeightSupport::Boundary || beta2.support != WeightSupport::Boundary {
            return Err(Error::InvalidWeight("beta1, beta2 must be boundary weights".into()));
        }
        if beta1.is_robin() != beta2.is_robin() {
            return Err(Error::InvalidWeight(
                "beta1 and beta2 must both be positive or both identically zero".into(),
            ));
        }
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(Error::Precondition(format!("lambda must be finite and >= 0, got {lambda}")));
        }
        Ok(Self {
            mesh,
            p,
            q,
            r,
            alpha,
            beta1,
            beta2,
            lambda,
            epsilon_reg: 1e-8,
            tolerances: Tolerances::default(),
            execution: Execution::default(),
        })
    }

    /// Builds every field from specs on the given mesh.
    #[allow(clippy::too_many_arguments)]
    pub fn from_specs(
        mesh: Arc<MeshDomain>,
        p: &FieldSpec,
        q: &FieldSpec,
        r: &FieldSpec,
        alpha: &FieldSpec,
        beta1: &FieldSpec,
        beta2: &FieldSpec,
        lambda: f64,
    ) -> Result<Self> {
        let pf = ExponentField::from_spec(&mesh, p)?;
        let qf = ExponentField::from_spec(&mesh, q)?;
        let rf = ExponentField::from_spec(&mesh, r)?;
        let af = WeightField::volume_from_spec(&mesh, alpha)?;
        let b1 = WeightField::boundary_from_spec(&mesh, beta1)?;
        let b2 = WeightField::boundary_from_spec(&mesh, beta2)?;
        Self::new(mesh, pf, qf, rf, af, b1, b2, lambda)
    }

    pub fn with_lambda(&self, lambda: f64) -> Self {
        Self { lambda, ..self.clone() }
    }

    pub fn is_robin(&self) -> bool {
        self.beta1.is_robin()
    }

    pub fn is_neumann(&self) -> bool {
        self.beta1.is_zero() && self.beta2.is_zero()
    }

    /// `M = max{p, q}`.
    pub fn m_exponent(&self) -> ExponentField {
        pointwise_max_exponent(&self.mesh, &self.p, &self.q).expect("fields share the mesh")
    }

    /// `(M*)^-` for the planar domain.
    pub fn critical_inf(&self) -> f64 {
        critical_exponent(&self.m_exponent(), 2).expect("n = 2").inf()
    }

    /// `(M*)^- - r^+`; positive means subcritical growth.
    pub fn subcritical_margin(&self) -> f64 {
        self.critical_inf() - self.r.sup()
    }

    pub fn check_subcritical(&self) -> Result<()> {
        if self.subcritical_margin() > 0.0 {
            Ok(())
        } else {
            Err(Error::Precondition(format!(
                "supercritical growth: r+ = {} >= (M*)- = {}",
                self.r.sup(),
                self.critical_inf()
            )))
        }
    }

    /// Constant `q` with `r == q`, both boundary weights zero, `q > 2`.
    pub fn homogeneous_q(&self) -> Option<f64> {
        let q = self.q.constant_value()?;
        let r = self.r.constant_value()?;
        (self.is_neumann() && r == q && q > 2.0).then_some(q)
    }

    /// Whether every field is invariant under the reflection and the mesh is symmetric.
    pub fn is_mirror_symmetric(&self, axis: Axis) -> bool {
        let m = &self.mesh;
        m.is_mirror_symmetric(axis)
            && self.p.is_mirror_invariant(m, axis)
            && self.q.is_mirror_invariant(m, axis)
            && self.r.is_mirror_invariant(m, axis)
            && mirror_invariant(m, &self.alpha.values, axis)
            && mirror_invariant(m, &self.beta1.values, axis)
            && mirror_invariant(m, &self.beta2.values, axis)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CaseClass {
    #[serde(rename = "Sublinear-A")]
    SublinearA,
    #[serde(rename = "SmallLambda-B")]
    SmallLambdaB,
    #[serde(rename = "Superlinear-C")]
    SuperlinearC,
    #[serde(rename = "Homogeneous-pPlusLtQ")]
    HomogeneousPPlusLtQ,
    #[serde(rename = "Homogeneous-qLtPMinus")]
    HomogeneousQLtPMinus,
    #[serde(rename = "Unclassified")]
    Unclassified,
}

impl CaseClass {
    pub fn tag(&self) -> &'static str {
        match self {
            CaseClass::SublinearA => "Sublinear-A",
            CaseClass::SmallLambdaB => "SmallLambda-B",
            CaseClass::SuperlinearC => "Superlinear-C",
            CaseClass::HomogeneousPPlusLtQ => "Homogeneous-pPlusLtQ",
            CaseClass::HomogeneousQLtPMinus => "Homogeneous-qLtPMinus",
            CaseClass::Unclassified => "Unclassified",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        [
            CaseClass::SublinearA,
            CaseClass::SmallLambdaB,
            CaseClass::SuperlinearC,
            CaseClass::HomogeneousPPlusLtQ,
            CaseClass::HomogeneousQLtPMinus,
            CaseClass::Unclassified,
        ]
        .into_iter()
        .find(|c| c.tag().eq_ignore_ascii_case(tag))
    }

    pub fn is_homogeneous(&self) -> bool {
        matches!(self, CaseClass::HomogeneousPPlusLtQ | CaseClass::HomogeneousQLtPMinus)
    }
}

impl fmt::Display for CaseClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// Which existence regime the exponent inequalities select.
pub fn classify_case(cfg: &ProblemConfig) -> CaseClass {
    if cfg.is_neumann() {
        if let Some(q) = cfg.homogeneous_q() {
            if cfg.p.sup() < q {
                return CaseClass::HomogeneousPPlusLtQ;
            }
            if q < cfg.p.inf() {
                return CaseClass::HomogeneousQLtPMinus;
            }
        }
        return CaseClass::Unclassified;
    }
    let low = cfg.p.inf().min(cfg.q.inf());
    let crit = cfg.critical_inf();
    let m_sup = cfg.p.sup().max(cfg.q.sup());
    let (r_inf, r_sup) = (cfg.r.inf(), cfg.r.sup());
    if r_sup < low {
        CaseClass::SublinearA
    } else if r_inf < low && r_sup < crit {
        CaseClass::SmallLambdaB
    } else if m_sup < r_inf && r_sup < crit {
        CaseClass::SuperlinearC
    } else {
        CaseClass::Unclassified
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_rectangle_mesh;

    fn mesh() -> Arc<MeshDomain> {
        Arc::new(build_rectangle_mesh(1.0, 1.0, 4, 4).unwrap())
    }

    fn cfg(p: FieldSpec, q: FieldSpec, r: FieldSpec, beta: f64) -> ProblemConfig {
        ProblemConfig::from_specs(mesh(), &p, &q, &r, &1.0.into(), &beta.into(), &beta.into(), 1.0)
            .unwrap()
    }

    #[test]
    fn exponent_bounds() {
        let m = mesh();
        let e = ExponentField::constant(&m, 2.0).unwrap();
        assert_eq!((e.inf(), e.sup()), (2.0, 2.0));
        let v = m.sample_nodes(|x, _| 1.5 + 1.7 * x);
        let e = make_exponent(&m, v).unwrap();
        assert!((e.inf() - 1.5).abs() < 1e-15);
        assert!((e.sup() - 3.2).abs() < 1e-15);
    }

    #[test]
    fn exponent_at_one_is_rejected_with_node() {
        let m = mesh();
        match ExponentField::constant(&m, 1.0) {
            Err(Error::ExponentOutOfRange { node, value }) => {
                assert_eq!(node, 0);
                assert_eq!(value, 1.0);
            }
            other => panic!("unexpected {other:?}"),
        }
        let mut v = vec![2.0; m.num_nodes()];
        v[7] = 0.5;
        assert!(matches!(make_exponent(&m, v), Err(Error::ExponentOutOfRange { node: 7, .. })));
        let mut v = vec![2.0; m.num_nodes()];
        v[3] = f64::NAN;
        assert!(make_exponent(&m, v).is_err());
    }

    #[test]
    fn pointwise_max() {
        let m = mesh();
        let p = ExponentField::constant(&m, 2.0).unwrap();
        let q = ExponentField::constant(&m, 3.0).unwrap();
        let mm = pointwise_max_exponent(&m, &p, &q).unwrap();
        assert!(mm.values().iter().all(|&v| v == 3.0));
        let same = pointwise_max_exponent(&m, &p, &p).unwrap();
        assert_eq!(same.values(), p.values());
        let pv = make_exponent(&m, m.sample_nodes(|x, _| 1.5 + x)).unwrap();
        let two = ExponentField::constant(&m, 2.0).unwrap();
        let mm = pointwise_max_exponent(&m, &pv, &two).unwrap();
        assert_eq!(mm.inf(), 2.0);
        assert_eq!(mm.sup(), 2.5);
        let other = build_rectangle_mesh(1.0, 1.0, 2, 2).unwrap();
        let o = ExponentField::constant(&other, 2.0).unwrap();
        assert!(pointwise_max_exponent(&m, &p, &o).is_err());
    }

    #[test]
    fn critical_exponents() {
        let m = mesh();
        let two = ExponentField::constant(&m, 2.0).unwrap();
        let c = critical_exponent(&two, 2).unwrap();
        assert!(c.values.iter().all(|v| v.is_infinite()));
        assert!(c.inf().is_infinite());
        let c3 = critical_exponent(&two, 3).unwrap();
        assert!(c3.values.iter().all(|&v| (v - 6.0).abs() < 1e-12));
        let s = ExponentField::constant(&m, 1.5).unwrap();
        let c = critical_exponent(&s, 2).unwrap();
        assert!(c.values.iter().all(|&v| (v - 6.0).abs() < 1e-12));
        assert!(critical_exponent(&two, 1).is_err());
    }

    #[test]
    fn expressions_are_sampled_at_nodes() {
        let m = mesh();
        let v = FieldSpec::from("2 + 0.5*x").sample(&m).unwrap();
        for (val, [x, _]) in v.iter().zip(m.nodes()) {
            assert!((val - (2.0 + 0.5 * x)).abs() < 1e-14);
        }
        let v = FieldSpec::from("math::exp(-x) + max(y, 0.5)").sample(&m).unwrap();
        assert!((v[0] - 1.5).abs() < 1e-14);
        assert!(FieldSpec::from("2 + ").sample(&m).is_err());
        assert!(FieldSpec::from("z").sample(&m).is_err());
    }

    #[test]
    fn weights_validate_sign() {
        let m = mesh();
        assert!(WeightField::volume(&m, vec![0.0; m.num_nodes()]).is_err());
        let w = WeightField::boundary(&m, vec![0.0; m.num_nodes()]).unwrap();
        assert!(w.is_zero() && !w.is_robin());
        let mixed = m.sample_nodes(|x, _| if x < 0.5 { 0.0 } else { 1.0 });
        assert!(WeightField::boundary(&m, mixed).is_err());
        assert!(WeightField::boundary(&m, vec![-1.0; m.num_nodes()]).is_err());
        // interior values are ignored for boundary weights
        let mut v = vec![2.0; m.num_nodes()];
        v[6] = -5.0;
        let w = WeightField::boundary(&m, v).unwrap();
        assert_eq!(w.inf(), 2.0);
    }

    #[test]
    fn mixed_robin_neumann_rejected() {
        let m = mesh();
        let r = ProblemConfig::from_specs(
            m,
            &2.0.into(),
            &3.0.into(),
            &1.5.into(),
            &1.0.into(),
            &1.0.into(),
            &0.0.into(),
            1.0,
        );
        assert!(r.is_err());
    }

    #[test]
    fn classification_examples() {
        let a = cfg(2.0.into(), 3.0.into(), 1.5.into(), 1.0);
        assert_eq!(classify_case(&a), CaseClass::SublinearA);
        let c = cfg(2.0.into(), 3.0.into(), 4.0.into(), 1.0);
        assert_eq!(classify_case(&c), CaseClass::SuperlinearC);
        let h = cfg(2.5.into(), 4.0.into(), 4.0.into(), 0.0);
        assert_eq!(classify_case(&h), CaseClass::HomogeneousPPlusLtQ);
        let h2 = cfg(4.0.into(), 3.0.into(), 3.0.into(), 0.0);
        assert_eq!(classify_case(&h2), CaseClass::HomogeneousQLtPMinus);
        let b = cfg(2.0.into(), 3.0.into(), "1.5 + x".into(), 1.0);
        assert_eq!(classify_case(&b), CaseClass::SmallLambdaB);
        // r between M- and M+ fits no regime
        let u = cfg(2.0.into(), 3.0.into(), 2.5.into(), 1.0);
        assert_eq!(classify_case(&u), CaseClass::Unclassified);
        let q2 = cfg(1.5.into(), 2.0.into(), 2.0.into(), 0.0);
        assert_eq!(classify_case(&q2), CaseClass::Unclassified);
    }

    #[test]
    fn classification_is_symmetric_in_p_and_q() {
        let a = cfg(2.0.into(), 3.0.into(), 1.5.into(), 1.0);
        let b = cfg(3.0.into(), 2.0.into(), 1.5.into(), 1.0);
        assert_eq!(classify_case(&a), classify_case(&b));
    }
}
