//! First-order calculus on a [`Domain`]: differential, zero-trace divergence,
//! total variation, pairing of a bounded edge field with a differential,
//! normal trace and the summation-by-parts (Gauss–Green) identity.
//!
//! Conventions:
//! * `(du)_{x→y} = u(y) − u(x)` on interior edges.
//! * `div₀X(v) = ν(v)⁻¹ Σ_{y~v} w_{vy} X_{v→y}`, summing interior edges and
//!   boundary elements at `v`.
//! * `(X·ν)⁻(v,b) = −X_{v→b}`.
//!
//! With these signs
//! `Σ ν u div₀X + Σ_e w X_e (du)_e + Σ_β w_β u(v) (X·ν)⁻(β) = 0`
//! holds identically, and the Dirichlet optimality relation
//! `(X·ν)⁻ ∈ sign(u − f)` agrees with direct subgradient optimality.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::{BoundaryData, Domain, VertexField};

#[derive(Debug, Clone, PartialEq)]
pub enum BoundaryCondition {
    Neumann,
    WholeSpace,
    Dirichlet(BoundaryData),
}

impl BoundaryCondition {
    pub fn kind(&self) -> BcKind {
        match self {
            BoundaryCondition::Neumann => BcKind::Neumann,
            BoundaryCondition::WholeSpace => BcKind::WholeSpace,
            BoundaryCondition::Dirichlet(_) => BcKind::Dirichlet,
        }
    }

    pub fn is_dirichlet(&self) -> bool {
        matches!(self, BoundaryCondition::Dirichlet(_))
    }

    pub fn boundary_data(&self) -> Option<&BoundaryData> {
        match self {
            BoundaryCondition::Dirichlet(f) => Some(f),
            _ => None,
        }
    }

    /// Homogeneous Dirichlet data (`f ≡ 0`) on `domain`.
    pub fn homogeneous_dirichlet(domain: &Domain) -> Self {
        BoundaryCondition::Dirichlet(BoundaryData::constant(domain, 0.0))
    }

    /// Builds a condition from its kind and optional data.
    pub fn from_kind(kind: BcKind, f: Option<BoundaryData>) -> Result<Self> {
        match kind {
            BcKind::Neumann => Ok(BoundaryCondition::Neumann),
            BcKind::WholeSpace => Ok(BoundaryCondition::WholeSpace),
            BcKind::Dirichlet => f
                .map(BoundaryCondition::Dirichlet)
                .ok_or(Error::MissingBoundaryData),
        }
    }

    /// Checks data length and the whole-space restriction against `domain`.
    pub fn validate(&self, domain: &Domain) -> Result<()> {
        match self {
            BoundaryCondition::Neumann => Ok(()),
            BoundaryCondition::WholeSpace if domain.has_boundary() => {
                Err(Error::BoundaryOnWholeSpace(domain.boundary().len()))
            }
            BoundaryCondition::WholeSpace => Ok(()),
            BoundaryCondition::Dirichlet(f) => domain.check_boundary_data(f),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BcKind {
    Neumann,
    #[serde(rename = "whole")]
    WholeSpace,
    Dirichlet,
}

impl FromStr for BcKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "neumann" => Ok(BcKind::Neumann),
            "dirichlet" => Ok(BcKind::Dirichlet),
            "whole" | "whole-space" => Ok(BcKind::WholeSpace),
            other => Err(Error::InvalidParameter(format!(
                "unknown boundary condition `{other}`"
            ))),
        }
    }
}

impl fmt::Display for BcKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BcKind::Neumann => "neumann",
            BcKind::WholeSpace => "whole",
            BcKind::Dirichlet => "dirichlet",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FieldScope {
    Interior,
    InteriorAndBoundary,
}

/// Antisymmetric edge field. One value per interior edge in its canonical
/// orientation `tail → head`, and one per boundary element oriented
/// `interior → exterior`. Reverse orientations are obtained by negation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeField {
    pub interior: Vec<f64>,
    pub boundary: Vec<f64>,
    pub scope: FieldScope,
}

impl EdgeField {
    pub fn zeros(domain: &Domain, scope: FieldScope) -> Self {
        EdgeField {
            interior: vec![0.0; domain.edges().len()],
            boundary: vec![0.0; domain.boundary().len()],
            scope,
        }
    }

    pub fn new(interior: Vec<f64>, boundary: Vec<f64>) -> Self {
        EdgeField {
            interior,
            boundary,
            scope: FieldScope::InteriorAndBoundary,
        }
    }

    pub fn check(&self, domain: &Domain) -> Result<()> {
        if self.interior.len() != domain.edges().len() {
            return Err(Error::FieldMismatch {
                expected: domain.edges().len(),
                got: self.interior.len(),
            });
        }
        if self.boundary.len() != domain.boundary().len() {
            return Err(Error::FieldMismatch {
                expected: domain.boundary().len(),
                got: self.boundary.len(),
            });
        }
        Ok(())
    }

    /// `X_{x→y}` for global vertex indices, or `None` if `x → y` is neither an
    /// interior edge nor a boundary element of `domain`.
    pub fn get(&self, domain: &Domain, x: usize, y: usize) -> Option<f64> {
        match (domain.local_index(x), domain.local_index(y)) {
            (Some(lx), Some(ly)) => {
                let (t, h, s) = if lx < ly { (lx, ly, 1.0) } else { (ly, lx, -1.0) };
                domain
                    .edges()
                    .iter()
                    .position(|e| e.tail == t && e.head == h)
                    .map(|i| s * self.interior[i])
            }
            (Some(_), None) => domain
                .boundary()
                .iter()
                .position(|b| b.vertex == x && b.exterior == y)
                .map(|i| self.boundary[i]),
            (None, Some(_)) => domain
                .boundary()
                .iter()
                .position(|b| b.vertex == y && b.exterior == x)
                .map(|i| -self.boundary[i]),
            (None, None) => None,
        }
    }

    /// Sets `X_{x→y} = value` (and hence `X_{y→x} = −value`).
    pub fn set(&mut self, domain: &Domain, x: usize, y: usize, value: f64) -> Result<()> {
        let missing = || Error::InvalidParameter(format!("no edge {x} -> {y} in domain"));
        match (domain.local_index(x), domain.local_index(y)) {
            (Some(lx), Some(ly)) => {
                let (t, h, s) = if lx < ly { (lx, ly, 1.0) } else { (ly, lx, -1.0) };
                let i = domain
                    .edges()
                    .iter()
                    .position(|e| e.tail == t && e.head == h)
                    .ok_or_else(missing)?;
                self.interior[i] = s * value;
            }
            (Some(_), None) => {
                let i = domain
                    .boundary()
                    .iter()
                    .position(|b| b.vertex == x && b.exterior == y)
                    .ok_or_else(missing)?;
                self.boundary[i] = value;
                self.scope = FieldScope::InteriorAndBoundary;
            }
            (None, Some(_)) => {
                let i = domain
                    .boundary()
                    .iter()
                    .position(|b| b.vertex == y && b.exterior == x)
                    .ok_or_else(missing)?;
                self.boundary[i] = -value;
                self.scope = FieldScope::InteriorAndBoundary;
            }
            (None, None) => return Err(missing()),
        }
        Ok(())
    }

    pub fn sup_norm(&self) -> f64 {
        self.interior
            .iter()
            .chain(self.boundary.iter())
            .fold(0.0, |acc, x| acc.max(x.abs()))
    }

    /// Clamps every value into `[−c, c]`.
    pub fn clamp_to(&mut self, c: f64) {
        for x in self.interior.iter_mut().chain(self.boundary.iter_mut()) {
            *x = x.clamp(-c, c);
        }
    }

    pub fn scaled(&self, c: f64) -> EdgeField {
        EdgeField {
            interior: self.interior.iter().map(|x| c * x).collect(),
            boundary: self.boundary.iter().map(|x| c * x).collect(),
            scope: self.scope,
        }
    }
}

/// Signed mass per interior edge.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeMeasure {
    pub mass: Vec<f64>,
}

impl EdgeMeasure {
    pub fn total(&self) -> f64 {
        self.mass.iter().sum()
    }
}

pub fn differential(domain: &Domain, u: &VertexField) -> Result<EdgeField> {
    domain.check_field(u)?;
    Ok(EdgeField {
        interior: domain.edges().iter().map(|e| u[e.head] - u[e.tail]).collect(),
        boundary: vec![0.0; domain.boundary().len()],
        scope: FieldScope::Interior,
    })
}

pub fn divergence0(domain: &Domain, x: &EdgeField) -> Result<VertexField> {
    x.check(domain)?;
    let mut flux = vec![0.0; domain.len()];
    for (e, &val) in domain.edges().iter().zip(&x.interior) {
        flux[e.tail] += e.weight * val;
        flux[e.head] -= e.weight * val;
    }
    if x.scope == FieldScope::InteriorAndBoundary {
        for (b, &val) in domain.boundary().iter().zip(&x.boundary) {
            flux[b.local] += b.weight * val;
        }
    }
    Ok(flux
        .iter()
        .zip(domain.measures())
        .map(|(f, m)| f / m)
        .collect())
}

/// `Σ_e w_e |(du)_e|` over interior edges.
pub fn interior_variation(domain: &Domain, u: &VertexField) -> Result<f64> {
    domain.check_field(u)?;
    Ok(domain
        .edges()
        .iter()
        .map(|e| e.weight * (u[e.head] - u[e.tail]).abs())
        .sum())
}

/// `Σ_β w_β |u(v) − f(β)|`.
pub fn boundary_penalty(domain: &Domain, u: &VertexField, f: &BoundaryData) -> Result<f64> {
    domain.check_field(u)?;
    domain.check_boundary_data(f)?;
    Ok(domain
        .boundary()
        .iter()
        .zip(f.iter())
        .map(|(b, fb)| b.weight * (u[b.local] - fb).abs())
        .sum())
}

pub fn total_variation(domain: &Domain, u: &VertexField, bc: &BoundaryCondition) -> Result<f64> {
    let interior = interior_variation(domain, u)?;
    match bc {
        BoundaryCondition::Neumann | BoundaryCondition::WholeSpace => Ok(interior),
        BoundaryCondition::Dirichlet(f) => Ok(interior + boundary_penalty(domain, u, f)?),
    }
}

/// Pairing of a bounded field with the differential of `u`:
/// `mass(e) = w_e X_e (du)_e` on interior edges.
pub fn pairing(domain: &Domain, x: &EdgeField, u: &VertexField) -> Result<EdgeMeasure> {
    x.check(domain)?;
    let du = differential(domain, u)?;
    Ok(EdgeMeasure {
        mass: domain
            .edges()
            .iter()
            .zip(x.interior.iter().zip(&du.interior))
            .map(|(e, (xe, de))| e.weight * xe * de)
            .collect(),
    })
}

/// `(X·ν)⁻(β) = −X_{v→b}`.
pub fn normal_trace(domain: &Domain, x: &EdgeField) -> Result<BoundaryData> {
    x.check(domain)?;
    if x.scope == FieldScope::Interior {
        return Ok(BoundaryData::constant(domain, 0.0));
    }
    Ok(x.boundary.iter().map(|v| -v).collect())
}

/// The three Gauss–Green terms `(Σ ν u div₀X, Σ pairing, Σ boundary)`.
pub fn gauss_green_terms(
    domain: &Domain,
    u: &VertexField,
    x: &EdgeField,
) -> Result<(f64, f64, f64)> {
    let div = divergence0(domain, x)?;
    let volume = domain.inner(u, &div);
    let pair = pairing(domain, x, u)?.total();
    let nt = normal_trace(domain, x)?;
    let bdry = domain
        .boundary()
        .iter()
        .zip(nt.iter())
        .map(|(b, n)| b.weight * u[b.local] * n)
        .sum();
    Ok((volume, pair, bdry))
}

pub fn gauss_green_residual(domain: &Domain, u: &VertexField, x: &EdgeField) -> Result<f64> {
    let (a, b, c) = gauss_green_terms(domain, u, x)?;
    Ok(a + b + c)
}

/// Density of the pairing with respect to `|Du|`, keyed by interior edge
/// index. Edges with `(du)_e = 0` are absent.
pub fn theta_density(
    domain: &Domain,
    x: &EdgeField,
    u: &VertexField,
) -> Result<BTreeMap<usize, f64>> {
    x.check(domain)?;
    let du = differential(domain, u)?;
    Ok(du
        .interior
        .iter()
        .enumerate()
        .filter(|(_, d)| **d != 0.0)
        .map(|(i, d)| (i, x.interior[i] * d.signum()))
        .collect())
}

/// Clamp to `[−k, k]`.
pub fn truncate(u: &VertexField, k: f64) -> Result<VertexField> {
    if !(k > 0.0) {
        return Err(Error::NonPositiveK(k));
    }
    Ok(u.iter().map(|a| a.clamp(-k, k)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{build_graph, make_domain, whole_space, MetricMeasureGraph};
    use std::sync::Arc;

    fn g2() -> Arc<MetricMeasureGraph> {
        Arc::new(build_graph(&[1.0, 1.0], &[(0, 1, 1.0)]).unwrap())
    }

    fn vf(v: &[f64]) -> VertexField {
        VertexField::from(v.to_vec())
    }

    #[test]
    fn differential_examples() {
        let d = whole_space(g2()).unwrap();
        let du = differential(&d, &vf(&[1.0, -1.0])).unwrap();
        assert_eq!(du.get(&d, 0, 1), Some(-2.0));
        let du = differential(&d, &vf(&[0.0, 3.0])).unwrap();
        assert_eq!(du.get(&d, 0, 1), Some(3.0));
        assert_eq!(du.get(&d, 1, 0), Some(-3.0));
        let du = differential(&d, &vf(&[4.0, 4.0])).unwrap();
        assert_eq!(du.sup_norm(), 0.0);
    }

    #[test]
    fn divergence_examples() {
        let d = whole_space(g2()).unwrap();
        let mut x = EdgeField::zeros(&d, FieldScope::Interior);
        x.set(&d, 0, 1, -1.0).unwrap();
        assert_eq!(&*divergence0(&d, &x).unwrap(), &[-1.0, 1.0]);

        let d1 = make_domain(g2(), &[0]).unwrap();
        let mut x = EdgeField::zeros(&d1, FieldScope::InteriorAndBoundary);
        x.set(&d1, 0, 1, 0.3).unwrap();
        assert_eq!(&*divergence0(&d1, &x).unwrap(), &[0.3]);

        let z = EdgeField::zeros(&d1, FieldScope::InteriorAndBoundary);
        assert_eq!(&*divergence0(&d1, &z).unwrap(), &[0.0]);
    }

    #[test]
    fn interior_scope_ignores_boundary_values() {
        let d1 = make_domain(g2(), &[0]).unwrap();
        let x = EdgeField {
            interior: vec![],
            boundary: vec![0.7],
            scope: FieldScope::Interior,
        };
        assert_eq!(&*divergence0(&d1, &x).unwrap(), &[0.0]);
    }

    #[test]
    fn total_variation_examples() {
        let d = whole_space(g2()).unwrap();
        assert_eq!(
            total_variation(&d, &vf(&[1.0, -1.0]), &BoundaryCondition::Neumann).unwrap(),
            2.0
        );
        assert_eq!(
            total_variation(&d, &vf(&[3.0, 3.0]), &BoundaryCondition::Neumann).unwrap(),
            0.0
        );
        let d1 = make_domain(g2(), &[0]).unwrap();
        let bc = BoundaryCondition::homogeneous_dirichlet(&d1);
        assert_eq!(total_variation(&d1, &vf(&[2.0]), &bc).unwrap(), 2.0);
        assert!(matches!(
            BoundaryCondition::from_kind(BcKind::Dirichlet, None),
            Err(Error::MissingBoundaryData)
        ));
    }

    #[test]
    fn pairing_examples() {
        let d = whole_space(g2()).unwrap();
        let mut x = EdgeField::zeros(&d, FieldScope::Interior);
        x.set(&d, 0, 1, -1.0).unwrap();
        assert_eq!(pairing(&d, &x, &vf(&[1.0, 0.0])).unwrap().mass, vec![1.0]);
        x.set(&d, 0, 1, 1.0).unwrap();
        assert_eq!(pairing(&d, &x, &vf(&[1.0, 0.0])).unwrap().mass, vec![-1.0]);
        let z = EdgeField::zeros(&d, FieldScope::Interior);
        assert_eq!(pairing(&d, &z, &vf(&[1.0, 0.0])).unwrap().total(), 0.0);
    }

    #[test]
    fn normal_trace_examples() {
        let d1 = make_domain(g2(), &[0]).unwrap();
        let mut x = EdgeField::zeros(&d1, FieldScope::InteriorAndBoundary);
        x.set(&d1, 0, 1, 0.3).unwrap();
        assert_eq!(&*normal_trace(&d1, &x).unwrap(), &[-0.3]);
        x.set(&d1, 0, 1, -1.0).unwrap();
        assert_eq!(&*normal_trace(&d1, &x).unwrap(), &[1.0]);
        // reverse orientation lookup
        assert_eq!(x.get(&d1, 1, 0), Some(1.0));
    }

    #[test]
    fn gauss_green_fixture() {
        let d1 = make_domain(g2(), &[0]).unwrap();
        let mut x = EdgeField::zeros(&d1, FieldScope::InteriorAndBoundary);
        x.set(&d1, 0, 1, 0.3).unwrap();
        let (a, b, c) = gauss_green_terms(&d1, &vf(&[5.0]), &x).unwrap();
        assert!((a - 1.5).abs() < 1e-15);
        assert_eq!(b, 0.0);
        assert!((c + 1.5).abs() < 1e-15);
        assert!(gauss_green_residual(&d1, &vf(&[5.0]), &x).unwrap().abs() < 1e-15);
    }

    #[test]
    fn theta_examples() {
        let d = whole_space(g2()).unwrap();
        let mut x = EdgeField::zeros(&d, FieldScope::Interior);
        x.set(&d, 0, 1, -1.0).unwrap();
        let th = theta_density(&d, &x, &vf(&[1.0, 0.0])).unwrap();
        assert_eq!(th.get(&0), Some(&1.0));
        assert!(theta_density(&d, &x, &vf(&[2.0, 2.0])).unwrap().is_empty());
    }

    #[test]
    fn truncation() {
        let t = truncate(&vf(&[3.0, -3.0, 1.0]), 2.0).unwrap();
        assert_eq!(&*t, &[2.0, -2.0, 1.0]);
        let u = vf(&[0.5, -1.5]);
        assert_eq!(truncate(&u, 2.0).unwrap(), u);
        assert!(matches!(truncate(&u, 0.0), Err(Error::NonPositiveK(_))));
    }
}
