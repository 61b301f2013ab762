//! Rayleigh quotients, λ₁ upper bounds, extinction profiles and ground-state
//! tests.
//!
//! `λ₁` is the infimum of `TV(u)/‖u‖_{L²(ν)}` over nonzero `u` orthogonal to
//! the null space of `TV` (mean-zero fields for Neumann; all fields for
//! homogeneous Dirichlet). Every estimator here returns an upper bound
//! attained by an explicit witness.

mod estimators;

use serde::Serialize;

use crate::calculus::{total_variation, BcKind, BoundaryCondition};
use crate::error::{Error, Result};
use crate::flow::{ExtinctionBracket, FlowTrajectory};
use crate::resolvent::{solve_resolvent_with, ResolventProblem, SolveOptions};
use crate::space::{Domain, VertexField};

pub use estimators::{EstimatorRegistry, FlowProfile, Lambda1Estimator, SubsetSearch};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimateMethod {
    SubsetEnumeration,
    SubsetLocalSearch,
    FlowProfile,
}

impl std::fmt::Display for EstimateMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            EstimateMethod::SubsetEnumeration => "subset-enumeration",
            EstimateMethod::SubsetLocalSearch => "subset-local-search",
            EstimateMethod::FlowProfile => "flow-profile",
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectralEstimate {
    pub lambda1_upper: f64,
    pub witness: VertexField,
    pub method: EstimateMethod,
    /// Number of candidate evaluations spent.
    pub evaluations: u64,
}

/// The condition whose functional defines the quotient: `TV_N` for
/// Neumann-type kinds, `TV₀` (Dirichlet with `f ≡ 0`) otherwise.
fn functional_bc(domain: &Domain, bc: BcKind) -> BoundaryCondition {
    match bc {
        BcKind::Neumann => BoundaryCondition::Neumann,
        BcKind::WholeSpace => BoundaryCondition::WholeSpace,
        BcKind::Dirichlet => BoundaryCondition::homogeneous_dirichlet(domain),
    }
}

pub fn rayleigh_quotient(domain: &Domain, u: &VertexField, bc: BcKind) -> Result<f64> {
    domain.check_field(u)?;
    let norm = domain.l2(u);
    if norm == 0.0 {
        return Err(Error::ZeroField);
    }
    if bc != BcKind::Dirichlet {
        let mean = domain.mean(u);
        if mean.abs() > 1e-12 * norm {
            return Err(Error::NonZeroMean(mean));
        }
    }
    let tv = total_variation(domain, u, &functional_bc(domain, bc))?;
    Ok(tv / norm)
}

/// Upper bound on λ₁ with the default estimator.
pub fn estimate_lambda1(domain: &Domain, bc: BcKind, budget: u64) -> Result<SpectralEstimate> {
    EstimatorRegistry::global()
        .get_default()?
        .estimate(domain, bc, budget, 0)
}

/// Lower bound `1/λ̂₁` on the best constant of the Poincaré (Neumann) or
/// Sobolev (Dirichlet) inequality `‖u − ū‖ ≤ C |Du|`; infinite when the
/// estimate is zero.
pub fn functional_constant(domain: &Domain, bc: BcKind, budget: u64) -> Result<f64> {
    let est = estimate_lambda1(domain, bc, budget)?;
    Ok(if est.lambda1_upper == 0.0 {
        f64::INFINITY
    } else {
        1.0 / est.lambda1_upper
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct Profile {
    pub w: VertexField,
    /// Grid time at which the rescaling was taken.
    pub t_star: f64,
    /// Extinction time used for the rescaling.
    pub t_ex: f64,
    pub norm: f64,
    /// `‖u₀ − steady‖_{L²(ν)}`.
    pub initial_norm: f64,
    pub norm_bound_ok: bool,
}

/// `w(t*) = (u(t*) − steady)/(1 − t*/T_ex)` at the last grid time with
/// `1 − t*/T_ex ≥ 0.05`. `T_ex` is the bracket's refined value when present,
/// otherwise its midpoint. A `[0, 0]` bracket yields `u₀` unchanged.
pub fn asymptotic_profile(traj: &FlowTrajectory, bracket: &ExtinctionBracket) -> Result<Profile> {
    let steady = traj.steady.as_ref().ok_or(Error::NotExtinct)?;
    let d = &traj.domain;
    let initial_norm = d.l2(&traj.initial().sub(steady));
    if bracket.hi == 0.0 {
        let w = traj.initial().clone();
        return Ok(Profile {
            norm: d.l2(&w),
            w,
            t_star: 0.0,
            t_ex: 0.0,
            initial_norm,
            norm_bound_ok: true,
        });
    }
    if !traj.reached_steady || bracket.hi > *traj.times.last().unwrap_or(&0.0) {
        return Err(Error::NotExtinct);
    }
    let t_ex = bracket.estimate();
    let n = traj
        .times
        .iter()
        .rposition(|&t| 1.0 - t / t_ex >= 0.05)
        .unwrap_or(0);
    let t_star = traj.times[n];
    let w = traj.states[n].sub(steady).scaled(1.0 / (1.0 - t_star / t_ex));
    let norm = d.l2(&w);
    Ok(Profile {
        norm_bound_ok: norm <= initial_norm * (1.0 + 1e-9) + 1e-12,
        w,
        t_star,
        t_ex,
        norm,
        initial_norm,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct GroundStateReport {
    /// `‖J₁(w + w/T_ex) − w‖_∞`; zero iff `w/T_ex ∈ ∂TV(w)`.
    pub inclusion_residual: f64,
    pub inclusion_passed: bool,
    pub rayleigh: Option<f64>,
    pub lambda1_upper: f64,
    pub ground_state: bool,
}

/// Tests the eigen-inclusion `w/T_ex ∈ ∂TV(w)` through its resolvent
/// characterization `J₁(w + w/T_ex) = w`, and whether `w` attains the
/// supplied λ₁ bound.
pub fn check_ground_state(
    domain: &Domain,
    w: &VertexField,
    t_ex: f64,
    bc: BcKind,
    lambda1_upper: f64,
    tol: f64,
) -> Result<GroundStateReport> {
    domain.check_field(w)?;
    if domain.l2(w) == 0.0 {
        return Err(Error::ZeroField);
    }
    if !(t_ex > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "extinction time must be positive, got {t_ex}"
        )));
    }
    let fbc = functional_bc(domain, bc);
    let g = w.scaled(1.0 + 1.0 / t_ex);
    let problem = ResolventProblem::new(domain, g, 1.0, &fbc)?;
    let opts = SolveOptions {
        tol: 1e-12,
        ..SolveOptions::default()
    };
    let cert = solve_resolvent_with(&problem, &opts, None)?;
    let inclusion_residual = cert
        .u
        .iter()
        .zip(w.iter())
        .fold(0.0_f64, |acc, (a, b)| acc.max((a - b).abs()));
    let rayleigh = rayleigh_quotient(domain, w, bc).ok();
    Ok(GroundStateReport {
        inclusion_residual,
        inclusion_passed: inclusion_residual <= tol,
        ground_state: rayleigh.is_some_and(|r| r <= lambda1_upper + tol),
        rayleigh,
        lambda1_upper,
    })
}
