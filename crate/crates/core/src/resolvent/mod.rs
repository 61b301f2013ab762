//! One implicit step of the total variation flow,
//! `u + λ ∂TV(u) ∋ g`, solved through its dual over box-constrained edge
//! fields and certified by the duality gap and the pointwise optimality
//! conditions.
//!
//! The dual maximizes
//! `D(Y) = ½‖g‖²_ν − ½‖g + div₀Y‖²_ν − Σ_β w_β f(β) (Y·ν)⁻(β)` over
//! `‖Y‖_∞ ≤ λ`; the boundary flux is pinned to zero for Neumann and
//! whole-space problems. The primal is recovered as `u = g + div₀Y`, the
//! subgradient element as `v = (g − u)/λ` and the normalized field as
//! `X = Y/λ`.
//!
//! The step `λ` enters only through the box; by 1-homogeneity of TV this is
//! the same as scaling the functional.

pub mod dual;
pub mod strategies;

use serde::Serialize;

use crate::calculus::{
    divergence0, normal_trace, truncate, BoundaryCondition, EdgeField, FieldScope,
};
use crate::error::{Error, Result};
use crate::space::{Domain, VertexField};

pub use dual::{DualOperator, Tracker};
pub use strategies::{DualSolver, Fista, Pdhg, SolverRegistry};

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITERS: usize = 200_000;
/// Residual bound used for the condition report attached to each certificate.
pub const DEFAULT_CERTIFICATE_TOL: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct ResolventProblem<'a> {
    pub domain: &'a Domain,
    pub g: VertexField,
    pub lambda: f64,
    pub bc: &'a BoundaryCondition,
}

impl<'a> ResolventProblem<'a> {
    pub fn new(
        domain: &'a Domain,
        g: VertexField,
        lambda: f64,
        bc: &'a BoundaryCondition,
    ) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "lambda must be positive, got {lambda}"
            )));
        }
        domain.check_field(&g)?;
        bc.validate(domain)?;
        Ok(ResolventProblem {
            domain,
            g,
            lambda,
            bc,
        })
    }

    fn operator(&self) -> DualOperator<'_> {
        DualOperator::new(
            self.domain,
            &self.g,
            self.bc.boundary_data().map(|f| &f[..]),
            self.lambda,
        )
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ResolventCertificate {
    pub u: VertexField,
    pub v: VertexField,
    /// Dual field, `‖Y‖_∞ ≤ λ`.
    pub y: EdgeField,
    pub lambda: f64,
    pub gap: f64,
    pub primal: f64,
    pub dual: f64,
    pub iterations: usize,
    pub solver: String,
    pub condition_report: CertificateReport,
}

impl ResolventCertificate {
    /// `X = Y/λ`, the normalized certificate field.
    pub fn field(&self) -> EdgeField {
        let mut x = self.y.scaled(1.0 / self.lambda);
        x.clamp_to(1.0);
        x
    }
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub tol: f64,
    pub max_iters: usize,
    /// Registered strategy name.
    pub solver: String,
    pub certificate_tol: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol: DEFAULT_TOL,
            max_iters: DEFAULT_MAX_ITERS,
            solver: "fista".to_string(),
            certificate_tol: DEFAULT_CERTIFICATE_TOL,
        }
    }
}

/// Solves with the default strategy from a zero start.
pub fn solve_resolvent(
    problem: &ResolventProblem<'_>,
    tol: f64,
    max_iters: usize,
) -> Result<ResolventCertificate> {
    let opts = SolveOptions {
        tol,
        max_iters,
        ..SolveOptions::default()
    };
    solve_resolvent_with(problem, &opts, None)
}

pub fn solve_resolvent_with(
    problem: &ResolventProblem<'_>,
    opts: &SolveOptions,
    warm: Option<&EdgeField>,
) -> Result<ResolventCertificate> {
    let solver = SolverRegistry::global().get(&opts.solver)?;
    solve_resolvent_using(problem, opts, warm, solver)
}

pub fn solve_resolvent_using(
    problem: &ResolventProblem<'_>,
    opts: &SolveOptions,
    warm: Option<&EdgeField>,
    solver: &dyn DualSolver,
) -> Result<ResolventCertificate> {
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "tol must be positive, got {}",
            opts.tol
        )));
    }
    let op = problem.operator();
    let mut y0 = match warm {
        Some(w) => {
            w.check(problem.domain)?;
            op.from_edge_field(w)
        }
        None => vec![0.0; op.dim()],
    };
    op.project(&mut y0);
    let mut tracker = Tracker::new(&op, opts.tol, opts.max_iters, &y0);
    solver.run(&op, &mut tracker, y0);

    let cert = assemble(problem, &op, tracker.best(), tracker.iterations(), solver, opts)?;
    if tracker.converged() {
        Ok(cert)
    } else {
        Err(Error::NotConverged {
            gap: cert.gap,
            iterations: cert.iterations,
            best: Box::new(cert),
        })
    }
}

fn assemble(
    problem: &ResolventProblem<'_>,
    op: &DualOperator<'_>,
    y: &[f64],
    iterations: usize,
    solver: &dyn DualSolver,
    opts: &SolveOptions,
) -> Result<ResolventCertificate> {
    let mut u = vec![0.0; op.num_vertices()];
    op.primal(y, &mut u);
    let gap = op.gap(y, &u);
    let primal = op.primal_value(&u);
    let dual = op.dual_value(y, &u);
    let u = VertexField::from(u);
    let lam = problem.lambda;
    let v: VertexField = problem
        .g
        .iter()
        .zip(u.iter())
        .map(|(g, u)| (g - u) / lam)
        .collect();
    let yfield = op.to_edge_field(y);
    let mut x = yfield.scaled(1.0 / lam);
    x.clamp_to(1.0);
    let condition_report = verify_certificate(
        problem.domain,
        &u,
        &v,
        &x,
        problem.bc,
        &CertificateMode::Weak,
        opts.certificate_tol,
    )?;
    Ok(ResolventCertificate {
        u,
        v,
        y: yfield,
        lambda: lam,
        gap,
        primal,
        dual,
        iterations,
        solver: solver.name().to_string(),
        condition_report,
    })
}

/// `λ TV_bc(u) + ½‖u − g‖²_ν`.
pub fn primal_value(problem: &ResolventProblem<'_>, u: &VertexField) -> Result<f64> {
    problem.domain.check_field(u)?;
    Ok(problem.operator().primal_value(u))
}

/// `D(Y)`; `Y` must be feasible.
pub fn dual_value(problem: &ResolventProblem<'_>, y: &EdgeField) -> Result<f64> {
    check_dual_feasible(problem, y)?;
    let op = problem.operator();
    let packed = op.from_edge_field(y);
    let mut u = vec![0.0; op.num_vertices()];
    op.primal(&packed, &mut u);
    Ok(op.dual_value(&packed, &u))
}

fn check_dual_feasible(problem: &ResolventProblem<'_>, y: &EdgeField) -> Result<()> {
    y.check(problem.domain)?;
    let sup = y.sup_norm();
    if sup > problem.lambda * (1.0 + 1e-12) {
        return Err(Error::InfeasibleDual(format!(
            "sup norm {sup} exceeds lambda {}",
            problem.lambda
        )));
    }
    if !problem.bc.is_dirichlet()
        && y.scope == FieldScope::InteriorAndBoundary
        && y.boundary.iter().any(|&b| b != 0.0)
    {
        return Err(Error::InfeasibleDual(
            "nonzero boundary flux under a Neumann-type condition".into(),
        ));
    }
    Ok(())
}

/// `P(u) − D(Y)` for any primal point and feasible dual field.
///
/// Evaluated as `½‖u − g − div₀Y‖²_ν` plus the nonnegative per-edge
/// complementarity terms, which is algebraically identical and avoids the
/// cancellation in subtracting two nearly equal objective values.
pub fn duality_gap(problem: &ResolventProblem<'_>, u: &VertexField, y: &EdgeField) -> Result<f64> {
    problem.domain.check_field(u)?;
    check_dual_feasible(problem, y)?;
    let op = problem.operator();
    let packed = op.from_edge_field(y);
    let mut recovered = vec![0.0; op.num_vertices()];
    op.primal(&packed, &mut recovered);
    let fit: f64 = problem
        .domain
        .measures()
        .iter()
        .zip(u.iter().zip(&recovered))
        .map(|(m, (a, b))| m * (a - b) * (a - b))
        .sum();
    Ok(0.5 * fit + op.gap(&packed, u))
}

#[derive(Debug, Clone, PartialEq)]
pub enum CertificateMode {
    Weak,
    /// Truncation levels at which pairing saturation is also required.
    Entropy(Vec<f64>),
}

#[derive(Debug, Clone, Serialize)]
pub struct CertificateReport {
    /// `max_v |div₀X(v) + v(v)|`.
    pub divergence_residual: f64,
    /// `Σ_e w_e (|du_e| − X_e du_e)`; nonnegative when `‖X‖_∞ ≤ 1`.
    pub pairing_saturation: f64,
    /// Neumann: `max |(X·ν)⁻|`; Dirichlet: distance of `(X·ν)⁻` to `sign(u − f)`.
    pub boundary_residual: f64,
    /// `max(0, ‖X‖_∞ − 1)`.
    pub sup_norm_excess: f64,
    /// `(k, Σ_e w_e (|dT_k u| − X_e dT_k u))` for each truncation level.
    pub entropy_residuals: Vec<(f64, f64)>,
    pub tol: f64,
    pub passed: bool,
}

impl CertificateReport {
    pub fn max_residual(&self) -> f64 {
        let mut r = self
            .divergence_residual
            .max(self.pairing_saturation.abs())
            .max(self.boundary_residual)
            .max(self.sup_norm_excess);
        for (_, e) in &self.entropy_residuals {
            r = r.max(e.abs());
        }
        r
    }
}

fn saturation(domain: &Domain, x: &EdgeField, u: &VertexField) -> f64 {
    domain
        .edges()
        .iter()
        .zip(&x.interior)
        .map(|(e, xe)| {
            let du = u[e.head] - u[e.tail];
            e.weight * (du.abs() - xe * du)
        })
        .sum()
}

/// Checks that `X` certifies `v ∈ ∂TV_bc(u)`: divergence match, pairing
/// saturation and the boundary condition, plus saturation against every
/// truncation `T_k u` in entropy mode.
///
/// `sign(0)` is the whole interval `[−1, 1]`; a boundary mismatch `|u − f|`
/// within `tol` counts as zero.
pub fn verify_certificate(
    domain: &Domain,
    u: &VertexField,
    v: &VertexField,
    x: &EdgeField,
    bc: &BoundaryCondition,
    mode: &CertificateMode,
    tol: f64,
) -> Result<CertificateReport> {
    domain.check_field(u)?;
    domain.check_field(v)?;
    x.check(domain)?;
    bc.validate(domain)?;

    let div = divergence0(domain, x)?;
    let divergence_residual = div
        .iter()
        .zip(v.iter())
        .fold(0.0_f64, |acc, (d, v)| acc.max((d + v).abs()));
    let pairing_saturation = saturation(domain, x, u);
    let nt = normal_trace(domain, x)?;
    let boundary_residual = match bc {
        BoundaryCondition::Neumann | BoundaryCondition::WholeSpace => {
            nt.iter().fold(0.0_f64, |acc, n| acc.max(n.abs()))
        }
        BoundaryCondition::Dirichlet(f) => domain
            .boundary()
            .iter()
            .zip(f.iter().zip(nt.iter()))
            .map(|(b, (fb, n))| {
                let s = u[b.local] - fb;
                if s.abs() <= tol {
                    (n.abs() - 1.0).max(0.0)
                } else {
                    (n - s.signum()).abs()
                }
            })
            .fold(0.0, f64::max),
    };
    let entropy_residuals = match mode {
        CertificateMode::Weak => Vec::new(),
        CertificateMode::Entropy(ks) => ks
            .iter()
            .map(|&k| Ok((k, saturation(domain, x, &truncate(u, k)?))))
            .collect::<Result<Vec<_>>>()?,
    };
    let sup_norm_excess = (x.sup_norm() - 1.0).max(0.0);
    let mut report = CertificateReport {
        divergence_residual,
        pairing_saturation,
        boundary_residual,
        sup_norm_excess,
        entropy_residuals,
        tol,
        passed: false,
    };
    report.passed = report.max_residual() <= tol;
    Ok(report)
}

/// Truncation levels for entropy checks: `points − 1` quantiles of `|u|`
/// (levels `i/points`) followed by `‖u‖_∞`. Non-positive levels are replaced
/// by the matching fraction of `‖u‖_∞`; an all-zero field yields `[1.0]`.
pub fn entropy_k_grid(u: &VertexField, points: usize) -> Vec<f64> {
    let mut abs: Vec<f64> = u.iter().map(|a| a.abs()).collect();
    abs.sort_by(|a, b| a.total_cmp(b));
    let max = abs.last().copied().unwrap_or(0.0);
    if max == 0.0 || points == 0 {
        return vec![1.0];
    }
    let mut ks = Vec::with_capacity(points);
    for i in 1..points {
        let frac = i as f64 / points as f64;
        let idx = ((abs.len() - 1) as f64 * frac).round() as usize;
        let q = abs[idx];
        ks.push(if q > 0.0 { q } else { max * frac });
    }
    ks.push(max);
    ks
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::BoundaryCondition;
    use crate::space::{build_graph, make_domain, whole_space, MetricMeasureGraph};
    use std::sync::Arc;

    fn g2() -> Arc<MetricMeasureGraph> {
        Arc::new(build_graph(&[1.0, 1.0], &[(0, 1, 1.0)]).unwrap())
    }

    fn vf(v: &[f64]) -> VertexField {
        VertexField::from(v.to_vec())
    }

    /// One edge: `D(q) = q (g_a − g_b) − q²` with `q = −Y_{a→b}`, so
    /// `q* = clip((g_a − g_b)/2, λ)`.
    fn two_point_closed_form(ga: f64, gb: f64, lam: f64) -> (f64, [f64; 2]) {
        let q = ((ga - gb) / 2.0).clamp(-lam, lam);
        (-q, [ga - q, gb + q])
    }

    #[test]
    fn two_point_resolvent() {
        let d = whole_space(g2()).unwrap();
        let bc = BoundaryCondition::Neumann;
        let p = ResolventProblem::new(&d, vf(&[3.0, 1.0]), 0.5, &bc).unwrap();
        let c = solve_resolvent(&p, 1e-12, 10_000).unwrap();
        let (y, u) = two_point_closed_form(3.0, 1.0, 0.5);
        assert_eq!(y, -0.5);
        assert!((c.u[0] - u[0]).abs() < 1e-12 && (c.u[1] - u[1]).abs() < 1e-12);
        assert!((c.y.interior[0] + 0.5).abs() < 1e-12);
        assert!((c.v[0] - 1.0).abs() < 1e-12 && (c.v[1] + 1.0).abs() < 1e-12);
        assert!((c.dual - 0.75).abs() < 1e-12);
        assert!(c.gap <= 1e-12);
        assert!(c.condition_report.passed);

        let p = ResolventProblem::new(&d, vf(&[2.0, 1.0]), 1.0, &bc).unwrap();
        let c = solve_resolvent(&p, 1e-12, 10_000).unwrap();
        assert!((c.u[0] - 1.5).abs() < 1e-12 && (c.u[1] - 1.5).abs() < 1e-12);
    }

    #[test]
    fn dirichlet_one_point() {
        let d1 = make_domain(g2(), &[0]).unwrap();
        let bc = BoundaryCondition::Dirichlet(vec![2.0].into());
        let p = ResolventProblem::new(&d1, vf(&[0.0]), 1.0, &bc).unwrap();
        let c = solve_resolvent(&p, 1e-12, 10_000).unwrap();
        assert!((c.u[0] - 1.0).abs() < 1e-12);
        assert!((c.y.boundary[0] - 1.0).abs() < 1e-12);
        assert!((c.primal - 1.5).abs() < 1e-12 && (c.dual - 1.5).abs() < 1e-12);
        let nt = normal_trace(&d1, &c.y).unwrap();
        assert!((nt[0] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn every_strategy_solves_the_fixtures() {
        let d = whole_space(g2()).unwrap();
        let bc = BoundaryCondition::Neumann;
        for name in SolverRegistry::global().names() {
            let opts = SolveOptions {
                solver: name.to_string(),
                tol: 1e-12,
                ..SolveOptions::default()
            };
            let p = ResolventProblem::new(&d, vf(&[3.0, 1.0]), 0.5, &bc).unwrap();
            let c = solve_resolvent_with(&p, &opts, None).unwrap();
            assert!((c.u[0] - 2.5).abs() < 1e-10, "{name}");
            assert_eq!(c.solver, name);
        }
    }

    #[test]
    fn gap_examples() {
        let d = whole_space(g2()).unwrap();
        let bc = BoundaryCondition::Neumann;
        let p = ResolventProblem::new(&d, vf(&[3.0, 1.0]), 0.5, &bc).unwrap();
        let opt = EdgeField::new(vec![-0.5], vec![]);
        assert!(duality_gap(&p, &vf(&[2.5, 1.5]), &opt).unwrap().abs() < 1e-15);
        let zero = EdgeField::new(vec![0.0], vec![]);
        assert!((duality_gap(&p, &vf(&[3.0, 1.0]), &zero).unwrap() - 1.0).abs() < 1e-15);
        assert!((primal_value(&p, &vf(&[3.0, 1.0])).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(dual_value(&p, &zero).unwrap(), 0.0);
        let bad = EdgeField::new(vec![-0.6], vec![]);
        assert!(matches!(
            duality_gap(&p, &vf(&[2.5, 1.5]), &bad),
            Err(Error::InfeasibleDual(_))
        ));
    }

    #[test]
    fn neumann_rejects_boundary_flux() {
        let d1 = make_domain(g2(), &[0]).unwrap();
        let bc = BoundaryCondition::Neumann;
        let p = ResolventProblem::new(&d1, vf(&[1.0]), 1.0, &bc).unwrap();
        let y = EdgeField::new(vec![], vec![0.5]);
        assert!(matches!(
            duality_gap(&p, &vf(&[1.0]), &y),
            Err(Error::InfeasibleDual(_))
        ));
    }

    #[test]
    fn verify_examples() {
        let d = whole_space(g2()).unwrap();
        let mut x = EdgeField::zeros(&d, FieldScope::Interior);
        x.set(&d, 0, 1, -1.0).unwrap();
        let bc = BoundaryCondition::Neumann;
        let r = verify_certificate(
            &d,
            &vf(&[2.5, 1.5]),
            &vf(&[1.0, -1.0]),
            &x,
            &bc,
            &CertificateMode::Weak,
            1e-12,
        )
        .unwrap();
        assert!(r.passed);
        assert_eq!(r.max_residual(), 0.0);
        let r = verify_certificate(
            &d,
            &vf(&[2.5, 1.5]),
            &vf(&[1.0, -1.0]),
            &x,
            &bc,
            &CertificateMode::Entropy(vec![2.0]),
            1e-12,
        )
        .unwrap();
        assert!(r.passed);
        assert_eq!(r.entropy_residuals, vec![(2.0, 0.0)]);

        let d1 = make_domain(g2(), &[0]).unwrap();
        let mut x = EdgeField::zeros(&d1, FieldScope::InteriorAndBoundary);
        x.set(&d1, 0, 1, 1.0).unwrap();
        let bc = BoundaryCondition::Dirichlet(vec![2.0].into());
        let r = verify_certificate(
            &d1,
            &vf(&[1.0]),
            &vf(&[-1.0]),
            &x,
            &bc,
            &CertificateMode::Weak,
            1e-12,
        )
        .unwrap();
        assert!(r.passed, "{r:?}");
    }

    #[test]
    fn verify_detects_violations() {
        let d = whole_space(g2()).unwrap();
        let mut x = EdgeField::zeros(&d, FieldScope::Interior);
        x.set(&d, 0, 1, 1.0).unwrap();
        let r = verify_certificate(
            &d,
            &vf(&[2.5, 1.5]),
            &vf(&[1.0, -1.0]),
            &x,
            &BoundaryCondition::Neumann,
            &CertificateMode::Weak,
            1e-9,
        )
        .unwrap();
        assert!(!r.passed);
        assert_eq!(r.pairing_saturation, 2.0);
    }

    #[test]
    fn k_grid() {
        let ks = entropy_k_grid(&vf(&[0.0, 1.0, -2.0, 3.0, 4.0]), 5);
        assert_eq!(ks.len(), 5);
        assert_eq!(*ks.last().unwrap(), 4.0);
        assert!(ks.iter().all(|&k| k > 0.0));
        assert_eq!(entropy_k_grid(&vf(&[0.0, 0.0]), 5), vec![1.0]);
    }

    #[test]
    fn rejects_bad_parameters() {
        let d = whole_space(g2()).unwrap();
        let bc = BoundaryCondition::Neumann;
        assert!(ResolventProblem::new(&d, vf(&[1.0, 1.0]), 0.0, &bc).is_err());
        let p = ResolventProblem::new(&d, vf(&[1.0, 1.0]), 1.0, &bc).unwrap();
        assert!(solve_resolvent(&p, 0.0, 10).is_err());
        let d1 = make_domain(g2(), &[0]).unwrap();
        assert!(matches!(
            ResolventProblem::new(&d1, vf(&[1.0]), 1.0, &BoundaryCondition::WholeSpace),
            Err(Error::BoundaryOnWholeSpace(1))
        ));
    }
}
