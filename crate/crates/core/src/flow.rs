//! Implicit Euler evolution of the total variation flow and trajectory-level
//! checks: extinction, comparison, L¹ regularization estimates and
//! consistency with the variational inequality.

use serde::Serialize;

use crate::calculus::{total_variation, BoundaryCondition, EdgeField};
use crate::error::{Error, Result};
use crate::resolvent::{
    entropy_k_grid, solve_resolvent_with, verify_certificate, CertificateMode, CertificateReport,
    ResolventCertificate, ResolventProblem, SolveOptions,
};
use crate::space::{Domain, VertexField};

#[derive(Debug, Clone, PartialEq)]
pub enum StepSchedule {
    /// Constant step; the last step is shortened to land on the horizon.
    Uniform(f64),
    /// Explicit step sizes, used until the horizon is reached.
    Steps(Vec<f64>),
}

impl StepSchedule {
    fn times(&self, horizon: f64) -> Result<Vec<f64>> {
        let mut times = vec![0.0];
        match self {
            StepSchedule::Uniform(tau) => {
                if !(*tau > 0.0) {
                    return Err(Error::InvalidParameter(format!("tau must be positive, got {tau}")));
                }
                let n = ((horizon / tau) - 1e-9).ceil().max(1.0) as usize;
                for k in 1..=n {
                    times.push((k as f64 * tau).min(horizon));
                }
            }
            StepSchedule::Steps(steps) => {
                let mut t = 0.0;
                for &s in steps {
                    if !(s > 0.0) {
                        return Err(Error::InvalidParameter(format!(
                            "step sizes must be positive, got {s}"
                        )));
                    }
                    if t >= horizon {
                        break;
                    }
                    t = (t + s).min(horizon);
                    times.push(t);
                }
            }
        }
        Ok(times)
    }
}

#[derive(Debug, Clone)]
pub struct FlowOptions {
    pub solve: SolveOptions,
    /// Stop as soon as the state is within `steady_tol` of the steady state.
    pub stop_at_steady: bool,
    pub steady_tol: f64,
    /// Start each solve from the previous step's dual field.
    pub warm_start: bool,
}

impl Default for FlowOptions {
    fn default() -> Self {
        FlowOptions {
            solve: SolveOptions::default(),
            stop_at_steady: true,
            steady_tol: 1e-9,
            warm_start: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExtinctionBracket {
    pub lo: f64,
    pub hi: f64,
    /// Extinction time located inside the bracket by bisection on the last step.
    pub refined: Option<f64>,
}

impl ExtinctionBracket {
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, t: f64) -> bool {
        self.lo <= t && t <= self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    /// Best available extinction time: the refined value, else the midpoint.
    pub fn estimate(&self) -> f64 {
        self.refined.unwrap_or_else(|| self.midpoint())
    }
}

#[derive(Debug, Clone)]
pub struct FlowTrajectory {
    pub domain: Domain,
    pub bc: BoundaryCondition,
    pub times: Vec<f64>,
    pub states: Vec<VertexField>,
    /// `certificates[n − 1]` certifies the step from `states[n − 1]` to `states[n]`.
    pub certificates: Vec<ResolventCertificate>,
    /// Known long-time limit, when one can be named.
    pub steady: Option<VertexField>,
    pub reached_steady: bool,
    pub horizon: f64,
}

impl FlowTrajectory {
    pub fn initial(&self) -> &VertexField {
        &self.states[0]
    }

    pub fn last(&self) -> &VertexField {
        self.states.last().expect("trajectory holds the initial state")
    }

    pub fn steps(&self) -> usize {
        self.states.len() - 1
    }

    pub fn step_size(&self, n: usize) -> f64 {
        self.times[n] - self.times[n - 1]
    }

    /// True when every stored step carried a passing weak certificate.
    pub fn all_certified(&self) -> bool {
        self.certificates.iter().all(|c| c.condition_report.passed)
    }

    /// Runs the entropy-mode certificate check at every step, with truncation
    /// levels drawn from the quantiles of `|u₀|`.
    pub fn entropy_reports(&self, points: usize, tol: f64) -> Result<Vec<CertificateReport>> {
        let ks = entropy_k_grid(self.initial(), points);
        self.certificates
            .iter()
            .map(|c| {
                verify_certificate(
                    &self.domain,
                    &c.u,
                    &c.v,
                    &c.field(),
                    &self.bc,
                    &CertificateMode::Entropy(ks.clone()),
                    tol,
                )
            })
            .collect()
    }

    /// State at grid index `n`; past the stored end this is the last state,
    /// which is only meaningful once the steady state was reached.
    fn state_at(&self, n: usize) -> &VertexField {
        self.states.get(n).unwrap_or_else(|| self.last())
    }
}

/// Long-time limit of the flow, component by component: the ν-mean on
/// components without boundary, the common boundary value on components
/// whose Dirichlet data is constant, and unknown otherwise.
pub fn steady_state(
    domain: &Domain,
    u0: &VertexField,
    bc: &BoundaryCondition,
) -> Option<VertexField> {
    let labels = domain.components();
    let means = domain.component_means(u0);
    let k = labels.iter().copied().max().map_or(0, |m| m + 1);
    let mut value: Vec<Option<f64>> = vec![None; k];
    let mut touched = vec![false; k];
    let mut consistent = vec![true; k];
    if let BoundaryCondition::Dirichlet(f) = bc {
        for (b, &fb) in domain.boundary().iter().zip(f.iter()) {
            let c = labels[b.local];
            touched[c] = true;
            match value[c] {
                None => value[c] = Some(fb),
                Some(x) if x != fb => consistent[c] = false,
                _ => {}
            }
        }
    }
    let mut out = Vec::with_capacity(domain.len());
    for (v, &c) in labels.iter().enumerate() {
        if !touched[c] {
            out.push(means[v]);
        } else if consistent[c] {
            out.push(value[c].unwrap_or(means[v]));
        } else {
            return None;
        }
    }
    Some(out.into())
}

pub fn evolve(
    domain: &Domain,
    u0: &VertexField,
    bc: &BoundaryCondition,
    schedule: &StepSchedule,
    horizon: f64,
    opts: &FlowOptions,
) -> Result<FlowTrajectory> {
    if !(horizon > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "horizon must be positive, got {horizon}"
        )));
    }
    domain.check_field(u0)?;
    bc.validate(domain)?;
    let grid = schedule.times(horizon)?;
    let mut steady = steady_state(domain, u0, bc);
    let mut traj = FlowTrajectory {
        domain: domain.clone(),
        bc: bc.clone(),
        times: vec![0.0],
        states: vec![u0.clone()],
        certificates: Vec::new(),
        steady: steady.clone(),
        reached_steady: false,
        horizon,
    };
    let at_steady = |u: &VertexField, s: &Option<VertexField>| {
        s.as_ref()
            .is_some_and(|s| domain.l2(&u.sub(s)) <= opts.steady_tol)
    };
    if at_steady(u0, &steady) {
        traj.reached_steady = true;
        if opts.stop_at_steady {
            return Ok(traj);
        }
    }
    let mut warm: Option<EdgeField> = None;
    for n in 1..grid.len() {
        let tau = grid[n] - grid[n - 1];
        let prev = traj.last().clone();
        let problem = ResolventProblem::new(domain, prev.clone(), tau, bc)?;
        let cert = solve_resolvent_with(&problem, &opts.solve, warm.as_ref()).map_err(|e| {
            Error::FlowStep {
                step: n,
                source: Box::new(e),
            }
        })?;
        if opts.warm_start {
            // rescale so the previous field sits on the next step's box
            let next_tau = grid.get(n + 1).map_or(tau, |t| t - grid[n]);
            warm = Some(cert.y.scaled(next_tau / tau));
        }
        let u = cert.u.clone();
        traj.times.push(grid[n]);
        traj.states.push(u.clone());
        traj.certificates.push(cert);

        if steady.is_none() && domain.l2(&u.sub(&prev)) <= opts.steady_tol * tau {
            // stationary step: u minimizes TV_f, so it is the limit
            steady = Some(u.clone());
            traj.steady = steady.clone();
        }
        if at_steady(&u, &steady) {
            traj.reached_steady = true;
            if opts.stop_at_steady {
                break;
            }
        } else {
            traj.reached_steady = false;
        }
    }
    Ok(traj)
}

/// First grid interval on which the state is within `tol` (in L²(ν)) of the
/// steady state.
pub fn extinction_time(traj: &FlowTrajectory, tol: f64) -> Result<ExtinctionBracket> {
    let steady = traj.steady.as_ref().ok_or(Error::NotReached(traj.horizon))?;
    for (n, u) in traj.states.iter().enumerate() {
        if traj.domain.l2(&u.sub(steady)) <= tol {
            let lo = if n == 0 { 0.0 } else { traj.times[n - 1] };
            return Ok(ExtinctionBracket {
                lo,
                hi: traj.times[n],
                refined: if n == 0 { Some(0.0) } else { None },
            });
        }
    }
    Err(Error::NotReached(traj.horizon))
}

/// Locates the extinction time inside `bracket` by bisecting the length `s`
/// of the final step: `J_s(u(lo))` is steady exactly for `s ≥ T_ex − lo`.
pub fn refine_extinction(
    traj: &FlowTrajectory,
    bracket: &ExtinctionBracket,
    tol: f64,
    solve: &SolveOptions,
) -> Result<ExtinctionBracket> {
    if bracket.hi == 0.0 {
        return Ok(ExtinctionBracket {
            refined: Some(0.0),
            ..*bracket
        });
    }
    let steady = traj.steady.as_ref().ok_or(Error::NotReached(traj.horizon))?;
    let n = traj
        .times
        .iter()
        .position(|&t| t == bracket.lo)
        .ok_or(Error::GridMismatch)?;
    let start = traj.states[n].clone();
    let domain = &traj.domain;
    // the detection tolerance would stop the bisection early by about tol/|u_t|
    let sharp = tol.min(1e-12 * (1.0 + domain.l2(&start)));
    let reaches = |s: f64| -> Result<bool> {
        let p = ResolventProblem::new(domain, start.clone(), s, &traj.bc)?;
        let c = solve_resolvent_with(&p, solve, None)?;
        Ok(domain.l2(&c.u.sub(steady)) <= sharp)
    };
    let (mut lo, mut hi) = (0.0, bracket.hi - bracket.lo);
    if !reaches(hi)? {
        return Ok(*bracket);
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if reaches(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(ExtinctionBracket {
        refined: Some(bracket.lo + hi),
        ..*bracket
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonReport {
    pub q: f64,
    /// `‖(u₁(0) − u₂(0))⁺‖_q`.
    pub initial: f64,
    /// `‖(u₁(t) − u₂(t))⁺‖_q − initial` at every grid time.
    pub residuals: Vec<f64>,
    pub tol: f64,
    pub passed: bool,
}

/// `‖(u₁(t) − u₂(t))⁺‖_{L^q(ν)} ≤ ‖(u₁(0) − u₂(0))⁺‖_{L^q(ν)}` at every grid
/// time, within `10·tol`.
pub fn check_comparison(
    a: &FlowTrajectory,
    b: &FlowTrajectory,
    q: f64,
    tol: f64,
) -> Result<ComparisonReport> {
    let n = grid_union(a, b)?;
    let d = &a.domain;
    let initial = d.lq(&a.initial().sub(b.initial()).positive_part(), q);
    let residuals: Vec<f64> = (0..n)
        .map(|k| d.lq(&a.state_at(k).sub(b.state_at(k)).positive_part(), q) - initial)
        .collect();
    let slack = 10.0 * tol;
    let passed = residuals.iter().all(|&r| r <= slack);
    Ok(ComparisonReport {
        q,
        initial,
        residuals,
        tol: slack,
        passed,
    })
}

/// Number of grid points covered by both trajectories, after checking that
/// they share the domain, condition and time grid. A shorter trajectory is
/// extended by its last state only when it reached the steady state.
fn grid_union(a: &FlowTrajectory, b: &FlowTrajectory) -> Result<usize> {
    if a.domain != b.domain || a.bc != b.bc {
        return Err(Error::GridMismatch);
    }
    let common = a.times.len().min(b.times.len());
    if a.times[..common] != b.times[..common] {
        return Err(Error::GridMismatch);
    }
    let n = a.times.len().max(b.times.len());
    for t in [a, b] {
        if t.times.len() < n && !t.reached_steady {
            return Err(Error::GridMismatch);
        }
    }
    Ok(n)
}

#[derive(Debug, Clone, Serialize)]
pub struct RegularityEntry {
    pub t: f64,
    /// `‖(u_n − u_{n−1})/τ_n‖_{L¹(ν)}`.
    pub quotient_l1: f64,
    /// `‖u₀‖_{L¹(ν)}/t_n · (1 + 2τ_n/t_n)`.
    pub l1_bound: f64,
    /// `max_v [(u_n − u_{n−1})/τ_n − (u_n/t_n)(1 + 2τ_n/t_n)]`, when `u₀ ≥ 0`.
    pub pointwise_excess: Option<f64>,
    /// Whether this entry is inside the checked window.
    pub checked: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct RegularityReport {
    pub entries: Vec<RegularityEntry>,
    pub nonnegative_data: bool,
    pub passed: bool,
}

/// L¹ bound on the time derivative and, for nonnegative data, the one-sided
/// pointwise bound, evaluated on implicit Euler difference quotients with
/// slack `1 + 2τ/t`. Entries with `t < start_after` are reported but not
/// checked; `tol` is an absolute allowance for solver error.
pub fn check_regularity(
    traj: &FlowTrajectory,
    start_after: f64,
    tol: f64,
) -> Result<RegularityReport> {
    if traj.bc.is_dirichlet() {
        return Err(Error::InvalidParameter(
            "regularity estimates apply to Neumann and whole-space flows".into(),
        ));
    }
    let d = &traj.domain;
    let u0 = traj.initial();
    let l1_0 = d.l1(u0);
    let nonnegative = u0.iter().all(|&x| x >= 0.0);
    let mut entries = Vec::new();
    let mut passed = true;
    for n in 1..traj.states.len() {
        let t = traj.times[n];
        let tau = traj.step_size(n);
        let quotient = traj.states[n].sub(&traj.states[n - 1]).scaled(1.0 / tau);
        let factor = 1.0 + 2.0 * tau / t;
        let quotient_l1 = d.l1(&quotient);
        let l1_bound = l1_0 / t * factor;
        let pointwise_excess = nonnegative.then(|| {
            quotient
                .iter()
                .zip(traj.states[n].iter())
                .map(|(q, u)| q - u / t * factor)
                .fold(f64::NEG_INFINITY, f64::max)
        });
        let checked = t >= start_after;
        if checked {
            let ok_l1 = quotient_l1 <= l1_bound + tol;
            let ok_pw = pointwise_excess.is_none_or(|e| e <= tol);
            passed &= ok_l1 && ok_pw;
        }
        entries.push(RegularityEntry {
            t,
            quotient_l1,
            l1_bound,
            pointwise_excess,
            checked,
        });
    }
    Ok(RegularityReport {
        entries,
        nonnegative_data: nonnegative,
        passed,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct VariationalReport {
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub passed: bool,
}

/// Evaluates the variational inequality
/// `∫₀ᵀ TV_f(u) ≤ ∫₀ᵀ [⟨∂ₜv, v − u⟩_ν + TV_f(v)] − ½‖(v − u)(T)‖² + ½‖v(0) − u₀‖²`
/// for a test path `v` given on the trajectory's grid, using the trapezoidal
/// rule in time and a piecewise-linear `v`.
pub fn check_variational_consistency(
    traj: &FlowTrajectory,
    test: &[VertexField],
    slack: f64,
) -> Result<VariationalReport> {
    if test.len() != traj.states.len() {
        return Err(Error::GridMismatch);
    }
    let d = &traj.domain;
    for v in test {
        d.check_field(v)?;
    }
    let tv = |u: &VertexField| total_variation(d, u, &traj.bc);
    let mut lhs = 0.0;
    let mut rhs = 0.0;
    for n in 1..traj.states.len() {
        let tau = traj.step_size(n);
        let (u0, u1) = (&traj.states[n - 1], &traj.states[n]);
        let (v0, v1) = (&test[n - 1], &test[n]);
        lhs += 0.5 * tau * (tv(u0)? + tv(u1)?);
        rhs += 0.5 * tau * (tv(v0)? + tv(v1)?);
        let dv = v1.sub(v0);
        let avg = v0.sub(u0).add(&v1.sub(u1)).scaled(0.5);
        rhs += d.inner(&dv, &avg);
    }
    let last = traj.states.len() - 1;
    let end_gap = d.l2(&test[last].sub(&traj.states[last]));
    let start_gap = d.l2(&test[0].sub(traj.initial()));
    rhs += -0.5 * end_gap * end_gap + 0.5 * start_gap * start_gap;
    Ok(VariationalReport {
        lhs,
        rhs,
        slack,
        passed: lhs <= rhs + slack,
    })
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
    fn two_point_flow_is_exact() {
        let d = whole_space(g2()).unwrap();
        let bc = BoundaryCondition::Neumann;
        let traj = evolve(
            &d,
            &vf(&[1.0, -1.0]),
            &bc,
            &StepSchedule::Uniform(0.25),
            2.0,
            &FlowOptions::default(),
        )
        .unwrap();
        for (t, u) in traj.times.iter().zip(&traj.states) {
            let expect = (1.0 - t).max(0.0);
            assert!((u[0] - expect).abs() < 1e-12, "t={t} u={u:?}");
            assert!((u[1] + expect).abs() < 1e-12);
        }
        assert!(traj.reached_steady);
        assert_eq!(*traj.times.last().unwrap(), 1.0);
        let b = extinction_time(&traj, 1e-9).unwrap();
        assert!(b.contains(1.0) && b.width() <= 0.25);
        assert!(traj.all_certified());
    }

    #[test]
    fn dirichlet_one_point_flow() {
        let d1 = make_domain(g2(), &[0]).unwrap();
        let bc = BoundaryCondition::homogeneous_dirichlet(&d1);
        let traj = evolve(
            &d1,
            &vf(&[2.0]),
            &bc,
            &StepSchedule::Uniform(0.25),
            3.0,
            &FlowOptions::default(),
        )
        .unwrap();
        for (t, u) in traj.times.iter().zip(&traj.states) {
            assert!((u[0] - (2.0 - t).max(0.0)).abs() < 1e-12);
        }
        let b = extinction_time(&traj, 1e-9).unwrap();
        assert!(b.contains(2.0));
        let r = refine_extinction(&traj, &b, 1e-9, &SolveOptions::default()).unwrap();
        assert!((r.refined.unwrap() - 2.0).abs() < 1e-8);
    }

    #[test]
    fn constant_data_is_stationary() {
        let d = whole_space(g2()).unwrap();
        let opts = FlowOptions {
            stop_at_steady: false,
            ..FlowOptions::default()
        };
        let traj = evolve(
            &d,
            &vf(&[0.5, 0.5]),
            &BoundaryCondition::Neumann,
            &StepSchedule::Uniform(0.5),
            2.0,
            &opts,
        )
        .unwrap();
        assert!(traj.states.iter().all(|u| u == &vf(&[0.5, 0.5])));
        let b = extinction_time(&traj, 1e-12).unwrap();
        assert_eq!((b.lo, b.hi), (0.0, 0.0));
    }

    #[test]
    fn schedule_lands_on_horizon() {
        let t = StepSchedule::Uniform(0.3).times(1.0).unwrap();
        assert_eq!(t.len(), 5);
        assert_eq!(*t.last().unwrap(), 1.0);
        let t = StepSchedule::Steps(vec![0.5, 0.25, 1.0]).times(1.0).unwrap();
        assert_eq!(t, vec![0.0, 0.5, 0.75, 1.0]);
        assert!(StepSchedule::Uniform(0.0).times(1.0).is_err());
    }

    #[test]
    fn comparison_examples() {
        let d = whole_space(g2()).unwrap();
        let bc = BoundaryCondition::Neumann;
        let opts = FlowOptions::default();
        let s = StepSchedule::Uniform(0.5);
        let a = evolve(&d, &vf(&[3.0, 1.0]), &bc, &s, 3.0, &opts).unwrap();
        let b = evolve(&d, &vf(&[1.0, 3.0]), &bc, &s, 3.0, &opts).unwrap();
        assert!((a.states[1][0] - 2.5).abs() < 1e-12);
        let r = check_comparison(&a, &b, 1.0, 1e-12).unwrap();
        assert_eq!(r.initial, 2.0);
        assert!(r.passed);
        // after one step: (2.5,1.5) vs (1.5,2.5) => positive part (1,0)
        assert!((r.residuals[1] + 1.0).abs() < 1e-12);

        let r = check_comparison(&a, &a, 2.0, 1e-12).unwrap();
        assert!(r.residuals.iter().all(|&x| x == 0.0));

        let lo = evolve(&d, &vf(&[0.0, 1.0]), &bc, &s, 3.0, &opts).unwrap();
        let hi = evolve(&d, &vf(&[1.0, 2.0]), &bc, &s, 3.0, &opts).unwrap();
        let r = check_comparison(&lo, &hi, f64::INFINITY, 1e-12).unwrap();
        assert!(r.passed && r.initial == 0.0);

        let other = evolve(&d, &vf(&[1.0, 2.0]), &bc, &StepSchedule::Uniform(0.25), 3.0, &opts)
            .unwrap();
        assert!(matches!(
            check_comparison(&lo, &other, 1.0, 1e-12),
            Err(Error::GridMismatch)
        ));
    }

    #[test]
    fn regularity_examples() {
        let d = whole_space(g2()).unwrap();
        let bc = BoundaryCondition::Neumann;
        let s = StepSchedule::Uniform(0.25);
        let opts = FlowOptions::default();
        let a = evolve(&d, &vf(&[1.0, -1.0]), &bc, &s, 2.0, &opts).unwrap();
        let r = check_regularity(&a, 0.0, 1e-12).unwrap();
        assert!(r.passed);
        assert!((r.entries[0].quotient_l1 - 2.0).abs() < 1e-12);

        let b = evolve(&d, &vf(&[4.0, 0.0]), &bc, &s, 3.0, &opts).unwrap();
        for (t, u) in b.times.iter().zip(&b.states) {
            let e = t.min(2.0);
            assert!((u[0] - (4.0 - e)).abs() < 1e-12 && (u[1] - e).abs() < 1e-12);
        }
        let r = check_regularity(&b, 0.0, 1e-12).unwrap();
        assert!(r.nonnegative_data && r.passed, "{r:?}");
    }

    #[test]
    fn variational_examples() {
        let g = Arc::new(build_graph(&[1.0, 1.0, 1.0], &[(0, 1, 1.0), (1, 2, 1.0)]).unwrap());
        let d = make_domain(g, &[1]).unwrap();
        // boundary data is the trace of u0, flow leaves u0 in place
        let u0 = vf(&[2.0]);
        let bc = BoundaryCondition::Dirichlet(crate::space::trace(&d, &u0).unwrap());
        let opts = FlowOptions {
            stop_at_steady: false,
            ..FlowOptions::default()
        };
        let tau = 0.25;
        let traj = evolve(&d, &u0, &bc, &StepSchedule::Uniform(tau), 2.0, &opts).unwrap();
        let r = check_variational_consistency(&traj, &traj.states, 5.0 * tau).unwrap();
        assert!(r.passed && (r.lhs - r.rhs).abs() < 1e-12);
        let constant = vec![u0.clone(); traj.states.len()];
        assert!(check_variational_consistency(&traj, &constant, 5.0 * tau).unwrap().passed);
        assert!(matches!(
            check_variational_consistency(&traj, &constant[1..], 1.0),
            Err(Error::GridMismatch)
        ));
    }
}
