//! Built-in checks run by `tvflow selftest`: the Gauss–Green identity on
//! random domains and a fixture suite with closed-form answers.

use std::collections::HashSet;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::asymptotics::{asymptotic_profile, estimate_lambda1, rayleigh_quotient};
use crate::calculus::{gauss_green_terms, BcKind, BoundaryCondition, EdgeField};
use crate::error::Result;
use crate::flow::{evolve, extinction_time, refine_extinction, FlowOptions, StepSchedule};
use crate::resolvent::{solve_resolvent, ResolventProblem, DEFAULT_MAX_ITERS};
use crate::space::{build_graph, make_domain, whole_space, Domain, MetricMeasureGraph, VertexField};

#[derive(Debug, Clone, Serialize)]
pub struct SelfCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct SelftestReport {
    pub checks: Vec<SelfCheck>,
}

impl SelftestReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Random connected-ish graph with `2..=max_vertices` vertices, measures and
/// weights in `(0.1, 10)`, and a random nonempty interior (the whole graph
/// with probability ½).
pub fn random_domain(rng: &mut impl Rng, max_vertices: usize) -> Domain {
    let n = rng.gen_range(2..=max_vertices.max(2));
    let measures: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..10.0)).collect();
    let mut edges = Vec::new();
    let mut seen = HashSet::new();
    for v in 1..n {
        // spanning tree plus extra chords
        let a = rng.gen_range(0..v);
        seen.insert((a, v));
        edges.push((a, v, rng.gen_range(0.1..10.0)));
    }
    let extra = rng.gen_range(0..=n);
    for _ in 0..extra {
        let (a, b) = (rng.gen_range(0..n), rng.gen_range(0..n));
        if a != b && seen.insert((a.min(b), a.max(b))) {
            edges.push((a.min(b), a.max(b), rng.gen_range(0.1..10.0)));
        }
    }
    let graph = Arc::new(build_graph(&measures, &edges).expect("valid random graph"));
    if rng.gen_bool(0.5) {
        whole_space(graph).expect("nonempty")
    } else {
        let mut interior: Vec<usize> = (0..n).filter(|_| rng.gen_bool(0.6)).collect();
        if interior.is_empty() {
            interior.push(0);
        }
        make_domain(graph, &interior).expect("nonempty interior")
    }
}

pub fn random_field(rng: &mut impl Rng, domain: &Domain, scale: f64) -> VertexField {
    (0..domain.len()).map(|_| rng.gen_range(-scale..scale)).collect()
}

pub fn random_edge_field(rng: &mut impl Rng, domain: &Domain, scale: f64) -> EdgeField {
    EdgeField::new(
        (0..domain.edges().len()).map(|_| rng.gen_range(-scale..scale)).collect(),
        (0..domain.boundary().len()).map(|_| rng.gen_range(-scale..scale)).collect(),
    )
}

/// Largest relative Gauss–Green residual over `cases` random domains.
pub fn gauss_green_suite(seed: u64, cases: usize, max_vertices: usize) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0_f64;
    for _ in 0..cases {
        let d = random_domain(&mut rng, max_vertices);
        let u = random_field(&mut rng, &d, 10.0);
        let x = random_edge_field(&mut rng, &d, 10.0);
        let (a, b, c) = gauss_green_terms(&d, &u, &x)?;
        let scale = a.abs() + b.abs() + c.abs();
        if scale > 0.0 {
            worst = worst.max((a + b + c).abs() / scale);
        }
    }
    Ok(worst)
}

fn g2() -> Arc<MetricMeasureGraph> {
    Arc::new(build_graph(&[1.0, 1.0], &[(0, 1, 1.0)]).expect("fixture"))
}

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
}

pub fn run_selftest() -> SelftestReport {
    let mut checks = Vec::new();
    let mut push = |name: &str, outcome: Result<(bool, String)>| {
        let (passed, detail) = outcome.unwrap_or_else(|e| (false, format!("error: {e}")));
        checks.push(SelfCheck {
            name: name.to_string(),
            passed,
            detail,
        });
    };

    push(
        "gauss-green",
        gauss_green_suite(0, 100, 50).map(|r| (r <= 1e-12, format!("max relative residual {r:.3e}"))),
    );

    push("resolvent-g2", (|| {
        let d = whole_space(g2())?;
        let bc = BoundaryCondition::Neumann;
        let p = ResolventProblem::new(&d, vec![3.0, 1.0].into(), 0.5, &bc)?;
        let c = solve_resolvent(&p, 1e-12, DEFAULT_MAX_ITERS)?;
        Ok((
            close(&c.u, &[2.5, 1.5], 1e-9) && c.condition_report.passed,
            format!("u = {:?}, gap {:.2e}", &c.u[..], c.gap),
        ))
    })());

    push("resolvent-d1", (|| {
        let d = make_domain(g2(), &[0])?;
        let bc = BoundaryCondition::homogeneous_dirichlet(&d);
        let p = ResolventProblem::new(&d, vec![3.0].into(), 1.0, &bc)?;
        let c = solve_resolvent(&p, 1e-12, DEFAULT_MAX_ITERS)?;
        Ok((
            close(&c.u, &[2.0], 1e-9) && c.condition_report.passed,
            format!("u = {:?}, gap {:.2e}", &c.u[..], c.gap),
        ))
    })());

    push("extinction-g2", (|| {
        let d = whole_space(g2())?;
        let opts = FlowOptions::default();
        let t = evolve(&d, &vec![1.0, -1.0].into(), &BoundaryCondition::Neumann, &StepSchedule::Uniform(0.1), 2.0, &opts)?;
        let b = extinction_time(&t, 1e-9)?;
        let b = refine_extinction(&t, &b, 1e-9, &opts.solve)?;
        let p = asymptotic_profile(&t, &b)?;
        Ok((
            b.contains(1.0) && close(&p.w, &[1.0, -1.0], 1e-6),
            format!("bracket [{}, {}], T_ex {:.12}, profile {:?}", b.lo, b.hi, b.estimate(), &p.w[..]),
        ))
    })());

    push("extinction-d1", (|| {
        let d = make_domain(g2(), &[0])?;
        let bc = BoundaryCondition::homogeneous_dirichlet(&d);
        let opts = FlowOptions::default();
        let t = evolve(&d, &vec![2.0].into(), &bc, &StepSchedule::Uniform(0.1), 3.0, &opts)?;
        let b = extinction_time(&t, 1e-9)?;
        Ok((b.contains(2.0), format!("bracket [{}, {}]", b.lo, b.hi)))
    })());

    push("rayleigh-lambda1", (|| {
        let d = whole_space(g2())?;
        let rq = rayleigh_quotient(&d, &vec![1.0, -1.0].into(), BcKind::Neumann)?;
        let en = estimate_lambda1(&d, BcKind::Neumann, 1 << 10)?;
        let d1 = make_domain(g2(), &[0])?;
        let ed = estimate_lambda1(&d1, BcKind::Dirichlet, 1 << 10)?;
        let s2 = std::f64::consts::SQRT_2;
        Ok((
            (rq - s2).abs() < 1e-15 && (en.lambda1_upper - s2).abs() < 1e-15 && ed.lambda1_upper == 1.0,
            format!("RQ {rq}, λ̂₁(G2) {}, λ̂₁(D1) {}", en.lambda1_upper, ed.lambda1_upper),
        ))
    })());

    SelftestReport { checks }
}
