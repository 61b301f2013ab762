//! Structural invariants over random graphs. Graphs are drawn from a seeded
//! generator; proptest explores seeds and scalars.

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use tvflow_core::asymptotics::rayleigh_quotient;
use tvflow_core::calculus::{
    gauss_green_terms, pairing, theta_density, total_variation, BcKind, BoundaryCondition,
};
use tvflow_core::flow::{evolve, FlowOptions, StepSchedule};
use tvflow_core::resolvent::{solve_resolvent, ResolventProblem, DEFAULT_MAX_ITERS};
use tvflow_core::selftest::{random_domain, random_edge_field, random_field};
use tvflow_core::space::{trace, BoundaryData, Domain, VertexField};

fn setup(seed: u64, max_vertices: usize) -> (ChaCha8Rng, Domain) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = random_domain(&mut rng, max_vertices);
    (rng, d)
}

fn dirichlet(d: &Domain, rng: &mut ChaCha8Rng) -> BoundaryCondition {
    use rand::Rng;
    let f: BoundaryData = (0..d.boundary().len()).map(|_| rng.gen_range(-2.0..2.0)).collect();
    BoundaryCondition::Dirichlet(f)
}

fn solve(d: &Domain, g: VertexField, lambda: f64, bc: &BoundaryCondition) -> VertexField {
    let p = ResolventProblem::new(d, g, lambda, bc).unwrap();
    solve_resolvent(&p, 1e-12, DEFAULT_MAX_ITERS).unwrap().u
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn gauss_green_holds(seed in any::<u64>()) {
        let (mut rng, d) = setup(seed, 30);
        let u = random_field(&mut rng, &d, 5.0);
        let x = random_edge_field(&mut rng, &d, 5.0);
        let (a, b, c) = gauss_green_terms(&d, &u, &x).unwrap();
        prop_assert!((a + b + c).abs() <= 1e-12 * (a.abs() + b.abs() + c.abs()).max(1e-300));
    }

    #[test]
    fn tv_homogeneous_and_shift_invariant(seed in any::<u64>(), c in -5.0f64..5.0, k in -5.0f64..5.0) {
        let (mut rng, d) = setup(seed, 20);
        let u = random_field(&mut rng, &d, 3.0);
        let n = BoundaryCondition::Neumann;
        let tv = total_variation(&d, &u, &n).unwrap();
        let scaled = total_variation(&d, &u.scaled(c), &n).unwrap();
        prop_assert!((scaled - c.abs() * tv).abs() <= 1e-12 * (1.0 + c.abs() * tv));
        let shifted = total_variation(&d, &u.add(&d.constant(k)), &n).unwrap();
        prop_assert!((shifted - tv).abs() <= 1e-12 * (1.0 + tv + k.abs()));
        if d.has_boundary() {
            let bc = dirichlet(&d, &mut rng);
            let f = bc.boundary_data().unwrap();
            let bc_c = BoundaryCondition::Dirichlet(f.iter().map(|x| c * x).collect());
            let a = total_variation(&d, &u, &bc).unwrap();
            let b = total_variation(&d, &u.scaled(c), &bc_c).unwrap();
            prop_assert!((b - c.abs() * a).abs() <= 1e-12 * (1.0 + c.abs() * a));
        }
    }

    #[test]
    fn pairing_bounded_by_variation(seed in any::<u64>()) {
        let (mut rng, d) = setup(seed, 20);
        let u = random_field(&mut rng, &d, 3.0);
        let x = random_edge_field(&mut rng, &d, 1.0);
        let total = pairing(&d, &x, &u).unwrap().total();
        let tv = total_variation(&d, &u, &BoundaryCondition::Neumann).unwrap();
        prop_assert!(total.abs() <= x.sup_norm() * tv * (1.0 + 1e-12) + 1e-12);
    }

    #[test]
    fn theta_invariant_under_positive_scaling(seed in any::<u64>(), c in 0.01f64..100.0) {
        let (mut rng, d) = setup(seed, 20);
        let u = random_field(&mut rng, &d, 3.0);
        let x = random_edge_field(&mut rng, &d, 1.0);
        let a = theta_density(&d, &x, &u).unwrap();
        let b = theta_density(&d, &x, &u.scaled(c)).unwrap();
        let neg = theta_density(&d, &x, &u.scaled(-c)).unwrap();
        prop_assert_eq!(a.len(), b.len());
        for (k, v) in &a {
            prop_assert_eq!(b[k], *v);
            prop_assert_eq!(neg[k], -*v);
        }
    }

    #[test]
    fn trace_is_linear(seed in any::<u64>(), a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let (mut rng, d) = setup(seed, 20);
        let u = random_field(&mut rng, &d, 3.0);
        let v = random_field(&mut rng, &d, 3.0);
        let lhs = trace(&d, &u.scaled(a).add(&v.scaled(b))).unwrap();
        let (tu, tv) = (trace(&d, &u).unwrap(), trace(&d, &v).unwrap());
        for i in 0..lhs.len() {
            prop_assert!((lhs[i] - (a * tu[i] + b * tv[i])).abs() <= 1e-12 * (1.0 + lhs[i].abs()));
        }
    }

    #[test]
    fn rayleigh_scale_invariant(seed in any::<u64>(), c in prop_oneof![-50.0f64..-0.01, 0.01f64..50.0]) {
        let (mut rng, d) = setup(seed, 20);
        prop_assume!(d.len() >= 2);
        let u = random_field(&mut rng, &d, 3.0);
        let u = u.sub(&d.constant(d.mean(&u)));
        let a = rayleigh_quotient(&d, &u, BcKind::Neumann).unwrap();
        let b = rayleigh_quotient(&d, &u.scaled(c), BcKind::Neumann).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * a.max(1e-300));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn resolvent_conserves_mass_and_order(seed in any::<u64>(), lambda in 0.05f64..3.0) {
        let (mut rng, d) = setup(seed, 12);
        let n = BoundaryCondition::Neumann;
        let g1 = random_field(&mut rng, &d, 3.0);
        let bump = random_field(&mut rng, &d, 1.0);
        let g2: VertexField = g1.iter().zip(bump.iter()).map(|(a, b)| a + b.abs()).collect();
        let u1 = solve(&d, g1.clone(), lambda, &n);
        let u2 = solve(&d, g2.clone(), lambda, &n);
        prop_assert!((d.mass(&u1) - d.mass(&g1)).abs() <= 1e-9 * (1.0 + d.l1(&g1)));
        for (a, b) in u1.iter().zip(u2.iter()) {
            prop_assert!(a <= &(b + 1e-8));
        }
        // L² contraction
        prop_assert!(d.l2(&u1.sub(&u2)) <= d.l2(&g1.sub(&g2)) + 1e-8);
    }

    #[test]
    fn flow_dissipates_energy(seed in any::<u64>(), tau in 0.02f64..0.5) {
        let (mut rng, d) = setup(seed, 12);
        let bc = if d.has_boundary() { dirichlet(&d, &mut rng) } else { BoundaryCondition::Neumann };
        let u0 = random_field(&mut rng, &d, 3.0);
        let traj = evolve(&d, &u0, &bc, &StepSchedule::Uniform(tau), 1.0, &FlowOptions::default()).unwrap();
        let tv: Vec<f64> = traj.states.iter().map(|u| total_variation(&d, u, &bc).unwrap()).collect();
        for w in tv.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-8);
        }
        prop_assert!(traj.all_certified());
    }
}
