//! λ₁ estimators. Each returns an upper bound together with the witness that
//! attains it; the reported value is always `rayleigh_quotient(witness)`.

use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{asymptotic_profile, rayleigh_quotient, EstimateMethod, SpectralEstimate};
use crate::calculus::{BcKind, BoundaryCondition};
use crate::error::{Error, Result};
use crate::flow::{evolve, extinction_time, refine_extinction, FlowOptions, StepSchedule};
use crate::registry::Registry;
use crate::space::{Domain, VertexField};

pub trait Lambda1Estimator: Send + Sync {
    fn name(&self) -> &'static str;
    fn description(&self) -> &'static str;
    /// `budget` bounds the work (candidate evaluations or flow steps);
    /// `seed` drives any randomized choices.
    fn estimate(&self, domain: &Domain, bc: BcKind, budget: u64, seed: u64)
        -> Result<SpectralEstimate>;
}

pub type EstimatorRegistry = Registry<dyn Lambda1Estimator>;

impl EstimatorRegistry {
    pub fn with_builtin() -> Self {
        let mut r: EstimatorRegistry = Registry::new("subset-enumeration");
        r.register("subset-enumeration", Box::new(SubsetSearch))
            .register("flow-profile", Box::new(FlowProfile));
        r
    }

    pub fn global() -> &'static EstimatorRegistry {
        static GLOBAL: OnceLock<EstimatorRegistry> = OnceLock::new();
        GLOBAL.get_or_init(EstimatorRegistry::with_builtin)
    }
}

/// Graph data needed to score indicator witnesses.
struct Cuts {
    measures: Vec<f64>,
    total: f64,
    adj: Vec<Vec<(usize, f64)>>,
    /// Total boundary weight at each interior vertex (zero unless Dirichlet).
    bdw: Vec<f64>,
    dirichlet: bool,
}

impl Cuts {
    fn new(domain: &Domain, bc: BcKind) -> Self {
        let n = domain.len();
        let mut adj = vec![Vec::new(); n];
        for e in domain.edges() {
            adj[e.tail].push((e.head, e.weight));
            adj[e.head].push((e.tail, e.weight));
        }
        let dirichlet = bc == BcKind::Dirichlet;
        let mut bdw = vec![0.0; n];
        if dirichlet {
            for b in domain.boundary() {
                bdw[b.local] += b.weight;
            }
        }
        Cuts {
            measures: domain.measures().to_vec(),
            total: domain.total_measure(),
            adj,
            bdw,
            dirichlet,
        }
    }

    fn n(&self) -> usize {
        self.measures.len()
    }

    /// Quotient of the indicator (centered for Neumann) from its aggregates.
    fn value(&self, cut: f64, nu_s: f64, bd: f64) -> f64 {
        if nu_s <= 0.0 {
            return f64::INFINITY;
        }
        if self.dirichlet {
            (cut + bd) / nu_s.sqrt()
        } else {
            let rest = self.total - nu_s;
            if rest <= 1e-15 * self.total {
                return f64::INFINITY;
            }
            cut / (nu_s * rest / self.total).sqrt()
        }
    }

    fn score_mask(&self, mask: u64) -> f64 {
        let (mut cut, mut nu_s, mut bd) = (0.0, 0.0, 0.0);
        for v in 0..self.n() {
            if mask >> v & 1 == 1 {
                nu_s += self.measures[v];
                bd += self.bdw[v];
                for &(y, w) in &self.adj[v] {
                    if mask >> y & 1 == 0 {
                        cut += w;
                    }
                }
            }
        }
        self.value(cut, nu_s, bd)
    }

    fn witness(&self, in_s: &[bool]) -> VertexField {
        let shift = if self.dirichlet {
            0.0
        } else {
            let nu_s: f64 = (0..self.n())
                .filter(|&v| in_s[v])
                .map(|v| self.measures[v])
                .sum();
            nu_s / self.total
        };
        in_s.iter()
            .map(|&s| if s { 1.0 } else { 0.0 } - shift)
            .collect()
    }
}

/// Makes an estimate from a witness, recomputing its value exactly.
fn finish(
    domain: &Domain,
    bc: BcKind,
    witness: VertexField,
    method: EstimateMethod,
    evaluations: u64,
) -> Result<SpectralEstimate> {
    let lambda1_upper = rayleigh_quotient(domain, &witness, bc)?;
    Ok(SpectralEstimate {
        lambda1_upper,
        witness,
        method,
        evaluations,
    })
}

/// Zero-quotient witness when `TV` has a larger null space than the
/// constants: a second component (Neumann) or a component that does not
/// touch the boundary (Dirichlet).
fn degenerate(domain: &Domain, cuts: &Cuts) -> Option<Vec<bool>> {
    let labels = domain.components();
    let k = domain.num_components();
    if cuts.dirichlet {
        let mut touches = vec![false; k];
        for (v, &b) in cuts.bdw.iter().enumerate() {
            if b > 0.0 {
                touches[labels[v]] = true;
            }
        }
        let c = touches.iter().position(|t| !t)?;
        Some(labels.iter().map(|&l| l == c).collect())
    } else if k > 1 {
        Some(labels.iter().map(|&l| l == 0).collect())
    } else {
        None
    }
}

fn check_admissible(domain: &Domain, bc: BcKind) -> Result<()> {
    if bc != BcKind::Dirichlet && domain.len() < 2 {
        return Err(Error::InvalidParameter(
            "no nonzero mean-zero field on a single vertex".into(),
        ));
    }
    if bc == BcKind::WholeSpace && domain.has_boundary() {
        return Err(Error::BoundaryOnWholeSpace(domain.boundary().len()));
    }
    Ok(())
}

/// Minimizes the quotient over indicator witnesses: exhaustively when all
/// `2^|I|` subsets fit in the budget, otherwise by seeded best-improvement
/// local search from singletons and random subsets.
pub struct SubsetSearch;

const LOCAL_SEEDS: usize = 16;

impl Lambda1Estimator for SubsetSearch {
    fn name(&self) -> &'static str {
        "subset-enumeration"
    }

    fn description(&self) -> &'static str {
        "indicator witnesses: exhaustive when 2^|I| fits the budget, else local search"
    }

    fn estimate(
        &self,
        domain: &Domain,
        bc: BcKind,
        budget: u64,
        seed: u64,
    ) -> Result<SpectralEstimate> {
        check_admissible(domain, bc)?;
        let cuts = Cuts::new(domain, bc);
        if let Some(s) = degenerate(domain, &cuts) {
            return finish(domain, bc, cuts.witness(&s), EstimateMethod::SubsetEnumeration, 0);
        }
        let n = cuts.n();
        // Neumann quotients are symmetric under complement: fix the last vertex outside S
        let free = if cuts.dirichlet { n } else { n - 1 };
        if free < 63 && (1u64 << free) <= budget {
            let count = 1u64 << free;
            let (_, mask) = (1..count)
                .into_par_iter()
                .map(|m| (cuts.score_mask(m), m))
                .reduce(
                    || (f64::INFINITY, u64::MAX),
                    |a, b| match a.0.total_cmp(&b.0) {
                        std::cmp::Ordering::Less => a,
                        std::cmp::Ordering::Greater => b,
                        std::cmp::Ordering::Equal => if a.1 <= b.1 { a } else { b },
                    },
                );
            let s: Vec<bool> = (0..n).map(|v| mask >> v & 1 == 1).collect();
            return finish(
                domain,
                bc,
                cuts.witness(&s),
                EstimateMethod::SubsetEnumeration,
                count - 1,
            );
        }
        local_search(domain, bc, &cuts, budget, seed)
    }
}

struct Climb<'c> {
    cuts: &'c Cuts,
    in_s: Vec<bool>,
    cut: f64,
    nu_s: f64,
    bd: f64,
}

impl<'c> Climb<'c> {
    fn new(cuts: &'c Cuts, in_s: Vec<bool>) -> Self {
        let mut c = Climb {
            cuts,
            in_s,
            cut: 0.0,
            nu_s: 0.0,
            bd: 0.0,
        };
        for v in 0..cuts.n() {
            if c.in_s[v] {
                c.nu_s += cuts.measures[v];
                c.bd += cuts.bdw[v];
                for &(y, w) in &cuts.adj[v] {
                    if !c.in_s[y] {
                        c.cut += w;
                    }
                }
            }
        }
        c
    }

    fn value(&self) -> f64 {
        self.cuts.value(self.cut, self.nu_s, self.bd)
    }

    /// Aggregates after moving `v` across the cut.
    fn flipped(&self, v: usize) -> (f64, f64, f64) {
        let side = self.in_s[v];
        let mut cut = self.cut;
        for &(y, w) in &self.cuts.adj[v] {
            if self.in_s[y] == side {
                cut += w;
            } else {
                cut -= w;
            }
        }
        let sign = if side { -1.0 } else { 1.0 };
        (
            cut.max(0.0),
            self.nu_s + sign * self.cuts.measures[v],
            (self.bd + sign * self.cuts.bdw[v]).max(0.0),
        )
    }

    fn flip(&mut self, v: usize) {
        (self.cut, self.nu_s, self.bd) = self.flipped(v);
        self.in_s[v] = !self.in_s[v];
    }
}

fn local_search(
    domain: &Domain,
    bc: BcKind,
    cuts: &Cuts,
    budget: u64,
    seed: u64,
) -> Result<SpectralEstimate> {
    let n = cuts.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut starts: Vec<Vec<bool>> = Vec::new();
    let singles = n.min(LOCAL_SEEDS);
    for i in 0..singles {
        let v = i * n / singles;
        starts.push((0..n).map(|x| x == v).collect());
    }
    for _ in 0..LOCAL_SEEDS {
        starts.push((0..n).map(|_| rng.gen_bool(0.5)).collect());
    }

    let mut evaluations = 0u64;
    let mut best: Option<(f64, Vec<bool>)> = None;
    let mut exhausted = false;
    'seeds: for start in starts {
        let mut climb = Climb::new(cuts, start);
        let mut current = climb.value();
        evaluations += 1;
        loop {
            if best.as_ref().map_or(true, |(b, _)| current < *b) {
                best = Some((current, climb.in_s.clone()));
            }
            if evaluations + n as u64 > budget {
                exhausted = true;
                break 'seeds;
            }
            evaluations += n as u64;
            let mut pick = None;
            let mut pick_val = current;
            for v in 0..n {
                let (c, m, b) = climb.flipped(v);
                let val = cuts.value(c, m, b);
                if val < pick_val - 1e-12 * pick_val.abs() {
                    pick_val = val;
                    pick = Some(v);
                }
            }
            match pick {
                Some(v) => {
                    climb.flip(v);
                    current = pick_val;
                }
                None => break,
            }
        }
    }

    let (_, s) = best.ok_or_else(|| {
        Error::InvalidParameter("budget too small for a single evaluation".into())
    })?;
    let est = finish(
        domain,
        bc,
        cuts.witness(&s),
        EstimateMethod::SubsetLocalSearch,
        evaluations,
    )?;
    if exhausted {
        return Err(Error::BudgetExceeded { best: Box::new(est) });
    }
    Ok(est)
}

/// Runs the flow from a seeded random datum to extinction and takes the
/// quotient of the rescaled profile, which is an eigenfunction of `∂TV`.
/// `budget` bounds the number of implicit steps.
pub struct FlowProfile;

const STEPS_PER_ATTEMPT: usize = 64;

impl Lambda1Estimator for FlowProfile {
    fn name(&self) -> &'static str {
        "flow-profile"
    }

    fn description(&self) -> &'static str {
        "quotient of the extinction profile of the flow from a random datum"
    }

    fn estimate(
        &self,
        domain: &Domain,
        bc: BcKind,
        budget: u64,
        seed: u64,
    ) -> Result<SpectralEstimate> {
        check_admissible(domain, bc)?;
        let cuts = Cuts::new(domain, bc);
        if let Some(s) = degenerate(domain, &cuts) {
            return finish(domain, bc, cuts.witness(&s), EstimateMethod::FlowProfile, 0);
        }
        let n = cuts.n();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut u0: VertexField = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        if !cuts.dirichlet {
            u0 = u0.sub(&domain.constant(domain.mean(&u0)));
        }
        u0 = u0.scaled(1.0 / domain.l2(&u0));

        let fbc = match bc {
            BcKind::Dirichlet => BoundaryCondition::homogeneous_dirichlet(domain),
            BcKind::Neumann => BoundaryCondition::Neumann,
            BcKind::WholeSpace => BoundaryCondition::WholeSpace,
        };
        // singleton quotients give a time scale for the first horizon
        let lam_single = (0..n)
            .map(|v| {
                let mut s = vec![false; n];
                s[v] = true;
                let c = Climb::new(&cuts, s);
                c.value()
            })
            .fold(f64::INFINITY, f64::min);
        let mut horizon = 1.0 / lam_single.max(1e-12);
        let opts = FlowOptions::default();
        let mut steps = 0u64;
        loop {
            if steps + STEPS_PER_ATTEMPT as u64 > budget {
                return Err(Error::NotReached(horizon));
            }
            let tau = horizon / STEPS_PER_ATTEMPT as f64;
            let traj = evolve(domain, &u0, &fbc, &StepSchedule::Uniform(tau), horizon, &opts)?;
            steps += traj.steps() as u64;
            if traj.reached_steady {
                let bracket = extinction_time(&traj, opts.steady_tol)?;
                let bracket = refine_extinction(&traj, &bracket, opts.steady_tol, &opts.solve)?;
                let profile = asymptotic_profile(&traj, &bracket)?;
                let mut w = profile.w;
                if !cuts.dirichlet {
                    w = w.sub(&domain.constant(domain.mean(&w)));
                }
                return finish(domain, bc, w, EstimateMethod::FlowProfile, steps);
            }
            horizon *= 2.0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{build_graph, make_domain, whole_space};
    use std::sync::Arc;

    fn path(n: usize) -> Arc<crate::space::MetricMeasureGraph> {
        let edges: Vec<_> = (0..n - 1).map(|i| (i, i + 1, 1.0)).collect();
        Arc::new(build_graph(&vec![1.0; n], &edges).unwrap())
    }

    #[test]
    fn path_neumann_halves() {
        let d = whole_space(path(4)).unwrap();
        let est = SubsetSearch.estimate(&d, BcKind::Neumann, 1 << 10, 0).unwrap();
        // S = first half: cut 1, ν(S)ν(Sᶜ)/ν = 1
        assert_eq!(est.lambda1_upper, 1.0);
        assert_eq!(est.method, EstimateMethod::SubsetEnumeration);
    }

    #[test]
    fn local_search_matches_enumeration_on_small_graphs() {
        let d = make_domain(path(8), &[1, 2, 3, 4, 5, 6]).unwrap();
        let full = SubsetSearch.estimate(&d, BcKind::Dirichlet, 1 << 10, 0).unwrap();
        let local = local_search(&d, BcKind::Dirichlet, &Cuts::new(&d, BcKind::Dirichlet), 1 << 12, 3)
            .unwrap();
        assert!((full.lambda1_upper - local.lambda1_upper).abs() < 1e-12);
    }

    #[test]
    fn budget_exceeded_reports_best() {
        let d = whole_space(path(40)).unwrap();
        match SubsetSearch.estimate(&d, BcKind::Neumann, 100, 0) {
            Err(Error::BudgetExceeded { best }) => assert!(best.lambda1_upper.is_finite()),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn flow_profile_is_an_upper_bound() {
        let d = whole_space(path(5)).unwrap();
        let exact = SubsetSearch.estimate(&d, BcKind::Neumann, 1 << 10, 0).unwrap();
        let flow = FlowProfile.estimate(&d, BcKind::Neumann, 10_000, 7).unwrap();
        assert!(flow.lambda1_upper >= exact.lambda1_upper - 1e-9);
    }

    #[test]
    fn registry_names() {
        let r = EstimatorRegistry::global();
        assert_eq!(r.default_name(), "subset-enumeration");
        assert!(r.contains("flow-profile"));
    }
}
