//! The dual problem of one resolvent step, in packed coordinates.
//!
//! Unknowns are the dual field `Y` on interior edges (canonical orientation)
//! followed, for Dirichlet problems only, by `Y` on boundary elements. For
//! Neumann and whole-space problems the boundary flux is fixed at zero.
//!
//! Strategies minimize `F(Y) = ½‖g + div₀Y‖²_ν − Σ_β w_β f(β) Y_β` over the box
//! `|Y| ≤ λ`; the dual value is `D(Y) = ½‖g‖²_ν − F(Y)`.

use crate::calculus::{EdgeField, FieldScope};
use crate::space::{Domain, UnionFind};

/// Packed dual operator for a fixed datum, step and boundary condition.
pub struct DualOperator<'a> {
    domain: &'a Domain,
    g: &'a [f64],
    f: Option<&'a [f64]>,
    lambda: f64,
    n_int: usize,
    /// Per vertex: (packed index, +1 if the vertex is the tail / interior end).
    incidence: Vec<Vec<(usize, f64)>>,
    weights: Vec<f64>,
}

impl<'a> DualOperator<'a> {
    pub fn new(domain: &'a Domain, g: &'a [f64], f: Option<&'a [f64]>, lambda: f64) -> Self {
        let n_int = domain.edges().len();
        let mut incidence = vec![Vec::new(); domain.len()];
        let mut weights = Vec::with_capacity(n_int + domain.boundary().len());
        for (i, e) in domain.edges().iter().enumerate() {
            incidence[e.tail].push((i, 1.0));
            incidence[e.head].push((i, -1.0));
            weights.push(e.weight);
        }
        if f.is_some() {
            for (k, b) in domain.boundary().iter().enumerate() {
                incidence[b.local].push((n_int + k, 1.0));
                weights.push(b.weight);
            }
        }
        DualOperator {
            domain,
            g,
            f,
            lambda,
            n_int,
            incidence,
            weights,
        }
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn num_vertices(&self) -> usize {
        self.g.len()
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    fn is_boundary(&self, k: usize) -> bool {
        k >= self.n_int
    }

    /// `ν(v) div₀Y(v)` (the unnormalized flux out of each vertex).
    fn flux(&self, y: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|x| *x = 0.0);
        for (i, e) in self.domain.edges().iter().enumerate() {
            let q = e.weight * y[i];
            out[e.tail] += q;
            out[e.head] -= q;
        }
        if self.f.is_some() {
            for (k, b) in self.domain.boundary().iter().enumerate() {
                out[b.local] += b.weight * y[self.n_int + k];
            }
        }
    }

    /// `u = g + div₀Y`.
    pub fn primal(&self, y: &[f64], u: &mut [f64]) {
        self.flux(y, u);
        for ((x, m), g) in u.iter_mut().zip(self.domain.measures()).zip(self.g) {
            *x = g + *x / m;
        }
    }

    /// Gradient of `F` at the `Y` whose primal is `u`.
    pub fn gradient(&self, u: &[f64], grad: &mut [f64]) {
        for (i, e) in self.domain.edges().iter().enumerate() {
            grad[i] = -e.weight * (u[e.head] - u[e.tail]);
        }
        if let Some(f) = self.f {
            for (k, b) in self.domain.boundary().iter().enumerate() {
                grad[self.n_int + k] = b.weight * (u[b.local] - f[k]);
            }
        }
    }

    /// `F(Y)` given `Y` and its primal `u`.
    pub fn objective(&self, y: &[f64], u: &[f64]) -> f64 {
        let quad = 0.5 * dot_weighted(self.domain.measures(), u, u);
        let lin = match self.f {
            Some(f) => self
                .domain
                .boundary()
                .iter()
                .enumerate()
                .map(|(k, b)| b.weight * f[k] * y[self.n_int + k])
                .sum(),
            None => 0.0,
        };
        quad - lin
    }

    pub fn dual_value(&self, y: &[f64], u: &[f64]) -> f64 {
        0.5 * dot_weighted(self.domain.measures(), self.g, self.g) - self.objective(y, u)
    }

    /// `λ TV(u) + ½‖u − g‖²_ν`.
    pub fn primal_value(&self, u: &[f64]) -> f64 {
        let mut tv: f64 = self
            .domain
            .edges()
            .iter()
            .map(|e| e.weight * (u[e.head] - u[e.tail]).abs())
            .sum();
        if let Some(f) = self.f {
            tv += self
                .domain
                .boundary()
                .iter()
                .enumerate()
                .map(|(k, b)| b.weight * (u[b.local] - f[k]).abs())
                .sum::<f64>();
        }
        let fit: f64 = self
            .domain
            .measures()
            .iter()
            .zip(u.iter().zip(self.g))
            .map(|(m, (a, b))| m * (a - b) * (a - b))
            .sum();
        self.lambda * tv + 0.5 * fit
    }

    /// Duality gap at `(u, Y)` for `u = g + div₀Y`, accumulated as a sum of
    /// nonnegative per-edge terms so that it carries no cancellation error.
    pub fn gap(&self, y: &[f64], u: &[f64]) -> f64 {
        let lam = self.lambda;
        let mut gap = 0.0;
        for (i, e) in self.domain.edges().iter().enumerate() {
            let du = u[e.head] - u[e.tail];
            gap += e.weight * (lam * du.abs() - y[i] * du);
        }
        if let Some(f) = self.f {
            for (k, b) in self.domain.boundary().iter().enumerate() {
                let r = u[b.local] - f[k];
                gap += b.weight * (lam * r.abs() + r * y[self.n_int + k]);
            }
        }
        gap.max(0.0)
    }

    pub fn project(&self, y: &mut [f64]) {
        let lam = self.lambda;
        for x in y.iter_mut() {
            *x = x.clamp(-lam, lam);
        }
    }

    /// Upper estimate of `‖N^{1/2} div₀‖²` by 50 power iterations on the normal
    /// operator, inflated by 1%.
    pub fn lipschitz(&self) -> f64 {
        let m = self.dim();
        if m == 0 {
            return 0.0;
        }
        // deterministic, non-degenerate start vector
        let mut y: Vec<f64> = (0..m)
            .map(|i| 0.5 + ((i as u64 * 2_654_435_761) % 1000) as f64 / 1000.0)
            .collect();
        normalize(&mut y);
        let mut z = vec![0.0; self.num_vertices()];
        let mut w = vec![0.0; m];
        let mut est = 0.0;
        for _ in 0..50 {
            self.normal_op(&y, &mut z, &mut w);
            est = norm(&w);
            if est == 0.0 {
                break;
            }
            y.iter_mut().zip(&w).for_each(|(a, b)| *a = b / est);
        }
        est * 1.01
    }

    fn normal_op(&self, y: &[f64], z: &mut [f64], out: &mut [f64]) {
        self.flux(y, z);
        for (x, m) in z.iter_mut().zip(self.domain.measures()) {
            *x /= m;
        }
        for (i, e) in self.domain.edges().iter().enumerate() {
            out[i] = -e.weight * (z[e.head] - z[e.tail]);
        }
        if self.f.is_some() {
            for (k, b) in self.domain.boundary().iter().enumerate() {
                out[self.n_int + k] = b.weight * z[b.local];
            }
        }
    }

    pub fn to_edge_field(&self, y: &[f64]) -> EdgeField {
        let mut x = EdgeField::zeros(self.domain, FieldScope::InteriorAndBoundary);
        x.interior.copy_from_slice(&y[..self.n_int]);
        if self.f.is_some() {
            x.boundary.copy_from_slice(&y[self.n_int..]);
        }
        x
    }

    pub fn from_edge_field(&self, x: &EdgeField) -> Vec<f64> {
        let mut y = x.interior.clone();
        if self.f.is_some() {
            y.extend_from_slice(&x.boundary);
        }
        y
    }

    /// Active-set reconstruction of an exact optimum.
    ///
    /// Entries with `|Y| ≥ λ(1 − delta)` are taken as saturated at `±λ`. The
    /// remaining interior edges join vertices into clusters on which `u` is
    /// constant; a cluster touching an unsaturated boundary element is pinned
    /// to its boundary value, any other cluster takes the value fixed by mass
    /// balance. Unsaturated fluxes are then recovered exactly on a spanning
    /// tree of each cluster. Returns `None` when the guessed active set is
    /// inconsistent or the recovered fluxes leave the box.
    pub fn polish(&self, y: &[f64], delta: f64) -> Option<Vec<f64>> {
        let n = self.num_vertices();
        let lam = self.lambda;
        let thr = lam * (1.0 - delta);
        let saturated: Vec<bool> = y.iter().map(|v| v.abs() >= thr).collect();

        let mut uf = UnionFind::new(n);
        for (i, e) in self.domain.edges().iter().enumerate() {
            if !saturated[i] {
                uf.union(e.tail, e.head);
            }
        }
        let root: Vec<usize> = (0..n).map(|v| uf.find(v)).collect();

        let mut out = y.to_vec();
        for (k, s) in saturated.iter().enumerate() {
            if *s {
                out[k] = lam.copysign(y[k]);
            } else {
                out[k] = y[k].clamp(-lam, lam);
            }
        }

        // pinned values from free boundary elements
        let mut pin: Vec<Option<f64>> = vec![None; n];
        if let Some(f) = self.f {
            for (k, b) in self.domain.boundary().iter().enumerate() {
                if !saturated[self.n_int + k] {
                    let r = root[b.local];
                    match pin[r] {
                        None => pin[r] = Some(f[k]),
                        Some(p) if p != f[k] => return None,
                        Some(_) => {}
                    }
                }
            }
        }

        // mass balance with saturated fluxes only
        let mut sat_only = vec![0.0; y.len()];
        for k in 0..y.len() {
            if saturated[k] {
                sat_only[k] = out[k];
            }
        }
        let mut sat_flux = vec![0.0; n];
        self.flux(&sat_only, &mut sat_flux);
        let meas = self.domain.measures();
        let mut c_mass = vec![0.0; n];
        let mut c_meas = vec![0.0; n];
        for v in 0..n {
            c_mass[root[v]] += meas[v] * self.g[v] + sat_flux[v];
            c_meas[root[v]] += meas[v];
        }
        let u: Vec<f64> = (0..n)
            .map(|v| {
                let r = root[v];
                pin[r].unwrap_or(c_mass[r] / c_meas[r])
            })
            .collect();
        let required: Vec<f64> = (0..n).map(|v| meas[v] * (u[v] - self.g[v])).collect();

        // spanning forest by BFS; `parent[v]` is the packed index of the tree
        // entry connecting v towards its root (or to the ground for pinned
        // clusters).
        const NONE: usize = usize::MAX;
        let mut parent = vec![NONE; n];
        let mut visited = vec![false; n];
        let mut order = Vec::with_capacity(n);
        let mut queue = std::collections::VecDeque::new();
        for start in 0..n {
            let r = root[start];
            if visited[start] {
                continue;
            }
            if pin[r].is_some() {
                // seed from every vertex of the cluster holding a free boundary element
                for v in start..n {
                    if root[v] != r || visited[v] {
                        continue;
                    }
                    if let Some(&(k, _)) = self.incidence[v]
                        .iter()
                        .find(|(k, _)| self.is_boundary(*k) && !saturated[*k])
                    {
                        visited[v] = true;
                        parent[v] = k;
                        queue.push_back(v);
                    }
                }
            } else {
                visited[start] = true;
                queue.push_back(start);
            }
            while let Some(v) = queue.pop_front() {
                order.push(v);
                for &(k, _) in &self.incidence[v] {
                    if self.is_boundary(k) || saturated[k] {
                        continue;
                    }
                    let e = self.domain.edges()[k];
                    let other = if e.tail == v { e.head } else { e.tail };
                    if !visited[other] {
                        visited[other] = true;
                        parent[other] = k;
                        queue.push_back(other);
                    }
                }
            }
        }

        let slack = lam * (1.0 + 1e-9);
        for &v in order.iter().rev() {
            let pk = parent[v];
            if pk == NONE {
                continue;
            }
            let mut known = 0.0;
            let mut sign_parent = 0.0;
            for &(k, s) in &self.incidence[v] {
                if k == pk {
                    sign_parent = s;
                } else {
                    known += s * self.weights[k] * out[k];
                }
            }
            let val = (required[v] - known) / (sign_parent * self.weights[pk]);
            if !val.is_finite() || val.abs() > slack {
                return None;
            }
            out[pk] = val.clamp(-lam, lam);
        }
        Some(out)
    }
}

/// Gap bookkeeping shared by all strategies: periodic gap evaluation, polish
/// attempts, best-so-far tracking and the stopping test.
pub struct Tracker<'o, 'a> {
    op: &'o DualOperator<'a>,
    tol: f64,
    max_iters: usize,
    best_y: Vec<f64>,
    best_gap: f64,
    best_primal: f64,
    improved_by_polish: bool,
    iterations: usize,
    u_buf: Vec<f64>,
}

impl<'o, 'a> Tracker<'o, 'a> {
    pub fn new(op: &'o DualOperator<'a>, tol: f64, max_iters: usize, y0: &[f64]) -> Self {
        let mut t = Tracker {
            op,
            tol,
            max_iters,
            best_y: y0.to_vec(),
            best_gap: f64::INFINITY,
            best_primal: f64::INFINITY,
            improved_by_polish: false,
            iterations: 0,
            u_buf: vec![0.0; op.num_vertices()],
        };
        t.evaluate(y0);
        t
    }

    pub fn max_iters(&self) -> usize {
        self.max_iters
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn best(&self) -> &[f64] {
        &self.best_y
    }

    pub fn best_gap(&self) -> f64 {
        self.best_gap
    }

    pub fn converged(&self) -> bool {
        self.best_gap <= self.tol * (1.0 + self.best_primal.abs())
    }

    /// True once, after a polish attempt produced a new best point; strategies
    /// should then restart from [`Tracker::best`].
    pub fn take_polish_improvement(&mut self) -> bool {
        std::mem::take(&mut self.improved_by_polish)
    }

    fn evaluate(&mut self, y: &[f64]) -> bool {
        self.op.primal(y, &mut self.u_buf);
        let gap = self.op.gap(y, &self.u_buf);
        if gap < self.best_gap {
            self.best_gap = gap;
            self.best_primal = self.op.primal_value(&self.u_buf);
            self.best_y.copy_from_slice(y);
            true
        } else {
            false
        }
    }

    /// Records that `iteration` produced `y`; returns true when the solve may stop.
    pub fn observe(&mut self, iteration: usize, y: &[f64]) -> bool {
        self.iterations = iteration;
        self.evaluate(y);
        if !self.converged() {
            for delta in [1e-3, 1e-6, 1e-9] {
                if let Some(p) = self.op.polish(y, delta) {
                    if self.evaluate(&p) {
                        self.improved_by_polish = true;
                    }
                    if self.converged() {
                        break;
                    }
                }
            }
        }
        self.converged() || iteration >= self.max_iters
    }
}

fn dot_weighted(m: &[f64], a: &[f64], b: &[f64]) -> f64 {
    m.iter().zip(a.iter().zip(b)).map(|(w, (x, y))| w * x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn normalize(a: &mut [f64]) {
    let n = norm(a);
    if n > 0.0 {
        a.iter_mut().for_each(|x| *x /= n);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{build_graph, make_domain, whole_space};
    use std::sync::Arc;

    #[test]
    fn lipschitz_bounds_normal_operator() {
        // path of 4 with unit data: ‖N^{1/2} div‖² = largest Laplacian eigenvalue
        let g = Arc::new(
            build_graph(&[1.0; 4], &[(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0)]).unwrap(),
        );
        let d = whole_space(g).unwrap();
        let data = [0.0; 4];
        let op = DualOperator::new(&d, &data, None, 1.0);
        let exact = 2.0 + 2.0_f64.sqrt();
        let l = op.lipschitz();
        assert!(l >= exact && l <= exact * 1.02, "{l}");
    }

    #[test]
    fn gap_formula_matches_primal_minus_dual() {
        let g = Arc::new(
            build_graph(&[1.0, 2.0, 0.5], &[(0, 1, 1.5), (1, 2, 0.7), (0, 2, 2.0)]).unwrap(),
        );
        let d = make_domain(g, &[0, 1]).unwrap();
        let data = [1.0, -0.5];
        let f = [0.3, -1.0];
        let op = DualOperator::new(&d, &data, Some(&f), 0.4);
        let y = [0.1, -0.3, 0.25];
        let mut u = [0.0; 2];
        op.primal(&y, &mut u);
        let direct = op.primal_value(&u) - op.dual_value(&y, &u);
        assert!((direct - op.gap(&y, &u)).abs() < 1e-13);
    }

    #[test]
    fn polish_recovers_two_point_optimum() {
        let g = Arc::new(build_graph(&[1.0, 1.0], &[(0, 1, 1.0)]).unwrap());
        let d = whole_space(g).unwrap();
        let data = [3.0, 1.0];
        let op = DualOperator::new(&d, &data, None, 0.5);
        let p = op.polish(&[-0.4999999], 1e-3).unwrap();
        assert_eq!(p, vec![-0.5]);
        let data = [2.0, 1.0];
        let op = DualOperator::new(&d, &data, None, 1.0);
        let p = op.polish(&[-0.49], 1e-3).unwrap();
        let mut u = [0.0; 2];
        op.primal(&p, &mut u);
        assert_eq!(u, [1.5, 1.5]);
    }
}
