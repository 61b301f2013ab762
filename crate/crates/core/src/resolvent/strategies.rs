//! Dual solver strategies. Each one iterates on the packed dual and reports
//! progress to a [`Tracker`], which owns gap evaluation, polishing and the
//! stopping rule.

use std::sync::OnceLock;

use super::dual::{DualOperator, Tracker};
use crate::registry::Registry;

/// How often (in iterations) strategies hand their iterate to the tracker.
const CHECK_EVERY: usize = 10;

pub trait DualSolver: Send + Sync {
    fn name(&self) -> &'static str;
    fn description(&self) -> &'static str;
    /// Iterate from the feasible starting point `y0` until the tracker says stop.
    fn run(&self, op: &DualOperator<'_>, tracker: &mut Tracker<'_, '_>, y0: Vec<f64>);
}

pub type SolverRegistry = Registry<dyn DualSolver>;

impl SolverRegistry {
    pub fn with_builtin() -> Self {
        let mut r: SolverRegistry = Registry::new("fista");
        r.register("fista", Box::new(Fista { accelerate: true }))
            .register("projected-gradient", Box::new(Fista { accelerate: false }))
            .register("pdhg", Box::new(Pdhg));
        r
    }

    pub fn global() -> &'static SolverRegistry {
        static GLOBAL: OnceLock<SolverRegistry> = OnceLock::new();
        GLOBAL.get_or_init(SolverRegistry::with_builtin)
    }
}

/// Projected gradient on the dual with backtracking on the step `1/L`, and
/// optional Nesterov momentum restarted whenever the objective goes up.
pub struct Fista {
    pub accelerate: bool,
}

impl DualSolver for Fista {
    fn name(&self) -> &'static str {
        if self.accelerate {
            "fista"
        } else {
            "projected-gradient"
        }
    }

    fn description(&self) -> &'static str {
        if self.accelerate {
            "accelerated projected gradient with function-value restart"
        } else {
            "projected gradient with backtracking"
        }
    }

    fn run(&self, op: &DualOperator<'_>, tracker: &mut Tracker<'_, '_>, y0: Vec<f64>) {
        let m = op.dim();
        let n = op.num_vertices();
        if tracker.converged() || m == 0 {
            return;
        }
        let mut lip = op.lipschitz().max(f64::MIN_POSITIVE);
        let mut y = y0;
        let mut z = y.clone();
        let mut t = 1.0_f64;
        let mut u = vec![0.0; n];
        op.primal(&y, &mut u);
        let mut f_y = op.objective(&y, &u);
        let mut u_z = vec![0.0; n];
        let mut grad = vec![0.0; m];
        let mut y_new = vec![0.0; m];
        let mut u_new = vec![0.0; n];

        for k in 1..=tracker.max_iters() {
            op.primal(&z, &mut u_z);
            let f_z = op.objective(&z, &u_z);
            op.gradient(&u_z, &mut grad);
            let f_new = loop {
                for i in 0..m {
                    y_new[i] = z[i] - grad[i] / lip;
                }
                op.project(&mut y_new);
                op.primal(&y_new, &mut u_new);
                let f_new = op.objective(&y_new, &u_new);
                let mut lin = 0.0;
                let mut sq = 0.0;
                for i in 0..m {
                    let d = y_new[i] - z[i];
                    lin += grad[i] * d;
                    sq += d * d;
                }
                let model = f_z + lin + 0.5 * lip * sq;
                if f_new <= model + 1e-14 * (1.0 + f_z.abs()) {
                    break f_new;
                }
                lip *= 2.0;
            };

            if self.accelerate && f_new > f_y {
                // restart momentum; a plain step from y is monotone
                t = 1.0;
                z.copy_from_slice(&y);
            } else {
                let t_new = if self.accelerate {
                    0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt())
                } else {
                    1.0
                };
                let beta = (t - 1.0) / t_new;
                for i in 0..m {
                    z[i] = y_new[i] + beta * (y_new[i] - y[i]);
                }
                y.copy_from_slice(&y_new);
                f_y = f_new;
                t = t_new;
            }

            if k == 1 || k % CHECK_EVERY == 0 || k == tracker.max_iters() {
                if tracker.observe(k, &y) {
                    return;
                }
                if tracker.take_polish_improvement() {
                    y.copy_from_slice(tracker.best());
                    z.copy_from_slice(&y);
                    op.primal(&y, &mut u);
                    f_y = op.objective(&y, &u);
                    t = 1.0;
                }
            }
        }
    }
}

/// Primal–dual hybrid gradient on the saddle form
/// `min_u max_{|Y|≤λ} ½‖u − g‖²_ν − ⟨u, div₀Y⟩_ν + Σ_β w_β f Y_β`.
/// The certificate is always formed from the dual iterate.
pub struct Pdhg;

impl DualSolver for Pdhg {
    fn name(&self) -> &'static str {
        "pdhg"
    }

    fn description(&self) -> &'static str {
        "primal-dual hybrid gradient with extrapolation"
    }

    fn run(&self, op: &DualOperator<'_>, tracker: &mut Tracker<'_, '_>, y0: Vec<f64>) {
        let m = op.dim();
        let n = op.num_vertices();
        if tracker.converged() || m == 0 {
            return;
        }
        let lip = op.lipschitz().max(f64::MIN_POSITIVE);
        let step = 0.99 / lip.sqrt();
        let mut y = y0;
        let mut u = vec![0.0; n];
        op.primal(&y, &mut u);
        let mut ubar = u.clone();
        let mut grad = vec![0.0; m];
        let mut gdiv = vec![0.0; n];
        for k in 1..=tracker.max_iters() {
            op.gradient(&ubar, &mut grad);
            for i in 0..m {
                y[i] -= step * grad[i];
            }
            op.project(&mut y);
            op.primal(&y, &mut gdiv);
            let inv = 1.0 / step;
            for v in 0..n {
                let old = u[v];
                u[v] = (gdiv[v] + inv * old) / (1.0 + inv);
                ubar[v] = 2.0 * u[v] - old;
            }
            if k == 1 || k % CHECK_EVERY == 0 || k == tracker.max_iters() {
                if tracker.observe(k, &y) {
                    return;
                }
                if tracker.take_polish_improvement() {
                    y.copy_from_slice(tracker.best());
                    op.primal(&y, &mut u);
                    ubar.copy_from_slice(&u);
                }
            }
        }
    }
}
