//! Declarative experiments: a TOML spec in, a flow CSV and a JSON summary out.
//!
//! ```toml
//! name = "g2"
//! bc = "neumann"
//! tau = 0.1
//! T = 2.0
//!
//! [graph]
//! generator = "path:2"      # or file = "g2.mmg"
//!
//! [u0]
//! values = [1.0, -1.0]      # or file / constant / indicator / noise + seed
//!
//! [analysis]
//! extinction = true
//! profile = true
//! ```
//!
//! A batch file holds several specs as `[[experiment]]` tables.

use std::collections::HashSet;
use std::fs::File;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::format::{parse_graph_file, parse_vertex_field};
use super::generate::{generate, GraphKind};
use crate::asymptotics::{asymptotic_profile, check_ground_state, EstimatorRegistry};
use crate::calculus::{total_variation, BcKind, BoundaryCondition};
use crate::error::{Error, Result};
use crate::flow::{evolve, extinction_time, refine_extinction, ExtinctionBracket, FlowOptions, StepSchedule};
use crate::resolvent::SolveOptions;
use crate::space::{trace, BoundaryData, Domain, VertexField};

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub name: String,
    pub graph: GraphSource,
    #[serde(default = "default_bc")]
    pub bc: BcKind,
    pub u0: InitialData,
    #[serde(default)]
    pub f: Option<BoundarySource>,
    pub tau: f64,
    #[serde(rename = "T")]
    pub horizon: f64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default = "default_solver")]
    pub solver: String,
    /// Keep stepping after the steady state is reached.
    #[serde(default)]
    pub full_horizon: bool,
    #[serde(default)]
    pub analysis: Analysis,
    #[serde(default)]
    pub output: Output,
}

fn default_bc() -> BcKind {
    BcKind::Neumann
}
fn default_tol() -> f64 {
    crate::resolvent::DEFAULT_TOL
}
fn default_max_iters() -> usize {
    crate::resolvent::DEFAULT_MAX_ITERS
}
fn default_solver() -> String {
    "fista".into()
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSource {
    pub file: Option<PathBuf>,
    pub generator: Option<String>,
    #[serde(default = "one")]
    pub weight: f64,
    #[serde(default = "one")]
    pub measure: f64,
}

fn one() -> f64 {
    1.0
}

/// Exactly one of the sources must be given.
#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct InitialData {
    pub file: Option<PathBuf>,
    pub values: Option<Vec<f64>>,
    pub constant: Option<f64>,
    /// Global vertex indices set to 1; the rest are 0.
    pub indicator: Option<Vec<usize>>,
    /// Amplitude of uniform noise in `[-a, a]`; requires `seed`.
    pub noise: Option<f64>,
    pub seed: Option<u64>,
    /// Use the intensities of an image generator.
    #[serde(default)]
    pub image: bool,
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct BoundarySource {
    pub constant: Option<f64>,
    /// `f = trace(u₀)`.
    #[serde(default)]
    pub trace: bool,
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Analysis {
    #[serde(default)]
    pub extinction: bool,
    #[serde(default)]
    pub profile: bool,
    #[serde(default)]
    pub lambda1: bool,
    pub estimator: Option<String>,
    pub budget: Option<u64>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Output {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    #[serde(default = "yes")]
    pub flow_csv: bool,
}

impl Default for Output {
    fn default() -> Self {
        Output {
            dir: default_dir(),
            flow_csv: true,
        }
    }
}

fn default_dir() -> PathBuf {
    PathBuf::from(".")
}
fn yes() -> bool {
    true
}

#[derive(Deserialize)]
struct Batch {
    experiment: Vec<ExperimentSpec>,
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

/// Parses one spec, or a batch of `[[experiment]]` tables. Relative paths
/// are resolved against `base`.
pub fn parse_experiments(text: &str, base: &Path) -> Result<Vec<ExperimentSpec>> {
    let to_err = |e: toml::de::Error| invalid(format!("experiment spec: {e}"));
    let value: toml::Table = toml::from_str(text).map_err(to_err)?;
    let mut specs = if value.contains_key("experiment") {
        toml::from_str::<Batch>(text).map_err(to_err)?.experiment
    } else {
        vec![toml::from_str::<ExperimentSpec>(text).map_err(to_err)?]
    };
    let mut names = HashSet::new();
    for s in &mut specs {
        s.resolve_paths(base);
        s.validate()?;
        if !names.insert(s.name.clone()) {
            return Err(invalid(format!("duplicate experiment name `{}`", s.name)));
        }
    }
    Ok(specs)
}

impl ExperimentSpec {
    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(p) = self.graph.file.as_mut() {
            fix(p);
        }
        if let Some(p) = self.u0.file.as_mut() {
            fix(p);
        }
        if let Some(g) = self.graph.generator.as_mut() {
            if let Some(rest) = g.strip_prefix("image:") {
                let p = Path::new(rest);
                if p.is_relative() {
                    *g = format!("image:{}", base.join(p).display());
                }
            }
        }
        fix(&mut self.output.dir);
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return Err(invalid(format!("bad experiment name `{}`", self.name)));
        }
        for (what, x) in [("tau", self.tau), ("T", self.horizon), ("tol", self.tol)] {
            if !(x > 0.0) || !x.is_finite() {
                return Err(invalid(format!("{what} must be > 0, got {x}")));
            }
        }
        match (&self.graph.file, &self.graph.generator) {
            (Some(p), None) => {
                if !p.exists() {
                    return Err(invalid(format!("graph file {} does not exist", p.display())));
                }
            }
            (None, Some(g)) => {
                if let GraphKind::Image(p) = g.parse::<GraphKind>()? {
                    if !p.exists() {
                        return Err(invalid(format!("image {} does not exist", p.display())));
                    }
                }
            }
            _ => return Err(invalid("graph needs exactly one of `file` or `generator`")),
        }
        let u = &self.u0;
        let sources = [
            u.file.is_some(),
            u.values.is_some(),
            u.constant.is_some(),
            u.indicator.is_some(),
            u.noise.is_some(),
            u.image,
        ];
        if sources.iter().filter(|&&b| b).count() != 1 {
            return Err(invalid("u0 needs exactly one source"));
        }
        if u.noise.is_some() && u.seed.is_none() {
            return Err(invalid("u0 noise requires a seed"));
        }
        if let Some(p) = &u.file {
            if !p.exists() {
                return Err(invalid(format!("u0 file {} does not exist", p.display())));
            }
        }
        if let Some(f) = &self.f {
            if f.constant.is_some() == f.trace {
                return Err(invalid("f needs exactly one of `constant` or `trace`"));
            }
        }
        if !crate::resolvent::SolverRegistry::global().contains(&self.solver) {
            return Err(Error::UnknownStrategy(self.solver.clone()));
        }
        if let Some(e) = &self.analysis.estimator {
            if !EstimatorRegistry::global().contains(e) {
                return Err(Error::UnknownStrategy(e.clone()));
            }
        }
        Ok(())
    }
}

/// Uniform noise in `[-amplitude, amplitude]`, reproducible from `seed`.
pub fn noise_field(domain: &Domain, amplitude: f64, seed: u64) -> VertexField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..domain.len())
        .map(|_| amplitude * rng.gen_range(-1.0..=1.0))
        .collect()
}

/// Domain, boundary condition and initial datum described by a spec.
pub struct Setup {
    pub domain: Domain,
    pub bc: BoundaryCondition,
    pub u0: VertexField,
}

pub fn build_setup(spec: &ExperimentSpec) -> Result<Setup> {
    let (domain, file_f, image_u0) = match (&spec.graph.file, &spec.graph.generator) {
        (Some(p), _) => {
            let gf = parse_graph_file(p)?;
            let d = gf.domain()?;
            let f = gf.boundary_data(&d)?;
            (d, f, None)
        }
        (None, Some(g)) => {
            let gen = generate(&g.parse()?, spec.bc, spec.graph.weight, spec.graph.measure)?;
            (gen.domain, None, gen.u0)
        }
        (None, None) => return Err(invalid("graph source missing")),
    };
    let u = &spec.u0;
    let u0: VertexField = if let Some(p) = &u.file {
        parse_vertex_field(&std::fs::read_to_string(p)?, &domain)?
    } else if let Some(v) = &u.values {
        let v = VertexField::from(v.clone());
        domain.check_field(&v)?;
        v
    } else if let Some(c) = u.constant {
        domain.constant(c)
    } else if let Some(ind) = &u.indicator {
        let mut v = domain.zeros().into_vec();
        for &i in ind {
            let l = domain
                .local_index(i)
                .ok_or_else(|| invalid(format!("indicator vertex {i} is not interior")))?;
            v[l] = 1.0;
        }
        v.into()
    } else if let Some(a) = u.noise {
        noise_field(&domain, a, u.seed.expect("validated"))
    } else {
        image_u0.ok_or_else(|| invalid("u0 image requires an image generator"))?
    };
    let bc = match spec.bc {
        BcKind::Dirichlet => {
            let f = match &spec.f {
                Some(BoundarySource { constant: Some(c), .. }) => BoundaryData::constant(&domain, *c),
                Some(_) => trace(&domain, &u0)?,
                None => file_f.ok_or(Error::MissingBoundaryData)?,
            };
            BoundaryCondition::Dirichlet(f)
        }
        kind => BoundaryCondition::from_kind(kind, None)?,
    };
    bc.validate(&domain)?;
    Ok(Setup { domain, bc, u0 })
}

#[derive(Debug, Clone, Serialize)]
pub struct ProfileSummary {
    pub t_star: f64,
    pub t_ex: f64,
    pub norm: f64,
    pub initial_norm: f64,
    pub norm_bound_ok: bool,
    pub inclusion_residual: Option<f64>,
    pub rayleigh: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Lambda1Summary {
    pub upper: f64,
    pub method: crate::asymptotics::EstimateMethod,
    pub estimator: String,
    /// `‖u₀ − steady‖/λ̂₁`, a lower bound on the extinction-time bound.
    pub extinction_bound: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub name: String,
    pub bc: BcKind,
    pub vertices: usize,
    pub steps: usize,
    pub final_time: f64,
    pub reached_steady: bool,
    pub all_certified: bool,
    pub max_gap: f64,
    pub max_certificate_residual: f64,
    /// `|Σν u(T) − Σν u₀|` for flows without boundary.
    pub mass_drift: Option<f64>,
    pub extinction: Option<ExtinctionBracket>,
    pub profile: Option<ProfileSummary>,
    pub lambda1: Option<Lambda1Summary>,
    pub passed: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub summary: Summary,
    pub flow_csv: Option<PathBuf>,
    pub summary_json: PathBuf,
}

/// Runs one experiment and writes `<name>.flow.csv` and `<name>.summary.json`
/// into the output directory. A failing solve still writes the summary
/// (with `error` set) before the error is returned.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentOutcome> {
    spec.validate()?;
    std::fs::create_dir_all(&spec.output.dir)?;
    let summary_json = spec.output.dir.join(format!("{}.summary.json", spec.name));
    let mut summary = Summary {
        name: spec.name.clone(),
        bc: spec.bc,
        vertices: 0,
        steps: 0,
        final_time: 0.0,
        reached_steady: false,
        all_certified: false,
        max_gap: 0.0,
        max_certificate_residual: 0.0,
        mass_drift: None,
        extinction: None,
        profile: None,
        lambda1: None,
        passed: false,
        error: None,
    };
    match execute(spec, &mut summary) {
        Ok(flow_csv) => {
            write_json(&summary_json, &summary)?;
            Ok(ExperimentOutcome {
                summary,
                flow_csv,
                summary_json,
            })
        }
        Err(e) => {
            summary.error = Some(e.to_string());
            write_json(&summary_json, &summary)?;
            Err(e)
        }
    }
}

fn write_json(path: &Path, summary: &Summary) -> Result<()> {
    let mut f = File::create(path)?;
    serde_json::to_writer_pretty(&mut f, summary)?;
    writeln!(f)?;
    Ok(())
}

fn execute(spec: &ExperimentSpec, summary: &mut Summary) -> Result<Option<PathBuf>> {
    let Setup { domain, bc, u0 } = build_setup(spec)?;
    summary.vertices = domain.len();
    let opts = FlowOptions {
        solve: SolveOptions {
            tol: spec.tol,
            max_iters: spec.max_iters,
            solver: spec.solver.clone(),
            ..SolveOptions::default()
        },
        stop_at_steady: !spec.full_horizon,
        ..FlowOptions::default()
    };
    let traj = evolve(&domain, &u0, &bc, &StepSchedule::Uniform(spec.tau), spec.horizon, &opts)?;
    summary.steps = traj.steps();
    summary.final_time = *traj.times.last().unwrap_or(&0.0);
    summary.reached_steady = traj.reached_steady;
    summary.all_certified = traj.all_certified();
    summary.max_gap = traj.certificates.iter().map(|c| c.gap).fold(0.0, f64::max);
    summary.max_certificate_residual = traj
        .certificates
        .iter()
        .map(|c| c.condition_report.max_residual())
        .fold(0.0, f64::max);
    if !bc.is_dirichlet() {
        summary.mass_drift = Some((domain.mass(traj.last()) - domain.mass(&u0)).abs());
    }

    let flow_csv = if spec.output.flow_csv {
        let path = spec.output.dir.join(format!("{}.flow.csv", spec.name));
        write_flow_csv(&path, &traj)?;
        Some(path)
    } else {
        None
    };

    let a = &spec.analysis;
    let mut bracket = None;
    if a.extinction || a.profile {
        let b = extinction_time(&traj, opts.steady_tol)?;
        let b = refine_extinction(&traj, &b, opts.steady_tol, &opts.solve)?;
        summary.extinction = Some(b);
        bracket = Some(b);
    }
    let mut lambda1 = None;
    if a.lambda1 {
        let name = a.estimator.as_deref().unwrap_or(EstimatorRegistry::global().default_name());
        let est = EstimatorRegistry::global().get(name)?.estimate(
            &domain,
            bc.kind(),
            a.budget.unwrap_or(1 << 20),
            spec.u0.seed.unwrap_or(0),
        );
        let est = match est {
            Err(Error::BudgetExceeded { best }) => *best,
            other => other?,
        };
        let extinction_bound = traj
            .steady
            .as_ref()
            .filter(|_| est.lambda1_upper > 0.0)
            .map(|s| domain.l2(&u0.sub(s)) / est.lambda1_upper);
        lambda1 = Some(est.lambda1_upper);
        summary.lambda1 = Some(Lambda1Summary {
            upper: est.lambda1_upper,
            method: est.method,
            estimator: name.to_string(),
            extinction_bound,
        });
    }
    if a.profile {
        let b = bracket.expect("computed above");
        let p = asymptotic_profile(&traj, &b)?;
        let (inclusion_residual, rayleigh) = if p.t_ex > 0.0 && p.norm > 0.0 {
            let gs = check_ground_state(
                &domain,
                &p.w,
                p.t_ex,
                bc.kind(),
                lambda1.unwrap_or(f64::INFINITY),
                1e-6,
            )?;
            (Some(gs.inclusion_residual), gs.rayleigh)
        } else {
            (None, None)
        };
        summary.profile = Some(ProfileSummary {
            t_star: p.t_star,
            t_ex: p.t_ex,
            norm: p.norm,
            initial_norm: p.initial_norm,
            norm_bound_ok: p.norm_bound_ok,
            inclusion_residual,
            rayleigh,
        });
    }
    summary.passed = summary.all_certified
        && summary.profile.as_ref().map_or(true, |p| p.norm_bound_ok);
    Ok(flow_csv)
}

/// Long-format series: one row per (time, vertex). `v` and `gap` belong to
/// the step that produced the state and are empty at `t = 0`.
pub fn write_flow_csv(path: &Path, traj: &crate::flow::FlowTrajectory) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["t", "vertex", "u", "v", "tv", "mean", "l1", "l2", "linf", "gap"])?;
    let d = &traj.domain;
    let num = |x: f64| format!("{x:.16e}");
    for (n, u) in traj.states.iter().enumerate() {
        let cert = n.checked_sub(1).map(|k| &traj.certificates[k]);
        let t = num(traj.times[n]);
        let tv = num(total_variation(d, u, &traj.bc)?);
        let mean = num(d.mean(u));
        let (l1, l2, linf) = (num(d.l1(u)), num(d.l2(u)), num(d.linf(u)));
        let gap = cert.map(|c| num(c.gap)).unwrap_or_default();
        for (l, &v) in d.interior().iter().enumerate() {
            let vv = cert.map(|c| num(c.v[l])).unwrap_or_default();
            w.write_record([
                t.as_str(),
                &v.to_string(),
                &num(u[l]),
                &vv,
                &tv,
                &mean,
                &l1,
                &l2,
                &linf,
                &gap,
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}
