use std::io::IsTerminal;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use tvflow_core::asymptotics::{asymptotic_profile, check_ground_state, EstimatorRegistry};
use tvflow_core::calculus::{BcKind, BoundaryCondition};
use tvflow_core::flow::{evolve, extinction_time, refine_extinction, FlowOptions, StepSchedule};
use tvflow_core::io::{
    generate, graph_file_for, noise_field, parse_experiments, parse_graph_file, parse_vertex_field,
    run_experiment, write_edge_field, write_flow_csv, write_graph, write_vertex_field, GraphKind,
};
use tvflow_core::resolvent::{
    solve_resolvent_with, ResolventProblem, SolveOptions, SolverRegistry, DEFAULT_MAX_ITERS,
    DEFAULT_TOL,
};
use tvflow_core::selftest::run_selftest;
use tvflow_core::space::{trace, BoundaryData, Domain, VertexField};
use tvflow_core::Error;

/// Duality-certified total variation flow on weighted graphs.
#[derive(Parser, Debug)]
#[command(name = "tvflow", version, about)]
struct Cli {
    /// Seed for every randomized choice (noise data, local search)
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads for batch runs and subset enumeration; never changes results
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Only print errors and failed checks
    #[arg(long, short, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the implicit-Euler flow and report extinction
    Flow(FlowArgs),
    /// Solve one resolvent problem and print its certificate
    Resolvent(ResolventArgs),
    /// λ₁ estimate, extinction time and asymptotic profile
    Analyze(AnalyzeArgs),
    /// Write a generated graph file
    Gen(GenArgs),
    /// Run the built-in Gauss–Green and fixture checks
    Selftest,
    /// Run experiments from a TOML spec (single or `[[experiment]]` batch)
    Run {
        spec: PathBuf,
    },
    /// List registered dual solvers and λ₁ estimators
    List,
}

#[derive(Args, Debug)]
struct GraphArgs {
    /// Graph file (`mmgraph` format)
    #[arg(long, conflicts_with = "gen", required_unless_present = "gen")]
    graph: Option<PathBuf>,
    /// Generator: path:N, cycle:N, grid2d:RxC, image:FILE.pgm
    #[arg(long)]
    gen: Option<String>,
    /// Boundary condition: neumann, dirichlet or whole
    #[arg(long, default_value = "neumann")]
    bc: BcKind,
    /// Dirichlet data: a constant, or `trace` for the trace of u0
    #[arg(long)]
    f: Option<String>,
    /// Edge weight for generated graphs
    #[arg(long, default_value_t = 1.0)]
    weight: f64,
    /// Vertex measure for generated graphs
    #[arg(long, default_value_t = 1.0)]
    measure: f64,
}

#[derive(Args, Debug)]
struct SolverArgs {
    /// Dual solver strategy
    #[arg(long, default_value = "fista")]
    solver: String,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_ITERS)]
    max_iters: usize,
}

impl SolverArgs {
    fn options(&self) -> SolveOptions {
        SolveOptions {
            tol: self.tol,
            max_iters: self.max_iters,
            solver: self.solver.clone(),
            ..SolveOptions::default()
        }
    }
}

#[derive(Args, Debug)]
struct DataArgs {
    /// Initial datum file (`u <vertex> <value>` lines)
    #[arg(long)]
    u0: Option<PathBuf>,
    /// Uniform noise in [-A, A] as initial datum, drawn with --seed
    #[arg(long, conflicts_with = "u0")]
    u0_noise: Option<f64>,
}

#[derive(Args, Debug)]
struct FlowArgs {
    #[command(flatten)]
    graph: GraphArgs,
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long)]
    tau: f64,
    /// Time horizon
    #[arg(long = "T")]
    horizon: f64,
    /// Keep stepping after the steady state is reached
    #[arg(long)]
    full_horizon: bool,
    /// Flow series CSV
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ResolventArgs {
    #[command(flatten)]
    graph: GraphArgs,
    /// Datum `g` (`u <vertex> <value>` lines)
    #[arg(long)]
    g: PathBuf,
    #[arg(long)]
    lambda: f64,
    #[command(flatten)]
    solver: SolverArgs,
    /// Write the field X = Y/λ as `x i j value` lines
    #[arg(long)]
    dump_certificate: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct AnalyzeArgs {
    #[command(flatten)]
    graph: GraphArgs,
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    solver: SolverArgs,
    /// Estimate λ₁ from witnesses
    #[arg(long)]
    lambda1: bool,
    /// Extinction bracket of the flow from u0
    #[arg(long)]
    extinction: bool,
    /// Asymptotic profile and ground-state checks (implies --extinction)
    #[arg(long)]
    profile: bool,
    /// Evaluation budget for the λ₁ estimator
    #[arg(long, default_value_t = 1 << 20)]
    budget: u64,
    #[arg(long, default_value = "subset-enumeration")]
    estimator: String,
    #[arg(long, default_value_t = 0.01)]
    tau: f64,
    /// Time horizon for the flow
    #[arg(long = "T", default_value_t = 100.0)]
    horizon: f64,
}

#[derive(Args, Debug)]
struct GenArgs {
    /// path:N, cycle:N, grid2d:RxC, image:FILE.pgm
    kind: String,
    #[arg(long, default_value = "neumann")]
    bc: BcKind,
    #[arg(long, default_value_t = 1.0)]
    weight: f64,
    #[arg(long, default_value_t = 1.0)]
    measure: f64,
    /// Boundary value written for every boundary element (Dirichlet)
    #[arg(long)]
    f: Option<f64>,
    /// Graph file to write; stdout when absent
    #[arg(long)]
    out: Option<PathBuf>,
    /// Where to write the image intensities as u0
    #[arg(long)]
    u0_out: Option<PathBuf>,
}

struct Ui {
    quiet: bool,
    color: bool,
}

impl Ui {
    fn info(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            println!("{}", msg.as_ref());
        }
    }

    fn check(&self, name: &str, passed: bool, detail: &str) {
        if self.quiet && passed {
            return;
        }
        let tag = match (passed, self.color) {
            (true, true) => "\x1b[32mPASS\x1b[0m",
            (false, true) => "\x1b[31mFAIL\x1b[0m",
            (true, false) => "PASS",
            (false, false) => "FAIL",
        };
        println!("{tag} {name}: {detail}");
    }
}

struct Loaded {
    domain: Domain,
    bc: BoundaryCondition,
    u0: Option<VertexField>,
}

fn load(graph: &GraphArgs, data: Option<&DataArgs>, seed: u64) -> Result<Loaded> {
    let (domain, file_f, image_u0) = match (&graph.graph, &graph.gen) {
        (Some(p), _) => {
            let gf = parse_graph_file(p).with_context(|| format!("reading {}", p.display()))?;
            let d = gf.domain()?;
            let f = gf.boundary_data(&d)?;
            (d, f, None)
        }
        (None, Some(kind)) => {
            let g = generate(&kind.parse()?, graph.bc, graph.weight, graph.measure)?;
            (g.domain, None, g.u0)
        }
        (None, None) => bail!("one of --graph or --gen is required"),
    };
    let u0 = match data {
        Some(DataArgs { u0: Some(p), .. }) => Some(
            parse_vertex_field(&std::fs::read_to_string(p)?, &domain)
                .with_context(|| format!("reading {}", p.display()))?,
        ),
        Some(DataArgs {
            u0_noise: Some(a), ..
        }) => Some(noise_field(&domain, *a, seed)),
        _ => image_u0,
    };
    let bc = match graph.bc {
        BcKind::Dirichlet => {
            let f = match graph.f.as_deref() {
                Some("trace") => {
                    let u = u0.as_ref().context("--f trace needs an initial datum")?;
                    trace(&domain, u)?
                }
                Some(c) => BoundaryData::constant(
                    &domain,
                    c.parse().with_context(|| format!("--f expects a number or `trace`, got `{c}`"))?,
                ),
                None => file_f.context("Dirichlet problems need --f or `f` lines in the graph file")?,
            };
            BoundaryCondition::Dirichlet(f)
        }
        kind => BoundaryCondition::from_kind(kind, None)?,
    };
    bc.validate(&domain)?;
    Ok(Loaded { domain, bc, u0 })
}

fn flow(args: &FlowArgs, seed: u64, ui: &Ui) -> Result<bool> {
    let Loaded { domain, bc, u0 } = load(&args.graph, Some(&args.data), seed)?;
    let u0 = u0.context("flow needs --u0, --u0-noise or an image generator")?;
    let opts = FlowOptions {
        solve: args.solver.options(),
        stop_at_steady: !args.full_horizon,
        ..FlowOptions::default()
    };
    let traj = evolve(&domain, &u0, &bc, &StepSchedule::Uniform(args.tau), args.horizon, &opts)?;
    if let Some(out) = &args.out {
        write_flow_csv(out, &traj)?;
        ui.info(format!("wrote {}", out.display()));
    }
    ui.info(format!(
        "steps {}  t_end {}  steady {}",
        traj.steps(),
        traj.times.last().unwrap_or(&0.0),
        traj.reached_steady
    ));
    if let Ok(b) = extinction_time(&traj, opts.steady_tol) {
        ui.info(format!("extinction in [{}, {}]", b.lo, b.hi));
    }
    let worst = traj
        .certificates
        .iter()
        .map(|c| c.condition_report.max_residual())
        .fold(0.0, f64::max);
    let ok = traj.all_certified();
    ui.check("certificates", ok, &format!("max residual {worst:.3e}"));
    Ok(ok)
}

fn resolvent(args: &ResolventArgs, ui: &Ui) -> Result<bool> {
    let Loaded { domain, bc, .. } = load(&args.graph, None, 0)?;
    let g = parse_vertex_field(&std::fs::read_to_string(&args.g)?, &domain)
        .with_context(|| format!("reading {}", args.g.display()))?;
    let problem = ResolventProblem::new(&domain, g, args.lambda, &bc)?;
    let cert = match solve_resolvent_with(&problem, &args.solver.options(), None) {
        Ok(c) => c,
        Err(Error::NotConverged { gap, iterations, .. }) => {
            ui.check("converged", false, &format!("gap {gap:.3e} after {iterations} iterations"));
            return Ok(false);
        }
        Err(e) => return Err(e.into()),
    };
    if !ui.quiet {
        print!("{}", write_vertex_field(&domain, &cert.u));
    }
    ui.info(format!(
        "primal {:.16e}  dual {:.16e}  gap {:.3e}  iterations {}  solver {}",
        cert.primal, cert.dual, cert.gap, cert.iterations, cert.solver
    ));
    if let Some(path) = &args.dump_certificate {
        std::fs::write(path, write_edge_field(&domain, &cert.field()))?;
        ui.info(format!("wrote {}", path.display()));
    }
    let r = &cert.condition_report;
    ui.check(
        "certificate",
        r.passed,
        &format!(
            "div {:.2e}  pairing {:.2e}  boundary {:.2e}  sup {:.2e}",
            r.divergence_residual, r.pairing_saturation, r.boundary_residual, r.sup_norm_excess
        ),
    );
    Ok(r.passed)
}

fn analyze(args: &AnalyzeArgs, seed: u64, ui: &Ui) -> Result<bool> {
    let Loaded { domain, bc, u0 } = load(&args.graph, Some(&args.data), seed)?;
    let mut ok = true;
    let mut lambda1 = None;
    println!("key,value");
    if args.lambda1 {
        let est = EstimatorRegistry::global()
            .get(&args.estimator)?
            .estimate(&domain, bc.kind(), args.budget, seed);
        let est = match est {
            Err(Error::BudgetExceeded { best }) => {
                println!("lambda1_budget_exceeded,true");
                *best
            }
            other => other?,
        };
        println!("lambda1_upper,{:.16e}", est.lambda1_upper);
        println!("lambda1_method,{}", est.method);
        let c = if est.lambda1_upper > 0.0 { 1.0 / est.lambda1_upper } else { f64::INFINITY };
        println!("functional_constant_lower,{c:.16e}");
        lambda1 = Some(est.lambda1_upper);
    }
    if args.extinction || args.profile {
        let u0 = u0.context("--extinction/--profile need --u0 or --u0-noise")?;
        let opts = FlowOptions {
            solve: args.solver.options(),
            ..FlowOptions::default()
        };
        let traj = evolve(&domain, &u0, &bc, &StepSchedule::Uniform(args.tau), args.horizon, &opts)?;
        let b = extinction_time(&traj, opts.steady_tol)?;
        let b = refine_extinction(&traj, &b, opts.steady_tol, &opts.solve)?;
        println!("extinction_lo,{:.16e}", b.lo);
        println!("extinction_hi,{:.16e}", b.hi);
        println!("extinction_estimate,{:.16e}", b.estimate());
        if let (Some(l), Some(s)) = (lambda1, traj.steady.as_ref()) {
            if l > 0.0 {
                println!("extinction_bound_from_estimate,{:.16e}", domain.l2(&u0.sub(s)) / l);
            }
        }
        ok &= traj.all_certified();
        if args.profile {
            let p = asymptotic_profile(&traj, &b)?;
            println!("profile_t_star,{:.16e}", p.t_star);
            println!("profile_norm,{:.16e}", p.norm);
            println!("profile_norm_bound_ok,{}", p.norm_bound_ok);
            for (v, x) in domain.interior().iter().zip(p.w.iter()) {
                println!("profile_{v},{x:.16e}");
            }
            ok &= p.norm_bound_ok;
            if p.t_ex > 0.0 && p.norm > 0.0 {
                let gs = check_ground_state(
                    &domain,
                    &p.w,
                    p.t_ex,
                    bc.kind(),
                    lambda1.unwrap_or(f64::INFINITY),
                    1e-6,
                )?;
                println!("inclusion_residual,{:.16e}", gs.inclusion_residual);
                if let Some(r) = gs.rayleigh {
                    println!("profile_rayleigh,{r:.16e}");
                }
                if lambda1.is_some() {
                    println!("ground_state,{}", gs.ground_state);
                }
                ui.check("eigen-inclusion", gs.inclusion_passed, &format!("{:.3e}", gs.inclusion_residual));
            }
        }
        ui.check("certificates", traj.all_certified(), &format!("{} steps", traj.steps()));
    }
    Ok(ok)
}


fn gen(args: &GenArgs, ui: &Ui) -> Result<bool> {
    let kind: GraphKind = args.kind.parse()?;
    let g = generate(&kind, args.bc, args.weight, args.measure)?;
    let f = args.f.map(|c| BoundaryData::constant(&g.domain, c));
    let text = write_graph(&graph_file_for(&g.domain, f.as_ref()));
    match &args.out {
        Some(p) => {
            std::fs::write(p, text)?;
            ui.info(format!(
                "wrote {} ({} vertices, {} interior, {} boundary elements)",
                p.display(),
                g.graph.num_vertices(),
                g.domain.len(),
                g.domain.boundary().len()
            ));
        }
        None => print!("{text}"),
    }
    if let (Some(path), Some(u0)) = (&args.u0_out, &g.u0) {
        std::fs::write(path, write_vertex_field(&g.domain, u0))?;
        ui.info(format!("wrote {}", path.display()));
    }
    Ok(true)
}

fn run(spec: &Path, ui: &Ui) -> Result<bool> {
    let text = std::fs::read_to_string(spec).with_context(|| format!("reading {}", spec.display()))?;
    let base = spec.parent().unwrap_or(Path::new("."));
    let specs = parse_experiments(&text, base)?;
    let outcomes: Vec<_> = specs.par_iter().map(|s| (s.name.clone(), run_experiment(s))).collect();
    let mut ok = true;
    for (name, outcome) in outcomes {
        match outcome {
            Ok(o) => {
                let s = &o.summary;
                let ext = s
                    .extinction
                    .map(|b| format!("  T_ex in [{}, {}]", b.lo, b.hi))
                    .unwrap_or_default();
                ui.check(&name, s.passed, &format!("{} steps{ext}  -> {}", s.steps, o.summary_json.display()));
                ok &= s.passed;
            }
            Err(e) => {
                ui.check(&name, false, &e.to_string());
                ok = false;
            }
        }
    }
    Ok(ok)
}

fn list() {
    let solvers = SolverRegistry::global();
    println!("dual solvers (default {}):", solvers.default_name());
    for name in solvers.names() {
        println!("  {name:20} {}", solvers.get(name).map(|s| s.description()).unwrap_or(""));
    }
    let est = EstimatorRegistry::global();
    println!("lambda1 estimators (default {}):", est.default_name());
    for name in est.names() {
        println!("  {name:20} {}", est.get(name).map(|s| s.description()).unwrap_or(""));
    }
}

fn main() -> Result<ExitCode> {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    let ui = Ui {
        quiet: cli.quiet,
        color: std::env::var_os("TVFLOW_NO_COLOR").is_none() && std::io::stdout().is_terminal(),
    };
    let ok = match &cli.command {
        Command::Flow(a) => flow(a, cli.seed, &ui)?,
        Command::Resolvent(a) => resolvent(a, &ui)?,
        Command::Analyze(a) => analyze(a, cli.seed, &ui)?,
        Command::Gen(a) => gen(a, &ui)?,
        Command::Selftest => {
            let r = run_selftest();
            for c in &r.checks {
                ui.check(&c.name, c.passed, &c.detail);
            }
            r.passed()
        }
        Command::Run { spec } => run(spec, &ui)?,
        Command::List => {
            list();
            true
        }
    };
    Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(2) })
}
