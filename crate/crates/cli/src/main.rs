//! `khess`: batch front end for the k-Hessian toolkit.

mod config;
mod manifest;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use khess::cones::{eigenvalues, in_dual_sigma_k, in_sigma_k, SymMatrix};
use khess::dirichlet::{solve_radial_dirichlet_with_report, GridKind, Quadrature, SolverConfig, SourceTerm};
use khess::eigen::{
    domain_monotonicity_check, estimate_lambda1, lower_bound, minimum_principle_probe, quartic_certifying_constant,
    upper_bound, BisectTol, IterationConfig,
};
use khess::geometry::{augment_r, verify_exp_boundary_barrier, verify_log_boundary_barrier, CurvatureField, TubeSpec};
use khess::radial::{quartic_test_profile, verify_hopf, BarrierParams, RadialProfile};
use khess::symfun::{garding_roots_real, in_gamma_k, in_gamma_k_korevaar, sigma_all, EigenSpectrum};

use config::FileConfig;
use manifest::RunManifest;

#[derive(Parser, Serialize)]
#[command(name = "khess", version, about = "k-Hessian cones, radial Dirichlet solves and principal eigenvalues")]
struct Cli {
    /// `key = value` file with solver and iteration settings.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Where to write the run manifest (default: next to --out, else stderr).
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Serialize)]
enum Command {
    /// Estimate the principal eigenvalue on a ball.
    Eigen(EigenArgs),
    /// Solve the radial Dirichlet problem S_k(D²u) = f, u = 0 on the boundary.
    Solve(SolveArgs),
    /// Cone membership of a matrix or an eigenvalue vector.
    Cone(ConeArgs),
    /// Barrier, bound and minimum-principle checks.
    Verify {
        #[command(subcommand)]
        check: VerifyCmd,
    },
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
enum QuadArg {
    Trapezoid,
    Simpson,
}

#[derive(Clone, Copy, ValueEnum, Serialize, PartialEq)]
enum Format {
    Json,
    Csv,
}

#[derive(Args, Serialize)]
struct SolverFlags {
    /// Number of radial cells (>= 64).
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long, value_enum)]
    quadrature: Option<QuadArg>,
    #[arg(long)]
    tol_residual: Option<f64>,
    /// Grade cells geometrically toward the boundary.
    #[arg(long)]
    graded: bool,
}

#[derive(Args, Serialize)]
struct IterFlags {
    /// Bracket tolerance relative to the initial bracket width.
    #[arg(long, conflicts_with = "bisect_tol_abs")]
    bisect_tol: Option<f64>,
    #[arg(long)]
    bisect_tol_abs: Option<f64>,
    /// Divergence cap as a multiple of the sup norm of the f = 1 solution.
    #[arg(long)]
    sup_cap: Option<f64>,
    #[arg(long)]
    n_max: Option<usize>,
    /// Parallel probes per bisection round.
    #[arg(long)]
    probes: Option<usize>,
}

#[derive(Args, Serialize)]
struct Problem {
    #[arg(long)]
    dim: usize,
    #[arg(long)]
    order: usize,
    #[arg(long)]
    radius: f64,
}

#[derive(Args, Serialize)]
struct EigenArgs {
    #[command(flatten)]
    problem: Problem,
    #[command(flatten)]
    iter: IterFlags,
    #[command(flatten)]
    solver: SolverFlags,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Args, Serialize)]
struct SolveArgs {
    #[command(flatten)]
    problem: Problem,
    /// `const:<c>`, `poly:<c0,c1,...>` or `file:<csv>`.
    #[arg(long)]
    source: String,
    #[command(flatten)]
    solver: SolverFlags,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Args, Serialize)]
#[group(skip)]
#[command(group(clap::ArgGroup::new("input").required(true).args(["matrix", "lambda"])))]
struct ConeArgs {
    /// JSON file `{"n": N, "entries": [...]}`.
    #[arg(long)]
    matrix: Option<PathBuf>,
    /// Comma-separated eigenvalues.
    #[arg(long, allow_hyphen_values = true)]
    lambda: Option<String>,
    #[arg(long)]
    order: usize,
    #[arg(long)]
    strict: bool,
    /// Root-finder restarts for the hyperbolicity check.
    #[arg(long, default_value_t = 3)]
    trials: usize,
}

#[derive(Args, Serialize)]
struct FieldArgs {
    /// `sphere:<R>` (with --dim), `ellipsoid:<a,b[,c]>` or `file:<json>`.
    #[arg(long)]
    field: String,
    #[arg(long)]
    dim: Option<usize>,
    /// Sample count for generated ellipsoids.
    #[arg(long, default_value_t = 64)]
    samples: usize,
    #[arg(long)]
    order: usize,
    #[arg(long)]
    t: f64,
    /// Barrier depth; defaults to min(delta, 1/(2 mu)).
    #[arg(long)]
    d0: Option<f64>,
    /// Tube width.
    #[arg(long, default_value_t = 1.0)]
    delta: f64,
}

#[derive(Subcommand, Serialize)]
enum VerifyCmd {
    /// Exponential boundary barrier e^{-td} - 1.
    BarrierExp {
        #[command(flatten)]
        field: FieldArgs,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
    },
    /// Logarithmic boundary barrier -M log(1 + td).
    BarrierLog {
        #[command(flatten)]
        field: FieldArgs,
        #[arg(long)]
        fsup: f64,
        #[arg(long, default_value_t = 0.0)]
        usup: f64,
    },
    /// Interior-ball slope bound psi <= -C1 d for a Dirichlet solution.
    Hopf {
        #[command(flatten)]
        problem: Problem,
        #[arg(long, default_value = "const:1")]
        source: String,
        /// Interior ball radius (default R/2).
        #[arg(long)]
        delta: Option<f64>,
        /// Barrier rate (default max(2 * 2(N-k)/(k delta), 2/delta)).
        #[arg(long)]
        m: Option<f64>,
        #[command(flatten)]
        solver: SolverFlags,
    },
    /// Supersolution test and interior minimum of a profile.
    Minprinciple {
        #[command(flatten)]
        problem: Problem,
        /// Use the quartic -(R² - r²)²/4.
        #[arg(long, conflicts_with = "profile")]
        quartic: bool,
        /// Profile CSV with columns r,h,hp,hpp.
        #[arg(long)]
        profile: Option<PathBuf>,
        /// Spectral parameter (default 4^k C(N,k) R^{-2k}).
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long, default_value_t = 512)]
        grid: usize,
    },
    /// Estimate and check C(N,k) R^{-2k} <= lambda <= 4^k C(N,k) R^{-2k}.
    Bounds {
        #[command(flatten)]
        problem: Problem,
        #[command(flatten)]
        iter: IterFlags,
        #[command(flatten)]
        solver: SolverFlags,
    },
    /// Check lambda(B_R2) <= lambda(B_R1) for R1 <= R2.
    Monotone {
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        order: usize,
        #[arg(long)]
        r1: f64,
        #[arg(long)]
        r2: f64,
        #[command(flatten)]
        iter: IterFlags,
        #[command(flatten)]
        solver: SolverFlags,
    },
}

struct Settings {
    solver: SolverConfig,
    iteration: IterationConfig,
}

impl Settings {
    fn solver(&self, f: &SolverFlags) -> SolverConfig {
        let mut c = self.solver;
        if let Some(g) = f.grid {
            c.grid_size = g;
        }
        if let Some(q) = f.quadrature {
            c.quadrature = match q {
                QuadArg::Trapezoid => Quadrature::Trapezoid,
                QuadArg::Simpson => Quadrature::Simpson,
            };
        }
        if let Some(t) = f.tol_residual {
            c.tol_residual = t;
        }
        if f.graded {
            c.grid = GridKind::Graded;
        }
        c
    }

    fn iteration(&self, f: &IterFlags) -> IterationConfig {
        let mut c = self.iteration;
        if let Some(t) = f.bisect_tol {
            c.bisect_tol = BisectTol::Relative(t);
        }
        if let Some(t) = f.bisect_tol_abs {
            c.bisect_tol = BisectTol::Absolute(t);
        }
        if let Some(s) = f.sup_cap {
            c.sup_cap = s;
        }
        if let Some(n) = f.n_max {
            c.n_max = n;
        }
        if let Some(p) = f.probes {
            c.probes_per_round = p;
        }
        c
    }
}

/// Outcome of a command: whether its checks passed, and files written.
struct Done {
    pass: bool,
    outputs: Vec<PathBuf>,
}

fn write_or_print(out: Option<&Path>, text: &str, outputs: &mut Vec<PathBuf>) -> anyhow::Result<()> {
    match out {
        Some(p) => {
            std::fs::write(p, text).with_context(|| format!("writing {}", p.display()))?;
            outputs.push(p.to_path_buf());
        }
        None => {
            print!("{text}");
            if !text.ends_with('\n') {
                println!();
            }
        }
    }
    Ok(())
}

fn pretty<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("report serializes") + "\n"
}

fn cmd_eigen(a: &EigenArgs, s: &Settings) -> anyhow::Result<Done> {
    let p = &a.problem;
    let mut est = estimate_lambda1(p.radius, p.dim, p.order, &s.iteration(&a.iter), &s.solver(&a.solver))?;
    let psi = est.eigenfunction.clone().ok_or_else(|| anyhow!("estimate carries no eigenfunction"))?;
    let mut outputs = Vec::new();
    match &a.out {
        Some(out) => {
            let (json_path, csv_path) = match a.format {
                Format::Json => (out.clone(), out.with_extension("csv")),
                Format::Csv => (out.with_extension("json"), out.clone()),
            };
            est.profile_ref = Some(csv_path.display().to_string());
            write_or_print(Some(&csv_path), &psi.to_csv(), &mut outputs)?;
            write_or_print(Some(&json_path), &(est.to_json() + "\n"), &mut outputs)?;
        }
        None => match a.format {
            Format::Json => write_or_print(None, &est.to_json(), &mut outputs)?,
            Format::Csv => write_or_print(None, &psi.to_csv(), &mut outputs)?,
        },
    }
    Ok(Done { pass: true, outputs })
}

fn cmd_solve(a: &SolveArgs, s: &Settings) -> anyhow::Result<Done> {
    let p = &a.problem;
    let source = SourceTerm::parse(&a.source)?;
    let (profile, report) = solve_radial_dirichlet_with_report(&source, p.radius, p.dim, p.order, &s.solver(&a.solver))?;
    let body = match a.format {
        Format::Csv => profile.to_csv(),
        Format::Json => profile.to_json() + "\n",
    };
    let mut outputs = Vec::new();
    write_or_print(a.out.as_deref(), &body, &mut outputs)?;
    let report = pretty(&json!({ "residual": report, "tol_residual": s.solver(&a.solver).tol_residual }));
    match &a.out {
        Some(out) => write_or_print(Some(&out.with_extension("report.json")), &report, &mut outputs)?,
        None => eprint!("{report}"),
    }
    Ok(Done { pass: true, outputs })
}

fn cmd_cone(a: &ConeArgs) -> anyhow::Result<Done> {
    let k = a.order;
    let report = if let Some(path) = &a.matrix {
        let m = SymMatrix::load(path)?;
        let spectrum = eigenvalues(&m)?;
        let closed = in_sigma_k(&m, k, false)?;
        let interior = in_sigma_k(&m, k, true)?;
        json!({
            "order": k,
            "eigenvalues": spectrum.values(),
            "sigmas": sigma_all(&spectrum).as_slice(),
            "in_sigma_k": closed,
            "in_sigma_k_interior": interior,
            "in_dual_sigma_k": in_dual_sigma_k(&m, k)?,
            "member": if a.strict { interior } else { closed },
        })
    } else {
        let text = a.lambda.as_deref().expect("clap enforces one input");
        let values = text
            .split(',')
            .map(|v| v.trim().parse::<f64>().map_err(|e| khess::Error::Parse(format!("bad eigenvalue `{v}`: {e}"))))
            .collect::<Result<Vec<_>, _>>()?;
        let spectrum = EigenSpectrum::new(values)?;
        let closed = in_gamma_k(&spectrum, k, false)?;
        let open = in_gamma_k(&spectrum, k, true)?;
        json!({
            "order": k,
            "eigenvalues": spectrum.values(),
            "sigmas": sigma_all(&spectrum).as_slice(),
            "in_gamma_k_closed": closed,
            "in_gamma_k": open,
            "korevaar": in_gamma_k_korevaar(&spectrum, k)?,
            "garding_roots_real": garding_roots_real(&spectrum, k, a.trials)?,
            "member": if a.strict { open } else { closed },
        })
    };
    let mut outputs = Vec::new();
    write_or_print(None, &pretty(&report), &mut outputs)?;
    Ok(Done { pass: true, outputs })
}

fn load_field(a: &FieldArgs) -> anyhow::Result<CurvatureField> {
    let (kind, rest) = a.field.split_once(':').ok_or_else(|| khess::Error::Parse(format!("bad field `{}`", a.field)))?;
    let nums = |s: &str| {
        s.split(',')
            .map(|v| v.trim().parse::<f64>().map_err(|e| khess::Error::Parse(format!("bad number `{v}`: {e}"))))
            .collect::<Result<Vec<_>, _>>()
    };
    let field = match kind {
        "sphere" => {
            let dim = a.dim.ok_or_else(|| khess::Error::Parse("sphere fields need --dim".into()))?;
            let r = nums(rest)?;
            if r.len() != 1 {
                bail!(khess::Error::Parse("sphere:<R> takes one radius".into()));
            }
            CurvatureField::sphere(dim, r[0])?
        }
        "ellipsoid" => CurvatureField::ellipsoid(&nums(rest)?, a.samples)?,
        "file" => CurvatureField::load(rest)?,
        other => bail!(khess::Error::Parse(format!("unknown field kind `{other}`"))),
    };
    if let Some(d) = a.dim {
        if d != field.dim() {
            bail!(khess::Error::Domain(format!("--dim {d} disagrees with field dimension {}", field.dim())));
        }
    }
    Ok(field)
}

fn tube_depth(a: &FieldArgs, field: &CurvatureField) -> anyhow::Result<f64> {
    Ok(match a.d0 {
        Some(d) => TubeSpec::new(a.delta, d, field.mu())?.d0,
        None => TubeSpec::for_field(field, a.delta)?.d0,
    })
}

fn cmd_verify(check: &VerifyCmd, s: &Settings) -> anyhow::Result<Done> {
    let mut outputs = Vec::new();
    let (pass, report) = match check {
        VerifyCmd::BarrierExp { field, lambda } => {
            let f = load_field(field)?;
            let d0 = tube_depth(field, &f)?;
            let rep = verify_exp_boundary_barrier(&f, field.order, *lambda, field.t, d0)?;
            let r_star = if field.order >= 2 { Some(augment_r(&f, field.order)?) } else { None };
            (rep.pass, json!({ "t": field.t, "d0": d0, "augment_r": r_star, "report": rep }))
        }
        VerifyCmd::BarrierLog { field, fsup, usup } => {
            let f = load_field(field)?;
            let d0 = tube_depth(field, &f)?;
            let lb = verify_log_boundary_barrier(&f, field.order, *fsup, *usup, field.t, d0)?;
            (lb.report.pass, json!({ "t": field.t, "d0": d0, "barrier": lb }))
        }
        VerifyCmd::Hopf { problem: p, source, delta, m, solver } => {
            let src = SourceTerm::parse(source)?;
            let (psi, _) = solve_radial_dirichlet_with_report(&src, p.radius, p.dim, p.order, &s.solver(solver))?;
            let delta = delta.unwrap_or(0.5 * p.radius);
            let m = m.unwrap_or_else(|| (2.0 * BarrierParams::min_rate(p.dim, p.order, delta)).max(2.0 / delta));
            let rep = verify_hopf(&psi, delta, m)?;
            (rep.pass, json!({ "report": rep }))
        }
        VerifyCmd::Minprinciple { problem: p, quartic, profile, lambda, grid } => {
            let lambda = lambda.unwrap_or_else(|| upper_bound(p.dim, p.order, p.radius));
            let prof = match (quartic, profile) {
                (true, _) => quartic_test_profile(p.radius, p.dim, p.order, *grid)?,
                (false, Some(path)) => RadialProfile::from_csv(p.dim, p.order, &std::fs::read_to_string(path)?)?,
                (false, None) => bail!(khess::Error::Parse("pass --quartic or --profile".into())),
            };
            let rep = minimum_principle_probe(&prof, lambda)?;
            let c_min = if *quartic { Some(quartic_certifying_constant(p.radius, p.dim, p.order, *grid)?) } else { None };
            (rep.certifies, json!({ "report": rep, "quartic_certifying_constant": c_min }))
        }
        VerifyCmd::Bounds { problem: p, iter, solver } => {
            let est = estimate_lambda1(p.radius, p.dim, p.order, &s.iteration(iter), &s.solver(solver))?;
            let (lo, hi) = (lower_bound(p.dim, p.order, p.radius), upper_bound(p.dim, p.order, p.radius));
            let ok = lo <= est.lambda_best && est.lambda_best <= hi;
            let statement = format!("{lo} <= {} <= {hi}", est.lambda_best);
            (ok, json!({ "lower": lo, "upper": hi, "lambda_best": est.lambda_best, "statement": statement, "pass": ok }))
        }
        VerifyCmd::Monotone { dim, order, r1, r2, iter, solver } => {
            let rep = domain_monotonicity_check(*dim, *order, *r1, *r2, &s.iteration(iter), &s.solver(solver))?;
            (rep.holds, json!({ "report": rep }))
        }
    };
    let mut body = report;
    body["pass"] = json!(pass);
    write_or_print(None, &pretty(&body), &mut outputs)?;
    Ok(Done { pass, outputs })
}

fn run(cli: &Cli, manifest: &mut RunManifest) -> anyhow::Result<Done> {
    if let Ok(v) = std::env::var("KHESS_THREADS") {
        let n: usize = v.parse().map_err(|_| khess::Error::Parse(format!("KHESS_THREADS=`{v}` is not a count")))?;
        if n == 0 {
            bail!(khess::Error::Parse("KHESS_THREADS must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let file = match &cli.config {
        Some(path) => {
            let (cfg, text) = FileConfig::load(path)?;
            manifest.add_config_file(path, &text);
            cfg
        }
        None => FileConfig::default(),
    };
    let settings = Settings { solver: file.solver(), iteration: file.iteration() };
    match &cli.command {
        Command::Eigen(a) => cmd_eigen(a, &settings),
        Command::Solve(a) => cmd_solve(a, &settings),
        Command::Cone(a) => cmd_cone(a),
        Command::Verify { check } => cmd_verify(check, &settings),
    }
}

/// 1 for usage and input problems, 2 for numerical failures.
fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<khess::Error>() {
        Some(khess::Error::Inconsistency(_) | khess::Error::Convergence(_) | khess::Error::NotFound { .. }) => 2,
        _ => 1,
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Eigen(_) => "eigen",
        Command::Solve(_) => "solve",
        Command::Cone(_) => "cone",
        Command::Verify { check } => match check {
            VerifyCmd::BarrierExp { .. } => "verify barrier-exp",
            VerifyCmd::BarrierLog { .. } => "verify barrier-log",
            VerifyCmd::Hopf { .. } => "verify hopf",
            VerifyCmd::Minprinciple { .. } => "verify minprinciple",
            VerifyCmd::Bounds { .. } => "verify bounds",
            VerifyCmd::Monotone { .. } => "verify monotone",
        },
    }
}

fn primary_out(c: &Command) -> Option<&Path> {
    match c {
        Command::Eigen(a) => a.out.as_deref(),
        Command::Solve(a) => a.out.as_deref(),
        _ => None,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let start = Instant::now();
    let params = serde_json::to_value(&cli.command).expect("arguments serialize");
    let mut manifest = RunManifest::new(command_name(&cli.command), params);
    let result = run(&cli, &mut manifest);
    manifest.wall_time_s = start.elapsed().as_secs_f64();

    let code = match &result {
        Ok(done) => {
            manifest.output_paths = done.outputs.iter().map(|p| p.display().to_string()).collect();
            if done.pass {
                0
            } else {
                2
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            exit_code(e)
        }
    };
    let manifest_path = cli
        .manifest
        .clone()
        .or_else(|| primary_out(&cli.command).map(|p| p.with_extension("manifest.json")));
    match manifest_path {
        Some(p) => {
            if let Err(e) = std::fs::write(&p, manifest.to_json() + "\n") {
                eprintln!("error: writing manifest {}: {e}", p.display());
                return ExitCode::from(1);
            }
        }
        None => eprintln!("{}", serde_json::to_string(&manifest).expect("manifest serializes")),
    }
    ExitCode::from(code)
}
