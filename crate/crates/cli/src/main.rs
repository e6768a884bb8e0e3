use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use thiserror::Error;

use momentsos::bench::{parse_problem, run_problem, write_csv, BenchError, DistanceCsvRow, ExperimentConfig, Problem};
use momentsos::cdkernel::{kernel_eval, upper_bound_kernel, upper_bound_sdp, KernelError, KernelSpan, KernelWeights, ProductBasis, ProductMeasure};
use momentsos::distcone::{hausdorff_lower_bound, lojasiewicz_fit, DistError};
use momentsos::hierarchy::{solve_relaxation, HierarchyError, HierarchyKind, HierarchyOptions, Side};
use momentsos::momentkit::Certificate;
use momentsos::semialg::{estimate_minimum, SimpleKind, SimpleSetProduct};

#[derive(Parser)]
#[command(name = "momentsos", version, about = "Moment-SOS hierarchy laboratory")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Seed for every stochastic step
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Accuracy promised for reported bounds
    #[arg(long, global = true, default_value_t = 1e-7)]
    tol: f64,
    /// Largest PSD block a relaxation may build
    #[arg(long, global = true, default_value_t = 200)]
    max_psd_size: usize,
    /// Directory receiving CSV output
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one relaxation
    Solve {
        #[arg(long)]
        problem: PathBuf,
        #[arg(long, value_parser = parse_certificate, default_value = "Q")]
        certificate: Certificate,
        #[arg(long, value_parser = parse_side, default_value = "moment")]
        side: Side,
        #[arg(long)]
        level: usize,
    },
    /// Both sides of every level in a range, for each certificate
    Ladder {
        #[arg(long)]
        problem: PathBuf,
        #[arg(long, value_parser = parse_certificate, value_delimiter = ',', default_value = "T,Q,R")]
        certificate: Vec<Certificate>,
        #[arg(long, value_parser = parse_levels)]
        levels: (usize, usize),
        /// Record wall-clock seconds (breaks byte-identical reruns)
        #[arg(long)]
        timings: bool,
    },
    /// Measure-based upper bounds on a product of simple sets
    Upper {
        #[arg(long)]
        problem: PathBuf,
        #[arg(long)]
        level: usize,
        /// Reference measure; only the product of the per-factor laws is available
        #[arg(long, default_value = "auto")]
        measure: String,
        #[arg(long, value_parser = parse_certificate, default_value = "Q")]
        certificate: Certificate,
    },
    /// Direction-sampled lower bounds on the distance to the moment cone
    Distance {
        #[arg(long)]
        problem: PathBuf,
        #[arg(long, value_parser = parse_certificate, default_value = "R")]
        certificate: Certificate,
        #[arg(long, value_parser = parse_levels)]
        levels: (usize, usize),
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[arg(long, default_value_t = 64)]
        directions: usize,
    },
    /// Fit the Lojasiewicz exponent from exterior samples
    Lojfit {
        #[arg(long)]
        problem: PathBuf,
        #[arg(long, default_value_t = 500)]
        count: usize,
        /// Sampling box is the bounding box widened by this much per side
        #[arg(long, default_value_t = 0.5)]
        margin: f64,
    },
    /// Ladders, distance series, rate fits and the lemma cross-check
    Rates {
        #[arg(long)]
        problem: PathBuf,
        #[arg(long, value_parser = parse_certificate, value_delimiter = ',', default_value = "R")]
        certificate: Vec<Certificate>,
        #[arg(long, value_parser = parse_levels)]
        levels: (usize, usize),
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[arg(long, default_value_t = 16)]
        directions: usize,
        #[arg(long)]
        timings: bool,
    },
    /// Evaluate a Christoffel-Darboux kernel on one simple set
    Kernel {
        #[arg(long, value_enum)]
        set: SetKind,
        #[arg(long, default_value_t = 1)]
        n: usize,
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
        #[arg(long)]
        degree: usize,
        /// x and y, 2n comma-separated numbers
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        eval: Vec<f64>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SetKind {
    Ball,
    Simplex,
    Hypercube,
}

impl From<SetKind> for SimpleKind {
    fn from(k: SetKind) -> Self {
        match k {
            SetKind::Ball => SimpleKind::Ball,
            SetKind::Simplex => SimpleKind::Simplex,
            SetKind::Hypercube => SimpleKind::Hypercube,
        }
    }
}

fn parse_certificate(s: &str) -> Result<Certificate, String> {
    Certificate::from_str(s).map_err(|e| e.to_string())
}

fn parse_side(s: &str) -> Result<Side, String> {
    Side::from_str(s).map_err(|e| e.to_string())
}

/// "a..b", both ends included.
fn parse_levels(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once("..").ok_or_else(|| format!("expected a..b, got '{s}'"))?;
    let a: usize = a.trim().parse().map_err(|_| format!("bad level '{a}'"))?;
    let b: usize = b.trim_start_matches('=').trim().parse().map_err(|_| format!("bad level '{b}'"))?;
    if a == 0 || a > b {
        return Err(format!("level range {a}..{b} is empty or starts at 0"));
    }
    Ok((a, b))
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Solver(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Solver(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

impl From<BenchError> for CliError {
    fn from(e: BenchError) -> Self {
        match e {
            BenchError::Io(m) => CliError::Io(m),
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl From<HierarchyError> for CliError {
    fn from(e: HierarchyError) -> Self {
        match e {
            HierarchyError::NotOptimal(_) | HierarchyError::Solver(_) => CliError::Solver(e.to_string()),
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl From<KernelError> for CliError {
    fn from(e: KernelError) -> Self {
        match e {
            KernelError::Hierarchy(h) => h.into(),
            KernelError::Solver(_) => CliError::Solver(e.to_string()),
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl From<DistError> for CliError {
    fn from(e: DistError) -> Self {
        match e {
            DistError::Hierarchy(h) => h.into(),
            other => CliError::Validation(other.to_string()),
        }
    }
}

#[derive(Serialize)]
struct SolveRow {
    level: usize,
    certificate: String,
    side: String,
    bound: f64,
    gap: f64,
    status: String,
    seconds: String,
    seed: u64,
}

#[derive(Serialize)]
struct UpperRow {
    level: usize,
    ub_sdp: f64,
    ub_kernel: Option<f64>,
    measure: String,
    seconds: String,
    seed: u64,
}

#[derive(Serialize)]
struct LojRow {
    exponent: f64,
    constant: f64,
    r_squared: f64,
    points: usize,
    predicted: Option<f64>,
    seed: u64,
}

#[derive(Serialize)]
struct KernelRow {
    set: String,
    n: usize,
    degree: usize,
    x: String,
    y: String,
    value: f64,
    christoffel_x: f64,
}

struct Ctx {
    global: Global,
    opts: HierarchyOptions,
}

impl Ctx {
    fn out(&self, name: &str) -> Result<PathBuf, CliError> {
        fs::create_dir_all(&self.global.out_dir).map_err(|e| CliError::Io(format!("{}: {e}", self.global.out_dir.display())))?;
        Ok(self.global.out_dir.join(name))
    }

    fn problem(&self, path: &Path) -> Result<Problem, CliError> {
        Ok(parse_problem(path)?)
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let g = cli.global;
    if !(g.tol.is_finite() && g.tol > 0.0) {
        return Err(CliError::Validation(format!("--tol must be positive, got {}", g.tol)));
    }
    if g.max_psd_size == 0 {
        return Err(CliError::Validation("--max-psd-size must be positive".into()));
    }
    let mut opts = HierarchyOptions::with_tol(g.tol);
    opts.max_psd_size = g.max_psd_size;
    let ctx = Ctx { global: g, opts };
    match cli.command {
        Command::Solve { problem, certificate, side, level } => solve(&ctx, &problem, certificate, side, level),
        Command::Ladder { problem, certificate, levels, timings } => experiment(&ctx, &problem, certificate, levels, None, 0, timings),
        Command::Rates { problem, certificate, levels, k, directions, timings } => {
            experiment(&ctx, &problem, certificate, levels, Some(k), directions, timings)
        }
        Command::Upper { problem, level, measure, certificate } => upper(&ctx, &problem, level, &measure, certificate),
        Command::Distance { problem, certificate, levels, k, directions } => distance(&ctx, &problem, certificate, levels, k, directions),
        Command::Lojfit { problem, count, margin } => lojfit(&ctx, &problem, count, margin),
        Command::Kernel { set, n, scale, degree, eval } => kernel(&ctx, set, n, scale, degree, &eval),
    }
}

fn solve(ctx: &Ctx, path: &Path, certificate: Certificate, side: Side, level: usize) -> Result<(), CliError> {
    let p = ctx.problem(path)?;
    let solved = solve_relaxation(&p.objective, &p.set, HierarchyKind { certificate, side }, level, &ctx.opts)?;
    let r = &solved.result;
    let row = SolveRow {
        level,
        certificate: certificate.to_string(),
        side: side.to_string(),
        bound: r.bound,
        gap: r.gap,
        status: r.status.to_string(),
        seconds: format!("{:.3}", r.seconds),
        seed: ctx.global.seed,
    };
    write_csv(&ctx.out("solve.csv")?, &[row])?;
    println!("{certificate} {side} r={level}: bound {:.10} status {} ({} iterations)", r.bound, r.status, r.iterations);
    if r.status != sdpcore::Status::Optimal {
        return Err(CliError::Solver(format!("solver finished with status {}", r.status)));
    }
    Ok(())
}

fn experiment(
    ctx: &Ctx,
    path: &Path,
    certificates: Vec<Certificate>,
    levels: (usize, usize),
    k: Option<usize>,
    directions: usize,
    timings: bool,
) -> Result<(), CliError> {
    let problem = ctx.problem(path)?;
    let config = ExperimentConfig {
        problem: path.to_path_buf(),
        certificates,
        levels,
        k,
        directions,
        seed: ctx.global.seed,
        hierarchy: ctx.opts.clone(),
        out_dir: ctx.global.out_dir.clone(),
        record_timings: timings,
    };
    let bundle = run_problem(&problem, &config)?;
    for row in &bundle.ladder_rows {
        let bound = row.bound.map_or("-".into(), |b| format!("{b:.10}"));
        println!("{} r={} {:<6} {bound} {}", row.certificate, row.level, row.side, row.status);
    }
    for (cert, fit) in &bundle.rates {
        match fit {
            Ok(f) => println!("{cert} rate: slope {:.3} over r={}..{} (R² {:.3})", f.slope, f.window.0, f.window.1, f.r_squared),
            Err(e) => println!("{cert} rate: {e}"),
        }
    }
    for file in &bundle.files {
        println!("wrote {}", file.display());
    }
    let failed = bundle.ladder_rows.iter().filter(|r| r.status != "optimal").count()
        + bundle.distance_rows.iter().filter(|r| r.lower_bound.is_none()).count();
    if failed > 0 {
        return Err(CliError::Solver(format!("{failed} solves did not finish optimally; see the CSV error columns")));
    }
    Ok(())
}

fn upper(ctx: &Ctx, path: &Path, level: usize, measure: &str, certificate: Certificate) -> Result<(), CliError> {
    if !matches!(measure, "auto" | "reference") {
        return Err(CliError::Validation(format!("unknown measure '{measure}' (expected auto)")));
    }
    let p = ctx.problem(path)?;
    let product = p.simple_product().ok_or_else(|| CliError::Validation("upper bounds need a ball, simplex, hypercube or box_product set".into()))?;
    let start = Instant::now();
    let mu = ProductMeasure::new(&product);
    let ub = upper_bound_sdp(&p.objective, &product, certificate, level, &mu, &ctx.opts)?;
    // Kernel density centred at the estimated minimizer; skipped when f is too high in degree.
    let x_star = estimate_minimum(&p.objective, &p.set, 2000, 8, ctx.global.seed).map_err(|e| CliError::Validation(e.to_string()))?.argmin;
    let ub_kernel = ProductBasis::new(&product, Some(2 * level))
        .and_then(|b| upper_bound_kernel(&p.objective, &b, level, &KernelWeights::ones(product.factors().len(), 2 * level), &x_star))
        .ok();
    let row = UpperRow {
        level,
        ub_sdp: ub.value,
        ub_kernel,
        measure: "reference".into(),
        seconds: format!("{:.3}", start.elapsed().as_secs_f64()),
        seed: ctx.global.seed,
    };
    write_csv(&ctx.out("upper.csv")?, &[row])?;
    println!("ub_sdp {:.10} status {}", ub.value, ub.status);
    if let Some(v) = ub_kernel {
        println!("ub_kernel {v:.10}");
    }
    if ub.status != "optimal" {
        return Err(CliError::Solver(format!("solver finished with status {}", ub.status)));
    }
    Ok(())
}

fn distance(ctx: &Ctx, path: &Path, certificate: Certificate, levels: (usize, usize), k: usize, directions: usize) -> Result<(), CliError> {
    if directions == 0 {
        return Err(CliError::Validation("--directions must be positive".into()));
    }
    let p = ctx.problem(path)?;
    let mut rows = Vec::new();
    let mut failed = 0;
    for r in levels.0..=levels.1 {
        let est = hausdorff_lower_bound(&p.set, certificate, r, k, directions, ctx.global.seed, &ctx.opts);
        let (lower_bound, skipped, error) = match est {
            Ok(h) => (Some(h.lower_bound), Some(h.skipped), String::new()),
            Err(e) => {
                let e = CliError::from(e);
                if let CliError::Validation(_) = e {
                    return Err(e);
                }
                failed += 1;
                (None, None, e.to_string())
            }
        };
        match lower_bound {
            Some(v) => println!("r={r} lower bound {v:.3e} ({} directions skipped)", skipped.unwrap_or(0)),
            None => println!("r={r} failed: {error}"),
        }
        rows.push(DistanceCsvRow { certificate: certificate.to_string(), r, lower_bound, directions, skipped, seed: ctx.global.seed, error });
    }
    write_csv(&ctx.out("distance.csv")?, &rows)?;
    if failed > 0 {
        return Err(CliError::Solver(format!("{failed} levels failed")));
    }
    Ok(())
}

fn lojfit(ctx: &Ctx, path: &Path, count: usize, margin: f64) -> Result<(), CliError> {
    let p = ctx.problem(path)?;
    let bbox = p.set.bounding_box().ok_or_else(|| CliError::Validation("set has no bounding box to sample around".into()))?;
    let sample_box: Vec<(f64, f64)> = bbox.iter().map(|(lo, hi)| (lo - margin, hi + margin)).collect();
    let fit = lojasiewicz_fit(&p.set, &sample_box, count, ctx.global.seed)?;
    let predicted = p.set.lojasiewicz().map(|h| h.exponent);
    println!("exponent {:.4} (R² {:.3}, {} points){}", fit.exponent, fit.r_squared, fit.points, predicted.map_or(String::new(), |e| format!(", predicted {e}")));
    let row = LojRow { exponent: fit.exponent, constant: fit.constant, r_squared: fit.r_squared, points: fit.points, predicted, seed: ctx.global.seed };
    write_csv(&ctx.out("lojfit.csv")?, &[row])?;
    Ok(())
}

fn kernel(ctx: &Ctx, set: SetKind, n: usize, scale: f64, degree: usize, eval: &[f64]) -> Result<(), CliError> {
    if eval.len() != 2 * n {
        return Err(CliError::Validation(format!("--eval needs {} numbers (x then y), got {}", 2 * n, eval.len())));
    }
    let product = SimpleSetProduct::single(set.into(), n, scale).map_err(|e| CliError::Validation(e.to_string()))?;
    let basis = ProductBasis::new(&product, Some(degree))?;
    let (x, y) = eval.split_at(n);
    let span = KernelSpan::UpTo(degree);
    let value = kernel_eval(&basis, &span, x, y, None)?;
    let diag = kernel_eval(&basis, &span, x, x, None)?;
    let join = |v: &[f64]| v.iter().map(f64::to_string).collect::<Vec<_>>().join(" ");
    println!("C_{degree}(x, y) = {value:.12}");
    println!("Christoffel function at x: {:.12}", 1.0 / diag);
    let row = KernelRow {
        set: format!("{:?}", SimpleKind::from(set)).to_lowercase(),
        n,
        degree,
        x: join(x),
        y: join(y),
        value,
        christoffel_x: 1.0 / diag,
    };
    write_csv(&ctx.out("kernel.csv")?, &[row])?;
    Ok(())
}
