use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use ampcalc::dsl::{eval_setup_expr, parse_setup_expr};
use ampcalc::format_amplitude;
use ampcalc::kernel_file::KernelSpec;
use ampcalc::report::{CheckResult, Relation, RunReport, F17};
use ampcalc::suites::{self, FeFamily, LogSweep, NonlinearConfig, RulesConfig};
use ampcalc_core::amplitude::DEFAULT_PATH_BUDGET;
use ampcalc_core::{amplitude_matrix, amplitude_paths};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "ampcalc", version, about = "Amplitude calculus on a discrete spacetime lattice")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a setup expression and print its amplitude.
    Amp(AmpArgs),
    /// Randomized sum/product/associativity/distributivity/full-filter suite.
    CheckRules(RulesArgs),
    /// Regraduation and functional-equation residual suite.
    CheckFe(FeArgs),
    /// Read a Hamiltonian back from its kernel family and fit convergence orders.
    ExtractH(ExtractArgs),
    /// Consistency residual of the nonlinear evolver over a lambda sweep (CSV on stdout).
    NonlinearDemo(DemoArgs),
}

#[derive(Args)]
struct ReportArgs {
    /// Write the JSON run report here.
    #[arg(long, value_name = "PATH")]
    report: Option<PathBuf>,
    /// Include wall time in the report (makes reports differ between runs).
    #[arg(long)]
    timing: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Engine {
    Paths,
    Matrix,
    Both,
}

#[derive(Args)]
struct AmpArgs {
    /// Setup expression, e.g. "[(0,2),{t=1:0},(0,0)]".
    #[arg(long)]
    expr: String,
    /// identity | hadamard | dft | random:<seed> | file:<path>
    #[arg(long)]
    kernel: KernelSpec,
    #[arg(long, value_enum, default_value = "both")]
    engine: Engine,
    /// Largest accepted relative engine discrepancy.
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Number of sites (defaults to the kernel's own size, else the largest site used + 1).
    #[arg(long)]
    sites: Option<usize>,
    /// Path-enumeration budget.
    #[arg(long, default_value_t = DEFAULT_PATH_BUDGET)]
    budget: u64,
    #[command(flatten)]
    out: ReportArgs,
}

#[derive(Args)]
struct RulesArgs {
    #[arg(long, default_value_t = 3)]
    sites: usize,
    #[arg(long, default_value_t = 5)]
    max_steps: i64,
    #[arg(long, default_value_t = 200)]
    cases: usize,
    #[arg(long, default_value_t = 3)]
    max_filters: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Defaults to random:<seed>.
    #[arg(long)]
    kernel: Option<KernelSpec>,
    #[command(flatten)]
    out: ReportArgs,
}

#[derive(Args)]
struct FeArgs {
    /// identity | linear | power3 | power5 | zeta | controls | all
    #[arg(long, default_value = "all")]
    family: FeFamily,
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    out: ReportArgs,
}

#[derive(Args)]
struct ExtractArgs {
    /// Hamiltonian matrix in the kernel file format.
    #[arg(long)]
    hamiltonian: PathBuf,
    /// Log-spaced step sizes lo:hi:n.
    #[arg(long, default_value = "1e-4:1e-1:7")]
    eps_sweep: LogSweep,
    #[arg(long, default_value_t = 1.0)]
    hbar: f64,
    /// Also write the sweep table as CSV.
    #[arg(long, value_name = "PATH")]
    csv: Option<PathBuf>,
    #[command(flatten)]
    out: ReportArgs,
}

#[derive(Args)]
struct DemoArgs {
    /// Log-spaced lambda values lo:hi:n.
    #[arg(long, default_value = "1e-4:1e-2:5")]
    lambda_sweep: LogSweep,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "dft")]
    kernel: KernelSpec,
    #[arg(long, default_value_t = 4)]
    sites: usize,
    #[arg(long, default_value_t = 5)]
    steps: u32,
    #[command(flatten)]
    out: ReportArgs,
}

type Failure = Box<dyn std::error::Error>;

fn finish(mut report: RunReport, out: &ReportArgs, started: Instant) -> Result<bool, Failure> {
    if out.timing {
        report.wall_time = Some(F17(started.elapsed().as_secs_f64()));
    }
    if let Some(path) = &out.report {
        std::fs::write(path, report.to_json())
            .map_err(|e| format!("cannot write {}: {e}", path.display()))?;
    }
    Ok(report.passed)
}

fn print_checks(report: &RunReport, to_stderr: bool) {
    for check in &report.checks {
        if to_stderr {
            eprintln!("{}", check.summary());
        } else {
            println!("{}", check.summary());
        }
    }
}

fn amp(args: &AmpArgs, started: Instant) -> Result<bool, Failure> {
    let setup = eval_setup_expr(&parse_setup_expr(&args.expr)?)?;
    let sites = match (args.sites, args.kernel.intrinsic_sites()?) {
        (Some(s), _) => Some(s),
        (None, Some(_)) => None,
        (None, None) => Some(setup.max_site() + 1),
    };
    let kernel = args.kernel.build(sites)?;
    println!("setup: {setup}");
    let paths = match args.engine {
        Engine::Paths | Engine::Both => Some(amplitude_paths(&setup, &kernel, args.budget)?.value()),
        Engine::Matrix => None,
    };
    let matrix = match args.engine {
        Engine::Matrix | Engine::Both => Some(amplitude_matrix(&setup, &kernel)?.value()),
        Engine::Paths => None,
    };
    if let Some(p) = paths {
        println!("paths: {}", format_amplitude(p));
    }
    if let Some(m) = matrix {
        println!("matrix: {}", format_amplitude(m));
    }

    let mut report = RunReport::new("amp", Some(args.kernel.to_string()), None);
    report.param("expr", args.expr.as_str());
    report.param("setup", setup.to_string());
    report.param("num_sites", kernel.num_sites());
    for (name, value) in [("paths", paths), ("matrix", matrix)] {
        if let Some(z) = value {
            report.param(name, vec![F17(z.re).text(), F17(z.im).text()]);
        }
    }
    if let (Some(p), Some(m)) = (paths, matrix) {
        let d = (m - p).norm() / (1.0 + p.norm());
        println!("discrepancy: {d:e}");
        let check = CheckResult::new("engine_discrepancy", Relation::AtMost, args.tol, &[d], 0);
        if !check.passed {
            eprintln!("{}", check.summary());
        }
        report.add(check);
    }
    finish(report, &args.out, started)
}

fn run(command: &Command) -> Result<bool, Failure> {
    let started = Instant::now();
    match command {
        Command::Amp(args) => amp(args, started),
        Command::CheckRules(args) => {
            let cfg = RulesConfig {
                sites: args.sites,
                max_steps: args.max_steps,
                cases: args.cases,
                max_filters: args.max_filters,
                seed: args.seed,
                kernel: args.kernel.clone().unwrap_or(KernelSpec::Random(args.seed)),
            };
            let report = suites::check_rules(&cfg)?;
            print_checks(&report, false);
            finish(report, &args.out, started)
        }
        Command::CheckFe(args) => {
            let report = suites::check_fe(args.family, args.samples, args.seed)?;
            print_checks(&report, false);
            finish(report, &args.out, started)
        }
        Command::ExtractH(args) => {
            let report = suites::extract_h(&args.hamiltonian, args.eps_sweep, args.hbar)?;
            print_checks(&report, false);
            if let (Some(path), Some(sweep)) = (&args.csv, &report.sweep) {
                std::fs::write(path, sweep.to_csv())
                    .map_err(|e| format!("cannot write {}: {e}", path.display()))?;
            }
            finish(report, &args.out, started)
        }
        Command::NonlinearDemo(args) => {
            let cfg = NonlinearConfig {
                sweep: args.lambda_sweep,
                seed: args.seed,
                kernel: args.kernel.clone(),
                sites: args.sites,
                steps: args.steps,
            };
            let report = suites::nonlinear_demo(&cfg)?;
            if let Some(sweep) = &report.sweep {
                print!("{}", sweep.to_csv());
            }
            print_checks(&report, true);
            finish(report, &args.out, started)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
