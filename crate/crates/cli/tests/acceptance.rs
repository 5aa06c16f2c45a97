//! Acceptance suite: one line per criterion, nonzero exit if any fails.

use std::f64::consts::PI;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use ampcalc_core::amplitude::{engine_discrepancy, resolution_residual, DEFAULT_PATH_BUDGET};
use ampcalc_core::fit::{loglog_slope, logspace};
use ampcalc_core::gen;
use ampcalc_core::linalg::{max_abs, CMatrix};
use ampcalc_core::regraduation::{controls, sample_triples, square_triples};
use ampcalc_core::{
    amplitude_matrix, and_compose, build_sum_rep, check_p_constraints, check_product_rule,
    check_s_associativity, check_sum_rule, consistency_residual, extract_hamiltonian, full_filter,
    kernel_from_hamiltonian, linearity_residual, make_nonlinear_evolver, or_join, Complex64, Event,
    Grid, Hamiltonian, LinearEvolver, Regraduator, Setup, StepKernel,
};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Setup from time 0 with `2..=max_steps` steps, so it has interior times.
fn setup_with_interior(r: &mut ChaCha8Rng, n: usize, max_steps: i64) -> Setup {
    let steps = r.random_range(2..=max_steps);
    let source = Event::new(r.random_range(0..n), 0);
    let sink = r.random_range(0..n);
    gen::setup_from(r, source, steps, sink, n, 3, None)
}

fn or(a: &Setup, b: &Setup) -> Option<Setup> {
    or_join(a, b).ok().map(|(s, _)| s)
}

fn and(later: &Setup, earlier: &Setup) -> Option<Setup> {
    and_compose(later, earlier).ok()
}

fn oracle_equivalence() -> Outcome {
    let started = Instant::now();
    let mut r = rng(1001);
    let mut worst: f64 = 0.0;
    for case in 0..500u64 {
        let n = r.random_range(1..=4);
        let setup = gen::random_setup(&mut r, n, 6, 3);
        let kernel = StepKernel::random_time_dependent(n, 0..6, 5000 + case);
        worst = worst.max(engine_discrepancy(&setup, &kernel, DEFAULT_PATH_BUDGET).unwrap());
    }
    let elapsed = started.elapsed();
    outcome(
        worst <= 1e-10 && elapsed < Duration::from_secs(10),
        format!("500 setups, max relative discrepancy {worst:.3e} (tol 1e-10), {:.2} s (limit 10 s)", elapsed.as_secs_f64()),
    )
}

fn sum_rule() -> Outcome {
    let mut r = rng(1002);
    let mut worst: f64 = 0.0;
    for case in 0..200u64 {
        let n = r.random_range(2..=4);
        let (a, b) = gen::joinable_pair(&mut r, n, 6, 3);
        let kernel = StepKernel::random(n, 6000 + case);
        worst = worst.max(check_sum_rule(&a, &b, &kernel).unwrap());
    }
    outcome(worst <= 1e-12, format!("200 joinable pairs, max residual {worst:.3e} (tol 1e-12)"))
}

fn product_rule() -> Outcome {
    let mut r = rng(1003);
    let mut worst: f64 = 0.0;
    for case in 0..200u64 {
        let n = r.random_range(1..=4);
        let (later, earlier) = gen::chainable_pair(&mut r, n, 3, 3);
        let kernel = StepKernel::random_time_dependent(n, 0..6, 7000 + case);
        worst = worst.max(check_product_rule(&later, &earlier, &kernel).unwrap());
    }
    outcome(worst <= 1e-12, format!("200 chainable pairs, max residual {worst:.3e} (tol 1e-12)"))
}

fn covered_setups() -> Vec<(Setup, StepKernel, usize)> {
    let mut r = rng(1004);
    (0..100u64)
        .map(|case| {
            let n = r.random_range(1..=4);
            (setup_with_interior(&mut r, n, 6), StepKernel::random(n, 8000 + case), n)
        })
        .collect()
}

fn full_filter_invariance() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut inserted = 0;
    for (setup, kernel, n) in covered_setups() {
        let grid = Grid::new(n).unwrap();
        let before = amplitude_matrix(&setup, &kernel).unwrap().value();
        let mut covered = setup.clone();
        for t in setup.interior_times() {
            if setup.filter_at(t).is_none() {
                covered = covered.with_filter(full_filter(grid, t)).unwrap();
                inserted += 1;
            }
        }
        let after = amplitude_matrix(&covered, &kernel).unwrap().value();
        worst = worst.max((after - before).norm());
    }
    outcome(
        worst <= 1e-12 && inserted > 0,
        format!("100 setups, {inserted} full filters inserted, max change {worst:.3e} (tol 1e-12)"),
    )
}

fn resolution_of_identity() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut slices = 0;
    for (setup, kernel, n) in covered_setups() {
        let grid = Grid::new(n).unwrap();
        for t in setup.interior_times() {
            worst = worst.max(resolution_residual(&setup, grid, t, &kernel).unwrap());
            slices += 1;
        }
    }
    outcome(worst <= 1e-12, format!("100 setups, {slices} slices, max residual {worst:.3e} (tol 1e-12)"))
}

fn algebra_laws() -> Outcome {
    let mut r = rng(1006);
    let mut failures = Vec::new();
    let mut law = |name: &str, ok: &mut dyn FnMut(&mut ChaCha8Rng) -> bool| {
        let bad = (0..200).filter(|_| !ok(&mut r)).count();
        if bad > 0 {
            failures.push(format!("{name}: {bad}/200"));
        }
    };
    law("and associativity", &mut |r| {
        let (a, b, c) = gen::chainable_triple(r, 4, 2, 3);
        let left = and(&a, &b).and_then(|ab| and(&ab, &c));
        left.is_some() && left == and(&b, &c).and_then(|bc| and(&a, &bc))
    });
    law("or associativity", &mut |r| {
        let n = r.random_range(3..=4);
        let (a, b, c) = gen::joinable_triple(r, n, 6, 3);
        let left = or(&a, &b).and_then(|ab| or(&ab, &c));
        left.is_some() && left == or(&b, &c).and_then(|bc| or(&a, &bc))
    });
    law("left distributivity", &mut |r| {
        let (a, b, c) = gen::left_distributive_triple(r, 4, 3, 3);
        let left = or(&b, &c).and_then(|bc| and(&a, &bc));
        let right = match (and(&a, &b), and(&a, &c)) {
            (Some(ab), Some(ac)) => or(&ab, &ac),
            _ => None,
        };
        left.is_some() && left == right
    });
    law("right distributivity", &mut |r| {
        let (a, b, c) = gen::right_distributive_triple(r, 4, 3, 3);
        let left = or(&b, &c).and_then(|bc| and(&bc, &a));
        let right = match (and(&b, &a), and(&c, &a)) {
            (Some(ba), Some(ca)) => or(&ba, &ca),
            _ => None,
        };
        left.is_some() && left == right
    });
    law("reversed and", &mut |r| {
        let (later, earlier) = gen::chainable_pair(r, 4, 3, 3);
        and(&later, &earlier).is_some() && and(&earlier, &later).is_none()
    });
    if failures.is_empty() {
        outcome(true, "4 laws x 200 triples hold structurally; 200 reversed compositions rejected")
    } else {
        outcome(false, failures.join("; "))
    }
}

fn functional_equations() -> Outcome {
    let mut notes = Vec::new();
    let mut passed = true;
    for xi in [
        Regraduator::identity(),
        Regraduator::linear(Complex64::new(0.7, -1.3)).unwrap(),
        Regraduator::odd_power(1),
        Regraduator::odd_power(2),
    ] {
        let rep = build_sum_rep(&xi);
        let s = |u, v| rep.apply(u, v);
        let stats = check_s_associativity(&s, &sample_triples(&xi, 1000, 77));
        let ok = stats.max <= 1e-9 && stats.evaluated >= 900;
        passed &= ok;
        notes.push(format!("{} {:.1e} ({} of 1000)", xi.name(), stats.max, stats.evaluated));
    }
    for (a, seed) in [(Complex64::new(1.0, 1.0), 78), (Complex64::new(-0.4, 2.2), 79)] {
        let p = |u, v| Ok(a * u * v);
        let res = check_p_constraints(&p, &square_triples(1000, seed));
        let worst = res.associativity.max.max(res.distributivity.max);
        passed &= worst <= 1e-14;
        notes.push(format!("Auv {worst:.1e}"));
    }
    let samples = square_triples(1000, 80);
    let skew = |u, v| Ok(controls::skewed_sum(u, v));
    let additive = |u, v| Ok(controls::additive_product(u, v));
    let controls_min = check_s_associativity(&skew, &samples)
        .max
        .min(check_p_constraints(&additive, &samples).distributivity.max);
    passed &= controls_min > 1e-3;
    notes.push(format!("controls >= {controls_min:.1e}"));
    outcome(passed, format!("{} (tols 1e-9, 1e-14, controls > 1e-3)", notes.join(", ")))
}

fn hermitian(seed: u64, n: usize) -> CMatrix {
    let mut r = rng(seed);
    let m = Array2::from_shape_simple_fn((n, n), || {
        Complex64::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0))
    });
    (&m + &m.t().mapv(|z| z.conj())).mapv(|z| z * 0.5)
}

fn hamiltonian_extraction() -> Outcome {
    let mut worst_round_trip: f64 = 0.0;
    let (mut plain_slopes, mut rich_slopes) = (Vec::new(), Vec::new());
    let eps = logspace(1e-4, 1e-1, 7);
    for seed in 0..5 {
        let h = Hamiltonian::new(hermitian(900 + seed, 4), 1.0).unwrap();
        let family = |e| kernel_from_hamiltonian(&h, e);
        let est = extract_hamiltonian(family, 1e-4, 1.0, 0).unwrap();
        worst_round_trip = worst_round_trip.max(max_abs(&(&est.richardson - h.matrix())));
        let (mut plain, mut rich) = (Vec::new(), Vec::new());
        for &e in &eps {
            let est = extract_hamiltonian(family, e, 1.0, 0).unwrap();
            plain.push(max_abs(&(&est.plain - h.matrix())));
            rich.push(max_abs(&(&est.richardson - h.matrix())));
        }
        plain_slopes.push(loglog_slope(&eps, &plain));
        rich_slopes.push(loglog_slope(&eps, &rich));
    }
    let within = |xs: &[f64], target: f64| xs.iter().all(|s| (s - target).abs() <= 0.1);
    let fmt = |xs: &[f64]| xs.iter().map(|s| format!("{s:.3}")).collect::<Vec<_>>().join(" ");
    outcome(
        worst_round_trip <= 1e-6 && within(&plain_slopes, 1.0) && within(&rich_slopes, 2.0),
        format!(
            "5 Hamiltonians, round trip {worst_round_trip:.2e} (tol 1e-6), plain slopes [{}], richardson slopes [{}]",
            fmt(&plain_slopes),
            fmt(&rich_slopes)
        ),
    )
}

fn linearity_and_falsification() -> Outcome {
    let mut r = rng(1009);
    let mut worst_linear: f64 = 0.0;
    for case in 0..100u64 {
        let n = r.random_range(1..=4);
        let kernel = match case % 3 {
            0 => StepKernel::random_time_dependent(n, 0..6, 9000 + case),
            1 => StepKernel::random(n, 9000 + case),
            _ => StepKernel::dft(n),
        };
        let e = LinearEvolver::new(kernel);
        let psi1 = gen::random_state(&mut r, n, 0);
        let psi2 = gen::random_state(&mut r, n, 0);
        let alpha = Complex64::from_polar(r.random_range(0.1..2.0), r.random_range(-PI..PI));
        let beta = Complex64::from_polar(r.random_range(0.1..2.0), r.random_range(-PI..PI));
        let steps = r.random_range(1..=6);
        worst_linear = worst_linear.max(linearity_residual(&e, &psi1, &psi2, alpha, beta, steps).unwrap());
    }

    let mut least_violation = f64::INFINITY;
    let mut slopes = Vec::new();
    let large = logspace(1e-3, 1.0, 10);
    let small = logspace(1e-4, 1e-2, 5);
    for seed in 0..10 {
        let psi = gen::two_component_state(&mut rng(700 + seed), 4, 0);
        let residual = |l| consistency_residual(&make_nonlinear_evolver(StepKernel::dft(4), l), &psi, 5).unwrap();
        for &l in &large {
            least_violation = least_violation.min(residual(l));
        }
        let ys: Vec<f64> = small.iter().map(|&l| residual(l)).collect();
        slopes.push(loglog_slope(&small, &ys));
    }
    let slope_ok = slopes.iter().all(|s| (s - 1.0).abs() <= 0.1);
    let (lo, hi) = slopes
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &s| (a.min(s), b.max(s)));
    outcome(
        worst_linear <= 1e-12 && least_violation > 1e-6 && slope_ok,
        format!(
            "linear max {worst_linear:.2e} (tol 1e-12); nonlinear min {least_violation:.2e} over lambda in [1e-3, 1] (> 1e-6); slopes in [{lo:.3}, {hi:.3}]"
        ),
    )
}

struct Run {
    code: Option<i32>,
    stdout: String,
    report: Vec<u8>,
}

fn run_cli(args: &[&str], report: &Path) -> Run {
    let mut full: Vec<&str> = args.to_vec();
    let report_arg = report.to_str().unwrap();
    full.extend(["--report", report_arg]);
    let out = Command::new(env!("CARGO_BIN_EXE_ampcalc")).args(&full).output().unwrap();
    Run {
        code: out.status.code(),
        stdout: String::from_utf8(out.stdout).unwrap(),
        report: std::fs::read(report).unwrap_or_default(),
    }
}

fn twice(args: &[&str], dir: &Path, name: &str) -> (Run, bool) {
    let first = run_cli(args, &dir.join(format!("{name}-1.json")));
    let second = run_cli(args, &dir.join(format!("{name}-2.json")));
    let identical = !first.report.is_empty() && first.report == second.report && first.stdout == second.stdout;
    (first, identical)
}

fn cli_examples() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mut notes = Vec::new();
    let mut passed = true;

    let (amp, same) = twice(
        &["amp", "--expr", "[(0,2),{t=1:0},(0,0)]", "--kernel", "hadamard", "--engine", "both"],
        dir.path(),
        "amp",
    );
    let discrepancy: Option<f64> = amp
        .stdout
        .lines()
        .find_map(|l| l.strip_prefix("discrepancy: "))
        .and_then(|d| d.parse().ok());
    let ok = amp.code == Some(0)
        && amp.stdout.contains("paths: 0.5+0i")
        && amp.stdout.contains("matrix: 0.5+0i")
        && discrepancy.is_some_and(|d| d <= 1e-12)
        && same;
    passed &= ok;
    notes.push(format!("amp {}", if ok { "ok" } else { "FAILED" }));

    let (rules, same) = twice(
        &["check-rules", "--sites", "3", "--max-steps", "5", "--cases", "200", "--seed", "42"],
        dir.path(),
        "rules",
    );
    let report: serde_json::Value = serde_json::from_slice(&rules.report).unwrap_or_default();
    let residuals_ok = report["checks"].as_array().is_some_and(|checks| {
        checks.len() == 10
            && checks.iter().all(|c| {
                c["name"] == "oracle_equivalence" || c["max"].as_f64().is_some_and(|m| m <= 1e-12)
            })
    });
    let ok = rules.code == Some(0) && residuals_ok && same;
    passed &= ok;
    notes.push(format!("check-rules {}", if ok { "ok" } else { "FAILED" }));

    let (demo, same) = twice(
        &["nonlinear-demo", "--lambda-sweep", "1e-4:1e-2:5", "--seed", "7"],
        dir.path(),
        "demo",
    );
    let rows: Vec<(f64, f64)> = demo
        .stdout
        .lines()
        .skip(1)
        .filter_map(|l| {
            let (a, b) = l.split_once(',')?;
            Some((a.parse().ok()?, b.parse().ok()?))
        })
        .collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) = rows.into_iter().unzip();
    let slope = loglog_slope(&xs, &ys);
    let ok = demo.code == Some(0)
        && demo.stdout.starts_with("lambda,consistency_residual\n")
        && xs.len() == 5
        && (slope - 1.0).abs() <= 0.1
        && same;
    passed &= ok;
    notes.push(format!("nonlinear-demo {} (slope {slope:.4})", if ok { "ok" } else { "FAILED" }));

    outcome(passed, format!("{}; reports byte-identical across runs", notes.join(", ")))
}

fn main() -> ExitCode {
    type Criterion = (&'static str, fn() -> Outcome);
    let criteria: [Criterion; 10] = [
        ("oracle equivalence", oracle_equivalence),
        ("sum rule", sum_rule),
        ("product rule", product_rule),
        ("full-filter invariance", full_filter_invariance),
        ("resolution of identity", resolution_of_identity),
        ("algebra laws", algebra_laws),
        ("functional equations", functional_equations),
        ("hamiltonian extraction", hamiltonian_extraction),
        ("linearity and falsification", linearity_and_falsification),
        ("cli examples", cli_examples),
    ];
    let mut failed = 0;
    println!();
    for (k, (name, check)) in criteria.iter().enumerate() {
        let result = check();
        if !result.passed {
            failed += 1;
        }
        println!(
            "acceptance {:>2} {:<28} {}  {}",
            k + 1,
            name,
            if result.passed { "PASS" } else { "FAIL" },
            result.detail
        );
    }
    println!("\nacceptance: {} passed, {failed} failed\n", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
