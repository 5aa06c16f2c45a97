//! Residual suites behind the `check-rules`, `check-fe`, `extract-h` and
//! `nonlinear-demo` commands. Each returns a [`RunReport`]; cases run in
//! index order so reports depend only on the flags.

use std::path::Path;
use std::str::FromStr;

use ampcalc_core::amplitude::{engine_discrepancy, resolution_residual, DEFAULT_PATH_BUDGET};
use ampcalc_core::fit::{loglog_slope, logspace};
use ampcalc_core::gen;
use ampcalc_core::linalg::max_abs;
use ampcalc_core::regraduation::{controls, positive_real_triples, sample_triples, square_triples};
use ampcalc_core::{
    amplitude_matrix, and_compose, build_product_rep, build_sum_rep, check_p_constraints,
    check_product_rule, check_s_associativity, check_sum_rule, consistency_residual,
    extract_hamiltonian, full_filter, kernel_from_hamiltonian, make_nonlinear_evolver, or_join,
    AlgebraError, AmplitudeError, Complex64, Grid, Hamiltonian, ProductRep, Regraduator,
    SchrodingerError, Setup, StepKernel,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::kernel_file::{read_kernel_file, KernelFileError, KernelSpec};
use crate::report::{CheckResult, Relation, RunReport, Sweep, F17};

#[derive(Debug, Error)]
pub enum SuiteError {
    #[error(transparent)]
    Kernel(#[from] KernelFileError),
    #[error(transparent)]
    Amplitude(#[from] AmplitudeError),
    #[error(transparent)]
    Schrodinger(#[from] SchrodingerError),
    #[error("{0}")]
    Invalid(String),
}

/// `lo:hi:n`, expanded to `n` log-spaced points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogSweep {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl LogSweep {
    pub fn points(&self) -> Vec<f64> {
        logspace(self.lo, self.hi, self.n)
    }
}

impl FromStr for LogSweep {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        let [lo, hi, n] = parts[..] else {
            return Err(format!("expected lo:hi:n, found '{s}'"));
        };
        let lo: f64 = lo.parse().map_err(|_| format!("invalid lower bound '{lo}'"))?;
        let hi: f64 = hi.parse().map_err(|_| format!("invalid upper bound '{hi}'"))?;
        let n: usize = n.parse().map_err(|_| format!("invalid point count '{n}'"))?;
        if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
            return Err(format!("need 0 < lo <= hi, found {lo}:{hi}"));
        }
        if n < 2 {
            return Err("a sweep needs at least 2 points".to_string());
        }
        Ok(LogSweep { lo, hi, n })
    }
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// 0 when both sides built and agree, infinite otherwise.
fn structural(left: Result<Setup, AlgebraError>, right: Result<Setup, AlgebraError>) -> f64 {
    match (left, right) {
        (Ok(l), Ok(r)) if l == r => 0.0,
        _ => f64::INFINITY,
    }
}

fn or(a: &Setup, b: &Setup) -> Result<Setup, AlgebraError> {
    or_join(a, b).map(|(s, _)| s)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RulesConfig {
    pub sites: usize,
    pub max_steps: i64,
    pub cases: usize,
    pub max_filters: usize,
    pub seed: u64,
    pub kernel: KernelSpec,
}

pub const RULE_TOLERANCE: f64 = 1e-12;

/// Oracle agreement, full-filter invariance, resolution of identity, sum and
/// product rules and the structural algebra laws on seeded random cases.
/// Checks that need more sites or steps than configured are listed under
/// `parameters.skipped`.
pub fn check_rules(cfg: &RulesConfig) -> Result<RunReport, SuiteError> {
    if cfg.sites == 0 || cfg.max_steps < 1 || cfg.cases == 0 {
        return Err(SuiteError::Invalid(
            "check-rules needs --sites >= 1, --max-steps >= 1 and --cases >= 1".into(),
        ));
    }
    let kernel = cfg.kernel.build(Some(cfg.sites))?;
    let grid = Grid::new(cfg.sites).expect("nonzero sites");
    let (n, t, f) = (cfg.sites, cfg.max_steps, cfg.max_filters);
    let tol = ampcalc_core::Tolerances::default();

    let mut report = RunReport::new("check-rules", Some(cfg.kernel.to_string()), Some(cfg.seed));
    report.param("sites", n);
    report.param("max_steps", t);
    report.param("cases", cfg.cases);
    report.param("max_filters", f);
    let mut skipped = Vec::new();

    // Single-setup checks share one stream of setups.
    let mut rng = stream(cfg.seed, 0);
    let (mut oracle, mut oracle_excluded) = (Vec::new(), 0);
    let (mut full, mut full_excluded) = (Vec::new(), 0);
    let (mut resolution, mut resolution_excluded) = (Vec::new(), 0);
    for _ in 0..cfg.cases {
        let setup = gen::random_setup(&mut rng, n, t, f);
        match engine_discrepancy(&setup, &kernel, DEFAULT_PATH_BUDGET) {
            Ok(d) => oracle.push(d),
            Err(AmplitudeError::BudgetExceeded { .. }) => oracle_excluded += 1,
            Err(e) => return Err(e.into()),
        }
        let base = amplitude_matrix(&setup, &kernel)?.value();
        let mut covered = setup.clone();
        for time in setup.interior_times() {
            if setup.filter_at(time).is_none() {
                covered = covered.with_filter(full_filter(grid, time)).expect("free interior time");
            }
        }
        if covered == setup {
            full_excluded += 1;
        } else {
            full.push((amplitude_matrix(&covered, &kernel)?.value() - base).norm());
        }
        if setup.interior_times().is_empty() {
            resolution_excluded += 1;
        } else {
            let mut worst: f64 = 0.0;
            for time in setup.interior_times() {
                worst = worst.max(resolution_residual(&setup, grid, time, &kernel)?);
            }
            resolution.push(worst);
        }
    }
    report.add(CheckResult::new(
        "oracle_equivalence",
        Relation::AtMost,
        tol.oracle_relative,
        &oracle,
        oracle_excluded,
    ));
    report.add(CheckResult::new("full_filter_invariance", Relation::AtMost, RULE_TOLERANCE, &full, full_excluded));
    report.add(CheckResult::new(
        "resolution_of_identity",
        Relation::AtMost,
        RULE_TOLERANCE,
        &resolution,
        resolution_excluded,
    ));

    type Case<'a> = Box<dyn FnMut(&mut ChaCha8Rng) -> Result<f64, SuiteError> + 'a>;
    let k = &kernel;
    let pair_steps = t / 2;
    let checks: Vec<(&str, bool, Case)> = vec![
        (
            "sum_rule",
            n >= 2 && t >= 2,
            Box::new(|rng| {
                let (a, b) = gen::joinable_pair(rng, n, t, f);
                Ok(check_sum_rule(&a, &b, k)?)
            }),
        ),
        (
            "product_rule",
            t >= 2,
            Box::new(|rng| {
                let (later, earlier) = gen::chainable_pair(rng, n, pair_steps, f);
                Ok(check_product_rule(&later, &earlier, k)?)
            }),
        ),
        (
            "and_reversed_rejected",
            t >= 2,
            Box::new(|rng| {
                let (later, earlier) = gen::chainable_pair(rng, n, pair_steps, f);
                Ok(if and_compose(&earlier, &later).is_err() { 0.0 } else { f64::INFINITY })
            }),
        ),
        (
            "and_associativity",
            t >= 3,
            Box::new(|rng| {
                let (a, b, c) = gen::chainable_triple(rng, n, t / 3, f);
                Ok(structural(
                    and_compose(&a, &b).and_then(|ab| and_compose(&ab, &c)),
                    and_compose(&b, &c).and_then(|bc| and_compose(&a, &bc)),
                ))
            }),
        ),
        (
            "or_associativity",
            n >= 3 && t >= 2,
            Box::new(|rng| {
                let (a, b, c) = gen::joinable_triple(rng, n, t, f);
                Ok(structural(
                    or(&a, &b).and_then(|ab| or(&ab, &c)),
                    or(&b, &c).and_then(|bc| or(&a, &bc)),
                ))
            }),
        ),
        (
            "left_distributivity",
            n >= 2 && t >= 4,
            Box::new(|rng| {
                let (a, b, c) = gen::left_distributive_triple(rng, n, pair_steps, f);
                Ok(structural(
                    or(&b, &c).and_then(|bc| and_compose(&a, &bc)),
                    and_compose(&a, &b).and_then(|ab| or(&ab, &and_compose(&a, &c)?)),
                ))
            }),
        ),
        (
            "right_distributivity",
            n >= 2 && t >= 4,
            Box::new(|rng| {
                let (a, b, c) = gen::right_distributive_triple(rng, n, pair_steps, f);
                Ok(structural(
                    or(&b, &c).and_then(|bc| and_compose(&bc, &a)),
                    and_compose(&b, &a).and_then(|ba| or(&ba, &and_compose(&c, &a)?)),
                ))
            }),
        ),
    ];
    for (id, (name, feasible, mut case)) in checks.into_iter().enumerate() {
        if !feasible {
            skipped.push(name);
            continue;
        }
        let mut rng = stream(cfg.seed, id as u64 + 1);
        let values = (0..cfg.cases)
            .map(|_| case(&mut rng))
            .collect::<Result<Vec<f64>, _>>()?;
        report.add(CheckResult::new(name, Relation::AtMost, RULE_TOLERANCE, &values, 0));
    }
    report.param("skipped", skipped);
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeFamily {
    Identity,
    Linear,
    Power3,
    Power5,
    Zeta,
    Controls,
    All,
}

impl FromStr for FeFamily {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "identity" => FeFamily::Identity,
            "linear" => FeFamily::Linear,
            "power3" => FeFamily::Power3,
            "power5" => FeFamily::Power5,
            "zeta" => FeFamily::Zeta,
            "controls" => FeFamily::Controls,
            "all" => FeFamily::All,
            _ => {
                return Err(format!(
                    "unknown family '{s}' (expected identity | linear | power3 | power5 | zeta | controls | all)"
                ))
            }
        })
    }
}

impl FeFamily {
    pub fn name(self) -> &'static str {
        match self {
            FeFamily::Identity => "identity",
            FeFamily::Linear => "linear",
            FeFamily::Power3 => "power3",
            FeFamily::Power5 => "power5",
            FeFamily::Zeta => "zeta",
            FeFamily::Controls => "controls",
            FeFamily::All => "all",
        }
    }
}

pub const LINEAR_LAMBDA: Complex64 = Complex64::new(0.7, -1.3);
pub const ZETA_A: Complex64 = Complex64::new(1.0, 1.0);
pub const ZETA_C: f64 = 2.0;
pub const SUM_TOLERANCE: f64 = 1e-9;
pub const CLOSED_FORM_TOLERANCE: f64 = 1e-14;
pub const ZETA_PATH_TOLERANCE: f64 = 1e-12;
pub const CONTROL_THRESHOLD: f64 = 1e-3;

fn residual_values(
    s: &dyn Fn(Complex64, Complex64) -> Option<f64>,
    samples: &[(Complex64, Complex64, Complex64)],
) -> (Vec<f64>, usize) {
    let mut values = Vec::new();
    let mut excluded = 0;
    for &(u, v, _) in samples {
        match s(u, v) {
            Some(x) => values.push(x),
            None => excluded += 1,
        }
    }
    (values, excluded)
}

/// Associativity of regraduated sums, the product constraints and the
/// negative controls.
pub fn check_fe(family: FeFamily, samples: usize, seed: u64) -> Result<RunReport, SuiteError> {
    if samples == 0 {
        return Err(SuiteError::Invalid("check-fe needs --samples >= 1".into()));
    }
    let mut report = RunReport::new("check-fe", None, Some(seed));
    report.param("family", family.name());
    report.param("samples", samples);

    let mut sums = Vec::new();
    if matches!(family, FeFamily::Identity | FeFamily::All) {
        sums.push(Regraduator::identity());
    }
    if matches!(family, FeFamily::Linear | FeFamily::All) {
        report.param("linear_lambda", vec![LINEAR_LAMBDA.re, LINEAR_LAMBDA.im]);
        sums.push(Regraduator::linear(LINEAR_LAMBDA).expect("nonzero"));
    }
    if matches!(family, FeFamily::Power3 | FeFamily::All) {
        sums.push(Regraduator::odd_power(1));
    }
    if matches!(family, FeFamily::Power5 | FeFamily::All) {
        sums.push(Regraduator::odd_power(2));
    }
    for r in &sums {
        let rep = build_sum_rep(r);
        let s = |u, v| rep.apply(u, v);
        let stats = check_s_associativity(&s, &sample_triples(r, samples, seed));
        add_stats(&mut report, &format!("sum_associativity[{}]", r.name()), SUM_TOLERANCE, &stats);
    }

    if matches!(family, FeFamily::Zeta | FeFamily::All) {
        report.param("zeta_a", vec![ZETA_A.re, ZETA_A.im]);
        report.param("zeta_c", ZETA_C);
        let rep = ProductRep::new(ZETA_A, ZETA_C).expect("valid constants");
        let map = build_product_rep(rep);
        let closed = |u, v| Ok(ZETA_A * u * v);
        let square = square_triples(samples, seed);
        let r = check_p_constraints(&closed, &square);
        add_stats(&mut report, "product_associativity[closed_form]", CLOSED_FORM_TOLERANCE, &r.associativity);
        add_stats(&mut report, "product_distributivity[closed_form]", CLOSED_FORM_TOLERANCE, &r.distributivity);

        let positive = positive_real_triples(samples, seed);
        let (values, excluded) = residual_values(
            &|u, v| map.apply(u, v).ok().map(|p| (p - map.closed_form(u, v)).norm()),
            &positive,
        );
        report.add(CheckResult::new(
            "zeta_path_matches_closed_form",
            Relation::AtMost,
            ZETA_PATH_TOLERANCE,
            &values,
            excluded,
        ));
    }

    if matches!(family, FeFamily::Controls | FeFamily::All) {
        let square = square_triples(samples, seed);
        let skew = |u, v| Ok(controls::skewed_sum(u, v));
        let stats = check_s_associativity(&skew, &square);
        add_control(&mut report, "control_associativity[skewed_sum]", &stats);
        let additive = |u, v| Ok(controls::additive_product(u, v));
        let stats = check_p_constraints(&additive, &square).distributivity;
        add_control(&mut report, "control_distributivity[additive_product]", &stats);
        let sq = controls::squared_product(ZETA_A);
        let squared = |u, v| Ok(sq(u, v));
        let stats = check_p_constraints(&squared, &square).associativity;
        add_control(&mut report, "control_associativity[squared_product]", &stats);
    }
    Ok(report)
}

fn stats_check(name: &str, relation: Relation, tolerance: f64, stats: &ampcalc_core::ResidualStats) -> CheckResult {
    let single = if stats.evaluated > 0 { vec![stats.max] } else { vec![] };
    let mut check = CheckResult::new(name, relation, tolerance, &single, stats.excluded);
    check.mean = F17(if stats.evaluated > 0 { stats.mean } else { f64::NAN });
    check.min = F17(f64::NAN);
    check.cases = stats.evaluated;
    check
}

fn add_stats(report: &mut RunReport, name: &str, tolerance: f64, stats: &ampcalc_core::ResidualStats) {
    report.add(stats_check(name, Relation::AtMost, tolerance, stats));
}

fn add_control(report: &mut RunReport, name: &str, stats: &ampcalc_core::ResidualStats) {
    report.add(stats_check(name, Relation::MaxExceeds, CONTROL_THRESHOLD, stats));
}

pub const ROUND_TRIP_TOLERANCE: f64 = 1e-6;
pub const SLOPE_TOLERANCE: f64 = 0.1;

/// Builds `K(ε) = exp(iεH/ħ)` from the Hamiltonian in `path`, reads H back
/// over the sweep and fits the convergence orders of both estimates.
pub fn extract_h(path: &Path, sweep: LogSweep, hbar: f64) -> Result<RunReport, SuiteError> {
    let kernel = read_kernel_file(path)?;
    let matrix = kernel
        .default_matrix()
        .filter(|_| kernel.is_time_invariant())
        .ok_or_else(|| SuiteError::Invalid("the Hamiltonian file must hold a single matrix".into()))?
        .clone();
    let h = Hamiltonian::new(matrix, hbar)?;
    let family = |e| kernel_from_hamiltonian(&h, e);

    let mut report = RunReport::new("extract-h", None, None);
    report.param("hamiltonian", path.display().to_string());
    report.param("hbar", hbar);
    report.param("eps_sweep", format!("{}:{}:{}", sweep.lo, sweep.hi, sweep.n));

    let mut table = Sweep::new(&[
        "eps",
        "plain_error",
        "richardson_error",
        "plain_error_estimate",
        "richardson_error_estimate",
    ]);
    let eps = sweep.points();
    let (mut plain, mut rich) = (Vec::new(), Vec::new());
    for &e in &eps {
        let est = extract_hamiltonian(family, e, hbar, 0)?;
        let p = max_abs(&(&est.plain - h.matrix()));
        let r = max_abs(&(&est.richardson - h.matrix()));
        table.push(&[e, p, r, est.plain_error_estimate, est.richardson_error_estimate]);
        plain.push(p);
        rich.push(r);
    }
    report.add(CheckResult::new(
        "round_trip[richardson, eps=lo]",
        Relation::AtMost,
        ROUND_TRIP_TOLERANCE,
        &rich[..1],
        0,
    ));
    report.add(CheckResult::new(
        "slope[plain]",
        Relation::Within { target: F17(1.0) },
        SLOPE_TOLERANCE,
        &[loglog_slope(&eps, &plain)],
        0,
    ));
    report.add(CheckResult::new(
        "slope[richardson]",
        Relation::Within { target: F17(2.0) },
        SLOPE_TOLERANCE,
        &[loglog_slope(&eps, &rich)],
        0,
    ));
    report.sweep = Some(table);
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct NonlinearConfig {
    pub sweep: LogSweep,
    pub seed: u64,
    pub kernel: KernelSpec,
    pub sites: usize,
    pub steps: u32,
}

pub const NONLINEAR_FLOOR: f64 = 1e-6;
pub const NONLINEAR_FLOOR_FROM: f64 = 1e-3;
pub const LINEAR_CONTROL_TOLERANCE: f64 = 1e-12;

/// Consistency residual of the nonlinear evolver on a seeded two-component
/// state across the λ sweep, with λ = 0 as the linear control.
pub fn nonlinear_demo(cfg: &NonlinearConfig) -> Result<RunReport, SuiteError> {
    if cfg.sites < 2 || cfg.steps == 0 {
        return Err(SuiteError::Invalid("nonlinear-demo needs --sites >= 2 and --steps >= 1".into()));
    }
    let kernel: StepKernel = cfg.kernel.build(Some(cfg.sites))?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let psi = gen::two_component_state(&mut rng, cfg.sites, 0);

    let mut report = RunReport::new("nonlinear-demo", Some(cfg.kernel.to_string()), Some(cfg.seed));
    report.param("sites", cfg.sites);
    report.param("steps", cfg.steps);
    report.param(
        "lambda_sweep",
        format!("{}:{}:{}", cfg.sweep.lo, cfg.sweep.hi, cfg.sweep.n),
    );

    let residual = |lambda: f64| {
        consistency_residual(&make_nonlinear_evolver(kernel.clone(), lambda), &psi, cfg.steps)
    };
    let lambdas = cfg.sweep.points();
    let mut table = Sweep::new(&["lambda", "consistency_residual"]);
    let mut residuals = Vec::new();
    for &l in &lambdas {
        let r = residual(l)?;
        table.push(&[l, r]);
        residuals.push(r);
    }
    report.add(CheckResult::new(
        "linear_control[lambda=0]",
        Relation::AtMost,
        LINEAR_CONTROL_TOLERANCE,
        &[residual(0.0)?],
        0,
    ));
    let large: Vec<f64> = lambdas
        .iter()
        .zip(&residuals)
        .filter(|(l, _)| **l >= NONLINEAR_FLOOR_FROM)
        .map(|(_, r)| *r)
        .collect();
    if !large.is_empty() {
        report.add(CheckResult::new(
            "violation[lambda>=1e-3]",
            Relation::AllExceed,
            NONLINEAR_FLOOR,
            &large,
            0,
        ));
    }
    report.add(CheckResult::new(
        "slope[loglog]",
        Relation::Within { target: F17(1.0) },
        SLOPE_TOLERANCE,
        &[loglog_slope(&lambdas, &residuals)],
        0,
    ));
    report.sweep = Some(table);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_parsing() {
        let s: LogSweep = "1e-4:1e-2:5".parse().unwrap();
        assert_eq!(s, LogSweep { lo: 1e-4, hi: 1e-2, n: 5 });
        assert_eq!(s.points().len(), 5);
        for bad in ["1e-4:1e-2", "0:1:3", "1:0.5:3", "1e-4:1e-2:1", "a:1:3"] {
            assert!(bad.parse::<LogSweep>().is_err(), "{bad}");
        }
    }

    #[test]
    fn small_rules_run_passes() {
        let cfg = RulesConfig {
            sites: 3,
            max_steps: 4,
            cases: 20,
            max_filters: 3,
            seed: 1,
            kernel: KernelSpec::Random(1),
        };
        let report = check_rules(&cfg).unwrap();
        assert!(report.passed, "{}", report.to_json());
        assert_eq!(report.checks.len(), 10);
        assert_eq!(check_rules(&cfg).unwrap().to_json(), report.to_json());
    }

    #[test]
    fn tiny_grids_skip_checks() {
        let cfg = RulesConfig {
            sites: 1,
            max_steps: 1,
            cases: 5,
            max_filters: 3,
            seed: 1,
            kernel: KernelSpec::Identity,
        };
        let report = check_rules(&cfg).unwrap();
        assert_eq!(report.checks.len(), 3);
        assert_eq!(report.parameters["skipped"].as_array().unwrap().len(), 7);
    }

    #[test]
    fn fe_all_passes() {
        let report = check_fe(FeFamily::All, 200, 5).unwrap();
        assert!(report.passed, "{}", report.to_json());
        assert_eq!(report.checks.len(), 4 + 3 + 3);
    }

    #[test]
    fn demo_passes() {
        let cfg = NonlinearConfig {
            sweep: "1e-4:1e-2:5".parse().unwrap(),
            seed: 7,
            kernel: KernelSpec::Dft,
            sites: 4,
            steps: 5,
        };
        let report = nonlinear_demo(&cfg).unwrap();
        assert!(report.passed, "{}", report.to_json());
        assert_eq!(report.sweep.unwrap().rows.len(), 5);
    }
}
