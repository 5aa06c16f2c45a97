//! Amplitude assignment for setups.
//!
//! Two independent engines compute ψ(setup) from a [`StepKernel`]:
//!
//! * [`amplitude_paths`] enumerates every site path allowed by the filters
//!   and sums the products of one-step amplitudes along each path. It is
//!   exponential in the number of steps and serves as the oracle.
//! * [`amplitude_matrix`] multiplies the step matrices in time order,
//!   inserting a 0/1 diagonal projection at each filter.
//!
//! Their agreement, together with the sum/product rule residuals, is what
//! the property suites check.

use std::fmt;
use std::ops::{Add, Mul};

use num_complex::Complex64;
use thiserror::Error;

use crate::algebra::{and_compose, or_join, AlgebraError};
use crate::kernel::{KernelError, StepKernel};
use crate::lattice::{Event, Grid, Setup, SetupError};
use crate::linalg::{identity, CMatrix};

/// Default path budget for the enumeration engine.
pub const DEFAULT_PATH_BUDGET: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AmplitudeError {
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error(transparent)]
    Setup(#[from] SetupError),
    #[error("site {site} out of range for a kernel on {num_sites} sites")]
    SiteOutOfRange { site: usize, num_sites: usize },
    #[error("{paths} paths exceed the budget of {budget}; use the matrix engine")]
    BudgetExceeded { paths: u128, budget: u64 },
    #[error("time {time} is not strictly between {source_time} and {sink_time}")]
    TimeOutOfRange {
        time: i64,
        source_time: i64,
        sink_time: i64,
    },
}

/// Tolerances used by the rule checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Relative bound for path-vs-matrix agreement, scaled by `1 + |ψ|`.
    pub oracle_relative: f64,
    /// Absolute bound for exact algebraic identities on unit-scale kernels.
    pub identity_absolute: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            oracle_relative: 1e-10,
            identity_absolute: 1e-12,
        }
    }
}

/// A complex number assigned to a setup.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Amplitude(pub Complex64);

impl Amplitude {
    pub fn value(self) -> Complex64 {
        self.0
    }

    pub fn norm(self) -> f64 {
        self.0.norm()
    }
}

impl From<Complex64> for Amplitude {
    fn from(z: Complex64) -> Self {
        Amplitude(z)
    }
}

impl Add for Amplitude {
    type Output = Amplitude;
    fn add(self, rhs: Amplitude) -> Amplitude {
        Amplitude(self.0 + rhs.0)
    }
}

impl Mul for Amplitude {
    type Output = Amplitude;
    fn mul(self, rhs: Amplitude) -> Amplitude {
        Amplitude(self.0 * rhs.0)
    }
}

impl fmt::Display for Amplitude {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

fn check_sites(setup: &Setup, kernel: &StepKernel) -> Result<(), AmplitudeError> {
    let site = setup.max_site();
    if site >= kernel.num_sites() {
        return Err(AmplitudeError::SiteOutOfRange {
            site,
            num_sites: kernel.num_sites(),
        });
    }
    Ok(())
}

/// Number of paths the enumeration engine would visit (saturating).
pub fn path_count(setup: &Setup, num_sites: usize) -> u128 {
    setup.interior_times().fold(1u128, |acc, t| {
        let choices = setup.filter_at(t).map_or(num_sites, |f| f.num_open());
        acc.saturating_mul(choices as u128)
    })
}

/// Path-sum engine: ψ = Σ over allowed paths of Π K_t[x_{t+1}, x_t].
///
/// Paths are visited in lexicographic order of their interior sites and
/// summed left to right, so the result is bit-reproducible.
pub fn amplitude_paths(
    setup: &Setup,
    kernel: &StepKernel,
    budget: u64,
) -> Result<Amplitude, AmplitudeError> {
    check_sites(setup, kernel)?;
    let paths = path_count(setup, kernel.num_sites());
    if paths > budget as u128 {
        return Err(AmplitudeError::BudgetExceeded { paths, budget });
    }
    let steps: Vec<&CMatrix> = (setup.source().time..setup.sink().time)
        .map(|t| kernel.matrix_at(t))
        .collect::<Result<_, _>>()?;
    let all_sites: Vec<usize> = (0..kernel.num_sites()).collect();
    let choices: Vec<&[usize]> = setup
        .interior_times()
        .map(|t| setup.filter_at(t).map_or(all_sites.as_slice(), |f| f.open_sites()))
        .collect();

    let (x_i, x_f) = (setup.source().site, setup.sink().site);
    // Odometer over interior positions; the last position varies fastest.
    let mut digits = vec![0usize; choices.len()];
    let mut total = Complex64::new(0.0, 0.0);
    loop {
        let mut prev = x_i;
        let mut prod = Complex64::new(1.0, 0.0);
        for (k, step) in steps.iter().enumerate() {
            let next = if k < choices.len() {
                choices[k][digits[k]]
            } else {
                x_f
            };
            prod *= step[[next, prev]];
            prev = next;
        }
        total += prod;

        let mut k = digits.len();
        loop {
            if k == 0 {
                return Ok(Amplitude(total));
            }
            k -= 1;
            digits[k] += 1;
            if digits[k] < choices[k].len() {
                break;
            }
            digits[k] = 0;
        }
    }
}

/// Time-ordered product `P_{t_f-1} K_{t_f-1} ... P_{t_i+1} K_{t_i}`, where
/// `P_t` zeroes the rows of closed sites at a filter time.
pub fn transfer_matrix(setup: &Setup, kernel: &StepKernel) -> Result<CMatrix, AmplitudeError> {
    check_sites(setup, kernel)?;
    let zero = Complex64::new(0.0, 0.0);
    let mut acc = identity(kernel.num_sites());
    for t in setup.source().time..setup.sink().time {
        acc = kernel.matrix_at(t)?.dot(&acc);
        if let Some(filter) = setup.filter_at(t + 1) {
            for (site, mut row) in acc.rows_mut().into_iter().enumerate() {
                if !filter.is_open(site) {
                    row.fill(zero);
                }
            }
        }
    }
    Ok(acc)
}

/// Matrix engine: the `(sink, source)` entry of [`transfer_matrix`].
pub fn amplitude_matrix(setup: &Setup, kernel: &StepKernel) -> Result<Amplitude, AmplitudeError> {
    let m = transfer_matrix(setup, kernel)?;
    Ok(Amplitude(m[[setup.sink().site, setup.source().site]]))
}

/// One branch of a slice decomposition: the setup forced through `site` at
/// the slice time, split into the part after and the part before it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SlicePair {
    pub site: usize,
    pub later: Setup,
    pub earlier: Setup,
}

/// Splits `setup` at interior time `time` into one `(later, earlier)` pair per
/// admissible site: the holes of an existing filter at `time`, or every
/// grid site otherwise.
///
/// Or-joining `and_compose(later, earlier)` over all pairs reproduces the
/// setup, with a full filter at `time` when none was there.
pub fn slice_decompose(setup: &Setup, grid: Grid, time: i64) -> Result<Vec<SlicePair>, AmplitudeError> {
    if time <= setup.source().time || time >= setup.sink().time {
        return Err(AmplitudeError::TimeOutOfRange {
            time,
            source_time: setup.source().time,
            sink_time: setup.sink().time,
        });
    }
    setup.check_grid(grid)?;
    let sites: Vec<usize> = match setup.filter_at(time) {
        Some(f) => f.open_sites().to_vec(),
        None => grid.sites().collect(),
    };
    let (before, after): (Vec<_>, Vec<_>) = setup
        .filters()
        .iter()
        .filter(|f| f.time() != time)
        .cloned()
        .partition(|f| f.time() < time);
    Ok(sites
        .into_iter()
        .map(|site| {
            let junction = Event::new(site, time);
            SlicePair {
                site,
                later: Setup::from_parts(junction, after.clone(), setup.sink()),
                earlier: Setup::from_parts(setup.source(), before.clone(), junction),
            }
        })
        .collect())
}

/// `|Σ_x ψ(later_x) ψ(earlier_x) − ψ(setup)|` using the matrix engine.
pub fn resolution_residual(
    setup: &Setup,
    grid: Grid,
    time: i64,
    kernel: &StepKernel,
) -> Result<f64, AmplitudeError> {
    let whole = amplitude_matrix(setup, kernel)?.value();
    let mut sum = Complex64::new(0.0, 0.0);
    for pair in slice_decompose(setup, grid, time)? {
        sum += amplitude_matrix(&pair.later, kernel)?.value()
            * amplitude_matrix(&pair.earlier, kernel)?.value();
    }
    Ok((sum - whole).norm())
}

/// `|ψ(a∨b) − ψ(a) − ψ(b)|`.
pub fn check_sum_rule(a: &Setup, b: &Setup, kernel: &StepKernel) -> Result<f64, AmplitudeError> {
    let (joined, _) = or_join(a, b)?;
    let lhs = amplitude_matrix(&joined, kernel)?;
    let rhs = amplitude_matrix(a, kernel)? + amplitude_matrix(b, kernel)?;
    Ok((lhs.value() - rhs.value()).norm())
}

/// `|ψ(ab) − ψ(a)ψ(b)|` with `a` the later setup.
pub fn check_product_rule(
    later: &Setup,
    earlier: &Setup,
    kernel: &StepKernel,
) -> Result<f64, AmplitudeError> {
    let composed = and_compose(later, earlier)?;
    let lhs = amplitude_matrix(&composed, kernel)?;
    let rhs = amplitude_matrix(later, kernel)? * amplitude_matrix(earlier, kernel)?;
    Ok((lhs.value() - rhs.value()).norm())
}

/// `|ψ_matrix − ψ_paths| / (1 + |ψ_paths|)`.
pub fn engine_discrepancy(
    setup: &Setup,
    kernel: &StepKernel,
    budget: u64,
) -> Result<f64, AmplitudeError> {
    let paths = amplitude_paths(setup, kernel, budget)?;
    let matrix = amplitude_matrix(setup, kernel)?;
    Ok((matrix.value() - paths.value()).norm() / (1.0 + paths.norm()))
}
