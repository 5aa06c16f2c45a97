//! Wave functions, Hamiltonians, and evolution maps.
//!
//! Sign convention: `∂ψ(x_f, t'; x, t)/∂t' |_{t'=t} = (i/ħ) H(x_f, x, t)`, so a
//! one-step kernel is `K(ε) = exp(iεH/ħ) ≈ I + iεH/ħ`.
//!
//! The residual functions compare two ways of computing the same evolved
//! state. For kernel (matrix) evolution they agree to rounding; for the
//! sitewise nonlinear phase map they do not.

use std::fmt;

use ndarray::Array1;
use num_complex::Complex64;
use thiserror::Error;

use crate::kernel::{KernelError, StepKernel};
use crate::linalg::{expm, identity, max_abs, CMatrix};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SchrodingerError {
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error("wave function must have at least one site")]
    Empty,
    #[error("wave function has a non-finite entry")]
    NonFinite,
    #[error("state has {found} sites, expected {expected}")]
    SizeMismatch { expected: usize, found: usize },
    #[error("states are at different times ({0} and {1})")]
    TimeMismatch(i64, i64),
    #[error("Hamiltonian matrix must be square with finite entries")]
    InvalidHamiltonian,
    #[error("ħ must be positive and finite")]
    InvalidHbar,
    #[error("step size must be positive and finite, got {0}")]
    InvalidStep(f64),
    #[error("kernel is too far from the identity for derivative extraction (‖K(ε) − I‖ = {0})")]
    SingularFamily(f64),
}

/// Ψ(x, t): complex values over the sites at one time. Not normalized.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveFunction {
    values: Array1<Complex64>,
    time: i64,
}

impl WaveFunction {
    pub fn new(values: impl Into<Array1<Complex64>>, time: i64) -> Result<Self, SchrodingerError> {
        let values = values.into();
        if values.is_empty() {
            return Err(SchrodingerError::Empty);
        }
        if values.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(SchrodingerError::NonFinite);
        }
        Ok(WaveFunction { values, time })
    }

    /// Unit amplitude at `site`, zero elsewhere.
    pub fn delta(num_sites: usize, site: usize, time: i64) -> Self {
        assert!(site < num_sites, "delta site out of range");
        let mut values = Array1::zeros(num_sites);
        values[site] = Complex64::new(1.0, 0.0);
        WaveFunction { values, time }
    }

    pub fn values(&self) -> &Array1<Complex64> {
        &self.values
    }

    pub fn time(&self) -> i64 {
        self.time
    }

    pub fn num_sites(&self) -> usize {
        self.values.len()
    }

    /// `α·self + β·other`; both states must share grid and time.
    pub fn superpose(
        &self,
        alpha: Complex64,
        other: &WaveFunction,
        beta: Complex64,
    ) -> Result<WaveFunction, SchrodingerError> {
        self.check_compatible(other)?;
        Ok(WaveFunction {
            values: self.values.mapv(|z| alpha * z) + other.values.mapv(|z| beta * z),
            time: self.time,
        })
    }

    /// Max-norm distance between two states on the same grid.
    pub fn max_distance(&self, other: &WaveFunction) -> Result<f64, SchrodingerError> {
        self.check_size(other.num_sites())?;
        Ok(self
            .values
            .iter()
            .zip(other.values.iter())
            .fold(0.0, |acc, (a, b)| acc.max((a - b).norm())))
    }

    fn check_size(&self, n: usize) -> Result<(), SchrodingerError> {
        if self.num_sites() != n {
            return Err(SchrodingerError::SizeMismatch {
                expected: n,
                found: self.num_sites(),
            });
        }
        Ok(())
    }

    fn check_compatible(&self, other: &WaveFunction) -> Result<(), SchrodingerError> {
        self.check_size(other.num_sites())?;
        if self.time != other.time {
            return Err(SchrodingerError::TimeMismatch(self.time, other.time));
        }
        Ok(())
    }
}

impl fmt::Display for WaveFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "t={} [", self.time)?;
        for (k, z) in self.values.iter().enumerate() {
            if k > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{z}")?;
        }
        write!(f, "]")
    }
}

/// H(x_f, x, t) and the scale constant ħ. Hermiticity is not required.
#[derive(Debug, Clone, PartialEq)]
pub struct Hamiltonian {
    matrix: CMatrix,
    hbar: f64,
}

impl Hamiltonian {
    pub fn new(matrix: CMatrix, hbar: f64) -> Result<Self, SchrodingerError> {
        if matrix.nrows() != matrix.ncols()
            || matrix.is_empty()
            || matrix.iter().any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(SchrodingerError::InvalidHamiltonian);
        }
        if !(hbar > 0.0 && hbar.is_finite()) {
            return Err(SchrodingerError::InvalidHbar);
        }
        Ok(Hamiltonian { matrix, hbar })
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn num_sites(&self) -> usize {
        self.matrix.nrows()
    }
}

/// `exp(iεH/ħ)` as a time-invariant kernel.
pub fn kernel_from_hamiltonian(h: &Hamiltonian, eps: f64) -> Result<StepKernel, SchrodingerError> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(SchrodingerError::InvalidStep(eps));
    }
    let generator = h.matrix.mapv(|z| Complex64::new(0.0, eps / h.hbar) * z);
    Ok(StepKernel::constant(expm(&generator))?)
}

/// Finite-difference reading of H from a kernel family `ε ↦ K(ε)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianEstimate {
    pub eps: f64,
    /// `(ħ/(iε)) (K(ε) − I)`, first order in ε.
    pub plain: CMatrix,
    /// `2·H_est(ε/2) − H_est(ε)`, second order in ε.
    pub richardson: CMatrix,
    /// `‖richardson − plain‖`, an estimate of the plain error.
    pub plain_error_estimate: f64,
    /// `(4/3)‖R(ε) − R(ε/2)‖`, an estimate of the Richardson error.
    pub richardson_error_estimate: f64,
}

fn difference_quotient(k: &CMatrix, eps: f64, hbar: f64) -> Result<CMatrix, SchrodingerError> {
    let n = k.nrows();
    let offset = k - &identity(n);
    let size = max_abs(&offset);
    if size > 0.5 {
        return Err(SchrodingerError::SingularFamily(size));
    }
    let factor = Complex64::new(0.0, -hbar / eps);
    Ok(offset.mapv(|z| factor * z))
}

/// Reads H off the kernel family at time `time`. The family is evaluated at
/// `ε`, `ε/2` and `ε/4`. Distances use the max-entry norm.
pub fn extract_hamiltonian<F>(
    family: F,
    eps: f64,
    hbar: f64,
    time: i64,
) -> Result<HamiltonianEstimate, SchrodingerError>
where
    F: Fn(f64) -> Result<StepKernel, SchrodingerError>,
{
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(SchrodingerError::InvalidStep(eps));
    }
    if !(hbar > 0.0 && hbar.is_finite()) {
        return Err(SchrodingerError::InvalidHbar);
    }
    let quotient = |e: f64| -> Result<CMatrix, SchrodingerError> {
        let k = family(e)?;
        difference_quotient(k.matrix_at(time)?, e, hbar)
    };
    let h1 = quotient(eps)?;
    let h2 = quotient(eps / 2.0)?;
    let h4 = quotient(eps / 4.0)?;
    let richardson = h2.mapv(|z| 2.0 * z) - &h1;
    let richardson_half = h4.mapv(|z| 2.0 * z) - &h2;
    Ok(HamiltonianEstimate {
        eps,
        plain_error_estimate: max_abs(&(&richardson - &h1)),
        richardson_error_estimate: 4.0 / 3.0 * max_abs(&(&richardson - &richardson_half)),
        plain: h1,
        richardson,
    })
}

/// Applies the kernel `steps` times: Ψ(t + steps) = K_{t+steps-1} ··· K_t Ψ(t).
pub fn propagate(
    psi: &WaveFunction,
    kernel: &StepKernel,
    steps: u32,
) -> Result<WaveFunction, SchrodingerError> {
    psi.check_size(kernel.num_sites())?;
    let mut values = psi.values.clone();
    for t in psi.time..psi.time + steps as i64 {
        values = kernel.matrix_at(t)?.dot(&values);
    }
    Ok(WaveFunction {
        values,
        time: psi.time + steps as i64,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EvolverKind {
    LinearKernel,
    Nonlinear { lambda: f64 },
    Other,
}

/// A one-step state map.
pub trait Evolver {
    fn step(&self, psi: &WaveFunction) -> Result<WaveFunction, SchrodingerError>;

    fn kind(&self) -> EvolverKind {
        EvolverKind::Other
    }

    fn evolve(&self, psi: &WaveFunction, steps: u32) -> Result<WaveFunction, SchrodingerError> {
        (0..steps).try_fold(psi.clone(), |state, _| self.step(&state))
    }
}

/// One kernel application per step.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearEvolver {
    kernel: StepKernel,
}

impl LinearEvolver {
    pub fn new(kernel: StepKernel) -> Self {
        LinearEvolver { kernel }
    }
}

impl Evolver for LinearEvolver {
    fn step(&self, psi: &WaveFunction) -> Result<WaveFunction, SchrodingerError> {
        propagate(psi, &self.kernel, 1)
    }

    fn kind(&self) -> EvolverKind {
        EvolverKind::LinearKernel
    }
}

/// Kernel application followed by `Ψ_x ↦ Ψ_x exp(iλ|Ψ_x|²)` at every site.
#[derive(Debug, Clone, PartialEq)]
pub struct NonlinearEvolver {
    kernel: StepKernel,
    lambda: f64,
}

impl Evolver for NonlinearEvolver {
    fn step(&self, psi: &WaveFunction) -> Result<WaveFunction, SchrodingerError> {
        let mut next = propagate(psi, &self.kernel, 1)?;
        let lambda = self.lambda;
        next.values
            .mapv_inplace(|z| z * Complex64::from_polar(1.0, lambda * z.norm_sqr()));
        Ok(next)
    }

    fn kind(&self) -> EvolverKind {
        EvolverKind::Nonlinear {
            lambda: self.lambda,
        }
    }
}

pub fn make_nonlinear_evolver(kernel: StepKernel, lambda: f64) -> NonlinearEvolver {
    NonlinearEvolver { kernel, lambda }
}

/// `‖E(αΨ₁ + βΨ₂) − αE(Ψ₁) − βE(Ψ₂)‖_∞` after `steps` steps.
pub fn linearity_residual(
    e: &dyn Evolver,
    psi1: &WaveFunction,
    psi2: &WaveFunction,
    alpha: Complex64,
    beta: Complex64,
    steps: u32,
) -> Result<f64, SchrodingerError> {
    let whole = e.evolve(&psi1.superpose(alpha, psi2, beta)?, steps)?;
    let parts = e
        .evolve(psi1, steps)?
        .superpose(alpha, &e.evolve(psi2, steps)?, beta)?;
    whole.max_distance(&parts)
}

/// `‖E(Ψ) − Σ_x Ψ(x) E(δ_x)‖_∞`: evolving the state versus evolving its
/// site decomposition.
pub fn consistency_residual(
    e: &dyn Evolver,
    psi: &WaveFunction,
    steps: u32,
) -> Result<f64, SchrodingerError> {
    let n = psi.num_sites();
    let whole = e.evolve(psi, steps)?;
    let mut summed = Array1::<Complex64>::zeros(n);
    for (site, &weight) in psi.values.iter().enumerate() {
        if weight == Complex64::new(0.0, 0.0) {
            continue;
        }
        let branch = e.evolve(&WaveFunction::delta(n, site, psi.time), steps)?;
        whole.check_size(branch.num_sites())?;
        summed = summed + branch.values.mapv(|z| weight * z);
    }
    let summed = WaveFunction {
        values: summed,
        time: whole.time,
    };
    whole.max_distance(&summed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn pauli_x() -> CMatrix {
        array![[c(0.0, 0.0), c(1.0, 0.0)], [c(1.0, 0.0), c(0.0, 0.0)]]
    }

    #[test]
    fn identity_propagation() {
        let psi = WaveFunction::new(vec![c(0.3, 0.1), c(-1.0, 2.0), c(0.0, 0.5)], 4).unwrap();
        let out = propagate(&psi, &StepKernel::identity(3), 7).unwrap();
        assert_eq!(out.values(), psi.values());
        assert_eq!(out.time(), 11);
    }

    #[test]
    fn hadamard_squares_to_identity() {
        let psi = WaveFunction::new(vec![c(1.0, 0.0), c(0.0, 0.0)], 0).unwrap();
        let out = propagate(&psi, &StepKernel::hadamard(), 2).unwrap();
        assert!(out.max_distance(&psi).unwrap() < 1e-15);
    }

    #[test]
    fn propagate_checks_size() {
        let psi = WaveFunction::delta(3, 0, 0);
        assert!(matches!(
            propagate(&psi, &StepKernel::hadamard(), 1),
            Err(SchrodingerError::SizeMismatch { .. })
        ));
        assert_eq!(WaveFunction::new(Vec::<Complex64>::new(), 0).unwrap_err(), SchrodingerError::Empty);
        assert_eq!(
            WaveFunction::new(vec![c(f64::INFINITY, 0.0)], 0).unwrap_err(),
            SchrodingerError::NonFinite
        );
    }

    #[test]
    fn zero_hamiltonian_gives_identity_kernel() {
        let h = Hamiltonian::new(CMatrix::zeros((3, 3)), 1.0).unwrap();
        for eps in [1e-3, 0.5, 10.0] {
            let k = kernel_from_hamiltonian(&h, eps).unwrap();
            assert_eq!(k.matrix_at(0).unwrap(), &identity(3));
        }
        let est = extract_hamiltonian(|e| kernel_from_hamiltonian(&h, e), 1e-2, 1.0, 0).unwrap();
        assert_eq!(max_abs(&est.plain), 0.0);
        assert_eq!(max_abs(&est.richardson), 0.0);
    }

    #[test]
    fn two_site_closed_form() {
        let h = Hamiltonian::new(pauli_x(), 1.0).unwrap();
        for eps in [0.3, FRAC_PI_2] {
            let k = kernel_from_hamiltonian(&h, eps).unwrap();
            let expected = array![
                [c(eps.cos(), 0.0), c(0.0, eps.sin())],
                [c(0.0, eps.sin()), c(eps.cos(), 0.0)]
            ];
            assert!(max_abs(&(k.matrix_at(0).unwrap() - &expected)) < 1e-14);
        }
    }

    #[test]
    fn first_order_remainder_is_quadratic() {
        let h = Hamiltonian::new(
            array![[c(0.5, 0.0), c(0.2, -0.7)], [c(0.2, 0.7), c(-1.0, 0.0)]],
            1.0,
        )
        .unwrap();
        let remainder = |eps: f64| {
            let k = kernel_from_hamiltonian(&h, eps).unwrap();
            let linear = identity(2) + h.matrix().mapv(|z| c(0.0, eps) * z);
            max_abs(&(k.matrix_at(0).unwrap() - &linear))
        };
        let ratio = remainder(1e-2) / remainder(5e-3);
        assert!((ratio - 4.0).abs() < 0.05, "ratio {ratio}");
    }

    #[test]
    fn extraction_errors() {
        let h = Hamiltonian::new(pauli_x(), 1.0).unwrap();
        assert!(matches!(
            extract_hamiltonian(|e| kernel_from_hamiltonian(&h, e), 3.0, 1.0, 0),
            Err(SchrodingerError::SingularFamily(_))
        ));
        assert!(matches!(
            extract_hamiltonian(|e| kernel_from_hamiltonian(&h, e), -1.0, 1.0, 0),
            Err(SchrodingerError::InvalidStep(_))
        ));
        assert_eq!(
            Hamiltonian::new(pauli_x(), 0.0).unwrap_err(),
            SchrodingerError::InvalidHbar
        );
    }

    #[test]
    fn hbar_scales_the_generator() {
        let h = Hamiltonian::new(pauli_x(), 2.0).unwrap();
        let est = extract_hamiltonian(|e| kernel_from_hamiltonian(&h, e), 1e-3, 2.0, 0).unwrap();
        assert!(max_abs(&(&est.richardson - &pauli_x())) < 1e-6);
    }

    #[test]
    fn linear_evolvers_are_linear() {
        let e = LinearEvolver::new(StepKernel::random(3, 2));
        let a = WaveFunction::new(vec![c(1.0, 0.5), c(0.0, -1.0), c(0.2, 0.2)], 0).unwrap();
        let b = WaveFunction::new(vec![c(-0.3, 0.0), c(0.7, 0.1), c(0.0, 1.0)], 0).unwrap();
        assert!(linearity_residual(&e, &a, &b, c(0.6, -0.2), c(1.1, 0.4), 5).unwrap() <= 1e-12);
        assert!(consistency_residual(&e, &a, 5).unwrap() <= 1e-12);
        let zero = make_nonlinear_evolver(StepKernel::random(3, 2), 0.0);
        assert!(linearity_residual(&zero, &a, &b, c(0.6, -0.2), c(1.1, 0.4), 5).unwrap() <= 1e-12);
        assert_eq!(zero.evolve(&a, 3).unwrap(), e.evolve(&a, 3).unwrap());
    }

    #[test]
    fn linearity_requires_matching_states() {
        let e = LinearEvolver::new(StepKernel::identity(2));
        let a = WaveFunction::delta(2, 0, 0);
        let b = WaveFunction::delta(2, 1, 1);
        assert_eq!(
            linearity_residual(&e, &a, &b, c(1.0, 0.0), c(1.0, 0.0), 1).unwrap_err(),
            SchrodingerError::TimeMismatch(0, 1)
        );
    }

    #[test]
    fn delta_state_has_no_consistency_residual() {
        let e = make_nonlinear_evolver(StepKernel::dft(4), 0.8);
        let psi = WaveFunction::delta(4, 2, 0);
        assert_eq!(consistency_residual(&e, &psi, 6).unwrap(), 0.0);
    }

    #[test]
    fn uniform_two_site_hadamard_one_step() {
        // Whole state: K(1,1) = (√2, 0), phase e^{iλ·2} on site 0.
        // Branches: K δ_0 = (1, 1)/√2 and K δ_1 = (1, -1)/√2, each entry
        // picking up e^{iλ/2}; their sum is (√2 e^{iλ/2}, 0).
        let lambda = 0.5;
        let s2 = 2f64.sqrt();
        let whole0 = c(s2, 0.0) * Complex64::from_polar(1.0, lambda * 2.0);
        let phase_half = Complex64::from_polar(1.0, lambda * 0.5);
        let branch0 = (c(FRAC_1_SQRT_2, 0.0) * phase_half, c(FRAC_1_SQRT_2, 0.0) * phase_half);
        let branch1 = (c(FRAC_1_SQRT_2, 0.0) * phase_half, c(-FRAC_1_SQRT_2, 0.0) * phase_half);
        let site0 = (whole0 - branch0.0 - branch1.0).norm();
        let site1 = (c(0.0, 0.0) - branch0.1 - branch1.1).norm();
        let oracle = site0.max(site1);

        let e = make_nonlinear_evolver(StepKernel::hadamard(), lambda);
        let psi = WaveFunction::new(vec![c(1.0, 0.0), c(1.0, 0.0)], 0).unwrap();
        let r = consistency_residual(&e, &psi, 1).unwrap();
        assert!((r - oracle).abs() < 1e-14, "{r} vs {oracle}");
        assert!(r > 0.1);
    }
}
