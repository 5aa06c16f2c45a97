//! One-time-step transition amplitudes.
//!
//! `K_t[[x', x]]` is the amplitude for the particle to go from site `x` at
//! time `t` to site `x'` at time `t + 1`. Kernels are inputs to the calculus;
//! nothing here requires them to be unitary.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_1_SQRT_2, TAU};

use ndarray::Array2;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::linalg::{identity, CMatrix};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KernelError {
    #[error("kernel matrix is {rows}x{cols}, expected square")]
    NotSquare { rows: usize, cols: usize },
    #[error("kernel matrix is {found}x{found}, expected {expected}x{expected}")]
    SizeMismatch { expected: usize, found: usize },
    #[error("kernel matrix has a non-finite entry")]
    NonFinite,
    #[error("kernel has no matrices")]
    Empty,
    #[error("kernel has no step matrix for time {0}")]
    MissingStep(i64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepKernel {
    num_sites: usize,
    default: Option<CMatrix>,
    by_time: BTreeMap<i64, CMatrix>,
}

fn check_matrix(m: &CMatrix) -> Result<usize, KernelError> {
    let (rows, cols) = m.dim();
    if rows != cols {
        return Err(KernelError::NotSquare { rows, cols });
    }
    if rows == 0 {
        return Err(KernelError::Empty);
    }
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(KernelError::NonFinite);
    }
    Ok(rows)
}

impl StepKernel {
    /// Time-invariant kernel.
    pub fn constant(matrix: CMatrix) -> Result<Self, KernelError> {
        let num_sites = check_matrix(&matrix)?;
        Ok(StepKernel {
            num_sites,
            default: Some(matrix),
            by_time: BTreeMap::new(),
        })
    }

    /// Kernel with one matrix per listed time; other times are missing.
    pub fn time_dependent(matrices: BTreeMap<i64, CMatrix>) -> Result<Self, KernelError> {
        let mut sizes = matrices.values().map(check_matrix);
        let num_sites = sizes.next().ok_or(KernelError::Empty)??;
        for s in sizes {
            let found = s?;
            if found != num_sites {
                return Err(KernelError::SizeMismatch {
                    expected: num_sites,
                    found,
                });
            }
        }
        Ok(StepKernel {
            num_sites,
            default: None,
            by_time: matrices,
        })
    }

    /// Overrides the step at `time`, keeping everything else.
    pub fn with_step(mut self, time: i64, matrix: CMatrix) -> Result<Self, KernelError> {
        let found = check_matrix(&matrix)?;
        if found != self.num_sites {
            return Err(KernelError::SizeMismatch {
                expected: self.num_sites,
                found,
            });
        }
        self.by_time.insert(time, matrix);
        Ok(self)
    }

    pub fn num_sites(&self) -> usize {
        self.num_sites
    }

    pub fn is_time_invariant(&self) -> bool {
        self.by_time.is_empty()
    }

    /// Step matrix from `time` to `time + 1`.
    pub fn matrix_at(&self, time: i64) -> Result<&CMatrix, KernelError> {
        self.by_time
            .get(&time)
            .or(self.default.as_ref())
            .ok_or(KernelError::MissingStep(time))
    }

    /// Explicitly listed time steps (empty for a time-invariant kernel).
    pub fn listed_times(&self) -> impl Iterator<Item = (i64, &CMatrix)> {
        self.by_time.iter().map(|(t, m)| (*t, m))
    }

    pub fn default_matrix(&self) -> Option<&CMatrix> {
        self.default.as_ref()
    }

    pub fn identity(num_sites: usize) -> Self {
        assert!(num_sites > 0, "kernel needs at least one site");
        StepKernel::constant(identity(num_sites)).expect("identity is a valid kernel")
    }

    /// `(1/√2) [[1, 1], [1, -1]]` on two sites.
    pub fn hadamard() -> Self {
        let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
        let m = ndarray::array![[h, h], [h, -h]];
        StepKernel::constant(m).expect("hadamard is a valid kernel")
    }

    /// Unitary discrete Fourier matrix `exp(2πi x' x / S) / √S`.
    pub fn dft(num_sites: usize) -> Self {
        assert!(num_sites > 0, "kernel needs at least one site");
        let norm = (num_sites as f64).sqrt();
        let m = Array2::from_shape_fn((num_sites, num_sites), |(r, c)| {
            let phase = TAU * ((r * c) % num_sites) as f64 / num_sites as f64;
            Complex64::from_polar(1.0 / norm, phase)
        });
        StepKernel::constant(m).expect("dft is a valid kernel")
    }

    /// Seeded time-invariant kernel with entries `(a + ib)/√S`,
    /// `a, b ~ U[-1, 1]`. Not unitary.
    pub fn random(num_sites: usize, seed: u64) -> Self {
        assert!(num_sites > 0, "kernel needs at least one site");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        StepKernel::constant(random_matrix(&mut rng, num_sites)).expect("finite entries")
    }

    /// Seeded kernel with an independent random matrix for each time in `times`.
    pub fn random_time_dependent(num_sites: usize, times: std::ops::Range<i64>, seed: u64) -> Self {
        assert!(num_sites > 0, "kernel needs at least one site");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let matrices = times.map(|t| (t, random_matrix(&mut rng, num_sites))).collect();
        StepKernel::time_dependent(matrices).expect("nonempty time range")
    }
}

pub(crate) fn random_matrix<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMatrix {
    let scale = 1.0 / (n as f64).sqrt();
    Array2::from_shape_simple_fn((n, n), || {
        Complex64::new(
            rng.random_range(-1.0..=1.0) * scale,
            rng.random_range(-1.0..=1.0) * scale,
        )
    })
}
