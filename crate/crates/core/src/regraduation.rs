//! Functional-equation solutions for the `or` and `and` representations.
//!
//! An `or` representation `S` built as `S(u, v) = ξ⁻¹(ξ(u) + ξ(v))` is
//! associative for any invertible `ξ`; an `and` representation built from
//! `ζ(u) = (Au)^C` as `P(u, v) = ζ⁻¹(ζ(u) ζ(v))` collapses to `A·u·v`, which
//! is associative and distributes over addition. This module builds those
//! maps for a few concrete `ξ` families and measures the residuals of the
//! constraints on seeded samples.
//!
//! Only the forward direction is covered: given `ξ` (or `A`, `C`), check the
//! constraints. Recovering `ξ` from an arbitrary associative `S` is not
//! attempted.
//!
//! All fractional powers use the principal branch. A sample whose
//! evaluation would land on or next to a branch cut is reported as an
//! escape and excluded from the sweep rather than wrapped.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::algebra::{or_join, AlgebraError};
use crate::lattice::Setup;

/// Distance in argument from the negative real axis below which a value is
/// treated as sitting on the cut.
pub const CUT_MARGIN: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RegraduationError {
    #[error("value leaves the regraduation domain: {0}")]
    DomainEscape(String),
    #[error("principal-branch simplification fails: {0}")]
    BranchEscape(String),
    #[error("constant must be nonzero")]
    ZeroConstant,
    #[error("assignment violates the sum rule (residual {residual:e} between {left} and {right})")]
    RuleViolation {
        residual: f64,
        left: String,
        right: String,
    },
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

pub type BinaryMap<'a> = dyn Fn(Complex64, Complex64) -> Result<Complex64, RegraduationError> + 'a;

/// The shipped `ξ` families.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum XiFamily {
    Identity,
    /// `u ↦ λu`, λ ≠ 0.
    Linear(Complex64),
    /// `u ↦ u^n` for odd `n ≥ 3` on the sector `|arg u| < π/n`, inverted
    /// with the principal `n`-th root.
    OddPower(u32),
}

/// An invertible map `ξ` on a stated complex domain.
#[derive(Debug, Clone, PartialEq)]
pub struct Regraduator {
    family: XiFamily,
}

impl Regraduator {
    pub fn identity() -> Self {
        Regraduator {
            family: XiFamily::Identity,
        }
    }

    pub fn linear(lambda: Complex64) -> Result<Self, RegraduationError> {
        if lambda == Complex64::new(0.0, 0.0) {
            return Err(RegraduationError::ZeroConstant);
        }
        Ok(Regraduator {
            family: XiFamily::Linear(lambda),
        })
    }

    /// `u ↦ u^(2k+1)`; `k ≥ 1`.
    pub fn odd_power(k: u32) -> Self {
        assert!(k >= 1, "odd power family starts at the cube");
        Regraduator {
            family: XiFamily::OddPower(2 * k + 1),
        }
    }

    pub fn family(&self) -> XiFamily {
        self.family
    }

    pub fn name(&self) -> String {
        match self.family {
            XiFamily::Identity => "identity".to_string(),
            XiFamily::Linear(l) => format!("linear({l})"),
            XiFamily::OddPower(n) => format!("power{n}"),
        }
    }

    pub fn contains(&self, u: Complex64) -> bool {
        match self.family {
            XiFamily::Identity | XiFamily::Linear(_) => u.re.is_finite() && u.im.is_finite(),
            XiFamily::OddPower(n) => u.norm() > 0.0 && u.arg().abs() < PI / n as f64,
        }
    }

    pub fn xi(&self, u: Complex64) -> Complex64 {
        match self.family {
            XiFamily::Identity => u,
            XiFamily::Linear(l) => l * u,
            XiFamily::OddPower(n) => (1..n).fold(u, |acc, _| acc * u),
        }
    }

    /// Inverse of [`Regraduator::xi`] on its image.
    pub fn xi_inv(&self, z: Complex64) -> Result<Complex64, RegraduationError> {
        match self.family {
            XiFamily::Identity => Ok(z),
            XiFamily::Linear(l) => Ok(z / l),
            XiFamily::OddPower(n) => {
                if z.norm() == 0.0 || PI - z.arg().abs() < CUT_MARGIN {
                    return Err(RegraduationError::DomainEscape(format!(
                        "{z} is on the cut of the principal {n}-th root"
                    )));
                }
                Ok(z.powf(1.0 / n as f64))
            }
        }
    }

    /// One point of the domain, drawn so that sums stay representable.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Complex64 {
        match self.family {
            XiFamily::Identity | XiFamily::Linear(_) => {
                Complex64::new(rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0))
            }
            XiFamily::OddPower(n) => {
                let half_width = 0.95 * PI / n as f64;
                Complex64::from_polar(
                    rng.random_range(0.5..=1.5),
                    rng.random_range(-half_width..=half_width),
                )
            }
        }
    }

    /// `max |ξ⁻¹(ξ(u)) − u|` over `samples`.
    pub fn roundtrip_residual(&self, samples: &[Complex64]) -> Result<f64, RegraduationError> {
        samples.iter().try_fold(0.0f64, |acc, &u| {
            Ok(acc.max((self.xi_inv(self.xi(u))? - u).norm()))
        })
    }
}

/// `S(u, v) = ξ⁻¹(ξ(u) + ξ(v))`.
pub struct SumRep<'a> {
    xi: &'a Regraduator,
}

impl SumRep<'_> {
    pub fn apply(&self, u: Complex64, v: Complex64) -> Result<Complex64, RegraduationError> {
        for x in [u, v] {
            if !self.xi.contains(x) {
                return Err(RegraduationError::DomainEscape(format!(
                    "{x} is outside the domain of {}",
                    self.xi.name()
                )));
            }
        }
        self.xi.xi_inv(self.xi.xi(u) + self.xi.xi(v))
    }
}

pub fn build_sum_rep(r: &Regraduator) -> SumRep<'_> {
    SumRep { xi: r }
}

/// `ζ(u) = (Au)^C` with `A ≠ 0`, `C ≠ 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProductRep {
    a: Complex64,
    c: f64,
}

impl ProductRep {
    pub fn new(a: Complex64, c: f64) -> Result<Self, RegraduationError> {
        if a == Complex64::new(0.0, 0.0) || c == 0.0 || !c.is_finite() {
            return Err(RegraduationError::ZeroConstant);
        }
        Ok(ProductRep { a, c })
    }

    pub fn a(&self) -> Complex64 {
        self.a
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn zeta(&self, u: Complex64) -> Complex64 {
        (self.a * u).powf(self.c)
    }

    pub fn zeta_inv(&self, z: Complex64) -> Complex64 {
        z.powf(1.0 / self.c) / self.a
    }
}

/// `P(u, v) = ζ⁻¹(ζ(u) ζ(v))`.
pub struct ProductMap {
    rep: ProductRep,
}

impl ProductMap {
    /// Evaluates through `ζ`. Fails when the principal branch does not let
    /// the composition collapse, i.e. when `C·(arg(Au) + arg(Av))` falls
    /// outside `(−π, π]`, or when an argument is zero.
    pub fn apply(&self, u: Complex64, v: Complex64) -> Result<Complex64, RegraduationError> {
        let (au, av) = (self.rep.a * u, self.rep.a * v);
        if au.norm() == 0.0 || av.norm() == 0.0 {
            return Err(RegraduationError::BranchEscape(
                "zero argument".to_string(),
            ));
        }
        let phase = self.rep.c * (au.arg() + av.arg());
        if !(phase > -PI && phase <= PI) {
            return Err(RegraduationError::BranchEscape(format!(
                "C·(arg Au + arg Av) = {phase} is outside (-π, π]"
            )));
        }
        Ok(self.rep.zeta_inv(self.rep.zeta(u) * self.rep.zeta(v)))
    }

    /// `A·u·v`.
    pub fn closed_form(&self, u: Complex64, v: Complex64) -> Complex64 {
        self.rep.a * u * v
    }
}

pub fn build_product_rep(p: ProductRep) -> ProductMap {
    ProductMap { rep: p }
}

/// Max/mean of a residual sweep plus how many samples were evaluated and how
/// many escaped the domain.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ResidualStats {
    pub max: f64,
    pub mean: f64,
    pub evaluated: usize,
    pub excluded: usize,
}

impl ResidualStats {
    fn from_results(results: impl IntoIterator<Item = Option<f64>>) -> Self {
        let mut stats = ResidualStats::default();
        let mut sum = 0.0;
        for r in results {
            match r {
                Some(x) => {
                    stats.evaluated += 1;
                    stats.max = stats.max.max(x);
                    sum += x;
                }
                None => stats.excluded += 1,
            }
        }
        if stats.evaluated > 0 {
            stats.mean = sum / stats.evaluated as f64;
        }
        stats
    }
}

/// `|S(S(u,v),w) − S(u,S(v,w))|` over the samples; triples where either
/// association order escapes the domain are excluded and counted.
pub fn check_s_associativity(
    s: &BinaryMap<'_>,
    samples: &[(Complex64, Complex64, Complex64)],
) -> ResidualStats {
    ResidualStats::from_results(samples.iter().map(|&(u, v, w)| {
        let left = s(s(u, v).ok()?, w).ok()?;
        let right = s(u, s(v, w).ok()?).ok()?;
        Some((left - right).norm())
    }))
}

/// Residuals of `P(P(u,v),w) = P(u,P(v,w))` and `P(u,v+w) = P(u,v) + P(u,w)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PConstraintResiduals {
    pub associativity: ResidualStats,
    pub distributivity: ResidualStats,
}

pub fn check_p_constraints(
    p: &BinaryMap<'_>,
    samples: &[(Complex64, Complex64, Complex64)],
) -> PConstraintResiduals {
    let associativity = ResidualStats::from_results(samples.iter().map(|&(u, v, w)| {
        let left = p(p(u, v).ok()?, w).ok()?;
        let right = p(u, p(v, w).ok()?).ok()?;
        Some((left - right).norm())
    }));
    let distributivity = ResidualStats::from_results(samples.iter().map(|&(u, v, w)| {
        let left = p(u, v + w).ok()?;
        let right = p(u, v).ok()? + p(u, w).ok()?;
        Some((left - right).norm())
    }));
    PConstraintResiduals {
        associativity,
        distributivity,
    }
}

/// Seeded triples drawn from the domain of `r`.
pub fn sample_triples(r: &Regraduator, n: usize, seed: u64) -> Vec<(Complex64, Complex64, Complex64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| (r.sample(&mut rng), r.sample(&mut rng), r.sample(&mut rng)))
        .collect()
}

/// Seeded triples with real and imaginary parts in `[-1, 1]`.
pub fn square_triples(n: usize, seed: u64) -> Vec<(Complex64, Complex64, Complex64)> {
    sample_triples(&Regraduator::identity(), n, seed)
}

/// Seeded triples on the positive real axis, `(0.1, 2]`.
pub fn positive_real_triples(n: usize, seed: u64) -> Vec<(Complex64, Complex64, Complex64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = || Complex64::new(rng.random_range(0.1..=2.0), 0.0);
    (0..n).map(|_| (draw(), draw(), draw())).collect()
}

/// Maps that deliberately violate the constraints; sweeps over them must
/// report large residuals.
pub mod controls {
    use num_complex::Complex64;

    /// `u + v + u v²`: not associative.
    pub fn skewed_sum(u: Complex64, v: Complex64) -> Complex64 {
        u + v + u * v * v
    }

    /// `u + v` used as an `and` map: not distributive over addition.
    pub fn additive_product(u: Complex64, v: Complex64) -> Complex64 {
        u + v
    }

    /// `A u v²`: not associative.
    pub fn squared_product(a: Complex64) -> impl Fn(Complex64, Complex64) -> Complex64 {
        move |u, v| a * u * v * v
    }
}

/// Builds φ on every nonempty subset of `leaves` by folding `S` over the
/// members (in leaf order), keyed by the or-join of the member setups.
///
/// The leaves must be pairwise joinable, e.g. one-hole setups sharing every
/// other filter and differing only in the hole at one time.
pub fn forward_assignment(
    leaves: &[(Setup, Complex64)],
    s: &BinaryMap<'_>,
) -> Result<BTreeMap<Setup, Complex64>, RegraduationError> {
    assert!(leaves.len() < 20, "subset enumeration is exponential");
    let mut out = BTreeMap::new();
    for mask in 1u32..(1 << leaves.len()) {
        let mut members = leaves
            .iter()
            .enumerate()
            .filter(|(k, _)| mask & (1 << k) != 0)
            .map(|(_, l)| l);
        let (first_setup, first_value) = members.next().expect("mask is nonzero");
        let (mut setup, mut value) = (first_setup.clone(), *first_value);
        for (leaf_setup, leaf_value) in members {
            setup = or_join(&setup, leaf_setup)?.0;
            value = s(value, *leaf_value)?;
        }
        out.insert(setup, value);
    }
    Ok(out)
}

/// `ψ = A·ξ(φ)`, then verifies `ψ(a∨b) = ψ(a) + ψ(b)` on every joinable pair
/// whose join is also in the map. Relative tolerance `1e-10`.
pub fn regraduate_assignment(
    phi: &BTreeMap<Setup, Complex64>,
    r: &Regraduator,
    a: Complex64,
) -> Result<BTreeMap<Setup, Complex64>, RegraduationError> {
    if a == Complex64::new(0.0, 0.0) {
        return Err(RegraduationError::ZeroConstant);
    }
    let mut psi = BTreeMap::new();
    for (setup, &value) in phi {
        if !r.contains(value) {
            return Err(RegraduationError::DomainEscape(format!(
                "φ({setup}) = {value} is outside the domain of {}",
                r.name()
            )));
        }
        psi.insert(setup.clone(), a * r.xi(value));
    }
    let entries: Vec<(&Setup, &Complex64)> = psi.iter().collect();
    for (i, &(sa, &va)) in entries.iter().enumerate() {
        for &(sb, &vb) in &entries[i + 1..] {
            let Ok((joined, _)) = or_join(sa, sb) else {
                continue;
            };
            let Some(&vj) = psi.get(&joined) else {
                continue;
            };
            let residual = (vj - va - vb).norm();
            if residual > 1e-10 * (1.0 + va.norm() + vb.norm()) {
                return Err(RegraduationError::RuleViolation {
                    residual,
                    left: sa.to_string(),
                    right: sb.to_string(),
                });
            }
        }
    }
    Ok(psi)
}
