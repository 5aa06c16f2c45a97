//! Amplitude calculus on a discrete spacetime lattice.
//!
//! Setups (source event, filters with holes, sink event) are combined with
//! the partial connectives `and` (succession) and `or` (merging holes at one
//! filter). Amplitudes assigned with the product and sum rules are computed
//! by two independent engines, and the surrounding modules check the
//! consistency constraints those rules solve: associativity and
//! distributivity functional equations, resolution of identity through a
//! fully open filter, and linearity of the resulting state evolution.

pub mod algebra;
pub mod amplitude;
pub mod fit;
pub mod gen;
pub mod kernel;
pub mod lattice;
pub mod linalg;
pub mod regraduation;
pub mod schrodinger;

pub use algebra::{and_compose, is_and_allowed, is_or_allowed, or_join, AlgebraError, JoinWitness};
pub use amplitude::{
    amplitude_matrix, amplitude_paths, check_product_rule, check_sum_rule, slice_decompose,
    Amplitude, AmplitudeError, SlicePair, Tolerances,
};
pub use kernel::{KernelError, StepKernel};
pub use lattice::{full_filter, make_setup, Event, Filter, Grid, Setup, SetupError};
pub use num_complex::Complex64;
pub use regraduation::{
    build_product_rep, build_sum_rep, check_p_constraints, check_s_associativity,
    regraduate_assignment, ProductRep, Regraduator, RegraduationError, ResidualStats,
};
pub use schrodinger::{
    consistency_residual, extract_hamiltonian, kernel_from_hamiltonian, linearity_residual,
    make_nonlinear_evolver, propagate, Evolver, EvolverKind, Hamiltonian, HamiltonianEstimate,
    LinearEvolver, NonlinearEvolver, SchrodingerError, WaveFunction,
};
