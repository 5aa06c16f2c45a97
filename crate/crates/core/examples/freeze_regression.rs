//! Prints the nonlinear linearity residual that tests/data/regression.json pins.

use ampcalc_core::gen::random_state;
use ampcalc_core::{linearity_residual, make_nonlinear_evolver, Complex64, StepKernel};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let psi1 = random_state(&mut rng, 4, 0);
    let psi2 = random_state(&mut rng, 4, 0);
    let e = make_nonlinear_evolver(StepKernel::dft(4), 0.1);
    let a = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let r = linearity_residual(&e, &psi1, &psi2, a, a, 5).unwrap();
    println!("{r:.17e}");
}
