//! Command-line front end for `ampcalc-core`: the setup-expression language,
//! kernel files, residual suites and run reports.

pub mod dsl;
pub mod kernel_file;
pub mod report;
pub mod suites;

use ampcalc_core::Complex64;

fn short_real(x: f64) -> String {
    let rounded: f64 = format!("{x:.14e}").parse().expect("formatted float");
    if rounded == 0.0 {
        "0".to_string()
    } else if !(1e-4..1e15).contains(&rounded.abs()) {
        format!("{rounded:e}")
    } else {
        rounded.to_string()
    }
}

/// `re+imi` rounded to 15 significant digits per part, so that `0.5`
/// computed as `0.5000000000000001` prints as `0.5+0i`.
pub fn format_amplitude(z: Complex64) -> String {
    let im = short_real(z.im);
    match im.strip_prefix('-') {
        Some(abs) => format!("{}-{abs}i", short_real(z.re)),
        None => format!("{}+{im}i", short_real(z.re)),
    }
}
