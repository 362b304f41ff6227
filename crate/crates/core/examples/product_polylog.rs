//! Mixed-difference bound for a two-dimensional product kernel, normalized
//! by log³(e + 1/τ), next to the grid estimate.

use kernel_misspec::spectral_analysis::{
    abel_bound_multi, lebesgue_estimate, DEFAULT_MULTI_TRUNCATION,
};
use kernel_misspec::spectral_kernels::{matern_periodic_spectrum, product_kernel};

fn main() -> kernel_misspec::Result<()> {
    let base = matern_periodic_spectrum(1.5, 256, true)?;
    let k = product_kernel(&base, 2)?;
    println!(
        "{:>7} {:>9} {:>10} {:>9}",
        "tau", "bound", "bound/log3", "estimate"
    );
    for e in 1..=4 {
        let tau = 10f64.powi(-e);
        let b = abel_bound_multi(&k, tau, DEFAULT_MULTI_TRUNCATION)?;
        let log = (std::f64::consts::E + 1.0 / tau).ln();
        let est = lebesgue_estimate(&k, tau, None)?;
        println!(
            "{tau:>7.0e} {:>9.4} {:>10.4} {:>9.4}",
            b.value,
            b.value / log.powi(3),
            est.value
        );
    }
    Ok(())
}
