//! The grid estimate of the Lebesgue constant against the summation-by-parts
//! bound and the square-root bound, for Matérn-periodic kernels.

use kernel_misspec::spectral_analysis::SpectralReport;
use kernel_misspec::spectral_kernels::{matern_periodic_spectrum, MercerKernel};

fn main() -> kernel_misspec::Result<()> {
    println!(
        "{:>4} {:>7} {:>9} {:>9} {:>9} {:>9} {:>6}",
        "nu", "tau", "estimate", "tol", "abel", "sqrt", "holds"
    );
    for nu in [0.5, 1.5, 2.5] {
        let k = MercerKernel::new(matern_periodic_spectrum(nu, 2048, true)?);
        for e in 1..=5 {
            let tau = 10f64.powi(-e);
            let r = SpectralReport::compute(&k, tau)?;
            println!(
                "{nu:>4} {tau:>7.0e} {:>9.4} {:>9.1e} {:>9.4} {:>9.4} {:>6}",
                r.lebesgue_est,
                r.lebesgue_tol,
                r.abel_bound,
                r.sqrt_bound,
                r.sandwich_holds()
            );
        }
    }
    Ok(())
}
