//! Periodizing a Gaussian profile onto the torus and reading off its
//! Fourier spectrum.

use kernel_misspec::spectral_kernels::{
    periodic_spectrum, periodize, MercerKernel, StationaryProfile,
};

fn main() -> kernel_misspec::Result<()> {
    let profile = StationaryProfile::gaussian(1, 0.3)?;
    let per = periodize(&profile, 1.0, 8)?;
    println!(
        "bound on |periodized − profile| over [-2, 2]: {:.3e}",
        per.discrepancy
    );
    let spec = periodic_spectrum(&per, 128)?;
    println!("first eigenvalues: {:?}", &spec.values()[..5]);
    let k = MercerKernel::new(spec);
    for u in [0.0, 0.25, 0.5, 1.0] {
        let kv = k.eval(&[u], &[0.0])?;
        println!(
            "u={u}: periodized {:.10}, Mercer sum {:.10} (tail ≤ {:.1e})",
            per.profile.eval(&[u]),
            kv.value,
            kv.tail_bound
        );
    }
    Ok(())
}
