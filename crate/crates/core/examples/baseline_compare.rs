//! Domain splitting against a single global region with the same inflated
//! bonus, on a misspecified rough target.

use std::sync::Arc;

use kernel_misspec::krr::TargetFunction;
use kernel_misspec::online::{
    run_global_eps_ucb, run_pi_misspec_gpucb, BanditEnvironment, OnlineParams,
};
use kernel_misspec::seeds::cell_rng;
use kernel_misspec::spectral_kernels::{matern_periodic_spectrum, MercerKernel};

fn main() -> kernel_misspec::Result<()> {
    let k = Arc::new(MercerKernel::new(matern_periodic_spectrum(0.5, 129, true)?));
    let (n, eps) = (4096, 0.1);
    for seed in 0..5 {
        let star = TargetFunction::random(&k, 9, 1.0, &mut cell_rng(seed, &[1]))?;
        let q = star.frequency();
        let target = star.with_perturbation(eps, q)?;
        let p = OnlineParams::new(n, 2.0, target.rkhs_norm(), eps, 0.1);
        let env = BanditEnvironment::new(k.clone(), target, &p, seed)?;
        let split = run_pi_misspec_gpucb(&env, &p)?;
        let base = run_global_eps_ucb(&env, &p)?;
        println!(
            "seed {seed}: splitting R_n/n = {:.4}, global R_n/n = {:.4}",
            split.final_regret() / n as f64,
            base.final_regret() / n as f64
        );
    }
    Ok(())
}
