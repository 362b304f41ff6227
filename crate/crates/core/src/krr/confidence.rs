use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Inputs of the pointwise bound driven by the posterior standard deviation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointwiseBound {
    pub sigma: f64,
    pub n: usize,
    pub tau: f64,
    pub r: f64,
    pub delta: f64,
    pub norm_bound: f64,
    pub lambda_bound: f64,
    pub kappa: f64,
    pub eps: f64,
}

/// Inputs of the bound driven by the effective dimension.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeffBound {
    pub n: usize,
    pub tau: f64,
    pub r: f64,
    pub delta: f64,
    pub norm_bound: f64,
    pub d_eff: f64,
    pub lambda_bound: f64,
    pub kappa: f64,
    pub eps: f64,
}

fn check_common(n: usize, tau: f64, delta: f64) -> Result<()> {
    if n == 0 {
        return Err(invalid("n", "must be positive"));
    }
    if !(tau > 0.0) {
        return Err(invalid("tau", "must be positive"));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(invalid("delta", format!("{delta} is not in (0, 1)")));
    }
    Ok(())
}

/// `4κ²/(3n)·log(a/δ) + κ²(1 + √log(a/δ))/√n`.
pub fn o_n(kappa: f64, n: usize, a: f64, delta: f64) -> f64 {
    let l = (a / delta).ln();
    let n = n as f64;
    4.0 * kappa * kappa / (3.0 * n) * l + kappa * kappa * (1.0 + l.sqrt()) / n.sqrt()
}

/// `2Rσ√log(4/δ)/√(nτ) + σ·B + (Λ + 1 + o_n)·ε`.
pub fn fundleb_rhs(p: &PointwiseBound) -> Result<f64> {
    check_common(p.n, p.tau, p.delta)?;
    let noise = 2.0 * p.r * p.sigma * (4.0 / p.delta).ln().sqrt() / (p.n as f64 * p.tau).sqrt();
    let bias = p.sigma * p.norm_bound;
    let amp = (p.lambda_bound + 1.0 + o_n(p.kappa, p.n, 2.0, p.delta)) * p.eps;
    Ok(noise + bias + amp)
}

/// `64 d log(576 d/δ)`: sample size needed by [`fundlebtwo_rhs`].
pub fn fundlebtwo_gate(d_eff: f64, delta: f64) -> f64 {
    64.0 * d_eff * (576.0 * d_eff / delta).ln()
}

/// `(2R√log(6/δ) + √(nτ)·B)·√(2d/n) + (Λ + 1 + o_n)·ε`, or
/// [`Error::NotApplicable`] below the sample-size gate.
pub fn fundlebtwo_rhs(p: &DeffBound) -> Result<f64> {
    check_common(p.n, p.tau, p.delta)?;
    if !(p.d_eff >= 0.0) {
        return Err(invalid("d_eff", "must be nonnegative"));
    }
    let gate = fundlebtwo_gate(p.d_eff, p.delta);
    if (p.n as f64) < gate {
        return Err(Error::NotApplicable(format!(
            "n = {} is below 64·d_eff·log(576·d_eff/δ) = {gate:.1}",
            p.n
        )));
    }
    let n = p.n as f64;
    let lead = (2.0 * p.r * (6.0 / p.delta).ln().sqrt() + (n * p.tau).sqrt() * p.norm_bound)
        * (2.0 * p.d_eff / n).sqrt();
    let amp = (p.lambda_bound + 1.0 + o_n(p.kappa, p.n, 3.0, p.delta)) * p.eps;
    Ok(lead + amp)
}
