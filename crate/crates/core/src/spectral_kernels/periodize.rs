use std::fmt;
use std::sync::Arc;

use super::spectrum::EigenSequence;
use crate::error::{invalid, Error, Result};
use crate::quadrature::CompositeRule;

type ProfileFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type DecayFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A stationary profile `𝒦` with `k(x, y) = 𝒦(x − y)`.
///
/// `decay(r)` must bound `|𝒦(t)|` whenever `‖t‖_∞ ≥ r` and be
/// non-increasing; it drives the lattice-tail estimates.
#[derive(Clone)]
pub struct StationaryProfile {
    f: ProfileFn,
    decay: Option<DecayFn>,
    dim: usize,
    length_scale: f64,
    kappa: f64,
}

impl fmt::Debug for StationaryProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("StationaryProfile")
            .field("dim", &self.dim)
            .field("length_scale", &self.length_scale)
            .field("kappa", &self.kappa)
            .finish_non_exhaustive()
    }
}

impl StationaryProfile {
    pub fn new(
        dim: usize,
        length_scale: f64,
        kappa: f64,
        f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("dim", "must be at least 1"));
        }
        if !(length_scale > 0.0) {
            return Err(invalid("length_scale", "must be positive"));
        }
        if !(kappa >= 1.0) {
            return Err(invalid("kappa", "must be at least 1"));
        }
        Ok(Self {
            f: Arc::new(f),
            decay: None,
            dim,
            length_scale,
            kappa,
        })
    }

    pub fn with_decay(mut self, decay: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.decay = Some(Arc::new(decay));
        self
    }

    /// `exp(-‖t‖²/(2ℓ²))`.
    pub fn gaussian(dim: usize, length_scale: f64) -> Result<Self> {
        let l2 = length_scale * length_scale;
        Ok(Self::new(dim, length_scale, 1.0, move |t| {
            (-t.iter().map(|v| v * v).sum::<f64>() / (2.0 * l2)).exp()
        })?
        .with_decay(move |r| (-r * r / (2.0 * l2)).exp()))
    }

    /// `exp(-‖t‖₁/ℓ)`, the Matérn-1/2 profile.
    pub fn laplace(dim: usize, length_scale: f64) -> Result<Self> {
        Ok(Self::new(dim, length_scale, 1.0, move |t| {
            (-t.iter().map(|v| v.abs()).sum::<f64>() / length_scale).exp()
        })?
        .with_decay(move |r| (-r / length_scale).exp()))
    }

    pub fn eval(&self, t: &[f64]) -> f64 {
        (self.f)(t)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn length_scale(&self) -> f64 {
        self.length_scale
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn decay(&self, r: f64) -> Option<f64> {
        self.decay.as_ref().map(|d| d(r))
    }
}

/// Lattice-periodised profile together with the wrap-around error bound.
#[derive(Clone, Debug)]
pub struct Periodized {
    pub profile: StationaryProfile,
    pub half_period: f64,
    /// Bound on `sup_{x,y ∈ [-1,1]^m} |k_per(x,y) − k(x,y)|`.
    pub discrepancy: f64,
}

/// Number of lattice points with `‖ℓ‖_∞ = r` in `ℤ^m`.
fn shell_count(r: usize, m: usize) -> f64 {
    if r == 0 {
        return 1.0;
    }
    let r = r as f64;
    (2.0 * r + 1.0).powi(m as i32) - (2.0 * r - 1.0).powi(m as i32)
}

/// Sum of the decay bound over shells `r > from`, or an error when the
/// shells do not shrink fast enough for the sum to converge.
fn shell_tail(p: &StationaryProfile, period: f64, from: usize) -> Result<f64> {
    let m = p.dim;
    let term =
        |r: usize| shell_count(r, m) * p.decay(((period * r as f64) - 2.0).max(0.0)).unwrap_or(0.0);
    let mut total = 0.0;
    let mut r = from + 1;
    let cap = from + 1 + 200_000;
    while r < cap {
        let t = term(r);
        total += t;
        if t == 0.0 || t <= 1e-18 * total.max(f64::MIN_POSITIVE) {
            return Ok(total);
        }
        r += 1;
    }
    // Estimate the local power of decay from two far shells.
    let (a, b) = (term(r), term(2 * r));
    let q = if a > 0.0 && b > 0.0 {
        -(b / a).log2()
    } else {
        f64::INFINITY
    };
    if q <= 1.05 {
        return Err(Error::DivergentTail(format!(
            "lattice sum of the profile (local decay exponent {q:.3})"
        )));
    }
    Ok(total + a * r as f64 / (q - 1.0))
}

/// `𝒦_L^per(t) = Σ_{ℓ ∈ (2Lℤ)^m, ‖ℓ‖_∞ ≤ truncation·2L} 𝒦(t + ℓ)`.
pub fn periodize(p: &StationaryProfile, half_period: f64, truncation: usize) -> Result<Periodized> {
    if !(half_period >= 1.0) {
        return Err(invalid(
            "half_period",
            format!("must be at least 1, got {half_period}"),
        ));
    }
    if truncation == 0 {
        return Err(invalid("truncation", "must be at least 1"));
    }
    if p.decay.is_none() {
        return Err(invalid(
            "profile",
            "a decay bound is needed to certify the lattice tail",
        ));
    }
    let period = 2.0 * half_period;
    let m = p.dim;
    let tail = shell_tail(p, period, truncation)?;
    let near: f64 = (1..=truncation)
        .map(|r| shell_count(r, m) * p.decay(((period * r as f64) - 2.0).max(0.0)).unwrap_or(0.0))
        .sum();
    let discrepancy = near + tail;

    let inner = p.clone();
    let side = 2 * truncation + 1;
    let count = side.pow(m as u32);
    let f = move |t: &[f64]| -> f64 {
        let mut shifted = vec![0.0; t.len()];
        let mut acc = 0.0;
        for code in 0..count {
            let mut c = code;
            for (d, s) in shifted.iter_mut().enumerate() {
                let k = (c % side) as f64 - truncation as f64;
                c /= side;
                *s = t[d] + period * k;
            }
            acc += inner.eval(&shifted);
        }
        acc
    };
    // A periodic function does not decay; only the sup bound survives.
    let kappa = (p.kappa + discrepancy).max(1.0);
    let out = StationaryProfile::new(m, p.length_scale, kappa, f)?.with_decay(move |_| kappa);
    Ok(Periodized {
        profile: out,
        half_period,
        discrepancy,
    })
}

/// Fourier spectrum of a one-dimensional period-2 profile in flat basis
/// order, from `𝒦(t) = c_0 + Σ_j c_j cos(πjt)` with `μ_1 = c_0` and
/// `μ_{2j} = μ_{2j+1} = c_j / 2`.
///
/// Only `half_period = 1` diagonalises in the basis on `[-1, 1]`.
pub fn periodic_spectrum(per: &Periodized, count: usize) -> Result<EigenSequence> {
    if per.profile.dim() != 1 {
        return Err(Error::Unsupported(
            "periodic spectra of multivariate profiles".into(),
        ));
    }
    if per.half_period != 1.0 {
        return Err(Error::Unsupported(format!(
            "half period {} does not match the basis period 2",
            per.half_period
        )));
    }
    if count == 0 {
        return Err(invalid("count", "must be at least 1"));
    }
    let rule = CompositeRule::resolving(count);
    let samples: Vec<f64> = rule
        .nodes()
        .iter()
        .map(|&t| per.profile.eval(&[t]))
        .collect();
    let coeff = |j: usize| -> f64 {
        let scale = if j == 0 { 1.0 } else { 2.0 };
        scale
            * rule
                .nodes()
                .iter()
                .zip(rule.weights())
                .zip(&samples)
                .map(|((&t, &w), &s)| w * s * (std::f64::consts::PI * j as f64 * t).cos())
                .sum::<f64>()
    };
    let c0 = coeff(0);
    let floor = -1e-10 * c0.abs().max(1.0);
    let mut values = Vec::with_capacity(2 * count - 1);
    let clamp = |v: f64, j: usize| -> Result<f64> {
        if v < floor {
            return Err(Error::NotApplicable(format!(
                "profile is not positive definite: coefficient {j} is {v}"
            )));
        }
        Ok(v.max(0.0))
    };
    values.push(clamp(c0, 0)?);
    for j in 1..count {
        let v = clamp(0.5 * coeff(j), j)?;
        values.push(v);
        values.push(v);
    }
    EigenSequence::finite(values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral_kernels::{matern_periodic_spectrum, MercerKernel};
    use std::f64::consts::PI;

    fn bump() -> StationaryProfile {
        StationaryProfile::new(1, 0.5, 1.0, |t: &[f64]| (1.0 - t[0].abs()).max(0.0))
            .unwrap()
            .with_decay(|r| if r >= 1.0 { 0.0 } else { 1.0 })
    }

    #[test]
    fn compact_support_is_untouched() {
        let p = bump();
        let per = periodize(&p, 2.0, 3).unwrap();
        assert_eq!(per.discrepancy, 0.0);
        for k in 0..=40 {
            let t = -1.0 + k as f64 / 20.0;
            assert!((per.profile.eval(&[t]) - p.eval(&[t])).abs() < 1e-15);
        }
    }

    #[test]
    fn gaussian_wraparound_is_tiny() {
        let p = StationaryProfile::gaussian(1, 1.0).unwrap();
        let per = periodize(&p, 10.0, 4).unwrap();
        assert!(per.discrepancy <= 3.0 * (-(18.0f64).powi(2) / 2.0).exp());
        // Direct lattice sum with sup over [-2,2] attained at the inner edge.
        let direct: f64 = 2.0
            * (1..50)
                .map(|k| (-((20 * k - 2) as f64).powi(2) / 2.0).exp())
                .sum::<f64>();
        assert!((per.discrepancy - direct).abs() <= 1e-3 * direct + 1e-300);
    }

    #[test]
    fn periodised_profile_is_periodic() {
        let p = StationaryProfile::laplace(1, 0.7).unwrap();
        let per = periodize(&p, 1.5, 60).unwrap();
        for &t in &[-0.4, 0.0, 0.9] {
            let a = per.profile.eval(&[t]);
            let b = per.profile.eval(&[t + 3.0]);
            assert!(
                (a - b).abs() < 1e-12 * a.abs().max(1.0) + 1e-12,
                "{a} vs {b}"
            );
        }
    }

    #[test]
    fn laplace_period_two_is_matern_half() {
        // Σ_ℓ π e^{-π|t+2ℓ|} = Σ_{j∈ℤ} cos(πjt)/(1+j²).
        let p = StationaryProfile::laplace(1, 1.0 / PI).unwrap();
        let per = periodize(&p, 1.0, 40).unwrap();
        let k = MercerKernel::new(matern_periodic_spectrum(0.5, 2048, false).unwrap());
        for &u in &[0.0, 0.3, 0.75, 1.4] {
            let exact = PI * (PI * (1.0 - u)).cosh() / PI.sinh();
            let lattice = PI * per.profile.eval(&[u]);
            assert!(
                (lattice - exact).abs() < 1e-12,
                "u={u}: {lattice} vs {exact}"
            );
            let kv = k.eval(&[u - 0.5], &[-0.5]).unwrap();
            assert!((kv.value - exact).abs() <= kv.tail_bound, "u={u}");
        }
    }

    #[test]
    fn spectrum_of_periodised_gaussian_reproduces_profile() {
        let p = StationaryProfile::gaussian(1, 0.3).unwrap();
        let per = periodize(&p, 1.0, 8).unwrap();
        let spec = periodic_spectrum(&per, 40).unwrap();
        let k = MercerKernel::new(spec);
        for &u in &[0.0, 0.2, 0.5, 1.0] {
            let a = k.profile(&[u]).unwrap();
            let b = per.profile.eval(&[u]);
            assert!((a - b).abs() < 1e-10, "u={u}: {a} vs {b}");
        }
    }

    #[test]
    fn slow_decay_is_divergent() {
        let p = StationaryProfile::new(2, 1.0, 1.0, |t: &[f64]| {
            1.0 / (1.0 + t[0].abs() + t[1].abs())
        })
        .unwrap()
        .with_decay(|r| 1.0 / (1.0 + r));
        assert!(matches!(
            periodize(&p, 1.0, 2),
            Err(Error::DivergentTail(_))
        ));
    }
}
