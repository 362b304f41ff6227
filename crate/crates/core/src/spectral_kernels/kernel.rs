use nalgebra::{DMatrix, DVector};

use super::basis::FourierBasis;
use super::spectrum::EigenSequence;
use crate::error::{invalid, Result};
use crate::trig::Rotor;

/// Per-coordinate or flat spectrum of a [`MercerKernel`].
#[derive(Clone, Debug, PartialEq)]
pub enum Spectrum {
    /// One-dimensional kernel in flat basis order.
    Flat(EigenSequence),
    /// Product over coordinates; factor `j` acts on `x_j`.
    Product(Vec<EigenSequence>),
}

/// Kernel value with an upper bound on the truncation error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelValue {
    pub value: f64,
    pub tail_bound: f64,
}

#[derive(Clone, Debug)]
struct Factor {
    spec: EigenSequence,
    paired: bool,
}

impl Factor {
    fn new(spec: EigenSequence) -> Self {
        let paired = spec.is_paired();
        Self { spec, paired }
    }

    fn eval(&self, x: f64, y: f64) -> f64 {
        let v = self.spec.values();
        if v.is_empty() {
            return 0.0;
        }
        let mut acc = v[0];
        if self.paired {
            let mut rot = Rotor::new(x - y);
            for pair in v[1..].chunks(2) {
                acc += 2.0 * pair[0] * rot.next().re;
            }
        } else {
            let mut rx = Rotor::new(x);
            let mut ry = Rotor::new(y);
            for pair in v[1..].chunks(2) {
                let (ex, ey) = (rx.next(), ry.next());
                acc += 2.0 * pair[0] * ex.re * ey.re;
                if let Some(&s) = pair.get(1) {
                    acc += 2.0 * s * ex.im * ey.im;
                }
            }
        }
        acc
    }

    /// Upper bound on `|k(x,y)|` for the truncated factor.
    fn sup(&self) -> f64 {
        let v = self.spec.values();
        v.first().copied().unwrap_or(0.0) + 2.0 * v.iter().skip(1).sum::<f64>()
    }

    fn tail(&self) -> f64 {
        2.0 * self.spec.tail_sum()
    }
}

/// `k(x, y) = Σ_i μ_i φ_i(x) φ_i(y)` over the real Fourier basis, or the
/// coordinatewise product of such sums.
#[derive(Clone, Debug)]
pub struct MercerKernel {
    basis: FourierBasis,
    spectrum: Spectrum,
    factors: Vec<Factor>,
}

impl MercerKernel {
    pub fn new(spec: EigenSequence) -> Self {
        Self {
            basis: FourierBasis::new(1).expect("dimension 1 is valid"),
            factors: vec![Factor::new(spec.clone())],
            spectrum: Spectrum::Flat(spec),
        }
    }

    /// Product of possibly different one-dimensional spectra.
    pub fn product(specs: Vec<EigenSequence>) -> Result<Self> {
        if specs.is_empty() {
            return Err(invalid("m", "product kernel needs at least one factor"));
        }
        Ok(Self {
            basis: FourierBasis::new(specs.len())?,
            factors: specs.iter().cloned().map(Factor::new).collect(),
            spectrum: Spectrum::Product(specs),
        })
    }

    pub fn basis(&self) -> &FourierBasis {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn spectrum(&self) -> &Spectrum {
        &self.spectrum
    }

    /// The spectrum of a one-dimensional kernel.
    pub fn flat(&self) -> Option<&EigenSequence> {
        match &self.spectrum {
            Spectrum::Flat(s) => Some(s),
            Spectrum::Product(_) => None,
        }
    }

    /// Per-coordinate spectra; a flat kernel has one.
    pub fn factors(&self) -> Vec<&EigenSequence> {
        self.factors.iter().map(|f| &f.spec).collect()
    }

    /// True when every factor gives each cosine/sine pair one value.
    pub fn is_stationary(&self) -> bool {
        self.factors.iter().all(|f| f.paired)
    }

    /// Multi-index eigenvalue `μ_𝐢 = Π_j μ_{i_j}`.
    pub fn eigenvalue(&self, idx: &[usize]) -> f64 {
        assert_eq!(idx.len(), self.factors.len());
        idx.iter()
            .zip(&self.factors)
            .map(|(&i, f)| f.spec.get(i))
            .product()
    }

    /// Upper bound on `sup_x k(x, x)` including the tail.
    pub fn kappa(&self) -> f64 {
        self.factors
            .iter()
            .map(|f| {
                if f.paired {
                    f.spec.trace().upper
                } else {
                    f.sup() + f.tail()
                }
            })
            .product()
    }

    /// Truncated kernel value with no domain check.
    pub fn eval_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        self.factors
            .iter()
            .zip(x.iter().zip(y))
            .map(|(f, (&a, &b))| f.eval(a, b))
            .product()
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<KernelValue> {
        self.basis.check_point(x)?;
        self.basis.check_point(y)?;
        let mut value = 1.0;
        let mut hat = 1.0;
        let mut bound = 1.0;
        for (f, (&a, &b)) in self.factors.iter().zip(x.iter().zip(y)) {
            let v = f.eval(a, b);
            value *= v;
            hat *= v.abs();
            bound *= v.abs() + f.tail();
        }
        Ok(KernelValue {
            value,
            tail_bound: bound - hat,
        })
    }

    /// `K_{ab} = k(x_a, x_b)`, symmetric by construction.
    pub fn gram(&self, points: &[Vec<f64>]) -> Result<DMatrix<f64>> {
        for p in points {
            self.basis.check_point(p)?;
        }
        let n = points.len();
        let mut k = DMatrix::zeros(n, n);
        for a in 0..n {
            for b in 0..=a {
                let v = self.eval_unchecked(&points[a], &points[b]);
                k[(a, b)] = v;
                k[(b, a)] = v;
            }
        }
        Ok(k)
    }

    /// `(k(x_1, x), …, k(x_n, x))`.
    pub fn cross(&self, points: &[Vec<f64>], x: &[f64]) -> Result<DVector<f64>> {
        self.basis.check_point(x)?;
        Ok(DVector::from_iterator(
            points.len(),
            points.iter().map(|p| self.eval_unchecked(p, x)),
        ))
    }

    /// Stationary profile `𝒦(u)` with `k(x, y) = 𝒦(x − y)`, for stationary kernels.
    pub fn profile(&self, u: &[f64]) -> Option<f64> {
        if !self.is_stationary() {
            return None;
        }
        let zero = vec![0.0; u.len()];
        Some(self.eval_unchecked(u, &zero))
    }
}

/// `k_Π(x, y) = Π_j k(x_j, y_j)` with one shared non-increasing spectrum.
pub fn product_kernel(base: &EigenSequence, m: usize) -> Result<MercerKernel> {
    if m == 0 {
        return Err(invalid("m", "must be at least 1"));
    }
    if !base.is_non_increasing() {
        return Err(invalid(
            "base",
            "product kernels need a non-increasing spectrum",
        ));
    }
    if m == 1 {
        return Ok(MercerKernel::new(base.clone()));
    }
    MercerKernel::product(vec![base.clone(); m])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral_kernels::spectrum::{adversarial_spectrum, matern_periodic_spectrum};
    use std::f64::consts::PI;

    #[test]
    fn constant_mode_kernel_is_one() {
        let k = MercerKernel::new(EigenSequence::finite(vec![1.0, 0.0, 0.0]).unwrap());
        assert_eq!(k.eval(&[0.3], &[-0.9]).unwrap().value, 1.0);
    }

    #[test]
    fn paired_diagonal_equals_trace() {
        let s = matern_periodic_spectrum(1.5, 256, true).unwrap();
        let k = MercerKernel::new(s.clone());
        let a = k.eval(&[0.3], &[0.3]).unwrap().value;
        let b = k.eval(&[-0.7], &[-0.7]).unwrap().value;
        assert!((a - b).abs() < 1e-12);
        assert!((a - s.truncated_sum()).abs() < 1e-12);
    }

    #[test]
    fn matern_half_matches_closed_form_lattice_sum() {
        // Σ_{j∈ℤ} cos(πju)/(1+j²) = π cosh(π(1−u))/sinh(π) on [0, 2].
        let k = MercerKernel::new(matern_periodic_spectrum(0.5, 513, false).unwrap());
        let kv = k.eval(&[0.25], &[-0.5]).unwrap();
        let u: f64 = 0.75;
        let exact = PI * (PI * (1.0 - u)).cosh() / PI.sinh();
        assert!((kv.value - exact).abs() <= kv.tail_bound + 1e-12);
        // Brute force at 10^5 frequencies is much closer.
        let brute: f64 = 1.0
            + (1..100_000)
                .map(|j| 2.0 * (PI * j as f64 * u).cos() / (1.0 + (j as f64).powi(2)))
                .sum::<f64>();
        assert!((brute - exact).abs() < 1e-9);
    }

    #[test]
    fn unpaired_eval_matches_feature_sum() {
        let s = adversarial_spectrum(2.0, 3, 70).unwrap();
        let k = MercerKernel::new(s.clone());
        let (x, y) = (0.41, -0.83);
        let fx = FourierBasis::features(x, s.len());
        let fy = FourierBasis::features(y, s.len());
        let direct: f64 = (0..s.len()).map(|i| s.values()[i] * fx[i] * fy[i]).sum();
        assert!((k.eval(&[x], &[y]).unwrap().value - direct).abs() < 1e-13);
        assert!(!k.is_stationary());
    }

    #[test]
    fn product_eigenvalue_and_diagonal() {
        let base = EigenSequence::finite(vec![0.5, 0.25, 0.125]).unwrap();
        let k = product_kernel(&base, 2).unwrap();
        assert!((k.eigenvalue(&[2, 3]) - 0.03125).abs() < 1e-15);
        let m = matern_periodic_spectrum(1.5, 64, true).unwrap();
        let k3 = product_kernel(&m, 3).unwrap();
        let d = k3.eval(&[0.1, -0.4, 0.9], &[0.1, -0.4, 0.9]).unwrap().value;
        assert!((d - m.truncated_sum().powi(3)).abs() < 1e-12);
        assert!(product_kernel(&m, 0).is_err());
        let bumpy = EigenSequence::finite(vec![0.1, 0.5]).unwrap();
        assert!(product_kernel(&bumpy, 2).is_err());
    }

    #[test]
    fn m1_product_is_the_flat_kernel() {
        let m = matern_periodic_spectrum(2.5, 32, true).unwrap();
        let a = product_kernel(&m, 1).unwrap();
        let b = MercerKernel::new(m);
        assert_eq!(
            a.eval(&[0.2], &[0.7]).unwrap(),
            b.eval(&[0.2], &[0.7]).unwrap()
        );
    }

    #[test]
    fn out_of_domain_is_rejected() {
        let k = MercerKernel::new(matern_periodic_spectrum(1.5, 8, true).unwrap());
        assert!(k.eval(&[1.5], &[0.0]).is_err());
    }
}
