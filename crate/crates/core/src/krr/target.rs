use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::spectral_kernels::{EigenSequence, FourierBasis, MercerKernel};

/// `‖f‖_H = √(Σ f_i²/μ_i)` for a finite expansion in flat basis order.
///
/// Coefficients on modes with `μ_i = 0` make the norm infinite.
pub fn rkhs_norm(spec: &EigenSequence, coeffs: &[f64]) -> f64 {
    coeffs
        .iter()
        .enumerate()
        .filter(|(_, c)| **c != 0.0)
        .map(|(i, c)| {
            let mu = spec.get(i + 1);
            if mu > 0.0 {
                c * c / mu
            } else {
                f64::INFINITY
            }
        })
        .sum::<f64>()
        .sqrt()
}

/// One term `c · Π_j φ_{i_j}(x_j)` of a finite expansion.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub index: Vec<usize>,
    pub coeff: f64,
}

/// `f = f_⋆ + ε·g` with `f_⋆` a finite expansion in the kernel's basis and
/// `g(x) = cos(π q x_1)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TargetFunction {
    terms: Vec<Term>,
    norm: f64,
    eps: f64,
    q: usize,
}

impl TargetFunction {
    pub fn new(kernel: &MercerKernel, terms: Vec<Term>, eps: f64, q: usize) -> Result<Self> {
        let dim = kernel.dim();
        let mut sq = 0.0;
        for t in &terms {
            if t.index.len() != dim || t.index.contains(&0) {
                return Err(invalid(
                    "terms",
                    "each index needs one 1-based entry per coordinate",
                ));
            }
            let mu = kernel.eigenvalue(&t.index);
            if !(mu > 0.0) {
                return Err(invalid(
                    "terms",
                    format!("index {:?} has zero eigenvalue", t.index),
                ));
            }
            sq += t.coeff * t.coeff / mu;
        }
        let target = Self {
            terms,
            norm: sq.sqrt(),
            eps: 0.0,
            q: 1,
        };
        target.with_perturbation(eps, q)
    }

    /// Gaussian coefficients `z_𝐢 √μ_𝐢` on every multi-index with entries up
    /// to `max_index`, scaled to RKHS norm `norm`.
    pub fn random(
        kernel: &MercerKernel,
        max_index: usize,
        norm: f64,
        rng: &mut impl Rng,
    ) -> Result<Self> {
        if max_index == 0 || !(norm >= 0.0) {
            return Err(invalid(
                "max_index",
                "need at least one mode and a nonnegative norm",
            ));
        }
        let dim = kernel.dim();
        let mut terms = Vec::new();
        let mut idx = vec![1usize; dim];
        loop {
            let mu = kernel.eigenvalue(&idx);
            if mu > 0.0 {
                let z: f64 = rng.sample(StandardNormal);
                terms.push(Term {
                    index: idx.clone(),
                    coeff: z * mu.sqrt(),
                });
            }
            let mut d = dim;
            loop {
                if d == 0 {
                    let q = FourierBasis::frequency(max_index).0 + 1;
                    let raw = Self::new(kernel, terms, 0.0, q)?;
                    let scale = if raw.norm > 0.0 { norm / raw.norm } else { 0.0 };
                    return Ok(raw.scaled(scale));
                }
                d -= 1;
                idx[d] += 1;
                if idx[d] <= max_index {
                    break;
                }
                idx[d] = 1;
            }
        }
    }

    fn scaled(mut self, factor: f64) -> Self {
        for t in &mut self.terms {
            t.coeff *= factor;
        }
        self.norm *= factor.abs();
        self
    }

    /// Replaces `ε` and `q`; `q` must exceed every frequency of `f_⋆` in
    /// the first coordinate so that `g` is orthogonal to it.
    pub fn with_perturbation(mut self, eps: f64, q: usize) -> Result<Self> {
        if !(eps >= 0.0) {
            return Err(invalid("eps", "must be nonnegative"));
        }
        let top = self
            .terms
            .iter()
            .map(|t| FourierBasis::frequency(t.index[0]).0)
            .max()
            .unwrap_or(0);
        if q <= top {
            return Err(invalid(
                "q",
                format!("{q} does not exceed the support frequency {top}"),
            ));
        }
        self.eps = eps;
        self.q = q;
        Ok(self)
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    /// `‖f_⋆‖_H`.
    pub fn rkhs_norm(&self) -> f64 {
        self.norm
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn frequency(&self) -> usize {
        self.q
    }

    pub fn dim(&self) -> usize {
        self.terms.first().map_or(1, |t| t.index.len())
    }

    pub fn eval_star(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                t.coeff
                    * t.index
                        .iter()
                        .zip(x)
                        .map(|(&i, &xi)| FourierBasis::phi(i, xi))
                        .product::<f64>()
            })
            .sum()
    }

    pub fn perturbation(&self, x: &[f64]) -> f64 {
        (PI * ((self.q as f64 * x[0]) % 2.0)).cos()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.eval_star(x) + self.eps * self.perturbation(x)
    }
}
