use std::f64::consts::{PI, SQRT_2};

use crate::error::{Error, Result};
use crate::trig::Rotor;

/// Which trigonometric function a flat index refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Phase {
    Constant,
    Cos,
    Sin,
}

/// The real Fourier basis on `[-1, 1]^m`, orthonormal under the uniform
/// probability measure.
///
/// Flat index `i ≥ 1` runs frequency-major and cosine-before-sine:
/// `φ_1 = 1`, `φ_{2j} = √2 cos(πjx)`, `φ_{2j+1} = √2 sin(πjx)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FourierBasis {
    dim: usize,
}

impl FourierBasis {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(crate::error::invalid("dim", "must be at least 1"));
        }
        Ok(Self { dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `sup |φ_i|` over all indices.
    pub fn sup_norm(&self) -> f64 {
        SQRT_2.powi(self.dim as i32)
    }

    /// Frequency and phase of flat index `i`.
    pub fn frequency(i: usize) -> (usize, Phase) {
        assert!(i >= 1, "flat indices start at 1");
        match i {
            1 => (0, Phase::Constant),
            _ if i.is_multiple_of(2) => (i / 2, Phase::Cos),
            _ => (i / 2, Phase::Sin),
        }
    }

    /// Inverse of [`FourierBasis::frequency`].
    pub fn flat_index(freq: usize, phase: Phase) -> usize {
        match phase {
            Phase::Constant => 1,
            Phase::Cos => 2 * freq,
            Phase::Sin => 2 * freq + 1,
        }
    }

    /// One-dimensional `φ_i(x)`.
    pub fn phi(i: usize, x: f64) -> f64 {
        let (j, phase) = Self::frequency(i);
        let t = PI * ((j as f64 * x) % 2.0);
        match phase {
            Phase::Constant => 1.0,
            Phase::Cos => SQRT_2 * t.cos(),
            Phase::Sin => SQRT_2 * t.sin(),
        }
    }

    /// `φ_𝐢(x) = Π_j φ_{i_j}(x_j)`.
    pub fn phi_multi(&self, idx: &[usize], x: &[f64]) -> Result<f64> {
        self.check_point(x)?;
        if idx.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: idx.len(),
            });
        }
        Ok(idx
            .iter()
            .zip(x)
            .map(|(&i, &xi)| Self::phi(i, xi))
            .product())
    }

    /// `(φ_1(x), …, φ_count(x))` in one pass.
    pub fn features(x: f64, count: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(count);
        if count == 0 {
            return out;
        }
        out.push(1.0);
        let mut rot = Rotor::new(x);
        while out.len() < count {
            let e = rot.next();
            out.push(SQRT_2 * e.re);
            if out.len() < count {
                out.push(SQRT_2 * e.im);
            }
        }
        out
    }

    pub fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        if x.iter().any(|v| !(-1.0..=1.0).contains(v)) {
            return Err(Error::OutOfDomain {
                point: x.to_vec(),
                domain: format!("[-1,1]^{}", self.dim),
            });
        }
        Ok(())
    }
}
