use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::data::Dataset;
use crate::error::{invalid, Error, Result};
use crate::spectral_kernels::MercerKernel;

/// Relative size of a negative variance that is clamped silently.
const CLAMP_WARN: f64 = 1e-10;

/// How the ridge `c` in `(K + cI)` is expressed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "convention", content = "value", rename_all = "lowercase")]
pub enum RegularizationSpec {
    /// `c = nτ`.
    Normalized(f64),
    /// `c = λ`.
    Raw(f64),
}

impl RegularizationSpec {
    pub fn normalized(tau: f64) -> Result<Self> {
        Self::Normalized(tau).validated()
    }

    pub fn raw(lambda: f64) -> Result<Self> {
        Self::Raw(lambda).validated()
    }

    fn validated(self) -> Result<Self> {
        let v = self.value();
        if !(v > 0.0) || !v.is_finite() {
            return Err(invalid(
                "regularization",
                format!("must be positive, got {v}"),
            ));
        }
        Ok(self)
    }

    pub fn value(&self) -> f64 {
        match *self {
            Self::Normalized(v) | Self::Raw(v) => v,
        }
    }

    /// The ridge added to `K` for `n` samples.
    pub fn resolve(&self, n: usize) -> f64 {
        match *self {
            Self::Normalized(tau) => n as f64 * tau,
            Self::Raw(lambda) => lambda,
        }
    }
}

/// Kernel ridge regressor with a row-wise Cholesky factor of `K + cI`.
///
/// Under the normalized convention `c = nτ` changes with `n`, so appending a
/// point refactorizes; under the raw convention an append costs `O(n²)`.
#[derive(Debug)]
pub struct KrrModel {
    kernel: Arc<MercerKernel>,
    reg: RegularizationSpec,
    c: f64,
    points: Vec<Vec<f64>>,
    labels: Vec<f64>,
    /// Row `i` holds `L[i][0..=i]`.
    chol: Vec<Vec<f64>>,
    weights: Vec<f64>,
    clamped: AtomicUsize,
}

impl Clone for KrrModel {
    fn clone(&self) -> Self {
        Self {
            kernel: self.kernel.clone(),
            reg: self.reg,
            c: self.c,
            points: self.points.clone(),
            labels: self.labels.clone(),
            chol: self.chol.clone(),
            weights: self.weights.clone(),
            clamped: AtomicUsize::new(self.clamped.load(Ordering::Relaxed)),
        }
    }
}

impl KrrModel {
    /// A model with no data: predictions are 0, `σ(x) = √k(x,x)`.
    pub fn empty(kernel: Arc<MercerKernel>, reg: RegularizationSpec) -> Result<Self> {
        let reg = reg.validated()?;
        Ok(Self {
            kernel,
            reg,
            c: reg.resolve(0),
            points: vec![],
            labels: vec![],
            chol: vec![],
            weights: vec![],
            clamped: AtomicUsize::new(0),
        })
    }

    pub fn fit(data: &Dataset, kernel: Arc<MercerKernel>, reg: RegularizationSpec) -> Result<Self> {
        if data.dim() != kernel.dim() {
            return Err(Error::DimensionMismatch {
                expected: kernel.dim(),
                got: data.dim(),
            });
        }
        let mut m = Self::empty(kernel, reg)?;
        m.points = data.inputs().to_vec();
        m.labels = data.labels().to_vec();
        m.refactor()?;
        Ok(m)
    }

    pub fn kernel(&self) -> &MercerKernel {
        &self.kernel
    }

    pub fn regularization(&self) -> RegularizationSpec {
        self.reg
    }

    /// The resolved ridge `c`.
    pub fn ridge(&self) -> f64 {
        self.c
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Number of negative variances clamped to zero so far.
    pub fn clamp_count(&self) -> usize {
        self.clamped.load(Ordering::Relaxed)
    }

    /// `L` as a dense lower-triangular matrix.
    pub fn factor(&self) -> DMatrix<f64> {
        let n = self.len();
        DMatrix::from_fn(n, n, |i, j| if j <= i { self.chol[i][j] } else { 0.0 })
    }

    fn refactor(&mut self) -> Result<()> {
        let n = self.points.len();
        self.c = self.reg.resolve(n);
        self.chol.clear();
        for i in 0..n {
            let row = self.bordered_row(i)?;
            self.chol.push(row);
        }
        self.solve_weights();
        Ok(())
    }

    /// Row `i` of the factor given rows `0..i`.
    fn bordered_row(&self, i: usize) -> Result<Vec<f64>> {
        let x = &self.points[i];
        let mut row: Vec<f64> = (0..i)
            .map(|j| self.kernel.eval_unchecked(&self.points[j], x))
            .collect();
        self.forward_in_place(&mut row);
        let diag =
            self.kernel.eval_unchecked(x, x) + self.c - row.iter().map(|v| v * v).sum::<f64>();
        if !(diag > 0.0) {
            return Err(Error::NumericalDegeneracy(format!(
                "pivot {diag:e} at row {i} while factorizing K + {}I",
                self.c
            )));
        }
        row.push(diag.sqrt());
        Ok(row)
    }

    /// Solves `L z = b` for the first `b.len()` rows.
    fn forward_in_place(&self, b: &mut [f64]) {
        for i in 0..b.len() {
            let row = &self.chol[i];
            let s: f64 = row[..i].iter().zip(&b[..i]).map(|(l, z)| l * z).sum();
            b[i] = (b[i] - s) / row[i];
        }
    }

    fn backward_in_place(&self, b: &mut [f64]) {
        for i in (0..b.len()).rev() {
            let v = b[i] / self.chol[i][i];
            b[i] = v;
            for (k, bk) in b.iter_mut().enumerate().take(i) {
                *bk -= self.chol[i][k] * v;
            }
        }
    }

    fn solve_weights(&mut self) {
        let mut w = self.labels.clone();
        self.forward_in_place(&mut w);
        self.backward_in_place(&mut w);
        self.weights = w;
    }

    /// Adds one observation, extending the factor by one row.
    pub fn append(&mut self, x: Vec<f64>, y: f64) -> Result<()> {
        self.kernel.basis().check_point(&x)?;
        self.points.push(x);
        self.labels.push(y);
        if matches!(self.reg, RegularizationSpec::Normalized(_)) {
            return self.refactor();
        }
        match self.bordered_row(self.points.len() - 1) {
            Ok(row) => {
                self.chol.push(row);
                self.solve_weights();
                Ok(())
            }
            Err(_) => {
                log::warn!("rank-one update lost positivity; refactorizing");
                self.refactor()
            }
        }
    }

    /// `(K + cI)⁻¹ rhs` with the stored factor.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        if rhs.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                got: rhs.len(),
            });
        }
        let mut w = rhs.to_vec();
        self.forward_in_place(&mut w);
        self.backward_in_place(&mut w);
        Ok(w)
    }

    /// `L⁻¹ v` for the lower factor `L` of `K + cI`.
    pub fn whiten(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                got: v.len(),
            });
        }
        let mut w = v.to_vec();
        self.forward_in_place(&mut w);
        Ok(w)
    }

    /// `Ψ(x)ᵀ w`.
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        self.kernel.basis().check_point(x)?;
        Ok(self
            .points
            .iter()
            .zip(&self.weights)
            .map(|(p, w)| w * self.kernel.eval_unchecked(p, x))
            .sum())
    }

    /// `√(k(x,x) − Ψ(x)ᵀ(K+cI)⁻¹Ψ(x))`, clamped at 0.
    pub fn posterior_std(&self, x: &[f64]) -> Result<f64> {
        self.kernel.basis().check_point(x)?;
        let kxx = self.kernel.eval_unchecked(x, x);
        let mut v: Vec<f64> = self
            .points
            .iter()
            .map(|p| self.kernel.eval_unchecked(p, x))
            .collect();
        self.forward_in_place(&mut v);
        let var = kxx - v.iter().map(|a| a * a).sum::<f64>();
        if var < 0.0 {
            self.clamped.fetch_add(1, Ordering::Relaxed);
            if var < -CLAMP_WARN * kxx.abs().max(1.0) {
                log::warn!("posterior variance {var:e} clamped at {x:?}");
            }
            return Ok(0.0);
        }
        Ok(var.sqrt())
    }

    /// `½ log det(I + K/c)` from the stored factor.
    pub fn information_gain(&self) -> f64 {
        let logdet: f64 = self.chol.iter().enumerate().map(|(i, r)| r[i].ln()).sum();
        logdet - 0.5 * self.len() as f64 * self.c.ln()
    }
}
