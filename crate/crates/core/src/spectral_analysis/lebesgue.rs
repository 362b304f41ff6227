use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::bounds::{effective_dimension, truncation_error_1d, DirichletGrowth};
use super::dirichlet::SUP_GRID;
use crate::error::{invalid, Error, Result};
use crate::quadrature::CompositeRule;
use crate::spectral_kernels::{EigenSequence, FourierBasis, MercerKernel, Spectrum};
use crate::trig::{TrigSeries, DEFAULT_OVERSAMPLE};

/// Largest FFT grid used for multivariate `L1` norms.
const MAX_GRID_POINTS: usize = 1 << 22;

/// A grid supremum of `‖Σ h_i φ_i(x) φ_i(·)‖_{L1}`.
///
/// `value` is a lower bound for the Lebesgue constant of the truncated
/// operator up to `tolerance`, which also accounts for the spectrum tail.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LebesgueEstimate {
    pub value: f64,
    pub tolerance: f64,
    pub argmax: Vec<f64>,
}

/// `y ↦ Σ_{i≤T} h_i φ_i(x) φ_i(y)` for a one-dimensional spectrum.
pub fn regularized_series(h: &[f64], x: f64) -> TrigSeries {
    let freqs = h.len() / 2;
    let mut cos = Vec::with_capacity(freqs);
    let mut sin = Vec::with_capacity(freqs);
    for j in 1..=freqs {
        let (s, c) = (std::f64::consts::PI * ((j as f64 * x) % 2.0)).sin_cos();
        cos.push(2.0 * h[2 * j - 1] * c);
        sin.push(2.0 * h.get(2 * j).copied().unwrap_or(0.0) * s);
    }
    TrigSeries::new(h.first().copied().unwrap_or(0.0), cos, sin)
}

/// The default `x` grid: `{0}` for stationary kernels, otherwise
/// [`SUP_GRID`] equispaced points on `[-1, 1)`.
pub fn default_x_grid(k: &MercerKernel) -> Vec<Vec<f64>> {
    if k.is_stationary() {
        return vec![vec![0.0; k.dim()]];
    }
    (0..SUP_GRID)
        .map(|i| vec![-1.0 + 2.0 * i as f64 / SUP_GRID as f64; k.dim()])
        .collect()
}

fn estimate_1d(spec: &EigenSequence, tau: f64, grid: &[Vec<f64>]) -> Result<LebesgueEstimate> {
    let h: Vec<f64> = spec.values().iter().map(|&m| m / (tau + m)).collect();
    let paired = spec.is_paired();
    // For unpaired spectra the norm at −x equals the norm at x, so each
    // mirror pair of grid points is evaluated once.
    let mut points: Vec<f64> = grid.iter().map(|p| p[0]).collect();
    if !paired {
        points = points.iter().map(|x| -x.abs()).collect();
        points.sort_by(f64::total_cmp);
        points.dedup();
    }
    let best = points
        .par_iter()
        .map(|&x| (x, regularized_series(&h, x).l1_norm(DEFAULT_OVERSAMPLE)))
        .reduce(
            || {
                (
                    f64::NAN,
                    crate::trig::L1Estimate {
                        value: f64::NEG_INFINITY,
                        tolerance: 0.0,
                    },
                )
            },
            |a, b| {
                let tol = a.1.tolerance.max(b.1.tolerance);
                let pick = if b.1.value > a.1.value || (b.1.value == a.1.value && b.0 < a.0) {
                    b
                } else {
                    a
                };
                (
                    pick.0,
                    crate::trig::L1Estimate {
                        value: pick.1.value,
                        tolerance: tol,
                    },
                )
            },
        );
    let tail = truncation_error_1d(spec, tau, &DirichletGrowth)?;
    Ok(LebesgueEstimate {
        value: best.1.value,
        tolerance: best.1.tolerance + tail,
        argmax: vec![best.0],
    })
}

/// Values of `F(y) = Σ_𝐣 c_𝐣 Π_d cos(π j_d y_d)` on the periodic grid of
/// side `m_side`, with `c` row-major over `0..freqs` per dimension.
fn cosine_grid(c: &[f64], freqs: usize, dim: usize, m_side: usize) -> Vec<f64> {
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_inverse(m_side);
    // Expand from freqs^dim to m_side^dim one axis at a time.
    let mut cur = c.to_vec();
    let mut shape = vec![freqs; dim];
    for axis in 0..dim {
        let outer: usize = shape[..axis].iter().product();
        let inner: usize = shape[axis + 1..].iter().product();
        let mut next_shape = shape.clone();
        next_shape[axis] = m_side;
        let mut next = vec![0.0; outer * m_side * inner];
        let mut buf = vec![Complex64::new(0.0, 0.0); m_side];
        for o in 0..outer {
            for i in 0..inner {
                buf.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
                for j in 0..freqs {
                    let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                    buf[j] = Complex64::new(sign * cur[(o * freqs + j) * inner + i], 0.0);
                }
                fft.process(&mut buf);
                for k in 0..m_side {
                    next[(o * m_side + k) * inner + i] = buf[k].re;
                }
            }
        }
        cur = next;
        shape = next_shape;
    }
    cur
}

/// Mean of `|F|` on the full grid and on the subgrid of every other point.
fn grid_l1(values: &[f64], dim: usize, m_side: usize) -> (f64, f64) {
    let fine = values.iter().map(|v| v.abs()).sum::<f64>() / values.len() as f64;
    let mut coarse = 0.0;
    let mut count = 0usize;
    'outer: for (flat, v) in values.iter().enumerate() {
        let mut r = flat;
        for _ in 0..dim {
            if (r % m_side) % 2 == 1 {
                continue 'outer;
            }
            r /= m_side;
        }
        coarse += v.abs();
        count += 1;
    }
    (fine, coarse / count as f64)
}

fn estimate_product(specs: &[EigenSequence], tau: f64) -> Result<LebesgueEstimate> {
    if !specs.iter().all(|s| s.is_paired()) {
        return Err(Error::Unsupported(
            "multivariate Lebesgue estimates need stationary factors".into(),
        ));
    }
    let dim = specs.len();
    // Coefficient of Π cos(π j_d y_d) at x = 0 is H(𝐢(𝐣)) Π w(j_d).
    let freqs = specs.iter().map(|s| s.len().div_ceil(2)).max().unwrap_or(1);
    let value_at = |s: &EigenSequence, j: usize| -> f64 {
        if j == 0 {
            s.get(1)
        } else {
            s.get(2 * j)
        }
    };
    let total = freqs.pow(dim as u32);
    let mut c = vec![0.0; total];
    for (flat, slot) in c.iter_mut().enumerate() {
        let mut r = flat;
        let mut mu = 1.0;
        let mut w = 1.0;
        for d in (0..dim).rev() {
            let j = r % freqs;
            r /= freqs;
            mu *= value_at(&specs[d], j);
            if j > 0 {
                w *= 2.0;
            }
        }
        *slot = w * mu / (tau + mu);
    }
    // The finest power-of-two grid within budget; |F| has kinks, so the grid
    // mean converges only quadratically.
    let mut m_side = 1usize << (MAX_GRID_POINTS.trailing_zeros() as usize / dim).min(16);
    m_side = m_side.max((4 * (freqs + 1)).next_power_of_two());
    if m_side.pow(dim as u32) > MAX_GRID_POINTS {
        return Err(Error::Unsupported(format!(
            "grid of side {m_side} in dimension {dim} is too large"
        )));
    }
    let values = cosine_grid(&c, freqs, dim, m_side);
    let (fine, coarse) = grid_l1(&values, dim, m_side);
    let box_tail: f64 = {
        let full: f64 = specs.iter().map(|s| s.trace().upper).product();
        let head: f64 = specs.iter().map(|s| s.truncated_sum()).product();
        (2f64).powi(dim as i32) * (full - head).max(0.0) / tau
    };
    Ok(LebesgueEstimate {
        value: fine,
        tolerance: (fine - coarse).abs() + box_tail + 1e-12 * fine,
        argmax: vec![0.0; dim],
    })
}

/// Grid supremum over `x` of the `L1` norm of the regularised kernel section.
pub fn lebesgue_estimate(
    k: &MercerKernel,
    tau: f64,
    x_grid: Option<&[Vec<f64>]>,
) -> Result<LebesgueEstimate> {
    if !(tau > 0.0) {
        return Err(invalid("tau", "must be positive"));
    }
    let owned;
    let grid = match x_grid {
        Some(g) => g,
        None => {
            owned = default_x_grid(k);
            &owned
        }
    };
    if grid.is_empty() {
        return Err(invalid("x_grid", "must contain at least one point"));
    }
    for p in grid {
        k.basis().check_point(p)?;
    }
    match k.spectrum() {
        Spectrum::Flat(s) => estimate_1d(s, tau, grid),
        Spectrum::Product(specs) if specs.len() == 1 => estimate_1d(&specs[0], tau, grid),
        Spectrum::Product(specs) => estimate_product(specs, tau),
    }
}

/// `P_τ f = Σ_i h_i ⟨f, φ_i⟩ φ_i`, returned as a trigonometric series.
pub fn population_apply(k: &MercerKernel, tau: f64, f: impl Fn(f64) -> f64) -> Result<TrigSeries> {
    if !(tau > 0.0) {
        return Err(invalid("tau", "must be positive"));
    }
    let spec = k
        .flat()
        .ok_or_else(|| Error::Unsupported("population operator of product kernels".into()))?;
    let t = spec.len();
    let rule = CompositeRule::resolving(t / 2 + 1);
    let fx: Vec<f64> = rule.nodes().iter().map(|&x| f(x)).collect();
    let mut coeffs = vec![0.0; t];
    for ((&x, &w), &v) in rule.nodes().iter().zip(rule.weights()).zip(&fx) {
        let feats = FourierBasis::features(x, t);
        for (c, p) in coeffs.iter_mut().zip(&feats) {
            *c += w * v * p;
        }
    }
    for (c, &m) in coeffs.iter_mut().zip(spec.values()) {
        *c *= m / (tau + m);
    }
    Ok(TrigSeries::from_basis_coefficients(&coeffs))
}

/// One row of [`adversarial_ratio_scan`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioPoint {
    pub tau: f64,
    pub lebesgue: f64,
    pub d_eff: f64,
    pub ratio: f64,
}

/// `Λ_estimate(τ) / √d_eff(τ)` along a grid of `τ`, with the maximum.
pub fn adversarial_ratio_scan(
    spec: &EigenSequence,
    tau_grid: &[f64],
) -> Result<(Vec<RatioPoint>, f64)> {
    let k = MercerKernel::new(spec.clone());
    let mut rows = Vec::with_capacity(tau_grid.len());
    for &tau in tau_grid {
        let lam = lebesgue_estimate(&k, tau, None)?;
        let d = effective_dimension(spec, tau)?.upper;
        let ratio = if d > 0.0 { lam.value / d.sqrt() } else { 0.0 };
        rows.push(RatioPoint {
            tau,
            lebesgue: lam.value,
            d_eff: d,
            ratio,
        });
    }
    let max = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    Ok((rows, max))
}
