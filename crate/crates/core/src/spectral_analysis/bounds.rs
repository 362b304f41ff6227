use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::dirichlet::{dirichlet_l1, prefill_odd};
use crate::error::{invalid, Error, Result};
use crate::spectral_kernels::{EigenSequence, FourierBasis, Interval, MercerKernel, Spectrum};

const E: f64 = std::f64::consts::E;

fn check_tau(tau: f64) -> Result<()> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(invalid("tau", format!("must be positive, got {tau}")));
    }
    Ok(())
}

/// `h_i = μ_i / (τ + μ_i)` over the truncation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioSequence {
    pub tau: f64,
    pub values: Vec<f64>,
}

pub fn ratio_sequence(spec: &EigenSequence, tau: f64) -> Result<RatioSequence> {
    check_tau(tau)?;
    Ok(RatioSequence {
        tau,
        values: spec.values().iter().map(|&m| m / (tau + m)).collect(),
    })
}

/// `Σ_{i≤T} μ_i/(τ+μ_i)` plus the tail interval `[0, Σ_{i>T} μ_i/τ]`.
pub fn effective_dimension(spec: &EigenSequence, tau: f64) -> Result<Interval> {
    check_tau(tau)?;
    let head: f64 = spec.values().iter().map(|&m| m / (tau + m)).sum();
    Ok(Interval {
        lower: head,
        upper: head + spec.tail_sum() / tau,
    })
}

/// Effective dimension of a product kernel over the truncated box, with the
/// tail interval from `Σ_{𝐢∉box} μ_𝐢/τ ≤ ((S+t)^m − S^m)/τ`.
pub fn effective_dimension_kernel(k: &MercerKernel, tau: f64) -> Result<Interval> {
    match k.spectrum() {
        Spectrum::Flat(s) => effective_dimension(s, tau),
        Spectrum::Product(specs) => {
            check_tau(tau)?;
            let lens: Vec<usize> = specs.iter().map(|s| s.len()).collect();
            let mut head = 0.0;
            for_each_index(&lens, |idx| {
                let mu: f64 = idx.iter().zip(specs).map(|(&i, s)| s.values()[i]).product();
                head += mu / (tau + mu);
            });
            Ok(Interval {
                lower: head,
                upper: head + product_tail_mass(specs) / tau,
            })
        }
    }
}

/// `Π(S_j + t_j) − Π S_j`: eigenvalue mass outside the truncated box.
fn product_tail_mass(specs: &[EigenSequence]) -> f64 {
    let full: f64 = specs.iter().map(|s| s.trace().upper).product();
    let head: f64 = specs.iter().map(|s| s.truncated_sum()).product();
    (full - head).max(0.0)
}

/// Row-major walk over `0..lens[0] × … × 0..lens[m-1]`.
fn for_each_index(lens: &[usize], mut f: impl FnMut(&[usize])) {
    if lens.contains(&0) {
        return;
    }
    let mut idx = vec![0usize; lens.len()];
    loop {
        f(&idx);
        let mut d = lens.len();
        loop {
            if d == 0 {
                return;
            }
            d -= 1;
            idx[d] += 1;
            if idx[d] < lens[d] {
                break;
            }
            idx[d] = 0;
        }
    }
}

/// `√d_eff` at the upper end of the interval. For the √2-scaled Fourier
/// basis the Lebesgue constant is bounded by `√2` times this value.
pub fn sqrt_deff_bound(spec: &EigenSequence, tau: f64) -> Result<f64> {
    Ok(effective_dimension(spec, tau)?.upper.sqrt())
}

/// Upper bounds on the `L1` norms `B_i` of the basis partial sums.
pub trait LebesgueGrowth: Sync {
    fn b(&self, i: usize) -> f64;
    /// `C` with `B_i ≤ C·log(e+i)` for all `i`.
    fn log_constant(&self) -> f64;
    /// Lets an implementation precompute the first `max_index` values.
    fn prepare(&self, _max_index: usize) {}
}

/// Exact Dirichlet `L1` norms of the real Fourier basis.
#[derive(Clone, Copy, Debug, Default)]
pub struct DirichletGrowth;

/// `B_i = log(e + i)`.
#[derive(Clone, Copy, Debug, Default)]
pub struct LogGrowth;

/// `B_i = 1`.
#[derive(Clone, Copy, Debug, Default)]
pub struct UnitGrowth;

/// Fitted `max_{i ≤ 64} B_i / log(e+i)`.
pub fn dirichlet_log_constant() -> f64 {
    static C: OnceLock<f64> = OnceLock::new();
    *C.get_or_init(|| {
        (1..=64)
            .map(|i| dirichlet_l1(i) / (E + i as f64).ln())
            .fold(0.0, f64::max)
    })
}

impl LebesgueGrowth for DirichletGrowth {
    fn b(&self, i: usize) -> f64 {
        dirichlet_l1(i)
    }
    fn log_constant(&self) -> f64 {
        dirichlet_log_constant()
    }
    fn prepare(&self, max_index: usize) {
        prefill_odd(max_index);
    }
}

impl LebesgueGrowth for LogGrowth {
    fn b(&self, i: usize) -> f64 {
        (E + i as f64).ln()
    }
    fn log_constant(&self) -> f64 {
        1.0
    }
}

impl LebesgueGrowth for UnitGrowth {
    fn b(&self, _i: usize) -> f64 {
        1.0
    }
    fn log_constant(&self) -> f64 {
        1.0
    }
}

/// Pieces of [`abel_bound_1d`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AbelBound {
    pub value: f64,
    pub leading: f64,
    pub interior: f64,
    pub tail: f64,
    /// `(i, B_i)` for every index with a nonzero difference.
    pub b_values: Vec<(usize, f64)>,
}

fn tail_exponent(spec: &EigenSequence) -> Result<Option<(f64, f64, bool)>> {
    match spec.tail() {
        None => Ok(None),
        Some(t) if t.exponent <= 1.0 => Err(Error::DivergentTail(format!(
            "spectrum with tail exponent {}",
            t.exponent
        ))),
        Some(t) => Ok(Some((t.exponent, t.constant, t.monotone))),
    }
}

/// Upper bound on `Σ_{i≥T} |Δh_i| B_i` given `h_T` and the certified tail.
fn abel_tail(spec: &EigenSequence, tau: f64, h_last: f64, b_last: f64, cb: f64) -> Result<f64> {
    let t = spec.len();
    let Some((s, c1, monotone)) = tail_exponent(spec)? else {
        // h_{T+1} = 0: a single drop.
        return Ok(h_last * b_last);
    };
    let tf = t.max(1) as f64;
    if monotone {
        // Σ_{i≥T}(h_i − h_{i+1}) log(e+i) = h_T log(e+T) + Σ_{i>T} h_i Δlog.
        Ok(cb * (h_last * (E + tf).ln() + c1 / (tau * s * tf.powf(s))))
    } else {
        let lead = h_last * b_last;
        let rest = 2.0 * cb * c1 / tau
            * ((E + tf).ln() * tf.powf(1.0 - s) / (s - 1.0) + tf.powf(1.0 - s) / (s - 1.0).powi(2));
        Ok(lead + rest)
    }
}

/// Upper bound on `sup_x ‖Σ_{i>T} h_i φ_i(x) φ_i(·)‖_{L1}`.
pub fn truncation_error_1d(
    spec: &EigenSequence,
    tau: f64,
    growth: &dyn LebesgueGrowth,
) -> Result<f64> {
    check_tau(tau)?;
    let t = spec.len();
    let Some((s, c1, monotone)) = tail_exponent(spec)? else {
        return Ok(0.0);
    };
    let cb = growth.log_constant();
    let tf = t.max(1) as f64;
    let direct = 2.0 * c1 * tf.powf(1.0 - s) / ((s - 1.0) * tau);
    if monotone {
        let h_last = spec.values().last().map_or(1.0, |&m| m / (tau + m));
        let h_next = h_last.min(c1 * (tf + 1.0).powf(-s) / tau);
        let abel = cb * (2.0 * h_next * (E + tf + 1.0).ln() + c1 / (tau * s * tf.powf(s)));
        Ok(abel.min(direct))
    } else {
        let abel = 2.0 * cb * c1 / tau
            * ((E + tf).ln() * tf.powf(1.0 - s) / (s - 1.0) + tf.powf(1.0 - s) / (s - 1.0).powi(2));
        Ok(abel.min(direct))
    }
}

/// `h_1 B_1 + Σ_i |h_{i+1} − h_i| B_i`, with the part past the truncation
/// bounded through the tail certificate.
pub fn abel_bound_1d(
    spec: &EigenSequence,
    tau: f64,
    growth: &dyn LebesgueGrowth,
) -> Result<AbelBound> {
    check_tau(tau)?;
    let h = ratio_sequence(spec, tau)?.values;
    if h.is_empty() {
        let tail = abel_tail(spec, tau, 0.0, 0.0, growth.log_constant())?;
        return Ok(AbelBound {
            value: tail,
            leading: 0.0,
            interior: 0.0,
            tail,
            b_values: vec![],
        });
    }
    growth.prepare(h.len());
    let mut b_values = Vec::new();
    let leading = h[0] * growth.b(1);
    b_values.push((1, growth.b(1)));
    let mut interior = 0.0;
    for i in 1..h.len() {
        let d = (h[i] - h[i - 1]).abs();
        if d > 0.0 {
            let b = growth.b(i);
            interior += d * b;
            if b_values.last().map(|p| p.0) != Some(i) {
                b_values.push((i, b));
            }
        }
    }
    let t = h.len();
    let b_last = growth.b(t);
    let tail = abel_tail(spec, tau, h[t - 1], b_last, growth.log_constant())?;
    if h[t - 1] > 0.0 {
        b_values.push((t, b_last));
    }
    Ok(AbelBound {
        value: leading + interior + tail,
        leading,
        interior,
        tail,
        b_values,
    })
}

/// Pieces of [`abel_bound_multi`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultiAbelBound {
    pub value: f64,
    /// `H(𝟏) Π log(e+1)`, which makes `m = 1` agree with the one-dimensional bound.
    pub leading: f64,
    /// Mixed differences whose cell lies strictly inside the box.
    pub interior: f64,
    /// Mixed differences of cells touching the box boundary, where `H` drops to 0.
    pub boundary: f64,
    /// Operator norm of everything outside the box.
    pub tail: f64,
    pub truncation: Vec<usize>,
}

/// Largest dimension accepted by [`abel_bound_multi`].
pub const MAX_MULTI_DIM: usize = 4;

/// `Σ_𝐢 |Δ^𝟏 H(𝐢)| Π_j log(e+i_j)` over the truncated box for a product
/// kernel, with `H = μ/(τ+μ)` extended by zero outside the box.
///
/// Inside the box this is the exact summation-by-parts expression of the
/// truncated operator, so the only certified slack is the operator tail
/// `2^m Σ_{𝐢∉box} min(1, μ_𝐢/τ)`.
pub fn abel_bound_multi(k: &MercerKernel, tau: f64, trunc: usize) -> Result<MultiAbelBound> {
    check_tau(tau)?;
    let specs: Vec<EigenSequence> = match k.spectrum() {
        Spectrum::Product(specs) => specs.iter().map(|s| s.truncate(trunc)).collect(),
        Spectrum::Flat(s) => vec![s.truncate(trunc)],
    };
    let m = specs.len();
    if m > MAX_MULTI_DIM {
        return Err(Error::Unsupported(format!(
            "mixed-difference sum in dimension {m} (at most {MAX_MULTI_DIM})"
        )));
    }
    for s in &specs {
        tail_exponent(s)?;
    }
    let lens: Vec<usize> = specs.iter().map(|s| s.len()).collect();
    let total: usize = lens.iter().product();
    // Row-major H over the box.
    let mut hgrid = Vec::with_capacity(total);
    for_each_index(&lens, |idx| {
        let mu: f64 = idx
            .iter()
            .zip(&specs)
            .map(|(&i, s)| s.values()[i])
            .product();
        hgrid.push(mu / (tau + mu));
    });
    let mut strides = vec![1usize; m];
    for d in (0..m.saturating_sub(1)).rev() {
        strides[d] = strides[d + 1] * lens[d + 1];
    }
    let logs: Vec<Vec<f64>> = lens
        .iter()
        .map(|&l| (1..=l).map(|i| (E + i as f64).ln()).collect())
        .collect();
    let mut interior = 0.0;
    let mut boundary = 0.0;
    let corners = 1usize << m;
    for_each_index(&lens, |idx| {
        let mut diff = 0.0;
        for c in 0..corners {
            let mut off = 0usize;
            let mut inside = true;
            let mut ones = 0;
            for d in 0..m {
                if c >> d & 1 == 1 {
                    ones += 1;
                    if idx[d] + 1 >= lens[d] {
                        inside = false;
                        break;
                    }
                    off += (idx[d] + 1) * strides[d];
                } else {
                    off += idx[d] * strides[d];
                }
            }
            if inside {
                let sign = if (m - ones).is_multiple_of(2) {
                    1.0
                } else {
                    -1.0
                };
                diff += sign * hgrid[off];
            }
        }
        let w: f64 = idx.iter().zip(&logs).map(|(&i, l)| l[i]).product();
        let edge = idx.iter().zip(&lens).any(|(&i, &l)| i + 1 == l);
        if edge {
            boundary += diff.abs() * w;
        } else {
            interior += diff.abs() * w;
        }
    });
    let leading = hgrid.first().copied().unwrap_or(0.0) * (E + 1.0).ln().powi(m as i32);
    let tail = (2f64).powi(m as i32) * (product_tail_mass(&specs) / tau);
    Ok(MultiAbelBound {
        value: leading + interior + boundary + tail,
        leading,
        interior,
        boundary,
        tail,
        truncation: lens,
    })
}

/// `(Σ_{i≤T} h_i φ_i(x)φ_i(y), h_T S_T(x,y) − Σ_{i<T} Δh_i S_i(x,y))`.
///
/// Both sides agree for any finite `h`; the pair is exposed so the
/// summation-by-parts step can be checked numerically.
pub fn summation_by_parts(h: &[f64], x: f64, y: f64) -> (f64, f64) {
    let t = h.len();
    let px = FourierBasis::features(x, t);
    let py = FourierBasis::features(y, t);
    let terms: Vec<f64> = px.iter().zip(&py).map(|(a, b)| a * b).collect();
    let direct: f64 = h.iter().zip(&terms).map(|(a, b)| a * b).sum();
    let mut partial = 0.0;
    let mut telescoped = 0.0;
    for i in 0..t {
        partial += terms[i];
        if i + 1 < t {
            telescoped -= (h[i + 1] - h[i]) * partial;
        } else {
            telescoped += h[i] * partial;
        }
    }
    (direct, telescoped)
}
