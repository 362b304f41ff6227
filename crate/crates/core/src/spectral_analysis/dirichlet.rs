//! `B_i = sup_x ‖Σ_{l≤i} φ_l(x) φ_l(·)‖_{L1}` for the real Fourier basis.

use std::cell::RefCell;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Mutex, OnceLock};

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::trig::{L1Estimate, TrigSeries, DEFAULT_OVERSAMPLE};

/// Points of the `x` grid used when the partial sum ends on a cosine.
pub const SUP_GRID: usize = 256;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// `y ↦ Σ_{l≤i} φ_l(x) φ_l(y)` as a trigonometric series.
pub fn partial_sum_series(i: usize, x: f64) -> TrigSeries {
    assert!(i >= 1);
    let freqs = i / 2;
    let mut cos = Vec::with_capacity(freqs);
    let mut sin = Vec::with_capacity(freqs);
    for j in 1..=freqs {
        let (s, c) = (PI * ((j as f64 * x) % 2.0)).sin_cos();
        cos.push(2.0 * c);
        sin.push(if 2 * j < i { 2.0 * s } else { 0.0 });
    }
    TrigSeries::new(1.0, cos, sin)
}

/// `‖D_n‖_{L1}` for the Dirichlet kernel `D_n(y) = 1 + 2Σ_{j≤n} cos(πjy)`.
///
/// `D_n` vanishes exactly at `y = 2k/(2n+1)`, so integrating between
/// consecutive zeros with the antiderivative `G(y) = y + (2/π)Σ sin(πjy)/j`
/// is exact. All `G(2k/(2n+1))` come from one DFT of length `2n+1`.
pub fn dirichlet_kernel_l1(n: usize) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let len = 2 * n + 1;
    let mut buf = vec![Complex64::new(0.0, 0.0); len];
    for (j, slot) in buf.iter_mut().enumerate().take(n + 1).skip(1) {
        *slot = Complex64::new(1.0 / j as f64, 0.0);
    }
    PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(len).process(&mut buf));
    let g = |k: usize| 2.0 * k as f64 / len as f64 + (2.0 / PI) * buf[k].im;
    // G is odd and |D_n| even: fold the negative half onto the positive one.
    let mut total = g(1);
    for k in 1..n {
        total += (g(k + 1) - g(k)).abs();
    }
    total + (1.0 - g(n)).abs()
}

struct Table {
    memo: Mutex<HashMap<usize, L1Estimate>>,
}

fn table() -> &'static Table {
    static TABLE: OnceLock<Table> = OnceLock::new();
    TABLE.get_or_init(|| Table {
        memo: Mutex::new(HashMap::new()),
    })
}

fn compute(i: usize) -> L1Estimate {
    if i % 2 == 1 {
        let n = i / 2;
        let value = dirichlet_kernel_l1(n);
        return L1Estimate {
            value,
            tolerance: 64.0 * f64::EPSILON * (2 * n + 1) as f64,
        };
    }
    // The L1 norm at x equals the one at −x, so half the grid suffices.
    let half = SUP_GRID / 2;
    (0..=half)
        .into_par_iter()
        .map(|k| {
            let x = -1.0 + 2.0 * k as f64 / SUP_GRID as f64;
            partial_sum_series(i, x).l1_norm(DEFAULT_OVERSAMPLE)
        })
        .reduce(
            || L1Estimate {
                value: 0.0,
                tolerance: 0.0,
            },
            |a, b| L1Estimate {
                value: a.value.max(b.value),
                tolerance: a.tolerance.max(b.tolerance),
            },
        )
}

/// Memoised `B_i` with its quadrature tolerance.
///
/// Odd `i` ends on a complete cosine/sine pair, the sum is a Dirichlet kernel
/// in `x − y` and the value is exact. Even `i` is shift-dependent and the
/// supremum is taken over a grid of [`SUP_GRID`] points of `x`.
pub fn dirichlet_l1_estimate(i: usize) -> L1Estimate {
    assert!(i >= 1, "flat indices start at 1");
    let t = table();
    if let Some(v) = t.memo.lock().expect("table lock").get(&i) {
        return *v;
    }
    let v = compute(i);
    // Concurrent fills compute the same value; whichever lands first stays.
    *t.memo.lock().expect("table lock").entry(i).or_insert(v)
}

pub fn dirichlet_l1(i: usize) -> f64 {
    dirichlet_l1_estimate(i).value
}

/// `‖S_i(x, ·)‖_{L1}` at one `x`.
pub fn dirichlet_l1_at(i: usize, x: f64) -> L1Estimate {
    partial_sum_series(i, x).l1_norm(DEFAULT_OVERSAMPLE)
}

/// Fills the table for all odd indices up to `max_index` so later lookups
/// are cheap.
pub fn prefill_odd(max_index: usize) {
    let missing: Vec<usize> = {
        let memo = table().memo.lock().expect("table lock");
        (1..=max_index)
            .step_by(2)
            .filter(|i| !memo.contains_key(i))
            .collect()
    };
    let computed: Vec<(usize, L1Estimate)> =
        missing.into_par_iter().map(|i| (i, compute(i))).collect();
    let mut memo = table().memo.lock().expect("table lock");
    for (i, v) in computed {
        memo.entry(i).or_insert(v);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::CompositeRule;

    #[test]
    fn first_values() {
        assert_eq!(dirichlet_l1(1), 1.0);
        let b3 = 1.0 / 3.0 + 2.0 * 3f64.sqrt() / PI;
        assert!((dirichlet_l1(3) - b3).abs() < 1e-14);
    }

    #[test]
    fn closed_form_matches_adaptive_quadrature() {
        let rule = CompositeRule::new(4096, 16).unwrap();
        for n in [1usize, 2, 5, 17, 64] {
            // Panels straddle the zeros, so compare with a loose tolerance.
            let q = rule.integrate(|y| {
                { 1.0 + 2.0 * (1..=n).map(|j| (PI * j as f64 * y).cos()).sum::<f64>() }.abs()
            });
            assert!((q - dirichlet_kernel_l1(n)).abs() < 1e-5, "n={n}");
        }
    }

    #[test]
    fn closed_form_matches_generic_l1() {
        for n in [3usize, 40, 200] {
            let est = dirichlet_l1_at(2 * n + 1, 0.0);
            assert!((est.value - dirichlet_kernel_l1(n)).abs() < 1e-11, "n={n}");
        }
    }

    #[test]
    fn odd_sums_are_shift_invariant() {
        let at0 = dirichlet_l1_at(9, 0.0).value;
        for &x in &[-0.73, 0.1, 0.5] {
            assert!((dirichlet_l1_at(9, x).value - at0).abs() < 1e-12);
        }
    }

    #[test]
    fn even_index_is_between_neighbours_bounds() {
        let b4 = dirichlet_l1(4);
        // S_4 = (D_1 + D_2)(x−y)/2 + cos(2π(x+y)).
        let upper = 0.5 * (dirichlet_l1(3) + dirichlet_l1(5)) + 2.0 / PI;
        assert!(b4 <= upper + 1e-12);
        assert!(b4 >= dirichlet_l1_at(4, 0.0).value - 1e-15);
        assert!((dirichlet_l1(2) - dirichlet_l1(3)).abs() < 1e-12);
    }

    #[test]
    fn growth_is_logarithmic() {
        let ratio =
            |j: usize| dirichlet_l1(2 * j + 1) / (std::f64::consts::E + (2 * j + 1) as f64).ln();
        let cb = (0..=4).map(ratio).fold(0.0, f64::max);
        for j in 0..=256 {
            assert!(ratio(j) <= cb + 1e-12, "j={j}");
        }
    }
}
