use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Certified decay of the values beyond the truncation:
/// `μ_i ≤ constant · i^{-exponent}` for every flat index `i > T`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailBound {
    pub exponent: f64,
    pub constant: f64,
    /// The true tail is known to be non-increasing.
    pub monotone: bool,
}

impl TailBound {
    /// `Σ_{i>t} μ_i ≤ C ∫_t^∞ x^{-s} dx`, infinite when `s ≤ 1`.
    pub fn sum_after(&self, t: usize) -> f64 {
        if self.exponent <= 1.0 {
            return f64::INFINITY;
        }
        self.constant * (t.max(1) as f64).powf(1.0 - self.exponent) / (self.exponent - 1.0)
    }

    /// Pointwise bound at flat index `i`.
    pub fn at(&self, i: usize) -> f64 {
        self.constant * (i as f64).powf(-self.exponent)
    }
}

/// Lower and upper end of a sum whose tail is only known through a bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
}

impl Interval {
    pub fn contains(&self, v: f64) -> bool {
        v >= self.lower && v <= self.upper
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

/// Eigenvalues `μ_1, …, μ_T` in flat basis order, plus optional tail metadata.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenSequence {
    values: Vec<f64>,
    tail: Option<TailBound>,
}

impl EigenSequence {
    pub fn new(values: Vec<f64>, tail: Option<TailBound>) -> Result<Self> {
        if let Some((i, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || **v < 0.0)
        {
            return Err(invalid("values", format!("entry {} is {v}", i + 1)));
        }
        if let Some(t) = &tail {
            if !(t.exponent > 0.0) || !(t.constant >= 0.0) || !t.constant.is_finite() {
                return Err(invalid("tail", format!("{t:?}")));
            }
        }
        Ok(Self { values, tail })
    }

    /// A spectrum that is exactly zero beyond the listed values.
    pub fn finite(values: Vec<f64>) -> Result<Self> {
        Self::new(values, None)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `μ_i` for 1-based `i`, zero past the truncation.
    pub fn get(&self, i: usize) -> f64 {
        assert!(i >= 1, "flat indices start at 1");
        self.values.get(i - 1).copied().unwrap_or(0.0)
    }

    pub fn tail(&self) -> Option<&TailBound> {
        self.tail.as_ref()
    }

    pub fn truncated_sum(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Upper bound on `Σ_{i>T} μ_i`.
    pub fn tail_sum(&self) -> f64 {
        self.tail.map_or(0.0, |t| t.sum_after(self.len()))
    }

    /// Upper bound on `sup_{i>T} μ_i`.
    pub fn tail_sup(&self) -> f64 {
        self.tail.map_or(0.0, |t| t.at(self.len() + 1))
    }

    /// Interval containing `Σ_i μ_i`.
    pub fn trace(&self) -> Interval {
        let s = self.truncated_sum();
        Interval {
            lower: s,
            upper: s + self.tail_sum(),
        }
    }

    pub fn is_non_increasing(&self) -> bool {
        self.values.windows(2).all(|w| w[1] <= w[0])
    }

    /// True when every cosine/sine pair `(2j, 2j+1)` carries one value, which
    /// makes the kernel stationary. A dangling cosine at the end must be zero.
    pub fn is_paired(&self) -> bool {
        let v = &self.values;
        let mut i = 1;
        while i < v.len() {
            let sin = v.get(i + 1).copied().unwrap_or(0.0);
            if v[i] != sin {
                return false;
            }
            i += 2;
        }
        true
    }

    /// Keeps the first `t` values; the dropped ones are absorbed into the
    /// tail constant so the bound stays valid past the new truncation.
    pub fn truncate(&self, t: usize) -> Self {
        if t >= self.len() {
            return self.clone();
        }
        let dropped = &self.values[t..];
        let tail = match self.tail {
            Some(tb) => {
                let need = dropped
                    .iter()
                    .enumerate()
                    .map(|(k, v)| v * ((t + k + 1) as f64).powf(tb.exponent))
                    .fold(tb.constant, f64::max);
                let monotone = tb.monotone && dropped.windows(2).all(|w| w[1] <= w[0]);
                Some(TailBound {
                    constant: need,
                    monotone,
                    ..tb
                })
            }
            None if dropped.iter().all(|&v| v == 0.0) => None,
            None => {
                // A finite spectrum cut short: bound the remainder by a
                // steep power so that it stays summable.
                let exponent = 2.0;
                let constant = dropped
                    .iter()
                    .enumerate()
                    .map(|(k, v)| v * ((t + k + 1) as f64).powf(exponent))
                    .fold(0.0, f64::max);
                Some(TailBound {
                    exponent,
                    constant,
                    monotone: false,
                })
            }
        };
        Self {
            values: self.values[..t].to_vec(),
            tail,
        }
    }

    /// Multiplies the values and the tail constant by `factor`.
    fn scaled(&self, factor: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| v * factor).collect(),
            tail: self.tail.map(|t| TailBound {
                constant: t.constant * factor,
                ..t
            }),
        }
    }

    /// Writes `index,value` rows and the tail footer when present.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "index,value")?;
        for (i, v) in self.values.iter().enumerate() {
            writeln!(w, "{},{v:?}", i + 1)?;
        }
        if let Some(t) = &self.tail {
            writeln!(
                w,
                "# tail_exponent={:?} tail_constant={:?}",
                t.exponent, t.constant
            )?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R, source: &str) -> Result<Self> {
        let bad = |reason: String| Error::InvalidInput {
            path: source.to_string(),
            reason,
        };
        let mut lines = r.lines();
        match lines.next() {
            Some(Ok(h)) if h.trim() == "index,value" => {}
            Some(Ok(h)) => return Err(bad(format!("unexpected header `{h}`"))),
            Some(Err(e)) => return Err(e.into()),
            None => return Err(bad("empty file".into())),
        }
        let mut values = Vec::new();
        let mut tail = None;
        for (n, line) in lines.enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                let mut exponent = None;
                let mut constant = None;
                for kv in rest.split_whitespace() {
                    match kv.split_once('=') {
                        Some(("tail_exponent", v)) => exponent = v.parse::<f64>().ok(),
                        Some(("tail_constant", v)) => constant = v.parse::<f64>().ok(),
                        _ => {}
                    }
                }
                match (exponent, constant) {
                    (Some(exponent), Some(constant)) => {
                        tail = Some(TailBound {
                            exponent,
                            constant,
                            monotone: false,
                        })
                    }
                    _ => return Err(bad(format!("malformed footer `{line}`"))),
                }
                continue;
            }
            let (idx, val) = line
                .split_once(',')
                .ok_or_else(|| bad(format!("line {}: expected two columns", n + 2)))?;
            let idx: usize = idx
                .trim()
                .parse()
                .map_err(|_| bad(format!("line {}: bad index `{idx}`", n + 2)))?;
            let val: f64 = val
                .trim()
                .parse()
                .map_err(|_| bad(format!("line {}: bad value `{val}`", n + 2)))?;
            if idx != values.len() + 1 {
                return Err(bad(format!("line {}: index {idx} out of order", n + 2)));
            }
            values.push(val);
        }
        Self::new(values, tail).map_err(|e| bad(e.to_string()))
    }
}

/// Periodic Matérn eigenvalues `(1 + j²)^{-ν-1/2}` for frequencies
/// `j = 0, …, count-1`, the same value on both members of each pair.
///
/// The flat length is `2·count − 1`. With `normalize_trace`, the values are
/// rescaled so that the truncated sum plus the certified tail bound is 1,
/// which makes 1 an upper bound on the true trace.
pub fn matern_periodic_spectrum(
    nu: f64,
    count: usize,
    normalize_trace: bool,
) -> Result<EigenSequence> {
    if !(nu > 0.0) || !nu.is_finite() {
        return Err(invalid("nu", format!("must be positive, got {nu}")));
    }
    if count == 0 {
        return Err(invalid("count", "must be at least 1"));
    }
    let p = nu + 0.5;
    let mut values = Vec::with_capacity(2 * count - 1);
    values.push(1.0);
    for j in 1..count {
        let v = (1.0 + (j * j) as f64).powf(-p);
        values.push(v);
        values.push(v);
    }
    // For i ≥ 2J the frequency floor(i/2) is at least i(2J−1)/(4J).
    let s = 2.0 * p;
    let jj = count as f64;
    let constant = if count == 1 {
        // Every index i ≥ 2 has frequency ≥ i/3.
        3f64.powf(s)
    } else {
        (4.0 * jj / (2.0 * jj - 1.0)).powf(s)
    };
    let seq = EigenSequence::new(
        values,
        Some(TailBound {
            exponent: s,
            constant,
            monotone: true,
        }),
    )?;
    if normalize_trace {
        let total = seq.trace().upper;
        Ok(seq.scaled(1.0 / total))
    } else {
        Ok(seq)
    }
}

/// `μ̄_i = max_{j ≥ i} μ_j` over the truncation; the tail bound is kept.
pub fn monotone_envelope(spec: &EigenSequence) -> EigenSequence {
    let mut values = spec.values.clone();
    let mut running = 0.0f64;
    for v in values.iter_mut().rev() {
        running = running.max(*v);
        *v = running;
    }
    EigenSequence {
        values,
        tail: spec.tail.map(|t| TailBound {
            monotone: true,
            ..t
        }),
    }
}

/// `Some(k)` when `i = 2^k` with `k ≥ 1`.
fn dyadic_level(i: usize) -> Option<u32> {
    (i >= 2 && i.is_power_of_two()).then(|| i.trailing_zeros())
}

/// Random spectrum supported on the flat indices `2^k − 1` and `2^k`, both
/// carrying `k^{-s}` times an independent fair coin. The coins come from a
/// ChaCha8 stream seeded with `seed`, drawn in index order.
pub fn adversarial_spectrum(s: f64, seed: u64, count: usize) -> Result<EigenSequence> {
    if !(s > 1.0) || !s.is_finite() {
        return Err(invalid("s", format!("must exceed 1, got {s}")));
    }
    if count == 0 {
        return Err(invalid("count", "must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (1..=count)
        .map(|i| {
            let coin = rng.random_bool(0.5);
            let level = dyadic_level(i).or_else(|| dyadic_level(i + 1));
            match level {
                Some(k) if coin => (k as f64).powf(-s),
                _ => 0.0,
            }
        })
        .collect();
    EigenSequence::new(values, None)
}

/// The coin `U_i` behind an adversarial value, recovered from the value itself.
pub fn adversarial_coin(spec: &EigenSequence, i: usize) -> bool {
    spec.get(i) > 0.0
}
