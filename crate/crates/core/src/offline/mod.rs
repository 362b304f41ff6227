//! Offline data, the plug-in maximizer and amplification experiments.

mod experiment;

pub use experiment::{
    amplification_experiment, coverage_experiment, ols_slope, read_amplification_csv,
    AmplificationRow, AmplificationSpec, AmplificationSummary, CellSummary, CoverageResult,
    CoverageSpec, AMPLIFICATION_HEADER,
};

use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{invalid, Result};
use crate::krr::{Dataset, KrrModel, RegularizationSpec, TargetFunction};
use crate::seeds::cell_rng;
use crate::spectral_kernels::MercerKernel;

/// Sample size, regularization, noise and seed of one offline draw.
#[derive(Clone, Debug)]
pub struct OfflineConfig {
    pub n: usize,
    pub tau: f64,
    pub delta: f64,
    pub noise: f64,
    pub seed: u64,
    pub target: TargetFunction,
    pub competitor_size: usize,
}

impl OfflineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(invalid("n", "must be positive"));
        }
        if !(self.tau > 0.0) {
            return Err(invalid("tau", "must be positive"));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(invalid("delta", "must lie in (0, 1)"));
        }
        if !(self.noise >= 0.0) {
            return Err(invalid("noise", "must be nonnegative"));
        }
        if self.competitor_size == 0 {
            return Err(invalid("competitor_size", "must be positive"));
        }
        Ok(())
    }
}

/// Uniform point in `[-1,1]^m`.
pub fn uniform_point(rng: &mut ChaCha8Rng, m: usize) -> Vec<f64> {
    (0..m).map(|_| rng.random_range(-1.0..=1.0)).collect()
}

/// `n` i.i.d. uniform inputs with `y = f(x) + N(0, R²)`.
pub fn sample_dataset(cfg: &OfflineConfig) -> Result<Dataset> {
    sample_dataset_with(cfg, uniform_point)
}

/// Like [`sample_dataset`] with a caller-supplied input law.
pub fn sample_dataset_with(
    cfg: &OfflineConfig,
    mut sampler: impl FnMut(&mut ChaCha8Rng, usize) -> Vec<f64>,
) -> Result<Dataset> {
    cfg.validate()?;
    let m = cfg.target.dim();
    let mut rng = cell_rng(cfg.seed, &[0]);
    let noise = Normal::new(0.0, cfg.noise).map_err(|e| invalid("noise", e.to_string()))?;
    let mut xs = Vec::with_capacity(cfg.n);
    let mut ys = Vec::with_capacity(cfg.n);
    for _ in 0..cfg.n {
        let x = sampler(&mut rng, m);
        let e = if cfg.noise > 0.0 {
            noise.sample(&mut rng)
        } else {
            0.0
        };
        ys.push(cfg.target.eval(&x) + e);
        xs.push(x);
    }
    Dataset::new(xs, ys, cfg.noise)
}

/// Finite candidate set with the values of `f` on it.
#[derive(Clone, Debug, PartialEq)]
pub struct CompetitorSet {
    points: Vec<Vec<f64>>,
    values: Vec<f64>,
    best: usize,
}

impl CompetitorSet {
    pub fn new(points: Vec<Vec<f64>>, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        if points.is_empty() {
            return Err(invalid("competitors", "the set is empty"));
        }
        let values: Vec<f64> = points.iter().map(|p| f(p)).collect();
        let best = argmax(&values);
        Ok(Self {
            points,
            values,
            best,
        })
    }

    /// `size` uniform points.
    pub fn random(
        size: usize,
        m: usize,
        rng: &mut ChaCha8Rng,
        f: impl Fn(&[f64]) -> f64,
    ) -> Result<Self> {
        Self::new((0..size).map(|_| uniform_point(rng, m)).collect(), f)
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn best(&self) -> usize {
        self.best
    }

    pub fn best_value(&self) -> f64 {
        self.values[self.best]
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// First index of the maximum.
pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// Outcome of [`plugin_maximize`].
#[derive(Clone, Debug)]
pub struct PluginResult {
    pub index: usize,
    pub point: Vec<f64>,
    pub simple_regret: f64,
    pub model: KrrModel,
}

/// Fits KRR at `τ` and returns the competitor with the largest prediction.
pub fn plugin_maximize(
    data: &Dataset,
    k: Arc<MercerKernel>,
    tau: f64,
    comp: &CompetitorSet,
) -> Result<PluginResult> {
    let model = KrrModel::fit(data, k, RegularizationSpec::normalized(tau)?)?;
    let preds = comp
        .points
        .iter()
        .map(|p| model.predict(p))
        .collect::<Result<Vec<_>>>()?;
    let index = argmax(&preds);
    Ok(PluginResult {
        index,
        point: comp.points[index].clone(),
        simple_regret: comp.best_value() - comp.values[index],
        model,
    })
}

/// `max_{x∈grid} |μ(x) − f(x)|`.
pub fn uniform_error(model: &KrrModel, target: &TargetFunction, grid: &[Vec<f64>]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for x in grid {
        worst = worst.max((model.predict(x)? - target.eval(x)).abs());
    }
    Ok(worst)
}

/// `points` equispaced nodes per coordinate on `[-1,1]^m`, row-major.
pub fn tensor_grid(m: usize, points: usize) -> Vec<Vec<f64>> {
    let axis: Vec<f64> = (0..points)
        .map(|i| {
            if points == 1 {
                0.0
            } else {
                -1.0 + 2.0 * i as f64 / (points - 1) as f64
            }
        })
        .collect();
    let mut out = vec![vec![]];
    for _ in 0..m {
        out = out
            .into_iter()
            .flat_map(|p| {
                axis.iter().map(move |&a| {
                    let mut q = p.clone();
                    q.push(a);
                    q
                })
            })
            .collect();
    }
    out
}
