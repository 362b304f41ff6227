use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral_kernels::{
    adversarial_spectrum, matern_periodic_spectrum, monotone_envelope, periodic_spectrum,
    periodize, product_kernel, EigenSequence, MercerKernel, StationaryProfile,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Spectrum,
    LebesgueScan,
    OfflineAmplification,
    OnlineRegret,
    BaselineCompare,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Spectrum => "spectrum",
            Self::LebesgueScan => "lebesgue-scan",
            Self::OfflineAmplification => "offline-amplification",
            Self::OnlineRegret => "online-regret",
            Self::BaselineCompare => "baseline-compare",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelFamily {
    Matern,
    Adversarial,
    PeriodizedGaussian,
    PeriodizedLaplace,
    File,
}

/// One-dimensional spectrum, optionally enveloped and tensorized to `dim`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSpec {
    pub family: KernelFamily,
    #[serde(default = "default_dim")]
    pub dim: usize,
    #[serde(default = "default_count")]
    pub count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectrum_seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length_scale: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lattice_truncation: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default = "default_true")]
    pub normalize_trace: bool,
    #[serde(default)]
    pub envelope: bool,
}

fn default_dim() -> usize {
    1
}
fn default_count() -> usize {
    1024
}
fn default_true() -> bool {
    true
}

impl KernelSpec {
    pub fn base_spectrum(&self, config_dir: &Path) -> Result<EigenSequence> {
        let need = |v: Option<f64>, name: &str| {
            v.ok_or_else(|| {
                Error::Config(format!("kernel family {:?} needs `{name}`", self.family))
            })
        };
        let spec = match self.family {
            KernelFamily::Matern => {
                matern_periodic_spectrum(need(self.nu, "nu")?, self.count, self.normalize_trace)?
            }
            KernelFamily::Adversarial => adversarial_spectrum(
                need(self.s, "s")?,
                self.spectrum_seed.unwrap_or(0),
                self.count,
            )?,
            KernelFamily::PeriodizedGaussian | KernelFamily::PeriodizedLaplace => {
                let ell = need(self.length_scale, "length_scale")?;
                let profile = if self.family == KernelFamily::PeriodizedGaussian {
                    StationaryProfile::gaussian(1, ell)?
                } else {
                    StationaryProfile::laplace(1, ell)?
                };
                let per = periodize(&profile, 1.0, self.lattice_truncation.unwrap_or(8))?;
                periodic_spectrum(&per, self.count.div_ceil(2).max(1))?
            }
            KernelFamily::File => {
                let p = self
                    .path
                    .as_ref()
                    .ok_or_else(|| Error::Config("kernel family `file` needs `path`".into()))?;
                let p = if p.is_relative() {
                    config_dir.join(p)
                } else {
                    p.clone()
                };
                let f = std::fs::File::open(&p).map_err(|e| {
                    Error::Config(format!("cannot open spectrum file {}: {e}", p.display()))
                })?;
                EigenSequence::read_csv(std::io::BufReader::new(f), &p.display().to_string())?
            }
        };
        Ok(if self.envelope {
            monotone_envelope(&spec)
        } else {
            spec
        })
    }

    pub fn build(&self, config_dir: &Path) -> Result<Arc<MercerKernel>> {
        if self.dim == 0 || self.count == 0 {
            return Err(Error::Config(
                "kernel dim and count must be positive".into(),
            ));
        }
        let base = self.base_spectrum(config_dir)?;
        Ok(Arc::new(if self.dim == 1 {
            MercerKernel::new(base)
        } else {
            product_kernel(&base, self.dim)?
        }))
    }
}

/// Random finite expansion used as `f_⋆`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetSpec {
    /// Modes `1..=max_index` per coordinate.
    #[serde(default = "default_max_index")]
    pub max_index: usize,
    #[serde(default = "default_norm")]
    pub norm: f64,
}

fn default_max_index() -> usize {
    9
}
fn default_norm() -> f64 {
    1.0
}

impl Default for TargetSpec {
    fn default() -> Self {
        Self {
            max_index: default_max_index(),
            norm: default_norm(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OfflineSection {
    #[serde(default = "default_reps")]
    pub reps: usize,
    #[serde(default = "default_competitors")]
    pub competitor_size: usize,
    #[serde(default = "default_eval_points")]
    pub eval_points: usize,
}

fn default_reps() -> usize {
    20
}
fn default_competitors() -> usize {
    64
}
fn default_eval_points() -> usize {
    512
}

impl Default for OfflineSection {
    fn default() -> Self {
        Self {
            reps: default_reps(),
            competitor_size: default_competitors(),
            eval_points: default_eval_points(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OnlineSection {
    pub horizon: usize,
    pub alpha: f64,
    /// Split exponent; defaults to `alpha`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
    #[serde(default = "default_baseline_points")]
    pub baseline_points: usize,
    /// Multiplier on the true `‖f_⋆‖_H` handed to the policy.
    #[serde(default = "default_norm_scale")]
    pub norm_scale: f64,
    /// Prefix lengths at which `R_t` is summarized.
    #[serde(default)]
    pub checkpoints: Vec<usize>,
}

fn default_lambda() -> f64 {
    1.0
}
fn default_grid_points() -> usize {
    9
}
fn default_baseline_points() -> usize {
    257
}
fn default_norm_scale() -> f64 {
    1.0
}

impl OnlineSection {
    /// Explicit checkpoints, or powers of two from `horizon/8` up to the horizon.
    pub fn resolved_checkpoints(&self) -> Vec<usize> {
        if !self.checkpoints.is_empty() {
            return self.checkpoints.clone();
        }
        let mut out = Vec::new();
        let mut t = (self.horizon / 8).max(1).next_power_of_two();
        while t < self.horizon {
            out.push(t);
            t *= 2;
        }
        out.push(self.horizon);
        out
    }
}

/// A whole experiment, read from one TOML file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<ExperimentKind>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_delta")]
    pub delta: f64,
    /// Noise level `R`.
    #[serde(default = "default_noise")]
    pub noise: f64,
    pub kernel: KernelSpec,
    #[serde(default)]
    pub tau: Vec<f64>,
    #[serde(default)]
    pub eps: Vec<f64>,
    #[serde(default)]
    pub n: Vec<usize>,
    /// Run indices for the online kinds.
    #[serde(default)]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub target: TargetSpec,
    #[serde(default)]
    pub offline: OfflineSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub online: Option<OnlineSection>,
}

fn default_delta() -> f64 {
    0.1
}
fn default_noise() -> f64 {
    0.1
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.message().replace('\n', " ")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn kind(&self) -> Result<ExperimentKind> {
        self.kind
            .ok_or_else(|| Error::Config("missing `kind`".into()))
    }

    /// Checks that do not need any computation.
    pub fn validate(&self) -> Result<()> {
        let kind = self.kind()?;
        let cfg = |m: String| Err(Error::Config(m));
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return cfg(format!("delta must lie in (0, 1), got {}", self.delta));
        }
        if !(self.noise >= 0.0) {
            return cfg("noise must be nonnegative".into());
        }
        if self.tau.iter().any(|&t| !(t > 0.0)) {
            return cfg("every tau must be positive".into());
        }
        if self.eps.iter().any(|&e| !(e >= 0.0)) {
            return cfg("every eps must be nonnegative".into());
        }
        match kind {
            ExperimentKind::Spectrum => {}
            ExperimentKind::LebesgueScan => {
                if self.tau.is_empty() {
                    return cfg("lebesgue-scan needs a nonempty `tau` grid".into());
                }
            }
            ExperimentKind::OfflineAmplification => {
                if self.tau.len() != 1 {
                    return cfg("offline-amplification needs exactly one `tau`".into());
                }
                if self.eps.is_empty() || !self.eps.contains(&0.0) {
                    return cfg("offline-amplification needs an `eps` grid containing 0".into());
                }
                if self.n.is_empty() || self.n.contains(&0) {
                    return cfg(
                        "offline-amplification needs a nonempty grid of positive `n`".into(),
                    );
                }
                if self.offline.reps == 0 {
                    return cfg("offline.reps must be positive".into());
                }
            }
            ExperimentKind::OnlineRegret | ExperimentKind::BaselineCompare => {
                let Some(on) = &self.online else {
                    return cfg(format!("{} needs an [online] section", kind.name()));
                };
                if on.horizon == 0 || !(on.alpha > 0.0) {
                    return cfg("online.horizon and online.alpha must be positive".into());
                }
                if on.checkpoints.iter().any(|&t| t == 0 || t > on.horizon) {
                    return cfg("online.checkpoints must lie in 1..=horizon".into());
                }
                if self.seeds.is_empty() {
                    return cfg(format!("{} needs a nonempty `seeds` list", kind.name()));
                }
                if self.eps.len() > 1 {
                    return cfg("online kinds take at most one `eps`".into());
                }
            }
        }
        Ok(())
    }
}
