//! Config-driven experiment runs: every run directory holds the echoed
//! config, the CSVs of its kind and a manifest.

mod config;
mod report;

pub use config::{
    ExperimentConfig, ExperimentKind, KernelFamily, KernelSpec, OfflineSection, OnlineSection,
    TargetSpec,
};
pub use report::{report, Check, CheckStatus, Report};

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::krr::TargetFunction;
use crate::offline::{amplification_experiment, ols_slope, AmplificationSpec};
use crate::online::{
    region_count_bound, run_global_eps_ucb, run_pi_misspec_gpucb, BanditEnvironment, OnlineParams,
    RegretLog,
};
use crate::seeds::{cell_rng, derive_seed};
use crate::spectral_analysis::{spectral_scan, write_reports_csv};
use crate::spectral_kernels::MercerKernel;

pub const MANIFEST: &str = "manifest.json";
pub const CONFIG_ECHO: &str = "config.toml";
pub const FAILED_MARKER: &str = "FAILED";

const TARGET_STREAM: u64 = 1;
const DATA_STREAM: u64 = 2;
const NOISE_STREAM: u64 = 3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub kind: ExperimentKind,
    /// SHA-256 of the echoed config.
    pub config_hash: String,
    pub seed: u64,
    pub seeds: Vec<u64>,
    pub versions: Versions,
    pub started_unix: u64,
    pub wall_time_s: f64,
    pub files: Vec<String>,
    /// Present for the online kinds.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_slope: Option<f64>,
    pub dim: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Versions {
    pub kernel_misspec: String,
    pub config_schema: u32,
}

/// Per-seed summary of an online run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OnlineRunSummary {
    pub seed: u64,
    pub final_regret: f64,
    pub checkpoint_regret: Vec<f64>,
    pub census: usize,
    pub census_bound: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline_final_regret: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OnlineSummary {
    pub eps: f64,
    pub checkpoints: Vec<usize>,
    pub mean_regret: Vec<f64>,
    /// Log-log least-squares slope of the mean regret over the checkpoints.
    pub slope: f64,
    pub reference_slope: f64,
    pub runs: Vec<OnlineRunSummary>,
}

fn config_err(e: Error) -> Error {
    match e {
        Error::Config(_) => e,
        other => Error::Config(other.to_string()),
    }
}

/// Online parameters and the environment of run `seed`.
pub fn online_setup(
    cfg: &ExperimentConfig,
    kernel: &Arc<MercerKernel>,
    seed: u64,
) -> Result<(BanditEnvironment, OnlineParams)> {
    let on = cfg
        .online
        .as_ref()
        .ok_or_else(|| Error::Config("missing [online] section".into()))?;
    let eps = cfg.eps.first().copied().unwrap_or(0.0);
    let mut rng = cell_rng(cfg.seed, &[TARGET_STREAM, seed]);
    let star = TargetFunction::random(kernel, cfg.target.max_index, cfg.target.norm, &mut rng)?;
    let q = star.frequency();
    let target = star.with_perturbation(eps, q)?;
    let mut p = OnlineParams::new(
        on.horizon,
        on.alpha,
        on.norm_scale * target.rkhs_norm(),
        eps,
        cfg.noise,
    );
    p.b = on.b.unwrap_or(on.alpha);
    p.lambda = on.lambda;
    p.delta = cfg.delta;
    p.grid_points = on.grid_points;
    p.baseline_points = on.baseline_points;
    let env = BanditEnvironment::new(
        kernel.clone(),
        target,
        &p,
        derive_seed(cfg.seed, &[NOISE_STREAM, seed]),
    )?;
    Ok((env, p))
}

fn offline_spec(cfg: &ExperimentConfig, kernel: &Arc<MercerKernel>) -> Result<AmplificationSpec> {
    let mut rng = cell_rng(cfg.seed, &[TARGET_STREAM]);
    let target = TargetFunction::random(kernel, cfg.target.max_index, cfg.target.norm, &mut rng)?;
    Ok(AmplificationSpec {
        kernel: kernel.clone(),
        target,
        eps_grid: cfg.eps.clone(),
        n_grid: cfg.n.clone(),
        tau: cfg.tau[0],
        reps: cfg.offline.reps,
        seed: derive_seed(cfg.seed, &[DATA_STREAM]),
        noise: cfg.noise,
        competitor_size: cfg.offline.competitor_size,
        eval_points: cfg.offline.eval_points,
    })
}

fn create(dir: &Path, name: &str, files: &mut Vec<String>) -> Result<BufWriter<File>> {
    files.push(name.to_string());
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn write_json<T: Serialize>(dir: &Path, name: &str, v: &T, files: &mut Vec<String>) -> Result<()> {
    let w = create(dir, name, files)?;
    serde_json::to_writer_pretty(w, v)?;
    Ok(())
}

fn log_slope(ts: &[usize], rs: &[f64]) -> f64 {
    let (x, y): (Vec<f64>, Vec<f64>) = ts
        .iter()
        .zip(rs)
        .filter(|(_, r)| **r > 0.0)
        .map(|(&t, &r)| ((t as f64).ln(), r.ln()))
        .unzip();
    if x.len() < 2 {
        f64::NAN
    } else {
        ols_slope(&x, &y).0
    }
}

fn summarize_online(
    cfg: &ExperimentConfig,
    kernel: &MercerKernel,
    logs: &[(u64, RegretLog, Option<RegretLog>)],
) -> Result<OnlineSummary> {
    let on = cfg.online.as_ref().expect("validated");
    let checkpoints = on.resolved_checkpoints();
    let m = kernel.dim();
    let b = on.b.unwrap_or(on.alpha);
    let runs: Vec<OnlineRunSummary> = logs
        .iter()
        .map(|(seed, log, base)| OnlineRunSummary {
            seed: *seed,
            final_regret: log.final_regret(),
            checkpoint_regret: checkpoints.iter().map(|&t| log.cumulative(t)).collect(),
            census: log.census.len(),
            census_bound: region_count_bound(on.horizon, m, b),
            baseline_final_regret: base.as_ref().map(RegretLog::final_regret),
        })
        .collect();
    let k = runs.len() as f64;
    let mean_regret: Vec<f64> = (0..checkpoints.len())
        .map(|i| runs.iter().map(|r| r.checkpoint_regret[i]).sum::<f64>() / k)
        .collect();
    let slope = log_slope(&checkpoints, &mean_regret);
    let m_f = m as f64;
    Ok(OnlineSummary {
        eps: cfg.eps.first().copied().unwrap_or(0.0),
        reference_slope: (2.0 * m_f + on.alpha) / (2.0 * m_f + 2.0 * on.alpha),
        checkpoints,
        mean_regret,
        slope,
        runs,
    })
}

fn execute(
    cfg: &ExperimentConfig,
    kind: ExperimentKind,
    kernel: &Arc<MercerKernel>,
    config_dir: &Path,
    dir: &Path,
    files: &mut Vec<String>,
) -> Result<()> {
    match kind {
        ExperimentKind::Spectrum => {
            let base = cfg.kernel.base_spectrum(config_dir)?;
            base.write_csv(create(dir, "spectrum.csv", files)?)?;
        }
        ExperimentKind::LebesgueScan => {
            let rows = spectral_scan(kernel, &cfg.tau)?;
            write_reports_csv(&rows, create(dir, "lebesgue.csv", files)?)?;
            let plain: Vec<_> = rows
                .iter()
                .cloned()
                .map(|mut r| {
                    r.b_values.clear();
                    r
                })
                .collect();
            write_json(dir, "lebesgue.json", &plain, files)?;
        }
        ExperimentKind::OfflineAmplification => {
            let spec = offline_spec(cfg, kernel)?;
            let summary = amplification_experiment(&spec)?;
            summary.write_csv(create(dir, "amplification.csv", files)?)?;
            write_json(
                dir,
                "amplification_summary.json",
                &summary_json(&summary),
                files,
            )?;
        }
        ExperimentKind::OnlineRegret | ExperimentKind::BaselineCompare => {
            let compare = kind == ExperimentKind::BaselineCompare;
            let logs = cfg
                .seeds
                .par_iter()
                .map(|&s| {
                    let (env, p) = online_setup(cfg, kernel, s)?;
                    let log = run_pi_misspec_gpucb(&env, &p)?;
                    let base = if compare {
                        Some(run_global_eps_ucb(&env, &p)?)
                    } else {
                        None
                    };
                    Ok((s, log, base))
                })
                .collect::<Result<Vec<_>>>()?;
            for (s, log, base) in &logs {
                log.write_csv(create(dir, &format!("regret_{s}.csv"), files)?)?;
                log.write_census_csv(create(dir, &format!("census_{s}.csv"), files)?)?;
                if let Some(b) = base {
                    b.write_csv(create(dir, &format!("baseline_regret_{s}.csv"), files)?)?;
                }
            }
            write_json(
                dir,
                "online_summary.json",
                &summarize_online(cfg, kernel, &logs)?,
                files,
            )?;
        }
    }
    Ok(())
}

fn summary_json(s: &crate::offline::AmplificationSummary) -> serde_json::Value {
    serde_json::json!({
        "cells": s.cells,
        "slope": s.slope,
        "slope_stderr": s.slope_stderr,
        "d_eff": s.d_eff,
        "abel_bound": s.abel_bound,
        "sqrt_bound": s.sqrt_bound,
    })
}

/// Runs `cfg` into `out` with at most `jobs` worker threads.
///
/// Config problems are reported as [`Error::Config`] before anything is
/// written. A run that fails afterwards leaves a `FAILED` marker holding the
/// error.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    config_dir: &Path,
    out: &Path,
    jobs: usize,
) -> Result<Manifest> {
    let t0 = Instant::now();
    cfg.validate()?;
    let kind = cfg.kind()?;
    let kernel = cfg.kernel.build(config_dir).map_err(config_err)?;
    if matches!(
        kind,
        ExperimentKind::OnlineRegret | ExperimentKind::BaselineCompare
    ) {
        online_setup(cfg, &kernel, cfg.seeds[0]).map_err(config_err)?;
    }
    if kind == ExperimentKind::OfflineAmplification {
        offline_spec(cfg, &kernel).map_err(config_err)?;
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;

    fs::create_dir_all(out).map_err(|e| {
        Error::Config(format!(
            "output directory {} is not writable: {e}",
            out.display()
        ))
    })?;
    let marker = out.join(FAILED_MARKER);
    fs::write(&marker, "incomplete run\n")?;
    let echoed = cfg.to_toml();
    fs::write(out.join(CONFIG_ECHO), &echoed)?;
    let mut files = vec![CONFIG_ECHO.to_string()];
    let started_unix = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs());

    let result = pool.install(|| execute(cfg, kind, &kernel, config_dir, out, &mut files));
    if let Err(e) = result {
        fs::write(&marker, format!("{e}\n"))?;
        return Err(e);
    }
    let reference_slope = cfg.online.as_ref().filter(|_| {
        matches!(
            kind,
            ExperimentKind::OnlineRegret | ExperimentKind::BaselineCompare
        )
    });
    let m = kernel.dim() as f64;
    let manifest = Manifest {
        kind,
        config_hash: hex::encode(Sha256::digest(echoed.as_bytes())),
        seed: cfg.seed,
        seeds: cfg.seeds.clone(),
        versions: Versions {
            kernel_misspec: env!("CARGO_PKG_VERSION").to_string(),
            config_schema: 1,
        },
        started_unix,
        wall_time_s: t0.elapsed().as_secs_f64(),
        files,
        reference_slope: reference_slope
            .map(|on| (2.0 * m + on.alpha) / (2.0 * m + 2.0 * on.alpha)),
        dim: kernel.dim(),
    };
    let f = File::create(out.join(MANIFEST))?;
    serde_json::to_writer_pretty(BufWriter::new(f), &manifest)?;
    fs::remove_file(&marker)?;
    Ok(manifest)
}

/// Directory holding `path`, for resolving relative paths inside a config.
pub fn config_dir(path: &Path) -> PathBuf {
    path.parent().map(Path::to_path_buf).unwrap_or_default()
}
