use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{log_slope, ExperimentConfig, ExperimentKind, Manifest, CONFIG_ECHO, MANIFEST};
use crate::error::{Error, Result};
use crate::offline::{ols_slope, read_amplification_csv};
use crate::online::{region_count_bound, RegretLog};
use crate::spectral_analysis::{read_reports_csv, SandwichMargin};
use crate::spectral_kernels::EigenSequence;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CheckStatus {
    #[serde(rename = "PASS")]
    Pass,
    #[serde(rename = "FAIL")]
    Fail,
    #[serde(rename = "INVALID INPUT")]
    InvalidInput,
}

impl fmt::Display for CheckStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Pass => "PASS",
            Self::Fail => "FAIL",
            Self::InvalidInput => "INVALID INPUT",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub status: CheckStatus,
    pub detail: String,
}

impl Check {
    fn verdict(name: &str, ok: bool, detail: String) -> Self {
        Self {
            name: name.into(),
            status: if ok {
                CheckStatus::Pass
            } else {
                CheckStatus::Fail
            },
            detail,
        }
    }

    fn invalid(name: &str, e: &Error) -> Self {
        Self {
            name: name.into(),
            status: CheckStatus::InvalidInput,
            detail: e.to_string(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub kind: ExperimentKind,
    pub checks: Vec<Check>,
    /// Per-τ slack of both upper bounds, for Lebesgue scans.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub margins: Vec<SandwichMargin>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub values: BTreeMap<String, f64>,
}

impl Report {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.status == CheckStatus::Pass)
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} run", self.kind.name())?;
        for c in &self.checks {
            writeln!(f, "{:<13} {}: {}", c.status.to_string(), c.name, c.detail)?;
        }
        Ok(())
    }
}

fn open(dir: &Path, name: &str) -> Result<BufReader<File>> {
    let p = dir.join(name);
    File::open(&p)
        .map(BufReader::new)
        .map_err(|e| Error::InvalidInput {
            path: p.display().to_string(),
            reason: e.to_string(),
        })
}

fn log_e(tau: f64) -> f64 {
    (std::f64::consts::E + 1.0 / tau).ln()
}

fn spread(v: &[f64]) -> f64 {
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    hi / lo
}

fn lebesgue_checks(dir: &Path, cfg: &ExperimentConfig, rep: &mut Report) {
    let rows = match read_reports_csv(
        match open(dir, "lebesgue.csv") {
            Ok(r) => r,
            Err(e) => return rep.checks.push(Check::invalid("sandwich", &e)),
        },
        "lebesgue.csv",
    ) {
        Ok(r) if !r.is_empty() => r,
        Ok(_) => {
            let e = Error::InvalidInput {
                path: "lebesgue.csv".into(),
                reason: "no rows".into(),
            };
            return rep.checks.push(Check::invalid("sandwich", &e));
        }
        Err(e) => return rep.checks.push(Check::invalid("sandwich", &e)),
    };
    rep.margins = rows.iter().map(|r| r.margin()).collect();
    let held = rows.iter().filter(|r| r.sandwich_holds()).count();
    rep.checks.push(Check::verdict(
        "sandwich",
        held == rows.len(),
        format!(
            "{held}/{} τ values with estimate − tolerance below both bounds",
            rows.len()
        ),
    ));
    if rows.len() < 2 {
        return;
    }
    let m = cfg.kernel.dim as i32;
    let power = 2 * m - 1;
    let abel: Vec<f64> = rows
        .iter()
        .map(|r| r.abel_bound / log_e(r.tau).powi(power))
        .collect();
    if m == 1 {
        let monotone = cfg
            .kernel
            .base_spectrum(Path::new("."))
            .map(|s| s.values().windows(2).all(|w| w[1] <= w[0]))
            .unwrap_or(false);
        if monotone {
            let est: Vec<f64> = rows.iter().map(|r| r.lebesgue_est / log_e(r.tau)).collect();
            let (a, e) = (spread(&abel), spread(&est));
            rep.values.insert("abel_log_spread".into(), a);
            rep.values.insert("estimate_log_spread".into(), e);
            rep.checks.push(Check::verdict(
                "logarithmic growth",
                a <= 3.0 && e <= 4.0,
                format!("bound/log spread {a:.3} (≤ 3), estimate/log spread {e:.3} (≤ 4)"),
            ));
        }
    } else {
        let first = rows
            .iter()
            .zip(&abel)
            .max_by(|a, b| a.0.tau.total_cmp(&b.0.tau))
            .map(|(_, &v)| v)
            .expect("nonempty");
        let worst = abel.iter().copied().fold(0.0, f64::max) / first;
        rep.values.insert("polylog_ratio".into(), worst);
        rep.checks.push(Check::verdict(
            "polylogarithmic growth",
            worst <= 3.0,
            format!("bound/log^{power} at most {worst:.3}× its value at the largest τ (≤ 3)"),
        ));
    }
}

fn offline_checks(dir: &Path, rep: &mut Report) {
    let name = "amplification slope";
    let rows = match open(dir, "amplification.csv")
        .and_then(|r| read_amplification_csv(r, "amplification.csv"))
    {
        Ok(r) if !r.is_empty() => r,
        Ok(_) => {
            let e = Error::InvalidInput {
                path: "amplification.csv".into(),
                reason: "no rows".into(),
            };
            return rep.checks.push(Check::invalid(name, &e));
        }
        Err(e) => return rep.checks.push(Check::invalid(name, &e)),
    };
    let n_max = rows.iter().map(|r| r.n).max().expect("nonempty");
    let mut cells: BTreeMap<(u64, usize), (f64, usize)> = BTreeMap::new();
    for r in &rows {
        let c = cells.entry((r.eps.to_bits(), r.n)).or_default();
        c.0 += r.uniform_err;
        c.1 += 1;
    }
    let mean = |eps: f64, n: usize| cells.get(&(eps.to_bits(), n)).map(|c| c.0 / c.1 as f64);
    let mut eps: Vec<f64> = rows.iter().map(|r| r.eps).collect();
    eps.sort_by(f64::total_cmp);
    eps.dedup();
    let ys: Vec<f64> = eps.iter().filter_map(|&e| mean(e, n_max)).collect();
    let (slope, se) = ols_slope(&eps, &ys);
    let (abel, sqrt) = (rows[0].abel_bound, rows[0].sqrt_bound);
    rep.values.insert("slope".into(), slope);
    rep.values.insert("slope_stderr".into(), se);
    rep.values.insert("abel_bound".into(), abel);
    rep.values.insert("sqrt_bound".into(), sqrt);
    rep.checks.push(Check::verdict(
        name,
        slope <= sqrt + 1.0 + 3.0 * se,
        format!(
            "slope {slope:.4} ± {se:.4} at n = {n_max}, ceiling √-bound + 1 = {:.4}",
            sqrt + 1.0
        ),
    ));
    rep.checks.push(Check::verdict(
        "amplification vs spectral bound",
        slope <= abel + 1.0 + 3.0 * se,
        format!(
            "slope {slope:.4}, summation-by-parts bound + 1 = {:.4}",
            abel + 1.0
        ),
    ));
    let mut ns: Vec<usize> = rows.iter().map(|r| r.n).collect();
    ns.sort_unstable();
    ns.dedup();
    let base: Vec<f64> = ns.iter().filter_map(|&n| mean(0.0, n)).collect();
    let inversions = base.windows(2).filter(|w| w[1] > w[0]).count();
    rep.checks.push(Check::verdict(
        "noise floor decreasing in n",
        inversions <= 1,
        format!("{inversions} inversion(s) of the ε = 0 mean error over n = {ns:?}"),
    ));
}

struct OnlineRead {
    finals: Vec<f64>,
    curves: Vec<Vec<f64>>,
    baseline: Vec<f64>,
    census_ok: usize,
}

fn read_online(
    dir: &Path,
    cfg: &ExperimentConfig,
    m: usize,
    checkpoints: &[usize],
    compare: bool,
) -> Result<OnlineRead> {
    let on = cfg
        .online
        .as_ref()
        .ok_or_else(|| Error::Config("missing [online] section".into()))?;
    let bound = region_count_bound(on.horizon, m, on.b.unwrap_or(on.alpha));
    let mut out = OnlineRead {
        finals: vec![],
        curves: vec![],
        baseline: vec![],
        census_ok: 0,
    };
    let at = |series: &[(usize, f64)], t: usize| series.get(t - 1).map_or(f64::NAN, |r| r.1);
    for s in &cfg.seeds {
        let name = format!("regret_{s}.csv");
        let series = RegretLog::read_regret_csv(open(dir, &name)?, &name)?;
        if series.len() != on.horizon {
            return Err(Error::InvalidInput {
                path: name,
                reason: format!("{} rounds, expected {}", series.len(), on.horizon),
            });
        }
        out.finals.push(at(&series, on.horizon));
        out.curves
            .push(checkpoints.iter().map(|&t| at(&series, t)).collect());
        let name = format!("census_{s}.csv");
        let census = RegretLog::read_census_csv(open(dir, &name)?, &name)?;
        out.census_ok += usize::from(census.len() <= bound);
        if compare {
            let name = format!("baseline_regret_{s}.csv");
            let b = RegretLog::read_regret_csv(open(dir, &name)?, &name)?;
            out.baseline.push(b.last().map_or(f64::NAN, |r| r.1));
        }
    }
    Ok(out)
}

fn online_checks(dir: &Path, cfg: &ExperimentConfig, manifest: &Manifest, rep: &mut Report) {
    let Some(on) = cfg.online.as_ref() else {
        let e = Error::Config("missing [online] section".into());
        return rep.checks.push(Check::invalid("census bound", &e));
    };
    let compare = rep.kind == ExperimentKind::BaselineCompare;
    let checkpoints = on.resolved_checkpoints();
    let data = match read_online(dir, cfg, manifest.dim, &checkpoints, compare) {
        Ok(d) => d,
        Err(e) => return rep.checks.push(Check::invalid("census bound", &e)),
    };
    let runs = cfg.seeds.len();
    let bound = region_count_bound(on.horizon, manifest.dim, on.b.unwrap_or(on.alpha));
    rep.checks.push(Check::verdict(
        "census bound",
        data.census_ok == runs,
        format!(
            "{}/{runs} runs with at most {bound} regions",
            data.census_ok
        ),
    ));
    let k = runs as f64;
    let mean: Vec<f64> = (0..checkpoints.len())
        .map(|i| data.curves.iter().map(|c| c[i]).sum::<f64>() / k)
        .collect();
    let eps = cfg.eps.first().copied().unwrap_or(0.0);
    let reference = manifest.reference_slope.unwrap_or(f64::NAN);
    if eps == 0.0 && checkpoints.len() >= 2 {
        let slope = log_slope(&checkpoints, &mean);
        rep.values.insert("regret_slope".into(), slope);
        rep.values.insert("reference_slope".into(), reference);
        rep.checks.push(Check::verdict(
            "regret slope",
            slope <= reference + 0.12,
            format!("log-log slope {slope:.4} over t = {checkpoints:?}, reference {reference:.4} + 0.12"),
        ));
    }
    if eps > 0.0 {
        let quarter = checkpoints
            .iter()
            .rev()
            .find(|&&t| 4 * t <= on.horizon)
            .copied()
            .unwrap_or(checkpoints[0]);
        let qi = checkpoints
            .iter()
            .position(|&t| t == quarter)
            .expect("present");
        let late = data.finals.iter().sum::<f64>() / k / on.horizon as f64;
        let early = mean[qi] / quarter as f64;
        rep.values.insert("per_round_regret".into(), late);
        rep.checks.push(Check::verdict(
            "per-round regret not growing",
            late <= early + 0.02,
            format!(
                "R_n/n = {late:.4} at n = {}, {early:.4} at n = {quarter}",
                on.horizon
            ),
        ));
    }
    if compare {
        let split = data.finals.iter().sum::<f64>() / k;
        let base = data.baseline.iter().sum::<f64>() / k;
        rep.values.insert("mean_final_regret".into(), split);
        rep.values.insert("baseline_mean_final_regret".into(), base);
        rep.checks.push(Check::verdict(
            "splitting vs baseline",
            split <= base,
            format!("mean final regret {split:.3} vs baseline {base:.3}"),
        ));
    }
}

fn spectrum_checks(dir: &Path, rep: &mut Report) {
    let name = "spectrum schema";
    match open(dir, "spectrum.csv").and_then(|r| EigenSequence::read_csv(r, "spectrum.csv")) {
        Ok(s) => rep.checks.push(Check::verdict(
            name,
            !s.is_empty(),
            format!("{} eigenvalues, sum {:.6}", s.len(), s.truncated_sum()),
        )),
        Err(e) => rep.checks.push(Check::invalid(name, &e)),
    }
}

/// Bound-vs-measurement checks of a finished run, recomputed from its CSVs.
/// Also writes `report.json` into the run directory.
pub fn report(run_dir: &Path) -> Result<Report> {
    let manifest: Manifest =
        serde_json::from_reader(open(run_dir, MANIFEST)?).map_err(|e| Error::InvalidInput {
            path: run_dir.join(MANIFEST).display().to_string(),
            reason: e.to_string(),
        })?;
    let text =
        std::fs::read_to_string(run_dir.join(CONFIG_ECHO)).map_err(|e| Error::InvalidInput {
            path: run_dir.join(CONFIG_ECHO).display().to_string(),
            reason: e.to_string(),
        })?;
    let cfg = ExperimentConfig::from_toml(&text)?;
    let mut rep = Report {
        kind: manifest.kind,
        checks: vec![],
        margins: vec![],
        values: BTreeMap::new(),
    };
    match manifest.kind {
        ExperimentKind::Spectrum => spectrum_checks(run_dir, &mut rep),
        ExperimentKind::LebesgueScan => lebesgue_checks(run_dir, &cfg, &mut rep),
        ExperimentKind::OfflineAmplification => offline_checks(run_dir, &mut rep),
        ExperimentKind::OnlineRegret | ExperimentKind::BaselineCompare => {
            online_checks(run_dir, &cfg, &manifest, &mut rep)
        }
    }
    let f = File::create(run_dir.join("report.json"))?;
    serde_json::to_writer_pretty(f, &rep)?;
    Ok(rep)
}
