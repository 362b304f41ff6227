use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::region::Region;
use super::Beta;
use crate::error::{Error, Result};

pub const CENSUS_HEADER: [&str; 4] = ["region_id", "depth", "rho", "T_A"];

/// One interaction round.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub t: usize,
    pub region_id: usize,
    pub depth: u32,
    pub x: Vec<f64>,
    pub reward: f64,
    /// UCB of the chosen candidate.
    pub ucb: f64,
    pub inst_regret: f64,
    pub cum_regret: f64,
    pub beta: Beta,
    pub sigma: f64,
    /// Information gain of the region before the query.
    pub gain: f64,
    pub split_flag: bool,
}

/// Every region a run created and the samples it held when it was retired
/// or when the run ended.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CensusEntry {
    pub region_id: usize,
    pub depth: u32,
    pub rho: f64,
    pub t_a: usize,
}

impl CensusEntry {
    pub(super) fn retired(r: &Region) -> Self {
        Self {
            region_id: r.id,
            depth: r.depth,
            rho: r.rho(),
            t_a: r.count(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RegretLog {
    pub dim: usize,
    pub rounds: Vec<RoundRecord>,
    pub census: Vec<CensusEntry>,
    /// Candidates whose UCB fell below `f_⋆`, when checked.
    pub optimism_violations: usize,
    /// Negative posterior variances clamped to zero.
    pub clamped: usize,
}

impl RegretLog {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            ..Self::default()
        }
    }

    pub(super) fn push(&mut self, r: RoundRecord) {
        self.rounds.push(r);
    }

    pub fn header(dim: usize) -> Vec<String> {
        let mut h: Vec<String> = ["t", "region_id", "depth"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        h.extend((1..=dim).map(|i| format!("x{i}")));
        h.extend(
            [
                "reward",
                "inst_regret",
                "cum_regret",
                "beta",
                "sigma",
                "gain",
                "split_flag",
            ]
            .iter()
            .map(|s| s.to_string()),
        );
        h
    }

    /// `R_t` after `t` rounds.
    pub fn cumulative(&self, t: usize) -> f64 {
        if t == 0 {
            0.0
        } else {
            self.rounds[t - 1].cum_regret
        }
    }

    pub fn final_regret(&self) -> f64 {
        self.rounds.last().map_or(0.0, |r| r.cum_regret)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(Self::header(self.dim))?;
        for r in &self.rounds {
            let mut rec = vec![
                r.t.to_string(),
                r.region_id.to_string(),
                r.depth.to_string(),
            ];
            rec.extend(r.x.iter().map(|v| format!("{v:?}")));
            rec.extend(
                [
                    r.reward,
                    r.inst_regret,
                    r.cum_regret,
                    r.beta.value(),
                    r.sigma,
                    r.gain,
                ]
                .iter()
                .map(|v| format!("{v:?}")),
            );
            rec.push(u8::from(r.split_flag).to_string());
            out.write_record(&rec)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn write_census_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(CENSUS_HEADER)?;
        for c in &self.census {
            out.write_record([
                c.region_id.to_string(),
                c.depth.to_string(),
                format!("{:?}", c.rho),
                c.t_a.to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }

    /// `(t, cum_regret)` pairs from a regret CSV, with schema and prefix-sum
    /// checks.
    pub fn read_regret_csv<R: BufRead>(r: R, source: &str) -> Result<Vec<(usize, f64)>> {
        let bad = |reason: String| Error::InvalidInput {
            path: source.to_string(),
            reason,
        };
        let mut rdr = csv::Reader::from_reader(r);
        let header = rdr.headers().map_err(|e| bad(e.to_string()))?.clone();
        let xs = header.iter().filter(|h| h.starts_with('x')).count();
        let expected = Self::header(xs);
        if header.iter().ne(expected.iter().map(String::as_str)) {
            return Err(bad(format!("expected header {}", expected.join(","))));
        }
        let col = |name: &str| {
            expected
                .iter()
                .position(|h| h == name)
                .expect("known column")
        };
        let (ti, ii, ci) = (col("t"), col("inst_regret"), col("cum_regret"));
        let mut out = Vec::new();
        let mut running = 0.0;
        for (row, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| bad(e.to_string()))?;
            let num = |i: usize| -> Result<f64> {
                rec.get(i)
                    .and_then(|f| f.trim().parse::<f64>().ok())
                    .ok_or_else(|| bad(format!("row {}: bad field {i}", row + 1)))
            };
            let t = num(ti)? as usize;
            running += num(ii)?;
            let cum = num(ci)?;
            if (running - cum).abs() > 1e-9 * (1.0 + cum.abs()) {
                return Err(bad(format!(
                    "row {}: cumulative regret is not a prefix sum",
                    row + 1
                )));
            }
            out.push((t, cum));
        }
        Ok(out)
    }

    pub fn read_census_csv<R: BufRead>(r: R, source: &str) -> Result<Vec<CensusEntry>> {
        let bad = |reason: String| Error::InvalidInput {
            path: source.to_string(),
            reason,
        };
        let mut rdr = csv::Reader::from_reader(r);
        let header = rdr.headers().map_err(|e| bad(e.to_string()))?.clone();
        if header.iter().ne(CENSUS_HEADER.iter().copied()) {
            return Err(bad(format!("expected header {}", CENSUS_HEADER.join(","))));
        }
        let mut out = Vec::new();
        for (row, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| bad(e.to_string()))?;
            let field = |i: usize| rec.get(i).map(str::trim).unwrap_or("");
            let parse_err = || bad(format!("row {}: malformed census entry", row + 1));
            out.push(CensusEntry {
                region_id: field(0).parse().map_err(|_| parse_err())?,
                depth: field(1).parse().map_err(|_| parse_err())?,
                rho: field(2).parse().map_err(|_| parse_err())?,
                t_a: field(3).parse().map_err(|_| parse_err())?,
            });
        }
        Ok(out)
    }
}
