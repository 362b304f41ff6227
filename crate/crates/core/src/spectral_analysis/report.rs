use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::bounds::{abel_bound_1d, abel_bound_multi, effective_dimension_kernel, DirichletGrowth};
use super::lebesgue::lebesgue_estimate;
use crate::error::{Error, Result};
use crate::spectral_kernels::{MercerKernel, Spectrum};

pub const REPORT_HEADER: [&str; 7] = [
    "tau",
    "d_eff",
    "d_eff_tail",
    "sqrt_bound",
    "abel_bound",
    "lebesgue_est",
    "lebesgue_tol",
];

/// Per-coordinate truncation used for the mixed-difference bound of products.
pub const DEFAULT_MULTI_TRUNCATION: usize = 128;

/// Effective dimension, both upper bounds and the grid estimate at one `τ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralReport {
    pub tau: f64,
    pub d_eff: f64,
    pub d_eff_tail: f64,
    /// `sup|φ| · √d_eff`.
    pub sqrt_bound: f64,
    pub abel_bound: f64,
    pub lebesgue_est: f64,
    pub lebesgue_tol: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub b_values: Vec<(usize, f64)>,
}

/// Slack of each upper bound over the certified lower end of the estimate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SandwichMargin {
    pub tau: f64,
    pub abel_margin: f64,
    pub sqrt_margin: f64,
}

impl SpectralReport {
    pub fn compute(k: &MercerKernel, tau: f64) -> Result<Self> {
        let d = effective_dimension_kernel(k, tau)?;
        let sqrt_bound = k.basis().sup_norm() * d.upper.sqrt();
        let (abel_bound, b_values) = match k.spectrum() {
            Spectrum::Flat(s) => {
                let b = abel_bound_1d(s, tau, &DirichletGrowth)?;
                (b.value, b.b_values)
            }
            Spectrum::Product(specs) if specs.len() == 1 => {
                let b = abel_bound_1d(&specs[0], tau, &DirichletGrowth)?;
                (b.value, b.b_values)
            }
            Spectrum::Product(_) => (
                abel_bound_multi(k, tau, DEFAULT_MULTI_TRUNCATION)?.value,
                vec![],
            ),
        };
        let est = lebesgue_estimate(k, tau, None)?;
        Ok(Self {
            tau,
            d_eff: d.lower,
            d_eff_tail: d.upper - d.lower,
            sqrt_bound,
            abel_bound,
            lebesgue_est: est.value,
            lebesgue_tol: est.tolerance,
            b_values,
        })
    }

    pub fn margin(&self) -> SandwichMargin {
        let low = self.lebesgue_est - self.lebesgue_tol;
        SandwichMargin {
            tau: self.tau,
            abel_margin: self.abel_bound - low,
            sqrt_margin: self.sqrt_bound - low,
        }
    }

    pub fn sandwich_holds(&self) -> bool {
        let m = self.margin();
        m.abel_margin >= 0.0 && m.sqrt_margin >= 0.0
    }
}

/// One report per `τ`.
pub fn spectral_scan(k: &MercerKernel, taus: &[f64]) -> Result<Vec<SpectralReport>> {
    taus.iter()
        .map(|&t| SpectralReport::compute(k, t))
        .collect()
}

pub fn write_reports_csv<W: Write>(rows: &[SpectralReport], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(REPORT_HEADER)?;
    for r in rows {
        out.write_record(
            [
                r.tau,
                r.d_eff,
                r.d_eff_tail,
                r.sqrt_bound,
                r.abel_bound,
                r.lebesgue_est,
                r.lebesgue_tol,
            ]
            .map(|v| format!("{v:?}")),
        )?;
    }
    out.flush()?;
    Ok(())
}

/// Reads rows written by [`write_reports_csv`], validating the header.
pub fn read_reports_csv<R: BufRead>(r: R, source: &str) -> Result<Vec<SpectralReport>> {
    let bad = |reason: String| Error::InvalidInput {
        path: source.to_string(),
        reason,
    };
    let mut rdr = csv::Reader::from_reader(r);
    let header = rdr.headers().map_err(|e| bad(e.to_string()))?.clone();
    if header.iter().ne(REPORT_HEADER.iter().copied()) {
        return Err(bad(format!(
            "unexpected header {:?}",
            header.iter().collect::<Vec<_>>()
        )));
    }
    let mut rows = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let mut v = [0.0f64; 7];
        for (slot, field) in v.iter_mut().zip(rec.iter()) {
            *slot = field
                .trim()
                .parse()
                .map_err(|_| bad(format!("row {}: {field:?} is not a number", line + 1)))?;
        }
        if rec.len() != 7 || v.iter().any(|x| x.is_nan()) {
            return Err(bad(format!("row {}: malformed", line + 1)));
        }
        rows.push(SpectralReport {
            tau: v[0],
            d_eff: v[1],
            d_eff_tail: v[2],
            sqrt_bound: v[3],
            abel_bound: v[4],
            lebesgue_est: v[5],
            lebesgue_tol: v[6],
            b_values: vec![],
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral_kernels::matern_periodic_spectrum;

    #[test]
    fn csv_round_trip() {
        let k = MercerKernel::new(matern_periodic_spectrum(2.5, 64, true).unwrap());
        let rows = spectral_scan(&k, &[0.1, 0.01]).unwrap();
        let mut buf = Vec::new();
        write_reports_csv(&rows, &mut buf).unwrap();
        let back = read_reports_csv(buf.as_slice(), "mem").unwrap();
        assert_eq!(back.len(), 2);
        for (a, b) in rows.iter().zip(&back) {
            assert_eq!(a.abel_bound, b.abel_bound);
            assert_eq!(a.lebesgue_tol, b.lebesgue_tol);
            assert!(a.sandwich_holds());
        }
        let broken = b"tau,d_eff\n1,2\n";
        assert!(matches!(
            read_reports_csv(&broken[..], "mem"),
            Err(Error::InvalidInput { .. })
        ));
    }
}
