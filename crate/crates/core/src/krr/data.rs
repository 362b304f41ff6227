use std::io::{BufRead, Write};

use crate::error::{invalid, Error, Result};

/// Inputs in `[-1,1]^m`, labels, and the noise scale `R`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    inputs: Vec<Vec<f64>>,
    labels: Vec<f64>,
    noise: f64,
}

impl Dataset {
    pub fn new(inputs: Vec<Vec<f64>>, labels: Vec<f64>, noise: f64) -> Result<Self> {
        if inputs.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: inputs.len(),
                got: labels.len(),
            });
        }
        if !(noise >= 0.0) {
            return Err(invalid("noise", "must be nonnegative"));
        }
        let dim = inputs.first().map_or(0, Vec::len);
        for x in &inputs {
            if x.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: x.len(),
                });
            }
            if x.iter().any(|v| !(-1.0..=1.0).contains(v)) {
                return Err(Error::OutOfDomain {
                    point: x.clone(),
                    domain: format!("[-1,1]^{dim}"),
                });
            }
        }
        Ok(Self {
            inputs,
            labels,
            noise,
        })
    }

    pub fn inputs(&self) -> &[Vec<f64>] {
        &self.inputs
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn noise(&self) -> f64 {
        self.noise
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    /// Input dimension, 0 for an empty dataset.
    pub fn dim(&self) -> usize {
        self.inputs.first().map_or(0, Vec::len)
    }

    /// Writes a `x1,…,xm,y` table.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header: Vec<String> = (1..=self.dim()).map(|i| format!("x{i}")).collect();
        header.push("y".into());
        out.write_record(&header)?;
        for (x, y) in self.inputs.iter().zip(&self.labels) {
            let mut rec: Vec<String> = x.iter().map(|v| format!("{v:?}")).collect();
            rec.push(format!("{y:?}"));
            out.write_record(&rec)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R, noise: f64, source: &str) -> Result<Self> {
        let bad = |reason: String| Error::InvalidInput {
            path: source.to_string(),
            reason,
        };
        let mut rdr = csv::Reader::from_reader(r);
        let header = rdr.headers().map_err(|e| bad(e.to_string()))?.clone();
        let m = header.len().saturating_sub(1);
        let expected: Vec<String> = (1..=m)
            .map(|i| format!("x{i}"))
            .chain(["y".to_string()])
            .collect();
        if m == 0 || header.iter().ne(expected.iter().map(String::as_str)) {
            return Err(bad(format!("expected header {}", expected.join(","))));
        }
        let mut inputs = Vec::new();
        let mut labels = Vec::new();
        for (row, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| bad(e.to_string()))?;
            let vals: Vec<f64> = rec
                .iter()
                .map(|f| f.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| bad(format!("row {}: non-numeric field", row + 1)))?;
            labels.push(vals[m]);
            inputs.push(vals[..m].to_vec());
        }
        Self::new(inputs, labels, noise).map_err(|e| bad(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_and_validation() {
        let d = Dataset::new(vec![vec![0.1, -0.2], vec![1.0, -1.0]], vec![3.0, -0.5], 0.1).unwrap();
        let mut buf = Vec::new();
        d.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8_lossy(&buf).starts_with("x1,x2,y\n"));
        assert_eq!(Dataset::read_csv(buf.as_slice(), 0.1, "mem").unwrap(), d);
        assert!(Dataset::new(vec![vec![1.5]], vec![0.0], 0.0).is_err());
        assert!(Dataset::new(vec![vec![0.5]], vec![], 0.0).is_err());
        assert!(Dataset::read_csv(&b"a,b\n1,2\n"[..], 0.0, "mem").is_err());
    }
}
