use std::sync::Arc;

use crate::error::{invalid, Result};
use crate::krr::{Dataset, KrrModel, RegularizationSpec};
use crate::spectral_kernels::MercerKernel;

/// Exact posterior mean and covariance on a fixed candidate grid.
///
/// Queries land on grid points, so each observation is a rank-one update of
/// the grid covariance and costs `O(G²)` regardless of the sample count.
#[derive(Clone, Debug)]
pub struct GridPosterior {
    points: Vec<Vec<f64>>,
    mean: Vec<f64>,
    /// Row-major `G × G`.
    cov: Vec<f64>,
    lambda: f64,
    gain: f64,
    clamped: usize,
}

impl GridPosterior {
    /// Posterior after `samples`, fitted from scratch.
    pub fn fit(
        kernel: &Arc<MercerKernel>,
        points: Vec<Vec<f64>>,
        samples: &[(Vec<f64>, f64)],
        lambda: f64,
    ) -> Result<Self> {
        let g = points.len();
        let mut cov = vec![0.0; g * g];
        for i in 0..g {
            for j in 0..=i {
                let v = kernel.eval_unchecked(&points[i], &points[j]);
                cov[i * g + j] = v;
                cov[j * g + i] = v;
            }
        }
        let mut mean = vec![0.0; g];
        let mut gain = 0.0;
        if !samples.is_empty() {
            let (xs, ys): (Vec<Vec<f64>>, Vec<f64>) = samples.iter().cloned().unzip();
            let data = Dataset::new(xs, ys, 0.0)?;
            let model = KrrModel::fit(&data, kernel.clone(), RegularizationSpec::raw(lambda)?)?;
            let white = points
                .iter()
                .map(|p| {
                    let kx: Vec<f64> = data
                        .inputs()
                        .iter()
                        .map(|x| kernel.eval_unchecked(x, p))
                        .collect();
                    model.whiten(&kx)
                })
                .collect::<Result<Vec<_>>>()?;
            for (i, p) in points.iter().enumerate() {
                mean[i] = model.predict(p)?;
                for j in 0..=i {
                    let d: f64 = white[i].iter().zip(&white[j]).map(|(a, b)| a * b).sum();
                    cov[i * g + j] -= d;
                    if i != j {
                        cov[j * g + i] -= d;
                    }
                }
            }
            gain = model.information_gain();
        }
        Ok(Self {
            points,
            mean,
            cov,
            lambda,
            gain,
            clamped: 0,
        })
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn mean(&self, i: usize) -> f64 {
        self.mean[i]
    }

    pub fn variance(&self, i: usize) -> f64 {
        self.cov[i * self.len() + i]
    }

    pub fn std(&self, i: usize) -> f64 {
        self.variance(i).max(0.0).sqrt()
    }

    /// `½ log det(I + K/λ)` of the samples seen so far.
    pub fn gain(&self) -> f64 {
        self.gain
    }

    pub fn clamp_count(&self) -> usize {
        self.clamped
    }

    /// Conditions on `y` observed at grid point `i`.
    pub fn observe(&mut self, i: usize, y: f64) {
        let g = self.len();
        let var = self.variance(i);
        if var < 0.0 {
            self.clamped += 1;
        }
        let s = var.max(0.0) + self.lambda;
        let col: Vec<f64> = (0..g).map(|j| self.cov[j * g + i]).collect();
        let resid = (y - self.mean[i]) / s;
        for (m, c) in self.mean.iter_mut().zip(&col) {
            *m += c * resid;
        }
        for a in 0..g {
            let ca = col[a] / s;
            if ca == 0.0 {
                continue;
            }
            let row = &mut self.cov[a * g..(a + 1) * g];
            for (r, cb) in row.iter_mut().zip(&col) {
                *r -= ca * cb;
            }
        }
        self.gain += 0.5 * (1.0 + var.max(0.0) / self.lambda).ln();
    }
}

/// A dyadic cell `Π_d [lo_d, hi_d]` of `[-1,1]^m` with its regional model.
#[derive(Clone, Debug)]
pub struct Region {
    pub id: usize,
    pub depth: u32,
    pub lattice: Vec<u64>,
    pub samples: Vec<(Vec<f64>, f64)>,
    pub posterior: GridPosterior,
}

impl Region {
    /// `ρ = 2^{-depth}`, the side relative to the domain.
    pub fn rho(&self) -> f64 {
        (0.5f64).powi(self.depth as i32)
    }

    pub fn dim(&self) -> usize {
        self.lattice.len()
    }

    pub fn count(&self) -> usize {
        self.samples.len()
    }

    pub fn lower(&self, d: usize) -> f64 {
        -1.0 + 2.0 * self.rho() * self.lattice[d] as f64
    }

    pub fn upper(&self, d: usize) -> f64 {
        self.lower(d) + 2.0 * self.rho()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && (0..self.dim()).all(|d| self.lower(d) <= x[d] && x[d] <= self.upper(d))
    }

    /// `ρ^{-b}`.
    pub fn threshold(&self, b: f64) -> f64 {
        self.rho().powf(-b)
    }

    pub fn should_split(&self, b: f64) -> bool {
        self.count() as f64 >= self.threshold(b)
    }
}

/// `per_dim` equispaced points per coordinate of the cell, endpoints
/// included, in lexicographic order.
pub fn cell_grid(depth: u32, lattice: &[u64], per_dim: usize) -> Vec<Vec<f64>> {
    let rho = (0.5f64).powi(depth as i32);
    let mut out = vec![vec![]];
    for &l in lattice {
        let lo = -1.0 + 2.0 * rho * l as f64;
        let axis: Vec<f64> = (0..per_dim)
            .map(|k| {
                if per_dim == 1 {
                    lo + rho
                } else {
                    lo + 2.0 * rho * k as f64 / (per_dim - 1) as f64
                }
            })
            .collect();
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

pub fn new_region(
    id: usize,
    depth: u32,
    lattice: Vec<u64>,
    samples: Vec<(Vec<f64>, f64)>,
    kernel: &Arc<MercerKernel>,
    per_dim: usize,
    lambda: f64,
) -> Result<Region> {
    let points = cell_grid(depth, &lattice, per_dim);
    let posterior = GridPosterior::fit(kernel, points, &samples, lambda)?;
    Ok(Region {
        id,
        depth,
        lattice,
        samples,
        posterior,
    })
}

/// The `2^m` children of `parent`, each refit on the parent's samples that
/// fall inside it. Ties on the midpoint go to the upper child.
pub fn split(
    parent: &Region,
    b: f64,
    first_id: usize,
    kernel: &Arc<MercerKernel>,
    per_dim: usize,
    lambda: f64,
) -> Result<Vec<Region>> {
    if !parent.should_split(b) {
        return Err(invalid(
            "split",
            format!(
                "region {} holds {} samples, below the threshold {}",
                parent.id,
                parent.count(),
                parent.threshold(b)
            ),
        ));
    }
    let m = parent.dim();
    let mids: Vec<f64> = (0..m).map(|d| parent.lower(d) + parent.rho()).collect();
    let mut buckets: Vec<Vec<(Vec<f64>, f64)>> = vec![Vec::new(); 1 << m];
    for s in &parent.samples {
        let code = (0..m).fold(0usize, |acc, d| {
            acc | (usize::from(s.0[d] >= mids[d]) << (m - 1 - d))
        });
        buckets[code].push(s.clone());
    }
    buckets
        .into_iter()
        .enumerate()
        .map(|(code, samples)| {
            let lattice: Vec<u64> = (0..m)
                .map(|d| 2 * parent.lattice[d] + ((code >> (m - 1 - d)) & 1) as u64)
                .collect();
            new_region(
                first_id + code,
                parent.depth + 1,
                lattice,
                samples,
                kernel,
                per_dim,
                lambda,
            )
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral_kernels::{matern_periodic_spectrum, product_kernel};

    #[test]
    fn kalman_updates_match_batch_fit() {
        let k = Arc::new(MercerKernel::new(
            matern_periodic_spectrum(1.5, 33, true).unwrap(),
        ));
        let pts = cell_grid(0, &[0], 9);
        let mut online = GridPosterior::fit(&k, pts.clone(), &[], 1.0).unwrap();
        let mut seen = Vec::new();
        for (i, y) in [(3usize, 0.4), (7, -0.1), (3, 0.5), (0, 1.2)] {
            online.observe(i, y);
            seen.push((pts[i].clone(), y));
        }
        let batch = GridPosterior::fit(&k, pts, &seen, 1.0).unwrap();
        for i in 0..9 {
            assert!((online.mean(i) - batch.mean(i)).abs() < 1e-12);
            assert!((online.variance(i) - batch.variance(i)).abs() < 1e-12);
        }
        assert!((online.gain() - batch.gain()).abs() < 1e-12);
    }

    #[test]
    fn split_geometry() {
        let k1 = Arc::new(MercerKernel::new(
            matern_periodic_spectrum(1.5, 17, true).unwrap(),
        ));
        let root = new_region(
            0,
            0,
            vec![0],
            vec![(vec![0.0], 1.0), (vec![-0.5], 0.0)],
            &k1,
            9,
            1.0,
        )
        .unwrap();
        assert!(split(&root, 3.0, 1, &k1, 9, 1.0).is_ok());
        let kids = split(&root, 1.0, 1, &k1, 9, 1.0).unwrap();
        assert_eq!(kids.len(), 2);
        assert_eq!((kids[0].lower(0), kids[0].upper(0)), (-1.0, 0.0));
        assert_eq!((kids[1].lower(0), kids[1].upper(0)), (0.0, 1.0));
        assert_eq!(kids[0].rho(), 0.5);
        assert_eq!(kids[0].count() + kids[1].count(), 2);
        assert_eq!(kids[1].samples[0].0, vec![0.0]);

        let k2 =
            Arc::new(product_kernel(&matern_periodic_spectrum(1.5, 9, true).unwrap(), 2).unwrap());
        let root2 =
            new_region(0, 0, vec![0, 0], vec![(vec![0.2, -0.3], 1.0)], &k2, 3, 1.0).unwrap();
        let kids2 = split(&root2, 1.0, 1, &k2, 3, 1.0).unwrap();
        assert_eq!(kids2.len(), 4);
        let area: f64 = kids2
            .iter()
            .map(|c| (c.upper(0) - c.lower(0)) * (c.upper(1) - c.lower(1)))
            .sum();
        assert_eq!(area, 4.0);
        assert_eq!(kids2.iter().filter(|c| c.contains(&[0.2, -0.3])).count(), 1);
        let empty = new_region(0, 0, vec![0], vec![], &k1, 9, 1.0).unwrap();
        assert!(split(&empty, 1.0, 1, &k1, 9, 1.0).is_err());
    }
}
