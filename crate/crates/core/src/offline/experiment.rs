use std::io::Write;
use std::sync::Arc;

use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{argmax, tensor_grid, uniform_point};
use crate::error::{invalid, Result};
use crate::krr::{
    fundleb_rhs, Dataset, KrrModel, PointwiseBound, RegularizationSpec, TargetFunction,
};
use crate::seeds::cell_rng;
use crate::spectral_analysis::{
    abel_bound_1d, abel_bound_multi, effective_dimension_kernel, DirichletGrowth,
    DEFAULT_MULTI_TRUNCATION,
};
use crate::spectral_kernels::{MercerKernel, Spectrum};

pub const AMPLIFICATION_HEADER: [&str; 9] = [
    "eps",
    "n",
    "tau",
    "rep",
    "uniform_err",
    "simple_regret",
    "d_eff",
    "abel_bound",
    "sqrt_bound",
];

/// Grid over `ε` and `n` for a fixed kernel, target and `τ`.
#[derive(Clone, Debug)]
pub struct AmplificationSpec {
    pub kernel: Arc<MercerKernel>,
    /// `f_⋆` and the direction `g`; its own `ε` is ignored.
    pub target: TargetFunction,
    pub eps_grid: Vec<f64>,
    pub n_grid: Vec<usize>,
    pub tau: f64,
    pub reps: usize,
    pub seed: u64,
    pub noise: f64,
    pub competitor_size: usize,
    /// Nodes per coordinate of the grid on which the sup error is taken.
    pub eval_points: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AmplificationRow {
    pub eps: f64,
    pub n: usize,
    pub tau: f64,
    pub rep: usize,
    pub uniform_err: f64,
    pub simple_regret: f64,
    pub d_eff: f64,
    pub abel_bound: f64,
    pub sqrt_bound: f64,
}

/// Mean and 90th percentile over repetitions of one `(ε, n)` cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub eps: f64,
    pub n: usize,
    pub mean_err: f64,
    pub p90_err: f64,
    pub mean_regret: f64,
    pub p90_regret: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AmplificationSummary {
    pub rows: Vec<AmplificationRow>,
    pub cells: Vec<CellSummary>,
    /// Least-squares slope of the mean error against `ε` at the largest `n`.
    pub slope: f64,
    pub slope_stderr: f64,
    pub d_eff: f64,
    pub abel_bound: f64,
    pub sqrt_bound: f64,
}

impl AmplificationSummary {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(AMPLIFICATION_HEADER)?;
        for r in &self.rows {
            out.write_record([
                format!("{:?}", r.eps),
                r.n.to_string(),
                format!("{:?}", r.tau),
                r.rep.to_string(),
                format!("{:?}", r.uniform_err),
                format!("{:?}", r.simple_regret),
                format!("{:?}", r.d_eff),
                format!("{:?}", r.abel_bound),
                format!("{:?}", r.sqrt_bound),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Rows written by [`AmplificationSummary::write_csv`], header validated.
pub fn read_amplification_csv<R: std::io::BufRead>(
    r: R,
    source: &str,
) -> Result<Vec<AmplificationRow>> {
    let bad = |reason: String| crate::Error::InvalidInput {
        path: source.to_string(),
        reason,
    };
    let mut rdr = csv::Reader::from_reader(r);
    let header = rdr.headers().map_err(|e| bad(e.to_string()))?.clone();
    if header.iter().ne(AMPLIFICATION_HEADER.iter().copied()) {
        return Err(bad(format!(
            "expected header {}",
            AMPLIFICATION_HEADER.join(",")
        )));
    }
    let mut rows = Vec::new();
    for (line, rec) in rdr.deserialize::<AmplificationRow>().enumerate() {
        let row = rec.map_err(|e| bad(format!("row {}: {e}", line + 1)))?;
        if [row.eps, row.tau, row.uniform_err, row.simple_regret]
            .iter()
            .any(|v| !v.is_finite())
        {
            return Err(bad(format!("row {}: non-finite value", line + 1)));
        }
        rows.push(row);
    }
    Ok(rows)
}

/// `(slope, standard error)` of the ordinary least-squares line through
/// `(x_i, y_i)`.
pub fn ols_slope(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if sxx == 0.0 {
        return (0.0, f64::INFINITY);
    }
    let slope = sxy / sxx;
    let resid: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - my - slope * (a - mx)).powi(2))
        .sum();
    let se = if x.len() > 2 {
        (resid / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    (slope, se)
}

fn percentile(values: &mut [f64], p: f64) -> f64 {
    values.sort_by(f64::total_cmp);
    let rank = (p * (values.len() - 1) as f64).round() as usize;
    values[rank]
}

/// `(d_eff upper end, Abel bound, sup|φ|·√d_eff)` at `τ`.
fn spectral_bounds(k: &MercerKernel, tau: f64) -> Result<(f64, f64, f64)> {
    let d = effective_dimension_kernel(k, tau)?.upper;
    let abel = match k.spectrum() {
        Spectrum::Flat(s) => abel_bound_1d(s, tau, &DirichletGrowth)?.value,
        Spectrum::Product(_) => abel_bound_multi(k, tau, DEFAULT_MULTI_TRUNCATION)?.value,
    };
    Ok((d, abel, k.basis().sup_norm() * d.sqrt()))
}

/// One `(n, rep)` draw evaluated at every `ε`.
///
/// Predictions are linear in the labels, so the fit is done once for the
/// `ε`-free labels and once for `g` and combined per `ε`.
fn run_cell(
    spec: &AmplificationSpec,
    n: usize,
    rep: usize,
    grid: &[Vec<f64>],
) -> Result<Vec<(f64, f64)>> {
    let m = spec.kernel.dim();
    let mut rng = cell_rng(spec.seed, &[n as u64, rep as u64]);
    let noise = Normal::new(0.0, spec.noise).map_err(|e| invalid("noise", e.to_string()))?;
    let xs: Vec<Vec<f64>> = (0..n).map(|_| uniform_point(&mut rng, m)).collect();
    let y0: Vec<f64> = xs
        .iter()
        .map(|x| {
            spec.target.eval_star(x)
                + if spec.noise > 0.0 {
                    noise.sample(&mut rng)
                } else {
                    0.0
                }
        })
        .collect();
    let yg: Vec<f64> = xs.iter().map(|x| spec.target.perturbation(x)).collect();
    let comps: Vec<Vec<f64>> = (0..spec.competitor_size)
        .map(|_| uniform_point(&mut rng, m))
        .collect();
    let data = Dataset::new(xs, y0, spec.noise)?;
    let model = KrrModel::fit(
        &data,
        spec.kernel.clone(),
        RegularizationSpec::normalized(spec.tau)?,
    )?;
    let wg = model.solve(&yg)?;
    let eval = |pts: &[Vec<f64>]| -> Vec<(f64, f64, f64, f64)> {
        pts.iter()
            .map(|x| {
                let (mut p0, mut pg) = (0.0, 0.0);
                for ((p, a), b) in data.inputs().iter().zip(model.weights()).zip(&wg) {
                    let kv = spec.kernel.eval_unchecked(p, x);
                    p0 += a * kv;
                    pg += b * kv;
                }
                (
                    p0,
                    pg,
                    spec.target.eval_star(x),
                    spec.target.perturbation(x),
                )
            })
            .collect()
    };
    let on_grid = eval(grid);
    let on_comp = eval(&comps);
    Ok(spec
        .eps_grid
        .iter()
        .map(|&eps| {
            let err = on_grid
                .iter()
                .map(|(p0, pg, fs, g)| (p0 + eps * pg - fs - eps * g).abs())
                .fold(0.0, f64::max);
            let preds: Vec<f64> = on_comp.iter().map(|(p0, pg, _, _)| p0 + eps * pg).collect();
            let truth: Vec<f64> = on_comp.iter().map(|(_, _, fs, g)| fs + eps * g).collect();
            let best = truth.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            (err, best - truth[argmax(&preds)])
        })
        .collect())
}

pub fn amplification_experiment(spec: &AmplificationSpec) -> Result<AmplificationSummary> {
    if spec.eps_grid.is_empty() || spec.n_grid.is_empty() || spec.reps == 0 {
        return Err(invalid(
            "grid",
            "eps, n and repetition grids must be nonempty",
        ));
    }
    if !spec.eps_grid.contains(&0.0) {
        return Err(invalid("eps_grid", "must contain 0"));
    }
    if spec.n_grid.contains(&0) || spec.competitor_size == 0 || spec.eval_points == 0 {
        return Err(invalid("n_grid", "sizes must be positive"));
    }
    let (d_eff, abel, sqrt_bound) = spectral_bounds(&spec.kernel, spec.tau)?;
    let grid = tensor_grid(spec.kernel.dim(), spec.eval_points);
    let cells: Vec<(usize, usize)> = spec
        .n_grid
        .iter()
        .flat_map(|&n| (0..spec.reps).map(move |r| (n, r)))
        .collect();
    let results = cells
        .par_iter()
        .map(|&(n, r)| run_cell(spec, n, r, &grid))
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    for (&(n, rep), res) in cells.iter().zip(&results) {
        for (&eps, &(err, regret)) in spec.eps_grid.iter().zip(res) {
            rows.push(AmplificationRow {
                eps,
                n,
                tau: spec.tau,
                rep,
                uniform_err: err,
                simple_regret: regret,
                d_eff,
                abel_bound: abel,
                sqrt_bound,
            });
        }
    }
    let mut summaries = Vec::new();
    for &eps in &spec.eps_grid {
        for &n in &spec.n_grid {
            let sel: Vec<&AmplificationRow> =
                rows.iter().filter(|r| r.eps == eps && r.n == n).collect();
            let mut errs: Vec<f64> = sel.iter().map(|r| r.uniform_err).collect();
            let mut regs: Vec<f64> = sel.iter().map(|r| r.simple_regret).collect();
            let k = sel.len() as f64;
            summaries.push(CellSummary {
                eps,
                n,
                mean_err: errs.iter().sum::<f64>() / k,
                p90_err: percentile(&mut errs, 0.9),
                mean_regret: regs.iter().sum::<f64>() / k,
                p90_regret: percentile(&mut regs, 0.9),
            });
        }
    }
    let n_max = *spec.n_grid.iter().max().expect("nonempty");
    let (xs, ys): (Vec<f64>, Vec<f64>) = summaries
        .iter()
        .filter(|c| c.n == n_max)
        .map(|c| (c.eps, c.mean_err))
        .unzip();
    let (slope, slope_stderr) = ols_slope(&xs, &ys);
    Ok(AmplificationSummary {
        rows,
        cells: summaries,
        slope,
        slope_stderr,
        d_eff,
        abel_bound: abel,
        sqrt_bound,
    })
}

/// Repeated fits checking the pointwise bound at one `x`.
#[derive(Clone, Debug)]
pub struct CoverageSpec {
    pub kernel: Arc<MercerKernel>,
    pub target: TargetFunction,
    pub x: Vec<f64>,
    pub n: usize,
    pub tau: f64,
    pub delta: f64,
    pub noise: f64,
    pub reps: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverageResult {
    pub reps: usize,
    pub violations: usize,
    pub rate: f64,
    pub lambda_bound: f64,
    pub mean_error: f64,
    pub mean_rhs: f64,
}

/// Violation rate of `|μ(x) − f(x)| ≤ fundleb_rhs` with the Abel bound in
/// place of the Lebesgue constant.
pub fn coverage_experiment(spec: &CoverageSpec) -> Result<CoverageResult> {
    if spec.reps == 0 {
        return Err(invalid("reps", "must be positive"));
    }
    let (_, lambda_bound, _) = spectral_bounds(&spec.kernel, spec.tau)?;
    let kappa = spec.kernel.kappa();
    let m = spec.kernel.dim();
    let outcomes = (0..spec.reps)
        .into_par_iter()
        .map(|rep| -> Result<(f64, f64)> {
            let mut rng = cell_rng(spec.seed, &[rep as u64]);
            let noise =
                Normal::new(0.0, spec.noise).map_err(|e| invalid("noise", e.to_string()))?;
            let xs: Vec<Vec<f64>> = (0..spec.n).map(|_| uniform_point(&mut rng, m)).collect();
            let ys: Vec<f64> = xs
                .iter()
                .map(|x| {
                    spec.target.eval(x)
                        + if spec.noise > 0.0 {
                            noise.sample(&mut rng)
                        } else {
                            0.0
                        }
                })
                .collect();
            let data = Dataset::new(xs, ys, spec.noise)?;
            let model = KrrModel::fit(
                &data,
                spec.kernel.clone(),
                RegularizationSpec::normalized(spec.tau)?,
            )?;
            let err = (model.predict(&spec.x)? - spec.target.eval(&spec.x)).abs();
            let rhs = fundleb_rhs(&PointwiseBound {
                sigma: model.posterior_std(&spec.x)?,
                n: spec.n,
                tau: spec.tau,
                r: spec.noise,
                delta: spec.delta,
                norm_bound: spec.target.rkhs_norm(),
                lambda_bound,
                kappa,
                eps: spec.target.eps(),
            })?;
            Ok((err, rhs))
        })
        .collect::<Result<Vec<_>>>()?;
    let violations = outcomes.iter().filter(|(e, r)| e > r).count();
    let k = spec.reps as f64;
    Ok(CoverageResult {
        reps: spec.reps,
        violations,
        rate: violations as f64 / k,
        lambda_bound,
        mean_error: outcomes.iter().map(|o| o.0).sum::<f64>() / k,
        mean_rhs: outcomes.iter().map(|o| o.1).sum::<f64>() / k,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::krr::Term;
    use crate::spectral_kernels::{matern_periodic_spectrum, EigenSequence};

    #[test]
    fn ols_recovers_a_line() {
        let (s, se) = ols_slope(&[0.0, 1.0, 2.0, 3.0], &[1.0, 3.0, 5.0, 7.0]);
        assert!((s - 2.0).abs() < 1e-14 && se < 1e-12);
    }

    #[test]
    fn single_mode_slope_is_below_one_plus_h1() {
        let k = Arc::new(MercerKernel::new(EigenSequence::finite(vec![1.0]).unwrap()));
        let target = TargetFunction::new(
            &k,
            vec![Term {
                index: vec![1],
                coeff: 0.5,
            }],
            0.0,
            3,
        )
        .unwrap();
        let tau = 0.1;
        let spec = AmplificationSpec {
            kernel: k,
            target,
            eps_grid: vec![0.0, 0.025, 0.05, 0.1, 0.2],
            n_grid: vec![100, 400],
            tau,
            reps: 8,
            seed: 3,
            noise: 0.1,
            competitor_size: 16,
            eval_points: 257,
        };
        let out = amplification_experiment(&spec).unwrap();
        let h1 = 1.0 / (1.0 + tau);
        assert!(
            out.slope <= 1.0 + h1 + 3.0 * out.slope_stderr + 1e-9,
            "{}",
            out.slope
        );
        for r in &out.rows {
            assert!(r.simple_regret >= 0.0);
        }
        assert_eq!(out.rows.len(), 5 * 2 * 8);
    }

    #[test]
    fn noiseless_grid_interpolation() {
        let k = Arc::new(MercerKernel::new(
            matern_periodic_spectrum(1.5, 64, true).unwrap(),
        ));
        let target = TargetFunction::new(
            &k,
            vec![Term {
                index: vec![2],
                coeff: 0.3,
            }],
            0.0,
            5,
        )
        .unwrap();
        let grid = tensor_grid(1, 33);
        let ys: Vec<f64> = grid.iter().map(|x| target.eval(x)).collect();
        let model = KrrModel::fit(
            &Dataset::new(grid.clone(), ys, 0.0).unwrap(),
            k,
            RegularizationSpec::normalized(1e-6).unwrap(),
        )
        .unwrap();
        assert!(super::super::uniform_error(&model, &target, &grid).unwrap() <= 1e-3);
    }
}
