//! Domain-splitting GP-UCB with misspecification-inflated bonuses and a
//! single-region baseline.

mod log;
mod region;

pub use self::log::{CensusEntry, RegretLog, RoundRecord, CENSUS_HEADER};
pub use region::{cell_grid, new_region, split, GridPosterior, Region};

use std::collections::BTreeMap;
use std::sync::Arc;

use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::krr::TargetFunction;
use crate::offline::CompetitorSet;
use crate::seeds::cell_rng;
use crate::spectral_kernels::MercerKernel;

/// Parameters of both online policies.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OnlineParams {
    pub horizon: usize,
    /// Split exponent: a region of side `ρ` splits at `ρ^{-b}` samples.
    pub b: f64,
    pub lambda: f64,
    /// Bound `B` on `‖f_⋆‖_H`.
    pub norm_bound: f64,
    pub eps: f64,
    pub delta: f64,
    pub noise: f64,
    /// Subdomain eigendecay exponent; `b = α` by default.
    pub alpha: f64,
    /// Candidate points per coordinate of every region.
    pub grid_points: usize,
    /// Candidate points per coordinate of the single-region baseline.
    pub baseline_points: usize,
    /// Count candidates whose UCB falls below `f_⋆` (simulator check).
    #[serde(default)]
    pub check_optimism: bool,
}

impl OnlineParams {
    pub fn new(horizon: usize, alpha: f64, norm_bound: f64, eps: f64, noise: f64) -> Self {
        Self {
            horizon,
            b: alpha,
            lambda: 1.0,
            norm_bound,
            eps,
            delta: 0.1,
            noise,
            alpha,
            grid_points: 9,
            baseline_points: 257,
            check_optimism: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.b > 0.0) {
            return Err(invalid("b", "must be positive"));
        }
        if !(self.lambda > 0.0) {
            return Err(invalid("lambda", "must be positive"));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(invalid("delta", "must lie in (0, 1)"));
        }
        if !(self.noise >= 0.0 && self.eps >= 0.0 && self.norm_bound >= 0.0) {
            return Err(invalid(
                "noise",
                "noise, eps and norm bound must be nonnegative",
            ));
        }
        if self.grid_points < 2 || self.baseline_points < 2 {
            return Err(invalid(
                "grid_points",
                "need at least 2 points per coordinate",
            ));
        }
        Ok(())
    }

    /// `(2m + α)/(2m + 2α)`.
    pub fn reference_slope(&self, m: usize) -> f64 {
        let m = m as f64;
        (2.0 * m + self.alpha) / (2.0 * m + 2.0 * self.alpha)
    }
}

/// The bonus split into its three parts.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Beta {
    pub noise_term: f64,
    pub norm_term: f64,
    pub eps_term: f64,
}

impl Beta {
    pub fn value(&self) -> f64 {
        self.noise_term + self.norm_term + self.eps_term
    }
}

/// `(R/√λ)√(b m log(4t/δ) + 1 + γ) + B + ε√(N/λ)` for a region holding
/// `count` samples with information gain `gain`.
pub fn beta(count: usize, gain: f64, m: usize, t: usize, p: &OnlineParams) -> Beta {
    let t = t.max(1) as f64;
    let inner = p.b * m as f64 * (4.0 * t / p.delta).ln() + 1.0 + gain;
    Beta {
        noise_term: p.noise / p.lambda.sqrt() * inner.sqrt(),
        norm_term: p.norm_bound,
        eps_term: p.eps * (count as f64 / p.lambda).sqrt(),
    }
}

/// `μ(x) + β σ(x)` at candidate `i` of `region`.
pub fn ucb(region: &Region, i: usize, t: usize, p: &OnlineParams) -> f64 {
    let b = beta(region.count(), region.posterior.gain(), region.dim(), t, p).value();
    region.posterior.mean(i) + b * region.posterior.std(i)
}

/// Like [`ucb`] for an arbitrary point, which must be a candidate of the region.
pub fn ucb_at(region: &Region, x: &[f64], t: usize, p: &OnlineParams) -> Result<f64> {
    if !region.contains(x) {
        return Err(crate::Error::OutOfDomain {
            point: x.to_vec(),
            domain: format!("region {}", region.id),
        });
    }
    let i = region
        .posterior
        .points()
        .iter()
        .position(|q| q.as_slice() == x)
        .ok_or_else(|| invalid("x", "not a candidate point of the region"))?;
    Ok(ucb(region, i, t, p))
}

/// `⌈9^m n^{m/(m+b)}⌉`.
pub fn region_count_bound(n: usize, m: usize, b: f64) -> usize {
    let m_f = m as f64;
    (9f64.powi(m as i32) * (n as f64).powf(m_f / (m_f + b)) - 1e-9).ceil() as usize
}

/// Deepest level any region can reach within `n` rounds.
pub fn max_depth(n: usize, b: f64) -> u32 {
    ((n.max(1) as f64).log2() / b).floor() as u32 + 1
}

/// Target, best competitor and the seeded noise stream.
#[derive(Clone, Debug)]
pub struct BanditEnvironment {
    pub kernel: Arc<MercerKernel>,
    pub target: TargetFunction,
    pub competitors: CompetitorSet,
    pub noise: f64,
    pub seed: u64,
}

impl BanditEnvironment {
    /// The competitor set is the union of all candidate grids of regions a
    /// run of `horizon` rounds can create, so every query is a competitor.
    pub fn new(
        kernel: Arc<MercerKernel>,
        target: TargetFunction,
        p: &OnlineParams,
        seed: u64,
    ) -> Result<Self> {
        p.validate()?;
        // Refine until the baseline grid is nested in the competitor grid too.
        let mut depth = max_depth(p.horizon, p.b);
        while !((p.grid_points - 1) << depth).is_multiple_of(p.baseline_points - 1) && depth < 24 {
            depth += 1;
        }
        if !((p.grid_points - 1) << depth).is_multiple_of(p.baseline_points - 1) {
            return Err(invalid(
                "baseline_points",
                "minus one must be a power-of-two multiple of a divisor of grid_points minus one",
            ));
        }
        let per_dim = (p.grid_points - 1) * (1usize << depth) + 1;
        let m = kernel.dim();
        for (name, g) in [
            ("grid_points", p.grid_points),
            ("baseline_points", p.baseline_points),
        ] {
            if (g as f64).powi(m as i32) > 4096.0 {
                return Err(invalid(
                    name,
                    format!("{g}^{m} candidates per region exceed 4096"),
                ));
            }
        }
        if (per_dim as f64).powi(m as i32) > 4e6 {
            return Err(invalid("horizon", "competitor grid exceeds 4·10⁶ points"));
        }
        let points = cell_grid(0, &vec![0; m], per_dim);
        let competitors = CompetitorSet::new(points, |x| target.eval(x))?;
        Ok(Self {
            kernel,
            target,
            competitors,
            noise: p.noise,
            seed,
        })
    }

    pub fn best_value(&self) -> f64 {
        self.competitors.best_value()
    }

    fn noise_stream(&self, stream: u64) -> Result<(ChaCha8Rng, Normal<f64>)> {
        let law = Normal::new(0.0, self.noise).map_err(|e| invalid("noise", e.to_string()))?;
        Ok((cell_rng(self.seed, &[stream]), law))
    }
}

struct Choice {
    value: f64,
    region: usize,
    index: usize,
}

/// Higher UCB first, then lexicographically smaller point, then lower id.
fn better(a: &Choice, b: &Choice, regions: &BTreeMap<usize, Region>) -> bool {
    if a.value != b.value {
        return a.value > b.value;
    }
    let pa = &regions[&a.region].posterior.points()[a.index];
    let pb = &regions[&b.region].posterior.points()[b.index];
    match pa.partial_cmp(pb) {
        Some(std::cmp::Ordering::Less) => true,
        Some(std::cmp::Ordering::Greater) => false,
        _ => a.region < b.region,
    }
}

fn run(env: &BanditEnvironment, p: &OnlineParams, splitting: bool) -> Result<RegretLog> {
    p.validate()?;
    let m = env.kernel.dim();
    let per_dim = if splitting {
        p.grid_points
    } else {
        p.baseline_points
    };
    let mut regions = BTreeMap::new();
    regions.insert(
        0,
        region::new_region(0, 0, vec![0; m], vec![], &env.kernel, per_dim, p.lambda)?,
    );
    let mut census: BTreeMap<usize, CensusEntry> = BTreeMap::new();
    let mut next_id = 1;
    let (mut rng, law) = env.noise_stream(0)?;
    let best = env.best_value();
    let mut log = RegretLog::new(m);
    let mut cum = 0.0;
    for t in 1..=p.horizon {
        let mut choice: Option<Choice> = None;
        for (id, r) in &regions {
            let b = beta(r.count(), r.posterior.gain(), m, t, p).value();
            for i in 0..r.posterior.len() {
                let c = Choice {
                    value: r.posterior.mean(i) + b * r.posterior.std(i),
                    region: *id,
                    index: i,
                };
                if p.check_optimism
                    && c.value < env.target.eval_star(&r.posterior.points()[i]) - 1e-9
                {
                    log.optimism_violations += 1;
                }
                if choice.as_ref().is_none_or(|cur| better(&c, cur, &regions)) {
                    choice = Some(c);
                }
            }
        }
        let choice = choice.expect("at least one active region");
        let region = regions
            .get_mut(&choice.region)
            .expect("chosen region is active");
        let bt = beta(region.count(), region.posterior.gain(), m, t, p);
        let sigma = region.posterior.std(choice.index);
        let gain = region.posterior.gain();
        let x = region.posterior.points()[choice.index].clone();
        let fx = env.target.eval(&x);
        let y = fx
            + if env.noise > 0.0 {
                law.sample(&mut rng)
            } else {
                0.0
            };
        region.posterior.observe(choice.index, y);
        region.samples.push((x.clone(), y));
        let inst = best - fx;
        cum += inst;
        let mut split_flag = false;
        if splitting && region.should_split(p.b) {
            split_flag = true;
            let mut stack = vec![choice.region];
            while let Some(id) = stack.pop() {
                let parent = regions.remove(&id).expect("region to split is active");
                let kids = split(&parent, p.b, next_id, &env.kernel, per_dim, p.lambda)?;
                next_id += kids.len();
                census.insert(id, CensusEntry::retired(&parent));
                log.clamped += parent.posterior.clamp_count();
                for kid in kids {
                    if kid.should_split(p.b) {
                        stack.push(kid.id);
                    }
                    regions.insert(kid.id, kid);
                }
            }
        }
        log.push(RoundRecord {
            t,
            region_id: choice.region,
            depth: regions
                .get(&choice.region)
                .map_or_else(|| census[&choice.region].depth, |r| r.depth),
            x,
            reward: y,
            ucb: choice.value,
            inst_regret: inst,
            cum_regret: cum,
            beta: bt,
            sigma,
            gain,
            split_flag,
        });
    }
    for r in regions.values() {
        census.insert(r.id, CensusEntry::retired(r));
        log.clamped += r.posterior.clamp_count();
    }
    log.census = census.into_values().collect();
    Ok(log)
}

/// Domain-splitting GP-UCB with the `ε√(N/λ)` bonus.
pub fn run_pi_misspec_gpucb(env: &BanditEnvironment, p: &OnlineParams) -> Result<RegretLog> {
    run(env, p, true)
}

/// One global region that never splits, with the same bonus.
pub fn run_global_eps_ucb(env: &BanditEnvironment, p: &OnlineParams) -> Result<RegretLog> {
    run(env, p, false)
}

/// `|Ã_n| ≤ ⌈9^m n^{m/(m+b)}⌉` on a finished run.
pub fn census_check(log: &RegretLog, b: f64) -> bool {
    log.census.len() <= region_count_bound(log.rounds.len().max(1), log.dim, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::krr::Term;
    use crate::spectral_kernels::{matern_periodic_spectrum, EigenSequence};

    fn setup(eps: f64, noise: f64, n: usize) -> (BanditEnvironment, OnlineParams) {
        let k = Arc::new(MercerKernel::new(
            matern_periodic_spectrum(1.5, 33, true).unwrap(),
        ));
        let target = TargetFunction::new(
            &k,
            vec![
                Term {
                    index: vec![2],
                    coeff: 0.3,
                },
                Term {
                    index: vec![5],
                    coeff: -0.2,
                },
            ],
            eps,
            9,
        )
        .unwrap();
        let mut p = OnlineParams::new(n, 3.0, target.rkhs_norm(), eps, noise);
        p.baseline_points = 33;
        (BanditEnvironment::new(k, target, &p, 5).unwrap(), p)
    }

    #[test]
    fn beta_closed_form() {
        let mut p = OnlineParams::new(10, 2.0, 2.0, 0.1, 1.0);
        p.b = 2.0;
        let b = beta(25, 1.5, 1, 100, &p).value();
        let expect = (2.0 * (4000f64).ln() + 1.0 + 1.5).sqrt() + 2.0 + 0.1 * 5.0;
        assert!((b - expect).abs() < 1e-12);
        let empty = beta(0, 0.0, 1, 100, &p);
        assert_eq!(empty.eps_term, 0.0);
        let zero = OnlineParams {
            noise: 0.0,
            norm_bound: 0.0,
            eps: 0.0,
            ..p
        };
        assert_eq!(beta(7, 3.0, 1, 5, &zero).value(), 0.0);
    }

    #[test]
    fn count_bound_examples() {
        assert_eq!(region_count_bound(16, 1, 1.0), 36);
        assert_eq!(region_count_bound(1, 2, 2.0), 81);
    }

    #[test]
    fn one_round_splits_the_root() {
        let (env, p) = setup(0.0, 0.1, 1);
        let log = run_pi_misspec_gpucb(&env, &p).unwrap();
        assert_eq!(log.rounds.len(), 1);
        assert!(log.rounds[0].split_flag);
        assert_eq!(log.census.len(), 3);
        let base = run_global_eps_ucb(&env, &p).unwrap();
        assert_eq!(base.rounds[0].x, log.rounds[0].x);
    }

    #[test]
    fn constant_target_has_no_regret() {
        let k = Arc::new(MercerKernel::new(
            EigenSequence::finite(vec![0.5, 0.25, 0.25]).unwrap(),
        ));
        let target = TargetFunction::new(
            &k,
            vec![Term {
                index: vec![1],
                coeff: 0.7,
            }],
            0.0,
            3,
        )
        .unwrap();
        let p = OnlineParams::new(64, 1.0, target.rkhs_norm(), 0.0, 0.0);
        let env = BanditEnvironment::new(k, target, &p, 1).unwrap();
        let log = run_pi_misspec_gpucb(&env, &p).unwrap();
        assert!(log.rounds.last().unwrap().cum_regret.abs() < 1e-12);
    }

    #[test]
    fn optimism_holds_without_noise() {
        let (env, mut p) = setup(0.0, 0.0, 200);
        p.check_optimism = true;
        let log = run_pi_misspec_gpucb(&env, &p).unwrap();
        // Replaying the run, every candidate UCB dominates f_⋆.
        assert!(log.optimism_violations == 0);
        assert!(census_check(&log, p.b));
        assert!(log.rounds.iter().all(|r| r.inst_regret >= -1e-12));
    }

    #[test]
    fn runs_are_deterministic() {
        let (env, p) = setup(0.05, 0.1, 300);
        let a = run_pi_misspec_gpucb(&env, &p).unwrap();
        let b = run_pi_misspec_gpucb(&env, &p).unwrap();
        let (mut ca, mut cb) = (Vec::new(), Vec::new());
        a.write_csv(&mut ca).unwrap();
        b.write_csv(&mut cb).unwrap();
        assert_eq!(ca, cb);
        let total: usize = a.census.iter().map(|c| c.t_a).sum();
        let deepest = a.census.iter().map(|c| c.depth).max().unwrap() as usize;
        assert!(total <= 300 * (deepest + 1));
    }
}
