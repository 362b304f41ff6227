//! Independent oracles: dense linear algebra, brute-force sums, adaptive
//! quadrature and closed forms evaluated separately.

use std::sync::Arc;

use kernel_misspec::krr::{
    fundleb_rhs, Dataset, KrrModel, PointwiseBound, RegularizationSpec, TargetFunction,
};
use kernel_misspec::offline::{
    plugin_maximize, sample_dataset, uniform_error, CompetitorSet, OfflineConfig,
};
use kernel_misspec::online::{cell_grid, split, GridPosterior};
use kernel_misspec::quadrature::CompositeRule;
use kernel_misspec::seeds::cell_rng;
use kernel_misspec::spectral_analysis::{
    abel_bound_1d, dirichlet_l1, effective_dimension, lebesgue_estimate, population_apply,
    sqrt_deff_bound, summation_by_parts, DirichletGrowth,
};
use kernel_misspec::spectral_kernels::{
    adversarial_spectrum, matern_periodic_spectrum, EigenSequence, FourierBasis, MercerKernel,
    TailBound,
};
use nalgebra::{DMatrix, DVector};
use rand::Rng;

fn matern(nu: f64, count: usize) -> Arc<MercerKernel> {
    Arc::new(MercerKernel::new(
        matern_periodic_spectrum(nu, count, true).unwrap(),
    ))
}

fn random_points(seed: u64, n: usize) -> Vec<Vec<f64>> {
    let mut rng = cell_rng(seed, &[]);
    (0..n).map(|_| vec![rng.random_range(-1.0..1.0)]).collect()
}

#[test]
fn krr_prediction_matches_dense_inverse() {
    let k = matern(1.5, 64);
    let xs = random_points(1, 5);
    let ys = vec![0.3, -1.2, 0.8, 0.05, 2.0];
    let data = Dataset::new(xs.clone(), ys.clone(), 0.1).unwrap();
    let model = KrrModel::fit(
        &data,
        k.clone(),
        RegularizationSpec::normalized(0.01).unwrap(),
    )
    .unwrap();
    let c = 5.0 * 0.01;
    let gram = DMatrix::from_fn(5, 5, |i, j| k.eval_unchecked(&xs[i], &xs[j]));
    let inv = (gram + DMatrix::identity(5, 5) * c).try_inverse().unwrap();
    let alpha = &inv * DVector::from_vec(ys);
    for x in [-0.9, -0.1, 0.0, 0.4, 0.99] {
        let kx = DVector::from_fn(5, |i, _| k.eval_unchecked(&xs[i], &[x]));
        let dense = kx.dot(&alpha);
        assert!((model.predict(&[x]).unwrap() - dense).abs() < 1e-9);
        let var = k.eval_unchecked(&[x], &[x]) - (kx.transpose() * &inv * &kx)[0];
        assert!((model.posterior_std(&[x]).unwrap() - var.max(0.0).sqrt()).abs() < 1e-9);
    }
}

#[test]
fn information_gain_matches_dense_log_det() {
    let k = matern(0.5, 128);
    let xs = random_points(2, 10);
    let data = Dataset::new(xs.clone(), vec![0.0; 10], 0.0).unwrap();
    let lambda = 0.3;
    let model = KrrModel::fit(&data, k.clone(), RegularizationSpec::raw(lambda).unwrap()).unwrap();
    let m = DMatrix::identity(10, 10)
        + DMatrix::from_fn(10, 10, |i, j| k.eval_unchecked(&xs[i], &xs[j])) / lambda;
    let lu = m.lu();
    let log_det: f64 = (0..10).map(|i| lu.u()[(i, i)].abs().ln()).sum();
    assert!((model.information_gain() - 0.5 * log_det).abs() < 1e-9);
}

#[test]
fn prediction_is_linear_in_labels() {
    let k = matern(1.5, 64);
    let xs = random_points(3, 12);
    let mut rng = cell_rng(3, &[1]);
    let y1: Vec<f64> = (0..12).map(|_| rng.random_range(-1.0..1.0)).collect();
    let y2: Vec<f64> = (0..12).map(|_| rng.random_range(-1.0..1.0)).collect();
    let sum: Vec<f64> = y1.iter().zip(&y2).map(|(a, b)| a + b).collect();
    let reg = RegularizationSpec::normalized(0.02).unwrap();
    let fit = |y: &Vec<f64>| {
        KrrModel::fit(
            &Dataset::new(xs.clone(), y.clone(), 0.0).unwrap(),
            k.clone(),
            reg,
        )
        .unwrap()
    };
    let (a, b, c) = (fit(&y1), fit(&y2), fit(&sum));
    for x in [-0.7, 0.1, 0.6] {
        let lhs = c.predict(&[x]).unwrap();
        let rhs = a.predict(&[x]).unwrap() + b.predict(&[x]).unwrap();
        assert!((lhs - rhs).abs() < 1e-12);
    }
}

#[test]
fn posterior_std_shrinks_when_a_point_is_added() {
    let k = matern(1.5, 64);
    let mut model = KrrModel::empty(k, RegularizationSpec::raw(0.5).unwrap()).unwrap();
    let probes = random_points(4, 20);
    for (i, x) in random_points(5, 15).into_iter().enumerate() {
        let before: Vec<f64> = probes
            .iter()
            .map(|p| model.posterior_std(p).unwrap())
            .collect();
        model.append(x, i as f64 * 0.1).unwrap();
        for (p, b) in probes.iter().zip(before) {
            assert!(model.posterior_std(p).unwrap() <= b + 1e-10);
        }
    }
}

#[test]
fn pointwise_bound_arithmetic() {
    let p = PointwiseBound {
        sigma: 0.2,
        n: 400,
        tau: 0.05,
        r: 1.0,
        delta: 0.1,
        norm_bound: 2.0,
        lambda_bound: 3.0,
        kappa: 1.0,
        eps: 0.1,
    };
    // 30-digit evaluation of the closed form.
    assert!((fundleb_rhs(&p).unwrap() - 0.986_440_432_676_224_4).abs() < 1e-14);
}

#[test]
fn effective_dimension_against_ten_million_terms() {
    let head: Vec<f64> = (1..=4096).map(|i| (i as f64).powi(-2)).collect();
    let tail = TailBound {
        exponent: 2.0,
        constant: 1.0,
        monotone: true,
    };
    let s = EigenSequence::new(head, Some(tail)).unwrap();
    let tau = 0.01;
    let d = effective_dimension(&s, tau).unwrap();
    let brute: f64 = (1..=10_000_000u64)
        .rev()
        .map(|i| {
            let m = (i as f64).powi(-2);
            m / (tau + m)
        })
        .sum();
    assert!(
        d.contains(brute),
        "{brute} not in [{}, {}]",
        d.lower,
        d.upper
    );
    let sq = sqrt_deff_bound(&s, 1e-4).unwrap();
    assert!((sq - effective_dimension(&s, 1e-4).unwrap().upper.sqrt()).abs() < 1e-12);
}

#[test]
fn dirichlet_three_by_adaptive_quadrature() {
    // (1/2)∫|1 + 2cos(πy)| dy to 30 digits.
    assert!((dirichlet_l1(3) - 1.435_991_124_176_917_4).abs() < 1e-12);
    let rule = CompositeRule::new(4096, 16).unwrap();
    let numeric = rule.integrate(|y| (1.0 + 2.0 * (std::f64::consts::PI * y).cos()).abs());
    assert!((dirichlet_l1(3) - numeric).abs() < 1e-5);
}

#[test]
fn dirichlet_growth_is_logarithmic() {
    let ratio =
        |j: usize| dirichlet_l1(2 * j + 1) / (std::f64::consts::E + (2 * j + 1) as f64).ln();
    let c = ratio(4);
    for j in 0..=256 {
        assert!(ratio(j) <= 1.5 * c, "j={j}");
    }
}

#[test]
fn summation_by_parts_telescopes() {
    let s = adversarial_spectrum(2.0, 3, 200).unwrap();
    let h: Vec<f64> = s.values().iter().map(|m| m / (1e-3 + m)).collect();
    for (x, y) in [(0.1, -0.4), (0.9, 0.9), (-1.0, 0.33)] {
        let (direct, parts) = summation_by_parts(&h, x, y);
        assert!((direct - parts).abs() < 1e-12 * direct.abs().max(1.0));
    }
}

#[test]
fn basis_is_orthonormal_under_quadrature() {
    let rule = CompositeRule::resolving(64);
    for i in 1..=33 {
        for j in 1..=33 {
            let g = rule.integrate(|x| FourierBasis::phi(i, x) * FourierBasis::phi(j, x));
            let e = if i == j { 1.0 } else { 0.0 };
            assert!((g - e).abs() < 1e-10, "({i},{j}): {g}");
        }
    }
}

#[test]
fn sandwich_at_one_tau() {
    let k = matern(1.5, 1024);
    let s = k.flat().unwrap();
    let tau = 1e-3;
    let est = lebesgue_estimate(&k, tau, None).unwrap();
    let abel = abel_bound_1d(s, tau, &DirichletGrowth).unwrap().value;
    let sq = sqrt_deff_bound(s, tau).unwrap() * 2f64.sqrt();
    assert!(est.value <= abel + est.tolerance);
    assert!(est.value <= sq + est.tolerance);
}

#[test]
fn operator_norm_on_a_clipped_bump() {
    let k = matern(1.5, 256);
    let tau = 1e-3;
    let f = |x: f64| (3.0 * (-x * x / 0.02).exp()).min(1.0);
    let pf = population_apply(&k, tau, f).unwrap();
    let est = lebesgue_estimate(&k, tau, None).unwrap();
    let sup = (0..2048)
        .map(|i| pf.eval(-1.0 + 2.0 * i as f64 / 2047.0).abs())
        .fold(0.0, f64::max);
    assert!(
        sup <= est.value + est.tolerance + 1e-9,
        "{sup} vs {}",
        est.value
    );
}

#[test]
fn uniform_sample_means_are_centered() {
    let k = matern(1.5, 16);
    let target = TargetFunction::new(&k, vec![], 0.0, 1).unwrap();
    let cfg = OfflineConfig {
        n: 10_000,
        tau: 0.1,
        delta: 0.1,
        noise: 0.0,
        seed: 9,
        target,
        competitor_size: 1,
    };
    let d = sample_dataset(&cfg).unwrap();
    let mean = d.inputs().iter().map(|x| x[0]).sum::<f64>() / 1e4;
    assert!(mean.abs() <= 3.0 / (3.0f64 * 1e4).sqrt());
}

#[test]
fn plugin_regret_vanishes_once_error_is_below_half_the_gap() {
    let k = matern(1.5, 64);
    let target = TargetFunction::random(&k, 3, 1.0, &mut cell_rng(4, &[0])).unwrap();
    let mut rng = cell_rng(4, &[1]);
    let f = |x: &[f64]| target.eval(x);
    let comp = CompetitorSet::random(16, 1, &mut rng, f).unwrap();
    let mut vals = comp.values().to_vec();
    vals.sort_by(f64::total_cmp);
    let gap = vals
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min);
    let cfg = OfflineConfig {
        n: 400,
        tau: 1e-6,
        delta: 0.1,
        noise: 0.0,
        seed: 4,
        target: target.clone(),
        competitor_size: 16,
    };
    let data = sample_dataset(&cfg).unwrap();
    let res = plugin_maximize(&data, k, cfg.tau, &comp).unwrap();
    let err = uniform_error(&res.model, &target, comp.points()).unwrap();
    assert!(err < gap / 2.0, "error {err} vs gap {gap}");
    assert_eq!(res.simple_regret, 0.0);
}

#[test]
fn grid_posterior_matches_dense_gp() {
    let k = matern(1.5, 33);
    let pts = cell_grid(1, &[1], 5);
    let samples: Vec<(Vec<f64>, f64)> =
        vec![(vec![0.25], 0.4), (vec![0.5], -0.2), (vec![0.25], 0.1)];
    let lambda = 0.7;
    let post = GridPosterior::fit(&k, pts.clone(), &samples, lambda).unwrap();
    let n = samples.len();
    let gram = DMatrix::from_fn(n, n, |i, j| k.eval_unchecked(&samples[i].0, &samples[j].0));
    let inv = (gram + DMatrix::identity(n, n) * lambda)
        .try_inverse()
        .unwrap();
    let y = DVector::from_iterator(n, samples.iter().map(|s| s.1));
    for (g, p) in pts.iter().enumerate() {
        let kx = DVector::from_fn(n, |i, _| k.eval_unchecked(&samples[i].0, p));
        assert!((post.mean(g) - (kx.transpose() * &inv * &y)[0]).abs() < 1e-10);
        let var = k.eval_unchecked(p, p) - (kx.transpose() * &inv * &kx)[0];
        assert!((post.variance(g) - var).abs() < 1e-10);
    }
    let region = kernel_misspec::online::Region {
        id: 0,
        depth: 1,
        lattice: vec![1],
        samples,
        posterior: post,
    };
    let kids = split(&region, 1.0, 1, &k, 5, lambda).unwrap();
    assert_eq!(
        kids.iter().map(|c| c.count()).sum::<usize>(),
        region.count()
    );
}
