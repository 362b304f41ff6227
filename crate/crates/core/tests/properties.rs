use std::sync::Arc;

use kernel_misspec::krr::{Dataset, KrrModel, RegularizationSpec, TargetFunction, Term};
use kernel_misspec::online::{
    census_check, new_region, run_global_eps_ucb, run_pi_misspec_gpucb, split, BanditEnvironment,
    OnlineParams,
};
use kernel_misspec::seeds::derive_seed;
use kernel_misspec::spectral_analysis::{effective_dimension, ratio_sequence, summation_by_parts};
use kernel_misspec::spectral_kernels::{
    matern_periodic_spectrum, monotone_envelope, product_kernel, EigenSequence, MercerKernel,
};
use kernel_misspec::trig::TrigSeries;
use proptest::prelude::*;

fn point(m: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..=1.0, m)
}

fn spectrum() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..2.0, 1..80)
}

proptest! {
    #[test]
    fn gram_is_positive_semidefinite(
        pts in prop::collection::vec(point(2), 1..20),
        nu in prop::sample::select(vec![0.5, 1.5, 2.5]),
    ) {
        let k = product_kernel(&matern_periodic_spectrum(nu, 17, true).unwrap(), 2).unwrap();
        let g = k.gram(&pts).unwrap();
        let sym = (&g - g.transpose()).abs().max();
        prop_assert!(sym < 1e-12);
        let eig = g.symmetric_eigen().eigenvalues;
        let trace: f64 = eig.iter().sum();
        prop_assert!(eig.min() >= -1e-10 * trace.max(1.0));
    }

    #[test]
    fn envelope_is_monotone_dominating_and_idempotent(v in spectrum()) {
        let s = EigenSequence::finite(v).unwrap();
        let e = monotone_envelope(&s);
        prop_assert!(e.values().windows(2).all(|w| w[1] <= w[0]));
        prop_assert!(e.values().iter().zip(s.values()).all(|(a, b)| a >= b));
        prop_assert_eq!(monotone_envelope(&e), e);
    }

    #[test]
    fn effective_dimension_ignores_order(v in spectrum(), tau in 1e-4f64..1.0, seed in any::<u64>()) {
        let mut w = v.clone();
        let n = w.len();
        for i in (1..n).rev() {
            w.swap(i, (derive_seed(seed, &[i as u64]) % (i as u64 + 1)) as usize);
        }
        let a = effective_dimension(&EigenSequence::finite(v).unwrap(), tau).unwrap();
        let b = effective_dimension(&EigenSequence::finite(w).unwrap(), tau).unwrap();
        prop_assert!((a.lower - b.lower).abs() <= 1e-12 * a.lower.max(1.0));
    }

    #[test]
    fn effective_dimension_decreases_in_tau(v in spectrum(), t1 in 1e-4f64..1.0, f in 1.0f64..100.0) {
        let s = EigenSequence::finite(v).unwrap();
        let a = effective_dimension(&s, t1).unwrap().lower;
        let b = effective_dimension(&s, t1 * f).unwrap().lower;
        prop_assert!(b <= a + 1e-12);
    }

    #[test]
    fn shrinkage_ratios_lie_in_unit_interval(v in spectrum(), tau in 1e-6f64..10.0) {
        let h = ratio_sequence(&EigenSequence::finite(v).unwrap(), tau).unwrap().values;
        prop_assert!(h.iter().all(|&x| (0.0..1.0).contains(&x)));
    }

    #[test]
    fn summation_by_parts_is_an_identity(h in prop::collection::vec(0.0f64..1.0, 1..120), x in -1.0f64..1.0, y in -1.0f64..1.0) {
        let (a, b) = summation_by_parts(&h, x, y);
        prop_assert!((a - b).abs() <= 1e-10 * (1.0 + a.abs()));
    }

    #[test]
    fn l1_norm_dominates_the_mean(coeffs in prop::collection::vec(-1.0f64..1.0, 1..40)) {
        let s = TrigSeries::from_basis_coefficients(&coeffs);
        let l1 = s.l1_norm(4);
        prop_assert!(l1.value + l1.tolerance >= s.constant().abs() - 1e-12);
        prop_assert!(l1.value <= s.coefficient_l1() + 1e-9);
    }

    #[test]
    fn spectrum_csv_round_trips(v in spectrum()) {
        let s = EigenSequence::finite(v).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let back = EigenSequence::read_csv(&buf[..], "mem").unwrap();
        prop_assert_eq!(back, s);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn both_ridge_conventions_agree(
        pts in prop::collection::vec(point(1), 1..25),
        tau in 1e-4f64..1.0,
        probe in point(1),
    ) {
        let k = Arc::new(MercerKernel::new(matern_periodic_spectrum(1.5, 32, true).unwrap()));
        let ys: Vec<f64> = pts.iter().map(|p| (3.0 * p[0]).sin()).collect();
        let n = pts.len();
        let data = Dataset::new(pts, ys, 0.0).unwrap();
        let a = KrrModel::fit(&data, k.clone(), RegularizationSpec::normalized(tau).unwrap()).unwrap();
        let b = KrrModel::fit(&data, k, RegularizationSpec::raw(n as f64 * tau).unwrap()).unwrap();
        prop_assert!((a.predict(&probe).unwrap() - b.predict(&probe).unwrap()).abs() < 1e-9);
        prop_assert!((a.posterior_std(&probe).unwrap() - b.posterior_std(&probe).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn posterior_std_is_monotone_under_appends(
        pts in prop::collection::vec(point(1), 1..20),
        probe in point(1),
    ) {
        let k = Arc::new(MercerKernel::new(matern_periodic_spectrum(0.5, 64, true).unwrap()));
        let mut m = KrrModel::empty(k, RegularizationSpec::raw(0.2).unwrap()).unwrap();
        let mut last = m.posterior_std(&probe).unwrap();
        for p in pts {
            m.append(p, 0.0).unwrap();
            let s = m.posterior_std(&probe).unwrap();
            prop_assert!(s <= last + 1e-10);
            last = s;
        }
    }

    #[test]
    fn append_equals_batch_fit(pts in prop::collection::vec(point(1), 1..20)) {
        let k = Arc::new(MercerKernel::new(matern_periodic_spectrum(1.5, 32, true).unwrap()));
        let ys: Vec<f64> = pts.iter().map(|p| p[0] * p[0]).collect();
        let reg = RegularizationSpec::raw(0.1).unwrap();
        let mut inc = KrrModel::empty(k.clone(), reg).unwrap();
        for (p, y) in pts.iter().zip(&ys) {
            inc.append(p.clone(), *y).unwrap();
        }
        let batch = KrrModel::fit(&Dataset::new(pts, ys, 0.0).unwrap(), k, reg).unwrap();
        prop_assert!((inc.information_gain() - batch.information_gain()).abs() < 1e-9);
        let diff = (inc.factor() - batch.factor()).abs().max();
        prop_assert!(diff < 1e-9);
    }

    #[test]
    fn children_tile_their_parent(
        samples in prop::collection::vec(point(2), 1..40),
    ) {
        let k = Arc::new(product_kernel(&matern_periodic_spectrum(1.5, 9, true).unwrap(), 2).unwrap());
        let labelled: Vec<(Vec<f64>, f64)> = samples.into_iter().map(|x| (x, 0.0)).collect();
        let root = new_region(0, 0, vec![0, 0], labelled, &k, 3, 1.0).unwrap();
        let kids = split(&root, 1.0, 1, &k, 3, 1.0).unwrap();
        prop_assert_eq!(kids.iter().map(|c| c.count()).sum::<usize>(), root.count());
        for c in &kids {
            prop_assert!(c.samples.iter().all(|s| c.contains(&s.0)));
            prop_assert_eq!(c.rho(), 0.5);
        }
        let area: f64 = kids.iter().map(|c| (c.upper(0) - c.lower(0)) * (c.upper(1) - c.lower(1))).sum();
        prop_assert_eq!(area, 4.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn online_runs_respect_census_and_regret_invariants(
        horizon in 1usize..400,
        b in 1.0f64..3.0,
        seed in any::<u64>(),
        c1 in -0.5f64..0.5,
        c2 in -0.5f64..0.5,
    ) {
        let k = Arc::new(MercerKernel::new(matern_periodic_spectrum(1.5, 33, true).unwrap()));
        let target = TargetFunction::new(
            &k,
            vec![Term { index: vec![2], coeff: c1 }, Term { index: vec![5], coeff: c2 }],
            0.05,
            9,
        ).unwrap();
        let mut p = OnlineParams::new(horizon, b, target.rkhs_norm(), 0.05, 0.1);
        p.baseline_points = 33;
        let env = BanditEnvironment::new(k, target, &p, seed).unwrap();
        let log = run_pi_misspec_gpucb(&env, &p).unwrap();
        prop_assert!(census_check(&log, p.b));
        prop_assert!(log.rounds.iter().all(|r| r.inst_regret >= -1e-12));
        let mut cum = 0.0;
        for r in &log.rounds {
            cum += r.inst_regret;
            prop_assert!((cum - r.cum_regret).abs() < 1e-9);
        }
        let again = run_pi_misspec_gpucb(&env, &p).unwrap();
        prop_assert_eq!(&again, &log);
        let base = run_global_eps_ucb(&env, &p).unwrap();
        prop_assert_eq!(base.census.len(), 1);
        prop_assert!(base.rounds.iter().all(|r| r.inst_regret >= -1e-12));
    }
}
