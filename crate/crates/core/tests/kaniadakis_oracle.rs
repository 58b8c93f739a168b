mod common;

use kinmob::kaniadakis::{gini_vs_kappa_table, kgen_gini, kgen_survival, KappaParams, QuadratureSettings, TableOptions};

pub const SPOT_POINTS: [(f64, f64); 5] = [(2.0, 0.0), (1.0, 0.3), (2.0, 0.5), (3.0, 0.7), (4.0, 0.9)];

#[test]
fn oracle_reproduces_weibull_closed_form() {
    for a in [1.0, 2.0, 4.0] {
        let g = common::mean_difference_gini(a, 0.0);
        assert!((g - (1.0 - 2f64.powf(-1.0 / a))).abs() < 1e-9, "alpha {a}: {g}");
    }
}

#[test]
fn quadrature_agrees_with_mean_difference() {
    for (a, k) in SPOT_POINTS {
        let oracle = common::mean_difference_gini(a, k);
        let g = kgen_gini(a, k, &QuadratureSettings::default()).unwrap().gini;
        assert!((g - oracle).abs() <= 1e-5, "({a}, {k}): {g} vs {oracle}");
    }
}

#[test]
fn halving_tolerance_is_stable() {
    let base = QuadratureSettings::<f64>::default();
    let half = QuadratureSettings { abs_tol: base.abs_tol / 2.0, ..base };
    for (a, k) in SPOT_POINTS {
        let g1 = kgen_gini(a, k, &base).unwrap().gini;
        let g2 = kgen_gini(a, k, &half).unwrap().gini;
        assert!((g1 - g2).abs() < 1e-5);
    }
}

#[test]
fn gini_increases_with_kappa() {
    let kappas: Vec<f64> = (0..=18).map(|i| i as f64 * 0.05).collect();
    let rows = gini_vs_kappa_table(&[1.0, 2.0, 3.0, 4.0], &kappas, &TableOptions::default()).unwrap();
    for col in rows.chunks(kappas.len()) {
        let g: Vec<f64> = col.iter().map(|r| r.gini.unwrap()).collect();
        assert!(g.windows(2).all(|w| w[1] > w[0]), "alpha {}: {g:?}", col[0].alpha);
    }
}

#[test]
fn survival_depends_on_x_over_beta() {
    for beta in [1.0f64, 10.0] {
        let p = KappaParams::new(2.0, 0.4, beta).unwrap();
        for x in [0.3f64, 1.0, 2.5] {
            let unit = KappaParams::new(2.0, 0.4, 1.0).unwrap();
            assert!((kgen_survival(x * beta, &p) - kgen_survival(x, &unit)).abs() < 1e-15);
        }
    }
}

#[test]
fn gini_is_scale_free() {
    let s = QuadratureSettings::default();
    for (a, k) in SPOT_POINTS {
        let g1 = KappaParams::new(a, k, 1.0).unwrap().gini(&s).unwrap().gini;
        let g10 = KappaParams::new(a, k, 10.0).unwrap().gini(&s).unwrap().gini;
        assert!((g1 - g10).abs() < 1e-12, "({a}, {k}): {g1} vs {g10}");
        assert_eq!(g1, kgen_gini(a, k, &s).unwrap().gini);
    }
}
