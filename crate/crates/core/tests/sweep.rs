use kinmob::dynamics::IntegrationSettings;
use kinmob::model::ModelConfig;
use kinmob::sweep::{CalibrationOptions, CalibrationTarget, Explorer, LevelLineOptions};
use kinmob::Error;

const MU: f64 = 143.5;

fn explorer() -> Explorer<f64> {
    Explorer::new(ModelConfig::default(), IntegrationSettings::default())
}

fn in_pool<R: Send>(threads: usize, f: impl FnOnce() -> R + Send) -> R {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(f)
}

#[test]
fn grid_independent_of_thread_count() {
    let ex = explorer();
    let d = [0.1, 0.25, 0.35];
    let g = [0.2, 0.4];
    let serial = in_pool(1, || ex.sweep_grid(&d, &g, MU).unwrap());
    let parallel = in_pool(4, || ex.sweep_grid(&d, &g, MU).unwrap());
    assert_eq!(serial, parallel);
    assert!(serial.iter().all(|c| c.converged));
    // order of the request does not change the cell values
    let reversed = ex.sweep_grid(&[0.35, 0.25, 0.1], &[0.4, 0.2], MU).unwrap();
    for c in &serial {
        let twin = reversed.iter().find(|r| r.delta_tau == c.delta_tau && r.gamma == c.gamma).unwrap();
        assert_eq!(twin, c);
    }
}

#[test]
fn gini_nonincreasing_in_rate_gap() {
    let ex = explorer();
    let d: Vec<f64> = (0..5).map(|i| 0.10 + 0.0625 * i as f64).collect();
    let g: Vec<f64> = (0..5).map(|i| 0.15 + 0.0625 * i as f64).collect();
    let cells = ex.sweep_grid(&d, &g, MU).unwrap();
    for (j, _) in g.iter().enumerate() {
        let column: Vec<f64> = (0..d.len()).map(|i| cells[i * g.len() + j].gini).collect();
        assert!(column.windows(2).all(|w| w[1] <= w[0]), "{column:?}");
    }
}

#[test]
fn level_line_points_hit_target() {
    let ex = explorer();
    let opts = LevelLineOptions::default();
    let line = ex.trace_level_line(0.34, &[0.35, 0.15, 0.25], (0.05, 0.5), MU, &opts);
    assert!(line.skipped.is_empty(), "{:?}", line.skipped);
    assert_eq!(line.points.len(), 3);
    assert!(line.points.windows(2).all(|w| w[0].delta_tau < w[1].delta_tau));
    for p in &line.points {
        assert!((p.gini - 0.34).abs() <= opts.gini_tol);
    }
}

#[test]
fn unreachable_level_is_skipped() {
    let line = explorer().trace_level_line(0.9, &[0.15], (0.05, 0.5), MU, &LevelLineOptions::default());
    assert!(line.points.is_empty());
    assert_eq!(line.skipped.len(), 1);
}

#[test]
fn calibration_reports_bracket_failure() {
    let target = CalibrationTarget { tau_min: 0.3, tau_max: 0.45, gamma: 0.5, target_gini: 0.9 };
    let err = explorer().calibrate_mu(&target, (100.0, 187.5), &CalibrationOptions::default()).unwrap_err();
    match err {
        Error::CalibrationFailure { g_lo, g_hi, .. } => assert!(g_lo < 0.9 && g_hi < 0.9),
        e => panic!("unexpected {e:?}"),
    }
}

#[test]
fn calibration_hits_target_in_narrow_bracket() {
    let target = CalibrationTarget { tau_min: 0.3, tau_max: 0.45, gamma: 0.5, target_gini: 0.368 };
    let c = explorer().calibrate_mu(&target, (140.0, 147.0), &CalibrationOptions::default()).unwrap();
    assert!((c.gini - 0.368).abs() <= 1e-4);
    assert!(c.mu > 140.0 && c.mu < 147.0);
}
