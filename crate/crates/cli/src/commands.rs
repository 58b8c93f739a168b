use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context as _, Result};
use kinmob::dynamics::{
    integrate_observed, make_initial_condition, params_hash, CsvTrajectoryWriter, EquilibriumRecord,
    EquilibriumState, InitialConditionSpec,
};
use kinmob::export::write_histogram_csv;
use kinmob::indicators::{delta_of_reports, indicator_bundle, lorenz, write_bundles_csv, IndicatorBundle};
use kinmob::kaniadakis::{
    gini_vs_kappa_table, kappa_from_temperature, write_kappa_csv, GasParams, KappaFlag, QuadratureSettings, TableOptions,
};
use kinmob::model::ModelParams;
use kinmob::scalar::sup_norm;
use kinmob::sweep::{
    correlation_report, format_level_line_table, midpoint_rates, write_cells_csv, write_level_line_csv,
    CalibrationOptions, CalibrationTarget, Explorer, LevelLineOptions,
};
use serde::Serialize;

use crate::config::{config_error, CalibrationConfig, RunConfig};

pub struct RunContext {
    pub command: &'static str,
    pub out_dir: PathBuf,
    pub threads: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct CalibrationRecord {
    pub mu: f64,
    pub gini: f64,
    pub evaluations: usize,
    pub tau_min: f64,
    pub tau_max: f64,
    pub gamma: f64,
    pub target_gini: f64,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    threads: usize,
    params_hash: String,
    outputs: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    calibration: Option<&'a CalibrationRecord>,
    summary: toml::Table,
    config: &'a RunConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    config_b: Option<&'a RunConfig>,
}

/// Output files of one run; the manifest is written last.
struct Outputs<'a> {
    ctx: &'a RunContext,
    written: Vec<String>,
}

impl<'a> Outputs<'a> {
    fn new(ctx: &'a RunContext) -> Result<Self> {
        std::fs::create_dir_all(&ctx.out_dir)
            .with_context(|| format!("cannot create output directory {}", ctx.out_dir.display()))?;
        Ok(Self { ctx, written: Vec::new() })
    }

    fn create(&mut self, name: &str) -> Result<BufWriter<File>> {
        let path = self.ctx.out_dir.join(name);
        let f = File::create(&path).with_context(|| format!("cannot create {}", path.display()))?;
        self.written.push(name.to_string());
        Ok(BufWriter::new(f))
    }

    fn text(&mut self, name: &str, body: &str) -> Result<()> {
        let mut w = self.create(name)?;
        w.write_all(body.as_bytes())?;
        w.flush()?;
        Ok(())
    }

    fn finish(
        mut self,
        cfg: &RunConfig,
        cfg_b: Option<&RunConfig>,
        calibration: Option<&CalibrationRecord>,
        summary: toml::Table,
    ) -> Result<PathBuf> {
        let manifest = Manifest {
            tool: "kinmob",
            version: env!("CARGO_PKG_VERSION"),
            command: self.ctx.command,
            threads: self.ctx.threads,
            params_hash: params_hash(&cfg.model),
            outputs: std::mem::take(&mut self.written),
            calibration,
            summary,
            config: cfg,
            config_b: cfg_b,
        };
        let body = toml::to_string(&manifest).context("serializing manifest")?;
        let path = self.ctx.out_dir.join("manifest.toml");
        std::fs::write(&path, body).with_context(|| format!("cannot write {}", path.display()))?;
        Ok(path)
    }
}

fn explorer(cfg: &RunConfig) -> Explorer<f64> {
    Explorer::new(cfg.model.clone(), cfg.integration)
}

pub fn calibrate_mu(cfg: &RunConfig, cal: &CalibrationConfig) -> Result<CalibrationRecord> {
    let ex = explorer(cfg);
    ex.params(cal.tau_min, cal.tau_max, cal.gamma)?;
    if !(cal.mu_lo < cal.mu_hi) {
        return Err(config_error(format!("calibration needs mu_lo < mu_hi, got [{}, {}]", cal.mu_lo, cal.mu_hi)));
    }
    let target = CalibrationTarget {
        tau_min: cal.tau_min,
        tau_max: cal.tau_max,
        gamma: cal.gamma,
        target_gini: cal.target_gini,
    };
    let options = CalibrationOptions {
        mu_tol: cal.mu_tol,
        gini_tol: cal.gini_tol,
        ..CalibrationOptions::default()
    };
    let c = ex.calibrate_mu(&target, (cal.mu_lo, cal.mu_hi), &options)?;
    Ok(CalibrationRecord {
        mu: c.mu,
        gini: c.gini,
        evaluations: c.evaluations,
        tau_min: cal.tau_min,
        tau_max: cal.tau_max,
        gamma: cal.gamma,
        target_gini: cal.target_gini,
    })
}

/// Mean income for sweep-like commands: block value, else calibration, else the initial condition.
fn resolve_mu(cfg: &RunConfig, block_mu: Option<f64>) -> Result<(f64, Option<CalibrationRecord>)> {
    if let Some(mu) = block_mu {
        return Ok((mu, None));
    }
    if let Some(cal) = &cfg.calibration {
        let rec = calibrate_mu(cfg, cal)?;
        return Ok((rec.mu, Some(rec)));
    }
    match cfg.initial.target_mu() {
        Some(mu) => Ok((mu, None)),
        None => Err(config_error(
            "no mean income: set mu in the command block, add [calibration], or give initial.target_mu",
        )),
    }
}

fn with_target(spec: &InitialConditionSpec, mu: f64) -> Result<InitialConditionSpec> {
    Ok(match spec.clone() {
        InitialConditionSpec::Uniform {} => {
            return Err(config_error("a uniform initial state cannot take a calibrated mean income"))
        }
        InitialConditionSpec::LowMiddle { ratio: Some(_), .. } => {
            return Err(config_error("initial.ratio conflicts with calibration; remove one of them"))
        }
        InitialConditionSpec::LowMiddle { ratio: None, .. } => InitialConditionSpec::low_middle(mu),
        InitialConditionSpec::TwoPoint { a, b, .. } => InitialConditionSpec::two_point(a, b, mu),
        InitialConditionSpec::Explicit { x, .. } => InitialConditionSpec::Explicit { x, target_mu: Some(mu) },
    })
}

struct Solved {
    params: ModelParams<f64>,
    state: EquilibriumState<f64>,
    bundle: IndicatorBundle<f64>,
}

fn solve(cfg: &RunConfig, initial: &InitialConditionSpec, out: &mut Outputs, prefix: &str) -> Result<Solved> {
    let params = cfg.model.build::<f64>()?;
    cfg.integration.validate()?;
    let x0 = make_initial_condition(initial, params.grid())?;
    let state = if cfg.output.trajectory_stride > 0 {
        let file = out.create(&format!("{prefix}trajectory.csv"))?;
        let mut writer = CsvTrajectoryWriter::new(file, params.n(), cfg.output.trajectory_stride)?;
        let state = integrate_observed(&params, &x0, &cfg.integration, &mut writer)?;
        writer.finish()?.flush()?;
        state
    } else {
        integrate_observed(&params, &x0, &cfg.integration, &mut |_: f64, _: &[f64], _: f64, _: f64| {})?
    };
    let check = sup_norm(&params.stationarity_residual(&state.x_eq)?);
    if check > 10.0 * cfg.integration.convergence_tol {
        anyhow::bail!(kinmob::Error::InternalConsistency(format!(
            "stationarity residual {check:e} at the integrated equilibrium"
        )));
    }
    let bundle = indicator_bundle(&params, &state.x_eq)?;
    Ok(Solved { params, state, bundle })
}

fn write_solution(s: &Solved, out: &mut Outputs, prefix: &str) -> Result<()> {
    let record = EquilibriumRecord::new(&s.params, &s.state)?;
    out.text(&format!("{prefix}equilibrium.toml"), &record.to_toml())?;
    write_bundles_csv([(&s.params, &s.bundle)], out.create(&format!("{prefix}indicators.csv"))?)?;

    let mut w = csv::Writer::from_writer(out.create(&format!("{prefix}distribution.csv"))?);
    w.write_record(["class", "r_avg", "X"])?;
    for (i, (r, x)) in s.params.grid().averages().iter().zip(&s.state.x_eq).enumerate() {
        w.write_record([(i + 1).to_string(), r.to_string(), x.to_string()])?;
    }
    w.flush()?;

    let curve = lorenz(s.params.grid(), &s.state.x_eq)?;
    let mut w = csv::Writer::from_writer(out.create(&format!("{prefix}lorenz.csv"))?);
    w.write_record(["population_share", "income_share"])?;
    for (p, l) in curve.points() {
        w.write_record([p.to_string(), l.to_string()])?;
    }
    w.flush()?;

    let m = &s.bundle.mobility;
    let mut w = csv::Writer::from_writer(out.create(&format!("{prefix}mobility.csv"))?);
    w.write_record([
        "class",
        "ind_exchange",
        "ind_welfare",
        "ind_total",
        "class_exchange",
        "class_welfare",
        "class_total",
    ])?;
    for i in m.classes() {
        let (a, b) = (m.individual(i).expect("interior"), m.class(i).expect("interior"));
        w.write_record([
            i.to_string(),
            a.exchange.to_string(),
            a.welfare.to_string(),
            a.total().to_string(),
            b.exchange.to_string(),
            b.welfare.to_string(),
            b.total().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn bundle_summary(b: &IndicatorBundle<f64>, state: &EquilibriumState<f64>) -> toml::Table {
    let mut t = toml::Table::new();
    t.insert("mu".into(), b.mu.into());
    t.insert("gini".into(), b.gini.into());
    t.insert("mobility".into(), b.mobility.mobility().into());
    t.insert("tax_revenue".into(), b.tax_revenue.into());
    t.insert("residual".into(), state.residual.into());
    t.insert("elapsed_time".into(), state.elapsed_time.into());
    t
}

pub fn simulate(ctx: &RunContext, cfg: &RunConfig) -> Result<()> {
    cfg.model.build::<f64>()?;
    cfg.integration.validate()?;
    let calibration = cfg.calibration.as_ref().map(|c| calibrate_mu(cfg, c)).transpose()?;
    let initial = match &calibration {
        Some(c) => with_target(&cfg.initial, c.mu)?,
        None => cfg.initial.clone(),
    };
    let mut out = Outputs::new(ctx)?;
    let s = solve(cfg, &initial, &mut out, "")?;
    write_solution(&s, &mut out, "")?;
    let summary = bundle_summary(&s.bundle, &s.state);
    println!(
        "mu = {:.6}  G = {:.6}  M = {:.6e}  TR = {:.6e}",
        s.bundle.mu,
        s.bundle.gini,
        s.bundle.mobility.mobility(),
        s.bundle.tax_revenue
    );
    let path = out.finish(cfg, None, calibration.as_ref(), summary)?;
    println!("manifest: {}", path.display());
    Ok(())
}

pub fn compare(ctx: &RunContext, a: &RunConfig, b: &RunConfig) -> Result<()> {
    if a.model.n != b.model.n || a.model.c != b.model.c {
        return Err(config_error(format!(
            "configs use different grids: (n = {}, c = {}) vs (n = {}, c = {})",
            a.model.n, a.model.c, b.model.n, b.model.c
        )));
    }
    a.model.build::<f64>()?;
    b.model.build::<f64>()?;
    a.integration.validate()?;
    b.integration.validate()?;
    let calibration = a.calibration.as_ref().map(|c| calibrate_mu(a, c)).transpose()?;
    let (init_a, init_b) = match &calibration {
        Some(c) => (with_target(&a.initial, c.mu)?, with_target(&b.initial, c.mu)?),
        None => (a.initial.clone(), b.initial.clone()),
    };
    let mut out = Outputs::new(ctx)?;
    let sa = solve(a, &init_a, &mut out, "a_")?;
    let sb = solve(b, &init_b, &mut out, "b_")?;
    write_solution(&sa, &mut out, "a_")?;
    write_solution(&sb, &mut out, "b_")?;

    let delta = delta_of_reports(&sa.bundle.mobility, &sb.bundle.mobility);
    let classes: Vec<usize> = sa.bundle.mobility.classes().collect();
    write_histogram_csv(
        "delta_P_individual",
        classes.iter().zip(&delta.individual).map(|(i, d)| (*i, d.total())),
        out.create("delta_individual.csv")?,
    )?;
    write_histogram_csv(
        "delta_P_class",
        classes.iter().zip(&delta.class).map(|(i, d)| (*i, d.total())),
        out.create("delta_class.csv")?,
    )?;

    let (ga, gb) = (sa.bundle.gini, sb.bundle.gini);
    let (ma, mb) = (sa.bundle.mobility.mobility(), sb.bundle.mobility.mobility());
    let (ta, tb) = (sa.bundle.tax_revenue, sb.bundle.tax_revenue);
    let mut w = csv::Writer::from_writer(out.create("compare.csv")?);
    w.write_record(["quantity", "a", "b", "delta"])?;
    for (name, x, y) in [("G", ga, gb), ("M", ma, mb), ("TR", ta, tb), ("mu", sa.bundle.mu, sb.bundle.mu)] {
        w.write_record([name.to_string(), x.to_string(), y.to_string(), (y - x).to_string()])?;
    }
    w.flush()?;

    let mut summary = toml::Table::new();
    summary.insert("gini_a".into(), ga.into());
    summary.insert("gini_b".into(), gb.into());
    summary.insert("delta_gini".into(), (gb - ga).into());
    summary.insert("mobility_a".into(), ma.into());
    summary.insert("mobility_b".into(), mb.into());
    summary.insert("delta_mobility".into(), delta.delta_m.into());
    println!("G: {ga:.6} -> {gb:.6} (dG = {:+.3e})", gb - ga);
    println!("M: {ma:.6e} -> {mb:.6e} (dM = {:+.3e})", delta.delta_m);
    let path = out.finish(a, Some(b), calibration.as_ref(), summary)?;
    println!("manifest: {}", path.display());
    Ok(())
}

pub fn sweep(ctx: &RunContext, cfg: &RunConfig) -> Result<()> {
    let block = cfg.sweep.as_ref().ok_or_else(|| config_error("sweep needs a [sweep] block"))?;
    if block.gamma.is_empty() {
        return Err(config_error("sweep.gamma is empty"));
    }
    let ex = explorer(cfg);
    cfg.integration.validate()?;
    let pairs: Vec<(f64, f64, Option<f64>)> = match (block.delta_tau.is_empty(), block.rate_pairs.is_empty()) {
        (false, true) => block
            .delta_tau
            .iter()
            .map(|&d| {
                let (lo, hi) = midpoint_rates(d);
                (lo, hi, Some(d))
            })
            .collect(),
        (true, false) => block.rate_pairs.iter().map(|p| (p[0], p[1], None)).collect(),
        (true, true) => return Err(config_error("sweep needs a non-empty delta_tau or rate_pairs")),
        (false, false) => return Err(config_error("sweep takes delta_tau or rate_pairs, not both")),
    };
    for &(lo, hi, _) in &pairs {
        for &g in &block.gamma {
            ex.params(lo, hi, g)?;
        }
    }
    let (mu, calibration) = resolve_mu(cfg, block.mu)?;
    let cells = if block.rate_pairs.is_empty() {
        ex.sweep_grid(&block.delta_tau, &block.gamma, mu)?
    } else {
        let rp: Vec<(f64, f64)> = pairs.iter().map(|&(lo, hi, _)| (lo, hi)).collect();
        ex.sweep_rate_pairs(&rp, &block.gamma, mu)?
    };
    for c in cells.iter().filter(|c| !c.converged) {
        eprintln!(
            "warning: cell tau = {}-{}, gamma = {} failed: {}",
            c.tau_min,
            c.tau_max,
            c.gamma,
            c.failure.as_deref().unwrap_or("unknown")
        );
    }
    let mut out = Outputs::new(ctx)?;
    write_cells_csv(&cells, out.create("sweep.csv")?)?;

    let mut summary = toml::Table::new();
    summary.insert("mu".into(), mu.into());
    summary.insert("cells".into(), (cells.len() as i64).into());
    summary.insert("failed_cells".into(), (cells.iter().filter(|c| !c.converged).count() as i64).into());
    match correlation_report(&cells) {
        Ok(r) => {
            summary.insert("degenerate".into(), r.degenerate.into());
            if let Some(p) = r.pearson {
                summary.insert("pearson_gini_mobility".into(), p.into());
            }
            summary.insert("increments_opposite".into(), r.increments_opposite().into());
            println!(
                "{} cells, pearson(G, M) = {}, adjacent increments opposite: {}",
                cells.len(),
                r.pearson.map_or("undefined".to_string(), |p| format!("{p:.4}")),
                r.increments_opposite()
            );
        }
        Err(e) => {
            eprintln!("warning: no correlation report: {e}");
            println!("{} cells", cells.len());
        }
    }
    let path = out.finish(cfg, None, calibration.as_ref(), summary)?;
    println!("manifest: {}", path.display());
    Ok(())
}

fn default_label(i: usize) -> String {
    let letters = b"ABCDEFGHIJKLMNOPQRSTUVWXYZ";
    if i < letters.len() {
        (letters[i] as char).to_string()
    } else {
        format!("L{}", i + 1)
    }
}

pub fn levelline(ctx: &RunContext, cfg: &RunConfig) -> Result<()> {
    let block = cfg.levelline.as_ref().ok_or_else(|| config_error("levelline needs a [levelline] block"))?;
    if block.targets.is_empty() || block.delta_tau.is_empty() {
        return Err(config_error("levelline.targets and levelline.delta_tau must be non-empty"));
    }
    if !block.labels.is_empty() && block.labels.len() != block.targets.len() {
        return Err(config_error("levelline.labels must match levelline.targets in length"));
    }
    if !(block.gamma_lo < block.gamma_hi) {
        return Err(config_error("levelline needs gamma_lo < gamma_hi"));
    }
    if !(block.tol > 0.0 && block.gamma_tol > 0.0) {
        return Err(config_error("levelline tolerances must be positive"));
    }
    let ex = explorer(cfg);
    cfg.integration.validate()?;
    for &d in &block.delta_tau {
        let (lo, hi) = midpoint_rates(d);
        ex.params(lo, hi, block.gamma_lo)?;
        ex.params(lo, hi, block.gamma_hi)?;
    }
    let (mu, calibration) = resolve_mu(cfg, block.mu)?;
    let options = LevelLineOptions {
        gini_tol: block.tol,
        gamma_tol: block.gamma_tol,
        ..LevelLineOptions::default()
    };
    let mut out = Outputs::new(ctx)?;
    let mut tables = String::new();
    let mut summary = toml::Table::new();
    summary.insert("mu".into(), mu.into());
    for (i, &target) in block.targets.iter().enumerate() {
        let label = block.labels.get(i).cloned().unwrap_or_else(|| default_label(i));
        let line = ex.trace_level_line(target, &block.delta_tau, (block.gamma_lo, block.gamma_hi), mu, &options);
        for s in &line.skipped {
            eprintln!("warning: level line {label} skips delta_tau = {}: {}", s.delta_tau, s.reason);
        }
        write_level_line_csv(&line, out.create(&format!("levelline_{label}.csv"))?)?;
        tables.push_str(&format_level_line_table(&label, &line));
        tables.push('\n');
        if let Some(spread) = line.mobility_spread() {
            summary.insert(format!("mobility_spread_{label}"), spread.into());
        }
        summary.insert(format!("points_{label}"), (line.points.len() as i64).into());
    }
    out.text("levelline_tables.txt", &tables)?;
    print!("{tables}");
    let path = out.finish(cfg, None, calibration.as_ref(), summary)?;
    println!("manifest: {}", path.display());
    Ok(())
}

pub fn calibrate(ctx: &RunContext, cfg: &RunConfig) -> Result<()> {
    let default = CalibrationConfig::default();
    let cal = cfg.calibration.as_ref().unwrap_or(&default);
    cfg.integration.validate()?;
    let rec = calibrate_mu(cfg, cal)?;
    let mut out = Outputs::new(ctx)?;
    out.text("calibration.toml", &toml::to_string(&rec).context("serializing calibration")?)?;
    println!("mu* = {}  (G = {:.6}, {} evaluations)", rec.mu, rec.gini, rec.evaluations);
    let path = out.finish(cfg, None, Some(&rec), toml::Table::new())?;
    println!("manifest: {}", path.display());
    Ok(())
}

pub fn kappa(ctx: &RunContext, cfg: &RunConfig) -> Result<()> {
    let block = cfg.kappa.as_ref().ok_or_else(|| config_error("kappa needs a [kappa] block"))?;
    if block.alpha.is_empty() || block.kappa.is_empty() {
        return Err(config_error("kappa.alpha and kappa.kappa must be non-empty"));
    }
    if !(block.abs_tol > 0.0) || block.max_intervals == 0 || !(block.boundary_margin >= 0.0) {
        return Err(config_error("kappa quadrature settings must be positive"));
    }
    let gas: Vec<(f64, f64)> = block
        .rest_energy_ratio
        .iter()
        .map(|&r| Ok((r, kappa_from_temperature(&GasParams { rest_energy_ratio: r })?)))
        .collect::<Result<_>>()?;
    let options = TableOptions {
        quadrature: QuadratureSettings {
            abs_tol: block.abs_tol,
            max_intervals: block.max_intervals,
        },
        boundary_margin: block.boundary_margin,
    };
    let rows = gini_vs_kappa_table(&block.alpha, &block.kappa, &options)?;
    let mut out = Outputs::new(ctx)?;
    write_kappa_csv(&rows, out.create("kappa_gini.csv")?)?;
    if !gas.is_empty() {
        let mut w = csv::Writer::from_writer(out.create("kappa_temperature.csv")?);
        w.write_record(["rest_energy_ratio", "kappa"])?;
        for (r, k) in &gas {
            w.write_record([r.to_string(), k.to_string()])?;
        }
        w.flush()?;
    }
    for r in &rows {
        if let KappaFlag::Quadrature(msg) = &r.flag {
            eprintln!("warning: alpha = {}, kappa = {}: {msg}", r.alpha, r.kappa);
        }
    }
    let computed = rows.iter().filter(|r| r.gini.is_some()).count();
    let mut summary = toml::Table::new();
    summary.insert("points".into(), (rows.len() as i64).into());
    summary.insert("computed".into(), (computed as i64).into());
    println!("{computed} of {} points computed", rows.len());
    let path = out.finish(cfg, None, None, summary)?;
    println!("manifest: {}", path.display());
    Ok(())
}

pub fn out_dir(cli: Option<&Path>, cfg: &RunConfig) -> PathBuf {
    cli.map(Path::to_path_buf)
        .or_else(|| cfg.output.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"))
}
