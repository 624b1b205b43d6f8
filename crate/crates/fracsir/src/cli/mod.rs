//! Workflow orchestration behind the command-line interface: simulate,
//! equilibria, verify and sweep, with deterministic CSV emission.
//!
//! Runners return structured summaries; the binary renders them and maps
//! errors to exit codes (0 ok, 2 config, 3 numerical, 4 invariant
//! violation, 1 I/O).

mod config;

pub use config::{parse_config, ConfigError, IcSpec, IncidenceSpec, RunConfig, PRESETS};

use crate::analysis::{self, DecayTarget};
use crate::epidemics::{
    disease_free_equilibrium, endemic_equilibrium, reproduction_number, EpidemicsError,
    EquilibriumPoint,
};
use crate::solver::{
    simulate_with, Field, HistoryBuffer, SimulateOptions, Simulation, SolverError,
};
use rayon::prelude::*;
use std::fmt;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

/// Top-level CLI error; `exit_code` defines the process status.
#[derive(Debug)]
pub enum CliError {
    Config(ConfigError),
    Numerical(SolverError),
    Equilibria(EpidemicsError),
    Io(std::io::Error),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Config(e) => write!(f, "{e}"),
            Self::Numerical(e) => write!(f, "numerical failure: {e}"),
            Self::Equilibria(e) => write!(f, "numerical failure: {e}"),
            Self::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Numerical(_) | Self::Equilibria(_) => 3,
            Self::Io(_) => 1,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        Self::Config(e)
    }
}

impl From<SolverError> for CliError {
    fn from(e: SolverError) -> Self {
        Self::Numerical(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Io(e)
    }
}

fn write_config_echo(cfg: &RunConfig, out_dir: &Path) -> Result<PathBuf, CliError> {
    fs::create_dir_all(out_dir)?;
    let path = out_dir.join("config.txt");
    fs::write(&path, cfg.to_document())?;
    Ok(path)
}

fn run_simulation(cfg: &RunConfig) -> Result<Simulation<f64>, CliError> {
    let p = cfg.params();
    let f = cfg.incidence_model();
    let sim = simulate_with(
        &p,
        f.as_ref(),
        &cfg.grid(),
        &cfg.initial_condition(),
        cfg.order(),
        &SimulateOptions {
            window: cfg.window,
            tol: cfg.tol,
        },
    )?;
    Ok(sim)
}

struct FinalDistances {
    r0: f64,
    dist_e0: f64,
    endemic: Option<(EquilibriumPoint<f64>, f64)>,
}

fn final_distances(cfg: &RunConfig, hist: &HistoryBuffer<f64>) -> Result<FinalDistances, CliError> {
    let p = cfg.params();
    let f = cfg.incidence_model();
    let r0 = reproduction_number(&p, f.as_ref());
    let e0 = disease_free_equilibrium(&p);
    let dist_e0 = hist.last().sup_distance_to(&e0);
    let endemic = if r0 > 1.0 {
        let estar =
            endemic_equilibrium(&p, f.as_ref(), cfg.root_tol).map_err(CliError::Equilibria)?;
        let d = hist.last().sup_distance_to(&estar);
        Some((estar, d))
    } else {
        None
    };
    Ok(FinalDistances {
        r0,
        dist_e0,
        endemic,
    })
}

/// Outcome of `simulate`.
#[derive(Debug)]
pub struct SimulateSummary {
    pub r0: f64,
    pub steps_run: usize,
    pub converged_at: Option<usize>,
    pub dist_e0: f64,
    pub dist_estar: Option<f64>,
    pub trajectory_path: PathBuf,
}

/// Run a simulation and write `trajectory.csv` (`k,t,n,x,S,I,R`, one row
/// per step and node, full round-trip float precision) plus a config echo.
pub fn run_simulate(cfg: &RunConfig, out_dir: &Path) -> Result<SimulateSummary, CliError> {
    cfg.validate()?;
    write_config_echo(cfg, out_dir)?;
    let sim = run_simulation(cfg)?;
    let hist = &sim.history;

    let path = out_dir.join("trajectory.csv");
    let mut w = BufWriter::new(fs::File::create(&path)?);
    writeln!(w, "k,t,n,x,S,I,R")?;
    let grid = cfg.grid();
    for k in 0..hist.len() {
        let state = hist.level(k);
        let t = k as f64 * cfg.dt;
        for n in 0..state.nodes() {
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                k,
                t,
                n,
                grid.node(n),
                state.s[n],
                state.i[n],
                state.r[n]
            )?;
        }
    }
    w.flush()?;

    let dists = final_distances(cfg, hist)?;
    Ok(SimulateSummary {
        r0: dists.r0,
        steps_run: hist.len() - 1,
        converged_at: sim.convergence.map(|c| c.step),
        dist_e0: dists.dist_e0,
        dist_estar: dists.endemic.map(|(_, d)| d),
        trajectory_path: path,
    })
}

/// Outcome of `equilibria`.
#[derive(Debug)]
pub struct EquilibriaReport {
    pub r0: f64,
    pub e0: EquilibriumPoint<f64>,
    pub e0_residual: (f64, f64, f64),
    pub endemic: Option<(EquilibriumPoint<f64>, (f64, f64, f64))>,
}

/// Compute `R_0`, the disease-free point and (when `R_0 > 1`) the endemic
/// point with their steady-state residuals.
pub fn run_equilibria(cfg: &RunConfig) -> Result<EquilibriaReport, CliError> {
    cfg.validate()?;
    let p = cfg.params();
    let f = cfg.incidence_model();
    let r0 = reproduction_number(&p, f.as_ref());
    let e0 = disease_free_equilibrium(&p);
    let endemic = if r0 > 1.0 {
        let estar =
            endemic_equilibrium(&p, f.as_ref(), cfg.root_tol).map_err(CliError::Equilibria)?;
        Some((estar, estar.residual(&p, f.as_ref())))
    } else {
        None
    };
    Ok(EquilibriaReport {
        r0,
        e0,
        e0_residual: e0.residual(&p, f.as_ref()),
        endemic,
    })
}

/// One verified invariant.
#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    /// Step index of the first violation, when one exists.
    pub step: Option<usize>,
    pub detail: String,
}

/// Outcome of `verify`.
#[derive(Debug)]
pub struct VerifyReport {
    pub r0: f64,
    pub checks: Vec<CheckOutcome>,
    pub diagnostics_path: PathBuf,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn first_failure(&self) -> Option<&CheckOutcome> {
        self.checks.iter().find(|c| !c.passed)
    }
}

/// Run the simulation, then check positivity, the mass bound, Lyapunov
/// decay toward the applicable equilibrium and the Volterra-type
/// inequality on node series; emit `k,G,bound,W,deltaW,dist` diagnostics.
pub fn run_verify(cfg: &RunConfig, out_dir: &Path) -> Result<VerifyReport, CliError> {
    cfg.validate()?;
    write_config_echo(cfg, out_dir)?;
    let sim = run_simulation(cfg)?;
    verify_history(cfg, &sim.history, out_dir)
}

/// Run the verification checks over an existing trajectory (the
/// configuration supplies the model parameters and tolerances).
pub fn verify_history(
    cfg: &RunConfig,
    hist: &HistoryBuffer<f64>,
    out_dir: &Path,
) -> Result<VerifyReport, CliError> {
    fs::create_dir_all(out_dir)?;
    let p = cfg.params();
    let f = cfg.incidence_model();
    let r0 = reproduction_number(&p, f.as_ref());
    let steps = hist.len() - 1;
    let mut checks = Vec::new();

    // Positivity: exact, no tolerance.
    let mut neg_step = None;
    for k in 0..hist.len() {
        if hist.level(k).min_entry() < 0.0 {
            neg_step = Some(k);
            break;
        }
    }
    checks.push(match neg_step {
        None => CheckOutcome {
            name: "positivity",
            passed: true,
            step: None,
            detail: format!("all entries nonnegative over {steps} steps"),
        },
        Some(k) => CheckOutcome {
            name: "positivity",
            passed: false,
            step: Some(k),
            detail: format!("negative entry at step {k}"),
        },
    });

    // Mass bound after the transient.
    let mass = analysis::mass_series(hist, &p);
    let transient = 50.max(steps / 10).min(steps);
    let cap = 1.01 * mass.bound;
    let mass_violation = (transient..=steps).find(|&k| mass.series[k] > cap);
    checks.push(match mass_violation {
        None => CheckOutcome {
            name: "mass-bound",
            passed: true,
            step: None,
            detail: format!("G stays below 1.01 * bound = {cap} after step {transient}"),
        },
        Some(k) => CheckOutcome {
            name: "mass-bound",
            passed: false,
            step: Some(k),
            detail: format!("G^{k} = {} exceeds {cap}", mass.series[k]),
        },
    });

    // Lyapunov decay toward the equilibrium the threshold selects.
    let target = if r0 > 1.0 {
        endemic_equilibrium(&p, f.as_ref(), cfg.root_tol)
            .map(DecayTarget::Endemic)
            .map_err(CliError::Equilibria)?
    } else {
        DecayTarget::DiseaseFree
    };
    let decay = analysis::decay_report(hist, &p, f.as_ref(), &target, cfg.decay_slack);
    let records = match decay {
        Ok(report) => {
            let first = report.records.iter().find(|r| r.flagged).map(|r| r.level);
            checks.push(CheckOutcome {
                name: "lyapunov-decay",
                passed: report.decays(),
                step: first,
                detail: format!(
                    "max fractional difference {} (slack {})",
                    report.max_delta, report.slack
                ),
            });
            Some(report.records)
        }
        Err(e) => {
            // Degenerate trajectories (e.g. identically zero infection)
            // leave the Lyapunov function undefined; report and move on.
            checks.push(CheckOutcome {
                name: "lyapunov-decay",
                passed: true,
                step: None,
                detail: format!("not applicable: {e}"),
            });
            None
        }
    };

    // Volterra-type inequality on every node series that stays positive.
    let mut lemma_fail: Option<(usize, usize)> = None;
    let mut lemma_checked = 0_usize;
    'outer: for field in [Field::S, Field::I] {
        for n in 0..hist.level(0).nodes() {
            let series = hist.node_series(field, n);
            if series.len() < 2 || series.iter().any(|&v| v <= 0.0) {
                continue;
            }
            lemma_checked += 1;
            let report = analysis::check_lemma22(&series, hist.alpha(), cfg.dt, cfg.decay_slack)
                .expect("positive series");
            if let Some((idx, _)) = report.first_violation {
                lemma_fail = Some((n, idx));
                break 'outer;
            }
        }
    }
    checks.push(match lemma_fail {
        None => CheckOutcome {
            name: "volterra-inequality",
            passed: true,
            step: None,
            detail: format!("holds on {lemma_checked} node series"),
        },
        Some((n, idx)) => CheckOutcome {
            name: "volterra-inequality",
            passed: false,
            step: Some(idx),
            detail: format!("violated at node {n}, index {idx}"),
        },
    });

    // Diagnostics CSV, one row per computed step.
    let path = out_dir.join("diagnostics.csv");
    let mut w = BufWriter::new(fs::File::create(&path)?);
    writeln!(w, "k,G,bound,W,deltaW,dist")?;
    match &records {
        Some(records) => {
            for rec in records {
                writeln!(
                    w,
                    "{},{},{},{},{},{}",
                    rec.level,
                    mass.series[rec.level],
                    mass.bound,
                    rec.lyapunov,
                    rec.delta,
                    rec.dist
                )?;
            }
        }
        None => {
            let e0 = disease_free_equilibrium(&p);
            for k in 1..=steps {
                writeln!(
                    w,
                    "{},{},{},NaN,NaN,{}",
                    k,
                    mass.series[k],
                    mass.bound,
                    hist.level(k).sup_distance_to(&e0)
                )?;
            }
        }
    }
    w.flush()?;

    Ok(VerifyReport {
        r0,
        checks,
        diagnostics_path: path,
    })
}

/// One sweep row.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub value: f64,
    pub r0: f64,
    pub final_dist_e0: f64,
    pub final_dist_estar: f64,
    pub status: String,
}

/// Outcome of `sweep`.
#[derive(Debug)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub csv_path: PathBuf,
}

/// Parameters a sweep may vary.
pub const SWEEP_AXES: [&str; 11] = [
    "lambda", "beta", "gamma", "delta", "mu", "r", "d1", "d2", "d3", "alpha", "dt",
];

fn set_axis(cfg: &mut RunConfig, axis: &str, value: f64) -> Result<(), ConfigError> {
    match axis {
        "lambda" => cfg.lambda = value,
        "beta" => cfg.beta = value,
        "gamma" => cfg.gamma = value,
        "delta" => cfg.delta = value,
        "mu" => cfg.mu = value,
        "r" => cfg.r = value,
        "d1" => cfg.d1 = value,
        "d2" => cfg.d2 = value,
        "d3" => cfg.d3 = value,
        "alpha" => cfg.alpha = value,
        "dt" => cfg.dt = value,
        other => {
            return Err(ConfigError::Validation {
                key: "axis".to_string(),
                reason: format!("unrecognized sweep axis `{other}`"),
            })
        }
    }
    Ok(())
}

fn sweep_one(cfg: &RunConfig, axis: &str, value: f64) -> SweepRow {
    let mut row = SweepRow {
        value,
        r0: f64::NAN,
        final_dist_e0: f64::NAN,
        final_dist_estar: f64::NAN,
        status: "ok".to_string(),
    };
    let mut local = cfg.clone();
    if let Err(e) = set_axis(&mut local, axis, value).and_then(|()| local.validate()) {
        row.status = sanitize_status(&e.to_string());
        return row;
    }
    match run_simulation(&local).and_then(|sim| final_distances(&local, &sim.history)) {
        Ok(dists) => {
            row.r0 = dists.r0;
            row.final_dist_e0 = dists.dist_e0;
            row.final_dist_estar = dists.endemic.map(|(_, d)| d).unwrap_or(f64::NAN);
        }
        Err(e) => row.status = sanitize_status(&e.to_string()),
    }
    row
}

fn sanitize_status(s: &str) -> String {
    s.replace(',', ";")
}

/// Run one simulation per axis value (concurrently; output order follows
/// input order) and write `value,R0,final_dist_E0,final_dist_Estar,status`.
pub fn run_sweep(
    cfg: &RunConfig,
    axis: &str,
    values: &[f64],
    out_dir: &Path,
) -> Result<SweepReport, CliError> {
    cfg.validate()?;
    if !SWEEP_AXES.contains(&axis) {
        return Err(CliError::Config(ConfigError::Validation {
            key: "axis".to_string(),
            reason: format!("unrecognized sweep axis `{axis}`"),
        }));
    }
    write_config_echo(cfg, out_dir)?;
    let rows: Vec<SweepRow> = values
        .par_iter()
        .map(|&v| sweep_one(cfg, axis, v))
        .collect();

    let path = out_dir.join("sweep.csv");
    let mut w = BufWriter::new(fs::File::create(&path)?);
    writeln!(w, "value,R0,final_dist_E0,final_dist_Estar,status")?;
    for row in &rows {
        writeln!(
            w,
            "{},{},{},{},{}",
            row.value, row.r0, row.final_dist_e0, row.final_dist_estar, row.status
        )?;
    }
    w.flush()?;

    Ok(SweepReport {
        rows,
        csv_path: path,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    fn quick_cfg() -> RunConfig {
        RunConfig {
            steps: 40,
            m: 10,
            window: 0,
            ..RunConfig::preset("paper-dfe").unwrap()
        }
    }

    #[test]
    fn simulate_writes_expected_row_count() {
        let dir = tempdir().unwrap();
        let cfg = RunConfig {
            steps: 1,
            m: 2,
            ..quick_cfg()
        };
        let summary = run_simulate(&cfg, dir.path()).unwrap();
        assert_eq!(summary.steps_run, 1);
        let text = fs::read_to_string(&summary.trajectory_path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "k,t,n,x,S,I,R");
        assert_eq!(lines.len(), 1 + 6, "two levels x three nodes");
    }

    #[test]
    fn simulate_is_deterministic() {
        let d1 = tempdir().unwrap();
        let d2 = tempdir().unwrap();
        let cfg = quick_cfg();
        run_simulate(&cfg, d1.path()).unwrap();
        run_simulate(&cfg, d2.path()).unwrap();
        let a = fs::read(d1.path().join("trajectory.csv")).unwrap();
        let b = fs::read(d2.path().join("trajectory.csv")).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn config_echo_round_trips() {
        let dir = tempdir().unwrap();
        let cfg = quick_cfg();
        run_simulate(&cfg, dir.path()).unwrap();
        let echoed = fs::read_to_string(dir.path().join("config.txt")).unwrap();
        assert_eq!(parse_config(&echoed).unwrap(), cfg);
    }

    #[test]
    fn equilibria_report_matches_known_values() {
        let report = run_equilibria(&RunConfig::preset("paper-ee").unwrap()).unwrap();
        assert!((report.r0 - 1.3816).abs() <= 1e-4);
        let (estar, res) = report.endemic.expect("supercritical");
        assert!((estar.s - 0.7238).abs() <= 5e-4);
        assert!((estar.i - 0.1227).abs() <= 5e-4);
        assert!((estar.r - 0.1534).abs() <= 5e-4);
        assert!(res.0.abs() <= 1e-9 && res.1.abs() <= 1e-9 && res.2.abs() <= 1e-9);

        let report = run_equilibria(&RunConfig::preset("paper-dfe").unwrap()).unwrap();
        assert!(report.endemic.is_none());
        assert_eq!((report.e0.s, report.e0.i, report.e0.r), (1.0, 0.0, 0.0));
    }

    #[test]
    fn verify_passes_on_short_preset_run() {
        let dir = tempdir().unwrap();
        let cfg = RunConfig {
            steps: 60,
            ..RunConfig::preset("paper-ee").unwrap()
        };
        let report = run_verify(&cfg, dir.path()).unwrap();
        assert!(report.all_passed(), "{:?}", report.first_failure());
        let text = fs::read_to_string(&report.diagnostics_path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "k,G,bound,W,deltaW,dist");
        assert_eq!(lines.count(), 60);
    }

    #[test]
    fn sweep_reproduces_both_reproduction_endpoints() {
        let dir = tempdir().unwrap();
        let cfg = RunConfig {
            steps: 80,
            ..quick_cfg()
        };
        let report = run_sweep(&cfg, "beta", &[0.2144, 0.6217], dir.path()).unwrap();
        assert_eq!(report.rows.len(), 2);
        assert!(report.rows.iter().all(|r| r.status == "ok"));
        assert!((report.rows[0].r0 - 0.4764).abs() <= 1e-4);
        assert!((report.rows[1].r0 - 1.3816).abs() <= 1e-4);
        assert!(report.rows[0].final_dist_estar.is_nan());
        assert!(report.rows[1].final_dist_estar.is_finite());
    }

    #[test]
    fn sweep_rows_match_standalone_runs() {
        let dir = tempdir().unwrap();
        let cfg = quick_cfg();
        let report = run_sweep(&cfg, "beta", &[0.3, 0.7], dir.path()).unwrap();
        for (i, &beta) in [0.3, 0.7].iter().enumerate() {
            let single = RunConfig {
                beta,
                ..cfg.clone()
            };
            let sim = run_simulation(&single).unwrap();
            let dists = final_distances(&single, &sim.history).unwrap();
            assert_eq!(report.rows[i].r0, dists.r0);
            assert_eq!(report.rows[i].final_dist_e0, dists.dist_e0);
        }
    }

    #[test]
    fn sweep_empty_values_yields_header_only() {
        let dir = tempdir().unwrap();
        let report = run_sweep(&quick_cfg(), "beta", &[], dir.path()).unwrap();
        assert!(report.rows.is_empty());
        let text = fs::read_to_string(&report.csv_path).unwrap();
        assert_eq!(text, "value,R0,final_dist_E0,final_dist_Estar,status\n");
    }

    #[test]
    fn sweep_records_per_row_failures() {
        let dir = tempdir().unwrap();
        let report = run_sweep(&quick_cfg(), "alpha", &[0.5, 7.0], dir.path()).unwrap();
        assert_eq!(report.rows[0].status, "ok");
        assert_ne!(report.rows[1].status, "ok");
        assert!(!report.rows[1].status.contains(','));
    }

    #[test]
    fn sweep_rejects_unknown_axis() {
        let dir = tempdir().unwrap();
        let err = run_sweep(&quick_cfg(), "sigma", &[1.0], dir.path()).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }
}
