//! The `simulate`, `compare` and `check-gains` commands.

use std::io::Write;
use std::path::{Path, PathBuf};

use safechain::{run_scenario, ControllerMode, RunError, Scenario, Trajectory};

use crate::config::{self, gain_template, Experiment, ExperimentConfig, ModeConfig, ShapeConfig};
use crate::error::CliError;
use crate::output::{metrics_toml, trajectory_csv, write_atomic};
use crate::svg::{self, Disc};

#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub controller: Option<ModeConfig>,
    pub dt: Option<f64>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

impl Overrides {
    fn apply(&self, cfg: &mut ExperimentConfig) {
        if let Some(m) = self.controller {
            cfg.controller.mode = m;
        }
        if let Some(dt) = self.dt {
            cfg.scenario.dt = dt;
        }
        if let Some(seed) = self.seed {
            cfg.scenario.seed = seed;
        }
        if let Some(out) = &self.out {
            cfg.output.dir = out.to_string_lossy().into_owned();
        }
    }
}

/// Loads, overrides and resolves a config; the gains in the returned
/// config are the ones actually used.
pub fn prepare(
    path: &Path,
    overrides: &Overrides,
) -> Result<(ExperimentConfig, Experiment), CliError> {
    let mut cfg = config::load(path)?;
    overrides.apply(&mut cfg);
    let mut cfg = cfg.resolve()?;
    let exp = cfg.build()?;
    cfg.gains.rho = Some(exp.scenario.schedule.gains().to_vec());
    Ok((cfg, exp))
}

fn obstacle(cfg: &ExperimentConfig) -> Option<Disc> {
    match &cfg.barrier.shape {
        ShapeConfig::Circle {
            center: Some(c),
            radius,
        } if c.len() >= 2 && cfg.system.axes >= 2 => Some(Disc {
            center: (c[0], c[1]),
            radius: *radius,
        }),
        _ => None,
    }
}

fn write_plots(dir: &Path, cfg: &ExperimentConfig, trajs: &[&Trajectory]) -> Result<(), CliError> {
    let goal = cfg.scenario.goal.clone().unwrap_or_default();
    write_atomic(
        &dir.join("xy.svg"),
        svg::xy_plot(trajs, obstacle(cfg), &goal)
            .render()
            .as_bytes(),
    )?;
    write_atomic(&dir.join("h1.svg"), svg::h1_plot(trajs).render().as_bytes())?;
    write_atomic(
        &dir.join("input.svg"),
        svg::input_plot(trajs).render().as_bytes(),
    )?;
    Ok(())
}

fn write_run(dir: &Path, prefix: &str, traj: &Trajectory) -> Result<(), CliError> {
    write_atomic(
        &dir.join(format!("{prefix}trajectory.csv")),
        trajectory_csv(traj).as_bytes(),
    )?;
    write_atomic(
        &dir.join(format!("{prefix}metrics.toml")),
        metrics_toml(traj.mode.as_str(), &traj.metrics, traj.degenerate_gradient).as_bytes(),
    )?;
    Ok(())
}

fn warn_degenerate(err: &mut dyn Write, traj: &Trajectory) -> std::io::Result<()> {
    if traj.degenerate_gradient {
        writeln!(
            err,
            "warning: {}: gradient of h1 nearly vanished inside the safe set",
            traj.mode.as_str()
        )?;
    }
    Ok(())
}

/// Runs one controller and writes the trajectory, metrics, plots and the
/// effective config to the output directory.
pub fn simulate(
    path: &Path,
    overrides: &Overrides,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<(), CliError> {
    let (cfg, exp) = prepare(path, overrides)?;
    let dir = PathBuf::from(&cfg.output.dir);
    write_atomic(&dir.join("config.toml"), cfg.to_toml().as_bytes())?;
    let traj = match run_scenario(&exp.scenario) {
        Ok(t) => t,
        Err(RunError::Aborted { t, cause, partial }) => {
            write_run(&dir, "", &partial)?;
            return Err(CliError::Runtime(format!("aborted at t = {t}: {cause}")));
        }
        Err(e) => return Err(e.into()),
    };
    warn_degenerate(err, &traj)?;
    write_run(&dir, "", &traj)?;
    write_plots(&dir, &cfg, &[&traj])?;
    let m = &traj.metrics;
    writeln!(
        out,
        "{}: min h1 = {:.6}, effort = {:.6}, goal error = {:.6}, violation = {}",
        traj.mode.as_str(),
        m.min_h1,
        m.control_effort,
        m.goal_error,
        m.violation
    )?;
    writeln!(out, "wrote {} samples to {}", traj.len(), dir.display())?;
    Ok(())
}

/// Runs all three controllers on the same config and seed.
pub fn run_all(scenario: &Scenario) -> Vec<Result<Trajectory, RunError>> {
    std::thread::scope(|s| {
        let handles: Vec<_> = ControllerMode::ALL
            .iter()
            .map(|&mode| {
                let mut sc = scenario.clone();
                sc.mode = mode;
                s.spawn(move || run_scenario(&sc))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("run thread panicked"))
            .collect()
    })
}

pub fn comparison_table(trajs: &[&Trajectory]) -> String {
    let mut s = format!(
        "{:<8} {:>12} {:>14} {:>12} {:>9}\n",
        "mode", "min h1", "effort", "goal error", "violation"
    );
    for t in trajs {
        let m = &t.metrics;
        s.push_str(&format!(
            "{:<8} {:>12.6} {:>14.6} {:>12.6} {:>9}\n",
            t.mode.as_str(),
            m.min_h1,
            m.control_effort,
            m.goal_error,
            if m.violation { "yes" } else { "no" }
        ));
    }
    s
}

pub fn compare(
    path: &Path,
    overrides: &Overrides,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<(), CliError> {
    let (cfg, exp) = prepare(path, overrides)?;
    let dir = PathBuf::from(&cfg.output.dir);
    write_atomic(&dir.join("config.toml"), cfg.to_toml().as_bytes())?;
    let mut trajs = Vec::new();
    for r in run_all(&exp.scenario) {
        match r {
            Ok(t) => trajs.push(t),
            Err(RunError::Aborted { t, cause, partial }) => {
                write_run(&dir, &format!("{}_", partial.mode.as_str()), &partial)?;
                return Err(CliError::Runtime(format!(
                    "{} aborted at t = {t}: {cause}",
                    partial.mode.as_str()
                )));
            }
            Err(e) => return Err(e.into()),
        }
    }
    let refs: Vec<&Trajectory> = trajs.iter().collect();
    let mut summary = String::new();
    for t in &trajs {
        warn_degenerate(err, t)?;
        write_run(&dir, &format!("{}_", t.mode.as_str()), t)?;
        summary.push_str(&format!("[{}]\n", t.mode.as_str()));
        summary.push_str(
            metrics_toml(t.mode.as_str(), &t.metrics, t.degenerate_gradient)
                .lines()
                .skip(1)
                .map(|l| format!("{l}\n"))
                .collect::<String>()
                .as_str(),
        );
        summary.push('\n');
    }
    write_atomic(&dir.join("metrics.toml"), summary.as_bytes())?;
    write_plots(&dir, &cfg, &refs)?;
    out.write_all(comparison_table(&refs).as_bytes())?;
    Ok(())
}

/// Prints the gains and the per-level initialization check; fails with the
/// first non-positive level.
pub fn check_gains(path: &Path, out: &mut dyn Write) -> Result<(), CliError> {
    let (_, exp) = prepare(path, &Overrides::default())?;
    let sc = &exp.scenario;
    let chain = gain_template(sc)?;
    let source = if exp.gains_fixed { "fixed" } else { "auto" };
    let gains: Vec<String> = sc
        .schedule
        .gains()
        .iter()
        .map(|g| format!("{g:.6}"))
        .collect();
    writeln!(out, "gains ({source}): [{}]", gains.join(", "))?;
    writeln!(
        out,
        "robust: {}, theta = {:.6}, vartheta = {}",
        chain.robust(),
        chain.theta(),
        sc.schedule.vartheta()
    )?;
    let report = chain
        .validate_initialization(&sc.x0, sc.t0)
        .map_err(CliError::from_init)?;
    writeln!(out, "{:<6} {:>14} {:>6}", "level", "h(x0, t0)", "ok")?;
    for l in &report {
        writeln!(
            out,
            "{:<6} {:>14.6} {:>6}",
            l.level,
            l.value,
            if l.positive { "yes" } else { "no" }
        )?;
    }
    match report.iter().find(|l| !l.positive) {
        Some(bad) => Err(CliError::UnsafeInit {
            level: bad.level,
            value: bad.value,
        }),
        None => Ok(()),
    }
}
