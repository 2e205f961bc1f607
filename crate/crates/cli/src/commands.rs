//! Subcommand drivers. Each returns the text it would print; failures carry the
//! exit status they map to.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::anyhow;
use degen_ns::diagnostics::blowup_indicator;
use degen_ns::scenarios::build_initial_state;
use degen_ns::{
    convergence_report, decay_fit, presets, run, run_levels, vacuum_vanish_time, DecayFit, Output64, Record64,
    State64,
};
use log::info;

use crate::config::{serialize_config, ConfigError, RunConfig};
use crate::output::{
    fmt_f64, format_summary, read_series, resolve_output_dir, write_series, write_snapshot, write_state,
};

#[derive(Debug, thiserror::Error)]
pub enum Failure {
    #[error(transparent)]
    Config(anyhow::Error),
    #[error(transparent)]
    Solver(anyhow::Error),
    #[error(transparent)]
    Io(anyhow::Error),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Solver(_) => 3,
            Failure::Io(_) => 1,
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.into())
    }
}

fn io(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Io(e.into())
}

/// Creates the run directory, treating failure as a configuration problem.
fn prepare_dir(dir: &Path) -> Result<PathBuf, Failure> {
    let dir = resolve_output_dir(dir);
    fs::create_dir_all(&dir).map_err(|e| Failure::Config(anyhow!("output directory {}: {e}", dir.display())))?;
    Ok(dir)
}

fn opt(v: Option<f64>) -> String {
    v.map_or("none".into(), fmt_f64)
}

/// Summary entries for a finished (or failed) run.
pub fn summarize(cfg: &RunConfig, s0: &State64, out: &Output64) -> Vec<(String, String)> {
    let mut e: Vec<(String, String)> = Vec::new();
    let mut put = |k: &str, v: String| e.push((k.to_string(), v));
    let term = &out.termination;
    put("termination", term.kind.as_str().into());
    put("termination_t", fmt_f64(term.t));
    put("termination_cell", term.cell.map_or("none".into(), |c| c.to_string()));
    put("steps", out.steps.to_string());
    put("rejections", out.rejections.to_string());
    put("samples", out.series.len().to_string());
    put("snapshots", out.snapshots.len().to_string());

    let (first, last) = match (out.series.first(), out.series.last()) {
        (Some(a), Some(b)) => (a, b),
        _ => return e,
    };
    put("mass_drift", fmt_f64((last.mass - first.mass).abs()));
    put("volume_drift", fmt_f64((last.volume - first.volume).abs()));
    put("energy_initial", fmt_f64(first.energy));
    put("energy_final", fmt_f64(last.energy));
    put(
        "energy_balance_defect",
        fmt_f64((last.energy + last.dissipation_cum - first.energy).abs()),
    );
    let (peak_t, peak) = out
        .series
        .iter()
        .fold((first.t, first.ux_linf), |(pt, pv), r| if r.ux_linf > pv { (r.t, r.ux_linf) } else { (pt, pv) });
    put("peak_ux_linf", fmt_f64(peak));
    put("peak_ux_linf_t", fmt_f64(peak_t));

    let d = &cfg.diagnostics;
    // projection can lift a coarse grid's minimum above the threshold
    let had_vacuum = cfg.scenario.kind.has_vacuum() || s0.pinned_cell.is_some() || first.min_rho < d.rho_thresh;
    put("vacuum_initially", had_vacuum.to_string());
    let t0 = if had_vacuum {
        vacuum_vanish_time(&out.series, d.rho_thresh, d.hold)
    } else {
        None
    };
    put("vacuum_vanish_time", opt(t0));
    if let Some(t0) = t0 {
        let eta = t0 - first.t;
        if eta > 0.0 {
            if let Ok(b) = blowup_indicator(&out.series, first.t, eta) {
                put("blowup_integral", fmt_f64(b.integral));
            }
        }
    }

    let t_start = t0.unwrap_or(first.t) + d.decay_offset;
    put("decay_t_start", fmt_f64(t_start));
    match decay_fit(&out.series, t_start) {
        Ok(fit) => put_fit(&mut put, &fit),
        Err(err) => put("decay_fit", format!("unavailable ({err})")),
    }
    e
}

fn put_fit(put: &mut impl FnMut(&str, String), fit: &DecayFit<f64>) {
    put("decay_c0", fmt_f64(fit.c0));
    put("decay_mu0", fmt_f64(fit.mu0));
    put("decay_r2", if fit.r2_defined { fmt_f64(fit.r2) } else { "undefined".into() });
    put("decay_used", fit.used.to_string());
    put("decay_excluded", fit.excluded.to_string());
}

fn write_run(dir: &Path, cfg: &RunConfig, out: &Output64) -> Result<(), Failure> {
    fs::write(dir.join("config.txt"), serialize_config(cfg)).map_err(io)?;
    write_series(&dir.join("series.csv"), &out.series).map_err(io)?;
    let snaps = dir.join("snapshots");
    fs::create_dir_all(&snaps).map_err(io)?;
    for (i, s) in out.snapshots.iter().enumerate() {
        write_snapshot(&snaps.join(format!("snapshot_{i:05}.csv")), s).map_err(io)?;
        write_state(&snaps.join(format!("snapshot_{i:05}.state")), s).map_err(io)?;
    }
    Ok(())
}

/// Integrates the configured scenario, or `restart` when given, and writes
/// `series.csv`, `snapshots/`, `config.txt` and `summary.txt`.
pub fn cmd_run(cfg: &RunConfig, restart: Option<State64>) -> Result<String, Failure> {
    let dir = prepare_dir(&cfg.output_dir)?;
    let s0 = match restart {
        Some(s) => {
            if s.t.is_nan() || s.t > cfg.integrator.t_end {
                return Err(Failure::Config(anyhow!(
                    "restart state at t = {} is past t_end = {}",
                    s.t,
                    cfg.integrator.t_end
                )));
            }
            s
        }
        None => build_initial_state(&cfg.scenario, &cfg.params).map_err(|e| Failure::Config(e.into()))?.state,
    };
    info!("running N = {} to t = {} into {}", s0.n_cells(), cfg.integrator.t_end, dir.display());
    let out = run(&s0, &cfg.params, &cfg.integrator, &cfg.diagnostics_config())
        .map_err(|e| Failure::Config(e.into()))?;
    write_run(&dir, cfg, &out)?;
    let summary = format_summary(&summarize(cfg, &s0, &out));
    fs::write(dir.join("summary.txt"), &summary).map_err(io)?;
    if !out.completed() {
        let t = &out.termination;
        return Err(Failure::Solver(anyhow!(
            "run stopped at t = {}: {}{}",
            t.t,
            t.kind.as_str(),
            t.cell.map_or(String::new(), |c| format!(" in cell {c}"))
        )));
    }
    Ok(summary)
}

/// Parses `51,101,201`.
pub fn parse_levels(text: &str) -> Result<Vec<usize>, Failure> {
    text.split(',')
        .map(|v| v.trim().parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|e| Failure::Config(anyhow!("levels `{text}`: {e}")))
}

/// Runs every level concurrently, each into its own `level_<N>` directory, and
/// writes `convergence.csv`.
pub fn cmd_converge(cfg: &RunConfig, levels: &[usize]) -> Result<String, Failure> {
    let dir = prepare_dir(&cfg.output_dir)?;
    info!("convergence study at N = {levels:?} into {}", dir.display());
    let outputs = run_levels(
        &cfg.scenario,
        &cfg.params,
        &cfg.integrator,
        &cfg.diagnostics_config(),
        levels,
    )
    .map_err(|e| Failure::Config(e.into()))?;
    for (&n, out) in levels.iter().zip(&outputs) {
        let sub = dir.join(format!("level_{n}"));
        fs::create_dir_all(&sub).map_err(io)?;
        let level_cfg = RunConfig {
            scenario: degen_ns::Scenario64 { n, ..cfg.scenario.clone() },
            output_dir: sub.clone(),
            ..cfg.clone()
        };
        write_run(&sub, &level_cfg, out)?;
    }
    if let Some((n, out)) = levels.iter().zip(&outputs).find(|(_, o)| !o.completed()) {
        return Err(Failure::Solver(anyhow!(
            "level N = {n} stopped at t = {}: {}",
            out.termination.t,
            out.termination.kind.as_str()
        )));
    }
    let report = convergence_report(levels, &outputs).map_err(|e| Failure::Config(e.into()))?;

    let mut csv = String::from("level,n_coarse,n_fine,l1_diff,order,peak_ux_linf\n");
    let mut text = String::new();
    let _ = writeln!(text, "{:>8} {:>14} {:>10} {:>14}", "N", "L1 to next", "order", "peak ux_inf");
    for (i, &n) in levels.iter().enumerate() {
        // row i holds the difference to the next level and the order ending at it
        let diff = report.diffs.get(i).copied();
        let order = if i >= 1 { report.orders.get(i - 1).copied().flatten() } else { None };
        let next = levels.get(i + 1).map_or("".into(), |m| m.to_string());
        let _ = writeln!(
            csv,
            "{i},{n},{next},{},{},{}",
            diff.map_or("".into(), fmt_f64),
            order.map_or("".into(), fmt_f64),
            fmt_f64(report.peak_ux[i])
        );
        let _ = writeln!(
            text,
            "{:>8} {:>14} {:>10} {:>14}",
            n,
            diff.map_or("-".into(), |d| format!("{d:.6e}")),
            order.map_or("-".into(), |p| format!("{p:.4}")),
            format!("{:.6e}", report.peak_ux[i])
        );
    }
    let monotone = report.peak_ux.windows(2).all(|w| w[1] >= w[0]);
    let _ = writeln!(text, "peak_ux_linf_nondecreasing = {monotone}");
    if report.orders.iter().any(Option::is_none) {
        let _ = writeln!(text, "order_undefined = true");
    }
    fs::write(dir.join("convergence.csv"), csv).map_err(io)?;
    fs::write(dir.join("convergence.txt"), &text).map_err(io)?;
    Ok(text)
}

/// Names and descriptions of the built-in presets.
pub fn cmd_scenarios() -> String {
    let mut text = String::new();
    for p in presets::<f64>() {
        let _ = writeln!(text, "{:<28} {}", p.name, p.description);
    }
    text
}

/// Fits `c0 exp(-mu0 (t - t_start))` to the `l2_dist` column of a series file.
pub fn cmd_decay_fit(series: &Path, t_start: f64) -> Result<String, Failure> {
    let records: Vec<Record64> = read_series(series).map_err(Failure::Config)?;
    let fit = decay_fit(&records, t_start).map_err(|e| Failure::Solver(e.into()))?;
    let mut e = Vec::new();
    e.push(("t_start".to_string(), fmt_f64(fit.t_start)));
    put_fit(&mut |k: &str, v: String| e.push((k.to_string(), v)), &fit);
    Ok(format_summary(&e))
}
