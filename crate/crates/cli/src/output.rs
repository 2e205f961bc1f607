//! File formats: diagnostic series, snapshots, restart sidecars and summaries.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use degen_ns::{lagrangian_to_eulerian, BoundaryCondition, Record64, State64};

/// Overrides the root under which relative output directories are created.
pub const OUTPUT_ROOT_ENV: &str = "DEGEN_NS_OUTPUT_ROOT";

/// Shortest decimal that parses back to the same `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

/// Relative directories are placed under `$DEGEN_NS_OUTPUT_ROOT` when it is set.
pub fn resolve_output_dir(dir: &Path) -> PathBuf {
    match std::env::var_os(OUTPUT_ROOT_ENV) {
        Some(root) if dir.is_relative() && !root.is_empty() => PathBuf::from(root).join(dir),
        _ => dir.to_path_buf(),
    }
}

pub fn write_series(path: &Path, series: &[Record64]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    w.write_record(Record64::COLUMNS)?;
    for r in series {
        let row: Vec<String> = r
            .values()
            .iter()
            .enumerate()
            .map(|(i, v)| if i == 10 { r.pinned_cells.to_string() } else { fmt_f64(*v) })
            .collect();
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a series written by [`write_series`], requiring every column and
/// strictly increasing times.
pub fn read_series(path: &Path) -> Result<Vec<Record64>> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    let header = r.headers()?.clone();
    let names: Vec<&str> = header.iter().collect();
    ensure!(
        names == Record64::COLUMNS,
        "{}: header does not match the series columns",
        path.display()
    );
    let mut out: Vec<Record64> = Vec::new();
    for (i, row) in r.records().enumerate() {
        let row = row?;
        let values = row
            .iter()
            .map(|v| v.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<f64>, _>>()
            .with_context(|| format!("{}: row {}", path.display(), i + 2))?;
        let rec = Record64::from_values(&values)?;
        if let Some(prev) = out.last() {
            ensure!(
                rec.t > prev.t,
                "{}: time {} at row {} does not increase",
                path.display(),
                rec.t,
                i + 2
            );
        }
        out.push(rec);
    }
    Ok(out)
}

/// Eulerian reconstruction: one row per cell with its midpoint, density and
/// the mean of its two node velocities.
pub fn write_snapshot(path: &Path, s: &State64) -> Result<()> {
    let f = lagrangian_to_eulerian(s)?;
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    w.write_record(["x", "rho", "u"])?;
    for (c, x) in f.midpoints().into_iter().enumerate() {
        let u = 0.5 * (f.u[c] + f.u[c + 1]);
        w.write_record([fmt_f64(x), fmt_f64(f.rho[c]), fmt_f64(u)])?;
    }
    w.flush()?;
    Ok(())
}

fn join(values: &[f64]) -> String {
    values.iter().map(|v| fmt_f64(*v)).collect::<Vec<_>>().join(",")
}

/// Raw Lagrangian state, exact to the last bit.
pub fn format_state(s: &State64) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "t={}", fmt_f64(s.t));
    let _ = writeln!(out, "h={}", fmt_f64(s.h));
    let _ = writeln!(out, "origin={}", fmt_f64(s.origin));
    let _ = writeln!(out, "bc={}", s.bc);
    let _ = writeln!(out, "pinned={}", s.pinned_cell.map_or("none".into(), |k| k.to_string()));
    let _ = writeln!(out, "rho={}", join(&s.rho));
    let _ = writeln!(out, "u={}", join(&s.u));
    out
}

pub fn parse_state(text: &str) -> Result<State64> {
    let mut fields = std::collections::HashMap::new();
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        let (k, v) = line.split_once('=').with_context(|| format!("malformed line `{line}`"))?;
        fields.insert(k.trim(), v.trim());
    }
    let get = |k: &str| fields.get(k).copied().with_context(|| format!("missing `{k}`"));
    let num = |k: &str| -> Result<f64> { get(k)?.parse().with_context(|| format!("bad `{k}`")) };
    let list = |k: &str| -> Result<Vec<f64>> {
        let v = get(k)?;
        if v.is_empty() {
            return Ok(Vec::new());
        }
        v.split(',')
            .map(|x| x.parse::<f64>().with_context(|| format!("bad `{k}`")))
            .collect()
    };
    let bc: BoundaryCondition = match get("bc")?.parse() {
        Ok(bc) => bc,
        Err(e) => bail!(e),
    };
    let pinned_cell = match get("pinned")? {
        "none" => None,
        k => Some(k.parse().context("bad `pinned`")?),
    };
    let s = State64 {
        h: num("h")?,
        t: num("t")?,
        rho: list("rho")?,
        u: list("u")?,
        bc,
        pinned_cell,
        origin: num("origin")?,
    };
    s.validate()?;
    Ok(s)
}

pub fn write_state(path: &Path, s: &State64) -> Result<()> {
    fs::write(path, format_state(s)).with_context(|| format!("writing {}", path.display()))
}

pub fn read_state(path: &Path) -> Result<State64> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_state(&text).with_context(|| format!("parsing {}", path.display()))
}

pub fn format_summary(entries: &[(String, String)]) -> String {
    entries.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
}
