//! Grid self-convergence: runs at several resolutions compared by restriction
//! in the mass coordinate.

use crate::coords::cell_widths;
use crate::diagnostics::DiagnosticsConfig;
use crate::error::{Error, Result};
use crate::integrator::{run, IntegratorConfig, RunOutput};
use crate::params::ModelParams;
use crate::scalar::Scalar;
use crate::scenarios::{build_initial_state, ScenarioSpec};
use crate::state::StaggeredState;

/// Densities of `fine` averaged onto `n` cells of equal mass.
///
/// The physical position `X(y)` is interpolated linearly in the mass label, so on
/// nested grids each coarse cell receives exactly the specific volume of the fine
/// cells it covers.
pub fn restrict<T: Scalar>(fine: &StaggeredState<T>, n: usize) -> Vec<T> {
    let widths = cell_widths(fine);
    let total = fine.total_mass();
    let mut pos = Vec::with_capacity(widths.len() + 1);
    let mut acc = T::zero();
    pos.push(acc);
    for w in &widths {
        acc = acc + *w;
        pos.push(acc);
    }
    let nf = widths.len();
    let x_of = |y: T| -> T {
        let c = (y / fine.h).floor().to_usize().unwrap_or(0).min(nf - 1);
        let frac = (y - T::from_usize_lossy(c) * fine.h) / fine.h;
        pos[c] + frac * widths[c]
    };
    let big_h = total / T::from_usize_lossy(n);
    (0..n)
        .map(|c| {
            let lo = x_of(big_h * T::from_usize_lossy(c));
            let hi = if c + 1 == n { acc } else { x_of(big_h * T::from_usize_lossy(c + 1)) };
            big_h / (hi - lo)
        })
        .collect()
}

/// `sum |rho_coarse - R rho_fine| dx` over the coarse cells, with `dx` the
/// coarse physical widths.
pub fn l1_difference<T: Scalar>(coarse: &StaggeredState<T>, fine: &StaggeredState<T>) -> T {
    let restricted = restrict(fine, coarse.n_cells());
    let widths = cell_widths(coarse);
    coarse
        .rho
        .iter()
        .zip(&restricted)
        .zip(&widths)
        .enumerate()
        .filter(|(c, _)| !coarse.is_pinned(*c))
        .map(|(_, ((a, b), w))| (*a - *b).abs() * *w)
        .sum()
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceReport<T> {
    pub levels: Vec<usize>,
    /// `diffs[i]` compares level `i` with level `i + 1`.
    pub diffs: Vec<T>,
    /// Observed order from consecutive differences; `None` where undefined.
    pub orders: Vec<Option<T>>,
    pub peak_ux: Vec<T>,
}

pub fn check_levels(levels: &[usize]) -> Result<()> {
    if levels.len() < 3 || levels.iter().any(|&n| n < 3) || levels.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Levels(levels.to_vec()));
    }
    Ok(())
}

/// `p = ln(e_coarse / e_fine) / ln(r)` with `r` the refinement ratio between the
/// finer pair's levels; `log2` for exact doubling.
pub fn observed_order<T: Scalar>(e_coarse: T, e_fine: T, ratio: T) -> Option<T> {
    let positive = |v: T| v > T::zero() && v.is_finite();
    if !positive(e_coarse) || !positive(e_fine) || !(ratio > T::one()) {
        return None;
    }
    Some((e_coarse / e_fine).ln() / ratio.ln())
}

/// Compares the final states of runs at the given levels, in order.
pub fn convergence_report<T: Scalar>(levels: &[usize], outputs: &[RunOutput<T>]) -> Result<ConvergenceReport<T>> {
    check_levels(levels)?;
    if outputs.len() != levels.len() {
        return Err(Error::Precondition("one run per level".into()));
    }
    let finals = final_states(outputs)?;
    let diffs: Vec<T> = finals.windows(2).map(|w| l1_difference(&w[0], &w[1])).collect();
    let orders = (0..diffs.len().saturating_sub(1))
        .map(|i| {
            let ratio = T::from_usize_lossy(levels[i + 2]) / T::from_usize_lossy(levels[i + 1]);
            observed_order(diffs[i], diffs[i + 1], ratio)
        })
        .collect();
    let peak_ux = outputs
        .iter()
        .map(|o| o.series.iter().fold(T::zero(), |m, r| m.max(r.ux_linf)))
        .collect();
    Ok(ConvergenceReport {
        levels: levels.to_vec(),
        diffs,
        orders,
        peak_ux,
    })
}

/// Runs the scenario once per level, concurrently. The final state of each run
/// is its last snapshot, which is always taken at the end time.
pub fn run_levels<T: Scalar>(
    spec: &ScenarioSpec<T>,
    p: &ModelParams<T>,
    cfg: &IntegratorConfig<T>,
    diag: &DiagnosticsConfig<T>,
    levels: &[usize],
) -> Result<Vec<RunOutput<T>>> {
    check_levels(levels)?;
    let mut cfg = cfg.clone();
    if !cfg.snapshot_times.contains(&cfg.t_end) {
        cfg.snapshot_times.push(cfg.t_end);
    }
    let cfg = &cfg;
    std::thread::scope(|scope| {
        let handles: Vec<_> = levels
            .iter()
            .map(|&n| {
                scope.spawn(move || {
                    let spec = ScenarioSpec { n, ..spec.clone() };
                    let s0 = build_initial_state(&spec, p)?.state;
                    run(&s0, p, cfg, diag)
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("level run panicked"))
            .collect()
    })
}

/// Final states of runs from [`run_levels`].
pub fn final_states<T: Scalar>(outputs: &[RunOutput<T>]) -> Result<Vec<StaggeredState<T>>> {
    outputs
        .iter()
        .map(|o| {
            o.snapshots
                .last()
                .cloned()
                .ok_or_else(|| Error::Precondition("run kept no snapshot".into()))
        })
        .collect()
}
