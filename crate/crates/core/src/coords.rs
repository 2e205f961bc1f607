//! Eulerian and Lagrangian (mass) coordinates, and particle paths.
//!
//! The mass coordinate of a point is `y = int_0^x rho dz`; a Lagrangian cell of
//! mass `h` and density `rho` occupies a physical interval of width `h / rho`.

use crate::error::{Error, Result};
use crate::integrator::RunOutput;
use crate::scalar::Scalar;
use crate::state::{BoundaryCondition, EulerianField, StaggeredState};

/// Resamples an Eulerian field onto `n` cells of equal mass `M / n`.
///
/// Cell boundaries are the exact quantiles of the piecewise-linear cumulative
/// mass of `f`; velocities are interpolated linearly in `x`.
pub fn eulerian_to_lagrangian<T: Scalar>(
    f: &EulerianField<T>,
    n: usize,
    bc: BoundaryCondition,
) -> Result<StaggeredState<T>> {
    f.validate()?;
    if n == 0 {
        return Err(Error::InvalidState("need at least one cell".into()));
    }
    let cum = f.cumulative_mass();
    let m = f.n_cells();
    let total = cum[m];
    if !(total > T::zero()) {
        return Err(Error::ZeroMass);
    }
    let h = total / T::from_usize_lossy(n);

    let mut faces = Vec::with_capacity(n + 1);
    faces.push(f.x[0]);
    let mut cell = 0usize;
    for j in 1..n {
        let target = h * T::from_usize_lossy(j);
        while cell + 1 < m && cum[cell + 1] <= target {
            cell += 1;
        }
        let offset = if f.rho[cell] > T::zero() {
            (target - cum[cell]) / f.rho[cell]
        } else {
            T::zero()
        };
        let x = (f.x[cell] + offset).min(f.x[cell + 1]);
        faces.push(x);
    }
    faces.push(f.x[m]);

    let rho: Vec<T> = faces.windows(2).map(|w| h / (w[1] - w[0])).collect();
    if let Some(i) = rho.iter().position(|r| !r.is_finite()) {
        return Err(Error::InvalidState(format!(
            "Lagrangian cell {i} collapsed to zero width"
        )));
    }

    let mut u = Vec::with_capacity(n + 1);
    let mut node = 0usize;
    for &x in &faces {
        while node + 1 < m && f.x[node + 1] <= x {
            node += 1;
        }
        let (x0, x1) = (f.x[node], f.x[node + 1]);
        let w = ((x - x0) / (x1 - x0)).max(T::zero()).min(T::one());
        u.push(f.u[node] + w * (f.u[node + 1] - f.u[node]));
    }
    if bc == BoundaryCondition::Periodic {
        u.pop();
    }
    if bc.left_is_wall() {
        u[0] = T::zero();
    }
    if bc.right_is_wall() {
        u[n] = T::zero();
    }

    let s = StaggeredState {
        h,
        t: f.t,
        rho,
        u,
        bc,
        pinned_cell: None,
        origin: f.x[0],
    };
    s.validate()?;
    Ok(s)
}

/// Physical width of a pinned (zero-density) cell.
///
/// Each side of the vacuum is modelled as `rho = a |y - y0|^beta` with `a` and
/// `beta` fitted through the two nearest cells; the width is the closed-form
/// integral of `1 / rho` over the half cell, finite for `beta < 1`.
pub fn pinned_cell_width<T: Scalar>(s: &StaggeredState<T>, k: usize) -> T {
    let n = s.n_cells() as isize;
    let periodic = s.bc == BoundaryCondition::Periodic;
    let get = |i: isize| -> Option<T> {
        let i = if periodic { i.rem_euclid(n) } else { i };
        if (0..n).contains(&i) && i as usize != k {
            Some(s.rho[i as usize]).filter(|r| *r > T::zero())
        } else {
            None
        }
    };
    let k = k as isize;
    let fit = |near: Option<T>, far: Option<T>| -> Option<(T, T)> {
        let near = near?;
        let beta = match far {
            Some(far) => ((far / near).ln() / T::LN_2())
                .max(T::zero())
                .min(T::one() - T::lit(1e-3)),
            None => T::zero(),
        };
        Some((near / s.h.powf(beta), beta))
    };
    let left = fit(get(k - 1), get(k - 2));
    let right = fit(get(k + 1), get(k + 2));
    let half = s.h * T::lit(0.5);
    let side = |(a, beta): (T, T)| half.powf(T::one() - beta) / (a * (T::one() - beta));
    match (left, right) {
        (Some(l), Some(r)) => side(l) + side(r),
        (Some(l), None) => side(l) + side(l),
        (None, Some(r)) => side(r) + side(r),
        (None, None) => T::zero(),
    }
}

/// Physical widths of all cells (pinned cells via [`pinned_cell_width`]).
pub fn cell_widths<T: Scalar>(s: &StaggeredState<T>) -> Vec<T> {
    (0..s.n_cells())
        .map(|c| {
            if s.is_pinned(c) {
                pinned_cell_width(s, c)
            } else {
                s.h / s.rho[c]
            }
        })
        .collect()
}

/// Inverse transform `x = int_0^y rho^{-1} dz`, anchored at `s.origin`.
///
/// Under Dirichlet conditions the last node should land on 1; the miss is left
/// in place and can be read with [`EulerianField::endpoint_defect`].
pub fn lagrangian_to_eulerian<T: Scalar>(s: &StaggeredState<T>) -> Result<EulerianField<T>> {
    s.check_positive()?;
    let widths = cell_widths(s);
    let mut x = Vec::with_capacity(widths.len() + 1);
    let mut acc = s.origin;
    x.push(acc);
    for w in widths {
        acc = acc + w;
        x.push(acc);
    }
    let mut u = s.u.clone();
    if s.bc == BoundaryCondition::Periodic {
        u.push(s.u[0]);
    }
    Ok(EulerianField {
        x,
        rho: s.rho.clone(),
        u,
        t: s.t,
    })
}

/// Physical position of mass label `y` in a reconstructed field.
pub fn position_of_label<T: Scalar>(s: &StaggeredState<T>, f: &EulerianField<T>, y: T) -> T {
    let n = s.n_cells();
    let total = s.total_mass();
    let y = if s.bc == BoundaryCondition::Periodic {
        y - (y / total).floor() * total
    } else {
        y.max(T::zero()).min(total)
    };
    let c = (y / s.h).floor().to_usize().unwrap_or(0).min(n - 1);
    let frac = (y - T::from_usize_lossy(c) * s.h) / s.h;
    f.x[c] + frac * (f.x[c + 1] - f.x[c])
}

/// Mass label of physical position `x` in a reconstructed field.
pub fn label_of_position<T: Scalar>(s: &StaggeredState<T>, f: &EulerianField<T>, x: T) -> Result<T> {
    let lo = f.x[0];
    let hi = f.x[f.x.len() - 1];
    if !(x >= lo && x <= hi) {
        return Err(Error::OutOfDomain {
            x: x.to_f64_lossy(),
            lo: lo.to_f64_lossy(),
            hi: hi.to_f64_lossy(),
        });
    }
    let c = f
        .x
        .windows(2)
        .position(|w| x <= w[1])
        .unwrap_or(f.n_cells() - 1);
    let frac = (x - f.x[c]) / (f.x[c + 1] - f.x[c]);
    Ok(s.h * (T::from_usize_lossy(c) + frac))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParticleTrajectory<T> {
    pub times: Vec<T>,
    pub positions: Vec<T>,
    pub mass_label: T,
}

/// Path of the fluid particle starting at `x0`, read off the run's snapshots.
///
/// The particle keeps its mass label, so its position at each snapshot is the
/// physical location of that label. Periodic positions are wrapped into `[0, 1)`.
pub fn particle_path<T: Scalar>(out: &RunOutput<T>, x0: T) -> Result<ParticleTrajectory<T>> {
    let first = out
        .snapshots
        .first()
        .ok_or_else(|| Error::Precondition("run has no snapshots".into()))?;
    if !(x0 >= T::zero() && x0 <= T::one()) {
        return Err(Error::OutOfDomain {
            x: x0.to_f64_lossy(),
            lo: 0.0,
            hi: 1.0,
        });
    }
    let f0 = lagrangian_to_eulerian(first)?;
    let periodic = first.bc == BoundaryCondition::Periodic;
    let x_start = if periodic {
        let shifted = x0 - f0.x[0];
        f0.x[0] + shifted - shifted.floor()
    } else {
        x0
    };
    let label = label_of_position(first, &f0, x_start)?;

    let mut times = Vec::with_capacity(out.snapshots.len());
    let mut positions = Vec::with_capacity(out.snapshots.len());
    for s in &out.snapshots {
        let f = lagrangian_to_eulerian(s)?;
        let mut x = position_of_label(s, &f, label);
        if periodic {
            x = x - x.floor();
        }
        times.push(s.t);
        positions.push(x);
    }
    Ok(ParticleTrajectory {
        times,
        positions,
        mass_label: label,
    })
}
