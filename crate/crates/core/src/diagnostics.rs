//! Functionals tracked along a run and series-level analyses.
//!
//! Per-sample quantities are evaluated on the Lagrangian state and its Eulerian
//! reconstruction. Time integrals (dissipation, `||u_x||_inf`) are accumulated with
//! the trapezoid rule at the sampling cadence.

use crate::coords::lagrangian_to_eulerian;
use crate::error::{Error, Result};
use crate::params::{pi_fn, Constitutive, ModelParams};
use crate::scalar::Scalar;
use crate::state::{BoundaryCondition, EulerianField, StaggeredState};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiagnosticsConfig<T> {
    /// Exponent of the `g` functional; defaults to [`default_b`].
    pub b: Option<T>,
}

impl<T> Default for DiagnosticsConfig<T> {
    fn default() -> Self {
        DiagnosticsConfig { b: None }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DiagnosticsRecord<T> {
    pub t: T,
    /// Eulerian mass of the reconstruction.
    pub mass: T,
    /// Lagrangian volume `sum h / rho`.
    pub volume: T,
    /// `sum (u^2 / 2) h + sum a1 pi(rho) / rho h`.
    pub energy: T,
    /// Same kinetic part with `pi(rho) h` as the potential part.
    pub energy_pi: T,
    pub dissipation_rate: T,
    pub dissipation_cum: T,
    pub bd_entropy: T,
    pub min_rho: T,
    pub max_rho: T,
    pub pinned_cells: usize,
    pub ux_linf: T,
    pub ux_linf_cum: T,
    pub l2_dist: T,
    pub g_val: T,
    /// `|x_N - x_0 - 1|` of the reconstruction.
    pub length_defect: T,
}

impl<T: Scalar> DiagnosticsRecord<T> {
    pub const COLUMNS: [&'static str; 16] = [
        "t",
        "mass",
        "volume",
        "energy",
        "energy_pi",
        "dissipation_rate",
        "dissipation_cum",
        "bd_entropy",
        "min_rho",
        "max_rho",
        "pinned_cells",
        "ux_linf",
        "ux_linf_cum",
        "l2_dist",
        "g_val",
        "length_defect",
    ];

    /// Values in [`Self::COLUMNS`] order.
    pub fn values(&self) -> [T; 16] {
        [
            self.t,
            self.mass,
            self.volume,
            self.energy,
            self.energy_pi,
            self.dissipation_rate,
            self.dissipation_cum,
            self.bd_entropy,
            self.min_rho,
            self.max_rho,
            T::from_usize_lossy(self.pinned_cells),
            self.ux_linf,
            self.ux_linf_cum,
            self.l2_dist,
            self.g_val,
            self.length_defect,
        ]
    }

    pub fn from_values(v: &[T]) -> Result<Self> {
        if v.len() != 16 {
            return Err(Error::InvalidState(format!("expected 16 columns, got {}", v.len())));
        }
        Ok(DiagnosticsRecord {
            t: v[0],
            mass: v[1],
            volume: v[2],
            energy: v[3],
            energy_pi: v[4],
            dissipation_rate: v[5],
            dissipation_cum: v[6],
            bd_entropy: v[7],
            min_rho: v[8],
            max_rho: v[9],
            pinned_cells: v[10].to_usize().unwrap_or(0),
            ux_linf: v[11],
            ux_linf_cum: v[12],
            l2_dist: v[13],
            g_val: v[14],
            length_defect: v[15],
        })
    }
}

/// Smallest admissible exponent `max{alpha + gamma - 1, 2 alpha + 1, 1}` for `g`.
pub fn default_b<T: Scalar>(p: &ModelParams<T>) -> T {
    (p.alpha + p.gamma - T::one())
        .max(T::lit(2.0) * p.alpha + T::one())
        .max(T::one())
}

/// `rho_i (u_{i+1} - u_i) / h`, the Eulerian `u_x` in each cell.
pub fn velocity_gradient_field<T: Scalar>(s: &StaggeredState<T>) -> Vec<T> {
    (0..s.n_cells()).map(|c| s.rho[c] * s.du_dy(c)).collect()
}

/// `|| rho^b - mean(rho^b) ||_{L^4}^4` over the physical domain.
pub fn g_functional_field<T: Scalar>(f: &EulerianField<T>, b: T) -> T {
    let len = f.length();
    let powered: Vec<T> = f.rho.iter().map(|&r| r.powf(b)).collect();
    let mean = powered
        .iter()
        .zip(f.widths())
        .map(|(&v, w)| v * w)
        .sum::<T>()
        / len;
    powered
        .iter()
        .zip(f.widths())
        .map(|(&v, w)| (v - mean).powi(4) * w)
        .sum()
}

pub fn g_functional<T: Scalar>(s: &StaggeredState<T>, p: &ModelParams<T>, b: Option<T>) -> Result<T> {
    let f = lagrangian_to_eulerian(s)?;
    Ok(g_functional_field(&f, b.unwrap_or_else(|| default_b(p))))
}

/// Node-centred differences `(g_j - g_{j-1}) / h` of a cell quantity; one-sided
/// (copied from the nearest interior node) at non-periodic ends.
fn node_gradients<T: Scalar>(s: &StaggeredState<T>, cell_vals: &[T]) -> Vec<T> {
    let n = cell_vals.len();
    let h = s.h;
    if s.bc == BoundaryCondition::Periodic {
        return (0..n)
            .map(|j| (cell_vals[j] - cell_vals[(j + n - 1) % n]) / h)
            .collect();
    }
    let mut g = vec![T::zero(); n + 1];
    for j in 1..n {
        g[j] = (cell_vals[j] - cell_vals[j - 1]) / h;
    }
    if n >= 2 {
        g[0] = g[1];
        g[n] = g[n - 1];
    }
    g
}

/// BD entropy `sum (u^2 + ((rho^alpha)_y)^2 + eps^2 ((rho^theta)_y)^2) h + sum a1 pi(rho)/rho h`.
pub fn bd_entropy<T: Scalar>(s: &StaggeredState<T>, p: &ModelParams<T>) -> Result<T> {
    let law = Constitutive::new(p);
    let h = s.h;
    let kinetic: T = s.u.iter().map(|&u| u * u * h).sum();
    let ra: Vec<T> = s.rho.iter().map(|&r| r.powf(p.alpha)).collect();
    let grad_a: T = node_gradients(s, &ra).iter().map(|&g| g * g * h).sum();
    let grad_t = if p.eps > T::zero() {
        let rt: Vec<T> = s.rho.iter().map(|&r| r.powf(p.theta)).collect();
        let sum: T = node_gradients(s, &rt).iter().map(|&g| g * g * h).sum();
        p.eps * p.eps * sum
    } else {
        T::zero()
    };
    Ok(kinetic + grad_a + grad_t + internal_energy(s, &law)?)
}

fn internal_energy<T: Scalar>(s: &StaggeredState<T>, law: &Constitutive<T>) -> Result<T> {
    let mut acc = T::zero();
    for (c, &r) in s.rho.iter().enumerate() {
        if s.is_pinned(c) {
            continue;
        }
        acc = acc + law.internal_energy(r)? * s.h;
    }
    Ok(acc)
}

/// Discrete energy `sum (u^2 / 2) h + sum a1 pi(rho) / rho h`.
pub fn energy<T: Scalar>(s: &StaggeredState<T>, p: &ModelParams<T>) -> Result<T> {
    let law = Constitutive::new(p);
    let kinetic: T = s.u.iter().map(|&u| T::lit(0.5) * u * u * s.h).sum();
    Ok(kinetic + internal_energy(s, &law)?)
}

/// Dissipation rate `sum K(rho) ((u_{i+1} - u_i) / h)^2 h`.
pub fn dissipation_rate<T: Scalar>(s: &StaggeredState<T>, law: &Constitutive<T>) -> T {
    (0..s.n_cells())
        .map(|c| {
            let g = s.du_dy(c);
            law.diffusivity(s.rho[c]) * g * g * s.h
        })
        .sum()
}

/// Running state for [`sample`]: equilibrium targets and cumulative integrals.
#[derive(Clone, Debug)]
pub struct DiagnosticsTracker<T> {
    params: ModelParams<T>,
    law: Constitutive<T>,
    b: T,
    /// Mean initial density.
    pub rho_bar0: T,
    /// Equilibrium velocity: 0 at walls, mean momentum per mass otherwise.
    pub u_s: T,
    last: Option<(T, T, T)>,
    dissipation_cum: T,
    ux_cum: T,
}

impl<T: Scalar> DiagnosticsTracker<T> {
    pub fn new(s0: &StaggeredState<T>, p: &ModelParams<T>, cfg: &DiagnosticsConfig<T>) -> Result<Self> {
        let f0 = lagrangian_to_eulerian(s0)?;
        let rho_bar0 = f0.mass() / f0.length();
        let u_s = if s0.bc == BoundaryCondition::Dirichlet {
            T::zero()
        } else {
            s0.u.iter().copied().sum::<T>() / T::from_usize_lossy(s0.u.len())
        };
        Ok(DiagnosticsTracker {
            params: *p,
            law: Constitutive::new(p),
            b: cfg.b.unwrap_or_else(|| default_b(p)),
            rho_bar0,
            u_s,
            last: None,
            dissipation_cum: T::zero(),
            ux_cum: T::zero(),
        })
    }

    pub fn sample(&mut self, s: &StaggeredState<T>) -> Result<DiagnosticsRecord<T>> {
        let f = lagrangian_to_eulerian(s)?;
        let p = &self.params;
        let law = &self.law;
        let h = s.h;

        let mut min_rho = T::infinity();
        let mut max_rho = T::zero();
        let mut pinned = 0;
        let mut ux_linf = T::zero();
        let mut pi_sum = T::zero();
        for (c, &r) in s.rho.iter().enumerate() {
            if s.is_pinned(c) {
                pinned += 1;
                continue;
            }
            min_rho = min_rho.min(r);
            max_rho = max_rho.max(r);
            ux_linf = ux_linf.max((r * s.du_dy(c)).abs());
            pi_sum = pi_sum + p.a1 * pi_fn(r, p.gamma) * h;
        }
        let kinetic: T = s.u.iter().map(|&u| T::lit(0.5) * u * u * h).sum();
        let dissipation = dissipation_rate(s, law);

        let (dissipation_cum, ux_cum) = match self.last {
            None => (T::zero(), T::zero()),
            Some((t_prev, d_prev, ux_prev)) => {
                let dt = s.t - t_prev;
                (
                    self.dissipation_cum + T::lit(0.5) * dt * (dissipation + d_prev),
                    self.ux_cum + T::lit(0.5) * dt * (ux_linf + ux_prev),
                )
            }
        };
        self.dissipation_cum = dissipation_cum;
        self.ux_cum = ux_cum;
        self.last = Some((s.t, dissipation, ux_linf));

        let mut l2 = T::zero();
        for (c, w) in f.widths().enumerate() {
            let dr = f.rho[c] - self.rho_bar0;
            let ul = f.u[c] - self.u_s;
            let ur = f.u[c + 1] - self.u_s;
            l2 = l2 + w * (dr * dr + T::lit(0.5) * (ul * ul + ur * ur));
        }

        Ok(DiagnosticsRecord {
            t: s.t,
            mass: f.mass(),
            volume: s.volume(),
            energy: kinetic + internal_energy(s, law)?,
            energy_pi: kinetic + pi_sum,
            dissipation_rate: dissipation,
            dissipation_cum,
            bd_entropy: bd_entropy(s, p)?,
            min_rho: if pinned == s.n_cells() { T::zero() } else { min_rho },
            max_rho,
            pinned_cells: pinned,
            ux_linf,
            ux_linf_cum: ux_cum,
            l2_dist: l2.sqrt(),
            g_val: g_functional_field(&f, self.b),
            length_defect: f.endpoint_defect(),
        })
    }
}

/// One-shot [`DiagnosticsTracker::sample`] with no history.
pub fn sample<T: Scalar>(
    s: &StaggeredState<T>,
    p: &ModelParams<T>,
    cfg: &DiagnosticsConfig<T>,
) -> Result<DiagnosticsRecord<T>> {
    DiagnosticsTracker::new(s, p, cfg)?.sample(s)
}

/// Earliest sample time `T` such that `min_rho >= rho_thresh` at every sample in
/// `[T, T + hold]`. The series must extend to `T + hold`.
pub fn vacuum_vanish_time<T: Scalar>(series: &[DiagnosticsRecord<T>], rho_thresh: T, hold: T) -> Option<T> {
    let last_t = series.last()?.t;
    // next_bad[i]: first index >= i below the threshold
    let mut next_bad = vec![None; series.len() + 1];
    for i in (0..series.len()).rev() {
        next_bad[i] = if series[i].min_rho < rho_thresh {
            Some(i)
        } else {
            next_bad[i + 1]
        };
    }
    series.iter().enumerate().find_map(|(i, r)| {
        if r.min_rho < rho_thresh || r.t + hold > last_t {
            return None;
        }
        match next_bad[i] {
            Some(j) if series[j].t <= r.t + hold => None,
            _ => Some(r.t),
        }
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlowupIndicator<T> {
    /// `int_{t1}^{t1 + eta} ||u_x||_inf ds`.
    pub integral: T,
    pub peak: T,
    pub peak_t: T,
}

fn interp<T: Scalar>(a: (T, T), b: (T, T), t: T) -> T {
    if b.0 == a.0 {
        return a.1;
    }
    a.1 + (b.1 - a.1) * (t - a.0) / (b.0 - a.0)
}

/// Trapezoid integral of `(t, value)` samples over `[from, to]`, with linear
/// interpolation at the window ends.
pub fn integrate_window<T: Scalar>(points: &[(T, T)], from: T, to: T) -> Result<T> {
    let tol = T::epsilon() * T::lit(64.0) * (T::one() + to.abs());
    let coverage = Error::Coverage {
        from: from.to_f64_lossy(),
        to: to.to_f64_lossy(),
    };
    let (first, last) = match (points.first(), points.last()) {
        (Some(f), Some(l)) => (f.0, l.0),
        _ => return Err(coverage),
    };
    if first > from + tol || last < to - tol || to < from {
        return Err(coverage);
    }
    let mut acc = T::zero();
    for w in points.windows(2) {
        let (a, b) = (w[0], w[1]);
        let lo = a.0.max(from);
        let hi = b.0.min(to);
        if hi <= lo {
            continue;
        }
        let fa = interp(a, b, lo);
        let fb = interp(a, b, hi);
        acc = acc + T::lit(0.5) * (hi - lo) * (fa + fb);
    }
    Ok(acc)
}

pub fn blowup_indicator<T: Scalar>(series: &[DiagnosticsRecord<T>], t1: T, eta: T) -> Result<BlowupIndicator<T>> {
    let points: Vec<(T, T)> = series.iter().map(|r| (r.t, r.ux_linf)).collect();
    let integral = integrate_window(&points, t1, t1 + eta)?;
    let (peak_t, peak) = points
        .iter()
        .filter(|(t, _)| *t >= t1 && *t <= t1 + eta)
        .fold((t1, T::zero()), |acc, &(t, v)| if v > acc.1 { (t, v) } else { acc });
    Ok(BlowupIndicator {
        integral,
        peak,
        peak_t,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecayFit<T> {
    pub c0: T,
    pub mu0: T,
    /// Coefficient of determination of the log-linear fit; 0 when undefined.
    pub r2: T,
    /// False when the log-distances have zero variance.
    pub r2_defined: bool,
    pub t_start: T,
    pub used: usize,
    /// Samples dropped for being at or below the resolution floor.
    pub excluded: usize,
}

/// Distances at or below this are indistinguishable from zero in `T`.
pub fn resolution_floor<T: Scalar>() -> T {
    T::epsilon() * T::lit(1e6)
}

/// Least-squares fit of `log y = log c0 - mu0 (t - t_start)` over `t >= t_start`.
pub fn fit_exponential<T: Scalar>(points: &[(T, T)], t_start: T, floor: T) -> Result<DecayFit<T>> {
    let mut excluded = 0;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for &(t, y) in points.iter().filter(|(t, _)| *t >= t_start) {
        if y > floor && y.is_finite() {
            xs.push(t - t_start);
            ys.push(y.ln());
        } else {
            excluded += 1;
        }
    }
    if xs.len() < 5 {
        return Err(Error::InsufficientSamples {
            needed: 5,
            found: xs.len(),
            excluded,
        });
    }
    let n = T::from_usize_lossy(xs.len());
    let mx = xs.iter().copied().sum::<T>() / n;
    let my = ys.iter().copied().sum::<T>() / n;
    let sxx: T = xs.iter().map(|&x| (x - mx) * (x - mx)).sum();
    let sxy: T = xs.iter().zip(&ys).map(|(&x, &y)| (x - mx) * (y - my)).sum();
    let syy: T = ys.iter().map(|&y| (y - my) * (y - my)).sum();
    let slope = if sxx > T::zero() { sxy / sxx } else { T::zero() };
    let intercept = my - slope * mx;
    let scale = ys.iter().fold(T::zero(), |m, y| m.max(y.abs())) + T::one();
    let (r2, r2_defined) = if syy > T::epsilon() * T::epsilon() * scale * scale * n {
        let ss_res: T = xs
            .iter()
            .zip(&ys)
            .map(|(&x, &y)| {
                let e = y - (intercept + slope * x);
                e * e
            })
            .sum();
        ((T::one() - ss_res / syy).max(T::zero()).min(T::one()), true)
    } else {
        (T::zero(), false)
    };
    Ok(DecayFit {
        c0: intercept.exp(),
        mu0: -slope,
        r2,
        r2_defined,
        t_start,
        used: xs.len(),
        excluded,
    })
}

/// Exponential fit of `l2_dist` from `t_start` on, ignoring samples below [`resolution_floor`].
pub fn decay_fit<T: Scalar>(series: &[DiagnosticsRecord<T>], t_start: T) -> Result<DecayFit<T>> {
    let points: Vec<(T, T)> = series.iter().map(|r| (r.t, r.l2_dist)).collect();
    fit_exponential(&points, t_start, resolution_floor())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnvelopeFit<T> {
    pub a_minus: T,
    pub a_plus: T,
    pub sigma_used: T,
    /// Worst relative departure from the power law with the geometric-mean constant.
    pub max_violation: T,
    pub cells: usize,
}

/// Tightest constants with `a_minus |x - X0|^sigma <= rho <= a_plus |x - X0|^sigma`
/// over cell midpoints within `window` of `x_vac`, skipping the cell containing `x_vac`.
pub fn envelope_fit<T: Scalar>(f: &EulerianField<T>, x_vac: T, sigma: T, window: T) -> Result<EnvelopeFit<T>> {
    let mut ratios = Vec::new();
    for (c, mid) in f.midpoints().into_iter().enumerate() {
        let contains = f.x[c] <= x_vac && x_vac <= f.x[c + 1];
        let d = (mid - x_vac).abs();
        if contains || d > window || d == T::zero() {
            continue;
        }
        ratios.push(f.rho[c] / d.powf(sigma));
    }
    if ratios.is_empty() {
        return Err(Error::EmptyFitWindow);
    }
    let a_minus = ratios.iter().copied().fold(T::infinity(), T::min);
    let a_plus = ratios.iter().copied().fold(T::zero(), T::max);
    let mean = (a_minus * a_plus).sqrt();
    let max_violation = if mean > T::zero() {
        ratios
            .iter()
            .fold(T::zero(), |m, &r| m.max((r / mean - T::one()).abs()))
    } else {
        T::infinity()
    };
    Ok(EnvelopeFit {
        a_minus,
        a_plus,
        sigma_used: sigma,
        max_violation,
        cells: ratios.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn record(t: f64, min_rho: f64) -> DiagnosticsRecord<f64> {
        DiagnosticsRecord {
            t,
            min_rho,
            ..Default::default()
        }
    }

    #[test]
    fn uniform_rest_state() {
        let s = StaggeredState::uniform(8, 1.0, 0.0, BoundaryCondition::Dirichlet).unwrap();
        let r = sample(&s, &ModelParams::default(), &DiagnosticsConfig::default()).unwrap();
        assert_relative_eq!(r.energy, 1.0, max_relative = 1e-14);
        assert_relative_eq!(r.bd_entropy, 1.0, max_relative = 1e-14);
        assert_relative_eq!(r.volume, 1.0, max_relative = 1e-14);
        assert_relative_eq!(r.mass, 1.0, max_relative = 1e-14);
        assert_eq!(r.ux_linf, 0.0);
        assert_eq!(r.g_val, 0.0);
        assert_eq!(r.l2_dist, 0.0);
    }

    #[test]
    fn uniform_moving_periodic_energy() {
        let s = StaggeredState::uniform(8, 1.0, 1.0, BoundaryCondition::Periodic).unwrap();
        let r = sample(&s, &ModelParams::default(), &DiagnosticsConfig::default()).unwrap();
        assert_relative_eq!(r.energy, 1.5, max_relative = 1e-14);
        // u_s is the mean velocity, so the state is at equilibrium
        assert_eq!(r.l2_dist, 0.0);
    }

    #[test]
    fn pinned_cell_excluded_from_extrema() {
        let s = StaggeredState::new(
            vec![0.4, 0.9, 0.0, 0.9, 0.4],
            vec![0.0; 6],
            BoundaryCondition::Dirichlet,
            Some(2),
        )
        .unwrap();
        let r = sample(&s, &ModelParams::default(), &DiagnosticsConfig::default()).unwrap();
        assert_eq!(r.min_rho, 0.4);
        assert_eq!(r.max_rho, 0.9);
        assert_eq!(r.pinned_cells, 1);
        // pinned cell contributes nothing to the energy
        let expect = (0.4 + 0.9 + 0.9 + 0.4) * 0.2;
        assert_relative_eq!(r.energy, expect, max_relative = 1e-14);
    }

    #[test]
    fn default_b_shallow_water() {
        assert_eq!(default_b(&ModelParams::<f64>::default()), 3.0);
    }

    #[test]
    fn g_two_cell_hand_quadrature() {
        let f = EulerianField::new(vec![0.0, 0.5, 1.0], vec![0.0, 2.0], vec![0.0; 3], 0.0).unwrap();
        assert_relative_eq!(g_functional_field(&f, 1.0), 1.0, max_relative = 1e-15);
        let c = EulerianField::new(vec![0.0, 0.3, 1.0], vec![1.7, 1.7], vec![0.0; 3], 0.0).unwrap();
        assert_eq!(g_functional_field(&c, 3.0), 0.0);
    }

    #[test]
    fn velocity_gradient_examples() {
        let s = StaggeredState::new(
            vec![1.0, 1.0, 1.0],
            vec![0.0, 0.3, 0.6, 0.9],
            BoundaryCondition::FreeRight,
            None,
        )
        .unwrap();
        for v in velocity_gradient_field(&s) {
            assert_relative_eq!(v, 0.9, max_relative = 1e-14);
        }
        let p = StaggeredState::new(vec![1.0, 0.0, 1.0], vec![0.0, 1.0, -1.0, 0.0], BoundaryCondition::Dirichlet, Some(1))
            .unwrap();
        assert_eq!(velocity_gradient_field(&p)[1], 0.0);
        let z = StaggeredState::uniform(4, 1.0, 0.0, BoundaryCondition::Periodic).unwrap();
        assert!(velocity_gradient_field(&z).iter().all(|v| *v == 0.0));
    }

    #[test]
    fn vanish_time_examples() {
        let series: Vec<_> = (0..=100)
            .map(|i| {
                let t = i as f64 * 0.01;
                record(t, if t >= 0.5 { 0.06 } else { 0.01 })
            })
            .collect();
        let t0 = vacuum_vanish_time(&series, 0.05, 0.2).unwrap();
        assert!((t0 - 0.5).abs() < 1e-12);

        let never: Vec<_> = (0..10).map(|i| record(i as f64, 0.01)).collect();
        assert_eq!(vacuum_vanish_time(&never, 0.05, 1.0), None);

        // crosses at 0.3, dips at 0.4, sustained from 0.6
        let dip: Vec<_> = (0..=100)
            .map(|i| {
                let t = i as f64 * 0.01;
                let above = (0.3..0.4).contains(&t) || t >= 0.6 - 1e-12;
                record(t, if above { 0.1 } else { 0.0 })
            })
            .collect();
        let t0 = vacuum_vanish_time(&dip, 0.05, 0.2).unwrap();
        assert!((t0 - 0.6).abs() < 1e-12, "{t0}");
    }

    #[test]
    fn blowup_indicator_examples() {
        let zero: Vec<_> = (0..=10).map(|i| record(i as f64 * 0.1, 1.0)).collect();
        assert_eq!(blowup_indicator(&zero, 0.0, 1.0).unwrap().integral, 0.0);

        let flat: Vec<_> = (0..=40)
            .map(|i| DiagnosticsRecord {
                ux_linf: 3.0,
                ..record(i as f64 * 0.1, 1.0)
            })
            .collect();
        let b = blowup_indicator(&flat, 1.0, 2.0).unwrap();
        assert_relative_eq!(b.integral, 6.0, max_relative = 1e-12);

        let t1 = 0.2;
        let sing: Vec<_> = (0..=100)
            .map(|i| {
                let t = t1 + i as f64 * 0.001;
                DiagnosticsRecord {
                    ux_linf: 1.0 / (t - t1 + 0.01),
                    ..record(t, 1.0)
                }
            })
            .collect();
        let b = blowup_indicator(&sing, t1, 0.1).unwrap();
        let exact = (0.11f64 / 0.01).ln();
        assert!((b.integral - exact).abs() < 0.01 * exact);
        assert_relative_eq!(b.peak, 100.0, max_relative = 1e-9);
        assert!(blowup_indicator(&sing, t1, 0.2).is_err());
    }

    #[test]
    fn decay_fit_exact_exponential() {
        let pts: Vec<_> = (0..50).map(|i| {
            let t = i as f64 * 0.1;
            (t, 2.0 * (-3.0 * t).exp())
        }).collect();
        let fit = fit_exponential(&pts, 0.0, 0.0).unwrap();
        assert!((fit.c0 - 2.0).abs() < 1e-10);
        assert!((fit.mu0 - 3.0).abs() < 1e-10);
        assert!((fit.r2 - 1.0).abs() < 1e-10);
    }

    #[test]
    fn decay_fit_constant_series() {
        let pts: Vec<_> = (0..10).map(|i| (i as f64, 1.0)).collect();
        let fit = fit_exponential(&pts, 0.0, 0.0).unwrap();
        assert_eq!(fit.mu0, 0.0);
        assert_eq!(fit.r2, 0.0);
        assert!(!fit.r2_defined);
    }

    #[test]
    fn decay_fit_noisy() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let pts: Vec<_> = (0..200)
            .map(|i| {
                let t = i as f64 * 0.05;
                (t, 0.7 * (-1.3 * t).exp() * (1.0 + rng.gen_range(-0.01..0.01)))
            })
            .collect();
        let fit = fit_exponential(&pts, 0.0, 0.0).unwrap();
        assert!((fit.mu0 - 1.3).abs() < 0.05 * 1.3);
    }

    #[test]
    fn decay_fit_insufficient_and_excluded() {
        let pts = vec![(0.0, 1.0), (1.0, 0.5), (2.0, 0.0), (3.0, -1.0), (4.0, 0.1)];
        match fit_exponential(&pts, 0.0, 0.0) {
            Err(Error::InsufficientSamples { found, excluded, .. }) => {
                assert_eq!(found, 3);
                assert_eq!(excluded, 2);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn decay_fit_skips_resolution_floor() {
        let pts: Vec<_> = (0..100)
            .map(|i| {
                let t = i as f64 * 0.5;
                (t, (2.0 * (-t).exp()).max(1e-16))
            })
            .collect();
        let fit = fit_exponential(&pts, 0.0, resolution_floor()).unwrap();
        assert!((fit.mu0 - 1.0).abs() < 1e-10);
        assert!(fit.excluded > 0);
    }

    fn power_field(scale: f64, sigma: f64) -> EulerianField<f64> {
        EulerianField::sample(200, |x: f64| scale * (x - 0.5f64).abs().powf(sigma), |_| 0.0).unwrap()
    }

    #[test]
    fn envelope_exact_power_law() {
        let e = envelope_fit(&power_field(1.0, 2.0), 0.5, 2.0, 0.25).unwrap();
        assert_relative_eq!(e.a_minus, 1.0, max_relative = 1e-12);
        assert_relative_eq!(e.a_plus, 1.0, max_relative = 1e-12);
        let e = envelope_fit(&power_field(2.0, 2.0), 0.5, 2.0, 0.25).unwrap();
        assert_relative_eq!(e.a_minus, 2.0, max_relative = 1e-12);
        assert_relative_eq!(e.a_plus, 2.0, max_relative = 1e-12);
    }

    #[test]
    fn envelope_exponent_mismatch_grows() {
        let f = power_field(1.0, 1.0);
        let wide = envelope_fit(&f, 0.5, 2.0, 0.25).unwrap();
        let narrow = envelope_fit(&f, 0.5, 2.0, 0.02).unwrap();
        assert!(narrow.a_plus >= wide.a_plus);
        assert!(narrow.a_plus > 100.0);
        assert!(envelope_fit(&f, 0.5, 2.0, 1e-6).is_err());
    }

    proptest! {
        #[test]
        fn envelope_homogeneous(lambda in 0.01f64..100.0) {
            let a = envelope_fit(&power_field(1.0, 1.7), 0.5, 2.0, 0.3).unwrap();
            let b = envelope_fit(&power_field(lambda, 1.7), 0.5, 2.0, 0.3).unwrap();
            prop_assert!((b.a_minus - lambda * a.a_minus).abs() <= 1e-12 * b.a_minus);
            prop_assert!((b.a_plus - lambda * a.a_plus).abs() <= 1e-12 * b.a_plus);
        }

        #[test]
        fn g_reflection_invariant(seed in 0u64..500, b in 1.0f64..4.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = 9;
            let mut x = vec![0.0];
            for _ in 0..n {
                let last = *x.last().unwrap();
                x.push(last + rng.gen_range(0.05..0.2));
            }
            let rho: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..2.0)).collect();
            let f = EulerianField::new(x.clone(), rho.clone(), vec![0.0; n + 1], 0.0).unwrap();
            let end = x[n];
            let xr: Vec<f64> = x.iter().rev().map(|v| end - v).collect();
            let rr: Vec<f64> = rho.iter().rev().copied().collect();
            let fr = EulerianField::new(xr, rr, vec![0.0; n + 1], 0.0).unwrap();
            let (g1, g2) = (g_functional_field(&f, b), g_functional_field(&fr, b));
            prop_assert!((g1 - g2).abs() <= 1e-12 * (1.0 + g1.abs()));
        }

        #[test]
        fn decay_fit_round_trip(c0 in 0.01f64..100.0, mu in 0.0f64..5.0) {
            let pts: Vec<_> = (0..40).map(|i| {
                let t = 1.0 + i as f64 * 0.05;
                (t, c0 * (-mu * (t - 1.0)).exp())
            }).collect();
            let fit = fit_exponential(&pts, 1.0, 0.0).unwrap();
            prop_assert!((fit.c0 - c0).abs() <= 1e-10 * c0);
            prop_assert!((fit.mu0 - mu).abs() <= 1e-10);
        }

        #[test]
        fn bd_entropy_equals_energy_at_rest(rho in 0.1f64..5.0, n in 2usize..20) {
            let s = StaggeredState::uniform(n, rho, 0.0, BoundaryCondition::Dirichlet).unwrap();
            let p = ModelParams { eps: 0.1, ..ModelParams::default() };
            let e = energy(&s, &p).unwrap();
            prop_assert!((bd_entropy(&s, &p).unwrap() - e).abs() <= 1e-14 * e);
        }
    }
}
