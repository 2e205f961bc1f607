//! Explicit time stepping with positivity-guarded step rejection.

use std::fmt;
use std::str::FromStr;

use crate::diagnostics::{DiagnosticsConfig, DiagnosticsRecord, DiagnosticsTracker};
use crate::error::{Error, Result};
use crate::params::{validate_params, ModelParams};
use crate::scalar::Scalar;
use crate::scheme::{Scheme, StateDerivative};
use crate::state::StaggeredState;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Method {
    #[default]
    Rk4,
    /// Heun's method.
    Rk2,
    Euler,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Rk4, Method::Rk2, Method::Euler];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Rk4 => "rk4",
            Method::Rk2 => "rk2",
            Method::Euler => "euler",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| format!("unknown method `{s}` (expected rk4, rk2 or euler)"))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IntegratorConfig<T> {
    pub method: Method,
    pub cfl_safety: T,
    pub dt_max: T,
    pub dt_min: T,
    pub t_end: T,
    pub sample_interval: T,
    /// A step leaving any non-pinned density at or below this value is rejected.
    pub positivity_floor: T,
    /// Extra times at which the full state is kept.
    pub snapshot_times: Vec<T>,
    /// Keep the state every this often, in addition to `snapshot_times`.
    pub snapshot_interval: Option<T>,
}

impl<T: Scalar> Default for IntegratorConfig<T> {
    fn default() -> Self {
        IntegratorConfig {
            method: Method::Rk4,
            cfl_safety: T::lit(0.9),
            dt_max: T::lit(1e-2),
            dt_min: T::lit(1e-14),
            t_end: T::one(),
            sample_interval: T::lit(1e-2),
            positivity_floor: T::zero(),
            snapshot_times: Vec::new(),
            snapshot_interval: None,
        }
    }
}

impl<T: Scalar> IntegratorConfig<T> {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.cfl_safety,
            self.dt_max,
            self.dt_min,
            self.t_end,
            self.sample_interval,
            self.positivity_floor,
        ];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err(Error::Precondition("integrator settings must be finite".into()));
        }
        if !(self.cfl_safety > T::zero() && self.cfl_safety <= T::one()) {
            return Err(Error::constraint("0 < cfl_safety <= 1", self.cfl_safety));
        }
        if !(self.dt_min > T::zero()) {
            return Err(Error::constraint("dt_min > 0", self.dt_min));
        }
        if self.dt_min > self.dt_max {
            return Err(Error::constraint("dt_min <= dt_max", self.dt_min));
        }
        if self.t_end < T::zero() {
            return Err(Error::constraint("t_end >= 0", self.t_end));
        }
        if !(self.sample_interval > T::zero()) {
            return Err(Error::constraint("sample_interval > 0", self.sample_interval));
        }
        if self.positivity_floor < T::zero() {
            return Err(Error::constraint("positivity_floor >= 0", self.positivity_floor));
        }
        if let Some(&t) = self
            .snapshot_times
            .iter()
            .find(|&&t| !(t >= T::zero() && t <= self.t_end))
        {
            return Err(Error::constraint("snapshot time within [0, t_end]", t));
        }
        if let Some(iv) = self.snapshot_interval {
            if !(iv > T::zero()) || !iv.is_finite() {
                return Err(Error::constraint("snapshot_interval > 0", iv));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TerminationKind {
    Completed,
    PositivityFailure,
    DtUnderflow,
}

impl TerminationKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TerminationKind::Completed => "completed",
            TerminationKind::PositivityFailure => "positivity_failure",
            TerminationKind::DtUnderflow => "dt_underflow",
        }
    }
}

impl fmt::Display for TerminationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Termination<T> {
    pub kind: TerminationKind,
    /// Time reached.
    pub t: T,
    /// Cell whose density failed, if any.
    pub cell: Option<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunOutput<T> {
    pub series: Vec<DiagnosticsRecord<T>>,
    pub snapshots: Vec<StaggeredState<T>>,
    pub termination: Termination<T>,
    pub steps: usize,
    pub rejections: usize,
}

impl<T: Scalar> RunOutput<T> {
    pub fn completed(&self) -> bool {
        self.termination.kind == TerminationKind::Completed
    }
}

/// Largest step allowed by the explicit diffusion and acoustic limits.
pub fn stable_dt<T: Scalar>(s: &StaggeredState<T>, p: &ModelParams<T>, cfg: &IntegratorConfig<T>) -> T {
    let law = crate::params::Constitutive::new(p);
    let (mut max_k, mut max_c, mut max_rho) = (T::zero(), T::zero(), T::zero());
    for &r in &s.rho {
        max_k = max_k.max(law.diffusivity(r));
        max_c = max_c.max(law.sound_speed(r));
        max_rho = max_rho.max(r);
    }
    let tiny = T::min_positive_value();
    let h = s.h;
    let diffusive = if max_k > T::zero() {
        h * h / (T::lit(2.0) * max_k)
    } else {
        T::infinity()
    };
    let acoustic = h / (max_c * max_rho + tiny);
    let dt = cfg.cfl_safety * diffusive.min(acoustic).min(cfg.dt_max);
    dt.max(cfg.dt_min).min(cfg.dt_max)
}

/// Single-step driver holding the stage buffers.
#[derive(Clone, Debug)]
pub struct Stepper<T> {
    scheme: Scheme<T>,
    method: Method,
    floor: T,
    k: [StateDerivative<T>; 4],
    stage: Option<StaggeredState<T>>,
}

impl<T: Scalar> Stepper<T> {
    pub fn new(p: &ModelParams<T>, method: Method, positivity_floor: T) -> Self {
        let empty = || StateDerivative {
            drho: Vec::new(),
            du: Vec::new(),
            dorigin: T::zero(),
        };
        Stepper {
            scheme: Scheme::new(p),
            method,
            floor: positivity_floor,
            k: [empty(), empty(), empty(), empty()],
            stage: None,
        }
    }

    fn eval(&mut self, which: usize, s: &StaggeredState<T>) -> Result<()> {
        self.scheme.rhs_into(s, &mut self.k[which])
    }

    /// `stage = s + c * k[which]`
    fn build_stage(&mut self, s: &StaggeredState<T>, c: T, which: usize) {
        let stage = self.stage.get_or_insert_with(|| s.clone());
        stage.clone_from(s);
        let k = &self.k[which];
        for (r, d) in stage.rho.iter_mut().zip(&k.drho) {
            *r = *r + c * *d;
        }
        for (u, d) in stage.u.iter_mut().zip(&k.du) {
            *u = *u + c * *d;
        }
        stage.origin = stage.origin + c * k.dorigin;
        stage.t = stage.t + c;
    }

    fn stage_rhs(&mut self, s: &StaggeredState<T>, c: T, from: usize, into: usize) -> Result<()> {
        self.build_stage(s, c, from);
        let stage = self.stage.take().expect("stage built");
        let r = self.eval(into, &stage);
        self.stage = Some(stage);
        r
    }

    /// Advances `s` by `dt`. On error `s` is left unchanged and the step should be
    /// retried with a smaller `dt`.
    pub fn step(&mut self, s: &mut StaggeredState<T>, dt: T) -> Result<()> {
        if dt == T::zero() {
            return Ok(());
        }
        if !(dt > T::zero()) {
            return Err(Error::constraint("dt > 0", dt));
        }
        let half = T::lit(0.5) * dt;
        let weights: &[T] = match self.method {
            Method::Euler => {
                self.eval(0, s)?;
                &[T::one()][..]
            }
            Method::Rk2 => {
                self.eval(0, s)?;
                self.stage_rhs(s, dt, 0, 1)?;
                &[T::lit(0.5), T::lit(0.5)][..]
            }
            Method::Rk4 => {
                self.eval(0, s)?;
                self.stage_rhs(s, half, 0, 1)?;
                self.stage_rhs(s, half, 1, 2)?;
                self.stage_rhs(s, dt, 2, 3)?;
                let sixth = T::one() / T::lit(6.0);
                let third = T::one() / T::lit(3.0);
                &[sixth, third, third, sixth][..]
            }
        };
        let weights: Vec<T> = weights.iter().map(|&w| w * dt).collect();

        let mut next = self.stage.take().unwrap_or_else(|| s.clone());
        next.clone_from(s);
        for (i, r) in next.rho.iter_mut().enumerate() {
            let inc = weights.iter().enumerate().map(|(m, &w)| w * self.k[m].drho[i]).sum::<T>();
            *r = *r + inc;
        }
        for (j, u) in next.u.iter_mut().enumerate() {
            let inc = weights.iter().enumerate().map(|(m, &w)| w * self.k[m].du[j]).sum::<T>();
            *u = *u + inc;
        }
        next.origin = next.origin
            + weights
                .iter()
                .enumerate()
                .map(|(m, &w)| w * self.k[m].dorigin)
                .sum::<T>();
        next.t = s.t + dt;

        let n = next.rho.len();
        if next.bc.left_is_wall() {
            next.u[0] = T::zero();
        }
        if next.bc.right_is_wall() {
            next.u[n] = T::zero();
        }
        if let Some(k) = next.pinned_cell {
            next.rho[k] = T::zero();
        }

        let check = self.accept(&next);
        if check.is_ok() {
            std::mem::swap(s, &mut next);
        }
        self.stage = Some(next);
        check
    }

    fn accept(&self, s: &StaggeredState<T>) -> Result<()> {
        for (i, &r) in s.rho.iter().enumerate() {
            if s.is_pinned(i) {
                continue;
            }
            if !(r > self.floor) || !r.is_finite() {
                return Err(Error::NonPositiveDensity {
                    cell: i,
                    value: r.to_f64_lossy(),
                });
            }
        }
        if s.u.iter().any(|v| !v.is_finite()) || !s.origin.is_finite() {
            return Err(Error::InvalidState("non-finite velocity".into()));
        }
        Ok(())
    }
}

/// One step of `cfg.method`, returning the advanced state.
pub fn step<T: Scalar>(
    s: &StaggeredState<T>,
    dt: T,
    p: &ModelParams<T>,
    cfg: &IntegratorConfig<T>,
) -> Result<StaggeredState<T>> {
    let mut next = s.clone();
    Stepper::new(p, cfg.method, cfg.positivity_floor).step(&mut next, dt)?;
    Ok(next)
}

/// Upcoming times of a regular grid `k * interval` and an explicit sorted list.
struct Schedule<T> {
    interval: Option<T>,
    k: usize,
    extra: Vec<T>,
    pos: usize,
}

impl<T: Scalar> Schedule<T> {
    fn new(interval: Option<T>, mut extra: Vec<T>) -> Self {
        extra.sort_by(|a, b| a.partial_cmp(b).expect("finite snapshot times"));
        Schedule {
            interval,
            k: 0,
            extra,
            pos: 0,
        }
    }

    fn next(&self) -> T {
        let grid = self
            .interval
            .map(|iv| iv * T::from_usize_lossy(self.k))
            .unwrap_or_else(T::infinity);
        let listed = self.extra.get(self.pos).copied().unwrap_or_else(T::infinity);
        grid.min(listed)
    }

    /// Consumes every entry at or before `t`; true if any was due.
    fn consume(&mut self, t: T) -> bool {
        let mut due = false;
        if let Some(iv) = self.interval {
            while iv * T::from_usize_lossy(self.k) <= t {
                self.k += 1;
                due = true;
            }
        }
        while self.pos < self.extra.len() && self.extra[self.pos] <= t {
            self.pos += 1;
            due = true;
        }
        due
    }
}

/// Integrates `s0` to `cfg.t_end`, sampling diagnostics every `sample_interval`.
pub fn run<T: Scalar>(
    s0: &StaggeredState<T>,
    p: &ModelParams<T>,
    cfg: &IntegratorConfig<T>,
    diag_cfg: &DiagnosticsConfig<T>,
) -> Result<RunOutput<T>> {
    validate_params(p)?;
    cfg.validate()?;
    s0.validate()?;

    let mut s = s0.clone();
    let t_end = cfg.t_end;
    let mut tracker = DiagnosticsTracker::new(&s, p, diag_cfg)?;
    let mut stepper = Stepper::new(p, cfg.method, cfg.positivity_floor);

    let mut samples = Schedule::new(Some(cfg.sample_interval), vec![t_end]);
    let mut snaps = Schedule::new(cfg.snapshot_interval, cfg.snapshot_times.clone());
    let mut series = Vec::new();
    let mut snapshots = Vec::new();

    let record = |s: &StaggeredState<T>,
                  tracker: &mut DiagnosticsTracker<T>,
                  samples: &mut Schedule<T>,
                  snaps: &mut Schedule<T>,
                  series: &mut Vec<DiagnosticsRecord<T>>,
                  snapshots: &mut Vec<StaggeredState<T>>|
     -> Result<()> {
        if samples.consume(s.t) {
            series.push(tracker.sample(s)?);
        }
        if snaps.consume(s.t) {
            snapshots.push(s.clone());
        }
        Ok(())
    };
    record(&s, &mut tracker, &mut samples, &mut snaps, &mut series, &mut snapshots)?;

    let mut steps = 0usize;
    let mut rejections = 0usize;
    let mut termination = Termination {
        kind: TerminationKind::Completed,
        t: s.t,
        cell: None,
    };

    while s.t < t_end {
        let target = samples.next().min(snaps.next()).min(t_end);
        let gap = target - s.t;
        let mut dt = stable_dt(&s, p, cfg);
        let mut lands = false;
        if dt >= gap {
            dt = gap;
            lands = true;
        }
        loop {
            match stepper.step(&mut s, dt) {
                Ok(()) => break,
                Err(e) => {
                    rejections += 1;
                    dt = dt * T::lit(0.5);
                    lands = false;
                    if dt < cfg.dt_min {
                        let (kind, cell) = match e {
                            Error::NonPositiveDensity { cell, .. } => {
                                (TerminationKind::PositivityFailure, Some(cell))
                            }
                            _ => (TerminationKind::DtUnderflow, None),
                        };
                        termination = Termination { kind, t: s.t, cell };
                        break;
                    }
                }
            }
        }
        if termination.kind != TerminationKind::Completed {
            break;
        }
        steps += 1;
        if lands {
            // remove roundoff so sample times are exact
            s.t = target;
        }
        record(&s, &mut tracker, &mut samples, &mut snaps, &mut series, &mut snapshots)?;
        termination.t = s.t;
    }

    if termination.kind != TerminationKind::Completed
        && series.last().is_none_or(|r| r.t < s.t)
    {
        series.push(tracker.sample(&s)?);
    }

    Ok(RunOutput {
        series,
        snapshots,
        termination,
        steps,
        rejections,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::BoundaryCondition;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn smooth_periodic(n: usize) -> StaggeredState<f64> {
        let rho: Vec<f64> = (0..n)
            .map(|i| 1.0 + 0.5 * (2.0 * std::f64::consts::PI * (i as f64 + 0.5) / n as f64).sin())
            .collect();
        StaggeredState::new(rho, vec![0.0; n], BoundaryCondition::Periodic, None).unwrap()
    }

    #[test]
    fn stable_dt_diffusion_limited() {
        let s = StaggeredState::uniform(100, 1.0, 0.0, BoundaryCondition::Periodic).unwrap();
        let mut s = s;
        s.h = 0.01;
        // K = 1 and acoustic limit 0.01 / sqrt(2)
        let p = ModelParams::default();
        let cfg = IntegratorConfig {
            cfl_safety: 0.5,
            ..IntegratorConfig::default()
        };
        assert_relative_eq!(stable_dt(&s, &p, &cfg), 2.5e-5, max_relative = 1e-15);
        s.h = 0.005;
        assert_relative_eq!(stable_dt(&s, &p, &cfg), 2.5e-5 / 4.0, max_relative = 1e-15);
    }

    #[test]
    fn stable_dt_all_vacuum() {
        let mut s = StaggeredState::uniform(3, 1.0, 0.0, BoundaryCondition::Periodic).unwrap();
        s.rho = vec![0.0; 3];
        let cfg = IntegratorConfig::default();
        assert_eq!(stable_dt(&s, &ModelParams::default(), &cfg), cfg.dt_max * cfg.cfl_safety);
    }

    #[test]
    fn equilibrium_step_is_identity() {
        let s = StaggeredState::uniform(11, 1.0, 0.0, BoundaryCondition::Dirichlet).unwrap();
        let p = ModelParams::default();
        for method in Method::ALL {
            let cfg = IntegratorConfig {
                method,
                ..IntegratorConfig::default()
            };
            let next = step(&s, 1e-3, &p, &cfg).unwrap();
            assert_eq!(next.rho, s.rho);
            assert_eq!(next.u, s.u);
            assert_eq!(next.t, 1e-3);
        }
        let same = step(&s, 0.0, &p, &IntegratorConfig::default()).unwrap();
        assert_eq!(same, s);
    }

    fn richardson_ratio(method: Method, dt: f64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 32;
        let mut s = smooth_periodic(n);
        let phase: f64 = rng.gen_range(0.0..1.0);
        for (j, u) in s.u.iter_mut().enumerate() {
            *u = 0.2 * (2.0 * std::f64::consts::PI * (j as f64 / n as f64 + phase)).cos();
        }
        let p = ModelParams::default();
        let cfg = IntegratorConfig {
            method,
            ..IntegratorConfig::default()
        };
        let defect = |dt: f64| {
            let one = step(&s, dt, &p, &cfg).unwrap();
            let two = step(&step(&s, dt / 2.0, &p, &cfg).unwrap(), dt / 2.0, &p, &cfg).unwrap();
            one.rho
                .iter()
                .zip(&two.rho)
                .chain(one.u.iter().zip(&two.u))
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        };
        defect(dt) / defect(dt / 2.0)
    }

    #[test]
    fn local_error_orders() {
        // one step against two half steps differs by the local error, O(dt^{p+1})
        for (method, expect) in [(Method::Rk4, 32.0), (Method::Rk2, 8.0), (Method::Euler, 4.0)] {
            let ratio = richardson_ratio(method, 1e-4);
            assert!((ratio - expect).abs() < 0.05 * expect, "{method}: {ratio}");
        }
    }

    #[test]
    fn zero_length_run() {
        let s = smooth_periodic(16);
        let cfg = IntegratorConfig {
            t_end: 0.0,
            ..IntegratorConfig::default()
        };
        let out = run(&s, &ModelParams::default(), &cfg, &DiagnosticsConfig::default()).unwrap();
        assert_eq!(out.series.len(), 1);
        assert_eq!(out.series[0].t, 0.0);
        assert!(out.completed());
    }

    #[test]
    fn equilibrium_run_is_static() {
        let s = StaggeredState::uniform(21, 1.0, 0.0, BoundaryCondition::Dirichlet).unwrap();
        let cfg = IntegratorConfig {
            t_end: 1.0,
            sample_interval: 0.1,
            ..IntegratorConfig::default()
        };
        let out = run(&s, &ModelParams::default(), &cfg, &DiagnosticsConfig::default()).unwrap();
        assert_eq!(out.series.len(), 11);
        for r in &out.series {
            let mut r = *r;
            r.t = 0.0;
            let mut first = out.series[0];
            first.t = 0.0;
            assert_eq!(r, first);
        }
    }

    #[test]
    fn sample_times_exact_and_increasing() {
        let s = smooth_periodic(24);
        let cfg = IntegratorConfig {
            t_end: 0.35,
            sample_interval: 0.1,
            snapshot_times: vec![0.05, 0.35],
            ..IntegratorConfig::default()
        };
        let out = run(&s, &ModelParams::default(), &cfg, &DiagnosticsConfig::default()).unwrap();
        let times: Vec<f64> = out.series.iter().map(|r| r.t).collect();
        assert_eq!(times, vec![0.0, 0.1, 0.2, 0.30000000000000004, 0.35]);
        let snap_t: Vec<f64> = out.snapshots.iter().map(|s| s.t).collect();
        assert_eq!(snap_t, vec![0.05, 0.35]);
    }

    #[test]
    fn smooth_run_energy_decreases_and_is_deterministic() {
        let s = smooth_periodic(48);
        let cfg = IntegratorConfig {
            t_end: 0.2,
            ..IntegratorConfig::default()
        };
        let p = ModelParams::default();
        let a = run(&s, &p, &cfg, &DiagnosticsConfig::default()).unwrap();
        let b = run(&s, &p, &cfg, &DiagnosticsConfig::default()).unwrap();
        assert_eq!(a, b);
        for w in a.series.windows(2) {
            assert!(w[1].energy < w[0].energy);
        }
        let drift = (a.series.last().unwrap().volume - a.series[0].volume).abs();
        assert!(drift < 1e-10, "{drift}");
    }

    #[test]
    fn underflow_reported() {
        let s = smooth_periodic(16);
        let cfg = IntegratorConfig {
            dt_min: 1e-3,
            dt_max: 1e-3,
            t_end: 0.1,
            // an impossible floor rejects every step
            positivity_floor: 10.0,
            ..IntegratorConfig::default()
        };
        let out = run(&s, &ModelParams::default(), &cfg, &DiagnosticsConfig::default()).unwrap();
        assert_eq!(out.termination.kind, TerminationKind::PositivityFailure);
        assert_eq!(out.termination.t, 0.0);
        assert!(out.termination.cell.is_some());
    }

    #[test]
    fn config_validation() {
        let bad = IntegratorConfig::<f64> {
            dt_min: 1.0,
            dt_max: 0.1,
            ..IntegratorConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = IntegratorConfig::<f64> {
            cfl_safety: 1.5,
            ..IntegratorConfig::default()
        };
        assert!(bad.validate().is_err());
        assert_eq!("rk2".parse::<Method>().unwrap(), Method::Rk2);
        assert!("rk3".parse::<Method>().is_err());
    }
}
