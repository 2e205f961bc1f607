//! Initial data: vacuum profiles, smooth states, regularization and projection
//! onto the Lagrangian grid.

use std::fmt;
use std::str::FromStr;

use crate::coords::eulerian_to_lagrangian;
use crate::error::{Error, Result};
use crate::integrator::IntegratorConfig;
use crate::params::{exponent_window, ModelParams};
use crate::scalar::Scalar;
use crate::state::{BoundaryCondition, EulerianField, StaggeredState};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum VelocityInit<T> {
    Zero,
    /// `amp sin(2 pi freq x)`.
    Sine { amp: T, freq: T },
    Constant(T),
}

impl<T: Scalar> VelocityInit<T> {
    pub fn eval(&self, x: T) -> T {
        match *self {
            VelocityInit::Zero => T::zero(),
            VelocityInit::Sine { amp, freq } => amp * (T::lit(2.0) * T::PI() * freq * x).sin(),
            VelocityInit::Constant(c) => c,
        }
    }

    pub fn is_zero(&self) -> bool {
        match *self {
            VelocityInit::Zero => true,
            VelocityInit::Sine { amp, .. } => amp == T::zero(),
            VelocityInit::Constant(c) => c == T::zero(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ScenarioKind<T> {
    PointVacuum,
    PieceVacuum,
    /// `1 + 0.5 sin(2 pi x)`.
    SmoothPeriodic,
    /// `1 + 0.5 cos(pi x)`.
    SmoothDirichlet,
    /// Piecewise-linear profile through `(x, rho, u)` samples on `[0, 1]`.
    Custom { x: Vec<T>, rho: Vec<T>, u: Vec<T> },
}

impl<T> ScenarioKind<T> {
    pub fn tag(&self) -> &'static str {
        match self {
            ScenarioKind::PointVacuum => "point_vacuum",
            ScenarioKind::PieceVacuum => "piece_vacuum",
            ScenarioKind::SmoothPeriodic => "smooth_periodic",
            ScenarioKind::SmoothDirichlet => "smooth_dirichlet",
            ScenarioKind::Custom { .. } => "custom",
        }
    }

    pub fn has_vacuum(&self) -> bool {
        matches!(self, ScenarioKind::PointVacuum | ScenarioKind::PieceVacuum)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioSpec<T> {
    pub kind: ScenarioKind<T>,
    pub sigma: T,
    /// Envelope constants left of the vacuum (and of a point vacuum).
    pub a0: T,
    pub a1: T,
    /// Envelope constants right of a vacuum block.
    pub b0: T,
    pub b1: T,
    pub x0: T,
    pub x1: T,
    pub u0: VelocityInit<T>,
    pub n: usize,
    pub bc: BoundaryCondition,
    pub pinned: bool,
    /// Resolution of the Eulerian profile before projection.
    pub eulerian_cells: usize,
}

impl<T: Scalar> Default for ScenarioSpec<T> {
    fn default() -> Self {
        ScenarioSpec {
            kind: ScenarioKind::PointVacuum,
            sigma: T::lit(2.0),
            a0: T::one(),
            a1: T::one(),
            b0: T::one(),
            b1: T::one(),
            x0: T::lit(0.5),
            x1: T::lit(0.5),
            u0: VelocityInit::Zero,
            n: 201,
            bc: BoundaryCondition::Dirichlet,
            pinned: false,
            eulerian_cells: 4096,
        }
    }
}

/// A constructed Eulerian profile and the factor applied to normalize its mass.
#[derive(Clone, Debug, PartialEq)]
pub struct InitialProfile<T> {
    pub field: EulerianField<T>,
    pub scale: T,
    /// Envelope constants after normalization, `(lower, upper)` per flank.
    pub envelope_left: (T, T),
    pub envelope_right: (T, T),
    /// False for nonzero velocity next to a vacuum, where higher-order
    /// compatibility of the data is not checked.
    pub compatibility_verified: bool,
}

fn check_sigma<T: Scalar>(sigma: T, p: &ModelParams<T>) -> Result<()> {
    let w = exponent_window(p.alpha, p.gamma, p.n_reg)?;
    if !w.contains_sigma(sigma) {
        return Err(Error::SigmaOutsideWindow {
            sigma: sigma.to_f64_lossy(),
            lo: w.sigma_minus.to_f64_lossy(),
            hi: w.sigma_plus.to_f64_lossy(),
        });
    }
    Ok(())
}

fn check_unit_interval<T: Scalar>(x: T) -> Result<()> {
    if !(x > T::zero() && x < T::one()) {
        return Err(Error::OutOfDomain {
            x: x.to_f64_lossy(),
            lo: 0.0,
            hi: 1.0,
        });
    }
    Ok(())
}

fn check_envelope<T: Scalar>(lo: T, hi: T) -> Result<()> {
    if !(lo > T::zero()) {
        return Err(Error::constraint("envelope lower constant > 0", lo));
    }
    if lo > hi {
        return Err(Error::constraint("envelope constants ordered", hi));
    }
    Ok(())
}

/// Samples `rho_fn` at midpoints and `u_fn` at nodes of `cells` uniform cells,
/// then rescales the density to unit mass.
fn normalized<T: Scalar>(
    cells: usize,
    bc: BoundaryCondition,
    rho_fn: impl Fn(T) -> T,
    u_fn: impl Fn(T) -> T,
) -> Result<(EulerianField<T>, T)> {
    let mut f = EulerianField::sample(cells, rho_fn, u_fn)?;
    let mass = f.mass();
    if !(mass > T::zero()) {
        return Err(Error::ZeroMass);
    }
    let scale = T::one() / mass;
    for r in &mut f.rho {
        *r = *r * scale;
    }
    if bc.left_is_wall() {
        f.u[0] = T::zero();
    }
    if bc.right_is_wall() {
        f.u[cells] = T::zero();
    }
    Ok((f, scale))
}

/// `rho_0 = (A0 + A1) / 2 |x - x0|^sigma`, normalized to unit mass.
pub fn ic_point_vacuum<T: Scalar>(spec: &ScenarioSpec<T>, p: &ModelParams<T>) -> Result<InitialProfile<T>> {
    check_unit_interval(spec.x0)?;
    check_envelope(spec.a0, spec.a1)?;
    check_sigma(spec.sigma, p)?;
    let c = T::lit(0.5) * (spec.a0 + spec.a1);
    let (x0, sigma, u0) = (spec.x0, spec.sigma, spec.u0);
    let (field, scale) = normalized(
        spec.eulerian_cells,
        spec.bc,
        |x: T| c * (x - x0).abs().powf(sigma),
        |x| u0.eval(x),
    )?;
    let env = (spec.a0 * scale, spec.a1 * scale);
    Ok(InitialProfile {
        field,
        scale,
        envelope_left: env,
        envelope_right: env,
        compatibility_verified: u0.is_zero(),
    })
}

/// Power-law flanks around the vacuum block `[x0, x1]`, normalized to unit mass.
pub fn ic_piece_vacuum<T: Scalar>(spec: &ScenarioSpec<T>, p: &ModelParams<T>) -> Result<InitialProfile<T>> {
    check_unit_interval(spec.x0)?;
    check_unit_interval(spec.x1)?;
    if !(spec.x0 < spec.x1) {
        return Err(Error::Precondition("vacuum block needs x0 < x1".into()));
    }
    check_envelope(spec.a0, spec.a1)?;
    check_envelope(spec.b0, spec.b1)?;
    check_sigma(spec.sigma, p)?;
    let ca = T::lit(0.5) * (spec.a0 + spec.a1);
    let cb = T::lit(0.5) * (spec.b0 + spec.b1);
    let (x0, x1, sigma, u0) = (spec.x0, spec.x1, spec.sigma, spec.u0);
    let (field, scale) = normalized(
        spec.eulerian_cells,
        spec.bc,
        |x: T| {
            if x < x0 {
                ca * (x0 - x).powf(sigma)
            } else if x > x1 {
                cb * (x - x1).powf(sigma)
            } else {
                T::zero()
            }
        },
        |x: T| if x >= x0 && x <= x1 { T::zero() } else { u0.eval(x) },
    )?;
    Ok(InitialProfile {
        field,
        scale,
        envelope_left: (spec.a0 * scale, spec.a1 * scale),
        envelope_right: (spec.b0 * scale, spec.b1 * scale),
        compatibility_verified: u0.is_zero(),
    })
}

fn smooth<T: Scalar>(spec: &ScenarioSpec<T>, rho_fn: impl Fn(T) -> T) -> Result<InitialProfile<T>> {
    let u0 = spec.u0;
    let (field, scale) = normalized(spec.eulerian_cells, spec.bc, rho_fn, |x| u0.eval(x))?;
    Ok(InitialProfile {
        field,
        scale,
        envelope_left: (T::zero(), T::zero()),
        envelope_right: (T::zero(), T::zero()),
        compatibility_verified: true,
    })
}

fn interpolate<T: Scalar>(xs: &[T], ys: &[T], x: T) -> T {
    let k = xs.partition_point(|&v| v <= x);
    if k == 0 {
        return ys[0];
    }
    if k == xs.len() {
        return ys[xs.len() - 1];
    }
    let (xa, xb) = (xs[k - 1], xs[k]);
    ys[k - 1] + (ys[k] - ys[k - 1]) * (x - xa) / (xb - xa)
}

fn custom<T: Scalar>(spec: &ScenarioSpec<T>, x: &[T], rho: &[T], u: &[T]) -> Result<InitialProfile<T>> {
    if x.len() < 2 || rho.len() != x.len() || u.len() != x.len() {
        return Err(Error::Precondition(
            "custom profile needs at least two samples with matching x, rho, u".into(),
        ));
    }
    if x.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::Precondition("custom sample positions must increase".into()));
    }
    if rho.iter().any(|r| !(*r >= T::zero()) || !r.is_finite()) {
        return Err(Error::Precondition("custom densities must be non-negative".into()));
    }
    let (field, scale) = normalized(
        spec.eulerian_cells,
        spec.bc,
        |v| interpolate(x, rho, v),
        |v| interpolate(x, u, v),
    )?;
    let verified = (0..x.len()).all(|i| rho[i] > T::zero() || u[i] == T::zero());
    Ok(InitialProfile {
        field,
        scale,
        envelope_left: (T::zero(), T::zero()),
        envelope_right: (T::zero(), T::zero()),
        compatibility_verified: verified,
    })
}

/// Eulerian initial profile for any scenario kind.
pub fn initial_profile<T: Scalar>(spec: &ScenarioSpec<T>, p: &ModelParams<T>) -> Result<InitialProfile<T>> {
    if spec.eulerian_cells == 0 {
        return Err(Error::Precondition("eulerian_cells must be positive".into()));
    }
    match &spec.kind {
        ScenarioKind::PointVacuum => ic_point_vacuum(spec, p),
        ScenarioKind::PieceVacuum => ic_piece_vacuum(spec, p),
        ScenarioKind::SmoothPeriodic => {
            smooth(spec, |x| T::one() + T::lit(0.5) * (T::lit(2.0) * T::PI() * x).sin())
        }
        ScenarioKind::SmoothDirichlet => smooth(spec, |x| T::one() + T::lit(0.5) * (T::PI() * x).cos()),
        ScenarioKind::Custom { x, rho, u } => custom(spec, x, rho, u),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Regularized<T> {
    pub field: EulerianField<T>,
    /// Lower bound `c0 eps^{1/(2 alpha - 2 theta)}` of the output density.
    pub floor: T,
    /// False when `eps = 0` and the input is returned unchanged.
    pub applied: bool,
}

/// Lifts the density to at least `c0_floor eps^{1/(2 alpha - 2 theta)}` while keeping unit mass.
///
/// The output is `s rho_0 + floor` with `s = (1 - floor L) / M`, which is at
/// least `floor` everywhere and has mass exactly 1.
pub fn regularize_ic<T: Scalar>(f: &EulerianField<T>, p: &ModelParams<T>) -> Result<Regularized<T>> {
    if p.eps == T::zero() {
        return Ok(Regularized {
            field: f.clone(),
            floor: T::zero(),
            applied: false,
        });
    }
    if !(p.eps > T::zero()) {
        return Err(Error::Precondition("regularization needs eps > 0".into()));
    }
    if !(p.theta > T::zero() && p.theta < T::lit(0.5)) {
        return Err(Error::Precondition("regularization needs theta in (0, 1/2)".into()));
    }
    let floor = regularization_floor(p);
    let mass = f.mass();
    let len = f.length();
    if !(mass > T::zero()) {
        return Err(Error::ZeroMass);
    }
    if !(floor * len < T::one()) {
        return Err(Error::Precondition(format!(
            "floor {floor} too large for unit mass on length {len}"
        )));
    }
    let s = (T::one() - floor * len) / mass;
    let mut out = f.clone();
    for r in &mut out.rho {
        *r = s * *r + floor;
    }
    Ok(Regularized {
        field: out,
        floor,
        applied: true,
    })
}

pub fn regularization_floor<T: Scalar>(p: &ModelParams<T>) -> T {
    p.c0_floor * p.eps.powf(T::one() / (T::lit(2.0) * p.alpha - T::lit(2.0) * p.theta))
}

/// Projects `f` onto `n` equal-mass cells with `h = 1 / n`.
///
/// With `pin = Some(x)` the vacuum at `x` becomes an exactly-zero centre cell;
/// `n` must be odd and the mass label of `x` must fall in that cell.
pub fn project_to_grid<T: Scalar>(
    f: &EulerianField<T>,
    n: usize,
    bc: BoundaryCondition,
    pin: Option<T>,
) -> Result<StaggeredState<T>> {
    if n < 3 {
        return Err(Error::Precondition(format!("need at least 3 cells, got {n}")));
    }
    let mass = f.mass();
    if !(mass > T::zero()) {
        return Err(Error::ZeroMass);
    }
    let mut unit = f.clone();
    for r in &mut unit.rho {
        *r = *r / mass;
    }
    let mut s = eulerian_to_lagrangian(&unit, n, bc)?;
    s.h = T::one() / T::from_usize_lossy(n);

    if let Some(xv) = pin {
        if n.is_multiple_of(2) {
            return Err(Error::Precondition("pinning requires an odd cell count".into()));
        }
        let max = unit.rho.iter().copied().fold(T::zero(), T::max);
        let near = unit
            .x
            .windows(2)
            .zip(&unit.rho)
            .filter(|(w, _)| {
                let reach = w[1] - w[0];
                w[1] + reach >= xv && w[0] - reach <= xv
            })
            .map(|(_, &r)| r)
            .fold(T::infinity(), T::min);
        if !(near <= T::lit(1e-6) * max) {
            return Err(Error::NoVacuumToPin);
        }
        let k = n / 2;
        let y = mass_label(&unit, xv)?;
        let lo = T::from_usize_lossy(k) * s.h;
        if !(y >= lo && y <= lo + s.h) {
            return Err(Error::Precondition(format!(
                "vacuum at x = {xv} has mass label {y}, outside the centre cell"
            )));
        }
        s.rho[k] = T::zero();
        s.pinned_cell = Some(k);
    }
    s.validate()?;
    Ok(s)
}

/// Cumulative mass of `f` up to `x`.
fn mass_label<T: Scalar>(f: &EulerianField<T>, x: T) -> Result<T> {
    let m = f.n_cells();
    if !(x >= f.x[0] && x <= f.x[m]) {
        return Err(Error::OutOfDomain {
            x: x.to_f64_lossy(),
            lo: f.x[0].to_f64_lossy(),
            hi: f.x[m].to_f64_lossy(),
        });
    }
    let cum = f.cumulative_mass();
    let c = f.x.partition_point(|&v| v <= x).clamp(1, m) - 1;
    Ok(cum[c] + f.rho[c] * (x - f.x[c]))
}

/// Initial state of a scenario: profile, optional regularization, projection.
#[derive(Clone, Debug, PartialEq)]
pub struct InitialData<T> {
    pub state: StaggeredState<T>,
    pub profile: InitialProfile<T>,
    pub regularization: Regularized<T>,
}

pub fn build_initial_state<T: Scalar>(spec: &ScenarioSpec<T>, p: &ModelParams<T>) -> Result<InitialData<T>> {
    let profile = initial_profile(spec, p)?;
    let regularization = regularize_ic(&profile.field, p)?;
    let pin = if spec.pinned {
        if p.gamma == T::one() {
            return Err(Error::Precondition(
                "a pinned vacuum has undefined internal energy for gamma = 1".into(),
            ));
        }
        if !spec.kind.has_vacuum() {
            return Err(Error::NoVacuumToPin);
        }
        Some(match spec.kind {
            ScenarioKind::PieceVacuum => T::lit(0.5) * (spec.x0 + spec.x1),
            _ => spec.x0,
        })
    } else {
        None
    };
    let state = project_to_grid(&regularization.field, spec.n, spec.bc, pin)?;
    Ok(InitialData {
        state,
        profile,
        regularization,
    })
}

/// Named bundle of scenario, model and integrator settings.
#[derive(Clone, Debug, PartialEq)]
pub struct Preset<T> {
    pub name: &'static str,
    pub description: &'static str,
    pub scenario: ScenarioSpec<T>,
    pub params: ModelParams<T>,
    pub integrator: IntegratorConfig<T>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PresetName {
    ShallowWaterPointVacuum,
    ShallowWaterPieceVacuum,
    SmoothPeriodic,
    SmoothDirichlet,
}

impl PresetName {
    pub const ALL: [PresetName; 4] = [
        PresetName::ShallowWaterPointVacuum,
        PresetName::ShallowWaterPieceVacuum,
        PresetName::SmoothPeriodic,
        PresetName::SmoothDirichlet,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PresetName::ShallowWaterPointVacuum => "shallow-water-point-vacuum",
            PresetName::ShallowWaterPieceVacuum => "shallow-water-piece-vacuum",
            PresetName::SmoothPeriodic => "smooth-periodic",
            PresetName::SmoothDirichlet => "smooth-dirichlet",
        }
    }
}

impl fmt::Display for PresetName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PresetName {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        PresetName::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| {
                let names: Vec<_> = PresetName::ALL.iter().map(|p| p.as_str()).collect();
                format!("unknown preset `{s}` (available: {})", names.join(", "))
            })
    }
}

pub fn preset<T: Scalar>(name: PresetName) -> Preset<T> {
    let shallow = ModelParams {
        alpha: T::one(),
        gamma: T::lit(2.0),
        a1: T::one(),
        a2: T::one(),
        eps: T::lit(1e-6),
        theta: T::lit(0.25),
        ..ModelParams::default()
    };
    let long = IntegratorConfig {
        t_end: T::lit(50.0),
        snapshot_interval: Some(T::one()),
        ..IntegratorConfig::default()
    };
    let short = IntegratorConfig {
        t_end: T::one(),
        snapshot_interval: Some(T::lit(0.25)),
        ..IntegratorConfig::default()
    };
    let smooth_params = ModelParams {
        eps: T::zero(),
        ..shallow
    };
    match name {
        PresetName::ShallowWaterPointVacuum => Preset {
            name: name.as_str(),
            description: "shallow water (alpha=1, gamma=2), point vacuum |x-1/2|^2 between walls",
            scenario: ScenarioSpec::default(),
            params: shallow,
            integrator: long,
        },
        PresetName::ShallowWaterPieceVacuum => Preset {
            name: name.as_str(),
            description: "shallow water, vacuum block [0.4, 0.6] with quadratic flanks",
            scenario: ScenarioSpec {
                kind: ScenarioKind::PieceVacuum,
                x0: T::lit(0.4),
                x1: T::lit(0.6),
                ..ScenarioSpec::default()
            },
            params: shallow,
            integrator: long,
        },
        PresetName::SmoothPeriodic => Preset {
            name: name.as_str(),
            description: "rho = 1 + 0.5 sin(2 pi x), u = 0, periodic",
            scenario: ScenarioSpec {
                kind: ScenarioKind::SmoothPeriodic,
                n: 101,
                bc: BoundaryCondition::Periodic,
                ..ScenarioSpec::default()
            },
            params: smooth_params,
            integrator: short,
        },
        PresetName::SmoothDirichlet => Preset {
            name: name.as_str(),
            description: "rho = 1 + 0.5 cos(pi x), u = 0, walls",
            scenario: ScenarioSpec {
                kind: ScenarioKind::SmoothDirichlet,
                n: 101,
                ..ScenarioSpec::default()
            },
            params: smooth_params,
            integrator: short,
        },
    }
}

pub fn presets<T: Scalar>() -> Vec<Preset<T>> {
    PresetName::ALL.into_iter().map(preset).collect()
}
