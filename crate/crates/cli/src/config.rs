//! Run configuration: a flat `key = value` document with dotted sections.
//!
//! ```text
//! # comments start with '#'
//! preset = shallow-water-point-vacuum
//! scenario.n = 101
//! params.eps = 1e-6
//! output.dir = runs/point
//! ```
//!
//! A `preset` line seeds every field from a named preset before the other keys
//! are applied, regardless of where it appears. Unknown, duplicate and
//! inapplicable keys are rejected.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use degen_ns::scenarios::{build_initial_state, preset};
use degen_ns::{
    validate_params, BoundaryCondition, Integrator64, Method, Params64, PresetName, Scenario64, ScenarioKind,
    VelocityInit,
};

use crate::output::fmt_f64;

#[derive(Clone, Debug, PartialEq)]
pub struct DiagnosticsSettings {
    /// Exponent of the `g` functional; `None` selects the model default.
    pub b: Option<f64>,
    /// Density threshold for the vacuum-vanishing time.
    pub rho_thresh: f64,
    /// How long the threshold must hold.
    pub hold: f64,
    /// The decay fit starts this long after the vacuum-vanishing time.
    pub decay_offset: f64,
}

impl Default for DiagnosticsSettings {
    fn default() -> Self {
        DiagnosticsSettings {
            b: None,
            rho_thresh: 0.05,
            hold: 1.0,
            decay_offset: 2.0,
        }
    }
}

/// Everything needed to reproduce a run. Series cadence and snapshot times are
/// stored on the integrator config.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub scenario: Scenario64,
    pub params: Params64,
    pub integrator: Integrator64,
    pub diagnostics: DiagnosticsSettings,
    pub output_dir: PathBuf,
    /// Seed for randomized test data; the solver is deterministic.
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            scenario: Scenario64::default(),
            params: Params64::default(),
            integrator: Integrator64::default(),
            diagnostics: DiagnosticsSettings::default(),
            output_dir: PathBuf::from("output"),
            seed: 0,
        }
    }
}

impl RunConfig {
    pub fn from_preset(name: PresetName) -> Self {
        let p = preset::<f64>(name);
        RunConfig {
            scenario: p.scenario,
            params: p.params,
            integrator: p.integrator,
            output_dir: PathBuf::from(name.as_str()),
            ..RunConfig::default()
        }
    }

    pub fn diagnostics_config(&self) -> degen_ns::DiagnosticsConfig<f64> {
        degen_ns::DiagnosticsConfig { b: self.diagnostics.b }
    }

    /// Checks parameters, integrator settings and that the initial state can be built.
    pub fn validate(&self) -> Result<(), ConfigError> {
        validate_params(&self.params)?;
        self.integrator.validate()?;
        let d = &self.diagnostics;
        if !(d.rho_thresh > 0.0 && d.hold >= 0.0 && d.decay_offset >= 0.0) {
            return Err(ConfigError::Invalid(degen_ns::Error::Precondition(
                "diagnostics thresholds must be positive".into(),
            )));
        }
        build_initial_state(&self.scenario, &self.params)?;
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, got `{text}`")]
    Syntax { line: usize, text: String },

    #[error("line {line}: unknown key `{key}`{}", suggestion.as_ref().map(|s| format!(" (did you mean `{s}`?)")).unwrap_or_default())]
    UnknownKey {
        line: usize,
        key: String,
        suggestion: Option<String>,
    },

    #[error("line {line}: duplicate key `{key}`")]
    Duplicate { line: usize, key: String },

    #[error("line {line}: bad value for `{key}`: {reason}")]
    Value { line: usize, key: String, reason: String },

    #[error("invalid configuration: {0}")]
    Invalid(#[from] degen_ns::Error),
}

/// Every accepted key, in serialization order.
pub const KEYS: &[&str] = &[
    "preset",
    "scenario.kind",
    "scenario.sigma",
    "scenario.a0",
    "scenario.a1",
    "scenario.b0",
    "scenario.b1",
    "scenario.x0",
    "scenario.x1",
    "scenario.u0",
    "scenario.u0_amp",
    "scenario.u0_freq",
    "scenario.u0_value",
    "scenario.custom_x",
    "scenario.custom_rho",
    "scenario.custom_u",
    "scenario.n",
    "scenario.bc",
    "scenario.pinned",
    "scenario.eulerian_cells",
    "params.alpha",
    "params.gamma",
    "params.a1",
    "params.a2",
    "params.eps",
    "params.theta",
    "params.n_reg",
    "params.nu",
    "params.c0_floor",
    "integrator.method",
    "integrator.cfl_safety",
    "integrator.dt_max",
    "integrator.dt_min",
    "integrator.t_end",
    "integrator.positivity_floor",
    "output.dir",
    "output.series_interval",
    "output.snapshot_times",
    "output.snapshot_interval",
    "diagnostics.b",
    "diagnostics.rho_thresh",
    "diagnostics.hold",
    "diagnostics.decay_offset",
    "seed",
];

/// Common names that map onto a configuration key.
const ALIASES: &[(&str, &str)] = &[
    ("viscosity", "params.a2"),
    ("viscosity_exponent", "params.alpha"),
    ("pressure", "params.a1"),
    ("adiabatic", "params.gamma"),
    ("epsilon", "params.eps"),
    ("cells", "scenario.n"),
    ("resolution", "scenario.n"),
    ("boundary", "scenario.bc"),
    ("cfl", "integrator.cfl_safety"),
    ("dt", "integrator.dt_max"),
    ("t_final", "integrator.t_end"),
    ("cadence", "output.series_interval"),
];

fn suggest(key: &str) -> Option<String> {
    let tail = key.rsplit('.').next().unwrap_or(key);
    let score = |name: &str| {
        let name_tail = name.rsplit('.').next().unwrap_or(name);
        strsim::levenshtein(key, name).min(strsim::levenshtein(tail, name_tail))
    };
    let candidates = KEYS
        .iter()
        .map(|k| (score(k), *k))
        .chain(ALIASES.iter().map(|(alias, k)| (score(alias), *k)));
    let (dist, best) = candidates.min_by_key(|(d, _)| *d)?;
    (dist <= (tail.len() / 3).max(2)).then(|| best.to_string())
}

struct Entry<'a> {
    line: usize,
    value: &'a str,
}

fn value_error(e: &Entry, key: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Value {
        line: e.line,
        key: key.to_string(),
        reason: reason.into(),
    }
}

fn parse_f64(key: &str, e: &Entry) -> Result<f64, ConfigError> {
    e.value.parse::<f64>().map_err(|err| value_error(e, key, err.to_string()))
}

fn parse_int<I: std::str::FromStr>(key: &str, e: &Entry) -> Result<I, ConfigError>
where
    I::Err: std::fmt::Display,
{
    e.value.parse::<I>().map_err(|err| value_error(e, key, err.to_string()))
}

fn parse_bool(key: &str, e: &Entry) -> Result<bool, ConfigError> {
    match e.value {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(value_error(e, key, "expected true or false")),
    }
}

fn parse_list(key: &str, e: &Entry) -> Result<Vec<f64>, ConfigError> {
    if e.value.is_empty() {
        return Ok(Vec::new());
    }
    e.value
        .split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|err| value_error(e, key, err.to_string())))
        .collect()
}

fn parse_optional(key: &str, e: &Entry, none_word: &str) -> Result<Option<f64>, ConfigError> {
    if e.value == none_word {
        Ok(None)
    } else {
        parse_f64(key, e).map(Some)
    }
}

fn parse_with<V>(key: &str, e: &Entry, f: impl FnOnce(&str) -> Result<V, String>) -> Result<V, ConfigError> {
    f(e.value).map_err(|reason| value_error(e, key, reason))
}

fn tokenize(text: &str) -> Result<BTreeMap<&str, Entry<'_>>, ConfigError> {
    let mut entries = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| ConfigError::Syntax {
            line,
            text: content.to_string(),
        })?;
        let key = key.trim();
        if key.is_empty() {
            return Err(ConfigError::Syntax {
                line,
                text: content.to_string(),
            });
        }
        if !KEYS.contains(&key) {
            return Err(ConfigError::UnknownKey {
                line,
                key: key.to_string(),
                suggestion: suggest(key),
            });
        }
        if entries.contains_key(key) {
            return Err(ConfigError::Duplicate {
                line,
                key: key.to_string(),
            });
        }
        entries.insert(key, Entry { line, value: value.trim() });
    }
    Ok(entries)
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let entries = tokenize(text)?;
    let mut cfg = match entries.get("preset") {
        Some(e) => RunConfig::from_preset(parse_with("preset", e, |v| v.parse())?),
        None => RunConfig::default(),
    };

    // kind and velocity shape decide which of the dependent keys are allowed
    let mut custom = None;
    if let Some(e) = entries.get("scenario.kind") {
        cfg.scenario.kind = match e.value {
            "point_vacuum" => ScenarioKind::PointVacuum,
            "piece_vacuum" => ScenarioKind::PieceVacuum,
            "smooth_periodic" => ScenarioKind::SmoothPeriodic,
            "smooth_dirichlet" => ScenarioKind::SmoothDirichlet,
            "custom" => {
                custom = Some(());
                ScenarioKind::Custom {
                    x: Vec::new(),
                    rho: Vec::new(),
                    u: Vec::new(),
                }
            }
            other => return Err(value_error(e, "scenario.kind", format!("unknown scenario kind `{other}`"))),
        };
    }
    let custom_keys = ["scenario.custom_x", "scenario.custom_rho", "scenario.custom_u"];
    for key in custom_keys {
        match (entries.get(key), custom) {
            (Some(e), None) => return Err(value_error(e, key, "only valid with scenario.kind = custom")),
            (None, Some(())) => {
                let line = entries["scenario.kind"].line;
                return Err(ConfigError::Value {
                    line,
                    key: key.to_string(),
                    reason: "required by scenario.kind = custom".into(),
                });
            }
            _ => {}
        }
    }
    if custom.is_some() {
        let x = parse_list(custom_keys[0], &entries[custom_keys[0]])?;
        let rho = parse_list(custom_keys[1], &entries[custom_keys[1]])?;
        let u = parse_list(custom_keys[2], &entries[custom_keys[2]])?;
        cfg.scenario.kind = ScenarioKind::Custom { x, rho, u };
    }

    let shape = entries.get("scenario.u0").map(|e| (e, e.value));
    let allowed: &[&str] = match shape.map(|(_, v)| v) {
        Some("sine") => &["scenario.u0_amp", "scenario.u0_freq"],
        Some("constant") => &["scenario.u0_value"],
        _ => &[],
    };
    for key in ["scenario.u0_amp", "scenario.u0_freq", "scenario.u0_value"] {
        if let Some(e) = entries.get(key) {
            if !allowed.contains(&key) {
                return Err(value_error(e, key, "does not apply to the chosen scenario.u0"));
            }
        }
    }
    if let Some((e, v)) = shape {
        let get = |key: &str, default: f64| entries.get(key).map_or(Ok(default), |e| parse_f64(key, e));
        cfg.scenario.u0 = match v {
            "zero" => VelocityInit::Zero,
            "sine" => VelocityInit::Sine {
                amp: get("scenario.u0_amp", 0.0)?,
                freq: get("scenario.u0_freq", 1.0)?,
            },
            "constant" => VelocityInit::Constant(get("scenario.u0_value", 0.0)?),
            other => {
                return Err(value_error(
                    e,
                    "scenario.u0",
                    format!("unknown velocity `{other}` (expected zero, sine or constant)"),
                ))
            }
        };
    }

    for (&key, e) in &entries {
        let sc = &mut cfg.scenario;
        let pa = &mut cfg.params;
        let it = &mut cfg.integrator;
        let di = &mut cfg.diagnostics;
        match key {
            "scenario.sigma" => sc.sigma = parse_f64(key, e)?,
            "scenario.a0" => sc.a0 = parse_f64(key, e)?,
            "scenario.a1" => sc.a1 = parse_f64(key, e)?,
            "scenario.b0" => sc.b0 = parse_f64(key, e)?,
            "scenario.b1" => sc.b1 = parse_f64(key, e)?,
            "scenario.x0" => sc.x0 = parse_f64(key, e)?,
            "scenario.x1" => sc.x1 = parse_f64(key, e)?,
            "scenario.n" => sc.n = parse_int(key, e)?,
            "scenario.bc" => sc.bc = parse_with(key, e, |v| v.parse::<BoundaryCondition>())?,
            "scenario.pinned" => sc.pinned = parse_bool(key, e)?,
            "scenario.eulerian_cells" => sc.eulerian_cells = parse_int(key, e)?,
            "params.alpha" => pa.alpha = parse_f64(key, e)?,
            "params.gamma" => pa.gamma = parse_f64(key, e)?,
            "params.a1" => pa.a1 = parse_f64(key, e)?,
            "params.a2" => pa.a2 = parse_f64(key, e)?,
            "params.eps" => pa.eps = parse_f64(key, e)?,
            "params.theta" => pa.theta = parse_f64(key, e)?,
            "params.n_reg" => pa.n_reg = parse_int(key, e)?,
            "params.nu" => pa.nu = parse_f64(key, e)?,
            "params.c0_floor" => pa.c0_floor = parse_f64(key, e)?,
            "integrator.method" => it.method = parse_with(key, e, |v| v.parse::<Method>())?,
            "integrator.cfl_safety" => it.cfl_safety = parse_f64(key, e)?,
            "integrator.dt_max" => it.dt_max = parse_f64(key, e)?,
            "integrator.dt_min" => it.dt_min = parse_f64(key, e)?,
            "integrator.t_end" => it.t_end = parse_f64(key, e)?,
            "integrator.positivity_floor" => it.positivity_floor = parse_f64(key, e)?,
            "output.dir" => {
                if e.value.is_empty() {
                    return Err(value_error(e, key, "empty path"));
                }
                cfg.output_dir = PathBuf::from(e.value);
            }
            "output.series_interval" => it.sample_interval = parse_f64(key, e)?,
            "output.snapshot_times" => it.snapshot_times = parse_list(key, e)?,
            "output.snapshot_interval" => it.snapshot_interval = parse_optional(key, e, "none")?,
            "diagnostics.b" => di.b = parse_optional(key, e, "auto")?,
            "diagnostics.rho_thresh" => di.rho_thresh = parse_f64(key, e)?,
            "diagnostics.hold" => di.hold = parse_f64(key, e)?,
            "diagnostics.decay_offset" => di.decay_offset = parse_f64(key, e)?,
            "seed" => cfg.seed = parse_int(key, e)?,
            _ => {}
        }
    }

    cfg.validate()?;
    Ok(cfg)
}

fn join(values: &[f64]) -> String {
    values.iter().map(|v| fmt_f64(*v)).collect::<Vec<_>>().join(", ")
}

/// Renders every field explicitly, so the output does not depend on presets or
/// defaults. `parse_config(&serialize_config(c)) == c` for any valid `c`.
pub fn serialize_config(cfg: &RunConfig) -> String {
    let mut out = String::new();
    let mut put = |key: &str, value: String| {
        let _ = writeln!(out, "{key} = {value}");
    };
    let f = |v: f64| fmt_f64(v);
    let sc = &cfg.scenario;
    put("scenario.kind", sc.kind.tag().to_string());
    if let ScenarioKind::Custom { x, rho, u } = &sc.kind {
        put("scenario.custom_x", join(x));
        put("scenario.custom_rho", join(rho));
        put("scenario.custom_u", join(u));
    }
    put("scenario.sigma", f(sc.sigma));
    put("scenario.a0", f(sc.a0));
    put("scenario.a1", f(sc.a1));
    put("scenario.b0", f(sc.b0));
    put("scenario.b1", f(sc.b1));
    put("scenario.x0", f(sc.x0));
    put("scenario.x1", f(sc.x1));
    match sc.u0 {
        VelocityInit::Zero => put("scenario.u0", "zero".into()),
        VelocityInit::Sine { amp, freq } => {
            put("scenario.u0", "sine".into());
            put("scenario.u0_amp", f(amp));
            put("scenario.u0_freq", f(freq));
        }
        VelocityInit::Constant(c) => {
            put("scenario.u0", "constant".into());
            put("scenario.u0_value", f(c));
        }
    }
    put("scenario.n", sc.n.to_string());
    put("scenario.bc", sc.bc.to_string());
    put("scenario.pinned", sc.pinned.to_string());
    put("scenario.eulerian_cells", sc.eulerian_cells.to_string());

    let pa = &cfg.params;
    put("params.alpha", f(pa.alpha));
    put("params.gamma", f(pa.gamma));
    put("params.a1", f(pa.a1));
    put("params.a2", f(pa.a2));
    put("params.eps", f(pa.eps));
    put("params.theta", f(pa.theta));
    put("params.n_reg", pa.n_reg.to_string());
    put("params.nu", f(pa.nu));
    put("params.c0_floor", f(pa.c0_floor));

    let it = &cfg.integrator;
    put("integrator.method", it.method.to_string());
    put("integrator.cfl_safety", f(it.cfl_safety));
    put("integrator.dt_max", f(it.dt_max));
    put("integrator.dt_min", f(it.dt_min));
    put("integrator.t_end", f(it.t_end));
    put("integrator.positivity_floor", f(it.positivity_floor));

    put("output.dir", cfg.output_dir.display().to_string());
    put("output.series_interval", f(it.sample_interval));
    put("output.snapshot_times", join(&it.snapshot_times));
    put(
        "output.snapshot_interval",
        it.snapshot_interval.map_or("none".into(), f),
    );

    let di = &cfg.diagnostics;
    put("diagnostics.b", di.b.map_or("auto".into(), f));
    put("diagnostics.rho_thresh", f(di.rho_thresh));
    put("diagnostics.hold", f(di.hold));
    put("diagnostics.decay_offset", f(di.decay_offset));
    put("seed", cfg.seed.to_string());
    out
}

/// Canonical form of a valid document.
pub fn normalize(text: &str) -> Result<String, ConfigError> {
    parse_config(text).map(|c| serialize_config(&c))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_defaults() {
        let cfg = parse_config("# nothing but a comment\n\n").unwrap();
        assert_eq!(cfg, RunConfig::default());
    }

    #[test]
    fn preset_applies_before_other_keys() {
        let cfg = parse_config("scenario.n = 51\npreset = smooth-periodic\n").unwrap();
        assert_eq!(cfg.scenario.kind, ScenarioKind::SmoothPeriodic);
        assert_eq!(cfg.scenario.n, 51);
        assert_eq!(cfg.scenario.bc, BoundaryCondition::Periodic);
    }

    #[test]
    fn alpha_below_half_is_rejected() {
        let err = parse_config("params.alpha = 0.4").unwrap_err();
        assert!(matches!(err, ConfigError::Invalid(degen_ns::Error::Constraint { .. })), "{err}");
    }

    #[test]
    fn unknown_key_suggests_a_close_match() {
        let err = parse_config("viscocity = 2").unwrap_err();
        match err {
            ConfigError::UnknownKey { line, key, suggestion } => {
                assert_eq!((line, key.as_str()), (1, "viscocity"));
                assert_eq!(suggestion.as_deref(), Some("params.a2"));
            }
            other => panic!("{other}"),
        }
        let err = parse_config("\nparams.gama = 2").unwrap_err();
        assert_eq!(err.to_string(), "line 2: unknown key `params.gama` (did you mean `params.gamma`?)");
        match parse_config("zzzzzzzzzzzz = 1").unwrap_err() {
            ConfigError::UnknownKey { suggestion, .. } => assert_eq!(suggestion, None),
            other => panic!("{other}"),
        }
    }

    #[test]
    fn syntax_and_duplicates() {
        assert!(matches!(
            parse_config("scenario.n 5").unwrap_err(),
            ConfigError::Syntax { line: 1, .. }
        ));
        assert!(matches!(
            parse_config("seed = 1\nseed = 2").unwrap_err(),
            ConfigError::Duplicate { line: 2, .. }
        ));
        assert!(matches!(
            parse_config("scenario.n = many").unwrap_err(),
            ConfigError::Value { line: 1, .. }
        ));
    }

    #[test]
    fn dependent_keys_are_checked() {
        assert!(parse_config("scenario.u0_amp = 0.1").is_err());
        assert!(parse_config("scenario.custom_x = 0, 1").is_err());
        assert!(parse_config("scenario.kind = custom\nscenario.custom_x = 0, 1").is_err());
        let cfg = parse_config(
            "scenario.kind = custom\nscenario.custom_x = 0, 1\nscenario.custom_rho = 1, 1\nscenario.custom_u = 0, 0\nscenario.bc = periodic",
        )
        .unwrap();
        assert_eq!(cfg.scenario.kind.tag(), "custom");
    }

    #[test]
    fn snapshot_times_must_lie_in_run() {
        assert!(parse_config("integrator.t_end = 1\noutput.snapshot_times = 0.5, 2").is_err());
        let cfg = parse_config("integrator.t_end = 1\noutput.snapshot_times = 0.5, 1").unwrap();
        assert_eq!(cfg.integrator.snapshot_times, vec![0.5, 1.0]);
    }

    #[test]
    fn every_preset_round_trips() {
        for name in PresetName::ALL {
            let text = format!("preset = {name}");
            let cfg = parse_config(&text).unwrap();
            let rendered = serialize_config(&cfg);
            assert_eq!(parse_config(&rendered).unwrap(), cfg);
            assert_eq!(normalize(&rendered).unwrap(), rendered);
        }
    }
}
