use std::path::Path;
use std::process::Command;

use degen_ns::{BoundaryCondition, Method, PresetName, ScenarioKind, VelocityInit};
use degen_ns_cli::commands::{cmd_converge, parse_levels};
use degen_ns_cli::output::{read_series, read_state, write_series};
use degen_ns_cli::{cmd_decay_fit, cmd_run, normalize, parse_config, serialize_config, RunConfig};
use proptest::prelude::*;

const BIN: &str = env!("CARGO_BIN_EXE_degen-ns");

fn equilibrium(dir: &Path, t_end: f64) -> String {
    format!(
        "scenario.kind = custom\n\
         scenario.custom_x = 0, 1\n\
         scenario.custom_rho = 1, 1\n\
         scenario.custom_u = 0, 0\n\
         scenario.bc = periodic\n\
         scenario.n = 21\n\
         integrator.t_end = {t_end}\n\
         output.series_interval = 0.05\n\
         output.snapshot_times = {t_end}\n\
         output.dir = {}\n",
        dir.display()
    )
}

fn summary_value(summary: &str, key: &str) -> String {
    summary
        .lines()
        .find_map(|l| l.strip_prefix(&format!("{key} = ")))
        .unwrap_or_else(|| panic!("no `{key}` in summary:\n{summary}"))
        .to_string()
}

#[test]
fn equilibrium_run_has_no_drift_and_no_events() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("eq");
    let cfg = parse_config(&equilibrium(&out, 0.5)).unwrap();
    let summary = cmd_run(&cfg, None).unwrap();
    assert_eq!(summary_value(&summary, "termination"), "completed");
    assert_eq!(summary_value(&summary, "mass_drift"), "0.0");
    assert_eq!(summary_value(&summary, "volume_drift"), "0.0");
    assert_eq!(summary_value(&summary, "vacuum_vanish_time"), "none");
    assert_eq!(summary_value(&summary, "vacuum_initially"), "false");

    let series = read_series(&out.join("series.csv")).unwrap();
    assert_eq!(series.len(), 11);
    assert!(series.windows(2).all(|w| w[1].t > w[0].t));
    assert!(out.join("summary.txt").exists());
    assert!(out.join("snapshots/snapshot_00000.csv").exists());
    let s = read_state(&out.join("snapshots/snapshot_00000.state")).unwrap();
    assert_eq!(s.t, 0.5);
    assert!(s.rho.iter().all(|&r| (r - 1.0).abs() < 1e-12));
}

#[test]
fn point_vacuum_summary_reports_vanishing_and_decay() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = parse_config(&format!(
        "preset = shallow-water-point-vacuum\nscenario.n = 51\nintegrator.t_end = 6\noutput.dir = {}",
        tmp.path().display()
    ))
    .unwrap();
    let summary = cmd_run(&cfg, None).unwrap();
    assert_eq!(summary_value(&summary, "vacuum_initially"), "true");
    let t0: f64 = summary_value(&summary, "vacuum_vanish_time").parse().unwrap();
    assert!(t0.is_finite());
    let mu0: f64 = summary_value(&summary, "decay_mu0").parse().unwrap();
    assert!(mu0 > 0.0);
    summary_value(&summary, "decay_r2");
    summary_value(&summary, "peak_ux_linf");
}

#[test]
fn zero_length_run_has_a_single_row() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("zero");
    let cfg = parse_config(&equilibrium(&out, 0.0)).unwrap();
    cmd_run(&cfg, None).unwrap();
    let text = std::fs::read_to_string(out.join("series.csv")).unwrap();
    assert_eq!(text.lines().count(), 2);
    assert_eq!(read_series(&out.join("series.csv")).unwrap().len(), 1);
}

#[test]
fn series_round_trips_bit_for_bit() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = parse_config(&format!(
        "preset = smooth-periodic\nscenario.n = 31\nintegrator.t_end = 0.1\noutput.dir = {}",
        tmp.path().join("sp").display()
    ))
    .unwrap();
    cmd_run(&cfg, None).unwrap();
    let path = tmp.path().join("sp/series.csv");
    let series = read_series(&path).unwrap();
    let copy = tmp.path().join("copy.csv");
    write_series(&copy, &series).unwrap();
    assert_eq!(std::fs::read(&path).unwrap(), std::fs::read(&copy).unwrap());
    let header = std::fs::read_to_string(&path).unwrap();
    assert_eq!(header.lines().next().unwrap().split(',').count(), 16);
}

#[test]
fn restart_from_sidecar_matches_continuous_run() {
    let tmp = tempfile::tempdir().unwrap();
    let base = "preset = smooth-dirichlet\nscenario.n = 21\noutput.snapshot_interval = none\n";
    let full = parse_config(&format!(
        "{base}integrator.t_end = 0.2\noutput.snapshot_times = 0.1, 0.2\noutput.dir = {}",
        tmp.path().join("full").display()
    ))
    .unwrap();
    cmd_run(&full, None).unwrap();
    let mid = read_state(&tmp.path().join("full/snapshots/snapshot_00000.state")).unwrap();
    assert_eq!(mid.t, 0.1);

    let tail = parse_config(&format!(
        "{base}integrator.t_end = 0.2\noutput.snapshot_times = 0.2\noutput.dir = {}",
        tmp.path().join("tail").display()
    ))
    .unwrap();
    cmd_run(&tail, Some(mid)).unwrap();
    let a = read_state(&tmp.path().join("full/snapshots/snapshot_00001.state")).unwrap();
    let b = read_state(&tmp.path().join("tail/snapshots/snapshot_00000.state")).unwrap();
    assert_eq!(a.t, b.t);
    for (x, y) in a.rho.iter().zip(&b.rho) {
        assert!((x - y).abs() < 1e-12, "{x} vs {y}");
    }
}

#[test]
fn decay_fit_reads_written_series() {
    let tmp = tempfile::tempdir().unwrap();
    let series: Vec<_> = (0..40)
        .map(|i| {
            let t = 0.25 * i as f64;
            degen_ns::Record64 {
                t,
                l2_dist: 0.3 * (-0.7 * t).exp(),
                ..Default::default()
            }
        })
        .collect();
    let path = tmp.path().join("s.csv");
    write_series(&path, &series).unwrap();
    let text = cmd_decay_fit(&path, 1.0).unwrap();
    let mu0: f64 = summary_value(&text, "decay_mu0").parse().unwrap();
    let c0: f64 = summary_value(&text, "decay_c0").parse().unwrap();
    assert!((mu0 - 0.7).abs() < 1e-10);
    assert!((c0 - 0.3 * (-0.7f64).exp()).abs() < 1e-10);
    let err = cmd_decay_fit(&path, 100.0).unwrap_err();
    assert_eq!(err.exit_code(), 3);
}

#[test]
fn converge_identical_levels_flags_undefined_order() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = parse_config(&format!(
        "preset = smooth-periodic\nintegrator.t_end = 0.05\noutput.dir = {}",
        tmp.path().display()
    ))
    .unwrap();
    let text = cmd_converge(&cfg, &[21, 21, 21]).unwrap();
    assert!(text.contains("order_undefined = true"), "{text}");
    assert!(tmp.path().join("level_21/series.csv").exists());
    let csv = std::fs::read_to_string(tmp.path().join("convergence.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);

    assert_eq!(cmd_converge(&cfg, &[21, 11, 41]).unwrap_err().exit_code(), 2);
    assert_eq!(parse_levels("51,x").unwrap_err().exit_code(), 2);
}

#[test]
fn smooth_convergence_gives_finite_order() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = parse_config(&format!(
        "preset = smooth-periodic\nintegrator.t_end = 0.1\noutput.dir = {}",
        tmp.path().display()
    ))
    .unwrap();
    cmd_converge(&cfg, &[21, 41, 81]).unwrap();
    let csv = std::fs::read_to_string(tmp.path().join("convergence.csv")).unwrap();
    let order: f64 = csv.lines().nth(2).unwrap().split(',').nth(4).unwrap().parse().unwrap();
    assert!(order.is_finite() && order > 1.0, "{order}");
}

#[test]
fn binary_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let good = tmp.path().join("good.cfg");
    std::fs::write(&good, equilibrium(Path::new("eq"), 0.1)).unwrap();
    let out = Command::new(BIN)
        .args(["run", good.to_str().unwrap()])
        .env("DEGEN_NS_OUTPUT_ROOT", tmp.path().join("root"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(tmp.path().join("root/eq/summary.txt").exists());

    let bad = tmp.path().join("bad.cfg");
    std::fs::write(&bad, "viscocity = 1\n").unwrap();
    let out = Command::new(BIN).args(["run", bad.to_str().unwrap()]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("did you mean"));

    // explicit Euler far beyond its stability limit loses positivity
    let unstable = tmp.path().join("unstable.cfg");
    std::fs::write(
        &unstable,
        format!(
            "preset = smooth-dirichlet\nscenario.n = 21\nintegrator.method = euler\n\
             integrator.cfl_safety = 1\nintegrator.dt_max = 0.5\nintegrator.dt_min = 0.1\n\
             integrator.t_end = 1\noutput.dir = {}",
            tmp.path().join("unstable").display()
        ),
    )
    .unwrap();
    let out = Command::new(BIN).args(["run", unstable.to_str().unwrap()]).output().unwrap();
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = std::fs::read_to_string(tmp.path().join("unstable/summary.txt")).unwrap();
    assert_ne!(summary_value(&summary, "termination"), "completed");

    let out = Command::new(BIN).arg("scenarios").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let listing = String::from_utf8_lossy(&out.stdout);
    for name in PresetName::ALL {
        assert!(listing.contains(name.as_str()));
    }
}

fn arb_config() -> impl Strategy<Value = RunConfig> {
    (
        prop::sample::select(PresetName::ALL.to_vec()),
        prop::sample::select(vec![Method::Rk4, Method::Rk2, Method::Euler]),
        (0.0f64..1e-3, 0.01f64..0.5, 1usize..4),
        prop::option::of(0.1f64..2.0),
        (0u8..3, -0.5f64..0.5, 0.5f64..3.0),
        any::<u64>(),
        prop::collection::vec(0.0f64..1.0, 0..4),
    )
        .prop_map(|(name, method, (eps, cfl, reg), b, (u_kind, amp, freq), seed, times)| {
            let mut c = RunConfig::from_preset(name);
            c.integrator.method = method;
            c.integrator.cfl_safety = cfl;
            c.integrator.t_end = 1.0;
            c.integrator.snapshot_times = times;
            c.params.eps = eps;
            c.params.n_reg = reg as u32 + 1;
            c.diagnostics.b = b;
            c.seed = seed;
            if !c.scenario.kind.has_vacuum() {
                c.scenario.u0 = match u_kind {
                    0 => VelocityInit::Zero,
                    1 => VelocityInit::Sine { amp, freq },
                    _ => VelocityInit::Constant(amp),
                };
                if c.scenario.bc != BoundaryCondition::Periodic {
                    c.scenario.u0 = VelocityInit::Sine { amp, freq: freq.round() };
                }
            }
            c
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn serialize_parse_round_trip(cfg in arb_config()) {
        prop_assume!(cfg.validate().is_ok());
        let text = serialize_config(&cfg);
        let back = parse_config(&text).unwrap();
        prop_assert_eq!(&back, &cfg);
        prop_assert_eq!(normalize(&text).unwrap(), text);
    }

    #[test]
    fn custom_profiles_round_trip(rho in prop::collection::vec(0.2f64..3.0, 2..8)) {
        let x: Vec<f64> = (0..rho.len()).map(|i| i as f64 / (rho.len() - 1) as f64).collect();
        let mut cfg = RunConfig::default();
        cfg.scenario.kind = ScenarioKind::Custom { x, rho: rho.clone(), u: vec![0.0; rho.len()] };
        prop_assume!(cfg.validate().is_ok());
        let text = serialize_config(&cfg);
        prop_assert_eq!(parse_config(&text).unwrap(), cfg);
    }
}
