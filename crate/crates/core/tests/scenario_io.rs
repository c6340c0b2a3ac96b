use std::path::PathBuf;

use harvest_core::io::config::{GridConfig, StateConfig, TimeModelConfig};
use harvest_core::io::{
    parse_scenario, write_sweep, write_sweep_csv, ScenarioConfig, SWEEP_HEADER,
};
use harvest_core::lattice::coupled::Probe;
use harvest_core::protocol::{default_perturbative_grid, sweep, HarvestScenario, SweepRow};
use harvest_core::states::{StateKind, TimeModel};
use harvest_core::Error;

fn template(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(name)
}

const MINIMAL: &str = r#"
[lattice]
n_space = 64
n_time = 120
dx = 0.25
dt = 0.2

[system]
mass = 0.5

[probe_a]
mass = 1.0

[probe_b]
mass = 1.0

[couplings.a]
bumps = [{ center = [6.0, 4.0], radii = [1.0, 1.0] }]

[couplings.b]
bumps = [{ center = [6.0, 12.0], radii = [1.0, 1.0] }]

[modes.a]
f1 = { center = [12.0, 4.0], radii = [1.0, 1.2] }
f2 = { center = [12.6, 4.0], radii = [1.0, 1.2] }

[modes.b]
f1 = { center = [12.0, 12.0], radii = [1.0, 1.2] }
f2 = { center = [12.6, 12.0], radii = [1.0, 1.2] }
"#;

fn config_error(text: &str) -> (String, String) {
    match ScenarioConfig::from_toml_str(text).and_then(|c| c.build()) {
        Err(Error::Config { key, message }) => (key, message),
        Err(other) => panic!("expected a config error, got {other}"),
        Ok(_) => panic!("expected a config error"),
    }
}

#[test]
fn minimal_file_gets_defaults() {
    let config = ScenarioConfig::from_toml_str(MINIMAL).unwrap();
    assert_eq!(config.states.time_model, TimeModelConfig::Leapfrog);
    assert_eq!(config.states.system, StateConfig::Vacuum);
    assert_eq!(config.couplings.a.bumps[0].amplitude, 1.0);
    let s = config.build().unwrap();
    assert_eq!(s.lambda_grid().len(), 11);
    assert_eq!(s.lambda_grid()[10], 1.0);
    assert_eq!(s.perturbative_grid, default_perturbative_grid());
    assert_eq!(s.system_state().time_model(), TimeModel::Leapfrog);
    assert!(s.coupled().zones_spacelike());
}

#[test]
fn shipped_templates_load() {
    for name in ["vacuum.toml", "thermal_probes.toml", "massless_limit.toml"] {
        let s = parse_scenario(template(name)).unwrap();
        assert!(s.coupled().zones_spacelike(), "{name}");
    }
    let thermal = parse_scenario(template("thermal_probes.toml")).unwrap();
    assert_eq!(
        (thermal.lattice().n_space, thermal.lattice().n_time),
        (128, 256)
    );
    assert!(matches!(
        thermal.probe_state(Probe::A).kind(),
        StateKind::Thermal { .. }
    ));
}

#[test]
fn cfl_violation_names_dt() {
    let (key, _) = config_error(&MINIMAL.replace("dt = 0.2", "dt = 0.5"));
    assert_eq!(key, "lattice.dt");
}

#[test]
fn missing_key_is_named() {
    let (key, message) = config_error(&MINIMAL.replace("dx = 0.25\n", ""));
    assert_eq!(key, "lattice.dx");
    assert!(message.contains("missing"), "{message}");
    let (key, _) = config_error(&MINIMAL.replace("[probe_b]\nmass = 1.0\n", ""));
    assert_eq!(key, "probe_b");
}

#[test]
fn unknown_key_is_rejected() {
    let (key, message) = config_error(&MINIMAL.replace("mass = 0.5", "mass = 0.5\ncolour = 3"));
    assert_eq!(key, "system.colour");
    assert!(message.contains("unknown field"), "{message}");
}

#[test]
fn mode_in_causal_past_is_rejected() {
    // Mode A placed before zone A, inside its causal past.
    let text = MINIMAL
        .replace("f1 = { center = [12.0, 4.0]", "f1 = { center = [2.5, 4.0]")
        .replace("f2 = { center = [12.6, 4.0]", "f2 = { center = [3.1, 4.0]");
    let (key, message) = config_error(&text);
    assert_eq!(key, "modes.a.f1");
    assert!(message.contains("causal past"), "{message}");
}

#[test]
fn zero_mass_is_infrared() {
    let (key, message) = config_error(&MINIMAL.replace("mass = 0.5", "mass = 0.0"));
    assert_eq!(key, "system.mass");
    assert!(message.contains("infrared"), "{message}");
}

#[test]
fn bump_outside_window_names_the_bump() {
    let (key, _) = config_error(&MINIMAL.replace("center = [6.0, 12.0]", "center = [0.5, 12.0]"));
    assert_eq!(key, "couplings.b.bumps[0]");
}

#[test]
fn oversized_lattice_is_rejected() {
    let (key, _) = config_error(&MINIMAL.replace("n_time = 120", "n_time = 100000"));
    assert_eq!(key, "lattice.n_time");
}

#[test]
fn bad_grids_are_rejected() {
    let (key, _) = config_error(&format!("{MINIMAL}\n[sweep]\nlambda = [0.2, 0.1]\n"));
    assert_eq!(key, "sweep.lambda");
    let (key, _) = config_error(&format!("{MINIMAL}\n[sweep]\ncritical_tol = 2.0\n"));
    assert_eq!(key, "sweep.critical_tol");
}

#[test]
fn explicit_state_round_trips() {
    let weights = vec![1.5; 64];
    let text = format!(
        "{MINIMAL}\n[states]\ntime_model = \"continuum\"\nsystem = {{ kind = \"explicit\", weights = {weights:?}, one_point = {{ center = [20.0, 8.0], radii = [1.0, 1.0] }} }}\n"
    );
    let config = ScenarioConfig::from_toml_str(&text).unwrap();
    let again = ScenarioConfig::from_toml_str(&config.to_toml_string().unwrap()).unwrap();
    assert_eq!(config, again);
    let s = again.build().unwrap();
    assert!(matches!(
        s.system_state().kind(),
        StateKind::Explicit {
            one_point: Some(_),
            ..
        }
    ));
}

fn assert_same_scenario(a: &HarvestScenario, b: &HarvestScenario) {
    assert_eq!(a.lattice(), b.lattice());
    assert_eq!(a.lambda_grid(), b.lambda_grid());
    assert_eq!(a.perturbative_grid, b.perturbative_grid);
    assert_eq!(a.critical, b.critical);
    assert_eq!(a.coupled().system_op(), b.coupled().system_op());
    for p in [Probe::A, Probe::B] {
        assert_eq!(a.coupled().probe_op(p), b.coupled().probe_op(p));
        assert_eq!(a.coupled().rho(p).field(), b.coupled().rho(p).field());
        assert_eq!(a.mode(p).f1.field(), b.mode(p).f1.field());
        assert_eq!(a.mode(p).f2.field(), b.mode(p).f2.field());
        assert_eq!(a.probe_state(p).kind(), b.probe_state(p).kind());
    }
    assert_eq!(a.system_state().kind(), b.system_state().kind());
}

#[test]
fn parse_serialize_parse_is_identical() {
    for name in ["vacuum.toml", "thermal_probes.toml", "massless_limit.toml"] {
        let config = ScenarioConfig::load(template(name)).unwrap();
        let text = config.to_toml_string().unwrap();
        let again = ScenarioConfig::from_toml_str(&text).unwrap();
        assert_eq!(config, again, "{name}");
        assert_eq!(text, again.to_toml_string().unwrap());
        assert_same_scenario(&config.build().unwrap(), &again.build().unwrap());
    }
}

#[test]
fn range_grid_expands_inclusively() {
    let config = ScenarioConfig::load(template("vacuum.toml")).unwrap();
    match &config.sweep.lambda {
        GridConfig::Range(r) => assert_eq!((r.start, r.stop, r.count), (0.0, 0.5, 6)),
        other => panic!("unexpected grid {other:?}"),
    }
    let values = config.sweep.lambda.values();
    assert_eq!(values.len(), 6);
    assert_eq!((values[0], values[5]), (0.0, 0.5));
    assert!(values.windows(2).all(|w| (w[1] - w[0] - 0.1).abs() < 1e-15));
}

#[test]
fn empty_rows_are_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(
        write_sweep_csv(&[], dir.path().join("x.csv")),
        Err(Error::Usage(_))
    ));
    assert!(matches!(write_sweep(&[], Vec::new()), Err(Error::Usage(_))));
}

#[test]
fn single_row_gives_two_lines() {
    let s = parse_scenario(template("vacuum.toml")).unwrap();
    let mut single = s.clone();
    single.set_lambda_grid(vec![0.0]).unwrap();
    let rows: Vec<SweepRow> = sweep(&single).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("one.csv");
    write_sweep_csv(&rows, &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0], SWEEP_HEADER);
    let fields: Vec<f64> = lines[1].split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(fields.len(), 8);
    assert_eq!(fields[0], 0.0);
    assert_eq!(fields[1], rows[0].p_s);
}

#[test]
fn csv_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for k in 0..2 {
        let s = parse_scenario(template("vacuum.toml")).unwrap();
        let path = dir.path().join(format!("run{k}.csv"));
        write_sweep_csv(&sweep(&s).unwrap(), &path).unwrap();
        outputs.push(std::fs::read(&path).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
}
