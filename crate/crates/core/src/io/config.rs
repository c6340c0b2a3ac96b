//! TOML scenario files.
//!
//! Loading happens in two stages. [`ScenarioConfig::from_toml_str`] parses
//! the document and runs every check that does not need a field solve
//! (sizes, CFL, bump boxes, grids). [`ScenarioConfig::build`] then computes
//! spectra, normalizes modes and checks causal placement. Every error names
//! the offending key.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{
    check_bump, make_bump, CoupledSystem, FieldOperatorSpec, LatticeSpec, TestFunction,
};
use crate::protocol::{CriticalSearch, HarvestScenario, ModePair};
use crate::states::{QuasiFreeState, StateKind, TimeModel};

/// Largest accepted scenario file.
pub const MAX_FILE_BYTES: u64 = 1 << 20;
pub const MAX_SPACE_SITES: usize = 4096;
pub const MAX_TIME_STEPS: usize = 16384;
/// Cap on `n_space · n_time`.
pub const MAX_LATTICE_POINTS: usize = 1 << 22;
/// Cap on the length of any coupling grid.
pub const MAX_GRID_POINTS: usize = 100_000;
pub const MAX_COUPLING_BUMPS: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub lattice: LatticeConfig,
    pub system: OperatorConfig,
    pub probe_a: OperatorConfig,
    pub probe_b: OperatorConfig,
    #[serde(default)]
    pub states: StatesConfig,
    pub couplings: CouplingsConfig,
    pub modes: ModesConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
}

/// Lattice units throughout, `c = ħ = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeConfig {
    pub n_space: usize,
    pub n_time: usize,
    pub dx: f64,
    pub dt: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorConfig {
    /// Inverse length.
    pub mass: f64,
    /// Static potential, one value per spatial site.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub potential: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimeModelConfig {
    Continuum,
    #[default]
    Leapfrog,
}

impl From<TimeModelConfig> for TimeModel {
    fn from(value: TimeModelConfig) -> Self {
        match value {
            TimeModelConfig::Continuum => TimeModel::Continuum,
            TimeModelConfig::Leapfrog => TimeModel::Leapfrog,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StatesConfig {
    #[serde(default)]
    pub time_model: TimeModelConfig,
    #[serde(default)]
    pub system: StateConfig,
    #[serde(default)]
    pub probe_a: StateConfig,
    #[serde(default)]
    pub probe_b: StateConfig,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum StateConfig {
    #[default]
    Vacuum,
    Thermal {
        temperature: f64,
    },
    /// Per-mode weights `≥ 1` in ascending-frequency order, optionally with
    /// a bump-shaped one-point function.
    Explicit {
        weights: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        one_point: Option<BumpConfig>,
    },
}

/// `amplitude · exp(-1/(1-u_t²)) · exp(-1/(1-u_x²))` around `center = [t, x]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BumpConfig {
    pub center: [f64; 2],
    pub radii: [f64; 2],
    #[serde(default = "unit_amplitude")]
    pub amplitude: f64,
}

fn unit_amplitude() -> f64 {
    1.0
}

impl BumpConfig {
    fn check(&self, lattice: &LatticeSpec, key: &str) -> Result<()> {
        check_bump(lattice, self.center(), self.radii(), self.amplitude).map_err(|e| keyed(key, e))
    }

    fn center(&self) -> (f64, f64) {
        (self.center[0], self.center[1])
    }

    fn radii(&self) -> (f64, f64) {
        (self.radii[0], self.radii[1])
    }

    fn build(&self, lattice: LatticeSpec, key: &str) -> Result<TestFunction> {
        make_bump(lattice, self.center(), self.radii(), self.amplitude).map_err(|e| keyed(key, e))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingsConfig {
    pub a: CouplingConfig,
    pub b: CouplingConfig,
}

/// Coupling function as a sum of bumps; a single product bump by default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingConfig {
    pub bumps: Vec<BumpConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModesConfig {
    pub a: ModeConfig,
    pub b: ModeConfig,
}

/// `f2` is rescaled at load so that `E(f1, f2) = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeConfig {
    pub f1: BumpConfig,
    pub f2: BumpConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridConfig {
    Values(Vec<f64>),
    /// `count` evenly spaced points from `start` to `stop` inclusive.
    Range(RangeConfig),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RangeConfig {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl GridConfig {
    fn len(&self) -> usize {
        match self {
            GridConfig::Values(v) => v.len(),
            GridConfig::Range(r) => r.count,
        }
    }

    pub fn values(&self) -> Vec<f64> {
        match self {
            GridConfig::Values(v) => v.clone(),
            GridConfig::Range(RangeConfig { start, stop, count }) => match count {
                0 => Vec::new(),
                1 => vec![*start],
                n => (0..*n)
                    .map(|k| start + (stop - start) * k as f64 / (n - 1) as f64)
                    .collect(),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default = "default_lambda")]
    pub lambda: GridConfig,
    #[serde(default = "default_interval")]
    pub critical_interval: [f64; 2],
    #[serde(default = "default_scan_points")]
    pub scan_points: usize,
    /// Relative bracket width at which the critical-coupling bisection stops.
    #[serde(default = "default_critical_tol")]
    pub critical_tol: f64,
    #[serde(default = "default_perturbative")]
    pub perturbative: Vec<f64>,
}

fn default_lambda() -> GridConfig {
    GridConfig::Range(RangeConfig {
        start: 0.0,
        stop: 1.0,
        count: 11,
    })
}

fn default_interval() -> [f64; 2] {
    let d = CriticalSearch::default();
    [d.interval.0, d.interval.1]
}

fn default_scan_points() -> usize {
    CriticalSearch::default().scan_points
}

fn default_critical_tol() -> f64 {
    CriticalSearch::default().tol
}

fn default_perturbative() -> Vec<f64> {
    crate::protocol::default_perturbative_grid()
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            lambda: default_lambda(),
            critical_interval: default_interval(),
            scan_points: default_scan_points(),
            critical_tol: default_critical_tol(),
            perturbative: default_perturbative(),
        }
    }
}

fn keyed(key: &str, err: Error) -> Error {
    match err {
        Error::Config { .. } => err,
        other => Error::config(key, other.to_string()),
    }
}

fn finite_nonneg(key: &str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(Error::config(
            key,
            format!("{v} must be finite and non-negative"),
        ))
    }
}

impl ScenarioConfig {
    /// Parses and runs the solve-free checks.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        if text.len() as u64 > MAX_FILE_BYTES {
            return Err(Error::config(
                "<document>",
                format!("larger than {MAX_FILE_BYTES} bytes"),
            ));
        }
        let de = toml::Deserializer::parse(text)
            .map_err(|e| Error::config("<document>", e.message()))?;
        let config: ScenarioConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let message = e.inner().message().to_string();
            let key = match message
                .strip_prefix("missing field `")
                .and_then(|m| m.split('`').next())
            {
                Some(field) if path == "." => field.to_string(),
                Some(field) => format!("{path}.{field}"),
                None => path,
            };
            Error::config(key, message)
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let size = std::fs::metadata(path)?.len();
        if size > MAX_FILE_BYTES {
            return Err(Error::config(
                "<document>",
                format!("{size} bytes exceeds {MAX_FILE_BYTES}"),
            ));
        }
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::config("<document>", e.to_string()))
    }

    pub fn lattice_spec(&self) -> LatticeSpec {
        let l = &self.lattice;
        LatticeSpec {
            n_space: l.n_space,
            n_time: l.n_time,
            dx: l.dx,
            dt: l.dt,
        }
    }

    fn operator(&self, which: &str) -> FieldOperatorSpec {
        let c = match which {
            "system" => &self.system,
            "probe_a" => &self.probe_a,
            _ => &self.probe_b,
        };
        FieldOperatorSpec {
            mass: c.mass,
            potential: c.potential.clone(),
        }
    }

    /// Checks that need no spectra or field solves.
    pub fn validate(&self) -> Result<()> {
        let l = &self.lattice;
        if !(8..=MAX_SPACE_SITES).contains(&l.n_space) {
            return Err(Error::config(
                "lattice.n_space",
                format!("must lie in [8, {MAX_SPACE_SITES}]"),
            ));
        }
        if !(8..=MAX_TIME_STEPS).contains(&l.n_time) {
            return Err(Error::config(
                "lattice.n_time",
                format!("must lie in [8, {MAX_TIME_STEPS}]"),
            ));
        }
        if l.n_space * l.n_time > MAX_LATTICE_POINTS {
            return Err(Error::config(
                "lattice.n_time",
                format!("n_space · n_time exceeds {MAX_LATTICE_POINTS}"),
            ));
        }
        if !(l.dx.is_finite() && l.dx > 0.0) {
            return Err(Error::config("lattice.dx", "must be positive and finite"));
        }
        if !(l.dt.is_finite() && l.dt > 0.0) {
            return Err(Error::config("lattice.dt", "must be positive and finite"));
        }
        let lattice = self.lattice_spec();
        lattice.validate().map_err(|e| keyed("lattice.dt", e))?;

        for which in ["system", "probe_a", "probe_b"] {
            let op = self.operator(which);
            finite_nonneg(&format!("{which}.mass"), op.mass)?;
            if op.potential.is_some() {
                op.validate(&lattice)
                    .map_err(|e| keyed(&format!("{which}.potential"), e))?;
            }
            op.check_stability(&lattice, 0.0)
                .map_err(|e| keyed("lattice.dt", e))?;
        }

        for (which, state) in [
            ("system", &self.states.system),
            ("probe_a", &self.states.probe_a),
            ("probe_b", &self.states.probe_b),
        ] {
            let key = format!("states.{which}");
            match state {
                StateConfig::Vacuum => {}
                StateConfig::Thermal { temperature } => {
                    if !(temperature.is_finite() && *temperature > 0.0) {
                        return Err(Error::config(
                            format!("{key}.temperature"),
                            "must be positive and finite",
                        ));
                    }
                }
                StateConfig::Explicit { weights, one_point } => {
                    if weights.len() != l.n_space {
                        return Err(Error::config(
                            format!("{key}.weights"),
                            format!(
                                "has {} entries, lattice has {} sites",
                                weights.len(),
                                l.n_space
                            ),
                        ));
                    }
                    if weights.iter().any(|w| !(w.is_finite() && *w >= 1.0)) {
                        return Err(Error::config(
                            format!("{key}.weights"),
                            "weights must be finite and at least 1",
                        ));
                    }
                    if let Some(b) = one_point {
                        b.check(&lattice, &format!("{key}.one_point"))?;
                    }
                }
            }
        }

        for (name, coupling) in [("a", &self.couplings.a), ("b", &self.couplings.b)] {
            let key = format!("couplings.{name}.bumps");
            if coupling.bumps.is_empty() || coupling.bumps.len() > MAX_COUPLING_BUMPS {
                return Err(Error::config(
                    key,
                    format!("needs between 1 and {MAX_COUPLING_BUMPS} bumps"),
                ));
            }
            for (k, b) in coupling.bumps.iter().enumerate() {
                b.check(&lattice, &format!("{key}[{k}]"))?;
            }
        }
        for (name, mode) in [("a", &self.modes.a), ("b", &self.modes.b)] {
            mode.f1.check(&lattice, &format!("modes.{name}.f1"))?;
            mode.f2.check(&lattice, &format!("modes.{name}.f2"))?;
        }

        let s = &self.sweep;
        let grid_len = s.lambda.len();
        if grid_len == 0 || grid_len > MAX_GRID_POINTS {
            return Err(Error::config(
                "sweep.lambda",
                format!("needs between 1 and {MAX_GRID_POINTS} points"),
            ));
        }
        if let GridConfig::Range(r) = &s.lambda {
            finite_nonneg("sweep.lambda.start", r.start)?;
            finite_nonneg("sweep.lambda.stop", r.stop)?;
            if r.count > 1 && r.stop <= r.start {
                return Err(Error::config("sweep.lambda.stop", "must exceed start"));
            }
        }
        let grid = s.lambda.values();
        if grid.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::config(
                "sweep.lambda",
                "values must be finite and non-negative",
            ));
        }
        if grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::config(
                "sweep.lambda",
                "values must be strictly ascending",
            ));
        }
        let [a, b] = s.critical_interval;
        if !(a.is_finite() && b.is_finite() && a >= 0.0 && b > a) {
            return Err(Error::config(
                "sweep.critical_interval",
                "must satisfy 0 ≤ a < b",
            ));
        }
        if !(2..=MAX_GRID_POINTS).contains(&s.scan_points) {
            return Err(Error::config(
                "sweep.scan_points",
                format!("must lie in [2, {MAX_GRID_POINTS}]"),
            ));
        }
        if !(s.critical_tol > 0.0 && s.critical_tol < 1.0) {
            return Err(Error::config("sweep.critical_tol", "must lie in (0, 1)"));
        }
        if s.perturbative.len() < 2 || s.perturbative.len() > MAX_GRID_POINTS {
            return Err(Error::config(
                "sweep.perturbative",
                format!("needs between 2 and {MAX_GRID_POINTS} points"),
            ));
        }
        if s.perturbative.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::config(
                "sweep.perturbative",
                "values must be positive and finite",
            ));
        }
        if s.perturbative.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::config(
                "sweep.perturbative",
                "values must be strictly ascending",
            ));
        }
        Ok(())
    }

    /// Computes spectra, normalizes modes and checks causal placement.
    pub fn build(&self) -> Result<HarvestScenario> {
        self.validate()?;
        let lattice = self.lattice_spec();
        let system_op = self.operator("system");
        let probe_a_op = self.operator("probe_a");
        let probe_b_op = self.operator("probe_b");

        let rho = |name: &str, c: &CouplingConfig| -> Result<TestFunction> {
            let key = format!("couplings.{name}.bumps");
            let mut total = c.bumps[0].build(lattice, &format!("{key}[0]"))?;
            for (k, b) in c.bumps.iter().enumerate().skip(1) {
                total = total.add(&b.build(lattice, &format!("{key}[{k}]"))?)?;
            }
            Ok(total)
        };
        let coupled = CoupledSystem::new(
            system_op.clone(),
            probe_a_op.clone(),
            probe_b_op.clone(),
            rho("a", &self.couplings.a)?,
            rho("b", &self.couplings.b)?,
        )?;
        let grid = self.sweep.lambda.values();
        let top = grid.last().copied().unwrap_or(0.0);
        coupled
            .check_stability(top)
            .map_err(|e| keyed("sweep.lambda", e))?;
        coupled
            .check_stability(self.sweep.critical_interval[1])
            .map_err(|e| keyed("sweep.critical_interval", e))?;

        let zones = coupled.zones();
        let mut modes = Vec::with_capacity(2);
        for (name, mode, op) in [
            ("a", &self.modes.a, &probe_a_op),
            ("b", &self.modes.b, &probe_b_op),
        ] {
            let f1 = mode.f1.build(lattice, &format!("modes.{name}.f1"))?;
            let f2 = mode.f2.build(lattice, &format!("modes.{name}.f2"))?;
            for (j, f) in [("f1", &f1), ("f2", &f2)] {
                if zones.box_meets_past(f.support()) {
                    return Err(Error::config(
                        format!("modes.{name}.{j}"),
                        "support meets the causal past of the coupling zones",
                    ));
                }
            }
            modes.push(
                ModePair::normalized(op, f1, f2).map_err(|e| keyed(&format!("modes.{name}"), e))?,
            );
        }
        let mode_b = modes.pop().expect("two modes");
        let mode_a = modes.pop().expect("two modes");

        let time_model = TimeModel::from(self.states.time_model);
        let state =
            |which: &str, c: &StateConfig, op: &FieldOperatorSpec| -> Result<QuasiFreeState> {
                let kind = match c {
                    StateConfig::Vacuum => StateKind::Vacuum,
                    StateConfig::Thermal { temperature } => StateKind::Thermal {
                        temperature: *temperature,
                    },
                    StateConfig::Explicit { weights, one_point } => StateKind::Explicit {
                        weights: weights.clone(),
                        one_point: one_point
                            .map(|b| {
                                b.build(lattice, &format!("states.{which}.one_point"))
                                    .map(TestFunction::into_field)
                            })
                            .transpose()?,
                    },
                };
                QuasiFreeState::build_with(kind, op.clone(), lattice, time_model).map_err(|e| {
                    let key = match e {
                        Error::Infrared { .. } if op.potential.is_some() => {
                            format!("{which}.potential")
                        }
                        Error::Infrared { .. } => format!("{which}.mass"),
                        _ => format!("states.{which}"),
                    };
                    keyed(&key, e)
                })
            };
        let states = [
            state("system", &self.states.system, &system_op)?,
            state("probe_a", &self.states.probe_a, &probe_a_op)?,
            state("probe_b", &self.states.probe_b, &probe_b_op)?,
        ];
        let mut scenario = HarvestScenario::new(coupled, mode_a, mode_b, states, grid)?;
        let s = &self.sweep;
        scenario.critical = CriticalSearch {
            interval: (s.critical_interval[0], s.critical_interval[1]),
            scan_points: s.scan_points,
            tol: s.critical_tol,
        };
        scenario.perturbative_grid = s.perturbative.clone();
        Ok(scenario)
    }
}

/// Reads, validates and builds a scenario file.
pub fn parse_scenario(path: impl AsRef<Path>) -> Result<HarvestScenario> {
    ScenarioConfig::load(path)?.build()
}
