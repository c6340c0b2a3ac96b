use crate::error::{Error, Result};
use crate::lattice::coupled::Probe;
use crate::lattice::{
    make_bump, normalize_mode, CoupledSystem, FieldOperatorSpec, LatticeSpec, TestFunction,
};
use crate::states::QuasiFreeState;

/// Two test functions with `E(f₁, f₂) = 1` for the probe operator.
#[derive(Debug, Clone)]
pub struct ModePair {
    pub f1: TestFunction,
    pub f2: TestFunction,
}

impl ModePair {
    /// Rescales `f2` to unit causal pairing.
    pub fn normalized(op: &FieldOperatorSpec, f1: TestFunction, f2: TestFunction) -> Result<Self> {
        let (f1, f2) = normalize_mode(op, &f1, &f2, MODE_TOL)?;
        Ok(Self { f1, f2 })
    }
}

/// Number of modes in [`local_mode_family`].
pub const MODE_FAMILY_SIZE: usize = 10;

/// Ten compactly supported modes of varied size spread around the circle at
/// mid-window, `f₂` trailing `f₁` by half its time radius. Sizes scale with
/// the lattice; at least 50 sites are needed.
pub fn local_mode_family(lattice: &LatticeSpec, op: &FieldOperatorSpec) -> Result<Vec<ModePair>> {
    let duration = lattice.duration();
    let circumference = lattice.circumference();
    (0..MODE_FAMILY_SIZE)
        .map(|k| {
            let rt = duration * (0.08 + 0.02 * (k % 3) as f64);
            let rx = circumference * (0.04 + 0.01 * (k % 4) as f64);
            let t = 0.5 * duration;
            let x = circumference * (k + 1) as f64 / (MODE_FAMILY_SIZE + 1) as f64;
            let f1 = make_bump(*lattice, (t, x), (rt, rx), 1.0)?;
            let f2 = make_bump(*lattice, (t + 0.5 * rt, x), (rt, rx), 1.0)?;
            ModePair::normalized(op, f1, f2)
        })
        .collect()
}

/// Minimal `|E(f₁, f₂)|` accepted for a mode.
pub const MODE_TOL: f64 = 1e-10;

/// Settings for the critical-coupling search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalSearch {
    pub interval: (f64, f64),
    pub scan_points: usize,
    /// Relative bracket width at which bisection stops.
    pub tol: f64,
}

impl Default for CriticalSearch {
    fn default() -> Self {
        Self {
            interval: (0.0, 1.0),
            scan_points: 64,
            tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone)]
pub struct HarvestScenario {
    coupled: CoupledSystem,
    mode_a: ModePair,
    mode_b: ModePair,
    system_state: QuasiFreeState,
    probe_a_state: QuasiFreeState,
    probe_b_state: QuasiFreeState,
    lambda_grid: Vec<f64>,
    pub critical: CriticalSearch,
    /// Couplings used for the perturbative residual fit.
    pub perturbative_grid: Vec<f64>,
}

/// Default perturbative fit grid, log-spaced over `[1e-3, 1e-2]`.
pub fn default_perturbative_grid() -> Vec<f64> {
    (0..5).map(|k| 1e-3 * 10f64.powf(k as f64 / 4.0)).collect()
}

impl HarvestScenario {
    /// Validates the geometry. Modes are expected already normalized; see
    /// [`ModePair::normalized`].
    pub fn new(
        coupled: CoupledSystem,
        mode_a: ModePair,
        mode_b: ModePair,
        states: [QuasiFreeState; 3],
        lambda_grid: Vec<f64>,
    ) -> Result<Self> {
        let [system_state, probe_a_state, probe_b_state] = states;
        let lattice = *coupled.lattice();
        for (name, state, op) in [
            ("system", &system_state, coupled.system_op()),
            ("probe_a", &probe_a_state, coupled.probe_op(Probe::A)),
            ("probe_b", &probe_b_state, coupled.probe_op(Probe::B)),
        ] {
            if state.lattice() != &lattice {
                return Err(Error::Precondition(format!(
                    "{name} state lives on a different lattice"
                )));
            }
            if state.operator() != op {
                return Err(Error::Precondition(format!(
                    "{name} state was built for a different operator"
                )));
            }
        }
        let zones = coupled.zones();
        for (name, mode) in [("mode_a", &mode_a), ("mode_b", &mode_b)] {
            for f in [&mode.f1, &mode.f2] {
                if f.lattice() != &lattice {
                    return Err(Error::LatticeMismatch);
                }
                if zones.box_meets_past(f.support()) {
                    return Err(Error::CausalGeometry(format!(
                        "{name} support {:?} meets the causal past of the coupling zones",
                        f.support()
                    )));
                }
            }
        }
        validate_grid(&lambda_grid)?;
        Ok(Self {
            coupled,
            mode_a,
            mode_b,
            system_state,
            probe_a_state,
            probe_b_state,
            lambda_grid,
            critical: CriticalSearch::default(),
            perturbative_grid: default_perturbative_grid(),
        })
    }

    pub fn lattice(&self) -> &LatticeSpec {
        self.coupled.lattice()
    }

    pub fn coupled(&self) -> &CoupledSystem {
        &self.coupled
    }

    pub fn mode(&self, probe: Probe) -> &ModePair {
        match probe {
            Probe::A => &self.mode_a,
            Probe::B => &self.mode_b,
        }
    }

    pub fn system_state(&self) -> &QuasiFreeState {
        &self.system_state
    }

    pub fn probe_state(&self, probe: Probe) -> &QuasiFreeState {
        match probe {
            Probe::A => &self.probe_a_state,
            Probe::B => &self.probe_b_state,
        }
    }

    /// States in slot order: system, probe A, probe B.
    pub fn states(&self) -> [&QuasiFreeState; 3] {
        [&self.system_state, &self.probe_a_state, &self.probe_b_state]
    }

    pub fn lambda_grid(&self) -> &[f64] {
        &self.lambda_grid
    }

    pub fn set_lambda_grid(&mut self, grid: Vec<f64>) -> Result<()> {
        validate_grid(&grid)?;
        self.lambda_grid = grid;
        Ok(())
    }

    /// Probe A and probe B swapped.
    pub fn exchanged(&self) -> HarvestScenario {
        let mut out = self.clone();
        out.coupled = self.coupled.exchanged();
        std::mem::swap(&mut out.mode_a, &mut out.mode_b);
        std::mem::swap(&mut out.probe_a_state, &mut out.probe_b_state);
        out
    }

    /// The coupling of `other` switched off.
    pub fn single_probe_view(&self, keep: Probe) -> HarvestScenario {
        let mut out = self.clone();
        out.coupled = self.coupled.single_probe_view(keep);
        out
    }

    /// Both coupling functions multiplied by `c`.
    pub fn with_scaled_coupling(&self, c: f64) -> Result<HarvestScenario> {
        let mut out = self.clone();
        out.coupled = CoupledSystem::new(
            self.coupled.system_op().clone(),
            self.coupled.probe_op(Probe::A).clone(),
            self.coupled.probe_op(Probe::B).clone(),
            self.coupled.rho(Probe::A).scaled(c),
            self.coupled.rho(Probe::B).scaled(c),
        )?;
        Ok(out)
    }
}

fn validate_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::Precondition("lambda grid is empty".into()));
    }
    if grid.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
        return Err(Error::Precondition(
            "lambda grid values must be finite and non-negative".into(),
        ));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Precondition(
            "lambda grid must be strictly ascending".into(),
        ));
    }
    Ok(())
}
