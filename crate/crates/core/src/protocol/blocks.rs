use nalgebra::Vector4;
use rayon::prelude::*;

use super::scenario::HarvestScenario;
use crate::error::{Error, Result};
use crate::lattice::coupled::Probe;
use crate::lattice::{CoupledSystem, TripleFunction};
use crate::states::ModeTransform;
use crate::symplectic::{negativity_from_nu, nu_minus_from, CovarianceTwoMode, Mat2, DEFAULT_TOL};

/// Smallest admissible eigenvalue of `γ(λ) + iΩ`.
pub const UNCERTAINTY_TOL: f64 = 1e-8;

/// Anything that yields a two-mode covariance as a function of coupling.
pub trait BlockProfile: Sync {
    fn blocks(&self, lambda: f64) -> Result<CovarianceTwoMode>;

    fn simon_value(&self, lambda: f64) -> Result<f64> {
        Ok(self.blocks(lambda)?.simon_value())
    }
}

impl BlockProfile for HarvestScenario {
    fn blocks(&self, lambda: f64) -> Result<CovarianceTwoMode> {
        assemble_blocks(self, lambda)
    }
}

/// `F_j^{I}` for `I ∈ {A, B}`, `j ∈ {1, 2}`: `θ` applied to `f_j^I` placed in
/// probe slot `I`.
pub fn theta_images(scenario: &HarvestScenario, lambda: f64) -> Result<[[TripleFunction; 2]; 2]> {
    let coupled = scenario.coupled();
    let image = |probe: Probe, j: usize| -> Result<TripleFunction> {
        let mode = scenario.mode(probe);
        let f = if j == 0 { &mode.f1 } else { &mode.f2 };
        coupled.theta_apply(lambda, &TripleFunction::probe_only(probe, f.field()))
    };
    Ok([
        [image(Probe::A, 0)?, image(Probe::A, 1)?],
        [image(Probe::B, 0)?, image(Probe::B, 1)?],
    ])
}

/// Mode transforms of every slot of `g`, in the slot's own state.
pub fn slot_transforms(
    scenario: &HarvestScenario,
    g: &TripleFunction,
) -> Result<[ModeTransform; 3]> {
    let states = scenario.states();
    let c = g.components();
    Ok([
        states[0].transform(c[0])?,
        states[1].transform(c[1])?,
        states[2].transform(c[2])?,
    ])
}

/// Per-slot contributions `Σ_l` to the blocks, `l ∈ {system, A, B}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockContributions {
    pub a: [Mat2; 3],
    pub b: [Mat2; 3],
    pub c: [Mat2; 3],
    pub one_point: Vector4<f64>,
}

impl BlockContributions {
    pub fn from_transforms(t: &[[[ModeTransform; 3]; 2]; 2]) -> Self {
        let pair = |x: &[[ModeTransform; 3]; 2], y: &[[ModeTransform; 3]; 2], l: usize| {
            Mat2::from_fn(|j, k| x[j][l].beta(&y[k][l]))
        };
        let mut a = [Mat2::zeros(); 3];
        let mut b = [Mat2::zeros(); 3];
        let mut c = [Mat2::zeros(); 3];
        for l in 0..3 {
            a[l] = pair(&t[0], &t[0], l);
            b[l] = pair(&t[1], &t[1], l);
            c[l] = pair(&t[0], &t[1], l);
        }
        let chi = |x: &[ModeTransform; 3]| x.iter().map(|m| m.one_point()).sum::<f64>();
        let one_point = Vector4::new(chi(&t[0][0]), chi(&t[0][1]), chi(&t[1][0]), chi(&t[1][1]));
        Self { a, b, c, one_point }
    }

    pub fn covariance(&self) -> Result<CovarianceTwoMode> {
        let sum = |m: &[Mat2; 3]| m[0] + m[1] + m[2];
        let a = sum(&self.a);
        let b = sum(&self.b);
        // Symmetrize the diagonal blocks against summation-order roundoff.
        let gamma = CovarianceTwoMode::from_blocks(
            &((a + a.transpose()) * 0.5),
            &((b + b.transpose()) * 0.5),
            &sum(&self.c),
        )?;
        Ok(gamma.with_one_point(self.one_point))
    }
}

fn contributions_of(
    scenario: &HarvestScenario,
    images: &[[TripleFunction; 2]; 2],
) -> Result<BlockContributions> {
    let t = [
        [
            slot_transforms(scenario, &images[0][0])?,
            slot_transforms(scenario, &images[0][1])?,
        ],
        [
            slot_transforms(scenario, &images[1][0])?,
            slot_transforms(scenario, &images[1][1])?,
        ],
    ];
    Ok(BlockContributions::from_transforms(&t))
}

/// The three-slot sums making up `A(λ)`, `B(λ)`, `C(λ)`.
pub fn block_contributions(scenario: &HarvestScenario, lambda: f64) -> Result<BlockContributions> {
    contributions_of(scenario, &theta_images(scenario, lambda)?)
}

fn checked(gamma: CovarianceTwoMode) -> Result<CovarianceTwoMode> {
    let margin = gamma.uncertainty_margin();
    if margin < -UNCERTAINTY_TOL {
        return Err(Error::UncertaintyViolation {
            min_eigenvalue: margin,
        });
    }
    Ok(gamma)
}

/// `γ(λ)` of the two local modes after the interaction.
pub fn assemble_blocks(scenario: &HarvestScenario, lambda: f64) -> Result<CovarianceTwoMode> {
    checked(block_contributions(scenario, lambda)?.covariance()?)
}

/// `γ(λ)` with `θ` replaced by its Born series truncated after `λ^order`.
pub fn assemble_blocks_born(
    scenario: &HarvestScenario,
    lambda: f64,
    order: usize,
) -> Result<CovarianceTwoMode> {
    let coupled = scenario.coupled();
    let image = |probe: Probe, j: usize| -> Result<TripleFunction> {
        let mode = scenario.mode(probe);
        let f = if j == 0 { &mode.f1 } else { &mode.f2 };
        let terms =
            coupled.born_theta_terms(&TripleFunction::probe_only(probe, f.field()), order)?;
        CoupledSystem::born_sum(&terms, lambda)
    };
    let images = [
        [image(Probe::A, 0)?, image(Probe::A, 1)?],
        [image(Probe::B, 0)?, image(Probe::B, 1)?],
    ];
    contributions_of(scenario, &images)?.covariance()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub lambda: f64,
    pub p_s: f64,
    pub nu_minus: f64,
    pub negativity: f64,
    pub det_a: f64,
    pub det_b: f64,
    pub det_c: f64,
    pub trace_term: f64,
}

impl SweepRow {
    pub fn from_covariance(lambda: f64, gamma: &CovarianceTwoMode) -> Result<Self> {
        let inv = gamma.invariants();
        let nu = nu_minus_from(&inv, DEFAULT_TOL)?;
        Ok(Self {
            lambda,
            p_s: inv.simon_value(),
            nu_minus: nu,
            negativity: negativity_from_nu(nu),
            det_a: inv.det_a,
            det_b: inv.det_b,
            det_c: inv.det_c,
            trace_term: inv.trace_term,
        })
    }

    /// `p_s > 0 ⟺ negativity > 0`, ignoring `|p_s| ≤ band`.
    pub fn is_consistent(&self, band: f64) -> bool {
        self.p_s.abs() <= band || (self.p_s > 0.0) == (self.negativity > 0.0)
    }
}

/// One row per grid value of any profile, in grid order.
pub fn sweep_profile<P: BlockProfile + ?Sized>(profile: &P, grid: &[f64]) -> Result<Vec<SweepRow>> {
    grid.par_iter()
        .map(|&lambda| SweepRow::from_covariance(lambda, &profile.blocks(lambda)?))
        .collect()
}

/// Sweeps the scenario's own coupling grid.
pub fn sweep(scenario: &HarvestScenario) -> Result<Vec<SweepRow>> {
    sweep_profile(scenario, scenario.lambda_grid())
}
