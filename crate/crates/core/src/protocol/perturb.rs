use super::blocks::{slot_transforms, BlockProfile};
use super::scenario::HarvestScenario;
use crate::error::{Error, Result};
use crate::lattice::coupled::Probe;
use crate::lattice::TripleFunction;
use crate::states::ModeTransform;
use crate::symplectic::{symplectic_unit, CovarianceTwoMode, Mat2};

/// Expansion blocks `A = A₀ + λ²A₂ + λ⁴A₄`, `B` likewise, `C = λ²C₂`.
///
/// Used directly as a covariance profile this is the "synthetic block
/// pipeline": the closed-form coefficients can be tested without any PDE
/// error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticBlocks {
    pub a0: Mat2,
    pub a2: Mat2,
    pub a4: Mat2,
    pub b0: Mat2,
    pub b2: Mat2,
    pub b4: Mat2,
    pub c2: Mat2,
}

impl SyntheticBlocks {
    /// Only the zeroth order and `C₂`; higher diagonal orders vanish.
    pub fn leading(a0: Mat2, b0: Mat2, c2: Mat2) -> Self {
        Self {
            a0,
            a2: Mat2::zeros(),
            a4: Mat2::zeros(),
            b0,
            b2: Mat2::zeros(),
            b4: Mat2::zeros(),
            c2,
        }
    }

    pub fn coefficients(&self) -> Result<PerturbativeCoefficients> {
        let s = symplectic_unit();
        let da0 = self.a0.determinant();
        let db0 = self.b0.determinant();
        let inv = |m: &Mat2, name: &str| {
            m.try_inverse()
                .ok_or_else(|| Error::Precondition(format!("{name} is singular")))
        };
        let a0_inv = inv(&self.a0, "A₀")?;
        let b0_inv = inv(&self.b0, "B₀")?;
        let ta2 = (a0_inv * self.a2).trace();
        let tb2 = (b0_inv * self.b2).trace();
        let ta4 = (a0_inv * self.a4).trace();
        let tb4 = (b0_inv * self.b4).trace();
        let det_c2 = self.c2.determinant();
        let trace_c2 = (self.a0 * s * self.c2 * s * self.b0 * s * self.c2.transpose() * s).trace();

        let p0 = -(da0 - 1.0) * (db0 - 1.0);
        let p2 = (1.0 - da0) * db0 * tb2 + (1.0 - db0) * da0 * ta2;
        let common = -da0 * db0 * ta2 * tb2
            + (1.0 - db0) * (self.a2.determinant() + da0 * ta4)
            + (1.0 - da0) * (self.b2.determinant() + db0 * tb4)
            + trace_c2;
        Ok(PerturbativeCoefficients {
            p0,
            p2,
            p4: common - 2.0 * det_c2,
            p4_uncertainty: common + 2.0 * det_c2,
            det_c2,
            blocks: *self,
        })
    }
}

impl BlockProfile for SyntheticBlocks {
    fn blocks(&self, lambda: f64) -> Result<CovarianceTwoMode> {
        let l2 = lambda * lambda;
        let l4 = l2 * l2;
        CovarianceTwoMode::from_blocks(
            &(self.a0 + self.a2 * l2 + self.a4 * l4),
            &(self.b0 + self.b2 * l2 + self.b4 * l4),
            &(self.c2 * l2),
        )
    }
}

/// `p_S(λ) = p₀ + λ²p₂ + λ⁴p₄ + O(λ⁶)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbativeCoefficients {
    pub p0: f64,
    pub p2: f64,
    pub p4: f64,
    /// `p̃₄`, the same coefficient of the companion polynomial with `(1 - det C)²`.
    pub p4_uncertainty: f64,
    pub det_c2: f64,
    pub blocks: SyntheticBlocks,
}

impl PerturbativeCoefficients {
    pub fn polynomial(&self, lambda: f64) -> f64 {
        let l2 = lambda * lambda;
        self.p0 + l2 * (self.p2 + l2 * self.p4)
    }
}

/// Born terms up to this order enter `A₄`, `B₄`, `C₂`.
const BORN_ORDER: usize = 4;

/// Expansion coefficients of the blocks, `X_n` for `n = 0..=4`, from Cauchy
/// products of Born terms.
#[derive(Debug, Clone, PartialEq)]
pub struct BornBlocks {
    pub a: Vec<Mat2>,
    pub b: Vec<Mat2>,
    pub c: Vec<Mat2>,
}

impl BornBlocks {
    /// Largest entry of the coefficients that vanish for spacelike zones:
    /// odd orders of `A`, `B`, `C` and `C₀`.
    pub fn forbidden_magnitude(&self) -> f64 {
        let odd = |v: &[Mat2]| {
            v.iter()
                .skip(1)
                .step_by(2)
                .map(|m| m.abs().max())
                .fold(0.0, f64::max)
        };
        odd(&self.a)
            .max(odd(&self.b))
            .max(odd(&self.c))
            .max(self.c[0].abs().max())
    }

    pub fn synthetic(&self) -> SyntheticBlocks {
        let sym = |m: Mat2| (m + m.transpose()) * 0.5;
        SyntheticBlocks {
            a0: sym(self.a[0]),
            a2: sym(self.a[2]),
            a4: sym(self.a[4]),
            b0: sym(self.b[0]),
            b2: sym(self.b[2]),
            b4: sym(self.b[4]),
            c2: self.c[2],
        }
    }
}

pub fn born_blocks(scenario: &HarvestScenario) -> Result<BornBlocks> {
    let coupled = scenario.coupled();
    let transforms = |probe: Probe| -> Result<[Vec<[ModeTransform; 3]>; 2]> {
        let mode = scenario.mode(probe);
        let one = |f: &crate::lattice::TestFunction| -> Result<Vec<[ModeTransform; 3]>> {
            coupled
                .born_theta_terms(&TripleFunction::probe_only(probe, f.field()), BORN_ORDER)?
                .iter()
                .map(|t| slot_transforms(scenario, t))
                .collect()
        };
        Ok([one(&mode.f1)?, one(&mode.f2)?])
    };
    let ta = transforms(Probe::A)?;
    let tb = transforms(Probe::B)?;
    let cauchy =
        |x: &[Vec<[ModeTransform; 3]>; 2], y: &[Vec<[ModeTransform; 3]>; 2]| -> Vec<Mat2> {
            (0..=BORN_ORDER)
                .map(|n| {
                    Mat2::from_fn(|j, k| {
                        (0..=n)
                            .map(|p| {
                                (0..3)
                                    .map(|l| x[j][p][l].beta(&y[k][n - p][l]))
                                    .sum::<f64>()
                            })
                            .sum()
                    })
                })
                .collect()
        };
    Ok(BornBlocks {
        a: cauchy(&ta, &ta),
        b: cauchy(&tb, &tb),
        c: cauchy(&ta, &tb),
    })
}

/// `p₀`, `p₂`, `p₄` of the scenario. Requires spacelike coupling zones so
/// that `C` starts at order `λ²`.
pub fn perturbative_coefficients(scenario: &HarvestScenario) -> Result<PerturbativeCoefficients> {
    if !scenario.coupled().zones_spacelike() {
        return Err(Error::UnsupportedExpansion(
            "coupling zones are causally connected; C does not start at order λ²".into(),
        ));
    }
    born_blocks(scenario)?.synthetic().coefficients()
}

/// Roundoff scale factor for [`ResidualFit::noise_floor`].
pub const NOISE_FACTOR: f64 = 1e3;

/// Minimum slope accepted for an `O(λ⁶)` remainder.
pub const REQUIRED_SLOPE: f64 = 5.5;

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualFit {
    /// `(λ, |p_S(λ) - (p₀ + λ²p₂ + λ⁴p₄)|)`.
    pub points: Vec<(f64, f64)>,
    /// Residuals at or below this are treated as roundoff and excluded.
    pub noise_floor: f64,
    /// Least-squares slope of `log r` against `log λ` over the points above
    /// the floor.
    pub slope: Option<f64>,
    /// Fewer than two points above the floor.
    pub inconclusive: bool,
}

impl ResidualFit {
    pub fn passes(&self) -> bool {
        self.slope.is_some_and(|s| s >= REQUIRED_SLOPE)
    }
}

pub fn perturbative_residual<P: BlockProfile + ?Sized>(
    profile: &P,
    coefficients: &PerturbativeCoefficients,
    grid: &[f64],
) -> Result<ResidualFit> {
    if grid.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
        return Err(Error::Precondition(
            "residual grid values must be positive".into(),
        ));
    }
    let mut points = Vec::with_capacity(grid.len());
    let mut scale: f64 = 1.0;
    for &lambda in grid {
        let inv = profile.blocks(lambda)?.invariants();
        scale = scale
            .max((inv.det_a * inv.det_b).abs())
            .max(inv.trace_term.abs())
            .max((1.0 + inv.det_c.abs()).powi(2));
        points.push((
            lambda,
            (inv.simon_value() - coefficients.polynomial(lambda)).abs(),
        ));
    }
    let noise_floor = NOISE_FACTOR * f64::EPSILON * scale;
    let used: Vec<(f64, f64)> = points
        .iter()
        .filter(|(_, r)| *r > noise_floor)
        .map(|(l, r)| (l.ln(), r.ln()))
        .collect();
    let slope = (used.len() >= 2).then(|| {
        let n = used.len() as f64;
        let mx = used.iter().map(|p| p.0).sum::<f64>() / n;
        let my = used.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = used.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = used.iter().map(|p| (p.0 - mx).powi(2)).sum();
        sxy / sxx
    });
    Ok(ResidualFit {
        points,
        noise_floor,
        inconclusive: slope.is_none(),
        slope,
    })
}
