use super::blocks::slot_transforms;
use super::scenario::HarvestScenario;
use crate::error::Result;
use crate::lattice::coupled::Probe;
use crate::lattice::TripleFunction;
use crate::states::ModeTransform;

/// Post-interaction number-operator expectation of one detector mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorSignal {
    pub total: f64,
    /// Contribution of the field slots other than the detector's own probe,
    /// including the interference of their one-point functions with the
    /// probe's.
    pub system_part: f64,
    /// Contribution of the detector's own probe field.
    pub probe_part: f64,
}

/// `ω(a†a)` for `a = (φ(f₁) + iφ(f₂))/√2` in one quasi-free state:
/// `¼(β₁₁ + β₂₂) - ½E₁₂ + ½(χ₁² + χ₂²)`.
fn number_part(t1: &ModeTransform, t2: &ModeTransform) -> f64 {
    0.25 * (t1.beta(t1) + t2.beta(t2)) - 0.5 * t1.commutator(t2)
        + 0.5 * (t1.one_point().powi(2) + t2.one_point().powi(2))
}

/// Signal in `which`'s detector with the other coupling switched off.
pub fn detector_signal(
    scenario: &HarvestScenario,
    lambda: f64,
    which: Probe,
) -> Result<DetectorSignal> {
    let view = scenario.single_probe_view(which);
    let mode = view.mode(which);
    let coupled = view.coupled();
    let t1 = slot_transforms(
        &view,
        &coupled.theta_apply(lambda, &TripleFunction::probe_only(which, mode.f1.field()))?,
    )?;
    let t2 = slot_transforms(
        &view,
        &coupled.theta_apply(lambda, &TripleFunction::probe_only(which, mode.f2.field()))?,
    )?;
    let own = match which {
        Probe::A => 1,
        Probe::B => 2,
    };
    let probe_part = number_part(&t1[own], &t2[own]);
    // Slots are independent fields in a product state: β and E add over
    // slots, one-point functions add before squaring.
    let mut total = 0.0;
    for l in 0..3 {
        total += 0.25 * (t1[l].beta(&t1[l]) + t2[l].beta(&t2[l])) - 0.5 * t1[l].commutator(&t2[l]);
    }
    let chi1: f64 = t1.iter().map(|t| t.one_point()).sum();
    let chi2: f64 = t2.iter().map(|t| t.one_point()).sum();
    total += 0.5 * (chi1 * chi1 + chi2 * chi2);
    let system_part = total - probe_part;
    Ok(DetectorSignal {
        total,
        system_part,
        probe_part,
    })
}
