//! The harvesting experiment: two local modes read out after both probes
//! have interacted with the system field.

pub mod blocks;
pub mod critical;
pub mod perturb;
pub mod scenario;
pub mod signal;

pub use blocks::{
    assemble_blocks, assemble_blocks_born, block_contributions, sweep, sweep_profile,
    BlockContributions, BlockProfile, SweepRow, UNCERTAINTY_TOL,
};
pub use critical::{critical_coupling, CriticalCoupling};
pub use perturb::{
    born_blocks, perturbative_coefficients, perturbative_residual, PerturbativeCoefficients,
    ResidualFit, SyntheticBlocks,
};
pub use scenario::{
    default_perturbative_grid, local_mode_family, CriticalSearch, HarvestScenario, ModePair,
};
pub use signal::{detector_signal, DetectorSignal};


#[cfg(test)]
mod tests {
    use super::fixtures::{scenario, scenario_with};
    use super::*;
    use crate::error::Error;
    use crate::lattice::coupled::Probe;
    use crate::symplectic::{CovarianceOneMode, Mat2};
    use approx::assert_abs_diff_eq;

    fn restricted(s: &HarvestScenario, probe: Probe) -> CovarianceOneMode {
        let m = s.mode(probe);
        s.probe_state(probe)
            .restrict_covariance(m.f1.field(), m.f2.field())
            .unwrap()
    }

    #[test]
    fn zero_coupling_gives_initial_blocks() {
        let s = scenario();
        let g = assemble_blocks(&s, 0.0).unwrap();
        assert_eq!(g.block_c(), Mat2::zeros());
        let a0 = restricted(&s, Probe::A);
        let b0 = restricted(&s, Probe::B);
        assert!((g.block_a() - a0.matrix()).abs().max() <= 1e-14);
        let expected = -(a0.det() - 1.0) * (b0.det() - 1.0);
        assert!(expected < 0.0);
        assert!((g.simon_value() - expected).abs() <= 1e-8 * expected.abs());
    }

    #[test]
    fn spacelike_zones_have_no_cross_slot_terms() {
        let s = scenario();
        let parts = block_contributions(&s, 0.4).unwrap();
        assert_eq!(parts.a[2], Mat2::zeros());
        assert_eq!(parts.b[1], Mat2::zeros());
        assert!(parts.c[0].abs().max() > 0.0);
    }

    #[test]
    fn blocks_respect_uncertainty() {
        let s = scenario();
        for lambda in [0.0, 0.3, 1.0, 2.0] {
            let g = assemble_blocks(&s, lambda).unwrap();
            assert!(g.uncertainty_margin() >= -UNCERTAINTY_TOL, "λ = {lambda}");
        }
    }

    #[test]
    fn born_truncation_error_is_fifth_order() {
        let s = scenario();
        let diff = |lambda: f64| {
            let exact = assemble_blocks(&s, lambda).unwrap();
            let born = assemble_blocks_born(&s, lambda, 4).unwrap();
            (exact.gamma() - born.gamma()).abs().max()
        };
        let (d1, d2) = (diff(0.1), diff(0.05));
        let slope = (d1 / d2).log2();
        assert!(slope >= 4.5, "slope {slope}: {d1:e} {d2:e}");
    }

    #[test]
    fn exchange_symmetry() {
        let s = scenario();
        let x = s.exchanged();
        let g = assemble_blocks(&s, 0.7).unwrap();
        let h = assemble_blocks(&x, 0.7).unwrap();
        assert!((g.block_a() - h.block_b()).abs().max() <= 1e-12);
        assert!((g.block_c() - h.block_c().transpose()).abs().max() <= 1e-12);
        assert_abs_diff_eq!(g.simon_value(), h.simon_value(), epsilon = 1e-10);
        assert_abs_diff_eq!(
            g.nu_minus().unwrap(),
            h.nu_minus().unwrap(),
            epsilon = 1e-10
        );
    }

    #[test]
    fn only_the_product_of_coupling_and_rho_matters() {
        let s = scenario();
        let scaled = s.with_scaled_coupling(4.0).unwrap();
        let a = SweepRow::from_covariance(0.8, &assemble_blocks(&s, 0.8).unwrap()).unwrap();
        let b = SweepRow::from_covariance(0.8, &assemble_blocks(&scaled, 0.2).unwrap()).unwrap();
        assert!((a.p_s - b.p_s).abs() <= 1e-10 * a.p_s.abs().max(1.0));
        assert!((a.det_c - b.det_c).abs() <= 1e-10 * a.det_c.abs().max(1.0));
    }

    #[test]
    fn sweep_is_ordered_and_consistent() {
        let s = scenario();
        let rows = sweep(&s).unwrap();
        assert_eq!(
            rows.iter().map(|r| r.lambda).collect::<Vec<_>>(),
            s.lambda_grid()
        );
        assert!(rows.iter().all(|r| r.is_consistent(1e-10)));
        let serial: Vec<SweepRow> = s
            .lambda_grid()
            .iter()
            .map(|&l| SweepRow::from_covariance(l, &assemble_blocks(&s, l).unwrap()).unwrap())
            .collect();
        assert_eq!(rows, serial);
    }

    #[test]
    fn mixed_probes_have_positive_critical_coupling() {
        let s = scenario_with(1.0, Some(0.05), 12.0);
        let result = critical_coupling(&s, (0.0, 8.0), 33, 1e-4).unwrap();
        assert!(result.scan[0].1 < 0.0);
        if let Some(l) = result.lambda_min {
            assert!(l > 0.0);
            let (a, b) = result.bracket.unwrap();
            assert!(s.simon_value(a).unwrap() <= 0.0 && s.simon_value(b).unwrap() > 0.0);
        }
    }

    #[test]
    fn synthetic_pure_blocks_harvest_immediately() {
        let c2 = Mat2::new(1.0, 0.0, 0.0, -1.0);
        let blocks = SyntheticBlocks::leading(Mat2::identity(), Mat2::identity(), c2);
        let coeffs = blocks.coefficients().unwrap();
        assert_eq!(coeffs.p0, 0.0);
        assert_eq!(coeffs.p2, 0.0);
        assert!(coeffs.p4 > 0.0);
        let result = critical_coupling(&blocks, (0.0, 0.5), 11, 1e-6).unwrap();
        assert_eq!(result.lambda_min, Some(0.0));
    }

    #[test]
    fn all_negative_interval_has_no_critical_coupling() {
        let blocks = SyntheticBlocks::leading(
            Mat2::identity() * 2.0,
            Mat2::identity() * 2.0,
            Mat2::zeros(),
        );
        let result = critical_coupling(&blocks, (0.0, 1.0), 9, 1e-6).unwrap();
        assert_eq!(result.lambda_min, None);
        assert_eq!(result.crossings, 0);
    }

    #[test]
    fn synthetic_crossing_is_bisected() {
        // p_S = -(2-1)(2-1) + λ⁴ (Tr - 2 det C₂) with C₂ = c·diag(1, -1).
        let blocks = SyntheticBlocks::leading(
            Mat2::identity() * 1.5,
            Mat2::identity() * 1.5,
            Mat2::new(3.0, 0.0, 0.0, -3.0),
        );
        let result = critical_coupling(&blocks, (0.0, 2.0), 21, 1e-8).unwrap();
        let l = result.lambda_min.unwrap();
        assert!(l > 0.0);
        assert!(blocks.simon_value(l * (1.0 - 1e-6)).unwrap() <= 0.0);
        assert!(blocks.simon_value(l * (1.0 + 1e-6)).unwrap() > 0.0);
    }

    #[test]
    fn synthetic_coefficient_identities() {
        let a0 = Mat2::new(2.0, 0.0, 0.0, 1.0);
        let b0 = Mat2::new(1.5, 0.0, 0.0, 2.0);
        let blocks = SyntheticBlocks {
            a0,
            a2: Mat2::new(0.3, 0.1, 0.1, -0.2),
            a4: Mat2::new(0.05, 0.0, 0.0, 0.02),
            b0,
            b2: Mat2::new(0.1, 0.0, 0.0, 0.4),
            b4: Mat2::new(-0.01, 0.03, 0.03, 0.02),
            c2: Mat2::new(0.7, 0.2, -0.1, 0.4),
        };
        let c = blocks.coefficients().unwrap();
        assert_eq!(c.p0, -2.0);
        assert_abs_diff_eq!(
            c.p4 - c.p4_uncertainty,
            -4.0 * blocks.c2.determinant(),
            epsilon = 1e-12
        );
        let fit = perturbative_residual(&blocks, &c, &[0.02, 0.04, 0.08]).unwrap();
        assert!(fit.slope.unwrap() > 5.5, "{fit:?}");
    }

    #[test]
    fn terminating_expansion_is_inconclusive() {
        let c2 = Mat2::new(1.0, 0.5, 2.0, 1.0);
        let blocks = SyntheticBlocks::leading(Mat2::identity() * 1.2, Mat2::identity() * 1.3, c2);
        let c = blocks.coefficients().unwrap();
        let fit = perturbative_residual(&blocks, &c, &[1e-3, 3e-3, 1e-2]).unwrap();
        assert!(fit.points.iter().all(|(_, r)| *r <= 1e-12));
        assert!(fit.inconclusive);
    }

    #[test]
    fn scenario_expansion_has_sixth_order_remainder() {
        let s = scenario_with(60.0, Some(0.3), 12.0);
        let born = born_blocks(&s).unwrap();
        assert!(born.forbidden_magnitude() <= 1e-12 * born.a[0].abs().max());
        let c = perturbative_coefficients(&s).unwrap();
        let g0 = assemble_blocks(&s, 0.0).unwrap();
        assert!((c.p0 - g0.simon_value()).abs() <= 1e-10 * c.p0.abs());
        let fit = perturbative_residual(&s, &c, &[1e-3, 2e-3, 4e-3, 8e-3]).unwrap();
        assert!(fit.passes(), "{fit:?}");
    }

    #[test]
    fn connected_zones_reject_expansion() {
        let s = scenario_with(1.0, None, 2.0);
        assert!(matches!(
            perturbative_coefficients(&s),
            Err(Error::UnsupportedExpansion(_))
        ));
        // The full pipeline still works and keeps the cross-slot terms.
        let parts = block_contributions(&s, 0.5).unwrap();
        assert!(parts.a[2].abs().max() > 0.0);
    }

    #[test]
    fn signal_at_zero_coupling_is_probe_fluctuation() {
        let s = scenario_with(1.0, None, 12.0);
        let sig = detector_signal(&s, 0.0, Probe::A).unwrap();
        assert_eq!(sig.system_part, 0.0);
        let expected = restricted(&s, Probe::A).mode_number_expectation();
        assert!(expected > 0.0);
        assert!((sig.probe_part - expected).abs() <= 1e-10 * expected);
    }

    #[test]
    fn signal_correction_is_quadratic() {
        let s = scenario();
        let base = detector_signal(&s, 0.0, Probe::B).unwrap().total;
        let ratio = |l: f64| (detector_signal(&s, l, Probe::B).unwrap().total - base) / (l * l);
        let (r1, r2, r3) = (ratio(0.04), ratio(0.02), ratio(0.01));
        assert!(
            (r2 - r3).abs() < 0.5 * (r1 - r2).abs() + 1e-12,
            "{r1} {r2} {r3}"
        );
        let sig = detector_signal(&s, 0.5, Probe::B).unwrap();
        assert!((sig.total - sig.system_part - sig.probe_part).abs() <= 1e-14 * sig.total.abs());
    }
}
