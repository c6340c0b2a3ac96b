use rayon::prelude::*;

use super::blocks::BlockProfile;
use crate::error::{Error, Result};

/// `|p_S|` at or below this counts as zero for the pure-state edge case.
pub const ZERO_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct CriticalCoupling {
    /// Smallest coupling with `p_S > 0` onset, if any in the interval.
    pub lambda_min: Option<f64>,
    /// Final bisection bracket `(last p_S ≤ 0, first p_S > 0)`.
    pub bracket: Option<(f64, f64)>,
    /// Number of `≤ 0 → > 0` sign changes seen by the coarse scan.
    pub crossings: usize,
    /// Coarse scan `(λ, p_S)`.
    pub scan: Vec<(f64, f64)>,
}

impl CriticalCoupling {
    pub fn multiple_crossings(&self) -> bool {
        self.crossings > 1
    }
}

/// Smallest root of `p_S` in `interval` with a `≤ 0 → > 0` sign change: a
/// uniform coarse scan brackets it and bisection narrows the bracket until
/// its width is at most `tol` times its upper end.
pub fn critical_coupling<P: BlockProfile + ?Sized>(
    profile: &P,
    interval: (f64, f64),
    scan_points: usize,
    tol: f64,
) -> Result<CriticalCoupling> {
    let (lo, hi) = interval;
    if !(lo.is_finite() && hi.is_finite() && lo >= 0.0 && hi > lo) {
        return Err(Error::Precondition(format!(
            "search interval {interval:?} must satisfy 0 ≤ a < b"
        )));
    }
    if scan_points < 2 {
        return Err(Error::Precondition(
            "at least two scan points are needed".into(),
        ));
    }
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::Precondition(format!(
            "tolerance {tol} must lie in (0, 1)"
        )));
    }
    let grid: Vec<f64> = (0..scan_points)
        .map(|k| lo + (hi - lo) * k as f64 / (scan_points - 1) as f64)
        .collect();
    let values: Vec<f64> = grid
        .par_iter()
        .map(|&l| profile.simon_value(l))
        .collect::<Result<_>>()?;
    let scan: Vec<(f64, f64)> = grid.iter().copied().zip(values.iter().copied()).collect();
    let crossings = scan
        .windows(2)
        .filter(|w| w[0].1 <= 0.0 && w[1].1 > 0.0)
        .count();

    if values[0] > 0.0 {
        return Ok(CriticalCoupling {
            lambda_min: Some(lo),
            bracket: None,
            crossings,
            scan,
        });
    }
    // Pure-state edge: p_S(0) = 0 and positive immediately after.
    if lo == 0.0 && values[0].abs() <= ZERO_TOL && values[1] > 0.0 {
        return Ok(CriticalCoupling {
            lambda_min: Some(0.0),
            bracket: Some((0.0, grid[1])),
            crossings,
            scan,
        });
    }
    let Some(k) = scan.windows(2).position(|w| w[0].1 <= 0.0 && w[1].1 > 0.0) else {
        return Ok(CriticalCoupling {
            lambda_min: None,
            bracket: None,
            crossings,
            scan,
        });
    };
    let (mut a, mut b) = (grid[k], grid[k + 1]);
    while b - a > tol * b {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        if profile.simon_value(mid)? > 0.0 {
            b = mid;
        } else {
            a = mid;
        }
    }
    Ok(CriticalCoupling {
        lambda_min: Some(0.5 * (a + b)),
        bracket: Some((a, b)),
        crossings,
        scan,
    })
}
