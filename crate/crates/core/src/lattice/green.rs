//! Leapfrog Green operators of `□ + m² + V(x)` and the causal propagator.

use super::{Direction, Field, FieldOperatorSpec, LatticeSpec, TestFunction};
use crate::error::{Error, Result};

/// Orientation of the causal propagator: `E = CAUSAL_SIGN · (E_ret - E_adv)`.
///
/// With `-1` the commutator `[φ(f), φ(g)] = iE(f, g)` matches positive
/// frequency mode sums `e^{-iωt}`, i.e. the ground state of a positive
/// Hamiltonian. Flipping it swaps the roles of `f₁` and `f₂` in a mode.
pub const CAUSAL_SIGN: f64 = -1.0;

/// One leapfrog update: `out = 2 cur - prev + dt² (Δ cur - onsite·cur + src)`.
#[inline]
pub(crate) fn leapfrog_row(
    out: &mut [f64],
    prev: &[f64],
    cur: &[f64],
    onsite: &[f64],
    src: &[f64],
    dt2: f64,
    inv_dx2: f64,
) {
    let ns = cur.len();
    for j in 0..ns {
        let left = cur[if j == 0 { ns - 1 } else { j - 1 }];
        let right = cur[if j + 1 == ns { 0 } else { j + 1 }];
        let lap = (left - 2.0 * cur[j] + right) * inv_dx2;
        out[j] = 2.0 * cur[j] - prev[j] + dt2 * (lap - onsite[j] * cur[j] + src[j]);
    }
}

/// Solves `(□ + m² + V) u = f` with zero data before (retarded) or after
/// (advanced) the source.
///
/// The equation is imposed on slices `1..N-1`; a source on the first or
/// last slice is not seen by the corresponding direction.
pub fn green_apply(op: &FieldOperatorSpec, direction: Direction, source: &Field) -> Result<Field> {
    let lattice = *source.lattice();
    op.validate(&lattice)?;
    op.check_stability(&lattice, 0.0)?;
    let onsite = op.onsite(lattice.n_space);
    let mut u = Field::zeros(lattice);
    let Some((first, last)) = source.time_extent() else {
        return Ok(u);
    };
    let nt = lattice.n_time;
    let ns = lattice.n_space;
    let dt2 = lattice.dt * lattice.dt;
    let inv_dx2 = 1.0 / (lattice.dx * lattice.dx);
    let mut out = vec![0.0; ns];
    let data = u.as_mut_slice();
    match direction {
        Direction::Retarded => {
            for n in first.max(1)..nt - 1 {
                let (before, after) = data.split_at_mut((n + 1) * ns);
                let prev = &before[(n - 1) * ns..n * ns];
                let cur = &before[n * ns..];
                leapfrog_row(&mut out, prev, cur, &onsite, source.row(n), dt2, inv_dx2);
                after[..ns].copy_from_slice(&out);
            }
        }
        Direction::Advanced => {
            for n in (1..=last.min(nt - 2)).rev() {
                let (before, after) = data.split_at_mut(n * ns);
                let cur = &after[..ns];
                let next = &after[ns..2 * ns];
                leapfrog_row(&mut out, next, cur, &onsite, source.row(n), dt2, inv_dx2);
                before[(n - 1) * ns..].copy_from_slice(&out);
            }
        }
    }
    Ok(u)
}

/// `Σ f·g·dx·dt`.
pub fn pairing(f: &Field, g: &Field) -> Result<f64> {
    f.ensure_same_lattice(g)?;
    let Some((first, last)) = f.time_extent() else {
        return Ok(0.0);
    };
    let mut acc = 0.0;
    for n in first..=last {
        acc += f
            .row(n)
            .iter()
            .zip(g.row(n))
            .map(|(a, b)| a * b)
            .sum::<f64>();
    }
    Ok(acc * f.lattice().cell_volume())
}

/// `E g` as a field.
pub fn causal_apply(op: &FieldOperatorSpec, g: &Field) -> Result<Field> {
    let ret = green_apply(op, Direction::Retarded, g)?;
    let adv = green_apply(op, Direction::Advanced, g)?;
    let mut e = ret.sub(&adv)?;
    if CAUSAL_SIGN != 1.0 {
        e = e.scaled(CAUSAL_SIGN);
    }
    Ok(e)
}

/// `E(f, g) = pairing(f, E g)`.
pub fn causal_pairing(op: &FieldOperatorSpec, f: &Field, g: &Field) -> Result<f64> {
    f.ensure_same_lattice(g)?;
    pairing(f, &causal_apply(op, g)?)
}

/// Rescales `f2` so that `E(f1, f2) = 1`.
pub fn normalize_mode(
    op: &FieldOperatorSpec,
    f1: &TestFunction,
    f2: &TestFunction,
    tol: f64,
) -> Result<(TestFunction, TestFunction)> {
    let e = causal_pairing(op, f1.field(), f2.field())?;
    if !(e.abs() > tol) {
        return Err(Error::DegenerateMode { pairing: e });
    }
    Ok((f1.clone(), f2.scaled(1.0 / e)))
}

/// Max-norm of `P u - f` on slices `2..N-2`, with `P` discretized by
/// fourth-order central differences. For a leapfrog solution this measures
/// its second-order truncation error.
pub fn green_residual(op: &FieldOperatorSpec, u: &Field, f: &Field) -> Result<f64> {
    u.ensure_same_lattice(f)?;
    let l: LatticeSpec = *u.lattice();
    let onsite = op.onsite(l.n_space);
    let ns = l.n_space;
    let idt2 = 1.0 / (12.0 * l.dt * l.dt);
    let idx2 = 1.0 / (12.0 * l.dx * l.dx);
    let wrap = |j: isize| -> usize { j.rem_euclid(ns as isize) as usize };
    let mut max: f64 = 0.0;
    for n in 2..l.n_time - 2 {
        for j in 0..ns {
            let d_tt = (-u.at(n + 2, j) + 16.0 * u.at(n + 1, j) - 30.0 * u.at(n, j)
                + 16.0 * u.at(n - 1, j)
                - u.at(n - 2, j))
                * idt2;
            let ji = j as isize;
            let d_xx = (-u.at(n, wrap(ji + 2)) + 16.0 * u.at(n, wrap(ji + 1)) - 30.0 * u.at(n, j)
                + 16.0 * u.at(n, wrap(ji - 1))
                - u.at(n, wrap(ji - 2)))
                * idx2;
            let r = d_tt - d_xx + onsite[j] * u.at(n, j) - f.at(n, j);
            max = max.max(r.abs());
        }
    }
    Ok(max)
}
