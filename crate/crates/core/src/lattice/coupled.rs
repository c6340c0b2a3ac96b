//! The coupled system–probe–probe evolution and its scattering map.
//!
//! The three fields obey `T u = g` with
//! `T = diag(P, Q_A, Q_B) + λ [[0, ρ_A, ρ_B], [ρ_A, 0, 0], [ρ_B, 0, 0]]`.
//! The scattering map on test functions outside the causal past of the
//! coupling zones is `θ g = g - 𝒞 E_T⁻ g`, with `𝒞` the off-diagonal block.

use super::causal::CausalRegion;
use super::green::{green_apply, leapfrog_row};
use super::{Direction, Field, FieldOperatorSpec, LatticeSpec, TestFunction};
use crate::error::{Error, Result};

/// Component order: system, probe A, probe B.
#[derive(Debug, Clone, PartialEq)]
pub struct TripleFunction {
    pub system: Field,
    pub probe_a: Field,
    pub probe_b: Field,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Probe {
    A,
    B,
}

impl Probe {
    pub fn other(self) -> Probe {
        match self {
            Probe::A => Probe::B,
            Probe::B => Probe::A,
        }
    }
}

impl TripleFunction {
    pub fn zeros(lattice: LatticeSpec) -> Self {
        Self {
            system: Field::zeros(lattice),
            probe_a: Field::zeros(lattice),
            probe_b: Field::zeros(lattice),
        }
    }

    /// `f` in the given probe slot, zero elsewhere.
    pub fn probe_only(probe: Probe, f: &Field) -> Self {
        let mut t = Self::zeros(*f.lattice());
        *t.probe_mut(probe) = f.clone();
        t
    }

    pub fn lattice(&self) -> &LatticeSpec {
        self.system.lattice()
    }

    pub fn components(&self) -> [&Field; 3] {
        [&self.system, &self.probe_a, &self.probe_b]
    }

    pub fn probe(&self, probe: Probe) -> &Field {
        match probe {
            Probe::A => &self.probe_a,
            Probe::B => &self.probe_b,
        }
    }

    pub fn probe_mut(&mut self, probe: Probe) -> &mut Field {
        match probe {
            Probe::A => &mut self.probe_a,
            Probe::B => &mut self.probe_b,
        }
    }

    pub fn axpy(&mut self, c: f64, other: &TripleFunction) -> Result<()> {
        self.system.axpy(c, &other.system)?;
        self.probe_a.axpy(c, &other.probe_a)?;
        self.probe_b.axpy(c, &other.probe_b)
    }

    pub fn scaled(&self, c: f64) -> TripleFunction {
        TripleFunction {
            system: self.system.scaled(c),
            probe_a: self.probe_a.scaled(c),
            probe_b: self.probe_b.scaled(c),
        }
    }

    pub fn sub(&self, other: &TripleFunction) -> Result<TripleFunction> {
        let mut out = self.clone();
        out.axpy(-1.0, other)?;
        Ok(out)
    }

    pub fn max_abs(&self) -> f64 {
        self.components()
            .iter()
            .map(|f| f.max_abs())
            .fold(0.0, f64::max)
    }

    fn ensure_lattice(&self, lattice: &LatticeSpec) -> Result<()> {
        if self.components().iter().any(|f| f.lattice() != lattice) {
            return Err(Error::LatticeMismatch);
        }
        Ok(())
    }
}

/// System field coupled to two probe fields through `ρ_A` and `ρ_B`.
#[derive(Debug, Clone)]
pub struct CoupledSystem {
    lattice: LatticeSpec,
    system_op: FieldOperatorSpec,
    probe_a_op: FieldOperatorSpec,
    probe_b_op: FieldOperatorSpec,
    rho_a: TestFunction,
    rho_b: TestFunction,
    zones: CausalRegion,
}

impl CoupledSystem {
    pub fn new(
        system_op: FieldOperatorSpec,
        probe_a_op: FieldOperatorSpec,
        probe_b_op: FieldOperatorSpec,
        rho_a: TestFunction,
        rho_b: TestFunction,
    ) -> Result<Self> {
        let lattice = *rho_a.lattice();
        rho_a.field().ensure_same_lattice(rho_b.field())?;
        for op in [&system_op, &probe_a_op, &probe_b_op] {
            op.validate(&lattice)?;
        }
        let zones = CausalRegion::new(lattice, vec![*rho_a.support(), *rho_b.support()]);
        let overlap = rho_a
            .field()
            .as_slice()
            .iter()
            .zip(rho_b.field().as_slice())
            .any(|(a, b)| *a != 0.0 && *b != 0.0);
        if overlap {
            log::warn!("coupling functions overlap; causal factorization checks do not apply");
        }
        Ok(Self {
            lattice,
            system_op,
            probe_a_op,
            probe_b_op,
            rho_a,
            rho_b,
            zones,
        })
    }

    pub fn lattice(&self) -> &LatticeSpec {
        &self.lattice
    }

    pub fn system_op(&self) -> &FieldOperatorSpec {
        &self.system_op
    }

    pub fn probe_op(&self, probe: Probe) -> &FieldOperatorSpec {
        match probe {
            Probe::A => &self.probe_a_op,
            Probe::B => &self.probe_b_op,
        }
    }

    pub fn rho(&self, probe: Probe) -> &TestFunction {
        match probe {
            Probe::A => &self.rho_a,
            Probe::B => &self.rho_b,
        }
    }

    /// Union of both coupling zones.
    pub fn zones(&self) -> &CausalRegion {
        &self.zones
    }

    pub fn zone(&self, probe: Probe) -> CausalRegion {
        CausalRegion::new(self.lattice, vec![*self.rho(probe).support()])
    }

    pub fn zones_spacelike(&self) -> bool {
        self.zone(Probe::A).spacelike_to(&self.zone(Probe::B))
    }

    /// The same system with one coupling switched off.
    pub fn single_probe_view(&self, keep: Probe) -> CoupledSystem {
        let mut out = self.clone();
        let off = keep.other();
        let zero = self.rho(off).scaled(0.0);
        match off {
            Probe::A => out.rho_a = zero,
            Probe::B => out.rho_b = zero,
        }
        out
    }

    /// Swaps the roles of the two probes.
    pub fn exchanged(&self) -> CoupledSystem {
        let mut out = self.clone();
        std::mem::swap(&mut out.probe_a_op, &mut out.probe_b_op);
        std::mem::swap(&mut out.rho_a, &mut out.rho_b);
        out
    }

    /// `𝒞 u` for coupling strength `lambda`.
    pub fn coupling_apply(&self, lambda: f64, u: &TripleFunction) -> Result<TripleFunction> {
        u.ensure_lattice(&self.lattice)?;
        let ra = self.rho_a.field();
        let rb = self.rho_b.field();
        let mut system = ra.multiply(&u.probe_a)?;
        system.axpy(1.0, &rb.multiply(&u.probe_b)?)?;
        Ok(TripleFunction {
            system: system.scaled(lambda),
            probe_a: ra.multiply(&u.system)?.scaled(lambda),
            probe_b: rb.multiply(&u.system)?.scaled(lambda),
        })
    }

    fn coupling_bound(&self, lambda: f64) -> f64 {
        let a = self.rho_a.field().max_abs();
        let b = self.rho_b.field().max_abs();
        lambda.abs() * (a + b)
    }

    /// Leapfrog stability of all three fields with the coupling at `lambda`
    /// counted as extra on-site stiffness.
    pub fn check_stability(&self, lambda: f64) -> Result<()> {
        let extra = self.coupling_bound(lambda);
        for op in [&self.system_op, &self.probe_a_op, &self.probe_b_op] {
            op.check_stability(&self.lattice, extra)?;
        }
        Ok(())
    }

    /// Solves `T u = g` with zero data after (advanced) or before (retarded)
    /// the sources.
    pub fn apply(
        &self,
        direction: Direction,
        lambda: f64,
        g: &TripleFunction,
    ) -> Result<TripleFunction> {
        g.ensure_lattice(&self.lattice)?;
        self.check_stability(lambda)?;
        let ops = [&self.system_op, &self.probe_a_op, &self.probe_b_op];
        if lambda == 0.0 {
            return Ok(TripleFunction {
                system: green_apply(ops[0], direction, &g.system)?,
                probe_a: green_apply(ops[1], direction, &g.probe_a)?,
                probe_b: green_apply(ops[2], direction, &g.probe_b)?,
            });
        }
        let l = self.lattice;
        let ns = l.n_space;
        let nt = l.n_time;
        let dt2 = l.dt * l.dt;
        let inv_dx2 = 1.0 / (l.dx * l.dx);
        let onsite: Vec<Vec<f64>> = ops.iter().map(|op| op.onsite(ns)).collect();
        let mut u = [vec![0.0; l.len()], vec![0.0; l.len()], vec![0.0; l.len()]];
        let sources = g.components();
        let ra = self.rho_a.field();
        let rb = self.rho_b.field();
        let mut src = vec![0.0; ns];
        let mut out = vec![0.0; ns];

        let steps: Box<dyn Iterator<Item = usize>> = match direction {
            Direction::Retarded => Box::new(1..nt - 1),
            Direction::Advanced => Box::new((1..nt - 1).rev()),
        };
        for n in steps {
            let row = n * ns..(n + 1) * ns;
            let (ra_n, rb_n) = (&ra.as_slice()[row.clone()], &rb.as_slice()[row.clone()]);
            for c in 0..3 {
                let g_n = sources[c].row(n);
                for j in 0..ns {
                    let k = row.start + j;
                    let coupling = match c {
                        0 => ra_n[j] * u[1][k] + rb_n[j] * u[2][k],
                        1 => ra_n[j] * u[0][k],
                        _ => rb_n[j] * u[0][k],
                    };
                    src[j] = g_n[j] - lambda * coupling;
                }
                let (target, other) = match direction {
                    Direction::Retarded => (n + 1, n - 1),
                    Direction::Advanced => (n - 1, n + 1),
                };
                let uc = &u[c];
                leapfrog_row(
                    &mut out,
                    &uc[other * ns..(other + 1) * ns],
                    &uc[row.clone()],
                    &onsite[c],
                    &src,
                    dt2,
                    inv_dx2,
                );
                u[c][target * ns..(target + 1) * ns].copy_from_slice(&out);
            }
        }
        let [s, a, b] = u;
        Ok(TripleFunction {
            system: Field::from_vec(l, s)?,
            probe_a: Field::from_vec(l, a)?,
            probe_b: Field::from_vec(l, b)?,
        })
    }

    pub fn advanced_apply(&self, lambda: f64, g: &TripleFunction) -> Result<TripleFunction> {
        self.apply(Direction::Advanced, lambda, g)
    }

    /// Rejects `g` unless it vanishes on the causal past of both zones.
    pub fn check_outside_past(&self, g: &TripleFunction) -> Result<()> {
        for (name, f) in ["system", "probe_a", "probe_b"].iter().zip(g.components()) {
            if let Some((n, j)) = self.zones.field_meets_past(f) {
                return Err(Error::CausalGeometry(format!(
                    "{name} component is nonzero at ({n}, {j}), inside the causal past of the coupling zones"
                )));
            }
        }
        Ok(())
    }

    /// `θ g = g - 𝒞 E_T⁻ g`.
    pub fn theta_apply(&self, lambda: f64, g: &TripleFunction) -> Result<TripleFunction> {
        self.check_outside_past(g)?;
        if lambda == 0.0 {
            return Ok(g.clone());
        }
        let u = self.advanced_apply(lambda, g)?;
        let mut out = g.clone();
        out.axpy(-1.0, &self.coupling_apply(lambda, &u)?)?;
        Ok(out)
    }

    /// Taylor coefficients of `λ ↦ θ_λ g` up to `order`, from the Born
    /// series of the coupled advanced Green operator:
    /// `term₀ = g`, `term_{k+1} = -𝒞₁ E₀⁻ term_k`, with `E₀⁻` the free
    /// advanced operators and `𝒞₁` the coupling at unit strength.
    pub fn born_theta_terms(
        &self,
        g: &TripleFunction,
        order: usize,
    ) -> Result<Vec<TripleFunction>> {
        self.check_outside_past(g)?;
        let mut terms = vec![g.clone()];
        for _ in 0..order {
            let last = terms.last().expect("nonempty");
            let free = self.apply(Direction::Advanced, 0.0, last)?;
            terms.push(self.coupling_apply(1.0, &free)?.scaled(-1.0));
        }
        Ok(terms)
    }

    /// `Σ λⁿ termₙ`.
    pub fn born_sum(terms: &[TripleFunction], lambda: f64) -> Result<TripleFunction> {
        let mut out = TripleFunction::zeros(*terms[0].lattice());
        let mut power = 1.0;
        for t in terms {
            out.axpy(power, t)?;
            power *= lambda;
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::green::pairing;
    use crate::lattice::make_bump;

    fn lattice() -> LatticeSpec {
        LatticeSpec::new(128, 120, 0.25, 0.2).unwrap()
    }

    /// Zones at t = 8, x = 5 and x = 21; spacelike on the stencil cone.
    fn system() -> CoupledSystem {
        let l = lattice();
        let rho_a = make_bump(l, (8.0, 5.0), (1.0, 1.0), 3.0).unwrap();
        let rho_b = make_bump(l, (8.0, 21.0), (1.0, 1.0), 3.0).unwrap();
        CoupledSystem::new(
            FieldOperatorSpec::klein_gordon(0.8),
            FieldOperatorSpec::klein_gordon(1.0),
            FieldOperatorSpec::klein_gordon(1.2),
            rho_a,
            rho_b,
        )
        .unwrap()
    }

    fn probe_fn(x: f64) -> Field {
        make_bump(lattice(), (12.0, x), (1.0, 1.0), 1.0)
            .unwrap()
            .into_field()
    }

    #[test]
    fn zones_are_spacelike() {
        assert!(system().zones_spacelike());
    }

    #[test]
    fn zero_coupling_decouples() {
        let sys = system();
        let g = TripleFunction {
            system: probe_fn(4.0),
            probe_a: probe_fn(5.0),
            probe_b: probe_fn(21.0),
        };
        let coupled = sys.advanced_apply(0.0, &g).unwrap();
        assert_eq!(
            coupled.probe_a,
            green_apply(sys.probe_op(Probe::A), Direction::Advanced, &g.probe_a).unwrap()
        );
        assert_eq!(sys.theta_apply(0.0, &g).unwrap(), g);
    }

    #[test]
    fn source_before_zones_sees_no_coupling() {
        let sys = system();
        let l = lattice();
        let early = make_bump(l, (3.0, 8.0), (0.8, 0.8), 1.0)
            .unwrap()
            .into_field();
        let g = TripleFunction {
            system: early.clone(),
            probe_a: early.clone(),
            probe_b: early,
        };
        let coupled = sys.advanced_apply(0.7, &g).unwrap();
        let free = sys.advanced_apply(0.0, &g).unwrap();
        assert!(coupled.sub(&free).unwrap().max_abs() == 0.0);
    }

    #[test]
    fn advanced_and_retarded_are_adjoint() {
        let sys = system();
        let l = lattice();
        let g = TripleFunction::probe_only(Probe::A, &probe_fn(5.0));
        let h = TripleFunction {
            system: make_bump(l, (4.0, 6.0), (1.0, 1.0), 1.0)
                .unwrap()
                .into_field(),
            probe_a: make_bump(l, (3.5, 5.0), (1.0, 1.0), 1.0)
                .unwrap()
                .into_field(),
            probe_b: Field::zeros(l),
        };
        let lambda = 0.4;
        let adv = sys.apply(Direction::Advanced, lambda, &g).unwrap();
        let ret = sys.apply(Direction::Retarded, lambda, &h).unwrap();
        let lhs: f64 = h
            .components()
            .iter()
            .zip(adv.components())
            .map(|(a, b)| pairing(a, b).unwrap())
            .sum();
        let rhs: f64 = ret
            .components()
            .iter()
            .zip(g.components())
            .map(|(a, b)| pairing(a, b).unwrap())
            .sum();
        assert!(lhs.abs() > 1e-6);
        assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs(), "{lhs} vs {rhs}");
    }

    #[test]
    fn theta_rejects_functions_in_the_past() {
        let sys = system();
        let l = lattice();
        let early = make_bump(l, (4.0, 5.0), (1.0, 1.0), 1.0)
            .unwrap()
            .into_field();
        let err = sys
            .theta_apply(0.5, &TripleFunction::probe_only(Probe::A, &early))
            .unwrap_err();
        assert!(matches!(err, Error::CausalGeometry(_)));
    }

    #[test]
    fn theta_is_identity_on_causal_complement() {
        let sys = system();
        let l = lattice();
        // x = 13 at t = 8 sits midway between the zones.
        let f = make_bump(l, (8.0, 13.0), (0.5, 0.3), 1.0).unwrap();
        assert!(sys.zones().box_in_complement(f.support()));
        let g = TripleFunction::probe_only(Probe::A, f.field());
        let out = sys.theta_apply(0.9, &g).unwrap();
        assert!(out.sub(&g).unwrap().max_abs() <= 1e-10);
    }

    #[test]
    fn spacelike_zones_factorize() {
        let sys = system();
        let g = TripleFunction::probe_only(Probe::A, &probe_fn(5.0));
        let out = sys.theta_apply(0.5, &g).unwrap();
        assert_eq!(out.probe_b.max_abs(), 0.0);
        assert!(out.system.max_abs() > 0.0);
    }

    #[test]
    fn born_terms_match_explicit_expansion() {
        let sys = system();
        let f = probe_fn(5.0);
        let terms = sys
            .born_theta_terms(&TripleFunction::probe_only(Probe::A, &f), 4)
            .unwrap();
        let e_a = |x: &Field| green_apply(sys.probe_op(Probe::A), Direction::Advanced, x).unwrap();
        let e_s = |x: &Field| green_apply(sys.system_op(), Direction::Advanced, x).unwrap();
        let r = |x: &Field| sys.rho(Probe::A).field().multiply(x).unwrap();
        let u = |x: &Field| r(&e_s(&r(&e_a(x))));
        let uf = u(&f);
        let expected = [
            (Field::zeros(lattice()), f.clone()),
            (r(&e_a(&f)).scaled(-1.0), Field::zeros(lattice())),
            (Field::zeros(lattice()), uf.clone()),
            (r(&e_a(&uf)).scaled(-1.0), Field::zeros(lattice())),
            (Field::zeros(lattice()), u(&uf)),
        ];
        for (k, (sys_slot, probe_slot)) in expected.iter().enumerate() {
            let scale = probe_slot.max_abs().max(sys_slot.max_abs()).max(1e-300);
            assert!(
                terms[k].system.sub(sys_slot).unwrap().max_abs() <= 1e-12 * scale,
                "term {k}"
            );
            assert!(
                terms[k].probe_a.sub(probe_slot).unwrap().max_abs() <= 1e-12 * scale,
                "term {k}"
            );
            assert_eq!(terms[k].probe_b.max_abs(), 0.0);
        }
    }

    #[test]
    fn born_series_matches_theta_at_small_coupling() {
        let sys = system();
        let g = TripleFunction::probe_only(Probe::A, &probe_fn(5.0));
        let terms = sys.born_theta_terms(&g, 4).unwrap();
        let mut errs = Vec::new();
        for lambda in [0.02, 0.01] {
            let exact = sys.theta_apply(lambda, &g).unwrap();
            let approx = CoupledSystem::born_sum(&terms, lambda).unwrap();
            errs.push(exact.probe_a.sub(&approx.probe_a).unwrap().max_abs());
        }
        // Probe-slot remainder is O(λ⁶).
        let slope = (errs[0] / errs[1]).log2();
        assert!(slope > 5.5, "slope {slope}, errors {errs:?}");
    }
}
