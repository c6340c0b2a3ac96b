//! 1+1-dimensional spacetime lattice: periodic space, finite time window.
//!
//! Fields are stored row-major by time slice. The leapfrog stencil for
//! `(□ + m² + V(x)) u = f` couples each site to its two spatial neighbours
//! and to the two adjacent time slices, so information moves at most one
//! cell per step. The discrete causal relations in [`causal`] are built on
//! that stencil cone.

pub mod causal;
pub mod coupled;
pub mod field;
pub mod green;

pub use causal::CausalRegion;
pub use coupled::{CoupledSystem, TripleFunction};
pub use field::{check_bump, make_bump, Field, SupportBox, TestFunction};
pub use green::{causal_pairing, green_apply, green_residual, normalize_mode, pairing};

use crate::error::{Error, Result};

/// Upper bound on `dt/dx`.
pub const MAX_COURANT: f64 = 1.0 - 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeSpec {
    pub n_space: usize,
    pub n_time: usize,
    pub dx: f64,
    pub dt: f64,
}

impl LatticeSpec {
    pub fn new(n_space: usize, n_time: usize, dx: f64, dt: f64) -> Result<Self> {
        let spec = Self {
            n_space,
            n_time,
            dx,
            dt,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_space < 8 {
            return Err(Error::Geometry(format!(
                "n_space = {} must be at least 8",
                self.n_space
            )));
        }
        if self.n_time < 8 {
            return Err(Error::Geometry(format!(
                "n_time = {} must be at least 8",
                self.n_time
            )));
        }
        if !(self.dx.is_finite() && self.dx > 0.0) || !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::Geometry(
                "dx and dt must be positive and finite".into(),
            ));
        }
        if self.courant() > MAX_COURANT {
            return Err(Error::Stability(format!(
                "dt/dx = {} exceeds the CFL bound {}",
                self.courant(),
                MAX_COURANT
            )));
        }
        Ok(())
    }

    pub fn courant(&self) -> f64 {
        self.dt / self.dx
    }

    pub fn len(&self) -> usize {
        self.n_space * self.n_time
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn circumference(&self) -> f64 {
        self.n_space as f64 * self.dx
    }

    pub fn duration(&self) -> f64 {
        (self.n_time - 1) as f64 * self.dt
    }

    pub fn cell_volume(&self) -> f64 {
        self.dx * self.dt
    }

    pub fn time(&self, n: usize) -> f64 {
        n as f64 * self.dt
    }

    pub fn position(&self, j: usize) -> f64 {
        j as f64 * self.dx
    }

    /// Periodic distance between two sites, in cells.
    pub fn site_distance(&self, a: usize, b: usize) -> usize {
        let d = a.abs_diff(b) % self.n_space;
        d.min(self.n_space - d)
    }
}

/// Klein–Gordon operator `□ + m² + V(x)` with an optional static potential.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldOperatorSpec {
    pub mass: f64,
    pub potential: Option<Vec<f64>>,
}

impl FieldOperatorSpec {
    pub fn klein_gordon(mass: f64) -> Self {
        Self {
            mass,
            potential: None,
        }
    }

    pub fn with_potential(mass: f64, potential: Vec<f64>) -> Self {
        Self {
            mass,
            potential: Some(potential),
        }
    }

    pub fn validate(&self, lattice: &LatticeSpec) -> Result<()> {
        if !(self.mass.is_finite() && self.mass >= 0.0) {
            return Err(Error::Geometry(format!(
                "mass {} must be finite and non-negative",
                self.mass
            )));
        }
        if let Some(v) = &self.potential {
            if v.len() != lattice.n_space {
                return Err(Error::Geometry(format!(
                    "potential has {} entries, lattice has {} sites",
                    v.len(),
                    lattice.n_space
                )));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::Geometry("potential must be finite".into()));
            }
        }
        Ok(())
    }

    /// `m² + V(x_j)` per site.
    pub fn onsite(&self, n_space: usize) -> Vec<f64> {
        let m2 = self.mass * self.mass;
        match &self.potential {
            Some(v) => v.iter().map(|p| m2 + p).collect(),
            None => vec![m2; n_space],
        }
    }

    /// Upper bound on the spatial operator spectrum, `4/dx² + max(m² + V)`.
    pub fn spectral_bound(&self, lattice: &LatticeSpec) -> f64 {
        let onsite = self.onsite(lattice.n_space);
        let max = onsite.iter().cloned().fold(0.0f64, f64::max);
        4.0 / (lattice.dx * lattice.dx) + max
    }

    /// Leapfrog is stable while `dt² ω²_max < 4`.
    pub fn check_stability(&self, lattice: &LatticeSpec, extra: f64) -> Result<()> {
        let bound = (self.spectral_bound(lattice) + extra) * lattice.dt * lattice.dt;
        if bound >= 4.0 {
            return Err(Error::Stability(format!(
                "dt²·ω²_max = {bound} reaches the leapfrog limit 4; reduce dt"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// Zero data before the source.
    Retarded,
    /// Zero data after the source.
    Advanced,
}
