//! Quasi-free states of a free lattice field from spatial eigenmode sums.
//!
//! With `K = -Δ + m² + V` on the spatial circle, eigenpairs `(ω_i², φ_i)` and
//! `φ_i` normalized in `Σ dx φ²`, the two-point function of a test function
//! pair is `Σ_i w_i/(2ω_i) conj(f̂_i) ĝ_i` with `f̂_i = Σ dt dx e^{iω_i t} φ_i f`.
//! Twice its real part is `β`, twice its imaginary part is the causal pairing.

use nalgebra::{DMatrix, SymmetricEigen, Vector2};
use num_complex::Complex64;
use rand::RngExt;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::lattice::{make_bump, pairing, Field, FieldOperatorSpec, LatticeSpec, TestFunction};
use crate::symplectic::{CovarianceOneMode, Mat2};

/// Tolerance for the uncertainty check on restricted covariances.
pub const RESTRICTION_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub enum StateKind {
    Vacuum,
    /// KMS state at the given temperature, weights `coth(ω/2T)`.
    Thermal {
        temperature: f64,
    },
    /// Diagonal state with per-mode weights `w_i ≥ 1` (ordered as the
    /// ascending spectrum) and an optional one-point function
    /// `χ(f) = Σ dx dt Φ f`.
    Explicit {
        weights: Vec<f64>,
        one_point: Option<Field>,
    },
}

/// How mode phases advance in time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TimeModel {
    /// `e^{iωt}` sampled at the lattice times; normalization `1/(2ω)`.
    #[default]
    Continuum,
    /// Leapfrog dispersion `e^{iϑn}` with `2 sin(ϑ/2) = ω dt`; normalization
    /// `dt/(2 sin ϑ)`. Reproduces the leapfrog causal propagator exactly.
    Leapfrog,
}

/// Mode coefficients `f̂_i` of one test function, with the frequency
/// weights already applied as `√(w_i/(2ω_i))`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeTransform {
    coefficients: Vec<Complex64>,
    one_point: f64,
}

impl ModeTransform {
    pub fn one_point(&self) -> f64 {
        self.one_point
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    /// `Σ conj(self_i) other_i`, the truncated two-point function.
    pub fn two_point(&self, other: &ModeTransform) -> Complex64 {
        self.coefficients
            .iter()
            .zip(&other.coefficients)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// `β(f, g)`.
    pub fn beta(&self, other: &ModeTransform) -> f64 {
        2.0 * self.two_point(other).re
    }

    /// `E(f, g)` as seen by the mode sum.
    pub fn commutator(&self, other: &ModeTransform) -> f64 {
        2.0 * self.two_point(other).im
    }

    pub fn scaled(&self, c: f64) -> ModeTransform {
        ModeTransform {
            coefficients: self.coefficients.iter().map(|z| z * c).collect(),
            one_point: self.one_point * c,
        }
    }

    pub fn axpy(&mut self, c: f64, other: &ModeTransform) {
        for (a, b) in self.coefficients.iter_mut().zip(&other.coefficients) {
            *a += b * c;
        }
        self.one_point += c * other.one_point;
    }
}

#[derive(Debug, Clone)]
pub struct QuasiFreeState {
    kind: StateKind,
    operator: FieldOperatorSpec,
    lattice: LatticeSpec,
    time_model: TimeModel,
    frequencies: Vec<f64>,
    /// Columns are `φ_i` sampled on the sites, normalized in `Σ dx φ²`.
    modes: DMatrix<f64>,
    /// `√(w_i/(2ω_i))` per mode.
    amplitudes: Vec<f64>,
    /// Phase advance per time step.
    phase_steps: Vec<f64>,
}

/// Sorted eigenvalues and eigenvectors of `-Δ + m² + V` on the circle.
pub fn spatial_spectrum(
    operator: &FieldOperatorSpec,
    lattice: &LatticeSpec,
) -> (Vec<f64>, DMatrix<f64>) {
    let ns = lattice.n_space;
    let onsite = operator.onsite(ns);
    let h = 1.0 / (lattice.dx * lattice.dx);
    let mut k = DMatrix::<f64>::zeros(ns, ns);
    for j in 0..ns {
        k[(j, j)] = 2.0 * h + onsite[j];
        let right = (j + 1) % ns;
        k[(j, right)] -= h;
        k[(right, j)] -= h;
    }
    let eig = SymmetricEigen::new(k);
    let mut order: Vec<usize> = (0..ns).collect();
    order.sort_by(|a, b| eig.eigenvalues[*a].total_cmp(&eig.eigenvalues[*b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(ns, ns, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

impl QuasiFreeState {
    pub fn build(
        kind: StateKind,
        operator: FieldOperatorSpec,
        lattice: LatticeSpec,
    ) -> Result<Self> {
        Self::build_with(kind, operator, lattice, TimeModel::default())
    }

    pub fn build_with(
        kind: StateKind,
        operator: FieldOperatorSpec,
        lattice: LatticeSpec,
        time_model: TimeModel,
    ) -> Result<Self> {
        lattice.validate()?;
        operator.validate(&lattice)?;
        let (values, vectors) = spatial_spectrum(&operator, &lattice);
        let ns = lattice.n_space;
        let scale = 1e-12 * operator.spectral_bound(&lattice);
        if values[0] <= scale {
            return Err(Error::Infrared {
                eigenvalue: values[0],
            });
        }
        let frequencies: Vec<f64> = values.iter().map(|v| v.sqrt()).collect();
        let dt = lattice.dt;
        let (phase_steps, norms): (Vec<f64>, Vec<f64>) = match time_model {
            TimeModel::Continuum => frequencies
                .iter()
                .map(|w| (w * dt, 1.0 / (2.0 * w)))
                .unzip(),
            TimeModel::Leapfrog => frequencies
                .iter()
                .map(|w| {
                    let s = 0.5 * w * dt;
                    if s >= 1.0 {
                        return Err(Error::Stability(format!(
                            "ω dt = {} reaches the leapfrog limit 2",
                            w * dt
                        )));
                    }
                    let theta = 2.0 * s.asin();
                    Ok((theta, dt / (2.0 * theta.sin())))
                })
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .unzip(),
        };
        let weights: Vec<f64> = match &kind {
            StateKind::Vacuum => vec![1.0; ns],
            StateKind::Thermal { temperature } => {
                let t = *temperature;
                if !(t.is_finite() && t > 0.0) {
                    return Err(Error::Precondition(format!(
                        "temperature {t} must be positive"
                    )));
                }
                phase_steps
                    .iter()
                    .map(|p| coth(p / dt / (2.0 * t)))
                    .collect()
            }
            StateKind::Explicit { weights, one_point } => {
                if weights.len() != ns {
                    return Err(Error::Precondition(format!(
                        "{} mode weights given for {ns} modes",
                        weights.len()
                    )));
                }
                if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 1.0)) {
                    return Err(Error::Precondition(format!("mode weight {w} is below 1")));
                }
                if let Some(phi) = one_point {
                    if phi.lattice() != &lattice {
                        return Err(Error::LatticeMismatch);
                    }
                }
                weights.clone()
            }
        };
        let amplitudes = weights
            .iter()
            .zip(&norms)
            .map(|(w, n)| (w * n).sqrt())
            .collect();
        let modes = vectors / lattice.dx.sqrt();
        Ok(Self {
            kind,
            operator,
            lattice,
            time_model,
            frequencies,
            modes,
            amplitudes,
            phase_steps,
        })
    }

    pub fn kind(&self) -> &StateKind {
        &self.kind
    }

    pub fn operator(&self) -> &FieldOperatorSpec {
        &self.operator
    }

    pub fn lattice(&self) -> &LatticeSpec {
        &self.lattice
    }

    pub fn time_model(&self) -> TimeModel {
        self.time_model
    }

    /// Ascending `ω_i`.
    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn transform(&self, f: &Field) -> Result<ModeTransform> {
        if f.lattice() != &self.lattice {
            return Err(Error::LatticeMismatch);
        }
        let ns = self.lattice.n_space;
        let mut coefficients = vec![Complex64::new(0.0, 0.0); ns];
        let one_point = match &self.kind {
            StateKind::Explicit {
                one_point: Some(phi),
                ..
            } => pairing(phi, f)?,
            _ => 0.0,
        };
        let Some((first, last)) = f.time_extent() else {
            return Ok(ModeTransform {
                coefficients,
                one_point,
            });
        };
        let measure = self.lattice.cell_volume();
        let mut projected = vec![0.0; ns];
        for n in first..=last {
            let row = f.row(n);
            if row.iter().all(|v| *v == 0.0) {
                continue;
            }
            for (i, p) in projected.iter_mut().enumerate() {
                *p = self
                    .modes
                    .column(i)
                    .iter()
                    .zip(row)
                    .map(|(a, b)| a * b)
                    .sum();
            }
            for i in 0..ns {
                let phase = Complex64::from_polar(1.0, self.phase_steps[i] * n as f64);
                coefficients[i] += phase * projected[i];
            }
        }
        for (c, a) in coefficients.iter_mut().zip(&self.amplitudes) {
            *c *= a * measure;
        }
        Ok(ModeTransform {
            coefficients,
            one_point,
        })
    }

    pub fn beta_pair(&self, f: &Field, g: &Field) -> Result<f64> {
        Ok(self.transform(f)?.beta(&self.transform(g)?))
    }

    /// `2 Im` of the mode-sum two-point function.
    pub fn commutator_pair(&self, f: &Field, g: &Field) -> Result<f64> {
        Ok(self.transform(f)?.commutator(&self.transform(g)?))
    }

    pub fn one_point(&self, f: &Field) -> Result<f64> {
        match &self.kind {
            StateKind::Explicit {
                one_point: Some(phi),
                ..
            } => pairing(phi, f),
            _ => Ok(0.0),
        }
    }

    /// `A_jk = β(f_j, f_k)` and `χ = (χ(f₁), χ(f₂))`.
    pub fn restrict_covariance(&self, f1: &Field, f2: &Field) -> Result<CovarianceOneMode> {
        let t1 = self.transform(f1)?;
        let t2 = self.transform(f2)?;
        let off = t1.beta(&t2);
        let a = Mat2::new(t1.beta(&t1), off, off, t2.beta(&t2));
        let cov = CovarianceOneMode::new(a, Vector2::new(t1.one_point, t2.one_point))?;
        let margin = cov.uncertainty_margin();
        if margin < -RESTRICTION_TOL {
            return Err(Error::UncertaintyViolation {
                min_eigenvalue: margin,
            });
        }
        Ok(cov)
    }

    /// Samples random bump pairs and checks `E(f,g)² ≤ β(f,f) β(g,g)`, with
    /// `E` from the lattice causal propagator.
    pub fn validate_positivity(&self, sample_count: usize, seed: u64) -> Result<PositivityReport> {
        self.validate_positivity_with(
            sample_count,
            seed,
            |f, g| crate::lattice::causal_pairing(&self.operator, f, g),
            1.0,
        )
    }

    /// As [`validate_positivity`](Self::validate_positivity), with a custom
    /// commutator and a factor applied to `β`.
    pub fn validate_positivity_with(
        &self,
        sample_count: usize,
        seed: u64,
        commutator: impl Fn(&Field, &Field) -> Result<f64>,
        beta_scale: f64,
    ) -> Result<PositivityReport> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut max_violation = 0.0f64;
        for _ in 0..sample_count {
            let f = random_bump(&mut rng, &self.lattice)?;
            let g = random_bump(&mut rng, &self.lattice)?;
            let tf = self.transform(f.field())?;
            let tg = self.transform(g.field())?;
            let bound = beta_scale * beta_scale * tf.beta(&tf) * tg.beta(&tg);
            let e = commutator(f.field(), g.field())?;
            let violation = (e * e - bound) / bound.max(f64::MIN_POSITIVE);
            max_violation = max_violation.max(violation);
        }
        Ok(PositivityReport {
            samples: sample_count,
            max_violation,
            passed: max_violation <= POSITIVITY_TOL,
        })
    }
}

/// Relative tolerance for [`PositivityReport::passed`].
pub const POSITIVITY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PositivityReport {
    pub samples: usize,
    /// Largest `(E² - β β)/(β β)`; non-positive when the inequality holds.
    pub max_violation: f64,
    pub passed: bool,
}

fn coth(x: f64) -> f64 {
    if x > 20.0 {
        1.0
    } else {
        1.0 / x.tanh()
    }
}

/// A bump with random center and radii, kept away from the time boundary.
pub fn random_bump<R: rand::Rng + ?Sized>(
    rng: &mut R,
    lattice: &LatticeSpec,
) -> Result<TestFunction> {
    let duration = lattice.duration();
    let circumference = lattice.circumference();
    let margin = (crate::lattice::field::TIME_MARGIN as f64 + 1.0) * lattice.dt;
    let rt = rng.random_range(0.1..0.25) * duration.min(circumference);
    let rx = rng.random_range(0.05..0.2) * circumference;
    let t = rng.random_range(margin + rt..duration - margin - rt);
    let x = rng.random_range(rx..circumference - lattice.dx - rx);
    let amplitude = rng.random_range(0.5..2.0);
    make_bump(*lattice, (t, x), (rt, rx), amplitude)
}
