//! Gaussian-state algebra for one and two bosonic modes.
//!
//! Covariance matrices follow the convention `A_jk = β(f_j, f_k)`, so the
//! vacuum of a single mode has covariance `𝟙` and the uncertainty relation
//! reads `A + i s ≥ 0` with `s = [[0, 1], [-1, 0]]`. Two-mode matrices are
//! ordered `(q_A, p_A, q_B, p_B)` with symplectic form `Ω = s ⊕ s`.

use nalgebra::{DMatrix, Matrix2, Matrix4, SymmetricEigen, Vector2, Vector4};
use num_complex::Complex64;
use rand::{Rng, RngExt};

use crate::error::{Error, Result};

pub type Mat2 = Matrix2<f64>;
pub type Mat4 = Matrix4<f64>;

/// Absolute tolerance for eigenvalue-based positivity tests.
pub const DEFAULT_TOL: f64 = 1e-10;

/// The single-mode symplectic form `s`.
pub fn symplectic_unit() -> Mat2 {
    Mat2::new(0.0, 1.0, -1.0, 0.0)
}

/// The two-mode symplectic form `Ω = s ⊕ s`.
pub fn omega() -> Mat4 {
    let mut m = Mat4::zeros();
    m.fixed_view_mut::<2, 2>(0, 0).copy_from(&symplectic_unit());
    m.fixed_view_mut::<2, 2>(2, 2).copy_from(&symplectic_unit());
    m
}

fn asymmetry<const N: usize>(m: &nalgebra::SMatrix<f64, N, N>) -> f64 {
    (m - m.transpose()).abs().max()
}

fn symmetric_tolerance(scale: f64) -> f64 {
    DEFAULT_TOL * scale.max(1.0)
}

/// Smallest eigenvalue of the Hermitian matrix `gamma + i·form`, computed
/// through the real symmetric embedding `[[Re, -Im], [Im, Re]]`.
fn min_eig_hermitian(gamma: &DMatrix<f64>, form: &DMatrix<f64>) -> f64 {
    let n = gamma.nrows();
    let mut emb = DMatrix::<f64>::zeros(2 * n, 2 * n);
    emb.view_mut((0, 0), (n, n)).copy_from(gamma);
    emb.view_mut((n, n), (n, n)).copy_from(gamma);
    emb.view_mut((0, n), (n, n)).copy_from(&(-form));
    emb.view_mut((n, 0), (n, n)).copy_from(form);
    SymmetricEigen::new(emb).eigenvalues.min()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovarianceOneMode {
    matrix: Mat2,
    one_point: Vector2<f64>,
}

impl CovarianceOneMode {
    /// Builds a one-mode covariance. Rejects matrices whose off-diagonal
    /// entries disagree beyond [`DEFAULT_TOL`] (relative to the entry scale)
    /// and symmetrizes the rest.
    pub fn new(matrix: Mat2, one_point: Vector2<f64>) -> Result<Self> {
        let asym = asymmetry(&matrix);
        if asym > symmetric_tolerance(matrix.abs().max()) || !matrix.iter().all(|x| x.is_finite()) {
            return Err(Error::MalformedMatrix { asymmetry: asym });
        }
        let matrix = (matrix + matrix.transpose()) * 0.5;
        Ok(Self { matrix, one_point })
    }

    pub fn centered(matrix: Mat2) -> Result<Self> {
        Self::new(matrix, Vector2::zeros())
    }

    pub fn matrix(&self) -> &Mat2 {
        &self.matrix
    }

    pub fn one_point(&self) -> &Vector2<f64> {
        &self.one_point
    }

    pub fn det(&self) -> f64 {
        self.matrix.determinant()
    }

    /// `A + i s ≥ -tol`.
    pub fn check_uncertainty(&self, tol: f64) -> bool {
        self.uncertainty_margin() >= -tol
    }

    /// Smallest eigenvalue of `A + i s`.
    pub fn uncertainty_margin(&self) -> f64 {
        let g = DMatrix::from_column_slice(2, 2, self.matrix.as_slice());
        let s = DMatrix::from_column_slice(2, 2, symplectic_unit().as_slice());
        min_eig_hermitian(&g, &s)
    }

    /// A quasi-free one-mode state is pure exactly when `det A = 1`.
    pub fn is_pure_mode(&self, tol: f64) -> Result<bool> {
        if !self.check_uncertainty(tol) {
            return Err(Error::Precondition(format!(
                "covariance violates the uncertainty relation (margin {:e})",
                self.uncertainty_margin()
            )));
        }
        Ok((self.det() - 1.0).abs() <= tol)
    }

    /// Expectation of the local number operator `a†a`.
    pub fn mode_number_expectation(&self) -> f64 {
        let chi = &self.one_point;
        0.5 * (0.5 * self.matrix.trace() - 1.0 + chi.norm_squared())
    }
}

/// The scalar invariants entering the Simon polynomial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimonInvariants {
    pub det_a: f64,
    pub det_b: f64,
    pub det_c: f64,
    /// `Tr(A s C s B s Cᵀ s)`.
    pub trace_term: f64,
}

impl SimonInvariants {
    pub fn from_blocks(a: &Mat2, b: &Mat2, c: &Mat2) -> Self {
        let s = symplectic_unit();
        Self {
            det_a: a.determinant(),
            det_b: b.determinant(),
            det_c: c.determinant(),
            trace_term: (a * s * c * s * b * s * c.transpose() * s).trace(),
        }
    }

    /// `p_S`; positive exactly for entangled two-mode Gaussian states.
    pub fn simon_value(&self) -> f64 {
        self.det_a + self.det_b - self.det_a * self.det_b + self.trace_term
            - (1.0 + self.det_c).powi(2)
    }

    /// The companion polynomial with `(1 - det C)²`; non-positive for every
    /// physical covariance matrix.
    pub fn uncertainty_value(&self) -> f64 {
        self.det_a + self.det_b - self.det_a * self.det_b + self.trace_term
            - (1.0 - self.det_c).powi(2)
    }

    /// `Δ = det A + det B - 2 det C` (the partially transposed seralian).
    pub fn delta(&self) -> f64 {
        self.det_a + self.det_b - 2.0 * self.det_c
    }

    /// `I₄ = det A det B + det C² - Tr(AsCsBsCᵀs)`, equal to `det γ`.
    pub fn quartic(&self) -> f64 {
        self.det_a * self.det_b + self.det_c * self.det_c - self.trace_term
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovarianceTwoMode {
    gamma: Mat4,
    one_point: Vector4<f64>,
}

impl CovarianceTwoMode {
    pub fn new(gamma: Mat4, one_point: Vector4<f64>) -> Result<Self> {
        let asym = asymmetry(&gamma);
        if asym > symmetric_tolerance(gamma.abs().max()) || !gamma.iter().all(|x| x.is_finite()) {
            return Err(Error::MalformedMatrix { asymmetry: asym });
        }
        let gamma = (gamma + gamma.transpose()) * 0.5;
        Ok(Self { gamma, one_point })
    }

    pub fn centered(gamma: Mat4) -> Result<Self> {
        Self::new(gamma, Vector4::zeros())
    }

    /// Assembles `γ = [[A, C], [Cᵀ, B]]`.
    pub fn from_blocks(a: &Mat2, b: &Mat2, c: &Mat2) -> Result<Self> {
        let mut g = Mat4::zeros();
        g.fixed_view_mut::<2, 2>(0, 0).copy_from(a);
        g.fixed_view_mut::<2, 2>(2, 2).copy_from(b);
        g.fixed_view_mut::<2, 2>(0, 2).copy_from(c);
        g.fixed_view_mut::<2, 2>(2, 0).copy_from(&c.transpose());
        Self::centered(g)
    }

    pub fn with_one_point(mut self, one_point: Vector4<f64>) -> Self {
        self.one_point = one_point;
        self
    }

    pub fn gamma(&self) -> &Mat4 {
        &self.gamma
    }

    pub fn one_point(&self) -> &Vector4<f64> {
        &self.one_point
    }

    pub fn block_a(&self) -> Mat2 {
        self.gamma.fixed_view::<2, 2>(0, 0).into_owned()
    }

    pub fn block_b(&self) -> Mat2 {
        self.gamma.fixed_view::<2, 2>(2, 2).into_owned()
    }

    pub fn block_c(&self) -> Mat2 {
        self.gamma.fixed_view::<2, 2>(0, 2).into_owned()
    }

    pub fn mode_a(&self) -> CovarianceOneMode {
        CovarianceOneMode {
            matrix: self.block_a(),
            one_point: Vector2::new(self.one_point[0], self.one_point[1]),
        }
    }

    pub fn mode_b(&self) -> CovarianceOneMode {
        CovarianceOneMode {
            matrix: self.block_b(),
            one_point: Vector2::new(self.one_point[2], self.one_point[3]),
        }
    }

    pub fn invariants(&self) -> SimonInvariants {
        SimonInvariants::from_blocks(&self.block_a(), &self.block_b(), &self.block_c())
    }

    /// Smallest eigenvalue of `γ + iΩ`.
    pub fn uncertainty_margin(&self) -> f64 {
        let g = DMatrix::from_column_slice(4, 4, self.gamma.as_slice());
        let w = DMatrix::from_column_slice(4, 4, omega().as_slice());
        min_eig_hermitian(&g, &w)
    }

    pub fn check_uncertainty(&self, tol: f64) -> bool {
        self.uncertainty_margin() >= -tol
    }

    pub fn simon_value(&self) -> f64 {
        self.invariants().simon_value()
    }

    /// Smallest symplectic eigenvalue of the partially transposed covariance.
    pub fn nu_minus(&self) -> Result<f64> {
        nu_minus_from(&self.invariants(), DEFAULT_TOL)
    }

    pub fn negativity(&self) -> Result<f64> {
        Ok(negativity_from_nu(self.nu_minus()?))
    }

    /// `Λ γ Λ` with `Λ = diag(1, 1, 1, -1)`; flips the sign of `p_B`.
    pub fn partial_transpose(&self) -> Self {
        let mut g = self.gamma;
        for k in 0..4 {
            g[(3, k)] = -g[(3, k)];
            g[(k, 3)] = -g[(k, 3)];
        }
        let mut chi = self.one_point;
        chi[3] = -chi[3];
        Self {
            gamma: g,
            one_point: chi,
        }
    }

    /// Gaussian P-function separability witness. Returns `None` when
    /// `γ - 𝟙` has an eigenvalue below `-tol`.
    pub fn p_function_witness(&self, tol: f64) -> Option<GaussianPRepresentation> {
        let excess = self.gamma - Mat4::identity();
        let min_eig = SymmetricEigen::new(excess).eigenvalues.min();
        if min_eig < -tol {
            return None;
        }
        if min_eig <= tol {
            return Some(GaussianPRepresentation {
                normalization: f64::INFINITY,
                precision_matrix: Mat4::zeros(),
                shift: self.one_point,
                rank_deficient: true,
            });
        }
        let precision = (excess * 0.5).try_inverse()?;
        let precision = (precision + precision.transpose()) * 0.5;
        Some(GaussianPRepresentation {
            normalization: 1.0 / (std::f64::consts::PI.powi(2) * excess.determinant().sqrt()),
            precision_matrix: precision,
            shift: self.one_point,
            rank_deficient: false,
        })
    }

    /// `exp(i χ·ξ - ¼ ξ·γξ)`, the state's value on the Weyl operator `W(ξ)`.
    pub fn weyl_expectation(&self, xi: &Vector4<f64>) -> Complex64 {
        weyl_value(&self.gamma, &self.one_point, xi)
    }
}

fn weyl_value(gamma: &Mat4, chi: &Vector4<f64>, xi: &Vector4<f64>) -> Complex64 {
    let quad = xi.dot(&(gamma * xi));
    Complex64::new(-0.25 * quad, chi.dot(xi)).exp()
}

/// Coherent-state value `exp(-¼|ξ|² + i(α + χ)·ξ)` for displacement `α`.
pub fn coherent_weyl_value(
    alpha: &Vector4<f64>,
    chi: &Vector4<f64>,
    xi: &Vector4<f64>,
) -> Complex64 {
    weyl_value(&Mat4::identity(), &(alpha + chi), xi)
}

pub fn nu_minus_from(inv: &SimonInvariants, tol: f64) -> Result<f64> {
    let delta = inv.delta();
    let disc = delta * delta - 4.0 * inv.quartic();
    let scale = (delta * delta).max(1.0);
    if disc < -tol * scale {
        return Err(Error::InconsistentCovariance { discriminant: disc });
    }
    let inner = 0.5 * (delta - disc.max(0.0).sqrt());
    Ok(inner.max(0.0).sqrt())
}

pub fn negativity_from_nu(nu: f64) -> f64 {
    if nu <= 0.0 {
        return f64::INFINITY;
    }
    ((1.0 - nu) / (2.0 * nu)).max(0.0)
}

/// Non-negative Gaussian P-function `P(ξ) = N exp(-½ (ξ-χ)·M(ξ-χ))` over
/// coherent-state displacements. A rank-deficient witness has no density;
/// the state is then a point mass along the kernel of `γ - 𝟙`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianPRepresentation {
    pub normalization: f64,
    pub precision_matrix: Mat4,
    pub shift: Vector4<f64>,
    pub rank_deficient: bool,
}

impl GaussianPRepresentation {
    /// Density at displacement `alpha` (measured from the one-point shift).
    pub fn density(&self, alpha: &Vector4<f64>) -> Option<f64> {
        if self.rank_deficient {
            return None;
        }
        Some(self.normalization * (-0.5 * alpha.dot(&(self.precision_matrix * alpha))).exp())
    }
}

/// Two-mode squeezed vacuum with squeezing parameter `r`.
pub fn two_mode_squeezed(r: f64) -> CovarianceTwoMode {
    let ch = (2.0 * r).cosh();
    let sh = (2.0 * r).sinh();
    let a = Mat2::identity() * ch;
    let c = Mat2::new(sh, 0.0, 0.0, -sh);
    CovarianceTwoMode::from_blocks(&a, &a, &c).expect("symmetric by construction")
}

/// Random symplectic matrix `exp(Ω H)` for symmetric `H` with entries drawn
/// uniformly from `[-spread, spread]`.
pub fn random_symplectic<R: Rng + ?Sized>(rng: &mut R, spread: f64) -> Mat4 {
    let mut h = Mat4::zeros();
    for i in 0..4 {
        for j in i..4 {
            let v = rng.random_range(-spread..=spread);
            h[(i, j)] = v;
            h[(j, i)] = v;
        }
    }
    (omega() * h).exp()
}

/// Random physical covariance `Sᵀ diag(ν₁, ν₁, ν₂, ν₂) S` with symplectic
/// eigenvalues drawn from `[1, 1 + max_excess]`.
pub fn random_covariance<R: Rng + ?Sized>(
    rng: &mut R,
    spread: f64,
    max_excess: f64,
) -> CovarianceTwoMode {
    let s = random_symplectic(rng, spread);
    let nu1 = 1.0 + rng.random_range(0.0..=max_excess);
    let nu2 = 1.0 + rng.random_range(0.0..=max_excess);
    let d = Mat4::from_diagonal(&Vector4::new(nu1, nu1, nu2, nu2));
    let g = s.transpose() * d * s;
    CovarianceTwoMode::centered((g + g.transpose()) * 0.5).expect("symmetric by construction")
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn one(m: Mat2) -> CovarianceOneMode {
        CovarianceOneMode::centered(m).unwrap()
    }

    #[test]
    fn uncertainty_examples() {
        assert!(CovarianceTwoMode::centered(Mat4::identity())
            .unwrap()
            .check_uncertainty(DEFAULT_TOL));
        assert!(!CovarianceTwoMode::centered(Mat4::identity() * 0.5)
            .unwrap()
            .check_uncertainty(DEFAULT_TOL));
        // ½𝟙 + iΩ has eigenvalues ½ ± 1.
        let m = CovarianceTwoMode::centered(Mat4::identity() * 0.5)
            .unwrap()
            .uncertainty_margin();
        assert_abs_diff_eq!(m, -0.5, epsilon = 1e-12);
        assert!(one(Mat2::new(2.0, 0.0, 0.0, 0.5)).check_uncertainty(DEFAULT_TOL));
    }

    #[test]
    fn asymmetric_input_is_rejected() {
        let err = CovarianceOneMode::centered(Mat2::new(1.0, 0.3, 0.0, 1.0)).unwrap_err();
        assert!(matches!(err, Error::MalformedMatrix { .. }));
    }

    #[test]
    fn purity() {
        assert!(one(Mat2::identity()).is_pure_mode(DEFAULT_TOL).unwrap());
        assert!(one(Mat2::new(2.0, 0.0, 0.0, 0.5))
            .is_pure_mode(DEFAULT_TOL)
            .unwrap());
        assert!(!one(Mat2::identity() * 2.0)
            .is_pure_mode(DEFAULT_TOL)
            .unwrap());
        assert!(one(Mat2::identity() * 0.5)
            .is_pure_mode(DEFAULT_TOL)
            .is_err());
    }

    #[test]
    fn number_expectation() {
        assert_eq!(one(Mat2::identity()).mode_number_expectation(), 0.0);
        assert_eq!(one(Mat2::identity() * 2.0).mode_number_expectation(), 0.5);
        let shifted = CovarianceOneMode::new(Mat2::identity(), Vector2::new(1.0, 1.0)).unwrap();
        assert_eq!(shifted.mode_number_expectation(), 1.0);
    }

    #[test]
    fn simon_value_examples() {
        let id = CovarianceTwoMode::centered(Mat4::identity()).unwrap();
        assert_eq!(id.simon_value(), 0.0);
        // det A = det B = 4: 4 + 4 - 16 - 1.
        let hot = CovarianceTwoMode::centered(Mat4::identity() * 2.0).unwrap();
        assert_eq!(hot.simon_value(), -9.0);
        // det A = det B = 2: 2 + 2 - 4 - 1.
        let warm = CovarianceTwoMode::centered(Mat4::identity() * 2.0f64.sqrt()).unwrap();
        assert_abs_diff_eq!(warm.simon_value(), -1.0, epsilon = 1e-14);
        let expected = 4.0 * 1.0f64.sinh().powi(2);
        assert_abs_diff_eq!(
            two_mode_squeezed(0.5).simon_value(),
            expected,
            epsilon = 1e-10
        );
        assert_abs_diff_eq!(expected, 5.524391382167263, epsilon = 1e-12);
    }

    #[test]
    fn nu_minus_examples() {
        let id = CovarianceTwoMode::centered(Mat4::identity()).unwrap();
        assert_abs_diff_eq!(id.nu_minus().unwrap(), 1.0, epsilon = 1e-12);
        for r in [0.1, 0.25, 0.5, 1.0] {
            assert_abs_diff_eq!(
                two_mode_squeezed(r).nu_minus().unwrap(),
                (-2.0 * r).exp(),
                epsilon = 1e-10
            );
        }
        let hot = CovarianceTwoMode::centered(Mat4::identity() * 2.0).unwrap();
        assert_abs_diff_eq!(hot.nu_minus().unwrap(), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn inconsistent_invariants_are_reported() {
        let inv = SimonInvariants {
            det_a: 1.0,
            det_b: 1.0,
            det_c: 0.0,
            trace_term: -10.0,
        };
        assert!(matches!(
            nu_minus_from(&inv, DEFAULT_TOL),
            Err(Error::InconsistentCovariance { .. })
        ));
    }

    #[test]
    fn negativity_examples() {
        assert_eq!(negativity_from_nu(1.0), 0.0);
        let n = two_mode_squeezed(0.5).negativity().unwrap();
        assert_abs_diff_eq!(n, (std::f64::consts::E - 1.0) / 2.0, epsilon = 1e-10);
        assert_abs_diff_eq!(n, 0.8591409142295225, epsilon = 1e-10);
        let hot = CovarianceTwoMode::centered(Mat4::identity() * 2.0).unwrap();
        assert_eq!(hot.negativity().unwrap(), 0.0);
    }

    #[test]
    fn partial_transpose_examples() {
        let id = CovarianceTwoMode::centered(Mat4::identity()).unwrap();
        assert_eq!(id.partial_transpose(), id);
        let c = Mat2::identity() * 0.3;
        let g = CovarianceTwoMode::from_blocks(
            &(Mat2::identity() * 2.0),
            &(Mat2::identity() * 2.0),
            &c,
        )
        .unwrap();
        let pt = g.partial_transpose();
        assert_eq!(pt.block_c(), Mat2::new(0.3, 0.0, 0.0, -0.3));
        assert_eq!(pt.partial_transpose(), g);
    }

    #[test]
    fn p_witness_examples() {
        let g = CovarianceTwoMode::centered(Mat4::identity() * 3.0).unwrap();
        let w = g.p_function_witness(DEFAULT_TOL).unwrap();
        assert!(!w.rank_deficient);
        let pi2 = std::f64::consts::PI.powi(2);
        assert_abs_diff_eq!(w.normalization, 1.0 / (4.0 * pi2), epsilon = 1e-15);
        assert_abs_diff_eq!(
            (w.precision_matrix - Mat4::identity()).abs().max(),
            0.0,
            epsilon = 1e-14
        );

        let id = CovarianceTwoMode::centered(Mat4::identity()).unwrap();
        assert!(id.p_function_witness(DEFAULT_TOL).unwrap().rank_deficient);
        assert!(two_mode_squeezed(0.3)
            .p_function_witness(DEFAULT_TOL)
            .is_none());
    }

    #[test]
    fn weyl_examples() {
        let g = CovarianceTwoMode::centered(Mat4::identity()).unwrap();
        assert_eq!(
            g.weyl_expectation(&Vector4::zeros()),
            Complex64::new(1.0, 0.0)
        );
        let x = 1.3;
        let v = g.weyl_expectation(&Vector4::new(x, 0.0, 0.0, 0.0));
        assert_abs_diff_eq!(v.re, (-x * x / 4.0).exp(), epsilon = 1e-15);
        assert_abs_diff_eq!(v.im, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn random_covariances_are_physical() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let g = random_covariance(&mut rng, 0.6, 1.0);
            assert!(g.check_uncertainty(1e-9));
            assert!(g.mode_a().det() >= 1.0 - 1e-9);
            assert!(g.mode_b().det() >= 1.0 - 1e-9);
            assert!(g.invariants().uncertainty_value() <= 1e-8);
        }
    }
}
