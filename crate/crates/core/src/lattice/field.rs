use super::LatticeSpec;
use crate::error::{Error, Result};

/// Real values on every lattice point, row-major by time slice.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    lattice: LatticeSpec,
    data: Vec<f64>,
}

impl Field {
    pub fn zeros(lattice: LatticeSpec) -> Self {
        Self {
            data: vec![0.0; lattice.len()],
            lattice,
        }
    }

    pub fn from_vec(lattice: LatticeSpec, data: Vec<f64>) -> Result<Self> {
        if data.len() != lattice.len() {
            return Err(Error::LatticeMismatch);
        }
        Ok(Self { lattice, data })
    }

    pub fn from_fn(lattice: LatticeSpec, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(lattice.len());
        for n in 0..lattice.n_time {
            for j in 0..lattice.n_space {
                data.push(f(n, j));
            }
        }
        Self { lattice, data }
    }

    pub fn lattice(&self) -> &LatticeSpec {
        &self.lattice
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn at(&self, n: usize, j: usize) -> f64 {
        self.data[n * self.lattice.n_space + j]
    }

    pub fn set(&mut self, n: usize, j: usize, v: f64) {
        let ns = self.lattice.n_space;
        self.data[n * ns + j] = v;
    }

    pub fn row(&self, n: usize) -> &[f64] {
        let ns = self.lattice.n_space;
        &self.data[n * ns..(n + 1) * ns]
    }

    pub fn row_mut(&mut self, n: usize) -> &mut [f64] {
        let ns = self.lattice.n_space;
        &mut self.data[n * ns..(n + 1) * ns]
    }

    pub fn ensure_same_lattice(&self, other: &Field) -> Result<()> {
        if self.lattice != other.lattice {
            return Err(Error::LatticeMismatch);
        }
        Ok(())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|v| *v == 0.0)
    }

    /// `self += c * other`.
    pub fn axpy(&mut self, c: f64, other: &Field) -> Result<()> {
        self.ensure_same_lattice(other)?;
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += c * b;
        }
        Ok(())
    }

    pub fn scaled(&self, c: f64) -> Field {
        Field {
            lattice: self.lattice,
            data: self.data.iter().map(|v| c * v).collect(),
        }
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        let mut out = self.clone();
        out.axpy(-1.0, other)?;
        Ok(out)
    }

    pub fn add(&self, other: &Field) -> Result<Field> {
        let mut out = self.clone();
        out.axpy(1.0, other)?;
        Ok(out)
    }

    /// Pointwise product.
    pub fn multiply(&self, other: &Field) -> Result<Field> {
        self.ensure_same_lattice(other)?;
        Ok(Field {
            lattice: self.lattice,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a * b)
                .collect(),
        })
    }

    /// `u(n, x) -> u(N - 1 - n, x)`.
    pub fn time_reflected(&self) -> Field {
        let nt = self.lattice.n_time;
        Field::from_fn(self.lattice, |n, j| self.at(nt - 1 - n, j))
    }

    /// First and last time slice holding a nonzero value.
    pub fn time_extent(&self) -> Option<(usize, usize)> {
        let ns = self.lattice.n_space;
        let nonzero = |n: &usize| self.data[n * ns..(n + 1) * ns].iter().any(|v| *v != 0.0);
        let first = (0..self.lattice.n_time).find(nonzero)?;
        let last = (0..self.lattice.n_time).rev().find(nonzero)?;
        Some((first, last))
    }

    /// Lattice points holding a nonzero value.
    pub fn nonzero_points(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let ns = self.lattice.n_space;
        self.data
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(move |(k, _)| (k / ns, k % ns))
    }
}

/// Closed index rectangle `[t_min, t_max] × [x_min, x_max]` (spatial range
/// does not wrap around the circle).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SupportBox {
    pub t_min: usize,
    pub t_max: usize,
    pub x_min: usize,
    pub x_max: usize,
}

impl SupportBox {
    pub fn contains(&self, n: usize, j: usize) -> bool {
        (self.t_min..=self.t_max).contains(&n) && (self.x_min..=self.x_max).contains(&j)
    }

    /// Smallest box holding both.
    pub fn union(&self, other: &SupportBox) -> SupportBox {
        SupportBox {
            t_min: self.t_min.min(other.t_min),
            t_max: self.t_max.max(other.t_max),
            x_min: self.x_min.min(other.x_min),
            x_max: self.x_max.max(other.x_max),
        }
    }
}

/// Compactly supported smearing function.
#[derive(Debug, Clone, PartialEq)]
pub struct TestFunction {
    field: Field,
    support: SupportBox,
}

/// Time slices at either end that supports must avoid.
pub const TIME_MARGIN: usize = 2;

impl TestFunction {
    pub fn new(field: Field, support: SupportBox) -> Result<Self> {
        let l = *field.lattice();
        if support.t_min > support.t_max
            || support.x_min > support.x_max
            || support.x_max >= l.n_space
        {
            return Err(Error::Geometry(format!("invalid support box {support:?}")));
        }
        if support.t_min < TIME_MARGIN || support.t_max + TIME_MARGIN >= l.n_time {
            return Err(Error::Geometry(format!(
                "support slices {}..={} must stay {} slices away from the time boundary (n_time = {})",
                support.t_min, support.t_max, TIME_MARGIN, l.n_time
            )));
        }
        if let Some((n, j)) = field
            .nonzero_points()
            .find(|(n, j)| !support.contains(*n, *j))
        {
            return Err(Error::Geometry(format!(
                "value at ({n}, {j}) lies outside the support box"
            )));
        }
        Ok(Self { field, support })
    }

    /// Wraps a field, using the tightest non-wrapping bounding box.
    pub fn from_field(field: Field) -> Result<Self> {
        let l = *field.lattice();
        let Some((t_min, t_max)) = field.time_extent() else {
            let support = SupportBox {
                t_min: TIME_MARGIN,
                t_max: TIME_MARGIN,
                x_min: 0,
                x_max: 0,
            };
            return Self::new(field, support);
        };
        let mut x_min = l.n_space;
        let mut x_max = 0;
        for (_, j) in field.nonzero_points() {
            x_min = x_min.min(j);
            x_max = x_max.max(j);
        }
        Self::new(
            field,
            SupportBox {
                t_min,
                t_max,
                x_min,
                x_max,
            },
        )
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn into_field(self) -> Field {
        self.field
    }

    pub fn support(&self) -> &SupportBox {
        &self.support
    }

    pub fn lattice(&self) -> &LatticeSpec {
        self.field.lattice()
    }

    pub fn scaled(&self, c: f64) -> TestFunction {
        TestFunction {
            field: self.field.scaled(c),
            support: self.support,
        }
    }

    pub fn add(&self, other: &TestFunction) -> Result<TestFunction> {
        Ok(TestFunction {
            field: self.field.add(&other.field)?,
            support: self.support.union(&other.support),
        })
    }

    /// Smooth bump `amplitude · exp(-1/(1-u_t²)) · exp(-1/(1-u_x²))` with
    /// `u` the offsets from `center` in units of `radii`.
    pub fn bump(
        lattice: LatticeSpec,
        center: (f64, f64),
        radii: (f64, f64),
        amplitude: f64,
    ) -> Result<Self> {
        make_bump(lattice, center, radii, amplitude)
    }
}

impl AsRef<Field> for TestFunction {
    fn as_ref(&self) -> &Field {
        &self.field
    }
}

impl AsRef<Field> for Field {
    fn as_ref(&self) -> &Field {
        self
    }
}

fn bump_factor(u: f64) -> f64 {
    if u.abs() < 1.0 {
        (-1.0 / (1.0 - u * u)).exp()
    } else {
        0.0
    }
}

/// Geometry precondition of [`make_bump`], without building the field.
pub fn check_bump(
    lattice: &LatticeSpec,
    center: (f64, f64),
    radii: (f64, f64),
    amplitude: f64,
) -> Result<()> {
    let (tc, xc) = center;
    let (rt, rx) = radii;
    if !(rt > 0.0 && rx > 0.0 && rt.is_finite() && rx.is_finite()) {
        return Err(Error::Geometry(format!(
            "bump radii {radii:?} must be positive"
        )));
    }
    if !(tc.is_finite() && xc.is_finite() && amplitude.is_finite()) {
        return Err(Error::Geometry(
            "bump center and amplitude must be finite".into(),
        ));
    }
    let t_lo = TIME_MARGIN as f64 * lattice.dt;
    let t_hi = (lattice.n_time - 1 - TIME_MARGIN) as f64 * lattice.dt;
    if tc - rt < t_lo || tc + rt > t_hi {
        return Err(Error::Geometry(format!(
            "bump time range [{}, {}] leaves the usable window [{t_lo}, {t_hi}]",
            tc - rt,
            tc + rt
        )));
    }
    if xc - rx < 0.0 || xc + rx > lattice.circumference() - lattice.dx {
        return Err(Error::Geometry(format!(
            "bump space range [{}, {}] must lie within [0, {}]",
            xc - rx,
            xc + rx,
            lattice.circumference() - lattice.dx
        )));
    }
    Ok(())
}

/// See [`TestFunction::bump`]. Coordinates are physical: `center = (t, x)`.
pub fn make_bump(
    lattice: LatticeSpec,
    center: (f64, f64),
    radii: (f64, f64),
    amplitude: f64,
) -> Result<TestFunction> {
    check_bump(&lattice, center, radii, amplitude)?;
    let (tc, xc) = center;
    let (rt, rx) = radii;
    // Points with |u| < 1 strictly; ceil/floor with a guard for exact hits.
    let idx_range = |c: f64, r: f64, h: f64| {
        let lo = ((c - r) / h).floor() as isize;
        let hi = ((c + r) / h).ceil() as isize;
        (lo.max(0) as usize, hi.max(0) as usize)
    };
    let (t0, t1) = idx_range(tc, rt, lattice.dt);
    let (x0, x1) = idx_range(xc, rx, lattice.dx);
    let mut field = Field::zeros(lattice);
    let mut bbox: Option<SupportBox> = None;
    for n in t0..=t1.min(lattice.n_time - 1) {
        let ft = bump_factor((lattice.time(n) - tc) / rt);
        if ft == 0.0 {
            continue;
        }
        for j in x0..=x1.min(lattice.n_space - 1) {
            let fx = bump_factor((lattice.position(j) - xc) / rx);
            if fx == 0.0 {
                continue;
            }
            let v = amplitude * ft * fx;
            field.set(n, j, v);
            let b = SupportBox {
                t_min: n,
                t_max: n,
                x_min: j,
                x_max: j,
            };
            bbox = Some(bbox.map_or(b, |bb| bb.union(&b)));
        }
    }
    let support = bbox.ok_or_else(|| Error::Geometry("bump contains no lattice point".into()))?;
    TestFunction::new(field, support)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lattice() -> LatticeSpec {
        LatticeSpec::new(64, 64, 0.25, 0.125).unwrap()
    }

    #[test]
    fn bump_center_value() {
        let f = make_bump(lattice(), (4.0, 8.0), (1.0, 1.5), 3.0).unwrap();
        let v = f.field().at(32, 32);
        assert!((v - 3.0 * (-2.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn zero_amplitude_bump_vanishes() {
        let f = make_bump(lattice(), (4.0, 8.0), (1.0, 1.0), 0.0).unwrap();
        assert!(f.field().is_zero());
    }

    #[test]
    fn bump_is_even_about_its_center() {
        let f = make_bump(lattice(), (4.0, 8.0), (1.0, 1.0), 1.0).unwrap();
        // Reflect about slice 32 (t = 4).
        for n in 0..64 {
            for j in 0..64 {
                let m = 64 - n;
                if m < 64 {
                    assert_eq!(f.field().at(n, j), f.field().at(m, j));
                }
            }
        }
    }

    #[test]
    fn bump_outside_domain_is_rejected() {
        assert!(make_bump(lattice(), (0.5, 8.0), (1.0, 1.0), 1.0).is_err());
        assert!(make_bump(lattice(), (4.0, 0.5), (1.0, 1.0), 1.0).is_err());
    }

    #[test]
    fn support_box_is_exact() {
        let f = make_bump(lattice(), (4.0, 8.0), (1.0, 1.0), 1.0).unwrap();
        let b = f.support();
        // |u| < 1 strictly: t in (3, 5) -> slices 25..=39; x in (7, 9) -> sites 29..=35.
        assert_eq!((b.t_min, b.t_max, b.x_min, b.x_max), (25, 39, 29, 35));
    }

    #[test]
    fn test_function_rejects_values_outside_box() {
        let mut field = Field::zeros(lattice());
        field.set(10, 10, 1.0);
        let support = SupportBox {
            t_min: 11,
            t_max: 12,
            x_min: 0,
            x_max: 20,
        };
        assert!(TestFunction::new(field, support).is_err());
    }
}
