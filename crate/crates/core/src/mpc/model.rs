use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;
use crate::qp::{longstep, QpProblem, SolveStatus};
use crate::scalar::Real;

/// Discrete LTI plant
/// `x⁺ = Ax + Bu`, constrained output `y = Cx + Du`, tracking output `z = Ex + Fu`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantModel<T: Real> {
    pub a: DMatrix<T>,
    pub b: DMatrix<T>,
    pub c: DMatrix<T>,
    pub d: DMatrix<T>,
    pub e: DMatrix<T>,
    pub f: DMatrix<T>,
}

impl<T: Real> PlantModel<T> {
    pub fn new(
        a: DMatrix<T>,
        b: DMatrix<T>,
        c: DMatrix<T>,
        d: DMatrix<T>,
        e: DMatrix<T>,
        f: DMatrix<T>,
    ) -> Result<Self> {
        let n = a.nrows();
        let dims = |what: &str, m: &DMatrix<T>, r: usize, c: usize| -> Result<()> {
            if m.shape() != (r, c) {
                return Err(Error::Dimension(format!(
                    "{what} is {}x{}, expected {r}x{c}",
                    m.nrows(),
                    m.ncols()
                )));
            }
            Ok(())
        };
        dims("A", &a, n, n)?;
        let nu = b.ncols();
        dims("B", &b, n, nu)?;
        let ny = c.nrows();
        dims("C", &c, ny, n)?;
        dims("D", &d, ny, nu)?;
        let nz = e.nrows();
        dims("E", &e, nz, n)?;
        dims("F", &f, nz, nu)?;
        Ok(Self { a, b, c, d, e, f })
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn n_u(&self) -> usize {
        self.b.ncols()
    }

    pub fn n_y(&self) -> usize {
        self.c.nrows()
    }

    pub fn n_z(&self) -> usize {
        self.e.nrows()
    }

    pub fn step(&self, x: &DVector<T>, u: &DVector<T>) -> DVector<T> {
        &self.a * x + &self.b * u
    }

    pub fn output(&self, x: &DVector<T>, u: &DVector<T>) -> DVector<T> {
        &self.c * x + &self.d * u
    }

    pub fn tracking_output(&self, x: &DVector<T>, u: &DVector<T>) -> DVector<T> {
        &self.e * x + &self.f * u
    }
}

/// Output constraint set `{y : Yy ≤ h}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintPolyhedron<T: Real> {
    pub y: DMatrix<T>,
    pub h: DVector<T>,
}

impl<T: Real> ConstraintPolyhedron<T> {
    /// Requires `h > 0` (origin in the interior) and a bounded polyhedron.
    pub fn new(y: DMatrix<T>, h: DVector<T>) -> Result<Self> {
        if y.nrows() != h.len() {
            return Err(Error::Dimension(format!("Y has {} rows, h has {}", y.nrows(), h.len())));
        }
        if let Some(i) = h.iter().position(|&hi| !(hi > T::zero())) {
            return Err(Error::Constraints(format!(
                "h[{i}] must be positive so the origin is interior"
            )));
        }
        let set = Self { y, h };
        for j in 0..set.y.ncols() {
            for sign in [T::one(), -T::one()] {
                if !set.direction_bounded(j, sign)? {
                    return Err(Error::Constraints(format!(
                        "set is unbounded along {}y[{j}]",
                        if sign > T::zero() { "+" } else { "-" }
                    )));
                }
            }
        }
        Ok(set)
    }

    /// Symmetric box `|y_i| ≤ bound_i`.
    pub fn symmetric_box(bounds: &[T]) -> Result<Self> {
        let n = bounds.len();
        let mut y = DMatrix::zeros(2 * n, n);
        let mut h = DVector::zeros(2 * n);
        for (i, &b) in bounds.iter().enumerate() {
            y[(2 * i, i)] = T::one();
            y[(2 * i + 1, i)] = -T::one();
            h[2 * i] = b;
            h[2 * i + 1] = b;
        }
        Self::new(y, h)
    }

    pub fn dim(&self) -> usize {
        self.y.ncols()
    }

    pub fn rows(&self) -> usize {
        self.y.nrows()
    }

    /// `max ±y_j` over the set is finite iff `±e_j` lies in the cone spanned
    /// by the rows of `Y`. Checked as a nonnegative least-squares fit
    /// `min ½‖Yᵀλ − e‖² + ½δ‖λ‖²`, `λ ≥ 0`; the small ridge keeps the
    /// sublevel sets bounded when `Yᵀ` has a nonnegative null direction.
    fn direction_bounded(&self, j: usize, sign: T) -> Result<bool> {
        let q = self.rows();
        let mut target = DVector::zeros(self.dim());
        target[j] = sign;
        let h = &self.y * self.y.transpose() + DMatrix::identity(q, q) * T::attainable(1e-10);
        let c = -(&self.y * &target);
        let qp = QpProblem::new(h, c, DMatrix::identity(q, q), DVector::zeros(q))?;
        let report = longstep(&qp, &DVector::zeros(q), T::one(), T::lit(1e-14), 400)?;
        if report.status != SolveStatus::Converged {
            return Ok(false);
        }
        let residual = self.y.transpose() * report.z - target;
        Ok(linalg::inf_norm(&residual) <= T::lit(1e-4))
    }
}

/// Zero-order-hold discretization: `exp([[Ac, Bc], [0, 0]] T)`.
pub fn discretize<T: Real>(
    ac: &DMatrix<T>,
    bc: &DMatrix<T>,
    period: T,
) -> Result<(DMatrix<T>, DMatrix<T>)> {
    let n = ac.nrows();
    let nu = bc.ncols();
    if ac.ncols() != n || bc.nrows() != n {
        return Err(Error::Dimension("Ac must be square and match Bc".into()));
    }
    if !(period > T::zero()) {
        return Err(Error::Dimension("sample period must be positive".into()));
    }
    let mut aug = DMatrix::zeros(n + nu, n + nu);
    aug.view_mut((0, 0), (n, n)).copy_from(&(ac * period));
    aug.view_mut((0, n), (n, nu)).copy_from(&(bc * period));
    let phi = expm(&aug);
    Ok((
        phi.view((0, 0), (n, n)).into_owned(),
        phi.view((0, n), (n, nu)).into_owned(),
    ))
}

/// Matrix exponential by scaling and squaring with a truncated Taylor series.
pub fn expm<T: Real>(m: &DMatrix<T>) -> DMatrix<T> {
    let dim = m.nrows();
    let norm = m
        .row_iter()
        .map(|r| r.iter().fold(T::zero(), |a, x| a + x.abs()))
        .fold(T::zero(), |a, x| a.max(x));
    let mut squarings = 0u32;
    let mut scale = T::one();
    while norm * scale > T::lit(0.5) {
        scale *= T::lit(0.5);
        squarings += 1;
    }
    let scaled = m * scale;
    let mut result = DMatrix::identity(dim, dim);
    let mut term = DMatrix::identity(dim, dim);
    let tol = T::attainable(1e-12) * T::lit(1e-4);
    for k in 1..40 {
        term = &term * &scaled / T::from_usize(k).unwrap();
        result += &term;
        if linalg::max_abs(&term) <= tol {
            break;
        }
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}
