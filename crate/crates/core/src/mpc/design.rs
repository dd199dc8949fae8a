use nalgebra::DMatrix;

use super::model::PlantModel;
use crate::error::{Error, Result};
use crate::linalg;
use crate::scalar::Real;

pub const DARE_MAX_ITERS: usize = 100_000;

/// Horizon, weights and the LQR terminal ingredients.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackingDesign<T: Real> {
    pub horizon: usize,
    pub q: DMatrix<T>,
    pub r: DMatrix<T>,
    /// Terminal cost, the stabilizing DARE solution.
    pub p: DMatrix<T>,
    /// LQR gain, `u = −Kx`.
    pub k: DMatrix<T>,
}

impl<T: Real> TrackingDesign<T> {
    pub fn new(model: &PlantModel<T>, horizon: usize, q: DMatrix<T>, r: DMatrix<T>) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::Weights("horizon must be at least 1".into()));
        }
        let (p, k) = solve_dare(model, &q, &r)?;
        let rho = linalg::spectral_radius(&(&model.a - &model.b * &k));
        if !(rho < T::one() - T::attainable(1e-9)) {
            return Err(Error::UnstableClosedLoop(rho.to_f64_lossy()));
        }
        Ok(Self { horizon, q, r, p, k })
    }

    pub fn closed_loop(&self, model: &PlantModel<T>) -> DMatrix<T> {
        &model.a - &model.b * &self.k
    }
}

/// Fixed-point Riccati iteration from `P₀ = Q`:
/// `P ← Q + AᵀPA − AᵀPB(R + BᵀPB)⁻¹BᵀPA` until the relative change is below 1e-12.
pub fn solve_dare<T: Real>(
    model: &PlantModel<T>,
    q: &DMatrix<T>,
    r: &DMatrix<T>,
) -> Result<(DMatrix<T>, DMatrix<T>)> {
    let (n, nu) = (model.n(), model.n_u());
    if q.shape() != (n, n) || r.shape() != (nu, nu) {
        return Err(Error::Dimension("Q must be n x n and R must be n_u x n_u".into()));
    }
    if !linalg::is_positive_definite(q) {
        return Err(Error::Weights("Q must be symmetric positive definite".into()));
    }
    if !linalg::is_positive_definite(r) {
        return Err(Error::Weights("R must be symmetric positive definite".into()));
    }
    let (a, b) = (&model.a, &model.b);
    let at = a.transpose();
    let bt = b.transpose();
    let tol = T::attainable(1e-12);
    let gain = |p: &DMatrix<T>| -> Result<DMatrix<T>> {
        let s = r + &bt * p * b;
        let chol = s.cholesky().ok_or(Error::Factorization("R + BᵀPB"))?;
        Ok(chol.solve(&(&bt * p * a)))
    };
    let mut p = q.clone();
    for _ in 0..DARE_MAX_ITERS {
        let k = gain(&p)?;
        let next = q + &at * &p * a - &at * &p * b * &k;
        let next = (&next + next.transpose()) * T::lit(0.5);
        if next.iter().any(|x| !x.is_finite()) {
            break;
        }
        let change = linalg::max_abs(&(&next - &p));
        let scale = linalg::max_abs(&p);
        p = next;
        if change <= tol * scale {
            let k = gain(&p)?;
            return Ok((p, k));
        }
    }
    Err(Error::RiccatiDivergence(DARE_MAX_ITERS))
}

/// `‖P − Q − AᵀPA + AᵀPBK‖` (max-abs entry).
pub fn dare_residual<T: Real>(
    model: &PlantModel<T>,
    q: &DMatrix<T>,
    p: &DMatrix<T>,
    k: &DMatrix<T>,
) -> T {
    let at = model.a.transpose();
    linalg::max_abs(&(p - q - &at * p * &model.a + &at * p * &model.b * k))
}
