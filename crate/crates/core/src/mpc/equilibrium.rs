use nalgebra::{DMatrix, DVector};

use super::model::{ConstraintPolyhedron, PlantModel};
use crate::error::{Error, Result};
use crate::linalg;
use crate::scalar::Real;

/// Equilibria `(x̄_v, ū_v, z̄_v) = (G_x v, G_u v, G_z v)` with `G_z = I`, so the
/// reference `v` lives in tracking-output coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumMap<T: Real> {
    pub g_x: DMatrix<T>,
    pub g_u: DMatrix<T>,
    pub g_z: DMatrix<T>,
    /// Constrained output at equilibrium: `C G_x + D G_u`.
    pub g_y: DMatrix<T>,
}

impl<T: Real> EquilibriumMap<T> {
    pub fn n_v(&self) -> usize {
        self.g_x.ncols()
    }

    pub fn state(&self, v: &DVector<T>) -> DVector<T> {
        &self.g_x * v
    }

    pub fn input(&self, v: &DVector<T>) -> DVector<T> {
        &self.g_u * v
    }
}

/// `Z = [A − I, B, 0; E, F, −I]`.
pub fn equilibrium_matrix<T: Real>(model: &PlantModel<T>) -> DMatrix<T> {
    let (n, nu, nz) = (model.n(), model.n_u(), model.n_z());
    let mut z = DMatrix::zeros(n + nz, n + nu + nz);
    z.view_mut((0, 0), (n, n))
        .copy_from(&(&model.a - DMatrix::identity(n, n)));
    z.view_mut((0, n), (n, nu)).copy_from(&model.b);
    z.view_mut((n, 0), (nz, n)).copy_from(&model.e);
    z.view_mut((n, n), (nz, nu)).copy_from(&model.f);
    z.view_mut((n, n + nu), (nz, nz))
        .copy_from(&(-DMatrix::identity(nz, nz)));
    z
}

/// Nullspace basis of `Z` from an SVD, renormalized so that `G_z = I`.
pub fn equilibrium_basis<T: Real>(model: &PlantModel<T>) -> Result<EquilibriumMap<T>> {
    let (n, nu, nz) = (model.n(), model.n_u(), model.n_z());
    let z = equilibrium_matrix(model);
    let basis = linalg::nullspace(&z, T::attainable(1e-10));
    if basis.ncols() == 0 {
        return Err(Error::Equilibrium("Z has a trivial nullspace".into()));
    }
    if basis.ncols() != nz {
        return Err(Error::Equilibrium(format!(
            "nullspace has dimension {}, but the tracking output has {nz} components",
            basis.ncols()
        )));
    }
    let g_z = basis.view((n + nu, 0), (nz, nz)).into_owned();
    let g_z_inv = g_z
        .clone()
        .lu()
        .try_inverse()
        .ok_or_else(|| Error::Equilibrium("G_z is singular".into()))?;
    let svd = g_z.svd(false, false);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if smin <= T::attainable(1e-10) * smax {
        return Err(Error::Equilibrium("G_z is singular".into()));
    }
    let g = basis * g_z_inv;
    let g_x = g.view((0, 0), (n, nz)).into_owned();
    let g_u = g.view((n, 0), (nu, nz)).into_owned();
    let g_z = g.view((n + nu, 0), (nz, nz)).into_owned();
    let g_y = &model.c * &g_x + &model.d * &g_u;
    Ok(EquilibriumMap { g_x, g_u, g_z, g_y })
}

/// Margin below which a reference counts as on the boundary of the admissible set.
pub const REFERENCE_MARGIN: f64 = 1e-9;

/// `v` is strictly admissible: `Y G_y v < h` with margin [`REFERENCE_MARGIN`].
pub fn reference_admissible<T: Real>(
    v: &DVector<T>,
    eq_map: &EquilibriumMap<T>,
    constraints: &ConstraintPolyhedron<T>,
) -> bool {
    let slack = &constraints.h - &constraints.y * (&eq_map.g_y * v);
    slack.iter().all(|&s| s > T::lit(REFERENCE_MARGIN))
}
