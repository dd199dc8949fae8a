use nalgebra::{DMatrix, DVector};

use super::design::TrackingDesign;
use super::equilibrium::EquilibriumMap;
use super::model::{ConstraintPolyhedron, PlantModel};
use crate::error::Result;
use crate::qp::{longstep, QpProblem};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TerminalSetOptions {
    /// Tightening of the steady-state rows: `Y G_y v ≤ (1 − ε) h`.
    pub epsilon: f64,
    pub k_max: usize,
    /// Ridge used when the redundancy LPs are solved as QPs.
    pub ridge: f64,
    /// Drop rows implied by the others once the set is determined.
    pub prune: bool,
}

impl Default for TerminalSetOptions {
    fn default() -> Self {
        Self { epsilon: 1e-6, k_max: 500, ridge: 1e-8, prune: true }
    }
}

/// Closed loop under LQR with a constant reference, on `w = (x, v)`:
/// `w⁺ = A_w w`, `y = C_w w`.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedLoop<T: Real> {
    pub a_w: DMatrix<T>,
    pub c_w: DMatrix<T>,
    pub n: usize,
    pub n_v: usize,
}

impl<T: Real> AugmentedLoop<T> {
    pub fn new(model: &PlantModel<T>, design: &TrackingDesign<T>, eq_map: &EquilibriumMap<T>) -> Self {
        let (n, nv) = (model.n(), eq_map.n_v());
        // u = −Kx + (K G_x + G_u) v
        let feedforward = &design.k * &eq_map.g_x + &eq_map.g_u;
        let mut a_w = DMatrix::zeros(n + nv, n + nv);
        a_w.view_mut((0, 0), (n, n)).copy_from(&design.closed_loop(model));
        a_w.view_mut((0, n), (n, nv)).copy_from(&(&model.b * &feedforward));
        a_w.view_mut((n, n), (nv, nv)).copy_from(&DMatrix::identity(nv, nv));
        let mut c_w = DMatrix::zeros(model.n_y(), n + nv);
        c_w.view_mut((0, 0), (model.n_y(), n))
            .copy_from(&(&model.c - &model.d * &design.k));
        c_w.view_mut((0, n), (model.n_y(), nv))
            .copy_from(&(&model.d * &feedforward));
        Self { a_w, c_w, n, n_v: nv }
    }
}

/// Polyhedral inner approximation of the maximal constraint-admissible set
/// `{(x, v) : H_T (x, v) ≤ h_T}`.
#[derive(Debug, Clone, PartialEq)]
pub struct TerminalSet<T: Real> {
    pub h_t: DMatrix<T>,
    pub h_offsets: DVector<T>,
    /// Largest prediction step whose rows were needed.
    pub k_star: usize,
    /// False when `k_max` was reached before the rows became redundant.
    pub determined: bool,
}

impl<T: Real> TerminalSet<T> {
    pub fn rows(&self) -> usize {
        self.h_t.nrows()
    }

    /// `min_i (h_T − H_T w)_i`; nonnegative iff `w` is in the set.
    pub fn margin(&self, w: &DVector<T>) -> T {
        (&self.h_offsets - &self.h_t * w)
            .iter()
            .fold(T::max_value().unwrap(), |a, &x| a.min(x))
    }

    pub fn contains(&self, w: &DVector<T>, tol: T) -> bool {
        self.margin(w) >= -tol
    }
}

struct RowSet<T: Real> {
    rows: Vec<DVector<T>>,
    offsets: Vec<T>,
}

impl<T: Real> RowSet<T> {
    fn matrix(&self, dim: usize, skip: Option<usize>) -> (DMatrix<T>, DVector<T>) {
        let kept: Vec<usize> = (0..self.rows.len()).filter(|&i| Some(i) != skip).collect();
        let mut g = DMatrix::zeros(kept.len(), dim);
        let mut h = DVector::zeros(kept.len());
        for (r, &i) in kept.iter().enumerate() {
            g.set_row(r, &self.rows[i].transpose());
            h[r] = self.offsets[i];
        }
        (g, h)
    }
}

/// True when `rowᵀw ≤ bound` holds on all of `{w : Gw ≤ h}`.
///
/// The LP `max rowᵀw` is solved as `min ½δ‖w‖² − rowᵀw` with the log-domain
/// solver. The regularized maximizer underestimates the LP value by at most
/// about `½δ‖w‖²`, and the solve adds at most `mη`; both are added back
/// before comparing, so a row is only declared redundant with room to spare.
fn is_redundant<T: Real>(
    g: &DMatrix<T>,
    h: &DVector<T>,
    row: &DVector<T>,
    bound: T,
    ridge: T,
) -> Result<bool> {
    let dim = row.len();
    let qp = QpProblem::new(DMatrix::identity(dim, dim) * ridge, -row, -g, h.clone())?;
    let eta_f = T::lit(1e-11);
    let report = longstep(&qp, &DVector::zeros(h.len()), T::one(), eta_f, 400)?;
    let w = &report.z;
    let m = T::from_usize(h.len()).unwrap();
    let margin = ridge * (T::one() + w.norm_squared()) + m * eta_f + T::lit(1e-9) * (T::one() + bound.abs());
    Ok(row.dot(w) + margin <= bound)
}

/// Gilbert–Tan construction on the augmented closed loop.
///
/// Starts from the tightened steady-state rows and the `k = 0` output rows,
/// then appends `Y C_w A_w^k` for `k = 1, 2, …` until every new row is
/// redundant with respect to the current set (or `k_max` is hit).
/// All-zero rows are discarded.
pub fn max_admissible_set<T: Real>(
    model: &PlantModel<T>,
    design: &TrackingDesign<T>,
    eq_map: &EquilibriumMap<T>,
    constraints: &ConstraintPolyhedron<T>,
    options: &TerminalSetOptions,
) -> Result<TerminalSet<T>> {
    let aug = AugmentedLoop::new(model, design, eq_map);
    let (n, nv) = (aug.n, aug.n_v);
    let dim = n + nv;
    let ridge = T::lit(options.ridge);
    let zero_tol = T::attainable(1e-14);
    let is_zero = |r: &DVector<T>| r.iter().all(|x| x.abs() <= zero_tol);

    let mut set = RowSet { rows: Vec::new(), offsets: Vec::new() };
    let tighten = T::one() - T::lit(options.epsilon);
    let steady = &constraints.y * &eq_map.g_y;
    for i in 0..constraints.rows() {
        let mut row = DVector::zeros(dim);
        row.rows_mut(n, nv).copy_from(&steady.row(i).transpose());
        if !is_zero(&row) {
            set.rows.push(row);
            set.offsets.push(constraints.h[i] * tighten);
        }
    }
    let mut output_map = &constraints.y * &aug.c_w;
    for i in 0..constraints.rows() {
        let row = output_map.row(i).transpose();
        if !is_zero(&row) {
            set.rows.push(row);
            set.offsets.push(constraints.h[i]);
        }
    }

    let mut k_star = 0;
    let mut determined = false;
    for k in 1..=options.k_max {
        output_map = &output_map * &aug.a_w;
        let (g, h) = set.matrix(dim, None);
        let mut added = Vec::new();
        for i in 0..constraints.rows() {
            let row = output_map.row(i).transpose();
            if is_zero(&row) {
                continue;
            }
            if !is_redundant(&g, &h, &row, constraints.h[i], ridge)? {
                added.push((row, constraints.h[i]));
            }
        }
        if added.is_empty() {
            determined = true;
            break;
        }
        k_star = k;
        for (row, off) in added {
            set.rows.push(row);
            set.offsets.push(off);
        }
    }

    if options.prune && determined {
        let mut i = 0;
        while i < set.rows.len() {
            let (g, h) = set.matrix(dim, Some(i));
            if set.rows.len() > 1 && is_redundant(&g, &h, &set.rows[i], set.offsets[i], ridge)? {
                set.rows.remove(i);
                set.offsets.remove(i);
            } else {
                i += 1;
            }
        }
    }

    let (h_t, h_offsets) = set.matrix(dim, None);
    Ok(TerminalSet { h_t, h_offsets, k_star, determined })
}
