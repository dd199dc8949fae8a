use nalgebra::{DMatrix, DVector};

use super::design::TrackingDesign;
use super::equilibrium::EquilibriumMap;
use super::model::{ConstraintPolyhedron, PlantModel};
use super::terminal::TerminalSet;
use crate::error::{Error, Result};
use crate::linalg;
use crate::qp::QpProblem;
use crate::scalar::Real;

/// Origin of a constraint row in the condensed QP.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowTag {
    /// Row `row` of `Y(Cξ_i + Dμ_i) ≤ h` at prediction stage `stage`.
    Stage { stage: usize, row: usize },
    /// Row `row` of the terminal set.
    Terminal { row: usize },
}

/// Constraint rows that do not involve `μ`: `L_x x + L_v v + b ≥ 0`.
///
/// These are stage-0 rows acting on the current state only and terminal rows
/// on `v` only. They restrict the parameter, not the decision, and are kept
/// out of the QP.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterRows<T: Real> {
    pub l_x: DMatrix<T>,
    pub l_v: DMatrix<T>,
    pub b: DVector<T>,
    pub layout: Vec<RowTag>,
}

impl<T: Real> ParameterRows<T> {
    pub fn slack(&self, x: &DVector<T>, v: &DVector<T>) -> DVector<T> {
        &self.l_x * x + &self.l_v * v + &self.b
    }
}

/// `min ½μᵀHμ + μᵀ(W_x x + W_v v)  s.t.  Mμ + L_x x + L_v v + b ≥ 0`.
///
/// The objective equals the tracking cost up to a μ-independent term, so
/// objective gaps are gaps in the tracking cost. Rows are ordered stage-major
/// (stage 0..N−1, each in `Y` order) followed by terminal rows; see
/// [`CondensedQp::row_layout`].
#[derive(Debug, Clone, PartialEq)]
pub struct CondensedQp<T: Real> {
    pub h: DMatrix<T>,
    pub w_x: DMatrix<T>,
    pub w_v: DMatrix<T>,
    pub m: DMatrix<T>,
    pub l_x: DMatrix<T>,
    pub l_v: DMatrix<T>,
    pub b: DVector<T>,
    pub row_layout: Vec<RowTag>,
    pub parameter_rows: ParameterRows<T>,
}

impl<T: Real> CondensedQp<T> {
    pub fn num_vars(&self) -> usize {
        self.h.nrows()
    }

    pub fn num_rows(&self) -> usize {
        self.m.nrows()
    }

    pub fn linear_cost(&self, x: &DVector<T>, v: &DVector<T>) -> DVector<T> {
        &self.w_x * x + &self.w_v * v
    }

    /// `L_x x + L_v v + b`.
    pub fn offset(&self, x: &DVector<T>, v: &DVector<T>) -> DVector<T> {
        &self.l_x * x + &self.l_v * v + &self.b
    }

    pub fn slack(&self, mu: &DVector<T>, x: &DVector<T>, v: &DVector<T>) -> DVector<T> {
        &self.m * mu + self.offset(x, v)
    }

    /// The generic QP for parameter `θ = (x, v)`.
    pub fn instance(&self, x: &DVector<T>, v: &DVector<T>) -> QpProblem<T> {
        QpProblem::trusted(self.h.clone(), self.linear_cost(x, v), self.m.clone(), self.offset(x, v))
    }
}

/// Stacked predictions `ξ = S_x x + S_u μ` for stages `0..=N`.
pub fn prediction_matrices<T: Real>(
    model: &PlantModel<T>,
    horizon: usize,
) -> (DMatrix<T>, DMatrix<T>) {
    let (n, nu) = (model.n(), model.n_u());
    let mut s_x = DMatrix::zeros((horizon + 1) * n, n);
    let mut s_u = DMatrix::zeros((horizon + 1) * n, horizon * nu);
    let mut power = DMatrix::identity(n, n);
    for i in 0..=horizon {
        s_x.view_mut((i * n, 0), (n, n)).copy_from(&power);
        power = &model.a * power;
    }
    for i in 1..=horizon {
        // ξ_i = A ξ_{i−1} + B μ_{i−1}
        let prev = s_u.view(((i - 1) * n, 0), (n, horizon * nu)).into_owned();
        let mut block = &model.a * prev;
        let mut b_block = block.view_mut((0, (i - 1) * nu), (n, nu));
        b_block += &model.b;
        s_u.view_mut((i * n, 0), (n, horizon * nu)).copy_from(&block);
    }
    (s_x, s_u)
}

pub fn condense<T: Real>(
    model: &PlantModel<T>,
    design: &TrackingDesign<T>,
    eq_map: &EquilibriumMap<T>,
    constraints: &ConstraintPolyhedron<T>,
    terminal: &TerminalSet<T>,
) -> Result<CondensedQp<T>> {
    let (n, nu, nv) = (model.n(), model.n_u(), eq_map.n_v());
    let horizon = design.horizon;
    if constraints.dim() != model.n_y() {
        return Err(Error::Dimension("constraint set does not match n_y".into()));
    }
    if terminal.h_t.ncols() != n + nv {
        return Err(Error::Dimension("terminal set does not match n + n_v".into()));
    }
    let (s_x, s_u) = prediction_matrices(model, horizon);
    let p_vars = horizon * nu;

    let mut q_bar = DMatrix::zeros((horizon + 1) * n, (horizon + 1) * n);
    for i in 0..horizon {
        q_bar.view_mut((i * n, i * n), (n, n)).copy_from(&design.q);
    }
    q_bar.view_mut((horizon * n, horizon * n), (n, n)).copy_from(&design.p);
    let r_bar = linalg::block_diag_repeat(&design.r, horizon);
    let mut gamma_x = DMatrix::zeros((horizon + 1) * n, nv);
    for i in 0..=horizon {
        gamma_x.view_mut((i * n, 0), (n, nv)).copy_from(&eq_map.g_x);
    }
    let mut gamma_u = DMatrix::zeros(p_vars, nv);
    for i in 0..horizon {
        gamma_u.view_mut((i * nu, 0), (nu, nv)).copy_from(&eq_map.g_u);
    }
    let two = T::lit(2.0);
    let su_q = s_u.transpose() * &q_bar;
    let h = (&su_q * &s_u + &r_bar) * two;
    let h = (&h + h.transpose()) * T::lit(0.5);
    let w_x = &su_q * &s_x * two;
    let w_v = -(&su_q * &gamma_x + &r_bar * &gamma_u) * two;

    // Collect all rows as (M row, L_x row, L_v row, b, tag).
    let mut rows: Vec<(DVector<T>, DVector<T>, DVector<T>, T, RowTag)> = Vec::new();
    let yc = &constraints.y * &model.c;
    let yd = &constraints.y * &model.d;
    for stage in 0..horizon {
        let sx_i = s_x.view((stage * n, 0), (n, n));
        let su_i = s_u.view((stage * n, 0), (n, p_vars));
        let mut m_rows = &yc * su_i;
        let mut input_block = m_rows.view_mut((0, stage * nu), (constraints.rows(), nu));
        input_block += &yd;
        let lx_rows = &yc * sx_i;
        for r in 0..constraints.rows() {
            rows.push((
                -m_rows.row(r).transpose(),
                -lx_rows.row(r).transpose(),
                DVector::zeros(nv),
                constraints.h[r],
                RowTag::Stage { stage, row: r },
            ));
        }
    }
    let ht_x = terminal.h_t.view((0, 0), (terminal.rows(), n));
    let ht_v = terminal.h_t.view((0, n), (terminal.rows(), nv));
    let m_term = ht_x * s_u.view((horizon * n, 0), (n, p_vars));
    let lx_term = ht_x * s_x.view((horizon * n, 0), (n, n));
    for r in 0..terminal.rows() {
        rows.push((
            -m_term.row(r).transpose(),
            -lx_term.row(r).transpose(),
            -ht_v.row(r).transpose(),
            terminal.h_offsets[r],
            RowTag::Terminal { row: r },
        ));
    }

    let (decision, parameter): (Vec<_>, Vec<_>) =
        rows.into_iter().partition(|r| r.0.iter().any(|&x| x != T::zero()));
    let pack = |rows: &[(DVector<T>, DVector<T>, DVector<T>, T, RowTag)]| {
        let count = rows.len();
        let mut m = DMatrix::zeros(count, p_vars);
        let mut l_x = DMatrix::zeros(count, n);
        let mut l_v = DMatrix::zeros(count, nv);
        let mut b = DVector::zeros(count);
        let mut layout = Vec::with_capacity(count);
        for (i, (mr, lxr, lvr, bi, tag)) in rows.iter().enumerate() {
            m.set_row(i, &mr.transpose());
            l_x.set_row(i, &lxr.transpose());
            l_v.set_row(i, &lvr.transpose());
            b[i] = *bi;
            layout.push(*tag);
        }
        (m, l_x, l_v, b, layout)
    };
    let (m, l_x, l_v, b, row_layout) = pack(&decision);
    let (pl_x, pl_v, p_b, p_layout) = {
        let (_, a, c, d, e) = pack(&parameter);
        (a, c, d, e)
    };

    if h.clone().cholesky().is_none() {
        return Err(Error::Factorization("condensed H"));
    }
    Ok(CondensedQp {
        h,
        w_x,
        w_v,
        m,
        l_x,
        l_v,
        b,
        row_layout,
        parameter_rows: ParameterRows { l_x: pl_x, l_v: pl_v, b: p_b, layout: p_layout },
    })
}
