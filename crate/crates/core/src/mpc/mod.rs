//! Tracking MPC construction: plant, equilibria, LQR terminal ingredients,
//! maximal admissible terminal set and the condensed parametric QP.

mod condense;
mod design;
mod equilibrium;
mod model;
mod terminal;

pub use condense::{condense, prediction_matrices, CondensedQp, ParameterRows, RowTag};
pub use design::{dare_residual, solve_dare, TrackingDesign, DARE_MAX_ITERS};
pub use equilibrium::{
    equilibrium_basis, equilibrium_matrix, reference_admissible, EquilibriumMap, REFERENCE_MARGIN,
};
pub use model::{discretize, expm, ConstraintPolyhedron, PlantModel};
pub use terminal::{max_admissible_set, AugmentedLoop, TerminalSet, TerminalSetOptions};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::qp::{longstep, QpProblem};
use crate::scalar::Real;

/// Everything needed to pose and warm-start the MPC problem at runtime.
#[derive(Debug, Clone)]
pub struct MpcProblem<T: Real> {
    pub model: PlantModel<T>,
    pub constraints: ConstraintPolyhedron<T>,
    pub design: TrackingDesign<T>,
    pub eq_map: EquilibriumMap<T>,
    pub terminal: TerminalSet<T>,
    pub qp: CondensedQp<T>,
    pub terminal_options: TerminalSetOptions,
}

impl<T: Real> MpcProblem<T> {
    pub fn build(
        model: PlantModel<T>,
        constraints: ConstraintPolyhedron<T>,
        horizon: usize,
        q: DMatrix<T>,
        r: DMatrix<T>,
        terminal_options: TerminalSetOptions,
    ) -> Result<Self> {
        if constraints.dim() != model.n_y() {
            return Err(Error::Dimension(format!(
                "constraint set acts on {} outputs, model has {}",
                constraints.dim(),
                model.n_y()
            )));
        }
        let eq_map = equilibrium_basis(&model)?;
        let design = TrackingDesign::new(&model, horizon, q, r)?;
        let terminal = max_admissible_set(&model, &design, &eq_map, &constraints, &terminal_options)?;
        let qp = condense(&model, &design, &eq_map, &constraints, &terminal)?;
        Ok(Self { model, constraints, design, eq_map, terminal, qp, terminal_options })
    }

    pub fn horizon(&self) -> usize {
        self.design.horizon
    }

    /// `(ū_v, …, ū_v)`.
    pub fn equilibrium_inputs(&self, v: &DVector<T>) -> DVector<T> {
        let u = self.eq_map.input(v);
        let nu = u.len();
        DVector::from_fn(self.horizon() * nu, |i, _| u[i % nu])
    }

    /// Predicted states `ξ_0 = x, …, ξ_N` under `μ`.
    pub fn predict(&self, x: &DVector<T>, mu: &DVector<T>) -> Vec<DVector<T>> {
        let nu = self.model.n_u();
        let mut states = Vec::with_capacity(self.horizon() + 1);
        states.push(x.clone());
        for i in 0..self.horizon() {
            let next = self.model.step(&states[i], &mu.rows(i * nu, nu).into_owned());
            states.push(next);
        }
        states
    }

    /// `‖ξ_N − x̄_v‖²_P + Σ ‖ξ_i − x̄_v‖²_Q + ‖μ_i − ū_v‖²_R`, evaluated on the
    /// predicted trajectory in deviation coordinates.
    pub fn tracking_cost(&self, x: &DVector<T>, v: &DVector<T>, mu: &DVector<T>) -> T {
        let nu = self.model.n_u();
        let xbar = self.eq_map.state(v);
        let ubar = self.eq_map.input(v);
        let states = self.predict(x, mu);
        let mut cost = T::zero();
        for i in 0..self.horizon() {
            let dx = &states[i] - &xbar;
            let du = mu.rows(i * nu, nu) - &ubar;
            cost += dx.dot(&(&self.design.q * &dx)) + du.dot(&(&self.design.r * &du));
        }
        let dx = &states[self.horizon()] - &xbar;
        cost + dx.dot(&(&self.design.p * &dx))
    }

    /// Feasibility of `(x, v)` for the parameter-only rows.
    pub fn parameter_margin(&self, x: &DVector<T>, v: &DVector<T>) -> T {
        self.qp
            .parameter_rows
            .slack(x, v)
            .iter()
            .fold(T::max_value().unwrap(), |a, &s| a.min(s))
    }

    /// Phase-I check: minimizes a uniform slack shift `t` with
    /// `Mμ + Lθ + b + t·1 ≥ 0`, `t ≥ −1`. Returns a strictly feasible `μ` when
    /// the optimum is negative and the parameter-only rows hold.
    pub fn phase_one(&self, x: &DVector<T>, v: &DVector<T>) -> Result<Option<DVector<T>>> {
        if self.parameter_margin(x, v) < T::zero() {
            return Ok(None);
        }
        let p = self.qp.num_vars();
        let m = self.qp.num_rows();
        let ridge = T::lit(1e-8);
        let h = DMatrix::identity(p + 1, p + 1) * ridge;
        let mut c = DVector::zeros(p + 1);
        c[p] = T::one();
        let mut a = DMatrix::zeros(m + 1, p + 1);
        a.view_mut((0, 0), (m, p)).copy_from(&self.qp.m);
        a.view_mut((0, p), (m, 1)).fill(T::one());
        a[(m, p)] = T::one();
        let mut b = DVector::zeros(m + 1);
        b.rows_mut(0, m).copy_from(&self.qp.offset(x, v));
        b[m] = T::one();
        let qp = QpProblem::new(h, c, a, b)?;
        let report = longstep(&qp, &DVector::zeros(m + 1), T::lit(1e2), T::lit(1e-12), 500)?;
        let mu = report.z.rows(0, p).into_owned();
        let strictly = self.qp.slack(&mu, x, v).iter().all(|&s| s > T::zero());
        Ok(strictly.then_some(mu))
    }
}
