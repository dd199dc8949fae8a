//! Warm start from the previous timestep: shift the input sequence by one
//! stage, close it with the LQR law, and map its slack into the log domain.

use nalgebra::DVector;

use crate::mpc::MpcProblem;
use crate::scalar::Real;

/// Default floor on `s̄/√η` inside the log.
pub const DEFAULT_EPS_S: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct WarmStart<T: Real> {
    pub mu_bar: DVector<T>,
    pub s_bar: DVector<T>,
    pub gamma_bar: DVector<T>,
    pub eta_prev: T,
}

/// `(μ₁, …, μ_{N−1}, ū_v − K(ξ_N − x̄_v))`, with `ξ_N` obtained by rolling
/// the model forward from `x_prev` under `mu_prev`.
pub fn shift_primal<T: Real>(
    mu_prev: &DVector<T>,
    x_prev: &DVector<T>,
    v: &DVector<T>,
    problem: &MpcProblem<T>,
) -> DVector<T> {
    let nu = problem.model.n_u();
    let horizon = problem.horizon();
    let xi_n = problem
        .predict(x_prev, mu_prev)
        .pop()
        .expect("prediction has N + 1 states");
    let tail = problem.eq_map.input(v) - &problem.design.k * (xi_n - problem.eq_map.state(v));
    let mut mu_bar = DVector::zeros(horizon * nu);
    if horizon > 1 {
        mu_bar
            .rows_mut(0, (horizon - 1) * nu)
            .copy_from(&mu_prev.rows(nu, (horizon - 1) * nu));
    }
    mu_bar.rows_mut((horizon - 1) * nu, nu).copy_from(&tail);
    mu_bar
}

/// `γ̄ = −log(max(s̄/√η_prev, ε_s))`, elementwise.
pub fn warm_gamma<T: Real>(s_bar: &DVector<T>, eta_prev: T, eps_s: T) -> DVector<T> {
    let scale = eta_prev.sqrt();
    s_bar.map(|s| -(s / scale).max(eps_s).ln())
}

/// Full warm start at the new parameter `(x, v)`.
pub fn warm_start<T: Real>(
    problem: &MpcProblem<T>,
    mu_prev: &DVector<T>,
    x_prev: &DVector<T>,
    x: &DVector<T>,
    v: &DVector<T>,
    eta_prev: T,
    eps_s: T,
) -> WarmStart<T> {
    let mu_bar = shift_primal(mu_prev, x_prev, v, problem);
    let s_bar = problem.qp.slack(&mu_bar, x, v);
    let gamma_bar = warm_gamma(&s_bar, eta_prev, eps_s);
    WarmStart { mu_bar, s_bar, gamma_bar, eta_prev }
}
