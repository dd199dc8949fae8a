use nalgebra::DVector;

use super::newton::{clamp_gamma, recover_duals, NewtonSystem};
use super::problem::QpProblem;
use crate::error::{Error, Result};
use crate::linalg;
use crate::scalar::Real;

/// Iteration cap applied when callers do not pass their own.
pub const DEFAULT_MAX_ITERS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Converged,
    IterationLimit,
}

#[derive(Debug, Clone)]
pub struct SolveReport<T: Real> {
    pub z: DVector<T>,
    pub gamma: DVector<T>,
    /// Final homotopy parameter.
    pub eta: T,
    pub s: DVector<T>,
    pub lambda: DVector<T>,
    /// Newton direction at the returned `(γ, η)`.
    pub d: DVector<T>,
    pub iterations: usize,
    /// `m η`: bound on the objective gap to the optimum when converged.
    pub suboptimality_bound: T,
    pub status: SolveStatus,
}

impl<T: Real> SolveReport<T> {
    pub fn d_inf_norm(&self) -> T {
        linalg::inf_norm(&self.d)
    }
}

/// Longstep path following.
///
/// Repeats, while `η > η_f` or `‖d(γ, η)‖∞ > 1`:
/// `η ← min(η, η*(γ))`, `α ← max(1, ‖d(γ, η)‖∞²)`, `γ ← γ + d/α`.
/// When `η*(γ) < η_f` and `η_f` is admissible for the current γ, the update
/// stops at `η_f` instead.
/// Each pass costs one factorization; `d` is affine in `1/√η` for a fixed γ,
/// so both the loop test and the update reuse it.
pub fn longstep<T: Real>(
    qp: &QpProblem<T>,
    gamma0: &DVector<T>,
    eta0: T,
    eta_f: T,
    max_iters: usize,
) -> Result<SolveReport<T>> {
    if !(eta0 > T::zero()) || !(eta_f > T::zero()) {
        return Err(Error::NonFinite("η0 and η_f must be positive"));
    }
    if gamma0.len() != qp.num_constraints() {
        return Err(Error::Dimension(format!(
            "γ0 has {} entries, QP has {} rows",
            gamma0.len(),
            qp.num_constraints()
        )));
    }
    let mut gamma = clamp_gamma(gamma0);
    let mut eta = eta0;
    let mut iterations = 0;
    let (line, d, status) = loop {
        let line = NewtonSystem::factor(qp.a(), qp.h(), &gamma)?.eta_line(qp.a(), qp.c(), qp.b())?;
        let d = line.direction(eta);
        if eta <= eta_f && linalg::inf_norm(&d) <= T::one() {
            break (line, d, SolveStatus::Converged);
        }
        if iterations >= max_iters {
            break (line, d, SolveStatus::IterationLimit);
        }
        // Never below η_f when η_f itself is admissible: the exit test only
        // needs η ≤ η_f, and driving η toward zero on rows with vanishing
        // duals pushes γ into the clamp.
        if let Some(next) = line.admissible_eta_near(eta_f) {
            eta = eta.min(next);
        }
        let d = line.direction(eta);
        let norm = linalg::inf_norm(&d);
        let alpha = T::one().max(norm * norm);
        gamma = clamp_gamma(&(gamma + d / alpha));
        iterations += 1;
    };
    let z = line.primal(eta);
    if z.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("primal solution"));
    }
    let (s, lambda) = recover_duals(&gamma, eta, &d);
    let m = T::from_usize(qp.num_constraints()).unwrap_or_else(T::zero);
    Ok(SolveReport {
        z,
        gamma,
        eta,
        s,
        lambda,
        d,
        iterations,
        suboptimality_bound: m * eta,
        status,
    })
}
