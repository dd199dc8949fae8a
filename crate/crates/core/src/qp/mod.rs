//! Log-domain interior-point method for convex quadratic programs.
//!
//! Dual and slack are parameterized as `λ = √η e^γ`, `s = √η e^{-γ}`, so the
//! solver state is just `(γ, η)`. Newton directions come from one symmetric
//! positive-definite solve per iterate.

mod longstep;
mod newton;
mod problem;

pub use longstep::{longstep, SolveReport, SolveStatus, DEFAULT_MAX_ITERS};
pub use newton::{
    clamp_gamma, eta_line_coefficients, eta_star, newton_direction, recover_duals, EtaLine,
    EtaStar, LdipmIterate, NewtonResult, NewtonSystem, GAMMA_MAX,
};
pub use problem::QpProblem;
