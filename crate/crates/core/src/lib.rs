//! Computationally governed tracking MPC.
//!
//! * [`qp`]: log-domain interior-point QP solver (Newton direction, η* search,
//!   longstep loop, primal-dual certificates).
//! * [`mpc`]: plant model, equilibrium map, Riccati design, maximal admissible
//!   terminal set, condensed parametric QP.
//! * [`warmstart`]: shifted primal candidate and log-domain warm start.
//! * [`governor`]: decomposition of the Newton step over `(η, κ)` and the
//!   two-dimensional LP that picks the reference step.
//! * [`simulate`]: closed-loop runs and the benchmark harness.
//!
//! Everything numerical is generic over [`Real`]; the `*64` aliases below are
//! the `f64` instantiations used by the command line tool.

pub mod error;
pub mod governor;
pub mod linalg;
pub mod mpc;
pub mod qp;
pub mod scalar;
pub mod simulate;
pub mod warmstart;

pub use error::{Error, Result};
pub use scalar::Real;

pub type QpProblem64 = qp::QpProblem<f64>;
pub type SolveReport64 = qp::SolveReport<f64>;
pub type PlantModel64 = mpc::PlantModel<f64>;
pub type ConstraintPolyhedron64 = mpc::ConstraintPolyhedron<f64>;
pub type CondensedQp64 = mpc::CondensedQp<f64>;
pub type GovernorConfig64 = governor::GovernorConfig<f64>;
pub type ScenarioConfig64 = simulate::ScenarioConfig<f64>;
pub type SimulationLog64 = simulate::SimulationLog<f64>;
