//! Lane-change demo on a linear bicycle model.
//!
//! Only the longitudinal speed `U_x = 10` m/s and the controller tuning
//! (`T = 0.1`, `N = 10`, `Q = diag(1, 1, 10)`, `R = 1`, `c = 1`,
//! `η ∈ [1e-10, 1e-2]`, the constraint boxes) are fixed by the experiment
//! being reproduced. The vehicle parameters below are a representative
//! mid-size sedan chosen for this demo.

use nalgebra::{DMatrix, DVector};

use super::config::{ReferenceChange, ScenarioConfig};
use crate::mpc::{ConstraintPolyhedron, PlantModel};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BicycleParams {
    /// Longitudinal speed, m/s.
    pub ux: f64,
    /// Mass, kg.
    pub mass: f64,
    /// Yaw inertia, kg m².
    pub izz: f64,
    /// Front / rear axle to CG distance, m.
    pub a: f64,
    pub b: f64,
    /// Front / rear cornering stiffness, N/rad.
    pub caf: f64,
    pub car: f64,
}

impl Default for BicycleParams {
    fn default() -> Self {
        Self { ux: 10.0, mass: 1724.0, izz: 1300.0, a: 1.35, b: 1.15, caf: 160_000.0, car: 180_000.0 }
    }
}

impl BicycleParams {
    /// Continuous-time `(A_c, B_c)` for the state `(β, r, y)` and steering input `δ`.
    pub fn continuous<T: Real>(&self) -> (DMatrix<T>, DMatrix<T>) {
        let Self { ux, mass, izz, a, b, caf, car } = *self;
        let ac = [
            -(caf + car) / (mass * ux),
            -(a * caf - b * car) / (mass * ux * ux) - 1.0,
            0.0,
            -(a * caf - b * car) / izz,
            -(a * a * caf + b * b * car) / (izz * ux),
            0.0,
            ux,
            0.0,
            0.0,
        ];
        let bc = [caf / (mass * ux), a * caf / izz, 0.0];
        (
            DMatrix::from_row_slice(3, 3, &ac.map(T::lit)),
            DMatrix::from_row_slice(3, 1, &bc.map(T::lit)),
        )
    }
}

/// Lane change to `y = 3` at `t = 0` and back to `y = 0` at `t = 10`,
/// 20 s total.
pub fn bicycle_scenario<T: Real>() -> ScenarioConfig<T> {
    let (ac, bc) = BicycleParams::default().continuous::<T>();
    // y = (β, r, y, δ), z = lateral position.
    let mut c = DMatrix::zeros(4, 3);
    c.view_mut((0, 0), (3, 3)).copy_from(&DMatrix::identity(3, 3));
    let mut d = DMatrix::zeros(4, 1);
    d[(3, 0)] = T::one();
    let e = DMatrix::from_row_slice(1, 3, &[T::zero(), T::zero(), T::one()]);
    let plant = PlantModel::new(ac, bc, c, d, e, DMatrix::zeros(1, 1)).expect("consistent dimensions");
    let constraints = ConstraintPolyhedron::symmetric_box(&[0.2, 4.0, 4.0, 1.0].map(T::lit))
        .expect("bounded box");
    let q = DMatrix::from_diagonal(&DVector::from_vec(vec![T::one(), T::one(), T::lit(10.0)]));
    let mut cfg = ScenarioConfig::new(
        plant,
        T::lit(0.1),
        10,
        q,
        DMatrix::identity(1, 1),
        constraints,
        DVector::zeros(1),
        200,
    );
    cfg.continuous = true;
    cfg.eta_f.cap = T::lit(1e-11);
    cfg.schedule = vec![
        ReferenceChange { time: T::zero(), r: DVector::from_element(1, T::lit(3.0)) },
        ReferenceChange { time: T::lit(10.0), r: DVector::zeros(1) },
    ];
    cfg
}
