use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::governor::GovernorConfig;
use crate::mpc::{ConstraintPolyhedron, PlantModel, TerminalSetOptions};
use crate::qp::DEFAULT_MAX_ITERS;
use crate::scalar::Real;
use crate::warmstart::DEFAULT_EPS_S;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Warm start, governor, longstep.
    Governed,
    /// Reference applied in full; warm start and η* start only.
    Ungoverned,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Governed => "governed",
            Mode::Ungoverned => "ungoverned",
        }
    }
}

/// `η_f = clamp(σ ‖x − G_x v‖²_Q / m, floor, cap)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EtaFPolicy<T> {
    pub sigma: T,
    pub floor: T,
    pub cap: T,
}

impl<T: Real> Default for EtaFPolicy<T> {
    fn default() -> Self {
        Self { sigma: T::lit(0.5), floor: T::lit(1e-12), cap: T::lit(1e-6) }
    }
}

impl<T: Real> EtaFPolicy<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > T::zero() && self.sigma < T::one()) {
            return Err(Error::Scenario("eta_f sigma must lie in (0, 1)".into()));
        }
        if !(self.floor > T::zero() && self.floor < self.cap) {
            return Err(Error::Scenario("eta_f needs 0 < floor < cap".into()));
        }
        Ok(())
    }
}

/// Piecewise-constant target: `r` applies from `time` (seconds) onwards.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceChange<T: Real> {
    pub time: T,
    pub r: DVector<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig<T: Real> {
    /// Plant. When `continuous` is set, `a`/`b` hold `(A_c, B_c)` and are
    /// discretized with zero-order hold at `period`.
    pub plant: PlantModel<T>,
    pub continuous: bool,
    pub period: T,
    pub horizon: usize,
    pub q: DMatrix<T>,
    pub r_weight: DMatrix<T>,
    pub constraints: ConstraintPolyhedron<T>,
    pub governor: GovernorConfig<T>,
    pub schedule: Vec<ReferenceChange<T>>,
    pub v0: DVector<T>,
    /// Defaults to the equilibrium `G_x v0`.
    pub x0: Option<DVector<T>>,
    pub steps: usize,
    pub eta_f: EtaFPolicy<T>,
    pub mode: Mode,
    pub eps_s: T,
    pub max_iters: usize,
    pub terminal: TerminalSetOptions,
    /// Accept a non-equilibrium `x0` after a Phase-I feasibility solve.
    pub phase1_check: bool,
    /// `η` attributed to the virtual solve preceding step 0. When unset, the
    /// truncation tolerance at `(x0, v0)`, i.e. the η_f floor for an equilibrium start.
    pub initial_eta: Option<T>,
}

impl<T: Real> ScenarioConfig<T> {
    /// Minimal configuration with defaults for every tuning knob.
    pub fn new(
        plant: PlantModel<T>,
        period: T,
        horizon: usize,
        q: DMatrix<T>,
        r_weight: DMatrix<T>,
        constraints: ConstraintPolyhedron<T>,
        v0: DVector<T>,
        steps: usize,
    ) -> Self {
        Self {
            plant,
            continuous: false,
            period,
            horizon,
            q,
            r_weight,
            constraints,
            governor: GovernorConfig::default(),
            schedule: Vec::new(),
            v0,
            x0: None,
            steps,
            eta_f: EtaFPolicy::default(),
            mode: Mode::Governed,
            eps_s: T::lit(DEFAULT_EPS_S),
            max_iters: DEFAULT_MAX_ITERS,
            terminal: TerminalSetOptions::default(),
            phase1_check: false,
            initial_eta: None,
        }
    }

    /// Target in force at step `k` (`v0` before the first change).
    pub fn reference_at(&self, k: usize) -> DVector<T> {
        let t = self.period * T::from_usize(k).unwrap();
        let half = self.period * T::lit(0.5);
        self.schedule
            .iter()
            .filter(|c| c.time <= t + half)
            .last()
            .map(|c| c.r.clone())
            .unwrap_or_else(|| self.v0.clone())
    }

    pub fn validate(&self) -> Result<()> {
        self.governor.validate()?;
        self.eta_f.validate()?;
        if !(self.period > T::zero()) {
            return Err(Error::Scenario("sample period must be positive".into()));
        }
        if self.steps == 0 {
            return Err(Error::Scenario("steps must be positive".into()));
        }
        if !(self.eps_s > T::zero()) || self.initial_eta.is_some_and(|e| !(e > T::zero())) {
            return Err(Error::Scenario("eps_s and initial_eta must be positive".into()));
        }
        let nz = self.plant.n_z();
        if self.v0.len() != nz {
            return Err(Error::Dimension(format!("v0 has {} entries, expected {nz}", self.v0.len())));
        }
        for (i, c) in self.schedule.iter().enumerate() {
            if c.r.len() != nz {
                return Err(Error::Dimension(format!("schedule[{i}].r has {} entries, expected {nz}", c.r.len())));
            }
            if i > 0 && !(c.time >= self.schedule[i - 1].time) {
                return Err(Error::Scenario("schedule times must be nondecreasing".into()));
            }
        }
        if let Some(x0) = &self.x0 {
            if x0.len() != self.plant.n() {
                return Err(Error::Dimension("x0 does not match the state dimension".into()));
            }
        }
        Ok(())
    }
}
