//! Closed-loop simulation of warm start → governor → longstep, and the
//! benchmark harness comparing governed and ungoverned runs.

mod config;
pub mod demo;

pub use config::{EtaFPolicy, Mode, ReferenceChange, ScenarioConfig};

use std::time::Instant;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::governor::govern;
use crate::mpc::{discretize, reference_admissible, EquilibriumMap, MpcProblem, PlantModel};
use crate::qp::{longstep, EtaLine, NewtonSystem, SolveStatus};
use crate::scalar::Real;
use crate::warmstart::warm_start;

/// Tracking error below which a step counts as settled.
pub const SETTLE_TOL: f64 = 1e-3;

/// Truncation tolerance from the stability bound `m η_f < ‖x − x̄_v‖²_Q`,
/// scaled by `σ` and clamped to `[floor, cap]`.
pub fn eta_f_rule<T: Real>(
    x: &DVector<T>,
    v: &DVector<T>,
    m: usize,
    q: &DMatrix<T>,
    eq_map: &EquilibriumMap<T>,
    policy: &EtaFPolicy<T>,
) -> T {
    let dx = x - eq_map.state(v);
    let dist = dx.dot(&(q * &dx));
    let raw = policy.sigma * dist / T::from_usize(m.max(1)).unwrap();
    raw.max(policy.floor).min(policy.cap)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepLog<T: Real> {
    pub k: usize,
    pub t: T,
    pub x: DVector<T>,
    pub u: DVector<T>,
    pub z: DVector<T>,
    pub v: DVector<T>,
    pub kappa: T,
    pub eta_start: T,
    pub eta_end: T,
    pub eta_f: T,
    pub iterations: usize,
    pub fallback: bool,
    /// Smallest slack over every constraint row at the returned solution.
    pub constraint_margin: T,
    /// Solver time for this step in seconds (warm start, governor or η*, longstep).
    pub wall_time: f64,
    /// Tracking cost of the returned input sequence.
    pub cost: T,
    /// Smallest entry of the warm-start slack `s̄`.
    pub warm_margin: T,
    pub status: SolveStatus,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub steps: usize,
    pub max_iterations: usize,
    pub mean_iterations: f64,
    /// First step after which `‖z − r‖ ≤ SETTLE_TOL` holds for the rest of the run.
    pub settle_step: Option<usize>,
    pub worst_wall_time: f64,
}

impl Summary {
    pub fn from_steps<T: Real>(steps: &[StepLog<T>], targets: &[DVector<T>]) -> Self {
        let max_iterations = steps.iter().map(|s| s.iterations).max().unwrap_or(0);
        let total: usize = steps.iter().map(|s| s.iterations).sum();
        let mean_iterations = if steps.is_empty() { 0.0 } else { total as f64 / steps.len() as f64 };
        let mut settle_step = None;
        for (s, r) in steps.iter().zip(targets).rev() {
            if (&s.z - r).norm().to_f64_lossy() <= SETTLE_TOL {
                settle_step = Some(s.k);
            } else {
                break;
            }
        }
        let worst_wall_time = steps.iter().map(|s| s.wall_time).fold(0.0, f64::max);
        Self { steps: steps.len(), max_iterations, mean_iterations, settle_step, worst_wall_time }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationLog<T: Real> {
    pub mode: Mode,
    pub steps: Vec<StepLog<T>>,
    /// Target `r` in force at each step.
    pub targets: Vec<DVector<T>>,
    pub summary: Summary,
}

/// Controller memory carried from one step to the next.
#[derive(Debug, Clone)]
pub struct LoopState<T: Real> {
    pub k: usize,
    pub x: DVector<T>,
    pub v: DVector<T>,
    pub mu_prev: DVector<T>,
    pub x_prev: DVector<T>,
    pub eta_prev: T,
    /// Set for a non-equilibrium start: the first solve is cold.
    pub cold: bool,
}

/// Immutable controller data shared by every step.
#[derive(Debug, Clone)]
pub struct Controller<T: Real> {
    pub problem: MpcProblem<T>,
    pub cfg: ScenarioConfig<T>,
}

impl<T: Real> Controller<T> {
    pub fn new(cfg: ScenarioConfig<T>) -> Result<Self> {
        cfg.validate()?;
        let plant = if cfg.continuous {
            let (a, b) = discretize(&cfg.plant.a, &cfg.plant.b, cfg.period)?;
            PlantModel::new(a, b, cfg.plant.c.clone(), cfg.plant.d.clone(), cfg.plant.e.clone(), cfg.plant.f.clone())?
        } else {
            cfg.plant.clone()
        };
        let problem = MpcProblem::build(
            plant,
            cfg.constraints.clone(),
            cfg.horizon,
            cfg.q.clone(),
            cfg.r_weight.clone(),
            cfg.terminal,
        )?;
        let controller = Self { problem, cfg };
        controller.check_references()?;
        Ok(controller)
    }

    fn check_references(&self) -> Result<()> {
        let eq = &self.problem.eq_map;
        let set = &self.problem.constraints;
        let mut refs = vec![("v0".to_string(), self.cfg.v0.clone())];
        for (i, c) in self.cfg.schedule.iter().enumerate() {
            refs.push((format!("schedule[{i}]"), c.r.clone()));
        }
        // The terminal set only admits references inside the tightened steady-state set.
        let tighten = T::one() - T::lit(self.cfg.terminal.epsilon);
        for (name, r) in refs {
            let tight = (&set.h * tighten - &set.y * (&eq.g_y * &r)).iter().all(|&s| s > T::zero());
            if !reference_admissible(&r, eq, set) || !tight {
                return Err(Error::Scenario(format!(
                    "{name} is not a strictly admissible reference (steady-state output violates the constraints)"
                )));
            }
        }
        Ok(())
    }

    /// State before step 0. Equilibrium starts are warm; any other `x0` needs
    /// a passing Phase-I check and is started cold.
    pub fn initial_state(&self) -> Result<LoopState<T>> {
        let v0 = self.cfg.v0.clone();
        let x_eq = self.problem.eq_map.state(&v0);
        let x0 = self.cfg.x0.clone().unwrap_or_else(|| x_eq.clone());
        let at_equilibrium = (&x0 - &x_eq).amax() <= T::attainable(1e-12) * (T::one() + x_eq.amax());
        let mu_eq = self.problem.equilibrium_inputs(&v0);
        if at_equilibrium {
            let eta_prev = self.cfg.initial_eta.unwrap_or_else(|| {
                let m = self.problem.qp.num_rows();
                eta_f_rule(&x0, &v0, m, &self.problem.design.q, &self.problem.eq_map, &self.cfg.eta_f)
            });
            return Ok(LoopState {
                k: 0,
                x: x0.clone(),
                v: v0,
                mu_prev: mu_eq,
                x_prev: x0,
                eta_prev,
                cold: false,
            });
        }
        if !self.cfg.phase1_check {
            return Err(Error::InfeasibleInitialState(
                "x0 is not the equilibrium of v0; enable the Phase-I check".into(),
            ));
        }
        match self.problem.phase_one(&x0, &v0)? {
            Some(mu) => Ok(LoopState {
                k: 0,
                x: x0.clone(),
                v: v0,
                mu_prev: mu,
                x_prev: x0,
                eta_prev: self.cfg.governor.eta_bar,
                cold: true,
            }),
            None => Err(Error::InfeasibleInitialState("Phase-I found no feasible input sequence".into())),
        }
    }

    /// One closed-loop step with target `r`.
    pub fn step(&self, state: &LoopState<T>, r: &DVector<T>) -> Result<(LoopState<T>, StepLog<T>)> {
        let cfg = &self.cfg;
        let qp = &self.problem.qp;
        let m = qp.num_rows();
        let x = &state.x;
        let started = Instant::now();

        let ws = warm_start(&self.problem, &state.mu_prev, &state.x_prev, x, &state.v, state.eta_prev, cfg.eps_s);
        let warm_margin = ws.s_bar.iter().fold(T::max_value().unwrap(), |a, &s| a.min(s));
        let (gamma0, eta_start, kappa, v, fallback) = if state.cold {
            (DVector::zeros(m), cfg.governor.eta_bar, T::zero(), state.v.clone(), false)
        } else {
            match cfg.mode {
                Mode::Governed => {
                    let g = govern(&ws.gamma_bar, qp, x, &state.v, r, &cfg.governor, state.k as u64)?;
                    (ws.gamma_bar, g.eta, g.kappa, g.v, g.fallback)
                }
                Mode::Ungoverned => {
                    let inst = qp.instance(x, r);
                    let line: EtaLine<T> =
                        NewtonSystem::factor(inst.a(), inst.h(), &ws.gamma_bar)?.eta_line(inst.a(), inst.c(), inst.b())?;
                    let eta_f = eta_f_rule(x, r, m, &self.problem.design.q, &self.problem.eq_map, &cfg.eta_f);
                    let eta0 = line.admissible_eta_near(eta_f).map_or(cfg.governor.eta_bar, |e| e.min(cfg.governor.eta_bar));
                    (ws.gamma_bar, eta0, T::one(), r.clone(), false)
                }
            }
        };
        let eta_f = eta_f_rule(x, &v, m, &self.problem.design.q, &self.problem.eq_map, &cfg.eta_f);
        let inst = qp.instance(x, &v);
        let report = longstep(&inst, &gamma0, eta_start, eta_f, cfg.max_iters)?;
        let wall_time = started.elapsed().as_secs_f64();

        let mu = report.z;
        let nu = self.problem.model.n_u();
        let u = mu.rows(0, nu).into_owned();
        let slack_margin = qp.slack(&mu, x, &v).iter().fold(T::max_value().unwrap(), |a, &s| a.min(s));
        let constraint_margin = slack_margin.min(self.problem.parameter_margin(x, &v));
        let cost = self.problem.tracking_cost(x, &v, &mu);
        let model = &self.problem.model;
        let log = StepLog {
            k: state.k,
            t: cfg.period * T::from_usize(state.k).unwrap(),
            x: x.clone(),
            u: u.clone(),
            z: model.tracking_output(x, &u),
            v: v.clone(),
            kappa,
            eta_start,
            eta_end: report.eta,
            eta_f,
            iterations: report.iterations,
            fallback,
            constraint_margin,
            wall_time,
            cost,
            warm_margin,
            status: report.status,
        };
        let next = LoopState {
            k: state.k + 1,
            x: model.step(x, &u),
            v,
            mu_prev: mu,
            x_prev: x.clone(),
            eta_prev: report.eta,
            cold: false,
        };
        Ok((next, log))
    }

    pub fn run(&self) -> Result<SimulationLog<T>> {
        let mut state = self.initial_state()?;
        let mut steps = Vec::with_capacity(self.cfg.steps);
        let mut targets = Vec::with_capacity(self.cfg.steps);
        for k in 0..self.cfg.steps {
            let r = self.cfg.reference_at(k);
            let (next, log) = self.step(&state, &r)?;
            steps.push(log);
            targets.push(r);
            state = next;
        }
        let summary = Summary::from_steps(&steps, &targets);
        Ok(SimulationLog { mode: self.cfg.mode, steps, targets, summary })
    }
}

/// Builds the controller for `cfg` and simulates `cfg.steps` steps.
pub fn run_scenario<T: Real>(cfg: &ScenarioConfig<T>) -> Result<SimulationLog<T>> {
    Controller::new(cfg.clone())?.run()
}

/// Mean and sample standard deviation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
}

impl Stat {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        if values.is_empty() {
            return Self { mean: 0.0, std: 0.0 };
        }
        let mean = values.iter().sum::<f64>() / n;
        let var = if values.len() > 1 {
            values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Self { mean, std: var.sqrt() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModeBenchmark<T: Real> {
    pub mode: Mode,
    pub trials: usize,
    /// Per-trial worst per-step solver time, seconds.
    pub worst_time: Stat,
    pub max_iterations: Stat,
    pub mean_iterations: Stat,
    /// Log of the last trial.
    pub last: SimulationLog<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkSummary<T: Real> {
    pub governed: ModeBenchmark<T>,
    pub ungoverned: ModeBenchmark<T>,
}

/// Repeats the scenario `trials` times in `mode` (controller construction is
/// excluded from timing) and aggregates per-trial worst-case step times.
pub fn benchmark_mode<T: Real>(cfg: &ScenarioConfig<T>, mode: Mode, trials: usize) -> Result<ModeBenchmark<T>> {
    if trials == 0 {
        return Err(Error::Scenario("trials must be at least 1".into()));
    }
    let controller = Controller::new(ScenarioConfig { mode, ..cfg.clone() })?;
    let mut worst = Vec::with_capacity(trials);
    let mut max_it = Vec::with_capacity(trials);
    let mut mean_it = Vec::with_capacity(trials);
    let mut last = None;
    for _ in 0..trials {
        let log = controller.run()?;
        worst.push(log.summary.worst_wall_time);
        max_it.push(log.summary.max_iterations as f64);
        mean_it.push(log.summary.mean_iterations);
        last = Some(log);
    }
    Ok(ModeBenchmark {
        mode,
        trials,
        worst_time: Stat::of(&worst),
        max_iterations: Stat::of(&max_it),
        mean_iterations: Stat::of(&mean_it),
        last: last.expect("trials >= 1"),
    })
}

/// [`benchmark_mode`] for both modes.
pub fn benchmark<T: Real>(cfg: &ScenarioConfig<T>, trials: usize) -> Result<BenchmarkSummary<T>> {
    Ok(BenchmarkSummary {
        governed: benchmark_mode(cfg, Mode::Governed, trials)?,
        ungoverned: benchmark_mode(cfg, Mode::Ungoverned, trials)?,
    })
}
