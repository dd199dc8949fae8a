//! JSON scenario files.
//!
//! Field names follow [`ScenarioConfig`]; matrices are row-major nested
//! arrays. Everything except the plant, weights, constraints, `period`,
//! `horizon`, `v0` and `steps` has a default.

use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use ldmpc::governor::GovernorConfig;
use ldmpc::mpc::{ConstraintPolyhedron, PlantModel, TerminalSetOptions};
use ldmpc::simulate::{Controller, EtaFPolicy, ReferenceChange, ScenarioConfig};
use ldmpc::ScenarioConfig64;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

pub type Rows = Vec<Vec<f64>>;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantFile {
    pub a: Rows,
    pub b: Rows,
    pub c: Rows,
    pub d: Rows,
    pub e: Rows,
    pub f: Rows,
}

/// Either `{ "y": [[..]], "h": [..] }` or `{ "box": [..] }` for `|y_i| ≤ box_i`.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<Rows>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<Vec<f64>>,
    #[serde(default, rename = "box", skip_serializing_if = "Option::is_none")]
    pub bounds: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GovernorFile {
    pub c: Option<f64>,
    pub eta_min: Option<f64>,
    pub eta_max: Option<f64>,
    pub eta_bar: Option<f64>,
    pub sample_etas: Option<(f64, f64)>,
    pub sample_kappas: Option<(f64, f64)>,
    pub margin: Option<f64>,
    pub rng_seed: Option<u64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EtaFFile {
    pub sigma: Option<f64>,
    pub floor: Option<f64>,
    pub cap: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TerminalFile {
    pub epsilon: Option<f64>,
    pub k_max: Option<usize>,
    pub ridge: Option<f64>,
    pub prune: Option<bool>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChangeFile {
    pub time: f64,
    pub r: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub plant: PlantFile,
    #[serde(default)]
    pub continuous: bool,
    pub period: f64,
    pub horizon: usize,
    pub q: Rows,
    pub r_weight: Rows,
    pub constraints: ConstraintFile,
    #[serde(default)]
    pub governor: GovernorFile,
    #[serde(default)]
    pub schedule: Vec<ChangeFile>,
    pub v0: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
    pub steps: usize,
    #[serde(default)]
    pub eta_f: EtaFFile,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iters: Option<usize>,
    #[serde(default)]
    pub terminal: TerminalFile,
    #[serde(default)]
    pub phase1_check: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_eta: Option<f64>,
}

fn matrix(name: &str, rows: &Rows) -> Result<DMatrix<f64>> {
    ensure!(!rows.is_empty(), "{name}: matrix has no rows");
    let cols = rows[0].len();
    ensure!(cols > 0, "{name}: row 0 is empty");
    for (i, row) in rows.iter().enumerate() {
        ensure!(row.len() == cols, "{name}: row {i} has {} entries, expected {cols}", row.len());
        if let Some(j) = row.iter().position(|x| !x.is_finite()) {
            bail!("{name}: entry ({i}, {j}) is not finite");
        }
    }
    Ok(DMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j]))
}

fn vector(name: &str, values: &[f64], len: usize) -> Result<DVector<f64>> {
    ensure!(values.len() == len, "{name}: has {} entries, expected {len}", values.len());
    if let Some(i) = values.iter().position(|x| !x.is_finite()) {
        bail!("{name}: entry {i} is not finite");
    }
    Ok(DVector::from_column_slice(values))
}

fn shape(name: &str, m: &DMatrix<f64>, rows: usize, cols: usize) -> Result<()> {
    ensure!(
        m.shape() == (rows, cols),
        "{name}: expected {rows}x{cols}, got {}x{}",
        m.nrows(),
        m.ncols()
    );
    Ok(())
}

fn positive_definite(name: &str, m: &DMatrix<f64>) -> Result<()> {
    let asym = (m - m.transpose()).amax();
    ensure!(asym <= 1e-12 * (1.0 + m.amax()), "{name}: not symmetric (max asymmetry {asym:e})");
    ensure!(m.clone().cholesky().is_some(), "{name}: weight must be symmetric positive definite");
    Ok(())
}

impl ScenarioFile {
    /// Structural checks with field-level messages, then conversion.
    pub fn to_config(&self) -> Result<ScenarioConfig64> {
        let p = &self.plant;
        let a = matrix("plant.a", &p.a)?;
        let n = a.nrows();
        shape("plant.a", &a, n, n)?;
        let b = matrix("plant.b", &p.b)?;
        let nu = b.ncols();
        shape("plant.b", &b, n, nu)?;
        let c = matrix("plant.c", &p.c)?;
        let ny = c.nrows();
        shape("plant.c", &c, ny, n)?;
        let d = matrix("plant.d", &p.d)?;
        shape("plant.d", &d, ny, nu)?;
        let e = matrix("plant.e", &p.e)?;
        let nz = e.nrows();
        shape("plant.e", &e, nz, n)?;
        let f = matrix("plant.f", &p.f)?;
        shape("plant.f", &f, nz, nu)?;
        let plant = PlantModel::new(a, b, c, d, e, f).context("plant")?;

        let q = matrix("q", &self.q)?;
        shape("q", &q, n, n)?;
        positive_definite("q", &q)?;
        let r_weight = matrix("r_weight", &self.r_weight)?;
        shape("r_weight", &r_weight, nu, nu)?;
        positive_definite("r_weight", &r_weight)?;

        let cs = &self.constraints;
        let constraints = match (&cs.y, &cs.h, &cs.bounds) {
            (Some(y), Some(h), None) => {
                let y = matrix("constraints.y", y)?;
                shape("constraints.y", &y, y.nrows(), ny)?;
                let h = vector("constraints.h", h, y.nrows())?;
                ConstraintPolyhedron::new(y, h).context("constraints")?
            }
            (None, None, Some(bounds)) => {
                vector("constraints.box", bounds, ny)?;
                if let Some(i) = bounds.iter().position(|&x| x <= 0.0) {
                    bail!("constraints.box: entry {i} must be positive");
                }
                ConstraintPolyhedron::symmetric_box(bounds).context("constraints")?
            }
            _ => bail!("constraints: give either both `y` and `h`, or `box`"),
        };

        let v0 = vector("v0", &self.v0, nz)?;
        let mut cfg = ScenarioConfig::new(plant, self.period, self.horizon, q, r_weight, constraints, v0, self.steps);
        cfg.continuous = self.continuous;
        ensure!(self.period > 0.0, "period: must be positive");
        ensure!(self.horizon >= 1, "horizon: must be at least 1");
        ensure!(self.steps >= 1, "steps: must be at least 1");

        let g = &self.governor;
        let dg = GovernorConfig::<f64>::default();
        cfg.governor = GovernorConfig {
            c: g.c.unwrap_or(dg.c),
            eta_min: g.eta_min.unwrap_or(dg.eta_min),
            eta_max: g.eta_max.unwrap_or(dg.eta_max),
            eta_bar: g.eta_bar.unwrap_or(dg.eta_bar),
            sample_etas: g.sample_etas.unwrap_or(dg.sample_etas),
            sample_kappas: g.sample_kappas.unwrap_or(dg.sample_kappas),
            margin: g.margin.unwrap_or(dg.margin),
            rng_seed: g.rng_seed.unwrap_or(dg.rng_seed),
        };
        cfg.governor.validate().context("governor")?;

        cfg.schedule = self
            .schedule
            .iter()
            .enumerate()
            .map(|(i, ch)| {
                ensure!(ch.time.is_finite(), "schedule[{i}].time: not finite");
                Ok(ReferenceChange { time: ch.time, r: vector(&format!("schedule[{i}].r"), &ch.r, nz)? })
            })
            .collect::<Result<_>>()?;
        cfg.x0 = self.x0.as_ref().map(|x| vector("x0", x, n)).transpose()?;

        let de = EtaFPolicy::<f64>::default();
        cfg.eta_f = EtaFPolicy {
            sigma: self.eta_f.sigma.unwrap_or(de.sigma),
            floor: self.eta_f.floor.unwrap_or(de.floor),
            cap: self.eta_f.cap.unwrap_or(de.cap),
        };
        cfg.eta_f.validate().context("eta_f")?;

        if let Some(eps) = self.eps_s {
            cfg.eps_s = eps;
        }
        if let Some(it) = self.max_iters {
            ensure!(it >= 1, "max_iters: must be at least 1");
            cfg.max_iters = it;
        }
        let dt = TerminalSetOptions::default();
        let t = &self.terminal;
        cfg.terminal = TerminalSetOptions {
            epsilon: t.epsilon.unwrap_or(dt.epsilon),
            k_max: t.k_max.unwrap_or(dt.k_max),
            ridge: t.ridge.unwrap_or(dt.ridge),
            prune: t.prune.unwrap_or(dt.prune),
        };
        ensure!(
            cfg.terminal.epsilon > 0.0 && cfg.terminal.epsilon < 1.0,
            "terminal.epsilon: must lie in (0, 1)"
        );
        cfg.phase1_check = self.phase1_check;
        cfg.initial_eta = self.initial_eta;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Reads, converts and fully validates a scenario. Building the controller
/// checks the remaining invariants (stabilizability, equilibrium map,
/// admissible references).
pub fn parse_config(path: &Path) -> Result<ScenarioConfig64> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_config_str(&text).with_context(|| format!("config {}", path.display()))
}

pub fn parse_config_str(text: &str) -> Result<ScenarioConfig64> {
    let file: ScenarioFile = serde_json::from_str(text)?;
    let cfg = file.to_config()?;
    Controller::new(cfg.clone())?;
    Ok(cfg)
}
