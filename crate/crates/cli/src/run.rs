use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{ensure, Context, Result};
use clap::{Args, ValueEnum};
use ldmpc::mpc::PlantModel;
use ldmpc::simulate::{benchmark_mode, run_scenario, Mode, ScenarioConfig, SimulationLog};
use ldmpc::{ConstraintPolyhedron64, ScenarioConfig64};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::parse_config;
use crate::output::{write_steps_csv, SummaryJson};
use crate::plot;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Governed,
    Ungoverned,
    Both,
}

impl ModeArg {
    pub fn modes(self) -> Vec<Mode> {
        match self {
            ModeArg::Governed => vec![Mode::Governed],
            ModeArg::Ungoverned => vec![Mode::Ungoverned],
            ModeArg::Both => vec![Mode::Governed, Mode::Ungoverned],
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Scenario file (JSON).
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; one subdirectory per mode.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = ModeArg::Both)]
    pub mode: ModeArg,
    /// Repeat each run and report worst-case time statistics.
    #[arg(long)]
    pub trials: Option<usize>,
    /// Governor LP seed (overrides the config).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Accept an initial state away from equilibrium after a feasibility solve.
    #[arg(long)]
    pub phase1_check: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    /// Relative to the output directory.
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config: String,
    pub out_dir: String,
    pub modes: Vec<String>,
    pub trials: Option<usize>,
    pub seed: u64,
    pub phase1_check: bool,
    pub files: Vec<FileEntry>,
}

pub const MANIFEST: &str = "manifest.json";

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

impl RunManifest {
    /// Files whose current hash differs from the recorded one.
    pub fn stale_files(&self, out: &Path) -> Result<Vec<String>> {
        let mut stale = Vec::new();
        for f in &self.files {
            if sha256_file(&out.join(&f.path))? != f.sha256 {
                stale.push(f.path.clone());
            }
        }
        Ok(stale)
    }
}

/// Bounds on single inputs implied by constraint rows of the form `a·u_i ≤ h`.
fn input_bounds(plant: &PlantModel<f64>, set: &ConstraintPolyhedron64) -> Vec<Vec<(String, f64)>> {
    let yc = &set.y * &plant.c;
    let yd = &set.y * &plant.d;
    let mut out = vec![Vec::new(); plant.n_u()];
    for j in 0..set.rows() {
        if yc.row(j).amax() > 0.0 {
            continue;
        }
        let nonzero: Vec<usize> = (0..plant.n_u()).filter(|&i| yd[(j, i)] != 0.0).collect();
        if let [i] = nonzero[..] {
            let a = yd[(j, i)];
            let label = if a > 0.0 { format!("u{i} max") } else { format!("u{i} min") };
            out[i].push((label, set.h[j] / a));
        }
    }
    out
}

struct Writer {
    out: PathBuf,
    files: Vec<FileEntry>,
}

impl Writer {
    fn write(&mut self, rel: &str, contents: impl AsRef<[u8]>) -> Result<()> {
        let path = self.out.join(rel);
        fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
        self.record(rel)
    }

    fn record(&mut self, rel: &str) -> Result<()> {
        let sha256 = sha256_file(&self.out.join(rel))?;
        self.files.push(FileEntry { path: rel.to_string(), sha256 });
        Ok(())
    }

    fn emit(&mut self, cfg: &ScenarioConfig64, log: &SimulationLog<f64>, summary: &SummaryJson) -> Result<()> {
        let dir = log.mode.as_str();
        fs::create_dir_all(self.out.join(dir))?;
        let csv = format!("{dir}/steps.csv");
        write_steps_csv(&self.out.join(&csv), &log.steps)?;
        self.record(&csv)?;
        self.write(&format!("{dir}/summary.json"), serde_json::to_string_pretty(summary)? + "\n")?;
        self.write(&format!("{dir}/z.svg"), plot::outputs(log).to_svg())?;
        let bounds = input_bounds(&cfg.plant, &cfg.constraints).concat();
        self.write(&format!("{dir}/u.svg"), plot::inputs(log, bounds).to_svg())?;
        self.write(&format!("{dir}/iterations.svg"), plot::iterations(log).to_svg())?;
        Ok(())
    }
}

/// Runs the requested modes and writes `steps.csv`, `summary.json` and the
/// plots under `<out>/<mode>/`, then `<out>/manifest.json`.
pub fn run(args: &RunArgs) -> Result<RunManifest> {
    let mut cfg = parse_config(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.governor.rng_seed = seed;
    }
    cfg.phase1_check |= args.phase1_check;
    if let Some(t) = args.trials {
        ensure!(t >= 1, "--trials must be at least 1");
    }
    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let mut writer = Writer { out: args.out.clone(), files: Vec::new() };
    let modes = args.mode.modes();
    for &mode in &modes {
        let cfg = ScenarioConfig { mode, ..cfg.clone() };
        let (log, summary) = match args.trials {
            Some(trials) => {
                let bench = benchmark_mode(&cfg, mode, trials).with_context(|| format!("{} benchmark", mode.as_str()))?;
                let summary = SummaryJson::benchmark(&bench);
                (bench.last, summary)
            }
            None => {
                let log = run_scenario(&cfg).with_context(|| format!("{} run", mode.as_str()))?;
                let summary = SummaryJson::single(mode.as_str(), &log.summary);
                (log, summary)
            }
        };
        writer.emit(&cfg, &log, &summary)?;
    }
    let manifest = RunManifest {
        config: args.config.display().to_string(),
        out_dir: args.out.display().to_string(),
        modes: modes.iter().map(|m| m.as_str().to_string()).collect(),
        trials: args.trials,
        seed: cfg.governor.rng_seed,
        phase1_check: cfg.phase1_check,
        files: writer.files,
    };
    fs::write(args.out.join(MANIFEST), serde_json::to_string_pretty(&manifest)? + "\n")?;
    Ok(manifest)
}
