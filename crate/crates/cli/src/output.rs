use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use ldmpc::simulate::{ModeBenchmark, StepLog, Summary};
use serde::{Deserialize, Serialize};

/// One `steps.csv` line.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub k: usize,
    pub t: f64,
    pub x: Vec<f64>,
    pub u: Vec<f64>,
    pub z: Vec<f64>,
    pub v: Vec<f64>,
    pub kappa: f64,
    pub eta_start: f64,
    pub eta_end: f64,
    pub eta_f: f64,
    pub iterations: usize,
    pub fallback: bool,
    pub constraint_margin: f64,
    pub wall_time_us: f64,
}

impl CsvRow {
    pub fn from_step(s: &StepLog<f64>) -> Self {
        Self {
            k: s.k,
            t: s.t,
            x: s.x.as_slice().to_vec(),
            u: s.u.as_slice().to_vec(),
            z: s.z.as_slice().to_vec(),
            v: s.v.as_slice().to_vec(),
            kappa: s.kappa,
            eta_start: s.eta_start,
            eta_end: s.eta_end,
            eta_f: s.eta_f,
            iterations: s.iterations,
            fallback: s.fallback,
            constraint_margin: s.constraint_margin,
            wall_time_us: s.wall_time * 1e6,
        }
    }

    /// Equality on everything except the timing column.
    pub fn same_except_timing(&self, other: &Self) -> bool {
        Self { wall_time_us: 0.0, ..self.clone() } == Self { wall_time_us: 0.0, ..other.clone() }
    }
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn header(n: usize, n_u: usize, n_z: usize, n_v: usize) -> Vec<String> {
    let mut h = vec!["k".to_string(), "t".to_string()];
    for (prefix, len) in [("x", n), ("u", n_u), ("z", n_z), ("v", n_v)] {
        h.extend((0..len).map(|i| format!("{prefix}{i}")));
    }
    h.extend(
        ["kappa", "eta_start", "eta_end", "eta_f", "iterations", "fallback", "constraint_margin", "wall_time_us"]
            .map(String::from),
    );
    h
}

pub fn write_steps_csv(path: &Path, steps: &[StepLog<f64>]) -> Result<()> {
    let Some(first) = steps.first() else { bail!("empty log") };
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    w.write_record(header(first.x.len(), first.u.len(), first.z.len(), first.v.len()))?;
    for s in steps {
        let r = CsvRow::from_step(s);
        let mut rec = vec![r.k.to_string(), fmt_f64(r.t)];
        rec.extend(r.x.iter().chain(&r.u).chain(&r.z).chain(&r.v).map(|&x| fmt_f64(x)));
        rec.extend([
            fmt_f64(r.kappa),
            fmt_f64(r.eta_start),
            fmt_f64(r.eta_end),
            fmt_f64(r.eta_f),
            r.iterations.to_string(),
            u8::from(r.fallback).to_string(),
            fmt_f64(r.constraint_margin),
            fmt_f64(r.wall_time_us),
        ]);
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

fn count_prefix(header: &csv::StringRecord, prefix: char) -> usize {
    header
        .iter()
        .filter(|h| h.starts_with(prefix) && h.len() > 1 && h[1..].bytes().all(|b| b.is_ascii_digit()))
        .count()
}

pub fn read_steps_csv(path: &Path) -> Result<Vec<CsvRow>> {
    let mut rd = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    let head = rd.headers()?.clone();
    let (n, n_u, n_z, n_v) =
        (count_prefix(&head, 'x'), count_prefix(&head, 'u'), count_prefix(&head, 'z'), count_prefix(&head, 'v'));
    let expected = header(n, n_u, n_z, n_v);
    ensure!(head.iter().eq(expected.iter().map(String::as_str)), "unexpected steps.csv header");
    let mut rows = Vec::new();
    for (line, rec) in rd.records().enumerate() {
        let rec = rec?;
        let f = |i: usize| -> Result<f64> {
            rec[i].parse().with_context(|| format!("row {line}, column {}: bad number", &expected[i]))
        };
        let slice = |start: usize, len: usize| (start..start + len).map(f).collect::<Result<Vec<_>>>();
        let mut i = 2;
        let x = slice(i, n)?;
        i += n;
        let u = slice(i, n_u)?;
        i += n_u;
        let z = slice(i, n_z)?;
        i += n_z;
        let v = slice(i, n_v)?;
        i += n_v;
        rows.push(CsvRow {
            k: rec[0].parse()?,
            t: f(1)?,
            x,
            u,
            z,
            v,
            kappa: f(i)?,
            eta_start: f(i + 1)?,
            eta_end: f(i + 2)?,
            eta_f: f(i + 3)?,
            iterations: rec[i + 4].parse()?,
            fallback: match &rec[i + 5] {
                "0" => false,
                "1" => true,
                other => bail!("row {line}: fallback must be 0 or 1, got {other:?}"),
            },
            constraint_margin: f(i + 6)?,
            wall_time_us: f(i + 7)?,
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryJson {
    pub mode: String,
    pub steps: usize,
    pub max_iterations: usize,
    pub mean_iterations: f64,
    pub settle_step: Option<usize>,
    pub worst_wall_time_us: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub worst_time_mean_us: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub worst_time_std_us: Option<f64>,
}

impl SummaryJson {
    pub fn single(mode: &str, s: &Summary) -> Self {
        Self {
            mode: mode.to_string(),
            steps: s.steps,
            max_iterations: s.max_iterations,
            mean_iterations: s.mean_iterations,
            settle_step: s.settle_step,
            worst_wall_time_us: s.worst_wall_time * 1e6,
            trials: None,
            worst_time_mean_us: None,
            worst_time_std_us: None,
        }
    }

    /// Per-trial statistics; the single-run fields describe the last trial.
    pub fn benchmark(b: &ModeBenchmark<f64>) -> Self {
        Self {
            trials: Some(b.trials),
            worst_time_mean_us: Some(b.worst_time.mean * 1e6),
            worst_time_std_us: Some(b.worst_time.std * 1e6),
            ..Self::single(b.mode.as_str(), &b.last.summary)
        }
    }
}
