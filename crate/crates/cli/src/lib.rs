//! Scenario files, closed-loop runs and their artifacts (`steps.csv`,
//! `summary.json`, SVG plots, a hashed manifest).

pub mod config;
pub mod output;
pub mod plot;
pub mod run;

pub use config::{parse_config, parse_config_str, ScenarioFile};
pub use run::{run, ModeArg, RunArgs, RunManifest};
