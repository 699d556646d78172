mod commands;
mod config;

use std::path::Path;
use std::process::ExitCode;

use clap::Parser;
use serde_json::json;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::commands::Inputs;
use crate::config::{Args, RunConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("compute error: {0}")]
    Compute(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl From<hillgap::Error> for CliError {
    fn from(e: hillgap::Error) -> CliError {
        match e {
            hillgap::Error::Config(m) => CliError::Config(m),
            other => CliError::Compute(other.to_string()),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Compute(_) | CliError::Io(_) => 4,
        }
    }
}

fn read_optional(path: Option<&Path>) -> Result<Option<String>, CliError> {
    path.map(|p| std::fs::read_to_string(p).map_err(|e| CliError::Config(format!("reading {}: {e}", p.display()))))
        .transpose()
}

/// Hash of the resolved configuration and the contents of every input file.
fn config_hash(cfg: &RunConfig, inputs: &Inputs) -> String {
    let canonical = json!({
        "config": cfg,
        "potential": inputs.potential,
        "weight": inputs.weight,
        "target": inputs.target,
    });
    hex::encode(Sha256::digest(canonical.to_string().as_bytes()))
}

fn execute(args: Args) -> Result<bool, CliError> {
    let cfg = RunConfig::resolve(args)?;
    if let Some(j) = cfg.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    let inputs = Inputs {
        potential: read_optional(cfg.potential.as_deref())?,
        weight: read_optional(cfg.weight.as_deref())?,
        target: read_optional(cfg.target.as_deref())?,
    };
    let outcome = commands::run(&cfg, &inputs)?;
    let name = cfg.command.name();
    std::fs::create_dir_all(&cfg.output)?;
    std::fs::write(cfg.output.join(format!("{name}.csv")), &outcome.csv)?;
    let report = serde_json::to_string_pretty(&outcome.report).map_err(|e| CliError::Compute(e.to_string()))?;
    std::fs::write(cfg.output.join(format!("{name}.json")), report + "\n")?;
    let summary = json!({
        "command": name,
        "config_hash": config_hash(&cfg, &inputs),
        "violations": outcome.violations,
    });
    let summary = serde_json::to_string_pretty(&summary).map_err(|e| CliError::Compute(e.to_string()))?;
    std::fs::write(cfg.output.join("summary.json"), summary.clone() + "\n")?;
    println!("{summary}");
    Ok(outcome.violations.is_empty())
}

fn main() -> ExitCode {
    match execute(Args::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(3),
        Err(e) => {
            eprintln!("hillgap: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
