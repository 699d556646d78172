//! Run configuration: JSON file merged with command-line overrides.

use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use hillgap::riesz::BcFamily;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Spectrum,
    Gaps,
    Reconstruct,
    Riesz,
    Perturb,
    Weights,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Gaps => "gaps",
            Command::Reconstruct => "reconstruct",
            Command::Riesz => "riesz",
            Command::Perturb => "perturb",
            Command::Weights => "weights",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum MethodChoice {
    Basic,
    Matrix,
    Shoot,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum BcChoice {
    Periodic,
    Dir,
}

impl From<BcChoice> for BcFamily {
    fn from(b: BcChoice) -> BcFamily {
        match b {
            BcChoice::Periodic => BcFamily::Periodic,
            BcChoice::Dir => BcFamily::Dir,
        }
    }
}

/// Batch front end for the hillgap spectral toolkit.
#[derive(Debug, Parser)]
#[command(name = "hillgap", version)]
pub struct Args {
    /// Computation to run; may instead come from the config file.
    #[arg(value_enum)]
    pub command: Option<Command>,
    /// JSON run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Potential description (JSON).
    #[arg(long)]
    pub potential: Option<PathBuf>,
    /// Weight description (JSON).
    #[arg(long)]
    pub weight: Option<PathBuf>,
    /// Target tail image for `reconstruct` (JSON).
    #[arg(long)]
    pub target: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub method: Option<MethodChoice>,
    /// Index range `A..B` (inclusive).
    #[arg(long, value_parser = parse_range)]
    pub n_range: Option<(u64, u64)>,
    /// Fourier cutoff `K`.
    #[arg(long)]
    pub cutoff: Option<usize>,
    /// Initial quadrature nodes for `riesz`.
    #[arg(long)]
    pub nodes: Option<usize>,
    /// Residual tolerance for `reconstruct`.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    pub jobs: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of untouched low modes for `reconstruct`.
    #[arg(long)]
    pub n_head: Option<u64>,
    #[arg(long, value_enum)]
    pub bc: Option<BcChoice>,
}

pub fn parse_range(s: &str) -> Result<(u64, u64), String> {
    let (a, b) = s.split_once("..").ok_or_else(|| format!("expected A..B, got {s:?}"))?;
    let a: u64 = a.trim().parse().map_err(|e| format!("{a:?}: {e}"))?;
    let b: u64 = b.trim().parse().map_err(|e| format!("{b:?}: {e}"))?;
    if a > b {
        return Err(format!("empty range {s:?}"));
    }
    Ok((a, b))
}

/// Config file contents; every field can be overridden by a flag.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub command: Option<Command>,
    pub potential: Option<PathBuf>,
    pub weight: Option<PathBuf>,
    pub target: Option<PathBuf>,
    pub n_range: Option<(u64, u64)>,
    #[serde(alias = "K")]
    pub cutoff: Option<usize>,
    pub method: Option<MethodChoice>,
    pub output: Option<PathBuf>,
    pub seed: Option<u64>,
    pub nodes: Option<usize>,
    pub tol: Option<f64>,
    pub jobs: Option<usize>,
    #[serde(alias = "N")]
    pub n_head: Option<u64>,
    pub bc: Option<BcChoice>,
    pub max_iter: Option<usize>,
    pub probes: Option<usize>,
}

/// Fully resolved run parameters.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: Command,
    pub potential: Option<PathBuf>,
    pub weight: Option<PathBuf>,
    pub target: Option<PathBuf>,
    pub n_range: (u64, u64),
    pub cutoff: usize,
    pub method: MethodChoice,
    #[serde(skip)]
    pub output: PathBuf,
    pub seed: u64,
    pub nodes: usize,
    pub tol: f64,
    #[serde(skip)]
    pub jobs: Option<usize>,
    pub n_head: u64,
    pub bc: BcChoice,
    pub max_iter: usize,
    pub probes: usize,
}

fn rebase(base: &Path, p: Option<PathBuf>) -> Option<PathBuf> {
    p.map(|p| if p.is_relative() { base.join(p) } else { p })
}

impl RunConfig {
    pub fn resolve(args: Args) -> Result<RunConfig, CliError> {
        let (file, base) = match &args.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::Config(format!("reading {}: {e}", path.display())))?;
                let cfg: FileConfig = serde_json::from_str(&text)
                    .map_err(|e| CliError::Config(format!("parsing {}: {e}", path.display())))?;
                (cfg, path.parent().map(Path::to_path_buf).unwrap_or_default())
            }
            None => (FileConfig::default(), PathBuf::new()),
        };
        let command = args
            .command
            .or(file.command)
            .ok_or_else(|| CliError::Config("no command given on the command line or in the config".into()))?;
        let n_range = args.n_range.or(file.n_range).unwrap_or((1, 8));
        if n_range.0 == 0 || n_range.0 > n_range.1 {
            return Err(CliError::Config(format!("n_range {}..{} must satisfy 1 <= A <= B", n_range.0, n_range.1)));
        }
        let cutoff = args.cutoff.or(file.cutoff).unwrap_or_else(|| hillgap::matrix_op::default_cutoff(n_range.1));
        if command != Command::Weights && n_range.1 as usize > cutoff / 4 {
            return Err(CliError::Config(format!("n_range end {} exceeds cutoff / 4 = {}", n_range.1, cutoff / 4)));
        }
        let tol = args.tol.or(file.tol).unwrap_or(1e-9);
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(CliError::Config(format!("tolerance {tol} must be positive")));
        }
        let jobs = args.jobs.or(file.jobs);
        if jobs == Some(0) {
            return Err(CliError::Config("--jobs must be at least 1".into()));
        }
        let cfg = RunConfig {
            command,
            potential: args.potential.or_else(|| rebase(&base, file.potential)),
            weight: args.weight.or_else(|| rebase(&base, file.weight)),
            target: args.target.or_else(|| rebase(&base, file.target)),
            n_range,
            cutoff,
            method: args.method.or(file.method).unwrap_or(MethodChoice::All),
            output: args.out.or_else(|| rebase(&base, file.output)).unwrap_or_else(|| PathBuf::from("out")),
            seed: args.seed.or(file.seed).unwrap_or(0),
            nodes: args.nodes.or(file.nodes).unwrap_or(64),
            tol,
            jobs,
            n_head: args.n_head.or(file.n_head).unwrap_or(4),
            bc: args.bc.or(file.bc).unwrap_or(BcChoice::Periodic),
            max_iter: file.max_iter.unwrap_or(50),
            probes: file.probes.unwrap_or(8),
        };
        if cfg.command != Command::Weights && cfg.potential.is_none() && cfg.target.is_none() {
            return Err(CliError::Config(format!("{} needs a potential", command.name())));
        }
        if cfg.command == Command::Weights && cfg.weight.is_none() {
            return Err(CliError::Config("weights needs a weight description".into()));
        }
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges() {
        assert_eq!(parse_range("2..10"), Ok((2, 10)));
        assert!(parse_range("5..2").is_err());
        assert!(parse_range("5").is_err());
    }
}
