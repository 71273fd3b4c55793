//! The run configuration: one JSON document with sections `problem`,
//! `grid`, `solver`, `evolution` and `sweep`. Unknown keys are rejected.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use solitary::evolution::EvolutionConfig;
use solitary::functionals::DEFAULT_BALL_RADIUS;
use solitary::nonlinearity::nonlinearity_registry;
use solitary::solver::GridPolicy;
use solitary::symbol::symbol_registry;
use solitary::{Problem, SolveConfig};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub problem: ProblemSection,
    #[serde(default)]
    pub grid: GridPolicy,
    #[serde(default)]
    pub solver: SolveConfig,
    #[serde(default)]
    pub evolution: EvolutionConfig,
    #[serde(default)]
    pub sweep: SweepSection,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSection {
    /// `whitham`, `gaussian` or `rational:s`.
    pub symbol: String,
    #[serde(default = "default_nonlinearity")]
    pub nonlinearity: String,
    #[serde(default = "default_radius")]
    pub ball_radius: f64,
}

fn default_nonlinearity() -> String {
    "quadratic".into()
}

fn default_radius() -> f64 {
    DEFAULT_BALL_RADIUS
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub mu_list: Vec<f64>,
    /// Exponent of the weighted norm in the scaling diagnostics.
    pub tau: f64,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            mu_list: vec![1e-4, 3e-4, 1e-3, 3e-3, 1e-2],
            tau: 0.9,
        }
    }
}

impl ProblemSection {
    pub fn build(&self) -> solitary::Result<Problem> {
        let symbol = symbol_registry().build(&self.symbol)?;
        let nl = nonlinearity_registry().build(&self.nonlinearity)?;
        Problem::new(symbol, nl, self.ball_radius)
    }
}

/// Configuration failures, reported with the offending line or field.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl Config {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: Config = serde_json::from_str(text).map_err(|e| ConfigError(e.to_string()))?;
        cfg.solver
            .validate()
            .and_then(|_| cfg.evolution.validate())
            .map_err(|e| ConfigError(e.to_string()))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|ConfigError(m)| ConfigError(format!("{}: {m}", path.display())))
    }

    /// Defaults for commands that take the problem from a profile's metadata.
    pub fn for_problem(symbol: &str, nonlinearity: &str) -> Self {
        Config {
            problem: ProblemSection {
                symbol: symbol.into(),
                nonlinearity: nonlinearity.into(),
                ball_radius: DEFAULT_BALL_RADIUS,
            },
            grid: GridPolicy::default(),
            solver: SolveConfig::default(),
            evolution: EvolutionConfig::default(),
            sweep: SweepSection::default(),
        }
    }
}
