//! Run configuration: one JSON document covering the problem, grid, flow,
//! seed and bisection parameters, validated before any compute.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::basin::BisectionParams;
use crate::flow::FlowParams;
use crate::grid::MIN_GRID_INTERVALS;
use crate::seed::SeedParams;
use crate::system::ProblemSpec;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("problem: {0}")]
    Problem(#[from] crate::system::SpecError),
    #[error("grid: intervals must be even and >= {MIN_GRID_INTERVALS}, got {0}")]
    Grid(usize),
    #[error("flow: {0}")]
    Flow(String),
    #[error("bisection: {0}")]
    Bisection(String),
    #[error("seed: {0}")]
    Seed(String),
    #[error("parse: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

fn default_true() -> bool {
    true
}

/// Seed parameterization: a single amplitude on the uniform construction
/// (the one-parameter ray), or fully explicit per-slot data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum SeedConfig {
    Uniform {
        k_micro: usize,
        amplitude: f64,
        sharpness: f64,
        /// Rescale each bump row so all rows reach their scalar criticality
        /// at the same ray multiplier (keeps weaker bumps from dying before
        /// the boundary is reached).
        #[serde(default = "default_true")]
        calibrate: bool,
    },
    Explicit(SeedParams),
}

impl SeedConfig {
    pub fn uniform_default() -> Self {
        SeedConfig::Uniform {
            k_micro: 1,
            amplitude: 1.0,
            sharpness: 0.9,
            calibrate: true,
        }
    }

    pub fn to_params(&self, spec: &ProblemSpec) -> SeedParams {
        match self {
            SeedConfig::Uniform {
                k_micro,
                amplitude,
                sharpness,
                ..
            } => SeedParams::uniform(spec, *k_micro, *amplitude, *sharpness),
            SeedConfig::Explicit(p) => p.clone(),
        }
    }

    pub fn wants_calibration(&self) -> bool {
        matches!(self, SeedConfig::Uniform { calibrate: true, .. })
    }
}

/// The full configuration of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub problem: ProblemSpec,
    pub grid_intervals: usize,
    #[serde(default)]
    pub flow: FlowParams,
    pub seed: SeedConfig,
    #[serde(default)]
    pub bisection: BisectionParams,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub rng_seed: u64,
}

impl RunConfig {
    pub fn new(problem: ProblemSpec, grid_intervals: usize) -> Self {
        RunConfig {
            problem,
            grid_intervals,
            flow: FlowParams::default(),
            seed: SeedConfig::uniform_default(),
            bisection: BisectionParams::default(),
            output_dir: None,
            rng_seed: 0,
        }
    }

    /// Validates every component-module invariant before any compute.
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.problem.validate()?;
        if self.grid_intervals < MIN_GRID_INTERVALS || self.grid_intervals % 2 != 0 {
            return Err(ConfigError::Grid(self.grid_intervals));
        }
        self.flow.validate().map_err(ConfigError::Flow)?;
        self.bisection.validate().map_err(ConfigError::Bisection)?;
        let params = self.seed.to_params(&self.problem);
        params
            .validate(&self.problem)
            .map_err(|e| ConfigError::Seed(e.to_string()))?;
        if let SeedConfig::Uniform { amplitude, .. } = self.seed {
            if !(amplitude > 0.0) {
                return Err(ConfigError::Seed(
                    "uniform amplitude must be positive (zero amplitudes cannot meet node targets)"
                        .into(),
                ));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, ConfigError> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, ConfigError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &std::path::Path) -> Result<(), ConfigError> {
        Ok(std::fs::write(path, self.to_json())?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::RadialDomain;

    fn sample_config() -> RunConfig {
        let spec = ProblemSpec::new(
            -2.0,
            2,
            1,
            0,
            vec![0],
            vec![],
            RadialDomain::ball(1.0, 3).unwrap(),
        )
        .unwrap();
        RunConfig {
            rng_seed: 42,
            ..RunConfig::new(spec, 256)
        }
    }

    #[test]
    fn json_round_trip_is_exact() {
        let config = sample_config();
        let json = config.to_json();
        let back = RunConfig::from_json(&json).unwrap();
        assert_eq!(config, back);
        // and the re-serialization is byte-identical
        assert_eq!(json, back.to_json());
    }

    #[test]
    fn zero_amplitude_rejected() {
        let mut config = sample_config();
        config.seed = SeedConfig::Uniform {
            k_micro: 1,
            amplitude: 0.0,
            sharpness: 0.9,
            calibrate: true,
        };
        assert!(matches!(config.validate(), Err(ConfigError::Seed(_))));
    }

    #[test]
    fn odd_grid_rejected() {
        let mut config = sample_config();
        config.grid_intervals = 255;
        assert!(matches!(config.validate(), Err(ConfigError::Grid(_))));
    }
}
