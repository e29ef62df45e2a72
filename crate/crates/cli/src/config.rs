//! Experiment configuration files.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use insitu_core::dist::{CoordinatorConfig, DEFAULT_PORT};
use insitu_core::{GaConfig, ProblemDef};
use serde::{Deserialize, Deserializer, Serialize};

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Ga,
    Random,
    OnePlusOne,
}

/// Random search parameters. When absent, the budget is what the configured
/// GA would spend without converging ([`ExperimentConfig::ga_budget`]) and
/// the block size is its population size.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RandomConfig {
    pub budget_evaluations: Option<u64>,
    pub block_size: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OnlineConfig {
    pub windows: u64,
    pub window_evals: usize,
}

impl Default for OnlineConfig {
    fn default() -> Self {
        OnlineConfig {
            windows: 200,
            window_evals: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DistributedConfig {
    pub listen: String,
    pub chunk_size: usize,
    pub timeout_s: f64,
    pub grace_s: f64,
    /// Workers to wait for before the first replicate starts.
    pub min_workers: usize,
    pub wait_for_workers_s: f64,
}

impl Default for DistributedConfig {
    fn default() -> Self {
        let c = CoordinatorConfig::default();
        DistributedConfig {
            listen: format!("0.0.0.0:{DEFAULT_PORT}"),
            chunk_size: c.chunk_size,
            timeout_s: c.task_timeout.as_secs_f64(),
            grace_s: c.grace_period.as_secs_f64(),
            min_workers: 1,
            wait_for_workers_s: 300.0,
        }
    }
}

impl DistributedConfig {
    pub fn coordinator_config(&self) -> CoordinatorConfig {
        CoordinatorConfig {
            chunk_size: self.chunk_size,
            task_timeout: Duration::from_secs_f64(self.timeout_s),
            grace_period: Duration::from_secs_f64(self.grace_s),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum EvaluatorConfig {
    #[default]
    Local,
    Distributed(DistributedConfig),
}

/// Accepts either `"local"` / `"distributed"` or a tagged object.
impl<'de> Deserialize<'de> for EvaluatorConfig {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
        enum Tagged {
            Local,
            Distributed(DistributedConfig),
        }
        let value = serde_json::Value::deserialize(d)?;
        let value = match value {
            serde_json::Value::String(s) => serde_json::json!({ "type": s }),
            other => other,
        };
        match serde_json::from_value(value).map_err(serde::de::Error::custom)? {
            Tagged::Local => Ok(EvaluatorConfig::Local),
            Tagged::Distributed(c) => Ok(EvaluatorConfig::Distributed(c)),
        }
    }
}

/// Accepts either a problem name or a full definition object.
fn problem_def<'de, D: Deserializer<'de>>(d: D) -> Result<ProblemDef, D::Error> {
    let value = serde_json::Value::deserialize(d)?;
    let value = match value {
        serde_json::Value::String(s) => serde_json::json!({ "type": s }),
        other => other,
    };
    serde_json::from_value(value).map_err(serde::de::Error::custom)
}

fn default_replicates() -> u32 {
    25
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("results")
}

fn default_telemetry_every() -> u64 {
    10
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(deserialize_with = "problem_def")]
    pub problem: ProblemDef,
    pub algorithm: Algorithm,
    #[serde(default)]
    pub ga: GaConfig,
    #[serde(default)]
    pub random: RandomConfig,
    #[serde(default)]
    pub one_plus_one: OnlineConfig,
    #[serde(default = "default_replicates")]
    pub replicates: u32,
    /// Replicate `r` (1-based) runs with seed `seed_base + r`.
    #[serde(default)]
    pub seed_base: u64,
    #[serde(default)]
    pub evaluator: EvaluatorConfig,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// 0 disables telemetry in traces.
    #[serde(default = "default_telemetry_every")]
    pub telemetry_every_n_generations: u64,
}

impl ExperimentConfig {
    /// A config with every optional field at its default.
    pub fn new(problem: ProblemDef, algorithm: Algorithm) -> Self {
        serde_json::from_value(serde_json::json!({
            "problem": problem,
            "algorithm": algorithm,
        }))
        .expect("defaults deserialize")
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let config: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let field = |name: &str, why: &str| Err(CliError::Config(format!("{name}: {why}")));
        if self.replicates == 0 {
            return field("replicates", "must be at least 1");
        }
        if let Err(e) = self.problem.build() {
            return field("problem", &e.to_string());
        }
        match self.algorithm {
            Algorithm::Ga => {
                if let Err((name, why)) = self.ga.validate() {
                    return field(&format!("ga.{name}"), &why);
                }
            }
            Algorithm::Random => {
                if self.random.budget_evaluations == Some(0) {
                    return field("random.budget_evaluations", "must be at least 1");
                }
                if self.random.block_size == Some(0) {
                    return field("random.block_size", "must be at least 1");
                }
            }
            Algorithm::OnePlusOne => {
                if self.one_plus_one.windows == 0 {
                    return field("one_plus_one.windows", "must be at least 1");
                }
                if self.one_plus_one.window_evals == 0 {
                    return field("one_plus_one.window_evals", "must be at least 1");
                }
            }
        }
        if let EvaluatorConfig::Distributed(d) = &self.evaluator {
            if d.chunk_size == 0 {
                return field("evaluator.chunk_size", "must be at least 1");
            }
            for (name, v) in [
                ("evaluator.timeout_s", d.timeout_s),
                ("evaluator.grace_s", d.grace_s),
                ("evaluator.wait_for_workers_s", d.wait_for_workers_s),
            ] {
                if !(v.is_finite() && v >= 0.0) {
                    return field(name, "must be a non-negative number of seconds");
                }
            }
        }
        Ok(())
    }

    pub fn seed(&self, replicate: u32) -> u64 {
        self.seed_base.wrapping_add(u64::from(replicate))
    }

    /// Evaluations a GA replicate spends if it never converges: the initial
    /// population plus `population_size - elitism` per generation.
    pub fn ga_budget(&self) -> u64 {
        let pop = self.ga.population_size as u64;
        pop + self.ga.max_generations * (pop - self.ga.elitism as u64)
    }

    pub fn random_budget(&self) -> u64 {
        self.random
            .budget_evaluations
            .unwrap_or_else(|| self.ga_budget())
    }

    pub fn random_block_size(&self) -> usize {
        self.random.block_size.unwrap_or(self.ga.population_size)
    }
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    ExperimentConfig::from_json(&text).map_err(|e| match e {
        CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}
