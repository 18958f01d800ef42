use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::drl::LearnerConfig;
use crate::error::{Error, Result};
use crate::estimation::SystemModel;
use crate::game::closed::{BeliefGame, BeliefMatrix, PerModel, PowerSchedule, RewardTiming};
use crate::game::open::{CostSchedule, DiscountedGame};
use crate::presets;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    VerifyModel,
    #[default]
    OpenCentralized,
    OpenDistributed,
    ClosedDistributed,
    Oracle,
}

impl Scenario {
    pub const ALL: [Scenario; 5] = [
        Scenario::VerifyModel,
        Scenario::OpenCentralized,
        Scenario::OpenDistributed,
        Scenario::ClosedDistributed,
        Scenario::Oracle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::VerifyModel => "verify-model",
            Scenario::OpenCentralized => "open-centralized",
            Scenario::OpenDistributed => "open-distributed",
            Scenario::ClosedDistributed => "closed-distributed",
            Scenario::Oracle => "oracle",
        }
    }

    pub fn is_learning(self) -> bool {
        matches!(
            self,
            Scenario::OpenCentralized | Scenario::OpenDistributed | Scenario::ClosedDistributed
        )
    }

    fn is_distributed(self) -> bool {
        matches!(
            self,
            Scenario::OpenDistributed | Scenario::ClosedDistributed
        )
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.name() == s)
            .ok_or_else(|| Error::Validation(format!("scenario: unknown scenario {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClosedLoopConfig {
    pub powers: PowerSchedule,
    pub per: PerModel,
    /// Per-channel costs of the secure channel and of an attack.
    pub costs: CostSchedule,
    pub initial_belief: BeliefMatrix,
    pub reward_timing: RewardTiming,
}

impl Default for ClosedLoopConfig {
    fn default() -> Self {
        Self {
            powers: presets::benchmark_powers(),
            per: presets::benchmark_per(),
            costs: presets::benchmark_belief_costs(),
            initial_belief: presets::benchmark_initial_belief(),
            reward_timing: RewardTiming::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleConfig {
    pub depth: usize,
    pub tol: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            depth: 4,
            tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    /// Consecutive all-loss steps forced from `P̄`.
    pub loss_steps: usize,
    /// Lossless steps recorded afterwards.
    pub recovery_steps: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            loss_steps: 5,
            recovery_steps: 15,
        }
    }
}

/// Everything one `run` needs. Missing keys fall back to the benchmark.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    pub seeds: Vec<u64>,
    pub output: PathBuf,
    pub plots: bool,
    pub model: SystemModel,
    pub costs: CostSchedule,
    pub closed_loop: ClosedLoopConfig,
    pub learner: LearnerConfig,
    pub oracle: OracleConfig,
    pub verify: VerifyConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self::for_scenario(Scenario::default())
    }
}

impl ScenarioConfig {
    /// Benchmark configuration with the learner defaults of `scenario`.
    pub fn for_scenario(scenario: Scenario) -> Self {
        Self {
            scenario,
            seeds: (0..5).collect(),
            output: PathBuf::from("out"),
            plots: false,
            model: presets::benchmark_model(),
            costs: presets::benchmark_costs(),
            closed_loop: ClosedLoopConfig::default(),
            learner: if scenario.is_distributed() {
                LearnerConfig::distributed()
            } else {
                LearnerConfig::centralized()
            },
            oracle: OracleConfig::default(),
            verify: VerifyConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.learner.validate()?;
        if self.seeds.is_empty() {
            return Err(Error::Validation("seeds".into()));
        }
        if self.oracle.depth == 0 {
            return Err(Error::Validation("oracle.depth".into()));
        }
        if !(self.oracle.tol > 0.0) {
            return Err(Error::Validation("oracle.tol".into()));
        }
        if self.costs.devices() != self.model.devices() {
            return Err(Error::Validation(format!(
                "costs: {} entries for {} devices",
                self.costs.devices(),
                self.model.devices()
            )));
        }
        if self.scenario == Scenario::ClosedDistributed {
            self.belief_game()?;
        }
        Ok(())
    }

    pub fn open_game(&self) -> Result<DiscountedGame> {
        DiscountedGame::new(self.model.clone(), self.costs.clone(), self.learner.rho)
    }

    pub fn belief_game(&self) -> Result<BeliefGame> {
        let c = &self.closed_loop;
        BeliefGame::new(
            c.powers.clone(),
            c.per,
            c.costs.clone(),
            c.initial_belief.clone(),
            c.reward_timing,
        )
    }

    pub fn learner_for_seed(&self, seed: u64) -> LearnerConfig {
        self.learner.clone().with_seed(seed)
    }

    pub fn scenario_dir(&self) -> PathBuf {
        self.output.join(self.scenario.name())
    }
}

pub fn load_config(path: impl AsRef<Path>) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_config(&text)
}

/// Parses and validates a TOML scenario.
pub fn parse_config(text: &str) -> Result<ScenarioConfig> {
    let table: toml::Table = toml::from_str(text).map_err(|e| parse_error(text, &e))?;
    let mut cfg: ScenarioConfig = toml::from_str(text).map_err(|e| classify(text, &e))?;
    let learner = table.get("learner").and_then(|v| v.as_table());
    let set = |key: &str| learner.is_some_and(|t| t.contains_key(key));
    // scenario-dependent learner defaults
    if cfg.scenario.is_distributed() && !set("eta") {
        cfg.learner.eta = LearnerConfig::distributed().eta;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn line_of(text: &str, err: &toml::de::Error) -> usize {
    err.span()
        .map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1)
        .unwrap_or(0)
}

fn parse_error(text: &str, err: &toml::de::Error) -> Error {
    Error::Parse {
        line: line_of(text, err),
        message: err.message().trim().to_string(),
    }
}

/// Nearest `[section]` header at or above `line`.
fn section_at(text: &str, line: usize) -> Option<String> {
    text.lines()
        .take(line)
        .filter_map(|l| {
            let l = l.trim();
            l.strip_prefix('[')
                .and_then(|r| r.strip_suffix(']'))
                .map(|s| s.trim_matches(['[', ']']).trim().to_string())
        })
        .last()
}

fn classify(text: &str, err: &toml::de::Error) -> Error {
    let message = err.message().trim();
    if let Some(rest) = message.strip_prefix("unknown field `") {
        let key = rest.split('`').next().unwrap_or(rest);
        let line = line_of(text, err);
        return Error::UnknownKey(match section_at(text, line) {
            Some(sec) => format!("{sec}.{key}"),
            None => key.to_string(),
        });
    }
    const DOMAIN: [&str; 5] = [
        "invalid model",
        "validation failed",
        "non-finite value",
        "dimension mismatch",
        "singular matrix",
    ];
    if DOMAIN.iter().any(|p| message.starts_with(p)) || message.starts_with("unknown variant") {
        let line = line_of(text, err);
        let field = section_at(text, line).unwrap_or_else(|| {
            text.lines()
                .nth(line.saturating_sub(1))
                .and_then(|l| l.split('=').next())
                .map(|k| k.trim().to_string())
                .unwrap_or_default()
        });
        return Error::Validation(format!("{field}: {message}"));
    }
    parse_error(text, err)
}
