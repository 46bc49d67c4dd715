//! Experiment configuration: one TOML file drives every subcommand.
//! Unknown keys are rejected; all module preconditions are validated before
//! anything runs.

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};

use banditlab::checkers::hetc_scaling_params;
use banditlab::{
    build_multi_agent_instance, BanditInstance, DiscretePrior, EpsMode, EvalMode, PolicySpec,
    ReplicationVector, RewardModel,
};

/// Policy as configured. `HEtcAuto` resolves the hierarchical-ETC budgets
/// per horizon from the theorem formulas instead of fixing them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PolicyConfig {
    Ucb { scale: f64 },
    Etc { explore_len: u64 },
    EpsGreedy { mode: EpsMode, c: f64, d: f64 },
    PidEtc,
    HUcb { scale: f64 },
    HEtc {
        agent_explore: u64,
        arm_explore: u64,
        restart: u64,
    },
    HEtcAuto { delta: f64 },
}

impl PolicyConfig {
    pub fn resolve(&self, num_agents: usize, l_max: usize, horizon: u64) -> PolicySpec {
        match self {
            PolicyConfig::Ucb { scale } => PolicySpec::Ucb { scale: *scale },
            PolicyConfig::Etc { explore_len } => PolicySpec::Etc {
                explore_len: *explore_len,
            },
            PolicyConfig::EpsGreedy { mode, c, d } => PolicySpec::EpsGreedy {
                mode: *mode,
                c: *c,
                d: *d,
            },
            PolicyConfig::PidEtc => PolicySpec::PidEtc,
            PolicyConfig::HUcb { scale } => PolicySpec::HUcb { scale: *scale },
            PolicyConfig::HEtc {
                agent_explore,
                arm_explore,
                restart,
            } => PolicySpec::HEtc {
                agent_explore: *agent_explore,
                arm_explore: *arm_explore,
                restart: *restart,
            },
            PolicyConfig::HEtcAuto { delta } => {
                let p = hetc_scaling_params(num_agents.max(1), l_max.max(1), *delta, horizon);
                PolicySpec::HEtc {
                    agent_explore: p.agent_explore,
                    arm_explore: p.arm_explore,
                    restart: p.restart,
                }
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            PolicyConfig::Ucb { .. } => "ucb",
            PolicyConfig::Etc { .. } => "etc",
            PolicyConfig::EpsGreedy { .. } => "eps-greedy",
            PolicyConfig::PidEtc => "pid-etc",
            PolicyConfig::HUcb { .. } => "h-ucb",
            PolicyConfig::HEtc { .. } => "h-etc",
            PolicyConfig::HEtcAuto { .. } => "h-etc",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub policy: PolicyConfig,
    pub reward_model: RewardModel,
    pub horizon: Option<u64>,
    pub t_grid: Option<Vec<u64>>,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_reps")]
    pub reps: u64,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_mode")]
    pub mode: String,
}

fn default_alpha() -> f64 {
    0.5
}

fn default_reps() -> u64 {
    1000
}

fn default_mode() -> String {
    "exact".into()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentSection {
    /// Realized arm means (required by run/sweep).
    pub means: Option<Vec<f64>>,
    /// Prior support/probs (required by prior-driven checks).
    pub support: Option<Vec<f64>>,
    pub probs: Option<Vec<f64>>,
    /// Number of original arms when only a prior is given.
    pub originals: Option<usize>,
    /// This agent's replication vector (defaults to truthful).
    pub replication: Option<Vec<usize>>,
    /// Candidate strategy set when this agent is an opponent in the
    /// replication-proofness check.
    pub strategies: Option<Vec<Vec<usize>>>,
}

impl AgentSection {
    pub fn realized_means(&self) -> Result<&[f64]> {
        self.means
            .as_deref()
            .ok_or_else(|| anyhow!("agent needs `means` for this command"))
    }

    pub fn replication_for(&self, l: usize) -> Result<ReplicationVector> {
        match &self.replication {
            None => Ok(ReplicationVector::truthful(l)),
            Some(r) => {
                if r.len() != l {
                    bail!("replication vector of length {} for {} originals", r.len(), l);
                }
                Ok(ReplicationVector(r.clone()))
            }
        }
    }

    pub fn prior(&self) -> Result<DiscretePrior> {
        let support = self
            .support
            .clone()
            .ok_or_else(|| anyhow!("agent needs `support`/`probs` for this command"))?;
        let probs = self
            .probs
            .clone()
            .ok_or_else(|| anyhow!("agent needs `probs` alongside `support`"))?;
        DiscretePrior::new(support, probs).map_err(|e| anyhow!("{e}"))
    }

    pub fn originals_count(&self) -> Result<usize> {
        if let Some(l) = self.originals {
            return Ok(l);
        }
        if let Some(m) = &self.means {
            return Ok(m.len());
        }
        bail!("agent needs `originals` (or `means`) to fix its arm count")
    }
}

/// Check-specific knobs; everything else derives from the experiment and
/// agents sections.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckSection {
    /// Certificate kind required for exit code 0, e.g. "trp-holds".
    pub expect: Option<String>,
    /// TRP strategy set (must include the zero vector).
    pub strategies: Option<Vec<Vec<usize>>>,
    /// Replication-proofness budget ‖r‖₁ ≤ r_max.
    pub r_max: Option<usize>,
    /// Horizon set overriding `experiment.horizon` for the RP check.
    pub horizons: Option<Vec<u64>>,
    /// Number of sampled (σ, seed) cases for the PI check.
    pub num_cases: Option<u64>,
    /// Exploration length m for the pull/misselection bounds.
    pub explore_len: Option<u64>,
    /// Minimum prior gap for the scaling check.
    pub delta: Option<f64>,
    /// Allowed max/min ratio of ρ over the grid (default 4).
    pub slack: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    /// Emit an SVG regret curve from `sweep`.
    #[serde(default)]
    pub svg: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentSection,
    #[serde(default)]
    pub agents: Vec<AgentSection>,
    #[serde(default)]
    pub check: Option<CheckSection>,
    #[serde(default)]
    pub output: Option<OutputSection>,
}

impl ExperimentConfig {
    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let config: ExperimentConfig =
            toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.experiment.horizon.is_none() && self.experiment.t_grid.is_none() {
            bail!("experiment needs `horizon` or `t_grid`");
        }
        if let Some(grid) = &self.experiment.t_grid {
            if grid.is_empty() {
                bail!("`t_grid` must be non-empty");
            }
        }
        if !(self.experiment.alpha > 0.0 && self.experiment.alpha < 1.0) {
            bail!("`alpha` must lie in (0, 1)");
        }
        match self.experiment.mode.as_str() {
            "exact" | "mc" => {}
            other => bail!("`mode` must be \"exact\" or \"mc\", got {other:?}"),
        }
        Ok(())
    }

    pub fn horizon(&self) -> Result<u64> {
        self.experiment
            .horizon
            .ok_or_else(|| anyhow!("this command needs `experiment.horizon`"))
    }

    pub fn eval_mode(&self) -> EvalMode {
        match self.experiment.mode.as_str() {
            "exact" => EvalMode::Exact,
            _ => EvalMode::Mc {
                reps: self.experiment.reps,
                master_seed: self.experiment.master_seed,
            },
        }
    }

    /// Builds the realized instance from the agents' means and replication.
    pub fn realized_instance(&self) -> Result<BanditInstance> {
        if self.agents.is_empty() {
            bail!("at least one [[agents]] entry is required");
        }
        let mut per_agent = Vec::new();
        for agent in &self.agents {
            let means = agent.realized_means()?.to_vec();
            let r = agent.replication_for(means.len())?;
            per_agent.push((means, r));
        }
        build_multi_agent_instance(&per_agent, self.experiment.reward_model)
            .map_err(|e| anyhow!("{e}"))
    }

    /// Resolves the policy for a given horizon against the realized or
    /// declared agent structure.
    pub fn policy_for(&self, horizon: u64) -> Result<PolicySpec> {
        let num_agents = self.agents.len().max(1);
        let l_max = self
            .agents
            .iter()
            .map(|a| a.originals_count().unwrap_or(1))
            .max()
            .unwrap_or(1);
        Ok(self
            .experiment
            .policy
            .resolve(num_agents, l_max, horizon))
    }

    pub fn check_section(&self) -> CheckSection {
        self.check.clone().unwrap_or_default()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_minimal_config() {
        let text = r#"
            [experiment]
            policy = { kind = "ucb", scale = 1.0 }
            reward_model = "deterministic"
            horizon = 36

            [[agents]]
            means = [1.0, 0.0]
        "#;
        let config: ExperimentConfig = toml::from_str(text).unwrap();
        config.validate().unwrap();
        assert_eq!(config.experiment.alpha, 0.5);
        let inst = config.realized_instance().unwrap();
        assert_eq!(inst.len(), 2);
    }

    #[test]
    fn rejects_unknown_keys() {
        let text = r#"
            [experiment]
            policy = { kind = "ucb", scale = 1.0 }
            reward_model = "bernoulli"
            horizon = 10
            banana = 1
        "#;
        assert!(toml::from_str::<ExperimentConfig>(text).is_err());
    }

    #[test]
    fn hetc_auto_resolves_per_horizon() {
        let policy = PolicyConfig::HEtcAuto { delta: 0.5 };
        let a = policy.resolve(2, 2, 4096);
        let b = policy.resolve(2, 2, 65_536);
        let (PolicySpec::HEtc { agent_explore: ma, .. }, PolicySpec::HEtc { agent_explore: mb, .. }) =
            (a, b)
        else {
            panic!("expected h-etc")
        };
        assert!(mb > ma);
    }
}
