//! Two-level policies: H-UCB and hierarchical ETC with restarting.

use crate::error::{Error, Result};
use crate::instance::BanditInstance;
use crate::policies::BonusConfig;
use crate::priority::Priorities;

/// Agent-level and per-(agent, arm) statistics. Arm statistics are indexed
/// by global arm position; `agent_arms` maps each agent to its block.
#[derive(Debug, Clone, PartialEq)]
pub struct HierPolicyState {
    agent_arms: Vec<Vec<usize>>,
    agent_counts: Vec<u64>,
    agent_means: Vec<f64>,
    arm_counts: Vec<u64>,
    arm_means: Vec<f64>,
    rounds: u64,
}

impl HierPolicyState {
    pub fn new(instance: &BanditInstance) -> Result<Self> {
        let n = instance.num_agents();
        if n == 0 {
            return Err(Error::domain("hierarchical policy over an empty agent set"));
        }
        let agent_arms: Vec<Vec<usize>> = (0..n).map(|i| instance.arms_of_agent(i)).collect();
        if let Some(i) = agent_arms.iter().position(|arms| arms.is_empty()) {
            return Err(Error::config(format!("agent {i} registered no arms")));
        }
        Ok(Self {
            agent_arms,
            agent_counts: vec![0; n],
            agent_means: vec![0.0; n],
            arm_counts: vec![0; instance.len()],
            arm_means: vec![0.0; instance.len()],
            rounds: 0,
        })
    }

    pub fn num_agents(&self) -> usize {
        self.agent_arms.len()
    }

    pub fn agent_count(&self, agent: usize) -> u64 {
        self.agent_counts[agent]
    }

    pub fn agent_mean(&self, agent: usize) -> f64 {
        self.agent_means[agent]
    }

    pub fn arm_count(&self, arm: usize) -> u64 {
        self.arm_counts[arm]
    }

    pub fn arm_mean(&self, arm: usize) -> f64 {
        self.arm_means[arm]
    }

    pub fn arms_of(&self, agent: usize) -> &[usize] {
        &self.agent_arms[agent]
    }

    pub fn rounds(&self) -> u64 {
        self.rounds
    }

    pub fn record(&mut self, agent: usize, arm: usize, reward: f64) {
        debug_assert!(self.agent_arms[agent].contains(&arm));
        let n = self.arm_counts[arm];
        self.arm_means[arm] = (self.arm_means[arm] * n as f64 + reward) / (n + 1) as f64;
        self.arm_counts[arm] = n + 1;
        let big_n = self.agent_counts[agent];
        self.agent_means[agent] =
            (self.agent_means[agent] * big_n as f64 + reward) / (big_n + 1) as f64;
        self.agent_counts[agent] = big_n + 1;
        self.rounds += 1;
    }

    /// The restart: zeroes every intra-agent statistic, keeps agent-level
    /// counts and means.
    pub fn restart_arm_stats(&mut self) {
        self.arm_counts.iter_mut().for_each(|c| *c = 0);
        self.arm_means.iter_mut().for_each(|m| *m = 0.0);
    }
}

/// One H-UCB decision. Agent level: unexplored-first, else argmax of
/// `μ̂_i + sqrt(c ln t / N_i)`. Arm level inside the chosen agent:
/// unexplored-first, else argmax of `μ̂_{i,a} + sqrt(c ln N_i / n_{i,a})`.
/// Ties everywhere by priority.
pub fn hucb_step(
    state: &HierPolicyState,
    cfg: &BonusConfig,
    priorities: &Priorities,
) -> Result<(usize, usize)> {
    let t = (state.rounds + 1) as f64;
    let agent = match priorities
        .agents
        .first_where(|i| state.agent_counts[i] == 0)
    {
        Some(i) => i,
        None => priorities
            .agents
            .argmax(
                |_| true,
                |i| state.agent_means[i] + cfg.bonus(t, state.agent_counts[i] as f64),
            )
            .ok_or_else(|| Error::domain("H-UCB over an empty agent set"))?,
    };
    let members = &state.agent_arms[agent];
    let arm = match priorities
        .arms
        .first_where(|a| members.contains(&a) && state.arm_counts[a] == 0)
    {
        Some(a) => a,
        None => {
            let n_agent = state.agent_counts[agent] as f64;
            priorities
                .arms
                .argmax(
                    |a| members.contains(&a),
                    |a| state.arm_means[a] + cfg.bonus(n_agent, state.arm_counts[a] as f64),
                )
                .expect("agent has at least one arm")
        }
    };
    Ok((agent, arm))
}

/// One hierarchical-ETC-with-restarting decision.
///
/// At round τ+1 all intra-agent statistics are zeroed first. Agent level:
/// the first agent (by priority) with fewer than `M` pulls, else the
/// empirical-best agent. Arm level inside the chosen agent: the first arm
/// (by priority) with fewer than `m` pulls, else the empirical-best arm.
pub fn hetc_step(
    state: &mut HierPolicyState,
    agent_explore: u64,
    arm_explore: u64,
    restart: u64,
    priorities: &Priorities,
) -> Result<(usize, usize)> {
    if state.num_agents() == 0 {
        return Err(Error::domain("H-ETC over an empty agent set"));
    }
    let t = state.rounds + 1;
    if t == restart + 1 {
        state.restart_arm_stats();
    }
    let agent = match priorities
        .agents
        .first_where(|i| state.agent_counts[i] < agent_explore)
    {
        Some(i) => i,
        None => priorities
            .agents
            .argmax(|_| true, |i| state.agent_means[i])
            .expect("non-empty agent set"),
    };
    let members = &state.agent_arms[agent];
    let arm = match priorities
        .arms
        .first_where(|a| members.contains(&a) && state.arm_counts[a] < arm_explore)
    {
        Some(a) => a,
        None => priorities
            .arms
            .argmax(|a| members.contains(&a), |a| state.arm_means[a])
            .expect("agent has at least one arm"),
    };
    Ok((agent, arm))
}
