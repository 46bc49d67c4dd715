//! Arm-selection policies behind one step/observe interface.
//!
//! Each algorithm keeps its own statistics and exposes a pure selection rule
//! over them; the engine owns the loop. All tie-breaking goes through
//! [`TieBreakPriority`], and the only source of randomness any policy may use
//! is the draw pair handed in by the engine (ε-greedy is the one taker), so
//! a pull sequence is reproducible bit-for-bit from (instance, tape seed,
//! priorities).

mod flat;
mod hier;

pub use flat::{
    eps_greedy_step, etc_step, pid_epoch_explore_len, pid_etc_step, ucb1_step, EtcState,
    FlatPolicyState, PidEtcState,
};
pub use hier::{hetc_step, hucb_step, HierPolicyState};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::BanditInstance;
use crate::priority::Priorities;

/// Scale `c` of the exploration bonus `sqrt(c * ln t / n)`.
///
/// The standard UCB1 index uses `c = 2`; the failure-schedule inequality is
/// written with `c = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BonusConfig {
    pub scale: f64,
}

impl BonusConfig {
    pub fn new(scale: f64) -> Result<Self> {
        if scale > 0.0 {
            Ok(Self { scale })
        } else {
            Err(Error::domain(format!("bonus scale must be positive, got {scale}")))
        }
    }

    #[inline]
    pub fn bonus(&self, t: f64, n: f64) -> f64 {
        (self.scale * t.ln() / n).sqrt()
    }
}

/// Which denominator the ε-greedy schedule divides by.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EpsMode {
    /// ε_t = min{1, ck / (d²T)}, constant over the run.
    OverT,
    /// ε_t = min{1, ck / (d²t)}, decaying with the round.
    OverRound,
}

/// ε-greedy exploration schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsSchedule {
    pub mode: EpsMode,
    pub c: f64,
    pub d: f64,
}

impl EpsSchedule {
    pub fn validate(&self) -> Result<()> {
        if self.c <= 0.0 || self.d <= 0.0 {
            return Err(Error::domain(format!(
                "eps schedule needs c > 0 and d > 0, got c={}, d={}",
                self.c, self.d
            )));
        }
        Ok(())
    }

    pub fn epsilon(&self, t: u64, k: usize, horizon: u64) -> f64 {
        let denom = match self.mode {
            EpsMode::OverT => horizon as f64,
            EpsMode::OverRound => t as f64,
        };
        (self.c * k as f64 / (self.d * self.d * denom)).min(1.0)
    }

    /// Σ_{t=k+1}^{T} ε_t: the expected number of exploration rounds after
    /// the initialization sweep.
    pub fn expected_exploration_rounds(&self, k: usize, horizon: u64) -> f64 {
        (k as u64 + 1..=horizon)
            .map(|t| self.epsilon(t, k, horizon))
            .sum()
    }
}

/// Serializable description of a configured policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PolicySpec {
    Ucb {
        scale: f64,
    },
    Etc {
        explore_len: u64,
    },
    EpsGreedy {
        mode: EpsMode,
        c: f64,
        d: f64,
    },
    PidEtc,
    HUcb {
        scale: f64,
    },
    HEtc {
        /// Phase-1 per-agent exploration budget (M).
        agent_explore: u64,
        /// Phase-2 per-arm exploration budget (m).
        arm_explore: u64,
        /// Restart round τ: intra-agent statistics are zeroed at τ+1.
        restart: u64,
    },
}

impl PolicySpec {
    pub fn name(&self) -> &'static str {
        match self {
            PolicySpec::Ucb { .. } => "ucb",
            PolicySpec::Etc { .. } => "etc",
            PolicySpec::EpsGreedy { .. } => "eps-greedy",
            PolicySpec::PidEtc => "pid-etc",
            PolicySpec::HUcb { .. } => "h-ucb",
            PolicySpec::HEtc { .. } => "h-etc",
        }
    }

    pub fn is_hierarchical(&self) -> bool {
        matches!(self, PolicySpec::HUcb { .. } | PolicySpec::HEtc { .. })
    }

    /// True when the policy consumes random draws (ε-greedy only).
    pub fn is_randomized(&self) -> bool {
        matches!(self, PolicySpec::EpsGreedy { .. })
    }
}

/// One round's choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Selection {
    pub agent: usize,
    pub arm: usize,
}

enum PolicyInner {
    Ucb {
        state: FlatPolicyState,
        cfg: BonusConfig,
    },
    Etc {
        state: EtcState,
    },
    EpsGreedy {
        state: FlatPolicyState,
        schedule: EpsSchedule,
    },
    PidEtc {
        state: PidEtcState,
    },
    HUcb {
        state: HierPolicyState,
        cfg: BonusConfig,
    },
    HEtc {
        state: HierPolicyState,
        agent_explore: u64,
        arm_explore: u64,
        restart: u64,
    },
}

/// A live policy bound to an instance and horizon.
pub struct Policy {
    inner: PolicyInner,
    owners: Vec<usize>,
    horizon: u64,
}

impl Policy {
    pub fn new(spec: &PolicySpec, instance: &BanditInstance, horizon: u64) -> Result<Policy> {
        let k = instance.len();
        let owners: Vec<usize> = instance.arms().iter().map(|a| a.owner).collect();
        let inner = match spec {
            PolicySpec::Ucb { scale } => PolicyInner::Ucb {
                state: FlatPolicyState::new(k),
                cfg: BonusConfig::new(*scale)?,
            },
            PolicySpec::Etc { explore_len } => {
                if *explore_len == 0 {
                    return Err(Error::domain("ETC exploration length must be >= 1"));
                }
                PolicyInner::Etc {
                    state: EtcState::new(k, *explore_len),
                }
            }
            PolicySpec::EpsGreedy { mode, c, d } => {
                let schedule = EpsSchedule {
                    mode: *mode,
                    c: *c,
                    d: *d,
                };
                schedule.validate()?;
                PolicyInner::EpsGreedy {
                    state: FlatPolicyState::new(k),
                    schedule,
                }
            }
            PolicySpec::PidEtc => PolicyInner::PidEtc {
                state: PidEtcState::new(k),
            },
            PolicySpec::HUcb { scale } => PolicyInner::HUcb {
                state: HierPolicyState::new(instance)?,
                cfg: BonusConfig::new(*scale)?,
            },
            PolicySpec::HEtc {
                agent_explore,
                arm_explore,
                restart,
            } => {
                // The analysis needs phase-2 exploration of a truthful
                // registration to finish inside phase-1 exploration, so the
                // budget is validated against original arm counts; strategic
                // replicas beyond it are the replicator's own problem.
                let max_originals = (0..instance.num_agents())
                    .map(|i| instance.originals_of_agent(i))
                    .max()
                    .unwrap_or(0) as u64;
                if *arm_explore == 0 || *agent_explore == 0 {
                    return Err(Error::domain("H-ETC exploration budgets must be >= 1"));
                }
                if *agent_explore < *arm_explore * max_originals {
                    return Err(Error::config(format!(
                        "H-ETC needs M >= m * (max originals per agent): M={}, m={}, originals={}",
                        agent_explore, arm_explore, max_originals
                    )));
                }
                PolicyInner::HEtc {
                    state: HierPolicyState::new(instance)?,
                    agent_explore: *agent_explore,
                    arm_explore: *arm_explore,
                    restart: *restart,
                }
            }
        };
        Ok(Policy {
            inner,
            owners,
            horizon,
        })
    }

    pub fn is_randomized(&self) -> bool {
        matches!(self.inner, PolicyInner::EpsGreedy { .. })
    }

    /// Selects the arm for the next round. `draws` feeds ε-greedy's coin and
    /// pick; deterministic policies ignore it.
    pub fn select(&mut self, priorities: &Priorities, draws: Option<[f64; 2]>) -> Result<Selection> {
        let arm_priority = &priorities.arms;
        let selection = match &mut self.inner {
            PolicyInner::Ucb { state, cfg } => {
                let arm = ucb1_step(state, cfg, arm_priority)?;
                Selection {
                    agent: self.owners[arm],
                    arm,
                }
            }
            PolicyInner::Etc { state } => {
                let arm = etc_step(state, arm_priority)?;
                Selection {
                    agent: self.owners[arm],
                    arm,
                }
            }
            PolicyInner::EpsGreedy { state, schedule } => {
                let draws = draws.ok_or_else(|| {
                    Error::domain("eps-greedy needs random draws; deterministic trace is undefined")
                })?;
                let arm = eps_greedy_step(state, schedule, draws, arm_priority, self.horizon)?;
                Selection {
                    agent: self.owners[arm],
                    arm,
                }
            }
            PolicyInner::PidEtc { state } => {
                let arm = pid_etc_step(state, arm_priority)?;
                Selection {
                    agent: self.owners[arm],
                    arm,
                }
            }
            PolicyInner::HUcb { state, cfg } => {
                let (agent, arm) = hucb_step(state, cfg, priorities)?;
                Selection { agent, arm }
            }
            PolicyInner::HEtc {
                state,
                agent_explore,
                arm_explore,
                restart,
            } => {
                let (agent, arm) =
                    hetc_step(state, *agent_explore, *arm_explore, *restart, priorities)?;
                Selection { agent, arm }
            }
        };
        Ok(selection)
    }

    /// Feeds the realized reward back into the policy's statistics.
    pub fn observe(&mut self, selection: Selection, reward: f64) {
        match &mut self.inner {
            PolicyInner::Ucb { state, .. } => state.record(selection.arm, reward),
            PolicyInner::Etc { state } => state.record(selection.arm, reward),
            PolicyInner::EpsGreedy { state, .. } => state.record(selection.arm, reward),
            PolicyInner::PidEtc { state } => state.record(selection.arm, reward),
            PolicyInner::HUcb { state, .. } => state.record(selection.agent, selection.arm, reward),
            PolicyInner::HEtc { state, .. } => state.record(selection.agent, selection.arm, reward),
        }
    }
}
