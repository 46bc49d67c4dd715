//! A simulation and verification lab for replication-proof multi-armed
//! bandit mechanisms.
//!
//! Agents register arms with a bandit platform and may replicate them;
//! replicas share the original's mean but draw fresh rewards. The platform
//! pays each agent an α-share of the reward its arms produce, and measures
//! itself against the best *original* arm. This crate implements the
//! mechanism's policies (UCB1, ETC, ε-greedy, prior-independent ETC, H-UCB,
//! and hierarchical ETC with restarting), exact and Monte-Carlo evaluation
//! of regret and ex-ante utilities over discrete priors, and mechanical
//! checkers that certify or refute the incentive properties:
//!
//! - **TRP**, truthfulness under random permutation: replicating never
//!   lowers the permutation-averaged regret.
//! - **PI**, permutation invariance of a policy's choices under arm
//!   relabeling.
//! - **Replication-proofness**: truthful registration is a best response
//!   within a finite strategy budget.
//! - The explicit failure constructions for UCB1 and H-UCB, and the
//!   pull-count, misselection, regret-scaling, and ε-greedy closed-form
//!   bounds.
//!
//! Everything is reproducible: rewards come off counter-based tapes, ties
//! break by explicit priority, and every checker returns a [`checkers::Certificate`]
//! that re-verifies from its own payload.

pub mod checkers;
pub mod counterexamples;
pub mod engine;
pub mod error;
pub mod instance;
pub mod metrics;
pub mod perm;
pub mod policies;
pub mod prior;
pub mod priority;
pub mod tape;

pub use engine::{
    coupled_runs, estimate_expectation, run_deterministic_trace, run_episode, EstimateCI, Round,
    RunSpec, Trajectory,
};
pub use error::{Error, Result};
pub use instance::{
    build_multi_agent_instance, build_registered_instance, dictionary_form, permute_instance,
    AgentSpec, ArmSpec, BanditInstance, DictionaryForm, ReplicationVector, RewardModel,
};
pub use metrics::{
    agent_utilities, ex_ante_utility, ex_ante_utility_multi, expost_regret, rp_regret, Estimate,
    EvalMode, UtilityReport,
};
pub use perm::{enumerate_permutations, Permutation, MAX_ENUM_LEN};
pub use policies::{BonusConfig, EpsMode, EpsSchedule, Policy, PolicySpec, Selection};
pub use prior::DiscretePrior;
pub use priority::{Priorities, TieBreakPriority};
pub use tape::{RewardTape, TapeKey};
