//! Replication-proofness by finite best-response search.
//!
//! The claim quantifies over all strategies; the search covers ‖r‖₁ up to a
//! budget and says so: a clean result reads "no deviation within budget",
//! never "replication-proof" unconditionally.

use serde::{Deserialize, Serialize};

use crate::checkers::Certificate;
use crate::error::{Error, Result};
use crate::instance::{ReplicationVector, RewardModel};
use crate::instance::AgentSpec;
use crate::metrics::{ex_ante_utility_multi, EvalMode};
use crate::policies::PolicySpec;
use crate::prior::DiscretePrior;

/// One (policy, horizon) pair to evaluate; hierarchical policies carry
/// horizon-dependent parameters, so each horizon gets its own spec.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RpCase {
    pub policy: PolicySpec,
    pub horizon: u64,
}

/// A fixed opponent: its prior, arm count, and the strategy profiles to
/// quantify over.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpponentSetup {
    pub prior: DiscretePrior,
    pub originals: usize,
    pub strategies: Vec<ReplicationVector>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RpCheckConfig {
    pub cases: Vec<RpCase>,
    /// The agent under scrutiny (always agent 0 of the built instances).
    pub prior: DiscretePrior,
    pub originals: usize,
    /// Fixed opponents (empty for the single-agent setting).
    pub opponents: Vec<OpponentSetup>,
    /// Strategy budget: all r with 1 ≤ ‖r‖₁ ≤ r_max are candidates.
    pub r_max: usize,
    pub alpha: f64,
    pub model: RewardModel,
    pub mode: EvalMode,
}

/// One evaluated deviation candidate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RpRow {
    pub case: usize,
    pub opponent_profile: Vec<Vec<usize>>,
    pub r: Vec<usize>,
    pub utility: f64,
    pub truthful_utility: f64,
    /// utility − truthful (positive = profitable deviation).
    pub gap: f64,
    pub half_width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RpReport {
    pub config: RpCheckConfig,
    pub rows: Vec<RpRow>,
    /// Strongest confirmed deviation, if any.
    pub best_deviation: Option<RpRow>,
}

fn opponent_profiles(opponents: &[OpponentSetup]) -> Vec<Vec<ReplicationVector>> {
    let mut profiles: Vec<Vec<ReplicationVector>> = vec![Vec::new()];
    for opp in opponents {
        let mut next = Vec::new();
        for profile in &profiles {
            for strat in &opp.strategies {
                let mut extended = profile.clone();
                extended.push(strat.clone());
                next.push(extended);
            }
        }
        profiles = next;
    }
    profiles
}

/// Compares the focus agent's ex-ante utility of every candidate strategy
/// against truthful registration, for each case and opponent profile.
pub fn check_replication_proof(config: &RpCheckConfig) -> Result<Certificate> {
    if config.cases.is_empty() {
        return Err(Error::config("no (policy, horizon) cases to check"));
    }
    for opp in &config.opponents {
        if opp.strategies.is_empty() {
            return Err(Error::config("every opponent needs at least one strategy"));
        }
        for s in &opp.strategies {
            if s.len() != opp.originals {
                return Err(Error::config(
                    "opponent strategy length does not match its originals",
                ));
            }
        }
    }
    let candidates: Vec<ReplicationVector> = ReplicationVector::enumerate(config.originals, config.r_max)
        .into_iter()
        .filter(|r| !r.is_truthful())
        .collect();
    let profiles = opponent_profiles(&config.opponents);

    let mut rows = Vec::new();
    let mut best: Option<RpRow> = None;
    let mut any_inconclusive = false;
    for (case_idx, case) in config.cases.iter().enumerate() {
        for profile in &profiles {
            let setup_for = |r: &ReplicationVector| -> Vec<AgentSpec> {
                let mut agents = vec![AgentSpec {
                    prior: config.prior.clone(),
                    num_originals: config.originals,
                    replication: r.clone(),
                }];
                for (opp, strat) in config.opponents.iter().zip(profile) {
                    agents.push(AgentSpec {
                        prior: opp.prior.clone(),
                        num_originals: opp.originals,
                        replication: strat.clone(),
                    });
                }
                agents
            };
            let truthful = ex_ante_utility_multi(
                &setup_for(&ReplicationVector::truthful(config.originals)),
                0,
                &case.policy,
                case.horizon,
                config.alpha,
                config.model,
                &config.mode,
            )?;
            for r in &candidates {
                let est = ex_ante_utility_multi(
                    &setup_for(r),
                    0,
                    &case.policy,
                    case.horizon,
                    config.alpha,
                    config.model,
                    &config.mode,
                )?;
                let gap = est.value() - truthful.value();
                let sigma = (truthful.half_width() / 1.96).hypot(est.half_width() / 1.96);
                let half_width = 1.96 * sigma;
                let row = RpRow {
                    case: case_idx,
                    opponent_profile: profile.iter().map(|p| p.0.clone()).collect(),
                    r: r.0.clone(),
                    utility: est.value(),
                    truthful_utility: truthful.value(),
                    gap,
                    half_width,
                };
                let confirmed = match config.mode {
                    EvalMode::Exact => gap > 0.0,
                    EvalMode::Mc { .. } => gap > 3.0 * sigma,
                };
                if confirmed {
                    if best.as_ref().is_none_or(|b| gap > b.gap) {
                        best = Some(row.clone());
                    }
                } else if matches!(config.mode, EvalMode::Mc { .. }) && gap > 0.0 {
                    any_inconclusive = true;
                }
                rows.push(row);
            }
        }
    }
    let report = RpReport {
        config: config.clone(),
        rows,
        best_deviation: best.clone(),
    };
    if best.is_some() {
        Ok(Certificate::BestResponseDeviation(report))
    } else if any_inconclusive {
        Ok(Certificate::RpInconclusive(report))
    } else {
        Ok(Certificate::NoDeviationFound(report))
    }
}
