//! Flat (single-level) policies: UCB1, ETC, ε-greedy, prior-independent ETC.

use crate::error::{Error, Result};
use crate::policies::{BonusConfig, EpsSchedule};
use crate::priority::TieBreakPriority;

/// Per-arm pull counts and empirical means, plus the round counter.
#[derive(Debug, Clone, PartialEq)]
pub struct FlatPolicyState {
    counts: Vec<u64>,
    means: Vec<f64>,
    rounds: u64,
}

impl FlatPolicyState {
    pub fn new(num_arms: usize) -> Self {
        Self {
            counts: vec![0; num_arms],
            means: vec![0.0; num_arms],
            rounds: 0,
        }
    }

    pub fn num_arms(&self) -> usize {
        self.counts.len()
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn count(&self, arm: usize) -> u64 {
        self.counts[arm]
    }

    pub fn mean(&self, arm: usize) -> f64 {
        self.means[arm]
    }

    /// Completed rounds; equals Σ_a n_a.
    pub fn rounds(&self) -> u64 {
        self.rounds
    }

    pub fn record(&mut self, arm: usize, reward: f64) {
        let n = self.counts[arm];
        self.means[arm] = (self.means[arm] * n as f64 + reward) / (n + 1) as f64;
        self.counts[arm] = n + 1;
        self.rounds += 1;
    }

    pub fn reset(&mut self) {
        self.counts.iter_mut().for_each(|c| *c = 0);
        self.means.iter_mut().for_each(|m| *m = 0.0);
        self.rounds = 0;
    }

    /// Highest empirical mean, ties by priority.
    fn argmax_mean(&self, priority: &TieBreakPriority) -> usize {
        priority
            .argmax(|_| true, |a| self.means[a])
            .expect("non-empty arm set")
    }
}

/// One UCB1 decision: an unpulled arm first (by priority), else the argmax of
/// `μ̂_a + sqrt(c ln t / n_a)` with `t` the current round, ties by priority.
pub fn ucb1_step(
    state: &FlatPolicyState,
    cfg: &BonusConfig,
    priority: &TieBreakPriority,
) -> Result<usize> {
    if state.num_arms() == 0 {
        return Err(Error::domain("UCB over an empty arm set"));
    }
    if let Some(arm) = priority.first_where(|a| state.counts[a] == 0) {
        return Ok(arm);
    }
    let t = (state.rounds + 1) as f64;
    Ok(priority
        .argmax(|_| true, |a| state.means[a] + cfg.bonus(t, state.counts[a] as f64))
        .expect("non-empty arm set"))
}

/// ETC with a frozen commit: the exploitation arm is chosen once, at the
/// first round after every arm has its `m` pulls, and never re-evaluated.
#[derive(Debug, Clone, PartialEq)]
pub struct EtcState {
    state: FlatPolicyState,
    explore_len: u64,
    committed: Option<usize>,
}

impl EtcState {
    pub fn new(num_arms: usize, explore_len: u64) -> Self {
        Self {
            state: FlatPolicyState::new(num_arms),
            explore_len,
            committed: None,
        }
    }

    pub fn state(&self) -> &FlatPolicyState {
        &self.state
    }

    pub fn committed(&self) -> Option<usize> {
        self.committed
    }

    pub fn record(&mut self, arm: usize, reward: f64) {
        self.state.record(arm, reward);
    }
}

/// One ETC decision: round-robin in priority order (least-pulled first)
/// until every arm has `m` pulls, then the frozen empirical-best arm.
pub fn etc_step(etc: &mut EtcState, priority: &TieBreakPriority) -> Result<usize> {
    if etc.state.num_arms() == 0 {
        return Err(Error::domain("ETC over an empty arm set"));
    }
    let min_count = *etc.state.counts.iter().min().unwrap();
    if min_count < etc.explore_len {
        return Ok(priority
            .argmax(|a| etc.state.counts[a] == min_count, |_| 0.0)
            .expect("some arm at the minimum count"));
    }
    if etc.committed.is_none() {
        etc.committed = Some(etc.state.argmax_mean(priority));
    }
    Ok(etc.committed.unwrap())
}

/// One ε-greedy decision. The first `k` rounds sweep the arms in priority
/// order; afterwards `draws[0]` is the exploration coin against ε_t and
/// `draws[1]` picks uniformly, from all arms when exploring and from the
/// empirical-argmax set (in priority order) when exploiting.
pub fn eps_greedy_step(
    state: &FlatPolicyState,
    schedule: &EpsSchedule,
    draws: [f64; 2],
    priority: &TieBreakPriority,
    horizon: u64,
) -> Result<usize> {
    let k = state.num_arms();
    if k == 0 {
        return Err(Error::domain("eps-greedy over an empty arm set"));
    }
    let t = state.rounds + 1;
    if t <= k as u64 {
        return Ok(priority.ranked()[(t - 1) as usize]);
    }
    let eps = schedule.epsilon(t, k, horizon);
    let pick = |set: &[usize], u: f64| -> usize {
        let idx = ((u * set.len() as f64) as usize).min(set.len() - 1);
        set[idx]
    };
    if draws[0] < eps {
        return Ok(pick(priority.ranked(), draws[1]));
    }
    let best = state
        .means
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    let argmax: Vec<usize> = priority
        .ranked()
        .iter()
        .copied()
        .filter(|&a| state.means[a] == best)
        .collect();
    Ok(pick(&argmax, draws[1]))
}

/// Exploration length of the doubling epoch with simulated horizon `2^i`:
/// `⌊ln⁴(2^i)⌋`, clamped to at least 1 so tiny epochs stay well-defined.
pub fn pid_epoch_explore_len(epoch: u32) -> u64 {
    let ln_t = (epoch as f64) * std::f64::consts::LN_2;
    (ln_t.powi(4).floor() as u64).max(1)
}

/// Prior-independent ETC: doubling epochs, each a fresh ETC run with
/// `m = max(1, ⌊ln⁴ T⌋)` for the epoch's simulated horizon `T = 2^i`.
/// All statistics (and the commit) reset at every epoch boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct PidEtcState {
    state: FlatPolicyState,
    committed: Option<usize>,
    epoch: u32,
    global_rounds: u64,
}

impl PidEtcState {
    pub fn new(num_arms: usize) -> Self {
        Self {
            state: FlatPolicyState::new(num_arms),
            committed: None,
            epoch: 1,
            global_rounds: 0,
        }
    }

    pub fn state(&self) -> &FlatPolicyState {
        &self.state
    }

    pub fn epoch(&self) -> u32 {
        self.epoch
    }

    pub fn record(&mut self, arm: usize, reward: f64) {
        self.state.record(arm, reward);
        self.global_rounds += 1;
    }
}

pub fn pid_etc_step(pid: &mut PidEtcState, priority: &TieBreakPriority) -> Result<usize> {
    if pid.state.num_arms() == 0 {
        return Err(Error::domain("pid-ETC over an empty arm set"));
    }
    let t = pid.global_rounds + 1;
    while t > (1u64 << pid.epoch) {
        pid.epoch += 1;
        pid.state.reset();
        pid.committed = None;
    }
    let m = pid_epoch_explore_len(pid.epoch);
    let min_count = *pid.state.counts.iter().min().unwrap();
    if min_count < m {
        return Ok(priority
            .argmax(|a| pid.state.counts[a] == min_count, |_| 0.0)
            .expect("some arm at the minimum count"));
    }
    if pid.committed.is_none() {
        pid.committed = Some(pid.state.argmax_mean(priority));
    }
    Ok(pid.committed.unwrap())
}
