//! Explicit failure instances for UCB and H-UCB.
//!
//! The UCB construction plays three deterministic instances against each
//! other: A = (1,0) (truthful), B = (1,0,1′) (the good arm replicated) and
//! C = (1,0,0′) (the bad arm replicated). A horizon T witnesses the failure
//! when Reg_A(T) > (Reg_B(T) + Reg_C(T))/2 AND the exact ex-ante utility of
//! replicating under the uniform {0,1} prior strictly beats truthful at T.
//! Every asserted value is produced by exact simulation, never assumed: the
//! run-length schedule's predicted anchor T = s₁+s₂+2 is checked first and
//! a horizon scan takes over when the exact traces disagree with it.

use serde::{Deserialize, Serialize};

use crate::checkers::Certificate;
use crate::engine::{run_deterministic_trace, RunSpec};
use crate::error::{Error, Result};
use crate::instance::{build_registered_instance, ReplicationVector, RewardModel};
use crate::metrics::{ex_ante_utility, EvalMode};
use crate::policies::PolicySpec;
use crate::prior::DiscretePrior;

/// Upward-scan cap for a single run-length entry.
const RUN_LENGTH_SCAN_CAP: u64 = 10_000_000;

/// Default horizon-scan cap for the failure certificate.
pub const UCB_WITNESS_SCAN_CAP: u64 = 100_000;

/// The schedule s₁ = 1, s_i = min{s : 1 + √(c·ln(s+i)/s) < √(c·ln(s+i)/i)}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunLengthSchedule {
    pub scale: f64,
    pub entries: Vec<u64>,
}

impl RunLengthSchedule {
    pub fn s(&self, i: usize) -> u64 {
        self.entries[i - 1]
    }
}

fn schedule_inequality(scale: f64, s: u64, i: u64) -> bool {
    let log_term = scale * ((s + i) as f64).ln();
    1.0 + (log_term / s as f64).sqrt() < (log_term / i as f64).sqrt()
}

/// Computes s₁..s_{i_max} by integer scan, verifying minimality of each
/// entry (the predecessor must fail the defining inequality).
pub fn ucb_run_lengths(i_max: usize, scale: f64) -> Result<RunLengthSchedule> {
    if i_max < 2 {
        return Err(Error::domain("schedule needs i_max >= 2"));
    }
    if scale <= 0.0 {
        return Err(Error::domain("bonus scale must be positive"));
    }
    let mut entries = vec![1u64];
    for i in 2..=i_max as u64 {
        let mut s = 1u64;
        loop {
            if schedule_inequality(scale, s, i) {
                break;
            }
            s += 1;
            if s > RUN_LENGTH_SCAN_CAP {
                return Err(Error::SearchExhausted(format!(
                    "no run length below {RUN_LENGTH_SCAN_CAP} for i = {i}, c = {scale}"
                )));
            }
        }
        debug_assert!(s == 1 || !schedule_inequality(scale, s - 1, i));
        entries.push(s);
    }
    Ok(RunLengthSchedule { scale, entries })
}

/// Exact regrets of the three counterexample instances at every horizon up
/// to `cap`: returns (zero-pull rounds of A, B, C) where "zero pull" means a
/// pull of any mean-0 arm.
fn zero_pull_rounds(scale: f64, cap: u64) -> Result<[Vec<u64>; 3]> {
    let policy = PolicySpec::Ucb { scale };
    let make = |r: &[usize]| {
        build_registered_instance(
            &[1.0, 0.0],
            &ReplicationVector(r.to_vec()),
            RewardModel::Deterministic,
        )
    };
    let instances = [make(&[0, 0])?, make(&[1, 0])?, make(&[0, 1])?];
    let mut out: [Vec<u64>; 3] = [vec![], vec![], vec![]];
    for (idx, instance) in instances.iter().enumerate() {
        let spec = RunSpec::new(instance.clone(), policy.clone(), cap);
        let traj = run_deterministic_trace(&spec)?;
        out[idx] = traj
            .rounds()
            .iter()
            .filter(|r| instance.mean(r.arm) == 0.0)
            .map(|r| r.t)
            .collect();
    }
    Ok(out)
}

fn regret_at(zero_rounds: &[u64], horizon: u64) -> u64 {
    zero_rounds.iter().filter(|&&t| t <= horizon).count() as u64
}

/// The witnessing horizon and its exact regret triple.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UcbWitness {
    pub horizon: u64,
    /// (Reg_A, Reg_B, Reg_C) from exact traces.
    pub regrets: [u64; 3],
    /// Reg_A − (Reg_B + Reg_C)/2, strictly positive.
    pub rp_margin: f64,
    /// ex_ante(replicate arm 1) − ex_ante(truthful) at this horizon, under
    /// the uniform {0,1} prior with l = 2; strictly positive.
    pub utility_gap: f64,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UcbFailureReport {
    pub scale: f64,
    pub schedule: Vec<u64>,
    /// s₁ + s₂ + 2, where the run-length model predicts the failure.
    pub anchor_horizon: u64,
    /// Exact regret triple at the anchor.
    pub anchor_regrets: [u64; 3],
    /// True when the anchor itself already witnesses the predicted triple.
    pub anchor_witnesses: bool,
    pub witness: UcbWitness,
    pub search_cap: u64,
    pub alpha: f64,
}

/// Exact ex-ante utility gap of replicating the first arm vs truthful,
/// uniform {0,1} prior, two originals, at the given horizon.
pub fn ucb_exante_gap(scale: f64, horizon: u64, alpha: f64) -> Result<f64> {
    let prior = DiscretePrior::uniform(vec![0.0, 1.0])?;
    let policy = PolicySpec::Ucb { scale };
    let replicate = ex_ante_utility(
        &prior,
        2,
        &ReplicationVector(vec![1, 0]),
        &policy,
        horizon,
        alpha,
        RewardModel::Bernoulli,
        &EvalMode::Exact,
    )?;
    let truthful = ex_ante_utility(
        &prior,
        2,
        &ReplicationVector::truthful(2),
        &policy,
        horizon,
        alpha,
        RewardModel::Bernoulli,
        &EvalMode::Exact,
    )?;
    Ok(replicate.value() - truthful.value())
}

/// Produces the single-agent UCB failure certificate for the given bonus
/// scale, or reports the search exhausted.
///
/// The anchor T = s₁+s₂+2 is tried first. If its exact traces do not give
/// the predicted (2, 1, 2) triple with a strict violation, horizons up to
/// `search_cap` are scanned; a horizon matching the predicted triple is
/// preferred, else the first strict violation (in both the regret average
/// and the exact ex-ante utility) is certified.
pub fn ucb_failure_certificate_with(
    scale: f64,
    search_cap: u64,
    alpha: f64,
) -> Result<Certificate> {
    let schedule = ucb_run_lengths(2, scale)?;
    let anchor = schedule.s(1) + schedule.s(2) + 2;
    let cap = search_cap.max(anchor);
    let zero = zero_pull_rounds(scale, cap)?;
    let triple =
        |t: u64| -> [u64; 3] { [regret_at(&zero[0], t), regret_at(&zero[1], t), regret_at(&zero[2], t)] };
    let margin = |r: [u64; 3]| r[0] as f64 - (r[1] + r[2]) as f64 / 2.0;

    let anchor_regrets = triple(anchor);
    let anchor_witnesses = anchor_regrets == [2, 1, 2] && margin(anchor_regrets) > 0.0;

    let mut predicted_shape: Option<u64> = None;
    let mut first_violation: Option<u64> = None;
    for t in 1..=cap {
        let r = triple(t);
        if margin(r) > 0.0 && ucb_exante_gap(scale, t, alpha)? > 0.0 {
            if first_violation.is_none() {
                first_violation = Some(t);
            }
            if r == [2, 1, 2] {
                predicted_shape = Some(t);
                break;
            }
        }
    }
    let Some(horizon) = predicted_shape.or(first_violation) else {
        return Err(Error::SearchExhausted(format!(
            "no witnessing horizon up to {cap} for bonus scale {scale}: the exact traces \
             never put Reg_A strictly above the replicated average (anchor T={anchor} gave \
             {anchor_regrets:?})"
        )));
    };
    let regrets = triple(horizon);
    let witness = UcbWitness {
        horizon,
        regrets,
        rp_margin: margin(regrets),
        utility_gap: ucb_exante_gap(scale, horizon, alpha)?,
        alpha,
    };
    Ok(Certificate::UcbFailure(UcbFailureReport {
        scale,
        schedule: schedule.entries,
        anchor_horizon: anchor,
        anchor_regrets,
        anchor_witnesses,
        witness,
        search_cap: cap,
        alpha,
    }))
}

/// [`ucb_failure_certificate_with`] at the default scan cap and α = 1/2.
pub fn ucb_failure_certificate(scale: f64) -> Result<Certificate> {
    ucb_failure_certificate_with(scale, UCB_WITNESS_SCAN_CAP, 0.5)
}

/// A deviation point found by the H-UCB grid search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HucbHit {
    /// Opponent's deterministic mean.
    pub opponent_mean: f64,
    pub horizon: u64,
    /// ex_ante(replicate arm 1) − ex_ante(truthful), strictly positive.
    pub utility_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HucbSearchReport {
    /// High support value of the focal agent's prior (uniform on {0, c}).
    pub prior_high: f64,
    pub grid_step: f64,
    pub horizon_cap: u64,
    pub alpha: f64,
    pub hit: Option<HucbHit>,
}

/// Searches an opponent-mean grid and all horizons up to the cap for a
/// strict ex-ante gain from replicating, under H-UCB with the standard
/// bonus. Agent 0 has two deterministic arms drawn uniformly from {0, c};
/// agent 1 has one deterministic arm of mean μ. Exhausting the grid is a
/// valid outcome and is reported, not an error.
pub fn hucb_failure_search(
    prior_high: f64,
    grid_step: f64,
    horizon_cap: u64,
    alpha: f64,
) -> Result<Certificate> {
    if !(0.0 < prior_high && prior_high <= 1.0) {
        return Err(Error::domain("prior high value must lie in (0, 1]"));
    }
    if !(grid_step > 0.0 && grid_step < 1.0) {
        return Err(Error::domain("grid step must lie in (0, 1)"));
    }
    if horizon_cap == 0 {
        return Err(Error::domain("horizon cap must be at least 1"));
    }
    let policy = PolicySpec::HUcb { scale: 2.0 };
    let realizations = [
        (prior_high, prior_high),
        (prior_high, 0.0),
        (0.0, prior_high),
        (0.0, 0.0),
    ];
    let mut hit = None;
    let mut mu = grid_step;
    'grid: while mu < 1.0 - 1e-12 {
        // cumulative focus-agent utility per horizon, truthful vs replicated
        let mut cum_truthful = vec![0.0f64; horizon_cap as usize + 1];
        let mut cum_replicate = vec![0.0f64; horizon_cap as usize + 1];
        for &(v1, v2) in &realizations {
            for (r, cum) in [
                (vec![0usize, 0], &mut cum_truthful),
                (vec![1, 0], &mut cum_replicate),
            ] {
                let instance = crate::instance::build_multi_agent_instance(
                    &[
                        (vec![v1, v2], ReplicationVector(r)),
                        (vec![mu], ReplicationVector(vec![0])),
                    ],
                    RewardModel::Deterministic,
                )?;
                let spec = RunSpec::new(instance, policy.clone(), horizon_cap);
                let traj = run_deterministic_trace(&spec)?;
                let mut acc = 0.0;
                for round in traj.rounds() {
                    if round.agent == 0 {
                        acc += round.reward;
                    }
                    cum[round.t as usize] += acc * alpha / 4.0;
                }
            }
        }
        for t in 1..=horizon_cap as usize {
            let gap = cum_replicate[t] - cum_truthful[t];
            if gap > 1e-12 {
                hit = Some(HucbHit {
                    opponent_mean: mu,
                    horizon: t as u64,
                    utility_gap: gap,
                });
                break 'grid;
            }
        }
        mu += grid_step;
    }
    let report = HucbSearchReport {
        prior_high,
        grid_step,
        horizon_cap,
        alpha,
        hit,
    };
    if report.hit.is_some() {
        Ok(Certificate::HucbDeviation(report))
    } else {
        Ok(Certificate::HucbNoneFound(report))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_first_entry_is_one_and_entries_grow() {
        let s = ucb_run_lengths(4, 1.0).unwrap();
        assert_eq!(s.s(1), 1);
        for i in 2..=4 {
            assert!(s.s(i) > s.s(i - 1));
            assert!(s.s(i) >= i as u64);
            // minimality: the predecessor fails the inequality
            assert!(!schedule_inequality(1.0, s.s(i) - 1, i as u64));
            assert!(schedule_inequality(1.0, s.s(i), i as u64));
        }
    }

    #[test]
    fn schedule_c1_entries() {
        let s = ucb_run_lengths(3, 1.0).unwrap();
        assert_eq!(s.entries, vec![1, 33, 89]);
    }

    #[test]
    fn schedule_c2_entries() {
        let s = ucb_run_lengths(3, 2.0).unwrap();
        assert_eq!(s.entries, vec![1, 13, 27]);
    }

    // Exact zero-arm pull rounds on instance A under c = 1 and c = 2; these
    // are the true traces the run-length model approximates. Frozen from an
    // independent round-by-round replay of the index computation.
    #[test]
    fn zero_pull_rounds_on_a_match_replay() {
        let z1 = zero_pull_rounds(1.0, 100).unwrap();
        assert_eq!(z1[0], vec![2, 11, 36, 92]);
        let z2 = zero_pull_rounds(2.0, 100).unwrap();
        assert_eq!(z2[0], vec![2, 7, 16, 31, 53, 86]);
    }

    #[test]
    fn ucb_failure_c2_matches_predicted_triple() {
        let cert = ucb_failure_certificate(2.0).unwrap();
        let Certificate::UcbFailure(report) = cert else {
            panic!("expected UcbFailure")
        };
        assert_eq!(report.witness.regrets, [2, 1, 2]);
        assert_eq!(report.witness.horizon, 7);
        assert!((report.witness.rp_margin - 0.5).abs() < 1e-12);
        // u(S) − u(O) = α(Reg_A − (Reg_B+Reg_C)/2)/2 = α/4
        assert!((report.witness.utility_gap - 0.5 * 0.25).abs() < 1e-12);
    }

    #[test]
    fn ucb_failure_c1_search_exhausts() {
        // Under the exact dynamics with consistent instance construction and
        // priority tie-breaking, the c = 1 schedule's predicted failure does
        // not materialize at any horizon.
        let err = ucb_failure_certificate_with(1.0, 3_000, 0.5);
        assert!(matches!(err, Err(Error::SearchExhausted(_))));
    }

    #[test]
    fn hucb_search_finds_deviation_on_coarse_grid() {
        let cert = hucb_failure_search(1.0, 0.25, 60, 0.5).unwrap();
        let Certificate::HucbDeviation(report) = cert else {
            panic!("expected a deviation")
        };
        let hit = report.hit.unwrap();
        assert!(hit.utility_gap > 0.0);
        assert!(hit.horizon <= 60);
    }
}
