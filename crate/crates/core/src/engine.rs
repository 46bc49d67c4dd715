//! Episode execution and expectation estimation.
//!
//! An episode is an exact, reproducible interaction between one policy and
//! one realized instance: rewards come off a counter-based tape, tie-breaks
//! off explicit priorities, so the full pull sequence is a pure function of
//! (instance, policy, tape seed, priorities). Expectations are estimated
//! over derived per-replication seeds with a deterministic reduction, which
//! makes results independent of worker count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::BanditInstance;
use crate::policies::{Policy, PolicySpec};
use crate::priority::Priorities;
use crate::tape::RewardTape;

/// One executed round.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Round {
    pub t: u64,
    pub agent: usize,
    pub arm: usize,
    pub reward: f64,
}

/// A full per-round record of one episode.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    rounds: Vec<Round>,
    horizon: u64,
    instance: BanditInstance,
}

impl Trajectory {
    pub fn rounds(&self) -> &[Round] {
        &self.rounds
    }

    pub fn horizon(&self) -> u64 {
        self.horizon
    }

    pub fn instance(&self) -> &BanditInstance {
        &self.instance
    }

    /// Pulls per arm over the whole horizon.
    pub fn pull_counts(&self) -> Vec<u64> {
        let mut counts = vec![0u64; self.instance.len()];
        for r in &self.rounds {
            counts[r.arm] += 1;
        }
        counts
    }

    /// Sum of realized rewards.
    pub fn total_reward(&self) -> f64 {
        self.rounds.iter().map(|r| r.reward).sum()
    }
}

/// Everything needed to reproduce an episode except the tape seed.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub instance: BanditInstance,
    pub policy: PolicySpec,
    pub horizon: u64,
    pub priorities: Priorities,
}

impl RunSpec {
    pub fn new(instance: BanditInstance, policy: PolicySpec, horizon: u64) -> Self {
        let priorities = Priorities::identity(&instance);
        Self {
            instance,
            policy,
            horizon,
            priorities,
        }
    }

    pub fn with_priorities(mut self, priorities: Priorities) -> Self {
        self.priorities = priorities;
        self
    }
}

/// Runs one tape-driven episode.
///
/// The reward of arm `a`'s p-th pull is `1{u < mean}` for Bernoulli and the
/// mean itself for deterministic arms, where `u` is the tape's uniform at
/// that arm's stream position. ε-greedy's coin and pick come off a separate
/// per-round policy stream of the same tape.
pub fn run_episode(spec: &RunSpec, tape: &RewardTape) -> Result<Trajectory> {
    if spec.horizon == 0 {
        return Err(Error::domain("horizon must be at least 1"));
    }
    if !spec.instance.is_realized() {
        return Err(Error::domain("episode needs a realized instance"));
    }
    let mut policy = Policy::new(&spec.policy, &spec.instance, spec.horizon)?;
    let randomized = policy.is_randomized();
    let mut pulls = vec![0u64; spec.instance.len()];
    let mut rounds = Vec::with_capacity(spec.horizon as usize);
    for t in 1..=spec.horizon {
        let draws = randomized.then(|| [tape.policy_uniform(t, 0), tape.policy_uniform(t, 1)]);
        let sel = policy.select(&spec.priorities, draws)?;
        let arm = &spec.instance.arms()[sel.arm];
        let u = tape.uniform(arm.tape_key(pulls[sel.arm]));
        let reward = arm.reward(u);
        pulls[sel.arm] += 1;
        policy.observe(sel, reward);
        rounds.push(Round {
            t,
            agent: sel.agent,
            arm: sel.arm,
            reward,
        });
    }
    Ok(Trajectory {
        rounds,
        horizon: spec.horizon,
        instance: spec.instance.clone(),
    })
}

/// Tape-free exact trace for instances whose every arm pays its mean with
/// certainty and policies with no internal randomness. Identical to
/// `run_episode` under any tape for eligible inputs.
pub fn run_deterministic_trace(spec: &RunSpec) -> Result<Trajectory> {
    if spec.horizon == 0 {
        return Err(Error::domain("horizon must be at least 1"));
    }
    if spec.policy.is_randomized() {
        return Err(Error::domain(
            "deterministic trace is undefined for a randomized policy",
        ));
    }
    if !spec.instance.all_deterministic() {
        return Err(Error::domain(
            "deterministic trace needs deterministic (or mean-0/1 Bernoulli) arms",
        ));
    }
    let mut policy = Policy::new(&spec.policy, &spec.instance, spec.horizon)?;
    let mut rounds = Vec::with_capacity(spec.horizon as usize);
    for t in 1..=spec.horizon {
        let sel = policy.select(&spec.priorities, None)?;
        let reward = spec.instance.mean(sel.arm);
        policy.observe(sel, reward);
        rounds.push(Round {
            t,
            agent: sel.agent,
            arm: sel.arm,
            reward,
        });
    }
    Ok(Trajectory {
        rounds,
        horizon: spec.horizon,
        instance: spec.instance.clone(),
    })
}

/// Sample mean with a normal-approximation 95% confidence half-width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateCI {
    pub mean: f64,
    pub half_width_95: f64,
    pub reps: u64,
}

impl EstimateCI {
    /// From raw per-replication values.
    pub fn from_values(values: &[f64]) -> Result<Self> {
        let n = values.len();
        if n < 2 {
            return Err(Error::domain("need at least 2 replications for a CI"));
        }
        // identical samples have exactly zero spread; don't let the mean's
        // rounding manufacture a width
        if values.windows(2).all(|w| w[0] == w[1]) {
            return Ok(Self {
                mean: values[0],
                half_width_95: 0.0,
                reps: n as u64,
            });
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
        Ok(Self {
            mean,
            half_width_95: 1.96 * (var / n as f64).sqrt(),
            reps: n as u64,
        })
    }

    /// One standard error of the mean.
    pub fn std_error(&self) -> f64 {
        self.half_width_95 / 1.96
    }
}

/// Estimates `E[statistic(trajectory)]` over tape randomness.
///
/// Per-replication seeds derive counter-style from the master seed, and the
/// reduction collects values in replication order, so the result is
/// identical no matter how many workers run it.
pub fn estimate_expectation<F>(
    spec: &RunSpec,
    statistic: F,
    reps: u64,
    master_seed: u64,
) -> Result<EstimateCI>
where
    F: Fn(&Trajectory) -> f64 + Sync,
{
    if reps < 2 {
        return Err(Error::domain("need at least 2 replications"));
    }
    let values: Result<Vec<f64>> = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let tape = RewardTape::derive(master_seed, rep);
            run_episode(spec, &tape).map(|traj| statistic(&traj))
        })
        .collect();
    EstimateCI::from_values(&values?)
}

/// Paired estimate of `statistic(A) - statistic(B)` with both runs of each
/// replication reading the same tape, so arms with shared identity see
/// identical rewards (common random numbers).
pub fn coupled_runs<F>(
    spec_a: &RunSpec,
    spec_b: &RunSpec,
    statistic: F,
    reps: u64,
    master_seed: u64,
) -> Result<EstimateCI>
where
    F: Fn(&Trajectory) -> f64 + Sync,
{
    if reps < 2 {
        return Err(Error::domain("need at least 2 replications"));
    }
    ensure_coupled_identities(&spec_a.instance, &spec_b.instance)?;
    let values: Result<Vec<f64>> = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let tape = RewardTape::derive(master_seed, rep);
            let a = run_episode(spec_a, &tape)?;
            let b = run_episode(spec_b, &tape)?;
            Ok(statistic(&a) - statistic(&b))
        })
        .collect();
    EstimateCI::from_values(&values?)
}

/// Arms present in both instances under the same (owner, original, copy)
/// identity must agree on mean and reward model, otherwise the shared tape
/// reads would be incoherent.
fn ensure_coupled_identities(a: &BanditInstance, b: &BanditInstance) -> Result<()> {
    for arm_a in a.arms() {
        for arm_b in b.arms() {
            if arm_a.owner == arm_b.owner
                && arm_a.original == arm_b.original
                && arm_a.copy == arm_b.copy
                && (arm_a.mean != arm_b.mean || arm_a.reward_model != arm_b.reward_model)
            {
                return Err(Error::config(format!(
                    "coupled runs: arm identity (owner {}, original {}, copy {}) has \
                     mean {} vs {}",
                    arm_a.owner, arm_a.original, arm_a.copy, arm_a.mean, arm_b.mean
                )));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{build_registered_instance, ReplicationVector, RewardModel};
    use crate::policies::EpsMode;

    fn det_instance(means: &[f64]) -> BanditInstance {
        build_registered_instance(
            means,
            &ReplicationVector::truthful(means.len()),
            RewardModel::Deterministic,
        )
        .unwrap()
    }

    #[test]
    fn horizon_zero_rejected() {
        let spec = RunSpec::new(det_instance(&[0.5]), PolicySpec::Ucb { scale: 1.0 }, 0);
        assert!(run_episode(&spec, &RewardTape::new(1)).is_err());
        assert!(run_deterministic_trace(&spec).is_err());
    }

    #[test]
    fn single_round_pulls_priority_first_unexplored() {
        let spec = RunSpec::new(det_instance(&[0.2, 0.8]), PolicySpec::Ucb { scale: 1.0 }, 1);
        let traj = run_deterministic_trace(&spec).unwrap();
        assert_eq!(traj.rounds()[0].arm, 0);
    }

    #[test]
    fn bernoulli_episode_reproducible() {
        let inst = build_registered_instance(
            &[0.5],
            &ReplicationVector::truthful(1),
            RewardModel::Bernoulli,
        )
        .unwrap();
        let spec = RunSpec::new(inst, PolicySpec::Ucb { scale: 2.0 }, 10_000);
        let tape = RewardTape::new(77);
        let a = run_episode(&spec, &tape).unwrap();
        let b = run_episode(&spec, &tape).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn deterministic_trace_equals_episode_under_any_tape() {
        let means = [0.9, 0.3, 0.3];
        let inst = det_instance(&means);
        for policy in [
            PolicySpec::Ucb { scale: 2.0 },
            PolicySpec::Etc { explore_len: 5 },
            PolicySpec::PidEtc,
        ] {
            let spec = RunSpec::new(inst.clone(), policy, 200);
            let trace = run_deterministic_trace(&spec).unwrap();
            for seed in [1u64, 2, 3] {
                let ep = run_episode(&spec, &RewardTape::new(seed)).unwrap();
                assert_eq!(trace, ep);
            }
        }
        // mean-0/1 Bernoulli arms are eligible too
        let inst01 = build_registered_instance(
            &[1.0, 0.0],
            &ReplicationVector::truthful(2),
            RewardModel::Bernoulli,
        )
        .unwrap();
        let spec = RunSpec::new(inst01, PolicySpec::Ucb { scale: 1.0 }, 50);
        let trace = run_deterministic_trace(&spec).unwrap();
        let ep = run_episode(&spec, &RewardTape::new(9)).unwrap();
        assert_eq!(trace, ep);
    }

    #[test]
    fn deterministic_trace_rejects_stochastic_inputs() {
        let inst = build_registered_instance(
            &[0.5],
            &ReplicationVector::truthful(1),
            RewardModel::Bernoulli,
        )
        .unwrap();
        let spec = RunSpec::new(inst, PolicySpec::Ucb { scale: 1.0 }, 5);
        assert!(run_deterministic_trace(&spec).is_err());

        let spec = RunSpec::new(
            det_instance(&[0.5, 0.4]),
            PolicySpec::EpsGreedy {
                mode: EpsMode::OverT,
                c: 12.0,
                d: 0.3,
            },
            5,
        );
        assert!(run_deterministic_trace(&spec).is_err());
    }

    #[test]
    fn ci_is_zero_on_deterministic_statistics() {
        let spec = RunSpec::new(det_instance(&[0.7, 0.1]), PolicySpec::Etc { explore_len: 2 }, 20);
        let est = estimate_expectation(&spec, |t| t.total_reward(), 16, 5).unwrap();
        assert_eq!(est.half_width_95, 0.0);
        assert_eq!(est.reps, 16);
    }

    #[test]
    fn law_of_large_numbers_sanity() {
        let inst = build_registered_instance(
            &[0.5],
            &ReplicationVector::truthful(1),
            RewardModel::Bernoulli,
        )
        .unwrap();
        let spec = RunSpec::new(inst, PolicySpec::Ucb { scale: 2.0 }, 100);
        let est = estimate_expectation(&spec, |t| t.total_reward() / 100.0, 2_000, 11).unwrap();
        assert!(
            (est.mean - 0.5).abs() <= 3.0 * est.std_error(),
            "mean {} too far from 0.5",
            est.mean
        );
    }

    #[test]
    fn estimate_rejects_tiny_reps() {
        let spec = RunSpec::new(det_instance(&[0.5]), PolicySpec::Ucb { scale: 1.0 }, 5);
        assert!(estimate_expectation(&spec, |t| t.total_reward(), 1, 0).is_err());
    }

    #[test]
    fn coupled_identical_specs_give_zero_every_rep() {
        let inst = build_registered_instance(
            &[0.6, 0.4],
            &ReplicationVector::truthful(2),
            RewardModel::Bernoulli,
        )
        .unwrap();
        let spec = RunSpec::new(inst, PolicySpec::Ucb { scale: 2.0 }, 300);
        let est = coupled_runs(&spec, &spec, |t| t.total_reward(), 32, 3).unwrap();
        assert_eq!(est.mean, 0.0);
        assert_eq!(est.half_width_95, 0.0);
    }

    // Common random numbers pay off: the paired regret-difference CI of
    // truthful vs replicated ETC on shared Bernoulli arms is narrower than
    // the unpaired one at equal replication counts.
    #[test]
    fn coupled_ci_narrower_than_unpaired() {
        let truthful = build_registered_instance(
            &[0.9, 0.3],
            &ReplicationVector::truthful(2),
            RewardModel::Bernoulli,
        )
        .unwrap();
        let replicated = build_registered_instance(
            &[0.9, 0.3],
            &ReplicationVector(vec![1, 0]),
            RewardModel::Bernoulli,
        )
        .unwrap();
        let policy = PolicySpec::Etc { explore_len: 6 };
        let spec_a = RunSpec::new(truthful, policy.clone(), 400);
        let spec_b = RunSpec::new(replicated, policy, 400);
        let stat = crate::metrics::expost_regret;
        let reps = 600;
        let paired = coupled_runs(&spec_a, &spec_b, stat, reps, 5).unwrap();
        let ea = estimate_expectation(&spec_a, stat, reps, 1001).unwrap();
        let eb = estimate_expectation(&spec_b, stat, reps, 2002).unwrap();
        let unpaired_half = ea.half_width_95.hypot(eb.half_width_95);
        assert!(
            paired.half_width_95 < unpaired_half,
            "paired {} vs unpaired {unpaired_half}",
            paired.half_width_95
        );
    }

    #[test]
    fn coupled_rejects_incompatible_identities() {
        let a = RunSpec::new(det_instance(&[0.6, 0.4]), PolicySpec::Ucb { scale: 2.0 }, 10);
        let b = RunSpec::new(det_instance(&[0.5, 0.4]), PolicySpec::Ucb { scale: 2.0 }, 10);
        assert!(matches!(
            coupled_runs(&a, &b, |t| t.total_reward(), 4, 0),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn seed_stability_across_worker_counts() {
        let inst = build_registered_instance(
            &[0.7, 0.2],
            &ReplicationVector::truthful(2),
            RewardModel::Bernoulli,
        )
        .unwrap();
        let spec = RunSpec::new(inst, PolicySpec::Ucb { scale: 2.0 }, 100);
        let mut results = Vec::new();
        for workers in [1usize, 4, 16] {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(workers)
                .build()
                .unwrap();
            let est = pool
                .install(|| estimate_expectation(&spec, |t| t.total_reward(), 200, 99))
                .unwrap();
            results.push(est);
        }
        assert_eq!(results[0], results[1]);
        assert_eq!(results[1], results[2]);
    }
}
