//! Evaluation functionals: regret, agent utilities, random-permutation
//! regret, and exact ex-ante utilities over discrete priors.

use serde::{Deserialize, Serialize};

use crate::engine::{run_deterministic_trace, run_episode, EstimateCI, RunSpec, Trajectory};
use crate::error::{Error, Result};
use crate::instance::{
    build_multi_agent_instance, build_registered_instance, AgentSpec, ReplicationVector,
    RewardModel,
};
use crate::perm::enumerate_permutations;
use crate::policies::PolicySpec;
use crate::prior::DiscretePrior;
use crate::tape::RewardTape;

/// Cap on exact ex-ante enumeration (number of joint mean realizations).
pub const EXACT_REALIZATION_BUDGET: usize = 1_000_000;

/// Exact value or a Monte-Carlo estimate with its confidence half-width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Estimate {
    Exact(f64),
    Sampled(EstimateCI),
}

impl Estimate {
    pub fn value(&self) -> f64 {
        match self {
            Estimate::Exact(v) => *v,
            Estimate::Sampled(ci) => ci.mean,
        }
    }

    /// 95% half-width; zero for exact values.
    pub fn half_width(&self) -> f64 {
        match self {
            Estimate::Exact(_) => 0.0,
            Estimate::Sampled(ci) => ci.half_width_95,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Estimate::Exact(_))
    }
}

/// Exact enumeration or Monte Carlo with a replication budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum EvalMode {
    Exact,
    Mc { reps: u64, master_seed: u64 },
}

/// Ex-post pseudo-regret: `T·μ* − Σ_t μ(I_t)`, with the benchmark ranging
/// over original arms only. Computed from pull counts, so it is a
/// deterministic function of the pull sequence.
pub fn expost_regret(traj: &Trajectory) -> f64 {
    let mu_star = traj.instance().benchmark_mean();
    traj.pull_counts()
        .iter()
        .zip(traj.instance().arms())
        .map(|(&n, arm)| n as f64 * (mu_star - arm.mean))
        .sum()
}

/// Per-agent α-shares of realized rewards.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtilityReport {
    /// `utility[i]` = α · Σ_t R_t · 1{I_t registered by agent i}.
    pub per_agent: Vec<f64>,
    /// Σ_t R_t, the principal's gross reward.
    pub total_reward: f64,
    pub horizon: u64,
    pub alpha: f64,
}

pub fn agent_utilities(traj: &Trajectory, alpha: f64) -> Result<UtilityReport> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::domain(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let n = traj.instance().num_agents();
    let mut per_agent = vec![0.0; n];
    let mut total = 0.0;
    for r in traj.rounds() {
        per_agent[r.agent] += alpha * r.reward;
        total += r.reward;
    }
    Ok(UtilityReport {
        per_agent,
        total_reward: total,
        horizon: traj.horizon(),
        alpha,
    })
}

fn require_sorted_desc(means: &[f64]) -> Result<()> {
    if means.windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::domain(format!(
            "original means must be sorted in non-increasing order, got {means:?}"
        )));
    }
    Ok(())
}

/// Random-permutation regret: the average over σ ∈ P_l of the expected
/// regret of the instance where the arm with the a-th mean is replicated
/// `r[σ(a)]` times.
///
/// Exact mode enumerates all l! permutations and runs exact traces, so it
/// requires effectively deterministic arms and a deterministic policy. MC
/// mode samples a permutation and a tape per replication.
pub fn rp_regret(
    original_means: &[f64],
    r: &ReplicationVector,
    policy: &PolicySpec,
    horizon: u64,
    model: RewardModel,
    mode: &EvalMode,
) -> Result<Estimate> {
    require_sorted_desc(original_means)?;
    if original_means.len() != r.len() {
        return Err(Error::config(format!(
            "{} means vs replication vector of length {}",
            original_means.len(),
            r.len()
        )));
    }
    let l = original_means.len();
    match mode {
        EvalMode::Exact => {
            let perms = enumerate_permutations(l)?;
            let mut values = Vec::with_capacity(perms.len());
            for sigma in &perms {
                let permuted = r.permuted(sigma)?;
                let instance = build_registered_instance(original_means, &permuted, model)?;
                let spec = RunSpec::new(instance, policy.clone(), horizon);
                let traj = run_deterministic_trace(&spec)?;
                values.push(expost_regret(&traj));
            }
            // an average of identical values is that value; keeps the
            // truthful case exactly equal to plain regret
            if values.windows(2).all(|w| w[0] == w[1]) {
                return Ok(Estimate::Exact(values[0]));
            }
            Ok(Estimate::Exact(values.iter().sum::<f64>() / values.len() as f64))
        }
        EvalMode::Mc { reps, master_seed } => {
            if *reps < 2 {
                return Err(Error::domain("MC mode needs at least 2 replications"));
            }
            let mut values = Vec::with_capacity(*reps as usize);
            for rep in 0..*reps {
                let tape = RewardTape::derive(*master_seed, rep);
                let sigma = sample_permutation(l, &tape)?;
                let permuted = r.permuted(&sigma)?;
                let instance = build_registered_instance(original_means, &permuted, model)?;
                let spec = RunSpec::new(instance, policy.clone(), horizon);
                let traj = run_episode(&spec, &tape)?;
                values.push(expost_regret(&traj));
            }
            Ok(Estimate::Sampled(EstimateCI::from_values(&values)?))
        }
    }
}

/// Uniform permutation off the tape's policy stream (Fisher-Yates).
fn sample_permutation(l: usize, tape: &RewardTape) -> Result<crate::perm::Permutation> {
    let mut map: Vec<usize> = (0..l).collect();
    for i in (1..l).rev() {
        let u = tape.policy_uniform(u64::MAX - i as u64, 7);
        let j = ((u * (i + 1) as f64) as usize).min(i);
        map.swap(i, j);
    }
    crate::perm::Permutation::new(map)
}

/// Exact ex-ante utility of `focus` under the joint prior: the sum over all
/// joint mean realizations of their probability times the focus agent's
/// expected utility on the realized instance.
///
/// Exact mode requires every realized arm to be effectively deterministic
/// (true for deterministic reward models and for {0,1}-support Bernoulli
/// priors). MC mode keeps the exact outer enumeration and estimates each
/// realization's conditional utility by simulation, stratifying the
/// replication budget equally across realizations.
pub fn ex_ante_utility_multi(
    agents: &[AgentSpec],
    focus: usize,
    policy: &PolicySpec,
    horizon: u64,
    alpha: f64,
    model: RewardModel,
    mode: &EvalMode,
) -> Result<Estimate> {
    if agents.is_empty() {
        return Err(Error::domain("need at least one agent"));
    }
    if focus >= agents.len() {
        return Err(Error::config(format!(
            "focus agent {focus} out of range for {} agents",
            agents.len()
        )));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::domain(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    for a in agents {
        if a.replication.len() != a.num_originals {
            return Err(Error::config(format!(
                "replication vector of length {} for {} originals",
                a.replication.len(),
                a.num_originals
            )));
        }
    }
    // enumeration size = Π_i |support_i|^{l_i}
    let mut total: usize = 1;
    for a in agents {
        for _ in 0..a.num_originals {
            total = total
                .checked_mul(a.prior.len())
                .filter(|&t| t <= EXACT_REALIZATION_BUDGET)
                .ok_or_else(|| {
                    Error::budget(format!(
                        "ex-ante enumeration exceeds {EXACT_REALIZATION_BUDGET} realizations"
                    ))
                })?;
        }
    }

    // odometer over one support index per (agent, original arm)
    let slots: Vec<&DiscretePrior> = agents
        .iter()
        .flat_map(|a| std::iter::repeat_n(&a.prior, a.num_originals))
        .collect();
    let mut digits = vec![0usize; slots.len()];
    let mut acc = 0.0;
    let mut var_acc = 0.0;
    let inner_reps = match mode {
        EvalMode::Exact => 0,
        EvalMode::Mc { reps, .. } => (*reps / total as u64).max(2),
    };
    loop {
        let mut weight = 1.0;
        for (slot, &digit) in digits.iter().enumerate() {
            weight *= slots[slot].probs()[digit];
        }
        if weight > 0.0 {
            let mut per_agent: Vec<(Vec<f64>, ReplicationVector)> = Vec::with_capacity(agents.len());
            let mut slot = 0;
            for a in agents {
                let means: Vec<f64> = (0..a.num_originals)
                    .map(|_| {
                        let v = slots[slot].support()[digits[slot]];
                        slot += 1;
                        v
                    })
                    .collect();
                per_agent.push((means, a.replication.clone()));
            }
            let instance = build_multi_agent_instance(&per_agent, model)?;
            let spec = RunSpec::new(instance, policy.clone(), horizon);
            match mode {
                EvalMode::Exact => {
                    if !spec.instance.all_deterministic() {
                        return Err(Error::domain(
                            "exact ex-ante needs every realized arm deterministic; \
                             use MC mode or a {0,1}-support prior",
                        ));
                    }
                    let traj = run_deterministic_trace(&spec)?;
                    acc += weight * agent_utilities(&traj, alpha)?.per_agent[focus];
                }
                EvalMode::Mc { master_seed, .. } => {
                    // stratum seed folds the realization index in, derived
                    // counter-style from the master seed
                    let stratum = digits
                        .iter()
                        .fold(0u64, |h, &d| h.wrapping_mul(1_000_003).wrapping_add(d as u64));
                    let est = crate::engine::estimate_expectation(
                        &spec,
                        |traj| {
                            agent_utilities(traj, alpha)
                                .map(|u| u.per_agent[focus])
                                .unwrap_or(f64::NAN)
                        },
                        inner_reps,
                        master_seed.wrapping_add(stratum),
                    )?;
                    acc += weight * est.mean;
                    let se = est.std_error();
                    var_acc += weight * weight * se * se;
                }
            }
        }
        // advance odometer
        let mut pos = 0;
        loop {
            if pos == digits.len() {
                break;
            }
            digits[pos] += 1;
            if digits[pos] < slots[pos].len() {
                break;
            }
            digits[pos] = 0;
            pos += 1;
        }
        if pos == digits.len() {
            break;
        }
    }
    match mode {
        EvalMode::Exact => Ok(Estimate::Exact(acc)),
        EvalMode::Mc { reps, .. } => Ok(Estimate::Sampled(EstimateCI {
            mean: acc,
            half_width_95: 1.96 * var_acc.sqrt(),
            reps: *reps,
        })),
    }
}

/// Single-agent ex-ante utility.
#[allow(clippy::too_many_arguments)]
pub fn ex_ante_utility(
    prior: &DiscretePrior,
    l: usize,
    r: &ReplicationVector,
    policy: &PolicySpec,
    horizon: u64,
    alpha: f64,
    model: RewardModel,
    mode: &EvalMode,
) -> Result<Estimate> {
    let agents = [AgentSpec {
        prior: prior.clone(),
        num_originals: l,
        replication: r.clone(),
    }];
    ex_ante_utility_multi(&agents, 0, policy, horizon, alpha, model, mode)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::run_deterministic_trace;
    use crate::instance::build_registered_instance;

    fn det_spec(means: &[f64], policy: PolicySpec, horizon: u64) -> RunSpec {
        let inst = build_registered_instance(
            means,
            &ReplicationVector::truthful(means.len()),
            RewardModel::Deterministic,
        )
        .unwrap();
        RunSpec::new(inst, policy, horizon)
    }

    #[test]
    fn regret_zero_when_best_arm_always_pulled() {
        let spec = det_spec(&[0.9, 0.1], PolicySpec::Etc { explore_len: 1 }, 50);
        let traj = run_deterministic_trace(&spec).unwrap();
        // ETC explores each once (regret 0.8), then commits to the best
        assert!((expost_regret(&traj) - 0.8).abs() < 1e-12);
    }

    #[test]
    fn regret_counts_identity_holds_pathwise() {
        let spec = det_spec(&[0.9, 0.5, 0.1], PolicySpec::Ucb { scale: 2.0 }, 137);
        let traj = run_deterministic_trace(&spec).unwrap();
        let mu_star = traj.instance().benchmark_mean();
        let per_round: f64 = traj
            .rounds()
            .iter()
            .map(|r| mu_star - traj.instance().mean(r.arm))
            .sum();
        assert!((per_round - expost_regret(&traj)).abs() < 1e-9);
    }

    #[test]
    fn utilities_single_agent_takes_alpha_share() {
        let spec = det_spec(&[0.6, 0.2], PolicySpec::Etc { explore_len: 2 }, 10);
        let traj = run_deterministic_trace(&spec).unwrap();
        let report = agent_utilities(&traj, 0.3).unwrap();
        assert_eq!(report.per_agent.len(), 1);
        assert!((report.per_agent[0] - 0.3 * traj.total_reward()).abs() < 1e-12);
        assert!(agent_utilities(&traj, 0.0).is_err());
        assert!(agent_utilities(&traj, 1.0).is_err());
    }

    // Hand-replayed 10-round trace: two agents, H-ETC, deterministic means.
    #[test]
    fn utilities_two_agents_match_hand_replay() {
        let inst = build_multi_agent_instance(
            &[
                (vec![0.8], ReplicationVector::truthful(1)),
                (vec![0.5], ReplicationVector::truthful(1)),
            ],
            RewardModel::Deterministic,
        )
        .unwrap();
        let spec = RunSpec::new(
            inst,
            PolicySpec::HEtc {
                agent_explore: 3,
                arm_explore: 2,
                restart: 6,
            },
            10,
        );
        let traj = run_deterministic_trace(&spec).unwrap();
        // rounds 1-3 agent 0 (0.8 each), 4-6 agent 1 (0.5 each), restart at
        // 7, exploitation picks agent 0 (0.8 > 0.5) for rounds 7-10
        let report = agent_utilities(&traj, 0.5).unwrap();
        let u0 = 0.5 * (3.0 * 0.8 + 4.0 * 0.8);
        let u1 = 0.5 * (3.0 * 0.5);
        assert!((report.per_agent[0] - u0).abs() < 1e-12);
        assert!((report.per_agent[1] - u1).abs() < 1e-12);
        // complementarity: Σ U / α + Reg = T · μ*
        let total: f64 = report.per_agent.iter().sum();
        assert!(
            (total / 0.5 + expost_regret(&traj) - 10.0 * 0.8).abs() < 1e-9
        );
    }

    #[test]
    fn rp_regret_of_truthful_equals_plain_regret() {
        let means = [0.9, 0.5, 0.1];
        for policy in [PolicySpec::Ucb { scale: 2.0 }, PolicySpec::Etc { explore_len: 4 }] {
            let spec = det_spec(&means, policy.clone(), 60);
            let plain = expost_regret(&run_deterministic_trace(&spec).unwrap());
            let rp = rp_regret(
                &means,
                &ReplicationVector::truthful(3),
                &policy,
                60,
                RewardModel::Deterministic,
                &EvalMode::Exact,
            )
            .unwrap();
            assert!((rp.value() - plain).abs() < 1e-12);
        }
    }

    #[test]
    fn rp_regret_etc_exploration_floor() {
        // ETC with deterministic means: regret = m · Σ_a δ_a · (‖r‖₁ + l)/l
        let means = [0.9, 0.5, 0.1];
        let m = 5u64;
        let horizon = 200;
        let delta_sum = (0.9 - 0.9) + (0.9 - 0.5) + (0.9 - 0.1);
        for r in ReplicationVector::enumerate(3, 2) {
            let rp = rp_regret(
                &means,
                &r,
                &PolicySpec::Etc { explore_len: m },
                horizon,
                RewardModel::Deterministic,
                &EvalMode::Exact,
            )
            .unwrap();
            let floor = m as f64 * delta_sum * (r.total() + 3) as f64 / 3.0;
            assert!(
                rp.value() >= floor - 1e-9,
                "r={r:?}: rp {} below floor {floor}",
                rp.value()
            );
            // deterministic ETC meets the floor exactly
            assert!((rp.value() - floor).abs() < 1e-9);
        }
    }

    #[test]
    fn rp_regret_rejects_exact_on_stochastic_arms() {
        let means = [0.7, 0.2];
        let err = rp_regret(
            &means,
            &ReplicationVector::truthful(2),
            &PolicySpec::Ucb { scale: 2.0 },
            50,
            RewardModel::Bernoulli,
            &EvalMode::Exact,
        );
        assert!(matches!(err, Err(Error::Domain(_))));
    }

    #[test]
    fn ex_ante_point_mass_is_alpha_mu_t() {
        let prior = DiscretePrior::point_mass(0.6).unwrap();
        for policy in [PolicySpec::Ucb { scale: 2.0 }, PolicySpec::Etc { explore_len: 3 }] {
            let u = ex_ante_utility(
                &prior,
                1,
                &ReplicationVector::truthful(1),
                &policy,
                40,
                0.25,
                RewardModel::Deterministic,
                &EvalMode::Exact,
            )
            .unwrap();
            assert!((u.value() - 0.25 * 0.6 * 40.0).abs() < 1e-12);
        }
    }

    #[test]
    fn ex_ante_permutation_symmetric_in_r_on_01_support() {
        let prior = DiscretePrior::uniform(vec![0.0, 1.0]).unwrap();
        let policy = PolicySpec::Etc { explore_len: 3 };
        let base = ReplicationVector(vec![2, 1, 0]);
        let mut values = Vec::new();
        for sigma in enumerate_permutations(3).unwrap() {
            let r = base.permuted(&sigma).unwrap();
            let u = ex_ante_utility(
                &prior,
                3,
                &r,
                &policy,
                60,
                0.5,
                RewardModel::Bernoulli,
                &EvalMode::Exact,
            )
            .unwrap();
            values.push(u.value());
        }
        for v in &values {
            assert!(
                (v - values[0]).abs() < 1e-12,
                "ex-ante not permutation symmetric: {values:?}"
            );
        }
    }

    #[test]
    fn ex_ante_budget_guard() {
        let prior = DiscretePrior::uniform(vec![0.0, 0.5, 1.0]).unwrap();
        // 3^20 >> budget
        let err = ex_ante_utility(
            &prior,
            20,
            &ReplicationVector::truthful(20),
            &PolicySpec::Etc { explore_len: 1 },
            10,
            0.5,
            RewardModel::Bernoulli,
            &EvalMode::Exact,
        );
        assert!(matches!(err, Err(Error::Budget(_))));
    }
}
