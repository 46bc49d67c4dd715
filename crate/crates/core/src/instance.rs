//! Bandit instances: arms, ownership, replication, and dictionary form.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::perm::Permutation;
use crate::prior::DiscretePrior;
use crate::tape::TapeKey;

/// How an arm turns its mean into per-round rewards.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RewardModel {
    /// Every pull yields exactly the mean.
    Deterministic,
    /// Each pull yields 1 with probability `mean`, else 0.
    Bernoulli,
}

/// One registered arm.
///
/// `original` is a stable label (the owner's k-th original arm), not a
/// position: replicas carry their original's label with `copy >= 1`, so tape
/// streams and the regret benchmark survive arbitrary reordering of the arm
/// list.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArmSpec {
    pub mean: f64,
    pub reward_model: RewardModel,
    pub owner: usize,
    pub original: usize,
    pub copy: usize,
}

impl ArmSpec {
    pub fn is_original(&self) -> bool {
        self.copy == 0
    }

    /// Tape stream address of this arm's `pull`-th draw.
    pub fn tape_key(&self, pull: u64) -> TapeKey {
        TapeKey {
            owner: self.owner,
            original: self.original,
            copy: self.copy,
            pull,
        }
    }

    /// Reward of the `pull`-th draw given the tape's uniform for it.
    pub fn reward(&self, uniform: f64) -> f64 {
        match self.reward_model {
            RewardModel::Deterministic => self.mean,
            RewardModel::Bernoulli => {
                if uniform < self.mean {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// True when every pull is the mean with certainty. Bernoulli arms with
    /// mean 0 or 1 qualify, which is what makes {0,1}-support priors the
    /// exact-enumeration regime.
    pub fn is_effectively_deterministic(&self) -> bool {
        match self.reward_model {
            RewardModel::Deterministic => true,
            RewardModel::Bernoulli => self.mean == 0.0 || self.mean == 1.0,
        }
    }
}

/// Per-original-arm replica counts; the agent's strategy.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplicationVector(pub Vec<usize>);

impl ReplicationVector {
    pub fn truthful(l: usize) -> Self {
        Self(vec![0; l])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_truthful(&self) -> bool {
        self.0.iter().all(|&r| r == 0)
    }

    /// ‖r‖₁, the total number of replicas.
    pub fn total(&self) -> usize {
        self.0.iter().sum()
    }

    /// Entries read through σ: entry `a` becomes `r[σ(a)]`.
    pub fn permuted(&self, sigma: &Permutation) -> Result<Self> {
        Ok(Self(sigma.gather(&self.0)?))
    }

    /// All vectors of length `l` with ‖r‖₁ ≤ `budget`, truthful first,
    /// then in increasing total and lexicographic order.
    pub fn enumerate(l: usize, budget: usize) -> Vec<Self> {
        let mut out = Vec::new();
        let mut current = vec![0usize; l];
        fn rec(current: &mut Vec<usize>, pos: usize, left: usize, out: &mut Vec<Vec<usize>>) {
            if pos == current.len() {
                out.push(current.clone());
                return;
            }
            for take in 0..=left {
                current[pos] = take;
                rec(current, pos + 1, left - take, out);
            }
            current[pos] = 0;
        }
        let mut raw = Vec::new();
        rec(&mut current, 0, budget, &mut raw);
        raw.sort_by_key(|r| (r.iter().sum::<usize>(), r.clone()));
        out.extend(raw.into_iter().map(Self));
        out
    }
}

/// An agent as configured: its prior, number of originals, and strategy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentSpec {
    pub prior: DiscretePrior,
    pub num_originals: usize,
    pub replication: ReplicationVector,
}

impl AgentSpec {
    pub fn new(prior: DiscretePrior, num_originals: usize, replication: ReplicationVector) -> Result<Self> {
        if num_originals == 0 {
            return Err(Error::domain("an agent needs at least one original arm"));
        }
        if replication.len() != num_originals {
            return Err(Error::config(format!(
                "replication vector has {} entries for {} originals",
                replication.len(),
                num_originals
            )));
        }
        Ok(Self {
            prior,
            num_originals,
            replication,
        })
    }

    /// Arms this agent registers.
    pub fn registered_arms(&self) -> usize {
        self.num_originals + self.replication.total()
    }
}

/// A realized bandit instance: an ordered arm list with ownership and
/// replica labels. The regret benchmark ranges over originals only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BanditInstance {
    arms: Vec<ArmSpec>,
    realized: bool,
}

impl BanditInstance {
    /// Validates replica-mean consistency: every replica's mean equals its
    /// original's.
    pub fn new(arms: Vec<ArmSpec>) -> Result<Self> {
        if arms.is_empty() {
            return Err(Error::domain("instance must have at least one arm"));
        }
        for arm in &arms {
            if !(0.0..=1.0).contains(&arm.mean) {
                return Err(Error::domain(format!("arm mean {} outside [0, 1]", arm.mean)));
            }
        }
        for arm in &arms {
            if arm.copy > 0 {
                let orig = arms
                    .iter()
                    .find(|o| o.is_original() && o.owner == arm.owner && o.original == arm.original)
                    .ok_or_else(|| {
                        Error::config(format!(
                            "replica of agent {} arm {} has no original in the instance",
                            arm.owner, arm.original
                        ))
                    })?;
                if orig.mean != arm.mean {
                    return Err(Error::config(format!(
                        "replica mean {} differs from original mean {}",
                        arm.mean, orig.mean
                    )));
                }
            }
        }
        Ok(Self {
            arms,
            realized: true,
        })
    }

    pub fn arms(&self) -> &[ArmSpec] {
        &self.arms
    }

    pub fn len(&self) -> usize {
        self.arms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arms.is_empty()
    }

    pub fn is_realized(&self) -> bool {
        self.realized
    }

    pub fn mean(&self, arm: usize) -> f64 {
        self.arms[arm].mean
    }

    /// Benchmark mean: the best ORIGINAL arm, independent of replication.
    pub fn benchmark_mean(&self) -> f64 {
        self.arms
            .iter()
            .filter(|a| a.is_original())
            .map(|a| a.mean)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn num_agents(&self) -> usize {
        self.arms.iter().map(|a| a.owner).max().map_or(0, |m| m + 1)
    }

    /// Global arm indices of one agent, in list order.
    pub fn arms_of_agent(&self, agent: usize) -> Vec<usize> {
        self.arms
            .iter()
            .enumerate()
            .filter(|(_, a)| a.owner == agent)
            .map(|(i, _)| i)
            .collect()
    }

    /// Number of original arms registered by `agent`.
    pub fn originals_of_agent(&self, agent: usize) -> usize {
        self.arms
            .iter()
            .filter(|a| a.owner == agent && a.is_original())
            .count()
    }

    pub fn all_deterministic(&self) -> bool {
        self.arms.iter().all(|a| a.is_effectively_deterministic())
    }

    /// The instance with its arm list reordered by σ (the arm at position
    /// `i` moves to position `σ(i)`). Labels travel with the arms, so tape
    /// streams and the benchmark are unaffected.
    pub fn with_arms_permuted(&self, sigma: &Permutation) -> Result<Self> {
        Ok(Self {
            arms: sigma.permute_positions(&self.arms)?,
            realized: self.realized,
        })
    }
}

/// Builds a single-agent instance: each original arm once, in the given
/// order, then `r[a]` replicas of arm `a`, grouped by original.
pub fn build_registered_instance(
    original_means: &[f64],
    r: &ReplicationVector,
    reward_model: RewardModel,
) -> Result<BanditInstance> {
    build_agent_arms(0, original_means, r, reward_model).and_then(BanditInstance::new)
}

/// Multi-agent assembly: each agent's block in agent order, each block laid
/// out originals-then-replicas like the single-agent builder.
pub fn build_multi_agent_instance(
    per_agent: &[(Vec<f64>, ReplicationVector)],
    reward_model: RewardModel,
) -> Result<BanditInstance> {
    let mut arms = Vec::new();
    for (owner, (means, r)) in per_agent.iter().enumerate() {
        arms.extend(build_agent_arms(owner, means, r, reward_model)?);
    }
    BanditInstance::new(arms)
}

fn build_agent_arms(
    owner: usize,
    original_means: &[f64],
    r: &ReplicationVector,
    reward_model: RewardModel,
) -> Result<Vec<ArmSpec>> {
    if original_means.len() != r.len() {
        return Err(Error::config(format!(
            "{} original means but replication vector of length {}",
            original_means.len(),
            r.len()
        )));
    }
    for &m in original_means {
        if !(0.0..=1.0).contains(&m) {
            return Err(Error::domain(format!("arm mean {m} outside [0, 1]")));
        }
    }
    let mut arms = Vec::with_capacity(original_means.len() + r.total());
    for (label, &mean) in original_means.iter().enumerate() {
        arms.push(ArmSpec {
            mean,
            reward_model,
            owner,
            original: label,
            copy: 0,
        });
    }
    for (label, &count) in r.0.iter().enumerate() {
        for copy in 1..=count {
            arms.push(ArmSpec {
                mean: original_means[label],
                reward_model,
                owner,
                original: label,
                copy,
            });
        }
    }
    Ok(arms)
}

/// A realized instance written as (mean : multiplicity) pairs with strictly
/// decreasing means.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DictionaryForm {
    entries: Vec<(f64, usize)>,
}

impl DictionaryForm {
    pub fn entries(&self) -> &[(f64, usize)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total_arms(&self) -> usize {
        self.entries.iter().map(|&(_, c)| c).sum()
    }

    /// Expands back into a single-agent instance, each distinct mean as one
    /// original with `count - 1` replicas.
    pub fn expand(&self, reward_model: RewardModel) -> Result<BanditInstance> {
        let means: Vec<f64> = self.entries.iter().map(|&(m, _)| m).collect();
        let r = ReplicationVector(self.entries.iter().map(|&(_, c)| c - 1).collect());
        build_registered_instance(&means, &r, reward_model)
    }
}

/// Counts arms per distinct mean, means strictly decreasing.
pub fn dictionary_form(instance: &BanditInstance) -> Result<DictionaryForm> {
    if !instance.is_realized() {
        return Err(Error::domain("dictionary form needs a realized instance"));
    }
    let mut means: Vec<f64> = instance.arms().iter().map(|a| a.mean).collect();
    means.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut entries: Vec<(f64, usize)> = Vec::new();
    for m in means {
        match entries.last_mut() {
            Some((mean, count)) if *mean == m => *count += 1,
            _ => entries.push((m, 1)),
        }
    }
    Ok(DictionaryForm { entries })
}

/// The permuted dictionary: entry `a` keeps its mean and takes count
/// `c[σ(a)]`.
pub fn permute_instance(d: &DictionaryForm, sigma: &Permutation) -> Result<DictionaryForm> {
    if sigma.len() != d.len() {
        return Err(Error::domain(format!(
            "permutation arity {} does not match {} dictionary entries",
            sigma.len(),
            d.len()
        )));
    }
    let counts: Vec<usize> = d.entries.iter().map(|&(_, c)| c).collect();
    let permuted = sigma.gather(&counts)?;
    Ok(DictionaryForm {
        entries: d
            .entries
            .iter()
            .zip(permuted)
            .map(|(&(m, _), c)| (m, c))
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn means(instance: &BanditInstance) -> Vec<f64> {
        instance.arms().iter().map(|a| a.mean).collect()
    }

    #[test]
    fn replica_appended_after_originals() {
        let inst =
            build_registered_instance(&[1.0, 0.0], &ReplicationVector(vec![1, 0]), RewardModel::Deterministic)
                .unwrap();
        assert_eq!(means(&inst), vec![1.0, 0.0, 1.0]);
        let rep = &inst.arms()[2];
        assert_eq!((rep.original, rep.copy), (0, 1));
    }

    #[test]
    fn truthful_build_is_identity() {
        let inst =
            build_registered_instance(&[1.0, 0.0], &ReplicationVector(vec![0, 0]), RewardModel::Bernoulli)
                .unwrap();
        assert_eq!(means(&inst), vec![1.0, 0.0]);
    }

    #[test]
    fn dictionary_of_replicated_pair() {
        let inst = build_registered_instance(
            &[0.5, 0.7],
            &ReplicationVector(vec![1, 0]),
            RewardModel::Deterministic,
        )
        .unwrap();
        let d = dictionary_form(&inst).unwrap();
        assert_eq!(d.entries(), &[(0.7, 1), (0.5, 2)]);
    }

    #[test]
    fn build_rejects_bad_inputs() {
        assert!(matches!(
            build_registered_instance(&[0.5], &ReplicationVector(vec![0, 0]), RewardModel::Bernoulli),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            build_registered_instance(&[1.5], &ReplicationVector(vec![0]), RewardModel::Bernoulli),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn dictionary_form_counts_and_sorts() {
        let inst =
            build_registered_instance(&[0.5, 0.7, 0.7], &ReplicationVector(vec![0, 0, 0]), RewardModel::Deterministic)
                .unwrap();
        assert_eq!(dictionary_form(&inst).unwrap().entries(), &[(0.7, 2), (0.5, 1)]);
        let single =
            build_registered_instance(&[0.3], &ReplicationVector(vec![0]), RewardModel::Deterministic).unwrap();
        assert_eq!(dictionary_form(&single).unwrap().entries(), &[(0.3, 1)]);
        let ones =
            build_registered_instance(&[1.0, 1.0, 0.0], &ReplicationVector(vec![0, 0, 0]), RewardModel::Deterministic)
                .unwrap();
        assert_eq!(dictionary_form(&ones).unwrap().entries(), &[(1.0, 2), (0.0, 1)]);
    }

    #[test]
    fn permute_instance_swaps_counts() {
        let d = DictionaryForm {
            entries: vec![(0.7, 2), (0.5, 1)],
        };
        let swap = Permutation::new(vec![1, 0]).unwrap();
        assert_eq!(
            permute_instance(&d, &swap).unwrap().entries(),
            &[(0.7, 1), (0.5, 2)]
        );
        let id = Permutation::identity(2);
        assert_eq!(permute_instance(&d, &id).unwrap(), d);
    }

    #[test]
    fn permute_instance_on_unit_counts_is_identity() {
        let d = DictionaryForm {
            entries: vec![(1.0, 1), (0.5, 1), (0.0, 1)],
        };
        let rot = Permutation::new(vec![1, 2, 0]).unwrap();
        assert_eq!(permute_instance(&d, &rot).unwrap(), d);
    }

    #[test]
    fn permute_instance_rejects_arity_mismatch() {
        let d = DictionaryForm {
            entries: vec![(0.7, 2), (0.5, 1)],
        };
        let sigma = Permutation::identity(3);
        assert!(permute_instance(&d, &sigma).is_err());
    }

    #[test]
    fn benchmark_ignores_replicas() {
        for r in ReplicationVector::enumerate(2, 3) {
            let inst =
                build_registered_instance(&[0.4, 0.9], &r, RewardModel::Bernoulli).unwrap();
            assert_eq!(inst.benchmark_mean(), 0.9);
        }
    }

    #[test]
    fn replication_enumeration_counts() {
        let all = ReplicationVector::enumerate(2, 3);
        // C(2+3, 3) staircase: sums 0..=3 -> 1+2+3+4 = 10 vectors
        assert_eq!(all.len(), 10);
        assert!(all[0].is_truthful());
        let all3 = ReplicationVector::enumerate(3, 3);
        assert_eq!(all3.len(), 20);
    }

    #[test]
    fn multi_agent_blocks_in_order() {
        let inst = build_multi_agent_instance(
            &[
                (vec![0.9, 0.4], ReplicationVector(vec![0, 1])),
                (vec![0.5], ReplicationVector(vec![0])),
            ],
            RewardModel::Bernoulli,
        )
        .unwrap();
        assert_eq!(means(&inst), vec![0.9, 0.4, 0.4, 0.5]);
        assert_eq!(inst.num_agents(), 2);
        assert_eq!(inst.arms_of_agent(0), vec![0, 1, 2]);
        assert_eq!(inst.originals_of_agent(0), 2);
        assert_eq!(inst.arms_of_agent(1), vec![3]);
    }
}
