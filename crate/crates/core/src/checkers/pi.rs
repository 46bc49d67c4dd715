//! Permutation invariance: relabeling arms (and the priority and tape
//! identities with them) permutes the pull-count vector the same way.

use serde::{Deserialize, Serialize};

use crate::checkers::Certificate;
use crate::engine::{run_episode, RunSpec};
use crate::error::Result;
use crate::instance::BanditInstance;
use crate::perm::Permutation;
use crate::policies::PolicySpec;
use crate::priority::Priorities;
use crate::tape::RewardTape;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiCase {
    pub sigma: Vec<usize>,
    pub seed: u64,
    pub base_counts: Vec<u64>,
    pub permuted_counts: Vec<u64>,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiReport {
    pub policy: PolicySpec,
    pub instance: BanditInstance,
    pub horizon: u64,
    pub cases: Vec<PiCase>,
}

/// Runs the policy on the instance and on each σ-relabeled twin (with
/// σ-permuted arm priority; tape identities travel with the arms) under the
/// same seed, and verifies `counts_permuted[σ(a)] = counts_base[a]` in every
/// case.
pub fn check_permutation_invariance(
    policy: &PolicySpec,
    instance: &BanditInstance,
    horizon: u64,
    cases: &[(Vec<usize>, u64)],
) -> Result<Certificate> {
    let base_priorities = Priorities::identity(instance);
    let mut out = Vec::with_capacity(cases.len());
    for (sigma_map, seed) in cases {
        let sigma = Permutation::new(sigma_map.clone())?;
        let tape = RewardTape::new(*seed);

        let base_spec = RunSpec::new(instance.clone(), policy.clone(), horizon)
            .with_priorities(base_priorities.clone());
        let base_counts = run_episode(&base_spec, &tape)?.pull_counts();

        let permuted_instance = instance.with_arms_permuted(&sigma)?;
        let permuted_priorities = Priorities::new(
            base_priorities.agents.clone(),
            base_priorities.arms.permuted(&sigma)?,
        );
        let perm_spec = RunSpec::new(permuted_instance, policy.clone(), horizon)
            .with_priorities(permuted_priorities);
        let permuted_counts = run_episode(&perm_spec, &tape)?.pull_counts();

        let ok = (0..instance.len()).all(|a| permuted_counts[sigma.apply(a)] == base_counts[a]);
        out.push(PiCase {
            sigma: sigma_map.clone(),
            seed: *seed,
            base_counts,
            permuted_counts,
            ok,
        });
    }
    let report = PiReport {
        policy: policy.clone(),
        instance: instance.clone(),
        horizon,
        cases: out,
    };
    if report.cases.iter().all(|c| c.ok) {
        Ok(Certificate::PiHolds(report))
    } else {
        Ok(Certificate::PiViolated(report))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{build_registered_instance, ReplicationVector, RewardModel};

    #[test]
    fn identity_permutation_always_related() {
        let inst = build_registered_instance(
            &[0.9, 0.3],
            &ReplicationVector::truthful(2),
            RewardModel::Bernoulli,
        )
        .unwrap();
        let cert = check_permutation_invariance(
            &PolicySpec::Ucb { scale: 2.0 },
            &inst,
            80,
            &[(vec![0, 1], 5)],
        )
        .unwrap();
        assert!(matches!(cert, Certificate::PiHolds(_)));
    }

    #[test]
    fn etc_swapping_symmetric_arms_swaps_counts() {
        let inst = build_registered_instance(
            &[0.9, 0.3, 0.3],
            &ReplicationVector::truthful(3),
            RewardModel::Deterministic,
        )
        .unwrap();
        let cert = check_permutation_invariance(
            &PolicySpec::Etc { explore_len: 4 },
            &inst,
            40,
            &[(vec![0, 2, 1], 1)],
        )
        .unwrap();
        match cert {
            Certificate::PiHolds(report) => {
                let case = &report.cases[0];
                assert_eq!(case.base_counts[1], case.permuted_counts[2]);
                assert_eq!(case.base_counts[2], case.permuted_counts[1]);
            }
            other => panic!("expected PiHolds, got {}", other.kind()),
        }
    }

    #[test]
    fn ucb_bernoulli_pi_holds_on_random_cases() {
        let inst = build_registered_instance(
            &[0.7, 0.2],
            &ReplicationVector::truthful(2),
            RewardModel::Bernoulli,
        )
        .unwrap();
        let cases: Vec<(Vec<usize>, u64)> = (0..20)
            .map(|i| {
                let sigma = if i % 2 == 0 { vec![0, 1] } else { vec![1, 0] };
                (sigma, 1000 + i)
            })
            .collect();
        let cert = check_permutation_invariance(
            &PolicySpec::Ucb { scale: 2.0 },
            &inst,
            120,
            &cases,
        )
        .unwrap();
        assert!(matches!(cert, Certificate::PiHolds(_)));
    }
}
