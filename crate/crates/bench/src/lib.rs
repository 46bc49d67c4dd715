//! Shared fixtures for the benchmark targets.

use banditlab::{
    build_multi_agent_instance, build_registered_instance, BanditInstance, ReplicationVector,
    RewardModel,
};

/// Eight-armed Bernoulli instance with spread means.
pub fn flat_instance() -> BanditInstance {
    let means: Vec<f64> = (0..8).map(|i| 0.1 + 0.1 * i as f64).collect();
    build_registered_instance(
        &means,
        &ReplicationVector::truthful(8),
        RewardModel::Bernoulli,
    )
    .unwrap()
}

/// Two agents with two Bernoulli arms each.
pub fn hier_instance() -> BanditInstance {
    build_multi_agent_instance(
        &[
            (vec![0.9, 0.4], ReplicationVector::truthful(2)),
            (vec![0.4, 0.4], ReplicationVector::truthful(2)),
        ],
        RewardModel::Bernoulli,
    )
    .unwrap()
}
