//! Regret-rate check for hierarchical ETC: ρ(T) = E[Reg(T)]/√(T ln T) stays
//! in a bounded band over a geometric horizon grid, and Reg(T)/T decreases.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::checkers::{hetc_scaling_params, Certificate};
use crate::engine::{run_episode, EstimateCI, RunSpec};
use crate::error::{Error, Result};
use crate::instance::{build_multi_agent_instance, ReplicationVector, RewardModel};
use crate::metrics::expost_regret;
use crate::policies::PolicySpec;
use crate::tape::RewardTape;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingConfig {
    /// Realized original means per agent (truthful registration).
    pub agent_means: Vec<Vec<f64>>,
    /// Minimum prior gap Δ driving the theorem's exploration lengths.
    pub delta: f64,
    pub t_grid: Vec<u64>,
    pub reps: u64,
    pub master_seed: u64,
    /// Allowed max/min ratio of ρ over the grid.
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub horizon: u64,
    pub arm_explore: u64,
    pub agent_explore: u64,
    pub restart: u64,
    pub regret_mean: f64,
    pub regret_half_width: f64,
    /// E[Reg(T)] / sqrt(T ln T)
    pub rho: f64,
    /// E[Reg(T)] / T
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingReportBody {
    pub config: ScalingConfig,
    pub rows: Vec<ScalingRow>,
    pub rho_ratio: f64,
    pub bounded: bool,
    pub rate_decreasing: bool,
    pub passed: bool,
}

pub fn check_hetc_regret_scaling(config: &ScalingConfig) -> Result<Certificate> {
    if config.t_grid.is_empty() {
        return Err(Error::config("empty horizon grid"));
    }
    if config.reps < 2 {
        return Err(Error::domain("need at least 2 replications"));
    }
    let n = config.agent_means.len();
    let l_max = config
        .agent_means
        .iter()
        .map(|m| m.len())
        .max()
        .unwrap_or(0);
    let per_agent: Vec<(Vec<f64>, ReplicationVector)> = config
        .agent_means
        .iter()
        .map(|m| (m.clone(), ReplicationVector::truthful(m.len())))
        .collect();
    let instance = build_multi_agent_instance(&per_agent, RewardModel::Bernoulli)?;

    let mut rows = Vec::new();
    for (grid_idx, &horizon) in config.t_grid.iter().enumerate() {
        let params = hetc_scaling_params(n, l_max, config.delta, horizon);
        let spec = RunSpec::new(
            instance.clone(),
            PolicySpec::HEtc {
                agent_explore: params.agent_explore,
                arm_explore: params.arm_explore,
                restart: params.restart,
            },
            horizon,
        );
        let values: Result<Vec<f64>> = (0..config.reps)
            .into_par_iter()
            .map(|rep| {
                let tape =
                    RewardTape::derive(config.master_seed.wrapping_add(grid_idx as u64), rep);
                run_episode(&spec, &tape).map(|t| expost_regret(&t))
            })
            .collect();
        let est = EstimateCI::from_values(&values?)?;
        let root = (horizon as f64 * (horizon as f64).ln()).sqrt();
        rows.push(ScalingRow {
            horizon,
            arm_explore: params.arm_explore,
            agent_explore: params.agent_explore,
            restart: params.restart,
            regret_mean: est.mean,
            regret_half_width: est.half_width_95,
            rho: est.mean / root,
            rate: est.mean / horizon as f64,
        });
    }
    let rho_max = rows.iter().map(|r| r.rho).fold(f64::NEG_INFINITY, f64::max);
    let rho_min = rows.iter().map(|r| r.rho).fold(f64::INFINITY, f64::min);
    let rho_ratio = rho_max / rho_min;
    let bounded = rho_ratio <= config.slack && rho_min > 0.0;
    let rate_decreasing = rows.windows(2).all(|w| w[1].rate < w[0].rate);
    let passed = bounded && rate_decreasing;
    Ok(Certificate::ScalingReport(ScalingReportBody {
        config: config.clone(),
        rows,
        rho_ratio,
        bounded,
        rate_decreasing,
        passed,
    }))
}
