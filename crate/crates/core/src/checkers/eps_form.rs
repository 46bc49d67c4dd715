//! ε-greedy deterministic closed form and the replication inequality.
//!
//! On deterministic two-value instances the regret has the closed form
//! `R(T) = Δ|A₂| + Δ(|A₂|/k)·E[T_R]` with `E[T_R] = Σ_{t=k+1}^{T} ε_t`:
//! every low arm is pulled once in the initialization sweep and thereafter
//! only in exploration rounds, each of which hits a low arm with
//! probability |A₂|/k. The checker verifies the form by simulation and the
//! exact inequality `(R_B + R_C)/2 − R_A = Δ/2 + (Δ/2)(E[T³_R] − E[T²_R]) ≥ 0`
//! symbolically from the three closed forms.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::checkers::Certificate;
use crate::engine::{run_episode, EstimateCI, RunSpec};
use crate::error::{Error, Result};
use crate::instance::{build_registered_instance, ReplicationVector, RewardModel};
use crate::metrics::expost_regret;
use crate::policies::{EpsSchedule, PolicySpec};
use crate::tape::RewardTape;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsInstanceRow {
    pub label: String,
    pub arm_means: Vec<f64>,
    pub low_arms: usize,
    pub closed_form: f64,
    pub mc_mean: f64,
    pub mc_three_sigma: f64,
    pub ok: bool,
}

/// The exact A/B/C comparison recomputed from the closed forms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsInequality {
    pub r_a: f64,
    pub r_b: f64,
    pub r_c: f64,
    /// (R_B + R_C)/2 − R_A
    pub avg_gain: f64,
    /// The same gain in its algebraic form Δ/2·(1 + E[T³_R] − E[T²_R]),
    /// which avoids the cancellation in `avg_gain` and carries the sign
    /// verdict.
    pub identity_gain: f64,
    /// avg_gain − identity_gain; zero up to rounding
    pub identity_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsFormReport {
    pub mu_top: f64,
    pub mu_bottom: f64,
    pub schedule: EpsSchedule,
    pub horizon: u64,
    pub reps: u64,
    pub master_seed: u64,
    pub rows: Vec<EpsInstanceRow>,
    pub inequality: EpsInequality,
    pub passed: bool,
}

fn closed_form(delta: f64, low_arms: usize, k: usize, schedule: &EpsSchedule, horizon: u64) -> f64 {
    let expected_explore = schedule.expected_exploration_rounds(k, horizon);
    delta * low_arms as f64 + delta * low_arms as f64 / k as f64 * expected_explore
}

/// Checks the closed form on A=(μ₁,μ₂), B=(μ₁,μ₂,μ₁), C=(μ₁,μ₂,μ₂) by
/// simulation (3σ match) and the averaged replication inequality exactly.
pub fn check_eps_greedy_closed_form(
    mu_top: f64,
    mu_bottom: f64,
    schedule: &EpsSchedule,
    horizon: u64,
    reps: u64,
    master_seed: u64,
) -> Result<Certificate> {
    if mu_top.partial_cmp(&mu_bottom) != Some(std::cmp::Ordering::Greater) {
        return Err(Error::domain(format!(
            "need mu_top > mu_bottom, got {mu_top} vs {mu_bottom}"
        )));
    }
    if reps < 2 {
        return Err(Error::domain("need at least 2 replications"));
    }
    schedule.validate()?;
    let delta = mu_top - mu_bottom;
    let policy = PolicySpec::EpsGreedy {
        mode: schedule.mode,
        c: schedule.c,
        d: schedule.d,
    };
    // (label, replication of (top, bottom))
    let families = [
        ("A", vec![0usize, 0]),
        ("B", vec![1, 0]),
        ("C", vec![0, 1]),
    ];
    let mut rows = Vec::new();
    for (family_idx, (label, r)) in families.iter().enumerate() {
        let rv = ReplicationVector(r.clone());
        let instance =
            build_registered_instance(&[mu_top, mu_bottom], &rv, RewardModel::Deterministic)?;
        if horizon < instance.len() as u64 {
            return Err(Error::domain(format!(
                "horizon {horizon} shorter than the initialization sweep of {}",
                instance.len()
            )));
        }
        let k = instance.len();
        let low_arms = instance
            .arms()
            .iter()
            .filter(|a| a.mean == mu_bottom)
            .count();
        let spec = RunSpec::new(instance, policy.clone(), horizon);
        let values: Result<Vec<f64>> = (0..reps)
            .into_par_iter()
            .map(|rep| {
                let tape = RewardTape::derive(master_seed ^ ((family_idx as u64 + 1) << 32), rep);
                run_episode(&spec, &tape).map(|t| expost_regret(&t))
            })
            .collect();
        let est = EstimateCI::from_values(&values?)?;
        let cf = closed_form(delta, low_arms, k, schedule, horizon);
        let three_sigma = 3.0 * est.std_error();
        rows.push(EpsInstanceRow {
            label: label.to_string(),
            arm_means: spec.instance.arms().iter().map(|a| a.mean).collect(),
            low_arms,
            closed_form: cf,
            mc_mean: est.mean,
            mc_three_sigma: three_sigma,
            ok: (est.mean - cf).abs() <= three_sigma,
        });
    }
    let e2 = schedule.expected_exploration_rounds(2, horizon);
    let e3 = schedule.expected_exploration_rounds(3, horizon);
    let r_a = closed_form(delta, 1, 2, schedule, horizon);
    let r_b = closed_form(delta, 1, 3, schedule, horizon);
    let r_c = closed_form(delta, 2, 3, schedule, horizon);
    let avg_gain = (r_b + r_c) / 2.0 - r_a;
    let identity_gain = delta / 2.0 * (1.0 + (e3 - e2));
    let inequality = EpsInequality {
        r_a,
        r_b,
        r_c,
        avg_gain,
        identity_gain,
        identity_residual: avg_gain - identity_gain,
    };
    let passed = rows.iter().all(|r| r.ok)
        && inequality.identity_gain >= 0.0
        && inequality.identity_residual.abs() < 1e-9;
    let report = EpsFormReport {
        mu_top,
        mu_bottom,
        schedule: *schedule,
        horizon,
        reps,
        master_seed,
        rows,
        inequality,
        passed,
    };
    if report.passed {
        Ok(Certificate::ClosedFormMatch(report))
    } else {
        Ok(Certificate::ClosedFormMismatch(report))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policies::EpsMode;

    #[test]
    fn pure_exploration_schedule_is_exact() {
        // eps_t = 1 throughout: regret = Δ|A₂| + Δ(|A₂|/k)(T − k), checked
        // against simulation within noise.
        let schedule = EpsSchedule {
            mode: EpsMode::OverRound,
            c: 1e12,
            d: 0.5,
        };
        let cert =
            check_eps_greedy_closed_form(1.0, 0.0, &schedule, 200, 4_000, 7).unwrap();
        let Certificate::ClosedFormMatch(report) = cert else {
            panic!("expected ClosedFormMatch")
        };
        let row_a = &report.rows[0];
        assert!((row_a.closed_form - (1.0 + 0.5 * 198.0)).abs() < 1e-9);
    }

    #[test]
    fn rejects_inverted_means() {
        let schedule = EpsSchedule {
            mode: EpsMode::OverT,
            c: 12.0,
            d: 0.5,
        };
        assert!(check_eps_greedy_closed_form(0.2, 0.8, &schedule, 100, 10, 0).is_err());
    }

    #[test]
    fn averaged_gain_identity() {
        let schedule = EpsSchedule {
            mode: EpsMode::OverT,
            c: 12.0,
            d: 0.9,
        };
        let cert = check_eps_greedy_closed_form(1.0, 0.0, &schedule, 500, 500, 3).unwrap();
        let report = match cert {
            Certificate::ClosedFormMatch(r) | Certificate::ClosedFormMismatch(r) => r,
            _ => unreachable!(),
        };
        assert!(report.inequality.avg_gain >= 0.5);
        assert!(report.inequality.identity_gain >= 0.5);
        assert!(report.inequality.identity_residual.abs() < 1e-9);
    }
}
