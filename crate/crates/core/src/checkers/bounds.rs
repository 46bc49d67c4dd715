//! Statistical bound checks: ETC pull counts and misselection frequency.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::checkers::Certificate;
use crate::engine::{run_episode, RunSpec};
use crate::error::{Error, Result};
use crate::instance::{build_registered_instance, ReplicationVector, RewardModel};
use crate::metrics::expost_regret;
use crate::policies::PolicySpec;
use crate::tape::{RewardTape, TapeKey};

/// Which bound was checked, with everything needed to re-run it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "check", rename_all = "kebab-case")]
pub enum BoundCheck {
    EtcPull {
        means: Vec<f64>,
        explore_len: u64,
        horizon: u64,
        reps: u64,
        master_seed: u64,
    },
    Misselect {
        mu_star: f64,
        mu_arm: f64,
        explore_len: u64,
        reps: u64,
        master_seed: u64,
    },
}

/// One estimate against one bound: satisfied iff `estimate − 3σ ≤ bound`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundRow {
    pub label: String,
    pub estimate: f64,
    pub three_sigma: f64,
    pub bound: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub check: BoundCheck,
    pub rows: Vec<BoundRow>,
}

fn row(label: impl Into<String>, estimate: f64, three_sigma: f64, bound: f64) -> BoundRow {
    BoundRow {
        label: label.into(),
        estimate,
        three_sigma,
        bound,
        ok: estimate - three_sigma <= bound,
    }
}

fn certify(report: BoundReport) -> Certificate {
    if report.rows.iter().all(|r| r.ok) {
        Certificate::BoundSatisfied(report)
    } else {
        Certificate::BoundViolated(report)
    }
}

/// Monte-Carlo check that ETC's expected pull count of every sub-optimal arm
/// stays at `m + 1`, and its regret under the matching theorem expression,
/// on the Bernoulli instance with the given means.
pub fn check_etc_pull_bound(
    means: &[f64],
    explore_len: u64,
    horizon: u64,
    reps: u64,
    master_seed: u64,
) -> Result<Certificate> {
    let l = means.len();
    let k = l as u64;
    if reps < 2 {
        return Err(Error::domain("need at least 2 replications"));
    }
    // distinct-value gap of the mean set
    let mut distinct: Vec<f64> = means.to_vec();
    distinct.sort_by(|a, b| a.partial_cmp(b).unwrap());
    distinct.dedup();
    if distinct.len() < 2 {
        // no sub-optimal arm: the bound is vacuous
        let report = BoundReport {
            check: BoundCheck::EtcPull {
                means: means.to_vec(),
                explore_len,
                horizon,
                reps,
                master_seed,
            },
            rows: vec![],
        };
        return Ok(certify(report));
    }
    let delta = distinct
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min);
    let required = (2.0 * l as f64 / (delta * delta)) * (2.0 * horizon as f64).ln();
    if (explore_len as f64) < required {
        return Err(Error::config(format!(
            "exploration length {explore_len} below the theorem requirement {required:.2}"
        )));
    }
    if horizon < explore_len * k {
        return Err(Error::config(format!(
            "horizon {horizon} shorter than the exploration phase {}",
            explore_len * k
        )));
    }

    let instance =
        build_registered_instance(means, &ReplicationVector::truthful(l), RewardModel::Bernoulli)?;
    let spec = RunSpec::new(instance, PolicySpec::Etc { explore_len }, horizon);
    let samples: Result<Vec<(Vec<u64>, f64)>> = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let tape = RewardTape::derive(master_seed, rep);
            let traj = run_episode(&spec, &tape)?;
            Ok((traj.pull_counts(), expost_regret(&traj)))
        })
        .collect();
    let samples = samples?;

    let mu_star = means.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut rows = Vec::new();
    for (a, &mean) in means.iter().enumerate() {
        if mean == mu_star {
            continue;
        }
        let values: Vec<f64> = samples.iter().map(|(c, _)| c[a] as f64).collect();
        let est = crate::engine::EstimateCI::from_values(&values)?;
        rows.push(row(
            format!("pulls[arm {a}]"),
            est.mean,
            3.0 * est.std_error(),
            (explore_len + 1) as f64,
        ));
    }
    let regrets: Vec<f64> = samples.iter().map(|(_, r)| *r).collect();
    let reg_est = crate::engine::EstimateCI::from_values(&regrets)?;
    let reg_bound: f64 = means
        .iter()
        .map(|&mean| {
            let gap = mu_star - mean;
            2.0 * gap * l as f64 * (2.0 * horizon as f64).ln() / (delta * delta) + 1.0
        })
        .sum();
    rows.push(row("regret", reg_est.mean, 3.0 * reg_est.std_error(), reg_bound));

    Ok(certify(BoundReport {
        check: BoundCheck::EtcPull {
            means: means.to_vec(),
            explore_len,
            horizon,
            reps,
            master_seed,
        },
        rows,
    }))
}

/// Monte-Carlo check of the misselection tail: the frequency of
/// `μ̂_a(m) ≥ μ̂_*(m)` over Bernoulli samples against `2·exp(−δ²m/2)`.
pub fn check_misselect_bound(
    mu_star: f64,
    mu_arm: f64,
    explore_len: u64,
    reps: u64,
    master_seed: u64,
) -> Result<Certificate> {
    if mu_star.partial_cmp(&mu_arm) != Some(std::cmp::Ordering::Greater) {
        return Err(Error::domain(format!(
            "need mu_star > mu_arm, got {mu_star} vs {mu_arm}"
        )));
    }
    if explore_len == 0 {
        return Err(Error::domain("exploration length must be at least 1"));
    }
    if reps < 2 {
        return Err(Error::domain("need at least 2 replications"));
    }
    let delta = mu_star - mu_arm;
    let bound = 2.0 * (-delta * delta * explore_len as f64 / 2.0).exp();
    let hits: u64 = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let tape = RewardTape::derive(master_seed, rep);
            let draw = |original: usize, pull: u64| -> f64 {
                tape.uniform(TapeKey {
                    owner: 0,
                    original,
                    copy: 0,
                    pull,
                })
            };
            let mut sum_star = 0u64;
            let mut sum_arm = 0u64;
            for p in 0..explore_len {
                if draw(0, p) < mu_star {
                    sum_star += 1;
                }
                if draw(1, p) < mu_arm {
                    sum_arm += 1;
                }
            }
            u64::from(sum_arm >= sum_star)
        })
        .sum();
    let freq = hits as f64 / reps as f64;
    let sigma = (freq * (1.0 - freq) / reps as f64).sqrt();
    let report = BoundReport {
        check: BoundCheck::Misselect {
            mu_star,
            mu_arm,
            explore_len,
            reps,
            master_seed,
        },
        rows: vec![row("misselect-frequency", freq, 3.0 * sigma, bound)],
    };
    Ok(certify(report))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn misselect_rejects_bad_inputs() {
        assert!(check_misselect_bound(0.3, 0.7, 10, 100, 0).is_err());
        assert!(check_misselect_bound(0.7, 0.3, 0, 100, 0).is_err());
    }

    #[test]
    fn misselect_deterministic_pair_frequency_zero() {
        // mu_star = 1, mu_arm = 0: Bernoulli draws are certain
        let cert = check_misselect_bound(1.0, 0.0, 5, 200, 3).unwrap();
        match cert {
            Certificate::BoundSatisfied(report) => {
                assert_eq!(report.rows[0].estimate, 0.0);
            }
            other => panic!("expected BoundSatisfied, got {}", other.kind()),
        }
    }

    // Raising m can only shrink the misselection frequency, up to CI noise.
    #[test]
    fn misselect_monotone_in_m() {
        let freq_at = |m: u64| -> (f64, f64) {
            match check_misselect_bound(0.75, 0.25, m, 20_000, 11).unwrap() {
                Certificate::BoundSatisfied(r) | Certificate::BoundViolated(r) => {
                    (r.rows[0].estimate, r.rows[0].three_sigma)
                }
                _ => unreachable!(),
            }
        };
        let (f2, s2) = freq_at(2);
        let (f8, s8) = freq_at(8);
        let (f20, s20) = freq_at(20);
        assert!(f8 <= f2 + s2 + s8);
        assert!(f20 <= f8 + s8 + s20);
    }

    #[test]
    fn etc_pull_bound_rejects_small_m() {
        let err = check_etc_pull_bound(&[0.9, 0.3], 5, 2000, 10, 0);
        assert!(matches!(err, Err(Error::Config(_))));
    }

    #[test]
    fn etc_pull_bound_vacuous_single_value() {
        let cert = check_etc_pull_bound(&[0.5, 0.5], 10, 100, 10, 0).unwrap();
        match cert {
            Certificate::BoundSatisfied(report) => assert!(report.rows.is_empty()),
            other => panic!("expected vacuous BoundSatisfied, got {}", other.kind()),
        }
    }
}
