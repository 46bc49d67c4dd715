//! Mechanical verifiers for the theorem-shaped claims, each returning a
//! re-checkable [`Certificate`].
//!
//! A certificate's payload carries every parameter and seed that went into
//! its verdict; [`recheck`] re-runs the computation from the payload alone
//! and must reproduce the certificate bit-for-bit.

mod bounds;
mod eps_form;
mod params;
mod pi;
mod rp;
mod scaling;
mod trp;

pub use bounds::{
    check_etc_pull_bound, check_misselect_bound, BoundCheck, BoundReport, BoundRow,
};
pub use eps_form::{check_eps_greedy_closed_form, EpsFormReport, EpsInequality, EpsInstanceRow};
pub use params::{
    etc_theorem_m, etc_theorem_params, hetc_scaling_params, hetc_theorem_params, HetcHorizonForm,
    HetcParams,
};
pub use pi::{check_permutation_invariance, PiCase, PiReport};
pub use rp::{check_replication_proof, OpponentSetup, RpCase, RpCheckConfig, RpReport, RpRow};
pub use scaling::{check_hetc_regret_scaling, ScalingConfig, ScalingReportBody, ScalingRow};
pub use trp::{check_trp, RowStatus, TrpReport, TrpRow};

use serde::{Deserialize, Serialize};

use crate::counterexamples::{HucbSearchReport, UcbFailureReport};
use crate::error::Result;

/// A machine-checkable witness of a verified claim or found deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Certificate {
    TrpHolds(TrpReport),
    TrpViolation(TrpReport),
    TrpInconclusive(TrpReport),
    PiHolds(PiReport),
    PiViolated(PiReport),
    BestResponseDeviation(RpReport),
    NoDeviationFound(RpReport),
    RpInconclusive(RpReport),
    BoundSatisfied(BoundReport),
    BoundViolated(BoundReport),
    ScalingReport(ScalingReportBody),
    ClosedFormMatch(EpsFormReport),
    ClosedFormMismatch(EpsFormReport),
    UcbFailure(UcbFailureReport),
    HucbDeviation(HucbSearchReport),
    HucbNoneFound(HucbSearchReport),
}

impl Certificate {
    pub fn kind(&self) -> &'static str {
        match self {
            Certificate::TrpHolds(_) => "trp-holds",
            Certificate::TrpViolation(_) => "trp-violation",
            Certificate::TrpInconclusive(_) => "trp-inconclusive",
            Certificate::PiHolds(_) => "pi-holds",
            Certificate::PiViolated(_) => "pi-violated",
            Certificate::BestResponseDeviation(_) => "best-response-deviation",
            Certificate::NoDeviationFound(_) => "no-deviation-found",
            Certificate::RpInconclusive(_) => "rp-inconclusive",
            Certificate::BoundSatisfied(_) => "bound-satisfied",
            Certificate::BoundViolated(_) => "bound-violated",
            Certificate::ScalingReport(_) => "scaling-report",
            Certificate::ClosedFormMatch(_) => "closed-form-match",
            Certificate::ClosedFormMismatch(_) => "closed-form-mismatch",
            Certificate::UcbFailure(_) => "ucb-failure",
            Certificate::HucbDeviation(_) => "hucb-deviation",
            Certificate::HucbNoneFound(_) => "hucb-none-found",
        }
    }

    /// Statistical verdict that landed in the 3σ band without resolving.
    pub fn is_inconclusive(&self) -> bool {
        matches!(
            self,
            Certificate::TrpInconclusive(_) | Certificate::RpInconclusive(_)
        )
    }
}

/// Re-runs the check from the certificate's own payload. A certificate is
/// valid iff this returns an equal certificate.
pub fn recheck(cert: &Certificate) -> Result<Certificate> {
    match cert {
        Certificate::TrpHolds(r) | Certificate::TrpViolation(r) | Certificate::TrpInconclusive(r) => {
            // rows carry only the non-truthful strategies; restore the zero
            // vector the strategy-set precondition requires
            let mut strategies: Vec<_> = r.rows.iter().map(|row| row.r.clone()).collect();
            strategies.push(vec![0; r.original_means.len()]);
            check_trp(
                &r.policy,
                &r.original_means,
                &strategies,
                r.horizon,
                r.model,
                &r.mode,
            )
        }
        Certificate::PiHolds(r) | Certificate::PiViolated(r) => {
            let cases: Vec<_> = r
                .cases
                .iter()
                .map(|c| (c.sigma.clone(), c.seed))
                .collect();
            check_permutation_invariance(&r.policy, &r.instance, r.horizon, &cases)
        }
        Certificate::BestResponseDeviation(r)
        | Certificate::NoDeviationFound(r)
        | Certificate::RpInconclusive(r) => check_replication_proof(&r.config),
        Certificate::BoundSatisfied(r) | Certificate::BoundViolated(r) => match &r.check {
            BoundCheck::EtcPull {
                means,
                explore_len,
                horizon,
                reps,
                master_seed,
            } => check_etc_pull_bound(means, *explore_len, *horizon, *reps, *master_seed),
            BoundCheck::Misselect {
                mu_star,
                mu_arm,
                explore_len,
                reps,
                master_seed,
            } => check_misselect_bound(*mu_star, *mu_arm, *explore_len, *reps, *master_seed),
        },
        Certificate::ScalingReport(r) => check_hetc_regret_scaling(&r.config),
        Certificate::ClosedFormMatch(r) | Certificate::ClosedFormMismatch(r) => {
            check_eps_greedy_closed_form(
                r.mu_top,
                r.mu_bottom,
                &r.schedule,
                r.horizon,
                r.reps,
                r.master_seed,
            )
        }
        Certificate::UcbFailure(r) => {
            crate::counterexamples::ucb_failure_certificate_with(r.scale, r.search_cap, r.alpha)
        }
        Certificate::HucbDeviation(r) | Certificate::HucbNoneFound(r) => {
            Ok(crate::counterexamples::hucb_failure_search(
                r.prior_high,
                r.grid_step,
                r.horizon_cap,
                r.alpha,
            )?)
        }
    }
}
