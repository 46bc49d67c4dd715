//! Exploration-length formulas behind the positive theorems.
//!
//! Several horizons in the test plans are themselves functions of the
//! exploration length, so these helpers resolve the circular definitions by
//! a minimal fixed-point scan: the smallest integer m that satisfies its own
//! bound at the horizon it induces.

use serde::{Deserialize, Serialize};

/// `⌈(2l/Δ²)·ln(2T)⌉`: the exploration length that makes ETC truthful
/// under random permutation at horizon `T`.
pub fn etc_theorem_m(l: usize, delta: f64, horizon: u64) -> u64 {
    let bound = (2.0 * l as f64 / (delta * delta)) * (2.0 * horizon as f64).ln();
    bound.ceil() as u64
}

/// Minimal `m` with `m ≥ (2l/Δ²)·ln(2T)` for the self-referential horizon
/// `T = 4·m·l`, returned as `(m, T)`.
pub fn etc_theorem_params(l: usize, delta: f64) -> (u64, u64) {
    let mut m = 1u64;
    loop {
        let horizon = 4 * m * l as u64;
        let bound = (2.0 * l as f64 / (delta * delta)) * (2.0 * horizon as f64).ln();
        if m as f64 >= bound {
            return (m, horizon);
        }
        m += 1;
    }
}

/// Resolved hierarchical-ETC parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HetcParams {
    /// Phase-2 per-arm exploration length m.
    pub arm_explore: u64,
    /// Phase-1 per-agent exploration length M.
    pub agent_explore: u64,
    /// Restart round τ = M·n.
    pub restart: u64,
    pub horizon: u64,
}

/// How the evaluation horizon is tied to the exploration budgets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HetcHorizonForm {
    /// T = M·n + 4·m·L, exploration plus a committed stretch.
    ExplorePlusCommit,
    /// T = 2·M·n, exploitation as long as exploration.
    TwiceExploration,
}

/// Replication-proofness parameters: `m = ⌈(2/Δ²)·L·ln(2T)⌉`, `M = m·L`,
/// `τ = M·n`, with the horizon tied to them by `form`. Returns the minimal
/// fixed point.
pub fn hetc_theorem_params(
    n: usize,
    l_max: usize,
    delta: f64,
    form: HetcHorizonForm,
) -> HetcParams {
    let mut m = 1u64;
    loop {
        let big_m = m * l_max as u64;
        let horizon = match form {
            HetcHorizonForm::ExplorePlusCommit => big_m * n as u64 + 4 * m * l_max as u64,
            HetcHorizonForm::TwiceExploration => 2 * big_m * n as u64,
        };
        let bound = (2.0 / (delta * delta)) * l_max as f64 * (2.0 * horizon as f64).ln();
        if m as f64 >= bound {
            return HetcParams {
                arm_explore: m,
                agent_explore: big_m,
                restart: big_m * n as u64,
                horizon,
            };
        }
        m += 1;
    }
}

/// Regret-rate parameters for a given horizon: `m = ⌈(2/Δ²)·L·ln(2T)⌉`,
/// `M = max(mL, ⌈√(T ln T)⌉)`, `τ = M·n`.
pub fn hetc_scaling_params(n: usize, l_max: usize, delta: f64, horizon: u64) -> HetcParams {
    let m = {
        let bound = (2.0 / (delta * delta)) * l_max as f64 * (2.0 * horizon as f64).ln();
        bound.ceil() as u64
    };
    let root = (horizon as f64 * (horizon as f64).ln()).sqrt().ceil() as u64;
    let big_m = (m * l_max as u64).max(root);
    HetcParams {
        arm_explore: m,
        agent_explore: big_m,
        restart: big_m * n as u64,
        horizon,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn etc_m_matches_direct_formula() {
        // l=2, Δ=0.6, T=2000: (4/0.36)·ln(4000) = 11.11·8.294 = 92.2
        assert_eq!(etc_theorem_m(2, 0.6, 2000), 93);
    }

    #[test]
    fn etc_fixed_point_is_minimal() {
        let (m, horizon) = etc_theorem_params(2, 1.0);
        assert_eq!(horizon, 4 * m * 2);
        let bound = |m: u64| 4.0 * (2.0 * (8 * m) as f64).ln();
        assert!(m as f64 >= bound(m));
        assert!(((m - 1) as f64) < bound(m - 1));
    }

    #[test]
    fn hetc_fixed_points_are_minimal() {
        for form in [
            HetcHorizonForm::ExplorePlusCommit,
            HetcHorizonForm::TwiceExploration,
        ] {
            let p = hetc_theorem_params(2, 2, 1.0, form);
            assert_eq!(p.agent_explore, p.arm_explore * 2);
            assert_eq!(p.restart, p.agent_explore * 2);
            let bound = |m: u64| {
                let horizon = match form {
                    HetcHorizonForm::ExplorePlusCommit => m * 2 * 2 + 4 * m * 2,
                    HetcHorizonForm::TwiceExploration => 2 * m * 2 * 2,
                };
                2.0 * 2.0 * (2.0 * horizon as f64).ln()
            };
            assert!(p.arm_explore as f64 >= bound(p.arm_explore));
            assert!(((p.arm_explore - 1) as f64) < bound(p.arm_explore - 1));
        }
    }

    #[test]
    fn scaling_params_switch_to_root_term() {
        // large T: sqrt(T ln T) dominates mL
        let p = hetc_scaling_params(2, 2, 0.5, 65_536);
        let root = (65_536.0f64 * 65_536.0f64.ln()).sqrt().ceil() as u64;
        assert_eq!(p.agent_explore, root);
        // small T: mL dominates
        let p = hetc_scaling_params(2, 2, 0.5, 4_096);
        assert_eq!(p.agent_explore, p.arm_explore * 2);
    }
}
