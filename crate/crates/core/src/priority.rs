//! Deterministic tie-breaking by explicit priority order.
//!
//! Every selection in this crate that could tie resolves through one of
//! these: the earliest index in the priority order wins. No hidden RNG, so a
//! full pull sequence is a pure function of (instance, tape seed, priorities).

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::instance::BanditInstance;
use crate::perm::Permutation;

/// A priority order over indices `{0, .., k-1}`; `order[0]` is strongest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TieBreakPriority {
    order: Vec<usize>,
}

impl TieBreakPriority {
    pub fn new(order: Vec<usize>) -> Result<Self> {
        // a priority order is exactly a permutation of the index set
        Permutation::new(order.clone())?;
        Ok(Self { order })
    }

    pub fn identity(k: usize) -> Self {
        Self {
            order: (0..k).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// Indices from strongest to weakest.
    pub fn ranked(&self) -> &[usize] {
        &self.order
    }

    /// First index in priority order satisfying `pred`.
    pub fn first_where(&self, mut pred: impl FnMut(usize) -> bool) -> Option<usize> {
        self.order.iter().copied().find(|&i| pred(i))
    }

    /// Argmax of `score` over `candidates` membership, ties resolved by
    /// priority. `candidates(i)` gates which indices compete.
    pub fn argmax(
        &self,
        mut candidates: impl FnMut(usize) -> bool,
        mut score: impl FnMut(usize) -> f64,
    ) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for &i in &self.order {
            if !candidates(i) {
                continue;
            }
            let s = score(i);
            match best {
                Some((_, bs)) if s <= bs => {}
                _ => best = Some((i, s)),
            }
        }
        best.map(|(i, _)| i)
    }

    /// The priority induced on relabeled indices: if this priority ranks
    /// position `p` somewhere, the permuted priority ranks `σ(p)` there.
    /// Permuting an instance and its priority together commutes with
    /// selection.
    pub fn permuted(&self, sigma: &Permutation) -> Result<Self> {
        let order = self.order.iter().map(|&p| sigma.apply(p)).collect();
        TieBreakPriority::new(order)
    }

    /// Members of `set` in priority order.
    pub fn sort_by_priority(&self, set: &[usize]) -> Vec<usize> {
        self.order
            .iter()
            .copied()
            .filter(|i| set.contains(i))
            .collect()
    }
}

/// Agent-level and arm-level priority, bundled. Flat policies only consult
/// the arm priority; hierarchical ones use both.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Priorities {
    pub agents: TieBreakPriority,
    pub arms: TieBreakPriority,
}

impl Priorities {
    pub fn new(agents: TieBreakPriority, arms: TieBreakPriority) -> Self {
        Self { agents, arms }
    }

    /// Index order on both levels for the given instance.
    pub fn identity(instance: &BanditInstance) -> Self {
        Self {
            agents: TieBreakPriority::identity(instance.num_agents()),
            arms: TieBreakPriority::identity(instance.len()),
        }
    }
}
