//! Permutations on `{0, .., l-1}` and their exhaustive enumeration.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest `l` for which full enumeration of all `l!` permutations is
/// supported (8! = 40320). Larger sweeps must sample.
pub const MAX_ENUM_LEN: usize = 8;

/// A bijection on `{0, .., l-1}`, stored as `map[i] = σ(i)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Permutation {
    map: Vec<usize>,
}

impl Permutation {
    pub fn new(map: Vec<usize>) -> Result<Self> {
        let l = map.len();
        let mut seen = vec![false; l];
        for &v in &map {
            if v >= l || seen[v] {
                return Err(Error::domain(format!("{map:?} is not a bijection on 0..{l}")));
            }
            seen[v] = true;
        }
        Ok(Self { map })
    }

    pub fn identity(l: usize) -> Self {
        Self {
            map: (0..l).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.map.iter().enumerate().all(|(i, &v)| i == v)
    }

    /// σ(i)
    pub fn apply(&self, i: usize) -> usize {
        self.map[i]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.map
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.map.len()];
        for (i, &v) in self.map.iter().enumerate() {
            inv[v] = i;
        }
        Self { map: inv }
    }

    /// Composition `self ∘ other`: `i ↦ self(other(i))`.
    pub fn compose(&self, other: &Permutation) -> Result<Self> {
        if self.len() != other.len() {
            return Err(Error::domain("composing permutations of different arity"));
        }
        Ok(Self {
            map: other.map.iter().map(|&i| self.map[i]).collect(),
        })
    }

    /// Moves the element at position `i` to position `σ(i)`.
    pub fn permute_positions<T: Clone>(&self, items: &[T]) -> Result<Vec<T>> {
        if items.len() != self.len() {
            return Err(Error::domain(format!(
                "permutation of arity {} applied to {} items",
                self.len(),
                items.len()
            )));
        }
        let mut out = items.to_vec();
        for (i, item) in items.iter().enumerate() {
            out[self.map[i]] = item.clone();
        }
        Ok(out)
    }

    /// Reads entries through σ: `out[i] = items[σ(i)]`.
    pub fn gather<T: Clone>(&self, items: &[T]) -> Result<Vec<T>> {
        if items.len() != self.len() {
            return Err(Error::domain(format!(
                "permutation of arity {} applied to {} items",
                self.len(),
                items.len()
            )));
        }
        Ok(self.map.iter().map(|&i| items[i].clone()).collect())
    }
}

/// All `l!` permutations of `{0, .., l-1}` in lexicographic order of their
/// `map` vectors. Deterministic; rejects `l > MAX_ENUM_LEN`.
pub fn enumerate_permutations(l: usize) -> Result<Vec<Permutation>> {
    if l == 0 {
        return Err(Error::domain("no permutations of an empty index set"));
    }
    if l > MAX_ENUM_LEN {
        return Err(Error::budget(format!(
            "permutation enumeration capped at l <= {MAX_ENUM_LEN}, got {l}"
        )));
    }
    let mut out = Vec::new();
    let mut current: Vec<usize> = (0..l).collect();
    loop {
        out.push(Permutation {
            map: current.clone(),
        });
        // lexicographic successor
        let Some(i) = (0..l.saturating_sub(1)).rev().find(|&i| current[i] < current[i + 1]) else {
            break;
        };
        let j = (i + 1..l).rev().find(|&j| current[j] > current[i]).unwrap();
        current.swap(i, j);
        current[i + 1..].reverse();
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn enumerates_factorial_many_distinct() {
        for l in 1..=5 {
            let perms = enumerate_permutations(l).unwrap();
            let expect: usize = (1..=l).product();
            assert_eq!(perms.len(), expect);
            let set: HashSet<_> = perms.iter().map(|p| p.map.clone()).collect();
            assert_eq!(set.len(), expect);
        }
    }

    #[test]
    fn rejects_over_budget() {
        assert!(matches!(
            enumerate_permutations(MAX_ENUM_LEN + 1),
            Err(Error::Budget(_))
        ));
    }

    #[test]
    fn compose_with_inverse_is_identity() {
        for p in enumerate_permutations(4).unwrap() {
            assert!(p.compose(&p.inverse()).unwrap().is_identity());
            assert!(p.inverse().compose(&p).unwrap().is_identity());
        }
    }

    #[test]
    fn permute_positions_and_gather_are_inverse_views() {
        let p = Permutation::new(vec![2, 0, 1]).unwrap();
        let items = vec!["a", "b", "c"];
        // position i -> sigma(i): a lands at 2, b at 0, c at 1
        assert_eq!(p.permute_positions(&items).unwrap(), vec!["b", "c", "a"]);
        assert_eq!(p.gather(&items).unwrap(), vec!["c", "a", "b"]);
        assert_eq!(
            p.inverse()
                .gather(&p.gather(&items).unwrap())
                .unwrap(),
            items
        );
    }

    #[test]
    fn rejects_non_bijections() {
        assert!(Permutation::new(vec![0, 0]).is_err());
        assert!(Permutation::new(vec![1, 2]).is_err());
    }
}
