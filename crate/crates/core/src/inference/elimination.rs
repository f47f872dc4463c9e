//! Min-fill ordering and the variable elimination loop.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::Error;
use crate::factor::Factor;
use crate::model::Variable;
use crate::scalar::Scalar;

/// Undirected graph linking every pair of variables that share a factor.
/// Built from CPT families this is the moral graph of the network.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct InteractionGraph {
    neighbors: BTreeMap<String, BTreeSet<String>>,
    cards: BTreeMap<String, usize>,
}

impl InteractionGraph {
    pub fn from_scopes<'a, I>(scopes: I) -> Self
    where
        I: IntoIterator<Item = &'a [Variable]>,
    {
        let mut graph = InteractionGraph::default();
        for scope in scopes {
            for var in scope {
                graph
                    .cards
                    .insert(var.name().to_string(), var.cardinality());
                let entry = graph.neighbors.entry(var.name().to_string()).or_default();
                for other in scope {
                    if other.name() != var.name() {
                        entry.insert(other.name().to_string());
                    }
                }
            }
        }
        graph
    }

    pub fn variables(&self) -> impl Iterator<Item = &str> {
        self.neighbors.keys().map(String::as_str)
    }

    pub fn neighbors(&self, var: &str) -> Option<&BTreeSet<String>> {
        self.neighbors.get(var)
    }

    pub fn edge_count(&self) -> usize {
        self.neighbors.values().map(BTreeSet::len).sum::<usize>() / 2
    }

    fn fill_in(&self, var: &str) -> usize {
        let nbrs: Vec<&String> = self.neighbors[var].iter().collect();
        let mut missing = 0;
        for (i, a) in nbrs.iter().enumerate() {
            for b in &nbrs[i + 1..] {
                if !self.neighbors[*a].contains(*b) {
                    missing += 1;
                }
            }
        }
        missing
    }

    /// Size of the factor created by eliminating `var` now.
    fn clique_size(&self, var: &str) -> u128 {
        self.neighbors[var]
            .iter()
            .fold(self.cards[var] as u128, |acc, n| {
                acc.saturating_mul(self.cards[n] as u128)
            })
    }

    fn remove(&mut self, var: &str) {
        let nbrs = self.neighbors.remove(var).unwrap_or_default();
        for n in &nbrs {
            let set = self.neighbors.get_mut(n).expect("symmetric adjacency");
            set.remove(var);
            set.extend(nbrs.iter().filter(|m| *m != n).cloned());
        }
        self.cards.remove(var);
    }

    /// Greedy min-fill order over every variable not in `keep`. Ties go to
    /// the smaller created factor, then to the smaller name.
    pub fn min_fill_order(&self, keep: &BTreeSet<&str>) -> Vec<String> {
        let mut graph = self.clone();
        let mut candidates: BTreeSet<String> = self
            .neighbors
            .keys()
            .filter(|v| !keep.contains(v.as_str()))
            .cloned()
            .collect();
        let mut order = Vec::with_capacity(candidates.len());
        while !candidates.is_empty() {
            let best = candidates
                .iter()
                .min_by_key(|v| (graph.fill_in(v), graph.clique_size(v), v.as_str()))
                .cloned()
                .expect("nonempty candidates");
            candidates.remove(&best);
            graph.remove(&best);
            order.push(best);
        }
        order
    }
}

/// Sums out each variable of `order` in turn. Factors mentioning the
/// variable are multiplied in list order and the result goes to the back.
pub(crate) fn eliminate<T: Scalar>(
    mut factors: Vec<Factor<T>>,
    order: &[String],
) -> Result<Vec<Factor<T>>, Error> {
    for var in order {
        let (touching, rest): (Vec<_>, Vec<_>) = factors.into_iter().partition(|f| f.contains(var));
        factors = rest;
        if touching.is_empty() {
            continue;
        }
        let merged = combine(&touching)?;
        factors.push(merged.marginalize(var)?);
    }
    Ok(factors)
}

/// Left-to-right product of all factors.
pub(crate) fn combine<T: Scalar>(factors: &[Factor<T>]) -> Result<Factor<T>, Error> {
    let mut iter = factors.iter();
    let Some(first) = iter.next() else {
        return Ok(Factor::unit());
    };
    iter.try_fold(first.clone(), |acc, f| acc.product(f))
}
