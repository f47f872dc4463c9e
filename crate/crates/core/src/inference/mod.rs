//! Exact queries by variable elimination.
//!
//! An [`Engine`] holds one factor per table. Each query reduces those factors
//! by the evidence, eliminates everything except the requested nodes in
//! min-fill order and normalizes. The engine never stores per-call evidence,
//! so a single engine can serve concurrent queries.

mod elimination;
mod oracle;

use std::collections::BTreeSet;

pub use elimination::InteractionGraph;
pub use oracle::{
    brute_force_joint, brute_force_joint_capped, brute_force_marginal, DEFAULT_JOINT_CAP,
};

use crate::error::Error;
use crate::factor::Factor;
use crate::model::{Evidence, Network};
use crate::scalar::Scalar;

use elimination::{combine, eliminate};

#[derive(Debug, Clone)]
pub struct Engine<T> {
    network: Network<T>,
    factors: Vec<Factor<T>>,
    absorbed: Evidence,
    graph: InteractionGraph,
}

/// Posterior distribution of one variable over its full state space.
#[derive(Debug, Clone, PartialEq)]
pub struct Marginal<T> {
    variable: String,
    states: Vec<String>,
    probs: Vec<T>,
}

impl<T: Scalar> Marginal<T> {
    pub fn new(variable: impl Into<String>, states: Vec<String>, probs: Vec<T>) -> Self {
        Marginal {
            variable: variable.into(),
            states,
            probs,
        }
    }

    pub fn variable(&self) -> &str {
        &self.variable
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn probs(&self) -> &[T] {
        &self.probs
    }

    pub fn prob(&self, state: &str) -> Option<&T> {
        self.states
            .iter()
            .position(|s| s == state)
            .map(|i| &self.probs[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &T)> {
        self.states.iter().map(String::as_str).zip(&self.probs)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueryResult<T> {
    marginals: Vec<Marginal<T>>,
    evidence_probability: T,
}

impl<T: Scalar> QueryResult<T> {
    pub fn new(marginals: Vec<Marginal<T>>, evidence_probability: T) -> Self {
        QueryResult {
            marginals,
            evidence_probability,
        }
    }

    /// Marginals in the order the nodes were requested.
    pub fn marginals(&self) -> &[Marginal<T>] {
        &self.marginals
    }

    pub fn marginal(&self, variable: &str) -> Option<&Marginal<T>> {
        self.marginals.iter().find(|m| m.variable == variable)
    }

    /// Probability of the evidence under the model; one without evidence.
    pub fn evidence_probability(&self) -> &T {
        &self.evidence_probability
    }
}

impl<T: Scalar> Engine<T> {
    pub fn compile(network: Network<T>) -> Self {
        let factors: Vec<Factor<T>> = network
            .cpts()
            .iter()
            .map(|cpt| Factor::from_cpt(cpt, &network))
            .collect();
        let graph = InteractionGraph::from_scopes(factors.iter().map(Factor::scope));
        Engine {
            network,
            factors,
            absorbed: Evidence::new(),
            graph,
        }
    }

    pub fn network(&self) -> &Network<T> {
        &self.network
    }

    pub fn factors(&self) -> &[Factor<T>] {
        &self.factors
    }

    pub fn interaction_graph(&self) -> &InteractionGraph {
        &self.graph
    }

    /// Evidence already folded into this engine's factors by
    /// [`Engine::condition`].
    pub fn absorbed_evidence(&self) -> &Evidence {
        &self.absorbed
    }

    /// Min-fill elimination order over every variable outside `keep`.
    pub fn elimination_order(&self, keep: &[&str]) -> Vec<String> {
        let keep: BTreeSet<&str> = keep.iter().copied().collect();
        self.graph.min_fill_order(&keep)
    }

    /// A new engine whose factors are reduced by `evidence`. Later queries on
    /// it are conditioned on `evidence` as well as their own.
    pub fn condition(&self, evidence: &Evidence) -> Result<Engine<T>, Error> {
        let fresh = self.fresh_evidence(evidence)?;
        let factors = self.reduce_factors(&fresh)?;
        let graph = InteractionGraph::from_scopes(factors.iter().map(Factor::scope));
        Ok(Engine {
            network: self.network.clone(),
            factors,
            absorbed: self
                .absorbed
                .union(evidence)
                .map_err(|_| Error::ImpossibleEvidence)?,
            graph,
        })
    }

    /// Validates `evidence` and returns the assignments not yet absorbed.
    /// Contradicting absorbed evidence makes the evidence impossible.
    fn fresh_evidence(&self, evidence: &Evidence) -> Result<Vec<(usize, usize)>, Error> {
        let resolved = self.network.resolve_evidence(evidence)?;
        let mut fresh = Vec::with_capacity(resolved.len());
        for (var, state) in resolved {
            let name = self.network.variables()[var].name();
            match self.absorbed.get(name) {
                Some(label) if self.network.variables()[var].state_index(label) == Some(state) => {}
                Some(_) => return Err(Error::ImpossibleEvidence),
                None => fresh.push((var, state)),
            }
        }
        Ok(fresh)
    }

    fn reduce_factors(&self, evidence: &[(usize, usize)]) -> Result<Vec<Factor<T>>, Error> {
        self.factors
            .iter()
            .map(|f| {
                evidence.iter().try_fold(f.clone(), |acc, &(var, state)| {
                    let name = self.network.variables()[var].name();
                    if acc.contains(name) {
                        acc.reduce_index(name, state)
                    } else {
                        Ok(acc)
                    }
                })
            })
            .collect()
    }

    fn observed_state(&self, fresh: &[(usize, usize)], var: usize) -> Option<usize> {
        if let Some(&(_, s)) = fresh.iter().find(|(v, _)| *v == var) {
            return Some(s);
        }
        let variable = &self.network.variables()[var];
        self.absorbed
            .get(variable.name())
            .and_then(|label| variable.state_index(label))
    }

    fn check_nodes(&self, nodes: &[&str]) -> Result<Vec<usize>, Error> {
        if nodes.is_empty() {
            return Err(Error::EmptyQuery);
        }
        let mut seen = BTreeSet::new();
        nodes
            .iter()
            .map(|name| {
                if !seen.insert(*name) {
                    return Err(Error::DuplicateNode(name.to_string()));
                }
                self.network
                    .index_of(name)
                    .ok_or_else(|| Error::UnknownVariable(name.to_string()))
            })
            .collect()
    }

    /// Posterior marginal of each node given `evidence`.
    ///
    /// An observed node comes back as a point mass on its observed state.
    pub fn query(&self, evidence: &Evidence, nodes: &[&str]) -> Result<QueryResult<T>, Error> {
        let ids = self.check_nodes(nodes)?;
        let fresh = self.fresh_evidence(evidence)?;
        let factors = self.reduce_factors(&fresh)?;
        let graph = InteractionGraph::from_scopes(factors.iter().map(Factor::scope));

        let everything = graph.min_fill_order(&BTreeSet::new());
        let mass = combine(&eliminate(factors.clone(), &everything)?)?.total();
        if mass.is_zero() {
            return Err(Error::ImpossibleEvidence);
        }

        let mut marginals = Vec::with_capacity(ids.len());
        for (&var, &name) in ids.iter().zip(nodes) {
            let variable = &self.network.variables()[var];
            let probs = match self.observed_state(&fresh, var) {
                Some(state) => Factor::indicator(variable, state).into_values(),
                None => {
                    let order = graph.min_fill_order(&BTreeSet::from([name]));
                    let remaining = eliminate(factors.clone(), &order)?;
                    combine(&remaining)?
                        .permute(&[name])?
                        .normalize()?
                        .into_values()
                }
            };
            marginals.push(Marginal::new(name, variable.states().to_vec(), probs));
        }
        Ok(QueryResult::new(marginals, mass))
    }

    /// Normalized joint posterior over `nodes`, scope in the given order.
    pub fn query_joint(&self, evidence: &Evidence, nodes: &[&str]) -> Result<Factor<T>, Error> {
        let ids = self.check_nodes(nodes)?;
        let fresh = self.fresh_evidence(evidence)?;
        // observed query nodes stay in scope through an indicator instead of
        // being sliced away
        let slice: Vec<(usize, usize)> = fresh
            .iter()
            .copied()
            .filter(|(v, _)| !ids.contains(v))
            .collect();
        let mut factors = self.reduce_factors(&slice)?;
        for &var in &ids {
            let pinned = fresh.iter().any(|(v, _)| *v == var)
                || self.absorbed.contains(self.network.variables()[var].name());
            if pinned {
                let state = self
                    .observed_state(&fresh, var)
                    .expect("pinned node has an observed state");
                factors.push(Factor::indicator(&self.network.variables()[var], state));
            }
        }
        let graph = InteractionGraph::from_scopes(factors.iter().map(Factor::scope));
        let keep: BTreeSet<&str> = nodes.iter().copied().collect();
        let remaining = eliminate(factors, &graph.min_fill_order(&keep))?;
        combine(&remaining)?.permute(nodes)?.normalize()
    }
}
