//! Variables, conditional probability tables and the validated network.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::Error;
use crate::scalar::Scalar;

/// Characters that cannot appear in a bare word of the text format.
pub(crate) const RESERVED_CHARS: &[char] = &[':', '|', ',', '=', '[', ']', ';', '#', '@', '"'];

pub(crate) fn is_bare_word(text: &str) -> bool {
    !text.is_empty()
        && !text
            .chars()
            .any(|c| c.is_whitespace() || c.is_control() || RESERVED_CHARS.contains(&c))
}

/// What a variable stands for. Metadata only; inference ignores it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Role {
    Trait,
    Question,
    #[default]
    Unspecified,
}

/// A named discrete variable with an ordered state space.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Variable {
    name: String,
    states: Vec<String>,
    role: Role,
}

impl Variable {
    pub fn new<N, S, I>(name: N, states: I, role: Role) -> Result<Self, Error>
    where
        N: Into<String>,
        S: Into<String>,
        I: IntoIterator<Item = S>,
    {
        let name = name.into();
        if !is_bare_word(&name) {
            return Err(Error::InvalidName(name));
        }
        let states: Vec<String> = states.into_iter().map(Into::into).collect();
        if states.len() < 2 {
            return Err(Error::TooFewStates {
                variable: name,
                found: states.len(),
            });
        }
        let mut seen = BTreeSet::new();
        for state in &states {
            if state.is_empty() || state.chars().any(|c| c.is_control()) {
                return Err(Error::InvalidState {
                    variable: name,
                    state: state.clone(),
                });
            }
            if !seen.insert(state.as_str()) {
                return Err(Error::DuplicateState {
                    variable: name,
                    state: state.clone(),
                });
            }
        }
        Ok(Variable { name, states, role })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn cardinality(&self) -> usize {
        self.states.len()
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn state_index(&self, label: &str) -> Option<usize> {
        self.states.iter().position(|s| s == label)
    }
}

/// `P(child | parents)` as one row per parent configuration.
///
/// Parent configurations are enumerated row-major with the last listed parent
/// varying fastest. A parentless table has exactly one row (the prior).
#[derive(Debug, Clone, PartialEq)]
pub struct Cpt<T> {
    child: String,
    parents: Vec<String>,
    rows: Vec<Vec<T>>,
}

impl<T: Scalar> Cpt<T> {
    /// Rows may hold any nonnegative weights; they are checked and
    /// normalized by [`build_network`].
    pub fn new<C, P, I>(child: C, parents: I, rows: Vec<Vec<T>>) -> Self
    where
        C: Into<String>,
        P: Into<String>,
        I: IntoIterator<Item = P>,
    {
        Cpt {
            child: child.into(),
            parents: parents.into_iter().map(Into::into).collect(),
            rows,
        }
    }

    pub fn prior<C: Into<String>>(child: C, row: Vec<T>) -> Self {
        Cpt::new(child, Vec::<String>::new(), vec![row])
    }

    pub fn child(&self) -> &str {
        &self.child
    }

    pub fn parents(&self) -> &[String] {
        &self.parents
    }

    pub fn rows(&self) -> &[Vec<T>] {
        &self.rows
    }

    pub fn row(&self, config: usize) -> &[T] {
        &self.rows[config]
    }

    /// Applies `f` to every row. Used by transforms that keep the shape.
    pub(crate) fn map_rows<F>(&self, mut f: F) -> Cpt<T>
    where
        F: FnMut(&[T]) -> Vec<T>,
    {
        Cpt {
            child: self.child.clone(),
            parents: self.parents.clone(),
            rows: self.rows.iter().map(|r| f(r)).collect(),
        }
    }
}

/// Row index of a parent configuration given each parent's state index and
/// cardinality, last parent fastest.
pub fn parent_config_index(states: &[usize], cards: &[usize]) -> usize {
    states
        .iter()
        .zip(cards)
        .fold(0, |acc, (&state, &card)| acc * card + state)
}

/// A validated directed acyclic network with one table per variable.
///
/// Immutable once built.
#[derive(Debug, Clone)]
pub struct Network<T> {
    variables: Vec<Variable>,
    index: BTreeMap<String, usize>,
    cpts: Vec<Cpt<T>>,
    parent_ids: Vec<Vec<usize>>,
    topo: Vec<usize>,
}

/// Validates and assembles a network.
///
/// Rows are normalized to sum to one unless they already do (within
/// [`crate::scalar::ROW_SUM_TOLERANCE`] for floats, exactly for rationals), so
/// percentage tables can be passed as-is.
pub fn build_network<T: Scalar>(
    variables: Vec<Variable>,
    cpts: Vec<Cpt<T>>,
) -> Result<Network<T>, Error> {
    let mut index = BTreeMap::new();
    for (i, var) in variables.iter().enumerate() {
        if index.insert(var.name.clone(), i).is_some() {
            return Err(Error::DuplicateVariable(var.name.clone()));
        }
    }

    let mut slots: Vec<Option<Cpt<T>>> = vec![None; variables.len()];
    for cpt in cpts {
        let child = *index
            .get(&cpt.child)
            .ok_or_else(|| Error::UnknownVariable(cpt.child.clone()))?;
        if slots[child].is_some() {
            return Err(Error::DuplicateCpt(cpt.child.clone()));
        }
        slots[child] = Some(cpt);
    }

    let mut tables = Vec::with_capacity(variables.len());
    let mut parent_ids = Vec::with_capacity(variables.len());
    for (i, slot) in slots.into_iter().enumerate() {
        let cpt = slot.ok_or_else(|| Error::MissingCpt(variables[i].name.clone()))?;
        let ids = resolve_parents(&cpt, &index)?;
        let cards: Vec<usize> = ids.iter().map(|&p| variables[p].cardinality()).collect();
        let cpt = normalize_cpt(cpt, &cards, variables[i].cardinality())?;
        tables.push(cpt);
        parent_ids.push(ids);
    }

    let topo = topological_sort(&variables, &parent_ids)?;
    Ok(Network {
        variables,
        index,
        cpts: tables,
        parent_ids,
        topo,
    })
}

fn resolve_parents<T>(cpt: &Cpt<T>, index: &BTreeMap<String, usize>) -> Result<Vec<usize>, Error> {
    let mut seen = BTreeSet::new();
    cpt.parents
        .iter()
        .map(|p| {
            if !seen.insert(p.as_str()) {
                return Err(Error::DuplicateParent {
                    child: cpt.child.clone(),
                    parent: p.clone(),
                });
            }
            index
                .get(p)
                .copied()
                .ok_or_else(|| Error::UnknownVariable(p.clone()))
        })
        .collect()
}

fn normalize_cpt<T: Scalar>(
    mut cpt: Cpt<T>,
    parent_cards: &[usize],
    child_card: usize,
) -> Result<Cpt<T>, Error> {
    let expected_rows: usize = parent_cards.iter().product();
    if cpt.rows.len() != expected_rows {
        return Err(Error::RowCount {
            child: cpt.child,
            expected: expected_rows,
            found: cpt.rows.len(),
        });
    }
    for (r, row) in cpt.rows.iter_mut().enumerate() {
        if row.len() != child_card {
            return Err(Error::RowLength {
                child: cpt.child,
                row: r,
                expected: child_card,
                found: row.len(),
            });
        }
        if let Some(c) = row.iter().position(|v| !v.is_nonnegative()) {
            return Err(Error::InvalidEntry {
                child: cpt.child,
                row: r,
                column: c,
            });
        }
        let total = T::sum_of(row.iter());
        if total.is_zero() {
            return Err(Error::ZeroRow {
                child: cpt.child,
                row: r,
            });
        }
        if !T::is_unit_sum(&total) {
            for v in row.iter_mut() {
                *v = v.clone() / total.clone();
            }
        }
    }
    Ok(cpt)
}

fn topological_sort(
    variables: &[Variable],
    parent_ids: &[Vec<usize>],
) -> Result<Vec<usize>, Error> {
    let n = variables.len();
    let mut pending: Vec<usize> = parent_ids.iter().map(Vec::len).collect();
    let mut children = vec![Vec::new(); n];
    for (child, parents) in parent_ids.iter().enumerate() {
        for &p in parents {
            children[p].push(child);
        }
    }
    let mut ready: BTreeSet<(&str, usize)> = (0..n)
        .filter(|&i| pending[i] == 0)
        .map(|i| (variables[i].name.as_str(), i))
        .collect();
    let mut order = Vec::with_capacity(n);
    while let Some(entry) = ready.pop_first() {
        let v = entry.1;
        order.push(v);
        for &c in &children[v] {
            pending[c] -= 1;
            if pending[c] == 0 {
                ready.insert((variables[c].name.as_str(), c));
            }
        }
    }
    if order.len() == n {
        return Ok(order);
    }
    Err(Error::Cycle(find_cycle(variables, parent_ids, &pending)))
}

/// Walks parent links among the vertices Kahn's algorithm could not place
/// until one repeats.
fn find_cycle(variables: &[Variable], parent_ids: &[Vec<usize>], pending: &[usize]) -> Vec<String> {
    let stuck = |i: usize| pending[i] > 0;
    let start = (0..variables.len())
        .filter(|&i| stuck(i))
        .min_by(|&a, &b| variables[a].name.cmp(&variables[b].name))
        .expect("a failed sort leaves a vertex with pending parents");
    let mut path = vec![start];
    let mut position = BTreeMap::from([(start, 0usize)]);
    let mut current = start;
    loop {
        let next = parent_ids[current]
            .iter()
            .copied()
            .filter(|&p| stuck(p))
            .min_by(|&a, &b| variables[a].name.cmp(&variables[b].name))
            .expect("a stuck vertex has a stuck parent");
        if let Some(&at) = position.get(&next) {
            // path runs child -> parent; flip it to follow edge direction
            let mut cycle: Vec<usize> = path[at..].to_vec();
            cycle.reverse();
            let lowest = (0..cycle.len())
                .min_by(|&a, &b| variables[cycle[a]].name.cmp(&variables[cycle[b]].name))
                .unwrap_or(0);
            cycle.rotate_left(lowest);
            return cycle
                .into_iter()
                .map(|i| variables[i].name.clone())
                .collect();
        }
        position.insert(next, path.len());
        path.push(next);
        current = next;
    }
}

impl<T: Scalar> Network<T> {
    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn len(&self) -> usize {
        self.variables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.variables.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn variable(&self, name: &str) -> Option<&Variable> {
        self.index_of(name).map(|i| &self.variables[i])
    }

    pub fn cpt(&self, name: &str) -> Option<&Cpt<T>> {
        self.index_of(name).map(|i| &self.cpts[i])
    }

    /// Tables aligned with [`Network::variables`].
    pub fn cpts(&self) -> &[Cpt<T>] {
        &self.cpts
    }

    pub(crate) fn parent_ids(&self, var: usize) -> &[usize] {
        &self.parent_ids[var]
    }

    pub(crate) fn topo_ids(&self) -> &[usize] {
        &self.topo
    }

    /// Every variable after all of its parents; ties go to the
    /// lexicographically smaller name.
    pub fn topological_order(&self) -> Vec<&str> {
        self.topo
            .iter()
            .map(|&i| self.variables[i].name())
            .collect()
    }

    /// Parent to child pairs, grouped by child in topological order.
    pub fn edges(&self) -> Vec<(&str, &str)> {
        self.topo
            .iter()
            .flat_map(|&c| {
                self.parent_ids[c]
                    .iter()
                    .map(move |&p| (self.variables[p].name(), self.variables[c].name()))
            })
            .collect()
    }

    pub fn edge_count(&self) -> usize {
        self.parent_ids.iter().map(Vec::len).sum()
    }

    /// Probability of `state` for variable `var` given a full assignment of
    /// state indices indexed like [`Network::variables`].
    pub(crate) fn conditional(&self, var: usize, assignment: &[usize]) -> &T {
        let row = self.parent_ids[var].iter().fold(0, |acc, &p| {
            acc * self.variables[p].cardinality() + assignment[p]
        });
        &self.cpts[var].rows[row][assignment[var]]
    }

    /// Maps evidence labels onto `(variable index, state index)` pairs,
    /// sorted by variable index.
    pub fn resolve_evidence(&self, evidence: &Evidence) -> Result<Vec<(usize, usize)>, Error> {
        let mut resolved = evidence
            .iter()
            .map(|(name, state)| {
                let var = self
                    .index_of(name)
                    .ok_or_else(|| Error::UnknownVariable(name.to_string()))?;
                let s =
                    self.variables[var]
                        .state_index(state)
                        .ok_or_else(|| Error::UnknownState {
                            variable: name.to_string(),
                            state: state.to_string(),
                        })?;
                Ok((var, s))
            })
            .collect::<Result<Vec<_>, Error>>()?;
        resolved.sort_unstable();
        Ok(resolved)
    }

    /// Rebuilds the network with some tables replaced, revalidating
    /// everything.
    pub fn with_cpts<F>(&self, mut replace: F) -> Result<Network<T>, Error>
    where
        F: FnMut(&Variable, &Cpt<T>) -> Cpt<T>,
    {
        let cpts = self
            .variables
            .iter()
            .zip(&self.cpts)
            .map(|(v, c)| replace(v, c))
            .collect();
        build_network(self.variables.clone(), cpts)
    }
}

/// Order-insensitive: two networks are equal when they declare the same
/// variables with the same tables, whatever the declaration order.
impl<T: Scalar> PartialEq for Network<T> {
    fn eq(&self, other: &Self) -> bool {
        self.len() == other.len()
            && self.variables.iter().zip(&self.cpts).all(|(var, cpt)| {
                other.variable(var.name()) == Some(var) && other.cpt(var.name()) == Some(cpt)
            })
    }
}

/// Observed states for a subset of variables.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Evidence {
    assignments: BTreeMap<String, String>,
}

impl Evidence {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(
        &mut self,
        variable: impl Into<String>,
        state: impl Into<String>,
    ) -> Result<(), Error> {
        let variable = variable.into();
        if self.assignments.contains_key(&variable) {
            return Err(Error::DuplicateEvidence(variable));
        }
        self.assignments.insert(variable, state.into());
        Ok(())
    }

    pub fn from_pairs<V, S, I>(pairs: I) -> Result<Self, Error>
    where
        V: Into<String>,
        S: Into<String>,
        I: IntoIterator<Item = (V, S)>,
    {
        let mut evidence = Evidence::new();
        for (v, s) in pairs {
            evidence.insert(v, s)?;
        }
        Ok(evidence)
    }

    pub fn get(&self, variable: &str) -> Option<&str> {
        self.assignments.get(variable).map(String::as_str)
    }

    pub fn contains(&self, variable: &str) -> bool {
        self.assignments.contains_key(variable)
    }

    pub fn len(&self) -> usize {
        self.assignments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }

    /// Pairs in lexicographic variable order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.assignments
            .iter()
            .map(|(v, s)| (v.as_str(), s.as_str()))
    }

    /// Union of two assignments; a variable present in both with different
    /// states is reported as a duplicate.
    pub fn union(&self, other: &Evidence) -> Result<Evidence, Error> {
        let mut merged = self.clone();
        for (v, s) in other.iter() {
            match merged.get(v) {
                Some(existing) if existing == s => {}
                Some(_) => return Err(Error::DuplicateEvidence(v.to_string())),
                None => {
                    merged.assignments.insert(v.to_string(), s.to_string());
                }
            }
        }
        Ok(merged)
    }
}
