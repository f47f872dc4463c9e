//! Brute-force reference: enumerate every configuration of the network.
//!
//! Shares nothing with the elimination path beyond reading the tables, so it
//! serves as an independent check in tests.

use crate::error::Error;
use crate::factor::Factor;
use crate::model::{Evidence, Network, Variable};
use crate::scalar::Scalar;

/// Largest joint state space [`brute_force_joint`] will enumerate.
pub const DEFAULT_JOINT_CAP: u128 = 10_000_000;

/// Unnormalized joint over the unobserved variables (topological order),
/// with observed variables clamped to their evidence states.
pub fn brute_force_joint<T: Scalar>(
    network: &Network<T>,
    evidence: &Evidence,
) -> Result<Factor<T>, Error> {
    brute_force_joint_capped(network, evidence, DEFAULT_JOINT_CAP)
}

pub fn brute_force_joint_capped<T: Scalar>(
    network: &Network<T>,
    evidence: &Evidence,
    cap: u128,
) -> Result<Factor<T>, Error> {
    let observed = network.resolve_evidence(evidence)?;
    let free: Vec<usize> = network
        .topo_ids()
        .iter()
        .copied()
        .filter(|v| !observed.iter().any(|(o, _)| o == v))
        .collect();
    let size = free.iter().fold(1u128, |acc, &v| {
        acc.saturating_mul(network.variables()[v].cardinality() as u128)
    });
    if size > cap {
        return Err(Error::CapExceeded { size, cap });
    }

    let mut assignment = vec![0usize; network.len()];
    for &(var, state) in &observed {
        assignment[var] = state;
    }
    let cards: Vec<usize> = free
        .iter()
        .map(|&v| network.variables()[v].cardinality())
        .collect();
    let mut values = Vec::with_capacity(size as usize);
    let mut counter = vec![0usize; free.len()];
    'outer: loop {
        for (slot, &var) in free.iter().enumerate() {
            assignment[var] = counter[slot];
        }
        let mut weight = T::one();
        for var in 0..network.len() {
            weight = weight * network.conditional(var, &assignment).clone();
        }
        values.push(weight);
        for i in (0..counter.len()).rev() {
            counter[i] += 1;
            if counter[i] < cards[i] {
                continue 'outer;
            }
            counter[i] = 0;
        }
        break;
    }

    let scope: Vec<Variable> = free
        .iter()
        .map(|&v| network.variables()[v].clone())
        .collect();
    Factor::new(scope, values)
}

/// Posterior of `node` by summing the enumerated joint directly.
pub fn brute_force_marginal<T: Scalar>(
    network: &Network<T>,
    evidence: &Evidence,
    node: &str,
) -> Result<Vec<T>, Error> {
    let var = network
        .variable(node)
        .ok_or_else(|| Error::UnknownVariable(node.to_string()))?;
    let joint = brute_force_joint(network, evidence)?;
    let total = joint.total();
    if total.is_zero() {
        return Err(Error::ImpossibleEvidence);
    }
    if let Some(label) = evidence.get(node) {
        let state = var.state_index(label).expect("evidence was resolved");
        return Ok((0..var.cardinality())
            .map(|s| if s == state { T::one() } else { T::zero() })
            .collect());
    }
    let scope = joint.scope();
    let pos = scope
        .iter()
        .position(|v| v.name() == node)
        .expect("unobserved node is in the joint");
    let inner: usize = scope[pos + 1..].iter().map(Variable::cardinality).product();
    let card = var.cardinality();
    let mut sums = vec![T::zero(); card];
    for (i, v) in joint.values().iter().enumerate() {
        let s = (i / inner) % card;
        sums[s] = sums[s].clone() + v.clone();
    }
    Ok(sums.into_iter().map(|s| s / total.clone()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_network, Cpt, Role};

    fn net() -> Network<f64> {
        build_network(
            vec![
                Variable::new("F", ["0", "1"], Role::Trait).unwrap(),
                Variable::new("Q11", ["1", "2", "3", "4", "5"], Role::Question).unwrap(),
                Variable::new("Q12", ["1", "2", "3", "4", "5"], Role::Question).unwrap(),
            ],
            vec![
                Cpt::prior("F", vec![50.0, 50.0]),
                Cpt::new(
                    "Q11",
                    ["F"],
                    vec![
                        vec![50.0, 30.0, 10.0, 5.0, 5.0],
                        vec![2.0, 3.0, 5.0, 40.0, 50.0],
                    ],
                ),
                Cpt::new(
                    "Q12",
                    ["F"],
                    vec![
                        vec![60.0, 20.0, 10.0, 5.0, 5.0],
                        vec![5.0, 5.0, 10.0, 40.0, 40.0],
                    ],
                ),
            ],
        )
        .unwrap()
    }

    #[test]
    fn full_joint_sums_to_one() {
        let joint = brute_force_joint(&net(), &Evidence::new()).unwrap();
        assert_eq!(joint.values().len(), 50);
        assert!((joint.total() - 1.0).abs() < 1e-12);
        assert_eq!(joint.scope_names(), vec!["F", "Q11", "Q12"]);
    }

    #[test]
    fn clamped_joint_drops_observed_variables() {
        let e = Evidence::from_pairs([("Q11", "2"), ("Q12", "3")]).unwrap();
        let joint = brute_force_joint(&net(), &e).unwrap();
        assert_eq!(joint.scope_names(), vec!["F"]);
        assert!((joint.values()[0] - 0.015).abs() < 1e-15);
        assert!((joint.values()[1] - 0.0015).abs() < 1e-15);
    }

    #[test]
    fn cap_is_enforced() {
        assert_eq!(
            brute_force_joint_capped(&net(), &Evidence::new(), 49),
            Err(Error::CapExceeded { size: 50, cap: 49 })
        );
    }

    #[test]
    fn marginal_by_summation() {
        let q12 = brute_force_marginal(
            &net(),
            &Evidence::from_pairs([("Q11", "3")]).unwrap(),
            "Q12",
        )
        .unwrap();
        let expected = [5.0 / 12.0, 0.15, 0.1, 1.0 / 6.0, 1.0 / 6.0];
        for (a, b) in q12.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
