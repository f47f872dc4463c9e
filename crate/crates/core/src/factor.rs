//! Dense factors over discrete variables.
//!
//! Values are stored row-major with the last scope variable varying fastest,
//! the same layout a [`Cpt`] uses for its parent configurations, so a table
//! over `parents ++ [child]` is just its rows laid end to end.
//!
//! Factors are unnormalized potentials. Sums always run in ascending index
//! order, which keeps results bit-identical across runs.

use crate::error::Error;
use crate::model::{Cpt, Network, Variable};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct Factor<T> {
    scope: Vec<Variable>,
    values: Vec<T>,
}

fn strides(scope: &[Variable]) -> Vec<usize> {
    let mut strides = vec![1; scope.len()];
    for i in (0..scope.len().saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * scope[i + 1].cardinality();
    }
    strides
}

/// Advances a mixed-radix counter, last digit fastest. Returns false after
/// wrapping around.
fn advance(counter: &mut [usize], cards: &[usize]) -> bool {
    for i in (0..counter.len()).rev() {
        counter[i] += 1;
        if counter[i] < cards[i] {
            return true;
        }
        counter[i] = 0;
    }
    false
}

impl<T: Scalar> Factor<T> {
    pub fn new(scope: Vec<Variable>, values: Vec<T>) -> Result<Self, Error> {
        for (i, var) in scope.iter().enumerate() {
            if scope[..i].iter().any(|v| v.name() == var.name()) {
                return Err(Error::DuplicateScopeVariable(var.name().to_string()));
            }
        }
        let expected: usize = scope.iter().map(Variable::cardinality).product();
        if values.len() != expected {
            return Err(Error::FactorLength {
                expected,
                found: values.len(),
            });
        }
        if !values.iter().all(Scalar::is_nonnegative) {
            return Err(Error::NegativeFactorValue);
        }
        Ok(Factor { scope, values })
    }

    /// An empty-scope factor holding one number.
    pub fn scalar(value: T) -> Self {
        Factor {
            scope: Vec::new(),
            values: vec![value],
        }
    }

    /// The multiplicative identity.
    pub fn unit() -> Self {
        Self::scalar(T::one())
    }

    /// The table of `cpt` as a factor over `parents ++ [child]`.
    pub fn from_cpt(cpt: &Cpt<T>, network: &Network<T>) -> Self {
        let scope: Vec<Variable> = cpt
            .parents()
            .iter()
            .map(String::as_str)
            .chain(std::iter::once(cpt.child()))
            .map(|name| {
                network
                    .variable(name)
                    .expect("table belongs to the network")
                    .clone()
            })
            .collect();
        let values = cpt.rows().iter().flatten().cloned().collect();
        Factor { scope, values }
    }

    /// Point mass on one state of `var`.
    pub fn indicator(var: &Variable, state: usize) -> Self {
        let values = (0..var.cardinality())
            .map(|s| if s == state { T::one() } else { T::zero() })
            .collect();
        Factor {
            scope: vec![var.clone()],
            values,
        }
    }

    pub fn scope(&self) -> &[Variable] {
        &self.scope
    }

    pub fn scope_names(&self) -> Vec<&str> {
        self.scope.iter().map(Variable::name).collect()
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn contains(&self, var: &str) -> bool {
        self.position(var).is_some()
    }

    fn position(&self, var: &str) -> Option<usize> {
        self.scope.iter().position(|v| v.name() == var)
    }

    /// Value at one state index per scope variable.
    pub fn get(&self, states: &[usize]) -> Option<&T> {
        if states.len() != self.scope.len()
            || states
                .iter()
                .zip(&self.scope)
                .any(|(&s, v)| s >= v.cardinality())
        {
            return None;
        }
        let index = states
            .iter()
            .zip(strides(&self.scope))
            .map(|(s, st)| s * st)
            .sum::<usize>();
        self.values.get(index)
    }

    /// Sum of all entries, ascending index order.
    pub fn total(&self) -> T {
        T::sum_of(self.values.iter())
    }

    /// Pointwise product over the union of both scopes. The result lists
    /// `self`'s scope first, then the variables only `other` has.
    pub fn product(&self, other: &Factor<T>) -> Result<Factor<T>, Error> {
        let mut scope = self.scope.clone();
        for var in &other.scope {
            match self.position(var.name()) {
                Some(i) if self.scope[i].cardinality() != var.cardinality() => {
                    return Err(Error::ScopeMismatch {
                        variable: var.name().to_string(),
                        left: self.scope[i].cardinality(),
                        right: var.cardinality(),
                    })
                }
                Some(_) => {}
                None => scope.push(var.clone()),
            }
        }

        let left_strides = strides(&self.scope);
        let right_strides = strides(&other.scope);
        let mut step_left = vec![0; scope.len()];
        let mut step_right = vec![0; scope.len()];
        for (k, var) in scope.iter().enumerate() {
            if let Some(i) = self.position(var.name()) {
                step_left[k] = left_strides[i];
            }
            if let Some(j) = other.position(var.name()) {
                step_right[k] = right_strides[j];
            }
        }
        let cards: Vec<usize> = scope.iter().map(Variable::cardinality).collect();
        let size: usize = cards.iter().product();

        let mut values = Vec::with_capacity(size);
        let mut counter = vec![0; scope.len()];
        let (mut li, mut ri) = (0usize, 0usize);
        loop {
            values.push(self.values[li].clone() * other.values[ri].clone());
            // odometer step, keeping both source offsets in sync
            let mut k = counter.len();
            let mut wrapped = true;
            while k > 0 {
                k -= 1;
                counter[k] += 1;
                li += step_left[k];
                ri += step_right[k];
                if counter[k] < cards[k] {
                    wrapped = false;
                    break;
                }
                li -= step_left[k] * cards[k];
                ri -= step_right[k] * cards[k];
                counter[k] = 0;
            }
            if wrapped {
                break;
            }
        }
        debug_assert_eq!(values.len(), size);
        Ok(Factor { scope, values })
    }

    /// Sums `var` out.
    pub fn marginalize(&self, var: &str) -> Result<Factor<T>, Error> {
        let pos = self
            .position(var)
            .ok_or_else(|| Error::NotInScope(var.to_string()))?;
        let mut scope = self.scope.clone();
        let removed = scope.remove(pos);
        let card = removed.cardinality();
        let inner: usize = self.scope[pos + 1..]
            .iter()
            .map(Variable::cardinality)
            .product();
        let size = self.values.len() / card;
        let mut values = vec![T::zero(); size];
        for (i, v) in self.values.iter().enumerate() {
            let outer = i / (inner * card);
            let out = outer * inner + i % inner;
            values[out] = values[out].clone() + v.clone();
        }
        Ok(Factor { scope, values })
    }

    /// The slice at `var = state`, dropping `var` from the scope.
    pub fn reduce(&self, var: &str, state: &str) -> Result<Factor<T>, Error> {
        let pos = self
            .position(var)
            .ok_or_else(|| Error::NotInScope(var.to_string()))?;
        let index = self.scope[pos]
            .state_index(state)
            .ok_or_else(|| Error::UnknownState {
                variable: var.to_string(),
                state: state.to_string(),
            })?;
        self.reduce_index(var, index)
    }

    /// [`Factor::reduce`] by state index.
    pub fn reduce_index(&self, var: &str, state: usize) -> Result<Factor<T>, Error> {
        let pos = self
            .position(var)
            .ok_or_else(|| Error::NotInScope(var.to_string()))?;
        let card = self.scope[pos].cardinality();
        if state >= card {
            return Err(Error::UnknownState {
                variable: var.to_string(),
                state: state.to_string(),
            });
        }
        let mut scope = self.scope.clone();
        scope.remove(pos);
        let inner: usize = self.scope[pos + 1..]
            .iter()
            .map(Variable::cardinality)
            .product();
        let values = self
            .values
            .iter()
            .enumerate()
            .filter(|(i, _)| (i / inner) % card == state)
            .map(|(_, v)| v.clone())
            .collect();
        Ok(Factor { scope, values })
    }

    /// Scales the values to sum to one.
    pub fn normalize(&self) -> Result<Factor<T>, Error> {
        let total = self.total();
        if total.is_zero() {
            return Err(Error::ImpossibleEvidence);
        }
        Ok(Factor {
            scope: self.scope.clone(),
            values: self
                .values
                .iter()
                .map(|v| v.clone() / total.clone())
                .collect(),
        })
    }

    /// The same function with its scope listed in `order`, which must be a
    /// permutation of the current scope names.
    pub fn permute(&self, order: &[&str]) -> Result<Factor<T>, Error> {
        if order.len() != self.scope.len() {
            let missing = self
                .scope
                .iter()
                .find(|v| !order.contains(&v.name()))
                .map(|v| v.name().to_string())
                .unwrap_or_default();
            return Err(Error::NotInScope(missing));
        }
        let positions = order
            .iter()
            .map(|name| {
                self.position(name)
                    .ok_or_else(|| Error::NotInScope(name.to_string()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let scope: Vec<Variable> = positions.iter().map(|&p| self.scope[p].clone()).collect();
        if let Some(dup) = (1..scope.len()).find(|&i| positions[..i].contains(&positions[i])) {
            return Err(Error::DuplicateScopeVariable(scope[dup].name().to_string()));
        }
        let source_strides = strides(&self.scope);
        let cards: Vec<usize> = scope.iter().map(Variable::cardinality).collect();
        let mut counter = vec![0; scope.len()];
        let mut values = Vec::with_capacity(self.values.len());
        loop {
            let src: usize = counter
                .iter()
                .zip(&positions)
                .map(|(&s, &p)| s * source_strides[p])
                .sum();
            values.push(self.values[src].clone());
            if !advance(&mut counter, &cards) {
                break;
            }
        }
        Ok(Factor { scope, values })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Role;

    fn var(name: &str, card: usize) -> Variable {
        Variable::new(name, (0..card).map(|s| s.to_string()), Role::Unspecified).unwrap()
    }

    fn marks_var(name: &str) -> Variable {
        Variable::new(name, ["1", "2", "3", "4", "5"], Role::Question).unwrap()
    }

    fn prior_f() -> Factor<f64> {
        Factor::new(vec![var("F", 2)], vec![0.5, 0.5]).unwrap()
    }

    fn q11_given_f() -> Factor<f64> {
        Factor::new(
            vec![var("F", 2), marks_var("Q11")],
            vec![0.50, 0.30, 0.10, 0.05, 0.05, 0.02, 0.03, 0.05, 0.40, 0.50],
        )
        .unwrap()
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn q11_marginal_from_product() {
        let joint = prior_f().product(&q11_given_f()).unwrap();
        assert_eq!(joint.scope_names(), vec!["F", "Q11"]);
        let q11 = joint.marginalize("F").unwrap();
        assert!(close(
            q11.values(),
            &[0.26, 0.165, 0.075, 0.225, 0.275],
            1e-15
        ));
    }

    #[test]
    fn unit_is_identity() {
        let f = q11_given_f();
        assert_eq!(f.product(&Factor::unit()).unwrap(), f);
        assert_eq!(Factor::unit().product(&f).unwrap(), f);
    }

    #[test]
    fn product_commutes_up_to_scope_order() {
        let a = q11_given_f();
        let b = Factor::new(
            vec![marks_var("Q11"), var("G", 3)],
            (0..15).map(|i| i as f64 / 7.0).collect(),
        )
        .unwrap();
        let ab = a.product(&b).unwrap();
        let ba = b.product(&a).unwrap();
        assert_eq!(ba.permute(&ab.scope_names()).unwrap(), ab);
    }

    #[test]
    fn full_contraction_gives_total_mass() {
        let f = q11_given_f();
        let scalar = f.marginalize("Q11").unwrap().marginalize("F").unwrap();
        assert!(scalar.scope().is_empty());
        assert!((scalar.values()[0] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn cpt_child_marginal_is_all_ones() {
        let ones = q11_given_f().marginalize("Q11").unwrap();
        assert!(close(ones.values(), &[1.0, 1.0], 1e-9));
    }

    #[test]
    fn reduce_slices_by_label() {
        let joint = prior_f().product(&q11_given_f()).unwrap();
        let sliced = joint.reduce("Q11", "2").unwrap();
        assert_eq!(sliced.scope_names(), vec!["F"]);
        assert!(close(sliced.values(), &[0.15, 0.015], 1e-15));
        let post = sliced.normalize().unwrap();
        assert!(close(post.values(), &[10.0 / 11.0, 1.0 / 11.0], 1e-12));
    }

    #[test]
    fn reduce_errors() {
        let f = q11_given_f();
        assert_eq!(f.reduce("X", "1"), Err(Error::NotInScope("X".into())));
        assert!(matches!(
            f.reduce("Q11", "9"),
            Err(Error::UnknownState { .. })
        ));
        assert_eq!(f.marginalize("X"), Err(Error::NotInScope("X".into())));
    }

    #[test]
    fn zero_slice_fails_only_at_normalization() {
        let f = Factor::new(vec![var("A", 2), var("B", 2)], vec![0.0, 1.0, 0.0, 1.0]).unwrap();
        let slice = f.reduce_index("B", 0).unwrap();
        assert_eq!(slice.values(), &[0.0, 0.0]);
        assert_eq!(slice.normalize(), Err(Error::ImpossibleEvidence));
    }

    #[test]
    fn normalize_is_idempotent() {
        let f = Factor::new(vec![var("A", 3)], vec![0.2, 0.3, 0.5]).unwrap();
        let once = f.normalize().unwrap();
        assert!(close(once.values(), f.values(), 1e-12));
        assert!(close(
            once.normalize().unwrap().values(),
            once.values(),
            1e-12
        ));
    }

    #[test]
    fn scope_mismatch_is_reported() {
        let a = Factor::<f64>::new(vec![var("A", 2)], vec![1.0, 1.0]).unwrap();
        let b = Factor::<f64>::new(vec![var("A", 3)], vec![1.0, 1.0, 1.0]).unwrap();
        assert_eq!(
            a.product(&b),
            Err(Error::ScopeMismatch {
                variable: "A".into(),
                left: 2,
                right: 3
            })
        );
    }

    #[test]
    fn construction_checks() {
        assert!(matches!(
            Factor::<f64>::new(vec![var("A", 2)], vec![1.0]),
            Err(Error::FactorLength {
                expected: 2,
                found: 1
            })
        ));
        assert_eq!(
            Factor::<f64>::new(vec![var("A", 2)], vec![1.0, -0.5]),
            Err(Error::NegativeFactorValue)
        );
        assert!(matches!(
            Factor::<f64>::new(vec![var("A", 2), var("A", 2)], vec![1.0; 4]),
            Err(Error::DuplicateScopeVariable(_))
        ));
    }

    #[test]
    fn middle_variable_marginalization_and_lookup() {
        let f = Factor::new(
            vec![var("A", 2), var("B", 3), var("C", 2)],
            (0..12).map(|i| i as f64).collect(),
        )
        .unwrap();
        let m = f.marginalize("B").unwrap();
        // entry (a, c) = sum_b f(a, b, c)
        assert_eq!(
            m.values(),
            &[
                0.0 + 2.0 + 4.0,
                1.0 + 3.0 + 5.0,
                6.0 + 8.0 + 10.0,
                7.0 + 9.0 + 11.0
            ]
        );
        assert_eq!(f.get(&[1, 2, 1]), Some(&11.0));
        assert_eq!(f.get(&[1, 3, 1]), None);
        let r = f.reduce_index("B", 1).unwrap();
        assert_eq!(r.values(), &[2.0, 3.0, 8.0, 9.0]);
    }

    #[test]
    fn permute_reorders_entries() {
        let f = Factor::new(
            vec![var("A", 2), var("B", 3)],
            (0..6).map(|i| i as f64).collect(),
        )
        .unwrap();
        let p = f.permute(&["B", "A"]).unwrap();
        assert_eq!(p.values(), &[0.0, 3.0, 1.0, 4.0, 2.0, 5.0]);
        assert!(f.permute(&["A"]).is_err());
        assert!(f.permute(&["A", "A"]).is_err());
    }
}
