//! Summaries of a trait posterior, and the slip/guess noise transform.

use std::fmt;
use std::str::FromStr;

use crate::error::Error;
use crate::inference::Engine;
use crate::model::{Cpt, Evidence, Network, Role, Variable};
use crate::scalar::Scalar;

/// Parses a state label as a signed decimal number.
pub fn numeric_label<T: Scalar>(label: &str) -> Option<T> {
    let trimmed = label.trim();
    if let Some(rest) = trimmed.strip_prefix('-') {
        T::parse_decimal(rest).map(|v| T::zero() - v)
    } else {
        T::parse_decimal(trimmed.strip_prefix('+').unwrap_or(trimmed))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Comparator {
    Ge,
    Gt,
    Le,
    Lt,
    Eq,
}

impl Comparator {
    pub fn symbol(self) -> &'static str {
        match self {
            Comparator::Ge => ">=",
            Comparator::Gt => ">",
            Comparator::Le => "<=",
            Comparator::Lt => "<",
            Comparator::Eq => "=",
        }
    }

    pub fn holds<T: PartialOrd>(self, value: &T, level: &T) -> bool {
        match self {
            Comparator::Ge => value >= level,
            Comparator::Gt => value > level,
            Comparator::Le => value <= level,
            Comparator::Lt => value < level,
            Comparator::Eq => value == level,
        }
    }
}

/// A question like "trait level at least 3", written `>=3`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Threshold {
    pub comparator: Comparator,
    pub level: String,
}

impl Threshold {
    pub fn new(comparator: Comparator, level: impl Into<String>) -> Self {
        Threshold {
            comparator,
            level: level.into(),
        }
    }
}

impl FromStr for Threshold {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self, Error> {
        let text = text.trim();
        // longest symbols first so ">=" is not read as ">"
        let table = [
            (">=", Comparator::Ge),
            ("<=", Comparator::Le),
            ("==", Comparator::Eq),
            (">", Comparator::Gt),
            ("<", Comparator::Lt),
            ("=", Comparator::Eq),
        ];
        let (rest, comparator) = table
            .iter()
            .find_map(|(sym, cmp)| text.strip_prefix(sym).map(|rest| (rest.trim(), *cmp)))
            .ok_or_else(|| Error::InvalidThreshold(text.to_string()))?;
        if numeric_label::<f64>(rest).is_none() {
            return Err(Error::InvalidThreshold(text.to_string()));
        }
        Ok(Threshold::new(comparator, rest))
    }
}

impl fmt::Display for Threshold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.comparator.symbol(), self.level)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdProbability<T> {
    pub threshold: Threshold,
    pub probability: T,
}

/// Everything reported about one trait for one respondent.
#[derive(Debug, Clone, PartialEq)]
pub struct TraitScore<T> {
    pub variable: String,
    pub states: Vec<String>,
    pub posterior: Vec<T>,
    /// Most probable state; ties go to the lowest state index.
    pub map_state: String,
    /// Posterior mean of the numeric state labels, if every label is numeric.
    pub expected_level: Option<T>,
    pub thresholds: Vec<ThresholdProbability<T>>,
}

/// Scores the posterior of `trait_name` given `evidence`.
pub fn score_trait<T: Scalar>(
    engine: &Engine<T>,
    trait_name: &str,
    evidence: &Evidence,
    thresholds: &[Threshold],
) -> Result<TraitScore<T>, Error> {
    let result = engine.query(evidence, &[trait_name])?;
    let variable = engine
        .network()
        .variable(trait_name)
        .ok_or_else(|| Error::UnknownVariable(trait_name.to_string()))?;
    let marginal = &result.marginals()[0];
    score_distribution(variable, marginal.probs(), thresholds)
}

/// Scores a possibly unnormalized distribution over `variable`'s states.
pub fn score_distribution<T: Scalar>(
    variable: &Variable,
    weights: &[T],
    thresholds: &[Threshold],
) -> Result<TraitScore<T>, Error> {
    if weights.len() != variable.cardinality() {
        return Err(Error::FactorLength {
            expected: variable.cardinality(),
            found: weights.len(),
        });
    }
    let total = T::sum_of(weights.iter());
    if total.is_zero() {
        return Err(Error::ImpossibleEvidence);
    }
    let posterior: Vec<T> = weights.iter().map(|w| w.clone() / total.clone()).collect();

    let mut best = 0;
    for (i, p) in posterior.iter().enumerate().skip(1) {
        if *p > posterior[best] {
            best = i;
        }
    }

    let numeric: Option<Vec<T>> = variable.states().iter().map(|s| numeric_label(s)).collect();
    let expected_level = numeric.as_ref().map(|values| {
        values
            .iter()
            .zip(&posterior)
            .fold(T::zero(), |acc, (v, p)| acc + v.clone() * p.clone())
    });

    let mut scored = Vec::with_capacity(thresholds.len());
    for threshold in thresholds {
        let values = numeric.as_ref().ok_or_else(|| {
            let state = variable
                .states()
                .iter()
                .find(|s| numeric_label::<T>(s).is_none())
                .cloned()
                .unwrap_or_default();
            Error::NonNumericStates {
                variable: variable.name().to_string(),
                state,
            }
        })?;
        let level: T = numeric_label(&threshold.level)
            .ok_or_else(|| Error::InvalidThreshold(threshold.to_string()))?;
        let probability = values
            .iter()
            .zip(&posterior)
            .filter(|(v, _)| threshold.comparator.holds(*v, &level))
            .fold(T::zero(), |acc, (_, p)| acc + p.clone());
        scored.push(ThresholdProbability {
            threshold: threshold.clone(),
            probability,
        });
    }

    Ok(TraitScore {
        variable: variable.name().to_string(),
        states: variable.states().to_vec(),
        posterior,
        map_state: variable.states()[best].clone(),
        expected_level,
        thresholds: scored,
    })
}

/// Probability that an answer ignores the respondent's trait level.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSpec<T> {
    slip: T,
}

impl<T: Scalar> NoiseSpec<T> {
    pub fn new(slip: T) -> Result<Self, Error> {
        if !(slip.is_nonnegative() && slip <= T::one()) {
            return Err(Error::InvalidNoise);
        }
        Ok(NoiseSpec { slip })
    }

    pub fn slip(&self) -> &T {
        &self.slip
    }
}

/// Mixes every row with the uniform distribution:
/// `row' = (1 - slip) * row + slip / K` for a child with `K` states.
///
/// One parameter covers both slips (a lower grade than the trait warrants)
/// and lucky guesses (a higher one).
pub fn apply_slip_noise<T: Scalar>(cpt: &Cpt<T>, noise: &NoiseSpec<T>) -> Cpt<T> {
    let keep = T::one() - noise.slip.clone();
    cpt.map_rows(|row| {
        let spread = noise.slip.clone() / T::from_count(row.len());
        row.iter()
            .map(|p| keep.clone() * p.clone() + spread.clone())
            .collect()
    })
}

/// Applies [`apply_slip_noise`] to every question-role table.
pub fn apply_noise_to_questions<T: Scalar>(
    network: &Network<T>,
    noise: &NoiseSpec<T>,
) -> Result<Network<T>, Error> {
    network.with_cpts(|var, cpt| {
        if var.role() == Role::Question {
            apply_slip_noise(cpt, noise)
        } else {
            cpt.clone()
        }
    })
}
