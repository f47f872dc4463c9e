//! Forward sampling and likelihood weighting.
//!
//! Generator: ChaCha8 from `rand_chacha` 0.3, seeded with
//! `ChaCha8Rng::seed_from_u64(seed)`. A run split into `k` shards gives shard
//! `i` the same seed with its stream set to `i` (`set_stream(i)`), draws
//! `n / k` rows (the first `n % k` shards take one extra) and concatenates
//! shards in index order. An unsharded run is shard 0 of 1. Uniform numbers
//! come from `rand` 0.8's `Standard` distribution for `f64` (53 random
//! mantissa bits, range `[0, 1)`), one per sampled variable, in topological
//! order; clamped evidence variables consume no draw.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Error;
use crate::inference::Marginal;
use crate::model::{Evidence, Network};
use crate::scalar::Scalar;

/// Sampled rows, one column per variable in topological order.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    columns: Vec<String>,
    labels: Vec<Vec<String>>,
    cells: Vec<usize>,
    weights: Vec<f64>,
    seed: u64,
}

impl SampleSet {
    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// State indices of one row, aligned with [`SampleSet::columns`].
    pub fn row(&self, i: usize) -> &[usize] {
        let width = self.columns.len();
        &self.cells[i * width..(i + 1) * width]
    }

    /// State labels of one row.
    pub fn row_labels(&self, i: usize) -> impl Iterator<Item = &str> {
        self.row(i)
            .iter()
            .zip(&self.labels)
            .map(|(&s, labels)| labels[s].as_str())
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// `(sum w)^2 / sum w^2`; zero when every weight is zero.
    pub fn effective_sample_size(&self) -> f64 {
        let sq: f64 = self.weights.iter().map(|w| w * w).sum();
        if sq == 0.0 {
            0.0
        } else {
            self.total_weight().powi(2) / sq
        }
    }

    /// Builds a set directly, mainly for tests and tooling.
    pub fn from_parts(
        columns: Vec<String>,
        labels: Vec<Vec<String>>,
        rows: Vec<Vec<usize>>,
        weights: Vec<f64>,
        seed: u64,
    ) -> Self {
        assert_eq!(rows.len(), weights.len(), "one weight per row");
        assert_eq!(columns.len(), labels.len(), "one label list per column");
        let cells = rows
            .into_iter()
            .inspect(|r| assert_eq!(r.len(), columns.len(), "row width"))
            .flatten()
            .collect();
        SampleSet {
            columns,
            labels,
            cells,
            weights,
            seed,
        }
    }
}

struct Plan {
    order: Vec<usize>,
    parents: Vec<Vec<usize>>,
    cards: Vec<usize>,
    tables: Vec<Vec<Vec<f64>>>,
    clamped: Vec<Option<usize>>,
}

impl Plan {
    fn new<T: Scalar>(network: &Network<T>, evidence: &Evidence) -> Result<Self, Error> {
        let mut clamped = vec![None; network.len()];
        for (var, state) in network.resolve_evidence(evidence)? {
            clamped[var] = Some(state);
        }
        Ok(Plan {
            order: network.topo_ids().to_vec(),
            parents: (0..network.len())
                .map(|v| network.parent_ids(v).to_vec())
                .collect(),
            cards: network
                .variables()
                .iter()
                .map(|v| v.cardinality())
                .collect(),
            tables: network
                .cpts()
                .iter()
                .map(|c| {
                    c.rows()
                        .iter()
                        .map(|r| r.iter().map(Scalar::to_f64).collect())
                        .collect()
                })
                .collect(),
            clamped,
        })
    }

    fn row_of(&self, var: usize, assignment: &[usize]) -> &[f64] {
        let config = self.parents[var]
            .iter()
            .fold(0, |acc, &p| acc * self.cards[p] + assignment[p]);
        &self.tables[var][config]
    }

    /// Fills `assignment` (indexed by variable) and returns the row weight.
    fn draw(&self, rng: &mut ChaCha8Rng, assignment: &mut [usize]) -> f64 {
        let mut weight = 1.0;
        for &var in &self.order {
            match self.clamped[var] {
                Some(state) => {
                    assignment[var] = state;
                    weight *= self.row_of(var, assignment)[state];
                }
                None => {
                    let u: f64 = rng.gen();
                    assignment[var] = pick(self.row_of(var, assignment), u);
                }
            }
        }
        weight
    }
}

/// Inverse-CDF draw. Rounding can leave the cumulative sum just under one;
/// such draws land on the last state with positive probability.
fn pick(row: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &p) in row.iter().enumerate() {
        if p > 0.0 {
            acc += p;
            last_positive = i;
            if u < acc {
                return i;
            }
        }
    }
    last_positive
}

fn run_shard<T: Scalar>(
    network: &Network<T>,
    plan: &Plan,
    n: usize,
    seed: u64,
    stream: u64,
) -> (Vec<usize>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let width = network.len();
    let mut assignment = vec![0; width];
    let mut cells = Vec::with_capacity(n * width);
    let mut weights = Vec::with_capacity(n);
    for _ in 0..n {
        weights.push(plan.draw(&mut rng, &mut assignment));
        cells.extend(plan.order.iter().map(|&v| assignment[v]));
    }
    (cells, weights)
}

/// Draws `n` rows from the joint distribution.
pub fn ancestral_sample<T: Scalar>(
    network: &Network<T>,
    n: usize,
    seed: u64,
) -> Result<SampleSet, Error> {
    sample_sharded(network, &Evidence::new(), n, seed, 1)
}

/// Samples with evidence variables clamped; each row is weighted by the
/// probability of its clamped values given their sampled parents.
pub fn likelihood_weighted_sample<T: Scalar>(
    network: &Network<T>,
    evidence: &Evidence,
    n: usize,
    seed: u64,
) -> Result<SampleSet, Error> {
    sample_sharded(network, evidence, n, seed, 1)
}

/// Splits the run over `shards` threads. See the module docs for how shard
/// seeds are derived; the result depends on `shards` but not on scheduling.
pub fn sample_sharded<T: Scalar>(
    network: &Network<T>,
    evidence: &Evidence,
    n: usize,
    seed: u64,
    shards: usize,
) -> Result<SampleSet, Error> {
    if n == 0 {
        return Err(Error::EmptySample);
    }
    let plan = Plan::new(network, evidence)?;
    let shards = shards.clamp(1, n);
    let counts: Vec<usize> = (0..shards)
        .map(|i| n / shards + usize::from(i < n % shards))
        .collect();

    let parts: Vec<(Vec<usize>, Vec<f64>)> = if shards == 1 {
        vec![run_shard(network, &plan, n, seed, 0)]
    } else {
        std::thread::scope(|scope| {
            let handles: Vec<_> = counts
                .iter()
                .enumerate()
                .map(|(i, &count)| {
                    let plan = &plan;
                    scope.spawn(move || run_shard(network, plan, count, seed, i as u64))
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("sampling shard panicked"))
                .collect()
        })
    };

    let mut cells = Vec::with_capacity(n * network.len());
    let mut weights = Vec::with_capacity(n);
    for (c, w) in parts {
        cells.extend(c);
        weights.extend(w);
    }
    let topo = network.topo_ids();
    Ok(SampleSet {
        columns: topo
            .iter()
            .map(|&v| network.variables()[v].name().to_string())
            .collect(),
        labels: topo
            .iter()
            .map(|&v| network.variables()[v].states().to_vec())
            .collect(),
        cells,
        weights,
        seed,
    })
}

/// Weighted state frequencies for each requested column.
pub fn empirical_marginals(
    samples: &SampleSet,
    nodes: &[&str],
) -> Result<Vec<Marginal<f64>>, Error> {
    let total = samples.total_weight();
    if total <= 0.0 {
        return Err(Error::ZeroWeight);
    }
    nodes
        .iter()
        .map(|&name| {
            let col = samples
                .columns
                .iter()
                .position(|c| c == name)
                .ok_or_else(|| Error::UnknownVariable(name.to_string()))?;
            let labels = &samples.labels[col];
            let mut sums = vec![0.0; labels.len()];
            for (i, w) in samples.weights.iter().enumerate() {
                sums[samples.row(i)[col]] += w;
            }
            let probs = sums.into_iter().map(|s| s / total).collect();
            Ok(Marginal::new(name, labels.clone(), probs))
        })
        .collect()
}
