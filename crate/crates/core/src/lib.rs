//! Exact inference over small discrete Bayesian networks, aimed at scoring
//! questionnaires: latent traits are parent variables, questions are their
//! children, and a respondent's answers are evidence.
//!
//! The numeric core is generic over [`Scalar`], so the same network can be
//! evaluated in `f64`, `f32`, or exact rational arithmetic. The aliases at the
//! crate root fix the scalar to `f64`, which is what most callers want.
//!
//! ```
//! use traitnet::{netdef, Engine, Evidence};
//!
//! let net: traitnet::Network = netdef::parse_network(
//!     "var F : 0 1 @trait\n\
//!      var Q : 1 2 @question\n\
//!      prior F = [ 50 50 ]\n\
//!      cpt Q | F = [ 90 10 ; 20 80 ]\n",
//! ).unwrap();
//! let engine = Engine::compile(net);
//! let mut evidence = Evidence::new();
//! evidence.insert("Q", "2").unwrap();
//! let result = engine.query(&evidence, &["F"]).unwrap();
//! let f = result.marginal("F").unwrap();
//! assert!((f.probs()[1] - 80.0 / 90.0).abs() < 1e-12);
//! ```

pub mod error;
pub mod factor;
pub mod inference;
pub mod model;
pub mod netdef;
pub mod scalar;
pub mod scoring;
pub mod simulate;

pub use error::{Error, ParseError};
pub use model::{Evidence, Role, Variable};
pub use scalar::Scalar;
pub use scoring::{Comparator, Threshold};
pub use simulate::SampleSet;

use num_rational::BigRational;

pub type Cpt = model::Cpt<f64>;
pub type Network = model::Network<f64>;
pub type Factor = factor::Factor<f64>;
pub type Engine = inference::Engine<f64>;
pub type QueryResult = inference::QueryResult<f64>;
pub type Marginal = inference::Marginal<f64>;
pub type TraitScore = scoring::TraitScore<f64>;
pub type NoiseSpec = scoring::NoiseSpec<f64>;

/// Single-precision variants.
pub type Network32 = model::Network<f32>;
pub type Engine32 = inference::Engine<f32>;

/// Exact rational variants, useful as a reference for the floating-point path.
pub type Rational = BigRational;
pub type ExactCpt = model::Cpt<BigRational>;
pub type ExactNetwork = model::Network<BigRational>;
pub type ExactFactor = factor::Factor<BigRational>;
pub type ExactEngine = inference::Engine<BigRational>;
pub type ExactQueryResult = inference::QueryResult<BigRational>;
