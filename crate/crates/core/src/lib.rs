//! Cognitive-model priors for predicting human risky choice.
//!
//! The crate covers the whole offline pipeline:
//!
//! - [`gamble`]: gambles, lotteries and two-gamble choice problems.
//! - [`space`]: random CPC15/CPC18-style problem generation with dedup and
//!   degeneracy filtering.
//! - [`features`]: the raw feature encoding fed to the networks.
//! - [`models`]: expected utility, prospect theory and a Monte-Carlo BEAST
//!   simulator used to label synthetic problems.
//! - [`net`]: a from-scratch sparse (SET) multilayer perceptron with SReLU
//!   units, dropout and RMSProp.
//! - [`pipeline`]: datasets, metrics, baselines, simulated human data and the
//!   pretrain / fine-tune / learning-curve / bootstrap experiments.
//! - [`io`]: the canonical problem and target CSV formats.

pub mod features;
pub mod gamble;
pub mod io;
pub mod models;
pub mod money;
pub mod net;
pub mod pipeline;
pub mod seed;
pub mod space;

pub use gamble::{Correlation, Gamble, LotShape, OutcomeDistribution, Problem, Schema};
pub use money::Money;
