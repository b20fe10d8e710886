//! Data-collection service for two-gamble choice experiments.
//!
//! Each session assigns 20 problems (16 with feedback, 4 without), runs five
//! trials per problem, samples payoffs from the problem's joint distribution
//! and, once finished, applies a same-side exclusion rule. Complete sessions
//! are aggregated into the target CSV format read by the training pipeline.

mod api;
mod error;
mod service;
mod session;

pub use api::{router, serve, SharedService};
pub use error::ServiceError;
pub use service::{
    ChoiceRequest, ExperimentService, NextTrial, OptionView, OutcomeView, ServiceConfig,
    SessionSummary, TrialOutcome, TrialView,
};
pub use session::{Assignment, Choice, Condition, Session, Side, Status, TrialRecord};
