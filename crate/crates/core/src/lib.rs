//! Online Bayesian persuasion with many receivers.
//!
//! An online-gradient-descent learner whose projection step is an ellipsoid
//! search over a dual program, separated by oracles over a partition matroid of
//! signal profiles. Exact small-instance baselines live alongside.

pub mod convex_solver;
pub mod ellipsoid;
pub mod harness;
pub mod error;
pub mod matroid_sep;
pub mod model;
pub mod ogd;
pub mod persuasion_opt;

pub use error::{Error, Result};
pub use model::{
    activated_set, persuasiveness_residuals, sender_utility, validate_instance, Instance, InstanceData,
    ReceiverSet, SetFunction, SignalProfile, SignalingScheme, TypeProfile,
};
