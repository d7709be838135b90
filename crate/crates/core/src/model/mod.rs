//! Instances, set functions, signaling schemes and persuasiveness.

mod instance;
mod scheme;
mod set_function;

pub use instance::*;
pub use scheme::*;
pub use set_function::*;
