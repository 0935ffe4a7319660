//! Depth and pitch control for an underwater vehicle near the free surface.

pub mod disturbance;
pub mod error;
pub mod l1aug;
pub mod lti;
pub mod plant;
pub mod sim;
pub mod wavelqr;

pub use error::{Error, Result, SynthesisError};
