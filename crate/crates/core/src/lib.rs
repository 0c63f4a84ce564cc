//! Nonholonomic geometry toolkit: truncated Taylor jets, Lie-bracket flags,
//! adapted frames, the Schouten and Wagner curvature tensors, and
//! constrained geodesic integration.

pub mod catalog;
pub mod connection;
pub mod error;
pub mod expr;
pub mod geometry;
pub mod jet;
pub mod linalg;
pub mod mechanics;
pub mod reference;
pub mod report;
pub mod system;
pub mod tensor;
pub mod wagner;

pub use error::{Error, Result};
