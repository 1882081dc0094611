//! Numerical tools for closed G2-structures on flat periodic domains.

pub mod error;
pub mod exterior7;
pub mod flow;
pub mod g2field;
pub mod g2point;
pub mod lattice;
pub mod rng;
pub mod verify;

pub use error::{Error, Result};
pub use exterior7::{KForm, Metric7, MultiIndex, Orientation};
