//! Offline and online maximization of monotone submodular functions over
//! assignment (partition matroid) and general matroid constraints.

pub mod error;
pub mod experts;
pub mod ground;
pub mod harness;
pub mod instance;
pub mod matroid;
pub mod objectives;
pub mod offline;
pub mod online;
pub mod oracle;
pub mod rng;

pub use error::{Error, Result};
pub use ground::{Assignment, GroundSet, Item, ItemId};
pub use oracle::{ValueOracle, TOLERANCE};
