//! Hub-and-spoke portfolio calculus on integer simplex lattices.
//!
//! Spaces are finite lattices carved by exact linear constraints; alignment
//! relations between them compose vertically, and re-implementation maps
//! transport relations by pullback and pushforward. The [`transport`] module
//! checks the coherence laws on enumerated instances, [`dots`] acts on menus,
//! and [`stochastic`] replaces deterministic maps by sampled kernels.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod dots;
pub mod error;
pub mod geometry;
pub mod laws;
pub mod optimize;
pub mod relations;
pub mod stochastic;
pub mod transport;

pub use error::{Error, Result};
pub use geometry::{GridPoint, LatticeSpace, LinearConstraint, Point, Sense};
pub use optimize::ReimplMap;
pub use relations::{Relation, RelationKind};
