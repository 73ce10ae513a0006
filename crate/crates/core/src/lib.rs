//! Differentiation bases on the infinite-dimensional torus.
//!
//! Sets are cylinder boxes with rational endpoints, measures are exact
//! rationals, and the large covering families are stored as counted
//! translation classes rather than as explicit lists.

pub mod arrangement;
pub mod basis;
pub mod configurations;
pub mod covering;
pub mod error;
pub mod geometry;
pub mod maximal;
pub mod rational;
pub mod rdf;
pub mod spaces;
pub mod weak;

pub use error::{Error, Result};
pub use geometry::{Box, BoxSet, Interval};
pub use rational::{Enclosure, Rational};
