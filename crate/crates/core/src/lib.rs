//! Second-order quantile algorithms for prediction with expert advice
//! (Squint, iProd, Hedge) and Component iProd for combinatorial games, with
//! calculators for their regret bounds.

pub mod bounds;
pub mod combinatorial;
pub mod error;
pub mod experts;
pub mod harness;
pub mod numerics;
pub mod polytopes;

pub use error::{Error, Result};
