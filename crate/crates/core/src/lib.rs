//! Review-based rating prediction with personalized attention.
//!
//! Reviews are encoded by a word-embedding + CNN encoder whose word-level
//! attention is steered by a query derived from the user's (or item's) ID
//! embedding; a second personalized attention aggregates reviews into a
//! user or item vector, and a factorization machine scores the pair.

#![allow(clippy::needless_range_loop)]

pub mod data;
pub mod error;
pub mod evaluation;
#[doc(hidden)]
pub mod fixtures;
#[doc(hidden)]
pub mod fuzz_harness;
pub mod model;
pub mod numeric;
pub mod rng;
pub mod training;

pub use error::{NrpaError, Result};
