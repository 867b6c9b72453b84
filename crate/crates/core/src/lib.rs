//! Learning primitive block-world actions from a handful of demonstrations.
//!
//! The pipeline runs in four stages:
//!
//! 1. [`features`] turns demonstrations into per-frame qualitative values
//!    (cardinal direction, motion, distance bands, trajectory calculus).
//! 2. [`miner`] enumerates [`pattern`]s over those values, scores each with a
//!    confidence heuristic and orders them by entailment and confidence.
//! 3. [`dialogue`] asks the teacher yes/no questions about the queue and
//!    prunes whatever an answer already settles.
//! 4. [`reenact`] searches for a sequence of small moves that reproduces the
//!    confirmed concept in a new scene.
//!
//! [`service`] wraps the loop in a newline-delimited JSON protocol and
//! [`concept`] persists what was learned.

pub mod concept;
pub mod dialogue;
pub mod eval;
pub mod features;
pub mod miner;
pub mod pattern;
pub mod reenact;
pub mod scene;
pub mod service;
