//! Fuller-phenomenon toolkit for single-input control-affine systems
//! `q' = f0(q) + u f1(q)`, `|u| <= 1`.
//!
//! * [`algebra`]: exact polynomial vector fields, Lie brackets and bracket words.
//! * [`sim`]: Pontryagin extremals with bang and singular arcs.
//! * [`analysis`]: order estimation and chattering diagnostics on switching sets.
//! * [`relations`]: relation calculus, codimension bookkeeping and point classifiers.
//! * [`scenario`]: scenario files, builtin fixtures and the command-line front end.

pub mod algebra;
pub mod analysis;
pub mod error;
pub mod real;
pub mod relations;
pub mod scenario;
pub mod sim;

pub use error::{Error, Result};
