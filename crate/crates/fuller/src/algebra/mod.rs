//! Exact polynomial vector fields, Lie brackets and bracket-word algebra.

pub mod cache;
pub mod field;
pub mod linalg;
pub mod poly;
pub mod word;

pub use cache::BracketCache;
pub use field::{ad_power, eval_at, lie_bracket, pairing, EvalMode, FieldValue, PolyVectorField};
pub use linalg::{rank, rank_f64, wedge_det, wedge_det_f64};
pub use poly::{format_rational, int, parse_rational, rat, Monomial, Polynomial, Rational};
pub use word::{decompose_word, eval_word_field, expand_word, BracketWord, Letter, WordDecomposition};
