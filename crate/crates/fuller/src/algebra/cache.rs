use std::collections::HashMap;

use crate::algebra::field::{lie_bracket, PolyVectorField};
use crate::algebra::poly::Rational;
use crate::algebra::word::BracketWord;
use crate::error::{Error, Result};

/// Memoized bracket fields for a fixed pair `(f0, f1)`.
///
/// `f_(l I) = [f_l, f_I]`, so each entry reuses the cached field of its tail.
#[derive(Clone, Debug)]
pub struct BracketCache {
    f0: PolyVectorField,
    f1: PolyVectorField,
    map: HashMap<BracketWord, PolyVectorField>,
}

impl BracketCache {
    pub fn new(f0: PolyVectorField, f1: PolyVectorField) -> Result<Self> {
        if f0.dim() != f1.dim() {
            return Err(Error::DimensionMismatch {
                expected: f0.dim(),
                found: f1.dim(),
            });
        }
        Ok(BracketCache {
            f0,
            f1,
            map: HashMap::new(),
        })
    }

    pub fn dim(&self) -> usize {
        self.f0.dim()
    }

    pub fn f0(&self) -> &PolyVectorField {
        &self.f0
    }

    pub fn f1(&self) -> &PolyVectorField {
        &self.f1
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn get(&mut self, word: &BracketWord) -> &PolyVectorField {
        if !self.map.contains_key(word) {
            let first = word.letters()[0].field(&self.f0, &self.f1);
            let value = match word.tail() {
                None => first,
                Some(tail) => {
                    let inner = self.get(&tail).clone();
                    lie_bracket(&first, &inner).expect("dimensions checked at construction")
                }
            };
            self.map.insert(word.clone(), value);
        }
        &self.map[word]
    }

    pub fn eval_exact(&mut self, word: &BracketWord, q: &[Rational]) -> Vec<Rational> {
        self.get(word).eval_exact(q)
    }

    pub fn eval_f64(&mut self, word: &BracketWord, q: &[f64]) -> Vec<f64> {
        self.get(word).eval_f64(q)
    }
}
