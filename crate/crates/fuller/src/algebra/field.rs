//! Polynomial vector fields on R^n and their Lie brackets.
//!
//! Bracket convention: `[f, g] = (Dg) f - (Df) g`, so that along an extremal
//! `d/dt <lambda, X(q)> = <lambda, [f0 + u f1, X](q)>`.

use std::ops::{Add, Neg, Sub};

use crate::algebra::poly::{Polynomial, Rational};
use crate::error::{Error, Result};
use crate::real::Real;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolyVectorField {
    dim: usize,
    components: Vec<Polynomial>,
}

impl PolyVectorField {
    pub fn new(components: Vec<Polynomial>) -> Result<Self> {
        let dim = components.len();
        if let Some(bad) = components.iter().find(|p| p.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: bad.dim(),
            });
        }
        Ok(PolyVectorField { dim, components })
    }

    pub fn zero(dim: usize) -> Self {
        PolyVectorField {
            dim,
            components: vec![Polynomial::zero(dim); dim],
        }
    }

    /// Constant field `e_i`.
    pub fn basis(dim: usize, i: usize) -> Self {
        let mut f = Self::zero(dim);
        f.components[i] = Polynomial::constant(dim, Rational::from_integer(1.into()));
        f
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn components(&self) -> &[Polynomial] {
        &self.components
    }

    pub fn component(&self, i: usize) -> &Polynomial {
        &self.components[i]
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(Polynomial::is_zero)
    }

    pub fn scale(&self, c: &Rational) -> Self {
        self.map(|p| p.scale(c))
    }

    /// Multiply every component by the scalar polynomial `p`.
    pub fn mul_poly(&self, p: &Polynomial) -> Self {
        self.map(|c| c * p)
    }

    fn map(&self, f: impl Fn(&Polynomial) -> Polynomial) -> Self {
        PolyVectorField {
            dim: self.dim,
            components: self.components.iter().map(f).collect(),
        }
    }

    fn zip(&self, other: &Self, f: impl Fn(&Polynomial, &Polynomial) -> Polynomial) -> Self {
        assert_eq!(self.dim, other.dim, "vector field dimension mismatch");
        PolyVectorField {
            dim: self.dim,
            components: self
                .components
                .iter()
                .zip(&other.components)
                .map(|(a, b)| f(a, b))
                .collect(),
        }
    }

    /// Lie derivative of a scalar polynomial: `sum_i f^i d_i p`.
    pub fn apply(&self, p: &Polynomial) -> Polynomial {
        let mut acc = Polynomial::zero(self.dim);
        for (i, fi) in self.components.iter().enumerate() {
            if fi.is_zero() {
                continue;
            }
            let d = p.derivative(i);
            if !d.is_zero() {
                acc = &acc + &(fi * &d);
            }
        }
        acc
    }

    /// `jacobian()[j][i] = d f^j / d x_i`.
    pub fn jacobian(&self) -> Vec<Vec<Polynomial>> {
        self.components
            .iter()
            .map(|c| (0..self.dim).map(|i| c.derivative(i)).collect())
            .collect()
    }

    pub fn eval_exact(&self, x: &[Rational]) -> Vec<Rational> {
        self.components.iter().map(|c| c.eval_exact(x)).collect()
    }

    pub fn eval<T: Real>(&self, x: &[T]) -> Vec<T> {
        self.components.iter().map(|c| c.eval(x)).collect()
    }

    pub fn eval_f64(&self, x: &[f64]) -> Vec<f64> {
        self.eval(x)
    }
}

impl Add for &PolyVectorField {
    type Output = PolyVectorField;
    fn add(self, rhs: &PolyVectorField) -> PolyVectorField {
        self.zip(rhs, |a, b| a + b)
    }
}

impl Sub for &PolyVectorField {
    type Output = PolyVectorField;
    fn sub(self, rhs: &PolyVectorField) -> PolyVectorField {
        self.zip(rhs, |a, b| a - b)
    }
}

impl Neg for &PolyVectorField {
    type Output = PolyVectorField;
    fn neg(self) -> PolyVectorField {
        self.map(|p| -p)
    }
}

fn check_dims(f: &PolyVectorField, g: &PolyVectorField) -> Result<()> {
    if f.dim != g.dim {
        return Err(Error::DimensionMismatch {
            expected: f.dim,
            found: g.dim,
        });
    }
    Ok(())
}

/// `[f, g]^j = f(g^j) - g(f^j)`.
pub fn lie_bracket(f: &PolyVectorField, g: &PolyVectorField) -> Result<PolyVectorField> {
    check_dims(f, g)?;
    let components = f
        .components
        .iter()
        .zip(&g.components)
        .map(|(fj, gj)| &f.apply(gj) - &g.apply(fj))
        .collect();
    Ok(PolyVectorField {
        dim: f.dim,
        components,
    })
}

/// `ad_g^k h`, with `ad_g^0 h = h`.
pub fn ad_power(g: &PolyVectorField, h: &PolyVectorField, k: usize) -> Result<PolyVectorField> {
    check_dims(g, h)?;
    let mut out = h.clone();
    for _ in 0..k {
        out = lie_bracket(g, &out)?;
    }
    Ok(out)
}

/// Evaluation mode for [`eval_at`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EvalMode {
    Exact,
    Float,
}

#[derive(Clone, Debug, PartialEq)]
pub enum FieldValue {
    Exact(Vec<Rational>),
    Float(Vec<f64>),
}

impl FieldValue {
    pub fn to_f64(&self) -> Vec<f64> {
        match self {
            FieldValue::Exact(v) => v.iter().map(f64::from_ratio).collect(),
            FieldValue::Float(v) => v.clone(),
        }
    }
}

pub fn eval_at(f: &PolyVectorField, x: &[Rational], mode: EvalMode) -> Result<FieldValue> {
    if x.len() != f.dim {
        return Err(Error::DimensionMismatch {
            expected: f.dim,
            found: x.len(),
        });
    }
    Ok(match mode {
        EvalMode::Exact => FieldValue::Exact(f.eval_exact(x)),
        EvalMode::Float => {
            let xf: Vec<f64> = x.iter().map(f64::from_ratio).collect();
            FieldValue::Float(f.eval_f64(&xf))
        }
    })
}

/// `sum_i lambda_i v_i`.
pub fn pairing<T>(lambda: &[T], v: &[T]) -> T
where
    T: Clone + num_traits::Zero + std::ops::Mul<Output = T>,
{
    assert_eq!(lambda.len(), v.len(), "pairing dimension mismatch");
    lambda
        .iter()
        .zip(v)
        .fold(T::zero(), |acc, (a, b)| acc + a.clone() * b.clone())
}
