//! Polynomials in simple relations `S_I` and their Poisson brackets.
//!
//! Trees are convenient to build; every comparison goes through the
//! expanded form [`RelPoly`], a map from monomials to integer coefficients.
//! Monomials list their leaves in word order (`0 < 1 < + < -`, then
//! lexicographic), which makes the expansion unique.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Serialize, Serializer};

use crate::algebra::{pairing, BracketCache, BracketWord, Letter, Rational};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RelationExpr {
    Leaf(BracketWord),
    /// Integer combination; the empty sum is zero.
    Sum(Vec<(BigInt, RelationExpr)>),
    /// The empty product is one.
    Product(Vec<RelationExpr>),
}

/// Leaves with their powers, sorted by word.
pub type Monomial = Vec<(BracketWord, u32)>;

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RelPoly {
    terms: BTreeMap<Monomial, BigInt>,
}

fn mono_mul(a: &Monomial, b: &Monomial) -> Monomial {
    let mut map: BTreeMap<BracketWord, u32> = a.iter().cloned().collect();
    for (w, p) in b {
        *map.entry(w.clone()).or_insert(0) += p;
    }
    map.into_iter().collect()
}

/// `m / leaf` and the power removed, if `leaf` occurs in `m`.
fn mono_derive(m: &Monomial, k: usize) -> (Monomial, u32) {
    let mut out = m.clone();
    let p = out[k].1;
    if p == 1 {
        out.remove(k);
    } else {
        out[k].1 -= 1;
    }
    (out, p)
}

impl RelPoly {
    pub fn zero() -> Self {
        RelPoly::default()
    }

    pub fn one() -> Self {
        RelPoly::constant(BigInt::one())
    }

    pub fn constant(c: BigInt) -> Self {
        let mut p = RelPoly::zero();
        p.add_term(Vec::new(), c);
        p
    }

    pub fn leaf(w: BracketWord) -> Self {
        let mut p = RelPoly::zero();
        p.add_term(vec![(w, 1)], BigInt::one());
        p
    }

    fn add_term(&mut self, m: Monomial, c: BigInt) {
        if c.is_zero() {
            return;
        }
        let e = self.terms.entry(m).or_insert_with(BigInt::zero);
        *e += c;
        if e.is_zero() {
            let key: Vec<_> = self
                .terms
                .iter()
                .filter(|(_, v)| v.is_zero())
                .map(|(k, _)| k.clone())
                .collect();
            for k in key {
                self.terms.remove(&k);
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &BigInt)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, m: &Monomial) -> BigInt {
        self.terms.get(m).cloned().unwrap_or_default()
    }

    /// Monomials in which `w` occurs.
    pub fn monomials_with(&self, w: &BracketWord) -> Vec<&Monomial> {
        self.terms
            .keys()
            .filter(|m| m.iter().any(|(v, _)| v == w))
            .collect()
    }

    pub fn leaves(&self) -> Vec<BracketWord> {
        let mut out: Vec<BracketWord> = self
            .terms
            .keys()
            .flat_map(|m| m.iter().map(|(w, _)| w.clone()))
            .collect();
        out.sort();
        out.dedup();
        out
    }

    pub fn add(&self, other: &RelPoly) -> RelPoly {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn scale(&self, c: &BigInt) -> RelPoly {
        let mut out = RelPoly::zero();
        for (m, v) in &self.terms {
            out.add_term(m.clone(), v * c);
        }
        out
    }

    pub fn sub(&self, other: &RelPoly) -> RelPoly {
        self.add(&other.scale(&-BigInt::one()))
    }

    pub fn mul(&self, other: &RelPoly) -> RelPoly {
        let mut out = RelPoly::zero();
        for (a, ca) in &self.terms {
            for (b, cb) in &other.terms {
                out.add_term(mono_mul(a, b), ca * cb);
            }
        }
        out
    }

    /// `{P, Q} = sum over leaves a of P, b of Q of dP/da dQ/db S_(ab)`.
    pub fn poisson(&self, other: &RelPoly) -> RelPoly {
        let mut out = RelPoly::zero();
        for (ma, ca) in &self.terms {
            for ia in 0..ma.len() {
                let (ra, pa) = mono_derive(ma, ia);
                for (mb, cb) in &other.terms {
                    for ib in 0..mb.len() {
                        let (rb, pb) = mono_derive(mb, ib);
                        let joined = ma[ia].0.concat(&mb[ib].0);
                        let m = mono_mul(&mono_mul(&ra, &rb), &vec![(joined, 1)]);
                        out.add_term(m, ca * cb * BigInt::from(pa) * BigInt::from(pb));
                    }
                }
            }
        }
        out
    }

    pub fn to_expr(&self) -> RelationExpr {
        RelationExpr::Sum(
            self.terms
                .iter()
                .map(|(m, c)| {
                    let factors = m
                        .iter()
                        .flat_map(|(w, p)| std::iter::repeat(RelationExpr::Leaf(w.clone())).take(*p as usize))
                        .collect();
                    (c.clone(), RelationExpr::Product(factors))
                })
                .collect(),
        )
    }

    /// Substitute `h_I = <lambda, f_I(q)>` for every leaf.
    pub fn eval_exact(&self, lambda: &[Rational], q: &[Rational], cache: &mut BracketCache) -> Result<Rational> {
        check_point(lambda.len(), q.len(), cache.dim())?;
        let mut leaf_values: BTreeMap<&BracketWord, Rational> = BTreeMap::new();
        let mut acc = Rational::zero();
        for (m, c) in &self.terms {
            let mut term = Rational::from_integer(c.clone());
            for (w, p) in m {
                let v = leaf_values
                    .entry(w)
                    .or_insert_with(|| pairing(lambda, &cache.eval_exact(w, q)));
                for _ in 0..*p {
                    term *= &*v;
                }
            }
            acc += term;
        }
        Ok(acc)
    }

    pub fn eval_f64(&self, lambda: &[f64], q: &[f64], cache: &mut BracketCache) -> Result<f64> {
        check_point(lambda.len(), q.len(), cache.dim())?;
        let mut acc = 0.0;
        for (m, c) in &self.terms {
            let mut term = c.to_f64().unwrap_or(f64::NAN);
            for (w, p) in m {
                term *= pairing(lambda, &cache.eval_f64(w, q)).powi(*p as i32);
            }
            acc += term;
        }
        Ok(acc)
    }
}

fn check_point(nl: usize, nq: usize, n: usize) -> Result<()> {
    for found in [nl, nq] {
        if found != n {
            return Err(Error::DimensionMismatch { expected: n, found });
        }
    }
    Ok(())
}

impl fmt::Display for RelPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (m, c)) in self.terms.iter().enumerate() {
            let neg = c.is_negative();
            match (k, neg) {
                (0, true) => write!(f, "-")?,
                (0, false) => {}
                (_, true) => write!(f, " - ")?,
                (_, false) => write!(f, " + ")?,
            }
            let a = c.abs();
            if m.is_empty() {
                write!(f, "{a}")?;
                continue;
            }
            if !a.is_one() {
                write!(f, "{a}*")?;
            }
            for (j, (w, p)) in m.iter().enumerate() {
                if j > 0 {
                    write!(f, "*")?;
                }
                write!(f, "S({w})")?;
                if *p > 1 {
                    write!(f, "^{p}")?;
                }
            }
        }
        Ok(())
    }
}

impl Serialize for RelPoly {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl RelationExpr {
    pub fn leaf(w: BracketWord) -> Self {
        RelationExpr::Leaf(w)
    }

    pub fn letter(l: Letter) -> Self {
        RelationExpr::Leaf(BracketWord::letter(l))
    }

    pub fn expand(&self) -> RelPoly {
        match self {
            RelationExpr::Leaf(w) => RelPoly::leaf(w.clone()),
            RelationExpr::Sum(parts) => parts
                .iter()
                .fold(RelPoly::zero(), |acc, (c, e)| acc.add(&e.expand().scale(c))),
            RelationExpr::Product(parts) => parts
                .iter()
                .fold(RelPoly::one(), |acc, e| acc.mul(&e.expand())),
        }
    }

    pub fn eval_exact(&self, lambda: &[Rational], q: &[Rational], cache: &mut BracketCache) -> Result<Rational> {
        self.expand().eval_exact(lambda, q, cache)
    }

    pub fn eval_f64(&self, lambda: &[f64], q: &[f64], cache: &mut BracketCache) -> Result<f64> {
        self.expand().eval_f64(lambda, q, cache)
    }
}

/// Poisson bracket of two trees, by bilinearity and the Leibniz rule.
/// The result is again a tree; constants bracket to zero.
pub fn poisson(a: &RelationExpr, b: &RelationExpr) -> RelationExpr {
    use RelationExpr::*;
    match (a, b) {
        (Leaf(x), Leaf(y)) => Leaf(x.concat(y)),
        (Sum(parts), _) => Sum(parts.iter().map(|(c, e)| (c.clone(), poisson(e, b))).collect()),
        (_, Sum(parts)) => Sum(parts.iter().map(|(c, e)| (c.clone(), poisson(a, e))).collect()),
        (Product(fs), _) => leibniz(fs, |f| poisson(f, b)),
        (_, Product(fs)) => leibniz(fs, |f| poisson(a, f)),
    }
}

fn leibniz(fs: &[RelationExpr], d: impl Fn(&RelationExpr) -> RelationExpr) -> RelationExpr {
    RelationExpr::Sum(
        (0..fs.len())
            .map(|k| {
                let mut factors = fs.to_vec();
                factors[k] = d(&fs[k]);
                (BigInt::one(), RelationExpr::Product(factors))
            })
            .collect(),
    )
}

/// `Q_1 = {S0,S_l}{S1,S_(l-1)} - {S1,S_l}{S0,S_(l-1)}` and
/// `Q_r = {S0,S_l}{S1,Q_(r-1)} - {S1,S_l}{S0,Q_(r-1)}`, expanded.
pub fn build_q(r: usize, i_prev: &BracketWord, i_l: &BracketWord) -> Result<RelPoly> {
    if r == 0 {
        return Err(Error::InvalidInput("Q_r needs r >= 1".into()));
    }
    let s0 = RelPoly::leaf(BracketWord::letter(Letter::Zero));
    let s1 = RelPoly::leaf(BracketWord::letter(Letter::One));
    let sl = RelPoly::leaf(i_l.clone());
    let top0 = s0.poisson(&sl);
    let top1 = s1.poisson(&sl);
    let mut q = RelPoly::leaf(i_prev.clone());
    for _ in 0..r {
        q = top0.mul(&s1.poisson(&q)).sub(&top1.mul(&s0.poisson(&q)));
    }
    Ok(q)
}

/// The same recursion on numbers, with the brackets of `Q_(r-1)` obtained
/// from the expanded polynomial. Used as an independent check of
/// [`build_q`] evaluated at a point.
pub fn q_numeric_exact(
    r: usize,
    i_prev: &BracketWord,
    i_l: &BracketWord,
    lambda: &[Rational],
    q: &[Rational],
    cache: &mut BracketCache,
) -> Result<Rational> {
    if r == 0 {
        return Err(Error::InvalidInput("Q_r needs r >= 1".into()));
    }
    let mut h = |w: &BracketWord| pairing(lambda, &cache.eval_exact(w, q));
    let a = h(&i_l.prepend(Letter::Zero));
    let b = h(&i_l.prepend(Letter::One));
    if r == 1 {
        let c = h(&i_prev.prepend(Letter::Zero));
        let d = h(&i_prev.prepend(Letter::One));
        return Ok(&a * &d - &b * &c);
    }
    let prev = build_q(r - 1, i_prev, i_l)?;
    let s0 = RelPoly::leaf(BracketWord::letter(Letter::Zero));
    let s1 = RelPoly::leaf(BracketWord::letter(Letter::One));
    let c = s0.poisson(&prev).eval_exact(lambda, q, cache)?;
    let d = s1.poisson(&prev).eval_exact(lambda, q, cache)?;
    Ok(&a * &d - &b * &c)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(s: &str) -> BracketWord {
        s.parse().unwrap()
    }

    fn leaf(s: &str) -> RelationExpr {
        RelationExpr::leaf(w(s))
    }

    #[test]
    fn leaf_bracket_concatenates() {
        assert_eq!(poisson(&leaf("0"), &leaf("1")), leaf("01"));
    }

    #[test]
    fn leibniz_on_products() {
        let prod = RelationExpr::Product(vec![leaf("0"), leaf("+1")]);
        let got = poisson(&leaf("1"), &prod).expand();
        let want = RelPoly::leaf(w("10"))
            .mul(&RelPoly::leaf(w("+1")))
            .add(&RelPoly::leaf(w("0")).mul(&RelPoly::leaf(w("1+1"))));
        assert_eq!(got, want);
        assert_eq!(RelPoly::leaf(w("1")).poisson(&prod.expand()), want);
    }

    #[test]
    fn q1_expansion() {
        let q = build_q(1, &w("001"), &w("101")).unwrap();
        let want = RelPoly::leaf(w("0101"))
            .mul(&RelPoly::leaf(w("1001")))
            .sub(&RelPoly::leaf(w("1101")).mul(&RelPoly::leaf(w("0001"))));
        assert_eq!(q, want);
        assert!(build_q(1, &w("01"), &w("01")).unwrap().is_zero());
    }

    #[test]
    fn bracket_of_q1_by_hand() {
        // {S0, a b - c d} = (0a) b + a (0b) - (0c) d - c (0d)
        let q = build_q(1, &w("001"), &w("101")).unwrap();
        let got = RelPoly::leaf(w("0")).poisson(&q);
        let l = |s: &str| RelPoly::leaf(w(s));
        let want = l("00101")
            .mul(&l("1001"))
            .add(&l("0101").mul(&l("01001")))
            .sub(&l("01101").mul(&l("0001")))
            .sub(&l("1101").mul(&l("00001")));
        assert_eq!(got, want);
    }

    #[test]
    fn display_is_readable() {
        let q = build_q(1, &w("001"), &w("101")).unwrap();
        assert_eq!(q.to_string(), "-S(0001)*S(1101) + S(0101)*S(1001)");
    }

    #[test]
    fn tree_round_trip() {
        let q = build_q(2, &w("001"), &w("101")).unwrap();
        assert_eq!(q.to_expr().expand(), q);
    }
}
