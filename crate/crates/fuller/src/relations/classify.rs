//! Pointwise tests on the jets of `(f0, f1)`: the sets `A1..A6`, `W` and
//! `C` in dimension three, the collinear degeneracies, and the alternative
//! met at limits of second-order chattering.
//!
//! Every test runs either exactly on rationals or in `f64`. Exact mode
//! ignores tolerances; in floating point a determinant counts as zero when
//! it is within `tol` of the largest one computed at the point.

use std::fmt::Debug;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::algebra::{
    ad_power, rank, rank_f64, wedge_det, wedge_det_f64, BracketCache, BracketWord, PolyVectorField,
    Polynomial, Rational,
};
use crate::error::{Error, Result};
use crate::sim::Scenario;

pub trait Scalar:
    Clone + Debug + PartialEq + Zero + One + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Neg<Output = Self>
{
    const EXACT: bool;
    fn to_f64(&self) -> f64;
    fn to_rational(&self) -> Result<Rational>;
    fn eval_field(f: &PolyVectorField, q: &[Self]) -> Vec<Self>;
    fn det(v: &[Vec<Self>]) -> Self;
    /// `tol` is relative to the largest entry and ignored when exact.
    fn rank(v: &[Vec<Self>], tol: f64) -> usize;
    fn div(&self, other: &Self) -> Self;
}

impl Scalar for Rational {
    const EXACT: bool = true;

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn to_rational(&self) -> Result<Rational> {
        Ok(self.clone())
    }

    fn eval_field(f: &PolyVectorField, q: &[Self]) -> Vec<Self> {
        f.eval_exact(q)
    }

    fn det(v: &[Vec<Self>]) -> Self {
        wedge_det(v)
    }

    fn rank(v: &[Vec<Self>], _tol: f64) -> usize {
        rank(v)
    }

    fn div(&self, other: &Self) -> Self {
        self / other
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn to_f64(&self) -> f64 {
        *self
    }

    fn to_rational(&self) -> Result<Rational> {
        Rational::from_float(*self)
            .ok_or_else(|| Error::InvalidInput(format!("non-finite value {self}")))
    }

    fn eval_field(f: &PolyVectorField, q: &[Self]) -> Vec<Self> {
        f.eval_f64(q)
    }

    fn det(v: &[Vec<Self>]) -> Self {
        wedge_det_f64(v)
    }

    fn rank(v: &[Vec<Self>], tol: f64) -> usize {
        rank_f64(v, tol)
    }

    fn div(&self, other: &Self) -> Self {
        self / other
    }
}

/// `|x| <= threshold`, or exactly zero in exact arithmetic.
fn negligible<S: Scalar>(x: &S, threshold: f64) -> bool {
    if S::EXACT {
        x.is_zero()
    } else {
        x.to_f64().abs() <= threshold
    }
}

fn inf_norm<S: Scalar>(v: &[S]) -> f64 {
    v.iter().map(|x| x.to_f64().abs()).fold(0.0, f64::max)
}

fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    a.iter()
        .zip(b)
        .fold(S::zero(), |acc, (x, y)| acc + x.clone() * y.clone())
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

fn nonzero_covector<S: Scalar>(lambda: &[S]) -> Result<()> {
    if lambda.iter().all(|x| x.is_zero()) {
        return Err(Error::InvalidInput("covector must be nonzero".into()));
    }
    Ok(())
}

fn word(s: &str) -> BracketWord {
    s.parse().expect("static word")
}

/// Determinants entering the three-dimensional classification, with
/// `d(X) = det[f1, f01, f_X]` and `e(X, Y) = det[f1, f_X, f_Y]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Determinants {
    pub d_p: f64,
    pub d_m: f64,
    pub d_pp: f64,
    pub d_mm: f64,
    pub d_ppp: f64,
    pub d_mmm: f64,
    pub e_p_m: f64,
    pub e_p_pp: f64,
    pub e_m_mm: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PointClass {
    /// Membership in `A1..A6`.
    pub a: [bool; 6],
    pub w: bool,
    pub c: bool,
    pub dets: Determinants,
    pub rank_f1_f01: usize,
    pub rank_f0_f1: usize,
    pub exact: bool,
    /// Absolute bound under which a stored determinant was taken as zero;
    /// `0` in exact mode.
    pub zero_threshold: f64,
}

impl PointClass {
    pub fn in_any_a(&self) -> bool {
        self.a.iter().any(|&x| x)
    }

    /// Names of the sets containing the point.
    pub fn labels(&self) -> Vec<&'static str> {
        const NAMES: [&str; 6] = ["A1", "A2", "A3", "A4", "A5", "A6"];
        let mut out: Vec<&str> = NAMES
            .iter()
            .zip(self.a)
            .filter(|(_, m)| *m)
            .map(|(n, _)| *n)
            .collect();
        if self.w {
            out.push("W");
        }
        if self.c {
            out.push("C");
        }
        out
    }
}

/// Membership flags from determinant zero-patterns and the two ranks.
fn membership(z: &[bool; 9], rank_f1_f01: usize, rank_f0_f1: usize) -> ([bool; 6], bool, bool) {
    let [p, m, pp, mm, ppp, mmm, e_pm, e_ppp, e_mmm] = *z;
    let a = [
        !p && !m,
        p && !pp && !m,
        m && !mm && !p,
        p && pp && !ppp && !m,
        m && mm && !mmm && !p,
        rank_f1_f01 < 2 && !e_pm && !e_ppp && !e_mmm,
    ];
    let w = p && m && rank_f1_f01 == 2;
    (a, w, rank_f0_f1 <= 1)
}

/// Classify `q` for the pair of `scenario`, which must be three-dimensional.
pub fn classify_point_3d<S: Scalar>(scenario: &Scenario, q: &[S], tol: f64) -> Result<PointClass> {
    check_dim(3, scenario.dim())?;
    check_dim(3, q.len())?;
    let mut cache = scenario.cache();
    let mut at = |s: &str| S::eval_field(cache.get(&word(s)), q);
    let f0 = at("0");
    let f1 = at("1");
    let f01 = at("01");
    let fx: Vec<Vec<S>> = ["+01", "-01", "++01", "--01", "+++01", "---01"]
        .iter()
        .map(|s| at(s))
        .collect();
    let d = |v: &Vec<S>| S::det(&[f1.clone(), f01.clone(), v.clone()]);
    let e = |a: &Vec<S>, b: &Vec<S>| S::det(&[f1.clone(), a.clone(), b.clone()]);
    let raw: Vec<S> = vec![
        d(&fx[0]),
        d(&fx[1]),
        d(&fx[2]),
        d(&fx[3]),
        d(&fx[4]),
        d(&fx[5]),
        e(&fx[0], &fx[1]),
        e(&fx[0], &fx[2]),
        e(&fx[1], &fx[3]),
    ];
    let vals: Vec<f64> = raw.iter().map(|x| x.to_f64()).collect();
    let zero_threshold = if S::EXACT {
        0.0
    } else {
        tol * vals.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    };
    let mut z = [false; 9];
    for (k, x) in raw.iter().enumerate() {
        z[k] = negligible(x, zero_threshold);
    }
    let rank_f1_f01 = S::rank(&[f1.clone(), f01], tol);
    let rank_f0_f1 = S::rank(&[f0, f1], tol);
    let (a, w, c) = membership(&z, rank_f1_f01, rank_f0_f1);
    Ok(PointClass {
        a,
        w,
        c,
        dets: Determinants {
            d_p: vals[0],
            d_m: vals[1],
            d_pp: vals[2],
            d_mm: vals[3],
            d_ppp: vals[4],
            d_mmm: vals[5],
            e_p_m: vals[6],
            e_p_pp: vals[7],
            e_m_mm: vals[8],
        },
        rank_f1_f01,
        rank_f0_f1,
        exact: S::EXACT,
        zero_threshold,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CollinearReport {
    /// `dim span{f0, f1, f01} <= 1` at `q`.
    pub in_l1: bool,
    /// `f1 != 0`, `f0 = a f1`, and the `ad_(f0 + a f1)` chain of `f1`
    /// spans less than the whole space.
    pub in_l2: bool,
    pub a: Option<f64>,
    /// `det[f1, ad f1, .., ad^(n-1) f1]` when `a` exists.
    pub chain_det: Option<f64>,
}

/// `f0 + a f1` as a polynomial field.
fn shifted_drift(scenario: &Scenario, a: &Rational) -> PolyVectorField {
    &scenario.f0 + &scenario.f1.scale(a)
}

/// Membership of `q` in the two degenerate collinear configurations.
pub fn collinear_degeneracy_test<S: Scalar>(scenario: &Scenario, q: &[S], tol: f64) -> Result<CollinearReport> {
    let n = scenario.dim();
    check_dim(n, q.len())?;
    let f0 = S::eval_field(&scenario.f0, q);
    let f1 = S::eval_field(&scenario.f1, q);
    let mut cache = scenario.cache();
    let f01 = S::eval_field(cache.get(&word("01")), q);
    let in_l1 = S::rank(&[f0.clone(), f1.clone(), f01], tol) <= 1;

    let scale = inf_norm(&f0).max(inf_norm(&f1));
    let f1_zero = f1.iter().all(|x| negligible(x, tol * scale)) || scale == 0.0;
    let mut report = CollinearReport {
        in_l1,
        in_l2: false,
        a: None,
        chain_det: None,
    };
    if f1_zero {
        return Ok(report);
    }
    let a = dot(&f0, &f1).div(&dot(&f1, &f1));
    let proportional = f0
        .iter()
        .zip(&f1)
        .all(|(x, y)| negligible(&(x.clone() - a.clone() * y.clone()), tol * scale));
    if !proportional {
        return Ok(report);
    }
    let g = shifted_drift(scenario, &a.to_rational()?);
    let cols: Vec<Vec<S>> = (0..n)
        .map(|i| ad_power(&g, &scenario.f1, i).map(|f| S::eval_field(&f, q)))
        .collect::<Result<_>>()?;
    let det = S::det(&cols);
    let hadamard: f64 = cols.iter().map(|c| inf_norm(c)).product();
    report.a = Some(a.to_f64());
    report.chain_det = Some(det.to_f64());
    report.in_l2 = negligible(&det, tol * hadamard);
    Ok(report)
}

/// `<lambda, ad^j_(f0 + a f1)(f1)(q)>` for `j = 0..=k + 2`.
pub fn collinear_order_chain<S: Scalar>(
    scenario: &Scenario,
    q: &[S],
    a: &S,
    lambda: &[S],
    k: usize,
) -> Result<Vec<S>> {
    let n = scenario.dim();
    check_dim(n, q.len())?;
    check_dim(n, lambda.len())?;
    nonzero_covector(lambda)?;
    let af = a.to_f64();
    if !(-1.0..=1.0).contains(&af) {
        return Err(Error::InvalidInput(format!("a = {af} outside [-1, 1]")));
    }
    let g = shifted_drift(scenario, &a.to_rational()?);
    let mut field = scenario.f1.clone();
    let mut out = Vec::with_capacity(k + 3);
    for j in 0..=k + 2 {
        if j > 0 {
            field = ad_power(&g, &field, 1)?;
        }
        out.push(dot(lambda, &S::eval_field(&field, q)));
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DesttBranch {
    H0101Zero,
    DeterminantZero,
    None,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DesttReport {
    pub branch: DesttBranch,
    pub h0101: f64,
    /// `h0001 h1101 - h0101^2`
    pub determinant: f64,
}

/// Which of `h0101 = 0` and `h0001 h1101 = h0101^2` holds at `(q, lambda)`.
pub fn destt_test<S: Scalar>(q: &[S], lambda: &[S], cache: &mut BracketCache, tol: f64) -> Result<DesttReport> {
    check_dim(3, cache.dim())?;
    check_dim(3, q.len())?;
    check_dim(3, lambda.len())?;
    nonzero_covector(lambda)?;
    let mut vec_of = |s: &str| S::eval_field(cache.get(&word(s)), q);
    let (v0001, v0101, v1101) = (vec_of("0001"), vec_of("0101"), vec_of("1101"));
    let scale = inf_norm(lambda) * inf_norm(&v0001).max(inf_norm(&v0101)).max(inf_norm(&v1101));
    let h0001 = dot(lambda, &v0001);
    let h0101 = dot(lambda, &v0101);
    let h1101 = dot(lambda, &v1101);
    let det = h0001 * h1101 - h0101.clone() * h0101.clone();
    let branch = if negligible(&h0101, tol * scale) {
        DesttBranch::H0101Zero
    } else if negligible(&det, tol * scale * scale) {
        DesttBranch::DeterminantZero
    } else {
        DesttBranch::None
    };
    Ok(DesttReport {
        branch,
        h0101: h0101.to_f64(),
        determinant: det.to_f64(),
    })
}

/// Rational helper for building test and fixture fields.
pub fn poly3(terms: &[(i64, [u32; 3])]) -> Polynomial {
    Polynomial::from_terms(
        3,
        terms
            .iter()
            .map(|(c, e)| (e.to_vec(), Rational::from_integer(BigInt::from(*c)))),
    )
    .expect("three variables")
}
