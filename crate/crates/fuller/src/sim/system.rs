//! Scenarios and their Pontryagin lift.
//!
//! The extremal flow of `q' = f0 + u f1` with optional running cost `L(q)`
//! (maximizing `H = <lambda, f0 + u f1> - L`) is
//!
//! ```text
//! q'      = f0(q) + u f1(q)
//! lambda' = -(D f0 + u D f1)(q)^T lambda + grad L(q)
//! ```
//!
//! Without a cost this is the time-optimal lift. With `L = x1^2` on the double
//! integrator it is the classical Fuller extremal `(x1, x2, psi1, psi2)`.

use serde::{Deserialize, Serialize};

use crate::algebra::field::{lie_bracket, PolyVectorField};
use crate::algebra::poly::{Polynomial, Rational};
use crate::algebra::word::BracketWord;
use crate::algebra::BracketCache;
use crate::error::{Error, Result};
use crate::real::Real;

#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub f0: PolyVectorField,
    pub f1: PolyVectorField,
    /// Running cost `L(q)`; `None` for time-optimal problems.
    pub running_cost: Option<Polynomial>,
}

impl Scenario {
    pub fn new(name: impl Into<String>, f0: PolyVectorField, f1: PolyVectorField) -> Result<Self> {
        if f0.dim() != f1.dim() {
            return Err(Error::DimensionMismatch {
                expected: f0.dim(),
                found: f1.dim(),
            });
        }
        Ok(Scenario {
            name: name.into(),
            f0,
            f1,
            running_cost: None,
        })
    }

    pub fn with_running_cost(mut self, cost: Polynomial) -> Result<Self> {
        if cost.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: cost.dim(),
            });
        }
        self.running_cost = Some(cost);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.f0.dim()
    }

    pub fn cache(&self) -> BracketCache {
        BracketCache::new(self.f0.clone(), self.f1.clone()).expect("scenario dims agree")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtremalState<T> {
    pub t: T,
    pub q: Vec<T>,
    pub lambda: Vec<T>,
}

impl<T: Real> ExtremalState<T> {
    pub fn new(t: T, q: Vec<T>, lambda: Vec<T>) -> Self {
        assert_eq!(q.len(), lambda.len(), "q and lambda dimensions");
        ExtremalState { t, q, lambda }
    }

    pub fn from_packed(t: T, y: &[T]) -> Self {
        let n = y.len() / 2;
        ExtremalState {
            t,
            q: y[..n].to_vec(),
            lambda: y[n..].to_vec(),
        }
    }

    pub fn packed(&self) -> Vec<T> {
        let mut y = self.q.clone();
        y.extend(self.lambda.iter().cloned());
        y
    }

    pub fn to_f64(&self) -> ExtremalState<f64> {
        ExtremalState {
            t: self.t.to_f64(),
            q: self.q.iter().map(Real::to_f64).collect(),
            lambda: self.lambda.iter().map(Real::to_f64).collect(),
        }
    }

    pub fn lambda_norm(&self) -> T {
        norm(&self.lambda)
    }
}

impl ExtremalState<f64> {
    pub fn convert<T: Real>(&self) -> ExtremalState<T> {
        ExtremalState {
            t: T::from_f64(self.t),
            q: self.q.iter().map(|&x| T::from_f64(x)).collect(),
            lambda: self.lambda.iter().map(|&x| T::from_f64(x)).collect(),
        }
    }
}

pub(crate) fn norm<T: Real>(v: &[T]) -> T {
    v.iter()
        .fold(T::zero(), |a, x| a + x.clone() * x.clone())
        .sqrt()
}

pub(crate) fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .fold(T::zero(), |acc, (x, y)| acc + x.clone() * y.clone())
}

/// A polynomial with coefficients converted to `T` once.
#[derive(Clone, Debug)]
struct Compiled<T> {
    terms: Vec<(Vec<u32>, T)>,
}

impl<T: Real> Compiled<T> {
    fn new(p: &Polynomial) -> Self {
        Compiled {
            terms: p
                .terms()
                .map(|(e, c)| (e.to_vec(), T::from_ratio(c)))
                .collect(),
        }
    }

    fn eval(&self, x: &[T]) -> T {
        let mut acc = T::zero();
        for (e, c) in &self.terms {
            let mut t = c.clone();
            for (xi, &k) in x.iter().zip(e) {
                for _ in 0..k {
                    t = t * xi.clone();
                }
            }
            acc = acc + t;
        }
        acc
    }
}

#[derive(Clone, Debug)]
struct CompiledField<T> {
    comps: Vec<Compiled<T>>,
}

impl<T: Real> CompiledField<T> {
    fn new(f: &PolyVectorField) -> Self {
        CompiledField {
            comps: f.components().iter().map(Compiled::new).collect(),
        }
    }

    fn eval(&self, x: &[T]) -> Vec<T> {
        self.comps.iter().map(|c| c.eval(x)).collect()
    }
}

/// `(D f)^T lambda` as compiled scalar polynomials in `(q, lambda)` would be
/// bulky; we keep the Jacobian entries and contract at evaluation time.
#[derive(Clone, Debug)]
struct CompiledJacobian<T> {
    /// `entries[j][i] = d f^j / d x_i`
    entries: Vec<Vec<Compiled<T>>>,
}

impl<T: Real> CompiledJacobian<T> {
    fn new(f: &PolyVectorField) -> Self {
        CompiledJacobian {
            entries: f
                .jacobian()
                .iter()
                .map(|row| row.iter().map(Compiled::new).collect())
                .collect(),
        }
    }

    /// `(Df(q))^T lambda`
    fn transpose_apply(&self, q: &[T], lambda: &[T]) -> Vec<T> {
        let n = q.len();
        let mut out = vec![T::zero(); n];
        for (j, row) in self.entries.iter().enumerate() {
            for (i, e) in row.iter().enumerate() {
                if e.terms.is_empty() {
                    continue;
                }
                out[i] = out[i].clone() + e.eval(q) * lambda[j].clone();
            }
        }
        out
    }
}

#[derive(Clone, Debug)]
struct CostTerms<T> {
    l: Compiled<T>,
    grad: Vec<Compiled<T>>,
    /// `f1 L`
    f1_l: Compiled<T>,
    /// `f01 L + f0 (f1 L)`
    drift_corr: Compiled<T>,
    /// `f1 (f1 L)`
    control_corr: Compiled<T>,
}

/// `h1` and its first two time derivatives split by control:
/// `h1' = h01`, `h1'' = h001 + u h101`.
///
/// With a running cost these include the cost corrections; without one they
/// are the plain bracket pairings.
#[derive(Clone, Debug, PartialEq)]
pub struct Switching<T> {
    pub h1: T,
    pub h01: T,
    pub h001: T,
    pub h101: T,
}

impl<T: Real> Switching<T> {
    pub fn h_plus01(&self) -> T {
        self.h001.clone() + self.h101.clone()
    }
    pub fn h_minus01(&self) -> T {
        self.h001.clone() - self.h101.clone()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlMode {
    Bang(i8),
    SingularCandidate,
}

/// Compiled extremal flow of a [`Scenario`] over the scalar type `T`.
#[derive(Clone, Debug)]
pub struct ExtremalSystem<T> {
    n: usize,
    f0: CompiledField<T>,
    f1: CompiledField<T>,
    df0: CompiledJacobian<T>,
    df1: CompiledJacobian<T>,
    f01: CompiledField<T>,
    f001: CompiledField<T>,
    f101: CompiledField<T>,
    df001: CompiledJacobian<T>,
    df101: CompiledJacobian<T>,
    cost: Option<CostTerms<T>>,
}

impl<T: Real> ExtremalSystem<T> {
    pub fn new(s: &Scenario) -> Self {
        let f01 = lie_bracket(&s.f0, &s.f1).expect("dims checked");
        let f001 = lie_bracket(&s.f0, &f01).expect("dims checked");
        let f101 = lie_bracket(&s.f1, &f01).expect("dims checked");
        let cost = s.running_cost.as_ref().map(|l| {
            let f1_l = s.f1.apply(l);
            let drift = &f01.apply(l) + &s.f0.apply(&f1_l);
            CostTerms {
                l: Compiled::new(l),
                grad: (0..s.dim()).map(|i| Compiled::new(&l.derivative(i))).collect(),
                f1_l: Compiled::new(&f1_l),
                drift_corr: Compiled::new(&drift),
                control_corr: Compiled::new(&s.f1.apply(&f1_l)),
            }
        });
        ExtremalSystem {
            n: s.dim(),
            f0: CompiledField::new(&s.f0),
            f1: CompiledField::new(&s.f1),
            df0: CompiledJacobian::new(&s.f0),
            df1: CompiledJacobian::new(&s.f1),
            f01: CompiledField::new(&f01),
            df001: CompiledJacobian::new(&f001),
            df101: CompiledJacobian::new(&f101),
            f001: CompiledField::new(&f001),
            f101: CompiledField::new(&f101),
            cost,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Whether the flow commutes with `lambda -> c lambda`, `c > 0`.
    pub fn homogeneous(&self) -> bool {
        self.cost.is_none()
    }

    fn split<'a>(&self, y: &'a [T]) -> (&'a [T], &'a [T]) {
        y.split_at(self.n)
    }

    /// Right-hand side on the packed state `(q, lambda)`.
    pub fn rhs(&self, y: &[T], u: &T, dy: &mut [T]) {
        let (q, lambda) = self.split(y);
        let a = self.f0.eval(q);
        let b = self.f1.eval(q);
        for i in 0..self.n {
            dy[i] = a[i].clone() + u.clone() * b[i].clone();
        }
        let ja = self.df0.transpose_apply(q, lambda);
        let jb = self.df1.transpose_apply(q, lambda);
        for i in 0..self.n {
            dy[self.n + i] = -(ja[i].clone() + u.clone() * jb[i].clone());
        }
        if let Some(c) = &self.cost {
            for i in 0..self.n {
                dy[self.n + i] = dy[self.n + i].clone() + c.grad[i].eval(q);
            }
        }
    }

    pub fn h1(&self, y: &[T]) -> T {
        let (q, lambda) = self.split(y);
        dot(lambda, &self.f1.eval(q))
    }

    pub fn switching(&self, y: &[T]) -> Switching<T> {
        let (q, lambda) = self.split(y);
        let mut s = Switching {
            h1: dot(lambda, &self.f1.eval(q)),
            h01: dot(lambda, &self.f01.eval(q)),
            h001: dot(lambda, &self.f001.eval(q)),
            h101: dot(lambda, &self.f101.eval(q)),
        };
        if let Some(c) = &self.cost {
            s.h01 = s.h01 + c.f1_l.eval(q);
            s.h001 = s.h001 + c.drift_corr.eval(q);
            s.h101 = s.h101 + c.control_corr.eval(q);
        }
        s
    }

    /// `<lambda, f0 + u f1> - L`
    pub fn hamiltonian(&self, y: &[T], u: &T) -> T {
        let (q, lambda) = self.split(y);
        let h0 = dot(lambda, &self.f0.eval(q));
        let h1 = dot(lambda, &self.f1.eval(q));
        let l = self.cost.as_ref().map_or(T::zero(), |c| c.l.eval(q));
        h0 + u.clone() * h1 - l
    }

    /// Maximum of [`Self::hamiltonian`] over `|u| <= 1`.
    pub fn max_hamiltonian(&self, y: &[T]) -> T {
        let (q, lambda) = self.split(y);
        let h0 = dot(lambda, &self.f0.eval(q));
        let h1 = dot(lambda, &self.f1.eval(q));
        let l = self.cost.as_ref().map_or(T::zero(), |c| c.l.eval(q));
        h0 + h1.abs() - l
    }

    /// Scale against which relative tolerances on switching quantities are
    /// measured: `max(|lambda| (|f0(q)| + |f1(q)|), |(q, lambda)|_inf)`.
    pub fn h_scale(&self, y: &[T]) -> T {
        let (q, lambda) = self.split(y);
        let a = norm(&self.f0.eval(q));
        let b = norm(&self.f1.eval(q));
        let s = norm(lambda) * (a + b);
        let inf = y.iter().fold(T::zero(), |m, v| m.max(v.abs()));
        s.max(inf)
    }

    pub fn f0_at(&self, q: &[T]) -> Vec<T> {
        self.f0.eval(q)
    }

    pub fn f1_at(&self, q: &[T]) -> Vec<T> {
        self.f1.eval(q)
    }

    /// `-h001 / h101`, clamped into `[-1, 1]` when within `tol` of the range.
    pub fn singular_control(&self, y: &[T], tol: f64) -> Result<T> {
        let s = self.switching(y);
        singular_feedback(&s, tol)
    }

    pub fn pmp_control(&self, y: &[T], tol: f64) -> Result<ControlMode> {
        let s = self.switching(y);
        let t = T::from_f64(tol);
        if s.h1.abs() > t {
            Ok(ControlMode::Bang(s.h1.signum()))
        } else if s.h01.abs() <= t {
            Ok(ControlMode::SingularCandidate)
        } else {
            Err(Error::AmbiguousControl {
                h1: s.h1.to_f64(),
                h01: s.h01.to_f64(),
            })
        }
    }

    /// Hamiltonian vector field of
    /// `H(p) = <p, f0> - (<p, f001> / <p, f101>) <p, f1>`.
    ///
    /// Only defined for time-optimal scenarios (no running cost).
    pub fn singular_hamiltonian_rhs(&self, y: &[T], tol: f64) -> Result<Vec<T>> {
        if self.cost.is_some() {
            return Err(Error::InvalidInput(
                "singular Hamiltonian requires a time-optimal scenario".into(),
            ));
        }
        let (q, lambda) = self.split(y);
        let n = self.n;
        let a = self.f0.eval(q);
        let b = self.f1.eval(q);
        let c = self.f001.eval(q);
        let d = self.f101.eval(q);
        let h1 = dot(lambda, &b);
        let h001 = dot(lambda, &c);
        let h101 = dot(lambda, &d);
        if h101.abs() <= T::from_f64(tol) {
            return Err(Error::DegenerateSingular {
                h101: h101.to_f64(),
            });
        }
        let u = -(h001.clone() / h101.clone());
        // grad of r = h001 / h101: (grad h001 - r grad h101) / h101
        let jc = self.df001.transpose_apply(q, lambda);
        let jd = self.df101.transpose_apply(q, lambda);
        let ja = self.df0.transpose_apply(q, lambda);
        let jb = self.df1.transpose_apply(q, lambda);
        let r = -u.clone();
        let mut out = vec![T::zero(); 2 * n];
        for i in 0..n {
            let dr_dp = (c[i].clone() - r.clone() * d[i].clone()) / h101.clone();
            let dr_dq = (jc[i].clone() - r.clone() * jd[i].clone()) / h101.clone();
            out[i] = a[i].clone() + u.clone() * b[i].clone() - h1.clone() * dr_dp;
            out[n + i] = -(ja[i].clone() + u.clone() * jb[i].clone() - h1.clone() * dr_dq);
        }
        Ok(out)
    }
}

pub(crate) fn singular_feedback<T: Real>(s: &Switching<T>, tol: f64) -> Result<T> {
    let t = T::from_f64(tol);
    if s.h101.abs() <= t {
        return Err(Error::DegenerateSingular {
            h101: s.h101.to_f64(),
        });
    }
    let u = -(s.h001.clone() / s.h101.clone());
    let one = T::one();
    if u.abs() > one.clone() + t {
        return Err(Error::InadmissibleSingular { u: u.to_f64() });
    }
    Ok(u.max(-one.clone()).min(one))
}

/// `<lambda, f_I(q)>`.
pub fn h_word<T: Real>(state: &ExtremalState<T>, word: &BracketWord, cache: &mut BracketCache) -> T {
    let v = cache.get(word).eval(&state.q);
    dot(&state.lambda, &v)
}

pub fn h_word_exact(
    q: &[Rational],
    lambda: &[Rational],
    word: &BracketWord,
    cache: &mut BracketCache,
) -> Rational {
    let v = cache.eval_exact(word, q);
    crate::algebra::pairing(lambda, &v)
}

/// `(q', lambda')` at `state` under control `u`.
pub fn extremal_rhs<T: Real>(
    sys: &ExtremalSystem<T>,
    state: &ExtremalState<T>,
    u: &T,
) -> Result<(Vec<T>, Vec<T>)> {
    if u.abs() > T::one() {
        return Err(Error::InvalidInput(format!("control {:?} outside [-1, 1]", u)));
    }
    let y = state.packed();
    let mut dy = vec![T::zero(); y.len()];
    sys.rhs(&y, u, &mut dy);
    let lam = dy.split_off(sys.dim());
    Ok((dy, lam))
}

pub fn pmp_control<T: Real>(
    sys: &ExtremalSystem<T>,
    state: &ExtremalState<T>,
    tol: f64,
) -> Result<ControlMode> {
    sys.pmp_control(&state.packed(), tol)
}

pub fn singular_control<T: Real>(
    sys: &ExtremalSystem<T>,
    state: &ExtremalState<T>,
    tol: f64,
) -> Result<T> {
    sys.singular_control(&state.packed(), tol)
}

pub fn singular_hamiltonian_rhs<T: Real>(
    sys: &ExtremalSystem<T>,
    state: &ExtremalState<T>,
    tol: f64,
) -> Result<(Vec<T>, Vec<T>)> {
    let mut dy = sys.singular_hamiltonian_rhs(&state.packed(), tol)?;
    let lam = dy.split_off(sys.dim());
    Ok((dy, lam))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::poly::int;

    fn double_integrator() -> Scenario {
        let f0 = PolyVectorField::new(vec![Polynomial::var(2, 1), Polynomial::zero(2)]).unwrap();
        Scenario::new("di", f0, PolyVectorField::basis(2, 1)).unwrap()
    }

    fn state(q: [f64; 2], l: [f64; 2]) -> ExtremalState<f64> {
        ExtremalState::new(0.0, q.to_vec(), l.to_vec())
    }

    #[test]
    fn double_integrator_switching_values() {
        let sys = ExtremalSystem::<f64>::new(&double_integrator());
        let st = state([0.3, -0.2], [0.7, -1.1]);
        let s = sys.switching(&st.packed());
        assert_eq!(s.h1, -1.1);
        assert_eq!(s.h01, -0.7);
        assert_eq!(s.h001, 0.0);
        assert_eq!(s.h101, 0.0);
        let mut cache = double_integrator().cache();
        let w: BracketWord = "01".parse().unwrap();
        assert_eq!(h_word(&st, &w, &mut cache), -0.7);
        let exact = h_word_exact(&[int(0), int(0)], &[int(3), int(2)], &w, &mut cache);
        assert_eq!(exact, int(-3));
    }

    #[test]
    fn linear_adjoint() {
        // f1 = 0, f0 = A x with A = [[0, 1], [-2, 3]]
        let x = |i| Polynomial::var(2, i);
        let f0 = PolyVectorField::new(vec![x(1), &x(0).scale(&int(-2)) + &x(1).scale(&int(3))])
            .unwrap();
        let sc = Scenario::new("lin", f0, PolyVectorField::zero(2)).unwrap();
        let sys = ExtremalSystem::<f64>::new(&sc);
        let st = state([1.0, 2.0], [0.5, -1.5]);
        let (qd, ld) = extremal_rhs(&sys, &st, &0.0).unwrap();
        assert_eq!(qd, vec![2.0, 4.0]);
        // -A^T lambda = -[[0, -2], [1, 3]] (0.5, -1.5) = -(3, -4)
        assert_eq!(ld, vec![-3.0, 4.0]);
        assert!(extremal_rhs(&sys, &st, &1.5).is_err());
    }

    #[test]
    fn control_modes() {
        let sys = ExtremalSystem::<f64>::new(&double_integrator());
        let c = |l2: f64, l1: f64| pmp_control(&sys, &state([0.0, 0.0], [l1, l2]), 1e-8);
        assert_eq!(c(0.5, 1.0).unwrap(), ControlMode::Bang(1));
        assert_eq!(c(-0.5, 1.0).unwrap(), ControlMode::Bang(-1));
        assert!(matches!(c(0.0, 1.0), Err(Error::AmbiguousControl { .. })));
        assert_eq!(c(0.0, 0.0).unwrap(), ControlMode::SingularCandidate);
    }

    #[test]
    fn singular_feedback_cases() {
        let mk = |h001: f64, h101: f64| Switching {
            h1: 0.0,
            h01: 0.0,
            h001,
            h101,
        };
        assert_eq!(singular_feedback(&mk(0.0, 2.0), 1e-9).unwrap(), 0.0);
        assert_eq!(singular_feedback(&mk(1.5, 1.5), 1e-9).unwrap(), -1.0);
        assert!(matches!(
            singular_feedback(&mk(1.0, 0.0), 1e-9),
            Err(Error::DegenerateSingular { .. })
        ));
        assert!(matches!(
            singular_feedback(&mk(3.0, 1.0), 1e-9),
            Err(Error::InadmissibleSingular { .. })
        ));
    }

    #[test]
    fn fuller_cost_corrections() {
        let sc = double_integrator()
            .with_running_cost(&Polynomial::var(2, 0) * &Polynomial::var(2, 0))
            .unwrap();
        let sys = ExtremalSystem::<f64>::new(&sc);
        assert!(!sys.homogeneous());
        let y = [0.3, -0.4, 0.2, 0.05];
        let mut dy = [0.0; 4];
        sys.rhs(&y, &1.0, &mut dy);
        assert_eq!(dy, [-0.4, 1.0, 0.6, -0.2]);
        let s = sys.switching(&y);
        assert_eq!(s.h1, 0.05);
        assert_eq!(s.h01, -0.2);
        assert!((s.h001 + 0.6).abs() < 1e-15);
        assert_eq!(s.h101, 0.0);
        let h = sys.max_hamiltonian(&y);
        assert!((h - (0.2 * -0.4 + 0.05 - 0.09)).abs() < 1e-15);
    }
}
