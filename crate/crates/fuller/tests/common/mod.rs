//! Shared builders for integration tests: random rational fields and
//! three-dimensional pairs placed in a prescribed class at the origin.
//!
//! A class is reached by tuning single Taylor coefficients of `f0`. Every
//! determinant involved is affine in a coefficient of high enough order,
//! so the root is found from two evaluations and then checked exactly.

#![allow(dead_code)]

use std::collections::BTreeMap;

use fuller::algebra::{
    ad_power, eval_word_field, int, rank, rat, wedge_det, BracketWord, PolyVectorField, Polynomial,
    Rational,
};
use fuller::sim::Scenario;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Exp = [u32; 3];

/// Coefficients of a 3-D field, keyed by component and exponent.
#[derive(Clone, Debug, Default)]
pub struct Jet(pub BTreeMap<(usize, Exp), Rational>);

impl Jet {
    pub fn set(&mut self, comp: usize, e: Exp, c: Rational) {
        if c.is_zero() {
            self.0.remove(&(comp, e));
        } else {
            self.0.insert((comp, e), c);
        }
    }

    pub fn field(&self) -> PolyVectorField {
        let comps = (0..3)
            .map(|i| {
                Polynomial::from_terms(
                    3,
                    self.0
                        .iter()
                        .filter(|((c, _), _)| *c == i)
                        .map(|((_, e), v)| (e.to_vec(), v.clone())),
                )
                .unwrap()
            })
            .collect();
        PolyVectorField::new(comps).unwrap()
    }
}

pub fn small(rng: &mut ChaCha8Rng) -> Rational {
    loop {
        let r = rat(rng.gen_range(-4..=4), rng.gen_range(1..=3));
        if !r.is_zero() {
            return r;
        }
    }
}

fn monomials(max_degree: u32) -> Vec<Exp> {
    let mut out = Vec::new();
    for a in 0..=max_degree {
        for b in 0..=max_degree - a {
            for c in 0..=max_degree - a - b {
                out.push([a, b, c]);
            }
        }
    }
    out
}

/// Sparse random `f0`: every constant and linear coefficient, a few
/// quadratic and cubic ones.
pub fn random_drift(rng: &mut ChaCha8Rng) -> Jet {
    let mut j = Jet::default();
    for comp in 0..3 {
        for e in monomials(3) {
            let deg: u32 = e.iter().sum();
            let p = match deg {
                0 | 1 => 0.9,
                2 => 0.35,
                _ => 0.15,
            };
            if rng.gen_bool(p) {
                j.set(comp, e, small(rng));
            }
        }
    }
    j
}

/// `f1 = e3` plus one random quadratic term, so `f1(0) = e3` and
/// `Df1(0) = 0`.
pub fn random_control(rng: &mut ChaCha8Rng) -> Jet {
    let mut j = Jet::default();
    j.set(2, [0, 0, 0], int(1));
    let quad: Vec<Exp> = monomials(2).into_iter().filter(|e| e.iter().sum::<u32>() == 2).collect();
    let e = quad[rng.gen_range(0..quad.len())];
    j.set(rng.gen_range(0..3), e, small(rng));
    j
}

pub fn scenario(f0: &Jet, f1: &Jet) -> Scenario {
    Scenario::new("constructed", f0.field(), f1.field()).unwrap()
}

pub fn origin() -> Vec<Rational> {
    vec![int(0); 3]
}

fn w(s: &str) -> BracketWord {
    s.parse().unwrap()
}

/// `f_I(0)` from scratch, without a cache.
pub fn word_at(s: &Scenario, word: &str) -> Vec<Rational> {
    eval_word_field(&w(word), &s.f0, &s.f1)
        .unwrap()
        .eval_exact(&origin())
}

pub fn det3(s: &Scenario, a: &str, b: &str, c: &str) -> Rational {
    wedge_det(&[word_at(s, a), word_at(s, b), word_at(s, c)])
}

type Condition<'a> = Box<dyn Fn(&Scenario) -> Rational + 'a>;

/// Tune the coefficients `slots` of `f0` so that every condition vanishes,
/// assuming the conditions are jointly affine in them. `None` when the
/// linear system is singular or the root does not check out.
pub fn solve_slots(f0: &mut Jet, f1: &Jet, slots: &[(usize, Exp)], conds: &[Condition]) -> Option<()> {
    let k = slots.len();
    assert_eq!(k, conds.len());
    let eval = |f0: &Jet| -> Vec<Rational> {
        let s = scenario(f0, f1);
        conds.iter().map(|c| c(&s)).collect()
    };
    for (c, e) in slots {
        f0.set(*c, *e, int(0));
    }
    let base = eval(f0);
    // columns of the Jacobian, one per slot
    let mut cols = Vec::with_capacity(k);
    for (c, e) in slots {
        f0.set(*c, *e, int(1));
        cols.push(eval(f0).iter().zip(&base).map(|(v, b)| v - b).collect::<Vec<_>>());
        f0.set(*c, *e, int(0));
    }
    let det = wedge_det(&cols);
    if det.is_zero() {
        return None;
    }
    let rhs: Vec<Rational> = base.iter().map(|b| -b.clone()).collect();
    for (i, (c, e)) in slots.iter().enumerate() {
        let mut m = cols.clone();
        m[i] = rhs.clone();
        f0.set(*c, *e, wedge_det(&m) / &det);
    }
    eval(f0).iter().all(Zero::is_zero).then_some(())
}

pub fn solve_slot(
    f0: &mut Jet,
    f1: &Jet,
    slot: (usize, Exp),
    target: impl Fn(&Scenario) -> Rational,
) -> Option<()> {
    solve_slots(f0, f1, &[slot], &[Box::new(target)])
}

/// Flags recomputed from exact ranks, for comparison with the classifier.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OracleFlags {
    pub a: [bool; 6],
    pub w: bool,
    pub c: bool,
    pub l1: bool,
    pub l2: bool,
}

/// Independent flags: wedge conditions as rank deficiencies of
/// from-scratch brackets.
pub fn oracle(s: &Scenario) -> OracleFlags {
    let v = |x: &str| word_at(s, x);
    let (f0, f1, f01) = (v("0"), v("1"), v("01"));
    let dep = |x: &str| rank(&[f1.clone(), f01.clone(), v(x)]) < 3;
    let dep2 = |x: &str, y: &str| rank(&[f1.clone(), v(x), v(y)]) < 3;
    let (p, m) = (dep("+01"), dep("-01"));
    let (pp, mm) = (dep("++01"), dep("--01"));
    let (ppp, mmm) = (dep("+++01"), dep("---01"));
    let r2 = rank(&[f1.clone(), f01.clone()]);
    let a = [
        !p && !m,
        p && !pp && !m,
        m && !mm && !p,
        p && pp && !ppp && !m,
        m && mm && !mmm && !p,
        r2 < 2 && !dep2("+01", "-01") && !dep2("+01", "++01") && !dep2("-01", "--01"),
    ];
    let l1 = rank(&[f0.clone(), f1.clone(), f01.clone()]) <= 1;
    let f1_nonzero = f1.iter().any(|x| !x.is_zero());
    let l2 = f1_nonzero && rank(&[f0.clone(), f1.clone()]) <= 1 && {
        let k = f1.iter().position(|x| !x.is_zero()).unwrap();
        let a = &f0[k] / &f1[k];
        let g = &s.f0 + &s.f1.scale(&a);
        let cols: Vec<Vec<Rational>> = (0..3)
            .map(|i| ad_power(&g, &s.f1, i).unwrap().eval_exact(&origin()))
            .collect();
        rank(&cols) < 3
    };
    OracleFlags {
        a,
        w: p && m && r2 == 2,
        c: rank(&[f0, f1]) <= 1,
        l1,
        l2,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Target {
    A(usize),
    W,
    C,
    L1,
    L2,
}

impl Target {
    pub fn all() -> Vec<Target> {
        let mut v: Vec<Target> = (1..=6).map(Target::A).collect();
        v.extend([Target::W, Target::C, Target::L1, Target::L2]);
        v
    }

    pub fn label(self) -> String {
        match self {
            Target::A(i) => format!("A{i}"),
            Target::W => "W".into(),
            Target::C => "C".into(),
            Target::L1 => "L'".into(),
            Target::L2 => "L''".into(),
        }
    }

    pub fn holds(self, f: &OracleFlags) -> bool {
        match self {
            Target::A(i) => f.a[i - 1],
            Target::W => f.w,
            Target::C => f.c,
            Target::L1 => f.l1,
            Target::L2 => f.l2,
        }
    }
}

const ZZ: Exp = [0, 0, 2];
const ZZZ: Exp = [0, 0, 3];

/// One attempt at a pair in `target` from `seed`; `None` when a generic
/// side condition fails for this draw.
pub fn try_construct(target: Target, seed: u64) -> Option<Scenario> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut f0 = random_drift(&mut rng);
    let f1 = random_control(&mut rng);
    let comp = rng.gen_range(0..2);
    let d = |x: &'static str| move |s: &Scenario| det3(s, "1", "01", x);
    match target {
        Target::A(1) => {}
        Target::A(2) => solve_slot(&mut f0, &f1, (comp, ZZ), d("+01"))?,
        Target::A(3) => solve_slot(&mut f0, &f1, (comp, ZZ), d("-01"))?,
        Target::A(4) => {
            solve_slot(&mut f0, &f1, (comp, ZZ), d("+01"))?;
            solve_slot(&mut f0, &f1, (comp, ZZZ), d("++01"))?;
        }
        Target::A(5) => {
            solve_slot(&mut f0, &f1, (comp, ZZ), d("-01"))?;
            solve_slot(&mut f0, &f1, (comp, ZZZ), d("--01"))?;
        }
        Target::A(_) | Target::L1 => {
            // f01(0) = -d f0/dz (0) is made parallel to f1(0) = e3
            for c in 0..2 {
                f0.set(c, [0, 0, 1], int(0));
            }
            if target == Target::L1 {
                for c in 0..2 {
                    f0.set(c, [0, 0, 0], int(0));
                }
            }
        }
        Target::W => solve_slots(
            &mut f0,
            &f1,
            // z^2 reaches f101 only; xz also reaches f001
            &[(comp, ZZ), (comp, [1, 0, 1])],
            &[Box::new(d("+01")), Box::new(d("-01"))],
        )?,
        Target::C => {
            for c in 0..2 {
                f0.set(c, [0, 0, 0], int(0));
            }
        }
        Target::L2 => {
            let a = small(&mut rng);
            for c in 0..2 {
                f0.set(c, [0, 0, 0], int(0));
            }
            f0.set(2, [0, 0, 0], a.clone());
            let chain = move |s: &Scenario| {
                let g = &s.f0 + &s.f1.scale(&a);
                let cols: Vec<Vec<Rational>> = (0..3)
                    .map(|i| ad_power(&g, &s.f1, i).unwrap().eval_exact(&origin()))
                    .collect();
                wedge_det(&cols)
            };
            solve_slot(&mut f0, &f1, (comp, ZZ), chain)?;
        }
    }
    let s = scenario(&f0, &f1);
    target.holds(&oracle(&s)).then_some(s)
}

/// The first `count` successful constructions, scanning seeds upwards.
pub fn construct(target: Target, count: usize) -> Vec<(u64, Scenario)> {
    let mut out = Vec::new();
    for seed in 0..500 {
        if let Some(s) = try_construct(target, seed) {
            out.push((seed, s));
            if out.len() == count {
                break;
            }
        }
    }
    out
}
