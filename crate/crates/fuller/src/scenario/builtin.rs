//! Built-in fixtures.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::algebra::{int, lie_bracket, pairing, rat, PolyVectorField, Polynomial, Rational};
use crate::error::{Error, Result};
use crate::real::Real;
use crate::scenario::file::{Fixture, Initial, Precision, Setup};
use crate::sim::{ExtremalState, Scenario, SimOptions};

use num_traits::{Signed, Zero};

fn x(n: usize, i: usize) -> Polynomial {
    Polynomial::var(n, i)
}

fn field(c: Vec<Polynomial>) -> PolyVectorField {
    PolyVectorField::new(c).expect("fixture dims agree")
}

pub fn double_integrator() -> Setup {
    let f0 = field(vec![x(2, 1), Polynomial::zero(2)]);
    let f1 = PolyVectorField::basis(2, 1);
    Setup {
        scenario: Scenario::new("double_integrator", f0, f1).expect("dims"),
        initial: Some(Initial::Exact {
            q: vec![int(0), int(0)],
            lambda: vec![int(-1), rat(-1, 2)],
        }),
        t_final: Some(1.0),
        options: SimOptions::default(),
        precision: Precision::Double,
        fixture: Some(Fixture::DoubleIntegrator),
    }
}

/// Options for the Fuller run. Switching quantities shrink geometrically
/// towards the accumulation time, so absolute thresholds on `h1`, `h01` are
/// switched off and the run relies on extended precision.
pub fn fuller_options() -> SimOptions {
    SimOptions {
        rtol: 1e-60,
        atol: 1e-60,
        initial_step: 1e-2,
        max_step: 0.1,
        time_tol: 1e-110,
        refine_tol: 1e-150,
        eps_h1: 0.0,
        eps_h01: 0.0,
        eps_h101: 0.0,
        arc_tol: 0.0,
        max_events: 10_000,
        accumulation_window: 30,
        accumulation_ratio: 0.9,
        max_steps: 200_000,
        renormalize: false,
        scan_points: 8,
    }
}

/// Double integrator with running cost `x1^2`: the state part of the
/// extremal is `(x1, x2)` and the costate `(psi1, psi2)` with
/// `psi1' = 2 x1`, `psi2' = -psi1` and switching function `psi2`.
pub fn fuller() -> Setup {
    let f0 = field(vec![x(2, 1), Polynomial::zero(2)]);
    let f1 = PolyVectorField::basis(2, 1);
    let scenario = Scenario::new("fuller", f0, f1)
        .and_then(|s| s.with_running_cost(&x(2, 0) * &x(2, 0)))
        .expect("dims");
    Setup {
        scenario,
        initial: Some(Initial::FullerOrbit),
        t_final: Some(2.0),
        options: fuller_options(),
        precision: Precision::Extended,
        fixture: Some(Fixture::Fuller),
    }
}

/// Constants `(C, gamma)` of the self-similar Fuller extremal.
///
/// At a switch the state is `(-C a^2, a, C^2 a^3, 0)` for a scale `a > 0`.
/// Under `u = -1` the next switch comes after time `(1 + gamma) a` at the
/// mirrored state with scale `gamma a`. Matching `x1` there gives
/// `(1 - gamma^2) / 2 = C (1 + gamma^2)`.
pub fn fuller_constants<T: Real>() -> (T, T) {
    let c = ((T::from_i64(33).sqrt() - T::one()) / T::from_i64(24)).sqrt();
    let two_c = T::from_i64(2) * c.clone();
    let g2 = (T::one() - two_c.clone()) / (T::one() + two_c);
    (c, g2.sqrt())
}

/// State a quarter time unit into the `u = -1` arc that starts at the switch
/// `(-C, 1, C^2, 0)`.
pub fn fuller_orbit_state<T: Real>() -> ExtremalState<T> {
    let (c, _) = fuller_constants::<T>();
    let tau = T::frac(1, 4);
    let t2 = tau.clone() * tau.clone();
    let t3 = t2.clone() * tau.clone();
    let t4 = t3.clone() * tau.clone();
    let half = T::frac(1, 2);
    let x2 = T::one() - tau.clone();
    let x1 = -c.clone() + tau.clone() - half.clone() * t2.clone();
    let c2 = c.clone() * c.clone();
    let psi1 = c2.clone()
        + T::from_i64(2) * (-(c.clone() * tau.clone()) + half * t2.clone() - t3.clone() / T::from_i64(6));
    let psi2 = -(c2 * tau + -(c * t2) + t3 / T::from_i64(3) - t4 / T::from_i64(12));
    ExtremalState::new(T::zero(), vec![x1, x2], vec![psi1, psi2])
}

pub fn singular3d_fields() -> (PolyVectorField, PolyVectorField) {
    let f0 = field(vec![x(3, 1), x(3, 2), Polynomial::zero(3)]);
    let f1 = field(vec![
        Polynomial::zero(3),
        Polynomial::constant(3, int(1)),
        x(3, 1),
    ]);
    (f0, f1)
}

/// Exact gate for a singular seed: `h1 = h01 = 0`, `f101` not identically
/// zero, `h101 != 0` and `-h001 / h101` strictly inside `(-1, 1)`.
pub fn check_singular_seed(
    f0: &PolyVectorField,
    f1: &PolyVectorField,
    q: &[Rational],
    lambda: &[Rational],
) -> Result<Rational> {
    let f01 = lie_bracket(f0, f1)?;
    let f001 = lie_bracket(f0, &f01)?;
    let f101 = lie_bracket(f1, &f01)?;
    let h = |f: &PolyVectorField| pairing(lambda, &f.eval_exact(q));
    if !h(f1).is_zero() || !h(&f01).is_zero() {
        return Err(Error::InvalidInput("seed is off the singular locus".into()));
    }
    if f101.is_zero() {
        return Err(Error::DegenerateSingular { h101: 0.0 });
    }
    let h101 = h(&f101);
    if h101.is_zero() {
        return Err(Error::DegenerateSingular { h101: 0.0 });
    }
    let u = -h(&f001) / h101;
    if u.abs() >= int(1) {
        return Err(Error::InadmissibleSingular { u: f64::from_ratio(&u) });
    }
    Ok(u)
}

pub fn singular3d() -> Result<Setup> {
    let (f0, f1) = singular3d_fields();
    let q = vec![int(0), int(1), int(0)];
    let lambda = vec![int(1), int(-1), int(1)];
    check_singular_seed(&f0, &f1, &q, &lambda)?;
    Ok(Setup {
        scenario: Scenario::new("singular3d", f0, f1)?,
        initial: Some(Initial::Exact { q, lambda }),
        t_final: Some(0.5),
        options: SimOptions::default(),
        precision: Precision::Double,
        fixture: Some(Fixture::Singular3d),
    })
}

fn random_scalar(rng: &mut ChaCha8Rng, n: usize, degree: u32, density: f64) -> Polynomial {
    let mut terms = Vec::new();
    let mut exps: Vec<Vec<u32>> = vec![vec![]];
    for _ in 0..n {
        exps = exps
            .into_iter()
            .flat_map(|e| {
                (0..=degree).map(move |k| {
                    let mut e2 = e.clone();
                    e2.push(k);
                    e2
                })
            })
            .collect();
    }
    for e in exps {
        if e.iter().sum::<u32>() > degree || !rng.gen_bool(density) {
            continue;
        }
        let p = rng.gen_range(-3..=3);
        let q = rng.gen_range(1..=2);
        terms.push((e, rat(p, q)));
    }
    Polynomial::from_terms(n, terms).expect("exponent lengths match")
}

/// Random polynomial field with every component of degree at most `degree`.
pub fn random_field(rng: &mut ChaCha8Rng, n: usize, degree: u32, density: f64) -> PolyVectorField {
    field((0..n).map(|_| random_scalar(rng, n, degree, density)).collect())
}

fn small_rational(rng: &mut ChaCha8Rng) -> Rational {
    rat(rng.gen_range(-4..=4), rng.gen_range(1..=4))
}

/// Seeded 3-D scenario with degree <= 2 fields and a generic initial state.
pub fn random_poly(seed: u64) -> Setup {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = 3;
    let f0 = random_field(&mut rng, n, 2, 0.35);
    let mut f1 = random_field(&mut rng, n, 2, 0.35);
    if f1.is_zero() {
        f1 = PolyVectorField::basis(n, 0);
    }
    let q: Vec<Rational> = (0..n).map(|_| small_rational(&mut rng)).collect();
    let mut lambda: Vec<Rational> = (0..n).map(|_| small_rational(&mut rng)).collect();
    if lambda.iter().all(Zero::is_zero) {
        lambda[0] = int(1);
    }
    Setup {
        scenario: Scenario::new(format!("random_poly_{seed}"), f0, f1).expect("dims"),
        initial: Some(Initial::Exact { q, lambda }),
        t_final: Some(0.5),
        options: SimOptions::default(),
        precision: Precision::Double,
        fixture: Some(Fixture::RandomPoly),
    }
}

fn cross(a: &[Rational], b: &[Rational]) -> Vec<Rational> {
    vec![
        &a[1] * &b[2] - &a[2] * &b[1],
        &a[2] * &b[0] - &a[0] * &b[2],
        &a[0] * &b[1] - &a[1] * &b[0],
    ]
}

/// Randomized search for a 3-D singular seed: random degree <= 2 fields and
/// point, `lambda = f1(q) x f01(q)`, accepted by [`check_singular_seed`].
pub fn search_singular_fixture(seed: u64, attempts: usize) -> Option<Setup> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..attempts {
        let f0 = random_field(&mut rng, 3, 2, 0.4);
        let f1 = random_field(&mut rng, 3, 2, 0.4);
        let q: Vec<Rational> = (0..3).map(|_| small_rational(&mut rng)).collect();
        let Ok(f01) = lie_bracket(&f0, &f1) else { continue };
        let lambda = cross(&f1.eval_exact(&q), &f01.eval_exact(&q));
        if lambda.iter().all(Zero::is_zero) {
            continue;
        }
        if check_singular_seed(&f0, &f1, &q, &lambda).is_ok() {
            return Some(Setup {
                scenario: Scenario::new(format!("singular_search_{seed}"), f0, f1).ok()?,
                initial: Some(Initial::Exact { q, lambda }),
                t_final: Some(0.5),
                options: SimOptions::default(),
                precision: Precision::Double,
                fixture: None,
            });
        }
    }
    None
}

/// Look up a fixture by name; `seed` only matters for `random_poly`.
pub fn builtin(name: &str, seed: Option<u64>) -> Result<Setup> {
    match Fixture::from_name(name) {
        Some(Fixture::DoubleIntegrator) => Ok(double_integrator()),
        Some(Fixture::Fuller) => Ok(fuller()),
        Some(Fixture::Singular3d) => singular3d(),
        Some(Fixture::RandomPoly) => Ok(random_poly(seed.unwrap_or(0))),
        None => Err(Error::UnknownFixture(name.to_string())),
    }
}
