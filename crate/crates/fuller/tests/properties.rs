//! Property tests over seeded random fields, words, switch sets and
//! extremals.

use fuller::algebra::{
    decompose_word, eval_word_field, expand_word, int, lie_bracket, rat, BracketCache, BracketWord, Letter,
    PolyVectorField, Rational,
};
use fuller::analysis::synthetic::{geometric, random_resolved_set};
use fuller::analysis::{chatter_ratio, fuller_order, Epsilon, OrderOptions, SwitchSet};
use fuller::relations::{build_q, classify_point_3d, longest_admissible, q_numeric_exact, fuller_bound, RelPoly};
use fuller::scenario::builtin::{self, random_field};
use fuller::sim::{
    check_arc_invariants, h_word_exact, simulate, ExtremalState, InvariantTolerances, Scenario, SimOptions,
};
use num_bigint::BigInt;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn letter() -> impl Strategy<Value = Letter> {
    prop_oneof![
        Just(Letter::Zero),
        Just(Letter::One),
        Just(Letter::Plus),
        Just(Letter::Minus)
    ]
}

fn word(max: usize) -> impl Strategy<Value = BracketWord> {
    prop::collection::vec(letter(), 1..=max).prop_map(|l| BracketWord::new(l).unwrap())
}

fn small_rational() -> impl Strategy<Value = Rational> {
    (-5i64..=5, 1i64..=4).prop_map(|(p, q)| rat(p, q))
}

fn point(n: usize) -> impl Strategy<Value = Vec<Rational>> {
    prop::collection::vec(small_rational(), n)
}

fn pair(seed: u64, n: usize, degree: u32) -> (PolyVectorField, PolyVectorField) {
    let mut r = rng(seed);
    (random_field(&mut r, n, degree, 0.5), random_field(&mut r, n, degree, 0.5))
}

fn bracket(f: &PolyVectorField, g: &PolyVectorField) -> PolyVectorField {
    lie_bracket(f, g).unwrap()
}

fn order_at(set: &SwitchSet, eps: f64) -> usize {
    fuller_order(set, Epsilon::Fixed(eps), &OrderOptions::default())
        .unwrap()
        .estimated_order
}

const RESOLUTION: f64 = 1e-9;

fn eps_grid() -> Vec<f64> {
    (0..10).map(|i| 4.0 * RESOLUTION * (0.5 / (4.0 * RESOLUTION)).powf(i as f64 / 9.0)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn antisymmetry(seed in any::<u64>(), n in 1usize..=4, degree in 0u32..=3) {
        let (f, g) = pair(seed, n, degree);
        prop_assert!((&bracket(&f, &g) + &bracket(&g, &f)).is_zero());
    }

    #[test]
    fn jacobi(seed in any::<u64>(), n in 1usize..=4, degree in 0u32..=3) {
        let mut r = rng(seed);
        let f = random_field(&mut r, n, degree, 0.4);
        let g = random_field(&mut r, n, degree, 0.4);
        let h = random_field(&mut r, n, degree, 0.4);
        let sum = &(&bracket(&f, &bracket(&g, &h)) + &bracket(&g, &bracket(&h, &f))) + &bracket(&h, &bracket(&f, &g));
        prop_assert!(sum.is_zero());
    }

    #[test]
    fn bracket_is_a_derivation(seed in any::<u64>(), n in 1usize..=3, degree in 0u32..=2) {
        let mut r = rng(seed);
        let f = random_field(&mut r, n, degree, 0.5);
        let g = random_field(&mut r, n, degree, 0.5);
        let p = random_field(&mut r, n, degree, 0.5).component(0).clone();
        let lhs = bracket(&f, &g.mul_poly(&p));
        let rhs = &g.mul_poly(&f.apply(&p)) + &bracket(&f, &g).mul_poly(&p);
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn decomposition_is_sound(seed in any::<u64>(), prefix in prop::collection::vec(letter(), 0..=3)) {
        let mut letters = prefix;
        letters.extend([Letter::Zero, Letter::One]);
        let w = BracketWord::new(letters).unwrap();
        prop_assume!(w.count(Letter::Plus) + w.count(Letter::Minus) <= 3);
        let (f0, f1) = pair(seed, 2, 2);
        let d = decompose_word(&w).unwrap();
        let mut sum = PolyVectorField::zero(2);
        for (t, s) in &d.terms {
            sum = &sum + &eval_word_field(t, &f0, &f1).unwrap().scale(&int(*s as i64));
        }
        prop_assert_eq!(sum, eval_word_field(&w, &f0, &f1).unwrap());
        let zeros = d.terms.iter().filter(|(t, _)| t.count(Letter::Zero) == d.j1.count(Letter::Zero)).count();
        let ones = d.terms.iter().filter(|(t, _)| t.count(Letter::One) == d.j2.count(Letter::One)).count();
        prop_assert_eq!((zeros, ones), (1, 1));
    }

    #[test]
    fn cache_matches_recomputation(seed in any::<u64>(), words in prop::collection::vec(word(4), 1..6)) {
        let (f0, f1) = pair(seed, 3, 2);
        let mut cache = BracketCache::new(f0.clone(), f1.clone()).unwrap();
        // twice over, so later lookups hit entries stored by earlier ones
        for w in words.iter().chain(&words) {
            prop_assert_eq!(cache.get(w).clone(), eval_word_field(w, &f0, &f1).unwrap());
        }
    }

    #[test]
    fn expansion_has_no_sum_letters(w in word(6)) {
        for (t, _) in expand_word(&w) {
            prop_assert_eq!(t.count(Letter::Plus) + t.count(Letter::Minus), 0);
            prop_assert_eq!(t.len(), w.len());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn poisson_bracket_of_leaves_is_concatenation(
        seed in any::<u64>(),
        i in word(4),
        j in word(4),
        lambda in point(3),
        q in point(3),
    ) {
        let (f0, f1) = pair(seed, 3, 2);
        let mut cache = BracketCache::new(f0, f1).unwrap();
        let rel = RelPoly::leaf(i.clone()).poisson(&RelPoly::leaf(j.clone()));
        let got = rel.eval_exact(&lambda, &q, &mut cache).unwrap();
        prop_assert_eq!(got, h_word_exact(&q, &lambda, &i.concat(&j), &mut cache));
    }

    #[test]
    fn q_matches_numeric_recursion(
        seed in any::<u64>(),
        r in 1usize..=3,
        i_prev in word(2),
        i_l in word(2),
        lambda in point(3),
        q in point(3),
    ) {
        let (f0, f1) = pair(seed, 3, 2);
        let mut cache = BracketCache::new(f0, f1).unwrap();
        let poly = build_q(r, &i_prev, &i_l).unwrap();
        let want = q_numeric_exact(r, &i_prev, &i_l, &lambda, &q, &mut cache).unwrap();
        prop_assert_eq!(poly.eval_exact(&lambda, &q, &mut cache).unwrap(), want);
    }

    #[test]
    fn q_leading_term(j in word(3), r in 1usize..=3) {
        let i_l = j.prepend(Letter::One);
        let i_prev = j.prepend(Letter::Zero);
        let poly = build_q(r, &i_prev, &i_l).unwrap();
        let mut deep = i_prev.clone();
        for _ in 0..r {
            deep = deep.prepend(Letter::Zero);
        }
        let mut mono = vec![(i_l.prepend(Letter::One), r as u32), (deep.clone(), 1)];
        mono.sort();
        let sign = if r % 2 == 0 { 1 } else { -1 };
        prop_assert_eq!(poly.coefficient(&mono), BigInt::from(sign));
        prop_assert_eq!(poly.monomials_with(&deep).len(), 1);
    }

    #[test]
    fn classifier_pairs_are_exclusive(seed in any::<u64>(), q in point(3)) {
        let (f0, f1) = pair(seed, 3, 2);
        let s = Scenario::new("random", f0, f1).unwrap();
        let qf: Vec<f64> = q.iter().map(|x| fuller::real::Real::from_ratio(x)).collect();
        for class in [
            classify_point_3d::<Rational>(&s, &q, 0.0).unwrap(),
            classify_point_3d::<f64>(&s, &qf, 1e-9).unwrap(),
        ] {
            prop_assert!(!(class.a[1] && class.a[3]));
            prop_assert!(!(class.a[2] && class.a[4]));
            prop_assert!(class.a.iter().filter(|&&x| x).count() + usize::from(class.w) <= 1);
        }
    }
}

#[test]
fn longest_curve_matches_closed_form() {
    for n in 2..=12 {
        assert_eq!(longest_admissible(n).unwrap().length, (n - 2) * (n - 1));
    }
    for n in 2..=10 {
        assert_eq!(fuller_bound(n).unwrap().total, (n - 1) * (n - 1));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn layers_partition_the_set(seed in any::<u64>(), k in 0usize..10) {
        let set = random_resolved_set(&mut rng(seed), RESOLUTION);
        let report = fuller_order(&set, Epsilon::Fixed(eps_grid()[k]), &OrderOptions::default()).unwrap();
        let mut all: Vec<f64> = report.layers.concat();
        all.sort_by(f64::total_cmp);
        prop_assert_eq!(all, set.times.clone());
        prop_assert_eq!(report.estimated_order + 1, report.layers.len());
    }

    #[test]
    fn stripping_is_idempotent(seed in any::<u64>(), k in 0usize..10) {
        let set = random_resolved_set(&mut rng(seed), RESOLUTION);
        let opts = OrderOptions::default();
        let eps = eps_grid()[k];
        let report = fuller_order(&set, Epsilon::Fixed(eps), &opts).unwrap();
        let rest = set.without(&report.layers[0]).unwrap();
        prop_assume!(!rest.is_empty());
        let again = fuller_order(&rest, Epsilon::Fixed(eps * opts.level_growth), &opts).unwrap();
        prop_assert_eq!(again.layers.as_slice(), &report.layers[1..]);
    }

    #[test]
    fn larger_epsilon_never_raises_the_order(seed in any::<u64>(), i in 0usize..10, j in 0usize..10) {
        let set = random_resolved_set(&mut rng(seed), RESOLUTION);
        let grid = eps_grid();
        let (lo, hi) = (grid[i.min(j)], grid[i.max(j)]);
        prop_assert!(order_at(&set, hi) <= order_at(&set, lo));
    }

    #[test]
    fn geometric_input_is_order_one(r in 0.1f64..0.8, n in 10usize..20, frac in 0.0f64..1.0) {
        // gaps must stay far above the f64 spacing of times near 1
        prop_assume!(0.5 * r.powi(n as i32 - 2) * (1.0 - r) >= 1e-6);
        let times = geometric(n, 1.0, 0.5, r);
        let est = chatter_ratio(&times).unwrap();
        prop_assert!((est.ratio - r).abs() <= 1e-9, "ratio {} for {}", est.ratio, r);
        let set = SwitchSet::new(times, 1.0, 0.0).unwrap();
        // from the widest gap inside the cluster up to the horizon
        let widest = set.gaps[0];
        let eps = widest * (1.0 / widest).powf(frac);
        prop_assert_eq!(order_at(&set, eps), 1);
    }
}

fn double_integrator_run(q: [f64; 2], lambda: [f64; 2]) -> (Scenario, fuller::sim::SimResult) {
    let setup = builtin::double_integrator();
    let init = ExtremalState::new(0.0, q.to_vec(), lambda.to_vec());
    let res = simulate(&setup.scenario, &init, 2.0, &SimOptions::default()).unwrap();
    (setup.scenario, res)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn costate_scaling_changes_nothing(
        q in prop::array::uniform2(-1.0f64..1.0),
        lambda in prop::array::uniform2(-2.0f64..2.0),
        c in 0.1f64..10.0,
    ) {
        prop_assume!(lambda[0].abs() > 0.1 && lambda[1].abs() > 0.1);
        let (_, a) = double_integrator_run(q, lambda);
        let (_, b) = double_integrator_run(q, [c * lambda[0], c * lambda[1]]);
        prop_assert_eq!(a.switch_times.len(), b.switch_times.len());
        for (x, y) in a.switch_times.iter().zip(&b.switch_times) {
            prop_assert!((x - y).abs() <= 1e-8, "{} vs {}", x, y);
        }
        for (x, y) in a.final_state.q.iter().zip(&b.final_state.q) {
            prop_assert!((x - y).abs() <= 1e-8);
        }
        let arcs = |r: &fuller::sim::SimResult| r.arcs.iter().map(|s| s.kind).collect::<Vec<_>>();
        prop_assert_eq!(arcs(&a), arcs(&b));
    }

    #[test]
    fn bang_arcs_respect_the_switching_function(
        q in prop::array::uniform2(-1.0f64..1.0),
        lambda in prop::array::uniform2(-2.0f64..2.0),
    ) {
        prop_assume!(lambda[0].abs() > 0.1 && lambda[1].abs() > 0.1);
        let (s, res) = double_integrator_run(q, lambda);
        prop_assert!(res.diagnostics.max_hamiltonian_drift <= 10.0 * SimOptions::default().rtol);
        let v = check_arc_invariants(&res, &s, &InvariantTolerances::default());
        prop_assert!(v.is_empty(), "{:?}", v);
    }
}
