//! Strategies and per-case checks for the property suite.

use std::cmp::Ordering;

use num_traits::{One, Zero};
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{load_surface, random_system, SurfaceOracle, SURFACES};
use toric_sarkisov::degrees::{summed_weight, weight, AugmentedSarkisovDegree, Closure, SarkisovDegree, WeightFunction};
use toric_sarkisov::rat::{int, rat};
use toric_sarkisov::toric::{log_discrepancy, ToricValuation};
use toric_sarkisov::{ExtCount, ExtRat, Rat};

pub fn small_rat() -> impl Strategy<Value = Rat> {
    (1i64..=12, 1i64..=6).prop_map(|(n, d)| rat(n, d))
}

pub fn ext_rat() -> impl Strategy<Value = ExtRat> {
    prop_oneof![
        4 => small_rat().prop_map(ExtRat::Finite),
        1 => Just(ExtRat::Infinity),
    ]
}

pub fn ext_count() -> impl Strategy<Value = ExtCount> {
    prop_oneof![
        4 => (0u64..4).prop_map(ExtCount::Finite),
        1 => Just(ExtCount::Infinity),
    ]
}

pub fn degree() -> impl Strategy<Value = SarkisovDegree> {
    (small_rat(), ext_rat(), ext_count()).prop_map(|(mu, c, e)| SarkisovDegree { mu, c, e })
}

pub fn augmented() -> impl Strategy<Value = AugmentedSarkisovDegree> {
    (small_rat(), 0u64..3, ext_count(), ext_rat(), ext_rat(), ext_count()).prop_map(|(mu, b, rho, d, c_prime, e_prime)| {
        AugmentedSarkisovDegree {
            mu,
            b,
            rho,
            d,
            c_prime,
            e_prime,
        }
    })
}

pub fn weight_fn() -> impl Strategy<Value = WeightFunction> {
    (1i64..12, 2i64..=12, any::<bool>())
        .prop_filter("alpha < 1", |(p, q, _)| p < q)
        .prop_map(|(p, q, plus)| {
            let c = if plus { Closure::Plus } else { Closure::Minus };
            WeightFunction::new(rat(p, q), c).unwrap()
        })
}

/// `+∞` sorts last; finite values by value.
fn ext_key(x: &ExtRat) -> (bool, Rat) {
    match x {
        ExtRat::Finite(r) => (false, r.clone()),
        ExtRat::Infinity => (true, Rat::zero()),
    }
}

fn count_key(x: &ExtCount) -> (bool, u64) {
    match x {
        ExtCount::Finite(n) => (false, *n),
        ExtCount::Infinity => (true, 0),
    }
}

/// Larger µ, then smaller c, then larger e.
fn degree_reference(a: &SarkisovDegree, b: &SarkisovDegree) -> Ordering {
    if a.mu != b.mu {
        return a.mu.cmp(&b.mu);
    }
    if a.c != b.c {
        return ext_key(&b.c).cmp(&ext_key(&a.c));
    }
    count_key(&a.e).cmp(&count_key(&b.e))
}

fn augmented_reference(a: &AugmentedSarkisovDegree, b: &AugmentedSarkisovDegree) -> Ordering {
    let steps = [
        a.mu.cmp(&b.mu),
        b.b.cmp(&a.b),
        count_key(&a.rho).cmp(&count_key(&b.rho)),
        ext_key(&a.d).cmp(&ext_key(&b.d)),
        ext_key(&b.c_prime).cmp(&ext_key(&a.c_prime)),
        count_key(&a.e_prime).cmp(&count_key(&b.e_prime)),
    ];
    steps.into_iter().find(|o| o.is_ne()).unwrap_or(Ordering::Equal)
}

fn check_strict_total_order<T: Ord + Eq + std::fmt::Debug>(x: &T, y: &T, z: &T) -> Result<(), TestCaseError> {
    prop_assert_eq!(x.cmp(x), Ordering::Equal);
    prop_assert_eq!(x.cmp(y), y.cmp(x).reverse());
    prop_assert_eq!(x.cmp(y) == Ordering::Equal, x == y, "{:?} vs {:?}", x, y);
    if x < y && y < z {
        prop_assert!(x < z);
    }
    if x <= y && y <= z {
        prop_assert!(x <= z);
    }
    Ok(())
}

/// Independent reimplementation of `w_α^±`.
fn weight_reference(w: &WeightFunction, a: &Rat) -> Rat {
    let inside = match w.closure {
        Closure::Minus => *a <= w.alpha,
        Closure::Plus => *a < w.alpha,
    };
    if inside && *a < Rat::one() {
        Rat::one() - a
    } else {
        Rat::zero()
    }
}

fn summed_reference(w: &WeightFunction, b: &Rat) -> Rat {
    let step = Rat::one() - b;
    // k·step ≥ 1 once k exceeds 1/step, so a few extra terms are zero
    let last = (Rat::one() / &step).to_integer() + num_bigint::BigInt::from(2);
    let last: i64 = last.try_into().unwrap();
    (1..=last).map(|k| weight_reference(w, &(&step * int(k)))).sum()
}

pub fn degree_order(x: &SarkisovDegree, y: &SarkisovDegree, z: &SarkisovDegree) -> Result<(), TestCaseError> {
    prop_assert_eq!(x.cmp(y), degree_reference(x, y));
    check_strict_total_order(x, y, z)
}

pub fn augmented_order(
    x: &AugmentedSarkisovDegree,
    y: &AugmentedSarkisovDegree,
    z: &AugmentedSarkisovDegree,
) -> Result<(), TestCaseError> {
    prop_assert_eq!(x.cmp(y), augmented_reference(x, y));
    check_strict_total_order(x, y, z)
}

pub fn weight_definition(w: &WeightFunction, n: i64, d: i64) -> Result<(), TestCaseError> {
    let a = rat(n, d);
    prop_assert_eq!(weight(w, &a), weight_reference(w, &a));
    Ok(())
}

/// Terms `(m, p, q)` stand for `m·(p/q)`; terms with `p ≥ q` are dropped.
pub fn weight_superadditive(w: &WeightFunction, terms: &[(i64, i64, i64)]) -> Result<(), TestCaseError> {
    let terms: Vec<(Rat, Rat)> = terms
        .iter()
        .filter(|(_, p, q)| p < q)
        .map(|&(m, p, q)| (int(m), rat(p, q)))
        .collect();
    let s: Rat = terms.iter().map(|(m, b)| m * b).sum();
    prop_assume!(s > Rat::zero() && s < Rat::one());
    let lhs = weight(w, &(Rat::one() - &s));
    let rhs: Rat = terms.iter().map(|(m, b)| m * weight(w, &(Rat::one() - b))).sum();
    prop_assert!(lhs >= rhs, "{} < {}", lhs, rhs);
    Ok(())
}

pub fn summed_weight_direct(w: &WeightFunction, n: i64, d: i64) -> Result<(), TestCaseError> {
    let b = rat(n, d);
    prop_assume!(b < Rat::one());
    prop_assert_eq!(summed_weight(w, &b).unwrap(), summed_reference(w, &b));
    Ok(())
}

pub fn summed_weight_monotone(w: &WeightFunction, n1: i64, n2: i64, d: i64) -> Result<(), TestCaseError> {
    let (lo, hi) = if n1 <= n2 { (n1, n2) } else { (n2, n1) };
    let (b1, b2) = (rat(lo, d), rat(hi, d));
    prop_assume!(b2 < Rat::one());
    prop_assert!(summed_weight(w, &b1).unwrap() <= summed_weight(w, &b2).unwrap());
    Ok(())
}

/// The engine's log discrepancy is the supremum over members: pure monomial
/// members attain it and mixed members of at most three monomials never exceed it.
pub fn log_discrepancy_members(seed: u64, surface: usize) -> Result<(), TestCaseError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = load_surface(SURFACES[surface]);
    let c = rat(rng.gen_range(0..=6), rng.gen_range(1..=6));
    let h = random_system(&mut rng, &x).with_scale(c.clone());
    let oracle = SurfaceOracle::new(&x, &h);
    let w = loop {
        let w = [rng.gen_range(-6i64..=6), rng.gen_range(-6i64..=6)];
        if num_integer::gcd(w[0], w[1]) == 1 {
            break w;
        }
    };
    let a = log_discrepancy(&x, &h, &ToricValuation::new(&x, &w).unwrap()).unwrap();
    let psi = oracle.psi(w);
    let phi = oracle.phi(w);
    let pts = oracle.points().to_vec();
    let member = |lambda: &[(Rat, [i64; 2])]| -> Rat {
        let order: Rat = lambda.iter().map(|(l, m)| l * int(m[0] * w[0] + m[1] * w[1])).sum();
        &psi - &c * (&phi + order)
    };
    let best = pts.iter().map(|m| member(&[(Rat::one(), *m)])).max().unwrap();
    prop_assert_eq!(&a, &best);
    for _ in 0..8 {
        let k = rng.gen_range(1..=pts.len().min(3));
        let raw: Vec<i64> = (0..k).map(|_| rng.gen_range(1..=5)).collect();
        let total: i64 = raw.iter().sum();
        let lambda: Vec<(Rat, [i64; 2])> = raw
            .iter()
            .map(|&r| (rat(r, total), pts[rng.gen_range(0..pts.len())]))
            .collect();
        prop_assert!(member(&lambda) <= a);
    }
    Ok(())
}

pub fn superadditive_terms() -> impl Strategy<Value = Vec<(i64, i64, i64)>> {
    prop::collection::vec((0i64..=3, 1i64..=11, 2i64..=12), 1..=4)
}
