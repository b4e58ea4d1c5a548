//! Sarkisov degrees, weight functions, difficulties and the augmented degree.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::cone::{self, points_in_weighted_simplex};
use crate::error::{Error, Result};
use crate::fan::Fan;
use crate::linalg;
use crate::rat::{format_rat, int, parse_rat, ExtCount, ExtRat, Rat};
use crate::thresholds::{crepant_divisor_count, Resolution};
use crate::toric::{
    fixed_mobile_decomposition, pseff_threshold_mu, InvariantDivisor, MonomialLinearSystem,
    ToricMoriFibreSpace, ToricVariety,
};
use crate::untwist::ToricBirationalMap;

/// The triple `(µ, c, e)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SarkisovDegree {
    #[serde(with = "crate::rat::serde_rat")]
    pub mu: Rat,
    pub c: ExtRat,
    pub e: ExtCount,
}

impl fmt::Display for SarkisovDegree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.mu, self.c, self.e)
    }
}

/// `Greater` when `d1 > d2`: larger µ, then smaller c, then larger e.
pub fn degree_less(d1: &SarkisovDegree, d2: &SarkisovDegree) -> Ordering {
    d1.mu
        .cmp(&d2.mu)
        .then_with(|| d2.c.cmp(&d1.c))
        .then_with(|| d1.e.cmp(&d2.e))
}

impl PartialOrd for SarkisovDegree {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for SarkisovDegree {
    fn cmp(&self, other: &Self) -> Ordering {
        degree_less(self, other)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Closure {
    Minus,
    Plus,
}

/// `w_α^−(a) = 1 − a` for `a ≤ α`, `w_α^+(a) = 1 − a` for `a < α`, else 0.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct WeightFunction {
    #[serde(with = "crate::rat::serde_rat")]
    pub alpha: Rat,
    pub closure: Closure,
}

impl WeightFunction {
    pub fn new(alpha: Rat, closure: Closure) -> Result<WeightFunction> {
        if !alpha.is_positive() || alpha >= Rat::one() {
            return Err(Error::InvalidInput(format!("alpha {} is not in (0,1)", format_rat(&alpha))));
        }
        Ok(WeightFunction { alpha, closure })
    }

    pub fn minus(alpha: Rat) -> Result<WeightFunction> {
        WeightFunction::new(alpha, Closure::Minus)
    }

    pub fn plus(alpha: Rat) -> Result<WeightFunction> {
        WeightFunction::new(alpha, Closure::Plus)
    }
}

/// Parses `alpha:p/q,closure:minus|plus`.
impl FromStr for WeightFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<WeightFunction> {
        let mut alpha = None;
        let mut closure = None;
        for part in s.split(',') {
            match part.split_once(':') {
                Some(("alpha", v)) => alpha = Some(parse_rat(v.trim())?),
                Some(("closure", "minus")) => closure = Some(Closure::Minus),
                Some(("closure", "plus")) => closure = Some(Closure::Plus),
                _ => return Err(Error::InvalidInput(format!("bad weight parameter {part:?}"))),
            }
        }
        match (alpha, closure) {
            (Some(a), Some(c)) => WeightFunction::new(a, c),
            _ => Err(Error::InvalidInput("weight needs alpha:p/q,closure:minus|plus".into())),
        }
    }
}

impl fmt::Display for WeightFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = match self.closure {
            Closure::Minus => "minus",
            Closure::Plus => "plus",
        };
        write!(f, "alpha:{},closure:{c}", self.alpha)
    }
}

pub fn weight(w: &WeightFunction, a: &Rat) -> Rat {
    let inside = match w.closure {
        Closure::Minus => a <= &w.alpha,
        Closure::Plus => a < &w.alpha,
    };
    if inside {
        Rat::one() - a
    } else {
        Rat::zero()
    }
}

/// `W(b) = Σ_{k ≥ 1} w(k(1 − b))`; only `k` with `k(1 − b) < 1` contribute.
pub fn summed_weight(w: &WeightFunction, b: &Rat) -> Result<Rat> {
    let step = Rat::one() - b;
    if !step.is_positive() {
        return Err(Error::InvalidInput(format!("summed weight needs b < 1, got {}", format_rat(b))));
    }
    let mut total = Rat::zero();
    let mut k = 1i64;
    loop {
        let a = &step * int(k);
        if a >= Rat::one() {
            return Ok(total);
        }
        total += weight(w, &a);
        k += 1;
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProfileComponent {
    #[serde(with = "crate::rat::serde_rat")]
    pub coefficient: Rat,
    pub picard_rank: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProfileValuation {
    #[serde(with = "crate::rat::serde_rat")]
    pub log_discrepancy: Rat,
    pub center_codim: usize,
    pub center: usize,
}

/// A branch of the normalized boundary through a codimension-2 centre.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProfileBranch {
    pub center: usize,
    #[serde(with = "crate::rat::serde_rat")]
    pub coefficient: Rat,
}

/// Operands of the difficulty of a terminal pair.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiscrepancyProfile {
    pub components: Vec<ProfileComponent>,
    pub valuations: Vec<ProfileValuation>,
    pub branches: Vec<ProfileBranch>,
}

/// Difficulty of a terminal pair. Components enter when their discrepancy
/// `−b_i` is nonpositive; codimension-2 centres enter when some valuation over
/// them has positive weight.
pub fn difficulty_terminal(profile: &DiscrepancyProfile, w: &WeightFunction) -> Result<Rat> {
    let mut total = Rat::zero();
    for c in &profile.components {
        if !c.coefficient.is_negative() {
            total += summed_weight(w, &c.coefficient)? * int(c.picard_rank as i64);
        }
    }
    let mut centers: BTreeMap<usize, (bool, Rat)> = BTreeMap::new();
    for v in &profile.valuations {
        if v.log_discrepancy >= Rat::one() {
            return Err(Error::InvalidProfile(format!(
                "valuation with log discrepancy {} ≥ 1",
                format_rat(&v.log_discrepancy)
            )));
        }
        let wv = weight(w, &v.log_discrepancy);
        if v.center_codim == 2 {
            let e = centers.entry(v.center).or_insert((false, Rat::zero()));
            e.0 |= wv.is_positive();
            e.1 += wv;
        } else {
            total += wv;
        }
    }
    for (center, (active, sum)) in centers {
        if !active {
            continue;
        }
        total += sum;
        for b in profile.branches.iter().filter(|b| b.center == center) {
            total += summed_weight(w, &b.coefficient)?;
        }
    }
    Ok(total)
}

/// Log discrepancy `ψ(w) − φ_D(w)` of a toric valuation for an invariant pair.
fn pair_log_discrepancy(x: &ToricVariety, d: &InvariantDivisor, w: &[i64]) -> Rat {
    x.psi(w).unwrap() - x.fan().pl_eval(&d.coefficients, w).unwrap()
}

/// Exceptional primitive vectors with log discrepancy at most 1 for `(X, D)`.
fn klt_extractions(x: &ToricVariety, d: &InvariantDivisor) -> Result<Vec<Vec<i64>>> {
    let fan = x.fan();
    let a: Vec<Rat> = d.coefficients.iter().map(|c| Rat::one() - c).collect();
    if a.iter().any(|ai| !ai.is_positive()) {
        return Err(Error::InvalidInput("pair is not klt: a boundary coefficient is at least 1".into()));
    }
    let mut out = BTreeSet::new();
    for c in fan.max_cones() {
        let gens = fan.cone_rays(c);
        let weights: Vec<Rat> = c.iter().map(|&i| a[i].clone()).collect();
        for p in points_in_weighted_simplex(&gens, &weights, &Rat::one(), false)? {
            if !linalg::is_zero_vec(&p) && cone::is_primitive(&p) && fan.ray_index(&p).is_none() {
                out.insert(p);
            }
        }
    }
    Ok(out.into_iter().collect())
}

/// Terminal model of a klt invariant pair: star subdivisions at every
/// exceptional toric valuation with `a ≤ 1`, in the given order.
pub(crate) fn terminal_model(
    x: &ToricVariety,
    d: &InvariantDivisor,
    order: impl FnOnce(&mut Vec<Vec<i64>>),
) -> Result<(Fan, Vec<Rat>)> {
    let mut pts = klt_extractions(x, d)?;
    order(&mut pts);
    let mut fan = x.fan().clone();
    for p in &pts {
        fan = fan.star_subdivide(p)?;
    }
    let b = fan.rays().iter().map(|v| Rat::one() - pair_log_discrepancy(x, d, v)).collect();
    Ok((fan, b))
}

/// Picard rank of the invariant divisor of ray `v` of a complete simplicial fan.
fn divisor_picard_rank(fan: &Fan, v: usize) -> u64 {
    let adjacent: BTreeSet<usize> = fan
        .max_cones()
        .iter()
        .filter(|c| c.contains(&v))
        .flat_map(|c| c.iter().copied())
        .filter(|&i| i != v)
        .collect();
    (adjacent.len() + 1).saturating_sub(fan.lattice_dim()) as u64
}

/// Profile of the terminal model of a klt invariant pair. Toric valuations
/// over the terminal model all have `a > 1`, so only components remain.
/// Subdivisions run in increasing log discrepancy, then lexicographically.
pub fn klt_profile(x: &ToricVariety, d: &InvariantDivisor) -> Result<DiscrepancyProfile> {
    klt_profile_ordered(x, d, |pts| pts.sort_by_cached_key(|p| (pair_log_discrepancy(x, d, p), p.clone())))
}

pub(crate) fn klt_profile_ordered(
    x: &ToricVariety,
    d: &InvariantDivisor,
    order: impl FnOnce(&mut Vec<Vec<i64>>),
) -> Result<DiscrepancyProfile> {
    if !x.is_complete() || !x.is_q_factorial() {
        return Err(Error::InvalidInput("difficulty needs a complete simplicial fan".into()));
    }
    if d.coefficients.len() != x.ray_count() {
        return Err(Error::InvalidInput("boundary length differs from the ray count".into()));
    }
    let (fan, b) = terminal_model(x, d, order)?;
    let components = (0..fan.rays().len())
        .filter(|&i| !b[i].is_zero())
        .map(|i| ProfileComponent {
            coefficient: b[i].clone(),
            picard_rank: divisor_picard_rank(&fan, i),
        })
        .collect();
    Ok(DiscrepancyProfile {
        components,
        ..Default::default()
    })
}

pub fn difficulty_klt(x: &ToricVariety, d: &InvariantDivisor, w: &WeightFunction) -> Result<Rat> {
    difficulty_terminal(&klt_profile(x, d)?, w)
}

/// Discriminant of `(X, tH)` over the base: the coefficient at a base ray `u`
/// is `1 − min_v a_v / m_v` over the rays `v` of `X` with `P(v) = m_v u`.
pub fn base_discriminant(xs: &ToricMoriFibreSpace, h: &MonomialLinearSystem, t: &Rat) -> Result<InvariantDivisor> {
    let x = &xs.total;
    let (_, fixed) = fixed_mobile_decomposition(x, h);
    let base = xs.base.fan();
    let mut coeffs = Vec::with_capacity(base.rays().len());
    for u in base.rays() {
        let mut best: Option<Rat> = None;
        for (i, v) in x.fan().rays().iter().enumerate() {
            let p = linalg::mat_vec(&xs.projection, v);
            let Some(m) = positive_multiple(&p, u) else { continue };
            let a = Rat::one() - t * &fixed.coefficients[i];
            let r = a / int(m);
            if best.as_ref().map_or(true, |b| &r < b) {
                best = Some(r);
            }
        }
        let lct = best.ok_or_else(|| Error::UnsupportedInput("base divisor without a vertical divisor over it".into()))?;
        coeffs.push(Rat::one() - lct);
    }
    Ok(InvariantDivisor::new(coeffs))
}

fn positive_multiple(p: &[i64], u: &[i64]) -> Option<i64> {
    let j = u.iter().position(|&x| x != 0)?;
    if p[j] == 0 || p[j].signum() != u[j].signum() || p[j] % u[j] != 0 {
        return None;
    }
    let m = p[j] / u[j];
    (p.iter().zip(u).all(|(a, b)| *a == m * b)).then_some(m)
}

/// `(µ, c, e)` of `X/S` with the system `H` already on `X`.
pub fn degree_of_system(xs: &ToricMoriFibreSpace, h: &MonomialLinearSystem) -> Result<SarkisovDegree> {
    let x = &xs.total;
    let mu = pseff_threshold_mu(xs, h)?;
    let res = Resolution::new(x, h)?;
    let c = res.canonical_threshold(x, None);
    let e = match &c {
        ExtRat::Infinity => ExtCount::Finite(0),
        ExtRat::Finite(c) => crepant_divisor_count(x, &h.with_scale(c.clone()))?.count,
    };
    Ok(SarkisovDegree { mu, c, e })
}

/// Degree of the map with respect to the system `h_target` on its target.
pub fn degree_of(map: &ToricBirationalMap, h_target: &MonomialLinearSystem) -> Result<SarkisovDegree> {
    degree_of_system(&map.source, &map.pull_back(h_target)?)
}

/// The 6-tuple `(µ, b, ρ, d, c′, e′)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AugmentedSarkisovDegree {
    #[serde(with = "crate::rat::serde_rat")]
    pub mu: Rat,
    pub b: u64,
    pub rho: ExtCount,
    pub d: ExtRat,
    pub c_prime: ExtRat,
    pub e_prime: ExtCount,
}

impl fmt::Display for AugmentedSarkisovDegree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({}, {}, {}, {}, {}, {})",
            self.mu,
            self.b,
            self.rho,
            self.d,
            self.c_prime,
            self.e_prime
        )
    }
}

/// Lexicographic order with directions `(<, >, <, <, >, <)`.
pub fn augmented_less(a1: &AugmentedSarkisovDegree, a2: &AugmentedSarkisovDegree) -> Ordering {
    a1.mu
        .cmp(&a2.mu)
        .then_with(|| a2.b.cmp(&a1.b))
        .then_with(|| a1.rho.cmp(&a2.rho))
        .then_with(|| a1.d.cmp(&a2.d))
        .then_with(|| a2.c_prime.cmp(&a1.c_prime))
        .then_with(|| a1.e_prime.cmp(&a2.e_prime))
}

impl PartialOrd for AugmentedSarkisovDegree {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for AugmentedSarkisovDegree {
    fn cmp(&self, other: &Self) -> Ordering {
        augmented_less(self, other)
    }
}

pub fn augmented_from_degree(
    xs: &ToricMoriFibreSpace,
    h: &MonomialLinearSystem,
    deg: &SarkisovDegree,
    w: &WeightFunction,
) -> Result<AugmentedSarkisovDegree> {
    let inv_mu = ExtRat::Finite(Rat::one() / &deg.mu);
    let canonical_at_mu = inv_mu <= deg.c;
    let b = xs.base.dim() as u64;
    let rho = if canonical_at_mu {
        ExtCount::Finite(xs.base.class_rank() as u64)
    } else {
        ExtCount::Infinity
    };
    let d = if b <= 2 || !canonical_at_mu {
        ExtRat::Infinity
    } else {
        let t = Rat::one() / &deg.mu;
        let disc = base_discriminant(xs, h, &t)?;
        ExtRat::Finite(difficulty_klt(&xs.base, &disc, w)?)
    };
    let (c_prime, e_prime) = if canonical_at_mu {
        (ExtRat::Infinity, ExtCount::Finite(0))
    } else {
        (deg.c.clone(), deg.e)
    };
    Ok(AugmentedSarkisovDegree {
        mu: deg.mu.clone(),
        b,
        rho,
        d,
        c_prime,
        e_prime,
    })
}

pub fn augmented_degree_of(
    map: &ToricBirationalMap,
    h_target: &MonomialLinearSystem,
    w: &WeightFunction,
) -> Result<AugmentedSarkisovDegree> {
    let h = map.pull_back(h_target)?;
    let deg = degree_of_system(&map.source, &h)?;
    augmented_from_degree(&map.source, &h, &deg, w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::rat;
    use crate::toric::fixtures::p2;

    fn wm(a: Rat) -> WeightFunction {
        WeightFunction::minus(a).unwrap()
    }

    #[test]
    fn weights() {
        assert_eq!(weight(&wm(rat(1, 2)), &rat(3, 10)), rat(7, 10));
        assert_eq!(weight(&wm(rat(1, 2)), &rat(1, 2)), rat(1, 2));
        assert_eq!(weight(&WeightFunction::plus(rat(1, 2)).unwrap(), &rat(1, 2)), int(0));
        assert_eq!(weight(&wm(rat(1, 2)), &rat(3, 2)), int(0));
        assert_eq!(summed_weight(&wm(rat(1, 2)), &rat(1, 2)).unwrap(), rat(1, 2));
        assert_eq!(summed_weight(&wm(rat(1, 2)), &rat(-1, 2)).unwrap(), int(0));
        assert_eq!(summed_weight(&wm(rat(9, 10)), &rat(2, 3)).unwrap(), int(1));
        assert!(summed_weight(&wm(rat(1, 2)), &int(1)).is_err());
        let w: WeightFunction = "alpha:1/2,closure:plus".parse().unwrap();
        assert_eq!(w.to_string(), "alpha:1/2,closure:plus");
        assert!("alpha:3/2,closure:plus".parse::<WeightFunction>().is_err());
    }

    #[test]
    fn degree_order() {
        let d = |mu: Rat, c: Rat, e: u64| SarkisovDegree {
            mu,
            c: ExtRat::Finite(c),
            e: ExtCount::Finite(e),
        };
        assert_eq!(degree_less(&d(int(2), rat(1, 3), 3), &d(int(2), rat(1, 2), 3)), Ordering::Greater);
        assert_eq!(degree_less(&d(int(2), rat(1, 3), 3), &d(int(1), rat(1, 3), 3)), Ordering::Greater);
        assert_eq!(degree_less(&d(int(2), rat(1, 3), 3), &d(int(2), rat(1, 3), 3)), Ordering::Equal);
        let inf = SarkisovDegree {
            mu: int(2),
            c: ExtRat::Infinity,
            e: ExtCount::Finite(0),
        };
        assert_eq!(degree_less(&inf, &d(int(2), int(5), 0)), Ordering::Less);
    }

    #[test]
    fn augmented_order() {
        let base = AugmentedSarkisovDegree {
            mu: int(2),
            b: 1,
            rho: ExtCount::Finite(3),
            d: ExtRat::Infinity,
            c_prime: ExtRat::Finite(rat(1, 2)),
            e_prime: ExtCount::Finite(1),
        };
        let mut r4 = base.clone();
        r4.rho = ExtCount::Finite(4);
        assert_eq!(augmented_less(&base, &r4), Ordering::Less);
        let mut c3 = base.clone();
        c3.c_prime = ExtRat::Finite(rat(1, 3));
        assert_eq!(augmented_less(&base, &c3), Ordering::Less);
        assert_eq!(augmented_less(&base, &base.clone()), Ordering::Equal);
    }

    #[test]
    fn terminal_difficulties() {
        let w = wm(rat(1, 2));
        assert_eq!(difficulty_terminal(&DiscrepancyProfile::default(), &w).unwrap(), int(0));
        let synthetic = DiscrepancyProfile {
            components: vec![],
            valuations: vec![ProfileValuation {
                log_discrepancy: rat(1, 2),
                center_codim: 2,
                center: 0,
            }],
            branches: vec![ProfileBranch {
                center: 0,
                coefficient: rat(1, 2),
            }],
        };
        assert_eq!(difficulty_terminal(&synthetic, &w).unwrap(), int(1));
        let bad = DiscrepancyProfile {
            valuations: vec![ProfileValuation {
                log_discrepancy: int(1),
                center_codim: 3,
                center: 0,
            }],
            ..Default::default()
        };
        assert!(matches!(difficulty_terminal(&bad, &w), Err(Error::InvalidProfile(_))));
    }

    #[test]
    fn klt_difficulties() {
        let x = p2();
        let w = wm(rat(1, 2));
        assert_eq!(difficulty_klt(&x, &InvariantDivisor::zero(3), &w).unwrap(), int(0));
        // one boundary line with coefficient 1/2: W(1/2)·ρ(ℙ¹)
        let half = InvariantDivisor::new(vec![rat(1, 2), int(0), int(0)]);
        assert_eq!(difficulty_klt(&x, &half, &w).unwrap(), rat(1, 2));
        // A1 cone surface
        let a1 = ToricVariety::new(
            Fan::new(2, vec![vec![1, 0], vec![1, 2], vec![-1, -1]], vec![vec![0, 1], vec![1, 2], vec![0, 2]]).unwrap(),
        );
        assert_eq!(difficulty_klt(&a1, &InvariantDivisor::zero(3), &w).unwrap(), int(0));
        // (ℙ², 2/3 D1 + 2/3 D2): extractions (1,1) with b = 1/3, (2,1) and (1,2) with b = 0
        let ray = |v: &[i64]| x.fan().ray_index(v).unwrap();
        let mut c = vec![int(0); 3];
        c[ray(&[1, 0])] = rat(2, 3);
        c[ray(&[0, 1])] = rat(2, 3);
        let d = InvariantDivisor::new(c);
        let (fan, _) = terminal_model(&x, &d, |_| {}).unwrap();
        assert_eq!(fan.rays().len(), 6);
        assert_eq!(difficulty_klt(&x, &d, &wm(rat(9, 10))).unwrap(), rat(7, 3));
        assert!(difficulty_klt(&x, &InvariantDivisor::new(vec![int(1), int(0), int(0)]), &w).is_err());
    }

    #[test]
    fn klt_difficulty_ignores_subdivision_order_on_surfaces() {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let f2 = ToricVariety::new(
            Fan::new(
                2,
                vec![vec![1, 0], vec![0, 1], vec![-1, 2], vec![0, -1]],
                vec![vec![0, 1], vec![1, 2], vec![2, 3], vec![0, 3]],
            )
            .unwrap(),
        );
        let pairs = [
            (p2(), vec![rat(3, 4), rat(2, 3), rat(1, 2)]),
            (f2, vec![rat(5, 6), rat(1, 3), rat(3, 4), int(0)]),
        ];
        let w = wm(rat(9, 10));
        for (x, c) in pairs {
            let d = InvariantDivisor::new(c);
            let base = difficulty_klt(&x, &d, &w).unwrap();
            for _ in 0..5 {
                let p = klt_profile_ordered(&x, &d, |p| p.shuffle(&mut rng)).unwrap();
                assert_eq!(difficulty_terminal(&p, &w).unwrap(), base);
            }
        }
    }
}
