//! Canonical and log canonical thresholds, crepant counts and low-discrepancy
//! valuations, all read off a smooth fan on which the system's multiplicity
//! function is linear.

use std::collections::BTreeSet;

use num_traits::{One, Signed, Zero};

use crate::cone::{self, is_primitive, Cone, LatticeVector};
use crate::error::{Error, Result};
use crate::fan::Fan;
use crate::linalg::IntMatrix;
use crate::rat::{ExtCount, ExtRat, Rat};
use crate::toric::{MonomialLinearSystem, ToricValuation, ToricVariety};

/// A smooth refinement `Y` of `X` on which `ψ` and `mult_H` are linear on
/// every cone, with their values on the rays of `Y`.
#[derive(Clone, Debug)]
pub struct Resolution {
    pub fan: Fan,
    pub psi: Vec<Rat>,
    pub mult: Vec<Rat>,
    /// Whether each ray of `Y` is exceptional over `X`.
    pub exceptional: Vec<bool>,
}

impl Resolution {
    pub fn new(x: &ToricVariety, h: &MonomialLinearSystem) -> Result<Resolution> {
        h.check_on(x)?;
        let y = x.fan().refine_by_regions(&point_regions(h.points())).smooth_subdivision()?;
        let psi = y.rays().iter().map(|r| x.psi(r).expect("complete fan")).collect();
        let mult = y.rays().iter().map(|r| h.mult(x, r).expect("complete fan")).collect();
        let exceptional = y.rays().iter().map(|r| x.fan().ray_index(r).is_none()).collect();
        Ok(Resolution {
            fan: y,
            psi,
            mult,
            exceptional,
        })
    }

    /// Rays of `Y` inside `stratum` (all rays if `None`).
    fn rays_in(&self, x: &ToricVariety, stratum: Option<&[usize]>) -> Vec<bool> {
        match stratum {
            None => vec![true; self.fan.rays().len()],
            Some(s) => self
                .fan
                .rays()
                .iter()
                .map(|r| x.fan().cone_contains(s, r))
                .collect(),
        }
    }

    /// `sup{t : (X, tH) canonical}`, optionally restricted to valuations whose
    /// vector lies in the cone `stratum` of `X`.
    pub fn canonical_threshold(&self, x: &ToricVariety, stratum: Option<&[usize]>) -> ExtRat {
        let inside = self.rays_in(x, stratum);
        let mut best = ExtRat::Infinity;
        for i in 0..self.fan.rays().len() {
            if !inside[i] || !self.mult[i].is_positive() {
                continue;
            }
            best = best.min_with(ExtRat::Finite(&self.psi[i] / &self.mult[i]));
            if self.exceptional[i] {
                best = best.min_with(ExtRat::Finite((&self.psi[i] - Rat::one()) / &self.mult[i]));
            }
        }
        for pair in self.two_faces() {
            let [j, k] = pair;
            if !inside[j] || !inside[k] {
                continue;
            }
            let m = &self.mult[j] + &self.mult[k];
            if m.is_positive() {
                best = best.min_with(ExtRat::Finite((&self.psi[j] + &self.psi[k] - Rat::one()) / m));
            }
        }
        best
    }

    pub fn lc_threshold(&self, x: &ToricVariety, stratum: Option<&[usize]>) -> ExtRat {
        let inside = self.rays_in(x, stratum);
        (0..self.fan.rays().len())
            .filter(|&i| inside[i] && self.mult[i].is_positive())
            .map(|i| ExtRat::Finite(&self.psi[i] / &self.mult[i]))
            .min()
            .unwrap_or(ExtRat::Infinity)
    }

    fn two_faces(&self) -> BTreeSet<[usize; 2]> {
        let mut out = BTreeSet::new();
        for c in self.fan.max_cones() {
            for (a, &j) in c.iter().enumerate() {
                for &k in &c[a + 1..] {
                    out.insert([j, k]);
                }
            }
        }
        out
    }

    /// Log discrepancies `ψ − c·mult` on the rays of `Y`.
    pub fn ray_discrepancies(&self, c: &Rat) -> Vec<Rat> {
        self.psi.iter().zip(&self.mult).map(|(p, m)| p - c * m).collect()
    }

    /// Exceptional primitive `w` with `a(w) < bound` (or `= bound` when
    /// `exact`), per cone of `Y`. `Err` with a diagnostic if a cone's region is
    /// unbounded.
    fn enumerate(&self, x: &ToricVariety, c: &Rat, bound: &Rat, exact: bool) -> Result<Vec<(LatticeVector, Rat)>> {
        let a = self.ray_discrepancies(c);
        let mut found: BTreeSet<LatticeVector> = BTreeSet::new();
        let mut out = Vec::new();
        for cone_idx in self.fan.max_cones() {
            let gens = self.fan.cone_rays(cone_idx);
            let weights: Vec<Rat> = cone_idx.iter().map(|&i| a[i].clone()).collect();
            if let Some(k) = cone_idx.iter().position(|&i| !a[i].is_positive()) {
                return Err(Error::InvalidState(format!(
                    "unbounded region: ray {:?} of the resolution has log discrepancy {}",
                    self.fan.rays()[cone_idx[k]],
                    crate::rat::format_rat(&a[cone_idx[k]])
                )));
            }
            for w in cone::points_in_weighted_simplex(&gens, &weights, bound, !exact)? {
                if !is_primitive(&w) || x.fan().ray_index(&w).is_some() || found.contains(&w) {
                    continue;
                }
                let (num, d) = cone::simplicial_coordinates(&gens, &w);
                let val: Rat = num
                    .iter()
                    .zip(&weights)
                    .map(|(&l, wt)| crate::rat::rat_from_i128(l) * wt)
                    .sum::<Rat>()
                    / crate::rat::rat_from_i128(d);
                if exact && &val != bound {
                    continue;
                }
                found.insert(w.clone());
                out.push((w, val));
            }
        }
        out.sort();
        Ok(out)
    }
}

fn require_terminal(x: &ToricVariety) -> Result<()> {
    if !x.is_terminal() {
        return Err(Error::UnsupportedInput("thresholds need a Q-factorial terminal variety".into()));
    }
    Ok(())
}

pub fn canonical_threshold(x: &ToricVariety, h: &MonomialLinearSystem) -> Result<ExtRat> {
    require_terminal(x)?;
    Ok(Resolution::new(x, h)?.canonical_threshold(x, None))
}

pub fn lc_threshold(x: &ToricVariety, h: &MonomialLinearSystem) -> Result<ExtRat> {
    require_terminal(x)?;
    Ok(Resolution::new(x, h)?.lc_threshold(x, None))
}

/// Ray indices of `X` generating `stratum`, if it is a cone of the fan.
pub fn stratum_indices(x: &ToricVariety, stratum: &Cone) -> Result<Vec<usize>> {
    let idx: Vec<usize> = stratum
        .generators()
        .iter()
        .map(|g| x.fan().ray_index(g))
        .collect::<Option<_>>()
        .ok_or_else(|| Error::InvalidInput("stratum generator is not a ray of the fan".into()))?;
    if !x.fan().max_cones().iter().any(|c| idx.iter().all(|i| c.contains(i))) {
        return Err(Error::InvalidInput("stratum is not a cone of the fan".into()));
    }
    let mut idx = idx;
    idx.sort_unstable();
    Ok(idx)
}

/// Canonical threshold at the generic point of the orbit closure of `stratum`:
/// only valuations whose vector lies in the stratum cone count.
pub fn local_canonical_threshold(x: &ToricVariety, h: &MonomialLinearSystem, stratum: &Cone) -> Result<ExtRat> {
    require_terminal(x)?;
    let idx = stratum_indices(x, stratum)?;
    if idx.is_empty() {
        return Ok(ExtRat::Infinity);
    }
    Ok(Resolution::new(x, h)?.canonical_threshold(x, Some(&idx)))
}

/// Crepant exceptional divisors of `(X, cH)` with `c = h.scale()`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CrepantCount {
    pub count: ExtCount,
    pub divisors: Vec<ToricValuation>,
    pub diagnostic: Option<String>,
}

pub fn crepant_divisor_count(x: &ToricVariety, h: &MonomialLinearSystem) -> Result<CrepantCount> {
    require_terminal(x)?;
    let res = Resolution::new(x, h)?;
    crepant_from_resolution(x, &res, h.scale())
}

pub fn crepant_from_resolution(x: &ToricVariety, res: &Resolution, c: &Rat) -> Result<CrepantCount> {
    if res.canonical_threshold(x, None) < ExtRat::Finite(c.clone()) {
        return Err(Error::InvalidState("pair is not canonical at this scale".into()));
    }
    match res.enumerate(x, c, &Rat::one(), true) {
        Ok(found) => {
            let divisors: Vec<ToricValuation> = found
                .iter()
                .map(|(w, _)| ToricValuation::new(x, w))
                .collect::<Result<_>>()?;
            Ok(CrepantCount {
                count: ExtCount::Finite(divisors.len() as u64),
                divisors,
                diagnostic: None,
            })
        }
        Err(Error::InvalidState(msg)) => Ok(CrepantCount {
            count: ExtCount::Infinity,
            divisors: Vec::new(),
            diagnostic: Some(msg),
        }),
        Err(e) => Err(e),
    }
}

/// Exceptional toric valuations with `a(w) < a0` for `(X, cH)`, `c = h.scale()`.
pub fn enumerate_low_discrepancy_valuations(
    x: &ToricVariety,
    h: &MonomialLinearSystem,
    a0: &Rat,
) -> Result<Vec<(ToricValuation, Rat)>> {
    if a0 > &Rat::one() {
        return Err(Error::InvalidInput("bound must be at most 1".into()));
    }
    let res = Resolution::new(x, h)?;
    if a0.is_zero() || a0.is_negative() {
        // nothing below a nonpositive bound is reachable without an unbounded region
        if res.ray_discrepancies(h.scale()).iter().all(|a| a.is_positive()) {
            return Ok(Vec::new());
        }
    }
    res.enumerate(x, h.scale(), a0, false)?
        .into_iter()
        .map(|(w, a)| Ok((ToricValuation::new(x, &w)?, a)))
        .collect()
}

/// Regions `{w : ⟨q − m, w⟩ ≥ 0 ∀q}` on which the vertex `m` attains
/// `min_q ⟨q, w⟩`. Other points only give lower-dimensional regions.
pub(crate) fn point_regions(points: &[LatticeVector]) -> Vec<IntMatrix> {
    let points = cone::convex_hull_vertices(points);
    points
        .iter()
        .map(|m| {
            points
                .iter()
                .filter(|q| *q != m)
                .map(|q| q.iter().zip(m).map(|(a, b)| a - b).collect())
                .collect()
        })
        .collect()
}
