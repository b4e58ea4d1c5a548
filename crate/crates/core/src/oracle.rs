//! Brute-force thresholds by enumerating primitive vectors in a box.
//!
//! These are cross-checks for the exact resolution method, exact only when the
//! height bound covers the minimizing valuation.

use num_traits::{One, Signed};

use crate::cone::{for_each_box_point, is_primitive};
use crate::linalg;
use crate::rat::{ExtRat, Rat};
use crate::toric::{MonomialLinearSystem, ToricVariety};

/// Ten times the largest coordinate among rays and points.
pub fn default_height_bound(x: &ToricVariety, h: &MonomialLinearSystem) -> i64 {
    let max = x
        .fan()
        .rays()
        .iter()
        .chain(h.points())
        .flat_map(|v| v.iter().map(|c| c.abs()))
        .max()
        .unwrap_or(1);
    10 * max.max(1)
}

fn scan(x: &ToricVariety, h: &MonomialLinearSystem, height: i64, mut term: impl FnMut(&[i64], Rat, Rat) -> Option<Rat>) -> ExtRat {
    let n = x.dim();
    let mut best = ExtRat::Infinity;
    for_each_box_point(&vec![-height; n], &vec![height; n], |w| {
        if linalg::is_zero_vec(w) || !is_primitive(w) {
            return;
        }
        let (Some(psi), Some(m)) = (x.psi(w), h.mult(x, w)) else { return };
        if !m.is_positive() {
            return;
        }
        if let Some(t) = term(w, psi, m) {
            best = best.clone().min_with(ExtRat::Finite(t));
        }
    });
    best
}

/// Largest `c` with `(X, cH)` canonical, over valuations of height at most `height`.
pub fn canonical_threshold(x: &ToricVariety, h: &MonomialLinearSystem, height: i64) -> ExtRat {
    scan(x, h, height, |w, psi, m| {
        if x.fan().ray_index(w).is_some() {
            Some(psi / m)
        } else {
            Some((psi - Rat::one()) / m)
        }
    })
}

/// Largest `c` with `(X, cH)` log canonical, over valuations of height at most `height`.
pub fn lc_threshold(x: &ToricVariety, h: &MonomialLinearSystem, height: i64) -> ExtRat {
    scan(x, h, height, |_, psi, m| Some(psi / m))
}
