//! Fans with canonically ordered rays, and the surgeries the MMP needs.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::cone::{self, h_cone_rays, is_primitive, pulling_triangulation, ConeFacets, LatticeVector};
use crate::error::{Error, Result};
use crate::linalg::{self, IntMatrix};
use crate::rat::{rat_from_i128, Rat};

/// A rational polyhedral fan. Rays are sorted lexicographically and every
/// maximal cone is a sorted list of ray indices, so equality is structural.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "FanFile", into = "FanFile")]
pub struct Fan {
    lattice_dim: usize,
    rays: Vec<LatticeVector>,
    max_cones: Vec<Vec<usize>>,
}

/// On-disk fan document.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FanFile {
    pub lattice_dim: usize,
    pub rays: Vec<Vec<i64>>,
    pub max_cones: Vec<Vec<usize>>,
}

impl TryFrom<FanFile> for Fan {
    type Error = Error;
    fn try_from(f: FanFile) -> Result<Fan> {
        Fan::new(f.lattice_dim, f.rays, f.max_cones)
    }
}

impl From<Fan> for FanFile {
    fn from(f: Fan) -> FanFile {
        FanFile {
            lattice_dim: f.lattice_dim,
            rays: f.rays,
            max_cones: f.max_cones,
        }
    }
}

/// A codimension-one cone shared by two maximal cones of a simplicial fan.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Wall {
    pub rays: Vec<usize>,
    pub cones: [usize; 2],
    /// The ray of each adjacent maximal cone that is not on the wall.
    pub outer: [usize; 2],
}

impl Fan {
    /// Validates and canonicalizes a fan. Checks dimensions, primitivity,
    /// distinct rays, index ranges and that each cone is strongly convex with
    /// every listed ray extreme. The pairwise face condition is checked by
    /// [`Fan::check_fan_property`].
    pub fn new(lattice_dim: usize, rays: Vec<Vec<i64>>, max_cones: Vec<Vec<usize>>) -> Result<Fan> {
        for r in &rays {
            if r.len() != lattice_dim {
                return Err(Error::InvalidInput(format!("ray {r:?} is not in dimension {lattice_dim}")));
            }
            if !is_primitive(r) {
                return Err(Error::InvalidInput(format!("ray {r:?} is not primitive")));
            }
        }
        let distinct: BTreeSet<&Vec<i64>> = rays.iter().collect();
        if distinct.len() != rays.len() {
            return Err(Error::InvalidInput("repeated ray".into()));
        }
        if max_cones.is_empty() {
            return Err(Error::InvalidInput("fan has no cones".into()));
        }
        let mut used = vec![false; rays.len()];
        for c in &max_cones {
            let set: BTreeSet<usize> = c.iter().copied().collect();
            if set.len() != c.len() {
                return Err(Error::InvalidInput(format!("cone {c:?} repeats a ray")));
            }
            for &i in c {
                if i >= rays.len() {
                    return Err(Error::InvalidInput(format!("ray index {i} out of range")));
                }
                used[i] = true;
            }
            let gens: Vec<Vec<i64>> = c.iter().map(|&i| rays[i].clone()).collect();
            let f = ConeFacets::compute(&gens, lattice_dim);
            if !f.is_pointed() {
                return Err(Error::InvalidInput(format!("cone {c:?} contains a line")));
            }
            if f.extreme_generators(&gens).len() != gens.len() {
                return Err(Error::InvalidInput(format!("cone {c:?} lists a non-extreme ray")));
            }
        }
        if let Some(i) = used.iter().position(|u| !u) {
            return Err(Error::InvalidInput(format!("ray {i} lies in no cone")));
        }
        let fan = Fan::canonical(lattice_dim, rays, max_cones);
        let all: BTreeSet<&Vec<usize>> = fan.max_cones.iter().collect();
        for a in &fan.max_cones {
            if all.iter().any(|b| b.len() > a.len() && a.iter().all(|i| b.contains(i))) {
                return Err(Error::InvalidInput(format!("cone {a:?} is not maximal")));
            }
        }
        Ok(fan)
    }

    /// The fan of a point: lattice dimension 0 with one empty cone.
    pub fn point() -> Fan {
        Fan {
            lattice_dim: 0,
            rays: Vec::new(),
            max_cones: vec![Vec::new()],
        }
    }

    pub(crate) fn canonical(lattice_dim: usize, rays: Vec<Vec<i64>>, max_cones: Vec<Vec<usize>>) -> Fan {
        let mut order: Vec<usize> = (0..rays.len()).collect();
        order.sort_by(|&a, &b| rays[a].cmp(&rays[b]));
        let mut new_index = vec![0; rays.len()];
        for (new, &old) in order.iter().enumerate() {
            new_index[old] = new;
        }
        let sorted_rays: Vec<Vec<i64>> = order.iter().map(|&i| rays[i].clone()).collect();
        let mut cones: Vec<Vec<usize>> = max_cones
            .into_iter()
            .map(|c| {
                let mut c: Vec<usize> = c.into_iter().map(|i| new_index[i]).collect();
                c.sort_unstable();
                c
            })
            .collect();
        cones.sort();
        cones.dedup();
        Fan {
            lattice_dim,
            rays: sorted_rays,
            max_cones: cones,
        }
    }

    /// Fan on the given rays whose maximal cones are the pulling triangulations
    /// of `cells` (each a list of ray vectors spanning a full cone).
    pub(crate) fn from_cells(lattice_dim: usize, cells: &[Vec<LatticeVector>]) -> Fan {
        let all: BTreeSet<LatticeVector> = cells.iter().flatten().cloned().collect();
        let rays: Vec<LatticeVector> = all.into_iter().collect();
        let index: BTreeMap<&LatticeVector, usize> = rays.iter().enumerate().map(|(i, r)| (r, i)).collect();
        let mut cones = Vec::new();
        for cell in cells {
            let idx: Vec<usize> = cell.iter().map(|r| index[r]).collect();
            cones.extend(pulling_triangulation(&rays, &idx));
        }
        Fan::canonical(lattice_dim, rays, cones)
    }

    pub fn lattice_dim(&self) -> usize {
        self.lattice_dim
    }

    pub fn rays(&self) -> &[LatticeVector] {
        &self.rays
    }

    pub fn max_cones(&self) -> &[Vec<usize>] {
        &self.max_cones
    }

    pub fn ray_index(&self, v: &[i64]) -> Option<usize> {
        self.rays.binary_search_by(|r| r.as_slice().cmp(v)).ok()
    }

    pub fn cone_rays(&self, cone: &[usize]) -> Vec<LatticeVector> {
        cone.iter().map(|&i| self.rays[i].clone()).collect()
    }

    pub fn is_simplicial(&self) -> bool {
        self.max_cones
            .iter()
            .all(|c| linalg::rank(&self.cone_rays(c)) == c.len())
    }

    pub fn is_full_dimensional(&self) -> bool {
        self.max_cones
            .iter()
            .all(|c| linalg::rank(&self.cone_rays(c)) == self.lattice_dim)
    }

    /// Every maximal cone is generated by part of a lattice basis.
    pub fn is_smooth(&self) -> bool {
        self.max_cones
            .iter()
            .all(|c| c.len() == linalg::rank(&self.cone_rays(c)) && cone_multiplicity(&self.cone_rays(c)) == 1)
    }

    /// Complete iff all maximal cones are full-dimensional and every facet of
    /// a maximal cone is shared by exactly two maximal cones.
    pub fn is_complete(&self) -> bool {
        if self.lattice_dim == 0 {
            return self.max_cones == vec![Vec::<usize>::new()];
        }
        if !self.is_full_dimensional() {
            return false;
        }
        let mut count: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
        for c in &self.max_cones {
            let gens = self.cone_rays(c);
            let f = ConeFacets::compute(&gens, self.lattice_dim);
            for m in &f.members {
                let facet: Vec<usize> = m.iter().map(|&j| c[j]).collect();
                *count.entry(facet).or_default() += 1;
            }
        }
        count.values().all(|&k| k == 2)
    }

    /// Checks that every two maximal cones meet in a common face.
    pub fn check_fan_property(&self) -> Result<()> {
        let n = self.lattice_dim;
        let facets: Vec<ConeFacets> = self
            .max_cones
            .iter()
            .map(|c| ConeFacets::compute(&self.cone_rays(c), n))
            .collect();
        for a in 0..self.max_cones.len() {
            for b in a + 1..self.max_cones.len() {
                let (ca, cb) = (&self.max_cones[a], &self.max_cones[b]);
                let common: Vec<usize> = ca.iter().filter(|i| cb.contains(i)).copied().collect();
                let mut ineqs = facets[a].inequalities();
                ineqs.extend(facets[b].inequalities());
                let inter = h_cone_rays(&ineqs, n);
                let ok_rays = inter.iter().all(|r| common.iter().any(|&i| &self.rays[i] == r));
                let pos_a: Vec<usize> = common.iter().map(|i| ca.iter().position(|x| x == i).unwrap()).collect();
                let pos_b: Vec<usize> = common.iter().map(|i| cb.iter().position(|x| x == i).unwrap()).collect();
                if !ok_rays || !facets[a].is_face(&pos_a) || !facets[b].is_face(&pos_b) {
                    return Err(Error::InvalidInput(format!(
                        "cones {ca:?} and {cb:?} do not meet in a common face"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Index of the first maximal cone containing `w`.
    pub fn locate(&self, w: &[i64]) -> Option<usize> {
        self.max_cones.iter().position(|c| self.cone_contains(c, w))
    }

    pub fn cone_contains(&self, cone: &[usize], w: &[i64]) -> bool {
        let gens = self.cone_rays(cone);
        if gens.len() == self.lattice_dim && linalg::rank(&gens) == self.lattice_dim {
            let (num, _) = cone::simplicial_coordinates(&gens, w);
            num.iter().all(|&x| x >= 0)
        } else {
            ConeFacets::compute(&gens, self.lattice_dim).contains(w)
        }
    }

    /// Ray indices of the smallest cone containing `w` (simplicial fans).
    pub fn minimal_cone(&self, w: &[i64]) -> Option<Vec<usize>> {
        let c = self.locate(w)?;
        let cone = &self.max_cones[c];
        let gens = self.cone_rays(cone);
        let (num, _) = cone::simplicial_coordinates(&gens, w);
        Some(
            cone.iter()
                .zip(&num)
                .filter(|(_, &x)| x > 0)
                .map(|(&i, _)| i)
                .collect(),
        )
    }

    /// Coordinates of `w` in the generators of a simplicial full-dimensional
    /// maximal cone.
    pub fn cone_coordinates(&self, cone: usize, w: &[i64]) -> Vec<Rat> {
        let gens = self.cone_rays(&self.max_cones[cone]);
        let (num, d) = cone::simplicial_coordinates(&gens, w);
        num.iter().map(|&x| rat_from_i128(x) / rat_from_i128(d)).collect()
    }

    /// Evaluates the piecewise-linear function with value `values[i]` on ray `i`.
    pub fn pl_eval(&self, values: &[Rat], w: &[i64]) -> Option<Rat> {
        let c = self.locate(w)?;
        let lam = self.cone_coordinates(c, w);
        Some(
            self.max_cones[c]
                .iter()
                .zip(&lam)
                .map(|(&i, l)| l * &values[i])
                .sum(),
        )
    }

    /// Walls of a complete simplicial fan, sorted by their ray sets.
    pub fn walls(&self) -> Vec<Wall> {
        let mut by_facet: BTreeMap<Vec<usize>, Vec<(usize, usize)>> = BTreeMap::new();
        for (ci, c) in self.max_cones.iter().enumerate() {
            for (k, &outer) in c.iter().enumerate() {
                let mut facet = c.clone();
                facet.remove(k);
                by_facet.entry(facet).or_default().push((ci, outer));
            }
        }
        by_facet
            .into_iter()
            .filter(|(_, v)| v.len() == 2)
            .map(|(rays, v)| Wall {
                rays,
                cones: [v[0].0, v[1].0],
                outer: [v[0].1, v[1].1],
            })
            .collect()
    }

    /// All cones of a simplicial fan (every subset of a maximal cone), sorted.
    pub fn all_cones(&self) -> BTreeSet<Vec<usize>> {
        let mut out = BTreeSet::new();
        for c in &self.max_cones {
            for k in 0..=c.len() {
                for s in cone::combinations(c.len(), k) {
                    out.insert(s.iter().map(|&j| c[j]).collect());
                }
            }
        }
        out
    }

    /// Star subdivision at the primitive vector `w`.
    pub fn star_subdivide(&self, w: &[i64]) -> Result<Fan> {
        if w.len() != self.lattice_dim || !is_primitive(w) {
            return Err(Error::InvalidInput(format!("{w:?} is not a primitive lattice vector")));
        }
        if !self.is_simplicial() {
            return Err(Error::UnsupportedInput("star subdivision of a non-simplicial fan".into()));
        }
        if self.ray_index(w).is_some() {
            return Err(Error::NoOp(format!("{w:?} is already a ray")));
        }
        let tau = self
            .minimal_cone(w)
            .ok_or_else(|| Error::NotSubdividable(format!("{w:?}")))?;
        let new = self.rays.len();
        let mut rays = self.rays.clone();
        rays.push(w.to_vec());
        let mut cones = Vec::new();
        for c in &self.max_cones {
            if tau.iter().all(|i| c.contains(i)) {
                for v in &tau {
                    let mut nc: Vec<usize> = c.iter().filter(|&i| i != v).copied().collect();
                    nc.push(new);
                    cones.push(nc);
                }
            } else {
                cones.push(c.clone());
            }
        }
        Ok(Fan::canonical(self.lattice_dim, rays, cones))
    }

    /// Image of the fan under a unimodular matrix.
    pub fn transform(&self, matrix: &IntMatrix) -> Result<Fan> {
        if linalg::det(matrix).abs() != 1 {
            return Err(Error::InvalidInput("matrix is not unimodular".into()));
        }
        let rays = self.rays.iter().map(|r| linalg::mat_vec(matrix, r)).collect();
        Ok(Fan::canonical(self.lattice_dim, rays, self.max_cones.clone()))
    }

    /// Simplicial common refinement without smoothing.
    pub fn intersect(&self, other: &Fan) -> Result<Fan> {
        if self.lattice_dim != other.lattice_dim {
            return Err(Error::InvalidInput("lattice dimension mismatch".into()));
        }
        let n = self.lattice_dim;
        let fa: Vec<IntMatrix> = self.max_cones.iter().map(|c| ConeFacets::compute(&self.cone_rays(c), n).inequalities()).collect();
        let fb: Vec<IntMatrix> = other.max_cones.iter().map(|c| ConeFacets::compute(&other.cone_rays(c), n).inequalities()).collect();
        let mut cells = Vec::new();
        for a in &fa {
            for b in &fb {
                let mut ineqs = a.clone();
                ineqs.extend(b.iter().cloned());
                if let Some(cell) = full_cell(&ineqs, n) {
                    cells.push(cell);
                }
            }
        }
        Ok(Fan::from_cells(n, &cells))
    }

    /// Smooth common refinement of two complete fans.
    pub fn common_refinement(&self, other: &Fan) -> Result<Fan> {
        self.intersect(other)?.smooth_subdivision()
    }

    /// Refines every maximal cone by the regions `{w : r·w ≥ 0 for r in region}`;
    /// regions should cover the space.
    pub fn refine_by_regions(&self, regions: &[IntMatrix]) -> Fan {
        let n = self.lattice_dim;
        let mut cells = Vec::new();
        for c in &self.max_cones {
            let base = ConeFacets::compute(&self.cone_rays(c), n).inequalities();
            for r in regions {
                let mut ineqs = base.clone();
                ineqs.extend(r.iter().cloned());
                if let Some(cell) = full_cell(&ineqs, n) {
                    cells.push(cell);
                }
            }
        }
        Fan::from_cells(n, &cells)
    }

    /// Deterministic resolution: repeatedly star-subdivide the first singular
    /// maximal cone at its parallelepiped point of least depth (lexicographically
    /// smallest among ties).
    pub fn smooth_subdivision(&self) -> Result<Fan> {
        let mut fan = if self.is_simplicial() {
            self.clone()
        } else {
            let cells: Vec<Vec<LatticeVector>> = self.max_cones.iter().map(|c| self.cone_rays(c)).collect();
            Fan::from_cells(self.lattice_dim, &cells)
        };
        loop {
            let singular = fan.max_cones.iter().find(|c| {
                let g = fan.cone_rays(c);
                cone_multiplicity(&g) > 1
            });
            let Some(c) = singular else {
                return Ok(fan);
            };
            let gens = fan.cone_rays(c);
            let w = if gens.len() == fan.lattice_dim {
                deepest_free_point(&gens)
            } else {
                // lower-dimensional maximal cone: work inside its saturated span
                lower_dim_point(&gens, fan.lattice_dim)
            };
            fan = fan.star_subdivide(&w)?;
        }
    }
}

fn full_cell(ineqs: &[Vec<i64>], n: usize) -> Option<Vec<LatticeVector>> {
    let rays = h_cone_rays(ineqs, n);
    (linalg::rank(&rays) == n).then_some(rays)
}

fn deepest_free_point(gens: &[Vec<i64>]) -> LatticeVector {
    let pts = cone::parallelepiped_points(gens);
    pts.into_iter()
        .min_by(|a, b| a.1.cmp(&b.1).then_with(|| a.0.cmp(&b.0)))
        .map(|p| p.0)
        .expect("singular cone has a parallelepiped point")
}

fn lower_dim_point(gens: &[Vec<i64>], n: usize) -> LatticeVector {
    // Coordinates in a basis of the saturated span, then map back.
    let eq = linalg::integer_kernel(gens, n);
    let span = linalg::integer_kernel(&eq, n);
    let k = span.len();
    let span_t = linalg::transpose(&span, n);
    let local: Vec<Vec<i64>> = gens
        .iter()
        .map(|g| {
            let x = linalg::solve(&linalg::to_rat_rows(&span_t), &linalg::rat_vec(g), k).expect("generator in span");
            x.iter().map(|v| crate::rat::to_i64(v).expect("saturated basis")).collect()
        })
        .collect();
    let p = deepest_free_point(&local);
    (0..n)
        .map(|j| (0..k).map(|i| p[i] * span[i][j]).sum())
        .collect()
}

/// Index of the sublattice spanned by `gens` in its saturation (gcd of maximal minors).
pub fn cone_multiplicity(gens: &[Vec<i64>]) -> i64 {
    let k = gens.len();
    if k == 0 {
        return 1;
    }
    let n = gens[0].len();
    let mut g: i128 = 0;
    for cols in cone::combinations(n, k) {
        let m: IntMatrix = gens.iter().map(|r| cols.iter().map(|&j| r[j]).collect()).collect();
        g = num_integer::Integer::gcd(&g, &linalg::det(&m));
    }
    linalg::narrow(g)
}
