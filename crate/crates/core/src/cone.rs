//! Rational polyhedral cones: facets, extreme rays, intersections, pulling
//! triangulations and bounded lattice-point enumeration.

use std::collections::BTreeSet;

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::linalg::{self, gcd_slice, IntMatrix};
use crate::rat::{rat_from_i128, Rat};

pub type LatticeVector = Vec<i64>;

pub fn is_primitive(v: &[i64]) -> bool {
    gcd_slice(v) == 1
}

/// `v / gcd(v)`.
pub fn primitive_vector(v: &[i64]) -> Result<LatticeVector> {
    let g = gcd_slice(v);
    if g == 0 {
        return Err(Error::InvalidInput("zero vector has no primitive multiple".into()));
    }
    Ok(v.iter().map(|x| x / g).collect())
}

/// A strongly convex rational cone given by primitive generators.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cone {
    generators: Vec<LatticeVector>,
}

impl Cone {
    pub fn new(dim: usize, mut generators: Vec<LatticeVector>) -> Result<Cone> {
        for g in &generators {
            if g.len() != dim {
                return Err(Error::InvalidInput(format!("generator {g:?} has wrong dimension")));
            }
            if !is_primitive(g) {
                return Err(Error::InvalidInput(format!("generator {g:?} is not primitive")));
            }
        }
        generators.sort();
        let n = generators.len();
        generators.dedup();
        if generators.len() != n {
            return Err(Error::InvalidInput("repeated cone generator".into()));
        }
        let f = ConeFacets::compute(&generators, dim);
        if !f.is_pointed() {
            return Err(Error::InvalidInput("cone contains a line".into()));
        }
        Ok(Cone { generators })
    }

    pub fn generators(&self) -> &[LatticeVector] {
        &self.generators
    }

    pub fn is_simplicial(&self) -> bool {
        linalg::rank(&self.generators) == self.generators.len()
    }
}

/// Facet description of the cone generated by `gens` inside its linear span.
#[derive(Clone, Debug)]
pub struct ConeFacets {
    pub dim: usize,
    pub rank: usize,
    /// Integer functionals `u` with `u·x ≥ 0` on the cone, one per facet.
    pub normals: Vec<Vec<i64>>,
    /// Indices of generators on each facet.
    pub members: Vec<Vec<usize>>,
    /// Basis of the annihilator of the span (`e·x = 0` on the cone).
    pub equations: IntMatrix,
    ngens: usize,
}

impl ConeFacets {
    pub fn compute(gens: &[Vec<i64>], dim: usize) -> ConeFacets {
        let nonzero: Vec<Vec<i64>> = gens.iter().filter(|g| !linalg::is_zero_vec(g)).cloned().collect();
        let equations = if nonzero.is_empty() {
            linalg::identity(dim)
        } else {
            linalg::integer_kernel(&nonzero, dim)
        };
        let mut basis: Vec<Vec<i64>> = Vec::new();
        for g in &nonzero {
            let mut trial = basis.clone();
            trial.push(g.clone());
            if linalg::rank(&trial) == trial.len() {
                basis = trial;
            }
        }
        let k = basis.len();
        let mut normals: Vec<Vec<i64>> = Vec::new();
        let mut members: Vec<Vec<usize>> = Vec::new();
        if k > 0 {
            for subset in combinations(gens.len(), k - 1) {
                let m: IntMatrix = subset
                    .iter()
                    .map(|&i| basis.iter().map(|b| linalg::dot(&gens[i], b)).collect())
                    .collect();
                let Some(c) = linalg::kernel_vector(&m, k) else {
                    continue;
                };
                let mut u = vec![0i64; dim];
                for (cj, b) in c.iter().zip(&basis) {
                    for (ui, bi) in u.iter_mut().zip(b) {
                        *ui += cj * bi;
                    }
                }
                let u = primitive_vector(&u).expect("facet normal vanishes on the span");
                let signs: Vec<i64> = gens.iter().map(|g| linalg::dot(&u, g).signum()).collect();
                let u = if signs.iter().all(|&s| s >= 0) {
                    u
                } else if signs.iter().all(|&s| s <= 0) {
                    u.iter().map(|x| -x).collect()
                } else {
                    continue;
                };
                if normals.contains(&u) {
                    continue;
                }
                members.push((0..gens.len()).filter(|&i| signs[i] == 0).collect());
                normals.push(u);
            }
        }
        ConeFacets {
            dim,
            rank: k,
            normals,
            members,
            equations,
            ngens: gens.len(),
        }
    }

    pub fn is_pointed(&self) -> bool {
        self.rank == 0 || linalg::rank(&self.normals) == self.rank
    }

    pub fn contains(&self, x: &[i64]) -> bool {
        self.equations.iter().all(|e| linalg::dot(e, x) == 0)
            && self.normals.iter().all(|u| linalg::dot(u, x) >= 0)
    }

    pub fn contains_in_relative_interior(&self, x: &[i64]) -> bool {
        self.equations.iter().all(|e| linalg::dot(e, x) == 0)
            && self.normals.iter().all(|u| linalg::dot(u, x) > 0)
    }

    /// Inequalities `a·x ≥ 0` cutting out the cone in the ambient space.
    pub fn inequalities(&self) -> IntMatrix {
        let mut out = self.normals.clone();
        for e in &self.equations {
            out.push(e.clone());
            out.push(e.iter().map(|x| -x).collect());
        }
        out
    }

    /// The smallest face containing the generators in `subset`, as generator indices.
    pub fn face_closure(&self, subset: &[usize]) -> Vec<usize> {
        let mut face: BTreeSet<usize> = (0..self.ngens).collect();
        for m in &self.members {
            if subset.iter().all(|i| m.contains(i)) {
                face = face.intersection(&m.iter().copied().collect()).copied().collect();
            }
        }
        face.into_iter().collect()
    }

    pub fn is_face(&self, subset: &[usize]) -> bool {
        let mut s = subset.to_vec();
        s.sort_unstable();
        self.face_closure(&s) == s
    }

    /// Indices of generators spanning extreme rays.
    pub fn extreme_generators(&self, gens: &[Vec<i64>]) -> Vec<usize> {
        let mut out: Vec<usize> = Vec::new();
        for (i, g) in gens.iter().enumerate() {
            if linalg::is_zero_vec(g) {
                continue;
            }
            let containing: Vec<Vec<i64>> = self
                .members
                .iter()
                .zip(&self.normals)
                .filter(|(m, _)| m.contains(&i))
                .map(|(_, u)| u.clone())
                .collect();
            if linalg::rank(&containing) + 1 != self.rank {
                continue;
            }
            let gp = primitive_vector(g).unwrap();
            if out.iter().any(|&j| primitive_vector(&gens[j]).unwrap() == gp) {
                continue;
            }
            out.push(i);
        }
        out
    }
}

/// Whether `A λ = b` has a solution with `λ ≥ 0`: phase one of the simplex
/// method with Bland's rule, in exact arithmetic.
pub fn nonnegative_solution_exists(a: &[Vec<Rat>], b: &[Rat]) -> bool {
    let m = b.len();
    let nv = a.first().map_or(0, Vec::len);
    let width = nv + m + 1;
    let mut t: Vec<Vec<Rat>> = (0..m)
        .map(|i| {
            let sign = if b[i].is_negative() { -Rat::one() } else { Rat::one() };
            let mut row: Vec<Rat> = a[i].iter().map(|x| x * &sign).collect();
            row.extend((0..m).map(|k| if k == i { Rat::one() } else { Rat::zero() }));
            row.push(&b[i] * &sign);
            row
        })
        .collect();
    let mut z: Vec<Rat> = (0..width)
        .map(|j| if (nv..nv + m).contains(&j) { Rat::zero() } else { -t.iter().map(|r| r[j].clone()).sum::<Rat>() })
        .collect();
    let mut basis: Vec<usize> = (nv..nv + m).collect();
    while let Some(j) = (0..nv + m).find(|&j| z[j].is_negative()) {
        let Some(r) = (0..m)
            .filter(|&i| t[i][j].is_positive())
            .min_by(|&i, &k| {
                (&t[i][width - 1] / &t[i][j])
                    .cmp(&(&t[k][width - 1] / &t[k][j]))
                    .then(basis[i].cmp(&basis[k]))
            })
        else {
            break;
        };
        let pivot = t[r][j].clone();
        for x in t[r].iter_mut() {
            *x /= &pivot;
        }
        let prow = t[r].clone();
        for (i, row) in t.iter_mut().enumerate() {
            if i != r && !row[j].is_zero() {
                let f = row[j].clone();
                for (x, p) in row.iter_mut().zip(&prow) {
                    *x -= &f * p;
                }
            }
        }
        let f = z[j].clone();
        for (x, p) in z.iter_mut().zip(&prow) {
            *x -= &f * p;
        }
        basis[r] = j;
    }
    z[width - 1].is_zero()
}

fn in_hull(p: &[i64], pts: &[&LatticeVector]) -> bool {
    if pts.is_empty() {
        return false;
    }
    let n = p.len();
    let a: Vec<Vec<Rat>> = (0..=n)
        .map(|row| {
            pts.iter()
                .map(|q| if row < n { rat_from_i128(q[row] as i128) } else { Rat::one() })
                .collect()
        })
        .collect();
    let b: Vec<Rat> = (0..=n).map(|row| if row < n { rat_from_i128(p[row] as i128) } else { Rat::one() }).collect();
    nonnegative_solution_exists(&a, &b)
}

/// Vertices of the convex hull of `points`, in input order.
pub fn convex_hull_vertices(points: &[LatticeVector]) -> Vec<LatticeVector> {
    let mut distinct: Vec<LatticeVector> = Vec::new();
    for p in points {
        if !distinct.contains(p) {
            distinct.push(p.clone());
        }
    }
    if distinct.len() <= 1 {
        return distinct;
    }
    let n = distinct[0].len();
    // unique minimizers of a few fixed functionals are vertices
    let mut dirs: Vec<Vec<i64>> = Vec::new();
    for i in 0..n {
        for s in [1, -1] {
            let mut d = vec![0; n];
            d[i] = s;
            dirs.push(d);
        }
    }
    for k in 1..=4 * n as i64 {
        dirs.push((0..n as i64).map(|i| ((k * 7919 + i * 104_729) % 23) - 11).collect());
    }
    let mut candidate = vec![false; distinct.len()];
    for d in &dirs {
        let vals: Vec<i64> = distinct.iter().map(|p| linalg::dot(p, d)).collect();
        let min = *vals.iter().min().unwrap();
        if vals.iter().filter(|&&v| v == min).count() == 1 {
            candidate[vals.iter().position(|&v| v == min).unwrap()] = true;
        }
    }
    // every vertex lies outside the hull of the other candidates, so it gets added
    for i in 0..distinct.len() {
        if candidate[i] {
            continue;
        }
        let cs: Vec<&LatticeVector> = (0..distinct.len()).filter(|&k| candidate[k]).map(|k| &distinct[k]).collect();
        if !in_hull(&distinct[i], &cs) {
            candidate[i] = true;
        }
    }
    let keep: Vec<bool> = (0..distinct.len())
        .map(|i| {
            candidate[i] && {
                let others: Vec<&LatticeVector> =
                    (0..distinct.len()).filter(|&k| k != i && candidate[k]).map(|k| &distinct[k]).collect();
                !in_hull(&distinct[i], &others)
            }
        })
        .collect();
    distinct.into_iter().zip(keep).filter(|(_, k)| *k).map(|(p, _)| p).collect()
}

/// All `k`-subsets of `0..n` in lexicographic order.
pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            go(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if k <= n {
        go(0, n, k, &mut Vec::with_capacity(k), &mut out);
    }
    out
}

/// Primitive extreme rays of the pointed cone `{x : a·x ≥ 0 for a in ineqs}`.
pub fn h_cone_rays(ineqs: &[Vec<i64>], dim: usize) -> Vec<LatticeVector> {
    let mut out: BTreeSet<LatticeVector> = BTreeSet::new();
    if dim == 0 {
        return Vec::new();
    }
    for subset in combinations(ineqs.len(), dim - 1) {
        let rows: IntMatrix = subset.iter().map(|&i| ineqs[i].clone()).collect();
        let Some(r) = linalg::kernel_vector(&rows, dim) else {
            continue;
        };
        let vals: Vec<i64> = ineqs.iter().map(|a| linalg::dot(a, &r)).collect();
        if vals.iter().all(|&v| v >= 0) && vals.iter().any(|&v| v > 0) {
            out.insert(r);
        } else if vals.iter().all(|&v| v <= 0) && vals.iter().any(|&v| v < 0) {
            out.insert(r.iter().map(|x| -x).collect());
        } else if vals.iter().all(|&v| v == 0) {
            // a line inside the cone: both directions are in, the cone is not pointed
            out.insert(r.clone());
            out.insert(r.iter().map(|x| -x).collect());
        }
    }
    out.into_iter().collect()
}

/// Pulling triangulation of the cone on `cell` (indices into `rays`, all extreme),
/// pulling the smallest index first. Consistent across a fan when every cell uses
/// the same global order.
pub fn pulling_triangulation(rays: &[LatticeVector], cell: &[usize]) -> Vec<Vec<usize>> {
    let mut cell = cell.to_vec();
    cell.sort_unstable();
    let gens: Vec<Vec<i64>> = cell.iter().map(|&i| rays[i].clone()).collect();
    let k = linalg::rank(&gens);
    if cell.len() == k {
        return vec![cell];
    }
    let dim = rays.first().map_or(0, |r| r.len());
    let f = ConeFacets::compute(&gens, dim);
    let apex = cell[0];
    let mut out = Vec::new();
    for m in &f.members {
        if m.contains(&0) {
            continue;
        }
        let facet: Vec<usize> = m.iter().map(|&j| cell[j]).collect();
        for mut s in pulling_triangulation(rays, &facet) {
            s.push(apex);
            s.sort_unstable();
            out.push(s);
        }
    }
    out.sort();
    out
}

/// Barycentric coordinates of `w` in the simplicial full-dimensional cone on `gens`
/// as `(numerators, det)`, so `w = Σ (num_i / det) g_i`, with `det > 0`.
pub fn simplicial_coordinates(gens: &[Vec<i64>], w: &[i64]) -> (Vec<i128>, i128) {
    let cols = linalg::transpose(gens, w.len());
    let (adj, d) = linalg::adjugate(&cols);
    let mut num: Vec<i128> = adj
        .iter()
        .map(|row| row.iter().zip(w).map(|(&a, &x)| a * x as i128).sum())
        .collect();
    if d < 0 {
        num.iter_mut().for_each(|x| *x = -*x);
    }
    (num, d.abs())
}

/// Lattice points `w = Σ λ_i g_i` with `λ ≥ 0` and `Σ λ_i a_i ≤ bound` (or `<` if
/// `strict`) in a simplicial full-dimensional cone. Every weight must be positive.
pub fn points_in_weighted_simplex(
    gens: &[Vec<i64>],
    weights: &[Rat],
    bound: &Rat,
    strict: bool,
) -> Result<Vec<LatticeVector>> {
    let n = gens.len();
    if weights.iter().any(|a| !a.is_positive()) {
        return Err(Error::InvalidState("unbounded region: nonpositive weight".into()));
    }
    if bound.is_negative() {
        return Ok(Vec::new());
    }
    let lam_max: Vec<Rat> = weights.iter().map(|a| bound / a).collect();
    let mut lo = vec![0i64; n];
    let mut hi = vec![0i64; n];
    for j in 0..n {
        let mut l = Rat::zero();
        let mut h = Rat::zero();
        for i in 0..n {
            let c = rat_from_i128(gens[i][j] as i128) * &lam_max[i];
            if c.is_negative() {
                l += c;
            } else {
                h += c;
            }
        }
        lo[j] = to_i64_floor(&l);
        hi[j] = to_i64_ceil(&h);
    }
    let cols = linalg::transpose(gens, n);
    let (adj, d) = linalg::adjugate(&cols);
    let (adj, d): (Vec<Vec<i128>>, i128) = if d < 0 {
        (adj.iter().map(|r| r.iter().map(|x| -x).collect()).collect(), -d)
    } else {
        (adj, d)
    };
    let scaled_bound = bound * rat_from_i128(d);
    let mut out = Vec::new();
    for_each_box_point(&lo, &hi, |w| {
        let mut lam = Vec::with_capacity(n);
        for row in &adj {
            let v: i128 = row.iter().zip(w).map(|(&a, &x)| a * x as i128).sum();
            if v < 0 {
                return;
            }
            lam.push(v);
        }
        let s: Rat = lam.iter().zip(weights).map(|(&l, a)| rat_from_i128(l) * a).sum();
        if (strict && s < scaled_bound) || (!strict && s <= scaled_bound) {
            out.push(w.to_vec());
        }
    });
    out.sort();
    Ok(out)
}

/// Nonzero lattice points of the half-open fundamental parallelepiped of a
/// simplicial full-dimensional cone, with their depth `Σ λ_i`.
pub fn parallelepiped_points(gens: &[Vec<i64>]) -> Vec<(LatticeVector, Rat)> {
    let n = gens.len();
    let mut lo = vec![0i64; n];
    let mut hi = vec![0i64; n];
    for g in gens {
        for j in 0..n {
            if g[j] < 0 {
                lo[j] += g[j];
            } else {
                hi[j] += g[j];
            }
        }
    }
    let mut out = Vec::new();
    for_each_box_point(&lo, &hi, |w| {
        if linalg::is_zero_vec(w) {
            return;
        }
        let (num, d) = simplicial_coordinates(gens, w);
        if num.iter().all(|&x| x >= 0 && x < d) {
            let depth = rat_from_i128(num.iter().sum::<i128>()) / rat_from_i128(d);
            out.push((w.to_vec(), depth));
        }
    });
    out.sort();
    out
}

pub fn for_each_box_point(lo: &[i64], hi: &[i64], mut f: impl FnMut(&[i64])) {
    let n = lo.len();
    if lo.iter().zip(hi).any(|(l, h)| l > h) {
        return;
    }
    let mut w = lo.to_vec();
    loop {
        f(&w);
        let mut j = 0;
        loop {
            if j == n {
                return;
            }
            if w[j] < hi[j] {
                w[j] += 1;
                break;
            }
            w[j] = lo[j];
            j += 1;
        }
    }
}

fn to_i64_floor(r: &Rat) -> i64 {
    use num_traits::ToPrimitive;
    r.floor().to_integer().to_i64().expect("box bound overflow")
}

fn to_i64_ceil(r: &Rat) -> i64 {
    use num_traits::ToPrimitive;
    r.ceil().to_integer().to_i64().expect("box bound overflow")
}
