//! Relative toric MMP: extremal rays of the relative cone of curves, their
//! contractions, flips, and the driver loops of the 2-ray game.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::cone::{primitive_vector, ConeFacets, LatticeVector};
use crate::error::{Error, Result};
use crate::fan::Fan;
use crate::intersection::{wall_curves, WallCurve};
use crate::linalg::{self, IntMatrix};
use crate::rat::Rat;
use crate::thresholds::Resolution;
use crate::toric::{Contraction, InvariantDivisor, MonomialLinearSystem, ToricMoriFibreSpace, ToricVariety};

pub const DEFAULT_STEP_CAP: usize = 64;

/// An extremal ray of `NE(X/Z)` with all wall curves in its class.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtremalRay {
    /// Primitive integer direction of the class in the coordinates `(D_i · C)_i`.
    pub class: Vec<i64>,
    pub curves: Vec<WallCurve>,
}

impl ExtremalRay {
    pub fn representative(&self) -> &WallCurve {
        &self.curves[0]
    }

    pub fn dot(&self, coefficients: &[Rat]) -> Rat {
        self.representative().dot(coefficients)
    }

    pub fn canonical_degree(&self) -> Rat {
        self.representative().canonical_degree()
    }

    /// `(K + cH) · C` on the representative curve.
    pub fn log_degree(&self, h: &MonomialLinearSystem) -> Rat {
        self.canonical_degree() + h.scale() * h.degree_on(self.representative())
    }

    /// Rays with negative intersection number.
    pub fn negative_rays(&self) -> Vec<usize> {
        let c = self.representative();
        (0..c.numbers.len()).filter(|&i| c.numbers[i].is_negative()).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ContractionKind {
    Fibering,
    Divisorial,
    Small,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StepKind {
    Divisorial,
    Flip,
    Fibering,
}

/// One step of an MMP.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MmpStep {
    pub kind: StepKind,
    pub source: Fan,
    /// The new model; for a fibering step, the source itself.
    pub target: Fan,
    pub ray_class: Vec<i64>,
    /// Walls of the contracted ray, as lists of ray vectors.
    pub walls: Vec<Vec<LatticeVector>>,
    /// Divisorial steps: the ray removed.
    pub contracted_ray: Option<LatticeVector>,
    /// Flips: each circuit `(old cones, new cones)` as ray vectors.
    pub flipped: Vec<(Vec<Vec<LatticeVector>>, Vec<Vec<LatticeVector>>)>,
    /// Fibering steps: the resulting Mori fibre space.
    pub fibration: Option<ToricMoriFibreSpace>,
}

/// Extremal rays of the cone of curves of `x` contracted over `z`, ordered by
/// their lexicographically smallest wall.
pub fn relative_mori_cone(x: &ToricVariety, z: &Contraction) -> Result<Vec<ExtremalRay>> {
    if !x.is_complete() || !x.is_q_factorial() {
        return Err(Error::InvalidInput("relative cone of curves needs a complete simplicial fan".into()));
    }
    if z.projection.len() != z.fan.lattice_dim() || !z.is_compatible(x.fan()) {
        return Err(Error::InvalidInput("target is not a toric contraction of X".into()));
    }
    let mut by_class: BTreeMap<Vec<i64>, Vec<WallCurve>> = BTreeMap::new();
    for c in wall_curves(x.fan()) {
        if z.contracts_wall(x.fan(), &c.wall) {
            by_class.entry(c.class_key()).or_default().push(c);
        }
    }
    if by_class.is_empty() {
        return Ok(Vec::new());
    }
    let keys: Vec<Vec<i64>> = by_class.keys().cloned().collect();
    let facets = ConeFacets::compute(&keys, x.ray_count());
    if !facets.is_pointed() {
        return Err(Error::InvalidInput("cone of curves over the target is not strongly convex".into()));
    }
    let mut rays: Vec<ExtremalRay> = facets
        .extreme_generators(&keys)
        .into_iter()
        .map(|i| {
            let mut curves = by_class[&keys[i]].clone();
            curves.sort_by(|a, b| a.wall.cmp(&b.wall));
            ExtremalRay {
                class: keys[i].clone(),
                curves,
            }
        })
        .collect();
    rays.sort_by(|a, b| a.representative().wall.cmp(&b.representative().wall));
    Ok(rays)
}

pub fn classify_contraction(ray: &ExtremalRay) -> ContractionKind {
    match ray.negative_rays().len() {
        0 => ContractionKind::Fibering,
        1 => ContractionKind::Divisorial,
        _ => ContractionKind::Small,
    }
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, i: usize) -> usize {
        if self.0[i] != i {
            let r = self.find(self.0[i]);
            self.0[i] = r;
        }
        self.0[i]
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = (ra.min(rb), ra.max(rb));
            self.0[hi] = lo;
        }
    }
}

/// Groups of maximal cones glued across the walls of `ray`.
fn merged_groups(fan: &Fan, ray: &ExtremalRay) -> Vec<Vec<usize>> {
    let mut uf = UnionFind((0..fan.max_cones().len()).collect());
    for c in &ray.curves {
        uf.union(c.cones[0], c.cones[1]);
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..fan.max_cones().len() {
        let r = uf.find(i);
        groups.entry(r).or_default().push(i);
    }
    groups.into_values().collect()
}

fn group_rays(fan: &Fan, group: &[usize]) -> Vec<usize> {
    let s: BTreeSet<usize> = group.iter().flat_map(|&c| fan.max_cones()[c].iter().copied()).collect();
    s.into_iter().collect()
}

/// Contracts or flips an extremal ray of `x`.
pub fn execute_step(x: &ToricVariety, ray: &ExtremalRay) -> Result<MmpStep> {
    let fan = x.fan();
    let walls = ray.curves.iter().map(|c| fan.cone_rays(&c.wall)).collect();
    let mut step = MmpStep {
        kind: StepKind::Fibering,
        source: fan.clone(),
        target: fan.clone(),
        ray_class: ray.class.clone(),
        walls,
        contracted_ray: None,
        flipped: Vec::new(),
        fibration: None,
    };
    match classify_contraction(ray) {
        ContractionKind::Divisorial => {
            let e = ray.negative_rays()[0];
            step.kind = StepKind::Divisorial;
            step.target = contract_divisor(fan, ray, e)?;
            step.contracted_ray = Some(fan.rays()[e].clone());
        }
        ContractionKind::Small => {
            if fan.lattice_dim() == 2 {
                return Err(Error::ImpossibleInDim2);
            }
            if fan.lattice_dim() >= 4 {
                return Err(Error::UnsupportedInput("flips are only implemented in dimension 3".into()));
            }
            let (target, flipped) = flip(fan, ray)?;
            step.kind = StepKind::Flip;
            step.target = target;
            step.flipped = flipped;
        }
        ContractionKind::Fibering => {
            step.fibration = Some(fibration(x, ray)?);
        }
    }
    Ok(step)
}

fn contract_divisor(fan: &Fan, ray: &ExtremalRay, e: usize) -> Result<Fan> {
    let n = fan.lattice_dim();
    let mut cones: Vec<Vec<usize>> = Vec::new();
    for group in merged_groups(fan, ray) {
        if group.len() == 1 {
            let c = &fan.max_cones()[group[0]];
            if c.contains(&e) {
                return Err(Error::InvalidState("a cone through the contracted ray was not merged".into()));
            }
            cones.push(c.clone());
            continue;
        }
        let rays = group_rays(fan, &group);
        let gens = fan.cone_rays(&rays);
        let f = ConeFacets::compute(&gens, n);
        let extreme: Vec<usize> = f.extreme_generators(&gens).into_iter().map(|j| rays[j]).collect();
        let expected: Vec<usize> = rays.iter().copied().filter(|&i| i != e).collect();
        if extreme != expected || !f.is_pointed() {
            return Err(Error::InvalidState("merged cones do not form the expected cone".into()));
        }
        cones.push(expected);
    }
    let keep: Vec<usize> = (0..fan.rays().len()).filter(|&i| i != e).collect();
    let index: BTreeMap<usize, usize> = keep.iter().enumerate().map(|(new, &old)| (old, new)).collect();
    let rays: Vec<Vec<i64>> = keep.iter().map(|&i| fan.rays()[i].clone()).collect();
    let cones = cones.into_iter().map(|c| c.iter().map(|i| index[i]).collect()).collect();
    let out = Fan::canonical(n, rays, cones);
    if !out.is_simplicial() {
        return Err(Error::InvalidState("divisorial contraction left a non-simplicial cone".into()));
    }
    Ok(out)
}

type Circuit = (Vec<Vec<LatticeVector>>, Vec<Vec<LatticeVector>>);

fn flip(fan: &Fan, ray: &ExtremalRay) -> Result<(Fan, Vec<Circuit>)> {
    let n = fan.lattice_dim();
    let mut cones: Vec<Vec<usize>> = Vec::new();
    let mut circuits = Vec::new();
    for group in merged_groups(fan, ray) {
        if group.len() == 1 {
            cones.push(fan.max_cones()[group[0]].clone());
            continue;
        }
        let rays = group_rays(fan, &group);
        if rays.len() != n + 1 {
            return Err(Error::UnsupportedInput("flipping circuit with more than n+1 rays".into()));
        }
        let rows: IntMatrix = (0..n).map(|j| rays.iter().map(|&i| fan.rays()[i][j]).collect()).collect();
        let mut r = linalg::kernel_vector(&rows, n + 1).ok_or_else(|| Error::InvalidState("degenerate circuit".into()))?;
        let old: BTreeSet<Vec<usize>> = group.iter().map(|&c| fan.max_cones()[c].clone()).collect();
        let missing = |sign: i64, r: &[i64]| -> BTreeSet<Vec<usize>> {
            (0..rays.len())
                .filter(|&k| r[k].signum() == sign)
                .map(|k| rays.iter().enumerate().filter(|&(j, _)| j != k).map(|(_, &i)| i).collect())
                .collect()
        };
        if missing(1, &r) != old {
            r.iter_mut().for_each(|x| *x = -*x);
        }
        if missing(1, &r) != old {
            return Err(Error::UnsupportedInput("flipping locus is not a single circuit".into()));
        }
        let new = missing(-1, &r);
        circuits.push((
            old.iter().map(|c| fan.cone_rays(c)).collect(),
            new.iter().map(|c| fan.cone_rays(c)).collect(),
        ));
        cones.extend(new);
    }
    Ok((Fan::canonical(n, fan.rays().to_vec(), cones), circuits))
}

fn fibration(x: &ToricVariety, ray: &ExtremalRay) -> Result<ToricMoriFibreSpace> {
    let curves: Vec<&WallCurve> = ray.curves.iter().collect();
    let z = contract_walls(x.fan(), &curves)?;
    if z.fan.lattice_dim() == x.dim() {
        return Err(Error::InvalidState("fibering ray contracts nothing".into()));
    }
    if z.projection.is_empty() {
        return Ok(ToricMoriFibreSpace::over_point(x.fan().clone()));
    }
    ToricMoriFibreSpace::new(x.fan().clone(), z.fan, z.projection)
}

/// The toric contraction of the given wall curves: maximal cones glued across
/// them, modulo the common lineality space of the glued cones.
pub fn contract_walls(fan: &Fan, curves: &[&WallCurve]) -> Result<Contraction> {
    let n = fan.lattice_dim();
    let mut uf = UnionFind((0..fan.max_cones().len()).collect());
    for c in curves {
        uf.union(c.cones[0], c.cones[1]);
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..fan.max_cones().len() {
        let r = uf.find(i);
        groups.entry(r).or_default().push(i);
    }
    let groups: Vec<Vec<usize>> = groups.into_values().map(|g| group_rays(fan, &g)).collect();
    let mut lineality: Option<Vec<Vec<i64>>> = None;
    for g in &groups {
        let f = ConeFacets::compute(&fan.cone_rays(g), n);
        if f.rank != n {
            return Err(Error::InvalidState("glued cones are not full-dimensional".into()));
        }
        let basis: Vec<Vec<i64>> = linalg::nullspace(&linalg::to_rat_rows(&f.normals), n)
            .iter()
            .map(|v| linalg::primitive_from_rat(v))
            .collect();
        let basis = linalg::hnf_rows(&basis, n);
        match &lineality {
            None => lineality = Some(basis),
            Some(l) if *l != basis => {
                return Err(Error::InvalidState("glued cones have different lineality spaces".into()));
            }
            _ => {}
        }
    }
    let lineality = lineality.unwrap_or_default();
    if lineality.len() == n {
        return Ok(Contraction::point());
    }
    let projection = if lineality.is_empty() {
        linalg::identity(n)
    } else {
        linalg::integer_kernel(&lineality, n)
    };
    let k = projection.len();
    let mut images: Vec<Vec<Vec<i64>>> = Vec::new();
    for g in &groups {
        let imgs: BTreeSet<Vec<i64>> = g
            .iter()
            .map(|&i| linalg::mat_vec(&projection, &fan.rays()[i]))
            .filter(|v| !linalg::is_zero_vec(v))
            .map(|v| primitive_vector(&v).expect("nonzero"))
            .collect();
        let imgs: Vec<Vec<i64>> = imgs.into_iter().collect();
        let f = ConeFacets::compute(&imgs, k);
        images.push(f.extreme_generators(&imgs).into_iter().map(|j| imgs[j].clone()).collect());
    }
    let rays: Vec<Vec<i64>> = images.iter().flatten().cloned().collect::<BTreeSet<_>>().into_iter().collect();
    let mut cones: Vec<Vec<usize>> = images
        .iter()
        .map(|c| {
            let mut idx: Vec<usize> = c.iter().map(|v| rays.binary_search(v).unwrap()).collect();
            idx.sort_unstable();
            idx
        })
        .collect();
    cones.sort();
    cones.dedup();
    let maximal: Vec<Vec<usize>> = cones
        .iter()
        .filter(|a| !cones.iter().any(|b| b.len() > a.len() && a.iter().all(|i| b.contains(i))))
        .cloned()
        .collect();
    Ok(Contraction {
        fan: Fan::new(k, rays, maximal)?,
        projection,
    })
}

/// How the next extremal ray is chosen.
#[derive(Clone, Debug)]
pub enum RaySelection {
    /// The first negative ray in canonical order, optionally forcing the class
    /// of the first step.
    First(Option<Vec<i64>>),
    /// The negative ray maximizing `−(K + cH)·R / (A·R)`.
    Scaling(InvariantDivisor),
    /// A 2-ray game: the given first ray, then always the ray other than the
    /// one just flipped, regardless of sign.
    TwoRay(Vec<i64>),
}

/// Result of an MMP run: the steps and the final model with the transported system.
#[derive(Clone, Debug)]
pub struct MmpRun {
    pub steps: Vec<MmpStep>,
    pub model: ToricVariety,
    pub system: MonomialLinearSystem,
}

/// Runs the `(K + cH)`-MMP over `z` (`c = h.scale()`) until a fibering step or
/// a model with no negative ray over `z`.
pub fn run_relative_mmp(
    x: &ToricVariety,
    h: &MonomialLinearSystem,
    z: &Contraction,
    first_ray: Option<&[i64]>,
    cap: usize,
) -> Result<MmpRun> {
    drive(x, h, z, RaySelection::First(first_ray.map(<[i64]>::to_vec)), cap)
}

pub fn mmp_with_scaling(
    x: &ToricVariety,
    h: &MonomialLinearSystem,
    z: &Contraction,
    a: &InvariantDivisor,
    cap: usize,
) -> Result<MmpRun> {
    drive(x, h, z, RaySelection::Scaling(a.clone()), cap)
}

/// Pushes an invariant divisor forward along a divisorial contraction.
pub fn push_forward(source: &Fan, target: &Fan, d: &[Rat]) -> Vec<Rat> {
    target
        .rays()
        .iter()
        .map(|r| d[source.ray_index(r).expect("target rays are source rays")].clone())
        .collect()
}

fn transport_system(source: &Fan, target: &Fan, h: &MonomialLinearSystem) -> MonomialLinearSystem {
    let coeffs = push_forward(source, target, &h.reference().coefficients);
    MonomialLinearSystem::new(h.points().to_vec(), InvariantDivisor::new(coeffs), h.scale().clone())
        .expect("transport keeps the point set")
}

/// A 2-ray game over `z` starting with the ray of class `first`.
pub fn two_ray_game(
    x: &ToricVariety,
    h: &MonomialLinearSystem,
    z: &Contraction,
    first: &[i64],
    cap: usize,
) -> Result<MmpRun> {
    drive(x, h, z, RaySelection::TwoRay(first.to_vec()), cap)
}

pub(crate) fn drive(
    x: &ToricVariety,
    h: &MonomialLinearSystem,
    z: &Contraction,
    selection: RaySelection,
    cap: usize,
) -> Result<MmpRun> {
    let c = h.scale().clone();
    let mut model = x.clone();
    let mut system = h.clone();
    let mut scaling = match &selection {
        RaySelection::Scaling(a) => Some(a.clone()),
        _ => None,
    };
    let mut last_flip: Option<Vec<i64>> = None;
    let mut steps: Vec<MmpStep> = Vec::new();
    loop {
        let rays = relative_mori_cone(&model, z)?;
        let negative: Vec<&ExtremalRay> = rays.iter().filter(|r| r.log_degree(&system).is_negative()).collect();
        let chosen: Option<&ExtremalRay> = match (&selection, steps.is_empty()) {
            (RaySelection::First(Some(class)), true) => {
                let r = rays
                    .iter()
                    .find(|r| &r.class == class)
                    .ok_or_else(|| Error::InvalidState("requested first ray is not extremal".into()))?;
                if !r.log_degree(&system).is_negative() {
                    return Err(Error::InvalidState("requested first ray is not negative".into()));
                }
                Some(r)
            }
            (RaySelection::Scaling(_), _) => {
                let a = scaling.as_ref().unwrap();
                let mut best: Option<(&ExtremalRay, Rat)> = None;
                for r in &negative {
                    let av = r.dot(&a.coefficients);
                    if !av.is_positive() {
                        return Err(Error::InvalidInput("scaling divisor is not positive on a negative ray".into()));
                    }
                    let ratio = -r.log_degree(&system) / av;
                    if best.as_ref().map_or(true, |(_, b)| &ratio > b) {
                        best = Some((r, ratio));
                    }
                }
                best.map(|(r, _)| r)
            }
            (RaySelection::TwoRay(first), true) => Some(
                rays.iter()
                    .find(|r| &r.class == first)
                    .ok_or_else(|| Error::InvalidState("requested first ray is not extremal".into()))?,
            ),
            (RaySelection::TwoRay(_), false) => {
                let flipped_back: Option<Vec<i64>> = last_flip.as_ref().map(|c| c.iter().map(|x| -x).collect());
                let others: Vec<&ExtremalRay> = rays.iter().filter(|r| Some(&r.class) != flipped_back.as_ref()).collect();
                if others.len() > 1 {
                    return Err(Error::InvalidState("2-ray game reached a model of relative rank above 2".into()));
                }
                others.first().copied()
            }
            _ => negative.first().copied(),
        };
        let Some(ray) = chosen else {
            return Ok(MmpRun { steps, model, system });
        };
        if steps.len() >= cap {
            return Err(Error::StepCapExceeded(cap));
        }
        let step = execute_step(&model, ray)?;
        if step.kind == StepKind::Fibering {
            steps.push(step);
            return Ok(MmpRun { steps, model, system });
        }
        last_flip = (step.kind == StepKind::Flip).then(|| ray.class.clone());
        let next = ToricVariety::new(step.target.clone());
        system = transport_system(model.fan(), next.fan(), &system);
        if let Some(a) = scaling.as_mut() {
            *a = InvariantDivisor::new(push_forward(model.fan(), next.fan(), &a.coefficients));
        }
        if !c.is_zero() {
            let ct = Resolution::new(&next, &system)?.canonical_threshold(&next, None);
            if ct < crate::rat::ExtRat::Finite(c.clone()) {
                return Err(Error::InternalInvariantViolation(format!(
                    "pair is not canonical after a {:?} step",
                    step.kind
                )));
            }
        }
        model = next;
        steps.push(step);
    }
}
