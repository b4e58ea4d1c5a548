//! Untwisting monomial birational maps between toric Mori fibre spaces into
//! Sarkisov links.

use std::fmt;

use num_traits::{One, Signed};
use serde::{Deserialize, Serialize};

use crate::cone::{ConeFacets, LatticeVector};
use crate::degrees::{
    augmented_from_degree, degree_of_system, AugmentedSarkisovDegree, SarkisovDegree, WeightFunction,
};
use crate::error::{Error, Result};
use crate::fan::Fan;
use crate::intersection::{wall_curves, WallCurve};
use crate::linalg::{self, IntMatrix};
use crate::mmp::{
    classify_contraction, contract_walls, execute_step, relative_mori_cone, run_relative_mmp, two_ray_game,
    ContractionKind, ExtremalRay, MmpStep, StepKind, DEFAULT_STEP_CAP,
};
use crate::rat::{ExtCount, ExtRat, Rat};
use crate::thresholds::{crepant_divisor_count, Resolution};
use crate::toric::{
    pseff_threshold_mu, total_transform, Check, Contraction, InvariantDivisor, MonomialLinearSystem,
    ToricMoriFibreSpace, ToricValuation, ToricVariety,
};

/// A monomial map `X/S ⇢ X′/S′` given by a unimodular matrix `N_X → N_X′`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToricBirationalMap {
    pub matrix: IntMatrix,
    pub source: ToricMoriFibreSpace,
    pub target: ToricMoriFibreSpace,
}

impl ToricBirationalMap {
    pub fn new(matrix: IntMatrix, source: ToricMoriFibreSpace, target: ToricMoriFibreSpace) -> Result<ToricBirationalMap> {
        let n = source.total.dim();
        if target.total.dim() != n || matrix.len() != n || matrix.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidInput("map matrix does not match the lattice dimensions".into()));
        }
        if linalg::det(&matrix).abs() != 1 {
            return Err(Error::InvalidInput("map matrix is not unimodular".into()));
        }
        Ok(ToricBirationalMap { matrix, source, target })
    }

    /// The identity map of a Mori fibre space.
    pub fn identity(xs: ToricMoriFibreSpace) -> ToricBirationalMap {
        ToricBirationalMap {
            matrix: linalg::identity(xs.total.dim()),
            source: xs.clone(),
            target: xs,
        }
    }

    /// Total transform of a system on the target.
    pub fn pull_back(&self, h_target: &MonomialLinearSystem) -> Result<MonomialLinearSystem> {
        total_transform(&self.source.total, &self.target.total, &self.matrix, h_target)
    }
}

/// The base-lattice isomorphism `U` with `P′·L = U·P`, if `Φ` is a square isomorphism.
pub fn square_certificate(map: &ToricBirationalMap) -> Option<IntMatrix> {
    let l = &map.matrix;
    if map.source.total.fan().transform(l).ok()? != *map.target.total.fan() {
        return None;
    }
    let (p, q) = (&map.source.projection, &map.target.projection);
    if p.len() != q.len() {
        return None;
    }
    let n = map.source.total.dim();
    let k = p.len();
    if k == 0 {
        return Some(Vec::new());
    }
    let ql = linalg::mat_mul(q, l, n);
    let u = linalg::mat_mul(&ql, &linalg::right_inverse(p, n)?, k);
    if linalg::mat_mul(&u, p, n) != ql || linalg::det(&u).abs() != 1 {
        return None;
    }
    (map.source.base.fan().transform(&u).ok()? == *map.target.base.fan()).then_some(u)
}

pub fn is_square_isomorphism(map: &ToricBirationalMap) -> bool {
    square_certificate(map).is_some()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum NfiCase {
    SquareIso,
    Case1,
    Case2,
}

impl fmt::Display for NfiCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NfiCase::SquareIso => "SquareIso",
            NfiCase::Case1 => "Case1",
            NfiCase::Case2 => "Case2",
        })
    }
}

fn case_of(deg: &SarkisovDegree) -> NfiCase {
    if deg.c < ExtRat::Finite(Rat::one() / &deg.mu) {
        NfiCase::Case1
    } else {
        NfiCase::Case2
    }
}

pub fn nfi_case(map: &ToricBirationalMap, h_target: &MonomialLinearSystem) -> Result<NfiCase> {
    if is_square_isomorphism(map) {
        return Ok(NfiCase::SquareIso);
    }
    Ok(case_of(&degree_of_system(&map.source, &map.pull_back(h_target)?)?))
}

/// A divisorial extraction of a crepant valuation landing on a terminal model.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaximalExtraction {
    pub valuation: ToricValuation,
    pub model: Fan,
    /// `ρ(X̃) − ρ(X)`.
    pub relative_rank: i64,
    pub terminal: bool,
}

/// All toric valuations with `a(E, X, cH) = 1` whose star subdivision is
/// terminal, in canonical order. `c = h.scale()`.
pub fn find_maximal_extractions(x: &ToricVariety, h: &MonomialLinearSystem) -> Result<Vec<MaximalExtraction>> {
    let res = Resolution::new(x, h)?;
    if res.canonical_threshold(x, None).is_infinite() {
        return Err(Error::PreconditionViolation("maximal extractions need a finite canonical threshold".into()));
    }
    let crepant = crepant_divisor_count(x, h)?;
    if crepant.count == ExtCount::Infinity {
        return Err(Error::UnsupportedInput(format!(
            "infinitely many crepant valuations: {}",
            crepant.diagnostic.unwrap_or_default()
        )));
    }
    let mut out = Vec::new();
    for v in crepant.divisors {
        let model = x.fan().star_subdivide(&v.vector)?;
        let y = ToricVariety::new(model.clone());
        if y.is_q_factorial() && y.is_terminal() {
            out.push(MaximalExtraction {
                relative_rank: y.class_rank() as i64 - x.class_rank() as i64,
                terminal: true,
                valuation: v,
                model,
            });
        }
    }
    if out.is_empty() {
        return Err(Error::InternalInvariantViolation("no maximal extraction exists".into()));
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum LinkKind {
    I,
    II,
    III,
    IV,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum LinkSubtype {
    IIIa,
    IIIb,
    IVa,
    IVb,
}

/// Which untwisting was taken: the k-th maximal extraction (Case 1) or the
/// k-th admissible negative ray (Case 2), 0-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Choice {
    Extraction(usize),
    Ray(usize),
}

impl fmt::Display for Choice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Choice::Extraction(k) => write!(f, "extraction {k}"),
            Choice::Ray(k) => write!(f, "ray {k}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "step", rename_all = "lowercase")]
pub enum LinkStep {
    Extraction { valuation: LatticeVector, model: Fan },
    Mmp(MmpStep),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SarkisovLink {
    pub kind: LinkKind,
    pub subtype: Option<LinkSubtype>,
    pub choice: Choice,
    pub extraction: Option<LatticeVector>,
    pub steps: Vec<LinkStep>,
    /// Case 2: the contraction of the face spanned by the fibre and the chosen ray.
    pub middle: Option<Contraction>,
    pub source: ToricMoriFibreSpace,
    pub target: ToricMoriFibreSpace,
    /// `N_source → N_target`.
    pub matrix: IntMatrix,
}

impl SarkisovLink {
    pub fn label(&self) -> String {
        match self.subtype {
            Some(s) => format!("{s:?}"),
            None => format!("{:?}", self.kind),
        }
    }

    pub fn flip_count(&self) -> usize {
        self.steps
            .iter()
            .filter(|s| matches!(s, LinkStep::Mmp(m) if m.kind == StepKind::Flip))
            .count()
    }

    /// Shape checks: one extraction for I/II and none for III/IV, and only
    /// flips between the ends.
    pub fn shape_checks(&self) -> Vec<Check> {
        let extractions = self.steps.iter().filter(|s| matches!(s, LinkStep::Extraction { .. })).count();
        let want = usize::from(matches!(self.kind, LinkKind::I | LinkKind::II));
        let mmp: Vec<&MmpStep> = self
            .steps
            .iter()
            .filter_map(|s| match s {
                LinkStep::Mmp(m) => Some(m),
                _ => None,
            })
            .collect();
        let ends_fibering = mmp.last().map_or(false, |m| m.kind == StepKind::Fibering);
        let divisorial = mmp.iter().filter(|m| m.kind == StepKind::Divisorial).count();
        vec![
            Check::new("extraction count", extractions == want, format!("{extractions}")),
            Check::new("ends with a fibration", ends_fibering, ""),
            Check::new("at most one divisorial contraction", divisorial <= 1, format!("{divisorial}")),
            Check::new("source valid", self.source.validate().is_ok(), ""),
            Check::new("target valid", self.target.validate().is_ok(), ""),
        ]
    }
}

fn finish_link(
    kind: LinkKind,
    subtype: Option<LinkSubtype>,
    choice: Choice,
    extraction: Option<LatticeVector>,
    steps: Vec<LinkStep>,
    middle: Option<Contraction>,
    source: &ToricMoriFibreSpace,
) -> Result<SarkisovLink> {
    let Some(LinkStep::Mmp(last)) = steps.last() else {
        return Err(Error::InvalidState("2-ray game produced no steps".into()));
    };
    let target = last
        .fibration
        .clone()
        .ok_or_else(|| Error::InvalidState("2-ray game ended without a fibration".into()))?;
    target.validate()?;
    Ok(SarkisovLink {
        kind,
        subtype,
        choice,
        extraction,
        steps,
        middle,
        source: source.clone(),
        matrix: linalg::identity(source.total.dim()),
        target,
    })
}

/// The two rays of `NE(X̃/S)`: the one contracting the extracted divisor back
/// and the other one.
fn extraction_rays(xt: &ToricVariety, z: &Contraction, e: usize) -> Result<(ExtremalRay, ExtremalRay)> {
    let rays = relative_mori_cone(xt, z)?;
    if rays.len() != 2 {
        return Err(Error::InvalidState(format!("extraction has {} extremal rays over the base", rays.len())));
    }
    let back = |r: &ExtremalRay| classify_contraction(r) == ContractionKind::Divisorial && r.negative_rays() == vec![e];
    match (back(&rays[0]), back(&rays[1])) {
        (true, false) => Ok((rays[0].clone(), rays[1].clone())),
        (false, true) => Ok((rays[1].clone(), rays[0].clone())),
        _ => Err(Error::InvalidState("cannot tell the extraction ray apart".into())),
    }
}

/// Case 1: extract `extraction` and run the `(K + cH)`-MMP over `S` from the other ray.
pub fn two_ray_game_case1(
    xs: &ToricMoriFibreSpace,
    h: &MonomialLinearSystem,
    extraction: &MaximalExtraction,
    choice: Choice,
    cap: usize,
) -> Result<SarkisovLink> {
    let x = &xs.total;
    let z = xs.contraction();
    let xt = ToricVariety::new(extraction.model.clone());
    let w = &extraction.valuation.vector;
    let e = xt.fan().ray_index(w).expect("extracted ray");
    // strict transform: drop the multiplicity along the extracted divisor
    let total = total_transform(&xt, x, &linalg::identity(x.dim()), h)?;
    let mut coeffs = total.reference().coefficients.clone();
    coeffs[e] -= h.mult(x, w).expect("complete fan");
    let ht = MonomialLinearSystem::new(total.points().to_vec(), InvariantDivisor::new(coeffs), h.scale().clone())?;
    let (back, other) = extraction_rays(&xt, &z, e)?;
    if execute_step(&xt, &other).map_or(false, |s| s.target == *x.fan()) || back.class == other.class {
        return Err(Error::NoOp("the 2-ray game re-contracts the extracted divisor".into()));
    }
    let run = run_relative_mmp(&xt, &ht, &z, Some(&other.class), cap)?;
    let kind = if run.steps.iter().any(|s| s.kind == StepKind::Divisorial) {
        LinkKind::II
    } else {
        LinkKind::I
    };
    let mut steps = vec![LinkStep::Extraction {
        valuation: w.clone(),
        model: extraction.model.clone(),
    }];
    steps.extend(run.steps.into_iter().map(LinkStep::Mmp));
    finish_link(kind, None, choice, Some(w.clone()), steps, None, xs)
}

/// `f*A` for a divisor on the base.
pub fn pullback_from_base(xs: &ToricMoriFibreSpace, a: &InvariantDivisor) -> Result<InvariantDivisor> {
    let fan = xs.total.fan();
    if xs.projection.is_empty() {
        return Ok(InvariantDivisor::zero(fan.rays().len()));
    }
    if a.coefficients.len() != xs.base.ray_count() {
        return Err(Error::InvalidInput("base divisor length differs from the base ray count".into()));
    }
    fan.rays()
        .iter()
        .map(|v| {
            xs.base
                .fan()
                .pl_eval(&a.coefficients, &linalg::mat_vec(&xs.projection, v))
                .ok_or_else(|| Error::InvalidInput("base fan is not complete".into()))
        })
        .collect::<Result<Vec<Rat>>>()
        .map(InvariantDivisor::new)
}

/// Default Case-2 divisor: the sum of the base invariant divisors.
pub fn default_scaling_divisor(xs: &ToricMoriFibreSpace) -> InvariantDivisor {
    InvariantDivisor::anticanonical(xs.base.ray_count())
}

struct Case2Data {
    hs: MonomialLinearSystem,
    fibre: ExtremalRay,
    /// Admissible negative rays in canonical order with their ratio.
    admissible: Vec<(ExtremalRay, Rat)>,
    best: usize,
}

fn case2_data(xs: &ToricMoriFibreSpace, h: &MonomialLinearSystem, a: &InvariantDivisor) -> Result<Case2Data> {
    let x = &xs.total;
    let mu = pseff_threshold_mu(xs, h)?;
    let hs = h.with_scale(Rat::one() / mu);
    let z = xs.contraction();
    let all = relative_mori_cone(x, &Contraction::point())?;
    let fibre_idx: Vec<usize> = (0..all.len())
        .filter(|&i| all[i].curves.iter().all(|c| z.contracts_wall(x.fan(), &c.wall)))
        .collect();
    if fibre_idx.len() != 1 {
        return Err(Error::InvalidState("the fibration is not an extremal ray".into()));
    }
    let f = fibre_idx[0];
    let keys: Vec<Vec<i64>> = all.iter().map(|r| r.class.clone()).collect();
    let facets = ConeFacets::compute(&keys, x.ray_count());
    let l = pullback_from_base(xs, a)?;
    let mut admissible = Vec::new();
    for (i, r) in all.iter().enumerate() {
        if i == f || !r.log_degree(&hs).is_negative() || !facets.is_face(&[i.min(f), i.max(f)]) {
            continue;
        }
        let lr = r.dot(&l.coefficients);
        if !lr.is_positive() {
            return Err(Error::InvalidInput("scaling divisor is not ample on the base".into()));
        }
        let ratio = -r.log_degree(&hs) / lr;
        admissible.push((r.clone(), ratio));
    }
    if admissible.is_empty() {
        return Err(Error::InternalInvariantViolation("no negative adjacent ray: the map is a square isomorphism".into()));
    }
    let mut best = 0;
    for (i, (_, q)) in admissible.iter().enumerate() {
        if q > &admissible[best].1 {
            best = i;
        }
    }
    Ok(Case2Data {
        hs,
        fibre: all[f].clone(),
        admissible,
        best,
    })
}

/// Case 2: contract the face spanned by the fibre and the chosen negative ray
/// (the ratio maximizer by default) and play the 2-ray game over it.
pub fn two_ray_game_case2(
    xs: &ToricMoriFibreSpace,
    h: &MonomialLinearSystem,
    a: &InvariantDivisor,
    ray: Option<usize>,
    cap: usize,
) -> Result<SarkisovLink> {
    let data = case2_data(xs, h, a)?;
    let k = ray.unwrap_or(data.best);
    let (chosen, _) = data
        .admissible
        .get(k)
        .ok_or_else(|| Error::InvalidInput(format!("ray choice {k} out of range")))?;
    let x = &xs.total;
    let span = [data.fibre.class.clone(), chosen.class.clone()];
    let face: Vec<WallCurve> = wall_curves(x.fan())
        .into_iter()
        .filter(|c| linalg::rank(&[span[0].clone(), span[1].clone(), c.class_key()]) == 2)
        .collect();
    let t = contract_walls(x.fan(), &face.iter().collect::<Vec<_>>())?;
    let run = two_ray_game(x, &data.hs, &t, &chosen.class, cap)?;
    let divisorial = run.steps.iter().any(|s| s.kind == StepKind::Divisorial);
    let last = run.steps.last().and_then(|s| s.fibration.clone());
    let negative = match &last {
        Some(target) => {
            let fib = relative_mori_cone(&target.total, &target.contraction())?;
            fib.iter().all(|r| r.log_degree(&run.system).is_negative())
        }
        None => false,
    };
    let (kind, subtype) = match (divisorial, negative) {
        (true, true) => (LinkKind::III, LinkSubtype::IIIa),
        (true, false) => (LinkKind::III, LinkSubtype::IIIb),
        (false, true) => (LinkKind::IV, LinkSubtype::IVa),
        (false, false) => (LinkKind::IV, LinkSubtype::IVb),
    };
    let steps = run.steps.into_iter().map(LinkStep::Mmp).collect();
    finish_link(kind, Some(subtype), Choice::Ray(k), None, steps, Some(t), xs)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Policy {
    First,
    /// 1-based index into the maximal extractions.
    Index(usize),
    /// Case-2 scaling divisor on the base; `None` uses the default.
    Scaling(Option<InvariantDivisor>),
}

impl std::str::FromStr for Policy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Policy> {
        match s {
            "first" => Ok(Policy::First),
            "scaling" => Ok(Policy::Scaling(None)),
            _ => match s.strip_prefix("index:").and_then(|k| k.parse::<usize>().ok()) {
                Some(k) if k >= 1 => Ok(Policy::Index(k)),
                _ => Err(Error::InvalidInput(format!("unknown policy {s:?}"))),
            },
        }
    }
}

/// The available untwistings of a map that is not a square isomorphism.
pub fn untwist_choices(map: &ToricBirationalMap, h_target: &MonomialLinearSystem) -> Result<Vec<Choice>> {
    if is_square_isomorphism(map) {
        return Ok(Vec::new());
    }
    let h = map.pull_back(h_target)?;
    let deg = degree_of_system(&map.source, &h)?;
    match case_of(&deg) {
        NfiCase::Case1 => {
            let c = deg.c.finite().unwrap().clone();
            let n = find_maximal_extractions(&map.source.total, &h.with_scale(c))?.len();
            Ok((0..n).map(Choice::Extraction).collect())
        }
        _ => {
            let data = case2_data(&map.source, &h, &default_scaling_divisor(&map.source))?;
            Ok((0..data.admissible.len()).map(Choice::Ray).collect())
        }
    }
}

/// One untwisting step with an explicit choice (`None` follows the default for
/// the case). When the residual is a square isomorphism it is folded into the
/// link, whose target then becomes the target of `map`.
pub fn untwist_with_choice(
    map: &ToricBirationalMap,
    h_target: &MonomialLinearSystem,
    choice: Option<Choice>,
    scaling: Option<&InvariantDivisor>,
    cap: usize,
) -> Result<(SarkisovLink, ToricBirationalMap)> {
    if is_square_isomorphism(map) {
        return Err(Error::PreconditionViolation("map is already a square isomorphism".into()));
    }
    let h = map.pull_back(h_target)?;
    let deg = degree_of_system(&map.source, &h)?;
    let mut link = match (case_of(&deg), choice) {
        (NfiCase::Case1, None | Some(Choice::Extraction(_))) => {
            let c = deg.c.finite().unwrap().clone();
            let hc = h.with_scale(c);
            let ex = find_maximal_extractions(&map.source.total, &hc)?;
            let k = match choice {
                Some(Choice::Extraction(k)) => k,
                _ => 0,
            };
            let e = ex
                .get(k)
                .ok_or_else(|| Error::InvalidInput(format!("extraction choice {k} out of range ({} available)", ex.len())))?;
            two_ray_game_case1(&map.source, &hc, e, Choice::Extraction(k), cap)?
        }
        (NfiCase::Case2, None | Some(Choice::Ray(_))) => {
            let default = default_scaling_divisor(&map.source);
            let a = scaling.unwrap_or(&default);
            let k = match choice {
                Some(Choice::Ray(k)) => Some(k),
                _ => None,
            };
            two_ray_game_case2(&map.source, &h, a, k, cap)?
        }
        (case, Some(c)) => {
            return Err(Error::InvalidInput(format!("choice {c} does not apply to {case}")));
        }
        (NfiCase::SquareIso, None) => unreachable!(),
    };
    let mut residual = ToricBirationalMap {
        matrix: map.matrix.clone(),
        source: link.target.clone(),
        target: map.target.clone(),
    };
    if is_square_isomorphism(&residual) {
        link.matrix = residual.matrix.clone();
        link.target = map.target.clone();
        residual = ToricBirationalMap::identity(map.target.clone());
    }
    Ok((link, residual))
}

pub fn untwist_once(
    map: &ToricBirationalMap,
    h_target: &MonomialLinearSystem,
    policy: &Policy,
    cap: usize,
) -> Result<(SarkisovLink, ToricBirationalMap)> {
    match policy {
        Policy::First => untwist_with_choice(map, h_target, None, None, cap),
        Policy::Index(k) => {
            let choice = match nfi_case(map, h_target)? {
                NfiCase::Case1 => Some(Choice::Extraction(k - 1)),
                _ => None,
            };
            untwist_with_choice(map, h_target, choice, None, cap)
        }
        Policy::Scaling(a) => untwist_with_choice(map, h_target, None, a.as_ref(), cap),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UntwistingSequence {
    pub initial: ToricBirationalMap,
    pub system: MonomialLinearSystem,
    pub links: Vec<SarkisovLink>,
    /// The residual map after each link.
    pub residuals: Vec<ToricBirationalMap>,
    /// Degrees of the initial map and of each residual.
    pub degrees: Vec<SarkisovDegree>,
    pub augmented: Vec<AugmentedSarkisovDegree>,
    pub weight: WeightFunction,
}

impl UntwistingSequence {
    pub fn new(initial: ToricBirationalMap, system: MonomialLinearSystem, weight: WeightFunction) -> Result<UntwistingSequence> {
        let (d, a) = stage_degrees(&initial, &system, &weight)?;
        Ok(UntwistingSequence {
            initial,
            system,
            links: Vec::new(),
            residuals: Vec::new(),
            degrees: vec![d],
            augmented: vec![a],
            weight,
        })
    }

    pub fn current(&self) -> &ToricBirationalMap {
        self.residuals.last().unwrap_or(&self.initial)
    }

    pub fn push(&mut self, link: SarkisovLink, residual: ToricBirationalMap) -> Result<()> {
        let (d, a) = stage_degrees(&residual, &self.system, &self.weight)?;
        self.links.push(link);
        self.residuals.push(residual);
        self.degrees.push(d);
        self.augmented.push(a);
        Ok(())
    }

    pub fn is_complete(&self) -> bool {
        is_square_isomorphism(self.current())
    }

    /// Final residual matrix times the product of the link matrices.
    pub fn composite(&self) -> IntMatrix {
        let n = self.initial.source.total.dim();
        let mut m = linalg::identity(n);
        for l in &self.links {
            m = linalg::mat_mul(&l.matrix, &m, n);
        }
        linalg::mat_mul(&self.current().matrix, &m, n)
    }

    pub fn composite_matches(&self) -> bool {
        self.composite() == self.initial.matrix
    }
}

fn stage_degrees(
    map: &ToricBirationalMap,
    h_target: &MonomialLinearSystem,
    w: &WeightFunction,
) -> Result<(SarkisovDegree, AugmentedSarkisovDegree)> {
    let h = map.pull_back(h_target)?;
    let d = degree_of_system(&map.source, &h)?;
    let a = augmented_from_degree(&map.source, &h, &d, w)?;
    Ok((d, a))
}

#[derive(Clone, Debug)]
pub struct FactorizeOptions {
    pub policy: Policy,
    pub max_links: usize,
    pub max_mmp_steps: usize,
    pub weight: WeightFunction,
}

impl Default for FactorizeOptions {
    fn default() -> Self {
        FactorizeOptions {
            policy: Policy::First,
            max_links: DEFAULT_STEP_CAP,
            max_mmp_steps: DEFAULT_STEP_CAP,
            weight: WeightFunction::minus(crate::rat::rat(1, 2)).unwrap(),
        }
    }
}

/// Untwists until the residual is a square isomorphism. On failure the
/// sequence built so far is returned with the error.
pub fn factorize_partial(
    map: &ToricBirationalMap,
    h_target: &MonomialLinearSystem,
    opts: &FactorizeOptions,
) -> (Option<UntwistingSequence>, Option<Error>) {
    let mut seq = match UntwistingSequence::new(map.clone(), h_target.clone(), opts.weight.clone()) {
        Ok(s) => s,
        Err(e) => return (None, Some(e)),
    };
    while !seq.is_complete() {
        if seq.links.len() >= opts.max_links {
            return (Some(seq), Some(Error::StepCapExceeded(opts.max_links)));
        }
        let step = untwist_once(seq.current(), h_target, &opts.policy, opts.max_mmp_steps)
            .and_then(|(link, residual)| seq.push(link, residual));
        if let Err(e) = step {
            return (Some(seq), Some(e));
        }
    }
    (Some(seq), None)
}

pub fn factorize(
    map: &ToricBirationalMap,
    h_target: &MonomialLinearSystem,
    opts: &FactorizeOptions,
) -> Result<UntwistingSequence> {
    match factorize_partial(map, h_target, opts) {
        (Some(seq), None) => Ok(seq),
        (_, Some(e)) => Err(e),
        (None, None) => unreachable!(),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MonotonicityRow {
    pub link: usize,
    pub label: String,
    pub case: u8,
    pub before: SarkisovDegree,
    pub after: SarkisovDegree,
    pub augmented_before: AugmentedSarkisovDegree,
    pub augmented_after: AugmentedSarkisovDegree,
    pub checks: Vec<Check>,
}

impl MonotonicityRow {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MonotonicityReport {
    pub rows: Vec<MonotonicityRow>,
}

impl MonotonicityReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(MonotonicityRow::passed)
    }
}

/// Per-link checks against the degree ledger of `seq`, with the augmented
/// degrees recomputed for `w`.
pub fn monotonicity_report(seq: &UntwistingSequence, w: &WeightFunction) -> Result<MonotonicityReport> {
    let stages: Vec<&ToricBirationalMap> = std::iter::once(&seq.initial).chain(&seq.residuals).collect();
    if seq.degrees.len() != stages.len() {
        return Err(Error::InvalidInput("degree ledger length differs from the stage count".into()));
    }
    let mut aug = Vec::with_capacity(stages.len());
    for (map, d) in stages.iter().zip(&seq.degrees) {
        let h = map.pull_back(&seq.system)?;
        aug.push(augmented_from_degree(&map.source, &h, d, w)?);
    }
    let mut rows = Vec::new();
    for (i, link) in seq.links.iter().enumerate() {
        let (b, a) = (&seq.degrees[i], &seq.degrees[i + 1]);
        let (ab, aa) = (&aug[i], &aug[i + 1]);
        let case1 = matches!(link.choice, Choice::Extraction(_));
        let ivb = link.subtype == Some(LinkSubtype::IVb);
        let mut checks = vec![
            Check::new("augmented degree non-increasing", aa <= ab, format!("{ab} -> {aa}")),
            Check::new("augmented degree strictly decreasing", ivb || aa < ab, format!("{ab} -> {aa}")),
            Check::new("1/mu non-decreasing", a.mu <= b.mu, format!("mu {} -> {}", b.mu, a.mu)),
        ];
        if case1 {
            checks.push(Check::new("degree strictly decreasing", a < b, format!("{b} -> {a}")));
            if a.mu == b.mu && a.c == b.c {
                checks.push(Check::new("crepant count drops", a.e < b.e, format!("{} -> {}", b.e, a.e)));
            }
        }
        if link.subtype == Some(LinkSubtype::IIIb) {
            let (rs, rt) = (link.source.base.class_rank(), link.target.base.class_rank());
            checks.push(Check::new("base rank drops by one", rt + 1 == rs, format!("{rs} -> {rt}")));
        }
        rows.push(MonotonicityRow {
            link: i,
            label: link.label(),
            case: if case1 { 1 } else { 2 },
            before: b.clone(),
            after: a.clone(),
            augmented_before: ab.clone(),
            augmented_after: aa.clone(),
            checks,
        });
    }
    Ok(MonotonicityReport { rows })
}

/// Like [`monotonicity_report`], failing on the first violated check.
pub fn verify_monotonic(seq: &UntwistingSequence, w: &WeightFunction) -> Result<MonotonicityReport> {
    let report = monotonicity_report(seq, w)?;
    for row in &report.rows {
        if let Some(c) = row.checks.iter().find(|c| !c.passed) {
            return Err(Error::MonotonicityViolation {
                link: row.link,
                reason: format!("{}: {}", c.name, c.detail),
            });
        }
    }
    Ok(report)
}
