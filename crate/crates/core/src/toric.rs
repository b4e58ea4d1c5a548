//! Toric varieties, Mori fibre spaces, invariant divisors and monomial linear systems.

use std::collections::BTreeSet;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::cone::{self, ConeFacets, LatticeVector};
use crate::error::{Error, Result};
use crate::fan::Fan;
use crate::intersection::{wall_curves, WallCurve};
use crate::linalg::{self, IntMatrix};
use crate::rat::{int, Rat};

/// A toric variety, given by its fan.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ToricVariety {
    fan: Fan,
}

impl ToricVariety {
    pub fn new(fan: Fan) -> ToricVariety {
        ToricVariety { fan }
    }

    pub fn fan(&self) -> &Fan {
        &self.fan
    }

    pub fn dim(&self) -> usize {
        self.fan.lattice_dim()
    }

    pub fn ray_count(&self) -> usize {
        self.fan.rays().len()
    }

    /// `rank Cl(X) = #rays − dim` for complete varieties.
    pub fn class_rank(&self) -> usize {
        self.ray_count() - self.dim()
    }

    pub fn is_complete(&self) -> bool {
        self.fan.is_complete()
    }

    pub fn is_q_factorial(&self) -> bool {
        self.fan.is_simplicial()
    }

    pub fn is_smooth(&self) -> bool {
        self.fan.is_smooth()
    }

    /// ψ, the piecewise-linear function with value 1 on every ray (`K = −Σ D_i`).
    pub fn psi(&self, w: &[i64]) -> Option<Rat> {
        let ones = vec![Rat::one(); self.ray_count()];
        self.fan.pl_eval(&ones, w)
    }

    /// A lattice point other than 0 and the rays with ψ ≤ 1, if any.
    /// Requires a simplicial fan.
    pub fn non_terminal_witness(&self) -> Option<LatticeVector> {
        self.parallelepiped_witness(|depth| depth <= &Rat::one())
    }

    /// A lattice point with ψ < 1, if any.
    pub fn non_canonical_witness(&self) -> Option<LatticeVector> {
        self.parallelepiped_witness(|depth| depth < &Rat::one())
    }

    fn parallelepiped_witness(&self, bad: impl Fn(&Rat) -> bool) -> Option<LatticeVector> {
        for c in self.fan.max_cones() {
            let gens = self.fan.cone_rays(c);
            if gens.len() != self.dim() {
                continue;
            }
            for (p, depth) in cone::parallelepiped_points(&gens) {
                if bad(&depth) {
                    return Some(p);
                }
            }
        }
        None
    }

    pub fn is_terminal(&self) -> bool {
        self.is_q_factorial() && self.non_terminal_witness().is_none()
    }
}

/// A toric Mori fibre space `X → S`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ToricMoriFibreSpace {
    pub total: ToricVariety,
    pub base: ToricVariety,
    /// Lattice surjection `N_X → N_S`, as `dim S` rows of length `dim X`.
    pub projection: IntMatrix,
}

/// Outcome of one structural check.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: &str, passed: bool, detail: impl Into<String>) -> Check {
        Check {
            name: name.to_string(),
            passed,
            detail: detail.into(),
        }
    }
}

/// A toric contraction target `Z` with the lattice map `N_X → N_Z`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Contraction {
    pub fan: Fan,
    pub projection: IntMatrix,
}

impl Contraction {
    pub fn point() -> Contraction {
        Contraction {
            fan: Fan::point(),
            projection: Vec::new(),
        }
    }

    pub fn image(&self, v: &[i64]) -> Vec<i64> {
        linalg::mat_vec(&self.projection, v)
    }

    /// Whether the wall curve on the cone `wall` of `x` is contracted to a point.
    pub fn contracts_wall(&self, x: &Fan, wall: &[usize]) -> bool {
        let nz = self.fan.lattice_dim();
        if nz == 0 {
            return true;
        }
        let mut p = vec![0i64; x.lattice_dim()];
        for &i in wall {
            for (pj, vj) in p.iter_mut().zip(&x.rays()[i]) {
                *pj += vj;
            }
        }
        let img = self.image(&p);
        self.fan.max_cones().iter().any(|c| {
            let f = ConeFacets::compute(&self.fan.cone_rays(c), nz);
            f.rank == nz && f.contains_in_relative_interior(&img)
        })
    }

    /// Every maximal cone of `x` maps into a cone of the target fan.
    pub fn is_compatible(&self, x: &Fan) -> bool {
        let nz = self.fan.lattice_dim();
        if nz == 0 {
            return true;
        }
        let facets: Vec<ConeFacets> = self
            .fan
            .max_cones()
            .iter()
            .map(|c| ConeFacets::compute(&self.fan.cone_rays(c), nz))
            .collect();
        x.max_cones().iter().all(|c| {
            let imgs: Vec<Vec<i64>> = c.iter().map(|&i| self.image(&x.rays()[i])).collect();
            facets.iter().any(|f| imgs.iter().all(|v| f.contains(v)))
        })
    }
}

impl ToricMoriFibreSpace {
    pub fn new(total: Fan, base: Fan, projection: IntMatrix) -> Result<ToricMoriFibreSpace> {
        if projection.len() != base.lattice_dim() || projection.iter().any(|r| r.len() != total.lattice_dim()) {
            return Err(Error::InvalidInput("projection matrix has the wrong shape".into()));
        }
        Ok(ToricMoriFibreSpace {
            total: ToricVariety::new(total),
            base: ToricVariety::new(base),
            projection,
        })
    }

    pub fn over_point(total: Fan) -> ToricMoriFibreSpace {
        ToricMoriFibreSpace {
            total: ToricVariety::new(total),
            base: ToricVariety::new(Fan::point()),
            projection: Vec::new(),
        }
    }

    pub fn contraction(&self) -> Contraction {
        Contraction {
            fan: self.base.fan().clone(),
            projection: self.projection.clone(),
        }
    }

    /// Wall curves of `X` contracted over `S`.
    pub fn contracted_curves(&self) -> Vec<WallCurve> {
        let z = self.contraction();
        wall_curves(self.total.fan())
            .into_iter()
            .filter(|c| z.contracts_wall(self.total.fan(), &c.wall))
            .collect()
    }

    /// `ρ(X/S) = rank Cl(X) − rank Cl(S)`.
    pub fn relative_rank(&self) -> i64 {
        self.total.class_rank() as i64 - self.base.class_rank() as i64
    }

    /// Saturated kernel of the projection, in row Hermite normal form.
    pub fn fibre_lattice(&self) -> IntMatrix {
        if self.projection.is_empty() {
            return linalg::identity(self.total.dim());
        }
        linalg::integer_kernel(&self.projection, self.total.dim())
    }

    pub fn is_surjective(&self) -> bool {
        self.projection.is_empty() || crate::fan::cone_multiplicity(&self.projection) == 1
    }

    /// All Mori fibre space conditions, each reported separately.
    pub fn checks(&self) -> Vec<Check> {
        let x = &self.total;
        let mut out = vec![
            Check::new("X complete", x.is_complete(), ""),
            Check::new("X Q-factorial", x.is_q_factorial(), ""),
        ];
        let fp = x.fan().check_fan_property();
        out.push(Check::new("X fan", fp.is_ok(), fp.err().map(|e| e.to_string()).unwrap_or_default()));
        let terminal = x.is_q_factorial() && x.non_terminal_witness().is_none();
        out.push(Check::new(
            "X terminal",
            terminal,
            x.is_q_factorial()
                .then(|| x.non_terminal_witness().map(|w| format!("witness {w:?}")).unwrap_or_default())
                .unwrap_or_default(),
        ));
        out.push(Check::new("S complete", self.base.is_complete(), ""));
        out.push(Check::new("S Q-factorial", self.base.is_q_factorial(), ""));
        out.push(Check::new("projection surjective", self.is_surjective(), ""));
        let compatible = self.contraction().is_compatible(x.fan());
        out.push(Check::new("projection maps fan to fan", compatible, ""));
        let rho = self.relative_rank();
        out.push(Check::new("relative rank 1", rho == 1, format!("rho(X/S) = {rho}")));
        if x.is_q_factorial() && x.is_complete() && compatible {
            let curves = self.contracted_curves();
            let bad: Vec<&WallCurve> = curves.iter().filter(|c| !c.canonical_degree().is_negative()).collect();
            out.push(Check::new(
                "-K ample over S",
                !curves.is_empty() && bad.is_empty(),
                if curves.is_empty() {
                    "no contracted curves".to_string()
                } else {
                    bad.first().map(|c| format!("wall {:?} has K.C >= 0", c.wall)).unwrap_or_default()
                },
            ));
        } else {
            out.push(Check::new("-K ample over S", false, "not checkable"));
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        match self.checks().into_iter().find(|c| !c.passed) {
            None => Ok(()),
            Some(c) => Err(Error::InvalidInput(format!("not a Mori fibre space: {} failed {}", c.name, c.detail))),
        }
    }
}

/// An invariant ℚ-divisor `Σ d_i D_i`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct InvariantDivisor {
    #[serde(with = "crate::rat::serde_rat_vec")]
    pub coefficients: Vec<Rat>,
}

impl InvariantDivisor {
    pub fn new(coefficients: Vec<Rat>) -> InvariantDivisor {
        InvariantDivisor { coefficients }
    }

    pub fn zero(n: usize) -> InvariantDivisor {
        InvariantDivisor::new(vec![Rat::zero(); n])
    }

    /// `−K = Σ D_i`.
    pub fn anticanonical(n: usize) -> InvariantDivisor {
        InvariantDivisor::new(vec![Rat::one(); n])
    }

    pub fn is_zero(&self) -> bool {
        self.coefficients.iter().all(Zero::is_zero)
    }

    pub fn add(&self, other: &InvariantDivisor) -> InvariantDivisor {
        InvariantDivisor::new(self.coefficients.iter().zip(&other.coefficients).map(|(a, b)| a + b).collect())
    }

    pub fn scaled(&self, c: &Rat) -> InvariantDivisor {
        InvariantDivisor::new(self.coefficients.iter().map(|a| a * c).collect())
    }
}

/// The system `c·{div(χ^m) + D : m ∈ M}` and its real convex hull.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MonomialLinearSystem {
    points: Vec<LatticeVector>,
    reference: InvariantDivisor,
    #[serde(with = "crate::rat::serde_rat")]
    scale: Rat,
}

impl MonomialLinearSystem {
    pub fn new(points: Vec<LatticeVector>, reference: InvariantDivisor, scale: Rat) -> Result<MonomialLinearSystem> {
        if points.is_empty() {
            return Err(Error::InvalidInput("linear system has no points".into()));
        }
        let d = points[0].len();
        if points.iter().any(|p| p.len() != d) {
            return Err(Error::InvalidInput("points have different dimensions".into()));
        }
        if scale.is_negative() {
            return Err(Error::InvalidInput("negative scale".into()));
        }
        let set: BTreeSet<LatticeVector> = points.into_iter().collect();
        Ok(MonomialLinearSystem {
            points: set.into_iter().collect(),
            reference,
            scale,
        })
    }

    pub fn points(&self) -> &[LatticeVector] {
        &self.points
    }

    pub fn reference(&self) -> &InvariantDivisor {
        &self.reference
    }

    pub fn scale(&self) -> &Rat {
        &self.scale
    }

    pub fn with_scale(&self, scale: Rat) -> MonomialLinearSystem {
        MonomialLinearSystem {
            points: self.points.clone(),
            reference: self.reference.clone(),
            scale,
        }
    }

    /// Checks dimensions against `x` and that every member is effective.
    pub fn check_on(&self, x: &ToricVariety) -> Result<()> {
        if self.points[0].len() != x.dim() {
            return Err(Error::InvalidInput("linear system lives in another lattice".into()));
        }
        if self.reference.coefficients.len() != x.ray_count() {
            return Err(Error::InvalidInput("reference divisor length differs from the ray count".into()));
        }
        for m in &self.points {
            for (v, d) in x.fan().rays().iter().zip(&self.reference.coefficients) {
                if (int(linalg::dot(m, v)) + d).is_negative() {
                    return Err(Error::InvalidInput(format!("member for {m:?} is not effective")));
                }
            }
        }
        Ok(())
    }

    /// `φ_D(w) + min_m ⟨m, w⟩`, the multiplicity of a general member along `w`.
    pub fn mult(&self, x: &ToricVariety, w: &[i64]) -> Option<Rat> {
        let phi = x.fan().pl_eval(&self.reference.coefficients, w)?;
        let min = self.points.iter().map(|m| linalg::dot(m, w)).min().unwrap();
        Some(phi + int(min))
    }

    /// `H · C` for the unscaled system.
    pub fn degree_on(&self, curve: &WallCurve) -> Rat {
        curve.dot(&self.reference.coefficients)
    }
}

/// A toric divisorial valuation: a primitive vector and the smallest cone of
/// `X` containing it (ray indices).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ToricValuation {
    pub vector: LatticeVector,
    pub host_cone: Vec<usize>,
}

impl ToricValuation {
    pub fn new(x: &ToricVariety, w: &[i64]) -> Result<ToricValuation> {
        if !cone::is_primitive(w) || w.len() != x.dim() {
            return Err(Error::InvalidInput(format!("{w:?} is not a primitive lattice vector")));
        }
        let host = x
            .fan()
            .minimal_cone(w)
            .ok_or_else(|| Error::InvalidInput(format!("{w:?} lies in no cone")))?;
        Ok(ToricValuation {
            vector: w.to_vec(),
            host_cone: host,
        })
    }

    pub fn is_exceptional(&self) -> bool {
        self.host_cone.len() != 1
    }
}

/// `a(w) = ψ(w) − c·mult(w)`.
pub fn log_discrepancy(x: &ToricVariety, h: &MonomialLinearSystem, w: &ToricValuation) -> Result<Rat> {
    let psi = x
        .psi(&w.vector)
        .ok_or_else(|| Error::InvalidInput(format!("{:?} lies in no cone", w.vector)))?;
    let mult = h.mult(x, &w.vector).expect("located above");
    Ok(psi - h.scale() * mult)
}

/// Splits `H` into its mobile part and fixed divisor. The fixed coefficient at
/// ray `v` is `min_m ⟨m, v⟩ + d_v`.
pub fn fixed_mobile_decomposition(x: &ToricVariety, h: &MonomialLinearSystem) -> (MonomialLinearSystem, InvariantDivisor) {
    let fixed: Vec<Rat> = x
        .fan()
        .rays()
        .iter()
        .zip(&h.reference.coefficients)
        .map(|(v, d)| int(h.points.iter().map(|m| linalg::dot(m, v)).min().unwrap()) + d)
        .collect();
    let mobile_ref: Vec<Rat> = h.reference.coefficients.iter().zip(&fixed).map(|(d, f)| d - f).collect();
    let mobile = MonomialLinearSystem {
        points: h.points.clone(),
        reference: InvariantDivisor::new(mobile_ref),
        scale: h.scale.clone(),
    };
    (mobile, InvariantDivisor::new(fixed))
}

pub fn is_mobile(x: &ToricVariety, h: &MonomialLinearSystem) -> bool {
    fixed_mobile_decomposition(x, h).1.is_zero()
}

/// Pulls `h` back along the lattice isomorphism `matrix: N_X → N_{X'}`.
/// Points become `Lᵀ m'` and the coefficient at a ray `u` of `X` is `φ_{D'}(L u)`.
pub fn total_transform(
    x: &ToricVariety,
    x_target: &ToricVariety,
    matrix: &IntMatrix,
    h: &MonomialLinearSystem,
) -> Result<MonomialLinearSystem> {
    if linalg::det(matrix).abs() != 1 {
        return Err(Error::InvalidInput("map matrix is not unimodular".into()));
    }
    let n = x.dim();
    let lt = linalg::transpose(matrix, n);
    let points: Vec<LatticeVector> = h.points.iter().map(|m| linalg::mat_vec(&lt, m)).collect();
    let reference: Vec<Rat> = x
        .fan()
        .rays()
        .iter()
        .map(|u| {
            x_target
                .fan()
                .pl_eval(&h.reference.coefficients, &linalg::mat_vec(matrix, u))
                .ok_or_else(|| Error::InvalidInput("target fan is not complete".into()))
        })
        .collect::<Result<_>>()?;
    MonomialLinearSystem::new(points, InvariantDivisor::new(reference), h.scale.clone())
}

/// Lattice points of `P_D = {m : ⟨m, v_i⟩ + d_i ≥ 0}` for a complete fan.
pub fn polytope_points(x: &ToricVariety, d: &InvariantDivisor) -> Result<Vec<LatticeVector>> {
    let n = x.dim();
    let rays = x.fan().rays();
    let mut lo = vec![i64::MAX; n];
    let mut hi = vec![i64::MIN; n];
    let mut any = false;
    for subset in cone::combinations(rays.len(), n) {
        let a: Vec<Vec<Rat>> = subset.iter().map(|&i| linalg::rat_vec(&rays[i])).collect();
        if linalg::rank(&subset.iter().map(|&i| rays[i].clone()).collect::<Vec<_>>()) < n {
            continue;
        }
        let b: Vec<Rat> = subset.iter().map(|&i| -d.coefficients[i].clone()).collect();
        let Some(m) = linalg::solve(&a, &b, n) else { continue };
        let feasible = rays
            .iter()
            .zip(&d.coefficients)
            .all(|(v, di)| !(linalg::rat_dot(&m, &linalg::rat_vec(v)) + di).is_negative());
        if !feasible {
            continue;
        }
        any = true;
        for j in 0..n {
            use num_traits::ToPrimitive;
            lo[j] = lo[j].min(m[j].floor().to_integer().to_i64().unwrap());
            hi[j] = hi[j].max(m[j].ceil().to_integer().to_i64().unwrap());
        }
    }
    if !any {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    cone::for_each_box_point(&lo, &hi, |m| {
        if rays
            .iter()
            .zip(&d.coefficients)
            .all(|(v, di)| !(int(linalg::dot(m, v)) + di).is_negative())
        {
            out.push(m.to_vec());
        }
    });
    out.sort();
    Ok(out)
}

/// The complete linear system `|D|` as a monomial system at scale 1.
pub fn complete_system(x: &ToricVariety, d: &InvariantDivisor) -> Result<MonomialLinearSystem> {
    let pts = polytope_points(x, d)?;
    MonomialLinearSystem::new(pts, d.clone(), Rat::one())
}

/// Whether `D` is Cartier with integral local data (every maximal cone has an
/// integral `m_σ`) and ample (positive on every wall curve).
pub fn is_integral_ample(x: &ToricVariety, d: &InvariantDivisor) -> bool {
    let n = x.dim();
    for c in x.fan().max_cones() {
        let a: Vec<Vec<Rat>> = c.iter().map(|&i| linalg::rat_vec(&x.fan().rays()[i])).collect();
        let b: Vec<Rat> = c.iter().map(|&i| -d.coefficients[i].clone()).collect();
        match linalg::solve(&a, &b, n) {
            Some(m) if m.iter().all(crate::rat::is_integral) => {}
            _ => return false,
        }
    }
    wall_curves(x.fan()).iter().all(|c| c.dot(&d.coefficients).is_positive())
}

/// `µ` with `H + µK ≡ 0` over the base, from any contracted wall curve.
pub fn pseff_threshold_mu(xs: &ToricMoriFibreSpace, h: &MonomialLinearSystem) -> Result<Rat> {
    let curves = xs.contracted_curves();
    let mut mu: Option<Rat> = None;
    for c in &curves {
        let hc = h.degree_on(c);
        if !hc.is_positive() {
            return Err(Error::NotRelativelyAmple(format!("H·C = {} on the curve of wall {:?}", crate::rat::format_rat(&hc), c.wall)));
        }
        let m = hc / -c.canonical_degree();
        match &mu {
            Some(prev) if *prev != m => {
                return Err(Error::InvalidState("H is not proportional to K over the base".into()));
            }
            _ => mu = Some(m),
        }
    }
    mu.ok_or_else(|| Error::InvalidInput("no curve is contracted over the base".into()))
}
