//! On-disk documents: fans, models, linear systems and jobs.
//!
//! Reference coefficients in a system document follow the ray order of the fan
//! document they are read against. Fans are stored with their rays sorted, so
//! loaders permute coefficients into that order.

use std::cmp::Ordering;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cone::LatticeVector;
use crate::degrees::{AugmentedSarkisovDegree, SarkisovDegree};
use crate::error::{Error, Result};
use crate::fan::{Fan, FanFile};
use crate::linalg::IntMatrix;
use crate::rat::{format_rat, int, parse_rat};
use crate::toric::{complete_system, is_integral_ample, InvariantDivisor, MonomialLinearSystem, ToricMoriFibreSpace};
use crate::untwist::{
    default_scaling_divisor, pullback_from_base, Choice, LinkKind, LinkStep, LinkSubtype, MonotonicityReport,
    ToricBirationalMap, UntwistingSequence,
};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SystemFile {
    pub points: Vec<Vec<i64>>,
    pub reference: Vec<String>,
    pub scale: String,
}

/// A Mori fibre space document. A missing base means the base is a point.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModelFile {
    pub total: FanFile,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base: Option<FanFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub projection: Option<IntMatrix>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct JobFile {
    pub source: ModelFile,
    pub target: ModelFile,
    pub matrix: IntMatrix,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system: Option<SystemFile>,
}

/// Any document the tool reads, told apart by its keys.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum Document {
    Job(JobFile),
    Model(ModelFile),
    System(SystemFile),
    Fan(FanFile),
}

/// A parsed job: the map and the system on its target.
#[derive(Clone, Debug)]
pub struct Job {
    pub map: ToricBirationalMap,
    pub system: MonomialLinearSystem,
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))
}

pub fn parse<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::InvalidInput(e.to_string()))
}

pub fn read<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    parse(&read_text(path)?).map_err(|e| match e {
        Error::InvalidInput(m) => Error::InvalidInput(format!("{}: {m}", path.display())),
        other => other,
    })
}

impl ModelFile {
    /// Builds the model without checking the Mori fibre space conditions.
    pub fn to_model(&self) -> Result<ToricMoriFibreSpace> {
        let total = Fan::try_from(self.total.clone())?;
        match (&self.base, &self.projection) {
            (None, None) => Ok(ToricMoriFibreSpace::over_point(total)),
            (Some(b), Some(p)) => ToricMoriFibreSpace::new(total, Fan::try_from(b.clone())?, p.clone()),
            (Some(b), None) if b.lattice_dim == 0 => Ok(ToricMoriFibreSpace::over_point(total)),
            (Some(_), None) => Err(Error::InvalidInput("model has a base but no projection".into())),
            (None, Some(_)) => Err(Error::InvalidInput("model has a projection but no base".into())),
        }
    }

    pub fn from_model(xs: &ToricMoriFibreSpace) -> ModelFile {
        let over_point = xs.base.dim() == 0;
        ModelFile {
            total: xs.total.fan().clone().into(),
            base: (!over_point).then(|| xs.base.fan().clone().into()),
            projection: (!over_point).then(|| xs.projection.clone()),
        }
    }
}

impl SystemFile {
    /// Reads the system against `fan_file`, whose ray order the reference follows.
    pub fn to_system(&self, fan_file: &FanFile) -> Result<MonomialLinearSystem> {
        let fan = Fan::try_from(fan_file.clone())?;
        if self.reference.len() != fan_file.rays.len() {
            return Err(Error::InvalidInput(format!(
                "reference has {} coefficients for {} rays",
                self.reference.len(),
                fan_file.rays.len()
            )));
        }
        if self.points.iter().any(|p| p.len() != fan.lattice_dim()) {
            return Err(Error::InvalidInput("point dimension does not match the fan".into()));
        }
        let mut coeffs = vec![int(0); fan.rays().len()];
        for (ray, s) in fan_file.rays.iter().zip(&self.reference) {
            let i = fan
                .ray_index(&crate::cone::primitive_vector(ray)?)
                .ok_or_else(|| Error::InvalidInput(format!("ray {ray:?} not in fan")))?;
            coeffs[i] = parse_rat(s)?;
        }
        MonomialLinearSystem::new(self.points.clone(), InvariantDivisor::new(coeffs), parse_rat(&self.scale)?)
    }

    pub fn from_system(h: &MonomialLinearSystem) -> SystemFile {
        SystemFile {
            points: h.points().to_vec(),
            reference: h.reference().coefficients.iter().map(format_rat).collect(),
            scale: format_rat(h.scale()),
        }
    }
}

/// `|−K′ + j·f′*A′|` for the smallest `j ≥ 1` making the divisor integral and
/// ample, with `A′` the sum of the base divisors. Over a point this is `|−K′|`,
/// or its smallest integral ample multiple.
pub fn default_target_system(target: &ToricMoriFibreSpace) -> Result<MonomialLinearSystem> {
    let n = target.total.ray_count();
    let k = InvariantDivisor::anticanonical(n);
    let a = if target.base.dim() == 0 {
        InvariantDivisor::zero(n)
    } else {
        pullback_from_base(target, &default_scaling_divisor(target))?
    };
    for j in 1..=32 {
        let d = k.add(&a.scaled(&int(j)));
        for m in 1..=32 {
            let dm = d.scaled(&int(m));
            if is_integral_ample(&target.total, &dm) {
                return complete_system(&target.total, &dm);
            }
        }
        if target.base.dim() == 0 {
            break;
        }
    }
    Err(Error::InvalidInput("no integral ample multiple of -K + f*A found; pass a system".into()))
}

impl JobFile {
    pub fn to_job(&self) -> Result<Job> {
        let source = self.source.to_model()?;
        let target = self.target.to_model()?;
        source.validate().map_err(|e| Error::InvalidInput(format!("source: {e}")))?;
        target.validate().map_err(|e| Error::InvalidInput(format!("target: {e}")))?;
        let map = ToricBirationalMap::new(self.matrix.clone(), source, target)?;
        let system = match &self.system {
            Some(s) => s.to_system(&self.target.total)?,
            None => default_target_system(&map.target)?,
        };
        system.check_on(&map.target.total)?;
        Ok(Job { map, system })
    }

    pub fn from_job(map: &ToricBirationalMap, h: Option<&MonomialLinearSystem>) -> JobFile {
        JobFile {
            source: ModelFile::from_model(&map.source),
            target: ModelFile::from_model(&map.target),
            matrix: map.matrix.clone(),
            system: h.map(SystemFile::from_system),
        }
    }
}

pub fn to_pretty_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("document serializes") + "\n"
}

/// `<`, `=` or `>`.
pub fn order_symbol(o: Ordering) -> &'static str {
    match o {
        Ordering::Less => "<",
        Ordering::Equal => "=",
        Ordering::Greater => ">",
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TraceLink<'a> {
    pub index: usize,
    pub kind: LinkKind,
    pub subtype: Option<LinkSubtype>,
    pub choice: Choice,
    pub extraction: Option<&'a LatticeVector>,
    pub steps: &'a [LinkStep],
    pub target: ModelFile,
    pub matrix: &'a IntMatrix,
    pub degree_before: &'a SarkisovDegree,
    pub degree_after: &'a SarkisovDegree,
    pub degree_order: &'static str,
    pub augmented_before: &'a AugmentedSarkisovDegree,
    pub augmented_after: &'a AugmentedSarkisovDegree,
    pub augmented_order: &'static str,
}

/// The factorization trace document.
#[derive(Clone, Debug, Serialize)]
pub struct Trace<'a> {
    pub weight: String,
    pub links: Vec<TraceLink<'a>>,
    pub complete: bool,
    pub composite: IntMatrix,
    pub composite_matches: bool,
    pub monotonicity: Option<&'a MonotonicityReport>,
    pub error: Option<String>,
}

pub fn trace<'a>(seq: &'a UntwistingSequence, report: Option<&'a MonotonicityReport>, error: Option<&Error>) -> Trace<'a> {
    let links = seq
        .links
        .iter()
        .enumerate()
        .map(|(i, l)| TraceLink {
            index: i,
            kind: l.kind,
            subtype: l.subtype,
            choice: l.choice,
            extraction: l.extraction.as_ref(),
            steps: &l.steps,
            target: ModelFile::from_model(&l.target),
            matrix: &l.matrix,
            degree_before: &seq.degrees[i],
            degree_after: &seq.degrees[i + 1],
            degree_order: order_symbol(seq.degrees[i].cmp(&seq.degrees[i + 1])),
            augmented_before: &seq.augmented[i],
            augmented_after: &seq.augmented[i + 1],
            augmented_order: order_symbol(seq.augmented[i].cmp(&seq.augmented[i + 1])),
        })
        .collect();
    Trace {
        weight: seq.weight.to_string(),
        links,
        complete: seq.is_complete(),
        composite: seq.composite(),
        composite_matches: seq.composite_matches(),
        monotonicity: report,
        error: error.map(Error::to_string),
    }
}
