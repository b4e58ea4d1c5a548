//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on failure.
//!
//! Every numeric comparison is exact over the rationals. Wall-clock limits are
//! pinned per criterion in `LIMITS`.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use num_traits::One;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};

use common::props::*;
use common::{data, load_job, random_surface_systems, SurfaceOracle, SURFACES};
use toric_sarkisov::degrees::{degree_of, SarkisovDegree, WeightFunction};
use toric_sarkisov::fan::FanFile;
use toric_sarkisov::graph::{build_graph, export_graph, verify_graph, ExportFormat, GraphCaps, SarkisovGraph};
use toric_sarkisov::io::{self, ModelFile};
use toric_sarkisov::linalg::IntMatrix;
use toric_sarkisov::rat::{int, rat};
use toric_sarkisov::thresholds::{canonical_threshold, lc_threshold};
use toric_sarkisov::toric::{fixed_mobile_decomposition, total_transform, MonomialLinearSystem, ToricMoriFibreSpace, ToricVariety};
use toric_sarkisov::untwist::{
    factorize, is_square_isomorphism, verify_monotonic, FactorizeOptions, LinkKind, LinkStep, LinkSubtype, SarkisovLink,
    UntwistingSequence,
};
use toric_sarkisov::{Error, ExtCount, ExtRat, Fan, Rat};

const LIMITS: [u64; 7] = [5, 10, 60, 60, 60, 60, 60];
const ORACLE_HEIGHT: i64 = 10;
const RANDOM_SYSTEMS_PER_SURFACE: usize = 5;
const PROPERTY_CASES: u32 = 256;

type Outcome = std::result::Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn half() -> WeightFunction {
    WeightFunction::minus(rat(1, 2)).unwrap()
}

fn cremona_sequence() -> UntwistingSequence {
    let job = load_job("cremona.json");
    factorize(&job.map, &job.system, &FactorizeOptions::default()).unwrap()
}

fn cremona_graph() -> SarkisovGraph {
    let job = load_job("cremona.json");
    build_graph(&job.map, &job.system, &GraphCaps::default()).unwrap()
}

fn criterion_1() -> Outcome {
    let job = load_job("cremona.json");
    let d = degree_of(&job.map, &job.system).map_err(|e| e.to_string())?;
    let want = SarkisovDegree {
        mu: int(2),
        c: ExtRat::Finite(rat(1, 3)),
        e: ExtCount::Finite(3),
    };
    ensure(d == want, || format!("engine degree {d}"))?;
    let h = job.map.pull_back(&job.system).unwrap();
    let oracle = SurfaceOracle::new(&job.map.source.total, &h);
    let c = oracle.canonical_threshold(ORACLE_HEIGHT);
    let ExtRat::Finite(cv) = &c else { return Err("oracle c is infinite".into()) };
    let e = oracle.crepant(cv, ORACLE_HEIGHT).len() as u64;
    let oracle_degree = SarkisovDegree {
        mu: oracle.p2_mu(),
        c: c.clone(),
        e: ExtCount::Finite(e),
    };
    ensure(oracle_degree == d, || format!("oracle degree {oracle_degree} vs engine {d}"))?;
    Ok(format!("engine {d} = oracle {oracle_degree} at height {ORACLE_HEIGHT}"))
}

fn criterion_2() -> Outcome {
    let seq = cremona_sequence();
    ensure(seq.is_complete(), || "residual is not a square isomorphism".into())?;
    ensure(is_square_isomorphism(seq.current()), || "residual check failed".into())?;
    let minus_i: IntMatrix = vec![vec![-1, 0], vec![0, -1]];
    ensure(seq.composite() == minus_i, || format!("composite {:?}", seq.composite()))?;
    let first = seq.links.first().ok_or("no links")?;
    ensure(first.kind == LinkKind::I, || format!("first link {}", first.label()))?;
    let f1 = io::read::<ModelFile>(&data("f1.json")).unwrap().to_model().unwrap();
    ensure(
        first.target.base.dim() == 1 && first.target.total.ray_count() == 4 && self_intersections(&first.target) == self_intersections(&f1),
        || "first link does not end on F1 over P1".into(),
    )?;
    let report = verify_monotonic(&seq, &half()).map_err(|e| e.to_string())?;
    ensure(report.passed(), || "monotonicity row failed".into())?;
    ensure(seq.links.iter().all(|l| l.subtype != Some(LinkSubtype::IVb)), || "IVb link in dim 2".into())?;
    for (i, w) in seq.augmented.windows(2).enumerate() {
        ensure(w[1] < w[0], || format!("augmented degree not strictly decreasing at link {i}"))?;
    }
    let labels: Vec<String> = seq.links.iter().map(SarkisovLink::label).collect();
    Ok(format!("{} links [{}], composite -I, {} rows pass", seq.links.len(), labels.join(" "), report.rows.len()))
}

/// Sorted `k_i` with `v_{i-1} + v_{i+1} = k_i·v_i` around a complete surface
/// fan; `−k_i` is the self-intersection of `D_i`.
fn self_intersections(xs: &ToricMoriFibreSpace) -> Vec<i64> {
    let fan = xs.total.fan();
    let rays = fan.rays();
    let mut out: Vec<i64> = (0..rays.len())
        .map(|i| {
            let nb: Vec<&Vec<i64>> = fan
                .max_cones()
                .iter()
                .filter(|c| c.contains(&i))
                .map(|c| &rays[if c[0] == i { c[1] } else { c[0] }])
                .collect();
            let v = &rays[i];
            let s = [nb[0][0] + nb[1][0], nb[0][1] + nb[1][1]];
            if v[0] != 0 {
                s[0] / v[0]
            } else {
                s[1] / v[1]
            }
        })
        .collect();
    out.sort();
    out
}

fn criterion_3() -> Outcome {
    let corpus = random_surface_systems(0xacce97, RANDOM_SYSTEMS_PER_SURFACE);
    ensure(corpus.len() >= 20, || format!("only {} systems", corpus.len()))?;
    let mut finite = 0;
    for (name, x, h) in &corpus {
        let oracle = SurfaceOracle::new(x, h);
        let height = oracle.height();
        let c = canonical_threshold(x, h).map_err(|e| e.to_string())?;
        let lct = lc_threshold(x, h).map_err(|e| e.to_string())?;
        let (oc, olct) = (oracle.canonical_threshold(height), oracle.lc_threshold(height));
        ensure(c == oc, || format!("{name} {:?}: c {c} vs oracle {oc}", h.points()))?;
        ensure(lct == olct, || format!("{name} {:?}: lct {lct} vs oracle {olct}", h.points()))?;
        ensure(c <= lct, || format!("{name}: c {c} > lct {lct}"))?;
        finite += usize::from(!c.is_infinite());
    }
    Ok(format!(
        "{} systems over {} surfaces agree exactly ({finite} with base points)",
        corpus.len(),
        SURFACES.len()
    ))
}

fn run_property<S: Strategy>(name: &str, strategy: S, test: impl Fn(S::Value) -> std::result::Result<(), TestCaseError>) -> std::result::Result<(), String> {
    let mut runner = TestRunner::new(Config {
        cases: PROPERTY_CASES,
        failure_persistence: None,
        ..Config::default()
    });
    runner.run(&strategy, test).map_err(|e| format!("{name}: {e}"))
}

fn criterion_4() -> Outcome {
    run_property("degree order", (degree(), degree(), degree()), |(x, y, z)| degree_order(&x, &y, &z))?;
    run_property("augmented order", (augmented(), augmented(), augmented()), |(x, y, z)| augmented_order(&x, &y, &z))?;
    run_property("weight definition", (weight_fn(), 0i64..=30, 1i64..=12), |(w, n, d)| weight_definition(&w, n, d))?;
    run_property("weight superadditivity", (weight_fn(), superadditive_terms()), |(w, t)| weight_superadditive(&w, &t))?;
    run_property("summed weight", (weight_fn(), -36i64..12, 1i64..=12), |(w, n, d)| summed_weight_direct(&w, n, d))?;
    run_property("summed weight monotone", (weight_fn(), -24i64..12, -24i64..12, 1i64..=12), |(w, a, b, d)| {
        summed_weight_monotone(&w, a, b, d)
    })?;
    run_property("log discrepancy members", (any::<u64>(), 0usize..SURFACES.len()), |(s, i)| log_discrepancy_members(s, i))?;
    let w = |a| WeightFunction::minus(a).unwrap();
    let w_half = toric_sarkisov::degrees::summed_weight(&w(rat(1, 2)), &rat(1, 2)).unwrap();
    ensure(w_half == rat(1, 2), || format!("W(w_1/2, 1/2) = {w_half}"))?;
    let w_nine = toric_sarkisov::degrees::summed_weight(&w(rat(9, 10)), &rat(2, 3)).unwrap();
    ensure(w_nine == int(1), || format!("W(w_9/10, 2/3) = {w_nine}"))?;
    Ok(format!("7 properties x {PROPERTY_CASES} cases, W(w_1/2, 1/2) = 1/2, W(w_9/10, 2/3) = 1"))
}

/// Re-checks every intermediate model of `link`, taken from a stage whose map to
/// the target has matrix `matrix` and degree `deg`: Q-factorial, and the pair
/// with the birational transform of the target system canonical at
/// `t = min(c, 1/µ)`. Surfaces admit no flips.
fn link_is_safe(
    link: &SarkisovLink,
    matrix: &IntMatrix,
    target: &ToricMoriFibreSpace,
    system: &MonomialLinearSystem,
    deg: &SarkisovDegree,
) -> std::result::Result<usize, String> {
    let inv_mu = ExtRat::Finite(Rat::one() / &deg.mu);
    let t = if inv_mu < deg.c { inv_mu } else { deg.c.clone() };
    if link.source.total.dim() == 2 {
        ensure(link.flip_count() == 0, || format!("{} link has flips in dim 2", link.label()))?;
    }
    let mut checked = 0;
    for step in &link.steps {
        let fan = match step {
            LinkStep::Extraction { model, .. } => model,
            LinkStep::Mmp(m) => &m.target,
        };
        let y = ToricVariety::new(fan.clone());
        ensure(y.is_q_factorial(), || format!("{} link: intermediate model not Q-factorial", link.label()))?;
        let h = total_transform(&y, &target.total, matrix, system).map_err(|e| e.to_string())?;
        let mobile = fixed_mobile_decomposition(&y, &h).0;
        let ct = canonical_threshold(&y, &mobile).map_err(|e| e.to_string())?;
        ensure(ct >= t, || format!("{} link: intermediate pair has threshold {ct} < {t}", link.label()))?;
        checked += 1;
    }
    Ok(checked)
}

fn criterion_5() -> Outcome {
    let mut models = 0;
    let mut links = 0;
    let seq = cremona_sequence();
    let stages: Vec<_> = std::iter::once(&seq.initial).chain(&seq.residuals).collect();
    for (i, link) in seq.links.iter().enumerate() {
        models += link_is_safe(link, &stages[i].matrix, &seq.initial.target, &seq.system, &seq.degrees[i])?;
        links += 1;
    }
    for (i, w) in seq.degrees.windows(2).enumerate() {
        ensure(w[1].mu <= w[0].mu, || format!("1/mu decreased at link {i}"))?;
    }
    let g = cremona_graph();
    for e in &g.edges {
        let deg = &g.vertices[e.from].degree;
        models += link_is_safe(&e.link, &g.map.matrix, &g.map.target, &g.system, deg)?;
        let after = &g.vertices[e.to].degree;
        ensure(after.mu <= deg.mu, || format!("1/mu decreased on edge v{} -> v{}", e.from, e.to))?;
        links += 1;
    }
    Ok(format!("{links} links, {models} intermediate pairs canonical, no flips, 1/mu nondecreasing"))
}

fn criterion_6() -> Outcome {
    let g = cremona_graph();
    let report = verify_graph(&g).map_err(|e| e.to_string())?;
    let sources = (0..g.vertices.len()).filter(|&v| !g.edges.iter().any(|e| e.to == v)).count();
    let sinks = (0..g.vertices.len()).filter(|&v| g.out_edges(v).next().is_none()).count();
    ensure(sources == 1 && sinks == 1, || format!("{sources} sources, {sinks} sinks"))?;
    let again = cremona_graph();
    for format in [ExportFormat::Dot, ExportFormat::Structured] {
        ensure(export_graph(&g, format) == export_graph(&again, format), || "export differs across builds".into())?;
    }
    Ok(format!(
        "{} vertices, {} edges, {} paths replayed, {} policy runs embedded, exports byte-identical",
        report.vertices, report.edges, report.paths, report.policy_runs
    ))
}

fn criterion_7() -> Outcome {
    let mut seq = cremona_sequence();
    let last = seq.degrees.len() - 1;
    seq.degrees[last].mu = &seq.degrees[0].mu + int(1);
    match verify_monotonic(&seq, &half()) {
        Err(Error::MonotonicityViolation { .. }) => {}
        other => return Err(format!("forged ledger gave {other:?}")),
    }

    let g = cremona_graph();
    let mut broken = g.clone();
    broken.edges.remove(broken.edges.len() / 2);
    ensure(verify_graph(&broken).is_err(), || "graph with a deleted edge verified".into())?;

    let fan = io::read::<FanFile>(&data("non-simplicial.json")).unwrap();
    let fan = ToricMoriFibreSpace::over_point(Fan::try_from(fan).map_err(|e| e.to_string())?);
    let q = fan.checks().into_iter().find(|c| c.name.contains("Q-factorial")).ok_or("no Q-factorial check")?;
    ensure(!q.passed && fan.validate().is_err(), || "non-simplicial fan validated".into())?;

    let status = Command::new(env!("CARGO_BIN_EXE_sarkisov"))
        .args(["factorize", "--input", data("dim4-flip.json").to_str().unwrap()])
        .output()
        .map_err(|e| e.to_string())?
        .status;
    ensure(status.code() == Some(4), || format!("dim-4 job exited {status}"))?;
    Ok("forged ledger, deleted edge, non-simplicial fan and dim-4 job all rejected".into())
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 7] = [
        ("Cremona degree vs brute-force oracle", criterion_1),
        ("Cremona factorization", criterion_2),
        ("threshold oracle equivalence", criterion_3),
        ("property suite", criterion_4),
        ("MMP safety", criterion_5),
        ("untwisting graph", criterion_6),
        ("negative controls", criterion_7),
    ];
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let limit = Duration::from_secs(LIMITS[i]);
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(detail) if elapsed > limit => Err(format!("{detail}; over the time limit")),
            other => other,
        };
        let (tag, detail) = match &outcome {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        println!(
            "criterion {} {tag} [{name}] {:.2}s/{}s: {detail}",
            i + 1,
            elapsed.as_secs_f64(),
            limit.as_secs()
        );
        failed += usize::from(outcome.is_err());
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
