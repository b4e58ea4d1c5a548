mod common;

use std::process::{Command, Output};

use common::{data, load_job, load_surface, SurfaceOracle};
use toric_sarkisov::degrees::{augmented_degree_of, degree_of, AugmentedSarkisovDegree, SarkisovDegree, WeightFunction};
use toric_sarkisov::graph::{build_graph, export_graph, verify_graph, ExportFormat, GraphCaps};
use toric_sarkisov::rat::{int, rat};
use toric_sarkisov::thresholds::{canonical_threshold, enumerate_low_discrepancy_valuations, lc_threshold};
use toric_sarkisov::toric::{complete_system, log_discrepancy, InvariantDivisor, ToricValuation};
use toric_sarkisov::untwist::{factorize, nfi_case, untwist_once, FactorizeOptions, LinkKind, NfiCase, Policy};
use toric_sarkisov::{Error, ExtCount, ExtRat};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sarkisov")).args(args).output().unwrap()
}

fn run_job(cmd: &str, job: &str, extra: &[&str]) -> (i32, String) {
    let path = data(job);
    let mut args = vec![cmd, "--input", path.to_str().unwrap()];
    args.extend_from_slice(extra);
    let out = run(&args);
    (out.status.code().unwrap(), String::from_utf8(out.stdout).unwrap())
}

fn half() -> WeightFunction {
    WeightFunction::minus(rat(1, 2)).unwrap()
}

#[test]
fn cremona_degree_and_case() {
    let job = load_job("cremona.json");
    let d = degree_of(&job.map, &job.system).unwrap();
    assert_eq!(d.to_string(), "(2, 1/3, 3)");
    assert_eq!(nfi_case(&job.map, &job.system).unwrap(), NfiCase::Case1);
    let a = augmented_degree_of(&job.map, &job.system, &half()).unwrap();
    assert_eq!(a.to_string(), "(2, 0, inf, inf, 1/3, 3)");
}

#[test]
fn identity_degrees() {
    let job = load_job("identity.json");
    assert_eq!(degree_of(&job.map, &job.system).unwrap().to_string(), "(2, inf, 0)");
    assert_eq!(nfi_case(&job.map, &job.system).unwrap(), NfiCase::SquareIso);
    let ruling = load_job("ruling-swap.json");
    assert_eq!(nfi_case(&ruling.map, &ruling.system).unwrap(), NfiCase::Case2);
}

#[test]
fn cremona_pullback_matches_oracle_mu() {
    let job = load_job("cremona.json");
    let h = job.map.pull_back(&job.system).unwrap();
    let oracle = SurfaceOracle::new(&job.map.source.total, &h);
    assert_eq!(oracle.p2_mu(), int(2));
}

#[test]
fn log_discrepancy_examples() {
    let x = load_surface("p2.json");
    let job = load_job("cremona.json");
    let h = job.map.pull_back(&job.system).unwrap();
    let at = |w: &[i64], c| log_discrepancy(&x, &h.with_scale(c), &ToricValuation::new(&x, w).unwrap()).unwrap();
    assert_eq!(at(&[1, 1], int(0)), int(2));
    assert_eq!(at(&[1, 1], rat(1, 3)), int(1));
    assert_eq!(at(&[1, 0], rat(1, 3)), int(1));
}

#[test]
fn threshold_examples() {
    let x = load_surface("p2.json");
    let full = complete_system(&x, &InvariantDivisor::anticanonical(3)).unwrap();
    assert_eq!(canonical_threshold(&x, &full).unwrap(), ExtRat::Infinity);
    let single = toric_sarkisov::toric::MonomialLinearSystem::new(
        vec![vec![0, 0]],
        InvariantDivisor::new(vec![int(3), int(0), int(0)]),
        rat(1, 1),
    )
    .unwrap();
    assert_eq!(lc_threshold(&x, &single).unwrap(), ExtRat::Finite(rat(1, 3)));
}

#[test]
fn low_discrepancy_valuations_match_oracle() {
    let x = load_surface("p2.json");
    let job = load_job("cremona.json");
    let h = job.map.pull_back(&job.system).unwrap();
    let oracle = SurfaceOracle::new(&x, &h);
    for (c, expected) in [(rat(1, 2), vec![[-1, 0], [0, -1], [1, 1]]), (rat(1, 3), vec![])] {
        let got = enumerate_low_discrepancy_valuations(&x, &h.with_scale(c.clone()), &int(1)).unwrap();
        let mut ws: Vec<([i64; 2], _)> = got.iter().map(|(v, a)| ([v.vector[0], v.vector[1]], a.clone())).collect();
        ws.sort();
        assert_eq!(ws, oracle.below(&c, &int(1), 10));
        let vs: Vec<[i64; 2]> = ws.iter().map(|(w, _)| *w).collect();
        assert_eq!(vs, expected);
        assert!(ws.iter().all(|(_, a)| *a == rat(1, 2)));
    }
    let trivial = h.with_scale(int(0));
    assert!(enumerate_low_discrepancy_valuations(&x, &trivial, &int(1)).unwrap().is_empty());
}

#[test]
fn degree_order_examples() {
    let d = |mu, c: (i64, i64)| SarkisovDegree {
        mu: int(mu),
        c: ExtRat::Finite(rat(c.0, c.1)),
        e: ExtCount::Finite(3),
    };
    assert!(d(2, (1, 3)) > d(2, (1, 2)));
    assert!(d(2, (1, 3)) > d(1, (1, 3)));
    assert_eq!(d(2, (1, 3)), d(2, (1, 3)));

    let base = AugmentedSarkisovDegree {
        mu: int(2),
        b: 2,
        rho: ExtCount::Finite(3),
        d: ExtRat::Infinity,
        c_prime: ExtRat::Finite(rat(1, 2)),
        e_prime: ExtCount::Finite(0),
    };
    let rho4 = AugmentedSarkisovDegree { rho: ExtCount::Finite(4), ..base.clone() };
    assert!(base < rho4);
    let c3 = AugmentedSarkisovDegree { c_prime: ExtRat::Finite(rat(1, 3)), ..base.clone() };
    assert!(base < c3);
}

#[test]
fn untwist_policies_on_cremona() {
    let job = load_job("cremona.json");
    let (first, residual) = untwist_once(&job.map, &job.system, &Policy::First, 64).unwrap();
    assert_eq!(first.kind, LinkKind::I);
    assert_eq!(first.target.base.dim(), 1);
    assert_eq!(residual.source, first.target);
    let (second, _) = untwist_once(&job.map, &job.system, &Policy::Index(2), 64).unwrap();
    assert_eq!(second.kind, LinkKind::I);
    assert_ne!(first.extraction, second.extraction);

    let identity = load_job("identity.json");
    let err = untwist_once(&identity.map, &identity.system, &Policy::First, 64).unwrap_err();
    assert!(matches!(err, Error::PreconditionViolation(_)));
    let seq = factorize(&identity.map, &identity.system, &FactorizeOptions::default()).unwrap();
    assert!(seq.links.is_empty());
}

#[test]
fn ruling_swap_is_one_type_iv_link() {
    let job = load_job("ruling-swap.json");
    let seq = factorize(&job.map, &job.system, &FactorizeOptions::default()).unwrap();
    assert_eq!(seq.links.len(), 1);
    assert_eq!(seq.links[0].kind, LinkKind::IV);
    let g = build_graph(&job.map, &job.system, &GraphCaps::default()).unwrap();
    assert_eq!((g.vertices.len(), g.edges.len()), (2, 1));
    verify_graph(&g).unwrap();
    let dot = export_graph(&g, ExportFormat::Dot);
    assert_eq!(dot.matches(" -> v").count(), 1);
    assert!(dot.contains("IVa") || dot.contains("IVb"));
}

#[test]
fn elementary_transformations_are_type_ii() {
    for name in ["elementary-f1-f2.json", "elementary-f2-f1.json", "elementary-f1-f0.json", "elementary-f0-f1.json"] {
        let job = load_job(name);
        let seq = factorize(&job.map, &job.system, &FactorizeOptions::default()).unwrap();
        let kinds: Vec<LinkKind> = seq.links.iter().map(|l| l.kind).collect();
        assert_eq!(kinds, vec![LinkKind::II], "{name}");
        assert!(seq.composite_matches());
    }
}

#[test]
fn bundled_threshold_jobs_match_oracle() {
    for name in ["threshold-p2-cusp.json", "threshold-f1.json", "threshold-f2.json"] {
        let job = load_job(name);
        let x = &job.map.source.total;
        let h = job.map.pull_back(&job.system).unwrap();
        let oracle = SurfaceOracle::new(x, &h);
        assert_eq!(canonical_threshold(x, &h).unwrap(), oracle.canonical_threshold(oracle.height()), "{name}");
        assert_eq!(lc_threshold(x, &h).unwrap(), oracle.lc_threshold(oracle.height()), "{name}");
    }
}

#[test]
fn cli_degree() {
    let (code, out) = run_job("degree", "cremona.json", &[]);
    assert_eq!(code, 0);
    assert!(out.contains("case: Case1"));
    assert!(out.contains("(2, 1/3, 3)"));
    let (code, out) = run_job("degree", "identity.json", &[]);
    assert_eq!(code, 0);
    assert!(out.contains("case: SquareIso"));
    assert!(out.contains("(2, inf, 0)"));
    let (code, out) = run_job("degree", "threshold-f1.json", &["--height-bound", "10"]);
    assert_eq!(code, 0, "{out}");
}

#[test]
fn cli_invalid_input_exits_2() {
    let (code, _) = run_job("degree", "cremona.json", &["--weight", "alpha:2/0,closure:minus"]);
    assert_eq!(code, 2);
    let (code, _) = run_job("degree", "cremona.json", &["--policy", "sideways"]);
    assert_eq!(code, 2);
    let dir = std::env::temp_dir().join(format!("sarkisov-bad-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let bad = dir.join("bad.json");
    let text = std::fs::read_to_string(data("identity.json")).unwrap().replacen("\"2\"", "\"2/0\"", 1);
    std::fs::write(&bad, text).unwrap();
    let out = run(&["degree", "--input", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let missing = run(&["validate", "--input", dir.join("missing.json").to_str().unwrap()]);
    assert_eq!(missing.status.code(), Some(2));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn cli_factorize() {
    let (code, out) = run_job("factorize", "cremona.json", &[]);
    assert_eq!(code, 0, "{out}");
    assert!(out.contains("complete: true"));
    assert!(!out.contains("FAIL"));
    let (code, out) = run_job("factorize", "ruling-swap.json", &[]);
    assert_eq!(code, 0);
    assert_eq!(out.lines().filter(|l| l.starts_with("link 0: IV")).count(), 1);
    let (code, out) = run_job("factorize", "cremona.json", &["--format", "structured"]);
    assert_eq!(code, 0);
    let doc: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(doc["complete"], serde_json::Value::Bool(true));
    assert_eq!(doc["links"][0]["kind"], "I");
}

#[test]
fn cli_factorize_step_cap_exits_3() {
    let (code, _) = run_job("factorize", "cremona.json", &["--max-steps", "1"]);
    assert_eq!(code, 3);
}

#[test]
fn cli_graph() {
    let (code, out) = run_job("graph", "identity.json", &[]);
    assert_eq!(code, 0);
    assert_eq!(out.matches("[label=").count(), 1);
    let (code, a) = run_job("graph", "cremona.json", &[]);
    assert_eq!(code, 0);
    let (_, b) = run_job("graph", "cremona.json", &[]);
    assert_eq!(a, b);
    let (code, partial) = run_job("graph", "cremona.json", &["--max-depth", "2"]);
    assert_eq!(code, 3);
    assert!(partial.starts_with("digraph"));
}

#[test]
fn cli_validate() {
    let (code, out) = run_job("validate", "p2.json", &[]);
    assert_eq!(code, 0);
    assert!(!out.contains("FAIL"));
    let (code, out) = run_job("validate", "non-simplicial.json", &[]);
    assert_eq!(code, 1);
    assert!(out.contains("FAIL X Q-factorial"));
    let (code, out) = run_job("validate", "f1-no-projection.json", &[]);
    assert_eq!(code, 1);
    assert!(out.contains("FAIL relative rank 1"));
    for name in ["f0.json", "f1.json", "f2.json", "f3.json", "cremona.json"] {
        assert_eq!(run_job("validate", name, &[]).0, 0, "{name}");
    }
}

#[test]
fn cli_output_is_deterministic() {
    for cmd in ["degree", "factorize"] {
        for job in ["cremona.json", "ruling-swap.json", "threshold-f2.json"] {
            assert_eq!(run_job(cmd, job, &[]), run_job(cmd, job, &[]), "{cmd} {job}");
        }
    }
}

