use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use toric_sarkisov::degrees::{augmented_from_degree, degree_of_system, AugmentedSarkisovDegree, SarkisovDegree, WeightFunction};
use toric_sarkisov::graph::{build_graph, export_graph, verify_graph, ExportFormat, GraphCaps};
use toric_sarkisov::io::{self, order_symbol, Document, Job, JobFile, ModelFile};
use toric_sarkisov::mmp::DEFAULT_STEP_CAP;
use toric_sarkisov::toric::{Check, ToricMoriFibreSpace};
use toric_sarkisov::untwist::{factorize_partial, monotonicity_report, nfi_case, FactorizeOptions, NfiCase, Policy, ToricBirationalMap};
use toric_sarkisov::{oracle, Error, ExtRat, Result};

#[derive(Parser)]
#[command(name = "sarkisov", about = "Toric Sarkisov program: degrees, factorizations and untwisting graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the Sarkisov degree and augmented degree of a map.
    Degree(JobArgs),
    /// Factorize a map into Sarkisov links.
    Factorize(JobArgs),
    /// Build, verify and export the untwisting graph.
    Graph(JobArgs),
    /// Check every invariant of a fan, model, system or job document.
    Validate(JobArgs),
}

#[derive(Args)]
struct JobArgs {
    /// Job, model, fan or system document.
    #[arg(long)]
    input: PathBuf,
    /// System on the target, overriding the job's.
    #[arg(long)]
    system: Option<PathBuf>,
    /// Target model; the input is then the source model and the map is the identity.
    #[arg(long)]
    target: Option<PathBuf>,
    #[arg(long, default_value = "first")]
    policy: Policy,
    #[arg(long, default_value = "alpha:1/2,closure:minus")]
    weight: WeightFunction,
    #[arg(long, default_value_t = DEFAULT_STEP_CAP)]
    max_steps: usize,
    #[arg(long, default_value_t = 16)]
    max_depth: usize,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Cross-check the canonical threshold by enumeration up to this height.
    #[arg(long)]
    height_bound: Option<i64>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Dot,
    Structured,
    Text,
}

/// Exit code 1 without an error message of its own.
struct Failed;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut out = String::new();
    let result = match &cli.command {
        Command::Degree(a) => cmd_degree(a, &mut out),
        Command::Factorize(a) => cmd_factorize(a, &mut out),
        Command::Graph(a) => cmd_graph(a, &mut out),
        Command::Validate(a) => cmd_validate(a, &mut out),
    };
    print!("{out}");
    match result {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(Failed)) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

type CmdResult = Result<std::result::Result<(), Failed>>;

fn load_job(a: &JobArgs) -> Result<Job> {
    let mut file: JobFile = match (io::parse::<Document>(&io::read_text(&a.input)?)?, &a.target) {
        (Document::Job(j), None) => j,
        (Document::Model(source), Some(t)) => {
            let target: ModelFile = io::read(t)?;
            let n = source.total.lattice_dim;
            JobFile {
                source,
                target,
                matrix: toric_sarkisov::linalg::identity(n),
                system: None,
            }
        }
        (Document::Job(_), Some(_)) => return Err(Error::InvalidInput("--target is only used with a model input".into())),
        _ => return Err(Error::InvalidInput(format!("{} is not a job document", a.input.display()))),
    };
    if let Some(s) = &a.system {
        file.system = Some(io::read(s)?);
    }
    file.to_job()
}

fn text_or(a: &JobArgs, default: Format) -> Result<Format> {
    match a.format.unwrap_or(default) {
        Format::Dot if default != Format::Dot => Err(Error::InvalidInput("dot output is only available for graph".into())),
        f => Ok(f),
    }
}

#[derive(Serialize)]
struct DegreeReport {
    case: NfiCase,
    degree: SarkisovDegree,
    augmented: AugmentedSarkisovDegree,
    weight: String,
    identity_degree: SarkisovDegree,
    identity_augmented: AugmentedSarkisovDegree,
    degree_order: &'static str,
    augmented_order: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle: Option<OracleReport>,
}

#[derive(Serialize)]
struct OracleReport {
    height_bound: i64,
    canonical_threshold: ExtRat,
    agrees: bool,
}

fn degrees(map: &ToricBirationalMap, job: &Job, w: &WeightFunction) -> Result<(SarkisovDegree, AugmentedSarkisovDegree)> {
    let h = map.pull_back(&job.system)?;
    let d = degree_of_system(&map.source, &h)?;
    let aug = augmented_from_degree(&map.source, &h, &d, w)?;
    Ok((d, aug))
}

fn cmd_degree(a: &JobArgs, out: &mut String) -> CmdResult {
    let format = text_or(a, Format::Text)?;
    let job = load_job(a)?;
    let (degree, augmented) = degrees(&job.map, &job, &a.weight)?;
    let (identity_degree, identity_augmented) = degrees(&ToricBirationalMap::identity(job.map.target.clone()), &job, &a.weight)?;
    let oracle = match a.height_bound {
        None => None,
        Some(hb) if hb < 1 => return Err(Error::InvalidInput("height bound must be positive".into())),
        Some(hb) => {
            let h = job.map.pull_back(&job.system)?;
            let c = oracle::canonical_threshold(&job.map.source.total, &h, hb);
            Some(OracleReport {
                height_bound: hb,
                agrees: c == degree.c,
                canonical_threshold: c,
            })
        }
    };
    let report = DegreeReport {
        case: nfi_case(&job.map, &job.system)?,
        degree_order: order_symbol(degree.cmp(&identity_degree)),
        augmented_order: order_symbol(augmented.cmp(&identity_augmented)),
        degree,
        augmented,
        weight: a.weight.to_string(),
        identity_degree,
        identity_augmented,
        oracle,
    };
    if format == Format::Structured {
        out.push_str(&io::to_pretty_json(&report));
    } else {
        let _ = writeln!(out, "case: {}", report.case);
        let _ = writeln!(out, "degree (mu, c, e): {}", report.degree);
        let _ = writeln!(out, "augmented (mu, b, rho, d, c', e') with {}: {}", report.weight, report.augmented);
        let _ = writeln!(out, "degree {} identity {}", report.degree_order, report.identity_degree);
        let _ = writeln!(out, "augmented {} identity {}", report.augmented_order, report.identity_augmented);
        if let Some(o) = &report.oracle {
            let _ = writeln!(
                out,
                "oracle c at height {}: {} ({})",
                o.height_bound,
                o.canonical_threshold,
                if o.agrees { "agrees" } else { "DISAGREES" }
            );
        }
    }
    Ok(match &report.oracle {
        Some(o) if !o.agrees => Err(Failed),
        _ => Ok(()),
    })
}

fn cmd_factorize(a: &JobArgs, out: &mut String) -> CmdResult {
    let format = text_or(a, Format::Text)?;
    let job = load_job(a)?;
    let opts = FactorizeOptions {
        policy: a.policy.clone(),
        max_links: a.max_steps,
        max_mmp_steps: a.max_steps,
        weight: a.weight.clone(),
    };
    let (seq, err) = factorize_partial(&job.map, &job.system, &opts);
    let Some(seq) = seq else { return Err(err.expect("no sequence without an error")) };
    let report = monotonicity_report(&seq, &a.weight)?;
    let trace = io::trace(&seq, Some(&report), err.as_ref());
    if format == Format::Structured {
        out.push_str(&io::to_pretty_json(&trace));
    } else {
        let _ = writeln!(out, "start: {} {}", seq.degrees[0], seq.augmented[0]);
        for l in &trace.links {
            let _ = writeln!(
                out,
                "link {}: {} ({}) {} {} {} | {} {} {}",
                l.index,
                seq.links[l.index].label(),
                l.choice,
                l.degree_before,
                l.degree_order,
                l.degree_after,
                l.augmented_before,
                l.augmented_order,
                l.augmented_after
            );
        }
        let _ = writeln!(out, "complete: {}", trace.complete);
        let _ = writeln!(out, "composite: {:?} (matches: {})", trace.composite, trace.composite_matches);
        for row in &report.rows {
            for c in &row.checks {
                let _ = writeln!(out, "link {} {}: {}", row.link, check_line(c), c.detail);
            }
        }
    }
    if let Some(e) = err {
        return Err(e);
    }
    Ok(if report.passed() && trace.composite_matches { Ok(()) } else { Err(Failed) })
}

fn cmd_graph(a: &JobArgs, out: &mut String) -> CmdResult {
    let format = text_or(a, Format::Dot)?;
    let job = load_job(a)?;
    let caps = GraphCaps {
        max_depth: a.max_depth,
        max_mmp_steps: a.max_steps,
        ..GraphCaps::default()
    };
    let g = build_graph(&job.map, &job.system, &caps)?;
    match format {
        Format::Dot => out.push_str(&export_graph(&g, ExportFormat::Dot)),
        Format::Structured => out.push_str(&export_graph(&g, ExportFormat::Structured)),
        Format::Text => {
            let _ = writeln!(out, "vertices: {}", g.vertices.len());
            let _ = writeln!(out, "edges: {}", g.edges.len());
            let _ = writeln!(out, "paths: {}", g.paths().len());
        }
    }
    if let Some(why) = &g.partial {
        return Err(Error::StepCapExceeded(match why.starts_with("depth") {
            true => caps.max_depth,
            false => caps.max_vertices,
        }));
    }
    let report = verify_graph(&g)?;
    if format == Format::Text {
        let _ = writeln!(out, "verified; policy runs embedded: {}", report.policy_runs);
    }
    Ok(Ok(()))
}

fn check_line(c: &Check) -> String {
    format!("{} {}", if c.passed { "PASS" } else { "FAIL" }, c.name)
}

fn model_checks(prefix: &str, m: &ToricMoriFibreSpace) -> Vec<Check> {
    m.checks()
        .into_iter()
        .map(|c| Check::new(&format!("{prefix}{}", c.name), c.passed, c.detail))
        .collect()
}

fn validate_document(path: &Path, target: Option<&Path>) -> Result<Vec<Check>> {
    let doc: Document = io::parse(&io::read_text(path)?)?;
    let mut checks = Vec::new();
    match doc {
        Document::Fan(f) => {
            checks = model_checks("", &ModelFile { total: f, base: None, projection: None }.to_model()?);
        }
        Document::Model(m) => checks = model_checks("", &m.to_model()?),
        Document::Job(j) => {
            let (s, t) = (j.source.to_model()?, j.target.to_model()?);
            checks.extend(model_checks("source ", &s));
            checks.extend(model_checks("target ", &t));
            let map = ToricBirationalMap::new(j.matrix.clone(), s, t.clone());
            checks.push(Check::new("matrix unimodular", map.is_ok(), map.err().map(|e| e.to_string()).unwrap_or_default()));
            if let Some(sys) = &j.system {
                let r = sys.to_system(&j.target.total).and_then(|h| h.check_on(&t.total));
                checks.push(Check::new("system effective on target", r.is_ok(), r.err().map(|e| e.to_string()).unwrap_or_default()));
            }
        }
        Document::System(sys) => {
            let Some(t) = target else {
                return Err(Error::InvalidInput("validating a system needs --target".into()));
            };
            let fan = match io::parse::<Document>(&io::read_text(t)?)? {
                Document::Model(m) => m.total,
                Document::Fan(f) => f,
                _ => return Err(Error::InvalidInput(format!("{} is not a fan or model", t.display()))),
            };
            let x = ModelFile { total: fan.clone(), base: None, projection: None }.to_model()?;
            let h = sys.to_system(&fan)?;
            let r = h.check_on(&x.total);
            checks.push(Check::new("system effective", r.is_ok(), r.err().map(|e| e.to_string()).unwrap_or_default()));
        }
    }
    Ok(checks)
}

fn cmd_validate(a: &JobArgs, out: &mut String) -> CmdResult {
    let format = text_or(a, Format::Text)?;
    let checks = validate_document(&a.input, a.target.as_deref())?;
    if format == Format::Structured {
        out.push_str(&io::to_pretty_json(&checks));
    } else {
        for c in &checks {
            if c.detail.is_empty() {
                let _ = writeln!(out, "{}", check_line(c));
            } else {
                let _ = writeln!(out, "{}: {}", check_line(c), c.detail);
            }
        }
    }
    Ok(if checks.iter().all(|c| c.passed) { Ok(()) } else { Err(Failed) })
}
