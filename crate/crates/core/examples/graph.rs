//! Build the untwisting graph of the Cremona map and print it as dot.
//!
//! ```text
//! cargo run --example graph | dot -Tsvg > cremona.svg
//! ```

use std::path::Path;

use toric_sarkisov::graph::{build_graph, export_graph, verify_graph, ExportFormat, GraphCaps};
use toric_sarkisov::io::{self, JobFile};

fn main() -> toric_sarkisov::Result<()> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/cremona.json");
    let job = io::read::<JobFile>(&path)?.to_job()?;

    let g = build_graph(&job.map, &job.system, &GraphCaps::default())?;
    let report = verify_graph(&g)?;
    eprintln!(
        "{} vertices, {} edges, {} paths; {} policy runs embed",
        report.vertices, report.edges, report.paths, report.policy_runs
    );
    print!("{}", export_graph(&g, ExportFormat::Dot));
    Ok(())
}
