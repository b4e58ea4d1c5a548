//! Factorize a job into Sarkisov links and check the degree decreases.
//!
//! ```text
//! cargo run --example factorize [job.json]
//! ```

use std::path::PathBuf;

use toric_sarkisov::io::{self, JobFile};
use toric_sarkisov::untwist::{factorize, verify_monotonic, FactorizeOptions};

fn main() -> toric_sarkisov::Result<()> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/cremona.json"));
    let job = io::read::<JobFile>(&path)?.to_job()?;

    let opts = FactorizeOptions::default();
    let seq = factorize(&job.map, &job.system, &opts)?;
    println!("start {}", seq.degrees[0]);
    for (i, link) in seq.links.iter().enumerate() {
        println!(
            "{:>4}  {} -> {}  ({} rays over a base of dim {})",
            link.label(),
            seq.degrees[i],
            seq.degrees[i + 1],
            link.target.total.ray_count(),
            link.target.base.dim()
        );
    }
    println!("composite {:?}, matches: {}", seq.composite(), seq.composite_matches());

    let report = verify_monotonic(&seq, &opts.weight)?;
    println!("{} links, all monotonicity checks pass", report.rows.len());
    Ok(())
}
