//! Sarkisov degree of the quadratic Cremona map of the plane.
//!
//! ```text
//! cargo run --example degree
//! ```

use std::path::Path;

use toric_sarkisov::degrees::{augmented_degree_of, degree_of, WeightFunction};
use toric_sarkisov::io::{self, JobFile};
use toric_sarkisov::rat::rat;
use toric_sarkisov::untwist::nfi_case;

fn main() -> toric_sarkisov::Result<()> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/cremona.json");
    let job = io::read::<JobFile>(&path)?.to_job()?;

    let d = degree_of(&job.map, &job.system)?;
    println!("(mu, c, e) = {d}");
    println!("case: {}", nfi_case(&job.map, &job.system)?);

    for w in [WeightFunction::minus(rat(1, 2))?, WeightFunction::plus(rat(9, 10))?] {
        println!("{w}: {}", augmented_degree_of(&job.map, &job.system, &w)?);
    }
    Ok(())
}
