//! Weight functions and difficulties of klt boundaries on the plane.
//!
//! ```text
//! cargo run --example difficulty
//! ```

use toric_sarkisov::degrees::{difficulty_klt, klt_profile, summed_weight, WeightFunction};
use toric_sarkisov::fan::Fan;
use toric_sarkisov::rat::{int, rat};
use toric_sarkisov::toric::{InvariantDivisor, ToricVariety};

fn main() -> toric_sarkisov::Result<()> {
    let p2 = ToricVariety::new(Fan::new(2, vec![vec![1, 0], vec![0, 1], vec![-1, -1]], vec![vec![0, 1], vec![1, 2], vec![0, 2]])?);

    let w = WeightFunction::minus(rat(1, 2))?;
    for b in [rat(0, 1), rat(1, 3), rat(1, 2), rat(2, 3)] {
        println!("W[{w}]({b}) = {}", summed_weight(&w, &b)?);
    }

    let line = InvariantDivisor::new(vec![rat(1, 2), int(0), int(0)]);
    println!("d(P2, 1/2 D1) = {}", difficulty_klt(&p2, &line, &w)?);

    let w = WeightFunction::minus(rat(9, 10))?;
    let two_lines = InvariantDivisor::new(vec![rat(2, 3), rat(2, 3), int(0)]);
    let profile = klt_profile(&p2, &two_lines)?;
    for c in &profile.components {
        println!("  component: b = {}, rho = {}", c.coefficient, c.picard_rank);
    }
    println!("d(P2, 2/3 D1 + 2/3 D2) = {}", difficulty_klt(&p2, &two_lines, &w)?);
    Ok(())
}
