//! Canonical and log canonical thresholds of the Cremona sextic system on the
//! plane, with a brute-force cross-check.
//!
//! ```text
//! cargo run --example thresholds
//! ```

use toric_sarkisov::fan::Fan;
use toric_sarkisov::oracle;
use toric_sarkisov::thresholds::{canonical_threshold, crepant_divisor_count, lc_threshold, local_canonical_threshold};
use toric_sarkisov::toric::{complete_system, InvariantDivisor, ToricVariety};
use toric_sarkisov::untwist::ToricBirationalMap;
use toric_sarkisov::toric::ToricMoriFibreSpace;
use toric_sarkisov::{Cone, ExtRat};

fn main() -> toric_sarkisov::Result<()> {
    let fan = Fan::new(2, vec![vec![1, 0], vec![0, 1], vec![-1, -1]], vec![vec![0, 1], vec![1, 2], vec![0, 2]])?;
    let p2 = ToricMoriFibreSpace::over_point(fan.clone());
    let x = ToricVariety::new(fan);

    // |-K| pulled back through (x, y) -> (1/x, 1/y): plane sextics with three double points
    let cremona = ToricBirationalMap::new(vec![vec![-1, 0], vec![0, -1]], p2.clone(), p2)?;
    let h = cremona.pull_back(&complete_system(&x, &InvariantDivisor::anticanonical(3))?)?;

    let c = canonical_threshold(&x, &h)?;
    println!("canonical threshold {c}");
    println!("lc threshold        {}", lc_threshold(&x, &h)?);

    let origin = Cone::new(2, vec![vec![1, 0], vec![0, 1]])?;
    println!("at the fixed point of cone(e1, e2): {}", local_canonical_threshold(&x, &h, &origin)?);

    if let ExtRat::Finite(c) = &c {
        let crepant = crepant_divisor_count(&x, &h.with_scale(c.clone()))?;
        let vs: Vec<_> = crepant.divisors.iter().map(|v| v.vector.clone()).collect();
        println!("{} crepant valuations: {vs:?}", crepant.count);
    }

    let height = oracle::default_height_bound(&x, &h);
    println!("enumeration up to height {height}: {}", oracle::canonical_threshold(&x, &h, height));
    Ok(())
}
