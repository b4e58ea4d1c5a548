//! Toric MMP steps: the two extremal rays of F1, and a flip of a 3-fold.
//!
//! ```text
//! cargo run --example mmp
//! ```

use toric_sarkisov::fan::Fan;
use toric_sarkisov::mmp::{classify_contraction, execute_step, relative_mori_cone};
use toric_sarkisov::toric::{Contraction, ToricVariety};

fn main() -> toric_sarkisov::Result<()> {
    let f1 = ToricVariety::new(Fan::new(
        2,
        vec![vec![1, 0], vec![0, 1], vec![-1, 1], vec![0, -1]],
        vec![vec![0, 1], vec![1, 2], vec![2, 3], vec![0, 3]],
    )?);
    for ray in relative_mori_cone(&f1, &Contraction::point())? {
        let step = execute_step(&f1, &ray)?;
        println!(
            "F1: ray {:?} K.R = {} -> {:?}, target has {} rays",
            ray.class,
            ray.canonical_degree(),
            classify_contraction(&ray),
            step.target.rays().len()
        );
    }

    // a + b = c + d: the cone over the quadrilateral split along cd flips to ab
    let x = ToricVariety::new(Fan::new(
        3,
        vec![vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 1], vec![1, 1, -1], vec![-1, -1, 0]],
        vec![vec![0, 2, 4], vec![2, 1, 4], vec![1, 3, 4], vec![3, 0, 4], vec![0, 2, 3], vec![1, 2, 3]],
    )?);
    for ray in relative_mori_cone(&x, &Contraction::point())? {
        let step = execute_step(&x, &ray)?;
        println!("3-fold: ray {:?} -> {:?}", ray.class, step.kind);
        if let Some((old, new)) = step.flipped.first() {
            println!("  removed {old:?}");
            println!("  added   {new:?}");
        }
    }
    Ok(())
}
