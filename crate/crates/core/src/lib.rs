//! Exact toric Sarkisov program.
//!
//! Toric Mori fibre spaces with monomial linear systems: Sarkisov degrees,
//! 2-ray games, factorization of monomial birational maps into Sarkisov
//! links, augmented degrees with difficulty functions, and the untwisting graph.

pub mod cone;
pub mod degrees;
pub mod error;
pub mod fan;
pub mod graph;
pub mod intersection;
pub mod linalg;
pub mod io;
pub mod mmp;
pub mod oracle;
pub mod rat;
pub mod thresholds;
pub mod toric;
pub mod untwist;

pub use cone::{primitive_vector, Cone, LatticeVector};
pub use error::{Error, Result};
pub use fan::Fan;
pub use rat::{ExtCount, ExtRat, Rat};
