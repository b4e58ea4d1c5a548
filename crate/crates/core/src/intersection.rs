//! Intersection numbers of invariant divisors with wall curves of a simplicial fan.

use serde::{Deserialize, Serialize};

use crate::fan::{cone_multiplicity, Fan, Wall};
use crate::linalg::{self, IntMatrix};
use crate::rat::{int, rat_from_i128, Rat};

/// The invariant curve of a wall, with its integer wall relation and the
/// intersection numbers `D_i · C` for every ray `i` of the fan.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WallCurve {
    pub wall: Vec<usize>,
    pub cones: [usize; 2],
    pub outer: [usize; 2],
    /// Primitive integer relation `Σ r_i v_i = 0`, positive on the two outer rays.
    pub relation: Vec<i64>,
    #[serde(with = "crate::rat::serde_rat_vec")]
    pub numbers: Vec<Rat>,
}

impl WallCurve {
    pub fn new(fan: &Fan, wall: &Wall) -> WallCurve {
        let n = fan.lattice_dim();
        let [a, b] = wall.outer;
        let involved: Vec<usize> = [a, b].iter().chain(&wall.rays).copied().collect();
        let rows: IntMatrix = (0..n)
            .map(|j| involved.iter().map(|&i| fan.rays()[i][j]).collect())
            .collect();
        let mut r = linalg::kernel_vector(&rows, involved.len()).expect("wall relation has rank n");
        if r[0] < 0 {
            r.iter_mut().for_each(|x| *x = -*x);
        }
        debug_assert!(r[1] > 0);
        let tau = fan.cone_rays(&wall.rays);
        let sigma_a = if fan.max_cones()[wall.cones[0]].contains(&a) {
            wall.cones[0]
        } else {
            wall.cones[1]
        };
        let m_tau = cone_multiplicity(&tau);
        let m_sa = cone_multiplicity(&fan.cone_rays(&fan.max_cones()[sigma_a]));
        // D_a · C = mult(τ) / mult(τ + v_a)
        let s = int(m_tau) / (int(m_sa) * int(r[0]));
        let mut relation = vec![0i64; fan.rays().len()];
        let mut numbers = vec![int(0); fan.rays().len()];
        for (k, &i) in involved.iter().enumerate() {
            relation[i] = r[k];
            numbers[i] = &s * rat_from_i128(r[k] as i128);
        }
        WallCurve {
            wall: wall.rays.clone(),
            cones: wall.cones,
            outer: wall.outer,
            relation,
            numbers,
        }
    }

    /// `D · C` for an invariant divisor given by its ray coefficients.
    pub fn dot(&self, coefficients: &[Rat]) -> Rat {
        linalg::rat_dot(&self.numbers, coefficients)
    }

    /// `K_X · C`.
    pub fn canonical_degree(&self) -> Rat {
        -self.numbers.iter().sum::<Rat>()
    }

    /// Primitive integer direction of the numerical class.
    pub fn class_key(&self) -> Vec<i64> {
        linalg::primitive_from_rat(&self.numbers)
    }
}

pub fn wall_curves(fan: &Fan) -> Vec<WallCurve> {
    fan.walls().iter().map(|w| WallCurve::new(fan, w)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f1_negative_section() {
        let f1 = Fan::new(
            2,
            vec![vec![1, 0], vec![0, 1], vec![-1, 1], vec![0, -1]],
            vec![vec![0, 1], vec![1, 2], vec![2, 3], vec![3, 0]],
        )
        .unwrap();
        let curves = wall_curves(&f1);
        let e = f1.ray_index(&[0, 1]).unwrap();
        let c = curves.iter().find(|c| c.wall == vec![e]).unwrap();
        assert_eq!(c.numbers[e], int(-1));
        assert_eq!(c.canonical_degree(), int(-1));
        let fibre = curves.iter().find(|c| c.wall == vec![f1.ray_index(&[1, 0]).unwrap()]).unwrap();
        assert_eq!(fibre.canonical_degree(), int(-2));
    }

    #[test]
    fn weighted_projective_line_numbers() {
        // a Fano fan with one A1 point: -K is ample, so every wall has K·C < 0
        let f = Fan::new(2, vec![vec![1, 0], vec![1, 2], vec![-1, -1]], vec![vec![0, 1], vec![1, 2], vec![2, 0]]).unwrap();
        for c in wall_curves(&f) {
            let s: Rat = c.numbers.iter().sum();
            assert!(s > int(0));
        }
    }
}
