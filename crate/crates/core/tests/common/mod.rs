//! Shared test helpers: bundled data, a seeded corpus of surface systems, and
//! brute-force oracles that recompute ψ and multiplicities from scratch.
#![allow(dead_code)]

use std::path::PathBuf;

use num_traits::{One, Signed, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use toric_sarkisov::fan::FanFile;
use toric_sarkisov::io::{self, Job, JobFile, ModelFile};
use toric_sarkisov::rat::{int, rat};
use toric_sarkisov::toric::{is_integral_ample, polytope_points, InvariantDivisor, MonomialLinearSystem, ToricVariety};
use toric_sarkisov::{ExtRat, Fan, Rat};

pub fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

pub fn load_job(name: &str) -> Job {
    io::read::<JobFile>(&data(name)).unwrap().to_job().unwrap()
}

pub fn load_surface(name: &str) -> ToricVariety {
    let path = data(name);
    match io::read::<ModelFile>(&path) {
        Ok(m) => m.to_model().unwrap().total,
        Err(_) => ToricVariety::new(Fan::try_from(io::read::<FanFile>(&path).unwrap()).unwrap()),
    }
}

pub const SURFACES: [&str; 5] = ["p2.json", "f0.json", "f1.json", "f2.json", "f3.json"];

/// A brute-force model of `(X, H)` on a complete simplicial surface, written
/// without the library's piecewise-linear machinery.
pub struct SurfaceOracle {
    rays: Vec<[i64; 2]>,
    cones: Vec<[usize; 2]>,
    reference: Vec<Rat>,
    points: Vec<[i64; 2]>,
}

fn det(u: [i64; 2], v: [i64; 2]) -> i64 {
    u[0] * v[1] - u[1] * v[0]
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

impl SurfaceOracle {
    pub fn new(x: &ToricVariety, h: &MonomialLinearSystem) -> SurfaceOracle {
        assert_eq!(x.dim(), 2);
        let rays = x.fan().rays().iter().map(|r| [r[0], r[1]]).collect();
        let cones = x.fan().max_cones().iter().map(|c| [c[0], c[1]]).collect();
        SurfaceOracle {
            rays,
            cones,
            reference: h.reference().coefficients.clone(),
            points: h.points().iter().map(|p| [p[0], p[1]]).collect(),
        }
    }

    /// Coordinates `(i, a, j, b)` with `w = a·v_i + b·v_j`, `a, b ≥ 0`.
    fn locate(&self, w: [i64; 2]) -> (usize, Rat, usize, Rat) {
        for &[i, j] in &self.cones {
            let (u, v) = (self.rays[i], self.rays[j]);
            let d = det(u, v);
            let a = rat(det(w, v), d);
            let b = rat(det(u, w), d);
            if !a.is_negative() && !b.is_negative() {
                return (i, a, j, b);
            }
        }
        panic!("fan is not complete at {w:?}");
    }

    pub fn psi(&self, w: [i64; 2]) -> Rat {
        let (_, a, _, b) = self.locate(w);
        a + b
    }

    /// `φ_D(w)`, linear on each cone with value `d_i` at ray `i`.
    pub fn phi(&self, w: [i64; 2]) -> Rat {
        let (i, a, j, b) = self.locate(w);
        a * &self.reference[i] + b * &self.reference[j]
    }

    pub fn mult(&self, w: [i64; 2]) -> Rat {
        let min = self.points.iter().map(|m| m[0] * w[0] + m[1] * w[1]).min().unwrap();
        self.phi(w) + int(min)
    }

    pub fn points(&self) -> &[[i64; 2]] {
        &self.points
    }

    pub fn is_ray(&self, w: [i64; 2]) -> bool {
        self.rays.contains(&w)
    }

    fn primitive(height: i64) -> impl Iterator<Item = [i64; 2]> {
        (-height..=height)
            .flat_map(move |x| (-height..=height).map(move |y| [x, y]))
            .filter(|&[x, y]| gcd(x, y) == 1)
    }

    /// `min ψ/m` over rays and `min (ψ − 1)/m` over exceptional `w`, for `m > 0`.
    pub fn canonical_threshold(&self, height: i64) -> ExtRat {
        let mut best: Option<Rat> = None;
        for w in Self::primitive(height) {
            let m = self.mult(w);
            if !m.is_positive() {
                continue;
            }
            let psi = self.psi(w);
            let t = if self.is_ray(w) { psi / m } else { (psi - Rat::one()) / m };
            if best.as_ref().map_or(true, |b| &t < b) {
                best = Some(t);
            }
        }
        best.map_or(ExtRat::Infinity, ExtRat::Finite)
    }

    pub fn lc_threshold(&self, height: i64) -> ExtRat {
        let mut best: Option<Rat> = None;
        for w in Self::primitive(height) {
            let m = self.mult(w);
            if !m.is_positive() {
                continue;
            }
            let t = self.psi(w) / m;
            if best.as_ref().map_or(true, |b| &t < b) {
                best = Some(t);
            }
        }
        best.map_or(ExtRat::Infinity, ExtRat::Finite)
    }

    /// Exceptional `w` with `ψ(w) − c·mult(w) = 1`, sorted.
    pub fn crepant(&self, c: &Rat, height: i64) -> Vec<[i64; 2]> {
        let mut out: Vec<[i64; 2]> = Self::primitive(height)
            .filter(|&w| !self.is_ray(w) && self.psi(w) - c * self.mult(w) == Rat::one())
            .collect();
        out.sort();
        out
    }

    /// Exceptional `w` with `ψ(w) − c·mult(w) < a0`, sorted.
    pub fn below(&self, c: &Rat, a0: &Rat, height: i64) -> Vec<([i64; 2], Rat)> {
        let mut out: Vec<([i64; 2], Rat)> = Self::primitive(height)
            .filter(|&w| !self.is_ray(w))
            .map(|w| (w, self.psi(w) - c * self.mult(w)))
            .filter(|(_, a)| a < a0)
            .collect();
        out.sort();
        out
    }

    /// Degree of the mobile part on `ℙ²` divided by 3, so that `H ≡ µ(−K)`.
    pub fn p2_mu(&self) -> Rat {
        assert_eq!(self.rays.len(), 3);
        let mut total = Rat::zero();
        for (v, d) in self.rays.iter().zip(&self.reference) {
            let fixed = d + int(self.points.iter().map(|m| m[0] * v[0] + m[1] * v[1]).min().unwrap());
            total += d - fixed;
        }
        total / int(3)
    }

    pub fn height(&self) -> i64 {
        let max = self
            .rays
            .iter()
            .chain(&self.points)
            .flat_map(|v| v.iter().map(|c| c.abs()))
            .max()
            .unwrap_or(1);
        10 * max.max(1)
    }
}

/// A random integral ample reference divisor with coefficients in `0..=3` and
/// a random nonempty subset of at most four of its lattice points.
pub fn random_system(rng: &mut ChaCha8Rng, x: &ToricVariety) -> MonomialLinearSystem {
    loop {
        let d = InvariantDivisor::new((0..x.ray_count()).map(|_| int(rng.gen_range(0..=3))).collect());
        if !is_integral_ample(x, &d) {
            continue;
        }
        let mut pts = polytope_points(x, &d).unwrap();
        pts.shuffle(rng);
        let k = rng.gen_range(1..=pts.len().min(4));
        pts.truncate(k);
        return MonomialLinearSystem::new(pts, d, Rat::one()).unwrap();
    }
}

/// `per_surface` seeded random systems on each bundled surface.
pub fn random_surface_systems(seed: u64, per_surface: usize) -> Vec<(String, ToricVariety, MonomialLinearSystem)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for name in SURFACES {
        let x = load_surface(name);
        for _ in 0..per_surface {
            let h = random_system(&mut rng, &x);
            out.push((name.to_string(), x.clone(), h));
        }
    }
    out
}
pub mod props;
