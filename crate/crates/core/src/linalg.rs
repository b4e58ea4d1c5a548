//! Exact integer and rational linear algebra on small dense matrices.
//!
//! Integer routines work in `i128` internally and convert back to `i64`;
//! desk-scale inputs stay far from overflow.

use num_integer::Integer;
use num_traits::{Signed, Zero};

use crate::rat::{rat_from_i128, Rat};

pub type IntMatrix = Vec<Vec<i64>>;

pub(crate) fn narrow(x: i128) -> i64 {
    i64::try_from(x).expect("lattice coordinate overflow")
}

pub fn gcd_slice(v: &[i64]) -> i64 {
    v.iter().fold(0i64, |g, &x| g.gcd(&x))
}

fn gcd128(v: &[i128]) -> i128 {
    v.iter().fold(0i128, |g, &x| g.gcd(&x))
}

pub fn identity(n: usize) -> IntMatrix {
    (0..n)
        .map(|i| (0..n).map(|j| i64::from(i == j)).collect())
        .collect()
}

pub fn transpose(m: &[Vec<i64>], cols: usize) -> IntMatrix {
    (0..cols).map(|j| m.iter().map(|r| r[j]).collect()).collect()
}

pub fn mat_mul(a: &[Vec<i64>], b: &[Vec<i64>], b_cols: usize) -> IntMatrix {
    a.iter()
        .map(|row| {
            (0..b_cols)
                .map(|j| {
                    narrow(
                        row.iter()
                            .zip(b)
                            .map(|(&x, br)| x as i128 * br[j] as i128)
                            .sum(),
                    )
                })
                .collect()
        })
        .collect()
}

pub fn mat_vec(a: &[Vec<i64>], v: &[i64]) -> Vec<i64> {
    a.iter().map(|row| dot(row, v)).collect()
}

pub fn dot(a: &[i64], b: &[i64]) -> i64 {
    narrow(a.iter().zip(b).map(|(&x, &y)| x as i128 * y as i128).sum())
}

/// Determinant of a square integer matrix (fraction-free Bareiss elimination).
pub fn det(m: &[Vec<i64>]) -> i128 {
    let n = m.len();
    if n == 0 {
        return 1;
    }
    let mut a: Vec<Vec<i128>> = m
        .iter()
        .map(|r| r.iter().map(|&x| x as i128).collect())
        .collect();
    let mut sign = 1i128;
    let mut prev = 1i128;
    for k in 0..n {
        if a[k][k] == 0 {
            match (k + 1..n).find(|&i| a[i][k] != 0) {
                Some(i) => {
                    a.swap(i, k);
                    sign = -sign;
                }
                None => return 0,
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) / prev;
            }
        }
        prev = a[k][k];
    }
    sign * a[n - 1][n - 1]
}

/// Adjugate matrix and determinant, so that `adj * m = det * I`.
pub fn adjugate(m: &[Vec<i64>]) -> (Vec<Vec<i128>>, i128) {
    let n = m.len();
    let d = det(m);
    if n == 1 {
        return (vec![vec![1]], d);
    }
    let mut adj = vec![vec![0i128; n]; n];
    for i in 0..n {
        for j in 0..n {
            let minor: IntMatrix = m
                .iter()
                .enumerate()
                .filter(|&(r, _)| r != i)
                .map(|(_, row)| {
                    row.iter()
                        .enumerate()
                        .filter(|&(c, _)| c != j)
                        .map(|(_, &x)| x)
                        .collect()
                })
                .collect();
            let s = if (i + j) % 2 == 0 { 1 } else { -1 };
            adj[j][i] = s * det(&minor);
        }
    }
    (adj, d)
}

/// Inverse of a unimodular matrix, or `None` if `|det| != 1`.
pub fn inverse_unimodular(m: &[Vec<i64>]) -> Option<IntMatrix> {
    let (adj, d) = adjugate(m);
    if d.abs() != 1 {
        return None;
    }
    Some(
        adj.iter()
            .map(|r| r.iter().map(|&x| narrow(x * d)).collect())
            .collect(),
    )
}

/// Rank over Q of an integer matrix given by rows.
pub fn rank(rows: &[Vec<i64>]) -> usize {
    if rows.is_empty() {
        return 0;
    }
    let cols = rows[0].len();
    let mut a: Vec<Vec<i128>> = rows
        .iter()
        .map(|r| r.iter().map(|&x| x as i128).collect())
        .collect();
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..a.len()).find(|&i| a[i][c] != 0) else {
            continue;
        };
        a.swap(r, p);
        for i in 0..a.len() {
            if i != r && a[i][c] != 0 {
                let (x, y) = (a[r][c], a[i][c]);
                for j in 0..cols {
                    a[i][j] = a[i][j] * x - a[r][j] * y;
                }
                let g = gcd128(&a[i]);
                if g > 1 {
                    a[i].iter_mut().for_each(|v| *v /= g);
                }
            }
        }
        r += 1;
        if r == a.len() {
            break;
        }
    }
    r
}

/// Primitive generator of the kernel of a rank-`(n-1)` integer matrix with `n`
/// columns, via signed maximal minors. `None` if the rank is smaller.
pub fn kernel_vector(rows: &[Vec<i64>], n: usize) -> Option<Vec<i64>> {
    debug_assert_eq!(rows.len() + 1, n);
    let mut v = vec![0i128; n];
    for j in 0..n {
        let minor: IntMatrix = rows
            .iter()
            .map(|r| {
                r.iter()
                    .enumerate()
                    .filter(|&(c, _)| c != j)
                    .map(|(_, &x)| x)
                    .collect()
            })
            .collect();
        let s = if j % 2 == 0 { 1 } else { -1 };
        v[j] = s * det(&minor);
    }
    let g = gcd128(&v);
    if g == 0 {
        return None;
    }
    Some(v.iter().map(|&x| narrow(x / g)).collect())
}

/// Scales a nonzero rational vector by a positive factor to a primitive integer vector.
pub fn primitive_from_rat(v: &[Rat]) -> Vec<i64> {
    let l = v
        .iter()
        .fold(num_bigint::BigInt::from(1), |acc, x| acc.lcm(x.denom()));
    let ints: Vec<num_bigint::BigInt> = v.iter().map(|x| (x * Rat::from_integer(l.clone())).to_integer()).collect();
    let g = ints
        .iter()
        .fold(num_bigint::BigInt::zero(), |acc, x| acc.gcd(x));
    assert!(!g.is_zero(), "zero vector has no primitive multiple");
    ints.iter()
        .map(|x| {
            use num_traits::ToPrimitive;
            (x / &g).to_i64().expect("lattice coordinate overflow")
        })
        .collect()
}

/// Row echelon reduction over Q; returns the reduced rows and pivot columns.
pub fn rref(rows: &[Vec<Rat>], cols: usize) -> (Vec<Vec<Rat>>, Vec<usize>) {
    let mut a = rows.to_vec();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..a.len()).find(|&i| !a[i][c].is_zero()) else {
            continue;
        };
        a.swap(r, p);
        let inv = a[r][c].recip();
        for x in a[r].iter_mut() {
            *x = &*x * &inv;
        }
        for i in 0..a.len() {
            if i != r && !a[i][c].is_zero() {
                let f = a[i][c].clone();
                for j in 0..cols {
                    let t = &a[r][j] * &f;
                    a[i][j] -= t;
                }
            }
        }
        pivots.push(c);
        r += 1;
        if r == a.len() {
            break;
        }
    }
    a.truncate(r);
    (a, pivots)
}

/// Basis of the rational nullspace `{x : rows · x = 0}`.
pub fn nullspace(rows: &[Vec<Rat>], cols: usize) -> Vec<Vec<Rat>> {
    let (red, pivots) = rref(rows, cols);
    let free: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut x = vec![Rat::zero(); cols];
            x[f] = rat_from_i128(1);
            for (row, &p) in red.iter().zip(&pivots) {
                x[p] = -row[f].clone();
            }
            x
        })
        .collect()
}

/// Some solution of `a · x = b`, or `None` if inconsistent.
pub fn solve(a: &[Vec<Rat>], b: &[Rat], cols: usize) -> Option<Vec<Rat>> {
    let aug: Vec<Vec<Rat>> = a
        .iter()
        .zip(b)
        .map(|(row, y)| {
            let mut r = row.clone();
            r.push(y.clone());
            r
        })
        .collect();
    let (red, pivots) = rref(&aug, cols + 1);
    if pivots.last() == Some(&cols) {
        return None;
    }
    let mut x = vec![Rat::zero(); cols];
    for (row, &p) in red.iter().zip(&pivots) {
        x[p] = row[cols].clone();
    }
    Some(x)
}

pub fn to_rat_rows(m: &[Vec<i64>]) -> Vec<Vec<Rat>> {
    m.iter()
        .map(|r| r.iter().map(|&x| rat_from_i128(x as i128)).collect())
        .collect()
}

/// Row-style Hermite normal form of the lattice spanned by the rows; zero rows dropped.
pub fn hnf_rows(rows: &[Vec<i64>], cols: usize) -> IntMatrix {
    let mut a: Vec<Vec<i128>> = rows
        .iter()
        .map(|r| r.iter().map(|&x| x as i128).collect())
        .collect();
    let mut r = 0;
    for c in 0..cols {
        if r == a.len() {
            break;
        }
        // Euclid on column c among rows r.. until a single nonzero entry remains.
        loop {
            let Some(p) = (r..a.len())
                .filter(|&i| a[i][c] != 0)
                .min_by_key(|&i| a[i][c].abs())
            else {
                break;
            };
            a.swap(r, p);
            let mut again = false;
            for i in r + 1..a.len() {
                if a[i][c] != 0 {
                    let q = a[i][c].div_euclid(a[r][c]);
                    for j in 0..cols {
                        a[i][j] -= q * a[r][j];
                    }
                    again |= a[i][c] != 0;
                }
            }
            if !again {
                break;
            }
        }
        if a[r][c] == 0 {
            continue;
        }
        if a[r][c] < 0 {
            a[r].iter_mut().for_each(|x| *x = -*x);
        }
        for i in 0..r {
            let q = a[i][c].div_euclid(a[r][c]);
            if q != 0 {
                for j in 0..cols {
                    a[i][j] -= q * a[r][j];
                }
            }
        }
        r += 1;
    }
    a.truncate(r);
    a.into_iter()
        .filter(|row| row.iter().any(|&x| x != 0))
        .map(|row| row.into_iter().map(narrow).collect())
        .collect()
}

/// Basis (in row HNF) of the integer kernel `{x ∈ Z^cols : rows · x = 0}`.
pub fn integer_kernel(rows: &[Vec<i64>], cols: usize) -> IntMatrix {
    // Column reduction of [A; I]: columns whose A-part vanishes span the kernel.
    let k = rows.len();
    let mut m: Vec<Vec<i128>> = (0..cols)
        .map(|j| {
            let mut col: Vec<i128> = rows.iter().map(|r| r[j] as i128).collect();
            col.extend((0..cols).map(|i| i128::from(i == j)));
            col
        })
        .collect();
    let mut c = 0;
    for row in 0..k {
        loop {
            let nz: Vec<usize> = (c..cols).filter(|&j| m[j][row] != 0).collect();
            if nz.len() <= 1 {
                if let Some(&p) = nz.first() {
                    m.swap(c, p);
                    c += 1;
                }
                break;
            }
            let p = *nz.iter().min_by_key(|&&j| m[j][row].abs()).unwrap();
            m.swap(c, p);
            for j in c + 1..cols {
                if m[j][row] != 0 {
                    let q = m[j][row].div_euclid(m[c][row]);
                    for t in 0..k + cols {
                        m[j][t] -= q * m[c][t];
                    }
                }
            }
        }
    }
    let basis: IntMatrix = m[c..]
        .iter()
        .map(|col| col[k..].iter().map(|&x| narrow(x)).collect())
        .collect();
    hnf_rows(&basis, cols)
}

/// Integer `R` with `P·R = I` for a surjective `P: Z^n → Z^k`, if one exists.
pub fn right_inverse(p: &[Vec<i64>], n: usize) -> Option<IntMatrix> {
    let k = p.len();
    if k == 0 {
        return Some(vec![Vec::new(); n]);
    }
    // U·[Pᵀ | I] = [T 0; * U] in HNF, so P·Uᵀ = [Tᵀ 0].
    let aug: IntMatrix = (0..n)
        .map(|i| {
            let mut r: Vec<i64> = p.iter().map(|row| row[i]).collect();
            r.extend((0..n).map(|j| i64::from(i == j)));
            r
        })
        .collect();
    let h = hnf_rows(&aug, k + n);
    if h.len() != n || h[k..].iter().any(|r| r[..k].iter().any(|&x| x != 0)) {
        return None;
    }
    let tt: IntMatrix = (0..k).map(|i| (0..k).map(|j| h[j][i]).collect()).collect();
    let tt_inv = inverse_unimodular(&tt)?;
    let ut: IntMatrix = (0..n).map(|i| (0..k).map(|j| h[j][k + i]).collect()).collect();
    let r = mat_mul(&ut, &tt_inv, k);
    debug_assert_eq!(mat_mul(p, &r, k), identity(k));
    Some(r)
}

pub fn is_zero_vec(v: &[i64]) -> bool {
    v.iter().all(|&x| x == 0)
}

pub fn rat_vec(v: &[i64]) -> Vec<Rat> {
    v.iter().map(|&x| rat_from_i128(x as i128)).collect()
}

pub fn rat_dot(a: &[Rat], b: &[Rat]) -> Rat {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn sign(r: &Rat) -> i32 {
    if r.is_zero() {
        0
    } else if r.is_positive() {
        1
    } else {
        -1
    }
}
