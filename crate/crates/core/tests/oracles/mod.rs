//! Independent reference computations used only by tests: exact rational
//! arithmetic for determinants and matrix products, a cyclic Jacobi eigensolver,
//! and dense Gaussian elimination. None of this shares code with the crate.

#![allow(dead_code)]

use std::collections::HashMap;

use num_bigint::{BigInt, Sign};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub fn rat(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite float")
}

/// Natural log of `|r|`, accurate to double precision for any size of `r`.
pub fn big_ln_abs(r: &BigRational) -> f64 {
    fn ln_int(i: &BigInt) -> f64 {
        let bits = i.bits();
        if bits <= 1000 {
            return i.abs().to_f64().unwrap().ln();
        }
        let shift = bits - 64;
        let top: BigInt = i.abs() >> shift;
        top.to_f64().unwrap().ln() + shift as f64 * std::f64::consts::LN_2
    }
    ln_int(r.numer()) - ln_int(r.denom())
}

pub fn big_sign(r: &BigRational) -> i8 {
    match r.numer().sign() {
        Sign::Plus => 1,
        Sign::Minus => -1,
        Sign::NoSign => 0,
    }
}

/// `r / 2^k`-style rescaling to f64: returns `r · exp(−shift)` for ratios of
/// comparable magnitude.
pub fn big_scaled(r: &BigRational, shift: f64) -> f64 {
    if r.is_zero() {
        return 0.0;
    }
    f64::from(big_sign(r)) * (big_ln_abs(r) - shift).exp()
}

/// Determinant by Laplace expansion along successive rows, memoized on the
/// set of used columns; zero entries are skipped.
pub fn cofactor_det(m: &[Vec<BigRational>]) -> BigRational {
    fn go(m: &[Vec<BigRational>], row: usize, used: u64, memo: &mut HashMap<u64, BigRational>) -> BigRational {
        let n = m.len();
        if row == n {
            return BigRational::one();
        }
        if let Some(v) = memo.get(&used) {
            return v.clone();
        }
        let mut acc = BigRational::zero();
        let mut free_before = 0usize;
        for col in 0..n {
            if used & (1 << col) != 0 {
                continue;
            }
            if !m[row][col].is_zero() {
                let minor = go(m, row + 1, used | (1 << col), memo);
                let term = &m[row][col] * minor;
                if free_before % 2 == 0 {
                    acc += term;
                } else {
                    acc -= term;
                }
            }
            free_before += 1;
        }
        memo.insert(used, acc.clone());
        acc
    }
    assert!(m.len() <= 63);
    go(m, 0, 0, &mut HashMap::new())
}

/// Dense `T − E` with the given diagonal and unit off-diagonals, exactly.
pub fn dense_shifted(diag: &[f64], e: f64) -> Vec<Vec<BigRational>> {
    let n = diag.len();
    let e = rat(e);
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i == j {
                        rat(diag[i]) - &e
                    } else if i.abs_diff(j) == 1 {
                        BigRational::one()
                    } else {
                        BigRational::zero()
                    }
                })
                .collect()
        })
        .collect()
}

pub type BigMat2 = [[BigRational; 2]; 2];

pub fn big_mul(a: &BigMat2, b: &BigMat2) -> BigMat2 {
    let e = |i: usize, j: usize| &a[i][0] * &b[0][j] + &a[i][1] * &b[1][j];
    [[e(0, 0), e(0, 1)], [e(1, 0), e(1, 1)]]
}

/// Exact `Π_{k=n..1} [[t_k, −1], [1, 0]]` for the given f64 values `t_1..t_n`.
pub fn exact_transfer_product(t: &[f64]) -> BigMat2 {
    let one = BigRational::one;
    let zero = BigRational::zero;
    let mut acc: BigMat2 = [[one(), zero()], [zero(), one()]];
    for &tk in t {
        let step: BigMat2 = [[rat(tk), -one()], [one(), zero()]];
        acc = big_mul(&step, &acc);
    }
    acc
}

/// `log ‖M‖₂` of an exact 2×2 matrix.
pub fn big_log_norm(m: &BigMat2) -> f64 {
    let shift = m
        .iter()
        .flatten()
        .filter(|e| !e.is_zero())
        .map(big_ln_abs)
        .fold(f64::NEG_INFINITY, f64::max);
    if shift == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let [[a, b], [c, d]] = [
        [big_scaled(&m[0][0], shift), big_scaled(&m[0][1], shift)],
        [big_scaled(&m[1][0], shift), big_scaled(&m[1][1], shift)],
    ];
    // largest singular value from the Gram matrix
    let p = a * a + c * c;
    let q = a * b + c * d;
    let r = b * b + d * d;
    let tr = p + r;
    let disc = ((p - r) * (p - r) + 4.0 * q * q).sqrt();
    let s2 = 0.5 * (tr + disc);
    shift + 0.5 * s2.ln()
}

/// All eigenvalues of a dense symmetric matrix by cyclic Jacobi rotations.
pub fn jacobi_eigenvalues(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let n = a.len();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        let scale: f64 = (0..n).map(|i| a[i][i] * a[i][i]).sum::<f64>() + off;
        if off <= 1e-30 * scale.max(1e-300) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q] == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    ev.sort_by(f64::total_cmp);
    ev
}

pub fn dense_tridiagonal(diag: &[f64]) -> Vec<Vec<f64>> {
    let n = diag.len();
    let mut m = vec![vec![0.0; n]; n];
    for i in 0..n {
        m[i][i] = diag[i];
        if i + 1 < n {
            m[i][i + 1] = 1.0;
            m[i + 1][i] = 1.0;
        }
    }
    m
}

/// Solves `A u = b` by Gaussian elimination with partial pivoting.
pub fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = a.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| a[i][k] * x[k]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    x
}

/// Dense inverse, column by column.
pub fn dense_inverse(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let cols: Vec<Vec<f64>> = (0..n)
        .map(|k| {
            let mut e = vec![0.0; n];
            e[k] = 1.0;
            dense_solve(a.to_vec(), e)
        })
        .collect();
    (0..n).map(|i| (0..n).map(|j| cols[j][i]).collect()).collect()
}

/// SplitMix64-free deterministic draws for tests: a small xorshift.
pub struct Draw(u64);

impl Draw {
    pub fn new(seed: u64) -> Self {
        Self(seed.wrapping_mul(0x2545_F491_4F6C_DD1D) | 1)
    }

    pub fn unit(&mut self) -> f64 {
        self.0 ^= self.0 << 13;
        self.0 ^= self.0 >> 7;
        self.0 ^= self.0 << 17;
        (self.0 >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.unit()
    }

    pub fn int(&mut self, lo: usize, hi: usize) -> usize {
        lo + (self.unit() * (hi - lo + 1) as f64) as usize
    }
}
