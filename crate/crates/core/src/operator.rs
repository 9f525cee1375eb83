//! Finite Dirichlet restrictions `H_[a,b](x)` of
//! `(Hφ)(n) = φ(n+1) + φ(n−1) + λv(x + nω)φ(n)`.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::cocycle::CocycleParams;
use crate::determinant::{tridiagonal_prefix_dets, SignedLog};
use crate::fmath;
use crate::potential::Potential;
use crate::rng::SplitMix64;

/// Default seed for inverse-iteration start vectors.
pub const DEFAULT_SEED: u64 = 0x5EED_0F_C0C7C1E;

/// Default bracket width for eigenvalues, relative to `‖H‖ + 1`.
pub const DEFAULT_REL_TOL: f64 = 1e-14;

const MAX_INVERSE_ITERATIONS: usize = 50;

#[derive(Debug, Clone, PartialEq)]
pub enum OperatorError {
    InvalidParameter(&'static str),
    IndexOutOfRange { index: usize, size: usize },
    SingularEnergy { energy: f64 },
    ConvergenceFailure { best: EigenPair },
    PreconditionNotMet { log_det: f64, required: f64 },
    BoundViolated { witness: Option<(i64, i64)>, excess: f64 },
}

impl fmt::Display for OperatorError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
            Self::IndexOutOfRange { index, size } => {
                write!(f, "eigenvalue index {index} outside 1..={size}")
            }
            Self::SingularEnergy { energy } => write!(f, "energy {energy} is an eigenvalue of the window"),
            Self::ConvergenceFailure { best } => {
                write!(f, "inverse iteration stalled at residual {:e}", best.residual)
            }
            Self::PreconditionNotMet { log_det, required } => {
                write!(f, "log|f_n| = {log_det} does not exceed n·L_n − J = {required}")
            }
            Self::BoundViolated { witness, excess } => match witness {
                Some((j, k)) => write!(f, "Green bound exceeded by {excess} (log scale) at ({j}, {k})"),
                None => write!(f, "distance-to-spectrum bound exceeded by {excess} (log scale)"),
            },
        }
    }
}

impl core::error::Error for OperatorError {}

/// `H_[a,b](x)`: diagonal `λv(x + jω)`, `j = a..=b`, unit off-diagonals.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FiniteOperator {
    pub a: i64,
    pub b: i64,
    pub x: f64,
    pub diag: Vec<f64>,
}

impl FiniteOperator {
    pub fn from_params<P: Potential + ?Sized>(params: &CocycleParams<'_, P>, x: f64, a: i64, b: i64) -> Self {
        assert!(a <= b, "empty window [{a}, {b}]");
        Self {
            a,
            b,
            x,
            diag: (a..=b).map(|j| params.diag(params.phase(x, j))).collect(),
        }
    }

    pub fn from_diagonal(a: i64, diag: Vec<f64>) -> Self {
        assert!(!diag.is_empty(), "empty diagonal");
        Self {
            a,
            b: a + diag.len() as i64 - 1,
            x: f64::NAN,
            diag,
        }
    }

    pub fn size(&self) -> usize {
        self.diag.len()
    }

    /// Restriction to `[a', b'] ⊆ [a, b]`.
    pub fn subwindow(&self, a: i64, b: i64) -> Self {
        assert!(self.a <= a && a <= b && b <= self.b, "[{a}, {b}] not inside [{}, {}]", self.a, self.b);
        Self {
            a,
            b,
            x: self.x,
            diag: self.diag[(a - self.a) as usize..=(b - self.a) as usize].to_vec(),
        }
    }

    /// `max|d_j| + 2`, an upper bound for `‖H‖`.
    pub fn norm_estimate(&self) -> f64 {
        self.diag.iter().fold(0.0f64, |m, d| m.max(d.abs())) + 2.0
    }

    pub fn trace(&self) -> f64 {
        self.diag.iter().sum()
    }

    /// `(Hv)_i`
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let n = self.size();
        (0..n)
            .map(|i| {
                let mut s = self.diag[i] * v[i];
                if i > 0 {
                    s += v[i - 1];
                }
                if i + 1 < n {
                    s += v[i + 1];
                }
                s
            })
            .collect()
    }

    /// `‖(H − E)v‖`
    pub fn residual(&self, e: f64, v: &[f64]) -> f64 {
        let hv = self.apply(v);
        fmath::sqrt(hv.iter().zip(v).map(|(h, x)| (h - e * x) * (h - e * x)).sum())
    }

    /// Number of eigenvalues strictly below `e` (zero pivots count as negative).
    pub fn sturm_count(&self, e: f64) -> usize {
        let tiny = 1e-300 * self.norm_estimate();
        let mut count = 0;
        let mut p = 1.0f64;
        for (i, &d) in self.diag.iter().enumerate() {
            p = if i == 0 { d - e } else { d - e - 1.0 / p };
            if p.abs() < tiny {
                p = -tiny;
            }
            if p < 0.0 {
                count += 1;
            }
        }
        count
    }

    fn spectrum_bounds(&self) -> (f64, f64) {
        let lo = self.diag.iter().copied().fold(f64::INFINITY, f64::min) - 2.0;
        let hi = self.diag.iter().copied().fold(f64::NEG_INFINITY, f64::max) + 2.0;
        (lo - 1e-12 * (1.0 + lo.abs()), hi + 1e-12 * (1.0 + hi.abs()))
    }

    pub fn default_tol(&self) -> f64 {
        DEFAULT_REL_TOL * (self.norm_estimate() + 1.0)
    }

    /// All eigenvalues in increasing order, each bracketed to width `≤ tol`.
    pub fn eigenvalues(&self, tol: f64) -> Vec<f64> {
        self.eigenvalues_by_index(0, self.size(), tol)
    }

    /// Eigenvalues with 0-based indices `first..last`.
    pub fn eigenvalues_by_index(&self, first: usize, last: usize, tol: f64) -> Vec<f64> {
        assert!(tol > 0.0, "tolerance must be positive");
        assert!(first <= last && last <= self.size());
        let (lo, hi) = self.spectrum_bounds();
        let mut out = vec![f64::NAN; last - first];
        // (lo, hi, count(lo), count(hi)), each interval holds indices count(lo)..count(hi)
        let mut stack = vec![(lo, hi, 0usize, self.size())];
        while let Some((l, h, cl, ch)) = stack.pop() {
            let (lo_i, hi_i) = (cl.max(first), ch.min(last));
            if lo_i >= hi_i {
                continue;
            }
            let mid = 0.5 * (l + h);
            if h - l <= tol || mid <= l || mid >= h {
                for v in &mut out[lo_i - first..hi_i - first] {
                    *v = mid;
                }
                continue;
            }
            let cm = self.sturm_count(mid);
            stack.push((mid, h, cm, ch));
            stack.push((l, mid, cl, cm));
        }
        out
    }

    /// The `j`-th eigenvalue, 1-based.
    pub fn eigenvalue(&self, j: usize, tol: f64) -> f64 {
        assert!((1..=self.size()).contains(&j));
        self.eigenvalues_by_index(j - 1, j, tol)[0]
    }

    /// `min_j |E − E_j|`
    pub fn dist_spec(&self, e: f64) -> f64 {
        let k = self.sturm_count(e);
        let tol = 2.0 * f64::EPSILON * (self.norm_estimate() + 1.0);
        let first = k.saturating_sub(1);
        let last = (k + 1).min(self.size());
        self.eigenvalues_by_index(first, last, tol)
            .into_iter()
            .map(|v| (v - e).abs())
            .fold(f64::INFINITY, f64::min)
    }

    /// Eigenpair `j` (1-based) by inverse iteration from a seeded start vector.
    pub fn eigenpair(&self, j: usize, tol: f64, seed: u64) -> Result<EigenPair, OperatorError> {
        if !(1..=self.size()).contains(&j) {
            return Err(OperatorError::IndexOutOfRange {
                index: j,
                size: self.size(),
            });
        }
        let value = self.eigenvalue(j, tol);
        self.eigenvector_at(value, seed ^ (j as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
    }

    /// Inverse iteration at a known eigenvalue estimate.
    pub fn eigenvector_at(&self, value: f64, seed: u64) -> Result<EigenPair, OperatorError> {
        let n = self.size();
        let scale = self.norm_estimate() + 1.0;
        let target = 1e-12 * scale;
        if n == 1 {
            return Ok(EigenPair {
                value,
                vector: vec![1.0],
                residual: (self.diag[0] - value).abs(),
            });
        }
        let lu = TridiagonalLu::new(&self.diag, value, f64::EPSILON * scale);
        let mut rng = SplitMix64::new(seed);
        let mut v: Vec<f64> = (0..n).map(|_| rng.next_f64() - 0.5).collect();
        normalize(&mut v);
        let mut best = EigenPair {
            value,
            vector: v.clone(),
            residual: f64::INFINITY,
        };
        for _ in 0..MAX_INVERSE_ITERATIONS {
            lu.solve(&mut v);
            if !normalize(&mut v) {
                break;
            }
            let residual = self.residual(value, &v);
            if residual < best.residual {
                best.vector.copy_from_slice(&v);
                best.residual = residual;
            }
            if residual <= target {
                break;
            }
        }
        fix_sign(&mut best.vector);
        if best.residual <= 1e-10 * scale {
            Ok(best)
        } else {
            Err(OperatorError::ConvergenceFailure { best })
        }
    }

    /// All eigenvalues, and eigenvectors if requested.
    pub fn eigensystem(&self, tol: f64, with_vectors: bool, seed: u64) -> Result<EigenSystem, OperatorError> {
        let values = self.eigenvalues(tol);
        if !with_vectors {
            return Ok(EigenSystem {
                values,
                vectors: None,
                residuals: Vec::new(),
            });
        }
        let mut vectors = Vec::with_capacity(values.len());
        let mut residuals = Vec::with_capacity(values.len());
        for (i, &e) in values.iter().enumerate() {
            let pair = self.eigenvector_at(e, seed ^ ((i + 1) as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))?;
            vectors.push(pair.vector);
            residuals.push(pair.residual);
        }
        Ok(EigenSystem {
            values,
            vectors: Some(vectors),
            residuals,
        })
    }

    /// Green's function `(H − E)^{-1}` with precomputed minors.
    pub fn green(&self, e: f64) -> Result<GreenFunction, OperatorError> {
        GreenFunction::new(self, e)
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EigenPair {
    pub value: f64,
    pub vector: Vec<f64>,
    /// `‖(H − E)ψ‖`
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EigenSystem {
    pub values: Vec<f64>,
    pub vectors: Option<Vec<Vec<f64>>>,
    pub residuals: Vec<f64>,
}

fn normalize(v: &mut [f64]) -> bool {
    let top = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if !(top > 0.0) || !top.is_finite() {
        return false;
    }
    for x in v.iter_mut() {
        *x /= top;
    }
    let norm = fmath::sqrt(v.iter().map(|x| x * x).sum());
    for x in v.iter_mut() {
        *x /= norm;
    }
    true
}

/// Makes the first entry above `1e-8·max|ψ|` positive.
fn fix_sign(v: &mut [f64]) {
    let top = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if let Some(first) = v.iter().find(|x| x.abs() >= 1e-8 * top) {
        if *first < 0.0 {
            for x in v.iter_mut() {
                *x = -*x;
            }
        }
    }
}

/// LU factorization with partial pivoting of `T − μ`, `T` tridiagonal with
/// unit off-diagonals.
struct TridiagonalLu {
    dl: Vec<f64>,
    d: Vec<f64>,
    du: Vec<f64>,
    du2: Vec<f64>,
    swapped: Vec<bool>,
}

impl TridiagonalLu {
    fn new(diag: &[f64], mu: f64, tiny: f64) -> Self {
        let n = diag.len();
        let mut dl = vec![1.0f64; n.saturating_sub(1)];
        let mut d: Vec<f64> = diag.iter().map(|x| x - mu).collect();
        let mut du = vec![1.0f64; n.saturating_sub(1)];
        let mut du2 = vec![0.0f64; n.saturating_sub(2)];
        let mut swapped = vec![false; n.saturating_sub(1)];
        for i in 0..n.saturating_sub(1) {
            if d[i].abs() >= dl[i].abs() {
                if d[i] == 0.0 {
                    d[i] = tiny;
                }
                let fact = dl[i] / d[i];
                dl[i] = fact;
                d[i + 1] -= fact * du[i];
            } else {
                let fact = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = fact;
                let temp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = temp - fact * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] = -fact * du[i + 1];
                }
                swapped[i] = true;
            }
        }
        if let Some(last) = d.last_mut() {
            if *last == 0.0 {
                *last = tiny;
            }
        }
        Self {
            dl,
            d,
            du,
            du2,
            swapped,
        }
    }

    fn solve(&self, b: &mut [f64]) {
        let n = self.d.len();
        for i in 0..n - 1 {
            if self.swapped[i] {
                let temp = b[i];
                b[i] = b[i + 1];
                b[i + 1] = temp - self.dl[i] * b[i];
            } else {
                b[i + 1] -= self.dl[i] * b[i];
            }
        }
        b[n - 1] /= self.d[n - 1];
        if n > 1 {
            b[n - 2] = (b[n - 2] - self.du[n - 2] * b[n - 1]) / self.d[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            b[i] = (b[i] - self.du[i] * b[i + 1] - self.du2[i] * b[i + 2]) / self.d[i];
        }
    }
}

/// Solves `(T − μ)u = rhs` for tridiagonal `T` with unit off-diagonals.
pub fn tridiagonal_solve(diag: &[f64], mu: f64, rhs: &mut [f64]) {
    TridiagonalLu::new(diag, mu, 0.0).solve(rhs)
}

/// `G(j, k) = (−1)^{k−j} f_[a,j−1] f_[k+1,b] / f_[a,b]` for `j ≤ k`.
#[derive(Debug, Clone)]
pub struct GreenFunction {
    a: i64,
    energy: f64,
    /// `prefix[i] = f_[a, a+i−1]`
    prefix: Vec<SignedLog>,
    /// `suffix[i] = f_[a+i, b]`
    suffix: Vec<SignedLog>,
}

impl GreenFunction {
    pub fn new(op: &FiniteOperator, e: f64) -> Result<Self, OperatorError> {
        let shifted: Vec<f64> = op.diag.iter().map(|d| d - e).collect();
        let prefix = tridiagonal_prefix_dets(shifted.iter().copied());
        let mut suffix = tridiagonal_prefix_dets(shifted.iter().rev().copied());
        suffix.reverse();
        if prefix[prefix.len() - 1].is_zero() {
            return Err(OperatorError::SingularEnergy { energy: e });
        }
        Ok(Self {
            a: op.a,
            energy: e,
            prefix,
            suffix,
        })
    }

    pub fn energy(&self) -> f64 {
        self.energy
    }

    /// `f_[a,b](x) − E`, the full determinant.
    pub fn determinant(&self) -> SignedLog {
        self.prefix[self.prefix.len() - 1]
    }

    /// `G(j, k)` for sites `j, k ∈ [a, b]`.
    pub fn entry(&self, j: i64, k: i64) -> SignedLog {
        let (j, k) = if j <= k { (j, k) } else { (k, j) };
        let (ji, ki) = ((j - self.a) as usize, (k - self.a) as usize);
        let num = self.prefix[ji] * self.suffix[ki + 1];
        let mut g = num.checked_div(self.determinant()).expect("nonsingular by construction");
        if (k - j) % 2 != 0 {
            g = -g;
        }
        g
    }
}

/// `G_[a,b](j, k)` as a single entry.
pub fn green_entry(op: &FiniteOperator, e: f64, j: i64, k: i64) -> Result<SignedLog, OperatorError> {
    Ok(GreenFunction::new(op, e)?.entry(j, k))
}

/// `|ψ(m) + G(m, a)ψ(a−1) + G(m, b)ψ(b+1)|` for an eigenvector `ψ` of the outer
/// operator (sites `outer.a..=outer.b`) and an inner window `[a, b]`.
pub fn poisson_residual(
    outer: &FiniteOperator,
    a: i64,
    b: i64,
    psi: &[f64],
    e: f64,
    m: i64,
) -> Result<f64, OperatorError> {
    if !(outer.a <= a && a <= m && m <= b && b <= outer.b) || psi.len() != outer.size() {
        return Err(OperatorError::InvalidParameter("need outer ⊇ [a, b] ∋ m and ψ on the outer window"));
    }
    let at = |site: i64| -> f64 {
        if site < outer.a || site > outer.b {
            0.0
        } else {
            psi[(site - outer.a) as usize]
        }
    };
    let g = GreenFunction::new(&outer.subwindow(a, b), e)?;
    Ok((at(m) + g.entry(m, a).to_f64() * at(a - 1) + g.entry(m, b).to_f64() * at(b + 1)).abs())
}

/// Constants of the Green decay bound.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DecayConstants {
    pub c: f64,
    pub nu: f64,
}

impl Default for DecayConstants {
    fn default() -> Self {
        Self { c: 5.0, nu: 0.25 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GreenDecayReport {
    pub n: usize,
    pub j_budget: f64,
    pub constants: DecayConstants,
    pub log_det: f64,
    /// `min over (j,k)` of `bound − log|G(j,k)|`
    pub entry_slack: f64,
    /// `log dist_spec + J + C n^{1−ν}`
    pub dist_slack: f64,
}

/// Checks `|G(j,k)| ≤ exp(−(log λ/2)|k−j| + J + C n^{1−ν})` and
/// `dist(E, spec) ≥ exp(−J − C n^{1−ν})`, given `log|f_n| > n·L_n − J`.
pub fn green_decay_check(
    op: &FiniteOperator,
    e: f64,
    lambda: f64,
    l_n: f64,
    j_budget: f64,
    constants: DecayConstants,
) -> Result<GreenDecayReport, OperatorError> {
    let n = op.size();
    let g = GreenFunction::new(op, e)?;
    let log_det = g.determinant().logmag;
    let required = n as f64 * l_n - j_budget;
    if !(log_det > required) {
        return Err(OperatorError::PreconditionNotMet { log_det, required });
    }
    let rate = 0.5 * fmath::ln(lambda);
    let budget = j_budget + constants.c * fmath::powf(n as f64, 1.0 - constants.nu);
    let mut entry_slack = f64::INFINITY;
    let mut witness = (op.a, op.a);
    for j in op.a..=op.b {
        for k in j..=op.b {
            let slack = -rate * (k - j) as f64 + budget - g.entry(j, k).logmag;
            if slack < entry_slack {
                entry_slack = slack;
                witness = (j, k);
            }
        }
    }
    if entry_slack < 0.0 {
        return Err(OperatorError::BoundViolated {
            witness: Some(witness),
            excess: -entry_slack,
        });
    }
    let dist_slack = fmath::ln(op.dist_spec(e)) + budget;
    if dist_slack < 0.0 {
        return Err(OperatorError::BoundViolated {
            witness: None,
            excess: -dist_slack,
        });
    }
    Ok(GreenDecayReport {
        n,
        j_budget,
        constants,
        log_det,
        entry_slack,
        dist_slack,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn free(n: usize) -> FiniteOperator {
        FiniteOperator::from_diagonal(1, vec![0.0; n])
    }

    #[test]
    fn free_laplacian_spectrum() {
        for n in [3usize, 5, 17] {
            let op = free(n);
            let ev = op.eigenvalues(1e-14);
            for (k, e) in ev.iter().enumerate() {
                let want = 2.0 * fmath::cos(core::f64::consts::PI * (n - k) as f64 / (n + 1) as f64);
                assert!((e - want).abs() < 1e-13, "n={n} k={k}: {e} vs {want}");
            }
            assert_eq!(op.sturm_count(-2.5), 0);
            assert_eq!(op.sturm_count(2.5), n);
        }
    }

    #[test]
    fn free_middle_eigenvector() {
        let op = free(3);
        let p = op.eigenpair(2, 1e-14, DEFAULT_SEED).unwrap();
        assert!(p.value.abs() < 1e-14);
        let s = core::f64::consts::FRAC_1_SQRT_2;
        for (got, want) in p.vector.iter().zip([s, 0.0, -s]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn dist_spec_examples() {
        let op = free(3);
        assert!(op.dist_spec(0.0) < 1e-14);
        assert!((op.dist_spec(2.0) - (2.0 - fmath::sqrt(2.0))).abs() < 1e-14);
    }

    #[test]
    fn one_site_green() {
        let op = FiniteOperator::from_diagonal(4, vec![3.0]);
        let g = green_entry(&op, 1.0, 4, 4).unwrap();
        assert!((g.to_f64() - 0.5).abs() < 1e-15);
        assert!(matches!(green_entry(&op, 3.0, 4, 4), Err(OperatorError::SingularEnergy { .. })));
    }

    #[test]
    fn free_green_at_three() {
        // (H − 3)^{-1} for the 3-site Laplacian, by hand: det = −21
        let op = free(3);
        let g = op.green(3.0).unwrap();
        let want = [[-8.0, -3.0, -1.0], [-3.0, -9.0, -3.0], [-1.0, -3.0, -8.0]];
        for j in 0..3 {
            for k in 0..3 {
                let got = g.entry(j as i64 + 1, k as i64 + 1).to_f64();
                assert!((got - want[j][k] / 21.0).abs() < 1e-15, "({j},{k})");
            }
        }
    }

    #[test]
    fn free_poisson_identity() {
        let outer = free(5);
        let e = 2.0 * fmath::cos(core::f64::consts::PI / 6.0);
        let p = outer.eigenpair(5, 1e-15, DEFAULT_SEED).unwrap();
        assert!((p.value - e).abs() < 1e-14);
        for m in 2..=4 {
            assert!(poisson_residual(&outer, 2, 4, &p.vector, p.value, m).unwrap() < 1e-10);
        }
    }

    #[test]
    fn tridiagonal_solve_matches_multiplication() {
        let diag = [0.3, -1.2, 2.0, 0.0, 5.5];
        let x = [1.0, -2.0, 0.5, 3.0, -1.0];
        let op = FiniteOperator::from_diagonal(0, diag.to_vec());
        let mut rhs: Vec<f64> = op.apply(&x).iter().zip(&x).map(|(h, v)| h - 0.7 * v).collect();
        tridiagonal_solve(&diag, 0.7, &mut rhs);
        for (a, b) in rhs.iter().zip(&x) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn green_decay_two_sites() {
        let op = FiniteOperator::from_diagonal(1, vec![10.0, -10.0]);
        let r = green_decay_check(&op, 0.0, 10.0, 0.0, 1.0, DecayConstants::default()).unwrap();
        assert!(r.entry_slack > 0.0 && r.dist_slack > 0.0);
        // precondition: log|f_2| = log 101 must exceed 2·L − J
        assert!(matches!(
            green_decay_check(&op, 0.0, 10.0, 5.0, 1.0, DecayConstants::default()),
            Err(OperatorError::PreconditionNotMet { .. })
        ));
    }
}
