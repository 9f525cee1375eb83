//! Dirichlet determinants `f_[a,b](x) = det(H_[a,b](x) − E)` through the
//! three-term recurrence, stored as sign and log-magnitude.

use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;
use core::ops::{Mul, Neg};

use crate::cocycle::{product, CocycleParams};
use crate::fmath;
use crate::potential::Potential;

/// `sign · exp(logmag)`; `logmag = −∞` exactly when `sign = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SignedLog {
    pub sign: i8,
    pub logmag: f64,
}

/// Results below `2^-30` of the larger operand count as cancelled.
const CANCELLATION_LOG: f64 = -30.0 * core::f64::consts::LN_2;

impl SignedLog {
    pub const ZERO: Self = Self {
        sign: 0,
        logmag: f64::NEG_INFINITY,
    };
    pub const ONE: Self = Self { sign: 1, logmag: 0.0 };

    pub fn from_f64(v: f64) -> Self {
        match v.partial_cmp(&0.0) {
            Some(Ordering::Greater) => Self {
                sign: 1,
                logmag: fmath::ln(v),
            },
            Some(Ordering::Less) => Self {
                sign: -1,
                logmag: fmath::ln(-v),
            },
            _ => Self::ZERO,
        }
    }

    /// `f64` value; overflows to `±∞` or underflows to `0` outside the double range.
    pub fn to_f64(self) -> f64 {
        if self.sign == 0 {
            0.0
        } else {
            f64::from(self.sign) * fmath::exp(self.logmag)
        }
    }

    /// Value times `exp(−shift)`, for comparing quantities of similar scale.
    pub fn scaled(self, shift: f64) -> f64 {
        if self.sign == 0 {
            0.0
        } else {
            f64::from(self.sign) * fmath::exp(self.logmag - shift)
        }
    }

    pub fn is_zero(self) -> bool {
        self.sign == 0
    }

    /// `None` when dividing by zero.
    pub fn checked_div(self, rhs: Self) -> Option<Self> {
        if rhs.sign == 0 {
            return None;
        }
        if self.sign == 0 {
            return Some(Self::ZERO);
        }
        Some(Self {
            sign: self.sign * rhs.sign,
            logmag: self.logmag - rhs.logmag,
        })
    }

    /// Signed sum anchored at the larger magnitude. The flag reports
    /// cancellation of more than 30 binary digits.
    pub fn add_flagged(self, rhs: Self) -> (Self, bool) {
        if self.sign == 0 {
            return (rhs, false);
        }
        if rhs.sign == 0 {
            return (self, false);
        }
        let (big, small) = if self.logmag >= rhs.logmag { (self, rhs) } else { (rhs, self) };
        let ratio = fmath::exp(small.logmag - big.logmag);
        let t = if big.sign == small.sign { 1.0 + ratio } else { 1.0 - ratio };
        if t == 0.0 {
            return (Self::ZERO, true);
        }
        let logmag = big.logmag + fmath::ln(t);
        (
            Self {
                sign: big.sign,
                logmag,
            },
            logmag - big.logmag < CANCELLATION_LOG,
        )
    }
}

impl Mul for SignedLog {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        if self.sign == 0 || rhs.sign == 0 {
            return Self::ZERO;
        }
        Self {
            sign: self.sign * rhs.sign,
            logmag: self.logmag + rhs.logmag,
        }
    }
}

impl Neg for SignedLog {
    type Output = Self;
    fn neg(self) -> Self {
        Self {
            sign: -self.sign,
            logmag: self.logmag,
        }
    }
}

/// Runs `f_j = d_j f_{j−1} − f_{j−2}` from `f_0 = 1`, `f_{−1} = 0`, rescaling by
/// exact powers of two. Calls `emit` with `f_0, f_1, …`.
fn recurrence(diags: impl Iterator<Item = f64>, mut emit: impl FnMut(SignedLog)) {
    const HI: f64 = 1e150;
    const LO: f64 = 1e-150;
    let (mut prev, mut cur) = (0.0f64, 1.0f64);
    let mut exp2: i64 = 0;
    let to_log = |v: f64, e: i64| {
        let mut s = SignedLog::from_f64(v);
        if s.sign != 0 {
            s.logmag += e as f64 * core::f64::consts::LN_2;
        }
        s
    };
    emit(SignedLog::ONE);
    for d in diags {
        let next = d * cur - prev;
        prev = cur;
        cur = next;
        let top = cur.abs().max(prev.abs());
        if top > HI || (top < LO && top > 0.0) {
            let (_, e) = libm::frexp(top);
            let k = -e;
            cur = libm::scalbn(cur, k);
            prev = libm::scalbn(prev, k);
            exp2 += e as i64;
        }
        emit(to_log(cur, exp2));
    }
}

/// Diagonal of `H_[a,b](x) − E`: `λv(x + jω) − E` for `j = a..=b`.
fn diagonal<'p, P: Potential + ?Sized>(
    params: &'p CocycleParams<'_, P>,
    x: f64,
    a: i64,
    b: i64,
) -> impl Iterator<Item = f64> + 'p {
    (a..=b).map(move |j| params.diag(params.phase(x, j)) - params.energy)
}

/// Determinant of a tridiagonal matrix with unit off-diagonals and the given diagonal.
pub fn tridiagonal_det(diag: &[f64]) -> SignedLog {
    let mut last = SignedLog::ONE;
    recurrence(diag.iter().copied(), |f| last = f);
    last
}

/// Leading principal minors `1, f_1, …, f_n` of a tridiagonal matrix with unit
/// off-diagonals and the given diagonal.
pub fn tridiagonal_prefix_dets(diag: impl Iterator<Item = f64>) -> Vec<SignedLog> {
    let mut out = Vec::with_capacity(diag.size_hint().0 + 1);
    recurrence(diag, |f| out.push(f));
    out
}

/// `f_[a,b](x)`; an empty window (`b = a − 1`) gives 1.
pub fn shifted_det<P: Potential + ?Sized>(params: &CocycleParams<'_, P>, x: f64, a: i64, b: i64) -> SignedLog {
    assert!(b >= a - 1, "window [{a}, {b}] is not an interval");
    let mut last = SignedLog::ONE;
    recurrence(diagonal(params, x, a, b), |f| last = f);
    last
}

/// `f_n(x) = f_[1,n](x)`
pub fn dirichlet_det<P: Potential + ?Sized>(params: &CocycleParams<'_, P>, x: f64, n: usize) -> SignedLog {
    shifted_det(params, x, 1, n as i64)
}

/// Prefix determinants `f_[a,a−1], f_[a,a], …, f_[a,b]` (length `b − a + 2`).
pub fn prefix_dets<P: Potential + ?Sized>(params: &CocycleParams<'_, P>, x: f64, a: i64, b: i64) -> Vec<SignedLog> {
    let mut out = Vec::with_capacity((b - a + 2).max(1) as usize);
    recurrence(diagonal(params, x, a, b), |f| out.push(f));
    out
}

/// Suffix determinants: `out[i] = f_[a+i, b]`, `i = 0..=b−a+1` (the last one empty).
pub fn suffix_dets<P: Potential + ?Sized>(params: &CocycleParams<'_, P>, x: f64, a: i64, b: i64) -> Vec<SignedLog> {
    let mut out = Vec::with_capacity((b - a + 2).max(1) as usize);
    recurrence((a..=b).rev().map(|j| params.diag(params.phase(x, j)) - params.energy), |f| {
        out.push(f)
    });
    out.reverse();
    out
}

#[derive(Debug, Clone, PartialEq)]
pub enum DeterminantError {
    InvalidParameter(&'static str),
    IdentityViolated { discrepancy: f64, tolerance: f64 },
}

impl fmt::Display for DeterminantError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
            Self::IdentityViolated {
                discrepancy,
                tolerance,
            } => write!(f, "determinant/transfer identity off by {discrepancy:e} (tolerance {tolerance:e})"),
        }
    }
}

impl core::error::Error for DeterminantError {}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IdentityReport {
    pub n: usize,
    /// Largest relative entry discrepancy, floored at `1e-6·‖M_n‖`.
    pub discrepancy: f64,
    pub signs_agree: bool,
    pub tolerance: f64,
}

/// Compares `M_n(x)` with `[[f_n(x), −f_{n−1}(x+ω)], [f_{n−1}(x), −f_{n−2}(x+ω)]]`.
pub fn det_transfer_identity<P: Potential + ?Sized>(
    params: &CocycleParams<'_, P>,
    x: f64,
    n: usize,
) -> Result<IdentityReport, DeterminantError> {
    if n < 2 {
        return Err(DeterminantError::InvalidParameter("identity needs n >= 2"));
    }
    let m = product(params, x, n);
    let ni = n as i64;
    let f = [
        [shifted_det(params, x, 1, ni), -shifted_det(params, x, 2, ni)],
        [shifted_det(params, x, 1, ni - 1), -shifted_det(params, x, 2, ni - 1)],
    ];
    let shift = m.log_norm();
    let floor = 1e-6;
    let mut discrepancy = 0.0f64;
    let mut signs_agree = true;
    for i in 0..2 {
        for j in 0..2 {
            let (s, lm) = m.entry_log(i, j);
            let lhs = if s == 0 { 0.0 } else { f64::from(s) * fmath::exp(lm - shift) };
            let rhs = f[i][j].scaled(shift);
            let scale = lhs.abs().max(rhs.abs()).max(floor);
            discrepancy = discrepancy.max((lhs - rhs).abs() / scale);
            if lhs.abs() > floor && rhs.abs() > floor && lhs.signum() != rhs.signum() {
                signs_agree = false;
            }
        }
    }
    let tolerance = 1e-8 * n as f64;
    if discrepancy > tolerance || !signs_agree {
        return Err(DeterminantError::IdentityViolated {
            discrepancy,
            tolerance,
        });
    }
    Ok(IdentityReport {
        n,
        discrepancy,
        signs_agree,
        tolerance,
    })
}
