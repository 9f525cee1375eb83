//! Continued fractions and Diophantine diagnostics for the frequency `ω`.
//!
//! Expansions run in exact integer arithmetic on the binary value of `ω`.
//! A caller-set bit budget `B` defines the uncertainty interval `ω ± 2^-B`;
//! a partial quotient is emitted only when both ends of that interval agree
//! on it, so the stored quotients are those of every real number within one
//! unit of the budget.

use alloc::vec::Vec;
use core::fmt;

use crate::fmath;

/// `(√5 − 1)/2` rounded to `f64`.
pub const GOLDEN_MEAN: f64 = 0.618_033_988_749_894_9;

const MAX_BITS: u32 = 120;

#[derive(Debug, Clone, PartialEq)]
pub enum NumTheoryError {
    Domain(&'static str),
    /// The requested depth could not be certified; `certified` quotients were.
    PrecisionExhausted { certified: usize },
    InsufficientDepth { have: usize, need: usize },
}

impl fmt::Display for NumTheoryError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Domain(msg) => write!(f, "domain error: {msg}"),
            Self::PrecisionExhausted { certified } => {
                write!(f, "precision exhausted after {certified} certified quotients")
            }
            Self::InsufficientDepth { have, need } => {
                write!(f, "need at least {need} convergents, have {have}")
            }
        }
    }
}

impl core::error::Error for NumTheoryError {}

/// How an expansion stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Termination {
    /// Requested depth reached.
    Depth,
    /// A remainder vanished within the precision budget.
    RationalDetected,
    /// The next quotient is not determined by the budget.
    PrecisionExhausted,
}

/// A frequency with its certified continued-fraction data.
///
/// `convergents[s-1] = (p_s, q_s)` for `s = 1..=quotients.len()`, with
/// `p_0/q_0 = 0/1` implicit.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Frequency {
    pub omega: f64,
    pub quotients: Vec<u128>,
    pub convergents: Vec<(u128, u128)>,
    pub precision_bits: u32,
    pub termination: Termination,
}

impl Frequency {
    /// The golden mean with its exact (all ones) expansion to `depth`.
    pub fn golden(depth: usize) -> Self {
        let mut f = Self::from_quotients(&alloc::vec![1; depth.max(1)]);
        f.omega = GOLDEN_MEAN;
        f
    }

    /// Builds `[0; a_1, a_2, ...]` from given partial quotients. `omega` is the
    /// value of the finite fraction rounded to `f64`.
    pub fn from_quotients(quotients: &[u128]) -> Self {
        assert!(!quotients.is_empty() && quotients.iter().all(|&a| a >= 1));
        let convergents = convergents_of(quotients);
        let mut value = 0.0f64;
        for &a in quotients.iter().rev() {
            value = 1.0 / (a as f64 + value);
        }
        Self {
            omega: value,
            quotients: quotients.to_vec(),
            convergents,
            precision_bits: 53,
            termination: Termination::Depth,
        }
    }

    pub fn is_rational(&self) -> bool {
        self.termination == Termination::RationalDetected
    }

    pub fn denominators(&self) -> impl Iterator<Item = u128> + '_ {
        self.convergents.iter().map(|&(_, q)| q)
    }
}

fn convergents_of(quotients: &[u128]) -> Vec<(u128, u128)> {
    let (mut p_prev, mut q_prev) = (1u128, 0u128);
    let (mut p, mut q) = (0u128, 1u128);
    let mut out = Vec::with_capacity(quotients.len());
    for &a in quotients {
        let (Some(pn), Some(qn)) = (
            a.checked_mul(p).and_then(|v| v.checked_add(p_prev)),
            a.checked_mul(q).and_then(|v| v.checked_add(q_prev)),
        ) else {
            break;
        };
        p_prev = p;
        q_prev = q;
        p = pn;
        q = qn;
        out.push((p, q));
    }
    out
}

/// Exact binary decomposition `x = mantissa · 2^exponent` for finite positive `x`.
fn decompose(x: f64) -> (u64, i32) {
    let bits = x.to_bits();
    let biased = ((bits >> 52) & 0x7ff) as i32;
    let frac = bits & ((1u64 << 52) - 1);
    let (mut m, mut e) = if biased == 0 {
        (frac, -1074)
    } else {
        (frac | (1u64 << 52), biased - 1075)
    };
    while m != 0 && m & 1 == 0 {
        m >>= 1;
        e += 1;
    }
    (m, e)
}

/// A rational `num/den` in `(0, 1)` under the Gauss map.
#[derive(Clone, Copy)]
struct Ratio {
    num: u128,
    den: u128,
}

impl Ratio {
    fn quotient(self) -> Option<u128> {
        (self.num != 0).then(|| self.den / self.num)
    }

    fn advance(self, a: u128) -> Self {
        Self {
            num: self.den - a * self.num,
            den: self.num,
        }
    }

    fn inverse_f64(self) -> f64 {
        self.den as f64 / self.num as f64
    }
}

/// Expands `omega` to at most `depth` partial quotients.
///
/// Returns `RationalDetected` termination (not an error) if a remainder
/// vanishes within the budget before `depth` is reached.
pub fn continued_fraction(
    omega: f64,
    depth: usize,
    precision_bits: u32,
) -> Result<Frequency, NumTheoryError> {
    if depth == 0 {
        return Err(NumTheoryError::Domain("depth must be at least 1"));
    }
    let freq = expand(omega, depth, precision_bits)?;
    match freq.termination {
        Termination::PrecisionExhausted => Err(NumTheoryError::PrecisionExhausted {
            certified: freq.quotients.len(),
        }),
        _ => Ok(freq),
    }
}

/// Longest certified expansion of `omega` (up to `max_depth`), never failing
/// on exhaustion. Used to attach convergents to a frequency given as a decimal.
pub fn certified_expansion(
    omega: f64,
    max_depth: usize,
    precision_bits: u32,
) -> Result<Frequency, NumTheoryError> {
    expand(omega, max_depth.max(1), precision_bits)
}

fn expand(omega: f64, depth: usize, bits: u32) -> Result<Frequency, NumTheoryError> {
    if !(omega > 0.0 && omega < 1.0) {
        return Err(NumTheoryError::Domain("omega must lie in (0, 1)"));
    }
    if bits == 0 || bits > MAX_BITS {
        return Err(NumTheoryError::Domain("precision_bits must be in 1..=120"));
    }
    let (m, e) = decompose(omega);
    let scale = (-e).max(bits as i32);
    if scale > 126 {
        return Err(NumTheoryError::Domain("omega too small for exact expansion"));
    }
    let den = 1u128 << scale;
    let center_num = (m as u128) << (scale + e);
    let half_width = 1u128 << (scale - bits as i32);

    let mut center = Ratio { num: center_num, den };
    let mut lo = Ratio {
        num: center_num.saturating_sub(half_width),
        den,
    };
    let mut hi = Ratio {
        num: (center_num + half_width).min(den),
        den,
    };

    let mut quotients = Vec::new();
    let mut termination = Termination::Depth;
    while quotients.len() < depth {
        let a = center.quotient().expect("center remainder is nonzero");
        if center.den % center.num == 0 {
            quotients.push(a);
            termination = Termination::RationalDetected;
            break;
        }
        let a_lo = lo.quotient();
        let a_hi = hi.quotient();
        if a_lo == Some(a) && a_hi == Some(a) && lo.num != lo.den && hi.num != hi.den {
            quotients.push(a);
            center = center.advance(a);
            lo = lo.advance(a);
            hi = hi.advance(a);
            // the Gauss map reverses orientation
            core::mem::swap(&mut lo, &mut hi);
            continue;
        }
        let width = if lo.num == 0 || hi.num == 0 {
            f64::INFINITY
        } else {
            (lo.inverse_f64() - hi.inverse_f64()).abs()
        };
        if width < 0.5 {
            let x = center.inverse_f64();
            quotients.push(fmath::round(x).max(1.0) as u128);
            termination = Termination::RationalDetected;
        } else {
            termination = Termination::PrecisionExhausted;
        }
        break;
    }
    let convergents = convergents_of(&quotients);
    Ok(Frequency {
        omega,
        quotients,
        convergents,
        precision_bits: bits,
        termination,
    })
}

/// `‖nω‖ = dist(nω, ℤ)`, exact for the binary value of `omega` when it fits
/// in 128-bit arithmetic.
pub fn circle_norm(omega: f64, n: i64) -> Result<f64, NumTheoryError> {
    if n == 0 {
        return Err(NumTheoryError::Domain("n must be nonzero"));
    }
    if !omega.is_finite() {
        return Err(NumTheoryError::Domain("omega must be finite"));
    }
    if omega == 0.0 {
        return Ok(0.0);
    }
    let (m, e) = decompose(omega.abs());
    if e >= 0 {
        return Ok(0.0);
    }
    let shift = -e;
    let n_abs = n.unsigned_abs() as u128;
    if shift <= 127 && n_abs.leading_zeros() >= 64 {
        let modulus = 1u128 << shift;
        let r = (n_abs * m as u128) & (modulus - 1);
        let d = r.min(modulus - r);
        return Ok(d as f64 / modulus as f64);
    }
    let y = n as f64 * omega;
    Ok((y - fmath::round(y)).abs())
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DiophantineReport {
    pub exponent: f64,
    /// `min_{1≤n≤N} n^A ‖nω‖`
    pub c_est: f64,
    pub n_witness: u64,
    /// Minimum over the upper half `⌈N/2⌉..=N`; tracks the liminf.
    pub tail_c_est: f64,
    pub tail_witness: u64,
    pub search_bound: u64,
}

/// Exhaustive scan of `n^A ‖nω‖` for `1 ≤ n ≤ N`.
pub fn diophantine_fit(
    freq: &Frequency,
    exponent: f64,
    search_bound: u64,
) -> Result<DiophantineReport, NumTheoryError> {
    if !(exponent >= 1.0) {
        return Err(NumTheoryError::Domain("exponent A must be at least 1"));
    }
    if search_bound == 0 {
        return Err(NumTheoryError::Domain("search bound N must be at least 1"));
    }
    let tail_start = search_bound.div_ceil(2);
    let mut best = (f64::INFINITY, 0u64);
    let mut tail = (f64::INFINITY, 0u64);
    for n in 1..=search_bound {
        let v = fmath::powf(n as f64, exponent) * circle_norm(freq.omega, n as i64)?;
        if v < best.0 {
            best = (v, n);
        }
        if n >= tail_start && v < tail.0 {
            tail = (v, n);
        }
    }
    Ok(DiophantineReport {
        exponent,
        c_est: best.0,
        n_witness: best.1,
        tail_c_est: tail.0,
        tail_witness: tail.1,
        search_bound,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BetaEstimate {
    /// `max_s log(q_{s+1}) / q_s` over stored convergents.
    pub value: f64,
    pub depth: usize,
    pub argmax: usize,
}

/// Finite-depth proxy for `β(ω) = limsup log(q_{s+1})/q_s`: the running
/// maximum over stored convergents.
pub fn beta_estimate(freq: &Frequency) -> Result<BetaEstimate, NumTheoryError> {
    let depth = freq.convergents.len();
    if depth < 3 {
        return Err(NumTheoryError::InsufficientDepth { have: depth, need: 3 });
    }
    let mut best = (f64::NEG_INFINITY, 0usize);
    for (s, w) in freq.convergents.windows(2).enumerate() {
        let v = fmath::ln(w[1].1 as f64) / w[0].1 as f64;
        if v > best.0 {
            best = (v, s + 1);
        }
    }
    Ok(BetaEstimate {
        value: best.0,
        depth,
        argmax: best.1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gcd(mut a: u128, mut b: u128) -> u128 {
        while b != 0 {
            (a, b) = (b, a % b);
        }
        a
    }

    #[test]
    fn golden_mean_is_all_ones_with_fibonacci_denominators() {
        let f = continued_fraction(GOLDEN_MEAN, 10, 53).unwrap();
        assert!(f.quotients.iter().all(|&a| a == 1));
        let q: Vec<u128> = f.denominators().collect();
        assert_eq!(q, [1, 2, 3, 5, 8, 13, 21, 34, 55, 89]);
        assert_eq!(f.termination, Termination::Depth);
    }

    #[test]
    fn one_half_terminates() {
        let f = continued_fraction(0.5, 10, 53).unwrap();
        assert_eq!(f.quotients, [2]);
        assert!(f.is_rational());
    }

    #[test]
    fn one_third_is_rational_within_precision() {
        let f = continued_fraction(1.0 / 3.0, 10, 52).unwrap();
        assert_eq!(f.quotients, [3]);
        assert!(f.is_rational());
    }

    #[test]
    fn deep_golden_expansion_exhausts_precision() {
        let err = continued_fraction(GOLDEN_MEAN, 60, 53).unwrap_err();
        let NumTheoryError::PrecisionExhausted { certified } = err else {
            panic!("unexpected {err:?}");
        };
        assert!((30..45).contains(&certified), "certified {certified}");
        let f = certified_expansion(GOLDEN_MEAN, 60, 53).unwrap();
        assert_eq!(f.quotients.len(), certified);
        assert!(f.quotients.iter().all(|&a| a == 1));
    }

    #[test]
    fn domain_errors() {
        assert!(matches!(continued_fraction(0.0, 3, 53), Err(NumTheoryError::Domain(_))));
        assert!(matches!(continued_fraction(1.2, 3, 53), Err(NumTheoryError::Domain(_))));
        assert!(matches!(continued_fraction(0.3, 0, 53), Err(NumTheoryError::Domain(_))));
        assert!(matches!(circle_norm(0.3, 0), Err(NumTheoryError::Domain(_))));
    }

    #[test]
    fn convergents_satisfy_recurrence_and_are_coprime() {
        let f = certified_expansion(core::f64::consts::PI - 3.0, 40, 53).unwrap();
        assert_eq!(&f.quotients[..4], &[7, 15, 1, 292]);
        let mut prev = [(1u128, 0u128), (0, 1)];
        for (s, &(p, q)) in f.convergents.iter().enumerate() {
            let a = f.quotients[s];
            assert_eq!(p, a * prev[1].0 + prev[0].0);
            assert_eq!(q, a * prev[1].1 + prev[0].1);
            assert_eq!(gcd(p, q), 1);
            prev = [prev[1], (p, q)];
        }
    }

    #[test]
    fn circle_norm_examples() {
        assert_eq!(circle_norm(0.5, 1).unwrap(), 0.5);
        // 1/3 is not a binary fraction; the exact residue is 2^-54.
        assert!(circle_norm(1.0 / 3.0, 3).unwrap() < 1e-16);
        assert_eq!(circle_norm(0.25, -3).unwrap(), 0.25);
        assert_eq!(circle_norm(0.3, 7).unwrap(), circle_norm(0.3, -7).unwrap());
    }

    #[test]
    fn circle_norm_at_golden_denominators_is_in_band() {
        let f = Frequency::golden(20);
        let q: Vec<u128> = f.denominators().collect();
        for s in 0..q.len() - 1 {
            let v = circle_norm(f.omega, q[s] as i64).unwrap();
            let lo = 1.0 / (q[s + 1] + q[s]) as f64;
            let hi = 1.0 / q[s + 1] as f64;
            assert!(lo < v && v < hi, "s={s}: {lo} < {v} < {hi}");
        }
    }

    #[test]
    fn rational_fit_is_zero() {
        let f = continued_fraction(0.5, 5, 53).unwrap();
        let r = diophantine_fit(&f, 2.0, 100).unwrap();
        assert_eq!(r.c_est, 0.0);
        assert_eq!(r.n_witness, 2);
    }

    #[test]
    fn beta_needs_three_convergents() {
        let f = Frequency::from_quotients(&[1, 2]);
        assert_eq!(
            beta_estimate(&f),
            Err(NumTheoryError::InsufficientDepth { have: 2, need: 3 })
        );
    }

    #[test]
    fn golden_beta_proxy_is_log_two() {
        let b = beta_estimate(&Frequency::golden(20)).unwrap();
        assert!((b.value - core::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(b.argmax, 1);
    }

    #[test]
    fn decompose_roundtrips() {
        for x in [0.5, 0.1, GOLDEN_MEAN, 1e-300, 5e-324] {
            let (m, e) = decompose(x);
            assert_eq!(m as f64 * libm::pow(2.0, e as f64), x);
        }
    }
}
