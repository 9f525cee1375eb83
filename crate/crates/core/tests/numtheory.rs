mod oracles;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use proptest::prelude::*;

use oracles::rat;
use qpspec_core::numtheory::{
    beta_estimate, circle_norm, continued_fraction, diophantine_fit, Frequency, NumTheoryError, Termination,
    GOLDEN_MEAN,
};

/// Euclid on an exact rational, `depth` quotients.
fn exact_quotients(mut r: BigRational, depth: usize) -> Vec<u128> {
    let mut out = Vec::new();
    for _ in 0..depth {
        if r.is_zero() {
            break;
        }
        let inv = r.recip();
        let a = inv.floor();
        out.push(a.to_integer().to_u128().unwrap());
        r = inv - a;
    }
    out
}

#[test]
fn sqrt2_minus_one_quotients_match_high_precision_euclid() {
    // √2 − 1 to 400 bits: isqrt(2·4^400)/2^400 − 1
    let scale = BigInt::one() << 400u32;
    let root = (BigInt::from(2) * &scale * &scale).sqrt();
    let exact = BigRational::new(root, scale) - BigRational::one();
    let want = exact_quotients(exact, 8);
    assert_eq!(want, vec![2; 8]);
    let f = continued_fraction(std::f64::consts::SQRT_2 - 1.0, 8, 52).unwrap();
    assert_eq!(f.quotients, want);
    assert_eq!(f.termination, Termination::Depth);
}

#[test]
fn golden_convergents_are_fibonacci_and_satisfy_the_gap_inequality() {
    let f = continued_fraction(GOLDEN_MEAN, 30, 52).unwrap();
    let omega = rat(f.omega);
    for s in 0..f.convergents.len() - 1 {
        let (p, q) = f.convergents[s];
        let (_, q1) = f.convergents[s + 1];
        let err = (&omega - BigRational::new(BigInt::from(p), BigInt::from(q))).abs();
        let lower = BigRational::new(BigInt::one(), BigInt::from(q) * BigInt::from(q1 + q));
        let upper = BigRational::new(BigInt::one(), BigInt::from(q) * BigInt::from(q1));
        assert!(lower < err && err < upper, "s = {s}");
    }
}

#[test]
fn circle_norm_at_denominators_lies_in_the_convergent_band() {
    let f = continued_fraction(GOLDEN_MEAN, 25, 52).unwrap();
    let q: Vec<u128> = f.denominators().collect();
    for s in 0..q.len() - 1 {
        let v = circle_norm(GOLDEN_MEAN, q[s] as i64).unwrap();
        let lo = 1.0 / (q[s + 1] + q[s]) as f64;
        let hi = 1.0 / q[s + 1] as f64;
        assert!(lo < v && v < hi);
    }
}

#[test]
fn best_approximation_property_exhaustively() {
    for omega in [GOLDEN_MEAN, std::f64::consts::SQRT_2 - 1.0, std::f64::consts::PI - 3.0] {
        let f = continued_fraction(omega, 12, 52).unwrap();
        let q: Vec<u128> = f.denominators().collect();
        for s in 0..q.len() - 1 {
            if q[s + 1] > 10_000 {
                break;
            }
            let at_q = circle_norm(omega, q[s] as i64).unwrap();
            for n in 1..q[s + 1] {
                assert!(circle_norm(omega, n as i64).unwrap() >= at_q, "omega {omega}, n {n}, q_s {}", q[s]);
            }
        }
    }
}

#[test]
fn circle_norm_matches_exact_rational() {
    let mut d = oracles::Draw::new(7);
    for _ in 0..500 {
        let omega = d.unit();
        let n = d.int(1, 1_000_000) as i64 * if d.unit() < 0.5 { -1 } else { 1 };
        let x = rat(omega) * BigRational::from_integer(BigInt::from(n));
        let fr = &x - x.floor();
        let dist = if fr > BigRational::new(1.into(), 2.into()) { BigRational::one() - fr } else { fr };
        let want = dist.to_f64().unwrap();
        let got = circle_norm(omega, n).unwrap();
        assert!((got - want).abs() <= 1e-16 * want.max(1e-300) + 1e-300, "{omega} {n}: {got} vs {want}");
    }
    assert_eq!(circle_norm(0.5, 1).unwrap(), 0.5);
    assert!(matches!(circle_norm(0.5, 0), Err(NumTheoryError::Domain(_))));
}

#[test]
fn golden_fit_witness_is_fibonacci() {
    let f = Frequency::golden(40);
    let r = diophantine_fit(&f, 2.0, 10_000).unwrap();
    assert!(r.c_est > 0.0);
    // exhaustive scan oracle
    let mut best = (f64::INFINITY, 0u64);
    for n in 1..=10_000u64 {
        let v = (n as f64).powi(2) * circle_norm(GOLDEN_MEAN, n as i64).unwrap();
        if v < best.0 {
            best = (v, n);
        }
    }
    assert_eq!(r.n_witness, best.1);
    assert_eq!(r.c_est, best.0);
    let fib: Vec<u128> = f.denominators().collect();
    assert!(fib.contains(&(r.n_witness as u128)));
}

#[test]
fn golden_a1_tail_approaches_one_over_sqrt5() {
    let f = Frequency::golden(40);
    let r = diophantine_fit(&f, 1.0, 100_000).unwrap();
    let target = 1.0 / 5f64.sqrt();
    assert!((r.tail_c_est - target).abs() < 1e-4, "{}", r.tail_c_est);
}

#[test]
fn rational_fit_is_zero() {
    let f = continued_fraction(0.5, 10, 52).unwrap();
    assert!(f.is_rational());
    let r = diophantine_fit(&f, 3.0, 100).unwrap();
    assert_eq!((r.c_est, r.n_witness), (0.0, 2));
}

#[test]
fn beta_examples() {
    let golden = beta_estimate(&Frequency::golden(20)).unwrap();
    assert!(golden.value <= 2f64.ln() + 1e-15);
    // a_s = 2^{2^s}: q_1 = 4, q_2 = 16·4 + 1 = 65, …
    let fast = Frequency::from_quotients(&[4, 16, 256]);
    let b = beta_estimate(&fast).unwrap();
    let want = 65f64.ln() / 4.0;
    assert!((b.value - want).abs() < 1e-15);
    assert!(b.value > golden.value);
    assert!(matches!(
        beta_estimate(&Frequency::golden(2)),
        Err(NumTheoryError::InsufficientDepth { .. })
    ));
}

proptest! {
    #[test]
    fn fit_is_monotone_in_search_bound(omega in 0.001f64..0.999, n1 in 1u64..2000, extra in 0u64..2000) {
        let f = Frequency { omega, ..Frequency::golden(1) };
        let a = diophantine_fit(&f, 2.0, n1).unwrap();
        let b = diophantine_fit(&f, 2.0, n1 + extra).unwrap();
        prop_assert!(b.c_est <= a.c_est);
    }

    #[test]
    fn recurrence_and_coprimality(omega in 0.001f64..0.999) {
        if let Ok(f) = continued_fraction(omega, 10, 52) {
            for s in 1..f.convergents.len() {
                let (p, q) = f.convergents[s];
                let (p0, q0) = f.convergents[s - 1];
                let (pm, qm) = if s >= 2 { f.convergents[s - 2] } else { (0, 1) };
                prop_assert_eq!(q, f.quotients[s] * q0 + qm);
                prop_assert_eq!(p, f.quotients[s] * p0 + pm);
                prop_assert_eq!(num_integer_gcd(p, q), 1);
            }
        }
    }
}

fn num_integer_gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}
