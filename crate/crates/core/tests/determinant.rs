mod oracles;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use proptest::prelude::*;

use oracles::{big_ln_abs, big_sign, cofactor_det, dense_shifted, exact_transfer_product, rat};
use qpspec_core::cocycle::{product, u_n, CocycleParams};
use qpspec_core::determinant::{
    det_transfer_identity, dirichlet_det, prefix_dets, shifted_det, suffix_dets, tridiagonal_det, SignedLog,
};
use qpspec_core::numtheory::GOLDEN_MEAN;
use qpspec_core::potential::{GevreyPotential, Potential};

fn window_diag<P: Potential>(p: &CocycleParams<'_, P>, x: f64, a: i64, b: i64) -> Vec<f64> {
    (a..=b).map(|j| p.diag(p.phase(x, j)) - p.energy).collect()
}

#[test]
fn recurrence_matches_dense_cofactor_expansion() {
    let v = GevreyPotential::gevrey_model(100);
    let mut d = oracles::Draw::new(21);
    for _ in 0..60 {
        let n = d.int(1, 12);
        let lambda = d.range(0.1, 30.0);
        let p = CocycleParams::new(&v, lambda, GOLDEN_MEAN, d.range(-2.0, 2.0)).unwrap();
        let x = d.unit();
        let diag = window_diag(&p, x, 1, n as i64);
        let exact = cofactor_det(&dense_shifted(&diag, 0.0));
        let got = dirichlet_det(&p, x, n);
        // forward error of the three-term recurrence relative to Π(|d_j| + 2)
        let growth: f64 = diag.iter().map(|t| (t.abs() + 2.0).ln()).sum();
        if exact.is_zero() {
            assert!(got.is_zero() || got.logmag < growth - 30.0);
            continue;
        }
        let want = big_ln_abs(&exact);
        let cond = (growth - want).exp();
        assert_eq!(got.sign, big_sign(&exact), "n {n} λ {lambda}");
        assert!((got.logmag - want).abs() <= 1e-14 * n as f64 * cond, "n {n}: {} vs {want}", got.logmag);
    }
}

#[test]
fn window_determinants_agree_with_dense_oracle_and_each_other() {
    let v = GevreyPotential::almost_mathieu();
    let p = CocycleParams::new(&v, 3.0, GOLDEN_MEAN, 0.4).unwrap();
    let (x, a, b) = (0.21, -4i64, 5i64);
    let pre = prefix_dets(&p, x, a, b);
    let suf = suffix_dets(&p, x, a, b);
    assert_eq!(pre.len(), (b - a + 2) as usize);
    assert_eq!(suf.len(), (b - a + 2) as usize);
    for k in a - 1..=b {
        let want = cofactor_det(&dense_shifted(&window_diag(&p, x, a, k), 0.0));
        let got = pre[(k - a + 1) as usize];
        let direct = shifted_det(&p, x, a, k);
        assert_eq!(got, direct);
        if k >= a {
            assert_eq!(got.sign, big_sign(&want));
            assert!((got.logmag - big_ln_abs(&want)).abs() < 1e-12);
        } else {
            assert_eq!(got, SignedLog::ONE);
        }
    }
    for k in a..=b + 1 {
        let want = shifted_det(&p, x, k, b);
        let got = suf[(k - a) as usize];
        assert_eq!(got.sign, want.sign);
        assert!((got.logmag - want.logmag).abs() < 1e-12);
    }
}

#[test]
fn transfer_entries_are_exact_determinants() {
    // exact rational identity, then the f64 checker on the same data
    let v = GevreyPotential::almost_mathieu();
    let p = CocycleParams::new(&v, 0.5, GOLDEN_MEAN, 0.3).unwrap();
    let x = 0.17;
    let n = 9;
    let m = exact_transfer_product(&window_diag(&p, x, 1, n));
    let fn_ = cofactor_det(&dense_shifted(&window_diag(&p, x, 1, n), 0.0));
    let fn1_shift = cofactor_det(&dense_shifted(&window_diag(&p, x, 2, n), 0.0));
    assert_eq!(m[0][0], fn_);
    assert_eq!(m[0][1], -fn1_shift);
    let r = det_transfer_identity(&p, x, n as usize).unwrap();
    assert!(r.signs_agree);
    assert!(r.discrepancy <= r.tolerance);
}

#[test]
fn determinant_is_a_monic_polynomial_of_degree_n_in_energy() {
    // n-th forward difference of f_n(E) at unit step is (−1)^n n!; the (n+1)-th vanishes.
    let v = GevreyPotential::almost_mathieu();
    let x = 0.31;
    for n in 1..=7usize {
        let vals: Vec<BigRational> = (0..=n + 1)
            .map(|k| {
                let p = CocycleParams::new(&v, 0.5, GOLDEN_MEAN, k as f64).unwrap();
                rat(dirichlet_det(&p, x, n).to_f64())
            })
            .collect();
        let mut diffs = vals;
        for _ in 0..n {
            diffs = diffs.windows(2).map(|w| &w[1] - &w[0]).collect();
        }
        let fact: i64 = (1..=n as i64).product();
        let want = if n % 2 == 0 { fact } else { -fact };
        let nth = diffs[0].clone();
        let err = (nth - BigRational::from_integer(BigInt::from(want))).abs();
        assert!(err < rat(1e-6), "n = {n}");
        let last = &diffs[1] - &diffs[0];
        assert!(last.abs() < rat(1e-6));
    }
}

#[test]
fn tridiagonal_det_small_cases() {
    assert_eq!(tridiagonal_det(&[]), SignedLog::ONE);
    let close = |d: &[f64], want: f64| (tridiagonal_det(d).to_f64() - want).abs() < 1e-15;
    assert!(close(&[3.0], 3.0));
    assert!(close(&[2.0, 2.0], 3.0));
    assert!(tridiagonal_det(&[1.0, 1.0]).is_zero());
    // free at E = 0: f_n cycles 0, −1, 0, 1
    for (n, want) in (1..=8).zip([0.0, -1.0, 0.0, 1.0, 0.0, -1.0, 0.0, 1.0]) {
        assert!(close(&vec![0.0; n], want), "n = {n}");
    }
}

#[test]
fn large_windows_do_not_overflow() {
    let v = GevreyPotential::almost_mathieu();
    let p = CocycleParams::new(&v, 1e6, GOLDEN_MEAN, 0.0).unwrap();
    let f = dirichlet_det(&p, 0.1, 5000);
    assert!(f.logmag.is_finite() && f.logmag > 5000.0 * 10.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn determinant_growth_is_bounded_by_transfer_norm(
        lambda in 0.0f64..100.0, e in -3.0f64..3.0, x in 0.0f64..1.0, n in 1usize..400
    ) {
        let v = GevreyPotential::gevrey_model(64);
        let p = CocycleParams::new(&v, lambda, GOLDEN_MEAN, e).unwrap();
        let f = dirichlet_det(&p, x, n);
        if !f.is_zero() {
            prop_assert!(f.logmag / n as f64 <= u_n(&p, x, n) + 1e-12);
            prop_assert!(f.logmag <= product(&p, x, n).log_norm() + 1e-12);
        }
    }

    #[test]
    fn signed_log_roundtrip(v in -1e300f64..1e300) {
        let s = SignedLog::from_f64(v);
        let back = s.to_f64();
        // log storage costs about |ln v| ulps
        prop_assert!((back - v).abs() <= 4.0 * f64::EPSILON * (1.0 + v.abs().ln().abs()) * v.abs());
    }
}
