//! Potentials given by finitely many Fourier coefficients,
//! `v(x) = Σ_k v̂(k) e^{2πikx}`, with a Gevrey decay envelope
//! `|v̂(k)| ≤ ‖v‖_{s,K} exp(−ρ|k|^{1/s})`, `ρ = 1/K`.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::exec::Executor;
use crate::fmath::{self, TAU};

/// Real-valued potential on the circle `ℝ/ℤ`, evaluated at a phase.
pub trait Potential: Sync {
    fn value(&self, x: f64) -> f64;

    /// An upper bound for `sup |v|`.
    fn sup_bound(&self) -> f64;

    /// An upper bound for the Lipschitz constant of `v` on the circle.
    fn lipschitz(&self) -> f64;
}

impl<P: Potential + ?Sized> Potential for &P {
    fn value(&self, x: f64) -> f64 {
        (**self).value(x)
    }
    fn sup_bound(&self) -> f64 {
        (**self).sup_bound()
    }
    fn lipschitz(&self) -> f64 {
        (**self).lipschitz()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PotentialError {
    InvalidParameter(&'static str),
    DuplicateMode(i64),
    RealnessViolated { residue: f64 },
    DecayViolated { modes: Vec<i64> },
    DegenerateFit,
}

impl fmt::Display for PotentialError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
            Self::DuplicateMode(k) => write!(f, "Fourier mode {k} given twice"),
            Self::RealnessViolated { residue } => {
                write!(f, "potential is not real: imaginary residue {residue:e}")
            }
            Self::DecayViolated { modes } => write!(f, "decay bound violated at k = {modes:?}"),
            Self::DegenerateFit => write!(f, "level-set measures are all 0 or 1"),
        }
    }
}

impl core::error::Error for PotentialError {}

/// One Fourier coefficient `v̂(k) = re + i·im`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FourierMode {
    pub k: i64,
    pub re: f64,
    pub im: f64,
}

impl FourierMode {
    pub fn abs(&self) -> f64 {
        fmath::hypot(self.re, self.im)
    }
}

/// Per-|k| weights of the real and imaginary parts:
/// `Re = Σ c_k cos(2πkx) + s_k sin(2πkx)`, `Im = Σ ci_k cos + si_k sin`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct Harmonic {
    c: f64,
    s: f64,
    ci: f64,
    si: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GevreyPotential {
    modes: Vec<FourierMode>,
    harmonics: Vec<Harmonic>,
    s: f64,
    k_scale: f64,
    norm_sk: f64,
    /// Set for shipped potentials that violate the non-degeneracy condition.
    pub conforming: bool,
}

impl GevreyPotential {
    /// `s ≥ 1`, `K > 0`, `norm_sK ≥ 0`. Modes may be given in any order; realness
    /// is not enforced here (see [`GevreyPotential::eval`]).
    pub fn new(
        s: f64,
        k_scale: f64,
        norm_sk: f64,
        mut modes: Vec<FourierMode>,
    ) -> Result<Self, PotentialError> {
        if !(s >= 1.0) || !s.is_finite() {
            return Err(PotentialError::InvalidParameter("Gevrey exponent s must be >= 1"));
        }
        if !(k_scale > 0.0) || !k_scale.is_finite() {
            return Err(PotentialError::InvalidParameter("Gevrey scale K must be > 0"));
        }
        if !(norm_sk >= 0.0) || !norm_sk.is_finite() {
            return Err(PotentialError::InvalidParameter("norm_sK must be finite and >= 0"));
        }
        if modes.iter().any(|m| !m.re.is_finite() || !m.im.is_finite()) {
            return Err(PotentialError::InvalidParameter("non-finite Fourier coefficient"));
        }
        modes.sort_by_key(|m| m.k);
        if let Some(w) = modes.windows(2).find(|w| w[0].k == w[1].k) {
            return Err(PotentialError::DuplicateMode(w[0].k));
        }
        let cutoff = modes.iter().map(|m| m.k.unsigned_abs()).max().unwrap_or(0) as usize;
        if cutoff > 1_000_000 {
            return Err(PotentialError::InvalidParameter("Fourier cutoff too large"));
        }
        let mut harmonics = vec![Harmonic::default(); cutoff + 1];
        for m in &modes {
            let h = &mut harmonics[m.k.unsigned_abs() as usize];
            // v̂(k)e^{iθ} + v̂(−k)e^{−iθ}, split by sign of k
            if m.k >= 0 {
                h.c += m.re;
                h.s -= m.im;
                h.ci += m.im;
                h.si += m.re;
            } else {
                h.c += m.re;
                h.s += m.im;
                h.ci += m.im;
                h.si -= m.re;
            }
        }
        // k = 0 has no sine part
        if let Some(h0) = harmonics.first_mut() {
            h0.s = 0.0;
            h0.si = 0.0;
        }
        Ok(Self {
            modes,
            harmonics,
            s,
            k_scale,
            norm_sk,
            conforming: true,
        })
    }

    /// The identically-zero potential.
    pub fn zero() -> Self {
        Self::new(1.0, 1.0, 0.0, Vec::new()).expect("valid parameters")
    }

    /// Almost Mathieu: `v(x) = 2 cos 2πx`, analytic (`s = 1`, `K = 1`, `‖v‖ = e`).
    pub fn almost_mathieu() -> Self {
        let modes = vec![
            FourierMode { k: -1, re: 1.0, im: 0.0 },
            FourierMode { k: 1, re: 1.0, im: 0.0 },
        ];
        Self::new(1.0, 1.0, core::f64::consts::E, modes).expect("valid parameters")
    }

    /// `v̂(k) = exp(−|k|^{1/2})` for `|k| ≤ cutoff`: genuinely Gevrey with `s = 2`,
    /// `K = 1`, and equality in the decay bound with `‖v‖ = 1`.
    pub fn gevrey_model(cutoff: usize) -> Self {
        let c = cutoff as i64;
        let modes = (-c..=c)
            .map(|k| FourierMode {
                k,
                re: fmath::exp(-fmath::sqrt(k.unsigned_abs() as f64)),
                im: 0.0,
            })
            .collect();
        Self::new(2.0, 1.0, 1.0, modes).expect("valid parameters")
    }

    /// Cutoff at which the model coefficients fall below `1e-19`.
    pub const GEVREY_MODEL_CUTOFF: usize = 2000;

    /// A flat bump `exp(−1/sin²(πx))`, Gevrey of order 2 but with every
    /// derivative vanishing at `x = 0`. Coefficients come from a trapezoid rule
    /// on `4·cutoff` nodes; the result is flagged non-conforming.
    pub fn flat_bump(cutoff: usize) -> Self {
        let nodes = 4 * cutoff.max(8);
        let samples: Vec<f64> = (0..nodes)
            .map(|i| {
                let sn = fmath::sin(core::f64::consts::PI * i as f64 / nodes as f64);
                if sn == 0.0 {
                    0.0
                } else {
                    fmath::exp(-1.0 / (sn * sn))
                }
            })
            .collect();
        let c = cutoff as i64;
        let modes = (-c..=c)
            .map(|k| {
                let re = samples
                    .iter()
                    .enumerate()
                    .map(|(i, &f)| f * fmath::cos(TAU * (k * i as i64) as f64 / nodes as f64))
                    .sum::<f64>()
                    / nodes as f64;
                FourierMode { k, re, im: 0.0 }
            })
            .collect();
        let mut v = Self::new(2.0, 1.0, 1.0, modes).expect("valid parameters");
        v.norm_sk = v.tightest_norm();
        v.conforming = false;
        v
    }

    pub fn modes(&self) -> &[FourierMode] {
        &self.modes
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn k_scale(&self) -> f64 {
        self.k_scale
    }

    pub fn rho(&self) -> f64 {
        1.0 / self.k_scale
    }

    pub fn norm_sk(&self) -> f64 {
        self.norm_sk
    }

    pub fn cutoff(&self) -> usize {
        self.harmonics.len().saturating_sub(1)
    }

    /// Sum of `|v̂(k)|`.
    pub fn coefficient_mass(&self) -> f64 {
        self.modes.iter().map(FourierMode::abs).sum()
    }

    /// Real and imaginary parts of the partial sum over `|k| ≤ degree`.
    pub fn eval_parts(&self, x: f64, degree: usize) -> (f64, f64) {
        let top = degree.min(self.cutoff());
        if self.harmonics.is_empty() {
            return (0.0, 0.0);
        }
        let theta = TAU * fmath::frac(x);
        let (ws, wc) = (fmath::sin(theta), fmath::cos(theta));
        let (mut zc, mut zs) = (1.0f64, 0.0f64);
        let (mut re, mut im) = (0.0, 0.0);
        for (k, h) in self.harmonics[..=top].iter().enumerate() {
            if k > 0 {
                if k % 32 == 0 {
                    let a = theta * k as f64;
                    zc = fmath::cos(a);
                    zs = fmath::sin(a);
                } else {
                    (zc, zs) = (zc * wc - zs * ws, zs * wc + zc * ws);
                }
            }
            re += h.c * zc + h.s * zs;
            im += h.ci * zc + h.si * zs;
        }
        (re, im)
    }

    /// `v(x)`, failing if the imaginary residue exceeds `1e-12 · Σ|v̂|`.
    pub fn eval(&self, x: f64) -> Result<f64, PotentialError> {
        let (re, im) = self.eval_parts(x, usize::MAX);
        let tol = 1e-12 * self.coefficient_mass().max(1.0);
        if im.abs() > tol {
            return Err(PotentialError::RealnessViolated { residue: im.abs() });
        }
        Ok(re)
    }

    /// Evaluation at grid phase `i/g`, reduced to `0 ≤ i < g` first so that the
    /// result is exactly periodic in `i`.
    pub fn eval_grid(&self, i: i64, g: u64) -> Result<f64, PotentialError> {
        let r = i.rem_euclid(g as i64);
        self.eval(r as f64 / g as f64)
    }

    /// Largest `|v̂(k) − conj v̂(−k)|`.
    pub fn realness_defect(&self) -> f64 {
        self.harmonics
            .iter()
            .map(|h| fmath::hypot(h.ci, h.si))
            .fold(0.0, f64::max)
    }

    /// Smallest constant `C` with `|v̂(k)| ≤ C exp(−ρ|k|^{1/s})` for all stored `k`.
    pub fn tightest_norm(&self) -> f64 {
        self.modes
            .iter()
            .map(|m| m.abs() * self.decay_weight(m.k).recip())
            .fold(0.0, f64::max)
    }

    fn decay_weight(&self, k: i64) -> f64 {
        fmath::exp(-self.rho() * fmath::powf(k.unsigned_abs() as f64, 1.0 / self.s))
    }
}

impl Potential for GevreyPotential {
    fn value(&self, x: f64) -> f64 {
        self.eval_parts(x, usize::MAX).0
    }

    fn sup_bound(&self) -> f64 {
        self.coefficient_mass()
    }

    fn lipschitz(&self) -> f64 {
        TAU * self
            .modes
            .iter()
            .map(|m| m.k.unsigned_abs() as f64 * m.abs())
            .sum::<f64>()
    }
}

/// Analytic truncation `v_n = Σ_{|k| ≤ n̄} v̂(k) e^{2πikx}` with `n̄ = ⌈n^{2s}⌉`.
#[derive(Debug, Clone, Copy)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct TruncatedPotential<'a> {
    #[cfg_attr(feature = "serde", serde(skip))]
    pub base: &'a GevreyPotential,
    pub n: u64,
    pub degree: usize,
    /// `‖v‖_{s,K} exp(−(ρ/2) n²)`
    pub error_bound: f64,
    /// `(ρ/2) n^{−2(s−1)}`
    pub strip_halfwidth: f64,
}

pub fn truncate(v: &GevreyPotential, n: u64) -> Result<TruncatedPotential<'_>, PotentialError> {
    if n == 0 {
        return Err(PotentialError::InvalidParameter("truncation scale n must be >= 1"));
    }
    let nf = n as f64;
    let raw = fmath::ceil(fmath::powf(nf, 2.0 * v.s));
    let degree = if raw >= v.cutoff() as f64 {
        v.cutoff()
    } else {
        raw as usize
    };
    Ok(TruncatedPotential {
        base: v,
        n,
        degree,
        error_bound: v.norm_sk * fmath::exp(-0.5 * v.rho() * nf * nf),
        strip_halfwidth: 0.5 * v.rho() * fmath::powf(nf, -2.0 * (v.s - 1.0)),
    })
}

impl TruncatedPotential<'_> {
    pub fn is_exact(&self) -> bool {
        self.degree >= self.base.cutoff()
    }

    /// `sup_i |v(i/G) − v_n(i/G)|`.
    pub fn grid_error<E: Executor>(&self, grid: usize, exec: &E) -> f64 {
        if self.is_exact() {
            return 0.0;
        }
        exec.map_indexed(grid, |i| {
            let x = i as f64 / grid as f64;
            (self.base.value(x) - self.value(x)).abs()
        })
        .into_iter()
        .fold(0.0, f64::max)
    }
}

impl Potential for TruncatedPotential<'_> {
    fn value(&self, x: f64) -> f64 {
        self.base.eval_parts(x, self.degree).0
    }

    fn sup_bound(&self) -> f64 {
        self.base
            .modes
            .iter()
            .filter(|m| m.k.unsigned_abs() as usize <= self.degree)
            .map(FourierMode::abs)
            .sum()
    }

    fn lipschitz(&self) -> f64 {
        TAU * self
            .base
            .modes
            .iter()
            .filter(|m| m.k.unsigned_abs() as usize <= self.degree)
            .map(|m| m.k.unsigned_abs() as f64 * m.abs())
            .sum::<f64>()
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DecayReport {
    pub stored_norm: f64,
    pub tightest_norm: f64,
    pub modes_checked: usize,
}

/// Verifies the Fourier-side Gevrey bound with the stored `‖v‖_{s,K}`.
/// A relative slack of `1e-12` absorbs rounding in `exp`.
pub fn decay_check(v: &GevreyPotential) -> Result<DecayReport, PotentialError> {
    let limit = v.norm_sk * (1.0 + 1e-12);
    let bad: Vec<i64> = v
        .modes
        .iter()
        .filter(|m| m.abs() > limit * v.decay_weight(m.k))
        .map(|m| m.k)
        .collect();
    if !bad.is_empty() {
        return Err(PotentialError::DecayViolated { modes: bad });
    }
    Ok(DecayReport {
        stored_norm: v.norm_sk,
        tightest_norm: v.tightest_norm(),
        modes_checked: v.modes.len(),
    })
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LojasiewiczReport {
    pub gamma: f64,
    pub grid: usize,
    /// `(δ, m(δ))` in the order given.
    pub measures: Vec<(f64, f64)>,
    /// Least-squares slope of `log m` against `log δ` over `0 < m < 1`.
    pub alpha: f64,
    pub intercept: f64,
    /// Largest `|log m − (intercept + α log δ)|` over fitted points.
    pub residual: f64,
    /// `log m(δ) ≤ α log δ + residual` at every fitted point.
    pub bound_holds: bool,
}

/// Grid measure of `{x : |v(x) − γ| < δ}` along a ladder of `δ`, with a power-law fit.
pub fn lojasiewicz_probe<P: Potential, E: Executor>(
    v: &P,
    gamma: f64,
    deltas: &[f64],
    grid: usize,
    exec: &E,
) -> Result<LojasiewiczReport, PotentialError> {
    if grid < 1000 {
        return Err(PotentialError::InvalidParameter("grid size must be >= 1000"));
    }
    if deltas.is_empty() || deltas.iter().any(|&d| !(d > 0.0)) {
        return Err(PotentialError::InvalidParameter("deltas must be positive"));
    }
    if deltas.windows(2).any(|w| w[1] >= w[0]) {
        return Err(PotentialError::InvalidParameter("deltas must be decreasing"));
    }
    let gaps = exec.map_indexed(grid, |i| (v.value(i as f64 / grid as f64) - gamma).abs());
    let measures: Vec<(f64, f64)> = deltas
        .iter()
        .map(|&d| (d, gaps.iter().filter(|&&g| g < d).count() as f64 / grid as f64))
        .collect();
    let pts: Vec<(f64, f64)> = measures
        .iter()
        .filter(|(_, m)| *m > 0.0 && *m < 1.0)
        .map(|&(d, m)| (fmath::ln(d), fmath::ln(m)))
        .collect();
    if pts.len() < 2 {
        return Err(PotentialError::DegenerateFit);
    }
    let (slope, intercept) = least_squares(&pts);
    let residual = pts
        .iter()
        .map(|&(x, y)| (y - intercept - slope * x).abs())
        .fold(0.0, f64::max);
    let bound_holds = pts.iter().all(|&(x, y)| y <= slope * x + residual + 1e-12);
    Ok(LojasiewiczReport {
        gamma,
        grid,
        measures,
        alpha: slope,
        intercept,
        residual,
        bound_holds,
    })
}

/// Ordinary least squares `y ≈ intercept + slope·x`.
pub(crate) fn least_squares(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (slope, my - slope * mx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Sequential;

    #[test]
    fn almost_mathieu_values() {
        let v = GevreyPotential::almost_mathieu();
        assert_eq!(v.eval(0.0).unwrap(), 2.0);
        assert!(v.eval(0.25).unwrap().abs() < 1e-15);
        assert!((v.eval(0.5).unwrap() + 2.0).abs() < 1e-15);
        assert_eq!(v.sup_bound(), 2.0);
        assert!((v.lipschitz() - 2.0 * TAU).abs() < 1e-14);
    }

    #[test]
    fn complex_conjugate_pairs_give_real_sine() {
        // v̂(±1) = ∓i/2·... : v = sin 2πx  ⇔  v̂(1) = −i/2, v̂(−1) = i/2
        let v = GevreyPotential::new(
            1.0,
            1.0,
            1.0,
            vec![
                FourierMode { k: 1, re: 0.0, im: -0.5 },
                FourierMode { k: -1, re: 0.0, im: 0.5 },
            ],
        )
        .unwrap();
        for x in [0.1, 0.25, 0.7] {
            assert!((v.eval(x).unwrap() - fmath::sin(TAU * x)).abs() < 1e-15);
        }
        assert_eq!(v.realness_defect(), 0.0);
    }

    #[test]
    fn one_sided_coefficient_is_not_real() {
        let v = GevreyPotential::new(1.0, 1.0, 1.0, vec![FourierMode { k: 1, re: 1.0, im: 0.0 }])
            .unwrap();
        assert!(matches!(v.eval(0.25), Err(PotentialError::RealnessViolated { .. })));
        assert!(v.realness_defect() > 0.5);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(GevreyPotential::new(0.5, 1.0, 1.0, vec![]).is_err());
        assert!(GevreyPotential::new(1.0, 0.0, 1.0, vec![]).is_err());
        let dup = vec![FourierMode { k: 2, re: 1.0, im: 0.0 }; 2];
        assert_eq!(
            GevreyPotential::new(1.0, 1.0, 1.0, dup),
            Err(PotentialError::DuplicateMode(2))
        );
    }

    #[test]
    fn grid_evaluation_is_exactly_periodic() {
        let v = GevreyPotential::gevrey_model(50);
        for i in [-7i64, 0, 3, 999] {
            assert_eq!(v.eval_grid(i, 1000).unwrap(), v.eval_grid(i + 1000, 1000).unwrap());
        }
    }

    #[test]
    fn truncation_degrees() {
        let amo = GevreyPotential::almost_mathieu();
        let t = truncate(&amo, 5).unwrap();
        assert_eq!(t.degree, 1);
        assert!(t.is_exact());
        assert_eq!(t.grid_error(1000, &Sequential), 0.0);

        let model = GevreyPotential::gevrey_model(GevreyPotential::GEVREY_MODEL_CUTOFF);
        let t3 = truncate(&model, 3).unwrap();
        assert_eq!(t3.degree, 81);
        assert!((t3.error_bound - fmath::exp(-4.5)).abs() < 1e-16);
        assert!((t3.strip_halfwidth - 0.5 / 9.0).abs() < 1e-16);
        assert_eq!(truncate(&model, 1).unwrap().degree, 1);
        assert!(truncate(&model, 0).is_err());
    }

    #[test]
    fn decay_check_examples() {
        let model = GevreyPotential::gevrey_model(200);
        let r = decay_check(&model).unwrap();
        assert!((r.tightest_norm - 1.0).abs() < 1e-12);

        let mut modes = model.modes().to_vec();
        for m in modes.iter_mut().filter(|m| m.k.abs() == 5) {
            m.re *= 2.0;
        }
        let bumped = GevreyPotential::new(2.0, 1.0, 1.0, modes).unwrap();
        assert_eq!(
            decay_check(&bumped),
            Err(PotentialError::DecayViolated { modes: vec![-5, 5] })
        );

        // single harmonic: |v̂(1)| = 1 = e^ρ · e^{−ρ} for any s
        for s in [1.0, 1.5, 3.0] {
            let amo = GevreyPotential::new(s, 1.0, core::f64::consts::E, GevreyPotential::almost_mathieu().modes().to_vec()).unwrap();
            assert!(decay_check(&amo).is_ok());
        }
    }

    #[test]
    fn lojasiewicz_outside_range_is_degenerate() {
        let v = GevreyPotential::almost_mathieu();
        let r = lojasiewicz_probe(&v, 3.0, &[0.5, 0.1, 0.01], 2000, &Sequential);
        assert_eq!(r, Err(PotentialError::DegenerateFit));
    }

    #[test]
    fn lojasiewicz_input_validation() {
        let v = GevreyPotential::almost_mathieu();
        assert!(lojasiewicz_probe(&v, 0.0, &[0.1, 0.2], 2000, &Sequential).is_err());
        assert!(lojasiewicz_probe(&v, 0.0, &[0.1], 10, &Sequential).is_err());
    }

    #[test]
    fn flat_bump_is_flagged_and_real() {
        let v = GevreyPotential::flat_bump(128);
        assert!(!v.conforming);
        assert!(v.value(0.0).abs() < 1e-12);
        assert!((v.value(0.5) - fmath::exp(-1.0)).abs() < 1e-10);
    }
}
