//! Grid-measured exceptional phase sets: large deviations of `u_n` and
//! `(1/n) log|f_n|`, Wegner sets, and flatness of eigenvalue branches.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::cocycle::{u_n, CocycleParams};
use crate::determinant::dirichlet_det;
use crate::exec::Executor;
use crate::fmath;
use crate::operator::FiniteOperator;
use crate::potential::{least_squares, Potential};

#[derive(Debug, Clone, PartialEq)]
pub enum DeviationError {
    InvalidParameter(&'static str),
    /// Some measured set was empty; the fit needs positive measures.
    DegenerateFit { measures: Vec<(usize, f64)> },
}

impl fmt::Display for DeviationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
            Self::DegenerateFit { measures } => {
                write!(f, "cannot fit decay: some measures are 0 (below 1/G): {measures:?}")
            }
        }
    }
}

impl core::error::Error for DeviationError {}

/// Subset of the uniform grid `{i/G}` on the circle, with its maximal circular runs.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CircleGridSet {
    pub g: usize,
    pub bad: Vec<usize>,
    /// `(first index, length)`; a run may wrap past `G − 1`.
    pub runs: Vec<(usize, usize)>,
    /// Run endpoints moved by one bisection step towards the true boundary,
    /// as phases `(left, right)` with `right` possibly above 1.
    pub refined: Vec<(f64, f64)>,
}

impl CircleGridSet {
    /// Builds the set from per-index flags; `probe(x)` decides membership at
    /// half-grid points for endpoint refinement.
    pub fn from_flags(flags: &[bool], probe: impl Fn(f64) -> bool) -> Self {
        let g = flags.len();
        let bad: Vec<usize> = (0..g).filter(|&i| flags[i]).collect();
        if bad.is_empty() {
            return Self::empty(g);
        }
        if bad.len() == g {
            return Self {
                g,
                bad,
                runs: vec![(0, g)],
                refined: vec![(0.0, 1.0)],
            };
        }
        // start scanning right after a good index so no run is split by the wrap
        let start = (0..g).find(|&i| !flags[i]).unwrap() + 1;
        let mut runs = Vec::new();
        let mut i = 0;
        while i < g {
            let idx = (start + i) % g;
            if flags[idx] {
                let mut len = 0;
                while len < g && flags[(idx + len) % g] {
                    len += 1;
                }
                runs.push((idx, len));
                i += len;
            } else {
                i += 1;
            }
        }
        runs.sort_unstable();
        let h = 1.0 / g as f64;
        let refined = runs
            .iter()
            .map(|&(s, len)| {
                let left = s as f64 * h;
                let right = (s + len - 1) as f64 * h;
                let l = if probe(left - 0.5 * h) { left - 0.75 * h } else { left - 0.25 * h };
                let r = if probe(right + 0.5 * h) { right + 0.75 * h } else { right + 0.25 * h };
                (l, r)
            })
            .collect();
        Self { g, bad, runs, refined }
    }

    pub fn empty(g: usize) -> Self {
        Self {
            g,
            bad: Vec::new(),
            runs: Vec::new(),
            refined: Vec::new(),
        }
    }

    /// `|bad| / G`
    pub fn measure_est(&self) -> f64 {
        self.bad.len() as f64 / self.g as f64
    }

    pub fn interval_count(&self) -> usize {
        self.runs.len()
    }

    /// Total length of the refined intervals.
    pub fn refined_measure(&self) -> f64 {
        self.refined.iter().map(|(l, r)| r - l).sum::<f64>().min(1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LdtConfig {
    pub nu: f64,
    pub c_ldt: f64,
    /// Frozen interval-count exponent, once calibrated.
    pub c_count: Option<f64>,
}

impl Default for LdtConfig {
    fn default() -> Self {
        Self {
            nu: 0.25,
            c_ldt: 1.0,
            c_count: None,
        }
    }
}

impl LdtConfig {
    /// `ν = 1/(2A)` for a Diophantine exponent `A > 1`.
    pub fn from_exponent(a: f64) -> Result<Self, DeviationError> {
        if !(a > 1.0) {
            return Err(DeviationError::InvalidParameter("Diophantine exponent A must be > 1"));
        }
        Ok(Self {
            nu: 1.0 / (2.0 * a),
            ..Self::default()
        })
    }

    pub fn validate(&self) -> Result<(), DeviationError> {
        if !(self.nu > 0.0 && self.nu <= 0.5) {
            return Err(DeviationError::InvalidParameter("nu must lie in (0, 1/2]"));
        }
        if !(self.c_ldt > 0.0) {
            return Err(DeviationError::InvalidParameter("c_ldt must be > 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum DeviationKind {
    /// `u_n = (1/n) log‖M_n‖`
    Norm,
    /// `(1/n) log|f_n|`
    Determinant,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DeviationSet {
    pub kind: DeviationKind,
    pub n: usize,
    pub delta: f64,
    /// `L_n` on the scan grid
    pub l_n: f64,
    pub set: CircleGridSet,
}

fn check_scan(n: usize, g: usize) -> Result<(), DeviationError> {
    if n == 0 {
        return Err(DeviationError::InvalidParameter("n must be >= 1"));
    }
    if g < 1000 {
        return Err(DeviationError::InvalidParameter("grid size must be >= 1000"));
    }
    Ok(())
}

fn log_det_rate<P: Potential + ?Sized>(params: &CocycleParams<'_, P>, x: f64, n: usize) -> f64 {
    dirichlet_det(params, x, n).logmag / n as f64
}

/// Phases where `|u_n(x) − L_n| > δ` (or the determinant analogue), with `L_n`
/// the mean of `u_n` over the same grid.
pub fn deviation_set<P: Potential + ?Sized, E: Executor>(
    params: &CocycleParams<'_, P>,
    kind: DeviationKind,
    n: usize,
    delta: f64,
    g: usize,
    exec: &E,
) -> Result<DeviationSet, DeviationError> {
    check_scan(n, g)?;
    if !(delta > 0.0) {
        return Err(DeviationError::InvalidParameter("delta must be > 0"));
    }
    let us = exec.map_indexed(g, |i| u_n(params, i as f64 / g as f64, n));
    let l_n = us.iter().sum::<f64>() / g as f64;
    let values = match kind {
        DeviationKind::Norm => us,
        DeviationKind::Determinant => exec.map_indexed(g, |i| log_det_rate(params, i as f64 / g as f64, n)),
    };
    let flags: Vec<bool> = values.iter().map(|v| !((v - l_n).abs() <= delta)).collect();
    let probe = |x: f64| {
        let v = match kind {
            DeviationKind::Norm => u_n(params, x, n),
            DeviationKind::Determinant => log_det_rate(params, x, n),
        };
        !((v - l_n).abs() <= delta)
    };
    Ok(DeviationSet {
        kind,
        n,
        delta,
        l_n,
        set: CircleGridSet::from_flags(&flags, probe),
    })
}

pub fn deviation_set_u<P: Potential + ?Sized, E: Executor>(
    params: &CocycleParams<'_, P>,
    n: usize,
    delta: f64,
    g: usize,
    exec: &E,
) -> Result<DeviationSet, DeviationError> {
    deviation_set(params, DeviationKind::Norm, n, delta, g, exec)
}

pub fn deviation_set_f<P: Potential + ?Sized, E: Executor>(
    params: &CocycleParams<'_, P>,
    n: usize,
    delta: f64,
    g: usize,
    exec: &E,
) -> Result<DeviationSet, DeviationError> {
    deviation_set(params, DeviationKind::Determinant, n, delta, g, exec)
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LdtTrend {
    pub kind: DeviationKind,
    pub delta: f64,
    pub nu: f64,
    pub sets: Vec<DeviationSet>,
    /// Fit `log m ≈ intercept − c·δ·n^ν`.
    pub c_fit: f64,
    pub intercept: f64,
    pub residual: f64,
    pub strictly_decreasing: bool,
    /// `m(first) / m(last)`
    pub overall_ratio: f64,
}

pub fn ldt_trend<P: Potential + ?Sized, E: Executor>(
    params: &CocycleParams<'_, P>,
    kind: DeviationKind,
    n_list: &[usize],
    delta: f64,
    g: usize,
    config: &LdtConfig,
    exec: &E,
) -> Result<LdtTrend, DeviationError> {
    config.validate()?;
    if n_list.len() < 3 || n_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(DeviationError::InvalidParameter("need at least 3 increasing scales"));
    }
    let sets = n_list
        .iter()
        .map(|&n| deviation_set(params, kind, n, delta, g, exec))
        .collect::<Result<Vec<_>, _>>()?;
    fit_trend(sets, config)
}

/// Least-squares fit of `log measure_est` against `n^ν` over precomputed sets
/// (same kind and δ, increasing `n`).
pub fn fit_trend(sets: Vec<DeviationSet>, config: &LdtConfig) -> Result<LdtTrend, DeviationError> {
    config.validate()?;
    if sets.len() < 3 || sets.windows(2).any(|w| w[1].n <= w[0].n) {
        return Err(DeviationError::InvalidParameter("need at least 3 increasing scales"));
    }
    let (kind, delta) = (sets[0].kind, sets[0].delta);
    let measures: Vec<(usize, f64)> = sets.iter().map(|s| (s.n, s.set.measure_est())).collect();
    if measures.iter().any(|&(_, m)| m == 0.0) {
        return Err(DeviationError::DegenerateFit { measures });
    }
    let pts: Vec<(f64, f64)> = measures
        .iter()
        .map(|&(n, m)| (fmath::powf(n as f64, config.nu), fmath::ln(m)))
        .collect();
    let (slope, intercept) = least_squares(&pts);
    let residual = pts
        .iter()
        .map(|&(x, y)| (y - intercept - slope * x).abs())
        .fold(0.0, f64::max);
    let strictly_decreasing = measures.windows(2).all(|w| w[1].1 < w[0].1);
    let overall_ratio = measures[0].1 / measures[measures.len() - 1].1;
    Ok(LdtTrend {
        kind,
        delta,
        nu: config.nu,
        sets,
        c_fit: -slope / delta,
        intercept,
        residual,
        strictly_decreasing,
        overall_ratio,
    })
}

/// `k = ⌈(log n)^{4/ν}⌉` clamped to `[10, n]`.
pub fn default_wegner_k(n: usize, nu: f64) -> usize {
    let k = fmath::powf(fmath::ln(n as f64), 4.0 / nu);
    let k = if k.is_finite() && k < n as f64 { fmath::ceil(k) as usize } else { n };
    k.clamp(10, n.max(10))
}

/// `exp(−k^{1−ν/2})`, the Wegner scale.
pub fn wegner_epsilon(k: usize, nu: f64) -> f64 {
    fmath::exp(-fmath::powf(k as f64, 1.0 - nu / 2.0))
}

/// `exp(−k^{ν/4})`, the Wegner measure bound.
pub fn wegner_comparison(k: usize, nu: f64) -> f64 {
    fmath::exp(-fmath::powf(k as f64, nu / 4.0))
}

/// `exp(−k^{1−ν/4})`, the flatness lower bound.
pub fn flatness_threshold(k: usize, nu: f64) -> f64 {
    fmath::exp(-fmath::powf(k as f64, 1.0 - nu / 4.0))
}

/// Whether `H_[1,n](x)` has an eigenvalue in `[E − ε, E + ε)`.
fn near_spectrum<P: Potential + ?Sized>(params: &CocycleParams<'_, P>, x: f64, n: usize, eps: f64) -> bool {
    if eps <= 0.0 {
        return false;
    }
    let op = FiniteOperator::from_params(params, x, 1, n as i64);
    op.sturm_count(params.energy + eps) > op.sturm_count(params.energy - eps)
}

/// Phases with `dist(E, spec H_[1,n](x)) < ε`.
pub fn wegner_measure<P: Potential + ?Sized, E: Executor>(
    params: &CocycleParams<'_, P>,
    n: usize,
    epsilon: f64,
    g: usize,
    exec: &E,
) -> Result<CircleGridSet, DeviationError> {
    check_scan(n, g)?;
    if !(epsilon >= 0.0) {
        return Err(DeviationError::InvalidParameter("epsilon must be >= 0"));
    }
    let flags = exec.map_indexed(g, |i| near_spectrum(params, i as f64 / g as f64, n, epsilon));
    Ok(CircleGridSet::from_flags(&flags, |x| near_spectrum(params, x, n, epsilon)))
}

/// Eigenvalues of `H_[1,n](i/G)` for every grid index: `table[i][j−1] = E_j`.
pub fn branch_table<P: Potential + ?Sized, E: Executor>(
    params: &CocycleParams<'_, P>,
    n: usize,
    g: usize,
    exec: &E,
) -> Vec<Vec<f64>> {
    exec.map_indexed(g, |i| {
        let op = FiniteOperator::from_params(params, i as f64 / g as f64, 1, n as i64);
        op.eigenvalues(op.default_tol())
    })
}

/// `max − min` of `E_j` over the grid points of the arc `[start, start + len]`.
pub fn flatness<P: Potential + ?Sized, E: Executor>(
    params: &CocycleParams<'_, P>,
    n: usize,
    j: usize,
    start: f64,
    len: f64,
    g: usize,
    exec: &E,
) -> Result<f64, DeviationError> {
    if !(1..=n).contains(&j) {
        return Err(DeviationError::InvalidParameter("branch index must lie in 1..=n"));
    }
    if !(len > 0.0 && len <= 1.0) {
        return Err(DeviationError::InvalidParameter("arc length must lie in (0, 1]"));
    }
    let m = (fmath::ceil(len * g as f64) as usize).max(1);
    let vals = exec.map_indexed(m + 1, |i| {
        let x = start + len * i as f64 / m as f64;
        let op = FiniteOperator::from_params(params, x, 1, n as i64);
        op.eigenvalue(j, op.default_tol())
    });
    let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(hi - lo)
}

/// For each branch `j`, the smallest range over all grid arcs spanning
/// `w = ⌈len·G⌉` cells, from a [`branch_table`].
pub fn min_arc_flatness(table: &[Vec<f64>], len: f64) -> Vec<f64> {
    let g = table.len();
    let n = table.first().map_or(0, Vec::len);
    let w = (fmath::ceil(len * g as f64) as usize).clamp(1, g);
    (0..n)
        .map(|j| {
            (0..g)
                .map(|s| {
                    let mut lo = f64::INFINITY;
                    let mut hi = f64::NEG_INFINITY;
                    for t in 0..=w.min(g - 1) {
                        let v = table[(s + t) % g][j];
                        lo = lo.min(v);
                        hi = hi.max(v);
                    }
                    hi - lo
                })
                .fold(f64::INFINITY, f64::min)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::GevreyPotential;
    use crate::Sequential;

    #[test]
    fn runs_wrap_around() {
        let mut flags = vec![false; 10];
        for i in [0, 1, 4, 8, 9] {
            flags[i] = true;
        }
        let s = CircleGridSet::from_flags(&flags, |_| false);
        assert_eq!(s.runs, vec![(4, 1), (8, 4)]);
        assert_eq!(s.interval_count(), 2);
        assert!((s.measure_est() - 0.5).abs() < 1e-15);
        let covered: usize = s.runs.iter().map(|r| r.1).sum();
        assert_eq!(covered, s.bad.len());
    }

    #[test]
    fn refinement_moves_endpoints() {
        let flags = [false, false, true, true, false];
        let s = CircleGridSet::from_flags(&flags, |x| x > 0.32 && x < 0.75);
        assert_eq!(s.runs, vec![(2, 2)]);
        let (l, r) = s.refined[0];
        assert!((l - 0.35).abs() < 1e-15);
        assert!((r - 0.75).abs() < 1e-15);
    }

    #[test]
    fn free_deviation_sets_are_empty() {
        let z = GevreyPotential::zero();
        let p = CocycleParams::new(&z, 0.0, 0.618, 0.0).unwrap();
        let u = deviation_set_u(&p, 4, 1e-9, 1000, &Sequential).unwrap();
        assert_eq!(u.set.measure_est(), 0.0);
        let f = deviation_set_f(&p, 4, 1e-9, 1000, &Sequential).unwrap();
        assert_eq!(f.set.measure_est(), 0.0);
        let t = ldt_trend(&p, DeviationKind::Norm, &[4, 8, 12], 0.1, 1000, &LdtConfig::default(), &Sequential);
        assert!(matches!(t, Err(DeviationError::DegenerateFit { .. })));
    }

    #[test]
    fn wegner_extremes() {
        let amo = GevreyPotential::almost_mathieu();
        let p = CocycleParams::new(&amo, 10.0, 0.618, 0.0).unwrap();
        assert_eq!(wegner_measure(&p, 20, 0.0, 1000, &Sequential).unwrap().measure_est(), 0.0);
        assert_eq!(wegner_measure(&p, 20, 100.0, 1000, &Sequential).unwrap().measure_est(), 1.0);
    }

    #[test]
    fn wegner_defaults() {
        assert_eq!(default_wegner_k(200, 0.25), 200);
        assert_eq!(default_wegner_k(5, 0.25), 10);
        assert!((wegner_epsilon(40, 0.25) - fmath::exp(-fmath::powf(40.0, 0.875))).abs() < 1e-25);
    }

    #[test]
    fn zero_coupling_is_flat() {
        let amo = GevreyPotential::almost_mathieu();
        let p = CocycleParams::new(&amo, 0.0, 0.618, 0.0).unwrap();
        assert_eq!(flatness(&p, 10, 3, 0.0, 1.0, 1000, &Sequential).unwrap(), 0.0);
    }

    #[test]
    fn config_validation() {
        assert!(LdtConfig::from_exponent(1.0).is_err());
        assert_eq!(LdtConfig::from_exponent(2.0).unwrap().nu, 0.25);
        let bad = LdtConfig { nu: 0.7, ..LdtConfig::default() };
        assert!(bad.validate().is_err());
    }
}
