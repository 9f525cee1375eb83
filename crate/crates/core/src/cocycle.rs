//! Transfer matrices `M(x) = [[λv(x) − E, −1], [1, 0]]` and their products
//! `M_n(x) = M(x + nω) ⋯ M(x + ω)`, kept as `exp(logscale) · m`.

use alloc::vec::Vec;
use core::fmt;

use crate::exec::Executor;
use crate::fmath;
use crate::potential::{truncate, GevreyPotential, Potential, PotentialError};

pub type Mat2 = [[f64; 2]; 2];

pub const IDENTITY: Mat2 = [[1.0, 0.0], [0.0, 1.0]];

pub fn mat_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    [
        [
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
        ],
        [
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        ],
    ]
}

pub fn det(a: &Mat2) -> f64 {
    a[0][0] * a[1][1] - a[0][1] * a[1][0]
}

/// Largest singular value, in closed form:
/// `σ_max = (√((a+d)² + (c−b)²) + √((a−d)² + (b+c)²)) / 2`.
pub fn spectral_norm(m: &Mat2) -> f64 {
    let [[a, b], [c, d]] = *m;
    0.5 * (fmath::hypot(a + d, c - b) + fmath::hypot(a - d, b + c))
}

fn max_abs_entry(m: &Mat2) -> f64 {
    m[0][0]
        .abs()
        .max(m[0][1].abs())
        .max(m[1][0].abs())
        .max(m[1][1].abs())
}

/// `exp(logscale) · m` with `max |m_ij| = 1`, hence `‖m‖ ∈ [1, 2]`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ScaledMatrix {
    pub m: Mat2,
    pub logscale: f64,
}

impl ScaledMatrix {
    pub const IDENTITY: Self = Self {
        m: IDENTITY,
        logscale: 0.0,
    };

    /// Wraps and renormalizes a plain matrix. The zero matrix is kept as is
    /// with `logscale = −∞`.
    pub fn from_matrix(m: Mat2) -> Self {
        let mut s = Self { m, logscale: 0.0 };
        s.renormalize();
        s
    }

    fn renormalize(&mut self) {
        let top = max_abs_entry(&self.m);
        if top == 0.0 {
            self.logscale = f64::NEG_INFINITY;
            return;
        }
        if top != 1.0 {
            for row in self.m.iter_mut() {
                for e in row.iter_mut() {
                    *e /= top;
                }
            }
            self.logscale += fmath::ln(top);
        }
    }

    /// `self · rhs`
    pub fn mul(&self, rhs: &Self) -> Self {
        let mut out = Self {
            m: mat_mul(&self.m, &rhs.m),
            logscale: self.logscale + rhs.logscale,
        };
        out.renormalize();
        out
    }

    /// `log ‖exp(logscale)·m‖`
    pub fn log_norm(&self) -> f64 {
        self.logscale + fmath::ln(spectral_norm(&self.m))
    }

    /// Sign and `log|·|` of entry `(i, j)`; `(0, −∞)` for an exact zero.
    pub fn entry_log(&self, i: usize, j: usize) -> (i8, f64) {
        let e = self.m[i][j];
        if e == 0.0 {
            (0, f64::NEG_INFINITY)
        } else {
            (if e > 0.0 { 1 } else { -1 }, self.logscale + fmath::ln(e.abs()))
        }
    }

    /// The represented matrix; overflows to infinity for large `logscale`.
    pub fn to_matrix(&self) -> Mat2 {
        let f = fmath::exp(self.logscale);
        let mut m = self.m;
        for row in m.iter_mut() {
            for e in row.iter_mut() {
                *e *= f;
            }
        }
        m
    }

    /// `det(m)·exp(2·logscale)`, which is 1 for an `SL(2, ℝ)` product.
    pub fn determinant(&self) -> f64 {
        det(&self.m) * fmath::exp(2.0 * self.logscale)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CocycleError {
    InvalidParameter(&'static str),
    EnergyOutOfWindow { energy: f64, bound: f64 },
    HypothesisFailed {
        hypothesis: AvalancheHypothesis,
        index: Option<usize>,
    },
    Potential(PotentialError),
}

impl fmt::Display for CocycleError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
            Self::EnergyOutOfWindow { energy, bound } => {
                write!(f, "energy {energy} outside [-{bound}, {bound}]")
            }
            Self::HypothesisFailed { hypothesis, index } => match index {
                Some(i) => write!(f, "avalanche hypothesis ({hypothesis}) fails at block {i}"),
                None => write!(f, "avalanche hypothesis ({hypothesis}) fails"),
            },
            Self::Potential(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for CocycleError {}

impl From<PotentialError> for CocycleError {
    fn from(e: PotentialError) -> Self {
        Self::Potential(e)
    }
}

/// Potential, coupling, frequency and energy of one cocycle.
#[derive(Debug)]
pub struct CocycleParams<'a, P: Potential + ?Sized> {
    pub potential: &'a P,
    pub lambda: f64,
    pub omega: f64,
    pub energy: f64,
}

impl<P: Potential + ?Sized> Clone for CocycleParams<'_, P> {
    fn clone(&self) -> Self {
        *self
    }
}

impl<P: Potential + ?Sized> Copy for CocycleParams<'_, P> {}

impl<'a, P: Potential + ?Sized> CocycleParams<'a, P> {
    /// `λ ≥ 0`; `ω` and `E` finite. The energy window is not enforced here,
    /// see [`CocycleParams::check_window`].
    pub fn new(potential: &'a P, lambda: f64, omega: f64, energy: f64) -> Result<Self, CocycleError> {
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(CocycleError::InvalidParameter("coupling must be finite and >= 0"));
        }
        if !omega.is_finite() {
            return Err(CocycleError::InvalidParameter("frequency must be finite"));
        }
        if !energy.is_finite() {
            return Err(CocycleError::InvalidParameter("energy must be finite"));
        }
        Ok(Self {
            potential,
            lambda,
            omega,
            energy,
        })
    }

    pub fn with_energy(&self, energy: f64) -> Self {
        Self { energy, ..*self }
    }

    /// `λ v(x)`
    #[inline]
    pub fn diag(&self, x: f64) -> f64 {
        self.lambda * self.potential.value(x)
    }

    /// `x + kω`
    #[inline]
    pub fn phase(&self, x: f64, k: i64) -> f64 {
        x + k as f64 * self.omega
    }

    /// `λ·sup|v| + 2`
    pub fn window_bound(&self) -> f64 {
        self.lambda * self.potential.sup_bound() + 2.0
    }

    pub fn check_window(&self) -> Result<(), CocycleError> {
        let bound = self.window_bound();
        if self.energy.abs() > bound {
            return Err(CocycleError::EnergyOutOfWindow {
                energy: self.energy,
                bound,
            });
        }
        Ok(())
    }
}

pub fn one_step<P: Potential + ?Sized>(params: &CocycleParams<'_, P>, x: f64) -> Mat2 {
    [[params.diag(x) - params.energy, -1.0], [1.0, 0.0]]
}

/// `M_n(x)`, renormalized after every step. `n = 0` gives the identity.
pub fn product<P: Potential + ?Sized>(params: &CocycleParams<'_, P>, x: f64, n: usize) -> ScaledMatrix {
    let mut acc = ScaledMatrix::IDENTITY;
    for k in 1..=n {
        let t = params.diag(params.phase(x, k as i64)) - params.energy;
        let [[a, b], [c, d]] = acc.m;
        acc.m = [[t * a - c, t * b - d], [a, b]];
        acc.renormalize();
    }
    acc
}

/// `(1/n) log ‖M_n(x)‖`; clamped at 0, the exact lower bound for `det = 1`.
pub fn u_n<P: Potential + ?Sized>(params: &CocycleParams<'_, P>, x: f64, n: usize) -> f64 {
    assert!(n >= 1, "u_n needs n >= 1");
    (product(params, x, n).log_norm() / n as f64).max(0.0)
}

/// `S(λ) = log λ + (log λ)^{1/2}`, the uniform upper bound for `u_n` at large coupling.
pub fn upper_exponent(lambda: f64) -> f64 {
    let l = fmath::ln(lambda);
    l + fmath::sqrt(l.max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LnEstimate {
    pub n: usize,
    pub value: f64,
    /// `|L_n(Nx) − L_n(2Nx)|`
    pub error_estimate: f64,
    pub nx: usize,
}

/// `L_n = ∫ u_n(x) dx` on the uniform grid `x_i = i/Nx`, with a doubling estimate.
pub fn l_n<P: Potential + ?Sized, E: Executor>(
    params: &CocycleParams<'_, P>,
    n: usize,
    nx: usize,
    exec: &E,
) -> Result<LnEstimate, CocycleError> {
    if n == 0 {
        return Err(CocycleError::InvalidParameter("n must be >= 1"));
    }
    if nx < 2 {
        return Err(CocycleError::InvalidParameter("Nx must be >= 2"));
    }
    let fine = 2 * nx;
    let us = exec.map_indexed(fine, |i| u_n(params, i as f64 / fine as f64, n));
    let coarse = us.iter().step_by(2).sum::<f64>() / nx as f64;
    let all = us.iter().sum::<f64>() / fine as f64;
    Ok(LnEstimate {
        n,
        value: coarse,
        error_estimate: (coarse - all).abs(),
        nx,
    })
}

/// `L_n` on a caller-chosen grid without the doubling pass.
pub fn grid_mean_u<P: Potential + ?Sized, E: Executor>(
    params: &CocycleParams<'_, P>,
    n: usize,
    grid: usize,
    exec: &E,
) -> (f64, Vec<f64>) {
    let us = exec.map_indexed(grid, |i| u_n(params, i as f64 / grid as f64, n));
    let mean = us.iter().sum::<f64>() / grid as f64;
    (mean, us)
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LyapunovReport {
    pub estimate: f64,
    pub sequence: Vec<LnEstimate>,
    /// Largest `L_{n_{i+1}} − L_{n_i}` beyond the combined grid error; 0 if none.
    pub max_increase: f64,
    pub monotone: bool,
    pub tolerance: f64,
    /// `|L_last − L_previous| ≤ tolerance`
    pub converged: bool,
}

pub fn lyapunov<P: Potential + ?Sized, E: Executor>(
    params: &CocycleParams<'_, P>,
    schedule: &[usize],
    nx: usize,
    tolerance: f64,
    exec: &E,
) -> Result<LyapunovReport, CocycleError> {
    if schedule.is_empty() || schedule.windows(2).any(|w| w[1] <= w[0]) {
        return Err(CocycleError::InvalidParameter("n schedule must be increasing and nonempty"));
    }
    let sequence = schedule
        .iter()
        .map(|&n| l_n(params, n, nx, exec))
        .collect::<Result<Vec<_>, _>>()?;
    let max_increase = sequence
        .windows(2)
        .map(|w| w[1].value - w[0].value - w[0].error_estimate - w[1].error_estimate)
        .fold(0.0, f64::max);
    let last = sequence[sequence.len() - 1];
    let converged = match sequence.len() {
        1 => true,
        k => (last.value - sequence[k - 2].value).abs() <= tolerance,
    };
    Ok(LyapunovReport {
        estimate: last.value,
        max_increase,
        monotone: max_increase == 0.0,
        sequence,
        tolerance,
        converged,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum AvalancheHypothesis {
    /// `|det A_j| ≤ 1`
    Determinant,
    /// `min ‖A_j‖ ≥ μ > n`
    Large,
    /// `log‖A_{j+1}‖ + log‖A_j‖ − log‖A_{j+1}A_j‖ < ½ log μ`
    Diff,
}

impl fmt::Display for AvalancheHypothesis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Determinant => "det",
            Self::Large => "large",
            Self::Diff => "diff",
        })
    }
}

pub const AVALANCHE_CONSTANT: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AvalancheReport {
    pub blocks: usize,
    pub mu: f64,
    pub residual: f64,
    /// `C·n/μ`
    pub bound: f64,
    pub holds: bool,
}

/// Checks the avalanche-principle hypotheses for `A_n ⋯ A_1` (`blocks[0] = A_1`)
/// and returns `|log‖A_n⋯A_1‖ + Σ_{j=2}^{n−1} log‖A_j‖ − Σ_{j=1}^{n−1} log‖A_{j+1}A_j‖|`.
pub fn avalanche_residual(blocks: &[Mat2], mu: f64, c: f64) -> Result<AvalancheReport, CocycleError> {
    let n = blocks.len();
    if n < 2 {
        return Err(CocycleError::InvalidParameter("avalanche principle needs at least 2 blocks"));
    }
    let fail = |hypothesis, index| CocycleError::HypothesisFailed { hypothesis, index };
    // the 2×2 determinant of a large-norm block carries rounding ~ eps·‖A‖²
    let det_ok = |b: &Mat2| {
        let slack = 4.0 * f64::EPSILON * ((b[0][0] * b[1][1]).abs() + (b[0][1] * b[1][0]).abs());
        det(b).abs() <= 1.0 + 1e-12 + slack
    };
    if let Some(j) = blocks.iter().position(|b| !det_ok(b)) {
        return Err(fail(AvalancheHypothesis::Determinant, Some(j)));
    }
    if !(mu > n as f64) {
        return Err(fail(AvalancheHypothesis::Large, None));
    }
    let log_norms: Vec<f64> = blocks.iter().map(|b| ScaledMatrix::from_matrix(*b).log_norm()).collect();
    let log_mu = fmath::ln(mu);
    if let Some(j) = log_norms.iter().position(|&l| l < log_mu) {
        return Err(fail(AvalancheHypothesis::Large, Some(j)));
    }
    let mut pair_sum = 0.0;
    for j in 0..n - 1 {
        let pair = ScaledMatrix::from_matrix(blocks[j + 1]).mul(&ScaledMatrix::from_matrix(blocks[j]));
        let lp = pair.log_norm();
        if !(log_norms[j + 1] + log_norms[j] - lp < 0.5 * log_mu) {
            return Err(fail(AvalancheHypothesis::Diff, Some(j)));
        }
        pair_sum += lp;
    }
    let full = blocks
        .iter()
        .fold(ScaledMatrix::IDENTITY, |acc, b| ScaledMatrix::from_matrix(*b).mul(&acc))
        .log_norm();
    let inner: f64 = log_norms[1..n - 1].iter().sum();
    let residual = (full + inner - pair_sum).abs();
    let bound = c * n as f64 / mu;
    Ok(AvalancheReport {
        blocks: n,
        mu,
        residual,
        bound,
        holds: residual <= bound,
    })
}

/// `|u_n(x) − u_n^t(x)|` where `u_n^t` uses the analytic truncation at scale `n`.
pub fn truncation_gap(params: &CocycleParams<'_, GevreyPotential>, x: f64, n: usize) -> Result<f64, CocycleError> {
    if n == 0 {
        return Err(CocycleError::InvalidParameter("n must be >= 1"));
    }
    let t = truncate(params.potential, n as u64)?;
    if t.is_exact() {
        return Ok(0.0);
    }
    let tp = CocycleParams {
        potential: &t,
        lambda: params.lambda,
        omega: params.omega,
        energy: params.energy,
    };
    Ok((u_n(params, x, n) - u_n(&tp, x, n)).abs())
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PerturbationReport {
    pub n: usize,
    /// `max_k ‖M^{(1)}(x+kω) − M^{(2)}(x+kω)‖`
    pub kappa: f64,
    /// `max_k log‖M^{(i)}(x+kω)‖` over both cocycles
    pub step_exponent: f64,
    /// `‖M_n^{(1)}(x) − M_n^{(2)}(x)‖`
    pub distance: f64,
    /// `n κ exp((n−1) S)`
    pub bound: f64,
}

/// Compares two cocycles along the same orbit. Products are formed without
/// renormalization, so keep `n` moderate.
pub fn perturbation_check<P: Potential + ?Sized, Q: Potential + ?Sized>(
    p: &CocycleParams<'_, P>,
    q: &CocycleParams<'_, Q>,
    x: f64,
    n: usize,
) -> PerturbationReport {
    let (mut mp, mut mq) = (IDENTITY, IDENTITY);
    let (mut kappa, mut s) = (0.0f64, 0.0f64);
    for k in 1..=n {
        let a = one_step(p, p.phase(x, k as i64));
        let b = one_step(q, q.phase(x, k as i64));
        let d = [[a[0][0] - b[0][0], a[0][1] - b[0][1]], [a[1][0] - b[1][0], a[1][1] - b[1][1]]];
        kappa = kappa.max(spectral_norm(&d));
        s = s.max(fmath::ln(spectral_norm(&a))).max(fmath::ln(spectral_norm(&b)));
        mp = mat_mul(&a, &mp);
        mq = mat_mul(&b, &mq);
    }
    let d = [[mp[0][0] - mq[0][0], mp[0][1] - mq[0][1]], [mp[1][0] - mq[1][0], mp[1][1] - mq[1][1]]];
    PerturbationReport {
        n,
        kappa,
        step_exponent: s,
        distance: spectral_norm(&d),
        bound: n as f64 * kappa * fmath::exp((n as f64 - 1.0) * s),
    }
}
