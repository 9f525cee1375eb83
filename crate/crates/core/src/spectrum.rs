//! Finite unions of closed intervals, finite-volume approximations of the
//! spectrum, exclusion certificates, spectral segments and the homogeneity profile.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::cocycle::{CocycleError, CocycleParams};
use crate::exec::Executor;
use crate::fmath;
use crate::operator::{EigenPair, FiniteOperator, OperatorError};
use crate::potential::Potential;

#[derive(Debug, Clone, PartialEq)]
pub enum SpectrumError {
    InvalidParameter(&'static str),
    EmptySet,
    Refusal { x: f64, grid_index: usize },
    NotNearSpectrum { distance: f64 },
    PairingFailed { x: f64, best_overlap: f64, required: f64 },
    Cocycle(CocycleError),
    Operator(OperatorError),
}

impl fmt::Display for SpectrumError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
            Self::EmptySet => write!(f, "interval set is empty"),
            Self::Refusal { x, grid_index } => {
                write!(f, "no window shift separates the energy from the spectrum at x = {x} (grid index {grid_index})")
            }
            Self::NotNearSpectrum { distance } => {
                write!(f, "no eigenvalue branch comes within the bound (closest {distance:e})")
            }
            Self::PairingFailed {
                x,
                best_overlap,
                required,
            } => write!(f, "pairing failed at x = {x}: best overlap {best_overlap:e} < {required:e}"),
            Self::Cocycle(e) => write!(f, "{e}"),
            Self::Operator(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for SpectrumError {}

impl From<CocycleError> for SpectrumError {
    fn from(e: CocycleError) -> Self {
        Self::Cocycle(e)
    }
}

impl From<OperatorError> for SpectrumError {
    fn from(e: OperatorError) -> Self {
        Self::Operator(e)
    }
}

/// Sorted, pairwise disjoint closed intervals `[l_i, r_i]` with `r_i < l_{i+1}`.
/// Degenerate intervals (points) are allowed.
#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct IntervalSet {
    intervals: Vec<(f64, f64)>,
}

impl IntervalSet {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Sorts and merges overlapping or touching intervals. Panics on `l > r` or NaN.
    pub fn from_intervals(mut raw: Vec<(f64, f64)>) -> Self {
        assert!(raw.iter().all(|&(l, r)| l <= r), "interval with l > r or NaN endpoint");
        raw.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut out: Vec<(f64, f64)> = Vec::with_capacity(raw.len());
        for (l, r) in raw {
            match out.last_mut() {
                Some(last) if l <= last.1 => last.1 = last.1.max(r),
                _ => out.push((l, r)),
            }
        }
        Self { intervals: out }
    }

    /// `⋃ [p − h, p + h]`
    pub fn from_points(points: &[f64], halfwidth: f64) -> Self {
        Self::from_intervals(points.iter().map(|&p| (p - halfwidth, p + halfwidth)).collect())
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn measure(&self) -> f64 {
        self.intervals.iter().map(|(l, r)| r - l).sum()
    }

    pub fn min(&self) -> Option<f64> {
        self.intervals.first().map(|i| i.0)
    }

    pub fn max(&self) -> Option<f64> {
        self.intervals.last().map(|i| i.1)
    }

    /// `max S − min S`; 0 for the empty set.
    pub fn diam(&self) -> f64 {
        match (self.min(), self.max()) {
            (Some(a), Some(b)) => b - a,
            _ => 0.0,
        }
    }

    pub fn union(&self, other: &Self) -> Self {
        let mut all = self.intervals.clone();
        all.extend_from_slice(&other.intervals);
        Self::from_intervals(all)
    }

    pub fn intersection(&self, other: &Self) -> Self {
        let (a, b) = (&self.intervals, &other.intervals);
        let (mut i, mut j) = (0, 0);
        let mut out = Vec::new();
        while i < a.len() && j < b.len() {
            let l = a[i].0.max(b[j].0);
            let r = a[i].1.min(b[j].1);
            if l <= r {
                out.push((l, r));
            }
            if a[i].1 < b[j].1 {
                i += 1;
            } else {
                j += 1;
            }
        }
        Self::from_intervals(out)
    }

    /// Index of the last interval with `l ≤ e`.
    fn locate(&self, e: f64) -> Option<usize> {
        self.intervals.partition_point(|&(l, _)| l <= e).checked_sub(1)
    }

    pub fn contains(&self, e: f64) -> bool {
        self.locate(e).is_some_and(|i| e <= self.intervals[i].1)
    }

    /// `dist(e, S)`; infinite for the empty set.
    pub fn distance(&self, e: f64) -> f64 {
        let k = self.intervals.partition_point(|&(l, _)| l <= e);
        let mut d = f64::INFINITY;
        if k > 0 {
            d = d.min((e - self.intervals[k - 1].1).max(0.0));
        }
        if k < self.intervals.len() {
            d = d.min(self.intervals[k].0 - e);
        }
        d
    }

    /// `|S ∩ (lo, hi)|`, exact in the representation.
    pub fn measure_within(&self, lo: f64, hi: f64) -> f64 {
        if !(lo < hi) {
            return 0.0;
        }
        let start = self.intervals.partition_point(|&(_, r)| r <= lo);
        self.intervals[start..]
            .iter()
            .take_while(|&&(l, _)| l < hi)
            .map(|&(l, r)| r.min(hi) - l.max(lo))
            .filter(|&m| m > 0.0)
            .sum()
    }

    /// Symmetric Hausdorff distance; infinite if exactly one side is empty.
    pub fn hausdorff(&self, other: &Self) -> f64 {
        if self.is_empty() && other.is_empty() {
            return 0.0;
        }
        if self.is_empty() || other.is_empty() {
            return f64::INFINITY;
        }
        let one_sided = |a: &Self, b: &Self| {
            // farthest point of a from b sits at an endpoint of a or at a gap midpoint of b inside a
            let mut worst = 0.0f64;
            for &(l, r) in &a.intervals {
                worst = worst.max(b.distance(l)).max(b.distance(r));
                for g in b.gaps() {
                    let mid = 0.5 * (g.lo + g.hi);
                    if l <= mid && mid <= r {
                        worst = worst.max(b.distance(mid));
                    }
                }
            }
            worst
        };
        one_sided(self, other).max(one_sided(other, self))
    }

    /// Bounded complementary open intervals, longest first.
    pub fn gaps(&self) -> Vec<Gap> {
        let mut gaps: Vec<Gap> = self
            .intervals
            .windows(2)
            .map(|w| Gap {
                lo: w[0].1,
                hi: w[1].0,
                length: w[1].0 - w[0].1,
            })
            .collect();
        gaps.sort_by(|a, b| b.length.total_cmp(&a.length).then(a.lo.total_cmp(&b.lo)));
        gaps
    }

    /// Image under `E ↦ t·E`, `t > 0`.
    pub fn scaled(&self, t: f64) -> Self {
        assert!(t > 0.0);
        Self {
            intervals: self.intervals.iter().map(|&(l, r)| (t * l, t * r)).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Gap {
    pub lo: f64,
    pub hi: f64,
    pub length: f64,
}

pub fn gap_report(s: &IntervalSet) -> Result<Vec<Gap>, SpectrumError> {
    if s.is_empty() {
        return Err(SpectrumError::EmptySet);
    }
    Ok(s.gaps())
}

/// Which finite-volume eigenvalues enter [`approx_spectrum`].
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum EdgePolicy {
    /// Every eigenvalue of `H_[1,n](x)`.
    KeepAll,
    /// Drops eigenpairs carrying more than `max_boundary_mass` of their ℓ² mass
    /// within `margin` sites of either window end. Not applied when `n ≤ 4·margin`.
    Bulk { margin: usize, max_boundary_mass: f64 },
}

impl Default for EdgePolicy {
    fn default() -> Self {
        Self::Bulk {
            margin: 10,
            max_boundary_mass: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ApproxSpectrum {
    pub n: usize,
    pub gx: usize,
    pub fatten: f64,
    pub policy: EdgePolicy,
    pub eigenvalues_kept: usize,
    pub eigenvalues_dropped: usize,
    pub set: IntervalSet,
}

fn boundary_mass(v: &[f64], margin: usize) -> f64 {
    let m = margin.min(v.len());
    let head: f64 = v[..m].iter().map(|x| x * x).sum();
    let tail: f64 = v[v.len() - m..].iter().map(|x| x * x).sum();
    head.max(tail)
}

/// Eigenvalues kept at one phase under `policy`, and the number dropped.
pub fn bulk_eigenvalues(op: &FiniteOperator, policy: EdgePolicy, seed: u64) -> (Vec<f64>, usize) {
    let values = op.eigenvalues(op.default_tol());
    match policy {
        EdgePolicy::Bulk {
            margin,
            max_boundary_mass,
        } if op.size() > 4 * margin => {
            let before = values.len();
            let kept: Vec<f64> = values
                .into_iter()
                .filter(|&e| {
                    let v = match op.eigenvector_at(e, seed) {
                        Ok(p) | Err(OperatorError::ConvergenceFailure { best: p }) => p.vector,
                        Err(_) => return true,
                    };
                    boundary_mass(&v, margin) <= max_boundary_mass
                })
                .collect();
            let dropped = before - kept.len();
            (kept, dropped)
        }
        _ => (values, 0),
    }
}

/// `⋃_x spec H_[1,n](x)` over `x = i/Gx`, each eigenvalue fattened to `[E − h, E + h]`.
pub fn approx_spectrum<P: Potential + ?Sized, E: Executor>(
    params: &CocycleParams<'_, P>,
    n: usize,
    gx: usize,
    fatten: f64,
    policy: EdgePolicy,
    seed: u64,
    exec: &E,
) -> Result<ApproxSpectrum, SpectrumError> {
    if gx < 64 {
        return Err(SpectrumError::InvalidParameter("Gx must be >= 64"));
    }
    if n == 0 {
        return Err(SpectrumError::InvalidParameter("n must be >= 1"));
    }
    if !(fatten >= 0.0) {
        return Err(SpectrumError::InvalidParameter("fatten must be >= 0"));
    }
    let per_x = exec.map_indexed(gx, |i| {
        let op = FiniteOperator::from_params(params, i as f64 / gx as f64, 1, n as i64);
        bulk_eigenvalues(&op, policy, seed)
    });
    let mut points = Vec::new();
    let mut dropped = 0;
    for (vals, d) in per_x {
        points.extend(vals);
        dropped += d;
    }
    Ok(ApproxSpectrum {
        n,
        gx,
        fatten,
        policy,
        eigenvalues_kept: points.len(),
        eigenvalues_dropped: dropped,
        set: IntervalSet::from_points(&points, fatten),
    })
}

/// `exp(−n^{ν/4})`
pub fn default_threshold(n: usize, nu: f64) -> f64 {
    fmath::exp(-fmath::powf(n as f64, nu / 4.0))
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Certificate {
    pub energy: f64,
    pub n: usize,
    pub gx: usize,
    pub threshold: f64,
    /// Window shift `r(x_i)` used at each grid phase.
    pub shifts: Vec<i64>,
    /// `threshold / 2`, valid at this grid resolution and scale.
    pub lower_bound: f64,
}

/// `0, 1, −1, 2, −2, …` up to `±limit`.
fn shift_order(limit: i64) -> impl Iterator<Item = i64> {
    (0..=2 * limit).map(|t| if t % 2 == 1 { (t + 1) / 2 } else { -(t / 2) })
}

/// First `r` with no eigenvalue of `H_{r+[−n,n]}(x)` in `[E − θ, E + θ)`.
fn separating_shift<P: Potential + ?Sized>(
    params: &CocycleParams<'_, P>,
    x: f64,
    e: f64,
    n: usize,
    threshold: f64,
) -> Option<i64> {
    let half = (n / 2) as i64;
    let ni = n as i64;
    let wide = FiniteOperator::from_params(params, x, -ni - half, ni + half);
    shift_order(half).find(|&r| {
        let op = wide.subwindow(r - ni, r + ni);
        op.sturm_count(e + threshold) == op.sturm_count(e - threshold)
    })
}

/// Certifies `dist(E0, S_ω) ≥ θ/2` at grid resolution, or refuses at the first failing phase.
pub fn criterion_check<P: Potential + ?Sized, E: Executor>(
    params: &CocycleParams<'_, P>,
    e0: f64,
    n: usize,
    gx: usize,
    threshold: f64,
    exec: &E,
) -> Result<Certificate, SpectrumError> {
    if n < 2 || gx == 0 {
        return Err(SpectrumError::InvalidParameter("need n >= 2 and Gx >= 1"));
    }
    if !(threshold > 0.0) {
        return Err(SpectrumError::InvalidParameter("threshold must be > 0"));
    }
    const CHUNK: usize = 64;
    let mut shifts = Vec::with_capacity(gx);
    let mut start = 0;
    while start < gx {
        let len = CHUNK.min(gx - start);
        let found = exec.map_indexed(len, |i| {
            separating_shift(params, (start + i) as f64 / gx as f64, e0, n, threshold)
        });
        for (i, r) in found.into_iter().enumerate() {
            match r {
                Some(r) => shifts.push(r),
                None => {
                    let idx = start + i;
                    return Err(SpectrumError::Refusal {
                        x: idx as f64 / gx as f64,
                        grid_index: idx,
                    });
                }
            }
        }
        start += len;
    }
    Ok(Certificate {
        energy: e0,
        n,
        gx,
        threshold,
        shifts,
        lower_bound: threshold / 2.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SegmentConfig {
    /// Search grid size; also the step used to grow the phase interval.
    pub gx: usize,
    pub c_seg: f64,
    pub nu: f64,
    /// Largest admissible `min |E_j(x) − E|` over the grid.
    pub near_bound: f64,
    pub seed: u64,
}

impl Default for SegmentConfig {
    fn default() -> Self {
        Self {
            gx: 512,
            c_seg: 0.25,
            nu: 0.25,
            near_bound: 0.1,
            seed: crate::operator::DEFAULT_SEED,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SegmentSample {
    pub x: f64,
    pub value: f64,
    /// `‖(H − E_j(x))ξ(x)‖`
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SpectralSegment {
    pub x0: f64,
    /// 1-based branch index in `H_[−n,n]`.
    pub j: usize,
    pub n: usize,
    /// Phase interval `[left, right]`, `right − left ≤ 1`.
    pub interval: (f64, f64),
    pub samples: Vec<SegmentSample>,
    pub image: IntervalSet,
    pub residual: f64,
    /// `exp(−c_seg n^ν)`
    pub threshold: f64,
    pub distance: f64,
    pub config: SegmentConfig,
}

/// Eigenpair `j` of `H_[−n,n](x)` and the residual of its restriction to
/// `[−n+1, n−1]`, renormalized.
fn windowed_pair<P: Potential + ?Sized>(
    params: &CocycleParams<'_, P>,
    x: f64,
    n: usize,
    j: usize,
    seed: u64,
) -> (FiniteOperator, EigenPair, Vec<f64>, f64) {
    let ni = n as i64;
    let op = FiniteOperator::from_params(params, x, -ni, ni);
    let pair = match op.eigenpair(j, op.default_tol(), seed) {
        Ok(p) | Err(OperatorError::ConvergenceFailure { best: p }) => p,
        Err(e) => panic!("eigenpair index checked by caller: {e}"),
    };
    let mut xi = pair.vector.clone();
    let last = xi.len() - 1;
    xi[0] = 0.0;
    xi[last] = 0.0;
    let norm = fmath::sqrt(xi.iter().map(|v| v * v).sum());
    let residual = if norm > 0.0 {
        for v in xi.iter_mut() {
            *v /= norm;
        }
        op.residual(pair.value, &xi)
    } else {
        f64::INFINITY
    };
    (op, pair, xi, residual)
}

/// Grows an interval of phases around the grid point whose branch `E_j^{[−n,n]}`
/// comes closest to `E`, while the windowed eigenvector residual stays below
/// `exp(−c_seg n^ν)`.
pub fn spectral_segment<P: Potential + ?Sized, E: Executor>(
    params: &CocycleParams<'_, P>,
    n: usize,
    config: SegmentConfig,
    exec: &E,
) -> Result<SpectralSegment, SpectrumError> {
    params.check_window()?;
    if n < 2 || config.gx < 2 {
        return Err(SpectrumError::InvalidParameter("need n >= 2 and Gx >= 2"));
    }
    let e = params.energy;
    let threshold = fmath::exp(-config.c_seg * fmath::powf(n as f64, config.nu));
    let size = 2 * n + 1;
    let gx = config.gx;
    let ni = n as i64;
    // per grid phase: best (distance, j, value, residual) among the two branches around E
    let best = exec.map_indexed(gx, |i| {
        let x = i as f64 / gx as f64;
        let op = FiniteOperator::from_params(params, x, -ni, ni);
        let k = op.sturm_count(e);
        let mut best: Option<(f64, usize, f64, f64)> = None;
        for j in [k, k + 1] {
            if j == 0 || j > size {
                continue;
            }
            let (_, pair, _, res) = windowed_pair(params, x, n, j, config.seed);
            let d = (pair.value - e).abs();
            if res <= threshold && best.map_or(true, |b| d < b.0) {
                best = Some((d, j, pair.value, res));
            }
        }
        best
    });
    let (i0, (distance, j, _, _)) = best
        .iter()
        .enumerate()
        .filter_map(|(i, b)| b.map(|b| (i, b)))
        .min_by(|a, b| a.1 .0.total_cmp(&b.1 .0).then(a.0.cmp(&b.0)))
        .ok_or(SpectrumError::NotNearSpectrum {
            distance: f64::INFINITY,
        })?;
    if distance > config.near_bound {
        return Err(SpectrumError::NotNearSpectrum { distance });
    }
    let sample = |i: i64| {
        let x = i as f64 / gx as f64;
        let (_, pair, _, residual) = windowed_pair(params, x, n, j, config.seed);
        SegmentSample {
            x,
            value: pair.value,
            residual,
        }
    };
    let i0 = i0 as i64;
    let mut samples = vec![sample(i0)];
    let (mut lo, mut hi) = (i0, i0);
    let (mut grow_left, mut grow_right) = (true, true);
    while (grow_left || grow_right) && hi - lo + 1 < gx as i64 {
        if grow_right {
            let s = sample(hi + 1);
            if s.residual <= threshold {
                hi += 1;
                samples.push(s);
            } else {
                grow_right = false;
            }
        }
        if grow_left && hi - lo + 1 < gx as i64 {
            let s = sample(lo - 1);
            if s.residual <= threshold {
                lo -= 1;
                samples.insert(0, s);
            } else {
                grow_left = false;
            }
        }
    }
    let full = hi - lo + 1 == gx as i64;
    let interval = if full {
        (lo as f64 / gx as f64, lo as f64 / gx as f64 + 1.0)
    } else {
        (lo as f64 / gx as f64, hi as f64 / gx as f64)
    };
    let vmin = samples.iter().map(|s| s.value).fold(f64::INFINITY, f64::min);
    let vmax = samples.iter().map(|s| s.value).fold(f64::NEG_INFINITY, f64::max);
    let residual = samples.iter().map(|s| s.residual).fold(0.0, f64::max);
    Ok(SpectralSegment {
        x0: i0 as f64 / gx as f64,
        j,
        n,
        interval,
        samples,
        image: IntervalSet::from_intervals(vec![(vmin, vmax)]),
        residual,
        threshold,
        distance,
        config,
    })
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StabilizedPiece {
    /// Phases of the first and last sample in the piece.
    pub x_range: (f64, f64),
    /// 1-based branch index in `H_[−n1,n1]`.
    pub j1: usize,
    /// `sup |E_j^{[−n,n]}(x) − E_{j1}^{[−n1,n1]}(x)|` over the piece's samples.
    pub discrepancy: f64,
    /// `√2·ε` with `ε` the largest effective residual in the piece.
    pub bound: f64,
    pub min_overlap: f64,
    /// Windowed residual of `ψ_{j1}` at scale `n1`.
    pub new_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Stabilization {
    pub n: usize,
    pub n1: usize,
    /// `(2(2n1+1))^{−1/2}`
    pub overlap_bound: f64,
    pub pieces: Vec<StabilizedPiece>,
    pub max_discrepancy: f64,
    /// Every piece satisfies `discrepancy ≤ bound`.
    pub within_bound: bool,
}

/// Pairs the segment's branch with branches of `H_[−n1,n1]` by eigenvector
/// overlap, sample by sample, and groups samples with a common partner.
pub fn stabilize_segment<P: Potential + ?Sized, E: Executor>(
    params: &CocycleParams<'_, P>,
    seg: &SpectralSegment,
    n1: usize,
    exec: &E,
) -> Result<Stabilization, SpectrumError> {
    if n1 <= seg.n {
        return Err(SpectrumError::InvalidParameter("n1 must exceed the segment scale"));
    }
    let (n, j, seed) = (seg.n, seg.j, seg.config.seed);
    let big = 2 * n1 + 1;
    let overlap_bound = 1.0 / fmath::sqrt(2.0 * big as f64);
    let offset = n1 - n;
    struct Paired {
        x: f64,
        j1: usize,
        discrepancy: f64,
        bound: f64,
        overlap: f64,
        new_residual: f64,
    }
    let paired = exec.map_indexed(seg.samples.len(), |s| -> Result<Paired, SpectrumError> {
        let x = seg.samples[s].x;
        let (op, pair, xi, residual) = windowed_pair(params, x, n, j, seed);
        let eps = residual + 1e-13 * (op.norm_estimate() + 1.0);
        let reach = core::f64::consts::SQRT_2 * eps;
        let n1i = n1 as i64;
        let outer = FiniteOperator::from_params(params, x, -n1i, n1i);
        let first = outer.sturm_count(pair.value - reach);
        let last = outer.sturm_count(pair.value + reach);
        let mut best: Option<(f64, usize, f64)> = None;
        for k in first..last {
            let e1 = outer.eigenvalue(k + 1, outer.default_tol());
            let v = match outer.eigenvector_at(e1, seed ^ (k as u64 + 1)) {
                Ok(p) | Err(OperatorError::ConvergenceFailure { best: p }) => p.vector,
                Err(e) => return Err(e.into()),
            };
            let overlap: f64 = xi.iter().enumerate().map(|(i, a)| a * v[i + offset]).sum::<f64>().abs();
            if best.map_or(true, |b| overlap > b.0) {
                best = Some((overlap, k + 1, e1));
            }
        }
        match best {
            Some((overlap, j1, e1)) if overlap >= overlap_bound => {
                let (_, _, _, new_residual) = windowed_pair(params, x, n1, j1, seed);
                Ok(Paired {
                    x,
                    j1,
                    discrepancy: (pair.value - e1).abs(),
                    bound: reach,
                    overlap,
                    new_residual,
                })
            }
            other => Err(SpectrumError::PairingFailed {
                x,
                best_overlap: other.map_or(0.0, |b| b.0),
                required: overlap_bound,
            }),
        }
    });
    let paired = paired.into_iter().collect::<Result<Vec<_>, _>>()?;
    let mut pieces: Vec<StabilizedPiece> = Vec::new();
    for p in &paired {
        match pieces.last_mut() {
            Some(last) if last.j1 == p.j1 => {
                last.x_range.1 = p.x;
                last.discrepancy = last.discrepancy.max(p.discrepancy);
                last.bound = last.bound.max(p.bound);
                last.min_overlap = last.min_overlap.min(p.overlap);
                last.new_residual = last.new_residual.max(p.new_residual);
            }
            _ => pieces.push(StabilizedPiece {
                x_range: (p.x, p.x),
                j1: p.j1,
                discrepancy: p.discrepancy,
                bound: p.bound,
                min_overlap: p.overlap,
                new_residual: p.new_residual,
            }),
        }
    }
    let max_discrepancy = pieces.iter().map(|p| p.discrepancy).fold(0.0, f64::max);
    let within_bound = paired.iter().all(|p| p.discrepancy <= p.bound);
    Ok(Stabilization {
        n,
        n1,
        overlap_bound,
        pieces,
        max_discrepancy,
        within_bound,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TauRow {
    pub sigma: f64,
    pub tau: f64,
    /// Sample energy attaining the minimum.
    pub argmin: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HomogeneityProfile {
    pub rows: Vec<TauRow>,
    pub min_tau: f64,
    pub samples: usize,
}

/// `τ(σ) = min_E |S ∩ (E−σ, E+σ)| / σ` over all endpoints of `S` and the
/// points of a uniform `fill`-point grid on `[min S, max S]` that lie in `S`.
pub fn homogeneity_profile(s: &IntervalSet, fill: usize, sigmas: &[f64]) -> Result<HomogeneityProfile, SpectrumError> {
    if s.is_empty() {
        return Err(SpectrumError::EmptySet);
    }
    let diam = s.diam();
    if sigmas.iter().any(|&sg| !(sg > 0.0 && sg <= diam * (1.0 + 1e-12))) {
        return Err(SpectrumError::InvalidParameter("sigmas must lie in (0, diam S]"));
    }
    let mut energies: Vec<f64> = s.intervals().iter().flat_map(|&(l, r)| [l, r]).collect();
    let (a, b) = (s.min().unwrap(), s.max().unwrap());
    if fill > 1 {
        energies.extend(
            (0..fill)
                .map(|i| a + (b - a) * i as f64 / (fill - 1) as f64)
                .filter(|&e| s.contains(e)),
        );
    }
    let rows: Vec<TauRow> = sigmas
        .iter()
        .map(|&sigma| {
            let (tau, argmin) = energies
                .iter()
                .map(|&e| (s.measure_within(e - sigma, e + sigma) / sigma, e))
                .fold((f64::INFINITY, f64::NAN), |acc, v| if v.0 < acc.0 { v } else { acc });
            TauRow { sigma, tau, argmin }
        })
        .collect();
    let min_tau = rows.iter().map(|r| r.tau).fold(f64::INFINITY, f64::min);
    Ok(HomogeneityProfile {
        rows,
        min_tau,
        samples: energies.len(),
    })
}

/// `count` logarithmically spaced values from `lo` to `hi` inclusive.
pub fn log_spaced(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi >= lo && count >= 1);
    if count == 1 {
        return vec![lo];
    }
    let (a, b) = (fmath::ln(lo), fmath::ln(hi));
    let mut out: Vec<f64> = (0..count)
        .map(|i| fmath::exp(a + (b - a) * i as f64 / (count - 1) as f64))
        .collect();
    out[count - 1] = hi;
    out
}
