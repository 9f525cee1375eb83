//! One function per subcommand. Each returns its tables, checks and a JSON
//! summary; [`run`] writes them and the manifest.

use std::path::{Path, PathBuf};
use std::time::Instant;

use qpspec_core::cocycle::{l_n, lyapunov, CocycleParams};
use qpspec_core::deviation::{
    default_wegner_k, deviation_set, fit_trend, wegner_comparison, wegner_epsilon, wegner_measure, DeviationKind,
    LdtConfig,
};
use qpspec_core::numtheory::{beta_estimate, circle_norm, diophantine_fit};
use qpspec_core::operator::{green_decay_check, DecayConstants, FiniteOperator, OperatorError};
use qpspec_core::potential::GevreyPotential;
use qpspec_core::spectrum::{
    approx_spectrum, criterion_check, default_threshold, gap_report, homogeneity_profile, log_spaced,
    spectral_segment, stabilize_segment, ApproxSpectrum, SegmentConfig, SpectrumError,
};
use qpspec_core::Executor;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{ExperimentConfig, Kind, LoadedConfig};
use crate::error::{numerics, RunError};
use crate::exec::RayonExecutor;
use crate::formats::{float, interval_set_to_json, write_json, Table};
use crate::manifest::{versions, Check, Manifest};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Numtheory,
    Lyapunov,
    Ldt,
    Wegner,
    Spectrum,
    Homogeneity,
    Segment,
    Greencheck,
}

impl Command {
    pub const ALL: [Self; 8] = [
        Self::Numtheory,
        Self::Lyapunov,
        Self::Ldt,
        Self::Wegner,
        Self::Spectrum,
        Self::Homogeneity,
        Self::Segment,
        Self::Greencheck,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Numtheory => "numtheory",
            Self::Lyapunov => "lyapunov",
            Self::Ldt => "ldt",
            Self::Wegner => "wegner",
            Self::Spectrum => "spectrum",
            Self::Homogeneity => "homogeneity",
            Self::Segment => "segment",
            Self::Greencheck => "greencheck",
        }
    }

    /// Fixed CSV header of the main table.
    pub fn columns(self) -> &'static [&'static str] {
        match self {
            Self::Numtheory => &["s", "a_s", "p_s", "q_s", "q_norm", "scaled"],
            Self::Lyapunov => &[
                "energy",
                "n",
                "Nx",
                "lyapunov",
                "error_estimate",
                "max_increase",
                "monotone",
                "converged",
            ],
            Self::Ldt | Self::Wegner => DEVIATION_COLUMNS,
            Self::Spectrum => &["n", "index", "lo", "hi"],
            Self::Homogeneity => &["n", "sigma", "tau", "argmin"],
            Self::Segment => &[
                "energy",
                "n",
                "n1",
                "status",
                "j",
                "x_lo",
                "x_hi",
                "image_measure",
                "residual",
                "threshold",
                "pieces",
                "overlap_bound",
                "min_overlap",
                "max_discrepancy",
                "within_bound",
            ],
            Self::Greencheck => &[
                "energy",
                "n",
                "x",
                "status",
                "log_det",
                "entry_slack",
                "dist_slack",
            ],
        }
    }
}

const DEVIATION_COLUMNS: &[&str] = &[
    "energy",
    "kind",
    "n",
    "delta_or_epsilon",
    "G",
    "measure_est",
    "interval_count",
    "rhs_comparison",
    "seed",
];

const CRITERION_COLUMNS: &[&str] = &[
    "energy",
    "n",
    "Gx",
    "threshold",
    "certified",
    "lower_bound",
    "n_ref",
    "distance_ref",
];

/// Files written by a run and the checks it evaluated.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub csv: PathBuf,
    pub manifest: PathBuf,
    pub files: Vec<PathBuf>,
    pub checks: Vec<Check>,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

enum Extra {
    Csv(&'static str, Table),
    Json(&'static str, Value),
}

struct Output {
    table: Table,
    extras: Vec<Extra>,
    parameters: Value,
    summary: Value,
    checks: Vec<Check>,
}

struct Ctx<'a> {
    cfg: &'a ExperimentConfig,
    v: GevreyPotential,
    omega: f64,
    nu: f64,
    seed: u64,
    exec: RayonExecutor,
}

impl Ctx<'_> {
    fn params(&self, energy: f64) -> Result<CocycleParams<'_, GevreyPotential>, RunError> {
        CocycleParams::new(&self.v, self.cfg.lambda, self.omega, energy).map_err(|e| RunError::config("/lambda", e.to_string()))
    }

    /// Echo of the values every command shares.
    fn common(&self) -> Value {
        let c = &self.cfg.constants;
        json!({
            "lambda": self.cfg.lambda,
            "omega": self.omega,
            "potential": {
                "s": self.v.s(), "K": self.v.k_scale(), "norm_sK": self.v.norm_sk(),
                "cutoff": self.v.cutoff(), "conforming": self.v.conforming,
            },
            "constants": {
                "nu": self.nu, "A": c.a, "C": c.c, "c_seg": c.c_seg, "c_ldt": c.c_ldt,
                "tau_min": c.tau_min, "tau_stability": c.tau_stability, "near_bound": c.near_bound,
            },
            "seed": self.seed,
        })
    }
}

fn merge(mut base: Value, extra: Value) -> Value {
    if let (Value::Object(b), Value::Object(e)) = (&mut base, extra) {
        b.extend(e);
    }
    base
}

fn flag(b: bool) -> String {
    if b { "true" } else { "false" }.into()
}

/// Runs `cmd` and writes `<cmd>.csv`, any auxiliary files and
/// `<cmd>.manifest.json` into `out_dir`.
///
/// With `verify` set in the config, a failed check becomes
/// [`RunError::Verification`] after all artifacts are written.
pub fn run(cmd: Command, loaded: &LoadedConfig, out_dir: &Path) -> Result<Outcome, RunError> {
    let start = Instant::now();
    let cfg = &loaded.config;
    let threads = cfg
        .threads
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, usize::from));
    let ctx = Ctx {
        cfg,
        v: cfg.potential(&loaded.base_dir)?,
        omega: cfg.omega(),
        nu: cfg.constants.nu(),
        seed: cfg.seed(),
        exec: RayonExecutor::new(threads).map_err(numerics)?,
    };
    let out = match cmd {
        Command::Numtheory => numtheory(&ctx),
        Command::Lyapunov => lyapunov_cmd(&ctx),
        Command::Ldt => ldt(&ctx),
        Command::Wegner => wegner(&ctx),
        Command::Spectrum => spectrum(&ctx),
        Command::Homogeneity => homogeneity(&ctx),
        Command::Segment => segment(&ctx),
        Command::Greencheck => greencheck(&ctx),
    }?;

    std::fs::create_dir_all(out_dir).map_err(|e| RunError::io(out_dir, e))?;
    let name = cmd.name();
    let csv = out_dir.join(format!("{name}.csv"));
    out.table.write(&csv)?;
    let mut files = vec![csv.clone()];
    for extra in &out.extras {
        match extra {
            Extra::Csv(suffix, t) => {
                let p = out_dir.join(format!("{name}.{suffix}.csv"));
                t.write(&p)?;
                files.push(p);
            }
            Extra::Json(suffix, v) => {
                let p = out_dir.join(format!("{name}.{suffix}.json"));
                write_json(&p, v)?;
                files.push(p);
            }
        }
    }
    let manifest_path = out_dir.join(format!("{name}.manifest.json"));
    let manifest = Manifest {
        command: name.into(),
        config: loaded.raw.clone(),
        overrides: Value::Object(loaded.overrides.clone()),
        parameters: merge(ctx.common(), out.parameters),
        versions: versions(),
        seed: ctx.seed,
        threads: ctx.exec.threads(),
        wall_time_s: start.elapsed().as_secs_f64(),
        files: files.clone(),
        checks: out.checks.clone(),
        verify: cfg.verify,
        summary: out.summary,
    };
    write_json(&manifest_path, &manifest)?;
    let outcome = Outcome {
        csv,
        manifest: manifest_path,
        files,
        checks: out.checks,
    };
    if cfg.verify && !outcome.passed() {
        let failed = outcome.checks.iter().filter(|c| !c.passed).map(|c| c.name.clone()).collect();
        return Err(RunError::Verification { failed });
    }
    Ok(outcome)
}

fn numtheory(ctx: &Ctx<'_>) -> Result<Output, RunError> {
    let cfg = ctx.cfg;
    let depth = cfg.depth.unwrap_or(30);
    let bound = cfg.search_bound.unwrap_or(100_000);
    let a = cfg.constants.a;
    let freq = cfg.frequency(depth)?;
    let mut table = Table::new(Command::Numtheory.columns());
    for (s, (&q_s, &(p, q))) in freq.quotients.iter().zip(&freq.convergents).enumerate() {
        // ‖qω‖ is meaningless once q exceeds the f64 mantissa
        let norm = if q < (1u128 << 53) {
            circle_norm(ctx.omega, q as i64).map_err(numerics)?
        } else {
            f64::NAN
        };
        table.push(vec![
            (s + 1).to_string(),
            q_s.to_string(),
            p.to_string(),
            q.to_string(),
            float(norm),
            float((q as f64).powf(a) * norm),
        ]);
    }
    let fit = diophantine_fit(&freq, a, bound).map_err(numerics)?;
    let beta = beta_estimate(&freq).map_err(numerics)?;
    let checks = vec![Check::new(
        "diophantine_constant_positive",
        fit.c_est > 0.0,
        format!("c_est = {:e} at n = {}", fit.c_est, fit.n_witness),
    )];
    Ok(Output {
        table,
        extras: Vec::new(),
        parameters: json!({"depth": depth, "search_bound": bound}),
        summary: json!({"termination": freq.termination, "precision_bits": freq.precision_bits, "diophantine": fit, "beta": beta}),
        checks,
    })
}

fn lyapunov_cmd(ctx: &Ctx<'_>) -> Result<Output, RunError> {
    let cfg = ctx.cfg;
    let energies = cfg.energies_or(&[0.0]);
    let schedule = cfg.n_or(&[128, 256, 512, 1024]);
    if schedule.windows(2).any(|w| w[1] <= w[0]) {
        return Err(RunError::config("/n", "lyapunov needs an increasing schedule"));
    }
    let nx = cfg.nx.unwrap_or(256);
    let tol = cfg.tolerance.unwrap_or(1e-3);
    let mut table = Table::new(Command::Lyapunov.columns());
    let mut sequences = Vec::new();
    let (mut nonneg, mut monotone) = (true, true);
    for &e in &energies {
        let p = ctx.params(e)?;
        let r = lyapunov(&p, &schedule, nx, tol, &ctx.exec).map_err(numerics)?;
        let last = r.sequence.last().expect("nonempty schedule");
        table.push(vec![
            float(e),
            last.n.to_string(),
            nx.to_string(),
            float(r.estimate),
            float(last.error_estimate),
            float(r.max_increase),
            flag(r.monotone),
            flag(r.converged),
        ]);
        nonneg &= r.estimate >= 0.0;
        monotone &= r.monotone;
        sequences.push(json!({"energy": e, "report": r}));
    }
    let checks = vec![
        Check::new("lyapunov_nonnegative", nonneg, "L_n(E) >= 0 for every energy"),
        Check::new("doubling_monotone", monotone, format!("L_n nonincreasing up to tolerance {tol:e}")),
    ];
    Ok(Output {
        table,
        extras: Vec::new(),
        parameters: json!({"energies": energies, "n": schedule, "Nx": nx, "tolerance": tol}),
        summary: json!({"sequences": sequences}),
        checks,
    })
}

fn deviation_row(e: f64, kind: &str, n: usize, d: f64, g: usize, m: f64, count: usize, rhs: f64, seed: u64) -> Vec<String> {
    vec![
        float(e),
        kind.into(),
        n.to_string(),
        float(d),
        g.to_string(),
        float(m),
        count.to_string(),
        float(rhs),
        seed.to_string(),
    ]
}

fn ldt(ctx: &Ctx<'_>) -> Result<Output, RunError> {
    let cfg = ctx.cfg;
    let energies = cfg.energies_or(&[0.0]);
    let scales = cfg.n_or(&[50, 100, 200, 400]);
    if scales.len() < 2 || scales.windows(2).any(|w| w[1] <= w[0]) {
        return Err(RunError::config("/n", "ldt needs at least two increasing scales"));
    }
    let delta = cfg.delta.unwrap_or(0.1);
    let g = cfg.g.unwrap_or(10_000);
    let kind = cfg.kind.unwrap_or(Kind::F);
    let (dk, label) = match kind {
        Kind::U => (DeviationKind::Norm, "u"),
        Kind::F => (DeviationKind::Determinant, "f"),
    };
    let ldt_config = LdtConfig {
        nu: ctx.nu,
        c_ldt: cfg.constants.c_ldt,
        c_count: None,
    };
    let mut table = Table::new(Command::Ldt.columns());
    let mut checks = Vec::new();
    let mut fits = Vec::new();
    for &e in &energies {
        let p = ctx.params(e)?;
        let sets = scales
            .iter()
            .map(|&n| deviation_set(&p, dk, n, delta, g, &ctx.exec))
            .collect::<Result<Vec<_>, _>>()
            .map_err(numerics)?;
        for s in &sets {
            let rhs = (-cfg.constants.c_ldt * delta * (s.n as f64).powf(ctx.nu)).exp();
            table.push(deviation_row(
                e,
                label,
                s.n,
                delta,
                g,
                s.set.measure_est(),
                s.set.interval_count(),
                rhs,
                ctx.seed,
            ));
        }
        let m: Vec<f64> = sets.iter().map(|s| s.set.measure_est()).collect();
        let decreasing = m.windows(2).all(|w| w[1] < w[0]);
        let ratio = m[0] / m[m.len() - 1];
        checks.push(Check::new(
            format!("strictly_decreasing[E={e}]"),
            decreasing,
            format!("measures {m:?}"),
        ));
        checks.push(Check::new(
            format!("overall_ratio>=2[E={e}]"),
            ratio >= 2.0,
            format!("first/last = {ratio}"),
        ));
        let counts_ok = sets.iter().all(|s| s.set.interval_count() <= s.n * s.n);
        checks.push(Check::new(
            format!("interval_count<=n^2[E={e}]"),
            counts_ok,
            format!("counts {:?}", sets.iter().map(|s| s.set.interval_count()).collect::<Vec<_>>()),
        ));
        let fit = if scales.len() >= 3 {
            match fit_trend(sets, &ldt_config) {
                Ok(t) => json!({"c_fit": t.c_fit, "intercept": t.intercept, "residual": t.residual}),
                Err(err) => json!({"error": err.to_string()}),
            }
        } else {
            json!({"error": "fit needs at least 3 scales"})
        };
        fits.push(json!({"energy": e, "fit": fit}));
    }
    Ok(Output {
        table,
        extras: Vec::new(),
        parameters: json!({
            "energies": energies, "n": scales, "delta": delta, "G": g, "kind": label,
            "rhs": "exp(-c_ldt * delta * n^nu)", "decrease_factor": 2.0,
        }),
        summary: json!({"fits": fits}),
        checks,
    })
}

fn wegner(ctx: &Ctx<'_>) -> Result<Output, RunError> {
    let cfg = ctx.cfg;
    let energies = cfg.energies_or(&[0.0]);
    let scales = cfg.n_or(&[200]);
    let g = cfg.g.unwrap_or(10_000);
    let mut table = Table::new(Command::Wegner.columns());
    let mut checks = Vec::new();
    let mut used = Vec::new();
    for &n in &scales {
        let k = cfg.k.unwrap_or_else(|| default_wegner_k(n, ctx.nu));
        let eps = cfg.epsilon.unwrap_or_else(|| wegner_epsilon(k, ctx.nu));
        let rhs = wegner_comparison(k, ctx.nu);
        used.push(json!({"n": n, "k": k, "epsilon": eps, "rhs": rhs}));
        for &e in &energies {
            let p = ctx.params(e)?;
            let set = wegner_measure(&p, n, eps, g, &ctx.exec).map_err(numerics)?;
            let m = set.measure_est();
            table.push(deviation_row(e, "wegner", n, eps, g, m, set.interval_count(), rhs, ctx.seed));
            checks.push(Check::new(
                format!("wegner_bound[E={e},n={n}]"),
                m <= rhs,
                format!("measure {m} vs exp(-k^(nu/4)) = {rhs}"),
            ));
        }
    }
    Ok(Output {
        table,
        extras: Vec::new(),
        parameters: json!({"energies": energies, "n": scales, "G": g, "scales": used}),
        summary: Value::Null,
        checks,
    })
}

fn spectra(ctx: &Ctx<'_>, scales: &[usize], gx: usize, fatten: f64) -> Result<Vec<ApproxSpectrum>, RunError> {
    let p = ctx.params(0.0)?;
    scales
        .iter()
        .map(|&n| approx_spectrum(&p, n, gx, fatten, ctx.cfg.edge_policy(), ctx.seed, &ctx.exec).map_err(numerics))
        .collect()
}

fn spectrum_json(s: &ApproxSpectrum) -> Value {
    let gaps = gap_report(&s.set).unwrap_or_default();
    json!({
        "n": s.n, "Gx": s.gx, "fatten": s.fatten,
        "eigenvalues_kept": s.eigenvalues_kept, "eigenvalues_dropped": s.eigenvalues_dropped,
        "measure": s.set.measure(), "diam": s.set.diam(),
        "intervals": interval_set_to_json(&s.set),
        "gaps": gaps.iter().take(10).map(|g| [g.lo, g.hi]).collect::<Vec<_>>(),
    })
}

fn spectrum(ctx: &Ctx<'_>) -> Result<Output, RunError> {
    let cfg = ctx.cfg;
    let scales = cfg.n_or(&[200]);
    let gx = cfg.gx.unwrap_or(512);
    let fatten = cfg.fatten.unwrap_or(1e-3);
    let specs = spectra(ctx, &scales, gx, fatten)?;
    let mut table = Table::new(Command::Spectrum.columns());
    for s in &specs {
        for (i, &(lo, hi)) in s.set.intervals().iter().enumerate() {
            table.push(vec![s.n.to_string(), i.to_string(), float(lo), float(hi)]);
        }
    }
    let mut extras = vec![Extra::Json("sets", Value::Array(specs.iter().map(spectrum_json).collect()))];
    let mut checks = Vec::new();
    let mut params = json!({"n": scales, "Gx": gx, "fatten": fatten, "edge_policy": cfg.edge_policy()});
    if let Some(spec) = &cfg.energies {
        // certificates at the first scale, audited against the largest one
        let n0 = scales[0];
        let reference = specs.iter().max_by_key(|s| s.n).expect("nonempty");
        let threshold = default_threshold(n0, ctx.nu);
        let energies = spec.values();
        let mut crit = Table::new(CRITERION_COLUMNS);
        let mut sound = true;
        for &e in &energies {
            let p = ctx.params(e)?;
            let (certified, lower) = match criterion_check(&p, e, n0, gx, threshold, &ctx.exec) {
                Ok(c) => (true, c.lower_bound),
                Err(SpectrumError::Refusal { .. }) => (false, f64::NAN),
                Err(err) => return Err(numerics(err)),
            };
            let dist = reference.set.distance(e);
            sound &= !certified || dist >= threshold / 4.0;
            crit.push(vec![
                float(e),
                n0.to_string(),
                gx.to_string(),
                float(threshold),
                flag(certified),
                float(lower),
                reference.n.to_string(),
                float(dist),
            ]);
        }
        checks.push(Check::new(
            "criterion_soundness",
            sound,
            format!("certified energies at distance >= threshold/4 from the n = {} spectrum", reference.n),
        ));
        extras.push(Extra::Csv("criterion", crit));
        params = merge(params, json!({"energies": energies, "threshold": threshold, "soundness_factor": 0.25}));
    }
    Ok(Output {
        table,
        extras,
        parameters: params,
        summary: json!({"scales": specs.iter().map(|s| json!({"n": s.n, "intervals": s.set.len(), "measure": s.set.measure()})).collect::<Vec<_>>()}),
        checks,
    })
}

fn homogeneity(ctx: &Ctx<'_>) -> Result<Output, RunError> {
    let cfg = ctx.cfg;
    let scales = cfg.n_or(&[500]);
    let gx = cfg.gx.unwrap_or(512);
    let fatten = cfg.fatten.unwrap_or(1e-3);
    let sigma_min = cfg.sigma_min.unwrap_or(1e-3);
    let count = cfg.sigma_count.unwrap_or(25);
    let fill = cfg.fill.unwrap_or(1000);
    let c = &cfg.constants;
    let specs = spectra(ctx, &scales, gx, fatten)?;
    // one σ grid for all scales, so the tables compare row by row
    let diam = specs.iter().map(|s| s.set.diam()).fold(f64::INFINITY, f64::min);
    if !(diam > sigma_min) {
        return Err(RunError::config("/sigma_min", format!("must be below diam(S) = {diam}")));
    }
    let sigmas = log_spaced(sigma_min, diam, count);
    let mut table = Table::new(Command::Homogeneity.columns());
    let mut checks = Vec::new();
    let mut profiles = Vec::new();
    for s in &specs {
        let prof = homogeneity_profile(&s.set, fill, &sigmas).map_err(numerics)?;
        for r in &prof.rows {
            table.push(vec![s.n.to_string(), float(r.sigma), float(r.tau), float(r.argmin)]);
        }
        checks.push(Check::new(
            format!("tau_min[n={}]", s.n),
            prof.min_tau >= c.tau_min,
            format!("min tau = {} vs {}", prof.min_tau, c.tau_min),
        ));
        profiles.push(prof);
    }
    for (w, s) in profiles.windows(2).zip(specs.windows(2)) {
        let worst = w[0]
            .rows
            .iter()
            .zip(&w[1].rows)
            .map(|(a, b)| (b.tau - a.tau).abs() / a.tau)
            .fold(0.0, f64::max);
        checks.push(Check::new(
            format!("tau_stability[n={}->{}]", s[0].n, s[1].n),
            worst <= c.tau_stability,
            format!("max relative change {worst}"),
        ));
    }
    Ok(Output {
        table,
        extras: vec![Extra::Json("sets", Value::Array(specs.iter().map(spectrum_json).collect()))],
        parameters: json!({
            "n": scales, "Gx": gx, "fatten": fatten, "sigma_min": sigma_min, "sigma_max": diam,
            "sigma_count": count, "fill": fill, "edge_policy": cfg.edge_policy(),
        }),
        summary: json!({"min_tau": profiles.iter().map(|p| p.min_tau).collect::<Vec<_>>()}),
        checks,
    })
}

fn segment(ctx: &Ctx<'_>) -> Result<Output, RunError> {
    let cfg = ctx.cfg;
    let energies = cfg
        .energies
        .as_ref()
        .ok_or_else(|| RunError::config("/energies", "segment needs target energies"))?
        .values();
    let n = cfg.n_or(&[60])[0];
    let n1 = cfg.n1.unwrap_or(4 * n);
    if n1 <= n {
        return Err(RunError::config("/n1", "must exceed n"));
    }
    let gx = cfg.gx.unwrap_or(512);
    let seg_cfg = SegmentConfig {
        gx,
        c_seg: cfg.constants.c_seg,
        nu: ctx.nu,
        near_bound: cfg.constants.near_bound,
        seed: ctx.seed,
    };
    let mut table = Table::new(Command::Segment.columns());
    let mut all_ok = true;
    let mut reports = Vec::new();
    let nan = || float(f64::NAN);
    for &e in &energies {
        let p = ctx.params(e)?;
        let seg = match spectral_segment(&p, n, seg_cfg, &ctx.exec) {
            Ok(s) => s,
            Err(err) => {
                let status = match err {
                    SpectrumError::NotNearSpectrum { .. } => "not_near_spectrum",
                    SpectrumError::Cocycle(_) => "outside_window",
                    _ => return Err(numerics(err)),
                };
                let mut row = vec![float(e), n.to_string(), n1.to_string(), status.into()];
                row.extend((0..10).map(|_| nan()));
                row.push(flag(false));
                table.push(row);
                continue;
            }
        };
        let head = vec![float(e), n.to_string(), n1.to_string()];
        let tail = vec![
            seg.j.to_string(),
            float(seg.interval.0),
            float(seg.interval.1),
            float(seg.image.measure()),
            float(seg.residual),
            float(seg.threshold),
        ];
        match stabilize_segment(&p, &seg, n1, &ctx.exec) {
            Ok(st) => {
                let min_overlap = st.pieces.iter().map(|q| q.min_overlap).fold(f64::INFINITY, f64::min);
                let ok = st.within_bound && min_overlap >= st.overlap_bound;
                all_ok &= ok;
                let mut row = head;
                row.push("ok".into());
                row.extend(tail);
                row.extend([
                    st.pieces.len().to_string(),
                    float(st.overlap_bound),
                    float(min_overlap),
                    float(st.max_discrepancy),
                    flag(st.within_bound),
                ]);
                table.push(row);
                reports.push(json!({"energy": e, "segment": seg, "stabilization": st}));
            }
            Err(SpectrumError::PairingFailed { x, best_overlap, required }) => {
                all_ok = false;
                let mut row = head;
                row.push("pairing_failed".into());
                row.extend(tail);
                row.extend(["0".into(), float(required), float(best_overlap), nan(), flag(false)]);
                table.push(row);
                reports.push(json!({"energy": e, "segment": seg, "pairing_failed_at": x}));
            }
            Err(err) => return Err(numerics(err)),
        }
    }
    Ok(Output {
        table,
        extras: Vec::new(),
        parameters: json!({"energies": energies, "n": n, "n1": n1, "Gx": gx, "discrepancy_factor": std::f64::consts::SQRT_2}),
        summary: json!({"segments": reports}),
        checks: vec![Check::new(
            "stabilization",
            all_ok,
            "every stabilized piece pairs with overlap >= (2(2n1+1))^(-1/2) and discrepancy <= sqrt(2) residual",
        )],
    })
}

fn greencheck(ctx: &Ctx<'_>) -> Result<Output, RunError> {
    let cfg = ctx.cfg;
    let energies = cfg.energies_or(&[0.0]);
    let scales = cfg.n_or(&[60]);
    let gx = cfg.gx.unwrap_or(64);
    let nx = cfg.nx.unwrap_or(256);
    let constants = DecayConstants {
        c: cfg.constants.c,
        nu: ctx.nu,
    };
    let mut table = Table::new(Command::Greencheck.columns());
    let mut violated = 0usize;
    let mut budgets = Vec::new();
    for &n in &scales {
        let j = cfg.j_budget.unwrap_or_else(|| (n as f64).powf(1.0 - ctx.nu));
        budgets.push(json!({"n": n, "j_budget": j}));
        for &e in &energies {
            let p = ctx.params(e)?;
            let ln = l_n(&p, n, nx, &ctx.exec).map_err(numerics)?.value;
            let results = ctx.exec.map_indexed(gx, |i| {
                let x = i as f64 / gx as f64;
                let op = FiniteOperator::from_params(&p, x, 1, n as i64);
                (x, green_decay_check(&op, e, cfg.lambda, ln, j, constants))
            });
            for (x, r) in results {
                let (status, log_det, a, b) = match r {
                    Ok(r) => ("ok", r.log_det, r.entry_slack, r.dist_slack),
                    Err(OperatorError::PreconditionNotMet { log_det, .. }) => ("precondition", log_det, f64::NAN, f64::NAN),
                    Err(OperatorError::SingularEnergy { .. }) => ("singular", f64::NEG_INFINITY, f64::NAN, f64::NAN),
                    Err(OperatorError::BoundViolated { excess, .. }) => {
                        violated += 1;
                        ("violated", f64::NAN, -excess, f64::NAN)
                    }
                    Err(err) => return Err(numerics(err)),
                };
                table.push(vec![
                    float(e),
                    n.to_string(),
                    float(x),
                    status.into(),
                    float(log_det),
                    float(a),
                    float(b),
                ]);
            }
        }
    }
    Ok(Output {
        table,
        extras: Vec::new(),
        parameters: json!({"energies": energies, "n": scales, "Gx": gx, "Nx": nx, "budgets": budgets}),
        summary: json!({"violations": violated}),
        checks: vec![Check::new(
            "green_decay",
            violated == 0,
            format!("{violated} windows violate the decay or distance bound"),
        )],
    })
}
