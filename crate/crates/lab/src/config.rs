//! Experiment configuration: one JSON document, validated with JSON-pointer errors.
//!
//! The schema is in `docs/config.schema.json`.

use std::path::{Path, PathBuf};

use qpspec_core::numtheory::{certified_expansion, Frequency, GOLDEN_MEAN};
use qpspec_core::operator::DEFAULT_SEED;
use qpspec_core::potential::GevreyPotential;
use qpspec_core::spectrum::EdgePolicy;
use serde::{Deserialize, Serialize};

use crate::error::RunError;
use crate::formats::{load_potential, PotentialDoc};

pub const SILVER_MEAN: f64 = std::f64::consts::SQRT_2 - 1.0;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSpec {
    /// `amo`, `gevrey_model`, `flat_bump` or `zero`.
    pub id: Option<String>,
    /// Path to a potential JSON file, relative to the config file.
    pub file: Option<PathBuf>,
    pub inline: Option<PotentialDoc>,
    /// Fourier cutoff for `gevrey_model` and `flat_bump`.
    pub cutoff: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OmegaSpec {
    /// `golden` or `silver`.
    Named(String),
    Decimal(DecimalOmega),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecimalOmega {
    pub decimal: String,
    #[serde(default = "default_bits")]
    pub bits: u32,
}

fn default_bits() -> u32 {
    52
}

impl Default for OmegaSpec {
    fn default() -> Self {
        Self::Named("golden".into())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EnergySpec {
    List(Vec<f64>),
    Range(EnergyRange),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnergyRange {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl EnergySpec {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Self::List(v) => v.clone(),
            Self::Range(r) if r.count == 1 => vec![r.lo],
            Self::Range(r) => (0..r.count)
                .map(|i| r.lo + (r.hi - r.lo) * i as f64 / (r.count - 1) as f64)
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    /// `u_n = (1/n) log‖M_n‖`
    U,
    /// `(1/n) log|f_n|`
    F,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum EdgePolicySpec {
    KeepAll,
    Bulk { margin: usize, max_boundary_mass: f64 },
}

impl From<EdgePolicySpec> for EdgePolicy {
    fn from(s: EdgePolicySpec) -> Self {
        match s {
            EdgePolicySpec::KeepAll => Self::KeepAll,
            EdgePolicySpec::Bulk {
                margin,
                max_boundary_mass,
            } => Self::Bulk {
                margin,
                max_boundary_mass,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Constants {
    /// Defaults to `1/(2A)`.
    pub nu: Option<f64>,
    /// Diophantine exponent.
    #[serde(rename = "A", default = "d_a")]
    pub a: f64,
    /// Green-decay constant.
    #[serde(rename = "C", default = "d_c")]
    pub c: f64,
    #[serde(default = "d_c_seg")]
    pub c_seg: f64,
    #[serde(default = "d_c_ldt")]
    pub c_ldt: f64,
    /// Homogeneity regression bound.
    #[serde(default = "d_tau_min")]
    pub tau_min: f64,
    /// Largest admissible relative change of τ between consecutive scales.
    #[serde(default = "d_tau_stability")]
    pub tau_stability: f64,
    /// Largest admissible distance from E to the grid spectrum in `segment`.
    #[serde(default = "d_near")]
    pub near_bound: f64,
}

fn d_a() -> f64 {
    2.0
}
fn d_c() -> f64 {
    5.0
}
fn d_c_seg() -> f64 {
    0.25
}
fn d_c_ldt() -> f64 {
    1.0
}
fn d_tau_min() -> f64 {
    0.1
}
fn d_tau_stability() -> f64 {
    0.2
}
fn d_near() -> f64 {
    0.1
}

impl Default for Constants {
    fn default() -> Self {
        Self {
            nu: None,
            a: d_a(),
            c: d_c(),
            c_seg: d_c_seg(),
            c_ldt: d_c_ldt(),
            tau_min: d_tau_min(),
            tau_stability: d_tau_stability(),
            near_bound: d_near(),
        }
    }
}

impl Constants {
    pub fn nu(&self) -> f64 {
        self.nu.unwrap_or(1.0 / (2.0 * self.a))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    pub dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub potential: PotentialSpec,
    pub lambda: f64,
    #[serde(default)]
    pub omega: OmegaSpec,
    pub energies: Option<EnergySpec>,
    pub n: Option<Vec<usize>>,
    /// Phase grid for deviation and Wegner scans.
    #[serde(rename = "G")]
    pub g: Option<usize>,
    /// Phase grid for spectra, segments and Green checks.
    #[serde(rename = "Gx")]
    pub gx: Option<usize>,
    /// Phase grid for `L_n` quadrature.
    #[serde(rename = "Nx")]
    pub nx: Option<usize>,
    pub delta: Option<f64>,
    pub kind: Option<Kind>,
    pub k: Option<usize>,
    pub epsilon: Option<f64>,
    pub fatten: Option<f64>,
    pub sigma_min: Option<f64>,
    pub sigma_count: Option<usize>,
    pub fill: Option<usize>,
    pub n1: Option<usize>,
    pub depth: Option<usize>,
    pub search_bound: Option<u64>,
    pub j_budget: Option<f64>,
    pub tolerance: Option<f64>,
    pub edge_policy: Option<EdgePolicySpec>,
    #[serde(default)]
    pub constants: Constants,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    #[serde(default)]
    pub outputs: Outputs,
    #[serde(default)]
    pub verify: bool,
}

/// A parsed config together with the exact document it came from.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: ExperimentConfig,
    pub raw: serde_json::Value,
    /// Directory relative paths in the config resolve against.
    pub base_dir: PathBuf,
    /// CLI overrides already applied to `config`.
    pub overrides: serde_json::Map<String, serde_json::Value>,
}

fn pointer_of(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for seg in path.iter() {
        out.push('/');
        match seg {
            Segment::Seq { index } => out.push_str(&index.to_string()),
            Segment::Map { key } => out.push_str(&key.replace('~', "~0").replace('/', "~1")),
            Segment::Enum { variant } => out.push_str(variant),
            Segment::Unknown => out.push('?'),
        }
    }
    out
}

impl LoadedConfig {
    pub fn from_path(path: &Path) -> Result<Self, RunError> {
        let text = std::fs::read_to_string(path).map_err(|e| RunError::config("", format!("{}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_str(&text, base)
    }

    pub fn from_str(text: &str, base_dir: PathBuf) -> Result<Self, RunError> {
        let raw: serde_json::Value = serde_json::from_str(text).map_err(|e| RunError::config("", e.to_string()))?;
        Self::from_value(raw, base_dir)
    }

    pub fn from_value(raw: serde_json::Value, base_dir: PathBuf) -> Result<Self, RunError> {
        let config: ExperimentConfig =
            serde_path_to_error::deserialize(&raw).map_err(|e| RunError::config(pointer_of(e.path()), e.inner().to_string()))?;
        config.validate()?;
        Ok(Self {
            config,
            raw,
            base_dir,
            overrides: serde_json::Map::new(),
        })
    }

    pub fn override_threads(&mut self, threads: usize) -> Result<(), RunError> {
        if threads == 0 {
            return Err(RunError::config("/threads", "must be >= 1"));
        }
        self.config.threads = Some(threads);
        self.overrides.insert("threads".into(), threads.into());
        Ok(())
    }

    pub fn override_seed(&mut self, seed: u64) {
        self.config.seed = Some(seed);
        self.overrides.insert("seed".into(), seed.into());
    }
}

fn check(ok: bool, pointer: &str, message: &str) -> Result<(), RunError> {
    if ok {
        Ok(())
    } else {
        Err(RunError::config(pointer, message))
    }
}

fn positive(v: Option<f64>, pointer: &str) -> Result<(), RunError> {
    check(v.is_none_or(|x| x > 0.0 && x.is_finite()), pointer, "must be a finite number > 0")
}

fn nonneg(v: Option<f64>, pointer: &str) -> Result<(), RunError> {
    check(v.is_none_or(|x| x >= 0.0 && x.is_finite()), pointer, "must be a finite number >= 0")
}

impl ExperimentConfig {
    /// Command-independent checks. Command-specific ones (e.g. scale counts)
    /// happen when the command resolves its parameters.
    pub fn validate(&self) -> Result<(), RunError> {
        let p = &self.potential;
        let sources = usize::from(p.id.is_some()) + usize::from(p.file.is_some()) + usize::from(p.inline.is_some());
        check(sources == 1, "/potential", "exactly one of id, file, inline is required")?;
        if let Some(id) = &p.id {
            check(
                matches!(id.as_str(), "amo" | "gevrey_model" | "flat_bump" | "zero"),
                "/potential/id",
                "unknown potential id (amo, gevrey_model, flat_bump, zero)",
            )?;
        }
        nonneg(Some(self.lambda), "/lambda")?;
        match &self.omega {
            OmegaSpec::Named(name) => check(
                matches!(name.as_str(), "golden" | "silver"),
                "/omega",
                "named frequency must be golden or silver",
            )?,
            OmegaSpec::Decimal(d) => {
                let v: Option<f64> = d.decimal.trim().parse().ok();
                check(v.is_some_and(|v| v > 0.0 && v < 1.0), "/omega/decimal", "must be a decimal in (0, 1)")?;
                check((1..=120).contains(&d.bits), "/omega/bits", "must lie in 1..=120")?;
            }
        }
        if let Some(EnergySpec::List(v)) = &self.energies {
            check(!v.is_empty(), "/energies", "must not be empty")?;
            for (i, e) in v.iter().enumerate() {
                check(e.is_finite(), &format!("/energies/{i}"), "must be finite")?;
            }
        }
        if let Some(EnergySpec::Range(r)) = &self.energies {
            check(r.lo.is_finite() && r.hi.is_finite() && r.lo <= r.hi, "/energies", "need finite lo <= hi")?;
            check(r.count >= 1, "/energies/count", "must be >= 1")?;
        }
        if let Some(n) = &self.n {
            check(!n.is_empty(), "/n", "must not be empty")?;
            for (i, &v) in n.iter().enumerate() {
                check(v >= 1, &format!("/n/{i}"), "scales must be >= 1")?;
            }
        }
        check(self.g.is_none_or(|g| g >= 1000), "/G", "must be >= 1000")?;
        check(self.gx.is_none_or(|g| g >= 64), "/Gx", "must be >= 64")?;
        check(self.nx.is_none_or(|g| g >= 1), "/Nx", "must be >= 1")?;
        positive(self.delta, "/delta")?;
        check(self.k.is_none_or(|k| k >= 1), "/k", "must be >= 1")?;
        nonneg(self.epsilon, "/epsilon")?;
        nonneg(self.fatten, "/fatten")?;
        positive(self.sigma_min, "/sigma_min")?;
        check(self.sigma_count.is_none_or(|c| c >= 1), "/sigma_count", "must be >= 1")?;
        check(self.fill.is_none_or(|c| c >= 1), "/fill", "must be >= 1")?;
        check(self.depth.is_none_or(|d| d >= 1), "/depth", "must be >= 1")?;
        check(self.search_bound.is_none_or(|d| d >= 1), "/search_bound", "must be >= 1")?;
        positive(self.j_budget, "/j_budget")?;
        positive(self.tolerance, "/tolerance")?;
        if let Some(EdgePolicySpec::Bulk { max_boundary_mass, .. }) = self.edge_policy {
            check(
                (0.0..=1.0).contains(&max_boundary_mass),
                "/edge_policy/bulk/max_boundary_mass",
                "must lie in [0, 1]",
            )?;
        }
        let c = &self.constants;
        check(c.a > 1.0 && c.a.is_finite(), "/constants/A", "Diophantine exponent A must be > 1")?;
        check(
            c.nu.is_none_or(|nu| nu > 0.0 && nu <= 0.5),
            "/constants/nu",
            "must lie in (0, 1/2]",
        )?;
        positive(Some(c.c), "/constants/C")?;
        positive(Some(c.c_seg), "/constants/c_seg")?;
        positive(Some(c.c_ldt), "/constants/c_ldt")?;
        check(c.tau_min > 0.0 && c.tau_min <= 1.0, "/constants/tau_min", "must lie in (0, 1]")?;
        positive(Some(c.tau_stability), "/constants/tau_stability")?;
        positive(Some(c.near_bound), "/constants/near_bound")?;
        check(self.threads.is_none_or(|t| t >= 1), "/threads", "must be >= 1")?;
        Ok(())
    }

    pub fn energies_or(&self, default: &[f64]) -> Vec<f64> {
        self.energies.as_ref().map_or_else(|| default.to_vec(), EnergySpec::values)
    }

    pub fn n_or(&self, default: &[usize]) -> Vec<usize> {
        self.n.clone().unwrap_or_else(|| default.to_vec())
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }

    pub fn edge_policy(&self) -> EdgePolicy {
        self.edge_policy.map(Into::into).unwrap_or_default()
    }

    pub fn omega(&self) -> f64 {
        match &self.omega {
            OmegaSpec::Named(n) if n == "silver" => SILVER_MEAN,
            OmegaSpec::Named(_) => GOLDEN_MEAN,
            OmegaSpec::Decimal(d) => d.decimal.trim().parse().expect("validated"),
        }
    }

    /// Continued-fraction data for the configured frequency.
    pub fn frequency(&self, depth: usize) -> Result<Frequency, RunError> {
        match &self.omega {
            OmegaSpec::Named(n) if n == "silver" => {
                let mut f = Frequency::from_quotients(&vec![2; depth]);
                f.omega = SILVER_MEAN;
                Ok(f)
            }
            OmegaSpec::Named(_) => Ok(Frequency::golden(depth)),
            OmegaSpec::Decimal(d) => {
                certified_expansion(self.omega(), depth, d.bits).map_err(|e| RunError::config("/omega", e.to_string()))
            }
        }
    }

    pub fn potential(&self, base_dir: &Path) -> Result<GevreyPotential, RunError> {
        let p = &self.potential;
        let built = if let Some(id) = &p.id {
            Ok(match id.as_str() {
                "amo" => GevreyPotential::almost_mathieu(),
                "gevrey_model" => GevreyPotential::gevrey_model(p.cutoff.unwrap_or(GevreyPotential::GEVREY_MODEL_CUTOFF)),
                "flat_bump" => GevreyPotential::flat_bump(p.cutoff.unwrap_or(64)),
                _ => GevreyPotential::zero(),
            })
        } else if let Some(file) = &p.file {
            let path = base_dir.join(file);
            let doc = load_potential(&path).map_err(|e| RunError::config("/potential/file", e.to_string()))?;
            doc.build()
        } else {
            p.inline.as_ref().expect("validated").build()
        };
        let pointer = if p.inline.is_some() { "/potential/inline" } else { "/potential" };
        built.map_err(|e| RunError::config(pointer, e.to_string()))
    }
}
