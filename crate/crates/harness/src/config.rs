//! TOML experiment configuration and its resolution into concrete run parameters.

use std::path::{Path, PathBuf};

use quasijacobi::frequency::{from_partial_quotients, GOLDEN, SILVER};
use quasijacobi::resonance::{paper_parameters, preset_length_pairs, PaperParameters};
use quasijacobi::sampling::ModelFile;
use quasijacobi::SamplingPair;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Machine-readable configuration error.
#[derive(Debug, Clone, Serialize)]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self { field: field.into(), message: message.into() }
    }
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Spectrum,
    Lyapunov,
    Gaps,
    Resonances,
    Badset,
    Localize,
    GreenCheck,
    Ldt,
    AvalancheCheck,
    Identities,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Lyapunov => "lyapunov",
            Command::Gaps => "gaps",
            Command::Resonances => "resonances",
            Command::Badset => "badset",
            Command::Localize => "localize",
            Command::GreenCheck => "green-check",
            Command::Ldt => "ldt",
            Command::AvalancheCheck => "avalanche-check",
            Command::Identities => "identities",
        }
    }

    /// Stem used for output file names.
    pub fn stem(self) -> &'static str {
        match self {
            Command::GreenCheck => "green_check",
            Command::AvalancheCheck => "avalanche_check",
            other => other.name(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum PresetName {
    #[default]
    Custom,
    Paper,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelSpec {
    Path(PathBuf),
    Builtin { builtin: String, #[serde(default)] lambda: Option<f64> },
}

/// `"golden"`, `"silver"`, a literal in (0, 1), or a list of partial quotients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OmegaSpec {
    Named(String),
    Literal(f64),
    Quotients(Vec<u64>),
}

impl Default for OmegaSpec {
    fn default() -> Self {
        OmegaSpec::Named("golden".into())
    }
}

impl OmegaSpec {
    pub fn value(&self) -> Result<f64, ConfigError> {
        let w = match self {
            OmegaSpec::Named(n) => match n.as_str() {
                "golden" => GOLDEN,
                "silver" => SILVER,
                other => return Err(ConfigError::new("omega", format!("unknown frequency name {other:?}"))),
            },
            OmegaSpec::Literal(v) => *v,
            OmegaSpec::Quotients(q) => {
                if q.is_empty() || q.contains(&0) {
                    return Err(ConfigError::new("omega", "partial quotients must be a non-empty list of positive integers"));
                }
                from_partial_quotients(q)
            }
        };
        if !(w > 0.0 && w < 1.0) {
            return Err(ConfigError::new("omega", format!("frequency {w} outside (0, 1)")));
        }
        Ok(w)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VariantName {
    #[default]
    Plain,
    U,
    A,
}

impl From<VariantName> for quasijacobi::transfer::Variant {
    fn from(v: VariantName) -> Self {
        use quasijacobi::transfer::Variant;
        match v {
            VariantName::Plain => Variant::Plain,
            VariantName::U => Variant::U,
            VariantName::A => Variant::A,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumParams {
    /// Phases `x + i/phases`.
    pub phases: usize,
}

impl Default for SpectrumParams {
    fn default() -> Self {
        Self { phases: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LyapunovParams {
    /// Explicit energies; when empty, `samples` eigenvalues of the window are used.
    pub energies: Vec<f64>,
    pub samples: usize,
    /// Target grid size, rounded to a continued-fraction denominator.
    pub grid: u64,
    pub y: f64,
    pub variant: VariantName,
}

impl Default for LyapunovParams {
    fn default() -> Self {
        Self { energies: Vec::new(), samples: 20, grid: 4096, y: 0.0, variant: VariantName::Plain }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GapsParams {
    pub p: f64,
    /// Exclude eigenvalues in the bad set produced earlier in the same run.
    pub use_badset: bool,
    /// Bad-set file to exclude instead.
    pub badset: Option<PathBuf>,
}

impl Default for GapsParams {
    fn default() -> Self {
        Self { p: 16.0, use_badset: true, badset: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BadsetParams {
    pub l: usize,
    pub tau: f64,
    pub grid: usize,
    /// Verification grid is `grid · verify_factor`; 0 skips verification.
    pub verify_factor: usize,
    /// Earlier bad set to fatten and merge in.
    pub prior: Option<PathBuf>,
    pub prior_fatten: f64,
}

impl Default for BadsetParams {
    fn default() -> Self {
        Self { l: 16, tau: 0.05, grid: 1024, verify_factor: 4, prior: None, prior_fatten: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ResonanceParams {
    /// Window length pairs; defaults to `(l, l)` with `l` from `[badset]`.
    pub lengths: Option<Vec<[usize; 2]>>,
    pub sigma: f64,
    pub q: i64,
    pub m: i64,
    pub grid: usize,
    /// Rescan after one `fatten(σ)` refinement of the bad set.
    pub refine: bool,
    /// Rescan the refined set on the half-step shifted grid.
    pub staggered: bool,
    /// Bad-set file; otherwise the set from the same run, or a fresh one.
    pub badset: Option<PathBuf>,
}

impl Default for ResonanceParams {
    fn default() -> Self {
        Self { lengths: None, sigma: 1e-4, q: 40, m: 400, grid: 64, refine: true, staggered: true, badset: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LocalizeParams {
    pub q: usize,
    pub tails: Vec<usize>,
    pub sigma: f64,
}

impl Default for LocalizeParams {
    fn default() -> Self {
        Self { q: 12, tails: vec![4, 8, 12], sigma: 1e-6 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GreenParams {
    /// Energies per scale, placed in spectral gaps.
    pub energies: usize,
    /// Largest scale checked against the dense inverse.
    pub max_n: usize,
    pub min_distance: f64,
}

impl Default for GreenParams {
    fn default() -> Self {
        Self { energies: 8, max_n: 64, min_distance: 1e-3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LdtParams {
    pub energies: Vec<f64>,
    pub h: Vec<f64>,
    pub grid: usize,
    pub c0_proxy: f64,
}

impl Default for LdtParams {
    fn default() -> Self {
        Self { energies: vec![0.4], h: vec![0.0, 1.0, 2.0, 4.0, 8.0], grid: 4096, c0_proxy: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AvalancheParams {
    pub lengths: Vec<usize>,
    pub blocks: usize,
    pub energies: Vec<f64>,
    pub phases: Vec<f64>,
}

impl Default for AvalancheParams {
    fn default() -> Self {
        Self { lengths: vec![1, 2, 4, 8, 16, 32], blocks: 6, energies: vec![-4.0, -1.1, 0.4, 2.5], phases: vec![0.1, 0.35] }
    }
}

/// Sizes of the identity suites.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IdentitiesParams {
    pub models: usize,
    pub max_n: usize,
    pub poisson_models: usize,
    pub poisson_max_n: usize,
    pub green_cases: usize,
    pub slope_models: usize,
    pub ap_sequences: usize,
    pub zero_disks: usize,
    /// Almost-Mathieu coupling for the lower bound `L ≥ log λ`; skipped when absent.
    pub herman_lambda: Option<f64>,
    pub lyapunov_n: usize,
    pub lyapunov_grid: u64,
    pub lyapunov_samples: usize,
    pub ldt_n: usize,
    pub ldt_energy: f64,
}

impl Default for IdentitiesParams {
    fn default() -> Self {
        Self {
            models: 100,
            max_n: 64,
            poisson_models: 20,
            poisson_max_n: 128,
            green_cases: 100,
            slope_models: 50,
            ap_sequences: 1000,
            zero_disks: 200,
            herman_lambda: None,
            lyapunov_n: 256,
            lyapunov_grid: 4096,
            lyapunov_samples: 20,
            ldt_n: 256,
            ldt_energy: 0.4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PaperPresetParams {
    pub n: usize,
    pub a: f64,
    pub p: f64,
    pub q_cap: i64,
    pub scan_grid: usize,
    pub badset_grid: usize,
}

impl Default for PaperPresetParams {
    fn default() -> Self {
        Self { n: 1024, a: 2.0, p: 16.0, q_cap: 64, scan_grid: 8, badset_grid: 1024 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Model JSON path (relative to the config file) or a builtin model.
    pub model: ModelSpec,
    #[serde(default)]
    pub omega: OmegaSpec,
    #[serde(default = "default_scales")]
    pub scales: Vec<usize>,
    #[serde(default)]
    pub x: f64,
    #[serde(default = "default_x_grid")]
    pub x_grid: usize,
    #[serde(default)]
    pub energy_window: Option<[f64; 2]>,
    #[serde(default)]
    pub preset: PresetName,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub threads: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    pub commands: Vec<Command>,
    #[serde(default)]
    pub spectrum: SpectrumParams,
    #[serde(default)]
    pub lyapunov: LyapunovParams,
    #[serde(default)]
    pub gaps: GapsParams,
    #[serde(default)]
    pub badset: BadsetParams,
    #[serde(default)]
    pub resonances: ResonanceParams,
    #[serde(default)]
    pub localize: LocalizeParams,
    #[serde(default)]
    pub green: GreenParams,
    #[serde(default)]
    pub ldt: LdtParams,
    #[serde(default)]
    pub avalanche: AvalancheParams,
    #[serde(default)]
    pub identities: IdentitiesParams,
    #[serde(default)]
    pub paper: PaperPresetParams,
}

fn default_scales() -> Vec<usize> {
    vec![64]
}

fn default_x_grid() -> usize {
    64
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::new("config", e.message().to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::new("config", format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }
}

/// Parameters after preset expansion and validation; everything that
/// determines the payload of a run and nothing else.
#[derive(Debug, Clone, Serialize)]
pub struct Resolved {
    #[serde(skip)]
    pub pair: SamplingPair,
    #[serde(skip)]
    pub base_dir: PathBuf,
    pub model_hash: String,
    pub omega: f64,
    pub scales: Vec<usize>,
    pub x: f64,
    pub x_grid: usize,
    pub energy_window: Option<[f64; 2]>,
    pub preset: PresetName,
    pub paper: Option<PaperParameters>,
    pub seed: u64,
    pub commands: Vec<Command>,
    pub spectrum: SpectrumParams,
    pub lyapunov: LyapunovParams,
    pub gaps: GapsParams,
    pub badset: BadsetParams,
    pub resonances: ResonanceParams,
    pub localize: LocalizeParams,
    pub green: GreenParams,
    pub ldt: LdtParams,
    pub avalanche: AvalancheParams,
    pub identities: IdentitiesParams,
}

impl Resolved {
    /// Hex SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("serialisable");
        hex(&Sha256::digest(&json))
    }

    pub fn path(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn length_pairs(&self) -> Vec<(usize, usize)> {
        match &self.resonances.lengths {
            Some(v) => v.iter().map(|p| (p[0], p[1])).collect(),
            None => vec![(self.badset.l, self.badset.l)],
        }
    }
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn load_model(spec: &ModelSpec, base: &Path) -> Result<SamplingPair, ConfigError> {
    match spec {
        ModelSpec::Path(p) => {
            let path = if p.is_absolute() { p.clone() } else { base.join(p) };
            let text = std::fs::read_to_string(&path).map_err(|e| ConfigError::new("model", format!("{}: {e}", path.display())))?;
            ModelFile::from_json(&text).map_err(|e| ConfigError::new("model", e.to_string()))
        }
        ModelSpec::Builtin { builtin, lambda } => match builtin.as_str() {
            "almost-mathieu" => {
                let l = lambda.ok_or_else(|| ConfigError::new("model.lambda", "almost-mathieu needs lambda"))?;
                if !(l > 0.0) {
                    return Err(ConfigError::new("model.lambda", "must be positive"));
                }
                Ok(SamplingPair::almost_mathieu(l))
            }
            "free" => Ok(SamplingPair::free()),
            other => Err(ConfigError::new("model.builtin", format!("unknown builtin model {other:?}"))),
        },
    }
}

fn positive<T: PartialOrd + Default + Copy + std::fmt::Display>(field: &str, v: T) -> Result<(), ConfigError> {
    if v > T::default() {
        Ok(())
    } else {
        Err(ConfigError::new(field, format!("must be positive, got {v}")))
    }
}

/// Validate, expand the preset and load the model. `base_dir` anchors relative paths.
pub fn resolve(cfg: &ExperimentConfig, preset_override: Option<PresetName>, base_dir: &Path) -> Result<Resolved, ConfigError> {
    let omega = cfg.omega.value()?;
    let pair = load_model(&cfg.model, base_dir)?;
    if cfg.commands.is_empty() {
        return Err(ConfigError::new("commands", "no commands listed"));
    }
    if cfg.scales.is_empty() {
        return Err(ConfigError::new("scales", "empty"));
    }
    for &n in &cfg.scales {
        positive("scales", n)?;
    }
    positive("x_grid", cfg.x_grid)?;
    if !cfg.x.is_finite() {
        return Err(ConfigError::new("x", "must be finite"));
    }
    if let Some([lo, hi]) = cfg.energy_window {
        if !(lo < hi) {
            return Err(ConfigError::new("energy_window", "lower end must be below upper end"));
        }
    }
    positive("spectrum.phases", cfg.spectrum.phases)?;
    positive("lyapunov.samples", cfg.lyapunov.samples)?;
    positive("lyapunov.grid", cfg.lyapunov.grid)?;
    positive("gaps.p", cfg.gaps.p)?;
    positive("badset.l", cfg.badset.l)?;
    if !(cfg.badset.tau >= 0.0) {
        return Err(ConfigError::new("badset.tau", "must be non-negative"));
    }
    positive("badset.grid", cfg.badset.grid)?;
    if cfg.badset.prior_fatten < 0.0 {
        return Err(ConfigError::new("badset.prior_fatten", "must be non-negative"));
    }
    positive("resonances.sigma", cfg.resonances.sigma)?;
    positive("resonances.grid", cfg.resonances.grid)?;
    if cfg.resonances.q < 0 || cfg.resonances.m < 0 {
        return Err(ConfigError::new("resonances", "q and m must be non-negative"));
    }
    if let Some(v) = &cfg.resonances.lengths {
        if v.is_empty() || v.iter().any(|p| p[0] == 0 || p[1] == 0) {
            return Err(ConfigError::new("resonances.lengths", "pairs of positive lengths required"));
        }
    }
    positive("localize.sigma", cfg.localize.sigma)?;
    positive("green.max_n", cfg.green.max_n)?;
    positive("green.min_distance", cfg.green.min_distance)?;
    if cfg.ldt.h.iter().any(|h| !(*h >= 0.0)) {
        return Err(ConfigError::new("ldt.h", "thresholds must be non-negative"));
    }
    positive("ldt.grid", cfg.ldt.grid)?;
    positive("avalanche.blocks", cfg.avalanche.blocks)?;
    if cfg.avalanche.lengths.iter().any(|l| *l == 0) {
        return Err(ConfigError::new("avalanche.lengths", "lengths must be positive"));
    }

    let preset = preset_override.unwrap_or(cfg.preset);
    let mut out = Resolved {
        model_hash: pair.model_hash(),
        pair,
        base_dir: base_dir.to_path_buf(),
        omega,
        scales: cfg.scales.clone(),
        x: cfg.x,
        x_grid: cfg.x_grid,
        energy_window: cfg.energy_window,
        preset,
        paper: None,
        seed: cfg.seed,
        commands: cfg.commands.clone(),
        spectrum: cfg.spectrum.clone(),
        lyapunov: cfg.lyapunov.clone(),
        gaps: cfg.gaps.clone(),
        badset: cfg.badset.clone(),
        resonances: cfg.resonances.clone(),
        localize: cfg.localize.clone(),
        green: cfg.green.clone(),
        ldt: cfg.ldt.clone(),
        avalanche: cfg.avalanche.clone(),
        identities: cfg.identities.clone(),
    };
    if preset == PresetName::Paper {
        let pp = &cfg.paper;
        positive("paper.n", pp.n)?;
        positive("paper.a", pp.a)?;
        positive("paper.p", pp.p)?;
        positive("paper.q_cap", pp.q_cap)?;
        positive("paper.scan_grid", pp.scan_grid)?;
        if pp.n < 3 {
            return Err(ConfigError::new("paper.n", "needs N ≥ 3 so that log N > 1"));
        }
        let params = paper_parameters(pp.n, pp.a, pp.p, pp.q_cap);
        out.scales = vec![pp.n];
        out.badset.l = params.l;
        out.badset.tau = params.tau;
        out.badset.grid = pp.badset_grid;
        out.resonances.lengths = Some(preset_length_pairs(params.l).into_iter().map(|(a, b)| [a, b]).collect());
        out.resonances.sigma = params.sigma;
        out.resonances.q = params.q;
        out.resonances.m = params.m_max;
        out.resonances.grid = pp.scan_grid;
        out.gaps.p = pp.p;
        out.paper = Some(params);
    }
    Ok(out)
}
