use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::family::{presets, FilterSpec, ModulatorSpec, NoiseSpec, OperatorFamily, SamplingGrid};
use crate::geometry::Envelope;
use crate::localize::Domain;
use crate::recover::SolverKind;

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn json_err(source: &str, e: serde_json::Error) -> Error {
    config_err(format!("{source}: line {}, column {}: {e}", e.line(), e.column()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKindConfig {
    Convolution,
    ProductConvolution,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub dim: usize,
    pub origin: Vec<f64>,
    pub step: Vec<f64>,
    pub counts: Vec<usize>,
}

fn yes() -> bool {
    true
}

/// Inline family description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyConfig {
    pub kind: FamilyKindConfig,
    pub grid: GridConfig,
    pub filters: Vec<FilterSpec>,
    #[serde(default)]
    pub modulators: Vec<ModulatorSpec>,
    #[serde(default = "yes")]
    pub orthogonalize: bool,
}

impl FamilyConfig {
    pub fn build(&self) -> Result<OperatorFamily> {
        let g = &self.grid;
        if g.origin.len() != g.dim || g.step.len() != g.dim || g.counts.len() != g.dim {
            return Err(config_err("grid: origin, step and counts must have `dim` entries"));
        }
        let grid = SamplingGrid::regular(g.origin.clone(), g.step.clone(), g.counts.clone())?;
        let family = match self.kind {
            FamilyKindConfig::Convolution => {
                if !self.modulators.is_empty() {
                    return Err(config_err("convolution families take no modulators"));
                }
                OperatorFamily::convolution(grid, self.filters.clone())?
            }
            FamilyKindConfig::ProductConvolution => {
                let mut mods = Vec::new();
                for m in &self.modulators {
                    mods.extend(m.build(&grid)?);
                }
                OperatorFamily::product_convolution(grid, self.filters.clone(), mods)?
            }
        };
        if self.orthogonalize {
            family.orthogonalized()
        } else {
            Ok(family)
        }
    }
}

/// Named preset with its size parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PresetConfig {
    pub preset: String,
    #[serde(default)]
    pub samples: Option<usize>,
    #[serde(default)]
    pub modulators: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
}

impl PresetConfig {
    pub fn named(name: &str) -> Self {
        Self { preset: name.to_string(), samples: None, modulators: None, seed: None }
    }

    pub fn build(&self) -> Result<OperatorFamily> {
        match self.preset.as_str() {
            "gaussian_narrow" => presets::gaussian_narrow(self.samples.unwrap_or(100)),
            "gaussian_wide" => presets::gaussian_wide(self.samples.unwrap_or(100)),
            "hats" => presets::hats(self.samples.unwrap_or(100)),
            "astigmatic" => presets::astigmatic(self.samples.unwrap_or(96)),
            "smooth_product_convolution" => presets::smooth_product_convolution(
                self.samples.unwrap_or(1000),
                self.modulators.unwrap_or(2),
                self.seed.unwrap_or(0),
            ),
            other => Err(config_err(format!(
                "unknown preset `{other}` (expected gaussian_narrow, gaussian_wide, hats, astigmatic or smooth_product_convolution)"
            ))),
        }
    }
}

/// How an experiment obtains its family.
#[derive(Clone, Debug, PartialEq)]
pub enum FamilySource {
    Preset(PresetConfig),
    Inline(FamilyConfig),
}

impl FamilySource {
    pub fn build(&self) -> Result<OperatorFamily> {
        match self {
            FamilySource::Preset(p) => p.build(),
            FamilySource::Inline(f) => f.build(),
        }
    }

    pub fn describe(&self) -> Value {
        match self {
            FamilySource::Preset(p) => serde_json::to_value(p).unwrap_or(Value::Null),
            FamilySource::Inline(f) => serde_json::to_value(f).unwrap_or(Value::Null),
        }
    }
}

/// Parse a family file.
pub fn load_family(path: &Path) -> Result<FamilySource> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| config_err(format!("cannot read family file {}: {e}", path.display())))?;
    parse_family(&text, &path.display().to_string())
}

pub fn parse_family(text: &str, source: &str) -> Result<FamilySource> {
    let value: Value = serde_json::from_str(text).map_err(|e| json_err(source, e))?;
    if value.get("preset").is_some() {
        let p: PresetConfig = serde_json::from_str(text).map_err(|e| json_err(source, e))?;
        Ok(FamilySource::Preset(p))
    } else {
        let f: FamilyConfig = serde_json::from_str(text).map_err(|e| json_err(source, e))?;
        Ok(FamilySource::Inline(f))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhiSection {
    pub reference: Option<Vec<f64>>,
    pub step: Option<f64>,
    pub k_max: Option<usize>,
    pub envelope: Envelope,
    pub fit_decay: bool,
    pub probes: usize,
}

impl Default for PhiSection {
    fn default() -> Self {
        Self { reference: None, step: None, k_max: None, envelope: Envelope::Majorant, fit_decay: true, probes: 41 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthesizeSection {
    pub positions: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    #[serde(default)]
    pub gamma: Option<Vec<f64>>,
    #[serde(default = "no_noise")]
    pub noise: NoiseSpec,
}

fn no_noise() -> NoiseSpec {
    NoiseSpec::None
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LocalizeMode {
    Single,
    Peaks,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LocalizeSection {
    pub measurement: Option<PathBuf>,
    pub synthesize: Option<SynthesizeSection>,
    pub mode: LocalizeMode,
    pub domain: Option<Domain>,
    pub coarse_step: Option<f64>,
    pub weak_threshold: f64,
    pub weak_relative: f64,
    pub exclusion_radius: Option<f64>,
}

impl Default for LocalizeSection {
    fn default() -> Self {
        Self {
            measurement: None,
            synthesize: None,
            mode: LocalizeMode::Peaks,
            domain: None,
            coarse_step: None,
            weak_threshold: 0.1,
            weak_relative: 0.1,
            exclusion_radius: None,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    /// Spike positions are drawn uniformly in this interval (defaults to the
    /// middle 60% of the grid).
    pub spike_range: Option<[f64; 2]>,
    pub gamma: Option<Vec<f64>>,
    pub coarse_step: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhaseSection {
    pub k_values: Vec<usize>,
    pub n_values: Vec<usize>,
    pub samples: usize,
    pub solvers: Vec<SolverKind>,
    pub max_iter: usize,
    /// Nuclear-norm weight relative to `|Lambda^*(c)|`.
    pub nuclear_lambda: f64,
    pub traces: bool,
}

impl Default for PhaseSection {
    fn default() -> Self {
        Self {
            k_values: vec![1, 2, 3],
            n_values: vec![1, 2, 3, 4, 6, 8, 10, 14],
            samples: 1000,
            solvers: SolverKind::all().to_vec(),
            max_iter: 2000,
            nuclear_lambda: 1e-6,
            traces: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DemoSection {
    pub pixels: usize,
    pub spacing: f64,
    pub isolated: usize,
    pub clustered_pairs: usize,
    pub pair_distance: f64,
    pub jitter: f64,
    pub coarse_step: f64,
    pub exclusion_radius: f64,
    pub weak_threshold: f64,
}

impl Default for DemoSection {
    fn default() -> Self {
        Self {
            pixels: 96,
            spacing: 16.0,
            isolated: 27,
            clustered_pairs: 3,
            pair_distance: 5.5,
            jitter: 1.0,
            coarse_step: 1.0,
            exclusion_radius: 3.0,
            weak_threshold: 0.01,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McSection {
    pub position: Option<Vec<f64>>,
    pub gamma: Option<Vec<f64>>,
    /// Base noise level as a relative level `theta`, converted to
    /// `sigma = theta |y0| / sqrt(M)`.
    pub base_theta: f64,
    pub sigma_factors: Vec<f64>,
    pub eval_step: Option<f64>,
}

impl Default for McSection {
    fn default() -> Self {
        Self { position: None, gamma: None, base_theta: 0.1, sigma_factors: vec![0.5, 1.0, 2.0], eval_step: None }
    }
}

/// Experiment configuration file.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Optional; checked against the subcommand when present.
    pub experiment: Option<String>,
    /// Path to a family file, or an inline family / preset object.
    pub family: Option<Value>,
    pub trials: Option<usize>,
    pub thetas: Option<Vec<f64>>,
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    pub rank_tol: Option<f64>,
    pub phi: PhiSection,
    pub localize: LocalizeSection,
    pub sweep: SweepSection,
    pub phase: PhaseSection,
    pub demo: DemoSection,
    pub mc: McSection,
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn parse(text: &str, source: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| json_err(source, e))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_err(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text, &path.display().to_string())?;
        cfg.base_dir = path.parent().map(Path::to_path_buf);
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        if self.trials == Some(0) {
            return Err(config_err("trials must be at least 1"));
        }
        if let Some(t) = &self.thetas {
            if t.is_empty() || t.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(config_err("thetas must be a nonempty list of nonnegative numbers"));
            }
        }
        if let Some(r) = self.rank_tol {
            if !(r > 0.0 && r < 1.0) {
                return Err(config_err("rank_tol must lie in (0, 1)"));
            }
        }
        Ok(())
    }

    /// Resolve a path relative to the config file.
    pub fn resolve(&self, p: &Path) -> PathBuf {
        match &self.base_dir {
            Some(b) if p.is_relative() => b.join(p),
            _ => p.to_path_buf(),
        }
    }

    /// Family source, falling back to `default` when none is configured.
    pub fn family_source(&self, default: &str) -> Result<FamilySource> {
        match &self.family {
            None => Ok(FamilySource::Preset(PresetConfig::named(default))),
            Some(Value::String(p)) => load_family(&self.resolve(Path::new(p))),
            Some(v @ Value::Object(map)) => {
                if map.contains_key("preset") {
                    serde_json::from_value(v.clone())
                        .map(FamilySource::Preset)
                        .map_err(|e| config_err(format!("family: {e}")))
                } else {
                    serde_json::from_value(v.clone())
                        .map(FamilySource::Inline)
                        .map_err(|e| config_err(format!("family: {e}")))
                }
            }
            Some(_) => Err(config_err("family must be a path or an object")),
        }
    }
}
