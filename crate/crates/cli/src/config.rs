//! Run configuration: TOML schema, `--set` overrides and resolution into
//! library objects.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use bsrm::decomposition::PairMode;
use bsrm::grid::{AxisPower, Coupling, FieldModel, GridSpec, PhaseMode};
use bsrm::simulator::Order;
use bsrm::spectral_model::{preset_bispectrum, BispectrumSource, BispectrumTable, PowerSource};

use crate::CliError;

/// Largest relative disagreement tolerated between a given `dkappa` and the
/// one implied by `dx` and `M`.
pub const DKAPPA_CONSISTENCY: f64 = 1e-3;

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: String,
    pub seed: u64,
    pub samples: u64,
    #[serde(default = "default_order")]
    pub order: u8,
    #[serde(default)]
    pub method: MethodChoice,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    pub grid: GridConfig,
    pub spectrum: SpectrumConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub verify: VerifyConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bench: Option<BenchConfig>,
    #[serde(default)]
    pub decompose: DecomposeConfig,
}

fn default_order() -> u8 {
    3
}

#[derive(Clone, Copy, Debug, Default, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum MethodChoice {
    Naive,
    #[default]
    Fft,
    Both,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub d: usize,
    pub n: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dkappa: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dx: Option<Vec<f64>>,
    #[serde(default)]
    pub quadrant: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phases: Option<PhasesChoice>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coupling: Option<CouplingChoice>,
    #[serde(default)]
    pub axis_power: AxisChoice,
    #[serde(default)]
    pub pairs: PairsChoice,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
}

fn default_epsilon() -> f64 {
    0.01
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum PhasesChoice {
    Shared,
    Independent,
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum CouplingChoice {
    Same,
    All,
}

#[derive(Clone, Copy, Debug, Default, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum AxisChoice {
    #[default]
    Zero,
    Keep,
}

#[derive(Clone, Copy, Debug, Default, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum PairsChoice {
    #[default]
    Lexicographic,
    Literal,
}

#[derive(Clone, Debug, Default, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SpectrumConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub power: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub power_file: Option<PathBuf>,
    /// Preset id or `"zero"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bispectrum: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bispectrum_file: Option<PathBuf>,
    #[serde(default = "one")]
    pub bispectrum_scale: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, Default, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub csv: bool,
}

#[derive(Clone, Debug, Default, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Reference variance; the exact discrete target when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variance: Option<f64>,
    /// Relative tolerance on the variance.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variance_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub skewness: Option<f64>,
    /// Absolute tolerance on the skewness.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub skewness_tol: Option<f64>,
}

#[derive(Clone, Debug, Default, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    #[serde(default)]
    pub second: Tolerances,
    #[serde(default)]
    pub third: Tolerances,
    #[serde(default)]
    pub spectrum: bool,
    /// Bispectrum slice `1 <= i_k, j_k <= L`; 0 disables it.
    #[serde(default)]
    pub bispectrum_max_index: usize,
    /// Directory written by `simulate`; fields are loaded instead of generated.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fields: Option<PathBuf>,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    pub samples: Vec<u64>,
    #[serde(default = "default_bench_methods")]
    pub methods: Vec<String>,
}

fn default_bench_methods() -> Vec<String> {
    vec!["naive".into(), "fft".into()]
}

#[derive(Clone, Debug, Default, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct DecomposeConfig {
    #[serde(default)]
    pub coefficients: bool,
}

fn cfg_err(path: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{path}: {msg}"))
}

/// Parse an override value as TOML, falling back to a bare string.
fn parse_value(raw: &str) -> toml::Value {
    match toml::from_str::<toml::Table>(&format!("v = {raw}")) {
        Ok(mut t) => t.remove("v").unwrap_or(toml::Value::String(raw.into())),
        Err(_) => toml::Value::String(raw.into()),
    }
}

pub fn apply_override(root: &mut toml::Table, assignment: &str) -> Result<(), CliError> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("--set expects key=value, got `{assignment}`")))?;
    let parts: Vec<&str> = key.trim().split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(CliError::Config(format!("--set: malformed key `{key}`")));
    }
    let mut table = root;
    for (depth, part) in parts[..parts.len() - 1].iter().enumerate() {
        let entry = table
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry
            .as_table_mut()
            .ok_or_else(|| cfg_err(&parts[..=depth].join("."), "is not a table"))?;
    }
    table.insert(parts[parts.len() - 1].to_string(), parse_value(raw.trim()));
    Ok(())
}

impl RunConfig {
    pub fn from_table(table: toml::Table) -> Result<Self, CliError> {
        let cfg: RunConfig = serde_path_to_error::deserialize(toml::Value::Table(table))
            .map_err(|e| cfg_err(&e.path().to_string(), e.inner()))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn parse(text: &str, overrides: &[String]) -> Result<Self, CliError> {
        let mut table: toml::Table =
            toml::from_str(text).map_err(|e| CliError::Config(format!("config: {e}")))?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        Self::from_table(table)
    }

    /// Load a config file; relative spectrum paths resolve against its directory.
    pub fn load(path: &Path, overrides: &[String]) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text, overrides)?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [
            &mut cfg.spectrum.power_file,
            &mut cfg.spectrum.bispectrum_file,
            &mut cfg.verify.fields,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    fn check(&self) -> Result<(), CliError> {
        let g = &self.grid;
        let d = g.d;
        if !(1..=4).contains(&d) {
            return Err(cfg_err("grid.d", format!("{d} outside 1..=4")));
        }
        if g.n.len() != d {
            return Err(cfg_err(
                "grid.n",
                format!("expected {d} entries, found {}", g.n.len()),
            ));
        }
        for (name, len) in [
            ("grid.dkappa", g.dkappa.as_ref().map(|v| v.len())),
            ("grid.m", g.m.as_ref().map(|v| v.len())),
            ("grid.dx", g.dx.as_ref().map(|v| v.len())),
        ] {
            if let Some(len) = len {
                if len != d {
                    return Err(cfg_err(name, format!("expected {d} entries, found {len}")));
                }
            }
        }
        if g.dkappa.is_none() && g.dx.is_none() {
            return Err(cfg_err("grid", "one of dkappa or dx is required"));
        }
        if !g.quadrant
            && (g.phases == Some(PhasesChoice::Shared) || g.coupling == Some(CouplingChoice::All))
        {
            return Err(cfg_err(
                "grid.quadrant",
                "shared phases and all-sign coupling need quadrant = true",
            ));
        }
        if !(g.epsilon > 0.0 && g.epsilon < 1.0) {
            return Err(cfg_err("grid.epsilon", "must lie in (0, 1)"));
        }
        if self.order != 2 && self.order != 3 {
            return Err(cfg_err("order", format!("{} is not 2 or 3", self.order)));
        }
        if self.samples == 0 {
            return Err(cfg_err("samples", "must be at least 1"));
        }
        let s = &self.spectrum;
        if s.power.is_some() == s.power_file.is_some() {
            return Err(cfg_err(
                "spectrum",
                "give exactly one of power or power_file",
            ));
        }
        if s.bispectrum.is_some() && s.bispectrum_file.is_some() {
            return Err(cfg_err(
                "spectrum",
                "give at most one of bispectrum or bispectrum_file",
            ));
        }
        if !(s.bispectrum_scale.is_finite() && s.bispectrum_scale >= 0.0) {
            return Err(cfg_err(
                "spectrum.bispectrum_scale",
                "must be finite and >= 0",
            ));
        }
        if let Some(b) = &self.bench {
            if b.samples.is_empty() {
                return Err(cfg_err("bench.samples", "sweep list is empty"));
            }
            if b.samples.contains(&0) {
                return Err(cfg_err("bench.samples", "sample counts must be positive"));
            }
            for m in &b.methods {
                if m != "naive" && m != "fft" {
                    return Err(cfg_err("bench.methods", format!("unknown method `{m}`")));
                }
            }
        }
        for (name, t) in [
            ("verify.second", &self.verify.second),
            ("verify.third", &self.verify.third),
        ] {
            for (field, v) in [
                ("variance_tol", t.variance_tol),
                ("skewness_tol", t.skewness_tol),
            ] {
                if let Some(v) = v {
                    if !(v.is_finite() && v >= 0.0) {
                        return Err(cfg_err(
                            &format!("{name}.{field}"),
                            "must be finite and >= 0",
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn order(&self) -> Order {
        Order::from_int(self.order).expect("checked at load")
    }

    pub fn pair_mode(&self) -> PairMode {
        match self.grid.pairs {
            PairsChoice::Lexicographic => PairMode::Lexicographic,
            PairsChoice::Literal => PairMode::Literal,
        }
    }

    pub fn tolerances(&self) -> &Tolerances {
        match self.order() {
            Order::Second => &self.verify.second,
            Order::Third => &self.verify.third,
        }
    }

    pub fn out_dir(&self, flag: Option<&Path>) -> PathBuf {
        flag.map(Path::to_path_buf)
            .or_else(|| self.out.clone())
            .unwrap_or_else(|| PathBuf::from("out").join(&self.experiment))
    }

    pub fn model(&self) -> FieldModel {
        let g = &self.grid;
        if !g.quadrant {
            return FieldModel::general();
        }
        let mut m = FieldModel::quadrant();
        if let Some(p) = g.phases {
            m = m.with_phases(match p {
                PhasesChoice::Shared => PhaseMode::Shared,
                PhasesChoice::Independent => PhaseMode::Independent,
            });
        }
        if let Some(c) = g.coupling {
            m = m.with_coupling(match c {
                CouplingChoice::Same => Coupling::SameSign,
                CouplingChoice::All => Coupling::AllSigns,
            });
        }
        m
    }

    /// Grid spacing per axis. A given `dx` fixes `dkappa = 2 pi / (M dx)`;
    /// a `dkappa` given alongside must agree to [`DKAPPA_CONSISTENCY`].
    pub fn resolved_dkappa(&self) -> Result<Vec<f64>, CliError> {
        let g = &self.grid;
        let m = self.resolved_m();
        match (&g.dx, &g.dkappa) {
            (Some(dx), given) => {
                let mut out = Vec::with_capacity(g.d);
                for k in 0..g.d {
                    if !(dx[k].is_finite() && dx[k] > 0.0) {
                        return Err(cfg_err("grid.dx", format!("entry {k} must be positive")));
                    }
                    let dk = 2.0 * PI / (m[k] as f64 * dx[k]);
                    if let Some(given) = given {
                        let rel = (given[k] - dk).abs() / dk;
                        if !(rel <= DKAPPA_CONSISTENCY) {
                            return Err(cfg_err(
                                "grid.dkappa",
                                format!(
                                    "entry {k} = {} disagrees with 2 pi / (M dx) = {dk} (relative {rel:.2e})",
                                    given[k]
                                ),
                            ));
                        }
                    }
                    out.push(dk);
                }
                Ok(out)
            }
            (None, Some(dk)) => Ok(dk.clone()),
            (None, None) => unreachable!("checked at load"),
        }
    }

    pub fn resolved_m(&self) -> Vec<usize> {
        self.grid
            .m
            .clone()
            .unwrap_or_else(|| self.grid.n.iter().map(|v| 2 * v).collect())
    }

    pub fn grid_spec(&self) -> Result<GridSpec, CliError> {
        let dk = self.resolved_dkappa()?;
        let m = self.resolved_m();
        let g = GridSpec::with_points(&self.grid.n, &dk, &m)
            .map_err(|e| cfg_err("grid", e))?
            .with_model(self.model())
            .map_err(|e| cfg_err("grid", e))?
            .with_axis_power(match self.grid.axis_power {
                AxisChoice::Zero => AxisPower::Zero,
                AxisChoice::Keep => AxisPower::Keep,
            })
            .with_epsilon(self.grid.epsilon);
        Ok(g)
    }

    pub fn power_source(&self) -> PowerSource {
        match (&self.spectrum.power, &self.spectrum.power_file) {
            (Some(p), _) => PowerSource::Preset(p.clone()),
            (None, Some(f)) => PowerSource::File(f.clone()),
            (None, None) => unreachable!("checked at load"),
        }
    }

    pub fn bispectrum_source(&self) -> Result<BispectrumSource, CliError> {
        let s = &self.spectrum;
        let scale = s.bispectrum_scale;
        let src = match (&s.bispectrum, &s.bispectrum_file) {
            (None, None) => BispectrumSource::Zero,
            (Some(name), _) if name == "zero" => BispectrumSource::Zero,
            (Some(name), _) => {
                if scale == 1.0 {
                    BispectrumSource::Preset(name.clone())
                } else {
                    let g =
                        preset_bispectrum(name).map_err(|e| cfg_err("spectrum.bispectrum", e))?;
                    BispectrumSource::Gaussian(g.scaled(scale))
                }
            }
            (None, Some(path)) => {
                if scale == 1.0 {
                    BispectrumSource::File(path.clone())
                } else {
                    let t = bsrm::io::read_bispectrum(path)
                        .map_err(|e| cfg_err("spectrum.bispectrum_file", e))?;
                    BispectrumSource::Table(BispectrumTable {
                        values: t.values.iter().map(|v| v * scale).collect(),
                        ..t
                    })
                }
            }
        };
        Ok(src)
    }
}
