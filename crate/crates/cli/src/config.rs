//! Run configuration: a TOML document with strict keys and documented defaults.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Default frequency grid, in units of the hopping.
pub const DEFAULT_OMEGAS: [f64; 5] = kubo_core::response::DEFAULT_OMEGAS;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Computation {
    Conductivity,
    Chern,
    KuboVsTknn,
    EdSpectrum,
    EdConductivity,
    EdUstability,
    WickCheck,
    WardCheck,
}

impl Computation {
    pub const ALL: [Computation; 8] = [
        Computation::Conductivity,
        Computation::Chern,
        Computation::KuboVsTknn,
        Computation::EdSpectrum,
        Computation::EdConductivity,
        Computation::EdUstability,
        Computation::WickCheck,
        Computation::WardCheck,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Computation::Conductivity => "conductivity",
            Computation::Chern => "chern",
            Computation::KuboVsTknn => "kubo-vs-tknn",
            Computation::EdSpectrum => "ed-spectrum",
            Computation::EdConductivity => "ed-conductivity",
            Computation::EdUstability => "ed-ustability",
            Computation::WickCheck => "wick-check",
            Computation::WardCheck => "ward-check",
        }
    }

    pub fn is_ed(self) -> bool {
        matches!(
            self,
            Computation::EdSpectrum
                | Computation::EdConductivity
                | Computation::EdUstability
                | Computation::WickCheck
                | Computation::WardCheck
        )
    }
}

impl fmt::Display for Computation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Computation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Self::ALL.into_iter().find(|c| c.name() == s).ok_or_else(|| format!("unknown computation '{s}'"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelPreset {
    Graphene,
    Haldane,
    Flat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub preset: ModelPreset,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
}

impl ModelConfig {
    /// Accepted parameter names and their defaults.
    pub fn defaults(preset: ModelPreset) -> &'static [(&'static str, f64)] {
        match preset {
            ModelPreset::Graphene => &[("t", 1.0), ("spin_degeneracy", 2.0)],
            ModelPreset::Haldane => &[
                ("t1", 1.0),
                ("t2", 0.1),
                ("phi", std::f64::consts::FRAC_PI_2),
                ("m", 0.0),
                ("spin_degeneracy", 1.0),
            ],
            ModelPreset::Flat => &[("gap", 2.0), ("spin_degeneracy", 1.0)],
        }
    }

    pub fn param(&self, name: &str) -> f64 {
        self.params.get(name).copied().unwrap_or_else(|| {
            Self::defaults(self.preset).iter().find(|(n, _)| *n == name).map(|(_, v)| *v).expect("known parameter")
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LatticePreset {
    Honeycomb,
    Square,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryKind {
    Periodic,
    Open,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeConfig {
    pub preset: LatticePreset,
    #[serde(default = "default_size")]
    pub size: usize,
    #[serde(default)]
    pub spinful: bool,
    #[serde(default = "default_boundary")]
    pub boundary: BoundaryKind,
}

fn default_size() -> usize {
    2
}

fn default_boundary() -> BoundaryKind {
    BoundaryKind::Periodic
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InteractionKind {
    None,
    /// `(n_up - 1/2)(n_down - 1/2)` on every orbital; spinful lattices only.
    Hubbard,
    /// `(n_x - 1/2)(n_y - 1/2)` on nearest-neighbour honeycomb bonds; spinless only.
    NearestNeighbour,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnergyScale {
    Absolute,
    /// Couplings and the Wick frequency are fractions of the bulk gap.
    Gap,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnitsFlag {
    Natural,
    E2h,
}

impl FromStr for UnitsFlag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "natural" => Ok(UnitsFlag::Natural),
            "e2h" => Ok(UnitsFlag::E2h),
            _ => Err(format!("units must be 'natural' or 'e2h', got '{s}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Numerics {
    #[serde(default = "default_mesh_n")]
    pub mesh_n: usize,
    #[serde(default = "default_depth")]
    pub refinement_depth: u32,
    #[serde(default = "default_omegas")]
    pub omegas: Vec<f64>,
    /// Inverse temperature; absent means zero temperature for free-fermion
    /// computations and `20` for exact diagonalization.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default)]
    pub mu: f64,
    #[serde(default = "default_couplings")]
    pub couplings: Vec<f64>,
    #[serde(default = "default_scale")]
    pub energy_scale: EnergyScale,
    /// Linear sizes for `ed-ustability`.
    #[serde(default = "default_sizes")]
    pub sizes: Vec<usize>,
    #[serde(default = "default_chern_n")]
    pub chern_n: usize,
    /// Frequency of the real-time check (scaled by `energy_scale`).
    #[serde(default = "default_wick_omega")]
    pub wick_omega: f64,
    /// Real-time cutoff; absent means `ln(1e10) / wick_omega`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_max: Option<f64>,
    /// Mesh used to locate the bulk gap for `energy_scale = "gap"`.
    #[serde(default = "default_gap_mesh")]
    pub gap_mesh_n: usize,
    /// Particle-number sectors kept by exact diagonalization (all by default).
    /// Grand-canonical quantities require the full space.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub particles: Option<Vec<usize>>,
}

fn default_mesh_n() -> usize {
    600
}
fn default_depth() -> u32 {
    14
}
fn default_omegas() -> Vec<f64> {
    DEFAULT_OMEGAS.to_vec()
}
fn default_couplings() -> Vec<f64> {
    vec![0.0]
}
fn default_scale() -> EnergyScale {
    EnergyScale::Absolute
}
fn default_sizes() -> Vec<usize> {
    vec![1, 2]
}
fn default_chern_n() -> usize {
    24
}
fn default_wick_omega() -> f64 {
    0.1
}
fn default_gap_mesh() -> usize {
    60
}

impl Default for Numerics {
    fn default() -> Self {
        toml::from_str("").expect("defaults deserialize")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_dir")]
    pub directory: PathBuf,
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
    #[serde(default = "default_units")]
    pub units: UnitsFlag,
}

fn default_dir() -> PathBuf {
    PathBuf::from("out")
}
fn default_formats() -> Vec<Format> {
    vec![Format::Csv, Format::Json]
}
fn default_units() -> UnitsFlag {
    UnitsFlag::Natural
}

impl Default for OutputConfig {
    fn default() -> Self {
        toml::from_str("").expect("defaults deserialize")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub computation: Option<Computation>,
    pub model: ModelConfig,
    pub lattice: LatticeConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interaction: Option<InteractionKind>,
    #[serde(default)]
    pub numerics: Numerics,
    #[serde(default)]
    pub output: OutputConfig,
}

fn range_error(key: &str, msg: impl fmt::Display) -> CliError {
    CliError::Config(format!("{key}: {msg}"))
}

impl RunConfig {
    /// The interaction in effect: explicit, or Hubbard on spinful and
    /// nearest-neighbour on spinless honeycomb lattices.
    pub fn interaction_kind(&self) -> InteractionKind {
        self.interaction.unwrap_or(match (self.lattice.preset, self.lattice.spinful) {
            (LatticePreset::Honeycomb, true) => InteractionKind::Hubbard,
            (LatticePreset::Honeycomb, false) => InteractionKind::NearestNeighbour,
            (LatticePreset::Square, _) => InteractionKind::None,
        })
    }

    /// Checks presets, parameter names and numeric ranges.
    pub fn validate(&self) -> Result<(), CliError> {
        let known = ModelConfig::defaults(self.model.preset);
        for (k, v) in &self.model.params {
            if !known.iter().any(|(n, _)| n == k) {
                let names: Vec<&str> = known.iter().map(|(n, _)| *n).collect();
                return Err(range_error(
                    &format!("model.params.{k}"),
                    format!("unknown parameter for {:?} (expected one of {names:?})", self.model.preset),
                ));
            }
            if !v.is_finite() {
                return Err(range_error(&format!("model.params.{k}"), "must be finite"));
            }
        }
        let s = self.model.param("spin_degeneracy");
        if !(s == 1.0 || s == 2.0) {
            return Err(range_error("model.params.spin_degeneracy", "must be 1 or 2"));
        }
        let geometry = match self.model.preset {
            ModelPreset::Graphene | ModelPreset::Haldane => LatticePreset::Honeycomb,
            ModelPreset::Flat => LatticePreset::Square,
        };
        if self.lattice.preset != geometry {
            return Err(range_error(
                "lattice.preset",
                format!("{:?} requires the {:?} lattice", self.model.preset, geometry),
            ));
        }
        if !(1..=6).contains(&self.lattice.size) {
            return Err(range_error("lattice.size", "must be in 1..=6"));
        }
        match (self.interaction_kind(), self.lattice.spinful) {
            (InteractionKind::Hubbard, false) => {
                return Err(range_error("interaction", "hubbard requires lattice.spinful = true"))
            }
            (InteractionKind::NearestNeighbour, true) => {
                return Err(range_error("interaction", "nearest_neighbour requires a spinless lattice"))
            }
            (InteractionKind::NearestNeighbour, _) if self.lattice.preset != LatticePreset::Honeycomb => {
                return Err(range_error("interaction", "nearest_neighbour is defined on the honeycomb lattice"))
            }
            _ => {}
        }

        let n = &self.numerics;
        if !(1..=5000).contains(&n.mesh_n) {
            return Err(range_error("numerics.mesh_n", format!("must be in 1..=5000, got {}", n.mesh_n)));
        }
        if n.refinement_depth > 40 {
            return Err(range_error("numerics.refinement_depth", "must be <= 40"));
        }
        if n.omegas.is_empty() || n.omegas.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(range_error("numerics.omegas", "must be a non-empty list of positive frequencies"));
        }
        if let Some(b) = n.beta {
            if b.is_nan() || b <= 0.0 {
                return Err(range_error("numerics.beta", "must be positive (inf allowed)"));
            }
        }
        if !n.mu.is_finite() {
            return Err(range_error("numerics.mu", "must be finite"));
        }
        if n.couplings.is_empty() || n.couplings.iter().any(|u| !u.is_finite()) {
            return Err(range_error("numerics.couplings", "must be a non-empty list of finite values"));
        }
        if n.sizes.is_empty() || n.sizes.iter().any(|l| !(1..=6).contains(l)) {
            return Err(range_error("numerics.sizes", "entries must be in 1..=6"));
        }
        if !(6..=2000).contains(&n.chern_n) {
            return Err(range_error("numerics.chern_n", "must be in 6..=2000"));
        }
        if !(n.wick_omega.is_finite() && n.wick_omega > 0.0) {
            return Err(range_error("numerics.wick_omega", "must be positive"));
        }
        if let Some(t) = n.t_max {
            if !(t.is_finite() && t > 0.0) {
                return Err(range_error("numerics.t_max", "must be positive and finite"));
            }
        }
        if !(2..=2000).contains(&n.gap_mesh_n) {
            return Err(range_error("numerics.gap_mesh_n", "must be in 2..=2000"));
        }
        if self.output.formats.is_empty() {
            return Err(range_error("output.formats", "at least one format required"));
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

/// Parses a TOML document into a validated config.
pub fn parse_config(text: &str) -> Result<RunConfig, CliError> {
    let table: toml::Table = text.parse().map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?;
    from_table(table)
}

pub(crate) fn from_table(table: toml::Table) -> Result<RunConfig, CliError> {
    let cfg: RunConfig = RunConfig::deserialize(toml::Value::Table(table))
        .map_err(|e| CliError::Config(e.to_string().trim().to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

/// Applies `dotted.key=value` overrides to a parsed document. Values are read
/// as TOML literals, falling back to plain strings.
pub fn apply_overrides(table: &mut toml::Table, overrides: &[String]) -> Result<(), CliError> {
    for o in overrides {
        let (key, raw) = o
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("override '{o}' must look like key=value")))?;
        let value = parse_value(raw.trim());
        let parts: Vec<&str> = key.trim().split('.').collect();
        let (last, path) = parts.split_last().expect("split yields at least one part");
        let mut cur = &mut *table;
        for p in path {
            let entry = cur.entry(p.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
            cur = entry
                .as_table_mut()
                .ok_or_else(|| CliError::Config(format!("override '{key}': '{p}' is not a table")))?;
        }
        cur.insert(last.to_string(), value);
    }
    Ok(())
}

fn parse_value(raw: &str) -> toml::Value {
    let doc = format!("v = {raw}");
    match doc.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("key present"),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}
