//! TOML experiment configuration.

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Region;
use crate::potential::{Potential, RadialTable};
use crate::variance::DEFAULT_BUDGET;

/// Version of the config and report schema.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Bulk,
    Edge,
    KernelAsymptotics,
    Identities,
    McCrosscheck,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Bulk => "bulk",
            Mode::Edge => "edge",
            Mode::KernelAsymptotics => "kernel-asymptotics",
            Mode::Identities => "identities",
            Mode::McCrosscheck => "mc-crosscheck",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialSpec {
    Ginibre,
    EllipticGinibre { tau: f64 },
    RadialPower { p: f64, c: f64 },
    RadialTable { r: Vec<f64>, q: Vec<f64> },
}

impl PotentialSpec {
    pub fn build(&self) -> Result<Potential> {
        match self {
            PotentialSpec::Ginibre => Ok(Potential::ginibre()),
            PotentialSpec::EllipticGinibre { tau } => Potential::elliptic_ginibre(*tau),
            PotentialSpec::RadialPower { p, c } => Potential::radial_power(*p, *c),
            PotentialSpec::RadialTable { r, q } => Potential::radial_table(RadialTable::new(r.clone(), q.clone())?),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RegionSpec {
    Disc {
        #[serde(default)]
        center: [f64; 2],
        radius: f64,
    },
    Square {
        #[serde(default)]
        center: [f64; 2],
        side: f64,
    },
    RegularPolygon {
        #[serde(default)]
        center: [f64; 2],
        radius: f64,
        sides: usize,
    },
    Polygon {
        vertices: Vec<[f64; 2]>,
    },
}

fn c(v: [f64; 2]) -> Complex64 {
    Complex64::new(v[0], v[1])
}

impl RegionSpec {
    pub fn build(&self) -> Result<Region> {
        match self {
            RegionSpec::Disc { center, radius } => Region::disc(c(*center), *radius),
            RegionSpec::Square { center, side } => Region::square(c(*center), *side),
            RegionSpec::RegularPolygon { center, radius, sides } => {
                Region::regular_polygon(c(*center), *radius, *sides)
            }
            RegionSpec::Polygon { vertices } => Region::polygon(vertices.iter().map(|v| c(*v)).collect()),
        }
    }

    /// Radius of a disc centred at the origin, if this is one.
    pub fn centered_disc_radius(&self) -> Option<f64> {
        match self {
            RegionSpec::Disc { center, radius } if center[0] == 0.0 && center[1] == 0.0 => Some(*radius),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodChoice {
    /// Bernoulli sums when the potential is radial and the region a centred disc.
    #[default]
    Auto,
    Quad,
    RadialExact,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeSection {
    pub deltas: Vec<f64>,
}

fn default_window() -> f64 {
    crate::edge::DEFAULT_WINDOW
}

fn default_separations() -> Vec<f64> {
    vec![0.0, 0.5]
}

fn default_offsets() -> Vec<[f64; 2]> {
    vec![
        [0.0, 0.0],
        [0.5, 0.0],
        [-0.5, 0.0],
        [1.0, 0.0],
        [-1.0, 0.0],
        [0.0, 1.0],
        [0.0, -1.0],
    ]
}

fn default_probe_count() -> usize {
    20
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSection {
    /// Separations `s` of `w0 = e^{is}`-type boundary parameters, in units of `sqrt(log n / n)`.
    #[serde(default = "default_separations")]
    pub separations: Vec<f64>,
    /// Values taken by both `xi` and `eta`, as `[re, im]`.
    #[serde(default = "default_offsets")]
    pub offsets: Vec<[f64; 2]>,
    #[serde(default = "default_window")]
    pub window: f64,
    /// Side of the boundary-pair probe grid for the envelope check; 0 disables it.
    #[serde(default = "default_probe_count")]
    pub probes: usize,
}

impl Default for KernelSection {
    fn default() -> Self {
        KernelSection {
            separations: default_separations(),
            offsets: default_offsets(),
            window: default_window(),
            probes: default_probe_count(),
        }
    }
}

fn default_identity_deltas() -> Vec<f64> {
    vec![-8.0, -1.0, 0.0, 1.0, 8.0]
}

fn default_identity_sums() -> Vec<f64> {
    vec![-4.0, -2.0, 0.0, 2.0, 4.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdentitiesSection {
    #[serde(default = "default_identity_deltas")]
    pub deltas: Vec<f64>,
    /// Values of `xi + eta` for the Gaussian-erfc integral.
    #[serde(default = "default_identity_sums")]
    pub sums: Vec<f64>,
}

impl Default for IdentitiesSection {
    fn default() -> Self {
        IdentitiesSection {
            deltas: default_identity_deltas(),
            sums: default_identity_sums(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampler {
    Ginibre,
    RadialModuli,
    Hkpv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McSection {
    pub sampler: Sampler,
    pub m: usize,
}

fn default_name() -> String {
    "report".into()
}

fn default_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    #[serde(default = "default_name")]
    pub name: String,
    /// Relative tolerance recorded for later comparisons.
    #[serde(default)]
    pub tolerance: Option<f64>,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            dir: default_dir(),
            name: default_name(),
            tolerance: None,
        }
    }
}

fn default_budget() -> usize {
    DEFAULT_BUDGET
}

fn default_schema() -> u32 {
    SCHEMA_VERSION
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_schema")]
    pub schema_version: u32,
    pub mode: Mode,
    pub potential: PotentialSpec,
    #[serde(default)]
    pub n: Vec<usize>,
    #[serde(default)]
    pub region: Option<RegionSpec>,
    #[serde(default)]
    pub method: MethodChoice,
    #[serde(default = "default_budget")]
    pub budget: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub edge: Option<EdgeSection>,
    #[serde(default)]
    pub kernel: Option<KernelSection>,
    #[serde(default)]
    pub identities: Option<IdentitiesSection>,
    #[serde(default)]
    pub mc: Option<McSection>,
    #[serde(default)]
    pub output: OutputSection,
}

fn invalid(field: &str, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("{field}: {msg}"))
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Checks field-level constraints; messages name the offending field.
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(invalid(
                "schema_version",
                format!("expected {SCHEMA_VERSION}, got {}", self.schema_version),
            ));
        }
        let potential = self.potential.build().map_err(|e| invalid("potential", e))?;
        if self.budget < 2 {
            return Err(invalid("budget", "must be at least 2"));
        }
        if self.mode != Mode::Identities {
            if self.n.is_empty() {
                return Err(invalid("n", "at least one value is required"));
            }
            if self.n[0] == 0 || self.n.windows(2).any(|w| w[0] >= w[1]) {
                return Err(invalid("n", "values must be positive and strictly increasing"));
            }
        }
        let region = match &self.region {
            Some(r) => Some(r.build().map_err(|e| invalid("region", e))?),
            None => None,
        };
        let exact_ok = potential.is_radial() && self.region.as_ref().and_then(|r| r.centered_disc_radius()).is_some();
        match self.mode {
            Mode::Bulk => {
                if region.is_none() {
                    return Err(invalid("region", "required in bulk mode"));
                }
                if self.method == MethodChoice::RadialExact && !exact_ok {
                    return Err(invalid(
                        "method",
                        "radial_exact needs a radial potential and a disc centred at the origin",
                    ));
                }
            }
            Mode::Edge => {
                let e = self
                    .edge
                    .as_ref()
                    .ok_or_else(|| invalid("edge", "section required in edge mode"))?;
                if e.deltas.is_empty() || e.deltas.iter().any(|d| !d.is_finite()) {
                    return Err(invalid("edge.deltas", "need at least one finite value"));
                }
                if self.method == MethodChoice::RadialExact && !potential.is_radial() {
                    return Err(invalid("method", "radial_exact needs a radial potential"));
                }
            }
            Mode::KernelAsymptotics => {
                if let Some(k) = &self.kernel {
                    if k.offsets.is_empty() || k.separations.is_empty() {
                        return Err(invalid("kernel", "offsets and separations must be non-empty"));
                    }
                    if !(k.window > 0.0) {
                        return Err(invalid("kernel.window", "must be positive"));
                    }
                }
            }
            Mode::Identities => {}
            Mode::McCrosscheck => {
                let mc = self
                    .mc
                    .as_ref()
                    .ok_or_else(|| invalid("mc", "section required in mc-crosscheck mode"))?;
                if mc.m < 2 {
                    return Err(invalid("mc.m", "need at least two repetitions"));
                }
                let Some(spec) = &self.region else {
                    return Err(invalid("region", "required in mc-crosscheck mode"));
                };
                if !matches!(spec, RegionSpec::Disc { .. }) {
                    return Err(invalid("region", "mc-crosscheck counts points in a disc"));
                }
                match mc.sampler {
                    Sampler::Ginibre if self.potential != PotentialSpec::Ginibre => {
                        return Err(invalid(
                            "mc.sampler",
                            "the eigenvalue sampler needs the ginibre potential",
                        ));
                    }
                    Sampler::RadialModuli if !exact_ok => {
                        return Err(invalid(
                            "mc.sampler",
                            "radial_moduli needs a radial potential and a disc centred at the origin",
                        ));
                    }
                    _ => {}
                }
            }
        }
        if self.output.name.is_empty() || self.output.name.contains(['/', '\\']) {
            return Err(invalid("output.name", "must be a plain file stem"));
        }
        if let Some(t) = self.output.tolerance {
            if !(t >= 0.0) {
                return Err(invalid("output.tolerance", "must be non-negative"));
            }
        }
        Ok(())
    }
}
