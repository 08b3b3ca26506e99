//! Study configuration: TOML schema, default injection and validation.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use dampcert_core::certify::{Axis, ParameterGrid, DEFAULT_MARGIN_TOL};
use dampcert_core::devices::{device_matrix, DeviceEntry, DeviceModel, GflParams, GfmParams};
use dampcert_core::domain::ProhibitedDomain;
use dampcert_core::netmodel::{GridTopology, LineParams, Role};
use dampcert_core::ratcalc::{Polynomial, RationalFunction};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const DEFAULT_SPACING: f64 = 0.01;
pub const DEFAULT_OMEGA0: f64 = 1.0;
pub const DEFAULT_V0: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    pub topology: TopologyConfig,
    pub devices: Vec<DeviceConfig>,
    #[serde(default)]
    pub domain: DomainConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulation: Option<SimulationConfig>,
    #[serde(default)]
    pub execution: ExecutionConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NetworkMode {
    #[default]
    Static,
    Dynamic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologyConfig {
    #[serde(default = "default_omega0")]
    pub omega0: f64,
    #[serde(default)]
    pub network: NetworkMode,
    pub nodes: Vec<NodeConfig>,
    pub lines: Vec<LineConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKindConfig {
    Gfm,
    Gfl,
    Interior,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeConfig {
    pub name: String,
    pub kind: NodeKindConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LineConfig {
    pub from: String,
    pub to: String,
    /// Per-unit inductance.
    pub l: f64,
    #[serde(default)]
    pub rho: f64,
    #[serde(default = "one")]
    pub stiffness: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Gfm,
    Gfl,
    Custom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceConfig {
    pub node: String,
    pub model: ModelKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<f64>,
    #[serde(default, rename = "H", skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    #[serde(default, rename = "D", skip_serializing_if = "Option::is_none")]
    pub damping: Option<f64>,
    #[serde(default, rename = "Kp", skip_serializing_if = "Option::is_none")]
    pub kp: Option<f64>,
    #[serde(default, rename = "Ki", skip_serializing_if = "Option::is_none")]
    pub ki: Option<f64>,
    #[serde(default, rename = "V0", skip_serializing_if = "Option::is_none")]
    pub v0: Option<f64>,
    /// Custom entry numerator, ascending powers.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub num: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub den: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sweep: Vec<AxisConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    #[default]
    Linear,
    Log,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisConfig {
    pub name: String,
    pub min: f64,
    pub max: f64,
    pub count: usize,
    #[serde(default)]
    pub scale: Scale,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DomainConfig {
    pub sigma: f64,
    pub xi: f64,
    pub eps1: f64,
    pub eps2: f64,
    pub eta1: f64,
    pub eta2: f64,
    pub spacing: f64,
    pub margin_tol: f64,
}

impl Default for DomainConfig {
    fn default() -> Self {
        let d = ProhibitedDomain::default();
        Self {
            sigma: d.sigma(),
            xi: d.xi(),
            eps1: d.eps1(),
            eps2: d.eps2(),
            eta1: d.eta1(),
            eta2: d.eta2(),
            spacing: DEFAULT_SPACING,
            margin_tol: DEFAULT_MARGIN_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    /// Node name of the disturbed device.
    pub device: String,
    /// pu
    pub magnitude: f64,
    #[serde(default = "one")]
    pub start: f64,
    pub horizon: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    /// Relative settling band.
    #[serde(default = "default_band")]
    pub band: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExecutionConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

impl Default for ExecutionConfig {
    fn default() -> Self {
        Self { workers: None, output_dir: default_output_dir() }
    }
}

fn one() -> f64 {
    1.0
}
fn default_omega0() -> f64 {
    DEFAULT_OMEGA0
}
fn default_dt() -> f64 {
    0.01
}
fn default_band() -> f64 {
    0.02
}
fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

fn invalid(field: impl AsRef<str>, msg: impl AsRef<str>) -> CliError {
    // Core validation messages carry their own prefix.
    let msg = msg.as_ref();
    let msg = msg.strip_prefix("configuration error: ").unwrap_or(msg);
    CliError::Config(format!("{}: {msg}", field.as_ref()))
}

fn finite_positive(field: String, v: f64) -> Result<(), CliError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(invalid(field, format!("must be a finite value > 0, got {v}")))
    }
}

/// Command-line overrides applied on top of the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub workers: Option<usize>,
    pub spacing: Option<f64>,
    pub out: Option<PathBuf>,
}

impl StudyConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(format!("parse error: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Effective configuration as TOML, defaults included.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(w) = o.workers {
            self.execution.workers = Some(w);
        }
        if let Some(s) = o.spacing {
            self.domain.spacing = s;
        }
        if let Some(p) = &o.out {
            self.execution.output_dir = p.clone();
        }
    }

    /// Fills model defaults that depend on the device kind.
    fn inject_defaults(&mut self) {
        for d in &mut self.devices {
            if d.model == ModelKind::Gfl && d.v0.is_none() {
                d.v0 = Some(DEFAULT_V0);
            }
        }
    }

    /// Validates every section and builds the numeric study.
    pub fn build(mut self) -> Result<Study, CliError> {
        self.inject_defaults();
        let topology = self.build_topology()?;
        let models = self.build_models(&topology)?;
        let entries = device_matrix(&models, &topology.device_roles())
            .map_err(|e| invalid("devices", e.to_string()))?;
        let dc = &self.domain;
        let domain = ProhibitedDomain::new(dc.sigma, dc.xi, dc.eps1, dc.eps2, dc.eta1, dc.eta2)
            .map_err(|e| invalid("domain", e.to_string()))?;
        finite_positive("domain.spacing".into(), dc.spacing)?;
        if !(dc.margin_tol >= 0.0 && dc.margin_tol.is_finite()) {
            return Err(invalid("domain.margin_tol", format!("must be finite and >= 0, got {}", dc.margin_tol)));
        }
        let grids = self.build_grids(&models)?;
        let disturbed = self.validate_simulation(&topology)?;
        if self.execution.workers == Some(0) {
            return Err(invalid("execution.workers", "must be >= 1"));
        }
        Ok(Study { config: self, topology, models, entries, domain, grids, disturbed })
    }

    fn build_topology(&self) -> Result<GridTopology, CliError> {
        let t = &self.topology;
        finite_positive("topology.omega0".into(), t.omega0)?;
        let mut names = HashSet::new();
        for (k, n) in t.nodes.iter().enumerate() {
            if !names.insert(n.name.as_str()) {
                return Err(invalid(format!("topology.nodes[{k}].name"), format!("duplicate node '{}'", n.name)));
            }
        }
        let mut b = GridTopology::builder(t.omega0);
        for n in &t.nodes {
            b = match n.kind {
                NodeKindConfig::Gfm => b.device(&n.name, Role::Gfm),
                NodeKindConfig::Gfl => b.device(&n.name, Role::Gfl),
                NodeKindConfig::Interior => b.interior(&n.name),
            };
        }
        for (k, l) in t.lines.iter().enumerate() {
            for end in [&l.from, &l.to] {
                if !names.contains(end.as_str()) {
                    return Err(invalid(format!("topology.lines[{k}]"), format!("unknown node '{end}'")));
                }
            }
            let p = LineParams { l: l.l, rho: l.rho, stiffness: l.stiffness };
            p.validate().map_err(|e| invalid(format!("topology.lines[{k}]"), e.to_string()))?;
            b = b.line(&l.from, &l.to, p);
        }
        b.build().map_err(|e| invalid("topology", e.to_string()))
    }

    fn build_models(&self, topology: &GridTopology) -> Result<Vec<DeviceModel>, CliError> {
        let device_nodes = topology.device_names();
        if device_nodes.len() != self.devices.len() {
            return Err(invalid(
                "devices",
                format!("{} entries for {} device nodes", self.devices.len(), device_nodes.len()),
            ));
        }
        self.devices
            .iter()
            .zip(&device_nodes)
            .enumerate()
            .map(|(k, (d, &node))| {
                let field = format!("devices[{k}]");
                if d.node != node {
                    return Err(invalid(
                        format!("{field}.node"),
                        format!("expected '{node}' (devices must follow the topology's device node order), got '{}'", d.node),
                    ));
                }
                d.model_for(&field)
            })
            .collect()
    }

    fn build_grids(&self, models: &[DeviceModel]) -> Result<Vec<Option<ParameterGrid>>, CliError> {
        self.devices
            .iter()
            .zip(models)
            .enumerate()
            .map(|(k, (d, model))| {
                if d.sweep.is_empty() {
                    return Ok(None);
                }
                let mut axes = Vec::new();
                for (j, a) in d.sweep.iter().enumerate() {
                    let field = format!("devices[{k}].sweep[{j}]");
                    if model.param(&a.name).is_none() {
                        return Err(invalid(
                            format!("{field}.name"),
                            format!("'{}' is not a parameter of this device (expected one of {:?})", a.name, model.param_names()),
                        ));
                    }
                    finite_positive(format!("{field}.min"), a.min)?;
                    finite_positive(format!("{field}.max"), a.max)?;
                    if a.count == 0 || (a.count > 1 && a.min >= a.max) || (a.count == 1 && a.min != a.max) {
                        return Err(invalid(
                            field,
                            format!("needs min < max with count >= 2, or min == max with count 1 (got {}..{} x {})", a.min, a.max, a.count),
                        ));
                    }
                    axes.push(match a.scale {
                        Scale::Linear => Axis::linspace(&a.name, a.min, a.max, a.count),
                        Scale::Log => Axis::logspace(&a.name, a.min, a.max, a.count),
                    });
                }
                ParameterGrid::new(axes)
                    .map(Some)
                    .map_err(|e| invalid(format!("devices[{k}].sweep"), e.to_string()))
            })
            .collect()
    }

    fn validate_simulation(&self, topology: &GridTopology) -> Result<Option<usize>, CliError> {
        let Some(s) = &self.simulation else { return Ok(None) };
        let idx = topology
            .device_names()
            .iter()
            .position(|n| *n == s.device)
            .ok_or_else(|| invalid("simulation.device", format!("'{}' is not a device node", s.device)))?;
        if !s.magnitude.is_finite() {
            return Err(invalid("simulation.magnitude", "must be finite"));
        }
        if !(s.start >= 0.0 && s.start.is_finite()) {
            return Err(invalid("simulation.start", format!("must be >= 0, got {}", s.start)));
        }
        finite_positive("simulation.horizon".into(), s.horizon)?;
        finite_positive("simulation.dt".into(), s.dt)?;
        if !(s.band > 0.0 && s.band < 1.0) {
            return Err(invalid("simulation.band", format!("must lie in (0, 1), got {}", s.band)));
        }
        Ok(Some(idx))
    }
}

impl DeviceConfig {
    fn model_for(&self, field: &str) -> Result<DeviceModel, CliError> {
        let present = |name: &'static str, v: &Option<f64>| v.map(|_| name);
        let given: Vec<&str> = [
            present("m", &self.m),
            present("d", &self.d),
            present("H", &self.h),
            present("D", &self.damping),
            present("Kp", &self.kp),
            present("Ki", &self.ki),
            present("V0", &self.v0),
            self.num.as_ref().map(|_| "num"),
            self.den.as_ref().map(|_| "den"),
        ]
        .into_iter()
        .flatten()
        .collect();
        let allowed: &[&str] = match self.model {
            ModelKind::Gfm => &["m", "d"],
            ModelKind::Gfl => &["H", "D", "Kp", "Ki", "V0"],
            ModelKind::Custom => &["num", "den"],
        };
        if let Some(extra) = given.iter().find(|g| !allowed.contains(g)) {
            return Err(invalid(format!("{field}.{extra}"), format!("not a parameter of a {:?} device", self.model)));
        }
        let need = |name: &str, v: Option<f64>| v.ok_or_else(|| invalid(format!("{field}.{name}"), "missing"));
        let model = match self.model {
            ModelKind::Gfm => DeviceModel::Gfm(GfmParams { m: need("m", self.m)?, d: need("d", self.d)? }),
            ModelKind::Gfl => DeviceModel::Gfl(GflParams {
                h: need("H", self.h)?,
                d: need("D", self.damping)?,
                kp: need("Kp", self.kp)?,
                ki: need("Ki", self.ki)?,
                v0: self.v0.unwrap_or(DEFAULT_V0),
            }),
            ModelKind::Custom => {
                let num = self.num.clone().ok_or_else(|| invalid(format!("{field}.num"), "missing"))?;
                let den = self.den.clone().ok_or_else(|| invalid(format!("{field}.den"), "missing"))?;
                let rf = RationalFunction::new(Polynomial::new(num), Polynomial::new(den))
                    .map_err(|e| invalid(field, e.to_string()))?;
                DeviceModel::Custom(rf)
            }
        };
        model.entry().map_err(|e| invalid(field, e.to_string()))?;
        Ok(model)
    }
}

/// A validated study ready for the commands.
#[derive(Debug, Clone)]
pub struct Study {
    /// Effective configuration (defaults and overrides applied).
    pub config: StudyConfig,
    pub topology: GridTopology,
    pub models: Vec<DeviceModel>,
    pub entries: Vec<DeviceEntry>,
    pub domain: ProhibitedDomain,
    pub grids: Vec<Option<ParameterGrid>>,
    /// Index of the disturbed device when a simulation section is present.
    pub disturbed: Option<usize>,
}

impl Study {
    pub fn device_names(&self) -> Vec<&str> {
        self.topology.device_names()
    }
}
