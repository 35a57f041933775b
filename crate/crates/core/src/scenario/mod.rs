//! Scenario files: layered medium, rock catalog entries, initial and
//! boundary data, grid and output policy, as versioned JSON.

pub mod expr;
mod presets;

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::numflux::NumericalFlux;
use crate::rockphys::{
    build_from_mobilities, CapillaryCurve, KirchhoffMode, MobilityPair, PowerLaw, RockError,
    RockFunctions,
};
use crate::scheme::{
    discretize_initial, BoundaryData, Discretization, LayeredMedium, MediumLayer, Scheme,
    SchemeError, SolverOptions,
};

pub use expr::{Expr, ExprError};
pub use presets::{paper_case_1, paper_case_2, preset, PRESET_NAMES};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("scenario parse error at `{path}`: {message}")]
    Parse { path: String, message: String },
    #[error("invalid scenario field `{field}`: {message}")]
    Validation { field: String, message: String },
}

impl ScenarioError {
    fn invalid(field: impl Into<String>, message: impl Into<String>) -> Self {
        ScenarioError::Validation {
            field: field.into(),
            message: message.into(),
        }
    }
}

/// Capillary pressure family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum CapillarySpec {
    /// `offset + amplitude·u^exponent`.
    PowerLaw {
        offset: f64,
        amplitude: f64,
        exponent: f64,
    },
}

/// Mobility family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum MobilitySpec {
    /// Mobility product `scale·u²(1−u²)/(1−2u+2u²)`.
    RationalShape { scale: f64 },
    /// `μₒ = oil_scale·u^oil_exponent`, `μ_w = water_scale·(1−u)^water_exponent`.
    Corey {
        oil_scale: f64,
        oil_exponent: f64,
        water_scale: f64,
        water_exponent: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RockSpec {
    pub porosity: f64,
    pub capillary: CapillarySpec,
    pub mobility: MobilitySpec,
    /// Total flow rate `q`; shared by all rocks.
    #[serde(default)]
    pub total_rate: f64,
    /// `(ρₒ − ρ_w)·g` in the sign convention of the transport equation.
    #[serde(default)]
    pub gravity_drive: f64,
    #[serde(default)]
    pub kirchhoff: KirchhoffMode,
}

impl RockSpec {
    pub fn build(&self, name: &str) -> Result<RockFunctions, RockError> {
        let CapillarySpec::PowerLaw {
            offset,
            amplitude,
            exponent,
        } = self.capillary;
        let pi = PowerLaw::new(offset, amplitude, exponent)?;
        match self.mobility {
            MobilitySpec::RationalShape { scale } => RockFunctions::rational_shape(
                name,
                scale,
                pi,
                self.porosity,
                self.total_rate,
                self.gravity_drive,
                self.kirchhoff,
            ),
            MobilitySpec::Corey {
                oil_scale,
                oil_exponent,
                water_scale,
                water_exponent,
            } => {
                if !(oil_exponent >= 1.0 && water_exponent >= 1.0) {
                    return Err(RockError::Validation(
                        "Corey exponents must be at least 1 for Lipschitz mobilities".into(),
                    ));
                }
                build_from_mobilities(
                    name,
                    &MobilityPair::corey(oil_scale, oil_exponent, water_scale, water_exponent),
                    CapillaryCurve::PowerLaw(pi),
                    self.porosity,
                    self.total_rate,
                    self.gravity_drive,
                )
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerSpec {
    pub start: f64,
    pub end: f64,
    pub rock: String,
}

/// Initial saturation profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialProfile {
    Constant { value: f64 },
    /// `values[k]` between `breaks[k−1]` and `breaks[k]`, with the domain
    /// ends as outer breaks; `values.len() == breaks.len() + 1`.
    Piecewise { breaks: Vec<f64>, values: Vec<f64> },
    /// Expression in `x` (see [`expr`]).
    Expression { expr: String },
}

impl InitialProfile {
    /// The profile as a function of `x`.
    pub fn function(&self) -> Result<Box<dyn Fn(f64) -> f64 + Send + Sync>, ScenarioError> {
        Ok(match self {
            InitialProfile::Constant { value } => {
                let v = *value;
                Box::new(move |_| v)
            }
            InitialProfile::Piecewise { breaks, values } => {
                let (b, v) = (breaks.clone(), values.clone());
                Box::new(move |x| v[b.partition_point(|&s| s <= x)])
            }
            InitialProfile::Expression { expr } => {
                let e = Expr::parse(expr)
                    .map_err(|e| ScenarioError::invalid("initial.expr", e.to_string()))?;
                Box::new(move |x| e.eval(x))
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscretizationSpec {
    /// Global resolution `N`: `δx = (domain length)/(2N)`.
    pub cells: usize,
    /// Per-layer cell counts, overriding `cells`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layer_cells: Option<Vec<usize>>,
    /// Number of time steps `M`.
    pub steps: usize,
    pub t_final: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Field {
    Saturation,
    CapillaryPressure,
    Flux,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditSpec {
    #[serde(default = "yes")]
    pub enabled: bool,
    /// Record every `thinning`-th step in the history.
    #[serde(default = "one")]
    pub thinning: usize,
}

fn yes() -> bool {
    true
}

fn one() -> usize {
    1
}

impl Default for AuditSpec {
    fn default() -> Self {
        Self {
            enabled: true,
            thinning: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default)]
    pub snapshots: Vec<f64>,
    #[serde(default = "all_fields")]
    pub fields: Vec<Field>,
    #[serde(default)]
    pub audit: AuditSpec,
}

fn all_fields() -> Vec<Field> {
    vec![Field::Saturation, Field::CapillaryPressure, Field::Flux]
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self {
            snapshots: Vec::new(),
            fields: all_fields(),
            audit: AuditSpec::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub version: u32,
    #[serde(default)]
    pub name: String,
    pub domain: [f64; 2],
    pub rocks: BTreeMap<String, RockSpec>,
    pub layers: Vec<LayerSpec>,
    pub initial: InitialProfile,
    pub boundary: BoundaryData,
    pub discretization: DiscretizationSpec,
    #[serde(default)]
    pub outputs: OutputSpec,
    #[serde(default)]
    pub solver: SolverOptions,
}

/// A scenario turned into a ready-to-run scheme.
pub struct Built {
    pub scheme: Scheme,
    pub u0: Vec<f64>,
    /// Step index of each requested snapshot, sorted and deduplicated.
    pub snapshot_steps: Vec<usize>,
}

fn parse_err<E: std::fmt::Display>(e: serde_path_to_error::Error<E>) -> ScenarioError {
    ScenarioError::Parse {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    }
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let s: Scenario = serde_path_to_error::deserialize(de).map_err(parse_err)?;
        s.validate()?;
        Ok(s)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    /// Loads a preset by name, or a JSON file.
    pub fn load(name_or_path: &str) -> Result<Self, ScenarioError> {
        if let Some(s) = preset(name_or_path) {
            return Ok(s);
        }
        Self::load_file(Path::new(name_or_path))
    }

    pub fn load_file(path: &Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn dt(&self) -> f64 {
        let d = &self.discretization;
        if d.steps == 0 {
            0.0
        } else {
            d.t_final / d.steps as f64
        }
    }

    /// Checks everything that can be checked without building rocks.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.version != SCHEMA_VERSION {
            return Err(ScenarioError::invalid(
                "version",
                format!("unsupported schema version {} (expected {SCHEMA_VERSION})", self.version),
            ));
        }
        let [a, b] = self.domain;
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(ScenarioError::invalid("domain", "need finite start < end"));
        }
        if self.layers.is_empty() {
            return Err(ScenarioError::invalid("layers", "at least one layer required"));
        }
        let tol = 1e-12 * (b - a);
        for (k, l) in self.layers.iter().enumerate() {
            let field = format!("layers[{k}]");
            if !self.rocks.contains_key(&l.rock) {
                return Err(ScenarioError::invalid(
                    format!("{field}.rock"),
                    format!("unknown rock '{}'", l.rock),
                ));
            }
            if !(l.start < l.end) {
                return Err(ScenarioError::invalid(field, "layer start must precede its end"));
            }
            let expected = if k == 0 { a } else { self.layers[k - 1].end };
            if (l.start - expected).abs() > tol {
                let what = if k == 0 {
                    "first layer must start at the domain start"
                } else if l.start < expected {
                    "layer overlaps its predecessor"
                } else {
                    "gap between this layer and its predecessor"
                };
                return Err(ScenarioError::invalid(format!("{field}.start"), what));
            }
        }
        if (self.layers.last().unwrap().end - b).abs() > tol {
            return Err(ScenarioError::invalid(
                format!("layers[{}].end", self.layers.len() - 1),
                "last layer must end at the domain end",
            ));
        }
        let mut rates = self.rocks.values().map(|r| r.total_rate);
        let q = rates.next();
        if rates.any(|r| Some(r) != q) {
            return Err(ScenarioError::invalid("rocks", "all rocks must share total_rate"));
        }
        for (name, r) in &self.rocks {
            if !(r.porosity > 0.0 && r.porosity < 1.0) {
                return Err(ScenarioError::invalid(
                    format!("rocks.{name}.porosity"),
                    "porosity must lie in (0, 1)",
                ));
            }
        }
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        match &self.initial {
            InitialProfile::Constant { value } if !unit(*value) => {
                return Err(ScenarioError::invalid("initial.value", "saturation outside [0, 1]"));
            }
            InitialProfile::Piecewise { breaks, values } => {
                if values.len() != breaks.len() + 1 {
                    return Err(ScenarioError::invalid(
                        "initial.values",
                        "need exactly one more value than breaks",
                    ));
                }
                if breaks.windows(2).any(|w| !(w[0] < w[1])) {
                    return Err(ScenarioError::invalid("initial.breaks", "breaks must increase"));
                }
                if !values.iter().all(|v| unit(*v)) {
                    return Err(ScenarioError::invalid(
                        "initial.values",
                        "saturation outside [0, 1]",
                    ));
                }
            }
            InitialProfile::Expression { expr } => {
                Expr::parse(expr)
                    .map_err(|e| ScenarioError::invalid("initial.expr", e.to_string()))?;
            }
            _ => {}
        }
        self.boundary
            .validate()
            .map_err(|e| ScenarioError::invalid("boundary", e.to_string()))?;
        let d = &self.discretization;
        if d.cells == 0 {
            return Err(ScenarioError::invalid("discretization.cells", "must be positive"));
        }
        if let Some(lc) = &d.layer_cells {
            if lc.len() != self.layers.len() || lc.contains(&0) {
                return Err(ScenarioError::invalid(
                    "discretization.layer_cells",
                    "need one positive count per layer",
                ));
            }
        }
        if !(d.t_final.is_finite() && d.t_final >= 0.0) || (d.steps > 0 && !(d.t_final > 0.0)) {
            return Err(ScenarioError::invalid(
                "discretization.t_final",
                "must be positive when steps > 0",
            ));
        }
        self.snapshot_steps()?;
        if self.outputs.audit.thinning == 0 {
            return Err(ScenarioError::invalid("outputs.audit.thinning", "must be positive"));
        }
        Ok(())
    }

    /// Step indices of the snapshot times, which must fall on time levels.
    pub fn snapshot_steps(&self) -> Result<Vec<usize>, ScenarioError> {
        let d = &self.discretization;
        let mut out = Vec::with_capacity(self.outputs.snapshots.len());
        for (k, &t) in self.outputs.snapshots.iter().enumerate() {
            let field = format!("outputs.snapshots[{k}]");
            if !(t >= 0.0 && t <= d.t_final * (1.0 + 1e-12)) {
                return Err(ScenarioError::invalid(field, format!("time {t} outside [0, T]")));
            }
            let n = if d.steps == 0 {
                0.0
            } else {
                (t / self.dt()).round()
            };
            if (n * self.dt() - t).abs() > 1e-9 * d.t_final.max(1.0) {
                return Err(ScenarioError::invalid(
                    field,
                    format!("time {t} is not a multiple of δt = {}", self.dt()),
                ));
            }
            out.push(n as usize);
        }
        out.sort_unstable();
        out.dedup();
        Ok(out)
    }

    /// Builds rocks, medium, grid, boundary data and initial cell averages.
    pub fn build(&self) -> Result<Built, ScenarioError> {
        self.validate()?;
        let mut rocks = BTreeMap::new();
        for (name, spec) in &self.rocks {
            let rock = spec
                .build(name)
                .map_err(|e| ScenarioError::invalid(format!("rocks.{name}"), e.to_string()))?;
            let flux = NumericalFlux::godunov(rock.flux_fn());
            rocks.insert(name.clone(), (Arc::new(rock), Arc::new(flux)));
        }
        let layers = self
            .layers
            .iter()
            .map(|l| {
                let (rock, flux) = &rocks[&l.rock];
                MediumLayer::with_flux(l.start, l.end, rock.clone(), flux.clone())
            })
            .collect();
        let as_invalid = |field: &str| {
            let field = field.to_string();
            move |e: SchemeError| ScenarioError::invalid(field, e.to_string())
        };
        let medium = LayeredMedium::new(layers).map_err(as_invalid("layers"))?;
        let d = &self.discretization;
        let disc = match &d.layer_cells {
            Some(lc) => Discretization::with_layer_cells(&medium, lc.clone(), d.steps, d.t_final),
            None => Discretization::uniform(&medium, d.cells, d.steps, d.t_final),
        }
        .map_err(as_invalid("discretization"))?;
        let u0_fn = self.initial.function()?;
        let u0 = discretize_initial(&*u0_fn, &disc).map_err(as_invalid("initial"))?;
        let scheme = Scheme::new(medium, disc, self.boundary.clone())
            .map_err(as_invalid("boundary"))?
            .with_options(self.solver);
        Ok(Built {
            scheme,
            u0,
            snapshot_steps: self.snapshot_steps()?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_resolve() {
        let s = Scenario::load("paper-case-1").unwrap();
        assert_eq!(s.layers.len(), 3);
        assert!(Scenario::load("paper-case-2").is_ok());
    }

    #[test]
    fn overlapping_layers_rejected() {
        let mut s = paper_case_1();
        s.layers[1].start = 0.45;
        let err = s.validate().unwrap_err();
        assert!(
            matches!(&err, ScenarioError::Validation { field, .. } if field == "layers[1].start"),
            "{err}"
        );
    }

    #[test]
    fn parse_errors_name_the_field() {
        let mut v: serde_json::Value = serde_json::from_str(&paper_case_1().to_json()).unwrap();
        v["rocks"]["sand"]["porosity"] = serde_json::json!("high");
        let err = Scenario::from_json(&v.to_string()).unwrap_err();
        match err {
            ScenarioError::Parse { path, .. } => assert_eq!(path, "rocks.sand.porosity"),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn misaligned_snapshot_rejected() {
        let mut s = paper_case_1();
        s.outputs.snapshots = vec![20.05];
        assert!(s.validate().is_err());
    }

    #[test]
    fn piecewise_initial_profile() {
        let p = InitialProfile::Piecewise {
            breaks: vec![0.5],
            values: vec![0.2, 0.7],
        };
        let f = p.function().unwrap();
        assert_eq!(f(0.1), 0.2);
        assert_eq!(f(0.5), 0.7);
    }
}
