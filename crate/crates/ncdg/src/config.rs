//! Run configuration: TOML key-value text with one section per mesh, region,
//! boundary and probe, plus dotted-path overrides. Every run writes its
//! resolved configuration next to its outputs.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::material::{BoundaryCondition, Material, PressureData, VelocityData};
use crate::nci::CouplingScheme;
use crate::time::RkScheme;

/// Environment variable overriding `output_dir`.
pub const OUTPUT_DIR_ENV: &str = "NCDG_OUTPUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    Solve,
    MembraneConvergence,
    Instability,
    Overlap,
    Heterogeneous,
    ConformingCheck,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: Scenario,
    #[serde(default = "d_degree")]
    pub degree: usize,
    #[serde(default = "d_courant")]
    pub courant: f64,
    #[serde(default = "d_end_time")]
    pub end_time: f64,
    /// Time integrator: "rkc84" or "rk4".
    #[serde(default = "d_scheme")]
    pub scheme: String,
    /// NCI coupling: "mortar" or "p2p".
    #[serde(default = "d_coupling")]
    pub coupling: String,
    /// Worker threads; 1 guarantees bit-reproducible output.
    #[serde(default = "d_threads")]
    pub threads: usize,
    /// Diagnostics every N steps.
    #[serde(default = "d_cadence")]
    pub cadence: usize,
    #[serde(default = "d_output_dir")]
    pub output_dir: PathBuf,
    /// Vibrating-membrane mode count M where applicable.
    #[serde(default = "d_modes")]
    pub modes: usize,
    /// Uniform refinement level r applied to the base mesh.
    #[serde(default)]
    pub refinement: usize,
    /// Initial condition for the generic solve scenario:
    /// "membrane" | "pulse" | "zero".
    #[serde(default = "d_init")]
    pub init: String,
    pub mesh: MeshConfig,
    #[serde(default)]
    pub region: Vec<RegionConfig>,
    #[serde(default)]
    pub boundary: Vec<BoundaryConfig>,
    #[serde(default)]
    pub probe: Vec<ProbeConfig>,
    #[serde(default)]
    pub convergence: ConvergenceConfig,
    #[serde(default)]
    pub instability: InstabilityConfig,
    #[serde(default)]
    pub overlap_study: OverlapStudyConfig,
    #[serde(default)]
    pub heterogeneous: HeterogeneousConfig,
    #[serde(default)]
    pub pulse: PulseConfig,
}

fn d_degree() -> usize {
    3
}
fn d_courant() -> f64 {
    0.2
}
fn d_end_time() -> f64 {
    1.0
}
fn d_scheme() -> String {
    "rkc84".into()
}
fn d_coupling() -> String {
    "mortar".into()
}
fn d_threads() -> usize {
    1
}
fn d_cadence() -> usize {
    10
}
fn d_output_dir() -> PathBuf {
    PathBuf::from("out")
}
fn d_modes() -> usize {
    120
}
fn d_init() -> String {
    "membrane".into()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshConfig {
    /// "rect" | "embedded-rect" | "overlap" | "overset" | "split"
    pub kind: String,
    #[serde(default = "d_min")]
    pub min: [f64; 2],
    #[serde(default = "d_max")]
    pub max: [f64; 2],
    #[serde(default)]
    pub hole_min: Option<[f64; 2]>,
    #[serde(default)]
    pub hole_max: Option<[f64; 2]>,
    #[serde(default)]
    pub h: Option<f64>,
    #[serde(default)]
    pub h_outer: Option<f64>,
    #[serde(default)]
    pub h_inner: Option<f64>,
    #[serde(default)]
    pub split_x: Option<f64>,
    #[serde(default)]
    pub h_left: Option<f64>,
    #[serde(default)]
    pub h_right: Option<f64>,
    #[serde(default)]
    pub radius: Option<f64>,
    #[serde(default)]
    pub overlap_depth: Option<f64>,
    #[serde(default = "d_disc_core")]
    pub disc_core: usize,
    #[serde(default = "d_disc_layers")]
    pub disc_layers: usize,
    #[serde(default = "d_ring_sectors")]
    pub ring_sectors: usize,
    #[serde(default = "d_ring_layers")]
    pub ring_layers: usize,
    #[serde(default = "d_grid_n")]
    pub grid_n: usize,
}

fn d_min() -> [f64; 2] {
    [0.0, 0.0]
}
fn d_max() -> [f64; 2] {
    [0.1, 0.1]
}
fn d_disc_core() -> usize {
    6
}
fn d_disc_layers() -> usize {
    3
}
fn d_ring_sectors() -> usize {
    32
}
fn d_ring_layers() -> usize {
    2
}
fn d_grid_n() -> usize {
    12
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionConfig {
    pub id: usize,
    #[serde(default = "d_one")]
    pub rho: f64,
    #[serde(default = "d_one")]
    pub c: f64,
}

fn d_one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundaryConfig {
    /// Side tag ("left", "right", "bottom", "top") or "all".
    pub tag: String,
    /// "pressure" | "velocity" | "admittance"
    pub kind: String,
    /// For Dirichlet kinds: "zero" | "constant" | "membrane".
    #[serde(default = "d_data_zero")]
    pub data: String,
    /// Constant pressure value or velocity x-component.
    #[serde(default)]
    pub value: f64,
    #[serde(default)]
    pub value_y: f64,
    /// Admittance Y for kind = "admittance".
    #[serde(default)]
    pub admittance: f64,
}

fn d_data_zero() -> String {
    "zero".into()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeConfig {
    pub start: [f64; 2],
    pub end: [f64; 2],
    pub count: usize,
}

impl ProbeConfig {
    pub fn points(&self) -> Vec<[f64; 2]> {
        let n = self.count.max(2);
        (0..n)
            .map(|i| {
                let t = i as f64 / (n - 1) as f64;
                [
                    self.start[0] + t * (self.end[0] - self.start[0]),
                    self.start[1] + t * (self.end[1] - self.start[1]),
                ]
            })
            .collect()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceConfig {
    #[serde(default = "d_conv_degrees")]
    pub degrees: Vec<usize>,
    #[serde(default = "d_conv_refinements")]
    pub refinements: Vec<usize>,
}

impl Default for ConvergenceConfig {
    fn default() -> Self {
        Self { degrees: d_conv_degrees(), refinements: d_conv_refinements() }
    }
}

fn d_conv_degrees() -> Vec<usize> {
    vec![1, 2, 3]
}
fn d_conv_refinements() -> Vec<usize> {
    vec![0, 1, 2, 3]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstabilityConfig {
    #[serde(default = "d_inst_mortar")]
    pub mortar_degrees: Vec<usize>,
    #[serde(default = "d_inst_p2p")]
    pub p2p_degrees: Vec<usize>,
    /// Simulated horizon in seconds.
    #[serde(default = "d_inst_horizon")]
    pub horizon: f64,
    /// Energy ratio E/E0 that counts as blow-up and stops a run.
    #[serde(default = "d_inst_stop")]
    pub stop_ratio: f64,
}

impl Default for InstabilityConfig {
    fn default() -> Self {
        Self {
            mortar_degrees: d_inst_mortar(),
            p2p_degrees: d_inst_p2p(),
            horizon: d_inst_horizon(),
            stop_ratio: d_inst_stop(),
        }
    }
}

fn d_inst_mortar() -> Vec<usize> {
    vec![3]
}
fn d_inst_p2p() -> Vec<usize> {
    vec![2, 3, 4, 5]
}
fn d_inst_horizon() -> f64 {
    2.0
}
fn d_inst_stop() -> f64 {
    100.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OverlapStudyConfig {
    #[serde(default = "d_ov_degrees")]
    pub degrees: Vec<usize>,
}

impl Default for OverlapStudyConfig {
    fn default() -> Self {
        Self { degrees: d_ov_degrees() }
    }
}

fn d_ov_degrees() -> Vec<usize> {
    vec![1, 2, 3, 4]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeterogeneousConfig {
    /// Also run the uniform-fine and uniform-coarse references.
    #[serde(default = "d_true")]
    pub run_references: bool,
    /// Also run the planar-pulse reflection/transmission measurement.
    #[serde(default = "d_true")]
    pub rt_check: bool,
    /// Gaussian width of the planar pulse used by the R/T measurement.
    #[serde(default = "d_rt_width")]
    pub rt_width: f64,
    /// Planar-pulse center offset from the interface.
    #[serde(default = "d_rt_offset")]
    pub rt_offset: f64,
    #[serde(default = "d_rt_end_time")]
    pub rt_end_time: f64,
}

impl Default for HeterogeneousConfig {
    fn default() -> Self {
        Self {
            run_references: d_true(),
            rt_check: d_true(),
            rt_width: d_rt_width(),
            rt_offset: d_rt_offset(),
            rt_end_time: d_rt_end_time(),
        }
    }
}

fn d_true() -> bool {
    true
}
fn d_rt_width() -> f64 {
    2.5e3
}
fn d_rt_offset() -> f64 {
    0.25
}
fn d_rt_end_time() -> f64 {
    0.45
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseConfig {
    #[serde(default)]
    pub center: [f64; 2],
    /// p(t=0) = exp(-width * |x - center|^2)
    #[serde(default = "d_pulse_width")]
    pub width: f64,
    /// Planar pulse (x1-dependence only) instead of the radial one.
    #[serde(default)]
    pub planar: bool,
}

impl Default for PulseConfig {
    fn default() -> Self {
        Self { center: [0.0, 0.0], width: d_pulse_width(), planar: false }
    }
}

fn d_pulse_width() -> f64 {
    1e4
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig =
            toml::from_str(text).map_err(|e| Error::Config(format!("config parse: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(format!("config serialize: {e}")))
    }

    /// Apply dotted-path `key=value` overrides onto the TOML representation
    /// and re-parse, so overrides share the validation path.
    pub fn with_overrides(&self, overrides: &[String]) -> Result<Self> {
        if overrides.is_empty() {
            let mut cfg = self.clone();
            cfg.apply_env();
            return Ok(cfg);
        }
        let text = self.to_toml_string()?;
        let mut value: toml::Value =
            toml::from_str(&text).map_err(|e| Error::Config(e.to_string()))?;
        for ov in overrides {
            let (key, raw) = ov
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("override '{ov}' is not key=value")))?;
            let parsed: toml::Value = match raw.parse::<i64>() {
                Ok(i) => toml::Value::Integer(i),
                Err(_) => match raw.parse::<f64>() {
                    Ok(f) => toml::Value::Float(f),
                    Err(_) => match raw {
                        "true" => toml::Value::Boolean(true),
                        "false" => toml::Value::Boolean(false),
                        s if s.starts_with('[') => toml::from_str::<toml::Value>(&format!(
                            "v = {s}"
                        ))
                        .map_err(|e| Error::Config(format!("override '{ov}': {e}")))?
                        .get("v")
                        .cloned()
                        .unwrap(),
                        s => toml::Value::String(s.to_string()),
                    },
                },
            };
            let mut node = &mut value;
            let parts: Vec<&str> = key.split('.').collect();
            for part in &parts[..parts.len() - 1] {
                node = node
                    .as_table_mut()
                    .ok_or_else(|| Error::Config(format!("override path '{key}' invalid")))?
                    .entry(part.to_string())
                    .or_insert(toml::Value::Table(Default::default()));
            }
            node.as_table_mut()
                .ok_or_else(|| Error::Config(format!("override path '{key}' invalid")))?
                .insert(parts[parts.len() - 1].to_string(), parsed);
        }
        let mut cfg: RunConfig = value
            .try_into()
            .map_err(|e| Error::Config(format!("override produced invalid config: {e}")))?;
        cfg.validate()?;
        cfg.apply_env();
        Ok(cfg)
    }

    fn apply_env(&mut self) {
        if let Ok(dir) = std::env::var(OUTPUT_DIR_ENV) {
            if !dir.is_empty() {
                self.output_dir = PathBuf::from(dir);
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.degree < 1 {
            return Err(Error::Config("degree must be >= 1".into()));
        }
        if self.end_time <= 0.0 {
            return Err(Error::Config("end_time must be positive".into()));
        }
        if self.cadence < 1 {
            return Err(Error::Config("cadence must be >= 1".into()));
        }
        if self.threads < 1 {
            return Err(Error::Config("threads must be >= 1".into()));
        }
        match self.init.as_str() {
            "membrane" | "pulse" | "zero" => {}
            other => return Err(Error::Config(format!("unknown init '{other}'"))),
        }
        self.rk_scheme()?;
        self.coupling_scheme()?;
        for b in &self.boundary {
            match b.kind.as_str() {
                "pressure" | "velocity" | "admittance" => {}
                other => {
                    return Err(Error::Config(format!("unknown boundary kind '{other}'")));
                }
            }
            match b.data.as_str() {
                "zero" | "constant" | "membrane" => {}
                other => {
                    return Err(Error::Config(format!("unknown boundary data '{other}'")));
                }
            }
        }
        for r in &self.region {
            Material::new(r.rho, r.c)?;
        }
        Ok(())
    }

    pub fn rk_scheme(&self) -> Result<RkScheme> {
        RkScheme::from_str(&self.scheme)
    }

    pub fn coupling_scheme(&self) -> Result<CouplingScheme> {
        match self.coupling.as_str() {
            "mortar" => Ok(CouplingScheme::Mortaring),
            "p2p" => Ok(CouplingScheme::PointToPoint),
            other => Err(Error::Config(format!("unknown coupling '{other}' (mortar | p2p)"))),
        }
    }

    /// Material of a region id, defaulting to rho = c = 1.
    pub fn material(&self, id: usize) -> Result<Material> {
        for r in &self.region {
            if r.id == id {
                return Material::new(r.rho, r.c);
            }
        }
        Material::new(1.0, 1.0)
    }

    /// Expand the boundary table into per-tag conditions.
    pub fn boundary_conditions(
        &self,
        tag_names: &[String],
    ) -> Result<std::collections::HashMap<String, BoundaryCondition>> {
        let mut out = std::collections::HashMap::new();
        for b in &self.boundary {
            let cond = match b.kind.as_str() {
                "pressure" => BoundaryCondition::PressureDirichlet(match b.data.as_str() {
                    "zero" => PressureData::Zero,
                    "constant" => PressureData::Constant(b.value),
                    "membrane" => PressureData::Membrane { modes: self.modes },
                    _ => unreachable!("validated"),
                }),
                "velocity" => BoundaryCondition::VelocityDirichlet(match b.data.as_str() {
                    "zero" => VelocityData::Zero,
                    "constant" => VelocityData::Constant([b.value, b.value_y]),
                    "membrane" => VelocityData::Membrane { modes: self.modes },
                    _ => unreachable!("validated"),
                }),
                "admittance" => BoundaryCondition::Admittance(b.admittance),
                _ => unreachable!("validated"),
            };
            if b.tag == "all" {
                for t in tag_names {
                    out.insert(t.clone(), cond.clone());
                }
            } else {
                if !tag_names.contains(&b.tag) {
                    return Err(Error::Config(format!(
                        "boundary tag '{}' does not exist on this mesh (tags: {tag_names:?})",
                        b.tag
                    )));
                }
                out.insert(b.tag.clone(), cond.clone());
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal() -> &'static str {
        r#"
scenario = "solve"
degree = 2
end_time = 0.1

[mesh]
kind = "rect"
max = [1.0, 1.0]
h = 0.25

[[boundary]]
tag = "all"
kind = "pressure"
"#
    }

    #[test]
    fn parse_serialize_round_trip() {
        let cfg = RunConfig::from_toml_str(minimal()).unwrap();
        let text = cfg.to_toml_string().unwrap();
        let cfg2 = RunConfig::from_toml_str(&text).unwrap();
        let text2 = cfg2.to_toml_string().unwrap();
        assert_eq!(text, text2);
        assert_eq!(cfg.degree, 2);
        assert_eq!(cfg.coupling_scheme().unwrap(), CouplingScheme::Mortaring);
    }

    #[test]
    fn overrides_apply_by_dotted_path() {
        let cfg = RunConfig::from_toml_str(minimal()).unwrap();
        let cfg2 = cfg
            .with_overrides(&[
                "degree=4".to_string(),
                "mesh.h=0.125".to_string(),
                "coupling=p2p".to_string(),
            ])
            .unwrap();
        assert_eq!(cfg2.degree, 4);
        assert_eq!(cfg2.mesh.h, Some(0.125));
        assert_eq!(cfg2.coupling_scheme().unwrap(), CouplingScheme::PointToPoint);
    }

    #[test]
    fn invalid_values_rejected() {
        let cfg = RunConfig::from_toml_str(minimal()).unwrap();
        assert!(cfg.with_overrides(&["degree=0".into()]).is_err());
        assert!(cfg.with_overrides(&["scheme=euler".into()]).is_err());
        assert!(cfg.with_overrides(&["coupling=magic".into()]).is_err());
        assert!(RunConfig::from_toml_str("scenario = \"solve\"").is_err());
    }

    #[test]
    fn unknown_keys_rejected() {
        let bad = format!("{}\nnot_a_key = 1\n", minimal());
        assert!(RunConfig::from_toml_str(&bad).is_err());
    }
}
