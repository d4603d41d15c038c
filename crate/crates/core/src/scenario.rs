//! Scenario files: TOML schema, dotted-key overrides, validation and hashing.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::controller::{ControllerError, ControllerParams};
use crate::dynamics::{DisturbanceModel, InertiaError, InertiaModel};
use crate::math::{quat_error, Mat3, MathError, UnitQuaternion, Vec3};
use crate::ppc::{BlfParams, EvalFunctionParams, Funnel, PerfFunctionParams, PpcError};
use crate::trigger::{TriggerError, TriggerParams};

/// Largest relative norm error accepted on input quaternions before they are normalized.
pub const INPUT_QUATERNION_SLACK: f64 = 1e-3;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read scenario {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("scenario parse error: {0}")]
    Parse(String),
    #[error("bad override `{key}`: {reason}")]
    Override { key: String, reason: String },
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error(transparent)]
    Ppc(#[from] PpcError),
    #[error(transparent)]
    Controller(#[from] ControllerError),
    #[error(transparent)]
    Trigger(#[from] TriggerError),
    #[error(transparent)]
    Inertia(#[from] InertiaError),
    #[error(transparent)]
    Math(#[from] MathError),
}

/// A value given either once for all axes or per axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AxisValue {
    Shared(f64),
    PerAxis([f64; 3]),
}

impl AxisValue {
    pub fn axis(&self, i: usize) -> f64 {
        match self {
            AxisValue::Shared(v) => *v,
            AxisValue::PerAxis(a) => a[i],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSettings {
    pub dt: f64,
    pub t_end: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "enabled")]
    pub controller_enabled: bool,
}

fn enabled() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttitudeSettings {
    /// Initial body attitude `[x, y, z, w]`.
    pub q_s0: [f64; 4],
    /// Desired attitude `[x, y, z, w]`.
    pub q_d: [f64; 4],
    #[serde(default)]
    pub omega0: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InertiaSettings {
    /// Principal moments (kg·m²).
    pub diagonal: [f64; 3],
    /// Products of inertia `[J_xy, J_xz, J_yz]`.
    #[serde(default)]
    pub products: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunnelSettings {
    pub rho0: AxisValue,
    pub rho_inf: AxisValue,
    pub t_s: AxisValue,
    pub f_s: AxisValue,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluationSettings {
    pub s0: f64,
    pub s_inf: f64,
    /// Decay rate; the turn-off rate `β` when omitted.
    #[serde(default)]
    pub rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSettings {
    /// Young's-inequality split parameter; `K₂` when omitted.
    #[serde(default)]
    pub b: Option<f64>,
    /// Assumed bound on `‖α̇‖`.
    #[serde(default = "default_b_alpha")]
    pub b_alpha: f64,
    /// Assumed bound on `‖α̈‖`.
    #[serde(default = "default_b_2alpha")]
    pub b_2alpha: f64,
    /// Conservative `|q_e0|` floor for a-priori feasibility.
    #[serde(default = "default_q0_floor")]
    pub q0_floor: f64,
    /// Per-axis `|q_ei|` tolerance that defines settling.
    #[serde(default = "default_settle")]
    pub settle_tolerance: f64,
}

fn default_b_alpha() -> f64 {
    0.05
}
fn default_b_2alpha() -> f64 {
    0.5
}
fn default_q0_floor() -> f64 {
    0.5
}
fn default_settle() -> f64 {
    1e-3
}

impl Default for AnalysisSettings {
    fn default() -> Self {
        Self {
            b: None,
            b_alpha: default_b_alpha(),
            b_2alpha: default_b_2alpha(),
            q0_floor: default_q0_floor(),
            settle_tolerance: default_settle(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub simulation: SimulationSettings,
    pub attitude: AttitudeSettings,
    pub inertia: InertiaSettings,
    #[serde(default)]
    pub disturbance: DisturbanceModel,
    pub funnel: FunnelSettings,
    pub blf: BlfParams,
    pub evaluation: EvaluationSettings,
    pub controller: ControllerParams,
    pub trigger: TriggerParams,
    #[serde(default)]
    pub analysis: AnalysisSettings,
}

/// A validated scenario with every derived model object built.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub inertia: InertiaModel,
    pub funnel: Funnel,
    pub eval: EvalFunctionParams,
    /// Initial error quaternion with non-negative scalar part.
    pub q_e0: UnitQuaternion,
    pub omega0: Vec3,
    /// Young's-inequality parameter actually used.
    pub b: f64,
    pub hash: String,
}

/// Parses a scenario document and applies `key=value` overrides on dotted paths.
pub fn parse_scenario(text: &str, overrides: &[String]) -> Result<ScenarioConfig, ScenarioError> {
    let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| ScenarioError::Parse(e.to_string()))?;
    for ov in overrides {
        apply_override(&mut table, ov)?;
    }
    toml::Value::Table(table).try_into().map_err(|e: toml::de::Error| ScenarioError::Parse(e.to_string()))
}

pub fn load_scenario(path: &Path, overrides: &[String]) -> Result<ScenarioConfig, ScenarioError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| ScenarioError::Io { path: path.display().to_string(), source })?;
    parse_scenario(&text, overrides)
}

fn parse_override_value(raw: &str) -> toml::Value {
    let doc = format!("v = {raw}");
    match doc.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.to_string())),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

/// Applies one `dotted.key=value` assignment. The target key must already exist
/// unless its parent table is present.
pub fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<(), ScenarioError> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| ScenarioError::Override { key: assignment.to_string(), reason: "expected key=value".into() })?;
    let key = key.trim();
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(ScenarioError::Override { key: key.into(), reason: "empty path segment".into() });
    }
    let mut cur = table;
    for seg in &parts[..parts.len() - 1] {
        let entry = cur.entry(seg.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| ScenarioError::Override { key: key.into(), reason: format!("`{seg}` is not a table") })?;
    }
    let mut value = parse_override_value(raw.trim());
    let leaf = parts[parts.len() - 1];
    if let (Some(old), toml::Value::Integer(i)) = (cur.get(leaf), &value) {
        if old.is_float() {
            value = toml::Value::Float(*i as f64);
        }
    }
    cur.insert(leaf.to_string(), value);
    Ok(())
}

fn unit_input(name: &str, xyzw: [f64; 4]) -> Result<UnitQuaternion, ScenarioError> {
    let n = xyzw.iter().map(|c| c * c).sum::<f64>().sqrt();
    if !n.is_finite() || (n - 1.0).abs() > INPUT_QUATERNION_SLACK {
        return Err(ScenarioError::Invalid(format!("{name} has norm {n}, not a unit quaternion")));
    }
    Ok(UnitQuaternion::normalize_from(xyzw)?)
}

impl ScenarioConfig {
    /// SHA-256 over the canonical JSON rendering of the resolved configuration.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("scenario serializes");
        let digest = Sha256::digest(&json);
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn funnel(&self) -> Funnel {
        let f = &self.funnel;
        Funnel {
            axes: std::array::from_fn(|i| PerfFunctionParams {
                rho0: f.rho0.axis(i),
                rho_inf: f.rho_inf.axis(i),
                t_s: f.t_s.axis(i),
                f_s: f.f_s.axis(i),
            }),
        }
    }

    pub fn eval_params(&self) -> EvalFunctionParams {
        EvalFunctionParams {
            s0: self.evaluation.s0,
            s_inf: self.evaluation.s_inf,
            rate: self.evaluation.rate.unwrap_or(self.trigger.beta),
        }
    }

    pub fn resolve(self) -> Result<Scenario, ScenarioError> {
        let sim = &self.simulation;
        if !(sim.dt.is_finite() && sim.dt > 0.0) {
            return Err(ScenarioError::Invalid(format!("dt = {} must be positive", sim.dt)));
        }
        if !(sim.t_end.is_finite() && sim.t_end > sim.dt) {
            return Err(ScenarioError::Invalid(format!("t_end = {} must exceed dt", sim.t_end)));
        }
        let funnel = self.funnel();
        funnel.validate()?;
        self.blf.validate()?;
        let eval = self.eval_params();
        eval.validate()?;
        self.controller.validate()?;
        self.trigger.validate()?;
        let a = &self.analysis;
        for (name, v) in [
            ("analysis.b_alpha", a.b_alpha),
            ("analysis.b_2alpha", a.b_2alpha),
            ("analysis.q0_floor", a.q0_floor),
            ("analysis.settle_tolerance", a.settle_tolerance),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(ScenarioError::Invalid(format!("{name} = {v} must be positive")));
            }
        }
        let b = a.b.unwrap_or(self.controller.k2);
        if !(b.is_finite() && b >= 0.0) {
            return Err(ScenarioError::Invalid(format!("analysis.b = {b} must be non-negative")));
        }
        if !self.attitude.omega0.iter().all(|w| w.is_finite()) {
            return Err(ScenarioError::Invalid("omega0 must be finite".into()));
        }

        let d = self.inertia.diagonal;
        let [pxy, pxz, pyz] = self.inertia.products;
        let inertia = InertiaModel::new(Mat3::from_rows([[d[0], pxy, pxz], [pxy, d[1], pyz], [pxz, pyz, d[2]]]))?;

        let q_s = unit_input("attitude.q_s0", self.attitude.q_s0)?;
        let q_d = unit_input("attitude.q_d", self.attitude.q_d)?;
        let mut q_e0 = quat_error(q_s, q_d)?;
        if q_e0.s < 0.0 {
            q_e0 = q_e0.negated();
        }
        let omega0 = Vec3::from_array(self.attitude.omega0);
        let hash = self.hash();
        Ok(Scenario { inertia, funnel, eval, q_e0, omega0, b, hash, config: self })
    }
}

/// The bundled reorientation scenario.
pub const BUNDLED_SCENARIO: &str = include_str!("../../../scenarios/paper_vi.scenario");

pub fn default_scenario() -> Scenario {
    parse_scenario(BUNDLED_SCENARIO, &[]).and_then(ScenarioConfig::resolve).expect("bundled scenario is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_scenario_resolves() {
        let s = default_scenario();
        assert!(s.q_e0.s > 0.0);
        assert_eq!(s.inertia.lambda_max(), 2.8);
        assert_eq!(s.hash.len(), 64);
    }

    #[test]
    fn overrides_reach_nested_fields() {
        let cfg = parse_scenario(
            BUNDLED_SCENARIO,
            &["controller.k2=2".into(), "funnel.rho0=[0.5, 0.4, 0.3]".into(), "simulation.t_end=5".into()],
        )
        .unwrap();
        assert_eq!(cfg.controller.k2, 2.0);
        assert_eq!(cfg.funnel.rho0, AxisValue::PerAxis([0.5, 0.4, 0.3]));
        assert_eq!(cfg.simulation.t_end, 5.0);
    }

    #[test]
    fn bad_overrides_rejected() {
        assert!(parse_scenario(BUNDLED_SCENARIO, &["controller.k2".into()]).is_err());
        assert!(parse_scenario(BUNDLED_SCENARIO, &["controller.nope=1".into()]).is_err());
        assert!(parse_scenario(BUNDLED_SCENARIO, &["controller..k2=1".into()]).is_err());
    }

    #[test]
    fn hash_tracks_content() {
        let a = parse_scenario(BUNDLED_SCENARIO, &[]).unwrap();
        let b = parse_scenario(BUNDLED_SCENARIO, &["trigger.m=2e-6".into()]).unwrap();
        assert_eq!(a.hash(), a.clone().hash());
        assert_ne!(a.hash(), b.hash());
    }

    #[test]
    fn invalid_values_rejected() {
        for ov in ["simulation.dt=0.0", "controller.p=0.0", "trigger.beta=-1.0", "inertia.diagonal=[1.0, -1.0, 1.0]"] {
            let cfg = parse_scenario(BUNDLED_SCENARIO, &[ov.into()]).unwrap();
            assert!(cfg.resolve().is_err(), "{ov}");
        }
    }
}
