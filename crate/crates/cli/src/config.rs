//! Scenario documents: JSON, units in field names, angles in degrees.

use serde::{Deserialize, Serialize};
use tfqkd_core::diagnostics::SnsSourceSetting;
use tfqkd_core::event_sim::DEFAULT_MATCH_BINS;
use tfqkd_core::planner::{ChannelSplit, NetworkNode, NetworkScenario, OptimizerOptions};
use tfqkd_core::{LinkGeometry, MxForm, SourceSetting, SystemParams};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed scenario: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("{0}")]
    Invalid(String),
}

fn invalid<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError::Invalid(msg.into()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDocument {
    pub schema_version: u32,
    #[serde(default)]
    pub system: SystemBlock,
    #[serde(default)]
    pub nodes: Vec<NodeBlock>,
    #[serde(default)]
    pub anchors: Vec<(String, String)>,
    #[serde(default)]
    pub optimizer: OptimizerBlock,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan: Option<ScanBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub montecarlo: Option<MonteCarloBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sns: Option<SnsBlock>,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SystemBlock {
    pub detector_efficiency: f64,
    pub dark_count_probability: f64,
    pub alpha_db_per_km: f64,
    pub z_misalignment_rate: f64,
    pub error_correction_efficiency: f64,
    pub rounds: f64,
    pub sigma_deg: f64,
    /// Fixed slice half-width for single-link commands (optimized when
    /// absent); only a starting point for scans and networks.
    pub delta_deg: Option<f64>,
    pub epsilon: f64,
}

impl Default for SystemBlock {
    fn default() -> Self {
        let r = SystemParams::reference(1e11, 5f64.to_radians(), 0.1);
        SystemBlock {
            detector_efficiency: r.eta_d,
            dark_count_probability: r.p_d,
            alpha_db_per_km: r.alpha_db_per_km,
            z_misalignment_rate: r.e_d_z,
            error_correction_efficiency: r.f_ec,
            rounds: r.n_rounds,
            sigma_deg: 5.0,
            delta_deg: None,
            epsilon: r.eps,
        }
    }
}

/// Slice half-width used to seed optimization when none is fixed.
const START_DELTA_DEG: f64 = 7.0;

impl SystemBlock {
    pub fn params(&self) -> Result<SystemParams, ConfigError> {
        let p = SystemParams {
            eta_d: self.detector_efficiency,
            p_d: self.dark_count_probability,
            alpha_db_per_km: self.alpha_db_per_km,
            e_d_z: self.z_misalignment_rate,
            f_ec: self.error_correction_efficiency,
            n_rounds: self.rounds,
            sigma: self.sigma_deg.to_radians(),
            delta: self.delta_deg.unwrap_or(START_DELTA_DEG).to_radians(),
            eps: self.epsilon,
        };
        p.validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(p)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeBlock {
    pub name: String,
    pub distance_km: f64,
    pub mu: f64,
    pub nu: f64,
    pub p_mu: f64,
    pub p_nu: f64,
    pub p_o: f64,
    pub p_ohat: f64,
}

impl NodeBlock {
    pub fn node(&self) -> NetworkNode {
        NetworkNode {
            name: self.name.clone(),
            distance_km: self.distance_km,
            setting: SourceSetting {
                mu: self.mu,
                nu: self.nu,
                p_mu: self.p_mu,
                p_nu: self.p_nu,
                p_o: self.p_o,
                p_ohat: self.p_ohat,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MxFormName {
    FirstPrinciples,
    Printed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerBlock {
    pub starts: usize,
    pub rel_tol: f64,
    pub max_evals: usize,
    pub mx_form: MxFormName,
}

impl Default for OptimizerBlock {
    fn default() -> Self {
        let o = OptimizerOptions::default();
        OptimizerBlock {
            starts: o.starts,
            rel_tol: o.rel_tol,
            max_evals: o.max_evals,
            mx_form: MxFormName::FirstPrinciples,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanBlock {
    /// Fixed `l_b - l_a`; zero or absent means a symmetric channel.
    #[serde(default)]
    pub arm_offset_km: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_km: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start_km: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop_km: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step_km: Option<f64>,
}

impl ScanBlock {
    pub fn split(&self) -> ChannelSplit {
        if self.arm_offset_km == 0.0 {
            ChannelSplit::Symmetric
        } else {
            ChannelSplit::Offset(self.arm_offset_km)
        }
    }

    pub fn grid(&self) -> Result<Vec<f64>, ConfigError> {
        let grid = match (&self.grid_km, self.start_km, self.stop_km, self.step_km) {
            (Some(g), None, None, None) => g.clone(),
            (None, Some(a), Some(b), Some(h)) => {
                if !(h > 0.0 && b >= a) {
                    return invalid("scan: need step_km > 0 and stop_km >= start_km");
                }
                let n = ((b - a) / h + 1e-9).floor() as usize;
                (0..=n).map(|i| a + h * i as f64).collect()
            }
            _ => return invalid("scan: give either grid_km or start_km/stop_km/step_km"),
        };
        if grid.is_empty() {
            return invalid("scan: empty grid");
        }
        if grid
            .iter()
            .any(|&l| !(l.is_finite() && l >= self.arm_offset_km.abs()))
        {
            return invalid("scan: every distance must be finite and at least the arm offset");
        }
        if self.arm_offset_km < 0.0 {
            return invalid("scan: arm_offset_km must be >= 0");
        }
        Ok(grid)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonteCarloBlock {
    pub rounds: u64,
    #[serde(default = "default_match_bins")]
    pub match_bins: u32,
}

fn default_match_bins() -> u32 {
    DEFAULT_MATCH_BINS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnsBlock {
    pub mu_a: f64,
    pub mu_b: f64,
    pub nu_a: f64,
    pub nu_b: f64,
    pub t_a: f64,
    pub t_b: f64,
    pub l_a_km: f64,
    pub l_b_km: f64,
    /// Single-photon X-basis error rate for the phase-error bound.
    #[serde(default)]
    pub x_error_rate: f64,
}

impl SnsBlock {
    pub fn setting(&self) -> SnsSourceSetting {
        SnsSourceSetting {
            mu_a: self.mu_a,
            mu_b: self.mu_b,
            nu_a: self.nu_a,
            nu_b: self.nu_b,
            t_a: self.t_a,
            t_b: self.t_b,
        }
    }

    pub fn geometry(&self) -> Result<LinkGeometry, ConfigError> {
        if !(self.l_a_km >= 0.0 && self.l_b_km >= 0.0) {
            return invalid("sns: arm lengths must be >= 0");
        }
        Ok(LinkGeometry::new(self.l_a_km, self.l_b_km))
    }
}

impl ScenarioDocument {
    pub fn load(path: &str) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let doc: ScenarioDocument = serde_json::from_str(text)?;
        if doc.schema_version != SCHEMA_VERSION {
            return invalid(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                doc.schema_version
            ));
        }
        doc.system.params()?;
        if let Some(d) = doc.system.delta_deg {
            if !(d > 0.0 && d <= 90.0) {
                return invalid(format!("delta_deg = {d} not in (0, 90]"));
            }
        }
        doc.network()?;
        let o = &doc.optimizer;
        if o.starts == 0 || o.max_evals == 0 || !(o.rel_tol > 0.0) {
            return invalid("optimizer: starts, max_evals and rel_tol must be positive");
        }
        Ok(doc)
    }

    pub fn network(&self) -> Result<NetworkScenario, ConfigError> {
        let scn = NetworkScenario {
            nodes: self.nodes.iter().map(NodeBlock::node).collect(),
            anchors: self.anchors.clone(),
            params: self.system.params()?,
        };
        scn.validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(scn)
    }

    pub fn optimizer_options(&self, mode: tfqkd_core::Mode) -> OptimizerOptions {
        OptimizerOptions {
            starts: self.optimizer.starts,
            seed: self.seed,
            rel_tol: self.optimizer.rel_tol,
            max_evals: self.optimizer.max_evals,
            mode,
            mx_form: match self.optimizer.mx_form {
                MxFormName::FirstPrinciples => MxForm::FirstPrinciples,
                MxFormName::Printed => MxForm::PrintedClosedForm,
            },
            ..OptimizerOptions::default()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_document_gets_defaults() {
        let doc = ScenarioDocument::parse(r#"{"schema_version": 1}"#).unwrap();
        let p = doc.system.params().unwrap();
        assert_eq!(p.eta_d, 0.7);
        assert!((p.sigma - 5f64.to_radians()).abs() < 1e-15);
        assert_eq!(doc.optimizer.starts, 16);
    }

    #[test]
    fn unknown_fields_rejected() {
        assert!(ScenarioDocument::parse(r#"{"schema_version": 1, "bogus": 3}"#).is_err());
        let bad = r#"{"schema_version": 1, "system": {"alpha": 0.2}}"#;
        assert!(ScenarioDocument::parse(bad).is_err());
        assert!(ScenarioDocument::parse(r#"{"schema_version": 2}"#).is_err());
    }

    #[test]
    fn scan_grid_from_range() {
        let s = ScanBlock {
            arm_offset_km: 0.0,
            grid_km: None,
            start_km: Some(100.0),
            stop_km: Some(200.0),
            step_km: Some(25.0),
        };
        assert_eq!(s.grid().unwrap(), vec![100.0, 125.0, 150.0, 175.0, 200.0]);
    }
}
