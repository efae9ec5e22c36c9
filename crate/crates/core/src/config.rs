//! JSON experiment configuration.
//!
//! ```json
//! {
//!   "case_id": "B",
//!   "resistors_ohms": {"r_ha": 1000, "r_la": 200, "r_hb": 220, "r_lb": 160},
//!   "attack": "current_injection",
//!   "injection_factors": [0.01, 0.1, 0.2],
//!   "gammas": [100, 200, 500],
//!   "n_beps": 2000,
//!   "repetitions": 10,
//!   "master_seed": 7,
//!   "defense": {"enabled": false, "epsilon_rel": 1e-6}
//! }
//! ```
//!
//! Every field except `resistors_ohms` has a default.

use std::path::Path;

use serde::Deserialize;

use crate::defense::DEFAULT_EPSILON_REL;
use crate::error::{Error, Result};
use crate::experiment::{CaseSpec, DefenseSpec, SweepSpec, DEFAULT_MASTER_SEED};
use crate::scheme::{solve_vmg_levels, NoiseLevels, ResistorQuad, DEFAULT_BANDWIDTH, DEFAULT_U_LA_RMS};
use crate::wire::AttackKind;

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResistorsOhms {
    pub r_ha: f64,
    pub r_la: f64,
    pub r_hb: f64,
    pub r_lb: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DefenseConfig {
    pub enabled: bool,
    pub epsilon_rel: f64,
}

impl Default for DefenseConfig {
    fn default() -> Self {
        Self {
            enabled: false,
            epsilon_rel: DEFAULT_EPSILON_REL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_case_id")]
    pub case_id: String,
    pub resistors_ohms: ResistorsOhms,
    #[serde(default = "default_u_la")]
    pub u_la_volts: f64,
    #[serde(default = "default_bandwidth")]
    pub bandwidth_hz: f64,
    #[serde(default = "default_attack")]
    pub attack: AttackKind,
    #[serde(default = "default_factors")]
    pub injection_factors: Vec<f64>,
    #[serde(default = "default_gammas")]
    pub gammas: Vec<usize>,
    #[serde(default = "default_n_beps")]
    pub n_beps: usize,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    #[serde(default = "default_seed")]
    pub master_seed: u64,
    #[serde(default)]
    pub defense: DefenseConfig,
}

fn default_case_id() -> String {
    "custom".into()
}
fn default_u_la() -> f64 {
    DEFAULT_U_LA_RMS
}
fn default_bandwidth() -> f64 {
    DEFAULT_BANDWIDTH
}
fn default_attack() -> AttackKind {
    AttackKind::None
}
fn default_factors() -> Vec<f64> {
    SweepSpec::default().injection_factors
}
fn default_gammas() -> Vec<usize> {
    SweepSpec::default().gammas
}
fn default_n_beps() -> usize {
    SweepSpec::default().n_beps
}
fn default_repetitions() -> usize {
    SweepSpec::default().repetitions
}
fn default_seed() -> u64 {
    DEFAULT_MASTER_SEED
}

impl ExperimentConfig {
    pub fn from_json_str(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Configuration(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    pub fn quad(&self) -> Result<ResistorQuad> {
        let r = &self.resistors_ohms;
        ResistorQuad::new(r.r_ha, r.r_la, r.r_hb, r.r_lb)
    }

    pub fn levels(&self) -> Result<NoiseLevels> {
        solve_vmg_levels(&self.quad()?, self.u_la_volts, self.bandwidth_hz)
    }

    pub fn case_spec(&self) -> Result<CaseSpec> {
        CaseSpec::new(
            self.case_id.clone(),
            self.quad()?,
            self.u_la_volts,
            self.bandwidth_hz,
            self.attack,
        )
    }

    pub fn sweep_spec(&self) -> SweepSpec {
        SweepSpec {
            injection_factors: self.injection_factors.clone(),
            gammas: self.gammas.clone(),
            n_beps: self.n_beps,
            repetitions: self.repetitions,
            master_seed: self.master_seed,
            defense: self.defense.enabled.then_some(DefenseSpec {
                epsilon_rel: self.defense.epsilon_rel,
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const CASE_B: &str = r#"{"resistors_ohms": {"r_ha": 1000, "r_la": 200, "r_hb": 220, "r_lb": 160},
                             "attack": "current_injection", "case_id": "B"}"#;

    #[test]
    fn defaults_fill_in() {
        let c = ExperimentConfig::from_json_str(CASE_B).unwrap();
        assert_eq!(c.u_la_volts, 1.0);
        assert_eq!(c.bandwidth_hz, 1000.0);
        assert_eq!(c.sweep_spec(), SweepSpec::default());
        assert_eq!(c.attack, AttackKind::CurrentInjection);
        let t = c.levels().unwrap();
        assert!((t.t_hb / 2.09e16 - 1.0).abs() < 5e-3);
    }

    #[test]
    fn defense_and_overrides() {
        let c = ExperimentConfig::from_json_str(
            r#"{"resistors_ohms": {"r_ha": 2000, "r_la": 500, "r_hb": 2500, "r_lb": 2200},
                "attack": "voltage_insertion", "gammas": [50], "master_seed": 9,
                "defense": {"enabled": true}}"#,
        )
        .unwrap();
        let s = c.sweep_spec();
        assert_eq!(s.gammas, vec![50]);
        assert_eq!(s.master_seed, 9);
        assert_eq!(s.defense, Some(DefenseSpec { epsilon_rel: 1e-6 }));
        assert_eq!(c.case_spec().unwrap().case_id, "custom");
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(ExperimentConfig::from_json_str("{"), Err(Error::Parse(_))));
        assert!(matches!(
            ExperimentConfig::from_json_str(
                r#"{"resistors_ohms": {"r_ha": 1, "r_la": 2, "r_hb": 3, "r_lb": 4}, "bogus": 1}"#
            ),
            Err(Error::Parse(_))
        ));
        assert!(matches!(
            ExperimentConfig::from_json_str(
                r#"{"resistors_ohms": {"r_ha": 1, "r_la": 2, "r_hb": 3, "r_lb": 4}, "attack": "laser"}"#
            ),
            Err(Error::Parse(_))
        ));
        let swapped = ExperimentConfig::from_json_str(
            r#"{"resistors_ohms": {"r_ha": 100, "r_la": 200, "r_hb": 300, "r_lb": 10}}"#,
        )
        .unwrap();
        assert!(matches!(swapped.quad(), Err(Error::InvalidQuad(_))));
        // No attack: levels solve, but a sweep cannot be built.
        let none = ExperimentConfig::from_json_str(
            r#"{"resistors_ohms": {"r_ha": 9000, "r_la": 1000, "r_hb": 9000, "r_lb": 1000}}"#,
        )
        .unwrap();
        assert!(none.levels().is_ok());
        assert!(matches!(none.case_spec(), Err(Error::Configuration(_))));
    }

    #[test]
    fn reads_files() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("b.json");
        std::fs::write(&p, CASE_B).unwrap();
        assert_eq!(ExperimentConfig::from_path(&p).unwrap().case_id, "B");
        assert!(matches!(
            ExperimentConfig::from_path(dir.path().join("missing.json")),
            Err(Error::Configuration(_))
        ));
    }
}
