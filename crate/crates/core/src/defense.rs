//! End-to-end amplitude comparison by Alice and Bob.
//!
//! Both parties record the instantaneous current and voltage at their end
//! and exchange them over an authenticated channel (modelled as lossless).
//! On an ideal wire any mismatch means an active attack and the bit is
//! discarded.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scheme::NominalWireStats;
use crate::wire::BepTrace;

/// Default detection threshold relative to the nominal wire RMS.
pub const DEFAULT_EPSILON_REL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonitorVerdict {
    pub attack_detected: bool,
    pub max_current_residual: f64,
    pub max_voltage_residual: f64,
    pub rms_current_residual: f64,
    pub rms_voltage_residual: f64,
}

/// Absolute thresholds for the two residuals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonitorThresholds {
    pub epsilon_current: f64,
    pub epsilon_voltage: f64,
}

impl MonitorThresholds {
    /// Thresholds as a fraction of the nominal secure-state RMS current and voltage.
    pub fn relative_to(nominal: &NominalWireStats, epsilon_rel: f64) -> Self {
        Self {
            epsilon_current: epsilon_rel * nominal.i_rms(),
            epsilon_voltage: epsilon_rel * nominal.u_rms(),
        }
    }
}

fn max_and_rms(a: &[f64], b: &[f64]) -> (f64, f64) {
    let (max, sq) = a
        .iter()
        .zip(b)
        .map(|(x, y)| x - y)
        .fold((0.0f64, 0.0), |(m, s), r| (m.max(r.abs()), s + r * r));
    (max, (sq / a.len().max(1) as f64).sqrt())
}

/// Compare the end measurements of one BEP. The verdict uses the largest
/// instantaneous mismatch; the RMS values are informational.
pub fn monitor_bep(trace: &BepTrace, epsilon_current: f64, epsilon_voltage: f64) -> Result<MonitorVerdict> {
    for (name, eps) in [("current", epsilon_current), ("voltage", epsilon_voltage)] {
        if eps.is_nan() || eps < 0.0 {
            return Err(Error::Domain(format!(
                "{name} threshold must be non-negative, got {eps}"
            )));
        }
    }
    let (max_i, rms_i) = max_and_rms(&trace.i_alice_end, &trace.i_bob_end);
    let (max_u, rms_u) = max_and_rms(&trace.u_alice_end, &trace.u_bob_end);
    Ok(MonitorVerdict {
        attack_detected: max_i > epsilon_current || max_u > epsilon_voltage,
        max_current_residual: max_i,
        max_voltage_residual: max_u,
        rms_current_residual: rms_i,
        rms_voltage_residual: rms_u,
    })
}

pub fn monitor_with(trace: &BepTrace, thresholds: &MonitorThresholds) -> Result<MonitorVerdict> {
    monitor_bep(trace, thresholds.epsilon_current, thresholds.epsilon_voltage)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::SeedSpec;
    use crate::scheme::{nominal_wire_stats, solve_vmg_levels, ResistorQuad};
    use crate::wire::{simulate_bep, AttackKind, AttackSpec, BitState, SeedFamily, EVE_LABEL};

    fn setup() -> (ResistorQuad, crate::scheme::NoiseLevels, NominalWireStats) {
        let q = ResistorQuad::new(2000.0, 500.0, 2500.0, 2200.0).unwrap();
        let lv = solve_vmg_levels(&q, 1.0, 1000.0).unwrap();
        let st = nominal_wire_stats(&q, &lv);
        (q, lv, st)
    }

    fn trace(kind: AttackKind, factor: f64, bep: u64) -> BepTrace {
        let (q, lv, _) = setup();
        let attack = AttackSpec {
            kind,
            injection_factor: factor,
            attacker_seed: SeedSpec::new(1, EVE_LABEL, bep, 0),
        };
        let seeds = SeedFamily {
            master_seed: 1,
            bep_index: bep,
            repetition_index: 0,
        };
        simulate_bep(&q, &lv, BitState::SECURE[bep as usize % 2], 100, &attack, &seeds).unwrap()
    }

    #[test]
    fn clean_wire_has_zero_residuals() {
        let v = monitor_bep(&trace(AttackKind::None, 0.0, 0), 0.0, 0.0).unwrap();
        assert!(!v.attack_detected);
        assert_eq!(v.max_current_residual, 0.0);
        assert_eq!(v.max_voltage_residual, 0.0);
        assert_eq!(v.rms_current_residual, 0.0);
        assert_eq!(v.rms_voltage_residual, 0.0);
    }

    #[test]
    fn one_percent_attacks_are_caught() {
        let (_, _, st) = setup();
        let th = MonitorThresholds::relative_to(&st, 1e-2);
        for bep in 0..200 {
            for kind in [AttackKind::CurrentInjection, AttackKind::VoltageInsertion] {
                let v = monitor_with(&trace(kind, 0.01, bep), &th).unwrap();
                assert!(v.attack_detected, "{kind} bep {bep}: {v:?}");
            }
        }
    }

    #[test]
    fn residual_rms_tracks_attacker_rms() {
        let (_, _, st) = setup();
        let t = trace(AttackKind::CurrentInjection, 0.1, 3);
        let v = monitor_with(&t, &MonitorThresholds::relative_to(&st, DEFAULT_EPSILON_REL)).unwrap();
        let x_rms = (t.attacker_series.iter().map(|x| x * x).sum::<f64>() / t.len() as f64).sqrt();
        assert!((v.rms_current_residual / x_rms - 1.0).abs() < 1e-9);
        assert_eq!(v.max_voltage_residual, 0.0);
    }

    #[test]
    fn negative_threshold_rejected() {
        let t = trace(AttackKind::None, 0.0, 0);
        assert!(monitor_bep(&t, -1.0, 0.0).is_err());
        assert!(monitor_bep(&t, 0.0, f64::NAN).is_err());
    }
}
