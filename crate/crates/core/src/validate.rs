//! Invariant checks for one resistor quad: analytic balance residuals plus a
//! Monte Carlo comparison of simulated wire statistics with their nominal values.

use serde::Serialize;

use crate::error::Result;
use crate::scheme::{nominal_wire_stats, NoiseLevels, ResistorQuad};
use crate::wire::{simulate_bep, trace_stats, AttackSpec, BitState, SeedFamily, BALANCE_TOL};

/// Samples per simulated BEP in the Monte Carlo checks.
pub const VALIDATION_GAMMA: usize = 100_000;
/// Allowed Monte Carlo deviation, in standard errors.
pub const VALIDATION_SIGMAS: f64 = 4.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    /// Residual (relative) or deviation in standard errors.
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    fn new(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            value,
            tolerance,
            passed: value <= tolerance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

fn sigmas(estimate: f64, nominal: f64, se: f64) -> f64 {
    let d = (estimate - nominal).abs();
    if se > 0.0 {
        d / se
    } else if d == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

pub fn validate_scheme(quad: &ResistorQuad, levels: &NoiseLevels, master_seed: u64) -> Result<ValidationReport> {
    let nominal = nominal_wire_stats(quad, levels);
    let res = nominal.residuals();
    let mut checks = vec![
        Check::new("voltage balance residual", res.voltage, BALANCE_TOL),
        Check::new("current balance residual", res.current, BALANCE_TOL),
        Check::new("power balance residual", res.power, BALANCE_TOL),
    ];
    if checks.iter().any(|c| !c.passed) {
        return Ok(ValidationReport { checks });
    }
    for (bep, state) in BitState::SECURE.into_iter().enumerate() {
        let seeds = SeedFamily {
            master_seed,
            bep_index: bep as u64,
            repetition_index: 0,
        };
        let trace = simulate_bep(quad, levels, state, VALIDATION_GAMMA, &AttackSpec::none(), &seeds)?;
        let s = trace_stats(&trace);
        let (u2, i2, p) = match state {
            BitState::HL => (nominal.u2_wire_hl, nominal.i2_wire_hl, nominal.p_hl),
            _ => (nominal.u2_wire_lh, nominal.i2_wire_lh, nominal.p_lh),
        };
        checks.push(Check::new(
            format!("{state} wire voltage msv (σ)"),
            sigmas(s.msv_u, u2, s.msv_u_se),
            VALIDATION_SIGMAS,
        ));
        checks.push(Check::new(
            format!("{state} wire current msv (σ)"),
            sigmas(s.msv_i, i2, s.msv_i_se),
            VALIDATION_SIGMAS,
        ));
        checks.push(Check::new(
            format!("{state} power flow (σ)"),
            sigmas(s.power, p, s.power_se),
            VALIDATION_SIGMAS,
        ));
    }
    Ok(ValidationReport { checks })
}
