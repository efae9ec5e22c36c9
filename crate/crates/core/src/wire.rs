//! One bit exchange period (BEP) on the wire.

use serde::{Deserialize, Serialize};

use crate::circuit::{solve_loop, AttackerSource, LoopSnapshot};
use crate::error::{Error, Result};
use crate::noise::{gaussian_series, mean_square, nyquist_dt, SeedSpec};
use crate::scheme::{nominal_wire_stats, NoiseLevels, ResistorQuad};

/// Stream label of the attacker's source.
pub const EVE_LABEL: &str = "EVE";

/// Maximum relative balance residual tolerated before an attack is scaled
/// against the nominal wire RMS.
pub const BALANCE_TOL: f64 = 1e-9;

/// Connection state; the first letter is Alice's resistor, the second Bob's.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BitState {
    HL,
    LH,
    HH,
    LL,
}

impl BitState {
    /// The two states that are kept as key bits.
    pub const SECURE: [BitState; 2] = [BitState::HL, BitState::LH];

    pub fn alice_high(self) -> bool {
        matches!(self, BitState::HL | BitState::HH)
    }

    pub fn bob_high(self) -> bool {
        matches!(self, BitState::LH | BitState::HH)
    }

    pub fn is_secure(self) -> bool {
        matches!(self, BitState::HL | BitState::LH)
    }

    /// `(r_alice, r_bob)` connected in this state.
    pub fn resistances(self, quad: &ResistorQuad) -> (f64, f64) {
        let a = if self.alice_high() { quad.r_ha() } else { quad.r_la() };
        let b = if self.bob_high() { quad.r_hb() } else { quad.r_lb() };
        (a, b)
    }

    /// `(u2_alice, u2_bob)` of the connected generators.
    pub fn source_msv(self, levels: &NoiseLevels) -> (f64, f64) {
        let a = if self.alice_high() { levels.u2_ha } else { levels.u2_la };
        let b = if self.bob_high() { levels.u2_hb } else { levels.u2_lb };
        (a, b)
    }

    /// Stream labels of Alice's and Bob's connected generators.
    pub fn stream_labels(self) -> (&'static str, &'static str) {
        let a = if self.alice_high() { "HA" } else { "LA" };
        let b = if self.bob_high() { "HB" } else { "LB" };
        (a, b)
    }
}

impl std::fmt::Display for BitState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        std::fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackKind {
    None,
    CurrentInjection,
    VoltageInsertion,
}

impl AttackKind {
    pub fn as_str(self) -> &'static str {
        match self {
            AttackKind::None => "none",
            AttackKind::CurrentInjection => "current_injection",
            AttackKind::VoltageInsertion => "voltage_insertion",
        }
    }
}

impl std::fmt::Display for AttackKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// What Eve does during a BEP.
///
/// `injection_factor` is the RMS of her source relative to the nominal
/// secure-state wire RMS (current for injection, voltage for insertion).
#[derive(Debug, Clone, PartialEq)]
pub struct AttackSpec {
    pub kind: AttackKind,
    pub injection_factor: f64,
    pub attacker_seed: SeedSpec,
}

impl AttackSpec {
    pub fn none() -> Self {
        Self {
            kind: AttackKind::None,
            injection_factor: 0.0,
            attacker_seed: SeedSpec::new(0, EVE_LABEL, 0, 0),
        }
    }
}

/// Seeds for all party streams of one BEP. Each generator reads the stream
/// labelled by its resistor (`HA`, `LA`, `HB`, `LB`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SeedFamily {
    pub master_seed: u64,
    pub bep_index: u64,
    pub repetition_index: u64,
}

impl SeedFamily {
    pub fn stream(&self, label: &str) -> SeedSpec {
        SeedSpec::new(self.master_seed, label, self.bep_index, self.repetition_index)
    }
}

/// Sampled series of one BEP. All series have the same length and spacing.
#[derive(Debug, Clone, PartialEq)]
pub struct BepTrace {
    pub state: BitState,
    pub attack_kind: AttackKind,
    pub u_wire: Vec<f64>,
    pub i_wire: Vec<f64>,
    pub i_alice_end: Vec<f64>,
    pub i_bob_end: Vec<f64>,
    pub u_alice_end: Vec<f64>,
    pub u_bob_end: Vec<f64>,
    /// Eve's source: amperes for injection, volts for insertion, empty otherwise.
    pub attacker_series: Vec<f64>,
    pub dt: f64,
}

impl BepTrace {
    pub fn len(&self) -> usize {
        self.u_wire.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u_wire.is_empty()
    }
}

/// Simulate one BEP of `gamma` samples.
pub fn simulate_bep(
    quad: &ResistorQuad,
    levels: &NoiseLevels,
    state: BitState,
    gamma: usize,
    attack: &AttackSpec,
    seeds: &SeedFamily,
) -> Result<BepTrace> {
    if gamma == 0 {
        return Err(Error::Domain("a BEP needs at least one sample".into()));
    }
    if !(attack.injection_factor.is_finite() && attack.injection_factor >= 0.0) {
        return Err(Error::Domain(format!(
            "injection factor must be non-negative, got {}",
            attack.injection_factor
        )));
    }
    let dt = nyquist_dt(levels.bandwidth);
    let (r_alice, r_bob) = state.resistances(quad);
    let (u2_alice, u2_bob) = state.source_msv(levels);
    let (label_alice, label_bob) = state.stream_labels();
    let u_alice = gaussian_series(&seeds.stream(label_alice), gamma, u2_alice, dt)?.samples;
    let u_bob = gaussian_series(&seeds.stream(label_bob), gamma, u2_bob, dt)?.samples;

    let attacker_series = match attack.kind {
        AttackKind::None => Vec::new(),
        kind => {
            let nominal = nominal_wire_stats(quad, levels);
            let res = nominal.residuals();
            if res.max() > BALANCE_TOL {
                return Err(Error::Configuration(format!(
                    "noise levels do not balance the HL and LH states (voltage {:e}, current {:e}, power {:e}); \
                     the nominal wire RMS is undefined",
                    res.voltage, res.current, res.power
                )));
            }
            let base_msv = if kind == AttackKind::CurrentInjection {
                nominal.i2_wire_hl
            } else {
                nominal.u2_wire_hl
            };
            let f = attack.injection_factor;
            gaussian_series(&attack.attacker_seed, gamma, f * f * base_msv, dt)?.samples
        }
    };

    let mut trace = BepTrace {
        state,
        attack_kind: attack.kind,
        u_wire: Vec::with_capacity(gamma),
        i_wire: Vec::with_capacity(gamma),
        i_alice_end: Vec::with_capacity(gamma),
        i_bob_end: Vec::with_capacity(gamma),
        u_alice_end: Vec::with_capacity(gamma),
        u_bob_end: Vec::with_capacity(gamma),
        attacker_series: Vec::new(),
        dt,
    };
    for k in 0..gamma {
        let attacker = match attack.kind {
            AttackKind::None => AttackerSource::None,
            AttackKind::CurrentInjection => AttackerSource::CurrentInjection(attacker_series[k]),
            AttackKind::VoltageInsertion => AttackerSource::VoltageInsertion(attacker_series[k]),
        };
        let sol = solve_loop(&LoopSnapshot {
            u_alice_src: u_alice[k],
            u_bob_src: u_bob[k],
            r_alice,
            r_bob,
            attacker,
        });
        trace.u_wire.push(sol.u_wire);
        trace.i_wire.push(sol.i_wire);
        trace.i_alice_end.push(sol.i_alice_end);
        trace.i_bob_end.push(sol.i_bob_end);
        trace.u_alice_end.push(sol.u_alice_end);
        trace.u_bob_end.push(sol.u_bob_end);
    }
    trace.attacker_series = attacker_series;
    Ok(trace)
}

/// Time averages over one trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceStats {
    pub msv_u: f64,
    pub msv_i: f64,
    /// Mean of `u_wire·i_wire`; positive means Alice → Bob.
    pub power: f64,
    /// Standard errors of the three means above.
    pub msv_u_se: f64,
    pub msv_i_se: f64,
    pub power_se: f64,
    /// `<u_wire · attacker>`; absent without an attack.
    pub xcorr_u_attacker: Option<f64>,
    /// `<i_wire · attacker>`; absent without an attack.
    pub xcorr_i_attacker: Option<f64>,
}

fn mean_and_se(values: impl Iterator<Item = f64> + Clone, n: usize) -> (f64, f64) {
    let nf = n as f64;
    let mean = values.clone().sum::<f64>() / nf;
    if n < 2 {
        return (mean, f64::NAN);
    }
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / (nf - 1.0);
    (mean, (var / nf).sqrt())
}

pub fn trace_stats(trace: &BepTrace) -> TraceStats {
    let n = trace.len();
    let (msv_u, msv_u_se) = mean_and_se(trace.u_wire.iter().map(|u| u * u), n);
    let (msv_i, msv_i_se) = mean_and_se(trace.i_wire.iter().map(|i| i * i), n);
    let (power, power_se) = mean_and_se(trace.u_wire.iter().zip(&trace.i_wire).map(|(u, i)| u * i), n);
    let xcorr = |xs: &[f64]| {
        if trace.attacker_series.is_empty() {
            None
        } else {
            Some(cross_mean(xs, &trace.attacker_series))
        }
    };
    TraceStats {
        msv_u,
        msv_i,
        power,
        msv_u_se,
        msv_i_se,
        power_se,
        xcorr_u_attacker: xcorr(&trace.u_wire),
        xcorr_i_attacker: xcorr(&trace.i_wire),
    }
}

pub(crate) fn cross_mean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() / a.len() as f64
}

/// Mean-square value of Eve's own source over the BEP.
pub fn attacker_mean_square(trace: &BepTrace) -> f64 {
    if trace.attacker_series.is_empty() {
        0.0
    } else {
        mean_square(&trace.attacker_series)
    }
}
