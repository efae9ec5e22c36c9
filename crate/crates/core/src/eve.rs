//! Eve's cross-correlation estimators for the two active attacks.
//!
//! In both attacks Eve correlates her own source with the wire response
//! (voltage for injection, current for insertion). The expected value of that
//! correlation is `<x²>·R` where `R` is the resultant her source sees in the
//! true state: parallel for injection, `1/serial` for insertion. She computes
//! both hypotheses from public resistances and picks the nearer one.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::noise::{coin_flip, mean_square, SeedSpec};
use crate::scheme::ResistorQuad;
use crate::wire::{cross_mean, AttackKind, BepTrace, BitState};

/// Resultants of the two secure states. Public, since the resistor values
/// are part of the protocol.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PublicResultants {
    pub r_p_hl: f64,
    pub r_p_lh: f64,
    pub r_s_hl: f64,
    pub r_s_lh: f64,
}

impl PublicResultants {
    pub fn of(quad: &ResistorQuad) -> Self {
        Self {
            r_p_hl: quad.r_p_hl(),
            r_p_lh: quad.r_p_lh(),
            r_s_hl: quad.r_s_hl(),
            r_s_lh: quad.r_s_lh(),
        }
    }
}

/// Everything Eve uses for one BEP besides the trace. Her own source series
/// is read from [`BepTrace::attacker_series`].
#[derive(Debug, Clone, PartialEq)]
pub struct EveKnowledge {
    pub resultants: PublicResultants,
    /// Stream for the coin flip when both hypotheses are equally near.
    pub tie_seed: SeedSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EveGuess {
    pub guess: BitState,
    pub rho_measured: f64,
    pub rho_hl_theoretical: f64,
    pub rho_lh_theoretical: f64,
    pub tie_broken: bool,
}

impl EveGuess {
    pub fn is_correct(&self, truth: BitState) -> bool {
        self.guess == truth
    }
}

fn decide(rho: f64, rho_hl: f64, rho_lh: f64, tie_seed: &SeedSpec) -> EveGuess {
    let d_hl = (rho - rho_hl).abs();
    let d_lh = (rho - rho_lh).abs();
    let (guess, tie_broken) = if d_hl < d_lh {
        (BitState::HL, false)
    } else if d_lh < d_hl {
        (BitState::LH, false)
    } else if coin_flip(tie_seed) {
        (BitState::HL, true)
    } else {
        (BitState::LH, true)
    };
    EveGuess {
        guess,
        rho_measured: rho,
        rho_hl_theoretical: rho_hl,
        rho_lh_theoretical: rho_lh,
        tie_broken,
    }
}

fn expect_kind(trace: &BepTrace, kind: AttackKind) -> Result<()> {
    if trace.attack_kind != kind {
        return Err(Error::Usage(format!(
            "estimator for {kind} applied to a trace with attack {}",
            trace.attack_kind
        )));
    }
    if trace.attacker_series.len() != trace.len() {
        return Err(Error::Usage("attacker series does not span the trace".into()));
    }
    Ok(())
}

/// Guess from `<u_wire · i_inj>` against `<i_inj²>·R_p` for each state.
pub fn current_injection_guess(trace: &BepTrace, knowledge: &EveKnowledge) -> Result<EveGuess> {
    expect_kind(trace, AttackKind::CurrentInjection)?;
    let rho = cross_mean(&trace.u_wire, &trace.attacker_series);
    let m = mean_square(&trace.attacker_series);
    let r = &knowledge.resultants;
    Ok(decide(rho, m * r.r_p_hl, m * r.r_p_lh, &knowledge.tie_seed))
}

/// Guess from `<i_wire · u_ins>` against `<u_ins²>/R_s` for each state.
pub fn voltage_insertion_guess(trace: &BepTrace, knowledge: &EveKnowledge) -> Result<EveGuess> {
    expect_kind(trace, AttackKind::VoltageInsertion)?;
    let rho = cross_mean(&trace.i_wire, &trace.attacker_series);
    let m = mean_square(&trace.attacker_series);
    let r = &knowledge.resultants;
    Ok(decide(rho, m / r.r_s_hl, m / r.r_s_lh, &knowledge.tie_seed))
}

/// Dispatch on the trace's attack kind.
pub fn eve_guess(trace: &BepTrace, knowledge: &EveKnowledge) -> Result<EveGuess> {
    match trace.attack_kind {
        AttackKind::CurrentInjection => current_injection_guess(trace, knowledge),
        AttackKind::VoltageInsertion => voltage_insertion_guess(trace, knowledge),
        AttackKind::None => Err(Error::Usage(
            "no attack in this trace; Eve has nothing to correlate".into(),
        )),
    }
}
