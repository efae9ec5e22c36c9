//! Monte Carlo campaigns: sweep injection factor and BEP length for a set of
//! cases and estimate Eve's per-bit success probability.
//!
//! Every random draw is addressed by `(cell seed, label, bep, repetition)`,
//! where the cell seed is derived from the master seed and the cell's
//! identity. Results therefore do not depend on how work is scheduled.

use rayon::prelude::*;
use serde::Serialize;

use crate::defense::{monitor_with, MonitorThresholds};
use crate::error::{Error, Result};
use crate::eve::{eve_guess, EveKnowledge, PublicResultants};
use crate::noise::{coin_flip, derive_master_seed, SeedSpec};
use crate::scheme::{
    classify_scheme, fck2_fourth_resistor, nominal_wire_stats, solve_vmg_levels, NoiseLevels, ResistorQuad, SchemeKind,
    DEFAULT_BANDWIDTH, DEFAULT_U_LA_RMS,
};
use crate::wire::{simulate_bep, AttackKind, AttackSpec, BitState, SeedFamily, EVE_LABEL};

pub const STATE_LABEL: &str = "STATE";
pub const TIE_LABEL: &str = "TIE";

/// Master seed used when none is given.
pub const DEFAULT_MASTER_SEED: u64 = 20_220_715;

/// One row of a results table: a resistor quad under one attack.
#[derive(Debug, Clone, PartialEq)]
pub struct CaseSpec {
    pub case_id: String,
    pub quad: ResistorQuad,
    pub u_la_rms: f64,
    pub bandwidth: f64,
    pub attack_kind: AttackKind,
    levels: NoiseLevels,
}

impl CaseSpec {
    pub fn new(
        case_id: impl Into<String>,
        quad: ResistorQuad,
        u_la_rms: f64,
        bandwidth: f64,
        attack_kind: AttackKind,
    ) -> Result<Self> {
        let case_id = case_id.into();
        if attack_kind == AttackKind::None {
            return Err(Error::Configuration(format!(
                "case {case_id}: an attack kind is required"
            )));
        }
        let levels = solve_vmg_levels(&quad, u_la_rms, bandwidth).map_err(|e| match e {
            Error::Unphysical(m) => Error::Unphysical(format!("case {case_id}: {m}")),
            Error::Configuration(m) => Error::Configuration(format!("case {case_id}: {m}")),
            other => other,
        })?;
        Ok(Self {
            case_id,
            quad,
            u_la_rms,
            bandwidth,
            attack_kind,
            levels,
        })
    }

    pub fn levels(&self) -> &NoiseLevels {
        &self.levels
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DefenseSpec {
    /// Detection threshold relative to the nominal wire RMS.
    pub epsilon_rel: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub injection_factors: Vec<f64>,
    pub gammas: Vec<usize>,
    /// Secure bits per estimate.
    pub n_beps: usize,
    pub repetitions: usize,
    pub master_seed: u64,
    /// Run the amplitude monitor on every BEP when set.
    pub defense: Option<DefenseSpec>,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            injection_factors: vec![0.01, 0.10, 0.20],
            gammas: vec![100, 200, 500],
            n_beps: 2000,
            repetitions: 10,
            master_seed: DEFAULT_MASTER_SEED,
            defense: None,
        }
    }
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_beps == 0 || self.repetitions == 0 {
            return Err(Error::Configuration("n_beps and repetitions must be at least 1".into()));
        }
        if let Some(f) = self.injection_factors.iter().find(|f| !(f.is_finite() && **f >= 0.0)) {
            return Err(Error::Configuration(format!(
                "injection factor {f} is not a non-negative number"
            )));
        }
        if self.gammas.contains(&0) {
            return Err(Error::Configuration("gamma must be at least 1".into()));
        }
        if let Some(d) = &self.defense {
            if d.epsilon_rel.is_nan() || d.epsilon_rel < 0.0 {
                return Err(Error::Configuration("defense epsilon_rel must be non-negative".into()));
            }
        }
        Ok(())
    }
}

/// Monitor statistics of an attacked cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DefenseOutcome {
    pub detected_fraction: f64,
    /// Fraction of secure bits Alice and Bob throw away.
    pub discarded_rate: f64,
    /// Eve's success on bits that slipped past the monitor; `None` when none did.
    pub p_e_undetected: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CellResult {
    pub p_e_mean: f64,
    /// Sample standard deviation over repetitions (0 for a single repetition).
    pub p_e_std: f64,
    pub defense: Option<DefenseOutcome>,
}

#[derive(Debug, Clone, Copy)]
struct BepOutcome {
    correct: bool,
    detected: bool,
}

fn cell_seed(master: u64, case: &CaseSpec, factor: f64, gamma: usize) -> u64 {
    derive_master_seed(
        master,
        &format!(
            "cell/{}/{}/{:016x}/{}",
            case.case_id,
            case.attack_kind,
            factor.to_bits(),
            gamma
        ),
    )
}

/// Estimate Eve's success probability for one `(case, factor, gamma)` cell.
pub fn run_cell(case: &CaseSpec, factor: f64, gamma: usize, sweep: &SweepSpec) -> Result<CellResult> {
    sweep.validate()?;
    if !(factor.is_finite() && factor >= 0.0) || gamma == 0 {
        return Err(Error::Configuration(format!(
            "invalid cell: factor {factor}, gamma {gamma}"
        )));
    }
    let master = cell_seed(sweep.master_seed, case, factor, gamma);
    let resultants = PublicResultants::of(&case.quad);
    let thresholds = sweep
        .defense
        .map(|d| MonitorThresholds::relative_to(&nominal_wire_stats(&case.quad, &case.levels), d.epsilon_rel));

    let run_bep = |rep: u64, bep: u64| -> Result<BepOutcome> {
        let state = if coin_flip(&SeedSpec::new(master, STATE_LABEL, bep, rep)) {
            BitState::HL
        } else {
            BitState::LH
        };
        let attack = AttackSpec {
            kind: case.attack_kind,
            injection_factor: factor,
            attacker_seed: SeedSpec::new(master, EVE_LABEL, bep, rep),
        };
        let seeds = SeedFamily {
            master_seed: master,
            bep_index: bep,
            repetition_index: rep,
        };
        let trace = simulate_bep(&case.quad, &case.levels, state, gamma, &attack, &seeds)?;
        let knowledge = EveKnowledge {
            resultants,
            tie_seed: SeedSpec::new(master, TIE_LABEL, bep, rep),
        };
        let correct = eve_guess(&trace, &knowledge)?.is_correct(state);
        let detected = match &thresholds {
            Some(t) => monitor_with(&trace, t)?.attack_detected,
            None => false,
        };
        Ok(BepOutcome { correct, detected })
    };

    let n = sweep.n_beps as u64;
    let outcomes = (0..sweep.repetitions as u64 * n)
        .into_par_iter()
        .map(|k| run_bep(k / n, k % n))
        .collect::<Result<Vec<_>>>()?;

    let fractions: Vec<f64> = outcomes
        .chunks(sweep.n_beps)
        .map(|rep| rep.iter().filter(|o| o.correct).count() as f64 / sweep.n_beps as f64)
        .collect();
    // Repetitions have equal size, so the mean of the fractions is the pooled
    // fraction; computing it from the pooled count avoids rounding noise.
    let p_e_mean = outcomes.iter().filter(|o| o.correct).count() as f64 / outcomes.len() as f64;
    let (_, p_e_std) = mean_std(&fractions);

    let defense = thresholds.map(|_| {
        let total = outcomes.len() as f64;
        let detected = outcomes.iter().filter(|o| o.detected).count();
        let undetected: Vec<_> = outcomes.iter().filter(|o| !o.detected).collect();
        DefenseOutcome {
            detected_fraction: detected as f64 / total,
            discarded_rate: detected as f64 / total,
            p_e_undetected: if undetected.is_empty() {
                None
            } else {
                Some(undetected.iter().filter(|o| o.correct).count() as f64 / undetected.len() as f64)
            },
        }
    });
    Ok(CellResult {
        p_e_mean,
        p_e_std,
        defense,
    })
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub case_id: String,
    pub attack_kind: AttackKind,
    pub injection_factor: f64,
    pub gamma: usize,
    pub p_e_mean: f64,
    pub p_e_std: f64,
    pub n_beps: usize,
    pub repetitions: usize,
    pub defense: Option<DefenseOutcome>,
}

/// Resistors, scheme type and noise temperatures of one case.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseSummary {
    pub case_id: String,
    pub quad: ResistorQuad,
    pub attack_kind: AttackKind,
    pub scheme: SchemeKind,
    pub levels: NoiseLevels,
}

impl CaseSummary {
    pub fn of(case: &CaseSpec) -> Self {
        Self {
            case_id: case.case_id.clone(),
            quad: case.quad,
            attack_kind: case.attack_kind,
            scheme: classify_scheme(&case.quad),
            levels: case.levels,
        }
    }

    /// `[T_HA, T_LB, T_LA, T_HB]`, the column order of the temperature tables.
    pub fn temperatures(&self) -> [f64; 4] {
        let l = &self.levels;
        [l.t_ha, l.t_lb, l.t_la, l.t_hb]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub title: String,
    pub cases: Vec<CaseSummary>,
    pub rows: Vec<ReportRow>,
}

/// Run every cell of `sweep` for one case. Rows are ordered by factor, then gamma.
pub fn run_case(case: &CaseSpec, sweep: &SweepSpec) -> Result<Vec<ReportRow>> {
    let mut rows = Vec::with_capacity(sweep.injection_factors.len() * sweep.gammas.len());
    for &factor in &sweep.injection_factors {
        for &gamma in &sweep.gammas {
            let cell = run_cell(case, factor, gamma, sweep)?;
            rows.push(ReportRow {
                case_id: case.case_id.clone(),
                attack_kind: case.attack_kind,
                injection_factor: factor,
                gamma,
                p_e_mean: cell.p_e_mean,
                p_e_std: cell.p_e_std,
                n_beps: sweep.n_beps,
                repetitions: sweep.repetitions,
                defense: cell.defense,
            });
        }
    }
    Ok(rows)
}

pub fn run_experiment(title: impl Into<String>, cases: &[CaseSpec], sweep: &SweepSpec) -> Result<ExperimentReport> {
    sweep.validate()?;
    let mut rows = Vec::new();
    for case in cases {
        rows.extend(run_case(case, sweep)?);
    }
    Ok(ExperimentReport {
        title: title.into(),
        cases: cases.iter().map(CaseSummary::of).collect(),
        rows,
    })
}

/// The eight built-in cases `A`–`H`.
///
/// Cases C and H use the exact matched `R_HB` (444.444… Ω). Rounded to
/// 444.44 Ω it misses the parallel match by ~3·10⁻⁶.
pub fn builtin_case(id: char) -> Result<CaseSpec> {
    use AttackKind::{CurrentInjection as Ci, VoltageInsertion as Vi};
    let fck2_r_hb = fck2_fourth_resistor(1000.0, 200.0, 160.0)?;
    let (r, kind) = match id.to_ascii_uppercase() {
        'A' => ((9000.0, 1000.0, 9000.0, 1000.0), Ci),
        'B' => ((1000.0, 200.0, 220.0, 160.0), Ci),
        'C' => ((1000.0, 200.0, fck2_r_hb, 160.0), Ci),
        'D' => ((9000.0, 1000.0, 9000.0, 1000.0), Vi),
        'E' => ((2000.0, 500.0, 2500.0, 2200.0), Vi),
        'F' => ((2000.0, 500.0, 2500.0, 1000.0), Vi),
        'G' => ((2000.0, 500.0, 2500.0, 1000.0), Ci),
        'H' => ((1000.0, 200.0, fck2_r_hb, 160.0), Vi),
        other => return Err(Error::Usage(format!("no built-in case {other:?}"))),
    };
    let quad = ResistorQuad::new(r.0, r.1, r.2, r.3)?;
    CaseSpec::new(
        id.to_ascii_uppercase().to_string(),
        quad,
        DEFAULT_U_LA_RMS,
        DEFAULT_BANDWIDTH,
        kind,
    )
}

/// Case ids of a results or temperature table.
pub fn table_cases(table_id: u8) -> Result<&'static [char]> {
    match table_id {
        1 | 2 => Ok(&['A', 'B', 'C']),
        3 | 4 => Ok(&['D', 'E', 'F']),
        5 | 6 => Ok(&['G', 'H']),
        other => Err(Error::Usage(format!("table must be 1–6, got {other}"))),
    }
}

/// Rebuild one of the six tables. Odd tables are Monte Carlo sweeps; even
/// tables list the noise temperatures of the preceding table's cases and run
/// no simulation.
pub fn reproduce_table(table_id: u8, sweep: &SweepSpec) -> Result<ExperimentReport> {
    let cases = table_cases(table_id)?
        .iter()
        .map(|&c| builtin_case(c))
        .collect::<Result<Vec<_>>>()?;
    if table_id.is_multiple_of(2) {
        return Ok(ExperimentReport {
            title: format!("Table {table_id}: noise temperatures"),
            cases: cases.iter().map(CaseSummary::of).collect(),
            rows: Vec::new(),
        });
    }
    let title = match table_id {
        1 => "Table 1: current injection attack",
        3 => "Table 3: voltage insertion attack",
        _ => "Table 5: each matched design against the other attack",
    };
    run_experiment(title, &cases, sweep)
}
