//! `kljn`: solve VMG-KLJN noise levels, run attack sweeps, rebuild the
//! result tables and validate scheme invariants.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use kljn_core::config::ExperimentConfig;
use kljn_core::experiment::{reproduce_table, run_experiment, DefenseSpec, SweepSpec, DEFAULT_MASTER_SEED};
use kljn_core::report::{sci3, write_report, ReportFormat};
use kljn_core::scheme::{
    classify_scheme, fck2_fourth_resistor, fck3_fourth_resistor, nominal_wire_stats, ResistorQuad,
};
use kljn_core::validate::validate_scheme;
use kljn_core::{defense::DEFAULT_EPSILON_REL, Error, Result};

#[derive(Parser)]
#[command(name = "kljn", version, about = "KLJN / VMG-KLJN active attack laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the noise levels and temperatures of a resistor quad
    Solve {
        /// JSON experiment config
        #[arg(long)]
        config: PathBuf,
    },
    /// Fourth resistor R_HB that equalizes the parallel resultants
    Fck2 {
        #[arg(long = "r-ha", value_name = "OHMS")]
        r_ha: f64,
        #[arg(long = "r-la", value_name = "OHMS")]
        r_la: f64,
        #[arg(long = "r-lb", value_name = "OHMS")]
        r_lb: f64,
    },
    /// Fourth resistor R_LB that equalizes the serial resultants
    Fck3 {
        #[arg(long = "r-ha", value_name = "OHMS")]
        r_ha: f64,
        #[arg(long = "r-la", value_name = "OHMS")]
        r_la: f64,
        #[arg(long = "r-hb", value_name = "OHMS")]
        r_hb: f64,
    },
    /// Run the attack sweep described by a config
    Attack {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Rebuild one of the six result tables
    Reproduce {
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=6))]
        table: u8,
        #[command(flatten)]
        run: RunArgs,
        /// Override the BEPs per repetition
        #[arg(long)]
        n_beps: Option<usize>,
        /// Override the number of repetitions
        #[arg(long)]
        repetitions: Option<usize>,
    },
    /// Check balance residuals and Monte Carlo wire statistics
    Validate {
        #[arg(long)]
        config: PathBuf,
        /// Master seed (overrides the config)
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// CSV output path
    #[arg(long)]
    out: Option<PathBuf>,
    /// Run the amplitude monitor and report detection columns
    #[arg(long)]
    defense: bool,
    /// Master seed (overrides the config)
    #[arg(long)]
    seed: Option<u64>,
}

fn write_csv(path: &Path, report: &kljn_core::experiment::ExperimentReport, format: ReportFormat) -> Result<()> {
    let file = File::create(path)?;
    write_report(report, format, BufWriter::new(file))
}

fn cmd_solve(config: &Path) -> Result<()> {
    let cfg = ExperimentConfig::from_path(config)?;
    let quad = cfg.quad()?;
    let levels = cfg.levels()?;
    let stats = nominal_wire_stats(&quad, &levels);
    let res = stats.residuals();
    let mut out = io::stdout().lock();
    writeln!(out, "scheme: {}", classify_scheme(&quad))?;
    writeln!(out, "bandwidth: {} Hz, U_LA: {} V", levels.bandwidth, levels.u_la_rms)?;
    for (name, r, u2, t) in [
        ("HA", quad.r_ha(), levels.u2_ha, levels.t_ha),
        ("LB", quad.r_lb(), levels.u2_lb, levels.t_lb),
        ("LA", quad.r_la(), levels.u2_la, levels.t_la),
        ("HB", quad.r_hb(), levels.u2_hb, levels.t_hb),
    ] {
        writeln!(
            out,
            "R_{name} = {r} Ω  U²_{name} = {u2:.6e} V²  T_{name} = {} K",
            sci3(t)
        )?;
    }
    writeln!(out, "R_pHL = {:.4} Ω, R_pLH = {:.4} Ω", stats.r_p_hl, stats.r_p_lh)?;
    writeln!(out, "R_sHL = {:.4} Ω, R_sLH = {:.4} Ω", stats.r_s_hl, stats.r_s_lh)?;
    writeln!(out, "voltage balance residual: {:e}", res.voltage)?;
    writeln!(out, "current balance residual: {:e}", res.current)?;
    writeln!(out, "power balance residual: {:e}", res.power)?;
    Ok(())
}

fn cmd_fck2(r_ha: f64, r_la: f64, r_lb: f64) -> Result<()> {
    let r_hb = fck2_fourth_resistor(r_ha, r_la, r_lb)?;
    let quad = ResistorQuad::new(r_ha, r_la, r_hb, r_lb)?;
    println!("R_HB = {r_hb:.2} Ω");
    println!("exact: {r_hb}");
    println!("R_pHL = R_pLH = {:.2} Ω", quad.r_p_hl());
    Ok(())
}

fn cmd_fck3(r_ha: f64, r_la: f64, r_hb: f64) -> Result<()> {
    let r_lb = fck3_fourth_resistor(r_ha, r_la, r_hb)?;
    let quad = ResistorQuad::new(r_ha, r_la, r_hb, r_lb)?;
    println!("R_LB = {r_lb:.2} Ω");
    println!("exact: {r_lb}");
    println!("R_sHL = R_sLH = {:.2} Ω", quad.r_s_hl());
    Ok(())
}

fn cmd_attack(config: &Path, run: &RunArgs) -> Result<()> {
    let cfg = ExperimentConfig::from_path(config)?;
    let case = cfg.case_spec()?;
    let mut sweep = cfg.sweep_spec();
    if let Some(seed) = run.seed {
        sweep.master_seed = seed;
    }
    if run.defense && sweep.defense.is_none() {
        sweep.defense = Some(DefenseSpec {
            epsilon_rel: cfg.defense.epsilon_rel,
        });
    }
    let report = run_experiment(format!("Case {}", case.case_id), &[case], &sweep)?;
    if let Some(path) = &run.out {
        write_csv(path, &report, ReportFormat::Csv)?;
    }
    write_report(&report, ReportFormat::Table, io::stdout().lock())
}

fn cmd_reproduce(table: u8, run: &RunArgs, n_beps: Option<usize>, repetitions: Option<usize>) -> Result<()> {
    let mut sweep = SweepSpec {
        master_seed: run.seed.unwrap_or(DEFAULT_MASTER_SEED),
        defense: run.defense.then_some(DefenseSpec {
            epsilon_rel: DEFAULT_EPSILON_REL,
        }),
        ..SweepSpec::default()
    };
    if let Some(n) = n_beps {
        sweep.n_beps = n;
    }
    if let Some(r) = repetitions {
        sweep.repetitions = r;
    }
    let report = reproduce_table(table, &sweep)?;
    let (csv, console) = if report.rows.is_empty() {
        (ReportFormat::TemperatureCsv, ReportFormat::TemperatureTable)
    } else {
        (ReportFormat::Csv, ReportFormat::Table)
    };
    if let Some(path) = &run.out {
        write_csv(path, &report, csv)?;
    }
    write_report(&report, console, io::stdout().lock())
}

fn cmd_validate(config: &Path, seed: Option<u64>) -> Result<bool> {
    let cfg = ExperimentConfig::from_path(config)?;
    let quad = cfg.quad()?;
    let levels = cfg.levels()?;
    let report = validate_scheme(&quad, &levels, seed.unwrap_or(cfg.master_seed))?;
    let mut out = io::stdout().lock();
    for c in &report.checks {
        let mark = if c.passed { "ok  " } else { "FAIL" };
        writeln!(
            out,
            "{mark} {:<32} {:>12.3e}  (tolerance {:e})",
            c.name, c.value, c.tolerance
        )?;
    }
    if !report.passed() {
        let names: Vec<&str> = report.failures().map(|c| c.name.as_str()).collect();
        eprintln!("validation failed: {}", names.join(", "));
    }
    Ok(report.passed())
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Usage(_) | Error::InvalidQuad(_) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Solve { config } => cmd_solve(config).map(|_| true),
        Command::Fck2 { r_ha, r_la, r_lb } => cmd_fck2(*r_ha, *r_la, *r_lb).map(|_| true),
        Command::Fck3 { r_ha, r_la, r_hb } => cmd_fck3(*r_ha, *r_la, *r_hb).map(|_| true),
        Command::Attack { config, run } => cmd_attack(config, run).map(|_| true),
        Command::Reproduce {
            table,
            run,
            n_beps,
            repetitions,
        } => cmd_reproduce(*table, run, *n_beps, *repetitions).map(|_| true),
        Command::Validate { config, seed } => cmd_validate(config, *seed),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
