//! Serialise experiment reports as CSV or as fixed-width console tables.

use std::io::Write;

use crate::error::{Error, Result};
use crate::experiment::{CaseSummary, ExperimentReport, ReportRow};

pub const RESULTS_HEADER: [&str; 8] = [
    "case_id",
    "attack",
    "injection_factor",
    "gamma",
    "p_e_mean",
    "p_e_std",
    "n_beps",
    "repetitions",
];
pub const DEFENSE_HEADER: [&str; 3] = ["detected_fraction", "discarded_rate", "p_e_undetected"];
pub const TEMPERATURE_HEADER: [&str; 10] = [
    "case_id", "scheme", "r_ha", "r_la", "r_hb", "r_lb", "t_ha", "t_lb", "t_la", "t_hb",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    /// One line per cell.
    Csv,
    /// Human-readable table, one block per case.
    Table,
    TemperatureCsv,
    TemperatureTable,
}

/// Three significant figures in scientific notation, e.g. `2.72e16`.
pub fn sci3(x: f64) -> String {
    format!("{x:.2e}")
}

fn csv_writer<W: Write>(sink: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(sink)
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Configuration(format!("csv: {other:?}")),
    }
}

fn row_record(row: &ReportRow, with_defense: bool) -> Vec<String> {
    let mut rec = vec![
        row.case_id.clone(),
        row.attack_kind.as_str().to_owned(),
        row.injection_factor.to_string(),
        row.gamma.to_string(),
        row.p_e_mean.to_string(),
        row.p_e_std.to_string(),
        row.n_beps.to_string(),
        row.repetitions.to_string(),
    ];
    if with_defense {
        match &row.defense {
            Some(d) => {
                rec.push(d.detected_fraction.to_string());
                rec.push(d.discarded_rate.to_string());
                rec.push(d.p_e_undetected.map(|p| p.to_string()).unwrap_or_default());
            }
            None => rec.extend(std::iter::repeat_n(String::new(), 3)),
        }
    }
    rec
}

fn write_results_csv<W: Write>(report: &ExperimentReport, sink: W) -> Result<()> {
    let with_defense = report.rows.iter().any(|r| r.defense.is_some());
    let mut w = csv_writer(sink);
    let mut header: Vec<&str> = RESULTS_HEADER.to_vec();
    if with_defense {
        header.extend(DEFENSE_HEADER);
    }
    w.write_record(&header).map_err(csv_err)?;
    for row in &report.rows {
        w.write_record(row_record(row, with_defense)).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn write_temperature_csv<W: Write>(report: &ExperimentReport, sink: W) -> Result<()> {
    let mut w = csv_writer(sink);
    w.write_record(TEMPERATURE_HEADER).map_err(csv_err)?;
    for c in &report.cases {
        let q = &c.quad;
        let mut rec = vec![
            c.case_id.clone(),
            c.scheme.to_string(),
            q.r_ha().to_string(),
            q.r_la().to_string(),
            q.r_hb().to_string(),
            q.r_lb().to_string(),
        ];
        rec.extend(c.temperatures().iter().map(|&t| sci3(t)));
        w.write_record(rec).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn kohm(r: f64) -> String {
    let k = r / 1000.0;
    let s = format!("{k:.4}");
    s.trim_end_matches('0').trim_end_matches('.').to_owned()
}

fn resistor_cells(c: &CaseSummary) -> Vec<String> {
    let q = &c.quad;
    vec![
        c.case_id.clone(),
        kohm(q.r_ha()),
        kohm(q.r_lb()),
        kohm(q.r_la()),
        kohm(q.r_hb()),
    ]
}

fn write_aligned<W: Write>(sink: &mut W, title: &str, header: &[String], body: &[Vec<String>]) -> Result<()> {
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for line in body {
        for (w, cell) in widths.iter_mut().zip(line) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let fmt_line = |cells: &[String]| {
        let padded: Vec<String> = cells.iter().zip(&widths).map(|(c, &w)| format!("{c:<w$}")).collect();
        padded.join("  ").trim_end().to_owned()
    };
    writeln!(sink, "{title}")?;
    writeln!(sink, "{}", fmt_line(header))?;
    let rule: usize = widths.iter().sum::<usize>() + 2 * widths.len().saturating_sub(1);
    writeln!(sink, "{}", "-".repeat(rule))?;
    for line in body {
        writeln!(sink, "{}", fmt_line(line))?;
    }
    Ok(())
}

fn write_results_table<W: Write>(report: &ExperimentReport, sink: &mut W) -> Result<()> {
    let mut gammas: Vec<usize> = Vec::new();
    for r in &report.rows {
        if !gammas.contains(&r.gamma) {
            gammas.push(r.gamma);
        }
    }
    let mut header: Vec<String> = [
        "Case",
        "R_HA kΩ",
        "R_LB kΩ",
        "R_LA kΩ",
        "R_HB kΩ",
        "Attack",
        "R_pHL/R_pLH kΩ",
        "R_sHL/R_sLH kΩ",
        "Factor",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    header.extend(gammas.iter().map(|g| format!("p_E γ={g}")));

    let mut body = Vec::new();
    for case in &report.cases {
        let rows: Vec<&ReportRow> = report.rows.iter().filter(|r| r.case_id == case.case_id).collect();
        let mut factors: Vec<f64> = Vec::new();
        for r in &rows {
            if !factors.contains(&r.injection_factor) {
                factors.push(r.injection_factor);
            }
        }
        for (i, &f) in factors.iter().enumerate() {
            let mut line = if i == 0 {
                let q = &case.quad;
                let mut l = resistor_cells(case);
                l.push(case.attack_kind.to_string());
                l.push(format!("{}/{}", kohm(q.r_p_hl()), kohm(q.r_p_lh())));
                l.push(format!("{}/{}", kohm(q.r_s_hl()), kohm(q.r_s_lh())));
                l
            } else {
                vec![String::new(); 8]
            };
            line.push(format!("{}%", f * 100.0));
            for g in &gammas {
                let cell = rows.iter().find(|r| r.injection_factor == f && r.gamma == *g);
                line.push(match cell {
                    Some(r) => match &r.defense {
                        Some(d) => format!("{:.3} ± {:.3} (det {:.3})", r.p_e_mean, r.p_e_std, d.detected_fraction),
                        None => format!("{:.3} ± {:.3}", r.p_e_mean, r.p_e_std),
                    },
                    None => String::new(),
                });
            }
            body.push(line);
        }
    }
    write_aligned(sink, &report.title, &header, &body)
}

fn write_temperature_table<W: Write>(report: &ExperimentReport, sink: &mut W) -> Result<()> {
    let header: Vec<String> = [
        "Case", "R_HA kΩ", "R_LB kΩ", "R_LA kΩ", "R_HB kΩ", "Scheme", "T_HA K", "T_LB K", "T_LA K", "T_HB K",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    let body: Vec<Vec<String>> = report
        .cases
        .iter()
        .map(|c| {
            let mut l = resistor_cells(c);
            l.push(c.scheme.to_string());
            l.extend(c.temperatures().iter().map(|&t| sci3(t)));
            l
        })
        .collect();
    write_aligned(sink, &report.title, &header, &body)
}

/// Write `report` to `sink` in the requested format.
pub fn write_report<W: Write>(report: &ExperimentReport, format: ReportFormat, mut sink: W) -> Result<()> {
    match format {
        ReportFormat::Csv => write_results_csv(report, &mut sink),
        ReportFormat::TemperatureCsv => write_temperature_csv(report, &mut sink),
        ReportFormat::Table => write_results_table(report, &mut sink),
        ReportFormat::TemperatureTable => write_temperature_table(report, &mut sink),
    }?;
    sink.flush()?;
    Ok(())
}

/// Render `report` into a byte buffer.
pub fn emit_report(report: &ExperimentReport, format: ReportFormat) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_report(report, format, &mut buf)?;
    Ok(buf)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::{builtin_case, run_experiment, DefenseSpec, SweepSpec};

    fn tiny(defense: bool) -> ExperimentReport {
        let sweep = SweepSpec {
            injection_factors: vec![0.1, 0.2],
            gammas: vec![100, 200],
            n_beps: 20,
            repetitions: 2,
            master_seed: 5,
            defense: defense.then_some(DefenseSpec { epsilon_rel: 1e-6 }),
        };
        let cases = [builtin_case('A').unwrap(), builtin_case('E').unwrap()];
        run_experiment("demo", &cases, &sweep).unwrap()
    }

    #[test]
    fn csv_header_and_shape() {
        let text = String::from_utf8(emit_report(&tiny(false), ReportFormat::Csv).unwrap()).unwrap();
        let lines: Vec<&str> = text.split('\n').collect();
        assert_eq!(
            lines[0],
            "case_id,attack,injection_factor,gamma,p_e_mean,p_e_std,n_beps,repetitions"
        );
        assert_eq!(lines.len(), 1 + 8 + 1);
        assert_eq!(*lines.last().unwrap(), "");
        assert!(!text.contains('\r'));
        assert!(lines[1].starts_with("A,current_injection,0.1,100,"));
        assert!(lines[8].starts_with("E,voltage_insertion,0.2,200,"));
        assert!(lines[1].ends_with(",20,2"));
    }

    #[test]
    fn csv_round_trips_values() {
        let report = tiny(false);
        let text = String::from_utf8(emit_report(&report, ReportFormat::Csv).unwrap()).unwrap();
        let mut rdr = csv::Reader::from_reader(text.as_bytes());
        for (rec, row) in rdr.records().zip(&report.rows) {
            let rec = rec.unwrap();
            assert_eq!(rec[4].parse::<f64>().unwrap(), row.p_e_mean);
            assert_eq!(rec[5].parse::<f64>().unwrap(), row.p_e_std);
        }
    }

    #[test]
    fn defense_columns_only_when_enabled() {
        let text = String::from_utf8(emit_report(&tiny(true), ReportFormat::Csv).unwrap()).unwrap();
        let header = text.lines().next().unwrap();
        assert!(header.ends_with(",detected_fraction,discarded_rate,p_e_undetected"));
        let first = text.lines().nth(1).unwrap();
        // Every bit is flagged, so nothing remains to score.
        assert!(first.ends_with(",1,1,"), "{first}");
    }

    #[test]
    fn temperature_outputs() {
        let report = tiny(false);
        let text = String::from_utf8(emit_report(&report, ReportFormat::TemperatureCsv).unwrap()).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), TEMPERATURE_HEADER.join(","));
        assert_eq!(
            lines.next().unwrap(),
            "A,ideal KLJN,9000,1000,9000,1000,1.81e16,1.81e16,1.81e16,1.81e16"
        );
        let table = String::from_utf8(emit_report(&report, ReportFormat::TemperatureTable).unwrap()).unwrap();
        assert!(table.contains("1.81e16"));
        assert!(table.starts_with("demo\n"));
    }

    #[test]
    fn console_table_layout() {
        let text = String::from_utf8(emit_report(&tiny(false), ReportFormat::Table).unwrap()).unwrap();
        assert!(text.contains("p_E γ=100"));
        assert!(text.contains("p_E γ=200"));
        assert!(text.contains("10%"));
        assert_eq!(text.lines().count(), 3 + 4);
    }

    #[test]
    fn sci3_formatting() {
        assert_eq!(sci3(2.7160e16), "2.72e16");
        assert_eq!(sci3(7.2422e14), "7.24e14");
    }

    #[test]
    fn io_errors_surface() {
        struct Broken;
        impl Write for Broken {
            fn write(&mut self, _: &[u8]) -> std::io::Result<usize> {
                Err(std::io::Error::other("closed"))
            }
            fn flush(&mut self) -> std::io::Result<()> {
                Ok(())
            }
        }
        let err = write_report(&tiny(false), ReportFormat::Csv, Broken).unwrap_err();
        assert!(matches!(err, Error::Io(_)), "{err:?}");
    }
}
