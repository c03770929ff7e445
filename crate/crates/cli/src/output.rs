//! Text and CSV rendering.

use std::fmt::Write as _;
use std::path::Path;

use ringqed::config::RatioKind;
use ringqed::protocols::Table;
use ringqed::{coupling_table, raman_coefficients, validate_config, Branch, NetworkConfig};

use crate::CliResult;

fn emit(text: &str, out: Option<&Path>) -> CliResult<()> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| ringqed::Error::Io(e).into()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Scientific notation with negative zero folded into zero.
fn num(x: f64) -> String {
    format!("{:e}", x + 0.0)
}

fn branch_name(b: Branch) -> &'static str {
    match b {
        Branch::Excited => "e",
        Branch::Ground => "g",
    }
}

fn pair_csv(config: &NetworkConfig, table: &ringqed::CouplingTable) -> String {
    let mut s = String::from("l,m,chi_re,chi_im,chi_abs\n");
    for l in 1..=config.n {
        for m in l + 1..=config.n {
            let chi = table.chi(l, m);
            let _ = writeln!(
                s,
                "{l},{m},{},{},{}",
                num(chi.re),
                num(chi.im),
                num(chi.norm())
            );
        }
    }
    s
}

/// Stark shifts, pair couplings and Raman coefficients on stdout; `out`
/// receives the pair table alone.
pub fn couplings(config: &NetworkConfig, out: Option<&Path>) -> CliResult<()> {
    let table = coupling_table(config)?;
    let raman = raman_coefficients(config)?;
    let pairs = pair_csv(config, &table);

    let mut s = String::from("# stark shifts\natom,epsilon\n");
    for l in 1..=config.n {
        let _ = writeln!(s, "{l},{}", num(table.epsilon(l)));
    }
    s.push_str("\n# pair couplings\n");
    s.push_str(&pairs);
    s.push_str("\n# raman coefficients\nk,atom,slot,branch,rabi,detuning,eta,xi,lambda,delta,mu\n");
    for e in &raman.entries {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{}",
            e.k,
            e.atom,
            e.slot,
            branch_name(e.branch),
            num(e.rabi),
            num(e.detuning),
            num(e.eta),
            num(e.xi),
            num(e.lambda),
            num(e.delta),
            num(e.mu)
        );
    }
    if let Some(path) = out {
        emit(&pairs, Some(path))?;
    }
    print!("{s}");
    Ok(())
}

/// Hierarchy report. Violations are warnings, not failures.
pub fn validate(config: &NetworkConfig) -> CliResult<()> {
    let report = validate_config(config)?;
    let mut s = String::new();
    match report.min_ratio() {
        Some(r) => {
            let _ = writeln!(s, "min ratio: {r}");
        }
        None => s.push_str("min ratio: none (no drives)\n"),
    }
    if let Some(r) = report.min_of_kind(RatioKind::RamanDetuningOverCoupling) {
        let _ = writeln!(s, "min delta/lambda: {r}");
    }
    if let Some(r) = report.min_stark_ratio() {
        let _ = writeln!(s, "min Stark ratio: {r}");
    }
    for r in &report.warnings {
        let _ = writeln!(s, "warning: {r} below {}", ringqed::HIERARCHY_THRESHOLD);
    }
    for r in &report.notices {
        let _ = writeln!(s, "notice: {r} below {}", ringqed::HIERARCHY_THRESHOLD);
    }
    if report.warnings.is_empty() {
        s.push_str("hierarchy satisfied\n");
    }
    print!("{s}");
    Ok(())
}

/// CSV with a header row; nothing is written if rendering fails.
pub fn write_table(table: &Table, out: Option<&Path>) -> CliResult<()> {
    let mut s = table.columns.join(",");
    s.push('\n');
    for row in &table.rows {
        let cells: Vec<String> = row.iter().map(|x| num(*x)).collect();
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    emit(&s, out)
}

pub fn summary(values: &[(String, f64)], notes: &[String]) {
    for (k, v) in values {
        eprintln!("{k} = {}", num(*v));
    }
    for n in notes {
        eprintln!("note: {n}");
    }
}
