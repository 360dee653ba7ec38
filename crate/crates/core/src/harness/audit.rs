//! Re-verification of a CSV written by the harness.

use serde::Serialize;

use super::{BOUND_SLACK, POTENTIAL_SLACK};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct AuditReport {
    pub rows: usize,
    pub bound_checks: usize,
    pub violations: Vec<String>,
    pub invariant_failures: Vec<String>,
}

impl AuditReport {
    pub fn failed(&self) -> bool {
        !self.violations.is_empty() || !self.invariant_failures.is_empty()
    }
}

fn parse_cell(cell: &str, row: usize, col: &str) -> Result<Option<f64>> {
    if cell.is_empty() {
        return Ok(None);
    }
    cell.parse::<f64>()
        .map(Some)
        .map_err(|_| Error::Config(format!("row {row}, column {col}: cannot parse {cell:?}")))
}

/// Check every bound column, the potential column, the action columns and,
/// for single-expert audits, the regret and variance recurrences.
pub fn audit_csv(text: &str) -> Result<AuditReport> {
    let mut lines = text.lines();
    let header: Vec<&str> = lines
        .next()
        .ok_or_else(|| Error::Config("empty CSV".into()))?
        .split(',')
        .collect();
    if header.first() != Some(&"t") {
        return Err(Error::Config("CSV must start with a `t` column".into()));
    }
    let col = |name: &str| header.iter().position(|h| *h == name);
    let losses: Vec<usize> = (1..).map_while(|i| col(&format!("loss_{i}"))).collect();
    let k = losses.len();
    let (prefix, actions): (&str, Vec<usize>) = if col("w_1").is_some() {
        ("w", (1..=k).filter_map(|i| col(&format!("w_{i}"))).collect())
    } else {
        ("u", (1..=k).filter_map(|i| col(&format!("u_{i}"))).collect())
    };
    if actions.len() != k {
        return Err(Error::Config("missing action columns".into()));
    }
    let mut audits = Vec::new();
    for h in &header {
        if let Some(label) = h.strip_prefix("R_") {
            match (col(&format!("V_{label}")), col(&format!("bound_{label}"))) {
                (Some(v), Some(b)) => audits.push((label.to_string(), col(h).unwrap(), v, b)),
                _ => return Err(Error::Config(format!("incomplete audit columns for {label}"))),
            }
        }
    }
    let potential = col("potential");

    let mut report = AuditReport::default();
    let mut prev: Vec<(f64, f64)> = vec![(0.0, 0.0); audits.len()];
    let mut last_phi: Option<f64> = None;
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let row = i + 1;
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != header.len() {
            return Err(Error::Config(format!(
                "row {row} has {} cells, header has {}",
                cells.len(),
                header.len()
            )));
        }
        let get = |c: usize| parse_cell(cells[c], row, header[c]);
        let need = |c: usize| {
            get(c)?.ok_or_else(|| Error::Config(format!("row {row}: empty {}", header[c])))
        };
        let l: Vec<f64> = losses.iter().map(|&c| need(c)).collect::<Result<_>>()?;
        let a: Vec<f64> = actions.iter().map(|&c| need(c)).collect::<Result<_>>()?;
        if prefix == "w" {
            let total: f64 = a.iter().sum();
            if (total - 1.0).abs() > 1e-9 || a.iter().any(|&x| x < 0.0) {
                report
                    .invariant_failures
                    .push(format!("row {row}: weights sum to {total}"));
            }
        } else if a.iter().any(|&x| !(0.0..=1.0).contains(&x)) {
            report.invariant_failures.push(format!("row {row}: usage outside [0, 1]"));
        }
        let mixed: f64 = a.iter().zip(&l).map(|(x, y)| x * y).sum();
        for (j, (label, rc, vc, bc)) in audits.iter().enumerate() {
            let (r, v) = (need(*rc)?, need(*vc)?);
            if let Some(b) = get(*bc)? {
                report.bound_checks += 1;
                if !(r <= b + BOUND_SLACK * b.abs().max(1.0)) {
                    report.violations.push(format!("row {row}: R_{label} = {r} exceeds bound {b}"));
                }
            }
            // Single experts: R and V follow the update recurrence exactly.
            if prefix == "w" {
                if let Some(e) = label.strip_prefix('e').and_then(|s| s.parse::<usize>().ok()) {
                    if (1..=k).contains(&e) {
                        let inst = mixed - l[e - 1];
                        let (pr, pv) = prev[j];
                        let tol = 1e-9 * (1.0 + pr.abs().max(pv));
                        if (r - (pr + inst)).abs() > tol || (v - (pv + inst * inst)).abs() > tol {
                            report
                                .invariant_failures
                                .push(format!("row {row}: R_{label}/V_{label} break the recurrence"));
                        }
                    }
                }
            }
            prev[j] = (r, v);
        }
        if let Some(pc) = potential {
            if let Some(phi) = get(pc)? {
                if !(phi <= POTENTIAL_SLACK) {
                    report.invariant_failures.push(format!("row {row}: potential {phi} > 0"));
                }
                if let Some(p) = last_phi {
                    if !(phi <= p + POTENTIAL_SLACK) {
                        report
                            .invariant_failures
                            .push(format!("row {row}: potential rose from {p} to {phi}"));
                    }
                }
                last_phi = Some(phi);
            }
        }
        report.rows += 1;
    }
    Ok(report)
}
