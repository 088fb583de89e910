//! Iterate-log CSV: header `iter,phi_tau,ne_gap,qre_gap,jeffrey_step,avg_ne_gap,avg_qre_gap`,
//! one row per logged iteration, reals with 17 significant digits.

use std::path::Path;

use crate::dynamics::IterateRecord;
use crate::error::{Error, Result};
use crate::numfmt::sig17;

pub const COLUMNS: [&str; 7] = ["iter", "phi_tau", "ne_gap", "qre_gap", "jeffrey_step", "avg_ne_gap", "avg_qre_gap"];

pub fn header() -> String {
    COLUMNS.join(",")
}

pub fn format_log(records: &[IterateRecord]) -> String {
    let mut out = header();
    out.push('\n');
    for r in records {
        let fields = [r.phi_tau, r.ne_gap, r.qre_gap, r.jeffrey_step, r.avg_ne_gap, r.avg_qre_gap];
        out.push_str(&r.iter.to_string());
        for f in fields {
            out.push(',');
            out.push_str(&sig17(f));
        }
        out.push('\n');
    }
    out
}

/// Parses a log, locating columns by name so extra columns are tolerated.
pub fn parse_log(text: &str, path: &Path) -> Result<Vec<IterateRecord>> {
    let err = |message: String| Error::Csv {
        path: path.to_path_buf(),
        message,
    };
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let head: Vec<&str> = lines
        .next()
        .ok_or_else(|| err("empty file".into()))?
        .split(',')
        .map(str::trim)
        .collect();
    let mut idx = [0usize; 7];
    for (k, name) in COLUMNS.iter().enumerate() {
        idx[k] = head
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| err(format!("missing column `{name}`")))?;
    }
    let mut records = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() != head.len() {
            return Err(err(format!("row {} has {} fields, expected {}", lineno + 2, cells.len(), head.len())));
        }
        let real = |k: usize| -> Result<f64> {
            cells[idx[k]]
                .parse::<f64>()
                .map_err(|_| err(format!("row {}: bad number `{}`", lineno + 2, cells[idx[k]])))
        };
        let iter = cells[idx[0]]
            .parse::<usize>()
            .map_err(|_| err(format!("row {}: bad iteration `{}`", lineno + 2, cells[idx[0]])))?;
        records.push(IterateRecord {
            iter,
            phi_tau: real(1)?,
            ne_gap: real(2)?,
            qre_gap: real(3)?,
            jeffrey_step: real(4)?,
            avg_ne_gap: real(5)?,
            avg_qre_gap: real(6)?,
        });
    }
    Ok(records)
}

pub fn read_log(path: &Path) -> Result<Vec<IterateRecord>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_log(&text, path)
}

/// Column-wise mean across runs over the longest common prefix of logged
/// iterations.
pub fn aggregate(logs: &[Vec<IterateRecord>]) -> Result<Vec<IterateRecord>> {
    let first = logs
        .first()
        .ok_or_else(|| Error::InvalidParameter("nothing to aggregate".into()))?;
    let len = logs
        .iter()
        .map(|log| log.iter().zip(first).take_while(|(a, b)| a.iter == b.iter).count())
        .min()
        .unwrap_or(0);
    let k = logs.len() as f64;
    Ok((0..len)
        .map(|row| {
            let mean = |f: fn(&IterateRecord) -> f64| logs.iter().map(|log| f(&log[row])).sum::<f64>() / k;
            IterateRecord {
                iter: first[row].iter,
                phi_tau: mean(|r| r.phi_tau),
                ne_gap: mean(|r| r.ne_gap),
                qre_gap: mean(|r| r.qre_gap),
                jeffrey_step: mean(|r| r.jeffrey_step),
                avg_ne_gap: mean(|r| r.avg_ne_gap),
                avg_qre_gap: mean(|r| r.avg_qre_gap),
            }
        })
        .collect())
}
