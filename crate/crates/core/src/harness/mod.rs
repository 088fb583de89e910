//! Experiment driver behind the `inpg` binary: batch runs over seeds and
//! variants, CSV logs, run audits and SVG figures.
//!
//! Output layout of a run directory:
//!
//! - `{method}_tau{τ}_seed{seed}.csv`: iterate log (see [`csv`]).
//! - `{method}_tau{τ}_seed{seed}.json`: run summary used by the audit.
//! - `{method}_tau{τ}_seed{seed}.policy.csv`: final policy, one row per agent.
//! - `aggregate_{method}_tau{τ}.csv`: per-row mean over seeds.
//! - `potential.svg`, `ne_gap.svg`, `qre_gap.svg`: written by [`plot_dir`].

pub mod audit;
pub mod csv;
pub mod experiment;
pub mod svg;

use std::path::{Path, PathBuf};

pub use audit::{format_report, CheckGroup, CheckSelection};
pub use experiment::{run_experiment, variants, ExperimentReport, ExperimentSpec, GameSource, RunOutcome, Variant};

use crate::dynamics::{IterateRecord, Method};
use crate::error::{Error, Result};
use svg::{render, Chart, Series};

struct Figure {
    file: &'static str,
    title: &'static str,
    y_label: &'static str,
    log_y: bool,
    column: fn(&IterateRecord) -> f64,
    include: fn(Method) -> bool,
}

const FIGURES: [Figure; 3] = [
    Figure {
        file: "potential.svg",
        title: "Regularized potential",
        y_label: "phi_tau",
        log_y: false,
        column: |r| r.phi_tau,
        include: |m| m != Method::PgDirect,
    },
    Figure {
        file: "ne_gap.svg",
        title: "NE-gap",
        y_label: "ne_gap",
        log_y: true,
        column: |r| r.ne_gap,
        include: |_| true,
    },
    Figure {
        file: "qre_gap.svg",
        title: "QRE-gap",
        y_label: "qre_gap",
        log_y: true,
        column: |r| r.qre_gap,
        include: |m| m == Method::Npg,
    },
];

/// Aggregate CSVs in `dir`, sorted by file name.
pub fn find_aggregates(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| experiment::parse_aggregate_name(p).is_some())
        .collect();
    out.sort();
    Ok(out)
}

/// Renders the figures for the given aggregate CSVs into `out_dir`. A
/// figure with no matching series is omitted; if nothing can be drawn, no
/// file is written.
pub fn plot_files(files: &[PathBuf], out_dir: &Path) -> Result<Vec<PathBuf>> {
    let mut series = Vec::new();
    for path in files {
        let (method, tau) = experiment::parse_aggregate_name(path).ok_or_else(|| Error::Csv {
            path: path.clone(),
            message: "expected a name of the form aggregate_{method}_tau{tau}.csv".into(),
        })?;
        let records = csv::read_log(path)?;
        if records.is_empty() {
            return Err(Error::Csv {
                path: path.clone(),
                message: "no data rows".into(),
            });
        }
        let label = Variant {
            method,
            tau,
            eta: crate::dynamics::StepSize::Auto,
        }
        .label();
        series.push((method, tau, label, records));
    }
    // Legend order: npg by decreasing tau, then mwu, then pg.
    series.sort_by(|a, b| {
        let rank = |m: Method| match m {
            Method::Npg => 0,
            Method::Mwu => 1,
            Method::PgDirect => 2,
        };
        rank(a.0).cmp(&rank(b.0)).then_with(|| b.1.total_cmp(&a.1))
    });
    let mut rendered = Vec::new();
    for fig in &FIGURES {
        let chosen: Vec<Series> = series
            .iter()
            .filter(|(m, ..)| (fig.include)(*m))
            .map(|(_, _, label, recs)| Series {
                label: label.clone(),
                points: recs.iter().map(|r| (r.iter as f64, (fig.column)(r))).collect(),
            })
            .collect();
        if chosen.is_empty() {
            continue;
        }
        let chart = Chart {
            title: fig.title.into(),
            x_label: "iteration".into(),
            y_label: fig.y_label.into(),
            log_y: fig.log_y,
            series: chosen,
        };
        rendered.push((out_dir.join(fig.file), render(&chart)?));
    }
    if rendered.is_empty() {
        return Err(Error::InvalidParameter("no series to plot".into()));
    }
    for (path, svg) in &rendered {
        std::fs::write(path, svg).map_err(|e| Error::io(path, e))?;
    }
    Ok(rendered.into_iter().map(|(p, _)| p).collect())
}

/// [`plot_files`] over every aggregate CSV in `dir`, writing into `dir`.
pub fn plot_dir(dir: &Path) -> Result<Vec<PathBuf>> {
    let files = find_aggregates(dir)?;
    if files.is_empty() {
        return Err(Error::InvalidParameter(format!("no aggregate CSVs in {}", dir.display())));
    }
    plot_files(&files, dir)
}
