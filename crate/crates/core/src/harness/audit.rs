use std::collections::BTreeSet;
use std::fmt::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use super::csv::read_log;
use crate::dynamics::{Check, IterateRecord, Method, RunSummary, TheoremAudit};
use crate::error::{Error, Result};
use crate::numfmt::sig17;

/// Named groups of run checks selectable from the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CheckGroup {
    Monotone,
    Theorem1,
    Sandwich,
    All,
}

impl FromStr for CheckGroup {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "monotone" => Ok(CheckGroup::Monotone),
            "theorem1" => Ok(CheckGroup::Theorem1),
            "sandwich" => Ok(CheckGroup::Sandwich),
            "all" => Ok(CheckGroup::All),
            _ => Err(Error::InvalidParameter(format!(
                "unknown check `{s}` (expected monotone, theorem1, sandwich or all)"
            ))),
        }
    }
}

/// Set of individual check names enabled by a list of groups.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CheckSelection(BTreeSet<&'static str>);

impl CheckSelection {
    pub fn new(groups: &[CheckGroup]) -> Self {
        let mut set = BTreeSet::new();
        for g in groups {
            let names: &[&'static str] = match g {
                CheckGroup::Monotone => &["monotone"],
                CheckGroup::Theorem1 => &["theorem1", "kl_sum", "corollary_initial"],
                CheckGroup::Sandwich => &["sandwich"],
                CheckGroup::All => &["monotone", "theorem1", "kl_sum", "corollary_initial", "sandwich"],
            };
            set.extend(names.iter().copied());
        }
        Self(set)
    }

    pub fn all() -> Self {
        Self::new(&[CheckGroup::All])
    }

    pub fn enabled(&self, name: &str) -> bool {
        self.0.contains(name)
    }
}

/// Human-readable report for one run; also returns whether any enabled
/// check failed.
pub fn format_report(stem: &str, summary: &RunSummary, audit: &TheoremAudit, selection: &CheckSelection) -> (String, bool) {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "run {stem}: method {}, tau {}, eta {}, T {}",
        summary.method,
        sig17(summary.tau),
        sig17(summary.eta),
        summary.iterations
    );
    let _ = writeln!(s, "  avg ne-gap          {}", sig17(summary.avg_ne_gap));
    let _ = writeln!(s, "  final ne-gap        {}", sig17(summary.final_ne_gap));
    if summary.method == Method::Npg {
        let _ = writeln!(s, "  avg qre-gap         {}", sig17(audit.avg_qre_gap));
        let _ = writeln!(
            s,
            "  best qre-gap        {} at t = {}",
            sig17(summary.best_qre_gap),
            summary.best_qre_iter
        );
        let _ = writeln!(s, "  theorem1 rhs        {}", sig17(audit.theorem1_rhs));
        let _ = writeln!(
            s,
            "  corollary T         {}  (iterations the uniform-start bound needs for the measured average)",
            sig17(audit.corollary_iterations)
        );
        let _ = writeln!(s, "  sandwich slack      {}  (max ne - qre - tau log|A|)", sig17(summary.sandwich_max));
        let _ = writeln!(s, "  min monotone slack  {}", sig17(summary.monotone_min_slack));
    } else {
        let _ = writeln!(s, "  regularized checks skipped for {}", summary.method);
    }
    let mut failed = false;
    for c in &audit.checks {
        let on = selection.enabled(c.name);
        let line = match &c.check {
            Check::Pass { lhs, rhs } => format!("{} <= {}", sig17(*lhs), sig17(*rhs)),
            Check::Fail { lhs, rhs } => format!("{} > {}", sig17(*lhs), sig17(*rhs)),
            Check::NotApplicable(why) => format!("not applicable: {why}"),
        };
        let tag = match (&c.check, on) {
            (_, false) => "off ",
            (Check::Pass { .. }, true) => "PASS",
            (Check::Fail { .. }, true) => {
                failed = true;
                "FAIL"
            }
            (Check::NotApplicable(_), true) => "SKIP",
        };
        let _ = writeln!(s, "  [{tag}] {:<18} {line}", c.name);
    }
    (s, failed)
}

pub fn read_summary(path: &Path) -> Result<RunSummary> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Csv {
        path: path.to_path_buf(),
        message: format!("bad run summary: {e}"),
    })
}

/// A completed run on disk: `{stem}.json` next to `{stem}.csv`.
#[derive(Debug, Clone)]
pub struct StoredRun {
    pub stem: String,
    pub summary: RunSummary,
    pub records: Vec<IterateRecord>,
}

pub fn load_run(json_path: &Path) -> Result<StoredRun> {
    let summary = read_summary(json_path)?;
    let csv_path = json_path.with_extension("csv");
    let records = read_log(&csv_path)?;
    let stem = json_path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or_default()
        .to_string();
    Ok(StoredRun { stem, summary, records })
}

/// Every run summary in `dir`, sorted by file name.
pub fn find_runs(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json") && p.with_extension("csv").exists())
        .collect();
    out.sort();
    Ok(out)
}
