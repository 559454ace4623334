//! Monte Carlo experiments and their CSV reports.
//!
//! Replication `r` of every experiment draws its driving path from stream
//! `r` of the configured seed, so all sweep values within one experiment
//! share the same noise and the output does not depend on thread count.

mod config;
mod experiments;
pub mod stats;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

pub use config::{ExperimentConfig, ExperimentKind, RawConfig, KEYS};
pub use experiments::{
    median_gap_threshold, run_consistency, run_covariance_audit, run_limit_dist, run_maximal,
    BIAS_ALLOWANCE_Q2, INDEPENDENT_STREAM_OFFSET,
};

pub const CONSISTENCY_HEADER: &[&str] = &[
    "eps",
    "delta",
    "theta0",
    "q",
    "H",
    "n",
    "reps",
    "p_hat",
    "se",
    "bound_coeff",
    "g_delta",
    "m_hat",
    "threshold_ok",
];
pub const LIMIT_DIST_HEADER: &[&str] = &[
    "eps",
    "theta0",
    "q",
    "H",
    "n",
    "reps",
    "med_abs_gap",
    "q90_abs_gap",
    "ks_stat",
    "ks_p",
];
pub const MAXIMAL_HEADER: &[&str] = &[
    "T",
    "p",
    "q",
    "H",
    "n",
    "reps",
    "moment_hat",
    "se",
    "ratio_to_TpH",
];
pub const COVARIANCE_AUDIT_HEADER: &[&str] = &["s", "t", "target", "estimate", "se", "z_score"];

pub fn header_for(kind: ExperimentKind) -> &'static [&'static str] {
    match kind {
        ExperimentKind::Consistency => CONSISTENCY_HEADER,
        ExperimentKind::LimitDist => LIMIT_DIST_HEADER,
        ExperimentKind::Maximal => MAXIMAL_HEADER,
        ExperimentKind::CovarianceAudit => COVARIANCE_AUDIT_HEADER,
    }
}

/// One acceptance band evaluated on an experiment's output.
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            pass,
            detail: detail.into(),
        }
    }

    pub fn line(&self) -> String {
        format!(
            "{} {}: {}",
            if self.pass { "PASS" } else { "FAIL" },
            self.name,
            self.detail
        )
    }
}

/// Result table of one experiment plus its band checks.
#[derive(Clone, Debug)]
pub struct Report {
    pub kind: ExperimentKind,
    pub rows: Vec<Vec<String>>,
    pub checks: Vec<Check>,
    /// Extra `#` comment lines for the CSV header.
    pub notes: Vec<String>,
}

impl Report {
    pub fn header(&self) -> &'static [&'static str] {
        header_for(self.kind)
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    /// Column `name` of every row parsed as a number.
    pub fn column(&self, name: &str) -> Vec<f64> {
        let Some(j) = self.header().iter().position(|h| *h == name) else {
            return Vec::new();
        };
        self.rows
            .iter()
            .map(|r| r[j].parse().unwrap_or(f64::NAN))
            .collect()
    }

    pub fn to_csv(&self, cfg: &ExperimentConfig) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# hermite-ou experiment {}", self.kind);
        for line in cfg.to_lines().iter().chain(&self.notes) {
            let _ = writeln!(out, "# {line}");
        }
        out.push_str(&self.header().join(","));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    /// Writes `<out_dir>/<kind>.csv`, reads it back and validates the schema.
    pub fn write(&self, cfg: &ExperimentConfig) -> Result<PathBuf> {
        std::fs::create_dir_all(&cfg.out_dir).map_err(|e| Error::io(&cfg.out_dir, e))?;
        let path = cfg.out_dir.join(format!("{}.csv", self.kind));
        std::fs::write(&path, self.to_csv(cfg)).map_err(|e| Error::io(&path, e))?;
        validate_csv_file(&path, self.kind)?;
        Ok(path)
    }
}

/// Checks that `text` has the exact header of `kind`, followed by at least
/// one row of the right width whose numeric columns parse.
pub fn validate_csv(
    text: &str,
    kind: ExperimentKind,
) -> std::result::Result<usize, (usize, String)> {
    let header = header_for(kind);
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.starts_with('#') && !l.trim().is_empty());
    let Some((hl, h)) = lines.next() else {
        return Err((1, "missing header".into()));
    };
    if h != header.join(",") {
        return Err((
            hl + 1,
            format!("header `{h}` does not match `{}`", header.join(",")),
        ));
    }
    let mut rows = 0;
    for (idx, line) in lines {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != header.len() {
            return Err((
                idx + 1,
                format!("expected {} fields, found {}", header.len(), fields.len()),
            ));
        }
        for (name, f) in header.iter().zip(&fields) {
            let ok = match *name {
                "threshold_ok" => *f == "true" || *f == "false",
                // Wiener-integral rows carry integrand labels here.
                "s" | "t" if kind == ExperimentKind::CovarianceAudit => !f.is_empty(),
                _ => f.parse::<f64>().is_ok(),
            };
            if !ok {
                return Err((idx + 1, format!("bad value `{f}` in column `{name}`")));
            }
        }
        rows += 1;
    }
    if rows == 0 {
        return Err((hl + 1, "no data rows".into()));
    }
    Ok(rows)
}

pub fn validate_csv_file(path: &Path, kind: ExperimentKind) -> Result<usize> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    validate_csv(&text, kind).map_err(|(line, message)| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    })
}

/// Runs the experiment named by `cfg.kind`.
pub fn run(cfg: &ExperimentConfig) -> Result<Report> {
    match cfg.kind {
        ExperimentKind::Consistency => run_consistency(cfg),
        ExperimentKind::LimitDist => run_limit_dist(cfg),
        ExperimentKind::Maximal => run_maximal(cfg),
        ExperimentKind::CovarianceAudit => run_covariance_audit(cfg),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schema_validation() {
        let good = "# c\nT,p,q,H,n,reps,moment_hat,se,ratio_to_TpH\n1,1,1,0.7,512,10,1.0,0.1,1.0\n";
        assert_eq!(validate_csv(good, ExperimentKind::Maximal).unwrap(), 1);
        let short = "T,p,q,H,n,reps,moment_hat,se,ratio_to_TpH\n1,1\n";
        assert_eq!(
            validate_csv(short, ExperimentKind::Maximal).unwrap_err().0,
            2
        );
        assert!(validate_csv(good, ExperimentKind::Consistency).is_err());
        let labels = "s,t,target,estimate,se,z_score\nexp(-u),1,0.6,0.61,0.01,1\n";
        assert!(validate_csv(labels, ExperimentKind::CovarianceAudit).is_ok());
    }
}
