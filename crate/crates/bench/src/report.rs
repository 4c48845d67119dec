//! Cross-run reports. Manifests are verified before their summaries are
//! read; runs whose `summary.csv` digests coincide are merged once.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::experiments::SummaryRow;
use crate::manifest::{manifest_path, ManifestError, RunManifest};
use crate::summary::{aggregate, headline_delta, read_summary, write_aggregates, write_summary, AggregateRow};
use crate::BenchError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaCheck {
    pub fine: f64,
    pub large: f64,
}

impl DeltaCheck {
    pub fn pass(&self) -> bool {
        self.fine >= self.large
    }
}

#[derive(Debug, Clone)]
pub struct Report {
    /// Manifest files merged, after deduplication.
    pub runs: Vec<PathBuf>,
    pub duplicates: usize,
    pub rows: Vec<SummaryRow>,
    pub aggregates: Vec<AggregateRow>,
    pub delta_check: Option<DeltaCheck>,
}

pub fn build_report(paths: &[PathBuf]) -> Result<Report, BenchError> {
    let mut seen: Vec<String> = Vec::new();
    let (mut runs, mut rows, mut duplicates) = (Vec::new(), Vec::new(), 0);
    for p in paths {
        let path = manifest_path(p);
        let manifest = RunManifest::load(&path)?;
        let dir = path.parent().unwrap_or(Path::new(".")).to_path_buf();
        manifest.verify(&dir)?;
        let summary = manifest.artifact("summary.csv").ok_or_else(|| ManifestError::NoSummary { path: path.clone() })?;
        if seen.contains(&summary.sha256) {
            duplicates += 1;
            continue;
        }
        seen.push(summary.sha256.clone());
        let file = dir.join("summary.csv");
        let bytes = fs::read(&file).map_err(|source| ManifestError::Io { path: file, source })?;
        rows.extend(read_summary(&bytes[..])?);
        runs.push(path);
    }
    let aggregates = aggregate(&rows);
    let delta_check = match (headline_delta(&aggregates, "fine_grained"), headline_delta(&aggregates, "large_scale")) {
        (Some(fine), Some(large)) => Some(DeltaCheck { fine, large }),
        _ => None,
    };
    Ok(Report { runs, duplicates, rows, aggregates, delta_check })
}

impl Report {
    pub fn summary_csv(&self) -> Result<Vec<u8>, BenchError> {
        let mut buf = Vec::new();
        write_summary(&self.rows, &mut buf)?;
        Ok(buf)
    }

    pub fn median_csv(&self) -> Result<Vec<u8>, BenchError> {
        let mut buf = Vec::new();
        write_aggregates(&self.aggregates, &mut buf)?;
        Ok(buf)
    }

    /// Fixed-width table of the aggregates followed by the Δ comparison.
    pub fn text(&self) -> String {
        let header = ["figure", "regime", "objective", "strength", "param", "metric", "n", "median", "min", "max", "delta"];
        let cells: Vec<[String; 11]> = self
            .aggregates
            .iter()
            .map(|a| {
                [
                    a.figure.clone(),
                    a.regime.clone(),
                    a.objective.clone(),
                    a.strength.to_string(),
                    a.param.clone(),
                    a.metric.clone(),
                    a.seeds.to_string(),
                    format!("{:.4}", a.median),
                    format!("{:.4}", a.min),
                    format!("{:.4}", a.max),
                    a.delta.map(|d| format!("{d:+.4}")).unwrap_or_default(),
                ]
            })
            .collect();
        let mut width = header.map(str::len);
        for row in &cells {
            for (w, c) in width.iter_mut().zip(row) {
                *w = (*w).max(c.len());
            }
        }
        let mut s = String::new();
        let line = |s: &mut String, row: &[&str]| {
            let parts: Vec<String> = row.iter().zip(&width).map(|(c, w)| format!("{c:<w$}")).collect();
            let _ = writeln!(s, "{}", parts.join("  ").trim_end());
        };
        line(&mut s, &header);
        for row in &cells {
            line(&mut s, &row.iter().map(String::as_str).collect::<Vec<_>>());
        }
        let _ = writeln!(s, "\nruns merged: {} (duplicates skipped: {})", self.runs.len(), self.duplicates);
        match self.delta_check {
            Some(d) => {
                let verdict = if d.pass() { "PASS" } else { "FAIL" };
                let _ = writeln!(s, "delta(fine) = {:+.4}  delta(large) = {:+.4}  fine >= large: {verdict}", d.fine, d.large);
            }
            None => {
                let _ = writeln!(s, "delta(fine) vs delta(large): needs MaxEnt-vs-baseline accuracy rows for both regimes");
            }
        }
        s
    }
}
