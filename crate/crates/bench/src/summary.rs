//! Long-format result rows and their per-group medians.
//!
//! `summary.csv` columns: `figure,regime,objective,strength,param,metric,seed,value`.
//! `summary_median.csv` has one row per `(figure, regime, objective,
//! strength, param, metric)` group with `seeds,median,min,max,delta`, where
//! `delta` is the group median minus the baseline median for the same
//! `(figure, regime, param, metric)`. The baseline is plain cross-entropy
//! (`ce`), or `maxent` at strength 0 when no `ce` arm exists.

use std::collections::HashMap;
use std::io::{Read, Write};

use crate::experiments::{median, SummaryRow};

pub const SUMMARY_HEADER: [&str; 8] = ["figure", "regime", "objective", "strength", "param", "metric", "seed", "value"];

fn writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out)
}

pub fn write_summary<W: Write>(rows: &[SummaryRow], out: W) -> csv::Result<()> {
    let mut w = writer(out);
    w.write_record(SUMMARY_HEADER)?;
    for r in rows {
        w.write_record([
            r.figure.as_str(),
            &r.regime,
            &r.objective,
            &r.strength.to_string(),
            &r.param,
            &r.metric,
            &r.seed.to_string(),
            &r.value.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn bad(line: u64, msg: String) -> csv::Error {
    csv::Error::from(std::io::Error::new(std::io::ErrorKind::InvalidData, format!("summary line {line}: {msg}")))
}

pub fn read_summary<R: Read>(input: R) -> csv::Result<Vec<SummaryRow>> {
    let mut rd = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    if rd.headers()?.iter().ne(SUMMARY_HEADER) {
        return Err(bad(1, "unexpected header".into()));
    }
    let mut rows = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let num = |i: usize| rec[i].parse::<f64>().map_err(|_| bad(line, format!("bad number `{}`", &rec[i])));
        rows.push(SummaryRow {
            figure: rec[0].into(),
            regime: rec[1].into(),
            objective: rec[2].into(),
            strength: num(3)?,
            param: rec[4].into(),
            metric: rec[5].into(),
            seed: rec[6].parse().map_err(|_| bad(line, format!("bad seed `{}`", &rec[6])))?,
            value: num(7)?,
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub figure: String,
    pub regime: String,
    pub objective: String,
    pub strength: f64,
    pub param: String,
    pub metric: String,
    pub seeds: usize,
    pub median: f64,
    pub min: f64,
    pub max: f64,
    pub delta: Option<f64>,
}

impl AggregateRow {
    fn context(&self) -> (&str, &str, &str, &str) {
        (&self.figure, &self.regime, &self.param, &self.metric)
    }

    fn is_baseline(&self) -> bool {
        self.objective == "ce" || (self.objective == "maxent" && self.strength == 0.0)
    }
}

/// Groups rows in first-appearance order.
pub fn aggregate(rows: &[SummaryRow]) -> Vec<AggregateRow> {
    type Key<'a> = (&'a str, &'a str, &'a str, u64, &'a str, &'a str);
    let mut index: HashMap<Key, usize> = HashMap::new();
    let mut groups: Vec<(&SummaryRow, Vec<f64>)> = Vec::new();
    for r in rows {
        let key = (&*r.figure, &*r.regime, &*r.objective, r.strength.to_bits(), &*r.param, &*r.metric);
        let i = *index.entry(key).or_insert_with(|| {
            groups.push((r, Vec::new()));
            groups.len() - 1
        });
        groups[i].1.push(r.value);
    }
    let mut out: Vec<AggregateRow> = groups
        .into_iter()
        .map(|(r, v)| AggregateRow {
            figure: r.figure.clone(),
            regime: r.regime.clone(),
            objective: r.objective.clone(),
            strength: r.strength,
            param: r.param.clone(),
            metric: r.metric.clone(),
            seeds: v.len(),
            median: median(&v),
            min: v.iter().copied().fold(f64::INFINITY, f64::min),
            max: v.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            delta: None,
        })
        .collect();
    let baseline = |out: &[AggregateRow], row: &AggregateRow| {
        let same = |a: &&AggregateRow| a.context() == row.context();
        out.iter()
            .filter(same)
            .find(|a| a.objective == "ce")
            .or_else(|| out.iter().filter(same).find(|a| a.is_baseline()))
            .map(|a| a.median)
    };
    let deltas: Vec<Option<f64>> =
        out.iter().map(|a| if a.is_baseline() { None } else { baseline(&out, a).map(|b| a.median - b) }).collect();
    for (a, d) in out.iter_mut().zip(deltas) {
        a.delta = d;
    }
    out
}

pub fn write_aggregates<W: Write>(rows: &[AggregateRow], out: W) -> csv::Result<()> {
    let mut w = writer(out);
    w.write_record(["figure", "regime", "objective", "strength", "param", "metric", "seeds", "median", "min", "max", "delta"])?;
    for a in rows {
        w.write_record([
            a.figure.as_str(),
            &a.regime,
            &a.objective,
            &a.strength.to_string(),
            &a.param,
            &a.metric,
            &a.seeds.to_string(),
            &a.median.to_string(),
            &a.min.to_string(),
            &a.max.to_string(),
            &a.delta.map(|d| d.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Figures whose plain `val_acc` rows compare a MaxEnt arm against a baseline,
/// in order of preference for the headline gain.
const HEADLINE_FIGURES: [&str; 3] = ["lsr_compare", "top_prob_hist", "ce_vs_val"];

/// Validation-accuracy gain of the positive-strength MaxEnt arm for `regime`.
pub fn headline_delta(rows: &[AggregateRow], regime: &str) -> Option<f64> {
    HEADLINE_FIGURES.iter().find_map(|fig| {
        rows.iter()
            .find(|a| {
                a.figure == *fig
                    && a.regime == regime
                    && a.objective == "maxent"
                    && a.strength > 0.0
                    && a.param.is_empty()
                    && a.metric == "val_acc"
            })
            .and_then(|a| a.delta)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(objective: &str, strength: f64, seed: u64, value: f64) -> SummaryRow {
        SummaryRow {
            figure: "lsr_compare".into(),
            regime: "fine_grained".into(),
            objective: objective.into(),
            strength,
            param: String::new(),
            metric: "val_acc".into(),
            seed,
            value,
        }
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let rows = vec![row("ce", 0.0, 1, 0.1 + 0.2), row("maxent", 1.0, 1, 1.0 / 3.0), row("lsr", 0.1, 2, -0.0)];
        let mut buf = Vec::new();
        write_summary(&rows, &mut buf).unwrap();
        assert_eq!(read_summary(&buf[..]).unwrap(), rows);
        let mut again = Vec::new();
        write_summary(&read_summary(&buf[..]).unwrap(), &mut again).unwrap();
        assert_eq!(buf, again);
    }

    #[test]
    fn aggregates_and_deltas() {
        let mut rows = Vec::new();
        for (s, (c, m)) in [(0.5, 0.6), (0.7, 0.9), (0.6, 0.7)].into_iter().enumerate() {
            rows.push(row("ce", 0.0, s as u64 + 1, c));
            rows.push(row("maxent", 1.0, s as u64 + 1, m));
        }
        let agg = aggregate(&rows);
        assert_eq!(agg.len(), 2);
        assert_eq!((agg[0].median, agg[0].min, agg[0].max, agg[0].delta), (0.6, 0.5, 0.7, None));
        assert_eq!(agg[1].median, 0.7);
        assert!((agg[1].delta.unwrap() - 0.1).abs() < 1e-15);
        assert_eq!(headline_delta(&agg, "fine_grained"), agg[1].delta);
        assert_eq!(headline_delta(&agg, "large_scale"), None);
    }

    #[test]
    fn zero_strength_maxent_is_the_fallback_baseline() {
        let rows = vec![row("maxent", 0.0, 1, 0.5), row("maxent", 1.0, 1, 0.75)];
        let agg = aggregate(&rows);
        assert_eq!(agg[0].delta, None);
        assert_eq!(agg[1].delta, Some(0.25));
    }
}
