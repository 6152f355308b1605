//! Performance profiles over a table of runs.
//!
//! For each problem the metric of every variant is divided by the best
//! value any variant achieved on it (the division is flipped for values
//! where larger is better), so the best variant scores 1. A variant's
//! profile at `tau` is the fraction of problems it scores within `tau` on.
//! Runs that did not converge, or that are missing, score `+inf`.

use std::collections::{BTreeMap, BTreeSet};

use clap::ValueEnum;
use serde::Serialize;

use crate::bench::RunRecord;
use crate::error::{CliError, Result};
use crate::input::Kind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Metric {
    /// Wall-clock seconds, smaller is better.
    Time,
    /// Rounded solution value; better is larger for cuts and cut norms,
    /// smaller for bisections. Problems without rounding are skipped.
    Rounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub variant: String,
    /// Performance ratio on each problem, ascending.
    pub ratios: Vec<f64>,
}

impl Curve {
    /// Fraction of problems with ratio at most `tau`.
    pub fn fraction(&self, tau: f64) -> f64 {
        let within = self.ratios.partition_point(|&r| r <= tau);
        within as f64 / self.ratios.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    pub problems: Vec<String>,
    pub curves: Vec<Curve>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfilePoint {
    pub variant: String,
    pub tau: f64,
    pub fraction: f64,
}

impl Profile {
    pub fn curve(&self, variant: &str) -> Option<&Curve> {
        self.curves.iter().find(|c| c.variant == variant)
    }

    /// Every curve evaluated at every finite ratio that occurs, plus 1.
    pub fn table(&self) -> Vec<ProfilePoint> {
        let mut taus: Vec<f64> = self
            .curves
            .iter()
            .flat_map(|c| c.ratios.iter().copied())
            .filter(|r| r.is_finite())
            .chain([1.0])
            .collect();
        taus.sort_by(f64::total_cmp);
        taus.dedup();
        self.curves
            .iter()
            .flat_map(|c| {
                taus.iter().map(move |&tau| ProfilePoint {
                    variant: c.variant.clone(),
                    tau,
                    fraction: c.fraction(tau),
                })
            })
            .collect()
    }
}

fn metric_value(rec: &RunRecord, metric: Metric) -> Option<f64> {
    if !rec.solved() {
        return None;
    }
    let v = match metric {
        Metric::Time => Some(rec.wall_seconds),
        Metric::Rounded => rec.rounded,
    };
    v.filter(|x| x.is_finite())
}

fn ratio(value: Option<f64>, best: f64, maximize: bool) -> f64 {
    let Some(v) = value else {
        return f64::INFINITY;
    };
    if v == best {
        return 1.0;
    }
    let r = if maximize { best / v } else { v / best };
    if r.is_finite() && r >= 1.0 {
        r
    } else {
        f64::INFINITY
    }
}

pub fn perf_profile(records: &[RunRecord], metric: Metric) -> Result<Profile> {
    let mut kinds: BTreeMap<&str, Kind> = BTreeMap::new();
    let mut values: BTreeMap<(&str, &str), Option<f64>> = BTreeMap::new();
    let mut variants: BTreeSet<&str> = BTreeSet::new();
    for rec in records {
        if *kinds.entry(&rec.problem).or_insert(rec.kind) != rec.kind {
            return Err(CliError::Invalid(format!(
                "problem {:?} has mixed kinds",
                rec.problem
            )));
        }
        if values
            .insert((&rec.problem, &rec.variant), metric_value(rec, metric))
            .is_some()
        {
            return Err(CliError::Invalid(format!(
                "duplicate run of {:?} with variant {:?}",
                rec.problem, rec.variant
            )));
        }
        variants.insert(&rec.variant);
    }
    let problems: Vec<(&str, bool)> = kinds
        .into_iter()
        .filter_map(|(p, kind)| match metric {
            Metric::Time => Some((p, false)),
            Metric::Rounded => kind.rounding_maximizes().map(|max| (p, max)),
        })
        .collect();
    if problems.is_empty() {
        return Err(CliError::Invalid("no runs to profile".into()));
    }
    let mut curves: Vec<Curve> = variants
        .iter()
        .map(|v| Curve {
            variant: v.to_string(),
            ratios: Vec::with_capacity(problems.len()),
        })
        .collect();
    for &(p, maximize) in &problems {
        let row: Vec<Option<f64>> = variants
            .iter()
            .map(|&v| values.get(&(p, v)).copied().flatten())
            .collect();
        let best = row
            .iter()
            .flatten()
            .copied()
            .reduce(if maximize { f64::max } else { f64::min });
        for (curve, value) in curves.iter_mut().zip(row) {
            curve
                .ratios
                .push(best.map_or(f64::INFINITY, |b| ratio(value, b, maximize)));
        }
    }
    for c in &mut curves {
        c.ratios.sort_by(f64::total_cmp);
    }
    Ok(Profile {
        problems: problems.into_iter().map(|(p, _)| p.to_string()).collect(),
        curves,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratio_edge_cases() {
        assert_eq!(ratio(None, 1.0, false), f64::INFINITY);
        assert_eq!(ratio(Some(0.0), 0.0, false), 1.0);
        assert_eq!(ratio(Some(2.0), 0.0, false), f64::INFINITY);
        assert_eq!(ratio(Some(2.0), 4.0, true), 2.0);
        assert_eq!(ratio(Some(0.0), 4.0, true), f64::INFINITY);
    }

    #[test]
    fn fraction_is_a_step_function() {
        let c = Curve {
            variant: "a".into(),
            ratios: vec![1.0, 2.0, f64::INFINITY],
        };
        assert_eq!(c.fraction(0.5), 0.0);
        assert_eq!(c.fraction(1.0), 1.0 / 3.0);
        assert_eq!(c.fraction(1.999), 1.0 / 3.0);
        assert_eq!(c.fraction(2.0), 2.0 / 3.0);
        assert_eq!(c.fraction(1e300), 2.0 / 3.0);
    }
}
