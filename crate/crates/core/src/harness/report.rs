//! CSV and JSON encodings of bench results.
//!
//! CSV columns:
//! `instance,formulation,estimator,alpha,qubits,trial,feasible,gap,p_star,nfev,final_estimate,seed`.
//! Leading `#` lines carry the config, the statistics convention and any
//! skipped cells.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{BenchConfig, BenchOutcome, RunReport, SkippedCell, SummaryStats};
use crate::error::Result;
use crate::estimators::EstimatorKind;
use crate::formulation::Formulation;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub instance: String,
    pub formulation: Formulation,
    pub estimator: EstimatorKind,
    pub alpha: f64,
    pub qubits: usize,
    pub trial: usize,
    pub feasible: bool,
    pub gap: Option<f64>,
    pub p_star: f64,
    pub nfev: usize,
    pub final_estimate: f64,
    pub seed: u64,
}

pub fn csv_rows(outcome: &BenchOutcome) -> Vec<CsvRow> {
    outcome
        .reports
        .iter()
        .flat_map(|r| {
            r.per_trial.iter().map(move |t| CsvRow {
                instance: r.instance.clone(),
                formulation: r.formulation,
                estimator: r.estimator,
                alpha: r.alpha,
                qubits: r.qubits,
                trial: t.trial,
                feasible: t.feasible,
                gap: t.gap,
                p_star: t.p_star,
                nfev: t.nfev,
                final_estimate: t.final_estimate,
                seed: r.seed,
            })
        })
        .collect()
}

const STATS_NOTE: &str = "# stats: median and quartiles interpolate linearly between order statistics; gap over feasible trials only";

pub fn write_csv<W: Write>(outcome: &BenchOutcome, config: &BenchConfig, mut out: W) -> Result<()> {
    writeln!(out, "# config: {}", serde_json::to_string(config)?)?;
    writeln!(out, "{STATS_NOTE}")?;
    for s in &outcome.skipped {
        writeln!(
            out,
            "# skipped instance={} formulation={} qubits={} skipped_reason={}",
            s.instance,
            s.formulation.label(),
            s.qubits,
            s.skipped_reason
        )?;
    }
    let mut w = csv::Writer::from_writer(out);
    let rows = csv_rows(outcome);
    if rows.is_empty() {
        w.write_record([
            "instance",
            "formulation",
            "estimator",
            "alpha",
            "qubits",
            "trial",
            "feasible",
            "gap",
            "p_star",
            "nfev",
            "final_estimate",
            "seed",
        ])?;
    }
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<CsvRow>> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(input);
    r.deserialize().map(|row| Ok(row?)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JsonReport {
    pub config: BenchConfig,
    pub stats_convention: String,
    pub reports: Vec<RunReport>,
    pub skipped: Vec<SkippedCell>,
}

pub fn write_json<W: Write>(outcome: &BenchOutcome, config: &BenchConfig, mut out: W) -> Result<()> {
    let doc = JsonReport {
        config: config.clone(),
        stats_convention: STATS_NOTE.trim_start_matches("# stats: ").to_string(),
        reports: outcome.reports.clone(),
        skipped: outcome.skipped.clone(),
    };
    serde_json::to_writer_pretty(&mut out, &doc)?;
    writeln!(out)?;
    Ok(())
}

pub fn read_json<R: Read>(input: R) -> Result<JsonReport> {
    Ok(serde_json::from_reader(input)?)
}

/// Aggregate statistics of one bench cell; computable from either encoding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellStats {
    pub instance: String,
    pub formulation: Formulation,
    pub estimator: EstimatorKind,
    pub alpha: f64,
    pub qubits: usize,
    pub gap_stats: Option<SummaryStats>,
    pub p_star_stats: Option<SummaryStats>,
    pub nfev_stats: Option<SummaryStats>,
    pub infeasible_trials: usize,
}

impl RunReport {
    pub fn cell_stats(&self) -> CellStats {
        CellStats {
            instance: self.instance.clone(),
            formulation: self.formulation,
            estimator: self.estimator,
            alpha: self.alpha,
            qubits: self.qubits,
            gap_stats: self.gap_stats,
            p_star_stats: self.p_star_stats,
            nfev_stats: self.nfev_stats,
            infeasible_trials: self.infeasible_trials,
        }
    }
}

/// Regroups CSV rows into cells, preserving first-appearance order.
pub fn cell_stats_from_rows(rows: &[CsvRow]) -> Vec<CellStats> {
    let mut order: Vec<(String, Formulation, EstimatorKind, u64)> = Vec::new();
    let mut groups: BTreeMap<usize, Vec<&CsvRow>> = BTreeMap::new();
    for row in rows {
        let key = (row.instance.clone(), row.formulation, row.estimator, row.alpha.to_bits());
        let slot = match order.iter().position(|k| *k == key) {
            Some(i) => i,
            None => {
                order.push(key);
                order.len() - 1
            }
        };
        groups.entry(slot).or_default().push(row);
    }
    groups
        .into_values()
        .map(|rows| {
            let first = rows[0];
            let gaps: Vec<f64> = rows.iter().filter_map(|r| r.gap).collect();
            let p: Vec<f64> = rows.iter().map(|r| r.p_star).collect();
            let nfev: Vec<f64> = rows.iter().map(|r| r.nfev as f64).collect();
            CellStats {
                instance: first.instance.clone(),
                formulation: first.formulation,
                estimator: first.estimator,
                alpha: first.alpha,
                qubits: first.qubits,
                gap_stats: SummaryStats::from_values(&gaps),
                p_star_stats: SummaryStats::from_values(&p),
                nfev_stats: SummaryStats::from_values(&nfev),
                infeasible_trials: rows.iter().filter(|r| !r.feasible).count(),
            }
        })
        .collect()
}
