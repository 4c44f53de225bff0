//! Benchmark sweeps over instances × formulations × estimators, and the
//! metrics reported for them.

pub mod cli;
pub mod report;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{EstimatorConfig, EstimatorKind};
use crate::formulation::{compile, Formulation};
use crate::instances::{load_bundled, load_instance, reference_optimum, InstanceFormat, MdkpInstance};
use crate::simulator::DEFAULT_QUBIT_CAP;
use crate::vqe::{run_trials, TrialResult, VqeConfig};

/// Δ = 1 − C_VQE / C_true.
pub fn optimality_gap(c_vqe: i64, c_true: i64) -> Result<f64> {
    if c_true <= 0 {
        return Err(Error::Domain(format!("C_true must be positive, got {c_true}")));
    }
    if c_vqe < 0 {
        return Err(Error::Domain(format!("C_VQE must be nonnegative, got {c_vqe}")));
    }
    if c_vqe > c_true {
        return Err(Error::Domain(format!(
            "C_VQE = {c_vqe} exceeds C_true = {c_true}; the reference optimum is wrong"
        )));
    }
    Ok(1.0 - c_vqe as f64 / c_true as f64)
}

/// Five-number summary plus mean. Quartiles interpolate linearly between
/// order statistics, so the median of an even count is the midpoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub count: usize,
    pub mean: f64,
    pub median: f64,
    pub min: f64,
    pub max: f64,
    pub q1: f64,
    pub q3: f64,
    pub iqr: f64,
}

impl SummaryStats {
    pub fn from_values(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let q = |p: f64| {
            let pos = p * (sorted.len() - 1) as f64;
            let lo = pos.floor() as usize;
            let hi = pos.ceil() as usize;
            sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
        };
        let (q1, q3) = (q(0.25), q(0.75));
        Some(Self {
            count: sorted.len(),
            mean: sorted.iter().sum::<f64>() / sorted.len() as f64,
            median: q(0.5),
            min: sorted[0],
            max: sorted[sorted.len() - 1],
            q1,
            q3,
            iqr: q3 - q1,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialSummary {
    pub trial: usize,
    pub feasible: bool,
    pub gap: Option<f64>,
    pub p_star: f64,
    pub nfev: usize,
    pub final_estimate: f64,
    pub objective_value: i64,
    pub quasi_opt: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub instance: String,
    pub formulation: Formulation,
    pub estimator: EstimatorKind,
    pub alpha: f64,
    pub qubits: usize,
    pub c_true: i64,
    pub seed: u64,
    pub per_trial: Vec<TrialSummary>,
    pub gap_stats: Option<SummaryStats>,
    pub p_star_stats: Option<SummaryStats>,
    pub nfev_stats: Option<SummaryStats>,
    pub infeasible_trials: usize,
}

impl RunReport {
    pub fn from_trials(
        instance: &str,
        formulation: Formulation,
        qubits: usize,
        c_true: i64,
        config: &VqeConfig,
        trials: &[TrialResult],
    ) -> Result<Self> {
        let per_trial = trials
            .iter()
            .map(|t| {
                let gap = if t.feasible && c_true > 0 {
                    Some(optimality_gap(t.objective_value, c_true)?)
                } else {
                    None
                };
                Ok(TrialSummary {
                    trial: t.trial_index,
                    feasible: t.feasible,
                    gap,
                    p_star: t.quasi_opt_probability,
                    nfev: t.nfev,
                    final_estimate: t.final_estimate,
                    objective_value: t.objective_value,
                    quasi_opt: t.quasi_opt.to_string(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_summaries(
            instance.to_string(),
            formulation,
            config.estimator,
            qubits,
            c_true,
            config.seed,
            per_trial,
        ))
    }

    pub fn from_summaries(
        instance: String,
        formulation: Formulation,
        estimator: EstimatorConfig,
        qubits: usize,
        c_true: i64,
        seed: u64,
        per_trial: Vec<TrialSummary>,
    ) -> Self {
        let gaps: Vec<f64> = per_trial.iter().filter_map(|t| t.gap).collect();
        let p_stars: Vec<f64> = per_trial.iter().map(|t| t.p_star).collect();
        let nfevs: Vec<f64> = per_trial.iter().map(|t| t.nfev as f64).collect();
        Self {
            instance,
            formulation,
            estimator: estimator.kind,
            alpha: estimator.effective_alpha(),
            qubits,
            c_true,
            seed,
            gap_stats: SummaryStats::from_values(&gaps),
            p_star_stats: SummaryStats::from_values(&p_stars),
            nfev_stats: SummaryStats::from_values(&nfevs),
            infeasible_trials: per_trial.iter().filter(|t| !t.feasible).count(),
            per_trial,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    #[default]
    Csv,
    Json,
}

impl std::str::FromStr for ReportFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            other => Err(Error::Config(format!("unknown report format {other:?}"))),
        }
    }
}

/// Bench configuration; TOML or JSON with the CLI flag names as keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BenchConfig {
    /// Instance files, or names of bundled instances (`"pet2"`).
    pub instances: Vec<String>,
    pub input_format: InstanceFormat,
    pub formulations: Vec<Formulation>,
    /// `"fs"`, `"cvar"` (uses `alpha`) or `"cvar:<alpha>"`.
    pub estimators: Vec<String>,
    pub alpha: f64,
    pub shots: u64,
    pub trials: usize,
    pub seed: u64,
    pub maxfev: usize,
    pub xtol: f64,
    pub cap: usize,
    pub out: Option<PathBuf>,
    pub format: ReportFormat,
}

impl Default for BenchConfig {
    fn default() -> Self {
        let vqe = VqeConfig::default();
        Self {
            instances: Vec::new(),
            input_format: InstanceFormat::Canonical,
            formulations: vec![Formulation::CustomStep],
            estimators: vec!["fs".into(), "cvar".into()],
            alpha: 0.1,
            shots: vqe.shots,
            trials: vqe.trials,
            seed: vqe.seed,
            maxfev: vqe.maxfev,
            xtol: vqe.xtol,
            cap: DEFAULT_QUBIT_CAP,
            out: None,
            format: ReportFormat::Csv,
        }
    }
}

impl BenchConfig {
    /// Parses TOML, or JSON when the path ends in `.json`. Relative instance
    /// paths are resolved against the config file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut config: BenchConfig = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&text)?
        } else {
            toml::from_str(&text).map_err(|e| Error::Config(e.to_string()))?
        };
        if let Some(dir) = path.parent() {
            for inst in &mut config.instances {
                let p = Path::new(inst.as_str());
                if p.is_relative() && !p.exists() && dir.join(p).exists() {
                    *inst = dir.join(p).to_string_lossy().into_owned();
                }
            }
        }
        Ok(config)
    }

    pub fn estimator_configs(&self) -> Result<Vec<EstimatorConfig>> {
        self.estimators
            .iter()
            .map(|e| match e.split_once(':') {
                None if e == "fs" => Ok(EstimatorConfig::fs()),
                None if e == "cvar" => EstimatorConfig::cvar(self.alpha),
                Some(("cvar", a)) => {
                    let alpha = a
                        .parse()
                        .map_err(|_| Error::Config(format!("bad alpha in estimator {e:?}")))?;
                    EstimatorConfig::cvar(alpha)
                }
                _ => Err(Error::Config(format!("unknown estimator {e:?}"))),
            })
            .collect()
    }

    pub fn vqe_config(&self, estimator: EstimatorConfig) -> VqeConfig {
        VqeConfig {
            trials: self.trials,
            maxfev: self.maxfev,
            xtol: self.xtol,
            shots: self.shots,
            estimator,
            seed: self.seed,
            qubit_cap: self.cap,
        }
    }

    pub fn load_instances(&self) -> Result<Vec<MdkpInstance>> {
        self.instances
            .iter()
            .map(|spec| {
                let path = Path::new(spec);
                if path.exists() {
                    load_instance(path, self.input_format)
                } else if !spec.contains(['/', '.']) {
                    load_bundled(spec)
                } else {
                    Err(Error::Io(std::io::Error::new(
                        std::io::ErrorKind::NotFound,
                        format!("instance file {spec} not found"),
                    )))
                }
            })
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.instances.is_empty() {
            return Err(Error::Config("no instances given".into()));
        }
        if self.formulations.is_empty() || self.estimators.is_empty() {
            return Err(Error::Config("need at least one formulation and one estimator".into()));
        }
        for est in self.estimator_configs()? {
            self.vqe_config(est).validate()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedCell {
    pub instance: String,
    pub formulation: Formulation,
    pub qubits: usize,
    pub skipped_reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchOutcome {
    pub reports: Vec<RunReport>,
    pub skipped: Vec<SkippedCell>,
}

pub fn bench(config: &BenchConfig) -> Result<BenchOutcome> {
    config.validate()?;
    let instances = config.load_instances()?;
    bench_instances(&instances, config)
}

/// Runs every (instance, formulation, estimator) cell. Cells whose qubit count
/// exceeds the cap are recorded as skipped; formulations are never substituted.
pub fn bench_instances(instances: &[MdkpInstance], config: &BenchConfig) -> Result<BenchOutcome> {
    let estimators = config.estimator_configs()?;
    let mut reports = Vec::new();
    let mut skipped = Vec::new();
    for inst in instances {
        let mut c_true = None;
        for &formulation in &config.formulations {
            let spec = match compile(inst, formulation) {
                Ok(spec) => spec,
                Err(Error::Overflow(_)) => {
                    skipped.push(SkippedCell {
                        instance: inst.name().to_string(),
                        formulation,
                        qubits: 0,
                        skipped_reason: "overflow".into(),
                    });
                    continue;
                }
                Err(e) => return Err(e),
            };
            let qubits = spec.total_qubits();
            if qubits > config.cap {
                skipped.push(SkippedCell {
                    instance: inst.name().to_string(),
                    formulation,
                    qubits,
                    skipped_reason: "qubit_cap".into(),
                });
                continue;
            }
            let c_true = match c_true {
                Some(c) => c,
                None => *c_true.insert(reference_optimum(inst)?),
            };
            for &estimator in &estimators {
                let vqe = config.vqe_config(estimator);
                let trials = run_trials(&spec, &vqe)?;
                reports.push(RunReport::from_trials(
                    inst.name(),
                    formulation,
                    qubits,
                    c_true,
                    &vqe,
                    &trials,
                )?);
            }
        }
    }
    Ok(BenchOutcome { reports, skipped })
}
