//! Variational loop: sampled objective, Powell search and multi-start trials.

pub mod powell;

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{decision_bits, estimate, quasi_optimum_index, EstimatorConfig};
use crate::formulation::{LossOracle, LossSpec, LossTable};
use crate::instances::{is_feasible, Assignment};
use crate::simulator::{prepare_into, ParameterVector, SampleSet, Sampler, DEFAULT_QUBIT_CAP};

pub use powell::{powell_minimize, PowellOptions, PowellResult, Termination};

/// Specs up to this size get a dense loss table.
const TABLE_QUBITS: usize = 22;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VqeConfig {
    pub trials: usize,
    pub maxfev: usize,
    pub xtol: f64,
    pub shots: u64,
    pub estimator: EstimatorConfig,
    pub seed: u64,
    pub qubit_cap: usize,
}

impl Default for VqeConfig {
    fn default() -> Self {
        Self {
            trials: 20,
            maxfev: 10_000,
            xtol: 1e-4,
            shots: 4000,
            estimator: EstimatorConfig {
                kind: crate::estimators::EstimatorKind::Cvar,
                alpha: 0.1,
            },
            seed: 0,
            qubit_cap: DEFAULT_QUBIT_CAP,
        }
    }
}

impl VqeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.maxfev == 0 {
            return Err(Error::Config("maxfev must be at least 1".into()));
        }
        if !(self.xtol.is_finite() && self.xtol > 0.0) {
            return Err(Error::Config("xtol must be positive".into()));
        }
        if self.shots == 0 {
            return Err(Error::Config("shots must be at least 1".into()));
        }
        self.estimator.validate()
    }

    fn powell_options(&self) -> PowellOptions {
        PowellOptions {
            maxfev: self.maxfev,
            xtol: self.xtol,
            ..PowellOptions::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialResult {
    pub trial_index: usize,
    pub theta_star: ParameterVector,
    pub final_estimate: f64,
    pub nfev: usize,
    pub final_samples: SampleSet,
    pub quasi_opt: Assignment,
    pub quasi_opt_probability: f64,
    pub feasible: bool,
    /// Σ v_i x*_i when feasible, else 0.
    pub objective_value: i64,
}

/// Per-trial RNG: the master seed selects the key, the trial index the stream.
pub fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

/// Stochastic objective: prepare the ansatz state, draw fresh shots, estimate.
pub struct Objective<'a, L: LossOracle + ?Sized> {
    oracle: &'a L,
    estimator: EstimatorConfig,
    shots: u64,
    cap: usize,
    amplitudes: Vec<f64>,
    sampler: Sampler,
}

impl<'a, L: LossOracle + ?Sized> Objective<'a, L> {
    pub fn new(oracle: &'a L, estimator: EstimatorConfig, shots: u64, cap: usize) -> Self {
        Self {
            oracle,
            estimator,
            shots,
            cap,
            amplitudes: Vec::new(),
            sampler: Sampler::new(),
        }
    }

    pub fn samples<R: Rng + ?Sized>(&mut self, theta: &[f64], rng: &mut R) -> Result<SampleSet> {
        let n = self.oracle.qubits();
        prepare_into(n, theta, self.cap, &mut self.amplitudes)?;
        self.sampler.sample_amplitudes(n, &self.amplitudes, self.shots, rng)
    }

    pub fn eval<R: Rng + ?Sized>(&mut self, theta: &[f64], rng: &mut R) -> Result<f64> {
        let samples = self.samples(theta, rng)?;
        estimate(&samples, self.oracle, &self.estimator)
    }
}

/// One evaluation of the sampled objective at `theta`.
pub fn objective<R: Rng + ?Sized>(theta: &[f64], spec: &LossSpec, config: &VqeConfig, rng: &mut R) -> Result<f64> {
    Objective::new(spec, config.estimator, config.shots, config.qubit_cap).eval(theta, rng)
}

/// Runs `config.trials` independent random-start optimizations. Output order
/// and content do not depend on thread scheduling.
pub fn run_trials(spec: &LossSpec, config: &VqeConfig) -> Result<Vec<TrialResult>> {
    config.validate()?;
    let qubits = spec.total_qubits();
    if qubits > config.qubit_cap {
        return Err(Error::QubitCap {
            qubits,
            cap: config.qubit_cap,
        });
    }
    let table;
    let oracle: &dyn LossOracle = if qubits <= TABLE_QUBITS {
        table = LossTable::build(spec)?;
        &table
    } else {
        spec
    };
    (0..config.trials)
        .into_par_iter()
        .map(|t| run_trial(spec, oracle, config, t))
        .collect()
}

fn run_trial(spec: &LossSpec, oracle: &dyn LossOracle, config: &VqeConfig, trial: usize) -> Result<TrialResult> {
    let qubits = spec.total_qubits();
    let mut rng = trial_rng(config.seed, trial);
    let theta0: Vec<f64> = (0..2 * qubits).map(|_| rng.gen_range(0.0..TAU)).collect();
    let mut obj = Objective::new(oracle, config.estimator, config.shots, config.qubit_cap);

    let result = powell_minimize(
        |theta| {
            obj.eval(theta, &mut rng)
                .expect("qubit count and parameter length validated before the search")
        },
        &theta0,
        &config.powell_options(),
    );

    let final_samples = obj.samples(&result.x, &mut rng)?;
    let final_estimate = estimate(&final_samples, oracle, &config.estimator)?;
    let idx = quasi_optimum_index(&final_samples, oracle, config.estimator.kind)?;
    let quasi_opt = decision_bits(idx, spec);
    let feasible = is_feasible(spec.instance(), &quasi_opt)?;
    let objective_value = if feasible {
        spec.instance().objective(&quasi_opt)?
    } else {
        0
    };
    Ok(TrialResult {
        trial_index: trial,
        theta_star: ParameterVector::new(result.x)?,
        final_estimate,
        nfev: result.nfev,
        quasi_opt_probability: final_samples.count(idx) as f64 / final_samples.total_shots() as f64,
        final_samples,
        quasi_opt,
        feasible,
        objective_value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::EstimatorKind;
    use crate::formulation::{compile_custom, compile_slack};
    use crate::instances::MdkpInstance;
    use std::f64::consts::PI;

    fn single_item() -> MdkpInstance {
        MdkpInstance::new("one", vec![1], vec![vec![1]], vec![1], Some(1)).unwrap()
    }

    #[test]
    fn objective_examples() {
        let spec = compile_custom(&single_item());
        let config = VqeConfig::default();
        let mut rng = trial_rng(1, 0);
        assert_eq!(objective(&[PI, 0.0], &spec, &config, &mut rng).unwrap(), -1.0);
        assert_eq!(objective(&[0.0, 0.0], &spec, &config, &mut rng).unwrap(), 0.0);
        assert!(matches!(
            objective(&[0.0], &spec, &config, &mut rng),
            Err(Error::ParameterLength { expected: 2, actual: 1 })
        ));
    }

    #[test]
    fn full_tail_cvar_matches_fs_on_same_samples() {
        let spec = compile_custom(&single_item());
        let theta = [1.1, 0.4];
        let fs = VqeConfig {
            estimator: EstimatorConfig::fs(),
            ..VqeConfig::default()
        };
        let cvar = VqeConfig {
            estimator: EstimatorConfig::cvar(1.0).unwrap(),
            ..VqeConfig::default()
        };
        let a = objective(&theta, &spec, &fs, &mut trial_rng(5, 0)).unwrap();
        let b = objective(&theta, &spec, &cvar, &mut trial_rng(5, 0)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn trivial_instance_always_solved() {
        let spec = compile_custom(&single_item());
        for estimator in [EstimatorConfig::fs(), EstimatorConfig::cvar(0.1).unwrap()] {
            let config = VqeConfig {
                estimator,
                shots: 200,
                maxfev: 400,
                ..VqeConfig::default()
            };
            let trials = run_trials(&spec, &config).unwrap();
            assert_eq!(trials.len(), 20);
            for t in &trials {
                assert!(t.feasible, "{t:?}");
                assert_eq!(t.objective_value, 1);
                assert!(t.nfev <= 400);
                assert!(t.final_estimate >= -1.0 - 1e-9);
            }
        }
    }

    #[test]
    fn trials_are_reproducible() {
        let inst = MdkpInstance::new("toy", vec![3, 4], vec![vec![2, 3]], vec![4], None).unwrap();
        let spec = compile_slack(&inst).unwrap();
        let config = VqeConfig {
            trials: 3,
            shots: 100,
            maxfev: 150,
            seed: 9,
            ..VqeConfig::default()
        };
        let a = run_trials(&spec, &config).unwrap();
        let b = run_trials(&spec, &config).unwrap();
        assert_eq!(a, b);
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());

        let one = run_trials(&spec, &VqeConfig { trials: 1, ..config }).unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!(one[0], a[0]);
    }

    #[test]
    fn cap_is_checked_before_any_trial() {
        let spec = compile_custom(&single_item());
        let config = VqeConfig {
            qubit_cap: 0,
            ..VqeConfig::default()
        };
        assert!(matches!(run_trials(&spec, &config), Err(Error::QubitCap { .. })));
        assert!(run_trials(&spec, &VqeConfig { trials: 0, ..VqeConfig::default() }).is_err());
    }

    #[test]
    fn cvar_quasi_optimum_is_lowest_sampled_loss() {
        let inst = MdkpInstance::new("toy", vec![3, 4], vec![vec![2, 3]], vec![4], None).unwrap();
        let spec = compile_custom(&inst);
        let config = VqeConfig {
            trials: 4,
            shots: 300,
            maxfev: 100,
            estimator: EstimatorConfig::cvar(0.2).unwrap(),
            ..VqeConfig::default()
        };
        for t in run_trials(&spec, &config).unwrap() {
            let best = t
                .final_samples
                .iter()
                .map(|(i, _)| spec.evaluate_index(i).value)
                .min()
                .unwrap();
            assert_eq!(spec.evaluate(t.quasi_opt.bits()).unwrap().value, best);
            assert_eq!(config.estimator.kind, EstimatorKind::Cvar);
        }
    }
}
