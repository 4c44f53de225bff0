//! Sample-based objective estimators (finite-sampling mean and CVaR) and
//! Hoeffding shot-budget calculators.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formulation::{LossOracle, LossSpec};
use crate::instances::Assignment;
use crate::simulator::{index_to_assignment, SampleSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorKind {
    Fs,
    Cvar,
}

impl EstimatorKind {
    pub fn label(self) -> &'static str {
        match self {
            EstimatorKind::Fs => "fs",
            EstimatorKind::Cvar => "cvar",
        }
    }
}

impl std::str::FromStr for EstimatorKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fs" => Ok(EstimatorKind::Fs),
            "cvar" => Ok(EstimatorKind::Cvar),
            other => Err(Error::Config(format!("unknown estimator {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    pub kind: EstimatorKind,
    /// Confidence level; ignored (treated as 1) for [`EstimatorKind::Fs`].
    pub alpha: f64,
}

impl EstimatorConfig {
    pub fn fs() -> Self {
        Self {
            kind: EstimatorKind::Fs,
            alpha: 1.0,
        }
    }

    pub fn cvar(alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(Self {
            kind: EstimatorKind::Cvar,
            alpha,
        })
    }

    pub fn effective_alpha(&self) -> f64 {
        match self.kind {
            EstimatorKind::Fs => 1.0,
            EstimatorKind::Cvar => self.alpha,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_alpha(self.alpha)
    }

    /// `"fs"` or `"cvar(0.1)"`.
    pub fn label(&self) -> String {
        match self.kind {
            EstimatorKind::Fs => "fs".into(),
            EstimatorKind::Cvar => format!("cvar({})", self.alpha),
        }
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("alpha must lie in (0, 1], got {alpha}")))
    }
}

/// ⌈α·M⌉, clamped to `1..=M`. Products within 1e-9 of an integer count as that
/// integer so that e.g. `0.1 · 4000` yields 400.
pub fn tail_size(alpha: f64, shots: u64) -> u64 {
    let x = alpha * shots as f64;
    let r = x.round();
    let k = if (x - r).abs() <= 1e-9 * x.max(1.0) { r } else { x.ceil() };
    (k as u64).clamp(1, shots.max(1))
}

/// Mean of the `k` lowest losses of a weighted multiset, in exact integer arithmetic.
fn lowest_k_mean(groups: &mut [(i64, u64)], k: u64) -> f64 {
    groups.sort_unstable_by_key(|&(loss, _)| loss);
    let mut remaining = k;
    let mut sum: i128 = 0;
    for &(loss, count) in groups.iter() {
        let take = count.min(remaining);
        sum += loss as i128 * take as i128;
        remaining -= take;
        if remaining == 0 {
            break;
        }
    }
    sum as f64 / k as f64
}

fn check_samples<L: LossOracle + ?Sized>(samples: &SampleSet, oracle: &L) -> Result<()> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    if samples.qubits() != oracle.qubits() {
        return Err(Error::LengthMismatch {
            expected: oracle.qubits(),
            actual: samples.qubits(),
        });
    }
    Ok(())
}

/// FS: mean loss over all shots. CVaR: mean of the ⌈α·M⌉ lowest sampled losses.
pub fn estimate<L: LossOracle + ?Sized>(samples: &SampleSet, oracle: &L, config: &EstimatorConfig) -> Result<f64> {
    check_samples(samples, oracle)?;
    config.validate()?;
    let mut groups: Vec<(i64, u64)> = samples.iter().map(|(idx, c)| (oracle.loss(idx), c)).collect();
    let k = tail_size(config.effective_alpha(), samples.total_shots());
    Ok(lowest_k_mean(&mut groups, k))
}

/// Estimator over an exact distribution: `probabilities[i]` is the (normalized)
/// probability of basis index `i`. FS is `Σ_i L(i) p_i` in index order; CVaR
/// averages the lowest-loss α-mass, splitting the boundary state.
pub fn estimate_distribution<L: LossOracle + ?Sized>(
    probabilities: &[f64],
    oracle: &L,
    config: &EstimatorConfig,
) -> Result<f64> {
    if probabilities.len() != 1usize << oracle.qubits() {
        return Err(Error::LengthMismatch {
            expected: 1usize << oracle.qubits(),
            actual: probabilities.len(),
        });
    }
    config.validate()?;
    let alpha = config.effective_alpha();
    if alpha == 1.0 {
        return Ok(probabilities
            .iter()
            .enumerate()
            .map(|(i, &p)| oracle.loss(i as u64) as f64 * p)
            .sum());
    }
    let mut weighted: Vec<(i64, f64)> = probabilities
        .iter()
        .enumerate()
        .filter(|(_, &p)| p > 0.0)
        .map(|(i, &p)| (oracle.loss(i as u64), p))
        .collect();
    weighted.sort_by_key(|&(loss, _)| loss);
    let mut remaining = alpha;
    let mut sum = 0.0;
    for (loss, p) in weighted {
        let take = p.min(remaining);
        sum += loss as f64 * take;
        remaining -= take;
        if remaining <= 0.0 {
            break;
        }
    }
    Ok(sum / alpha)
}

/// Index of the quasi-optimal sampled string.
///
/// FS: highest count. CVaR: lowest loss. Remaining ties go to the lower loss,
/// then to the lexicographically smallest bitstring.
pub fn quasi_optimum_index<L: LossOracle + ?Sized>(samples: &SampleSet, oracle: &L, kind: EstimatorKind) -> Result<u64> {
    check_samples(samples, oracle)?;
    let best = match kind {
        EstimatorKind::Fs => samples
            .iter()
            .min_by_key(|&(idx, c)| (std::cmp::Reverse(c), oracle.loss(idx), idx)),
        EstimatorKind::Cvar => samples.iter().min_by_key(|&(idx, _)| (oracle.loss(idx), idx)),
    };
    Ok(best.map(|(idx, _)| idx).expect("nonempty samples"))
}

/// Quasi-optimal decision vector (the first `n` bits of the chosen string).
pub fn quasi_optimum(samples: &SampleSet, spec: &LossSpec, kind: EstimatorKind) -> Result<Assignment> {
    let idx = quasi_optimum_index(samples, spec, kind)?;
    Ok(decision_bits(idx, spec))
}

pub(crate) fn decision_bits(idx: u64, spec: &LossSpec) -> Assignment {
    let n = spec.instance().n();
    index_to_assignment(idx >> (spec.total_qubits() - n), n)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShotBudget {
    pub epsilon: f64,
    pub delta: f64,
    pub range: i64,
    pub alpha: f64,
    /// ⌈R²/(2ε²)·ln(2/δ)⌉
    pub m_fs: u64,
    /// ⌈α·R²/(2ε²)·ln(2/δ)⌉
    pub m_alpha: u64,
}

/// Hoeffding shot counts for error `epsilon` at confidence `1 - delta` on a loss of range `range`.
pub fn shots_required(epsilon: f64, delta: f64, range: i64, alpha: f64) -> Result<ShotBudget> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::Domain(format!("epsilon must be positive, got {epsilon}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Domain(format!("delta must lie in (0, 1), got {delta}")));
    }
    if range <= 0 {
        return Err(Error::Domain(format!("range must be positive, got {range}")));
    }
    check_alpha(alpha)?;
    let r = range as f64;
    let base = r * r / (2.0 * epsilon * epsilon) * (2.0 / delta).ln();
    let to_count = |x: f64| {
        let c = x.ceil();
        if c < u64::MAX as f64 {
            Ok(c as u64)
        } else {
            Err(Error::Overflow(format!("shot count {x:e} exceeds u64")))
        }
    };
    Ok(ShotBudget {
        epsilon,
        delta,
        range,
        alpha,
        m_fs: to_count(base)?,
        m_alpha: to_count(alpha * base)?,
    })
}

/// Probability that a CVaR tail sample is the quasi-optimum: `p*/α` below α, else 1.
pub fn cvar_hit_probability(p_star: f64, alpha: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p_star) {
        return Err(Error::Domain(format!("p_star must lie in [0, 1], got {p_star}")));
    }
    check_alpha(alpha)?;
    Ok(if p_star < alpha { p_star / alpha } else { 1.0 })
}
