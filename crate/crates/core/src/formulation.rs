//! Classical loss functions over bitstrings.
//!
//! The problem Hamiltonian is diagonal in the computational basis, so its
//! eigenvalue on a basis state is just the loss of the corresponding bitstring.
//! Two encodings of the knapsack constraints are provided: the slack-free step
//! penalty and the slack-variable QUBO.

use std::io::Write;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instances::MdkpInstance;

/// Θ(h): 1 when `h > 0`, else 0.
pub fn heaviside(h: i64) -> i64 {
    i64::from(h > 0)
}

/// `(λ_UB, λ)` with `λ_UB = Σ v_i` and `λ = 2 λ_UB`. An all-zero value vector
/// still gets `λ = 2` so that violations are charged.
pub fn penalty_upper_bound(inst: &MdkpInstance) -> (i64, i64) {
    let ub = inst.value_sum();
    (ub, 2 * ub.max(1))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Formulation {
    #[serde(rename = "custom")]
    CustomStep,
    #[serde(rename = "slack")]
    SlackQuadratic,
}

impl Formulation {
    pub fn label(self) -> &'static str {
        match self {
            Formulation::CustomStep => "custom",
            Formulation::SlackQuadratic => "slack",
        }
    }
}

impl std::str::FromStr for Formulation {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "custom" => Ok(Formulation::CustomStep),
            "slack" => Ok(Formulation::SlackQuadratic),
            other => Err(Error::Config(format!("unknown formulation {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LossValue {
    pub value: i64,
    pub violated_constraints: usize,
}

/// A compiled loss over bitstrings of length `total_qubits`.
///
/// Qubit layout: the first `n` positions are the decision variables. For the
/// slack variant the slack registers follow in constraint order, each least
/// significant bit first.
#[derive(Debug, Clone)]
pub struct LossSpec {
    variant: Formulation,
    instance: Arc<MdkpInstance>,
    lambdas: Vec<i64>,
    slack_bits: Vec<u32>,
    slack_offsets: Vec<usize>,
    total_qubits: usize,
}

pub fn compile_custom(inst: &MdkpInstance) -> LossSpec {
    let (_, lambda) = penalty_upper_bound(inst);
    LossSpec {
        variant: Formulation::CustomStep,
        instance: Arc::new(inst.clone()),
        lambdas: vec![lambda; inst.d()],
        slack_bits: vec![0; inst.d()],
        slack_offsets: vec![inst.n(); inst.d()],
        total_qubits: inst.n(),
    }
}

/// Slack width per constraint: ⌈log2(W_j + 1)⌉, enough to hold every value in `0..=W_j`.
pub fn slack_width(capacity: i64) -> u32 {
    u64::BITS - (capacity as u64).leading_zeros()
}

/// Fails only when squared slack terms cannot be represented in 64 bits.
pub fn compile_slack(inst: &MdkpInstance) -> Result<LossSpec> {
    let (_, lambda) = penalty_upper_bound(inst);
    let slack_bits: Vec<u32> = inst.capacities().iter().map(|&w| slack_width(w)).collect();
    let mut slack_offsets = Vec::with_capacity(inst.d());
    let mut next = inst.n();
    for &bits in &slack_bits {
        slack_offsets.push(next);
        next += bits as usize;
    }
    let spec = LossSpec {
        variant: Formulation::SlackQuadratic,
        instance: Arc::new(inst.clone()),
        lambdas: vec![lambda; inst.d()],
        slack_bits,
        slack_offsets,
        total_qubits: next,
    };
    spec.slack_penalty_bound()?;
    Ok(spec)
}

pub fn compile(inst: &MdkpInstance, formulation: Formulation) -> Result<LossSpec> {
    match formulation {
        Formulation::CustomStep => Ok(compile_custom(inst)),
        Formulation::SlackQuadratic => compile_slack(inst),
    }
}

impl LossSpec {
    pub fn variant(&self) -> Formulation {
        self.variant
    }

    pub fn instance(&self) -> &MdkpInstance {
        &self.instance
    }

    pub fn lambdas(&self) -> &[i64] {
        &self.lambdas
    }

    pub fn slack_bits(&self) -> &[u32] {
        &self.slack_bits
    }

    pub fn total_qubits(&self) -> usize {
        self.total_qubits
    }

    /// Replaces the global penalty with per-constraint factors.
    pub fn with_lambdas(mut self, lambdas: Vec<i64>) -> Result<Self> {
        if lambdas.len() != self.instance.d() {
            return Err(Error::Config(format!(
                "expected {} penalty factors, got {}",
                self.instance.d(),
                lambdas.len()
            )));
        }
        if lambdas.iter().any(|&l| l <= 0) {
            return Err(Error::Config("penalty factors must be positive".into()));
        }
        self.lambdas = lambdas;
        match self.variant {
            Formulation::CustomStep => {
                self.lambdas
                    .iter()
                    .try_fold(self.instance.value_sum(), |acc, &l| acc.checked_add(l))
                    .ok_or_else(|| Error::Overflow("penalty factors too large".into()))?;
            }
            Formulation::SlackQuadratic => {
                self.slack_penalty_bound()?;
            }
        }
        Ok(self)
    }

    /// Σ_j λ_j · max (h_j + s_j)² over all x and slack values, checked against i64.
    fn slack_penalty_bound(&self) -> Result<i64> {
        let overflow = || Error::Overflow("slack penalty exceeds 64-bit range".into());
        let inst = &*self.instance;
        let mut total: i128 = 0;
        for (j, row) in inst.weights().iter().enumerate() {
            let cap = inst.capacities()[j] as i128;
            let full: i128 = row.iter().map(|&w| w as i128).sum();
            let top = (1i128 << self.slack_bits[j]) - 1;
            let reach = (full - cap + top).max(cap);
            let term = reach
                .checked_mul(reach)
                .and_then(|sq| sq.checked_mul(self.lambdas[j] as i128))
                .ok_or_else(overflow)?;
            total = total.checked_add(term).ok_or_else(overflow)?;
        }
        i64::try_from(total).map_err(|_| overflow())
    }

    pub fn evaluate(&self, bits: &[bool]) -> Result<LossValue> {
        if bits.len() != self.total_qubits {
            return Err(Error::LengthMismatch {
                expected: self.total_qubits,
                actual: bits.len(),
            });
        }
        Ok(self.evaluate_by(|q| bits[q]))
    }

    /// Loss of a basis-state index (qubit 1 is the most significant bit).
    /// Requires `total_qubits <= 64`.
    pub fn evaluate_index(&self, index: u64) -> LossValue {
        debug_assert!(self.total_qubits <= 64);
        let top = self.total_qubits - 1;
        self.evaluate_by(|q| index >> (top - q) & 1 == 1)
    }

    fn evaluate_by(&self, bit: impl Fn(usize) -> bool) -> LossValue {
        let inst = &*self.instance;
        let mut value = 0i64;
        let mut loads = vec![0i64; inst.d()];
        for i in (0..inst.n()).filter(|&i| bit(i)) {
            value -= inst.values()[i];
            for (load, row) in loads.iter_mut().zip(inst.weights()) {
                *load += row[i];
            }
        }
        let mut violated = 0;
        for (j, (&load, &cap)) in loads.iter().zip(inst.capacities()).enumerate() {
            let h = load - cap;
            if h > 0 {
                violated += 1;
            }
            match self.variant {
                Formulation::CustomStep => value += self.lambdas[j] * heaviside(h),
                Formulation::SlackQuadratic => {
                    let offset = self.slack_offsets[j];
                    let slack: i64 = (0..self.slack_bits[j] as usize)
                        .filter(|&l| bit(offset + l))
                        .map(|l| 1i64 << l)
                        .sum();
                    let r = h + slack;
                    value += self.lambdas[j] * r * r;
                }
            }
        }
        LossValue {
            value,
            violated_constraints: violated,
        }
    }
}

/// Source of losses for basis-state indices.
pub trait LossOracle: Sync {
    fn qubits(&self) -> usize;
    fn loss(&self, index: u64) -> i64;
}

impl LossOracle for LossSpec {
    fn qubits(&self) -> usize {
        self.total_qubits
    }

    fn loss(&self, index: u64) -> i64 {
        self.evaluate_index(index).value
    }
}

/// Precomputed losses for every basis state.
#[derive(Debug, Clone)]
pub struct LossTable {
    qubits: usize,
    losses: Vec<i64>,
}

impl LossTable {
    pub const MAX_QUBITS: usize = 24;

    pub fn build(spec: &LossSpec) -> Result<Self> {
        let qubits = spec.total_qubits();
        if qubits > Self::MAX_QUBITS {
            return Err(Error::QubitCap {
                qubits,
                cap: Self::MAX_QUBITS,
            });
        }
        let losses = (0..1u64 << qubits).map(|i| spec.evaluate_index(i).value).collect();
        Ok(Self { qubits, losses })
    }

    pub fn losses(&self) -> &[i64] {
        &self.losses
    }
}

impl LossOracle for LossTable {
    fn qubits(&self) -> usize {
        self.qubits
    }

    fn loss(&self, index: u64) -> i64 {
        self.losses[index as usize]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RangeKind {
    /// `lo = -C_true`, `hi = Σ λ_j`.
    StepPenalty,
    /// Upper bound from the largest squared slack residual; not attained in general.
    SlackBound,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LossRange {
    pub lo: i64,
    pub hi: i64,
    pub range: i64,
    pub kind: RangeKind,
}

pub fn loss_range(spec: &LossSpec, c_true: i64) -> Result<LossRange> {
    if c_true < 0 {
        return Err(Error::Domain(format!("C_true must be nonnegative, got {c_true}")));
    }
    let lo = -c_true;
    let (hi, kind) = match spec.variant {
        Formulation::CustomStep => (spec.lambdas.iter().sum::<i64>(), RangeKind::StepPenalty),
        Formulation::SlackQuadratic => (spec.slack_penalty_bound()?, RangeKind::SlackBound),
    };
    Ok(LossRange {
        lo,
        hi,
        range: hi - lo,
        kind,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QubitRow {
    pub name: String,
    pub custom: usize,
    pub slack: usize,
    pub delta: usize,
}

pub fn qubit_report(instances: &[MdkpInstance]) -> Vec<QubitRow> {
    instances
        .iter()
        .map(|inst| {
            let custom = inst.n();
            let slack = custom
                + inst
                    .capacities()
                    .iter()
                    .map(|&w| slack_width(w) as usize)
                    .sum::<usize>();
            QubitRow {
                name: inst.name().to_string(),
                custom,
                slack,
                delta: slack - custom,
            }
        })
        .collect()
}

/// CSV with header `name,custom,slack,delta`.
pub fn write_qubit_csv<W: Write>(rows: &[QubitRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}
