//! Dense real statevector for the single-layer RY/CZ hardware-efficient ansatz,
//! and shot sampling in the computational basis.
//!
//! Bit convention: qubit `i` (1-based) is decision variable `x_i` and character
//! `i - 1` of a bitstring. In amplitude indices qubit 1 is the most significant
//! bit, so `"10"` is index 2 and `"01"` is index 1.

use std::collections::BTreeMap;

use rand::Rng;
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::instances::Assignment;

pub const DEFAULT_QUBIT_CAP: usize = 26;

/// Ansatz angles in radians: `theta[..n]` is the first RY layer, `theta[n..]` the second.
#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
#[serde(transparent)]
pub struct ParameterVector(Vec<f64>);

impl ParameterVector {
    pub fn new(theta: Vec<f64>) -> Result<Self> {
        if theta.iter().any(|t| !t.is_finite()) {
            return Err(Error::Domain("non-finite ansatz parameter".into()));
        }
        Ok(Self(theta))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Statevector {
    n: usize,
    amplitudes: Vec<f64>,
}

impl Statevector {
    pub fn qubits(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a * a).sum()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a * a).collect()
    }
}

pub fn prepare_state(n: usize, theta: &[f64]) -> Result<Statevector> {
    prepare_state_capped(n, theta, DEFAULT_QUBIT_CAP)
}

pub fn prepare_state_capped(n: usize, theta: &[f64], cap: usize) -> Result<Statevector> {
    let mut amplitudes = Vec::new();
    prepare_into(n, theta, cap, &mut amplitudes)?;
    Ok(Statevector { n, amplitudes })
}

/// Writes `⊗RY(θ_{n+i}) · ΠCZ_{i,i+1} · ⊗RY(θ_i) |0…0⟩` into `buf`.
pub(crate) fn prepare_into(n: usize, theta: &[f64], cap: usize, buf: &mut Vec<f64>) -> Result<()> {
    if n == 0 || n > cap {
        return Err(Error::QubitCap { qubits: n, cap });
    }
    if theta.len() != 2 * n {
        return Err(Error::ParameterLength {
            expected: 2 * n,
            actual: theta.len(),
        });
    }
    let dim = 1usize << n;
    buf.clear();
    buf.resize(dim, 0.0);

    // First RY layer on |0…0⟩ is a product state; build it MSB-first by doubling.
    buf[0] = 1.0;
    for (q, &t) in theta[..n].iter().enumerate() {
        let (s, c) = (t / 2.0).sin_cos();
        let len = 1usize << q;
        for k in (0..len).rev() {
            let a = buf[k];
            buf[2 * k] = a * c;
            buf[2 * k + 1] = a * s;
        }
    }

    // CZ on every adjacent pair: sign flips once per adjacent "11".
    for (idx, a) in buf.iter_mut().enumerate() {
        if (idx & (idx >> 1)).count_ones() & 1 == 1 {
            *a = -*a;
        }
    }

    for (q, &t) in theta[n..].iter().enumerate() {
        let (s, c) = (t / 2.0).sin_cos();
        let mask = 1usize << (n - 1 - q);
        for block in (0..dim).step_by(2 * mask) {
            for i in block..block + mask {
                let (a0, a1) = (buf[i], buf[i | mask]);
                buf[i] = c * a0 - s * a1;
                buf[i | mask] = s * a0 + c * a1;
            }
        }
    }
    Ok(())
}

pub fn index_to_bitstring(index: u64, n: usize) -> String {
    (0..n)
        .map(|q| if index >> (n - 1 - q) & 1 == 1 { '1' } else { '0' })
        .collect()
}

pub fn bitstring_to_index(bits: &str) -> Result<u64> {
    if bits.len() > 64 {
        return Err(Error::Domain("bitstrings longer than 64 are not indexable".into()));
    }
    Assignment::parse(bits).map(|a| assignment_to_index(&a))
}

pub fn index_to_assignment(index: u64, n: usize) -> Assignment {
    Assignment::new((0..n).map(|q| index >> (n - 1 - q) & 1 == 1).collect())
}

pub fn assignment_to_index(a: &Assignment) -> u64 {
    a.bits().iter().fold(0u64, |acc, &b| acc << 1 | u64::from(b))
}

/// Shot counts keyed by basis-state index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleSet {
    qubits: usize,
    counts: BTreeMap<u64, u64>,
    total: u64,
}

impl SampleSet {
    pub fn from_index_counts(qubits: usize, counts: impl IntoIterator<Item = (u64, u64)>) -> Result<Self> {
        let mut map = BTreeMap::new();
        let mut total = 0u64;
        for (idx, c) in counts {
            if qubits < 64 && idx >> qubits != 0 {
                return Err(Error::Domain(format!("index {idx} out of range for {qubits} qubits")));
            }
            if c == 0 {
                continue;
            }
            *map.entry(idx).or_insert(0) += c;
            total += c;
        }
        Ok(Self {
            qubits,
            counts: map,
            total,
        })
    }

    pub fn from_bitstrings<'a>(counts: impl IntoIterator<Item = (&'a str, u64)>) -> Result<Self> {
        let mut qubits = None;
        let mut pairs = Vec::new();
        for (bits, c) in counts {
            match qubits {
                None => qubits = Some(bits.len()),
                Some(n) if n != bits.len() => {
                    return Err(Error::LengthMismatch {
                        expected: n,
                        actual: bits.len(),
                    })
                }
                _ => {}
            }
            pairs.push((bitstring_to_index(bits)?, c));
        }
        Self::from_index_counts(qubits.unwrap_or(0), pairs)
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn total_shots(&self) -> u64 {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    /// `(index, count)` in increasing index order, which is lexicographic bitstring order.
    pub fn iter(&self) -> impl Iterator<Item = (u64, u64)> + '_ {
        self.counts.iter().map(|(&i, &c)| (i, c))
    }

    pub fn unique(&self) -> usize {
        self.counts.len()
    }

    pub fn count(&self, index: u64) -> u64 {
        self.counts.get(&index).copied().unwrap_or(0)
    }

    pub fn bitstring_counts(&self) -> BTreeMap<String, u64> {
        self.iter()
            .map(|(i, c)| (index_to_bitstring(i, self.qubits), c))
            .collect()
    }
}

impl Serialize for SampleSet {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("SampleSet", 3)?;
        s.serialize_field("qubits", &self.qubits)?;
        s.serialize_field("total_shots", &self.total)?;
        s.serialize_field("counts", &self.bitstring_counts())?;
        s.end()
    }
}

/// Inverse-CDF multinomial sampler; keeps its cumulative buffer between calls.
#[derive(Debug, Default)]
pub struct Sampler {
    cdf: Vec<f64>,
    draws: Vec<u64>,
}

impl Sampler {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn sample<R: Rng + ?Sized>(&mut self, state: &Statevector, shots: u64, rng: &mut R) -> Result<SampleSet> {
        self.sample_amplitudes(state.n, &state.amplitudes, shots, rng)
    }

    pub(crate) fn sample_amplitudes<R: Rng + ?Sized>(
        &mut self,
        qubits: usize,
        amplitudes: &[f64],
        shots: u64,
        rng: &mut R,
    ) -> Result<SampleSet> {
        if shots == 0 {
            return Err(Error::Domain("shots must be at least 1".into()));
        }
        self.cdf.clear();
        let mut acc = 0.0;
        self.cdf.extend(amplitudes.iter().map(|a| {
            acc += a * a;
            acc
        }));
        let total = acc;
        let last = self.cdf.len() - 1;

        self.draws.clear();
        for _ in 0..shots {
            let u = rng.gen::<f64>() * total;
            let idx = self.cdf.partition_point(|&c| c <= u).min(last);
            self.draws.push(idx as u64);
        }
        self.draws.sort_unstable();

        let mut counts = BTreeMap::new();
        for chunk in self.draws.chunk_by(|a, b| a == b) {
            counts.insert(chunk[0], chunk.len() as u64);
        }
        Ok(SampleSet {
            qubits,
            counts,
            total: shots,
        })
    }
}

pub fn sample<R: Rng + ?Sized>(state: &Statevector, shots: u64, rng: &mut R) -> Result<SampleSet> {
    Sampler::new().sample(state, shots, rng)
}
