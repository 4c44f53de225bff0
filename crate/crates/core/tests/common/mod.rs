#![allow(dead_code)]

use penalty_vqe::instances::MdkpInstance;
use rand::Rng;

/// Random MDKP with `n` items and `d` constraints. Capacities fall between
/// zero and the full row weight so that both feasible and infeasible
/// assignments occur.
pub fn random_instance<R: Rng>(rng: &mut R, n: usize, d: usize, max_value: i64, max_weight: i64) -> MdkpInstance {
    let values = (0..n).map(|_| rng.gen_range(0..=max_value)).collect();
    let weights: Vec<Vec<i64>> = (0..d)
        .map(|_| (0..n).map(|_| rng.gen_range(0..=max_weight)).collect())
        .collect();
    let capacities = weights
        .iter()
        .map(|row| {
            let total: i64 = row.iter().sum();
            rng.gen_range(0..=total.max(1))
        })
        .collect();
    MdkpInstance::new("random", values, weights, capacities, None).unwrap()
}

pub fn bits_of(mask: u64, n: usize) -> Vec<bool> {
    (0..n).map(|q| mask >> (n - 1 - q) & 1 == 1).collect()
}

pub fn loads(inst: &MdkpInstance, x: &[bool]) -> Vec<i64> {
    inst.weights()
        .iter()
        .map(|row| row.iter().zip(x).filter(|(_, &b)| b).map(|(w, _)| w).sum())
        .collect()
}

pub fn value(inst: &MdkpInstance, x: &[bool]) -> i64 {
    inst.values().iter().zip(x).filter(|(_, &b)| b).map(|(v, _)| v).sum()
}

pub fn feasible(inst: &MdkpInstance, x: &[bool]) -> bool {
    loads(inst, x).iter().zip(inst.capacities()).all(|(l, c)| l <= c)
}

/// Step-penalty loss written out directly: −Σv x + 2·max(Σv, 1) · #violated.
pub fn step_loss(inst: &MdkpInstance, x: &[bool]) -> i64 {
    let lambda = 2 * inst.values().iter().sum::<i64>().max(1);
    let violated = loads(inst, x)
        .iter()
        .zip(inst.capacities())
        .filter(|(l, c)| l > c)
        .count() as i64;
    -value(inst, x) + lambda * violated
}

/// Σ_j (h_j + s_j)², unscaled, for explicit slack integers.
pub fn slack_residual(inst: &MdkpInstance, x: &[bool], slacks: &[i64]) -> i64 {
    loads(inst, x)
        .iter()
        .zip(inst.capacities())
        .zip(slacks)
        .map(|((l, c), s)| {
            let r = l - c + s;
            r * r
        })
        .sum()
}

/// Dense matrix-vector product.
fn apply(m: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    m.iter().map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
}

fn kron(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let (ra, ca, rb, cb) = (a.len(), a[0].len(), b.len(), b[0].len());
    let mut out = vec![vec![0.0; ca * cb]; ra * rb];
    for i in 0..ra {
        for j in 0..ca {
            for k in 0..rb {
                for l in 0..cb {
                    out[i * rb + k][j * cb + l] = a[i][j] * b[k][l];
                }
            }
        }
    }
    out
}

fn ry(t: f64) -> Vec<Vec<f64>> {
    let (s, c) = (t / 2.0).sin_cos();
    vec![vec![c, -s], vec![s, c]]
}

fn layer(thetas: &[f64]) -> Vec<Vec<f64>> {
    thetas
        .iter()
        .map(|&t| ry(t))
        .reduce(|acc, m| kron(&acc, &m))
        .unwrap()
}

/// CZ on qubits (q, q+1) of an n-qubit register as a full diagonal matrix.
fn cz(n: usize, q: usize) -> Vec<Vec<f64>> {
    let dim = 1 << n;
    let mut m = vec![vec![0.0; dim]; dim];
    for (i, row) in m.iter_mut().enumerate() {
        let a = i >> (n - 1 - q) & 1;
        let b = i >> (n - 2 - q) & 1;
        row[i] = if a == 1 && b == 1 { -1.0 } else { 1.0 };
    }
    m
}

/// Ansatz state built from explicit Kronecker products, qubit 1 leftmost.
pub fn kron_state(n: usize, theta: &[f64]) -> Vec<f64> {
    let mut v = vec![0.0; 1 << n];
    v[0] = 1.0;
    v = apply(&layer(&theta[..n]), &v);
    for q in 0..n.saturating_sub(1) {
        v = apply(&cz(n, q), &v);
    }
    apply(&layer(&theta[n..]), &v)
}
