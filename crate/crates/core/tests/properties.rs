mod common;

use common::*;
use penalty_vqe::estimators::{estimate, shots_required, EstimatorConfig};
use penalty_vqe::formulation::{compile_custom, compile_slack, LossOracle};
use penalty_vqe::harness::{optimality_gap, SummaryStats};
use penalty_vqe::instances::{exact_optimum, exhaustive_optimum, parse_instance, InstanceFormat, MdkpInstance};
use penalty_vqe::simulator::{prepare_state, sample, SampleSet};
use penalty_vqe::vqe::{powell_minimize, PowellOptions};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn instance(seed: u64, n: usize, d: usize) -> MdkpInstance {
    random_instance(&mut ChaCha8Rng::seed_from_u64(seed), n, d, 50, 20)
}

struct Losses(usize, Vec<i64>);

impl LossOracle for Losses {
    fn qubits(&self) -> usize {
        self.0
    }
    fn loss(&self, index: u64) -> i64 {
        self.1[index as usize]
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn canonical_text_round_trips(seed in any::<u64>(), n in 1usize..12, d in 1usize..5, known in proptest::option::of(1i64..1000)) {
        let base = instance(seed, n, d);
        let inst = MdkpInstance::new(
            "",
            base.values().to_vec(),
            base.weights().to_vec(),
            base.capacities().to_vec(),
            known,
        ).unwrap();
        let text = inst.to_canonical();
        let back = parse_instance(&text, InstanceFormat::Canonical).unwrap();
        let normalize = |s: &str| s.split_whitespace().collect::<Vec<_>>().join(" ");
        prop_assert_eq!(normalize(&back.to_canonical()), normalize(&text));
        prop_assert_eq!(back, inst);
    }

    #[test]
    fn branch_and_bound_matches_enumeration(seed in any::<u64>(), n in 1usize..13, d in 1usize..4) {
        let inst = instance(seed, n, d);
        let (x, best) = exact_optimum(&inst).unwrap();
        let (_, reference) = exhaustive_optimum(&inst).unwrap();
        prop_assert_eq!(best, reference);
        prop_assert!(feasible(&inst, x.bits()));
        prop_assert_eq!(value(&inst, x.bits()), best);
    }

    #[test]
    fn step_penalty_separates_feasible_from_infeasible(seed in any::<u64>(), n in 1usize..10, d in 1usize..4) {
        let inst = instance(seed, n, d);
        let spec = compile_custom(&inst);
        let (_, c_true) = exhaustive_optimum(&inst).unwrap();
        let mut worst_feasible = i64::MIN;
        let mut best_infeasible = i64::MAX;
        let mut min = i64::MAX;
        for mask in 0..1u64 << n {
            let x = bits_of(mask, n);
            let l = spec.evaluate(&x).unwrap().value;
            prop_assert_eq!(l, step_loss(&inst, &x));
            min = min.min(l);
            if feasible(&inst, &x) {
                worst_feasible = worst_feasible.max(l);
            } else {
                best_infeasible = best_infeasible.min(l);
            }
        }
        prop_assert_eq!(min, -c_true);
        prop_assert!(worst_feasible < best_infeasible);
    }

    #[test]
    fn slack_loss_matches_direct_formula(seed in any::<u64>(), n in 1usize..6, d in 1usize..3, mask in any::<u64>()) {
        let inst = random_instance(&mut ChaCha8Rng::seed_from_u64(seed), n, d, 9, 4);
        let spec = compile_slack(&inst).unwrap();
        let q = spec.total_qubits();
        let bits = bits_of(mask & ((1 << q) - 1), q);
        let mut offset = n;
        let slacks: Vec<i64> = spec
            .slack_bits()
            .iter()
            .map(|&w| {
                let s = (0..w as usize).filter(|&l| bits[offset + l]).map(|l| 1i64 << l).sum();
                offset += w as usize;
                s
            })
            .collect();
        let lambda = 2 * inst.value_sum().max(1);
        let expect = -value(&inst, &bits[..n]) + lambda * slack_residual(&inst, &bits[..n], &slacks);
        prop_assert_eq!(spec.evaluate(&bits).unwrap().value, expect);
    }

    #[test]
    fn ansatz_is_normalized_and_matches_kronecker_products(n in 1usize..7, theta in prop::collection::vec(-10.0f64..10.0, 14)) {
        let theta = &theta[..2 * n];
        let s = prepare_state(n, theta).unwrap();
        prop_assert!((s.norm_sqr() - 1.0).abs() < 1e-10);
        for (a, b) in s.amplitudes().iter().zip(kron_state(n, theta)) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn sampling_is_deterministic_and_complete(n in 1usize..6, seed in any::<u64>(), shots in 1u64..500, theta in prop::collection::vec(0.0f64..6.3, 10)) {
        let s = prepare_state(n, &theta[..2 * n]).unwrap();
        let a = sample(&s, shots, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let b = sample(&s, shots, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        prop_assert_eq!(a.total_shots(), shots);
        prop_assert_eq!(a.iter().map(|(_, c)| c).sum::<u64>(), shots);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn cvar_is_monotone_and_bounded(losses in prop::collection::vec(-1000i64..1000, 8), counts in prop::collection::vec(0u64..50, 8), a1 in 0.001f64..1.0, a2 in 0.001f64..1.0) {
        prop_assume!(counts.iter().any(|&c| c > 0));
        let oracle = Losses(3, losses.clone());
        let samples = SampleSet::from_index_counts(3, counts.iter().enumerate().map(|(i, &c)| (i as u64, c))).unwrap();
        let (lo, hi) = if a1 <= a2 { (a1, a2) } else { (a2, a1) };
        let c_lo = estimate(&samples, &oracle, &EstimatorConfig::cvar(lo).unwrap()).unwrap();
        let c_hi = estimate(&samples, &oracle, &EstimatorConfig::cvar(hi).unwrap()).unwrap();
        let mean = estimate(&samples, &oracle, &EstimatorConfig::fs()).unwrap();
        let min = samples.iter().map(|(i, _)| losses[i as usize]).min().unwrap() as f64;
        prop_assert!(c_lo <= c_hi);
        prop_assert!(min <= c_lo && c_hi <= mean);
        prop_assert_eq!(estimate(&samples, &oracle, &EstimatorConfig::cvar(1.0).unwrap()).unwrap(), mean);
    }

    #[test]
    fn shot_budget_monotonicity(eps in 1.0f64..500.0, delta in 0.001f64..0.5, range in 1i64..10_000, alpha in 0.01f64..1.0, k in 1.01f64..4.0) {
        let base = shots_required(eps, delta, range, alpha).unwrap();
        prop_assert!(base.m_alpha <= base.m_fs);
        prop_assert!(shots_required(eps * k, delta, range, alpha).unwrap().m_fs <= base.m_fs);
        prop_assert!(shots_required(eps, (delta * k).min(0.99), range, alpha).unwrap().m_fs <= base.m_fs);
        prop_assert!(shots_required(eps, delta, range * 2, alpha).unwrap().m_fs >= base.m_fs);
        prop_assert!(shots_required(eps, delta, range, (alpha * k).min(1.0)).unwrap().m_alpha >= base.m_alpha);
    }

    #[test]
    fn powell_respects_budget(maxfev in 1usize..300, x0 in prop::collection::vec(-5.0f64..5.0, 1..6)) {
        let mut calls = 0usize;
        let r = powell_minimize(
            |x| {
                calls += 1;
                x.iter().enumerate().map(|(i, v)| (v - i as f64).powi(2)).sum::<f64>() + (x[0] * 3.0).sin()
            },
            &x0,
            &PowellOptions { maxfev, ..PowellOptions::default() },
        );
        prop_assert!(r.nfev <= maxfev);
        prop_assert_eq!(r.nfev, calls);
    }

    #[test]
    fn gap_and_summary_ranges(c_true in 1i64..100_000, frac in 0.0f64..=1.0, values in prop::collection::vec(-1e6f64..1e6, 1..40)) {
        let c_vqe = (c_true as f64 * frac).floor() as i64;
        let g = optimality_gap(c_vqe, c_true).unwrap();
        prop_assert!((0.0..=1.0).contains(&g));
        let s = SummaryStats::from_values(&values).unwrap();
        prop_assert!(s.min <= s.q1 && s.q1 <= s.median && s.median <= s.q3 && s.q3 <= s.max);
        prop_assert!((s.iqr - (s.q3 - s.q1)).abs() < 1e-9);
    }
}
