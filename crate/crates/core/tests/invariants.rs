//! Property tests for the structural invariants.

use harris_core::diagnostics::{check_minorization, communicating_classes, wilson_interval, DiscreteKernel};
use harris_core::metropolis::{acceptance_log, log_balance_residual, ProposalKernel};
use harris_core::transdim::CoordMap;
use harris_core::{Move, Point, StepEvent, TargetDensity, Trace};
use proptest::prelude::*;

fn arb_stochastic_rows(n: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    proptest::collection::vec(proptest::collection::vec(0.01f64..1.0, n), n).prop_map(|raw| {
        raw.into_iter()
            .map(|row| {
                let sum: f64 = row.iter().sum();
                let mut normalized: Vec<f64> = row.iter().map(|v| v / sum).collect();
                let total: f64 = normalized.iter().sum();
                // Pin the row sum exactly by adjusting the largest entry.
                let imax = normalized
                    .iter()
                    .enumerate()
                    .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                    .map(|(i, _)| i)
                    .unwrap();
                normalized[imax] += 1.0 - total;
                normalized
            })
            .collect()
    })
}

proptest! {
    #[test]
    fn classes_partition_the_state_set(rows in (2usize..8).prop_flat_map(arb_stochastic_rows)) {
        let n = rows.len();
        let kernel = DiscreteKernel::from_dense(rows).unwrap();
        let classes = communicating_classes(&kernel);
        let mut seen = vec![false; n];
        for class in &classes {
            for &s in class {
                prop_assert!(!seen[s], "state {} in two classes", s);
                seen[s] = true;
            }
        }
        prop_assert!(seen.into_iter().all(|s| s));
    }

    #[test]
    fn minorization_certificate_dominates(rows in (2usize..6).prop_flat_map(arb_stochastic_rows)) {
        let n = rows.len();
        let kernel = DiscreteKernel::from_dense(rows).unwrap();
        let all: Vec<usize> = (0..n).collect();
        if let Some(m) = check_minorization(&kernel, &all).unwrap() {
            prop_assert!(m.epsilon > 0.0 && m.epsilon <= 1.0 + 1e-12);
            let total: f64 = m.nu.iter().sum();
            prop_assert!((total - 1.0).abs() < 1e-9);
            for x in 0..n {
                for (y, &nu) in m.nu.iter().enumerate() {
                    prop_assert!(kernel.prob(x, y) >= m.epsilon * nu - 1e-12);
                }
            }
        }
    }

    #[test]
    fn wilson_interval_is_ordered_and_bounded(k in 0u64..=500, extra in 0u64..500) {
        let n = k + extra + 1;
        let (lo, hi) = wilson_interval(k, n);
        let p = k as f64 / n as f64;
        prop_assert!((0.0..=1.0).contains(&lo));
        prop_assert!((0.0..=1.0).contains(&hi));
        prop_assert!(lo <= p && p <= hi);
    }

    #[test]
    fn trace_records_only_contiguous_steps(gap in 2u64..10) {
        let mut trace = Trace::<f64>::new();
        trace.record(StepEvent { step: 1, proposal: Move::Full, accepted: true, state: vec![0.0] }).unwrap();
        let err = trace.record(StepEvent {
            step: 1 + gap,
            proposal: Move::Full,
            accepted: true,
            state: vec![1.0],
        });
        prop_assert!(err.is_err());
        prop_assert_eq!(trace.len(), 1);
    }

    #[test]
    fn balance_identity_holds_for_gaussian_setups(
        sigma in 0.2f64..3.0,
        x0 in -3.0f64..3.0,
        x1 in -3.0f64..3.0,
        y0 in -3.0f64..3.0,
        y1 in -3.0f64..3.0,
    ) {
        let target = harris_core::standard_normal::<f64>(2);
        let proposal = ProposalKernel::gaussian_random_walk(2, sigma).unwrap();
        let x = Point::new(vec![x0, x1]).unwrap();
        let y = Point::new(vec![y0, y1]).unwrap();
        let residual = log_balance_residual(&target, &proposal, &x, &y).unwrap();
        prop_assert!(residual.abs() <= 1e-12, "residual {}", residual);
        prop_assert!(acceptance_log(&target, &proposal, &x, &y).unwrap() <= 0.0);
    }

    #[test]
    fn coordinate_maps_roundtrip(u in 0.01f64..0.99) {
        let x = CoordMap::Logit.apply(u).unwrap();
        let back = CoordMap::Sigmoid.apply(x).unwrap();
        prop_assert!((back - u).abs() < 1e-12);
        let jac = CoordMap::Logit.log_deriv(u).unwrap() + CoordMap::Sigmoid.log_deriv(x).unwrap();
        prop_assert!(jac.abs() < 1e-12);
    }

    #[test]
    fn off_support_targets_reject_consistently(shift in 0.1f64..5.0) {
        let target = TargetDensity::new(1, |p: &Point<f64>| p.coord(0) > 0.0, |p| -p.coord(0)).unwrap();
        let proposal = ProposalKernel::gaussian_random_walk(1, 1.0).unwrap();
        let inside = Point::new(vec![shift]).unwrap();
        let outside = Point::new(vec![-shift]).unwrap();
        prop_assert_eq!(
            acceptance_log(&target, &proposal, &inside, &outside).unwrap(),
            f64::NEG_INFINITY
        );
        let residual = log_balance_residual(&target, &proposal, &inside, &outside).unwrap();
        prop_assert_eq!(residual, 0.0);
    }
}
