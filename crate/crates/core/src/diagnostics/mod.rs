//! Harris-recurrence diagnostics: escape-probability estimation, exact
//! total-variation computations, class and period analysis, first-passage
//! probabilities, hyperplane integrability, minorization and drift checks,
//! and coordinate-coverage reports.

mod coverage;
mod discrete;
mod discretize;
mod drift;
mod linalg;
mod quadrature;

pub use coverage::{coverage_report, first_acceptance_steps, CoveragePoint, CoverageReport};
pub use discrete::{
    check_minorization, communicating_classes, hitting_probability, period,
    stationary_distribution, tv_curve, tv_exact, tv_period_averaged, DiscreteKernel, Minorization,
};
pub use discretize::{discretize_mwg, GridSpec};
pub use drift::{check_drift_exact, check_drift_mc, DriftProbe};
pub use quadrature::{hyperplane_integral, Hyperplane, IntegrabilityReport, QuadratureConfig, Verdict};

use rayon::prelude::*;
use serde::Serialize;

use crate::{derive_stream, Error, Result, RngStream};

/// 95% Wilson score interval for `successes` out of `trials`.
pub fn wilson_interval(successes: u64, trials: u64) -> (f64, f64) {
    assert!(trials > 0, "wilson interval needs at least one trial");
    let z = 1.959963984540054f64;
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    // Degenerate counts touch the boundary exactly.
    let lo = if successes == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if successes == trials { 1.0 } else { (center + half).min(1.0) };
    (lo, hi)
}

/// Monte Carlo estimate of the probability of staying inside a null set for
/// an entire horizon, with a 95% Wilson interval.
///
/// "Stays forever" is not decidable in finite time; the estimate is the
/// stay-through-horizon probability, and `truncation_bias_bound`, when set
/// by the caller, bounds the gap to the infinite-horizon quantity.
#[derive(Debug, Clone, Serialize)]
pub struct EscapeEstimate {
    pub estimate: f64,
    pub replicas: u64,
    pub horizon: u64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub truncation_bias_bound: Option<f64>,
    /// Per-replica first exit step (1-based); `None` when the replica stayed
    /// through the horizon. Not part of the JSON summary.
    #[serde(skip)]
    pub exit_steps: Vec<Option<u64>>,
}

impl EscapeEstimate {
    pub fn with_bias_bound(mut self, bound: f64) -> Self {
        self.truncation_bias_bound = Some(bound);
        self
    }

    pub fn stayed_count(&self) -> u64 {
        self.exit_steps.iter().filter(|e| e.is_none()).count() as u64
    }
}

/// Estimate the probability that a chain started at `start` stays inside
/// `null_set` for `horizon` steps.
///
/// Replicas run on independent [`RngStream`]s derived from `seed` and are
/// merged in replica order, so the result does not depend on scheduling.
pub fn estimate_escape<S, Step, InSet>(
    step: Step,
    null_set: InSet,
    start: &S,
    horizon: u64,
    replicas: u64,
    seed: u64,
) -> Result<EscapeEstimate>
where
    S: Clone + Send + Sync,
    Step: Fn(&S, &mut RngStream) -> S + Send + Sync,
    InSet: Fn(&S) -> bool + Send + Sync,
{
    if !null_set(start) {
        return Err(Error::invalid("escape estimation must start inside the null set"));
    }
    if horizon == 0 {
        return Err(Error::invalid("horizon must be at least 1"));
    }
    if replicas < 100 {
        return Err(Error::invalid("at least 100 replicas required"));
    }

    let exit_steps: Vec<Option<u64>> = (0..replicas)
        .into_par_iter()
        .map(|replica| {
            let mut rng = derive_stream(seed, replica);
            let mut state = start.clone();
            for n in 1..=horizon {
                state = step(&state, &mut rng);
                if !null_set(&state) {
                    return Some(n);
                }
            }
            None
        })
        .collect();

    let stayed = exit_steps.iter().filter(|e| e.is_none()).count() as u64;
    let (ci_low, ci_high) = wilson_interval(stayed, replicas);
    Ok(EscapeEstimate {
        estimate: stayed as f64 / replicas as f64,
        replicas,
        horizon,
        ci_low,
        ci_high,
        truncation_bias_bound: None,
        exit_steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_interval_brackets_the_estimate() {
        for (k, n) in [(0u64, 100u64), (1, 100), (50, 100), (99, 100), (100, 100)] {
            let (lo, hi) = wilson_interval(k, n);
            let p = k as f64 / n as f64;
            assert!((0.0..=1.0).contains(&lo));
            assert!((0.0..=1.0).contains(&hi));
            assert!(lo <= p && p <= hi, "({k}, {n}) -> [{lo}, {hi}]");
        }
    }

    #[test]
    fn closed_null_set_gives_estimate_one() {
        // A chain that never leaves {0}: the null set is closed.
        let est = estimate_escape(
            |_s: &u32, _rng: &mut RngStream| 0u32,
            |s: &u32| *s == 0,
            &0u32,
            50,
            200,
            1,
        )
        .unwrap();
        assert_eq!(est.estimate, 1.0);
        assert_eq!(est.stayed_count(), 200);
    }

    #[test]
    fn bernoulli_exit_matches_expected_rate() {
        // Leave the null set at each step with probability 1/4 independently:
        // stay-through-3 probability is (3/4)^3.
        use rand::Rng;
        let est = estimate_escape(
            |s: &bool, rng: &mut RngStream| *s && rng.random::<f64>() >= 0.25,
            |s: &bool| *s,
            &true,
            3,
            100_000,
            7,
        )
        .unwrap();
        let expected = 0.75f64.powi(3);
        assert!(est.ci_low <= expected && expected <= est.ci_high, "{est:?}");
    }

    #[test]
    fn deterministic_across_runs_and_sensitive_to_seed() {
        let run = |seed| {
            estimate_escape(
                |s: &u64, rng: &mut RngStream| {
                    use rand::Rng;
                    s + u64::from(rng.random::<f64>() < 0.5)
                },
                |s: &u64| *s < 3,
                &0u64,
                10,
                500,
                seed,
            )
            .unwrap()
            .exit_steps
        };
        assert_eq!(run(3), run(3));
        assert_ne!(run(3), run(4));
    }

    #[test]
    fn preconditions_are_enforced() {
        let step = |s: &u32, _: &mut RngStream| *s;
        assert!(estimate_escape(step, |s: &u32| *s == 0, &1u32, 10, 100, 0).is_err());
        assert!(estimate_escape(step, |s: &u32| *s == 1, &1u32, 0, 100, 0).is_err());
        assert!(estimate_escape(step, |s: &u32| *s == 1, &1u32, 10, 99, 0).is_err());
    }
}
