//! Drift-condition checks: does one kernel step decrease a Lyapunov
//! function, `E[V(X_1) | X_0 = x] <= V(x) - 1 + b 1_C(x)`, at probe states?

use rayon::prelude::*;
use serde::Serialize;

use crate::{derive_stream, Error, Result, RngStream, Scalar};

use super::DiscreteKernel;

/// Drift check at one probe state.
#[derive(Debug, Clone, Serialize)]
pub struct DriftProbe {
    pub state: String,
    pub value: f64,
    pub expectation: f64,
    pub bound: f64,
    pub satisfied: bool,
    /// Standard error of the expectation, absent for exact evaluation.
    pub std_error: Option<f64>,
}

fn probe_report(state: String, value: f64, expectation: f64, in_c: bool, b: f64, se: Option<f64>) -> DriftProbe {
    let bound = value - 1.0 + if in_c { b } else { 0.0 };
    DriftProbe { state, value, expectation, bound, satisfied: expectation <= bound, std_error: se }
}

/// Monte Carlo drift check for an arbitrary kernel step function.
///
/// `v` must be positive at every probe state. Each probe gets its own
/// replica stream, so reports are reproducible and order-independent.
pub fn check_drift_mc<S, Step, VF, CF>(
    step: Step,
    v: VF,
    in_c: CF,
    b: f64,
    probes: &[S],
    budget: u64,
    seed: u64,
) -> Result<Vec<DriftProbe>>
where
    S: Clone + Send + Sync + std::fmt::Debug,
    Step: Fn(&S, &mut RngStream) -> S + Send + Sync,
    VF: Fn(&S) -> f64 + Send + Sync,
    CF: Fn(&S) -> bool + Send + Sync,
{
    if probes.is_empty() {
        return Err(Error::invalid("at least one probe state required"));
    }
    if budget == 0 {
        return Err(Error::invalid("budget must be at least 1"));
    }
    for p in probes {
        if !(v(p) > 0.0) {
            return Err(Error::invalid(format!("V must be positive at probe {p:?}")));
        }
    }
    Ok(probes
        .par_iter()
        .enumerate()
        .map(|(i, x)| {
            let mut rng = derive_stream(seed, i as u64);
            let mut sum = 0.0;
            let mut sum_sq = 0.0;
            for _ in 0..budget {
                let w = v(&step(x, &mut rng));
                sum += w;
                sum_sq += w * w;
            }
            let n = budget as f64;
            let mean = sum / n;
            let var = if budget > 1 { ((sum_sq - sum * sum / n) / (n - 1.0)).max(0.0) } else { 0.0 };
            probe_report(format!("{x:?}"), v(x), mean, in_c(x), b, Some((var / n).sqrt()))
        })
        .collect())
}

/// Exact drift check on a finite kernel: the expectation is the inner
/// product of the probe's row with `V`.
pub fn check_drift_exact<F: Scalar>(
    kernel: &DiscreteKernel<F>,
    v: &dyn Fn(usize) -> f64,
    in_c: &dyn Fn(usize) -> bool,
    b: f64,
    probes: &[usize],
) -> Result<Vec<DriftProbe>> {
    if probes.is_empty() {
        return Err(Error::invalid("at least one probe state required"));
    }
    for &p in probes {
        if p >= kernel.n_states() {
            return Err(Error::invalid(format!("probe {p} out of range")));
        }
        if !(v(p) > 0.0) {
            return Err(Error::invalid(format!("V must be positive at probe {p}")));
        }
    }
    Ok(probes
        .iter()
        .map(|&x| {
            let expectation: f64 = kernel
                .row(x)
                .iter()
                .map(|&(j, p)| p.to_f64().unwrap() * v(j as usize))
                .sum();
            probe_report(kernel.label(x), v(x), expectation, in_c(x), b, None)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_lyapunov_with_global_small_set_is_satisfied() {
        let k = DiscreteKernel::from_dense(vec![vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        let reports = check_drift_exact(&k, &|_| 1.0, &|_| true, 1.0, &[0, 1]).unwrap();
        assert!(reports.iter().all(|r| r.satisfied));
    }

    #[test]
    fn exact_matches_monte_carlo_within_three_se() {
        let k = DiscreteKernel::from_dense(vec![
            vec![0.2, 0.5, 0.3],
            vec![0.6, 0.1, 0.3],
            vec![0.3, 0.3, 0.4],
        ])
        .unwrap();
        let v = |s: usize| 1.0 + s as f64;
        let exact = check_drift_exact(&k, &v, &|s| s == 0, 2.0, &[0, 1, 2]).unwrap();
        let k2 = k.clone();
        let mc = check_drift_mc(
            move |s: &usize, rng: &mut RngStream| k2.sample_next(*s, rng),
            |s: &usize| v(*s),
            |s: &usize| *s == 0,
            2.0,
            &[0usize, 1, 2],
            200_000,
            5,
        )
        .unwrap();
        for (e, m) in exact.iter().zip(&mc) {
            let se = m.std_error.unwrap();
            assert!(
                (e.expectation - m.expectation).abs() <= 3.0 * se,
                "exact {} vs mc {} (se {se})",
                e.expectation,
                m.expectation
            );
        }
    }

    #[test]
    fn nonpositive_lyapunov_is_rejected() {
        let k = DiscreteKernel::from_dense(vec![vec![1.0]]).unwrap();
        assert!(check_drift_exact(&k, &|_| 0.0, &|_| false, 1.0, &[0]).is_err());
    }
}
