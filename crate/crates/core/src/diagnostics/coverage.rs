//! Coordinate-coverage reports: when did a chain first accept a move in each
//! coordinate direction, and how fast does the probability of still missing
//! a direction decay?

use serde::Serialize;

use crate::{Error, Move, Result, Scalar, Trace};

/// First accepted-move step for each coordinate 1..=d (`None` if the
/// coordinate was never moved within the trace).
pub fn first_acceptance_steps<F: Scalar>(trace: &Trace<F>, d: usize) -> Vec<Option<u64>> {
    let mut first = vec![None; d];
    for e in trace.steps() {
        if !e.accepted {
            continue;
        }
        if let Move::Coordinate(i) = e.proposal {
            let i = i as usize;
            if i >= 1 && i <= d && first[i - 1].is_none() {
                first[i - 1] = Some(e.step);
            }
        }
    }
    first
}

/// Empirical probability, at one checkpoint, that some coordinate direction
/// has not yet seen an accepted move.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CoveragePoint {
    pub n: u64,
    pub p_hat: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CoverageReport {
    pub d: usize,
    pub replicas: u64,
    /// Per replica, per coordinate: first accepted-move step.
    pub first_accept: Vec<Vec<Option<u64>>>,
    /// Decay of the not-yet-covered probability over the checkpoints.
    pub p_hat: Vec<CoveragePoint>,
}

/// Aggregate coverage over replica traces of a `d`-coordinate chain.
pub fn coverage_report<F: Scalar>(
    traces: &[Trace<F>],
    d: usize,
    checkpoints: &[u64],
) -> Result<CoverageReport> {
    if traces.is_empty() {
        return Err(Error::invalid("at least one trace required"));
    }
    if d == 0 {
        return Err(Error::invalid("dimension must be at least 1"));
    }
    let first_accept: Vec<Vec<Option<u64>>> =
        traces.iter().map(|t| first_acceptance_steps(t, d)).collect();
    let mut sorted = checkpoints.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let p_hat = sorted
        .iter()
        .map(|&n| {
            let uncovered = first_accept
                .iter()
                .filter(|firsts| firsts.iter().any(|f| f.map_or(true, |s| s > n)))
                .count();
            CoveragePoint { n, p_hat: uncovered as f64 / traces.len() as f64 }
        })
        .collect();
    Ok(CoverageReport { d, replicas: traces.len() as u64, first_accept, p_hat })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{StepEvent, Trace};

    fn trace_from(moves: &[(u32, bool)]) -> Trace<f64> {
        let mut t = Trace::new();
        for (n, &(dir, acc)) in moves.iter().enumerate() {
            t.record(StepEvent {
                step: n as u64 + 1,
                proposal: Move::Coordinate(dir),
                accepted: acc,
                state: vec![0.0],
            })
            .unwrap();
        }
        t
    }

    #[test]
    fn first_acceptances_are_found() {
        let t = trace_from(&[(1, false), (2, true), (1, true), (2, true)]);
        assert_eq!(first_acceptance_steps(&t, 2), vec![Some(3), Some(2)]);
        assert_eq!(first_acceptance_steps(&t, 3), vec![Some(3), Some(2), None]);
    }

    #[test]
    fn deterministic_gibbs_covers_by_step_d() {
        // Every proposal accepted, cyclic scan over three coordinates.
        let t = trace_from(&[(1, true), (2, true), (3, true), (1, true)]);
        let report = coverage_report(&[t], 3, &[1, 2, 3, 4]).unwrap();
        let p: Vec<f64> = report.p_hat.iter().map(|c| c.p_hat).collect();
        assert_eq!(p, vec![1.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn never_covered_coordinate_keeps_p_hat_at_one() {
        let t = trace_from(&[(1, true), (1, true)]);
        let report = coverage_report(&[t], 2, &[1, 2]).unwrap();
        assert!(report.p_hat.iter().all(|c| c.p_hat == 1.0));
        assert_eq!(report.first_accept[0][1], None);
    }
}
