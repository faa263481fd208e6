//! Grid discretization of Metropolis-within-Gibbs dynamics, for class and
//! period analysis of continuous chains.
//!
//! Cells are a regular grid over a bounding box; a transition between cell
//! centers is kept iff a single propose-and-accept step between them has
//! probability at least `min_prob`. Rejection mass stays on the diagonal and
//! rows are renormalized, which preserves the positivity pattern the class
//! analysis consumes.

use crate::mwg::{coord_acceptance_log, CoordinateProposal};
use crate::{Error, Point, Result, Scalar, TargetDensity};

use super::DiscreteKernel;

/// Regular grid: cell centers `lo + (j + 1/2) step` per free coordinate.
#[derive(Debug, Clone)]
pub struct GridSpec<F: Scalar> {
    pub lo: F,
    pub hi: F,
    pub step: F,
}

impl<F: Scalar> GridSpec<F> {
    pub fn new(lo: F, hi: F, step: F) -> Result<Self> {
        if !(hi > lo) || !(step > F::zero()) {
            return Err(Error::invalid("grid needs lo < hi and a positive step"));
        }
        Ok(GridSpec { lo, hi, step })
    }

    fn centers(&self) -> Vec<F> {
        let half = F::from_f64_lossy(0.5);
        let mut out = Vec::new();
        let mut j = 0usize;
        loop {
            let c = self.lo + (F::from_usize(j).unwrap() + half) * self.step;
            if c >= self.hi {
                break;
            }
            out.push(c);
            j += 1;
        }
        out
    }
}

/// Discretize the chain moving along the proposals' coordinates, with every
/// other coordinate pinned to the value it has in `base`.
///
/// Returns the kernel plus the cell-center point of each state.
pub fn discretize_mwg<F: Scalar>(
    target: &TargetDensity<F>,
    proposals: &[CoordinateProposal<F>],
    base: &Point<F>,
    grid: &GridSpec<F>,
    min_prob: f64,
) -> Result<(DiscreteKernel<F>, Vec<Point<F>>)> {
    if proposals.is_empty() {
        return Err(Error::invalid("at least one coordinate proposal required"));
    }
    if base.dim() != target.dim() {
        return Err(Error::DimensionMismatch { expected: target.dim(), got: base.dim() });
    }
    let mut free: Vec<u32> = proposals.iter().map(|p| p.index()).collect();
    free.sort_unstable();
    free.dedup();
    if free.len() != proposals.len() {
        return Err(Error::invalid("one proposal per coordinate required"));
    }
    if free.iter().any(|&i| i as usize > base.dim()) {
        return Err(Error::invalid("proposal coordinate exceeds dimension"));
    }

    let centers = grid.centers();
    if centers.is_empty() {
        return Err(Error::invalid("grid produced no cells"));
    }

    // Enumerate in-support cells.
    let r = free.len();
    let mut states: Vec<Point<F>> = Vec::new();
    let mut cell_of: std::collections::HashMap<Vec<usize>, usize> =
        std::collections::HashMap::new();
    let mut multi = vec![0usize; r];
    'outer: loop {
        let mut coords = base.coords().to_vec();
        for (axis, &ji) in multi.iter().enumerate() {
            coords[free[axis] as usize - 1] = centers[ji];
        }
        let p = Point::new(coords)?;
        if target.in_support(&p) {
            cell_of.insert(multi.clone(), states.len());
            states.push(p);
        }
        for axis in 0..r {
            multi[axis] += 1;
            if multi[axis] < centers.len() {
                continue 'outer;
            }
            multi[axis] = 0;
        }
        break;
    }
    if states.is_empty() {
        return Err(Error::invalid("no grid cell intersects the support"));
    }

    // Invert state -> multi-index for neighbor lookups.
    let mut index_of_state: Vec<Vec<usize>> = vec![Vec::new(); states.len()];
    for (mi, &s) in &cell_of {
        index_of_state[s] = mi.clone();
    }

    let pick = 1.0 / proposals.len() as f64;
    let width = grid.step.to_f64().unwrap();
    let mut rows: Vec<Vec<(u32, F)>> = Vec::with_capacity(states.len());
    for (s, x) in states.iter().enumerate() {
        let mut entries: Vec<(u32, F)> = Vec::new();
        let mut total = 0.0f64;
        for cp in proposals {
            let axis = free.iter().position(|&i| i == cp.index()).expect("free coord");
            for (ji, &z) in centers.iter().enumerate() {
                if ji == index_of_state[s][axis] {
                    continue;
                }
                let mut target_multi = index_of_state[s].clone();
                target_multi[axis] = ji;
                let Some(&dest) = cell_of.get(&target_multi) else {
                    continue; // off-support cell: rejected, mass stays put
                };
                let log_q = cp.log_q(x, z).to_f64().unwrap();
                if log_q == f64::NEG_INFINITY {
                    continue;
                }
                let log_alpha = coord_acceptance_log(target, cp, x, z)?.to_f64().unwrap();
                let w = pick * log_q.exp() * width * log_alpha.exp();
                if w >= min_prob {
                    entries.push((dest as u32, F::from_f64_lossy(w)));
                    total += w;
                }
            }
        }
        let stay = (1.0 - total).max(0.0);
        entries.push((s as u32, F::from_f64_lossy(stay)));
        // Renormalize: cell-center weights only approximate the continuous
        // step probabilities.
        let sum: f64 = total + stay;
        for e in &mut entries {
            e.1 = e.1 / F::from_f64_lossy(sum);
        }
        entries.sort_unstable_by_key(|&(j, _)| j);
        rows.push(entries);
    }

    let labels = states
        .iter()
        .map(|p| {
            p.coords().iter().map(|c| format!("{c}")).collect::<Vec<_>>().join(";")
        })
        .collect();
    let kernel = DiscreteKernel::from_sparse(states.len(), rows)?.with_labels(labels)?;
    Ok((kernel, states))
}
