//! Metropolis-within-Gibbs: one coordinate is proposed per step, picked by a
//! scan schedule, and accepted or rejected by the usual ratio.
//!
//! Coordinate directions are 1-based everywhere in the public surface (trace
//! directions, reports, proposal indices); [`crate::Point`] itself stores a
//! plain 0-based vector.
//!
//! [`restrict_subchain`] realizes the chain conditioned on never proposing
//! outside a coordinate set: it simply drops the other proposals, so the
//! untouched coordinates are bit-identical over any trace.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, RngCore};

use crate::{Error, Move, Point, Result, Scalar, StepEvent, TargetDensity, Trace};

type SampleZFn<F> = Arc<dyn Fn(&Point<F>, &mut dyn RngCore) -> F + Send + Sync>;
type LogQiFn<F> = Arc<dyn Fn(&Point<F>, F) -> F + Send + Sync>;

/// Proposal for a single coordinate: draws a replacement value `z` for
/// coordinate `index` given the full current point, with density
/// `q_i(x, z)` (the density may depend on the whole of `x`).
#[derive(Clone)]
pub struct CoordinateProposal<F: Scalar> {
    index: u32,
    sample_z: SampleZFn<F>,
    log_q: LogQiFn<F>,
}

impl<F: Scalar> fmt::Debug for CoordinateProposal<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CoordinateProposal").field("index", &self.index).finish()
    }
}

impl<F: Scalar> CoordinateProposal<F> {
    pub fn from_parts(
        index: u32,
        sample_z: impl Fn(&Point<F>, &mut dyn RngCore) -> F + Send + Sync + 'static,
        log_q: impl Fn(&Point<F>, F) -> F + Send + Sync + 'static,
    ) -> Result<Self> {
        if index == 0 {
            return Err(Error::invalid("coordinate indices are 1-based"));
        }
        Ok(CoordinateProposal { index, sample_z: Arc::new(sample_z), log_q: Arc::new(log_q) })
    }

    /// Normal proposal centered at the current coordinate value.
    pub fn normal(index: u32, sigma: F) -> Result<Self> {
        if !(sigma > F::zero()) {
            return Err(Error::invalid("sigma must be positive"));
        }
        let half = F::from_f64_lossy(0.5);
        let log_norm = half * F::TAU().ln() + sigma.ln();
        let i0 = index as usize - 1;
        Self::from_parts(
            index,
            move |x: &Point<F>, rng: &mut dyn RngCore| {
                x.coord(i0) + sigma * F::standard_normal(rng)
            },
            move |x: &Point<F>, z: F| {
                let d = (z - x.coord(i0)) / sigma;
                -half * d * d - log_norm
            },
        )
    }

    /// Uniform proposal on `(x_i - w, x_i + w)`.
    pub fn uniform_window(index: u32, half_width: F) -> Result<Self> {
        if !(half_width > F::zero()) {
            return Err(Error::invalid("half_width must be positive"));
        }
        let i0 = index as usize - 1;
        let log_density = -(F::from_f64_lossy(2.0) * half_width).ln();
        Self::from_parts(
            index,
            move |x: &Point<F>, rng: &mut dyn RngCore| {
                F::uniform_in(rng, x.coord(i0) - half_width, x.coord(i0) + half_width)
            },
            move |x: &Point<F>, z: F| {
                if (z - x.coord(i0)).abs() < half_width {
                    log_density
                } else {
                    F::neg_infinity()
                }
            },
        )
    }

    /// Gibbs proposal: draw coordinate `index` from its full conditional.
    ///
    /// `sample` must draw exactly from `f(x_i | x_{-i})` and `log_cond` must
    /// be its log-density; both may read every coordinate of the current
    /// point except the one being replaced. Used in [`mwg_step`], the
    /// resulting proposal accepts every move (the ratio cancels exactly).
    pub fn full_conditional(
        index: u32,
        sample: impl Fn(&Point<F>, &mut dyn RngCore) -> F + Send + Sync + 'static,
        log_cond: impl Fn(&Point<F>, F) -> F + Send + Sync + 'static,
    ) -> Result<Self> {
        Self::from_parts(index, sample, log_cond)
    }

    /// Full conditional of one coordinate of a centered bivariate normal
    /// with unit variances and correlation `rho`: `N(rho * other, 1 - rho^2)`.
    pub fn bivariate_normal_conditional(index: u32, rho: F) -> Result<Self> {
        if index != 1 && index != 2 {
            return Err(Error::invalid("bivariate conditional: index must be 1 or 2"));
        }
        if !(rho.abs() < F::one()) {
            return Err(Error::invalid("correlation must lie in (-1, 1)"));
        }
        let other = if index == 1 { 1usize } else { 0usize };
        let var = F::one() - rho * rho;
        let sd = var.sqrt();
        let half = F::from_f64_lossy(0.5);
        let log_norm = half * F::TAU().ln() + sd.ln();
        Self::full_conditional(
            index,
            move |x: &Point<F>, rng: &mut dyn RngCore| {
                rho * x.coord(other) + sd * F::standard_normal(rng)
            },
            move |x: &Point<F>, z: F| {
                let d = (z - rho * x.coord(other)) / sd;
                -half * d * d - log_norm
            },
        )
    }

    /// 1-based coordinate this proposal updates.
    pub fn index(&self) -> u32 {
        self.index
    }

    pub fn sample_z(&self, x: &Point<F>, rng: &mut dyn RngCore) -> F {
        (self.sample_z)(x, rng)
    }

    pub fn log_q(&self, x: &Point<F>, z: F) -> F {
        (self.log_q)(x, z)
    }

    /// The induced full-dimensional proposal kernel (a move along one
    /// coordinate line), e.g. for [`crate::metropolis::rejection_prob`].
    pub fn as_proposal_kernel(&self) -> crate::metropolis::ProposalKernel<F> {
        let this = self.clone();
        let other = self.clone();
        crate::metropolis::ProposalKernel::from_parts(
            move |x: &Point<F>, rng: &mut dyn RngCore| {
                let z = this.sample_z(x, rng);
                if z.is_finite() {
                    x.with_coord(this.index as usize - 1, z).expect("valid index")
                } else {
                    x.clone()
                }
            },
            move |x: &Point<F>, y: &Point<F>| {
                let i0 = other.index as usize - 1;
                let along_line = x
                    .coords()
                    .iter()
                    .zip(y.coords())
                    .enumerate()
                    .all(|(j, (a, b))| j == i0 || a == b);
                if along_line {
                    other.log_q(x, y.coord(i0))
                } else {
                    F::neg_infinity()
                }
            },
        )
    }
}

/// How the coordinate to update is chosen at each step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScanKind {
    /// Independent uniform picks.
    Random,
    /// Cyclic: step n updates entry `((n - 1) mod k) + 1` of the list.
    Deterministic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScanSchedule {
    pub kind: ScanKind,
}

impl ScanSchedule {
    pub fn random() -> Self {
        ScanSchedule { kind: ScanKind::Random }
    }

    pub fn deterministic() -> Self {
        ScanSchedule { kind: ScanKind::Deterministic }
    }

    /// Position in the proposal list used at step `n` (1-based step index).
    pub fn pick(&self, n: u64, len: usize, rng: &mut dyn RngCore) -> usize {
        match self.kind {
            ScanKind::Deterministic => ((n - 1) % len as u64) as usize,
            ScanKind::Random => rng.random_range(0..len),
        }
    }
}

/// `log alpha_i(x, y)` where `y` replaces coordinate `cp.index` of `x` by `z`.
///
/// Same conventions as the full-dimensional acceptance: `alpha_i = 1` when
/// `f(x) q_i(x, y) = 0`, and an off-support `y` is never accepted.
pub fn coord_acceptance_log<F: Scalar>(
    target: &TargetDensity<F>,
    cp: &CoordinateProposal<F>,
    x: &Point<F>,
    z: F,
) -> Result<F> {
    if !z.is_finite() {
        return Ok(F::neg_infinity());
    }
    let i0 = cp.index as usize - 1;
    if i0 >= x.dim() {
        return Err(Error::invalid(format!(
            "proposal updates coordinate {} of a {}-dimensional point",
            cp.index,
            x.dim()
        )));
    }
    let denom = target.log_density(x)? + cp.log_q(x, z);
    if denom == F::neg_infinity() {
        return Ok(F::zero());
    }
    let y = x.with_coord(i0, z)?;
    let num = target.log_density(&y)? + cp.log_q(&y, x.coord(i0));
    if num == F::neg_infinity() {
        return Ok(F::neg_infinity());
    }
    Ok((num - denom).min(F::zero()))
}

/// One Metropolis-within-Gibbs step. Returns the next state, the 1-based
/// direction that was proposed (reported even on rejection), and the accept
/// flag. At most one coordinate differs between input and output.
pub fn mwg_step<F: Scalar>(
    target: &TargetDensity<F>,
    proposals: &[CoordinateProposal<F>],
    schedule: ScanSchedule,
    n: u64,
    x: &Point<F>,
    rng: &mut dyn RngCore,
) -> Result<(Point<F>, u32, bool)> {
    if proposals.is_empty() {
        return Err(Error::invalid("mwg_step needs at least one coordinate proposal"));
    }
    let cp = &proposals[schedule.pick(n, proposals.len(), rng)];
    let z = cp.sample_z(x, rng);
    let log_alpha = coord_acceptance_log(target, cp, x, z)?;
    if F::unit_open(rng).ln() < log_alpha {
        Ok((x.with_coord(cp.index as usize - 1, z)?, cp.index, true))
    } else {
        Ok((x.clone(), cp.index, false))
    }
}

/// Restrict a proposal list to the coordinate set `keep` (1-based indices):
/// the returned configuration proposes only those directions, so all other
/// coordinates are constant over any trace.
pub fn restrict_subchain<F: Scalar>(
    proposals: &[CoordinateProposal<F>],
    keep: &[u32],
) -> Result<Vec<CoordinateProposal<F>>> {
    if keep.is_empty() {
        return Err(Error::invalid("subchain restriction needs a nonempty coordinate set"));
    }
    for &i in keep {
        if !proposals.iter().any(|cp| cp.index == i) {
            return Err(Error::invalid(format!("no proposal for coordinate {i}")));
        }
    }
    Ok(proposals.iter().filter(|cp| keep.contains(&cp.index)).cloned().collect())
}

/// Run `steps` Metropolis-within-Gibbs steps from `start`, recording a trace.
pub fn run_mwg<F: Scalar>(
    target: &TargetDensity<F>,
    proposals: &[CoordinateProposal<F>],
    schedule: ScanSchedule,
    start: &Point<F>,
    steps: u64,
    rng: &mut dyn RngCore,
) -> Result<Trace<F>> {
    if !target.in_support(start) {
        return Err(Error::invalid("start state must lie in the support"));
    }
    let mut trace = Trace::with_capacity(steps as usize);
    let mut x = start.clone();
    for n in 1..=steps {
        let (next, direction, accepted) = mwg_step(target, proposals, schedule, n, &x, rng)?;
        x = next;
        trace.record(StepEvent {
            step: n,
            proposal: Move::Coordinate(direction),
            accepted,
            state: x.coords().to_vec(),
        })?;
    }
    Ok(trace)
}

/// Per-coordinate detailed-balance residual, zero when both sides are
/// negative infinity; see [`crate::metropolis::log_balance_residual`].
pub fn coord_log_balance_residual<F: Scalar>(
    target: &TargetDensity<F>,
    cp: &CoordinateProposal<F>,
    x: &Point<F>,
    z: F,
) -> Result<F> {
    let i0 = cp.index as usize - 1;
    let y = x.with_coord(i0, z)?;
    let lhs = target.log_density(x)? + cp.log_q(x, z) + coord_acceptance_log(target, cp, x, z)?;
    let rhs = target.log_density(&y)?
        + cp.log_q(&y, x.coord(i0))
        + coord_acceptance_log(target, cp, &y, x.coord(i0))?;
    if lhs == F::neg_infinity() && rhs == F::neg_infinity() {
        return Ok(F::zero());
    }
    Ok(lhs - rhs)
}
