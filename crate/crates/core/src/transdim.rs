//! Coordinate-preserving trans-dimensional MCMC over a finite family of
//! models of different dimensions.
//!
//! A state is a pair `(m, x)` with `x` in the support of the model-`m`
//! target. Each step is a between-model move with probability `a`, else a
//! within-model move (one uniformly chosen coordinate, Metropolis-updated).
//! Between-model moves propose `m' ~ R(m, .)` and push the point through
//! per-coordinate monotone maps; dimension-raising coordinates are fed fresh
//! Uniform(0,1) draws, materialized lazily only when such a move actually
//! needs them. The acceptance ratio is the usual reversible-jump one: target
//! ratio times reverse/forward model-proposal ratio times the product of the
//! per-coordinate map derivatives.
//!
//! Model weights are taken as given; for the marginal law of the model index
//! to match them exactly, the per-model densities must be normalized.

use std::collections::BTreeMap;

use rand::{Rng, RngCore};
use serde::Serialize;

use crate::mwg::{mwg_step, CoordinateProposal, ScanSchedule};
use crate::{Error, Move, Point, Result, Scalar, StepEvent, TargetDensity, Trace};

/// Model weights `p(m)` and per-model unnormalized densities.
#[derive(Debug, Clone)]
pub struct TransDimTarget<F: Scalar> {
    ids: Vec<u32>,
    targets: Vec<TargetDensity<F>>,
    log_weights: Vec<F>,
}

impl<F: Scalar> TransDimTarget<F> {
    /// Build from `(model id, weight, target)` triples. Weights must be
    /// positive and sum to one within 1e-12; at least two models required.
    pub fn new(models: Vec<(u32, f64, TargetDensity<F>)>) -> Result<Self> {
        if models.len() < 2 {
            return Err(Error::invalid("a trans-dimensional target needs at least 2 models"));
        }
        let mut ids = Vec::with_capacity(models.len());
        let mut targets = Vec::with_capacity(models.len());
        let mut log_weights = Vec::with_capacity(models.len());
        let mut total = 0.0f64;
        for (id, weight, target) in models {
            if ids.contains(&id) {
                return Err(Error::invalid(format!("duplicate model id {id}")));
            }
            if !(weight > 0.0) {
                return Err(Error::invalid(format!("model {id}: weight must be positive")));
            }
            total += weight;
            ids.push(id);
            targets.push(target);
            log_weights.push(F::from_f64_lossy(weight.ln()));
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!("model weights sum to {total}, not 1")));
        }
        Ok(TransDimTarget { ids, targets, log_weights })
    }

    pub fn model_ids(&self) -> &[u32] {
        &self.ids
    }

    fn position(&self, id: u32) -> Result<usize> {
        self.ids
            .iter()
            .position(|&m| m == id)
            .ok_or_else(|| Error::invalid(format!("unknown model id {id}")))
    }

    pub fn dim(&self, id: u32) -> Result<usize> {
        Ok(self.targets[self.position(id)?].dim())
    }

    pub fn log_weight(&self, id: u32) -> Result<F> {
        Ok(self.log_weights[self.position(id)?])
    }

    pub fn model_target(&self, id: u32) -> Result<&TargetDensity<F>> {
        Ok(&self.targets[self.position(id)?])
    }

    pub fn log_density(&self, id: u32, x: &Point<F>) -> Result<F> {
        self.model_target(id)?.log_density(x)
    }
}

/// A point of the union space: a model id plus a point of that model's
/// support.
#[derive(Debug, Clone, PartialEq)]
pub struct TransDimState<F: Scalar> {
    model: u32,
    point: Point<F>,
}

impl<F: Scalar> TransDimState<F> {
    pub fn new(target: &TransDimTarget<F>, model: u32, point: Point<F>) -> Result<Self> {
        if !target.model_target(model)?.in_support(&point) {
            return Err(Error::invalid(format!(
                "state not in the support of model {model}"
            )));
        }
        Ok(TransDimState { model, point })
    }

    pub fn model(&self) -> u32 {
        self.model
    }

    pub fn point(&self) -> &Point<F> {
        &self.point
    }
}

/// Between-model proposal kernel `R(m, .)` on the model ids; rows are
/// stochastic and support is symmetric (`R(m, m') > 0` iff `R(m', m) > 0`).
#[derive(Debug, Clone)]
pub struct ModelJumpKernel {
    ids: Vec<u32>,
    rows: Vec<Vec<f64>>,
}

impl ModelJumpKernel {
    pub fn new(ids: Vec<u32>, rows: Vec<Vec<f64>>) -> Result<Self> {
        let k = ids.len();
        if k < 2 || rows.len() != k || rows.iter().any(|r| r.len() != k) {
            return Err(Error::invalid("jump kernel needs a square matrix over >= 2 models"));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.iter().any(|&p| !(0.0..=1.0 + 1e-12).contains(&p)) {
                return Err(Error::invalid(format!("jump row {i} has entries outside [0, 1]")));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-12 {
                return Err(Error::invalid(format!("jump row {i} sums to {sum}, not 1")));
            }
        }
        for i in 0..k {
            for j in 0..k {
                if (rows[i][j] > 0.0) != (rows[j][i] > 0.0) {
                    return Err(Error::invalid(format!(
                        "jump support must be symmetric: R({}, {}) vs R({}, {})",
                        ids[i], ids[j], ids[j], ids[i]
                    )));
                }
            }
        }
        Ok(ModelJumpKernel { ids, rows })
    }

    /// Uniform proposals over the adjacent ids in the given order.
    pub fn uniform_neighbors(ids: Vec<u32>) -> Result<Self> {
        let k = ids.len();
        if k < 2 {
            return Err(Error::invalid("need at least 2 models"));
        }
        let mut rows = vec![vec![0.0; k]; k];
        for i in 0..k {
            let neighbors: Vec<usize> = [i.checked_sub(1), (i + 1 < k).then_some(i + 1)]
                .into_iter()
                .flatten()
                .collect();
            for &j in &neighbors {
                rows[i][j] = 1.0 / neighbors.len() as f64;
            }
        }
        Self::new(ids, rows)
    }

    fn position(&self, id: u32) -> Result<usize> {
        self.ids
            .iter()
            .position(|&m| m == id)
            .ok_or_else(|| Error::invalid(format!("unknown model id {id}")))
    }

    pub fn log_r(&self, from: u32, to: u32) -> Result<f64> {
        let p = self.rows[self.position(from)?][self.position(to)?];
        Ok(if p > 0.0 { p.ln() } else { f64::NEG_INFINITY })
    }

    pub fn sample(&self, from: u32, rng: &mut dyn RngCore) -> Result<u32> {
        let row = &self.rows[self.position(from)?];
        let u = f64::unit(rng);
        let mut acc = 0.0;
        for (j, &p) in row.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            acc += p;
            if u < acc {
                return Ok(self.ids[j]);
            }
        }
        // Numerical slack: return the last positive entry.
        row.iter()
            .rposition(|&p| p > 0.0)
            .map(|j| self.ids[j])
            .ok_or_else(|| Error::invalid(format!("model {from} has no jump targets")))
    }
}

/// A strictly monotone differentiable map of one coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoordMap {
    Identity,
    /// `u -> log(u / (1 - u))`, from (0,1) onto the real line; the default
    /// dimension-raising transform.
    Logit,
    /// `x -> 1 / (1 + exp(-x))`, inverse of `Logit`.
    Sigmoid,
}

impl CoordMap {
    /// Apply the map; `None` where it is undefined (logit outside (0,1)).
    pub fn apply<F: Scalar>(self, v: F) -> Option<F> {
        match self {
            CoordMap::Identity => Some(v),
            CoordMap::Logit => {
                if v > F::zero() && v < F::one() {
                    Some(v.ln() - (-v).ln_1p())
                } else {
                    None
                }
            }
            CoordMap::Sigmoid => Some(sigmoid(v)),
        }
    }

    /// `log |h'(v)|`; `None` where the map is undefined.
    pub fn log_deriv<F: Scalar>(self, v: F) -> Option<F> {
        match self {
            CoordMap::Identity => Some(F::zero()),
            CoordMap::Logit => {
                if v > F::zero() && v < F::one() {
                    // d/du logit(u) = 1 / (u (1 - u))
                    Some(-(v.ln() + (-v).ln_1p()))
                } else {
                    None
                }
            }
            // d/dx sigmoid(x) = sigmoid(x) (1 - sigmoid(x)),
            // stably -softplus(x) - softplus(-x).
            CoordMap::Sigmoid => Some(-softplus(v) - softplus(-v)),
        }
    }

    pub fn inverse(self) -> CoordMap {
        match self {
            CoordMap::Identity => CoordMap::Identity,
            CoordMap::Logit => CoordMap::Sigmoid,
            CoordMap::Sigmoid => CoordMap::Logit,
        }
    }
}

fn sigmoid<F: Scalar>(x: F) -> F {
    if x >= F::zero() {
        F::one() / (F::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (F::one() + e)
    }
}

fn softplus<F: Scalar>(x: F) -> F {
    if x > F::zero() {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Per-ordered-pair, per-coordinate monotone maps used by between-model
/// moves; `maps(j, i)` must hold the coordinatewise inverses of `maps(i, j)`.
#[derive(Debug, Clone)]
pub struct CoordinateMaps {
    per_pair: BTreeMap<(u32, u32), Vec<CoordMap>>,
}

impl CoordinateMaps {
    pub fn new(per_pair: BTreeMap<(u32, u32), Vec<CoordMap>>) -> Result<Self> {
        for (&(i, j), maps) in &per_pair {
            let reverse = per_pair
                .get(&(j, i))
                .ok_or_else(|| Error::invalid(format!("maps for ({j}, {i}) missing")))?;
            if reverse.len() != maps.len()
                || maps.iter().zip(reverse).any(|(m, r)| m.inverse() != *r)
            {
                return Err(Error::invalid(format!(
                    "maps for ({j}, {i}) are not the coordinatewise inverses of ({i}, {j})"
                )));
            }
        }
        Ok(CoordinateMaps { per_pair })
    }

    /// Default maps for every pair with `R > 0`: identity on the shared
    /// coordinates, logit on the raised ones (sigmoid on the lowered ones).
    pub fn logistic_raising<F: Scalar>(
        target: &TransDimTarget<F>,
        jump: &ModelJumpKernel,
    ) -> Result<Self> {
        let mut per_pair = BTreeMap::new();
        for &i in target.model_ids() {
            for &j in target.model_ids() {
                if i == j || jump.log_r(i, j)? == f64::NEG_INFINITY {
                    continue;
                }
                let di = target.dim(i)?;
                let dj = target.dim(j)?;
                let shared = di.min(dj);
                let len = di.max(dj);
                let mut maps = vec![CoordMap::Identity; len];
                for m in maps.iter_mut().take(len).skip(shared) {
                    *m = if dj > di { CoordMap::Logit } else { CoordMap::Sigmoid };
                }
                per_pair.insert((i, j), maps);
            }
        }
        Self::new(per_pair)
    }

    pub fn maps(&self, from: u32, to: u32) -> Result<&[CoordMap]> {
        self.per_pair
            .get(&(from, to))
            .map(Vec::as_slice)
            .ok_or_else(|| Error::invalid(format!("no maps registered for ({from}, {to})")))
    }
}

/// Apply the `(from, to)` maps coordinatewise to an extended point carrying
/// `max(d_from, d_to)` coordinates. Returns the image and the log-Jacobian
/// (the sum of the per-coordinate log-derivatives).
///
/// Errors when a map is undefined at its input, e.g. logit outside (0,1).
pub fn apply_map<F: Scalar>(
    maps: &CoordinateMaps,
    from: u32,
    to: u32,
    extended: &[F],
) -> Result<(Vec<F>, F)> {
    let pair_maps = maps.maps(from, to)?;
    if extended.len() != pair_maps.len() {
        return Err(Error::DimensionMismatch { expected: pair_maps.len(), got: extended.len() });
    }
    let mut image = Vec::with_capacity(extended.len());
    let mut log_jacobian = F::zero();
    for (coord, (&v, &map)) in extended.iter().zip(pair_maps).enumerate() {
        let mapped = map
            .apply(v)
            .ok_or_else(|| Error::invalid(format!("map undefined at coordinate {} value {v}", coord + 1)))?;
        let ld = map
            .log_deriv(v)
            .ok_or_else(|| Error::invalid(format!("derivative undefined at coordinate {}", coord + 1)))?;
        image.push(mapped);
        log_jacobian += ld;
    }
    Ok((image, log_jacobian))
}

/// Coordinate proposals per model for the within-model moves.
#[derive(Debug, Clone)]
pub struct WithinProposals<F: Scalar> {
    per_model: BTreeMap<u32, Vec<CoordinateProposal<F>>>,
}

impl<F: Scalar> WithinProposals<F> {
    /// One proposal per coordinate of each model, indices 1..=d_m.
    pub fn new(per_model: BTreeMap<u32, Vec<CoordinateProposal<F>>>) -> Result<Self> {
        for (&id, proposals) in &per_model {
            for (pos, cp) in proposals.iter().enumerate() {
                if cp.index() as usize != pos + 1 {
                    return Err(Error::invalid(format!(
                        "model {id}: proposal {pos} must update coordinate {}",
                        pos + 1
                    )));
                }
            }
        }
        Ok(WithinProposals { per_model })
    }

    /// Unit-normal proposals for every coordinate of every model.
    pub fn unit_normal(target: &TransDimTarget<F>) -> Result<Self> {
        let mut per_model = BTreeMap::new();
        for &id in target.model_ids() {
            let d = target.dim(id)?;
            let proposals = (1..=d as u32)
                .map(|i| CoordinateProposal::normal(i, F::one()))
                .collect::<Result<Vec<_>>>()?;
            per_model.insert(id, proposals);
        }
        Self::new(per_model)
    }

    pub fn for_model(&self, id: u32) -> Result<&[CoordinateProposal<F>]> {
        self.per_model
            .get(&id)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::invalid(format!("no within-model proposals for model {id}")))
    }
}

/// A fully evaluated between-model proposal, before the accept flip.
#[derive(Debug, Clone)]
pub struct BetweenProposal<F: Scalar> {
    pub proposed_model: u32,
    /// Proposed point; `None` when the move is unacceptable (off support,
    /// auxiliary value outside (0,1), or an undefined map).
    pub proposed_point: Option<Point<F>>,
    pub log_alpha: F,
    /// Fresh Uniform(0,1) draws consumed to fill raised coordinates. Only
    /// between-model proposals ever materialize auxiliary coordinates.
    pub aux_draws: usize,
}

/// Propose (without accepting) one between-model move from `state`.
pub fn propose_between<F: Scalar>(
    target: &TransDimTarget<F>,
    jump: &ModelJumpKernel,
    maps: &CoordinateMaps,
    state: &TransDimState<F>,
    rng: &mut dyn RngCore,
) -> Result<BetweenProposal<F>> {
    let from = state.model();
    let to = jump.sample(from, rng)?;
    let d_from = target.dim(from)?;
    let d_to = target.dim(to)?;

    // Extended point: current coordinates plus lazily materialized
    // Uniform(0,1) draws for the raised coordinates.
    let mut extended = state.point().coords().to_vec();
    let aux_draws = d_to.saturating_sub(d_from);
    for _ in 0..aux_draws {
        extended.push(F::unit_open(rng));
    }

    let rejected = |to, aux_draws| BetweenProposal {
        proposed_model: to,
        proposed_point: None,
        log_alpha: F::neg_infinity(),
        aux_draws,
    };

    let (image, log_jacobian) = match apply_map(maps, from, to, &extended) {
        Ok(v) => v,
        Err(_) => return Ok(rejected(to, aux_draws)),
    };
    // Coordinates beyond d_to become auxiliary uniforms of the target model;
    // their stationary density is supported on (0,1) only.
    if image[d_to..].iter().any(|&u| !(u > F::zero() && u < F::one())) {
        return Ok(rejected(to, aux_draws));
    }
    let point = match Point::new(image[..d_to].to_vec()) {
        Ok(p) => p,
        Err(_) => return Ok(rejected(to, aux_draws)),
    };
    let log_f_to = target.log_density(to, &point)?;
    if log_f_to == F::neg_infinity() {
        return Ok(rejected(to, aux_draws));
    }
    let log_f_from = target.log_density(from, state.point())?;
    // Grouped as numerator minus denominator so that fully symmetric setups
    // cancel bit-exactly.
    let log_num = target.log_weight(to)?
        + log_f_to
        + F::from_f64_lossy(jump.log_r(to, from)?)
        + log_jacobian;
    let log_denom =
        target.log_weight(from)? + log_f_from + F::from_f64_lossy(jump.log_r(from, to)?);
    let log_alpha = (log_num - log_denom).min(F::zero());
    Ok(BetweenProposal { proposed_model: to, proposed_point: Some(point), log_alpha, aux_draws })
}

/// One between-model move. Returns the next state, the proposed model id,
/// and the accept flag; on rejection the state is returned unchanged.
pub fn between_model_step<F: Scalar>(
    target: &TransDimTarget<F>,
    jump: &ModelJumpKernel,
    maps: &CoordinateMaps,
    state: &TransDimState<F>,
    rng: &mut dyn RngCore,
) -> Result<(TransDimState<F>, u32, bool)> {
    let proposal = propose_between(target, jump, maps, state, rng)?;
    let accept = F::unit_open(rng).ln() < proposal.log_alpha;
    if accept {
        let point = proposal.proposed_point.expect("finite log_alpha implies a point");
        Ok((TransDimState { model: proposal.proposed_model, point }, proposal.proposed_model, true))
    } else {
        Ok((state.clone(), proposal.proposed_model, false))
    }
}

/// One within-model move: a uniformly chosen coordinate of the current
/// model, Metropolis-updated. Never changes the model index.
pub fn within_model_step<F: Scalar>(
    target: &TransDimTarget<F>,
    within: &WithinProposals<F>,
    state: &TransDimState<F>,
    rng: &mut dyn RngCore,
) -> Result<(TransDimState<F>, u32, bool)> {
    let model_target = target.model_target(state.model())?;
    let proposals = within.for_model(state.model())?;
    let (point, direction, accepted) =
        mwg_step(model_target, proposals, ScanSchedule::random(), 1, state.point(), rng)?;
    Ok((TransDimState { model: state.model(), point }, direction, accepted))
}

/// One step of the mixed chain: between-model with probability `a`, else
/// within-model.
pub fn transdim_step<F: Scalar>(
    target: &TransDimTarget<F>,
    jump: &ModelJumpKernel,
    maps: &CoordinateMaps,
    a: f64,
    within: &WithinProposals<F>,
    state: &TransDimState<F>,
    rng: &mut dyn RngCore,
) -> Result<(TransDimState<F>, Move, bool)> {
    if !(0.0 < a && a < 1.0) {
        return Err(Error::invalid("between-model probability must satisfy 0 < a < 1"));
    }
    if rng.random::<f64>() < a {
        let (next, proposed, accepted) = between_model_step(target, jump, maps, state, rng)?;
        Ok((next, Move::Model(proposed), accepted))
    } else {
        let (next, direction, accepted) = within_model_step(target, within, state, rng)?;
        Ok((next, Move::Coordinate(direction), accepted))
    }
}

/// Move-kind counters accumulated over a run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct TransDimCounters {
    pub between_proposals: u64,
    pub within_proposals: u64,
    pub aux_draws: u64,
}

/// Run the mixed chain for `steps` steps, recording a trace and counters.
#[allow(clippy::too_many_arguments)]
pub fn run_transdim<F: Scalar>(
    target: &TransDimTarget<F>,
    jump: &ModelJumpKernel,
    maps: &CoordinateMaps,
    a: f64,
    within: &WithinProposals<F>,
    start: &TransDimState<F>,
    steps: u64,
    rng: &mut dyn RngCore,
) -> Result<(Trace<F>, TransDimCounters)> {
    if !(0.0 < a && a < 1.0) {
        return Err(Error::invalid("between-model probability must satisfy 0 < a < 1"));
    }
    let mut trace = Trace::with_capacity(steps as usize);
    let mut counters = TransDimCounters::default();
    let mut state = start.clone();
    for n in 1..=steps {
        let (next, mv, accepted) = if rng.random::<f64>() < a {
            let proposal = propose_between(target, jump, maps, &state, rng)?;
            counters.between_proposals += 1;
            counters.aux_draws += proposal.aux_draws as u64;
            let accept = F::unit_open(rng).ln() < proposal.log_alpha;
            let next = if accept {
                TransDimState {
                    model: proposal.proposed_model,
                    point: proposal.proposed_point.expect("accepted proposal has a point"),
                }
            } else {
                state.clone()
            };
            (next, Move::Model(proposal.proposed_model), accept)
        } else {
            counters.within_proposals += 1;
            let (next, direction, accepted) = within_model_step(target, within, &state, rng)?;
            (next, Move::Coordinate(direction), accepted)
        };
        state = next;
        trace.record(StepEvent {
            step: n,
            proposal: mv,
            accepted,
            state: state.point().coords().to_vec(),
        })?;
    }
    Ok((trace, counters))
}

/// Events monitored by the Harris-recurrence hypotheses for mixed chains:
/// whether any within-model move was ever accepted, and when each coordinate
/// direction of the starting model first saw an accepted move.
#[derive(Debug, Clone, Serialize)]
pub struct HypothesisReport {
    /// Step of the first accepted within-model move, if any.
    pub first_within_accept: Option<u64>,
    /// True when no within-model move was ever accepted.
    pub event_d: bool,
    /// Per coordinate 1..=start_dim: first accepted within-model move in
    /// that direction.
    pub coord_first_accept: Vec<Option<u64>>,
}

/// Scan a trace for the monitored events. `start_dim` is the dimension of
/// the starting model.
pub fn hypothesis_monitor<F: Scalar>(
    trace: &Trace<F>,
    start_dim: usize,
) -> Result<HypothesisReport> {
    if trace.is_empty() {
        return Err(Error::invalid("hypothesis monitor needs a nonempty trace"));
    }
    let mut first_within_accept = None;
    let mut coord_first_accept = vec![None; start_dim];
    for e in trace.steps() {
        if !e.accepted {
            continue;
        }
        if let Move::Coordinate(i) = e.proposal {
            if first_within_accept.is_none() {
                first_within_accept = Some(e.step);
            }
            let i = i as usize;
            if i >= 1 && i <= start_dim && coord_first_accept[i - 1].is_none() {
                coord_first_accept[i - 1] = Some(e.step);
            }
        }
    }
    Ok(HypothesisReport {
        first_within_accept,
        event_d: first_within_accept.is_none(),
        coord_first_accept,
    })
}

/// Toy Gaussian family for exercising the machinery: model ids `1..=k` with
/// dimensions `1..=k`, normalized standard-normal targets, weights `p`,
/// uniform jumps between neighboring ids, and logistic raising maps.
pub fn gaussian_toy_family(
    p: &[f64],
) -> Result<(TransDimTarget<f64>, ModelJumpKernel, CoordinateMaps)> {
    if p.len() < 2 {
        return Err(Error::invalid("toy family needs at least 2 models"));
    }
    let models = p
        .iter()
        .enumerate()
        .map(|(i, &w)| (i as u32 + 1, w, crate::target::standard_normal::<f64>(i + 1)))
        .collect();
    let target = TransDimTarget::new(models)?;
    let jump = ModelJumpKernel::uniform_neighbors(target.model_ids().to_vec())?;
    let maps = CoordinateMaps::logistic_raising(&target, &jump)?;
    Ok((target, jump, maps))
}
