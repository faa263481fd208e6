//! Ready-made chains that are irreducible and aperiodic with a stationary
//! law, yet fail to converge from a null set of starting states. Each comes
//! with exact parameters, and where a closed form exists the escape
//! probability is available through [`escape_closed_form`].

use std::sync::Arc;

use num_rational::Ratio;
use rand::RngCore;

use crate::diagnostics::DiscreteKernel;
use crate::mwg::CoordinateProposal;
use crate::{Error, Point, Result, Scalar, TargetDensity};

type TransitionFn = Arc<dyn Fn(u64) -> Vec<(u64, Ratio<u64>)> + Send + Sync>;

/// A chain on the positive integers given by an explicit successor rule with
/// exact rational probabilities.
#[derive(Clone)]
pub struct CountableChain {
    transition: TransitionFn,
    regeneration_state: u64,
}

impl CountableChain {
    pub fn new(
        transition: impl Fn(u64) -> Vec<(u64, Ratio<u64>)> + Send + Sync + 'static,
        regeneration_state: u64,
    ) -> Self {
        CountableChain { transition: Arc::new(transition), regeneration_state }
    }

    /// Probability-weighted successor list of `state`; weights sum to one
    /// exactly in rational arithmetic.
    pub fn successors(&self, state: u64) -> Vec<(u64, Ratio<u64>)> {
        (self.transition)(state)
    }

    /// The designated regeneration/absorbing state.
    pub fn regeneration_state(&self) -> u64 {
        self.regeneration_state
    }

    /// Draw the successor of `state`. Simulation is exact on the full
    /// countable space; no truncation is involved.
    pub fn step(&self, state: u64, rng: &mut dyn RngCore) -> u64 {
        let successors = self.successors(state);
        if successors.len() == 1 {
            return successors[0].0;
        }
        let u = f64::unit(rng);
        let mut acc = 0.0;
        for &(next, p) in &successors {
            acc += ratio_to_f64(p);
            if u < acc {
                return next;
            }
        }
        successors.last().expect("nonempty successor list").0
    }

    /// Truncate to states `1..=n_states` plus an absorbing sink that
    /// collects the escaping mass. The tail-bias field bounds the mass the
    /// sink can ever divert from a finite-horizon computation started well
    /// inside the truncation.
    pub fn truncate<F: Scalar>(&self, n_states: u64) -> Result<DiscreteKernel<F>> {
        if n_states < 2 {
            return Err(Error::invalid("truncation needs at least 2 states"));
        }
        let n = n_states as usize;
        let sink = n; // index n_states, after states 1..=n_states
        let mut rows: Vec<Vec<(u32, F)>> = Vec::with_capacity(n + 1);
        for state in 1..=n_states {
            let mut row: Vec<(u32, F)> = Vec::new();
            let mut kept = F::zero();
            for (next, p) in self.successors(state) {
                let p = F::from_f64_lossy(ratio_to_f64(p));
                if (1..=n_states).contains(&next) {
                    row.push(((next - 1) as u32, p));
                    kept += p;
                }
            }
            let leak = (F::one() - kept).max(F::zero());
            if leak > F::zero() {
                row.push((sink as u32, leak));
            }
            row.sort_unstable_by_key(|&(j, _)| j);
            rows.push(row);
        }
        rows.push(vec![(sink as u32, F::one())]);
        let mut labels: Vec<String> = (1..=n_states).map(|s| s.to_string()).collect();
        labels.push("sink".to_string());
        Ok(DiscreteKernel::from_sparse(n + 1, rows)?
            .with_labels(labels)?
            .with_tail_bias(1.0 / n_states as f64))
    }
}

impl std::fmt::Debug for CountableChain {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CountableChain")
            .field("regeneration_state", &self.regeneration_state)
            .finish()
    }
}

fn ratio_to_f64(r: Ratio<u64>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Countable-space chain with stationary law concentrated at 1:
/// `P(1, {1}) = 1`, and for `x >= 2`, `P(x, {1}) = 1/x^2` and
/// `P(x, {x+1}) = 1 - 1/x^2`. Started at `x >= 2` it escapes to infinity
/// with probability `(x-1)/x`, so it is not Harris recurrent.
pub fn example3() -> CountableChain {
    CountableChain::new(
        |state| {
            if state <= 1 {
                return vec![(1, Ratio::new(1, 1))];
            }
            let sq = state.checked_mul(state).expect("state fits u64 after squaring");
            vec![(1, Ratio::new(1, sq)), (state + 1, Ratio::new(sq - 1, sq))]
        },
        1,
    )
}

/// State of the unit-interval chain: reciprocals `1/m` are tracked exactly
/// so the measure-zero event "the chain sits on a reciprocal" never depends
/// on floating-point equality.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum UnitState {
    /// The point `1/m`, stored by its integer denominator `m >= 1`.
    Reciprocal(u64),
    /// Any other point of `[0, 1]`.
    Generic(f64),
}

impl UnitState {
    pub fn value(&self) -> f64 {
        match *self {
            UnitState::Reciprocal(m) => 1.0 / m as f64,
            UnitState::Generic(x) => x,
        }
    }
}

/// Continuous state-space version of [`example3`] on `[0, 1]`:
/// from `1/m` the chain regenerates uniformly with probability `1/m^2` and
/// otherwise moves to `1/(m+1)`; everywhere else it regenerates uniformly.
#[derive(Debug, Clone, Copy, Default)]
pub struct UnitIntervalChain;

impl UnitIntervalChain {
    pub fn step(&self, state: UnitState, rng: &mut dyn RngCore) -> UnitState {
        match state {
            UnitState::Reciprocal(m) => {
                let regen_prob = 1.0 / (m as f64 * m as f64);
                if f64::unit(rng) < regen_prob {
                    UnitState::Generic(f64::unit(rng))
                } else {
                    UnitState::Reciprocal(m + 1)
                }
            }
            UnitState::Generic(_) => UnitState::Generic(f64::unit(rng)),
        }
    }
}

pub fn example4() -> UnitIntervalChain {
    UnitIntervalChain
}

/// A target plus one proposal per coordinate, ready for the
/// Metropolis-within-Gibbs driver.
#[derive(Debug, Clone)]
pub struct MwgExample<F: Scalar> {
    pub target: TargetDensity<F>,
    pub proposals: Vec<CoordinateProposal<F>>,
}

/// Two-dimensional counterexample with continuous positive densities:
/// target `f(x1, x2) = (e/2) exp(x1 - |x2| e^(2 x1))` on `{x1 > 1}`, with
/// unit-normal coordinate proposals.
///
/// On the line `{x2 = 0}` the density grows like `e^(x1)`, so the
/// first-coordinate kernel drifts to the right, while the probability of
/// accepting any second-coordinate move decays like `2 e^(-2 x1)`; started
/// on the line, the chain stays on it forever with positive probability.
pub fn example9<F: Scalar>() -> MwgExample<F> {
    let one = F::one();
    let two = F::from_f64_lossy(2.0);
    let log_half_e = one - two.ln(); // log(e/2)
    let target = TargetDensity::new(
        2,
        move |x: &Point<F>| x.coord(0) > F::one(),
        move |x: &Point<F>| {
            let x1 = x.coord(0);
            let x2 = x.coord(1);
            // On the line x2 = 0 the tail term is exactly zero even where
            // exp(2 x1) overflows; off the line an overflowing tail pushes
            // the log-density to -inf, which is the correct limit.
            let tail = if x2 == F::zero() { F::zero() } else { x2.abs() * (two * x1).exp() };
            log_half_e + x1 - tail
        },
    )
    .expect("dim 2");
    let proposals = vec![
        CoordinateProposal::normal(1, F::one()).expect("sigma > 0"),
        CoordinateProposal::normal(2, F::one()).expect("sigma > 0"),
    ];
    MwgExample { target, proposals }
}

/// Annulus counterexample: uniform target on `{16 < x1^2 + x2^2 < 25}` with
/// `Uniform(x_i - 1, x_i + 1)` coordinate proposals. The full chain is
/// irreducible, but the one-dimensional subchain along `{x2 = 0}` splits
/// into the two intervals `(-5, -4)` and `(4, 5)`, which the reach-1
/// proposals cannot bridge.
pub fn example14<F: Scalar>() -> MwgExample<F> {
    let inner = F::from_f64_lossy(16.0);
    let outer = F::from_f64_lossy(25.0);
    let target = TargetDensity::new(
        2,
        move |x: &Point<F>| {
            let r2 = x.coord(0) * x.coord(0) + x.coord(1) * x.coord(1);
            r2 > inner && r2 < outer
        },
        |_| F::zero(),
    )
    .expect("dim 2");
    let proposals = vec![
        CoordinateProposal::uniform_window(1, F::one()).expect("width > 0"),
        CoordinateProposal::uniform_window(2, F::one()).expect("width > 0"),
    ];
    MwgExample { target, proposals }
}

/// Exact escape probability of [`example3`] from state `x >= 2`: the
/// telescoping product over `j >= x` of `(1 - 1/j^2)` collapses to
/// `(x - 1) / x`.
pub fn escape_closed_form(x: u64) -> Result<f64> {
    if x < 2 {
        return Err(Error::invalid("escape probability is defined for states x >= 2"));
    }
    Ok((x - 1) as f64 / x as f64)
}
