use std::fmt::Write as _;

use crate::{Error, Result, Scalar};

/// What a sampler proposed at one step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Move {
    /// Full-dimensional proposal.
    Full,
    /// Single-coordinate proposal; directions are 1-based.
    Coordinate(u32),
    /// Between-model proposal targeting the given model id.
    Model(u32),
}

impl Move {
    /// Integer encoding used in the CSV `direction` column:
    /// 0 for a full-dimensional proposal, `i > 0` for coordinate `i`,
    /// `-m` for a between-model proposal targeting model `m`.
    pub fn code(self) -> i64 {
        match self {
            Move::Full => 0,
            Move::Coordinate(i) => i64::from(i),
            Move::Model(m) => -i64::from(m),
        }
    }
}

/// One recorded sampler step: what was proposed, whether it was accepted,
/// and the state after the step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepEvent<F: Scalar> {
    pub step: u64,
    pub proposal: Move,
    pub accepted: bool,
    pub state: Vec<F>,
}

/// Ordered record of sampler steps, indices starting at 1 with no gaps.
///
/// Rejected steps keep the prior state, which `record` enforces.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trace<F: Scalar> {
    steps: Vec<StepEvent<F>>,
}

impl<F: Scalar> Trace<F> {
    pub fn new() -> Self {
        Trace { steps: Vec::new() }
    }

    pub fn with_capacity(n: usize) -> Self {
        Trace { steps: Vec::with_capacity(n) }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn steps(&self) -> &[StepEvent<F>] {
        &self.steps
    }

    /// Append one event. The index must be exactly `len() + 1`.
    pub fn record(&mut self, event: StepEvent<F>) -> Result<()> {
        let expected = self.steps.len() as u64 + 1;
        if event.step != expected {
            return Err(Error::invalid(format!(
                "out-of-order step index {} (expected {expected})",
                event.step
            )));
        }
        if !event.accepted {
            if let Some(prev) = self.steps.last() {
                if prev.state != event.state {
                    return Err(Error::invalid(format!(
                        "rejected step {} must keep the prior state",
                        event.step
                    )));
                }
            }
        }
        self.steps.push(event);
        Ok(())
    }

    /// Serialize as CSV: header `step,direction,accepted,coords`, with the
    /// coordinates of each state joined by `;`.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(32 * (self.steps.len() + 1));
        out.push_str("step,direction,accepted,coords\n");
        for e in &self.steps {
            let _ = write!(out, "{},{},{},", e.step, e.proposal.code(), u8::from(e.accepted));
            for (i, c) in e.state.iter().enumerate() {
                if i > 0 {
                    out.push(';');
                }
                let _ = write!(out, "{c}");
            }
            out.push('\n');
        }
        out
    }
}
