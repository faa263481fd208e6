//! Integrability of a target density over coordinate hyperplanes, decided by
//! adaptive quadrature on a sequence of expanding boxes.
//!
//! The slice integral of a density may be infinite even when the full
//! integral is one; the verdict here is read off the growth of the partial
//! integrals over boxes `[-2^k, 2^k]^r`: stabilizing increments mean a finite
//! integral, while partials blowing past the divergence threshold with
//! accelerating increments mean a divergent one.

use std::cell::Cell;

use serde::Serialize;

use crate::{Error, Point, Result, Scalar, TargetDensity};

/// A coordinate hyperplane: some coordinates pinned to fixed values, the
/// rest free. Coordinates are 1-based; an empty fixed set is the full space.
#[derive(Debug, Clone)]
pub struct Hyperplane<F: Scalar> {
    fixed: Vec<(u32, F)>,
}

impl<F: Scalar> Hyperplane<F> {
    pub fn new(fixed: Vec<(u32, F)>) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        for &(i, v) in &fixed {
            if i == 0 {
                return Err(Error::invalid("hyperplane coordinates are 1-based"));
            }
            if !seen.insert(i) {
                return Err(Error::invalid(format!("coordinate {i} fixed twice")));
            }
            if !v.is_finite() {
                return Err(Error::invalid("fixed values must be finite"));
            }
        }
        Ok(Hyperplane { fixed })
    }

    /// The full space (no coordinate fixed).
    pub fn full() -> Self {
        Hyperplane { fixed: Vec::new() }
    }

    pub fn fixed(&self) -> &[(u32, F)] {
        &self.fixed
    }

    /// Free coordinate indices (1-based) for a `dim`-dimensional target.
    pub fn free_coords(&self, dim: usize) -> Result<Vec<u32>> {
        for &(i, _) in &self.fixed {
            if i as usize > dim {
                return Err(Error::invalid(format!(
                    "fixed coordinate {i} exceeds dimension {dim}"
                )));
            }
        }
        Ok((1..=dim as u32).filter(|i| self.fixed.iter().all(|&(j, _)| j != *i)).collect())
    }
}

#[derive(Debug, Clone)]
pub struct QuadratureConfig {
    /// Boxes are `[-2^k, 2^k]^r` for `k = 1..=k_max`.
    pub k_max: u32,
    /// Absolute tolerance for the outermost adaptive pass on each box.
    pub tol: f64,
    /// Recursion depth cap per 1-d adaptive pass. An interval at the cap
    /// keeps its extrapolated estimate; with intervals shrinking by half per
    /// level, the default already resolves features 2^48 times smaller than
    /// the box.
    pub max_depth: u32,
    /// Integrand evaluation budget across the whole call; exhausting it
    /// makes the verdict inconclusive.
    pub max_evals: u64,
    /// Partial integrals beyond this, with accelerating increments, mean
    /// divergence.
    pub divergence_threshold: f64,
    /// Relative increment below which an expansion counts as converged.
    pub finite_rel_increment: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            k_max: 8,
            tol: 1e-9,
            max_depth: 48,
            max_evals: 100_000_000,
            divergence_threshold: 1e12,
            finite_rel_increment: 1e-6,
        }
    }
}

impl QuadratureConfig {
    /// Same boxes at double the resolution (half the tolerance); used to
    /// confirm that verdicts are resolution-stable.
    pub fn doubled_resolution(&self) -> Self {
        QuadratureConfig { tol: self.tol / 2.0, ..self.clone() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Finite,
    Divergent,
    Inconclusive,
}

/// One partial integral over the box `[-2^k, 2^k]^r`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PartialIntegral {
    pub k: u32,
    pub half_width: f64,
    pub value: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct IntegrabilityReport {
    pub verdict: Verdict,
    pub partials: Vec<PartialIntegral>,
    /// First differences of the partial-integral sequence.
    pub growth: Vec<f64>,
    /// Converged value, present only for a finite verdict.
    pub value: Option<f64>,
}

struct Budget {
    evals: Cell<u64>,
    max_evals: u64,
}

impl Budget {
    fn consume(&self) -> bool {
        let used = self.evals.get() + 1;
        self.evals.set(used);
        used <= self.max_evals
    }
}

/// Integrate `exp(log f)` over the hyperplane slice on expanding boxes and
/// classify the result. Quadrature non-convergence within the budget yields
/// an `Inconclusive` verdict rather than an error.
pub fn hyperplane_integral<F: Scalar>(
    target: &TargetDensity<F>,
    hyperplane: &Hyperplane<F>,
    config: &QuadratureConfig,
) -> Result<IntegrabilityReport> {
    let dim = target.dim();
    let free = hyperplane.free_coords(dim)?;
    if config.k_max == 0 {
        return Err(Error::invalid("k_max must be at least 1"));
    }

    let mut template = vec![F::zero(); dim];
    for &(i, v) in hyperplane.fixed() {
        template[i as usize - 1] = v;
    }

    // 0-dimensional slice: the "integral" is the density value at the point.
    if free.is_empty() {
        let x = Point::new(template)?;
        let value = target.log_density(&x)?.exp().to_f64().unwrap();
        return Ok(IntegrabilityReport {
            verdict: Verdict::Finite,
            partials: vec![PartialIntegral { k: 0, half_width: 0.0, value }],
            growth: Vec::new(),
            value: Some(value),
        });
    }

    let budget = Budget { evals: Cell::new(0), max_evals: config.max_evals };
    let mut partials: Vec<PartialIntegral> = Vec::new();
    let mut verdict = Verdict::Inconclusive;

    for k in 1..=config.k_max {
        let half_width = 2f64.powi(k as i32);
        let mut coords = template.clone();
        let value = match integrate_nested(
            target,
            &free,
            0,
            &mut coords,
            half_width,
            config.tol,
            config.max_depth,
            &budget,
        ) {
            Some(v) => v,
            None => break, // budget exhausted: inconclusive
        };
        if value.is_nan() {
            break;
        }
        partials.push(PartialIntegral { k, half_width, value });

        if let Some(v) = classify(&partials, config) {
            verdict = v;
            break;
        }
    }

    if verdict == Verdict::Inconclusive {
        // The loop may have run to k_max with increments still shrinking but
        // not yet three-in-a-row converged, or been cut short by the budget.
        if let Some(v) = classify(&partials, config) {
            verdict = v;
        }
    }

    let growth: Vec<f64> =
        partials.windows(2).map(|w| w[1].value - w[0].value).collect();
    let value =
        if verdict == Verdict::Finite { partials.last().map(|p| p.value) } else { None };
    Ok(IntegrabilityReport { verdict, partials, growth, value })
}

fn classify(partials: &[PartialIntegral], config: &QuadratureConfig) -> Option<Verdict> {
    let n = partials.len();
    if n >= 2 {
        let last = partials[n - 1].value;
        let inc = last - partials[n - 2].value;
        let prev_inc = if n >= 3 { partials[n - 2].value - partials[n - 3].value } else { 0.0 };
        // Divergence: past the threshold with accelerating positive growth.
        let accelerating = inc > prev_inc && inc > 0.0;
        if (last > config.divergence_threshold || !last.is_finite()) && accelerating {
            return Some(Verdict::Divergent);
        }
    }
    if n >= 4 {
        let converged = (n - 3..n).all(|i| {
            let inc = (partials[i].value - partials[i - 1].value).abs();
            let scale = partials[i].value.abs().max(f64::MIN_POSITIVE);
            inc / scale < config.finite_rel_increment
        });
        if converged {
            return Some(Verdict::Finite);
        }
    }
    None
}

/// Nested 1-d adaptive passes over the free coordinates.
#[allow(clippy::too_many_arguments)]
fn integrate_nested<F: Scalar>(
    target: &TargetDensity<F>,
    free: &[u32],
    level: usize,
    coords: &mut Vec<F>,
    half_width: f64,
    tol: f64,
    max_depth: u32,
    budget: &Budget,
) -> Option<f64> {
    let coord = free[level] as usize - 1;
    let inner_tol = tol / (2.0 * half_width);
    let mut eval = |t: f64, coords: &mut Vec<F>| -> Option<f64> {
        coords[coord] = F::from_f64_lossy(t);
        if level + 1 < free.len() {
            integrate_nested(target, free, level + 1, coords, half_width, inner_tol, max_depth, budget)
        } else {
            if !budget.consume() {
                return None;
            }
            let x = Point::new(coords.clone()).ok()?;
            Some(target.log_density(&x).ok()?.exp().to_f64().unwrap())
        }
    };
    adaptive_simpson(&mut eval, coords, -half_width, half_width, tol, max_depth)
}

/// Recursive adaptive Simpson. `None` signals an exhausted evaluation
/// budget; a depth-capped interval keeps its extrapolated estimate.
fn adaptive_simpson<F: Scalar>(
    eval: &mut impl FnMut(f64, &mut Vec<F>) -> Option<f64>,
    coords: &mut Vec<F>,
    a: f64,
    b: f64,
    tol: f64,
    max_depth: u32,
) -> Option<f64> {
    let m = 0.5 * (a + b);
    let fa = eval(a, coords)?;
    let fm = eval(m, coords)?;
    let fb = eval(b, coords)?;
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_recurse(eval, coords, a, b, fa, fm, fb, whole, tol, max_depth)
}

#[allow(clippy::too_many_arguments)]
fn simpson_recurse<F: Scalar>(
    eval: &mut impl FnMut(f64, &mut Vec<F>) -> Option<f64>,
    coords: &mut Vec<F>,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Option<f64> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = eval(lm, coords)?;
    let frm = eval(rm, coords)?;
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    // Two stops besides the requested tolerance: the roundoff floor (a
    // correction below machine precision of the accumulated magnitudes
    // cannot be refined, only thrashed) and the depth cap.
    let floor = 8.0 * f64::EPSILON * (left.abs() + right.abs() + whole.abs());
    if delta.abs() <= (15.0 * tol).max(floor) || depth == 0 {
        return Some(left + right + delta / 15.0);
    }
    let half_tol = 0.5 * tol;
    let l = simpson_recurse(eval, coords, a, m, fa, flm, fm, left, half_tol, depth - 1)?;
    let r = simpson_recurse(eval, coords, m, b, fm, frm, fb, right, half_tol, depth - 1)?;
    Some(l + r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::target::standard_normal;
    use approx::assert_relative_eq;

    #[test]
    fn gaussian_axis_slices_are_finite() {
        let t = standard_normal::<f64>(2);
        for hp in [
            Hyperplane::new(vec![(2, 0.0)]).unwrap(),
            Hyperplane::new(vec![(1, 0.5)]).unwrap(),
        ] {
            let report = hyperplane_integral(&t, &hp, &QuadratureConfig::default()).unwrap();
            assert_eq!(report.verdict, Verdict::Finite, "{report:?}");
        }
    }

    #[test]
    fn gaussian_full_integral_is_one() {
        let t = standard_normal::<f64>(2);
        let report =
            hyperplane_integral(&t, &Hyperplane::full(), &QuadratureConfig::default()).unwrap();
        assert_eq!(report.verdict, Verdict::Finite);
        assert_relative_eq!(report.value.unwrap(), 1.0, epsilon = 1e-6);
    }

    #[test]
    fn exponential_slice_diverges() {
        // Density exp(x1) on x1 > 1: the 1-d integral over any expanding box
        // grows like e^(2^k).
        let t = crate::TargetDensity::new(
            2,
            |x: &Point<f64>| x.coord(0) > 1.0,
            |x| x.coord(0),
        )
        .unwrap();
        let hp = Hyperplane::new(vec![(2, 0.0)]).unwrap();
        let report = hyperplane_integral(&t, &hp, &QuadratureConfig::default()).unwrap();
        assert_eq!(report.verdict, Verdict::Divergent);
        assert!(report.value.is_none());
        // Growth diagnostic is accelerating at the tail.
        let g = &report.growth;
        assert!(g.len() >= 2 && g[g.len() - 1] > g[g.len() - 2]);
    }

    #[test]
    fn slice_missing_the_support_is_finite_zero() {
        let t = crate::TargetDensity::new(
            2,
            |x: &Point<f64>| x.coord(0) > 1.0,
            |x| -x.coord(0),
        )
        .unwrap();
        // x1 fixed below the support: the slice never meets it.
        let hp = Hyperplane::new(vec![(1, 0.0)]).unwrap();
        let report = hyperplane_integral(&t, &hp, &QuadratureConfig::default()).unwrap();
        assert_eq!(report.verdict, Verdict::Finite);
        assert_eq!(report.value, Some(0.0));
    }

    #[test]
    fn verdicts_survive_doubled_resolution() {
        let t = standard_normal::<f64>(2);
        let cfg = QuadratureConfig::default();
        let hp = Hyperplane::new(vec![(1, 0.0)]).unwrap();
        let v1 = hyperplane_integral(&t, &hp, &cfg).unwrap().verdict;
        let v2 = hyperplane_integral(&t, &hp, &cfg.doubled_resolution()).unwrap().verdict;
        assert_eq!(v1, v2);
    }

    #[test]
    fn fixed_coordinate_validation() {
        assert!(Hyperplane::new(vec![(0, 1.0f64)]).is_err());
        assert!(Hyperplane::new(vec![(1, 1.0f64), (1, 2.0)]).is_err());
        let t = standard_normal::<f64>(2);
        let hp = Hyperplane::new(vec![(3, 0.0)]).unwrap();
        assert!(hyperplane_integral(&t, &hp, &QuadratureConfig::default()).is_err());
    }
}
