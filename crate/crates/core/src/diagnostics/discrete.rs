//! Exact operations on finite (or truncated-countable) transition kernels:
//! total-variation curves via repeated vector-kernel products, communicating
//! classes, period, first-passage probabilities, minorization.

use rand::RngCore;

use super::linalg::solve_dense;
use crate::{Error, Result, Scalar};

const DENSE_SOLVE_LIMIT: usize = 1024;
const STATIONARY_SOLVE_LIMIT: usize = 2048;
const GAUSS_SEIDEL_TOL: f64 = 1e-13;
const GAUSS_SEIDEL_MAX_SWEEPS: usize = 40_000;

/// Row-stochastic transition kernel on a finite ordered state set, stored
/// sparsely. Rows must sum to one; for chains truncated from a countable
/// space, route the escaping mass to an explicit absorbing sink state and
/// record a `tail_bias` bound for quantities computed on the truncation.
#[derive(Debug, Clone)]
pub struct DiscreteKernel<F: Scalar> {
    rows: Vec<Vec<(u32, F)>>,
    labels: Option<Vec<String>>,
    tail_bias: Option<f64>,
}

impl<F: Scalar> DiscreteKernel<F> {
    /// Build from dense rows.
    pub fn from_dense(rows: Vec<Vec<F>>) -> Result<Self> {
        let n = rows.len();
        let sparse = rows
            .into_iter()
            .map(|row| {
                if row.len() != n {
                    return Err(Error::invalid("kernel rows must be square"));
                }
                Ok(row
                    .into_iter()
                    .enumerate()
                    .filter(|&(_, p)| p != F::zero())
                    .map(|(j, p)| (j as u32, p))
                    .collect())
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_sparse(n, sparse)
    }

    /// Build from sparse rows of `(column, probability)` entries.
    pub fn from_sparse(n: usize, rows: Vec<Vec<(u32, F)>>) -> Result<Self> {
        if n == 0 || rows.len() != n {
            return Err(Error::invalid("kernel needs one row per state"));
        }
        let tol = F::from_f64_lossy(1e-12).max(F::epsilon() * F::from_f64_lossy(100.0));
        for (i, row) in rows.iter().enumerate() {
            let mut sum = F::zero();
            let mut seen = std::collections::HashSet::new();
            for &(j, p) in row {
                if j as usize >= n {
                    return Err(Error::invalid(format!("row {i}: column {j} out of range")));
                }
                if !seen.insert(j) {
                    return Err(Error::invalid(format!("row {i}: duplicate column {j}")));
                }
                if !(p >= F::zero() && p <= F::one() + tol) {
                    return Err(Error::invalid(format!("row {i}: entry {p} outside [0, 1]")));
                }
                sum += p;
            }
            if (sum - F::one()).abs() > tol {
                return Err(Error::invalid(format!("row {i} sums to {sum}, not 1")));
            }
        }
        Ok(DiscreteKernel { rows, labels: None, tail_bias: None })
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.rows.len() {
            return Err(Error::invalid("one label per state required"));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    /// Bound on the probability mass the truncation diverted to the sink,
    /// for reporting alongside quantities computed on this kernel.
    pub fn with_tail_bias(mut self, bias: f64) -> Self {
        self.tail_bias = Some(bias);
        self
    }

    pub fn n_states(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, i: usize) -> &[(u32, F)] {
        &self.rows[i]
    }

    pub fn label(&self, i: usize) -> String {
        match &self.labels {
            Some(l) => l[i].clone(),
            None => i.to_string(),
        }
    }

    pub fn tail_bias(&self) -> Option<f64> {
        self.tail_bias
    }

    /// Probability of the transition `i -> j`.
    pub fn prob(&self, i: usize, j: usize) -> F {
        self.rows[i]
            .iter()
            .find(|&&(c, _)| c as usize == j)
            .map_or(F::zero(), |&(_, p)| p)
    }

    /// Draw the successor of state `i`.
    pub fn sample_next(&self, i: usize, rng: &mut dyn RngCore) -> usize {
        let u = f64::unit(rng);
        let mut acc = 0.0;
        let row = &self.rows[i];
        for &(j, p) in row {
            acc += p.to_f64().unwrap();
            if u < acc {
                return j as usize;
            }
        }
        row.last().map(|&(j, _)| j as usize).unwrap_or(i)
    }
}

/// Sparse push-forward of a start distribution under repeated kernel steps.
struct Evolution<'a, F: Scalar> {
    kernel: &'a DiscreteKernel<F>,
    mass: Vec<f64>,
    scratch: Vec<f64>,
    active: Vec<u32>,
    marked: Vec<bool>,
    scratch_marked: Vec<bool>,
}

impl<'a, F: Scalar> Evolution<'a, F> {
    fn from_point_mass(kernel: &'a DiscreteKernel<F>, start: usize) -> Self {
        let n = kernel.n_states();
        let mut mass = vec![0.0; n];
        let mut marked = vec![false; n];
        mass[start] = 1.0;
        marked[start] = true;
        Evolution {
            kernel,
            mass,
            scratch: vec![0.0; n],
            active: vec![start as u32],
            marked,
            scratch_marked: vec![false; n],
        }
    }

    fn step(&mut self) {
        let mut next_active = Vec::with_capacity(self.active.len() + 4);
        for &i in &self.active {
            let m = self.mass[i as usize];
            if m == 0.0 {
                continue;
            }
            for &(j, p) in self.kernel.row(i as usize) {
                let pj = p.to_f64().unwrap();
                if pj == 0.0 {
                    continue;
                }
                let j = j as usize;
                if !self.scratch_marked[j] {
                    self.scratch_marked[j] = true;
                    self.scratch[j] = 0.0;
                    next_active.push(j as u32);
                }
                self.scratch[j] += m * pj;
            }
        }
        for &i in &self.active {
            self.mass[i as usize] = 0.0;
            self.marked[i as usize] = false;
        }
        std::mem::swap(&mut self.mass, &mut self.scratch);
        std::mem::swap(&mut self.marked, &mut self.scratch_marked);
        self.active = next_active;
    }

    fn tv_to(&self, pi: &[f64]) -> f64 {
        let mut dist = 0.0;
        for &i in &self.active {
            dist += (self.mass[i as usize] - pi[i as usize]).abs();
        }
        for (i, &p) in pi.iter().enumerate() {
            if p != 0.0 && !self.marked[i] {
                dist += p;
            }
        }
        0.5 * dist
    }

    fn add_into(&self, acc: &mut [f64], weight: f64) {
        for &i in &self.active {
            acc[i as usize] += weight * self.mass[i as usize];
        }
    }
}

fn validate_distribution<F: Scalar>(kernel: &DiscreteKernel<F>, pi: &[f64]) -> Result<()> {
    if pi.len() != kernel.n_states() {
        return Err(Error::DimensionMismatch { expected: kernel.n_states(), got: pi.len() });
    }
    if pi.iter().any(|&p| !(p >= -1e-12) || p.is_nan()) {
        return Err(Error::invalid("distribution entries must be nonnegative"));
    }
    let sum: f64 = pi.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::invalid(format!("distribution sums to {sum}, not 1")));
    }
    Ok(())
}

/// Total variation `|| P^n(start, .) - pi ||` computed exactly by `n`
/// vector-kernel products (no full matrix power is ever stored).
pub fn tv_exact<F: Scalar>(
    kernel: &DiscreteKernel<F>,
    start: usize,
    n: u64,
    pi: &[f64],
) -> Result<f64> {
    Ok(tv_curve(kernel, start, &[n], pi)?.pop().expect("one checkpoint").1)
}

/// Total variation to `pi` at each requested step count, in one pass.
pub fn tv_curve<F: Scalar>(
    kernel: &DiscreteKernel<F>,
    start: usize,
    checkpoints: &[u64],
    pi: &[f64],
) -> Result<Vec<(u64, f64)>> {
    validate_distribution(kernel, pi)?;
    if start >= kernel.n_states() {
        return Err(Error::invalid("start state out of range"));
    }
    if checkpoints.is_empty() {
        return Err(Error::invalid("at least one checkpoint required"));
    }
    let mut sorted = checkpoints.to_vec();
    sorted.sort_unstable();
    sorted.dedup();

    let mut evolution = Evolution::from_point_mass(kernel, start);
    let mut out = Vec::with_capacity(sorted.len());
    let mut step = 0u64;
    for &cp in &sorted {
        while step < cp {
            evolution.step();
            step += 1;
        }
        out.push((cp, evolution.tv_to(pi)));
    }
    Ok(out)
}

/// Total variation between the `D`-step-averaged law
/// `(1/D) sum_{r=1..D} P^{nD+r}(start, .)` and `pi`.
pub fn tv_period_averaged<F: Scalar>(
    kernel: &DiscreteKernel<F>,
    period: u64,
    start: usize,
    n: u64,
    pi: &[f64],
) -> Result<f64> {
    if period == 0 {
        return Err(Error::invalid("period must be at least 1"));
    }
    validate_distribution(kernel, pi)?;
    if start >= kernel.n_states() {
        return Err(Error::invalid("start state out of range"));
    }
    let mut evolution = Evolution::from_point_mass(kernel, start);
    for _ in 0..n * period {
        evolution.step();
    }
    let mut avg = vec![0.0; kernel.n_states()];
    let weight = 1.0 / period as f64;
    for _ in 0..period {
        evolution.step();
        evolution.add_into(&mut avg, weight);
    }
    let dist: f64 = avg.iter().zip(pi).map(|(a, p)| (a - p).abs()).sum();
    Ok(0.5 * dist)
}

/// Strongly connected components of the positive-probability transition
/// graph, in topological order (every transition leads from an earlier class
/// to the same or a later class). States within a class are sorted.
pub fn communicating_classes<F: Scalar>(kernel: &DiscreteKernel<F>) -> Vec<Vec<usize>> {
    let n = kernel.n_states();
    const UNVISITED: usize = usize::MAX;
    let mut index = vec![UNVISITED; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack: Vec<usize> = Vec::new();
    let mut next_index = 0usize;
    let mut components: Vec<Vec<usize>> = Vec::new();

    // Iterative Tarjan; frames carry the edge cursor into the sparse row.
    let mut frames: Vec<(usize, usize)> = Vec::new();
    for root in 0..n {
        if index[root] != UNVISITED {
            continue;
        }
        frames.push((root, 0));
        while let Some(&(v, cursor)) = frames.last() {
            if cursor == 0 {
                index[v] = next_index;
                low[v] = next_index;
                next_index += 1;
                stack.push(v);
                on_stack[v] = true;
            }
            let row = kernel.row(v);
            if cursor < row.len() {
                frames.last_mut().expect("frame").1 += 1;
                let (w, p) = row[cursor];
                let w = w as usize;
                if p == F::zero() {
                    continue;
                }
                if index[w] == UNVISITED {
                    frames.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                frames.pop();
                if let Some(&(parent, _)) = frames.last() {
                    low[parent] = low[parent].min(low[v]);
                }
                if low[v] == index[v] {
                    let mut component = Vec::new();
                    loop {
                        let w = stack.pop().expect("tarjan stack");
                        on_stack[w] = false;
                        component.push(w);
                        if w == v {
                            break;
                        }
                    }
                    component.sort_unstable();
                    components.push(component);
                }
            }
        }
    }
    // Tarjan emits components in reverse topological order.
    components.reverse();
    components
}

/// Period of an irreducible kernel: the gcd of cycle lengths through a
/// reference state. Errors when the kernel has several communicating classes.
pub fn period<F: Scalar>(kernel: &DiscreteKernel<F>) -> Result<u64> {
    let classes = communicating_classes(kernel);
    if classes.len() != 1 {
        return Err(Error::invalid(format!(
            "period is defined for a single communicating class; found {}",
            classes.len()
        )));
    }
    let n = kernel.n_states();
    let mut level = vec![u64::MAX; n];
    let mut queue = std::collections::VecDeque::new();
    level[0] = 0;
    queue.push_back(0usize);
    while let Some(v) = queue.pop_front() {
        for &(w, p) in kernel.row(v) {
            if p == F::zero() {
                continue;
            }
            let w = w as usize;
            if level[w] == u64::MAX {
                level[w] = level[v] + 1;
                queue.push_back(w);
            }
        }
    }
    let mut g = 0u64;
    for v in 0..n {
        for &(w, p) in kernel.row(v) {
            if p == F::zero() {
                continue;
            }
            let d = (level[v] + 1).abs_diff(level[w as usize]);
            g = gcd(g, d);
        }
    }
    Ok(g.max(1))
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// First-passage probability of reaching the set `target_set`.
///
/// Solves `h(x) = sum_y P(x, y) h(y)` for `x` outside the set with `h = 1`
/// on it, restricted to the states that can reach the set at all (everything
/// else gets 0, including mass absorbed by a truncation sink). A start
/// inside the set is interpreted as a return probability: one kernel step is
/// applied first.
pub fn hitting_probability<F: Scalar>(
    kernel: &DiscreteKernel<F>,
    target_set: &[usize],
    start: usize,
) -> Result<f64> {
    let n = kernel.n_states();
    if target_set.is_empty() {
        return Err(Error::invalid("target set must be nonempty"));
    }
    if target_set.iter().any(|&s| s >= n) || start >= n {
        return Err(Error::invalid("state index out of range"));
    }
    let mut in_set = vec![false; n];
    for &s in target_set {
        in_set[s] = true;
    }

    // Backward reachability from the target set.
    let mut reverse: Vec<Vec<u32>> = vec![Vec::new(); n];
    for (i, row) in kernel.rows.iter().enumerate() {
        for &(j, p) in row {
            if p != F::zero() {
                reverse[j as usize].push(i as u32);
            }
        }
    }
    let mut can_reach = in_set.clone();
    let mut queue: std::collections::VecDeque<usize> =
        target_set.iter().copied().collect();
    while let Some(v) = queue.pop_front() {
        for &u in &reverse[v] {
            let u = u as usize;
            if !can_reach[u] {
                can_reach[u] = true;
                queue.push_back(u);
            }
        }
    }

    let unknowns: Vec<usize> = (0..n).filter(|&i| can_reach[i] && !in_set[i]).collect();
    let mut h = vec![0.0f64; n];
    for &s in target_set {
        h[s] = 1.0;
    }

    if !unknowns.is_empty() {
        let values = solve_first_passage(kernel, &unknowns, &in_set, &can_reach)?;
        for (&u, &v) in unknowns.iter().zip(&values) {
            h[u] = v.clamp(0.0, 1.0);
        }
    }

    if in_set[start] {
        let mut acc = 0.0;
        for &(j, p) in kernel.row(start) {
            acc += p.to_f64().unwrap() * h[j as usize];
        }
        Ok(acc.clamp(0.0, 1.0))
    } else {
        Ok(h[start])
    }
}

fn solve_first_passage<F: Scalar>(
    kernel: &DiscreteKernel<F>,
    unknowns: &[usize],
    in_set: &[bool],
    can_reach: &[bool],
) -> Result<Vec<f64>> {
    let m = unknowns.len();
    let mut slot = vec![usize::MAX; kernel.n_states()];
    for (u_idx, &u) in unknowns.iter().enumerate() {
        slot[u] = u_idx;
    }
    // b(x) = one-step probability of stepping straight into the set.
    let b: Vec<f64> = unknowns
        .iter()
        .map(|&u| {
            kernel.row(u)
                .iter()
                .filter(|&&(j, _)| in_set[j as usize])
                .map(|&(_, p)| p.to_f64().unwrap())
                .sum()
        })
        .collect();

    if m <= DENSE_SOLVE_LIMIT {
        // (I - Q) h = b by direct elimination.
        let mut a = vec![vec![0.0f64; m]; m];
        for (u_idx, &u) in unknowns.iter().enumerate() {
            a[u_idx][u_idx] = 1.0;
            for &(j, p) in kernel.row(u) {
                let j = j as usize;
                if !in_set[j] && can_reach[j] {
                    a[u_idx][slot[j]] -= p.to_f64().unwrap();
                }
            }
        }
        return solve_dense(a, b);
    }

    // Gauss-Seidel with alternating sweep direction; exact after one backward
    // sweep for chains whose transient part only moves "forward".
    let mut h = vec![0.0f64; m];
    let update = |h: &mut Vec<f64>, u_idx: usize| {
        let u = unknowns[u_idx];
        let mut acc = b[u_idx];
        let mut diag = 1.0;
        for &(j, p) in kernel.row(u) {
            let j = j as usize;
            if in_set[j] || !can_reach[j] {
                continue;
            }
            let pj = p.to_f64().unwrap();
            if slot[j] == u_idx {
                diag -= pj;
            } else {
                acc += pj * h[slot[j]];
            }
        }
        h[u_idx] = acc / diag;
    };
    for sweep in 0..GAUSS_SEIDEL_MAX_SWEEPS {
        if sweep % 2 == 0 {
            for u_idx in 0..m {
                update(&mut h, u_idx);
            }
        } else {
            for u_idx in (0..m).rev() {
                update(&mut h, u_idx);
            }
        }
        let mut residual = 0.0f64;
        for (u_idx, &u) in unknowns.iter().enumerate() {
            let mut rhs = b[u_idx];
            for &(j, p) in kernel.row(u) {
                let j = j as usize;
                if !in_set[j] && can_reach[j] {
                    rhs += p.to_f64().unwrap() * h[slot[j]];
                }
            }
            residual = residual.max((h[u_idx] - rhs).abs());
        }
        if residual < GAUSS_SEIDEL_TOL {
            return Ok(h);
        }
        if sweep == GAUSS_SEIDEL_MAX_SWEEPS - 1 {
            return Err(Error::numerical(format!(
                "first-passage iteration did not converge: residual {residual} after {GAUSS_SEIDEL_MAX_SWEEPS} sweeps"
            )));
        }
    }
    unreachable!()
}

/// A minorization certificate `P(x, .) >= epsilon nu(.)` for all `x` in `C`.
#[derive(Debug, Clone)]
pub struct Minorization<F: Scalar> {
    pub epsilon: F,
    pub nu: Vec<F>,
}

/// Largest minorization supported on column minima over `small_set`:
/// `epsilon = sum_y min_{x in C} P(x, y)`, `nu = column minima / epsilon`.
/// Returns `None` when `epsilon = 0`.
pub fn check_minorization<F: Scalar>(
    kernel: &DiscreteKernel<F>,
    small_set: &[usize],
) -> Result<Option<Minorization<F>>> {
    let n = kernel.n_states();
    if small_set.is_empty() {
        return Err(Error::invalid("small set must be nonempty"));
    }
    if small_set.iter().any(|&s| s >= n) {
        return Err(Error::invalid("state index out of range"));
    }
    let mut mins = vec![F::infinity(); n];
    let mut counts = vec![0usize; n];
    for &x in small_set {
        for &(j, p) in kernel.row(x) {
            let j = j as usize;
            counts[j] += 1;
            if p < mins[j] {
                mins[j] = p;
            }
        }
    }
    for j in 0..n {
        if counts[j] < small_set.len() {
            // Some row of C puts no mass here, so the column minimum is 0.
            mins[j] = F::zero();
        }
    }
    let epsilon: F = mins.iter().copied().sum();
    if epsilon <= F::zero() {
        return Ok(None);
    }
    let nu: Vec<F> = mins.iter().map(|&m| m / epsilon).collect();

    // Entrywise re-verification of the certificate.
    let slack = F::from_f64_lossy(1e-12);
    for &x in small_set {
        for (j, &nj) in nu.iter().enumerate() {
            let bound = epsilon * nj;
            if kernel.prob(x, j) < bound - slack * bound.abs() - F::min_positive_value() {
                return Err(Error::numerical(format!(
                    "minorization certificate failed at ({x}, {j})"
                )));
            }
        }
    }
    Ok(Some(Minorization { epsilon, nu }))
}

/// Stationary distribution of a small irreducible kernel by linear solve:
/// `pi P = pi` with the normalization `sum pi = 1`.
pub fn stationary_distribution<F: Scalar>(kernel: &DiscreteKernel<F>) -> Result<Vec<f64>> {
    let n = kernel.n_states();
    if n > STATIONARY_SOLVE_LIMIT {
        return Err(Error::invalid(format!(
            "stationary_distribution supports up to {STATIONARY_SOLVE_LIMIT} states, got {n}"
        )));
    }
    // Rows of (P^T - I), with the last balance equation replaced by the
    // normalization row.
    let mut a = vec![vec![0.0f64; n]; n];
    for i in 0..n {
        for &(j, p) in kernel.row(i) {
            a[j as usize][i] += p.to_f64().unwrap();
        }
    }
    for (i, row) in a.iter_mut().enumerate() {
        row[i] -= 1.0;
    }
    a[n - 1] = vec![1.0; n];
    let mut b = vec![0.0; n];
    b[n - 1] = 1.0;
    let pi = solve_dense(a, b)?;
    if pi.iter().any(|&p| p < -1e-9) {
        return Err(Error::numerical("stationary solve produced negative mass".to_string()));
    }
    Ok(pi.into_iter().map(|p| p.max(0.0)).collect())
}
