//! Brute-force reference implementations for checking the fast paths at
//! desk scale.
//!
//! Nothing in here calls the inner-problem solvers, the qualitative graph
//! analysis or the dynamic-programming solver: the oracles enumerate
//! vertices, scan grids and solve linear systems directly. All of them are
//! exponential and guarded; exceeding a guard is an error, never a silent
//! approximation.

use crate::error::{Error, Result};
use crate::model::{Dtmc, Model, ModelKind};
use crate::solver::Objective;
use crate::uncertainty::{Direction, InnerResult, RowSet};

pub const MAX_VERTEX_SUCCESSORS: usize = 8;
pub const MAX_GRID_SUCCESSORS: usize = 4;
pub const MAX_DTMC_STATES: usize = 200;

const VERTEX_TOL: f64 = 1e-12;

/// Vertices of `{p : lowers <= p <= uppers, sum(p) = 1}`.
///
/// Every vertex has all coordinates but one at a bound, so the enumeration
/// fixes each coordinate at its lower or upper bound, balances one index,
/// and keeps the feasible results.
pub fn interval_vertices(lowers: &[f64], uppers: &[f64]) -> Result<Vec<Vec<f64>>> {
    let m = lowers.len();
    if uppers.len() != m {
        return Err(Error::DimensionMismatch { expected: m, got: uppers.len() });
    }
    if m > MAX_VERTEX_SUCCESSORS {
        return Err(Error::GuardExceeded {
            what: "interval vertex successors",
            count: m as u128,
            limit: MAX_VERTEX_SUCCESSORS as u128,
        });
    }
    let mut out: Vec<Vec<f64>> = Vec::new();
    for mask in 0u32..(1 << m) {
        for free in 0..m {
            let mut p: Vec<f64> = (0..m).map(|i| if mask & (1 << i) != 0 { uppers[i] } else { lowers[i] }).collect();
            let rest: f64 = (0..m).filter(|&i| i != free).map(|i| p[i]).sum();
            let balance = 1.0 - rest;
            if balance < lowers[free] - VERTEX_TOL || balance > uppers[free] + VERTEX_TOL {
                continue;
            }
            p[free] = balance.clamp(lowers[free], uppers[free]);
            let duplicate = out.iter().any(|q| q.iter().zip(&p).all(|(a, b)| (a - b).abs() <= VERTEX_TOL));
            if !duplicate {
                out.push(p);
            }
        }
    }
    Ok(out)
}

fn better(direction: Direction, candidate: f64, incumbent: f64) -> bool {
    match direction {
        Direction::Min => candidate < incumbent,
        Direction::Max => candidate > incumbent,
    }
}

/// Optimum of `dot(p, values)` over the interval vertices.
pub fn brute_inner_interval(
    lowers: &[f64],
    uppers: &[f64],
    values: &[f64],
    direction: Direction,
) -> Result<InnerResult> {
    if values.len() != lowers.len() {
        return Err(Error::DimensionMismatch { expected: lowers.len(), got: values.len() });
    }
    let mut best: Option<InnerResult> = None;
    for p in interval_vertices(lowers, uppers)? {
        let value: f64 = p.iter().zip(values).map(|(a, b)| a * b).sum();
        if best.as_ref().is_none_or(|b| better(direction, value, b.value)) {
            best = Some(InnerResult { probs: p, value });
        }
    }
    best.ok_or_else(|| Error::InfeasibleRow("interval polytope has no vertex".to_string()))
}

/// Best point of the simplex grid with step `1/q` whose L1 distance to
/// `center` is at most `radius + m/q`.
///
/// The `m/q` slack keeps a grid neighbour of every ball point admissible,
/// so the result is within `(max(values) - min(values)) * m / q` of the
/// exact optimum over the ball. The first `m - 2` coordinates are
/// enumerated; for the last two the admissible grid points form an integer
/// interval and the linear objective is optimal at one of its ends.
pub fn grid_inner_l1(center: &[f64], radius: f64, values: &[f64], direction: Direction, q: u32) -> Result<InnerResult> {
    let m = center.len();
    if values.len() != m {
        return Err(Error::DimensionMismatch { expected: m, got: values.len() });
    }
    if m == 0 || m > MAX_GRID_SUCCESSORS {
        return Err(Error::GuardExceeded {
            what: "L1 grid successors",
            count: m as u128,
            limit: MAX_GRID_SUCCESSORS as u128,
        });
    }
    if q == 0 {
        return Err(Error::InvalidConfig("grid resolution must be positive".to_string()));
    }
    let qf = f64::from(q);
    let scaled: Vec<f64> = center.iter().map(|c| c * qf).collect();
    let budget = radius * qf + m as f64;

    let mut search = GridSearch { scaled: &scaled, values, direction, best: None, prefix: Vec::with_capacity(m) };
    if m == 1 {
        if (qf - scaled[0]).abs() <= budget {
            search.best = Some((vec![q], values[0] * qf));
        }
    } else {
        search.descend(q, budget, 0.0);
    }
    let (counts, total) =
        search.best.ok_or_else(|| Error::InfeasibleRow("no grid point inside the L1 ball".to_string()))?;
    Ok(InnerResult { probs: counts.iter().map(|&k| f64::from(k) / qf).collect(), value: total / qf })
}

struct GridSearch<'a> {
    scaled: &'a [f64],
    values: &'a [f64],
    direction: Direction,
    best: Option<(Vec<u32>, f64)>,
    prefix: Vec<u32>,
}

impl GridSearch<'_> {
    /// `remaining` grid units to place, `budget` L1 units left (scaled by q),
    /// `acc` objective of the prefix (scaled by q).
    fn descend(&mut self, remaining: u32, budget: f64, acc: f64) {
        let m = self.scaled.len();
        let i = self.prefix.len();
        if i == m - 2 {
            self.finish_pair(remaining, budget, acc);
            return;
        }
        for k in 0..=remaining {
            let cost = (f64::from(k) - self.scaled[i]).abs();
            if cost > budget + 1e-9 {
                continue;
            }
            self.prefix.push(k);
            self.descend(remaining - k, budget - cost, acc + f64::from(k) * self.values[i]);
            self.prefix.pop();
        }
    }

    fn finish_pair(&mut self, remaining: u32, budget: f64, acc: f64) {
        let m = self.scaled.len();
        let (a, b) = (self.scaled[m - 2], self.scaled[m - 1]);
        let r = f64::from(remaining);
        if (r - a - b).abs() > budget + 1e-9 {
            return;
        }
        // |x - a| + |r - x - b| <= budget  <=>  |x - (a + r - b)/2| <= budget/2
        let mid = (a + r - b) / 2.0;
        let lo = ((mid - budget / 2.0) - 1e-9).ceil().max(0.0);
        let hi = ((mid + budget / 2.0) + 1e-9).floor().min(r);
        if lo > hi {
            return;
        }
        let (va, vb) = (self.values[m - 2], self.values[m - 1]);
        for x in [lo, hi] {
            let total = acc + x * va + (r - x) * vb;
            if self.best.as_ref().is_none_or(|(_, b)| better(self.direction, total, *b)) {
                let mut counts = self.prefix.clone();
                counts.push(x as u32);
                counts.push(remaining - x as u32);
                self.best = Some((counts, total));
            }
        }
    }
}

/// Exact values of a Markov chain by Gaussian elimination with partial
/// pivoting on the states whose value is not fixed by graph analysis.
pub fn exact_dtmc_value(dtmc: &Dtmc, objective: &Objective) -> Result<Vec<f64>> {
    let n = dtmc.num_states();
    if n > MAX_DTMC_STATES {
        return Err(Error::GuardExceeded {
            what: "exact DTMC states",
            count: n as u128,
            limit: MAX_DTMC_STATES as u128,
        });
    }
    objective.check(n)?;

    let mut fixed: Vec<Option<f64>> = vec![None; n];
    let mut target = vec![false; n];
    match objective {
        Objective::Discounted { .. } => {}
        Objective::ReachReward { targets } | Objective::Reachability { targets } => {
            for &t in targets {
                target[t] = true;
            }
            let reaches = reaches_target(dtmc, &target);
            let is_reward = matches!(objective, Objective::ReachReward { .. });
            for s in 0..n {
                if target[s] {
                    fixed[s] = Some(if is_reward { 0.0 } else { 1.0 });
                } else if !reaches[s] {
                    fixed[s] = Some(if is_reward { f64::INFINITY } else { 0.0 });
                }
            }
            if is_reward {
                // positive chance of getting stuck means infinite reward
                let stuck: Vec<bool> = (0..n).map(|s| !target[s] && !reaches[s]).collect();
                for s in backward(dtmc, &stuck, &target) {
                    fixed[s] = Some(f64::INFINITY);
                }
            }
        }
    }

    let unknown: Vec<usize> = (0..n).filter(|&s| fixed[s].is_none()).collect();
    let mut index = vec![usize::MAX; n];
    for (k, &s) in unknown.iter().enumerate() {
        index[s] = k;
    }
    let k = unknown.len();
    let gamma = match objective {
        Objective::Discounted { gamma } => *gamma,
        _ => 1.0,
    };
    let mut a = vec![vec![0.0; k]; k];
    let mut b = vec![0.0; k];
    for (row, &s) in unknown.iter().enumerate() {
        a[row][row] = 1.0;
        b[row] = match objective {
            Objective::Reachability { .. } => 0.0,
            _ => dtmc.rewards[s],
        };
        for &(t, p) in &dtmc.rows[s] {
            if p == 0.0 {
                continue;
            }
            match fixed[t] {
                None => a[row][index[t]] -= gamma * p,
                Some(v) => {
                    if matches!(objective, Objective::Reachability { .. }) {
                        b[row] += p * v;
                    }
                    // fixed reach-reward neighbours are targets (value 0)
                }
            }
        }
    }
    let solution = solve_linear(a, b)?;
    Ok((0..n).map(|s| fixed[s].unwrap_or_else(|| solution[index[s]])).collect())
}

/// States with a positive-probability path to `target`.
fn reaches_target(dtmc: &Dtmc, target: &[bool]) -> Vec<bool> {
    let none = vec![false; target.len()];
    let mut mask = vec![false; target.len()];
    for s in backward(dtmc, target, &none) {
        mask[s] = true;
    }
    mask
}

/// Backward closure of `seeds` over positive-probability edges, never
/// entering `blocked` states.
fn backward(dtmc: &Dtmc, seeds: &[bool], blocked: &[bool]) -> Vec<usize> {
    let n = dtmc.num_states();
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (s, row) in dtmc.rows.iter().enumerate() {
        for &(t, p) in row {
            if p > 0.0 {
                preds[t].push(s);
            }
        }
    }
    let mut seen = seeds.to_vec();
    let mut stack: Vec<usize> = (0..n).filter(|&s| seen[s]).collect();
    while let Some(t) = stack.pop() {
        for &p in &preds[t] {
            if !seen[p] && !blocked[p] {
                seen[p] = true;
                stack.push(p);
            }
        }
    }
    (0..n).filter(|&s| seen[s]).collect()
}

/// Solve `a x = b` in place.
pub fn solve_linear(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Result<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).expect("non-empty range");
        if a[pivot][col].abs() < 1e-14 {
            return Err(Error::Singular(col));
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            if factor == 0.0 {
                continue;
            }
            for j in col..n {
                a[row][j] -= factor * a[col][j];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let tail: f64 = (row + 1..n).map(|j| a[row][j] * x[j]).sum();
        x[row] = (b[row] - tail) / a[row][row];
    }
    Ok(x)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BruteForceGuards {
    pub max_policies: u128,
    /// Cap on joint vertex selections per agent policy.
    pub max_natures: u128,
}

impl Default for BruteForceGuards {
    fn default() -> Self {
        Self { max_policies: 64, max_natures: 10_000 }
    }
}

/// Successor list and vertex distributions of one interval choice.
type ChoiceVertices = (Vec<usize>, Vec<Vec<f64>>);

/// Robust value at the initial state of an interval model: maximum over
/// stationary deterministic agent policies of the minimum, over static
/// per-(state, action) vertex choices of nature, of the exact chain value.
pub fn brute_force_robust_value(model: &Model, objective: &Objective, guards: BruteForceGuards) -> Result<f64> {
    if model.kind() != ModelKind::Imdp {
        return Err(Error::UnsupportedKind { expected: "imdp", got: model.kind() });
    }
    objective.check(model.num_states())?;
    let n = model.num_states();
    let policies = (0..n).try_fold(1u128, |acc, s| acc.checked_mul(model.choices(s).len() as u128));
    let policies = policies.unwrap_or(u128::MAX);
    if policies > guards.max_policies {
        return Err(Error::GuardExceeded { what: "agent policies", count: policies, limit: guards.max_policies });
    }

    let mut target = vec![false; n];
    if let Some(ts) = objective.targets() {
        for &t in ts {
            target[t] = true;
        }
    }
    // vertices[s][k]: successor list and vertex distributions of the k-th choice
    let mut vertices: Vec<Vec<ChoiceVertices>> = Vec::with_capacity(n);
    for s in 0..n {
        let mut per_choice = Vec::new();
        for c in model.choices(s) {
            let RowSet::Interval { lowers, uppers } = c.row().set() else { unreachable!("interval model") };
            let mut verts = interval_vertices(lowers, uppers)?;
            if target[s] {
                // target rows never influence the value
                verts.truncate(1);
            }
            per_choice.push((c.row().support().to_vec(), verts));
        }
        vertices.push(per_choice);
    }

    let mut best = f64::NEG_INFINITY;
    let mut agent = vec![0usize; n];
    loop {
        let natures = (0..n).try_fold(1u128, |acc, s| acc.checked_mul(vertices[s][agent[s]].1.len() as u128));
        let natures = natures.unwrap_or(u128::MAX);
        if natures > guards.max_natures {
            return Err(Error::GuardExceeded {
                what: "nature vertex selections",
                count: natures,
                limit: guards.max_natures,
            });
        }
        let mut worst = f64::INFINITY;
        let mut pick = vec![0usize; n];
        loop {
            let rows = (0..n)
                .map(|s| {
                    let (support, verts) = &vertices[s][agent[s]];
                    support.iter().copied().zip(verts[pick[s]].iter().copied()).collect()
                })
                .collect();
            let rewards = (0..n).map(|s| model.choices(s)[agent[s]].reward).collect();
            let dtmc = Dtmc { initial: model.initial(), rows, rewards };
            worst = worst.min(exact_dtmc_value(&dtmc, objective)?[model.initial()]);
            if !advance(&mut pick, |s| vertices[s][agent[s]].1.len()) {
                break;
            }
        }
        best = best.max(worst);
        if !advance(&mut agent, |s| vertices[s].len()) {
            return Ok(best);
        }
    }
}

/// Odometer step; returns false after the last combination.
fn advance(digits: &mut [usize], radix: impl Fn(usize) -> usize) -> bool {
    for s in (0..digits.len()).rev() {
        digits[s] += 1;
        if digits[s] < radix(s) {
            return true;
        }
        digits[s] = 0;
    }
    false
}
