//! Local uncertainty sets attached to a single state-action pair, and the
//! exact solvers for the inner problem of a robust Bellman backup.
//!
//! Every row stores its successors in `support` and the variant-specific
//! parameters in the same order. Values handed to the inner solvers are
//! indexed the same way: `values[i]` is the current value of `support[i]`.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance applied to stochasticity and feasibility checks on rows read
/// from literals.
pub const CONSTRUCTION_TOL: f64 = 1e-12;

/// Which side nature plays on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// Adversarial nature: minimize the expectation.
    Min,
    /// Cooperative nature: maximize the expectation.
    Max,
}

impl Direction {
    pub fn flip(self) -> Self {
        match self {
            Direction::Min => Direction::Max,
            Direction::Max => Direction::Min,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum RowSet {
    Point { probs: Vec<f64> },
    Interval { lowers: Vec<f64>, uppers: Vec<f64> },
    L1 { center: Vec<f64>, radius: f64 },
}

/// The uncertainty set of successor distributions for one state-action pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UncertainRow {
    support: Vec<usize>,
    set: RowSet,
}

/// Extremal distribution and the expectation it attains.
#[derive(Debug, Clone, PartialEq)]
pub struct InnerResult {
    pub probs: Vec<f64>,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphCheck {
    pub preserving: bool,
    pub diagnostic: Option<String>,
}

impl UncertainRow {
    pub fn point(support: Vec<usize>, probs: Vec<f64>) -> Self {
        Self { support, set: RowSet::Point { probs } }
    }

    pub fn interval(support: Vec<usize>, lowers: Vec<f64>, uppers: Vec<f64>) -> Self {
        Self { support, set: RowSet::Interval { lowers, uppers } }
    }

    pub fn l1(support: Vec<usize>, center: Vec<f64>, radius: f64) -> Self {
        Self { support, set: RowSet::L1 { center, radius } }
    }

    /// A point row with all mass on one successor.
    pub fn dirac(successor: usize) -> Self {
        Self::point(vec![successor], vec![1.0])
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn set(&self) -> &RowSet {
        &self.set
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn variant_name(&self) -> &'static str {
        match self.set {
            RowSet::Point { .. } => "point",
            RowSet::Interval { .. } => "interval",
            RowSet::L1 { .. } => "l1",
        }
    }

    /// A distribution guaranteed to lie in the set: the point itself, the
    /// L1 center, or the interval distribution obtained by filling lower
    /// bounds in support order.
    pub fn representative(&self) -> Vec<f64> {
        match &self.set {
            RowSet::Point { probs } => probs.clone(),
            RowSet::L1 { center, .. } => center.clone(),
            RowSet::Interval { lowers, uppers } => {
                let mut probs = lowers.clone();
                let mut budget = (1.0 - lowers.iter().sum::<f64>()).max(0.0);
                for (p, (&lo, &hi)) in probs.iter_mut().zip(lowers.iter().zip(uppers)) {
                    let add = (hi - lo).min(budget);
                    *p += add;
                    budget -= add;
                }
                probs
            }
        }
    }

    /// Rule violations of this row in isolation, as `(rule, detail)` pairs.
    pub fn violations(&self, tol: f64) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        let m = self.support.len();
        if m == 0 {
            out.push(("empty-row", "row has no successors".to_string()));
            return out;
        }
        let mut sorted = self.support.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != m {
            out.push(("duplicate-successor", "a successor is listed twice".to_string()));
        }
        match &self.set {
            RowSet::Point { probs } => {
                if probs.len() != m {
                    out.push(("length-mismatch", format!("{} probabilities for {m} successors", probs.len())));
                    return out;
                }
                if probs.iter().any(|p| !p.is_finite() || *p < 0.0 || *p > 1.0) {
                    out.push(("probability-out-of-range", "probabilities must lie in [0, 1]".to_string()));
                }
                let sum: f64 = probs.iter().sum();
                if (sum - 1.0).abs() > tol {
                    out.push(("row-not-stochastic", format!("probabilities sum to {sum}")));
                }
            }
            RowSet::Interval { lowers, uppers } => {
                if lowers.len() != m || uppers.len() != m {
                    out.push(("length-mismatch", format!("bounds do not match {m} successors")));
                    return out;
                }
                for (i, (&lo, &hi)) in lowers.iter().zip(uppers).enumerate() {
                    if !lo.is_finite() || !hi.is_finite() {
                        out.push(("interval-bounds", format!("non-finite bound for successor {}", self.support[i])));
                    } else if lo <= 0.0 && hi > 0.0 {
                        out.push((
                            "interval-zero-lower",
                            format!(
                                "lower bound {lo} is zero but upper bound {hi} is not for successor {}",
                                self.support[i]
                            ),
                        ));
                    } else if lo <= 0.0 || lo > hi || hi > 1.0 {
                        out.push((
                            "interval-bounds",
                            format!("need 0 < lower <= upper <= 1, got [{lo}, {hi}] for successor {}", self.support[i]),
                        ));
                    }
                }
                let lo_sum: f64 = lowers.iter().sum();
                let hi_sum: f64 = uppers.iter().sum();
                if lo_sum > 1.0 + tol || hi_sum < 1.0 - tol {
                    out.push((
                        "interval-infeasible",
                        format!("need sum(lower) <= 1 <= sum(upper), got {lo_sum} and {hi_sum}"),
                    ));
                }
            }
            RowSet::L1 { center, radius } => {
                if center.len() != m {
                    out.push(("length-mismatch", format!("{} center entries for {m} successors", center.len())));
                    return out;
                }
                if center.iter().any(|p| !p.is_finite() || *p < 0.0 || *p > 1.0) {
                    out.push(("probability-out-of-range", "center entries must lie in [0, 1]".to_string()));
                }
                let sum: f64 = center.iter().sum();
                if (sum - 1.0).abs() > tol {
                    out.push(("row-not-stochastic", format!("center sums to {sum}")));
                }
                if !radius.is_finite() || *radius < 0.0 || *radius > 2.0 {
                    out.push(("l1-radius", format!("radius {radius} outside [0, 2]")));
                }
            }
        }
        out
    }

    /// Whether every member of the set has exactly the declared support.
    pub fn check_graph_preserving(&self) -> GraphCheck {
        match &self.set {
            // zero-mass entries of a point row never become positive
            RowSet::Point { .. } => GraphCheck { preserving: true, diagnostic: None },
            RowSet::Interval { lowers, .. } => match lowers.iter().position(|&l| l <= 0.0) {
                None => GraphCheck { preserving: true, diagnostic: None },
                Some(i) => GraphCheck {
                    preserving: false,
                    diagnostic: Some(format!("lower bound of successor {} is zero", self.support[i])),
                },
            },
            RowSet::L1 { center, radius } => {
                let min = center.iter().copied().fold(f64::INFINITY, f64::min);
                if *radius < 2.0 * min {
                    GraphCheck { preserving: true, diagnostic: None }
                } else {
                    GraphCheck {
                        preserving: false,
                        diagnostic: Some(format!(
                            "radius {radius} lets a successor with center mass {min} drop to zero"
                        )),
                    }
                }
            }
        }
    }

    /// Solve the inner problem of this row against `values`.
    pub fn inner_extremum(&self, values: &[f64], direction: Direction) -> Result<InnerResult> {
        match &self.set {
            RowSet::Point { probs } => inner_point(probs, values),
            RowSet::Interval { lowers, uppers } => inner_interval(lowers, uppers, values, direction),
            RowSet::L1 { center, radius } => inner_l1(center, *radius, values, direction),
        }
    }

    /// Same as [`Self::inner_extremum`] but reads successor values straight
    /// from a full state-value vector.
    pub fn inner_on(&self, state_values: &[f64], direction: Direction) -> Result<InnerResult> {
        let local: Vec<f64> = self.support.iter().map(|&s| state_values[s]).collect();
        self.inner_extremum(&local, direction)
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Min => "min",
            Direction::Max => "max",
        })
    }
}

fn check_values(values: &[f64], expected: usize) -> Result<()> {
    if values.len() != expected {
        return Err(Error::DimensionMismatch { expected, got: values.len() });
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteValue);
    }
    Ok(())
}

/// Successor positions sorted by value, ascending for `Min` and descending
/// for `Max`; equal values keep ascending position order.
fn sorted_positions(values: &[f64], direction: Direction) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| {
        let ord = values[a].partial_cmp(&values[b]).unwrap_or(Ordering::Equal);
        match direction {
            Direction::Min => ord,
            Direction::Max => ord.reverse(),
        }
    });
    order
}

fn dot(probs: &[f64], values: &[f64]) -> f64 {
    probs.iter().zip(values).map(|(p, v)| p * v).sum()
}

pub fn inner_point(probs: &[f64], values: &[f64]) -> Result<InnerResult> {
    check_values(values, probs.len())?;
    Ok(InnerResult { probs: probs.to_vec(), value: dot(probs, values) })
}

/// Greedy inner problem over an interval polytope.
///
/// Starting from the lower bounds, successors are raised to their upper bound
/// in value order while the free budget `1 - sum(lowers)` allows; the first
/// successor that cannot be fully raised absorbs what is left.
pub fn inner_interval(lowers: &[f64], uppers: &[f64], values: &[f64], direction: Direction) -> Result<InnerResult> {
    if uppers.len() != lowers.len() {
        return Err(Error::DimensionMismatch { expected: lowers.len(), got: uppers.len() });
    }
    check_values(values, lowers.len())?;
    let lo_sum: f64 = lowers.iter().sum();
    let hi_sum: f64 = uppers.iter().sum();
    if lo_sum > 1.0 + CONSTRUCTION_TOL || hi_sum < 1.0 - CONSTRUCTION_TOL {
        return Err(Error::InfeasibleRow(format!("sum of lower bounds {lo_sum}, sum of upper bounds {hi_sum}")));
    }

    let mut probs = lowers.to_vec();
    let mut budget = (1.0 - lo_sum).max(0.0);
    for i in sorted_positions(values, direction) {
        let width = uppers[i] - lowers[i];
        if budget - width >= 0.0 {
            probs[i] = uppers[i];
            budget -= width;
        } else {
            probs[i] = lowers[i] + budget;
            break;
        }
    }
    let value = dot(&probs, values);
    Ok(InnerResult { probs, value })
}

/// Greedy inner problem over the intersection of an L1 ball of radius
/// `radius` around `center` with the probability simplex.
///
/// The best successor (lowest value for `Min`) gains up to `radius / 2`;
/// the excess is then trimmed from the worst end of the order.
pub fn inner_l1(center: &[f64], radius: f64, values: &[f64], direction: Direction) -> Result<InnerResult> {
    if !(0.0..=2.0).contains(&radius) {
        return Err(Error::InfeasibleRow(format!("L1 radius {radius} outside [0, 2]")));
    }
    check_values(values, center.len())?;
    if center.is_empty() {
        return Err(Error::InfeasibleRow("empty L1 row".to_string()));
    }

    let order = sorted_positions(values, direction);
    let mut probs = center.to_vec();
    let first = order[0];
    probs[first] = (center[first] + radius / 2.0).min(1.0);
    let mut sum: f64 = probs.iter().sum();
    // a few ulps of slack so rounding in the running sum does not trim an
    // extra successor
    let limit = 1.0 + 4.0 * f64::EPSILON;
    for &i in order.iter().skip(1).rev() {
        if sum <= limit {
            break;
        }
        let others = sum - probs[i];
        probs[i] = (1.0 - others).max(0.0);
        sum = others + probs[i];
    }
    let value = dot(&probs, values);
    Ok(InnerResult { probs, value })
}
