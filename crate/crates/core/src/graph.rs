//! Qualitative analysis on the support graph shared by every member of a
//! graph-preserving uncertainty set.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::model::{Model, ModelKind};
use crate::uncertainty::{RowSet, UncertainRow};

/// Successor sets per (state, enabled action).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SupportGraph {
    edges: Vec<Vec<(usize, Vec<usize>)>>,
    preds: Vec<Vec<usize>>,
}

impl SupportGraph {
    pub fn num_states(&self) -> usize {
        self.edges.len()
    }

    /// `(action, successors)` for every enabled action of `s`.
    pub fn edges(&self, s: usize) -> &[(usize, Vec<usize>)] {
        &self.edges[s]
    }

    /// Distinct predecessors of `t` over all actions.
    pub fn predecessors(&self, t: usize) -> &[usize] {
        &self.preds[t]
    }

    /// All `(s, action, t)` triples in ascending order.
    pub fn edge_list(&self) -> Vec<(usize, usize, usize)> {
        let mut out = Vec::new();
        for (s, list) in self.edges.iter().enumerate() {
            for (a, succ) in list {
                out.extend(succ.iter().map(|&t| (s, *a, t)));
            }
        }
        out
    }

    /// Backward reachability from `seeds`, never expanding through `blocked`.
    fn backward(&self, seeds: &[bool], blocked: &[bool]) -> Vec<bool> {
        let mut seen = seeds.to_vec();
        let mut queue: VecDeque<usize> = (0..seen.len()).filter(|&s| seen[s]).collect();
        while let Some(t) = queue.pop_front() {
            for &p in &self.preds[t] {
                if !seen[p] && !blocked[p] {
                    seen[p] = true;
                    queue.push_back(p);
                }
            }
        }
        seen
    }
}

fn positive_support(row: &UncertainRow) -> Vec<usize> {
    match row.set() {
        RowSet::Point { probs } => row.support().iter().zip(probs).filter(|(_, &p)| p > 0.0).map(|(&t, _)| t).collect(),
        _ => row.support().to_vec(),
    }
}

/// Build the support graph. With `strict`, every row must be graph
/// preserving and multi-environment rows must agree on their support.
pub fn support_graph(model: &Model, strict: bool) -> Result<SupportGraph> {
    let n = model.num_states();
    let mut edges = Vec::with_capacity(n);
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
    for s in 0..n {
        let mut list = Vec::with_capacity(model.choices(s).len());
        for c in model.choices(s) {
            let not_preserving = || Error::NotGraphPreserving {
                state: model.state_name(s).to_string(),
                action: model.action_name(c.action).to_string(),
            };
            if strict && c.rows.iter().any(|r| !r.check_graph_preserving().preserving) {
                return Err(not_preserving());
            }
            let mut succ = positive_support(&c.rows[0]);
            succ.sort_unstable();
            if model.kind() == ModelKind::Memdp {
                for row in &c.rows[1..] {
                    let mut other = positive_support(row);
                    other.sort_unstable();
                    if other != succ {
                        if strict {
                            return Err(not_preserving());
                        }
                        succ.extend(other);
                        succ.sort_unstable();
                        succ.dedup();
                    }
                }
            }
            for &t in &succ {
                if preds[t].last() != Some(&s) {
                    preds[t].push(s);
                }
            }
            list.push((c.action, succ));
        }
        edges.push(list);
    }
    Ok(SupportGraph { edges, preds })
}

fn target_mask(model: &Model, targets: &[usize]) -> Result<Vec<bool>> {
    if targets.is_empty() {
        return Err(Error::InvalidObjective("target set is empty".to_string()));
    }
    let mut mask = vec![false; model.num_states()];
    for &t in targets {
        if t >= mask.len() {
            return Err(Error::StateOutOfRange(t));
        }
        mask[t] = true;
    }
    Ok(mask)
}

fn mask_to_list(mask: &[bool]) -> Vec<usize> {
    mask.iter().enumerate().filter(|(_, &b)| b).map(|(s, _)| s).collect()
}

/// States outside `target` with some policy that avoids `target` forever.
fn avoid_forever(graph: &SupportGraph, target: &[bool]) -> Vec<bool> {
    let mut keep: Vec<bool> = target.iter().map(|t| !t).collect();
    loop {
        let mut changed = false;
        for s in 0..keep.len() {
            if keep[s] && !graph.edges(s).iter().any(|(_, succ)| succ.iter().all(|&t| keep[t])) {
                keep[s] = false;
                changed = true;
            }
        }
        if !changed {
            return keep;
        }
    }
}

/// Mask of states from which every policy reaches `target` almost surely
/// (targets included).
fn certain_mask(graph: &SupportGraph, target: &[bool]) -> Vec<bool> {
    let trapped = avoid_forever(graph, target);
    let escape = graph.backward(&trapped, target);
    escape.iter().map(|e| !e).collect()
}

/// States from which every policy reaches `targets` with probability one,
/// whatever member of the uncertainty set nature picks.
pub fn min_reach_certain(model: &Model, targets: &[usize]) -> Result<Vec<usize>> {
    let target = target_mask(model, targets)?;
    let graph = support_graph(model, true)?;
    Ok(mask_to_list(&certain_mask(&graph, &target)))
}

/// States with maximum reachability probability zero: no path to `targets`.
pub fn prob0_max(model: &Model, targets: &[usize]) -> Result<Vec<usize>> {
    let target = target_mask(model, targets)?;
    let graph = support_graph(model, false)?;
    Ok(mask_to_list(&prob0_mask(&graph, &target)))
}

fn prob0_mask(graph: &SupportGraph, target: &[bool]) -> Vec<bool> {
    let none = vec![false; target.len()];
    graph.backward(target, &none).iter().map(|r| !r).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StateClass {
    Target,
    Infinite,
    Unknown,
}

/// Partition used by reach-reward and reachability value iteration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReachPartition {
    classes: Vec<StateClass>,
    zero: Vec<bool>,
}

impl ReachPartition {
    pub fn class(&self, s: usize) -> StateClass {
        self.classes[s]
    }

    pub fn is_zero(&self, s: usize) -> bool {
        self.zero[s]
    }

    fn collect(&self, class: StateClass) -> Vec<usize> {
        (0..self.classes.len()).filter(|&s| self.classes[s] == class).collect()
    }

    pub fn target(&self) -> Vec<usize> {
        self.collect(StateClass::Target)
    }

    pub fn infinite(&self) -> Vec<usize> {
        self.collect(StateClass::Infinite)
    }

    pub fn unknown(&self) -> Vec<usize> {
        self.collect(StateClass::Unknown)
    }

    /// States with maximum reachability probability zero.
    pub fn zero(&self) -> Vec<usize> {
        mask_to_list(&self.zero)
    }
}

/// Split states into target, infinite (some policy misses the target with
/// positive probability) and unknown, on a graph-preserving model.
pub fn classify_reach_reward(model: &Model, targets: &[usize]) -> Result<ReachPartition> {
    let target = target_mask(model, targets)?;
    let graph = support_graph(model, true)?;
    let certain = certain_mask(&graph, &target);
    let classes = (0..model.num_states())
        .map(|s| {
            if target[s] {
                StateClass::Target
            } else if certain[s] {
                StateClass::Unknown
            } else {
                StateClass::Infinite
            }
        })
        .collect();
    Ok(ReachPartition { classes, zero: prob0_mask(&graph, &target) })
}

/// Partition for the reachability objective. Needs no graph preservation:
/// only `target` and `zero` are meaningful, the rest is `Unknown`.
pub fn classify_reachability(model: &Model, targets: &[usize]) -> Result<ReachPartition> {
    let target = target_mask(model, targets)?;
    let graph = support_graph(model, false)?;
    let zero = prob0_mask(&graph, &target);
    let classes = target.iter().map(|&t| if t { StateClass::Target } else { StateClass::Unknown }).collect();
    Ok(ReachPartition { classes, zero })
}
