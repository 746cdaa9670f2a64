//! Robust, optimistic and nominal dynamic programming.
//!
//! Every sweep is double buffered: the next iterate is computed from an
//! immutable copy of the previous one, so results do not depend on the
//! order in which states are visited and large models can be swept in
//! parallel.

mod memdp;

use std::collections::VecDeque;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{self, StateClass};
use crate::model::{Choice, Model, ModelKind, StationaryPolicy};
use crate::uncertainty::Direction;

pub use memdp::{memdp_best_stationary, memdp_evaluate, MemdpEvaluation, DEFAULT_POLICY_GUARD};

/// Below this many states a sweep runs on the calling thread.
const PARALLEL_MIN_STATES: usize = 512;
/// Policy iteration solves evaluation linear systems exactly up to this
/// many iterated states; larger problems keep the iterative estimate.
pub const EXACT_EVALUATION_LIMIT: usize = 800;
/// Cap on nature's improvement steps within one exact evaluation.
const NATURE_ROUNDS: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Objective {
    /// Expected cumulative reward until the first visit to `targets`.
    ReachReward { targets: Vec<usize> },
    /// Probability of eventually visiting `targets`.
    Reachability { targets: Vec<usize> },
    /// Expected discounted reward.
    Discounted { gamma: f64 },
}

impl Objective {
    pub fn name(&self) -> &'static str {
        match self {
            Objective::ReachReward { .. } => "reach-reward",
            Objective::Reachability { .. } => "reachability",
            Objective::Discounted { .. } => "discounted",
        }
    }

    pub fn targets(&self) -> Option<&[usize]> {
        match self {
            Objective::ReachReward { targets } | Objective::Reachability { targets } => Some(targets),
            Objective::Discounted { .. } => None,
        }
    }

    pub fn check(&self, num_states: usize) -> Result<()> {
        match self {
            Objective::ReachReward { targets } | Objective::Reachability { targets } => {
                if targets.is_empty() {
                    return Err(Error::InvalidObjective("target set is empty".to_string()));
                }
                if let Some(&t) = targets.iter().find(|&&t| t >= num_states) {
                    return Err(Error::StateOutOfRange(t));
                }
            }
            Objective::Discounted { gamma } => {
                if !(0.0..1.0).contains(gamma) {
                    return Err(Error::InvalidObjective(format!("discount {gamma} outside [0, 1)")));
                }
            }
        }
        Ok(())
    }
}

impl fmt::Display for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Nature minimizes.
    Robust,
    /// Nature maximizes.
    Optimistic,
    /// Point transitions only; no nature.
    Nominal,
}

impl Mode {
    pub fn direction(self) -> Direction {
        match self {
            Mode::Robust | Mode::Nominal => Direction::Min,
            Mode::Optimistic => Direction::Max,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Robust => "robust",
            Mode::Optimistic => "optimistic",
            Mode::Nominal => "nominal",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    /// Stop once the max-norm change of a sweep drops below this.
    pub epsilon: f64,
    pub max_iter: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { epsilon: 1e-6, max_iter: 100_000 }
    }
}

impl SolveOptions {
    pub fn new(epsilon: f64, max_iter: usize) -> Self {
        Self { epsilon, max_iter }
    }

    pub fn check(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidConfig(format!("epsilon {} must be positive", self.epsilon)));
        }
        Ok(())
    }
}

/// State values with convergence metadata. Reach-reward values are `+inf`
/// exactly on the infinite partition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueVector {
    pub values: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub values: ValueVector,
    pub policy: StationaryPolicy,
    pub mode: Mode,
    pub objective: Objective,
    /// Evaluation sweeps spent in each policy-iteration round; empty for
    /// value iteration.
    pub evaluation_sweeps: Vec<usize>,
}

/// A model, objective and mode after qualitative preprocessing.
struct Problem<'a> {
    model: &'a Model,
    objective: &'a Objective,
    direction: Direction,
    /// States whose value is iterated; the others stay at `init`.
    active: Vec<bool>,
    init: Vec<f64>,
}

impl<'a> Problem<'a> {
    fn new(model: &'a Model, objective: &'a Objective, mode: Mode) -> Result<Self> {
        if model.kind() == ModelKind::Memdp {
            return Err(Error::UnsupportedKind { expected: "single-environment", got: model.kind() });
        }
        if mode == Mode::Nominal && model.kind() != ModelKind::Mdp {
            return Err(Error::UnsupportedKind { expected: "mdp", got: model.kind() });
        }
        objective.check(model.num_states())?;
        let n = model.num_states();
        let (active, init) = match objective {
            Objective::ReachReward { targets } => {
                let partition = graph::classify_reach_reward(model, targets)?;
                (0..n)
                    .map(|s| match partition.class(s) {
                        StateClass::Target => (false, 0.0),
                        StateClass::Infinite => (false, f64::INFINITY),
                        StateClass::Unknown => (true, 0.0),
                    })
                    .unzip()
            }
            Objective::Reachability { targets } => {
                let partition = graph::classify_reachability(model, targets)?;
                (0..n)
                    .map(|s| match partition.class(s) {
                        StateClass::Target => (false, 1.0),
                        _ if partition.is_zero(s) => (false, 0.0),
                        _ => (true, 0.0),
                    })
                    .unzip()
            }
            Objective::Discounted { .. } => (vec![true; n], vec![0.0; n]),
        };
        Ok(Self { model, objective, direction: mode.direction(), active, init })
    }

    /// One-step backup of a single choice.
    fn q_value(&self, choice: &Choice, values: &[f64]) -> Result<f64> {
        let expected = choice.row().inner_on(values, self.direction)?.value;
        Ok(match self.objective {
            Objective::ReachReward { .. } => choice.reward + expected,
            Objective::Reachability { .. } => expected,
            Objective::Discounted { gamma } => choice.reward + gamma * expected,
        })
    }

    /// Best choice of `s`: highest backup, lowest action index on ties.
    fn best(&self, s: usize, values: &[f64]) -> Result<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        for c in self.model.choices(s) {
            let q = self.q_value(c, values)?;
            match best {
                Some((_, b)) if q <= b + tie_tolerance(b) => {}
                _ => best = Some((c.action, q)),
            }
        }
        best.ok_or_else(|| Error::InvalidConfig(format!("state {s} has no enabled action")))
    }

    fn optimal_backup(&self, s: usize, values: &[f64]) -> Result<f64> {
        if !self.active[s] {
            return Ok(values[s]);
        }
        self.best(s, values).map(|(_, q)| q)
    }

    fn policy_backup(&self, s: usize, values: &[f64], policy: &StationaryPolicy) -> Result<f64> {
        if !self.active[s] {
            return Ok(values[s]);
        }
        let mut total = 0.0;
        for &(a, w) in policy.distribution(s) {
            let c = self.model.choice(s, a).expect("policy checked against model");
            total += w * self.q_value(c, values)?;
        }
        Ok(total)
    }

    fn sweep<F>(&self, values: &[f64], backup: F) -> Result<Vec<f64>>
    where
        F: Fn(usize, &[f64]) -> Result<f64> + Sync,
    {
        let n = values.len();
        if n >= PARALLEL_MIN_STATES {
            (0..n).into_par_iter().map(|s| backup(s, values)).collect()
        } else {
            (0..n).map(|s| backup(s, values)).collect()
        }
    }

    fn iterate<F>(&self, opts: &SolveOptions, backup: F) -> Result<ValueVector>
    where
        F: Fn(usize, &[f64]) -> Result<f64> + Sync,
    {
        opts.check()?;
        let mut values = self.init.clone();
        if !self.active.iter().any(|&a| a) {
            return Ok(ValueVector { values, residual: 0.0, iterations: 0, converged: true });
        }
        let mut residual = f64::INFINITY;
        let mut iterations = 0;
        let mut converged = false;
        while iterations < opts.max_iter {
            let next = self.sweep(&values, &backup)?;
            residual = max_change(&values, &next, &self.active);
            values = next;
            iterations += 1;
            if residual < opts.epsilon {
                converged = true;
                break;
            }
        }
        Ok(ValueVector { values, residual, iterations, converged })
    }

    /// Exact value of a deterministic agent policy against nature, by
    /// policy iteration on nature's side with linear solves, warm started
    /// from `values`. Returns the number of nature rounds.
    fn refine_exact(&self, actions: &[usize], values: &mut [f64]) -> Result<usize> {
        let n = values.len();
        let active: Vec<usize> = (0..n).filter(|&s| self.active[s]).collect();
        let mut index = vec![usize::MAX; n];
        for (k, &s) in active.iter().enumerate() {
            index[s] = k;
        }
        let (gamma, reward_weight) = match self.objective {
            Objective::ReachReward { .. } => (1.0, 1.0),
            Objective::Reachability { .. } => (1.0, 0.0),
            Objective::Discounted { gamma } => (*gamma, 1.0),
        };
        let choices: Vec<&Choice> =
            active.iter().map(|&s| self.model.choice(s, actions[s]).expect("policy uses enabled actions")).collect();
        let mut dists: Vec<Vec<f64>> =
            choices.iter().map(|c| c.row().inner_on(values, self.direction).map(|r| r.probs)).collect::<Result<_>>()?;
        let mut rounds = 0;
        loop {
            rounds += 1;
            let k = active.len();
            // active states that can leave the active set under these rows
            let mut exits = vec![false; k];
            let mut preds: Vec<Vec<usize>> = vec![Vec::new(); k];
            for (i, c) in choices.iter().enumerate() {
                for (&t, &p) in c.row().support().iter().zip(&dists[i]) {
                    if p > 0.0 {
                        if index[t] == usize::MAX {
                            exits[i] = true;
                        } else {
                            preds[index[t]].push(i);
                        }
                    }
                }
            }
            let mut stack: Vec<usize> = (0..k).filter(|&i| exits[i]).collect();
            while let Some(j) = stack.pop() {
                for &i in &preds[j] {
                    if !exits[i] {
                        exits[i] = true;
                        stack.push(i);
                    }
                }
            }
            let trapped = gamma == 1.0;
            let mut a = vec![vec![0.0; k]; k];
            let mut b = vec![0.0; k];
            for i in 0..k {
                a[i][i] = 1.0;
                if trapped && !exits[i] {
                    // closed under the policy: never reaches the target
                    continue;
                }
                b[i] = reward_weight * choices[i].reward;
                for (&t, &p) in choices[i].row().support().iter().zip(&dists[i]) {
                    match index[t] {
                        usize::MAX => b[i] += gamma * p * values[t],
                        j => a[i][j] -= gamma * p,
                    }
                }
            }
            let solution = crate::oracle::solve_linear(a, b)?;
            for (i, &s) in active.iter().enumerate() {
                values[s] = if trapped && !exits[i] && reward_weight > 0.0 { f64::INFINITY } else { solution[i] };
            }
            if rounds >= NATURE_ROUNDS {
                return Ok(rounds);
            }
            let mut improved = false;
            for (i, c) in choices.iter().enumerate() {
                let current: f64 = c.row().support().iter().zip(&dists[i]).map(|(&t, p)| p * values[t]).sum();
                let response = c.row().inner_on(values, self.direction)?;
                let gain = match self.direction {
                    Direction::Min => current - response.value,
                    Direction::Max => response.value - current,
                };
                if gain > tie_tolerance(current) {
                    dists[i] = response.probs;
                    improved = true;
                }
            }
            if !improved {
                return Ok(rounds);
            }
        }
    }

    fn check_dimensions(&self, values: &[f64]) -> Result<()> {
        if values.len() != self.model.num_states() {
            return Err(Error::DimensionMismatch { expected: self.model.num_states(), got: values.len() });
        }
        Ok(())
    }

    fn lowest_action(&self, s: usize) -> usize {
        self.model.choices(s)[0].action
    }
}

fn tie_tolerance(b: f64) -> f64 {
    1e-12 * b.abs().max(1.0)
}

fn max_change(old: &[f64], new: &[f64], active: &[bool]) -> f64 {
    old.iter().zip(new).zip(active).filter(|(_, &a)| a).map(|((x, y), _)| (x - y).abs()).fold(0.0, f64::max)
}

/// Value iteration from the zero-initialized preprocessed vector.
pub fn value_iteration(model: &Model, objective: &Objective, mode: Mode, opts: &SolveOptions) -> Result<ValueVector> {
    let problem = Problem::new(model, objective, mode)?;
    problem.iterate(opts, |s, v| problem.optimal_backup(s, v))
}

/// Apply one optimal Bellman sweep to `values`.
pub fn bellman_sweep(model: &Model, objective: &Objective, mode: Mode, values: &[f64]) -> Result<Vec<f64>> {
    let problem = Problem::new(model, objective, mode)?;
    problem.check_dimensions(values)?;
    problem.sweep(values, |s, v| problem.optimal_backup(s, v))
}

/// Greedy deterministic policy with respect to `values`.
pub fn extract_policy(
    model: &Model,
    values: &ValueVector,
    objective: &Objective,
    mode: Mode,
) -> Result<StationaryPolicy> {
    let problem = Problem::new(model, objective, mode)?;
    problem.check_dimensions(&values.values)?;
    match objective {
        Objective::Reachability { .. } => {
            let tolerance = if values.residual.is_finite() { 10.0 * values.residual } else { 0.0 };
            greedy_reaching(&problem, &values.values, tolerance)
        }
        _ => greedy(&problem, &values.values),
    }
}

fn greedy(problem: &Problem<'_>, values: &[f64]) -> Result<StationaryPolicy> {
    let actions = (0..problem.model.num_states())
        .map(|s| if problem.active[s] { problem.best(s, values).map(|(a, _)| a) } else { Ok(problem.lowest_action(s)) })
        .collect::<Result<Vec<_>>>()?;
    Ok(StationaryPolicy::deterministic(&actions))
}

/// Greedy policy for reachability. Ties between near-optimal actions are
/// broken so that the chosen actions lead to the target: states are
/// settled in rounds, each taking the first near-optimal action that puts
/// positive mass (against nature) on states settled earlier.
fn greedy_reaching(problem: &Problem<'_>, values: &[f64], tolerance: f64) -> Result<StationaryPolicy> {
    let Some(targets) = problem.objective.targets() else { return greedy(problem, values) };
    let model = problem.model;
    let n = model.num_states();
    let mut candidates: Vec<Vec<usize>> = vec![Vec::new(); n];
    for s in (0..n).filter(|&s| problem.active[s]) {
        let (_, best) = problem.best(s, values)?;
        for c in model.choices(s) {
            if problem.q_value(c, values)? >= best - tolerance - tie_tolerance(best) {
                candidates[s].push(c.action);
            }
        }
    }
    let mut settled = vec![0.0; n];
    for &t in targets {
        settled[t] = 1.0;
    }
    let mut chosen: Vec<Option<usize>> = vec![None; n];
    loop {
        let mut round = Vec::new();
        for s in (0..n).filter(|&s| problem.active[s] && chosen[s].is_none()) {
            for &a in &candidates[s] {
                let row = model.choice(s, a).expect("candidate is enabled").row();
                if row.inner_on(&settled, problem.direction)?.value > 1e-12 {
                    round.push((s, a));
                    break;
                }
            }
        }
        if round.is_empty() {
            break;
        }
        for (s, a) in round {
            chosen[s] = Some(a);
            settled[s] = 1.0;
        }
    }
    let fallback = greedy(problem, values)?;
    let actions: Vec<usize> =
        (0..n).map(|s| chosen[s].unwrap_or_else(|| fallback.action(s).expect("deterministic"))).collect();
    Ok(StationaryPolicy::deterministic(&actions))
}

/// Value of a fixed stationary policy against nature playing `mode`.
pub fn policy_evaluation(
    model: &Model,
    policy: &StationaryPolicy,
    objective: &Objective,
    mode: Mode,
    opts: &SolveOptions,
) -> Result<ValueVector> {
    let problem = Problem::new(model, objective, mode)?;
    policy.check(model)?;
    problem.iterate(opts, |s, v| problem.policy_backup(s, v, policy))
}

/// Value of a deterministic policy against nature playing `mode`, from
/// linear solves rather than iteration. Limited to
/// [`EXACT_EVALUATION_LIMIT`] iterated states.
pub fn exact_policy_value(
    model: &Model,
    policy: &StationaryPolicy,
    objective: &Objective,
    mode: Mode,
) -> Result<Vec<f64>> {
    let problem = Problem::new(model, objective, mode)?;
    policy.check(model)?;
    let actions = policy
        .actions()
        .ok_or_else(|| Error::InvalidPolicy("exact evaluation needs a deterministic policy".to_string()))?;
    let active = problem.active.iter().filter(|&&a| a).count();
    if active > EXACT_EVALUATION_LIMIT {
        return Err(Error::GuardExceeded {
            what: "states for exact evaluation",
            count: active as u128,
            limit: EXACT_EVALUATION_LIMIT as u128,
        });
    }
    let mut values = problem.init.clone();
    problem.refine_exact(&actions, &mut values)?;
    Ok(values)
}

/// Value iteration followed by greedy policy extraction.
pub fn solve_vi(model: &Model, objective: &Objective, mode: Mode, opts: &SolveOptions) -> Result<SolveResult> {
    let values = value_iteration(model, objective, mode, opts)?;
    let policy = extract_policy(model, &values, objective, mode)?;
    Ok(SolveResult { values, policy, mode, objective: objective.clone(), evaluation_sweeps: Vec::new() })
}

/// Initial policy for policy iteration: for reach objectives, the action
/// with the successor closest to the target on the support graph.
fn initial_policy(problem: &Problem<'_>) -> Result<Vec<usize>> {
    let model = problem.model;
    let n = model.num_states();
    let Some(targets) = problem.objective.targets() else {
        return Ok((0..n).map(|s| problem.lowest_action(s)).collect());
    };
    let g = graph::support_graph(model, false)?;
    let mut dist = vec![usize::MAX; n];
    let mut queue = VecDeque::new();
    for &t in targets {
        if dist[t] == usize::MAX {
            dist[t] = 0;
            queue.push_back(t);
        }
    }
    while let Some(t) = queue.pop_front() {
        for &p in g.predecessors(t) {
            if dist[p] == usize::MAX {
                dist[p] = dist[t] + 1;
                queue.push_back(p);
            }
        }
    }
    Ok((0..n)
        .map(|s| {
            g.edges(s)
                .iter()
                .min_by_key(|(a, succ)| (succ.iter().map(|&t| dist[t]).min().unwrap_or(usize::MAX), *a))
                .map(|(a, _)| *a)
                .unwrap_or_else(|| problem.lowest_action(s))
        })
        .collect())
}

/// Robust policy iteration: evaluate the current deterministic policy
/// against nature to `epsilon / 10`, then switch every state to a strictly
/// better action. Stops when no state switches or after `max_iter` rounds.
pub fn policy_iteration(model: &Model, objective: &Objective, mode: Mode, opts: &SolveOptions) -> Result<SolveResult> {
    opts.check()?;
    let problem = Problem::new(model, objective, mode)?;
    let eval_opts = SolveOptions { epsilon: opts.epsilon / 10.0, max_iter: opts.max_iter };
    let switch_margin = opts.epsilon / 10.0;
    let mut actions = initial_policy(&problem)?;
    let mut sweeps = Vec::new();
    let mut rounds = 0;
    loop {
        let policy = StationaryPolicy::deterministic(&actions);
        let mut values = problem.iterate(&eval_opts, |s, v| problem.policy_backup(s, v, &policy))?;
        sweeps.push(values.iterations);
        if values.converged && problem.active.iter().filter(|&&a| a).count() <= EXACT_EVALUATION_LIMIT {
            problem.refine_exact(&actions, &mut values.values)?;
            let next = problem.sweep(&values.values, |s, v| problem.policy_backup(s, v, &policy))?;
            values.residual = max_change(&values.values, &next, &problem.active);
        }
        rounds += 1;

        let mut changed = false;
        for s in 0..model.num_states() {
            if !problem.active[s] {
                continue;
            }
            let current = model.choice(s, actions[s]).expect("initial policy uses enabled actions");
            let q_current = problem.q_value(current, &values.values)?;
            let (best, q_best) = problem.best(s, &values.values)?;
            if best != actions[s] && q_best > q_current + switch_margin {
                actions[s] = best;
                changed = true;
            }
        }
        if !changed || rounds >= opts.max_iter {
            values.converged &= !changed;
            return Ok(SolveResult { values, policy, mode, objective: objective.clone(), evaluation_sweeps: sweeps });
        }
    }
}
