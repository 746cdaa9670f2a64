//! Multi-environment models under static uncertainty: nature commits to one
//! environment up front. These routines evaluate stationary policies exactly
//! per environment; they are not optimal solvers, since optimal policies for
//! such models may need memory and randomization.

use crate::error::{Error, Result};
use crate::model::{induce_dtmc, Model, ModelKind, StationaryPolicy};
use crate::oracle::exact_dtmc_value;

use super::{Mode, Objective, SolveResult, ValueVector};

/// Default cap on the number of stationary deterministic policies
/// [`memdp_best_stationary`] will enumerate.
pub const DEFAULT_POLICY_GUARD: u128 = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct MemdpEvaluation {
    /// `per_environment[i][s]`: exact value of state `s` in environment `i`.
    pub per_environment: Vec<Vec<f64>>,
    pub worst_environment: usize,
    /// Minimum over environments of the initial-state value.
    pub worst_initial: f64,
}

impl MemdpEvaluation {
    /// Statewise minimum over environments.
    pub fn worst_per_state(&self) -> Vec<f64> {
        let n = self.per_environment.first().map_or(0, Vec::len);
        (0..n).map(|s| self.per_environment.iter().map(|v| v[s]).fold(f64::INFINITY, f64::min)).collect()
    }
}

fn require_memdp(model: &Model) -> Result<()> {
    if model.kind() != ModelKind::Memdp {
        return Err(Error::UnsupportedKind { expected: "memdp", got: model.kind() });
    }
    Ok(())
}

pub fn memdp_evaluate(model: &Model, policy: &StationaryPolicy, objective: &Objective) -> Result<MemdpEvaluation> {
    require_memdp(model)?;
    objective.check(model.num_states())?;
    policy.check(model)?;
    let environments = (0..model.num_environments()).map(|i| model.environment(i)).collect::<Result<Vec<_>>>()?;
    evaluate_environments(&environments, model.initial(), policy, objective)
}

fn evaluate_environments(
    environments: &[Model],
    initial: usize,
    policy: &StationaryPolicy,
    objective: &Objective,
) -> Result<MemdpEvaluation> {
    let mut per_environment = Vec::with_capacity(environments.len());
    let mut worst_environment = 0;
    let mut worst_initial = f64::INFINITY;
    for (i, env) in environments.iter().enumerate() {
        let dtmc = induce_dtmc(env, policy)?;
        let values = exact_dtmc_value(&dtmc, objective)?;
        if values[initial] < worst_initial {
            worst_initial = values[initial];
            worst_environment = i;
        }
        per_environment.push(values);
    }
    Ok(MemdpEvaluation { per_environment, worst_environment, worst_initial })
}

/// Exhaustive search over stationary deterministic policies for the best
/// worst-case initial value. Policies are visited in lexicographic order of
/// their action vectors; the first maximizer wins.
pub fn memdp_best_stationary(model: &Model, objective: &Objective, guard: u128) -> Result<SolveResult> {
    require_memdp(model)?;
    objective.check(model.num_states())?;
    let n = model.num_states();
    let count = (0..n).try_fold(1u128, |acc, s| acc.checked_mul(model.choices(s).len() as u128));
    match count {
        Some(c) if c <= guard => {}
        other => {
            return Err(Error::GuardExceeded {
                what: "stationary deterministic policies",
                count: other.unwrap_or(u128::MAX),
                limit: guard,
            })
        }
    }
    let environments = (0..model.num_environments()).map(|i| model.environment(i)).collect::<Result<Vec<_>>>()?;

    let mut digits = vec![0usize; n];
    let mut best: Option<(Vec<usize>, MemdpEvaluation)> = None;
    let mut visited = 0usize;
    loop {
        let actions: Vec<usize> = (0..n).map(|s| model.choices(s)[digits[s]].action).collect();
        let eval = evaluate_environments(
            &environments,
            model.initial(),
            &StationaryPolicy::deterministic(&actions),
            objective,
        )?;
        visited += 1;
        if best.as_ref().is_none_or(|(_, b)| eval.worst_initial > b.worst_initial) {
            best = Some((actions, eval));
        }
        // odometer, last state fastest
        let mut s = n;
        loop {
            if s == 0 {
                let (actions, eval) = best.expect("at least one policy");
                let values =
                    ValueVector { values: eval.worst_per_state(), residual: 0.0, iterations: visited, converged: true };
                return Ok(SolveResult {
                    values,
                    policy: StationaryPolicy::deterministic(&actions),
                    mode: Mode::Robust,
                    objective: objective.clone(),
                    evaluation_sweeps: Vec::new(),
                });
            }
            s -= 1;
            digits[s] += 1;
            if digits[s] < model.choices(s).len() {
                break;
            }
            digits[s] = 0;
        }
    }
}
