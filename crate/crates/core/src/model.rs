//! Immutable model representation for point, interval, L1 and
//! multi-environment MDPs, plus induced Markov chains and stationary policies.
//!
//! States and actions carry string names externally and dense indices
//! internally. Index order is declaration order and every downstream
//! tie-break uses it.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::uncertainty::{RowSet, UncertainRow, CONSTRUCTION_TOL};

/// Tolerance for stochasticity of objects derived from a model.
pub const DERIVED_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Mdp,
    Imdp,
    L1,
    Memdp,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Mdp => "mdp",
            ModelKind::Imdp => "imdp",
            ModelKind::L1 => "l1",
            ModelKind::Memdp => "memdp",
        }
    }

    fn row_variant(self) -> &'static str {
        match self {
            ModelKind::Mdp | ModelKind::Memdp => "point",
            ModelKind::Imdp => "interval",
            ModelKind::L1 => "l1",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One enabled action of a state: its reward and its transition row.
///
/// `rows` holds exactly one row, except for multi-environment models where
/// it holds one point row per environment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Choice {
    pub action: usize,
    pub reward: f64,
    pub rows: Vec<UncertainRow>,
}

impl Choice {
    pub fn new(action: usize, reward: f64, row: UncertainRow) -> Self {
        Self { action, reward, rows: vec![row] }
    }

    /// The row of the first (for single-row kinds, the only) environment.
    pub fn row(&self) -> &UncertainRow {
        &self.rows[0]
    }
}

/// A single violated model invariant.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub rule: String,
    pub state: Option<String>,
    pub action: Option<String>,
    pub detail: String,
}

impl Diagnostic {
    pub fn new(rule: impl Into<String>, detail: impl Into<String>) -> Self {
        Self { rule: rule.into(), state: None, action: None, detail: detail.into() }
    }

    pub fn at(mut self, state: impl Into<String>, action: Option<String>) -> Self {
        self.state = Some(state.into());
        self.action = action;
        self
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.state, &self.action) {
            (Some(s), Some(a)) => write!(f, "{} at ({s},{a}): {}", self.rule, self.detail),
            (Some(s), None) => write!(f, "{} at {s}: {}", self.rule, self.detail),
            _ => write!(f, "{}: {}", self.rule, self.detail),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Model {
    kind: ModelKind,
    states: Vec<String>,
    actions: Vec<String>,
    initial: usize,
    choices: Vec<Vec<Choice>>,
    environments: usize,
}

impl Model {
    /// Assemble a model without validating it. Choices are sorted by action
    /// index; run [`validate`] (or use [`Model::checked`]) before solving.
    pub fn new(
        kind: ModelKind,
        states: Vec<String>,
        actions: Vec<String>,
        initial: usize,
        mut choices: Vec<Vec<Choice>>,
    ) -> Self {
        for list in &mut choices {
            list.sort_by_key(|c| c.action);
        }
        let environments = choices.iter().flatten().map(|c| c.rows.len()).max().unwrap_or(1);
        Self { kind, states, actions, initial, choices, environments }
    }

    /// Assemble and validate.
    pub fn checked(
        kind: ModelKind,
        states: Vec<String>,
        actions: Vec<String>,
        initial: usize,
        choices: Vec<Vec<Choice>>,
    ) -> Result<Self> {
        Self::new(kind, states, actions, initial, choices).into_valid()
    }

    pub fn into_valid(self) -> Result<Self> {
        let diagnostics = validate(&self);
        if diagnostics.is_empty() {
            Ok(self)
        } else {
            Err(Error::Invalid(diagnostics))
        }
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn num_actions(&self) -> usize {
        self.actions.len()
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn state_names(&self) -> &[String] {
        &self.states
    }

    pub fn action_names(&self) -> &[String] {
        &self.actions
    }

    pub fn state_name(&self, s: usize) -> &str {
        &self.states[s]
    }

    pub fn action_name(&self, a: usize) -> &str {
        &self.actions[a]
    }

    pub fn state_index(&self, name: &str) -> Result<usize> {
        self.states.iter().position(|s| s == name).ok_or_else(|| Error::UnknownState(name.to_string()))
    }

    pub fn action_index(&self, name: &str) -> Result<usize> {
        self.actions.iter().position(|a| a == name).ok_or_else(|| Error::UnknownAction(name.to_string()))
    }

    /// Enabled choices of `s`, sorted by action index.
    pub fn choices(&self, s: usize) -> &[Choice] {
        &self.choices[s]
    }

    pub fn all_choices(&self) -> &[Vec<Choice>] {
        &self.choices
    }

    pub fn choice(&self, s: usize, action: usize) -> Option<&Choice> {
        self.choices[s].iter().find(|c| c.action == action)
    }

    /// Number of environments; 1 for every kind except `memdp`.
    pub fn num_environments(&self) -> usize {
        if self.kind == ModelKind::Memdp {
            self.environments
        } else {
            1
        }
    }

    /// Environment `env` of a multi-environment model as a plain MDP.
    pub fn environment(&self, env: usize) -> Result<Model> {
        if self.kind != ModelKind::Memdp {
            return Err(Error::UnsupportedKind { expected: "memdp", got: self.kind });
        }
        if env >= self.environments {
            return Err(Error::InvalidConfig(format!(
                "environment {env} out of range ({} environments)",
                self.environments
            )));
        }
        let choices = self
            .choices
            .iter()
            .map(|list| list.iter().map(|c| Choice::new(c.action, c.reward, c.rows[env].clone())).collect())
            .collect();
        Ok(Model::new(ModelKind::Mdp, self.states.clone(), self.actions.clone(), self.initial, choices))
    }

    /// Same model with every row replaced; used to swap uncertainty sets
    /// while keeping states, actions and rewards.
    pub fn with_rows(&self, kind: ModelKind, mut row: impl FnMut(usize, &Choice) -> UncertainRow) -> Model {
        let choices = self
            .choices
            .iter()
            .enumerate()
            .map(|(s, list)| list.iter().map(|c| Choice::new(c.action, c.reward, row(s, c))).collect())
            .collect();
        Model::new(kind, self.states.clone(), self.actions.clone(), self.initial, choices)
    }

    /// Resolve a comma-free list of state names to indices.
    pub fn state_set<S: AsRef<str>>(&self, names: &[S]) -> Result<Vec<usize>> {
        names.iter().map(|n| self.state_index(n.as_ref())).collect()
    }
}

/// Check every model invariant and return one diagnostic per violation.
pub fn validate(model: &Model) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let n = model.states.len();
    if n == 0 {
        out.push(Diagnostic::new("no-states", "model declares no states"));
        return out;
    }
    let mut seen = HashMap::new();
    for (i, name) in model.states.iter().enumerate() {
        if let Some(prev) = seen.insert(name.as_str(), i) {
            out.push(Diagnostic::new("duplicate-state", format!("state `{name}` declared at {prev} and {i}")));
        }
    }
    let mut seen = HashMap::new();
    for (i, name) in model.actions.iter().enumerate() {
        if let Some(prev) = seen.insert(name.as_str(), i) {
            out.push(Diagnostic::new("duplicate-action", format!("action `{name}` declared at {prev} and {i}")));
        }
    }
    if model.initial >= n {
        out.push(Diagnostic::new("initial-out-of-range", format!("initial index {} with {n} states", model.initial)));
    }
    if model.choices.len() != n {
        out.push(Diagnostic::new("choice-table-size", format!("{} choice lists for {n} states", model.choices.len())));
        return out;
    }

    let expected_rows = if model.kind == ModelKind::Memdp { model.environments } else { 1 };
    for (s, list) in model.choices.iter().enumerate() {
        let sname = &model.states[s];
        if list.is_empty() {
            out.push(Diagnostic::new("deadlock", "state has no enabled action").at(sname, None));
        }
        for (k, c) in list.iter().enumerate() {
            if c.action >= model.actions.len() {
                out.push(
                    Diagnostic::new("unknown-action", format!("action index {} out of range", c.action))
                        .at(sname, None),
                );
                continue;
            }
            let aname = Some(model.actions[c.action].clone());
            let diag = |rule: &str, detail: String| Diagnostic::new(rule, detail).at(sname, aname.clone());
            if k > 0 && list[k - 1].action == c.action {
                out.push(diag("duplicate-choice", "action enabled twice".to_string()));
            }
            if !c.reward.is_finite() || c.reward < 0.0 {
                out.push(diag("negative-reward", format!("reward {} must be finite and >= 0", c.reward)));
            }
            if c.rows.len() != expected_rows {
                out.push(diag("environment-count", format!("{} rows, expected {expected_rows}", c.rows.len())));
                continue;
            }
            for (env, row) in c.rows.iter().enumerate() {
                if row.variant_name() != model.kind.row_variant() {
                    out.push(diag(
                        "row-kind-mismatch",
                        format!("{} row in a {} model", row.variant_name(), model.kind),
                    ));
                    continue;
                }
                if let Some(&bad) = row.support().iter().find(|&&t| t >= n) {
                    out.push(diag("successor-out-of-range", format!("successor index {bad}")));
                    continue;
                }
                for (rule, detail) in row.violations(CONSTRUCTION_TOL) {
                    let detail = if expected_rows > 1 { format!("environment {env}: {detail}") } else { detail };
                    out.push(diag(rule, detail));
                }
            }
            if model.kind == ModelKind::Memdp {
                let first = c.rows[0].support();
                if c.rows.iter().any(|r| r.support() != first) {
                    out.push(diag("environment-support-mismatch", "environments disagree on the support".to_string()));
                }
            }
        }
    }
    out
}

/// Enabled actions of `s` in ascending index order.
pub fn enabled_actions(model: &Model, s: usize) -> Result<Vec<usize>> {
    if s >= model.num_states() {
        return Err(Error::StateOutOfRange(s));
    }
    Ok(model.choices(s).iter().map(|c| c.action).collect())
}

/// A discrete-time Markov chain with state rewards.
#[derive(Debug, Clone, PartialEq)]
pub struct Dtmc {
    pub initial: usize,
    /// Sparse successor list per state.
    pub rows: Vec<Vec<(usize, f64)>>,
    pub rewards: Vec<f64>,
}

impl Dtmc {
    pub fn num_states(&self) -> usize {
        self.rows.len()
    }

    /// Dense transition matrix, mainly for tests.
    pub fn dense(&self) -> Vec<Vec<f64>> {
        let n = self.rows.len();
        self.rows
            .iter()
            .map(|row| {
                let mut dense = vec![0.0; n];
                for &(t, p) in row {
                    dense[t] += p;
                }
                dense
            })
            .collect()
    }

    pub fn violations(&self, tol: f64) -> Vec<String> {
        let mut out = Vec::new();
        for (s, row) in self.rows.iter().enumerate() {
            let sum: f64 = row.iter().map(|(_, p)| p).sum();
            if (sum - 1.0).abs() > tol {
                out.push(format!("row {s} sums to {sum}"));
            }
        }
        for (s, r) in self.rewards.iter().enumerate() {
            if !r.is_finite() || *r < 0.0 {
                out.push(format!("reward {r} at state {s}"));
            }
        }
        out
    }
}

/// Stationary policy: per state, a distribution over enabled actions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationaryPolicy {
    choice: Vec<Vec<(usize, f64)>>,
}

impl StationaryPolicy {
    pub fn deterministic(actions: &[usize]) -> Self {
        Self { choice: actions.iter().map(|&a| vec![(a, 1.0)]).collect() }
    }

    pub fn randomized(choice: Vec<Vec<(usize, f64)>>) -> Self {
        Self { choice }
    }

    /// Uniform distribution over the enabled actions of every state.
    pub fn uniform(model: &Model) -> Self {
        let choice = model
            .all_choices()
            .iter()
            .map(|list| {
                let w = 1.0 / list.len() as f64;
                list.iter().map(|c| (c.action, w)).collect()
            })
            .collect();
        Self { choice }
    }

    pub fn num_states(&self) -> usize {
        self.choice.len()
    }

    pub fn distribution(&self, s: usize) -> &[(usize, f64)] {
        &self.choice[s]
    }

    pub fn is_deterministic(&self) -> bool {
        self.choice.iter().all(|d| d.len() == 1 && d[0].1 == 1.0)
    }

    /// The chosen action at `s` if the policy is Dirac there.
    pub fn action(&self, s: usize) -> Option<usize> {
        match self.choice[s].as_slice() {
            [(a, p)] if *p == 1.0 => Some(*a),
            _ => None,
        }
    }

    /// Deterministic action vector, if the policy is deterministic everywhere.
    pub fn actions(&self) -> Option<Vec<usize>> {
        (0..self.choice.len()).map(|s| self.action(s)).collect()
    }

    /// Check the policy against a model: one distribution per state,
    /// supported on enabled actions, summing to one.
    pub fn check(&self, model: &Model) -> Result<()> {
        if self.choice.len() != model.num_states() {
            return Err(Error::DimensionMismatch { expected: model.num_states(), got: self.choice.len() });
        }
        for (s, dist) in self.choice.iter().enumerate() {
            if dist.is_empty() {
                return Err(Error::InvalidPolicy(format!("no action at state `{}`", model.state_name(s))));
            }
            for &(a, p) in dist {
                if model.choice(s, a).is_none() {
                    let name = model.action_names().get(a).map(String::as_str).unwrap_or("?");
                    return Err(Error::InvalidPolicy(format!(
                        "action `{name}` is not enabled at state `{}`",
                        model.state_name(s)
                    )));
                }
                if !(0.0..=1.0).contains(&p) {
                    return Err(Error::InvalidPolicy(format!("probability {p} at state `{}`", model.state_name(s))));
                }
            }
            let sum: f64 = dist.iter().map(|(_, p)| p).sum();
            if (sum - 1.0).abs() > CONSTRUCTION_TOL {
                return Err(Error::InvalidPolicy(format!(
                    "distribution at state `{}` sums to {sum}",
                    model.state_name(s)
                )));
            }
        }
        Ok(())
    }
}

/// Markov chain induced by a stationary policy on a point MDP.
pub fn induce_dtmc(model: &Model, policy: &StationaryPolicy) -> Result<Dtmc> {
    if model.kind() != ModelKind::Mdp {
        return Err(Error::UnsupportedKind { expected: "mdp", got: model.kind() });
    }
    policy.check(model)?;
    let mut rows = Vec::with_capacity(model.num_states());
    let mut rewards = Vec::with_capacity(model.num_states());
    for s in 0..model.num_states() {
        let dist = policy.distribution(s);
        let mut reward = 0.0;
        let row = if let [(a, _)] = dist {
            // Dirac: copy the action's row verbatim
            let c = model.choice(s, *a).expect("checked");
            reward = c.reward;
            point_entries(c.row()).collect()
        } else {
            let mut acc: Vec<(usize, f64)> = Vec::new();
            for &(a, w) in dist {
                let c = model.choice(s, a).expect("checked");
                reward += w * c.reward;
                for (t, p) in point_entries(c.row()) {
                    match acc.iter_mut().find(|(u, _)| *u == t) {
                        Some(entry) => entry.1 += w * p,
                        None => acc.push((t, w * p)),
                    }
                }
            }
            acc.sort_by_key(|&(t, _)| t);
            acc
        };
        rows.push(row);
        rewards.push(reward);
    }
    Ok(Dtmc { initial: model.initial(), rows, rewards })
}

fn point_entries(row: &UncertainRow) -> impl Iterator<Item = (usize, f64)> + '_ {
    let probs = match row.set() {
        RowSet::Point { probs } => probs,
        _ => unreachable!("point model holds point rows"),
    };
    row.support().iter().copied().zip(probs.iter().copied())
}

/// Convenience builder addressing states and actions by name.
#[derive(Debug, Clone)]
pub struct ModelBuilder {
    kind: ModelKind,
    states: Vec<String>,
    actions: Vec<String>,
    initial: Option<String>,
    entries: Vec<(String, String, f64, Vec<RowSpec>)>,
}

#[derive(Debug, Clone)]
enum RowSpec {
    Point(Vec<(String, f64)>),
    Interval(Vec<(String, f64, f64)>),
    L1(Vec<(String, f64)>, f64),
}

impl ModelBuilder {
    pub fn new(kind: ModelKind) -> Self {
        Self { kind, states: Vec::new(), actions: Vec::new(), initial: None, entries: Vec::new() }
    }

    pub fn states<I, S>(mut self, names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.states = names.into_iter().map(Into::into).collect();
        self
    }

    pub fn actions<I, S>(mut self, names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.actions = names.into_iter().map(Into::into).collect();
        self
    }

    pub fn initial(mut self, name: &str) -> Self {
        self.initial = Some(name.to_string());
        self
    }

    fn entry(&mut self, s: &str, a: &str, reward: f64) -> &mut Vec<RowSpec> {
        let pos = match self.entries.iter().position(|(es, ea, _, _)| es == s && ea == a) {
            Some(pos) => pos,
            None => {
                self.entries.push((s.to_string(), a.to_string(), reward, Vec::new()));
                self.entries.len() - 1
            }
        };
        self.entries[pos].2 = reward;
        &mut self.entries[pos].3
    }

    /// Point row; for multi-environment models, call once per environment.
    pub fn point(mut self, s: &str, a: &str, reward: f64, succ: &[(&str, f64)]) -> Self {
        let spec = RowSpec::Point(succ.iter().map(|(t, p)| (t.to_string(), *p)).collect());
        self.entry(s, a, reward).push(spec);
        self
    }

    pub fn interval(mut self, s: &str, a: &str, reward: f64, succ: &[(&str, f64, f64)]) -> Self {
        let spec = RowSpec::Interval(succ.iter().map(|(t, l, u)| (t.to_string(), *l, *u)).collect());
        self.entry(s, a, reward).push(spec);
        self
    }

    pub fn l1(mut self, s: &str, a: &str, reward: f64, succ: &[(&str, f64)], radius: f64) -> Self {
        let spec = RowSpec::L1(succ.iter().map(|(t, p)| (t.to_string(), *p)).collect(), radius);
        self.entry(s, a, reward).push(spec);
        self
    }

    /// Resolve names and validate.
    pub fn build(self) -> Result<Model> {
        self.build_unchecked()?.into_valid()
    }

    pub fn build_unchecked(self) -> Result<Model> {
        let idx = |names: &[String], n: &str, state: bool| {
            names.iter().position(|x| x == n).ok_or_else(|| {
                if state {
                    Error::UnknownState(n.to_string())
                } else {
                    Error::UnknownAction(n.to_string())
                }
            })
        };
        let initial = match &self.initial {
            Some(name) => idx(&self.states, name, true)?,
            None => 0,
        };
        let mut choices: Vec<Vec<Choice>> = vec![Vec::new(); self.states.len()];
        for (s, a, reward, specs) in &self.entries {
            let si = idx(&self.states, s, true)?;
            let ai = idx(&self.actions, a, false)?;
            let mut rows = Vec::with_capacity(specs.len());
            for spec in specs {
                let row = match spec {
                    RowSpec::Point(succ) => {
                        let support = succ.iter().map(|(t, _)| idx(&self.states, t, true)).collect::<Result<_>>()?;
                        UncertainRow::point(support, succ.iter().map(|(_, p)| *p).collect())
                    }
                    RowSpec::Interval(succ) => {
                        let support = succ.iter().map(|(t, ..)| idx(&self.states, t, true)).collect::<Result<_>>()?;
                        UncertainRow::interval(
                            support,
                            succ.iter().map(|(_, l, _)| *l).collect(),
                            succ.iter().map(|(.., u)| *u).collect(),
                        )
                    }
                    RowSpec::L1(succ, radius) => {
                        let support = succ.iter().map(|(t, _)| idx(&self.states, t, true)).collect::<Result<_>>()?;
                        UncertainRow::l1(support, succ.iter().map(|(_, p)| *p).collect(), *radius)
                    }
                };
                rows.push(row);
            }
            choices[si].push(Choice { action: ai, reward: *reward, rows });
        }
        Ok(Model::new(self.kind, self.states, self.actions, initial, choices))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_state_mdp() -> ModelBuilder {
        ModelBuilder::new(ModelKind::Mdp)
            .states(["s0", "s1"])
            .actions(["a"])
            .point("s0", "a", 1.0, &[("s1", 1.0)])
            .point("s1", "a", 0.0, &[("s1", 1.0)])
    }

    #[test]
    fn well_formed_model_has_no_diagnostics() {
        let model = two_state_mdp().build_unchecked().unwrap();
        assert!(validate(&model).is_empty());
    }

    #[test]
    fn substochastic_row_is_reported() {
        let model = ModelBuilder::new(ModelKind::Mdp)
            .states(["s0", "s1"])
            .actions(["a"])
            .point("s0", "a", 1.0, &[("s0", 0.4), ("s1", 0.5)])
            .point("s1", "a", 0.0, &[("s1", 1.0)])
            .build_unchecked()
            .unwrap();
        let d = validate(&model);
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].to_string().split(':').next().unwrap(), "row-not-stochastic at (s0,a)");
    }

    #[test]
    fn zero_lower_with_nonzero_upper_is_reported() {
        let model = ModelBuilder::new(ModelKind::Imdp)
            .states(["s0", "s1"])
            .actions(["a"])
            .interval("s0", "a", 0.0, &[("s0", 0.0, 0.3), ("s1", 0.7, 1.0)])
            .interval("s1", "a", 0.0, &[("s1", 1.0, 1.0)])
            .build_unchecked()
            .unwrap();
        let d = validate(&model);
        assert_eq!(d.len(), 1, "{d:?}");
        assert_eq!(d[0].rule, "interval-zero-lower");
        assert_eq!(d[0].state.as_deref(), Some("s0"));
    }

    #[test]
    fn deadlocks_and_negative_rewards_are_reported() {
        let model = ModelBuilder::new(ModelKind::Mdp)
            .states(["s0", "s1"])
            .actions(["a"])
            .point("s0", "a", -1.0, &[("s1", 1.0)])
            .build_unchecked()
            .unwrap();
        let rules: Vec<_> = validate(&model).into_iter().map(|d| d.rule).collect();
        assert_eq!(rules, vec!["negative-reward", "deadlock"]);
    }

    #[test]
    fn memdp_support_mismatch_is_reported() {
        let model = ModelBuilder::new(ModelKind::Memdp)
            .states(["s", "g", "x"])
            .actions(["a"])
            .point("s", "a", 0.0, &[("g", 1.0)])
            .point("s", "a", 0.0, &[("x", 1.0)])
            .point("g", "a", 0.0, &[("g", 1.0)])
            .point("g", "a", 0.0, &[("g", 1.0)])
            .point("x", "a", 0.0, &[("x", 1.0)])
            .point("x", "a", 0.0, &[("x", 1.0)])
            .build_unchecked()
            .unwrap();
        let rules: Vec<_> = validate(&model).into_iter().map(|d| d.rule).collect();
        assert_eq!(rules, vec!["environment-support-mismatch"]);
    }

    #[test]
    fn validate_is_idempotent() {
        let model = ModelBuilder::new(ModelKind::Mdp)
            .states(["s0"])
            .actions(["a"])
            .point("s0", "a", 0.0, &[("s0", 0.5)])
            .build_unchecked()
            .unwrap();
        assert_eq!(validate(&model), validate(&model));
    }

    #[test]
    fn enabled_actions_are_sorted() {
        let model = ModelBuilder::new(ModelKind::Mdp)
            .states(["s0"])
            .actions(["a", "b"])
            .point("s0", "b", 0.0, &[("s0", 1.0)])
            .point("s0", "a", 0.0, &[("s0", 1.0)])
            .build()
            .unwrap();
        assert_eq!(enabled_actions(&model, 0).unwrap(), vec![0, 1]);
        assert!(matches!(enabled_actions(&model, 3), Err(Error::StateOutOfRange(3))));
    }

    #[test]
    fn dirac_policy_copies_rows() {
        let model = two_state_mdp().build().unwrap();
        let dtmc = induce_dtmc(&model, &StationaryPolicy::deterministic(&[0, 0])).unwrap();
        assert_eq!(dtmc.rows, vec![vec![(1, 1.0)], vec![(1, 1.0)]]);
        assert_eq!(dtmc.rewards, vec![1.0, 0.0]);
    }

    #[test]
    fn mixed_policy_mixes_rows_and_rewards() {
        let model = ModelBuilder::new(ModelKind::Mdp)
            .states(["s", "g", "x"])
            .actions(["a", "b"])
            .point("s", "a", 2.0, &[("g", 1.0)])
            .point("s", "b", 0.0, &[("x", 1.0)])
            .point("g", "a", 0.0, &[("g", 1.0)])
            .point("x", "a", 0.0, &[("x", 1.0)])
            .build()
            .unwrap();
        let policy = StationaryPolicy::randomized(vec![vec![(0, 0.5), (1, 0.5)], vec![(0, 1.0)], vec![(0, 1.0)]]);
        let dtmc = induce_dtmc(&model, &policy).unwrap();
        assert_eq!(dtmc.rows[0], vec![(1, 0.5), (2, 0.5)]);
        assert_eq!(dtmc.rewards[0], 1.0);
        assert!(dtmc.violations(DERIVED_TOL).is_empty());
    }

    #[test]
    fn induce_rejects_interval_models() {
        let model = ModelBuilder::new(ModelKind::Imdp)
            .states(["s"])
            .actions(["a"])
            .interval("s", "a", 0.0, &[("s", 1.0, 1.0)])
            .build()
            .unwrap();
        assert!(matches!(
            induce_dtmc(&model, &StationaryPolicy::deterministic(&[0])),
            Err(Error::UnsupportedKind { .. })
        ));
    }

    #[test]
    fn policy_with_disabled_action_is_rejected() {
        let model = two_state_mdp().actions(["a", "b"]).build().unwrap();
        assert!(StationaryPolicy::deterministic(&[1, 0]).check(&model).is_err());
    }
}
