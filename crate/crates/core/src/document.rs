//! JSON documents: models, solve results and policies.
//!
//! A model document lists transitions flat, one entry per
//! `(from, action, to)` triple, with fields depending on the kind:
//!
//! ```json
//! {
//!   "kind": "imdp",
//!   "states": ["s", "g"],
//!   "initial": "s",
//!   "actions": ["a"],
//!   "transitions": [
//!     {"from": "s", "action": "a", "to": "s", "lower": 0.3, "upper": 0.7},
//!     {"from": "s", "action": "a", "to": "g", "lower": 0.3, "upper": 0.7},
//!     {"from": "g", "action": "a", "to": "g", "lower": 1.0, "upper": 1.0}
//!   ],
//!   "rewards": [{"state": "s", "action": "a", "value": 1.0}, {"state": "g", "action": "a", "value": 0.0}]
//! }
//! ```
//!
//! `mdp` and `l1` entries carry `p`; `l1` documents add a top-level
//! `deviations` list of `{state, action, d}`; `memdp` documents replace
//! `transitions` by `environments`, a list of `mdp`-style transition lists.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::model::{validate, Choice, Diagnostic, Model, ModelKind, StationaryPolicy};
use crate::solver::{Mode, Objective, SolveResult, ValueVector};
use crate::uncertainty::{RowSet, UncertainRow};

pub const TOOL_VERSION: &str = concat!("rmdp ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransitionEntry {
    pub from: String,
    pub action: String,
    pub to: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lower: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upper: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviationEntry {
    pub state: String,
    pub action: String,
    pub d: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RewardEntry {
    pub state: String,
    pub action: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDocument {
    pub kind: ModelKind,
    pub states: Vec<String>,
    pub initial: String,
    pub actions: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transitions: Option<Vec<TransitionEntry>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deviations: Option<Vec<DeviationEntry>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub environments: Option<Vec<Vec<TransitionEntry>>>,
    pub rewards: Vec<RewardEntry>,
}

/// Why a document could not be turned into a model.
#[derive(Debug, Clone, PartialEq)]
pub enum DocumentError {
    /// Not JSON, or JSON not shaped like a model document.
    Syntax { line: usize, column: usize, message: String },
    /// Well-formed document describing an invalid model.
    Invalid(Vec<Diagnostic>),
}

impl std::fmt::Display for DocumentError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DocumentError::Syntax { line, column, message } => {
                write!(f, "syntax error at line {line}, column {column}: {message}")
            }
            DocumentError::Invalid(diags) => {
                write!(f, "invalid model:")?;
                for d in diags {
                    write!(f, "\n  {d}")?;
                }
                Ok(())
            }
        }
    }
}

impl std::error::Error for DocumentError {}

impl From<serde_json::Error> for DocumentError {
    fn from(e: serde_json::Error) -> Self {
        DocumentError::Syntax { line: e.line(), column: e.column(), message: e.to_string() }
    }
}

impl From<DocumentError> for Error {
    fn from(e: DocumentError) -> Self {
        match e {
            DocumentError::Invalid(d) => Error::Invalid(d),
            other => Error::Document(other.to_string()),
        }
    }
}

impl ModelDocument {
    pub fn from_json(text: &str) -> std::result::Result<Self, DocumentError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("document serializes");
        out.push('\n');
        out
    }

    /// Resolve names, group transitions into rows and validate.
    pub fn to_model(&self) -> std::result::Result<Model, DocumentError> {
        let mut diags = Vec::new();
        let state_ix: HashMap<&str, usize> = self.states.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
        let action_ix: HashMap<&str, usize> = self.actions.iter().enumerate().map(|(i, a)| (a.as_str(), i)).collect();
        let initial = lookup(&mut diags, &state_ix, &self.initial, "initial".to_string(), "state");

        let (lists, list_names): (Vec<&Vec<TransitionEntry>>, Vec<String>) = match self.kind {
            ModelKind::Memdp => {
                if self.transitions.is_some() {
                    diags.push(Diagnostic::new("unexpected-field", "memdp documents use `environments`"));
                }
                match &self.environments {
                    Some(envs) if !envs.is_empty() => {
                        envs.iter().enumerate().map(|(i, e)| (e, format!("environments[{i}]"))).unzip()
                    }
                    _ => {
                        diags.push(Diagnostic::new("missing-field", "memdp documents need `environments`"));
                        (Vec::new(), Vec::new())
                    }
                }
            }
            _ => {
                if self.environments.is_some() {
                    diags.push(Diagnostic::new("unexpected-field", "`environments` is only valid for memdp"));
                }
                match &self.transitions {
                    Some(t) => (vec![t], vec!["transitions".to_string()]),
                    None => {
                        diags.push(Diagnostic::new("missing-field", "`transitions` is required"));
                        (Vec::new(), Vec::new())
                    }
                }
            }
        };
        if self.kind != ModelKind::L1 && self.deviations.is_some() {
            diags.push(Diagnostic::new("unexpected-field", "`deviations` is only valid for l1"));
        }

        // (state, action) -> per environment: successor -> entry values
        type Rows = Vec<Vec<(usize, f64, f64)>>;
        let mut pairs: Vec<(usize, usize)> = Vec::new();
        let mut broken: Vec<(usize, usize)> = Vec::new();
        let mut rows: HashMap<(usize, usize), Rows> = HashMap::new();
        let envs = lists.len();
        for (env, (list, list_name)) in lists.iter().zip(&list_names).enumerate() {
            for (i, t) in list.iter().enumerate() {
                let field = format!("{list_name}[{i}]");
                let from = lookup(&mut diags, &state_ix, &t.from, format!("{field}.from"), "state");
                let action = lookup(&mut diags, &action_ix, &t.action, format!("{field}.action"), "action");
                let to = lookup(&mut diags, &state_ix, &t.to, format!("{field}.to"), "state");
                let numbers = match self.kind {
                    ModelKind::Imdp => match (t.p, t.lower, t.upper) {
                        (None, Some(l), Some(u)) => Some((l, u)),
                        _ => None,
                    },
                    _ => match (t.p, t.lower, t.upper) {
                        (Some(p), None, None) => Some((p, p)),
                        _ => None,
                    },
                };
                let Some((a, b)) = numbers else {
                    let want = if self.kind == ModelKind::Imdp { "`lower` and `upper`" } else { "`p`" };
                    diags.push(Diagnostic::new(
                        "transition-fields",
                        format!("{field} of a {} document needs exactly {want}", self.kind),
                    ));
                    if let (Some(from), Some(action)) = (from, action) {
                        broken.push((from, action));
                    }
                    continue;
                };
                let (Some(from), Some(action), Some(to)) = (from, action, to) else { continue };
                let entry = rows.entry((from, action)).or_insert_with(|| {
                    pairs.push((from, action));
                    vec![Vec::new(); envs]
                });
                if entry[env].iter().any(|&(s, ..)| s == to) {
                    diags.push(
                        Diagnostic::new("duplicate-transition", format!("{field} repeats successor `{}`", t.to))
                            .at(&t.from, Some(t.action.clone())),
                    );
                    continue;
                }
                entry[env].push((to, a, b));
            }
        }

        let mut radii: HashMap<(usize, usize), f64> = HashMap::new();
        if let Some(devs) = &self.deviations {
            for (i, d) in devs.iter().enumerate() {
                let field = format!("deviations[{i}]");
                let s = lookup(&mut diags, &state_ix, &d.state, format!("{field}.state"), "state");
                let a = lookup(&mut diags, &action_ix, &d.action, format!("{field}.action"), "action");
                if let (Some(s), Some(a)) = (s, a) {
                    if radii.insert((s, a), d.d).is_some() {
                        diags.push(Diagnostic::new("duplicate-deviation", field).at(&d.state, Some(d.action.clone())));
                    }
                }
            }
        }

        let mut rewards: HashMap<(usize, usize), f64> = HashMap::new();
        for (i, r) in self.rewards.iter().enumerate() {
            let field = format!("rewards[{i}]");
            let s = lookup(&mut diags, &state_ix, &r.state, format!("{field}.state"), "state");
            let a = lookup(&mut diags, &action_ix, &r.action, format!("{field}.action"), "action");
            if let (Some(s), Some(a)) = (s, a) {
                if rewards.insert((s, a), r.value).is_some() {
                    diags.push(Diagnostic::new("duplicate-reward", field).at(&r.state, Some(r.action.clone())));
                } else if !rows.contains_key(&(s, a)) && !broken.contains(&(s, a)) {
                    diags
                        .push(Diagnostic::new("reward-without-transition", field).at(&r.state, Some(r.action.clone())));
                }
            }
        }
        for (&(s, a), _) in radii.iter().filter(|(k, _)| !rows.contains_key(k)) {
            diags.push(
                Diagnostic::new("deviation-without-transition", "deviation for a pair with no transitions")
                    .at(&self.states[s], Some(self.actions[a].clone())),
            );
        }

        let mut choices: Vec<Vec<Choice>> = vec![Vec::new(); self.states.len()];
        for &(s, a) in &pairs {
            let sname = &self.states[s];
            let aname = Some(self.actions[a].clone());
            let Some(&reward) = rewards.get(&(s, a)) else {
                diags.push(Diagnostic::new("transition-without-reward", "no reward entry").at(sname, aname));
                continue;
            };
            let per_env = rows.remove(&(s, a)).expect("pair recorded");
            let mut built = Vec::with_capacity(envs);
            for (env, mut entries) in per_env.into_iter().enumerate() {
                if entries.is_empty() {
                    diags.push(
                        Diagnostic::new("environment-pair-mismatch", format!("missing from environment {env}"))
                            .at(sname, aname.clone()),
                    );
                    continue;
                }
                entries.sort_by_key(|&(t, ..)| t);
                if self.kind == ModelKind::Imdp {
                    // both bounds zero: the transition does not exist
                    entries.retain(|&(_, l, u)| !(l == 0.0 && u == 0.0));
                }
                let support = entries.iter().map(|&(t, ..)| t).collect();
                let row = match self.kind {
                    ModelKind::Imdp => UncertainRow::interval(
                        support,
                        entries.iter().map(|e| e.1).collect(),
                        entries.iter().map(|e| e.2).collect(),
                    ),
                    ModelKind::L1 => {
                        let Some(&d) = radii.get(&(s, a)) else {
                            diags.push(
                                Diagnostic::new("missing-deviation", "no deviation entry").at(sname, aname.clone()),
                            );
                            continue;
                        };
                        UncertainRow::l1(support, entries.iter().map(|e| e.1).collect(), d)
                    }
                    ModelKind::Mdp | ModelKind::Memdp => {
                        UncertainRow::point(support, entries.iter().map(|e| e.1).collect())
                    }
                };
                built.push(row);
            }
            if built.len() == envs {
                choices[s].push(Choice { action: a, reward, rows: built });
            }
        }

        let model = Model::new(self.kind, self.states.clone(), self.actions.clone(), initial.unwrap_or(0), choices);
        let structural_errors = !diags.is_empty();
        for d in validate(&model) {
            // a dropped row already has its own diagnostic
            if structural_errors && d.rule == "deadlock" {
                continue;
            }
            diags.push(d);
        }
        if diags.is_empty() {
            Ok(model)
        } else {
            Err(DocumentError::Invalid(diags))
        }
    }

    /// Canonical document of a model: transitions ordered by state, action
    /// and successor index.
    pub fn from_model(model: &Model) -> Self {
        let states = model.state_names().to_vec();
        let actions = model.action_names().to_vec();
        let entries = |env: usize| {
            let mut out = Vec::new();
            for (s, list) in model.all_choices().iter().enumerate() {
                for c in list {
                    let row = &c.rows[env];
                    for (k, &t) in row.support().iter().enumerate() {
                        let (p, lower, upper) = match row.set() {
                            RowSet::Point { probs } => (Some(probs[k]), None, None),
                            RowSet::L1 { center, .. } => (Some(center[k]), None, None),
                            RowSet::Interval { lowers, uppers } => (None, Some(lowers[k]), Some(uppers[k])),
                        };
                        out.push(TransitionEntry {
                            from: states[s].clone(),
                            action: actions[c.action].clone(),
                            to: states[t].clone(),
                            p,
                            lower,
                            upper,
                        });
                    }
                }
            }
            out
        };
        let (transitions, environments) = if model.kind() == ModelKind::Memdp {
            (None, Some((0..model.num_environments()).map(entries).collect()))
        } else {
            (Some(entries(0)), None)
        };
        let deviations = (model.kind() == ModelKind::L1).then(|| {
            model
                .all_choices()
                .iter()
                .enumerate()
                .flat_map(|(s, list)| list.iter().map(move |c| (s, c)))
                .map(|(s, c)| {
                    let RowSet::L1 { radius, .. } = c.row().set() else { unreachable!("l1 model") };
                    DeviationEntry { state: states[s].clone(), action: actions[c.action].clone(), d: *radius }
                })
                .collect()
        });
        let rewards = model
            .all_choices()
            .iter()
            .enumerate()
            .flat_map(|(s, list)| list.iter().map(move |c| (s, c)))
            .map(|(s, c)| RewardEntry { state: states[s].clone(), action: actions[c.action].clone(), value: c.reward })
            .collect();
        ModelDocument {
            kind: model.kind(),
            states: states.clone(),
            initial: states[model.initial()].clone(),
            actions: actions.clone(),
            transitions,
            deviations,
            environments,
            rewards,
        }
    }
}

fn lookup(
    diags: &mut Vec<Diagnostic>,
    map: &HashMap<&str, usize>,
    name: &str,
    field: String,
    what: &str,
) -> Option<usize> {
    let found = map.get(name).copied();
    if found.is_none() {
        diags.push(Diagnostic::new(format!("unknown-{what}"), format!("`{name}` in {field}")));
    }
    found
}

/// Parse and validate a model from JSON text.
pub fn parse_model_str(text: &str) -> std::result::Result<Model, DocumentError> {
    ModelDocument::from_json(text)?.to_model()
}

/// SHA-256 of the canonical compact JSON of a model, hex encoded.
pub fn model_hash(model: &Model) -> String {
    let canonical = serde_json::to_string(&ModelDocument::from_model(model)).expect("document serializes");
    let digest = Sha256::digest(canonical.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Round to 12 significant digits.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.11e}").parse().expect("formatted float parses")
}

/// A number rounded to 12 significant digits, or the string `"inf"`.
pub fn number_or_inf(x: f64) -> Value {
    if x == f64::INFINITY {
        Value::String("inf".to_string())
    } else {
        serde_json::Number::from_f64(round_sig(x)).map_or(Value::Null, Value::Number)
    }
}

/// Objective with state names, e.g. `{"kind": "reach-reward", "targets": ["g"]}`.
pub fn objective_value(model: &Model, objective: &Objective) -> Value {
    let mut map = Map::new();
    map.insert("kind".to_string(), Value::String(objective.name().to_string()));
    match objective {
        Objective::ReachReward { targets } | Objective::Reachability { targets } => {
            let names = targets.iter().map(|&t| Value::String(model.state_name(t).to_string())).collect();
            map.insert("targets".to_string(), Value::Array(names));
        }
        Objective::Discounted { gamma } => {
            map.insert("gamma".to_string(), number_or_inf(*gamma));
        }
    }
    Value::Object(map)
}

/// Policy as `state -> action`, or `state -> {action: probability}` where
/// the policy randomizes.
pub fn policy_value(model: &Model, policy: &StationaryPolicy) -> Value {
    let mut map = Map::new();
    for s in 0..policy.num_states() {
        let entry = match policy.action(s) {
            Some(a) => Value::String(model.action_name(a).to_string()),
            None => Value::Object(
                policy
                    .distribution(s)
                    .iter()
                    .map(|&(a, p)| (model.action_name(a).to_string(), number_or_inf(p)))
                    .collect(),
            ),
        };
        map.insert(model.state_name(s).to_string(), entry);
    }
    Value::Object(map)
}

/// Read a policy document: an object mapping every state to an action name
/// or to an object of action probabilities.
pub fn parse_policy_str(model: &Model, text: &str) -> Result<StationaryPolicy> {
    let value: Value = serde_json::from_str(text)?;
    let Value::Object(map) = value else {
        return Err(Error::Document("policy must be a JSON object".to_string()));
    };
    let mut choice = vec![Vec::new(); model.num_states()];
    for (state, entry) in &map {
        let s = model.state_index(state)?;
        choice[s] = match entry {
            Value::String(a) => vec![(model.action_index(a)?, 1.0)],
            Value::Object(dist) => dist
                .iter()
                .map(|(a, p)| {
                    let p = p
                        .as_f64()
                        .ok_or_else(|| Error::Document(format!("probability of `{a}` at `{state}` is not a number")))?;
                    Ok((model.action_index(a)?, p))
                })
                .collect::<Result<_>>()?,
            _ => return Err(Error::Document(format!("policy entry for `{state}` must be a string or object"))),
        };
    }
    if let Some(s) = choice.iter().position(Vec::is_empty) {
        return Err(Error::InvalidPolicy(format!("no action given for state `{}`", model.state_name(s))));
    }
    let policy = StationaryPolicy::randomized(choice);
    policy.check(model)?;
    Ok(policy)
}

/// Output of a solve, ready for serialization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResultDocument {
    pub values: Map<String, Value>,
    pub policy: Value,
    pub iterations: usize,
    pub converged: bool,
    pub residual: Value,
    pub mode: Mode,
    pub method: String,
    pub objective: Value,
    pub tool_version: String,
    pub model_hash: String,
    #[serde(default, skip_serializing_if = "Map::is_empty")]
    pub metadata: Map<String, Value>,
}

impl ResultDocument {
    pub fn new(
        model: &Model,
        values: &ValueVector,
        policy: &StationaryPolicy,
        mode: Mode,
        method: &str,
        objective: &Objective,
    ) -> Self {
        let map =
            model.state_names().iter().zip(&values.values).map(|(name, &v)| (name.clone(), number_or_inf(v))).collect();
        Self {
            values: map,
            policy: policy_value(model, policy),
            iterations: values.iterations,
            converged: values.converged,
            residual: number_or_inf(values.residual),
            mode,
            method: method.to_string(),
            objective: objective_value(model, objective),
            tool_version: TOOL_VERSION.to_string(),
            model_hash: model_hash(model),
            metadata: Map::new(),
        }
    }

    pub fn from_solve(model: &Model, result: &SolveResult, method: &str) -> Self {
        let mut doc = Self::new(model, &result.values, &result.policy, result.mode, method, &result.objective);
        if !result.evaluation_sweeps.is_empty() {
            doc.metadata.insert(
                "evaluation_sweeps".to_string(),
                Value::Array(result.evaluation_sweeps.iter().map(|&n| Value::from(n)).collect()),
            );
        }
        doc
    }

    pub fn to_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("result serializes");
        out.push('\n');
        out
    }

    /// Value of a state, with `"inf"` read back as infinity.
    pub fn value(&self, state: &str) -> Option<f64> {
        match self.values.get(state)? {
            Value::String(s) if s == "inf" => Some(f64::INFINITY),
            v => v.as_f64(),
        }
    }
}
