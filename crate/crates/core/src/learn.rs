//! PAC learning of an interval MDP from samples of a hidden point MDP.
//!
//! Each state-action pair is sampled directly (no trajectories) and every
//! supported transition gets a Hoeffding confidence interval. The global
//! failure probability is split uniformly over all supported transitions,
//! so with probability at least `1 - delta` every true probability lies in
//! its interval.

use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Choice, Model, ModelKind};
use crate::solver::{solve_vi, Mode, Objective, SolveOptions, SolveResult};
use crate::uncertainty::{RowSet, UncertainRow};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PacConfig {
    pub delta: f64,
    pub n_per_sa: u64,
    pub eps_min: f64,
}

impl PacConfig {
    pub const DEFAULT_EPS_MIN: f64 = 1e-6;

    pub fn new(delta: f64, n_per_sa: u64) -> Result<Self> {
        Self::with_floor(delta, n_per_sa, Self::DEFAULT_EPS_MIN)
    }

    pub fn with_floor(delta: f64, n_per_sa: u64, eps_min: f64) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::InvalidConfig(format!("delta {delta} must lie in (0, 1)")));
        }
        if n_per_sa == 0 {
            return Err(Error::InvalidConfig("at least one sample per state-action pair".to_string()));
        }
        if !(eps_min > 0.0 && eps_min < 1.0) {
            return Err(Error::InvalidConfig(format!("lower-bound floor {eps_min} must lie in (0, 1)")));
        }
        Ok(Self { delta, n_per_sa, eps_min })
    }
}

/// Successor counts of one state-action pair, aligned with the truth row's
/// support.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowCounts {
    pub action: usize,
    pub total: u64,
    pub per_successor: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleCounts {
    pub seed: u64,
    /// `rows[s][k]` belongs to the `k`-th enabled choice of state `s`.
    pub rows: Vec<Vec<RowCounts>>,
}

fn point_probs(row: &UncertainRow) -> Result<&[f64]> {
    match row.set() {
        RowSet::Point { probs } => Ok(probs),
        _ => Err(Error::UnsupportedKind { expected: "mdp", got: ModelKind::Imdp }),
    }
}

fn require_point(model: &Model) -> Result<()> {
    if model.kind() != ModelKind::Mdp {
        return Err(Error::UnsupportedKind { expected: "mdp", got: model.kind() });
    }
    Ok(())
}

/// Draw `n_per_sa` successors from every row of `truth`. Each pair uses its
/// own generator stream derived from `seed` and the pair's position, so the
/// result depends only on `(truth, n_per_sa, seed)`.
pub fn sample_counts(truth: &Model, n_per_sa: u64, seed: u64) -> Result<SampleCounts> {
    require_point(truth)?;
    let mut stream = 0u64;
    let mut rows = Vec::with_capacity(truth.num_states());
    for s in 0..truth.num_states() {
        let mut per_state = Vec::with_capacity(truth.choices(s).len());
        for c in truth.choices(s) {
            let probs = point_probs(c.row())?;
            let dist =
                WeightedIndex::new(probs).map_err(|e| Error::InfeasibleRow(format!("cannot sample row: {e}")))?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(stream);
            stream += 1;
            let mut per_successor = vec![0u64; probs.len()];
            for _ in 0..n_per_sa {
                per_successor[dist.sample(&mut rng)] += 1;
            }
            per_state.push(RowCounts { action: c.action, total: n_per_sa, per_successor });
        }
        rows.push(per_state);
    }
    Ok(SampleCounts { seed, rows })
}

/// Half-width of a two-sided Hoeffding interval at confidence `1 - delta`.
pub fn hoeffding_radius(samples: u64, delta: f64) -> f64 {
    ((2.0 / delta).ln() / (2.0 * samples as f64)).sqrt()
}

/// `[max(p - c, floor), min(p + c, 1)]`, widened so that lower <= upper.
pub fn hoeffding_interval(estimate: f64, radius: f64, floor: f64) -> (f64, f64) {
    let lower = (estimate - radius).max(floor);
    let upper = (estimate + radius).min(1.0).max(lower);
    (lower, upper)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearnedModel {
    pub model: Model,
    /// Per-transition failure probability after the union bound.
    pub delta_prime: f64,
    pub transitions: usize,
}

/// Interval MDP whose intervals are Hoeffding confidence intervals around
/// the empirical frequencies. Support, rewards and names come from `truth`.
pub fn hoeffding_imdp(truth: &Model, counts: &SampleCounts, cfg: &PacConfig) -> Result<LearnedModel> {
    require_point(truth)?;
    if counts.rows.len() != truth.num_states() {
        return Err(Error::DimensionMismatch { expected: truth.num_states(), got: counts.rows.len() });
    }
    let transitions: usize = truth.all_choices().iter().flatten().map(|c| c.row().len()).sum();
    let delta_prime = cfg.delta / transitions as f64;

    let mut choices = Vec::with_capacity(truth.num_states());
    for s in 0..truth.num_states() {
        let list = truth.choices(s);
        let observed = &counts.rows[s];
        if observed.len() != list.len() {
            return Err(Error::DimensionMismatch { expected: list.len(), got: observed.len() });
        }
        let mut learned = Vec::with_capacity(list.len());
        for (c, rc) in list.iter().zip(observed) {
            let support = c.row().support();
            if rc.action != c.action || rc.per_successor.len() != support.len() {
                return Err(Error::InvalidConfig(format!(
                    "counts for state `{}` do not match the truth's support",
                    truth.state_name(s)
                )));
            }
            if rc.total == 0 || rc.per_successor.iter().sum::<u64>() != rc.total {
                return Err(Error::InvalidConfig(format!(
                    "inconsistent sample total at ({}, {})",
                    truth.state_name(s),
                    truth.action_name(c.action)
                )));
            }
            let radius = hoeffding_radius(rc.total, delta_prime);
            let (lowers, uppers) = rc
                .per_successor
                .iter()
                .map(|&k| hoeffding_interval(k as f64 / rc.total as f64, radius, cfg.eps_min))
                .unzip();
            learned.push(Choice::new(c.action, c.reward, UncertainRow::interval(support.to_vec(), lowers, uppers)));
        }
        choices.push(learned);
    }
    let model = Model::checked(
        ModelKind::Imdp,
        truth.state_names().to_vec(),
        truth.action_names().to_vec(),
        truth.initial(),
        choices,
    )?;
    Ok(LearnedModel { model, delta_prime, transitions })
}

/// Whether every true probability of `truth` lies inside the matching
/// interval of `learned`.
pub fn contains_truth(learned: &Model, truth: &Model) -> bool {
    truth.all_choices().iter().zip(learned.all_choices()).all(|(t_list, l_list)| {
        t_list.iter().zip(l_list).all(|(t, l)| {
            let (RowSet::Point { probs }, RowSet::Interval { lowers, uppers }) = (t.row().set(), l.row().set()) else {
                return false;
            };
            probs.iter().zip(lowers.iter().zip(uppers)).all(|(&p, (&lo, &hi))| lo <= p && p <= hi)
        })
    })
}

#[derive(Debug, Clone)]
pub struct PacOutcome {
    pub counts: SampleCounts,
    pub learned: LearnedModel,
    /// Robust solution of the learned model: a lower bound on the truth
    /// whenever the truth is contained.
    pub robust: SolveResult,
    /// Nominal solution of the hidden truth, for comparison.
    pub nominal: SolveResult,
}

pub fn pac_pipeline(
    truth: &Model,
    cfg: &PacConfig,
    objective: &Objective,
    seed: u64,
    opts: &SolveOptions,
) -> Result<PacOutcome> {
    let counts = sample_counts(truth, cfg.n_per_sa, seed)?;
    let learned = hoeffding_imdp(truth, &counts, cfg)?;
    let robust = solve_vi(&learned.model, objective, Mode::Robust, opts)?;
    let nominal = solve_vi(truth, objective, Mode::Nominal, opts)?;
    Ok(PacOutcome { counts, learned, robust, nominal })
}
