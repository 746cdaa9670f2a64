#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use rmdp::{Choice, Model, ModelKind, RowSet, UncertainRow};

/// Random distribution over `m` entries, each at least `floor`.
pub fn center(rng: &mut ChaCha8Rng, m: usize, floor: f64) -> Vec<f64> {
    let w: Vec<f64> = (0..m).map(|_| rng.gen_range(0.05..1.0)).collect();
    let total: f64 = w.iter().sum();
    let spare = 1.0 - floor * m as f64;
    let mut p: Vec<f64> = w.iter().map(|x| floor + spare * x / total).collect();
    let drift: f64 = 1.0 - p.iter().sum::<f64>();
    p[0] += drift;
    p
}

/// Feasible interval bounds around a random center, lower bounds at least 0.01.
pub fn interval_bounds(rng: &mut ChaCha8Rng, m: usize) -> (Vec<f64>, Vec<f64>) {
    let p = center(rng, m, 0.02);
    let lowers = p.iter().map(|&x| (x - rng.gen_range(0.0..0.4)).max(0.01)).collect();
    let uppers = p.iter().map(|&x| (x + rng.gen_range(0.0..0.4)).min(1.0)).collect();
    (lowers, uppers)
}

pub fn values(rng: &mut ChaCha8Rng, m: usize) -> Vec<f64> {
    (0..m).map(|_| rng.gen_range(0.0..1.0)).collect()
}

fn random_support(rng: &mut ChaCha8Rng, n: usize, max: usize) -> Vec<usize> {
    let mut all: Vec<usize> = (0..n).collect();
    all.shuffle(rng);
    let m = rng.gen_range(1..=max.min(n));
    let mut support = all[..m].to_vec();
    support.sort_unstable();
    support
}

/// Random model of the given kind. With `absorbing_last` the last state
/// has a single self loop with reward zero.
pub fn random_model(
    rng: &mut ChaCha8Rng,
    kind: ModelKind,
    states: usize,
    actions: usize,
    max_succ: usize,
    absorbing_last: bool,
) -> Model {
    let mut choices = Vec::with_capacity(states);
    for s in 0..states {
        if absorbing_last && s + 1 == states {
            let row = match kind {
                ModelKind::Imdp => UncertainRow::interval(vec![s], vec![1.0], vec![1.0]),
                ModelKind::L1 => UncertainRow::l1(vec![s], vec![1.0], 0.0),
                _ => UncertainRow::dirac(s),
            };
            choices.push(vec![Choice::new(0, 0.0, row)]);
            continue;
        }
        let k = rng.gen_range(1..=actions);
        let list = (0..k)
            .map(|a| {
                let support = random_support(rng, states, max_succ);
                let m = support.len();
                let row = match kind {
                    ModelKind::Imdp => {
                        let (l, u) = interval_bounds(rng, m);
                        UncertainRow::interval(support, l, u)
                    }
                    ModelKind::L1 => {
                        let c = center(rng, m, 0.02);
                        let min = c.iter().copied().fold(1.0, f64::min);
                        let d = rng.gen_range(0.0..2.0 * min) * 0.999;
                        UncertainRow::l1(support, c, d)
                    }
                    _ => UncertainRow::point(support, center(rng, m, 0.01)),
                };
                Choice::new(a, rng.gen_range(0.0..1.0), row)
            })
            .collect();
        choices.push(list);
    }
    let names = (0..states).map(|i| format!("s{i}")).collect();
    let acts = (0..actions).map(|i| format!("a{i}")).collect();
    Model::checked(kind, names, acts, 0, choices).expect("random model is valid")
}

/// A random point of an interval polytope.
pub fn interval_member(rng: &mut ChaCha8Rng, lowers: &[f64], uppers: &[f64]) -> Vec<f64> {
    let mut p = lowers.to_vec();
    let mut budget = 1.0 - lowers.iter().sum::<f64>();
    let mut order: Vec<usize> = (0..p.len()).collect();
    order.shuffle(rng);
    for &i in &order {
        let add = rng.gen_range(0.0..=1.0) * (uppers[i] - lowers[i]).min(budget);
        p[i] += add;
        budget -= add;
    }
    for &i in &order {
        let add = (uppers[i] - p[i]).min(budget).max(0.0);
        p[i] += add;
        budget -= add;
    }
    p
}

/// A random point of an L1 ball intersected with the simplex.
pub fn l1_member(rng: &mut ChaCha8Rng, center_row: &[f64], radius: f64) -> Vec<f64> {
    let q = center(rng, center_row.len(), 0.0);
    let dist: f64 = q.iter().zip(center_row).map(|(a, b)| (a - b).abs()).sum();
    let t = if dist == 0.0 { 0.0 } else { (radius / dist).min(1.0) * rng.gen_range(0.0..=1.0) };
    center_row.iter().zip(&q).map(|(c, x)| c + t * (x - c)).collect()
}

/// Point model obtained by fixing one member of every uncertainty set.
pub fn sample_member(rng: &mut ChaCha8Rng, model: &Model) -> Model {
    model.with_rows(ModelKind::Mdp, |_, c| {
        let row = c.row();
        let probs = match row.set() {
            RowSet::Point { probs } => probs.clone(),
            RowSet::Interval { lowers, uppers } => interval_member(rng, lowers, uppers),
            RowSet::L1 { center, radius } => l1_member(rng, center, *radius),
        };
        UncertainRow::point(row.support().to_vec(), probs)
    })
}
