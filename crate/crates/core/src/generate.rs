//! Seeded random model generator.
//!
//! All probabilities are integer multiples of 1e-6, so generated documents
//! are short and reproduce byte for byte from the same parameters.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{Choice, Model, ModelKind};
use crate::uncertainty::UncertainRow;

const UNIT: u64 = 1_000_000;
const MIN_CENTER: u64 = 10_000;
/// Successor cap per row.
pub const MAX_SUCCESSORS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneratorConfig {
    pub states: usize,
    pub actions: usize,
    pub kind: ModelKind,
    /// Probability that a state other than `s + 1` is a successor.
    pub density: f64,
    pub seed: u64,
    /// Maximum interval width, or L1 radius.
    pub width: f64,
}

impl GeneratorConfig {
    pub fn check(&self) -> Result<()> {
        if self.states < 2 {
            return Err(Error::InvalidConfig("at least two states are needed".into()));
        }
        if self.actions < 1 {
            return Err(Error::InvalidConfig("at least one action is needed".into()));
        }
        if !(self.density > 0.0 && self.density <= 1.0) {
            return Err(Error::InvalidConfig(format!("density {} is not in (0, 1]", self.density)));
        }
        if !(0.0..=1.0).contains(&self.width) {
            return Err(Error::InvalidConfig(format!("width {} is not in [0, 1]", self.width)));
        }
        if self.kind == ModelKind::Memdp {
            return Err(Error::InvalidConfig("the generator does not produce memdp models".into()));
        }
        Ok(())
    }
}

fn micro(units: u64) -> f64 {
    units as f64 / UNIT as f64
}

/// Split `UNIT` among `m` successors with every share at least 0.01.
fn centers(rng: &mut ChaCha8Rng, m: usize) -> Vec<u64> {
    let spare = UNIT - MIN_CENTER * m as u64;
    let weights: Vec<f64> = (0..m).map(|_| rng.gen_range(0.05..1.0)).collect();
    let total: f64 = weights.iter().sum();
    let mut shares: Vec<u64> = weights.iter().map(|w| MIN_CENTER + (spare as f64 * w / total) as u64).collect();
    let assigned: u64 = shares.iter().sum();
    shares[0] += UNIT - assigned;
    shares
}

/// Generate a model. State `s{n-1}` is absorbing with a single zero-reward
/// self loop; every other state enables all actions, each with `s + 1`
/// among its successors, so that the last state is reachable from anywhere.
pub fn generate(cfg: &GeneratorConfig) -> Result<Model> {
    cfg.check()?;
    let n = cfg.states;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let width = (cfg.width * UNIT as f64).round() as u64;
    let mut choices = Vec::with_capacity(n);
    for s in 0..n - 1 {
        let mut list = Vec::with_capacity(cfg.actions);
        for a in 0..cfg.actions {
            let mut support = vec![s + 1];
            for t in 0..n {
                if t != s + 1 && rng.gen_bool(cfg.density) && support.len() < MAX_SUCCESSORS {
                    support.push(t);
                }
            }
            support.sort_unstable();
            let shares = centers(&mut rng, support.len());
            let row = match cfg.kind {
                ModelKind::Imdp => {
                    let mut lowers = Vec::with_capacity(shares.len());
                    let mut uppers = Vec::with_capacity(shares.len());
                    for &p in &shares {
                        let below = (width as f64 * rng.gen_range(0.0..=0.5)) as u64;
                        let above = (width as f64 * rng.gen_range(0.0..=0.5)) as u64;
                        lowers.push(micro(p.saturating_sub(below).max(MIN_CENTER)));
                        uppers.push(micro((p + above).min(UNIT)));
                    }
                    UncertainRow::interval(support, lowers, uppers)
                }
                ModelKind::L1 => {
                    let smallest = *shares.iter().min().expect("nonempty row");
                    let radius = width.min(2 * smallest - 1);
                    UncertainRow::l1(support, shares.iter().map(|&p| micro(p)).collect(), micro(radius))
                }
                _ => UncertainRow::point(support, shares.iter().map(|&p| micro(p)).collect()),
            };
            let reward = rng.gen_range(0..=1000) as f64 / 1000.0;
            list.push(Choice::new(a, reward, row));
        }
        choices.push(list);
    }
    let last = UncertainRow::dirac(n - 1);
    let last = match cfg.kind {
        ModelKind::Imdp => UncertainRow::interval(vec![n - 1], vec![1.0], vec![1.0]),
        ModelKind::L1 => UncertainRow::l1(vec![n - 1], vec![1.0], 0.0),
        _ => last,
    };
    choices.push(vec![Choice::new(0, 0.0, last)]);

    let states = (0..n).map(|i| format!("s{i}")).collect();
    let actions = (0..cfg.actions).map(|i| format!("a{i}")).collect();
    Model::checked(cfg.kind, states, actions, 0, choices)
}
