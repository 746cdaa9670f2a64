//! Robust Markov decision processes.
//!
//! Models are finite MDPs whose transition rows are uncertainty sets:
//! intervals, L1 balls around a nominal row, or a finite list of
//! environments. The solvers compute values against an adversarial
//! (or, in optimistic mode, cooperative) nature choosing a row from each
//! set, with reachability, reach-reward and discounted objectives.
//!
//! ```
//! use rmdp::{ModelBuilder, ModelKind, Mode, Objective, SolveOptions, solve_vi};
//!
//! let model = ModelBuilder::new(ModelKind::Imdp)
//!     .states(["s", "g"])
//!     .actions(["a"])
//!     .interval("s", "a", 1.0, &[("s", 0.3, 0.7), ("g", 0.3, 0.7)])
//!     .interval("g", "a", 0.0, &[("g", 1.0, 1.0)])
//!     .build()
//!     .unwrap();
//! let goal = Objective::ReachReward { targets: vec![1] };
//! let opts = SolveOptions { epsilon: 1e-10, ..SolveOptions::default() };
//! let robust = solve_vi(&model, &goal, Mode::Robust, &opts).unwrap();
//! assert!((robust.values.values[0] - 10.0 / 7.0).abs() < 1e-8);
//! ```

#![allow(clippy::needless_range_loop)]

pub mod document;
pub mod error;
pub mod generate;
pub mod graph;
pub mod learn;
pub mod model;
pub mod oracle;
pub mod solver;
pub mod uncertainty;

pub use document::{parse_model_str, parse_policy_str, ModelDocument, ResultDocument};
pub use error::{Error, Result};
pub use model::{Choice, Diagnostic, Dtmc, Model, ModelBuilder, ModelKind, StationaryPolicy};
pub use solver::{
    policy_iteration, solve_vi, value_iteration, Mode, Objective, SolveOptions, SolveResult, ValueVector,
};
pub use uncertainty::{Direction, RowSet, UncertainRow};
