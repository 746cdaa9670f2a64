#![allow(clippy::needless_range_loop)]

mod common;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rmdp::document::{parse_model_str, ModelDocument};
use rmdp::graph::{classify_reach_reward, prob0_max, StateClass};
use rmdp::learn::hoeffding_radius;
use rmdp::model::{induce_dtmc, validate};
use rmdp::oracle::{brute_force_robust_value, brute_inner_interval, grid_inner_l1, BruteForceGuards};
use rmdp::solver::{bellman_sweep, exact_policy_value, extract_policy, policy_evaluation};
use rmdp::uncertainty::{inner_interval, inner_l1};
use rmdp::{
    policy_iteration, solve_vi, value_iteration, Direction, Mode, Model, ModelKind, Objective, RowSet, SolveOptions,
    StationaryPolicy, UncertainRow,
};

use common::*;

const KINDS: [ModelKind; 3] = [ModelKind::Mdp, ModelKind::Imdp, ModelKind::L1];

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn opts(epsilon: f64) -> SolveOptions {
    SolveOptions { epsilon, max_iter: 1_000_000 }
}

fn last_state_goal(model: &Model) -> Objective {
    Objective::ReachReward { targets: vec![model.num_states() - 1] }
}

fn objectives(model: &Model) -> Vec<Objective> {
    let t = vec![model.num_states() - 1];
    vec![
        Objective::ReachReward { targets: t.clone() },
        Objective::Reachability { targets: t },
        Objective::Discounted { gamma: 0.9 },
    ]
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a.is_infinite() && a == b) || (a - b).abs() <= tol
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn interval_inner_matches_vertex_enumeration(seed in any::<u64>(), m in 1usize..=6, max in any::<bool>()) {
        let mut r = rng(seed);
        let (l, u) = interval_bounds(&mut r, m);
        let v = values(&mut r, m);
        let dir = if max { Direction::Max } else { Direction::Min };
        let fast = inner_interval(&l, &u, &v, dir).unwrap();
        let slow = brute_inner_interval(&l, &u, &v, dir).unwrap();
        prop_assert!((fast.value - slow.value).abs() <= 1e-9, "{} vs {}", fast.value, slow.value);
        prop_assert!((fast.probs.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        for i in 0..m {
            prop_assert!(l[i] <= fast.probs[i] && fast.probs[i] <= u[i]);
        }
    }

    #[test]
    fn l1_inner_is_grid_optimal(seed in any::<u64>(), m in 1usize..=4, max in any::<bool>()) {
        let mut r = rng(seed);
        let c = center(&mut r, m, 0.0);
        let d = r.gen_range(0.0..=2.0);
        let v = values(&mut r, m);
        let dir = if max { Direction::Max } else { Direction::Min };
        let fast = inner_l1(&c, d, &v, dir).unwrap();
        let grid = grid_inner_l1(&c, d, &v, dir, 500).unwrap();
        prop_assert!((fast.value - grid.value).abs() <= 8e-3, "{} vs {}", fast.value, grid.value);
        let dist: f64 = fast.probs.iter().zip(&c).map(|(p, q)| (p - q).abs()).sum();
        prop_assert!(dist <= d + 1e-12);
        prop_assert!((fast.probs.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        prop_assert!(fast.probs.iter().all(|&p| p >= 0.0));
    }

    #[test]
    fn direction_duality(seed in any::<u64>(), m in 1usize..=6) {
        let mut r = rng(seed);
        let support: Vec<usize> = (0..m).collect();
        let (l, u) = interval_bounds(&mut r, m);
        let c = center(&mut r, m, 0.0);
        let rows = [
            UncertainRow::point(support.clone(), c.clone()),
            UncertainRow::interval(support.clone(), l, u),
            UncertainRow::l1(support, c, r.gen_range(0.0..=2.0)),
        ];
        let v = values(&mut r, m);
        let neg: Vec<f64> = v.iter().map(|x| -x).collect();
        for row in &rows {
            let a = row.inner_extremum(&v, Direction::Min).unwrap().value;
            let b = row.inner_extremum(&neg, Direction::Max).unwrap().value;
            prop_assert!((a + b).abs() <= 1e-12, "{}: {a} vs {b}", row.variant_name());
        }
    }

    #[test]
    fn min_inner_is_monotone(seed in any::<u64>(), m in 1usize..=6) {
        let mut r = rng(seed);
        let support: Vec<usize> = (0..m).collect();
        let (l, u) = interval_bounds(&mut r, m);
        let c = center(&mut r, m, 0.0);
        let rows = [
            UncertainRow::interval(support.clone(), l, u),
            UncertainRow::l1(support, c, r.gen_range(0.0..=2.0)),
        ];
        let v = values(&mut r, m);
        let w: Vec<f64> = v.iter().map(|x| x + r.gen_range(0.0..0.5)).collect();
        for row in &rows {
            let a = row.inner_extremum(&v, Direction::Min).unwrap().value;
            let b = row.inner_extremum(&w, Direction::Min).unwrap().value;
            prop_assert!(b >= a - 1e-12);
        }
    }

    #[test]
    fn document_round_trip(seed in any::<u64>(), kind in 0usize..3, states in 2usize..6) {
        let mut r = rng(seed);
        let model = random_model(&mut r, KINDS[kind], states, 3, 4, true);
        let doc = ModelDocument::from_model(&model);
        let text = doc.to_json();
        let back = ModelDocument::from_json(&text).unwrap();
        prop_assert_eq!(&back, &doc);
        prop_assert_eq!(back.to_json(), text);
        prop_assert_eq!(parse_model_str(&doc.to_json()).unwrap(), model);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn static_equals_dynamic_on_small_models(seed in any::<u64>(), states in 2usize..=3, reach in any::<bool>()) {
        let mut r = rng(seed);
        let model = random_model(&mut r, ModelKind::Imdp, states, 2, 3, true);
        let objective = if reach { last_state_goal(&model) } else { Objective::Discounted { gamma: 0.8 } };
        let vi = value_iteration(&model, &objective, Mode::Robust, &opts(1e-11)).unwrap();
        let brute = brute_force_robust_value(&model, &objective, BruteForceGuards::default()).unwrap();
        prop_assert!(close(vi.values[model.initial()], brute, 1e-6), "{} vs {}", vi.values[model.initial()], brute);
    }

    #[test]
    fn degenerate_intervals_reproduce_point_values(seed in any::<u64>(), states in 2usize..8) {
        let mut r = rng(seed);
        let mdp = random_model(&mut r, ModelKind::Mdp, states, 2, 4, true);
        let imdp = mdp.with_rows(ModelKind::Imdp, |_, c| {
            let RowSet::Point { probs } = c.row().set() else { unreachable!() };
            UncertainRow::interval(c.row().support().to_vec(), probs.clone(), probs.clone())
        });
        let eps = 1e-8;
        for objective in objectives(&mdp) {
            let point = value_iteration(&mdp, &objective, Mode::Nominal, &opts(eps)).unwrap();
            for mode in [Mode::Robust, Mode::Optimistic] {
                let v = value_iteration(&imdp, &objective, mode, &opts(eps)).unwrap();
                for s in 0..states {
                    prop_assert!(close(v.values[s], point.values[s], 10.0 * eps), "{objective} {mode:?} s{s}");
                }
            }
        }
    }

    #[test]
    fn robust_nominal_optimistic_sandwich(seed in any::<u64>(), kind in 1usize..3, states in 2usize..8) {
        let mut r = rng(seed);
        let model = random_model(&mut r, KINDS[kind], states, 2, 4, true);
        let eps = 1e-8;
        for objective in objectives(&model) {
            let lo = value_iteration(&model, &objective, Mode::Robust, &opts(eps)).unwrap();
            let hi = value_iteration(&model, &objective, Mode::Optimistic, &opts(eps)).unwrap();
            for _ in 0..5 {
                let member = sample_member(&mut r, &model);
                let mid = value_iteration(&member, &objective, Mode::Nominal, &opts(eps)).unwrap();
                for s in 0..states {
                    let (a, b, c) = (lo.values[s], mid.values[s], hi.values[s]);
                    let slack = 2.0 * eps * b.abs().max(1.0) * 100.0;
                    prop_assert!(a <= b + slack || a == b, "{objective}: robust {a} > nominal {b}");
                    prop_assert!(b <= c + slack || b == c, "{objective}: nominal {b} > optimistic {c}");
                }
            }
        }
    }

    #[test]
    fn converged_values_are_fixed_points(seed in any::<u64>(), kind in 0usize..3, states in 2usize..10) {
        let mut r = rng(seed);
        let model = random_model(&mut r, KINDS[kind], states, 3, 4, true);
        let eps = 1e-7;
        for objective in objectives(&model) {
            for mode in [Mode::Robust, Mode::Optimistic] {
                let v = value_iteration(&model, &objective, mode, &SolveOptions { epsilon: eps, max_iter: 200_000 }).unwrap();
                if !v.converged {
                    continue;
                }
                let next = bellman_sweep(&model, &objective, mode, &v.values).unwrap();
                for s in 0..states {
                    prop_assert!(close(next[s], v.values[s], eps), "{objective} {mode:?}");
                }
            }
        }
    }

    #[test]
    fn robust_iterates_are_nondecreasing(seed in any::<u64>(), states in 2usize..8) {
        let mut r = rng(seed);
        let model = random_model(&mut r, ModelKind::Imdp, states, 2, 4, true);
        for objective in objectives(&model) {
            let mut prev: Option<Vec<f64>> = None;
            for k in 1..12 {
                let v = value_iteration(&model, &objective, Mode::Robust, &SolveOptions { epsilon: 1e-300, max_iter: k }).unwrap();
                if let Some(p) = &prev {
                    for s in 0..states {
                        prop_assert!(v.values[s] >= p[s] - 1e-12, "{objective} sweep {k} s{s}");
                    }
                }
                prev = Some(v.values);
            }
        }
    }

    #[test]
    fn value_and_policy_iteration_agree(seed in any::<u64>(), kind in 0usize..3, states in 2usize..10) {
        let mut r = rng(seed);
        let model = random_model(&mut r, KINDS[kind], states, 3, 4, true);
        let eps = 1e-7;
        for objective in objectives(&model) {
            let vi = solve_vi(&model, &objective, Mode::Robust, &opts(eps * 1e-3)).unwrap();
            let pi = policy_iteration(&model, &objective, Mode::Robust, &opts(eps)).unwrap();
            prop_assert!(pi.values.converged);
            for s in 0..states {
                // residual stopping: the error grows with the expected horizon
                let tol = 10.0 * eps * vi.values.values[s].abs().max(1.0);
                prop_assert!(close(vi.values.values[s], pi.values.values[s], tol), "{objective} s{s}: {} vs {}", vi.values.values[s], pi.values.values[s]);
            }
        }
    }

    #[test]
    fn extracted_policy_attains_robust_value(seed in any::<u64>(), kind in 1usize..3, states in 2usize..10) {
        let mut r = rng(seed);
        let model = random_model(&mut r, KINDS[kind], states, 3, 4, true);
        let eps = 1e-9;
        for objective in objectives(&model) {
            let vi = value_iteration(&model, &objective, Mode::Robust, &opts(eps)).unwrap();
            let policy = extract_policy(&model, &vi, &objective, Mode::Robust).unwrap();
            let exact = exact_policy_value(&model, &policy, &objective, Mode::Robust).unwrap();
            for s in 0..states {
                prop_assert!(exact[s] >= vi.values[s] - 2.0 * eps, "{objective} s{s}: {} vs {}", vi.values[s], exact[s]);
            }
        }
    }

    #[test]
    fn policy_evaluation_matches_exact_chain(seed in any::<u64>(), kind in 0usize..3, states in 2usize..8) {
        let mut r = rng(seed);
        let model = random_model(&mut r, KINDS[kind], states, 3, 4, true);
        let actions: Vec<usize> = (0..states).map(|s| model.choices(s)[0].action).collect();
        let policy = StationaryPolicy::deterministic(&actions);
        let objective = Objective::Discounted { gamma: 0.7 };
        let eps = 1e-10;
        let iterative = policy_evaluation(&model, &policy, &objective, Mode::Robust, &opts(eps)).unwrap();
        let exact = exact_policy_value(&model, &policy, &objective, Mode::Robust).unwrap();
        for s in 0..states {
            prop_assert!(close(iterative.values[s], exact[s], 1e-8));
        }
    }

    #[test]
    fn value_ranges(seed in any::<u64>(), states in 2usize..10) {
        let mut r = rng(seed);
        let model = random_model(&mut r, ModelKind::Imdp, states, 2, 4, true);
        let t = vec![states - 1];
        let reach = value_iteration(&model, &Objective::Reachability { targets: t.clone() }, Mode::Robust, &opts(1e-8)).unwrap();
        prop_assert!(reach.values.iter().all(|&v| (0.0..=1.0 + 1e-12).contains(&v)));
        let part = classify_reach_reward(&model, &t).unwrap();
        let reward = value_iteration(&model, &Objective::ReachReward { targets: t }, Mode::Robust, &opts(1e-8)).unwrap();
        for s in 0..states {
            prop_assert_eq!(reward.values[s].is_infinite(), part.class(s) == StateClass::Infinite);
        }
    }

    #[test]
    fn partition_ignores_probabilities(seed in any::<u64>(), kind in 0usize..3, states in 2usize..10) {
        let mut r = rng(seed);
        let model = random_model(&mut r, KINDS[kind], states, 3, 3, false);
        let t = vec![r.gen_range(0..states)];
        let before = classify_reach_reward(&model, &t).unwrap();
        let zero = prob0_max(&model, &t).unwrap();
        prop_assert!(zero.iter().all(|s| !t.contains(s)));
        for s in 0..states {
            prop_assert_eq!(before.class(s) == StateClass::Target, t.contains(&s));
        }
        let perturbed = model.with_rows(ModelKind::Imdp, |_, c| {
            let m = c.row().len();
            let (l, u) = interval_bounds(&mut r, m);
            UncertainRow::interval(c.row().support().to_vec(), l, u)
        });
        let after = classify_reach_reward(&perturbed, &t).unwrap();
        prop_assert_eq!(before, after);
    }

    #[test]
    fn induced_chains_are_stochastic(seed in any::<u64>(), states in 2usize..10) {
        let mut r = rng(seed);
        let model = random_model(&mut r, ModelKind::Mdp, states, 3, 5, false);
        let dtmc = induce_dtmc(&model, &StationaryPolicy::uniform(&model)).unwrap();
        for row in &dtmc.rows {
            prop_assert!((row.iter().map(|e| e.1).sum::<f64>() - 1.0).abs() <= 1e-9);
        }
        let actions: Vec<usize> = (0..states).map(|s| model.choices(s).last().unwrap().action).collect();
        let det = induce_dtmc(&model, &StationaryPolicy::deterministic(&actions)).unwrap();
        for s in 0..states {
            let c = model.choice(s, actions[s]).unwrap();
            let RowSet::Point { probs } = c.row().set() else { unreachable!() };
            let expected: Vec<(usize, f64)> = c.row().support().iter().copied().zip(probs.iter().copied()).collect();
            prop_assert_eq!(&det.rows[s], &expected);
        }
    }

    #[test]
    fn validation_is_idempotent(seed in any::<u64>(), kind in 0usize..3) {
        let mut r = rng(seed);
        let model = random_model(&mut r, KINDS[kind], 5, 2, 4, false);
        let copy = model.clone();
        prop_assert!(validate(&model).is_empty());
        prop_assert!(validate(&model).is_empty());
        prop_assert_eq!(model, copy);
    }

    #[test]
    fn hoeffding_radius_scales_with_root_n(n in 1u64..1_000_000, delta in 1e-6f64..0.5) {
        let a = hoeffding_radius(n, delta);
        let b = hoeffding_radius(4 * n, delta);
        prop_assert!((a - 2.0 * b).abs() <= 1e-12 * a);
    }
}
