//! Property checks shared by the `properties` and `acceptance` targets.
//!
//! Each check drives a deterministic proptest runner for the requested number
//! of cases and returns the shrunk counterexample on failure.

#![allow(dead_code)]


use std::fmt::Debug;

use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};

use swarm_recharge::analysis::{describe, fit_forest, gini_importances, Dataset, ForestConfig};
use swarm_recharge::battery::{consume_battery, recharge, SocValue};
use swarm_recharge::engine::{simulate_with, station_capacity, SimOptions, SimState};
use swarm_recharge::experiments::{full_factorial, run_sweep, Execution, FactorLevels};
use swarm_recharge::policy::{ct_decide, Decision, PredictorEnsemble, Strategy as Predictor};
use swarm_recharge::{Factor, RngStream, SimParams};

pub type Check = fn(u32) -> Result<(), String>;

fn run<S, F>(cases: u32, strategy: S, test: F) -> Result<(), String>
where
    S: Strategy,
    S::Value: Debug,
    F: Fn(S::Value) -> Result<(), TestCaseError>,
{
    let config = Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    };
    let mut runner =
        TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha));
    runner.run(&strategy, test).map_err(|e| e.to_string())
}

fn strategy_of(m: usize) -> impl Strategy<Value = Predictor> {
    prop::collection::vec(-1.0f64..1.0, m + 1).prop_map(Predictor::new)
}

fn history_of(len: usize, qty: u32) -> impl Strategy<Value = Vec<u32>> {
    prop::collection::vec(0..=qty, len)
}

/// Small but valid parameter sets, cheap enough for a thousand full runs.
pub fn small_params() -> impl Strategy<Value = SimParams> {
    (
        (1u32..=4, 1u32..=4, 0.0f64..=100.0, 0.0f64..=100.0),
        (0.0f64..25.0, prop_oneof![Just(0.0), 0.0f64..2.0], 1u32..=20),
        (0.0f64..=100.0, 0.0f64..=100.0, any::<u64>(), 1u32..=80),
    )
        .prop_map(
            |((m, k, a, b), (bc, sd, qty), (bg, cap, seed, max_ticks))| SimParams {
                m,
                k,
                up: a.max(b),
                lw: a.min(b),
                bc,
                sd,
                qty,
                bg,
                b: cap,
                seed,
                max_ticks,
            },
        )
}

/// Decisions the engine should make this tick, computed with the reference
/// scoring path.
fn expected_decisions(state: &SimState) -> Vec<Option<Decision>> {
    let p = state.params;
    let history = state.history().as_slice();
    let capacity = station_capacity(p.b, state.alive_count());
    state
        .drones()
        .iter()
        .map(|d| {
            d.alive.then(|| {
                let mut ensemble = d.ensemble.clone();
                ensemble.select_best(history, p.qty);
                let predicted = ensemble.best().predict(state.history().recent(), p.qty);
                ct_decide(d.soc, p.lw, p.up, predicted, capacity)
            })
        })
        .collect()
}

fn random_dataset() -> impl Strategy<Value = (Vec<Vec<u8>>, Vec<bool>, u64)> {
    (2usize..=5, 4usize..=40).prop_flat_map(|(p, n)| {
        (
            prop::collection::vec(prop::collection::vec(0u8..=1, p), n),
            prop::collection::vec(any::<bool>(), n),
            any::<u64>(),
        )
    })
}

fn small_forest(seed: u64, features: usize) -> ForestConfig {
    ForestConfig {
        n_trees: 4,
        features_per_split: features.min(2),
        seed,
        ..ForestConfig::default()
    }
}

// ---- core ----

pub fn recharge_bounded(cases: u32) -> Result<(), String> {
    run(cases, (1e-6f64..=100.0, 0.0f64..=100.0), |(soc, bg)| {
        let next = recharge(SocValue(soc), bg);
        prop_assert!(next.value() <= 100.0 && next.value() >= soc);
        Ok(())
    })
}

pub fn death_tick_without_deviation(cases: u32) -> Result<(), String> {
    run(cases, (0.5f64..=100.0, 0.25f64..=40.0), |(initial, bc)| {
        let mut rng = RngStream::new(0);
        let mut soc = SocValue(initial);
        let mut tick = 0u32;
        while soc.is_alive() {
            soc = consume_battery(soc, bc, 0.0, &mut rng);
            tick += 1;
        }
        // Repeated subtraction may land a hair off the exact multiple.
        let exact = initial / bc;
        if (exact - exact.round()).abs() > 1e-9 {
            prop_assert_eq!(f64::from(tick), exact.ceil());
        } else {
            prop_assert!((f64::from(tick) - exact.round()).abs() <= 1.0);
        }
        Ok(())
    })
}

// ---- policy ----

pub fn prediction_is_linear(cases: u32) -> Result<(), String> {
    let input = (1usize..=9).prop_flat_map(|m| {
        (
            strategy_of(m),
            history_of(m, 50),
            history_of(m, 50),
            1u32..=100,
        )
    });
    run(cases, input, |(s, a, b, qty)| {
        let sum: Vec<u32> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
        let constant = s.weights()[0] * f64::from(qty);
        let lhs = s.predict(&sum, qty);
        let rhs = s.predict(&a, qty) + s.predict(&b, qty) - constant;
        prop_assert!(
            (lhs - rhs).abs() <= 1e-9 * (1.0 + lhs.abs()),
            "{lhs} vs {rhs}"
        );
        Ok(())
    })
}

pub fn score_non_negative_and_zero_iff_perfect(cases: u32) -> Result<(), String> {
    let input =
        (1usize..=9).prop_flat_map(|m| (strategy_of(m), history_of(2 * m, 100), 1u32..=100));
    run(cases, input, |(s, history, qty)| {
        let m = s.window();
        let score = s.score(&history, qty);
        prop_assert!(score >= 0.0);
        let perfect =
            (1..=m).all(|w| s.predict(&history[w..w + m], qty) == f64::from(history[w - 1]));
        prop_assert_eq!(score == 0.0, perfect);
        Ok(())
    })?;
    // Random weights almost never hit zero; also exercise the perfect branch.
    run(
        cases,
        (1usize..=9, 0u32..=100, 1u32..=100),
        |(m, level, qty)| {
            let mut weights = vec![0.0; m + 1];
            weights[1] = 1.0;
            let s = Predictor::new(weights);
            prop_assert_eq!(s.score(&vec![level; 2 * m], qty), 0.0);
            Ok(())
        },
    )
}

pub fn selection_is_permutation_invariant(cases: u32) -> Result<(), String> {
    let input = (1usize..=6, 1usize..=8).prop_flat_map(|(m, k)| {
        (
            prop::collection::vec(strategy_of(m), k),
            history_of(2 * m, 60),
            Just(Vec::from_iter(0..k)).prop_shuffle(),
        )
    });
    run(cases, input, |(strategies, history, order)| {
        let qty = 60;
        let brute_min = strategies
            .iter()
            .map(|s| s.score(&history, qty))
            .fold(f64::INFINITY, f64::min);
        let permuted: Vec<Predictor> = order.iter().map(|&i| strategies[i].clone()).collect();
        for set in [strategies.clone(), permuted] {
            let mut ensemble = PredictorEnsemble::new(set);
            let idx = ensemble.select_best(&history, qty);
            prop_assert_eq!(ensemble.strategies()[idx].score(&history, qty), brute_min);
            // Highest index among the minimal scorers.
            prop_assert!(ensemble.strategies()[idx + 1..]
                .iter()
                .all(|s| s.score(&history, qty) > brute_min));
        }
        Ok(())
    })
}

pub fn decision_constant_outside_thresholds(cases: u32) -> Result<(), String> {
    let input = (
        0.0f64..=100.0,
        0.0f64..=100.0,
        1e-6f64..=100.0,
        -500.0f64..500.0,
        0u32..100,
    );
    run(cases, input, |(a, b, soc, predicted, cap)| {
        let (lw, up) = (a.min(b), a.max(b));
        let d = ct_decide(SocValue(soc), lw, up, predicted, cap);
        if soc < lw {
            prop_assert_eq!(d, Decision::AttemptRecharge);
        } else if soc > up {
            prop_assert_eq!(d, Decision::Work);
        } else {
            prop_assert_eq!(d == Decision::AttemptRecharge, predicted < f64::from(cap));
        }
        Ok(())
    })
}

// ---- engine ----

pub fn tick_conservation_and_monotone_alive(cases: u32) -> Result<(), String> {
    run(cases, small_params(), |p| {
        let mut state = SimState::new(p, SimOptions::default()).unwrap();
        let mut alive = state.alive_count();
        while !state.is_finished() {
            let expected = expected_decisions(&state);
            let capacity = station_capacity(p.b, alive);
            let stats = state.step();
            let attempts = expected
                .iter()
                .filter(|d| **d == Some(Decision::AttemptRecharge))
                .count() as u32;
            prop_assert_eq!(stats.attempts, attempts);
            prop_assert_eq!(stats.served, attempts.min(capacity));
            prop_assert!(stats.served <= capacity);
            prop_assert!(stats.alive <= alive);
            alive = stats.alive;
        }
        Ok(())
    })
}

pub fn history_replays_attempts(cases: u32) -> Result<(), String> {
    run(cases, small_params(), |p| {
        let mut state = SimState::new(p, SimOptions::default()).unwrap();
        let window = 2 * p.m as usize;
        let mut attempts = Vec::new();
        while !state.is_finished() {
            attempts.push(state.step().attempts);
            if attempts.len() >= window {
                let expected: Vec<u32> = attempts.iter().rev().take(window).copied().collect();
                prop_assert_eq!(state.history().as_slice(), expected.as_slice());
            }
            prop_assert!(state.history().as_slice().iter().all(|&x| x <= p.qty));
        }
        Ok(())
    })
}

pub fn result_invariants(cases: u32) -> Result<(), String> {
    run(cases, small_params(), |p| {
        let r = simulate_with(
            &p,
            SimOptions {
                trace: true,
                positions: false,
            },
        )
        .unwrap();
        prop_assert_eq!(r.asrd, f64::from(r.remaining) / f64::from(p.qty));
        prop_assert!(r.ticks_run <= p.max_ticks);
        if r.ticks_run < p.max_ticks {
            prop_assert_eq!(r.remaining, 0);
        }
        let trace = r.trace.as_ref().unwrap();
        prop_assert_eq!(trace.len() as u32, r.ticks_run);
        prop_assert!(trace.windows(2).all(|w| w[1].alive <= w[0].alive));
        Ok(())
    })
}

pub fn runs_are_deterministic(cases: u32) -> Result<(), String> {
    run(cases, small_params(), |p| {
        let options = SimOptions {
            trace: true,
            positions: true,
        };
        prop_assert_eq!(
            simulate_with(&p, options).unwrap(),
            simulate_with(&p, options).unwrap()
        );
        Ok(())
    })
}

pub fn threshold_saturation(cases: u32) -> Result<(), String> {
    // 0: LW = UP = 100, everyone below full charge must attempt and full drones
    //    ask the predictor. 1: LW = UP = 0, every alive drone is above UP and
    //    works. 2: LW = 0, UP = 100, the predictor decides for everyone.
    run(cases, (small_params(), 0u8..3), |(p, mode)| {
        let (lw, up) = [(100.0, 100.0), (0.0, 0.0), (0.0, 100.0)][mode as usize];
        let p = SimParams { lw, up, ..p };
        let mut state = SimState::new(p, SimOptions::default()).unwrap();
        while !state.is_finished() {
            let capacity = station_capacity(p.b, state.alive_count());
            let history = state.history().as_slice().to_vec();
            let mut expected = 0;
            for d in state.drones().iter().filter(|d| d.alive) {
                let mut e = d.ensemble.clone();
                e.select_best(&history, p.qty);
                let forecast_yes =
                    e.best().predict(&history[..p.m as usize], p.qty) < f64::from(capacity);
                expected += u32::from(match mode {
                    0 => d.soc.value() < 100.0 || forecast_yes,
                    1 => false,
                    _ => forecast_yes,
                });
            }
            prop_assert_eq!(state.step().attempts, expected);
        }
        Ok(())
    })
}

// ---- experiments ----

pub fn sweep_schedule_invariant_and_consistent(cases: u32) -> Result<(), String> {
    let input = (
        any::<u64>(),
        1u32..=3,
        prop::collection::vec(0u32..512, 1..6),
    );
    run(cases, input, |(seed, reps, ids)| {
        let all = full_factorial(&FactorLevels::default());
        let design: Vec<_> = ids
            .iter()
            .map(|&i| {
                let mut point = all[i as usize].clone();
                point.params.max_ticks = 30;
                point
            })
            .collect();
        let one = run_sweep(&design, reps, seed, Execution::Sequential).unwrap();
        let many = run_sweep(&design, reps, seed, Execution::Parallel { workers: 3 }).unwrap();
        prop_assert_eq!(&one, &many);
        prop_assert_eq!(one.len(), design.len() * reps as usize);
        for r in &one {
            let point = design.iter().find(|d| d.point_id == r.point_id).unwrap();
            for f in Factor::ALL {
                prop_assert_eq!(r.factor(f), point.params.factor(f));
            }
            prop_assert_eq!(r.critical, r.asrd < 1.0);
        }
        Ok(())
    })
}

// ---- analysis ----

pub fn describe_orders_and_permutes(cases: u32) -> Result<(), String> {
    let input = prop::collection::vec(-1e6f64..1e6, 1..80)
        .prop_flat_map(|v| (Just(v.clone()), Just(v).prop_shuffle()));
    run(cases, input, |(values, shuffled)| {
        let s = describe(&values).unwrap();
        prop_assert!(s.min <= s.q1 && s.q1 <= s.median && s.median <= s.q3 && s.q3 <= s.max);
        prop_assert_eq!(s, describe(&shuffled).unwrap());
        Ok(())
    })
}

pub fn importances_normalized(cases: u32) -> Result<(), String> {
    run(cases, random_dataset(), |(rows, labels, seed)| {
        let p = rows[0].len();
        let data = Dataset::new(rows, labels).unwrap();
        let forest = fit_forest(&data, &small_forest(seed, p)).unwrap();
        let report = gini_importances(&forest);
        prop_assert!(report.importances.iter().all(|&v| v >= 0.0));
        let total: f64 = report.importances.iter().sum();
        if forest.trees.iter().any(|t| t.split_count() > 0) {
            prop_assert!((total - 1.0).abs() <= 1e-9, "sum {total}");
        } else {
            prop_assert_eq!(total, 0.0);
        }
        Ok(())
    })
}

pub fn constant_feature_has_zero_importance(cases: u32) -> Result<(), String> {
    run(
        cases,
        (random_dataset(), any::<prop::sample::Index>(), 0u8..=1),
        |((mut rows, labels, seed), idx, value)| {
            let p = rows[0].len();
            let column = idx.index(p);
            for row in &mut rows {
                row[column] = value;
            }
            let data = Dataset::new(rows, labels).unwrap();
            let report = gini_importances(&fit_forest(&data, &small_forest(seed, p)).unwrap());
            prop_assert_eq!(report.importances[column], 0.0);
            Ok(())
        },
    )
}

pub fn relabeling_leaves_importances_unchanged(cases: u32) -> Result<(), String> {
    run(cases, random_dataset(), |(rows, labels, seed)| {
        let p = rows[0].len();
        let flipped: Vec<bool> = labels.iter().map(|y| !y).collect();
        let a = Dataset::new(rows.clone(), labels).unwrap();
        let b = Dataset::new(rows, flipped).unwrap();
        let cfg = small_forest(seed, p);
        let ra = gini_importances(&fit_forest(&a, &cfg).unwrap());
        let rb = gini_importances(&fit_forest(&b, &cfg).unwrap());
        prop_assert_eq!(ra.importances, rb.importances);
        Ok(())
    })
}

/// Every named property with its minimum case count.
pub fn all_properties() -> Vec<(&'static str, Check)> {
    vec![
        (
            "core: recharge bounded and non-decreasing",
            recharge_bounded,
        ),
        (
            "core: SD=0 death tick = ceil(soc/BC)",
            death_tick_without_deviation,
        ),
        ("policy: prediction linear in history", prediction_is_linear),
        (
            "policy: score >= 0, zero iff perfect",
            score_non_negative_and_zero_iff_perfect,
        ),
        (
            "policy: selection permutation invariant",
            selection_is_permutation_invariant,
        ),
        (
            "policy: CT constant outside thresholds",
            decision_constant_outside_thresholds,
        ),
        (
            "engine: tick conservation, alive monotone",
            tick_conservation_and_monotone_alive,
        ),
        (
            "engine: history replays last 2m attempts",
            history_replays_attempts,
        ),
        ("engine: ASRD = remaining/QTY, stop rule", result_invariants),
        ("engine: run determinism", runs_are_deterministic),
        ("engine: LW=UP saturation", threshold_saturation),
        (
            "experiments: schedule invariance, columns, critical flag",
            sweep_schedule_invariant_and_consistent,
        ),
        (
            "analysis: describe ordered, permutation invariant",
            describe_orders_and_permutes,
        ),
        (
            "analysis: importances non-negative, sum to 1",
            importances_normalized,
        ),
        (
            "analysis: constant feature importance 0",
            constant_feature_has_zero_importance,
        ),
        (
            "analysis: label swap leaves importances",
            relabeling_leaves_importances_unchanged,
        ),
    ]
}

pub const PROPERTY_CASES: u32 = 1000;

// ---- oracle comparisons ----

/// `score_strategy` against the chronological re-implementation.
pub fn score_matches_oracle(pairs: usize, seed: u64) -> Result<f64, String> {
    let mut rng = RngStream::new(seed);
    let mut worst: f64 = 0.0;
    for case in 0..pairs {
        let m = 1 + rng.below(9) as usize;
        let qty = 1 + rng.below(100) as u32;
        let weights: Vec<f64> = (0..=m).map(|_| 2.0 * rng.uniform() - 1.0).collect();
        let history: Vec<u32> = (0..2 * m)
            .map(|_| rng.below(u64::from(qty) + 1) as u32)
            .collect();
        let got =
            swarm_recharge::policy::score_strategy(&Predictor::new(weights.clone()), &history, qty);
        let want = oracles::score_chronological(&weights, &history, qty);
        let err = (got - want).abs();
        worst = worst.max(err);
        if err > 1e-9 {
            return Err(format!("case {case}: score {got} vs oracle {want}"));
        }
    }
    Ok(worst)
}

/// `describe` against sort-based order statistics.
pub fn describe_matches_oracle(vectors: usize, seed: u64) -> Result<f64, String> {
    let mut rng = RngStream::new(seed);
    let mut worst: f64 = 0.0;
    for case in 0..vectors {
        let n = 1 + rng.below(200) as usize;
        let scale = if case % 2 == 0 { 1.0 } else { 100.0 };
        let values: Vec<f64> = (0..n).map(|_| scale * rng.uniform()).collect();
        let s = describe(&values).map_err(|e| e.to_string())?;
        let (count, mean, std, min, q1, median, q3, max) = oracles::summary_by_sorting(&values);
        if s.count != count {
            return Err(format!("case {case}: count {} vs {count}", s.count));
        }
        let pairs = [
            (s.mean, mean),
            (s.std, std),
            (s.min, min),
            (s.q1, q1),
            (s.median, median),
            (s.q3, q3),
            (s.max, max),
        ];
        for (got, want) in pairs {
            let err = (got - want).abs();
            worst = worst.max(err);
            if err > 1e-9 {
                return Err(format!("case {case}: {got} vs oracle {want}"));
            }
        }
    }
    Ok(worst)
}

/// Forest importances on the 512-row majority data set, plus the exhaustive
/// single-tree oracle's importances.
pub fn majority_importances(seed: u64, trees: usize) -> (Vec<f64>, Vec<f64>) {
    let rows = oracles::enumerate_levels(9);
    let labels: Vec<bool> = rows
        .iter()
        .map(|r| oracles::majority_of_first_three(r))
        .collect();
    let oracle = oracles::exhaustive_tree_importances(&rows, &labels);
    let data = Dataset::new(rows, labels).unwrap();
    let cfg = ForestConfig {
        n_trees: trees,
        seed,
        ..ForestConfig::default()
    };
    let report = gini_importances(&fit_forest(&data, &cfg).unwrap());
    (report.importances, oracle)
}

pub fn first_three_dominate(importances: &[f64]) -> bool {
    let weakest_signal = importances[..3]
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    importances[3..].iter().all(|&v| v < weakest_signal)
}

pub fn top_set(importances: &[f64], n: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..importances.len()).collect();
    idx.sort_by(|&a, &b| importances[b].total_cmp(&importances[a]).then(a.cmp(&b)));
    let mut top = idx[..n].to_vec();
    top.sort_unstable();
    top
}
