use proptest::prelude::*;
use stochmem::adversary::StationaryAdversary;
use stochmem::counter::{counter_cache, update_distribution, CounterStrategy};
use stochmem::discounted::{shapley_operator, solve_discounted};
use stochmem::game::{validate_game, RawGame};
use stochmem::sim::run_episode;
use stochmem::{big_match, make_config, normalize_payoffs, CounterState, SolveOptions};

/// Two states with two actions each; `payoff` and `stay` are listed in
/// `(z, i, j)` order and `stay` is the probability of remaining in `z`.
fn raw_game(payoff: &[f64], stay: &[f64]) -> RawGame {
    let at = |z: usize, i: usize, j: usize| 4 * z + 2 * i + j;
    RawGame {
        states: vec!["a".into(), "b".into()],
        actions1: vec!["0".into(), "1".into()],
        actions2: vec!["0".into(), "1".into()],
        payoff: (0..2)
            .map(|z| (0..2).map(|i| (0..2).map(|j| payoff[at(z, i, j)]).collect()).collect())
            .collect(),
        transition: (0..2)
            .map(|z| {
                (0..2)
                    .map(|i| {
                        (0..2)
                            .map(|j| {
                                let q = stay[at(z, i, j)];
                                if z == 0 {
                                    vec![q, 1.0 - q]
                                } else {
                                    vec![1.0 - q, q]
                                }
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect(),
        initial_state: "a".into(),
    }
}

fn two_state_game() -> impl Strategy<Value = RawGame> {
    (
        prop::collection::vec(-10.0..10.0f64, 8),
        prop::collection::vec(0.0..1.0f64, 8),
    )
        .prop_map(|(payoff, stay)| raw_game(&payoff, &stay))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn expected_increment_is_the_drift(k in 1usize..200, x in 0.0..=1.0f64, v in 0.0..=1.0f64) {
        let config = make_config(0.2, 100.0).unwrap();
        let state = CounterState::new(k);
        let s = state.value(&config);
        let up = update_distribution(&config, state, x, v).unwrap();
        let drift = x - v + config.epsilon / 2.0;
        prop_assert!((up.expected_increment(&config, s) - drift).abs() <= 1e-12);
        prop_assert!(drift.abs() < 9.0 / 8.0);
        prop_assert!(up.p_up + up.p_down <= 2.0 / (s * (config.gamma - 1.0)));
        prop_assert!(up.p_up >= 0.0 && up.p_down >= 0.0 && up.p_stay >= 0.0);
        prop_assert!(up.p_up == 0.0 || up.p_down == 0.0);
    }

    #[test]
    fn bottom_level_keeps_only_the_positive_part(x in 0.0..=1.0f64, v in 0.0..=1.0f64) {
        let config = make_config(0.2, 100.0).unwrap();
        let state = CounterState::new(0);
        let up = update_distribution(&config, state, x, v).unwrap();
        let drift = (x - v + config.epsilon / 2.0).max(0.0);
        prop_assert!((up.expected_increment(&config, config.threshold) - drift).abs() <= 1e-12);
        prop_assert_eq!(up.p_down, 0.0);
    }

    #[test]
    fn normalization_round_trips(raw in two_state_game()) {
        let game = validate_game(&raw).unwrap();
        let norm = normalize_payoffs(&game);
        let (lo, hi) = norm.game.payoff_range();
        prop_assert!(lo >= 0.0 && hi <= 1.0);
        let back = norm.denormalize();
        for z in 0..2 {
            for i in 0..2 {
                for j in 0..2 {
                    prop_assert!((back.payoff(z, i, j) - game.payoff(z, i, j)).abs() <= 1e-12);
                    let r = norm.game.payoff(z, i, j);
                    prop_assert!((norm.denormalize_value(r) - game.payoff(z, i, j)).abs() <= 1e-12);
                }
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn shapley_operator_contracts_and_fixes_the_value(
        raw in two_state_game(),
        lambda in 0.05..0.95f64,
        u in prop::collection::vec(0.0..=1.0f64, 2),
        w in prop::collection::vec(0.0..=1.0f64, 2),
    ) {
        let game = normalize_payoffs(&validate_game(&raw).unwrap());
        let fu = shapley_operator(&game, lambda, &u).unwrap();
        let fw = shapley_operator(&game, lambda, &w).unwrap();
        let before = u.iter().zip(&w).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let after = fu.iter().zip(&fw).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        prop_assert!(after <= (1.0 - lambda) * before + 1e-12);

        let sol = solve_discounted(&game, lambda, &SolveOptions::default()).unwrap();
        let image = shapley_operator(&game, lambda, &sol.values).unwrap();
        for (a, b) in image.iter().zip(&sol.values) {
            prop_assert!((a - b).abs() <= 1e-9);
        }
    }

    #[test]
    fn counter_traces_are_consistent(seed in any::<u64>(), p0 in 0.0..=1.0f64) {
        let game = normalize_payoffs(&big_match());
        let config = make_config(0.2, 100.0).unwrap();
        let sigma = CounterStrategy::new(counter_cache(game.clone(), config, SolveOptions::default()));
        let tau = StationaryAdversary::constant(3, vec![p0, 1.0 - p0]).unwrap();
        let trace = run_episode(&game, &sigma, &tau, 300, seed).unwrap();
        prop_assert_eq!(trace.stages.len(), 300);
        prop_assert_eq!(trace.stages[0].m, 0);
        for w in trace.stages.windows(2) {
            prop_assert!(w[0].m.abs_diff(w[1].m) <= 1);
        }
        for s in &trace.stages {
            prop_assert_eq!(s.x, game.game.payoff(s.z, s.i, s.j));
        }
        match trace.absorption_stage {
            Some(t) => {
                prop_assert!(trace.stages[..t].iter().all(|s| s.z == 0));
                let z = trace.stages.get(t).map(|s| s.z);
                prop_assert!(trace.stages[t..].iter().all(|s| Some(s.z) == z && s.z != 0));
            }
            None => prop_assert!(trace.stages.iter().all(|s| s.z == 0)),
        }
    }
}
