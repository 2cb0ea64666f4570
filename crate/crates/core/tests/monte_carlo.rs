use stochmem::adversary::{exact_average_payoff, PublicMemoryStrategyTable, PureClockedAdversary, StationaryAdversary};
use stochmem::discounted::solve_discounted;
use stochmem::game::big_match_ids::{ABSORB, LIVE};
use stochmem::sim::{monte_carlo, McConfig};
use stochmem::{big_match, normalize_payoffs, SolveOptions};

/// `(1/n) Σ_{t=1}^n (1−a)^t`: player 1 absorbs with probability `a` each
/// stage and player 2 always plays 0.
fn closed_form(a: f64, n: usize) -> f64 {
    (1..=n).map(|t| (1.0 - a).powi(t as i32)).sum::<f64>() / n as f64
}

#[test]
fn stationary_strategy_against_constant_adversary() {
    let game = normalize_payoffs(&big_match());
    let lambda = 0.01;
    let sol = solve_discounted(&game, lambda, &SolveOptions::default()).unwrap();
    let a = sol.strategy1[LIVE][ABSORB];
    assert!((a - lambda / (1.0 + lambda)).abs() < 1e-9);

    let n = 1000;
    let sigma = PublicMemoryStrategyTable::stationary(n, 2, &sol.strategy1).unwrap();
    let expected = closed_form(a, n);

    let tau = PureClockedAdversary::new(n, 3, 1, 2).unwrap();
    let exact = exact_average_payoff(&game, &sigma, &tau, n).unwrap();
    assert!((exact - expected).abs() < 1e-12);

    let adversary = StationaryAdversary::pure(3, 2, 0).unwrap();
    let stats = monte_carlo(&game, &sigma, &adversary, &McConfig::new(n, 1000, 5)).unwrap();
    let last = stats.checkpoints.last().unwrap();
    assert_eq!(last.n, n);
    assert!(
        (last.mean_avg_payoff - expected).abs() <= 4.0 * last.se_avg_payoff,
        "mean {} se {} expected {expected}",
        last.mean_avg_payoff,
        last.se_avg_payoff
    );
    for c in &stats.checkpoints {
        let e = closed_form(a, c.n);
        assert!(
            (c.mean_avg_payoff - e).abs() <= 4.0 * c.se_avg_payoff + 1e-12,
            "n = {}",
            c.n
        );
    }
}

#[test]
fn always_continue_against_uniform_has_mean_one_half() {
    let game = normalize_payoffs(&big_match());
    let n = 400;
    let sigma = PublicMemoryStrategyTable::always(n, game.game.dims(), 1).unwrap();
    let adversary = StationaryAdversary::uniform(3, 2).unwrap();
    let stats = monte_carlo(&game, &sigma, &adversary, &McConfig::new(n, 2000, 9)).unwrap();
    let last = stats.checkpoints.last().unwrap();
    assert!((last.mean_avg_payoff - 0.5).abs() <= 4.0 * last.se_avg_payoff);
    // The standard error of an average of n fair coins, over R replications.
    let se = (0.25 / n as f64 / 2000.0).sqrt();
    assert!((last.se_avg_payoff / se - 1.0).abs() < 0.1);
    assert_eq!(stats.absorbed_count, 0);
}
