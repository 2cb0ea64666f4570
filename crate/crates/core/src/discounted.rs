//! λ-discounted values by Shapley value iteration.
//!
//! The Shapley operator maps a continuation vector `v` to the per-state
//! values of the auxiliary matrix games
//! `A_z(i, j) = λ·r(z,i,j) + (1−λ)·Σ_{z'} p(z'|z,i,j)·v(z')`.
//! It is a sup-norm contraction with modulus `1−λ`, so iterating it from any
//! start converges to `v_λ`, and `‖v^{k+1} − v^k‖·(1−λ)/λ` bounds the
//! distance of `v^{k+1}` from the fixed point.

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use serde::Serialize;

use crate::counter::CounterConfig;
use crate::error::{Error, Result};
use crate::game::{GameSpec, NormalizedGame};
use crate::matrix::{solve_matrix_game, MatrixGame};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    /// Required sup-norm accuracy of the returned values.
    pub tol: f64,
    pub max_iterations: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol: 1e-9,
            max_iterations: 2_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscountedSolution {
    pub lambda: f64,
    /// `v_λ(z)` for every state.
    pub values: Vec<f64>,
    /// Optimal stationary mixed action of player 1 in each state.
    pub strategy1: Vec<Vec<f64>>,
    /// Optimal stationary mixed action of player 2 in each state.
    pub strategy2: Vec<Vec<f64>>,
    /// A-posteriori bound on `‖values − v_λ‖∞`.
    pub residual: f64,
    pub iterations: usize,
}

fn check_rate(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "discount rate must lie in (0, 1), got {lambda}"
        )))
    }
}

/// The auxiliary matrix game at state `z`.
pub fn auxiliary_game(game: &GameSpec, lambda: f64, v: &[f64], z: usize) -> MatrixGame {
    let (_, ni, nj) = game.dims();
    let mut entries = Vec::with_capacity(ni * nj);
    for i in 0..ni {
        for j in 0..nj {
            let continuation: f64 = game.support(z, i, j).iter().map(|&(n, p)| p * v[n]).sum();
            entries.push(lambda * game.payoff(z, i, j) + (1.0 - lambda) * continuation);
        }
    }
    MatrixGame::new(ni, nj, entries).expect("game dimensions are nonzero")
}

/// One application of the Shapley operator.
pub fn shapley_operator(game: &NormalizedGame, lambda: f64, v: &[f64]) -> Result<Vec<f64>> {
    check_rate(lambda)?;
    let g = &game.game;
    if v.len() != g.n_states() {
        return Err(Error::Dimension(format!(
            "value vector has {} entries for {} states",
            v.len(),
            g.n_states()
        )));
    }
    Ok((0..g.n_states())
        .map(|z| solve_matrix_game(&auxiliary_game(g, lambda, v, z)).value)
        .collect())
}

/// Solves the λ-discounted game to sup-norm accuracy `opts.tol`.
///
/// Absorbing states are pinned to the value of their stage game, which is
/// their exact discounted value at every rate; the remaining states start
/// at 1/2 and are iterated until the contraction bound drops below `tol`.
pub fn solve_discounted(game: &NormalizedGame, lambda: f64, opts: &SolveOptions) -> Result<DiscountedSolution> {
    check_rate(lambda)?;
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "tolerance must be positive, got {}",
            opts.tol
        )));
    }
    let g = &game.game;
    let nz = g.n_states();
    let absorbing: Vec<bool> = (0..nz).map(|z| g.is_absorbing(z).unwrap_or(false)).collect();
    let mut v: Vec<f64> = (0..nz)
        .map(|z| if absorbing[z] { stage_game_value(g, z) } else { 0.5 })
        .collect();

    let contraction_factor = (1.0 - lambda) / lambda;
    let mut iterations = 0;
    let mut residual = f64::INFINITY;
    while iterations < opts.max_iterations {
        iterations += 1;
        let mut diff: f64 = 0.0;
        let next: Vec<f64> = (0..nz)
            .map(|z| {
                if absorbing[z] {
                    v[z]
                } else {
                    let value = solve_matrix_game(&auxiliary_game(g, lambda, &v, z)).value;
                    diff = diff.max((value - v[z]).abs());
                    value
                }
            })
            .collect();
        v = next;
        residual = diff * contraction_factor;
        if residual <= opts.tol {
            break;
        }
    }
    if residual > opts.tol {
        return Err(Error::IterationCap {
            lambda,
            iterations,
            residual,
            tol: opts.tol,
            best_values: v,
        });
    }

    let (strategy1, strategy2) = (0..nz)
        .map(|z| {
            let s = solve_matrix_game(&auxiliary_game(g, lambda, &v, z));
            (s.row_strategy, s.col_strategy)
        })
        .unzip();
    Ok(DiscountedSolution {
        lambda,
        values: v,
        strategy1,
        strategy2,
        residual,
        iterations,
    })
}

fn stage_game_value(g: &GameSpec, z: usize) -> f64 {
    let (_, ni, nj) = g.dims();
    let entries = (0..ni)
        .flat_map(|i| (0..nj).map(move |j| (i, j)))
        .map(|(i, j)| g.payoff(z, i, j))
        .collect();
    solve_matrix_game(&MatrixGame::new(ni, nj, entries).expect("nonempty")).value
}

/// Estimate of the undiscounted value `v = lim_{λ→0} v_λ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValueLimitEstimate {
    /// `v_λ` at the smallest rate of the schedule.
    pub values: Vec<f64>,
    pub lambdas_used: Vec<f64>,
    /// `v_λ` for every rate of the schedule, in schedule order.
    pub per_rate: Vec<Vec<f64>>,
    /// Max over states of the range of `v_λ(z)` across the last three rates.
    pub spread: f64,
}

pub fn estimate_value_limit(
    game: &NormalizedGame,
    schedule: &[f64],
    opts: &SolveOptions,
) -> Result<ValueLimitEstimate> {
    if schedule.len() < 3 {
        return Err(Error::InvalidParameter(
            "value-limit schedule needs at least three rates".into(),
        ));
    }
    if schedule.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidParameter(
            "value-limit schedule must be strictly decreasing".into(),
        ));
    }
    let per_rate = schedule
        .iter()
        .map(|&lambda| solve_discounted(game, lambda, opts).map(|s| s.values))
        .collect::<Result<Vec<_>>>()?;
    let tail = &per_rate[per_rate.len() - 3..];
    let spread = (0..game.game.n_states())
        .map(|z| {
            let (lo, hi) = tail.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                (lo.min(v[z]), hi.max(v[z]))
            });
            hi - lo
        })
        .fold(0.0, f64::max);
    Ok(ValueLimitEstimate {
        values: per_rate.last().cloned().expect("nonempty schedule"),
        lambdas_used: schedule.to_vec(),
        per_rate,
        spread,
    })
}

/// Discounted solutions at the counter levels `λ(γᵏM)`, keyed by `k`.
///
/// Safe to share between simulation workers. Each level is solved at most
/// once per winner; if two workers race on the same `k` they compute the
/// same deterministic solution and the first insert is kept.
#[derive(Debug)]
pub struct SolutionCache {
    game: NormalizedGame,
    config: CounterConfig,
    opts: SolveOptions,
    entries: RwLock<HashMap<usize, Arc<DiscountedSolution>>>,
}

impl SolutionCache {
    pub fn new(game: NormalizedGame, config: CounterConfig, opts: SolveOptions) -> Self {
        SolutionCache {
            game,
            config,
            opts,
            entries: RwLock::new(HashMap::new()),
        }
    }

    pub fn game(&self) -> &NormalizedGame {
        &self.game
    }

    pub fn config(&self) -> &CounterConfig {
        &self.config
    }

    pub fn options(&self) -> &SolveOptions {
        &self.opts
    }

    /// The solution at rate `λ(γᵏM)`, solving it on first use.
    pub fn solution_at_counter(&self, k: usize) -> Result<Arc<DiscountedSolution>> {
        if let Some(hit) = self.entries.read().expect("cache lock").get(&k) {
            return Ok(Arc::clone(hit));
        }
        let solved = Arc::new(solve_discounted(&self.game, self.config.rate_at(k), &self.opts)?);
        let mut entries = self.entries.write().expect("cache lock");
        Ok(Arc::clone(entries.entry(k).or_insert(solved)))
    }

    pub fn len(&self) -> usize {
        self.entries.read().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
