//! Finite zero-sum stochastic games and the stochastic counter strategy.
//!
//! Player 1 keeps a public counter `s = γᵏM` and plays an optimal
//! stationary action of the `λ(s)`-discounted game; the counter drifts with
//! the realized payoffs. The crate provides the pieces around it: game
//! descriptions, a matrix-game solver, discounted value iteration, adversary
//! strategies that see the counter, and a deterministic parallel simulator.

// Parameter checks are written `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adversary;
pub mod counter;
pub mod discounted;
pub mod error;
pub mod game;
pub mod matrix;
pub mod rng;
pub mod sim;
pub mod strategy;

pub use counter::{make_config, CounterConfig, CounterState, CounterStrategy};
pub use discounted::{solve_discounted, DiscountedSolution, SolutionCache, SolveOptions};
pub use error::{Error, Result};
pub use game::{big_match, normalize_payoffs, GameSpec, NormalizedGame};
pub use matrix::{solve_matrix_game, MatrixGame, MatrixSolution};
