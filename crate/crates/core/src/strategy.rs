//! Interfaces between strategies and the simulator.
//!
//! Player 1 strategies are memory based: at stage `t` the action depends on
//! `(t, z_t, m_t)` and the next memory on `(t, z_t, m_t, i_t, j_t, z_{t+1})`.
//! The memory index is public, so player 2 sees it when choosing `j_t`.
//! Stages are numbered from 1 and the initial memory is 0.

use crate::error::Result;
use crate::rng::StageRng;

/// What happened in one stage, as seen by player 1's memory update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub t: usize,
    pub z: usize,
    pub m: usize,
    pub i: usize,
    pub j: usize,
    /// Normalized stage payoff `r(z, i, j)`.
    pub x: f64,
    pub z_next: usize,
}

pub trait Player1Strategy: Sync {
    /// Per-episode view; may memoize lookups.
    fn session(&self) -> Box<dyn Player1Session + '_>;

    /// Thresholds for the memory-usage statistics, if the strategy is a
    /// counter whose growth is bounded logarithmically.
    fn memory_thresholds(&self) -> Option<MemoryThresholds> {
        None
    }
}

pub trait Player1Session {
    /// Mixed action at stage `t`.
    fn action(&mut self, t: usize, z: usize, m: usize) -> Result<&[f64]>;
    /// Next memory state, driven by one uniform draw.
    fn next_memory(&mut self, step: &Transition, u: f64) -> Result<usize>;
}

pub trait Adversary: Sync {
    /// Starts an episode. Mixtures draw their component here; other
    /// adversaries leave `rng` untouched.
    fn session(&self, rng: &mut StageRng) -> Box<dyn AdversarySession + '_>;
}

pub trait AdversarySession {
    /// Mixed action of player 2 at stage `t`, seeing the public memory `m`.
    fn action(&mut self, t: usize, z: usize, m: usize) -> &[f64];
}

/// `K_ε` and `n_ε` of a counter strategy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MemoryThresholds {
    pub k_eps: f64,
    pub n_eps: f64,
}

impl MemoryThresholds {
    /// `K_ε ln n`
    pub fn per_horizon(&self, n: usize) -> f64 {
        self.k_eps * (n as f64).ln()
    }

    /// `n_ε + K_ε ln n`
    pub fn uniform(&self, n: usize) -> f64 {
        self.n_eps + self.k_eps * (n as f64).ln()
    }
}
