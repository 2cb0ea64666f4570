//! Seed-reproducible Monte Carlo play of a player-1 strategy against an
//! adversary.
//!
//! Each stage consumes exactly four uniforms in the order player-1 action,
//! player-2 action, transition, memory update. Mixed adversaries take one
//! extra uniform before stage 1. Replications run in parallel but are
//! reduced in replication order, so every statistic is independent of the
//! number of workers.

use std::io::{self, Write};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::game::NormalizedGame;
use crate::rng::{sample_index, StageRng};
use crate::strategy::{Adversary, MemoryThresholds, Player1Strategy, Transition};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StageRecord {
    pub z: usize,
    /// Memory (counter index) at the start of the stage.
    pub m: usize,
    pub i: usize,
    pub j: usize,
    /// Normalized stage payoff.
    pub x: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpisodeTrace {
    pub seed: u64,
    pub replication: u64,
    pub horizon: usize,
    /// Stage `t` is `stages[t-1]`.
    pub stages: Vec<StageRecord>,
    /// First stage `t` after which the play sits in an absorbing state;
    /// 0 if it starts in one.
    pub absorption_stage: Option<usize>,
}

/// Plays one replication and hands every stage, with the successor state
/// and memory, to `observe`.
fn play(
    game: &NormalizedGame,
    sigma: &dyn Player1Strategy,
    tau: &dyn Adversary,
    horizon: usize,
    base_seed: u64,
    replication: u64,
    mut observe: impl FnMut(usize, &StageRecord, usize, usize),
) -> Result<()> {
    let g = &game.game;
    let mut rng = StageRng::for_replication(base_seed, replication);
    let mut adversary = tau.session(&mut rng);
    let mut player = sigma.session();
    let mut z = g.initial_state();
    let mut m = 0;
    for t in 1..=horizon {
        let i = sample_index(player.action(t, z, m)?, rng.uniform());
        let j = sample_index(adversary.action(t, z, m), rng.uniform());
        let x = g.payoff(z, i, j);
        let z_next = g.sample_next(z, i, j, rng.uniform());
        let step = Transition {
            t,
            z,
            m,
            i,
            j,
            x,
            z_next,
        };
        let m_next = player.next_memory(&step, rng.uniform())?;
        observe(t, &StageRecord { z, m, i, j, x }, z_next, m_next);
        z = z_next;
        m = m_next;
    }
    Ok(())
}

fn absorbing_flags(game: &NormalizedGame) -> Vec<bool> {
    let g = &game.game;
    (0..g.n_states())
        .map(|z| g.is_absorbing(z).expect("state in range"))
        .collect()
}

/// Replication `replication` of base seed `base_seed`, recorded in full.
pub fn run_replication(
    game: &NormalizedGame,
    sigma: &dyn Player1Strategy,
    tau: &dyn Adversary,
    horizon: usize,
    base_seed: u64,
    replication: u64,
) -> Result<EpisodeTrace> {
    if horizon == 0 {
        return Err(Error::InvalidParameter("horizon must be at least 1".into()));
    }
    let absorbing = absorbing_flags(game);
    let mut stages = Vec::with_capacity(horizon);
    let mut absorption_stage = absorbing[game.game.initial_state()].then_some(0);
    play(
        game,
        sigma,
        tau,
        horizon,
        base_seed,
        replication,
        |t, rec, z_next, _| {
            stages.push(*rec);
            if absorption_stage.is_none() && absorbing[z_next] {
                absorption_stage = Some(t);
            }
        },
    )?;
    Ok(EpisodeTrace {
        seed: base_seed,
        replication,
        horizon,
        stages,
        absorption_stage,
    })
}

/// One episode from `seed` (replication 0 of that seed).
pub fn run_episode(
    game: &NormalizedGame,
    sigma: &dyn Player1Strategy,
    tau: &dyn Adversary,
    horizon: usize,
    seed: u64,
) -> Result<EpisodeTrace> {
    run_replication(game, sigma, tau, horizon, seed, 0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct McConfig {
    pub horizon: usize,
    pub replications: u64,
    pub base_seed: u64,
    /// Increasing stage counts in `1..=horizon`.
    pub checkpoints: Vec<usize>,
    /// Worker threads; 0 uses the global pool.
    pub workers: usize,
}

impl McConfig {
    pub fn new(horizon: usize, replications: u64, base_seed: u64) -> Self {
        McConfig {
            horizon,
            replications,
            base_seed,
            checkpoints: default_checkpoints(horizon),
            workers: 0,
        }
    }
}

/// `{10, 10^1.5, 10², …}` rounded, capped by and ending at `horizon`.
pub fn default_checkpoints(horizon: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut k = 2;
    loop {
        let n = 10f64.powf(k as f64 / 2.0).round() as usize;
        if n >= horizon {
            break;
        }
        out.push(n);
        k += 1;
    }
    out.push(horizon);
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckpointStats {
    pub n: usize,
    /// Mean over replications of `r̄_n`.
    pub mean_avg_payoff: f64,
    pub se_avg_payoff: f64,
    /// Quantiles over replications of `max_{t≤n} m_t`.
    pub memory_p50: usize,
    pub memory_p90: usize,
    pub memory_p99: usize,
    pub memory_max: usize,
    /// `K_ε ln n`, when the strategy reports thresholds.
    pub exceed_threshold: Option<f64>,
    /// Replications with `max_{t≤n} m_t ≥ K_ε ln n`.
    pub exceed_count: u64,
    pub exceed_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunStatistics {
    pub horizon: usize,
    pub replications: u64,
    pub base_seed: u64,
    pub checkpoints: Vec<CheckpointStats>,
    /// Replications with `m_n > n_ε + K_ε ln n` for some `n ≤ horizon`.
    pub uniform_exceed_count: u64,
    pub uniform_exceed_rate: f64,
    pub uniform_exceed_se: f64,
    /// Replications that reached an absorbing state by the horizon.
    pub absorbed_count: u64,
}

struct Summary {
    avg: Vec<f64>,
    max_memory: Vec<usize>,
    uniform_exceeded: bool,
    absorbed: bool,
}

fn summarize(
    game: &NormalizedGame,
    sigma: &dyn Player1Strategy,
    tau: &dyn Adversary,
    config: &McConfig,
    thresholds: Option<MemoryThresholds>,
    absorbing: &[bool],
    replication: u64,
) -> Result<Summary> {
    let mut avg = Vec::with_capacity(config.checkpoints.len());
    let mut max_memory = Vec::with_capacity(config.checkpoints.len());
    let mut next_cp = 0;
    let mut total = 0.0;
    let mut running_max = 0;
    let mut uniform_exceeded = false;
    let mut absorbed = absorbing[game.game.initial_state()];
    play(
        game,
        sigma,
        tau,
        config.horizon,
        config.base_seed,
        replication,
        |t, rec, z_next, _| {
            total += rec.x;
            if rec.m > running_max || t == 1 {
                running_max = running_max.max(rec.m);
                // The bound n_ε + K_ε ln n grows with n, so a first violation
                // always happens at a new running maximum.
                if let Some(th) = thresholds {
                    if !uniform_exceeded && rec.m as f64 > th.uniform(t) {
                        uniform_exceeded = true;
                    }
                }
            }
            absorbed |= absorbing[z_next];
            if next_cp < config.checkpoints.len() && config.checkpoints[next_cp] == t {
                avg.push(total / t as f64);
                max_memory.push(running_max);
                next_cp += 1;
            }
        },
    )?;
    Ok(Summary {
        avg,
        max_memory,
        uniform_exceeded,
        absorbed,
    })
}

fn check_config(config: &McConfig) -> Result<()> {
    if config.horizon == 0 {
        return Err(Error::InvalidParameter("horizon must be at least 1".into()));
    }
    if config.replications == 0 {
        return Err(Error::InvalidParameter("replications must be at least 1".into()));
    }
    if config.checkpoints.is_empty() {
        return Err(Error::InvalidParameter("at least one checkpoint is required".into()));
    }
    if config.checkpoints.windows(2).any(|w| w[1] <= w[0])
        || config.checkpoints[0] == 0
        || *config.checkpoints.last().expect("nonempty") > config.horizon
    {
        return Err(Error::InvalidParameter(format!(
            "checkpoints must increase strictly within 1..={}",
            config.horizon
        )));
    }
    Ok(())
}

/// Nearest-rank quantile of a sorted sample.
fn quantile(sorted: &[usize], q: f64) -> usize {
    let rank = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    sorted[rank - 1]
}

/// Runs `config.replications` independent episodes and aggregates them.
pub fn monte_carlo(
    game: &NormalizedGame,
    sigma: &dyn Player1Strategy,
    tau: &dyn Adversary,
    config: &McConfig,
) -> Result<RunStatistics> {
    check_config(config)?;
    let thresholds = sigma.memory_thresholds();
    let absorbing = absorbing_flags(game);
    let run = || {
        (0..config.replications)
            .into_par_iter()
            .map(|r| summarize(game, sigma, tau, config, thresholds, &absorbing, r))
            .collect::<Result<Vec<_>>>()
    };
    let summaries = if config.workers == 0 {
        run()?
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(config.workers)
            .build()
            .map_err(|e| Error::InvalidParameter(format!("cannot start worker pool: {e}")))?
            .install(run)?
    };
    Ok(aggregate(config, thresholds, &summaries))
}

fn aggregate(config: &McConfig, thresholds: Option<MemoryThresholds>, summaries: &[Summary]) -> RunStatistics {
    let r = summaries.len() as f64;
    let checkpoints = config
        .checkpoints
        .iter()
        .enumerate()
        .map(|(c, &n)| {
            let mean = summaries.iter().map(|s| s.avg[c]).sum::<f64>() / r;
            let se = if summaries.len() > 1 {
                let var = summaries.iter().map(|s| (s.avg[c] - mean).powi(2)).sum::<f64>() / (r - 1.0);
                (var / r).sqrt()
            } else {
                0.0
            };
            let mut mem: Vec<usize> = summaries.iter().map(|s| s.max_memory[c]).collect();
            mem.sort_unstable();
            let exceed_threshold = thresholds.map(|th| th.per_horizon(n));
            let exceed_count = exceed_threshold.map_or(0, |k| mem.iter().filter(|&&m| m as f64 >= k).count() as u64);
            CheckpointStats {
                n,
                mean_avg_payoff: mean,
                se_avg_payoff: se,
                memory_p50: quantile(&mem, 0.5),
                memory_p90: quantile(&mem, 0.9),
                memory_p99: quantile(&mem, 0.99),
                memory_max: *mem.last().expect("at least one replication"),
                exceed_threshold,
                exceed_count,
                exceed_rate: exceed_count as f64 / r,
            }
        })
        .collect();
    let uniform_exceed_count = summaries.iter().filter(|s| s.uniform_exceeded).count() as u64;
    let p = uniform_exceed_count as f64 / r;
    RunStatistics {
        horizon: config.horizon,
        replications: config.replications,
        base_seed: config.base_seed,
        checkpoints,
        uniform_exceed_count,
        uniform_exceed_rate: p,
        uniform_exceed_se: (p * (1.0 - p) / r).sqrt(),
        absorbed_count: summaries.iter().filter(|s| s.absorbed).count() as u64,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MemoryBoundRow {
    pub n: usize,
    /// `K_ε ln n`
    pub threshold: f64,
    pub exceed_count: u64,
    pub exceed_rate: f64,
    /// `n⁻²`
    pub bound: f64,
    /// `R n⁻² + 4 √(R n⁻²)`: binomial allowance around the bound.
    pub allowed_count: f64,
    /// The bound is proved for `n ≥ M`.
    pub applies: bool,
    pub pass: bool,
    /// `max over replications of max_{t≤n} m_t / ln n`, compared with `K_ε`.
    pub growth_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MemoryBoundReport {
    pub k_eps: f64,
    pub n_eps: f64,
    pub epsilon: f64,
    pub rows: Vec<MemoryBoundRow>,
    pub uniform_exceed_rate: f64,
    pub uniform_exceed_se: f64,
    /// `rate ≤ ε + 4 SE`
    pub uniform_pass: bool,
}

/// Compares the memory statistics of a counter run with the probability
/// bounds `n⁻²` (per horizon) and `ε` (uniform over horizons).
pub fn memory_bound_report(
    stats: &RunStatistics,
    thresholds: MemoryThresholds,
    epsilon: f64,
    counter_threshold: f64,
) -> MemoryBoundReport {
    let r = stats.replications as f64;
    let rows = stats
        .checkpoints
        .iter()
        .map(|c| {
            let n = c.n as f64;
            let bound = n.powi(-2);
            let expected = r * bound;
            let allowed_count = expected + 4.0 * expected.sqrt();
            let threshold = thresholds.per_horizon(c.n);
            let exceed_count = c.exceed_threshold.map_or(0, |_| c.exceed_count);
            MemoryBoundRow {
                n: c.n,
                threshold,
                exceed_count,
                exceed_rate: exceed_count as f64 / r,
                bound,
                allowed_count,
                applies: n >= counter_threshold,
                pass: exceed_count as f64 <= allowed_count,
                growth_ratio: (c.n > 1).then(|| c.memory_max as f64 / n.ln()),
            }
        })
        .collect();
    MemoryBoundReport {
        k_eps: thresholds.k_eps,
        n_eps: thresholds.n_eps,
        epsilon,
        rows,
        uniform_exceed_rate: stats.uniform_exceed_rate,
        uniform_exceed_se: stats.uniform_exceed_se,
        uniform_pass: stats.uniform_exceed_rate <= epsilon + 4.0 * stats.uniform_exceed_se,
    }
}

/// Writes a float with 17 significant digits.
fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Trace CSV: `replication,t,z,k,i,j,x`.
pub fn write_trace_csv(out: &mut impl Write, traces: &[EpisodeTrace]) -> io::Result<()> {
    writeln!(out, "replication,t,z,k,i,j,x")?;
    for trace in traces {
        for (idx, s) in trace.stages.iter().enumerate() {
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                trace.replication,
                idx + 1,
                s.z,
                s.m,
                s.i,
                s.j,
                fmt_f64(s.x)
            )?;
        }
    }
    Ok(())
}

/// Statistics CSV, one row per checkpoint:
/// `n,mean_avg_payoff,se_avg_payoff,memory_p50,memory_p90,memory_p99,memory_max,exceed_threshold,exceed_count,exceed_rate`.
/// `exceed_threshold` is empty when the strategy has no memory thresholds.
pub fn write_stats_csv(out: &mut impl Write, stats: &RunStatistics) -> io::Result<()> {
    writeln!(
        out,
        "n,mean_avg_payoff,se_avg_payoff,memory_p50,memory_p90,memory_p99,memory_max,exceed_threshold,exceed_count,exceed_rate"
    )?;
    for c in &stats.checkpoints {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            c.n,
            fmt_f64(c.mean_avg_payoff),
            fmt_f64(c.se_avg_payoff),
            c.memory_p50,
            c.memory_p90,
            c.memory_p99,
            c.memory_max,
            c.exceed_threshold.map(fmt_f64).unwrap_or_default(),
            c.exceed_count,
            fmt_f64(c.exceed_rate)
        )?;
    }
    Ok(())
}
