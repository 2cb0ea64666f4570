//! The stochastic counter strategy.
//!
//! Memory states `k = 0, 1, 2, …` stand for the counter values `s = γᵏ·M`
//! with `γ = 1 + ε/9`. At counter value `s` player 1 plays an optimal
//! stationary action of the `λ(s)`-discounted game, `λ(s) = 1/(s ln²s)`.
//! After each stage the counter moves one step up or down with a small
//! probability driven by `d = x − v_{λ(s)}(z') + ε/2`, chosen so that the
//! expected change of `s` equals `d` (or `max(d, 0)` at the floor `k = 0`).

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::discounted::{estimate_value_limit, DiscountedSolution, SolutionCache, SolveOptions, ValueLimitEstimate};
use crate::error::{Error, Result};
use crate::strategy::{MemoryThresholds, Player1Session, Player1Strategy, Transition};

/// Slack on payoff and value ranges for rounding in solver output.
const RANGE_SLACK: f64 = 1e-9;

/// `λ(s) = 1 / (s · ln² s)`, defined for `s > 1`.
pub fn lambda_of(s: f64) -> Result<f64> {
    if !(s > 1.0) || !s.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "counter value must exceed 1 for λ(s), got {s}"
        )));
    }
    let ln = s.ln();
    Ok(1.0 / (s * ln * ln))
}

/// Map from counter values to discount rates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum LambdaMap {
    #[default]
    #[serde(rename = "inv-s-log2")]
    InvSLog2,
}

impl LambdaMap {
    pub fn rate(&self, s: f64) -> Result<f64> {
        match self {
            LambdaMap::InvSLog2 => lambda_of(s),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            LambdaMap::InvSLog2 => "inv-s-log2",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CounterConfig {
    pub epsilon: f64,
    /// `1 + ε/9`
    pub gamma: f64,
    /// Counter floor `M`.
    pub threshold: f64,
    /// Memory growth constant `K_ε`, at least `4 / ln γ`.
    pub k_eps: f64,
    /// Horizon from which uniform ε-optimality holds: `72 / (ε² λ(M))`.
    pub n_eps: f64,
    pub lambda_map: LambdaMap,
}

/// Fills in `γ`, `K_ε = 4/ln γ` and `n_ε` for the given precision and floor.
pub fn make_config(epsilon: f64, threshold: f64) -> Result<CounterConfig> {
    if !(epsilon > 0.0 && epsilon < 0.25) {
        return Err(Error::InvalidParameter(format!(
            "epsilon must lie in (0, 1/4), got {epsilon}"
        )));
    }
    if !(threshold > 2.0) || !threshold.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "counter threshold M must exceed 2, got {threshold}"
        )));
    }
    let gamma = 1.0 + epsilon / 9.0;
    let min_threshold = CounterConfig::min_feasible_threshold(epsilon);
    // |d| < 9/8 keeps both jump probabilities in [0, 1] iff M(γ−1)/γ ≥ 9/8.
    if threshold * (gamma - 1.0) / gamma < 9.0 / 8.0 {
        return Err(Error::InfeasibleThreshold {
            epsilon,
            threshold,
            min_threshold,
        });
    }
    let lambda_map = LambdaMap::default();
    Ok(CounterConfig {
        epsilon,
        gamma,
        threshold,
        k_eps: 4.0 / gamma.ln(),
        n_eps: 72.0 / (epsilon * epsilon * lambda_map.rate(threshold)?),
        lambda_map,
    })
}

impl CounterConfig {
    /// `9γ / (8(γ−1))`
    pub fn min_feasible_threshold(epsilon: f64) -> f64 {
        let gamma = 1.0 + epsilon / 9.0;
        9.0 * gamma / (8.0 * (gamma - 1.0))
    }

    /// Replaces the default `K_ε`; values below `4/ln γ` are rejected.
    pub fn with_k_eps(mut self, k_eps: f64) -> Result<Self> {
        let floor = 4.0 / self.gamma.ln();
        if !(k_eps >= floor) {
            return Err(Error::InvalidParameter(format!(
                "K_eps must be at least 4/ln(gamma) = {floor}, got {k_eps}"
            )));
        }
        self.k_eps = k_eps;
        Ok(self)
    }

    /// `s = γᵏ·M`
    pub fn counter_value(&self, k: usize) -> f64 {
        self.threshold * self.gamma.powi(k as i32)
    }

    /// `λ(γᵏ·M)`
    pub fn rate_at(&self, k: usize) -> f64 {
        self.lambda_map
            .rate(self.counter_value(k))
            .expect("counter values exceed M > 2")
    }

    pub fn thresholds(&self) -> MemoryThresholds {
        MemoryThresholds {
            k_eps: self.k_eps,
            n_eps: self.n_eps,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CounterState {
    pub k: usize,
}

impl CounterState {
    pub fn new(k: usize) -> Self {
        CounterState { k }
    }

    pub fn value(&self, config: &CounterConfig) -> f64 {
        config.counter_value(self.k)
    }
}

/// Distribution of the next counter index over `{k+1, k, k−1}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MemoryUpdate {
    pub p_up: f64,
    pub p_stay: f64,
    pub p_down: f64,
}

impl MemoryUpdate {
    /// `E[s' − s]` given the counter value `s`.
    pub fn expected_increment(&self, config: &CounterConfig, s: f64) -> f64 {
        self.p_up * s * (config.gamma - 1.0) + self.p_down * s * (1.0 / config.gamma - 1.0)
    }

    /// Thresholds are taken in the fixed order up, stay, down.
    pub fn sample(&self, state: CounterState, u: f64) -> CounterState {
        if u < self.p_up {
            CounterState::new(state.k + 1)
        } else if u < self.p_up + self.p_stay || state.k == 0 {
            state
        } else {
            CounterState::new(state.k - 1)
        }
    }
}

/// Jump probabilities for one counter transition.
///
/// `x` is the stage payoff and `v_next` the value `v_{λ(s)}(z_{t+1})` of the
/// successor state at the current rate.
pub fn update_distribution(config: &CounterConfig, state: CounterState, x: f64, v_next: f64) -> Result<MemoryUpdate> {
    update_at_value(config, state.k, state.value(config), x, v_next)
}

#[inline]
fn update_at_value(config: &CounterConfig, k: usize, s: f64, x: f64, v_next: f64) -> Result<MemoryUpdate> {
    let in_range = |v: f64| (-RANGE_SLACK..=1.0 + RANGE_SLACK).contains(&v);
    if !in_range(x) || !in_range(v_next) {
        return Err(Error::InvalidParameter(format!(
            "stage payoff and continuation value must lie in [0, 1], got x = {x}, v = {v_next}"
        )));
    }
    // Adding ε/2 first keeps x = v − ε/2 on the stay boundary in floating point.
    let d = (x + config.epsilon / 2.0) - v_next;
    let (p_up, p_down) = if d > 0.0 {
        (d / (s * (config.gamma - 1.0)), 0.0)
    } else if d < 0.0 && k > 0 {
        (0.0, d / (s * (1.0 / config.gamma - 1.0)))
    } else {
        (0.0, 0.0)
    };
    Ok(MemoryUpdate {
        p_up,
        p_stay: 1.0 - p_up - p_down,
        p_down,
    })
}

/// Draws the next counter state from one uniform in `[0, 1)`.
pub fn sample_update(config: &CounterConfig, state: CounterState, x: f64, v_next: f64, u: f64) -> Result<CounterState> {
    Ok(update_distribution(config, state, x, v_next)?.sample(state, u))
}

/// Player 1's mixed action at counter state `state` in game state `z`.
pub fn select_action(cache: &SolutionCache, state: CounterState, z: usize) -> Result<Vec<f64>> {
    let sol = cache.solution_at_counter(state.k)?;
    sol.strategy1.get(z).cloned().ok_or(Error::UnknownState(z))
}

/// The counter strategy as a player-1 strategy for simulation.
///
/// With a cap the counter never rises above `cap`: an upward jump at the
/// cap becomes a stay. That turns it into a finite-memory strategy.
#[derive(Debug, Clone)]
pub struct CounterStrategy {
    cache: Arc<SolutionCache>,
    cap: Option<usize>,
}

impl CounterStrategy {
    pub fn new(cache: Arc<SolutionCache>) -> Self {
        CounterStrategy { cache, cap: None }
    }

    pub fn capped(cache: Arc<SolutionCache>, cap: usize) -> Self {
        CounterStrategy { cache, cap: Some(cap) }
    }

    pub fn cache(&self) -> &Arc<SolutionCache> {
        &self.cache
    }

    pub fn config(&self) -> &CounterConfig {
        self.cache.config()
    }

    pub fn cap(&self) -> Option<usize> {
        self.cap
    }

    /// Distribution of the next counter index, cap applied.
    pub fn transition_distribution(&self, k: usize, step: &Transition) -> Result<MemoryUpdate> {
        let sol = self.cache.solution_at_counter(k)?;
        let mut upd = update_distribution(self.config(), CounterState::new(k), step.x, sol.values[step.z_next])?;
        if self.cap == Some(k) {
            upd.p_stay += upd.p_up;
            upd.p_up = 0.0;
        }
        Ok(upd)
    }
}

struct Level {
    solution: Arc<DiscountedSolution>,
    s: f64,
}

struct CounterSession<'a> {
    strategy: &'a CounterStrategy,
    levels: Vec<Option<Level>>,
}

impl CounterSession<'_> {
    fn level(&mut self, k: usize) -> Result<&Level> {
        if k >= self.levels.len() {
            self.levels.resize_with(k + 1, || None);
        }
        if self.levels[k].is_none() {
            self.levels[k] = Some(Level {
                solution: self.strategy.cache.solution_at_counter(k)?,
                s: self.strategy.config().counter_value(k),
            });
        }
        Ok(self.levels[k].as_ref().expect("filled above"))
    }
}

impl Player1Session for CounterSession<'_> {
    fn action(&mut self, _t: usize, z: usize, m: usize) -> Result<&[f64]> {
        let level = self.level(m)?;
        level
            .solution
            .strategy1
            .get(z)
            .map(Vec::as_slice)
            .ok_or(Error::UnknownState(z))
    }

    fn next_memory(&mut self, step: &Transition, u: f64) -> Result<usize> {
        let config = *self.strategy.config();
        let cap = self.strategy.cap;
        let level = self.level(step.m)?;
        let v_next = level.solution.values[step.z_next];
        let upd = update_at_value(&config, step.m, level.s, step.x, v_next)?;
        let next = upd.sample(CounterState::new(step.m), u).k;
        Ok(match cap {
            Some(c) if next > c => c,
            _ => next,
        })
    }
}

impl Player1Strategy for CounterStrategy {
    fn session(&self) -> Box<dyn Player1Session + '_> {
        Box::new(CounterSession {
            strategy: self,
            levels: Vec::new(),
        })
    }

    fn memory_thresholds(&self) -> Option<MemoryThresholds> {
        Some(self.config().thresholds())
    }
}

/// Left side, right side, and verdict of one numeric inequality.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Check {
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}

impl Check {
    fn below(lhs: f64, rhs: f64) -> Self {
        Check {
            lhs,
            rhs,
            pass: lhs < rhs,
        }
    }

    fn at_least(lhs: f64, rhs: f64) -> Self {
        Check {
            lhs,
            rhs,
            pass: lhs >= rhs,
        }
    }
}

/// The four largeness conditions on `M`, checked at one grid point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridPoint {
    pub k: usize,
    pub s: f64,
    pub lambda: f64,
    /// `‖v_{λ(s)} − v_{λ(γs)}‖ ≤ (ε²/9)(1/ln s − 1/ln γs)`, up to solver
    /// accuracy. Absent at the last grid point.
    pub variation: Option<Check>,
    /// `min_z v_{λ(s)}(z) − v(z) ≥ −ε/8`
    pub value_gap: Check,
    /// The same with the extra margin `1/ln M` on the right, which the
    /// submartingale start `Y_1 ≥ v(z_1) − ε/8` needs. Informational.
    pub value_gap_with_margin: Check,
    /// `ln γ · ln(γs) / ln s < 2⁻⁵`
    pub log_ratio: Check,
    /// `|λ(s) − λ(s')| < ε λ(s)/8` for the grid neighbours `s' = γ^{±1}s`.
    pub rate_step: Check,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Condition {
    Variation,
    ValueGap,
    LogRatio,
    RateStep,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstantsReport {
    pub config: CounterConfig,
    pub limit: ValueLimitEstimate,
    pub points: Vec<GridPoint>,
}

impl ConstantsReport {
    pub fn all_pass(&self, condition: Condition) -> bool {
        self.points.iter().all(|p| match condition {
            Condition::Variation => p.variation.is_none_or(|c| c.pass),
            Condition::ValueGap => p.value_gap.pass,
            Condition::LogRatio => p.log_ratio.pass,
            Condition::RateStep => p.rate_step.pass,
        })
    }

    /// First grid point failing `condition`.
    pub fn first_failure(&self, condition: Condition) -> Option<&GridPoint> {
        self.points.iter().find(|p| match condition {
            Condition::Variation => p.variation.is_some_and(|c| !c.pass),
            Condition::ValueGap => !p.value_gap.pass,
            Condition::LogRatio => !p.log_ratio.pass,
            Condition::RateStep => !p.rate_step.pass,
        })
    }
}

/// Default schedule for estimating `v` below the grid: the smallest grid
/// rate, then 10× and 100× smaller.
pub fn default_limit_schedule(config: &CounterConfig, grid_depth: usize) -> Vec<f64> {
    let base = config.rate_at(grid_depth);
    vec![base, base / 10.0, base / 100.0]
}

/// Checks whether `M` is large enough for this game on the grid
/// `{γᵏM : 0 ≤ k ≤ grid_depth}`, with `v` estimated on `limit_schedule`.
/// Report only: failures mean "pick a larger M", not an error.
pub fn validate_constants(cache: &SolutionCache, grid_depth: usize, limit_schedule: &[f64]) -> Result<ConstantsReport> {
    if grid_depth < 1 {
        return Err(Error::InvalidParameter("grid depth must be at least 1".into()));
    }
    let config = *cache.config();
    let limit = estimate_value_limit(cache.game(), limit_schedule, cache.options())?;
    let eps = config.epsilon;
    let ln_gamma = config.gamma.ln();
    let solver_slack = 2.0 * cache.options().tol;
    let margin = 1.0 / config.threshold.ln();

    let mut points = Vec::with_capacity(grid_depth + 1);
    for k in 0..=grid_depth {
        let s = config.counter_value(k);
        let lambda = config.rate_at(k);
        let sol = cache.solution_at_counter(k)?;

        let variation = if k < grid_depth {
            let next = cache.solution_at_counter(k + 1)?;
            let s_next = config.counter_value(k + 1);
            let gap = sup_distance(&sol.values, &next.values);
            let allowance = eps * eps / 9.0 * (1.0 / s.ln() - 1.0 / s_next.ln());
            Some(Check {
                lhs: gap,
                rhs: allowance,
                pass: gap <= allowance + solver_slack,
            })
        } else {
            None
        };

        let gap = sol
            .values
            .iter()
            .zip(&limit.values)
            .map(|(a, b)| a - b)
            .fold(f64::INFINITY, f64::min);

        let up = (lambda - config.lambda_map.rate(config.gamma * s)?).abs();
        let down = if k > 0 {
            (lambda - config.rate_at(k - 1)).abs()
        } else {
            0.0
        };

        points.push(GridPoint {
            k,
            s,
            lambda,
            variation,
            value_gap: Check::at_least(gap, -eps / 8.0),
            value_gap_with_margin: Check::at_least(gap, -eps / 8.0 + margin),
            log_ratio: Check::below(ln_gamma * (config.gamma * s).ln() / s.ln(), 1.0 / 32.0),
            rate_step: Check::below(up.max(down), eps * lambda / 8.0),
        });
    }
    Ok(ConstantsReport { config, limit, points })
}

/// Convenience wrapper using [`default_limit_schedule`].
pub fn validate_constants_default(cache: &SolutionCache, grid_depth: usize) -> Result<ConstantsReport> {
    validate_constants(cache, grid_depth, &default_limit_schedule(cache.config(), grid_depth))
}

fn sup_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// A shared cache of the discounted solutions at the counter levels.
pub fn counter_cache(
    game: crate::game::NormalizedGame,
    config: CounterConfig,
    opts: SolveOptions,
) -> Arc<SolutionCache> {
    Arc::new(SolutionCache::new(game, config, opts))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{big_match, big_match_ids::*, normalize_payoffs};
    use std::f64::consts::E;

    fn big_match_cache(eps: f64, m: f64) -> Arc<SolutionCache> {
        counter_cache(
            normalize_payoffs(&big_match()),
            make_config(eps, m).unwrap(),
            SolveOptions::default(),
        )
    }

    #[test]
    fn lambda_values() {
        assert!((lambda_of(E).unwrap() - 1.0 / E).abs() < 1e-15);
        // 1/(4e²)
        assert!((lambda_of(E * E).unwrap() - 0.033_833_820_809_153_18).abs() < 1e-12);
        // 1/(100 · ln²100)
        assert!((lambda_of(100.0).unwrap() - 4.715_292_425_290_347e-4).abs() < 1e-15);
        assert!(lambda_of(1.0).is_err());
        assert!(lambda_of(0.5).is_err());
    }

    #[test]
    fn config_values() {
        let c = make_config(0.2, 100.0).unwrap();
        assert!((c.gamma - (1.0 + 0.2 / 9.0)).abs() < 1e-15);
        assert!((c.k_eps - 181.992_67).abs() < 1e-4);
        assert!((c.n_eps - 3.8174e6).abs() < 1e3);

        match make_config(0.2, 10.0) {
            Err(Error::InfeasibleThreshold { min_threshold, .. }) => {
                assert!((min_threshold - 51.75).abs() < 1e-9);
            }
            other => panic!("unexpected {other:?}"),
        }
        let c = make_config(0.1, 200.0).unwrap();
        assert!((c.gamma - 1.011_111_111_111_111).abs() < 1e-15);
        assert!(make_config(0.25, 100.0).is_err());
        assert!(make_config(0.1, 2.0).is_err());
        assert!(c.with_k_eps(1.0).is_err());
        assert!(c.with_k_eps(1000.0).is_ok());
    }

    #[test]
    fn update_examples() {
        let c = make_config(0.2, 100.0).unwrap();
        let u = update_distribution(&c, CounterState::new(0), 1.0, 0.5).unwrap();
        assert!((u.p_up - 0.27).abs() < 1e-12);
        assert_eq!(u.p_down, 0.0);

        let u = update_distribution(&c, CounterState::new(0), 0.5 - 0.1, 0.5).unwrap();
        assert_eq!((u.p_up, u.p_stay, u.p_down), (0.0, 1.0, 0.0));

        let s3 = c.gamma.powi(3) * 100.0;
        let u = update_distribution(&c, CounterState::new(3), 0.0, 0.5).unwrap();
        assert_eq!(u.p_up, 0.0);
        assert!((u.p_down - 0.4 * c.gamma / (s3 * (c.gamma - 1.0))).abs() < 1e-15);

        // Down moves are blocked at the floor.
        let u = update_distribution(&c, CounterState::new(0), 0.0, 0.5).unwrap();
        assert_eq!((u.p_up, u.p_stay, u.p_down), (0.0, 1.0, 0.0));

        assert!(update_distribution(&c, CounterState::new(0), 1.5, 0.5).is_err());
        assert!(update_distribution(&c, CounterState::new(0), 0.5, -0.1).is_err());
    }

    #[test]
    fn threshold_mapping() {
        let c = make_config(0.2, 100.0).unwrap();
        let s = CounterState::new(0);
        assert_eq!(sample_update(&c, s, 1.0, 0.5, 0.1).unwrap().k, 1);
        assert_eq!(sample_update(&c, s, 1.0, 0.5, 0.9).unwrap().k, 0);
        let s = CounterState::new(2);
        assert_eq!(sample_update(&c, s, 0.0, 0.5, 0.999_999).unwrap().k, 1);
        assert_eq!(sample_update(&c, s, 0.0, 0.5, 0.5).unwrap().k, 2);
    }

    #[test]
    fn action_selection_uses_the_discounted_optimum() {
        let cache = big_match_cache(0.2, 100.0);
        let a = select_action(&cache, CounterState::new(0), LIVE).unwrap();
        let lambda = cache.config().rate_at(0);
        assert!(a[ABSORB] > 0.0 && a[CONTINUE] > 0.0);
        assert!((a[ABSORB] - lambda / (1.0 + lambda)).abs() < 1e-12);
        let b = select_action(&cache, CounterState::new(0), LIVE).unwrap();
        assert_eq!(a, b);
        let absorbed = select_action(&cache, CounterState::new(0), ABS1).unwrap();
        assert!((absorbed.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(absorbed.iter().all(|&p| p >= 0.0));
        assert!(matches!(
            select_action(&cache, CounterState::new(0), 9),
            Err(Error::UnknownState(9))
        ));
    }

    #[test]
    fn log_ratio_at_one_hundred() {
        let c = make_config(0.2, 100.0).unwrap();
        let r = c.gamma.ln() * (c.gamma * 100.0).ln() / 100f64.ln();
        assert!((r - 0.022_084).abs() < 1e-5);
        assert!(r < 1.0 / 32.0);
    }

    #[test]
    fn constants_report_for_big_match() {
        let cache = big_match_cache(0.2, 100.0);
        let report = validate_constants_default(&cache, 40).unwrap();
        assert_eq!(report.points.len(), 41);
        assert!(report.all_pass(Condition::Variation));
        assert!(report.all_pass(Condition::ValueGap));
        assert!(report.all_pass(Condition::LogRatio));
        // λ(γs)/λ(s) = γ⁻¹ (ln s / ln γs)² is about 0.969 at s = 100, a relative
        // step of 3.1% against the allowed ε/8 = 2.5%; the condition needs
        // ln s ≳ 13 before it holds.
        assert!(!report.all_pass(Condition::RateStep));
        let first = report.first_failure(Condition::RateStep).unwrap();
        assert_eq!(first.k, 0);
        assert!((first.rate_step.lhs / first.lambda - 0.0310).abs() < 5e-4);
    }

    #[test]
    fn rate_step_holds_for_large_counter_values() {
        let c = make_config(0.2, 1e6).unwrap();
        for k in 0..50 {
            let (a, b) = (c.rate_at(k), c.rate_at(k + 1));
            assert!((a - b).abs() < c.epsilon * a / 8.0);
        }
        let c = make_config(0.2, 1e5).unwrap();
        assert!((c.rate_at(0) - c.rate_at(1)).abs() >= c.epsilon * c.rate_at(0) / 8.0);
    }

    #[test]
    fn grid_depth_zero_is_rejected() {
        let cache = big_match_cache(0.2, 100.0);
        assert!(validate_constants_default(&cache, 0).is_err());
    }

    #[test]
    fn capped_counter_stays_at_cap() {
        let cache = big_match_cache(0.2, 100.0);
        let strat = CounterStrategy::capped(cache, 2);
        let step = Transition {
            t: 1,
            z: LIVE,
            m: 2,
            i: CONTINUE,
            j: 0,
            x: 1.0,
            z_next: LIVE,
        };
        let upd = strat.transition_distribution(2, &step).unwrap();
        assert_eq!(upd.p_up, 0.0);
        let mut session = strat.session();
        assert_eq!(session.next_memory(&step, 0.0).unwrap(), 2);
    }
}
