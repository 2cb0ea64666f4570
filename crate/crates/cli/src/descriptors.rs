//! Text descriptors for games, player-1 strategies and adversaries.

use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use stochmem::adversary::{
    best_response_public, MarkovAdversary, MixedAdversary, PublicMemoryStrategyTable, StationaryAdversary,
};
use stochmem::counter::{counter_cache, make_config, CounterStrategy};
use stochmem::discounted::{solve_discounted, SolutionCache, SolveOptions};
use stochmem::game::{big_match, normalize_payoffs, GameSpec, NormalizedGame};
use stochmem::strategy::{Adversary, Player1Strategy};

pub const DEFAULT_BR_CAP: usize = 40;

/// `big-match` or a path to a JSON game file.
pub fn load_game(source: &str) -> Result<NormalizedGame> {
    let spec = if source == "big-match" {
        big_match()
    } else {
        GameSpec::load(source)?
    };
    Ok(normalize_payoffs(&spec))
}

#[derive(Debug, Clone, PartialEq)]
pub enum StrategySpec {
    /// The counter strategy, unbounded.
    Counter,
    /// The counter strategy held at or below a cap.
    CounterCap(usize),
    /// The optimal stationary strategy of the λ-discounted game.
    OptimalStationary(f64),
    /// A fixed pure action in every state.
    Always(usize),
    /// A public-memory strategy table from a JSON file.
    Table(PathBuf),
}

impl FromStr for StrategySpec {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        let (head, arg) = s.split_once(':').map_or((s, None), |(h, a)| (h, Some(a)));
        let parse_arg = |what: &str| arg.ok_or_else(|| anyhow!("strategy `{head}` needs `:{what}`"));
        Ok(match head {
            "counter" if arg.is_none() => StrategySpec::Counter,
            "counter-cap" => StrategySpec::CounterCap(parse_arg("<cap>")?.parse().context("bad counter cap")?),
            "optimal-stationary" => {
                StrategySpec::OptimalStationary(parse_arg("<lambda>")?.parse().context("bad discount rate")?)
            }
            "always" => StrategySpec::Always(parse_arg("<action>")?.parse().context("bad action index")?),
            "table" => StrategySpec::Table(PathBuf::from(parse_arg("<path>")?)),
            _ => bail!(
                "unknown strategy `{s}`; expected counter, counter-cap:<n>, optimal-stationary:<lambda>, always:<i> or table:<path>"
            ),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum AdversarySpec {
    Always(usize),
    Uniform,
    /// The same mixed action in every state.
    Stationary(Vec<f64>),
    Alternating,
    /// Exact best response over the run horizon; counters are capped first.
    BestResponse(Option<usize>),
    /// A uniform mixture of pure policies from a JSON file.
    Mixture(PathBuf),
}

impl FromStr for AdversarySpec {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        if let Some(j) = s.strip_prefix("always-") {
            return Ok(AdversarySpec::Always(j.parse().context("bad action index")?));
        }
        let (head, arg) = s.split_once(':').map_or((s, None), |(h, a)| (h, Some(a)));
        Ok(match (head, arg) {
            ("uniform", None) => AdversarySpec::Uniform,
            ("alternating", None) => AdversarySpec::Alternating,
            ("stationary", Some(a)) => AdversarySpec::Stationary(
                a.split(',')
                    .map(|p| p.trim().parse::<f64>())
                    .collect::<Result<_, _>>()
                    .context("bad probability list")?,
            ),
            ("best-response", None) => AdversarySpec::BestResponse(None),
            ("best-response", Some(c)) => AdversarySpec::BestResponse(Some(c.parse().context("bad cap")?)),
            ("mixture", Some(p)) => AdversarySpec::Mixture(PathBuf::from(p)),
            _ => bail!(
                "unknown adversary `{s}`; expected always-<j>, uniform, stationary:<p,...>, alternating, best-response[:<cap>] or mixture:<path>"
            ),
        })
    }
}

/// Counter parameters shared by the commands.
#[derive(Debug, Clone, Copy)]
pub struct CounterParams {
    pub epsilon: f64,
    pub threshold: f64,
    pub k_eps: Option<f64>,
    pub tol: f64,
}

impl CounterParams {
    pub fn cache(&self, game: &NormalizedGame) -> stochmem::Result<Arc<SolutionCache>> {
        let mut config = make_config(self.epsilon, self.threshold)?;
        if let Some(k) = self.k_eps {
            config = config.with_k_eps(k)?;
        }
        Ok(counter_cache(game.clone(), config, self.solve_options()))
    }

    pub fn solve_options(&self) -> SolveOptions {
        SolveOptions {
            tol: self.tol,
            ..SolveOptions::default()
        }
    }
}

/// A player-1 strategy ready for simulation.
pub enum BuiltStrategy {
    Counter(CounterStrategy),
    Table(PublicMemoryStrategyTable),
}

impl BuiltStrategy {
    pub fn as_dyn(&self) -> &dyn Player1Strategy {
        match self {
            BuiltStrategy::Counter(c) => c,
            BuiltStrategy::Table(t) => t,
        }
    }

    /// The counter's cache, for counter strategies.
    pub fn cache(&self) -> Option<&Arc<SolutionCache>> {
        match self {
            BuiltStrategy::Counter(c) => Some(c.cache()),
            BuiltStrategy::Table(_) => None,
        }
    }

    /// The strategy as a finite public-memory table over `horizon` stages;
    /// unbounded counters are capped at `cap`.
    pub fn as_table(&self, cap: usize, horizon: usize) -> Result<PublicMemoryStrategyTable> {
        Ok(match self {
            BuiltStrategy::Counter(c) => {
                PublicMemoryStrategyTable::from_counter(c.cache(), c.cap().unwrap_or(cap), horizon)?
            }
            BuiltStrategy::Table(t) => t.clone(),
        })
    }
}

pub fn build_strategy(
    spec: &StrategySpec,
    game: &NormalizedGame,
    params: &CounterParams,
    horizon: usize,
) -> Result<BuiltStrategy> {
    let g = &game.game;
    Ok(match spec {
        StrategySpec::Counter => BuiltStrategy::Counter(CounterStrategy::new(params.cache(game)?)),
        StrategySpec::CounterCap(cap) => BuiltStrategy::Counter(CounterStrategy::capped(params.cache(game)?, *cap)),
        StrategySpec::OptimalStationary(lambda) => {
            let sol = solve_discounted(game, *lambda, &params.solve_options())?;
            BuiltStrategy::Table(PublicMemoryStrategyTable::stationary(
                horizon,
                g.n_actions2(),
                &sol.strategy1,
            )?)
        }
        StrategySpec::Always(i) => BuiltStrategy::Table(PublicMemoryStrategyTable::always(horizon, g.dims(), *i)?),
        StrategySpec::Table(path) => {
            let table = PublicMemoryStrategyTable::load(path)?;
            table.check_game(g)?;
            BuiltStrategy::Table(table)
        }
    })
}

pub fn build_adversary(
    spec: &AdversarySpec,
    game: &NormalizedGame,
    strategy: &BuiltStrategy,
    horizon: usize,
) -> Result<Box<dyn Adversary>> {
    let (nz, _, nj) = game.game.dims();
    Ok(match spec {
        AdversarySpec::Always(j) => Box::new(StationaryAdversary::pure(nz, nj, *j)?),
        AdversarySpec::Uniform => Box::new(StationaryAdversary::uniform(nz, nj)?),
        AdversarySpec::Stationary(p) => Box::new(StationaryAdversary::constant(nz, p.clone())?),
        AdversarySpec::Alternating => Box::new(MarkovAdversary::alternating(nz, nj)?),
        AdversarySpec::BestResponse(cap) => {
            let table = strategy.as_table(cap.unwrap_or(DEFAULT_BR_CAP), horizon)?;
            Box::new(best_response_public(game, &table, horizon)?.policy)
        }
        AdversarySpec::Mixture(path) => Box::new(MixedAdversary::load(path)?),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strategy_descriptors() {
        assert_eq!("counter".parse::<StrategySpec>().unwrap(), StrategySpec::Counter);
        assert_eq!(
            "counter-cap:8".parse::<StrategySpec>().unwrap(),
            StrategySpec::CounterCap(8)
        );
        assert_eq!(
            "optimal-stationary:0.01".parse::<StrategySpec>().unwrap(),
            StrategySpec::OptimalStationary(0.01)
        );
        assert_eq!("always:1".parse::<StrategySpec>().unwrap(), StrategySpec::Always(1));
        assert!("counter:3".parse::<StrategySpec>().is_err());
        assert!("always".parse::<StrategySpec>().is_err());
        assert!("nope".parse::<StrategySpec>().is_err());
    }

    #[test]
    fn adversary_descriptors() {
        assert_eq!("always-0".parse::<AdversarySpec>().unwrap(), AdversarySpec::Always(0));
        assert_eq!("uniform".parse::<AdversarySpec>().unwrap(), AdversarySpec::Uniform);
        assert_eq!(
            "stationary:0.25,0.75".parse::<AdversarySpec>().unwrap(),
            AdversarySpec::Stationary(vec![0.25, 0.75])
        );
        assert_eq!(
            "best-response".parse::<AdversarySpec>().unwrap(),
            AdversarySpec::BestResponse(None)
        );
        assert_eq!(
            "best-response:12".parse::<AdversarySpec>().unwrap(),
            AdversarySpec::BestResponse(Some(12))
        );
        assert!("always-x".parse::<AdversarySpec>().is_err());
        assert!("uniform:3".parse::<AdversarySpec>().is_err());
    }
}
