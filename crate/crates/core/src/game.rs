//! Finite zero-sum stochastic games.
//!
//! A game has a finite state set, one global action set per player, a stage
//! payoff `r(z, i, j)` paid by player 2 to player 1, and a transition kernel
//! `p(· | z, i, j)`. Games are validated once and immutable afterwards.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Violation};

/// Tolerance on transition row sums. Rows within it are renormalized.
pub const PROB_TOL: f64 = 1e-12;

/// Game description as it appears in a JSON game file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawGame {
    pub states: Vec<String>,
    pub actions1: Vec<String>,
    pub actions2: Vec<String>,
    /// `payoff[z][i][j]`
    pub payoff: Vec<Vec<Vec<f64>>>,
    /// `transition[z][i][j][z']`
    pub transition: Vec<Vec<Vec<Vec<f64>>>>,
    pub initial_state: String,
}

impl RawGame {
    /// Parses a JSON game description. Syntax and schema errors carry the
    /// line and column reported by the parser.
    pub fn from_json_str(text: &str, source_name: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse {
            source_name: source_name.to_string(),
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GameSpec {
    state_names: Vec<String>,
    action1_names: Vec<String>,
    action2_names: Vec<String>,
    payoff: Vec<f64>,
    transition: Vec<f64>,
    support: Vec<Vec<(usize, f64)>>,
    absorbing: Vec<bool>,
    initial_state: usize,
}

/// Validates a raw description, collecting every violated invariant.
pub fn validate_game(raw: &RawGame) -> Result<GameSpec> {
    let mut violations = Vec::new();
    let (nz, ni, nj) = (raw.states.len(), raw.actions1.len(), raw.actions2.len());
    if nz == 0 {
        violations.push(Violation::EmptyStates);
    }
    if ni == 0 {
        violations.push(Violation::EmptyActions1);
    }
    if nj == 0 {
        violations.push(Violation::EmptyActions2);
    }
    let initial_state = raw.states.iter().position(|s| *s == raw.initial_state);
    if initial_state.is_none() {
        violations.push(Violation::UnknownInitialState(raw.initial_state.clone()));
    }
    if nz == 0 || ni == 0 || nj == 0 {
        return Err(Error::InvalidGame(violations));
    }

    let before_shape = violations.len();
    if raw.payoff.len() != nz {
        violations.push(Violation::Shape(format!(
            "payoff has {} state entries, expected {nz}",
            raw.payoff.len()
        )));
    }
    if raw.transition.len() != nz {
        violations.push(Violation::Shape(format!(
            "transition has {} state entries, expected {nz}",
            raw.transition.len()
        )));
    }
    if violations.len() > before_shape {
        return Err(Error::InvalidGame(violations));
    }

    let mut payoff = vec![0.0; nz * ni * nj];
    let mut transition = vec![0.0; nz * ni * nj * nz];
    for z in 0..nz {
        if raw.payoff[z].len() != ni || raw.transition[z].len() != ni {
            violations.push(Violation::Shape(format!(
                "state {z} must have {ni} player-1 action entries in payoff and transition"
            )));
            continue;
        }
        for i in 0..ni {
            if raw.payoff[z][i].len() != nj || raw.transition[z][i].len() != nj {
                violations.push(Violation::Shape(format!(
                    "(state {z}, action1 {i}) must have {nj} player-2 action entries"
                )));
                continue;
            }
            for j in 0..nj {
                let idx = (z * ni + i) * nj + j;
                let r = raw.payoff[z][i][j];
                if !r.is_finite() {
                    violations.push(Violation::NonFinitePayoff { z, i, j });
                }
                payoff[idx] = r;

                let row = &raw.transition[z][i][j];
                if row.len() != nz {
                    violations.push(Violation::Shape(format!(
                        "transition row (state {z}, action1 {i}, action2 {j}) has {} entries, expected {nz}",
                        row.len()
                    )));
                    continue;
                }
                let mut row_ok = true;
                for (next, &p) in row.iter().enumerate() {
                    if p < 0.0 {
                        violations.push(Violation::NegativeProbability { z, i, j, next, p });
                        row_ok = false;
                    }
                }
                let sum: f64 = row.iter().sum();
                if !((sum - 1.0).abs() <= PROB_TOL) {
                    violations.push(Violation::RowSum { z, i, j, sum });
                    row_ok = false;
                }
                if row_ok {
                    for (next, &p) in row.iter().enumerate() {
                        transition[idx * nz + next] = p / sum;
                    }
                }
            }
        }
    }
    if !violations.is_empty() {
        return Err(Error::InvalidGame(violations));
    }

    Ok(GameSpec::assemble(
        raw.states.clone(),
        raw.actions1.clone(),
        raw.actions2.clone(),
        payoff,
        transition,
        initial_state.expect("checked above"),
    ))
}

impl GameSpec {
    fn assemble(
        state_names: Vec<String>,
        action1_names: Vec<String>,
        action2_names: Vec<String>,
        payoff: Vec<f64>,
        transition: Vec<f64>,
        initial_state: usize,
    ) -> Self {
        let nz = state_names.len();
        let support: Vec<Vec<(usize, f64)>> = transition
            .chunks(nz)
            .map(|row| {
                row.iter()
                    .enumerate()
                    .filter(|(_, &p)| p > 0.0)
                    .map(|(z, &p)| (z, p))
                    .collect()
            })
            .collect();
        let per_state = action1_names.len() * action2_names.len();
        let absorbing = (0..nz)
            .map(|z| {
                transition.chunks(nz).skip(z * per_state).take(per_state).all(|row| {
                    row.iter().enumerate().all(|(next, &p)| {
                        let target = if next == z { 1.0 } else { 0.0 };
                        (p - target).abs() <= PROB_TOL
                    })
                })
            })
            .collect();
        GameSpec {
            state_names,
            action1_names,
            action2_names,
            payoff,
            transition,
            support,
            absorbing,
            initial_state,
        }
    }

    /// Reads and validates a JSON game file.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        validate_game(&RawGame::from_json_str(&text, &path.display().to_string())?)
    }

    pub fn to_raw(&self) -> RawGame {
        let (nz, ni, nj) = self.dims();
        RawGame {
            states: self.state_names.clone(),
            actions1: self.action1_names.clone(),
            actions2: self.action2_names.clone(),
            payoff: (0..nz)
                .map(|z| {
                    (0..ni)
                        .map(|i| (0..nj).map(|j| self.payoff(z, i, j)).collect())
                        .collect()
                })
                .collect(),
            transition: (0..nz)
                .map(|z| {
                    (0..ni)
                        .map(|i| (0..nj).map(|j| self.transition_row(z, i, j).to_vec()).collect())
                        .collect()
                })
                .collect(),
            initial_state: self.state_names[self.initial_state].clone(),
        }
    }

    /// `(|Z|, |I|, |J|)`
    pub fn dims(&self) -> (usize, usize, usize) {
        (
            self.state_names.len(),
            self.action1_names.len(),
            self.action2_names.len(),
        )
    }

    pub fn n_states(&self) -> usize {
        self.state_names.len()
    }

    pub fn n_actions1(&self) -> usize {
        self.action1_names.len()
    }

    pub fn n_actions2(&self) -> usize {
        self.action2_names.len()
    }

    pub fn state_names(&self) -> &[String] {
        &self.state_names
    }

    pub fn action1_names(&self) -> &[String] {
        &self.action1_names
    }

    pub fn action2_names(&self) -> &[String] {
        &self.action2_names
    }

    pub fn state_index(&self, name: &str) -> Option<usize> {
        self.state_names.iter().position(|s| s == name)
    }

    pub fn initial_state(&self) -> usize {
        self.initial_state
    }

    #[inline]
    fn cell(&self, z: usize, i: usize, j: usize) -> usize {
        (z * self.action1_names.len() + i) * self.action2_names.len() + j
    }

    #[inline]
    pub fn payoff(&self, z: usize, i: usize, j: usize) -> f64 {
        self.payoff[self.cell(z, i, j)]
    }

    pub fn transition_row(&self, z: usize, i: usize, j: usize) -> &[f64] {
        let nz = self.n_states();
        let c = self.cell(z, i, j);
        &self.transition[c * nz..(c + 1) * nz]
    }

    /// Successor states with positive probability, in state order.
    #[inline]
    pub fn support(&self, z: usize, i: usize, j: usize) -> &[(usize, f64)] {
        &self.support[self.cell(z, i, j)]
    }

    /// Maps a uniform draw in `[0, 1)` to a successor state by walking the
    /// cumulative distribution in state order.
    #[inline]
    pub fn sample_next(&self, z: usize, i: usize, j: usize, u: f64) -> usize {
        let support = self.support(z, i, j);
        let mut acc = 0.0;
        for &(next, p) in support {
            acc += p;
            if u < acc {
                return next;
            }
        }
        support.last().map(|&(next, _)| next).unwrap_or(z)
    }

    /// True iff every transition row at `z` is the point mass on `z`.
    pub fn is_absorbing(&self, z: usize) -> Result<bool> {
        self.absorbing.get(z).copied().ok_or(Error::UnknownState(z))
    }

    pub fn payoff_range(&self) -> (f64, f64) {
        self.payoff
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &r| {
                (lo.min(r), hi.max(r))
            })
    }

    fn map_payoffs(&self, f: impl Fn(f64) -> f64) -> GameSpec {
        GameSpec {
            payoff: self.payoff.iter().map(|&r| f(r)).collect(),
            ..self.clone()
        }
    }
}

/// The Big Match: one live state and two absorbing states.
///
/// Player 1 plays `A` (absorb) or `C` (continue); player 2 plays `0` or `1`.
/// In the live state `r(C,0) = 1` and `r(C,1) = 0` with a self-loop, while
/// `(A,0)` absorbs with payoff 0 forever and `(A,1)` with payoff 1 forever.
pub fn big_match() -> GameSpec {
    let names = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    let raw = RawGame {
        states: names(&["live", "abs0", "abs1"]),
        actions1: names(&["A", "C"]),
        actions2: names(&["0", "1"]),
        payoff: vec![
            vec![vec![0.0, 1.0], vec![1.0, 0.0]],
            vec![vec![0.0, 0.0], vec![0.0, 0.0]],
            vec![vec![1.0, 1.0], vec![1.0, 1.0]],
        ],
        transition: vec![
            vec![
                vec![vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]],
                vec![vec![1.0, 0.0, 0.0], vec![1.0, 0.0, 0.0]],
            ],
            vec![vec![vec![0.0, 1.0, 0.0]; 2]; 2],
            vec![vec![vec![0.0, 0.0, 1.0]; 2]; 2],
        ],
        initial_state: "live".to_string(),
    };
    validate_game(&raw).expect("the Big Match table is valid")
}

/// Index constants for [`big_match`].
pub mod big_match_ids {
    pub const LIVE: usize = 0;
    pub const ABS0: usize = 1;
    pub const ABS1: usize = 2;
    pub const ABSORB: usize = 0;
    pub const CONTINUE: usize = 1;
}

/// `r_norm = scale * r + offset`
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineMap {
    pub scale: f64,
    pub offset: f64,
}

impl AffineMap {
    pub const IDENTITY: AffineMap = AffineMap {
        scale: 1.0,
        offset: 0.0,
    };

    pub fn apply(&self, r: f64) -> f64 {
        self.scale * r + self.offset
    }

    pub fn invert(&self, r_norm: f64) -> f64 {
        (r_norm - self.offset) / self.scale
    }
}

/// A game whose payoffs lie in `[0, 1]`, with the map that put them there.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedGame {
    pub game: GameSpec,
    pub map: AffineMap,
}

/// Maps payoffs affinely into `[0, 1]`.
///
/// A constant payoff `c` becomes the constant 1/2 (scale 1). Otherwise
/// payoffs already inside `[0, 1]` are left alone and any other range is
/// stretched onto `[0, 1]` exactly.
pub fn normalize_payoffs(game: &GameSpec) -> NormalizedGame {
    let (lo, hi) = game.payoff_range();
    let map = if lo == hi {
        AffineMap {
            scale: 1.0,
            offset: 0.5 - lo,
        }
    } else if lo >= 0.0 && hi <= 1.0 {
        AffineMap::IDENTITY
    } else {
        let scale = 1.0 / (hi - lo);
        AffineMap {
            scale,
            offset: -lo * scale,
        }
    };
    let normalized = if map == AffineMap::IDENTITY {
        game.clone()
    } else {
        game.map_payoffs(|r| map.apply(r).clamp(0.0, 1.0))
    };
    NormalizedGame { game: normalized, map }
}

impl NormalizedGame {
    /// Recovers the original payoff table.
    pub fn denormalize(&self) -> GameSpec {
        self.game.map_payoffs(|r| self.map.invert(r))
    }

    /// Converts a normalized value (or average payoff) back to original units.
    pub fn denormalize_value(&self, v: f64) -> f64 {
        self.map.invert(v)
    }
}

/// A finite play `z_1, (i_1, j_1), z_2, …, (i_n, j_n), z_{n+1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlayHistory {
    stages: Vec<(usize, usize, usize)>,
    terminal: usize,
}

impl PlayHistory {
    /// Checks every step against the transition support.
    pub fn new(game: &GameSpec, stages: Vec<(usize, usize, usize)>, terminal: usize) -> Result<Self> {
        let (nz, ni, nj) = game.dims();
        let next_states = stages
            .iter()
            .skip(1)
            .map(|&(z, _, _)| z)
            .chain(std::iter::once(terminal));
        for (t, (&(z, i, j), next)) in stages.iter().zip(next_states).enumerate() {
            if z >= nz || next >= nz {
                return Err(Error::UnknownState(z.max(next)));
            }
            if i >= ni || j >= nj {
                return Err(Error::Dimension(format!(
                    "stage {} uses action pair ({i}, {j}) outside {ni}x{nj}",
                    t + 1
                )));
            }
            if game.transition_row(z, i, j)[next] <= 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "stage {}: transition {z} -> {next} under ({i}, {j}) has probability 0",
                    t + 1
                )));
            }
        }
        Ok(PlayHistory { stages, terminal })
    }

    pub fn stages(&self) -> &[(usize, usize, usize)] {
        &self.stages
    }

    pub fn terminal(&self) -> usize {
        self.terminal
    }

    /// `r̄_n`, the average stage payoff over the recorded stages.
    pub fn average_payoff(&self, game: &GameSpec) -> f64 {
        if self.stages.is_empty() {
            return 0.0;
        }
        let total: f64 = self.stages.iter().map(|&(z, i, j)| game.payoff(z, i, j)).sum();
        total / self.stages.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::big_match_ids::*;
    use super::*;

    fn single_state(payoff: f64) -> RawGame {
        RawGame {
            states: vec!["s".into()],
            actions1: vec!["a".into()],
            actions2: vec!["b".into()],
            payoff: vec![vec![vec![payoff]]],
            transition: vec![vec![vec![vec![1.0]]]],
            initial_state: "s".into(),
        }
    }

    #[test]
    fn big_match_is_valid_with_three_states() {
        let g = big_match();
        assert_eq!(g.dims(), (3, 2, 2));
        assert!(validate_game(&g.to_raw()).is_ok());
        assert_eq!(g.payoff(LIVE, CONTINUE, 0), 1.0);
        assert_eq!(g.payoff(LIVE, CONTINUE, 1), 0.0);
        assert_eq!(g.sample_next(LIVE, ABSORB, 0, 0.3), ABS0);
        assert_eq!(g.sample_next(LIVE, ABSORB, 1, 0.3), ABS1);
    }

    #[test]
    fn absorbing_states() {
        let g = big_match();
        assert!(!g.is_absorbing(LIVE).unwrap());
        assert!(g.is_absorbing(ABS0).unwrap());
        assert!(g.is_absorbing(ABS1).unwrap());
        assert!(matches!(g.is_absorbing(7), Err(Error::UnknownState(7))));
        let single = validate_game(&single_state(0.0)).unwrap();
        assert!(single.is_absorbing(0).unwrap());
    }

    #[test]
    fn row_sum_violation_names_the_row() {
        let mut raw = big_match().to_raw();
        raw.transition[0][1][0] = vec![0.9, 0.0, 0.0];
        let err = validate_game(&raw).unwrap_err();
        match err {
            Error::InvalidGame(v) => {
                assert_eq!(v.len(), 1);
                assert!(matches!(v[0], Violation::RowSum { z: 0, i: 1, j: 0, .. }));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn every_violation_is_reported() {
        let mut raw = big_match().to_raw();
        raw.transition[0][1][0] = vec![1.2, -0.2, 0.0];
        raw.transition[1][0][0] = vec![0.0, 0.5, 0.0];
        raw.payoff[2][0][1] = f64::NAN;
        let Error::InvalidGame(v) = validate_game(&raw).unwrap_err() else {
            panic!("expected InvalidGame");
        };
        assert!(v.iter().any(|x| matches!(
            x,
            Violation::NegativeProbability {
                z: 0,
                i: 1,
                j: 0,
                next: 1,
                ..
            }
        )));
        assert!(v
            .iter()
            .any(|x| matches!(x, Violation::RowSum { z: 1, i: 0, j: 0, .. })));
        assert!(v
            .iter()
            .any(|x| matches!(x, Violation::NonFinitePayoff { z: 2, i: 0, j: 1 })));
    }

    #[test]
    fn empty_sets_are_rejected() {
        let mut raw = single_state(0.0);
        raw.actions2.clear();
        assert!(matches!(
            validate_game(&raw),
            Err(Error::InvalidGame(v)) if v == vec![Violation::EmptyActions2]
        ));
    }

    #[test]
    fn tiny_row_deviation_is_renormalized() {
        let mut raw = single_state(0.0);
        raw.transition[0][0][0] = vec![1.0 - 5e-13];
        let g = validate_game(&raw).unwrap();
        assert_eq!(g.transition_row(0, 0, 0), &[1.0]);
    }

    #[test]
    fn degenerate_single_state_game_is_valid() {
        let g = validate_game(&single_state(0.0)).unwrap();
        assert_eq!(g.dims(), (1, 1, 1));
    }

    #[test]
    fn normalization_cases() {
        let mut raw = big_match().to_raw();
        raw.payoff[0] = vec![vec![-1.0, 1.0], vec![1.0, -1.0]];
        raw.payoff[1] = vec![vec![-1.0; 2]; 2];
        let g = validate_game(&raw).unwrap();
        let n = normalize_payoffs(&g);
        assert_eq!(
            n.map,
            AffineMap {
                scale: 0.5,
                offset: 0.5
            }
        );
        assert_eq!(n.game.payoff(0, 0, 0), 0.0);
        assert_eq!(n.game.payoff(0, 0, 1), 1.0);

        let bm = normalize_payoffs(&big_match());
        assert_eq!(bm.map, AffineMap::IDENTITY);
        assert_eq!(bm.game, big_match());

        let c = normalize_payoffs(&validate_game(&single_state(7.0)).unwrap());
        assert_eq!(
            c.map,
            AffineMap {
                scale: 1.0,
                offset: -6.5
            }
        );
        assert_eq!(c.game.payoff(0, 0, 0), 0.5);
        assert_eq!(c.denormalize().payoff(0, 0, 0), 7.0);
    }

    #[test]
    fn json_parse_errors_are_line_precise() {
        let text = "{\n  \"states\": [\"a\"],\n  \"actions1\": [\"x\"],\n  \"actions2\": [\"y\"],\n  \"payoff\": [[[0.0]]],\n  \"transition\": [[[[1.0]]]] oops\n}";
        match RawGame::from_json_str(text, "g.json") {
            Err(Error::Parse { line, source_name, .. }) => {
                assert_eq!(line, 6);
                assert_eq!(source_name, "g.json");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn play_history_respects_support() {
        let g = big_match();
        let ok = PlayHistory::new(&g, vec![(LIVE, CONTINUE, 0), (LIVE, ABSORB, 1)], ABS1).unwrap();
        assert_eq!(ok.average_payoff(&g), 1.0);
        assert!(PlayHistory::new(&g, vec![(LIVE, CONTINUE, 0)], ABS0).is_err());
    }
}
