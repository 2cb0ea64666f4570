//! Player 2 strategies: stationary and Markov baselines, pure policies over
//! `(t, z, m)`, uniform mixtures, exact best responses to public-memory
//! strategies, and the Big Match construction that defeats any strategy
//! with finitely many public memory states.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::counter::{update_distribution, CounterState};
use crate::discounted::SolutionCache;
use crate::error::{Error, Result};
use crate::game::{big_match_ids, GameSpec, NormalizedGame, PROB_TOL};
use crate::rng::StageRng;
use crate::strategy::{Adversary, AdversarySession, Player1Session, Player1Strategy, Transition};

fn check_distribution(p: &[f64], len: usize, what: &str) -> Result<()> {
    if p.len() != len {
        return Err(Error::Dimension(format!(
            "{what} has {} entries, expected {len}",
            p.len()
        )));
    }
    if p.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "{what} has a negative or non-finite entry"
        )));
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > PROB_TOL * len as f64 {
        return Err(Error::InvalidParameter(format!("{what} sums to {sum}, not 1")));
    }
    Ok(())
}

fn one_hot(n: usize, j: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[j] = 1.0;
    v
}

/// Plays a fixed mixed action in each state, ignoring clock and memory.
#[derive(Debug, Clone, PartialEq)]
pub struct StationaryAdversary {
    dists: Vec<Vec<f64>>,
}

impl StationaryAdversary {
    /// `dists[z]` is the mixed action in state `z`.
    pub fn new(dists: Vec<Vec<f64>>) -> Result<Self> {
        let nj = dists.first().map_or(0, Vec::len);
        if dists.is_empty() || nj == 0 {
            return Err(Error::Dimension(
                "stationary adversary needs at least one state and action".into(),
            ));
        }
        for (z, d) in dists.iter().enumerate() {
            check_distribution(d, nj, &format!("player 2 distribution in state {z}"))?;
        }
        Ok(StationaryAdversary { dists })
    }

    /// The same mixed action in every state.
    pub fn constant(n_states: usize, dist: Vec<f64>) -> Result<Self> {
        Self::new(vec![dist; n_states])
    }

    pub fn uniform(n_states: usize, n_actions2: usize) -> Result<Self> {
        Self::constant(n_states, vec![1.0 / n_actions2 as f64; n_actions2.max(1)])
    }

    /// Always plays action `j`.
    pub fn pure(n_states: usize, n_actions2: usize, j: usize) -> Result<Self> {
        if j >= n_actions2 {
            return Err(Error::InvalidParameter(format!(
                "player 2 action {j} out of range (game has {n_actions2})"
            )));
        }
        Self::constant(n_states, one_hot(n_actions2, j))
    }

    pub fn dists(&self) -> &[Vec<f64>] {
        &self.dists
    }
}

impl Adversary for StationaryAdversary {
    fn session(&self, _rng: &mut StageRng) -> Box<dyn AdversarySession + '_> {
        Box::new(StationarySession(self))
    }
}

struct StationarySession<'a>(&'a StationaryAdversary);

impl AdversarySession for StationarySession<'_> {
    fn action(&mut self, _t: usize, z: usize, _m: usize) -> &[f64] {
        &self.0.dists[z]
    }
}

/// Plays a mixed action depending on the stage and the state.
///
/// `table[t-1][z]` is used at stage `t`. Past the end of the table a cyclic
/// adversary wraps around; otherwise the last row repeats.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovAdversary {
    table: Vec<Vec<Vec<f64>>>,
    cyclic: bool,
}

impl MarkovAdversary {
    pub fn new(table: Vec<Vec<Vec<f64>>>, cyclic: bool) -> Result<Self> {
        let nz = table.first().map_or(0, Vec::len);
        let nj = table.first().and_then(|row| row.first()).map_or(0, Vec::len);
        if nz == 0 || nj == 0 {
            return Err(Error::Dimension("Markov adversary table is empty".into()));
        }
        for (t, row) in table.iter().enumerate() {
            if row.len() != nz {
                return Err(Error::Dimension(format!(
                    "Markov adversary stage {} has {} states, expected {nz}",
                    t + 1,
                    row.len()
                )));
            }
            for (z, d) in row.iter().enumerate() {
                check_distribution(d, nj, &format!("player 2 distribution at stage {}, state {z}", t + 1))?;
            }
        }
        Ok(MarkovAdversary { table, cyclic })
    }

    /// Action 0 at odd stages, action 1 at even stages.
    pub fn alternating(n_states: usize, n_actions2: usize) -> Result<Self> {
        if n_actions2 < 2 {
            return Err(Error::InvalidParameter(
                "alternating adversary needs two actions".into(),
            ));
        }
        Self::new(
            vec![
                vec![one_hot(n_actions2, 0); n_states],
                vec![one_hot(n_actions2, 1); n_states],
            ],
            true,
        )
    }

    /// Plays `before` at stages `t < switch_at` and `after` from then on.
    pub fn regime_switch(n_states: usize, before: Vec<f64>, after: Vec<f64>, switch_at: usize) -> Result<Self> {
        if switch_at < 1 {
            return Err(Error::InvalidParameter("switch stage must be at least 1".into()));
        }
        let mut table = vec![vec![before; n_states]; switch_at - 1];
        table.push(vec![after; n_states]);
        Self::new(table, false)
    }

    fn row(&self, t: usize) -> &[Vec<f64>] {
        let idx = t.saturating_sub(1);
        let idx = if self.cyclic {
            idx % self.table.len()
        } else {
            idx.min(self.table.len() - 1)
        };
        &self.table[idx]
    }
}

impl Adversary for MarkovAdversary {
    fn session(&self, _rng: &mut StageRng) -> Box<dyn AdversarySession + '_> {
        Box::new(MarkovSession(self))
    }
}

struct MarkovSession<'a>(&'a MarkovAdversary);

impl AdversarySession for MarkovSession<'_> {
    fn action(&mut self, t: usize, z: usize, _m: usize) -> &[f64] {
        &self.0.row(t)[z]
    }
}

/// Fixed-width action indices packed into 64-bit words.
#[derive(Debug, Clone, PartialEq, Eq)]
struct PackedActions {
    bits: u32,
    words: Vec<u64>,
}

impl PackedActions {
    fn new(len: usize, n_actions: usize) -> Self {
        let bits = (usize::BITS - (n_actions.max(2) - 1).leading_zeros()).max(1);
        let per_word = 64 / bits as usize;
        PackedActions {
            bits,
            words: vec![0; len.div_ceil(per_word)],
        }
    }

    #[inline]
    fn locate(&self, idx: usize) -> (usize, u32) {
        let per_word = 64 / self.bits as usize;
        (idx / per_word, (idx % per_word) as u32 * self.bits)
    }

    #[inline]
    fn get(&self, idx: usize) -> usize {
        let (w, shift) = self.locate(idx);
        ((self.words[w] >> shift) & ((1u64 << self.bits) - 1)) as usize
    }

    #[inline]
    fn set(&mut self, idx: usize, value: usize) {
        let (w, shift) = self.locate(idx);
        let mask = ((1u64 << self.bits) - 1) << shift;
        self.words[w] = (self.words[w] & !mask) | ((value as u64) << shift);
    }
}

/// A pure player-2 policy `(t, z, m) ↦ j` for stages `1..=horizon`.
///
/// Stages past the horizon reuse the last stage, memory indices past the
/// table reuse the last memory. With `n_states == 1` the policy ignores the
/// state. Unset entries play action 0, so an empty policy is "always 0".
#[derive(Debug, Clone, PartialEq)]
pub struct PureClockedAdversary {
    horizon: usize,
    n_states: usize,
    n_memories: usize,
    n_actions2: usize,
    packed: PackedActions,
    one_hot: Vec<Vec<f64>>,
}

/// File form: only the entries with a nonzero action are listed, as
/// `[t, z, m, j]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PureClockedFile {
    pub horizon: usize,
    pub n_states: usize,
    pub n_memories: usize,
    pub n_actions2: usize,
    pub nonzero: Vec<[usize; 4]>,
}

impl PureClockedAdversary {
    pub fn new(horizon: usize, n_states: usize, n_memories: usize, n_actions2: usize) -> Result<Self> {
        if horizon == 0 || n_states == 0 || n_memories == 0 || n_actions2 == 0 {
            return Err(Error::Dimension("pure policy dimensions must be positive".into()));
        }
        Ok(PureClockedAdversary {
            horizon,
            n_states,
            n_memories,
            n_actions2,
            packed: PackedActions::new(horizon * n_states * n_memories, n_actions2),
            one_hot: (0..n_actions2).map(|j| one_hot(n_actions2, j)).collect(),
        })
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_memories(&self) -> usize {
        self.n_memories
    }

    pub fn n_actions2(&self) -> usize {
        self.n_actions2
    }

    #[inline]
    fn index(&self, t: usize, z: usize, m: usize) -> usize {
        let t = t.clamp(1, self.horizon) - 1;
        let z = if self.n_states == 1 { 0 } else { z };
        let m = m.min(self.n_memories - 1);
        (t * self.n_states + z) * self.n_memories + m
    }

    #[inline]
    pub fn get(&self, t: usize, z: usize, m: usize) -> usize {
        self.packed.get(self.index(t, z, m))
    }

    pub fn set(&mut self, t: usize, z: usize, m: usize, j: usize) -> Result<()> {
        if t == 0 || t > self.horizon || z >= self.n_states || m >= self.n_memories || j >= self.n_actions2 {
            return Err(Error::InvalidParameter(format!(
                "policy entry (t {t}, z {z}, m {m}, j {j}) out of range"
            )));
        }
        let idx = self.index(t, z, m);
        self.packed.set(idx, j);
        Ok(())
    }

    pub fn to_file(&self) -> PureClockedFile {
        let mut nonzero = Vec::new();
        for t in 1..=self.horizon {
            for z in 0..self.n_states {
                for m in 0..self.n_memories {
                    let j = self.get(t, z, m);
                    if j != 0 {
                        nonzero.push([t, z, m, j]);
                    }
                }
            }
        }
        PureClockedFile {
            horizon: self.horizon,
            n_states: self.n_states,
            n_memories: self.n_memories,
            n_actions2: self.n_actions2,
            nonzero,
        }
    }

    pub fn from_file(file: &PureClockedFile) -> Result<Self> {
        let mut adv = Self::new(file.horizon, file.n_states, file.n_memories, file.n_actions2)?;
        for &[t, z, m, j] in &file.nonzero {
            adv.set(t, z, m, j)?;
        }
        Ok(adv)
    }
}

impl Adversary for PureClockedAdversary {
    fn session(&self, _rng: &mut StageRng) -> Box<dyn AdversarySession + '_> {
        Box::new(PureSession(self))
    }
}

struct PureSession<'a>(&'a PureClockedAdversary);

impl AdversarySession for PureSession<'_> {
    #[inline]
    fn action(&mut self, t: usize, z: usize, m: usize) -> &[f64] {
        &self.0.one_hot[self.0.get(t, z, m)]
    }
}

/// Uniform mixture of pure policies; repeated components are allowed.
///
/// The component is drawn once per episode from the first uniform of the
/// replication's stream.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedAdversary {
    components: Vec<PureClockedAdversary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixedFile {
    pub components: Vec<PureClockedFile>,
}

impl MixedAdversary {
    pub fn new(components: Vec<PureClockedAdversary>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidParameter("mixture needs at least one component".into()));
        }
        Ok(MixedAdversary { components })
    }

    pub fn components(&self) -> &[PureClockedAdversary] {
        &self.components
    }

    pub fn to_file(&self) -> MixedFile {
        MixedFile {
            components: self.components.iter().map(PureClockedAdversary::to_file).collect(),
        }
    }

    pub fn from_file(file: &MixedFile) -> Result<Self> {
        Self::new(
            file.components
                .iter()
                .map(PureClockedAdversary::from_file)
                .collect::<Result<_>>()?,
        )
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_json(path, &self.to_file())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_file(&read_json(path)?)
    }
}

impl Adversary for MixedAdversary {
    fn session(&self, rng: &mut StageRng) -> Box<dyn AdversarySession + '_> {
        let n = self.components.len();
        let pick = ((rng.uniform() * n as f64) as usize).min(n - 1);
        Box::new(PureSession(&self.components[pick]))
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string(value).expect("plain data serializes");
    fs::write(path, text).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        source_name: path.display().to_string(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

/// A player-1 strategy whose memory is public: the action depends on
/// `(t, z, m)` and the next memory is drawn from a kernel indexed by
/// `(t, z, m, i, j, z')`. Memory starts at 0.
///
/// A table with a single stage is time-independent and applies at every
/// stage up to the horizon; otherwise it has one stage per `t ≤ horizon`.
#[derive(Debug, Clone, PartialEq)]
pub struct PublicMemoryStrategyTable {
    n_memories: usize,
    horizon: usize,
    stages: usize,
    n_states: usize,
    n_actions1: usize,
    n_actions2: usize,
    /// `[stage][z][m][i]`
    action: Vec<f64>,
    /// `[stage][z][m][i][j][z']` → sparse `(m', p)`
    kernel: Vec<Vec<(usize, f64)>>,
}

/// File form of [`PublicMemoryStrategyTable`]: dense nested arrays
/// `action[t][z][m][i]` and `memory_kernel[t][z][m][i][j][z'][m']`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrategyTableFile {
    #[serde(rename = "M")]
    pub m: usize,
    pub horizon: usize,
    pub action: Vec<Vec<Vec<Vec<f64>>>>,
    #[allow(clippy::type_complexity)]
    pub memory_kernel: Vec<Vec<Vec<Vec<Vec<Vec<Vec<f64>>>>>>>,
}

impl PublicMemoryStrategyTable {
    /// Builds a table from closures; `action(stage, z, m)` and
    /// `kernel(stage, z, m, i, j, z')` are queried with 0-based stage index.
    pub fn from_fn(
        n_memories: usize,
        horizon: usize,
        stages: usize,
        dims: (usize, usize, usize),
        mut action: impl FnMut(usize, usize, usize) -> Vec<f64>,
        mut kernel: impl FnMut(usize, usize, usize, usize, usize, usize) -> Vec<f64>,
    ) -> Result<Self> {
        let (nz, ni, nj) = dims;
        if n_memories == 0 || horizon == 0 || nz == 0 || ni == 0 || nj == 0 {
            return Err(Error::Dimension("strategy table dimensions must be positive".into()));
        }
        if stages != 1 && stages != horizon {
            return Err(Error::Dimension(format!(
                "strategy table has {stages} stages; expected 1 or the horizon {horizon}"
            )));
        }
        let mut act = Vec::with_capacity(stages * nz * n_memories * ni);
        let mut ker = Vec::with_capacity(stages * nz * n_memories * ni * nj * nz);
        for st in 0..stages {
            for z in 0..nz {
                for m in 0..n_memories {
                    let a = action(st, z, m);
                    check_distribution(&a, ni, &format!("action at stage {}, state {z}, memory {m}", st + 1))?;
                    act.extend_from_slice(&a);
                    for i in 0..ni {
                        for j in 0..nj {
                            for zn in 0..nz {
                                let row = kernel(st, z, m, i, j, zn);
                                check_distribution(
                                    &row,
                                    n_memories,
                                    &format!(
                                        "memory kernel at stage {}, state {z}, memory {m}, actions ({i}, {j}), next state {zn}",
                                        st + 1
                                    ),
                                )?;
                                ker.push(
                                    row.iter()
                                        .enumerate()
                                        .filter(|(_, &p)| p > 0.0)
                                        .map(|(mn, &p)| (mn, p))
                                        .collect(),
                                );
                            }
                        }
                    }
                }
            }
        }
        Ok(PublicMemoryStrategyTable {
            n_memories,
            horizon,
            stages,
            n_states: nz,
            n_actions1: ni,
            n_actions2: nj,
            action: act,
            kernel: ker,
        })
    }

    /// A memoryless stationary strategy (`M = 1`).
    pub fn stationary(horizon: usize, n_actions2: usize, dists: &[Vec<f64>]) -> Result<Self> {
        let ni = dists.first().map_or(0, Vec::len);
        Self::from_fn(
            1,
            horizon,
            1,
            (dists.len(), ni, n_actions2),
            |_, z, _| dists[z].clone(),
            |_, _, _, _, _, _| vec![1.0],
        )
    }

    /// Plays the pure action `i` in every state, memoryless.
    pub fn always(horizon: usize, dims: (usize, usize, usize), i: usize) -> Result<Self> {
        let ni = dims.1;
        if i >= ni {
            return Err(Error::InvalidParameter(format!("player 1 action {i} out of range")));
        }
        Self::from_fn(
            1,
            horizon,
            1,
            dims,
            |_, _, _| one_hot(ni, i),
            |_, _, _, _, _, _| vec![1.0],
        )
    }

    /// The counter strategy with the counter capped at `cap`, as a
    /// time-independent table with `cap + 1` memory states.
    pub fn from_counter(cache: &SolutionCache, cap: usize, horizon: usize) -> Result<Self> {
        let g = &cache.game().game;
        let (nz, ni, nj) = g.dims();
        let config = *cache.config();
        let levels = (0..=cap)
            .map(|k| cache.solution_at_counter(k))
            .collect::<Result<Vec<_>>>()?;
        let mut failure = None;
        let table = Self::from_fn(
            cap + 1,
            horizon,
            1,
            (nz, ni, nj),
            |_, z, m| levels[m].strategy1[z].clone(),
            |_, z, m, i, j, zn| {
                let mut row = vec![0.0; cap + 1];
                match update_distribution(&config, CounterState::new(m), g.payoff(z, i, j), levels[m].values[zn]) {
                    Ok(upd) => {
                        let up = if m == cap { m } else { m + 1 };
                        row[up] += upd.p_up;
                        row[m] += upd.p_stay;
                        if upd.p_down > 0.0 {
                            row[m - 1] += upd.p_down;
                        }
                    }
                    Err(e) => {
                        failure.get_or_insert(e);
                        row[m] = 1.0;
                    }
                }
                row
            },
        );
        match failure {
            Some(e) => Err(e),
            None => table,
        }
    }

    pub fn n_memories(&self) -> usize {
        self.n_memories
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn is_time_independent(&self) -> bool {
        self.stages == 1
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.n_states, self.n_actions1, self.n_actions2)
    }

    /// Checks that the table fits `game`.
    pub fn check_game(&self, game: &GameSpec) -> Result<()> {
        if game.dims() != self.dims() {
            return Err(Error::Dimension(format!(
                "strategy table has dimensions {:?} but the game has {:?}",
                self.dims(),
                game.dims()
            )));
        }
        Ok(())
    }

    fn stage_index(&self, t: usize) -> Result<usize> {
        if t == 0 || t > self.horizon {
            return Err(Error::TableHorizon {
                t,
                horizon: self.horizon,
            });
        }
        Ok(if self.stages == 1 { 0 } else { t - 1 })
    }

    fn check_memory(&self, m: usize) -> Result<()> {
        if m >= self.n_memories {
            return Err(Error::InvalidParameter(format!(
                "memory {m} out of range (table has {})",
                self.n_memories
            )));
        }
        Ok(())
    }

    /// Mixed action at stage `t`.
    pub fn action(&self, t: usize, z: usize, m: usize) -> Result<&[f64]> {
        let st = self.stage_index(t)?;
        self.check_memory(m)?;
        if z >= self.n_states {
            return Err(Error::UnknownState(z));
        }
        let start = ((st * self.n_states + z) * self.n_memories + m) * self.n_actions1;
        Ok(&self.action[start..start + self.n_actions1])
    }

    /// Distribution of the next memory as sparse `(m', p)` pairs.
    pub fn kernel(&self, t: usize, z: usize, m: usize, i: usize, j: usize, z_next: usize) -> Result<&[(usize, f64)]> {
        let st = self.stage_index(t)?;
        self.check_memory(m)?;
        if z >= self.n_states || z_next >= self.n_states {
            return Err(Error::UnknownState(z.max(z_next)));
        }
        let idx = ((((st * self.n_states + z) * self.n_memories + m) * self.n_actions1 + i) * self.n_actions2 + j)
            * self.n_states
            + z_next;
        Ok(&self.kernel[idx])
    }

    pub fn to_file(&self) -> StrategyTableFile {
        let (nz, ni, nj, nm) = (self.n_states, self.n_actions1, self.n_actions2, self.n_memories);
        let t_of = |st: usize| st + 1;
        let action = (0..self.stages)
            .map(|st| {
                (0..nz)
                    .map(|z| {
                        (0..nm)
                            .map(|m| self.action(t_of(st), z, m).expect("in range").to_vec())
                            .collect()
                    })
                    .collect()
            })
            .collect();
        let memory_kernel = (0..self.stages)
            .map(|st| {
                (0..nz)
                    .map(|z| {
                        (0..nm)
                            .map(|m| {
                                (0..ni)
                                    .map(|i| {
                                        (0..nj)
                                            .map(|j| {
                                                (0..nz)
                                                    .map(|zn| {
                                                        let mut row = vec![0.0; nm];
                                                        for &(mn, p) in
                                                            self.kernel(t_of(st), z, m, i, j, zn).expect("in range")
                                                        {
                                                            row[mn] = p;
                                                        }
                                                        row
                                                    })
                                                    .collect()
                                            })
                                            .collect()
                                    })
                                    .collect()
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        StrategyTableFile {
            m: nm,
            horizon: self.horizon,
            action,
            memory_kernel,
        }
    }

    pub fn from_file(file: &StrategyTableFile) -> Result<Self> {
        let stages = file.action.len();
        if stages == 0 || stages != file.memory_kernel.len() {
            return Err(Error::Dimension(
                "action and memory_kernel must have the same nonzero number of stages".into(),
            ));
        }
        let nz = file.action[0].len();
        let ni = file.action[0].first().and_then(|r| r.first()).map_or(0, Vec::len);
        let nj = file.memory_kernel[0]
            .first()
            .and_then(|r| r.first())
            .and_then(|r| r.first())
            .map_or(0, Vec::len);
        let shape_err = |what: &str| Error::Dimension(format!("strategy table {what} has an irregular shape"));
        // Check every nesting level so that the closures below can index freely.
        for st in 0..stages {
            if file.action[st].len() != nz || file.memory_kernel[st].len() != nz {
                return Err(shape_err("state level"));
            }
            for z in 0..nz {
                if file.action[st][z].len() != file.m || file.memory_kernel[st][z].len() != file.m {
                    return Err(shape_err("memory level"));
                }
                for m in 0..file.m {
                    let k = &file.memory_kernel[st][z][m];
                    if k.len() != ni || k.iter().any(|r| r.len() != nj || r.iter().any(|c| c.len() != nz)) {
                        return Err(shape_err("memory_kernel"));
                    }
                }
            }
        }
        Self::from_fn(
            file.m,
            file.horizon,
            stages,
            (nz, ni, nj),
            |st, z, m| file.action[st][z][m].clone(),
            |st, z, m, i, j, zn| file.memory_kernel[st][z][m][i][j][zn].clone(),
        )
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_json(path, &self.to_file())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_file(&read_json(path)?)
    }
}

impl Player1Strategy for PublicMemoryStrategyTable {
    fn session(&self) -> Box<dyn Player1Session + '_> {
        Box::new(TableSession(self))
    }
}

struct TableSession<'a>(&'a PublicMemoryStrategyTable);

impl Player1Session for TableSession<'_> {
    fn action(&mut self, t: usize, z: usize, m: usize) -> Result<&[f64]> {
        self.0.action(t, z, m)
    }

    fn next_memory(&mut self, step: &Transition, u: f64) -> Result<usize> {
        let row = self.0.kernel(step.t, step.z, step.m, step.i, step.j, step.z_next)?;
        let mut acc = 0.0;
        for &(mn, p) in row {
            acc += p;
            if u < acc {
                return Ok(mn);
            }
        }
        Ok(row.last().map_or(step.m, |&(mn, _)| mn))
    }
}

/// An exact best response and the payoff it holds player 1 to.
#[derive(Debug, Clone)]
pub struct BestResponse {
    pub policy: PureClockedAdversary,
    /// `γ_n(σ, τ*)`: expected average normalized payoff over `n` stages.
    pub value: f64,
}

/// Expected immediate payoff and successor distribution for one
/// `(z, m, j)` at one stage, with player 1's randomization folded in.
struct StageModel {
    /// `[z][m][j]`
    reward: Vec<f64>,
    /// `[z][m][j]` → `(z' · M + m', p)`
    next: Vec<Vec<(usize, f64)>>,
}

fn stage_model(game: &GameSpec, sigma: &PublicMemoryStrategyTable, t: usize) -> Result<StageModel> {
    let (nz, ni, nj) = game.dims();
    let nm = sigma.n_memories;
    let mut reward = Vec::with_capacity(nz * nm * nj);
    let mut next = Vec::with_capacity(nz * nm * nj);
    let mut acc = vec![0.0; nz * nm];
    for z in 0..nz {
        for m in 0..nm {
            let a = sigma.action(t, z, m)?;
            for j in 0..nj {
                let mut r = 0.0;
                acc.iter_mut().for_each(|x| *x = 0.0);
                for (i, &pi) in a.iter().enumerate().take(ni) {
                    if pi == 0.0 {
                        continue;
                    }
                    r += pi * game.payoff(z, i, j);
                    for &(zn, pz) in game.support(z, i, j) {
                        for &(mn, pm) in sigma.kernel(t, z, m, i, j, zn)? {
                            acc[zn * nm + mn] += pi * pz * pm;
                        }
                    }
                }
                reward.push(r);
                next.push(
                    acc.iter()
                        .enumerate()
                        .filter(|(_, &p)| p > 0.0)
                        .map(|(s, &p)| (s, p))
                        .collect(),
                );
            }
        }
    }
    Ok(StageModel { reward, next })
}

/// Exact best response of player 2 over `horizon` stages against a fixed
/// public-memory strategy, by backward induction over `(t, z, m)`.
///
/// Ties go to the smallest action index. The value starts from the game's
/// initial state with memory 0 and is the expected average of normalized
/// stage payoffs.
pub fn best_response_public(
    game: &NormalizedGame,
    sigma: &PublicMemoryStrategyTable,
    horizon: usize,
) -> Result<BestResponse> {
    let g = &game.game;
    sigma.check_game(g)?;
    if horizon == 0 {
        return Err(Error::InvalidParameter(
            "best-response horizon must be at least 1".into(),
        ));
    }
    if horizon > sigma.horizon {
        return Err(Error::TableHorizon {
            t: horizon,
            horizon: sigma.horizon,
        });
    }
    let (nz, _, nj) = g.dims();
    let nm = sigma.n_memories;
    let mut policy = PureClockedAdversary::new(horizon, nz, nm, nj)?;
    let mut w_next = vec![0.0; nz * nm];
    let mut w = vec![0.0; nz * nm];
    let mut model = if sigma.is_time_independent() {
        Some(stage_model(g, sigma, 1)?)
    } else {
        None
    };
    for t in (1..=horizon).rev() {
        if !sigma.is_time_independent() {
            model = Some(stage_model(g, sigma, t)?);
        }
        let sm = model.as_ref().expect("built above");
        for z in 0..nz {
            for m in 0..nm {
                let base = (z * nm + m) * nj;
                let mut best = f64::INFINITY;
                let mut best_j = 0;
                for j in 0..nj {
                    let q = sm.reward[base + j] + sm.next[base + j].iter().map(|&(s, p)| p * w_next[s]).sum::<f64>();
                    if q < best {
                        best = q;
                        best_j = j;
                    }
                }
                w[z * nm + m] = best;
                if best_j != 0 {
                    policy.set(t, z, m, best_j)?;
                }
            }
        }
        std::mem::swap(&mut w, &mut w_next);
    }
    Ok(BestResponse {
        value: w_next[g.initial_state() * nm] / horizon as f64,
        policy,
    })
}

/// Exact `γ_n(σ, τ)` for a public-memory strategy against a pure policy, by
/// forward recursion over `(z, m)`.
pub fn exact_average_payoff(
    game: &NormalizedGame,
    sigma: &PublicMemoryStrategyTable,
    tau: &PureClockedAdversary,
    horizon: usize,
) -> Result<f64> {
    let g = &game.game;
    sigma.check_game(g)?;
    if horizon == 0 || horizon > sigma.horizon {
        return Err(Error::TableHorizon {
            t: horizon,
            horizon: sigma.horizon,
        });
    }
    let (nz, _, _) = g.dims();
    let nm = sigma.n_memories;
    let mut occ = vec![0.0; nz * nm];
    occ[g.initial_state() * nm] = 1.0;
    let mut total = 0.0;
    for t in 1..=horizon {
        let mut nxt = vec![0.0; nz * nm];
        for z in 0..nz {
            for m in 0..nm {
                let p = occ[z * nm + m];
                if p == 0.0 {
                    continue;
                }
                let j = tau.get(t, z, m);
                for (i, &pi) in sigma.action(t, z, m)?.iter().enumerate() {
                    if pi == 0.0 {
                        continue;
                    }
                    total += p * pi * g.payoff(z, i, j);
                    for &(zn, pz) in g.support(z, i, j) {
                        for &(mn, pm) in sigma.kernel(t, z, m, i, j, zn)? {
                            nxt[zn * nm + mn] += p * pi * pz * pm;
                        }
                    }
                }
            }
        }
        occ = nxt;
    }
    Ok(total / horizon as f64)
}

/// One pure policy `τⁱ` of the construction, with its exact statistics.
#[derive(Debug, Clone, Serialize)]
pub struct ComponentReport {
    pub index: usize,
    /// `Σ_{(t,m)∈τⁱ} σ(t,m)[A]`
    pub budget: f64,
    /// `|τⁱ|`
    pub size: usize,
    /// Stage from which `τ^{i+1}` adds pairs; absent for the last component.
    pub n_i: Option<usize>,
    /// Pairs added to form `τ^{i+1}`.
    pub added: usize,
    /// Budget of `τ^{i+1}`.
    pub next_budget: Option<f64>,
    /// `P_i(0*_{>n_i})` truncated at the horizon.
    pub tail: Option<f64>,
    /// `γ_T(σ, τⁱ)`
    pub average_payoff: f64,
    /// `P_i(T_* > T)`: mass not absorbed by the horizon.
    pub survival: f64,
    /// `r^i_t` for `t = 1..=T`.
    #[serde(skip)]
    pub stage_payoffs: Vec<f64>,
}

/// Everything the worthlessness construction computed, for reporting.
#[derive(Debug, Clone, Serialize)]
pub struct WorthlessnessCertificate {
    pub delta: f64,
    pub horizon: usize,
    pub tail_tol: f64,
    pub n_memories: usize,
    pub components: Vec<ComponentReport>,
    /// `max_{i<|X|} n_i`; stages after it are certified.
    pub t_x: usize,
    /// Largest number of components with `r^i_t ≥ δ` at a certified stage.
    pub max_certified_count: usize,
    /// Whether that count stays within `M + 1`.
    pub certificate_holds: bool,
    /// Exact `γ_T(σ, mixture)`.
    pub mixture_payoff: f64,
    /// Component with the smallest `γ_T(σ, τⁱ)`.
    pub witness: usize,
    pub witness_payoff: f64,
}

impl WorthlessnessCertificate {
    /// Number of components with `r^i_t ≥ δ` at stage `t`.
    pub fn count_at(&self, t: usize) -> usize {
        self.components
            .iter()
            .filter(|c| c.stage_payoffs[t - 1] >= self.delta)
            .count()
    }
}

#[derive(Debug, Clone)]
pub struct WorthlessnessAdversary {
    pub mixture: MixedAdversary,
    pub certificate: WorthlessnessCertificate,
}

/// Exact forward pass of `(σ, τ)` in the Big Match over the live state.
struct ForwardPass {
    /// `P(t, m)` for `t = 1..=T`, flattened `[t-1][m]`.
    occupancy: Vec<f64>,
    /// `r_t`
    stage_payoffs: Vec<f64>,
    /// Absorption into the payoff-0 state at stage `t`.
    absorb0: Vec<f64>,
    survival: f64,
}

fn forward_pass(sigma: &PublicMemoryStrategyTable, tau: &PureClockedAdversary, horizon: usize) -> Result<ForwardPass> {
    use big_match_ids::{ABSORB, CONTINUE, LIVE};
    let nm = sigma.n_memories;
    let mut occupancy = Vec::with_capacity(horizon * nm);
    let mut stage_payoffs = Vec::with_capacity(horizon);
    let mut absorb0 = Vec::with_capacity(horizon);
    let mut p = vec![0.0; nm];
    p[0] = 1.0;
    let mut absorbed1 = 0.0;
    for t in 1..=horizon {
        occupancy.extend_from_slice(&p);
        let mut next = vec![0.0; nm];
        let mut cont_payoff = 0.0;
        let mut a0 = 0.0;
        for (m, &w) in p.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let a = sigma.action(t, LIVE, m)?;
            let j = tau.get(t, LIVE, m);
            if j == 1 {
                absorbed1 += w * a[ABSORB];
            } else {
                a0 += w * a[ABSORB];
                cont_payoff += w * a[CONTINUE];
            }
            for &(mn, pm) in sigma.kernel(t, LIVE, m, CONTINUE, j, LIVE)? {
                next[mn] += w * a[CONTINUE] * pm;
            }
        }
        stage_payoffs.push(absorbed1 + cont_payoff);
        absorb0.push(a0);
        p = next;
    }
    Ok(ForwardPass {
        occupancy,
        stage_payoffs,
        absorb0,
        survival: p.iter().sum(),
    })
}

/// Builds the uniform mixture of pure public-memory policies that holds a
/// Big Match strategy with `M` public memory states to at most about `3δ`.
///
/// Starting from `τ¹ ≡ 0`, each step computes `r^i_t` and `P_i(t, m)`
/// exactly, picks for every stage with `r^i_t ≥ δ` the memory `m(t)` outside
/// `τⁱ` with the largest occupancy (at least `δ/(3M)`), and adds those pairs
/// from the least stage `n_i` at which the total `σ[A]` mass of the
/// resulting policy stays below `δ/3` and the absorption-into-0 mass in
/// `(n_i, T]` is below `tail_tol`. `⌊(M+1)/δ⌋ + 1` components are collected.
/// For `δ ≥ 1` the single policy `τ¹` is returned.
pub fn build_worthlessness_adversary(
    sigma: &PublicMemoryStrategyTable,
    delta: f64,
    horizon: usize,
    tail_tol: f64,
) -> Result<WorthlessnessAdversary> {
    use big_match_ids::{ABSORB, LIVE};
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::InvalidParameter(format!("delta must be positive, got {delta}")));
    }
    if !(tail_tol > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "tail tolerance must be positive, got {tail_tol}"
        )));
    }
    if sigma.dims() != (3, 2, 2) {
        return Err(Error::Dimension(format!(
            "the construction needs a Big Match strategy table, got dimensions {:?}",
            sigma.dims()
        )));
    }
    if horizon == 0 || horizon > sigma.horizon {
        return Err(Error::TableHorizon {
            t: horizon,
            horizon: sigma.horizon,
        });
    }
    let nm = sigma.n_memories;
    let n_components = if delta >= 1.0 {
        1
    } else {
        ((nm + 1) as f64 / delta).floor() as usize + 1
    };
    let floor = delta / (3.0 * nm as f64);
    let budget_cap = delta / 3.0;

    let mut tau = PureClockedAdversary::new(horizon, 1, nm, 2)?;
    let mut budget = 0.0;
    let mut size = 0;
    let mut components = Vec::with_capacity(n_components);
    let mut policies = Vec::with_capacity(n_components);
    for index in 1..=n_components {
        policies.push(tau.clone());
        let pass = forward_pass(sigma, &tau, horizon)?;
        let mut report = ComponentReport {
            index,
            budget,
            size,
            n_i: None,
            added: 0,
            next_budget: None,
            tail: None,
            average_payoff: pass.stage_payoffs.iter().sum::<f64>() / horizon as f64,
            survival: pass.survival,
            stage_payoffs: pass.stage_payoffs,
        };
        if index < n_components {
            // m(t) for every stage with r_t ≥ δ; None where no memory qualifies.
            let picks: Vec<Option<Option<usize>>> = (1..=horizon)
                .map(|t| {
                    if report.stage_payoffs[t - 1] < delta {
                        return None;
                    }
                    let occ = &pass.occupancy[(t - 1) * nm..t * nm];
                    let mut best: Option<usize> = None;
                    for m in 0..nm {
                        if tau.get(t, LIVE, m) == 1 || occ[m] < floor {
                            continue;
                        }
                        if best.is_none_or(|b| occ[m] > occ[b]) {
                            best = Some(m);
                        }
                    }
                    Some(best)
                })
                .collect();
            // Suffix sums over stages t ≥ n: added σ[A] mass, missing picks,
            // and absorption into 0 after n.
            let mut added_mass = vec![0.0; horizon + 2];
            let mut missing = vec![0usize; horizon + 2];
            let mut tail = vec![0.0; horizon + 2];
            for t in (1..=horizon).rev() {
                let (mass, miss) = match picks[t - 1] {
                    Some(Some(m)) => (sigma.action(t, LIVE, m)?[ABSORB], 0),
                    Some(None) => (0.0, 1),
                    None => (0.0, 0),
                };
                added_mass[t] = added_mass[t + 1] + mass;
                missing[t] = missing[t + 1] + miss;
                tail[t] = tail[t + 1] + if t < horizon { pass.absorb0[t] } else { 0.0 };
            }
            let n_i = (1..=horizon)
                .find(|&n| missing[n] == 0 && budget + added_mass[n] < budget_cap && tail[n] < tail_tol)
                .ok_or_else(|| {
                    let reason = if missing[horizon] > 0 {
                        format!("stage {horizon} has r_t >= delta but no memory with occupancy >= {floor}")
                    } else if budget + added_mass[horizon] >= budget_cap {
                        format!(
                            "budget {} + {} at n = T reaches delta/3 = {budget_cap}",
                            budget, added_mass[horizon]
                        )
                    } else {
                        format!("truncated tail exceeds tail_tol = {tail_tol} at every n <= T")
                    };
                    Error::ConstructionInfeasible {
                        component: index,
                        reason: format!("horizon {horizon} too short: {reason}"),
                    }
                })?;
            let mut added = 0;
            for t in n_i..=horizon {
                if let Some(Some(m)) = picks[t - 1] {
                    tau.set(t, LIVE, m, 1)?;
                    added += 1;
                }
            }
            report.n_i = Some(n_i);
            report.added = added;
            report.tail = Some(tail[n_i]);
            report.next_budget = Some(budget + added_mass[n_i]);
            budget += added_mass[n_i];
            size += added;
        }
        components.push(report);
    }

    let t_x = components.iter().filter_map(|c| c.n_i).max().unwrap_or(0);
    let max_certified_count = (t_x + 1..=horizon)
        .map(|t| components.iter().filter(|c| c.stage_payoffs[t - 1] >= delta).count())
        .max()
        .unwrap_or(0);
    let mixture_payoff = components.iter().map(|c| c.average_payoff).sum::<f64>() / components.len() as f64;
    let (witness, witness_payoff) = components
        .iter()
        .map(|c| (c.index, c.average_payoff))
        .fold((0, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
    Ok(WorthlessnessAdversary {
        mixture: MixedAdversary::new(policies)?,
        certificate: WorthlessnessCertificate {
            delta,
            horizon,
            tail_tol,
            n_memories: nm,
            components,
            t_x,
            max_certified_count,
            certificate_holds: max_certified_count <= nm + 1,
            mixture_payoff,
            witness,
            witness_payoff,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::counter::make_config;
    use crate::discounted::SolveOptions;
    use crate::game::{big_match, normalize_payoffs};
    use std::sync::Arc;

    fn bm() -> NormalizedGame {
        normalize_payoffs(&big_match())
    }

    #[test]
    fn packed_actions_round_trip() {
        for n in [2, 3, 5, 17] {
            let mut p = PackedActions::new(1000, n);
            for k in 0..1000 {
                p.set(k, (k * 7) % n);
            }
            for k in 0..1000 {
                assert_eq!(p.get(k), (k * 7) % n);
            }
        }
    }

    #[test]
    fn stationary_and_markov_baselines() {
        let mut rng = StageRng::for_replication(1, 0);
        let u = StationaryAdversary::uniform(3, 2).unwrap();
        assert_eq!(u.session(&mut rng).action(5, 0, 9), &[0.5, 0.5]);
        let a1 = StationaryAdversary::pure(3, 2, 1).unwrap();
        assert_eq!(a1.session(&mut rng).action(1, 2, 0), &[0.0, 1.0]);
        assert!(StationaryAdversary::pure(3, 2, 2).is_err());
        assert!(StationaryAdversary::new(vec![vec![0.7, 0.7]]).is_err());

        let alt = MarkovAdversary::alternating(3, 2).unwrap();
        let mut s = alt.session(&mut rng);
        assert_eq!(s.action(1, 0, 0), &[1.0, 0.0]);
        assert_eq!(s.action(2, 0, 0), &[0.0, 1.0]);
        assert_eq!(s.action(101, 0, 0), &[1.0, 0.0]);

        let sw = MarkovAdversary::regime_switch(3, vec![1.0, 0.0], vec![0.0, 1.0], 100).unwrap();
        let mut s = sw.session(&mut rng);
        assert_eq!(s.action(99, 0, 0), &[1.0, 0.0]);
        assert_eq!(s.action(100, 0, 0), &[0.0, 1.0]);
        assert_eq!(s.action(10_000, 0, 0), &[0.0, 1.0]);
    }

    #[test]
    fn pure_policy_clamps_and_round_trips() {
        let mut p = PureClockedAdversary::new(4, 1, 3, 2).unwrap();
        p.set(2, 0, 1, 1).unwrap();
        p.set(4, 0, 2, 1).unwrap();
        assert_eq!(p.get(2, 2, 1), 1);
        assert_eq!(p.get(9, 0, 2), 1);
        assert_eq!(p.get(9, 0, 7), 1);
        assert_eq!(p.get(1, 0, 1), 0);
        assert!(p.set(5, 0, 0, 1).is_err());
        let back = PureClockedAdversary::from_file(&p.to_file()).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn one_stage_best_response() {
        let g = bm();
        for a in [0.0, 0.25, 0.5, 0.75, 1.0] {
            let sigma =
                PublicMemoryStrategyTable::stationary(1, 2, &[vec![a, 1.0 - a], vec![1.0, 0.0], vec![1.0, 0.0]])
                    .unwrap();
            let br = best_response_public(&g, &sigma, 1).unwrap();
            assert_eq!(br.value, (1.0 - a).min(a));
            let j = br.policy.get(1, 0, 0);
            // Action 1 is weakly better iff a ≤ 1/2; ties go to action 0.
            let expect = if a < 0.5 { 1 } else { 0 };
            assert_eq!(j, expect, "a = {a}");
        }
    }

    #[test]
    fn always_continue_is_worthless() {
        let g = bm();
        let sigma = PublicMemoryStrategyTable::always(50, (3, 2, 2), 1).unwrap();
        let br = best_response_public(&g, &sigma, 50).unwrap();
        assert_eq!(br.value, 0.0);
        assert!((1..=50).all(|t| br.policy.get(t, 0, 0) == 1));
        assert!(best_response_public(&g, &sigma, 51).is_err());
    }

    #[test]
    fn exact_payoff_matches_best_response_value() {
        let g = bm();
        let sigma =
            PublicMemoryStrategyTable::stationary(20, 2, &[vec![0.1, 0.9], vec![1.0, 0.0], vec![1.0, 0.0]]).unwrap();
        let br = best_response_public(&g, &sigma, 20).unwrap();
        let v = exact_average_payoff(&g, &sigma, &br.policy, 20).unwrap();
        assert!((v - br.value).abs() < 1e-12);
    }

    #[test]
    fn table_file_round_trip() {
        let cache = Arc::new(SolutionCache::new(
            bm(),
            make_config(0.2, 100.0).unwrap(),
            SolveOptions::default(),
        ));
        let t = PublicMemoryStrategyTable::from_counter(&cache, 3, 100).unwrap();
        assert_eq!(t.n_memories(), 4);
        let back = PublicMemoryStrategyTable::from_file(&t.to_file()).unwrap();
        assert_eq!(back, t);
        let text = serde_json::to_string(&t.to_file()).unwrap();
        assert!(text.starts_with("{\"M\":4,\"horizon\":100,"));
    }

    #[test]
    fn counter_table_caps_upward_moves() {
        let cache = Arc::new(SolutionCache::new(
            bm(),
            make_config(0.2, 100.0).unwrap(),
            SolveOptions::default(),
        ));
        let t = PublicMemoryStrategyTable::from_counter(&cache, 2, 10).unwrap();
        // (C, 0) pays 1: the counter wants to rise but is held at the cap.
        let row = t.kernel(1, 0, 2, 1, 0, 0).unwrap();
        assert_eq!(row, &[(2, 1.0)]);
        let row = t.kernel(1, 0, 0, 1, 0, 0).unwrap();
        assert!((row[1].1 - 0.27).abs() < 1e-12);
    }

    #[test]
    fn worthlessness_against_always_continue() {
        let sigma = PublicMemoryStrategyTable::always(10_000, (3, 2, 2), 1).unwrap();
        let w = build_worthlessness_adversary(&sigma, 0.1, 10_000, 0.1).unwrap();
        let c = &w.certificate;
        assert_eq!(c.components.len(), 21);
        assert_eq!(c.components[0].n_i, Some(1));
        assert_eq!(c.components[0].added, 10_000);
        assert!((c.components[0].average_payoff - 1.0).abs() < 1e-15);
        assert_eq!(c.components[1].average_payoff, 0.0);
        assert!((c.mixture_payoff - 1.0 / 21.0).abs() < 1e-12);
        assert!(c.certificate_holds);
        assert_eq!(c.witness, 2);
    }

    #[test]
    fn mixture_components_match_their_reports() {
        let g = bm();
        let sigma =
            PublicMemoryStrategyTable::stationary(200, 2, &[vec![0.01, 0.99], vec![1.0, 0.0], vec![1.0, 0.0]]).unwrap();
        let w = build_worthlessness_adversary(&sigma, 0.2, 200, 0.1).unwrap();
        for (policy, report) in w.mixture.components().iter().zip(&w.certificate.components) {
            let exact = exact_average_payoff(&g, &sigma, policy, 200).unwrap();
            assert!((exact - report.average_payoff).abs() < 1e-12);
        }
    }

    #[test]
    fn worthlessness_against_coin_flip() {
        let sigma = PublicMemoryStrategyTable::stationary(10_000, 2, &[vec![0.5, 0.5], vec![1.0, 0.0], vec![1.0, 0.0]])
            .unwrap();
        let w = build_worthlessness_adversary(&sigma, 0.1, 10_000, 0.1).unwrap();
        assert!(w.certificate.mixture_payoff <= 0.3);
        assert!(w.certificate.certificate_holds);
    }

    #[test]
    fn worthlessness_degenerate_and_invalid_delta() {
        let sigma = PublicMemoryStrategyTable::always(100, (3, 2, 2), 1).unwrap();
        let w = build_worthlessness_adversary(&sigma, 1.5, 100, 0.1).unwrap();
        assert_eq!(w.mixture.components().len(), 1);
        assert!(build_worthlessness_adversary(&sigma, 0.0, 100, 0.1).is_err());
        assert!(build_worthlessness_adversary(&sigma, -0.1, 100, 0.1).is_err());
    }
}
