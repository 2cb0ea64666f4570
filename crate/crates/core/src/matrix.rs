//! One-shot zero-sum matrix games.
//!
//! The row player maximizes, the column player minimizes. Games are solved
//! with a dense-tableau primal simplex using Bland's rule; the instances that
//! stochastic games induce are tiny, so robustness matters more than speed.

use crate::error::{Error, Result};

/// Pivot elements and reduced costs smaller than this are treated as zero.
const PIVOT_EPS: f64 = 1e-11;

#[derive(Debug, Clone, PartialEq)]
pub struct MatrixGame {
    rows: usize,
    cols: usize,
    entries: Vec<f64>,
}

impl MatrixGame {
    /// Builds an `rows x cols` game from row-major entries.
    pub fn new(rows: usize, cols: usize, entries: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Dimension(
                "matrix game needs at least one row and one column".into(),
            ));
        }
        if entries.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} entries for a {rows}x{cols} matrix",
                entries.len()
            )));
        }
        if entries.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("matrix entries must be finite".into()));
        }
        Ok(MatrixGame { rows, cols, entries })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Dimension("ragged matrix rows".into()));
        }
        MatrixGame::new(rows.len(), cols, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.cols + j]
    }

    /// `a * m + b`, entrywise.
    pub fn affine(&self, a: f64, b: f64) -> MatrixGame {
        MatrixGame {
            entries: self.entries.iter().map(|&x| a * x + b).collect(),
            ..self.clone()
        }
    }

    /// Payoff of a row mixture against every pure column.
    pub fn row_payoffs(&self, x: &[f64]) -> Vec<f64> {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| x[i] * self.get(i, j)).sum())
            .collect()
    }

    /// Payoff of every pure row against a column mixture.
    pub fn col_payoffs(&self, y: &[f64]) -> Vec<f64> {
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| y[j] * self.get(i, j)).sum())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatrixSolution {
    pub value: f64,
    pub row_strategy: Vec<f64>,
    pub col_strategy: Vec<f64>,
}

impl MatrixSolution {
    /// `min_j (xᵀM)_j`: what the row strategy guarantees.
    pub fn row_guarantee(&self, m: &MatrixGame) -> f64 {
        m.row_payoffs(&self.row_strategy)
            .into_iter()
            .fold(f64::INFINITY, f64::min)
    }

    /// `max_i (My)_i`: what the column strategy concedes.
    pub fn col_guarantee(&self, m: &MatrixGame) -> f64 {
        m.col_payoffs(&self.col_strategy)
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Which player is responding in [`best_pure_response`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// The row player (maximizer) responds to a column mixture.
    Row,
    /// The column player (minimizer) responds to a row mixture.
    Column,
}

/// Best pure reply of `side` to the opponent's `mixed` strategy, with its
/// payoff. Ties go to the lowest index.
pub fn best_pure_response(m: &MatrixGame, mixed: &[f64], side: Side) -> Result<(usize, f64)> {
    let (expected, payoffs) = match side {
        Side::Column => (m.rows, mixed.len().eq(&m.rows).then(|| m.row_payoffs(mixed))),
        Side::Row => (m.cols, mixed.len().eq(&m.cols).then(|| m.col_payoffs(mixed))),
    };
    let payoffs = payoffs.ok_or_else(|| {
        Error::Dimension(format!(
            "mixture has {} entries, opponent has {expected} actions",
            mixed.len()
        ))
    })?;
    let better = |a: f64, b: f64| match side {
        Side::Column => a < b,
        Side::Row => a > b,
    };
    let mut best = (0, payoffs[0]);
    for (k, &p) in payoffs.iter().enumerate().skip(1) {
        if better(p, best.1) {
            best = (k, p);
        }
    }
    Ok(best)
}

/// Solves the game exactly up to floating-point rounding.
///
/// Entries are rescaled into `[1, 2]`, which makes the column player's
/// program `max Σq  s.t.  Bq ≤ 1, q ≥ 0` feasible at the origin and bounded.
/// Its optimal tableau yields both strategies: `q / Σq` for the columns and
/// the slack reduced costs (the dual solution) for the rows.
pub fn solve_matrix_game(m: &MatrixGame) -> MatrixSolution {
    let (lo, hi) = m
        .entries
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        });
    let range = hi - lo;
    if range == 0.0 {
        return MatrixSolution {
            value: lo,
            row_strategy: unit(m.rows, 0),
            col_strategy: unit(m.cols, 0),
        };
    }

    let (rows, cols) = (m.rows, m.cols);
    let width = cols + rows + 1;
    let rhs = width - 1;
    let mut tab = vec![0.0; rows * width];
    for i in 0..rows {
        let row = &mut tab[i * width..(i + 1) * width];
        for (j, cell) in row[..cols].iter_mut().enumerate() {
            *cell = (m.get(i, j) - lo) / range + 1.0;
        }
        row[cols + i] = 1.0;
        row[rhs] = 1.0;
    }
    let mut obj = vec![0.0; width];
    obj[..cols].iter_mut().for_each(|c| *c = -1.0);
    let mut basis: Vec<usize> = (cols..cols + rows).collect();

    // Bland's rule terminates; the cap only guards against NaN poisoning.
    let max_pivots = 50 * (rows + cols) * (rows + cols) + 100;
    for _ in 0..max_pivots {
        let Some(enter) = (0..rhs).find(|&c| obj[c] < -PIVOT_EPS) else {
            break;
        };
        let mut leave: Option<(usize, f64)> = None;
        for r in 0..rows {
            let a = tab[r * width + enter];
            if a <= PIVOT_EPS {
                continue;
            }
            let ratio = tab[r * width + rhs] / a;
            leave = match leave {
                None => Some((r, ratio)),
                Some((br, best)) => {
                    let tie = (ratio - best).abs() <= 1e-14 * best.abs().max(1.0);
                    if (!tie && ratio < best) || (tie && basis[r] < basis[br]) {
                        Some((r, ratio))
                    } else {
                        Some((br, best))
                    }
                }
            };
        }
        let Some((pr, _)) = leave else {
            // Unbounded cannot happen with entries >= 1.
            break;
        };
        pivot(&mut tab, &mut obj, width, pr, enter);
        basis[pr] = enter;
    }

    let mut q = vec![0.0; cols];
    for (r, &b) in basis.iter().enumerate() {
        if b < cols {
            q[b] = tab[r * width + rhs].max(0.0);
        }
    }
    let p: Vec<f64> = (0..rows).map(|i| obj[cols + i].max(0.0)).collect();
    let total = obj[rhs];
    let scaled_value = 1.0 / total;

    MatrixSolution {
        value: (scaled_value - 1.0) * range + lo,
        row_strategy: normalized(p),
        col_strategy: normalized(q),
    }
}

fn pivot(tab: &mut [f64], obj: &mut [f64], width: usize, pr: usize, pc: usize) {
    let rows = tab.len() / width;
    let inv = 1.0 / tab[pr * width + pc];
    for c in 0..width {
        tab[pr * width + c] *= inv;
    }
    tab[pr * width + pc] = 1.0;
    let pivot_row: Vec<f64> = tab[pr * width..(pr + 1) * width].to_vec();
    for r in 0..rows {
        if r == pr {
            continue;
        }
        let f = tab[r * width + pc];
        if f != 0.0 {
            for c in 0..width {
                tab[r * width + c] -= f * pivot_row[c];
            }
            tab[r * width + pc] = 0.0;
        }
    }
    let f = obj[pc];
    if f != 0.0 {
        for c in 0..width {
            obj[c] -= f * pivot_row[c];
        }
        obj[pc] = 0.0;
    }
}

fn unit(n: usize, k: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[k] = 1.0;
    v
}

fn normalized(mut v: Vec<f64>) -> Vec<f64> {
    let s: f64 = v.iter().sum();
    if s > 0.0 {
        v.iter_mut().for_each(|x| *x /= s);
        v
    } else {
        unit(v.len(), 0)
    }
}
