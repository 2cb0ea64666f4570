use std::fmt;

use thiserror::Error;

/// A single broken invariant found while validating a game description.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    EmptyStates,
    EmptyActions1,
    EmptyActions2,
    Shape(String),
    NonFinitePayoff {
        z: usize,
        i: usize,
        j: usize,
    },
    NegativeProbability {
        z: usize,
        i: usize,
        j: usize,
        next: usize,
        p: f64,
    },
    RowSum {
        z: usize,
        i: usize,
        j: usize,
        sum: f64,
    },
    UnknownInitialState(String),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EmptyStates => write!(f, "state set is empty"),
            Violation::EmptyActions1 => write!(f, "player 1 action set is empty"),
            Violation::EmptyActions2 => write!(f, "player 2 action set is empty"),
            Violation::Shape(what) => write!(f, "shape mismatch: {what}"),
            Violation::NonFinitePayoff { z, i, j } => {
                write!(f, "payoff at (state {z}, action1 {i}, action2 {j}) is not finite")
            }
            Violation::NegativeProbability { z, i, j, next, p } => write!(
                f,
                "transition (state {z}, action1 {i}, action2 {j}) -> state {next} has negative probability {p}"
            ),
            Violation::RowSum { z, i, j, sum } => write!(
                f,
                "transition row (state {z}, action1 {i}, action2 {j}) sums to {sum}, not 1"
            ),
            Violation::UnknownInitialState(name) => {
                write!(f, "initial state {name:?} is not among the declared states")
            }
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid game: {}", join(.0))]
    InvalidGame(Vec<Violation>),

    #[error("{source_name}:{line}:{column}: {message}")]
    Parse {
        source_name: String,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("unknown state index {0}")]
    UnknownState(usize),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(
        "counter threshold M = {threshold} is infeasible for epsilon = {epsilon}: \
         update probabilities can exceed 1; the minimal feasible M is {min_threshold}"
    )]
    InfeasibleThreshold {
        epsilon: f64,
        threshold: f64,
        min_threshold: f64,
    },

    #[error(
        "value iteration at rate {lambda} stopped after {iterations} iterations \
         with error bound {residual:e} above tolerance {tol:e}"
    )]
    IterationCap {
        lambda: f64,
        iterations: usize,
        residual: f64,
        tol: f64,
        best_values: Vec<f64>,
    },

    #[error("stage {t} is beyond the strategy table horizon {horizon}")]
    TableHorizon { t: usize, horizon: usize },

    #[error("adversary construction infeasible for component {component}: {reason}")]
    ConstructionInfeasible { component: usize, reason: String },
}

impl Error {
    /// Process exit code used by the command-line runner.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::IterationCap { .. } => 3,
            Error::ConstructionInfeasible { .. } => 4,
            _ => 2,
        }
    }
}

fn join(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
