use thiserror::Error;

use crate::discrete::DiscreteFunction;

/// Which part of a split function violated a sign requirement.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Part {
    Plus,
    Minus,
}

impl std::fmt::Display for Part {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Part::Plus => write!(f, "u+"),
            Part::Minus => write!(f, "u-"),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("cross-check failed: {0}")]
    CrossCheck(String),

    #[error("projection undefined: H = {h:e}, G = {g:e} (need H*G < 0)")]
    Sign { h: f64, g: f64 },

    #[error("{part} violates {which}: H = {h:e}, G = {g:e}")]
    PartSign {
        part: Part,
        which: &'static str,
        h: f64,
        g: f64,
    },

    #[error("no seed admits a nodal projection")]
    NoFeasibleSeed,

    #[error("not converged: {detail}")]
    NotConverged {
        detail: String,
        best: Option<Box<DiscreteFunction>>,
    },

    #[error("no positive solution: {0}")]
    NoPositiveSolution(String),

    #[error("bisection exhausted: {0}")]
    BisectionExhausted(String),

    #[error("super-solution violated at nodes {nodes:?} (worst defect {worst:e})")]
    SuperSolutionViolation { nodes: Vec<usize>, worst: f64 },

    #[error("zero function")]
    ZeroFunction,

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse: {0}")]
    Parse(String),
}

impl Error {
    /// Stable machine-readable code used by the command-line tool.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Domain(_) => "DOMAIN",
            Error::CrossCheck(_) => "CROSS_CHECK",
            Error::Sign { .. } => "SIGN_ERROR",
            Error::PartSign { .. } => "PART_SIGN_ERROR",
            Error::NoFeasibleSeed => "NO_FEASIBLE_SEED",
            Error::NotConverged { .. } => "NOT_CONVERGED",
            Error::NoPositiveSolution(_) => "NO_POSITIVE_SOLUTION",
            Error::BisectionExhausted(_) => "BISECTION_EXHAUSTED",
            Error::SuperSolutionViolation { .. } => "SUPER_SOLUTION_VIOLATION",
            Error::ZeroFunction => "ZERO_FUNCTION",
            Error::Io(_) => "IO",
            Error::Parse(_) => "PARSE",
        }
    }

    pub(crate) fn not_converged(detail: impl Into<String>, best: Option<DiscreteFunction>) -> Self {
        Error::NotConverged {
            detail: detail.into(),
            best: best.map(Box::new),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_exponent(r: f64) -> Result<()> {
    if r.is_finite() && r > 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "exponent r = {r} must satisfy r > 1"
        )))
    }
}
