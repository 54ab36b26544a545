use thiserror::Error;

use crate::covering::FiberWitness;

/// Default cap on the number of words (or atoms, pairs, trees) an operation may enumerate.
pub const DEFAULT_BUDGET: u64 = 10_000_000;

/// Hard cap on enumeration size. Exceeding it is an error, never a silent truncation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Budget(pub u64);

impl Default for Budget {
    fn default() -> Self {
        Budget(DEFAULT_BUDGET)
    }
}

impl Budget {
    pub fn check(self, required: u128) -> Result<(), Error> {
        if required > u128::from(self.0) {
            Err(Error::BudgetExceeded { required, allowed: self.0 })
        } else {
            Ok(())
        }
    }

    /// `base^exp`, saturating, as a budget requirement.
    pub fn power(base: usize, exp: usize) -> u128 {
        let mut acc: u128 = 1;
        for _ in 0..exp {
            acc = acc.saturating_mul(base as u128);
            if acc == u128::MAX {
                break;
            }
        }
        acc
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("contraction ratio {0} is not in (0, 1)")]
    InvalidRatio(String),
    #[error("an IFS needs at least two maps, got {0}")]
    TooFewMaps(usize),
    #[error("all maps share one fixed point; the attractor is a single point")]
    AllMapsShareFixedPoint,
    #[error("symbol {symbol} out of range for an alphabet of {alphabet} maps")]
    SymbolOutOfRange { symbol: usize, alphabet: usize },
    #[error("budget exceeded: {required} required, {allowed} allowed")]
    BudgetExceeded { required: u128, allowed: u64 },
    #[error("level must be at least 1")]
    LevelZero,
    #[error("input point set is empty")]
    EmptyInput,
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("exact overlap present at level {level}")]
    OverlapPresent { level: usize, witness: Box<FiberWitness> },
    #[error("value {0} lies outside [0, 1]")]
    OutOfRange(String),
    #[error("node has zero mass")]
    ZeroMassNode,
    #[error("node at level {level} cannot look {m} generations down in a tree of height {height}")]
    DepthExceeded { level: usize, m: usize, height: usize },
    #[error("scale factor must be non-zero")]
    ZeroScale,
    #[error("interval carries zero mass")]
    ZeroMassInterval,
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("inclusion probability {0} is not in (0, 1)")]
    InvalidProbability(f64),
}

impl Error {
    pub fn is_budget(&self) -> bool {
        matches!(self, Error::BudgetExceeded { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
