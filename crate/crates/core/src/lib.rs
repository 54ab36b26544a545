pub mod cli;
pub mod constructions;
pub mod covering;
pub mod entropy;
pub mod error;
pub mod ifs;
pub mod measure;
pub mod rational;
pub mod search;
pub mod tree;
mod serde_util;

pub use error::{Budget, Error, Result};
pub use rational::Rational;
