//! Self-complementary nonadditive quantum codes for the amplitude-damping
//! channel.
//!
//! A code is a set `S` of `n`-bit words closed under bitwise complement; its
//! basis states are `(|u> + |ū>)/√2`. The crate covers the whole pipeline:
//!
//! - [`codeset`]: word arithmetic, the single-decay conflict relation and
//!   validation of candidate sets.
//! - [`search`]: greedy and exact maximisation of `|S|`.
//! - [`linalg`]: dense/sparse complex matrices, a Hermitian eigensolver and
//!   Uhlmann fidelity.
//! - [`channel`]: amplitude-damping Kraus operators and channel application.
//! - [`recovery`]: the channel-adapted recovery built from damped pair vectors.
//! - [`analysis`]: composite channel evaluation, fidelity curves and
//!   first-order residual checks.
//! - [`cli`]: the `adcodes` command line.

pub mod analysis;
pub mod channel;
pub mod cli;
pub mod codeset;
pub mod error;
pub mod linalg;
pub mod recovery;
pub mod search;

pub use error::{Error, Result};

/// The (8, 12) code used throughout the examples and tests.
pub const EXAMPLE_CODE_8_12_JSON: &str = include_str!("../data/code_8_12.json");

pub fn example_code_8_12() -> codeset::CodeSet {
    codeset::CodeSet::from_json(EXAMPLE_CODE_8_12_JSON).expect("bundled code parses")
}
