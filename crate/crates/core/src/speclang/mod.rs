//! Syntactically co-safe LTL, its finite automata, and the transfer of
//! specifications from an abstraction to the concrete network.

mod automaton;
mod formula;
mod labeling;

pub use automaton::{absorb_dfa, compile_scltl, powerset_alphabet, Dfa, PropSet, Symbol, MAX_LOCATIONS};
pub use formula::{parse_scltl, Formula, MAX_BOUNDED_DEPTH};
pub use labeling::{transfer_probability, Aabb, Direction, LabeledPartition, Region};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpecError {
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("negation applied to a non-atomic formula at byte {pos}")]
    NegationNotOnAtom { pos: usize },
    #[error("bounded operator depth {depth} exceeds {max}")]
    BoundTooDeep { depth: usize, max: usize },
    #[error("automaton exceeds {0} locations")]
    StateBlowup(usize),
    #[error("letter {0} is not in the alphabet")]
    UnknownLetter(String),
    #[error("the alphabet already contains the fresh letter")]
    LetterClash,
    #[error("{0} lies outside [0, 1]")]
    OutOfRange(f64),
    #[error("invalid labeling: {0}")]
    InvalidLabeling(String),
    #[error("alphabet is empty or has duplicate letters")]
    InvalidAlphabet,
}
