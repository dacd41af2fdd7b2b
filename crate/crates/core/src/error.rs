//! Error types shared across the crate.

use thiserror::Error;

use crate::grammar::Rule;
use crate::symbol::Symbol;
use crate::word::Word;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormatError {
    #[error("illegal symbol name {0:?}")]
    BadSymbolName(String),
    #[error("line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("line {line}: rule touches axiom as patient")]
    AxiomPatient { line: usize },
    #[error("line {line}: unknown symbol {name}")]
    UnknownSymbol { line: usize, name: String },
    #[error("line {line}: duplicate final declaration")]
    DuplicateFinal { line: usize },
    #[error("missing final declaration")]
    MissingFinal,
    #[error(transparent)]
    Grammar(#[from] GrammarError),
    #[error(transparent)]
    Transformer(#[from] TransformError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GrammarError {
    #[error("rule touches axiom as patient: {0}")]
    AxiomPatient(Rule),
    #[error("symbol {0} is not in the alphabet")]
    UnknownSymbol(Symbol),
    #[error("final symbol {0} also declared as an ordinary symbol")]
    FinalInAlphabet(Symbol),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StepError {
    #[error("position {position} out of range for word of length {len}")]
    OutOfRange { position: usize, len: usize },
    #[error("actor mismatch at position {position}: expected {expected}, found {found}")]
    ActorMismatch {
        position: usize,
        expected: Symbol,
        found: Symbol,
    },
    #[error("patient mismatch at position {position}: expected {expected}, found {found}")]
    PatientMismatch {
        position: usize,
        expected: Symbol,
        found: Symbol,
    },
    #[error("rule {0} is not in the grammar")]
    UnknownRule(Rule),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DerivationError {
    #[error("invalid step {index}: {source}")]
    InvalidStep {
        /// 1-based index of the failing step.
        index: usize,
        #[source]
        source: StepError,
    },
    #[error("derivation endpoints differ from expected: {0}")]
    Endpoints(String),
    #[error("internal repair produced an invalid derivation: {0}")]
    Repair(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TransformError {
    #[error("symbol {0} appears in more than one of inputs/temps/outputs")]
    Overlap(Symbol),
    #[error("symbol {0} is not assigned to inputs, temps or outputs")]
    Uncovered(Symbol),
    #[error("input symbol {0} is active")]
    InputActive(Symbol),
    #[error("input symbol {0} is inserted")]
    InputInserted(Symbol),
    #[error("declared symbol {0} is not in the grammar alphabet")]
    Foreign(Symbol),
    #[error("not chainable: {0}")]
    NotChainable(String),
    #[error("not simple: {0}")]
    NotSimple(String),
    #[error("input alphabets differ")]
    InputMismatch,
    #[error("output alphabets overlap on {0}")]
    OutputOverlap(Symbol),
    #[error("word letter {0} outside the expected alphabet")]
    Alphabet(Symbol),
    #[error("{0}")]
    Shape(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SatError {
    #[error("line {line}: {message}")]
    Dimacs { line: usize, message: String },
    #[error("clause {clause} has {width} distinct literals; at most 3 are supported")]
    ClauseTooWide { clause: usize, width: usize },
    #[error("level {level} out of range 1..={max}")]
    LevelOutOfRange { level: usize, max: usize },
    #[error("valuation does not satisfy the formula")]
    Unsatisfied,
    #[error("valuation has {found} variables, formula has {expected}")]
    ValuationSize { expected: usize, found: usize },
    #[error("derivation endpoints are not the reduction's start and target words")]
    Endpoints,
    #[error("no valuation decoded from the derivation satisfies the formula")]
    DecodeFailed,
    #[error("padding count {k} too small: must exceed {min}")]
    PaddingTooSmall { k: usize, min: usize },
    #[error(transparent)]
    Derivation(#[from] DerivationError),
    #[error(transparent)]
    Transform(#[from] TransformError),
    #[error(transparent)]
    Grammar(#[from] GrammarError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ClosureError {
    #[error("anchor {0} must be a temporary symbol")]
    AnchorNotTemporary(Symbol),
    #[error("start and end anchors coincide: {0}")]
    SameAnchors(Symbol),
    #[error("transformer has no anchors")]
    MissingAnchors,
    #[error("symbol {0} is not fresh")]
    NotFresh(Symbol),
    #[error("renaming: {0}")]
    Renaming(String),
    #[error("the final symbol erases an input or the start anchor: {0}")]
    FinalErasesInput(Rule),
    #[error("wrapped transformers do not share a symbol universe: {0} is unknown")]
    UniverseMismatch(Symbol),
    #[error("precondition fails at the given bounds: ({0}, {1})")]
    Precondition(Word, Word),
    #[error("cannot mimic step {index}: {reason}")]
    Mimicry { index: usize, reason: String },
    #[error(transparent)]
    Derivation(#[from] DerivationError),
    #[error(transparent)]
    Transform(#[from] TransformError),
    #[error(transparent)]
    Grammar(#[from] GrammarError),
}
