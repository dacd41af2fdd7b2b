//! Leftist grammars: rewriting, derivation normal forms, word transformers and
//! the constructions built on them.

pub mod cli;
pub mod closure;
pub mod derivation;
pub mod error;
pub mod format;
pub mod grammar;
pub mod reach;
pub mod sat;
pub mod simple;
pub mod symbol;
pub mod transform;
pub mod word;

pub use derivation::{Derivation, DerivationReport, Measure, Minimality};
pub use error::{ClosureError, DerivationError, FormatError, GrammarError, SatError, StepError, TransformError};
pub use grammar::{apply_rule, Grammar, Rule, RuleKind, Step};
pub use symbol::Symbol;
pub use word::{is_subword, stutter_canonical, stutter_equivalent, Word};
