//! Interned grammar letters.
//!
//! Symbols live in a process-wide table so that grammars built by different
//! constructions can be combined without translation. Equality and hashing go
//! through the interned id; ordering goes through the name so that every
//! enumeration that sorts symbols is reproducible across runs.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::{OnceLock, RwLock};

use crate::error::FormatError;

#[derive(Default)]
struct Interner {
    ids: HashMap<&'static str, u32>,
    names: Vec<&'static str>,
}

fn interner() -> &'static RwLock<Interner> {
    static TABLE: OnceLock<RwLock<Interner>> = OnceLock::new();
    TABLE.get_or_init(|| RwLock::new(Interner::default()))
}

/// A grammar letter.
#[derive(Clone, Copy)]
pub struct Symbol(u32);

impl Symbol {
    /// Interns `name`, panicking if it is not a legal symbol name.
    ///
    /// Use [`Symbol::parse`] for untrusted input.
    pub fn new(name: &str) -> Symbol {
        match Symbol::parse(name) {
            Ok(s) => s,
            Err(e) => panic!("{e}"),
        }
    }

    pub fn parse(name: &str) -> Result<Symbol, FormatError> {
        if !is_legal_name(name) {
            return Err(FormatError::BadSymbolName(name.to_string()));
        }
        if let Some(&id) = interner().read().unwrap().ids.get(name) {
            return Ok(Symbol(id));
        }
        let mut table = interner().write().unwrap();
        if let Some(&id) = table.ids.get(name) {
            return Ok(Symbol(id));
        }
        let leaked: &'static str = Box::leak(name.to_string().into_boxed_str());
        let id = table.names.len() as u32;
        table.names.push(leaked);
        table.ids.insert(leaked, id);
        Ok(Symbol(id))
    }

    /// Looks a name up without interning it.
    pub fn lookup(name: &str) -> Option<Symbol> {
        interner().read().unwrap().ids.get(name).map(|&id| Symbol(id))
    }

    pub fn name(self) -> &'static str {
        interner().read().unwrap().names[self.0 as usize]
    }

    pub fn id(self) -> u32 {
        self.0
    }

    /// The symbol named `self.name() + suffix`.
    pub fn suffixed(self, suffix: &str) -> Symbol {
        Symbol::new(&format!("{}{}", self.name(), suffix))
    }
}

/// Legal names: nonempty, drawn from `[A-Za-z0-9_.'"-]`.
pub fn is_legal_name(name: &str) -> bool {
    !name.is_empty()
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '.' | '\'' | '"' | '-'))
}

impl PartialEq for Symbol {
    fn eq(&self, other: &Self) -> bool {
        self.0 == other.0
    }
}

impl Eq for Symbol {}

impl Hash for Symbol {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.0.hash(state)
    }
}

impl Ord for Symbol {
    fn cmp(&self, other: &Self) -> Ordering {
        if self.0 == other.0 {
            Ordering::Equal
        } else {
            self.name().cmp(other.name())
        }
    }
}

impl PartialOrd for Symbol {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl serde::Serialize for Symbol {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interning_is_stable() {
        let a = Symbol::new("sym_test_a");
        let b = Symbol::new("sym_test_a");
        assert_eq!(a, b);
        assert_eq!(a.name(), "sym_test_a");
        assert_eq!(Symbol::lookup("sym_test_a"), Some(a));
    }

    #[test]
    fn ordering_follows_names() {
        let z = Symbol::new("zz_order");
        let a = Symbol::new("aa_order");
        assert!(a < z);
    }

    #[test]
    fn illegal_names_rejected() {
        assert!(Symbol::parse("").is_err());
        assert!(Symbol::parse("a b").is_err());
        assert!(Symbol::parse("a#").is_err());
        assert!(Symbol::parse("T'1.0").is_ok());
    }
}
