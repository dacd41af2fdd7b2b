//! Words over interned symbols, stuttering and subword orders.

use std::collections::BTreeSet;
use std::fmt;
use std::ops::{Deref, DerefMut};

use serde::{Serialize, Serializer};

use crate::error::FormatError;
use crate::symbol::Symbol;

/// A finite sequence of symbols.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Word(pub Vec<Symbol>);

impl Word {
    pub fn new() -> Word {
        Word(Vec::new())
    }

    /// Parses whitespace-separated symbol names. `-` and `ε` denote the empty word.
    pub fn parse(text: &str) -> Result<Word, FormatError> {
        let mut letters = Vec::new();
        for tok in text.split_whitespace() {
            if tok == "-" || tok == "ε" {
                continue;
            }
            letters.push(Symbol::parse(tok)?);
        }
        Ok(Word(letters))
    }

    /// Builds a word from names, panicking on illegal names.
    pub fn of(names: &[&str]) -> Word {
        Word(names.iter().map(|n| Symbol::new(n)).collect())
    }

    pub fn concat(&self, other: &[Symbol]) -> Word {
        let mut v = self.0.clone();
        v.extend_from_slice(other);
        Word(v)
    }

    pub fn with_final(&self, g: Symbol) -> Word {
        let mut v = self.0.clone();
        v.push(g);
        Word(v)
    }

    /// Drops a trailing `g`, if present.
    pub fn strip_final(&self, g: Symbol) -> Word {
        match self.0.split_last() {
            Some((&last, rest)) if last == g => Word(rest.to_vec()),
            _ => self.clone(),
        }
    }

    pub fn is_over(&self, alphabet: &BTreeSet<Symbol>) -> bool {
        self.0.iter().all(|s| alphabet.contains(s))
    }

    /// Rendering for TSV output: names joined by spaces, `-` for ε.
    pub fn to_tsv(&self) -> String {
        if self.0.is_empty() {
            "-".to_string()
        } else {
            self.to_string()
        }
    }
}

impl Deref for Word {
    type Target = Vec<Symbol>;
    fn deref(&self) -> &Vec<Symbol> {
        &self.0
    }
}

impl DerefMut for Word {
    fn deref_mut(&mut self) -> &mut Vec<Symbol> {
        &mut self.0
    }
}

impl From<Vec<Symbol>> for Word {
    fn from(v: Vec<Symbol>) -> Word {
        Word(v)
    }
}

impl FromIterator<Symbol> for Word {
    fn from_iter<I: IntoIterator<Item = Symbol>>(iter: I) -> Word {
        Word(iter.into_iter().collect())
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, s) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            f.write_str(s.name())?;
        }
        Ok(())
    }
}

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}]", self)
    }
}

impl Serialize for Word {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// The shortest stuttering-equivalent word: adjacent repeats collapsed.
pub fn stutter_canonical(w: &[Symbol]) -> Word {
    let mut out: Vec<Symbol> = Vec::with_capacity(w.len());
    for &s in w {
        if out.last() != Some(&s) {
            out.push(s);
        }
    }
    Word(out)
}

pub fn stutter_equivalent(x: &[Symbol], y: &[Symbol]) -> bool {
    stutter_canonical(x) == stutter_canonical(y)
}

/// `x ⊑ y`, optionally requiring every letter deleted from `y` to lie in `allowed`.
///
/// The unrestricted order uses greedy leftmost matching; the restricted one
/// tracks every reachable prefix of `x`.
pub fn is_subword(x: &[Symbol], y: &[Symbol], allowed: Option<&BTreeSet<Symbol>>) -> bool {
    match allowed {
        None => {
            let mut it = y.iter();
            x.iter().all(|s| it.any(|t| t == s))
        }
        Some(allowed) => restricted_subword(x, y, allowed),
    }
}

fn restricted_subword(x: &[Symbol], y: &[Symbol], allowed: &BTreeSet<Symbol>) -> bool {
    // reach[i] = some embedding of x[..i] into the scanned prefix of y deletes only allowed letters
    let n = x.len();
    let mut reach = vec![false; n + 1];
    reach[0] = true;
    for &t in y {
        let mut next = vec![false; n + 1];
        for i in 0..=n {
            if !reach[i] {
                continue;
            }
            if allowed.contains(&t) {
                next[i] = true;
            }
            if i < n && x[i] == t {
                next[i + 1] = true;
            }
        }
        reach = next;
    }
    reach[n]
}

/// All subwords of `w` (as a set, so duplicates collapse).
pub fn subwords(w: &[Symbol]) -> BTreeSet<Word> {
    let mut out = BTreeSet::new();
    let n = w.len();
    assert!(n < 24, "subword enumeration is exponential");
    for mask in 0u32..(1u32 << n) {
        out.insert(
            w.iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, &s)| s)
                .collect(),
        );
    }
    out
}

/// All words over `alphabet` of length at most `max_len`, shortest first.
pub fn words_up_to(alphabet: &[Symbol], max_len: usize) -> Vec<Word> {
    let mut out = vec![Word::new()];
    let mut layer = vec![Word::new()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for w in &layer {
            for &s in alphabet {
                next.push(w.concat(&[s]));
            }
        }
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(s: &str) -> Word {
        Word::parse(s).unwrap()
    }

    #[test]
    fn canonical_examples() {
        assert_eq!(stutter_canonical(&w("a a b b a")), w("a b a"));
        assert_eq!(stutter_canonical(&w("")), w(""));
        assert_eq!(stutter_canonical(&w("a b a")), w("a b a"));
    }

    #[test]
    fn subword_examples() {
        assert!(is_subword(&w("a b"), &w("a c b"), None));
        let d: BTreeSet<Symbol> = [Symbol::new("d")].into();
        assert!(!is_subword(&w("a b"), &w("a c b"), Some(&d)));
        assert!(!is_subword(&w("b a"), &w("a b"), None));
    }

    #[test]
    fn restricted_subword_needs_backtracking_free_choice() {
        // x = a, y = a c a with only c deletable: embed x at the last a.
        let c: BTreeSet<Symbol> = [Symbol::new("c")].into();
        assert!(!is_subword(&w("a"), &w("a c a"), Some(&c)));
        let ac: BTreeSet<Symbol> = [Symbol::new("c"), Symbol::new("a")].into();
        assert!(is_subword(&w("a"), &w("a c a"), Some(&ac)));
        let x: BTreeSet<Symbol> = [Symbol::new("a")].into();
        assert!(is_subword(&w("c"), &w("a c a"), Some(&x)));
    }

    #[test]
    fn word_enumeration_counts() {
        let a = [Symbol::new("a"), Symbol::new("b")];
        assert_eq!(words_up_to(&a, 2).len(), 1 + 2 + 4);
        assert_eq!(subwords(&w("a b a")).len(), 7);
    }
}
