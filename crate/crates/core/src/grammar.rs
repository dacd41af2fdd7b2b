//! Rules, grammars and the one-step rewrite relation.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

use serde::Serialize;

use crate::error::{GrammarError, StepError};
use crate::symbol::Symbol;
use crate::word::Word;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum RuleKind {
    /// `a → b`: the actor inserts the patient immediately to its left.
    Insertion,
    /// `d ⇢ c`: the actor deletes the patient immediately to its left.
    Deletion,
}

/// A leftist rule in shorthand form.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Rule {
    pub kind: RuleKind,
    pub actor: Symbol,
    pub patient: Symbol,
}

impl Rule {
    pub fn insert(actor: Symbol, patient: Symbol) -> Rule {
        Rule {
            kind: RuleKind::Insertion,
            actor,
            patient,
        }
    }

    pub fn delete(actor: Symbol, patient: Symbol) -> Rule {
        Rule {
            kind: RuleKind::Deletion,
            actor,
            patient,
        }
    }

    /// `Rule::ins("a", "b")`, panicking on illegal names.
    pub fn ins(actor: &str, patient: &str) -> Rule {
        Rule::insert(Symbol::new(actor), Symbol::new(patient))
    }

    pub fn del(actor: &str, patient: &str) -> Rule {
        Rule::delete(Symbol::new(actor), Symbol::new(patient))
    }

    pub fn is_insertion(&self) -> bool {
        self.kind == RuleKind::Insertion
    }

    pub fn is_deletion(&self) -> bool {
        self.kind == RuleKind::Deletion
    }

    /// Applies `f` to both letters.
    pub fn map(&self, mut f: impl FnMut(Symbol) -> Symbol) -> Rule {
        Rule {
            kind: self.kind,
            actor: f(self.actor),
            patient: f(self.patient),
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            RuleKind::Insertion => write!(f, "{} -> {}", self.actor, self.patient),
            RuleKind::Deletion => write!(f, "{} ~> {}", self.actor, self.patient),
        }
    }
}

impl fmt::Debug for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl Serialize for Rule {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// One rewrite step: `position` is the 1-based index of the active letter in
/// the word before the step.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Step {
    pub rule: Rule,
    pub position: usize,
}

impl Step {
    pub fn new(rule: Rule, position: usize) -> Step {
        Step { rule, position }
    }
}

impl fmt::Display for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.rule.kind {
            RuleKind::Insertion => "ins",
            RuleKind::Deletion => "del",
        };
        write!(
            f,
            "{} {} {} @ {}",
            tag, self.rule.actor, self.rule.patient, self.position
        )
    }
}

impl Serialize for Step {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

#[derive(Clone, Debug, Default)]
struct ActorRules {
    /// Inserted patients, sorted by name.
    inserts: Vec<Symbol>,
    deletes: HashSet<Symbol>,
}

/// A leftist grammar `(Σ, P, g)`.
#[derive(Clone)]
pub struct Grammar {
    alphabet: BTreeSet<Symbol>,
    final_sym: Symbol,
    rules: BTreeSet<Rule>,
    by_actor: HashMap<Symbol, ActorRules>,
}

impl Grammar {
    /// Builds a grammar, checking that rules stay inside `alphabet ∪ {final}`
    /// and never take the final symbol as patient.
    pub fn new(
        alphabet: BTreeSet<Symbol>,
        final_sym: Symbol,
        rules: impl IntoIterator<Item = Rule>,
    ) -> Result<Grammar, GrammarError> {
        if alphabet.contains(&final_sym) {
            return Err(GrammarError::FinalInAlphabet(final_sym));
        }
        let rules: BTreeSet<Rule> = rules.into_iter().collect();
        for r in &rules {
            if r.patient == final_sym {
                return Err(GrammarError::AxiomPatient(*r));
            }
            for s in [r.actor, r.patient] {
                if s != final_sym && !alphabet.contains(&s) {
                    return Err(GrammarError::UnknownSymbol(s));
                }
            }
        }
        let mut by_actor: HashMap<Symbol, ActorRules> = HashMap::new();
        for r in &rules {
            let e = by_actor.entry(r.actor).or_default();
            match r.kind {
                RuleKind::Insertion => e.inserts.push(r.patient),
                RuleKind::Deletion => {
                    e.deletes.insert(r.patient);
                }
            }
        }
        for e in by_actor.values_mut() {
            e.inserts.sort();
        }
        Ok(Grammar {
            alphabet,
            final_sym,
            rules,
            by_actor,
        })
    }

    /// Builds a grammar whose alphabet is every non-final symbol the rules mention.
    pub fn from_rules(
        final_sym: Symbol,
        rules: impl IntoIterator<Item = Rule>,
    ) -> Result<Grammar, GrammarError> {
        let rules: Vec<Rule> = rules.into_iter().collect();
        let alphabet = rules
            .iter()
            .flat_map(|r| [r.actor, r.patient])
            .filter(|&s| s != final_sym)
            .collect();
        Grammar::new(alphabet, final_sym, rules)
    }

    pub fn alphabet(&self) -> &BTreeSet<Symbol> {
        &self.alphabet
    }

    pub fn final_symbol(&self) -> Symbol {
        self.final_sym
    }

    pub fn rules(&self) -> &BTreeSet<Rule> {
        &self.rules
    }

    pub fn contains_rule(&self, r: &Rule) -> bool {
        self.rules.contains(r)
    }

    pub fn has_deletion(&self, actor: Symbol, patient: Symbol) -> bool {
        self.by_actor
            .get(&actor)
            .is_some_and(|e| e.deletes.contains(&patient))
    }

    pub fn has_insertion(&self, actor: Symbol, patient: Symbol) -> bool {
        self.by_actor
            .get(&actor)
            .is_some_and(|e| e.inserts.binary_search(&patient).is_ok())
    }

    /// `ins(a)`, sorted by name.
    pub fn inserted_by(&self, actor: Symbol) -> &[Symbol] {
        self.by_actor
            .get(&actor)
            .map(|e| e.inserts.as_slice())
            .unwrap_or(&[])
    }

    pub fn is_inactive(&self, s: Symbol) -> bool {
        self.by_actor
            .get(&s)
            .is_none_or(|e| e.inserts.is_empty() && e.deletes.is_empty())
    }

    /// Σ ∪ {g}.
    pub fn full_alphabet(&self) -> BTreeSet<Symbol> {
        let mut s = self.alphabet.clone();
        s.insert(self.final_sym);
        s
    }

    /// Symbols that no rule ever deletes.
    pub fn undeletable(&self) -> HashSet<Symbol> {
        let deleted: HashSet<Symbol> = self
            .rules
            .iter()
            .filter(|r| r.is_deletion())
            .map(|r| r.patient)
            .collect();
        self.full_alphabet()
            .into_iter()
            .filter(|s| !deleted.contains(s))
            .collect()
    }

    /// True when the may-act-upon graph (actor → patient over all rules) has no cycle.
    pub fn is_acyclic(&self) -> bool {
        let mut succ: BTreeMap<Symbol, Vec<Symbol>> = BTreeMap::new();
        for r in &self.rules {
            succ.entry(r.actor).or_default().push(r.patient);
        }
        // 0 = unvisited, 1 = on stack, 2 = done
        let mut state: HashMap<Symbol, u8> = HashMap::new();
        for &start in succ.keys() {
            if state.get(&start).copied().unwrap_or(0) != 0 {
                continue;
            }
            let mut stack: Vec<(Symbol, usize)> = vec![(start, 0)];
            state.insert(start, 1);
            while let Some((node, idx)) = stack.pop() {
                let next = succ.get(&node).and_then(|v| v.get(idx)).copied();
                match next {
                    Some(n) => {
                        stack.push((node, idx + 1));
                        match state.get(&n).copied().unwrap_or(0) {
                            0 => {
                                state.insert(n, 1);
                                stack.push((n, 0));
                            }
                            1 => return false,
                            _ => {}
                        }
                    }
                    None => {
                        state.insert(node, 2);
                    }
                }
            }
        }
        true
    }

    /// Same alphabet and final symbol, different rule set.
    pub fn with_rules(&self, rules: impl IntoIterator<Item = Rule>) -> Result<Grammar, GrammarError> {
        Grammar::new(self.alphabet.clone(), self.final_sym, rules)
    }

    /// Renames every symbol through `f` (which must be injective on Σ ∪ {g}).
    pub fn rename(&self, f: &impl Fn(Symbol) -> Symbol) -> Result<Grammar, GrammarError> {
        Grammar::new(
            self.alphabet.iter().map(|&s| f(s)).collect(),
            f(self.final_sym),
            self.rules.iter().map(|r| r.map(f)),
        )
    }

    /// Applies one step, checking the rule belongs to the grammar.
    pub fn apply_step(&self, w: &[Symbol], s: &Step) -> Result<Word, StepError> {
        if !self.rules.contains(&s.rule) {
            return Err(StepError::UnknownRule(s.rule));
        }
        apply_rule(w, s)
    }

    /// Every step applicable to `w`, ordered by position, then insertions
    /// before deletions, then patient name.
    pub fn enabled_steps(&self, w: &[Symbol]) -> Vec<Step> {
        let mut out = Vec::new();
        for (i, &x) in w.iter().enumerate() {
            self.push_steps_at(w, i, x, &mut out);
        }
        out
    }

    /// The steps whose active letter is at 0-based index `i`.
    pub(crate) fn push_steps_at(&self, w: &[Symbol], i: usize, x: Symbol, out: &mut Vec<Step>) {
        let Some(e) = self.by_actor.get(&x) else {
            return;
        };
        for &b in &e.inserts {
            out.push(Step::new(Rule::insert(x, b), i + 1));
        }
        if i > 0 && e.deletes.contains(&w[i - 1]) {
            out.push(Step::new(Rule::delete(x, w[i - 1]), i + 1));
        }
    }
}

/// Applies a step without checking grammar membership.
pub fn apply_rule(w: &[Symbol], s: &Step) -> Result<Word, StepError> {
    let p = s.position;
    if p == 0 || p > w.len() {
        return Err(StepError::OutOfRange {
            position: p,
            len: w.len(),
        });
    }
    if w[p - 1] != s.rule.actor {
        return Err(StepError::ActorMismatch {
            position: p,
            expected: s.rule.actor,
            found: w[p - 1],
        });
    }
    let mut out = Vec::with_capacity(w.len() + 1);
    match s.rule.kind {
        RuleKind::Insertion => {
            out.extend_from_slice(&w[..p - 1]);
            out.push(s.rule.patient);
            out.extend_from_slice(&w[p - 1..]);
        }
        RuleKind::Deletion => {
            if p < 2 {
                return Err(StepError::OutOfRange {
                    position: p,
                    len: w.len(),
                });
            }
            if w[p - 2] != s.rule.patient {
                return Err(StepError::PatientMismatch {
                    position: p - 1,
                    expected: s.rule.patient,
                    found: w[p - 2],
                });
            }
            out.extend_from_slice(&w[..p - 2]);
            out.extend_from_slice(&w[p - 1..]);
        }
    }
    Ok(Word(out))
}

impl fmt::Debug for Grammar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grammar")
            .field("alphabet", &self.alphabet)
            .field("final", &self.final_sym)
            .field("rules", &self.rules)
            .finish()
    }
}

impl PartialEq for Grammar {
    fn eq(&self, other: &Self) -> bool {
        self.alphabet == other.alphabet
            && self.final_sym == other.final_sym
            && self.rules == other.rules
    }
}

impl Eq for Grammar {}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    /// `G0 = ({a, c}, {g → c, c → c, c ⇢ a}, g)`.
    pub fn g0() -> Grammar {
        Grammar::from_rules(
            Symbol::new("g"),
            [Rule::ins("g", "c"), Rule::ins("c", "c"), Rule::del("c", "a")],
        )
        .unwrap()
    }

    fn w(s: &str) -> Word {
        Word::parse(s).unwrap()
    }

    #[test]
    fn apply_step_examples() {
        let g = g0();
        let r = g.apply_step(&w("a g"), &Step::new(Rule::ins("g", "c"), 2)).unwrap();
        assert_eq!(r, w("a c g"));
        let r = g.apply_step(&w("a c g"), &Step::new(Rule::del("c", "a"), 2)).unwrap();
        assert_eq!(r, w("c g"));
        let e = g.apply_step(&w("c g"), &Step::new(Rule::del("c", "a"), 2));
        assert!(matches!(e, Err(StepError::ActorMismatch { .. })));
        let e = g.apply_step(&w("c c g"), &Step::new(Rule::del("c", "a"), 2));
        assert!(matches!(e, Err(StepError::PatientMismatch { .. })));
        let e = g.apply_step(&w("a g"), &Step::new(Rule::ins("g", "c"), 3));
        assert!(matches!(e, Err(StepError::OutOfRange { .. })));
        let e = g.apply_step(&w("a g"), &Step::new(Rule::ins("g", "a"), 2));
        assert!(matches!(e, Err(StepError::UnknownRule(_))));
    }

    #[test]
    fn enabled_steps_examples() {
        let g = g0();
        assert_eq!(
            g.enabled_steps(&w("a g")),
            vec![Step::new(Rule::ins("g", "c"), 2)]
        );
        assert_eq!(
            g.enabled_steps(&w("a c g")),
            vec![
                Step::new(Rule::ins("c", "c"), 2),
                Step::new(Rule::del("c", "a"), 2),
                Step::new(Rule::ins("g", "c"), 3),
            ]
        );
        assert!(g.enabled_steps(&[]).is_empty());
    }

    #[test]
    fn axiom_patient_rejected() {
        let e = Grammar::from_rules(Symbol::new("g"), [Rule::ins("g", "g")]);
        assert!(matches!(e, Err(GrammarError::AxiomPatient(_))));
    }

    #[test]
    fn acyclicity() {
        assert!(!g0().is_acyclic()); // c → c
        let g = Grammar::from_rules(
            Symbol::new("g"),
            [Rule::ins("g", "c"), Rule::del("c", "a")],
        )
        .unwrap();
        assert!(g.is_acyclic());
    }
}
