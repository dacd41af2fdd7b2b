//! Derivations: replay, letter tracking, the leftmost/eager/pure/greedy
//! predicates, the μ-measure, greedy normalization and μ-minimality.

use std::collections::HashSet;

use serde::Serialize;

use crate::error::{DerivationError, StepError};
use crate::grammar::{apply_rule, Grammar, Rule, RuleKind, Step};
use crate::symbol::Symbol;
use crate::word::Word;

/// An initial word and a sequence of steps. The grammar is supplied separately.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Derivation {
    pub initial: Word,
    pub steps: Vec<Step>,
}

/// `⟨n, p₁, …, p_n⟩`, ordered lexicographically with the length first.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Measure {
    pub length: usize,
    pub positions: Vec<usize>,
}

impl std::fmt::Display for Measure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "<{}", self.length)?;
        for p in &self.positions {
            write!(f, ",{p}")?;
        }
        f.write_str(">")
    }
}

pub type LetterId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Birth {
    Initial,
    /// Inserted by letter `by` at (1-based) step `step`.
    Inserted { by: LetterId, step: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Death {
    Survives,
    Deleted { by: LetterId, step: usize },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Letter {
    pub symbol: Symbol,
    pub birth: Birth,
    pub death: Death,
    /// Steps (1-based) at which this letter is active.
    pub active_at: Vec<usize>,
}

impl Letter {
    fn last_active(&self) -> usize {
        self.active_at.last().copied().unwrap_or(0)
    }
}

/// A step in letter-identity form: `active` inserts or deletes `other`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct IdStep {
    rule: Rule,
    active: LetterId,
    other: LetterId,
}

#[derive(Clone, Debug)]
pub struct TracedDerivation {
    pub derivation: Derivation,
    /// `u₀ … u_n`.
    pub words: Vec<Word>,
    /// Letter ids of each intermediate word, parallel to `words`.
    pub ids: Vec<Vec<LetterId>>,
    pub letters: Vec<Letter>,
    pub useful: Vec<bool>,
    id_steps: Vec<IdStep>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DerivationReport {
    pub leftmost: bool,
    pub eager: bool,
    pub pure: bool,
    pub greedy: bool,
    pub measure: Measure,
    pub useless: Vec<LetterId>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Minimality {
    Minimal,
    NotMinimal(Derivation),
    BudgetExceeded,
}

impl Derivation {
    pub fn new(initial: Word, steps: Vec<Step>) -> Derivation {
        Derivation { initial, steps }
    }

    pub fn empty(initial: Word) -> Derivation {
        Derivation::new(initial, Vec::new())
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn measure(&self) -> Measure {
        Measure {
            length: self.steps.len(),
            positions: self.steps.iter().map(|s| s.position).collect(),
        }
    }

    /// The intermediate words `u₀ … u_n`.
    pub fn replay(&self, g: &Grammar) -> Result<Vec<Word>, DerivationError> {
        let mut words = Vec::with_capacity(self.steps.len() + 1);
        words.push(self.initial.clone());
        for (k, s) in self.steps.iter().enumerate() {
            let next = g
                .apply_step(&words[k], s)
                .map_err(|source| DerivationError::InvalidStep { index: k + 1, source })?;
            words.push(next);
        }
        Ok(words)
    }

    pub fn final_word(&self, g: &Grammar) -> Result<Word, DerivationError> {
        Ok(self.replay(g)?.pop().expect("replay yields at least one word"))
    }

    /// Concatenation; the caller guarantees the endpoints match.
    pub fn then(&self, other: &Derivation) -> Derivation {
        let mut steps = self.steps.clone();
        steps.extend_from_slice(&other.steps);
        Derivation::new(self.initial.clone(), steps)
    }

    /// Steps `from..to` (0-based, exclusive end) as a derivation of their own.
    pub fn slice(&self, g: &Grammar, from: usize, to: usize) -> Result<Derivation, DerivationError> {
        let words = self.replay(g)?;
        Ok(Derivation::new(words[from].clone(), self.steps[from..to].to_vec()))
    }

    pub fn trace(&self, g: &Grammar) -> Result<TracedDerivation, DerivationError> {
        let words = self.replay(g)?;
        let mut letters: Vec<Letter> = self
            .initial
            .iter()
            .map(|&s| Letter {
                symbol: s,
                birth: Birth::Initial,
                death: Death::Survives,
                active_at: Vec::new(),
            })
            .collect();
        let mut cur: Vec<LetterId> = (0..letters.len()).collect();
        let mut ids = vec![cur.clone()];
        let mut id_steps = Vec::with_capacity(self.steps.len());
        for (k, s) in self.steps.iter().enumerate() {
            let step_no = k + 1;
            let idx = s.position - 1;
            let active = cur[idx];
            letters[active].active_at.push(step_no);
            let other = match s.rule.kind {
                RuleKind::Insertion => {
                    let id = letters.len();
                    letters.push(Letter {
                        symbol: s.rule.patient,
                        birth: Birth::Inserted { by: active, step: step_no },
                        death: Death::Survives,
                        active_at: Vec::new(),
                    });
                    cur.insert(idx, id);
                    id
                }
                RuleKind::Deletion => {
                    let id = cur.remove(idx - 1);
                    letters[id].death = Death::Deleted { by: active, step: step_no };
                    id
                }
            };
            id_steps.push(IdStep { rule: s.rule, active, other });
            ids.push(cur.clone());
        }
        let useful = usefulness(&letters, &id_steps);
        Ok(TracedDerivation {
            derivation: self.clone(),
            words,
            ids,
            letters,
            useful,
            id_steps,
        })
    }

    pub fn classify(&self, g: &Grammar) -> Result<DerivationReport, DerivationError> {
        Ok(self.trace(g)?.report(g))
    }

    pub fn is_greedy(&self, g: &Grammar) -> Result<bool, DerivationError> {
        Ok(self.classify(g)?.greedy)
    }

    /// An equivalent greedy derivation with measure at most `self`'s.
    pub fn greedy_normalize(&self, g: &Grammar) -> Result<Derivation, DerivationError> {
        let mut current = self.clone();
        let target = self.final_word(g)?;
        loop {
            let t = current.trace(g)?;
            let mut repaired = None;
            for candidate in t.repair_candidates(g) {
                let Ok(d) = candidate else { continue };
                if d.initial == current.initial
                    && d.final_word(g).ok().as_ref() == Some(&target)
                    && d.measure() < current.measure()
                {
                    repaired = Some(d);
                    break;
                }
            }
            match repaired {
                Some(d) => current = d,
                None => {
                    if t.report(g).greedy {
                        return Ok(current);
                    }
                    return Err(DerivationError::Repair(format!(
                        "no valid repair for non-greedy derivation with measure {}",
                        current.measure()
                    )));
                }
            }
        }
    }

    /// Searches every derivation between the same endpoints with at most
    /// `self.len()` steps for one of strictly smaller measure. `budget` caps
    /// the number of search nodes.
    pub fn is_mu_minimal(&self, g: &Grammar, budget: u64) -> Result<Minimality, DerivationError> {
        let target = self.final_word(g)?;
        let mine = self.measure();
        let mut search = MuSearch {
            g,
            target: &target,
            undeletable: g.undeletable(),
            budget,
            nodes: 0,
            bound: &mine.positions,
            dead: HashSet::new(),
        };
        for len in 0..=mine.length {
            search.dead.clear();
            let mut path = Vec::with_capacity(len);
            let strict = len < mine.length;
            match search.dfs(&self.initial, len, strict, &mut path) {
                Walk::Found => {
                    return Ok(Minimality::NotMinimal(Derivation::new(self.initial.clone(), path)));
                }
                Walk::Budget => return Ok(Minimality::BudgetExceeded),
                Walk::None => {}
            }
        }
        Ok(Minimality::Minimal)
    }
}

/// Fixpoint of: initial and surviving letters are useful; a letter that
/// inserts or deletes a useful letter is useful.
fn usefulness(letters: &[Letter], steps: &[IdStep]) -> Vec<bool> {
    let mut useful: Vec<bool> = letters
        .iter()
        .map(|l| l.birth == Birth::Initial || l.death == Death::Survives)
        .collect();
    loop {
        let mut changed = false;
        for s in steps {
            if useful[s.other] && !useful[s.active] {
                useful[s.active] = true;
                changed = true;
            }
        }
        if !changed {
            return useful;
        }
    }
}

/// An eagerness violation: before `step` (0-based) letter `a` could delete `b`.
#[derive(Clone, Copy, Debug)]
struct EagerViolation {
    step: usize,
    a: LetterId,
    b: LetterId,
}

impl TracedDerivation {
    pub fn report(&self, g: &Grammar) -> DerivationReport {
        let leftmost = self.first_leftmost_violation().is_none();
        let eager = self.first_eager_violation(g).is_none();
        let useless: Vec<LetterId> = (0..self.letters.len()).filter(|&i| !self.useful[i]).collect();
        let pure = useless.is_empty();
        DerivationReport {
            leftmost,
            eager,
            pure,
            greedy: leftmost && eager && pure,
            measure: self.derivation.measure(),
            useless,
        }
    }

    /// A step `i` (0-based) after which some letter left of its active
    /// letter becomes active again.
    fn first_leftmost_violation(&self) -> Option<usize> {
        let steps = &self.derivation.steps;
        for (i, s) in steps.iter().enumerate() {
            let word = &self.ids[i];
            if word[..s.position - 1]
                .iter()
                .any(|&id| self.letters[id].last_active() > i + 1)
            {
                return Some(i);
            }
        }
        None
    }

    /// Step `i` is an insertion while `u_{i-1} = w₁ b a w₂` with `w₁ b` inert
    /// from step `i` on, `b` eventually deleted and `a ⇢ b` a rule.
    fn first_eager_violation(&self, g: &Grammar) -> Option<EagerViolation> {
        for (i, s) in self.derivation.steps.iter().enumerate() {
            if s.rule.is_deletion() {
                continue;
            }
            let word = &self.ids[i];
            for q in 0..word.len().saturating_sub(1) {
                let b = word[q];
                if self.letters[b].last_active() > i {
                    break;
                }
                let a = word[q + 1];
                if matches!(self.letters[b].death, Death::Deleted { .. })
                    && g.has_deletion(self.letters[a].symbol, self.letters[b].symbol)
                {
                    return Some(EagerViolation { step: i, a, b });
                }
            }
        }
        None
    }

    /// Candidate repairs in priority order: purity, eagerness, leftmostness.
    fn repair_candidates(&self, g: &Grammar) -> Vec<Result<Derivation, StepError>> {
        let mut out = Vec::new();
        let symbols: Vec<Symbol> = self.letters.iter().map(|l| l.symbol).collect();
        let initial = &self.ids[0];

        if self.useful.iter().any(|u| !u) {
            let steps: Vec<IdStep> = self
                .id_steps
                .iter()
                .filter(|s| self.useful[s.active] && self.useful[s.other])
                .copied()
                .collect();
            out.push(materialize(g, &symbols, initial, &steps));
        }

        if let Some(v) = self.first_eager_violation(g) {
            let rule = Rule::delete(symbols[v.a], symbols[v.b]);
            let mut steps = Vec::with_capacity(self.id_steps.len());
            steps.extend_from_slice(&self.id_steps[..v.step]);
            steps.push(IdStep { rule, active: v.a, other: v.b });
            for s in &self.id_steps[v.step..] {
                if !(s.rule.is_deletion() && s.other == v.b) {
                    steps.push(*s);
                }
            }
            out.push(materialize(g, &symbols, initial, &steps));
        }

        let ps = &self.derivation.steps;
        for k in 0..ps.len().saturating_sub(1) {
            let (p1, p2) = (ps[k].position, ps[k + 1].position);
            if p2 + 1 < p1 || (p2 + 1 == p1 && ps[k].rule.is_insertion()) {
                let mut steps = self.id_steps.clone();
                steps.swap(k, k + 1);
                out.push(materialize(g, &symbols, initial, &steps));
                break;
            }
        }
        out
    }
}

/// Rebuilds positional steps from letter-identity steps.
fn materialize(
    g: &Grammar,
    symbols: &[Symbol],
    initial: &[LetterId],
    steps: &[IdStep],
) -> Result<Derivation, StepError> {
    let mut cur: Vec<LetterId> = initial.to_vec();
    let mut out = Vec::with_capacity(steps.len());
    for s in steps {
        if !g.contains_rule(&s.rule) {
            return Err(StepError::UnknownRule(s.rule));
        }
        let Some(idx) = cur.iter().position(|&x| x == s.active) else {
            return Err(StepError::OutOfRange { position: 0, len: cur.len() });
        };
        match s.rule.kind {
            RuleKind::Insertion => cur.insert(idx, s.other),
            RuleKind::Deletion => {
                if idx == 0 || cur[idx - 1] != s.other {
                    return Err(StepError::PatientMismatch {
                        position: idx,
                        expected: s.rule.patient,
                        found: if idx == 0 { s.rule.actor } else { symbols[cur[idx - 1]] },
                    });
                }
                cur.remove(idx - 1);
            }
        }
        out.push(Step::new(s.rule, idx + 1));
    }
    Ok(Derivation::new(
        initial.iter().map(|&i| symbols[i]).collect(),
        out,
    ))
}

enum Walk {
    Found,
    None,
    Budget,
}

struct MuSearch<'a> {
    g: &'a Grammar,
    target: &'a Word,
    undeletable: HashSet<Symbol>,
    budget: u64,
    nodes: u64,
    /// Positions of the derivation under test, for same-length comparisons.
    bound: &'a [usize],
    /// `(word, remaining)` pairs known to have no completion in strict mode.
    dead: HashSet<(Word, usize)>,
}

impl MuSearch<'_> {
    /// `strict` means the path so far is already lexicographically below
    /// `bound`, so any completion qualifies.
    fn dfs(&mut self, w: &Word, remaining: usize, strict: bool, path: &mut Vec<Step>) -> Walk {
        if remaining == 0 {
            return if strict && w == self.target { Walk::Found } else { Walk::None };
        }
        if !feasible(w, self.target, remaining, &self.undeletable) {
            return Walk::None;
        }
        if strict && self.dead.contains(&(w.clone(), remaining)) {
            return Walk::None;
        }
        self.nodes += 1;
        if self.nodes > self.budget {
            return Walk::Budget;
        }
        let depth = path.len();
        for s in self.g.enabled_steps(w) {
            let now_strict = if strict {
                true
            } else {
                match s.position.cmp(&self.bound[depth]) {
                    std::cmp::Ordering::Less => true,
                    std::cmp::Ordering::Equal => false,
                    std::cmp::Ordering::Greater => break,
                }
            };
            let next = apply_rule(w, &s).expect("enabled step applies");
            path.push(s);
            match self.dfs(&next, remaining - 1, now_strict, path) {
                Walk::None => {}
                other => return other,
            }
            path.pop();
        }
        if strict {
            self.dead.insert((w.clone(), remaining));
        }
        Walk::None
    }
}

/// Sound necessary conditions for reaching `target` from `w` in exactly
/// `remaining` steps.
pub(crate) fn feasible(w: &[Symbol], target: &[Symbol], remaining: usize, undeletable: &HashSet<Symbol>) -> bool {
    let diff = w.len().abs_diff(target.len());
    if diff > remaining || (remaining - diff) % 2 != 0 {
        return false;
    }
    let mut it = target.iter();
    w.iter()
        .filter(|s| undeletable.contains(s))
        .all(|s| it.any(|t| t == s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::tests::g0;

    fn w(s: &str) -> Word {
        Word::parse(s).unwrap()
    }

    fn st(kind: &str, a: &str, b: &str, p: usize) -> Step {
        let r = if kind == "ins" { Rule::ins(a, b) } else { Rule::del(a, b) };
        Step::new(r, p)
    }

    fn g0_prime() -> Grammar {
        let g = g0();
        let mut rules: Vec<Rule> = g.rules().iter().copied().collect();
        rules.push(Rule::del("c", "c"));
        g.with_rules(rules).unwrap()
    }

    #[test]
    fn replay_examples() {
        let g = g0();
        let d = Derivation::new(w("a g"), vec![st("ins", "g", "c", 2), st("del", "c", "a", 2)]);
        assert_eq!(d.replay(&g).unwrap(), vec![w("a g"), w("a c g"), w("c g")]);
        assert_eq!(Derivation::empty(w("a g")).replay(&g).unwrap(), vec![w("a g")]);
        let bad = Derivation::new(w("a g"), vec![st("del", "c", "a", 2)]);
        let e = bad.replay(&g).unwrap_err();
        assert!(matches!(
            e,
            DerivationError::InvalidStep { index: 1, source: StepError::ActorMismatch { .. } }
        ));
    }

    #[test]
    fn trace_records_births_and_deaths() {
        let g = g0();
        let d = Derivation::new(w("a g"), vec![st("ins", "g", "c", 2), st("del", "c", "a", 2)]);
        let t = d.trace(&g).unwrap();
        assert_eq!(t.letters.len(), 3);
        assert_eq!(t.letters[0].death, Death::Deleted { by: 2, step: 2 });
        assert_eq!(t.letters[2].birth, Birth::Inserted { by: 1, step: 1 });
        assert_eq!(t.letters[2].death, Death::Survives);
        assert!(t.useful.iter().all(|&u| u));
    }

    #[test]
    fn useless_letter_in_g0_prime() {
        let g = g0_prime();
        // a g ⇒ a c g ⇒ a c c g ⇒ a c g : the middle c is inserted then deleted inert.
        let d = Derivation::new(
            w("a g"),
            vec![st("ins", "g", "c", 2), st("ins", "c", "c", 2), st("del", "c", "c", 3)],
        );
        let t = d.trace(&g).unwrap();
        assert_eq!(t.useful, vec![true, true, true, false]);
        let r = t.report(&g);
        assert!(!r.pure);
        assert_eq!(r.useless, vec![3]);
        let n = d.greedy_normalize(&g).unwrap();
        assert_eq!(n.steps, vec![st("ins", "g", "c", 2)]);
    }

    #[test]
    fn classify_greedy_example() {
        let g = g0();
        let d = Derivation::new(w("a g"), vec![st("ins", "g", "c", 2), st("del", "c", "a", 2)]);
        let r = d.classify(&g).unwrap();
        assert!(r.leftmost && r.eager && r.pure && r.greedy);
        assert_eq!(r.measure, Measure { length: 2, positions: vec![2, 2] });
        assert_eq!(r.measure.to_string(), "<2,2,2>");
    }

    #[test]
    fn classify_non_eager() {
        let g = g0();
        // c inserts c while c ⇢ a is available and a is deleted later.
        let d = Derivation::new(
            w("a g"),
            vec![st("ins", "g", "c", 2), st("ins", "c", "c", 2), st("del", "c", "a", 2)],
        );
        let r = d.classify(&g).unwrap();
        assert!(!r.eager);
        let n = d.greedy_normalize(&g).unwrap();
        assert!(n.is_greedy(&g).unwrap());
        assert_eq!(n.final_word(&g).unwrap(), w("c c g"));
        assert!(n.measure() < d.measure());
    }

    #[test]
    fn swap_repair() {
        let g = Grammar::from_rules(
            Symbol::new("g"),
            [Rule::ins("g", "c"), Rule::ins("x", "y")],
        )
        .unwrap();
        let d = Derivation::new(w("x g"), vec![st("ins", "g", "c", 2), st("ins", "x", "y", 1)]);
        assert!(!d.classify(&g).unwrap().leftmost);
        let n = d.greedy_normalize(&g).unwrap();
        assert_eq!(n.steps, vec![st("ins", "x", "y", 1), st("ins", "g", "c", 3)]);
        match d.is_mu_minimal(&g, 10_000).unwrap() {
            Minimality::NotMinimal(wit) => assert_eq!(wit, n),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn mu_minimal_empty_and_greedy() {
        let g = g0();
        assert_eq!(
            Derivation::empty(w("a g")).is_mu_minimal(&g, 100).unwrap(),
            Minimality::Minimal
        );
        let d = Derivation::new(w("a g"), vec![st("ins", "g", "c", 2), st("del", "c", "a", 2)]);
        assert_eq!(d.is_mu_minimal(&g, 1000).unwrap(), Minimality::Minimal);
        assert_eq!(d.is_mu_minimal(&g, 0).unwrap(), Minimality::BudgetExceeded);
    }

    #[test]
    fn inert_prefix_blocks_eagerness_claim() {
        // x b a g with x → y and a ⇢ b: inserting y first is μ-minimal.
        let g = Grammar::from_rules(
            Symbol::new("g"),
            [Rule::ins("x", "y"), Rule::del("a", "b")],
        )
        .unwrap();
        let d = Derivation::new(w("x b a g"), vec![st("ins", "x", "y", 1), st("del", "a", "b", 4)]);
        assert_eq!(d.is_mu_minimal(&g, 10_000).unwrap(), Minimality::Minimal);
        assert!(d.classify(&g).unwrap().greedy);
    }
}
