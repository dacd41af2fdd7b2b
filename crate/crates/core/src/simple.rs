//! Insertion grammars, simple transformers, ∇-witnesses and unions.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::derivation::Derivation;
use crate::error::TransformError;
use crate::grammar::{Grammar, Rule, Step};
use crate::reach::{bounded_reach, SearchBounds};
use crate::symbol::Symbol;
use crate::transform::{enumerate_relation, BoundedRelation, RelationBounds, Transformer};
use crate::word::{is_subword, subwords, words_up_to, Word};

/// A grammar without deletion rules.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InsertionGrammar {
    grammar: Grammar,
}

impl InsertionGrammar {
    pub fn new(grammar: Grammar) -> Result<InsertionGrammar, TransformError> {
        if let Some(r) = grammar.rules().iter().find(|r| r.is_deletion()) {
            return Err(TransformError::Shape(format!("deletion rule {r} in an insertion grammar")));
        }
        Ok(InsertionGrammar { grammar })
    }

    pub fn grammar(&self) -> &Grammar {
        &self.grammar
    }

    /// Bounded `I_G` restricted to inputs over `inputs`: pairs `(u, v)` with
    /// `u·g ⇒* v·g`. Every pair satisfies `u ⊑ v`.
    pub fn relation(&self, inputs: &BTreeSet<Symbol>, b: &RelationBounds) -> BoundedRelation {
        let g = self.grammar.final_symbol();
        let letters: Vec<Symbol> = inputs.iter().copied().collect();
        let pairs = enumerate_relation(
            &self.grammar,
            &words_up_to(&letters, b.max_input),
            |u| u.with_final(g),
            |w| (w.last() == Some(&g)).then(|| w.strip_final(g)),
            &b.search(),
        );
        BoundedRelation { pairs, bounds: *b }
    }
}

/// `G^ins`: the same alphabet with only the insertion rules.
pub fn strip_to_insertion(g: &Grammar) -> InsertionGrammar {
    let grammar = g
        .with_rules(g.rules().iter().filter(|r| r.is_insertion()).copied())
        .expect("a subset of valid rules is valid");
    InsertionGrammar { grammar }
}

/// A transformer with no temporaries whose rules never erase outputs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SimpleTransformer {
    base: Transformer,
}

/// A non-decreasing map `h : {1..n} → {1..m}`, stored 1-based.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct NablaWitness {
    pub h: Vec<usize>,
}

impl std::fmt::Display for NablaWitness {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self
            .h
            .iter()
            .enumerate()
            .map(|(i, j)| format!("{}->{}", i + 1, j))
            .collect();
        write!(f, "{{{}}}", parts.join(", "))
    }
}

/// Outcome of a batch of law checks: how many instances were examined and
/// a description of every failure.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct LawCheck {
    pub checked: usize,
    pub failures: Vec<String>,
}

impl LawCheck {
    pub fn ok(&self) -> bool {
        self.failures.is_empty()
    }

    fn record(&mut self, holds: bool, what: impl FnOnce() -> String) {
        self.checked += 1;
        if !holds {
            self.failures.push(what());
        }
    }
}

impl SimpleTransformer {
    pub fn new(base: Transformer) -> Result<SimpleTransformer, TransformError> {
        if let Some(b) = base.temps().iter().next() {
            return Err(TransformError::NotSimple(format!("temporary symbol {b}")));
        }
        if let Some(r) = base
            .grammar()
            .rules()
            .iter()
            .find(|r| r.is_deletion() && base.outputs().contains(&r.patient))
        {
            return Err(TransformError::NotSimple(format!("rule {r} erases an output")));
        }
        Ok(SimpleTransformer { base })
    }

    pub fn base(&self) -> &Transformer {
        &self.base
    }

    pub fn grammar(&self) -> &Grammar {
        self.base.grammar()
    }

    fn check_words(&self, u: &[Symbol], v: &[Symbol]) -> Result<(), TransformError> {
        if let Some(s) = u.iter().find(|s| !self.base.inputs().contains(s)) {
            return Err(TransformError::Alphabet(*s));
        }
        if let Some(s) = v.iter().find(|s| !self.base.outputs().contains(s)) {
            return Err(TransformError::Alphabet(*s));
        }
        Ok(())
    }

    /// The pointwise-least G-witness for `u ∇ v`, if any.
    pub fn nabla(&self, u: &[Symbol], v: &[Symbol]) -> Result<Option<NablaWitness>, TransformError> {
        self.check_words(u, v)?;
        let g = self.grammar();
        let m = v.len();
        for j in 0..m {
            let next = if j + 1 < m { v[j + 1] } else { g.final_symbol() };
            if !g.has_insertion(next, v[j]) {
                return Ok(None);
            }
        }
        let mut h = Vec::with_capacity(u.len());
        let mut lo = 1;
        for &a in u {
            match (lo..=m).find(|&j| g.has_deletion(v[j - 1], a)) {
                Some(j) => {
                    h.push(j);
                    lo = j;
                }
                None => return Ok(None),
            }
        }
        Ok(Some(NablaWitness { h }))
    }

    /// The derivation `u·g ⇒^{|u|+|v|} v·g` described by a witness: for
    /// `j = m … 1`, insert `c_j` then let it delete every `a_i` with `h(i) = j`,
    /// right to left.
    pub fn witness_derivation(&self, u: &[Symbol], v: &[Symbol], w: &NablaWitness) -> Derivation {
        let g = self.grammar().final_symbol();
        let (n, m) = (u.len(), v.len());
        let mut steps = Vec::with_capacity(n + m);
        let mut left = n;
        for j in (1..=m).rev() {
            let actor = if j == m { g } else { v[j] };
            // Word is a_1..a_left c_{j+1}..c_m g; the actor sits at left + 1.
            steps.push(Step::new(Rule::insert(actor, v[j - 1]), left + 1));
            while left > 0 && w.h[left - 1] == j {
                steps.push(Step::new(Rule::delete(v[j - 1], u[left - 1]), left + 1));
                left -= 1;
            }
        }
        Derivation::new(Word(u.to_vec()).with_final(g), steps)
    }

    /// True iff the derivation, which must run from `A*·g` to `C*·g`, has
    /// exactly `|u| + |v|` steps.
    pub fn check_simple_length(&self, d: &Derivation) -> Result<bool, TransformError> {
        let g = self.grammar().final_symbol();
        let end = d
            .final_word(self.grammar())
            .map_err(|e| TransformError::Shape(e.to_string()))?;
        let ends_ok = |w: &Word| w.last() == Some(&g);
        if !ends_ok(&d.initial) || !ends_ok(&end) {
            return Err(TransformError::Shape("endpoints must end with the final symbol".into()));
        }
        let (u, v) = (d.initial.strip_final(g), end.strip_final(g));
        self.check_words(&u, &v)?;
        Ok(d.len() == u.len() + v.len())
    }

    /// Checks `R_G = ∇_G · I_{G^ins}` and `∇_G ⊆ R_G ⊆ ∇_G · ⊑_C` at the
    /// given bounds.
    pub fn check_decomposition(&self, b: &RelationBounds) -> LawCheck {
        let mut check = LawCheck::default();
        let g = self.grammar();
        let fin = g.final_symbol();
        let ins = strip_to_insertion(g);
        let rel = self.base.bounded_relation(b);
        let ins_search = SearchBounds::at_most(b.max_depth, b.max_word);

        for (u, v) in &rel.pairs {
            let factors: Vec<Word> = subwords(v)
                .into_iter()
                .filter(|w| matches!(self.nabla(u, w), Ok(Some(_))))
                .collect();
            check.record(!factors.is_empty(), || {
                format!("({u:?},{v:?}) in R but no w below v with u nabla w")
            });
            let factored = factors.iter().any(|w| {
                bounded_reach(ins.grammar(), &w.with_final(fin), &v.with_final(fin), &ins_search).is_found()
            });
            check.record(factored, || format!("({u:?},{v:?}) in R does not factor through nabla . I"));
        }

        // Converse: every nabla-pair within bounds, followed by insertions, is in R.
        let outputs: Vec<Symbol> = self.base.outputs().iter().copied().collect();
        let inputs: Vec<Symbol> = self.base.inputs().iter().copied().collect();
        let max_out = b.max_word.saturating_sub(1);
        for u in words_up_to(&inputs, b.max_input) {
            for w in words_up_to(&outputs, max_out) {
                let Ok(Some(h)) = self.nabla(&u, &w) else { continue };
                let d = self.witness_derivation(&u, &w, &h);
                let replays = d.final_word(g).is_ok_and(|e| e == w.with_final(fin));
                check.record(replays && d.len() == u.len() + w.len(), || {
                    format!("witness derivation for ({u:?},{w:?}) fails")
                });
                if d.len() <= b.max_depth && u.len() + w.len() < b.max_word {
                    check.record(rel.contains(&u, &w), || {
                        format!("({u:?},{w:?}) in nabla but not in bounded R")
                    });
                }
                let rest = b.max_depth.saturating_sub(d.len());
                let extended = crate::reach::oracle_enumerate(
                    ins.grammar(),
                    &w.with_final(fin),
                    &SearchBounds::at_most(rest, b.max_word),
                );
                for v in extended.into_keys() {
                    let v = v.strip_final(fin);
                    if d.len() + (v.len() - w.len()) <= b.max_depth
                        && u.len() + w.len() < b.max_word
                    {
                        check.record(rel.contains(&u, &v), || {
                            format!("({u:?},{v:?}) factors through nabla . I but is not in bounded R")
                        });
                    }
                }
            }
        }

        // R ⊆ ∇ · ⊑_C.
        for (u, v) in &rel.pairs {
            let holds = subwords(v)
                .iter()
                .any(|w| is_subword(w, v, Some(self.base.outputs())) && matches!(self.nabla(u, w), Ok(Some(_))));
            check.record(holds, || format!("({u:?},{v:?}) in R but not in nabla . subword"));
        }
        check
    }
}

/// `G₁ + G₂ = (A, ∅, C₁ ∪ C₂, P₁ ∪ P₂, g)`.
pub fn union(st1: &SimpleTransformer, st2: &SimpleTransformer) -> Result<SimpleTransformer, TransformError> {
    let (t1, t2) = (st1.base(), st2.base());
    if t1.inputs() != t2.inputs() || t1.final_symbol() != t2.final_symbol() {
        return Err(TransformError::InputMismatch);
    }
    if let Some(s) = t1.outputs().intersection(t2.outputs()).next() {
        return Err(TransformError::OutputOverlap(*s));
    }
    let alphabet: BTreeSet<Symbol> = t1
        .grammar()
        .alphabet()
        .union(t2.grammar().alphabet())
        .copied()
        .collect();
    let rules = t1.grammar().rules().iter().chain(t2.grammar().rules()).copied();
    let grammar = Grammar::new(alphabet, t1.final_symbol(), rules)
        .map_err(|e| TransformError::Shape(e.to_string()))?;
    let outputs = t1.outputs().union(t2.outputs()).copied().collect();
    SimpleTransformer::new(Transformer::new(
        grammar,
        t1.inputs().clone(),
        BTreeSet::new(),
        outputs,
    )?)
}

/// For every pair of bounded `R_{G₁+G₂}`, some `v′ ⊑ v` is related to `u` by
/// bounded `R_{G₁}` or `R_{G₂}`, and the least ∇-factor of `v` never mixes
/// outputs of both operands.
pub fn check_union_projection(
    st1: &SimpleTransformer,
    st2: &SimpleTransformer,
    b: &RelationBounds,
) -> Result<LawCheck, TransformError> {
    let sum = union(st1, st2)?;
    let r = sum.base().bounded_relation(b);
    let r1 = st1.base().bounded_relation(b);
    let r2 = st2.base().bounded_relation(b);
    let mut check = LawCheck::default();
    let (c1, c2) = (st1.base().outputs(), st2.base().outputs());
    for (u, v) in &r.pairs {
        let subs = subwords(v);
        let holds = subs.iter().any(|w| r1.contains(u, w) || r2.contains(u, w));
        check.record(holds, || format!("({u:?},{v:?}) has no projection"));
        for w in subs.iter().filter(|w| matches!(sum.nabla(u, w), Ok(Some(_)))) {
            let mixed = w.iter().any(|s| c1.contains(s)) && w.iter().any(|s| c2.contains(s));
            check.record(!mixed, || format!("nabla factor {w:?} of ({u:?},{v:?}) mixes outputs"));
        }
    }
    Ok(check)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::tests::g0;
    use crate::transform::tests::{set, t_g0};

    fn w(s: &str) -> Word {
        Word::parse(s).unwrap()
    }

    fn st_g0() -> SimpleTransformer {
        SimpleTransformer::new(t_g0()).unwrap()
    }

    fn chain(a: &str, c: &str) -> SimpleTransformer {
        let g = Grammar::from_rules(
            Symbol::new("g"),
            [Rule::ins("g", c), Rule::ins(c, c), Rule::del(c, a)],
        )
        .unwrap();
        SimpleTransformer::new(Transformer::new(g, set(&[a]), set(&[]), set(&[c])).unwrap()).unwrap()
    }

    #[test]
    fn strip_examples() {
        let ig = strip_to_insertion(&g0());
        assert_eq!(ig.grammar().rules().len(), 2);
        assert!(ig.grammar().rules().iter().all(|r| r.is_insertion()));
        let del_only = Grammar::from_rules(Symbol::new("g"), [Rule::del("c", "a")]).unwrap();
        assert!(strip_to_insertion(&del_only).grammar().rules().is_empty());
    }

    #[test]
    fn insertion_relation_examples() {
        let ig = strip_to_insertion(&g0());
        let r = ig.relation(&set(&["c", "a"]), &RelationBounds::new(2, 6, 2));
        assert!(r.contains(&w("c"), &w("c c c")));
        assert!(r.contains(&w("c a"), &w("c c a")));
        assert!(r.contains(&w("a c"), &w("a c")));
        assert!(r.pairs.iter().all(|(u, v)| is_subword(u, v, None)));
    }

    #[test]
    fn nabla_examples() {
        let st = st_g0();
        assert_eq!(st.nabla(&w("a"), &w("c")).unwrap(), Some(NablaWitness { h: vec![1] }));
        assert_eq!(st.nabla(&w("-"), &w("-")).unwrap(), Some(NablaWitness { h: vec![] }));
        assert_eq!(st.nabla(&w("a"), &w("-")).unwrap(), None);
        assert_eq!(
            st.nabla(&w("a a"), &w("c c")).unwrap(),
            Some(NablaWitness { h: vec![1, 1] })
        );
        assert!(matches!(st.nabla(&w("c"), &w("c")), Err(TransformError::Alphabet(_))));
    }

    #[test]
    fn witness_derivation_interleaves() {
        // h(1) = 1, h(2) = 2 forces a deletion between the two insertions.
        let g = Grammar::from_rules(
            Symbol::new("g"),
            [
                Rule::ins("g", "d"),
                Rule::ins("d", "c"),
                Rule::del("c", "a"),
                Rule::del("d", "b"),
            ],
        )
        .unwrap();
        let st = SimpleTransformer::new(
            Transformer::new(g, set(&["a", "b"]), set(&[]), set(&["c", "d"])).unwrap(),
        )
        .unwrap();
        let (u, v) = (w("a b"), w("c d"));
        let h = st.nabla(&u, &v).unwrap().unwrap();
        assert_eq!(h.h, vec![1, 2]);
        let d = st.witness_derivation(&u, &v, &h);
        assert_eq!(d.final_word(st.grammar()).unwrap(), w("c d g"));
        assert_eq!(d.len(), 4);
        assert!(st.check_simple_length(&d).unwrap());
    }

    #[test]
    fn simple_length_examples() {
        let st = st_g0();
        let g = st.grammar().clone();
        let d = crate::reach::bounded_reach(&g, &w("a a g"), &w("c g"), &SearchBounds::at_most(3, 5));
        assert!(st.check_simple_length(d.found().unwrap()).unwrap());
        assert!(st.check_simple_length(&Derivation::empty(w("g"))).unwrap());
    }

    #[test]
    fn decomposition_on_g0() {
        let c = st_g0().check_decomposition(&RelationBounds::new(2, 5, 6));
        assert!(c.ok(), "{:?}", c.failures);
        assert!(c.checked > 10);
    }

    #[test]
    fn union_examples() {
        let top = chain("a", "c");
        let bot = chain("a", "d");
        let u = union(&top, &bot).unwrap();
        assert_eq!(u.base().outputs(), &set(&["c", "d"]));
        assert_eq!(u.grammar().rules().len(), 6);
        assert!(matches!(union(&top, &top), Err(TransformError::OutputOverlap(_))));
        let c = check_union_projection(&top, &bot, &RelationBounds::new(2, 6, 8)).unwrap();
        assert!(c.ok(), "{:?}", c.failures);
    }
}
