//! Leftist transformers `G : A ⊢ C`, their bounded relations, and sequential
//! composition.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::TransformError;
use crate::format::GrammarFile;
use crate::grammar::{Grammar, Rule};
use crate::reach::{bounded_reach, oracle_enumerate, SearchBounds};
use crate::symbol::Symbol;
use crate::word::{stutter_canonical, subwords, words_up_to, Word};

/// A grammar whose alphabet is partitioned into inputs, temporaries and outputs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transformer {
    grammar: Grammar,
    inputs: BTreeSet<Symbol>,
    temps: BTreeSet<Symbol>,
    outputs: BTreeSet<Symbol>,
}

/// Limits for materializing a relation: input length `L`, word width `M`
/// (final symbol included) and derivation depth `D`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct RelationBounds {
    pub max_input: usize,
    pub max_word: usize,
    pub max_depth: usize,
}

impl RelationBounds {
    pub fn new(max_input: usize, max_word: usize, max_depth: usize) -> RelationBounds {
        RelationBounds {
            max_input,
            max_word,
            max_depth,
        }
    }

    pub fn search(&self) -> SearchBounds {
        SearchBounds::at_most(self.max_depth, self.max_word)
    }
}

/// A finite relation computed under explicit bounds.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BoundedRelation {
    pub pairs: BTreeSet<(Word, Word)>,
    pub bounds: RelationBounds,
}

impl BoundedRelation {
    pub fn contains(&self, u: &Word, v: &Word) -> bool {
        self.pairs.contains(&(u.clone(), v.clone()))
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// One `input TAB output` line per pair, `-` for the empty word.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (u, v) in &self.pairs {
            out.push_str(&u.to_tsv());
            out.push('\t');
            out.push_str(&v.to_tsv());
            out.push('\n');
        }
        out
    }
}

/// The relational product `R₁ · R₂` of two pair sets.
pub fn product(r1: &BTreeSet<(Word, Word)>, r2: &BTreeSet<(Word, Word)>) -> BTreeSet<(Word, Word)> {
    let mut by_input: BTreeMap<&Word, Vec<&Word>> = BTreeMap::new();
    for (u, v) in r2 {
        by_input.entry(u).or_default().push(v);
    }
    let mut out = BTreeSet::new();
    for (u, w) in r1 {
        if let Some(vs) = by_input.get(w) {
            for v in vs {
                out.insert((u.clone(), (*v).clone()));
            }
        }
    }
    out
}

/// Pairs `(u, v)` such that some start word built from `u` reaches a word
/// that `accept` maps to `v`, under the given search bounds.
pub(crate) fn enumerate_relation(
    g: &Grammar,
    inputs: &[Word],
    start: impl Fn(&Word) -> Word + Sync,
    accept: impl Fn(&Word) -> Option<Word> + Sync,
    bounds: &SearchBounds,
) -> BTreeSet<(Word, Word)> {
    let found: Vec<Vec<(Word, Word)>> = inputs
        .par_iter()
        .map(|u| {
            let mut local: Vec<(Word, Word)> = oracle_enumerate(g, &start(u), bounds)
                .into_keys()
                .filter_map(|w| accept(&w).map(|v| (u.clone(), v)))
                .collect();
            local.sort();
            local
        })
        .collect();
    found.into_iter().flatten().collect()
}

impl Transformer {
    /// Checks the typing constraints and builds the transformer.
    pub fn new(
        grammar: Grammar,
        inputs: BTreeSet<Symbol>,
        temps: BTreeSet<Symbol>,
        outputs: BTreeSet<Symbol>,
    ) -> Result<Transformer, TransformError> {
        let mut seen = BTreeSet::new();
        for s in inputs.iter().chain(&temps).chain(&outputs) {
            if !grammar.alphabet().contains(s) {
                return Err(TransformError::Foreign(*s));
            }
            if !seen.insert(*s) {
                return Err(TransformError::Overlap(*s));
            }
        }
        if let Some(s) = grammar.alphabet().iter().find(|s| !seen.contains(s)) {
            return Err(TransformError::Uncovered(*s));
        }
        for r in grammar.rules() {
            if inputs.contains(&r.actor) {
                return Err(TransformError::InputActive(r.actor));
            }
            if r.is_insertion() && inputs.contains(&r.patient) {
                return Err(TransformError::InputInserted(r.patient));
            }
        }
        Ok(Transformer {
            grammar,
            inputs,
            temps,
            outputs,
        })
    }

    /// Builds a transformer from a parsed file; missing headers mean empty sets.
    pub fn from_file(file: &GrammarFile) -> Result<Transformer, TransformError> {
        Transformer::new(
            file.grammar.clone(),
            file.inputs.clone().unwrap_or_default(),
            file.temps.clone().unwrap_or_default(),
            file.outputs.clone().unwrap_or_default(),
        )
    }

    pub fn to_file(&self) -> GrammarFile {
        GrammarFile {
            inputs: Some(self.inputs.clone()),
            temps: Some(self.temps.clone()),
            outputs: Some(self.outputs.clone()),
            ..GrammarFile::plain(self.grammar.clone())
        }
    }

    pub fn grammar(&self) -> &Grammar {
        &self.grammar
    }

    pub fn inputs(&self) -> &BTreeSet<Symbol> {
        &self.inputs
    }

    pub fn temps(&self) -> &BTreeSet<Symbol> {
        &self.temps
    }

    pub fn outputs(&self) -> &BTreeSet<Symbol> {
        &self.outputs
    }

    pub fn final_symbol(&self) -> Symbol {
        self.grammar.final_symbol()
    }

    /// `D = B ∪ C`.
    pub fn working(&self) -> BTreeSet<Symbol> {
        self.temps.union(&self.outputs).copied().collect()
    }

    /// Bounded `R_G`: pairs `(u, v)` with `u ∈ A^{≤L}`, `v ∈ C*` and
    /// `u·g ⇒* v·g` within depth `D` and width `M`.
    pub fn bounded_relation(&self, b: &RelationBounds) -> BoundedRelation {
        let g = self.final_symbol();
        let inputs = words_up_to(&self.inputs.iter().copied().collect::<Vec<_>>(), b.max_input);
        let pairs = enumerate_relation(
            &self.grammar,
            &inputs,
            |u| u.with_final(g),
            |w| {
                let (&last, body) = w.split_last()?;
                (last == g && body.iter().all(|s| self.outputs.contains(s))).then(|| Word(body.to_vec()))
            },
            &b.search(),
        );
        BoundedRelation { pairs, bounds: *b }
    }

    /// Checks that every word reachable from `u·g`, `u ∈ A^{≤L}`, has the shape
    /// `A*·D*·g`. Returns the first offending word.
    pub fn check_prefix_invariant(&self, b: &RelationBounds) -> Result<(), Word> {
        let g = self.final_symbol();
        let working = self.working();
        for u in words_up_to(&self.inputs.iter().copied().collect::<Vec<_>>(), b.max_input) {
            let mut reached: Vec<Word> = oracle_enumerate(&self.grammar, &u.with_final(g), &b.search())
                .into_keys()
                .collect();
            reached.sort();
            for w in reached {
                let body = w.strip_final(g);
                let split = body.iter().position(|s| !self.inputs.contains(s)).unwrap_or(body.len());
                if !body[split..].iter().all(|s| working.contains(s)) || w.last() != Some(&g) {
                    return Err(w);
                }
            }
        }
        Ok(())
    }

    /// Bound-safe instances of the closure property: for every pair of the
    /// bounded relation, the variants obtained by dropping an input letter,
    /// doubling an input letter, doubling an output letter and collapsing
    /// output stutters are all derivable within the `slack` bounds. Returns
    /// the first failing `(u, v)` variant.
    pub fn check_closure_property(
        &self,
        b: &RelationBounds,
        slack: &RelationBounds,
    ) -> Result<(), (Word, Word)> {
        let g = self.final_symbol();
        let rel = self.bounded_relation(b);
        let search = slack.search().with_budget(5_000_000);
        let mut cache: HashSet<(Word, Word)> = rel.pairs.iter().cloned().collect();
        for (u, v) in &rel.pairs {
            let mut variants: Vec<(Word, Word)> = Vec::new();
            for x in subwords(u) {
                variants.push((x, v.clone()));
            }
            for i in 0..u.len() {
                let mut d = u.clone();
                d.insert(i, u[i]);
                variants.push((d, v.clone()));
            }
            for i in 0..v.len() {
                let mut d = v.clone();
                d.insert(i, v[i]);
                variants.push((u.clone(), d));
            }
            variants.push((u.clone(), stutter_canonical(v)));
            for (x, y) in variants {
                if cache.contains(&(x.clone(), y.clone())) {
                    continue;
                }
                let r = bounded_reach(&self.grammar, &x.with_final(g), &y.with_final(g), &search);
                if !r.is_found() {
                    return Err((x, y));
                }
                cache.insert((x, y));
            }
        }
        Ok(())
    }

    /// Renames every symbol through `f`, which must be injective.
    pub fn rename(&self, f: &impl Fn(Symbol) -> Symbol) -> Result<Transformer, TransformError> {
        let set = |s: &BTreeSet<Symbol>| s.iter().map(|&x| f(x)).collect();
        let grammar = self
            .grammar
            .rename(f)
            .map_err(|e| TransformError::Shape(e.to_string()))?;
        Transformer::new(grammar, set(&self.inputs), set(&self.temps), set(&self.outputs))
    }
}

/// Which operand a renamed temporary came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Renamed {
    pub operand: u8,
    pub from: Symbol,
    pub to: Symbol,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Composition {
    pub transformer: Transformer,
    pub renamed: Vec<Renamed>,
}

fn fresh(base: Symbol, start: usize, used: &HashSet<Symbol>) -> Symbol {
    let mut k = start;
    loop {
        let cand = base.suffixed(&format!(".{k}"));
        if !used.contains(&cand) {
            return cand;
        }
        k += 1;
    }
}

/// `G₁.G₂ = (A₁, B₁ ∪ C₁ ∪ B₂, C₂, P₁ ∪ P₂, g)`. Temporaries that collide
/// are renamed `x.1` (first operand) and `x.2` (second operand).
pub fn compose(t1: &Transformer, t2: &Transformer) -> Result<Composition, TransformError> {
    if t1.final_symbol() != t2.final_symbol() {
        return Err(TransformError::NotChainable(format!(
            "final symbols differ: {} and {}",
            t1.final_symbol(),
            t2.final_symbol()
        )));
    }
    if t1.outputs != t2.inputs {
        return Err(TransformError::NotChainable(
            "outputs of the first operand differ from inputs of the second".into(),
        ));
    }
    if let Some(s) = t1.inputs.intersection(&t2.outputs).next() {
        return Err(TransformError::NotChainable(format!(
            "{s} is an input of the first operand and an output of the second"
        )));
    }

    let mut used: HashSet<Symbol> = t1
        .grammar
        .full_alphabet()
        .into_iter()
        .chain(t2.grammar.full_alphabet())
        .collect();
    let left: BTreeSet<Symbol> = t1.inputs.union(&t1.temps).copied().collect();
    let right: BTreeSet<Symbol> = t2.temps.union(&t2.outputs).copied().collect();
    let mut renamed = Vec::new();
    let mut map1: BTreeMap<Symbol, Symbol> = BTreeMap::new();
    let mut map2: BTreeMap<Symbol, Symbol> = BTreeMap::new();
    for &x in left.intersection(&right) {
        if t1.temps.contains(&x) {
            let to = fresh(x, 1, &used);
            used.insert(to);
            map1.insert(x, to);
            renamed.push(Renamed { operand: 1, from: x, to });
        }
        if t2.temps.contains(&x) {
            let to = fresh(x, 2, &used);
            used.insert(to);
            map2.insert(x, to);
            renamed.push(Renamed { operand: 2, from: x, to });
        }
        if !t1.temps.contains(&x) && !t2.temps.contains(&x) {
            // x ∈ A₁ ∩ C₂, excluded above.
            unreachable!("chainability already checked");
        }
    }
    // B₂ may also collide with C₁ = A₂ only if t2 is ill-typed; B₁ with C₁ likewise.
    let f1 = |s: Symbol| map1.get(&s).copied().unwrap_or(s);
    let f2 = |s: Symbol| map2.get(&s).copied().unwrap_or(s);
    let t1 = t1.rename(&f1)?;
    let t2 = t2.rename(&f2)?;

    let alphabet: BTreeSet<Symbol> = t1
        .grammar
        .alphabet()
        .union(t2.grammar.alphabet())
        .copied()
        .collect();
    let rules: Vec<Rule> = t1
        .grammar
        .rules()
        .iter()
        .chain(t2.grammar.rules())
        .copied()
        .collect();
    let grammar = Grammar::new(alphabet, t1.final_symbol(), rules)
        .map_err(|e| TransformError::Shape(e.to_string()))?;
    let temps: BTreeSet<Symbol> = t1
        .temps
        .iter()
        .chain(&t1.outputs)
        .chain(&t2.temps)
        .copied()
        .collect();
    let transformer = Transformer::new(grammar, t1.inputs.clone(), temps, t2.outputs.clone())?;
    Ok(Composition { transformer, renamed })
}
