//! Anchored transformers and the transitive closure construction: the
//! renamer, the wrapper `F_G`, the glue `H`, its extension `H′`, the
//! finishing transformers `T₁`, `T₂`, and `G⁽⁺⁾`.
//!
//! Copies are made by renaming: `x'` for primes, `x.d` and `x.dd` for the
//! dotted and double-dotted copies.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use serde::Serialize;

use crate::derivation::Derivation;
use crate::error::ClosureError;
use crate::format::GrammarFile;
use crate::grammar::{apply_rule, Grammar, Rule, Step};
use crate::reach::{bounded_reach, greedy_enumerate, oracle_enumerate, SearchBounds};
use crate::symbol::Symbol;
use crate::transform::{compose, BoundedRelation, RelationBounds, Transformer};
use crate::word::{words_up_to, Word};

pub fn prime(s: Symbol) -> Symbol {
    s.suffixed("'")
}

pub fn dot(s: Symbol) -> Symbol {
    s.suffixed(".d")
}

pub fn ddot(s: Symbol) -> Symbol {
    s.suffixed(".dd")
}

/// A transformer with a start anchor `b₁` and an end anchor `b₂`, both
/// temporaries. Its relation is `S_G = {(u, v) | b₁·u·g ⇒* b₂·v·g}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AnchoredTransformer {
    base: Transformer,
    start: Symbol,
    end: Symbol,
}

impl AnchoredTransformer {
    pub fn new(base: Transformer, start: Symbol, end: Symbol) -> Result<AnchoredTransformer, ClosureError> {
        if start == end {
            return Err(ClosureError::SameAnchors(start));
        }
        for s in [start, end] {
            if !base.temps().contains(&s) {
                return Err(ClosureError::AnchorNotTemporary(s));
            }
        }
        Ok(AnchoredTransformer { base, start, end })
    }

    pub fn from_file(file: &GrammarFile) -> Result<AnchoredTransformer, ClosureError> {
        let (start, end) = file.anchors.ok_or(ClosureError::MissingAnchors)?;
        AnchoredTransformer::new(Transformer::from_file(file)?, start, end)
    }

    pub fn to_file(&self) -> GrammarFile {
        let mut f = self.base.to_file();
        f.anchors = Some((self.start, self.end));
        f
    }

    pub fn base(&self) -> &Transformer {
        &self.base
    }

    pub fn grammar(&self) -> &Grammar {
        self.base.grammar()
    }

    pub fn inputs(&self) -> &BTreeSet<Symbol> {
        self.base.inputs()
    }

    pub fn temps(&self) -> &BTreeSet<Symbol> {
        self.base.temps()
    }

    pub fn outputs(&self) -> &BTreeSet<Symbol> {
        self.base.outputs()
    }

    pub fn start(&self) -> Symbol {
        self.start
    }

    pub fn end(&self) -> Symbol {
        self.end
    }

    pub fn final_symbol(&self) -> Symbol {
        self.base.final_symbol()
    }

    /// `b₁·u·g`.
    pub fn start_word(&self, u: &[Symbol]) -> Word {
        let mut w = Word(vec![self.start]);
        w.extend_from_slice(u);
        w.with_final(self.final_symbol())
    }

    /// `b₂·v·g`.
    pub fn end_word(&self, v: &[Symbol]) -> Word {
        let mut w = Word(vec![self.end]);
        w.extend_from_slice(v);
        w.with_final(self.final_symbol())
    }

    /// Reads `v` back from `b₂·v·g` when `v ∈ C*`.
    pub fn accept(&self, w: &[Symbol]) -> Option<Word> {
        let (&last, body) = w.split_last()?;
        let (&first, v) = body.split_first()?;
        (last == self.final_symbol() && first == self.end && v.iter().all(|s| self.outputs().contains(s)))
            .then(|| Word(v.to_vec()))
    }

    /// Bounded `S_G` by exhaustive breadth-first enumeration.
    pub fn relation(&self, b: &RelationBounds) -> BoundedRelation {
        let inputs = words_up_to(&self.inputs().iter().copied().collect::<Vec<_>>(), b.max_input);
        let pairs = self.relation_from(&inputs, &b.search(), false);
        BoundedRelation { pairs, bounds: *b }
    }

    /// Bounded `S_G` for the given inputs. With `greedy`, only greedy
    /// derivations are explored; this is much cheaper on the large grammars
    /// built here and still complete when the width bound is generous.
    pub fn relation_from(&self, inputs: &[Word], search: &SearchBounds, greedy: bool) -> BTreeSet<(Word, Word)> {
        let mut out = BTreeSet::new();
        for u in inputs {
            let start = self.start_word(u);
            let reached = if greedy {
                greedy_enumerate(self.grammar(), &start, search).unwrap_or_default()
            } else {
                oracle_enumerate(self.grammar(), &start, search)
            };
            for w in reached.keys() {
                if let Some(v) = self.accept(w) {
                    out.insert((u.clone(), v));
                }
            }
        }
        out
    }

    /// Does `b₁·u·g ⇒* b₂·v·g` hold within `search`?
    pub fn derives(&self, u: &[Symbol], v: &[Symbol], search: &SearchBounds) -> bool {
        bounded_reach(self.grammar(), &self.start_word(u), &self.end_word(v), search).is_found()
    }

    pub fn rename(&self, f: &impl Fn(Symbol) -> Symbol) -> Result<AnchoredTransformer, ClosureError> {
        AnchoredTransformer::new(self.base.rename(f)?, f(self.start), f(self.end))
    }
}

/// A bijection `h : C → A`, stored as `c ↦ a`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Renaming {
    map: BTreeMap<Symbol, Symbol>,
}

impl Renaming {
    pub fn new(pairs: impl IntoIterator<Item = (Symbol, Symbol)>) -> Result<Renaming, ClosureError> {
        let mut map = BTreeMap::new();
        let mut image = BTreeSet::new();
        for (c, a) in pairs {
            if map.insert(c, a).is_some() {
                return Err(ClosureError::Renaming(format!("{c} is mapped twice")));
            }
            if !image.insert(a) {
                return Err(ClosureError::Renaming(format!("{a} is the image of two symbols")));
            }
        }
        Ok(Renaming { map })
    }

    /// Parses `c1=a1,c2=a2`.
    pub fn parse(text: &str) -> Result<Renaming, ClosureError> {
        let mut pairs = Vec::new();
        for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (c, a) = item
                .split_once('=')
                .ok_or_else(|| ClosureError::Renaming(format!("expected `c=a`, found {item:?}")))?;
            let parse = |s: &str| Symbol::parse(s.trim()).map_err(|e| ClosureError::Renaming(e.to_string()));
            pairs.push((parse(c)?, parse(a)?));
        }
        Renaming::new(pairs)
    }

    /// The renaming `c_i ↦ a_i` pairing both sets in name order.
    pub fn by_order(c: &BTreeSet<Symbol>, a: &BTreeSet<Symbol>) -> Result<Renaming, ClosureError> {
        if c.len() != a.len() {
            return Err(ClosureError::Renaming(format!("{} outputs but {} inputs", c.len(), a.len())));
        }
        Renaming::new(c.iter().copied().zip(a.iter().copied()))
    }

    pub fn get(&self, c: Symbol) -> Option<Symbol> {
        self.map.get(&c).copied()
    }

    pub fn inverse(&self, a: Symbol) -> Option<Symbol> {
        self.map.iter().find(|(_, &x)| x == a).map(|(&c, _)| c)
    }

    pub fn domain(&self) -> BTreeSet<Symbol> {
        self.map.keys().copied().collect()
    }

    pub fn image(&self) -> BTreeSet<Symbol> {
        self.map.values().copied().collect()
    }

    /// `h̄`, letterwise; letters outside the domain are kept.
    pub fn apply(&self, w: &[Symbol]) -> Word {
        w.iter().map(|&s| self.get(s).unwrap_or(s)).collect()
    }

    /// Checks that `h` is a bijection from the outputs onto the inputs.
    pub fn check(&self, at: &AnchoredTransformer) -> Result<(), ClosureError> {
        if &self.domain() != at.outputs() {
            return Err(ClosureError::Renaming("domain differs from the output alphabet".into()));
        }
        if &self.image() != at.inputs() {
            return Err(ClosureError::Renaming("image differs from the input alphabet".into()));
        }
        Ok(())
    }

    pub fn pairs(&self) -> impl Iterator<Item = (Symbol, Symbol)> + '_ {
        self.map.iter().map(|(&c, &a)| (c, a))
    }
}

impl std::fmt::Display for Renaming {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let items: Vec<String> = self.pairs().map(|(c, a)| format!("{c}={a}")).collect();
        f.write_str(&items.join(","))
    }
}

/// The renamer `R : C ⊢ A` with start anchor `start` and end anchor `end`:
/// `g → a_i`, `a_i → a_j`, `a_i → end`, `a_i ⇢ c_i`, `end ⇢ start`.
pub fn build_renamer(
    c: &BTreeSet<Symbol>,
    a: &BTreeSet<Symbol>,
    h: &Renaming,
    start: Symbol,
    end: Symbol,
    final_sym: Symbol,
) -> Result<AnchoredTransformer, ClosureError> {
    if &h.domain() != c || &h.image() != a {
        return Err(ClosureError::Renaming("renaming does not map the outputs onto the inputs".into()));
    }
    for s in [start, end] {
        if c.contains(&s) || a.contains(&s) || s == final_sym {
            return Err(ClosureError::NotFresh(s));
        }
    }
    let mut rules = Vec::new();
    for &ai in a {
        rules.push(Rule::insert(final_sym, ai));
        for &aj in a {
            rules.push(Rule::insert(ai, aj));
        }
        rules.push(Rule::insert(ai, end));
    }
    for (ci, ai) in h.pairs() {
        rules.push(Rule::delete(ai, ci));
    }
    rules.push(Rule::delete(end, start));
    let alphabet = c.iter().chain(a).copied().chain([start, end]).collect();
    let grammar = Grammar::new(alphabet, final_sym, rules)?;
    let base = Transformer::new(grammar, c.clone(), [start, end].into(), a.clone())?;
    AnchoredTransformer::new(base, start, end)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum RuleClass {
    Kept,
    Replace,
    Mirror,
    Clean,
    Anchor,
}

/// A wrapped transformer `F_G` with the class each rule was built from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Wrapped {
    pub at: AnchoredTransformer,
    pub classes: BTreeMap<Rule, RuleClass>,
    /// The anchors of the wrapped transformer.
    pub inner_start: Symbol,
    pub inner_end: Symbol,
    pub inner_inputs: BTreeSet<Symbol>,
}

fn check_fresh(taken: &HashSet<Symbol>, new: impl IntoIterator<Item = Symbol>) -> Result<(), ClosureError> {
    let mut seen = HashSet::new();
    for s in new {
        if taken.contains(&s) || !seen.insert(s) {
            return Err(ClosureError::NotFresh(s));
        }
    }
    Ok(())
}

/// `F_{G,□₁,□₂}`: the wrapper of `at` with fresh anchors `sq_start`,
/// `sq_end`.
pub fn wrap(at: &AnchoredTransformer, sq_start: Symbol, sq_end: Symbol) -> Result<Wrapped, ClosureError> {
    let g = at.final_symbol();
    let (p, q) = (at.start, at.end);
    let a = at.inputs();
    let d: BTreeSet<Symbol> = at.outputs().union(at.temps()).copied().collect();
    let taken: HashSet<Symbol> = at.grammar().full_alphabet().into_iter().collect();
    check_fresh(
        &taken,
        a.iter().chain(&d).map(|&s| prime(s)).chain([sq_start, sq_end]),
    )?;

    let erased: BTreeSet<Symbol> = a.iter().copied().chain([p]).collect();
    let d_clean: Vec<Symbol> = d.iter().filter(|&&x| x != p).map(|&x| prime(x)).collect();
    let mut classes: BTreeMap<Rule, RuleClass> = BTreeMap::new();
    let mut add = |r: Rule, c: RuleClass| {
        classes.entry(r).or_insert(c);
    };
    for r in at.grammar().rules() {
        if r.is_deletion() && erased.contains(&r.patient) {
            if r.actor == g {
                return Err(ClosureError::FinalErasesInput(*r));
            }
            add(Rule::delete(prime(r.actor), r.patient), RuleClass::Replace);
        } else {
            add(*r, RuleClass::Kept);
        }
    }
    for &x in d.iter().filter(|&&x| x != p) {
        add(Rule::insert(x, prime(x)), RuleClass::Mirror);
    }
    for &x in &d_clean {
        for &y in &d_clean {
            add(Rule::delete(x, y), RuleClass::Clean);
        }
    }
    for &x in a.iter().chain([&p]) {
        add(Rule::delete(sq_end, prime(x)), RuleClass::Clean);
    }
    add(Rule::delete(sq_end, sq_start), RuleClass::Anchor);
    for &x in &d_clean {
        add(Rule::insert(x, sq_end), RuleClass::Anchor);
    }

    let inputs: BTreeSet<Symbol> = a.iter().flat_map(|&x| [x, prime(x)]).chain([p, prime(p)]).collect();
    let temps: BTreeSet<Symbol> = at
        .temps()
        .iter()
        .copied()
        .filter(|&x| x != p && x != q)
        .chain([sq_start, sq_end])
        .collect();
    let outputs: BTreeSet<Symbol> = at
        .outputs()
        .iter()
        .copied()
        .chain([q])
        .chain(d.iter().filter(|&&x| x != p).map(|&x| prime(x)))
        .collect();
    let alphabet = inputs.iter().chain(&temps).chain(&outputs).copied().collect();
    let grammar = Grammar::new(alphabet, g, classes.keys().copied())?;
    let base = Transformer::new(grammar, inputs, temps, outputs)?;
    Ok(Wrapped {
        at: AnchoredTransformer::new(base, sq_start, sq_end)?,
        classes,
        inner_start: p,
        inner_end: q,
        inner_inputs: a.clone(),
    })
}

/// `H`: the union of the rules of the two wrappers. `fr` must not use
/// symbols outside `fg`.
pub fn glue(fg: &Wrapped, fr: &Wrapped) -> Result<Grammar, ClosureError> {
    let universe = fg.at.grammar().alphabet();
    if let Some(&s) = fr.at.grammar().alphabet().iter().find(|s| !universe.contains(s)) {
        return Err(ClosureError::UniverseMismatch(s));
    }
    let rules = fg.at.grammar().rules().iter().chain(fr.at.grammar().rules()).copied();
    Ok(Grammar::new(universe.clone(), fg.at.final_symbol(), rules)?)
}

/// The symbols of the construction for a given `G : A ⊢ C` with anchors
/// `b₁`, `b₂`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ClosureSymbols {
    pub a: BTreeSet<Symbol>,
    pub b: BTreeSet<Symbol>,
    pub c: BTreeSet<Symbol>,
    pub b1: Symbol,
    pub b2: Symbol,
    pub sq1: Symbol,
    pub sq2: Symbol,
    pub o1: Symbol,
    pub o2: Symbol,
    pub g: Symbol,
}

impl ClosureSymbols {
    /// Picks `sq1`, `sq2`, `o1`, `o2`, adding underscores until they are fresh.
    pub fn for_transformer(at: &AnchoredTransformer) -> ClosureSymbols {
        let taken: HashSet<Symbol> = at.grammar().full_alphabet().into_iter().collect();
        let mut used = HashSet::new();
        let mut pick = |base: &str| {
            let mut name = base.to_string();
            loop {
                let s = Symbol::new(&name);
                let derived = [s, prime(s), dot(s), ddot(s), prime(dot(s)), prime(ddot(s))];
                if derived.iter().all(|d| !taken.contains(d)) && used.insert(s) {
                    return s;
                }
                name.push('_');
            }
        };
        ClosureSymbols {
            a: at.inputs().clone(),
            b: at.temps().clone(),
            c: at.outputs().clone(),
            b1: at.start,
            b2: at.end,
            sq1: pick("sq1"),
            sq2: pick("sq2"),
            o1: pick("o1"),
            o2: pick("o2"),
            g: at.final_symbol(),
        }
    }

    /// `D = C ∪ B`.
    pub fn d(&self) -> BTreeSet<Symbol> {
        self.c.union(&self.b).copied().collect()
    }

    fn is_a_or_b1(&self, s: Symbol) -> bool {
        s == self.b1 || self.a.contains(&s)
    }

    fn is_a_or_b1_prime(&self, s: Symbol) -> bool {
        s == prime(self.b1) || self.a.iter().any(|&x| prime(x) == s)
    }

    fn is_d(&self, s: Symbol) -> bool {
        self.c.contains(&s) || self.b.contains(&s)
    }

    fn is_d_not_b1(&self, s: Symbol) -> bool {
        s != self.b1 && self.is_d(s)
    }

    fn is_d_prime_not_b1(&self, s: Symbol) -> bool {
        s != prime(self.b1) && self.c.iter().chain(&self.b).any(|&x| prime(x) == s)
    }

    fn is_square(&self, s: Symbol) -> bool {
        s == self.sq1 || s == self.sq2
    }

    /// `I₁ = Σ*·(A + D)·Σ_□·Σ*`.
    pub fn in_i1(&self, w: &[Symbol]) -> bool {
        w.windows(2)
            .any(|p| (self.a.contains(&p[0]) || self.is_d(p[0])) && self.is_square(p[1]))
    }

    /// `I₂ = Σ*·(A + b₁)·(Σ_□ + A′ + b₁′)·Σ*`.
    pub fn in_i2(&self, w: &[Symbol]) -> bool {
        w.windows(2)
            .any(|p| self.is_a_or_b1(p[0]) && (self.is_square(p[1]) || self.is_a_or_b1_prime(p[1])))
    }

    /// `I₃ = Σ*·(D ∖ b₁)·(Σ_□ + D′ ∖ b₁′)·Σ*`.
    pub fn in_i3(&self, w: &[Symbol]) -> bool {
        w.windows(2)
            .any(|p| self.is_d_not_b1(p[0]) && (self.is_square(p[1]) || self.is_d_prime_not_b1(p[1])))
    }

    /// Membership in `L_AC` (`ac = true`) or `L_CA`.
    pub fn in_mode(&self, w: &[Symbol], ac: bool) -> bool {
        let (head, other): (Symbol, Symbol) = if ac { (self.sq1, self.sq2) } else { (self.sq2, self.sq1) };
        let Some((&last, body)) = w.split_last() else { return false };
        let Some((&first, mut rest)) = body.split_first() else { return false };
        if last != self.g || first != head {
            return false;
        }
        let classes: [Box<dyn Fn(Symbol) -> bool + '_>; 5] = if ac {
            [
                Box::new(|s| self.is_a_or_b1_prime(s)),
                Box::new(move |s| s == other),
                Box::new(|s| self.is_a_or_b1(s)),
                Box::new(|s| self.is_d_prime_not_b1(s)),
                Box::new(|s| self.is_d_not_b1(s)),
            ]
        } else {
            [
                Box::new(|s| self.is_d_prime_not_b1(s)),
                Box::new(move |s| s == other),
                Box::new(|s| self.is_d_not_b1(s)),
                Box::new(|s| self.is_a_or_b1_prime(s)),
                Box::new(|s| self.is_a_or_b1(s)),
            ]
        };
        let mut n = [0usize; 5];
        for (k, class) in classes.iter().enumerate() {
            while let Some((&s, tail)) = rest.split_first() {
                if !class(s) {
                    break;
                }
                n[k] += 1;
                rest = tail;
            }
        }
        rest.is_empty()
            && n[1] <= 1
            && (n[0] > 0 || n[1] > 0)
            && (n[1] == 0 || n[2] == 0)
            && (n[2] > 0 || n[3] > 0)
            && (n[3] == 0 || n[4] > 0)
    }
}

/// `H′ : Ȧ ⊢ A ∪ A′ ∪ {b₁, b₁′, □₁}`, adding `□̇₂ ⇢ □̇₁`, `□₁ → □̇₂` and
/// `a ⇢ ȧ` to `H`. Anchors are `□̇₁`, `□̇₂`.
pub fn extend_hprime(h: &Grammar, syms: &ClosureSymbols) -> Result<AnchoredTransformer, ClosureError> {
    let (s1, s2) = (dot(syms.sq1), dot(syms.sq2));
    let dotted: Vec<Symbol> = syms.a.iter().map(|&x| dot(x)).collect();
    let taken: HashSet<Symbol> = h.full_alphabet().into_iter().collect();
    check_fresh(&taken, dotted.iter().copied().chain([s1, s2]))?;
    let mut rules: Vec<Rule> = h.rules().iter().copied().collect();
    rules.push(Rule::delete(s2, s1));
    rules.push(Rule::insert(syms.sq1, s2));
    for &x in &syms.a {
        rules.push(Rule::delete(x, dot(x)));
    }
    let inputs: BTreeSet<Symbol> = dotted.into_iter().collect();
    let outputs: BTreeSet<Symbol> = syms
        .a
        .iter()
        .flat_map(|&x| [x, prime(x)])
        .chain([syms.b1, prime(syms.b1), syms.sq1])
        .collect();
    let temps: BTreeSet<Symbol> = h
        .alphabet()
        .iter()
        .copied()
        .filter(|s| !outputs.contains(s))
        .chain([s1, s2])
        .collect();
    let alphabet = inputs.iter().chain(&temps).chain(&outputs).copied().collect();
    let grammar = Grammar::new(alphabet, h.final_symbol(), rules)?;
    AnchoredTransformer::new(Transformer::new(grammar, inputs, temps, outputs)?, s1, s2)
}

/// The copy of `A` that `T₂` writes.
pub fn output_copy(a: Symbol) -> Symbol {
    a.suffixed(".x")
}

/// The finishing transformers. `T₁` reads `□₁·α·b₁·u′` over
/// `A ∪ A′ ∪ {□₁, b₁, b₁′}` and writes a double-dotted copy; `T₂` keeps the
/// `Ä` part, up to stuttering and extra letters, in the copy
/// [`output_copy`].
pub fn build_finishers(
    syms: &ClosureSymbols,
    final_sym: Symbol,
) -> Result<(AnchoredTransformer, AnchoredTransformer), ClosureError> {
    let i1: BTreeSet<Symbol> = syms
        .a
        .iter()
        .flat_map(|&x| [x, prime(x)])
        .chain([syms.sq1, syms.b1, prime(syms.b1)])
        .collect();
    let o1: BTreeSet<Symbol> = i1.iter().map(|&x| ddot(x)).collect();
    let aa: Vec<Symbol> = syms.a.iter().map(|&x| ddot(x)).collect();
    let aa_prime: Vec<Symbol> = syms
        .a
        .iter()
        .map(|&x| ddot(prime(x)))
        .chain([ddot(prime(syms.b1))])
        .collect();
    let bb1 = ddot(syms.b1);
    let sqq1 = ddot(syms.sq1);
    let t1_start = ddot(syms.sq2);
    let xs: Vec<Symbol> = syms.a.iter().map(|&x| output_copy(x)).collect();
    let taken: HashSet<Symbol> = i1.iter().copied().chain([final_sym]).collect();
    check_fresh(
        &taken,
        o1.iter().copied().chain([t1_start, syms.o1, syms.o2]).chain(xs.iter().copied()),
    )?;

    let mut p1 = Vec::new();
    for &l in &i1 {
        p1.push(Rule::delete(ddot(l), l));
    }
    for &x in &aa {
        p1.push(Rule::insert(final_sym, x));
        for &y in &aa {
            p1.push(Rule::insert(x, y));
        }
        p1.push(Rule::insert(x, bb1));
    }
    for &x in &aa_prime {
        p1.push(Rule::insert(bb1, x));
        for &y in &aa_prime {
            p1.push(Rule::insert(x, y));
        }
        p1.push(Rule::insert(x, sqq1));
    }
    p1.push(Rule::insert(sqq1, syms.o1));
    p1.push(Rule::delete(syms.o1, t1_start));
    let temps1: BTreeSet<Symbol> = [t1_start, syms.o1].into();
    let alphabet1 = i1.iter().chain(&o1).chain(&temps1).copied().collect();
    let t1 = AnchoredTransformer::new(
        Transformer::new(Grammar::new(alphabet1, final_sym, p1)?, i1, temps1, o1.clone())?,
        t1_start,
        syms.o1,
    )?;

    let mut p2 = Vec::new();
    let erasable: Vec<Symbol> = aa_prime.iter().copied().chain([bb1, sqq1]).collect();
    for (&x, &a) in xs.iter().zip(&aa) {
        p2.push(Rule::insert(final_sym, x));
        for &y in &xs {
            p2.push(Rule::insert(x, y));
        }
        p2.push(Rule::insert(x, syms.o2));
        p2.push(Rule::delete(x, a));
        for &l in &erasable {
            p2.push(Rule::delete(x, l));
        }
    }
    p2.push(Rule::delete(syms.o2, syms.o1));
    let temps2: BTreeSet<Symbol> = [syms.o1, syms.o2].into();
    let outputs2: BTreeSet<Symbol> = xs.iter().copied().collect();
    let alphabet2 = o1.iter().chain(&temps2).chain(&outputs2).copied().collect();
    let t2 = AnchoredTransformer::new(
        Transformer::new(Grammar::new(alphabet2, final_sym, p2)?, o1, temps2, outputs2)?,
        syms.o1,
        syms.o2,
    )?;
    Ok((t1, t2))
}

/// Renames one symbol to another that is already present, merging them.
fn merge(t: &Transformer, from: Symbol, into: Symbol) -> Result<Transformer, ClosureError> {
    let f = |s: Symbol| if s == from { into } else { s };
    let rules: Vec<Rule> = t.grammar().rules().iter().map(|r| r.map(f)).collect();
    let alphabet = t.grammar().alphabet().iter().copied().filter(|&s| s != from).collect();
    let grammar = Grammar::new(alphabet, t.final_symbol(), rules)?;
    let drop = |s: &BTreeSet<Symbol>| s.iter().copied().filter(|&x| x != from).collect();
    Ok(Transformer::new(grammar, drop(t.inputs()), drop(t.temps()), drop(t.outputs()))?)
}

fn fresh_in(base: Symbol, taken: &HashSet<Symbol>) -> Symbol {
    let mut k = 1;
    loop {
        let s = base.suffixed(&format!(".j{k}"));
        if !taken.contains(&s) {
            return s;
        }
        k += 1;
    }
}

/// An anchored composition with the symbol maps from each operand into the
/// result.
#[derive(Clone, Debug)]
pub struct AnchoredComposition {
    pub transformer: AnchoredTransformer,
    pub left: HashMap<Symbol, Symbol>,
    pub right: HashMap<Symbol, Symbol>,
}

/// Sequential composition of anchored transformers: the end anchor of `t1`
/// and the start anchor of `t2` become one symbol.
pub fn anchored_compose(t1: &AnchoredTransformer, t2: &AnchoredTransformer) -> Result<AnchoredTransformer, ClosureError> {
    Ok(anchored_compose_mapped(t1, t2)?.transformer)
}

pub fn anchored_compose_mapped(
    t1: &AnchoredTransformer,
    t2: &AnchoredTransformer,
) -> Result<AnchoredComposition, ClosureError> {
    let taken: HashSet<Symbol> = t1
        .grammar()
        .full_alphabet()
        .into_iter()
        .chain(t2.grammar().full_alphabet())
        .collect();
    let joint = fresh_in(t2.start, &taken);
    let t2_start = t2.start;
    let t2r = t2.rename(&|s| if s == t2_start { joint } else { s })?;
    let comp = compose(&t1.base, &t2r.base)?;
    let image = |operand: u8, s: Symbol| {
        comp.renamed
            .iter()
            .find(|r| r.operand == operand && r.from == s)
            .map(|r| r.to)
            .unwrap_or(s)
    };
    let q1 = image(1, t1.end);
    let p2 = image(2, joint);
    let merged = merge(&comp.transformer, p2, q1)?;
    let fold = |s: Symbol| if s == p2 { q1 } else { s };
    let left = t1.grammar().full_alphabet().into_iter().map(|s| (s, fold(image(1, s)))).collect();
    let right = t2
        .grammar()
        .full_alphabet()
        .into_iter()
        .map(|s| (s, fold(image(2, if s == t2_start { joint } else { s }))))
        .collect();
    Ok(AnchoredComposition {
        transformer: AnchoredTransformer::new(merged, image(1, t1.start), image(2, t2r.end))?,
        left,
        right,
    })
}

/// Symbol maps from each stage into `G⁽⁺⁾`.
#[derive(Clone, Debug, Default)]
pub struct StageMaps {
    pub g: HashMap<Symbol, Symbol>,
    pub hprime: HashMap<Symbol, Symbol>,
    pub t1: HashMap<Symbol, Symbol>,
    pub t2: HashMap<Symbol, Symbol>,
}

/// Every stage of the construction of `G⁽⁺⁾`.
#[derive(Clone, Debug)]
pub struct ClosurePipeline {
    pub symbols: ClosureSymbols,
    pub renaming: Renaming,
    pub renamer: AnchoredTransformer,
    pub wrapped_g: Wrapped,
    pub wrapped_r: Wrapped,
    pub h: Grammar,
    pub hprime: AnchoredTransformer,
    pub t1: AnchoredTransformer,
    pub t2: AnchoredTransformer,
    /// `H′.T₁.T₂ : Ȧ ⊢ X`, computing `⊑_A·(S_G·h̄)*` up to stuttering and
    /// extra output letters.
    pub iteration: AnchoredTransformer,
    /// `G⁽⁺⁾ : A ⊢ C`.
    pub closure: AnchoredTransformer,
    pub maps: StageMaps,
}

/// Builds `G⁽⁺⁾` as `G · H′.T₁.T₂`, renamed back to `A ⊢ C`. `G` feeds the
/// iteration stage through the dotted copy `ȧ = h(c)` of its outputs.
pub fn build_pipeline(at: &AnchoredTransformer, h: &Renaming) -> Result<ClosurePipeline, ClosureError> {
    h.check(at)?;
    let g = at.final_symbol();
    let syms = ClosureSymbols::for_transformer(at);
    let renamer = build_renamer(&syms.c, &syms.a, h, syms.b2, syms.b1, g)?;
    let wrapped_g = wrap(at, syms.sq1, syms.sq2)?;
    let wrapped_r = wrap(&renamer, syms.sq2, syms.sq1)?;
    let hg = glue(&wrapped_g, &wrapped_r)?;
    let hprime = extend_hprime(&hg, &syms)?;
    let (t1, t2) = build_finishers(&syms, g)?;
    let taken: HashSet<Symbol> = hprime.grammar().full_alphabet().into_iter().collect();
    check_fresh(
        &taken,
        t1.outputs().iter().chain(t2.outputs()).copied().chain([syms.o1, syms.o2]),
    )?;
    let head = anchored_compose_mapped(&hprime, &t1)?;
    let tail = anchored_compose_mapped(&head.transformer, &t2)?;
    let iteration = tail.transformer.clone();

    let to_feed = |s: Symbol| match h.get(s) {
        Some(a) if at.outputs().contains(&s) => dot(a),
        _ => s,
    };
    let feed = at.rename(&to_feed)?;
    let joined_c = anchored_compose_mapped(&feed, &iteration)?;
    let joined = joined_c.transformer;

    let outputs_back: HashMap<Symbol, Symbol> = h.pairs().map(|(c, a)| (output_copy(a), c)).collect();
    let mut taken: HashSet<Symbol> = joined.grammar().full_alphabet().into_iter().collect();
    taken.extend(syms.c.iter().copied());
    let mut internal: HashMap<Symbol, Symbol> = HashMap::new();
    for &t in joined.temps() {
        if syms.c.contains(&t) {
            let mut n = t.suffixed(".p");
            while taken.contains(&n) {
                n = n.suffixed(".p");
            }
            taken.insert(n);
            internal.insert(t, n);
        }
    }
    let back = |s: Symbol| outputs_back.get(&s).or_else(|| internal.get(&s)).copied().unwrap_or(s);
    let closure = joined.rename(&back)?;
    let through = |m: &HashMap<Symbol, Symbol>, inner: &dyn Fn(Symbol) -> Symbol| -> HashMap<Symbol, Symbol> {
        m.keys().map(|&s| (s, back(joined_c.right[&inner(s)]))).collect()
    };
    let maps = StageMaps {
        g: at
            .grammar()
            .full_alphabet()
            .into_iter()
            .map(|s| (s, back(joined_c.left[&to_feed(s)])))
            .collect(),
        hprime: through(&head.left, &|s| tail.left[&head.left[&s]]),
        t1: through(&head.right, &|s| tail.left[&head.right[&s]]),
        t2: through(&tail.right, &|s| tail.right[&s]),
    };
    Ok(ClosurePipeline {
        symbols: syms,
        renaming: h.clone(),
        renamer,
        wrapped_g,
        wrapped_r,
        h: hg,
        hprime,
        t1,
        t2,
        iteration,
        closure,
        maps,
    })
}

/// `G⁽⁺⁾ : A ⊢ C` with `S_{G⁽⁺⁾} = S_G·(h̄·S_G)*` whenever `S_G = S_G·⊑_C`.
pub fn transitive_closure(at: &AnchoredTransformer, h: &Renaming) -> Result<AnchoredTransformer, ClosureError> {
    Ok(build_pipeline(at, h)?.closure)
}

/// Outcome of the bounded precondition checks.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Precheck {
    pub bounds: RelationBounds,
    pub slack: RelationBounds,
    pub pairs: usize,
    /// `S_G = S_G·⊑_C` at the bounds; a failing pair otherwise.
    pub right: Option<(Word, Word)>,
    /// `S_G = ⊑_A·S_G·⊑_C` at the bounds; a failing pair otherwise.
    pub two_sided: Option<(Word, Word)>,
}

impl Precheck {
    pub fn right_holds(&self) -> bool {
        self.right.is_none()
    }

    pub fn two_sided_holds(&self) -> bool {
        self.right.is_none() && self.two_sided.is_none()
    }
}

/// Checks both closure hypotheses on the pairs of bounded `S_G`: every
/// one-letter output extension (and, for the two-sided form, every
/// one-letter input deletion) must again be a pair within the `slack`
/// bounds.
pub fn precheck(at: &AnchoredTransformer, b: &RelationBounds, slack: &RelationBounds) -> Precheck {
    let rel = at.relation(b);
    let search = slack.search().with_budget(5_000_000);
    let mut right = None;
    let mut two_sided = None;
    let c: Vec<Symbol> = at.outputs().iter().copied().collect();
    'outer: for (u, v) in &rel.pairs {
        if v.len() + 3 > slack.max_word {
            continue;
        }
        for i in 0..=v.len() {
            for &x in &c {
                let mut w = v.clone();
                w.insert(i, x);
                if !rel.pairs.contains(&(u.clone(), w.clone())) && !at.derives(u, &w, &search) {
                    right = Some((u.clone(), w));
                    break 'outer;
                }
            }
        }
    }
    'outer2: for (u, v) in &rel.pairs {
        for i in 0..u.len() {
            let mut x = u.clone();
            x.remove(i);
            if !rel.pairs.contains(&(x.clone(), v.clone())) && !at.derives(&x, v, &search) {
                two_sided = Some((x, v.clone()));
                break 'outer2;
            }
        }
    }
    Precheck {
        bounds: *b,
        slack: *slack,
        pairs: rel.pairs.len(),
        right,
        two_sided,
    }
}

/// `S_G·(h̄·S_G)*` over a materialized `S_G`, iterated to a fixpoint.
pub fn closure_of_relation(s: &BTreeSet<(Word, Word)>, h: &Renaming) -> BTreeSet<(Word, Word)> {
    closure_chains(s, h).into_keys().collect()
}

/// Like [`closure_of_relation`], recording for each pair `(u, v)` a
/// shortest chain `[u, v₁, …, v_k = v]` with `u S_G v₁` and
/// `h̄(v_i) S_G v_{i+1}`.
pub fn closure_chains(s: &BTreeSet<(Word, Word)>, h: &Renaming) -> BTreeMap<(Word, Word), Vec<Word>> {
    let mut by_input: HashMap<Word, Vec<Word>> = HashMap::new();
    for (u, v) in s {
        by_input.entry(u.clone()).or_default().push(v.clone());
    }
    let mut out: BTreeMap<(Word, Word), Vec<Word>> = s
        .iter()
        .map(|(u, v)| ((u.clone(), v.clone()), vec![u.clone(), v.clone()]))
        .collect();
    let mut frontier: std::collections::VecDeque<(Word, Word)> = s.iter().cloned().collect();
    while let Some((u, v)) = frontier.pop_front() {
        let Some(next) = by_input.get(&h.apply(&v)) else { continue };
        for w in next {
            let pair = (u.clone(), w.clone());
            if !out.contains_key(&pair) {
                let mut chain = out[&(u.clone(), v.clone())].clone();
                chain.push(w.clone());
                out.insert(pair.clone(), chain);
                frontier.push_back(pair);
            }
        }
    }
    out
}

fn shift(d: &Derivation, map: &HashMap<Symbol, Symbol>, offset: usize) -> Vec<Step> {
    d.steps
        .iter()
        .map(|s| Step::new(s.rule.map(|x| map[&x]), s.position + offset))
        .collect()
}

/// `b₂·v·g ⇒⁺ b₁·h̄(v)·g` in the renamer, right to left.
pub fn renamer_derivation(renamer: &AnchoredTransformer, h: &Renaming, v: &[Symbol]) -> Derivation {
    let (start, end, g) = (renamer.start(), renamer.end(), renamer.final_symbol());
    let mut steps = Vec::new();
    let mut actor = g;
    for j in (1..=v.len()).rev() {
        let a = h.get(v[j - 1]).unwrap_or(v[j - 1]);
        steps.push(Step::new(Rule::insert(actor, a), j + 2));
        steps.push(Step::new(Rule::delete(a, v[j - 1]), j + 2));
        actor = a;
    }
    steps.push(Step::new(Rule::insert(actor, end), 2));
    steps.push(Step::new(Rule::delete(end, start), 2));
    Derivation::new(renamer.start_word(v), steps)
}

/// Builds a derivation `b₁·u·g ⇒⁺ b₂·v_k·g` in `G⁽⁺⁾` from a chain
/// `[u, v₁, …, v_k]` with `u S_G v₁` and `h̄(v_i) S_G v_{i+1}`, all `v_i`
/// nonempty. Each `S_G` link is found by `search` in `G`; the finishing
/// stages are searched in `T₁` and `T₂`. The result is replayed before it is
/// returned.
pub fn closure_witness(
    p: &ClosurePipeline,
    at: &AnchoredTransformer,
    chain: &[Word],
    search: &SearchBounds,
) -> Result<Derivation, ClosureError> {
    let fail = |index: usize, reason: String| ClosureError::Mimicry { index, reason };
    if chain.len() < 2 || chain[1..].iter().any(|v| v.is_empty()) {
        return Err(fail(0, "chain needs at least one link and nonempty outputs".into()));
    }
    let syms = &p.symbols;
    let h = &p.renaming;
    let link = |u: &Word, v: &Word, i: usize| -> Result<Derivation, ClosureError> {
        bounded_reach(at.grammar(), &at.start_word(u), &at.end_word(v), search)
            .found()
            .cloned()
            .ok_or_else(|| fail(i, format!("no G derivation for ({u}, {v})")))
    };
    let mut steps = shift(&link(&chain[0], &chain[1], 0)?, &p.maps.g, 0);

    // Head in H′: undot the letters, then stack b₁ b₁′ □₁ □̇₂ and drop □̇₁.
    let x: Word = h.apply(&chain[1]);
    let mut head = Vec::new();
    let mut actor = syms.g;
    for j in (1..=x.len()).rev() {
        head.push(Step::new(Rule::insert(actor, x[j - 1]), j + 2));
        head.push(Step::new(Rule::delete(x[j - 1], dot(x[j - 1])), j + 2));
        actor = x[j - 1];
    }
    let (s1, s2) = (dot(syms.sq1), dot(syms.sq2));
    head.push(Step::new(Rule::insert(actor, syms.b1), 2));
    head.push(Step::new(Rule::insert(syms.b1, prime(syms.b1)), 2));
    head.push(Step::new(Rule::insert(prime(syms.b1), syms.sq1), 2));
    head.push(Step::new(Rule::insert(syms.sq1, s2), 2));
    head.push(Step::new(Rule::delete(s2, s1), 2));
    let mut initial = Word(vec![s1]);
    initial.extend(x.iter().map(|&a| dot(a)));
    steps.extend(shift(&Derivation::new(initial.with_final(syms.g), head), &p.maps.hprime, 0));

    let mut alpha = vec![prime(syms.b1)];
    let mut x = x;
    for (i, v) in chain.iter().enumerate().skip(2) {
        let dg = link(&x, v, i - 1)?;
        let fg = mimic(&p.wrapped_g, at.grammar(), &dg, &alpha)?;
        steps.extend(shift(&fg, &p.maps.hprime, 1));
        let dr = renamer_derivation(&p.renamer, h, v);
        let fr = mimic(&p.wrapped_r, p.renamer.grammar(), &dr, &[prime(syms.b2)])?;
        steps.extend(shift(&fr, &p.maps.hprime, 1));
        alpha = vec![prime(syms.b1)];
        x = h.apply(v);
    }

    let mut t1_from = Word(vec![p.t1.start(), syms.sq1]);
    t1_from.extend_from_slice(&alpha);
    t1_from.push(syms.b1);
    t1_from.extend_from_slice(&x);
    let t1_from = t1_from.with_final(syms.g);
    let mut t1_to = Word(vec![p.t1.end()]);
    t1_to.extend(t1_from[1..t1_from.len() - 1].iter().map(|&l| ddot(l)));
    let t1_to = t1_to.with_final(syms.g);
    let local = |from: &Word, to: &Word| {
        let m = from.len().max(to.len()) + 2;
        SearchBounds::at_most(4 * m + 8, m).with_budget(search.budget)
    };
    let d1 = bounded_reach(p.t1.grammar(), &t1_from, &t1_to, &local(&t1_from, &t1_to));
    let d1 = d1.found().ok_or_else(|| fail(chain.len(), "no T1 derivation".into()))?;
    steps.extend(shift(d1, &p.maps.t1, 0));

    let t2_to = p.t2.end_word(&x.iter().map(|&a| output_copy(a)).collect::<Vec<_>>());
    let d2 = bounded_reach(p.t2.grammar(), &t1_to, &t2_to, &local(&t1_to, &t2_to));
    let d2 = d2.found().ok_or_else(|| fail(chain.len(), "no T2 derivation".into()))?;
    steps.extend(shift(d2, &p.maps.t2, 0));

    let d = Derivation::new(p.closure.start_word(&chain[0]), steps);
    let last = d.final_word(p.closure.grammar())?;
    let want = p.closure.end_word(chain.last().expect("nonempty chain"));
    if last != want {
        return Err(ClosureError::Derivation(crate::error::DerivationError::Endpoints(format!(
            "reached {last}, expected {want}"
        ))));
    }
    Ok(d)
}

/// Emits the derivation `□₁·α·u·g ⇒⁺ □₂·β·v·g` in `F_G` that mimics
/// `d : u·g ⇒⁺ v·g` in `G`, where `u ∈ (A + b₁)*` and `v ∈ (C + b₂)⁺`.
pub fn mimic(wrapped: &Wrapped, g: &Grammar, d: &Derivation, alpha: &[Symbol]) -> Result<Derivation, ClosureError> {
    let sq_start = wrapped.at.start();
    let sq_end = wrapped.at.end();
    let p = wrapped.inner_start;
    let is_prefix = |s: Symbol| s == p || wrapped.inner_inputs.contains(&s);
    let mut w = d.initial.clone();
    if w.strip_final(g.final_symbol()).iter().any(|&s| !is_prefix(s)) {
        return Err(ClosureError::Mimicry { index: 0, reason: "initial word is not over A + b1".into() });
    }
    let mut n1 = w.len() - 1;
    let mut gamma: Vec<Symbol> = Vec::new();
    let base = 1 + alpha.len();
    let mut initial = Word(vec![sq_start]);
    initial.extend_from_slice(alpha);
    initial.extend_from_slice(&w);
    let mut steps = Vec::new();
    for (index, s) in d.steps.iter().enumerate() {
        let pos = s.position;
        if pos <= n1 {
            return Err(ClosureError::Mimicry { index, reason: "active letter inside the input prefix".into() });
        }
        let fpos = pos + base + gamma.len();
        if s.rule.is_deletion() && pos == n1 + 1 {
            let dd = prime(s.rule.actor);
            steps.push(Step::new(Rule::insert(s.rule.actor, dd), fpos));
            for (k, &x) in gamma.iter().rev().enumerate() {
                steps.push(Step::new(Rule::delete(dd, x), fpos - k));
            }
            steps.push(Step::new(Rule::delete(dd, s.rule.patient), fpos - gamma.len()));
            gamma = vec![dd];
            n1 -= 1;
        } else {
            if s.rule.is_insertion() && is_prefix(s.rule.patient) {
                return Err(ClosureError::Mimicry { index, reason: "insertion of an input letter".into() });
            }
            steps.push(Step::new(s.rule, fpos));
        }
        w = apply_rule(&w, s).map_err(|source| {
            ClosureError::Derivation(crate::error::DerivationError::InvalidStep { index, source })
        })?;
    }
    if n1 != 0 || w.len() < 2 {
        return Err(ClosureError::Mimicry {
            index: d.len(),
            reason: "final word is not over C + b2 or is empty".into(),
        });
    }
    let e = w[0];
    let ep = prime(e);
    let pos = base + gamma.len() + 1;
    steps.push(Step::new(Rule::insert(e, ep), pos));
    for (k, &x) in gamma.iter().rev().enumerate() {
        steps.push(Step::new(Rule::delete(ep, x), pos - k));
    }
    let pos = base + 1;
    steps.push(Step::new(Rule::insert(ep, sq_end), pos));
    for (k, &x) in alpha.iter().rev().enumerate() {
        steps.push(Step::new(Rule::delete(sq_end, x), pos - k));
    }
    steps.push(Step::new(Rule::delete(sq_end, sq_start), 2));
    Ok(Derivation::new(initial, steps))
}

/// Checks the invariants `I₁`, `I₂`, `I₃` along every step of `H` reachable
/// from `starts` within `search`: once a word is in `I_k`, so is each
/// successor. Returns the first violation `(w, w′, k)`.
pub fn check_h_invariants(
    syms: &ClosureSymbols,
    h: &Grammar,
    starts: &[Word],
    search: &SearchBounds,
) -> Result<usize, (Word, Word, u8)> {
    let mut edges = 0;
    for start in starts {
        let reached = oracle_enumerate(h, start, search);
        let mut words: Vec<&Word> = reached.keys().collect();
        words.sort();
        for w in words {
            let before = [syms.in_i1(w), syms.in_i2(w), syms.in_i3(w)];
            if w.len() >= search.max_word_len && before.iter().all(|b| !b) {
                continue;
            }
            for s in h.enabled_steps(w) {
                if s.rule.is_insertion() && w.len() >= search.max_word_len {
                    continue;
                }
                let n = apply_rule(w, &s).expect("enabled step applies");
                edges += 1;
                let after = [syms.in_i1(&n), syms.in_i2(&n), syms.in_i3(&n)];
                for k in 0..3 {
                    if before[k] && !after[k] {
                        return Err((w.clone(), n, k as u8 + 1));
                    }
                }
            }
        }
    }
    Ok(edges)
}
