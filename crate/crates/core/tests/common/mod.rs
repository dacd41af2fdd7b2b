//! Catalogs and independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap, HashSet};

use leftist::closure::{AnchoredTransformer, Renaming};
use leftist::simple::SimpleTransformer;
use leftist::transform::Transformer;
use leftist::{Grammar, Rule, RuleKind, Symbol, Word};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

pub fn sym(s: &str) -> Symbol {
    Symbol::new(s)
}

pub fn set(names: &[&str]) -> BTreeSet<Symbol> {
    names.iter().map(|n| Symbol::new(n)).collect()
}

pub fn w(s: &str) -> Word {
    Word::parse(s).unwrap()
}

/// One rewrite step straight from the definition: the letter at 1-based
/// position `p` inserts its patient just left of itself or deletes its left
/// neighbour.
pub fn naive_successors(g: &Grammar, word: &[Symbol], max_len: usize) -> Vec<Word> {
    let mut out = Vec::new();
    for p in 1..=word.len() {
        let actor = word[p - 1];
        for r in g.rules().iter().filter(|r| r.actor == actor) {
            match r.kind {
                RuleKind::Insertion if word.len() < max_len => {
                    let mut v = word.to_vec();
                    v.insert(p - 1, r.patient);
                    out.push(Word(v));
                }
                RuleKind::Deletion if p >= 2 && word[p - 2] == r.patient => {
                    let mut v = word.to_vec();
                    v.remove(p - 2);
                    out.push(Word(v));
                }
                _ => {}
            }
        }
    }
    out
}

/// `layers[k]` holds the words reachable in exactly `k` steps, all
/// intermediate words within `max_len`.
pub fn naive_layers(g: &Grammar, from: &Word, depth: usize, max_len: usize) -> Vec<HashSet<Word>> {
    let mut layers = vec![HashSet::from([from.clone()])];
    for _ in 0..depth {
        let next: HashSet<Word> = layers
            .last()
            .unwrap()
            .iter()
            .flat_map(|x| naive_successors(g, x, max_len))
            .collect();
        layers.push(next);
    }
    layers
}

/// Least number of steps to each reachable word.
pub fn naive_min_depth(layers: &[HashSet<Word>]) -> HashMap<Word, usize> {
    let mut out = HashMap::new();
    for (k, layer) in layers.iter().enumerate() {
        for x in layer {
            out.entry(x.clone()).or_insert(k);
        }
    }
    out
}

/// A random grammar over `letters` with `rules` rules; `g` may insert.
pub fn random_grammar(rng: &mut StdRng, letters: &[&str], rules: usize) -> Grammar {
    let mut ps = Vec::new();
    while ps.len() < rules {
        let patient = letters[rng.gen_range(0..letters.len())];
        let insert = rng.gen_bool(0.5);
        let actor = if insert && rng.gen_bool(0.35) {
            "g"
        } else {
            letters[rng.gen_range(0..letters.len())]
        };
        let r = if insert { Rule::ins(actor, patient) } else { Rule::del(actor, patient) };
        if !ps.contains(&r) {
            ps.push(r);
        }
    }
    if !ps.iter().any(|r| r.actor == sym("g")) {
        ps[0] = Rule::ins("g", letters[0]);
    }
    let alphabet = letters.iter().map(|s| sym(s)).collect();
    Grammar::new(alphabet, sym("g"), ps).unwrap()
}

pub fn g0() -> Grammar {
    Grammar::from_rules(sym("g"), [Rule::ins("g", "c"), Rule::ins("c", "c"), Rule::del("c", "a")]).unwrap()
}

/// The reachability catalog: `G0`, two variants and seeded random grammars.
pub fn grammar_catalog() -> Vec<Grammar> {
    let mut out = vec![
        g0(),
        Grammar::from_rules(sym("g"), [Rule::ins("g", "c"), Rule::ins("c", "c"), Rule::del("c", "a"), Rule::del("c", "c")])
            .unwrap(),
        Grammar::from_rules(
            sym("g"),
            [Rule::ins("g", "b"), Rule::ins("b", "a"), Rule::del("a", "b"), Rule::del("b", "a"), Rule::ins("a", "a")],
        )
        .unwrap(),
    ];
    let mut rng = StdRng::seed_from_u64(7);
    for i in 0..27 {
        let rules = 2 + i % 4;
        out.push(random_grammar(&mut rng, &["a", "b", "c"], rules));
    }
    out
}

fn transformer(rules: &[Rule], a: &[&str], b: &[&str], c: &[&str]) -> Transformer {
    let alphabet = a.iter().chain(b).chain(c).map(|s| sym(s)).collect();
    let g = Grammar::new(alphabet, sym("g"), rules.iter().copied()).unwrap();
    Transformer::new(g, set(a), set(b), set(c)).unwrap()
}

/// Tiny transformers from `x` to `y`, single letters.
fn unary_family(x: &str, y: &str) -> Vec<Transformer> {
    let t = format!("t{x}{y}");
    vec![
        transformer(&[Rule::ins("g", y), Rule::ins(y, y), Rule::del(y, x)], &[x], &[], &[y]),
        transformer(&[Rule::ins("g", y), Rule::del(y, x)], &[x], &[], &[y]),
        transformer(
            &[Rule::ins("g", y), Rule::ins(y, &t), Rule::del(&t, x), Rule::del(y, &t)],
            &[x],
            &[&t],
            &[y],
        ),
    ]
}

/// Tiny transformers from `{x1, x2}` to `{y1, y2}`.
fn binary_family(x: [&str; 2], y: [&str; 2]) -> Vec<Transformer> {
    let ins = [Rule::ins("g", y[0]), Rule::ins("g", y[1])];
    vec![
        transformer(
            &[ins[0], ins[1], Rule::del(y[0], x[0]), Rule::del(y[1], x[1]), Rule::ins(y[0], y[0]), Rule::ins(y[1], y[1])],
            &x,
            &[],
            &y,
        ),
        transformer(&[ins[0], ins[1], Rule::del(y[1], x[0]), Rule::del(y[0], x[1])], &x, &[], &y),
        transformer(&[ins[1], Rule::ins(y[1], y[0]), Rule::del(y[1], x[0]), Rule::del(y[1], x[1]), Rule::del(y[0], x[0])], &x, &[], &y),
    ]
}

/// At least ten chainable pairs `(t1, t2)` with `C₁ = A₂`.
pub fn chainable_pairs() -> Vec<(String, Transformer, Transformer)> {
    let mut out = Vec::new();
    for (i, t1) in unary_family("a", "c").into_iter().enumerate() {
        for (j, t2) in unary_family("c", "e").into_iter().enumerate() {
            out.push((format!("unary {i}.{j}"), t1.clone(), t2));
        }
    }
    for (i, t1) in binary_family(["a", "b"], ["c", "d"]).into_iter().enumerate() {
        for (j, t2) in binary_family(["c", "d"], ["e", "f"]).into_iter().enumerate() {
            out.push((format!("binary {i}.{j}"), t1.clone(), t2));
        }
    }
    out
}

/// The simple members of the tiny families from `x` to `y`.
pub fn simple_family(x: &[&str], y: &[&str]) -> Vec<SimpleTransformer> {
    let family = match (x, y) {
        ([a], [c]) => unary_family(a, c).into_iter().take(2).collect(),
        ([a, b], [c, d]) => binary_family([a, b], [c, d]),
        _ => Vec::new(),
    };
    family.into_iter().map(|t| SimpleTransformer::new(t).unwrap()).collect()
}

/// Simple transformers: no temporaries, outputs never erased.
pub fn simple_catalog() -> Vec<SimpleTransformer> {
    let mut out = simple_family(&["a"], &["c"]);
    out.extend(simple_family(&["a", "b"], &["c", "d"]));
    out.push(
        SimpleTransformer::new(transformer(
            &[Rule::ins("g", "c"), Rule::ins("c", "d"), Rule::ins("d", "c"), Rule::del("c", "a"), Rule::del("d", "a")],
            &["a"],
            &[],
            &["c", "d"],
        ))
        .unwrap(),
    );
    out
}

fn anchored(rules: Vec<Rule>, a: &[&str], c: &[&str]) -> AnchoredTransformer {
    let base = transformer(&rules, a, &["b1", "b2"], c);
    AnchoredTransformer::new(base, sym("b1"), sym("b2")).unwrap()
}

fn any_output(c: &[&str]) -> Vec<Rule> {
    let mut r = Vec::new();
    for &x in c {
        r.push(Rule::ins("g", x));
        r.push(Rule::ins(x, "b2"));
        for &y in c {
            r.push(Rule::ins(x, y));
        }
    }
    r.push(Rule::del("b2", "b1"));
    r
}

/// Toy `T`: `g → c1, c1 → c1, c1 ⇢ a1, c1 → b2, b2 ⇢ b1`.
pub fn toy_t() -> (AnchoredTransformer, Renaming) {
    let mut r = any_output(&["c1"]);
    r.push(Rule::del("c1", "a1"));
    (anchored(r, &["a1"], &["c1"]), Renaming::parse("c1=a1").unwrap())
}

/// `a1 ↦ c2`, `a2 ↦ c1`, with any extra output letters.
pub fn toy_swap() -> (AnchoredTransformer, Renaming) {
    let mut r = any_output(&["c1", "c2"]);
    r.push(Rule::del("c2", "a1"));
    r.push(Rule::del("c1", "a2"));
    (anchored(r, &["a1", "a2"], &["c1", "c2"]), Renaming::parse("c1=a1,c2=a2").unwrap())
}

/// `a1 ↦ c1 | c2`, `a2 ↦ c2`, with any extra output letters.
pub fn toy_merge() -> (AnchoredTransformer, Renaming) {
    let mut r = any_output(&["c1", "c2"]);
    r.push(Rule::del("c1", "a1"));
    r.push(Rule::del("c2", "a1"));
    r.push(Rule::del("c2", "a2"));
    (anchored(r, &["a1", "a2"], &["c1", "c2"]), Renaming::parse("c1=a1,c2=a2").unwrap())
}

pub fn toys() -> Vec<(&'static str, AnchoredTransformer, Renaming)> {
    let (t, h) = toy_t();
    let (s, hs) = toy_swap();
    let (m, hm) = toy_merge();
    vec![("T", t, h), ("swap", s, hs), ("merge", m, hm)]
}
