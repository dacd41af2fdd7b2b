mod common;

use std::collections::{BTreeSet, HashMap};

use common::{g0, naive_layers, naive_min_depth, naive_successors, random_grammar, w};
use leftist::format::{parse_derivation, parse_grammar, write_derivation, write_grammar};
use leftist::reach::{bounded_reach, greedy_reach, oracle_enumerate, SearchBounds};
use leftist::word::subwords;
use leftist::{is_subword, stutter_canonical, stutter_equivalent, Derivation, Grammar, Symbol, Word};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::SeedableRng;

fn grammar(seed: u64, rules: usize) -> Grammar {
    random_grammar(&mut StdRng::seed_from_u64(seed), &["a", "b", "c"], rules)
}

fn word_over(letters: &'static [&'static str], max: usize) -> impl Strategy<Value = Word> {
    prop::collection::vec(prop::sample::select(letters), 0..=max).prop_map(|v| Word::of(&v))
}

fn walk(g: &Grammar, start: Word, choices: &[usize], width: usize) -> Derivation {
    let mut d = Derivation::empty(start.clone());
    let mut cur = start;
    for &c in choices {
        let steps: Vec<_> = g
            .enabled_steps(&cur)
            .into_iter()
            .filter(|s| s.rule.is_deletion() || cur.len() < width)
            .collect();
        if steps.is_empty() {
            break;
        }
        let s = steps[c % steps.len()];
        cur = g.apply_step(&cur, &s).unwrap();
        d.steps.push(s);
    }
    d
}

#[test]
fn oracle_example_from_definition() {
    let layers = naive_layers(&g0(), &w("a g"), 2, 4);
    let want: HashMap<Word, usize> =
        [(w("a g"), 0), (w("a c g"), 1), (w("c g"), 2), (w("a c c g"), 2)].into_iter().collect();
    assert_eq!(naive_min_depth(&layers), want);
    assert_eq!(oracle_enumerate(&g0(), &w("a g"), &SearchBounds::at_most(2, 4)), want);
}

#[test]
fn exact_three_steps_unreachable() {
    let layers = naive_layers(&g0(), &w("a g"), 3, 4);
    assert!(!layers[3].contains(&w("c g")));
    let r = bounded_reach(&g0(), &w("a g"), &w("c g"), &SearchBounds::exactly(3, 4));
    assert!(!r.is_found());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn steps_match_definition(seed in 0u64..500, rules in 1usize..7, u in word_over(&["a", "b", "c"], 5)) {
        let g = grammar(seed, rules);
        let x = u.with_final(g.final_symbol());
        let mine: BTreeSet<Word> = g.enabled_steps(&x).iter().map(|s| g.apply_step(&x, s).unwrap()).collect();
        let naive: BTreeSet<Word> = naive_successors(&g, &x, usize::MAX).into_iter().collect();
        prop_assert_eq!(mine, naive);
    }

    #[test]
    fn oracle_matches_naive_layers(seed in 0u64..500, rules in 1usize..6, u in word_over(&["a", "b", "c"], 2), d in 0usize..6, m in 3usize..7) {
        let g = grammar(seed, rules);
        let from = u.with_final(g.final_symbol());
        let layers = naive_layers(&g, &from, d, m);
        prop_assert_eq!(oracle_enumerate(&g, &from, &SearchBounds::at_most(d, m)), naive_min_depth(&layers));
    }

    #[test]
    fn greedy_search_agrees(seed in 0u64..500, rules in 1usize..6, u in word_over(&["a", "b", "c"], 2), choices in prop::collection::vec(0usize..16, 0..6)) {
        let g = grammar(seed, rules);
        let d = walk(&g, u.with_final(g.final_symbol()), &choices, 6);
        let to = d.final_word(&g).unwrap();
        let n = d.greedy_normalize(&g).unwrap();
        let width = n.replay(&g).unwrap().iter().map(|x| x.len()).max().unwrap().max(6);
        let b = SearchBounds::at_most(d.len(), width);
        let plain = bounded_reach(&g, &d.initial, &to, &b);
        let greedy = greedy_reach(&g, &d.initial, &to, &b).unwrap();
        prop_assert!(plain.is_found());
        prop_assert!(greedy.is_found());
        prop_assert!(greedy.found().unwrap().is_greedy(&g).unwrap());
    }

    #[test]
    fn reach_monotone(seed in 0u64..500, rules in 1usize..6, u in word_over(&["a", "b", "c"], 2), v in word_over(&["a", "b", "c"], 3)) {
        let g = grammar(seed, rules);
        let fin = g.final_symbol();
        let (from, to) = (u.with_final(fin), v.with_final(fin));
        if bounded_reach(&g, &from, &to, &SearchBounds::at_most(4, 5)).is_found() {
            prop_assert!(bounded_reach(&g, &from, &to, &SearchBounds::at_most(6, 6)).is_found());
        }
    }

    #[test]
    fn normalization_laws(seed in 0u64..500, rules in 1usize..7, u in word_over(&["a", "b", "c"], 2), choices in prop::collection::vec(0usize..16, 0..7)) {
        let g = grammar(seed, rules);
        let d = walk(&g, u.with_final(g.final_symbol()), &choices, 7);
        let n = d.greedy_normalize(&g).unwrap();
        prop_assert_eq!(&n.initial, &d.initial);
        prop_assert_eq!(n.final_word(&g).unwrap(), d.final_word(&g).unwrap());
        prop_assert!(n.is_greedy(&g).unwrap());
        prop_assert!(n.measure() <= d.measure());
        // Every contiguous piece of a greedy derivation is greedy.
        for i in 0..n.len() {
            prop_assert!(n.slice(&g, i, n.len()).unwrap().is_greedy(&g).unwrap());
            prop_assert!(n.slice(&g, 0, i).unwrap().is_greedy(&g).unwrap());
        }
    }

    #[test]
    fn stutter_laws(u in word_over(&["a", "b"], 8)) {
        let c = stutter_canonical(&u);
        prop_assert!(stutter_equivalent(&u, &c));
        prop_assert_eq!(stutter_canonical(&c), c.clone());
        prop_assert!(c.windows(2).all(|p| p[0] != p[1]));
        prop_assert!(is_subword(&c, &u, None));
    }

    #[test]
    fn subword_laws(u in word_over(&["a", "b", "c"], 6), mask in any::<u8>()) {
        let kept: Word = Word(u.iter().enumerate().filter(|(i, _)| mask & (1 << i) != 0).map(|(_, &s)| s).collect());
        prop_assert!(is_subword(&kept, &u, None));
        prop_assert!(subwords(&u).contains(&kept));
        let dropped: BTreeSet<Symbol> = u.iter().enumerate().filter(|(i, _)| mask & (1 << i) == 0).map(|(_, &s)| s).collect();
        prop_assert!(is_subword(&kept, &u, Some(&dropped)));
        for x in subwords(&u) {
            prop_assert!(is_subword(&x, &u, None));
        }
    }

    #[test]
    fn grammar_text_round_trip(seed in 0u64..1000, rules in 1usize..8) {
        let g = grammar(seed, rules);
        let text = write_grammar(&g);
        let back = parse_grammar(&text).unwrap();
        prop_assert_eq!(back.rules(), g.rules());
        prop_assert_eq!(back.alphabet(), g.alphabet());
        prop_assert_eq!(back.final_symbol(), g.final_symbol());
        prop_assert_eq!(write_grammar(&back), text);
    }

    #[test]
    fn derivation_text_round_trip(seed in 0u64..500, rules in 1usize..6, choices in prop::collection::vec(0usize..16, 0..6)) {
        let g = grammar(seed, rules);
        let d = walk(&g, Word::of(&["a"]).with_final(g.final_symbol()), &choices, 6);
        let back = parse_derivation(&write_derivation(&d.initial, &d.steps)).unwrap();
        prop_assert_eq!(back.initial, d.initial);
        prop_assert_eq!(back.steps, d.steps);
    }
}
