//! Bounded reachability: a brute-force breadth-first oracle, an exact and an
//! at-most search, and a search restricted to greedy derivations.

use std::collections::{HashMap, HashSet};

use rayon::prelude::*;
use serde::Serialize;

use crate::derivation::{feasible, Derivation};
use crate::grammar::{apply_rule, Grammar, Step};
use crate::symbol::Symbol;
use crate::word::Word;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct SearchBounds {
    pub max_depth: usize,
    /// Maximal length of every intermediate word, final symbol included.
    pub max_word_len: usize,
    pub exact: bool,
    /// Maximal number of expanded nodes.
    pub budget: u64,
}

impl SearchBounds {
    pub fn at_most(max_depth: usize, max_word_len: usize) -> SearchBounds {
        SearchBounds {
            max_depth,
            max_word_len,
            exact: false,
            budget: u64::MAX,
        }
    }

    pub fn exactly(max_depth: usize, max_word_len: usize) -> SearchBounds {
        SearchBounds {
            exact: true,
            ..SearchBounds::at_most(max_depth, max_word_len)
        }
    }

    pub fn with_budget(self, budget: u64) -> SearchBounds {
        SearchBounds { budget, ..self }
    }

    /// The default width: `|from| + |to| + 2·|P|`.
    pub fn default_width(g: &Grammar, from: &[Symbol], to: &[Symbol]) -> usize {
        from.len() + to.len() + 2 * g.rules().len()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct SearchStats {
    pub nodes_expanded: u64,
    pub max_frontier: usize,
    pub dedup_hits: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Found(Derivation),
    NotFound,
    BudgetExceeded,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SearchResult {
    pub verdict: Verdict,
    pub stats: SearchStats,
}

impl SearchResult {
    pub fn found(&self) -> Option<&Derivation> {
        match &self.verdict {
            Verdict::Found(d) => Some(d),
            _ => None,
        }
    }

    pub fn is_found(&self) -> bool {
        matches!(self.verdict, Verdict::Found(_))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ReachError {
    #[error("greedy search only supports at-most mode")]
    ExactGreedy,
}

fn successors(g: &Grammar, w: &Word, max_len: usize) -> Vec<(Step, Word)> {
    g.enabled_steps(w)
        .into_iter()
        .filter(|s| s.rule.is_deletion() || w.len() < max_len)
        .map(|s| {
            let next = apply_rule(w, &s).expect("enabled step applies");
            (s, next)
        })
        .collect()
}

/// Every word reachable from `from` in at most `max_depth` steps with all
/// intermediate words of length at most `max_word_len`, with its least step
/// count. Plain breadth-first search; `exact` and `budget` are ignored.
pub fn oracle_enumerate(g: &Grammar, from: &Word, b: &SearchBounds) -> HashMap<Word, usize> {
    let mut seen: HashMap<Word, usize> = HashMap::new();
    if from.len() > b.max_word_len {
        return seen;
    }
    seen.insert(from.clone(), 0);
    let mut frontier = vec![from.clone()];
    for depth in 1..=b.max_depth {
        if frontier.is_empty() {
            break;
        }
        let expanded: Vec<Vec<Word>> = frontier
            .par_iter()
            .map(|w| {
                successors(g, w, b.max_word_len)
                    .into_iter()
                    .map(|(_, n)| n)
                    .collect()
            })
            .collect();
        let mut next = Vec::new();
        for n in expanded.into_iter().flatten() {
            if !seen.contains_key(&n) {
                seen.insert(n.clone(), depth);
                next.push(n);
            }
        }
        frontier = next;
    }
    seen
}

/// Decides whether `to` is reachable from `from` within the bounds. In
/// at-most mode the result is a shortest derivation; in exact mode one of
/// length exactly `max_depth`. Either way it is the least one in the order
/// induced by [`Grammar::enabled_steps`].
pub fn bounded_reach(g: &Grammar, from: &Word, to: &Word, b: &SearchBounds) -> SearchResult {
    if b.exact {
        exact_reach(g, from, to, b)
    } else {
        at_most_reach(g, from, to, b)
    }
}

fn at_most_reach(g: &Grammar, from: &Word, to: &Word, b: &SearchBounds) -> SearchResult {
    let mut stats = SearchStats::default();
    if from.len() > b.max_word_len || to.len() > b.max_word_len {
        return SearchResult { verdict: Verdict::NotFound, stats };
    }
    let undeletable = g.undeletable();
    let mut parent: HashMap<Word, Option<(Word, Step)>> = HashMap::new();
    parent.insert(from.clone(), None);
    let mut frontier = vec![from.clone()];
    let mut depth = 0;
    loop {
        stats.max_frontier = stats.max_frontier.max(frontier.len());
        if let Some(w) = frontier.iter().find(|w| *w == to) {
            return SearchResult {
                verdict: Verdict::Found(rebuild(&parent, w)),
                stats,
            };
        }
        if depth == b.max_depth || frontier.is_empty() {
            return SearchResult { verdict: Verdict::NotFound, stats };
        }
        let remaining = b.max_depth - depth - 1;
        let mut next = Vec::new();
        for w in &frontier {
            stats.nodes_expanded += 1;
            if stats.nodes_expanded > b.budget {
                return SearchResult { verdict: Verdict::BudgetExceeded, stats };
            }
            for (s, n) in successors(g, w, b.max_word_len) {
                if parent.contains_key(&n) {
                    stats.dedup_hits += 1;
                    continue;
                }
                if !within_reach(&n, to, remaining, &undeletable) {
                    continue;
                }
                parent.insert(n.clone(), Some((w.clone(), s)));
                next.push(n);
            }
        }
        frontier = next;
        depth += 1;
    }
}

/// Can `to` still be reached from `w` in at most `remaining` steps?
fn within_reach(w: &[Symbol], to: &[Symbol], remaining: usize, undeletable: &HashSet<Symbol>) -> bool {
    (0..=remaining).any(|r| feasible(w, to, r, undeletable))
}

fn rebuild(parent: &HashMap<Word, Option<(Word, Step)>>, end: &Word) -> Derivation {
    let mut steps = Vec::new();
    let mut cur = end.clone();
    while let Some(Some((prev, s))) = parent.get(&cur) {
        steps.push(*s);
        cur = prev.clone();
    }
    steps.reverse();
    Derivation::new(cur, steps)
}

struct ExactSearch<'a> {
    g: &'a Grammar,
    to: &'a Word,
    b: &'a SearchBounds,
    undeletable: HashSet<Symbol>,
    dead: HashSet<(Word, usize)>,
    stats: SearchStats,
    over_budget: bool,
}

impl ExactSearch<'_> {
    fn dfs(&mut self, w: &Word, remaining: usize, path: &mut Vec<Step>) -> bool {
        if remaining == 0 {
            return w == self.to;
        }
        if !feasible(w, self.to, remaining, &self.undeletable) {
            return false;
        }
        if self.dead.contains(&(w.clone(), remaining)) {
            self.stats.dedup_hits += 1;
            return false;
        }
        self.stats.nodes_expanded += 1;
        if self.stats.nodes_expanded > self.b.budget {
            self.over_budget = true;
            return false;
        }
        self.stats.max_frontier = self.stats.max_frontier.max(path.len() + 1);
        for (s, n) in successors(self.g, w, self.b.max_word_len) {
            path.push(s);
            if self.dfs(&n, remaining - 1, path) {
                return true;
            }
            path.pop();
            if self.over_budget {
                return false;
            }
        }
        self.dead.insert((w.clone(), remaining));
        false
    }
}

fn exact_reach(g: &Grammar, from: &Word, to: &Word, b: &SearchBounds) -> SearchResult {
    let mut search = ExactSearch {
        g,
        to,
        b,
        undeletable: g.undeletable(),
        dead: HashSet::new(),
        stats: SearchStats::default(),
        over_budget: false,
    };
    if from.len() > b.max_word_len || to.len() > b.max_word_len {
        return SearchResult { verdict: Verdict::NotFound, stats: search.stats };
    }
    let mut path = Vec::new();
    let found = search.dfs(from, b.max_depth, &mut path);
    let verdict = if found {
        Verdict::Found(Derivation::new(from.clone(), path))
    } else if search.over_budget {
        Verdict::BudgetExceeded
    } else {
        Verdict::NotFound
    };
    SearchResult { verdict, stats: search.stats }
}

/// Per-letter bookkeeping for the greedy search.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
struct Mark {
    inserted: bool,
    was_active: bool,
    /// Must never be deleted: deleting it later would break eagerness.
    keep: bool,
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
struct GreedyState {
    word: Word,
    marks: Vec<Mark>,
    /// Number of leading letters that may no longer be active.
    frozen: usize,
}

impl GreedyState {
    fn step(&self, g: &Grammar, s: &Step) -> Option<GreedyState> {
        let p = s.position;
        if p <= self.frozen {
            return None;
        }
        let mut marks = self.marks.clone();
        marks[p - 1].was_active = true;
        let frozen;
        if s.rule.is_insertion() {
            // Eager: every deletable letter left of the actor must stay.
            for q in 1..p {
                let (b, a) = (self.word[q - 1], self.word[q]);
                if g.has_deletion(a, b) {
                    marks[q - 1].keep = true;
                }
            }
            marks.insert(
                p - 1,
                Mark {
                    inserted: true,
                    was_active: false,
                    keep: false,
                },
            );
            frozen = p - 1;
        } else {
            let victim = marks[p - 2];
            if victim.keep || (victim.inserted && !victim.was_active) {
                return None;
            }
            marks.remove(p - 2);
            frozen = p - 2;
        }
        Some(GreedyState {
            word: apply_rule(&self.word, s).expect("enabled step applies"),
            marks,
            frozen,
        })
    }
}

/// At-most reachability exploring only derivations that can still be
/// extended to greedy ones. The greedy equivalent of a derivation is never
/// longer but may pass through longer words, so under a width bound this can
/// miss targets that [`bounded_reach`] finds.
pub fn greedy_reach(g: &Grammar, from: &Word, to: &Word, b: &SearchBounds) -> Result<SearchResult, ReachError> {
    if b.exact {
        return Err(ReachError::ExactGreedy);
    }
    let mut stats = SearchStats::default();
    if from.len() > b.max_word_len || to.len() > b.max_word_len {
        return Ok(SearchResult { verdict: Verdict::NotFound, stats });
    }
    let undeletable = g.undeletable();
    let start = GreedyState {
        word: from.clone(),
        marks: vec![
            Mark {
                inserted: false,
                was_active: false,
                keep: false,
            };
            from.len()
        ],
        frozen: 0,
    };
    let mut parent: HashMap<GreedyState, Option<(GreedyState, Step)>> = HashMap::new();
    parent.insert(start.clone(), None);
    let mut frontier = vec![start];
    let mut depth = 0;
    loop {
        stats.max_frontier = stats.max_frontier.max(frontier.len());
        if let Some(st) = frontier.iter().find(|st| &st.word == to) {
            let mut steps = Vec::new();
            let mut cur = st.clone();
            while let Some(Some((prev, s))) = parent.get(&cur) {
                steps.push(*s);
                cur = prev.clone();
            }
            steps.reverse();
            return Ok(SearchResult {
                verdict: Verdict::Found(Derivation::new(from.clone(), steps)),
                stats,
            });
        }
        if depth == b.max_depth || frontier.is_empty() {
            return Ok(SearchResult { verdict: Verdict::NotFound, stats });
        }
        let remaining = b.max_depth - depth - 1;
        let mut next = Vec::new();
        for st in &frontier {
            stats.nodes_expanded += 1;
            if stats.nodes_expanded > b.budget {
                return Ok(SearchResult { verdict: Verdict::BudgetExceeded, stats });
            }
            for s in g.enabled_steps(&st.word) {
                if s.rule.is_insertion() && st.word.len() >= b.max_word_len {
                    continue;
                }
                let Some(n) = st.step(g, &s) else { continue };
                if !within_reach(&n.word, to, remaining, &undeletable) {
                    continue;
                }
                if parent.contains_key(&n) {
                    stats.dedup_hits += 1;
                    continue;
                }
                parent.insert(n.clone(), Some((st.clone(), s)));
                next.push(n);
            }
        }
        frontier = next;
        depth += 1;
    }
}

/// Every word reachable from `from` by a derivation that can still be
/// extended to a greedy one, with the least step count. Since every
/// derivation has a greedy equivalent, without bounds this is the reachable
/// set; under a width bound it may be smaller than [`oracle_enumerate`].
/// Stops early, returning `None`, once `budget` states have been expanded.
pub fn greedy_enumerate(g: &Grammar, from: &Word, b: &SearchBounds) -> Option<HashMap<Word, usize>> {
    let mut reached: HashMap<Word, usize> = HashMap::new();
    if from.len() > b.max_word_len {
        return Some(reached);
    }
    let start = GreedyState {
        word: from.clone(),
        marks: vec![
            Mark {
                inserted: false,
                was_active: false,
                keep: false,
            };
            from.len()
        ],
        frozen: 0,
    };
    reached.insert(from.clone(), 0);
    let mut seen: HashSet<GreedyState> = HashSet::new();
    seen.insert(start.clone());
    let mut frontier = vec![start];
    let mut expanded: u64 = 0;
    for depth in 1..=b.max_depth {
        if frontier.is_empty() {
            break;
        }
        expanded += frontier.len() as u64;
        if expanded > b.budget {
            return None;
        }
        let next_states: Vec<Vec<GreedyState>> = frontier
            .par_iter()
            .map(|st| {
                g.enabled_steps(&st.word)
                    .into_iter()
                    .filter(|s| s.rule.is_deletion() || st.word.len() < b.max_word_len)
                    .filter_map(|s| st.step(g, &s))
                    .collect()
            })
            .collect();
        let mut next = Vec::new();
        for n in next_states.into_iter().flatten() {
            if seen.contains(&n) {
                continue;
            }
            reached.entry(n.word.clone()).or_insert(depth);
            seen.insert(n.clone());
            next.push(n);
        }
        frontier = next;
    }
    Some(reached)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::tests::g0;
    use crate::grammar::Rule;

    fn w(s: &str) -> Word {
        Word::parse(s).unwrap()
    }

    #[test]
    fn oracle_example() {
        let g = g0();
        let r = oracle_enumerate(&g, &w("a g"), &SearchBounds::at_most(2, 4));
        let expect: HashMap<Word, usize> = [
            (w("a g"), 0),
            (w("a c g"), 1),
            (w("c g"), 2),
            (w("a c c g"), 2),
        ]
        .into();
        assert_eq!(r, expect);
        let r = oracle_enumerate(&g, &w("a g"), &SearchBounds::at_most(0, 4));
        assert_eq!(r.len(), 1);
    }

    #[test]
    fn at_most_and_exact() {
        let g = g0();
        let r = bounded_reach(&g, &w("a g"), &w("c g"), &SearchBounds::at_most(2, 4));
        let d = r.found().unwrap();
        assert_eq!(
            d.steps,
            vec![Step::new(Rule::ins("g", "c"), 2), Step::new(Rule::del("c", "a"), 2)]
        );
        let r = bounded_reach(&g, &w("a g"), &w("c g"), &SearchBounds::exactly(3, 4));
        assert_eq!(r.verdict, Verdict::NotFound);
        let r = bounded_reach(&g, &w("a g"), &w("c c g"), &SearchBounds::exactly(3, 4));
        assert_eq!(r.found().unwrap().len(), 3);
        let r = bounded_reach(&g, &w("a g"), &w("a g"), &SearchBounds::at_most(0, 4));
        assert_eq!(r.found().unwrap().len(), 0);
    }

    #[test]
    fn greedy_rejects_exact() {
        let g = g0();
        assert_eq!(
            greedy_reach(&g, &w("a g"), &w("c g"), &SearchBounds::exactly(2, 4)),
            Err(ReachError::ExactGreedy)
        );
        let r = greedy_reach(&g, &w("a g"), &w("c g"), &SearchBounds::at_most(2, 4)).unwrap();
        assert_eq!(r.found().unwrap().len(), 2);
    }

    #[test]
    fn budget_is_a_verdict() {
        let g = g0();
        let b = SearchBounds::at_most(6, 8).with_budget(1);
        let r = bounded_reach(&g, &w("a a g"), &w("c g"), &b);
        assert_eq!(r.verdict, Verdict::BudgetExceeded);
    }
}
