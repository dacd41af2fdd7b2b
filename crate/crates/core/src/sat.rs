//! The reduction from 3SAT to reachability in acyclic leftist grammars.
//!
//! Clause `i` and level `j` give four symbols `T<i>.<j>`, `U<i>.<j>`,
//! `T'<i>.<j>`, `U'<i>.<j>`. Level `j` picks a value for `x_j` by choosing
//! the unprimed (true) or primed (false) copy.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::Serialize;

use crate::derivation::Derivation;
use crate::error::SatError;
use crate::grammar::{Grammar, Rule, Step};
use crate::reach::{bounded_reach, greedy_reach, SearchBounds, SearchResult};
use crate::simple::{union, SimpleTransformer};
use crate::symbol::Symbol;
use crate::transform::{compose, Transformer};
use crate::word::Word;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Literal {
    /// 1-based variable index.
    pub var: usize,
    pub positive: bool,
}

impl Literal {
    pub fn holds(&self, v: &Valuation) -> bool {
        v.0[self.var - 1] == self.positive
    }

    fn to_dimacs(self) -> i64 {
        if self.positive {
            self.var as i64
        } else {
            -(self.var as i64)
        }
    }
}

/// A CNF formula as read from DIMACS: clauses of arbitrary width.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RawCnf {
    pub num_vars: usize,
    pub clauses: Vec<Vec<Literal>>,
}

/// A formula whose clauses have exactly three literals.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CnfFormula {
    pub num_vars: usize,
    pub clauses: Vec<[Literal; 3]>,
}

/// A total valuation `θ`; `θ(x_j)` is entry `j - 1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Valuation(pub Vec<bool>);

impl fmt::Display for Valuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let lits: Vec<String> = self
            .0
            .iter()
            .enumerate()
            .map(|(i, &b)| if b { format!("{}", i + 1) } else { format!("-{}", i + 1) })
            .collect();
        f.write_str(&lits.join(" "))
    }
}

pub fn parse_dimacs(text: &str) -> Result<RawCnf, SatError> {
    let mut header: Option<(usize, usize)> = None;
    let mut clauses = Vec::new();
    let mut current: Vec<Literal> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let t = raw.trim();
        if t.is_empty() || t.starts_with('c') {
            continue;
        }
        if t.starts_with('%') {
            break;
        }
        if t.starts_with('p') {
            let parts: Vec<&str> = t.split_whitespace().collect();
            if header.is_some() || parts.len() != 4 || parts[1] != "cnf" {
                return Err(SatError::Dimacs { line, message: "expected `p cnf <vars> <clauses>`".into() });
            }
            let n = parts[2].parse().map_err(|_| SatError::Dimacs { line, message: "bad variable count".into() })?;
            let m = parts[3].parse().map_err(|_| SatError::Dimacs { line, message: "bad clause count".into() })?;
            header = Some((n, m));
            continue;
        }
        let Some((n, _)) = header else {
            return Err(SatError::Dimacs { line, message: "clause before header".into() });
        };
        for tok in t.split_whitespace() {
            let v: i64 = tok
                .parse()
                .map_err(|_| SatError::Dimacs { line, message: format!("bad literal {tok:?}") })?;
            if v == 0 {
                clauses.push(std::mem::take(&mut current));
                continue;
            }
            let var = v.unsigned_abs() as usize;
            if var > n {
                return Err(SatError::Dimacs { line, message: format!("variable {var} exceeds declared {n}") });
            }
            current.push(Literal { var, positive: v > 0 });
        }
    }
    let Some((n, m)) = header else {
        return Err(SatError::Dimacs { line: 1, message: "missing `p cnf` header".into() });
    };
    if !current.is_empty() {
        clauses.push(current);
    }
    if clauses.len() != m {
        return Err(SatError::Dimacs {
            line: text.lines().count(),
            message: format!("header declares {m} clauses, found {}", clauses.len()),
        });
    }
    Ok(RawCnf { num_vars: n, clauses })
}

pub fn write_dimacs(f: &RawCnf) -> String {
    let mut out = format!("p cnf {} {}\n", f.num_vars, f.clauses.len());
    for c in &f.clauses {
        for l in c {
            out.push_str(&format!("{} ", l.to_dimacs()));
        }
        out.push_str("0\n");
    }
    out
}

impl RawCnf {
    pub fn satisfied_by(&self, v: &Valuation) -> bool {
        self.clauses.iter().all(|c| c.iter().any(|l| l.holds(v)))
    }

    /// Truth-table search; the first satisfying valuation in binary order
    /// with `x₁` as the most significant bit and true before false.
    pub fn brute_force(&self) -> Option<Valuation> {
        all_valuations(self.num_vars).find(|v| self.satisfied_by(v))
    }
}

fn all_valuations(n: usize) -> impl Iterator<Item = Valuation> {
    (0..1u64 << n).map(move |bits| {
        Valuation((0..n).map(|i| (bits >> (n - 1 - i)) & 1 == 0).collect())
    })
}

impl CnfFormula {
    pub fn m(&self) -> usize {
        self.clauses.len()
    }

    pub fn n(&self) -> usize {
        self.num_vars
    }

    pub fn clause_holds(&self, i: usize, v: &Valuation) -> bool {
        self.clauses[i].iter().any(|l| l.holds(v))
    }

    pub fn satisfied_by(&self, v: &Valuation) -> bool {
        v.0.len() == self.num_vars && (0..self.m()).all(|i| self.clause_holds(i, v))
    }

    pub fn brute_force(&self) -> Option<Valuation> {
        all_valuations(self.num_vars).find(|v| self.satisfied_by(v))
    }

    pub fn to_raw(&self) -> RawCnf {
        RawCnf {
            num_vars: self.num_vars,
            clauses: self.clauses.iter().map(|c| c.to_vec()).collect(),
        }
    }

    /// Does a prefix valuation of `x₁..x_j` already satisfy clause `i`?
    fn prefix_holds(&self, i: usize, v: &Valuation, j: usize) -> bool {
        self.clauses[i].iter().any(|l| l.var <= j && l.holds(v))
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct PreprocessReport {
    pub duplicate_literals_removed: usize,
    pub tautologies_dropped: Vec<usize>,
    pub padded: Vec<usize>,
    pub forcing_variable: Option<usize>,
    pub empty_clause: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Preprocessed {
    Formula(CnfFormula, PreprocessReport),
    /// An empty clause makes the formula trivially unsatisfiable.
    Unsat(PreprocessReport),
}

/// Removes duplicate literals and tautologies, pads clauses to width three
/// by repeating their last literal, and appends a fresh variable `x_{n+1}`
/// with the clause `(x_{n+1} ∨ x_{n+1} ∨ x_{n+1})`. Clause indices in the
/// report are 1-based positions in the input.
pub fn preprocess(raw: &RawCnf) -> Result<Preprocessed, SatError> {
    let mut report = PreprocessReport::default();
    let mut clauses = Vec::new();
    for (k, c) in raw.clauses.iter().enumerate() {
        let mut lits: Vec<Literal> = Vec::new();
        for &l in c {
            if lits.contains(&l) {
                report.duplicate_literals_removed += 1;
            } else {
                lits.push(l);
            }
        }
        if lits.is_empty() {
            report.empty_clause = Some(k + 1);
            return Ok(Preprocessed::Unsat(report));
        }
        if lits.iter().any(|l| lits.contains(&Literal { var: l.var, positive: !l.positive })) {
            report.tautologies_dropped.push(k + 1);
            continue;
        }
        if lits.len() > 3 {
            return Err(SatError::ClauseTooWide { clause: k + 1, width: lits.len() });
        }
        if lits.len() < 3 {
            report.padded.push(k + 1);
        }
        let last = *lits.last().expect("nonempty");
        while lits.len() < 3 {
            lits.push(last);
        }
        clauses.push([lits[0], lits[1], lits[2]]);
    }
    let forcing = raw.num_vars + 1;
    let lit = Literal { var: forcing, positive: true };
    clauses.push([lit; 3]);
    report.forcing_variable = Some(forcing);
    Ok(Preprocessed::Formula(CnfFormula { num_vars: forcing, clauses }, report))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Letter {
    T,
    U,
}

/// One of the `4·m·(n+1)` symbols of the reduction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct LevelSymbol {
    pub letter: Letter,
    pub primed: bool,
    /// Clause index, 1-based.
    pub clause: usize,
    pub level: usize,
}

impl LevelSymbol {
    pub fn new(letter: Letter, primed: bool, clause: usize, level: usize) -> LevelSymbol {
        LevelSymbol { letter, primed, clause, level }
    }

    pub fn symbol(&self) -> Symbol {
        Symbol::new(&self.to_string())
    }

    pub fn parse(name: &str) -> Option<LevelSymbol> {
        let (letter, rest) = match name.as_bytes().first()? {
            b'T' => (Letter::T, &name[1..]),
            b'U' => (Letter::U, &name[1..]),
            _ => return None,
        };
        let (primed, rest) = match rest.strip_prefix('\'') {
            Some(r) => (true, r),
            None => (false, rest),
        };
        let (i, j) = rest.split_once('.')?;
        let clause: usize = i.parse().ok()?;
        let level: usize = j.parse().ok()?;
        let s = LevelSymbol::new(letter, primed, clause, level);
        (s.to_string() == name).then_some(s)
    }
}

impl fmt::Display for LevelSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let l = match self.letter {
            Letter::T => "T",
            Letter::U => "U",
        };
        let p = if self.primed { "'" } else { "" };
        write!(f, "{l}{p}{}.{}", self.clause, self.level)
    }
}

fn sym(letter: Letter, primed: bool, i: usize, j: usize) -> Symbol {
    LevelSymbol::new(letter, primed, i, j).symbol()
}

fn final_symbol() -> Symbol {
    Symbol::new("g")
}

/// All four copies of level `j`.
pub fn level_alphabet(m: usize, j: usize) -> BTreeSet<Symbol> {
    let mut out = BTreeSet::new();
    for i in 1..=m {
        for letter in [Letter::T, Letter::U] {
            for primed in [false, true] {
                out.insert(sym(letter, primed, i, j));
            }
        }
    }
    out
}

/// `G_j^⊤` (`value = true`, unprimed outputs) or `G_j^⊥` (primed outputs).
pub fn build_level_transformer(f: &CnfFormula, j: usize, value: bool) -> Result<SimpleTransformer, SatError> {
    let n = f.n();
    if j == 0 || j > n {
        return Err(SatError::LevelOutOfRange { level: j, max: n });
    }
    let m = f.m();
    let primed = !value;
    let out = |l: Letter, i: usize| sym(l, primed, i, j);
    let inp = |l: Letter, p: bool, i: usize| sym(l, p, i, j - 1);
    let letters = [Letter::T, Letter::U];
    let mut rules = Vec::new();
    for l in letters {
        rules.push(Rule::insert(final_symbol(), out(l, m)));
    }
    for i in 1..m {
        for hi in letters {
            for lo in letters {
                rules.push(Rule::insert(out(hi, i + 1), out(lo, i)));
            }
        }
    }
    let literal = Literal { var: j, positive: value };
    for i in 1..=m {
        for l in letters {
            for p in [false, true] {
                rules.push(Rule::delete(out(l, i), inp(l, p, i)));
            }
        }
        if f.clauses[i - 1].contains(&literal) {
            for p in [false, true] {
                rules.push(Rule::delete(out(Letter::T, i), inp(Letter::U, p, i)));
            }
        }
    }
    let inputs = level_alphabet(m, j - 1);
    let outputs: BTreeSet<Symbol> = (1..=m).flat_map(|i| letters.map(|l| out(l, i))).collect();
    let alphabet = inputs.union(&outputs).copied().collect();
    let grammar = Grammar::new(alphabet, final_symbol(), rules)?;
    Ok(SimpleTransformer::new(Transformer::new(grammar, inputs, BTreeSet::new(), outputs)?)?)
}

/// `G_Φ = (G₁^⊤ + G₁^⊥) · … · (G_n^⊤ + G_n^⊥)`.
pub fn build_phi_grammar(f: &CnfFormula) -> Result<Transformer, SatError> {
    let mut acc: Option<Transformer> = None;
    for j in 1..=f.n() {
        let level = union(&build_level_transformer(f, j, true)?, &build_level_transformer(f, j, false)?)?;
        acc = Some(match acc {
            None => level.base().clone(),
            Some(t) => compose(&t, level.base())?.transformer,
        });
    }
    acc.ok_or(SatError::LevelOutOfRange { level: 1, max: 0 })
}

/// `U₁⁰ … U_m⁰ · g`.
pub fn start_word(f: &CnfFormula) -> Word {
    (1..=f.m())
        .map(|i| sym(Letter::U, false, i, 0))
        .collect::<Word>()
        .with_final(final_symbol())
}

/// `T₁ⁿ … T_mⁿ · g`.
pub fn target_word(f: &CnfFormula) -> Word {
    (1..=f.m())
        .map(|i| sym(Letter::T, false, i, f.n()))
        .collect::<Word>()
        .with_final(final_symbol())
}

/// The `j`-clean word coding `θ_j` in the copy selected by `θ(x_j)`.
pub fn coding_word(f: &CnfFormula, theta: &Valuation, j: usize) -> Word {
    let primed = j > 0 && !theta.0[j - 1];
    (1..=f.m())
        .map(|i| {
            let letter = if f.prefix_holds(i - 1, theta, j) { Letter::T } else { Letter::U };
            sym(letter, primed, i, j)
        })
        .collect()
}

/// The `2·m·n`-step derivation from [`start_word`] to [`target_word`]
/// obtained by chaining the level witnesses with `h = Id`.
pub fn witness_derivation(f: &CnfFormula, theta: &Valuation) -> Result<Derivation, SatError> {
    if theta.0.len() != f.n() {
        return Err(SatError::ValuationSize { expected: f.n(), found: theta.0.len() });
    }
    if !f.satisfied_by(theta) {
        return Err(SatError::Unsatisfied);
    }
    let m = f.m();
    let mut steps = Vec::with_capacity(2 * m * f.n());
    for j in 1..=f.n() {
        let prev = coding_word(f, theta, j - 1);
        let next = coding_word(f, theta, j);
        for i in (1..=m).rev() {
            let actor = if i == m { final_symbol() } else { next[i] };
            steps.push(Step::new(Rule::insert(actor, next[i - 1]), i + 1));
            steps.push(Step::new(Rule::delete(next[i - 1], prev[i - 1]), i + 1));
        }
    }
    Ok(Derivation::new(start_word(f), steps))
}

/// Reads a valuation off a derivation from [`start_word`] to
/// [`target_word`]: `x_j` is true when level-`j` symbols appear unprimed.
/// Levels where both or neither copy appear are resolved by trying the
/// possibilities, true first. The result is checked against the formula.
pub fn decode_assignment(f: &CnfFormula, g: &Grammar, d: &Derivation) -> Result<Valuation, SatError> {
    let words = d.replay(g)?;
    if words.first() != Some(&start_word(f)) || words.last() != Some(&target_word(f)) {
        return Err(SatError::Endpoints);
    }
    let n = f.n();
    let mut seen = vec![[false, false]; n + 1];
    let mut cache: HashMap<Symbol, Option<LevelSymbol>> = HashMap::new();
    for w in &words {
        for &s in w.iter() {
            let ls = *cache.entry(s).or_insert_with(|| LevelSymbol::parse(s.name()));
            if let Some(ls) = ls {
                if ls.level <= n {
                    seen[ls.level][ls.primed as usize] = true;
                }
            }
        }
    }
    let choices: Vec<Vec<bool>> = (1..=n)
        .map(|j| match seen[j] {
            [true, false] => vec![true],
            [false, true] => vec![false],
            _ => vec![true, false],
        })
        .collect();
    let mut idx = vec![0usize; n];
    loop {
        let theta = Valuation((0..n).map(|j| choices[j][idx[j]]).collect());
        if f.satisfied_by(&theta) {
            return Ok(theta);
        }
        let mut k = n;
        loop {
            if k == 0 {
                return Err(SatError::DecodeFailed);
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < choices[k].len() {
                break;
            }
            idx[k] = 0;
        }
    }
}

/// The width every intermediate word of a level witness stays within.
pub fn witness_width(f: &CnfFormula) -> usize {
    f.m() + 2
}

/// Decides satisfiability through the grammar with the greedy search at
/// depth `2mn` and width `m + 2`.
pub fn solve(f: &CnfFormula, budget: u64) -> Result<(SearchResult, Option<Valuation>), SatError> {
    let t = build_phi_grammar(f)?;
    let b = SearchBounds::at_most(2 * f.m() * f.n(), witness_width(f)).with_budget(budget);
    let r = greedy_reach(t.grammar(), &start_word(f), &target_word(f), &b).expect("at-most mode");
    let theta = match r.found() {
        Some(d) => Some(decode_assignment(f, t.grammar(), d)?),
        None => None,
    };
    Ok((r, theta))
}

/// Runs the three reachability questions of the correctness statement:
/// exact `2mn`, at most `2mn`, and greedy at most `2mn`.
pub fn reach_verdicts(f: &CnfFormula, width: usize, budget: u64) -> Result<[SearchResult; 3], SatError> {
    let t = build_phi_grammar(f)?;
    let g = t.grammar();
    let (from, to) = (start_word(f), target_word(f));
    let d = 2 * f.m() * f.n();
    let exact = bounded_reach(g, &from, &to, &SearchBounds::exactly(d, width).with_budget(budget));
    let at_most = bounded_reach(g, &from, &to, &SearchBounds::at_most(d, width).with_budget(budget));
    let greedy = greedy_reach(g, &from, &to, &SearchBounds::at_most(d, width).with_budget(budget))
        .expect("at-most mode");
    Ok([exact, at_most, greedy])
}

/// The padding symbols `a₁ … a_k` of the μ-minimality gadget.
pub fn padding_symbol(i: usize) -> Symbol {
    Symbol::new(&format!("a{i}"))
}

/// `G′_Φ` and its bypass derivation `π` of length `2m + 2k`, requiring
/// `k > m(n−1)`.
pub fn build_hard_instance(f: &CnfFormula, k: usize) -> Result<(Grammar, Derivation), SatError> {
    let (m, n) = (f.m(), f.n());
    let min = m * n.saturating_sub(1);
    if k <= min {
        return Err(SatError::PaddingTooSmall { k, min });
    }
    let base = build_phi_grammar(f)?;
    let g = base.grammar();
    let a0 = sym(Letter::T, false, 1, n);
    let a = |i: usize| if i == 0 { a0 } else { padding_symbol(i) };
    let mut rules: Vec<Rule> = g.rules().iter().copied().collect();
    for i in 1..=k {
        rules.push(Rule::insert(a(i - 1), a(i)));
        rules.push(Rule::delete(a(i - 1), a(i)));
    }
    for i in 1..=m {
        rules.push(Rule::delete(a(k), sym(Letter::U, false, i, 0)));
    }
    let mut alphabet = g.alphabet().clone();
    alphabet.extend((1..=k).map(padding_symbol));
    let grammar = Grammar::new(alphabet, g.final_symbol(), rules)?;

    let mut steps = Vec::with_capacity(2 * m + 2 * k);
    for i in (1..=m).rev() {
        let actor = if i == m { final_symbol() } else { sym(Letter::T, false, i + 1, n) };
        steps.push(Step::new(Rule::insert(actor, sym(Letter::T, false, i, n)), m + 1));
    }
    for i in 1..=k {
        steps.push(Step::new(Rule::insert(a(i - 1), a(i)), m + 1));
    }
    for i in (1..=m).rev() {
        steps.push(Step::new(Rule::delete(a(k), sym(Letter::U, false, i, 0)), i + 1));
    }
    for i in (1..=k).rev() {
        steps.push(Step::new(Rule::delete(a(i - 1), a(i)), 2));
    }
    Ok((grammar, Derivation::new(start_word(f), steps)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lit(v: i64) -> Literal {
        Literal { var: v.unsigned_abs() as usize, positive: v > 0 }
    }

    fn raw(n: usize, clauses: &[&[i64]]) -> RawCnf {
        RawCnf {
            num_vars: n,
            clauses: clauses.iter().map(|c| c.iter().map(|&v| lit(v)).collect()).collect(),
        }
    }

    fn pre(r: &RawCnf) -> CnfFormula {
        match preprocess(r).unwrap() {
            Preprocessed::Formula(f, _) => f,
            Preprocessed::Unsat(_) => panic!("unexpected empty clause"),
        }
    }

    #[test]
    fn dimacs_round_trip() {
        let text = "c hello\np cnf 3 2\n1 -2 3 0\n2 0\n";
        let r = parse_dimacs(text).unwrap();
        assert_eq!(r, raw(3, &[&[1, -2, 3], &[2]]));
        assert_eq!(parse_dimacs(&write_dimacs(&r)).unwrap(), r);
        assert!(parse_dimacs("p cnf 1 1\n2 0\n").is_err());
        assert!(parse_dimacs("1 0\n").is_err());
    }

    #[test]
    fn preprocess_examples() {
        let r = raw(2, &[&[1, -1, 2], &[2, 2, 2]]);
        let Preprocessed::Formula(f, rep) = preprocess(&r).unwrap() else { panic!() };
        assert_eq!(f.m(), 2);
        assert_eq!(f.n(), 3);
        assert_eq!(rep.tautologies_dropped, vec![1]);
        assert_eq!(r.brute_force().is_some(), f.brute_force().is_some());
        let r = raw(1, &[&[1], &[]]);
        assert!(matches!(preprocess(&r).unwrap(), Preprocessed::Unsat(_)));
        let r = raw(4, &[&[1, 2, 3, 4]]);
        assert!(matches!(preprocess(&r), Err(SatError::ClauseTooWide { .. })));
    }

    #[test]
    fn level_symbols_parse_back() {
        for s in [
            LevelSymbol::new(Letter::T, false, 1, 0),
            LevelSymbol::new(Letter::U, true, 12, 3),
        ] {
            assert_eq!(LevelSymbol::parse(&s.to_string()), Some(s));
        }
        assert_eq!(LevelSymbol::parse("T1"), None);
        assert_eq!(LevelSymbol::parse("a1"), None);
    }

    #[test]
    fn conditional_rules() {
        let f = CnfFormula { num_vars: 1, clauses: vec![[lit(1); 3]] };
        let top = build_level_transformer(&f, 1, true).unwrap();
        assert!(top.grammar().contains_rule(&Rule::delete(sym(Letter::T, false, 1, 1), sym(Letter::U, false, 1, 0))));
        assert!(top.grammar().contains_rule(&Rule::delete(sym(Letter::T, false, 1, 1), sym(Letter::U, true, 1, 0))));
        let bot = build_level_transformer(&f, 1, false).unwrap();
        assert!(!bot
            .grammar()
            .rules()
            .iter()
            .any(|r| r.is_deletion() && LevelSymbol::parse(r.patient.name()).unwrap().letter == Letter::U
                && LevelSymbol::parse(r.actor.name()).unwrap().letter == Letter::T));
        assert!(bot.base().outputs().iter().all(|s| s.name().contains('\'')));
        assert!(build_level_transformer(&f, 2, true).is_err());
    }

    #[test]
    fn phi_grammar_shape() {
        let f = CnfFormula { num_vars: 3, clauses: vec![[lit(1), lit(2), lit(3)], [lit(-1), lit(2), lit(3)]] };
        let t = build_phi_grammar(&f).unwrap();
        assert_eq!(t.grammar().alphabet().len(), 32);
        assert!(t.grammar().is_acyclic());
        assert_eq!(t.inputs(), &level_alphabet(2, 0));
        assert_eq!(t.outputs(), &level_alphabet(2, 3));
        let theta = Valuation(vec![true, true, true]);
        let d = witness_derivation(&f, &theta).unwrap();
        assert_eq!(d.len(), 12);
        assert_eq!(d.final_word(t.grammar()).unwrap(), target_word(&f));
        assert_eq!(decode_assignment(&f, t.grammar(), &d).unwrap(), theta);
    }

    #[test]
    fn solve_small() {
        let f = pre(&raw(1, &[&[1]]));
        let (r, theta) = solve(&f, 1_000_000).unwrap();
        assert!(r.is_found());
        assert!(f.satisfied_by(&theta.unwrap()));
        let f = pre(&raw(1, &[&[1], &[-1]]));
        let (r, theta) = solve(&f, 1_000_000).unwrap();
        assert!(!r.is_found());
        assert!(theta.is_none());
    }

    #[test]
    fn hard_instance_shape() {
        let f = CnfFormula { num_vars: 1, clauses: vec![[lit(1); 3], [lit(-1); 3]] };
        let (g, pi) = build_hard_instance(&f, 1).unwrap();
        assert!(g.is_acyclic());
        assert_eq!(pi.len(), 6);
        assert_eq!(pi.final_word(&g).unwrap(), target_word(&f));
        assert!(matches!(build_hard_instance(&f, 0), Err(SatError::PaddingTooSmall { .. })));
    }
}
