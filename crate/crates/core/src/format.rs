//! Line-oriented text formats for grammars, transformers and derivations.
//!
//! Grammar files:
//!
//! ```text
//! # comment
//! final g
//! symbols x y          # optional pre-declarations
//! insert g c           # g inserts c to its left
//! delete c a           # c deletes a to its left
//! inputs a             # transformer headers (optional)
//! temps
//! outputs c
//! anchors b1 b2        # anchored transformers (optional)
//! ```
//!
//! Derivation files start with `from <word>` followed by one
//! `ins <actor> <patient> @ <pos>` or `del <actor> <patient> @ <pos>` per step.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::error::FormatError;
use crate::grammar::{Grammar, Rule, RuleKind, Step};
use crate::symbol::Symbol;
use crate::word::Word;

/// Format version tag reported by `lgr --version`.
pub const FORMAT_VERSION: &str = "lgr-format/1";

/// Everything a grammar file can declare.
#[derive(Clone, Debug)]
pub struct GrammarFile {
    pub grammar: Grammar,
    pub inputs: Option<BTreeSet<Symbol>>,
    pub temps: Option<BTreeSet<Symbol>>,
    pub outputs: Option<BTreeSet<Symbol>>,
    pub anchors: Option<(Symbol, Symbol)>,
    /// `# meta:` comment lines, without the prefix.
    pub meta: Vec<String>,
}

impl GrammarFile {
    pub fn plain(grammar: Grammar) -> GrammarFile {
        GrammarFile {
            grammar,
            inputs: None,
            temps: None,
            outputs: None,
            anchors: None,
            meta: Vec::new(),
        }
    }

    pub fn has_transformer_header(&self) -> bool {
        self.inputs.is_some() || self.temps.is_some() || self.outputs.is_some()
    }
}

struct Token<'a> {
    text: &'a str,
    column: usize,
}

fn tokenize(line: &str) -> Vec<Token<'_>> {
    let content = match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    };
    let mut out = Vec::new();
    let mut start: Option<usize> = None;
    for (i, c) in content.char_indices() {
        if c.is_whitespace() {
            if let Some(s) = start.take() {
                out.push(Token {
                    text: &content[s..i],
                    column: content[..s].chars().count() + 1,
                });
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push(Token {
            text: &content[s..],
            column: content[..s].chars().count() + 1,
        });
    }
    out
}

fn symbol_at(tok: &Token<'_>, line: usize) -> Result<Symbol, FormatError> {
    Symbol::parse(tok.text).map_err(|_| FormatError::Syntax {
        line,
        column: tok.column,
        message: format!("illegal symbol name {:?}", tok.text),
    })
}

fn syntax(line: usize, column: usize, message: impl Into<String>) -> FormatError {
    FormatError::Syntax {
        line,
        column,
        message: message.into(),
    }
}

/// Parses a grammar file, ignoring any transformer headers.
pub fn parse_grammar(text: &str) -> Result<Grammar, FormatError> {
    Ok(parse_grammar_file(text)?.grammar)
}

pub fn parse_grammar_file(text: &str) -> Result<GrammarFile, FormatError> {
    let mut final_sym: Option<(Symbol, usize)> = None;
    let mut declared: Vec<(Symbol, usize)> = Vec::new();
    let mut rules: Vec<(Rule, usize)> = Vec::new();
    let mut headers: [Option<(Vec<Symbol>, usize)>; 3] = [None, None, None];
    let mut anchors: Option<(Symbol, Symbol, usize)> = None;
    let mut meta = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        if let Some(rest) = raw.trim_start().strip_prefix("# meta:") {
            meta.push(rest.trim().to_string());
        }
        let toks = tokenize(raw);
        let Some(head) = toks.first() else {
            continue;
        };
        let end_col = raw.chars().count() + 1;
        match head.text {
            "final" => {
                if toks.len() != 2 {
                    return Err(syntax(line, head.column, "expected `final <name>`"));
                }
                if final_sym.is_some() {
                    return Err(FormatError::DuplicateFinal { line });
                }
                final_sym = Some((symbol_at(&toks[1], line)?, line));
            }
            "insert" | "delete" => {
                if toks.len() != 3 {
                    let col = toks.get(3).map_or(end_col, |t| t.column);
                    return Err(syntax(
                        line,
                        col,
                        format!("expected `{} <actor> <patient>`", head.text),
                    ));
                }
                let actor = symbol_at(&toks[1], line)?;
                let patient = symbol_at(&toks[2], line)?;
                let rule = if head.text == "insert" {
                    Rule::insert(actor, patient)
                } else {
                    Rule::delete(actor, patient)
                };
                rules.push((rule, line));
            }
            "symbols" => {
                for t in &toks[1..] {
                    declared.push((symbol_at(t, line)?, line));
                }
            }
            "inputs" | "temps" | "outputs" => {
                let slot = match head.text {
                    "inputs" => 0,
                    "temps" => 1,
                    _ => 2,
                };
                let syms = toks[1..]
                    .iter()
                    .map(|t| symbol_at(t, line))
                    .collect::<Result<Vec<_>, _>>()?;
                match &mut headers[slot] {
                    Some((v, _)) => v.extend(syms),
                    None => headers[slot] = Some((syms, line)),
                }
            }
            "anchors" => {
                if toks.len() != 3 {
                    return Err(syntax(line, head.column, "expected `anchors <start> <end>`"));
                }
                if anchors.is_some() {
                    return Err(syntax(line, head.column, "duplicate anchors declaration"));
                }
                anchors = Some((symbol_at(&toks[1], line)?, symbol_at(&toks[2], line)?, line));
            }
            other => {
                return Err(syntax(line, head.column, format!("unknown directive {other:?}")));
            }
        }
    }

    let (g, _) = final_sym.ok_or(FormatError::MissingFinal)?;
    let mut alphabet: BTreeSet<Symbol> = BTreeSet::new();
    for &(s, line) in &declared {
        if s == g {
            return Err(syntax(line, 1, "final symbol redeclared by `symbols`"));
        }
        alphabet.insert(s);
    }
    for &(r, line) in &rules {
        if r.patient == g {
            return Err(FormatError::AxiomPatient { line });
        }
        for s in [r.actor, r.patient] {
            if s != g {
                alphabet.insert(s);
            }
        }
    }
    let mut sets: [Option<BTreeSet<Symbol>>; 3] = [None, None, None];
    for (slot, h) in headers.into_iter().enumerate() {
        if let Some((syms, line)) = h {
            for s in &syms {
                if !alphabet.contains(s) {
                    return Err(FormatError::UnknownSymbol {
                        line,
                        name: s.name().to_string(),
                    });
                }
            }
            sets[slot] = Some(syms.into_iter().collect());
        }
    }
    let anchors = match anchors {
        Some((a, b, line)) => {
            for s in [a, b] {
                if !alphabet.contains(&s) {
                    return Err(FormatError::UnknownSymbol {
                        line,
                        name: s.name().to_string(),
                    });
                }
            }
            Some((a, b))
        }
        None => None,
    };
    let grammar = Grammar::new(alphabet, g, rules.into_iter().map(|(r, _)| r))?;
    let [inputs, temps, outputs] = sets;
    Ok(GrammarFile {
        grammar,
        inputs,
        temps,
        outputs,
        anchors,
        meta,
    })
}

fn join(set: &BTreeSet<Symbol>) -> String {
    set.iter().map(|s| s.name()).collect::<Vec<_>>().join(" ")
}

/// Renders a grammar file. Output is deterministic and parses back to the same file.
pub fn write_grammar_file(file: &GrammarFile) -> String {
    let g = &file.grammar;
    let mut out = String::new();
    for m in &file.meta {
        let _ = writeln!(out, "# meta: {m}");
    }
    let _ = writeln!(out, "final {}", g.final_symbol());
    if !g.alphabet().is_empty() {
        let _ = writeln!(out, "symbols {}", join(g.alphabet()));
    }
    for (label, set) in [
        ("inputs", &file.inputs),
        ("temps", &file.temps),
        ("outputs", &file.outputs),
    ] {
        if let Some(s) = set {
            if s.is_empty() {
                let _ = writeln!(out, "{label}");
            } else {
                let _ = writeln!(out, "{label} {}", join(s));
            }
        }
    }
    if let Some((a, b)) = file.anchors {
        let _ = writeln!(out, "anchors {a} {b}");
    }
    for kind in [RuleKind::Insertion, RuleKind::Deletion] {
        for r in g.rules().iter().filter(|r| r.kind == kind) {
            let tag = if kind == RuleKind::Insertion { "insert" } else { "delete" };
            let _ = writeln!(out, "{tag} {} {}", r.actor, r.patient);
        }
    }
    out
}

pub fn write_grammar(g: &Grammar) -> String {
    write_grammar_file(&GrammarFile::plain(g.clone()))
}

/// A derivation as written in a file: the initial word and its steps.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DerivationText {
    pub initial: Word,
    pub steps: Vec<Step>,
}

pub fn parse_derivation(text: &str) -> Result<DerivationText, FormatError> {
    let mut initial: Option<Word> = None;
    let mut steps = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let toks = tokenize(raw);
        let Some(head) = toks.first() else {
            continue;
        };
        match head.text {
            "from" => {
                if initial.is_some() {
                    return Err(syntax(line, head.column, "duplicate `from` line"));
                }
                let mut w = Vec::new();
                for t in &toks[1..] {
                    if t.text == "-" || t.text == "ε" {
                        continue;
                    }
                    w.push(symbol_at(t, line)?);
                }
                initial = Some(Word(w));
            }
            "ins" | "del" => {
                if initial.is_none() {
                    return Err(syntax(line, head.column, "step before `from` line"));
                }
                if toks.len() != 5 || toks[3].text != "@" {
                    return Err(syntax(
                        line,
                        head.column,
                        format!("expected `{} <actor> <patient> @ <pos>`", head.text),
                    ));
                }
                let actor = symbol_at(&toks[1], line)?;
                let patient = symbol_at(&toks[2], line)?;
                let position: usize = toks[4]
                    .text
                    .parse()
                    .map_err(|_| syntax(line, toks[4].column, "position must be a positive integer"))?;
                if position == 0 {
                    return Err(syntax(line, toks[4].column, "positions are 1-based"));
                }
                let rule = if head.text == "ins" {
                    Rule::insert(actor, patient)
                } else {
                    Rule::delete(actor, patient)
                };
                steps.push(Step::new(rule, position));
            }
            other => {
                return Err(syntax(line, head.column, format!("unknown directive {other:?}")));
            }
        }
    }
    let initial = initial.ok_or_else(|| syntax(1, 1, "missing `from` line"))?;
    Ok(DerivationText { initial, steps })
}

pub fn write_derivation(initial: &[Symbol], steps: &[Step]) -> String {
    let mut out = String::new();
    let w = Word(initial.to_vec());
    let _ = writeln!(out, "from {}", w.to_tsv());
    for s in steps {
        let _ = writeln!(out, "{s}");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_example_grammar() {
        let g = parse_grammar("final g\ninsert g c\ndelete c a").unwrap();
        assert_eq!(g.final_symbol(), Symbol::new("g"));
        let alpha: BTreeSet<Symbol> = [Symbol::new("a"), Symbol::new("c")].into();
        assert_eq!(g.alphabet(), &alpha);
        assert_eq!(g.rules().len(), 2);
        assert!(g.contains_rule(&Rule::ins("g", "c")));
        assert!(g.contains_rule(&Rule::del("c", "a")));
    }

    #[test]
    fn declaration_order_is_irrelevant() {
        let a = parse_grammar("delete c a\ninsert g c\nfinal g").unwrap();
        let b = parse_grammar("final g\ninsert g c\ndelete c a").unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn axiom_patient_is_an_error() {
        let e = parse_grammar("final g\ninsert g g").unwrap_err();
        assert_eq!(e, FormatError::AxiomPatient { line: 2 });
        assert!(e.to_string().contains("rule touches axiom as patient"));
    }

    #[test]
    fn duplicate_final() {
        let e = parse_grammar("final g\nfinal h").unwrap_err();
        assert_eq!(e, FormatError::DuplicateFinal { line: 2 });
    }

    #[test]
    fn syntax_errors_carry_position() {
        let e = parse_grammar("final g\ninsert g c d").unwrap_err();
        assert!(matches!(e, FormatError::Syntax { line: 2, column: 12, .. }), "{e:?}");
        let e = parse_grammar("final g\n  bogus x").unwrap_err();
        assert!(matches!(e, FormatError::Syntax { line: 2, column: 3, .. }), "{e:?}");
    }

    #[test]
    fn unknown_header_symbol() {
        let e = parse_grammar_file("final g\ninsert g c\ninputs a").unwrap_err();
        assert!(matches!(e, FormatError::UnknownSymbol { line: 3, .. }));
    }

    #[test]
    fn comments_and_blank_lines() {
        let g = parse_grammar("# hello\n\nfinal g # axiom\ninsert g c # rule\n").unwrap();
        assert_eq!(g.rules().len(), 1);
    }

    #[test]
    fn derivation_round_trip() {
        let text = "from a g\nins g c @ 2\ndel c a @ 2\n";
        let d = parse_derivation(text).unwrap();
        assert_eq!(d.steps.len(), 2);
        assert_eq!(write_derivation(&d.initial, &d.steps), text);
    }
}
