//! The `lgr` command line.
//!
//! Exit codes: 0 success, 64 usage, 65 domain error, 66 file error. `derive`
//! and `cnf solve` use 0/1/2 for found/not found/budget exceeded.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::closure::{build_pipeline, precheck, AnchoredTransformer, Renaming};
use crate::derivation::{Derivation, Minimality};
use crate::format::{
    parse_derivation, parse_grammar_file, write_derivation, write_grammar_file, GrammarFile,
};
use crate::grammar::Grammar;
use crate::reach::{bounded_reach, greedy_reach, SearchBounds, Verdict};
use crate::sat::{self, LevelSymbol, Preprocessed};
use crate::simple::{union, SimpleTransformer};
use crate::transform::{compose, RelationBounds, Transformer};
use crate::word::Word;

pub const EXIT_USAGE: i32 = 64;
pub const EXIT_DOMAIN: i32 = 65;
pub const EXIT_FILE: i32 = 66;

/// Semver followed by the file format tag.
pub const VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), " lgr-format/1");

#[derive(Parser, Debug)]
#[command(name = "lgr", version = VERSION, about = "Leftist grammars and transformers")]
pub struct Cli {
    /// Machine-readable JSON output.
    #[arg(long, global = true)]
    pub json: bool,
    /// Seed for every randomized choice.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads for the searches.
    #[arg(long, global = true, default_value_t = 1)]
    pub threads: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct RelationArgs {
    #[arg(long, default_value_t = 2)]
    pub max_input: usize,
    #[arg(long, default_value_t = 6)]
    pub max_word: usize,
    #[arg(long, default_value_t = 10)]
    pub max_depth: usize,
}

impl RelationArgs {
    fn bounds(&self) -> RelationBounds {
        RelationBounds::new(self.max_input, self.max_word, self.max_depth)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum RelationFormat {
    Text,
    Tsv,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Parse a grammar and report its classification.
    Check { grammar: PathBuf },
    /// Bounded reachability search between two words.
    Derive {
        grammar: PathBuf,
        #[arg(long)]
        from: String,
        #[arg(long)]
        to: String,
        /// Depth bound D.
        #[arg(long)]
        steps: usize,
        /// Look for a derivation of exactly D steps.
        #[arg(long)]
        exact: bool,
        /// Restrict the search to greedy derivations.
        #[arg(long, conflicts_with = "exact")]
        greedy: bool,
        /// Width bound M, final symbol included.
        #[arg(long)]
        max_word: Option<usize>,
        #[arg(long)]
        budget: Option<u64>,
        /// Write the derivation found to this file.
        #[arg(long)]
        emit: Option<PathBuf>,
    },
    /// Replay a derivation and classify it.
    Verify { grammar: PathBuf, derivation: PathBuf },
    /// Write the greedy equivalent of a derivation.
    Normalize {
        grammar: PathBuf,
        derivation: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Decide μ-minimality by search.
    Muminimal {
        grammar: PathBuf,
        derivation: PathBuf,
        #[arg(long, default_value_t = 10_000_000)]
        budget: u64,
    },
    /// Sequential composition of two transformers.
    Compose {
        first: PathBuf,
        second: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Union of two simple transformers.
    Union {
        first: PathBuf,
        second: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Look for a ∇-witness of a simple transformer.
    Nabla {
        grammar: PathBuf,
        #[arg(long)]
        from: String,
        #[arg(long)]
        to: String,
    },
    /// Enumerate the bounded relation of a transformer.
    Relation {
        grammar: PathBuf,
        #[command(flatten)]
        bounds: RelationArgs,
        #[arg(long, value_enum, default_value_t = RelationFormat::Text)]
        format: RelationFormat,
    },
    /// Transitive closure of an anchored transformer.
    Closure {
        grammar: PathBuf,
        /// The renaming of outputs to inputs, as `c1=a1,c2=a2`.
        #[arg(long)]
        map: String,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Build even if the bounded precondition fails.
        #[arg(long)]
        skip_precheck: bool,
        #[command(flatten)]
        bounds: RelationArgs,
    },
    /// The 3SAT reduction.
    #[command(subcommand)]
    Cnf(CnfCommand),
}

#[derive(Subcommand, Debug)]
pub enum CnfCommand {
    /// Build the reduction grammar of a DIMACS formula.
    Compile {
        cnf: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Decide satisfiability through the reduction grammar.
    Solve {
        cnf: PathBuf,
        #[arg(long, default_value_t = 50_000_000)]
        budget: u64,
    },
    /// Build the μ-minimality gadget and its derivation.
    Hard {
        cnf: PathBuf,
        #[arg(short = 'k', long)]
        k: usize,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long)]
        derivation: PathBuf,
    },
}

/// An error carrying its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn file(path: &Path, e: impl std::fmt::Display) -> Failure {
        Failure { code: EXIT_FILE, message: format!("{}: {e}", path.display()) }
    }

    fn domain(e: impl std::fmt::Display) -> Failure {
        Failure { code: EXIT_DOMAIN, message: e.to_string() }
    }

    fn usage(e: impl std::fmt::Display) -> Failure {
        Failure { code: EXIT_USAGE, message: e.to_string() }
    }
}

/// What a command prints and its exit code.
struct Outcome {
    code: i32,
    text: String,
    json: Value,
}

impl Outcome {
    fn ok(text: String, json: Value) -> Outcome {
        Outcome { code: 0, text, json }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::file(path, e))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::file(path, e))
}

fn load_file(path: &Path) -> Result<GrammarFile, Failure> {
    parse_grammar_file(&read(path)?).map_err(|e| Failure::domain(format!("{}: {e}", path.display())))
}

fn load_grammar(path: &Path) -> Result<Grammar, Failure> {
    Ok(load_file(path)?.grammar)
}

fn load_transformer(path: &Path) -> Result<Transformer, Failure> {
    Transformer::from_file(&load_file(path)?).map_err(|e| Failure::domain(format!("{}: {e}", path.display())))
}

fn load_derivation(path: &Path) -> Result<Derivation, Failure> {
    let d = parse_derivation(&read(path)?).map_err(|e| Failure::domain(format!("{}: {e}", path.display())))?;
    Ok(Derivation::new(d.initial, d.steps))
}

fn word(text: &str) -> Result<Word, Failure> {
    Word::parse(text).map_err(Failure::usage)
}

fn emit_text(output: Option<&Path>, text: &str) -> Result<String, Failure> {
    match output {
        Some(p) => {
            write(p, text)?;
            Ok(format!("wrote {}\n", p.display()))
        }
        None => Ok(text.to_string()),
    }
}

fn mark(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

/// Parses `args` (program name first) and runs the command. Returns the exit
/// code; output goes to stdout and stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    if cli.threads > 1 {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global();
    }
    let started = Instant::now();
    match execute(&cli) {
        Ok(out) => {
            if cli.json {
                let report = json!({
                    "command": command_name(&cli.command),
                    "result": out.json,
                    "exit_code": out.code,
                    "seed": cli.seed,
                    "elapsed_ms": started.elapsed().as_millis() as u64,
                });
                println!("{}", serde_json::to_string_pretty(&report).expect("json"));
            } else {
                print!("{}", out.text);
            }
            out.code
        }
        Err(f) => {
            if cli.json {
                let report = json!({
                    "command": command_name(&cli.command),
                    "error": f.message,
                    "exit_code": f.code,
                });
                println!("{}", serde_json::to_string_pretty(&report).expect("json"));
            }
            eprintln!("lgr: {}", f.message);
            f.code
        }
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Check { .. } => "check",
        Command::Derive { .. } => "derive",
        Command::Verify { .. } => "verify",
        Command::Normalize { .. } => "normalize",
        Command::Muminimal { .. } => "muminimal",
        Command::Compose { .. } => "compose",
        Command::Union { .. } => "union",
        Command::Nabla { .. } => "nabla",
        Command::Relation { .. } => "relation",
        Command::Closure { .. } => "closure",
        Command::Cnf(CnfCommand::Compile { .. }) => "cnf compile",
        Command::Cnf(CnfCommand::Solve { .. }) => "cnf solve",
        Command::Cnf(CnfCommand::Hard { .. }) => "cnf hard",
    }
}

fn execute(cli: &Cli) -> Result<Outcome, Failure> {
    match &cli.command {
        Command::Check { grammar } => check(grammar),
        Command::Derive { grammar, from, to, steps, exact, greedy, max_word, budget, emit } => {
            let g = load_grammar(grammar)?;
            let (from, to) = (word(from)?, word(to)?);
            let width = max_word.unwrap_or_else(|| SearchBounds::default_width(&g, &from, &to));
            let mut b = if *exact { SearchBounds::exactly(*steps, width) } else { SearchBounds::at_most(*steps, width) };
            if let Some(n) = budget {
                b = b.with_budget(*n);
            }
            let r = if *greedy {
                greedy_reach(&g, &from, &to, &b).map_err(Failure::usage)?
            } else {
                bounded_reach(&g, &from, &to, &b)
            };
            let (code, text) = match &r.verdict {
                Verdict::Found(d) => {
                    let t = write_derivation(&d.initial, &d.steps);
                    if let Some(p) = emit {
                        write(p, &t)?;
                    }
                    (0, format!("found ({} steps)\n{t}", d.len()))
                }
                Verdict::NotFound => (1, "not found\n".to_string()),
                Verdict::BudgetExceeded => (2, "budget exceeded\n".to_string()),
            };
            let text_form = r.found().map(|d| write_derivation(&d.initial, &d.steps));
            Ok(Outcome {
                code,
                text,
                json: json!({ "bounds": b, "search": r, "derivation_text": text_form }),
            })
        }
        Command::Verify { grammar, derivation } => {
            let g = load_grammar(grammar)?;
            let d = load_derivation(derivation)?;
            let last = d.final_word(&g).map_err(Failure::domain)?;
            let r = d.classify(&g).map_err(Failure::domain)?;
            let text = format!(
                "valid: {} steps, final word {last}\nleftmost: {}\neager: {}\npure: {}\ngreedy: {}\nmeasure: {}\nuseless letters: {}\n",
                d.len(),
                mark(r.leftmost),
                mark(r.eager),
                mark(r.pure),
                mark(r.greedy),
                r.measure,
                r.useless.len(),
            );
            Ok(Outcome::ok(text, json!({ "final": last, "report": r })))
        }
        Command::Normalize { grammar, derivation, output } => {
            let g = load_grammar(grammar)?;
            let d = load_derivation(derivation)?;
            let n = d.greedy_normalize(&g).map_err(Failure::domain)?;
            let t = write_derivation(&n.initial, &n.steps);
            let text = emit_text(output.as_deref(), &t)?;
            Ok(Outcome::ok(text, json!({ "derivation_text": t, "steps": n.len() })))
        }
        Command::Muminimal { grammar, derivation, budget } => {
            let g = load_grammar(grammar)?;
            let d = load_derivation(derivation)?;
            match d.is_mu_minimal(&g, *budget).map_err(Failure::domain)? {
                Minimality::Minimal => Ok(Outcome::ok("minimal\n".into(), json!({ "verdict": "Minimal" }))),
                Minimality::NotMinimal(w) => {
                    let t = write_derivation(&w.initial, &w.steps);
                    Ok(Outcome::ok(
                        format!("not minimal; smaller witness ({} steps):\n{t}", w.len()),
                        json!({ "verdict": "NotMinimal", "witness_text": t, "witness_steps": w.len() }),
                    ))
                }
                Minimality::BudgetExceeded => Ok(Outcome {
                    code: 2,
                    text: "budget exceeded\n".into(),
                    json: json!({ "verdict": "BudgetExceeded" }),
                }),
            }
        }
        Command::Compose { first, second, output } => {
            let t1 = load_transformer(first)?;
            let t2 = load_transformer(second)?;
            let c = compose(&t1, &t2).map_err(Failure::domain)?;
            let mut file = c.transformer.to_file();
            for r in &c.renamed {
                file.meta.push(format!("renamed operand {} {} -> {}", r.operand, r.from, r.to));
            }
            let t = write_grammar_file(&file);
            let text = emit_text(output.as_deref(), &t)?;
            Ok(Outcome::ok(text, json!({ "grammar_text": t, "renamed": c.renamed })))
        }
        Command::Union { first, second, output } => {
            let s1 = SimpleTransformer::new(load_transformer(first)?).map_err(Failure::domain)?;
            let s2 = SimpleTransformer::new(load_transformer(second)?).map_err(Failure::domain)?;
            let u = union(&s1, &s2).map_err(Failure::domain)?;
            let t = write_grammar_file(&u.base().to_file());
            let text = emit_text(output.as_deref(), &t)?;
            Ok(Outcome::ok(text, json!({ "grammar_text": t })))
        }
        Command::Nabla { grammar, from, to } => {
            let s = SimpleTransformer::new(load_transformer(grammar)?).map_err(Failure::domain)?;
            let w = s.nabla(&word(from)?, &word(to)?).map_err(Failure::domain)?;
            let text = match &w {
                Some(w) => format!("{w}\n"),
                None => "none\n".to_string(),
            };
            Ok(Outcome::ok(text, json!({ "witness": w })))
        }
        Command::Relation { grammar, bounds, format } => {
            let t = load_transformer(grammar)?;
            let rel = t.bounded_relation(&bounds.bounds());
            let text = match format {
                RelationFormat::Tsv => rel.to_tsv(),
                RelationFormat::Text => rel
                    .pairs
                    .iter()
                    .map(|(u, v)| format!("({}, {})\n", show(u), show(v)))
                    .collect(),
            };
            let pairs: Vec<[String; 2]> = rel.pairs.iter().map(|(u, v)| [u.to_string(), v.to_string()]).collect();
            Ok(Outcome::ok(text, json!({ "bounds": rel.bounds, "pairs": pairs })))
        }
        Command::Closure { grammar, map, output, skip_precheck, bounds } => closure(grammar, map, output, *skip_precheck, bounds),
        Command::Cnf(c) => cnf(c),
    }
}

fn show(w: &Word) -> String {
    if w.is_empty() {
        "ε".to_string()
    } else {
        w.to_string()
    }
}

fn check(path: &Path) -> Result<Outcome, Failure> {
    let file = load_file(path)?;
    let g = &file.grammar;
    let mut lines = vec![
        format!("leftist grammar: yes ({} symbols, {} rules)", g.alphabet().len(), g.rules().len()),
        format!("acyclic: {}", mark(g.is_acyclic())),
    ];
    let mut report = json!({
        "symbols": g.alphabet().len(),
        "rules": g.rules().len(),
        "acyclic": g.is_acyclic(),
    });
    let mut code = 0;
    if file.has_transformer_header() {
        match Transformer::from_file(&file) {
            Ok(t) => {
                let simple = SimpleTransformer::new(t.clone()).is_ok();
                lines.push("transformer: yes".into());
                lines.push(format!("simple transformer: {}", mark(simple)));
                report["transformer"] = json!(true);
                report["simple"] = json!(simple);
                if file.anchors.is_some() {
                    let anchored = AnchoredTransformer::from_file(&file);
                    lines.push(format!("anchored: {}", mark(anchored.is_ok())));
                    report["anchored"] = json!(anchored.is_ok());
                    if let Err(e) = anchored {
                        lines.push(format!("  {e}"));
                        code = EXIT_DOMAIN;
                    }
                }
            }
            Err(e) => {
                lines.push(format!("transformer: no ({e})"));
                report["transformer"] = json!(false);
                report["transformer_error"] = json!(e.to_string());
                code = EXIT_DOMAIN;
            }
        }
    }
    Ok(Outcome { code, text: lines.join("\n") + "\n", json: report })
}

fn closure(
    path: &Path,
    map: &str,
    output: &Option<PathBuf>,
    skip_precheck: bool,
    bounds: &RelationArgs,
) -> Result<Outcome, Failure> {
    let at = AnchoredTransformer::from_file(&load_file(path)?).map_err(Failure::domain)?;
    let h = Renaming::parse(map).map_err(Failure::usage)?;
    let b = bounds.bounds();
    let slack = RelationBounds::new(b.max_input, b.max_word + 2, 2 * b.max_depth);
    let pc = precheck(&at, &b, &slack);
    let mut messages = Vec::new();
    if !pc.right_holds() && !skip_precheck {
        let (u, v) = pc.right.clone().expect("failing pair");
        return Err(Failure::domain(format!(
            "precondition S_G = S_G·⊑_C fails at L={} M={} D={}: ({}, {}) is missing; use --skip-precheck to build anyway",
            b.max_input,
            b.max_word,
            b.max_depth,
            show(&u),
            show(&v)
        )));
    }
    if !pc.right_holds() {
        messages.push("warning: right precondition fails at the given bounds".to_string());
    }
    if !pc.two_sided_holds() {
        messages.push("note: two-sided precondition fails at the given bounds".to_string());
    }
    let p = build_pipeline(&at, &h).map_err(Failure::domain)?;
    let mut file = p.closure.to_file();
    file.meta.push("construction: transitive closure".into());
    file.meta.push(format!("map: {h}"));
    file.meta.push(format!(
        "precheck: bounds L={} M={} D={}, slack M={} D={}, right {}, two-sided {}",
        b.max_input,
        b.max_word,
        b.max_depth,
        slack.max_word,
        slack.max_depth,
        if pc.right_holds() { "holds" } else { "fails" },
        if pc.two_sided_holds() { "holds" } else { "fails" },
    ));
    file.meta.push(format!(
        "copies: primes ', dotted .d, double-dotted .dd, output copy .x; squares {} {}, anchors {} {}",
        p.symbols.sq1, p.symbols.sq2, p.symbols.o1, p.symbols.o2
    ));
    let t = write_grammar_file(&file);
    let mut text = messages.iter().map(|m| format!("{m}\n")).collect::<String>();
    text.push_str(&emit_text(output.as_deref(), &t)?);
    Ok(Outcome::ok(
        text,
        json!({
            "grammar_text": t,
            "precheck": pc,
            "symbols": p.closure.grammar().alphabet().len(),
            "rules": p.closure.grammar().rules().len(),
        }),
    ))
}

fn load_formula(path: &Path) -> Result<(sat::RawCnf, Preprocessed), Failure> {
    let raw = sat::parse_dimacs(&read(path)?).map_err(|e| Failure::domain(format!("{}: {e}", path.display())))?;
    let pre = sat::preprocess(&raw).map_err(Failure::domain)?;
    Ok((raw, pre))
}

fn formula(pre: Preprocessed) -> Result<(sat::CnfFormula, sat::PreprocessReport), Failure> {
    match pre {
        Preprocessed::Formula(f, r) => Ok((f, r)),
        Preprocessed::Unsat(r) => Err(Failure::domain(format!(
            "clause {} is empty; the formula is trivially unsatisfiable",
            r.empty_clause.unwrap_or(0)
        ))),
    }
}

fn cnf(c: &CnfCommand) -> Result<Outcome, Failure> {
    match c {
        CnfCommand::Compile { cnf, output } => {
            let (_, pre) = load_formula(cnf)?;
            let (f, report) = formula(pre)?;
            let t = sat::build_phi_grammar(&f).map_err(Failure::domain)?;
            let mut file = t.to_file();
            file.meta.push(format!("cnf: m={} n={} (after preprocessing)", f.m(), f.n()));
            file.meta.push(format!("start: {}", sat::start_word(&f)));
            file.meta.push(format!("target: {}", sat::target_word(&f)));
            write(output, &write_grammar_file(&file))?;
            let mut meta = String::from("# symbol letter copy clause level\n");
            for s in t.grammar().alphabet() {
                if let Some(l) = LevelSymbol::parse(s.name()) {
                    let copy = if l.primed { "primed" } else { "plain" };
                    meta.push_str(&format!("{s} {:?} {copy} {} {}\n", l.letter, l.clause, l.level));
                }
            }
            let meta_path = output.with_extension("meta");
            write(&meta_path, &meta)?;
            Ok(Outcome::ok(
                format!("wrote {} and {}\n", output.display(), meta_path.display()),
                json!({ "m": f.m(), "n": f.n(), "preprocess": report, "symbols": t.grammar().alphabet().len() }),
            ))
        }
        CnfCommand::Solve { cnf, budget } => {
            let (raw, pre) = load_formula(cnf)?;
            let (f, report) = match pre {
                Preprocessed::Unsat(r) => {
                    return Ok(Outcome {
                        code: 1,
                        text: "UNSAT (empty clause)\n".into(),
                        json: json!({ "result": "UNSAT", "preprocess": r }),
                    })
                }
                Preprocessed::Formula(f, r) => (f, r),
            };
            let (r, theta) = sat::solve(&f, *budget).map_err(Failure::domain)?;
            match (&r.verdict, theta) {
                (Verdict::Found(_), Some(theta)) => {
                    let original = sat::Valuation(theta.0[..raw.num_vars].to_vec());
                    if !raw.satisfied_by(&original) {
                        return Err(Failure::domain("decoded valuation does not satisfy the input"));
                    }
                    Ok(Outcome::ok(
                        format!("SAT\nv {original} 0\n"),
                        json!({ "result": "SAT", "valuation": original.0, "preprocess": report, "stats": r.stats }),
                    ))
                }
                (Verdict::BudgetExceeded, _) => Ok(Outcome {
                    code: 2,
                    text: "UNKNOWN (budget exceeded)\n".into(),
                    json: json!({ "result": "UNKNOWN", "stats": r.stats }),
                }),
                _ => Ok(Outcome {
                    code: 1,
                    text: "UNSAT\n".into(),
                    json: json!({ "result": "UNSAT", "preprocess": report, "stats": r.stats }),
                }),
            }
        }
        CnfCommand::Hard { cnf, k, output, derivation } => {
            let (_, pre) = load_formula(cnf)?;
            let (f, _) = formula(pre)?;
            let (g, pi) = sat::build_hard_instance(&f, *k).map_err(Failure::domain)?;
            let mut file = GrammarFile::plain(g);
            file.meta.push(format!("gadget: m={} n={} k={}", f.m(), f.n(), k));
            write(output, &write_grammar_file(&file))?;
            write(derivation, &write_derivation(&pi.initial, &pi.steps))?;
            Ok(Outcome::ok(
                format!("wrote {} and {} ({} steps)\n", output.display(), derivation.display(), pi.len()),
                json!({ "m": f.m(), "n": f.n(), "k": k, "steps": pi.len() }),
            ))
        }
    }
}
