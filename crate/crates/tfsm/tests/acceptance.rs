//! End-to-end acceptance checks, one PASS/FAIL line each.
//!
//! Known failures are frozen in `EXPECTED_FAILURES`: a listed check that
//! fails is reported as FAIL without failing the run, and a listed check that
//! starts passing fails the run so the list gets updated.

mod common;

use std::collections::BTreeSet;
use std::fmt::Debug;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use proptest::test_runner::{Config, TestError, TestRunner};

use common::algebra::{self, tape};
use tfsm::code::unify_type;
use tfsm::compiler::codegen::{compile_grammar, compile_query_term, flatten, Registers};
use tfsm::compiler::{load_grammar, Grammar};
use tfsm::machine::{key_sequence, parse, Machine, DEFAULT_BUDGET};
use tfsm::oracle::{amrs_to_tfs, most_general_texts, Budget, Oracle};
use tfsm::term::{parse_term, render};

/// Sub-checks that fail for reasons recorded with the project decisions.
const EXPECTED_FAILURES: &[&str] = &["4: `john loves` has no parse"];

const RUNNING: &str = include_str!("../corpus/running.ale");
const EXAMPLE: &str = include_str!("../corpus/example.ale");
const ANBN: &str = include_str!("../corpus/anbn.ale");
const OPT_DET: &str = include_str!("../corpus/opt_det.ale");
const AMBIGUITY: &str = include_str!("../corpus/ambiguity.ale");
const BRACKETING: &str = include_str!("../corpus/bracketing.ale");
const APPEND: &str = include_str!("../corpus/append.ale");
const HEBREW: &str = include_str!("../corpus/hebrew.ale");
const OLP: &str = include_str!("../corpus/olp.ale");
const BASELINE: &str = include_str!("baselines/anbn_steps.txt");

const HEBREW_SENTENCES: &[&str] = &[
    "dan $ar",
    "dana $ara",
    "dan ^akal ha-sepr",
    "dan ^akal sepr",
    "dan natan ha-sepr dana",
    "ha-sepr ha-gadol",
    "sepr ^adomm",
    "sparim gdolim",
    "dan $ara",
    "sepr",
    "dana ^akal sepr gadol",
];

/// Failed sub-checks of one criterion.
#[derive(Default)]
struct Outcome {
    failures: Vec<String>,
    notes: Vec<String>,
}

impl Outcome {
    fn check(&mut self, ok: bool, what: impl Into<String>) {
        if !ok {
            self.failures.push(what.into());
        }
    }

    fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }
}

fn words(s: &str) -> Vec<&str> {
    s.split_whitespace().collect()
}

fn grammar(src: &str) -> Grammar {
    load_grammar(src).expect("corpus grammars load")
}

fn ms(d: Duration) -> String {
    format!("{:.3} ms", d.as_secs_f64() * 1000.0)
}

fn golden_heap() -> Outcome {
    let mut o = Outcome::default();
    let code = compile_grammar(&grammar(RUNNING)).unwrap();
    let h = &code.hierarchy;
    let query = compile_query_term(h, &parse_term(h, "b(b(#1 d, #1), d)").unwrap());
    let t = Instant::now();
    let mut m = Machine::with_query(&code, Vec::new());
    let root = m.build(&query).unwrap();
    let elapsed = t.elapsed();
    let expected = "1 | STR | b\n2 | REF | 4\n3 | REF | 8\n4 | STR | b\n5 | REF | 7\n6 | REF | 7\n7 | STR | d\n8 | STR | d\n";
    o.check(root == 1 && m.h() == 9, "query occupies cells 1..=8");
    o.check(m.heap_dump(1, 8) == expected, format!("heap differs:\n{}", m.heap_dump(1, 8)));
    o.check(elapsed < Duration::from_millis(1), format!("took {}", ms(elapsed)));
    o.note(ms(elapsed));
    o
}

fn golden_flattening() -> Outcome {
    let mut o = Outcome::default();
    let h = grammar(RUNNING).hierarchy;
    for (term, expected) in [
        ("a(#3 d1, #3)", vec!["X1 = a(X2,X2)", "X2 = d1"]),
        ("b(b(#1 d, #1), d)", vec!["X1 = b(X2,X3)", "X2 = b(X4,X4)", "X4 = d", "X3 = d"]),
    ] {
        let t = parse_term(&h, term).unwrap();
        let eqs: Vec<String> =
            flatten(&h, &t.graph, t.root, &mut Registers::new()).iter().map(|e| e.display(&h).to_string()).collect();
        o.check(eqs == expected, format!("{term} flattens to {eqs:?}"));
    }
    o
}

/// Rows of the least upper bound table over `bot g d a b c e d1 d2`, with
/// arity and feature list; `-` marks an inconsistent pair.
const LUB_TABLE: &str = "
bot | bot g d a b c e d1 d2 | 0 |
g   | g g - a b c e - -     | 1 | f3:d
d   | d - d - - - - d1 d2   | 0 |
a   | a a - a c c - - -     | 2 | f3:d f1:bot
b   | b b - c b c e - -     | 2 | f3:d f2:bot
c   | c c - c c c - - -     | 4 | f3:d f1:bot f4:bot f2:bot
e   | e e - - e - e - -     | 2 | f3:d f2:bot
d1  | d1 - d1 - - - - d1 -  | 0 |
d2  | d2 - d2 - - - - - d2  | 0 |";

fn type_tables() -> Outcome {
    let mut o = Outcome::default();
    let h = grammar(RUNNING).hierarchy;
    let id = |n: &str| h.lookup(n).unwrap();
    let columns = ["bot", "g", "d", "a", "b", "c", "e", "d1", "d2"];
    let mut cells = 0;
    for row in LUB_TABLE.trim().lines() {
        let parts: Vec<&str> = row.split('|').map(str::trim).collect();
        let t = id(parts[0]);
        for (col, cell) in columns.iter().zip(parts[1].split_whitespace()) {
            let got = h.lub(t, id(col)).map(|u| h.name(u).to_string()).unwrap_or_else(|| "-".into());
            o.check(got == cell, format!("lub({}, {col}) = {got}, expected {cell}", parts[0]));
            cells += 1;
        }
        o.check(h.arity(t).to_string() == parts[2], format!("arity of {}", parts[0]));
        let feats: Vec<String> = h
            .features_of(t)
            .iter()
            .map(|s| format!("{}:{}", h.feature_name(s.feature), h.name(s.restriction)))
            .collect();
        o.check(feats.join(" ") == parts[3], format!("features of {}: {feats:?}", parts[0]));
    }
    o.check(cells == 81, format!("{cells} table cells"));
    let code: Vec<String> = unify_type(&h, id("a"), id("b"))
        .iter()
        .map(|i| i.render(&h, &|l| format!("L{l}")))
        .collect();
    let golden = ["build_str c", "build_ref_and_unify 1", "build_self_ref", "build_var bot", "build_ref 2", "return"];
    o.check(code == golden, format!("unify_type[a,b] = {code:?}"));
    o
}

fn example_sentence() -> Outcome {
    let mut o = Outcome::default();
    let g = grammar(EXAMPLE);
    let code = compile_grammar(&g).unwrap();
    let oracle = Oracle::new(&g).unwrap();
    let t = Instant::now();
    let out = parse(&code, &words("john loves her"), DEFAULT_BUDGET).unwrap();
    let elapsed = t.elapsed();
    let texts: Vec<String> = out.results.iter().map(|r| render(&g.hierarchy, r)).collect();
    o.check(
        texts == ["phrase(s, agr(third, sg), sem(love, john, she))"],
        format!("`john loves her` gives {texts:?}"),
    );
    o.check(elapsed < Duration::from_millis(100), format!("took {}", ms(elapsed)));
    o.note(ms(elapsed));
    for s in ["loves john her", "john loves"] {
        let m = parse(&code, &words(s), DEFAULT_BUDGET).unwrap();
        let f = oracle.fixpoint(&words(s), Budget::default(), false).unwrap();
        o.check(m.results.is_empty() && !f.success(), format!("4: `{s}` has no parse"));
        if !m.results.is_empty() {
            o.note(format!("`{s}`: machine {} oracle {}", m.results.len(), f.results.len()));
        }
    }
    o
}

/// Every word sequence over `vocab` of length at most `max`, shortest first.
fn all_inputs(vocab: &[&'static str], max: usize) -> Vec<Vec<&'static str>> {
    let mut out = vec![Vec::new()];
    let mut layer: Vec<Vec<&'static str>> = vec![Vec::new()];
    for _ in 0..max {
        layer = layer
            .iter()
            .flat_map(|s| {
                vocab.iter().map(move |w| {
                    let mut t = s.clone();
                    t.push(*w);
                    t
                })
            })
            .collect();
        out.extend(layer.iter().cloned());
    }
    out
}

/// Compares the ⪯-maximal results of machine and oracle on each input;
/// returns the mismatches and the number of inputs.
fn differential(src: &str, inputs: &[Vec<&str>]) -> (Vec<String>, usize) {
    let g = grammar(src);
    let code = compile_grammar(&g).unwrap();
    let oracle = Oracle::new(&g).unwrap();
    let budget = Budget { iterations: 200, items: 200_000 };
    let mut bad = Vec::new();
    for w in inputs {
        let m = match parse(&code, w, DEFAULT_BUDGET) {
            Ok(m) => m,
            Err(e) => {
                bad.push(format!("{w:?}: machine {e}"));
                continue;
            }
        };
        let f = oracle.fixpoint(w, budget, false).unwrap();
        if f.exhausted {
            bad.push(format!("{w:?}: oracle budget exhausted"));
            continue;
        }
        let ores: Vec<_> = f.results.iter().map(amrs_to_tfs).collect();
        let (a, b) = (most_general_texts(&g.hierarchy, &m.results), most_general_texts(&g.hierarchy, &ores));
        if a != b {
            bad.push(format!("{w:?}: machine {a:?} oracle {b:?}"));
        }
    }
    (bad, inputs.len())
}

fn machine_equals_oracle() -> Outcome {
    let mut o = Outcome::default();
    let suites: Vec<(&str, &str, Vec<Vec<&str>>)> = vec![
        ("running", RUNNING, all_inputs(&["x", "y", "w"], 8)),
        ("example", EXAMPLE, all_inputs(&["john", "loves", "her"], 8)),
        ("anbn", ANBN, all_inputs(&["a", "b"], 8)),
        ("opt_det", OPT_DET, all_inputs(&["the", "dogs", "sees"], 8)),
        ("ambiguity", AMBIGUITY, all_inputs(&["w", "u"], 8)),
        ("bracketing", BRACKETING, all_inputs(&["w"], 8)),
        ("append", APPEND, all_inputs(&["p", "q"], 8)),
        ("hebrew", HEBREW, HEBREW_SENTENCES.iter().map(|s| words(s)).collect()),
    ];
    let t = Instant::now();
    let results: Vec<(&str, Vec<String>, usize)> = std::thread::scope(|scope| {
        let handles: Vec<_> = suites
            .iter()
            .map(|(name, src, inputs)| scope.spawn(move || (*name, differential(src, inputs))))
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).map(|(n, (b, c))| (n, b, c)).collect()
    });
    let elapsed = t.elapsed();
    let mut total = 0;
    for (name, bad, count) in results {
        total += count;
        for b in bad.iter().take(3) {
            o.check(false, format!("{name} {b}"));
        }
    }
    o.check(elapsed < Duration::from_secs(60), format!("took {:.1} s", elapsed.as_secs_f64()));
    o.note(format!("{total} inputs in {:.1} s", elapsed.as_secs_f64()));
    o
}

fn anbn() -> Outcome {
    let mut o = Outcome::default();
    let g = grammar(ANBN);
    let code = compile_grammar(&g).unwrap();
    let oracle = Oracle::new(&g).unwrap();
    let baseline: Vec<(usize, u64, u64)> = BASELINE
        .lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .map(|l| {
            let v: Vec<u64> = l.split_whitespace().map(|x| x.parse().unwrap()).collect();
            (v[0] as usize, v[1], v[2])
        })
        .collect();
    let mut measured = Vec::new();
    for n in 1..=8 {
        let yes: Vec<&str> = [vec!["a"; n], vec!["b"; n]].concat();
        let no: Vec<&str> = [vec!["a"; n], vec!["b"; n + 1]].concat();
        let (my, mn) = (parse(&code, &yes, DEFAULT_BUDGET).unwrap(), parse(&code, &no, DEFAULT_BUDGET).unwrap());
        let (fy, fnn) = (
            oracle.fixpoint(&yes, Budget::default(), false).unwrap(),
            oracle.fixpoint(&no, Budget::default(), false).unwrap(),
        );
        o.check(my.results.len() == 1 && fy.results.len() == 1, format!("a^{n} b^{n}: {} parses", my.results.len()));
        o.check(mn.results.is_empty() && fnn.results.is_empty(), format!("a^{n} b^{}: {} parses", n + 1, mn.results.len()));
        measured.push((n, my.steps, mn.steps));
    }
    if std::env::var_os("TFSM_BLESS").is_some() {
        let mut text = String::from("# n  steps(a^n b^n)  steps(a^n b^n+1)\n");
        for (n, a, b) in &measured {
            text.push_str(&format!("{n} {a} {b}\n"));
        }
        std::fs::write(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/baselines/anbn_steps.txt"), text).unwrap();
        o.note("baseline rewritten");
    }
    o.check(baseline.len() == measured.len(), "baseline covers n = 1..8");
    for ((n, a, b), (_, ba, bb)) in measured.iter().zip(&baseline) {
        let within = |x: u64, base: u64| x * 10 <= base * 11;
        o.check(within(*a, *ba) && within(*b, *bb), format!("n = {n}: {a}/{b} steps against baseline {ba}/{bb}"));
    }
    o
}

fn algebra_properties() -> Outcome {
    let mut o = Outcome::default();
    let runner = || TestRunner::new(Config { cases: 1000, failure_persistence: None, ..Config::default() });
    fn report<T: Debug>(o: &mut Outcome, name: &str, r: Result<(), TestError<T>>) {
        if let Err(e) = r {
            o.check(false, format!("{name}: {e}"));
        }
    }
    let pair = || (tape(), tape());
    report(&mut o, "commutative", runner().run(&pair(), |(x, y)| algebra::commutes(&x, &y)));
    report(&mut o, "associative", runner().run(&(tape(), tape(), tape()), |(x, y, z)| algebra::associates(&x, &y, &z)));
    report(&mut o, "upper bound", runner().run(&pair(), |(x, y)| algebra::upper_bound(&x, &y)));
    report(&mut o, "absorptive and monotone", runner().run(&pair(), |(x, y)| algebra::absorbs_and_monotone(&x, &y)));
    report(&mut o, "subsumption order", runner().run(&tape(), |x| algebra::subsumption_order(&x)));
    report(&mut o, "abs and conc", runner().run(&tape(), |x| algebra::abs_conc(&x)));
    report(&mut o, "rank chains", runner().run(&pair(), |(x, p)| algebra::rank_chain(&x, &p)));
    o.note("7 properties x 1000 cases");
    o
}

fn olp() -> Outcome {
    let mut o = Outcome::default();
    let g = grammar(OLP);
    let oracle = Oracle::new(&g).unwrap();
    let budget = Budget { iterations: 200, items: 20_000 };
    let filtered = oracle.fixpoint(&["w"], budget, true).unwrap();
    let unfiltered = oracle.fixpoint(&["w"], budget, false).unwrap();
    o.check(!filtered.exhausted, "filtered run reaches a fixpoint");
    o.check(filtered.success(), "filtered run succeeds");
    o.check(unfiltered.exhausted, "unfiltered run exhausts its budget");
    o.note(format!(
        "filtered: fixpoint after {} iterations; unfiltered: {} items after {} iterations",
        filtered.iterations,
        unfiltered.items.len(),
        unfiltered.iterations
    ));
    o
}

fn filter_soundness() -> Outcome {
    let mut o = Outcome::default();
    let budget = Budget { iterations: 200, items: 20_000 };
    let mut compared = 0;
    let suites: Vec<(&str, &str, Vec<Vec<&str>>)> = vec![
        ("running", RUNNING, all_inputs(&["x", "y", "w"], 5)),
        ("example", EXAMPLE, all_inputs(&["john", "loves", "her"], 5)),
        ("anbn", ANBN, all_inputs(&["a", "b"], 6)),
        ("opt_det", OPT_DET, all_inputs(&["the", "dogs", "sees"], 5)),
        ("ambiguity", AMBIGUITY, all_inputs(&["w", "u"], 5)),
        ("bracketing", BRACKETING, all_inputs(&["w"], 6)),
        ("append", APPEND, all_inputs(&["p", "q"], 5)),
        ("olp", OLP, all_inputs(&["w"], 3)),
        ("hebrew", HEBREW, HEBREW_SENTENCES.iter().map(|s| words(s)).collect()),
    ];
    for (name, src, inputs) in &suites {
        let g = grammar(src);
        let oracle = Oracle::new(&g).unwrap();
        for w in inputs {
            let f = oracle.fixpoint(w, budget, true).unwrap();
            let u = oracle.fixpoint(w, budget, false).unwrap();
            if f.exhausted || u.exhausted {
                continue;
            }
            compared += 1;
            o.check(f.success() == u.success(), format!("{name} {w:?}"));
        }
    }
    o.note(format!("{compared} inputs where both runs terminate"));
    o
}

fn chart_keys() -> Outcome {
    let mut o = Outcome::default();
    for n in 1..=6usize {
        let mut brute: Vec<(usize, usize, usize)> = Vec::new();
        for r in 1..=n {
            for l in (0..r).rev() {
                for m in (l..r).rev() {
                    brute.push((l, m, r));
                }
            }
        }
        let got = key_sequence(n);
        o.check(got == brute, format!("n = {n}: key order differs"));
        o.check(got.len() == n * (n + 1) * (n + 2) / 6, format!("n = {n}: {} keys", got.len()));
    }
    o
}

type Criterion = fn() -> Outcome;

fn main() -> ExitCode {
    let criteria: [(&str, Criterion); 10] = [
        ("golden heap layout", golden_heap),
        ("golden flattening", golden_flattening),
        ("golden type tables and unify_type[a,b]", type_tables),
        ("example sentence", example_sentence),
        ("machine equals oracle on the corpus", machine_equals_oracle),
        ("a^n b^n counts and instruction baseline", anbn),
        ("feature structure algebra properties", algebra_properties),
        ("off-line parsability with and without filter", olp),
        ("subsumption filter keeps success", filter_soundness),
        ("chart key order and count", chart_keys),
    ];
    let expected: BTreeSet<&str> = EXPECTED_FAILURES.iter().copied().collect();
    let mut seen_expected = BTreeSet::new();
    let mut unexpected = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        let out = f();
        let status = if out.failures.is_empty() { "PASS" } else { "FAIL" };
        let notes = if out.notes.is_empty() { String::new() } else { format!(" ({})", out.notes.join("; ")) };
        println!("{status} {:>2} {name}{notes}", k + 1);
        for fail in &out.failures {
            if expected.contains(fail.as_str()) {
                seen_expected.insert(fail.clone());
                println!("       known failure: {fail}");
            } else {
                unexpected += 1;
                println!("       {fail}");
            }
        }
    }
    for e in &expected {
        if !seen_expected.contains(*e) {
            unexpected += 1;
            println!("known failure now passes, update EXPECTED_FAILURES: {e}");
        }
    }
    if unexpected == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
