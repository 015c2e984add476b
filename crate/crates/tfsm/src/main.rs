use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use tfsm::code::ObjectCode;
use tfsm::compiler::codegen::compile_grammar;
use tfsm::compiler::{load_grammar, Grammar};
use tfsm::debugger::{Debugger, USAGE};
use tfsm::machine::{Machine, MachineError, DEFAULT_BUDGET};
use tfsm::oracle::{amrs_to_tfs, most_general_texts, Budget, Oracle};
use tfsm::render::{self, Format};

const PARSE_FAILURE: u8 = 1;
const INPUT_ERROR: u8 = 2;
const BUDGET_EXHAUSTED: u8 = 3;

/// Compile typed feature structure grammars and parse with them.
#[derive(Parser)]
#[command(name = "tfsm", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Args)]
struct Opts {
    /// Instruction budget of the machine
    #[arg(long, global = true, default_value_t = DEFAULT_BUDGET)]
    budget_steps: u64,
    /// Item budget of the reference parser
    #[arg(long, global = true, default_value_t = Budget::default().items)]
    budget_items: usize,
    /// Output format: term, avm or jsonl
    #[arg(long, global = true, default_value = "term")]
    format: Format,
    /// Trace level: 1 reports edges, 2 every instruction (to stderr)
    #[arg(long, global = true, default_value_t = 0)]
    trace: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Load and compile a grammar, reporting errors and a summary
    Check { grammar: PathBuf },
    /// Write the object code of a grammar
    Compile {
        grammar: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// List object code with addresses and labels
    Disasm { input: PathBuf },
    /// Parse a sentence with the abstract machine
    Parse { input: PathBuf, words: Vec<String> },
    /// Parse a sentence with the reference parser
    Oracle {
        grammar: PathBuf,
        words: Vec<String>,
        /// Drop items subsumed by other items after every step
        #[arg(long)]
        filter: bool,
    },
    /// Compare machine and reference results; sentences come from the
    /// arguments or, one per line, from standard input
    Diff { grammar: PathBuf, words: Vec<String> },
    /// Step through a parse interactively
    Debug { input: PathBuf, words: Vec<String> },
}

struct Failure(u8, String);

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(Failure(code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}

fn split_words(words: &[String]) -> Vec<&str> {
    words.iter().flat_map(|w| w.split_whitespace()).collect()
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure(INPUT_ERROR, format!("{}: {e}", path.display())))
}

fn grammar(path: &Path) -> Result<Grammar, Failure> {
    load_grammar(&read(path)?).map_err(|e| Failure(INPUT_ERROR, format!("{}: {e}", path.display())))
}

/// Object code from either a grammar or a compiled object file.
fn object(path: &Path) -> Result<ObjectCode, Failure> {
    let text = read(path)?;
    if text.trim_start().starts_with("%% types") {
        return ObjectCode::from_text(&text).map_err(|e| Failure(INPUT_ERROR, format!("{}: {e}", path.display())));
    }
    let g = load_grammar(&text).map_err(|e| Failure(INPUT_ERROR, format!("{}: {e}", path.display())))?;
    compile_grammar(&g).map_err(|e| Failure(INPUT_ERROR, format!("{}: {e}", path.display())))
}

fn machine_error(e: MachineError) -> Failure {
    let code = match e {
        MachineError::BudgetExhausted(_) => BUDGET_EXHAUSTED,
        _ => INPUT_ERROR,
    };
    Failure(code, e.to_string())
}

fn run(cli: Cli) -> Result<u8, Failure> {
    let opts = cli.opts;
    match cli.command {
        Command::Check { grammar: path } => {
            let g = grammar(&path)?;
            let code = compile_grammar(&g).map_err(|e| Failure(INPUT_ERROR, e.to_string()))?;
            let entries: usize = g.lexicon.values().map(Vec::len).sum();
            println!(
                "{}: {} types, {} features, {} rules, {} empty categories, {} words ({} entries), {} instructions",
                path.display(),
                g.hierarchy.len(),
                g.hierarchy.feature_count(),
                g.rules.len(),
                g.empties.len(),
                g.lexicon.len(),
                entries,
                code.program.len()
            );
            for cycle in g.hierarchy.detect_approp_loops() {
                let names: Vec<&str> = cycle.iter().map(|&t| g.hierarchy.name(t)).collect();
                println!("warning: appropriateness loop {}", names.join(" -> "));
            }
            Ok(0)
        }
        Command::Compile { grammar: path, output } => {
            let code = object(&path)?;
            std::fs::write(&output, code.to_text())
                .map_err(|e| Failure(INPUT_ERROR, format!("{}: {e}", output.display())))?;
            Ok(0)
        }
        Command::Disasm { input } => {
            print!("{}", object(&input)?.disassemble());
            Ok(0)
        }
        Command::Parse { input, words } => {
            let code = object(&input)?;
            let words = split_words(&words);
            let mut m = Machine::new(&code, &words).map_err(machine_error)?;
            m.set_budget(opts.budget_steps);
            if opts.trace > 0 {
                m.set_trace(opts.trace, |line| eprintln!("{line}"));
            }
            m.run().map_err(machine_error)?;
            let out = m.outcome();
            let extra = [
                ("steps", out.steps),
                ("active_edges", out.active_edges as u64),
                ("complete_edges", out.complete_edges as u64),
            ];
            print!("{}", render::results(&code.hierarchy, opts.format, "machine", &words, &out.results, &extra));
            Ok(if out.success() { 0 } else { PARSE_FAILURE })
        }
        Command::Oracle { grammar: path, words, filter } => {
            let g = grammar(&path)?;
            let words = split_words(&words);
            let o = Oracle::new(&g).map_err(|e| Failure(INPUT_ERROR, e.to_string()))?;
            let budget = Budget { items: opts.budget_items, ..Budget::default() };
            let fp = o.fixpoint(&words, budget, filter).map_err(|e| Failure(INPUT_ERROR, e.to_string()))?;
            if fp.exhausted {
                return Err(Failure(
                    BUDGET_EXHAUSTED,
                    format!("budget exhausted after {} iterations ({} items)", fp.iterations, fp.items.len()),
                ));
            }
            let results: Vec<_> = fp.results.iter().map(amrs_to_tfs).collect();
            let extra = [("iterations", fp.iterations as u64), ("items", fp.items.len() as u64)];
            print!("{}", render::results(&g.hierarchy, opts.format, "oracle", &words, &results, &extra));
            Ok(if fp.success() { 0 } else { PARSE_FAILURE })
        }
        Command::Diff { grammar: path, words } => {
            let g = grammar(&path)?;
            let code = compile_grammar(&g).map_err(|e| Failure(INPUT_ERROR, e.to_string()))?;
            let o = Oracle::new(&g).map_err(|e| Failure(INPUT_ERROR, e.to_string()))?;
            let sentences: Vec<String> = if words.is_empty() {
                io::stdin().lock().lines().map_while(Result::ok).filter(|l| !l.trim().is_empty()).collect()
            } else {
                vec![words.join(" ")]
            };
            let budget = Budget { items: opts.budget_items, ..Budget::default() };
            let mut differ = 0;
            for s in &sentences {
                let w: Vec<&str> = s.split_whitespace().collect();
                let mut m = Machine::new(&code, &w).map_err(machine_error)?;
                m.set_budget(opts.budget_steps);
                m.run().map_err(machine_error)?;
                let mres = m.outcome().results;
                let fp = o.fixpoint(&w, budget, false).map_err(|e| Failure(INPUT_ERROR, e.to_string()))?;
                if fp.exhausted {
                    return Err(Failure(BUDGET_EXHAUSTED, format!("item budget exhausted on `{s}`")));
                }
                let ores: Vec<_> = fp.results.iter().map(amrs_to_tfs).collect();
                let (a, b) = (most_general_texts(&g.hierarchy, &mres), most_general_texts(&g.hierarchy, &ores));
                if a == b {
                    println!("equal   {s}: {} results", a.len());
                } else {
                    differ += 1;
                    println!("DIFFER  {s}");
                    for t in a.iter().filter(|t| !b.contains(t)) {
                        println!("  machine only: {t}");
                    }
                    for t in b.iter().filter(|t| !a.contains(t)) {
                        println!("  oracle only:  {t}");
                    }
                }
            }
            Ok(if differ == 0 { 0 } else { PARSE_FAILURE })
        }
        Command::Debug { input, words } => {
            let code = object(&input)?;
            let words = split_words(&words);
            let mut m = Machine::new(&code, &words).map_err(machine_error)?;
            m.set_budget(opts.budget_steps);
            let mut d = Debugger::new(m);
            println!("{USAGE}");
            let stdin = io::stdin();
            let mut line = String::new();
            loop {
                print!("(tfsm) ");
                let _ = io::stdout().flush();
                line.clear();
                if stdin.lock().read_line(&mut line).unwrap_or(0) == 0 {
                    return Ok(0);
                }
                let reply = d.command(&line);
                if reply.quit {
                    return Ok(0);
                }
                if !reply.text.is_empty() {
                    println!("{}", reply.text.trim_end());
                }
            }
        }
    }
}
