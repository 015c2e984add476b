//! Parses a sentence with the abstract machine and prints every result.
//!
//! ```text
//! cargo run --example parse_sentence -- john loves her
//! ```

use tfsm::compiler::codegen::compile_grammar;
use tfsm::compiler::load_grammar;
use tfsm::machine::{parse, DEFAULT_BUDGET};
use tfsm::render::avm;

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let words: Vec<&str> = if args.is_empty() { vec!["john", "loves", "her"] } else { args.iter().map(String::as_str).collect() };

    let g = load_grammar(include_str!("../corpus/example.ale")).expect("grammar loads");
    let code = compile_grammar(&g).expect("grammar compiles");
    let out = match parse(&code, &words, DEFAULT_BUDGET) {
        Ok(out) => out,
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(2);
        }
    };
    for r in &out.results {
        println!("{}\n", avm(&code.hierarchy, r));
    }
    println!(
        "`{}`: {} results, {} steps, {} active and {} complete edges",
        words.join(" "),
        out.results.len(),
        out.steps,
        out.active_edges,
        out.complete_edges
    );
}
