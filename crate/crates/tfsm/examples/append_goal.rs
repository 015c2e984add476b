//! A rule with a relational goal: every phrase carries the list of its words,
//! built with `append`.

use tfsm::compiler::codegen::compile_grammar;
use tfsm::compiler::load_grammar;
use tfsm::machine::{parse, DEFAULT_BUDGET};
use tfsm::oracle::most_general_texts;

fn main() {
    let g = load_grammar(include_str!("../corpus/append.ale")).expect("grammar loads");
    let code = compile_grammar(&g).expect("grammar compiles");
    let words = ["p", "q", "q", "p"];
    let out = parse(&code, &words, DEFAULT_BUDGET).expect("machine runs");
    println!("{} results ({} distinct)", out.results.len(), most_general_texts(&g.hierarchy, &out.results).len());
    for t in most_general_texts(&g.hierarchy, &out.results) {
        println!("  {t}");
    }
}
