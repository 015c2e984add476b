//! Shows the rules derived from an empty category and parses sentences that
//! need it.

use tfsm::compiler::codegen::compile_grammar;
use tfsm::compiler::empty::expand_empty_categories;
use tfsm::compiler::load_grammar;
use tfsm::machine::{parse, DEFAULT_BUDGET};
use tfsm::term::render;

fn main() {
    let g = load_grammar(include_str!("../corpus/opt_det.ale")).expect("grammar loads");
    let h = &g.hierarchy;
    let x = expand_empty_categories(h, &g.rules, &g.empties);
    for r in &x.rules[g.rules.len()..] {
        println!("derived rule {} with {} daughters", r.name, r.body_len());
    }
    for f in &x.facts {
        println!("derived fact {}", render(h, f));
    }

    let code = compile_grammar(&g).expect("grammar compiles");
    for s in ["dogs sees", "the dogs sees dogs", "dogs sees the dogs"] {
        let words: Vec<&str> = s.split_whitespace().collect();
        let out = parse(&code, &words, DEFAULT_BUDGET).expect("machine runs");
        println!("`{s}`: {} results", out.results.len());
    }
}
