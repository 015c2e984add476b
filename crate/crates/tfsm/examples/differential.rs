//! Parses a set of sentences with both the machine and the reference parser
//! and reports whether their most general results coincide.

use tfsm::compiler::codegen::compile_grammar;
use tfsm::compiler::load_grammar;
use tfsm::machine::{parse, DEFAULT_BUDGET};
use tfsm::oracle::{amrs_to_tfs, most_general_texts, Budget, Oracle};

const SENTENCES: &[&str] = &["dan $ar", "dan ^akal ha-sepr", "dan natan ha-sepr dana", "ha-sepr ha-gadol", "dan $ara"];

fn main() {
    let g = load_grammar(include_str!("../corpus/hebrew.ale")).expect("grammar loads");
    let code = compile_grammar(&g).expect("grammar compiles");
    let o = Oracle::new(&g).expect("oracle builds");
    let budget = Budget { items: 200_000, ..Budget::default() };

    for s in SENTENCES {
        let words: Vec<&str> = s.split_whitespace().collect();
        let machine = parse(&code, &words, DEFAULT_BUDGET).expect("machine runs").results;
        let fp = o.fixpoint(&words, budget, false).expect("fixpoint runs");
        let oracle: Vec<_> = fp.results.iter().map(amrs_to_tfs).collect();
        let (a, b) = (most_general_texts(&g.hierarchy, &machine), most_general_texts(&g.hierarchy, &oracle));
        println!("{:<8} {s}: {} results", if a == b { "equal" } else { "DIFFER" }, a.len());
    }
}
