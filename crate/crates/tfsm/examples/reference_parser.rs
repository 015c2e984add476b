//! Runs the fixpoint reference parser, then shows how the subsumption filter
//! lets it terminate on a grammar without off-line parsability.

use tfsm::compiler::load_grammar;
use tfsm::oracle::{amrs_to_tfs, Budget, Oracle};
use tfsm::term::render;

fn main() {
    let g = load_grammar(include_str!("../corpus/example.ale")).expect("grammar loads");
    let o = Oracle::new(&g).expect("oracle builds");
    let words = ["john", "loves", "her"];
    let fp = o.fixpoint(&words, Budget::default(), false).expect("fixpoint runs");
    println!("`{}`: {} items after {} iterations", words.join(" "), fp.items.len(), fp.iterations);
    for r in &fp.results {
        println!("  {}", render(&g.hierarchy, &amrs_to_tfs(r)));
    }

    let g = load_grammar(include_str!("../corpus/olp.ale")).expect("grammar loads");
    let o = Oracle::new(&g).expect("oracle builds");
    let budget = Budget { iterations: 30, items: 2_000 };
    for filter in [false, true] {
        let fp = o.fixpoint(&["w"], budget, filter).expect("fixpoint runs");
        println!(
            "\nwrap grammar, filter {filter}: {} after {} iterations, {} items, {} results",
            if fp.exhausted { "budget exhausted" } else { "fixpoint" },
            fp.iterations,
            fp.items.len(),
            fp.results.len()
        );
    }
}
