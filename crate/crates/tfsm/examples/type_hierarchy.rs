//! Compiles a small type hierarchy and prints its join table, the features
//! each type carries, and the code generated for one pair of types.

use tfsm::code::{unify_type, TypeTable};
use tfsm::compiler::load_grammar;

fn main() {
    let g = load_grammar(include_str!("../corpus/running.ale")).expect("grammar loads");
    let h = &g.hierarchy;
    let names: Vec<&str> = h.types().map(|t| h.name(t)).collect();
    let width = names.iter().map(|n| n.len()).max().unwrap_or(0) + 1;

    print!("{:width$}", "");
    for n in &names {
        print!("{n:>width$}");
    }
    println!();
    for a in h.types() {
        print!("{:width$}", h.name(a));
        for b in h.types() {
            let cell = h.lub(a, b).map_or("-", |t| h.name(t));
            print!("{cell:>width$}");
        }
        println!();
    }

    println!();
    for t in h.types() {
        let feats: Vec<String> = h
            .features_of(t)
            .iter()
            .map(|s| format!("{}:{}", h.feature_name(s.feature), h.name(s.restriction)))
            .collect();
        if !feats.is_empty() {
            println!("{} [{}]", h.name(t), feats.join(", "));
        }
    }

    let (a, b) = (h.lookup("a").unwrap(), h.lookup("b").unwrap());
    println!("\nunify_type[a, b]:");
    for ins in unify_type(h, a, b) {
        println!("  {}", ins.render(h, &|l| format!("@{l}")));
    }
    let table = TypeTable::compile(h);
    println!("table entry has {} instructions", table.get(a, b).len());
}
