//! Parses feature structures written as terms, compares them by subsumption,
//! unifies them and prints the result as an attribute-value matrix.

use tfsm::afs::Amrs;
use tfsm::compiler::load_grammar;
use tfsm::render::avm;
use tfsm::term::{parse_term, render};
use tfsm::tfs::Tfs;

fn main() {
    let g = load_grammar(include_str!("../corpus/running.ale")).expect("grammar loads");
    let h = &g.hierarchy;

    let general = parse_term(h, "a(#1 d, #1)").unwrap().totally_well_typed(h).unwrap();
    let specific = parse_term(h, "c(#1 d1, #1, bot, d)").unwrap().totally_well_typed(h).unwrap();
    println!("general:  {}", render(h, &general));
    println!("specific: {}", render(h, &specific));
    println!("general subsumes specific: {}", general.subsumes(h, &specific).is_some());
    println!("specific subsumes general: {}", specific.subsumes(h, &general).is_some());

    let left = parse_term(h, "a(d, d1)").unwrap().totally_well_typed(h).unwrap();
    let right = parse_term(h, "b(d2, d)").unwrap().totally_well_typed(h).unwrap();
    let joined = Amrs::unify(h, &left.abs().unwrap(), &right.abs().unwrap()).expect("compatible");
    let joined = Tfs::conc(&joined);
    println!("\n{} unified with {}:", render(h, &left), render(h, &right));
    println!("{}", avm(h, &joined));

    let clash = parse_term(h, "a(d1, bot)").unwrap().totally_well_typed(h).unwrap();
    let other = parse_term(h, "b(d2, bot)").unwrap().totally_well_typed(h).unwrap();
    match Amrs::unify(h, &clash.abs().unwrap(), &other.abs().unwrap()) {
        Ok(r) => println!("\nunexpected result {}", render(h, &Tfs::conc(&r))),
        Err(e) => println!("\n{} and {} do not unify: {e}", render(h, &clash), render(h, &other)),
    }
}
