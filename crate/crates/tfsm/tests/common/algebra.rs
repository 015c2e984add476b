use std::sync::OnceLock;

use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

use super::{generalizations, random_tfs, Tape, RUNNING};
use tfsm::afs::Amrs;
use tfsm::code::ObjectCode;
use tfsm::compiler::codegen::{compile_grammar, compile_program_term, compile_query_term};
use tfsm::compiler::load_grammar;
use tfsm::machine::Machine;
use tfsm::tfs::Tfs;
use tfsm::types::{Hierarchy, TypeId};

type Check = Result<(), TestCaseError>;

pub fn code() -> &'static ObjectCode {
    static CODE: OnceLock<ObjectCode> = OnceLock::new();
    CODE.get_or_init(|| compile_grammar(&load_grammar(RUNNING).unwrap()).unwrap())
}

pub fn h() -> &'static Hierarchy {
    &code().hierarchy
}

pub fn tape() -> impl Strategy<Value = Vec<u32>> {
    prop::collection::vec(any::<u32>(), 8..48)
}

/// A structure over the running hierarchy of depth at most 3.
pub fn gen(bytes: &[u32]) -> Tfs {
    let mut tape = Tape::new(bytes);
    let root = if tape.chance(20) { TypeId::BOTTOM } else { h().lookup("g").unwrap() };
    random_tfs(h(), &mut tape, root, 3)
}

fn abs(a: &Tfs) -> Amrs {
    a.abs().unwrap()
}

fn equiv(a: &Amrs, b: &Amrs) -> bool {
    a.subsumes(h(), b) && b.subsumes(h(), a)
}

fn join(a: &Amrs, b: &Amrs) -> Option<Amrs> {
    Amrs::unify(h(), a, b).ok()
}

fn join_tfs(a: &Tfs, b: &Tfs) -> Option<Tfs> {
    join(&abs(a), &abs(b)).map(|u| Tfs::conc(&u.totally_well_typed(h()).unwrap()))
}

pub fn commutes(x: &[u32], y: &[u32]) -> Check {
    let (a, b) = (abs(&gen(x)), abs(&gen(y)));
    match (join(&a, &b), join(&b, &a)) {
        (Some(l), Some(r)) => prop_assert!(equiv(&l, &r)),
        (l, r) => prop_assert_eq!(l.is_none(), r.is_none()),
    }
    Ok(())
}

pub fn associates(x: &[u32], y: &[u32], z: &[u32]) -> Check {
    let (a, b, c) = (abs(&gen(x)), abs(&gen(y)), abs(&gen(z)));
    let left = join(&a, &b).and_then(|ab| join(&ab, &c));
    let right = join(&b, &c).and_then(|bc| join(&a, &bc));
    match (left, right) {
        (Some(l), Some(r)) => prop_assert!(equiv(&l, &r)),
        (l, r) => prop_assert_eq!(l.is_none(), r.is_none()),
    }
    Ok(())
}

pub fn upper_bound(x: &[u32], y: &[u32]) -> Check {
    let (a, b) = (abs(&gen(x)), abs(&gen(y)));
    if let Some(u) = join(&a, &b) {
        prop_assert!(a.subsumes(h(), &u));
        prop_assert!(b.subsumes(h(), &u));
    }
    Ok(())
}

/// Absorption of a more general operand, and monotonicity in the first
/// argument.
pub fn absorbs_and_monotone(x: &[u32], y: &[u32]) -> Check {
    let a = gen(x);
    let b = abs(&gen(y));
    for g in generalizations(h(), &a) {
        let g = abs(&g);
        prop_assert!(equiv(&join(&g, &abs(&a)).unwrap(), &abs(&a)));
        if let Some(ab) = join(&abs(&a), &b) {
            let gb = join(&g, &b);
            prop_assert!(gb.is_some());
            prop_assert!(gb.unwrap().subsumes(h(), &ab));
        }
    }
    Ok(())
}

pub fn subsumption_order(x: &[u32]) -> Check {
    let a = gen(x);
    prop_assert!(abs(&a).subsumes(h(), &abs(&a)));
    prop_assert!(a.subsumes(h(), &a).is_some());
    for g1 in generalizations(h(), &a) {
        prop_assert!(g1.subsumes(h(), &a).is_some());
        for g2 in generalizations(h(), &g1).into_iter().take(3) {
            prop_assert!(abs(&g2).subsumes(h(), &abs(&g1)));
            prop_assert!(abs(&g2).subsumes(h(), &abs(&a)));
            prop_assert!(g2.subsumes(h(), &a).is_some());
        }
    }
    Ok(())
}

pub fn abs_conc(x: &[u32]) -> Check {
    let a = gen(x);
    let alpha = abs(&a);
    let back = Tfs::conc(&alpha);
    prop_assert_eq!(abs(&back), alpha);
    prop_assert!(back.alphabetic_variant(h(), &a));
    Ok(())
}

/// Walks a random chain of strict generalizations to its end, checking
/// that the rank falls at every step.
pub fn rank_chain(x: &[u32], picks: &[u32]) -> Check {
    let mut a = gen(x);
    let mut rank = a.rank(h()).unwrap();
    let mut k = 0;
    loop {
        let gs = generalizations(h(), &a);
        if gs.is_empty() {
            break;
        }
        let next = gs[picks[k % picks.len()] as usize % gs.len()].clone();
        k += 1;
        prop_assert!(next.subsumes(h(), &a).is_some());
        prop_assert!(a.subsumes(h(), &next).is_none());
        let r = next.rank(h()).unwrap();
        prop_assert!(r < rank, "rank {} then {}", rank, r);
        rank = r;
        a = next;
        prop_assert!(k <= 10_000);
    }
    prop_assert_eq!(h().name(a.root_type()), "bot");
    Ok(())
}

pub fn machine_unify(x: &[u32], y: &[u32]) -> Check {
    let (a, b) = (gen(x), gen(y));
    let mut m = Machine::with_query(code(), Vec::new());
    let pa = m.build(&compile_query_term(h(), &a)).unwrap();
    let pb = m.build(&compile_query_term(h(), &b)).unwrap();
    let expected = join_tfs(&a, &b);
    prop_assert_eq!(m.unify(pa, pb), expected.is_some());
    if let Some(e) = expected {
        prop_assert!(m.read(pa).alphabetic_variant(h(), &e));
        prop_assert!(m.read(pb).alphabetic_variant(h(), &e));
    }
    Ok(())
}

pub fn query_round_trip(x: &[u32]) -> Check {
    let a = gen(x);
    let mut m = Machine::with_query(code(), Vec::new());
    let p = m.build(&compile_query_term(h(), &a)).unwrap();
    prop_assert!(m.read(p).alphabetic_variant(h(), &a));
    Ok(())
}

pub fn program_unify(x: &[u32], y: &[u32]) -> Check {
    let (a, b) = (gen(x), gen(y));
    let mut m = Machine::with_query(code(), Vec::new());
    let pa = m.build(&compile_query_term(h(), &a)).unwrap();
    let before = m.heap().to_vec();
    let ok = m.apply(&compile_program_term(h(), &b), pa).unwrap();
    let expected = join_tfs(&a, &b);
    prop_assert_eq!(ok, expected.is_some());
    match expected {
        Some(e) => prop_assert!(m.read(pa).alphabetic_variant(h(), &e)),
        None => prop_assert_eq!(m.heap(), &before[..]),
    }
    Ok(())
}
