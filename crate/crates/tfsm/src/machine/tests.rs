use super::*;
use crate::compiler::codegen::{compile_grammar, compile_program_term, compile_query_term};
use crate::compiler::load_grammar;
use crate::term::{parse_term, render};

fn object(src: &str) -> ObjectCode {
    compile_grammar(&load_grammar(src).unwrap()).unwrap()
}

fn running() -> ObjectCode {
    object(include_str!("../../corpus/running.ale"))
}

fn build_term(m: &mut Machine<'_>, text: &str) -> usize {
    let h = m.hierarchy();
    let t = parse_term(h, text).unwrap();
    m.build(&compile_query_term(h, &t)).unwrap()
}

fn abstract_unify(h: &Hierarchy, x: &str, y: &str) -> Option<Tfs> {
    let (a, b) = (parse_term(h, x).unwrap(), parse_term(h, y).unwrap());
    let u = crate::afs::Amrs::unify(h, &a.abs().unwrap(), &b.abs().unwrap()).ok()?;
    Some(Tfs::conc(&u.totally_well_typed(h).unwrap()))
}

#[test]
fn golden_heap_layout() {
    let code = running();
    let mut m = Machine::with_query(&code, Vec::new());
    let root = build_term(&mut m, "b(b(#1 d, #1), d)");
    assert_eq!(root, 1);
    assert_eq!(
        m.heap_dump(1, 8),
        "1 | STR | b\n2 | REF | 4\n3 | REF | 8\n4 | STR | b\n5 | REF | 7\n6 | REF | 7\n7 | STR | d\n8 | STR | d\n"
    );
    assert_eq!(m.h(), 9);
}

#[test]
fn deref_follows_chains_and_stops_at_self_refs() {
    let code = running();
    let mut m = Machine::with_query(&code, Vec::new());
    let root = build_term(&mut m, "b(b(#1 d, #1), d)");
    assert_eq!(m.deref(root), root);
    assert_eq!(m.deref(2), 4);
    let a = m.push(Cell::Ref(0));
    m.heap[a] = Cell::Ref(a);
    assert_eq!(m.deref(a), a);
    m.bind(a, root);
    assert_eq!(m.deref(a), root);
}

#[test]
fn unify_same_address_changes_nothing() {
    let code = running();
    let mut m = Machine::with_query(&code, Vec::new());
    let root = build_term(&mut m, "a(d1, d2)");
    let before = m.heap().to_vec();
    assert!(m.unify(root, root));
    assert_eq!(m.heap(), &before[..]);
    assert!(m.trail().is_empty());
}

#[test]
fn unify_agrees_with_abstract_unification() {
    let code = running();
    let h = &code.hierarchy;
    for (x, y) in [("a(#3 d1, #3)", "b(d, d)"), ("a(#3 d1, #3)", "b(b(#1 d, #1), d)"), ("g", "d"), ("e(d2, d1)", "a(d, d2)")] {
        let mut m = Machine::with_query(&code, Vec::new());
        let (p, q) = (build_term(&mut m, x), build_term(&mut m, y));
        let expected = abstract_unify(h, x, y);
        assert_eq!(m.unify(p, q), expected.is_some(), "{x} and {y}");
        if let Some(e) = expected {
            let got = m.read(p);
            assert!(got.alphabetic_variant(h, &e), "{} vs {}", render(h, &got), render(h, &e));
        }
    }
}

#[test]
fn unify_g_with_d_fails() {
    let code = running();
    let mut m = Machine::with_query(&code, Vec::new());
    let (p, q) = (build_term(&mut m, "g"), build_term(&mut m, "d"));
    assert!(!m.unify(p, q));
}

#[test]
fn program_code_against_golden_heap() {
    let code = running();
    let h = &code.hierarchy;
    let program = compile_program_term(h, &parse_term(h, "a(#3 d1, #3)").unwrap());

    let mut m = Machine::with_query(&code, Vec::new());
    let root = build_term(&mut m, "b(b(#1 d, #1), d)");
    let before = m.heap().to_vec();
    let expected = abstract_unify(h, "b(b(#1 d, #1), d)", "a(#3 d1, #3)");
    assert!(expected.is_none());
    assert!(!m.apply(&program, root).unwrap());
    assert_eq!(m.heap(), &before[..]);

    let mut m = Machine::with_query(&code, Vec::new());
    let root = build_term(&mut m, "b(d, d)");
    assert!(m.apply(&program, root).unwrap());
    let r = m.deref(root);
    let c = h.lookup("c").unwrap();
    assert_eq!(m.heap()[r], Cell::Str(c));
    let slot = |name: &str| r + h.position(c, h.feature(name).unwrap()).unwrap();
    assert_eq!(m.deref(slot("f3")), m.deref(slot("f1")));
    assert_eq!(m.heap()[m.deref(slot("f1"))], Cell::Str(h.lookup("d1").unwrap()));
    assert_eq!(m.heap()[m.deref(slot("f4"))], Cell::Var(TypeId::BOTTOM));
    let e = abstract_unify(h, "b(d, d)", "a(#3 d1, #3)").unwrap();
    assert!(m.read(root).alphabetic_variant(h, &e));
}

#[test]
fn most_general_structure_of_c() {
    let code = running();
    let h = &code.hierarchy;
    let mut m = Machine::with_query(&code, Vec::new());
    let c = h.lookup("c").unwrap();
    let a = m.build_most_general_fs(c);
    let d = h.lookup("d").unwrap();
    let cells: Vec<Cell> = m.heap()[a..].to_vec();
    assert_eq!(cells[0], Cell::Str(c));
    let mut vars: Vec<TypeId> = cells[1..]
        .iter()
        .map(|c| match c {
            Cell::Var(t) => *t,
            other => panic!("expected VAR, got {other}"),
        })
        .collect();
    assert_eq!(vars.len(), 4);
    vars.sort();
    assert_eq!(vars, [TypeId::BOTTOM, TypeId::BOTTOM, TypeId::BOTTOM, d]);
    let d0 = m.build_most_general_fs(d);
    assert_eq!(m.h(), d0 + 1);
}

#[test]
fn var_cells_expand_only_when_reached() {
    let code = running();
    let h = &code.hierarchy;
    let mut m = Machine::with_query(&code, Vec::new());
    let a = m.build_most_general_fs(h.lookup("a").unwrap());
    let h0 = m.h();
    let q = build_term(&mut m, "a(d1, d)");
    assert_eq!(m.heap()[a + 2], Cell::Var(TypeId::BOTTOM));
    assert!(m.unify(a, q));
    assert_eq!(render(h, &m.read(a)), "a(d1, d)");
    assert!(m.h() >= h0);
}

#[test]
fn copy_preserves_sharing() {
    let code = running();
    let h = &code.hierarchy;
    let mut m = Machine::with_query(&code, Vec::new());
    let root = build_term(&mut m, "b(b(#1 d, #1), d)");
    let c = m.copy_all(&[root])[0];
    assert_eq!(c, 9);
    let copy = m.read(c);
    assert!(copy.alphabetic_variant(h, &m.read(root)));
    let inner = m.deref(c + 1);
    assert_eq!(m.deref(inner + 1), m.deref(inner + 2));
}

#[test]
fn copy_of_a_single_atom_is_one_cell() {
    let code = running();
    let mut m = Machine::with_query(&code, Vec::new());
    let root = build_term(&mut m, "d1");
    let h0 = m.h();
    m.copy_all(&[root]);
    assert_eq!(m.h(), h0 + 1);
}

#[test]
fn copy_of_a_cycle_terminates() {
    let code = running();
    let h = &code.hierarchy;
    let (a, d) = (h.lookup("a").unwrap(), h.lookup("d").unwrap());
    let f1 = h.position(a, h.feature("f1").unwrap()).unwrap();
    let f3 = h.position(a, h.feature("f3").unwrap()).unwrap();
    let mut m = Machine::with_query(&code, Vec::new());
    let root = m
        .build(&[Instr::PutNode(a, 1), Instr::PutNode(d, 2), Instr::PutArc(1, f3, 2), Instr::PutArc(1, f1, 1)])
        .unwrap();
    let c = m.copy_all(&[root])[0];
    assert_eq!(m.deref(c + f1), c);
    assert!(m.read(c).is_cyclic());
}

#[test]
fn copy_of_several_roots_keeps_shared_nodes_shared() {
    let code = running();
    let mut m = Machine::with_query(&code, Vec::new());
    let root = build_term(&mut m, "b(b(#1 d, #1), d)");
    let inner = m.deref(root + 1);
    let out = m.copy_all(&[root, inner]);
    assert_eq!(m.deref(out[0] + 1), out[1]);
}

#[test]
fn failures_restore_the_same_snapshot() {
    let code = running();
    let h = &code.hierarchy;
    let program = compile_program_term(h, &parse_term(h, "a(#3 d1, #3)").unwrap());
    let mut m = Machine::with_query(&code, Vec::new());
    let root = build_term(&mut m, "b(b(#1 d, #1), d)");
    let snapshot = (m.h(), m.heap().to_vec());
    assert!(!m.apply(&program, root).unwrap());
    assert_eq!((m.h(), m.heap().to_vec()), snapshot);
    assert!(!m.apply(&program, root).unwrap());
    assert_eq!((m.h(), m.heap().to_vec()), snapshot);
}

#[test]
fn failing_with_empty_trail_restores_nothing() {
    let code = running();
    let h = &code.hierarchy;
    let program = compile_program_term(h, &parse_term(h, "d").unwrap());
    let mut m = Machine::with_query(&code, Vec::new());
    let root = build_term(&mut m, "g");
    let snapshot = m.heap().to_vec();
    assert!(!m.apply(&program, root).unwrap());
    assert!(m.trail().is_empty());
    assert_eq!(m.heap(), &snapshot[..]);
}

#[test]
fn one_word_sets_len_to_one() {
    let code = running();
    let mut m = Machine::new(&code, &["x"]).unwrap();
    while m.position().0 == Segment::Query && m.step().unwrap() == Status::Running {}
    assert_eq!(m.len(), 1);
    assert_eq!(m.chart().get(0, 1).unwrap().complete.len(), 1);
}

#[test]
fn ambiguous_word_adds_two_edges_and_one_position() {
    let code = running();
    let q = assemble_query(&code, &["y"]).unwrap();
    assert!(matches!(q.last(), Some(Instr::Proceed(_))));
    let mut m = Machine::new(&code, &["y"]).unwrap();
    for _ in 0..q.len() {
        m.step().unwrap();
    }
    assert_eq!(m.len(), 1);
    assert_eq!(m.chart().get(0, 1).unwrap().complete.len(), 2);
}

#[test]
fn unknown_word_is_reported() {
    let code = running();
    assert_eq!(assemble_query(&code, &["nope"]), Err(MachineError::UnknownWord("nope".into())));
}

#[test]
fn empty_input_succeeds_only_through_empty_categories() {
    let with = object("bot sub [s]. s sub []. empty s. start s.");
    assert_eq!(parse(&with, &[], DEFAULT_BUDGET).unwrap().results.len(), 1);
    let code = running();
    assert!(parse(&code, &[], DEFAULT_BUDGET).unwrap().results.is_empty());
}

#[test]
fn no_spanning_edge_means_no_results() {
    let code = running();
    let out = parse(&code, &["w", "w"], DEFAULT_BUDGET).unwrap();
    assert!(out.results.is_empty());
}

#[test]
fn heap_stays_well_formed_while_parsing() {
    let code = object(include_str!("../../corpus/example.ale"));
    let h = &code.hierarchy;
    let mut m = Machine::new(&code, &["john", "loves", "her"]).unwrap();
    loop {
        let top = m.h();
        for (a, cell) in m.heap().iter().enumerate() {
            match *cell {
                Cell::Ref(b) => assert!(b < top, "REF {b} at {a} beyond {top}"),
                Cell::Str(t) => assert!(a + h.arity(t) < top),
                Cell::Var(_) => {}
            }
        }
        if m.step().unwrap() == Status::Halted {
            break;
        }
    }
    assert_eq!(m.outcome().results.len(), 1);
}

#[test]
fn budget_is_enforced() {
    let code = object(include_str!("../../corpus/example.ale"));
    let err = parse(&code, &["john", "loves", "her"], 50).unwrap_err();
    assert_eq!(err, MachineError::BudgetExhausted(50));
}

#[test]
fn trace_reports_edges() {
    let code = running();
    let mut lines = Vec::new();
    {
        let mut m = Machine::new(&code, &["x", "y"]).unwrap();
        m.set_trace(1, |s| lines.push(s.to_string()));
        m.run().unwrap();
    }
    assert!(lines.iter().any(|l| l.starts_with("complete edge [0,1]")));
    assert!(lines.iter().any(|l| l.starts_with("complete edge [0,2]")));
}
