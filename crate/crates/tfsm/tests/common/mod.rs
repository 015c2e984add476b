#![allow(dead_code)]

pub mod algebra;

use tfsm::tfs::{Graph, Tfs};
use tfsm::types::{Hierarchy, TypeId};

pub const RUNNING: &str = include_str!("../../corpus/running.ale");

/// Reads choices off a fixed tape, wrapping around when it runs out.
pub struct Tape<'a> {
    bytes: &'a [u32],
    pos: usize,
}

impl<'a> Tape<'a> {
    pub fn new(bytes: &'a [u32]) -> Self {
        Tape { bytes, pos: 0 }
    }

    pub fn pick(&mut self, n: usize) -> usize {
        if n <= 1 || self.bytes.is_empty() {
            return 0;
        }
        let v = self.bytes[self.pos % self.bytes.len()];
        self.pos += 1;
        v as usize % n
    }

    pub fn chance(&mut self, percent: usize) -> bool {
        self.pick(100) < percent
    }
}

/// Every type at or below `t`.
pub fn subtypes(h: &Hierarchy, t: TypeId) -> Vec<TypeId> {
    h.types().filter(|&s| h.subsumes(t, s)).collect()
}

/// A random acyclic, totally well-typed structure of depth at most `depth`
/// whose root is subsumed by `restriction`. Finished nodes may be reused
/// to create reentrancies.
pub fn random_tfs(h: &Hierarchy, tape: &mut Tape, restriction: TypeId, depth: usize) -> Tfs {
    let mut g = Graph::default();
    let mut done: Vec<usize> = Vec::new();
    let root = grow(h, tape, &mut g, &mut done, restriction, depth);
    Tfs::new(g, root)
}

fn grow(h: &Hierarchy, tape: &mut Tape, g: &mut Graph, done: &mut Vec<usize>, restr: TypeId, depth: usize) -> usize {
    let reusable: Vec<usize> = done.iter().copied().filter(|&q| h.subsumes(restr, g.types[q])).collect();
    if !reusable.is_empty() && tape.chance(25) {
        return reusable[tape.pick(reusable.len())];
    }
    let mut choices: Vec<TypeId> = subtypes(h, restr)
        .into_iter()
        .filter(|&t| depth > 0 || h.arity(t) == 0)
        .collect();
    if depth > 0 && tape.chance(60) && choices.iter().any(|&t| h.arity(t) > 0) {
        choices.retain(|&t| h.arity(t) > 0);
    }
    let t = if choices.is_empty() { restr } else { choices[tape.pick(choices.len())] };
    let q = g.add_node(t);
    for slot in h.features_of(t).to_vec() {
        let r = grow(h, tape, g, done, slot.restriction, depth.saturating_sub(1));
        g.set_arc(q, slot.feature, r);
    }
    done.push(q);
    q
}

/// Strictly more general variants of `a`, one per applicable step: a node
/// is moved to a direct supertype that is still admissible, or a shared
/// node is split for one of its incoming arcs.
pub fn generalizations(h: &Hierarchy, a: &Tfs) -> Vec<Tfs> {
    let g = &a.graph;
    let mut incoming: Vec<Vec<(usize, usize)>> = vec![Vec::new(); g.len()];
    for (q, arcs) in g.arcs.iter().enumerate() {
        for (k, &(_, r)) in arcs.iter().enumerate() {
            incoming[r].push((q, k));
        }
    }
    let mut out = Vec::new();
    for (q, into) in incoming.iter().enumerate() {
        let t = g.types[q];
        for &s in h.direct_supertypes(t) {
            let admissible = into.iter().all(|&(p, k)| h.subsumes(h.restriction(g.arcs[p][k].0), s));
            if !admissible {
                continue;
            }
            let mut ng = g.clone();
            ng.types[q] = s;
            ng.arcs[q].retain(|&(f, _)| h.approp(f, s).is_some());
            out.push(Tfs::new(ng, a.root));
        }
        if incoming[q].len() > 1 {
            let (p, k) = incoming[q][0];
            let mut ng = g.clone();
            let copy = copy_subgraph(&mut ng, q);
            ng.arcs[p][k].1 = copy;
            out.push(Tfs::new(ng, a.root));
        }
    }
    out
}

fn copy_subgraph(g: &mut Graph, q: usize) -> usize {
    let c = g.add_node(g.types[q]);
    for (f, r) in g.arcs[q].clone() {
        let rc = copy_subgraph(g, r);
        g.set_arc(c, f, rc);
    }
    c
}
