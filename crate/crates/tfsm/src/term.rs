//! Linear term notation for feature structures, e.g. `b(b(#1 d, #1), d)`.
//!
//! Arguments are positional and follow the feature order of the node's
//! type. A bare type name stands for the most general structure of that
//! type, and `#n` tags mark shared nodes. Parsing checks arity only, so
//! terms that are not well typed can still be written down.

use std::collections::HashMap;

use thiserror::Error;

use crate::tfs::{Graph, Mrs, NodeId, Tfs};
use crate::types::{Hierarchy, TypeId};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TermError {
    #[error("column {col}: {msg}")]
    Syntax { col: usize, msg: String },
    #[error("unknown type `{0}`")]
    UnknownType(String),
    #[error("type `{ty}` has {expected} features but {found} arguments were given")]
    Arity { ty: String, expected: usize, found: usize },
    #[error("tag #{0} is given a type twice")]
    TagRedefined(u32),
}

struct Parser<'a> {
    h: &'a Hierarchy,
    src: &'a [u8],
    pos: usize,
    graph: Graph,
    tags: HashMap<u32, NodeId>,
    defined: HashMap<u32, bool>,
}

impl Parser<'_> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn err<T>(&self, msg: &str) -> Result<T, TermError> {
        Err(TermError::Syntax { col: self.pos + 1, msg: msg.to_string() })
    }

    fn name(&mut self) -> Option<String> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && !b"(),# \t\r\n".contains(&self.src[self.pos]) {
            self.pos += 1;
        }
        (self.pos > start).then(|| String::from_utf8_lossy(&self.src[start..self.pos]).into_owned())
    }

    fn term(&mut self) -> Result<NodeId, TermError> {
        let mut tag = None;
        if self.peek() == Some(b'#') {
            self.pos += 1;
            let start = self.pos;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            let n: u32 = std::str::from_utf8(&self.src[start..self.pos])
                .ok()
                .and_then(|s| s.parse().ok())
                .map_or_else(|| self.err("expected a tag number"), Ok)?;
            tag = Some(n);
        }
        let name = match self.peek() {
            Some(c) if !b"(),#".contains(&c) => self.name(),
            _ => None,
        };
        let node = match tag {
            Some(n) => *self.tags.entry(n).or_insert_with(|| self.graph.add_node(TypeId::BOTTOM)),
            None => self.graph.add_node(TypeId::BOTTOM),
        };
        let Some(name) = name else {
            return if tag.is_some() { Ok(node) } else { self.err("expected a type or a tag") };
        };
        if let Some(n) = tag {
            if self.defined.insert(n, true).is_some() {
                return Err(TermError::TagRedefined(n));
            }
        }
        let t = self.h.lookup(&name).ok_or_else(|| TermError::UnknownType(name.clone()))?;
        self.graph.types[node] = t;
        if self.peek() == Some(b'(') {
            self.pos += 1;
            let mut args = Vec::new();
            loop {
                args.push(self.term()?);
                match self.peek() {
                    Some(b',') => self.pos += 1,
                    Some(b')') => {
                        self.pos += 1;
                        break;
                    }
                    _ => return self.err("expected `,` or `)`"),
                }
            }
            let slots = self.h.features_of(t);
            if slots.len() != args.len() {
                return Err(TermError::Arity { ty: name, expected: slots.len(), found: args.len() });
            }
            for (slot, arg) in slots.iter().zip(args) {
                self.graph.set_arc(node, slot.feature, arg);
            }
        }
        Ok(node)
    }
}

/// Parses a comma-separated sequence of terms sharing one tag scope.
pub fn parse_terms(h: &Hierarchy, text: &str) -> Result<Mrs, TermError> {
    let mut p = Parser {
        h,
        src: text.as_bytes(),
        pos: 0,
        graph: Graph::default(),
        tags: HashMap::new(),
        defined: HashMap::new(),
    };
    let mut roots = vec![p.term()?];
    while p.peek() == Some(b',') {
        p.pos += 1;
        roots.push(p.term()?);
    }
    if p.peek().is_some() {
        return p.err("trailing input");
    }
    let (graph, roots) = p.graph.restrict(&roots);
    Ok(Mrs { graph, roots })
}

pub fn parse_term(h: &Hierarchy, text: &str) -> Result<Tfs, TermError> {
    let m = parse_terms(h, text)?;
    if m.roots.len() != 1 {
        return Err(TermError::Syntax { col: 1, msg: "expected a single term".into() });
    }
    Ok(Tfs { root: m.roots[0], graph: m.graph })
}

/// Nodes that need a tag: reached more than once or by a cycle.
pub(crate) fn shared_nodes(graph: &Graph, roots: &[NodeId]) -> Vec<bool> {
    let mut indeg = vec![0usize; graph.len()];
    for &r in roots {
        indeg[r] += 1;
    }
    let mut seen = vec![false; graph.len()];
    let mut stack: Vec<NodeId> = roots.to_vec();
    while let Some(q) = stack.pop() {
        if std::mem::replace(&mut seen[q], true) {
            continue;
        }
        for &(_, r) in &graph.arcs[q] {
            indeg[r] += 1;
            stack.push(r);
        }
    }
    indeg.into_iter().map(|d| d > 1).collect()
}

/// Whether `q` carries no information beyond its type: untagged, and every
/// feature missing or filled by an equally uninformative value of exactly
/// the appropriate type.
pub(crate) fn most_general(h: &Hierarchy, graph: &Graph, shared: &[bool], q: NodeId) -> bool {
    fn go(h: &Hierarchy, g: &Graph, shared: &[bool], q: NodeId, depth: usize) -> bool {
        if shared[q] || depth > g.len() {
            return false;
        }
        h.features_of(g.types[q]).iter().all(|slot| match g.arc(q, slot.feature) {
            None => true,
            Some(r) => g.types[r] == slot.restriction && go(h, g, shared, r, depth + 1),
        })
    }
    go(h, graph, shared, q, 0)
}

struct Printer<'a> {
    h: &'a Hierarchy,
    g: &'a Graph,
    shared: Vec<bool>,
    tag_of: HashMap<NodeId, usize>,
    out: String,
}

impl Printer<'_> {
    fn node(&mut self, q: NodeId) {
        if self.shared[q] {
            if let Some(n) = self.tag_of.get(&q) {
                self.out.push_str(&format!("#{n}"));
                return;
            }
            let n = self.tag_of.len() + 1;
            self.tag_of.insert(q, n);
            self.out.push_str(&format!("#{n} "));
        }
        let t = self.g.types[q];
        self.out.push_str(self.h.name(t));
        let slots = self.h.features_of(t);
        let expand = slots.iter().any(|s| match self.g.arc(q, s.feature) {
            None => false,
            Some(r) => self.g.types[r] != s.restriction || !most_general(self.h, self.g, &self.shared, r),
        });
        if !expand {
            return;
        }
        self.out.push('(');
        for (k, slot) in slots.iter().enumerate() {
            if k > 0 {
                self.out.push_str(", ");
            }
            match self.g.arc(q, slot.feature) {
                Some(r) => self.node(r),
                None => self.out.push_str(self.h.name(slot.restriction)),
            }
        }
        self.out.push(')');
    }
}

/// Canonical text of a sequence of structures; tags are numbered in order of
/// first appearance. Equal output means alphabetic variants up to nodes that
/// carry no information.
pub fn render_mrs(h: &Hierarchy, m: &Mrs) -> String {
    let mut p = Printer {
        h,
        g: &m.graph,
        shared: shared_nodes(&m.graph, &m.roots),
        tag_of: HashMap::new(),
        out: String::new(),
    };
    for (k, &r) in m.roots.iter().enumerate() {
        if k > 0 {
            p.out.push_str(", ");
        }
        p.node(r);
    }
    p.out
}

pub fn render(h: &Hierarchy, a: &Tfs) -> String {
    render_mrs(h, &Mrs { graph: a.graph.clone(), roots: vec![a.root] })
}

/// Drops nodes that carry no information, keeping shared and typed ones.
pub fn prune(h: &Hierarchy, a: &Tfs) -> Tfs {
    let shared = shared_nodes(&a.graph, &[a.root]);
    let mut g = a.graph.clone();
    for q in 0..g.len() {
        let keep: Vec<_> = g.arcs[q]
            .iter()
            .copied()
            .filter(|&(f, r)| {
                !(g.types[r] == h.restriction(f) && most_general(h, &a.graph, &shared, r))
            })
            .collect();
        g.arcs[q] = keep;
    }
    Tfs::new(g, a.root)
}
