//! The built-in goals `append` and `union`, written once over any store of
//! feature structure nodes so that the machine heap and the reference
//! builder share the same algorithm.

use thiserror::Error;

use crate::compiler::GoalKind;
use crate::types::{FeatId, Hierarchy, TypeId};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GoalError {
    #[error("first argument of append is not a list")]
    NotAList,
    #[error("first argument of union is not a set")]
    NotASet,
    #[error("the result does not unify with the third argument")]
    Clash,
    #[error("the hierarchy lacks the types `{0}`")]
    MissingEncoding(String),
}

pub trait GoalStore {
    type Node: Copy;

    fn hierarchy(&self) -> &Hierarchy;
    fn type_of(&mut self, n: Self::Node) -> TypeId;
    /// Raises the type of `n` to at least `t`.
    fn constrain(&mut self, n: Self::Node, t: TypeId) -> bool;
    /// The value of `f` at `n`, materialized if it was left implicit.
    fn value(&mut self, n: Self::Node, f: FeatId) -> Self::Node;
    /// A new node of type `t` whose listed features point at the given nodes.
    fn cons(&mut self, t: TypeId, arcs: &[(FeatId, Self::Node)]) -> Self::Node;
    fn unify(&mut self, a: Self::Node, b: Self::Node) -> bool;
}

struct Encoding {
    empty: TypeId,
    nonempty: TypeId,
    first: FeatId,
    rest: FeatId,
}

fn encoding(h: &Hierarchy, kind: GoalKind) -> Result<Encoding, GoalError> {
    let [e, ne, first, rest] = kind.encoding();
    let missing = || GoalError::MissingEncoding(kind.encoding().join(", "));
    Ok(Encoding {
        empty: h.lookup(e).ok_or_else(missing)?,
        nonempty: h.lookup(ne).ok_or_else(missing)?,
        first: h.feature(first).ok_or_else(missing)?,
        rest: h.feature(rest).ok_or_else(missing)?,
    })
}

/// Concatenates the elements of the first argument in front of the second
/// and unifies the result with the third. A first argument whose type still
/// allows the empty list or set is taken to be empty.
pub fn eval_goal<S: GoalStore>(s: &mut S, kind: GoalKind, args: [S::Node; 3]) -> Result<(), GoalError> {
    let enc = encoding(s.hierarchy(), kind)?;
    let not_a = match kind {
        GoalKind::Append => GoalError::NotAList,
        GoalKind::Union => GoalError::NotASet,
    };
    let mut elements = Vec::new();
    let mut cur = args[0];
    loop {
        let t = s.type_of(cur);
        if s.hierarchy().lub(t, enc.empty).is_some() {
            if !s.constrain(cur, enc.empty) {
                return Err(not_a);
            }
            break;
        }
        if !s.hierarchy().subsumes(enc.nonempty, t) {
            return Err(not_a);
        }
        elements.push(s.value(cur, enc.first));
        cur = s.value(cur, enc.rest);
    }
    let mut tail = args[1];
    for &e in elements.iter().rev() {
        tail = s.cons(enc.nonempty, &[(enc.first, e), (enc.rest, tail)]);
    }
    if s.unify(tail, args[2]) {
        Ok(())
    } else {
        Err(GoalError::Clash)
    }
}

impl GoalStore for crate::afs::Builder<'_> {
    type Node = usize;

    fn hierarchy(&self) -> &Hierarchy {
        crate::afs::Builder::hierarchy(self)
    }

    fn type_of(&mut self, n: usize) -> TypeId {
        crate::afs::Builder::type_of(self, n)
    }

    fn constrain(&mut self, n: usize, t: TypeId) -> bool {
        crate::afs::Builder::constrain(self, n, t).is_ok()
    }

    fn value(&mut self, n: usize, f: FeatId) -> usize {
        let r = crate::afs::Builder::hierarchy(self).restriction(f);
        self.ensure_arc(n, f, r).expect("feature is appropriate for a non-empty node")
    }

    fn cons(&mut self, t: TypeId, arcs: &[(FeatId, usize)]) -> usize {
        let q = self.node(t);
        for &(f, r) in arcs {
            self.add_arc(q, f, r).expect("fresh node accepts its own features");
        }
        q
    }

    fn unify(&mut self, a: usize, b: usize) -> bool {
        self.union(a, b).is_ok()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::afs::Builder;
    use crate::compiler::parse_hierarchy_text;
    use crate::term::{parse_term, render};
    use crate::tfs::Tfs;

    const LISTS: &str = "bot sub [list, atom].
  list sub [e_list, ne_list].
    e_list sub [].
    ne_list sub [] intro [hd:bot, tl:list].
  atom sub [x, y, z].
    x sub []. y sub []. z sub [].";

    fn run(a: &str, b: &str, c: &str) -> Result<String, GoalError> {
        let h = parse_hierarchy_text(LISTS).unwrap();
        let mut bld = Builder::new(&h);
        let mut roots = Vec::new();
        for t in [a, b, c] {
            let tfs = parse_term(&h, t).unwrap();
            roots.push(bld.add_amrs(&tfs.abs().unwrap())[0]);
        }
        eval_goal(&mut bld, GoalKind::Append, [roots[0], roots[1], roots[2]])?;
        let (g, r) = bld.to_graph(&[roots[2]]);
        Ok(render(&h, &Tfs::new(g, r[0])))
    }

    #[test]
    fn append_empty_is_identity() {
        assert_eq!(run("e_list", "ne_list(x, e_list)", "list").unwrap(), "ne_list(x, e_list)");
    }

    #[test]
    fn append_concatenates() {
        let out = run("ne_list(x, e_list)", "ne_list(y, ne_list(z, e_list))", "list").unwrap();
        assert_eq!(out, "ne_list(x, ne_list(y, ne_list(z, e_list)))");
    }

    #[test]
    fn append_rejects_non_lists() {
        assert_eq!(run("x", "e_list", "list"), Err(GoalError::NotAList));
    }

    #[test]
    fn append_result_must_unify() {
        assert_eq!(run("ne_list(x, e_list)", "e_list", "e_list"), Err(GoalError::Clash));
    }
}
