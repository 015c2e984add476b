//! Abstract feature structures and their multi-rooted generalization: sets
//! of (indexed) paths with a typing and a reentrancy relation.
//!
//! An [`Amrs`] stores every path together with the number of its
//! reentrancy class; classes are numbered by first appearance in path
//! order, so two values are equal exactly when they denote the same
//! abstract structure. Root indices inside path keys count from 0, while
//! the index arguments of the public operations count from 1.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use thiserror::Error;

use crate::tfs::Path;
use crate::types::{FeatId, Hierarchy, TypeId};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AfsError {
    #[error("unification failure")]
    Inconsistent,
    #[error("the result is cyclic and has infinitely many paths")]
    Cyclic,
    #[error("index {index} out of range for a structure of length {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("appropriateness loop prevents total well-typing")]
    InfiniteExpansion,
}

pub type IndexedPath = (usize, Path);

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Amrs {
    len: usize,
    paths: BTreeMap<IndexedPath, u32>,
    classes: Vec<TypeId>,
}

/// A single-rooted abstract structure.
pub type Afs = Amrs;

/// Unnormalized input for [`Amrs::normalize`]: a prefix-closed typed path
/// set and a list of path pairs that must be reentrant.
#[derive(Clone, Debug, Default)]
pub struct PreAmrs {
    pub len: usize,
    pub types: BTreeMap<IndexedPath, TypeId>,
    pub equiv: Vec<(IndexedPath, IndexedPath)>,
}

impl Amrs {
    /// The empty sequence.
    pub fn lambda() -> Amrs {
        Amrs { len: 0, paths: BTreeMap::new(), classes: Vec::new() }
    }

    pub fn atomic(t: TypeId) -> Amrs {
        let mut paths = BTreeMap::new();
        paths.insert((0, Vec::new()), 0);
        Amrs { len: 1, paths, classes: vec![t] }
    }

    /// Builds the canonical form from paths labelled by arbitrary node ids.
    pub fn from_node_paths<N: Copy + Eq + std::hash::Hash + Into<usize>>(
        len: usize,
        node_paths: BTreeMap<IndexedPath, N>,
        node_types: &[TypeId],
    ) -> Amrs {
        let mut ids: HashMap<N, u32> = HashMap::new();
        let mut classes = Vec::new();
        let mut paths = BTreeMap::new();
        for (key, node) in node_paths {
            let next = ids.len() as u32;
            let id = *ids.entry(node).or_insert_with(|| {
                classes.push(node_types[node.into()]);
                next
            });
            paths.insert(key, id);
        }
        Amrs { len, paths, classes }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn paths(&self) -> impl Iterator<Item = (&IndexedPath, &u32)> {
        self.paths.iter()
    }

    pub fn path_count(&self) -> usize {
        self.paths.len()
    }

    pub fn class_types(&self) -> &[TypeId] {
        &self.classes
    }

    pub fn class_of(&self, index: usize, path: &[FeatId]) -> Option<u32> {
        self.paths.get(&(index, path.to_vec())).copied()
    }

    pub fn type_at(&self, index: usize, path: &[FeatId]) -> Option<TypeId> {
        self.class_of(index, path).map(|c| self.classes[c as usize])
    }

    pub fn root_type(&self, index: usize) -> TypeId {
        self.type_at(index, &[]).expect("every index has a root path")
    }

    pub fn reentrant(&self, a: &IndexedPath, b: &IndexedPath) -> bool {
        match (self.paths.get(a), self.paths.get(b)) {
            (Some(x), Some(y)) => x == y,
            _ => false,
        }
    }

    /// Keeps the listed indices (0-based, in the given order) and drops
    /// everything reachable only through the others.
    pub fn restrict(&self, keep: &[usize]) -> Amrs {
        let position: HashMap<usize, usize> =
            keep.iter().enumerate().map(|(new, &old)| (old, new)).collect();
        let mut node_paths = BTreeMap::new();
        for ((i, p), c) in &self.paths {
            if let Some(&new) = position.get(i) {
                node_paths.insert((new, p.clone()), *c as usize);
            }
        }
        Amrs::from_node_paths(keep.len(), node_paths, &self.classes)
    }

    /// Elements `j..=k` (1-based); `j == k + 1` yields the empty sequence.
    pub fn substructure(&self, j: usize, k: usize) -> Result<Amrs, AfsError> {
        if j == 0 || k > self.len || j > k + 1 {
            return Err(AfsError::IndexOutOfRange { index: if j == 0 { j } else { k }, len: self.len });
        }
        Ok(self.restrict(&(j - 1..k).collect::<Vec<_>>()))
    }

    pub fn element(&self, j: usize) -> Result<Afs, AfsError> {
        self.substructure(j, j)
    }

    pub fn concat(&self, other: &Amrs) -> Amrs {
        let mut node_paths = BTreeMap::new();
        for ((i, p), c) in &self.paths {
            node_paths.insert((*i, p.clone()), *c as usize);
        }
        let offset = self.classes.len();
        for ((i, p), c) in &other.paths {
            node_paths.insert((i + self.len, p.clone()), *c as usize + offset);
        }
        let mut types = self.classes.clone();
        types.extend_from_slice(&other.classes);
        Amrs::from_node_paths(self.len + other.len, node_paths, &types)
    }

    /// `self ⪯ other`: every path, reentrancy and type of `self` is present
    /// in or refined by `other`.
    pub fn subsumes(&self, h: &Hierarchy, other: &Amrs) -> bool {
        if self.len != other.len {
            return false;
        }
        let mut image: Vec<Option<u32>> = vec![None; self.classes.len()];
        for (key, c) in &self.paths {
            let Some(&oc) = other.paths.get(key) else { return false };
            match image[*c as usize] {
                Some(prev) if prev != oc => return false,
                Some(_) => {}
                None => {
                    if !h.subsumes(self.classes[*c as usize], other.classes[oc as usize]) {
                        return false;
                    }
                    image[*c as usize] = Some(oc);
                }
            }
        }
        true
    }

    /// Least fusion-closed extension, then the induced equivalence, then
    /// class-wise type join.
    pub fn normalize(h: &Hierarchy, pre: &PreAmrs) -> Result<Amrs, AfsError> {
        let mut b = Builder::new(h);
        let mut nodes: BTreeMap<&IndexedPath, usize> = BTreeMap::new();
        for (key, t) in &pre.types {
            let q = b.node(*t);
            nodes.insert(key, q);
        }
        for (i, p) in pre.types.keys() {
            if let Some((last, prefix)) = p.split_last() {
                let parent = nodes[&(*i, prefix.to_vec())];
                let child = nodes[&(*i, p.clone())];
                b.add_arc(parent, *last, child)?;
            }
        }
        for (x, y) in &pre.equiv {
            b.union(nodes[x], nodes[y])?;
        }
        let roots: Vec<usize> = (0..pre.len).map(|i| nodes[&(i, Vec::new())]).collect();
        b.to_amrs(&roots)
    }

    pub fn unify(h: &Hierarchy, a: &Amrs, b: &Amrs) -> Result<Amrs, AfsError> {
        if a.len != b.len {
            return Err(AfsError::IndexOutOfRange { index: b.len, len: a.len });
        }
        let all: Vec<usize> = (1..=a.len).collect();
        Amrs::unify_in_context(h, a, &all, b)
    }

    /// `(a, J) ⊔ b` with 1-based `J`. An operand of length `|J|` other than
    /// `a`'s own length is aligned positionally with `J`; otherwise
    /// index `j ∈ J` of `b` meets index `j` of `a`.
    pub fn unify_in_context(h: &Hierarchy, a: &Amrs, j: &[usize], b: &Amrs) -> Result<Amrs, AfsError> {
        for &x in j {
            if x == 0 || x > a.len {
                return Err(AfsError::IndexOutOfRange { index: x, len: a.len });
            }
        }
        let pairs: Vec<(usize, usize)> = if b.len == a.len {
            j.iter().map(|&x| (x - 1, x - 1)).collect()
        } else if b.len == j.len() {
            j.iter().enumerate().map(|(k, &x)| (k, x - 1)).collect()
        } else {
            return Err(AfsError::IndexOutOfRange { index: b.len, len: j.len() });
        };
        let mut builder = Builder::new(h);
        let roots = builder.add_amrs(a);
        let from_b = builder.add_amrs_indices(b, &pairs.iter().map(|p| p.0).collect::<Vec<_>>());
        for (k, &(_, target)) in pairs.iter().enumerate() {
            builder.union(roots[target], from_b[k])?;
        }
        builder.to_amrs(&roots)
    }

    /// Adds every appropriate but missing feature with its most general value.
    pub fn totally_well_typed(&self, h: &Hierarchy) -> Result<Amrs, AfsError> {
        let mut b = Builder::new(h);
        let roots = b.add_amrs(self);
        b.expand_all(&roots)?;
        b.to_amrs(&roots)
    }

    /// Literal check of prefix closure, fusion closure and per-index
    /// non-emptiness on the stored finite sets.
    pub fn is_normal(&self) -> bool {
        for i in 0..self.len {
            if !self.paths.contains_key(&(i, Vec::new())) {
                return false;
            }
        }
        for (i, p) in self.paths.keys() {
            if let Some((_, prefix)) = p.split_last() {
                if !self.paths.contains_key(&(*i, prefix.to_vec())) {
                    return false;
                }
            }
        }
        let mut by_class: BTreeMap<u32, Vec<&IndexedPath>> = BTreeMap::new();
        for (k, c) in &self.paths {
            by_class.entry(*c).or_default().push(k);
        }
        for ((i, p), c) in &self.paths {
            for (pi, pp) in &by_class[c] {
                for ((qi, q), qc) in self.paths.range((*i, p.clone())..) {
                    if qi != i || !q.starts_with(p) {
                        break;
                    }
                    let mut moved = pp.clone();
                    moved.extend_from_slice(&q[p.len()..]);
                    if self.paths.get(&(*pi, moved)) != Some(qc) {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// All indices (0-based) of classes shared between different roots.
    pub fn cross_reentrancies(&self) -> BTreeSet<u32> {
        let mut owner: HashMap<u32, usize> = HashMap::new();
        let mut shared = BTreeSet::new();
        for ((i, _), c) in &self.paths {
            match owner.get(c) {
                Some(o) if o != i => {
                    shared.insert(*c);
                }
                Some(_) => {}
                None => {
                    owner.insert(*c, *i);
                }
            }
        }
        shared
    }
}

/// Incremental congruence closure over typed graphs. Nodes are merged with
/// union-find; merging two nodes joins their types and merges their
/// outgoing arcs feature by feature.
pub struct Builder<'h> {
    h: &'h Hierarchy,
    parent: Vec<usize>,
    ty: Vec<TypeId>,
    arcs: Vec<Vec<(FeatId, usize)>>,
}

impl<'h> Builder<'h> {
    pub fn new(h: &'h Hierarchy) -> Self {
        Builder { h, parent: Vec::new(), ty: Vec::new(), arcs: Vec::new() }
    }

    pub fn hierarchy(&self) -> &'h Hierarchy {
        self.h
    }

    pub fn node(&mut self, t: TypeId) -> usize {
        self.parent.push(self.parent.len());
        self.ty.push(t);
        self.arcs.push(Vec::new());
        self.parent.len() - 1
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub fn type_of(&mut self, x: usize) -> TypeId {
        let r = self.find(x);
        self.ty[r]
    }

    pub fn arc(&mut self, q: usize, f: FeatId) -> Option<usize> {
        let r = self.find(q);
        let found = self.arcs[r].iter().find(|a| a.0 == f).map(|a| a.1)?;
        Some(self.find(found))
    }

    pub fn arcs_of(&mut self, q: usize) -> Vec<(FeatId, usize)> {
        let r = self.find(q);
        let mut out = self.arcs[r].clone();
        for a in &mut out {
            a.1 = self.find(a.1);
        }
        out.sort();
        out
    }

    pub fn constrain(&mut self, q: usize, t: TypeId) -> Result<(), AfsError> {
        let r = self.find(q);
        self.ty[r] = self.h.lub(self.ty[r], t).ok_or(AfsError::Inconsistent)?;
        Ok(())
    }

    pub fn add_arc(&mut self, q: usize, f: FeatId, to: usize) -> Result<(), AfsError> {
        match self.arc(q, f) {
            Some(existing) => self.union(existing, to),
            None => {
                let r = self.find(q);
                self.arcs[r].push((f, to));
                Ok(())
            }
        }
    }

    /// The node at `f` from `q`, created with type `t` when missing.
    pub fn ensure_arc(&mut self, q: usize, f: FeatId, t: TypeId) -> Result<usize, AfsError> {
        if let Some(r) = self.arc(q, f) {
            self.constrain(r, t)?;
            return Ok(r);
        }
        let r = self.node(t);
        self.add_arc(q, f, r)?;
        Ok(r)
    }

    pub fn union(&mut self, a: usize, b: usize) -> Result<(), AfsError> {
        let mut work = vec![(a, b)];
        while let Some((x, y)) = work.pop() {
            let (x, y) = (self.find(x), self.find(y));
            if x == y {
                continue;
            }
            let t = self.h.lub(self.ty[x], self.ty[y]).ok_or(AfsError::Inconsistent)?;
            self.parent[y] = x;
            self.ty[x] = t;
            let moved = std::mem::take(&mut self.arcs[y]);
            for (f, r) in moved {
                match self.arcs[x].iter().find(|a| a.0 == f) {
                    Some(&(_, s)) => work.push((s, r)),
                    None => self.arcs[x].push((f, r)),
                }
            }
        }
        Ok(())
    }

    /// Copies every element of `a`; returns the root node of each index.
    pub fn add_amrs(&mut self, a: &Amrs) -> Vec<usize> {
        self.add_amrs_indices(a, &(0..a.len).collect::<Vec<_>>())
    }

    /// Copies the listed 0-based indices of `a`, keeping only the classes
    /// reachable from them.
    pub fn add_amrs_indices(&mut self, a: &Amrs, keep: &[usize]) -> Vec<usize> {
        let mut class_node: Vec<Option<usize>> = vec![None; a.classes.len()];
        let wanted: BTreeSet<usize> = keep.iter().copied().collect();
        for ((i, p), c) in &a.paths {
            if !wanted.contains(i) {
                continue;
            }
            let q = match class_node[*c as usize] {
                Some(q) => q,
                None => {
                    let q = self.node(a.classes[*c as usize]);
                    class_node[*c as usize] = Some(q);
                    q
                }
            };
            if let Some((last, prefix)) = p.split_last() {
                let parent = class_node[a.paths[&(*i, prefix.to_vec())] as usize]
                    .expect("prefixes sort first");
                let r = self.find(parent);
                if !self.arcs[r].iter().any(|x| x.0 == *last) {
                    self.arcs[r].push((*last, q));
                }
            }
        }
        keep.iter()
            .map(|&i| class_node[a.paths[&(i, Vec::new())] as usize].expect("root present"))
            .collect()
    }

    /// Adds missing appropriate arcs below `roots` until total.
    pub fn expand_all(&mut self, roots: &[usize]) -> Result<(), AfsError> {
        let mut work: Vec<(usize, usize)> = roots.iter().map(|&r| (r, 0)).collect();
        let mut done = BTreeSet::new();
        while let Some((q, depth)) = work.pop() {
            let q = self.find(q);
            if !done.insert(q) {
                continue;
            }
            if depth > self.h.len() + 1 {
                return Err(AfsError::InfiniteExpansion);
            }
            let t = self.ty[q];
            for slot in self.h.features_of(t).to_vec() {
                let r = self.ensure_arc(q, slot.feature, slot.restriction)?;
                work.push((r, depth + 1));
            }
            for (_, r) in self.arcs_of(q) {
                work.push((r, depth + 1));
            }
        }
        Ok(())
    }

    fn reachable_cycle(&mut self, roots: &[usize]) -> bool {
        let mut color: HashMap<usize, u8> = HashMap::new();
        for &root in roots {
            let root = self.find(root);
            if color.contains_key(&root) {
                continue;
            }
            let mut stack: Vec<(usize, Vec<usize>)> = Vec::new();
            color.insert(root, 1);
            let kids: Vec<usize> = self.arcs_of(root).into_iter().map(|a| a.1).collect();
            stack.push((root, kids));
            while let Some((q, kids)) = stack.last_mut() {
                match kids.pop() {
                    Some(next) => match color.get(&next) {
                        Some(1) => return true,
                        Some(_) => {}
                        None => {
                            color.insert(next, 1);
                            let k: Vec<usize> = self.arcs_of(next).into_iter().map(|a| a.1).collect();
                            stack.push((next, k));
                        }
                    },
                    None => {
                        color.insert(*q, 2);
                        stack.pop();
                    }
                }
            }
        }
        false
    }

    /// The merged graph restricted to what `roots` reach; cycles are kept.
    pub fn to_graph(&mut self, roots: &[usize]) -> (crate::tfs::Graph, Vec<usize>) {
        let mut g = crate::tfs::Graph::default();
        for q in 0..self.parent.len() {
            g.add_node(self.ty[q]);
        }
        for q in 0..self.parent.len() {
            if self.find(q) == q {
                for (f, r) in self.arcs_of(q) {
                    g.set_arc(q, f, r);
                }
            }
        }
        let reps: Vec<usize> = roots.iter().map(|&r| self.find(r)).collect();
        g.restrict(&reps)
    }

    pub fn to_amrs(&mut self, roots: &[usize]) -> Result<Amrs, AfsError> {
        if self.reachable_cycle(roots) {
            return Err(AfsError::Cyclic);
        }
        let mut node_paths: BTreeMap<IndexedPath, usize> = BTreeMap::new();
        for (i, &root) in roots.iter().enumerate() {
            let mut stack = vec![(Vec::new(), self.find(root))];
            while let Some((p, q)) = stack.pop() {
                for (f, r) in self.arcs_of(q) {
                    let mut np = p.clone();
                    np.push(f);
                    stack.push((np, r));
                }
                node_paths.insert((i, p), q);
            }
        }
        Ok(Amrs::from_node_paths(roots.len(), node_paths, &self.ty))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::CharStatement;

    fn running() -> Hierarchy {
        Hierarchy::compile(&[
            CharStatement::new("bot", &["g", "d"], &[]),
            CharStatement::new("g", &["a", "b"], &[("f3", "d")]),
            CharStatement::new("a", &["c"], &[("f1", "bot")]),
            CharStatement::new("c", &[], &[("f4", "bot")]),
            CharStatement::new("b", &["c", "e"], &[("f2", "bot")]),
            CharStatement::new("e", &[], &[]),
            CharStatement::new("d", &["d1", "d2"], &[]),
            CharStatement::new("d1", &[], &[]),
            CharStatement::new("d2", &[], &[]),
        ])
        .unwrap()
    }

    #[test]
    fn fusion_adds_suffix_of_reentrant_path() {
        let h = running();
        let (f, g, hh) = (FeatId(0), FeatId(1), FeatId(2));
        let mut pre = PreAmrs { len: 1, ..Default::default() };
        for p in [vec![], vec![f], vec![g], vec![f, hh]] {
            pre.types.insert((0, p), TypeId::BOTTOM);
        }
        pre.equiv.push(((0, vec![f]), (0, vec![g])));
        let a = Amrs::normalize(&h, &pre).unwrap();
        assert_eq!(a.path_count(), 5);
        assert!(a.reentrant(&(0, vec![f, hh]), &(0, vec![g, hh])));
        assert!(a.is_normal());
    }

    #[test]
    fn joined_class_gets_lub_type() {
        let h = running();
        let (f, g) = (FeatId(0), FeatId(1));
        let mut pre = PreAmrs { len: 1, ..Default::default() };
        pre.types.insert((0, vec![]), TypeId::BOTTOM);
        pre.types.insert((0, vec![f]), h.lookup("a").unwrap());
        pre.types.insert((0, vec![g]), h.lookup("b").unwrap());
        pre.equiv.push(((0, vec![f]), (0, vec![g])));
        let a = Amrs::normalize(&h, &pre).unwrap();
        assert_eq!(a.type_at(0, &[f]), h.lookup("c"));
        assert_eq!(a.type_at(0, &[g]), h.lookup("c"));
    }

    #[test]
    fn incompatible_atoms_fail() {
        let h = running();
        let g = Amrs::atomic(h.lookup("g").unwrap());
        let d = Amrs::atomic(h.lookup("d").unwrap());
        assert_eq!(Amrs::unify(&h, &g, &d), Err(AfsError::Inconsistent));
    }

    #[test]
    fn lambda_is_concat_identity() {
        let h = running();
        let a = Amrs::atomic(h.lookup("a").unwrap()).concat(&Amrs::atomic(TypeId::BOTTOM));
        assert_eq!(a.concat(&Amrs::lambda()), a);
        assert_eq!(Amrs::lambda().concat(&a), a);
        assert_eq!(a.substructure(3, 2).unwrap(), Amrs::lambda());
    }
}
