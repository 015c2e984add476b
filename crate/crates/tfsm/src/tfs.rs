//! Concrete typed feature structures: rooted graphs with typed nodes and
//! feature-labelled arcs, plus their multi-rooted generalization.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::afs::Amrs;
use crate::types::{FeatId, Hierarchy, TypeId};

pub type NodeId = usize;
pub type Path = Vec<FeatId>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TfsError {
    #[error("operation needs an acyclic structure")]
    CyclicStructure,
    #[error("index {index} out of range for a structure of length {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("appropriateness loop prevents total well-typing")]
    InfiniteExpansion,
}

/// Node storage shared by `Tfs` and `Mrs`. Arcs of each node are kept
/// sorted by feature.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Graph {
    pub types: Vec<TypeId>,
    pub arcs: Vec<Vec<(FeatId, NodeId)>>,
}

impl Graph {
    pub fn add_node(&mut self, t: TypeId) -> NodeId {
        self.types.push(t);
        self.arcs.push(Vec::new());
        self.types.len() - 1
    }

    pub fn set_arc(&mut self, from: NodeId, f: FeatId, to: NodeId) {
        let arcs = &mut self.arcs[from];
        match arcs.binary_search_by_key(&f, |a| a.0) {
            Ok(i) => arcs[i].1 = to,
            Err(i) => arcs.insert(i, (f, to)),
        }
    }

    pub fn arc(&self, from: NodeId, f: FeatId) -> Option<NodeId> {
        let arcs = &self.arcs[from];
        arcs.binary_search_by_key(&f, |a| a.0).ok().map(|i| arcs[i].1)
    }

    pub fn follow(&self, from: NodeId, path: &[FeatId]) -> Option<NodeId> {
        path.iter().try_fold(from, |q, f| self.arc(q, *f))
    }

    pub fn len(&self) -> usize {
        self.types.len()
    }

    pub fn is_empty(&self) -> bool {
        self.types.is_empty()
    }

    /// Copies the nodes reachable from `roots`, renumbered in breadth-first
    /// order; returns the new graph and the images of the roots.
    pub fn restrict(&self, roots: &[NodeId]) -> (Graph, Vec<NodeId>) {
        let mut map: Vec<Option<NodeId>> = vec![None; self.len()];
        let mut out = Graph::default();
        let mut queue = std::collections::VecDeque::new();
        let mut images = Vec::with_capacity(roots.len());
        for &r in roots {
            let img = match map[r] {
                Some(i) => i,
                None => {
                    let i = out.add_node(self.types[r]);
                    map[r] = Some(i);
                    queue.push_back(r);
                    i
                }
            };
            images.push(img);
        }
        while let Some(q) = queue.pop_front() {
            for &(f, r) in &self.arcs[q] {
                let img = match map[r] {
                    Some(i) => i,
                    None => {
                        let i = out.add_node(self.types[r]);
                        map[r] = Some(i);
                        queue.push_back(r);
                        i
                    }
                };
                out.arcs[map[q].unwrap()].push((f, img));
            }
        }
        (out, images)
    }

    fn has_cycle_from(&self, roots: &[NodeId]) -> bool {
        // 0 = unseen, 1 = on stack, 2 = done
        let mut color = vec![0u8; self.len()];
        for &r in roots {
            if color[r] != 0 {
                continue;
            }
            let mut stack: Vec<(NodeId, usize)> = vec![(r, 0)];
            color[r] = 1;
            while let Some(&mut (q, ref mut k)) = stack.last_mut() {
                if *k < self.arcs[q].len() {
                    let next = self.arcs[q][*k].1;
                    *k += 1;
                    match color[next] {
                        1 => return true,
                        0 => {
                            color[next] = 1;
                            stack.push((next, 0));
                        }
                        _ => {}
                    }
                } else {
                    color[q] = 2;
                    stack.pop();
                }
            }
        }
        false
    }

    /// Number of distinct paths reaching each node from `roots`
    /// (acyclic graphs only).
    fn path_counts(&self, roots: &[NodeId]) -> Result<Vec<u128>, TfsError> {
        if self.has_cycle_from(roots) {
            return Err(TfsError::CyclicStructure);
        }
        let order = self.topological(roots);
        let mut count = vec![0u128; self.len()];
        for &r in roots {
            count[r] += 1;
        }
        for q in order {
            let c = count[q];
            for &(_, r) in &self.arcs[q] {
                count[r] += c;
            }
        }
        Ok(count)
    }

    fn topological(&self, roots: &[NodeId]) -> Vec<NodeId> {
        let mut indeg = vec![0usize; self.len()];
        let mut seen = vec![false; self.len()];
        let mut stack: Vec<NodeId> = roots.to_vec();
        while let Some(q) = stack.pop() {
            if std::mem::replace(&mut seen[q], true) {
                continue;
            }
            for &(_, r) in &self.arcs[q] {
                indeg[r] += 1;
                stack.push(r);
            }
        }
        let mut ready: Vec<NodeId> = (0..self.len()).filter(|&q| seen[q] && indeg[q] == 0).collect();
        let mut order = Vec::new();
        while let Some(q) = ready.pop() {
            order.push(q);
            for &(_, r) in &self.arcs[q] {
                indeg[r] -= 1;
                if indeg[r] == 0 {
                    ready.push(r);
                }
            }
        }
        order
    }

    fn enumerate_paths(&self, root: NodeId, out: &mut Vec<(Path, NodeId)>) {
        let mut stack = vec![(Vec::new(), root)];
        while let Some((p, q)) = stack.pop() {
            for &(f, r) in self.arcs[q].iter().rev() {
                let mut np = p.clone();
                np.push(f);
                stack.push((np, r));
            }
            out.push((p, q));
        }
    }
}

/// A rooted typed feature structure. All nodes are reachable from the root.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tfs {
    pub graph: Graph,
    pub root: NodeId,
}

impl Tfs {
    pub fn new(graph: Graph, root: NodeId) -> Tfs {
        let (graph, roots) = graph.restrict(&[root]);
        Tfs { graph, root: roots[0] }
    }

    pub fn atomic(t: TypeId) -> Tfs {
        let mut g = Graph::default();
        g.add_node(t);
        Tfs { graph: g, root: 0 }
    }

    pub fn node_count(&self) -> usize {
        self.graph.len()
    }

    pub fn root_type(&self) -> TypeId {
        self.graph.types[self.root]
    }

    pub fn node_at(&self, path: &[FeatId]) -> Option<NodeId> {
        self.graph.follow(self.root, path)
    }

    /// Value of a path; `None` is the nonexistent structure.
    pub fn val(&self, path: &[FeatId]) -> Option<Tfs> {
        self.node_at(path).map(|q| Tfs::new(self.graph.clone(), q))
    }

    /// Subsumption morphism from `self` (more general) into `other`.
    pub fn subsumes(&self, h: &Hierarchy, other: &Tfs) -> Option<Vec<NodeId>> {
        morphism(h, &self.graph, &[self.root], &other.graph, &[other.root])
    }

    /// Mutual subsumption.
    pub fn alphabetic_variant(&self, h: &Hierarchy, other: &Tfs) -> bool {
        self.subsumes(h, other).is_some() && other.subsumes(h, self).is_some()
    }

    pub fn is_cyclic(&self) -> bool {
        self.graph.has_cycle_from(&[self.root])
    }

    pub fn is_well_typed(&self, h: &Hierarchy) -> bool {
        (0..self.graph.len()).all(|q| {
            self.graph.arcs[q].iter().all(|&(f, r)| {
                h.approp(f, self.graph.types[q])
                    .is_some_and(|a| h.subsumes(a, self.graph.types[r]))
            })
        })
    }

    pub fn is_totally_well_typed(&self, h: &Hierarchy) -> bool {
        self.is_well_typed(h)
            && (0..self.graph.len()).all(|q| self.graph.arcs[q].len() == h.arity(self.graph.types[q]))
    }

    /// Adds every missing appropriate arc with a fresh most general value.
    pub fn totally_well_typed(&self, h: &Hierarchy) -> Result<Tfs, TfsError> {
        let mut g = self.graph.clone();
        let mut work: Vec<(NodeId, usize)> = (0..g.len()).map(|q| (q, 0)).collect();
        while let Some((q, depth)) = work.pop() {
            if depth > h.len() {
                return Err(TfsError::InfiniteExpansion);
            }
            for slot in h.features_of(g.types[q]).to_vec() {
                if g.arc(q, slot.feature).is_none() {
                    let r = g.add_node(slot.restriction);
                    g.set_arc(q, slot.feature, r);
                    work.push((r, depth + 1));
                }
            }
        }
        Ok(Tfs::new(g, self.root))
    }

    /// Δ + Θ with Δ = |Π| − |Q| and Θ the sum of type depths over all paths.
    pub fn rank(&self, h: &Hierarchy) -> Result<u128, TfsError> {
        let counts = self.graph.path_counts(&[self.root])?;
        let paths: u128 = counts.iter().sum();
        let theta: u128 = counts
            .iter()
            .zip(&self.graph.types)
            .map(|(c, t)| c * h.depth(*t) as u128)
            .sum();
        Ok(paths - self.graph.len() as u128 + theta)
    }

    /// All defined paths with their nodes, in lexicographic feature order.
    pub fn paths(&self) -> Result<Vec<(Path, NodeId)>, TfsError> {
        if self.is_cyclic() {
            return Err(TfsError::CyclicStructure);
        }
        let mut out = Vec::new();
        self.graph.enumerate_paths(self.root, &mut out);
        out.sort();
        Ok(out)
    }

    pub fn abs(&self) -> Result<Amrs, TfsError> {
        Mrs { graph: self.graph.clone(), roots: vec![self.root] }.abs()
    }

    /// One node per equivalence class, arcs following path extension.
    pub fn conc(a: &Amrs) -> Tfs {
        let m = Mrs::conc(a);
        Tfs { graph: m.graph, root: m.roots[0] }
    }

    pub fn into_mrs(self) -> Mrs {
        Mrs { graph: self.graph, roots: vec![self.root] }
    }
}

/// A multi-rooted structure: an ordered, repetition-free list of roots over
/// one shared graph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mrs {
    pub graph: Graph,
    pub roots: Vec<NodeId>,
}

impl Mrs {
    pub fn empty() -> Mrs {
        Mrs { graph: Graph::default(), roots: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.roots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.roots.is_empty()
    }

    /// The structure induced by the `i`-th root (1-based).
    pub fn project(&self, i: usize) -> Result<Tfs, TfsError> {
        if i == 0 || i > self.roots.len() {
            return Err(TfsError::IndexOutOfRange { index: i, len: self.roots.len() });
        }
        Ok(Tfs::new(self.graph.clone(), self.roots[i - 1]))
    }

    pub fn subsumes(&self, h: &Hierarchy, other: &Mrs) -> Option<Vec<NodeId>> {
        if self.len() != other.len() {
            return None;
        }
        morphism(h, &self.graph, &self.roots, &other.graph, &other.roots)
    }

    pub fn is_cyclic(&self) -> bool {
        self.graph.has_cycle_from(&self.roots)
    }

    pub fn abs(&self) -> Result<Amrs, TfsError> {
        if self.is_cyclic() {
            return Err(TfsError::CyclicStructure);
        }
        let mut paths: BTreeMap<(usize, Path), NodeId> = BTreeMap::new();
        for (i, &r) in self.roots.iter().enumerate() {
            let mut out = Vec::new();
            self.graph.enumerate_paths(r, &mut out);
            for (p, q) in out {
                paths.insert((i, p), q);
            }
        }
        Ok(Amrs::from_node_paths(self.roots.len(), paths, &self.graph.types))
    }

    pub fn conc(a: &Amrs) -> Mrs {
        let mut g = Graph::default();
        for t in a.class_types() {
            g.add_node(*t);
        }
        let mut roots = vec![0; a.len()];
        for ((i, p), class) in a.paths() {
            if p.is_empty() {
                roots[*i] = *class as usize;
            } else {
                let parent = a.class_of(*i, &p[..p.len() - 1]).expect("prefix closed");
                g.set_arc(parent as usize, *p.last().unwrap(), *class as usize);
            }
        }
        let (graph, roots) = g.restrict(&roots);
        Mrs { graph, roots }
    }
}

/// Builds the unique candidate morphism arc by arc from the roots and checks
/// type subsumption along the way.
fn morphism(
    h: &Hierarchy,
    ga: &Graph,
    roots_a: &[NodeId],
    gb: &Graph,
    roots_b: &[NodeId],
) -> Option<Vec<NodeId>> {
    let mut map: Vec<Option<NodeId>> = vec![None; ga.len()];
    let mut work = Vec::new();
    for (&ra, &rb) in roots_a.iter().zip(roots_b) {
        match map[ra] {
            Some(x) if x != rb => return None,
            Some(_) => {}
            None => {
                map[ra] = Some(rb);
                work.push(ra);
            }
        }
    }
    while let Some(q) = work.pop() {
        let img = map[q].unwrap();
        if !h.subsumes(ga.types[q], gb.types[img]) {
            return None;
        }
        for &(f, r) in &ga.arcs[q] {
            let target = gb.arc(img, f)?;
            match map[r] {
                Some(x) if x != target => return None,
                Some(_) => {}
                None => {
                    map[r] = Some(target);
                    work.push(r);
                }
            }
        }
    }
    map.into_iter().collect()
}
