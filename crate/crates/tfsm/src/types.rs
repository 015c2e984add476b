//! Type hierarchies: subsumption closure, least upper bounds and the
//! appropriateness table derived from characterization statements.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TypeId(pub u32);

impl TypeId {
    pub const BOTTOM: TypeId = TypeId(0);
    /// Never stored in a table; `Hierarchy::lub` reports it as `None`.
    pub const TOP: TypeId = TypeId(u32::MAX);

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FeatId(pub u32);

impl FeatId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// One `t sub [..] intro [..].` statement as it appears in a grammar file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CharStatement {
    pub subject: String,
    pub subtypes: Vec<String>,
    pub intros: Vec<(String, String)>,
    pub line: usize,
}

impl CharStatement {
    pub fn new(subject: &str, subtypes: &[&str], intros: &[(&str, &str)]) -> Self {
        CharStatement {
            subject: subject.to_string(),
            subtypes: subtypes.iter().map(|s| s.to_string()).collect(),
            intros: intros
                .iter()
                .map(|(f, t)| (f.to_string(), t.to_string()))
                .collect(),
            line: 0,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HierarchyError {
    #[error("no characterization statements")]
    Empty,
    #[error("line {line}: type `{name}` is characterized more than once")]
    DuplicateCharacterization { name: String, line: usize },
    #[error("line {line}: undeclared type `{name}`")]
    UndeclaredType { name: String, line: usize },
    #[error("`top` is implicit and cannot be declared (line {line})")]
    TopDeclared { line: usize },
    #[error("subtype cycle through {0:?}")]
    CyclicSubtyping(Vec<String>),
    #[error("types `{0}` and `{1}` have several minimal upper bounds: {2:?}")]
    NotBoundedComplete(String, String, Vec<String>),
    #[error("feature `{feature}` is introduced by unrelated types {types:?}")]
    FeatureIntroductionViolation { feature: String, types: Vec<String> },
    #[error("feature `{feature}` is redeclared on `{ty}`, a subtype of its introducer")]
    FeatureRedeclaredOnSubtype { feature: String, ty: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FeatureSlot {
    pub feature: FeatId,
    pub restriction: TypeId,
    /// 1-based offset of the arc within a node of the owning type.
    pub position: usize,
}

#[derive(Clone, Debug)]
pub struct Hierarchy {
    names: Vec<String>,
    by_name: HashMap<String, TypeId>,
    direct_subs: Vec<Vec<TypeId>>,
    direct_supers: Vec<Vec<TypeId>>,
    leq: Vec<bool>,
    lub: Vec<Option<TypeId>>,
    feat_names: Vec<String>,
    feat_by_name: HashMap<String, FeatId>,
    introducer: Vec<TypeId>,
    restriction: Vec<TypeId>,
    slots: Vec<Vec<FeatureSlot>>,
    depth: Vec<u32>,
    intros_at: Vec<Vec<FeatId>>,
}

impl Hierarchy {
    /// Validates the statements and precomputes every table.
    ///
    /// Type ids follow a preorder walk from `bot` along the `sub` lists, so
    /// the result does not depend on the order of the statements. Features are
    /// numbered in the order that walk meets their introductions, and every
    /// per-type feature list is sorted by that number.
    pub fn compile(statements: &[CharStatement]) -> Result<Hierarchy, HierarchyError> {
        if statements.is_empty() {
            return Err(HierarchyError::Empty);
        }
        let mut by_subject: BTreeMap<&str, &CharStatement> = BTreeMap::new();
        for st in statements {
            if st.subject == "top" || st.subtypes.iter().any(|s| s == "top") {
                return Err(HierarchyError::TopDeclared { line: st.line });
            }
            if by_subject.insert(st.subject.as_str(), st).is_some() {
                return Err(HierarchyError::DuplicateCharacterization {
                    name: st.subject.clone(),
                    line: st.line,
                });
            }
        }

        let mut mentioned: HashSet<&str> = HashSet::new();
        for st in statements {
            for s in &st.subtypes {
                mentioned.insert(s.as_str());
            }
        }
        // Types that are never listed as a subtype hang directly below bot.
        let mut roots: Vec<&str> = by_subject
            .keys()
            .copied()
            .filter(|s| *s != "bot" && !mentioned.contains(s))
            .collect();
        roots.sort_unstable();
        let children_of = |name: &str| -> Vec<String> {
            let mut out: Vec<String> = by_subject
                .get(name)
                .map(|st| st.subtypes.clone())
                .unwrap_or_default();
            if name == "bot" {
                out.extend(roots.iter().map(|s| s.to_string()));
            }
            out
        };

        let mut names: Vec<String> = Vec::new();
        let mut by_name: HashMap<String, TypeId> = HashMap::new();
        let mut stack = vec!["bot".to_string()];
        while let Some(name) = stack.pop() {
            if by_name.contains_key(&name) {
                continue;
            }
            by_name.insert(name.clone(), TypeId(names.len() as u32));
            names.push(name.clone());
            for child in children_of(&name).into_iter().rev() {
                if !by_name.contains_key(&child) {
                    stack.push(child);
                }
            }
        }
        // A subject whose only supertypes sit on a cycle is never reached from bot.
        if let Some(lost) = by_subject.keys().find(|s| !by_name.contains_key(**s)) {
            return Err(HierarchyError::CyclicSubtyping(vec![lost.to_string()]));
        }
        let n = names.len();

        let mut direct_subs = vec![Vec::new(); n];
        let mut direct_supers = vec![Vec::new(); n];
        for (i, name) in names.iter().enumerate() {
            for child in children_of(name) {
                let c = by_name[&child];
                if !direct_subs[i].contains(&c) {
                    direct_subs[i].push(c);
                    direct_supers[c.index()].push(TypeId(i as u32));
                }
            }
        }

        let mut leq = vec![false; n * n];
        for i in 0..n {
            leq[i * n + i] = true;
            for s in &direct_subs[i] {
                leq[i * n + s.index()] = true;
            }
        }
        for k in 0..n {
            for i in 0..n {
                if leq[i * n + k] {
                    for j in 0..n {
                        if leq[k * n + j] {
                            leq[i * n + j] = true;
                        }
                    }
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                if i != j && leq[i * n + j] && leq[j * n + i] {
                    let mut cyc = vec![names[i].clone(), names[j].clone()];
                    cyc.sort();
                    return Err(HierarchyError::CyclicSubtyping(cyc));
                }
            }
        }

        let mut lub = vec![None; n * n];
        for a in 0..n {
            for b in a..n {
                let uppers: Vec<usize> =
                    (0..n).filter(|&u| leq[a * n + u] && leq[b * n + u]).collect();
                let minimal: Vec<usize> = uppers
                    .iter()
                    .copied()
                    .filter(|&u| !uppers.iter().any(|&v| v != u && leq[v * n + u]))
                    .collect();
                let value = match minimal.as_slice() {
                    [] => None,
                    [single] => Some(TypeId(*single as u32)),
                    many => {
                        return Err(HierarchyError::NotBoundedComplete(
                            names[a].clone(),
                            names[b].clone(),
                            many.iter().map(|&m| names[m].clone()).collect(),
                        ))
                    }
                };
                lub[a * n + b] = value;
                lub[b * n + a] = value;
            }
        }

        let mut depth = vec![0u32; n];
        // Preorder ids do not guarantee parents first under multiple
        // inheritance, so iterate until stable.
        loop {
            let mut changed = false;
            for t in 0..n {
                let d = direct_supers[t]
                    .iter()
                    .map(|s| depth[s.index()] + 1)
                    .max()
                    .unwrap_or(0);
                if d != depth[t] {
                    depth[t] = d;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }

        let mut feat_names: Vec<String> = Vec::new();
        let mut feat_by_name: HashMap<String, FeatId> = HashMap::new();
        let mut introducers: Vec<Vec<TypeId>> = Vec::new();
        let mut restriction: Vec<TypeId> = Vec::new();
        let mut intros_at = vec![Vec::new(); n];
        for (t, name) in names.iter().enumerate() {
            let Some(st) = by_subject.get(name.as_str()) else { continue };
            for (fname, rname) in &st.intros {
                let r = *by_name.get(rname).ok_or_else(|| HierarchyError::UndeclaredType {
                    name: rname.clone(),
                    line: st.line,
                })?;
                let f = match feat_by_name.get(fname) {
                    Some(&f) => f,
                    None => {
                        let f = FeatId(feat_names.len() as u32);
                        feat_names.push(fname.clone());
                        feat_by_name.insert(fname.clone(), f);
                        introducers.push(Vec::new());
                        restriction.push(r);
                        f
                    }
                };
                introducers[f.index()].push(TypeId(t as u32));
                intros_at[t].push(f);
            }
        }
        let mut introducer = Vec::with_capacity(feat_names.len());
        for (f, intros) in introducers.iter().enumerate() {
            if intros.len() > 1 {
                let (x, y) = (intros[0].index(), intros[1].index());
                if leq[x * n + y] || leq[y * n + x] {
                    let sub = if leq[x * n + y] { y } else { x };
                    return Err(HierarchyError::FeatureRedeclaredOnSubtype {
                        feature: feat_names[f].clone(),
                        ty: names[sub].clone(),
                    });
                }
                return Err(HierarchyError::FeatureIntroductionViolation {
                    feature: feat_names[f].clone(),
                    types: intros.iter().map(|t| names[t.index()].clone()).collect(),
                });
            }
            introducer.push(intros[0]);
        }

        let mut slots = vec![Vec::new(); n];
        for (t, slot) in slots.iter_mut().enumerate() {
            let mut position = 0;
            for (f, intro) in introducer.iter().enumerate() {
                if leq[intro.index() * n + t] {
                    position += 1;
                    slot.push(FeatureSlot {
                        feature: FeatId(f as u32),
                        restriction: restriction[f],
                        position,
                    });
                }
            }
        }

        Ok(Hierarchy {
            names,
            by_name,
            direct_subs,
            direct_supers,
            leq,
            lub,
            feat_names,
            feat_by_name,
            introducer,
            restriction,
            slots,
            depth,
            intros_at,
        })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn types(&self) -> impl Iterator<Item = TypeId> {
        (0..self.names.len() as u32).map(TypeId)
    }

    pub fn name(&self, t: TypeId) -> &str {
        if t == TypeId::TOP {
            "top"
        } else {
            &self.names[t.index()]
        }
    }

    pub fn lookup(&self, name: &str) -> Option<TypeId> {
        self.by_name.get(name).copied()
    }

    pub fn feature_count(&self) -> usize {
        self.feat_names.len()
    }

    pub fn feature_name(&self, f: FeatId) -> &str {
        &self.feat_names[f.index()]
    }

    pub fn feature(&self, name: &str) -> Option<FeatId> {
        self.feat_by_name.get(name).copied()
    }

    /// `general ⊑ specific`: the first type is at least as general as the second.
    pub fn subsumes(&self, general: TypeId, specific: TypeId) -> bool {
        if specific == TypeId::TOP {
            return true;
        }
        if general == TypeId::TOP {
            return false;
        }
        self.leq[general.index() * self.len() + specific.index()]
    }

    /// Type unification; `None` stands for the inconsistent type.
    pub fn lub(&self, a: TypeId, b: TypeId) -> Option<TypeId> {
        if a == TypeId::TOP || b == TypeId::TOP {
            return None;
        }
        self.lub[a.index() * self.len() + b.index()]
    }

    /// Join of all common lower bounds; `bot` for unrelated types.
    pub fn glb(&self, ts: &[TypeId]) -> TypeId {
        let mut acc = TypeId::BOTTOM;
        for t in self.types() {
            if ts.iter().all(|&u| self.subsumes(t, u)) {
                acc = self
                    .lub(acc, t)
                    .expect("common lower bounds always have an upper bound");
            }
        }
        acc
    }

    pub fn features_of(&self, t: TypeId) -> &[FeatureSlot] {
        &self.slots[t.index()]
    }

    pub fn arity(&self, t: TypeId) -> usize {
        self.slots[t.index()].len()
    }

    pub fn approp(&self, f: FeatId, t: TypeId) -> Option<TypeId> {
        self.subsumes(self.introducer[f.index()], t)
            .then(|| self.restriction[f.index()])
    }

    /// 1-based arc offset of `f` in a node of type `t`.
    pub fn position(&self, t: TypeId, f: FeatId) -> Option<usize> {
        self.slots[t.index()]
            .iter()
            .find(|s| s.feature == f)
            .map(|s| s.position)
    }

    pub fn introducer(&self, f: FeatId) -> TypeId {
        self.introducer[f.index()]
    }

    pub fn restriction(&self, f: FeatId) -> TypeId {
        self.restriction[f.index()]
    }

    pub fn direct_subtypes(&self, t: TypeId) -> &[TypeId] {
        &self.direct_subs[t.index()]
    }

    pub fn direct_supertypes(&self, t: TypeId) -> &[TypeId] {
        &self.direct_supers[t.index()]
    }

    /// Length of the longest chain from `bot`; strictly monotone in `⊑`.
    pub fn depth(&self, t: TypeId) -> u32 {
        self.depth[t.index()]
    }

    /// All simple cycles `t1 -f1-> t2 ... -> t1` in the appropriateness graph,
    /// each rotated to start at its smallest member.
    pub fn detect_approp_loops(&self) -> Vec<Vec<TypeId>> {
        let succ: Vec<Vec<usize>> = (0..self.len())
            .map(|t| {
                let mut v: Vec<usize> =
                    self.slots[t].iter().map(|s| s.restriction.index()).collect();
                v.sort_unstable();
                v.dedup();
                v
            })
            .collect();
        let mut cycles = Vec::new();
        for start in 0..self.len() {
            let mut path = vec![start];
            let mut iters = vec![0usize];
            while let Some(&node) = path.last() {
                let k = iters.last_mut().unwrap();
                if *k >= succ[node].len() {
                    path.pop();
                    iters.pop();
                    continue;
                }
                let next = succ[node][*k];
                *k += 1;
                if next == start {
                    cycles.push(path.iter().map(|&i| TypeId(i as u32)).collect());
                } else if next > start && !path.contains(&next) {
                    path.push(next);
                    iters.push(0);
                }
            }
        }
        cycles
    }

    /// Canonical statement text; compiling it yields identical tables.
    pub fn to_source(&self) -> String {
        let mut out = String::new();
        for t in self.types() {
            let subs: Vec<&str> = self.direct_subs[t.index()]
                .iter()
                .map(|s| self.name(*s))
                .collect();
            out.push_str(&format!("{} sub [{}]", self.name(t), subs.join(",")));
            let intros = &self.intros_at[t.index()];
            if !intros.is_empty() {
                let parts: Vec<String> = intros
                    .iter()
                    .map(|f| {
                        format!(
                            "{}:{}",
                            self.feature_name(*f),
                            self.name(self.restriction(*f))
                        )
                    })
                    .collect();
                out.push_str(&format!(" intro [{}]", parts.join(",")));
            }
            out.push_str(".\n");
        }
        out
    }

    pub fn display_type(&self, t: TypeId) -> TypeName<'_> {
        TypeName(self, t)
    }
}

pub struct TypeName<'h>(&'h Hierarchy, TypeId);

impl fmt::Display for TypeName<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.0.name(self.1))
    }
}
