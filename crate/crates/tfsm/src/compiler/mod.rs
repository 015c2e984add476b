//! Grammar compilation: source text to elaborated rule graphs, then to
//! object code for the machine.

pub mod codegen;
pub mod desc;
pub mod empty;
pub mod syntax;

use std::collections::{BTreeMap, HashMap};

use thiserror::Error;

use crate::afs::{Amrs, IndexedPath};
use crate::tfs::{Graph, NodeId, Path, Tfs};
use crate::types::{Hierarchy, HierarchyError};

pub use syntax::{parse_source, Pos, SourceGrammar};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CompileError {
    #[error("{pos}: syntax error: {msg}")]
    Syntax { pos: Pos, msg: String },
    #[error(transparent)]
    Hierarchy(#[from] HierarchyError),
    #[error("{pos}: unknown type `{name}`")]
    UnknownType { name: String, pos: Pos },
    #[error("{pos}: unknown feature `{name}`")]
    UnknownFeature { name: String, pos: Pos },
    #[error("{pos}: unknown macro `{name}`")]
    UnknownMacro { name: String, pos: Pos },
    #[error("{pos}: macro `{name}` takes {expected} arguments, {found} given")]
    ArityMismatch { name: String, expected: usize, found: usize, pos: Pos },
    #[error("{pos}: macro `{name}` calls itself")]
    RecursiveMacro { name: String, pos: Pos },
    #[error("{pos}: macro `{name}` is defined twice")]
    DuplicateMacro { name: String, pos: Pos },
    #[error("{pos}: inconsistent description: {msg}")]
    InconsistentDescription { pos: Pos, msg: String },
    #[error("{pos}: unknown goal `{name}`")]
    UnknownGoal { name: String, pos: Pos },
    #[error("{pos}: goal `{goal}` needs type `{ty}` in the hierarchy")]
    MissingGoalType { goal: String, ty: String, pos: Pos },
    #[error("{pos}: goal arguments must occur in the rule")]
    GoalArgumentUnreachable { pos: Pos },
    #[error("{pos}: rule `{name}` has no body")]
    EmptyRule { name: String, pos: Pos },
    #[error("unit rules feed each other in a cycle: {0:?}")]
    UnorderableUnitRules(Vec<String>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GoalKind {
    Append,
    Union,
}

impl GoalKind {
    pub fn name(self) -> &'static str {
        match self {
            GoalKind::Append => "append",
            GoalKind::Union => "union",
        }
    }

    pub fn from_name(name: &str) -> Option<GoalKind> {
        match name {
            "append" => Some(GoalKind::Append),
            "union" => Some(GoalKind::Union),
            _ => None,
        }
    }

    /// Empty type, non-empty type, element feature and rest feature.
    pub fn encoding(self) -> [&'static str; 4] {
        match self {
            GoalKind::Append => ["e_list", "ne_list", "hd", "tl"],
            GoalKind::Union => ["e_set", "ne_set", "elt", "elts"],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Goal {
    pub kind: GoalKind,
    pub args: [NodeId; 3],
}

/// A rule as one graph: `roots` lists the body elements followed by the head.
#[derive(Clone, Debug)]
pub struct Rule {
    pub name: String,
    pub graph: Graph,
    pub roots: Vec<NodeId>,
    pub goals: Vec<Goal>,
}

impl Rule {
    pub fn body_len(&self) -> usize {
        self.roots.len() - 1
    }

    pub fn head(&self) -> NodeId {
        *self.roots.last().expect("rules have a head")
    }

    pub fn amrs(&self) -> Amrs {
        let mut node_paths = BTreeMap::new();
        for (i, &r) in self.roots.iter().enumerate() {
            for (p, q) in paths_from(&self.graph, r) {
                node_paths.insert((i, p), q);
            }
        }
        Amrs::from_node_paths(self.roots.len(), node_paths, &self.graph.types)
    }

    /// The shortest indexed path leading to each goal argument.
    pub fn goal_paths(&self) -> Vec<(GoalKind, [IndexedPath; 3])> {
        let mut first: HashMap<NodeId, IndexedPath> = HashMap::new();
        for (i, &r) in self.roots.iter().enumerate() {
            for (p, q) in paths_from(&self.graph, r) {
                first.entry(q).or_insert((i, p));
            }
        }
        self.goals
            .iter()
            .map(|g| (g.kind, g.args.map(|a| first[&a].clone())))
            .collect()
    }
}

/// Every path from `root` that does not revisit a node, with its target.
pub(crate) fn paths_from(g: &Graph, root: NodeId) -> Vec<(Path, NodeId)> {
    let mut out = Vec::new();
    let mut on_path = vec![false; g.len()];
    fn go(g: &Graph, q: NodeId, p: &mut Path, on_path: &mut [bool], out: &mut Vec<(Path, NodeId)>) {
        out.push((p.clone(), q));
        on_path[q] = true;
        for &(f, r) in &g.arcs[q] {
            if !on_path[r] {
                p.push(f);
                go(g, r, p, on_path, out);
                p.pop();
            }
        }
        on_path[q] = false;
    }
    go(g, root, &mut Vec::new(), &mut on_path, &mut out);
    out
}

#[derive(Clone, Debug)]
pub struct Grammar {
    pub hierarchy: Hierarchy,
    pub rules: Vec<Rule>,
    pub lexicon: BTreeMap<String, Vec<Tfs>>,
    pub empties: Vec<Tfs>,
    pub start: Tfs,
}

pub fn parse_hierarchy_text(text: &str) -> Result<Hierarchy, CompileError> {
    let src = parse_source(text)?;
    Ok(Hierarchy::compile(&src.chars)?)
}

/// Parses and elaborates a whole grammar file.
pub fn load_grammar(text: &str) -> Result<Grammar, CompileError> {
    let src = parse_source(text)?;
    elaborate(&src)
}

pub fn elaborate(src: &SourceGrammar) -> Result<Grammar, CompileError> {
    let hierarchy = Hierarchy::compile(&src.chars)?;
    let h = &hierarchy;
    let mut macros = HashMap::new();
    for m in &src.macros {
        if macros.insert(m.name.clone(), m.clone()).is_some() {
            return Err(CompileError::DuplicateMacro { name: m.name.clone(), pos: m.pos });
        }
    }

    let single = |d: &syntax::Desc| -> Result<Tfs, CompileError> {
        let mut el = desc::Elaborator::new(h, &macros);
        let q = el.node(d)?;
        let (graph, roots) = el.builder.to_graph(&[q]);
        Ok(Tfs::new(graph, roots[0]))
    };

    let mut rules = Vec::new();
    for r in &src.rules {
        if r.body.is_empty() {
            return Err(CompileError::EmptyRule { name: r.name.clone(), pos: r.pos });
        }
        let mut el = desc::Elaborator::new(h, &macros);
        let mut nodes = Vec::new();
        for d in &r.body {
            nodes.push(el.node(d)?);
        }
        nodes.push(el.node(&r.head)?);
        let mut goal_nodes = Vec::new();
        for call in &r.goals {
            let kind = GoalKind::from_name(&call.name)
                .ok_or_else(|| CompileError::UnknownGoal { name: call.name.clone(), pos: call.pos })?;
            if call.args.len() != 3 {
                return Err(CompileError::ArityMismatch {
                    name: call.name.clone(),
                    expected: 3,
                    found: call.args.len(),
                    pos: call.pos,
                });
            }
            for ty in kind.encoding().iter().take(2) {
                if h.lookup(ty).is_none() {
                    return Err(CompileError::MissingGoalType {
                        goal: call.name.clone(),
                        ty: ty.to_string(),
                        pos: call.pos,
                    });
                }
            }
            let mut args = [0; 3];
            for (k, a) in call.args.iter().enumerate() {
                args[k] = el.node(a)?;
            }
            goal_nodes.push((kind, args, call.pos));
        }
        let n = nodes.len();
        let mut all = nodes.clone();
        for (_, args, _) in &goal_nodes {
            all.extend_from_slice(args);
        }
        let (graph, mapped) = el.builder.to_graph(&all);
        let roots = mapped[..n].to_vec();
        let reachable = reachable_set(&graph, &roots);
        let mut goals = Vec::new();
        for (k, (kind, _, pos)) in goal_nodes.iter().enumerate() {
            let args: [NodeId; 3] = std::array::from_fn(|i| mapped[n + 3 * k + i]);
            if args.iter().any(|&a| !reachable[a]) {
                return Err(CompileError::GoalArgumentUnreachable { pos: *pos });
            }
            goals.push(Goal { kind: *kind, args });
        }
        let (graph, roots, goals) = restrict_rule(&graph, &roots, &goals);
        rules.push(Rule { name: r.name.clone(), graph, roots, goals });
    }

    let mut lexicon: BTreeMap<String, Vec<Tfs>> = BTreeMap::new();
    for e in &src.lexicon {
        lexicon.entry(e.word.clone()).or_default().push(single(&e.desc)?);
    }
    let mut empties = Vec::new();
    for (d, _) in &src.empties {
        empties.push(single(d)?);
    }
    let start = match &src.start {
        Some((d, _)) => single(d)?,
        None => Tfs::atomic(crate::types::TypeId::BOTTOM),
    };
    Ok(Grammar { hierarchy, rules, lexicon, empties, start })
}

pub(crate) fn reachable_set(g: &Graph, roots: &[NodeId]) -> Vec<bool> {
    let mut seen = vec![false; g.len()];
    let mut stack = roots.to_vec();
    while let Some(q) = stack.pop() {
        if !std::mem::replace(&mut seen[q], true) {
            stack.extend(g.arcs[q].iter().map(|&(_, r)| r));
        }
    }
    seen
}

/// Drops nodes unreachable from the roots, renumbering goal arguments.
pub(crate) fn restrict_rule(g: &Graph, roots: &[NodeId], goals: &[Goal]) -> (Graph, Vec<NodeId>, Vec<Goal>) {
    let mut all = roots.to_vec();
    for goal in goals {
        all.extend_from_slice(&goal.args);
    }
    let (graph, mapped) = g.restrict(&all);
    let n = roots.len();
    let goals = goals
        .iter()
        .enumerate()
        .map(|(k, goal)| Goal { kind: goal.kind, args: std::array::from_fn(|i| mapped[n + 3 * k + i]) })
        .collect();
    (graph, mapped[..n].to_vec(), goals)
}
