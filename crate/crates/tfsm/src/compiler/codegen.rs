//! Code generation: flattening of feature structures into register
//! equations, query and program code, rule blocks and the driver loop.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use crate::afs::Builder;
use crate::code::{Instr, Label, ObjectCode, Reg};
use crate::compiler::empty::{add_graph, expand_empty_categories};
use crate::compiler::{CompileError, Grammar, Rule};
use crate::tfs::{Graph, NodeId, Tfs};
use crate::types::{Hierarchy, TypeId};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Rhs {
    /// A node with its arity-many arguments, in feature order.
    Str(TypeId, Vec<Reg>),
    /// A node left as the most general structure of its type.
    Var(TypeId),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Equation {
    pub reg: Reg,
    pub rhs: Rhs,
    /// For each argument, whether this is the register's first mention.
    pub first: Vec<bool>,
    /// The graph node, or `None` for a slot the structure leaves implicit.
    pub node: Option<NodeId>,
}

pub struct EquationDisplay<'a>(&'a Hierarchy, &'a Equation);

impl Equation {
    pub fn display<'a>(&'a self, h: &'a Hierarchy) -> EquationDisplay<'a> {
        EquationDisplay(h, self)
    }
}

impl fmt::Display for EquationDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let EquationDisplay(h, eq) = self;
        match &eq.rhs {
            Rhs::Str(t, args) if !args.is_empty() => {
                let args: Vec<String> = args.iter().map(|r| format!("X{r}")).collect();
                write!(f, "X{} = {}({})", eq.reg, h.name(*t), args.join(","))
            }
            Rhs::Str(t, _) | Rhs::Var(t) => write!(f, "X{} = {}", eq.reg, h.name(*t)),
        }
    }
}

/// Register assignment shared by all the structures of one rule.
#[derive(Debug, Default)]
pub struct Registers {
    of: HashMap<NodeId, Reg>,
    next: Reg,
}

impl Registers {
    pub fn new() -> Self {
        Registers { of: HashMap::new(), next: 1 }
    }

    pub fn get(&self, q: NodeId) -> Option<Reg> {
        self.of.get(&q).copied()
    }

    pub fn fresh(&mut self) -> Reg {
        self.next += 1;
        self.next - 1
    }

    fn assign(&mut self, q: NodeId) -> Reg {
        let r = self.fresh();
        self.of.insert(q, r);
        r
    }

    pub fn used(&self) -> Reg {
        self.next - 1
    }
}

/// Equations for the part of `g` below `root` not yet given registers,
/// in the order the code generators consume them: a node's arguments
/// receive registers before any of them is expanded.
pub fn flatten(h: &Hierarchy, g: &Graph, root: NodeId, regs: &mut Registers) -> Vec<Equation> {
    let mut out = Vec::new();
    if regs.get(root).is_none() {
        let r = regs.assign(root);
        visit(h, g, root, r, regs, &mut out);
    }
    out
}

fn visit(h: &Hierarchy, g: &Graph, q: NodeId, reg: Reg, regs: &mut Registers, out: &mut Vec<Equation>) {
    let t = g.types[q];
    if h.arity(t) == 0 || g.arcs[q].is_empty() {
        let rhs = if h.arity(t) == 0 { Rhs::Str(t, Vec::new()) } else { Rhs::Var(t) };
        out.push(Equation { reg, rhs, first: Vec::new(), node: Some(q) });
        return;
    }
    let mut args = Vec::new();
    let mut first = Vec::new();
    let mut pending: Vec<(Reg, Result<NodeId, TypeId>)> = Vec::new();
    for slot in h.features_of(t) {
        match g.arc(q, slot.feature) {
            Some(c) => match regs.get(c) {
                Some(r) => {
                    args.push(r);
                    first.push(false);
                }
                None => {
                    let r = regs.assign(c);
                    args.push(r);
                    first.push(true);
                    pending.push((r, Ok(c)));
                }
            },
            None => {
                let r = regs.fresh();
                args.push(r);
                first.push(true);
                pending.push((r, Err(slot.restriction)));
            }
        }
    }
    out.push(Equation { reg, rhs: Rhs::Str(t, args), first, node: Some(q) });
    for (r, child) in pending {
        match child {
            Ok(c) => visit(h, g, c, r, regs, out),
            Err(t) => out.push(Equation { reg: r, rhs: Rhs::Var(t), first: Vec::new(), node: None }),
        }
    }
}

/// Code building the equations' structure on the heap: every node first,
/// then every arc.
pub fn query_code(eqs: &[Equation]) -> Vec<Instr> {
    let mut out = Vec::new();
    for eq in eqs {
        out.push(match eq.rhs {
            Rhs::Str(t, _) => Instr::PutNode(t, eq.reg),
            Rhs::Var(t) => Instr::PutVar(t, eq.reg),
        });
    }
    for eq in eqs {
        if let Rhs::Str(_, args) = &eq.rhs {
            for (i, &a) in args.iter().enumerate() {
                out.push(Instr::PutArc(eq.reg, i + 1, a));
            }
        }
    }
    out
}

/// Code unifying the equations' structure with what the registers point
/// at. Equations for which `skip` holds only bind their register.
pub fn program_code(h: &Hierarchy, eqs: &[Equation], skip: &dyn Fn(&Equation) -> bool) -> Vec<Instr> {
    let mut out = Vec::new();
    for eq in eqs {
        match &eq.rhs {
            Rhs::Str(t, args) => {
                debug_assert_eq!(args.len(), h.arity(*t));
                out.push(Instr::GetStructure(*t, eq.reg));
                for (&a, &first) in args.iter().zip(&eq.first) {
                    out.push(if first { Instr::UnifyVariable(a) } else { Instr::UnifyValue(a) });
                }
            }
            Rhs::Var(t) => {
                if !skip(eq) {
                    out.push(Instr::GetVar(*t, eq.reg));
                }
            }
        }
    }
    out
}

/// Query code for a single structure, registers starting at X1.
pub fn compile_query_term(h: &Hierarchy, tfs: &Tfs) -> Vec<Instr> {
    let mut regs = Registers::new();
    query_code(&flatten(h, &tfs.graph, tfs.root, &mut regs))
}

/// Program code for a single structure, registers starting at X1.
pub fn compile_program_term(h: &Hierarchy, tfs: &Tfs) -> Vec<Instr> {
    let mut regs = Registers::new();
    let eqs = flatten(h, &tfs.graph, tfs.root, &mut regs);
    program_code(h, &eqs, &|eq| eq.node.is_none())
}

fn in_degrees(g: &Graph) -> Vec<usize> {
    let mut deg = vec![0; g.len()];
    for arcs in &g.arcs {
        for &(_, r) in arcs {
            deg[r] += 1;
        }
    }
    deg
}

/// The block for one rule, placed at address `base`.
pub fn compile_rule(h: &Hierarchy, rule: &Rule, base: Label) -> Vec<Instr> {
    let g = &rule.graph;
    let deg = in_degrees(g);
    let mut pinned = vec![false; g.len()];
    for &r in &rule.roots {
        pinned[r] = true;
    }
    for goal in &rule.goals {
        for &a in &goal.args {
            pinned[a] = true;
        }
    }
    let skip = |eq: &Equation| match (eq.node, &eq.rhs) {
        (None, _) => true,
        (Some(q), Rhs::Var(t)) => {
            !pinned[q] && deg[q] == 1 && g.arcs[q].is_empty() && restriction_into(h, g, q) == Some(*t)
        }
        _ => false,
    };
    let mut regs = Registers::new();
    let mut out = Vec::new();
    let n = rule.body_len();
    for (i, &root) in rule.roots[..n].iter().enumerate() {
        match regs.get(root) {
            Some(old) => {
                let r = regs.fresh();
                out.push(Instr::LoadFs(r));
                out.push(Instr::GetValue(r, old));
            }
            None => {
                let eqs = flatten(h, g, root, &mut regs);
                out.push(Instr::LoadFs(eqs[0].reg));
                out.extend(program_code(h, &eqs, &skip));
            }
        }
        if i + 1 < n {
            out.push(Instr::CopyActiveEdge(base + out.len() + 1));
        }
    }
    let head = rule.head();
    let eqs = flatten(h, g, head, &mut regs);
    out.extend(query_code(&eqs));
    for goal in &rule.goals {
        for &a in &goal.args {
            let eqs = flatten(h, g, a, &mut regs);
            out.extend(query_code(&eqs));
        }
        out.push(Instr::Goal(goal.kind, goal.args.map(|a| regs.get(a).expect("flattened above"))));
    }
    out.push(Instr::CopyCompleteEdge(regs.get(head).expect("head flattened")));
    out
}

/// The restriction every arc into `q` imposes, if `q` has exactly one.
fn restriction_into(h: &Hierarchy, g: &Graph, q: NodeId) -> Option<TypeId> {
    g.arcs.iter().flatten().find(|&&(_, r)| r == q).map(|&(f, _)| h.restriction(f))
}

fn can_feed(h: &Hierarchy, from: &Rule, to: &Rule) -> bool {
    let mut b = Builder::new(h);
    let a = add_graph(&mut b, &from.graph);
    let c = add_graph(&mut b, &to.graph);
    b.union(a[from.head()], c[to.roots[0]]).is_ok()
}

/// Unit rules first, ordered so that no rule feeds one placed earlier;
/// the remaining rules keep their order.
pub fn order_rules(h: &Hierarchy, rules: Vec<Rule>) -> Result<Vec<Rule>, CompileError> {
    let (unit, rest): (Vec<Rule>, Vec<Rule>) = rules.into_iter().partition(|r| r.body_len() == 1);
    let n = unit.len();
    let mut preds = vec![0usize; n];
    let mut succ: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        for j in 0..n {
            if i != j && can_feed(h, &unit[i], &unit[j]) {
                succ[i].push(j);
                preds[j] += 1;
            }
        }
    }
    let mut placed = vec![false; n];
    let mut order = Vec::with_capacity(n);
    while order.len() < n {
        let Some(next) = (0..n).find(|&i| !placed[i] && preds[i] == 0) else {
            let names = (0..n).filter(|&i| !placed[i]).map(|i| unit[i].name.clone()).collect();
            return Err(CompileError::UnorderableUnitRules(names));
        };
        placed[next] = true;
        order.push(next);
        for &j in &succ[next] {
            preds[j] -= 1;
        }
    }
    let mut slots: Vec<Option<Rule>> = unit.into_iter().map(Some).collect();
    let mut out: Vec<Rule> = order.into_iter().map(|i| slots[i].take().expect("placed once")).collect();
    out.extend(rest);
    Ok(out)
}

/// Size of the fixed driver loop following the `put_rule` instructions.
const DRIVER_LEN: usize = 9;

pub fn compile_grammar(g: &Grammar) -> Result<ObjectCode, CompileError> {
    let h = &g.hierarchy;
    let expansion = expand_empty_categories(h, &g.rules, &g.empties);
    let rules = order_rules(h, expansion.rules)?;
    let k = rules.len();
    let top = k + 1;
    let mut blocks = Vec::new();
    let mut rule_names = BTreeMap::new();
    let mut addr = k + DRIVER_LEN;
    for r in &rules {
        let block = compile_rule(h, r, addr);
        rule_names.insert(addr, r.name.clone());
        addr += block.len();
        blocks.push(block);
    }
    let mut program: Vec<Instr> = rule_names.keys().map(|&l| Instr::PutRule(l)).collect();
    program.extend([
        Instr::FirstKey,
        Instr::NextKey,
        Instr::TstActiveEdges(top + 6),
        Instr::TstCompleteEdges(top + 5),
        Instr::Call,
        Instr::NextCompleteEdge(top + 2),
        Instr::NextActiveEdge(top + 1),
        Instr::CheckKey(top),
        Instr::EndOfProgram,
    ]);
    for b in blocks {
        program.extend(b);
    }

    let mut facts: Vec<Vec<Instr>> = g.empties.iter().map(|e| compile_query_term(h, e)).collect();
    facts.extend(expansion.facts.iter().map(|e| compile_query_term(h, e)));
    let mut lexicon = BTreeMap::new();
    for (word, entries) in &g.lexicon {
        let mut code = Vec::new();
        for (j, e) in entries.iter().enumerate() {
            code.extend(compile_query_term(h, e));
            code.push(if j + 1 < entries.len() { Instr::SameWord(1) } else { Instr::Proceed(1) });
        }
        lexicon.insert(word.clone(), code);
    }
    let start = compile_query_term(h, &g.start);
    Ok(ObjectCode::new(h.clone(), program, rule_names, start, facts, lexicon))
}
