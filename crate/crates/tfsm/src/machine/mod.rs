//! The abstract machine: a tagged heap, registers, a unification stack, a
//! trail and the chart, driven by compiled object code.

pub mod chart;

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use crate::code::{Instr, Label, ObjectCode, Reg};
use crate::goals::{eval_goal, GoalStore};
use crate::tfs::{Graph, Tfs};
use crate::types::{FeatId, Hierarchy, TypeId};

pub use chart::{key_sequence, ActiveEdge, Chart, Entry, Key};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Cell {
    Str(TypeId),
    Ref(usize),
    Var(TypeId),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Action {
    Copy,
    Unify,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MachineError {
    #[error("unknown word `{0}`")]
    UnknownWord(String),
    #[error("instruction `{instr}` at {pc} is not valid here")]
    InvalidInstruction { pc: usize, instr: String },
    #[error("register X{reg} read before it was set (at {pc})")]
    RegisterOutOfRange { reg: Reg, pc: usize },
    #[error("instruction budget of {0} steps exhausted")]
    BudgetExhausted(u64),
    #[error("unification failed outside of rule code (at {pc})")]
    FailAtTopLevel { pc: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Segment {
    Query,
    Program,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Running,
    Halted,
}

pub const DEFAULT_BUDGET: u64 = 100_000_000;

/// Concatenates the lexical code of each word.
pub fn assemble_query(code: &ObjectCode, words: &[&str]) -> Result<Vec<Instr>, MachineError> {
    let mut out = Vec::new();
    for w in words {
        let block = code.lexicon.get(*w).ok_or_else(|| MachineError::UnknownWord(w.to_string()))?;
        out.extend_from_slice(block);
    }
    Ok(out)
}

type Tracer<'c> = Box<dyn FnMut(&str) + 'c>;

pub struct Machine<'c> {
    code: &'c ObjectCode,
    heap: Vec<Cell>,
    regs: Vec<usize>,
    stack: Vec<(Action, usize)>,
    trail: Vec<(usize, Cell)>,
    /// Trail length and heap top recorded by the last `tst_complete_edges`.
    mark: (usize, usize),
    /// Heap top below which unwinding never cuts, raised by edge copies.
    floor: usize,
    returns: Vec<Label>,
    key: Key,
    len: usize,
    addr: usize,
    chart: Chart,
    query: Vec<Instr>,
    segment: Segment,
    pc: usize,
    steps: u64,
    budget: u64,
    status: Status,
    trace_level: usize,
    tracer: Option<Tracer<'c>>,
}

#[derive(Clone, Debug)]
pub struct ParseOutcome {
    pub results: Vec<Tfs>,
    pub steps: u64,
    pub len: usize,
    pub active_edges: usize,
    pub complete_edges: usize,
    pub heap_size: usize,
}

impl ParseOutcome {
    pub fn success(&self) -> bool {
        !self.results.is_empty()
    }
}

/// Runs `code` on `words` to completion and extracts the results.
pub fn parse(code: &ObjectCode, words: &[&str], budget: u64) -> Result<ParseOutcome, MachineError> {
    let mut m = Machine::new(code, words)?;
    m.set_budget(budget);
    m.run()?;
    Ok(m.outcome())
}

impl<'c> Machine<'c> {
    pub fn new(code: &'c ObjectCode, words: &[&str]) -> Result<Self, MachineError> {
        let query = assemble_query(code, words)?;
        Ok(Self::with_query(code, query))
    }

    /// A machine that will run `query` and then the program.
    pub fn with_query(code: &'c ObjectCode, query: Vec<Instr>) -> Self {
        Machine {
            code,
            heap: vec![Cell::Ref(0)],
            regs: vec![0],
            stack: Vec::new(),
            trail: Vec::new(),
            mark: (0, 1),
            floor: 1,
            returns: Vec::new(),
            key: Key::first(),
            len: 0,
            addr: 0,
            chart: Chart::default(),
            query,
            segment: Segment::Query,
            pc: 0,
            steps: 0,
            budget: DEFAULT_BUDGET,
            status: Status::Running,
            trace_level: 0,
            tracer: None,
        }
    }

    pub fn set_budget(&mut self, steps: u64) {
        self.budget = steps;
    }

    /// Level 1 reports added edges, level 2 also every instruction.
    pub fn set_trace(&mut self, level: usize, sink: impl FnMut(&str) + 'c) {
        self.trace_level = level;
        self.tracer = Some(Box::new(sink));
    }

    fn trace(&mut self, level: usize, msg: impl FnOnce() -> String) {
        if self.trace_level >= level {
            if let Some(t) = self.tracer.as_mut() {
                t(&msg());
            }
        }
    }

    pub fn hierarchy(&self) -> &'c Hierarchy {
        &self.code.hierarchy
    }

    pub fn code(&self) -> &'c ObjectCode {
        self.code
    }

    pub fn heap(&self) -> &[Cell] {
        &self.heap
    }

    /// Heap top: the address the next cell goes to.
    pub fn h(&self) -> usize {
        self.heap.len()
    }

    pub fn registers(&self) -> &[usize] {
        &self.regs
    }

    pub fn stack(&self) -> &[(Action, usize)] {
        &self.stack
    }

    pub fn trail(&self) -> &[(usize, Cell)] {
        &self.trail
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn key(&self) -> Key {
        self.key
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn addr_register(&self) -> usize {
        self.addr
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn status(&self) -> Status {
        self.status
    }

    pub fn position(&self) -> (Segment, usize) {
        (self.segment, self.pc)
    }

    pub fn query(&self) -> &[Instr] {
        &self.query
    }

    /// The instruction about to run, if any.
    pub fn next_instr(&self) -> Option<Instr> {
        match self.segment {
            Segment::Query => self.query.get(self.pc).copied().or_else(|| self.code.program.first().copied()),
            Segment::Program => self.code.program.get(self.pc).copied(),
        }
    }

    pub fn deref(&self, mut a: usize) -> usize {
        while let Cell::Ref(b) = self.heap[a] {
            if b == a {
                break;
            }
            a = b;
        }
        a
    }

    fn is_self_ref(&self, a: usize) -> bool {
        self.heap[a] == Cell::Ref(a)
    }

    fn push(&mut self, c: Cell) -> usize {
        self.heap.push(c);
        self.heap.len() - 1
    }

    fn write(&mut self, a: usize, c: Cell) {
        self.trail.push((a, self.heap[a]));
        self.heap[a] = c;
    }

    pub fn bind(&mut self, a1: usize, a2: usize) {
        self.write(a1, Cell::Ref(a2));
    }

    fn reg(&self, r: Reg) -> Result<usize, MachineError> {
        match self.regs.get(r) {
            Some(&a) if a != 0 => Ok(a),
            _ => Err(MachineError::RegisterOutOfRange { reg: r, pc: self.pc }),
        }
    }

    fn set_reg(&mut self, r: Reg, a: usize) {
        if self.regs.len() <= r {
            self.regs.resize(r + 1, 0);
        }
        self.regs[r] = a;
    }

    /// An STR cell of type `t` whose arcs are unexpanded VAR cells.
    pub fn build_most_general_fs(&mut self, t: TypeId) -> usize {
        let a = self.push(Cell::Str(t));
        for slot in self.code.hierarchy.features_of(t) {
            self.heap.push(Cell::Var(slot.restriction));
        }
        a
    }

    /// Replaces the VAR cell at `a` by an expanded structure; returns it.
    fn expand(&mut self, a: usize, t: TypeId) -> usize {
        let s = self.build_most_general_fs(t);
        self.bind(a, s);
        s
    }

    /// Runs the type unification function for a program type `t1` against
    /// the STR cell at `addr`.
    fn unify_type(&mut self, t1: TypeId, addr: usize) -> bool {
        let Cell::Str(t2) = self.heap[addr] else { unreachable!("unify_type on a non-STR cell") };
        let code = self.code.types.get(t1, t2);
        let base = self.stack.len();
        for ins in code {
            self.steps += 1;
            match *ins {
                Instr::Fail => return false,
                Instr::BuildStr(t) => {
                    let s = self.push(Cell::Str(t));
                    self.bind(addr, s);
                }
                Instr::BuildRef(i) => {
                    self.push(Cell::Ref(addr + i));
                }
                Instr::BuildRefAndUnify(i) => {
                    let c = self.push(Cell::Ref(addr + i));
                    self.stack.push((Action::Unify, c));
                }
                Instr::BuildSelfRef => {
                    let c = self.h();
                    self.push(Cell::Ref(c));
                    self.stack.push((Action::Copy, c));
                }
                Instr::BuildVar(t) => {
                    self.push(Cell::Var(t));
                }
                Instr::UnifyFeat(i) => self.stack.push((Action::Unify, addr + i)),
                Instr::Return => self.stack[base..].reverse(),
                other => unreachable!("`{}` in a type unification function", other.mnemonic()),
            }
        }
        true
    }

    /// Unifies the structures at two heap addresses.
    pub fn unify(&mut self, a1: usize, a2: usize) -> bool {
        let h = &self.code.hierarchy;
        let mut d1 = self.deref(a1);
        let mut d2 = self.deref(a2);
        if d1 == d2 {
            return true;
        }
        if self.is_self_ref(d1) {
            self.bind(d1, d2);
            return true;
        }
        if self.is_self_ref(d2) {
            self.bind(d2, d1);
            return true;
        }
        match (self.heap[d1], self.heap[d2]) {
            (Cell::Var(t1), Cell::Var(t2)) => {
                let Some(t) = h.lub(t1, t2) else { return false };
                if t == t2 {
                    self.bind(d1, d2);
                } else if t == t1 {
                    self.bind(d2, d1);
                } else {
                    let v = self.push(Cell::Var(t));
                    self.bind(d1, v);
                    self.bind(d2, v);
                }
                return true;
            }
            (Cell::Var(t1), Cell::Str(t2)) => {
                let Some(t) = h.lub(t1, t2) else { return false };
                if t == t2 {
                    self.bind(d1, d2);
                    return true;
                }
                d1 = self.expand(d1, t1);
            }
            (Cell::Str(t1), Cell::Var(t2)) => {
                let Some(t) = h.lub(t1, t2) else { return false };
                if t == t1 {
                    self.bind(d2, d1);
                    return true;
                }
                d2 = self.expand(d2, t2);
            }
            _ => {}
        }
        let Cell::Str(t1) = self.heap[d1] else { unreachable!("handled above") };
        if !self.unify_type(t1, d2) {
            return false;
        }
        self.bind(d1, d2);
        for i in 1..=h.arity(t1) {
            let (action, a) = self.stack.pop().expect("unify_type pushed one entry per feature");
            match action {
                Action::Copy => self.write(a, Cell::Ref(d1 + i)),
                Action::Unify => {
                    if !self.unify(a, d1 + i) {
                        return false;
                    }
                }
            }
        }
        true
    }

    fn fail(&mut self) -> Result<(), MachineError> {
        self.unwind(self.mark);
        self.stack.clear();
        self.trace(2, || "fail".to_string());
        match self.returns.pop() {
            Some(l) => {
                self.pc = l;
                Ok(())
            }
            None => Err(MachineError::FailAtTopLevel { pc: self.pc }),
        }
    }

    fn unwind(&mut self, (trail_len, h): (usize, usize)) {
        while self.trail.len() > trail_len {
            let (a, old) = self.trail.pop().expect("length checked");
            if a < self.heap.len() {
                self.heap[a] = old;
            }
        }
        self.heap.truncate(h.max(self.floor));
    }

    /// Copies the structures reachable from `roots` on top of the heap,
    /// preserving sharing among all of them.
    pub fn copy_all(&mut self, roots: &[usize]) -> Vec<usize> {
        let mut map: HashMap<usize, usize> = HashMap::new();
        let mut work: Vec<(usize, usize)> = Vec::new();
        let mut out = Vec::with_capacity(roots.len());
        for &r in roots {
            if r == 0 {
                out.push(0);
                continue;
            }
            let d = self.deref(r);
            out.push(self.copy_node(d, &mut map, &mut work));
            while let Some((src, dst)) = work.pop() {
                let Cell::Str(t) = self.heap[src] else { unreachable!("only STR cells have arcs") };
                for i in 1..=self.code.hierarchy.arity(t) {
                    let s = src + i;
                    let ds = self.deref(s);
                    let cell = if ds == s {
                        match map.get(&s) {
                            Some(&c) => Cell::Ref(c),
                            None => {
                                map.insert(s, dst + i);
                                match self.heap[s] {
                                    Cell::Ref(_) => Cell::Ref(dst + i),
                                    other => other,
                                }
                            }
                        }
                    } else {
                        Cell::Ref(self.copy_node(ds, &mut map, &mut work))
                    };
                    self.heap[dst + i] = cell;
                }
            }
        }
        self.floor = self.h();
        out
    }

    fn copy_node(&mut self, d: usize, map: &mut HashMap<usize, usize>, work: &mut Vec<(usize, usize)>) -> usize {
        if let Some(&c) = map.get(&d) {
            return c;
        }
        let c = self.h();
        match self.heap[d] {
            Cell::Str(t) => {
                self.heap.push(Cell::Str(t));
                for k in 1..=self.code.hierarchy.arity(t) {
                    self.heap.push(Cell::Ref(c + k));
                }
                work.push((d, c));
            }
            Cell::Var(t) => {
                self.heap.push(Cell::Var(t));
            }
            Cell::Ref(_) => {
                self.heap.push(Cell::Ref(c));
            }
        }
        map.insert(d, c);
        c
    }

    fn add_complete(&mut self, l: usize, r: usize, a: usize) {
        self.chart.entry(l, r).complete.add(a);
        self.trace(1, || format!("complete edge [{l},{r}] at {a}"));
    }

    fn run_facts(&mut self) -> Result<(), MachineError> {
        for block in &self.code.facts {
            for i in 0..=self.len {
                self.regs = vec![0];
                for ins in block {
                    self.exec_put(*ins)?;
                }
                let a = self.reg(1)?;
                self.add_complete(i, i, a);
            }
        }
        self.regs = vec![0];
        self.floor = self.h();
        self.mark = (self.trail.len(), self.h());
        Ok(())
    }

    fn exec_put(&mut self, ins: Instr) -> Result<(), MachineError> {
        match ins {
            Instr::PutNode(t, r) => {
                let a = self.h();
                self.heap.push(Cell::Str(t));
                for k in 1..=self.code.hierarchy.arity(t) {
                    self.heap.push(Cell::Ref(a + k));
                }
                self.set_reg(r, a);
            }
            Instr::PutVar(t, r) => {
                let a = self.push(Cell::Var(t));
                self.set_reg(r, a);
            }
            Instr::PutArc(from, off, to) => {
                let (from, to) = (self.reg(from)?, self.reg(to)?);
                self.heap[from + off] = Cell::Ref(to);
            }
            other => {
                return Err(MachineError::InvalidInstruction { pc: self.pc, instr: other.mnemonic().to_string() })
            }
        }
        Ok(())
    }

    /// Executes one instruction.
    pub fn step(&mut self) -> Result<Status, MachineError> {
        if self.status == Status::Halted {
            return Ok(Status::Halted);
        }
        if self.segment == Segment::Query && self.pc >= self.query.len() {
            self.run_facts()?;
            self.segment = Segment::Program;
            self.pc = 0;
        }
        self.steps += 1;
        if self.steps > self.budget {
            return Err(MachineError::BudgetExhausted(self.budget));
        }
        let ins = match self.segment {
            Segment::Query => self.query[self.pc],
            Segment::Program => match self.code.program.get(self.pc) {
                Some(&i) => i,
                None => {
                    self.status = Status::Halted;
                    return Ok(Status::Halted);
                }
            },
        };
        if self.trace_level >= 2 {
            let h = &self.code.hierarchy;
            let text = ins.render(h, &|l| format!("@{l}"));
            let (seg, pc) = (self.segment, self.pc);
            self.trace(2, || format!("{seg:?} {pc:5}  {text}"));
        }
        self.exec(ins)?;
        Ok(self.status)
    }

    fn exec(&mut self, ins: Instr) -> Result<(), MachineError> {
        use Instr::*;
        let mut next = self.pc + 1;
        match ins {
            PutNode(..) | PutVar(..) | PutArc(..) => self.exec_put(ins)?,
            Proceed(r) | SameWord(r) => {
                let a = self.reg(r)?;
                self.add_complete(self.len, self.len + 1, a);
                if matches!(ins, Proceed(_)) {
                    self.len += 1;
                }
            }
            GetStructure(t, r) => {
                let mut a = self.deref(self.reg(r)?);
                if self.is_self_ref(a) {
                    let s = self.h();
                    self.heap.push(Cell::Str(t));
                    let n = self.code.hierarchy.arity(t);
                    for k in 1..=n {
                        self.heap.push(Cell::Ref(s + k));
                    }
                    self.bind(a, s);
                    for k in (1..=n).rev() {
                        self.stack.push((Action::Copy, s + k));
                    }
                } else {
                    if let Cell::Var(tv) = self.heap[a] {
                        a = self.expand(a, tv);
                    }
                    if !self.unify_type(t, a) {
                        return self.fail();
                    }
                }
            }
            GetVar(t, r) => {
                let a = self.reg(r)?;
                let v = self.push(Cell::Var(t));
                if !self.unify(v, a) {
                    return self.fail();
                }
            }
            UnifyVariable(r) => {
                let (_, a) = self.pop_stack()?;
                self.set_reg(r, a);
            }
            UnifyValue(r) => {
                let (action, a) = self.pop_stack()?;
                let x = self.reg(r)?;
                match action {
                    Action::Copy => {
                        let d = self.deref(x);
                        self.write(a, Cell::Ref(d));
                    }
                    Action::Unify => {
                        if !self.unify(a, x) {
                            return self.fail();
                        }
                    }
                }
            }
            GetValue(r1, r2) => {
                let (a, b) = (self.reg(r1)?, self.reg(r2)?);
                if !self.unify(a, b) {
                    return self.fail();
                }
            }
            PutRule(l) => {
                for i in 0..=self.len {
                    self.chart.entry(i, i).active.add(ActiveEdge { label: l, regs: vec![0] });
                }
            }
            FirstKey => self.key = Key::first(),
            NextKey => {
                self.key.next();
                let (l, m, r) = self.key.triple();
                if let Some(e) = self.chart.get_mut(l, m) {
                    e.active.init();
                }
                if let Some(e) = self.chart.get_mut(m, r) {
                    e.complete.init();
                }
                self.trace(2, || format!("key ({l},{m},{r})"));
            }
            CheckKey(l) => {
                if self.key.more(self.len) {
                    next = l;
                }
            }
            TstActiveEdges(l) => {
                let (left, mid, _) = self.key.triple();
                if self.chart.get(left, mid).is_none_or(|e| e.active.exhausted()) {
                    next = l;
                }
            }
            NextActiveEdge(l) => {
                let (left, mid, _) = self.key.triple();
                if let Some(e) = self.chart.get_mut(left, mid) {
                    e.active.advance();
                }
                next = l;
            }
            TstCompleteEdges(l) => {
                let (_, mid, right) = self.key.triple();
                match self.chart.get_mut(mid, right) {
                    Some(e) if !e.complete.exhausted() => self.mark = (self.trail.len(), self.heap.len()),
                    Some(e) => {
                        e.complete.init();
                        next = l;
                    }
                    None => next = l,
                }
            }
            NextCompleteEdge(l) => {
                self.unwind(self.mark);
                let (_, mid, right) = self.key.triple();
                if let Some(e) = self.chart.get_mut(mid, right) {
                    e.complete.advance();
                }
                next = l;
            }
            Call => {
                let (left, mid, right) = self.key.triple();
                let edge = self.chart.get(left, mid).and_then(|e| e.active.current()).cloned();
                let comp = self.chart.get(mid, right).and_then(|e| e.complete.current()).copied();
                let (Some(edge), Some(comp)) = (edge, comp) else {
                    return Err(MachineError::InvalidInstruction { pc: self.pc, instr: "call".into() });
                };
                self.regs = edge.regs;
                self.addr = comp;
                self.returns.push(self.pc + 1);
                next = edge.label;
            }
            LoadFs(r) => self.set_reg(r, self.addr),
            CopyActiveEdge(l) => {
                let regs = self.regs.clone();
                let copied = self.copy_all(&regs);
                let (left, _, right) = self.key.triple();
                self.chart.entry(left, right).active.add(ActiveEdge { label: l, regs: copied });
                self.trace(1, || format!("active edge [{left},{right}] -> @{l}"));
                next = self.pop_return()?;
            }
            CopyCompleteEdge(r) => {
                let a = self.reg(r)?;
                let c = self.copy_all(&[a])[0];
                let (left, _, right) = self.key.triple();
                self.add_complete(left, right, c);
                next = self.pop_return()?;
            }
            Goal(kind, args) => {
                let nodes = [self.reg(args[0])?, self.reg(args[1])?, self.reg(args[2])?];
                if eval_goal(self, kind, nodes).is_err() {
                    return self.fail();
                }
            }
            EndOfProgram => {
                self.status = Status::Halted;
                next = self.pc;
            }
            BuildStr(_) | BuildRef(_) | BuildRefAndUnify(_) | BuildSelfRef | BuildVar(_) | UnifyFeat(_) | Return
            | Fail => {
                return Err(MachineError::InvalidInstruction { pc: self.pc, instr: ins.mnemonic().to_string() })
            }
        }
        self.pc = next;
        Ok(())
    }

    fn pop_stack(&mut self) -> Result<(Action, usize), MachineError> {
        self.stack
            .pop()
            .ok_or_else(|| MachineError::InvalidInstruction { pc: self.pc, instr: "unify with empty stack".into() })
    }

    fn pop_return(&mut self) -> Result<Label, MachineError> {
        self.returns
            .pop()
            .ok_or_else(|| MachineError::InvalidInstruction { pc: self.pc, instr: "return with empty stack".into() })
    }

    /// Runs until `end_of_program`.
    pub fn run(&mut self) -> Result<(), MachineError> {
        while self.step()? == Status::Running {}
        Ok(())
    }

    /// Executes a block of query instructions directly; returns X1.
    pub fn build(&mut self, block: &[Instr]) -> Result<usize, MachineError> {
        self.regs = vec![0];
        for ins in block {
            self.steps += 1;
            self.exec_put(*ins)?;
        }
        self.reg(1)
    }

    /// Runs program code with X1 set to `addr`. Returns false when
    /// unification fails, after undoing its effects.
    pub fn apply(&mut self, block: &[Instr], addr: usize) -> Result<bool, MachineError> {
        let pc = self.pc;
        self.mark = (self.trail.len(), self.h());
        self.regs = vec![0, addr];
        let mut ok = true;
        for ins in block {
            self.steps += 1;
            match self.exec(*ins) {
                Ok(()) => {}
                Err(MachineError::FailAtTopLevel { .. }) => {
                    ok = false;
                    break;
                }
                Err(e) => {
                    self.pc = pc;
                    return Err(e);
                }
            }
        }
        self.pc = pc;
        Ok(ok)
    }

    /// The complete edges over the whole input that unify with the start
    /// symbol, read back as feature structures.
    pub fn extract_results(&mut self) -> Vec<Tfs> {
        let edges: Vec<usize> =
            self.chart.get(0, self.len).map(|e| e.complete.items().to_vec()).unwrap_or_default();
        let mut out = Vec::new();
        for a in edges {
            let saved = (self.trail.len(), self.h());
            let floor = self.floor;
            let c = self.copy_all(&[a])[0];
            let start = self.build(&self.code.start.clone()).expect("start code only builds");
            if self.unify(c, start) {
                out.push(self.read(c));
            }
            self.stack.clear();
            self.floor = floor;
            self.unwind(saved);
        }
        out
    }

    pub fn outcome(&mut self) -> ParseOutcome {
        let results = self.extract_results();
        ParseOutcome {
            results,
            steps: self.steps,
            len: self.len,
            active_edges: self.chart.active_count(),
            complete_edges: self.chart.complete_count(),
            heap_size: self.h(),
        }
    }

    /// The feature structure at `a` as a graph. Unknown values take the
    /// restrictions of the arcs leading to them.
    pub fn read(&self, a: usize) -> Tfs {
        let h = &self.code.hierarchy;
        let mut g = Graph::default();
        let mut map: HashMap<usize, usize> = HashMap::new();
        let mut work = Vec::new();
        let root_addr = self.deref(a);
        let mut node_of = |d: usize, g: &mut Graph, work: &mut Vec<usize>| -> usize {
            *map.entry(d).or_insert_with(|| {
                let t = match self.heap[d] {
                    Cell::Str(t) | Cell::Var(t) => t,
                    Cell::Ref(_) => TypeId::BOTTOM,
                };
                work.push(d);
                g.add_node(t)
            })
        };
        let root = node_of(root_addr, &mut g, &mut work);
        let mut unknown_in: Vec<(usize, FeatId)> = Vec::new();
        while let Some(d) = work.pop() {
            if let Cell::Str(t) = self.heap[d] {
                let q = node_of(d, &mut g, &mut work);
                for (i, slot) in h.features_of(t).iter().enumerate() {
                    let c = self.deref(d + i + 1);
                    let r = node_of(c, &mut g, &mut work);
                    g.set_arc(q, slot.feature, r);
                    if self.is_self_ref(c) {
                        unknown_in.push((r, slot.feature));
                    }
                }
            }
        }
        for (r, f) in unknown_in {
            if let Some(t) = h.lub(g.types[r], h.restriction(f)) {
                g.types[r] = t;
            }
        }
        Tfs::new(g, root)
    }

    /// `addr | TAG | payload` lines for the cells in `from..=to`.
    pub fn heap_dump(&self, from: usize, to: usize) -> String {
        let h = &self.code.hierarchy;
        let mut out = String::new();
        for a in from..=to.min(self.h().saturating_sub(1)) {
            let line = match self.heap[a] {
                Cell::Str(t) => format!("{a} | STR | {}", h.name(t)),
                Cell::Ref(b) => format!("{a} | REF | {b}"),
                Cell::Var(t) => format!("{a} | VAR | {}", h.name(t)),
            };
            out.push_str(&line);
            out.push('\n');
        }
        out
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Str(t) => write!(f, "STR {}", t.0),
            Cell::Ref(a) => write!(f, "REF {a}"),
            Cell::Var(t) => write!(f, "VAR {}", t.0),
        }
    }
}

impl GoalStore for Machine<'_> {
    type Node = usize;

    fn hierarchy(&self) -> &Hierarchy {
        &self.code.hierarchy
    }

    fn type_of(&mut self, n: usize) -> TypeId {
        let d = self.deref(n);
        match self.heap[d] {
            Cell::Str(t) | Cell::Var(t) => t,
            Cell::Ref(_) => TypeId::BOTTOM,
        }
    }

    fn constrain(&mut self, n: usize, t: TypeId) -> bool {
        let v = self.push(Cell::Var(t));
        self.unify(n, v)
    }

    fn value(&mut self, n: usize, f: FeatId) -> usize {
        let mut d = self.deref(n);
        if let Cell::Var(t) = self.heap[d] {
            d = self.expand(d, t);
        }
        let Cell::Str(t) = self.heap[d] else { unreachable!("goals only ask values of typed nodes") };
        d + self.code.hierarchy.position(t, f).expect("feature appropriate for the node")
    }

    fn cons(&mut self, t: TypeId, arcs: &[(FeatId, usize)]) -> usize {
        let a = self.push(Cell::Str(t));
        for slot in self.code.hierarchy.features_of(t).to_vec() {
            match arcs.iter().find(|(f, _)| *f == slot.feature) {
                Some(&(_, n)) => self.push(Cell::Ref(n)),
                None => self.push(Cell::Var(slot.restriction)),
            };
        }
        a
    }

    fn unify(&mut self, a: usize, b: usize) -> bool {
        Machine::unify(self, a, b)
    }
}

#[cfg(test)]
mod tests;
