//! Machine instructions, object code and its text format.
//!
//! An object file has sections introduced by `%%` lines: `types` holds the
//! hierarchy source, `start` the query code of the start symbol, `rules`
//! the driver and rule blocks, one `empty` section per empty-bodied rule,
//! and one `lexicon word <w>` section per word. Within a section each line
//! is an optional `Lk:` label, a mnemonic and comma-separated operands;
//! `;` starts a comment.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use thiserror::Error;

use crate::compiler::{parse_hierarchy_text, CompileError, GoalKind};
use crate::types::{Hierarchy, TypeId};

pub type Reg = usize;
pub type Label = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Instr {
    PutNode(TypeId, Reg),
    PutArc(Reg, usize, Reg),
    PutVar(TypeId, Reg),
    Proceed(Reg),
    SameWord(Reg),
    GetStructure(TypeId, Reg),
    GetVar(TypeId, Reg),
    UnifyVariable(Reg),
    UnifyValue(Reg),
    GetValue(Reg, Reg),
    BuildStr(TypeId),
    BuildRef(usize),
    BuildRefAndUnify(usize),
    BuildSelfRef,
    BuildVar(TypeId),
    UnifyFeat(usize),
    Return,
    Fail,
    PutRule(Label),
    FirstKey,
    NextKey,
    CheckKey(Label),
    TstActiveEdges(Label),
    NextActiveEdge(Label),
    TstCompleteEdges(Label),
    NextCompleteEdge(Label),
    Call,
    LoadFs(Reg),
    CopyActiveEdge(Label),
    CopyCompleteEdge(Reg),
    Goal(GoalKind, [Reg; 3]),
    EndOfProgram,
}

impl Instr {
    pub fn mnemonic(&self) -> &'static str {
        use Instr::*;
        match self {
            PutNode(..) => "put_node",
            PutArc(..) => "put_arc",
            PutVar(..) => "put_var",
            Proceed(_) => "proceed",
            SameWord(_) => "same_word",
            GetStructure(..) => "get_structure",
            GetVar(..) => "get_var",
            UnifyVariable(_) => "unify_variable",
            UnifyValue(_) => "unify_value",
            GetValue(..) => "get_value",
            BuildStr(_) => "build_str",
            BuildRef(_) => "build_ref",
            BuildRefAndUnify(_) => "build_ref_and_unify",
            BuildSelfRef => "build_self_ref",
            BuildVar(_) => "build_var",
            UnifyFeat(_) => "unify_feat",
            Return => "return",
            Fail => "fail",
            PutRule(_) => "put_rule",
            FirstKey => "first_key",
            NextKey => "next_key",
            CheckKey(_) => "check_key",
            TstActiveEdges(_) => "tst_active_edges",
            NextActiveEdge(_) => "next_active_edge",
            TstCompleteEdges(_) => "tst_complete_edges",
            NextCompleteEdge(_) => "next_complete_edge",
            Call => "call",
            LoadFs(_) => "load_fs",
            CopyActiveEdge(_) => "copy_active_edge",
            CopyCompleteEdge(_) => "copy_complete_edge",
            Goal(..) => "goal",
            EndOfProgram => "end_of_program",
        }
    }

    /// The code address this instruction may branch to, if any.
    pub fn target(&self) -> Option<Label> {
        use Instr::*;
        match *self {
            PutRule(l) | CheckKey(l) | TstActiveEdges(l) | NextActiveEdge(l) | TstCompleteEdges(l)
            | NextCompleteEdge(l) | CopyActiveEdge(l) => Some(l),
            _ => None,
        }
    }

    /// Highest register mentioned.
    pub fn max_reg(&self) -> Reg {
        use Instr::*;
        match *self {
            PutNode(_, r) | PutVar(_, r) | Proceed(r) | SameWord(r) | GetStructure(_, r) | GetVar(_, r)
            | UnifyVariable(r) | UnifyValue(r) | LoadFs(r) | CopyCompleteEdge(r) => r,
            PutArc(a, _, b) | GetValue(a, b) => a.max(b),
            Goal(_, args) => args.into_iter().max().unwrap_or(0),
            _ => 0,
        }
    }

    /// Operands in text form; `label` names code addresses.
    pub fn operands(&self, h: &Hierarchy, label: &dyn Fn(Label) -> String) -> String {
        use Instr::*;
        let ty = |t: TypeId| h.name(t).to_string();
        let ty_ar = |t: TypeId| format!("{}/{}", h.name(t), h.arity(t));
        match *self {
            PutNode(t, r) | GetStructure(t, r) => format!("{},X{r}", ty_ar(t)),
            PutVar(t, r) | GetVar(t, r) => format!("{},X{r}", ty(t)),
            PutArc(a, off, b) => format!("X{a},{off},X{b}"),
            Proceed(r) | SameWord(r) | UnifyVariable(r) | UnifyValue(r) | LoadFs(r) | CopyCompleteEdge(r) => {
                format!("X{r}")
            }
            GetValue(a, b) => format!("X{a},X{b}"),
            BuildStr(t) | BuildVar(t) => ty(t),
            BuildRef(i) | BuildRefAndUnify(i) | UnifyFeat(i) => i.to_string(),
            Goal(kind, [a, b, c]) => format!("{} X{a},X{b},X{c}", kind.name()),
            _ => match self.target() {
                Some(l) => label(l),
                None => String::new(),
            },
        }
    }

    pub fn render(&self, h: &Hierarchy, label: &dyn Fn(Label) -> String) -> String {
        let ops = self.operands(h, label);
        if ops.is_empty() {
            self.mnemonic().to_string()
        } else {
            format!("{} {}", self.mnemonic(), ops)
        }
    }
}

/// `unify_type[t1][t2]` for every pair of types.
#[derive(Clone, Debug)]
pub struct TypeTable {
    n: usize,
    code: Vec<Vec<Instr>>,
}

impl TypeTable {
    pub fn compile(h: &Hierarchy) -> TypeTable {
        let n = h.len();
        let mut code = Vec::with_capacity(n * n);
        for t1 in h.types() {
            for t2 in h.types() {
                code.push(unify_type(h, t1, t2));
            }
        }
        TypeTable { n, code }
    }

    pub fn get(&self, t1: TypeId, t2: TypeId) -> &[Instr] {
        &self.code[t1.index() * self.n + t2.index()]
    }
}

/// The function unifying a program type `t1` with a heap node of type `t2`.
/// It leaves one stack entry per feature of `t1`, in that feature order.
pub fn unify_type(h: &Hierarchy, t1: TypeId, t2: TypeId) -> Vec<Instr> {
    let Some(lub) = h.lub(t1, t2) else { return vec![Instr::Fail] };
    let mut out = Vec::new();
    if lub == t2 {
        for slot in h.features_of(t1) {
            out.push(Instr::UnifyFeat(h.position(t2, slot.feature).expect("t2 carries t1's features")));
        }
    } else {
        out.push(Instr::BuildStr(lub));
        for slot in h.features_of(lub) {
            let in_t1 = h.approp(slot.feature, t1).is_some();
            out.push(match (in_t1, h.position(t2, slot.feature)) {
                (true, Some(i)) => Instr::BuildRefAndUnify(i),
                (false, Some(i)) => Instr::BuildRef(i),
                (true, None) => Instr::BuildSelfRef,
                (false, None) => Instr::BuildVar(slot.restriction),
            });
        }
    }
    out.push(Instr::Return);
    out
}

/// A `%%` header, its line number, and the numbered lines under it.
type Section<'t> = (String, usize, Vec<(usize, &'t str)>);

#[derive(Clone, Debug)]
pub struct ObjectCode {
    pub hierarchy: Hierarchy,
    pub program: Vec<Instr>,
    /// Rule names by the address of their first instruction.
    pub rule_names: BTreeMap<Label, String>,
    pub start: Vec<Instr>,
    pub facts: Vec<Vec<Instr>>,
    pub lexicon: BTreeMap<String, Vec<Instr>>,
    pub types: TypeTable,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ObjectError {
    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: String },
    #[error("bad type section: {0}")]
    Types(#[from] CompileError),
}

impl ObjectCode {
    pub fn new(
        hierarchy: Hierarchy,
        program: Vec<Instr>,
        rule_names: BTreeMap<Label, String>,
        start: Vec<Instr>,
        facts: Vec<Vec<Instr>>,
        lexicon: BTreeMap<String, Vec<Instr>>,
    ) -> ObjectCode {
        let types = TypeTable::compile(&hierarchy);
        ObjectCode { hierarchy, program, rule_names, start, facts, lexicon, types }
    }

    /// Label names for branch targets, numbered in address order.
    pub fn label_names(&self) -> BTreeMap<Label, String> {
        let mut targets: Vec<Label> = self.program.iter().filter_map(Instr::target).collect();
        targets.sort_unstable();
        targets.dedup();
        targets.into_iter().enumerate().map(|(k, a)| (a, format!("L{}", k + 1))).collect()
    }

    fn block(&self, out: &mut String, code: &[Instr], labels: &BTreeMap<Label, String>, show_addr: bool, rules: bool) {
        let h = &self.hierarchy;
        let name = |l: Label| labels.get(&l).cloned().unwrap_or_else(|| format!("@{l}"));
        for (addr, ins) in code.iter().enumerate() {
            let prefix = match labels.get(&addr) {
                Some(l) => format!("{l}:"),
                None => String::new(),
            };
            let text = ins.render(h, &name);
            let mut line = if show_addr { format!("{addr:4} {prefix:<7} {text}") } else { format!("{prefix:<7} {text}") };
            if show_addr && rules {
                if let Some(rule) = self.rule_names.get(&addr) {
                    let _ = write!(line, " ; rule {rule}");
                }
            }
            out.push_str(line.trim_end());
            out.push('\n');
        }
    }

    /// The object file text.
    pub fn to_text(&self) -> String {
        self.render(false)
    }

    /// Human listing with code addresses and rule names.
    pub fn disassemble(&self) -> String {
        self.render(true)
    }

    fn render(&self, listing: bool) -> String {
        let mut out = String::new();
        let none = BTreeMap::new();
        out.push_str("%% types\n");
        out.push_str(&self.hierarchy.to_source());
        out.push_str("%% start\n");
        self.block(&mut out, &self.start, &none, listing, false);
        out.push_str("%% rules\n");
        let labels = self.label_names();
        if !listing {
            for (addr, name) in &self.rule_names {
                let _ = writeln!(out, "; rule {name} at {}", labels.get(addr).map_or("?", String::as_str));
            }
        }
        self.block(&mut out, &self.program, &labels, listing, true);
        for f in &self.facts {
            out.push_str("%% empty\n");
            self.block(&mut out, f, &none, listing, false);
        }
        for (w, code) in &self.lexicon {
            let _ = writeln!(out, "%% lexicon word {w}");
            self.block(&mut out, code, &none, listing, false);
        }
        out
    }

    pub fn from_text(text: &str) -> Result<ObjectCode, ObjectError> {
        let mut sections: Vec<Section> = Vec::new();
        for (k, raw) in text.lines().enumerate() {
            if let Some(head) = raw.strip_prefix("%%") {
                sections.push((head.trim().to_string(), k + 1, Vec::new()));
                continue;
            }
            match sections.last_mut() {
                Some(s) => s.2.push((k + 1, raw)),
                None if raw.trim().is_empty() || raw.trim_start().starts_with(';') => {}
                None => return Err(ObjectError::Malformed { line: k + 1, msg: "text before first section".into() }),
            }
        }
        let Some((first, _, type_lines)) = sections.first() else {
            return Err(ObjectError::Malformed { line: 1, msg: "missing `%% types` section".into() });
        };
        if first != "types" {
            return Err(ObjectError::Malformed { line: 1, msg: "first section must be `types`".into() });
        }
        let src: String = type_lines.iter().map(|(_, l)| format!("{l}\n")).collect();
        let hierarchy = parse_hierarchy_text(&src)?;
        let mut start = Vec::new();
        let mut program = Vec::new();
        let mut rule_names = BTreeMap::new();
        let mut facts = Vec::new();
        let mut lexicon = BTreeMap::new();
        for (head, line, lines) in &sections[1..] {
            let parsed = parse_block(&hierarchy, lines)?;
            match head.as_str() {
                "start" => start = parsed.code,
                "rules" => {
                    program = parsed.code;
                    for (name, label) in parsed.rule_comments {
                        let addr = parsed.labels.get(&label).copied().ok_or_else(|| ObjectError::Malformed {
                            line: *line,
                            msg: format!("unknown label {label}"),
                        })?;
                        rule_names.insert(addr, name);
                    }
                }
                "empty" => facts.push(parsed.code),
                other => match other.strip_prefix("lexicon word ") {
                    Some(w) => {
                        lexicon.insert(w.trim().to_string(), parsed.code);
                    }
                    None => {
                        return Err(ObjectError::Malformed { line: *line, msg: format!("unknown section `{other}`") })
                    }
                },
            }
        }
        Ok(ObjectCode::new(hierarchy, program, rule_names, start, facts, lexicon))
    }
}

struct Parsed {
    code: Vec<Instr>,
    labels: HashMap<String, Label>,
    rule_comments: Vec<(String, String)>,
}

fn parse_block(h: &Hierarchy, lines: &[(usize, &str)]) -> Result<Parsed, ObjectError> {
    let mut labels = HashMap::new();
    let mut pending: Vec<(usize, &str, &str)> = Vec::new();
    let mut rule_comments = Vec::new();
    for &(line, raw) in lines {
        let (body, comment) = match raw.find(';') {
            Some(i) => (&raw[..i], Some(raw[i + 1..].trim())),
            None => (raw, None),
        };
        if let Some(c) = comment {
            if let Some(rest) = c.strip_prefix("rule ") {
                if let Some((name, label)) = rest.split_once(" at ") {
                    rule_comments.push((name.trim().to_string(), label.trim().to_string()));
                }
            }
        }
        let mut body = body.trim();
        if body.is_empty() {
            continue;
        }
        if let Some((l, rest)) = body.split_once(':') {
            if l.starts_with('L') && l[1..].chars().all(|c| c.is_ascii_digit()) && !l[1..].is_empty() {
                labels.insert(l.to_string(), pending.len());
                body = rest.trim();
            }
        }
        let (mn, ops) = body.split_once(char::is_whitespace).unwrap_or((body, ""));
        pending.push((line, mn, ops.trim()));
    }
    let mut code = Vec::new();
    for (line, mn, ops) in pending {
        code.push(parse_instr(h, &labels, line, mn, ops)?);
    }
    Ok(Parsed { code, labels, rule_comments })
}

fn parse_instr(
    h: &Hierarchy,
    labels: &HashMap<String, Label>,
    line: usize,
    mn: &str,
    ops: &str,
) -> Result<Instr, ObjectError> {
    use Instr::*;
    let bad = |msg: String| ObjectError::Malformed { line, msg };
    let args: Vec<&str> = if ops.is_empty() { Vec::new() } else { ops.split(',').map(str::trim).collect() };
    let want = |n: usize| {
        if args.len() == n {
            Ok(())
        } else {
            Err(bad(format!("`{mn}` takes {n} operands")))
        }
    };
    let reg = |s: &str| -> Result<Reg, ObjectError> {
        s.strip_prefix('X').and_then(|n| n.parse().ok()).filter(|&n| n > 0).ok_or_else(|| bad(format!("bad register `{s}`")))
    };
    let num = |s: &str| -> Result<usize, ObjectError> { s.parse().map_err(|_| bad(format!("bad number `{s}`"))) };
    let ty = |s: &str| -> Result<TypeId, ObjectError> {
        let name = match s.rsplit_once('/') {
            Some((n, ar)) if ar.chars().all(|c| c.is_ascii_digit()) => n,
            _ => s,
        };
        h.lookup(name).ok_or_else(|| bad(format!("unknown type `{name}`")))
    };
    let label = |s: &str| -> Result<Label, ObjectError> {
        labels.get(s).copied().ok_or_else(|| bad(format!("unknown label `{s}`")))
    };
    Ok(match mn {
        "put_node" | "get_structure" | "put_var" | "get_var" => {
            want(2)?;
            let (t, r) = (ty(args[0])?, reg(args[1])?);
            match mn {
                "put_node" => PutNode(t, r),
                "get_structure" => GetStructure(t, r),
                "put_var" => PutVar(t, r),
                _ => GetVar(t, r),
            }
        }
        "put_arc" => {
            want(3)?;
            PutArc(reg(args[0])?, num(args[1])?, reg(args[2])?)
        }
        "get_value" => {
            want(2)?;
            GetValue(reg(args[0])?, reg(args[1])?)
        }
        "proceed" | "same_word" | "unify_variable" | "unify_value" | "load_fs" | "copy_complete_edge" => {
            want(1)?;
            let r = reg(args[0])?;
            match mn {
                "proceed" => Proceed(r),
                "same_word" => SameWord(r),
                "unify_variable" => UnifyVariable(r),
                "unify_value" => UnifyValue(r),
                "load_fs" => LoadFs(r),
                _ => CopyCompleteEdge(r),
            }
        }
        "build_str" | "build_var" => {
            want(1)?;
            let t = ty(args[0])?;
            if mn == "build_str" {
                BuildStr(t)
            } else {
                BuildVar(t)
            }
        }
        "build_ref" | "build_ref_and_unify" | "unify_feat" => {
            want(1)?;
            let i = num(args[0])?;
            match mn {
                "build_ref" => BuildRef(i),
                "build_ref_and_unify" => BuildRefAndUnify(i),
                _ => UnifyFeat(i),
            }
        }
        "put_rule" | "check_key" | "tst_active_edges" | "next_active_edge" | "tst_complete_edges"
        | "next_complete_edge" | "copy_active_edge" => {
            want(1)?;
            let l = label(args[0])?;
            match mn {
                "put_rule" => PutRule(l),
                "check_key" => CheckKey(l),
                "tst_active_edges" => TstActiveEdges(l),
                "next_active_edge" => NextActiveEdge(l),
                "tst_complete_edges" => TstCompleteEdges(l),
                "next_complete_edge" => NextCompleteEdge(l),
                _ => CopyActiveEdge(l),
            }
        }
        "goal" => {
            let (name, rest) = ops.split_once(char::is_whitespace).ok_or_else(|| bad("goal needs a name".into()))?;
            let kind = GoalKind::from_name(name).ok_or_else(|| bad(format!("unknown goal `{name}`")))?;
            let regs: Vec<&str> = rest.split(',').map(str::trim).collect();
            if regs.len() != 3 {
                return Err(bad("goal takes 3 registers".into()));
            }
            Goal(kind, [reg(regs[0])?, reg(regs[1])?, reg(regs[2])?])
        }
        "build_self_ref" | "return" | "fail" | "first_key" | "next_key" | "call" | "end_of_program" => {
            want(0)?;
            match mn {
                "build_self_ref" => BuildSelfRef,
                "return" => Return,
                "fail" => Fail,
                "first_key" => FirstKey,
                "next_key" => NextKey,
                "call" => Call,
                _ => EndOfProgram,
            }
        }
        other => return Err(bad(format!("unknown instruction `{other}`"))),
    })
}
