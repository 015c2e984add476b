//! Elaboration of descriptions into typed graphs with type inference:
//! mentioning a feature raises the node to at least the feature's
//! introducer and its value to at least the feature's restriction.

use std::collections::HashMap;

use crate::afs::{AfsError, Builder};
use crate::compiler::syntax::{Desc, MacroDef, Pos};
use crate::compiler::CompileError;
use crate::types::Hierarchy;

struct Frame<'d> {
    params: HashMap<&'d str, (&'d Desc, usize)>,
    locals: HashMap<String, usize>,
}

/// Elaborates the descriptions of one rule or entry; variables are shared
/// across every call on the same elaborator.
pub struct Elaborator<'a> {
    h: &'a Hierarchy,
    macros: &'a HashMap<String, MacroDef>,
    pub builder: Builder<'a>,
    frames: Vec<Frame<'a>>,
    active: Vec<&'a str>,
}

impl<'a> Elaborator<'a> {
    pub fn new(h: &'a Hierarchy, macros: &'a HashMap<String, MacroDef>) -> Self {
        Elaborator {
            h,
            macros,
            builder: Builder::new(h),
            frames: vec![Frame { params: HashMap::new(), locals: HashMap::new() }],
            active: Vec::new(),
        }
    }

    /// A fresh node described by `d`.
    pub fn node(&mut self, d: &'a Desc) -> Result<usize, CompileError> {
        let q = self.builder.node(crate::types::TypeId::BOTTOM);
        self.apply(q, d, 0)?;
        Ok(q)
    }

    /// The node bound to a top-level variable, if any.
    pub fn variable(&self, name: &str) -> Option<usize> {
        self.frames[0].locals.get(name).copied()
    }

    fn inconsistent(&mut self, pos: Pos, q: usize, detail: String) -> CompileError {
        let t = self.builder.type_of(q);
        CompileError::InconsistentDescription { pos, msg: format!("{detail} (node is `{}`)", self.h.name(t)) }
    }

    fn apply(&mut self, q: usize, d: &'a Desc, frame: usize) -> Result<(), CompileError> {
        match d {
            Desc::Type(name, pos) => {
                let t = self
                    .h
                    .lookup(name)
                    .ok_or_else(|| CompileError::UnknownType { name: name.clone(), pos: *pos })?;
                if self.builder.constrain(q, t).is_err() {
                    return Err(self.inconsistent(*pos, q, format!("type `{name}` clashes")));
                }
            }
            Desc::Var(v, pos) => {
                if let Some(&(arg, caller)) = self.frames[frame].params.get(v.as_str()) {
                    return self.apply(q, arg, caller);
                }
                match self.frames[frame].locals.get(v) {
                    Some(&other) => {
                        if self.builder.union(q, other).is_err() {
                            return Err(self.inconsistent(*pos, q, format!("variable `{v}` cannot be shared")));
                        }
                    }
                    None => {
                        self.frames[frame].locals.insert(v.clone(), q);
                    }
                }
            }
            Desc::Feat(fname, value, pos) => {
                let f = self
                    .h
                    .feature(fname)
                    .ok_or_else(|| CompileError::UnknownFeature { name: fname.clone(), pos: *pos })?;
                if self.builder.constrain(q, self.h.introducer(f)).is_err() {
                    return Err(self.inconsistent(*pos, q, format!("feature `{fname}` is not appropriate")));
                }
                let child = match self.builder.ensure_arc(q, f, self.h.restriction(f)) {
                    Ok(c) => c,
                    Err(_) => return Err(self.inconsistent(*pos, q, format!("value of `{fname}` clashes"))),
                };
                self.apply(child, value, frame)?;
            }
            Desc::Conj(parts) => {
                for p in parts {
                    self.apply(q, p, frame)?;
                }
            }
            Desc::Macro(name, args, pos) => {
                let def = self
                    .macros
                    .get(name)
                    .ok_or_else(|| CompileError::UnknownMacro { name: name.clone(), pos: *pos })?;
                if def.params.len() != args.len() {
                    return Err(CompileError::ArityMismatch {
                        name: name.clone(),
                        expected: def.params.len(),
                        found: args.len(),
                        pos: *pos,
                    });
                }
                if self.active.contains(&def.name.as_str()) {
                    return Err(CompileError::RecursiveMacro { name: name.clone(), pos: *pos });
                }
                let params = def.params.iter().map(String::as_str).zip(args.iter().map(|a| (a, frame))).collect();
                self.frames.push(Frame { params, locals: HashMap::new() });
                self.active.push(&def.name);
                let inner = self.frames.len() - 1;
                let result = self.apply(q, &def.body, inner);
                self.active.pop();
                self.frames.pop();
                result?;
            }
        }
        Ok(())
    }
}

impl From<AfsError> for CompileError {
    fn from(e: AfsError) -> Self {
        CompileError::InconsistentDescription { pos: Pos::default(), msg: e.to_string() }
    }
}
