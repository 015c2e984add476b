//! A line-oriented inspector for a running machine.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;

use crate::code::Label;
use crate::machine::{Action, Machine, MachineError, Segment, Status};

pub const USAGE: &str = "commands:
  step [n]          execute n instructions (default 1)
  run               run to the next breakpoint or the end
  run-to-label L    run until the program counter reaches label L
  break L           set a breakpoint at label L (or a code address)
  regs              show the register file
  heap A B          dump heap cells A..=B
  chart L R         list the edges of chart entry [L,R]
  stack             show the unification stack
  trail             show the trail
  quit              leave the debugger";

/// What a command produced, and whether the session should end.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reply {
    pub text: String,
    pub quit: bool,
}

impl Reply {
    fn text(text: impl Into<String>) -> Reply {
        Reply { text: text.into(), quit: false }
    }
}

pub struct Debugger<'c> {
    machine: Machine<'c>,
    breakpoints: BTreeSet<Label>,
    labels: BTreeMap<Label, String>,
    error: Option<MachineError>,
}

impl<'c> Debugger<'c> {
    pub fn new(machine: Machine<'c>) -> Self {
        let labels = machine.code().label_names();
        Debugger { machine, breakpoints: BTreeSet::new(), labels, error: None }
    }

    pub fn machine(&self) -> &Machine<'c> {
        &self.machine
    }

    /// Executes one command line.
    pub fn command(&mut self, line: &str) -> Reply {
        let words: Vec<&str> = line.split_whitespace().collect();
        let Some((&cmd, args)) = words.split_first() else { return Reply::text("") };
        let reply = match (cmd, args) {
            ("step" | "s", []) => self.steps(1),
            ("step" | "s", [n]) => match n.parse() {
                Ok(n) => self.steps(n),
                Err(_) => Err(format!("not a number: {n}")),
            },
            ("run" | "r", []) => self.run_until(None),
            ("run-to-label", [l]) => self.label(l).and_then(|a| self.run_until(Some(a))),
            ("break" | "b", [l]) => self.label(l).map(|a| {
                self.breakpoints.insert(a);
                format!("breakpoint at {}", self.describe(a))
            }),
            ("regs", []) => Ok(self.regs()),
            ("heap", [a, b]) => match (a.parse(), b.parse()) {
                (Ok(a), Ok(b)) => Ok(self.machine.heap_dump(a, b)),
                _ => Err("heap expects two addresses".to_string()),
            },
            ("chart", [l, r]) => match (l.parse(), r.parse()) {
                (Ok(l), Ok(r)) => Ok(self.chart(l, r)),
                _ => Err("chart expects two positions".to_string()),
            },
            ("stack", []) => Ok(self.stack()),
            ("trail", []) => Ok(self.trail()),
            ("quit" | "q", []) => return Reply { text: String::new(), quit: true },
            _ => Err(format!("unrecognized command `{}`\n{USAGE}", line.trim())),
        };
        match reply {
            Ok(text) | Err(text) => Reply::text(text),
        }
    }

    fn label(&self, name: &str) -> Result<Label, String> {
        if let Some((&a, _)) = self.labels.iter().find(|(_, n)| n.as_str() == name) {
            return Ok(a);
        }
        name.trim_start_matches('@').parse().map_err(|_| format!("unknown label `{name}`"))
    }

    fn describe(&self, a: Label) -> String {
        match self.labels.get(&a) {
            Some(n) => format!("{n} ({a})"),
            None => format!("@{a}"),
        }
    }

    fn position(&self) -> String {
        let (seg, pc) = self.machine.position();
        let h = &self.machine.code().hierarchy;
        let next = match self.machine.next_instr() {
            Some(i) => i.render(h, &|l| self.labels.get(&l).cloned().unwrap_or_else(|| format!("@{l}"))),
            None => "(end)".to_string(),
        };
        match seg {
            Segment::Query => format!("query {pc}: {next}"),
            Segment::Program => format!("{}: {next}", self.describe(pc)),
        }
    }

    fn step_once(&mut self) -> Result<Status, String> {
        if let Some(e) = &self.error {
            return Err(format!("machine stopped: {e}"));
        }
        self.machine.step().map_err(|e| {
            let msg = format!("machine stopped: {e}");
            self.error = Some(e);
            msg
        })
    }

    fn steps(&mut self, n: usize) -> Result<String, String> {
        for _ in 0..n {
            if self.step_once()? == Status::Halted {
                return Ok("halted".to_string());
            }
        }
        Ok(self.position())
    }

    fn run_until(&mut self, target: Option<Label>) -> Result<String, String> {
        let mut first = true;
        loop {
            let (seg, pc) = self.machine.position();
            if !first && seg == Segment::Program && (target == Some(pc) || self.breakpoints.contains(&pc)) {
                return Ok(format!("stopped at {}", self.position()));
            }
            first = false;
            if self.step_once()? == Status::Halted {
                let n = self.machine.chart().complete_count();
                return Ok(format!("halted after {} steps, {n} complete edges", self.machine.steps()));
            }
        }
    }

    fn regs(&self) -> String {
        let mut out = String::new();
        for (i, a) in self.machine.registers().iter().enumerate().skip(1) {
            if *a != 0 {
                let _ = writeln!(out, "X{i} = {a}");
            }
        }
        let k = self.machine.key();
        let _ = writeln!(
            out,
            "LEFT {} MID {} RIGHT {} LEN {} ADDR {} H {}",
            k.left,
            k.mid,
            k.right,
            self.machine.len(),
            self.machine.addr_register(),
            self.machine.h()
        );
        out
    }

    fn chart(&self, l: usize, r: usize) -> String {
        let Some(e) = self.machine.chart().get(l, r) else { return format!("[{l},{r}] is empty") };
        let mut out = String::new();
        for a in e.active.items() {
            let regs: Vec<String> = a.regs.iter().skip(1).map(|x| x.to_string()).collect();
            let _ = writeln!(out, "active -> {} [{}]", self.describe(a.label), regs.join(" "));
        }
        let h = &self.machine.code().hierarchy;
        for &a in e.complete.items() {
            let _ = writeln!(out, "complete at {a}: {}", crate::term::render(h, &self.machine.read(a)));
        }
        out
    }

    fn stack(&self) -> String {
        self.machine
            .stack()
            .iter()
            .rev()
            .map(|(act, a)| match act {
                Action::Copy => format!("copy {a}\n"),
                Action::Unify => format!("unify {a}\n"),
            })
            .collect()
    }

    fn trail(&self) -> String {
        self.machine.trail().iter().rev().map(|(a, old)| format!("{a} was {old}\n")).collect()
    }
}
