//! Output formats for parse results: linear terms, attribute-value
//! matrices and JSON lines.

use std::collections::HashMap;
use std::fmt::Write;
use std::str::FromStr;

use serde_json::json;

use crate::term::{prune, render};
use crate::tfs::{NodeId, Tfs};
use crate::types::Hierarchy;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Term,
    Avm,
    Jsonl,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "term" => Ok(Format::Term),
            "avm" => Ok(Format::Avm),
            "jsonl" => Ok(Format::Jsonl),
            other => Err(format!("unknown format `{other}` (expected term, avm or jsonl)")),
        }
    }
}

/// An attribute-value matrix with upper-case feature names, one feature per
/// line. Features whose values carry no information are left out.
pub fn avm(h: &Hierarchy, a: &Tfs) -> String {
    let a = prune(h, a);
    let mut indeg = vec![0usize; a.graph.len()];
    for arcs in &a.graph.arcs {
        for &(_, r) in arcs {
            indeg[r] += 1;
        }
    }
    let mut p = AvmPrinter { h, a: &a, shared: indeg.iter().map(|&d| d > 1).collect(), tags: HashMap::new() };
    let mut out = String::new();
    p.node(a.root, 0, &mut out);
    out
}

struct AvmPrinter<'a> {
    h: &'a Hierarchy,
    a: &'a Tfs,
    shared: Vec<bool>,
    tags: HashMap<NodeId, usize>,
}

impl AvmPrinter<'_> {
    fn node(&mut self, q: NodeId, indent: usize, out: &mut String) {
        let mut col = indent;
        if self.shared[q] {
            if let Some(n) = self.tags.get(&q) {
                let _ = write!(out, "#{n}");
                return;
            }
            let n = self.tags.len() + 1;
            self.tags.insert(q, n);
            let tag = format!("#{n} ");
            col += tag.len();
            out.push_str(&tag);
        }
        let name = self.h.name(self.a.graph.types[q]);
        let arcs = &self.a.graph.arcs[q];
        if arcs.is_empty() {
            out.push_str(name);
            return;
        }
        let _ = write!(out, "[{name}");
        let width = arcs.iter().map(|&(f, _)| self.h.feature_name(f).len()).max().unwrap_or(0);
        for &(f, r) in arcs {
            let label = self.h.feature_name(f).to_uppercase();
            let _ = write!(out, "\n{:col$} {label:width$} ", "", col = col);
            self.node(r, col + width + 2, out);
        }
        out.push(']');
    }
}

/// One JSON object for a result of a parse.
pub fn json_result(h: &Hierarchy, source: &str, words: &[&str], index: usize, a: &Tfs) -> String {
    json!({
        "source": source,
        "input": words.join(" "),
        "result": index,
        "type": h.name(a.root_type()),
        "term": render(h, a),
    })
    .to_string()
}

/// The closing summary line of a parse in JSON lines output.
pub fn json_summary(source: &str, words: &[&str], count: usize, extra: &[(&str, u64)]) -> String {
    let mut v = json!({
        "source": source,
        "input": words.join(" "),
        "results": count,
    });
    for (k, n) in extra {
        v[*k] = json!(n);
    }
    v.to_string()
}

/// Renders every result in the requested format. JSON lines end with the
/// summary line; the other formats separate results by blank lines.
pub fn results(h: &Hierarchy, format: Format, source: &str, words: &[&str], rs: &[Tfs], extra: &[(&str, u64)]) -> String {
    let mut out = String::new();
    match format {
        Format::Term => {
            for a in rs {
                out.push_str(&render(h, a));
                out.push('\n');
            }
        }
        Format::Avm => {
            for (i, a) in rs.iter().enumerate() {
                if i > 0 {
                    out.push('\n');
                }
                out.push_str(&avm(h, a));
                out.push('\n');
            }
        }
        Format::Jsonl => {
            for (i, a) in rs.iter().enumerate() {
                out.push_str(&json_result(h, source, words, i, a));
                out.push('\n');
            }
            out.push_str(&json_summary(source, words, rs.len(), extra));
            out.push('\n');
        }
    }
    out
}
