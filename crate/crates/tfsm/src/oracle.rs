//! Declarative reference parser: items over abstract multi-rooted
//! structures and the least fixpoint of the bottom-up parsing operator.
//!
//! Nothing here shares code with the machine beyond the goal built-ins, so
//! the two can be compared result for result.

use std::collections::{HashMap, HashSet};

use thiserror::Error;

use crate::afs::{Amrs, Builder, IndexedPath};
use crate::compiler::{GoalKind, Grammar};
use crate::goals::eval_goal;
use crate::tfs::{Mrs, Tfs, TfsError};
use crate::types::Hierarchy;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("unknown word `{0}`")]
    UnknownWord(String),
    #[error("lexical entry or rule is cyclic: {0}")]
    Cyclic(#[from] TfsError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Status {
    Active,
    Complete,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Item {
    pub left: usize,
    pub amrs: Amrs,
    pub right: usize,
    pub status: Status,
}

#[derive(Clone, Copy, Debug)]
pub struct Budget {
    pub iterations: usize,
    pub items: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Budget { iterations: 200, items: 20_000 }
    }
}

#[derive(Clone, Debug)]
pub struct Fixpoint {
    pub items: Vec<Item>,
    pub iterations: usize,
    pub exhausted: bool,
    /// Spanning complete structures unified with the start symbol.
    pub results: Vec<Amrs>,
}

impl Fixpoint {
    pub fn success(&self) -> bool {
        !self.results.is_empty()
    }
}

struct RuleInfo {
    amrs: Amrs,
    goals: Vec<(GoalKind, [IndexedPath; 3])>,
}

/// A grammar in the form the operator consumes.
pub struct Oracle<'g> {
    h: &'g Hierarchy,
    rules: Vec<RuleInfo>,
    facts: Vec<Amrs>,
    lexicon: HashMap<&'g str, Vec<Amrs>>,
    start: Amrs,
}

impl<'g> Oracle<'g> {
    pub fn new(g: &'g Grammar) -> Result<Oracle<'g>, OracleError> {
        let rules = g.rules.iter().map(|r| RuleInfo { amrs: r.amrs(), goals: r.goal_paths() }).collect();
        let facts = g.empties.iter().map(Tfs::abs).collect::<Result<_, _>>()?;
        let mut lexicon = HashMap::new();
        for (w, entries) in &g.lexicon {
            lexicon.insert(w.as_str(), entries.iter().map(Tfs::abs).collect::<Result<Vec<_>, _>>()?);
        }
        Ok(Oracle { h: &g.hierarchy, rules, facts, lexicon, start: g.start.abs()? })
    }

    pub fn hierarchy(&self) -> &'g Hierarchy {
        self.h
    }

    fn categories(&self, word: &str) -> Result<&[Amrs], OracleError> {
        self.lexicon.get(word).map(Vec::as_slice).ok_or_else(|| OracleError::UnknownWord(word.to_string()))
    }

    /// Every sequence of lexical categories for `words[j-1..k]` (1-based,
    /// inclusive); the empty span gives only the empty sequence.
    pub fn pre_terminals(&self, words: &[&str], j: usize, k: usize) -> Result<Vec<Amrs>, OracleError> {
        let mut out = vec![Amrs::lambda()];
        for w in words.iter().take(k).skip(j.saturating_sub(1)) {
            let cats = self.categories(w)?;
            out = out.iter().flat_map(|prefix| cats.iter().map(move |c| prefix.concat(c))).collect();
        }
        Ok(out)
    }

    fn static_items(&self, words: &[&str]) -> Result<Vec<Item>, OracleError> {
        let n = words.len();
        let mut out = Vec::new();
        for i in 0..=n {
            out.push(Item { left: i, amrs: Amrs::lambda(), right: i, status: Status::Active });
            for f in &self.facts {
                out.push(Item { left: i, amrs: f.clone(), right: i, status: Status::Complete });
            }
        }
        for (i, w) in words.iter().enumerate() {
            for c in self.categories(w)? {
                out.push(Item { left: i, amrs: c.clone(), right: i + 1, status: Status::Complete });
            }
        }
        Ok(out)
    }

    /// Moves the dot of `active` over `complete` within every rule long enough.
    fn dot_moves(&self, active: &Item, complete: &Item, out: &mut Vec<Item>) {
        let k = active.amrs.len();
        for rule in &self.rules {
            let m = rule.amrs.len();
            if k + 1 >= m {
                continue;
            }
            let next = rule.amrs.root_type(k);
            if self.h.lub(next, complete.amrs.root_type(0)).is_none() {
                continue;
            }
            let prefix: Vec<usize> = (1..=k).collect();
            let Ok(b) = Amrs::unify_in_context(self.h, &rule.amrs, &prefix, &active.amrs) else { continue };
            let Ok(c) = Amrs::unify_in_context(self.h, &b, &[k + 1], &complete.amrs) else { continue };
            out.push(Item {
                left: active.left,
                amrs: c.substructure(1, k + 1).expect("prefix in range"),
                right: complete.right,
                status: Status::Active,
            });
        }
    }

    /// Completes `active` against every rule whose body it covers.
    fn completions(&self, active: &Item, out: &mut Vec<Item>) {
        let k = active.amrs.len();
        for rule in &self.rules {
            let m = rule.amrs.len();
            if k + 1 != m {
                continue;
            }
            let body: Vec<usize> = (1..m).collect();
            let Ok(c) = Amrs::unify_in_context(self.h, &rule.amrs, &body, &active.amrs) else { continue };
            let Some(head) = self.run_goals(&c, &rule.goals) else { continue };
            out.push(Item { left: active.left, amrs: head, right: active.right, status: Status::Complete });
        }
    }

    fn run_goals(&self, c: &Amrs, goals: &[(GoalKind, [IndexedPath; 3])]) -> Option<Amrs> {
        let m = c.len();
        if goals.is_empty() {
            return Some(c.element(m).expect("head index"));
        }
        let mut b = Builder::new(self.h);
        let roots = b.add_amrs(c);
        for (kind, paths) in goals {
            let nodes = paths.clone().map(|(i, p)| {
                p.iter().fold(roots[i], |q, &f| b.arc(q, f).expect("goal paths exist in the rule"))
            });
            eval_goal(&mut b, *kind, nodes).ok()?;
        }
        b.to_amrs(&[roots[m - 1]]).ok()
    }

    /// One application of the operator to `items`.
    pub fn step(&self, words: &[&str], items: &[Item]) -> Result<Vec<Item>, OracleError> {
        let mut out = self.static_items(words)?;
        for a in items.iter().filter(|x| x.status == Status::Active) {
            for c in items.iter().filter(|x| x.status == Status::Complete && x.left == a.right) {
                self.dot_moves(a, c, &mut out);
            }
            self.completions(a, &mut out);
        }
        let mut seen = HashSet::new();
        out.retain(|x| seen.insert(x.clone()));
        Ok(out)
    }

    /// Iterates the operator from the empty set until nothing new appears or
    /// the budget runs out. With `filter`, an item is kept only if no item
    /// over the same span and status is at least as general.
    pub fn fixpoint(&self, words: &[&str], budget: Budget, filter: bool) -> Result<Fixpoint, OracleError> {
        let mut set = ItemSet::new(self.h, filter);
        let mut delta: Vec<usize> = Vec::new();
        for x in self.static_items(words)? {
            if let Some(id) = set.insert(x) {
                delta.push(id);
            }
        }
        let mut iterations = 1;
        let mut exhausted = false;
        while !delta.is_empty() {
            if iterations >= budget.iterations || set.live() > budget.items {
                exhausted = true;
                break;
            }
            iterations += 1;
            let mut produced = Vec::new();
            let fresh: HashSet<usize> = delta.iter().copied().collect();
            for &id in &delta {
                let Some(x) = set.get(id).cloned() else { continue };
                match x.status {
                    Status::Active => {
                        for c in set.complete_from(x.right) {
                            self.dot_moves(&x, &c, &mut produced);
                        }
                        self.completions(&x, &mut produced);
                    }
                    Status::Complete => {
                        for (aid, a) in set.active_to(x.left) {
                            if !fresh.contains(&aid) {
                                self.dot_moves(&a, &x, &mut produced);
                            }
                        }
                    }
                }
            }
            delta.clear();
            for x in produced {
                if let Some(id) = set.insert(x) {
                    delta.push(id);
                }
            }
        }
        let n = words.len();
        let mut results = Vec::new();
        for x in set.items() {
            if x.status == Status::Complete && x.left == 0 && x.right == n {
                if let Ok(r) = Amrs::unify(self.h, &x.amrs, &self.start) {
                    results.push(r);
                }
            }
        }
        Ok(Fixpoint { items: set.items().cloned().collect(), iterations, exhausted, results })
    }

    /// Replaces element `j` (1-based) of `a` by the body of rule `rule`,
    /// specializing both sides as needed; `None` if the head does not match.
    pub fn strong_derive(&self, a: &Amrs, j: usize, rule: usize) -> Option<Amrs> {
        let r = &self.rules.get(rule)?.amrs;
        if j == 0 || j > a.len() {
            return None;
        }
        let mut b = Builder::new(self.h);
        let ra = b.add_amrs(a);
        let rr = b.add_amrs(r);
        b.union(ra[j - 1], rr[r.len() - 1]).ok()?;
        let mut roots: Vec<usize> = ra[..j - 1].to_vec();
        roots.extend_from_slice(&rr[..r.len() - 1]);
        roots.extend_from_slice(&ra[j..]);
        b.to_amrs(&roots).ok()
    }

    pub fn rule_amrs(&self, rule: usize) -> &Amrs {
        &self.rules[rule].amrs
    }
}

/// Items with per-span indexes; with the filter on, membership is up to
/// subsumption and more specific items are evicted.
struct ItemSet<'h> {
    h: &'h Hierarchy,
    filter: bool,
    slots: Vec<Option<Item>>,
    exact: HashSet<Item>,
    by_span: HashMap<(usize, usize, Status), Vec<usize>>,
    active_by_right: HashMap<usize, Vec<usize>>,
    complete_by_left: HashMap<usize, Vec<usize>>,
}

impl<'h> ItemSet<'h> {
    fn new(h: &'h Hierarchy, filter: bool) -> Self {
        ItemSet {
            h,
            filter,
            slots: Vec::new(),
            exact: HashSet::new(),
            by_span: HashMap::new(),
            active_by_right: HashMap::new(),
            complete_by_left: HashMap::new(),
        }
    }

    fn insert(&mut self, x: Item) -> Option<usize> {
        if self.exact.contains(&x) {
            return None;
        }
        let key = (x.left, x.right, x.status);
        if self.filter {
            let same = self.by_span.get(&key).cloned().unwrap_or_default();
            for &id in &same {
                if let Some(y) = &self.slots[id] {
                    if y.amrs.subsumes(self.h, &x.amrs) {
                        return None;
                    }
                }
            }
            for &id in &same {
                let evict = matches!(&self.slots[id], Some(y) if x.amrs.subsumes(self.h, &y.amrs));
                if evict {
                    let y = self.slots[id].take().expect("checked above");
                    self.exact.remove(&y);
                }
            }
        }
        let id = self.slots.len();
        self.exact.insert(x.clone());
        self.by_span.entry(key).or_default().push(id);
        match x.status {
            Status::Active => self.active_by_right.entry(x.right).or_default().push(id),
            Status::Complete => self.complete_by_left.entry(x.left).or_default().push(id),
        }
        self.slots.push(Some(x));
        Some(id)
    }

    fn get(&self, id: usize) -> Option<&Item> {
        self.slots[id].as_ref()
    }

    fn live(&self) -> usize {
        self.exact.len()
    }

    fn complete_from(&self, left: usize) -> Vec<Item> {
        let ids = self.complete_by_left.get(&left).map(Vec::as_slice).unwrap_or(&[]);
        ids.iter().filter_map(|&id| self.slots[id].clone()).collect()
    }

    fn active_to(&self, right: usize) -> Vec<(usize, Item)> {
        let ids = self.active_by_right.get(&right).map(Vec::as_slice).unwrap_or(&[]);
        ids.iter().filter_map(|&id| self.slots[id].clone().map(|x| (id, x))).collect()
    }

    fn items(&self) -> impl Iterator<Item = &Item> {
        self.slots.iter().flatten()
    }
}

/// Keeps the items for which no other item over the same span and status
/// is strictly more general.
pub fn apply_filter(h: &Hierarchy, items: &[Item]) -> Vec<Item> {
    let mut out: Vec<Item> = Vec::new();
    for (k, x) in items.iter().enumerate() {
        let beaten = items.iter().enumerate().any(|(l, y)| {
            l != k
                && y.left == x.left
                && y.right == x.right
                && y.status == x.status
                && y.amrs.subsumes(h, &x.amrs)
                && (!x.amrs.subsumes(h, &y.amrs) || l < k)
        });
        if !beaten {
            out.push(x.clone());
        }
    }
    out
}

/// Drops duplicates and every structure strictly more specific than another
/// one, returning canonical text sorted for comparison.
pub fn most_general_texts(h: &Hierarchy, results: &[Tfs]) -> Vec<String> {
    let pruned: Vec<Tfs> = results.iter().map(|t| crate::term::prune(h, t)).collect();
    let mut keep: Vec<String> = Vec::new();
    for (k, x) in pruned.iter().enumerate() {
        let beaten = pruned.iter().enumerate().any(|(l, y)| {
            l != k && y.subsumes(h, x).is_some() && (x.subsumes(h, y).is_none() || l < k)
        });
        if !beaten {
            keep.push(crate::term::render(h, x));
        }
    }
    keep.sort();
    keep
}

pub fn amrs_to_tfs(a: &Amrs) -> Tfs {
    let m = Mrs::conc(a);
    Tfs::new(m.graph, m.roots[0])
}
