//! Compile-time removal of empty categories. Every body element that unifies
//! with an empty category yields a shorter derived rule; derived rules are
//! not expanded again. Derived rules left without a body become facts.

use crate::afs::Builder;
use crate::compiler::{restrict_rule, Goal, Rule};
use crate::goals::eval_goal;
use crate::tfs::{Graph, Tfs};
use crate::types::Hierarchy;

/// Copies `g` into `b`, returning the builder node of every graph node.
pub(crate) fn add_graph(b: &mut Builder<'_>, g: &Graph) -> Vec<usize> {
    let nodes: Vec<usize> = g.types.iter().map(|&t| b.node(t)).collect();
    for (q, arcs) in g.arcs.iter().enumerate() {
        for &(f, r) in arcs {
            b.add_arc(nodes[q], f, nodes[r]).expect("a fresh copy has no conflicting arcs");
        }
    }
    nodes
}

#[derive(Clone, Debug, Default)]
pub struct Expansion {
    pub rules: Vec<Rule>,
    pub facts: Vec<Tfs>,
}

/// The original rules followed by the derived ones, plus the facts derived
/// from rules whose whole body can be empty.
pub fn expand_empty_categories(h: &Hierarchy, rules: &[Rule], empties: &[Tfs]) -> Expansion {
    let mut out = Expansion { rules: rules.to_vec(), facts: Vec::new() };
    for rule in rules {
        for i in 0..rule.body_len() {
            for (k, e) in empties.iter().enumerate() {
                let Some(derived) = drop_element(h, rule, i, e) else { continue };
                match derived {
                    Derived::Rule(mut r) => {
                        r.name = format!("{}~{}e{}", rule.name, i + 1, k + 1);
                        out.rules.push(r);
                    }
                    Derived::Fact(f) => out.facts.push(f),
                }
            }
        }
    }
    out
}

enum Derived {
    Rule(Rule),
    Fact(Tfs),
}

fn drop_element(h: &Hierarchy, rule: &Rule, i: usize, e: &Tfs) -> Option<Derived> {
    let mut b = Builder::new(h);
    let nodes = add_graph(&mut b, &rule.graph);
    let enodes = add_graph(&mut b, &e.graph);
    b.union(nodes[rule.roots[i]], enodes[e.root]).ok()?;
    let mut roots: Vec<usize> = rule.roots.iter().map(|&r| nodes[r]).collect();
    roots.remove(i);
    let goals: Vec<Goal> =
        rule.goals.iter().map(|g| Goal { kind: g.kind, args: g.args.map(|a| nodes[a]) }).collect();
    if roots.len() == 1 {
        for g in &goals {
            eval_goal(&mut b, g.kind, g.args).ok()?;
        }
        let (graph, r) = b.to_graph(&roots);
        return Some(Derived::Fact(Tfs::new(graph, r[0])));
    }
    let mut all = roots.clone();
    for g in &goals {
        all.extend_from_slice(&g.args);
    }
    let (graph, mapped) = b.to_graph(&all);
    let n = roots.len();
    let goals: Vec<Goal> = goals
        .iter()
        .enumerate()
        .map(|(k, g)| Goal { kind: g.kind, args: std::array::from_fn(|j| mapped[n + 3 * k + j]) })
        .collect();
    let (graph, roots, goals) = restrict_rule(&graph, &mapped[..n], &goals);
    Some(Derived::Rule(Rule { name: rule.name.clone(), graph, roots, goals }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compiler::load_grammar;
    use crate::term::render;

    const OPT_DET: &str = "bot sub [cat, atom].
  cat sub [np, det, n, s].
  atom sub [].
np rule np ===> cat> det, cat> n.
s rule s ===> cat> np.
empty det.
dog ---> n.";

    #[test]
    fn empty_det_shortens_binary_rule() {
        let g = load_grammar(OPT_DET).unwrap();
        let ex = expand_empty_categories(&g.hierarchy, &g.rules, &g.empties);
        assert_eq!(ex.rules.len(), 3);
        let derived = &ex.rules[2];
        assert_eq!(derived.body_len(), 1);
        assert_eq!(g.hierarchy.name(derived.graph.types[derived.roots[0]]), "n");
        assert!(ex.facts.is_empty());
    }

    #[test]
    fn unit_rule_over_empty_becomes_fact() {
        let text = format!("{OPT_DET}\nd rule np ===> cat> det.");
        let g = load_grammar(&text).unwrap();
        let ex = expand_empty_categories(&g.hierarchy, &g.rules, &g.empties);
        assert_eq!(ex.facts.len(), 1);
        assert_eq!(render(&g.hierarchy, &ex.facts[0]), "np");
    }

    #[test]
    fn no_empties_leaves_rules_alone() {
        let text = OPT_DET.replace("empty det.", "");
        let g = load_grammar(&text).unwrap();
        let ex = expand_empty_categories(&g.hierarchy, &g.rules, &g.empties);
        assert_eq!(ex.rules.len(), g.rules.len());
    }
}
