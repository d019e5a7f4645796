//! Symbol-dependency graph and transitive-closure ordering.
//!
//! Edges run from user to used symbol. `implied_closure` returns everything
//! reachable from a target function, ordered so each symbol precedes its
//! users; mutually recursive groups are kept together in source order.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use super::parser::{SymbolDecl, SymbolKind, TranslationUnit};

#[derive(Debug, thiserror::Error)]
pub enum GraphError {
    #[error("target function `{0}` not found in the symbol graph")]
    TargetNotFound(String),
}

#[derive(Debug, Clone)]
pub struct SymbolGraph {
    pub nodes: Vec<SymbolDecl>,
    /// Directed (user, used) pairs, indexes into `nodes`.
    pub edges: BTreeSet<(usize, usize)>,
    /// Referenced names that resolve to no symbol in this unit.
    pub external_unresolved: BTreeSet<String>,
    name_index: HashMap<String, usize>,
}

impl SymbolGraph {
    /// Assemble a graph from parts. Edges must index into `nodes`.
    pub fn new(
        nodes: Vec<SymbolDecl>,
        edges: BTreeSet<(usize, usize)>,
        external_unresolved: BTreeSet<String>,
    ) -> Self {
        debug_assert!(edges
            .iter()
            .all(|&(a, b)| a < nodes.len() && b < nodes.len()));
        let name_index = build_name_index(&nodes);
        SymbolGraph {
            nodes,
            edges,
            external_unresolved,
            name_index,
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn resolve(&self, name: &str) -> Option<usize> {
        self.name_index.get(name).copied()
    }

    pub fn successors(&self, node: usize) -> impl Iterator<Item = usize> + '_ {
        self.edges
            .range((node, 0)..(node + 1, 0))
            .map(|&(_, used)| used)
    }
}

/// Definitions win over forward declarations; otherwise first declaration.
fn build_name_index(nodes: &[SymbolDecl]) -> HashMap<String, usize> {
    let mut index: HashMap<String, usize> = HashMap::new();
    for (i, s) in nodes.iter().enumerate() {
        let mut claim = |name: &str| {
            match index.get(name) {
                Some(&prev) if nodes[prev].is_definition || !s.is_definition => {}
                _ => {
                    index.insert(name.to_string(), i);
                }
            }
        };
        claim(&s.name);
        for a in &s.aliases {
            claim(a);
        }
    }
    index
}

/// Build the dependency graph of one translation unit. Unresolved names are
/// collected, not treated as errors.
pub fn build_graph(unit: &TranslationUnit) -> SymbolGraph {
    let nodes: Vec<SymbolDecl> = unit.symbols.clone();
    let name_index = build_name_index(&nodes);
    let mut edges = BTreeSet::new();
    let mut external_unresolved = BTreeSet::new();
    for (i, s) in nodes.iter().enumerate() {
        for r in &s.references {
            match name_index.get(r) {
                Some(&j) => {
                    edges.insert((i, j));
                }
                None => {
                    external_unresolved.insert(r.clone());
                }
            }
        }
    }
    SymbolGraph {
        nodes,
        edges,
        external_unresolved,
        name_index,
    }
}

/// Every symbol reachable from `target` (including it), ordered so each
/// symbol precedes its users. Cycles are grouped and emitted in source order
/// within the group.
pub fn implied_closure(graph: &SymbolGraph, target: &str) -> Result<Vec<SymbolDecl>, GraphError> {
    let start = graph
        .resolve(target)
        .filter(|&i| graph.nodes[i].kind == SymbolKind::Function)
        .ok_or_else(|| GraphError::TargetNotFound(target.to_string()))?;

    // reachable set
    let mut reachable = BTreeSet::new();
    let mut queue = VecDeque::new();
    reachable.insert(start);
    queue.push_back(start);
    while let Some(n) = queue.pop_front() {
        for m in graph.successors(n) {
            if reachable.insert(m) {
                queue.push_back(m);
            }
        }
    }

    let order = condensation_order(graph, &reachable);
    Ok(order.into_iter().map(|i| graph.nodes[i].clone()).collect())
}

/// Used-before-user ordering of the reachable subgraph: strongly connected
/// components are collapsed, the condensation is ordered dependencies-first,
/// and members within a component keep source order.
fn condensation_order(graph: &SymbolGraph, reachable: &BTreeSet<usize>) -> Vec<usize> {
    let sccs = tarjan_sccs(graph, reachable);
    // map node -> component
    let mut comp_of: BTreeMap<usize, usize> = BTreeMap::new();
    for (ci, comp) in sccs.iter().enumerate() {
        for &n in comp {
            comp_of.insert(n, ci);
        }
    }
    // condensation edges: user-component -> used-component
    let ncomp = sccs.len();
    let mut deps: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); ncomp]; // outgoing (uses)
    let mut rdeps: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); ncomp];
    for &n in reachable {
        for m in graph.successors(n) {
            if !reachable.contains(&m) {
                continue;
            }
            let (a, b) = (comp_of[&n], comp_of[&m]);
            if a != b {
                deps[a].insert(b);
                rdeps[b].insert(a);
            }
        }
    }
    // Kahn over the condensation, emitting components whose dependencies are
    // all emitted; ties broken by earliest source line for determinism.
    let comp_key = |ci: usize| {
        sccs[ci]
            .iter()
            .map(|&n| graph.nodes[n].span.start_line)
            .min()
            .unwrap_or(0)
    };
    let mut remaining: BTreeSet<usize> = (0..ncomp).collect();
    let mut emitted: Vec<bool> = vec![false; ncomp];
    let mut order = Vec::new();
    while !remaining.is_empty() {
        let mut ready: Vec<usize> = remaining
            .iter()
            .copied()
            .filter(|&ci| deps[ci].iter().all(|&d| emitted[d]))
            .collect();
        debug_assert!(!ready.is_empty(), "condensation must be acyclic");
        ready.sort_by_key(|&ci| comp_key(ci));
        let ci = ready[0];
        let mut members = sccs[ci].clone();
        members.sort_by_key(|&n| graph.nodes[n].span.start_line);
        order.extend(members);
        emitted[ci] = true;
        remaining.remove(&ci);
    }
    order
}

/// Iterative Tarjan over the reachable subgraph.
fn tarjan_sccs(graph: &SymbolGraph, reachable: &BTreeSet<usize>) -> Vec<Vec<usize>> {
    #[derive(Clone, Copy)]
    struct NodeState {
        index: i64,
        lowlink: i64,
        on_stack: bool,
    }
    let mut state: BTreeMap<usize, NodeState> = BTreeMap::new();
    let mut stack: Vec<usize> = Vec::new();
    let mut sccs: Vec<Vec<usize>> = Vec::new();
    let mut counter: i64 = 0;

    for &root in reachable {
        if state.contains_key(&root) {
            continue;
        }
        // explicit DFS stack: (node, iterator position over successors)
        let mut call: Vec<(usize, Vec<usize>, usize)> = Vec::new();
        let succs: Vec<usize> = graph
            .successors(root)
            .filter(|m| reachable.contains(m))
            .collect();
        state.insert(
            root,
            NodeState {
                index: counter,
                lowlink: counter,
                on_stack: true,
            },
        );
        counter += 1;
        stack.push(root);
        call.push((root, succs, 0));

        while let Some((node, succs, pos)) = call.last_mut() {
            if *pos < succs.len() {
                let next = succs[*pos];
                *pos += 1;
                if let Some(ns) = state.get(&next) {
                    if ns.on_stack {
                        let nl = ns.index;
                        let s = state.get_mut(node).unwrap();
                        s.lowlink = s.lowlink.min(nl);
                    }
                } else {
                    state.insert(
                        next,
                        NodeState {
                            index: counter,
                            lowlink: counter,
                            on_stack: true,
                        },
                    );
                    counter += 1;
                    stack.push(next);
                    let nsuccs: Vec<usize> = graph
                        .successors(next)
                        .filter(|m| reachable.contains(m))
                        .collect();
                    call.push((next, nsuccs, 0));
                }
            } else {
                let node = *node;
                call.pop();
                if let Some((parent, _, _)) = call.last() {
                    let parent = *parent;
                    let low = state[&node].lowlink;
                    let p = state.get_mut(&parent).unwrap();
                    p.lowlink = p.lowlink.min(low);
                }
                if state[&node].lowlink == state[&node].index {
                    let mut comp = Vec::new();
                    while let Some(top) = stack.pop() {
                        state.get_mut(&top).unwrap().on_stack = false;
                        comp.push(top);
                        if top == node {
                            break;
                        }
                    }
                    comp.sort_unstable();
                    sccs.push(comp);
                }
            }
        }
    }
    sccs
}
