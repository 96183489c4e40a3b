//! Attack graphs.
//!
//! For atoms `F`, `G` of an acyclic self-join-free query, `F` attacks `G`
//! when no label on the join-tree path between them is contained in K(F,q).
//! The resulting directed graph does not depend on which join tree was used.
//! An attack is weak when key(G) ⊆ K⁺(F,q), strong otherwise; a cycle is
//! strong when it contains a strong attack.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::jointree::{join_tree, JoinTree};
use crate::query::{
    key_closure_at, key_closure_plus_at, self_join_relation, Atom, Query, Var,
};
use crate::scc::strongly_connected_components;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Strength {
    Weak,
    Strong,
}

/// A directed attack edge between two atoms, identified by their indices in
/// the query's atom order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AttackEdge {
    pub from: usize,
    pub to: usize,
    pub strength: Strength,
}

/// The attack graph of an acyclic self-join-free query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttackGraph {
    query: Query,
    edges: BTreeMap<(usize, usize), Strength>,
}

impl AttackGraph {
    pub fn query(&self) -> &Query {
        &self.query
    }

    pub fn atoms(&self) -> &[Atom] {
        self.query.atoms()
    }

    pub fn edges(&self) -> impl Iterator<Item = AttackEdge> + '_ {
        self.edges.iter().map(|(&(from, to), &strength)| AttackEdge {
            from,
            to,
            strength,
        })
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn attacks(&self, from: usize, to: usize) -> bool {
        self.edges.contains_key(&(from, to))
    }

    pub fn strength(&self, from: usize, to: usize) -> Option<Strength> {
        self.edges.get(&(from, to)).copied()
    }

    fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.atoms().len()];
        for (&(from, to), _) in &self.edges {
            adj[from].push(to);
        }
        adj
    }

    /// True when the graph has no directed cycle.
    pub fn is_acyclic(&self) -> bool {
        strongly_connected_components(self.atoms().len(), &self.adjacency())
            .iter()
            .all(|c| c.len() == 1)
    }

    /// A pair `(F, G)` with mutual attacks of which `F -> G` is strong, if
    /// the graph has any strong cycle. Any strong cycle yields a strong
    /// 2-cycle, so scanning mutual pairs is complete.
    pub fn find_strong_two_cycle(&self) -> Option<(usize, usize)> {
        let n = self.atoms().len();
        let mut best: Option<(usize, usize)> = None;
        for f in 0..n {
            for g in 0..n {
                if f == g || !self.attacks(f, g) || !self.attacks(g, f) {
                    continue;
                }
                if self.strength(f, g) == Some(Strength::Strong)
                    && best.map_or(true, |b| (f, g) < b)
                {
                    best = Some((f, g));
                }
            }
        }
        best
    }

    /// The mutual-attack pairs `(f, g)` with `f < g` whose vertices lie on a
    /// cycle, when every cycle is a terminal 2-cycle; see
    /// [`AttackGraph::all_cycles_weak_and_terminal`].
    pub fn terminal_two_cycles(&self) -> Option<Vec<(usize, usize)>> {
        let n = self.atoms().len();
        let sccs = strongly_connected_components(n, &self.adjacency());
        let mut pairs = Vec::new();
        for scc in sccs {
            match scc.len() {
                1 => {}
                2 => {
                    let (f, g) = (scc[0], scc[1]);
                    if !(self.attacks(f, g) && self.attacks(g, f)) {
                        return None;
                    }
                    // terminality: out-edges stay inside the pair
                    for &v in &[f, g] {
                        for (&(from, to), _) in &self.edges {
                            if from == v && to != f && to != g {
                                return None;
                            }
                        }
                    }
                    pairs.push((f, g));
                }
                _ => return None,
            }
        }
        pairs.sort_unstable();
        Some(pairs)
    }

    /// True iff every cycle is weak (no strong attack on it) and terminal
    /// (no edge from a cycle vertex leaves the cycle). Under terminality
    /// every cycle has length 2, so it suffices to inspect the strongly
    /// connected components.
    pub fn all_cycles_weak_and_terminal(&self) -> bool {
        match self.terminal_two_cycles() {
            None => false,
            Some(pairs) => pairs.iter().all(|&(f, g)| {
                self.strength(f, g) == Some(Strength::Weak)
                    && self.strength(g, f) == Some(Strength::Weak)
            }),
        }
    }

    /// Atoms with no incoming attack.
    pub fn unattacked_atoms(&self) -> Vec<usize> {
        let n = self.atoms().len();
        (0..n)
            .filter(|&i| !self.edges.keys().any(|&(_, to)| to == i))
            .collect()
    }
}

/// Computes the attack graph from the canonical join tree.
pub fn attack_graph(q: &Query) -> Result<AttackGraph> {
    if let Some(rel) = self_join_relation(q) {
        return Err(Error::SelfJoin(rel.0));
    }
    let tree = join_tree(q)?;
    attack_graph_of_tree(q, &tree)
}

/// Computes the attack graph from a given join tree for `q`. The result is
/// the same for every join tree of `q`; tests check this invariance.
pub fn attack_graph_of_tree(q: &Query, tree: &JoinTree) -> Result<AttackGraph> {
    if let Some(rel) = self_join_relation(q) {
        return Err(Error::SelfJoin(rel.0));
    }
    let n = q.atoms().len();
    let key_cl: Vec<BTreeSet<Var>> = (0..n).map(|i| key_closure_at(q, i)).collect();
    let key_cl_plus: Vec<BTreeSet<Var>> = (0..n).map(|i| key_closure_plus_at(q, i)).collect();

    let mut edges = BTreeMap::new();
    for f in 0..n {
        for g in 0..n {
            if f == g {
                continue;
            }
            let labels = tree.path_labels_by_index(f, g);
            let attacks = labels.iter().all(|label| !label.is_subset(&key_cl[f]));
            if attacks {
                let key_g = q.atoms()[g].key_vars();
                let strength = if key_g.is_subset(&key_cl_plus[f]) {
                    Strength::Weak
                } else {
                    Strength::Strong
                };
                edges.insert((f, g), strength);
            }
        }
    }
    Ok(AttackGraph {
        query: q.clone(),
        edges,
    })
}

/// Precondition helper: errors out on queries with a self-join.
pub fn ensure_self_join_free(q: &Query) -> Result<()> {
    match self_join_relation(q) {
        Some(rel) => Err(Error::SelfJoin(rel.0)),
        None => Ok(()),
    }
}
