//! Hypergraph acyclicity and join trees.
//!
//! A join tree for a query is a tree over its atoms in which, for every
//! variable, the atoms containing that variable induce a connected subtree
//! (the Connectedness Condition). A query is acyclic iff it has a join tree.
//! Construction is by GYO reduction: repeatedly detach an ear and attach it
//! to a witness atom.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::query::{Atom, Query, Var};

/// Distinguished outcome of [`join_tree`]: the query has no join tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CyclicQuery;

impl From<CyclicQuery> for Error {
    fn from(_: CyclicQuery) -> Error {
        Error::CyclicQuery
    }
}

/// Ear selection order for GYO reduction. Different orders can produce
/// different join trees for the same query; attack graphs must not depend
/// on the choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TieBreak {
    /// Pick the least eligible ear and witness, in atom order.
    #[default]
    LexAsc,
    /// Pick the greatest eligible ear and witness.
    LexDesc,
}

/// A join tree over the atoms of a query. Node `i` is `query.atoms()[i]`;
/// each edge carries the label `vars(F) ∩ vars(G)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JoinTree {
    atoms: Vec<Atom>,
    edges: Vec<(usize, usize, BTreeSet<Var>)>,
    adjacency: Vec<Vec<usize>>,
}

impl JoinTree {
    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    /// Edges as `(i, j, label)` with `i < j`.
    pub fn edges(&self) -> &[(usize, usize, BTreeSet<Var>)] {
        &self.edges
    }

    fn neighbors(&self, i: usize) -> impl Iterator<Item = (usize, &BTreeSet<Var>)> {
        self.adjacency[i].iter().map(move |&e| {
            let (a, b, ref label) = self.edges[e];
            (if a == i { b } else { a }, label)
        })
    }

    /// The unique path between two nodes, as a node sequence.
    fn path(&self, from: usize, to: usize) -> Option<Vec<usize>> {
        let mut prev: Vec<Option<usize>> = vec![None; self.atoms.len()];
        let mut visited = vec![false; self.atoms.len()];
        let mut stack = vec![from];
        visited[from] = true;
        while let Some(v) = stack.pop() {
            if v == to {
                let mut path = vec![to];
                let mut cur = to;
                while let Some(p) = prev[cur] {
                    path.push(p);
                    cur = p;
                }
                path.reverse();
                return Some(path);
            }
            for (n, _) in self.neighbors(v) {
                if !visited[n] {
                    visited[n] = true;
                    prev[n] = Some(v);
                    stack.push(n);
                }
            }
        }
        None
    }

    /// Labels along the unique path between the nodes at `from` and `to`,
    /// in path order.
    pub fn path_labels_by_index(&self, from: usize, to: usize) -> Vec<BTreeSet<Var>> {
        let path = self.path(from, to).expect("join tree is connected");
        path.windows(2)
            .map(|w| {
                self.neighbors(w[0])
                    .find(|(n, _)| *n == w[1])
                    .map(|(_, label)| label.clone())
                    .expect("consecutive path nodes are adjacent")
            })
            .collect()
    }

    /// Checks the Connectedness Condition and the spanning-tree shape, and
    /// that every label equals the variable intersection of its endpoints.
    /// Independent of the construction; used to validate any tree.
    pub fn verify(&self) -> bool {
        let n = self.atoms.len();
        if n == 0 {
            return self.edges.is_empty();
        }
        if self.edges.len() != n - 1 {
            return false;
        }
        // connected
        let mut visited = vec![false; n];
        let mut stack = vec![0usize];
        visited[0] = true;
        let mut seen = 1;
        while let Some(v) = stack.pop() {
            for (w, _) in self.neighbors(v) {
                if !visited[w] {
                    visited[w] = true;
                    seen += 1;
                    stack.push(w);
                }
            }
        }
        if seen != n {
            return false;
        }
        // labels are exact intersections
        for &(i, j, ref label) in &self.edges {
            let inter: BTreeSet<Var> = self.atoms[i]
                .vars()
                .intersection(&self.atoms[j].vars())
                .cloned()
                .collect();
            if *label != inter {
                return false;
            }
        }
        // Connectedness Condition: the atoms containing x induce a subtree
        let all_vars: BTreeSet<Var> = self.atoms.iter().flat_map(|a| a.vars()).collect();
        for x in &all_vars {
            let holders: Vec<usize> = (0..n)
                .filter(|&i| self.atoms[i].vars().contains(x))
                .collect();
            if holders.len() <= 1 {
                continue;
            }
            let start = holders[0];
            let mut visited = vec![false; n];
            visited[start] = true;
            let mut stack = vec![start];
            let mut reached = 1;
            while let Some(v) = stack.pop() {
                for (w, _) in self.neighbors(v) {
                    if !visited[w] && self.atoms[w].vars().contains(x) {
                        visited[w] = true;
                        reached += 1;
                        stack.push(w);
                    }
                }
            }
            if reached != holders.len() {
                return false;
            }
        }
        true
    }
}

fn build(atoms: &[Atom], edges: Vec<(usize, usize)>) -> JoinTree {
    let labeled: Vec<(usize, usize, BTreeSet<Var>)> = edges
        .into_iter()
        .map(|(a, b)| {
            let (i, j) = if a < b { (a, b) } else { (b, a) };
            let label = atoms[i]
                .vars()
                .intersection(&atoms[j].vars())
                .cloned()
                .collect();
            (i, j, label)
        })
        .collect();
    let mut adjacency = vec![Vec::new(); atoms.len()];
    for (e, &(i, j, _)) in labeled.iter().enumerate() {
        adjacency[i].push(e);
        adjacency[j].push(e);
    }
    JoinTree {
        atoms: atoms.to_vec(),
        edges: labeled,
        adjacency,
    }
}

/// Builds a join tree by GYO reduction with the default tie-break, or
/// reports that the query is cyclic.
pub fn join_tree(q: &Query) -> std::result::Result<JoinTree, CyclicQuery> {
    join_tree_with(q, TieBreak::LexAsc)
}

/// GYO reduction with an explicit ear-selection order.
///
/// An atom is an ear when the variables it shares with the remaining atoms
/// are covered by a single witness atom. Ears are detached and attached to
/// their witness; atoms whose variables are disjoint from everything else
/// count as ears too (empty labels keep disconnected queries in one tree).
pub fn join_tree_with(q: &Query, order: TieBreak) -> std::result::Result<JoinTree, CyclicQuery> {
    let atoms = q.atoms();
    let n = atoms.len();
    if n == 0 {
        return Ok(build(atoms, Vec::new()));
    }
    let vars: Vec<BTreeSet<Var>> = atoms.iter().map(|a| a.vars()).collect();
    let mut alive: Vec<usize> = (0..n).collect();
    let mut edges: Vec<(usize, usize)> = Vec::new();

    let pick = |candidates: Vec<usize>, order: TieBreak| -> Option<usize> {
        match order {
            TieBreak::LexAsc => candidates.into_iter().min(),
            TieBreak::LexDesc => candidates.into_iter().max(),
        }
    };

    while alive.len() > 1 {
        let mut found: Option<(usize, usize)> = None;
        let ear_order: Vec<usize> = match order {
            TieBreak::LexAsc => alive.clone(),
            TieBreak::LexDesc => alive.iter().rev().copied().collect(),
        };
        for &ear in &ear_order {
            // variables of `ear` shared with any other alive atom
            let shared: BTreeSet<&Var> = vars[ear]
                .iter()
                .filter(|x| {
                    alive
                        .iter()
                        .any(|&o| o != ear && vars[o].contains(*x))
                })
                .collect();
            let witnesses: Vec<usize> = alive
                .iter()
                .copied()
                .filter(|&w| w != ear && shared.iter().all(|x| vars[w].contains(*x)))
                .collect();
            if let Some(w) = pick(witnesses, order) {
                found = Some((ear, w));
                break;
            }
        }
        match found {
            Some((ear, witness)) => {
                edges.push((ear, witness));
                alive.retain(|&a| a != ear);
            }
            None => return Err(CyclicQuery),
        }
    }
    let tree = build(atoms, edges);
    debug_assert!(tree.verify());
    Ok(tree)
}

/// Labels along the unique path between two atoms of the tree, in order.
pub fn path_labels(tree: &JoinTree, from: &Atom, to: &Atom) -> Result<Vec<BTreeSet<Var>>> {
    let f = tree
        .atoms
        .iter()
        .position(|a| a == from)
        .ok_or_else(|| Error::AtomNotInQuery(from.to_string()))?;
    let t = tree
        .atoms
        .iter()
        .position(|a| a == to)
        .ok_or_else(|| Error::AtomNotInQuery(to.to_string()))?;
    Ok(tree.path_labels_by_index(f, t))
}
