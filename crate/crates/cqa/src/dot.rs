//! DOT renderings of join trees and attack graphs.

use crate::attack::{AttackGraph, Strength};
use crate::jointree::JoinTree;

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

/// Attack graph as a digraph: weak attacks solid, strong attacks bold red;
/// vertices labeled with the atom's canonical text.
pub fn attack_graph_dot(graph: &AttackGraph) -> String {
    let mut out = String::from("digraph attack_graph {\n");
    for atom in graph.atoms() {
        out.push_str(&format!("  {};\n", quote(&atom.to_string())));
    }
    for edge in graph.edges() {
        let from = quote(&graph.atoms()[edge.from].to_string());
        let to = quote(&graph.atoms()[edge.to].to_string());
        let style = match edge.strength {
            Strength::Weak => "[style=solid]",
            Strength::Strong => "[style=bold, color=red]",
        };
        out.push_str(&format!("  {from} -> {to} {style};\n"));
    }
    out.push_str("}\n");
    out
}

/// Join tree as an undirected graph with variable-set edge labels.
pub fn join_tree_dot(tree: &JoinTree) -> String {
    let mut out = String::from("graph join_tree {\n");
    for atom in tree.atoms() {
        out.push_str(&format!("  {};\n", quote(&atom.to_string())));
    }
    for (i, j, label) in tree.edges() {
        let vars = label
            .iter()
            .map(|v| v.0.clone())
            .collect::<Vec<_>>()
            .join(",");
        out.push_str(&format!(
            "  {} -- {} [label={}];\n",
            quote(&tree.atoms()[*i].to_string()),
            quote(&tree.atoms()[*j].to_string()),
            quote(&vars)
        ));
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attack::attack_graph;
    use crate::jointree::join_tree;
    use crate::testutil::q1;

    #[test]
    fn q1_dot_has_seven_edges_one_strong() {
        let g = attack_graph(&q1()).unwrap();
        let dot = attack_graph_dot(&g);
        assert_eq!(dot.matches(" -> ").count(), 7);
        assert_eq!(dot.matches("color=red").count(), 1);
    }

    #[test]
    fn join_tree_dot_lists_labels() {
        let tree = join_tree(&q1()).unwrap();
        let dot = join_tree_dot(&tree);
        assert_eq!(dot.matches(" -- ").count(), 3);
        assert!(dot.contains("\"x,y\""));
    }
}
