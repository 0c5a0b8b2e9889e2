//! Deterministic synthetic ontologies for tests, benchmarks and demos.

use std::fmt::Write;

/// Number of classes in a complete tree with `levels` levels.
pub fn tree_size(branching: usize, levels: usize) -> usize {
    (0..levels).map(|l| branching.pow(l as u32)).sum()
}

/// OBO text of a complete `is_a` tree. Class `i` (breadth-first, root 0) is
/// `{prefix}:{i:07}` labelled `class {i}`; the root is labelled `All`.
pub fn is_a_tree_obo(prefix: &str, branching: usize, levels: usize, data_version: &str) -> String {
    let n = tree_size(branching, levels);
    let mut out = String::new();
    writeln!(out, "format-version: 1.2").unwrap();
    if !data_version.is_empty() {
        writeln!(out, "data-version: {data_version}").unwrap();
    }
    writeln!(out, "ontology: {}", prefix.to_lowercase()).unwrap();
    for i in 0..n {
        let id = format!("{prefix}:{i:07}");
        let name = if i == 0 {
            "All".to_string()
        } else {
            format!("class {i}")
        };
        write!(out, "\n[Term]\nid: {id}\nname: {name}\n").unwrap();
        if i > 0 {
            let parent = (i - 1) / branching;
            writeln!(out, "is_a: {prefix}:{parent:07} ! parent").unwrap();
        }
    }
    out
}

/// The 85-class, 4-level tree with branching factor 4.
pub fn four_level_tree(prefix: &str) -> String {
    is_a_tree_obo(prefix, 4, 4, "")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::obo::{parse_obo, to_graph};

    #[test]
    fn four_level_tree_shape() {
        assert_eq!(tree_size(4, 4), 85);
        let doc = parse_obo(&four_level_tree("HP")).unwrap();
        let (g, report) = to_graph(&doc, false);
        assert_eq!(g.num_entities(), 85);
        assert_eq!(g.triples().len(), 84);
        assert_eq!(g.num_relations(), 1);
        assert_eq!(report.dropped_edges, 0);
        assert_eq!(doc.terms[0].name, "All");
    }
}
