//! A small citation-style graph used as a worked example across the crate.
//!
//! Ten nodes labelled `1`..`10` and fourteen edges. Around node `4`:
//!
//! | ball   | nodes | internal edges | degree sum |
//! |--------|-------|----------------|------------|
//! | 1-hop  | 3     | 3              | 10         |
//! | 2-hop  | 7     | 9              | 23         |
//! | 3-hop  | 10    | 14             | 28         |
//!
//! Six attributes; `DB` is carried by nodes 2, 4 and 6, and node 4 carries
//! `AI` and `DB`. Edge order is chosen so dense id `i` belongs to label `i+1`.

use crate::graph::AttributedGraph;

pub const CITATION_EDGES: &str = "\
# worked-example citation graph
1 2
1 3
2 3
2 4
5 6
4 6
2 6
5 7
6 7
1 8
3 8
5 9
7 9
7 10
";

pub const CITATION_ATTRS: &str = "\
1\tAI,ML
2\tDB,DM
3\tML
4\tAI,DB
5\tIR,CV
6\tDB,IR
7\tCV
8\tML,DM
9\tIR
10\tCV,AI
";

pub fn citation_graph() -> AttributedGraph {
    AttributedGraph::ingest(CITATION_EDGES.lines(), CITATION_ATTRS.lines()).expect("fixture parses")
}

/// Dense id of a fixture label such as `4`.
pub fn citation_id(g: &AttributedGraph, label: u32) -> usize {
    g.node_id(&label.to_string()).expect("fixture label")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::community_stats;

    #[test]
    fn fixture_matches_the_worked_counts() {
        let g = citation_graph();
        assert_eq!(g.node_count(), 10);
        assert_eq!(g.edge_count(), 14);
        assert_eq!(g.attr_count(), 6);
        for label in 1..=10u32 {
            assert_eq!(citation_id(&g, label), label as usize - 1);
        }
        let q = citation_id(&g, 4);
        let expected = [(1, 3, 3, 10), (2, 7, 9, 23), (3, 10, 14, 28)];
        for (k, size, edges, degrees) in expected {
            let ball = g.k_hop_frontier(&[q], k).unwrap();
            let s = community_stats(&g, &ball);
            assert_eq!((s.size, s.internal_edges, s.degree_sum), (size, edges, degrees), "k={k}");
        }
        let one_hop: Vec<&str> = g.k_hop_frontier(&[q], 1).unwrap().into_iter().map(|v| g.node_token(v)).collect();
        assert_eq!(one_hop, ["2", "4", "6"]);
    }

    #[test]
    fn db_carriers_are_two_four_six() {
        let g = citation_graph();
        let db = g.attr_id("DB").unwrap();
        let carriers: Vec<&str> =
            (0..g.node_count()).filter(|&v| g.attributes(v).contains(&db)).map(|v| g.node_token(v)).collect();
        assert_eq!(carriers, ["2", "4", "6"]);
        let four = citation_id(&g, 4);
        let names: Vec<&str> = g.attributes(four).iter().map(|&a| g.attr_token(a)).collect();
        assert_eq!(names, ["AI", "DB"]);
    }
}
