//! Classical, density, density-sketch and bipartite modularity.
//!
//! All variants share the numerator `2|E_C| − d_C² / 2|E|`; they differ in
//! the normaliser. Counts are taken as exact integers and only the final
//! division happens in floating point.

use crate::bipartite::BipartiteGraph;
use crate::error::{Error, Result};
use crate::graph::{AttributedGraph, Community, CommunityStats};

/// Granularity exponent of the density sketch modularity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModularityParams {
    tau: f64,
}

impl ModularityParams {
    pub const DEFAULT_TAU: f64 = 0.8;

    pub fn new(tau: f64) -> Result<Self> {
        if tau > 0.0 && tau.is_finite() {
            Ok(Self { tau })
        } else {
            Err(Error::InvalidArgument(format!("tau must be positive, got {tau}")))
        }
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }
}

impl Default for ModularityParams {
    fn default() -> Self {
        Self { tau: Self::DEFAULT_TAU }
    }
}

/// `2|E_C| − d_C² / 2|E|`.
fn numerator(stats: &CommunityStats, edges: usize) -> f64 {
    let m2 = 2.0 * edges as f64;
    let d = stats.degree_sum as f64;
    2.0 * stats.internal_edges as f64 - d * d / m2
}

fn checked_stats(g: &AttributedGraph, c: &Community) -> Result<CommunityStats> {
    if g.edge_count() == 0 {
        return Err(Error::EmptyGraph);
    }
    if c.is_empty() {
        return Err(Error::EmptyNodeSet);
    }
    Ok(c.stats(g))
}

/// `(1 / 2|V_C|^τ) · numerator`. Shared by the graph-level entry points and
/// the exhaustive implication checks.
pub fn dsm_from_stats(stats: &CommunityStats, edges: usize, tau: f64) -> f64 {
    numerator(stats, edges) / (2.0 * (stats.size as f64).powf(tau))
}

pub fn cm_from_stats(stats: &CommunityStats, edges: usize) -> f64 {
    numerator(stats, edges) / (2.0 * edges as f64)
}

pub fn classical_modularity(g: &AttributedGraph, c: &Community) -> Result<f64> {
    let s = checked_stats(g, c)?;
    Ok(cm_from_stats(&s, g.edge_count()))
}

pub fn density_modularity(g: &AttributedGraph, c: &Community) -> Result<f64> {
    let s = checked_stats(g, c)?;
    Ok(numerator(&s, g.edge_count()) / (2.0 * s.size as f64))
}

pub fn density_sketch_modularity(g: &AttributedGraph, c: &Community, params: ModularityParams) -> Result<f64> {
    let s = checked_stats(g, c)?;
    Ok(dsm_from_stats(&s, g.edge_count(), params.tau()))
}

/// Two-sided community of a node–attribute graph.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BipartiteCommunity {
    pub nodes: Vec<usize>,
    pub attrs: Vec<usize>,
}

/// `(1/|E_B|)(2|E_C| − d_C^U · d_C^L / |E_B|)`.
pub fn bipartite_modularity(bg: &BipartiteGraph, c: &BipartiteCommunity) -> Result<f64> {
    let m = bg.edge_count();
    if m == 0 {
        return Err(Error::EmptyGraph);
    }
    if c.nodes.is_empty() && c.attrs.is_empty() {
        return Err(Error::EmptyNodeSet);
    }
    let mut in_l = vec![false; bg.l_count()];
    for &l in &c.attrs {
        if l >= bg.l_count() {
            return Err(Error::InvalidArgument(format!("attribute id {l} out of range")));
        }
        in_l[l] = true;
    }
    let mut internal = 0usize;
    let mut d_u = 0usize;
    for &u in &c.nodes {
        if u >= bg.u_count() {
            return Err(Error::UnknownNode(u));
        }
        d_u += bg.u_degree(u);
        internal += bg.u_neighbors(u).iter().filter(|&&l| in_l[l]).count();
    }
    let d_l: usize = c.attrs.iter().map(|&l| bg.l_degree(l)).sum();
    let m = m as f64;
    Ok((2.0 * internal as f64 - (d_u as f64) * (d_l as f64) / m) / m)
}

/// Largest graph the exhaustive checks accept.
pub const ENUMERATION_LIMIT: usize = 10;

/// Which (C, C*) pairs an exhaustive implication check ranges over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImplicationPremise {
    /// Every pair of nonempty node sets, exactly as the implication is stated.
    AllPairs,
    /// Only pairs whose union has a nonnegative modularity numerator.
    NonNegativeUnion,
}

/// Outcome of an exhaustive implication check.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ImplicationReport {
    /// Pairs for which the DSM-side premise held.
    pub premises: u64,
    pub counterexamples: u64,
    /// First counterexample found, as (C, C*) member lists.
    pub witness: Option<(Vec<usize>, Vec<usize>)>,
}

impl ImplicationReport {
    pub fn holds(&self) -> bool {
        self.counterexamples == 0
    }
}

struct SubsetTable {
    stats: Vec<CommunityStats>,
    numerator_scaled: Vec<i64>,
    connected: Vec<bool>,
    edges: usize,
}

impl SubsetTable {
    fn build(g: &AttributedGraph) -> Result<Self> {
        let n = g.node_count();
        if n > ENUMERATION_LIMIT {
            return Err(Error::TooLarge { nodes: n, limit: ENUMERATION_LIMIT });
        }
        if g.edge_count() == 0 {
            return Err(Error::EmptyGraph);
        }
        let adj: Vec<u32> = (0..n).map(|v| g.neighbors(v).iter().fold(0u32, |m, &u| m | (1 << u))).collect();
        let e = g.edge_count() as i64;
        let full = 1usize << n;
        let mut stats = Vec::with_capacity(full);
        let mut numerator_scaled = Vec::with_capacity(full);
        let mut connected = Vec::with_capacity(full);
        for mask in 0..full as u32 {
            let mut doubled = 0;
            let mut degree_sum = 0;
            for (v, &nbrs) in adj.iter().enumerate() {
                if mask & (1 << v) != 0 {
                    doubled += (nbrs & mask).count_ones() as usize;
                    degree_sum += g.degree(v);
                }
            }
            let s = CommunityStats { size: mask.count_ones() as usize, internal_edges: doubled / 2, degree_sum };
            // 2|E| · numerator, exact
            numerator_scaled.push(4 * e * s.internal_edges as i64 - (degree_sum as i64).pow(2));
            stats.push(s);
            connected.push(mask_connected(&adj, mask));
        }
        Ok(Self { stats, numerator_scaled, connected, edges: g.edge_count() })
    }

    fn dsm(&self, mask: usize, tau: f64) -> f64 {
        dsm_from_stats(&self.stats[mask], self.edges, tau)
    }

    fn cm_ge(&self, a: usize, b: usize) -> bool {
        self.numerator_scaled[a] >= self.numerator_scaled[b]
    }
}

fn mask_connected(adj: &[u32], mask: u32) -> bool {
    if mask == 0 {
        return false;
    }
    let start = mask.trailing_zeros() as usize;
    let mut seen = 1u32 << start;
    let mut frontier = seen;
    while frontier != 0 {
        let v = frontier.trailing_zeros() as usize;
        frontier &= frontier - 1;
        let fresh = adj[v] & mask & !seen;
        seen |= fresh;
        frontier |= fresh;
    }
    seen == mask
}

fn members_of(mask: usize) -> Vec<usize> {
    (0..usize::BITS as usize).filter(|&v| mask & (1 << v) != 0).collect()
}

fn run_implication(
    table: &SubsetTable,
    tau: f64,
    premise: ImplicationPremise,
    admissible: impl Fn(usize, usize) -> bool,
) -> ImplicationReport {
    let full = table.stats.len();
    let mut report = ImplicationReport::default();
    for c in 1..full {
        let dsm_c = table.dsm(c, tau);
        for other in 1..full {
            if !admissible(c, other) {
                continue;
            }
            let union = c | other;
            if premise == ImplicationPremise::NonNegativeUnion && table.numerator_scaled[union] < 0 {
                continue;
            }
            if table.dsm(union, tau) >= dsm_c {
                report.premises += 1;
                if !table.cm_ge(union, c) {
                    report.counterexamples += 1;
                    if report.witness.is_none() {
                        report.witness = Some((members_of(c), members_of(other)));
                    }
                }
            }
        }
    }
    report
}

/// Exhaustively tests "DSM(C∪C*) ≥ DSM(C) ⇒ CM(C∪C*) ≥ CM(C)".
pub fn free_rider_implication(g: &AttributedGraph, tau: f64, premise: ImplicationPremise) -> Result<ImplicationReport> {
    ModularityParams::new(tau)?;
    let table = SubsetTable::build(g)?;
    Ok(run_implication(&table, tau, premise, |_, _| true))
}

/// Same implication restricted to disjoint, individually connected C and C'
/// whose union is connected.
pub fn resolution_limit_implication(
    g: &AttributedGraph,
    tau: f64,
    premise: ImplicationPremise,
) -> Result<ImplicationReport> {
    ModularityParams::new(tau)?;
    let table = SubsetTable::build(g)?;
    Ok(run_implication(&table, tau, premise, |c, other| {
        c & other == 0 && table.connected[c] && table.connected[other] && table.connected[c | other]
    }))
}

/// True iff no pair of node sets violates the free-rider implication.
pub fn check_free_rider_implication(g: &AttributedGraph, tau: f64) -> Result<bool> {
    Ok(free_rider_implication(g, tau, ImplicationPremise::AllPairs)?.holds())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bipartite::build_bipartite;
    use crate::fixtures::{citation_graph, citation_id};
    use proptest::prelude::*;

    fn path3() -> AttributedGraph {
        AttributedGraph::ingest(["a b", "b c"], []).unwrap()
    }

    #[test]
    fn whole_graph_classical_modularity_is_zero() {
        let g = citation_graph();
        let c = Community::new(&g, 0..g.node_count()).unwrap();
        assert!(classical_modularity(&g, &c).unwrap().abs() < 1e-15);
    }

    #[test]
    fn path_pair_classical_modularity() {
        let g = path3();
        let c = Community::new(&g, [0, 1]).unwrap();
        assert!((classical_modularity(&g, &c).unwrap() - (-0.0625)).abs() < 1e-15);
    }

    #[test]
    fn fixture_one_hop_cm_and_dm() {
        let g = citation_graph();
        let c = Community::new(&g, [2, 4, 6].map(|l| citation_id(&g, l))).unwrap();
        let cm = (6.0 - 100.0 / 28.0) / 28.0;
        let dm = (6.0 - 100.0 / 28.0) / 6.0;
        assert!((classical_modularity(&g, &c).unwrap() - cm).abs() < 1e-12);
        assert!((classical_modularity(&g, &c).unwrap() - 0.08673).abs() < 1e-5);
        assert!((density_modularity(&g, &c).unwrap() - dm).abs() < 1e-12);
        assert!((density_modularity(&g, &c).unwrap() - 0.40476).abs() < 1e-5);
    }

    #[test]
    fn single_edge_density_modularity_is_zero() {
        let g = AttributedGraph::ingest(["a b"], []).unwrap();
        let c = Community::new(&g, [0, 1]).unwrap();
        assert_eq!(density_modularity(&g, &c).unwrap(), 0.0);
    }

    #[test]
    fn fixture_dsm_matches_worked_values() {
        let g = citation_graph();
        let q = citation_id(&g, 4);
        let p = ModularityParams::default();
        let expected = [(1, 0.504, 1e-3), (2, -0.094, 1e-3), (3, 0.0, 1e-6)];
        for (k, value, tol) in expected {
            let c = Community::new(&g, g.k_hop_frontier(&[q], k).unwrap()).unwrap();
            let got = density_sketch_modularity(&g, &c, p).unwrap();
            assert!((got - value).abs() <= tol, "k={k}: {got}");
        }
    }

    #[test]
    fn empty_inputs_are_errors() {
        let g = path3();
        let empty = Community::new(&g, []).unwrap();
        assert!(matches!(classical_modularity(&g, &empty), Err(Error::EmptyNodeSet)));
        let edgeless = AttributedGraph::ingest(["a a"], []).unwrap();
        let c = Community::new(&edgeless, [0]).unwrap();
        assert!(matches!(density_modularity(&edgeless, &c), Err(Error::EmptyGraph)));
        assert!(ModularityParams::new(0.0).is_err());
        assert!(ModularityParams::new(-1.0).is_err());
    }

    #[test]
    fn whole_bipartite_graph_scores_one() {
        let g = citation_graph();
        let bg = build_bipartite(&g);
        let c = BipartiteCommunity { nodes: (0..bg.u_count()).collect(), attrs: (0..bg.l_count()).collect() };
        assert!((bipartite_modularity(&bg, &c).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn lone_node_with_private_attribute() {
        // four incidence edges; node 0 is the only carrier of attribute 0
        let g = AttributedGraph::from_edges(3, &[], &[vec![0], vec![1, 2], vec![1]], 3).unwrap();
        let bg = build_bipartite(&g);
        assert_eq!(bg.edge_count(), 4);
        let c = BipartiteCommunity { nodes: vec![0], attrs: vec![0] };
        assert!((bipartite_modularity(&bg, &c).unwrap() - 0.4375).abs() < 1e-15);
    }

    #[test]
    fn bipartite_community_without_internal_edges_is_negative() {
        let g = citation_graph();
        let bg = build_bipartite(&g);
        let four = citation_id(&g, 4);
        let cv = g.attr_id("CV").unwrap();
        let c = BipartiteCommunity { nodes: vec![four], attrs: vec![cv] };
        assert!(bipartite_modularity(&bg, &c).unwrap() < 0.0);
        let empty = BipartiteCommunity::default();
        assert!(matches!(bipartite_modularity(&bg, &empty), Err(Error::EmptyNodeSet)));
        let bare = build_bipartite(&path3());
        let c = BipartiteCommunity { nodes: vec![0], attrs: vec![] };
        assert!(matches!(bipartite_modularity(&bare, &c), Err(Error::EmptyGraph)));
    }

    #[test]
    fn free_rider_holds_on_triangle_and_star() {
        let triangle = AttributedGraph::ingest(["a b", "b c", "c a"], []).unwrap();
        assert!(check_free_rider_implication(&triangle, 0.8).unwrap());
        let star = AttributedGraph::ingest(["c a", "c b", "c d", "c e"], []).unwrap();
        assert!(check_free_rider_implication(&star, 0.5).unwrap());
    }

    #[test]
    fn paw_graph_breaks_the_all_pairs_implication() {
        // triangle a-b-c plus pendant c-d, |E| = 4, tau = 1
        // C = {a}:        numerator 0 − 4/8  = −1/2, DSM = −1/4
        // C ∪ {b, d}:     numerator 2 − 25/8 = −9/8, DSM = −3/16
        let g = AttributedGraph::ingest(["a b", "b c", "a c", "c d"], []).unwrap();
        let p = ModularityParams::new(1.0).unwrap();
        let c = Community::new(&g, [0]).unwrap();
        let u = Community::new(&g, [0, 1, 3]).unwrap();
        assert_eq!(density_sketch_modularity(&g, &c, p).unwrap(), -0.25);
        assert_eq!(density_sketch_modularity(&g, &u, p).unwrap(), -0.1875);
        assert!(classical_modularity(&g, &u).unwrap() < classical_modularity(&g, &c).unwrap());

        let report = free_rider_implication(&g, 1.0, ImplicationPremise::AllPairs).unwrap();
        assert!(!report.holds());
        assert!(!check_free_rider_implication(&g, 1.0).unwrap());
        let restricted = free_rider_implication(&g, 1.0, ImplicationPremise::NonNegativeUnion).unwrap();
        assert!(restricted.holds());
        assert!(restricted.premises > 0);
    }

    #[test]
    fn enumeration_rejects_large_graphs() {
        let edges: Vec<String> = (0..11).map(|i| format!("{i} {}", i + 1)).collect();
        let g = AttributedGraph::ingest(edges.iter().map(String::as_str), []).unwrap();
        assert!(matches!(check_free_rider_implication(&g, 0.8), Err(Error::TooLarge { nodes: 12, .. })));
    }

    fn random_graph() -> impl Strategy<Value = (AttributedGraph, Vec<usize>)> {
        (2usize..=12)
            .prop_flat_map(|n| {
                let pairs: Vec<(usize, usize)> = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
                let k = pairs.len();
                (Just(n), Just(pairs), prop::collection::vec(any::<bool>(), k), prop::collection::vec(any::<bool>(), n))
            })
            .prop_filter_map("needs an edge and a member", |(n, pairs, keep, member)| {
                let edges: Vec<(usize, usize)> =
                    pairs.into_iter().zip(keep).filter(|(_, k)| *k).map(|(e, _)| e).collect();
                let members: Vec<usize> = (0..n).filter(|&v| member[v]).collect();
                if edges.is_empty() || members.is_empty() {
                    return None;
                }
                Some((AttributedGraph::from_edges(n, &edges, &[], 0).unwrap(), members))
            })
    }

    proptest! {
        #[test]
        fn dsm_at_tau_one_is_density_modularity((g, members) in random_graph()) {
            let c = Community::new(&g, members).unwrap();
            let dsm = density_sketch_modularity(&g, &c, ModularityParams::new(1.0).unwrap()).unwrap();
            let dm = density_modularity(&g, &c).unwrap();
            prop_assert!((dsm - dm).abs() <= 1e-12);
        }

        #[test]
        fn dsm_near_zero_tau_is_scaled_classical((g, members) in random_graph()) {
            let c = Community::new(&g, members).unwrap();
            let dsm = density_sketch_modularity(&g, &c, ModularityParams::new(1e-12).unwrap()).unwrap();
            let scaled = g.edge_count() as f64 * classical_modularity(&g, &c).unwrap();
            prop_assert!((dsm - scaled).abs() <= 1e-9 * scaled.abs().max(1e-300) || (dsm - scaled).abs() < 1e-12);
        }

        #[test]
        fn dsm_is_monotone_in_tau((g, members) in random_graph(), lo in 0.05f64..0.9, step in 0.05f64..0.5) {
            prop_assume!(members.len() >= 2);
            let c = Community::new(&g, members).unwrap();
            let s = c.stats(&g);
            let num = 2.0 * s.internal_edges as f64 - (s.degree_sum as f64).powi(2) / (2.0 * g.edge_count() as f64);
            prop_assume!(num.abs() > 1e-9);
            let a = density_sketch_modularity(&g, &c, ModularityParams::new(lo).unwrap()).unwrap();
            let b = density_sketch_modularity(&g, &c, ModularityParams::new(lo + step).unwrap()).unwrap();
            if num > 0.0 { prop_assert!(b < a) } else { prop_assert!(b > a) }
        }
    }
}
