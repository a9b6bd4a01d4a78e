//! Planted-partition attributed graphs with signature attributes.

use std::fmt::Write;

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::eval::parse_communities;
use crate::graph::AttributedGraph;

#[derive(Debug, Clone, PartialEq)]
pub struct PlantedConfig {
    pub nodes: usize,
    pub communities: usize,
    pub p_in: f64,
    pub p_out: f64,
    /// Signature attributes per community.
    pub signature_attrs: usize,
    /// Chance that a member carries each of its community's signatures.
    pub signature_rate: f64,
    /// Size of the shared noise vocabulary.
    pub noise_vocab: usize,
    /// Distinct noise attributes drawn per node.
    pub noise_per_node: usize,
    pub seed: u64,
}

impl Default for PlantedConfig {
    fn default() -> Self {
        Self {
            nodes: 400,
            communities: 8,
            p_in: 0.2,
            p_out: 0.01,
            signature_attrs: 2,
            signature_rate: 0.9,
            noise_vocab: 50,
            noise_per_node: 1,
            seed: 0,
        }
    }
}

impl PlantedConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        for (name, p) in [("p_in", self.p_in), ("p_out", self.p_out), ("signature_rate", self.signature_rate)] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} must lie in [0, 1]; got {p}"));
            }
        }
        if self.communities == 0 || self.communities > self.nodes {
            return bad(format!("need 1 <= communities <= nodes; got {} and {}", self.communities, self.nodes));
        }
        if self.noise_per_node > self.noise_vocab {
            return bad(format!("noise_per_node {} exceeds noise_vocab {}", self.noise_per_node, self.noise_vocab));
        }
        Ok(())
    }
}

/// Generated benchmark in the on-disk text formats.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntheticData {
    pub edges: String,
    pub attrs: String,
    pub communities: String,
}

impl SyntheticData {
    pub fn load(&self) -> Result<(AttributedGraph, Vec<Vec<usize>>)> {
        let g = AttributedGraph::ingest(self.edges.lines(), self.attrs.lines())?;
        let communities = parse_communities(&g, self.communities.lines())?;
        Ok((g, communities))
    }
}

pub fn planted_partition(cfg: &PlantedConfig) -> Result<SyntheticData> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n = cfg.nodes;
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng);
    let mut label = vec![0; n];
    let mut members = vec![Vec::new(); cfg.communities];
    for (i, &v) in perm.iter().enumerate() {
        let c = i * cfg.communities / n;
        label[v] = c;
        members[c].push(v);
    }

    let mut edges = String::from("# planted partition\n");
    for u in 0..n {
        for v in u + 1..n {
            let p = if label[u] == label[v] { cfg.p_in } else { cfg.p_out };
            if rng.gen_bool(p) {
                writeln!(edges, "v{u} v{v}").expect("string write");
            }
        }
    }

    let mut attrs = String::new();
    for (v, &c) in label.iter().enumerate() {
        let mut own: Vec<String> = Vec::new();
        for s in 0..cfg.signature_attrs {
            if rng.gen_bool(cfg.signature_rate) {
                own.push(format!("c{c}s{s}"));
            }
        }
        for k in index::sample(&mut rng, cfg.noise_vocab, cfg.noise_per_node).into_vec() {
            own.push(format!("n{k}"));
        }
        writeln!(attrs, "v{v}\t{}", own.join(",")).expect("string write");
    }

    let mut communities = String::new();
    for c in &mut members {
        c.sort_unstable();
        let line: Vec<String> = c.iter().map(|v| format!("v{v}")).collect();
        writeln!(communities, "{}", line.join(" ")).expect("string write");
    }
    Ok(SyntheticData { edges, attrs, communities })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_benchmark_shape() {
        let data = planted_partition(&PlantedConfig::default()).unwrap();
        let (g, comms) = data.load().unwrap();
        assert_eq!(g.node_count(), 400);
        assert_eq!(comms.len(), 8);
        assert!(comms.iter().all(|c| c.len() == 50));
        let label = |v: usize| comms.iter().position(|c| c.contains(&v)).unwrap();
        let inside = g.edges().filter(|&(u, v)| label(u) == label(v)).count();
        // expected 8 * C(50,2) * 0.2 = 1960 inside and 70000 * 0.01 = 700 across
        assert!((1700..2200).contains(&inside), "inside {inside}");
        assert!((550..850).contains(&(g.edge_count() - inside)));
    }

    #[test]
    fn equal_probabilities_plant_no_structure() {
        let cfg = PlantedConfig { p_in: 0.05, p_out: 0.05, ..PlantedConfig::default() };
        let (g, comms) = planted_partition(&cfg).unwrap().load().unwrap();
        let label = |v: usize| comms.iter().position(|c| c.contains(&v)).unwrap();
        let inside = g.edges().filter(|&(u, v)| label(u) == label(v)).count() as f64;
        let share = inside / g.edge_count() as f64;
        // same-label pairs are 1960 / 79800 of all pairs
        assert!((share - 0.1228).abs() < 0.03, "share {share}");
    }

    #[test]
    fn fixed_seed_is_reproducible() {
        let cfg = PlantedConfig { nodes: 60, communities: 3, ..PlantedConfig::default() };
        assert_eq!(planted_partition(&cfg).unwrap(), planted_partition(&cfg).unwrap());
        let other = PlantedConfig { seed: 1, ..cfg.clone() };
        assert_ne!(planted_partition(&cfg).unwrap(), planted_partition(&other).unwrap());
    }

    #[test]
    fn invalid_settings_are_rejected() {
        for cfg in [
            PlantedConfig { p_in: 1.2, ..PlantedConfig::default() },
            PlantedConfig { p_out: -0.1, ..PlantedConfig::default() },
            PlantedConfig { communities: 0, ..PlantedConfig::default() },
            PlantedConfig { noise_per_node: 60, ..PlantedConfig::default() },
        ] {
            assert!(planted_partition(&cfg).is_err());
        }
    }
}
