use std::collections::HashSet;

use log::warn;

use crate::error::{Error, Result};
use crate::graph::AttributedGraph;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrecisionRecall {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

fn harmonic(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn overlap(a: &[usize], b: &[usize]) -> usize {
    let set: HashSet<usize> = a.iter().copied().collect();
    let other: HashSet<usize> = b.iter().copied().collect();
    set.intersection(&other).count()
}

fn distinct(a: &[usize]) -> usize {
    a.iter().collect::<HashSet<_>>().len()
}

/// Scores of a single prediction.
pub fn pair_scores(truth: &[usize], prediction: &[usize]) -> PrecisionRecall {
    let hits = overlap(truth, prediction);
    let precision = ratio(hits, distinct(prediction));
    let recall = ratio(hits, distinct(truth));
    PrecisionRecall { precision, recall, f1: harmonic(precision, recall) }
}

/// Micro-averaged precision, recall and F1 over all pairs.
pub fn f1_suite(truths: &[Vec<usize>], predictions: &[Vec<usize>]) -> Result<PrecisionRecall> {
    if truths.len() != predictions.len() {
        return Err(Error::InvalidArgument(format!("{} truths but {} predictions", truths.len(), predictions.len())));
    }
    let (mut hits, mut predicted, mut actual) = (0, 0, 0);
    for (t, p) in truths.iter().zip(predictions) {
        hits += overlap(t, p);
        predicted += distinct(p);
        actual += distinct(t);
    }
    let precision = ratio(hits, predicted);
    let recall = ratio(hits, actual);
    Ok(PrecisionRecall { precision, recall, f1: harmonic(precision, recall) })
}

/// Mean over communities of the mean degree inside each community.
pub fn avg_degree(g: &AttributedGraph, predictions: &[Vec<usize>]) -> Result<f64> {
    if predictions.is_empty() {
        return Err(Error::InvalidArgument("avg_degree needs at least one community".into()));
    }
    let mut total = 0.0;
    for c in predictions {
        let members: HashSet<usize> = c.iter().copied().collect();
        if members.is_empty() {
            warn!("empty predicted community contributes 0 to the average degree");
            continue;
        }
        let mut degree_sum = 0usize;
        for &v in &members {
            g.check_node(v)?;
            degree_sum += g.neighbors(v).iter().filter(|u| members.contains(u)).count();
        }
        total += degree_sum as f64 / members.len() as f64;
    }
    Ok(total / predictions.len() as f64)
}

/// Jaccard index of two attribute sets; 0 when both are empty.
pub fn jaccard(a: &[usize], b: &[usize]) -> f64 {
    let inter = overlap(a, b);
    let union = distinct(a) + distinct(b) - inter;
    ratio(inter, union)
}

/// Mean over communities of the mean Jaccard over all ordered member pairs,
/// diagonal included.
pub fn cpj(g: &AttributedGraph, predictions: &[Vec<usize>]) -> Result<f64> {
    if predictions.is_empty() {
        return Err(Error::InvalidArgument("cpj needs at least one community".into()));
    }
    let mut total = 0.0;
    for c in predictions {
        let mut members: Vec<usize> = c.clone();
        members.sort_unstable();
        members.dedup();
        if members.is_empty() {
            continue;
        }
        for &v in &members {
            g.check_node(v)?;
        }
        let mut sum = 0.0;
        for &u in &members {
            for &v in &members {
                sum += jaccard(g.attributes(u), g.attributes(v));
            }
        }
        total += sum / (members.len() * members.len()) as f64;
    }
    Ok(total / predictions.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f1_examples() {
        let t = vec![vec![0, 1, 2, 3]];
        let same = f1_suite(&t, &t).unwrap();
        assert_eq!((same.precision, same.recall, same.f1), (1.0, 1.0, 1.0));
        let off = f1_suite(&t, &[vec![7, 8]]).unwrap();
        assert_eq!((off.precision, off.recall, off.f1), (0.0, 0.0, 0.0));
        // truth {a,b,c,d}, prediction {a,b,e}
        let s = f1_suite(&t, &[vec![0, 1, 4]]).unwrap();
        assert!((s.precision - 2.0 / 3.0).abs() < 1e-15);
        assert!((s.recall - 0.5).abs() < 1e-15);
        assert!((s.f1 - 4.0 / 7.0).abs() < 1e-15);
        assert!(f1_suite(&t, &[]).is_err());
        let empty = f1_suite(&[vec![]], &[vec![]]).unwrap();
        assert_eq!(empty.f1, 0.0);
    }

    #[test]
    fn avg_degree_examples() {
        let g = AttributedGraph::from_edges(5, &[(0, 1), (1, 2), (0, 2), (3, 4)], &vec![vec![]; 5], 1).unwrap();
        assert_eq!(avg_degree(&g, &[vec![0, 1, 2]]).unwrap(), 2.0);
        assert_eq!(avg_degree(&g, &[vec![3]]).unwrap(), 0.0);
        assert_eq!(avg_degree(&g, &[vec![0, 1, 2], vec![3, 4]]).unwrap(), 1.5);
        assert_eq!(avg_degree(&g, &[vec![0, 1, 2], vec![]]).unwrap(), 1.0);
        assert!(avg_degree(&g, &[]).is_err());
    }

    #[test]
    fn cpj_examples() {
        let attrs = vec![vec![0, 1], vec![0, 1], vec![2], vec![3], vec![]];
        let g = AttributedGraph::from_edges(5, &[], &attrs, 4).unwrap();
        assert_eq!(cpj(&g, &[vec![0, 1]]).unwrap(), 1.0);
        assert_eq!(cpj(&g, &[vec![2, 3]]).unwrap(), 0.5);
        assert_eq!(cpj(&g, &[vec![4]]).unwrap(), 0.0);
        assert_eq!(jaccard(&[], &[]), 0.0);
    }

    #[test]
    fn cpj_ignores_attribute_labels() {
        let a = AttributedGraph::from_edges(3, &[], &[vec![0, 1], vec![1], vec![2]], 3).unwrap();
        let b = AttributedGraph::from_edges(3, &[], &[vec![2, 0], vec![0], vec![1]], 3).unwrap();
        let c = vec![vec![0, 1, 2]];
        assert_eq!(cpj(&a, &c).unwrap(), cpj(&b, &c).unwrap());
    }
}
