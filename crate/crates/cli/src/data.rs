//! Dataset resolution for the subcommands.

use std::collections::HashMap;
use std::path::Path;

use surfml::eval::Sampler;
use surfml::graph::{graph_distances, load_gml, Dissimilarity};
use surfml::io::{read_dissimilarity, read_points, PointTable};
use surfml::seed;
use surfml::synthetic::{football_like, helicoid_two_clusters, newsgroups_like, GaussianPairs};

use crate::Failure;

/// Dissimilarities between named items, with a class per item (empty when
/// the source has none).
pub struct GraphData {
    pub name: String,
    pub delta: Dissimilarity,
    pub classes: Vec<String>,
}

fn synthetic_size(spec: &str, default: usize) -> Result<usize, Failure> {
    match spec.split(':').nth(2) {
        None => Ok(default),
        Some(n) => n.parse().map_err(|_| Failure::Input(format!("bad size in `{spec}`"))),
    }
}

pub fn load_graph_data(spec: &str, seed: u64) -> Result<GraphData, Failure> {
    let graph = match spec.split(':').nth(1) {
        Some("football") if spec.starts_with("synthetic:") => Some(football_like(seed)),
        Some("newsgroups") if spec.starts_with("synthetic:") => Some(newsgroups_like(synthetic_size(spec, 500)?, seed)?),
        _ if spec.starts_with("synthetic:") => return Err(Failure::Input(format!("unknown dataset `{spec}`"))),
        _ if spec.ends_with(".gml") => Some(load_gml(Path::new(spec))?),
        _ => None,
    };
    match graph {
        Some(g) => Ok(GraphData { name: g.name.clone(), delta: graph_distances(&g)?, classes: g.classes.clone() }),
        None => {
            let delta = read_dissimilarity(Path::new(spec))?;
            let name = Path::new(spec).file_stem().map_or_else(|| spec.to_string(), |s| s.to_string_lossy().into_owned());
            let classes = vec![String::new(); delta.len()];
            Ok(GraphData { name, delta, classes })
        }
    }
}

pub fn load_points(spec: &str, seed: u64) -> Result<PointTable, Failure> {
    let (points, labels): (Vec<Vec<f64>>, Vec<usize>) = match spec.split(':').nth(1) {
        Some("helicoid-two-clusters") if spec.starts_with("synthetic:") => {
            let (pts, labels) = helicoid_two_clusters(synthetic_size(spec, 200)?, seed);
            (pts.points().to_vec(), labels)
        }
        Some("gaussian-pairs") if spec.starts_with("synthetic:") => {
            GaussianPairs::default().sample(&mut seed::rng(seed::keyed(seed, "gaussian-pairs")), synthetic_size(spec, 200)?)
        }
        _ if spec.starts_with("synthetic:") => return Err(Failure::Input(format!("unknown dataset `{spec}`"))),
        _ => return Ok(read_points(Path::new(spec))?),
    };
    Ok(PointTable {
        ids: (0..points.len()).map(|i| format!("p{i:04}")).collect(),
        points,
        labels: labels.iter().map(usize::to_string).collect(),
    })
}

/// Maps class names to indices in order of first appearance.
pub fn encode_labels(classes: &[String]) -> Vec<usize> {
    let mut index = HashMap::new();
    classes
        .iter()
        .map(|c| {
            let next = index.len();
            *index.entry(c.as_str()).or_insert(next)
        })
        .collect()
}

/// True when every item carries a nonempty class.
pub fn has_labels(classes: &[String]) -> bool {
    classes.iter().all(|c| !c.is_empty())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels_are_encoded_in_order_of_appearance() {
        let c: Vec<String> = ["b", "a", "b", "c"].iter().map(|s| s.to_string()).collect();
        assert_eq!(encode_labels(&c), vec![0, 1, 0, 2]);
    }

    #[test]
    fn synthetic_specs() {
        assert_eq!(load_points("synthetic:helicoid-two-clusters:10", 0).unwrap().points.len(), 10);
        assert_eq!(load_graph_data("synthetic:football", 0).unwrap().delta.len(), 115);
        assert!(matches!(load_points("synthetic:nope", 0), Err(Failure::Input(_))));
    }
}
