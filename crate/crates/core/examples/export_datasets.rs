//! Writes the sample inputs under `data/`: the football-like graph as GML and
//! a 60-document newsgroups-like dissimilarity matrix as CSV.
//!
//! cargo run --example export_datasets -p surfml-core -- data

use std::path::PathBuf;

use surfml::graph::{graph_distances, save_gml};
use surfml::io::{format_dissimilarity, write_file, Header};
use surfml::synthetic::{football_like, newsgroups_like};

fn main() -> surfml::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "data".into()));
    std::fs::create_dir_all(&dir).map_err(|source| surfml::Error::Io { path: dir.clone(), source })?;
    save_gml(&football_like(0), &dir.join("football_like.gml"))?;
    let g = newsgroups_like(60, 0)?;
    let header = Header::default().with("source", "newsgroups_like(60, seed 0)").with("distance", "shortest path hops");
    write_file(&dir.join("newsgroups_small.csv"), &format_dissimilarity(&header, &graph_distances(&g)?))?;
    Ok(())
}
