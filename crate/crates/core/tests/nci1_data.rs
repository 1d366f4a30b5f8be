//! Checks against the real NCI1 dataset. Ignored by default: place the TU
//! files under `data/NCI1` (or set `GINNK_NCI1_DIR`) and run with
//! `cargo test -p ginnk-core --test nci1_data -- --ignored --nocapture`.

use std::path::PathBuf;

use ginnk_core::data::{assign_degree_features, parse_tu_dataset, FeatureMode};

fn nci1_dir() -> Option<PathBuf> {
    if let Ok(dir) = std::env::var("GINNK_NCI1_DIR") {
        let p = PathBuf::from(dir);
        if p.is_dir() {
            return Some(p);
        }
    }
    let fallback = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/NCI1");
    fallback.is_dir().then_some(fallback)
}

/// Counting lines in the raw files is an independent oracle for the graph
/// count and total node count; the label file fixes the class count.
#[test]
#[ignore = "needs the NCI1 dataset (see README: data/NCI1 or GINNK_NCI1_DIR)"]
fn parse_matches_line_count_oracle() {
    let dir = nci1_dir().expect(
        "NCI1 dataset not found: place the TU files under data/NCI1 or set GINNK_NCI1_DIR",
    );
    let name = dir.file_name().unwrap().to_string_lossy().into_owned();
    let count_lines = |file: &str| -> usize {
        std::fs::read_to_string(dir.join(file))
            .unwrap()
            .lines()
            .filter(|l| !l.trim().is_empty())
            .count()
    };
    let expected_graphs = count_lines(&format!("{name}_graph_labels.txt"));
    let expected_nodes = count_lines(&format!("{name}_graph_indicator.txt"));

    let ds = parse_tu_dataset(&dir).unwrap();
    assert_eq!(ds.len(), expected_graphs);
    assert_eq!(ds.num_classes, 2);
    let total_nodes: usize = ds.graphs.iter().map(|g| g.num_nodes).sum();
    assert_eq!(total_nodes, expected_nodes);

    let ds = assign_degree_features(ds, FeatureMode::OneHot).unwrap();
    println!(
        "NCI1: {} graphs, {} nodes, max degree {}, feature dim {}",
        ds.len(),
        total_nodes,
        ds.max_degree(),
        ds.feature_dim
    );
}
