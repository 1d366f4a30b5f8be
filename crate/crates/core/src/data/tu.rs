//! Parser for the TU-collection on-disk graph format.
//!
//! A dataset directory `DS` holds three mandatory files:
//!   `DS_A.txt`               global edge list, one `u, v` pair per line (1-based node ids)
//!   `DS_graph_indicator.txt` line i gives the (1-based) graph id of node i
//!   `DS_graph_labels.txt`    line g gives the class label of graph g
//! `DS_node_labels.txt` is parsed when present but unused by the degree-only
//! feature protocol.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use crate::data::{Graph, GraphDataset};
use crate::error::{Error, Result};

/// Parse a TU dataset directory into a [`GraphDataset`].
///
/// Node features are left empty (dimension 0); run
/// [`assign_degree_features`](crate::data::assign_degree_features) afterwards.
/// Labels are remapped to the contiguous range `0..C` in ascending order of
/// the raw label values. Duplicate directed edge entries collapse to one
/// undirected edge and self-loops are dropped.
pub fn parse_tu_dataset(dir: &Path) -> Result<GraphDataset> {
    let name = dataset_name(dir);
    let indicator_path = dir.join(format!("{name}_graph_indicator.txt"));
    let labels_path = dir.join(format!("{name}_graph_labels.txt"));
    let edges_path = dir.join(format!("{name}_A.txt"));
    for p in [&edges_path, &indicator_path, &labels_path] {
        if !p.is_file() {
            return Err(Error::DatasetLoad { path: p.clone() });
        }
    }

    // One label per graph; the label count defines how many graphs exist.
    let label_rows = read_int_rows(&labels_path, 1)?;
    let num_graphs = label_rows.len();
    if num_graphs == 0 {
        return Err(Error::Format {
            file: file_name(&labels_path),
            line: 1,
            message: "graph label file is empty".into(),
        });
    }

    // node -> graph assignment (both 1-based in the file),
    // with per-graph local node numbering in order of appearance.
    let indicator = read_int_rows(&indicator_path, 1)?;
    let mut node_graph = Vec::with_capacity(indicator.len());
    let mut node_local = Vec::with_capacity(indicator.len());
    let mut graph_sizes = vec![0usize; num_graphs];
    for (i, row) in indicator.iter().enumerate() {
        let gid = row[0];
        if gid < 1 || gid as usize > num_graphs {
            return Err(Error::Format {
                file: file_name(&indicator_path),
                line: i + 1,
                message: format!("node {} references nonexistent graph {}", i + 1, gid),
            });
        }
        let gid = gid as usize - 1;
        node_graph.push(gid);
        node_local.push(graph_sizes[gid]);
        graph_sizes[gid] += 1;
    }

    // labels remapped to 0..C in ascending raw order
    let raw_labels: Vec<i64> = label_rows.iter().map(|r| r[0]).collect();
    let mut label_map = BTreeMap::new();
    for &l in &raw_labels {
        let next = label_map.len();
        label_map.entry(l).or_insert(next);
    }
    let num_classes = label_map.len();

    let mut graphs: Vec<Graph> = graph_sizes
        .iter()
        .zip(raw_labels.iter())
        .enumerate()
        .map(|(id, (&n, raw))| Graph::new(id, n, Vec::new(), label_map[raw]))
        .collect();

    // global edge list
    let edge_rows = read_int_rows(&edges_path, 2)?;
    let num_nodes = node_graph.len();
    for (i, row) in edge_rows.iter().enumerate() {
        let (u, v) = (row[0], row[1]);
        let line = i + 1;
        let check = |id: i64| -> Result<usize> {
            if id < 1 || id as usize > num_nodes {
                Err(Error::Format {
                    file: file_name(&edges_path),
                    line,
                    message: format!("node id {id} out of range 1..={num_nodes}"),
                })
            } else {
                Ok(id as usize - 1)
            }
        };
        let (u, v) = (check(u)?, check(v)?);
        if node_graph[u] != node_graph[v] {
            return Err(Error::Format {
                file: file_name(&edges_path),
                line,
                message: format!(
                    "edge ({},{}) crosses graphs {} and {}",
                    u + 1,
                    v + 1,
                    node_graph[u] + 1,
                    node_graph[v] + 1
                ),
            });
        }
        graphs[node_graph[u]]
            .edges
            .push((node_local[u], node_local[v]));
    }
    for g in &mut graphs {
        g.normalize_edges()?;
    }

    // optional node labels: validated, otherwise unused
    let node_labels_path = dir.join(format!("{name}_node_labels.txt"));
    if node_labels_path.is_file() {
        let rows = read_int_rows(&node_labels_path, 1)?;
        if rows.len() != num_nodes {
            return Err(Error::Format {
                file: file_name(&node_labels_path),
                line: rows.len(),
                message: format!("expected {} node labels, found {}", num_nodes, rows.len()),
            });
        }
    }

    Ok(GraphDataset::new(graphs, num_classes))
}

/// Write a dataset back out in TU format (edge list emitted once per
/// undirected pair, both directions). Feature and split information is not
/// persisted; labels are written as the contiguous 0-based class indices.
pub fn write_tu_dataset(dataset: &GraphDataset, dir: &Path, name: &str) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut indicator = fs::File::create(dir.join(format!("{name}_graph_indicator.txt")))?;
    let mut labels = fs::File::create(dir.join(format!("{name}_graph_labels.txt")))?;
    let mut edges = fs::File::create(dir.join(format!("{name}_A.txt")))?;

    let mut offset = 0usize;
    for g in &dataset.graphs {
        for _ in 0..g.num_nodes {
            writeln!(indicator, "{}", g.id + 1)?;
        }
        writeln!(labels, "{}", g.label)?;
        for &(u, v) in &g.edges {
            writeln!(edges, "{}, {}", offset + u + 1, offset + v + 1)?;
            writeln!(edges, "{}, {}", offset + v + 1, offset + u + 1)?;
        }
        offset += g.num_nodes;
    }
    Ok(())
}

fn dataset_name(dir: &Path) -> String {
    dir.file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "DS".into())
}

fn file_name(path: &Path) -> String {
    path.file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

/// Read a whitespace/comma-separated integer table, requiring `width`
/// columns per non-empty line.
fn read_int_rows(path: &Path, width: usize) -> Result<Vec<Vec<i64>>> {
    let text = fs::read_to_string(path)?;
    let fname = file_name(path);
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let mut row = Vec::with_capacity(width);
        for tok in trimmed.split(|c: char| c == ',' || c.is_whitespace()) {
            if tok.is_empty() {
                continue;
            }
            let value = tok.parse::<i64>().map_err(|_| Error::Format {
                file: fname.clone(),
                line: i + 1,
                message: format!("non-integer token {tok:?}"),
            })?;
            row.push(value);
        }
        if row.len() != width {
            return Err(Error::Format {
                file: fname.clone(),
                line: i + 1,
                message: format!("expected {width} integers, found {}", row.len()),
            });
        }
        rows.push(row);
    }
    Ok(rows)
}
