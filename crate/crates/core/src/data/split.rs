//! Deterministic stratified train/val/test assignment.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{GraphDataset, Split};
use crate::error::{Error, Result};

const SPLITS: [Split; 3] = [Split::Train, Split::Val, Split::Test];

/// Train/val/test proportions. Must be positive and sum to 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitRatios {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        SplitRatios {
            train: 0.8,
            val: 0.1,
            test: 0.1,
        }
    }
}

impl SplitRatios {
    pub fn new(train: f64, val: f64, test: f64) -> Self {
        SplitRatios { train, val, test }
    }

    fn as_array(&self) -> [f64; 3] {
        [self.train, self.val, self.test]
    }

    fn validate(&self) -> Result<()> {
        let r = self.as_array();
        if r.iter().any(|&x| x <= 0.0) {
            return Err(Error::InvalidInput(format!(
                "split ratios must be positive, got {r:?}"
            )));
        }
        let sum: f64 = r.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidInput(format!(
                "split ratios must sum to 1, got {r:?} (sum {sum})"
            )));
        }
        Ok(())
    }
}

/// Assign every graph to train/val/test, stratified by class.
///
/// Each class's graphs are shuffled with a ChaCha stream derived from `seed`,
/// floor quotas per split are filled first, and the leftover graphs go to the
/// splits with the largest remaining global deficit. Classes with fewer than
/// three graphs are assigned wholly to train with a warning; any class with
/// at least three graphs is guaranteed a training representative. The result
/// is a pure function of `(dataset, ratios, seed)`.
pub fn stratified_split(
    mut dataset: GraphDataset,
    ratios: SplitRatios,
    seed: u64,
) -> Result<GraphDataset> {
    ratios.validate()?;
    if dataset.is_empty() {
        return Err(Error::InvalidInput("cannot split an empty dataset".into()));
    }

    let r = ratios.as_array();
    let total = dataset.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // Graphs per class, ascending class order, ascending id within class.
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); dataset.num_classes];
    for (i, g) in dataset.graphs.iter().enumerate() {
        by_class[g.label].push(i);
    }

    let mut assignment = vec![Split::Train; total];
    let mut counts = [0usize; 3];
    let mut leftovers: Vec<usize> = Vec::new();

    for (class, members) in by_class.iter_mut().enumerate() {
        members.shuffle(&mut rng);
        if members.len() < SPLITS.len() {
            if !members.is_empty() {
                log::warn!(
                    "class {class} has only {} graph(s); assigning all to train",
                    members.len()
                );
                counts[0] += members.len();
            }
            continue;
        }
        let quotas: Vec<usize> = r.iter().map(|ri| (ri * members.len() as f64) as usize).collect();
        let mut cursor = 0usize;
        for (s, &q) in quotas.iter().enumerate() {
            for &g in &members[cursor..cursor + q] {
                assignment[g] = SPLITS[s];
            }
            counts[s] += q;
            cursor += q;
        }
        leftovers.extend_from_slice(&members[cursor..]);
    }

    // Distribute leftovers toward the global targets; ties prefer
    // train over val over test.
    for &g in &leftovers {
        let deficits: Vec<f64> = (0..3)
            .map(|s| r[s] * total as f64 - counts[s] as f64)
            .collect();
        let best = (0..3)
            .max_by(|&a, &b| match deficits[a].partial_cmp(&deficits[b]).unwrap() {
                std::cmp::Ordering::Equal => b.cmp(&a),
                ord => ord,
            })
            .unwrap();
        assignment[g] = SPLITS[best];
        counts[best] += 1;
    }

    // Every class with >= 3 graphs must appear in train.
    for members in &by_class {
        if members.len() < SPLITS.len() {
            continue;
        }
        if !members.iter().any(|&g| assignment[g] == Split::Train) {
            let donor = *members
                .iter()
                .max_by(|&&a, &&b| {
                    let over =
                        |g: usize| counts[split_idx(assignment[g])] as f64 - r[split_idx(assignment[g])] * total as f64;
                    over(a).partial_cmp(&over(b)).unwrap()
                })
                .unwrap();
            counts[split_idx(assignment[donor])] -= 1;
            assignment[donor] = Split::Train;
            counts[0] += 1;
        }
    }

    dataset.split = assignment;
    Ok(dataset)
}

fn split_idx(s: Split) -> usize {
    match s {
        Split::Train => 0,
        Split::Val => 1,
        Split::Test => 2,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Graph;

    fn two_class_dataset(per_class: usize) -> GraphDataset {
        let mut graphs = Vec::new();
        for i in 0..2 * per_class {
            graphs.push(Graph::new(i, 3, vec![(0, 1), (1, 2)], i % 2));
        }
        GraphDataset::new(graphs, 2)
    }

    #[test]
    fn ten_graphs_follow_80_10_10() {
        let ds = stratified_split(two_class_dataset(5), SplitRatios::default(), 0).unwrap();
        let train = ds.split_indices(Split::Train);
        let val = ds.split_indices(Split::Val);
        let test = ds.split_indices(Split::Test);
        assert_eq!((train.len(), val.len(), test.len()), (8, 1, 1));
        // Class balance within one graph of 50% in every split.
        for part in [&train, &val, &test] {
            let ones = part.iter().filter(|&&g| ds.graphs[g].label == 1).count();
            let expected = part.len() as f64 * 0.5;
            assert!((ones as f64 - expected).abs() <= 1.0);
        }
    }

    #[test]
    fn split_is_deterministic() {
        let a = stratified_split(two_class_dataset(20), SplitRatios::default(), 7).unwrap();
        let b = stratified_split(two_class_dataset(20), SplitRatios::default(), 7).unwrap();
        assert_eq!(a.split, b.split);
    }

    #[test]
    fn different_seeds_differ() {
        let a = stratified_split(two_class_dataset(20), SplitRatios::default(), 0).unwrap();
        let b = stratified_split(two_class_dataset(20), SplitRatios::default(), 1).unwrap();
        assert_ne!(a.split, b.split);
    }

    #[test]
    fn bad_ratios_are_rejected() {
        let err =
            stratified_split(two_class_dataset(5), SplitRatios::new(0.5, 0.5, 0.5), 0).unwrap_err();
        assert!(matches!(err, Error::InvalidInput(_)));
    }

    #[test]
    fn tiny_class_goes_to_train() {
        let mut graphs = vec![
            Graph::new(0, 2, vec![(0, 1)], 0),
            Graph::new(1, 2, vec![(0, 1)], 0),
        ];
        for i in 2..12 {
            graphs.push(Graph::new(i, 3, vec![(0, 1), (1, 2)], 1));
        }
        let ds = stratified_split(GraphDataset::new(graphs, 2), SplitRatios::default(), 0).unwrap();
        assert_eq!(ds.split[0], Split::Train);
        assert_eq!(ds.split[1], Split::Train);
    }

    #[test]
    fn every_class_with_three_graphs_reaches_train() {
        // Ratios that starve train at the floor stage.
        let mut graphs = Vec::new();
        for i in 0..3 {
            graphs.push(Graph::new(i, 3, vec![(0, 1)], 0));
        }
        for i in 3..9 {
            graphs.push(Graph::new(i, 3, vec![(0, 1)], 1));
        }
        let ds = stratified_split(
            GraphDataset::new(graphs, 2),
            SplitRatios::new(0.1, 0.45, 0.45),
            3,
        )
        .unwrap();
        for class in 0..2 {
            let in_train = ds
                .graphs
                .iter()
                .zip(&ds.split)
                .any(|(g, &s)| g.label == class && s == Split::Train);
            assert!(in_train, "class {class} missing from train");
        }
    }

    #[test]
    fn split_covers_every_graph_exactly_once() {
        let ds = stratified_split(two_class_dataset(17), SplitRatios::default(), 11).unwrap();
        let sum = ds.split_indices(Split::Train).len()
            + ds.split_indices(Split::Val).len()
            + ds.split_indices(Split::Test).len();
        assert_eq!(sum, ds.len());
    }
}
