//! Random forest of unpruned Gini trees on bootstrap samples.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dataset::Label;
use crate::rng::Prng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum Node {
    /// Rows with `x[feature] <= threshold` go left.
    Split {
        feature: u32,
        threshold: f64,
        left: u32,
        right: u32,
    },
    /// Bootstrap class counts that reached this leaf.
    Leaf { tumor: u32, not_tumor: u32 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub seed: u64,
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn leaf_for(&self, x: &[f64]) -> &Node {
        let mut at = 0usize;
        loop {
            match &self.nodes[at] {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if x[*feature as usize] <= *threshold {
                        *left
                    } else {
                        *right
                    } as usize;
                }
                leaf => return leaf,
            }
        }
    }

    /// Majority class of the reached leaf; an even split votes not_tumor.
    pub fn vote(&self, x: &[f64]) -> Label {
        match self.leaf_for(x) {
            Node::Leaf { tumor, not_tumor } if tumor > not_tumor => Label::Tumor,
            _ => Label::NotTumor,
        }
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[Node], at: usize) -> usize {
            match nodes[at] {
                Node::Split { left, right, .. } => 1 + go(nodes, left as usize).max(go(nodes, right as usize)),
                Node::Leaf { .. } => 0,
            }
        }
        go(&self.nodes, 0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestState {
    pub rng: String,
    pub max_features: usize,
    pub min_leaf: usize,
    pub trees: Vec<Tree>,
}

impl ForestState {
    /// Fraction of trees voting tumor.
    pub fn score(&self, x: &[f64]) -> f64 {
        let votes = self.trees.iter().filter(|t| t.vote(x).is_tumor()).count();
        votes as f64 / self.trees.len() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForestParams {
    pub n_trees: usize,
    pub seed: u64,
    pub max_features: usize,
    pub min_leaf: usize,
}

/// Grows `n_trees` trees. Per-tree seeds are drawn up front from the master
/// seed, so the forest does not depend on the thread count.
pub fn grow_forest(rows: &[Vec<f64>], labels: &[Label], p: ForestParams) -> ForestState {
    let mut master = Prng::new(p.seed);
    let seeds: Vec<u64> = (0..p.n_trees).map(|_| master.next_u64()).collect();
    let trees = seeds
        .into_par_iter()
        .map(|s| grow_tree(rows, labels, s, p.max_features, p.min_leaf))
        .collect();
    ForestState {
        rng: crate::rng::ALGORITHM.to_string(),
        max_features: p.max_features,
        min_leaf: p.min_leaf,
        trees,
    }
}

struct Task {
    node: usize,
    samples: Vec<u32>,
}

struct BestSplit {
    feature: usize,
    threshold: f64,
}

pub fn grow_tree(rows: &[Vec<f64>], labels: &[Label], seed: u64, max_features: usize, min_leaf: usize) -> Tree {
    let n = rows.len();
    let d = rows[0].len();
    let mut rng = Prng::new(seed);
    let bootstrap: Vec<u32> = (0..n).map(|_| rng.below(n) as u32).collect();
    let mut features: Vec<usize> = (0..d).collect();
    let mut nodes = vec![Node::Leaf { tumor: 0, not_tumor: 0 }];
    let mut stack = vec![Task {
        node: 0,
        samples: bootstrap,
    }];
    let mut scratch: Vec<(f64, bool)> = Vec::with_capacity(n);

    while let Some(Task { node, samples }) = stack.pop() {
        let tumor = samples.iter().filter(|&&s| labels[s as usize].is_tumor()).count();
        let not_tumor = samples.len() - tumor;
        let leaf = Node::Leaf {
            tumor: tumor as u32,
            not_tumor: not_tumor as u32,
        };
        if tumor == 0 || not_tumor == 0 || samples.len() < 2 * min_leaf {
            nodes[node] = leaf;
            continue;
        }
        let Some(split) = find_split(
            rows,
            labels,
            &samples,
            &mut features,
            max_features,
            min_leaf,
            &mut rng,
            &mut scratch,
        ) else {
            nodes[node] = leaf;
            continue;
        };
        let (left, right): (Vec<u32>, Vec<u32>) = samples
            .iter()
            .partition(|&&s| rows[s as usize][split.feature] <= split.threshold);
        let l = nodes.len();
        nodes.push(Node::Leaf { tumor: 0, not_tumor: 0 });
        nodes.push(Node::Leaf { tumor: 0, not_tumor: 0 });
        nodes[node] = Node::Split {
            feature: split.feature as u32,
            threshold: split.threshold,
            left: l as u32,
            right: l as u32 + 1,
        };
        stack.push(Task {
            node: l + 1,
            samples: right,
        });
        stack.push(Task { node: l, samples: left });
    }
    Tree { seed, nodes }
}

/// Draws features without replacement until `max_features` have been
/// examined and at least one admits a split, falling through to further
/// features when the first draws are constant on this node.
#[allow(clippy::too_many_arguments)]
fn find_split(
    rows: &[Vec<f64>],
    labels: &[Label],
    samples: &[u32],
    features: &mut [usize],
    max_features: usize,
    min_leaf: usize,
    rng: &mut Prng,
    scratch: &mut Vec<(f64, bool)>,
) -> Option<BestSplit> {
    let d = features.len();
    let mut best: Option<(f64, BestSplit)> = None;
    for k in 0..d {
        if k >= max_features && best.is_some() {
            break;
        }
        let j = k + rng.below(d - k);
        features.swap(k, j);
        let f = features[k];

        scratch.clear();
        scratch.extend(
            samples
                .iter()
                .map(|&s| (rows[s as usize][f], labels[s as usize].is_tumor())),
        );
        scratch.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
        let n = scratch.len();
        let total_t = scratch.iter().filter(|e| e.1).count() as f64;
        let mut left_t = 0.0;
        for i in 0..n - 1 {
            if scratch[i].1 {
                left_t += 1.0;
            }
            let nl = (i + 1) as f64;
            let nr = (n - i - 1) as f64;
            let (a, b) = (scratch[i].0, scratch[i + 1].0);
            if a == b || i + 1 < min_leaf || n - i - 1 < min_leaf {
                continue;
            }
            let right_t = total_t - left_t;
            // n * weighted Gini, up to a constant
            let cost = nl - (left_t * left_t + (nl - left_t) * (nl - left_t)) / nl + nr
                - (right_t * right_t + (nr - right_t) * (nr - right_t)) / nr;
            if best.as_ref().is_none_or(|(c, _)| cost < *c) {
                let mid = a + (b - a) / 2.0;
                let threshold = if mid < b { mid } else { a };
                best = Some((cost, BestSplit { feature: f, threshold }));
            }
        }
    }
    best.map(|(_, s)| s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xor(n: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<Label>) {
        let mut rng = Prng::new(seed);
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for _ in 0..n {
            let x = rng.range(-1.0, 1.0);
            let y = rng.range(-1.0, 1.0);
            labels.push(if (x > 0.0) == (y > 0.0) {
                Label::Tumor
            } else {
                Label::NotTumor
            });
            rows.push(vec![x, y]);
        }
        (rows, labels)
    }

    /// Brute force: the depth-2 axis tree splitting x then y at zero labels
    /// every quadrant correctly, so XOR is learnable by axis-aligned trees.
    #[test]
    fn depth_two_axis_tree_shatters_xor() {
        let (rows, labels) = xor(200, 1);
        let tree = Tree {
            seed: 0,
            nodes: vec![
                Node::Split {
                    feature: 0,
                    threshold: 0.0,
                    left: 1,
                    right: 2,
                },
                Node::Split {
                    feature: 1,
                    threshold: 0.0,
                    left: 3,
                    right: 4,
                },
                Node::Split {
                    feature: 1,
                    threshold: 0.0,
                    left: 5,
                    right: 6,
                },
                Node::Leaf { tumor: 1, not_tumor: 0 },
                Node::Leaf { tumor: 0, not_tumor: 1 },
                Node::Leaf { tumor: 0, not_tumor: 1 },
                Node::Leaf { tumor: 1, not_tumor: 0 },
            ],
        };
        for (r, l) in rows.iter().zip(&labels) {
            assert_eq!(tree.vote(r), *l);
        }
    }

    #[test]
    fn forest_fits_xor() {
        let (rows, labels) = xor(200, 1);
        let f = grow_forest(
            &rows,
            &labels,
            ForestParams {
                n_trees: 25,
                seed: 42,
                max_features: 1,
                min_leaf: 1,
            },
        );
        let correct = rows
            .iter()
            .zip(&labels)
            .filter(|(r, l)| (f.score(r) > 0.5) == l.is_tumor())
            .count();
        assert_eq!(correct, 200);
    }

    #[test]
    fn trees_are_pure_and_leaves_nonempty() {
        let (rows, labels) = xor(120, 9);
        let t = grow_tree(&rows, &labels, 5, 1, 1);
        for node in &t.nodes {
            if let Node::Leaf { tumor, not_tumor } = node {
                assert!(tumor + not_tumor >= 1);
                assert!(*tumor == 0 || *not_tumor == 0);
            }
        }
        assert!(t.depth() >= 2);
    }

    #[test]
    fn same_seed_same_forest() {
        let (rows, labels) = xor(100, 2);
        let p = ForestParams {
            n_trees: 8,
            seed: 77,
            max_features: 1,
            min_leaf: 1,
        };
        let a = grow_forest(&rows, &labels, p);
        let b = grow_forest(&rows, &labels, p);
        assert_eq!(a, b);
        let c = grow_forest(&rows, &labels, ForestParams { seed: 78, ..p });
        assert_ne!(a, c);
    }

    #[test]
    fn thread_count_does_not_change_trees() {
        let (rows, labels) = xor(100, 4);
        let p = ForestParams {
            n_trees: 6,
            seed: 3,
            max_features: 1,
            min_leaf: 1,
        };
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = one.install(|| grow_forest(&rows, &labels, p));
        let b = four.install(|| grow_forest(&rows, &labels, p));
        assert_eq!(a, b);
    }

    #[test]
    fn min_leaf_is_respected() {
        let (rows, labels) = xor(150, 6);
        let t = grow_tree(&rows, &labels, 8, 2, 5);
        for node in &t.nodes {
            if let Node::Leaf { tumor, not_tumor } = node {
                assert!(tumor + not_tumor >= 5);
            }
        }
    }
}
