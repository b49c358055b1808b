//! CART-style multi-class decision tree over expert features.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

pub const N_CLASSES: usize = 8;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum Node {
    Leaf {
        /// Class proportions at the leaf; used directly as scores.
        scores: Vec<f64>,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TreeConfig {
    pub max_depth: usize,
    pub min_samples_split: usize,
}

impl Default for TreeConfig {
    fn default() -> Self {
        Self {
            max_depth: 12,
            min_samples_split: 8,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<Node>,
    pub n_features: usize,
    pub config: TreeConfig,
}

fn gini(counts: &[usize; N_CLASSES], total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let t = total as f64;
    1.0 - counts
        .iter()
        .map(|&c| {
            let p = c as f64 / t;
            p * p
        })
        .sum::<f64>()
}

impl DecisionTree {
    /// Grow a tree by greedy Gini-impurity splits. Fully deterministic:
    /// ties keep the first (lowest feature index, lowest threshold) split.
    pub fn train(features: &[Vec<f64>], labels: &[usize], config: TreeConfig) -> Result<Self> {
        if features.is_empty() || features.len() != labels.len() {
            return Err(Error::Config(
                "tree training needs matching, nonempty features and labels".into(),
            ));
        }
        let n_features = features[0].len();
        let mut tree = Self {
            nodes: Vec::new(),
            n_features,
            config,
        };
        let idx: Vec<usize> = (0..features.len()).collect();
        tree.grow(features, labels, idx, 0);
        Ok(tree)
    }

    fn leaf(&mut self, labels: &[usize], idx: &[usize]) -> usize {
        let mut counts = [0usize; N_CLASSES];
        for &i in idx {
            counts[labels[i]] += 1;
        }
        let total = idx.len().max(1) as f64;
        self.nodes.push(Node::Leaf {
            scores: counts.iter().map(|&c| c as f64 / total).collect(),
        });
        self.nodes.len() - 1
    }

    fn grow(
        &mut self,
        features: &[Vec<f64>],
        labels: &[usize],
        idx: Vec<usize>,
        depth: usize,
    ) -> usize {
        let mut counts = [0usize; N_CLASSES];
        for &i in &idx {
            counts[labels[i]] += 1;
        }
        let parent_gini = gini(&counts, idx.len());
        if depth >= self.config.max_depth
            || idx.len() < self.config.min_samples_split
            || parent_gini == 0.0
        {
            return self.leaf(labels, &idx);
        }

        let mut best: Option<(f64, usize, f64)> = None; // (impurity, feature, threshold)
        let mut order = idx.clone();
        for f in 0..self.n_features {
            order.sort_by(|&a, &b| {
                features[a][f]
                    .partial_cmp(&features[b][f])
                    .unwrap_or(std::cmp::Ordering::Equal)
            });
            let mut left = [0usize; N_CLASSES];
            let mut right = counts;
            for (pos, &i) in order.iter().enumerate().take(order.len() - 1) {
                left[labels[i]] += 1;
                right[labels[i]] -= 1;
                let v = features[i][f];
                let next = features[order[pos + 1]][f];
                if next <= v {
                    continue;
                }
                let nl = pos + 1;
                let nr = order.len() - nl;
                let w = (nl as f64 * gini(&left, nl) + nr as f64 * gini(&right, nr))
                    / order.len() as f64;
                if best.map_or(true, |(bw, _, _)| w < bw) {
                    best = Some((w, f, 0.5 * (v + next)));
                }
            }
        }

        let Some((w, feature, threshold)) = best else {
            return self.leaf(labels, &idx);
        };
        if w >= parent_gini - 1e-12 {
            return self.leaf(labels, &idx);
        }

        let (li, ri): (Vec<usize>, Vec<usize>) =
            idx.iter().partition(|&&i| features[i][feature] <= threshold);
        // Reserve the split slot before growing children.
        self.nodes.push(Node::Leaf { scores: vec![] });
        let slot = self.nodes.len() - 1;
        let left = self.grow(features, labels, li, depth + 1);
        let right = self.grow(features, labels, ri, depth + 1);
        self.nodes[slot] = Node::Split {
            feature,
            threshold,
            left,
            right,
        };
        slot
    }

    /// Per-class scores (leaf class proportions).
    pub fn scores(&self, features: &[f64]) -> Vec<f64> {
        let mut node = 0usize;
        loop {
            match &self.nodes[node] {
                Node::Leaf { scores } => return scores.clone(),
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    node = if features[*feature] <= *threshold {
                        *left
                    } else {
                        *right
                    };
                }
            }
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }
}
