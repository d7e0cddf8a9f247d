use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::Training;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RfConfig {
    pub n_trees: usize,
    /// Attributes tried per split; `max(1, floor(sqrt(d)))` when unset.
    pub max_features: Option<usize>,
    pub min_samples_leaf: usize,
    pub max_depth: Option<usize>,
    pub bootstrap: bool,
}

impl Default for RfConfig {
    fn default() -> Self {
        RfConfig {
            n_trees: 100,
            max_features: None,
            min_samples_leaf: 1,
            max_depth: None,
            bootstrap: true,
        }
    }
}

impl RfConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::Config("rf.n_trees must be >= 1".into()));
        }
        if self.max_features == Some(0) {
            return Err(Error::Config("rf.max_features must be >= 1".into()));
        }
        if self.min_samples_leaf == 0 {
            return Err(Error::Config("rf.min_samples_leaf must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "lowercase")]
pub enum Node {
    Leaf {
        asd_fraction: f64,
    },
    /// Rows with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn leaf_fraction(&self, x: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { asd_fraction } => return asd_fraction,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if x[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn votes_asd(&self, x: &[f64]) -> bool {
        self.leaf_fraction(x) >= 0.5
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    pub trees: Vec<Tree>,
    pub max_features: usize,
}

struct Split {
    feature: usize,
    threshold: f64,
    impurity: f64,
}

fn gini(pos: usize, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let p = pos as f64 / n as f64;
    2.0 * p * (1.0 - p)
}

fn best_split_on(data: &Training, idx: &[usize], feature: usize, min_leaf: usize) -> Option<Split> {
    let mut vals: Vec<(f64, bool)> = idx
        .iter()
        .map(|&i| (data.x[i][feature], data.y[i] > 0.0))
        .collect();
    vals.sort_by(|a, b| a.0.total_cmp(&b.0));
    let n = vals.len();
    let total_pos = vals.iter().filter(|v| v.1).count();
    let mut left_pos = 0;
    let mut best: Option<Split> = None;
    for i in 1..n {
        left_pos += usize::from(vals[i - 1].1);
        if vals[i].0 <= vals[i - 1].0 || i < min_leaf || n - i < min_leaf {
            continue;
        }
        let impurity = (i as f64 * gini(left_pos, i)
            + (n - i) as f64 * gini(total_pos - left_pos, n - i))
            / n as f64;
        if best.as_ref().is_none_or(|b| impurity < b.impurity) {
            let (lo, hi) = (vals[i - 1].0, vals[i].0);
            let mid = lo + (hi - lo) / 2.0;
            best = Some(Split {
                feature,
                threshold: if mid < hi { mid } else { lo },
                impurity,
            });
        }
    }
    best
}

fn grow(
    data: &Training,
    sample: Vec<usize>,
    cfg: &RfConfig,
    m: usize,
    rng: &mut ChaCha8Rng,
) -> Tree {
    let d = data.x[0].len();
    let mut nodes = vec![Node::Leaf { asd_fraction: 0.0 }];
    let mut stack = vec![(0usize, sample, 0usize)];
    let mut features: Vec<usize> = (0..d).collect();
    while let Some((slot, idx, depth)) = stack.pop() {
        let n = idx.len();
        let pos = idx.iter().filter(|&&i| data.y[i] > 0.0).count();
        let leaf = Node::Leaf {
            asd_fraction: pos as f64 / n as f64,
        };
        if pos == 0
            || pos == n
            || n < 2 * cfg.min_samples_leaf
            || cfg.max_depth.is_some_and(|md| depth >= md)
        {
            nodes[slot] = leaf;
            continue;
        }
        // Constant attributes are skipped without using up the per-split budget.
        features.shuffle(rng);
        let mut tried = 0;
        let mut best: Option<Split> = None;
        for &f in &features {
            if tried >= m {
                break;
            }
            let first = data.x[idx[0]][f];
            if idx.iter().all(|&i| data.x[i][f] == first) {
                continue;
            }
            tried += 1;
            if let Some(s) = best_split_on(data, &idx, f, cfg.min_samples_leaf) {
                if best.as_ref().is_none_or(|b| s.impurity < b.impurity) {
                    best = Some(s);
                }
            }
        }
        let Some(split) = best else {
            nodes[slot] = leaf;
            continue;
        };
        let (l, r): (Vec<usize>, Vec<usize>) = idx
            .iter()
            .partition(|&&i| data.x[i][split.feature] <= split.threshold);
        let left = nodes.len();
        nodes.push(Node::Leaf { asd_fraction: 0.0 });
        let right = nodes.len();
        nodes.push(Node::Leaf { asd_fraction: 0.0 });
        nodes[slot] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
        };
        stack.push((right, r, depth + 1));
        stack.push((left, l, depth + 1));
    }
    Tree { nodes }
}

impl RandomForest {
    /// Tree `t` draws from ChaCha8 seeded with `seed` on stream `t`, so the
    /// ensemble does not depend on how trees are scheduled across threads.
    pub(crate) fn fit(data: &Training, cfg: &RfConfig, seed: u64) -> Self {
        let n = data.x.len();
        let d = data.x[0].len();
        let m = cfg
            .max_features
            .unwrap_or_else(|| ((d as f64).sqrt().floor() as usize).max(1))
            .min(d);
        let trees = (0..cfg.n_trees)
            .into_par_iter()
            .map(|t| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(t as u64);
                let sample: Vec<usize> = if cfg.bootstrap {
                    (0..n).map(|_| rng.random_range(0..n)).collect()
                } else {
                    (0..n).collect()
                };
                grow(data, sample, cfg, m, &mut rng)
            })
            .collect();
        RandomForest {
            trees,
            max_features: m,
        }
    }

    pub fn vote_fraction(&self, x: &[f64]) -> f64 {
        self.trees.iter().filter(|t| t.votes_asd(x)).count() as f64 / self.trees.len() as f64
    }
}
