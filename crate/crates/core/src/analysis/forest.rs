//! Random forest over binary (two-level) features with Gini mean decrease in
//! impurity.
//!
//! Trees are CART-style: each internal node splits one feature into its low
//! (0) and high (1) branch. Every tree is grown from a bootstrap resample on
//! its own derived seed, so the fitted forest does not depend on how trees
//! were scheduled.

use thiserror::Error;

use crate::experiments::Execution;
use crate::rng::{derive_seed, RngStream};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ForestError {
    #[error("need at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("{rows} feature rows but {labels} labels")]
    LabelCount { rows: usize, labels: usize },
    #[error("row {row} has {found} features, expected {expected}")]
    RaggedRow {
        row: usize,
        found: usize,
        expected: usize,
    },
    #[error("row {row}, feature {feature}: value {value} is not a 0/1 level")]
    NotBinary {
        row: usize,
        feature: usize,
        value: u8,
    },
    #[error("{names} feature names for {features} features")]
    NameCount { names: usize, features: usize },
    #[error("n_trees must be at least 1")]
    NoTrees,
    #[error("features_per_split must be in [1, {features}], got {requested}")]
    FeaturesPerSplit { requested: usize, features: usize },
}

/// Binary feature matrix with boolean labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    rows: Vec<Vec<u8>>,
    labels: Vec<bool>,
    names: Vec<String>,
}

impl Dataset {
    pub fn new(rows: Vec<Vec<u8>>, labels: Vec<bool>) -> Result<Self, ForestError> {
        if rows.len() != labels.len() {
            return Err(ForestError::LabelCount {
                rows: rows.len(),
                labels: labels.len(),
            });
        }
        if rows.len() < 2 {
            return Err(ForestError::TooFewSamples(rows.len()));
        }
        let width = rows[0].len();
        for (row, values) in rows.iter().enumerate() {
            if values.len() != width {
                return Err(ForestError::RaggedRow {
                    row,
                    found: values.len(),
                    expected: width,
                });
            }
            if let Some((feature, &value)) = values.iter().enumerate().find(|(_, &v)| v > 1) {
                return Err(ForestError::NotBinary {
                    row,
                    feature,
                    value,
                });
            }
        }
        let names = (0..width).map(|i| format!("x{i}")).collect();
        Ok(Self {
            rows,
            labels,
            names,
        })
    }

    pub fn with_names<S: Into<String>>(mut self, names: Vec<S>) -> Result<Self, ForestError> {
        if names.len() != self.n_features() {
            return Err(ForestError::NameCount {
                names: names.len(),
                features: self.n_features(),
            });
        }
        self.names = names.into_iter().map(Into::into).collect();
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.rows[0].len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn labels(&self) -> &[bool] {
        &self.labels
    }

    pub fn row(&self, i: usize) -> &[u8] {
        &self.rows[i]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForestConfig {
    pub n_trees: usize,
    /// `None` grows until leaves are pure or unsplittable.
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub features_per_split: usize,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self {
            n_trees: 200,
            max_depth: None,
            min_samples_split: 2,
            // ceil(sqrt(9))
            features_per_split: 3,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TreeNode {
    Leaf {
        /// Bootstrap-weighted counts of (false, true) labels.
        counts: [usize; 2],
    },
    Split {
        feature: usize,
        /// Child index for feature level 0.
        low: usize,
        /// Child index for feature level 1.
        high: usize,
        /// Parent Gini minus the size-weighted Gini of both children.
        impurity_decrease: f64,
        samples: usize,
    },
}

/// Node arena; the root is node 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    pub nodes: Vec<TreeNode>,
    /// Bootstrap sample size the tree was grown on.
    pub samples: usize,
}

impl Tree {
    pub fn predict(&self, row: &[u8]) -> bool {
        let mut node = 0;
        loop {
            match &self.nodes[node] {
                TreeNode::Leaf { counts } => return counts[1] > counts[0],
                TreeNode::Split {
                    feature, low, high, ..
                } => {
                    node = if row[*feature] == 0 { *low } else { *high };
                }
            }
        }
    }

    pub fn split_count(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, TreeNode::Split { .. }))
            .count()
    }

    /// Unnormalized mean decrease in impurity per feature.
    fn raw_importances(&self, n_features: usize) -> Vec<f64> {
        let mut out = vec![0.0; n_features];
        for node in &self.nodes {
            if let TreeNode::Split {
                feature,
                impurity_decrease,
                samples,
                ..
            } = node
            {
                out[*feature] += *samples as f64 / self.samples as f64 * impurity_decrease;
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Forest {
    pub trees: Vec<Tree>,
    names: Vec<String>,
}

impl Forest {
    pub fn n_features(&self) -> usize {
        self.names.len()
    }

    /// Majority vote; ties count as `false`.
    pub fn predict(&self, row: &[u8]) -> bool {
        let votes = self.trees.iter().filter(|t| t.predict(row)).count();
        2 * votes > self.trees.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImportanceReport {
    pub names: Vec<String>,
    pub importances: Vec<f64>,
    /// Feature indices by descending importance; ties keep feature order.
    pub ranking: Vec<usize>,
}

impl ImportanceReport {
    pub fn top(&self, n: usize) -> Vec<&str> {
        self.ranking
            .iter()
            .take(n)
            .map(|&i| self.names[i].as_str())
            .collect()
    }
}

/// Two-class Gini impurity `1 - p0^2 - p1^2`, written as `2 c0 c1 / n^2` so it
/// is exactly symmetric in the labels.
fn gini(c0: usize, c1: usize) -> f64 {
    let n = c0 + c1;
    if n == 0 {
        return 0.0;
    }
    2.0 * (c0 * c1) as f64 / (n * n) as f64
}

const MIN_GAIN: f64 = 1e-12;

struct Grower<'a> {
    data: &'a Dataset,
    cfg: &'a ForestConfig,
    rng: RngStream,
    nodes: Vec<TreeNode>,
}

impl Grower<'_> {
    fn counts(&self, idx: &[usize]) -> [usize; 2] {
        let positives = idx.iter().filter(|&&i| self.data.labels[i]).count();
        [idx.len() - positives, positives]
    }

    fn grow(&mut self, idx: Vec<usize>, depth: usize) -> usize {
        let counts = self.counts(&idx);
        let at_limit = self.cfg.max_depth.is_some_and(|d| depth >= d);
        if idx.len() < self.cfg.min_samples_split || at_limit || counts[0] == 0 || counts[1] == 0 {
            return self.push(TreeNode::Leaf { counts });
        }
        let Some((feature, impurity_decrease)) = self.best_split(&idx, counts) else {
            return self.push(TreeNode::Leaf { counts });
        };
        let samples = idx.len();
        let (low_idx, high_idx): (Vec<usize>, Vec<usize>) = idx
            .into_iter()
            .partition(|&i| self.data.rows[i][feature] == 0);
        let slot = self.push(TreeNode::Leaf { counts });
        let low = self.grow(low_idx, depth + 1);
        let high = self.grow(high_idx, depth + 1);
        self.nodes[slot] = TreeNode::Split {
            feature,
            low,
            high,
            impurity_decrease,
            samples,
        };
        slot
    }

    /// Draws features without replacement until `features_per_split`
    /// non-constant ones have been scored or none are left. Constant features
    /// do not count toward the budget.
    fn best_split(&mut self, idx: &[usize], counts: [usize; 2]) -> Option<(usize, f64)> {
        let n = idx.len();
        let parent = gini(counts[0], counts[1]);
        let mut pool: Vec<usize> = (0..self.data.n_features()).collect();
        let mut scored = 0;
        let mut best: Option<(usize, f64)> = None;
        while scored < self.cfg.features_per_split && !pool.is_empty() {
            let pick = self.rng.below(pool.len() as u64) as usize;
            let feature = pool.swap_remove(pick);
            // [level][label]
            let mut table = [[0usize; 2]; 2];
            for &i in idx {
                table[usize::from(self.data.rows[i][feature])][usize::from(self.data.labels[i])] +=
                    1;
            }
            let low_n = table[0][0] + table[0][1];
            let high_n = table[1][0] + table[1][1];
            if low_n == 0 || high_n == 0 {
                continue;
            }
            scored += 1;
            let decrease = parent
                - low_n as f64 / n as f64 * gini(table[0][0], table[0][1])
                - high_n as f64 / n as f64 * gini(table[1][0], table[1][1]);
            if best.is_none_or(|(_, d)| decrease > d) {
                best = Some((feature, decrease));
            }
        }
        best.filter(|&(_, d)| d > MIN_GAIN)
    }

    fn push(&mut self, node: TreeNode) -> usize {
        self.nodes.push(node);
        self.nodes.len() - 1
    }
}

fn grow_tree(data: &Dataset, cfg: &ForestConfig, tree_index: usize) -> Tree {
    let mut rng = RngStream::new(derive_seed(cfg.seed, tree_index as u64, 0));
    let n = data.len();
    let bootstrap: Vec<usize> = (0..n).map(|_| rng.below(n as u64) as usize).collect();
    let mut grower = Grower {
        data,
        cfg,
        rng,
        nodes: Vec::new(),
    };
    grower.grow(bootstrap, 0);
    Tree {
        nodes: grower.nodes,
        samples: n,
    }
}

pub fn fit_forest(data: &Dataset, cfg: &ForestConfig) -> Result<Forest, ForestError> {
    fit_forest_with(data, cfg, Execution::Parallel { workers: 0 })
}

pub fn fit_forest_with(
    data: &Dataset,
    cfg: &ForestConfig,
    execution: Execution,
) -> Result<Forest, ForestError> {
    if cfg.n_trees == 0 {
        return Err(ForestError::NoTrees);
    }
    if cfg.features_per_split == 0 || cfg.features_per_split > data.n_features() {
        return Err(ForestError::FeaturesPerSplit {
            requested: cfg.features_per_split,
            features: data.n_features(),
        });
    }
    let indices: Vec<usize> = (0..cfg.n_trees).collect();
    let trees = execution.map(&indices, |&t| grow_tree(data, cfg, t));
    Ok(Forest {
        trees,
        names: data.names.clone(),
    })
}

/// Per-feature mean decrease in impurity averaged over trees, normalized to
/// sum to 1. Stays all-zero when no tree split.
pub fn gini_importances(forest: &Forest) -> ImportanceReport {
    let p = forest.n_features();
    let mut importances = vec![0.0; p];
    for tree in &forest.trees {
        for (acc, v) in importances.iter_mut().zip(tree.raw_importances(p)) {
            *acc += v;
        }
    }
    for v in &mut importances {
        *v /= forest.trees.len() as f64;
    }
    let total: f64 = importances.iter().sum();
    if total > 0.0 {
        for v in &mut importances {
            *v /= total;
        }
    }
    let mut ranking: Vec<usize> = (0..p).collect();
    ranking.sort_by(|&a, &b| importances[b].total_cmp(&importances[a]).then(a.cmp(&b)));
    ImportanceReport {
        names: forest.names.clone(),
        importances,
        ranking,
    }
}
