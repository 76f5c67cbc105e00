//! Binary random forest (paper vs. non-paper), information-gain feature
//! ranking and classifier evaluation.
//!
//! Label `true` is the positive ("paper") class throughout.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::doc::StructuralFeatures;
use crate::error::{Error, Result};

pub const FOREST_FORMAT_VERSION: u32 = 1;

const GINI_EPS: f64 = 1e-12;

impl AsRef<[f64]> for StructuralFeatures {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestConfig {
    pub n_trees: usize,
    /// `None` grows until leaves are pure or too small to split.
    pub max_depth: Option<usize>,
    /// Features sampled per split; `None` means ⌈√d⌉.
    pub mtry: Option<usize>,
    pub min_leaf_size: usize,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_depth: None,
            mtry: None,
            min_leaf_size: 1,
            bootstrap: true,
            seed: 7,
        }
    }
}

impl ForestConfig {
    /// One unsampled tree over all features: a plain greedy decision tree.
    pub fn single_tree() -> Self {
        Self {
            n_trees: 1,
            mtry: Some(usize::MAX),
            bootstrap: false,
            ..Self::default()
        }
    }

    fn resolved_mtry(&self, dim: usize) -> usize {
        match self.mtry {
            Some(m) => m.clamp(1, dim),
            None => ((dim as f64).sqrt().ceil() as usize).clamp(1, dim),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    /// `[non_paper, paper]` training counts.
    Leaf { counts: [u32; 2] },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    /// Node 0 is the root.
    pub nodes: Vec<Node>,
}

impl DecisionTree {
    fn leaf_for(&self, x: &[f64]) -> [u32; 2] {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if x[*feature] <= *threshold { *left } else { *right },
                Node::Leaf { counts } => return *counts,
            }
        }
    }

    /// Majority vote of the reached leaf; ties vote paper.
    pub fn vote(&self, x: &[f64]) -> bool {
        let [neg, pos] = self.leaf_for(x);
        pos >= neg
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[Node], i: usize) -> usize {
            match &nodes[i] {
                Node::Split { left, right, .. } => 1 + go(nodes, *left).max(go(nodes, *right)),
                Node::Leaf { .. } => 0,
            }
        }
        go(&self.nodes, 0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForestModel {
    pub format_version: u32,
    pub dim: usize,
    pub config: ForestConfig,
    pub trees: Vec<DecisionTree>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub is_paper: bool,
    /// Fraction of trees voting paper.
    pub score: f64,
}

impl RandomForestModel {
    pub fn predict(&self, x: &[f64]) -> Result<Prediction> {
        if x.len() != self.dim {
            return Err(Error::invalid(format!(
                "feature vector has {} dimensions, model expects {}",
                x.len(),
                self.dim
            )));
        }
        let votes = self.trees.iter().filter(|t| t.vote(x)).count();
        let score = votes as f64 / self.trees.len() as f64;
        Ok(Prediction {
            is_paper: score >= 0.5,
            score,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let model: Self = serde_json::from_str(s)?;
        if model.format_version != FOREST_FORMAT_VERSION {
            return Err(Error::FormatVersion {
                found: model.format_version,
                expected: FOREST_FORMAT_VERSION,
            });
        }
        Ok(model)
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

fn gini_mass(neg: usize, pos: usize) -> f64 {
    let n = (neg + pos) as f64;
    if n == 0.0 {
        return 0.0;
    }
    let (p, q) = (pos as f64 / n, neg as f64 / n);
    n * (1.0 - p * p - q * q)
}

struct Builder<'a, X: AsRef<[f64]>> {
    x: &'a [X],
    y: &'a [bool],
    config: &'a ForestConfig,
    mtry: usize,
    dim: usize,
    nodes: Vec<Node>,
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    impurity: f64,
}

impl<X: AsRef<[f64]>> Builder<'_, X> {
    fn counts(&self, idx: &[usize]) -> [u32; 2] {
        let pos = idx.iter().filter(|&&i| self.y[i]).count();
        [(idx.len() - pos) as u32, pos as u32]
    }

    fn best_split_on(&self, idx: &[usize], feature: usize) -> Option<BestSplit> {
        let mut sorted: Vec<(f64, bool)> = idx
            .iter()
            .map(|&i| (self.x[i].as_ref()[feature], self.y[i]))
            .collect();
        sorted.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal));
        let total_pos = sorted.iter().filter(|s| s.1).count();
        let n = sorted.len();
        let min_leaf = self.config.min_leaf_size.max(1);
        let mut best: Option<BestSplit> = None;
        let (mut left_n, mut left_pos) = (0usize, 0usize);
        for k in 0..n - 1 {
            left_n += 1;
            left_pos += usize::from(sorted[k].1);
            let (a, b) = (sorted[k].0, sorted[k + 1].0);
            if a == b || left_n < min_leaf || n - left_n < min_leaf {
                continue;
            }
            let impurity = gini_mass(left_n - left_pos, left_pos)
                + gini_mass(n - left_n - (total_pos - left_pos), total_pos - left_pos);
            if best.as_ref().is_none_or(|b| impurity < b.impurity - GINI_EPS) {
                let mut threshold = a + (b - a) / 2.0;
                if threshold >= b {
                    threshold = a;
                }
                best = Some(BestSplit {
                    feature,
                    threshold,
                    impurity,
                });
            }
        }
        best
    }

    fn grow(&mut self, idx: Vec<usize>, depth: usize, rng: &mut ChaCha8Rng) -> usize {
        let counts = self.counts(&idx);
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf { counts });
        let pure = counts[0] == 0 || counts[1] == 0;
        let depth_capped = self.config.max_depth.is_some_and(|d| depth >= d);
        if pure || depth_capped || idx.len() < 2 * self.config.min_leaf_size.max(1) {
            return id;
        }

        let mut order: Vec<usize> = (0..self.dim).collect();
        if self.mtry < self.dim {
            order.shuffle(rng);
        }
        let mut best: Option<BestSplit> = None;
        let mut start = 0;
        while best.is_none() && start < self.dim {
            let end = if start == 0 { self.mtry } else { self.dim };
            let mut batch = order[start..end].to_vec();
            batch.sort_unstable();
            for f in batch {
                if let Some(cand) = self.best_split_on(&idx, f) {
                    if best.as_ref().is_none_or(|b| cand.impurity < b.impurity - GINI_EPS) {
                        best = Some(cand);
                    }
                }
            }
            start = end;
        }
        let Some(best) = best else { return id };

        let (left, right): (Vec<usize>, Vec<usize>) = idx
            .iter()
            .partition(|&&i| self.x[i].as_ref()[best.feature] <= best.threshold);
        let l = self.grow(left, depth + 1, rng);
        let r = self.grow(right, depth + 1, rng);
        self.nodes[id] = Node::Split {
            feature: best.feature,
            threshold: best.threshold,
            left: l,
            right: r,
        };
        id
    }
}

fn check_dataset<X: AsRef<[f64]>>(x: &[X], y: &[bool]) -> Result<usize> {
    if x.len() != y.len() {
        return Err(Error::invalid(format!("{} rows but {} labels", x.len(), y.len())));
    }
    if x.len() < 2 {
        return Err(Error::invalid("need at least two rows"));
    }
    let dim = x[0].as_ref().len();
    if dim == 0 || x.iter().any(|r| r.as_ref().len() != dim) {
        return Err(Error::invalid("rows must share a non-zero dimension"));
    }
    if x.iter().any(|r| r.as_ref().iter().any(|v| v.is_nan())) {
        return Err(Error::invalid("feature values must not be NaN"));
    }
    Ok(dim)
}

/// Trains `config.n_trees` trees in parallel. Tree `t` draws its bootstrap
/// sample and feature subsets from stream `t` of a generator seeded with
/// `config.seed`, so the model does not depend on thread scheduling.
pub fn train_forest<X: AsRef<[f64]> + Sync>(x: &[X], y: &[bool], config: &ForestConfig) -> Result<RandomForestModel> {
    let dim = check_dataset(x, y)?;
    if y.iter().all(|&v| v) || y.iter().all(|&v| !v) {
        return Err(Error::DegenerateTraining("training labels contain a single class".into()));
    }
    if config.n_trees == 0 {
        return Err(Error::invalid("n_trees must be at least 1"));
    }
    let mtry = config.resolved_mtry(dim);
    let n = x.len();
    let trees = (0..config.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(t as u64);
            let idx: Vec<usize> = if config.bootstrap {
                (0..n).map(|_| rng.gen_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            let mut b = Builder {
                x,
                y,
                config,
                mtry,
                dim,
                nodes: Vec::new(),
            };
            b.grow(idx, 0, &mut rng);
            DecisionTree { nodes: b.nodes }
        })
        .collect();
    Ok(RandomForestModel {
        format_version: FOREST_FORMAT_VERSION,
        dim,
        config: *config,
        trees,
    })
}

fn entropy(counts: &[usize]) -> f64 {
    let n: usize = counts.iter().sum();
    if n == 0 {
        return 0.0;
    }
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n as f64;
            -p * p.log2()
        })
        .sum()
}

pub fn label_entropy(labels: &[bool]) -> f64 {
    let pos = labels.iter().filter(|&&l| l).count();
    entropy(&[labels.len() - pos, pos])
}

/// `H(Y) − Σ_v P(v)·H(Y | v)` in bits over the distinct values of a
/// discrete column.
pub fn info_gain(values: &[f64], labels: &[bool]) -> Result<f64> {
    if values.len() != labels.len() || values.is_empty() {
        return Err(Error::invalid(format!(
            "info_gain needs equal non-empty lengths, got {} and {}",
            values.len(),
            labels.len()
        )));
    }
    let mut groups: BTreeMap<u64, [usize; 2]> = BTreeMap::new();
    for (&v, &l) in values.iter().zip(labels) {
        let key = if v == 0.0 { 0.0f64.to_bits() } else { v.to_bits() };
        groups.entry(key).or_default()[usize::from(l)] += 1;
    }
    let n = values.len() as f64;
    let conditional: f64 = groups
        .values()
        .map(|c| (c[0] + c[1]) as f64 / n * entropy(c))
        .sum();
    Ok((label_entropy(labels) - conditional).max(0.0))
}

/// Binary columns become `value == max`; other columns are split at the
/// median. Values equal to the median join whichever side leaves the two
/// halves closer in size (the upper half on a tie), so heavily tied
/// columns do not collapse to a constant.
pub fn binarize_column(column: &[f64]) -> Vec<f64> {
    let mut sorted = column.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    sorted.dedup();
    let flag = |b: bool| if b { 1.0 } else { 0.0 };
    if sorted.len() <= 2 {
        let max = sorted.last().copied().unwrap_or(0.0);
        return column.iter().map(|&v| flag(v == max)).collect();
    }
    let mut all = column.to_vec();
    all.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    let m = all.len();
    let median = if m % 2 == 1 {
        all[m / 2]
    } else {
        (all[m / 2 - 1] + all[m / 2]) / 2.0
    };
    let above = column.iter().filter(|&&v| v > median).count();
    let at = column.iter().filter(|&&v| v == median).count();
    let imbalance = |upper: usize| upper.abs_diff(m - upper);
    if at > 0 && imbalance(above + at) <= imbalance(above) {
        column.iter().map(|&v| flag(v >= median)).collect()
    } else {
        column.iter().map(|&v| flag(v > median)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureGain {
    pub feature: String,
    pub gain: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfoGainReport {
    pub label_entropy: f64,
    pub ranked: Vec<FeatureGain>,
}

impl InfoGainReport {
    pub fn position(&self, feature: &str) -> Option<usize> {
        self.ranked.iter().position(|g| g.feature == feature)
    }

    pub fn top(&self, k: usize) -> &[FeatureGain] {
        &self.ranked[..k.min(self.ranked.len())]
    }
}

/// Ranks features by the information gain of their binarized columns.
/// `column(j)` returns the raw values of feature `j` for every row.
pub fn rank_features_by<F>(names: &[String], labels: &[bool], column: F) -> Result<InfoGainReport>
where
    F: Fn(usize) -> Vec<f64> + Sync,
{
    let mut ranked = (0..names.len())
        .into_par_iter()
        .map(|j| {
            let gain = info_gain(&binarize_column(&column(j)), labels)?;
            Ok(FeatureGain {
                feature: names[j].clone(),
                gain,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    ranked.sort_by(|a, b| {
        b.gain
            .partial_cmp(&a.gain)
            .unwrap_or(Ordering::Equal)
            .then_with(|| a.feature.cmp(&b.feature))
    });
    Ok(InfoGainReport {
        label_entropy: label_entropy(labels),
        ranked,
    })
}

pub fn rank_features<X: AsRef<[f64]> + Sync>(rows: &[X], labels: &[bool], names: &[String]) -> Result<InfoGainReport> {
    if rows.len() != labels.len() || rows.is_empty() {
        return Err(Error::invalid("rank_features needs one label per row"));
    }
    if rows.iter().any(|r| r.as_ref().len() != names.len()) {
        return Err(Error::invalid("every row needs one value per feature name"));
    }
    rank_features_by(names, labels, |j| rows.iter().map(|r| r.as_ref()[j]).collect())
}

/// Ranking over sparse rows; absent entries are zero.
pub fn rank_sparse_features(
    rows: &[crate::features::SparseVector],
    labels: &[bool],
    names: &[String],
) -> Result<InfoGainReport> {
    if rows.len() != labels.len() || rows.is_empty() {
        return Err(Error::invalid("rank_features needs one label per row"));
    }
    let mut columns: Vec<Vec<(usize, f64)>> = vec![Vec::new(); names.len()];
    for (r, row) in rows.iter().enumerate() {
        for (j, v) in row.iter() {
            if j >= names.len() {
                return Err(Error::invalid(format!("feature index {j} has no name")));
            }
            columns[j].push((r, v));
        }
    }
    rank_features_by(names, labels, |j| {
        let mut dense = vec![0.0; rows.len()];
        for &(r, v) in &columns[j] {
            dense[r] = v;
        }
        dense
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub true_positive: usize,
    pub false_positive: usize,
    pub false_negative: usize,
    pub true_negative: usize,
}

impl Confusion {
    pub fn from_pairs(pairs: impl IntoIterator<Item = (bool, bool)>) -> Self {
        let mut c = Self::default();
        for (actual, predicted) in pairs {
            match (actual, predicted) {
                (true, true) => c.true_positive += 1,
                (false, true) => c.false_positive += 1,
                (true, false) => c.false_negative += 1,
                (false, false) => c.true_negative += 1,
            }
        }
        c
    }

    pub fn total(&self) -> usize {
        self.true_positive + self.false_positive + self.false_negative + self.true_negative
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

impl ClassMetrics {
    fn from_counts(tp: usize, fp: usize, fn_: usize) -> Self {
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Self {
            precision,
            recall,
            f1,
            support: tp + fn_,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierEvalReport {
    pub confusion: Confusion,
    pub paper: ClassMetrics,
    pub non_paper: ClassMetrics,
    pub weighted: ClassMetrics,
    pub accuracy: f64,
}

impl ClassifierEvalReport {
    pub fn from_confusion(c: Confusion) -> Self {
        let paper = ClassMetrics::from_counts(c.true_positive, c.false_positive, c.false_negative);
        let non_paper = ClassMetrics::from_counts(c.true_negative, c.false_negative, c.false_positive);
        let n = c.total();
        let w = |f: fn(&ClassMetrics) -> f64| {
            if n == 0 {
                0.0
            } else {
                (f(&paper) * paper.support as f64 + f(&non_paper) * non_paper.support as f64) / n as f64
            }
        };
        let weighted = ClassMetrics {
            precision: w(|m| m.precision),
            recall: w(|m| m.recall),
            f1: w(|m| m.f1),
            support: n,
        };
        let accuracy = if n == 0 {
            0.0
        } else {
            (c.true_positive + c.true_negative) as f64 / n as f64
        };
        Self {
            confusion: c,
            paper,
            non_paper,
            weighted,
            accuracy,
        }
    }
}

pub fn evaluate_classifier<X: AsRef<[f64]>>(
    model: &RandomForestModel,
    x: &[X],
    y: &[bool],
) -> Result<ClassifierEvalReport> {
    if x.is_empty() || x.len() != y.len() {
        return Err(Error::invalid("test set must be non-empty with one label per row"));
    }
    let predicted = x
        .iter()
        .map(|r| model.predict(r.as_ref()).map(|p| p.is_paper))
        .collect::<Result<Vec<_>>>()?;
    Ok(ClassifierEvalReport::from_confusion(Confusion::from_pairs(
        y.iter().copied().zip(predicted),
    )))
}

/// Seeded stratified split: `test_fraction` of each class goes to the test
/// side. Returns `(train_indices, test_indices)`, each sorted.
pub fn stratified_split(labels: &[bool], test_fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for class in [false, true] {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        idx.shuffle(&mut rng);
        let n_test = (idx.len() as f64 * test_fraction).round() as usize;
        test.extend_from_slice(&idx[..n_test]);
        train.extend_from_slice(&idx[n_test..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    (train, test)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn leaf(neg: u32, pos: u32) -> DecisionTree {
        DecisionTree {
            nodes: vec![Node::Leaf { counts: [neg, pos] }],
        }
    }

    fn model(trees: Vec<DecisionTree>) -> RandomForestModel {
        RandomForestModel {
            format_version: FOREST_FORMAT_VERSION,
            dim: 1,
            config: ForestConfig::default(),
            trees,
        }
    }

    #[test]
    fn vote_counting() {
        let m = model(vec![leaf(0, 3), leaf(1, 2), leaf(4, 0)]);
        let p = m.predict(&[0.0]).unwrap();
        assert!(p.is_paper);
        assert!((p.score - 2.0 / 3.0).abs() < 1e-15);

        let p = model(vec![leaf(0, 1), leaf(1, 0)]).predict(&[0.0]).unwrap();
        assert_eq!((p.is_paper, p.score), (true, 0.5));

        let p = model(vec![leaf(2, 1)]).predict(&[0.0]).unwrap();
        assert_eq!(p.score, 0.0);
        assert!(matches!(m.predict(&[0.0, 1.0]), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn single_class_is_degenerate() {
        let x = vec![vec![0.0], vec![1.0]];
        assert!(matches!(
            train_forest(&x, &[true, true], &ForestConfig::default()),
            Err(Error::DegenerateTraining(_))
        ));
    }

    #[test]
    fn one_dimensional_single_split() {
        let x: Vec<Vec<f64>> = [1.0, 2.0, 3.0, 10.0, 11.0, 12.0].iter().map(|&v| vec![v]).collect();
        let y = [false, false, false, true, true, true];
        let m = train_forest(&x, &y, &ForestConfig::single_tree()).unwrap();
        assert_eq!(
            m.trees[0].nodes,
            vec![
                Node::Split { feature: 0, threshold: 6.5, left: 1, right: 2 },
                Node::Leaf { counts: [3, 0] },
                Node::Leaf { counts: [0, 3] },
            ]
        );
    }

    #[test]
    fn xor_needs_zero_gain_root() {
        let x = vec![vec![0.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0], vec![1.0, 1.0]];
        let y = [false, true, true, false];
        let m = train_forest(&x, &y, &ForestConfig::single_tree()).unwrap();
        for (r, &l) in x.iter().zip(&y) {
            assert_eq!(m.predict(r).unwrap().is_paper, l);
        }
        assert_eq!(m.trees[0].depth(), 2);
    }

    #[test]
    fn depth_and_leaf_size_limits() {
        let x: Vec<Vec<f64>> = (0..8).map(|v| vec![v as f64]).collect();
        let y = [false, true, false, true, false, true, false, true];
        let shallow = ForestConfig {
            max_depth: Some(1),
            ..ForestConfig::single_tree()
        };
        assert_eq!(train_forest(&x, &y, &shallow).unwrap().trees[0].depth(), 1);
        let fat = ForestConfig {
            min_leaf_size: 3,
            ..ForestConfig::single_tree()
        };
        for n in &train_forest(&x, &y, &fat).unwrap().trees[0].nodes {
            if let Node::Leaf { counts } = n {
                assert!(counts[0] + counts[1] >= 3);
            }
        }
    }

    #[test]
    fn seeded_determinism() {
        let x: Vec<Vec<f64>> = (0..40).map(|i| vec![(i % 7) as f64, (i * 13 % 11) as f64, i as f64]).collect();
        let y: Vec<bool> = (0..40).map(|i| (i * 13 % 11) > 4).collect();
        let cfg = ForestConfig { n_trees: 15, ..Default::default() };
        let a = train_forest(&x, &y, &cfg).unwrap();
        let b = train_forest(&x, &y, &cfg).unwrap();
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
        assert_eq!(RandomForestModel::from_json(&a.to_json().unwrap()).unwrap(), a);
        assert_eq!(a.trees.len(), 15);
    }

    #[test]
    fn info_gain_examples() {
        let y = [true, true, false, false];
        assert_eq!(info_gain(&[1.0, 1.0, 0.0, 0.0], &y).unwrap(), 1.0);
        assert_eq!(info_gain(&[5.0; 4], &y).unwrap(), 0.0);
        assert_eq!(info_gain(&[1.0, 0.0, 1.0, 0.0], &y).unwrap(), 0.0);
        assert!(info_gain(&[1.0], &y).is_err());
    }

    #[test]
    fn binarization() {
        assert_eq!(binarize_column(&[1.0, 1.0, 0.0, 1.0]), vec![1.0, 1.0, 0.0, 1.0]);
        assert_eq!(binarize_column(&[0.1, 0.5, 0.9, 0.3]), vec![0.0, 1.0, 1.0, 0.0]);
    }

    #[test]
    fn ranking_order_and_ties() {
        let rows = vec![vec![1.0, 0.0, 1.0], vec![1.0, 1.0, 1.0], vec![0.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]];
        let y = [true, true, false, false];
        let names: Vec<String> = ["b_copy", "noise", "a_pred"].iter().map(|s| s.to_string()).collect();
        let r = rank_features(&rows, &y, &names).unwrap();
        assert_eq!(r.ranked[0].feature, "a_pred");
        assert_eq!(r.ranked[1].feature, "b_copy");
        assert_eq!(r.ranked[0].gain, r.ranked[1].gain);
        assert_eq!(r.ranked[2].gain, 0.0);
    }

    #[test]
    fn eval_reports() {
        let perfect = ClassifierEvalReport::from_confusion(Confusion::from_pairs([(true, true), (false, false)]));
        assert_eq!(perfect.weighted.f1, 1.0);
        assert_eq!(perfect.paper.f1, 1.0);

        let all_paper =
            ClassifierEvalReport::from_confusion(Confusion::from_pairs((0..10).map(|i| (i % 2 == 0, true))));
        assert_eq!(all_paper.paper.recall, 1.0);
        assert_eq!(all_paper.paper.precision, 0.5);
        assert_eq!(all_paper.confusion.total(), 10);
    }

    #[test]
    fn stratified_split_keeps_proportions() {
        let y: Vec<bool> = (0..100).map(|i| i < 40).collect();
        let (train, test) = stratified_split(&y, 0.25, 3);
        assert_eq!(test.len(), 25);
        assert_eq!(test.iter().filter(|&&i| y[i]).count(), 10);
        assert_eq!(train.len() + test.len(), 100);
    }
}
