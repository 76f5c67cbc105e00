//! Homepage ranking models.
//!
//! [`train_rank_svm`] learns a linear scoring function from preference
//! pairs by minimizing the pairwise hinge objective
//!
//! ```text
//! (1/|P|) Σ max(0, 1 − w·(x_pref − x_other)) + λ‖w‖²
//! ```
//!
//! with seeded stochastic subgradient descent. The pointwise baselines
//! (Bernoulli naive Bayes, logistic regression, binary linear SVM) treat every
//! result independently; when used as rankers their decision value plays the
//! role of the score. Prediction is per query: the top-scoring result is the
//! predicted homepage, ties going to the better original search rank.

use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{
    build_dictionaries, build_preference_pairs, vectorize, DictionaryConfig, FeatureDictionaries, Label,
    LabeledPage, PreferencePair, RankInstance, SparseVector,
};
use crate::search::{ResultPage, SearchResult};

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    /// L2 penalty; corresponds to an SVM `C` of `1/λ`.
    pub lambda: f64,
    pub seed: u64,
    pub shuffle: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 30,
            learning_rate: 0.05,
            lambda: 1e-4,
            seed: 7,
            shuffle: true,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::invalid("epochs must be at least 1"));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::invalid("learning_rate must be positive"));
        }
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(Error::invalid("lambda must be non-negative"));
        }
        if 2.0 * self.learning_rate * self.lambda >= 1.0 {
            return Err(Error::invalid("learning_rate * lambda too large for stable decay"));
        }
        Ok(())
    }
}

/// Anything that assigns a real-valued score to a feature vector.
pub trait Scorer {
    fn score(&self, x: &SparseVector) -> f64;
}

/// Weight vector `w = scale · raw`, so that L2 decay is O(1) per step.
struct ScaledWeights {
    raw: Vec<f64>,
    scale: f64,
}

impl ScaledWeights {
    fn new(dim: usize) -> Self {
        Self {
            raw: vec![0.0; dim],
            scale: 1.0,
        }
    }

    fn dot(&self, x: &SparseVector) -> f64 {
        self.scale * x.dot(&self.raw)
    }

    fn decay(&mut self, factor: f64) {
        self.scale *= factor;
        if self.scale < 1e-9 {
            self.fold();
        }
    }

    fn add(&mut self, x: &SparseVector, step: f64) {
        let s = step / self.scale;
        for (i, v) in x.iter() {
            self.raw[i] += s * v;
        }
    }

    fn fold(&mut self) {
        for w in &mut self.raw {
            *w *= self.scale;
        }
        self.scale = 1.0;
    }

    fn into_vec(mut self) -> Vec<f64> {
        self.fold();
        self.raw
    }
}

fn sparse_diff(a: &SparseVector, b: &SparseVector) -> SparseVector {
    let mut pairs: Vec<(u32, f64)> = a.iter().map(|(i, v)| (i as u32, v)).collect();
    for (i, v) in b.iter() {
        match pairs.iter_mut().find(|p| p.0 as usize == i) {
            Some(p) => p.1 -= v,
            None => pairs.push((i as u32, -v)),
        }
    }
    SparseVector::from_pairs(pairs)
}

fn check_dim(x: &SparseVector, dim: usize) -> Result<()> {
    match x.max_index() {
        Some(i) if i >= dim => Err(Error::invalid(format!("feature index {i} outside dimension {dim}"))),
        _ => Ok(()),
    }
}

fn epoch_order(n: usize, rng: &mut ChaCha8Rng, shuffle: bool) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    if shuffle {
        order.shuffle(rng);
    }
    order
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearRankModel {
    pub weights: Vec<f64>,
    pub config: TrainConfig,
}

#[derive(Serialize, Deserialize)]
struct LinearRankModelFile {
    format_version: u32,
    dim: usize,
    weights: Vec<f64>,
    config: TrainConfig,
}

impl Serialize for LinearRankModel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        LinearRankModelFile {
            format_version: MODEL_FORMAT_VERSION,
            dim: self.weights.len(),
            weights: self.weights.clone(),
            config: self.config,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for LinearRankModel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let f = LinearRankModelFile::deserialize(d)?;
        if f.format_version != MODEL_FORMAT_VERSION {
            return Err(D::Error::custom(format!("unsupported model format version {}", f.format_version)));
        }
        if f.weights.len() != f.dim {
            return Err(D::Error::custom("weights length does not match dim"));
        }
        if f.weights.iter().any(|w| !w.is_finite()) {
            return Err(D::Error::custom("non-finite weight"));
        }
        Ok(LinearRankModel {
            weights: f.weights,
            config: f.config,
        })
    }
}

impl LinearRankModel {
    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    /// Pairs whose preferred side does not score strictly higher.
    pub fn violated_pairs(&self, pairs: &[PreferencePair]) -> usize {
        pairs
            .iter()
            .filter(|p| self.score(&p.preferred.vector) <= self.score(&p.other.vector))
            .count()
    }

    /// Mean of `max(0, 1 − w·(x_pref − x_other))`.
    pub fn mean_hinge(&self, pairs: &[PreferencePair]) -> f64 {
        mean_pair_hinge(pairs, |x| self.score(x))
    }
}

impl Scorer for LinearRankModel {
    fn score(&self, x: &SparseVector) -> f64 {
        x.dot(&self.weights)
    }
}

fn mean_pair_hinge(pairs: &[PreferencePair], score: impl Fn(&SparseVector) -> f64) -> f64 {
    if pairs.is_empty() {
        return 0.0;
    }
    pairs
        .iter()
        .map(|p| (1.0 - (score(&p.preferred.vector) - score(&p.other.vector))).max(0.0))
        .sum::<f64>()
        / pairs.len() as f64
}

pub fn train_rank_svm(pairs: &[PreferencePair], dim: usize, config: &TrainConfig) -> Result<LinearRankModel> {
    train_rank_svm_with_history(pairs, dim, config).map(|(m, _)| m)
}

/// Like [`train_rank_svm`], also returning the mean pairwise hinge loss
/// measured after each epoch.
pub fn train_rank_svm_with_history(
    pairs: &[PreferencePair],
    dim: usize,
    config: &TrainConfig,
) -> Result<(LinearRankModel, Vec<f64>)> {
    config.validate()?;
    if pairs.is_empty() {
        return Err(Error::invalid("no preference pairs to train on"));
    }
    for p in pairs {
        check_dim(&p.preferred.vector, dim)?;
        check_dim(&p.other.vector, dim)?;
    }
    let diffs: Vec<SparseVector> = pairs
        .iter()
        .map(|p| sparse_diff(&p.preferred.vector, &p.other.vector))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut w = ScaledWeights::new(dim);
    let decay = 1.0 - 2.0 * config.learning_rate * config.lambda;
    let mut history = Vec::with_capacity(config.epochs);
    for _ in 0..config.epochs {
        for i in epoch_order(diffs.len(), &mut rng, config.shuffle) {
            let d = &diffs[i];
            let margin = w.dot(d);
            w.decay(decay);
            if margin < 1.0 {
                w.add(d, config.learning_rate);
            }
        }
        let loss = diffs.iter().map(|d| (1.0 - w.dot(d)).max(0.0)).sum::<f64>() / diffs.len() as f64;
        history.push(loss);
    }
    let weights = w.into_vec();
    if weights.iter().any(|v| !v.is_finite()) {
        return Err(Error::Invariant("training diverged to non-finite weights".into()));
    }
    Ok((
        LinearRankModel {
            weights,
            config: *config,
        },
        history,
    ))
}

/// Index of the best-scoring instance; ties go to the lower search rank.
fn argmax_by_score(instances: &[RankInstance], scorer: &dyn Scorer) -> Result<usize> {
    let mut best: Option<(usize, f64, u32)> = None;
    for (i, inst) in instances.iter().enumerate() {
        let s = scorer.score(&inst.vector);
        let better = match best {
            None => true,
            Some((_, bs, br)) => s > bs || (s == bs && inst.result_rank < br),
        };
        if better {
            best = Some((i, s, inst.result_rank));
        }
    }
    best.map(|b| b.0).ok_or_else(|| Error::invalid("no results to rank"))
}

/// The result of `page` whose instance scores highest.
pub fn predict_homepage<'p>(
    page: &'p ResultPage,
    instances: &[RankInstance],
    scorer: &dyn Scorer,
) -> Result<&'p SearchResult> {
    if page.results.is_empty() {
        return Err(Error::invalid("empty result page"));
    }
    if instances.len() != page.results.len() {
        return Err(Error::invalid(format!(
            "{} instances for {} results",
            instances.len(),
            page.results.len()
        )));
    }
    for (inst, r) in instances.iter().zip(&page.results) {
        if inst.result_rank != r.rank {
            return Err(Error::invalid("instances are not aligned with the page results"));
        }
    }
    Ok(&page.results[argmax_by_score(instances, scorer)?])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointwiseKind {
    NaiveBayes,
    Logistic,
    LinearSvm,
}

/// Bernoulli naive Bayes over feature presence (`x > 0`), add-one smoothed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "NaiveBayesCounts", into = "NaiveBayesCounts")]
pub struct NaiveBayes {
    counts: NaiveBayesCounts,
    log_prior: [f64; 2],
    /// Per class: `Σ_j log(1 − p_cj)`.
    base: [f64; 2],
    /// Per class and feature: `log p_cj − log(1 − p_cj)`.
    delta: [Vec<f64>; 2],
}

/// Count tables: index 0 is the negative class, 1 the positive class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NaiveBayesCounts {
    pub class_counts: [u64; 2],
    pub feature_counts: [Vec<u64>; 2],
}

impl From<NaiveBayes> for NaiveBayesCounts {
    fn from(nb: NaiveBayes) -> Self {
        nb.counts
    }
}

impl From<NaiveBayesCounts> for NaiveBayes {
    fn from(counts: NaiveBayesCounts) -> Self {
        let total = (counts.class_counts[0] + counts.class_counts[1]) as f64;
        let mut log_prior = [0.0; 2];
        let mut base = [0.0; 2];
        let mut delta: [Vec<f64>; 2] = Default::default();
        for c in 0..2 {
            let n_c = counts.class_counts[c] as f64;
            log_prior[c] = (n_c / total).ln();
            delta[c] = counts.feature_counts[c]
                .iter()
                .map(|&k| {
                    let p = (k as f64 + 1.0) / (n_c + 2.0);
                    base[c] += (1.0 - p).ln();
                    p.ln() - (1.0 - p).ln()
                })
                .collect();
        }
        NaiveBayes {
            counts,
            log_prior,
            base,
            delta,
        }
    }
}

impl NaiveBayes {
    fn log_joint(&self, x: &SparseVector) -> [f64; 2] {
        let mut out = [0.0; 2];
        for (c, slot) in out.iter_mut().enumerate() {
            *slot = self.log_prior[c]
                + self.base[c]
                + x.iter()
                    .filter(|(_, v)| *v > 0.0)
                    .filter_map(|(i, _)| self.delta[c].get(i))
                    .sum::<f64>();
        }
        out
    }

    /// `P(positive | x)`.
    pub fn posterior_positive(&self, x: &SparseVector) -> f64 {
        let [neg, pos] = self.log_joint(x);
        1.0 / (1.0 + (neg - pos).exp())
    }

    pub fn counts(&self) -> &NaiveBayesCounts {
        &self.counts
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PointwiseModel {
    NaiveBayes(NaiveBayes),
    Logistic { weights: Vec<f64>, bias: f64 },
    LinearSvm { weights: Vec<f64>, bias: f64 },
}

impl PointwiseModel {
    pub fn kind(&self) -> PointwiseKind {
        match self {
            PointwiseModel::NaiveBayes(_) => PointwiseKind::NaiveBayes,
            PointwiseModel::Logistic { .. } => PointwiseKind::Logistic,
            PointwiseModel::LinearSvm { .. } => PointwiseKind::LinearSvm,
        }
    }

    /// Signed decision value; positive means "homepage".
    pub fn decision(&self, x: &SparseVector) -> f64 {
        match self {
            PointwiseModel::NaiveBayes(nb) => {
                let [neg, pos] = nb.log_joint(x);
                pos - neg
            }
            PointwiseModel::Logistic { weights, bias } | PointwiseModel::LinearSvm { weights, bias } => {
                x.dot(weights) + bias
            }
        }
    }

    pub fn predict(&self, x: &SparseVector) -> Label {
        if self.decision(x) > 0.0 {
            Label::Homepage
        } else {
            Label::Other
        }
    }
}

impl Scorer for PointwiseModel {
    fn score(&self, x: &SparseVector) -> f64 {
        self.decision(x)
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Trains a per-instance classifier on labeled instances.
pub fn train_pointwise(
    instances: &[RankInstance],
    dim: usize,
    kind: PointwiseKind,
    config: &TrainConfig,
) -> Result<PointwiseModel> {
    config.validate()?;
    let mut labels = Vec::with_capacity(instances.len());
    for inst in instances {
        check_dim(&inst.vector, dim)?;
        labels.push(match inst.label {
            Some(Label::Homepage) => true,
            Some(Label::Other) => false,
            None => return Err(Error::InvalidLabeling("unlabeled training instance".into())),
        });
    }
    let n_pos = labels.iter().filter(|l| **l).count();
    if n_pos == 0 || n_pos == labels.len() {
        return Err(Error::DegenerateTraining("training data must contain both labels".into()));
    }
    Ok(match kind {
        PointwiseKind::NaiveBayes => {
            let mut counts = NaiveBayesCounts {
                class_counts: [0; 2],
                feature_counts: [vec![0; dim], vec![0; dim]],
            };
            for (inst, &y) in instances.iter().zip(&labels) {
                let c = y as usize;
                counts.class_counts[c] += 1;
                for (i, v) in inst.vector.iter() {
                    if v > 0.0 {
                        counts.feature_counts[c][i] += 1;
                    }
                }
            }
            PointwiseModel::NaiveBayes(counts.into())
        }
        PointwiseKind::Logistic | PointwiseKind::LinearSvm => {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            let mut w = ScaledWeights::new(dim);
            let mut bias = 0.0;
            let eta = config.learning_rate;
            let decay = 1.0 - 2.0 * eta * config.lambda;
            for _ in 0..config.epochs {
                for i in epoch_order(instances.len(), &mut rng, config.shuffle) {
                    let x = &instances[i].vector;
                    let z = w.dot(x) + bias;
                    w.decay(decay);
                    match kind {
                        PointwiseKind::Logistic => {
                            let g = (labels[i] as u8 as f64) - sigmoid(z);
                            w.add(x, eta * g);
                            bias += eta * g;
                        }
                        _ => {
                            let y = if labels[i] { 1.0 } else { -1.0 };
                            if y * z < 1.0 {
                                w.add(x, eta * y);
                                bias += eta * y;
                            }
                        }
                    }
                }
            }
            let weights = w.into_vec();
            if weights.iter().chain(std::iter::once(&bias)).any(|v| !v.is_finite()) {
                return Err(Error::Invariant("training diverged to non-finite weights".into()));
            }
            match kind {
                PointwiseKind::Logistic => PointwiseModel::Logistic { weights, bias },
                _ => PointwiseModel::LinearSvm { weights, bias },
            }
        }
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryPrediction {
    pub query_id: String,
    pub predicted_rank: u32,
    pub true_rank: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankEvalReport {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub per_query: Vec<QueryPrediction>,
}

impl RankEvalReport {
    pub fn from_predictions(per_query: Vec<QueryPrediction>) -> Self {
        let n = per_query.len();
        let correct = per_query.iter().filter(|q| q.predicted_rank == q.true_rank).count();
        // One prediction and one true homepage per query.
        let precision = if n == 0 { 0.0 } else { correct as f64 / n as f64 };
        let recall = precision;
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Self {
            precision,
            recall,
            f1,
            per_query,
        }
    }

    pub fn accuracy(&self) -> f64 {
        self.precision
    }

    pub fn correct(&self) -> usize {
        self.per_query.iter().filter(|q| q.predicted_rank == q.true_rank).count()
    }
}

fn true_rank(instances: &[RankInstance]) -> Result<u32> {
    let mut it = instances.iter().filter(|i| i.label == Some(Label::Homepage));
    match (it.next(), it.next()) {
        (Some(i), None) => Ok(i.result_rank),
        _ => Err(Error::InvalidLabeling(format!(
            "query `{}` must have exactly one homepage",
            instances.first().map(|i| i.query_id.as_str()).unwrap_or("?")
        ))),
    }
}

/// Per-query evaluation over groups of labeled instances (one group per query).
pub fn evaluate_ranker(groups: &[Vec<RankInstance>], scorer: &dyn Scorer) -> Result<RankEvalReport> {
    let mut per_query = Vec::with_capacity(groups.len());
    for g in groups {
        let true_rank = true_rank(g)?;
        let best = argmax_by_score(g, scorer)?;
        per_query.push(QueryPrediction {
            query_id: g[best].query_id.clone(),
            predicted_rank: g[best].result_rank,
            true_rank,
        });
    }
    Ok(RankEvalReport::from_predictions(per_query))
}

/// Fold index for each of `n` items; fold sizes differ by at most one.
pub fn kfold_assignments(n: usize, k: usize, seed: u64) -> Result<Vec<usize>> {
    if k < 2 || k > n {
        return Err(Error::invalid(format!("cannot split {n} items into {k} folds")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut folds = vec![0; n];
    for (pos, &item) in order.iter().enumerate() {
        folds[item] = pos % k;
    }
    Ok(folds)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankerKind {
    RankSvm,
    NaiveBayes,
    Logistic,
    LinearSvm,
}

impl RankerKind {
    pub const ALL: [RankerKind; 4] = [
        RankerKind::RankSvm,
        RankerKind::NaiveBayes,
        RankerKind::Logistic,
        RankerKind::LinearSvm,
    ];

    pub fn label(self) -> &'static str {
        match self {
            RankerKind::RankSvm => "RankSVM",
            RankerKind::NaiveBayes => "Naive Bayes",
            RankerKind::Logistic => "MaxEnt (logistic)",
            RankerKind::LinearSvm => "Binary SVM",
        }
    }
}

/// Either a pairwise or a pointwise model, usable as a ranker.
#[derive(Debug, Clone, PartialEq)]
pub enum TrainedRanker {
    Pairwise(LinearRankModel),
    Pointwise(PointwiseModel),
}

impl Scorer for TrainedRanker {
    fn score(&self, x: &SparseVector) -> f64 {
        match self {
            TrainedRanker::Pairwise(m) => m.score(x),
            TrainedRanker::Pointwise(m) => m.score(x),
        }
    }
}

/// Trains `kind` on labeled instance groups sharing one feature space.
pub fn train_ranker(
    groups: &[Vec<RankInstance>],
    dim: usize,
    kind: RankerKind,
    config: &TrainConfig,
) -> Result<TrainedRanker> {
    Ok(match kind {
        RankerKind::RankSvm => {
            let mut pairs = Vec::new();
            for g in groups {
                pairs.extend(build_preference_pairs(g)?);
            }
            TrainedRanker::Pairwise(train_rank_svm(&pairs, dim, config)?)
        }
        other => {
            let pk = match other {
                RankerKind::NaiveBayes => PointwiseKind::NaiveBayes,
                RankerKind::Logistic => PointwiseKind::Logistic,
                _ => PointwiseKind::LinearSvm,
            };
            let flat: Vec<RankInstance> = groups.iter().flatten().cloned().collect();
            TrainedRanker::Pointwise(train_pointwise(&flat, dim, pk, config)?)
        }
    })
}

fn vectorize_all(pages: &[&LabeledPage], dicts: &FeatureDictionaries) -> Result<Vec<Vec<RankInstance>>> {
    pages.iter().map(|p| p.vectorize(dicts)).collect()
}

/// k-fold cross-validation. Dictionaries are rebuilt from each training
/// split so test queries never leak vocabulary.
pub fn cross_validate(
    pages: &[LabeledPage],
    k: usize,
    fold_seed: u64,
    dict_config: &DictionaryConfig,
    kind: RankerKind,
    config: &TrainConfig,
) -> Result<RankEvalReport> {
    for p in pages {
        p.homepage_rank()?;
    }
    let folds = kfold_assignments(pages.len(), k, fold_seed)?;
    let mut per_query: Vec<Option<QueryPrediction>> = vec![None; pages.len()];
    for fold in 0..k {
        let train: Vec<&LabeledPage> = pages
            .iter()
            .zip(&folds)
            .filter(|(_, f)| **f != fold)
            .map(|(p, _)| p)
            .collect();
        let test_idx: Vec<usize> = (0..pages.len()).filter(|i| folds[*i] == fold).collect();
        let dicts = build_dictionaries(train.iter().map(|p| &p.page), dict_config)?;
        let train_groups = vectorize_all(&train, &dicts)?;
        let model = train_ranker(&train_groups, dicts.dim(), kind, config)?;
        let test: Vec<&LabeledPage> = test_idx.iter().map(|&i| &pages[i]).collect();
        let report = evaluate_ranker(&vectorize_all(&test, &dicts)?, &model)?;
        for (i, pred) in test_idx.into_iter().zip(report.per_query) {
            per_query[i] = Some(pred);
        }
    }
    Ok(RankEvalReport::from_predictions(
        per_query.into_iter().map(|p| p.expect("every page is in one fold")).collect(),
    ))
}

/// Picks the λ from `grid` with the best cross-validated RankSVM accuracy;
/// ties keep the earlier grid entry.
pub fn select_lambda(
    pages: &[LabeledPage],
    grid: &[f64],
    k: usize,
    fold_seed: u64,
    dict_config: &DictionaryConfig,
    base: &TrainConfig,
) -> Result<(f64, RankEvalReport)> {
    let mut best: Option<(f64, RankEvalReport)> = None;
    for &lambda in grid {
        let cfg = TrainConfig { lambda, ..*base };
        let report = cross_validate(pages, k, fold_seed, dict_config, RankerKind::RankSvm, &cfg)?;
        if best.as_ref().map_or(true, |(_, b)| report.accuracy() > b.accuracy()) {
            best = Some((lambda, report));
        }
    }
    best.ok_or_else(|| Error::invalid("empty lambda grid"))
}

/// Dictionaries plus a trained RankSVM: everything needed to pick a
/// homepage from an author-query result page.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomepageRanker {
    pub format_version: u32,
    pub dictionaries: FeatureDictionaries,
    pub model: LinearRankModel,
}

impl HomepageRanker {
    pub fn train(pages: &[LabeledPage], dict_config: &DictionaryConfig, config: &TrainConfig) -> Result<Self> {
        let dicts = build_dictionaries(pages.iter().map(|p| &p.page), dict_config)?;
        let refs: Vec<&LabeledPage> = pages.iter().collect();
        let groups = vectorize_all(&refs, &dicts)?;
        let mut pairs = Vec::new();
        for g in &groups {
            pairs.extend(build_preference_pairs(g)?);
        }
        let model = train_rank_svm(&pairs, dicts.dim(), config)?;
        Ok(Self {
            format_version: MODEL_FORMAT_VERSION,
            dictionaries: dicts,
            model,
        })
    }

    pub fn instances(&self, page: &ResultPage) -> Result<Vec<RankInstance>> {
        page.results
            .iter()
            .map(|r| vectorize(&page.query, r, &self.dictionaries))
            .collect()
    }

    pub fn predict<'p>(&self, page: &'p ResultPage) -> Result<&'p SearchResult> {
        predict_homepage(page, &self.instances(page)?, &self.model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, serde_json::to_vec_pretty(self)?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let r: Self = serde_json::from_slice(&fs::read(path)?)?;
        if r.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::FormatVersion {
                found: r.format_version,
                expected: MODEL_FORMAT_VERSION,
            });
        }
        if r.model.dim() != r.dictionaries.dim() {
            return Err(Error::Invariant("model and dictionary dimensions differ".into()));
        }
        Ok(r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::search::Query;

    fn inst(q: &str, rank: u32, pairs: &[(u32, f64)], label: Label) -> RankInstance {
        RankInstance {
            query_id: q.into(),
            result_rank: rank,
            vector: SparseVector::from_pairs(pairs.to_vec()),
            label: Some(label),
        }
    }

    struct Fixed(Vec<f64>);
    impl Scorer for Fixed {
        fn score(&self, x: &SparseVector) -> f64 {
            self.0[x.get(0) as usize]
        }
    }

    fn page_with(n: usize) -> (ResultPage, Vec<RankInstance>) {
        let q = Query::author("Some Body").unwrap();
        let results: Vec<_> = (1..=n)
            .map(|r| SearchResult {
                query_id: q.id.clone(),
                rank: r as u32,
                url: format!("http://r{r}.org/"),
                page_title: String::new(),
                snippet: String::new(),
            })
            .collect();
        let insts = (1..=n)
            .map(|r| RankInstance {
                query_id: q.id.clone(),
                result_rank: r as u32,
                // Feature 0 carries the row index used by `Fixed`.
                vector: SparseVector::from_pairs(vec![(0, (r - 1) as f64), (1, 1.0)]),
                label: None,
            })
            .collect();
        (ResultPage::new(q, results, 0).unwrap(), insts)
    }

    #[test]
    fn separable_one_dimensional_pairs() {
        let pairs = vec![
            PreferencePair {
                query_id: "q1".into(),
                preferred: inst("q1", 1, &[(0, 1.0)], Label::Homepage),
                other: inst("q1", 2, &[], Label::Other),
            },
            PreferencePair {
                query_id: "q2".into(),
                preferred: inst("q2", 2, &[(0, 1.0)], Label::Homepage),
                other: inst("q2", 1, &[], Label::Other),
            },
        ];
        let cfg = TrainConfig {
            lambda: 0.0,
            epochs: 20,
            ..TrainConfig::default()
        };
        let m = train_rank_svm(&pairs, 1, &cfg).unwrap();
        assert!(m.weights[0] > 0.0);
        assert_eq!(m.violated_pairs(&pairs), 0);
    }

    #[test]
    fn empty_pairs_and_dim_mismatch() {
        let cfg = TrainConfig::default();
        assert!(matches!(train_rank_svm(&[], 3, &cfg), Err(Error::InvalidInput(_))));
        let pairs = vec![PreferencePair {
            query_id: "q".into(),
            preferred: inst("q", 1, &[(5, 1.0)], Label::Homepage),
            other: inst("q", 2, &[], Label::Other),
        }];
        assert!(matches!(train_rank_svm(&pairs, 3, &cfg), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn argmax_and_ties() {
        let (page, insts) = page_with(4);
        let chosen = predict_homepage(&page, &insts, &Fixed(vec![0.1, 0.9, 0.3, 0.2])).unwrap();
        assert_eq!(chosen.rank, 2);
        let chosen = predict_homepage(&page, &insts, &Fixed(vec![0.5; 4])).unwrap();
        assert_eq!(chosen.rank, 1);
        let empty = ResultPage::new(page.query.clone(), vec![], 0).unwrap();
        assert!(predict_homepage(&empty, &[], &Fixed(vec![])).is_err());
        assert!(predict_homepage(&page, &insts[..2], &Fixed(vec![0.0; 4])).is_err());
    }

    #[test]
    fn naive_bayes_smoothed_posterior() {
        let data = vec![
            inst("q", 1, &[(0, 1.0)], Label::Homepage),
            inst("q", 2, &[], Label::Other),
        ];
        let m = train_pointwise(&data, 1, PointwiseKind::NaiveBayes, &TrainConfig::default()).unwrap();
        let PointwiseModel::NaiveBayes(nb) = &m else { panic!() };
        // P(x=1|+) = 2/3, P(x=1|-) = 1/3, equal priors.
        let p = nb.posterior_positive(&SparseVector::from_pairs(vec![(0, 1.0)]));
        assert!((p - 2.0 / 3.0).abs() < 1e-12, "{p}");
        assert!(m.decision(&SparseVector::from_pairs(vec![(0, 1.0)])) > 0.0);
        assert_eq!(m.predict(&SparseVector::default()), Label::Other);
    }

    #[test]
    fn pointwise_separable_training_accuracy() {
        let data: Vec<_> = (0..20)
            .map(|i| {
                if i % 2 == 0 {
                    inst("q", i, &[(0, 1.0), (2, 1.0)], Label::Homepage)
                } else {
                    inst("q", i, &[(1, 1.0), (2, 1.0)], Label::Other)
                }
            })
            .collect();
        let cfg = TrainConfig {
            epochs: 50,
            ..TrainConfig::default()
        };
        for kind in [PointwiseKind::Logistic, PointwiseKind::LinearSvm] {
            let m = train_pointwise(&data, 3, kind, &cfg).unwrap();
            let correct = data.iter().filter(|d| Some(m.predict(&d.vector)) == d.label).count();
            assert_eq!(correct, data.len(), "{kind:?}");
        }
    }

    #[test]
    fn single_class_is_degenerate() {
        let data = vec![inst("q", 1, &[(0, 1.0)], Label::Homepage), inst("q", 2, &[], Label::Homepage)];
        for kind in [PointwiseKind::NaiveBayes, PointwiseKind::Logistic, PointwiseKind::LinearSvm] {
            assert!(matches!(
                train_pointwise(&data, 1, kind, &TrainConfig::default()),
                Err(Error::DegenerateTraining(_))
            ));
        }
    }

    #[test]
    fn report_metric_identity() {
        let per_query = (0..10)
            .map(|i| QueryPrediction {
                query_id: format!("q{i}"),
                predicted_rank: if i == 0 { 2 } else { 1 },
                true_rank: 1,
            })
            .collect();
        let r = RankEvalReport::from_predictions(per_query);
        assert!((r.precision - 0.9).abs() < 1e-12);
        assert_eq!(r.precision, r.recall);
        assert!((r.f1 - 0.9).abs() < 1e-12);
    }

    #[test]
    fn kfold_sizes() {
        let folds = kfold_assignments(10, 5, 3).unwrap();
        for f in 0..5 {
            assert_eq!(folds.iter().filter(|x| **x == f).count(), 2);
        }
        assert_eq!(folds, kfold_assignments(10, 5, 3).unwrap());
        assert!(kfold_assignments(3, 5, 0).is_err());
        assert!(kfold_assignments(3, 1, 0).is_err());
    }

    #[test]
    fn evaluate_requires_single_homepage() {
        let g = vec![vec![inst("q", 1, &[], Label::Other), inst("q", 2, &[], Label::Other)]];
        assert!(matches!(
            evaluate_ranker(&g, &Fixed(vec![0.0])),
            Err(Error::InvalidLabeling(_))
        ));
    }

    #[test]
    fn rank_model_json_round_trip() {
        let m = LinearRankModel {
            weights: vec![0.25, -1.5, 3.0],
            config: TrainConfig::default(),
        };
        let s = serde_json::to_string(&m).unwrap();
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["dim"], 3);
        assert_eq!(v["format_version"], 1);
        assert_eq!(serde_json::from_str::<LinearRankModel>(&s).unwrap(), m);
        let bad = s.replace("\"format_version\":1", "\"format_version\":9");
        assert!(serde_json::from_str::<LinearRankModel>(&bad).is_err());
    }
}
