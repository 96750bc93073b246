//! Frequency-based feature ranking and incremental SVM selection.
//!
//! Ranking repeats `runs` times: draw a class-balanced split, standardize on
//! the training rows, fit a cross-validated elastic net, and count every
//! feature with a nonzero coefficient. Features are ranked by how often they
//! were selected. Selection then evaluates a linear SVM on growing prefixes
//! of the ranking over fresh balanced splits and keeps the smallest prefix
//! whose mean AUC is close to the best.
//!
//! Every run draws its seed from `(master_seed, stream, index)`, so results
//! do not depend on execution order or on the rayon pool size.

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, ScalingParams};
use crate::elasticnet::{self, ElasticNetConfig, FeatureSubset};
use crate::error::{Error, Result};
use crate::metrics::{self, MetricStats, RunMetrics, Summary};
use crate::svm::{self, SvmConfig};

/// Seed stream of the elastic net runs (ranking and baseline).
pub const STREAM_RANKING: u64 = 1;
/// Seed stream of the incremental-selection repeats.
pub const STREAM_SELECTION: u64 = 2;

pub const DEFAULT_TRAIN_FRACTION: f64 = 0.8;
pub const DEFAULT_EPSILON: f64 = 0.01;
pub const MAX_SUBSET_CAP: usize = 30;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for item `index` of `stream` under `master`.
pub fn mix_seed(master: u64, stream: u64, index: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(master) ^ stream) ^ index)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
    pub seed: u64,
}

impl SplitPlan {
    /// Disjointness, range, and equal training class counts.
    pub fn validate(&self, data: &Dataset) -> Result<()> {
        let n = data.n_cases();
        let mut seen = vec![false; n];
        for &i in self.train_indices.iter().chain(&self.test_indices) {
            if i >= n {
                return Err(Error::InvalidArgument(format!("split index {i} >= {n}")));
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(Error::InvalidArgument(format!(
                    "split index {i} used twice"
                )));
            }
        }
        let positives = data
            .labels_at(&self.train_indices)
            .iter()
            .filter(|&&l| l == 1)
            .count();
        if 2 * positives != self.train_indices.len() {
            return Err(Error::InvalidArgument(format!(
                "unbalanced training set: {positives} positives of {}",
                self.train_indices.len()
            )));
        }
        Ok(())
    }
}

/// Samples `per_class` training rows from each class without replacement;
/// everything else is the test set. Both index lists are ascending.
pub fn balanced_split(data: &Dataset, per_class: usize, seed: u64) -> Result<SplitPlan> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::with_capacity(2 * per_class);
    let mut test = Vec::new();
    for class in [0u8, 1] {
        let mut rows = data.rows_of_class(class);
        if per_class > rows.len() {
            return Err(Error::ClassTooSmall {
                class,
                requested: per_class,
                available: rows.len(),
            });
        }
        rows.shuffle(&mut rng);
        train.extend_from_slice(&rows[..per_class]);
        test.extend_from_slice(&rows[per_class..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok(SplitPlan {
        train_indices: train,
        test_indices: test,
        seed,
    })
}

/// `floor(fraction * min(class_counts))`.
pub fn default_per_class(class_counts: [usize; 2], fraction: f64) -> usize {
    let smaller = class_counts[0].min(class_counts[1]) as f64;
    // Guard against products like 0.8 * 35 = 27.999999999999996.
    (fraction * smaller + 1e-9).floor() as usize
}

/// Settings shared by the ranking and baseline elastic net runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingConfig {
    pub alpha: f64,
    pub runs: usize,
    /// Training cases per class; defaults to `default_per_class`.
    pub per_class: Option<usize>,
    pub train_fraction: f64,
    /// Solver settings; `alpha` and `seed` are overridden per run.
    pub elastic_net: ElasticNetConfig,
}

impl Default for RankingConfig {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            runs: 100,
            per_class: None,
            train_fraction: DEFAULT_TRAIN_FRACTION,
            elastic_net: ElasticNetConfig::default(),
        }
    }
}

impl RankingConfig {
    fn per_class_for(&self, data: &Dataset) -> usize {
        self.per_class
            .unwrap_or_else(|| default_per_class(data.class_counts(), self.train_fraction))
    }
}

/// Outcome of one elastic net run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElasticNetRun {
    pub seed: u64,
    pub lambda: f64,
    pub selected: FeatureSubset,
    pub metrics: RunMetrics,
}

/// Standardized train and test matrices of one split.
struct ScaledSplit {
    train: Array2<f64>,
    test: Array2<f64>,
    train_labels: Vec<u8>,
    test_labels: Vec<u8>,
}

fn scale_split(data: &Dataset, plan: &SplitPlan) -> Result<ScaledSplit> {
    let params: ScalingParams = crate::dataset::fit_scaling(data, &plan.train_indices)?;
    Ok(ScaledSplit {
        train: params.transform(data.features(), &plan.train_indices)?,
        test: params.transform(data.features(), &plan.test_indices)?,
        train_labels: data.labels_at(&plan.train_indices),
        test_labels: data.labels_at(&plan.test_indices),
    })
}

fn elastic_net_run(
    data: &Dataset,
    config: &RankingConfig,
    per_class: usize,
    seed: u64,
) -> Result<ElasticNetRun> {
    let plan = balanced_split(data, per_class, seed)?;
    plan.validate(data)?;
    let split = scale_split(data, &plan)?;
    let y: Vec<f64> = split.train_labels.iter().map(|&l| f64::from(l)).collect();
    let solver = ElasticNetConfig {
        alpha: config.alpha,
        seed: mix_seed(seed, 0, 0),
        ..config.elastic_net.clone()
    };
    let fit = elasticnet::cv_fit(split.train.view(), &y, config.alpha, &solver)?;
    let scores = elasticnet::predict(&fit, split.test.view())?;
    let predicted: Vec<u8> = scores
        .iter()
        .map(|&s| elasticnet::predict_label(s))
        .collect();
    Ok(ElasticNetRun {
        seed,
        lambda: fit.lambda,
        selected: elasticnet::selected_features(&fit),
        metrics: metrics::evaluate(&scores, &predicted, &split.test_labels)?,
    })
}

/// The seeded elastic net runs behind both the ranking and the baseline.
pub fn elastic_net_runs(
    data: &Dataset,
    config: &RankingConfig,
    master_seed: u64,
) -> Result<Vec<ElasticNetRun>> {
    if config.runs < 1 {
        return Err(Error::InvalidArgument("runs must be >= 1".into()));
    }
    let mut solver = config.elastic_net.clone();
    solver.alpha = config.alpha;
    solver.validate()?;
    let per_class = config.per_class_for(data);
    (0..config.runs)
        .into_par_iter()
        .map(|i| {
            elastic_net_run(
                data,
                config,
                per_class,
                mix_seed(master_seed, STREAM_RANKING, i as u64),
            )
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRanking {
    pub runs: usize,
    pub feature_names: Vec<String>,
    /// Times each feature was selected.
    pub counts: Vec<usize>,
    /// `counts / runs`.
    pub frequencies: Vec<f64>,
    /// Feature indices by descending frequency, ties by ascending index.
    pub order: Vec<usize>,
}

impl FeatureRanking {
    pub fn from_counts(
        runs: usize,
        feature_names: Vec<String>,
        counts: Vec<usize>,
    ) -> Result<Self> {
        if runs < 1 {
            return Err(Error::InvalidArgument("runs must be >= 1".into()));
        }
        if counts.len() != feature_names.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} counts for {} features",
                counts.len(),
                feature_names.len()
            )));
        }
        if let Some(c) = counts.iter().find(|&&c| c > runs) {
            return Err(Error::InvalidArgument(format!(
                "count {c} exceeds {runs} runs"
            )));
        }
        let frequencies = counts.iter().map(|&m| m as f64 / runs as f64).collect();
        let mut order: Vec<usize> = (0..counts.len()).collect();
        order.sort_by(|&a, &b| counts[b].cmp(&counts[a]).then(a.cmp(&b)));
        Ok(Self {
            runs,
            feature_names,
            counts,
            frequencies,
            order,
        })
    }

    /// Names of the top `k` features.
    pub fn top_names(&self, k: usize) -> Vec<String> {
        self.order
            .iter()
            .take(k)
            .map(|&j| self.feature_names[j].clone())
            .collect()
    }

    /// Features selected at least once.
    pub fn ever_selected(&self) -> usize {
        self.counts.iter().filter(|&&c| c > 0).count()
    }
}

pub fn ranking_from_runs(data: &Dataset, runs: &[ElasticNetRun]) -> Result<FeatureRanking> {
    let mut counts = vec![0usize; data.n_features()];
    for run in runs {
        for &j in run.selected.indices() {
            counts[j] += 1;
        }
    }
    FeatureRanking::from_counts(runs.len(), data.feature_names().to_vec(), counts)
}

pub fn rank_features(
    data: &Dataset,
    config: &RankingConfig,
    master_seed: u64,
) -> Result<FeatureRanking> {
    ranking_from_runs(data, &elastic_net_runs(data, config, master_seed)?)
}

/// Selected-feature-count distribution and test metrics of the elastic net
/// models themselves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineStats {
    pub runs: usize,
    pub feature_counts: Vec<usize>,
    pub mean_feature_count: f64,
    pub std_feature_count: f64,
    pub feature_count_range: (usize, usize),
    /// Distinct features selected in at least one run.
    pub involved_feature_count: usize,
    pub metrics: MetricStats,
}

pub fn baseline_from_runs(data: &Dataset, runs: &[ElasticNetRun]) -> Result<BaselineStats> {
    let counts: Vec<usize> = runs.iter().map(|r| r.selected.len()).collect();
    let as_f64: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
    let summary = Summary::of(&as_f64)?;
    let mut involved = vec![false; data.n_features()];
    for run in runs {
        for &j in run.selected.indices() {
            involved[j] = true;
        }
    }
    let per_run: Vec<RunMetrics> = runs.iter().map(|r| r.metrics).collect();
    Ok(BaselineStats {
        runs: runs.len(),
        mean_feature_count: summary.mean,
        std_feature_count: summary.std,
        feature_count_range: (
            *counts.iter().min().expect("non-empty"),
            *counts.iter().max().expect("non-empty"),
        ),
        involved_feature_count: involved.iter().filter(|&&b| b).count(),
        feature_counts: counts,
        metrics: metrics::aggregate(&per_run)?,
    })
}

pub fn baseline_elastic_net(
    data: &Dataset,
    config: &RankingConfig,
    master_seed: u64,
) -> Result<BaselineStats> {
    baseline_from_runs(data, &elastic_net_runs(data, config, master_seed)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionConfig {
    /// Largest subset size `K`; defaults to the number of ever-selected
    /// features, capped at `min(p, 30)`.
    pub max_features: Option<usize>,
    pub repeats: usize,
    pub per_class: Option<usize>,
    pub train_fraction: f64,
    pub epsilon: f64,
    /// Classifier settings; `seed` is overridden per repeat.
    pub svm: SvmConfig,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        Self {
            max_features: None,
            repeats: 100,
            per_class: None,
            train_fraction: DEFAULT_TRAIN_FRACTION,
            epsilon: DEFAULT_EPSILON,
            svm: SvmConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionCurve {
    /// Entry `k - 1` summarizes the top-`k` subset.
    pub per_k: Vec<MetricStats>,
    pub chosen_k: usize,
    pub chosen_features: FeatureSubset,
    pub chosen_names: Vec<String>,
}

/// Default `K`: ever-selected features, at least 1, at most `min(p, 30)`.
pub fn default_max_features(ranking: &FeatureRanking) -> usize {
    let p = ranking.counts.len();
    ranking.ever_selected().clamp(1, p.min(MAX_SUBSET_CAP))
}

/// Smallest `k` (1-based) whose mean AUC is within `epsilon` of the best.
pub fn choose_subset(per_k: &[MetricStats], epsilon: f64) -> Result<usize> {
    if per_k.is_empty() {
        return Err(Error::InvalidArgument("empty selection curve".into()));
    }
    let best = per_k
        .iter()
        .map(|s| s.auc.mean)
        .fold(f64::NEG_INFINITY, f64::max);
    // Slack for decimal inputs such as 0.91 - 0.01.
    let bound = best - epsilon - 1e-12;
    let idx = per_k
        .iter()
        .position(|s| s.auc.mean >= bound)
        .expect("the maximum satisfies the bound");
    Ok(idx + 1)
}

pub fn incremental_select(
    data: &Dataset,
    ranking: &FeatureRanking,
    config: &SelectionConfig,
    master_seed: u64,
) -> Result<SelectionCurve> {
    let p = data.n_features();
    if ranking.feature_names != data.feature_names() {
        return Err(Error::InvalidArgument(
            "ranking feature names do not match the dataset".into(),
        ));
    }
    let k_max = config
        .max_features
        .unwrap_or_else(|| default_max_features(ranking));
    if k_max < 1 || k_max > p {
        return Err(Error::InvalidArgument(format!(
            "K = {k_max} outside [1, {p}]"
        )));
    }
    if config.repeats < 1 {
        return Err(Error::InvalidArgument("repeats must be >= 1".into()));
    }
    config.svm.validate()?;

    let top = &ranking.order[..k_max];
    let reduced = data.select_columns(top)?;
    let per_class = config
        .per_class
        .unwrap_or_else(|| default_per_class(data.class_counts(), config.train_fraction));

    // Splits and scaling do not depend on k; the scaled columns are in rank
    // order, so the top-k subset is a column prefix.
    let splits: Vec<(u64, ScaledSplit)> = (0..config.repeats)
        .into_par_iter()
        .map(|r| {
            let seed = mix_seed(master_seed, STREAM_SELECTION, r as u64);
            let plan = balanced_split(&reduced, per_class, seed)?;
            plan.validate(&reduced)?;
            Ok((seed, scale_split(&reduced, &plan)?))
        })
        .collect::<Result<_>>()?;

    let cells: Vec<RunMetrics> = (0..k_max * config.repeats)
        .into_par_iter()
        .map(|cell| {
            let (k, r) = (cell / config.repeats + 1, cell % config.repeats);
            let (seed, split) = &splits[r];
            let train = split.train.slice(ndarray::s![.., ..k]);
            let test = split.test.slice(ndarray::s![.., ..k]);
            let cfg = SvmConfig {
                seed: *seed,
                ..config.svm.clone()
            };
            let model = svm::train(train, &svm::to_signed(&split.train_labels), &cfg)?;
            let scores = svm::decision_values(&model, test)?;
            let predicted: Vec<u8> = scores.iter().map(|&s| u8::from(s >= 0.0)).collect();
            metrics::evaluate(&scores, &predicted, &split.test_labels)
        })
        .collect::<Result<_>>()?;

    let per_k = cells
        .chunks(config.repeats)
        .map(metrics::aggregate)
        .collect::<Result<Vec<_>>>()?;
    let chosen_k = choose_subset(&per_k, config.epsilon)?;
    let chosen: Vec<usize> = top[..chosen_k].to_vec();
    Ok(SelectionCurve {
        per_k,
        chosen_k,
        chosen_names: chosen
            .iter()
            .map(|&j| data.feature_names()[j].clone())
            .collect(),
        chosen_features: FeatureSubset::new(chosen, p)?,
    })
}
