//! AUC, accuracy, sensitivity and specificity, plus mean ± std aggregation
//! over repeated runs. Class 1 (malignant) is the positive class.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Area under the ROC curve as the Mann-Whitney statistic: the fraction of
/// (positive, negative) pairs ordered correctly, ties counting one half.
pub fn roc_auc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} scores but {} labels",
            scores.len(),
            labels.len()
        )));
    }
    let positives = labels.iter().filter(|&&l| l == 1).count();
    let negatives = labels.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::UndefinedMetric("AUC"));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    // Sum of 1-based midranks of the positives.
    let mut rank_sum = 0.0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        let midrank = (start + 1 + end) as f64 / 2.0;
        let tied_pos = order[start..end]
            .iter()
            .filter(|&&i| labels[i] == 1)
            .count();
        rank_sum += midrank * tied_pos as f64;
        start = end;
    }
    let p = positives as f64;
    let u = rank_sum - p * (p + 1.0) / 2.0;
    Ok(u / (p * negatives as f64))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl ConfusionCounts {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn accuracy(&self) -> Option<f64> {
        ratio(self.tp + self.tn, self.total())
    }

    pub fn sensitivity(&self) -> Option<f64> {
        ratio(self.tp, self.tp + self.fn_)
    }

    pub fn specificity(&self) -> Option<f64> {
        ratio(self.tn, self.tn + self.fp)
    }
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

pub fn confusion(predicted: &[u8], labels: &[u8]) -> Result<ConfusionCounts> {
    if predicted.len() != labels.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} predictions but {} labels",
            predicted.len(),
            labels.len()
        )));
    }
    let mut c = ConfusionCounts::default();
    for (&p, &l) in predicted.iter().zip(labels) {
        match (p == 1, l == 1) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, false) => c.tn += 1,
            (false, true) => c.fn_ += 1,
        }
    }
    Ok(c)
}

/// Metrics of one evaluation.
///
/// `auc` is the ROC area of the hard class predictions, which equals
/// `(sen + spe) / 2`; `score_auc` is the ROC area of the continuous scores.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub auc: f64,
    pub acc: f64,
    pub sen: f64,
    pub spe: f64,
    pub score_auc: f64,
}

/// Scores an evaluation set; fails when it lacks a class.
pub fn evaluate(scores: &[f64], predicted: &[u8], labels: &[u8]) -> Result<RunMetrics> {
    let c = confusion(predicted, labels)?;
    let hard: Vec<f64> = predicted.iter().map(|&p| f64::from(p)).collect();
    Ok(RunMetrics {
        auc: roc_auc(&hard, labels)?,
        acc: c.accuracy().ok_or(Error::UndefinedMetric("accuracy"))?,
        sen: c
            .sensitivity()
            .ok_or(Error::UndefinedMetric("sensitivity"))?,
        spe: c
            .specificity()
            .ok_or(Error::UndefinedMetric("specificity"))?,
        score_auc: roc_auc(scores, labels)?,
    })
}

/// Mean and sample standard deviation (`n - 1` denominator, 0 for one value).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub std: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyRows);
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() > 1 {
            (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Ok(Self { mean, std })
    }
}

impl std::fmt::Display for Summary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:.2}±{:.2}", self.mean, self.std)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricStats {
    pub auc: Summary,
    pub acc: Summary,
    pub sen: Summary,
    pub spe: Summary,
    pub score_auc: Summary,
    pub sample_count: usize,
}

pub fn aggregate(per_run: &[RunMetrics]) -> Result<MetricStats> {
    let col = |f: fn(&RunMetrics) -> f64| Summary::of(&per_run.iter().map(f).collect::<Vec<_>>());
    Ok(MetricStats {
        auc: col(|m| m.auc)?,
        acc: col(|m| m.acc)?,
        sen: col(|m| m.sen)?,
        spe: col(|m| m.spe)?,
        score_auc: col(|m| m.score_auc)?,
        sample_count: per_run.len(),
    })
}
