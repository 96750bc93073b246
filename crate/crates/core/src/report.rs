//! Serialized run outputs: per-alpha fragments written by the individual
//! commands and the consolidated report merged from them.
//!
//! Reports contain no timestamps or host details, so identical inputs give
//! byte-identical files.

use serde::{Deserialize, Serialize};

use crate::elasticnet::LambdaRule;
use crate::error::{Error, Result};
use crate::metrics::{MetricStats, Summary};
use crate::pipeline::{BaselineStats, FeatureRanking, SelectionCurve};
use crate::textfmt;

pub const SCHEMA_VERSION: &str = "1.0.0";
pub const TOOL_NAME: &str = "enet-rank";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Number of ranked features shown in the top-features tables.
pub const TOP_FEATURES: usize = 10;

/// Everything needed to re-execute a run. The worker count and output
/// directory are left out since they do not affect results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigEcho {
    pub dataset: String,
    pub dataset_name: String,
    pub label_column: String,
    pub negative_label: Option<String>,
    pub positive_label: Option<String>,
    pub alphas: Vec<f64>,
    pub runs: usize,
    pub repeats: usize,
    pub per_class: usize,
    pub epsilon: f64,
    pub max_features: Option<usize>,
    pub seed: u64,
    pub lambda_rule: LambdaRule,
    pub cv_folds: usize,
    pub lambda_count: usize,
    pub svm_cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToolInfo {
    pub name: String,
    pub version: String,
}

impl ToolInfo {
    pub fn current() -> Self {
        Self {
            name: TOOL_NAME.to_string(),
            version: TOOL_VERSION.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetInfo {
    pub name: String,
    pub n_cases: usize,
    pub n_features: usize,
    pub class_counts: [usize; 2],
}

/// `ranking_<alpha>.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RankingFragment {
    pub schema_version: String,
    pub tool: ToolInfo,
    pub config: ConfigEcho,
    pub dataset: DatasetInfo,
    pub alpha: f64,
    pub ranking: FeatureRanking,
}

/// `baseline_<alpha>.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaselineFragment {
    pub schema_version: String,
    pub tool: ToolInfo,
    pub config: ConfigEcho,
    pub dataset: DatasetInfo,
    pub alpha: f64,
    pub baseline: BaselineStats,
}

/// `selection_<alpha>.json`; the per-k curve is also written as CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelectionFragment {
    pub schema_version: String,
    pub tool: ToolInfo,
    pub config: ConfigEcho,
    pub dataset: DatasetInfo,
    pub alpha: f64,
    pub selection: SelectionCurve,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RankedFeature {
    pub rank: usize,
    pub index: usize,
    pub name: String,
    pub count: usize,
    pub frequency: f64,
}

pub fn ranked_features(ranking: &FeatureRanking) -> Vec<RankedFeature> {
    ranking
        .order
        .iter()
        .enumerate()
        .map(|(i, &j)| RankedFeature {
            rank: i + 1,
            index: j,
            name: ranking.feature_names[j].clone(),
            count: ranking.counts[j],
            frequency: ranking.frequencies[j],
        })
        .collect()
}

/// One "method | feature No. | AUC | ACC | SEN | SPE" row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComparisonRow {
    pub method: String,
    pub feature_count: f64,
    pub auc: Summary,
    pub acc: Summary,
    pub sen: Summary,
    pub spe: Summary,
}

impl ComparisonRow {
    fn new(method: String, feature_count: f64, m: &MetricStats) -> Self {
        Self {
            method,
            feature_count,
            auc: m.auc,
            acc: m.acc,
            sen: m.sen,
            spe: m.spe,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurvePoint {
    pub k: usize,
    pub stats: MetricStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlphaBlock {
    pub alpha: f64,
    pub baseline: BaselineStats,
    pub top_features: Vec<RankedFeature>,
    pub ranking: Vec<RankedFeature>,
    pub curve: Vec<CurvePoint>,
    pub chosen_k: usize,
    pub chosen_features: Vec<String>,
    pub comparison: Vec<ComparisonRow>,
}

impl AlphaBlock {
    pub fn new(
        alpha: f64,
        ranking: &FeatureRanking,
        baseline: BaselineStats,
        selection: &SelectionCurve,
    ) -> Self {
        let ranked = ranked_features(ranking);
        let chosen = &selection.per_k[selection.chosen_k - 1];
        let comparison = vec![
            ComparisonRow::new(
                format!("elastic net (α = {})", alpha_label(alpha)),
                baseline.mean_feature_count,
                &baseline.metrics,
            ),
            ComparisonRow::new("ours".to_string(), selection.chosen_k as f64, chosen),
        ];
        Self {
            alpha,
            top_features: ranked.iter().take(TOP_FEATURES).cloned().collect(),
            ranking: ranked,
            curve: selection
                .per_k
                .iter()
                .enumerate()
                .map(|(i, s)| CurvePoint {
                    k: i + 1,
                    stats: *s,
                })
                .collect(),
            chosen_k: selection.chosen_k,
            chosen_features: selection.chosen_names.clone(),
            comparison,
            baseline,
        }
    }
}

/// Consolidated `report.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunReport {
    pub schema_version: String,
    pub tool: ToolInfo,
    pub config: ConfigEcho,
    pub dataset: DatasetInfo,
    pub alphas: Vec<AlphaBlock>,
}

impl RunReport {
    /// Parses and validates a serialized report.
    pub fn from_json(text: &str) -> Result<Self> {
        let report: RunReport = serde_json::from_str(text)
            .map_err(|e| Error::InvalidArgument(format!("report does not match schema: {e}")))?;
        report.validate()?;
        Ok(report)
    }

    pub fn to_json(&self) -> String {
        textfmt::to_json_pretty(self).expect("report serializes")
    }

    /// Structural invariants beyond what deserialization checks.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if self.schema_version != SCHEMA_VERSION {
            return bad(format!(
                "schema version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            ));
        }
        if self.alphas.is_empty() {
            return bad("report has no alpha blocks".into());
        }
        for block in &self.alphas {
            let label = alpha_label(block.alpha);
            if !(block.alpha > 0.0 && block.alpha <= 1.0) {
                return bad(format!("alpha {label} outside (0, 1]"));
            }
            if block.ranking.len() != self.dataset.n_features {
                return bad(format!(
                    "alpha {label}: ranking length differs from feature count"
                ));
            }
            if block.chosen_k < 1 || block.chosen_k > block.curve.len() {
                return bad(format!("alpha {label}: chosen_k outside curve"));
            }
            if block.chosen_features.len() != block.chosen_k {
                return bad(format!(
                    "alpha {label}: chosen feature list length differs from chosen_k"
                ));
            }
            let top: Vec<&String> = block
                .ranking
                .iter()
                .take(block.chosen_k)
                .map(|r| &r.name)
                .collect();
            if top != block.chosen_features.iter().collect::<Vec<_>>() {
                return bad(format!(
                    "alpha {label}: chosen features are not the ranking prefix"
                ));
            }
            if block.comparison.len() != 2 {
                return bad(format!("alpha {label}: expected two comparison rows"));
            }
            let (lo, hi) = block.baseline.feature_count_range;
            let mean = block.baseline.mean_feature_count;
            if !(lo as f64 <= mean + 1e-12 && mean <= hi as f64 + 1e-12) {
                return bad(format!("alpha {label}: baseline mean outside its range"));
            }
            for r in &block.ranking {
                if !(0.0..=1.0).contains(&r.frequency) {
                    return bad(format!("alpha {label}: frequency outside [0, 1]"));
                }
            }
        }
        Ok(())
    }

    /// Aligned text tables: one baseline and one "ours" row per alpha, the
    /// selected-feature-count distribution, and the top ranked features.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let d = &self.dataset;
        out.push_str(&format!(
            "dataset: {} ({} cases: {} class 0 / {} class 1; {} features)\n",
            d.name, d.n_cases, d.class_counts[0], d.class_counts[1], d.n_features
        ));
        out.push_str(&format!(
            "seed {} | runs {} | repeats {} | per-class {} | epsilon {}\n\n",
            self.config.seed,
            self.config.runs,
            self.config.repeats,
            self.config.per_class,
            self.config.epsilon
        ));

        let header = ["method", "feature No.", "AUC", "ACC", "SEN", "SPE"];
        let mut rows: Vec<[String; 6]> = Vec::new();
        for block in &self.alphas {
            for row in &block.comparison {
                let count = if row.method == "ours" {
                    format!("{}", row.feature_count)
                } else {
                    format!("{:.2}", row.feature_count)
                };
                rows.push([
                    row.method.clone(),
                    count,
                    row.auc.to_string(),
                    row.acc.to_string(),
                    row.sen.to_string(),
                    row.spe.to_string(),
                ]);
            }
        }
        out.push_str(&align(&header, &rows));

        out.push_str("\nselected features per elastic net run: mean±std [range] (involved)\n");
        for block in &self.alphas {
            let b = &block.baseline;
            out.push_str(&format!(
                "  α = {}: {:.2}±{:.2} [{}, {}] ({})\n",
                alpha_label(block.alpha),
                b.mean_feature_count,
                b.std_feature_count,
                b.feature_count_range.0,
                b.feature_count_range.1,
                b.involved_feature_count
            ));
        }

        out.push_str(&format!(
            "\ntop {TOP_FEATURES} features by selection frequency\n"
        ));
        let header = ["rank", "α", "index", "feature", "frequency"];
        let mut rows = Vec::new();
        for block in &self.alphas {
            for f in &block.top_features {
                rows.push([
                    f.rank.to_string(),
                    alpha_label(block.alpha),
                    f.index.to_string(),
                    f.name.clone(),
                    format!("{:.2}", f.frequency),
                ]);
            }
        }
        out.push_str(&align(&header, &rows));
        out
    }
}

/// Alpha as used in file names and tables: two decimals.
pub fn alpha_label(alpha: f64) -> String {
    format!("{alpha:.2}")
}

fn align<const N: usize>(header: &[&str; N], rows: &[[String; N]]) -> String {
    let mut widths = header.map(|h| h.chars().count());
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: Vec<&str>| {
        let mut s = String::new();
        for (i, (cell, w)) in cells.iter().zip(&widths).enumerate() {
            s.push_str(cell);
            if i + 1 < N {
                s.extend(std::iter::repeat_n(' ', w - cell.chars().count() + 2));
            }
        }
        s.push('\n');
        s
    };
    let mut out = line(header.to_vec());
    let total: usize = widths.iter().sum::<usize>() + 2 * (N - 1);
    out.push_str(&"-".repeat(total));
    out.push('\n');
    for row in rows {
        out.push_str(&line(row.iter().map(String::as_str).collect()));
    }
    out
}
