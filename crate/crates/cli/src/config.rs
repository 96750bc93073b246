//! Command-line flags, the optional TOML config file, and their merge.
//!
//! A flag always wins over the same key in the file; anything still unset
//! falls back to the dataset manifest and then to the built-in defaults.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use clap::Args;
use enet_rank::dataset::{self, CsvOptions, Dataset, LabelMapping};
use enet_rank::elasticnet::{ElasticNetConfig, LambdaRule};
use enet_rank::pipeline::{self, RankingConfig, SelectionConfig};
use enet_rank::report::{alpha_label, ConfigEcho};
use enet_rank::svm::SvmConfig;
use serde::Deserialize;

pub const DEFAULT_ALPHAS: [f64; 3] = [0.5, 0.75, 1.0];
pub const DEFAULT_RUNS: usize = 100;
pub const DEFAULT_REPEATS: usize = 100;

#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// Input CSV with a header row.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Name of the label column (default: from the dataset manifest).
    #[arg(long)]
    pub label_col: Option<String>,
    /// Label symbol mapped to class 0.
    #[arg(long, requires = "positive_label")]
    pub negative_label: Option<String>,
    /// Label symbol mapped to class 1.
    #[arg(long, requires = "negative_label")]
    pub positive_label: Option<String>,
    /// Elastic net mixing weights, comma separated [default: 0.5,0.75,1.0].
    #[arg(long, value_delimiter = ',')]
    pub alpha: Vec<f64>,
    /// Elastic net runs per alpha [default: 100].
    #[arg(long)]
    pub runs: Option<usize>,
    /// SVM repeats per subset size [default: 100].
    #[arg(long)]
    pub repeats: Option<usize>,
    /// Training cases per class (default: manifest, else 80% of the smaller class).
    #[arg(long)]
    pub per_class: Option<usize>,
    /// AUC slack when choosing the subset size [default: 0.01].
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Largest subset size K (default: features ever selected, at most 30).
    #[arg(long)]
    pub max_features: Option<usize>,
    /// Master seed; required.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// TOML file with any of the keys above (snake_case).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Cross-validation rule: one_standard_error or min_error.
    #[arg(long, value_parser = parse_rule)]
    pub lambda_rule: Option<LambdaRule>,
    #[arg(long)]
    pub cv_folds: Option<usize>,
    #[arg(long)]
    pub lambda_count: Option<usize>,
    /// SVM penalty C [default: 1].
    #[arg(long)]
    pub svm_cost: Option<f64>,
}

fn parse_rule(s: &str) -> std::result::Result<LambdaRule, String> {
    serde_json::from_value(serde_json::Value::String(s.replace('-', "_")))
        .map_err(|_| format!("unknown rule {s:?}; use one_standard_error or min_error"))
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    data: Option<PathBuf>,
    label_col: Option<String>,
    negative_label: Option<String>,
    positive_label: Option<String>,
    alpha: Option<Vec<f64>>,
    runs: Option<usize>,
    repeats: Option<usize>,
    per_class: Option<usize>,
    epsilon: Option<f64>,
    max_features: Option<usize>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    jobs: Option<usize>,
    lambda_rule: Option<LambdaRule>,
    cv_folds: Option<usize>,
    lambda_count: Option<usize>,
    svm_cost: Option<f64>,
}

impl FileConfig {
    /// Relative paths in the file are taken relative to the file itself.
    fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: FileConfig =
            toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut cfg.data, &mut cfg.out].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }
}

/// Fully resolved settings of a run together with the loaded dataset.
#[derive(Debug)]
pub struct Settings {
    pub data_path: PathBuf,
    pub dataset: Dataset,
    pub label_col: String,
    pub mapping: Option<LabelMapping>,
    pub alphas: Vec<f64>,
    pub runs: usize,
    pub repeats: usize,
    pub per_class: usize,
    pub epsilon: f64,
    pub max_features: Option<usize>,
    pub seed: u64,
    pub out: PathBuf,
    pub lambda_rule: LambdaRule,
    pub cv_folds: usize,
    pub lambda_count: usize,
    pub svm_cost: f64,
}

/// Worker count requested by flags or config file, without loading data.
pub fn requested_jobs(args: &RunArgs) -> Result<Option<usize>> {
    let file = match &args.config {
        Some(path) => FileConfig::read(path)?,
        None => FileConfig::default(),
    };
    let jobs = args.jobs.or(file.jobs);
    if jobs == Some(0) {
        bail!("--jobs must be at least 1");
    }
    Ok(jobs)
}

impl Settings {
    pub fn resolve(args: &RunArgs) -> Result<Self> {
        let file = match &args.config {
            Some(path) => FileConfig::read(path)?,
            None => FileConfig::default(),
        };
        let data_path = args
            .data
            .clone()
            .or(file.data)
            .context("no dataset given; pass --data")?;
        let manifest = dataset::load_manifest(&data_path)?.unwrap_or_default();

        let label_col = args
            .label_col
            .clone()
            .or(file.label_col)
            .or_else(|| manifest.label_column.clone())
            .context("no label column given; pass --label-col")?;
        let negative = args.negative_label.clone().or(file.negative_label);
        let positive = args.positive_label.clone().or(file.positive_label);
        let mapping = match (negative, positive) {
            (Some(negative), Some(positive)) => Some(LabelMapping { negative, positive }),
            (None, None) => manifest.label_mapping(),
            _ => bail!("negative_label and positive_label must be given together"),
        };
        let dataset = dataset::load_csv_with(
            &data_path,
            &CsvOptions {
                label_column: label_col.clone(),
                mapping: mapping.clone(),
                name: None,
            },
        )?;

        let alphas = if !args.alpha.is_empty() {
            args.alpha.clone()
        } else {
            file.alpha.unwrap_or_else(|| DEFAULT_ALPHAS.to_vec())
        };
        check_alphas(&alphas)?;

        let per_class = match args.per_class.or(file.per_class).or(manifest.per_class) {
            Some(k) => k,
            None => pipeline::default_per_class(
                dataset.class_counts(),
                pipeline::DEFAULT_TRAIN_FRACTION,
            ),
        };
        let settings = Settings {
            data_path,
            label_col,
            mapping,
            alphas,
            runs: args.runs.or(file.runs).unwrap_or(DEFAULT_RUNS),
            repeats: args.repeats.or(file.repeats).unwrap_or(DEFAULT_REPEATS),
            per_class,
            epsilon: args
                .epsilon
                .or(file.epsilon)
                .unwrap_or(pipeline::DEFAULT_EPSILON),
            max_features: args.max_features.or(file.max_features),
            seed: args
                .seed
                .or(file.seed)
                .context("a master seed is required; pass --seed")?,
            out: args
                .out
                .clone()
                .or(file.out)
                .unwrap_or_else(|| PathBuf::from(".")),
            lambda_rule: args.lambda_rule.or(file.lambda_rule).unwrap_or_default(),
            cv_folds: args
                .cv_folds
                .or(file.cv_folds)
                .unwrap_or(ElasticNetConfig::default().cv_folds),
            lambda_count: args
                .lambda_count
                .or(file.lambda_count)
                .unwrap_or(ElasticNetConfig::default().lambda_count),
            svm_cost: args
                .svm_cost
                .or(file.svm_cost)
                .unwrap_or(SvmConfig::default().cost),
            dataset,
        };
        settings.check()?;
        Ok(settings)
    }

    fn check(&self) -> Result<()> {
        ensure!(self.runs >= 1, "--runs must be at least 1");
        ensure!(self.repeats >= 1, "--repeats must be at least 1");
        ensure!(self.per_class >= 1, "--per-class must be at least 1");
        ensure!(
            self.epsilon >= 0.0 && self.epsilon.is_finite(),
            "--epsilon must be a finite value >= 0"
        );
        self.elastic_net().validate()?;
        self.selection_config().svm.validate()?;
        Ok(())
    }

    pub fn elastic_net(&self) -> ElasticNetConfig {
        ElasticNetConfig {
            lambda_rule: self.lambda_rule,
            cv_folds: self.cv_folds,
            lambda_count: self.lambda_count,
            ..ElasticNetConfig::default()
        }
    }

    pub fn ranking_config(&self, alpha: f64) -> RankingConfig {
        RankingConfig {
            alpha,
            runs: self.runs,
            per_class: Some(self.per_class),
            elastic_net: self.elastic_net(),
            ..RankingConfig::default()
        }
    }

    pub fn selection_config(&self) -> SelectionConfig {
        SelectionConfig {
            max_features: self.max_features,
            repeats: self.repeats,
            per_class: Some(self.per_class),
            epsilon: self.epsilon,
            svm: SvmConfig {
                cost: self.svm_cost,
                ..SvmConfig::default()
            },
            ..SelectionConfig::default()
        }
    }

    pub fn echo(&self) -> ConfigEcho {
        ConfigEcho {
            dataset: self.data_path.display().to_string(),
            dataset_name: self.dataset.name().to_string(),
            label_column: self.label_col.clone(),
            negative_label: self.mapping.as_ref().map(|m| m.negative.clone()),
            positive_label: self.mapping.as_ref().map(|m| m.positive.clone()),
            alphas: self.alphas.clone(),
            runs: self.runs,
            repeats: self.repeats,
            per_class: self.per_class,
            epsilon: self.epsilon,
            max_features: self.max_features,
            seed: self.seed,
            lambda_rule: self.lambda_rule,
            cv_folds: self.cv_folds,
            lambda_count: self.lambda_count,
            svm_cost: self.svm_cost,
        }
    }
}

fn check_alphas(alphas: &[f64]) -> Result<()> {
    let mut labels = Vec::new();
    for &a in alphas {
        ensure!(a > 0.0 && a <= 1.0, "alpha {a} outside (0, 1]");
        let label = alpha_label(a);
        ensure!(
            !labels.contains(&label),
            "alpha values collide at two decimals ({label})"
        );
        labels.push(label);
    }
    ensure!(!labels.is_empty(), "no alpha values given");
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_names() {
        assert_eq!(parse_rule("min_error"), Ok(LambdaRule::MinError));
        assert_eq!(
            parse_rule("one-standard-error"),
            Ok(LambdaRule::OneStandardError)
        );
        assert!(parse_rule("best").is_err());
    }

    #[test]
    fn alpha_checks() {
        assert!(check_alphas(&[0.5, 0.75, 1.0]).is_ok());
        assert!(check_alphas(&[0.0]).is_err());
        assert!(check_alphas(&[1.5]).is_err());
        assert!(check_alphas(&[0.5, 0.501]).is_err());
        assert!(check_alphas(&[]).is_err());
    }
}
