//! The subcommands. Each one resolves its settings, computes, writes its
//! files, and reads every file back to check it before returning.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, ensure, Context, Result};
use enet_rank::dataset::{self, DatasetManifest, LabelMapping, SynthSpec};
use enet_rank::pipeline::{self, FeatureRanking};
use enet_rank::report::{
    alpha_label, ranked_features, AlphaBlock, BaselineFragment, ConfigEcho, DatasetInfo,
    RankingFragment, RunReport, SelectionFragment, ToolInfo, SCHEMA_VERSION,
};
use enet_rank::textfmt::{self, g17};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::config::Settings;

pub const SYNTH_LABEL_COLUMN: &str = "label";

pub fn ranking_file(alpha: f64) -> String {
    format!("ranking_{}.json", alpha_label(alpha))
}

pub fn frequency_file(alpha: f64) -> String {
    format!("frequency_{}.csv", alpha_label(alpha))
}

pub fn baseline_file(alpha: f64) -> String {
    format!("baseline_{}.json", alpha_label(alpha))
}

pub fn selection_file(alpha: f64) -> String {
    format!("selection_{}.json", alpha_label(alpha))
}

pub fn curve_file(alpha: f64) -> String {
    format!("curve_{}.csv", alpha_label(alpha))
}

pub const REPORT_JSON: &str = "report.json";
pub const REPORT_TEXT: &str = "report.txt";
/// Wall-clock time of `run`; kept apart so `report.json` stays reproducible.
pub const TIMING_JSON: &str = "timing.json";

fn dataset_info(settings: &Settings) -> DatasetInfo {
    let d = &settings.dataset;
    DatasetInfo {
        name: d.name().to_string(),
        n_cases: d.n_cases(),
        n_features: d.n_features(),
        class_counts: d.class_counts(),
    }
}

fn prepare_out(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

/// Writes pretty JSON and checks that it parses back to the same value.
fn write_json<T>(path: &Path, value: &T) -> Result<()>
where
    T: Serialize + DeserializeOwned + PartialEq,
{
    let text = textfmt::to_json_pretty(value)?;
    fs::write(path, &text).with_context(|| format!("writing {}", path.display()))?;
    let back: T = read_json(path)?;
    ensure!(
        back == *value,
        "{} does not read back to the written value",
        path.display()
    );
    Ok(())
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w =
        csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()?;
    let mut r = csv::Reader::from_path(path)?;
    let count = r
        .records()
        .collect::<std::result::Result<Vec<_>, _>>()?
        .len();
    ensure!(
        count == rows.len(),
        "{} has {count} rows, expected {}",
        path.display(),
        rows.len()
    );
    Ok(())
}

fn ranking_fragment(settings: &Settings, alpha: f64, ranking: FeatureRanking) -> RankingFragment {
    RankingFragment {
        schema_version: SCHEMA_VERSION.to_string(),
        tool: ToolInfo::current(),
        config: settings.echo(),
        dataset: dataset_info(settings),
        alpha,
        ranking,
    }
}

fn write_ranking(settings: &Settings, fragment: &RankingFragment) -> Result<()> {
    let alpha = fragment.alpha;
    write_json(&settings.out.join(ranking_file(alpha)), fragment)?;
    let rows: Vec<Vec<String>> = ranked_features(&fragment.ranking)
        .into_iter()
        .map(|f| {
            vec![
                f.name,
                f.count.to_string(),
                g17(f.frequency),
                f.rank.to_string(),
            ]
        })
        .collect();
    write_csv(
        &settings.out.join(frequency_file(alpha)),
        &["feature", "count", "frequency", "rank"],
        &rows,
    )
}

fn write_baseline(
    settings: &Settings,
    alpha: f64,
    baseline: pipeline::BaselineStats,
) -> Result<()> {
    let fragment = BaselineFragment {
        schema_version: SCHEMA_VERSION.to_string(),
        tool: ToolInfo::current(),
        config: settings.echo(),
        dataset: dataset_info(settings),
        alpha,
        baseline,
    };
    write_json(&settings.out.join(baseline_file(alpha)), &fragment)
}

fn select_and_write(settings: &Settings, alpha: f64, ranking: &FeatureRanking) -> Result<()> {
    let curve = pipeline::incremental_select(
        &settings.dataset,
        ranking,
        &settings.selection_config(),
        settings.seed,
    )?;
    let rows: Vec<Vec<String>> = curve
        .per_k
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let mut row = vec![(i + 1).to_string()];
            for m in [s.auc, s.acc, s.sen, s.spe, s.score_auc] {
                row.push(g17(m.mean));
                row.push(g17(m.std));
            }
            row
        })
        .collect();
    write_csv(
        &settings.out.join(curve_file(alpha)),
        &[
            "k",
            "auc_mean",
            "auc_std",
            "acc_mean",
            "acc_std",
            "sen_mean",
            "sen_std",
            "spe_mean",
            "spe_std",
            "score_auc_mean",
            "score_auc_std",
        ],
        &rows,
    )?;
    let fragment = SelectionFragment {
        schema_version: SCHEMA_VERSION.to_string(),
        tool: ToolInfo::current(),
        config: settings.echo(),
        dataset: dataset_info(settings),
        alpha,
        selection: curve,
    };
    write_json(&settings.out.join(selection_file(alpha)), &fragment)
}

/// `rank`: ranking JSON and frequency CSV per alpha.
pub fn rank(settings: &Settings) -> Result<()> {
    prepare_out(&settings.out)?;
    for &alpha in &settings.alphas {
        let ranking = pipeline::rank_features(
            &settings.dataset,
            &settings.ranking_config(alpha),
            settings.seed,
        )?;
        write_ranking(settings, &ranking_fragment(settings, alpha, ranking))?;
    }
    Ok(())
}

/// `baseline`: elastic net feature-count distribution and metrics per alpha.
pub fn baseline(settings: &Settings) -> Result<()> {
    prepare_out(&settings.out)?;
    for &alpha in &settings.alphas {
        let stats = pipeline::baseline_elastic_net(
            &settings.dataset,
            &settings.ranking_config(alpha),
            settings.seed,
        )?;
        write_baseline(settings, alpha, stats)?;
    }
    Ok(())
}

/// `select`: incremental selection over a ranking per alpha. The ranking is
/// read from `ranking` when given (single alpha only), else from the output
/// directory.
pub fn select(settings: &Settings, ranking: Option<&Path>) -> Result<()> {
    if ranking.is_some() && settings.alphas.len() != 1 {
        bail!("--ranking needs exactly one --alpha");
    }
    prepare_out(&settings.out)?;
    for &alpha in &settings.alphas {
        let path = match ranking {
            Some(p) => p.to_path_buf(),
            None => settings.out.join(ranking_file(alpha)),
        };
        ensure!(
            path.is_file(),
            "ranking file {} not found; run `rank` first",
            path.display()
        );
        let fragment: RankingFragment = read_json(&path)?;
        ensure!(
            alpha_label(fragment.alpha) == alpha_label(alpha),
            "{} holds alpha {}, not {}",
            path.display(),
            alpha_label(fragment.alpha),
            alpha_label(alpha)
        );
        ensure!(
            fragment.ranking.feature_names == settings.dataset.feature_names(),
            "{} was computed on different features than {}",
            path.display(),
            settings.data_path.display()
        );
        select_and_write(settings, alpha, &fragment.ranking)?;
    }
    Ok(())
}

/// `run`: ranking, baseline and selection for every alpha, then the report.
/// The ranking and baseline share one set of elastic net runs.
pub fn run_all(settings: &Settings) -> Result<()> {
    let start = Instant::now();
    prepare_out(&settings.out)?;
    for &alpha in &settings.alphas {
        let runs = pipeline::elastic_net_runs(
            &settings.dataset,
            &settings.ranking_config(alpha),
            settings.seed,
        )?;
        let ranking = pipeline::ranking_from_runs(&settings.dataset, &runs)?;
        write_baseline(
            settings,
            alpha,
            pipeline::baseline_from_runs(&settings.dataset, &runs)?,
        )?;
        let fragment = ranking_fragment(settings, alpha, ranking);
        write_ranking(settings, &fragment)?;
        select_and_write(settings, alpha, &fragment.ranking)?;
    }
    report(&settings.out)?;
    let timing = serde_json::json!({
        "elapsed_seconds": start.elapsed().as_secs_f64(),
        "threads": rayon::current_num_threads(),
    });
    fs::write(
        settings.out.join(TIMING_JSON),
        textfmt::to_json_pretty(&timing)?,
    )?;
    Ok(())
}

fn fragment_config<'a>(
    reference: &mut Option<(&'a ConfigEcho, String)>,
    config: &'a ConfigEcho,
    file: String,
) -> Result<()> {
    match reference {
        None => *reference = Some((config, file)),
        Some((first, first_file)) => ensure!(
            *first == config,
            "{file} was produced with a different configuration than {first_file}"
        ),
    }
    Ok(())
}

/// `report`: merges the fragments in `dir` into `report.json` and
/// `report.txt`. The alpha list comes from the fragments' configuration.
pub fn report(dir: &Path) -> Result<()> {
    let rankings = list_fragments(dir, "ranking_")?;
    let Some(first) = rankings.first() else {
        bail!("no ranking_<alpha>.json fragments in {}", dir.display());
    };
    let probe: RankingFragment = read_json(first)?;
    let alphas = probe.config.alphas.clone();

    let mut missing = Vec::new();
    for &alpha in &alphas {
        for name in [
            ranking_file(alpha),
            baseline_file(alpha),
            selection_file(alpha),
        ] {
            if !dir.join(&name).is_file() {
                missing.push(name);
            }
        }
    }
    if !missing.is_empty() {
        bail!(
            "missing fragments in {}: {}",
            dir.display(),
            missing.join(", ")
        );
    }

    let mut loaded = Vec::new();
    for &alpha in &alphas {
        let r: RankingFragment = read_json(&dir.join(ranking_file(alpha)))?;
        let b: BaselineFragment = read_json(&dir.join(baseline_file(alpha)))?;
        let s: SelectionFragment = read_json(&dir.join(selection_file(alpha)))?;
        loaded.push((alpha, r, b, s));
    }
    let mut reference = None;
    for (alpha, r, b, s) in &loaded {
        fragment_config(&mut reference, &r.config, ranking_file(*alpha))?;
        fragment_config(&mut reference, &b.config, baseline_file(*alpha))?;
        fragment_config(&mut reference, &s.config, selection_file(*alpha))?;
        for (file, version) in [
            (ranking_file(*alpha), &r.schema_version),
            (baseline_file(*alpha), &b.schema_version),
            (selection_file(*alpha), &s.schema_version),
        ] {
            ensure!(
                version == SCHEMA_VERSION,
                "{file} has schema version {version}, expected {SCHEMA_VERSION}"
            );
        }
        ensure!(
            s.selection.chosen_names == r.ranking.top_names(s.selection.chosen_k),
            "{} does not match {}",
            selection_file(*alpha),
            ranking_file(*alpha)
        );
    }

    let blocks = loaded
        .iter()
        .map(|(alpha, r, b, s)| {
            AlphaBlock::new(*alpha, &r.ranking, b.baseline.clone(), &s.selection)
        })
        .collect();
    let report = RunReport {
        schema_version: SCHEMA_VERSION.to_string(),
        tool: ToolInfo::current(),
        config: probe.config.clone(),
        dataset: probe.dataset.clone(),
        alphas: blocks,
    };
    report.validate()?;

    let json_path = dir.join(REPORT_JSON);
    let json = report.to_json();
    fs::write(&json_path, &json).with_context(|| format!("writing {}", json_path.display()))?;
    let back = RunReport::from_json(&fs::read_to_string(&json_path)?)?;
    ensure!(back == report, "{} does not read back", json_path.display());
    let text_path = dir.join(REPORT_TEXT);
    fs::write(&text_path, report.render_text())
        .with_context(|| format!("writing {}", text_path.display()))?;
    Ok(())
}

fn list_fragments(dir: &Path, prefix: &str) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).with_context(|| format!("reading {}", dir.display()))? {
        let path = entry?.path();
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("");
        if name.starts_with(prefix) && name.ends_with(".json") {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

/// `synth`: writes `<name>.csv` and its manifest into `dir`.
pub fn synth(spec: &SynthSpec, dir: &Path, name: &str) -> Result<PathBuf> {
    let data = dataset::synthesize(spec)?;
    prepare_out(dir)?;
    let csv_path = dir.join(format!("{name}.csv"));
    let mapping = LabelMapping {
        negative: "0".into(),
        positive: "1".into(),
    };
    dataset::write_csv(&data, &csv_path, SYNTH_LABEL_COLUMN, &mapping)?;
    let manifest = DatasetManifest {
        name: Some(name.to_string()),
        label_column: Some(SYNTH_LABEL_COLUMN.to_string()),
        negative_label: Some(mapping.negative.clone()),
        positive_label: Some(mapping.positive.clone()),
        synth: Some(spec.clone()),
        ..DatasetManifest::default()
    };
    let manifest_path = dataset::manifest_path(&csv_path);
    manifest.write(&manifest_path)?;

    let back = dataset::load_csv(&csv_path, SYNTH_LABEL_COLUMN)?;
    ensure!(
        back.features() == data.features() && back.labels() == data.labels(),
        "{} does not read back to the generated data",
        csv_path.display()
    );
    ensure!(
        DatasetManifest::read(&manifest_path)? == manifest,
        "{} does not read back",
        manifest_path.display()
    );
    Ok(csv_path)
}
