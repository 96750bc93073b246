use std::path::Path;

use enet_rank::dataset::{load_csv, synthesize, Dataset, SynthSpec};
use enet_rank::metrics::{MetricStats, Summary};
use enet_rank::pipeline::{
    balanced_split, baseline_elastic_net, baseline_from_runs, choose_subset, default_per_class,
    elastic_net_runs, incremental_select, mix_seed, rank_features, ranking_from_runs,
    FeatureRanking, RankingConfig, SelectionConfig,
};

fn synthetic(seed: u64) -> Dataset {
    synthesize(&SynthSpec {
        seed,
        ..SynthSpec::default()
    })
    .unwrap()
}

fn ranking_config(runs: usize) -> RankingConfig {
    RankingConfig {
        runs,
        ..RankingConfig::default()
    }
}

fn selection_config(repeats: usize, max_features: Option<usize>) -> SelectionConfig {
    SelectionConfig {
        repeats,
        max_features,
        ..SelectionConfig::default()
    }
}

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap()
        .install(f)
}

fn stats(auc: f64) -> MetricStats {
    let s = Summary {
        mean: auc,
        std: 0.0,
    };
    MetricStats {
        auc: s,
        acc: s,
        sen: s,
        spe: s,
        score_auc: s,
        sample_count: 1,
    }
}

#[test]
fn splits_are_balanced_and_disjoint() {
    let d = synthesize(&SynthSpec {
        class_balance: 0.3,
        ..SynthSpec::default()
    })
    .unwrap();
    let [neg, pos] = d.class_counts();
    let per_class = default_per_class(d.class_counts(), 0.8);
    assert_eq!(per_class, 48);
    for seed in 0..50 {
        let plan = balanced_split(&d, per_class, seed).unwrap();
        plan.validate(&d).unwrap();
        assert_eq!(plan.train_indices.len(), 2 * per_class);
        assert_eq!(
            plan.train_indices.len() + plan.test_indices.len(),
            neg + pos
        );
        let test_pos = d
            .labels_at(&plan.test_indices)
            .iter()
            .filter(|&&l| l == 1)
            .count();
        assert_eq!(test_pos, pos - per_class);
    }
    assert!(balanced_split(&d, pos + 1, 0).is_err());
    assert_eq!(
        balanced_split(&d, 10, 3).unwrap(),
        balanced_split(&d, 10, 3).unwrap()
    );
    assert_ne!(
        balanced_split(&d, 10, 3).unwrap(),
        balanced_split(&d, 10, 4).unwrap()
    );
}

#[test]
fn seed_streams_are_distinct() {
    let mut seen = std::collections::HashSet::new();
    for stream in 1..3 {
        for i in 0..1000 {
            assert!(seen.insert(mix_seed(42, stream, i)));
        }
    }
    assert_ne!(mix_seed(1, 1, 0), mix_seed(2, 1, 0));
}

#[test]
fn results_do_not_depend_on_pool_size() {
    let d = synthetic(1);
    let run = || {
        let ranking = rank_features(&d, &ranking_config(12), 7).unwrap();
        let curve = incremental_select(&d, &ranking, &selection_config(8, Some(6)), 7).unwrap();
        (ranking, curve)
    };
    let one = in_pool(1, run);
    let three = in_pool(3, run);
    assert_eq!(one, three);
    assert_eq!(one, in_pool(1, run));
}

#[test]
fn planted_support_tops_the_ranking() {
    for seed in [2, 9] {
        let d = synthetic(seed);
        let ranking = rank_features(&d, &ranking_config(20), seed).unwrap();
        let mut top: Vec<usize> = ranking.order[..5].to_vec();
        top.sort_unstable();
        assert_eq!(top, [0, 1, 2, 3, 4], "seed {seed}");
        assert!(ranking.order[..5]
            .iter()
            .all(|&j| ranking.frequencies[j] >= 0.9));
    }
}

#[test]
fn frequencies_are_counts_over_runs() {
    let d = synthetic(3);
    let runs = elastic_net_runs(&d, &ranking_config(15), 11).unwrap();
    let ranking = ranking_from_runs(&d, &runs).unwrap();
    assert_eq!(ranking.runs, 15);
    for (c, f) in ranking.counts.iter().zip(&ranking.frequencies) {
        assert_eq!((f * 15.0).round() as usize, *c);
    }
    let total: usize = runs.iter().map(|r| r.selected.len()).sum();
    assert_eq!(ranking.counts.iter().sum::<usize>(), total);
    let base = baseline_from_runs(&d, &runs).unwrap();
    assert_eq!(base.feature_counts.len(), 15);
    assert_eq!(base.involved_feature_count, ranking.ever_selected());
    assert_eq!(
        base,
        baseline_elastic_net(&d, &ranking_config(15), 11).unwrap()
    );
}

#[test]
fn single_run_baseline_has_no_spread() {
    let d = synthetic(4);
    let base = baseline_elastic_net(&d, &ranking_config(1), 5).unwrap();
    assert_eq!(base.std_feature_count, 0.0);
    assert_eq!(base.feature_count_range.0, base.feature_count_range.1);
    assert_eq!(base.metrics.auc.std, 0.0);
    assert_eq!(base.metrics.sample_count, 1);
}

#[test]
fn ranking_follows_column_permutation() {
    let d = synthetic(5);
    let perm: Vec<usize> = (0..d.n_features()).rev().collect();
    let permuted = d.select_columns(&perm).unwrap();
    let a = rank_features(&d, &ranking_config(10), 3).unwrap();
    let b = rank_features(&permuted, &ranking_config(10), 3).unwrap();
    for (k, &j) in perm.iter().enumerate() {
        assert_eq!(b.counts[k], a.counts[j], "feature {}", d.feature_names()[j]);
    }
}

#[test]
fn one_feature_curve_has_one_point() {
    let d = synthetic(6);
    let ranking = rank_features(&d, &ranking_config(5), 1).unwrap();
    let curve = incremental_select(&d, &ranking, &selection_config(5, Some(1)), 1).unwrap();
    assert_eq!(curve.per_k.len(), 1);
    assert_eq!(curve.chosen_k, 1);
    assert_eq!(curve.chosen_names, ranking.top_names(1));
}

#[test]
fn larger_epsilon_never_picks_more_features() {
    let d = synthetic(7);
    let ranking = rank_features(&d, &ranking_config(10), 2).unwrap();
    let curve = incremental_select(&d, &ranking, &selection_config(10, Some(10)), 2).unwrap();
    let mut previous = usize::MAX;
    for eps in [0.0, 0.005, 0.01, 0.02, 0.05, 0.1, 1.0] {
        let k = choose_subset(&curve.per_k, eps).unwrap();
        assert!(k <= previous);
        previous = k;
    }
    assert_eq!(previous, 1);
    assert_eq!(curve.chosen_k, choose_subset(&curve.per_k, 0.01).unwrap());
}

#[test]
fn choose_subset_examples() {
    let curve: Vec<MetricStats> = [0.80, 0.90, 0.91, 0.915, 0.90].map(stats).to_vec();
    assert_eq!(choose_subset(&curve, 0.01).unwrap(), 3);
    assert_eq!(choose_subset(&curve, 0.0).unwrap(), 4);
    assert_eq!(choose_subset(&curve, 0.2).unwrap(), 1);
    assert!(choose_subset(&[], 0.01).is_err());
}

#[test]
fn selection_input_checks() {
    let d = synthetic(8);
    let ranking = rank_features(&d, &ranking_config(3), 1).unwrap();
    assert!(incremental_select(&d, &ranking, &selection_config(3, Some(0)), 1).is_err());
    assert!(incremental_select(&d, &ranking, &selection_config(3, Some(51)), 1).is_err());
    assert!(incremental_select(&d, &ranking, &selection_config(0, Some(2)), 1).is_err());
    let renamed = FeatureRanking::from_counts(3, vec!["x".into(); 50], vec![0; 50]).unwrap();
    assert!(incremental_select(&d, &renamed, &selection_config(3, Some(2)), 1).is_err());
    assert!(FeatureRanking::from_counts(3, vec!["x".into()], vec![4]).is_err());
    assert!(rank_features(&d, &ranking_config(0), 1).is_err());
}

#[test]
fn wdbc_feature_counts_vary() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/wdbc.csv");
    let d = load_csv(path, "diagnosis").unwrap();
    assert_eq!((d.n_cases(), d.n_features()), (569, 30));
    let base = baseline_elastic_net(&d, &ranking_config(8), 1).unwrap();
    assert!(base.std_feature_count > 0.0);
    assert!(base.metrics.auc.mean > 0.85);
}
