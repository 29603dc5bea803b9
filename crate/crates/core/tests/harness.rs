use std::fs;
use std::path::Path;

use vtools_core::agent::{AttemptEntry, EpisodeLog, SsupConfig, Variant};
use vtools_core::harness::io::{self, MetricsRow, AGGREGATE_LEVEL};
use vtools_core::harness::sweep::{self, ParamAxis};
use vtools_core::harness::{
    compare, cumulative_curve, episode_seed, load_level_dir, run_area, run_experiment, write_outputs, CellResult,
    ExperimentConfig, LevelMetrics, DEFAULT_RUNS,
};
use vtools_core::level::Action;
use vtools_core::{bundled, HarnessError};

fn fake_log(solved_at: Option<usize>, max_attempts: usize) -> EpisodeLog {
    let used = solved_at.unwrap_or(max_attempts);
    let attempts = (1..=used)
        .map(|i| AttemptEntry {
            action: Action::new(0, i as f64, 0.0),
            reward: 0.0,
            solved: Some(i) == solved_at,
            min_goal_distance: 1.0,
            proposals: Vec::new(),
        })
        .collect();
    EpisodeLog {
        level: "l".into(),
        variant: Variant::Full,
        seed: 0,
        attempts,
        solved: solved_at.is_some(),
        attempts_used: used,
        simulations: 0,
    }
}

fn quick_config() -> ExperimentConfig {
    ExperimentConfig {
        variants: vec![Variant::Full, Variant::Guessing],
        runs: 4,
        base_seed: 7,
        agent: SsupConfig { max_attempts: 6, ..SsupConfig::default() },
        out_dir: None,
    }
}

fn quick_levels() -> Vec<vtools_core::level::LevelSpec> {
    ["easy_table", "shafts"].iter().map(|n| bundled::load(n).unwrap().unwrap()).collect()
}

#[test]
fn curve_oracles() {
    let logs = [fake_log(Some(1), 5), fake_log(Some(3), 5), fake_log(None, 5)];
    let third = 1.0 / 3.0;
    assert_eq!(cumulative_curve(&logs, 5), vec![third, third, 2.0 / 3.0, 2.0 / 3.0, 2.0 / 3.0]);
    assert_eq!(cumulative_curve(&[fake_log(Some(1), 4), fake_log(Some(1), 4)], 4), vec![1.0; 4]);
    assert_eq!(cumulative_curve(&[fake_log(None, 4)], 4), vec![0.0; 4]);

    let m = LevelMetrics::from_logs(&logs, 5);
    assert_eq!(m.solution_rate, 2.0 / 3.0);
    // Unsolved runs count at the cap.
    assert_eq!(m.mean_attempts, (1.0 + 3.0 + 5.0) / 3.0);
    let area = logs.iter().map(|l| run_area(l, 5)).sum::<f64>() / 3.0;
    assert!((area - m.curve_area()).abs() < 1e-12);
}

#[test]
fn compare_identities() {
    let named = |v: &[f64]| -> Vec<(String, f64)> { v.iter().enumerate().map(|(i, &x)| (format!("l{i}"), x)).collect() };
    let v = [2.0, 5.5, 3.25, 9.0, 1.0];
    let r = compare(&named(&v), &named(&v)).unwrap();
    assert_eq!((r.pearson_r, r.rmse), (1.0, 0.0));

    let c = 1.5;
    let shifted: Vec<f64> = v.iter().map(|x| x + c).collect();
    let r = compare(&named(&shifted), &named(&v)).unwrap();
    assert!((r.pearson_r - 1.0).abs() < 1e-12);
    assert!((r.rmse - c).abs() < 1e-12);
    assert!(r.residuals.iter().all(|d| (d - c).abs() < 1e-12));
    assert!((r.model_mean - r.reference_mean - c).abs() < 1e-12);

    assert!(matches!(compare(&named(&v), &named(&[4.0; 5])), Err(HarnessError::DegenerateVariance("reference"))));
    assert!(matches!(compare(&named(&v), &named(&v[..4])), Err(HarnessError::Mismatch(_))));
}

#[test]
fn compare_aligns_by_name() {
    let model = vec![("a".to_string(), 1.0), ("b".to_string(), 2.0), ("c".to_string(), 4.0)];
    let reference = vec![("c".to_string(), 4.0), ("a".to_string(), 1.0), ("b".to_string(), 2.0)];
    let r = compare(&model, &reference).unwrap();
    assert_eq!(r.rmse, 0.0);
    let renamed = vec![("c".to_string(), 4.0), ("a".to_string(), 1.0), ("z".to_string(), 2.0)];
    assert!(compare(&model, &renamed).is_err());
}

#[test]
fn seeds_depend_on_every_coordinate() {
    let s = episode_seed(1, "a", Variant::Full, 0);
    assert_eq!(s, episode_seed(1, "a", Variant::Full, 0));
    for other in [
        episode_seed(2, "a", Variant::Full, 0),
        episode_seed(1, "b", Variant::Full, 0),
        episode_seed(1, "a", Variant::Guessing, 0),
        episode_seed(1, "a", Variant::Full, 1),
    ] {
        assert_ne!(s, other);
    }
    assert_eq!(ExperimentConfig::default().runs, DEFAULT_RUNS);
    assert_eq!(DEFAULT_RUNS, 250);
}

#[test]
fn single_guessing_run_on_unsolvable_level() {
    let level = bundled::load("calibration_wall").unwrap().unwrap();
    let cfg = ExperimentConfig { variants: vec![Variant::Guessing], runs: 1, ..quick_config() };
    let cells = run_experiment(&[level], &cfg).unwrap();
    let m = &cells[0].metrics;
    assert_eq!(m.solution_rate, 0.0);
    assert!(m.cumulative_curve.iter().all(|&y| y == m.cumulative_curve[0]));
    assert_eq!(m.mean_attempts, 6.0);
}

fn check_metric_invariants(cells: &[CellResult], max_attempts: usize) {
    for c in cells {
        let m = &c.metrics;
        assert!(m.cumulative_curve.windows(2).all(|w| w[0] <= w[1]), "{} curve decreases", m.level);
        assert_eq!(*m.cumulative_curve.last().unwrap(), m.solution_rate);
        assert!((0.0..=1.0).contains(&m.solution_rate));
        assert!(m.mean_attempts >= 1.0 && m.mean_attempts <= max_attempts as f64);
        assert_eq!(m.cumulative_curve.len(), max_attempts);
    }
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(dir).unwrap().display().to_string(), fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn experiment_is_reproducible_and_round_trips() {
    let levels = quick_levels();
    let cfg = quick_config();
    let cells = run_experiment(&levels, &cfg).unwrap();
    assert_eq!(cells.len(), 4);
    assert_eq!(
        cells.iter().map(|c| (c.metrics.level.as_str(), c.metrics.variant)).collect::<Vec<_>>(),
        [("easy_table", Variant::Full), ("easy_table", Variant::Guessing), ("shafts", Variant::Full), ("shafts", Variant::Guessing)]
    );
    check_metric_invariants(&cells, 6);

    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    write_outputs(a.path(), &cfg, &cells).unwrap();
    write_outputs(b.path(), &cfg, &run_experiment(&levels, &cfg).unwrap()).unwrap();
    let files = dir_bytes(a.path());
    assert_eq!(files, dir_bytes(b.path()), "same seed must give byte-identical outputs");
    assert!(files.iter().any(|(n, _)| n == "metrics.csv"));
    assert_eq!(files.iter().filter(|(n, _)| n.ends_with(".jsonl")).count(), 4);
    assert_eq!(files.iter().filter(|(n, _)| n.ends_with(".svg")).count(), 2);

    // Persisted episodes reproduce the logs and the metrics exactly.
    for cell in &cells {
        let path = a.path().join("episodes").join(format!("{}.{}.jsonl", cell.metrics.level, cell.metrics.variant));
        let file = io::read_episodes(&path).unwrap();
        assert_eq!(file.logs, cell.logs);
        assert_eq!(file.agent, cfg.agent);
        assert_eq!(LevelMetrics::from_logs(&file.logs, file.agent.max_attempts), cell.metrics);
    }
    let rows = io::read_metrics_csv(&a.path().join("metrics.csv")).unwrap();
    let expected: Vec<MetricsRow> = cells.iter().map(|c| MetricsRow::from(&c.metrics)).collect();
    assert_eq!(rows, expected);
    let text = fs::read_to_string(a.path().join("metrics.csv")).unwrap();
    assert!(text.starts_with("# mean_attempts counts an unsolved run as max_attempts"));
}

#[test]
fn bad_level_aborts_before_running() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("a_good.json"), bundled::find("easy_table").unwrap().document).unwrap();
    fs::write(dir.path().join("b_bad.json"), "{\"format\": \"vtools-level/1\"}").unwrap();
    match load_level_dir(dir.path()) {
        Err(HarnessError::Level { path, .. }) => assert!(path.ends_with("b_bad.json")),
        other => panic!("expected a level error, got {other:?}"),
    }
    fs::remove_file(dir.path().join("b_bad.json")).unwrap();
    let levels = load_level_dir(dir.path()).unwrap();
    assert_eq!(levels.len(), 1);
    assert!(load_level_dir(&dir.path().join("missing")).is_err());
}

#[test]
fn bundled_level_dir_loads() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("levels");
    let levels = load_level_dir(&dir).unwrap();
    assert_eq!(levels.len(), bundled::LEVELS.len());
}

#[test]
fn invalid_configs_are_rejected() {
    let levels = quick_levels();
    assert!(run_experiment(&levels, &ExperimentConfig { runs: 0, ..quick_config() }).is_err());
    assert!(run_experiment(&levels, &ExperimentConfig { variants: vec![], ..quick_config() }).is_err());
}

#[test]
fn sweep_axes_and_rows() {
    let axis: ParamAxis = "epsilon=0.0:0.3:0.05".parse().unwrap();
    assert_eq!(axis.values, vec![0.0, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3]);
    let listed: ParamAxis = "n_sims=1,4".parse().unwrap();
    assert_eq!(listed.values, vec![1.0, 4.0]);
    let nested: ParamAxis = "noise.impulse_direction_sd=0.1,0.3".parse().unwrap();
    let cfg = sweep::apply(&SsupConfig::default(), &[(&nested.name, 0.3)]).unwrap();
    assert_eq!(cfg.noise.impulse_direction_sd, 0.3);
    assert_eq!(sweep::apply(&SsupConfig::default(), &[("n_sims", 3.0)]).unwrap().n_sims, 3);

    assert!("n_sims=1.5".parse::<ParamAxis>().is_err());
    assert!("epsilon=0:2:1".parse::<ParamAxis>().is_err(), "epsilon above 1 must fail validation");
    assert!("bogus=1".parse::<ParamAxis>().is_err());
    assert!("epsilon".parse::<ParamAxis>().is_err());
    assert_eq!(sweep::grid(&[axis.clone(), listed.clone()]).len(), 14);

    let level = bundled::load("shafts").unwrap().unwrap();
    let base = ExperimentConfig { runs: 2, ..quick_config() };
    let axes = ["epsilon=0.0,0.2".parse().unwrap(), "n_sims=1,2".parse().unwrap()];
    let rows = sweep::run_sweep(&[level], &base, &axes).unwrap();
    assert_eq!(rows.len(), 4 * base.variants.len());
    assert_eq!(rows[0].params, vec![0.0, 1.0]);
    assert_eq!(rows.last().unwrap().params, vec![0.2, 2.0]);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sweep.csv");
    sweep::write_sweep_csv(&path, &axes, &rows).unwrap();
    let text = fs::read_to_string(path).unwrap();
    assert!(text.starts_with("epsilon,n_sims,variant,solution_rate,mean_attempts,curve_area\n"));
    assert_eq!(text.lines().count(), rows.len() + 1);
}

#[test]
fn reference_template_holds_aggregates() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/human_reference_template.csv");
    let rows = io::read_reference_csv(&path).unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].level, AGGREGATE_LEVEL);
    assert!(rows[0].is_aggregate());
    assert_eq!(rows[0].solution_rate, Some(0.81));
    assert_eq!(rows[0].mean_attempts, Some(4.48));
}

#[test]
fn reference_csv_with_levels_and_curves() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ref.csv");
    fs::write(&path, "# note\nlevel,human_solution_rate,human_mean_attempts,curve_1,curve_2\na,0.5,3,0.25,0.5\nb,,2.5,,\n").unwrap();
    let rows = io::read_reference_csv(&path).unwrap();
    assert_eq!(rows[0].cumulative_curve, vec![0.25, 0.5]);
    assert_eq!(rows[1].solution_rate, None);
    assert_eq!(rows[1].mean_attempts, Some(2.5));
    fs::write(&path, "level,human_solution_rate,human_mean_attempts\na,x,1\n").unwrap();
    assert!(io::read_reference_csv(&path).is_err());
}
