use banditlab::encoders::{
    Encoder, EncoderConfig, EncoderError, HashEncoder, RemoteConfig, RemoteEncoder, TableEncoder,
    Transport, TransportError,
};
use banditlab::environment::DEFAULT_WEATHER_JSON;
use banditlab::harness::{
    self, AlgorithmSummaryFile, Experiment, ExperimentConfig, HarnessError, Manifest, OutputConfig,
    OutputFormat,
};
use banditlab::metrics;
use banditlab::policies::{AlgorithmSpec, Policy, PolicyError, PolicySnapshot};
use banditlab::rng::RngStream;
use banditlab::types::{ActionId, Context, EmbeddingVector};
use banditlab::RewardModel;
use serde_json::Value;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Duration;

fn config(dir: &Path, trials: usize, seeds: Vec<u64>) -> ExperimentConfig {
    ExperimentConfig {
        reward_model_path: "unused.json".into(),
        encoder: EncoderConfig::default(),
        algorithms: AlgorithmSpec::defaults(),
        trials,
        seeds,
        checkpoints: None,
        output: OutputConfig {
            directory: dir.to_owned(),
            formats: vec![OutputFormat::Csv, OutputFormat::Json],
        },
    }
}

fn hash_experiment(dir: &Path, trials: usize, seeds: Vec<u64>) -> Experiment {
    Experiment::with_parts(
        config(dir, trials, seeds),
        RewardModel::from_json(DEFAULT_WEATHER_JSON).unwrap(),
        Arc::new(HashEncoder::new(64, 0).unwrap()),
    )
    .unwrap()
}

/// Plays the best action for every context; reads the model directly.
struct OraclePolicy {
    model: RewardModel,
}

impl Policy for OraclePolicy {
    fn name(&self) -> &str {
        "oracle"
    }

    fn num_actions(&self) -> usize {
        self.model.num_actions()
    }

    fn select(
        &self,
        c: &Context,
        _: &EmbeddingVector,
        _: &mut RngStream,
    ) -> Result<ActionId, PolicyError> {
        Ok(self.model.oracle(c.id).unwrap().0)
    }

    fn update(
        &mut self,
        _: &Context,
        _: &EmbeddingVector,
        _: ActionId,
        _: f64,
    ) -> Result<(), PolicyError> {
        Ok(())
    }

    fn snapshot(&self) -> PolicySnapshot {
        unimplemented!("test-only policy")
    }
}

#[test]
fn oracle_policy_has_zero_regret() {
    let dir = tempfile::tempdir().unwrap();
    let exp = hash_experiment(dir.path(), 1000, vec![1]);
    let mut oracle = OraclePolicy {
        model: RewardModel::default_weather(),
    };
    let log = exp.run_with_policy(&mut oracle, 1).unwrap();
    assert_eq!(log.last().unwrap().cum_regret, 0.0);
    let summary = metrics::accumulate(&log, "oracle", 4, &[1000]).unwrap();
    assert_eq!(summary.cumulative_regret, 0.0);
}

#[test]
fn emits_expected_file_set() {
    let dir = tempfile::tempdir().unwrap();
    let exp = hash_experiment(dir.path(), 120, vec![11, 12]);
    exp.run_experiment().unwrap();

    let trial_files: Vec<_> = std::fs::read_dir(dir.path().join("trials"))
        .unwrap()
        .collect();
    assert_eq!(trial_files.len(), 8);
    let summaries = std::fs::read_dir(dir.path())
        .unwrap()
        .filter(|e| {
            let name = e.as_ref().unwrap().file_name();
            let name = name.to_string_lossy();
            name.starts_with("summary_") && name.ends_with(".json")
        })
        .count();
    assert_eq!(summaries, 4);
    assert!(dir.path().join(harness::COMPARISON_FILE).is_file());
    assert!(dir.path().join(harness::MANIFEST_FILE).is_file());
    assert!(!std::fs::read_dir(dir.path()).unwrap().any(|e| e
        .unwrap()
        .file_name()
        .to_string_lossy()
        .starts_with(".staging")));
}

/// Parses a trial CSV with plain string splitting, independent of the
/// library reader.
fn naive_rows(path: &Path) -> Vec<Vec<f64>> {
    let text = std::fs::read_to_string(path).unwrap();
    text.lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse::<f64>().unwrap()).collect())
        .collect()
}

#[test]
fn comparison_table_matches_independent_reaccumulation() {
    let dir = tempfile::tempdir().unwrap();
    let exp = hash_experiment(dir.path(), 1000, vec![3, 4]);
    exp.run_experiment().unwrap();
    let manifest: Manifest =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest.checkpoints, vec![250, 500, 750, 1000]);

    let table = std::fs::read_to_string(dir.path().join("comparison.csv")).unwrap();
    let mut lines = table.lines();
    lines.next();
    for (algorithm, line) in manifest.algorithms.iter().zip(lines) {
        let cells: Vec<&str> = line.split(',').collect();
        assert_eq!(cells[0], algorithm);
        let mut expected = vec![0.0; 2 * manifest.checkpoints.len() + manifest.actions.len()];
        for seed in &manifest.seeds {
            let rows = naive_rows(
                &dir.path()
                    .join(format!("trials/{algorithm}_seed{seed}.csv")),
            );
            let (mut reward, mut regret) = (0.0, 0.0);
            let mut counts = vec![0.0; manifest.actions.len()];
            for (i, row) in rows.iter().enumerate() {
                reward += row[3];
                regret += row[4] - row[5];
                counts[row[2] as usize] += 1.0;
                if let Some(k) = manifest.checkpoints.iter().position(|&c| c == i + 1) {
                    expected[2 * k] += reward / manifest.seeds.len() as f64;
                    expected[2 * k + 1] += regret / manifest.seeds.len() as f64;
                }
            }
            let base = 2 * manifest.checkpoints.len();
            for (a, c) in counts.iter().enumerate() {
                expected[base + a] += c / rows.len() as f64 / manifest.seeds.len() as f64;
            }
        }
        for (cell, want) in cells[1..].iter().zip(&expected) {
            let got: f64 = cell.parse().unwrap();
            assert!((got - want).abs() < 1e-9, "{algorithm}: {got} vs {want}");
        }
    }
}

#[test]
fn csv_columns_reproduce_summary_json() {
    let dir = tempfile::tempdir().unwrap();
    let exp = hash_experiment(dir.path(), 400, vec![21, 22]);
    exp.run_experiment().unwrap();
    for algorithm in ["softmax", "linucb", "ucb1", "epsilon_greedy"] {
        let file: AlgorithmSummaryFile = serde_json::from_str(
            &std::fs::read_to_string(dir.path().join(format!("summary_{algorithm}.json"))).unwrap(),
        )
        .unwrap();
        assert!(file.aggregate.is_some());
        for run in &file.runs {
            let rows = naive_rows(
                &dir.path()
                    .join(format!("trials/{algorithm}_seed{}.csv", run.seed.unwrap())),
            );
            let reward: f64 = rows.iter().map(|r| r[3]).sum();
            let regret: f64 = rows.iter().map(|r| r[6]).sum();
            let oracle: f64 = rows.iter().map(|r| r[4]).sum();
            let chosen: f64 = rows.iter().map(|r| r[5]).sum();
            assert!((reward - run.cumulative_reward).abs() < 1e-9);
            assert!((regret - run.cumulative_regret).abs() < 1e-9);
            assert!((oracle - regret - chosen).abs() < 1e-9);
            assert!((rows.last().unwrap()[7] - run.cumulative_reward).abs() < 1e-9);
        }
    }
}

#[test]
fn repeated_runs_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    hash_experiment(a.path(), 300, vec![5, 6])
        .run_experiment()
        .unwrap();
    hash_experiment(b.path(), 300, vec![5, 6])
        .run_experiment()
        .unwrap();
    let manifest_a = std::fs::read_to_string(a.path().join("manifest.json")).unwrap();
    let manifest: Manifest = serde_json::from_str(&manifest_a).unwrap();
    let mut names = manifest.trial_files.clone();
    names.extend(
        [
            "comparison.csv",
            "manifest.json",
            "summary_softmax.json",
            "summary_linucb.json",
        ]
        .map(String::from),
    );
    for name in names {
        let x = std::fs::read(a.path().join(&name)).unwrap();
        let y = std::fs::read(b.path().join(&name)).unwrap();
        assert_eq!(x, y, "{name}");
    }
}

#[test]
fn report_reproduces_comparison_table() {
    let dir = tempfile::tempdir().unwrap();
    hash_experiment(dir.path(), 500, vec![1, 2, 3])
        .run_experiment()
        .unwrap();
    let written = std::fs::read_to_string(dir.path().join("comparison.csv")).unwrap();
    assert_eq!(harness::report(dir.path()).unwrap(), written);
}

#[test]
fn single_seed_summary_has_no_aggregate() {
    let dir = tempfile::tempdir().unwrap();
    hash_experiment(dir.path(), 50, vec![9])
        .run_experiment()
        .unwrap();
    let file: Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("summary_ucb1.json")).unwrap(),
    )
    .unwrap();
    assert!(file["aggregate"].is_null());
    assert_eq!(file["runs"].as_array().unwrap().len(), 1);
}

#[test]
fn failing_run_publishes_nothing() {
    // The table lacks one of the four contexts, so some run hits it and fails.
    let table = r#"{"text": "sunny", "vector": [1, 0]}
{"text": "rainy", "vector": [0, 1]}
{"text": "sunny and windy", "vector": [0.7, 0.7]}"#;
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let mut cfg = config(&out, 200, vec![1, 2]);
    cfg.encoder.embedding_dim = 2;
    let exp = Experiment::with_parts(
        cfg,
        RewardModel::default_weather(),
        Arc::new(TableEncoder::parse(table, 2, "inline").unwrap()),
    )
    .unwrap();
    let err = exp.run_experiment().unwrap_err();
    assert!(
        matches!(err, HarnessError::Encoder(EncoderError::UnknownContext(ref t)) if t == "cloudy with a chance of rain")
    );
    assert!(!out.exists());
}

#[test]
fn json_only_output_skips_csv_and_report_refuses() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(dir.path(), 30, vec![1, 2]);
    cfg.output.formats = vec![OutputFormat::Json];
    let exp = Experiment::with_parts(
        cfg,
        RewardModel::default_weather(),
        Arc::new(HashEncoder::new(64, 0).unwrap()),
    )
    .unwrap();
    exp.run_experiment().unwrap();
    assert!(!dir.path().join("trials").exists());
    assert!(!dir.path().join("comparison.csv").exists());
    assert!(dir.path().join("summary_softmax.json").exists());
    assert!(harness::report(dir.path()).is_err());
}

#[test]
fn config_file_with_relative_paths() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("model.json"), DEFAULT_WEATHER_JSON).unwrap();
    std::fs::write(
        dir.path().join("exp.json"),
        r#"{"reward_model_path": "model.json", "algorithms": [{"name": "ucb1"}],
            "trials": 20, "seeds": [1], "output": {"directory": "out"}}"#,
    )
    .unwrap();
    let exp = Experiment::from_config_file(&dir.path().join("exp.json")).unwrap();
    exp.run_experiment().unwrap();
    assert!(dir.path().join("out/trials/ucb1_seed1.csv").exists());
    assert_eq!(exp.config().checkpoints(), vec![20]);
}

#[test]
fn missing_reward_model_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(dir.path(), 10, vec![1]);
    cfg.reward_model_path = "nowhere/model.json".into();
    let err = Experiment::from_config(cfg, dir.path()).err().unwrap();
    assert!(err.to_string().contains("nowhere/model.json"), "{err}");
}

/// Serves deterministic vectors and counts requests.
struct CountingService {
    calls: Arc<AtomicUsize>,
}

impl Transport for CountingService {
    fn post_json(&self, _: &str, body: &Value, _: Duration) -> Result<Value, TransportError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        let text = body["input"].as_str().unwrap();
        let v = banditlab::encoders::hash_encode(text, 8, 42).unwrap();
        Ok(serde_json::json!({ "data": [{ "embedding": v }] }))
    }
}

#[test]
fn remote_encoder_through_the_harness() {
    let dir = tempfile::tempdir().unwrap();
    let calls = Arc::new(AtomicUsize::new(0));
    let remote = RemoteConfig {
        cache_path: Some(dir.path().join("cache.jsonl")),
        backoff_ms: 0,
        ..RemoteConfig::new("http://stub.invalid", "stub-model")
    };
    let encoder: Arc<dyn Encoder> = Arc::new(
        RemoteEncoder::new(
            remote,
            8,
            Box::new(CountingService {
                calls: calls.clone(),
            }),
        )
        .unwrap(),
    );
    let mut cfg = config(&dir.path().join("out"), 300, vec![1, 2, 3]);
    cfg.encoder.embedding_dim = 8;
    let exp = Experiment::with_parts(cfg, RewardModel::default_weather(), encoder).unwrap();
    exp.run_experiment().unwrap();
    // Four distinct contexts, fetched once each across 12 concurrent runs.
    assert_eq!(calls.load(Ordering::SeqCst), 4);
    let cached = std::fs::read_to_string(dir.path().join("cache.jsonl")).unwrap();
    assert_eq!(cached.lines().count(), 4);
    assert!(!cached.contains("BANDITLAB_API_KEY"));
}
