//! Output files.
//!
//! ```text
//! <dir>/manifest.json              run grid, action labels, config hash
//! <dir>/config.json                the resolved config
//! <dir>/trials/<algo>_seed<s>.csv  one row per round            (csv)
//! <dir>/comparison.csv             one row per algorithm         (csv)
//! <dir>/summary_<algo>.json        per-seed + aggregate metrics  (json)
//! ```
//!
//! Every file is a pure function of config and seeds; nothing carries a
//! timestamp. Floats are written in shortest round-trip form, so rereading
//! a trial CSV reproduces the in-memory log exactly.

use super::config::trial_file;
use super::{Experiment, ExperimentResults, HarnessError};
use crate::metrics::{self, mean_std, AggregateSummary, MetricsError, RunSummary};
use crate::types::{TrialLog, TrialRecord};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

pub const TRIAL_CSV_HEADER: &str =
    "t,context_id,action_id,reward,oracle_mean,chosen_mean,instant_regret,cum_reward,cum_regret";
pub const COMPARISON_FILE: &str = "comparison.csv";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const CONFIG_FILE: &str = "config.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config_hash: String,
    pub trials: usize,
    pub seeds: Vec<u64>,
    pub checkpoints: Vec<usize>,
    pub algorithms: Vec<String>,
    pub contexts: Vec<String>,
    pub actions: Vec<String>,
    /// Empty when csv output was not requested.
    pub trial_files: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmSummaryFile {
    pub algorithm: String,
    pub config_hash: String,
    pub runs: Vec<RunSummary>,
    /// Absent with a single seed.
    pub aggregate: Option<AggregateSummary>,
}

fn output_err(path: &Path, message: impl ToString) -> HarnessError {
    HarnessError::Output {
        path: path.to_owned(),
        message: message.to_string(),
    }
}

/// Trial log as CSV text with the fixed header.
pub fn trial_csv(log: &TrialLog) -> String {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for record in log.records() {
        writer.serialize(record).expect("in-memory csv write");
    }
    if log.is_empty() {
        writer
            .write_record(TRIAL_CSV_HEADER.split(','))
            .expect("in-memory csv write");
    }
    String::from_utf8(writer.into_inner().expect("in-memory csv flush")).expect("csv is utf-8")
}

pub fn parse_trial_csv(text: &str, source: &Path) -> Result<TrialLog, HarnessError> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| output_err(source, e))?
        .iter()
        .collect::<Vec<_>>()
        .join(",");
    if header != TRIAL_CSV_HEADER {
        return Err(output_err(source, format!("unexpected header {header:?}")));
    }
    let records = reader
        .deserialize::<TrialRecord>()
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| output_err(source, e))?;
    Ok(TrialLog::from_records(records))
}

pub fn read_trial_csv(path: &Path) -> Result<TrialLog, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
        path: path.to_owned(),
        source,
    })?;
    parse_trial_csv(&text, path)
}

/// Comparison table: one row per algorithm, with seed-mean cumulative
/// reward and regret at each checkpoint followed by the seed-mean
/// selection frequency of each action.
pub fn render_comparison(
    rows: &[(String, Vec<RunSummary>)],
    actions: &[String],
    checkpoints: &[usize],
) -> String {
    let mut writer = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["algorithm".to_owned()];
    for t in checkpoints {
        header.push(format!("cumulative_reward@{t}"));
        header.push(format!("cumulative_regret@{t}"));
    }
    header.extend(actions.iter().cloned());
    writer.write_record(&header).expect("in-memory csv write");

    for (algorithm, summaries) in rows {
        let mean_of = |f: &dyn Fn(&RunSummary) -> f64| {
            mean_std(&summaries.iter().map(f).collect::<Vec<_>>()).mean
        };
        let mut row = vec![algorithm.clone()];
        for i in 0..checkpoints.len() {
            row.push(mean_of(&|s| s.checkpoints[i].cumulative_reward).to_string());
            row.push(mean_of(&|s| s.checkpoints[i].cumulative_regret).to_string());
        }
        for a in 0..actions.len() {
            row.push(mean_of(&|s| s.action_frequencies[a]).to_string());
        }
        writer.write_record(&row).expect("in-memory csv write");
    }
    String::from_utf8(writer.into_inner().expect("in-memory csv flush")).expect("csv is utf-8")
}

fn grouped(results: &ExperimentResults, algorithms: &[String]) -> Vec<(String, Vec<RunSummary>)> {
    algorithms
        .iter()
        .map(|a| (a.clone(), results.summaries_for(a)))
        .collect()
}

fn json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("serializable");
    bytes.push(b'\n');
    bytes
}

/// Builds every output file in memory, writes them to a staging
/// directory, then moves them into place.
pub fn write_outputs(
    exp: &Experiment,
    results: &ExperimentResults,
) -> Result<Vec<PathBuf>, HarnessError> {
    let config = exp.config();
    let algorithms: Vec<String> = config
        .algorithms
        .iter()
        .map(|a| a.name().to_owned())
        .collect();
    let checkpoints = config.checkpoints();
    let actions = exp.model().actions().labels().to_vec();
    let csv = config.output.wants(super::OutputFormat::Csv);
    let json = config.output.wants(super::OutputFormat::Json);

    let mut files: Vec<(String, Vec<u8>)> = Vec::new();
    let mut trial_files = Vec::new();
    if csv {
        for run in &results.runs {
            let name = run.id.trial_file();
            files.push((name.clone(), trial_csv(&run.log).into_bytes()));
            trial_files.push(name);
        }
        let table = render_comparison(&grouped(results, &algorithms), &actions, &checkpoints);
        files.push((super::COMPARISON_FILE.to_owned(), table.into_bytes()));
    }
    if json {
        for algorithm in &algorithms {
            let runs = results.summaries_for(algorithm);
            let aggregate = match metrics::aggregate_over_seeds(&runs) {
                Ok(agg) => Some(agg),
                Err(MetricsError::InsufficientSeeds(_)) => None,
                Err(e) => return Err(e.into()),
            };
            let file = AlgorithmSummaryFile {
                algorithm: algorithm.clone(),
                config_hash: results.config_hash.clone(),
                runs,
                aggregate,
            };
            files.push((format!("summary_{algorithm}.json"), json_bytes(&file)));
        }
    }
    let manifest = Manifest {
        config_hash: results.config_hash.clone(),
        trials: config.trials,
        seeds: config.seeds.clone(),
        checkpoints,
        algorithms,
        contexts: exp.model().contexts().to_vec(),
        actions,
        trial_files,
    };
    files.push((MANIFEST_FILE.to_owned(), json_bytes(&manifest)));
    files.push((CONFIG_FILE.to_owned(), json_bytes(config)));

    publish(&config.output.directory, &files)
}

fn publish(dir: &Path, files: &[(String, Vec<u8>)]) -> Result<Vec<PathBuf>, HarnessError> {
    let io = |path: &Path| {
        let path = path.to_owned();
        move |source| HarnessError::Io { path, source }
    };
    let staging = dir.join(format!(".staging-{}", std::process::id()));
    if staging.exists() {
        std::fs::remove_dir_all(&staging).map_err(io(&staging))?;
    }
    let staged = (|| {
        for (name, bytes) in files {
            let path = staging.join(name);
            if let Some(parent) = path.parent() {
                std::fs::create_dir_all(parent).map_err(io(parent))?;
            }
            std::fs::write(&path, bytes).map_err(io(&path))?;
        }
        Ok::<_, HarnessError>(())
    })();
    if let Err(e) = staged {
        let _ = std::fs::remove_dir_all(&staging);
        return Err(e);
    }
    let mut written = Vec::with_capacity(files.len());
    for (name, _) in files {
        let target = dir.join(name);
        if let Some(parent) = target.parent() {
            std::fs::create_dir_all(parent).map_err(io(parent))?;
        }
        std::fs::rename(staging.join(name), &target).map_err(io(&target))?;
        written.push(target);
    }
    std::fs::remove_dir_all(&staging).map_err(io(&staging))?;
    Ok(written)
}

/// Re-derives the comparison table from the trial CSVs in `dir`.
pub fn report(dir: &Path) -> Result<String, HarnessError> {
    let manifest_path = dir.join(MANIFEST_FILE);
    let text = std::fs::read_to_string(&manifest_path).map_err(|source| HarnessError::Io {
        path: manifest_path.clone(),
        source,
    })?;
    let manifest: Manifest =
        serde_json::from_str(&text).map_err(|e| output_err(&manifest_path, e))?;
    if manifest.trial_files.is_empty() {
        return Err(output_err(
            &manifest_path,
            "no trial CSVs were written for this run",
        ));
    }
    let mut rows = Vec::with_capacity(manifest.algorithms.len());
    for algorithm in &manifest.algorithms {
        let mut summaries = Vec::with_capacity(manifest.seeds.len());
        for &seed in &manifest.seeds {
            let log = read_trial_csv(&dir.join(trial_file(algorithm, seed)))?;
            if log.len() != manifest.trials {
                return Err(output_err(
                    &dir.join(trial_file(algorithm, seed)),
                    format!("{} rows, manifest says {}", log.len(), manifest.trials),
                ));
            }
            let mut summary = metrics::accumulate(
                &log,
                algorithm,
                manifest.actions.len(),
                &manifest.checkpoints,
            )?;
            summary.seed = Some(seed);
            summaries.push(summary);
        }
        rows.push((algorithm.clone(), summaries));
    }
    Ok(render_comparison(
        &rows,
        &manifest.actions,
        &manifest.checkpoints,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trial_csv_header_and_round_trip() {
        let mut log = TrialLog::new();
        log.push(2, 1, 0.123_456_789_012_345_67, 0.9, 0.2);
        log.push(0, 0, -1e-7, 0.75, 0.75);
        let text = trial_csv(&log);
        assert_eq!(text.lines().next().unwrap(), TRIAL_CSV_HEADER);
        assert_eq!(parse_trial_csv(&text, Path::new("mem")).unwrap(), log);
        let empty = trial_csv(&TrialLog::new());
        assert_eq!(empty.trim_end(), TRIAL_CSV_HEADER);
    }

    #[test]
    fn wrong_header_is_rejected() {
        let err = parse_trial_csv("a,b\n1,2\n", Path::new("x.csv"));
        assert!(matches!(err, Err(HarnessError::Output { .. })));
    }

    #[test]
    fn comparison_layout() {
        let mut log = TrialLog::new();
        for (a, n) in [(0, 42), (1, 16), (2, 29), (3, 13)] {
            for _ in 0..n {
                log.push(0, a, 0.5, 0.9, 0.5);
            }
        }
        let summary = metrics::accumulate(&log, "softmax", 4, &[50, 100]).unwrap();
        let actions: Vec<String> = [
            "go to the beach",
            "stay indoors",
            "carry an umbrella",
            "wear a coat",
        ]
        .map(String::from)
        .to_vec();
        let table = render_comparison(&[("softmax".into(), vec![summary])], &actions, &[50, 100]);
        let mut lines = table.lines();
        assert_eq!(
            lines.next().unwrap(),
            "algorithm,cumulative_reward@50,cumulative_regret@50,cumulative_reward@100,\
             cumulative_regret@100,go to the beach,stay indoors,carry an umbrella,wear a coat"
        );
        let row: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(row[0], "softmax");
        assert_eq!(row[5..], ["0.42", "0.16", "0.29", "0.13"]);
    }
}
