//! On-disk formats: the metrics CSV, per-cell episode JSONL and the
//! reference CSV used by comparisons.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ExperimentConfig, LevelMetrics};
use crate::agent::{AttemptEntry, EpisodeLog, SsupConfig, Variant};
use crate::error::HarnessError;

/// First line of every metrics CSV.
pub const METRICS_NOTE: &str =
    "# mean_attempts counts an unsolved run as max_attempts (every attempt it was allowed); curve_X = fraction solved within X attempts";

/// Label of reference rows that hold only suite-wide aggregates.
pub const AGGREGATE_LEVEL: &str = "ALL";

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io { path: path.display().to_string(), source }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> HarnessError + '_ {
    move |source| HarnessError::Csv { path: path.display().to_string(), source }
}

fn format_err(path: &Path, message: impl Into<String>) -> HarnessError {
    HarnessError::Format { path: path.display().to_string(), message: message.into() }
}

/// The scalar part of [`LevelMetrics`], as stored in the metrics CSV.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricsRow {
    pub level: String,
    pub variant: Variant,
    pub runs: usize,
    pub solution_rate: f64,
    pub mean_attempts: f64,
    pub curve_area: f64,
    pub cumulative_curve: Vec<f64>,
}

impl From<&LevelMetrics> for MetricsRow {
    fn from(m: &LevelMetrics) -> Self {
        MetricsRow {
            level: m.level.clone(),
            variant: m.variant,
            runs: m.runs,
            solution_rate: m.solution_rate,
            mean_attempts: m.mean_attempts,
            curve_area: m.curve_area(),
            cumulative_curve: m.cumulative_curve.clone(),
        }
    }
}

pub fn write_metrics_csv(path: &Path, metrics: &[LevelMetrics]) -> Result<(), HarnessError> {
    let mut file = BufWriter::new(File::create(path).map_err(io_err(path))?);
    writeln!(file, "{METRICS_NOTE}").map_err(io_err(path))?;
    let mut w = csv::Writer::from_writer(file);
    let curve_len = metrics.iter().map(|m| m.cumulative_curve.len()).max().unwrap_or(0);
    let mut header: Vec<String> =
        ["level", "variant", "runs", "solution_rate", "mean_attempts", "curve_area"].map(String::from).to_vec();
    header.extend((1..=curve_len).map(|x| format!("curve_{x}")));
    w.write_record(&header).map_err(csv_err(path))?;
    for m in metrics {
        let row = MetricsRow::from(m);
        let mut rec = vec![
            row.level,
            row.variant.to_string(),
            row.runs.to_string(),
            row.solution_rate.to_string(),
            row.mean_attempts.to_string(),
            row.curve_area.to_string(),
        ];
        rec.extend(row.cumulative_curve.iter().map(f64::to_string));
        rec.resize(header.len(), String::new());
        w.write_record(&rec).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

fn parse<T: std::str::FromStr>(path: &Path, line: u64, column: &str, text: &str) -> Result<T, HarnessError> {
    text.trim().parse().map_err(|_| format_err(path, format!("line {line}: bad {column} `{text}`")))
}

fn reader(path: &Path) -> Result<csv::Reader<File>, HarnessError> {
    csv::ReaderBuilder::new().comment(Some(b'#')).flexible(true).from_path(path).map_err(csv_err(path))
}

fn curve_columns(path: &Path, headers: &csv::StringRecord) -> Result<Vec<usize>, HarnessError> {
    let mut cols: Vec<(usize, usize)> = headers
        .iter()
        .enumerate()
        .filter_map(|(i, h)| h.strip_prefix("curve_").and_then(|x| x.parse().ok()).map(|x: usize| (x, i)))
        .collect();
    cols.sort();
    if cols.iter().enumerate().any(|(k, &(x, _))| x != k + 1) {
        return Err(format_err(path, "curve columns must be curve_1..curve_N without gaps"));
    }
    Ok(cols.into_iter().map(|(_, i)| i).collect())
}

fn column(path: &Path, headers: &csv::StringRecord, name: &str) -> Result<usize, HarnessError> {
    headers.iter().position(|h| h == name).ok_or_else(|| format_err(path, format!("missing column `{name}`")))
}

pub fn read_metrics_csv(path: &Path) -> Result<Vec<MetricsRow>, HarnessError> {
    let mut r = reader(path)?;
    let headers = r.headers().map_err(csv_err(path))?.clone();
    let idx = |name| column(path, &headers, name);
    let (level, variant, runs, rate, attempts, area) =
        (idx("level")?, idx("variant")?, idx("runs")?, idx("solution_rate")?, idx("mean_attempts")?, idx("curve_area")?);
    let curve = curve_columns(path, &headers)?;
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_err(path))?;
        let line = rec.position().map_or(0, |p| p.line());
        let get = |i: usize| rec.get(i).unwrap_or("");
        let variant_text = get(variant);
        rows.push(MetricsRow {
            level: get(level).to_string(),
            variant: variant_text.parse().map_err(|e: String| format_err(path, format!("line {line}: {e}")))?,
            runs: parse(path, line, "runs", get(runs))?,
            solution_rate: parse(path, line, "solution_rate", get(rate))?,
            mean_attempts: parse(path, line, "mean_attempts", get(attempts))?,
            curve_area: parse(path, line, "curve_area", get(area))?,
            cumulative_curve: curve
                .iter()
                .map(|&i| get(i))
                .take_while(|s| !s.is_empty())
                .map(|s| parse(path, line, "curve value", s))
                .collect::<Result<_, _>>()?,
        });
    }
    Ok(rows)
}

/// Per-level human (or other reference) data.
#[derive(Clone, Debug, PartialEq)]
pub struct ReferenceRow {
    pub level: String,
    pub solution_rate: Option<f64>,
    pub mean_attempts: Option<f64>,
    pub cumulative_curve: Vec<f64>,
}

impl ReferenceRow {
    pub fn is_aggregate(&self) -> bool {
        self.level == AGGREGATE_LEVEL
    }
}

/// Reads a reference CSV with columns `level, human_solution_rate,
/// human_mean_attempts, curve_1..curve_N`. Empty cells mean "unknown".
pub fn read_reference_csv(path: &Path) -> Result<Vec<ReferenceRow>, HarnessError> {
    let mut r = reader(path)?;
    let headers = r.headers().map_err(csv_err(path))?.clone();
    let level = column(path, &headers, "level")?;
    let rate = column(path, &headers, "human_solution_rate")?;
    let attempts = column(path, &headers, "human_mean_attempts")?;
    let curve = curve_columns(path, &headers)?;
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_err(path))?;
        let line = rec.position().map_or(0, |p| p.line());
        let opt = |i: usize, name: &str| -> Result<Option<f64>, HarnessError> {
            match rec.get(i).map(str::trim).unwrap_or("") {
                "" => Ok(None),
                s => parse(path, line, name, s).map(Some),
            }
        };
        rows.push(ReferenceRow {
            level: rec.get(level).unwrap_or("").trim().to_string(),
            solution_rate: opt(rate, "human_solution_rate")?,
            mean_attempts: opt(attempts, "human_mean_attempts")?,
            cumulative_curve: curve
                .iter()
                .map(|&i| opt(i, "curve value"))
                .collect::<Result<Vec<_>, _>>()?
                .into_iter()
                .map_while(|v| v)
                .collect(),
        });
    }
    Ok(rows)
}

/// One line of an episode JSONL file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum EpisodeLine {
    Config { level: String, variant: Variant, runs: usize, base_seed: u64, agent: SsupConfig },
    Attempt { run: usize, attempt: AttemptEntry },
    Summary { run: usize, seed: u64, solved: bool, attempts_used: usize, simulations: usize },
}

/// Writes all runs of one (level, variant) cell: a config line, then each
/// run's attempts followed by its summary.
pub fn write_episodes(path: &Path, cfg: &ExperimentConfig, logs: &[EpisodeLog]) -> Result<(), HarnessError> {
    let first = logs.first().ok_or_else(|| format_err(path, "no episodes to write"))?;
    let mut w = BufWriter::new(File::create(path).map_err(io_err(path))?);
    let mut emit = |line: &EpisodeLine| -> Result<(), HarnessError> {
        serde_json::to_writer(&mut w, line).map_err(|source| HarnessError::Json { path: path.display().to_string(), line: 0, source })?;
        w.write_all(b"\n").map_err(io_err(path))
    };
    emit(&EpisodeLine::Config {
        level: first.level.clone(),
        variant: first.variant,
        runs: logs.len(),
        base_seed: cfg.base_seed,
        agent: cfg.agent.clone(),
    })?;
    for (run, log) in logs.iter().enumerate() {
        for attempt in &log.attempts {
            emit(&EpisodeLine::Attempt { run, attempt: attempt.clone() })?;
        }
        emit(&EpisodeLine::Summary {
            run,
            seed: log.seed,
            solved: log.solved,
            attempts_used: log.attempts_used,
            simulations: log.simulations,
        })?;
    }
    drop(emit);
    w.flush().map_err(io_err(path))
}

/// Episode file contents: the agent config it was produced with and every run.
#[derive(Clone, Debug, PartialEq)]
pub struct EpisodeFile {
    pub base_seed: u64,
    pub agent: SsupConfig,
    pub logs: Vec<EpisodeLog>,
}

pub fn read_episodes(path: &Path) -> Result<EpisodeFile, HarnessError> {
    let file = BufReader::new(File::open(path).map_err(io_err(path))?);
    let mut header: Option<(String, Variant, usize, u64, SsupConfig)> = None;
    let mut logs = Vec::new();
    let mut pending: Vec<AttemptEntry> = Vec::new();
    for (i, text) in file.lines().enumerate() {
        let text = text.map_err(io_err(path))?;
        if text.trim().is_empty() {
            continue;
        }
        let line: EpisodeLine = serde_json::from_str(&text)
            .map_err(|source| HarnessError::Json { path: path.display().to_string(), line: i + 1, source })?;
        match (line, &header) {
            (EpisodeLine::Config { level, variant, runs, base_seed, agent }, None) => {
                header = Some((level, variant, runs, base_seed, agent));
            }
            (EpisodeLine::Attempt { run, attempt }, Some(_)) if run == logs.len() => pending.push(attempt),
            (EpisodeLine::Summary { run, seed, solved, attempts_used, simulations }, Some((level, variant, ..)))
                if run == logs.len() =>
            {
                logs.push(EpisodeLog {
                    level: level.clone(),
                    variant: *variant,
                    seed,
                    attempts: std::mem::take(&mut pending),
                    solved,
                    attempts_used,
                    simulations,
                });
            }
            _ => return Err(format_err(path, format!("line {}: out-of-order record", i + 1))),
        }
    }
    let (_, _, runs, base_seed, agent) = header.ok_or_else(|| format_err(path, "missing config line"))?;
    if !pending.is_empty() || logs.len() != runs {
        return Err(format_err(path, format!("expected {runs} complete runs, found {}", logs.len())));
    }
    Ok(EpisodeFile { base_seed, agent, logs })
}
