//! Append-only persistence: one JSONL attempt log per session, an index of
//! sessions and one trajectory document per accepted attempt.

use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use vtools_core::level::Action;

/// One accepted attempt. Never rewritten once appended.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttemptRecord {
    pub session: String,
    pub level: String,
    /// 1-based attempt number within this level.
    pub attempt: usize,
    pub timestamp_ms: u64,
    /// Seconds on the level clock when the attempt was accepted.
    pub elapsed: f64,
    pub action: Action,
    pub solved: bool,
    pub reward: f64,
    pub min_goal_distance: f64,
    /// Trajectory document path, relative to the store root.
    pub trajectory: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndexEntry {
    pub id: String,
    pub participant: String,
    pub levels: Vec<String>,
    pub created_ms: u64,
}

#[derive(Debug)]
pub struct Store {
    root: PathBuf,
}

impl Store {
    pub fn open(root: impl Into<PathBuf>) -> std::io::Result<Store> {
        let root = root.into();
        fs::create_dir_all(root.join("sessions"))?;
        fs::create_dir_all(root.join("trajectories"))?;
        Ok(Store { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn index_path(&self) -> PathBuf {
        self.root.join("index.jsonl")
    }

    pub fn log_path(&self, session: &str) -> PathBuf {
        self.root.join("sessions").join(format!("{session}.jsonl"))
    }

    fn append_line<T: Serialize>(path: &Path, value: &T) -> std::io::Result<()> {
        let mut line = serde_json::to_vec(value).map_err(std::io::Error::other)?;
        line.push(b'\n');
        let mut f = OpenOptions::new().create(true).append(true).open(path)?;
        f.write_all(&line)?;
        f.sync_data()
    }

    fn read_lines<T: for<'de> Deserialize<'de>>(path: &Path) -> std::io::Result<Vec<T>> {
        let file = match File::open(path) {
            Ok(f) => f,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(e),
        };
        BufReader::new(file)
            .lines()
            .filter(|l| l.as_ref().map_or(true, |l| !l.trim().is_empty()))
            .map(|l| serde_json::from_str(&l?).map_err(std::io::Error::other))
            .collect()
    }

    pub fn index(&self) -> std::io::Result<Vec<IndexEntry>> {
        Self::read_lines(&self.index_path())
    }

    pub fn add_session(&self, entry: &IndexEntry) -> std::io::Result<()> {
        File::create(self.log_path(&entry.id))?;
        Self::append_line(&self.index_path(), entry)
    }

    /// Writes the trajectory document and returns its store-relative path.
    pub fn write_trajectory(&self, session: &str, level: &str, attempt: usize, json: &str) -> std::io::Result<String> {
        let rel = format!("trajectories/{session}-{level}-{attempt}.json");
        fs::write(self.root.join(&rel), json)?;
        Ok(rel)
    }

    pub fn read_trajectory(&self, rel: &str) -> std::io::Result<String> {
        fs::read_to_string(self.root.join(rel))
    }

    pub fn append_attempt(&self, record: &AttemptRecord) -> std::io::Result<()> {
        Self::append_line(&self.log_path(&record.session), record)
    }

    pub fn read_log(&self, session: &str) -> std::io::Result<Vec<AttemptRecord>> {
        Self::read_lines(&self.log_path(session))
    }
}
