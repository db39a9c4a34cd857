//! Output files: run records (NDJSON), aggregates and sweeps (CSV).
//!
//! Files are staged as `<name>.partial` and renamed only on
//! [`OutputDir::commit`]; dropping an uncommitted [`OutputDir`] removes the
//! staged files, so an aborted command leaves no partial output behind.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{LabError, Result};
use crate::harness::{Aggregate, RunRecord};
use crate::sweep::SweepRow;

#[derive(Debug)]
pub struct OutputDir {
    dir: PathBuf,
    staged: Vec<(PathBuf, PathBuf)>,
    created: bool,
    committed: bool,
}

impl OutputDir {
    pub fn create(dir: &Path) -> Result<Self> {
        let created = !dir.exists();
        fs::create_dir_all(dir).map_err(|e| LabError::io(dir, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            staged: Vec::new(),
            created,
            committed: false,
        })
    }

    pub fn path(&self) -> &Path {
        &self.dir
    }

    pub fn stage(&mut self, name: &str, contents: &[u8]) -> Result<()> {
        let target = self.dir.join(name);
        let partial = self.dir.join(format!("{name}.partial"));
        fs::write(&partial, contents).map_err(|e| LabError::io(&partial, e))?;
        self.staged.push((partial, target));
        Ok(())
    }

    /// Moves every staged file into place and returns the final paths.
    pub fn commit(mut self) -> Result<Vec<PathBuf>> {
        let mut done = Vec::new();
        for (partial, target) in std::mem::take(&mut self.staged) {
            fs::rename(&partial, &target).map_err(|e| LabError::io(&target, e))?;
            done.push(target);
        }
        self.committed = true;
        Ok(done)
    }
}

impl Drop for OutputDir {
    fn drop(&mut self) {
        if self.committed {
            return;
        }
        for (partial, _) in &self.staged {
            let _ = fs::remove_file(partial);
        }
        if self.created {
            // only succeeds when nothing else was put there
            let _ = fs::remove_dir(&self.dir);
        }
    }
}

pub fn records_ndjson(records: &[RunRecord]) -> Result<String> {
    let mut out = String::new();
    for r in records {
        let line = serde_json::to_string(r).map_err(|e| LabError::Runtime(e.to_string()))?;
        out.push_str(&line);
        out.push('\n');
    }
    Ok(out)
}

pub fn parse_ndjson(text: &str) -> Result<Vec<RunRecord>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(|e| LabError::Runtime(e.to_string())))
        .collect()
}

fn cell(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else {
        x.to_string()
    }
}

fn csv_bytes<F>(fill: F) -> Result<Vec<u8>>
where
    F: FnOnce(&mut csv::Writer<Vec<u8>>) -> csv::Result<()>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    fill(&mut w).map_err(|e| LabError::Runtime(format!("csv: {e}")))?;
    w.into_inner()
        .map_err(|e| LabError::Runtime(format!("csv: {e}")))
}

/// Aggregate table with one `welch_vs_<policy>` column per policy in
/// `policies`; a cell is empty against itself or when the test is undefined.
pub fn aggregates_csv(aggs: &[Aggregate], policies: &[String]) -> Result<Vec<u8>> {
    csv_bytes(|w| {
        let mut header: Vec<String> = [
            "policy",
            "delta",
            "n",
            "mean_tau",
            "std_tau",
            "stderr",
            "error_rate",
            "truncated",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        header.extend(policies.iter().map(|p| format!("welch_vs_{p}")));
        w.write_record(&header)?;
        for a in aggs {
            let mut row = vec![
                a.policy.clone(),
                a.delta.to_string(),
                a.n.to_string(),
                cell(a.mean_tau),
                cell(a.std_tau),
                cell(a.stderr),
                a.error_rate.to_string(),
                a.truncated.to_string(),
            ];
            row.extend(
                policies
                    .iter()
                    .map(|p| a.welch.get(p).map(|&v| cell(v)).unwrap_or_default()),
            );
            w.write_record(&row)?;
        }
        Ok(())
    })
}

pub fn sweep_csv(rows: &[SweepRow]) -> Result<Vec<u8>> {
    csv_bytes(|w| {
        for r in rows {
            w.serialize(r)?;
        }
        if rows.is_empty() {
            w.write_record(["model", "K", "ratio_lower", "ratio_half"])?;
        }
        Ok(())
    })
}
