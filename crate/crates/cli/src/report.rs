//! Suite reports and their JSON and CSV renderings.

use std::path::{Path, PathBuf};
use std::time::Duration;

use qrl::{Check, Tolerances};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Summary {
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
}

impl Summary {
    pub fn of(checks: &[Check]) -> Self {
        let passed = checks.iter().filter(|c| c.pass).count();
        Summary { total: checks.len(), passed, failed: checks.len() - passed }
    }
}

/// Everything a run produced except its wall time, which lives in a side
/// file so that reports are reproducible byte for byte.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: String,
    pub seed: u64,
    pub n_max: Option<usize>,
    pub instance_count: usize,
    pub delta: Option<f64>,
    pub tolerances: Tolerances,
    pub summary: Summary,
    pub checks: Vec<Check>,
    #[serde(skip)]
    pub wall_time: Duration,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.summary.failed == 0
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }

    /// Checks whose instance id starts with `family/`.
    pub fn family<'a>(&'a self, family: &'a str) -> impl Iterator<Item = &'a Check> + 'a {
        self.checks
            .iter()
            .filter(move |c| c.instance.split('/').next() == Some(family))
    }

    pub fn to_json(&self) -> CliResult<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn to_csv(&self) -> CliResult<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for c in &self.checks {
            w.serialize(c)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
    }

    /// Writes `<suite>.json`, `<suite>.csv` and `<suite>.timing.json` into
    /// `dir` and returns the report paths.
    pub fn write(&self, dir: &Path) -> CliResult<(PathBuf, PathBuf)> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        let json = dir.join(format!("{}.json", self.suite));
        let csv = dir.join(format!("{}.csv", self.suite));
        let timing = dir.join(format!("{}.timing.json", self.suite));
        write_file(&json, &self.to_json()?)?;
        write_file(&csv, &self.to_csv()?)?;
        let t = serde_json::json!({ "suite": self.suite, "wall_time_seconds": self.wall_time.as_secs_f64() });
        write_file(&timing, &format!("{t}\n"))?;
        Ok((json, csv))
    }
}

fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    std::fs::write(path, contents).map_err(|e| CliError::io(path, e))
}
