//! Run configuration: TOML file, command-line overrides and validation.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use qrl::state::{DENSE_QUBIT_CAP, DIAGONAL_QUBIT_CAP};
use qrl::Tolerances;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Smallest depth cap the suites can build instances at.
pub const MIN_N_MAX: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Approx,
    Convert,
    Measures,
    Lln,
    All,
}

impl Suite {
    pub const EACH: [Suite; 4] = [Suite::Approx, Suite::Convert, Suite::Measures, Suite::Lln];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Approx => "approx",
            Suite::Convert => "convert",
            Suite::Measures => "measures",
            Suite::Lln => "lln",
            Suite::All => "all",
        }
    }

    /// Largest `n_max` accepted: dense suites materialize `2^n × 2^n`
    /// matrices, diagonal suites only weight maps.
    pub fn depth_cap(self) -> usize {
        match self {
            Suite::Approx | Suite::Convert | Suite::All => DENSE_QUBIT_CAP,
            Suite::Measures | Suite::Lln => DIAGONAL_QUBIT_CAP,
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        match s {
            "approx" => Ok(Suite::Approx),
            "convert" => Ok(Suite::Convert),
            "measures" => Ok(Suite::Measures),
            "lln" => Ok(Suite::Lln),
            "all" => Ok(Suite::All),
            _ => Err(CliError::Config(format!("unknown suite {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    /// Depth cap; `None` lets every family use its default depth.
    pub n_max: Option<usize>,
    pub tolerances: Tolerances,
    pub suite: Suite,
    pub output_dir: PathBuf,
    pub instance_count: usize,
    /// Overrides the failure order `δ` of the planted conversion families.
    pub delta: Option<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            n_max: None,
            tolerances: Tolerances::default(),
            suite: Suite::All,
            output_dir: PathBuf::from("reports"),
            instance_count: 10,
            delta: None,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> CliResult<()> {
        if self.instance_count == 0 {
            return Err(CliError::Config("instance_count must be at least 1".into()));
        }
        if let Some(n) = self.n_max {
            let cap = self.suite.depth_cap();
            if n < MIN_N_MAX || n > cap {
                return Err(CliError::Config(format!(
                    "n_max = {n} outside {MIN_N_MAX}..={cap} for the {} suite",
                    self.suite
                )));
            }
        }
        if let Some(d) = self.delta {
            if !(d > 0.0 && d < 1.0) {
                return Err(CliError::Config(format!("delta = {d} outside (0, 1)")));
            }
        }
        Ok(())
    }

    /// Applies the keys present in a config file on top of `self`.
    pub fn apply_file(&mut self, file: &ConfigFile) -> CliResult<()> {
        if let Some(s) = &file.suite {
            self.suite = s.parse()?;
        }
        if let Some(seed) = file.seed {
            self.seed = seed;
        }
        if file.n_max.is_some() {
            self.n_max = file.n_max;
        }
        if let Some(c) = file.count {
            self.instance_count = c;
        }
        if file.delta.is_some() {
            self.delta = file.delta;
        }
        if let Some(out) = &file.out {
            self.output_dir = out.clone();
        }
        for (k, v) in &file.tol {
            self.tolerances.set(k, *v)?;
        }
        Ok(())
    }
}

/// Config file contents; every key is optional and mirrors a flag.
#[derive(Clone, Debug, Default, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub suite: Option<String>,
    pub seed: Option<u64>,
    pub n_max: Option<usize>,
    pub count: Option<usize>,
    pub delta: Option<f64>,
    pub out: Option<PathBuf>,
    pub format: Option<String>,
    #[serde(default)]
    pub tol: BTreeMap<String, f64>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

/// Parses one `KEY=VAL` tolerance override.
pub fn parse_tol(s: &str) -> CliResult<(String, f64)> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("tolerance override {s:?} is not KEY=VAL")))?;
    let v: f64 = v.trim().parse().map_err(|_| CliError::Config(format!("tolerance value {v:?} is not a number")))?;
    Ok((k.trim().to_string(), v))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_instances_is_rejected() {
        let cfg = RunConfig { instance_count: 0, ..RunConfig::default() };
        assert!(matches!(cfg.validate(), Err(CliError::Config(_))));
    }

    #[test]
    fn depth_caps_depend_on_suite() {
        let dense = RunConfig { suite: Suite::Approx, n_max: Some(16), ..RunConfig::default() };
        assert!(dense.validate().is_err());
        let diag = RunConfig { suite: Suite::Lln, n_max: Some(16), ..RunConfig::default() };
        assert!(diag.validate().is_ok());
        let too_deep = RunConfig { suite: Suite::Measures, n_max: Some(25), ..RunConfig::default() };
        assert!(too_deep.validate().is_err());
    }

    #[test]
    fn file_keys_apply() {
        let file: ConfigFile = toml::from_str(
            "suite = \"lln\"\nseed = 9\ncount = 3\n[tol]\nnest = 1e-7\n",
        )
        .unwrap();
        let mut cfg = RunConfig::default();
        cfg.apply_file(&file).unwrap();
        assert_eq!(cfg.suite, Suite::Lln);
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.instance_count, 3);
        assert_eq!(cfg.tolerances.nest, 1e-7);
        assert!(toml::from_str::<ConfigFile>("colour = 1").is_err());
    }

    #[test]
    fn tol_overrides_parse() {
        assert_eq!(parse_tol("eps_max=1e-9").unwrap(), ("eps_max".to_string(), 1e-9));
        assert!(parse_tol("eps_max").is_err());
        assert!(parse_tol("eps_max=x").is_err());
    }
}
