use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use newsvendor::{Error, Result};
use serde::Deserialize;

/// Defaults read from `--config`. Relative paths resolve against the
/// directory holding the config file.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub data: Option<PathBuf>,
    pub schema: Option<PathBuf>,
    pub synthetic: Option<PathBuf>,
    pub spec: Option<String>,
    pub window_days: Option<String>,
    pub gap_days: Option<usize>,
    pub trade_window_days: Option<String>,
    pub retrain_every: Option<usize>,
    pub month_days: Option<usize>,
    pub test_days: Option<String>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub unit_costs: Option<bool>,
    pub benchmark: Option<String>,
    pub grid: Option<String>,
    pub validation_days: Option<String>,
    /// Named model specs, each an inline spec such as `benchmark,f1,+hour`.
    #[serde(default)]
    pub models: BTreeMap<String, String>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg: FileConfig =
            toml::from_str(&text).map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut cfg.data, &mut cfg.schema, &mut cfg.synthetic, &mut cfg.out].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }
}

/// Parses `a..b` (half-open) into a day range.
pub fn parse_day_range(text: &str) -> Result<std::ops::Range<usize>> {
    let bad = || Error::InvalidConfig(format!("bad day range `{text}`, expected START..END"));
    let (a, b) = text.split_once("..").ok_or_else(bad)?;
    let a: usize = a.trim().parse().map_err(|_| bad())?;
    let b: usize = b.trim().parse().map_err(|_| bad())?;
    if b <= a {
        return Err(bad());
    }
    Ok(a..b)
}
