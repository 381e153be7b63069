use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use qnee_core::hybrid::QneeConfig;
use qnee_core::vqse::VqseConfig;
use qnee_core::xxz::XxzParams;

use crate::error::{CliError, CliResult};
use crate::grid::{parse_grid, GridSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum MethodSel {
    Qnee,
    Vqse,
    Both,
    Exact,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub sites: usize,
    pub delta: f64,
    pub lambda_grid: GridSpec,
    pub subsystems: Vec<usize>,
    pub method: MethodSel,
    pub qnee: QneeConfig,
    pub vqse: VqseConfig,
    pub out: PathBuf,
    pub seed: u64,
}

pub const DEFAULT_GRID: &str = "0:0.25:3,1.7:0.1:2.1";

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            sites: 8,
            delta: 0.05,
            lambda_grid: GridSpec::Spec(DEFAULT_GRID.into()),
            subsystems: vec![3, 4],
            method: MethodSel::Qnee,
            qnee: QneeConfig::default(),
            vqse: VqseConfig::default(),
            out: PathBuf::from("qnee-out"),
            seed: 0,
        }
    }
}

impl SweepConfig {
    pub fn lambdas(&self) -> CliResult<Vec<f64>> {
        match &self.lambda_grid {
            GridSpec::Spec(s) => parse_grid(s),
            GridSpec::List(v) => parse_grid(
                &v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","),
            ),
        }
    }

    pub fn validate(&self) -> CliResult<()> {
        XxzParams::new(self.sites, self.delta, 0.0)?;
        if self.lambdas()?.is_empty() {
            return Err(CliError::Usage("lambda grid is empty".into()));
        }
        if self.subsystems.is_empty() {
            return Err(CliError::Usage("no subsystem sizes given".into()));
        }
        if let Some(&k) = self.subsystems.iter().find(|&&k| k == 0 || k >= self.sites) {
            return Err(CliError::Usage(format!(
                "subsystem size {k} must be in 1..{}",
                self.sites
            )));
        }
        self.qnee.validate()?;
        Ok(())
    }
}

/// Flag and environment overrides. `None` leaves the file or default value.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub method: Option<MethodSel>,
    pub lambda_grid: Option<String>,
    pub subsystems: Option<Vec<usize>>,
    pub trials: Option<usize>,
    pub shots: Option<u64>,
    /// `dotted.path=value` assignments, value in TOML syntax.
    pub set: Vec<String>,
}

fn merge(base: &mut toml::Table, over: toml::Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

fn assign(table: &mut toml::Table, expr: &str) -> CliResult<()> {
    let (path, value) = expr
        .split_once('=')
        .ok_or_else(|| CliError::Usage(format!("--set expects key=value, got {expr:?}")))?;
    let parsed: toml::Table = toml::from_str(&format!("v = {}", value.trim()))
        .or_else(|_| toml::from_str(&format!("v = {:?}", value.trim())))
        .map_err(|e| CliError::Usage(format!("bad value in {expr:?}: {e}")))?;
    let value = parsed["v"].clone();
    let keys: Vec<&str> = path.trim().split('.').collect();
    let (last, parents) = keys.split_last().expect("split yields at least one key");
    let mut cur = table;
    for k in parents {
        let entry = cur
            .entry(k.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| CliError::Usage(format!("{k} in {path} is not a table")))?;
    }
    cur.insert(last.to_string(), value);
    Ok(())
}

/// Resolve the effective configuration: flags and environment over the file over defaults.
pub fn resolve(file: Option<&Path>, ov: &Overrides) -> CliResult<SweepConfig> {
    let mut table = toml::Table::try_from(SweepConfig::default())
        .map_err(|e| CliError::Config(e.to_string()))?;
    if let Some(path) = file {
        let text = std::fs::read_to_string(path).map_err(|e| qnee_core::Error::io(path, e))?;
        let from_file: toml::Table =
            toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        merge(&mut table, from_file);
    }
    for s in &ov.set {
        assign(&mut table, s)?;
    }
    let mut cfg: SweepConfig = toml::Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?;

    if let Some(s) = ov.seed {
        cfg.seed = s;
    }
    if let Some(o) = &ov.out {
        cfg.out = o.clone();
    }
    if let Some(m) = ov.method {
        cfg.method = m;
    }
    if let Some(g) = &ov.lambda_grid {
        cfg.lambda_grid = GridSpec::Spec(g.clone());
    }
    if let Some(k) = &ov.subsystems {
        cfg.subsystems = k.clone();
    }
    if let Some(t) = ov.trials {
        cfg.qnee.n_trials = t;
        cfg.vqse.n_trials = t;
    }
    if let Some(n) = ov.shots {
        cfg.qnee.n_shots = n;
        cfg.vqse.n_shots = n;
    }
    cfg.validate()?;
    Ok(cfg)
}
