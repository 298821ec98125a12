//! Experiment configuration: one TOML file with every default filled in,
//! overridable field by field with `key=value` pairs.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use tsae_core::synth::SyntheticSpec;
use tsae_core::tsae::TrainConfig;

use crate::error::{io_err, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum ModelKind {
    #[default]
    #[serde(rename = "tsae")]
    Tsae,
    /// Single AE scored over the whole window.
    #[serde(rename = "ae-w")]
    AeWindow,
    /// Single AE scored on the final instant.
    #[serde(rename = "ae-i")]
    AeInstant,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Tsae => "tsae",
            ModelKind::AeWindow => "ae-w",
            ModelKind::AeInstant => "ae-i",
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "tsae" => Ok(ModelKind::Tsae),
            "ae-w" => Ok(ModelKind::AeWindow),
            "ae-i" => Ok(ModelKind::AeInstant),
            _ => Err(format!("unknown model '{s}' (tsae, ae-w, ae-i)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub train: Option<PathBuf>,
    pub test: Option<PathBuf>,
    pub synthetic: Option<SyntheticSpec>,
    /// Signals dropped before scaling.
    pub exclude: Vec<String>,
    pub label_column: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PreprocessConfig {
    /// Down-sampling rate.
    pub q: usize,
    /// Window length `K`.
    pub window: usize,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self { q: 5, window: 10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub rates: Vec<usize>,
    pub windows: Vec<usize>,
    /// `(a, b)`: AE1 hidden width over `m*K`, AE2 hidden width over `m`.
    pub node_pairs: Vec<(f64, f64)>,
    pub n_repeats: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            rates: vec![1, 5, 10, 20, 50],
            windows: vec![5, 10, 20, 50, 100],
            node_pairs: vec![(0.25, 0.1), (0.5, 0.1), (0.75, 0.1), (0.25, 0.2), (0.5, 0.2), (0.75, 0.2)],
            n_repeats: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub model: ModelKind,
    pub output_dir: PathBuf,
    pub data: DataConfig,
    pub preprocess: PreprocessConfig,
    pub train: TrainConfig,
    pub sweep: SweepConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            model: ModelKind::Tsae,
            output_dir: PathBuf::from("out"),
            data: DataConfig::default(),
            preprocess: PreprocessConfig::default(),
            train: TrainConfig::default(),
            sweep: SweepConfig::default(),
        }
    }
}

/// Named starting points for the two public water-plant datasets.
pub fn preset(name: &str) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::default();
    match name {
        "default" => {}
        "wadi" => {
            cfg.preprocess = PreprocessConfig { q: 5, window: 10 };
            cfg.data.exclude = vec!["2B_AIT_002_PV".into()];
        }
        "swat" => {
            cfg.preprocess = PreprocessConfig { q: 5, window: 12 };
            cfg.data.exclude = vec!["AIT201".into(), "P201".into()];
        }
        _ => return Err(Error::Config(format!("unknown preset '{name}' (default, wadi, swat)"))),
    }
    Ok(cfg)
}

fn parse_override_value(raw: &str) -> toml::Value {
    let wrapped = format!("v = {raw}");
    match toml::from_str::<toml::Table>(&wrapped) {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.into())),
        Err(_) => toml::Value::String(raw.into()),
    }
}

/// Set `a.b.c = value` in a TOML table; the value is parsed as TOML when it
/// can be and taken as a string otherwise.
fn set_path(root: &mut toml::Table, key: &str, raw: &str) -> Result<()> {
    let parts: Vec<&str> = key.split('.').map(str::trim).collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::Config(format!("bad override key '{key}'")));
    }
    let mut table = root;
    for p in &parts[..parts.len() - 1] {
        let entry = table
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("override '{key}': '{p}' is not a table")))?;
    }
    table.insert(parts[parts.len() - 1].to_string(), parse_override_value(raw));
    Ok(())
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        Self::from_toml_with(text, &[])
    }

    /// Parse `text`, apply `key=value` overrides, then validate.
    pub fn from_toml_with(text: &str, overrides: &[String]) -> Result<Self> {
        let table: toml::Table = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Self::from_table(table, overrides)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        Self::from_toml_with(&text, overrides).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Apply overrides on top of an existing configuration.
    pub fn with_overrides(&self, overrides: &[String]) -> Result<Self> {
        let table = toml::Table::try_from(self).map_err(|e| Error::Config(e.to_string()))?;
        Self::from_table(table, overrides)
    }

    fn from_table(mut table: toml::Table, overrides: &[String]) -> Result<Self> {
        for o in overrides {
            let (k, v) = o
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("override '{o}' is not key=value")))?;
            set_path(&mut table, k, v.trim())?;
        }
        let cfg: Self = table.try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let d = &self.data;
        let files = d.train.is_some() || d.test.is_some();
        match (files, &d.synthetic) {
            (true, Some(_)) => return Err(Error::Config("give either data files or a synthetic spec, not both".into())),
            (false, None) => return Err(Error::Config("no data source: set data.train or data.synthetic".into())),
            (false, Some(s)) => s.validate()?,
            (true, None) => {
                if d.train.is_none() {
                    return Err(Error::Config("data.test given without data.train".into()));
                }
            }
        }
        if self.preprocess.q == 0 || self.preprocess.window == 0 {
            return Err(Error::Config("preprocess.q and preprocess.window must be positive".into()));
        }
        self.train.validate()?;
        let s = &self.sweep;
        let pairs_ok = s.node_pairs.iter().all(|&(a, b)| a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite());
        if s.rates.contains(&0) || s.windows.contains(&0) || !pairs_ok || s.n_repeats == 0 {
            return Err(Error::Config("sweep grid values and n_repeats must be positive".into()));
        }
        Ok(())
    }

    /// Training settings with the experiment seed applied.
    pub fn train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            seed,
            ..self.train.clone()
        }
    }

    /// Hex SHA-256 of the canonical JSON form, output directory left out.
    pub fn hash(&self) -> String {
        let mut json = serde_json::to_value(self).expect("config serializes");
        json.as_object_mut().expect("config is a table").remove("output_dir");
        hex::encode(Sha256::digest(json.to_string().as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SYNTH: &str = "[data.synthetic]\nm = 6\nt_train = 400\nt_test = 200\n";

    #[test]
    fn defaults_and_presets() {
        let cfg = ExperimentConfig::from_toml(SYNTH).unwrap();
        assert_eq!(cfg.preprocess, PreprocessConfig { q: 5, window: 10 });
        assert_eq!(cfg.sweep.rates, vec![1, 5, 10, 20, 50]);
        assert_eq!(cfg.sweep.windows, vec![5, 10, 20, 50, 100]);
        assert_eq!(cfg.sweep.n_repeats, 3);
        assert_eq!(cfg.train, TrainConfig::default());
        assert_eq!(cfg.data.synthetic.as_ref().unwrap().m, 6);
        assert_eq!(preset("swat").unwrap().preprocess.window, 12);
        assert_eq!(preset("wadi").unwrap().data.exclude, vec!["2B_AIT_002_PV".to_string()]);
        assert!(preset("x").is_err());
    }

    #[test]
    fn overrides_apply_with_types() {
        let o: Vec<String> = ["train.epochs_ae1=7", "model=ae-i", "preprocess.q = 1", "train.lr_ae2=0.5", "sweep.rates=[2,3]"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let cfg = ExperimentConfig::from_toml_with(SYNTH, &o).unwrap();
        assert_eq!(cfg.train.epochs_ae1, 7);
        assert_eq!(cfg.model, ModelKind::AeInstant);
        assert_eq!(cfg.preprocess.q, 1);
        assert_eq!(cfg.train.lr_ae2, 0.5);
        assert_eq!(cfg.sweep.rates, vec![2, 3]);
        let again = cfg.with_overrides(&["seed=9".into()]).unwrap();
        assert_eq!(again.seed, 9);
        assert_ne!(again.hash(), cfg.hash());
        assert_eq!(ExperimentConfig::from_toml(&cfg.to_toml().unwrap()).unwrap(), cfg);
        for bad in ["nokey", "train.epochs_ae1=0", "model=cnn", "seed.x=1", "bogus=1"] {
            assert!(ExperimentConfig::from_toml_with(SYNTH, &[bad.to_string()]).is_err(), "{bad}");
        }
    }

    #[test]
    fn exactly_one_data_source() {
        assert!(ExperimentConfig::from_toml("seed = 1").is_err());
        assert!(ExperimentConfig::from_toml(&format!("[data]\ntrain = \"a.csv\"\n{SYNTH}")).is_err());
        assert!(ExperimentConfig::from_toml("[data]\ntest = \"b.csv\"").is_err());
        assert!(ExperimentConfig::from_toml("[data]\ntrain = \"a.csv\"").is_ok());
        assert!(ExperimentConfig::from_toml(&format!("{SYNTH}[sweep]\nwindows = [5, 0]\n")).is_err());
    }

    #[test]
    fn hash_is_stable() {
        let a = ExperimentConfig::from_toml(SYNTH).unwrap();
        let b = ExperimentConfig::from_toml(&a.to_toml().unwrap()).unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
        let moved = a.with_overrides(&["output_dir=elsewhere".into()]).unwrap();
        assert_eq!(moved.hash(), a.hash());
    }
}
