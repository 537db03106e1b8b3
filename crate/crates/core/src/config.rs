//! Run configuration read from plain-text `key = value` files.
//!
//! Blank lines and `#` comments are ignored. Dataset defaults are applied
//! first, then the file, then command-line overrides; unknown keys are
//! rejected.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::atoms::CatalogKind;
use crate::baseline::BiasConfig;
use crate::data::{SplitRatios, SupportMode, SyntheticConfig};
use crate::error::{Error, Result};
use crate::evaluation::DEFAULT_KS;
use crate::scalar::Scalar;
use crate::training::{BatchSize, TrainConfig};

/// Every accepted key, in the order [`RunConfig::to_text`] writes them.
pub const KEYS: &[&str] = &[
    "dataset",
    "k",
    "learning_rate",
    "epochs",
    "lambda",
    "batch_size",
    "seed",
    "init_half_width",
    "adam_beta1",
    "adam_beta2",
    "adam_eps",
    "runs",
    "ks",
    "candidates",
    "data_seed",
    "synthetic_samples",
    "synthetic_support",
    "movielens_dir",
    "split",
    "bias_epochs",
    "bias_reg_items",
    "bias_reg_users",
];

/// Items ranked for each test user.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CandidateSet {
    /// The user's own test interactions.
    #[default]
    Rated,
    /// Every known item the user did not interact with in training or validation.
    All,
}

impl FromStr for CandidateSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rated" => Ok(CandidateSet::Rated),
            "all" => Ok(CandidateSet::All),
            other => Err(Error::Config(format!("candidates must be `rated` or `all`, got {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub dataset: CatalogKind,
    pub train: TrainConfig<f64>,
    pub runs: usize,
    pub ks: Vec<usize>,
    pub candidates: CandidateSet,
    /// Seeds the synthetic corpus and its random split.
    pub data_seed: u64,
    pub synthetic_samples: usize,
    pub synthetic_support: SupportMode,
    pub movielens_dir: Option<PathBuf>,
    pub split: SplitRatios,
    pub bias: BiasConfig,
}

impl RunConfig {
    pub fn for_dataset(dataset: CatalogKind) -> Self {
        let train = match dataset {
            CatalogKind::Synthetic => TrainConfig::synthetic(),
            CatalogKind::MovieLens => TrainConfig::movielens(),
        };
        Self {
            dataset,
            train,
            runs: 10,
            ks: DEFAULT_KS.to_vec(),
            candidates: CandidateSet::Rated,
            data_seed: 0,
            synthetic_samples: SyntheticConfig::default().samples,
            synthetic_support: SupportMode::Exclusive,
            movielens_dir: None,
            split: SplitRatios::default(),
            bias: BiasConfig::default(),
        }
    }

    /// Builds a configuration from file entries and overrides, both given as
    /// `(key, value)` pairs. The last `dataset` value wins and selects the defaults.
    pub fn resolve(file: &[(String, String)], overrides: &[(String, String)]) -> Result<Self> {
        let dataset = file
            .iter()
            .chain(overrides)
            .filter(|(k, _)| k == "dataset")
            .last()
            .map(|(_, v)| v.parse())
            .transpose()?
            .unwrap_or(CatalogKind::Synthetic);
        let mut cfg = Self::for_dataset(dataset);
        for (key, value) in file.iter().chain(overrides) {
            cfg.set(key, value)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: Option<&Path>, overrides: &[(String, String)]) -> Result<Self> {
        let file = match path {
            Some(p) => {
                let text = fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
                parse_entries(&text, p)?
            }
            None => Vec::new(),
        };
        Self::resolve(&file, overrides)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        let t = &mut self.train;
        match key {
            "dataset" => self.dataset = value.parse()?,
            "k" => t.rules = num(key, value)?,
            "learning_rate" => t.learning_rate = num(key, value)?,
            "epochs" => t.epochs = num(key, value)?,
            "lambda" => t.lambda = num(key, value)?,
            "batch_size" => {
                t.batch_size = if value == "full" {
                    BatchSize::Full
                } else {
                    BatchSize::Mini(num(key, value)?)
                }
            }
            "seed" => t.seed = num(key, value)?,
            "init_half_width" => t.init_half_width = num(key, value)?,
            "adam_beta1" => t.adam_beta1 = num(key, value)?,
            "adam_beta2" => t.adam_beta2 = num(key, value)?,
            "adam_eps" => t.adam_eps = num(key, value)?,
            "runs" => self.runs = num(key, value)?,
            "ks" => {
                self.ks = value
                    .split(',')
                    .map(|s| num(key, s.trim()))
                    .collect::<Result<_>>()?
            }
            "candidates" => self.candidates = value.parse()?,
            "data_seed" => self.data_seed = num(key, value)?,
            "synthetic_samples" => self.synthetic_samples = num(key, value)?,
            "synthetic_support" => {
                self.synthetic_support = match value {
                    "exclusive" => SupportMode::Exclusive,
                    "overlapping" => SupportMode::Overlapping,
                    other => {
                        return Err(Error::Config(format!(
                            "synthetic_support must be `exclusive` or `overlapping`, got {other:?}"
                        )))
                    }
                }
            }
            "movielens_dir" => self.movielens_dir = (!value.is_empty()).then(|| PathBuf::from(value)),
            "split" => {
                let parts: Vec<f64> = value.split(',').map(|s| num(key, s.trim())).collect::<Result<_>>()?;
                let [train, validation, test] = parts[..] else {
                    return Err(Error::Config("split needs three comma-separated fractions".into()));
                };
                self.split = SplitRatios {
                    train,
                    validation,
                    test,
                };
            }
            "bias_epochs" => self.bias.epochs = num(key, value)?,
            "bias_reg_items" => self.bias.reg_items = num(key, value)?,
            "bias_reg_users" => self.bias.reg_users = num(key, value)?,
            other => return Err(Error::Config(format!("unknown configuration key {other:?}"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.train.validate()?;
        if self.runs == 0 {
            return Err(Error::Config("runs must be at least 1".into()));
        }
        if self.ks.is_empty() || self.ks.contains(&0) {
            return Err(Error::Config("ks must list positive cutoffs".into()));
        }
        if self.synthetic_samples < 10 {
            return Err(Error::Config("synthetic_samples must be at least 10".into()));
        }
        Ok(())
    }

    pub fn train_config<T: Scalar>(&self) -> TrainConfig<T> {
        let t = &self.train;
        TrainConfig {
            rules: t.rules,
            learning_rate: T::lit(t.learning_rate),
            epochs: t.epochs,
            lambda: T::lit(t.lambda),
            batch_size: t.batch_size,
            seed: t.seed,
            adam_beta1: T::lit(t.adam_beta1),
            adam_beta2: T::lit(t.adam_beta2),
            adam_eps: T::lit(t.adam_eps),
            init_half_width: T::lit(t.init_half_width),
        }
    }

    pub fn synthetic_config(&self) -> SyntheticConfig {
        SyntheticConfig {
            samples: self.synthetic_samples,
            support: self.synthetic_support,
            seed: self.data_seed,
            ..SyntheticConfig::default()
        }
    }

    /// The value of `key` as it would be written in a config file.
    pub fn get(&self, key: &str) -> Option<String> {
        let t = &self.train;
        let join = |v: &[String]| v.join(",");
        Some(match key {
            "dataset" => self.dataset.to_string(),
            "k" => t.rules.to_string(),
            "learning_rate" => t.learning_rate.to_string(),
            "epochs" => t.epochs.to_string(),
            "lambda" => t.lambda.to_string(),
            "batch_size" => match t.batch_size {
                BatchSize::Full => "full".into(),
                BatchSize::Mini(n) => n.to_string(),
            },
            "seed" => t.seed.to_string(),
            "init_half_width" => t.init_half_width.to_string(),
            "adam_beta1" => t.adam_beta1.to_string(),
            "adam_beta2" => t.adam_beta2.to_string(),
            "adam_eps" => t.adam_eps.to_string(),
            "runs" => self.runs.to_string(),
            "ks" => join(&self.ks.iter().map(|k| k.to_string()).collect::<Vec<_>>()),
            "candidates" => match self.candidates {
                CandidateSet::Rated => "rated".into(),
                CandidateSet::All => "all".into(),
            },
            "data_seed" => self.data_seed.to_string(),
            "synthetic_samples" => self.synthetic_samples.to_string(),
            "synthetic_support" => match self.synthetic_support {
                SupportMode::Exclusive => "exclusive".into(),
                SupportMode::Overlapping => "overlapping".into(),
            },
            "movielens_dir" => self
                .movielens_dir
                .as_ref()
                .map(|p| p.display().to_string())
                .unwrap_or_default(),
            "split" => join(&[self.split.train, self.split.validation, self.split.test].map(|x| x.to_string())),
            "bias_epochs" => self.bias.epochs.to_string(),
            "bias_reg_items" => self.bias.reg_items.to_string(),
            "bias_reg_users" => self.bias.reg_users.to_string(),
            _ => return None,
        })
    }

    /// All keys in config-file syntax; parsing the result gives back `self`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for key in KEYS {
            let _ = writeln!(out, "{key} = {}", self.get(key).expect("known key"));
        }
        out
    }
}

fn num<N: FromStr>(key: &str, value: &str) -> Result<N> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("invalid value {value:?} for {key}")))
}

fn config_error(path: &Path, line_index: usize, message: String) -> Error {
    Error::Config(format!("{}:{}: {message}", path.display(), line_index + 1))
}

/// Splits a config file into `(key, value)` pairs, checking the keys.
pub fn parse_entries(text: &str, path: &Path) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| config_error(path, no, format!("expected key = value, got {line:?}")))?;
        let key = key.trim();
        if !KEYS.contains(&key) {
            return Err(config_error(path, no, format!("unknown key {key:?}")));
        }
        out.push((key.to_string(), value.trim().to_string()));
    }
    Ok(out)
}
