//! Flat `key = value` configuration files.
//!
//! One assignment per line, `#` starts a comment, keys use dotted sections
//! (`train.lr = 1e-2`). There is no nesting.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::engine::ChebyshevOrder;
use crate::error::{Error, Result};

/// Ordered key-value pairs as read from (or written to) a flat file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KvFile {
    entries: BTreeMap<String, String>,
}

impl KvFile {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message: format!("expected `key = value`, got `{line}`"),
            })?;
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: i + 1,
                    message: "empty key".into(),
                });
            }
            if entries.insert(k.to_string(), v.to_string()).is_some() {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: i + 1,
                    message: format!("duplicate key `{k}`"),
                });
            }
        }
        Ok(KvFile { entries })
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_string()).map_err(|e| Error::io(path, e))
    }

    pub fn set(&mut self, key: impl Into<String>, value: impl fmt::Display) {
        self.entries.insert(key.into(), value.to_string());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn parsed<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.get(key)
            .map(|v| {
                v.parse()
                    .map_err(|_| Error::config(format!("cannot parse `{key} = {v}`")))
            })
            .transpose()
    }

    pub fn require<T: FromStr>(&self, key: &str) -> Result<T> {
        self.parsed(key)?
            .ok_or_else(|| Error::config(format!("missing key `{key}`")))
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }
}

impl fmt::Display for KvFile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in &self.entries {
            writeln!(f, "{k} = {v}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    Mixture,
    LogReg,
    Bnn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    Fixed,
    RmsProp,
    Dusvgd,
    Cdusvgd,
}

macro_rules! str_enum {
    ($ty:ty { $($name:literal => $val:expr),* $(,)? }) => {
        impl FromStr for $ty {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($name => Ok($val),)*
                    other => Err(Error::config(format!(
                        concat!("unknown ", stringify!($ty), " `{}`"), other
                    ))),
                }
            }
        }
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                let s = match self { $(v if *v == $val => $name,)* _ => unreachable!() };
                f.write_str(s)
            }
        }
    };
}

str_enum!(Task { "mixture" => Task::Mixture, "logreg" => Task::LogReg, "bnn" => Task::Bnn });
str_enum!(Variant {
    "fixed" => Variant::Fixed,
    "rmsprop" => Variant::RmsProp,
    "dusvgd" => Variant::Dusvgd,
    "cdusvgd" => Variant::Cdusvgd,
});

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataFormat {
    Libsvm,
    Csv,
    Synthetic,
}

str_enum!(DataFormat {
    "libsvm" => DataFormat::Libsvm,
    "csv" => DataFormat::Csv,
    "synthetic" => DataFormat::Synthetic,
});

#[derive(Debug, Clone, PartialEq)]
pub struct SamplerConfig {
    pub particles: usize,
    pub fixed_step: f64,
    pub rmsprop_step: f64,
    pub rmsprop_decay: f64,
    pub rmsprop_floor: f64,
    pub chebyshev_order: ChebyshevOrder,
    /// Data points per score evaluation; `None` = full data.
    pub score_batch: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainBlock {
    pub period: usize,
    pub batch: usize,
    pub dusvgd_epochs: usize,
    pub dusvgd_lr: f64,
    pub dusvgd_init_step: f64,
    pub cdusvgd_epochs: usize,
    pub cdusvgd_lr: f64,
    pub cdusvgd_alpha: f64,
    pub cdusvgd_beta: f64,
    /// Reference samples per training item (mixture).
    pub reference_size: Option<usize>,
    /// Training points per loss evaluation (logreg, bnn).
    pub loss_subsample: Option<usize>,
    /// Load a trained schedule instead of training.
    pub schedule_file: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunBlock {
    pub iterations: usize,
    pub interval: usize,
    pub trials: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataBlock {
    pub format: DataFormat,
    pub path: Option<PathBuf>,
    /// Rows generated for synthetic data (and the mixture dataset).
    pub samples: usize,
    /// Raw input features for the synthetic regression surrogate.
    pub synthetic_features: usize,
    pub train_fraction: f64,
    /// Rows kept before splitting unless `full` is set.
    pub subsample: Option<usize>,
    pub full: bool,
    pub target_column: usize,
    pub header: bool,
    pub standardize: bool,
}

/// Declarative description of one experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub task: Task,
    pub variant: Variant,
    pub model_a: f64,
    pub model_b: f64,
    pub sampler: SamplerConfig,
    pub train: TrainBlock,
    pub run: RunBlock,
    pub data: DataBlock,
    /// Bandwidth of the MMD kernel `exp(-||x - y||^2 / h)`.
    pub mmd_bandwidth: f64,
}

const KEYS: &[&str] = &[
    "task",
    "variant",
    "model.a",
    "model.b",
    "sampler.particles",
    "sampler.fixed_step",
    "sampler.rmsprop.step",
    "sampler.rmsprop.decay",
    "sampler.rmsprop.floor",
    "sampler.chebyshev_order",
    "sampler.score_batch",
    "train.period",
    "train.batch",
    "train.dusvgd.epochs",
    "train.dusvgd.lr",
    "train.dusvgd.init_step",
    "train.cdusvgd.epochs",
    "train.cdusvgd.lr",
    "train.cdusvgd.alpha",
    "train.cdusvgd.beta",
    "train.reference_size",
    "train.loss_subsample",
    "train.schedule_file",
    "run.iterations",
    "run.interval",
    "run.trials",
    "run.seed",
    "data.format",
    "data.path",
    "data.samples",
    "data.synthetic_features",
    "data.train_fraction",
    "data.subsample",
    "data.full",
    "data.target_column",
    "data.header",
    "data.standardize",
    "metric.mmd_bandwidth",
];

fn opt_usize(kv: &KvFile, key: &str, default: Option<usize>) -> Result<Option<usize>> {
    match kv.get(key) {
        None => Ok(default),
        Some("none") | Some("full") => Ok(None),
        Some(_) => kv.parsed(key),
    }
}

fn fmt_opt(v: Option<usize>) -> String {
    v.map_or_else(|| "none".to_string(), |v| v.to_string())
}

impl ExperimentConfig {
    /// Settings of the published experiment for `task`.
    pub fn defaults(task: Task) -> Self {
        let sampler = |fixed_step, rmsprop_step, score_batch| SamplerConfig {
            particles: 100,
            fixed_step,
            rmsprop_step,
            rmsprop_decay: 0.9,
            rmsprop_floor: 1e-8,
            chebyshev_order: ChebyshevOrder::Reversed,
            score_batch,
        };
        match task {
            Task::Mixture => ExperimentConfig {
                task,
                variant: Variant::Dusvgd,
                model_a: 1.0,
                model_b: 0.01,
                sampler: sampler(0.35, 0.1, None),
                train: TrainBlock {
                    period: 10,
                    batch: 50,
                    dusvgd_epochs: 10,
                    dusvgd_lr: 1e-2,
                    dusvgd_init_step: 2.0,
                    cdusvgd_epochs: 40,
                    cdusvgd_lr: 1e-3,
                    cdusvgd_alpha: 0.3,
                    cdusvgd_beta: 1.0,
                    reference_size: Some(100),
                    loss_subsample: None,
                    schedule_file: None,
                },
                run: RunBlock {
                    iterations: 300,
                    interval: 1,
                    trials: 50,
                    seed: 0,
                },
                data: DataBlock {
                    format: DataFormat::Synthetic,
                    path: None,
                    samples: 1000,
                    synthetic_features: 1,
                    train_fraction: 0.9,
                    subsample: None,
                    full: false,
                    target_column: 0,
                    header: false,
                    standardize: false,
                },
                mmd_bandwidth: 2.0,
            },
            Task::LogReg => ExperimentConfig {
                task,
                variant: Variant::Dusvgd,
                model_a: 1.0,
                model_b: 0.01,
                sampler: sampler(2e-5, 1e-2, Some(256)),
                train: TrainBlock {
                    period: 10,
                    batch: 1,
                    dusvgd_epochs: 500,
                    dusvgd_lr: 1e-7,
                    dusvgd_init_step: 2e-5,
                    cdusvgd_epochs: 1000,
                    cdusvgd_lr: 1e-1,
                    cdusvgd_alpha: 200.0,
                    cdusvgd_beta: 500.0,
                    reference_size: None,
                    loss_subsample: None,
                    schedule_file: None,
                },
                run: RunBlock {
                    iterations: 500,
                    interval: 10,
                    trials: 30,
                    seed: 0,
                },
                data: DataBlock {
                    format: DataFormat::Synthetic,
                    path: None,
                    samples: 20_000,
                    synthetic_features: 54,
                    train_fraction: 0.8,
                    subsample: Some(20_000),
                    full: false,
                    target_column: 0,
                    header: false,
                    standardize: true,
                },
                mmd_bandwidth: 2.0,
            },
            Task::Bnn => ExperimentConfig {
                task,
                variant: Variant::Dusvgd,
                model_a: 1.0,
                model_b: 0.01,
                sampler: sampler(1e-4, 1e-2, Some(256)),
                train: TrainBlock {
                    period: 15,
                    batch: 1,
                    dusvgd_epochs: 500,
                    dusvgd_lr: 1e-6,
                    dusvgd_init_step: 1e-4,
                    cdusvgd_epochs: 500,
                    cdusvgd_lr: 1.0,
                    cdusvgd_alpha: 50.0,
                    cdusvgd_beta: 50.0,
                    reference_size: None,
                    loss_subsample: None,
                    schedule_file: None,
                },
                run: RunBlock {
                    iterations: 3000,
                    interval: 50,
                    trials: 10,
                    seed: 0,
                },
                data: DataBlock {
                    format: DataFormat::Synthetic,
                    path: None,
                    samples: 500,
                    synthetic_features: 13,
                    train_fraction: 0.9,
                    subsample: None,
                    full: false,
                    target_column: 13,
                    header: false,
                    standardize: true,
                },
                mmd_bandwidth: 2.0,
            },
        }
    }

    /// Task defaults overridden by the keys in `kv`. Unknown keys are errors.
    pub fn from_kv(kv: &KvFile) -> Result<Self> {
        if let Some(bad) = kv.keys().find(|k| !KEYS.contains(k)) {
            return Err(Error::config(format!("unknown key `{bad}`")));
        }
        let task: Task = kv.require("task")?;
        let d = Self::defaults(task);
        let f = |key: &str, def: f64| -> Result<f64> { Ok(kv.parsed(key)?.unwrap_or(def)) };
        let u = |key: &str, def: usize| -> Result<usize> { Ok(kv.parsed(key)?.unwrap_or(def)) };
        let b = |key: &str, def: bool| -> Result<bool> { Ok(kv.parsed(key)?.unwrap_or(def)) };
        let path = |key: &str, def: &Option<PathBuf>| -> Option<PathBuf> {
            kv.get(key).map(PathBuf::from).or_else(|| def.clone())
        };

        let cfg = ExperimentConfig {
            task,
            variant: kv.parsed("variant")?.unwrap_or(d.variant),
            model_a: f("model.a", d.model_a)?,
            model_b: f("model.b", d.model_b)?,
            sampler: SamplerConfig {
                particles: u("sampler.particles", d.sampler.particles)?,
                fixed_step: f("sampler.fixed_step", d.sampler.fixed_step)?,
                rmsprop_step: f("sampler.rmsprop.step", d.sampler.rmsprop_step)?,
                rmsprop_decay: f("sampler.rmsprop.decay", d.sampler.rmsprop_decay)?,
                rmsprop_floor: f("sampler.rmsprop.floor", d.sampler.rmsprop_floor)?,
                chebyshev_order: kv
                    .parsed("sampler.chebyshev_order")?
                    .unwrap_or(d.sampler.chebyshev_order),
                score_batch: opt_usize(kv, "sampler.score_batch", d.sampler.score_batch)?,
            },
            train: TrainBlock {
                period: u("train.period", d.train.period)?,
                batch: u("train.batch", d.train.batch)?,
                dusvgd_epochs: u("train.dusvgd.epochs", d.train.dusvgd_epochs)?,
                dusvgd_lr: f("train.dusvgd.lr", d.train.dusvgd_lr)?,
                dusvgd_init_step: f("train.dusvgd.init_step", d.train.dusvgd_init_step)?,
                cdusvgd_epochs: u("train.cdusvgd.epochs", d.train.cdusvgd_epochs)?,
                cdusvgd_lr: f("train.cdusvgd.lr", d.train.cdusvgd_lr)?,
                cdusvgd_alpha: f("train.cdusvgd.alpha", d.train.cdusvgd_alpha)?,
                cdusvgd_beta: f("train.cdusvgd.beta", d.train.cdusvgd_beta)?,
                reference_size: opt_usize(kv, "train.reference_size", d.train.reference_size)?,
                loss_subsample: opt_usize(kv, "train.loss_subsample", d.train.loss_subsample)?,
                schedule_file: path("train.schedule_file", &d.train.schedule_file),
            },
            run: RunBlock {
                iterations: u("run.iterations", d.run.iterations)?,
                interval: u("run.interval", d.run.interval)?,
                trials: u("run.trials", d.run.trials)?,
                seed: kv.parsed("run.seed")?.unwrap_or(d.run.seed),
            },
            data: DataBlock {
                format: kv.parsed("data.format")?.unwrap_or(d.data.format),
                path: path("data.path", &d.data.path),
                samples: u("data.samples", d.data.samples)?,
                synthetic_features: u("data.synthetic_features", d.data.synthetic_features)?,
                train_fraction: f("data.train_fraction", d.data.train_fraction)?,
                subsample: opt_usize(kv, "data.subsample", d.data.subsample)?,
                full: b("data.full", d.data.full)?,
                target_column: u("data.target_column", d.data.target_column)?,
                header: b("data.header", d.data.header)?,
                standardize: b("data.standardize", d.data.standardize)?,
            },
            mmd_bandwidth: f("metric.mmd_bandwidth", d.mmd_bandwidth)?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_kv(&KvFile::read(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, msg: &str| if ok { Ok(()) } else { Err(Error::config(msg)) };
        check(self.run.trials >= 1, "run.trials must be at least 1")?;
        check(self.run.interval >= 1, "run.interval must be at least 1")?;
        check(self.sampler.particles >= 1, "sampler.particles must be at least 1")?;
        check(
            self.data.train_fraction > 0.0 && self.data.train_fraction < 1.0,
            "data.train_fraction must lie in (0, 1)",
        )?;
        check(self.train.period >= 1, "train.period must be at least 1")?;
        check(self.mmd_bandwidth > 0.0, "metric.mmd_bandwidth must be positive")?;
        check(self.model_a > 0.0 && self.model_b > 0.0, "model.a and model.b must be positive")?;
        if matches!(self.data.format, DataFormat::Libsvm | DataFormat::Csv) {
            check(self.data.path.is_some(), "data.path is required for file datasets")?;
        }
        Ok(())
    }

    pub fn to_kv(&self) -> KvFile {
        let mut kv = KvFile::new();
        kv.set("task", self.task);
        kv.set("variant", self.variant);
        kv.set("model.a", self.model_a);
        kv.set("model.b", self.model_b);
        let s = &self.sampler;
        kv.set("sampler.particles", s.particles);
        kv.set("sampler.fixed_step", s.fixed_step);
        kv.set("sampler.rmsprop.step", s.rmsprop_step);
        kv.set("sampler.rmsprop.decay", s.rmsprop_decay);
        kv.set("sampler.rmsprop.floor", s.rmsprop_floor);
        kv.set("sampler.chebyshev_order", s.chebyshev_order);
        kv.set("sampler.score_batch", fmt_opt(s.score_batch));
        let t = &self.train;
        kv.set("train.period", t.period);
        kv.set("train.batch", t.batch);
        kv.set("train.dusvgd.epochs", t.dusvgd_epochs);
        kv.set("train.dusvgd.lr", t.dusvgd_lr);
        kv.set("train.dusvgd.init_step", t.dusvgd_init_step);
        kv.set("train.cdusvgd.epochs", t.cdusvgd_epochs);
        kv.set("train.cdusvgd.lr", t.cdusvgd_lr);
        kv.set("train.cdusvgd.alpha", t.cdusvgd_alpha);
        kv.set("train.cdusvgd.beta", t.cdusvgd_beta);
        kv.set("train.reference_size", fmt_opt(t.reference_size));
        kv.set("train.loss_subsample", fmt_opt(t.loss_subsample));
        if let Some(p) = &t.schedule_file {
            kv.set("train.schedule_file", p.display());
        }
        let r = &self.run;
        kv.set("run.iterations", r.iterations);
        kv.set("run.interval", r.interval);
        kv.set("run.trials", r.trials);
        kv.set("run.seed", r.seed);
        let dd = &self.data;
        kv.set("data.format", dd.format);
        if let Some(p) = &dd.path {
            kv.set("data.path", p.display());
        }
        kv.set("data.samples", dd.samples);
        kv.set("data.synthetic_features", dd.synthetic_features);
        kv.set("data.train_fraction", dd.train_fraction);
        kv.set("data.subsample", fmt_opt(dd.subsample));
        kv.set("data.full", dd.full);
        kv.set("data.target_column", dd.target_column);
        kv.set("data.header", dd.header);
        kv.set("data.standardize", dd.standardize);
        kv.set("metric.mmd_bandwidth", self.mmd_bandwidth);
        kv
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<KvFile> {
        KvFile::parse(text, Path::new("x.cfg"))
    }

    #[test]
    fn comments_blank_lines_and_whitespace() {
        let kv = parse("# header\n\ntask = mixture  # trailing\n  train.lr=1e-2\n").unwrap();
        assert_eq!(kv.get("task"), Some("mixture"));
        assert_eq!(kv.get("train.lr"), Some("1e-2"));
    }

    #[test]
    fn malformed_and_duplicate_lines() {
        match parse("task = bnn\njust words\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        assert!(parse("a = 1\na = 2\n").is_err());
    }

    #[test]
    fn defaults_overridden_and_round_tripped() {
        let kv = parse("task = logreg\nvariant = cdusvgd\nrun.trials = 3\nsampler.score_batch = none\n").unwrap();
        let cfg = ExperimentConfig::from_kv(&kv).unwrap();
        assert_eq!(cfg.variant, Variant::Cdusvgd);
        assert_eq!(cfg.run.trials, 3);
        assert_eq!(cfg.sampler.score_batch, None);
        assert_eq!(cfg.train.cdusvgd_alpha, 200.0);
        let again = ExperimentConfig::from_kv(&parse(&cfg.to_kv().to_string()).unwrap()).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn unknown_key_and_bad_values_rejected() {
        assert!(ExperimentConfig::from_kv(&parse("task = mixture\ntrain.learning = 1\n").unwrap()).is_err());
        assert!(ExperimentConfig::from_kv(&parse("task = mixture\nrun.trials = 0\n").unwrap()).is_err());
        assert!(ExperimentConfig::from_kv(&parse("task = mixture\ndata.train_fraction = 1.5\n").unwrap()).is_err());
        assert!(ExperimentConfig::from_kv(&parse("task = nope\n").unwrap()).is_err());
        assert!(ExperimentConfig::from_kv(&parse("variant = fixed\n").unwrap()).is_err());
    }
}
