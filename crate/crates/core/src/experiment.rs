//! End-to-end experiments: data preparation, schedule training, evaluation
//! trials, and the files they produce.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write as _};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::config::{DataFormat, ExperimentConfig, KvFile, Task, Variant};
use crate::data::{self, CsvOptions, Standardizer};
use crate::engine::{run, ChebyshevOrder, RmsProp, RunOptions, StepSchedule};
use crate::error::{Error, Result};
use crate::kernels::RbfKernel;
use crate::matrix::Matrix;
use crate::particles::{init_particles, ParticleSet};
use crate::rng::{RngSeed, Stream};
use crate::targets::{logreg, BayesLogReg, BayesNN, BnnLayout, GaussianMixture1D};
use crate::trainer::{
    mmd, rmse, train_cdusvgd, train_dusvgd, LossRecord, LossSpec, ParamKind, TrainConfig, UnfoldProblem,
};

/// Held-out evaluation of a particle set.
#[derive(Debug, Clone)]
pub enum Evaluator {
    Mmd { test: Matrix, kernel: RbfKernel },
    Accuracy { x: Matrix, t: Vec<f64> },
    /// RMSE of the posterior predictive mean in the original target units.
    Rmse {
        layout: BnnLayout,
        x: Matrix,
        y: Vec<f64>,
        target: Standardizer,
    },
}

impl Evaluator {
    pub fn metric(&self) -> &'static str {
        match self {
            Evaluator::Mmd { .. } => "mmd",
            Evaluator::Accuracy { .. } => "accuracy",
            Evaluator::Rmse { .. } => "rmse",
        }
    }

    pub fn evaluate(&self, particles: &ParticleSet) -> Result<f64> {
        match self {
            Evaluator::Mmd { test, kernel } => {
                let x = Matrix::from_flat(particles.m(), particles.d(), particles.as_slice().to_vec())?;
                mmd(&x, test, kernel)
            }
            Evaluator::Accuracy { x, t } => Ok(logreg::accuracy(&logreg::predict_proba(particles, x)?, t)?),
            Evaluator::Rmse { layout, x, y, target } => {
                if particles.d() != layout.dim() || x.cols() != layout.inputs {
                    return Err(Error::argument("particles do not match network layout"));
                }
                let m = particles.m() as f64;
                let pred: Vec<f64> = (0..x.rows())
                    .map(|n| particles.rows().map(|w| layout.forward_unchecked(w, x.row(n))).sum::<f64>() / m)
                    .collect();
                rmse(y, &target.invert_values(&pred))
            }
        }
    }
}

/// A task's model, training loss and held-out evaluator, built from data.
pub struct Prepared {
    pub problem: UnfoldProblem,
    pub evaluator: Evaluator,
}

fn load_or_generate(cfg: &ExperimentConfig, seed: RngSeed, synthetic: impl FnOnce() -> (Matrix, Vec<f64>)) -> Result<(Matrix, Vec<f64>)> {
    let d = &cfg.data;
    let (x, y) = match (d.format, &d.path) {
        (DataFormat::Synthetic, _) => synthetic(),
        (DataFormat::Libsvm, Some(p)) => data::parse_libsvm(p, None)?,
        (DataFormat::Csv, Some(p)) => data::parse_csv_regression(
            p,
            CsvOptions {
                target_column: d.target_column,
                has_header: d.header,
                append_bias: false,
            },
        )?,
        (_, None) => return Err(Error::config("data.path is required for file datasets")),
    };
    match d.subsample {
        Some(k) if !d.full && k < x.rows() => {
            let idx = data::subsample(x.rows(), k, seed);
            let y = idx.iter().map(|&i| y[i]).collect();
            Ok((x.select_rows(&idx), y))
        }
        _ => Ok((x, y)),
    }
}

fn split_xy(x: &Matrix, y: &[f64], fraction: f64, seed: RngSeed) -> Result<(Matrix, Vec<f64>, Matrix, Vec<f64>)> {
    let (tr, te) = data::split(x.rows(), fraction, seed)?;
    let pick = |idx: &[usize]| idx.iter().map(|&i| y[i]).collect::<Vec<_>>();
    Ok((x.select_rows(&tr), pick(&tr), x.select_rows(&te), pick(&te)))
}

/// Builds the dataset, model, training loss and evaluator for `cfg.task`.
/// All randomness comes from `run.seed`.
pub fn prepare(cfg: &ExperimentConfig) -> Result<Prepared> {
    let seed = RngSeed(cfg.run.seed);
    let data_seed = seed.derive(Stream::Dataset);
    let split_seed = seed.derive(Stream::Split);
    let mmd_kernel = RbfKernel::new(cfg.mmd_bandwidth)?;
    match cfg.task {
        Task::Mixture => {
            let model = GaussianMixture1D::benchmark();
            let samples = data::mixture_samples(&model, cfg.data.samples, data_seed);
            let (tr, te) = data::split(samples.rows(), cfg.data.train_fraction, split_seed)?;
            Ok(Prepared {
                problem: UnfoldProblem {
                    model: Box::new(model),
                    particles: cfg.sampler.particles,
                    score_batch: cfg.sampler.score_batch,
                    loss: LossSpec::Mmd {
                        reference: samples.select_rows(&tr),
                        sample_size: cfg.train.reference_size,
                        kernel: mmd_kernel,
                    },
                },
                evaluator: Evaluator::Mmd {
                    test: samples.select_rows(&te),
                    kernel: mmd_kernel,
                },
            })
        }
        Task::LogReg => {
            let (x, t) = load_or_generate(cfg, split_seed, || data::synthetic_logistic(cfg.data.samples, data_seed))?;
            let (mut xtr, ttr, mut xte, tte) = split_xy(&x, &t, cfg.data.train_fraction, split_seed)?;
            if cfg.data.standardize {
                let s = Standardizer::fit(&xtr);
                xtr = s.apply(&xtr);
                xte = s.apply(&xte);
            }
            let (xtr, xte) = (xtr.with_constant_column(1.0), xte.with_constant_column(1.0));
            let labels01 = ttr.iter().map(|&v| if v > 0.0 { 1.0 } else { 0.0 }).collect();
            let model = BayesLogReg::new(xtr.clone(), ttr, cfg.model_a, cfg.model_b)?;
            Ok(Prepared {
                problem: UnfoldProblem {
                    model: Box::new(model),
                    particles: cfg.sampler.particles,
                    score_batch: cfg.sampler.score_batch,
                    loss: LossSpec::CrossEntropy {
                        x: xtr,
                        labels01,
                        subsample: cfg.train.loss_subsample,
                    },
                },
                evaluator: Evaluator::Accuracy { x: xte, t: tte },
            })
        }
        Task::Bnn => {
            let (x, y) = load_or_generate(cfg, split_seed, || {
                data::synthetic_regression(cfg.data.samples, cfg.data.synthetic_features, data_seed)
            })?;
            let (mut xtr, ytr, mut xte, yte) = split_xy(&x, &y, cfg.data.train_fraction, split_seed)?;
            let target = if cfg.data.standardize {
                let s = Standardizer::fit(&xtr);
                xtr = s.apply(&xtr);
                xte = s.apply(&xte);
                Standardizer::fit_values(&ytr)
            } else {
                Standardizer {
                    mean: vec![0.0],
                    std: vec![1.0],
                }
            };
            let ytr = target.apply_values(&ytr);
            let mut model = BayesNN::new(xtr.clone(), ytr.clone())?;
            model.a_lambda = cfg.model_a;
            model.a_gamma = cfg.model_a;
            model.b_lambda = cfg.model_b;
            model.b_gamma = cfg.model_b;
            let layout = model.layout();
            Ok(Prepared {
                problem: UnfoldProblem {
                    model: Box::new(model),
                    particles: cfg.sampler.particles,
                    score_batch: cfg.sampler.score_batch,
                    loss: LossSpec::SquaredError {
                        layout,
                        x: xtr,
                        y: ytr,
                        subsample: cfg.train.loss_subsample,
                    },
                },
                evaluator: Evaluator::Rmse {
                    layout,
                    x: xte,
                    y: yte,
                    target,
                },
            })
        }
    }
}

/// Trained step-size parameters, persisted as a flat key-value file.
#[derive(Debug, Clone, PartialEq)]
pub enum TrainedSchedule {
    Learned(Vec<f64>),
    Chebyshev {
        alpha: f64,
        beta: f64,
        period: usize,
        order: ChebyshevOrder,
    },
}

impl TrainedSchedule {
    pub fn from_outcome(kind: &ParamKind, params: &[f64]) -> Self {
        match kind {
            ParamKind::Learned => TrainedSchedule::Learned(params.to_vec()),
            ParamKind::Chebyshev { period, order } => TrainedSchedule::Chebyshev {
                alpha: params[0],
                beta: params[1],
                period: *period,
                order: *order,
            },
        }
    }

    pub fn schedule(&self) -> Result<StepSchedule> {
        match self {
            TrainedSchedule::Learned(steps) => StepSchedule::learned(steps.clone()),
            TrainedSchedule::Chebyshev {
                alpha,
                beta,
                period,
                order,
            } => StepSchedule::chebyshev(*alpha, *beta, *period, *order),
        }
    }

    pub fn variant(&self) -> Variant {
        match self {
            TrainedSchedule::Learned(_) => Variant::Dusvgd,
            TrainedSchedule::Chebyshev { .. } => Variant::Cdusvgd,
        }
    }

    pub fn to_kv(&self) -> KvFile {
        let mut kv = KvFile::new();
        match self {
            TrainedSchedule::Learned(steps) => {
                kv.set("kind", "learned");
                kv.set("period", steps.len());
                let joined: Vec<String> = steps.iter().map(|s| s.to_string()).collect();
                kv.set("steps", joined.join(","));
            }
            TrainedSchedule::Chebyshev {
                alpha,
                beta,
                period,
                order,
            } => {
                kv.set("kind", "chebyshev");
                kv.set("period", period);
                kv.set("order", order);
                kv.set("alpha", alpha);
                kv.set("beta", beta);
            }
        }
        kv
    }

    pub fn from_kv(kv: &KvFile) -> Result<Self> {
        match kv.get("kind") {
            Some("learned") => {
                let raw = kv.get("steps").ok_or_else(|| Error::config("missing key `steps`"))?;
                let steps = raw
                    .split(',')
                    .map(|s| s.trim().parse::<f64>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|_| Error::config(format!("cannot parse steps `{raw}`")))?;
                Ok(TrainedSchedule::Learned(steps))
            }
            Some("chebyshev") => Ok(TrainedSchedule::Chebyshev {
                alpha: kv.require("alpha")?,
                beta: kv.require("beta")?,
                period: kv.require("period")?,
                order: kv.require("order")?,
            }),
            Some(other) => Err(Error::config(format!("unknown schedule kind `{other}`"))),
            None => Err(Error::config("missing key `kind`")),
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.to_kv().write(path)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_kv(&KvFile::read(path)?)
    }
}

/// A trained schedule together with its loss history.
#[derive(Debug, Clone)]
pub struct Training {
    pub schedule: TrainedSchedule,
    pub history: Vec<LossRecord>,
}

/// Trains the schedule of a DUSVGD or C-DUSVGD variant.
pub fn train(cfg: &ExperimentConfig, prepared: &Prepared, variant: Variant) -> Result<Training> {
    let t = &cfg.train;
    let seed = RngSeed(cfg.run.seed).derive(Stream::Training);
    let (epochs, lr) = match variant {
        Variant::Dusvgd => (t.dusvgd_epochs, t.dusvgd_lr),
        Variant::Cdusvgd => (t.cdusvgd_epochs, t.cdusvgd_lr),
        other => return Err(Error::config(format!("variant `{other}` has nothing to train"))),
    };
    let tc = TrainConfig {
        period: t.period,
        epochs,
        batch: t.batch,
        lr,
        init_step: t.dusvgd_init_step,
        init_chebyshev: (t.cdusvgd_alpha, t.cdusvgd_beta),
        order: cfg.sampler.chebyshev_order,
    };
    let outcome = match variant {
        Variant::Dusvgd => train_dusvgd(&prepared.problem, &tc, seed)?,
        _ => train_cdusvgd(&prepared.problem, &tc, seed)?,
    };
    Ok(Training {
        schedule: TrainedSchedule::from_outcome(&outcome.kind, &outcome.params),
        history: outcome.history,
    })
}

/// Sampler schedule for an untrained variant.
pub fn baseline_schedule(cfg: &ExperimentConfig, variant: Variant) -> Result<StepSchedule> {
    let s = &cfg.sampler;
    match variant {
        Variant::Fixed => StepSchedule::fixed(s.fixed_step),
        Variant::RmsProp => Ok(StepSchedule::RmsProp(RmsProp::new(
            s.rmsprop_step,
            s.rmsprop_decay,
            s.rmsprop_floor,
        )?)),
        other => Err(Error::config(format!("variant `{other}` needs a trained schedule"))),
    }
}

/// One evaluation row of a curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveRow {
    pub trial: usize,
    pub iteration: usize,
    pub value: f64,
}

/// Per-trial metric snapshots, with trial-level failures kept alongside.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricCurve {
    pub metric: String,
    pub rows: Vec<CurveRow>,
    /// `(trial, message)` for trials that stopped early.
    pub errors: Vec<(usize, String)>,
}

const CURVE_HEADER: &str = "trial,iteration,metric,value";
const ERROR_METRIC: &str = "error";

impl MetricCurve {
    pub fn trials(&self) -> usize {
        self.rows
            .iter()
            .map(|r| r.trial + 1)
            .chain(self.errors.iter().map(|e| e.0 + 1))
            .max()
            .unwrap_or(0)
    }

    /// Mean over the trials that reached each iteration.
    pub fn mean(&self) -> Vec<(usize, f64)> {
        let mut acc: std::collections::BTreeMap<usize, (f64, usize)> = Default::default();
        for r in &self.rows {
            let e = acc.entry(r.iteration).or_default();
            e.0 += r.value;
            e.1 += 1;
        }
        acc.into_iter().map(|(it, (s, n))| (it, s / n as f64)).collect()
    }

    /// Values of every trial at `iteration`.
    pub fn at(&self, iteration: usize) -> Vec<f64> {
        self.rows.iter().filter(|r| r.iteration == iteration).map(|r| r.value).collect()
    }

    /// CSV text; a failed trial ends with an `error` row holding `NaN`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from(CURVE_HEADER);
        s.push('\n');
        let mut errors = self.errors.iter().peekable();
        let mut last_trial = None;
        let flush = |s: &mut String, trial: usize, errors: &mut std::iter::Peekable<std::slice::Iter<(usize, String)>>| {
            while let Some((t, _)) = errors.peek() {
                if *t > trial {
                    break;
                }
                let _ = writeln!(s, "{t},0,{ERROR_METRIC},NaN");
                errors.next();
            }
        };
        for r in &self.rows {
            if last_trial != Some(r.trial) {
                if let Some(prev) = last_trial {
                    flush(&mut s, prev, &mut errors);
                }
                last_trial = Some(r.trial);
            }
            let _ = writeln!(s, "{},{},{},{}", r.trial, r.iteration, self.metric, r.value);
        }
        flush(&mut s, usize::MAX, &mut errors);
        s
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    pub fn parse_csv(text: &str, path: &Path) -> Result<Self> {
        let bad = |line: usize, message: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            message,
        };
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim() == CURVE_HEADER => {}
            _ => return Err(bad(1, format!("expected header `{CURVE_HEADER}`"))),
        }
        let mut curve = MetricCurve {
            metric: String::new(),
            rows: Vec::new(),
            errors: Vec::new(),
        };
        for (i, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 4 {
                return Err(bad(i + 1, "expected 4 fields".into()));
            }
            let trial = f[0].parse().map_err(|_| bad(i + 1, "bad trial".into()))?;
            if f[2] == ERROR_METRIC {
                curve.errors.push((trial, String::new()));
                continue;
            }
            let iteration = f[1].parse().map_err(|_| bad(i + 1, "bad iteration".into()))?;
            let value = f[3].parse().map_err(|_| bad(i + 1, "bad value".into()))?;
            if curve.metric.is_empty() {
                curve.metric = f[2].to_string();
            } else if curve.metric != f[2] {
                return Err(bad(i + 1, format!("mixed metrics `{}` and `{}`", curve.metric, f[2])));
            }
            curve.rows.push(CurveRow { trial, iteration, value });
        }
        Ok(curve)
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_csv(&text, path)
    }
}

/// Result of one evaluation trial.
#[derive(Debug, Clone)]
pub struct TrialResult {
    pub snapshots: Vec<(usize, f64)>,
    pub particles: ParticleSet,
    pub error: Option<String>,
}

/// Runs `trials` independent samplers from distinct seeds, in parallel,
/// returning results in trial order.
pub fn run_trials(cfg: &ExperimentConfig, prepared: &Prepared, schedule: &StepSchedule) -> Result<Vec<TrialResult>> {
    let root = RngSeed(cfg.run.seed);
    let opts = RunOptions {
        iterations: cfg.run.iterations,
        metric_interval: cfg.run.interval,
        score_batch: cfg.sampler.score_batch,
    };
    let model = prepared.problem.model.as_ref();
    (0..cfg.run.trials)
        .into_par_iter()
        .map(|trial| {
            let seed = root.derive(Stream::Trial(trial as u64));
            let mut particles = init_particles(model, cfg.sampler.particles, seed)?;
            let mut schedule = schedule.clone();
            let mut snapshots = Vec::new();
            let outcome = run(&mut particles, model, &mut schedule, &opts, seed, |p| {
                let v = prepared.evaluator.evaluate(p)?;
                snapshots.push((p.iter, v));
                Ok(())
            });
            Ok(TrialResult {
                snapshots,
                particles,
                error: outcome.err().map(|e| e.to_string()),
            })
        })
        .collect()
}

/// Everything an experiment run produced.
#[derive(Debug, Clone)]
pub struct Report {
    pub config: ExperimentConfig,
    pub curve: MetricCurve,
    pub training: Option<Training>,
    pub schedule: Option<TrainedSchedule>,
    pub particles: Vec<ParticleSet>,
}

impl Report {
    pub fn final_iteration(&self) -> Option<usize> {
        self.curve.rows.iter().map(|r| r.iteration).max()
    }

    pub fn summary(&self) -> KvFile {
        let mut kv = KvFile::new();
        kv.set("task", self.config.task);
        kv.set("variant", self.config.variant);
        kv.set("metric", &self.curve.metric);
        kv.set("trials", self.config.run.trials);
        kv.set("failed_trials", self.curve.errors.len());
        for (t, msg) in &self.curve.errors {
            kv.set(format!("trial.{t}.error"), msg);
        }
        if let Some(it) = self.final_iteration() {
            let v = self.curve.at(it);
            let mean = v.iter().sum::<f64>() / v.len() as f64;
            let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / v.len() as f64;
            kv.set("final.iteration", it);
            kv.set("final.mean", mean);
            kv.set("final.std", var.sqrt());
        }
        if let Some(s) = &self.schedule {
            for (k, v) in s.to_kv().iter() {
                kv.set(format!("schedule.{k}"), v);
            }
        }
        if let Some(last) = self.training.as_ref().and_then(|t| t.history.last()) {
            kv.set("train.final_loss", last.loss);
        }
        kv
    }

    /// Writes `curve.csv`, `mean_curve.csv`, `summary.txt`, `config.cfg`,
    /// `particles.csv` and, for trained variants, `schedule.cfg` and
    /// `train_history.csv`.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        self.curve.write_csv(dir.join("curve.csv"))?;
        write_mean_curve(&self.curve, dir.join("mean_curve.csv"))?;
        self.summary().write(dir.join("summary.txt"))?;
        self.config.to_kv().write(dir.join("config.cfg"))?;
        write_particles(&self.particles, dir.join("particles.csv"))?;
        if let Some(s) = &self.schedule {
            s.save(dir.join("schedule.cfg"))?;
        }
        if let Some(t) = &self.training {
            write_history(&t.history, dir.join("train_history.csv"))?;
        }
        Ok(())
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?))
}

fn write_mean_curve(curve: &MetricCurve, path: PathBuf) -> Result<()> {
    let mut s = String::from("iteration,metric,value\n");
    for (it, v) in curve.mean() {
        let _ = writeln!(s, "{it},{},{v}", curve.metric);
    }
    std::fs::write(&path, s).map_err(|e| Error::io(&path, e))
}

pub fn write_history(history: &[LossRecord], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    let io = |e| Error::io(path, e);
    writeln!(w, "depth,epoch,loss").map_err(io)?;
    for r in history {
        writeln!(w, "{},{},{}", r.depth, r.epoch, r.loss).map_err(io)?;
    }
    w.flush().map_err(io)
}

/// One line per particle: `trial,particle,x0,x1,...`.
pub fn write_particles(sets: &[ParticleSet], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    let io = |e| Error::io(path, e);
    let d = sets.first().map_or(0, |s| s.d());
    let cols: Vec<String> = (0..d).map(|j| format!("x{j}")).collect();
    writeln!(w, "trial,particle,{}", cols.join(",")).map_err(io)?;
    for (t, set) in sets.iter().enumerate() {
        for (i, row) in set.rows().enumerate() {
            write!(w, "{t},{i}").map_err(io)?;
            for v in row {
                write!(w, ",{v}").map_err(io)?;
            }
            writeln!(w).map_err(io)?;
        }
    }
    w.flush().map_err(io)
}

/// Inverse of [`write_particles`].
pub fn read_particles(path: impl AsRef<Path>) -> Result<Vec<ParticleSet>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let bad = |line: usize, message: &str| Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.to_string(),
    };
    let mut rows: Vec<Vec<Vec<f64>>> = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let mut f = line.split(',');
        let trial: usize = f
            .next()
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| bad(i + 1, "bad trial index"))?;
        f.next();
        let values = f
            .map(|v| v.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| bad(i + 1, "non-numeric particle entry"))?;
        if trial == rows.len() {
            rows.push(Vec::new());
        } else if trial + 1 != rows.len() {
            return Err(bad(i + 1, "trials must appear in order"));
        }
        rows[trial].push(values);
    }
    rows.iter().map(|r| ParticleSet::from_rows(r)).collect()
}

/// Resolves the step schedule for `cfg.variant`: baselines directly,
/// trained variants from `train.schedule_file` or by training now.
pub fn resolve_schedule(cfg: &ExperimentConfig, prepared: &Prepared) -> Result<(StepSchedule, Option<Training>, Option<TrainedSchedule>)> {
    match cfg.variant {
        Variant::Fixed | Variant::RmsProp => Ok((baseline_schedule(cfg, cfg.variant)?, None, None)),
        variant => {
            if let Some(path) = &cfg.train.schedule_file {
                let trained = TrainedSchedule::load(path)?;
                if trained.variant() != variant {
                    return Err(Error::config(format!(
                        "{} holds a {} schedule, not {variant}",
                        path.display(),
                        trained.variant()
                    )));
                }
                return Ok((trained.schedule()?, None, Some(trained)));
            }
            let training = train(cfg, prepared, variant)?;
            let schedule = training.schedule.clone();
            Ok((schedule.schedule()?, Some(training), Some(schedule)))
        }
    }
}

/// Prepares data, obtains the schedule and runs all trials. Failed trials
/// keep their snapshots up to the failure and are listed in `curve.errors`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Report> {
    cfg.validate()?;
    let prepared = prepare(cfg)?;
    let (schedule, training, trained) = resolve_schedule(cfg, &prepared)?;
    let results = run_trials(cfg, &prepared, &schedule)?;
    let mut curve = MetricCurve {
        metric: prepared.evaluator.metric().to_string(),
        rows: Vec::new(),
        errors: Vec::new(),
    };
    let mut particles = Vec::with_capacity(results.len());
    for (trial, r) in results.into_iter().enumerate() {
        curve
            .rows
            .extend(r.snapshots.iter().map(|&(iteration, value)| CurveRow { trial, iteration, value }));
        if let Some(e) = r.error {
            curve.errors.push((trial, e));
        }
        particles.push(r.particles);
    }
    Ok(Report {
        config: cfg.clone(),
        curve,
        training,
        schedule: trained,
        particles,
    })
}

/// Metric of each saved particle set against the held-out split of `cfg`.
pub fn evaluate_particles(cfg: &ExperimentConfig, sets: &[ParticleSet]) -> Result<(String, Vec<f64>)> {
    let prepared = prepare(cfg)?;
    let values = sets
        .iter()
        .map(|s| prepared.evaluator.evaluate(s))
        .collect::<Result<Vec<_>>>()?;
    Ok((prepared.evaluator.metric().to_string(), values))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curve() -> MetricCurve {
        MetricCurve {
            metric: "mmd".into(),
            rows: vec![
                CurveRow { trial: 0, iteration: 0, value: 0.5 },
                CurveRow { trial: 0, iteration: 10, value: 0.1 },
                CurveRow { trial: 1, iteration: 0, value: 0.25 },
            ],
            errors: vec![(1, String::new())],
        }
    }

    #[test]
    fn curve_csv_round_trip_with_error_marker() {
        let c = curve();
        let text = c.to_csv();
        assert!(text.starts_with("trial,iteration,metric,value\n"));
        assert!(text.ends_with("1,0,mmd,0.25\n1,0,error,NaN\n"));
        assert_eq!(MetricCurve::parse_csv(&text, Path::new("c.csv")).unwrap(), c);
    }

    #[test]
    fn mean_uses_trials_present() {
        assert_eq!(curve().mean(), vec![(0, 0.375), (10, 0.1)]);
    }

    #[test]
    fn schedule_kv_round_trip() {
        for s in [
            TrainedSchedule::Learned(vec![0.1, 1.0 / 3.0, 2e-5]),
            TrainedSchedule::Chebyshev {
                alpha: 0.3,
                beta: 1.0 / 7.0,
                period: 10,
                order: ChebyshevOrder::Forward,
            },
        ] {
            let text = s.to_kv().to_string();
            let kv = KvFile::parse(&text, Path::new("s.cfg")).unwrap();
            assert_eq!(TrainedSchedule::from_kv(&kv).unwrap(), s);
        }
    }
}
