use std::path::Path;

use dusvgd_core::config::{ExperimentConfig, KvFile, Task, Variant};
use dusvgd_core::data::{parse_csv_regression, read_libsvm, split, write_csv_regression, CsvOptions};
use dusvgd_core::experiment::{read_particles, run_experiment, MetricCurve, TrainedSchedule};
use dusvgd_core::kde::{kde, linspace, local_maxima, trapezoid};
use dusvgd_core::matrix::Matrix;
use dusvgd_core::RngSeed;

#[test]
fn libsvm_examples() {
    let (x, t) = read_libsvm("2 1:1 2:2\n1\n".as_bytes(), Path::new("t"), Some(3)).unwrap();
    assert_eq!(t, vec![-1.0, 1.0]);
    assert_eq!(x.row(0), &[1.0, 2.0, 0.0]);
    assert_eq!(x.row(1), &[0.0, 0.0, 0.0]);
    assert!(read_libsvm("1 1:1\n3 1:1\n2 1:0\n".as_bytes(), Path::new("t"), None).is_err());
}

#[test]
fn csv_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.csv");
    let x = Matrix::from_rows(&[[0.1, 1.0 / 3.0], [-2.5e-7, 12345.678]]).unwrap();
    let y = vec![std::f64::consts::PI, -0.0625];
    write_csv_regression(&path, &x, &y, 2).unwrap();
    let opts = CsvOptions {
        target_column: 2,
        has_header: false,
        append_bias: true,
    };
    let (x2, y2) = parse_csv_regression(&path, opts).unwrap();
    assert_eq!(x2.cols(), 3);
    for r in 0..2 {
        for c in 0..2 {
            assert!((x2.row(r)[c] - x.row(r)[c]).abs() <= 1e-12 * x.row(r)[c].abs().max(1.0));
        }
        assert_eq!(x2.row(r)[2], 1.0);
        assert!((y2[r] - y[r]).abs() < 1e-12);
    }
}

#[test]
fn split_sizes() {
    let (tr, te) = split(10, 0.9, RngSeed(1)).unwrap();
    assert_eq!((tr.len(), te.len()), (9, 1));
    let (tr, te) = split(581_012, 0.8, RngSeed(1)).unwrap();
    assert_eq!((tr.len(), te.len()), (464_810, 116_202));
    let mut all: Vec<usize> = tr.iter().chain(&te).copied().collect();
    all.sort_unstable();
    assert!(all.iter().enumerate().all(|(i, &v)| i == v));
    assert_eq!(split(581_012, 0.8, RngSeed(1)).unwrap().1, te);
}

#[test]
fn kde_examples() {
    let d = kde(&[0.0], 0.2, &[0.0]).unwrap();
    assert!((d[0] - 1.0 / ((2.0 * std::f64::consts::PI).sqrt() * 0.2)).abs() < 1e-12);
    assert!((d[0] - 1.9947).abs() < 1e-4);
    let samples = [-2.1, -1.7, 0.3, 2.4, 2.6, 3.0];
    let grid = linspace(-10.0, 10.0, 2001);
    let dens = kde(&samples, 0.2, &grid).unwrap();
    assert!((trapezoid(&grid, &dens) - 1.0).abs() < 1e-3);
    // Shifting the samples by 1.5 shifts the curve by 150 grid cells.
    let shifted: Vec<f64> = samples.iter().map(|s| s + 1.5).collect();
    let dens2 = kde(&shifted, 0.2, &grid).unwrap();
    for i in 0..1851 {
        assert!((dens2[i + 150] - dens[i]).abs() < 1e-9);
    }
}

#[test]
fn bimodal_kde_has_two_maxima() {
    let samples: Vec<f64> = (0..50).map(|i| -2.0 + 0.01 * i as f64).chain((0..50).map(|i| 2.5 - 0.01 * i as f64)).collect();
    let grid = linspace(-6.0, 6.0, 1201);
    let m = local_maxima(&grid, &kde(&samples, 0.2, &grid).unwrap());
    assert_eq!(m.len(), 2);
    assert!((m[0] + 1.755).abs() < 0.05 && (m[1] - 2.255).abs() < 0.05, "{m:?}");
}

fn small_config(dir: &Path, variant: &str) -> ExperimentConfig {
    let text = format!(
        "task = mixture\nvariant = {variant}\nsampler.particles = 20\ntrain.batch = 4\ntrain.dusvgd.epochs = 1\n\
         train.cdusvgd.epochs = 2\ntrain.period = 3\nrun.iterations = 12\nrun.interval = 4\nrun.trials = 3\n\
         data.samples = 200\n"
    );
    let path = dir.join("c.cfg");
    std::fs::write(&path, text).unwrap();
    ExperimentConfig::read(&path).unwrap()
}

#[test]
fn experiment_writes_reproducible_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), "dusvgd");
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    run_experiment(&cfg).unwrap().write(&a).unwrap();
    run_experiment(&cfg).unwrap().write(&b).unwrap();
    for f in ["curve.csv", "mean_curve.csv", "summary.txt", "particles.csv", "schedule.cfg", "train_history.csv"] {
        let (x, y) = (std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap());
        assert_eq!(x, y, "{f} differs");
    }
    let curve = MetricCurve::read_csv(a.join("curve.csv")).unwrap();
    assert_eq!(curve.metric, "mmd");
    assert_eq!(curve.rows.len(), 3 * 4);
    assert_eq!(curve.to_csv(), std::fs::read_to_string(a.join("curve.csv")).unwrap());
    for t in 0..3 {
        let its: Vec<usize> = curve.rows.iter().filter(|r| r.trial == t).map(|r| r.iteration).collect();
        assert_eq!(its, vec![0, 4, 8, 12]);
    }
    let sets = read_particles(a.join("particles.csv")).unwrap();
    assert_eq!(sets.len(), 3);
    assert_eq!(sets[0].m(), 20);
    let sched = TrainedSchedule::load(a.join("schedule.cfg")).unwrap();
    assert_eq!(sched.variant(), Variant::Dusvgd);
    let summary = KvFile::read(a.join("summary.txt")).unwrap();
    assert_eq!(summary.get("failed_trials"), Some("0"));
}

#[test]
fn single_trial_mean_equals_trial() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_config(dir.path(), "fixed");
    cfg.run.trials = 1;
    let report = run_experiment(&cfg).unwrap();
    let rows: Vec<(usize, f64)> = report.curve.rows.iter().map(|r| (r.iteration, r.value)).collect();
    assert_eq!(report.curve.mean(), rows);
}

#[test]
fn saved_schedule_is_reused() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_config(dir.path(), "cdusvgd");
    let trained = run_experiment(&cfg).unwrap();
    let path = dir.path().join("s.cfg");
    trained.schedule.as_ref().unwrap().save(&path).unwrap();
    cfg.train.schedule_file = Some(path);
    let reused = run_experiment(&cfg).unwrap();
    assert!(reused.training.is_none());
    assert_eq!(reused.curve, trained.curve);
    cfg.variant = Variant::Dusvgd;
    assert!(run_experiment(&cfg).is_err());
}

#[test]
fn failed_trials_keep_partial_rows() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_config(dir.path(), "fixed");
    cfg.sampler.fixed_step = 1e308;
    let report = run_experiment(&cfg).unwrap();
    assert_eq!(report.curve.errors.len(), 3);
    assert_eq!(report.curve.rows.len(), 3);
    let csv = report.curve.to_csv();
    assert_eq!(csv.matches(",error,NaN").count(), 3);
    assert_eq!(report.summary().get("failed_trials"), Some("3"));
}

#[test]
fn task_defaults_follow_published_settings() {
    let m = ExperimentConfig::defaults(Task::Mixture);
    assert_eq!((m.train.period, m.train.batch, m.train.dusvgd_epochs), (10, 50, 10));
    let l = ExperimentConfig::defaults(Task::LogReg);
    assert_eq!((l.train.period, l.train.cdusvgd_alpha, l.train.cdusvgd_beta), (10, 200.0, 500.0));
    assert_eq!(l.data.subsample, Some(20_000));
    let b = ExperimentConfig::defaults(Task::Bnn);
    assert_eq!((b.train.period, b.run.iterations, b.run.trials), (15, 3000, 10));
}
