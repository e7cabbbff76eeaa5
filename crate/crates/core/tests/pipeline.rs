use std::fs;

use igiwerm::experiment::{prepare_trial, run_experiment, DataSource, ExperimentConfig, Method};
use igiwerm::learners::{LearnerConfig, Task};
use igiwerm::libsvm::{binarize_labels, parse_libsvm, write_libsvm};
use igiwerm::report::{emit_report, emit_surface, read_surface, summarize};
use igiwerm::selection::{
    grid_search, ic_gw_general, ic_gw_linear, GaussianLinearModel, IwcvObjective, SearchBox,
};
use igiwerm::shift::synth_regression;
use igiwerm::{DensityPair, WeightParams};

fn data_path(name: &str) -> String {
    format!("{}/../../data/{name}", env!("CARGO_MANIFEST_DIR"))
}

#[test]
fn bundled_datasets_parse() {
    for (name, rows, cols) in [
        ("australian", 690, 14),
        ("heart", 270, 13),
        ("breast-cancer", 683, 9),
    ] {
        let text = fs::read(data_path(name)).unwrap();
        let d = binarize_labels(&parse_libsvm(text.as_slice()).unwrap()).unwrap();
        assert_eq!((d.n(), d.d()), (rows, cols), "{name}");
        assert!(d.has_both_classes());
    }
}

#[test]
fn libsvm_file_round_trip() {
    let text = fs::read(data_path("heart")).unwrap();
    let d = parse_libsvm(text.as_slice()).unwrap();
    let mut out = Vec::new();
    write_libsvm(&d, &mut out).unwrap();
    let back = parse_libsvm(out.as_slice()).unwrap();
    assert_eq!(back.y(), d.y());
    let diff = (back.x() - d.x())
        .mapv(f64::abs)
        .fold(0.0f64, |m, v| m.max(*v));
    assert!(diff <= 1e-9);
}

#[test]
fn general_criterion_agrees_with_closed_form() {
    let task = synth_regression(300, 50, 8).unwrap();
    for wp in [
        WeightParams::unweighted(),
        WeightParams::new(0.3, 1.0).unwrap(),
        WeightParams::new(0.6, -0.5).unwrap(),
    ] {
        let weights =
            igiwerm::weights::batch_weights(&task.densities, task.train.x().view(), wp).unwrap();
        let theta = GaussianLinearModel::fit(&task.train, weights.view()).unwrap();
        let general = ic_gw_general(
            &GaussianLinearModel,
            theta.view(),
            &task.train,
            &task.densities,
            wp,
        )
        .unwrap();
        let closed = ic_gw_linear(&task.train, &task.densities, wp).unwrap();
        assert!(
            (general - closed).abs() <= 1e-6 * closed.abs(),
            "{general} vs {closed}"
        );
    }
}

#[test]
fn grid_surface_zero_lambda_row_constant() {
    let task = synth_regression(200, 50, 3).unwrap();
    let obj = IwcvObjective::new(
        &task.train,
        &task.densities,
        LearnerConfig::Linear,
        Task::Regression,
        5,
        0,
    )
    .unwrap();
    let (_, s) = grid_search(|wp| obj.evaluate(wp), SearchBox::default(), 3, 5).unwrap();
    let row = s.losses.row(0);
    assert!(row.iter().all(|&v| v == row[0]));
}

#[test]
fn surface_file_round_trip() {
    let task = synth_regression(150, 30, 4).unwrap();
    let (_, s) = grid_search(
        |wp| ic_gw_linear(&task.train, &task.densities, wp),
        SearchBox::default(),
        4,
        3,
    )
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.csv");
    emit_surface(&s, &path).unwrap();
    assert_eq!(fs::read_to_string(&path).unwrap().lines().count(), 13);
    assert_eq!(read_surface(&path).unwrap(), s);
}

#[test]
fn report_files_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig {
        methods: vec![Method::Erm, Method::Iwerm, Method::IgiwermIc],
        trials: 3,
        n_train: 150,
        n_test: 40,
        grid_lambda: 3,
        grid_alpha: 3,
        ..Default::default()
    };
    let a = run_experiment(&cfg).unwrap();
    let b = run_experiment(&cfg).unwrap();
    emit_report(&a, &dir.path().join("a.csv")).unwrap();
    emit_report(&b, &dir.path().join("b.csv")).unwrap();
    let read = |n: &str| fs::read(dir.path().join(n)).unwrap();
    assert_eq!(read("a.csv"), read("b.csv"));
    assert_eq!(read("a.txt"), read("b.txt"));
    let s = summarize(&a);
    let erm: Vec<f64> = a
        .iter()
        .filter(|r| r.method == Method::Erm)
        .map(|r| r.metric.unwrap())
        .collect();
    assert!((s[0].mean - erm.iter().sum::<f64>() / 3.0).abs() < 1e-12);
}

#[test]
fn classification_trial_from_file() {
    let cfg = ExperimentConfig {
        source: DataSource::Libsvm(data_path("heart").into()),
        learner: LearnerConfig::logistic(),
        methods: vec![Method::Erm, Method::IgiwermIc, Method::IgiwermGrid],
        trials: 2,
        grid_lambda: 3,
        grid_alpha: 3,
        ..Default::default()
    };
    let reports = run_experiment(&cfg).unwrap();
    assert_eq!(reports.len(), 6);
    for r in &reports {
        let m = r.metric.unwrap_or_else(|| panic!("{:?}", r.error));
        assert!((0.0..=1.0).contains(&m));
    }
    let pool = igiwerm::experiment::load_pool(&cfg.source)
        .unwrap()
        .unwrap();
    let t = prepare_trial(&cfg, Some(&pool), 0).unwrap();
    assert_eq!(t.train.n() + t.test.n(), 270);
}

#[test]
fn selection_never_sees_test_split() {
    // the objective is built from training rows and densities only
    let task = synth_regression(100, 20, 1).unwrap();
    let obj = IwcvObjective::new(
        &task.train,
        &task.densities,
        LearnerConfig::Linear,
        Task::Regression,
        5,
        0,
    )
    .unwrap();
    let n: usize = obj.folds().iter().map(Vec::len).sum();
    assert_eq!(n, task.train.n());
}

#[test]
fn support_violation_surfaces_in_objective() {
    let task = synth_regression(50, 10, 2).unwrap();
    let dp = DensityPair::new(|x| if x[0] > 0.0 { 0.0 } else { 1.0 }, |_| 1.0);
    assert!(IwcvObjective::new(
        &task.train,
        &dp,
        LearnerConfig::Linear,
        Task::Regression,
        5,
        0
    )
    .is_err());
}

#[test]
fn penalty_approaches_parameter_count_without_shift() {
    use igiwerm::selection::LikelihoodModel;
    use rand::SeedableRng;
    use rand_distr::{Distribution, Normal};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let n = 10_000;
    let x = ndarray::Array2::from_shape_fn((n, 2), |_| normal.sample(&mut rng));
    let y = x
        .rows()
        .into_iter()
        .map(|r| 1.0 + 2.0 * r[0] - r[1] + 0.5 * normal.sample(&mut rng))
        .collect();
    let data = igiwerm::Dataset::new(x, y).unwrap();
    let dp = DensityPair::identical();
    let wp = WeightParams::unweighted();
    let theta = GaussianLinearModel::fit(&data, ndarray::Array1::ones(n).view()).unwrap();
    let ic = ic_gw_general(&GaussianLinearModel, theta.view(), &data, &dp, wp).unwrap();
    let loglik: f64 = data
        .x()
        .rows()
        .into_iter()
        .zip(data.y())
        .map(|(r, &y)| GaussianLinearModel.log_likelihood(r, y, theta.view()))
        .sum();
    let penalty = ic + 2.0 * loglik;
    // three regression coefficients plus the variance
    assert!((penalty - 8.0).abs() <= 0.2 * 8.0, "{penalty}");
}

#[test]
fn assignment_frequency_matches_sigmoid() {
    use igiwerm::shift::induce_shift;
    // two point masses at ±1 along one axis, so v = ±16
    let n = 100_000;
    let x = ndarray::Array2::from_shape_fn((n, 1), |(i, _)| if i % 2 == 0 { 0.05 } else { -0.05 });
    let data = igiwerm::Dataset::new(x, ndarray::Array1::zeros(n)).unwrap();
    let split = induce_shift(&data, ndarray::array![1.0].view(), 3).unwrap();
    let v = split.spec.logit(ndarray::array![0.05].view());
    assert!((v - 16.0).abs() < 1e-9);
    let p = 1.0 / (1.0 + (-v).exp());
    let hits = split.train_rows.iter().filter(|&&i| i % 2 == 0).count() as f64;
    let m = (n / 2) as f64;
    let sd = (m * p * (1.0 - p)).sqrt().max(1.0);
    assert!((hits - m * p).abs() <= 3.0 * sd, "{hits} vs {}", m * p);
}

#[test]
fn synthetic_moments() {
    let task = synth_regression(1000, 300, 17).unwrap();
    let x = task.train.x().column(0).to_owned();
    let mean = x.mean().unwrap();
    let var = x.var(0.0);
    assert!(mean.abs() <= 0.3, "{mean}");
    assert!((var - 5.0).abs() <= 1.0, "{var}");
    let again = synth_regression(1000, 300, 17).unwrap();
    assert_eq!(again.train, task.train);
    assert_eq!(again.test, task.test);
}
