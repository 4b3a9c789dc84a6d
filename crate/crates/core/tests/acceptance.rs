//! End-to-end acceptance checks. Runs as a plain binary and prints one
//! PASS/FAIL line per criterion; exits non-zero if any fails.

use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use robustcf::classifiers::{train_mlp, Activation, DenseLayer};
use robustcf::data::{load_dataset, minmax_scale, synthetic_dataset, train_test_split};
use robustcf::explainer::{bisect_boundary, BinarySearchStats, PipelineExplainer};
use robustcf::metrics::{
    antipodal_demo, robustness_protocol, verify_theory, verify_theory_with, write_aggregate_csv,
    AntipodalConfig, GridScenario, ProtocolConfig, RobustnessReport, VerificationConfig,
};
use robustcf::{
    set_distance_max, set_distance_sum, AnalyticClassifier, Classifier, Dataset, DistanceMetric,
    ExplainerConfig, FeatureVector, MetricKind, MlpModel, PointSet, SplitSpec, SyntheticKind,
    TrainConfig,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn within(limit: Duration, start: Instant) -> (bool, String) {
    let elapsed = start.elapsed();
    (
        elapsed < limit,
        format!("{:.2}s (limit {}s)", elapsed.as_secs_f64(), limit.as_secs()),
    )
}

fn metrics() -> [DistanceMetric; 3] {
    [
        DistanceMetric::manhattan(),
        DistanceMetric::euclidean(),
        DistanceMetric::chebyshev(),
    ]
}

fn random_point(rng: &mut ChaCha8Rng, dim: usize, lo: f64, hi: f64) -> FeatureVector {
    FeatureVector::new((0..dim).map(|_| rng.random_range(lo..hi)).collect()).unwrap()
}

fn random_set(rng: &mut ChaCha8Rng, dim: usize) -> PointSet {
    let size = rng.random_range(1..=6);
    PointSet::new(
        (0..size)
            .map(|_| random_point(rng, dim, -3.0, 3.0))
            .collect(),
    )
    .unwrap()
}

fn set_distance_ordering() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut pairs = 0;
    let mut violations = 0;
    for _ in 0..100 {
        let dim = rng.random_range(2..=5);
        let (a, b) = (random_set(&mut rng, dim), random_set(&mut rng, dim));
        for m in &metrics() {
            pairs += 1;
            let sum = set_distance_sum(m, &a, &b).unwrap();
            let max = set_distance_max(m, &a, &b).unwrap();
            if sum > max + 1e-12 {
                violations += 1;
            }
        }
    }
    let mut singleton_violations = 0;
    for _ in 0..100 {
        let dim = rng.random_range(2..=5);
        let (p, q) = (
            random_point(&mut rng, dim, -3.0, 3.0),
            random_point(&mut rng, dim, -3.0, 3.0),
        );
        let (a, b) = (
            PointSet::new(vec![p.clone()]).unwrap(),
            PointSet::new(vec![q.clone()]).unwrap(),
        );
        for m in &metrics() {
            let d = m.distance(&p, &q).unwrap();
            let sum = set_distance_sum(m, &a, &b).unwrap();
            let max = set_distance_max(m, &a, &b).unwrap();
            if (sum - d).abs() > 1e-12 || (max - d).abs() > 1e-12 {
                singleton_violations += 1;
            }
        }
    }
    let (fast, time) = within(Duration::from_secs(5), start);
    outcome(
        violations == 0 && singleton_violations == 0 && fast,
        format!("{pairs} pairs, {violations} ordering / {singleton_violations} singleton violations, {time}"),
    )
}

const GRID: usize = 41;
const SCENARIOS: [GridScenario; 3] = [
    GridScenario::Halfspace,
    GridScenario::Ball,
    GridScenario::Diamond,
];

struct GridRuns {
    lipschitz: (u64, u64),
    weak: (u64, u64),
    safety: (u64, u64),
    elapsed: Duration,
}

fn run_grids() -> GridRuns {
    let start = Instant::now();
    let mut runs = GridRuns {
        lipschitz: (0, 0),
        weak: (0, 0),
        safety: (0, 0),
        elapsed: Duration::ZERO,
    };
    for scenario in SCENARIOS {
        let grid = scenario.build(GRID).unwrap();
        for eps in [0.1, 0.2] {
            let config = VerificationConfig {
                epsilon: eps,
                pair_budget: 20,
                ..VerificationConfig::default()
            };
            let report = verify_theory(&grid, &config).unwrap();
            let add = |acc: &mut (u64, u64), c: &robustcf::metrics::CheckResult| {
                acc.0 += c.checked;
                acc.1 += c.violations;
            };
            add(&mut runs.lipschitz, &report.lipschitz);
            add(&mut runs.weak, &report.weak_robustness);
            add(&mut runs.safety, &report.safety);
        }
    }
    runs.elapsed = start.elapsed();
    runs
}

fn lipschitz_bound(runs: &GridRuns) -> Outcome {
    let (checked, violations) = runs.lipschitz;
    let fast = runs.elapsed < Duration::from_secs(60);
    outcome(
        checked > 0 && violations == 0 && fast,
        format!(
            "{checked} same-class pairs on {GRID}x{GRID} halfspace/ball/diamond grids, {violations} violations, all grid checks {:.2}s (limit 60s)",
            runs.elapsed.as_secs_f64()
        ),
    )
}

fn fault_injection_detected() -> u64 {
    let grid = GridScenario::Ball.build(GRID).unwrap();
    let points = grid.points();
    let metric = DistanceMetric::euclidean();
    let center = grid.index_of(&[0.5, 0.5]).unwrap();
    let config = VerificationConfig {
        epsilon: 0.1,
        pair_budget: 0,
        ..VerificationConfig::default()
    };
    let report = verify_theory_with(&grid, &config, |i, mut members| {
        if i == center {
            if let Some(nearest) = members.iter().copied().min_by(|&a, &b| {
                metric
                    .eval(&points[i], &points[a])
                    .total_cmp(&metric.eval(&points[i], &points[b]))
            }) {
                members.retain(|&c| c != nearest);
            }
        }
        members
    })
    .unwrap();
    report.weak_robustness.violations
}

fn weak_robustness(runs: &GridRuns) -> Outcome {
    let (checked, violations) = runs.weak;
    let injected = fault_injection_detected();
    outcome(
        checked > 0 && violations == 0 && injected >= 1,
        format!(
            "{checked} membership checks at eps 0.1 and 0.2, {violations} violations; dropped strong counterfactual caught {injected} time(s)"
        ),
    )
}

fn safety_persistence(runs: &GridRuns) -> Outcome {
    let (checked, violations) = runs.safety;
    outcome(
        checked > 0 && violations == 0,
        format!("{checked} membership checks, {violations} violations"),
    )
}

fn antipodal() -> Outcome {
    let start = Instant::now();
    let config = AntipodalConfig::default();
    let demo = antipodal_demo(&config, &ExplainerConfig::for_dataset_size(config.samples)).unwrap();
    let r = config.radius;
    let singleton_ok = (demo.singleton_set_distance - 2.0 * r).abs() <= 0.01;
    let pipeline_ok = demo.pipeline_set_distance < 0.5 * 2.0 * r;
    let (fast, time) = within(Duration::from_secs(10), start);
    outcome(
        singleton_ok && pipeline_ok && fast,
        format!(
            "singleton set distance {:.5} (target 2 +/- 0.01), pipeline {:.5} (< 1.0), {time}",
            demo.singleton_set_distance, demo.pipeline_set_distance
        ),
    )
}

fn random_classifier(rng: &mut ChaCha8Rng, dim: usize) -> Box<dyn Classifier> {
    let center = random_point(rng, dim, -0.5, 0.5);
    let radius = rng.random_range(0.3..1.5);
    match rng.random_range(0..5) {
        0 => Box::new(AnalyticClassifier::ball(center, radius).unwrap()),
        1 => Box::new(AnalyticClassifier::diamond(center, radius).unwrap()),
        2 => Box::new(AnalyticClassifier::cube(center, radius).unwrap()),
        3 => {
            let normal = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
            Box::new(AnalyticClassifier::halfspace(normal, rng.random_range(-0.5..0.5)).unwrap())
        }
        _ => Box::new(random_mlp(rng, dim)),
    }
}

fn random_mlp(rng: &mut ChaCha8Rng, dim: usize) -> MlpModel {
    let mut layer = |rows: usize, cols: usize| DenseLayer {
        rows,
        cols,
        weights: (0..rows * cols)
            .map(|_| rng.random_range(-1.0..1.0))
            .collect(),
        bias: (0..rows).map(|_| rng.random_range(-0.5..0.5)).collect(),
    };
    let layers = vec![layer(8, dim), layer(2, 8)];
    MlpModel::new(layers, vec![Activation::Relu, Activation::Identity]).unwrap()
}

struct SearchCase {
    classifier: Box<dyn Classifier>,
    x: FeatureVector,
    c: FeatureVector,
    gamma: f64,
}

fn search_cases(count: usize, seed: u64) -> Vec<SearchCase> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cases = Vec::with_capacity(count);
    while cases.len() < count {
        let dim = rng.random_range(2..=5);
        let classifier = random_classifier(&mut rng, dim);
        let x = random_point(&mut rng, dim, -2.0, 2.0);
        let c = random_point(&mut rng, dim, -2.0, 2.0);
        if classifier.predict(&x) == classifier.predict(&c) {
            continue;
        }
        let gamma = 10f64.powf(rng.random_range(-4.0..-0.5));
        cases.push(SearchCase {
            classifier,
            x,
            c,
            gamma,
        });
    }
    cases
}

fn bisection_contract() -> Outcome {
    let l2 = DistanceMetric::euclidean();
    let cases = search_cases(1200, 6);
    let mut violations = Vec::new();
    for (i, case) in cases.iter().enumerate() {
        let b =
            bisect_boundary(case.classifier.as_ref(), &l2, &case.x, &case.c, case.gamma).unwrap();
        let d = l2.eval(&case.x, &case.c);
        let bound = BinarySearchStats::iteration_bound(d, case.gamma);
        let on_segment = |p: &FeatureVector| {
            (l2.eval(&case.x, p) + l2.eval(p, &case.c) - d).abs() <= 1e-9 * (1.0 + d)
        };
        let ok = b.stats.iterations <= bound
            && case.classifier.predict(&b.far) == case.classifier.predict(&case.c)
            && case.classifier.predict(&b.near) == case.classifier.predict(&case.x)
            && l2.eval(&b.near, &b.far) <= case.gamma
            && on_segment(&b.near)
            && on_segment(&b.far);
        if !ok {
            violations.push(i);
        }
    }
    outcome(
        violations.is_empty(),
        format!(
            "{} randomized cases, {} violations {:?}",
            cases.len(),
            violations.len(),
            &violations[..violations.len().min(5)]
        ),
    )
}

fn fixture_dataset() -> Dataset {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/credit.csv");
    minmax_scale(&load_dataset(path).unwrap()).unwrap().0
}

fn validity_and_determinism() -> Outcome {
    let mut invalid = 0;
    let mut explained = 0;
    let mut first_run = Vec::new();

    let run = |out: &mut Vec<String>, invalid: &mut usize, explained: &mut usize| {
        let ball_data = synthetic_dataset(SyntheticKind::Ball, 300, 7).unwrap();
        let ball = SyntheticKind::Ball.analytic_classifier().unwrap();
        let fixture = fixture_dataset();
        let model = train_mlp(&fixture, &TrainConfig::default()).unwrap().model;
        let mut check = |clf: &dyn Classifier, data: &Dataset, name: &str| -> RobustnessReport {
            let config = ExplainerConfig::for_dataset_size(data.len());
            let explainer = PipelineExplainer::new(clf, data, config);
            let inputs: Vec<FeatureVector> = data.points().into_iter().take(15).collect();
            for x in &inputs {
                let set = robustcf::explain(clf, data, x, &explainer.config).unwrap();
                let label = clf.predict(x);
                for cf in &set.counterfactuals {
                    *explained += 1;
                    if clf.predict(&cf.point) == label {
                        *invalid += 1;
                    }
                }
                out.push(set.to_json().unwrap());
            }
            robustness_protocol(
                clf,
                &explainer,
                &inputs,
                "pipeline",
                name,
                &ProtocolConfig::default(),
            )
            .unwrap()
        };
        let a = check(&ball, &ball_data, "ball");
        let b = check(&model, &fixture, "credit");
        out.push(a.to_json().unwrap());
        out.push(b.to_json().unwrap());
        out.push(write_aggregate_csv(&[a, b]));
    };
    run(&mut first_run, &mut invalid, &mut explained);
    let mut second_run = Vec::new();
    let (mut ignored_a, mut ignored_b) = (0, 0);
    run(&mut second_run, &mut ignored_a, &mut ignored_b);
    let identical = first_run == second_run;
    outcome(
        invalid == 0 && explained > 0 && identical,
        format!(
            "{explained} counterfactuals on ball and credit fixture, {invalid} not flipping; repeated run outputs byte-identical: {identical}"
        ),
    )
}

struct ProtocolRuns {
    pipeline: RobustnessReport,
    baseline: RobustnessReport,
    unminimised: RobustnessReport,
    max_explain: Duration,
    multi_diversity: Vec<f64>,
}

fn protocol_runs() -> ProtocolRuns {
    let data = synthetic_dataset(SyntheticKind::TwoGaussians, 500, 0).unwrap();
    let (train, test) = train_test_split(&data, &SplitSpec::default()).unwrap();
    let model = train_mlp(&train, &TrainConfig::default()).unwrap().model;
    let inputs: Vec<FeatureVector> = test.points().into_iter().take(20).collect();
    let config = ExplainerConfig::for_dataset_size(train.len());
    let protocol = ProtocolConfig {
        record_timings: true,
        ..ProtocolConfig::default()
    };
    let run = |config: ExplainerConfig, method: &str| {
        let explainer = PipelineExplainer::new(&model, &train, config);
        robustness_protocol(
            &model,
            &explainer,
            &inputs,
            method,
            "two_gaussians",
            &protocol,
        )
        .unwrap()
    };
    let pipeline = run(config.clone(), "pipeline");
    let baseline = run(config.singleton_baseline(), "singleton");
    let unminimised = run(
        ExplainerConfig {
            minimise: false,
            ..config.clone()
        },
        "pipeline_no_minimise",
    );
    let times = pipeline
        .inputs
        .iter()
        .filter_map(|i| i.wall_time_ms)
        .chain(pipeline.trials.iter().filter_map(|t| t.wall_time_ms));
    let max_explain = Duration::from_secs_f64(times.fold(0.0, f64::max) / 1e3);
    let multi_diversity = pipeline
        .inputs
        .iter()
        .filter(|i| i.size >= 2)
        .map(|i| i.l2.k_diversity)
        .chain(
            pipeline
                .trials
                .iter()
                .filter(|t| t.size >= 2)
                .map(|t| t.l2.k_diversity),
        )
        .collect();
    ProtocolRuns {
        pipeline,
        baseline,
        unminimised,
        max_explain,
        multi_diversity,
    }
}

fn protocol_comparison(runs: &ProtocolRuns) -> Outcome {
    let ours = runs.pipeline.per_input_mean(|t| t.l2.set_distance_max);
    let theirs = runs.baseline.per_input_mean(|t| t.l2.set_distance_max);
    let compared = ours
        .iter()
        .filter_map(|(id, a)| theirs.iter().find(|(j, _)| j == id).map(|(_, b)| (*a, *b)))
        .collect::<Vec<_>>();
    let wins = compared.iter().filter(|(a, b)| a < b).count();
    let share = wins as f64 / 20.0;
    let diversity_ok = runs.multi_diversity.iter().all(|d| *d > 0.0);
    let fast = runs.max_explain < Duration::from_secs(1);
    let mean = |r: &RobustnessReport| {
        r.aggregate("set_distance_max_l2")
            .map_or(f64::NAN, |a| a.mean)
    };
    outcome(
        share >= 0.8 && diversity_ok && fast,
        format!(
            "pipeline smaller on {wins}/20 inputs ({} compared; mean {:.4} vs {:.4}); {} multi-point sets all diverse: {diversity_ok}; slowest explanation {:.1} ms",
            compared.len(),
            mean(&runs.pipeline),
            mean(&runs.baseline),
            runs.multi_diversity.len(),
            runs.max_explain.as_secs_f64() * 1e3
        ),
    )
}

fn minimisation_effect(runs: &ProtocolRuns) -> Outcome {
    let get = |r: &RobustnessReport, m: &str| r.aggregate(m).map_or(f64::NAN, |a| a.mean);
    let mut parts = Vec::new();
    let mut pass = true;
    for kind in [MetricKind::Manhattan, MetricKind::Euclidean] {
        let s = kind.short_name();
        let (div_raw, div_min) = (
            get(&runs.unminimised, &format!("k_diversity_{s}")),
            get(&runs.pipeline, &format!("k_diversity_{s}")),
        );
        let (dist_raw, dist_min) = (
            get(&runs.unminimised, &format!("k_distance_{s}")),
            get(&runs.pipeline, &format!("k_distance_{s}")),
        );
        pass &= div_raw >= div_min && dist_raw >= dist_min;
        parts.push(format!(
            "{s}: diversity {div_raw:.4} vs {div_min:.4}, distance {dist_raw:.4} vs {dist_min:.4}"
        ));
    }
    outcome(pass, parts.join("; "))
}

fn query_scaling() -> Outcome {
    let l2 = DistanceMetric::euclidean();
    let cases = search_cases(500, 10);
    let levels: Vec<f64> = (0..8).map(|k| 0.1 / 2f64.powi(k)).collect();
    let means: Vec<f64> = levels
        .iter()
        .map(|&gamma| {
            let total: usize = cases
                .iter()
                .map(|c| {
                    bisect_boundary(c.classifier.as_ref(), &l2, &c.x, &c.c, gamma)
                        .unwrap()
                        .stats
                        .iterations
                })
                .sum();
            total as f64 / cases.len() as f64
        })
        .collect();
    let steps: Vec<f64> = means.windows(2).map(|w| w[1] - w[0]).collect();
    let worst = steps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    outcome(
        worst <= 1.5,
        format!(
            "mean iterations {:?} for 1/gamma = 10 .. 1280; largest increase per doubling {worst:.3}",
            means.iter().map(|m| (m * 100.0).round() / 100.0).collect::<Vec<_>>()
        ),
    )
}

fn main() -> ExitCode {
    let runs = run_grids();
    let protocol = protocol_runs();
    let results: Vec<(&str, Outcome)> = vec![
        ("1 set distance ordering", set_distance_ordering()),
        ("2 lipschitz bound on grids", lipschitz_bound(&runs)),
        (
            "3 weak robustness of the exhaustive explainer",
            weak_robustness(&runs),
        ),
        ("4 safety margin persistence", safety_persistence(&runs)),
        ("5 antipodal counterexample", antipodal()),
        ("6 bisection contract", bisection_contract()),
        ("7 validity and determinism", validity_and_determinism()),
        (
            "8 perturbation protocol vs singleton baseline",
            protocol_comparison(&protocol),
        ),
        ("9 minimisation effect", minimisation_effect(&protocol)),
        ("10 bisection query scaling", query_scaling()),
    ];
    let mut failed = 0;
    for (name, o) in &results {
        println!(
            "{} [{name}] {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        failed += usize::from(!o.pass);
    }
    println!("{} passed, {failed} failed", results.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
