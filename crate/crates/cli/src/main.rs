use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;

use robustcf::classifiers::train_mlp;
use robustcf::data::{load_dataset, minmax_scale, synthetic_dataset, train_test_split};
use robustcf::explainer::{DistanceSelection, DiversitySelection, PipelineExplainer};
use robustcf::metrics::{
    antipodal_demo, robustness_protocol, verify_theory, write_aggregate_csv, AntipodalConfig,
    GridScenario, PerturbationConfig, ProtocolConfig, VerificationConfig,
};
use robustcf::{
    Classifier, Dataset, DistanceMetric, ExplainerConfig, FeatureVector, MetricKind, MlpModel,
    SplitSpec, SyntheticKind, TrainConfig,
};

#[derive(Parser)]
#[command(
    name = "robustcf",
    version,
    about = "Diverse, robust counterfactual explanations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Explain one row of a dataset and print the explanation as JSON.
    Explain {
        #[command(flatten)]
        source: SourceArgs,
        #[arg(long, default_value_t = 0)]
        input_index: usize,
        #[command(flatten)]
        explainer: ExplainerArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the perturbation protocol for the pipeline and the singleton baseline.
    Evaluate {
        #[command(flatten)]
        source: SourceArgs,
        #[command(flatten)]
        explainer: ExplainerArgs,
        #[arg(long, default_value_t = 0.05)]
        sigma: f64,
        #[arg(long, default_value_t = 3)]
        reps: usize,
        /// Number of test inputs.
        #[arg(long, default_value_t = 20)]
        inputs: usize,
        /// Record wall-clock times (makes the output non-reproducible).
        #[arg(long)]
        timings: bool,
        /// Output stem; writes `<out>.json` and `<out>.csv`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Format printed to stdout when `--out` is absent.
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Check the robustness guarantees exhaustively on a labelled grid.
    Verify {
        #[arg(long, value_enum, default_value_t = Scenario::Halfspace)]
        scenario: Scenario,
        /// Points per axis.
        #[arg(long, default_value_t = 21)]
        grid: usize,
        #[arg(long, default_value_t = 0.2)]
        eps: f64,
        #[arg(long, default_value_t = 1.0)]
        k: f64,
        #[arg(long, value_enum, default_value_t = Metric::L2)]
        metric: Metric,
        /// Same-class pairs sampled for the empirical k.
        #[arg(long, default_value_t = 200)]
        pairs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Antipodal inputs at the centre of a ball: singleton vs diverse explanations.
    Demo {
        #[arg(long, default_value_t = 1.0)]
        r: f64,
        #[arg(long, default_value_t = 0.01)]
        gap: f64,
        #[arg(long, default_value_t = 0.001)]
        gamma: f64,
        #[arg(long, default_value_t = 2000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train the 20-10 MLP on a dataset and save it as JSON.
    Train {
        #[command(flatten)]
        source: SourceArgs,
        #[arg(long, default_value_t = 100)]
        epochs: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct SourceArgs {
    /// CSV file; the last column is the 0/1 label. Features are min-max scaled.
    #[arg(long, conflicts_with = "synthetic")]
    dataset: Option<PathBuf>,
    #[arg(long, value_enum)]
    synthetic: Option<Synthetic>,
    /// Rows of the synthetic dataset.
    #[arg(long, default_value_t = 500)]
    n: usize,
    /// MLP JSON file. Without it, region datasets use their analytic
    /// classifier and others get a freshly trained MLP.
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct ExplainerArgs {
    #[arg(long, value_enum, default_value_t = Metric::L2)]
    metric: Metric,
    #[arg(long, value_enum, default_value_t = Step2::Number)]
    step2: Step2,
    /// Candidate count (number) or tolerance (distance). Defaults to 50 or
    /// 1000 by dataset size, or 0.1.
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, value_enum, default_value_t = Step3::Angle)]
    step3: Step3,
    #[arg(long, default_value_t = 0.5)]
    beta: f64,
    #[arg(long, default_value_t = 0.1)]
    gamma: f64,
    #[arg(long, default_value_t = 0.1)]
    eps: f64,
    #[arg(long, default_value_t = 5)]
    max_cf: usize,
    #[arg(long)]
    no_minimise: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Metric {
    L1,
    L2,
    Linf,
}

impl Metric {
    fn distance(self) -> DistanceMetric {
        DistanceMetric::new(match self {
            Metric::L1 => MetricKind::Manhattan,
            Metric::L2 => MetricKind::Euclidean,
            Metric::Linf => MetricKind::Chebyshev,
        })
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Step2 {
    Number,
    Distance,
}

#[derive(Clone, Copy, ValueEnum)]
enum Step3 {
    Angle,
    Distance,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum Scenario {
    Halfspace,
    Ball,
    Diamond,
    Cube,
}

#[derive(Clone, Copy, ValueEnum)]
enum Synthetic {
    Ball,
    Diamond,
    Cube,
    TwoGaussians,
}

impl From<Synthetic> for SyntheticKind {
    fn from(s: Synthetic) -> Self {
        match s {
            Synthetic::Ball => SyntheticKind::Ball,
            Synthetic::Diamond => SyntheticKind::Diamond,
            Synthetic::Cube => SyntheticKind::Cube,
            Synthetic::TwoGaussians => SyntheticKind::TwoGaussians,
        }
    }
}

impl ExplainerArgs {
    fn config(&self, dataset_size: usize) -> Result<ExplainerConfig> {
        let distance_selection = match (self.step2, self.alpha) {
            (Step2::Number, None) => {
                ExplainerConfig::for_dataset_size(dataset_size).distance_selection
            }
            (Step2::Number, Some(a)) => {
                if !(a >= 1.0 && a.fract() == 0.0) {
                    bail!("--alpha must be a positive integer in number mode, got {a}");
                }
                DistanceSelection::NumberBased { count: a as usize }
            }
            (Step2::Distance, a) => DistanceSelection::DistanceBased {
                tolerance: a.unwrap_or(0.1),
            },
        };
        let diversity_selection = match self.step3 {
            Step3::Angle => DiversitySelection::AngleBased {
                threshold: self.beta,
            },
            Step3::Distance => DiversitySelection::DistanceBased {
                threshold: self.beta,
            },
        };
        let config = ExplainerConfig {
            metric: self.metric.distance(),
            distance_selection,
            diversity_selection,
            gamma: self.gamma,
            epsilon: self.eps,
            max_counterfactuals: self.max_cf,
            minimise: !self.no_minimise,
            ..ExplainerConfig::default()
        };
        config.validate()?;
        Ok(config)
    }
}

struct Loaded {
    name: String,
    dataset: Dataset,
    kind: Option<SyntheticKind>,
}

fn load_source(source: &SourceArgs) -> Result<Loaded> {
    match (&source.dataset, source.synthetic) {
        (Some(path), None) => {
            let raw = load_dataset(path).with_context(|| format!("reading {}", path.display()))?;
            let dataset = match &source.model {
                // a model that carries its own scaling decides the feature space
                Some(model_path) => match MlpModel::load(model_path)?.preprocessing() {
                    Some(scaler) => scaler.transform_dataset(&raw)?,
                    None => minmax_scale(&raw)?.0,
                },
                None => minmax_scale(&raw)?.0,
            };
            let name = path.file_stem().map_or_else(
                || "dataset".to_string(),
                |s| s.to_string_lossy().into_owned(),
            );
            Ok(Loaded {
                name,
                dataset,
                kind: None,
            })
        }
        (None, Some(kind)) => {
            let kind = SyntheticKind::from(kind);
            Ok(Loaded {
                name: kind.name().to_string(),
                dataset: synthetic_dataset(kind, source.n, source.seed)?,
                kind: Some(kind),
            })
        }
        (None, None) => bail!("one of --dataset or --synthetic is required"),
        (Some(_), Some(_)) => unreachable!("clap rejects both"),
    }
}

/// Classifier for `loaded`: the model file, the analytic region, or an MLP
/// trained on `train`.
fn classifier(
    source: &SourceArgs,
    loaded: &Loaded,
    train: &Dataset,
) -> Result<Box<dyn Classifier>> {
    if let Some(path) = &source.model {
        let model = MlpModel::load(path).with_context(|| format!("reading {}", path.display()))?;
        if model.input_dim() != loaded.dataset.dim() {
            bail!(
                "model expects {} features but the dataset has {}",
                model.input_dim(),
                loaded.dataset.dim()
            );
        }
        return Ok(Box::new(model));
    }
    if let Some(region) = loaded.kind.and_then(SyntheticKind::analytic_classifier) {
        return Ok(Box::new(region) as Box<dyn Classifier>);
    }
    let trained = train_mlp(
        train,
        &TrainConfig {
            seed: source.seed,
            ..TrainConfig::default()
        },
    )?;
    info!(
        "trained MLP, training accuracy {:.3}",
        trained.training_accuracy
    );
    Ok(Box::new(trained.model))
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn with_newline(mut s: String) -> String {
    s.push('\n');
    s
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Explain {
            source,
            input_index,
            explainer,
            out,
        } => {
            let loaded = load_source(&source)?;
            let config = explainer.config(loaded.dataset.len())?;
            let clf = classifier(&source, &loaded, &loaded.dataset)?;
            let x = loaded
                .dataset
                .examples()
                .get(input_index)
                .map(|e| e.features.clone())
                .with_context(|| {
                    format!(
                        "--input-index {input_index} out of range ({} rows)",
                        loaded.dataset.len()
                    )
                })?;
            let set = robustcf::explain(clf.as_ref(), &loaded.dataset, &x, &config)?;
            emit(out.as_deref(), &with_newline(set.to_json()?))?;
        }
        Command::Evaluate {
            source,
            explainer,
            sigma,
            reps,
            inputs,
            timings,
            out,
            format,
        } => {
            let loaded = load_source(&source)?;
            let (train, test) = train_test_split(
                &loaded.dataset,
                &SplitSpec {
                    seed: source.seed,
                    ..SplitSpec::default()
                },
            )?;
            let config = explainer.config(train.len())?;
            let clf = classifier(&source, &loaded, &train)?;
            let xs: Vec<FeatureVector> = test.points().into_iter().take(inputs).collect();
            if xs.len() < inputs {
                log::warn!("only {} test inputs available", xs.len());
            }
            let protocol = ProtocolConfig {
                perturbation: PerturbationConfig {
                    sigma,
                    ..PerturbationConfig::default()
                },
                repetitions: reps,
                seed: source.seed,
                record_timings: timings,
            };
            let mut reports = Vec::new();
            for (method, cfg) in [
                ("pipeline", config.clone()),
                ("singleton", config.singleton_baseline()),
            ] {
                let e = PipelineExplainer::new(clf.as_ref(), &train, cfg);
                let report =
                    robustness_protocol(clf.as_ref(), &e, &xs, method, &loaded.name, &protocol)?;
                if !report.failures.is_empty() {
                    log::warn!("{method}: {} failed explanation(s)", report.failures.len());
                }
                reports.push(report);
            }
            let json = with_newline(serde_json::to_string_pretty(&reports)?);
            let csv = write_aggregate_csv(&reports);
            match out {
                Some(stem) => {
                    emit(Some(&stem.with_extension("json")), &json)?;
                    emit(Some(&stem.with_extension("csv")), &csv)?;
                }
                None if format == Format::Json => emit(None, &json)?,
                None => emit(None, &csv)?,
            }
        }
        Command::Verify {
            scenario,
            grid,
            eps,
            k,
            metric,
            pairs,
            seed,
            out,
            format,
        } => {
            let scenario = match scenario {
                Scenario::Halfspace => GridScenario::Halfspace,
                Scenario::Ball => GridScenario::Ball,
                Scenario::Diamond => GridScenario::Diamond,
                Scenario::Cube => GridScenario::Cube,
            };
            let grid = scenario.build(grid)?;
            let config = VerificationConfig {
                epsilon: eps,
                k,
                metric: metric.distance(),
                pair_budget: pairs,
                seed,
            };
            let report = verify_theory(&grid, &config)?;
            let text = if format == Format::Json {
                with_newline(serde_json::to_string_pretty(&report)?)
            } else {
                let line = |name: &str, c: &robustcf::metrics::CheckResult| {
                    format!(
                        "{name}: {} checked, {} violations\n",
                        c.checked, c.violations
                    )
                };
                format!(
                    "scenario: {scenario}\npoints: {}\n{}{}{}empirical k: {} over {} pairs ({} above k = {k})\nviolations: {}\n",
                    report.points,
                    line("lipschitz", &report.lipschitz),
                    line("weak robustness", &report.weak_robustness),
                    line("safety", &report.safety),
                    report.robustness.empirical_k,
                    report.robustness.pairs,
                    report.robustness.exceeding,
                    report.violations(),
                )
            };
            emit(out.as_deref(), &text)?;
            if report.violations() > 0 {
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::Demo {
            r,
            gap,
            gamma,
            samples,
            seed,
            out,
        } => {
            let config = AntipodalConfig {
                radius: r,
                gap,
                gamma,
                samples,
                seed,
            };
            let demo = antipodal_demo(&config, &ExplainerConfig::for_dataset_size(samples))?;
            info!(
                "set distance: singleton {}, pipeline {}",
                demo.singleton_set_distance, demo.pipeline_set_distance
            );
            emit(out.as_deref(), &demo.to_csv())?;
        }
        Command::Train {
            source,
            epochs,
            out,
        } => {
            let loaded = load_source(&source)?;
            let trained = train_mlp(
                &loaded.dataset,
                &TrainConfig {
                    epochs,
                    seed: source.seed,
                    ..TrainConfig::default()
                },
            )?;
            info!("training accuracy {:.3}", trained.training_accuracy);
            let mut model = trained.model;
            if let Some(scaler) = loaded.dataset.scaling() {
                model = model.with_preprocessing(scaler.clone())?;
            }
            model.save(&out)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("ROBUSTCF_LOG", "warn")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn number_alpha_must_be_integral() {
        let cli = Cli::try_parse_from([
            "robustcf",
            "explain",
            "--synthetic",
            "ball",
            "--alpha",
            "2.5",
        ])
        .unwrap();
        let Command::Explain { explainer, .. } = cli.command else {
            unreachable!()
        };
        assert!(explainer.config(100).is_err());
    }

    #[test]
    fn default_alpha_follows_dataset_size() {
        let cli = Cli::try_parse_from(["robustcf", "explain", "--synthetic", "ball"]).unwrap();
        let Command::Explain { explainer, .. } = cli.command else {
            unreachable!()
        };
        assert_eq!(
            explainer.config(999).unwrap().distance_selection,
            DistanceSelection::NumberBased { count: 50 }
        );
        assert_eq!(
            explainer.config(1000).unwrap().distance_selection,
            DistanceSelection::NumberBased { count: 1000 }
        );
    }
}
