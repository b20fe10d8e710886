//! `cogprior`: generate problems, label them with cognitive models, pretrain
//! and fine-tune sparse nets, run the evaluation experiments and serve the
//! data-collection API.

mod config;

use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use cogprior_core::io::{
    load_problem_set, load_targets, save_json, save_problem_set, save_targets, IoError,
};
use cogprior_core::models::{generate_targets, BeastVariant, BlockSpec, ModelSpec, PtParams};
use cogprior_core::net::{finetune, load_checkpoint, save_checkpoint, NetError, FINETUNE_LEARNING_RATE};
use cogprior_core::pipeline::{
    baseline_fit_predict, bootstrap_mse, learning_curve, pretrain, score, simulate_human_targets,
    BaselineKind, BootstrapConfig, Dataset, LearningCurveConfig, PipelineError, Prior,
};
use cogprior_core::seed::config_hash;
use cogprior_core::space::{generate_set, ProblemSet, SpaceError};
use cogprior_core::Schema;
use cogprior_service::{ExperimentService, ServiceError};
use serde::Serialize;

use config::FileConfig;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Service(#[from] ServiceError),
    #[error("{0}")]
    Invalid(String),
    #[error("server failed: {0}")]
    Server(std::io::Error),
}

impl CliError {
    /// 1 for bad input, 2 when training itself failed.
    fn exit_code(&self) -> u8 {
        let training = match self {
            CliError::Pipeline(e) => e.is_training_failure(),
            CliError::Net(e) => matches!(e, NetError::Diverged { .. } | NetError::EmptyData),
            _ => false,
        };
        if training {
            2
        } else {
            1
        }
    }
}

#[derive(Parser)]
#[command(name = "cogprior", version, about = "Cognitive-model priors for risky-choice prediction")]
struct Cli {
    /// TOML file with optional [space], [beast], [train], [humans] and [service] sections.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ProblemsArg {
    /// Problem CSV.
    #[arg(long)]
    problems: PathBuf,
    #[arg(long, default_value = "cpc15")]
    schema: Schema,
}

impl ProblemsArg {
    fn load(&self) -> Result<ProblemSet, CliError> {
        Ok(load_problem_set(&self.problems, self.schema)?)
    }

    fn dataset(&self, targets: &Path) -> Result<(ProblemSet, Dataset), CliError> {
        let set = self.load()?;
        let recs = load_targets(targets)?;
        let ds = Dataset::from_targets(&set.problems, &recs, self.schema)?;
        Ok((set, ds))
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Beast15,
    Beast18,
    Eu,
    Pt,
}

#[derive(Clone, Copy, ValueEnum)]
enum BlocksArg {
    /// Block 1 without feedback, block 2 with.
    Two,
    /// Five blocks, feedback from block 2.
    Five,
}

#[derive(Clone, Copy, ValueEnum)]
enum BaselineArg {
    Linear,
    Knn,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a problem set.
    SampleProblems {
        #[arg(long)]
        count: usize,
        #[arg(long, default_value = "cpc15")]
        schema: Schema,
        /// Problem CSVs whose problems must not be generated again.
        #[arg(long)]
        exclude: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Label problems with a cognitive model.
    Label {
        #[command(flatten)]
        problems: ProblemsArg,
        #[arg(long, value_enum, default_value = "beast15")]
        model: ModelArg,
        #[arg(long, value_enum, default_value = "two")]
        blocks: BlocksArg,
        /// Softmax temperature for the EU and PT models.
        #[arg(long, default_value_t = 1.0)]
        temperature: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Make pseudo-human targets from model targets.
    SimulateHumans {
        #[command(flatten)]
        problems: ProblemsArg,
        /// Base-model target CSV.
        #[arg(long)]
        base: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a net on synthetic targets.
    Pretrain {
        #[command(flatten)]
        problems: ProblemsArg,
        #[arg(long)]
        targets: PathBuf,
        /// Checkpoint to write.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Continue training a checkpoint with a small learning rate.
    Finetune {
        #[command(flatten)]
        problems: ProblemsArg,
        #[arg(long)]
        targets: PathBuf,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, default_value_t = FINETUNE_LEARNING_RATE)]
        lr: f64,
        #[arg(long, default_value_t = 20)]
        epochs: u32,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Score a checkpoint against a target CSV.
    Evaluate {
        #[command(flatten)]
        problems: ProblemsArg,
        #[arg(long)]
        targets: PathBuf,
        #[arg(long)]
        checkpoint: PathBuf,
        /// Also write the predictions as a target CSV.
        #[arg(long)]
        predictions: Option<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Validation MSE against the share of training data used.
    LearningCurve {
        #[command(flatten)]
        problems: ProblemsArg,
        /// Human target CSV.
        #[arg(long)]
        targets: PathBuf,
        /// Pretrained checkpoint; without it only random init is run.
        #[arg(long)]
        pretrained: Option<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        fractions: Option<Vec<f64>>,
        #[arg(long, default_value_t = 10)]
        repeats: u32,
        #[arg(long)]
        no_baselines: bool,
        #[arg(long)]
        report: PathBuf,
    },
    /// Problem-level bootstrap of a checkpoint's MSE.
    Bootstrap {
        #[command(flatten)]
        problems: ProblemsArg,
        #[arg(long)]
        targets: PathBuf,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long, default_value_t = 210)]
        sample_size: usize,
        #[arg(long)]
        without_replacement: bool,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Fit a linear-regression or k-NN baseline.
    Baseline {
        #[command(flatten)]
        problems: ProblemsArg,
        #[arg(long, value_enum)]
        kind: BaselineArg,
        #[arg(long, default_value_t = 20)]
        k: usize,
        #[arg(long)]
        inverse_distance: bool,
        #[arg(long)]
        train: PathBuf,
        /// Evaluation targets; defaults to a seeded 20% split of `train`.
        #[arg(long)]
        eval: Option<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Run the experiment HTTP service.
    Serve {
        #[command(flatten)]
        problems: ProblemsArg,
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn emit<T: Serialize>(value: &T, path: Option<&Path>) -> Result<(), CliError> {
    match path {
        Some(p) => save_json(p, value)?,
        None => println!(
            "{}",
            serde_json::to_string_pretty(value).map_err(|e| CliError::Invalid(e.to_string()))?
        ),
    }
    Ok(())
}

#[derive(Serialize)]
struct RunReport<T: Serialize> {
    command: &'static str,
    seed: u64,
    config_hash: String,
    #[serde(flatten)]
    body: T,
}

impl<T: Serialize> RunReport<T> {
    fn new(command: &'static str, seed: u64, config_hash: &str, body: T) -> Self {
        RunReport {
            command,
            seed,
            config_hash: config_hash.to_string(),
            body,
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = FileConfig::load(cli.config.as_deref())?;
    let seed = cli.seed;
    let hash = config_hash(&cfg);

    match cli.command {
        Command::SampleProblems {
            count,
            schema,
            exclude,
            out,
        } => {
            let space = cfg.space_for(schema);
            let excluded = exclude
                .iter()
                .map(|p| load_problem_set(p, schema))
                .collect::<Result<Vec<_>, _>>()?;
            let refs: Vec<&ProblemSet> = excluded.iter().collect();
            let set = generate_set(&space, count, &refs, seed)?;
            save_problem_set(&out, &set)?;
            log::info!("wrote {} problems to {}", set.len(), out.display());
        }
        Command::Label {
            problems,
            model,
            blocks,
            temperature,
            out,
        } => {
            let set = problems.load()?;
            let spec = match model {
                ModelArg::Beast15 => ModelSpec::Beast {
                    variant: BeastVariant::Beast15,
                    params: cfg.beast.clone(),
                },
                ModelArg::Beast18 => ModelSpec::Beast {
                    variant: BeastVariant::Beast18,
                    params: cfg.beast.clone(),
                },
                ModelArg::Eu => ModelSpec::Eu { temperature },
                ModelArg::Pt => ModelSpec::Pt {
                    params: PtParams::default(),
                    temperature,
                },
            };
            spec.validate().map_err(CliError::Invalid)?;
            let blocks = match blocks {
                BlocksArg::Two => BlockSpec::two_block(),
                BlocksArg::Five => BlockSpec::cpc_five_block(),
            };
            let targets = generate_targets(&set.problems, &spec, &blocks, seed);
            save_targets(&out, &targets)?;
            log::info!("wrote {} targets to {}", targets.len(), out.display());
        }
        Command::SimulateHumans {
            problems,
            base,
            out,
        } => {
            let set = problems.load()?;
            let base = load_targets(&base)?;
            let targets = simulate_human_targets(&set.problems, &base, &cfg.humans, seed)?;
            save_targets(&out, &targets)?;
            log::info!("wrote {} pseudo-human targets to {}", targets.len(), out.display());
        }
        Command::Pretrain {
            problems,
            targets,
            out,
            report,
        } => {
            let (_, ds) = problems.dataset(&targets)?;
            let pre = pretrain(&ds, &cfg.train, seed)?;
            save_checkpoint(&pre.net, &out)?;
            #[derive(Serialize)]
            struct Body {
                holdout_mse: f64,
                fit: cogprior_core::net::FitReport,
            }
            let body = Body {
                holdout_mse: pre.holdout_mse,
                fit: pre.report,
            };
            emit(&RunReport::new("pretrain", seed, &hash, body), report.as_deref())?;
        }
        Command::Finetune {
            problems,
            targets,
            checkpoint,
            lr,
            epochs,
            out,
            report,
        } => {
            let (_, ds) = problems.dataset(&targets)?;
            let mut net = load_checkpoint(&checkpoint)?;
            let fit = finetune(&mut net, ds.samples()?, lr, epochs, seed)?;
            save_checkpoint(&net, &out)?;
            emit(&RunReport::new("finetune", seed, &hash, fit), report.as_deref())?;
        }
        Command::Evaluate {
            problems,
            targets,
            checkpoint,
            predictions,
            report,
        } => {
            let (_, ds) = problems.dataset(&targets)?;
            let net = load_checkpoint(&checkpoint)?;
            let preds = net.predict(ds.features())?;
            let result = score(&checkpoint.display().to_string(), &preds, &ds)?;
            if let Some(path) = predictions {
                save_targets(&path, &ds.with_targets(preds)?.to_targets())?;
            }
            emit(&RunReport::new("evaluate", seed, &hash, result), report.as_deref())?;
        }
        Command::LearningCurve {
            problems,
            targets,
            pretrained,
            fractions,
            repeats,
            no_baselines,
            report,
        } => {
            let (_, ds) = problems.dataset(&targets)?;
            let net = pretrained.as_deref().map(load_checkpoint).transpose()?;
            let defaults = LearningCurveConfig::default();
            let lc = LearningCurveConfig {
                fractions: fractions.unwrap_or(defaults.fractions),
                repeats,
                priors: if net.is_some() {
                    vec![Prior::Random, Prior::Pretrained]
                } else {
                    vec![Prior::Random]
                },
                baselines: !no_baselines,
                train: cfg.train.clone(),
                seed,
                ..defaults
            };
            let rep = learning_curve(&ds, net.as_ref(), &lc)?;
            for p in &rep.points {
                log::info!("fraction {:.3} {:>18} mse {:.5} ± {:.5}", p.fraction, p.model, p.mean, p.se);
            }
            emit(&rep, Some(&report))?;
        }
        Command::Bootstrap {
            problems,
            targets,
            checkpoint,
            samples,
            sample_size,
            without_replacement,
            report,
        } => {
            let (_, ds) = problems.dataset(&targets)?;
            let net = load_checkpoint(&checkpoint)?;
            let preds = net.predict(ds.features())?;
            let bc = BootstrapConfig {
                n_samples: samples,
                sample_size,
                with_replacement: !without_replacement,
                seed,
                ..BootstrapConfig::default()
            };
            emit(&RunReport::new("bootstrap", seed, &hash, bootstrap_mse(&preds, &ds, &bc)?), report.as_deref())?;
        }
        Command::Baseline {
            problems,
            kind,
            k,
            inverse_distance,
            train,
            eval,
            report,
        } => {
            let (set, train_ds) = problems.dataset(&train)?;
            let (train_ds, eval_ds) = match eval {
                Some(path) => {
                    let recs = load_targets(&path)?;
                    (train_ds, Dataset::from_targets(&set.problems, &recs, problems.schema)?)
                }
                None => {
                    let mut parts = train_ds.split_by_problem(&[0.8, 0.2], seed)?;
                    let eval = parts.pop().unwrap_or_else(|| unreachable!());
                    (parts.pop().unwrap_or_else(|| unreachable!()), eval)
                }
            };
            let kind = match kind {
                BaselineArg::Linear => BaselineKind::LinearRegression,
                BaselineArg::Knn => BaselineKind::Knn { k, inverse_distance },
            };
            let (_, mse) = baseline_fit_predict(&kind, &train_ds, &eval_ds)?;
            #[derive(Serialize)]
            struct Body {
                baseline: String,
                train_rows: usize,
                eval_rows: usize,
                mse: f64,
            }
            let body = Body {
                baseline: kind.name(),
                train_rows: train_ds.len(),
                eval_rows: eval_ds.len(),
                mse,
            };
            emit(&RunReport::new("baseline", seed, &hash, body), report.as_deref())?;
        }
        Command::Serve { problems, addr } => {
            let set = problems.load()?;
            let svc_cfg = cogprior_service::ServiceConfig {
                seed,
                ..cfg.service.clone()
            };
            let svc = ExperimentService::new(set.problems, svc_cfg)?;
            let rt = tokio::runtime::Runtime::new().map_err(CliError::Server)?;
            rt.block_on(cogprior_service::serve(svc, addr)).map_err(CliError::Server)?;
        }
    }
    Ok(())
}
