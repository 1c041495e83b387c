//! `hemgen`: train a SMILES generator on an energetic-molecule dataset,
//! sample new structures, score them, predict their properties, and filter
//! high-performance candidates. Run `hemgen <subcommand> --help` for the
//! flags of each stage.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hemgen_cli::config::RunConfig;
use hemgen_cli::pipeline::{
    self, read_predictions_csv, read_smiles_input, stage_seed, write_predictions_csv,
    write_smiles,
};
use hemgen_cli::CliError;
use hemgen_core::dataset;
use hemgen_core::genmetrics;
use hemgen_core::gnn::{self, PredictorCheckpoint};
use hemgen_core::seqmodel::{self, GeneratorCheckpoint, SampleOptions};
use hemgen_core::smiles::augment_dataset;

#[derive(Parser)]
#[command(name = "hemgen", version, about = "Generative pipeline for energetic molecules")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Expand a SMILES list by random enumeration.
    Augment {
        /// Input: dataset CSV or one-SMILES-per-line file.
        #[arg(long)]
        input: PathBuf,
        /// Output multiplier (1 returns the input unchanged).
        #[arg(long, default_value_t = 3)]
        factor: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Output SMILES file.
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the character-level generator.
    TrainGen {
        /// Training molecules: dataset CSV or SMILES file.
        #[arg(long)]
        dataset: PathBuf,
        /// Optional TOML run config for the generator section.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
        /// Override the config seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the config epoch count.
        #[arg(long)]
        epochs: Option<usize>,
    },
    /// Sample strings from a trained generator checkpoint.
    Sample {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long, default_value_t = 1.0)]
        temperature: f64,
        /// Argmax decoding instead of sampling.
        #[arg(long, default_value_t = false)]
        greedy: bool,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score a generated library against its training set.
    Evaluate {
        #[arg(long)]
        generated: PathBuf,
        #[arg(long)]
        training: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Train the property predictor.
    TrainPred {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        epochs: Option<usize>,
    },
    /// Predict the nine properties for a molecule list.
    Predict {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Filter a predictions CSV by a property threshold.
    Filter {
        #[arg(long)]
        predictions: PathBuf,
        #[arg(long, default_value = "D")]
        target: String,
        #[arg(long, default_value_t = 9.0)]
        threshold: f64,
        /// "above" or "below".
        #[arg(long, default_value = "above")]
        direction: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Numeric verification of the embedding-conditioning analysis.
    VerifyTheory {
        #[arg(long, default_value_t = 100)]
        v: usize,
        #[arg(long, default_value_t = 128)]
        d: usize,
        #[arg(long, default_value_t = 10)]
        dt: usize,
        #[arg(long, default_value_t = 0.01)]
        epsilon: f64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Write the JSON report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print a summary of a completed run directory.
    Report {
        #[arg(long)]
        run_dir: PathBuf,
    },
    /// Execute the full pipeline from a run config.
    Run {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Override the config's output directory.
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Override the config's root seed.
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn main() -> ExitCode {
    match dispatch() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch() -> Result<(), CliError> {
    match Cli::parse().command {
        Command::Augment {
            input,
            factor,
            seed,
            out,
        } => {
            let smiles = read_smiles_input(&input)?;
            let augmented = augment_dataset(&smiles, factor, stage_seed(seed, "augment"))
                .map_err(|e| CliError::stage("augment", e))?;
            write_smiles(&out, &augmented)?;
            println!("augmented {} -> {} strings", smiles.len(), augmented.len());
            Ok(())
        }
        Command::TrainGen {
            dataset,
            config,
            out_dir,
            seed,
            epochs,
        } => {
            let mut run = load_or_default(config)?;
            if let Some(s) = seed {
                run.seed = s;
            }
            if let Some(e) = epochs {
                run.generator.epochs = e;
            }
            let corpus = read_smiles_input(&dataset)?;
            let gen_config = run.generator.to_config(stage_seed(run.seed, "train-gen"))?;
            let (ckpt, history) = seqmodel::train(&gen_config, &corpus, run.val_fraction)
                .map_err(|e| CliError::stage("train-gen", e))?;
            std::fs::create_dir_all(&out_dir)
                .map_err(|e| CliError::Io(out_dir.display().to_string(), e))?;
            ckpt.save(&out_dir.join("generator.ckpt"))
                .map_err(|e| CliError::stage("train-gen", e))?;
            pipeline::write_history_csv(&out_dir.join("gen_history.csv"), &history)?;
            println!(
                "trained {} epochs; final train loss {:.4}",
                history.train_loss.len(),
                history.train_loss.last().unwrap_or(&f64::NAN)
            );
            Ok(())
        }
        Command::Sample {
            checkpoint,
            n,
            temperature,
            greedy,
            seed,
            out,
        } => {
            let ckpt = GeneratorCheckpoint::load(&checkpoint)
                .map_err(|e| CliError::stage("sample", e))?;
            let samples = seqmodel::sample(
                &ckpt,
                &SampleOptions {
                    n,
                    temperature,
                    seed: stage_seed(seed, "sample"),
                    greedy,
                },
            )
            .map_err(|e| CliError::stage("sample", e))?;
            write_smiles(&out, &samples)?;
            println!("wrote {} samples to {}", samples.len(), out.display());
            Ok(())
        }
        Command::Evaluate {
            generated,
            training,
            out_dir,
        } => {
            let gen = read_smiles_input(&generated)?;
            let train = read_smiles_input(&training)?;
            let report =
                genmetrics::evaluate(&gen, &train).map_err(|e| CliError::stage("evaluate", e))?;
            std::fs::create_dir_all(&out_dir)
                .map_err(|e| CliError::Io(out_dir.display().to_string(), e))?;
            std::fs::write(out_dir.join("eval_report.json"), report.to_json())
                .map_err(|e| CliError::Io("eval_report.json".into(), e))?;
            std::fs::write(out_dir.join("eval_report.csv"), report.to_csv())
                .map_err(|e| CliError::Io("eval_report.csv".into(), e))?;
            print!("{}", pipeline::summarize(&report, 0));
            Ok(())
        }
        Command::TrainPred {
            dataset: dataset_path,
            config,
            out_dir,
            seed,
            epochs,
        } => {
            let mut run = load_or_default(config)?;
            if let Some(s) = seed {
                run.seed = s;
            }
            if let Some(e) = epochs {
                run.predictor.epochs = e;
            }
            let ingest = dataset::ingest(&dataset_path, run.drop_invalid_rows)
                .map_err(|e| CliError::stage("ingest", e))?;
            let pred_config = run.predictor.to_config(stage_seed(run.seed, "train-pred"));
            let (ckpt, history) =
                gnn::train_predictor(&pred_config, &ingest.records, stage_seed(run.seed, "split"))
                    .map_err(|e| CliError::stage("train-pred", e))?;
            std::fs::create_dir_all(&out_dir)
                .map_err(|e| CliError::Io(out_dir.display().to_string(), e))?;
            ckpt.save(&out_dir.join("predictor.ckpt"))
                .map_err(|e| CliError::stage("train-pred", e))?;
            println!(
                "trained {} epochs; final train RMSE {:.4}, test RMSE {:.4}",
                history.train_rmse.len(),
                history.train_rmse.last().unwrap_or(&f64::NAN),
                history.test_rmse.last().unwrap_or(&f64::NAN)
            );
            Ok(())
        }
        Command::Predict {
            checkpoint,
            input,
            out,
        } => {
            let ckpt = PredictorCheckpoint::load(&checkpoint)
                .map_err(|e| CliError::stage("predict", e))?;
            let smiles = read_smiles_input(&input)?;
            let preds = gnn::predict(&ckpt, &smiles).map_err(|e| CliError::stage("predict", e))?;
            let rows: Vec<(String, [f64; dataset::N_TARGETS])> =
                smiles.into_iter().zip(preds).collect();
            write_predictions_csv(&out, &rows)?;
            println!("wrote {} predictions to {}", rows.len(), out.display());
            Ok(())
        }
        Command::Filter {
            predictions,
            target,
            threshold,
            direction,
            out,
        } => {
            let rows = read_predictions_csv(&predictions)?;
            let direction = pipeline::parse_direction(&direction)?;
            let smiles: Vec<String> = rows.iter().map(|(s, _)| s.clone()).collect();
            let preds: Vec<[f64; dataset::N_TARGETS]> = rows.iter().map(|(_, p)| *p).collect();
            let kept = genmetrics::filter_by_property(&smiles, &preds, &target, threshold, direction)
                .map_err(|e| CliError::stage("filter", e))?;
            let out_rows: Vec<(String, [f64; dataset::N_TARGETS])> =
                kept.into_iter().map(|(_, s, p)| (s, p)).collect();
            write_predictions_csv(&out, &out_rows)?;
            println!("kept {} of {} molecules", out_rows.len(), rows.len());
            Ok(())
        }
        Command::VerifyTheory {
            v,
            d,
            dt,
            epsilon,
            seed,
            out,
        } => {
            let report = pipeline::verify_theory(v, d, dt, epsilon, seed)?;
            let json = serde_json::to_string_pretty(&report)
                .map_err(|e| CliError::stage("verify-theory", e))?;
            match out {
                Some(path) => std::fs::write(&path, &json)
                    .map_err(|e| CliError::Io(path.display().to_string(), e))?,
                None => println!("{json}"),
            }
            if report.all_pass {
                Ok(())
            } else {
                Err(CliError::Stage(
                    "verify-theory".into(),
                    "one or more checks failed".into(),
                ))
            }
        }
        Command::Report { run_dir } => {
            let manifest = std::fs::read_to_string(run_dir.join("manifest.json"))
                .map_err(|e| CliError::Io("manifest.json".into(), e))?;
            let report_text = std::fs::read_to_string(run_dir.join("eval_report.json"))
                .map_err(|e| CliError::Io("eval_report.json".into(), e))?;
            let manifest: serde_json::Value =
                serde_json::from_str(&manifest).map_err(|e| CliError::stage("report", e))?;
            let report: serde_json::Value =
                serde_json::from_str(&report_text).map_err(|e| CliError::stage("report", e))?;
            println!("run:       {}", run_dir.display());
            println!(
                "config:    {}",
                manifest["config_hash"].as_str().unwrap_or("?")
            );
            for key in [
                "n_generated",
                "validity",
                "novelty",
                "uniqueness",
                "mean_tanimoto_vs_training",
            ] {
                println!("{key}: {}", report[key]);
            }
            Ok(())
        }
        Command::Run {
            config,
            out_dir,
            seed,
        } => {
            let mut run = load_or_default(config)?;
            if let Some(dir) = out_dir {
                run.out_dir = dir;
            }
            if let Some(s) = seed {
                run.seed = s;
            }
            let artifacts = pipeline::run_pipeline(&run)?;
            print!(
                "{}",
                pipeline::summarize(&artifacts.report, artifacts.n_candidates)
            );
            println!("artifacts in {}", artifacts.out_dir.display());
            Ok(())
        }
    }
}

fn load_or_default(path: Option<PathBuf>) -> Result<RunConfig, CliError> {
    match path {
        Some(p) => RunConfig::load(&p),
        None => Ok(RunConfig::default()),
    }
}
