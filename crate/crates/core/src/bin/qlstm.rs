use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use qlstm::data::{DatasetConfig, Split};
use qlstm::harness::config::load_dataset_config;
use qlstm::harness::{bench_tsv, cmd_ablation, cmd_bench, cmd_eval, cmd_gen_data, cmd_gradcheck, cmd_train};
use qlstm::harness::{load_toml, AblationConfig, TrainConfig};
use qlstm::train::GradCheckPreset;

#[derive(Parser)]
#[command(name = "qlstm", version, about = "Quaternion LSTM experiments on synthetic four-microphone scenes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a dataset in all three provenances.
    GenData {
        /// Dataset config (TOML). Defaults are used when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train one model on one provenance.
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Continue from `OUT/state.ckpt` if it exists.
        #[arg(long)]
        resume: bool,
    },
    /// Evaluate a checkpoint on a dataset split.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, default_value = "test")]
        split: String,
        /// Write the evaluation JSON here as well as to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train and evaluate the model × provenance matrix over several seeds.
    Ablation {
        #[arg(long)]
        config: PathBuf,
        /// Replace the configured seeds with SEED, SEED+1, ... (same count).
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare analytic gradients with central differences.
    Gradcheck {
        #[arg(long, default_value = "tiny-qlstm")]
        preset: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1e-4)]
        tolerance: f64,
        #[arg(long, default_value_t = 1e-5)]
        step: f64,
    },
    /// Time scalar against matrix-form quaternion products.
    Bench {
        #[arg(long, value_delimiter = ',', default_value = "1,8,32,128")]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Seconds spent timing each path per size.
        #[arg(long, default_value_t = 0.2)]
        budget: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn write_out(path: &Option<PathBuf>, text: &str) -> qlstm::Result<()> {
    if let Some(p) = path {
        std::fs::write(p, text).map_err(|e| qlstm::Error::Io { path: p.clone(), source: e })?;
    }
    Ok(())
}

fn run(cli: Cli) -> qlstm::Result<bool> {
    match cli.command {
        Command::GenData { config, seed, out } => {
            let mut cfg = match config {
                Some(p) => load_dataset_config(&p)?,
                None => DatasetConfig::default(),
            };
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let manifest = cmd_gen_data(&cfg, &out)?;
            println!("wrote {}", manifest.display());
        }
        Command::Train { config, seed, out, resume } => {
            let mut cfg: TrainConfig = load_toml(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let out = out
                .or_else(|| cfg.out.clone())
                .ok_or_else(|| qlstm::Error::Config("no output directory: pass --out or set `out`".into()))?;
            let run = cmd_train(&cfg, &out, resume)?;
            for r in &run.history {
                println!(
                    "epoch {:>3}  lr {:.3e}  train {:.4}  val {:.4}  acc {:.4}",
                    r.epoch, r.lr, r.train_loss, r.val_loss, r.val_frame_accuracy
                );
            }
            println!(
                "best epoch {}  test frame accuracy {:.4}  ({} parameters)",
                run.best_epoch, run.test.frame_accuracy, run.parameters
            );
        }
        Command::Eval { checkpoint, dataset, split, out } => {
            let split: Split = split.parse()?;
            let eval = cmd_eval(&checkpoint, &dataset, split)?;
            let text = serde_json::to_string_pretty(&eval).expect("plain data serializes");
            println!("{text}");
            write_out(&out, &text)?;
        }
        Command::Ablation { config, seed, out } => {
            let mut cfg: AblationConfig = load_toml(&config)?;
            if let Some(s) = seed {
                cfg.seeds = (0..cfg.seeds.len() as u64).map(|k| s + k).collect();
            }
            let out = out.or_else(|| cfg.out.clone());
            let summary = cmd_ablation(&cfg, out.as_deref())?;
            print!("{}", summary.to_table());
        }
        Command::Gradcheck { preset, seed, tolerance, step } => {
            let preset: GradCheckPreset = preset.parse()?;
            let report = cmd_gradcheck(preset, seed, tolerance, step)?;
            println!("{}", serde_json::to_string_pretty(&report).expect("plain data serializes"));
            return Ok(report.pass);
        }
        Command::Bench { sizes, seed, budget, out } => {
            let rows = cmd_bench(&sizes, seed, budget)?;
            let text = bench_tsv(&rows);
            print!("{text}");
            write_out(&out, &text)?;
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
