//! Experiment configs, checkpoints and the commands behind the `qlstm`
//! binary.

pub mod checkpoint;
pub mod commands;
pub mod config;

pub use commands::{
    ablation_on, bench_tsv, cmd_ablation, cmd_bench, cmd_eval, cmd_gen_data, cmd_gradcheck, cmd_train, prepare,
    train_on, AblationCell, AblationSummary, BenchRow, ModelElement, RunMetrics,
};
pub use config::{load_toml, matched_hidden, AblationConfig, LstmSizing, ModelKind, TrainConfig};
