//! A one-seed model x provenance matrix on a small in-memory dataset.
//! The full desk run is `qlstm ablation --config configs/desk_ablation.toml`.

use qlstm::data::{build_dataset, DatasetConfig, SplitSizes};
use qlstm::harness::{ablation_on, load_toml, AblationConfig};

fn main() -> qlstm::Result<()> {
    let data = build_dataset(&DatasetConfig {
        sizes: SplitSizes {
            train: 40,
            valid: 10,
            test: 20,
        },
        ..DatasetConfig::default()
    })?;
    let config = concat!(env!("CARGO_MANIFEST_DIR"), "/configs/desk_ablation.toml");
    let mut cfg: AblationConfig = load_toml(config.as_ref())?;
    cfg.seeds = vec![1];
    cfg.epochs = 3;
    let summary = ablation_on(&data, &cfg, None)?;
    print!("{}", summary.to_table());
    print!("{}", summary.to_tsv());
    Ok(())
}
