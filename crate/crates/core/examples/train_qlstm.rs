//! Trains a small QLSTM on an in-memory synthetic dataset with RMSProp and
//! the halving schedule, then reports test accuracy and the confusion matrix.

use qlstm::data::{build_dataset, DatasetConfig, Provenance, SplitSizes};
use qlstm::harness::prepare;
use qlstm::net::{Network, NetworkConfig};
use qlstm::train::{evaluate, train_loop, TrainOptions, TrainState};
use qlstm::Quaternion;

fn main() -> qlstm::Result<()> {
    let data = build_dataset(&DatasetConfig {
        sizes: SplitSizes {
            train: 60,
            valid: 12,
            test: 20,
        },
        ..DatasetConfig::default()
    })?;
    let prep = prepare::<Quaternion>(&data, Provenance::FourMic)?;
    let config = NetworkConfig {
        num_layers: 1,
        hidden: 8,
        bidirectional: true,
        dropout: 0.2,
        num_classes: data.num_classes(),
        gate_product: Default::default(),
    };
    let opts = TrainOptions {
        epochs: 6,
        ..TrainOptions::default()
    };
    let net = Network::<Quaternion>::init(config, prep.input, opts.seed)?;
    let mut state = TrainState::new(net, &opts);
    train_loop(&mut state, &prep.train, &prep.valid, &opts, |_, r| {
        println!(
            "epoch {}  lr {:.2e}  train {:.4}  val {:.4}  acc {:.3}",
            r.epoch, r.lr, r.train_loss, r.val_loss, r.val_frame_accuracy
        );
        Ok(())
    })?;
    let best = state.best.as_ref().expect("trained");
    let test = evaluate(&best.net, &prep.test)?;
    println!("best epoch {}: test frame accuracy {:.3}", best.epoch, test.frame_accuracy);
    println!("confusion (rows true, columns predicted):");
    for row in &test.confusion {
        println!("  {row:?}");
    }
    Ok(())
}
