//! Runs a bidirectional QLSTM and a size-matched real LSTM over one random
//! sequence and prints their frame posteriors.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qlstm::harness::matched_hidden;
use qlstm::net::{softmax, Network, NetworkConfig};
use qlstm::Quaternion;

fn main() -> qlstm::Result<()> {
    let config = NetworkConfig {
        num_layers: 2,
        hidden: 6,
        bidirectional: true,
        dropout: 0.2,
        num_classes: 4,
        gate_product: Default::default(),
    };
    let input = 5;
    let qnet: Network<Quaternion> = Network::init(config.clone(), input, 0)?;
    let q_params = qnet.flatten().len();

    let lstm_config = NetworkConfig {
        hidden: matched_hidden(&config, 4 * input, q_params),
        ..config
    };
    let rnet: Network<f64> = Network::init(lstm_config.clone(), 4 * input, 0)?;
    println!(
        "qlstm: {} quaternion units, {} parameters; lstm: {} units, {} parameters",
        qnet.config.hidden,
        q_params,
        lstm_config.hidden,
        rnet.flatten().len()
    );

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let frames: Vec<Vec<Quaternion>> = (0..6)
        .map(|_| {
            (0..input)
                .map(|_| Quaternion::new(rng.gen(), rng.gen(), rng.gen(), rng.gen()))
                .collect()
        })
        .collect();
    let real: Vec<Vec<f64>> = frames.iter().map(|f| f.iter().flat_map(|q| q.to_array()).collect()).collect();

    for (t, (zq, zr)) in qnet.forward(&frames, None)?.iter().zip(rnet.forward(&real, None)?).enumerate() {
        let fmt = |p: Vec<f64>| p.iter().map(|v| format!("{v:.3}")).collect::<Vec<_>>().join(" ");
        println!("t={t}  qlstm [{}]  lstm [{}]", fmt(softmax(zq)), fmt(softmax(&zr)));
    }
    Ok(())
}
