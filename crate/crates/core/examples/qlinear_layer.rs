//! A quaternion dense layer: polar initialization, forward pass and the
//! four-fold parameter saving over a real layer of the same width.

use qlstm::layers::{qlinear_forward, quaternion_init, split_activation, InitCriterion, InitSpec, ParameterCount, SplitActivation};
use qlstm::QuaternionTensor;

fn main() -> qlstm::Result<()> {
    let (n_in, n_out) = (8, 4);
    let layer = quaternion_init(
        InitSpec {
            criterion: InitCriterion::Glorot,
            seed: 3,
            fan_in: n_in,
            fan_out: n_out,
        },
        [n_out, n_in],
    )?;
    let planes = [0, 1, 2, 3].map(|k| (0..n_in).map(|i| ((i + k) as f64 * 0.37).sin()).collect());
    let x = QuaternionTensor::pack_components(&[n_in], planes)?;
    let y = split_activation(SplitActivation::Tanh, &qlinear_forward(&layer, &x)?);
    for (o, q) in y.to_quaternions().iter().enumerate() {
        println!("y[{o}] = {q:?}");
    }
    let real = (4 * n_in) * (4 * n_out) + 4 * n_out;
    println!(
        "parameters: quaternion {} vs real {} for {}x{} real width",
        layer.parameter_count(),
        real,
        4 * n_out,
        4 * n_in
    );
    Ok(())
}
