//! Analytic BPTT gradients against central differences on the tiny presets.

use qlstm::net::GateProduct;
use qlstm::train::gradcheck::{tiny_lstm, tiny_qlstm};
use qlstm::train::grad_check;

fn main() -> qlstm::Result<()> {
    let (tol, step) = (1e-4, 1e-5);
    for mode in [GateProduct::Componentwise, GateProduct::Hamilton] {
        let (net, batch) = tiny_qlstm(0, mode);
        let r = grad_check(&net, &batch, tol, step)?;
        println!(
            "qlstm {mode:?}: {} params, max rel error {:.2e} at {} -> {}",
            r.checked,
            r.max_rel_error,
            r.worst_param,
            if r.pass { "pass" } else { "FAIL" }
        );
    }
    let (net, batch) = tiny_lstm(0);
    let r = grad_check(&net, &batch, tol, step)?;
    println!(
        "lstm: {} params, max rel error {:.2e} at {} -> {}",
        r.checked,
        r.max_rel_error,
        r.worst_param,
        if r.pass { "pass" } else { "FAIL" }
    );
    Ok(())
}
