//! One synthetic scene: per-channel filterbanks, delay-and-sum beamforming
//! and the three feature provenances a model can be trained on.

use qlstm::data::{delay_and_sum, fbank, synth_scene, DatasetConfig, Provenance, Renderer};

fn main() -> qlstm::Result<()> {
    let cfg = DatasetConfig::default();
    let scene = synth_scene(&cfg.scene, 42)?;
    println!("{} samples at {} Hz, labels {:?}", scene.source.len(), scene.sample_rate, &scene.frame_labels[..12]);
    for (m, t) in scene.truth.iter().enumerate() {
        println!(
            "mic {m}: delay {:>2}  gain {:.2}  snr {:>5.1} dB  tail {:.1} ms",
            t.delay,
            t.gain,
            t.snr_db.unwrap_or(f64::INFINITY),
            t.tail_ms
        );
    }
    let beam = delay_and_sum(&scene, cfg.beam_ref_channel, cfg.scene.max_delay)?;
    println!("estimated lags relative to mic 0: {:?}", beam.delays);

    let mic0 = fbank(&scene.channels[0], &cfg.fbank)?;
    println!("fbank: {} frames x {} filters, frame 0 head {:?}", mic0.len(), mic0[0].len(), &mic0[0][..4]);

    let rendered = Renderer::new(&cfg)?.render(42)?;
    for p in Provenance::ALL {
        let q = rendered.get(p).frames.get(10);
        println!("{p:>10}: frame 0, filter 10 = {q:?}");
    }
    Ok(())
}
