//! Synthetic four-microphone scenes with frame-level class labels.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::fbank::{hz_to_mel, mel_to_hz, FbankConfig};
use crate::error::{Error, Result};

pub const CHANNELS: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneConfig {
    pub sample_rate: f64,
    /// Labelled frames per scene; the waveform spans exactly this many.
    pub num_frames: usize,
    pub frame_len_ms: f64,
    pub hop_ms: f64,
    pub num_classes: usize,
    /// Seed for the class spectral templates, shared by every scene.
    pub template_seed: u64,
    /// Spectral bumps per class template.
    pub bumps_per_class: usize,
    /// Bump width on the mel scale.
    pub bump_width_mel: f64,
    /// Each segment shifts every bump center by up to this many mel.
    pub center_jitter_mel: f64,
    /// Inclusive range of segment lengths in frames.
    pub segment_frames: [usize; 2],
    pub max_delay: usize,
    pub gain_range: [f64; 2],
    /// Per-channel SNR range in dB; `None` disables noise.
    pub snr_db: Option<[f64; 2]>,
    /// Decay-tail length range in ms; `[0, 0]` disables the tail.
    pub tail_ms: [f64; 2],
}

impl Default for SceneConfig {
    fn default() -> Self {
        SceneConfig {
            sample_rate: 8000.0,
            num_frames: 60,
            frame_len_ms: 25.0,
            hop_ms: 10.0,
            num_classes: 4,
            template_seed: 7,
            bumps_per_class: 2,
            bump_width_mel: 250.0,
            center_jitter_mel: 200.0,
            segment_frames: [4, 12],
            max_delay: 20,
            gain_range: [0.5, 1.0],
            snr_db: Some([0.0, 10.0]),
            tail_ms: [0.0, 15.0],
        }
    }
}

impl SceneConfig {
    /// Framing matching an [`FbankConfig`] with the same rate, frame and hop.
    pub fn framing(&self) -> FbankConfig {
        FbankConfig {
            sample_rate: self.sample_rate,
            frame_len_ms: self.frame_len_ms,
            hop_ms: self.hop_ms,
            ..FbankConfig::default()
        }
    }

    pub fn num_samples(&self) -> usize {
        let f = self.framing();
        f.frame_len() + (self.num_frames - 1) * f.hop()
    }

    /// Sample index whose source class labels frame `t`.
    pub fn frame_center(&self, t: usize) -> usize {
        let f = self.framing();
        t * f.hop() + f.frame_len() / 2
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |name, reason: &str| Err(Error::invalid(name, reason.to_string()));
        if !(self.sample_rate > 0.0) {
            return bad("sample_rate", "must be positive");
        }
        self.framing().validate()?;
        if self.num_frames == 0 {
            return bad("num_frames", "must be at least 1");
        }
        if self.num_classes < 2 {
            return bad("num_classes", "need at least 2 classes");
        }
        if self.bumps_per_class == 0 || !(self.bump_width_mel > 0.0) {
            return bad("bumps_per_class", "need at least one bump of positive width");
        }
        if !(self.center_jitter_mel >= 0.0) {
            return bad("center_jitter_mel", "must be >= 0");
        }
        let [s0, s1] = self.segment_frames;
        if s0 == 0 || s0 > s1 {
            return bad("segment_frames", "need 1 <= min <= max");
        }
        let [g0, g1] = self.gain_range;
        if !(g0 > 0.0 && g0 <= g1) {
            return bad("gain_range", "need 0 < min <= max");
        }
        if let Some([a, b]) = self.snr_db {
            if !(0.0..=30.0).contains(&a) || !(0.0..=30.0).contains(&b) || a > b {
                return bad("snr_db", "need 0 <= min <= max <= 30");
            }
        }
        let [t0, t1] = self.tail_ms;
        if !(t0 >= 0.0 && t0 <= t1) {
            return bad("tail_ms", "need 0 <= min <= max");
        }
        if self.max_delay >= self.num_samples() {
            return bad("max_delay", "must be shorter than the scene");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelTruth {
    pub delay: usize,
    pub gain: f64,
    /// Configured SNR in dB; `None` when noise is off.
    pub snr_db: Option<f64>,
    pub tail_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiChannelScene {
    pub sample_rate: f64,
    pub channels: [Vec<f64>; CHANNELS],
    /// Clean source before delay, gain, tail and noise.
    pub source: Vec<f64>,
    /// Noise-free per-channel signals (after delay, gain and tail).
    pub clean: [Vec<f64>; CHANNELS],
    pub truth: [ChannelTruth; CHANNELS],
    pub frame_labels: Vec<usize>,
}

/// Magnitude response of every class on an arbitrary frequency grid.
#[derive(Debug, Clone)]
pub struct ClassTemplates {
    /// `(center_mel, weight)` per bump per class.
    bumps: Vec<Vec<(f64, f64)>>,
    width: f64,
}

impl ClassTemplates {
    pub fn new(cfg: &SceneConfig) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.template_seed);
        let lo = hz_to_mel(100.0);
        let hi = hz_to_mel(0.9 * cfg.sample_rate / 2.0);
        let bumps = (0..cfg.num_classes)
            .map(|_| {
                (0..cfg.bumps_per_class)
                    .map(|_| (rng.gen_range(lo..hi), rng.gen_range(0.5..1.0)))
                    .collect()
            })
            .collect();
        ClassTemplates { bumps, width: cfg.bump_width_mel }
    }

    pub fn magnitude(&self, class: usize, hz: f64) -> f64 {
        self.magnitude_shifted(class, hz, &[])
    }

    /// Magnitude with bump `i` moved by `shifts[i]` mel (missing shifts are 0).
    pub fn magnitude_shifted(&self, class: usize, hz: f64, shifts: &[f64]) -> f64 {
        let m = hz_to_mel(hz.abs());
        self.bumps[class]
            .iter()
            .enumerate()
            .map(|(i, &(c, w))| {
                let c = c + shifts.get(i).copied().unwrap_or(0.0);
                w * (-0.5 * ((m - c) / self.width).powi(2)).exp()
            })
            .sum()
    }

    pub fn bumps_per_class(&self) -> usize {
        self.bumps.first().map_or(0, Vec::len)
    }

    pub fn centers_hz(&self, class: usize) -> Vec<f64> {
        self.bumps[class].iter().map(|&(c, _)| mel_to_hz(c)).collect()
    }
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn power(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>() / x.len().max(1) as f64
}

/// Spectrally shaped unit-RMS noise for one segment.
fn shaped_segment(
    fft: &(Arc<dyn rustfft::Fft<f64>>, Arc<dyn rustfft::Fft<f64>>),
    templates: &ClassTemplates,
    class: usize,
    sample_rate: f64,
    jitter: f64,
    rng: &mut ChaCha8Rng,
) -> Vec<f64> {
    let n = fft.0.len();
    let shifts: Vec<f64> = (0..templates.bumps_per_class())
        .map(|_| if jitter > 0.0 { rng.gen_range(-jitter..jitter) } else { 0.0 })
        .collect();
    let mut buf: Vec<Complex<f64>> = (0..n).map(|_| Complex::new(gaussian(rng), 0.0)).collect();
    fft.0.process(&mut buf);
    for (k, z) in buf.iter_mut().enumerate() {
        let f = if k <= n / 2 { k } else { n - k } as f64 * sample_rate / n as f64;
        *z *= templates.magnitude_shifted(class, f, &shifts);
    }
    fft.1.process(&mut buf);
    let mut out: Vec<f64> = buf.iter().map(|z| z.re).collect();
    let rms = power(&out).sqrt();
    if rms > 0.0 {
        out.iter_mut().for_each(|v| *v /= rms);
    }
    out
}

/// `out[n] = x[n − d]`, zero-filled.
pub fn delay_signal(x: &[f64], d: usize) -> Vec<f64> {
    let mut out = vec![0.0; x.len()];
    if d < x.len() {
        out[d..].copy_from_slice(&x[..x.len() - d]);
    }
    out
}

/// Causal FIR filtering truncated to the input length.
fn convolve_causal(x: &[f64], h: &[f64]) -> Vec<f64> {
    (0..x.len())
        .map(|n| h.iter().take(n + 1).enumerate().map(|(k, hk)| hk * x[n - k]).sum())
        .collect()
}

/// Draws one scene. Pure in `(cfg, seed)`.
pub fn synth_scene(cfg: &SceneConfig, seed: u64) -> Result<MultiChannelScene> {
    synth_scene_with(cfg, &ClassTemplates::new(cfg), seed)
}

/// [`synth_scene`] with precomputed templates (they depend only on `cfg`).
pub fn synth_scene_with(cfg: &SceneConfig, templates: &ClassTemplates, seed: u64) -> Result<MultiChannelScene> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let hop = cfg.framing().hop();
    let len = cfg.num_samples();

    // Segment classes on a frame grid, rendered per segment over its samples.
    let mut boundaries = vec![0usize];
    let mut classes = Vec::new();
    while *boundaries.last().unwrap() < cfg.num_frames {
        let [a, b] = cfg.segment_frames;
        let next = (boundaries.last().unwrap() + rng.gen_range(a..=b)).min(cfg.num_frames);
        boundaries.push(next);
        classes.push(rng.gen_range(0..cfg.num_classes));
    }
    let frame_labels: Vec<usize> = (0..cfg.num_frames)
        .map(|t| {
            let seg = boundaries.windows(2).position(|w| t >= w[0] && t < w[1]).unwrap();
            classes[seg]
        })
        .collect();

    let mut planner = FftPlanner::new();
    let mut source = vec![0.0; len];
    for (s, &class) in classes.iter().enumerate() {
        let start = if s == 0 { 0 } else { cfg.frame_center(boundaries[s]) - hop / 2 };
        let end = if s + 1 == classes.len() {
            len
        } else {
            cfg.frame_center(boundaries[s + 1]) - hop / 2
        };
        let n = end - start;
        let fft = (planner.plan_fft_forward(n), planner.plan_fft_inverse(n));
        let level = rng.gen_range(0.5..1.5);
        let seg = shaped_segment(&fft, templates, class, cfg.sample_rate, cfg.center_jitter_mel, &mut rng);
        for (dst, v) in source[start..end].iter_mut().zip(seg) {
            *dst = level * v;
        }
    }

    let mut channels: [Vec<f64>; CHANNELS] = Default::default();
    let mut clean: [Vec<f64>; CHANNELS] = Default::default();
    let mut truth = Vec::with_capacity(CHANNELS);
    for m in 0..CHANNELS {
        let delay = rng.gen_range(0..=cfg.max_delay);
        let [g0, g1] = cfg.gain_range;
        let gain = if g0 == g1 { g0 } else { rng.gen_range(g0..g1) };
        let [t0, t1] = cfg.tail_ms;
        let tail_ms = if t0 == t1 { t0 } else { rng.gen_range(t0..t1) };
        let tail_len = (tail_ms * cfg.sample_rate / 1000.0).round() as usize;

        let mut y = delay_signal(&source, delay);
        if tail_len > 0 {
            let tau = tail_len as f64 / 3.0;
            let mut h = vec![1.0];
            h.extend((1..=tail_len).map(|k| 0.3 * (-(k as f64) / tau).exp() * gaussian(&mut rng)));
            y = convolve_causal(&y, &h);
        }
        y.iter_mut().for_each(|v| *v *= gain);

        let snr_db = cfg.snr_db.map(|[a, b]| if a == b { a } else { rng.gen_range(a..b) });
        let mut noisy = y.clone();
        if let Some(snr) = snr_db {
            let mut noise: Vec<f64> = (0..len).map(|_| gaussian(&mut rng)).collect();
            let target = power(&y) / 10f64.powf(snr / 10.0);
            let scale = (target / power(&noise)).sqrt();
            for (v, e) in noisy.iter_mut().zip(noise.iter_mut()) {
                *e *= scale;
                *v += *e;
            }
        }
        channels[m] = noisy;
        clean[m] = y;
        truth.push(ChannelTruth { delay, gain, snr_db, tail_ms });
    }

    Ok(MultiChannelScene {
        sample_rate: cfg.sample_rate,
        channels,
        source,
        clean,
        truth: truth.try_into().expect("four channels"),
        frame_labels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quiet() -> SceneConfig {
        SceneConfig {
            max_delay: 0,
            gain_range: [1.0, 1.0],
            snr_db: None,
            tail_ms: [0.0, 0.0],
            ..SceneConfig::default()
        }
    }

    #[test]
    fn degenerate_config_copies_source() {
        let s = synth_scene(&quiet(), 3).unwrap();
        for ch in &s.channels {
            assert_eq!(ch, &s.source);
        }
    }

    #[test]
    fn shapes_and_label_count() {
        let cfg = SceneConfig::default();
        let s = synth_scene(&cfg, 1).unwrap();
        let len = cfg.num_samples();
        assert!(s.channels.iter().all(|c| c.len() == len));
        assert_eq!(cfg.framing().num_frames(len), cfg.num_frames);
        assert_eq!(s.frame_labels.len(), cfg.num_frames);
        assert!(s.frame_labels.iter().all(|&y| y < cfg.num_classes));
        assert!(s.truth.iter().all(|t| t.delay <= cfg.max_delay));
    }

    #[test]
    fn empirical_snr_matches() {
        for snr in [0.0, 30.0] {
            let cfg = SceneConfig { snr_db: Some([snr, snr]), ..SceneConfig::default() };
            let s = synth_scene(&cfg, 5).unwrap();
            for (noisy, clean) in s.channels.iter().zip(&s.clean) {
                let noise: Vec<f64> = noisy.iter().zip(clean).map(|(a, b)| a - b).collect();
                let measured = 10.0 * (power(clean) / power(&noise)).log10();
                assert!((measured - snr).abs() < 1.0, "{measured} vs {snr}");
            }
        }
    }

    #[test]
    fn deterministic() {
        let cfg = SceneConfig::default();
        assert_eq!(synth_scene(&cfg, 11).unwrap(), synth_scene(&cfg, 11).unwrap());
        assert_ne!(synth_scene(&cfg, 11).unwrap().source, synth_scene(&cfg, 12).unwrap().source);
    }

    #[test]
    fn rejects_bad_ranges() {
        for cfg in [
            SceneConfig { snr_db: Some([-5.0, 10.0]), ..SceneConfig::default() },
            SceneConfig { snr_db: Some([10.0, 31.0]), ..SceneConfig::default() },
            SceneConfig { num_classes: 1, ..SceneConfig::default() },
            SceneConfig { segment_frames: [5, 2], ..SceneConfig::default() },
            SceneConfig { max_delay: 10_000, ..SceneConfig::default() },
        ] {
            assert!(synth_scene(&cfg, 0).is_err());
        }
    }

    #[test]
    fn delay_is_zero_filled_shift() {
        assert_eq!(delay_signal(&[1.0, 2.0, 3.0], 1), vec![0.0, 1.0, 2.0]);
        assert_eq!(delay_signal(&[1.0, 2.0], 5), vec![0.0, 0.0]);
    }
}
