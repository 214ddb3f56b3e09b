//! Log mel-filterbank energies.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Window {
    Hamming,
    Rectangular,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FbankConfig {
    pub sample_rate: f64,
    pub n_filters: usize,
    pub frame_len_ms: f64,
    pub hop_ms: f64,
    pub window: Window,
    pub mel_low_hz: f64,
    /// Upper edge; `None` means 0.95 · Nyquist.
    pub mel_high_hz: Option<f64>,
    pub log_floor: f64,
}

impl Default for FbankConfig {
    fn default() -> Self {
        FbankConfig {
            sample_rate: 16_000.0,
            n_filters: 40,
            frame_len_ms: 25.0,
            hop_ms: 10.0,
            window: Window::Hamming,
            mel_low_hz: 20.0,
            mel_high_hz: None,
            log_floor: 1e-10,
        }
    }
}

impl FbankConfig {
    pub fn frame_len(&self) -> usize {
        (self.sample_rate * self.frame_len_ms / 1000.0).round() as usize
    }

    pub fn hop(&self) -> usize {
        (self.sample_rate * self.hop_ms / 1000.0).round() as usize
    }

    pub fn n_fft(&self) -> usize {
        self.frame_len().next_power_of_two()
    }

    pub fn high_hz(&self) -> f64 {
        self.mel_high_hz.unwrap_or(0.95 * self.sample_rate / 2.0)
    }

    /// `1 + ⌊(len − frame)/hop⌋`, or zero when shorter than one frame.
    pub fn num_frames(&self, len: usize) -> usize {
        let frame = self.frame_len();
        if len < frame {
            0
        } else {
            1 + (len - frame) / self.hop()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sample_rate > 0.0) {
            return Err(Error::invalid("sample_rate", "must be positive"));
        }
        if self.n_filters == 0 {
            return Err(Error::invalid("n_filters", "must be at least 1"));
        }
        if self.frame_len() < 2 || self.hop() == 0 {
            return Err(Error::invalid("frame_len_ms/hop_ms", "frame and hop must span samples"));
        }
        let high = self.high_hz();
        if !(self.mel_low_hz >= 0.0 && self.mel_low_hz < high && high <= self.sample_rate / 2.0) {
            return Err(Error::invalid(
                "mel band",
                format!("need 0 <= low < high <= Nyquist, got [{}, {high}]", self.mel_low_hz),
            ));
        }
        if !(self.log_floor > 0.0) {
            return Err(Error::invalid("log_floor", "must be positive"));
        }
        Ok(())
    }
}

pub fn hz_to_mel(f: f64) -> f64 {
    2595.0 * (1.0 + f / 700.0).log10()
}

pub fn mel_to_hz(m: f64) -> f64 {
    700.0 * (10f64.powf(m / 2595.0) - 1.0)
}

/// `n_filters + 2` band edges in Hz, equally spaced on the mel scale.
pub fn mel_edges(cfg: &FbankConfig) -> Vec<f64> {
    let lo = hz_to_mel(cfg.mel_low_hz);
    let hi = hz_to_mel(cfg.high_hz());
    let n = cfg.n_filters + 1;
    (0..=n)
        .map(|i| mel_to_hz(lo + (hi - lo) * i as f64 / n as f64))
        .collect()
}

/// Center frequency of each filter in Hz.
pub fn filter_centers(cfg: &FbankConfig) -> Vec<f64> {
    let e = mel_edges(cfg);
    e[1..e.len() - 1].to_vec()
}

/// Triangular weights `[n_filters][n_fft/2 + 1]`, evaluated at exact bin
/// frequencies.
pub fn mel_filterbank(cfg: &FbankConfig) -> Vec<Vec<f64>> {
    let n_fft = cfg.n_fft();
    let bins = n_fft / 2 + 1;
    let e = mel_edges(cfg);
    (0..cfg.n_filters)
        .map(|m| {
            let (lo, c, hi) = (e[m], e[m + 1], e[m + 2]);
            (0..bins)
                .map(|k| {
                    let f = k as f64 * cfg.sample_rate / n_fft as f64;
                    if f >= lo && f <= c {
                        (f - lo) / (c - lo)
                    } else if f > c && f <= hi {
                        (hi - f) / (hi - c)
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect()
}

fn window(kind: Window, n: usize) -> Vec<f64> {
    match kind {
        Window::Rectangular => vec![1.0; n],
        Window::Hamming => (0..n)
            .map(|i| 0.54 - 0.46 * (2.0 * std::f64::consts::PI * i as f64 / (n - 1) as f64).cos())
            .collect(),
    }
}

/// Reusable filterbank extractor (FFT plan, window and filters computed once).
pub struct Fbank {
    cfg: FbankConfig,
    fft: Arc<dyn Fft<f64>>,
    window: Vec<f64>,
    filters: Vec<Vec<f64>>,
}

impl Fbank {
    pub fn new(cfg: &FbankConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Fbank {
            fft: FftPlanner::new().plan_fft_forward(cfg.n_fft()),
            window: window(cfg.window, cfg.frame_len()),
            filters: mel_filterbank(cfg),
            cfg: cfg.clone(),
        })
    }

    pub fn config(&self) -> &FbankConfig {
        &self.cfg
    }

    /// Row-major `[T × n_filters]` log energies.
    pub fn compute(&self, wave: &[f64]) -> Result<Vec<Vec<f64>>> {
        let frame = self.cfg.frame_len();
        if wave.len() < frame {
            return Err(Error::TooShort { len: wave.len(), frame });
        }
        let hop = self.cfg.hop();
        let n_fft = self.cfg.n_fft();
        let mut buf = vec![Complex::new(0.0, 0.0); n_fft];
        let mut power = vec![0.0; n_fft / 2 + 1];
        let rows = (0..self.cfg.num_frames(wave.len()))
            .map(|t| {
                let seg = &wave[t * hop..t * hop + frame];
                buf.iter_mut().for_each(|z| *z = Complex::new(0.0, 0.0));
                for ((z, x), w) in buf.iter_mut().zip(seg).zip(&self.window) {
                    z.re = x * w;
                }
                self.fft.process(&mut buf);
                for (p, z) in power.iter_mut().zip(&buf) {
                    *p = z.norm_sqr();
                }
                self.filters
                    .iter()
                    .map(|f| {
                        let e: f64 = f.iter().zip(&power).map(|(w, p)| w * p).sum();
                        e.max(self.cfg.log_floor).ln()
                    })
                    .collect()
            })
            .collect();
        Ok(rows)
    }
}

/// One-shot convenience wrapper around [`Fbank`].
pub fn fbank(wave: &[f64], cfg: &FbankConfig) -> Result<Vec<Vec<f64>>> {
    Fbank::new(cfg)?.compute(wave)
}
