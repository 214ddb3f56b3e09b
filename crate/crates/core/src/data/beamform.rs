//! Delay-and-sum beamforming with integer-lag cross-correlation.

use super::scene::MultiChannelScene;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Beamformed {
    pub signal: Vec<f64>,
    /// Estimated lag of each channel relative to the reference.
    pub delays: Vec<isize>,
    /// Output indices where every aligned channel has a sample.
    pub overlap: std::ops::Range<usize>,
}

fn cross_correlation(reference: &[f64], x: &[f64], lag: isize) -> f64 {
    let n = reference.len() as isize;
    let lo = 0.max(-lag);
    let hi = n.min(x.len() as isize - lag);
    (lo..hi).map(|i| reference[i as usize] * x[(i + lag) as usize]).sum()
}

/// Lag `l ∈ [−max_lag, max_lag]` maximizing `Σ ref[n]·x[n+l]`; ties go to the
/// smaller `|l|`.
pub fn estimate_delay(reference: &[f64], x: &[f64], max_lag: usize) -> isize {
    let mut best = (0isize, cross_correlation(reference, x, 0));
    for l in 1..=max_lag as isize {
        for lag in [l, -l] {
            let r = cross_correlation(reference, x, lag);
            if r > best.1 {
                best = (lag, r);
            }
        }
    }
    best.0
}

/// Aligns every channel to `channels[ref_channel]` and averages.
///
/// Channel `m` is advanced by its estimated lag `l_m`, i.e. the output is
/// `mean_m x_m[n + l_m]` with samples outside a channel treated as zero.
pub fn delay_and_sum_channels(channels: &[Vec<f64>], ref_channel: usize, max_lag: usize) -> Result<Beamformed> {
    if channels.is_empty() || ref_channel >= channels.len() {
        return Err(Error::invalid("ref_channel", format!("{ref_channel} out of {} channels", channels.len())));
    }
    let len = channels[ref_channel].len();
    if channels.iter().any(|c| c.len() != len) {
        return Err(Error::shape("delay_and_sum channels", len, "unequal lengths"));
    }
    let reference = &channels[ref_channel];
    if reference.iter().all(|&v| v == 0.0) {
        return Err(Error::DegenerateReference(ref_channel));
    }
    let delays: Vec<isize> = channels
        .iter()
        .enumerate()
        .map(|(m, x)| if m == ref_channel { 0 } else { estimate_delay(reference, x, max_lag) })
        .collect();

    let scale = 1.0 / channels.len() as f64;
    let mut signal = vec![0.0; len];
    for (x, &l) in channels.iter().zip(&delays) {
        for (n, out) in signal.iter_mut().enumerate() {
            let j = n as isize + l;
            if j >= 0 && (j as usize) < len {
                *out += scale * x[j as usize];
            }
        }
    }
    let lo = delays.iter().map(|&l| (-l).max(0) as usize).max().unwrap_or(0);
    let hi = delays.iter().map(|&l| (len as isize - l.max(0)) as usize).min().unwrap_or(len);
    Ok(Beamformed { signal, delays, overlap: lo..hi.max(lo) })
}

/// [`delay_and_sum_channels`] over a scene's four channels.
pub fn delay_and_sum(scene: &MultiChannelScene, ref_channel: usize, max_lag: usize) -> Result<Beamformed> {
    delay_and_sum_channels(&scene.channels, ref_channel, max_lag)
}
