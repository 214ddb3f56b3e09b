//! Quaternion packing of per-microphone features.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quat::{Quaternion, QuaternionTensor};
use crate::train::Sequence;

/// How a feature sequence was produced from a scene.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    /// Microphone m fills quaternion component m.
    FourMic,
    /// One microphone's features copied into all four components.
    CopiedMic,
    /// Delay-and-sum output, replicated like [`Provenance::CopiedMic`].
    Beamformed,
}

impl Provenance {
    pub const ALL: [Provenance; 3] = [Provenance::FourMic, Provenance::CopiedMic, Provenance::Beamformed];

    pub fn name(self) -> &'static str {
        match self {
            Provenance::FourMic => "four_mic",
            Provenance::CopiedMic => "copied_mic",
            Provenance::Beamformed => "beamformed",
        }
    }
}

impl std::fmt::Display for Provenance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Provenance {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Provenance::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::invalid("provenance", format!("unknown provenance {s:?}")))
    }
}

/// Quaternion features `[T × F]` with frame labels.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSequence {
    pub frames: QuaternionTensor,
    pub labels: Vec<usize>,
    pub provenance: Provenance,
}

impl FeatureSequence {
    pub fn num_frames(&self) -> usize {
        self.frames.shape()[0]
    }

    pub fn num_features(&self) -> usize {
        self.frames.shape()[1]
    }

    /// Per-frame quaternion vectors, the QLSTM input.
    pub fn quaternion_sequence(&self) -> Sequence<Quaternion> {
        let (t, f) = (self.num_frames(), self.num_features());
        let frames = (0..t)
            .map(|i| (0..f).map(|j| self.frames.get(i * f + j)).collect())
            .collect();
        Sequence { frames, labels: self.labels.clone() }
    }

    /// Real input for the LSTM baseline: the four microphones concatenated
    /// (`4F` values) for `four_mic`, otherwise the single replicated matrix.
    pub fn real_sequence(&self) -> Sequence<f64> {
        let (t, f) = (self.num_frames(), self.num_features());
        let planes = self.frames.planes();
        let used = match self.provenance {
            Provenance::FourMic => 4,
            _ => 1,
        };
        let frames = (0..t)
            .map(|i| (0..used).flat_map(|k| planes[k][i * f..(i + 1) * f].iter().copied()).collect())
            .collect();
        Sequence { frames, labels: self.labels.clone() }
    }

    /// Width of [`real_sequence`](Self::real_sequence) frames.
    pub fn real_width(&self) -> usize {
        match self.provenance {
            Provenance::FourMic => 4 * self.num_features(),
            _ => self.num_features(),
        }
    }
}

fn check_matrix(m: &[Vec<f64>]) -> Result<(usize, usize)> {
    let t = m.len();
    let f = m.first().map_or(0, Vec::len);
    if m.iter().any(|r| r.len() != f) {
        return Err(Error::shape("feature matrix rows", f, "ragged rows"));
    }
    Ok((t, f))
}

fn flatten(m: &[Vec<f64>]) -> Vec<f64> {
    m.iter().flatten().copied().collect()
}

/// `q[t][f] = (M1[t][f], M2[t][f], M3[t][f], M4[t][f])`.
pub fn pack_quaternion_features(feats: [&[Vec<f64>]; 4], labels: Vec<usize>) -> Result<FeatureSequence> {
    let shape = check_matrix(feats[0])?;
    for m in &feats[1..] {
        let s = check_matrix(m)?;
        if s != shape {
            return Err(Error::shape("pack_quaternion_features", format!("{shape:?}"), format!("{s:?}")));
        }
    }
    check_labels(shape.0, &labels)?;
    let planes = feats.map(flatten);
    Ok(FeatureSequence {
        frames: QuaternionTensor::pack_components(&[shape.0, shape.1], planes)?,
        labels,
        provenance: Provenance::FourMic,
    })
}

fn check_labels(t: usize, labels: &[usize]) -> Result<()> {
    if labels.len() != t {
        return Err(Error::shape("frame labels", t, labels.len()));
    }
    Ok(())
}

/// All four components equal `feat`.
pub fn copied_mic_control(feat: &[Vec<f64>], labels: Vec<usize>) -> Result<FeatureSequence> {
    replicated(feat, labels, Provenance::CopiedMic)
}

/// Beamformed features in the copied replication pattern.
pub fn beamformed_features(feat: &[Vec<f64>], labels: Vec<usize>) -> Result<FeatureSequence> {
    replicated(feat, labels, Provenance::Beamformed)
}

fn replicated(feat: &[Vec<f64>], labels: Vec<usize>, provenance: Provenance) -> Result<FeatureSequence> {
    let (t, f) = check_matrix(feat)?;
    check_labels(t, &labels)?;
    let p = flatten(feat);
    Ok(FeatureSequence {
        frames: QuaternionTensor::pack_components(&[t, f], [p.clone(), p.clone(), p.clone(), p])?,
        labels,
        provenance,
    })
}

/// Inverse of [`pack_quaternion_features`].
pub fn unpack_quaternion_features(seq: &FeatureSequence) -> [Vec<Vec<f64>>; 4] {
    let f = seq.num_features();
    let planes = seq.frames.planes();
    [0, 1, 2, 3].map(|k| planes[k].chunks(f.max(1)).map(<[f64]>::to_vec).collect())
}

/// Per-column mean and standard deviation over `4F` columns (plane-major),
/// fitted on a training split and applied to every split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Normalizer {
    pub fn identity(features: usize) -> Self {
        Normalizer { mean: vec![0.0; 4 * features], std: vec![1.0; 4 * features] }
    }

    pub fn fit(data: &[FeatureSequence]) -> Result<Self> {
        let f = data.first().ok_or(Error::EmptySequence)?.num_features();
        let mut sum = vec![0.0; 4 * f];
        let mut sq = vec![0.0; 4 * f];
        let mut n = 0usize;
        for s in data {
            if s.num_features() != f {
                return Err(Error::shape("normalizer features", f, s.num_features()));
            }
            for (k, plane) in s.frames.planes().iter().enumerate() {
                for row in plane.chunks(f) {
                    for (j, v) in row.iter().enumerate() {
                        sum[k * f + j] += v;
                        sq[k * f + j] += v * v;
                    }
                }
            }
            n += s.num_frames();
        }
        if n == 0 {
            return Err(Error::EmptySequence);
        }
        let n = n as f64;
        let mean: Vec<f64> = sum.iter().map(|s| s / n).collect();
        let std = sq
            .iter()
            .zip(&mean)
            .map(|(q, m)| (q / n - m * m).max(0.0).sqrt().max(1e-8))
            .collect();
        Ok(Normalizer { mean, std })
    }

    pub fn apply(&self, s: &FeatureSequence) -> Result<FeatureSequence> {
        let f = s.num_features();
        if self.mean.len() != 4 * f {
            return Err(Error::shape("normalizer width", self.mean.len(), 4 * f));
        }
        let planes = [0, 1, 2, 3].map(|k| {
            s.frames.planes()[k]
                .iter()
                .enumerate()
                .map(|(i, v)| (v - self.mean[k * f + i % f]) / self.std[k * f + i % f])
                .collect()
        });
        Ok(FeatureSequence {
            frames: QuaternionTensor::pack_components(s.frames.shape(), planes)?,
            labels: s.labels.clone(),
            provenance: s.provenance,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn single_value_example() {
        let m = |v: f64| vec![vec![v]];
        let (a, b, c, d) = (m(1.0), m(2.0), m(3.0), m(4.0));
        let s = pack_quaternion_features([&a, &b, &c, &d], vec![0]).unwrap();
        assert_eq!(s.frames.get(0), Quaternion::new(1.0, 2.0, 3.0, 4.0));
        assert_eq!(s.provenance, Provenance::FourMic);
    }

    #[test]
    fn shape_mismatch_is_error() {
        let a = vec![vec![1.0, 2.0]];
        let b = vec![vec![1.0]];
        assert!(pack_quaternion_features([&a, &a, &a, &b], vec![0]).is_err());
        assert!(pack_quaternion_features([&a, &a, &a, &a], vec![0, 1]).is_err());
    }

    #[test]
    fn copied_matches_pack_of_same() {
        let m = vec![vec![0.5, -1.0], vec![2.0, 3.0]];
        let c = copied_mic_control(&m, vec![1, 0]).unwrap();
        let p = pack_quaternion_features([&m, &m, &m, &m], vec![1, 0]).unwrap();
        assert_eq!(c.frames, p.frames);
        assert_eq!(c.provenance, Provenance::CopiedMic);
        for q in c.frames.to_quaternions() {
            assert!(q.a == q.b && q.b == q.c && q.c == q.d);
        }
    }

    #[test]
    fn real_views() {
        let m = |v: f64| vec![vec![v, v + 0.5]];
        let (a, b, c, d) = (m(1.0), m(2.0), m(3.0), m(4.0));
        let s = pack_quaternion_features([&a, &b, &c, &d], vec![0]).unwrap();
        assert_eq!(s.real_sequence().frames[0], vec![1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 4.5]);
        let q = s.quaternion_sequence();
        assert_eq!(q.frames[0][1], Quaternion::new(1.5, 2.5, 3.5, 4.5));
        let c = copied_mic_control(&a, vec![0]).unwrap();
        assert_eq!(c.real_sequence().frames[0], vec![1.0, 1.5]);
        assert_eq!(c.real_width(), 2);
    }

    #[test]
    fn provenance_names_round_trip() {
        for p in Provenance::ALL {
            assert_eq!(p.name().parse::<Provenance>().unwrap(), p);
        }
        assert!("stereo".parse::<Provenance>().is_err());
    }

    #[test]
    fn normalizer_whitens_training_columns() {
        let a = vec![vec![1.0, 10.0], vec![3.0, 30.0]];
        let b = vec![vec![0.0, 5.0], vec![0.0, 7.0]];
        let s = pack_quaternion_features([&a, &b, &a, &b], vec![0, 1]).unwrap();
        let n = Normalizer::fit(std::slice::from_ref(&s)).unwrap();
        assert_eq!(n.mean, vec![2.0, 20.0, 0.0, 6.0, 2.0, 20.0, 0.0, 6.0]);
        let z = n.apply(&s).unwrap();
        let [za, zb, _, _] = unpack_quaternion_features(&z);
        assert_eq!(za, vec![vec![-1.0, -1.0], vec![1.0, 1.0]]);
        // Constant column: std floored, values centered to zero.
        assert_eq!(zb[0][0], 0.0);
        assert_eq!(n.apply(&s).unwrap(), Normalizer::identity(2).apply(&z).unwrap());
    }

    fn matrix(t: usize, f: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
        prop::collection::vec(prop::collection::vec(-1e3..1e3f64, f), t)
    }

    proptest! {
        #[test]
        fn pack_unpack_round_trip(
            (a, b, c, d) in (1usize..6, 1usize..5).prop_flat_map(|(t, f)| (matrix(t, f), matrix(t, f), matrix(t, f), matrix(t, f)))
        ) {
            let labels = vec![0; a.len()];
            let s = pack_quaternion_features([&a, &b, &c, &d], labels).unwrap();
            let [a2, b2, c2, d2] = unpack_quaternion_features(&s);
            prop_assert_eq!((a2, b2, c2, d2), (a.clone(), b.clone(), c.clone(), d.clone()));

            // Swapping mics 2 and 3 swaps components b and c.
            let labels = vec![0; a.len()];
            let s2 = pack_quaternion_features([&a, &c, &b, &d], labels).unwrap();
            for (q, r) in s.frames.to_quaternions().iter().zip(s2.frames.to_quaternions()) {
                prop_assert_eq!(*q, Quaternion::new(r.a, r.c, r.b, r.d));
            }
        }
    }
}
