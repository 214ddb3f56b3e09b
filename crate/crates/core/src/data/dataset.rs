//! Paired datasets in all three provenances and their on-disk container.
//!
//! A dataset directory holds:
//!
//! ```text
//! manifest.toml                 format tag, full config, scene seeds per split
//! {split}_{provenance}.bin      one array container per split and provenance
//! ```
//!
//! Each `.bin` file uses the named-array container (see [`crate::container`])
//! with a JSON header `{"split", "provenance", "items"}` and two arrays per
//! item `k` (zero-padded to five digits):
//!
//! ```text
//! item00000.features   planes 4, shape [T, F], plane-major a, b, c, d
//! item00000.labels     planes 1, shape [T], class indices stored as f64
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::beamform::delay_and_sum;
use super::fbank::{Fbank, FbankConfig};
use super::features::{beamformed_features, copied_mic_control, pack_quaternion_features, FeatureSequence, Provenance};
use super::scene::{synth_scene_with, ClassTemplates, SceneConfig, CHANNELS};
use crate::container::{Container, NamedArray};
use crate::error::{Error, Result};
use crate::train::mix_seed;

pub const MANIFEST: &str = "manifest.toml";
pub const FORMAT: &str = "qlstm-dataset/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Valid,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Valid, Split::Test];

    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Valid => "valid",
            Split::Test => "test",
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl std::str::FromStr for Split {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Split::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::invalid("split", format!("unknown split {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitSizes {
    pub train: usize,
    pub valid: usize,
    pub test: usize,
}

impl SplitSizes {
    pub fn get(&self, s: Split) -> usize {
        match s {
            Split::Train => self.train,
            Split::Valid => self.valid,
            Split::Test => self.test,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    pub seed: u64,
    pub sizes: SplitSizes,
    /// Microphone used by the copied control.
    pub copied_channel: usize,
    /// Reference microphone for beamforming.
    pub beam_ref_channel: usize,
    pub scene: SceneConfig,
    pub fbank: FbankConfig,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        let scene = SceneConfig::default();
        DatasetConfig {
            seed: 1,
            sizes: SplitSizes { train: 200, valid: 40, test: 80 },
            copied_channel: 0,
            beam_ref_channel: 0,
            fbank: FbankConfig { sample_rate: scene.sample_rate, ..FbankConfig::default() },
            scene,
        }
    }
}

impl DatasetConfig {
    pub fn validate(&self) -> Result<()> {
        self.scene.validate()?;
        self.fbank.validate()?;
        let f = &self.fbank;
        let s = self.scene.framing();
        if f.sample_rate != s.sample_rate || f.frame_len() != s.frame_len() || f.hop() != s.hop() {
            return Err(Error::Config(
                "fbank sample_rate/frame_len_ms/hop_ms must match the scene framing".into(),
            ));
        }
        if self.copied_channel >= CHANNELS || self.beam_ref_channel >= CHANNELS {
            return Err(Error::invalid("channel index", "must be 0..=3"));
        }
        if self.sizes.train == 0 || self.sizes.valid == 0 || self.sizes.test == 0 {
            return Err(Error::invalid("sizes", "every split needs at least one scene"));
        }
        if self.seed > i64::MAX as u64 {
            return Err(Error::invalid("seed", "must fit in a signed 64-bit integer"));
        }
        Ok(())
    }

    /// Scene seed of item `k` in `split`; kept below 2⁶³ for the manifest.
    pub fn scene_seed(&self, split: Split, k: usize) -> u64 {
        mix_seed(self.seed, split.index() as u64 + 1, k as u64) >> 1
    }
}

/// The three renderings of one scene.
#[derive(Debug, Clone, PartialEq)]
pub struct RenderedScene {
    pub four_mic: FeatureSequence,
    pub copied_mic: FeatureSequence,
    pub beamformed: FeatureSequence,
}

impl RenderedScene {
    pub fn get(&self, p: Provenance) -> &FeatureSequence {
        match p {
            Provenance::FourMic => &self.four_mic,
            Provenance::CopiedMic => &self.copied_mic,
            Provenance::Beamformed => &self.beamformed,
        }
    }
}

/// Featurizes one scene into every provenance.
pub struct Renderer {
    cfg: DatasetConfig,
    templates: ClassTemplates,
    fbank: Fbank,
}

impl Renderer {
    pub fn new(cfg: &DatasetConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Renderer {
            templates: ClassTemplates::new(&cfg.scene),
            fbank: Fbank::new(&cfg.fbank)?,
            cfg: cfg.clone(),
        })
    }

    pub fn render(&self, seed: u64) -> Result<RenderedScene> {
        let scene = synth_scene_with(&self.cfg.scene, &self.templates, seed)?;
        let feats = scene
            .channels
            .iter()
            .map(|c| self.fbank.compute(c))
            .collect::<Result<Vec<_>>>()?;
        let labels = scene.frame_labels.clone();
        let four_mic = pack_quaternion_features([&feats[0], &feats[1], &feats[2], &feats[3]], labels.clone())?;
        let copied_mic = copied_mic_control(&feats[self.cfg.copied_channel], labels.clone())?;
        let beam = delay_and_sum(&scene, self.cfg.beam_ref_channel, self.cfg.scene.max_delay)?;
        let beamformed = beamformed_features(&self.fbank.compute(&beam.signal)?, labels)?;
        Ok(RenderedScene { four_mic, copied_mic, beamformed })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub config: DatasetConfig,
    /// Scene seeds per split, indexed train, valid, test.
    pub seeds: [Vec<u64>; 3],
    /// `items[split][provenance]`, provenance in [`Provenance::ALL`] order.
    pub items: [[Vec<FeatureSequence>; 3]; 3],
}

fn provenance_index(p: Provenance) -> usize {
    Provenance::ALL.iter().position(|&q| q == p).unwrap()
}

impl Dataset {
    pub fn get(&self, split: Split, provenance: Provenance) -> &[FeatureSequence] {
        &self.items[split.index()][provenance_index(provenance)]
    }

    pub fn num_features(&self) -> usize {
        self.config.fbank.n_filters
    }

    pub fn num_classes(&self) -> usize {
        self.config.scene.num_classes
    }

    /// Writes the manifest and one container per split and provenance.
    pub fn write(&self, dir: &Path) -> Result<()> {
        if let Some(parent) = dir.parent() {
            if !parent.as_os_str().is_empty() && !parent.is_dir() {
                return Err(Error::io(
                    parent,
                    std::io::Error::new(std::io::ErrorKind::NotFound, "parent directory does not exist"),
                ));
            }
        }
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let manifest = Manifest {
            format: FORMAT.to_string(),
            config: self.config.clone(),
            splits: Split::ALL
                .iter()
                .map(|&s| ManifestSplit {
                    name: s,
                    count: self.seeds[s.index()].len(),
                    scene_seeds: self.seeds[s.index()].iter().map(|&v| v as i64).collect(),
                    files: Provenance::ALL.iter().map(|&p| file_name(s, p)).collect(),
                })
                .collect(),
        };
        let text = toml::to_string(&manifest).map_err(|e| Error::Config(e.to_string()))?;
        let path = dir.join(MANIFEST);
        fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        for s in Split::ALL {
            for p in Provenance::ALL {
                container_for(self.get(s, p), s, p).write(&dir.join(file_name(s, p)))?;
            }
        }
        Ok(())
    }

    pub fn read(dir: &Path) -> Result<Self> {
        let manifest = read_manifest(dir)?;
        let mut seeds: [Vec<u64>; 3] = Default::default();
        let mut items: [[Vec<FeatureSequence>; 3]; 3] = Default::default();
        for split in &manifest.splits {
            seeds[split.name.index()] = split.scene_seeds.iter().map(|&v| v as u64).collect();
            for p in Provenance::ALL {
                let path = dir.join(file_name(split.name, p));
                let c = Container::read(&path)?;
                let seqs = parse_container(&c, &path, p)?;
                if seqs.len() != split.count {
                    return Err(Error::format(&path, format!("{} items, manifest says {}", seqs.len(), split.count)));
                }
                items[split.name.index()][provenance_index(p)] = seqs;
            }
        }
        Ok(Dataset { config: manifest.config, seeds, items })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub format: String,
    pub config: DatasetConfig,
    pub splits: Vec<ManifestSplit>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestSplit {
    pub name: Split,
    pub count: usize,
    pub scene_seeds: Vec<i64>,
    pub files: Vec<String>,
}

pub fn read_manifest(dir: &Path) -> Result<Manifest> {
    let path = dir.join(MANIFEST);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let m: Manifest = toml::from_str(&text).map_err(|e| Error::format(&path, e.to_string()))?;
    if m.format != FORMAT {
        return Err(Error::format(&path, format!("unsupported format {:?}", m.format)));
    }
    Ok(m)
}

pub fn file_name(split: Split, provenance: Provenance) -> String {
    format!("{}_{}.bin", split.name(), provenance.name())
}

pub fn dataset_file(dir: &Path, split: Split, provenance: Provenance) -> PathBuf {
    dir.join(file_name(split, provenance))
}

fn container_for(seqs: &[FeatureSequence], split: Split, provenance: Provenance) -> Container {
    let header = serde_json::json!({
        "split": split.name(),
        "provenance": provenance.name(),
        "items": seqs.len(),
    })
    .to_string();
    let mut arrays = Vec::with_capacity(2 * seqs.len());
    for (k, s) in seqs.iter().enumerate() {
        arrays.push(NamedArray::from_quaternion_tensor(format!("item{k:05}.features"), &s.frames));
        arrays.push(NamedArray::real(
            format!("item{k:05}.labels"),
            &[s.labels.len()],
            s.labels.iter().map(|&y| y as f64).collect(),
        ));
    }
    Container { header, arrays }
}

fn parse_container(c: &Container, path: &Path, provenance: Provenance) -> Result<Vec<FeatureSequence>> {
    if c.arrays.len() % 2 != 0 {
        return Err(Error::format(path, "odd number of arrays"));
    }
    c.arrays
        .chunks(2)
        .map(|pair| {
            let frames = pair[0].to_quaternion_tensor()?;
            if frames.shape().len() != 2 || pair[1].planes != 1 || pair[1].shape != [frames.shape()[0]] {
                return Err(Error::format(path, format!("bad shapes for {}", pair[0].name)));
            }
            let labels = pair[1]
                .data
                .iter()
                .map(|&v| {
                    if v >= 0.0 && v.fract() == 0.0 {
                        Ok(v as usize)
                    } else {
                        Err(Error::format(path, format!("bad label {v}")))
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(FeatureSequence { frames, labels, provenance })
        })
        .collect()
}

/// Renders every split in every provenance. Pure in `cfg`.
pub fn build_dataset(cfg: &DatasetConfig) -> Result<Dataset> {
    let renderer = Renderer::new(cfg)?;
    let mut seeds: [Vec<u64>; 3] = Default::default();
    let mut items: [[Vec<FeatureSequence>; 3]; 3] = Default::default();
    for split in Split::ALL {
        for k in 0..cfg.sizes.get(split) {
            let seed = cfg.scene_seed(split, k);
            let r = renderer.render(seed)?;
            seeds[split.index()].push(seed);
            for p in Provenance::ALL {
                items[split.index()][provenance_index(p)].push(r.get(p).clone());
            }
        }
    }
    Ok(Dataset { config: cfg.clone(), seeds, items })
}
