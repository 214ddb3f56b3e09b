//! Synthetic multi-channel data: scenes, filterbank features, quaternion
//! packing, beamforming and dataset storage.

pub mod beamform;
pub mod dataset;
pub mod fbank;
pub mod features;
pub mod scene;

pub use beamform::{delay_and_sum, delay_and_sum_channels, estimate_delay, Beamformed};
pub use dataset::{build_dataset, Dataset, DatasetConfig, Renderer, Split, SplitSizes};
pub use fbank::{fbank, Fbank, FbankConfig, Window};
pub use features::{
    beamformed_features, copied_mic_control, pack_quaternion_features, unpack_quaternion_features,
    FeatureSequence, Normalizer, Provenance,
};
pub use scene::{synth_scene, MultiChannelScene, SceneConfig, CHANNELS};
