//! Phoneme-level audio blending for mispronunciation data augmentation.

pub mod align;
pub mod audio;
pub mod blender;
pub mod closedict;
pub mod error;
pub mod gopfeat;
pub mod mask;
pub mod pipeline;

pub use error::{Error, Result};
