//! Vector-quantization image compression with index-domain watermarking.
//!
//! The pipeline: segment an image into square blocks, train a codebook on
//! them (self-organizing map, or LBG as the baseline), encode each block as
//! its nearest codeword index, and hide a binary watermark by rewriting the
//! member bit of keyed pseudorandom index positions within a pairing of the
//! codebook into most-similar-codeword divisions. The mark survives in both
//! the compressed index stream and the decoded image, and can be extracted
//! from either without the original.

pub mod attacks;
pub mod codebook;
pub mod error;
pub mod image;
pub mod metrics;
pub mod partition;
pub mod rng;
pub mod testimg;
pub mod vqcodec;
pub mod watermark;

pub use error::{Result, VqError};
