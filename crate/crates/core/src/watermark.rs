//! Watermark embedding into the index stream and extraction from either the
//! compressed indices or a decoded image.
//!
//! Embedding rewrites the member bit of keyed pseudorandom positions in the
//! first channel's index grid: each marked index is replaced by the member
//! of its own division that carries the watermark bit, so the perturbation
//! per block is bounded by the distance between division siblings.

use crate::codebook::Codebook;
use crate::error::{Result, VqError};
use crate::image::{extract_channel, Plane, RasterImage};
use crate::partition::PartitionedCodebook;
use crate::rng::XorShift64Star;
use crate::vqcodec::{encode_plane, EncodedImage};

/// Square binary bitmap, raster order, one byte per bit (0 or 1).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Watermark {
    pub side: usize,
    pub bits: Vec<u8>,
}

impl Watermark {
    pub fn new(side: usize, bits: Vec<u8>) -> Result<Self> {
        if bits.len() != side * side {
            return Err(VqError::dimension(format!(
                "watermark bits length {} does not match side {side}",
                bits.len()
            )));
        }
        if bits.iter().any(|&b| b > 1) {
            return Err(VqError::parameter("watermark bits must be 0 or 1"));
        }
        Ok(Watermark { side, bits })
    }

    /// Threshold a grayscale plane: sample >= 128 becomes bit 1.
    pub fn from_plane(plane: &Plane) -> Result<Self> {
        if plane.width != plane.height {
            return Err(VqError::dimension(format!(
                "watermark bitmap must be square, got {}x{}",
                plane.width, plane.height
            )));
        }
        let bits = plane.data.iter().map(|&v| (v >= 128) as u8).collect();
        Watermark::new(plane.width, bits)
    }

    pub fn from_image(img: &RasterImage) -> Result<Self> {
        if img.channels != 1 {
            return Err(VqError::parameter(
                "watermark bitmap must be a single-channel image",
            ));
        }
        Self::from_plane(&extract_channel(img, 0)?)
    }

    /// Render bits as a 0/255 grayscale image.
    pub fn to_image(&self) -> RasterImage {
        let data = self.bits.iter().map(|&b| if b == 1 { 255 } else { 0 }).collect();
        RasterImage::new(self.side, self.side, 1, data).expect("square bitmap")
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }
}

/// The secret embedding key; seeds the position-selection generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EmbedKey(pub u64);

/// Distinct positions into the index grid, one per watermark bit, in
/// watermark raster order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PositionSelection {
    pub positions: Vec<usize>,
}

/// Keyed selection of `bit_count` distinct grid positions via a partial
/// Fisher-Yates shuffle of `[0, total_blocks)`.
pub fn select_positions(
    key: EmbedKey,
    total_blocks: usize,
    bit_count: usize,
) -> Result<PositionSelection> {
    if bit_count > total_blocks {
        return Err(VqError::Capacity {
            needed: bit_count,
            available: total_blocks,
        });
    }
    let mut rng = XorShift64Star::new(key.0);
    Ok(PositionSelection {
        positions: rng.sample_indices(total_blocks, bit_count),
    })
}

fn check_partition_matches(enc_hash: u64, pc: &PartitionedCodebook) -> Result<()> {
    if enc_hash != pc.codebook_hash {
        return Err(VqError::CodebookMismatch {
            expected: enc_hash,
            actual: pc.codebook_hash,
        });
    }
    Ok(())
}

/// Embed a watermark into the first channel's indices. All other indices and
/// channels pass through untouched.
pub fn embed(
    enc: &EncodedImage,
    pc: &PartitionedCodebook,
    wm: &Watermark,
    key: EmbedKey,
) -> Result<EncodedImage> {
    check_partition_matches(enc.codebook_hash, pc)?;
    let total = enc.blocks_per_channel();
    let selection = select_positions(key, total, wm.len())?;
    let mut out = enc.clone();
    let channel = &mut out.indices[0];
    for (bit, &pos) in wm.bits.iter().zip(selection.positions.iter()) {
        let current = channel[pos] as usize;
        let (division, _) = pc.index_to_code(current)?;
        channel[pos] = pc.code_to_index(division, *bit)?;
    }
    Ok(out)
}

/// Read the watermark back from compressed indices: the bit at each selected
/// position is the member bit of that position's index.
pub fn extract_from_indices(
    enc: &EncodedImage,
    pc: &PartitionedCodebook,
    key: EmbedKey,
    side: usize,
) -> Result<Watermark> {
    check_partition_matches(enc.codebook_hash, pc)?;
    let total = enc.blocks_per_channel();
    let selection = select_positions(key, total, side * side)?;
    let channel = &enc.indices[0];
    let mut bits = Vec::with_capacity(side * side);
    for &pos in &selection.positions {
        let (_, bit) = pc.index_to_code(channel[pos] as usize)?;
        bits.push(bit);
    }
    Watermark::new(side, bits)
}

/// Extract from a decoded (possibly attacked) image: re-encode the first
/// channel against the full codebook, then read member bits as in
/// [`extract_from_indices`].
pub fn extract_from_image(
    img: &RasterImage,
    codebook: &Codebook,
    pc: &PartitionedCodebook,
    key: EmbedKey,
    side: usize,
) -> Result<Watermark> {
    check_partition_matches(codebook.content_hash(), pc)?;
    let plane = extract_channel(img, 0)?;
    let indices = encode_plane(&plane, codebook)?;
    let total = indices.len();
    let selection = select_positions(key, total, side * side)?;
    let mut bits = Vec::with_capacity(side * side);
    for &pos in &selection.positions {
        let (_, bit) = pc.index_to_code(indices[pos] as usize)?;
        bits.push(bit);
    }
    Watermark::new(side, bits)
}
