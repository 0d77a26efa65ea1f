//! Raster images, netpbm I/O, channel handling and block segmentation.
//!
//! Only binary PGM (P5) and PPM (P6) with maxval 255 are supported; that is
//! enough for every experiment and keeps parsing bit-exact and
//! dependency-free.

use std::fs;
use std::path::Path;

use crate::error::{Result, VqError};

/// 8-bit raster image, grayscale or RGB, row-major interleaved samples.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RasterImage {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub data: Vec<u8>,
}

/// A single 8-bit channel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Plane {
    pub width: usize,
    pub height: usize,
    pub data: Vec<u8>,
}

/// Non-overlapping `block_side`-square blocks of a plane, raster order,
/// each block flattened row-major into a real vector.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockGrid {
    pub block_side: usize,
    pub rows: usize,
    pub cols: usize,
    pub blocks: Vec<Vec<f64>>,
}

impl RasterImage {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<u8>) -> Result<Self> {
        if channels != 1 && channels != 3 {
            return Err(VqError::parameter(format!(
                "channels must be 1 or 3, got {channels}"
            )));
        }
        if data.len() != width * height * channels {
            return Err(VqError::dimension(format!(
                "image data length {} does not match {}x{}x{}",
                data.len(),
                width,
                height,
                channels
            )));
        }
        Ok(RasterImage {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, channels: usize, value: u8) -> Self {
        RasterImage::new(width, height, channels, vec![value; width * height * channels])
            .expect("valid fill dimensions")
    }

    pub fn sample(&self, x: usize, y: usize, channel: usize) -> u8 {
        self.data[(y * self.width + x) * self.channels + channel]
    }

    /// Edge-replicate the right and bottom borders so both dimensions become
    /// multiples of `block_side`. Identity when already divisible.
    pub fn pad_to_multiple(&self, block_side: usize) -> Result<RasterImage> {
        if block_side == 0 {
            return Err(VqError::parameter("block side must be positive"));
        }
        let new_w = self.width.div_ceil(block_side) * block_side;
        let new_h = self.height.div_ceil(block_side) * block_side;
        if new_w == self.width && new_h == self.height {
            return Ok(self.clone());
        }
        let mut data = vec![0u8; new_w * new_h * self.channels];
        for y in 0..new_h {
            let sy = y.min(self.height - 1);
            for x in 0..new_w {
                let sx = x.min(self.width - 1);
                for c in 0..self.channels {
                    data[(y * new_w + x) * self.channels + c] = self.sample(sx, sy, c);
                }
            }
        }
        RasterImage::new(new_w, new_h, self.channels, data)
    }
}

impl Plane {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if data.len() != width * height {
            return Err(VqError::dimension(format!(
                "plane data length {} does not match {}x{}",
                data.len(),
                width,
                height
            )));
        }
        Ok(Plane {
            width,
            height,
            data,
        })
    }

    pub fn pixel(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }
}

/// Round half-up, then clamp to the 8-bit sample range.
pub(crate) fn quantize_sample(value: f64) -> u8 {
    let rounded = (value + 0.5).floor();
    rounded.clamp(0.0, 255.0) as u8
}

// ---------------------------------------------------------------------------
// netpbm I/O
// ---------------------------------------------------------------------------

struct HeaderParser<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> HeaderParser<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        HeaderParser { bytes, pos: 0 }
    }

    /// Skip whitespace and `#` comment lines between header tokens.
    fn skip_separators(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b' ' | b'\t' | b'\r' | b'\n' | 0x0b | 0x0c => self.pos += 1,
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                _ => break,
            }
        }
    }

    fn read_unsigned(&mut self, what: &str) -> Result<usize> {
        self.skip_separators();
        let start = self.pos;
        let mut value: usize = 0;
        let mut digits = 0;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            value = value
                .checked_mul(10)
                .and_then(|v| v.checked_add((self.bytes[self.pos] - b'0') as usize))
                .ok_or_else(|| VqError::format(start, format!("{what} value overflows")))?;
            digits += 1;
            self.pos += 1;
        }
        if digits == 0 {
            return Err(VqError::format(
                self.pos,
                format!("expected {what}, found no digits"),
            ));
        }
        Ok(value)
    }

    /// Consume the single whitespace byte that separates the header from the
    /// binary payload.
    fn expect_payload_separator(&mut self) -> Result<()> {
        match self.bytes.get(self.pos) {
            Some(b' ' | b'\t' | b'\r' | b'\n') => {
                self.pos += 1;
                Ok(())
            }
            Some(_) => Err(VqError::format(
                self.pos,
                "expected single whitespace before payload",
            )),
            None => Err(VqError::format(self.pos, "file ends before payload")),
        }
    }
}

/// Load a binary PGM (P5) or PPM (P6) file with maxval 255.
pub fn load_image(path: impl AsRef<Path>) -> Result<RasterImage> {
    let bytes = fs::read(path)?;
    parse_netpbm(&bytes)
}

/// Parse netpbm bytes; split out from [`load_image`] so containers embedded
/// in other streams can reuse it.
pub fn parse_netpbm(bytes: &[u8]) -> Result<RasterImage> {
    if bytes.len() < 2 {
        return Err(VqError::format(0, "file too short for magic number"));
    }
    let channels = match &bytes[..2] {
        b"P5" => 1,
        b"P6" => 3,
        _ => {
            return Err(VqError::format(
                0,
                "unsupported magic number (binary P5/P6 required)",
            ))
        }
    };
    let mut parser = HeaderParser::new(bytes);
    parser.pos = 2;
    let width = parser.read_unsigned("width")?;
    let height = parser.read_unsigned("height")?;
    let maxval_offset = {
        parser.skip_separators();
        parser.pos
    };
    let maxval = parser.read_unsigned("maxval")?;
    if maxval != 255 {
        return Err(VqError::format(
            maxval_offset,
            format!("maxval must be 255, got {maxval}"),
        ));
    }
    parser.expect_payload_separator()?;
    let payload_start = parser.pos;
    let expected = width * height * channels;
    let available = bytes.len() - payload_start;
    if available < expected {
        return Err(VqError::format(
            bytes.len(),
            format!("payload truncated: expected {expected} bytes, found {available}"),
        ));
    }
    let data = bytes[payload_start..payload_start + expected].to_vec();
    RasterImage::new(width, height, channels, data)
}

/// Write a binary PGM/PPM file. `load_image` of the result reproduces the
/// image exactly.
pub fn save_image(img: &RasterImage, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, image_to_netpbm(img))?;
    Ok(())
}

pub fn image_to_netpbm(img: &RasterImage) -> Vec<u8> {
    let magic = if img.channels == 1 { "P5" } else { "P6" };
    let mut out = format!("{magic}\n{} {}\n255\n", img.width, img.height).into_bytes();
    out.extend_from_slice(&img.data);
    out
}

// ---------------------------------------------------------------------------
// Channels
// ---------------------------------------------------------------------------

pub fn extract_channel(img: &RasterImage, channel: usize) -> Result<Plane> {
    if channel >= img.channels {
        return Err(VqError::parameter(format!(
            "channel {channel} out of range for {}-channel image",
            img.channels
        )));
    }
    let mut data = Vec::with_capacity(img.width * img.height);
    data.extend(
        img.data
            .iter()
            .skip(channel)
            .step_by(img.channels)
            .copied(),
    );
    Plane::new(img.width, img.height, data)
}

pub fn replace_channel(img: &RasterImage, channel: usize, plane: &Plane) -> Result<RasterImage> {
    if channel >= img.channels {
        return Err(VqError::parameter(format!(
            "channel {channel} out of range for {}-channel image",
            img.channels
        )));
    }
    if plane.width != img.width || plane.height != img.height {
        return Err(VqError::dimension(format!(
            "plane is {}x{}, image is {}x{}",
            plane.width, plane.height, img.width, img.height
        )));
    }
    let mut out = img.clone();
    for (i, &v) in plane.data.iter().enumerate() {
        out.data[i * img.channels + channel] = v;
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Block segmentation
// ---------------------------------------------------------------------------

/// Segment a plane into non-overlapping square blocks in raster order.
/// Dimensions must be exact multiples of `block_side`; pad beforehand with
/// [`RasterImage::pad_to_multiple`] if needed.
pub fn to_blocks(plane: &Plane, block_side: usize) -> Result<BlockGrid> {
    if block_side == 0 {
        return Err(VqError::parameter("block side must be positive"));
    }
    if plane.width % block_side != 0 || plane.height % block_side != 0 {
        return Err(VqError::dimension(format!(
            "plane {}x{} not divisible by block side {}",
            plane.width, plane.height, block_side
        )));
    }
    let rows = plane.height / block_side;
    let cols = plane.width / block_side;
    let mut blocks = Vec::with_capacity(rows * cols);
    for br in 0..rows {
        for bc in 0..cols {
            let mut block = Vec::with_capacity(block_side * block_side);
            for dy in 0..block_side {
                let y = br * block_side + dy;
                let row_base = y * plane.width + bc * block_side;
                for dx in 0..block_side {
                    block.push(plane.data[row_base + dx] as f64);
                }
            }
            blocks.push(block);
        }
    }
    Ok(BlockGrid {
        block_side,
        rows,
        cols,
        blocks,
    })
}

/// Reassemble a plane from a block grid, rounding half-up and clamping each
/// sample to `[0, 255]`.
pub fn from_blocks(grid: &BlockGrid) -> Result<Plane> {
    let a = grid.block_side;
    if grid.blocks.len() != grid.rows * grid.cols {
        return Err(VqError::dimension(format!(
            "grid holds {} blocks, expected {}",
            grid.blocks.len(),
            grid.rows * grid.cols
        )));
    }
    let width = grid.cols * a;
    let height = grid.rows * a;
    let mut data = vec![0u8; width * height];
    for (bi, block) in grid.blocks.iter().enumerate() {
        if block.len() != a * a {
            return Err(VqError::dimension(format!(
                "block {bi} has {} elements, expected {}",
                block.len(),
                a * a
            )));
        }
        let br = bi / grid.cols;
        let bc = bi % grid.cols;
        for dy in 0..a {
            let y = br * a + dy;
            for dx in 0..a {
                data[y * width + bc * a + dx] = quantize_sample(block[dy * a + dx]);
            }
        }
    }
    Plane::new(width, height, data)
}
