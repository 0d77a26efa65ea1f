//! The attack battery: deterministic image-processing operations applied to
//! decoded watermarked images to measure robustness.
//!
//! All filters work per channel with replicate-padded borders. Noise attacks
//! are seeded and reproducible. Parameters are serializable as JSON
//! `{kind, params, seed}` objects so evaluation reports pin down exactly
//! what ran.

use serde::{Deserialize, Serialize};

use crate::error::{Result, VqError};
use crate::image::{quantize_sample, RasterImage};
use crate::rng::XorShift64Star;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum AttackKind {
    Wiener,
    Median,
    GaussianFilter,
    Sharpen,
    Blur,
    SaltPepper,
    GaussianNoise,
    CropQuarter,
    CropBorder,
    Intercept,
    Enhance,
    JpegLike,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CropFill {
    White,
    Black,
    /// Restore the region from a reference image (the unmarked original).
    Original,
}

/// Kind-specific knobs; unused fields are ignored by the kinds that do not
/// read them. Every knob has a pinned default so suites stay terse.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttackParams {
    /// Square window side for wiener/median; odd, default 3.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window: Option<usize>,
    /// Gaussian sigma for gaussianFilter (0.5), sharpen (1.0), blur (2.0),
    /// and the noise sigma for gaussianNoise (8.0).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    /// Unsharp-mask strength, default 1.0.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub amount: Option<f64>,
    /// Impulse fraction for saltPepper, default 0.05.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub density: Option<f64>,
    /// Quadrant fill for cropQuarter, default white.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fill: Option<CropFill>,
    /// Border width for cropBorder, default 25.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub width: Option<usize>,
    /// Fill value for intercept, default 128.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gray: Option<u8>,
    /// Quantization step for jpegLike, default 64.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
}

impl AttackParams {
    fn is_default(&self) -> bool {
        *self == AttackParams::default()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttackSpec {
    pub kind: AttackKind,
    #[serde(default, skip_serializing_if = "AttackParams::is_default")]
    pub params: AttackParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl AttackSpec {
    pub fn new(kind: AttackKind) -> Self {
        AttackSpec {
            kind,
            params: AttackParams::default(),
            seed: None,
        }
    }

    pub fn from_json(json: &str) -> Result<Self> {
        serde_json::from_str(json).map_err(|e| VqError::parameter(format!("bad attack spec: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("attack spec serializes")
    }

    /// Compact human-readable label for report tables.
    pub fn label(&self) -> String {
        let p = &self.params;
        match self.kind {
            AttackKind::Wiener => format!("wiener({0}x{0})", p.window.unwrap_or(3)),
            AttackKind::Median => format!("median({0}x{0})", p.window.unwrap_or(3)),
            AttackKind::GaussianFilter => {
                format!("gaussianFilter(sigma={})", p.sigma.unwrap_or(0.5))
            }
            AttackKind::Sharpen => format!("sharpen(amount={})", p.amount.unwrap_or(1.0)),
            AttackKind::Blur => format!("blur(sigma={})", p.sigma.unwrap_or(2.0)),
            AttackKind::SaltPepper => {
                format!("saltPepper(density={})", p.density.unwrap_or(0.05))
            }
            AttackKind::GaussianNoise => {
                format!("gaussianNoise(sigma={})", p.sigma.unwrap_or(8.0))
            }
            AttackKind::CropQuarter => {
                let fill = match p.fill.unwrap_or(CropFill::White) {
                    CropFill::White => "white",
                    CropFill::Black => "black",
                    CropFill::Original => "original",
                };
                format!("cropQuarter(fill={fill})")
            }
            AttackKind::CropBorder => format!("cropBorder(width={})", p.width.unwrap_or(25)),
            AttackKind::Intercept => format!("intercept(gray={})", p.gray.unwrap_or(128)),
            AttackKind::Enhance => "enhance".to_string(),
            AttackKind::JpegLike => format!("jpegLike(q={})", p.q.unwrap_or(64.0)),
        }
    }
}

/// Apply one attack. `reference` supplies the unmarked original for
/// `cropQuarter` with `fill: original`; it is ignored otherwise.
pub fn apply_attack(
    img: &RasterImage,
    spec: &AttackSpec,
    reference: Option<&RasterImage>,
) -> Result<RasterImage> {
    let p = &spec.params;
    match spec.kind {
        AttackKind::Wiener => wiener_filter(img, odd_window(p.window)?),
        AttackKind::Median => median_filter(img, odd_window(p.window)?),
        AttackKind::GaussianFilter => Ok(gaussian_filter(img, p.sigma.unwrap_or(0.5), 1)),
        AttackKind::Sharpen => {
            let sigma = p.sigma.unwrap_or(1.0);
            Ok(sharpen(img, p.amount.unwrap_or(1.0), sigma))
        }
        AttackKind::Blur => {
            let sigma = p.sigma.unwrap_or(2.0);
            let radius = (3.0 * sigma).ceil() as usize;
            Ok(gaussian_filter(img, sigma, radius.max(1)))
        }
        AttackKind::SaltPepper => {
            let density = p.density.unwrap_or(0.05);
            if !(0.0..=1.0).contains(&density) {
                return Err(VqError::parameter(format!(
                    "saltPepper density must be in [0,1], got {density}"
                )));
            }
            salt_pepper(img, density, require_seed(spec)?)
        }
        AttackKind::GaussianNoise => {
            let sigma = p.sigma.unwrap_or(8.0);
            if sigma < 0.0 {
                return Err(VqError::parameter("noise sigma must be non-negative"));
            }
            gaussian_noise(img, sigma, require_seed(spec)?)
        }
        AttackKind::CropQuarter => crop_quarter(img, p.fill.unwrap_or(CropFill::White), reference),
        AttackKind::CropBorder => Ok(crop_border(img, p.width.unwrap_or(25))),
        AttackKind::Intercept => Ok(intercept(img, p.gray.unwrap_or(128))),
        AttackKind::Enhance => Ok(equalize(img)),
        AttackKind::JpegLike => {
            let q = p.q.unwrap_or(64.0);
            if !(q > 0.0) {
                return Err(VqError::parameter(format!(
                    "jpegLike quantization step must be positive, got {q}"
                )));
            }
            Ok(jpeg_like(img, q))
        }
    }
}

fn odd_window(window: Option<usize>) -> Result<usize> {
    let n = window.unwrap_or(3);
    if n == 0 || n % 2 == 0 {
        return Err(VqError::parameter(format!(
            "filter window must be odd and positive, got {n}"
        )));
    }
    Ok(n)
}

fn require_seed(spec: &AttackSpec) -> Result<u64> {
    spec.seed
        .ok_or_else(|| VqError::parameter(format!("{} requires a seed", spec.label())))
}

// ---------------------------------------------------------------------------
// Channel plumbing
// ---------------------------------------------------------------------------

fn channel_f64(img: &RasterImage, c: usize) -> Vec<f64> {
    img.data
        .iter()
        .skip(c)
        .step_by(img.channels)
        .map(|&v| v as f64)
        .collect()
}

fn rebuild(img: &RasterImage, channels: Vec<Vec<f64>>) -> RasterImage {
    let mut data = vec![0u8; img.data.len()];
    for (c, plane) in channels.iter().enumerate() {
        for (i, &v) in plane.iter().enumerate() {
            data[i * img.channels + c] = quantize_sample(v);
        }
    }
    RasterImage::new(img.width, img.height, img.channels, data).expect("same dimensions")
}

fn per_channel(img: &RasterImage, f: impl Fn(&[f64], usize, usize) -> Vec<f64>) -> RasterImage {
    let planes = (0..img.channels)
        .map(|c| f(&channel_f64(img, c), img.width, img.height))
        .collect();
    rebuild(img, planes)
}

/// Replicate-padded sample.
fn at(plane: &[f64], w: usize, h: usize, x: isize, y: isize) -> f64 {
    let xi = x.clamp(0, w as isize - 1) as usize;
    let yi = y.clamp(0, h as isize - 1) as usize;
    plane[yi * w + xi]
}

// ---------------------------------------------------------------------------
// Filters
// ---------------------------------------------------------------------------

fn wiener_filter(img: &RasterImage, window: usize) -> Result<RasterImage> {
    let r = (window / 2) as isize;
    let area = (window * window) as f64;
    Ok(per_channel(img, |plane, w, h| {
        let mut mean = vec![0.0; w * h];
        let mut var = vec![0.0; w * h];
        for y in 0..h {
            for x in 0..w {
                let mut sum = 0.0;
                let mut sq = 0.0;
                for dy in -r..=r {
                    for dx in -r..=r {
                        let v = at(plane, w, h, x as isize + dx, y as isize + dy);
                        sum += v;
                        sq += v * v;
                    }
                }
                let m = sum / area;
                mean[y * w + x] = m;
                var[y * w + x] = (sq / area - m * m).max(0.0);
            }
        }
        // Noise power estimate: mean of the local variances.
        let noise = var.iter().sum::<f64>() / var.len() as f64;
        plane
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let denom = var[i].max(noise);
                if denom > 0.0 {
                    mean[i] + (var[i] - noise).max(0.0) / denom * (x - mean[i])
                } else {
                    mean[i]
                }
            })
            .collect()
    }))
}

fn median_filter(img: &RasterImage, window: usize) -> Result<RasterImage> {
    let r = (window / 2) as isize;
    Ok(per_channel(img, |plane, w, h| {
        let mut out = vec![0.0; w * h];
        let mut buf = Vec::with_capacity(window * window);
        for y in 0..h {
            for x in 0..w {
                buf.clear();
                for dy in -r..=r {
                    for dx in -r..=r {
                        buf.push(at(plane, w, h, x as isize + dx, y as isize + dy));
                    }
                }
                buf.sort_by(|a, b| a.partial_cmp(b).unwrap());
                out[y * w + x] = buf[buf.len() / 2];
            }
        }
        out
    }))
}

fn gaussian_kernel(sigma: f64, radius: usize) -> Vec<f64> {
    let mut kernel: Vec<f64> = (-(radius as isize)..=radius as isize)
        .map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let total: f64 = kernel.iter().sum();
    for k in kernel.iter_mut() {
        *k /= total;
    }
    kernel
}

fn convolve_separable(plane: &[f64], w: usize, h: usize, kernel: &[f64]) -> Vec<f64> {
    let r = (kernel.len() / 2) as isize;
    let mut tmp = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (k, &kv) in kernel.iter().enumerate() {
                acc += kv * at(plane, w, h, x as isize + k as isize - r, y as isize);
            }
            tmp[y * w + x] = acc;
        }
    }
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (k, &kv) in kernel.iter().enumerate() {
                acc += kv * at(&tmp, w, h, x as isize, y as isize + k as isize - r);
            }
            out[y * w + x] = acc;
        }
    }
    out
}

fn gaussian_filter(img: &RasterImage, sigma: f64, radius: usize) -> RasterImage {
    let kernel = gaussian_kernel(sigma, radius);
    per_channel(img, |plane, w, h| convolve_separable(plane, w, h, &kernel))
}

fn sharpen(img: &RasterImage, amount: f64, sigma: f64) -> RasterImage {
    let radius = (3.0 * sigma).ceil() as usize;
    let kernel = gaussian_kernel(sigma, radius.max(1));
    per_channel(img, |plane, w, h| {
        let blurred = convolve_separable(plane, w, h, &kernel);
        plane
            .iter()
            .zip(blurred.iter())
            .map(|(&x, &b)| x + amount * (x - b))
            .collect()
    })
}

// ---------------------------------------------------------------------------
// Noise
// ---------------------------------------------------------------------------

fn salt_pepper(img: &RasterImage, density: f64, seed: u64) -> Result<RasterImage> {
    let mut rng = XorShift64Star::new(seed);
    let mut out = img.clone();
    for pixel in 0..img.width * img.height {
        if rng.next_f64() < density {
            let value = if rng.next_u64() & 1 == 1 { 255 } else { 0 };
            for c in 0..img.channels {
                out.data[pixel * img.channels + c] = value;
            }
        }
    }
    Ok(out)
}

fn gaussian_noise(img: &RasterImage, sigma: f64, seed: u64) -> Result<RasterImage> {
    let mut rng = XorShift64Star::new(seed);
    let mut out = img.clone();
    for v in out.data.iter_mut() {
        *v = quantize_sample(*v as f64 + sigma * rng.next_gaussian());
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Region attacks
// ---------------------------------------------------------------------------

fn crop_quarter(
    img: &RasterImage,
    fill: CropFill,
    reference: Option<&RasterImage>,
) -> Result<RasterImage> {
    let mut out = img.clone();
    let qw = img.width / 2;
    let qh = img.height / 2;
    match fill {
        CropFill::White | CropFill::Black => {
            let value = if matches!(fill, CropFill::White) { 255 } else { 0 };
            for y in 0..qh {
                for x in 0..qw {
                    for c in 0..img.channels {
                        out.data[(y * img.width + x) * img.channels + c] = value;
                    }
                }
            }
        }
        CropFill::Original => {
            let original = reference.ok_or_else(|| {
                VqError::parameter("cropQuarter with fill=original needs a reference image")
            })?;
            if original.width != img.width
                || original.height != img.height
                || original.channels != img.channels
            {
                return Err(VqError::dimension(
                    "reference image dimensions differ from attacked image",
                ));
            }
            for y in 0..qh {
                for x in 0..qw {
                    for c in 0..img.channels {
                        let i = (y * img.width + x) * img.channels + c;
                        out.data[i] = original.data[i];
                    }
                }
            }
        }
    }
    Ok(out)
}

fn crop_border(img: &RasterImage, border: usize) -> RasterImage {
    let mut out = img.clone();
    for y in 0..img.height {
        for x in 0..img.width {
            let in_border = x < border
                || y < border
                || x >= img.width.saturating_sub(border)
                || y >= img.height.saturating_sub(border);
            if in_border {
                for c in 0..img.channels {
                    out.data[(y * img.width + x) * img.channels + c] = 0;
                }
            }
        }
    }
    out
}

/// Replace a centered rectangle of half the image area (side scale 1/sqrt(2)
/// per axis) with a constant gray.
fn intercept(img: &RasterImage, gray: u8) -> RasterImage {
    let rw = (img.width as f64 * std::f64::consts::FRAC_1_SQRT_2).round() as usize;
    let rh = (img.height as f64 * std::f64::consts::FRAC_1_SQRT_2).round() as usize;
    let x0 = (img.width - rw) / 2;
    let y0 = (img.height - rh) / 2;
    let mut out = img.clone();
    for y in y0..y0 + rh {
        for x in x0..x0 + rw {
            for c in 0..img.channels {
                out.data[(y * img.width + x) * img.channels + c] = gray;
            }
        }
    }
    out
}

/// Global histogram equalization, each channel independently.
fn equalize(img: &RasterImage) -> RasterImage {
    let total = img.width * img.height;
    let mut out = img.clone();
    for c in 0..img.channels {
        let mut hist = [0usize; 256];
        for i in 0..total {
            hist[img.data[i * img.channels + c] as usize] += 1;
        }
        let mut cdf = [0usize; 256];
        let mut running = 0;
        for v in 0..256 {
            running += hist[v];
            cdf[v] = running;
        }
        let cdf_min = cdf
            .iter()
            .copied()
            .find(|&v| v > 0)
            .unwrap_or(0);
        let denom = total - cdf_min;
        if denom == 0 {
            continue; // constant channel, nothing to spread
        }
        let mut map = [0u8; 256];
        for v in 0..256 {
            map[v] = quantize_sample(cdf[v].saturating_sub(cdf_min) as f64 * 255.0 / denom as f64);
        }
        for i in 0..total {
            let idx = i * img.channels + c;
            out.data[idx] = map[img.data[idx] as usize];
        }
    }
    out
}

// ---------------------------------------------------------------------------
// DCT quantization
// ---------------------------------------------------------------------------

const DCT_N: usize = 8;

fn dct_basis() -> [[f64; DCT_N]; DCT_N] {
    let mut basis = [[0.0; DCT_N]; DCT_N];
    for (k, row) in basis.iter_mut().enumerate() {
        let alpha = if k == 0 {
            (1.0 / DCT_N as f64).sqrt()
        } else {
            (2.0 / DCT_N as f64).sqrt()
        };
        for (n, v) in row.iter_mut().enumerate() {
            *v = alpha
                * (std::f64::consts::PI * (2.0 * n as f64 + 1.0) * k as f64
                    / (2.0 * DCT_N as f64))
                    .cos();
        }
    }
    basis
}

/// Orthonormal 8x8 DCT, uniform scalar quantization with step `q`,
/// inverse transform. Dimensions not divisible by 8 are replicate-padded
/// for the transform and cropped back.
fn jpeg_like(img: &RasterImage, q: f64) -> RasterImage {
    let basis = dct_basis();
    per_channel(img, |plane, w, h| {
        let pw = w.div_ceil(DCT_N) * DCT_N;
        let ph = h.div_ceil(DCT_N) * DCT_N;
        let mut padded = vec![0.0; pw * ph];
        for y in 0..ph {
            for x in 0..pw {
                padded[y * pw + x] = at(plane, w, h, x as isize, y as isize);
            }
        }
        let mut block = [[0.0f64; DCT_N]; DCT_N];
        let mut tmp = [[0.0f64; DCT_N]; DCT_N];
        for by in (0..ph).step_by(DCT_N) {
            for bx in (0..pw).step_by(DCT_N) {
                for (r, row) in block.iter_mut().enumerate() {
                    for (c, v) in row.iter_mut().enumerate() {
                        *v = padded[(by + r) * pw + bx + c];
                    }
                }
                // coeff = B * X * B^T
                for r in 0..DCT_N {
                    for c in 0..DCT_N {
                        tmp[r][c] = (0..DCT_N).map(|n| basis[c][n] * block[r][n]).sum();
                    }
                }
                for r in 0..DCT_N {
                    for c in 0..DCT_N {
                        let coeff: f64 = (0..DCT_N).map(|n| basis[r][n] * tmp[n][c]).sum();
                        block[r][c] = (coeff / q).round() * q;
                    }
                }
                // X = B^T * Y * B
                for r in 0..DCT_N {
                    for c in 0..DCT_N {
                        tmp[r][c] = (0..DCT_N).map(|k| basis[k][c] * block[r][k]).sum();
                    }
                }
                for r in 0..DCT_N {
                    for c in 0..DCT_N {
                        let value: f64 = (0..DCT_N).map(|k| basis[k][r] * tmp[k][c]).sum();
                        padded[(by + r) * pw + bx + c] = value;
                    }
                }
            }
        }
        let mut out = vec![0.0; w * h];
        for y in 0..h {
            for x in 0..w {
                out[y * w + x] = padded[y * pw + x];
            }
        }
        out
    })
}
