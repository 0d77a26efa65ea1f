//! Deterministic synthetic test imagery: multi-octave value noise for
//! natural-looking hosts and a geometric logo bitmap for watermark demos.
//! Everything is a pure function of the seed, so experiments reproduce
//! exactly without shipping binary assets.

use crate::image::{quantize_sample, RasterImage};
use crate::rng::XorShift64Star;
use crate::watermark::Watermark;

/// Smoothstep fade for interpolation between lattice points.
fn fade(t: f64) -> f64 {
    t * t * (3.0 - 2.0 * t)
}

/// One octave of value noise in [0,1]: a random lattice with `period`-pixel
/// spacing, smoothly interpolated.
fn value_noise(width: usize, height: usize, period: usize, rng: &mut XorShift64Star) -> Vec<f64> {
    let gw = width / period + 2;
    let gh = height / period + 2;
    let lattice: Vec<f64> = (0..gw * gh).map(|_| rng.next_f64()).collect();
    let mut out = vec![0.0; width * height];
    let inv = 1.0 / period as f64;
    for y in 0..height {
        let fy = y as f64 * inv;
        let y0 = fy as usize;
        let ty = fade(fy - y0 as f64);
        for x in 0..width {
            let fx = x as f64 * inv;
            let x0 = fx as usize;
            let tx = fade(fx - x0 as f64);
            let v00 = lattice[y0 * gw + x0];
            let v10 = lattice[y0 * gw + x0 + 1];
            let v01 = lattice[(y0 + 1) * gw + x0];
            let v11 = lattice[(y0 + 1) * gw + x0 + 1];
            let top = v00 + (v10 - v00) * tx;
            let bottom = v01 + (v11 - v01) * tx;
            out[y * width + x] = top + (bottom - top) * ty;
        }
    }
    out
}

/// Octave periods and amplitudes for the default host texture: dominated by
/// broad smooth structure with mild finer detail, similar in block
/// statistics to photographic material.
const NATURAL_OCTAVES: [(usize, f64); 3] = [(64, 1.0), (32, 0.35), (16, 0.1)];

/// Octaves for the low-detail preset: broad fields only, the kind of
/// content that compresses well at small codebook sizes.
const SMOOTH_OCTAVES: [(usize, f64); 2] = [(128, 1.0), (64, 0.25)];

/// Deterministic test image from layered smooth value noise with a contrast
/// stretch about mid-gray.
pub fn synthetic_textured(
    width: usize,
    height: usize,
    channels: usize,
    seed: u64,
    octaves: &[(usize, f64)],
    contrast: f64,
) -> RasterImage {
    assert!(channels == 1 || channels == 3);
    let mut data = vec![0u8; width * height * channels];
    for c in 0..channels {
        let mut field = vec![0.0; width * height];
        let mut total_amp = 0.0;
        for (oi, &(period, amp)) in octaves.iter().enumerate() {
            let mut rng = XorShift64Star::new(
                seed ^ (c as u64).wrapping_mul(0x9E37_79B9) ^ ((oi as u64) << 32),
            );
            let noise = value_noise(width, height, period.min(width.max(8)), &mut rng);
            for (f, n) in field.iter_mut().zip(noise.iter()) {
                *f += amp * n;
            }
            total_amp += amp;
        }
        for (i, f) in field.iter().enumerate() {
            let centered = (f / total_amp - 0.5) * contrast + 0.5;
            data[i * channels + c] = quantize_sample(centered * 255.0);
        }
    }
    RasterImage::new(width, height, channels, data).expect("valid synthetic dimensions")
}

/// Natural-looking test image: moderate texture across three octaves.
pub fn synthetic_natural(width: usize, height: usize, channels: usize, seed: u64) -> RasterImage {
    synthetic_textured(width, height, channels, seed, &NATURAL_OCTAVES, 1.9)
}

/// Low-detail test image: broad smooth fields, no fine octave.
pub fn synthetic_smooth(width: usize, height: usize, channels: usize, seed: u64) -> RasterImage {
    synthetic_textured(width, height, channels, seed, &SMOOTH_OCTAVES, 1.9)
}

/// A legible binary logo: thick ring plus diagonal bar, usable at any side
/// length from 8 up.
pub fn demo_watermark(side: usize) -> Watermark {
    let mut bits = vec![0u8; side * side];
    let center = (side as f64 - 1.0) / 2.0;
    let outer = side as f64 * 0.42;
    let inner = side as f64 * 0.26;
    let bar = (side as f64 * 0.08).max(1.0);
    for y in 0..side {
        for x in 0..side {
            let dx = x as f64 - center;
            let dy = y as f64 - center;
            let r = (dx * dx + dy * dy).sqrt();
            let in_ring = r <= outer && r >= inner;
            let in_bar = (dx + dy).abs() <= bar && r <= outer;
            if in_ring || in_bar {
                bits[y * side + x] = 1;
            }
        }
    }
    Watermark::new(side, bits).expect("square logo")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generator_is_deterministic_and_varied() {
        let a = synthetic_natural(64, 48, 3, 7);
        let b = synthetic_natural(64, 48, 3, 7);
        assert_eq!(a, b);
        let c = synthetic_natural(64, 48, 3, 8);
        assert_ne!(a, c);

        // Spread over a reasonable range, not a constant field.
        let lo = *a.data.iter().min().unwrap();
        let hi = *a.data.iter().max().unwrap();
        assert!(hi - lo > 100, "range only {}..{}", lo, hi);
    }

    #[test]
    fn logo_has_both_values_and_structure() {
        let wm = demo_watermark(64);
        let ones = wm.bits.iter().filter(|&&b| b == 1).count();
        assert!(ones > 64 * 64 / 10, "logo too sparse: {ones}");
        assert!(ones < 64 * 64 * 9 / 10, "logo too dense: {ones}");
    }
}
