//! Image- and watermark-quality measures: PSNR, normalized correlation,
//! bit-correct rate, mean absolute bit error, and rate accounting.

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Result, VqError};
use crate::image::RasterImage;
use crate::watermark::Watermark;

/// One row of quality figures. `psnr_db` may be infinite (identical images);
/// it serializes as the string "inf" in that case since JSON has no
/// infinity literal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityReport {
    #[serde(
        serialize_with = "serialize_db",
        deserialize_with = "deserialize_db"
    )]
    pub psnr_db: f64,
    pub nc: f64,
    pub bcr_percent: f64,
    pub mae: f64,
    pub bpp: f64,
}

fn serialize_db<S: Serializer>(value: &f64, ser: S) -> std::result::Result<S::Ok, S::Error> {
    if value.is_finite() {
        ser.serialize_f64(*value)
    } else {
        ser.serialize_str("inf")
    }
}

fn deserialize_db<'de, D: Deserializer<'de>>(de: D) -> std::result::Result<f64, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Db {
        Number(f64),
        Text(String),
    }
    match Db::deserialize(de)? {
        Db::Number(v) => Ok(v),
        Db::Text(s) if s == "inf" => Ok(f64::INFINITY),
        Db::Text(s) => Err(D::Error::custom(format!("bad psnr value {s:?}"))),
    }
}

/// Peak signal-to-noise ratio in decibels, with the squared error pooled
/// over all samples of all channels. Identical images give +inf.
pub fn psnr(a: &RasterImage, b: &RasterImage) -> Result<f64> {
    if a.width != b.width || a.height != b.height || a.channels != b.channels {
        return Err(VqError::dimension(format!(
            "{}x{}x{} vs {}x{}x{}",
            a.width, a.height, a.channels, b.width, b.height, b.channels
        )));
    }
    let mse = a
        .data
        .iter()
        .zip(b.data.iter())
        .map(|(&x, &y)| {
            let d = x as f64 - y as f64;
            d * d
        })
        .sum::<f64>()
        / a.data.len() as f64;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (255.0 * 255.0 / mse).log10())
}

fn check_same_side(a: &Watermark, b: &Watermark) -> Result<()> {
    if a.side != b.side {
        return Err(VqError::dimension(format!(
            "watermark sides {} vs {}",
            a.side, b.side
        )));
    }
    Ok(())
}

/// Normalized correlation of two binary bitmaps, bits taken as 0/1.
/// Undefined (error) when either operand is all-zero.
pub fn nc(reference: &Watermark, extracted: &Watermark) -> Result<f64> {
    check_same_side(reference, extracted)?;
    let dot: u64 = reference
        .bits
        .iter()
        .zip(extracted.bits.iter())
        .map(|(&a, &b)| (a & b) as u64)
        .sum();
    let sum_a: u64 = reference.bits.iter().map(|&a| a as u64).sum();
    let sum_b: u64 = extracted.bits.iter().map(|&b| b as u64).sum();
    if sum_a == 0 || sum_b == 0 {
        return Err(VqError::Undefined(
            "normalized correlation of an all-zero bitmap".into(),
        ));
    }
    Ok(dot as f64 / ((sum_a as f64) * (sum_b as f64)).sqrt())
}

/// Bit-correct rate as a percentage: (1 - errors/m) * 100.
pub fn bcr(reference: &Watermark, extracted: &Watermark) -> Result<f64> {
    check_same_side(reference, extracted)?;
    let errors: u64 = reference
        .bits
        .iter()
        .zip(extracted.bits.iter())
        .map(|(&a, &b)| (a != b) as u64)
        .sum();
    Ok((1.0 - errors as f64 / reference.len() as f64) * 100.0)
}

/// Mean absolute bit error.
pub fn mae(reference: &Watermark, extracted: &Watermark) -> Result<f64> {
    check_same_side(reference, extracted)?;
    let errors: u64 = reference
        .bits
        .iter()
        .zip(extracted.bits.iter())
        .map(|(&a, &b)| (a != b) as u64)
        .sum();
    Ok(errors as f64 / reference.len() as f64)
}

/// Bits per pixel of the index representation: ceil(log2 size) / blockSide^2.
pub fn index_bpp(codebook_size: usize, block_side: usize) -> f64 {
    let mut bits = 0usize;
    while (1usize << bits) < codebook_size {
        bits += 1;
    }
    bits as f64 / (block_side * block_side) as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::XorShift64Star;
    use proptest::prelude::*;

    fn wm(side: usize, bits: Vec<u8>) -> Watermark {
        Watermark::new(side, bits).unwrap()
    }

    fn random_wm(side: usize, seed: u64) -> Watermark {
        let mut rng = XorShift64Star::new(seed);
        wm(side, (0..side * side).map(|_| (rng.next_u64() & 1) as u8).collect())
    }

    #[test]
    fn psnr_identical_is_infinite() {
        let img = RasterImage::filled(4, 4, 3, 77);
        assert!(psnr(&img, &img).unwrap().is_infinite());
    }

    #[test]
    fn psnr_full_scale_difference_is_zero_db() {
        let black = RasterImage::filled(4, 4, 1, 0);
        let white = RasterImage::filled(4, 4, 1, 255);
        assert!((psnr(&black, &white).unwrap() - 0.0).abs() < 1e-12);
    }

    #[test]
    fn psnr_30db_case() {
        // 40 samples, one differing by 51: MSE = 2601/40 = 65.025,
        // 10*log10(65025/65.025) = 30.
        let a = RasterImage::filled(8, 5, 1, 100);
        let mut b = a.clone();
        b.data[17] = 151;
        let got = psnr(&a, &b).unwrap();
        assert!((got - 30.0).abs() < 1e-2, "got {got}");
    }

    #[test]
    fn psnr_rejects_dim_mismatch() {
        let a = RasterImage::filled(4, 4, 1, 0);
        let b = RasterImage::filled(4, 5, 1, 0);
        assert!(psnr(&a, &b).is_err());
    }

    #[test]
    fn nc_self_is_one() {
        let w = random_wm(8, 12);
        assert!((nc(&w, &w).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn nc_disjoint_supports_is_zero() {
        let a = wm(2, vec![1, 1, 0, 0]);
        let b = wm(2, vec![0, 0, 1, 1]);
        assert_eq!(nc(&a, &b).unwrap(), 0.0);
    }

    #[test]
    fn nc_matches_direct_summation() {
        let a = random_wm(8, 5);
        let b = random_wm(8, 6);
        let mut dot = 0.0;
        let mut sa = 0.0;
        let mut sb = 0.0;
        for i in 0..64 {
            dot += (a.bits[i] * b.bits[i]) as f64;
            sa += (a.bits[i] * a.bits[i]) as f64;
            sb += (b.bits[i] * b.bits[i]) as f64;
        }
        let expected = dot / (sa * sb).sqrt();
        assert!((nc(&a, &b).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn nc_all_zero_is_undefined() {
        let z = wm(2, vec![0; 4]);
        let o = wm(2, vec![1; 4]);
        assert!(matches!(nc(&z, &o), Err(VqError::Undefined(_))));
        assert!(matches!(nc(&o, &z), Err(VqError::Undefined(_))));
    }

    #[test]
    fn bcr_identical_complement_half() {
        let a = wm(2, vec![1, 0, 1, 0]);
        let comp = wm(2, vec![0, 1, 0, 1]);
        let half = wm(2, vec![1, 0, 0, 1]);
        assert_eq!(bcr(&a, &a).unwrap(), 100.0);
        assert_eq!(bcr(&a, &comp).unwrap(), 0.0);
        assert_eq!(bcr(&a, &half).unwrap(), 50.0);
    }

    #[test]
    fn mae_identical_and_complement() {
        let a = wm(2, vec![1, 0, 1, 1]);
        let comp = wm(2, vec![0, 1, 0, 0]);
        assert_eq!(mae(&a, &a).unwrap(), 0.0);
        assert_eq!(mae(&a, &comp).unwrap(), 1.0);
    }

    #[test]
    fn bpp_values() {
        assert_eq!(index_bpp(256, 4), 0.5);
        assert_eq!(index_bpp(2, 1), 1.0);
        assert_eq!(index_bpp(512, 4), 0.5625);
    }

    #[test]
    fn report_renders_infinite_psnr_as_string() {
        let report = QualityReport {
            psnr_db: f64::INFINITY,
            nc: 1.0,
            bcr_percent: 100.0,
            mae: 0.0,
            bpp: 0.5,
        };
        let json = serde_json::to_string(&report).unwrap();
        assert!(json.contains("\"psnr_db\":\"inf\""), "{json}");
        let back: QualityReport = serde_json::from_str(&json).unwrap();
        assert!(back.psnr_db.is_infinite());

        let finite = QualityReport {
            psnr_db: 31.5,
            ..report
        };
        let json = serde_json::to_string(&finite).unwrap();
        assert!(json.contains("\"psnr_db\":31.5"), "{json}");
    }

    proptest! {
        #[test]
        fn bcr_mae_identity(seed in any::<u64>()) {
            let a = random_wm(8, seed);
            let b = random_wm(8, seed.wrapping_add(1));
            let bcr_v = bcr(&a, &b).unwrap();
            let mae_v = mae(&a, &b).unwrap();
            prop_assert_eq!(bcr_v + 100.0 * mae_v, 100.0);
        }

        #[test]
        fn psnr_is_symmetric(seed in any::<u64>()) {
            let mut rng = XorShift64Star::new(seed);
            let a = RasterImage::new(6, 6, 1, (0..36).map(|_| rng.next_u64() as u8).collect()).unwrap();
            let b = RasterImage::new(6, 6, 1, (0..36).map(|_| rng.next_u64() as u8).collect()).unwrap();
            prop_assert_eq!(psnr(&a, &b).unwrap(), psnr(&b, &a).unwrap());
        }

        #[test]
        fn nc_bounded_on_binary_inputs(seed in any::<u64>()) {
            let a = random_wm(6, seed);
            let b = random_wm(6, seed.wrapping_mul(31).wrapping_add(7));
            if a.bits.iter().any(|&x| x == 1) && b.bits.iter().any(|&x| x == 1) {
                let v = nc(&a, &b).unwrap();
                prop_assert!((0.0..=1.0 + 1e-12).contains(&v));
            }
        }
    }
}
