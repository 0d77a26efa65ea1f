//! Seeded xorshift64* generator.
//!
//! This generator is part of the interoperability contract: position
//! selection for watermark embedding must be reproducible bit-for-bit by
//! independent implementations, so the exact state transition and the
//! partial shuffle built on top of it are pinned here.

/// A zero seed would lock xorshift in the all-zero state, so it is remapped
/// to this constant.
const ZERO_SEED_SUBSTITUTE: u64 = 0x9E37_79B9_7F4A_7C15;

const OUTPUT_MULTIPLIER: u64 = 0x2545_F491_4F6C_DD1D;

#[derive(Debug, Clone)]
pub struct XorShift64Star {
    state: u64,
}

impl XorShift64Star {
    pub fn new(seed: u64) -> Self {
        let state = if seed == 0 { ZERO_SEED_SUBSTITUTE } else { seed };
        XorShift64Star { state }
    }

    pub fn next_u64(&mut self) -> u64 {
        let mut s = self.state;
        s ^= s >> 12;
        s ^= s << 25;
        s ^= s >> 27;
        self.state = s;
        s.wrapping_mul(OUTPUT_MULTIPLIER)
    }

    /// Uniform draw from `[0, bound)` by modulo reduction. The reduction
    /// bias is negligible for the bounds used here and keeps the sequence
    /// reproducible from the raw u64 stream.
    pub fn next_below(&mut self, bound: u64) -> u64 {
        debug_assert!(bound > 0);
        self.next_u64() % bound
    }

    /// Uniform f64 in `[0, 1)` from the top 53 bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal deviate via Box-Muller. One output per draw pair;
    /// the sine branch is discarded to keep the stream position a simple
    /// function of the number of samples requested.
    pub fn next_gaussian(&mut self) -> f64 {
        let u1 = ((self.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64);
        let u2 = self.next_f64();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// In-place Fisher-Yates shuffle, forward direction.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        let n = items.len();
        for i in 0..n {
            let j = i + self.next_below((n - i) as u64) as usize;
            items.swap(i, j);
        }
    }

    /// First `count` entries of a partial Fisher-Yates shuffle of
    /// `[0, total)`, in draw order. This is the pinned position-selection
    /// procedure: A = [0..total); for i in 0..count:
    /// j = i + next() mod (total - i); swap A[i], A[j]; return A[0..count).
    pub fn sample_indices(&mut self, total: usize, count: usize) -> Vec<usize> {
        debug_assert!(count <= total);
        let mut arr: Vec<usize> = (0..total).collect();
        for i in 0..count {
            let j = i + self.next_below((total - i) as u64) as usize;
            arr.swap(i, j);
        }
        arr.truncate(count);
        arr
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_seed_is_remapped() {
        let mut a = XorShift64Star::new(0);
        let mut b = XorShift64Star::new(ZERO_SEED_SUBSTITUTE);
        for _ in 0..8 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn known_first_output() {
        // First output for seed 1, computed by hand from the state
        // transition: s = 1 -> s ^= s>>12 (1), s ^= s<<25 (0x2000001),
        // s ^= s>>27 -> 0x2000001, times the output multiplier.
        let mut r = XorShift64Star::new(1);
        let s: u64 = 0x2000001;
        assert_eq!(r.next_u64(), s.wrapping_mul(OUTPUT_MULTIPLIER));
    }

    #[test]
    fn f64_range() {
        let mut r = XorShift64Star::new(7);
        for _ in 0..1000 {
            let v = r.next_f64();
            assert!((0.0..1.0).contains(&v));
        }
    }

    #[test]
    fn sample_indices_full_draw_is_permutation() {
        let mut r = XorShift64Star::new(99);
        let mut sel = r.sample_indices(32, 32);
        sel.sort_unstable();
        assert_eq!(sel, (0..32).collect::<Vec<_>>());
    }

    #[test]
    fn sample_indices_distinct() {
        let mut r = XorShift64Star::new(3);
        let sel = r.sample_indices(100, 40);
        let mut seen = std::collections::HashSet::new();
        for &p in &sel {
            assert!(p < 100);
            assert!(seen.insert(p));
        }
    }

    #[test]
    fn gaussian_moments_are_plausible() {
        let mut r = XorShift64Star::new(12345);
        let n = 20_000;
        let samples: Vec<f64> = (0..n).map(|_| r.next_gaussian()).collect();
        let mean = samples.iter().sum::<f64>() / n as f64;
        let var = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
        assert!(mean.abs() < 0.05, "mean {mean}");
        assert!((var - 1.0).abs() < 0.05, "var {var}");
    }
}
