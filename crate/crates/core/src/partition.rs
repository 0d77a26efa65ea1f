//! Codebook partition: pair mutually similar codewords into divisions and
//! translate flat indices to (division, member-bit) codes.
//!
//! Within a division the member numbered 0 carries bit 0 and the member
//! numbered 1 carries bit 1; swapping an index for its division sibling is
//! how a watermark bit is written into the index stream.

use crate::codebook::Codebook;
use crate::error::{Result, VqError};

/// Pairing of all codewords into two-member divisions, with the reverse
/// lookup and the division-number bit width.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionedCodebook {
    /// Division number -> (member 0 index, member 1 index).
    pub divisions: Vec<(u16, u16)>,
    /// Codeword index -> (division number, member bit).
    pub by_codeword: Vec<(u32, u8)>,
    /// Bits needed for a division number, minimum 1.
    pub s_bits: usize,
    /// Hash of the codebook this partition was derived from.
    pub codebook_hash: u64,
}

/// Mean squared elementwise difference of two codewords.
pub fn pair_mse(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() || a.is_empty() {
        return Err(VqError::dimension(format!(
            "codewords of length {} and {}",
            a.len(),
            b.len()
        )));
    }
    Ok(a.iter()
        .zip(b.iter())
        .map(|(x, y)| {
            let d = x - y;
            d * d
        })
        .sum::<f64>()
        / a.len() as f64)
}

/// Greedy global pairing: repeatedly bind the unpaired pair with the least
/// mean squared difference, ties by lexicographic (low index, high index).
/// Deterministic, so sender and receiver rebuild the identical partition
/// from the shared codebook and nothing needs to be transmitted.
pub fn build_partition(codebook: &Codebook) -> Result<PartitionedCodebook> {
    let size = codebook.size();
    if size % 2 != 0 {
        return Err(VqError::parameter(format!(
            "partition requires an even codebook size, got {size}"
        )));
    }

    let mut candidates = Vec::with_capacity(size * (size - 1) / 2);
    for i in 0..size {
        for j in (i + 1)..size {
            let mse = pair_mse(&codebook.codewords[i], &codebook.codewords[j])?;
            candidates.push((mse, i as u16, j as u16));
        }
    }
    candidates.sort_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .expect("finite codewords yield finite mse")
            .then(a.1.cmp(&b.1))
            .then(a.2.cmp(&b.2))
    });

    let mut paired = vec![false; size];
    let mut divisions = Vec::with_capacity(size / 2);
    for &(_, i, j) in &candidates {
        if !paired[i as usize] && !paired[j as usize] {
            paired[i as usize] = true;
            paired[j as usize] = true;
            divisions.push((i, j));
            if divisions.len() == size / 2 {
                break;
            }
        }
    }
    debug_assert_eq!(divisions.len(), size / 2);

    let mut by_codeword = vec![(0u32, 0u8); size];
    for (div, &(m0, m1)) in divisions.iter().enumerate() {
        by_codeword[m0 as usize] = (div as u32, 0);
        by_codeword[m1 as usize] = (div as u32, 1);
    }

    let s_bits = division_bits(size / 2);
    Ok(PartitionedCodebook {
        divisions,
        by_codeword,
        s_bits,
        codebook_hash: codebook.content_hash(),
    })
}

/// ceil(log2(divisions)), floored at 1 so the code layout is never empty.
fn division_bits(divisions: usize) -> usize {
    let mut bits = 0;
    while (1usize << bits) < divisions {
        bits += 1;
    }
    bits.max(1)
}

impl PartitionedCodebook {
    pub fn size(&self) -> usize {
        self.by_codeword.len()
    }

    /// (division number, member bit) of a codeword index.
    pub fn index_to_code(&self, codeword_index: usize) -> Result<(u32, u8)> {
        self.by_codeword
            .get(codeword_index)
            .copied()
            .ok_or_else(|| {
                VqError::parameter(format!(
                    "codeword index {codeword_index} out of range for size {}",
                    self.size()
                ))
            })
    }

    /// Codeword index stored at a division slot.
    pub fn code_to_index(&self, division: u32, member_bit: u8) -> Result<u16> {
        let (m0, m1) = self.divisions.get(division as usize).copied().ok_or_else(|| {
            VqError::parameter(format!(
                "division {division} out of range for {} divisions",
                self.divisions.len()
            ))
        })?;
        match member_bit {
            0 => Ok(m0),
            1 => Ok(m1),
            other => Err(VqError::parameter(format!("member bit must be 0 or 1, got {other}"))),
        }
    }

    /// The division sibling of a codeword index.
    pub fn sibling(&self, codeword_index: usize) -> Result<u16> {
        let (div, bit) = self.index_to_code(codeword_index)?;
        self.code_to_index(div, 1 - bit)
    }

    /// Render a code as its bit string: division number big-endian in
    /// `s_bits` bits, then the member bit.
    pub fn code_string(&self, division: u32, member_bit: u8) -> String {
        let mut s = String::with_capacity(self.s_bits + 1);
        for k in (0..self.s_bits).rev() {
            s.push(if division >> k & 1 == 1 { '1' } else { '0' });
        }
        s.push(if member_bit == 1 { '1' } else { '0' });
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codebook::{CodebookMeta, Trainer};
    use crate::rng::XorShift64Star;

    fn scalar_codebook(values: &[f64]) -> Codebook {
        Codebook::new(
            1,
            values.iter().map(|&v| vec![v]).collect(),
            CodebookMeta {
                trainer: Trainer::Sofm,
                seed: 0,
                block_side: 1,
            },
        )
        .unwrap()
    }

    fn random_codebook(size: usize, dim: usize, seed: u64) -> Codebook {
        let mut rng = XorShift64Star::new(seed);
        let codewords = (0..size)
            .map(|_| (0..dim).map(|_| rng.next_f64() * 255.0).collect())
            .collect();
        Codebook::new(
            dim,
            codewords,
            CodebookMeta {
                trainer: Trainer::Sofm,
                seed,
                block_side: 0,
            },
        )
        .unwrap()
    }

    /// Total intra-pair MSE of the best perfect matching, by exhaustive
    /// recursion. Only usable for small sizes.
    fn best_matching_cost(codebook: &Codebook) -> f64 {
        fn recurse(unpaired: &mut Vec<usize>, codebook: &Codebook) -> f64 {
            if unpaired.is_empty() {
                return 0.0;
            }
            let first = unpaired.remove(0);
            let mut best = f64::INFINITY;
            for k in 0..unpaired.len() {
                let partner = unpaired.remove(k);
                let cost = pair_mse(
                    &codebook.codewords[first],
                    &codebook.codewords[partner],
                )
                .unwrap()
                    + recurse(unpaired, codebook);
                best = best.min(cost);
                unpaired.insert(k, partner);
            }
            unpaired.insert(0, first);
            best
        }
        let mut all: Vec<usize> = (0..codebook.size()).collect();
        recurse(&mut all, codebook)
    }

    fn greedy_cost(pc: &PartitionedCodebook, codebook: &Codebook) -> f64 {
        pc.divisions
            .iter()
            .map(|&(a, b)| {
                pair_mse(&codebook.codewords[a as usize], &codebook.codewords[b as usize]).unwrap()
            })
            .sum()
    }

    #[test]
    fn mse_identical_is_zero() {
        assert_eq!(pair_mse(&[3.0, 4.0], &[3.0, 4.0]).unwrap(), 0.0);
    }

    #[test]
    fn mse_of_constant_offset() {
        // 2x2 blocks all-0 vs all-2: (1/4) * 4 * 2^2 = 4.
        assert_eq!(pair_mse(&[0.0; 4], &[2.0; 4]).unwrap(), 4.0);
    }

    #[test]
    fn mse_matches_direct_recomputation() {
        let mut rng = XorShift64Star::new(17);
        let a: Vec<f64> = (0..16).map(|_| rng.next_f64() * 255.0).collect();
        let b: Vec<f64> = (0..16).map(|_| rng.next_f64() * 255.0).collect();
        let mut expected = 0.0;
        for k in 0..16 {
            expected += (a[k] - b[k]) * (a[k] - b[k]);
        }
        expected /= 16.0;
        assert!((pair_mse(&a, &b).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn mse_rejects_dim_mismatch() {
        assert!(pair_mse(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn four_point_pairing_matches_oracle() {
        let cb = scalar_codebook(&[0.0, 1.0, 10.0, 11.0]);
        let pc = build_partition(&cb).unwrap();
        assert_eq!(pc.divisions, vec![(0, 1), (2, 3)]);
        assert_eq!(pc.s_bits, 1);
        let exhaustive = best_matching_cost(&cb);
        assert!((greedy_cost(&pc, &cb) - exhaustive).abs() < 1e-12);
    }

    #[test]
    fn greedy_never_beats_exhaustive_at_small_sizes() {
        // Greedy pairing is not optimal in general; the exhaustive matching
        // cost lower-bounds it and cross-checks both implementations.
        for seed in [1u64, 2, 3] {
            for size in [4usize, 6, 8] {
                let cb = random_codebook(size, 2, seed * 31 + size as u64);
                let pc = build_partition(&cb).unwrap();
                let greedy = greedy_cost(&pc, &cb);
                let best = best_matching_cost(&cb);
                assert!(
                    greedy >= best - 1e-12,
                    "greedy beat exhaustive: {greedy} < {best}"
                );
            }
        }
    }

    #[test]
    fn two_codeword_partition_has_floor_s_bits() {
        let cb = scalar_codebook(&[5.0, 9.0]);
        let pc = build_partition(&cb).unwrap();
        assert_eq!(pc.divisions, vec![(0, 1)]);
        assert_eq!(pc.s_bits, 1);
    }

    #[test]
    fn size_256_yields_128_divisions_and_7_bits() {
        let cb = random_codebook(256, 4, 11);
        let pc = build_partition(&cb).unwrap();
        assert_eq!(pc.divisions.len(), 128);
        assert_eq!(pc.s_bits, 7);
    }

    #[test]
    fn code_strings_for_first_divisions() {
        let cb = random_codebook(256, 4, 11);
        let pc = build_partition(&cb).unwrap();
        assert_eq!(pc.code_string(0, 1), "00000001");
        assert_eq!(pc.code_string(1, 0), "00000010");
    }

    #[test]
    fn code_round_trip_over_all_indices() {
        let cb = random_codebook(64, 3, 5);
        let pc = build_partition(&cb).unwrap();
        let mut seen = vec![false; 64];
        for idx in 0..64 {
            let (div, bit) = pc.index_to_code(idx).unwrap();
            let back = pc.code_to_index(div, bit).unwrap();
            assert_eq!(back as usize, idx);
            assert!(!seen[idx]);
            seen[idx] = true;
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn sibling_flips_member_bit() {
        let cb = random_codebook(16, 2, 8);
        let pc = build_partition(&cb).unwrap();
        for idx in 0..16 {
            let sib = pc.sibling(idx).unwrap() as usize;
            assert_ne!(sib, idx);
            assert_eq!(pc.sibling(sib).unwrap() as usize, idx);
            let (d0, b0) = pc.index_to_code(idx).unwrap();
            let (d1, b1) = pc.index_to_code(sib).unwrap();
            assert_eq!(d0, d1);
            assert_eq!(b0, 1 - b1);
        }
    }

    #[test]
    fn direct_lookup_of_known_pair() {
        // Values arranged so (3, 9) is the closest pair and binds first.
        let cb = scalar_codebook(&[0.0, 40.0, 80.0, 120.0, 160.0, 200.0, 240.0, 20.0, 60.0, 120.5]);
        let pc = build_partition(&cb).unwrap();
        let (div, _) = pc.index_to_code(3).unwrap();
        assert_eq!(pc.divisions[div as usize], (3, 9));
        assert_eq!(pc.code_to_index(div, 1).unwrap(), 9);
    }

    #[test]
    fn rebuilding_is_stable() {
        let cb = random_codebook(32, 4, 99);
        assert_eq!(build_partition(&cb).unwrap(), build_partition(&cb).unwrap());
    }

    #[test]
    fn out_of_range_lookups_fail() {
        let cb = scalar_codebook(&[1.0, 2.0]);
        let pc = build_partition(&cb).unwrap();
        assert!(pc.index_to_code(2).is_err());
        assert!(pc.code_to_index(1, 0).is_err());
        assert!(pc.code_to_index(0, 2).is_err());
    }
}
