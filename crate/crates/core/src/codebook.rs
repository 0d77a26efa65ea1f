//! Codebook training: a Kohonen self-organizing map as the primary trainer
//! and classic Linde-Buzo-Gray as the comparison baseline.

use std::fs;
use std::path::Path;

use crate::error::{Result, VqError};
use crate::rng::XorShift64Star;

const CODEBOOK_MAGIC: &[u8; 4] = b"VQCB";
const CODEBOOK_VERSION: u8 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Trainer {
    Sofm,
    Lbg,
}

impl Trainer {
    fn to_byte(self) -> u8 {
        match self {
            Trainer::Sofm => 0,
            Trainer::Lbg => 1,
        }
    }

    fn from_byte(b: u8) -> Result<Self> {
        match b {
            0 => Ok(Trainer::Sofm),
            1 => Ok(Trainer::Lbg),
            other => Err(VqError::parameter(format!("unknown trainer tag {other}"))),
        }
    }
}

impl std::fmt::Display for Trainer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Trainer::Sofm => write!(f, "sofm"),
            Trainer::Lbg => write!(f, "lbg"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CodebookMeta {
    pub trainer: Trainer,
    pub seed: u64,
    /// Side length of the square source blocks, inferred as the integer
    /// square root of the vector dimension; zero when the dimension is not
    /// a perfect square (such codebooks cannot encode planes).
    pub block_side: u8,
}

/// An ordered set of reconstruction vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    pub dim: usize,
    pub codewords: Vec<Vec<f64>>,
    pub meta: CodebookMeta,
}

fn infer_block_side(dim: usize) -> u8 {
    let a = (dim as f64).sqrt().round() as usize;
    if a > 0 && a * a == dim && a <= u8::MAX as usize {
        a as u8
    } else {
        0
    }
}

impl Codebook {
    pub fn new(dim: usize, codewords: Vec<Vec<f64>>, meta: CodebookMeta) -> Result<Self> {
        let size = codewords.len();
        if size < 2 || size % 2 != 0 {
            return Err(VqError::parameter(format!(
                "codebook size must be even and at least 2, got {size}"
            )));
        }
        if size > u16::MAX as usize {
            return Err(VqError::parameter(format!("codebook size {size} too large")));
        }
        for (i, cw) in codewords.iter().enumerate() {
            if cw.len() != dim {
                return Err(VqError::dimension(format!(
                    "codeword {i} has {} elements, expected {dim}",
                    cw.len()
                )));
            }
            if cw.iter().any(|v| !v.is_finite()) {
                return Err(VqError::parameter(format!("codeword {i} contains non-finite value")));
            }
        }
        Ok(Codebook {
            dim,
            codewords,
            meta,
        })
    }

    pub fn size(&self) -> usize {
        self.codewords.len()
    }

    pub fn block_side(&self) -> usize {
        self.meta.block_side as usize
    }

    /// Index of the nearest codeword under squared Euclidean distance,
    /// ties broken by the lowest index.
    pub fn nearest(&self, vector: &[f64]) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, cw) in self.codewords.iter().enumerate() {
            let d = squared_distance(vector, cw);
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        best
    }

    // -- serialization ------------------------------------------------------

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(4 + 1 + 1 + 2 + 2 + 1 + 8 + self.size() * self.dim * 8);
        out.extend_from_slice(CODEBOOK_MAGIC);
        out.push(CODEBOOK_VERSION);
        out.push(self.meta.block_side);
        out.extend_from_slice(&(self.dim as u16).to_le_bytes());
        out.extend_from_slice(&(self.size() as u16).to_le_bytes());
        out.push(self.meta.trainer.to_byte());
        out.extend_from_slice(&self.meta.seed.to_le_bytes());
        for cw in &self.codewords {
            for &v in cw {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        const HEADER: usize = 4 + 1 + 1 + 2 + 2 + 1 + 8;
        if bytes.len() < HEADER {
            return Err(VqError::format(bytes.len(), "codebook file too short"));
        }
        if &bytes[..4] != CODEBOOK_MAGIC {
            return Err(VqError::format(0, "bad codebook magic"));
        }
        if bytes[4] != CODEBOOK_VERSION {
            return Err(VqError::format(
                4,
                format!("unsupported codebook version {}", bytes[4]),
            ));
        }
        let block_side = bytes[5];
        let dim = u16::from_le_bytes([bytes[6], bytes[7]]) as usize;
        let size = u16::from_le_bytes([bytes[8], bytes[9]]) as usize;
        let trainer = Trainer::from_byte(bytes[10])?;
        let seed = u64::from_le_bytes(bytes[11..19].try_into().unwrap());
        let expected = HEADER + size * dim * 8;
        if bytes.len() != expected {
            return Err(VqError::format(
                bytes.len().min(expected),
                format!("codebook payload is {} bytes, expected {}", bytes.len(), expected),
            ));
        }
        let mut codewords = Vec::with_capacity(size);
        let mut off = HEADER;
        for _ in 0..size {
            let mut cw = Vec::with_capacity(dim);
            for _ in 0..dim {
                cw.push(f64::from_le_bytes(bytes[off..off + 8].try_into().unwrap()));
                off += 8;
            }
            codewords.push(cw);
        }
        Codebook::new(
            dim,
            codewords,
            CodebookMeta {
                trainer,
                seed,
                block_side,
            },
        )
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&fs::read(path)?)
    }

    /// FNV-1a over the serialized codebook bytes; containers store this to
    /// detect decode attempts with the wrong codebook.
    pub fn content_hash(&self) -> u64 {
        fnv1a64(&self.to_bytes())
    }
}

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| {
            let d = x - y;
            d * d
        })
        .sum()
}

/// Mean squared Euclidean distance from each vector to its nearest codeword.
pub fn average_distortion(vectors: &[Vec<f64>], codebook: &Codebook) -> Result<f64> {
    if vectors.is_empty() {
        return Err(VqError::parameter("cannot compute distortion of empty vector set"));
    }
    let mut total = 0.0;
    for v in vectors {
        if v.len() != codebook.dim {
            return Err(VqError::dimension(format!(
                "vector has {} elements, codebook dim is {}",
                v.len(),
                codebook.dim
            )));
        }
        let j = codebook.nearest(v);
        total += squared_distance(v, &codebook.codewords[j]);
    }
    Ok(total / vectors.len() as f64)
}

// ---------------------------------------------------------------------------
// SOFM
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
pub struct SofmParams {
    pub grid_rows: usize,
    pub grid_cols: usize,
    pub epochs: usize,
    pub eta0: f64,
    pub eta_final: f64,
    pub sigma0: f64,
    pub sigma_final: f64,
    pub seed: u64,
}

impl SofmParams {
    /// Kohonen schedule for a given neuron grid: broad ordering phase
    /// decaying into a winner-dominated refinement phase. The terminal
    /// radius is small enough that the map settles into the data density
    /// instead of staying contracted toward its mean.
    pub fn for_grid(grid_rows: usize, grid_cols: usize, seed: u64) -> Self {
        SofmParams {
            grid_rows,
            grid_cols,
            epochs: 12,
            eta0: 0.5,
            eta_final: 0.05,
            sigma0: grid_rows.max(grid_cols) as f64 / 2.0,
            sigma_final: 0.1,
            seed,
        }
    }

    /// Defaults for a target codebook size, on the most square grid that
    /// factors it (16x16 for 256).
    pub fn for_size(size: usize, seed: u64) -> Result<Self> {
        let (r, c) = grid_for_size(size)?;
        Ok(Self::for_grid(r, c, seed))
    }

    fn validate(&self) -> Result<()> {
        if self.grid_rows == 0 || self.grid_cols == 0 {
            return Err(VqError::parameter("neuron grid must be non-empty"));
        }
        let size = self.grid_rows * self.grid_cols;
        if size < 2 || size % 2 != 0 {
            return Err(VqError::parameter(format!(
                "grid yields codebook size {size}; size must be even and at least 2"
            )));
        }
        if !(self.eta0 > self.eta_final && self.eta_final > 0.0) {
            return Err(VqError::parameter("learning rates must satisfy eta0 > etaFinal > 0"));
        }
        if !(self.sigma0 >= self.sigma_final && self.sigma_final >= 0.0) {
            return Err(VqError::parameter(
                "neighborhood radii must satisfy sigma0 >= sigmaFinal >= 0",
            ));
        }
        if self.epochs == 0 {
            return Err(VqError::parameter("epochs must be at least 1"));
        }
        Ok(())
    }
}

/// Most square factoring of `size` into grid rows x cols (rows <= cols).
pub fn grid_for_size(size: usize) -> Result<(usize, usize)> {
    if size < 2 {
        return Err(VqError::parameter("codebook size must be at least 2"));
    }
    let mut rows = (size as f64).sqrt() as usize;
    while rows > 1 && size % rows != 0 {
        rows -= 1;
    }
    Ok((rows, size / rows))
}

/// Train a codebook with a Kohonen self-organizing map over a rectangular
/// neuron grid.
///
/// Per presented vector the winning neuron is the nearest by squared
/// Euclidean distance; every neuron then moves toward the input weighted by
/// a Gaussian of its grid distance to the winner. Learning rate and radius
/// decay exponentially from their initial to final values over all
/// presentations. Deterministic for a fixed seed.
pub fn train_sofm(vectors: &[Vec<f64>], params: &SofmParams) -> Result<Codebook> {
    params.validate()?;
    if vectors.is_empty() {
        return Err(VqError::parameter("training set is empty"));
    }
    let dim = vectors[0].len();
    if dim == 0 {
        return Err(VqError::parameter("training vectors must be non-empty"));
    }
    for (i, v) in vectors.iter().enumerate() {
        if v.len() != dim {
            return Err(VqError::dimension(format!(
                "training vector {i} has {} elements, expected {dim}",
                v.len()
            )));
        }
    }

    let rows = params.grid_rows;
    let cols = params.grid_cols;
    let size = rows * cols;
    let mut rng = XorShift64Star::new(params.seed);

    // Weights start uniform in the 8-bit sample range.
    let mut weights: Vec<Vec<f64>> = (0..size)
        .map(|_| (0..dim).map(|_| rng.next_f64() * 255.0).collect())
        .collect();

    // Squared grid distance to the winner only depends on the row/col
    // deltas, so the Gaussian h = exp(-d2/(2 sigma^2)) = base^d2 with
    // base = exp(-1/(2 sigma^2)) can be tabulated by iterated
    // multiplication, one exp per presentation instead of one per neuron.
    let grid_pos: Vec<(isize, isize)> = (0..size)
        .map(|i| ((i / cols) as isize, (i % cols) as isize))
        .collect();
    let max_d2 = ((rows - 1) * (rows - 1) + (cols - 1) * (cols - 1)) as usize;
    let mut h_table = vec![0.0f64; max_d2 + 1];

    let total = (params.epochs * vectors.len()) as f64;
    let eta_ratio = params.eta_final / params.eta0;
    let sigma_ratio = if params.sigma0 > 0.0 {
        params.sigma_final / params.sigma0
    } else {
        1.0
    };

    let mut order: Vec<usize> = (0..vectors.len()).collect();
    let mut t = 0usize;
    for _ in 0..params.epochs {
        rng.shuffle(&mut order);
        for &vi in &order {
            let x = &vectors[vi];
            let frac = t as f64 / total;
            let eta = params.eta0 * eta_ratio.powf(frac);
            let sigma = params.sigma0 * sigma_ratio.powf(frac);

            let mut winner = 0;
            let mut best = f64::INFINITY;
            for (i, w) in weights.iter().enumerate() {
                let d = squared_distance(x, w);
                if d < best {
                    best = d;
                    winner = i;
                }
            }

            if sigma > 0.0 {
                // Neurons beyond three radii get h < 1.2e-4; their updates
                // are numerically negligible and skipped.
                let cutoff_d2 = (9.0 * sigma * sigma).floor() as i64;
                let base = (-1.0 / (2.0 * sigma * sigma)).exp();
                let mut acc = 1.0;
                for entry in h_table.iter_mut() {
                    *entry = acc;
                    acc *= base;
                }
                let (wr, wc) = grid_pos[winner];
                for (i, w) in weights.iter_mut().enumerate() {
                    let (r, c) = grid_pos[i];
                    let dr = r - wr;
                    let dc = c - wc;
                    let d2 = dr * dr + dc * dc;
                    if d2 as i64 > cutoff_d2 && i != winner {
                        continue;
                    }
                    let step = eta * h_table[d2 as usize];
                    if step == 0.0 {
                        continue;
                    }
                    for (we, xe) in w.iter_mut().zip(x.iter()) {
                        *we += step * (xe - *we);
                    }
                }
            } else {
                // Degenerate radius: winner-only update.
                let w = &mut weights[winner];
                for (we, xe) in w.iter_mut().zip(x.iter()) {
                    *we += eta * (xe - *we);
                }
            }
            t += 1;
        }
    }

    Codebook::new(
        dim,
        weights,
        CodebookMeta {
            trainer: Trainer::Sofm,
            seed: params.seed,
            block_side: infer_block_side(dim),
        },
    )
}

// ---------------------------------------------------------------------------
// LBG
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
pub struct LbgParams {
    pub size: usize,
    pub epsilon: f64,
    pub max_iters: usize,
    pub seed: u64,
}

impl LbgParams {
    pub fn new(size: usize, seed: u64) -> Self {
        LbgParams {
            size,
            epsilon: 1e-4,
            max_iters: 100,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.size < 2 || self.size % 2 != 0 {
            return Err(VqError::parameter(format!(
                "codebook size must be even and at least 2, got {}",
                self.size
            )));
        }
        if !(self.epsilon > 0.0) {
            return Err(VqError::parameter("epsilon must be positive"));
        }
        if self.max_iters == 0 {
            return Err(VqError::parameter("maxIters must be at least 1"));
        }
        Ok(())
    }
}

/// Offset added elementwise when splitting the most populous cell to
/// re-seed an empty one.
const SPLIT_DELTA: f64 = 1e-3;

pub fn train_lbg(vectors: &[Vec<f64>], params: &LbgParams) -> Result<Codebook> {
    Ok(train_lbg_traced(vectors, params)?.0)
}

/// LBG with the per-iteration average distortion trace exposed; the trace
/// is the distortion of the codebook in force when each partition was made,
/// and is non-increasing.
pub fn train_lbg_traced(vectors: &[Vec<f64>], params: &LbgParams) -> Result<(Codebook, Vec<f64>)> {
    params.validate()?;
    if vectors.len() < params.size {
        return Err(VqError::parameter(format!(
            "need at least {} training vectors, got {}",
            params.size,
            vectors.len()
        )));
    }
    let dim = vectors[0].len();
    for (i, v) in vectors.iter().enumerate() {
        if v.len() != dim {
            return Err(VqError::dimension(format!(
                "training vector {i} has {} elements, expected {dim}",
                v.len()
            )));
        }
    }

    let size = params.size;
    let mut rng = XorShift64Star::new(params.seed);
    let init = rng.sample_indices(vectors.len(), size);
    let mut codewords: Vec<Vec<f64>> = init.iter().map(|&i| vectors[i].clone()).collect();

    let mut trace = Vec::new();
    let mut prev_distortion = f64::INFINITY;
    let mut assignments = vec![0usize; vectors.len()];

    for _ in 0..params.max_iters {
        // Partition: nearest codeword per vector, ties to the lowest index.
        let mut distortion = 0.0;
        for (vi, v) in vectors.iter().enumerate() {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (ci, cw) in codewords.iter().enumerate() {
                let d = squared_distance(v, cw);
                if d < best_d {
                    best_d = d;
                    best = ci;
                }
            }
            assignments[vi] = best;
            distortion += best_d;
        }
        distortion /= vectors.len() as f64;
        debug_assert!(
            distortion <= prev_distortion,
            "distortion rose from {prev_distortion} to {distortion}"
        );
        trace.push(distortion);

        let converged = prev_distortion.is_finite()
            && (prev_distortion - distortion) < params.epsilon * prev_distortion.max(f64::MIN_POSITIVE);
        prev_distortion = distortion;
        if converged {
            break;
        }

        // Centroid update.
        let mut sums = vec![vec![0.0; dim]; size];
        let mut counts = vec![0usize; size];
        for (vi, v) in vectors.iter().enumerate() {
            let c = assignments[vi];
            counts[c] += 1;
            for (s, x) in sums[c].iter_mut().zip(v.iter()) {
                *s += x;
            }
        }
        for c in 0..size {
            if counts[c] > 0 {
                for s in sums[c].iter_mut() {
                    *s /= counts[c] as f64;
                }
                codewords[c] = std::mem::take(&mut sums[c]);
            }
        }
        // Re-seed empty cells by splitting the most populous cell.
        for c in 0..size {
            if counts[c] == 0 {
                let busiest = (0..size).max_by_key(|&i| counts[i]).unwrap();
                codewords[c] = codewords[busiest].iter().map(|v| v + SPLIT_DELTA).collect();
            }
        }
    }

    let codebook = Codebook::new(
        dim,
        codewords,
        CodebookMeta {
            trainer: Trainer::Lbg,
            seed: params.seed,
            block_side: infer_block_side(dim),
        },
    )?;
    Ok((codebook, trace))
}
