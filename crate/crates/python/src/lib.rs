//! Python bindings: the main types and pipeline operations, thin wrappers
//! over the core crate.

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyBytes;

use vqmark::attacks::{apply_attack as core_apply_attack, AttackSpec};
use vqmark::codebook::{
    train_lbg, train_sofm, Codebook as CoreCodebook, LbgParams, SofmParams,
};
use vqmark::error::VqError;
use vqmark::image::{
    extract_channel, load_image, save_image, to_blocks, RasterImage,
};
use vqmark::metrics;
use vqmark::partition::build_partition;
use vqmark::testimg;
use vqmark::vqcodec::{decode_image, encode_image, EncodedImage};
use vqmark::watermark::{
    embed as core_embed, extract_from_image as core_extract_from_image,
    extract_from_indices, EmbedKey, Watermark as CoreWatermark,
};

fn to_py_err(err: VqError) -> PyErr {
    match err {
        VqError::Io(_) | VqError::Format { .. } => PyIOError::new_err(err.to_string()),
        _ => PyValueError::new_err(err.to_string()),
    }
}

trait IntoPyResult<T> {
    fn into_py(self) -> PyResult<T>;
}

impl<T> IntoPyResult<T> for Result<T, VqError> {
    fn into_py(self) -> PyResult<T> {
        self.map_err(to_py_err)
    }
}

/// 8-bit raster image (grayscale or RGB).
#[pyclass(name = "Image")]
struct PyImage {
    inner: RasterImage,
}

#[pymethods]
impl PyImage {
    /// Build from row-major interleaved samples.
    #[new]
    fn new(width: usize, height: usize, channels: usize, data: Vec<u8>) -> PyResult<Self> {
        Ok(PyImage {
            inner: RasterImage::new(width, height, channels, data).into_py()?,
        })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(PyImage {
            inner: load_image(path).into_py()?,
        })
    }

    /// Deterministic natural-looking test image.
    #[staticmethod]
    #[pyo3(signature = (width, height, channels=3, seed=0))]
    fn synthetic(width: usize, height: usize, channels: usize, seed: u64) -> Self {
        PyImage {
            inner: testimg::synthetic_natural(width, height, channels, seed),
        }
    }

    fn save(&self, path: &str) -> PyResult<()> {
        save_image(&self.inner, path).into_py()
    }

    #[getter]
    fn width(&self) -> usize {
        self.inner.width
    }

    #[getter]
    fn height(&self) -> usize {
        self.inner.height
    }

    #[getter]
    fn channels(&self) -> usize {
        self.inner.channels
    }

    fn data<'py>(&self, py: Python<'py>) -> Bound<'py, PyBytes> {
        PyBytes::new(py, &self.inner.data)
    }

    fn __repr__(&self) -> String {
        format!(
            "Image({}x{}x{})",
            self.inner.width, self.inner.height, self.inner.channels
        )
    }
}

/// Trained set of reconstruction vectors.
#[pyclass(name = "Codebook")]
struct PyCodebook {
    inner: CoreCodebook,
}

#[pymethods]
impl PyCodebook {
    /// Train with the self-organizing map on the blocks of channel 0.
    #[staticmethod]
    #[pyo3(signature = (image, size, block_side=4, seed=1, epochs=None))]
    fn train_sofm(
        image: &PyImage,
        size: usize,
        block_side: usize,
        seed: u64,
        epochs: Option<usize>,
    ) -> PyResult<Self> {
        let blocks = image_blocks(&image.inner, block_side)?;
        let mut params = SofmParams::for_size(size, seed).into_py()?;
        if let Some(epochs) = epochs {
            params.epochs = epochs;
        }
        Ok(PyCodebook {
            inner: train_sofm(&blocks, &params).into_py()?,
        })
    }

    /// Train with the LBG baseline on the blocks of channel 0.
    #[staticmethod]
    #[pyo3(signature = (image, size, block_side=4, seed=1, epsilon=1e-4, max_iters=100))]
    fn train_lbg(
        image: &PyImage,
        size: usize,
        block_side: usize,
        seed: u64,
        epsilon: f64,
        max_iters: usize,
    ) -> PyResult<Self> {
        let blocks = image_blocks(&image.inner, block_side)?;
        let params = LbgParams {
            size,
            epsilon,
            max_iters,
            seed,
        };
        Ok(PyCodebook {
            inner: train_lbg(&blocks, &params).into_py()?,
        })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(PyCodebook {
            inner: CoreCodebook::load(path).into_py()?,
        })
    }

    fn save(&self, path: &str) -> PyResult<()> {
        self.inner.save(path).into_py()
    }

    #[getter]
    fn size(&self) -> usize {
        self.inner.size()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim
    }

    #[getter]
    fn block_side(&self) -> usize {
        self.inner.block_side()
    }

    fn content_hash(&self) -> u64 {
        self.inner.content_hash()
    }

    fn __repr__(&self) -> String {
        format!(
            "Codebook(size={}, dim={}, trainer={})",
            self.inner.size(),
            self.inner.dim,
            self.inner.meta.trainer
        )
    }
}

fn image_blocks(img: &RasterImage, block_side: usize) -> PyResult<Vec<Vec<f64>>> {
    let plane = extract_channel(img, 0).into_py()?;
    Ok(to_blocks(&plane, block_side).into_py()?.blocks)
}

/// Compressed image: per-channel codeword indices.
#[pyclass(name = "Encoded")]
struct PyEncoded {
    inner: EncodedImage,
}

#[pymethods]
impl PyEncoded {
    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(PyEncoded {
            inner: EncodedImage::load(path).into_py()?,
        })
    }

    fn save(&self, path: &str) -> PyResult<()> {
        self.inner.save(path).into_py()
    }

    #[getter]
    fn width(&self) -> usize {
        self.inner.width
    }

    #[getter]
    fn height(&self) -> usize {
        self.inner.height
    }

    #[getter]
    fn channels(&self) -> usize {
        self.inner.channels
    }

    #[getter]
    fn blocks_per_channel(&self) -> usize {
        self.inner.blocks_per_channel()
    }

    /// Indices of one channel, raster order.
    fn indices(&self, channel: usize) -> PyResult<Vec<u16>> {
        self.inner
            .indices
            .get(channel)
            .cloned()
            .ok_or_else(|| PyValueError::new_err(format!("channel {channel} out of range")))
    }

    fn __repr__(&self) -> String {
        format!(
            "Encoded({}x{}x{}, block_side={})",
            self.inner.width, self.inner.height, self.inner.channels, self.inner.block_side
        )
    }
}

/// Square binary bitmap.
#[pyclass(name = "Watermark")]
struct PyWatermark {
    inner: CoreWatermark,
}

#[pymethods]
impl PyWatermark {
    /// Build from raster-order bits (0/1).
    #[new]
    fn new(side: usize, bits: Vec<u8>) -> PyResult<Self> {
        Ok(PyWatermark {
            inner: CoreWatermark::new(side, bits).into_py()?,
        })
    }

    /// Load a PGM bitmap; samples >= 128 become ones.
    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(PyWatermark {
            inner: CoreWatermark::from_image(&load_image(path).into_py()?).into_py()?,
        })
    }

    /// Built-in legible logo.
    #[staticmethod]
    fn demo(side: usize) -> Self {
        PyWatermark {
            inner: testimg::demo_watermark(side),
        }
    }

    fn save(&self, path: &str) -> PyResult<()> {
        save_image(&self.inner.to_image(), path).into_py()
    }

    #[getter]
    fn side(&self) -> usize {
        self.inner.side
    }

    fn bits(&self) -> Vec<u8> {
        self.inner.bits.clone()
    }

    fn to_image(&self) -> PyImage {
        PyImage {
            inner: self.inner.to_image(),
        }
    }

    fn __repr__(&self) -> String {
        format!("Watermark({}x{})", self.inner.side, self.inner.side)
    }
}

/// VQ-encode an image with a shared codebook.
#[pyfunction]
fn encode(image: &PyImage, codebook: &PyCodebook) -> PyResult<PyEncoded> {
    Ok(PyEncoded {
        inner: encode_image(&image.inner, &codebook.inner).into_py()?,
    })
}

/// Decode a compressed image; the codebook hash must match.
#[pyfunction]
fn decode(encoded: &PyEncoded, codebook: &PyCodebook) -> PyResult<PyImage> {
    Ok(PyImage {
        inner: decode_image(&encoded.inner, &codebook.inner).into_py()?,
    })
}

/// Embed a watermark into the first channel's indices under a secret key.
#[pyfunction]
fn embed(
    encoded: &PyEncoded,
    codebook: &PyCodebook,
    watermark: &PyWatermark,
    key: u64,
) -> PyResult<PyEncoded> {
    let pc = build_partition(&codebook.inner).into_py()?;
    Ok(PyEncoded {
        inner: core_embed(&encoded.inner, &pc, &watermark.inner, EmbedKey(key)).into_py()?,
    })
}

/// Read a watermark back from compressed indices.
#[pyfunction]
fn extract_from_encoded(
    encoded: &PyEncoded,
    codebook: &PyCodebook,
    key: u64,
    side: usize,
) -> PyResult<PyWatermark> {
    let pc = build_partition(&codebook.inner).into_py()?;
    Ok(PyWatermark {
        inner: extract_from_indices(&encoded.inner, &pc, EmbedKey(key), side).into_py()?,
    })
}

/// Read a watermark back from a decoded (possibly attacked) image.
#[pyfunction]
fn extract_from_image(
    image: &PyImage,
    codebook: &PyCodebook,
    key: u64,
    side: usize,
) -> PyResult<PyWatermark> {
    let pc = build_partition(&codebook.inner).into_py()?;
    Ok(PyWatermark {
        inner: core_extract_from_image(&image.inner, &codebook.inner, &pc, EmbedKey(key), side)
            .into_py()?,
    })
}

/// Apply an attack described by a JSON spec {kind, params, seed}.
#[pyfunction]
#[pyo3(signature = (image, spec_json, reference=None))]
fn apply_attack(
    image: &PyImage,
    spec_json: &str,
    reference: Option<&PyImage>,
) -> PyResult<PyImage> {
    let spec = AttackSpec::from_json(spec_json).into_py()?;
    Ok(PyImage {
        inner: core_apply_attack(&image.inner, &spec, reference.map(|r| &r.inner)).into_py()?,
    })
}

/// Peak signal-to-noise ratio in dB (inf for identical images).
#[pyfunction]
fn psnr(a: &PyImage, b: &PyImage) -> PyResult<f64> {
    metrics::psnr(&a.inner, &b.inner).into_py()
}

/// Normalized correlation of two binary bitmaps.
#[pyfunction]
fn nc(reference: &PyWatermark, extracted: &PyWatermark) -> PyResult<f64> {
    metrics::nc(&reference.inner, &extracted.inner).into_py()
}

/// Bit-correct rate in percent.
#[pyfunction]
fn bcr(reference: &PyWatermark, extracted: &PyWatermark) -> PyResult<f64> {
    metrics::bcr(&reference.inner, &extracted.inner).into_py()
}

/// Mean absolute bit error.
#[pyfunction]
fn mae(reference: &PyWatermark, extracted: &PyWatermark) -> PyResult<f64> {
    metrics::mae(&reference.inner, &extracted.inner).into_py()
}

/// Bits per pixel of the index representation.
#[pyfunction]
fn index_bpp(codebook_size: usize, block_side: usize) -> f64 {
    metrics::index_bpp(codebook_size, block_side)
}

#[pymodule]
fn vqmark_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyImage>()?;
    m.add_class::<PyCodebook>()?;
    m.add_class::<PyEncoded>()?;
    m.add_class::<PyWatermark>()?;
    m.add_function(wrap_pyfunction!(encode, m)?)?;
    m.add_function(wrap_pyfunction!(decode, m)?)?;
    m.add_function(wrap_pyfunction!(embed, m)?)?;
    m.add_function(wrap_pyfunction!(extract_from_encoded, m)?)?;
    m.add_function(wrap_pyfunction!(extract_from_image, m)?)?;
    m.add_function(wrap_pyfunction!(apply_attack, m)?)?;
    m.add_function(wrap_pyfunction!(psnr, m)?)?;
    m.add_function(wrap_pyfunction!(nc, m)?)?;
    m.add_function(wrap_pyfunction!(bcr, m)?)?;
    m.add_function(wrap_pyfunction!(mae, m)?)?;
    m.add_function(wrap_pyfunction!(index_bpp, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
