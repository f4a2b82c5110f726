//! Additive QIM: one bit per coefficient as an antipodal `±alpha/2` shift,
//! recovered non-blindly from the sign of the difference to the original.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image_core::{luma, RasterImage};
use crate::wavelet::WaveletSpec;

pub const MAX_WATERMARK_SIDE: usize = 128;
pub const DEFAULT_THRESHOLD: u8 = 128;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmbedConfig {
    pub alpha: f64,
    pub threshold: u8,
    pub spec: WaveletSpec,
}

impl EmbedConfig {
    pub fn new(alpha: f64, threshold: u8, spec: WaveletSpec) -> Result<Self> {
        let cfg = Self {
            alpha,
            threshold,
            spec,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "alpha must be a positive finite number, got {}",
                self.alpha
            )));
        }
        if self.threshold == 0 {
            return Err(Error::InvalidConfig("threshold must be in 1..=255".into()));
        }
        if self.spec.level == 0 {
            return Err(Error::InvalidConfig(
                "decomposition level must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// Row-major matrix of bits stored as `0`/`1` bytes.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BitMatrix {
    height: usize,
    width: usize,
    bits: Vec<u8>,
}

impl BitMatrix {
    pub fn new(height: usize, width: usize, bits: Vec<u8>) -> Result<Self> {
        if bits.len() != height * width {
            return Err(Error::ShapeMismatch(format!(
                "{} bits for a {height}x{width} matrix",
                bits.len()
            )));
        }
        if bits.iter().any(|&b| b > 1) {
            return Err(Error::InvalidConfig(
                "bit matrix entries must be 0 or 1".into(),
            ));
        }
        Ok(Self {
            height,
            width,
            bits,
        })
    }

    pub fn zeros(height: usize, width: usize) -> Self {
        Self {
            height,
            width,
            bits: vec![0; height * width],
        }
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut bits = Vec::with_capacity(height * width);
        for r in 0..height {
            for c in 0..width {
                bits.push(f(r, c) as u8);
            }
        }
        Self {
            height,
            width,
            bits,
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.bits[row * self.width + col]
    }

    pub fn set(&mut self, row: usize, col: usize, bit: u8) {
        self.bits[row * self.width + col] = bit & 1;
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().map(|&b| b as usize).sum()
    }

    pub fn complement(&self) -> Self {
        Self {
            height: self.height,
            width: self.width,
            bits: self.bits.iter().map(|&b| 1 - b).collect(),
        }
    }

    /// Copy of the `th x tw` block whose top-left corner is `(row, col)`.
    pub fn block(&self, row: usize, col: usize, th: usize, tw: usize) -> Self {
        assert!(
            row + th <= self.height && col + tw <= self.width,
            "block out of range"
        );
        let mut bits = Vec::with_capacity(th * tw);
        for r in row..row + th {
            bits.extend_from_slice(&self.bits[r * self.width + col..r * self.width + col + tw]);
        }
        Self {
            height: th,
            width: tw,
            bits,
        }
    }

    /// Render as a grayscale raster, 1 -> 255 and 0 -> 0.
    pub fn to_image(&self) -> RasterImage {
        RasterImage::new(
            self.width,
            self.height,
            1,
            self.bits.iter().map(|&b| b * 255).collect(),
        )
        .expect("bit matrix dims are positive")
    }
}

/// A watermark payload, at most 128x128.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WatermarkBits(BitMatrix);

impl WatermarkBits {
    pub fn new(matrix: BitMatrix) -> Result<Self> {
        let (h, w) = matrix.dims();
        if h > MAX_WATERMARK_SIDE || w > MAX_WATERMARK_SIDE {
            return Err(Error::WatermarkTooLarge {
                height: h,
                width: w,
            });
        }
        if h == 0 || w == 0 {
            return Err(Error::InvalidConfig("watermark must not be empty".into()));
        }
        Ok(Self(matrix))
    }

    pub fn matrix(&self) -> &BitMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> BitMatrix {
        self.0
    }

    pub fn dims(&self) -> (usize, usize) {
        self.0.dims()
    }

    pub fn height(&self) -> usize {
        self.0.height()
    }

    pub fn width(&self) -> usize {
        self.0.width()
    }
}

/// Threshold a watermark image: `1` iff the (luma) sample is `>= threshold`.
pub fn binarize(watermark: &RasterImage, threshold: u8) -> Result<WatermarkBits> {
    let (h, w) = watermark.dims();
    if h > MAX_WATERMARK_SIDE || w > MAX_WATERMARK_SIDE {
        return Err(Error::WatermarkTooLarge {
            height: h,
            width: w,
        });
    }
    let t = threshold as f64;
    let bits = match watermark.channels() {
        3 => watermark
            .data()
            .chunks_exact(3)
            .map(|px| (luma(px[0], px[1], px[2]) >= t) as u8)
            .collect(),
        _ => watermark
            .data()
            .iter()
            .map(|&v| (v as f64 >= t) as u8)
            .collect(),
    };
    WatermarkBits::new(BitMatrix::new(h, w, bits)?)
}

/// Shift `c` by `+alpha/2` for bit 1 and `-alpha/2` for bit 0.
#[inline]
pub fn embed_bit(c: f64, bit: u8, alpha: f64) -> f64 {
    if bit != 0 {
        c + alpha / 2.0
    } else {
        c - alpha / 2.0
    }
}

/// `1` when the marked coefficient is not below the original; a zero difference reads as `1`.
#[inline]
pub fn extract_bit(marked: f64, original: f64) -> u8 {
    (marked - original >= 0.0) as u8
}
