//! End-to-end embedding and non-blind extraction on the luminance channel.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::aqim::{
    binarize, embed_bit, extract_bit, BitMatrix, EmbedConfig, WatermarkBits, DEFAULT_THRESHOLD,
};
use crate::error::{Error, Result};
use crate::image_core::{
    luma_plane, plane_to_gray, to_ycbcr, ycbcr_to_rgb, RasterImage, YCbCrPlanes,
};
use crate::metrics;
use crate::mosaic::{build_mosaic, split_and_score, TileReport};
use crate::wavelet::{fwt2, ifwt2, Family, WaveletSpec};

pub const MAX_DEFAULT_LEVEL: usize = 6;
pub const BASE_ALPHA_GRAYSCALE: f64 = 30.0;
pub const BASE_ALPHA_BINARY: f64 = 25.0;

#[derive(Clone, Debug)]
pub struct EmbedResult {
    pub watermarked: RasterImage,
    pub psnr_db: f64,
    pub ssim: f64,
    pub embed_seconds: f64,
    pub config_used: EmbedConfig,
}

#[derive(Clone, Debug)]
pub struct ExtractResult {
    /// Recovered bits over the whole approximation band.
    pub recovered_bits: BitMatrix,
    pub tile_report: TileReport,
    /// Against the binarized reference; `None` when extraction ran without one.
    pub ber: Option<f64>,
    pub ncc: Option<f64>,
    pub extract_seconds: f64,
}

/// Whether a watermark image is two-level (e.g. a QR code) or continuous-tone.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WatermarkKind {
    Binary,
    Grayscale,
}

impl WatermarkKind {
    /// Binary when the luma samples take at most two distinct values.
    pub fn detect(watermark: &RasterImage) -> Self {
        let plane = luma_plane(watermark);
        let mut seen = [false; 256];
        let mut distinct = 0;
        for &v in plane.data() {
            let i = v as usize;
            if !seen[i] {
                seen[i] = true;
                distinct += 1;
                if distinct > 2 {
                    return WatermarkKind::Grayscale;
                }
            }
        }
        WatermarkKind::Binary
    }

    pub fn base_alpha(self) -> f64 {
        match self {
            WatermarkKind::Binary => BASE_ALPHA_BINARY,
            WatermarkKind::Grayscale => BASE_ALPHA_GRAYSCALE,
        }
    }
}

/// Embedding parameters where any field may be left to [`resolve_defaults`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PartialConfig {
    pub alpha: Option<f64>,
    pub level: Option<usize>,
    pub wavelet: Option<Family>,
    pub threshold: Option<u8>,
}

/// Fill unset parameters.
///
/// Level: `clamp(floor(log2(min(H, W) / (2 max(th, tw)))), 1, 6)`.
/// Alpha: `a0 * 2^(L - 2)` with `a0 = 30` for grayscale and `25` for binary watermarks.
pub fn resolve_defaults(
    host_dims: (usize, usize),
    wm_dims: (usize, usize),
    kind: WatermarkKind,
    partial: &PartialConfig,
) -> EmbedConfig {
    let level = partial.level.unwrap_or_else(|| {
        let short = host_dims.0.min(host_dims.1);
        let tile = 2 * wm_dims.0.max(wm_dims.1).max(1);
        // largest L with tile * 2^L <= short
        let mut l = 0usize;
        while l < MAX_DEFAULT_LEVEL && tile << (l + 1) <= short {
            l += 1;
        }
        l.clamp(1, MAX_DEFAULT_LEVEL)
    });
    let alpha = partial
        .alpha
        .unwrap_or_else(|| kind.base_alpha() * 2f64.powi(level as i32 - 2));
    EmbedConfig {
        alpha,
        threshold: partial.threshold.unwrap_or(DEFAULT_THRESHOLD),
        spec: WaveletSpec {
            family: partial.wavelet.unwrap_or_default(),
            level,
        },
    }
}

/// Embed already-binarized watermark bits into `host`.
pub fn embed_bits(
    host: &RasterImage,
    wm: &WatermarkBits,
    cfg: &EmbedConfig,
) -> Result<RasterImage> {
    cfg.validate()?;
    let YCbCrPlanes { y, cb, cr } = to_ycbcr(host)?;
    let mut pyr = fwt2(&y, &cfg.spec)?;
    drop(y);
    let mosaic = build_mosaic(wm, pyr.ll.dims())?;
    for (c, &b) in pyr.ll.data_mut().iter_mut().zip(mosaic.bits.bits()) {
        *c = embed_bit(*c, b, cfg.alpha);
    }
    let marked_y = ifwt2(&pyr, &cfg.spec)?;
    drop(pyr);
    if host.is_rgb() {
        ycbcr_to_rgb(&YCbCrPlanes {
            y: marked_y,
            cb,
            cr,
        })
    } else {
        Ok(plane_to_gray(&marked_y))
    }
}

/// Binarize `watermark`, embed it, and score the result against `host`.
pub fn embed(
    host: &RasterImage,
    watermark: &RasterImage,
    cfg: &EmbedConfig,
) -> Result<EmbedResult> {
    cfg.validate()?;
    let start = Instant::now();
    let wm = binarize(watermark, cfg.threshold)?;
    let watermarked = embed_bits(host, &wm, cfg)?;
    let embed_seconds = start.elapsed().as_secs_f64();
    let psnr_db = metrics::psnr(host, &watermarked)?;
    let ssim = metrics::ssim(host, &watermarked)?;
    Ok(EmbedResult {
        watermarked,
        psnr_db,
        ssim,
        embed_seconds,
        config_used: *cfg,
    })
}

/// Bit plane read from the approximation bands of `host` and `suspect`.
pub fn recover_bits(
    host: &RasterImage,
    suspect: &RasterImage,
    spec: &WaveletSpec,
) -> Result<BitMatrix> {
    if host.dims() != suspect.dims() {
        return Err(Error::RealignRequired {
            suspect_height: suspect.height(),
            suspect_width: suspect.width(),
            host_height: host.height(),
            host_width: host.width(),
        });
    }
    let original = fwt2(&luma_plane(host), spec)?.ll;
    let marked = fwt2(&luma_plane(suspect), spec)?.ll;
    let (h, w) = original.dims();
    let bits = marked
        .data()
        .iter()
        .zip(original.data())
        .map(|(&m, &o)| extract_bit(m, o))
        .collect();
    BitMatrix::new(h, w, bits)
}

/// Non-blind extraction. `reference`, when given, is binarized with
/// `cfg.threshold` and must have `wm_dims`.
pub fn extract(
    host: &RasterImage,
    suspect: &RasterImage,
    cfg: &EmbedConfig,
    wm_dims: (usize, usize),
    reference: Option<&RasterImage>,
) -> Result<ExtractResult> {
    cfg.validate()?;
    let reference = reference.map(|r| binarize(r, cfg.threshold)).transpose()?;
    if let Some(r) = &reference {
        if r.dims() != wm_dims {
            return Err(Error::ShapeMismatch(format!(
                "reference watermark is {:?}, expected {:?}",
                r.dims(),
                wm_dims
            )));
        }
    }
    if wm_dims.0 > crate::aqim::MAX_WATERMARK_SIDE || wm_dims.1 > crate::aqim::MAX_WATERMARK_SIDE {
        return Err(Error::WatermarkTooLarge {
            height: wm_dims.0,
            width: wm_dims.1,
        });
    }
    let start = Instant::now();
    let recovered_bits = recover_bits(host, suspect, &cfg.spec)?;
    let tile_report = split_and_score(&recovered_bits, wm_dims, reference.as_ref())?;
    let extract_seconds = start.elapsed().as_secs_f64();
    let (ber, ncc) = match &reference {
        Some(r) => (
            Some(metrics::ber(
                tile_report.best_tile_bits.matrix(),
                r.matrix(),
            )?),
            Some(metrics::ncc(
                tile_report.best_tile_bits.matrix(),
                r.matrix(),
            )?),
        ),
        None => (None, None),
    };
    Ok(ExtractResult {
        recovered_bits,
        tile_report,
        ber,
        ncc,
        extract_seconds,
    })
}
