//! Pixel rasters, float planes, luminance/chrominance conversion and file I/O.

use std::fs;
use std::io::Cursor;
use std::path::Path;

use image::{DynamicImage, ImageFormat};

use crate::error::{Error, Result};

/// 8-bit interleaved raster, either grayscale (1 channel) or RGB (3 channels).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RasterImage {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<u8>,
}

impl RasterImage {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidImage(format!(
                "dimensions must be positive, got {width}x{height}"
            )));
        }
        if channels != 1 && channels != 3 {
            return Err(Error::InvalidImage(format!(
                "channels must be 1 or 3, got {channels}"
            )));
        }
        if data.len() != width * height * channels {
            return Err(Error::InvalidImage(format!(
                "sample count {} does not match {width}x{height}x{channels}",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    /// A raster with every sample set to `value`.
    pub fn filled(width: usize, height: usize, channels: usize, value: u8) -> Result<Self> {
        Self::new(
            width,
            height,
            channels,
            vec![value; width * height * channels],
        )
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    /// `(height, width)`, the order used for planes throughout the crate.
    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [u8] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    pub fn is_rgb(&self) -> bool {
        self.channels == 3
    }

    pub fn sample(&self, row: usize, col: usize, channel: usize) -> u8 {
        self.data[(row * self.width + col) * self.channels + channel]
    }

    pub fn pixel(&self, row: usize, col: usize) -> &[u8] {
        let start = (row * self.width + col) * self.channels;
        &self.data[start..start + self.channels]
    }

    pub fn same_shape(&self, other: &RasterImage) -> bool {
        self.width == other.width && self.height == other.height && self.channels == other.channels
    }

    pub(crate) fn ensure_same_shape(&self, other: &RasterImage) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::ShapeMismatch(format!(
                "{}x{}x{} vs {}x{}x{}",
                self.height, self.width, self.channels, other.height, other.width, other.channels
            )))
        }
    }
}

/// Row-major plane of `f64` samples.
#[derive(Clone, Debug, PartialEq)]
pub struct Plane {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Plane {
    pub fn new(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::ShapeMismatch(format!(
                "plane data has {} samples, expected {height}x{width}",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn zeros(height: usize, width: usize) -> Self {
        Self::filled(height, width, 0.0)
    }

    pub fn filled(height: usize, width: usize, value: f64) -> Self {
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for r in 0..height {
            for c in 0..width {
                data.push(f(r, c));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.width + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.data[row * self.width + col] = value;
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.width..(row + 1) * self.width]
    }

    pub fn energy(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    pub fn max_abs_diff(&self, other: &Plane) -> f64 {
        assert_eq!(self.dims(), other.dims(), "plane dims differ");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Full-resolution luminance and chrominance planes.
#[derive(Clone, Debug, PartialEq)]
pub struct YCbCrPlanes {
    pub y: Plane,
    pub cb: Plane,
    pub cr: Plane,
}

impl YCbCrPlanes {
    pub fn dims(&self) -> (usize, usize) {
        self.y.dims()
    }
}

/// Luma of one RGB triple, rounded to the nearest gray level.
#[inline]
pub fn luma(r: u8, g: u8, b: u8) -> f64 {
    (0.299 * r as f64 + 0.587 * g as f64 + 0.114 * b as f64).round()
}

#[inline]
fn chroma(r: u8, g: u8, b: u8) -> (f64, f64) {
    let (r, g, b) = (r as f64, g as f64, b as f64);
    let cb = 128.0 - 0.168736 * r - 0.331264 * g + 0.5 * b;
    let cr = 128.0 + 0.5 * r - 0.418688 * g - 0.081312 * b;
    (cb, cr)
}

/// Round to the nearest integer and clamp to the 8-bit range.
#[inline]
pub fn to_u8(x: f64) -> u8 {
    x.round().clamp(0.0, 255.0) as u8
}

/// Full-range YCbCr decomposition of an RGB raster. Y is rounded, Cb/Cr are not.
pub fn rgb_to_ycbcr(img: &RasterImage) -> Result<YCbCrPlanes> {
    if img.channels() != 3 {
        return Err(Error::ChannelMismatch {
            expected: 3,
            found: img.channels(),
        });
    }
    let n = img.pixel_count();
    let mut y = Vec::with_capacity(n);
    let mut cb = Vec::with_capacity(n);
    let mut cr = Vec::with_capacity(n);
    for px in img.data().chunks_exact(3) {
        let (r, g, b) = (px[0], px[1], px[2]);
        y.push(luma(r, g, b));
        let (u, v) = chroma(r, g, b);
        cb.push(u);
        cr.push(v);
    }
    let (h, w) = img.dims();
    Ok(YCbCrPlanes {
        y: Plane::new(h, w, y)?,
        cb: Plane::new(h, w, cb)?,
        cr: Plane::new(h, w, cr)?,
    })
}

/// Inverse of [`rgb_to_ycbcr`], rounding and clamping each channel.
pub fn ycbcr_to_rgb(planes: &YCbCrPlanes) -> Result<RasterImage> {
    let dims = planes.y.dims();
    if planes.cb.dims() != dims || planes.cr.dims() != dims {
        return Err(Error::ShapeMismatch(format!(
            "Y {:?}, Cb {:?}, Cr {:?}",
            dims,
            planes.cb.dims(),
            planes.cr.dims()
        )));
    }
    let mut data = Vec::with_capacity(planes.y.len() * 3);
    for ((&y, &cb), &cr) in planes
        .y
        .data()
        .iter()
        .zip(planes.cb.data())
        .zip(planes.cr.data())
    {
        let (u, v) = (cb - 128.0, cr - 128.0);
        data.push(to_u8(y + 1.402 * v));
        data.push(to_u8(y - 0.344136 * u - 0.714136 * v));
        data.push(to_u8(y + 1.772 * u));
    }
    RasterImage::new(dims.1, dims.0, 3, data)
}

/// Luminance plane of any raster: Y for RGB, the samples themselves for grayscale.
pub fn luma_plane(img: &RasterImage) -> Plane {
    let data = match img.channels() {
        3 => img
            .data()
            .chunks_exact(3)
            .map(|px| luma(px[0], px[1], px[2]))
            .collect(),
        _ => img.data().iter().map(|&v| v as f64).collect(),
    };
    Plane {
        width: img.width(),
        height: img.height(),
        data,
    }
}

/// Grayscale raster from a float plane (round, clamp).
pub fn plane_to_gray(plane: &Plane) -> RasterImage {
    let data = plane.data().iter().map(|&v| to_u8(v)).collect();
    RasterImage {
        width: plane.width(),
        height: plane.height(),
        channels: 1,
        data,
    }
}

/// YCbCr planes for any raster; grayscale input gets neutral chroma.
pub fn to_ycbcr(img: &RasterImage) -> Result<YCbCrPlanes> {
    if img.is_rgb() {
        rgb_to_ycbcr(img)
    } else {
        let (h, w) = img.dims();
        Ok(YCbCrPlanes {
            y: luma_plane(img),
            cb: Plane::filled(h, w, 128.0),
            cr: Plane::filled(h, w, 128.0),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FileFormat {
    Png,
    Bmp,
    Jpeg,
}

impl FileFormat {
    pub fn from_path(path: &Path) -> Result<Self> {
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| e.to_ascii_lowercase())
            .unwrap_or_default();
        match ext.as_str() {
            "png" => Ok(FileFormat::Png),
            "bmp" => Ok(FileFormat::Bmp),
            "jpg" | "jpeg" => Ok(FileFormat::Jpeg),
            other => Err(Error::UnsupportedFormat(format!(
                "'{}' (extension '{other}'; expected png, bmp, jpg or jpeg)",
                path.display()
            ))),
        }
    }

    pub fn is_lossless(self) -> bool {
        !matches!(self, FileFormat::Jpeg)
    }

    fn image_format(self) -> ImageFormat {
        match self {
            FileFormat::Png => ImageFormat::Png,
            FileFormat::Bmp => ImageFormat::Bmp,
            FileFormat::Jpeg => ImageFormat::Jpeg,
        }
    }
}

pub const DEFAULT_JPEG_QUALITY: u8 = 90;

fn from_dynamic(img: DynamicImage) -> Result<RasterImage> {
    if img.color().has_alpha() {
        log::warn!("alpha channel stripped on load");
    }
    let (w, h) = (img.width() as usize, img.height() as usize);
    if img.color().has_color() {
        RasterImage::new(w, h, 3, img.into_rgb8().into_raw())
    } else {
        RasterImage::new(w, h, 1, img.into_luma8().into_raw())
    }
}

fn decode(bytes: &[u8], format: FileFormat) -> Result<RasterImage> {
    let img = image::load_from_memory_with_format(bytes, format.image_format())
        .map_err(|e| Error::Decode(e.to_string()))?;
    from_dynamic(img)
}

/// Load a PNG, BMP or JPEG file; the extension selects the decoder.
pub fn load_image(path: impl AsRef<Path>) -> Result<RasterImage> {
    let path = path.as_ref();
    let format = FileFormat::from_path(path)?;
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes, format).map_err(|e| match e {
        Error::Decode(msg) => Error::Decode(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn save_image(img: &RasterImage, path: impl AsRef<Path>) -> Result<()> {
    save_image_with_quality(img, path, DEFAULT_JPEG_QUALITY)
}

/// Save by extension. `quality` applies to JPEG only.
pub fn save_image_with_quality(
    img: &RasterImage,
    path: impl AsRef<Path>,
    quality: u8,
) -> Result<()> {
    let path = path.as_ref();
    let format = FileFormat::from_path(path)?;
    let bytes = encode(img, format, quality)?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn encode(img: &RasterImage, format: FileFormat, quality: u8) -> Result<Vec<u8>> {
    match format {
        FileFormat::Jpeg => encode_jpeg(img, quality),
        FileFormat::Png | FileFormat::Bmp => {
            let color = if img.is_rgb() {
                image::ExtendedColorType::Rgb8
            } else {
                image::ExtendedColorType::L8
            };
            let mut out = Cursor::new(Vec::new());
            image::write_buffer_with_format(
                &mut out,
                img.data(),
                img.width() as u32,
                img.height() as u32,
                color,
                format.image_format(),
            )
            .map_err(|e| Error::Encode(e.to_string()))?;
            Ok(out.into_inner())
        }
    }
}

/// Baseline JPEG with 4:2:0 chroma subsampling and the standard quality-scaled tables.
pub fn encode_jpeg(img: &RasterImage, quality: u8) -> Result<Vec<u8>> {
    if !(1..=100).contains(&quality) {
        return Err(Error::Encode(format!(
            "JPEG quality must be in 1..=100, got {quality}"
        )));
    }
    let (w, h) = (img.width(), img.height());
    if w > u16::MAX as usize || h > u16::MAX as usize {
        return Err(Error::Encode(format!("{w}x{h} exceeds JPEG size limits")));
    }
    let mut out = Vec::new();
    let mut encoder = jpeg_encoder::Encoder::new(&mut out, quality);
    encoder.set_sampling_factor(jpeg_encoder::SamplingFactor::R_4_2_0);
    let color = if img.is_rgb() {
        jpeg_encoder::ColorType::Rgb
    } else {
        jpeg_encoder::ColorType::Luma
    };
    encoder
        .encode(img.data(), w as u16, h as u16, color)
        .map_err(|e| Error::Encode(e.to_string()))?;
    Ok(out)
}

pub fn decode_jpeg(bytes: &[u8]) -> Result<RasterImage> {
    decode(bytes, FileFormat::Jpeg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rgb(r: u8, g: u8, b: u8) -> RasterImage {
        RasterImage::new(1, 1, 3, vec![r, g, b]).unwrap()
    }

    #[test]
    fn raster_rejects_bad_lengths_and_channels() {
        assert!(RasterImage::new(2, 2, 3, vec![0; 11]).is_err());
        assert!(RasterImage::new(2, 2, 2, vec![0; 8]).is_err());
        assert!(RasterImage::new(0, 2, 1, vec![]).is_err());
        assert!(RasterImage::new(2, 2, 1, vec![0; 4]).is_ok());
    }

    #[test]
    fn luma_of_primaries() {
        let p = rgb_to_ycbcr(&rgb(255, 255, 255)).unwrap();
        assert_eq!(p.y.data()[0], 255.0);
        let p = rgb_to_ycbcr(&rgb(0, 0, 0)).unwrap();
        assert_eq!(p.y.data()[0], 0.0);
        assert_eq!(p.cb.data()[0], 128.0);
        assert_eq!(p.cr.data()[0], 128.0);
        let p = rgb_to_ycbcr(&rgb(255, 0, 0)).unwrap();
        assert_eq!(p.y.data()[0], 76.0);
    }

    #[test]
    fn single_channel_is_rejected() {
        let gray = RasterImage::filled(2, 2, 1, 7).unwrap();
        assert!(matches!(
            rgb_to_ycbcr(&gray),
            Err(Error::ChannelMismatch {
                expected: 3,
                found: 1
            })
        ));
    }

    #[test]
    fn neutral_chroma_inverse() {
        let planes = YCbCrPlanes {
            y: Plane::new(1, 2, vec![255.0, 0.0]).unwrap(),
            cb: Plane::filled(1, 2, 128.0),
            cr: Plane::filled(1, 2, 128.0),
        };
        let img = ycbcr_to_rgb(&planes).unwrap();
        assert_eq!(img.data(), &[255, 255, 255, 0, 0, 0]);
    }

    #[test]
    fn mismatched_planes_rejected() {
        let planes = YCbCrPlanes {
            y: Plane::zeros(2, 2),
            cb: Plane::zeros(2, 3),
            cr: Plane::zeros(2, 2),
        };
        assert!(matches!(
            ycbcr_to_rgb(&planes),
            Err(Error::ShapeMismatch(_))
        ));
    }

    #[test]
    fn round_trip_within_one_level_on_sampled_cube() {
        let mut data = Vec::new();
        for r in (0..=255u16).step_by(5) {
            for g in (0..=255u16).step_by(3) {
                for b in (0..=255u16).step_by(7) {
                    data.extend_from_slice(&[r as u8, g as u8, b as u8]);
                }
            }
        }
        let n = data.len() / 3;
        let img = RasterImage::new(n, 1, 3, data).unwrap();
        let back = ycbcr_to_rgb(&rgb_to_ycbcr(&img).unwrap()).unwrap();
        let worst = img
            .data()
            .iter()
            .zip(back.data())
            .map(|(&a, &b)| (a as i16 - b as i16).abs())
            .max()
            .unwrap();
        assert!(worst <= 1, "worst channel error {worst}");
    }

    #[test]
    fn luma_rounding_bound() {
        for r in (0..=255u8).step_by(17) {
            for g in (0..=255u8).step_by(13) {
                for b in 0..=255u8 {
                    let exact = 0.299 * r as f64 + 0.587 * g as f64 + 0.114 * b as f64;
                    assert!((luma(r, g, b) - exact).abs() <= 0.5 + 1e-12);
                }
            }
        }
    }

    #[test]
    fn format_by_extension() {
        assert_eq!(
            FileFormat::from_path(Path::new("a.PNG")).unwrap(),
            FileFormat::Png
        );
        assert_eq!(
            FileFormat::from_path(Path::new("a.jpeg")).unwrap(),
            FileFormat::Jpeg
        );
        assert!(matches!(
            FileFormat::from_path(Path::new("a.gif")),
            Err(Error::UnsupportedFormat(_))
        ));
    }

    #[test]
    fn jpeg_round_trip_preserves_dims() {
        let img = RasterImage::new(
            33,
            17,
            3,
            (0..33 * 17 * 3).map(|i| (i * 7 % 256) as u8).collect(),
        )
        .unwrap();
        let bytes = encode_jpeg(&img, 70).unwrap();
        let back = decode_jpeg(&bytes).unwrap();
        assert_eq!(back.dims(), img.dims());
        assert_eq!(back.channels(), 3);
    }
}
