//! Crop, rotation, resampling and rotation realignment.
//!
//! Pixel `(col, row)` has its centre at `(col + 0.5, row + 0.5)`. Rotation is
//! about the canvas centre; samples that fall outside the source read black.

use crate::error::{Error, Result};
use crate::image_core::{to_u8, RasterImage};

pub fn crop_center(img: &RasterImage, ratio: f64) -> RasterImage {
    let (h, w) = img.dims();
    let ch = img.channels();
    let keep_h = ((h as f64 * (1.0 - 2.0 * ratio)).round() as usize).min(h);
    let keep_w = ((w as f64 * (1.0 - 2.0 * ratio)).round() as usize).min(w);
    let top = (h - keep_h) / 2;
    let left = (w - keep_w) / 2;
    let mut out = RasterImage::filled(w, h, ch, 0).expect("same dims");
    let stride = w * ch;
    for r in top..top + keep_h {
        let span = r * stride + left * ch..r * stride + (left + keep_w) * ch;
        out.data_mut()[span.clone()].copy_from_slice(&img.data()[span]);
    }
    out
}

/// Cosine and sine with exact zeros at multiples of 90 degrees.
fn trig(degrees: f64) -> (f64, f64) {
    let rad = degrees.to_radians();
    let snap = |v: f64| {
        if v.abs() < 1e-12 {
            0.0
        } else if (v.abs() - 1.0).abs() < 1e-12 {
            v.signum()
        } else {
            v
        }
    };
    (snap(rad.cos()), snap(rad.sin()))
}

/// `(height, width)` of the enlarged canvas for a rotation by `degrees`.
pub fn rotated_dims(height: usize, width: usize, degrees: f64) -> (usize, usize) {
    let (c, s) = trig(degrees);
    let (h, w) = (height as f64, width as f64);
    let ow = (w * c.abs() + h * s.abs() - 1e-9).ceil().max(1.0) as usize;
    let oh = (w * s.abs() + h * c.abs() - 1e-9).ceil().max(1.0) as usize;
    (oh, ow)
}

/// Bilinear sample at continuous pixel coordinates; out-of-range taps read 0.
#[inline]
fn sample_black(img: &RasterImage, x: f64, y: f64, out: &mut [f64]) {
    let (h, w) = (img.height() as isize, img.width() as isize);
    let ch = img.channels();
    out.iter_mut().for_each(|v| *v = 0.0);
    if x <= -1.0 || y <= -1.0 || x >= w as f64 || y >= h as f64 {
        return;
    }
    let x0 = x.floor();
    let y0 = y.floor();
    let fx = x - x0;
    let fy = y - y0;
    let (x0, y0) = (x0 as isize, y0 as isize);
    let taps = [
        (x0, y0, (1.0 - fx) * (1.0 - fy)),
        (x0 + 1, y0, fx * (1.0 - fy)),
        (x0, y0 + 1, (1.0 - fx) * fy),
        (x0 + 1, y0 + 1, fx * fy),
    ];
    for (tx, ty, wgt) in taps {
        if wgt == 0.0 || tx < 0 || ty < 0 || tx >= w || ty >= h {
            continue;
        }
        let px = img.pixel(ty as usize, tx as usize);
        for (o, &p) in out.iter_mut().zip(px) {
            *o += wgt * p as f64;
        }
    }
    debug_assert!(ch == out.len());
}

/// Counter-clockwise rotation (as displayed) with the canvas enlarged to hold every corner.
pub fn rotate(img: &RasterImage, degrees: f64) -> RasterImage {
    let (h, w) = img.dims();
    let (oh, ow) = rotated_dims(h, w, degrees);
    let (c, s) = trig(degrees);
    let ch = img.channels();
    let mut data = Vec::with_capacity(oh * ow * ch);
    let mut px = vec![0.0; ch];
    for v in 0..oh {
        let dy = v as f64 + 0.5 - oh as f64 / 2.0;
        for u in 0..ow {
            let dx = u as f64 + 0.5 - ow as f64 / 2.0;
            let sx = w as f64 / 2.0 + (dx * c - dy * s) - 0.5;
            let sy = h as f64 / 2.0 + (dx * s + dy * c) - 0.5;
            sample_black(img, sx, sy, &mut px);
            data.extend(px.iter().map(|&p| to_u8(p)));
        }
    }
    RasterImage::new(ow, oh, ch, data).expect("rotated dims")
}

/// Map each pixel of an `original_dims` frame forward into the rotated canvas
/// and sample it there.
pub fn realign_rotation(
    attacked: &RasterImage,
    degrees: f64,
    original_dims: (usize, usize),
) -> Result<RasterImage> {
    let (h, w) = original_dims;
    if h == 0 || w == 0 {
        return Err(Error::ShapeMismatch(
            "original dims must be positive".into(),
        ));
    }
    let expected = rotated_dims(h, w, degrees);
    if attacked.dims() != expected {
        return Err(Error::ShapeMismatch(format!(
            "rotated image is {:?}, a {degrees} degree rotation of {:?} gives {:?}",
            attacked.dims(),
            original_dims,
            expected
        )));
    }
    let (oh, ow) = expected;
    let (c, s) = trig(degrees);
    let ch = attacked.channels();
    let mut data = Vec::with_capacity(h * w * ch);
    let mut px = vec![0.0; ch];
    for v in 0..h {
        let dy = v as f64 + 0.5 - h as f64 / 2.0;
        for u in 0..w {
            let dx = u as f64 + 0.5 - w as f64 / 2.0;
            let sx = ow as f64 / 2.0 + (dx * c + dy * s) - 0.5;
            let sy = oh as f64 / 2.0 + (-dx * s + dy * c) - 0.5;
            sample_black(attacked, sx, sy, &mut px);
            data.extend(px.iter().map(|&p| to_u8(p)));
        }
    }
    RasterImage::new(w, h, ch, data)
}

/// Source coordinate of a destination sample under pixel-centre alignment.
#[inline]
fn source_coord(dst: usize, src_len: usize, dst_len: usize) -> f64 {
    (dst as f64 + 0.5) * (src_len as f64 / dst_len as f64) - 0.5
}

/// Bilinear resize with edge clamping (no prefiltering).
pub fn bilinear_resize(img: &RasterImage, new_h: usize, new_w: usize) -> RasterImage {
    let (h, w) = img.dims();
    let ch = img.channels();
    let axis = |dst_len: usize, src_len: usize| -> Vec<(usize, usize, f64)> {
        (0..dst_len)
            .map(|d| {
                let s = source_coord(d, src_len, dst_len).clamp(0.0, (src_len - 1) as f64);
                let i0 = s.floor() as usize;
                let i1 = (i0 + 1).min(src_len - 1);
                (i0, i1, s - i0 as f64)
            })
            .collect()
    };
    let xs = axis(new_w, w);
    let ys = axis(new_h, h);
    let mut data = Vec::with_capacity(new_h * new_w * ch);
    for &(y0, y1, fy) in &ys {
        for &(x0, x1, fx) in &xs {
            let (a, b) = (img.pixel(y0, x0), img.pixel(y0, x1));
            let (c, d) = (img.pixel(y1, x0), img.pixel(y1, x1));
            for k in 0..ch {
                let top = a[k] as f64 * (1.0 - fx) + b[k] as f64 * fx;
                let bottom = c[k] as f64 * (1.0 - fx) + d[k] as f64 * fx;
                data.push(to_u8(top * (1.0 - fy) + bottom * fy));
            }
        }
    }
    RasterImage::new(new_w, new_h, ch, data).expect("resize dims")
}

pub fn nearest_resize(img: &RasterImage, new_h: usize, new_w: usize) -> RasterImage {
    let (h, w) = img.dims();
    let ch = img.channels();
    let pick = |d: usize, src_len: usize, dst_len: usize| -> usize {
        (((d as f64 + 0.5) * src_len as f64 / dst_len as f64).floor() as usize).min(src_len - 1)
    };
    let xs: Vec<usize> = (0..new_w).map(|d| pick(d, w, new_w)).collect();
    let mut data = Vec::with_capacity(new_h * new_w * ch);
    for d in 0..new_h {
        let sy = pick(d, h, new_h);
        for &sx in &xs {
            data.extend_from_slice(img.pixel(sy, sx));
        }
    }
    RasterImage::new(new_w, new_h, ch, data).expect("resize dims")
}
