//! Fidelity (PSNR, SSIM) and payload (BER, NCC) metrics.

use crate::aqim::BitMatrix;
use crate::error::{Error, Result};
use crate::image_core::{luma_plane, Plane, RasterImage};

/// SSIM parameters. The defaults are the usual 11x11 Gaussian window with
/// `sigma = 1.5`, `K1 = 0.01`, `K2 = 0.03` and an 8-bit dynamic range.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricConfig {
    pub ssim_window: usize,
    pub ssim_sigma: f64,
    pub ssim_k1: f64,
    pub ssim_k2: f64,
    pub dynamic_range: f64,
}

impl Default for MetricConfig {
    fn default() -> Self {
        Self {
            ssim_window: 11,
            ssim_sigma: 1.5,
            ssim_k1: 0.01,
            ssim_k2: 0.03,
            dynamic_range: 255.0,
        }
    }
}

impl MetricConfig {
    pub fn c1(&self) -> f64 {
        (self.ssim_k1 * self.dynamic_range).powi(2)
    }

    pub fn c2(&self) -> f64 {
        (self.ssim_k2 * self.dynamic_range).powi(2)
    }

    fn gaussian_kernel(&self) -> Vec<f64> {
        let n = self.ssim_window;
        let center = (n as f64 - 1.0) / 2.0;
        let two_s2 = 2.0 * self.ssim_sigma * self.ssim_sigma;
        let raw: Vec<f64> = (0..n)
            .map(|i| (-(i as f64 - center).powi(2) / two_s2).exp())
            .collect();
        let sum: f64 = raw.iter().sum();
        raw.into_iter().map(|v| v / sum).collect()
    }
}

pub fn mse(a: &RasterImage, b: &RasterImage) -> Result<f64> {
    a.ensure_same_shape(b)?;
    let sum: u64 = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(&x, &y)| {
            let d = x as i64 - y as i64;
            (d * d) as u64
        })
        .sum();
    Ok(sum as f64 / a.data().len() as f64)
}

/// PSNR in dB over all samples of all channels; `f64::INFINITY` for identical inputs.
pub fn psnr(a: &RasterImage, b: &RasterImage) -> Result<f64> {
    let m = mse(a, b)?;
    Ok(psnr_from_mse(m))
}

pub fn psnr_from_mse(mse: f64) -> f64 {
    if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (255.0f64 * 255.0 / mse).log10()
    }
}

/// Mean SSIM of the luminance planes.
pub fn ssim(a: &RasterImage, b: &RasterImage) -> Result<f64> {
    if a.dims() != b.dims() {
        return Err(Error::ShapeMismatch(format!(
            "{:?} vs {:?}",
            a.dims(),
            b.dims()
        )));
    }
    ssim_planes(&luma_plane(a), &luma_plane(b), &MetricConfig::default())
}

/// Half-sample symmetric reflection: `-1 -> 0`, `n -> n - 1`.
#[inline]
fn reflect(i: isize, n: usize) -> usize {
    let n = n as isize;
    let period = 2 * n;
    let mut m = i.rem_euclid(period);
    if m >= n {
        m = period - 1 - m;
    }
    m as usize
}

fn blur(src: &[f64], h: usize, w: usize, kernel: &[f64]) -> Vec<f64> {
    let r = (kernel.len() / 2) as isize;
    let mut tmp = vec![0.0; h * w];
    for y in 0..h {
        let row = &src[y * w..(y + 1) * w];
        let out = &mut tmp[y * w..(y + 1) * w];
        for (x, o) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (k, &c) in kernel.iter().enumerate() {
                acc += c * row[reflect(x as isize + k as isize - r, w)];
            }
            *o = acc;
        }
    }
    let mut out = vec![0.0; h * w];
    for y in 0..h {
        let dst = &mut out[y * w..(y + 1) * w];
        for (k, &c) in kernel.iter().enumerate() {
            let sy = reflect(y as isize + k as isize - r, h);
            let s = &tmp[sy * w..(sy + 1) * w];
            for (o, &v) in dst.iter_mut().zip(s) {
                *o += c * v;
            }
        }
    }
    out
}

/// Mean of the SSIM map between two planes; borders are handled by reflection.
pub fn ssim_planes(a: &Plane, b: &Plane, cfg: &MetricConfig) -> Result<f64> {
    if a.dims() != b.dims() {
        return Err(Error::ShapeMismatch(format!(
            "{:?} vs {:?}",
            a.dims(),
            b.dims()
        )));
    }
    let (h, w) = a.dims();
    if h < cfg.ssim_window || w < cfg.ssim_window {
        return Err(Error::ShapeMismatch(format!(
            "{h}x{w} is smaller than the {}x{} SSIM window",
            cfg.ssim_window, cfg.ssim_window
        )));
    }
    let kernel = cfg.gaussian_kernel();
    let x = a.data();
    let y = b.data();
    let xx: Vec<f64> = x.iter().map(|v| v * v).collect();
    let yy: Vec<f64> = y.iter().map(|v| v * v).collect();
    let xy: Vec<f64> = x.iter().zip(y).map(|(p, q)| p * q).collect();
    let mu_x = blur(x, h, w, &kernel);
    let mu_y = blur(y, h, w, &kernel);
    let e_xx = blur(&xx, h, w, &kernel);
    let e_yy = blur(&yy, h, w, &kernel);
    let e_xy = blur(&xy, h, w, &kernel);
    let (c1, c2) = (cfg.c1(), cfg.c2());
    let mut total = 0.0;
    for i in 0..h * w {
        let (mx, my) = (mu_x[i], mu_y[i]);
        let vx = e_xx[i] - mx * mx;
        let vy = e_yy[i] - my * my;
        let cov = e_xy[i] - mx * my;
        total +=
            ((2.0 * mx * my + c1) * (2.0 * cov + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
    }
    Ok(total / (h * w) as f64)
}

fn same_dims(a: &BitMatrix, b: &BitMatrix) -> Result<()> {
    if a.dims() == b.dims() {
        Ok(())
    } else {
        Err(Error::ShapeMismatch(format!(
            "bit matrices {:?} vs {:?}",
            a.dims(),
            b.dims()
        )))
    }
}

/// Fraction of positions where the bits differ.
pub fn ber(a: &BitMatrix, b: &BitMatrix) -> Result<f64> {
    same_dims(a, b)?;
    if a.is_empty() {
        return Ok(0.0);
    }
    let errors = a
        .bits()
        .iter()
        .zip(b.bits())
        .filter(|(x, y)| x != y)
        .count();
    Ok(errors as f64 / a.len() as f64)
}

/// Normalized cross-correlation of two bit matrices taken as {0, 1} vectors.
pub fn ncc(a: &BitMatrix, b: &BitMatrix) -> Result<f64> {
    same_dims(a, b)?;
    let mut dot = 0usize;
    let (mut na, mut nb) = (0usize, 0usize);
    for (&x, &y) in a.bits().iter().zip(b.bits()) {
        dot += (x & y) as usize;
        na += x as usize;
        nb += y as usize;
    }
    Ok(ncc_from_sums(dot as f64, na as f64, nb as f64))
}

/// NCC of real-valued vectors: `<a, b> / (|a| |b|)`.
pub fn ncc_values(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} vs {} values",
            a.len(),
            b.len()
        )));
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum();
    let nb: f64 = b.iter().map(|y| y * y).sum();
    Ok(ncc_from_sums(dot, na, nb))
}

/// Both-zero gives 1, exactly-one-zero gives 0.
fn ncc_from_sums(dot: f64, norm_a_sq: f64, norm_b_sq: f64) -> f64 {
    match (norm_a_sq == 0.0, norm_b_sq == 0.0) {
        (true, true) => 1.0,
        (true, false) | (false, true) => 0.0,
        (false, false) => dot / (norm_a_sq * norm_b_sq).sqrt(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_image(w: usize, h: usize, c: usize, seed: u64) -> RasterImage {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        RasterImage::new(w, h, c, (0..w * h * c).map(|_| rng.gen()).collect()).unwrap()
    }

    fn random_bits(h: usize, w: usize, seed: u64) -> BitMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        BitMatrix::from_fn(h, w, |_, _| rng.gen_bool(0.5))
    }

    #[test]
    fn psnr_identical_is_infinite() {
        let a = random_image(16, 16, 3, 1);
        assert_eq!(psnr(&a, &a).unwrap(), f64::INFINITY);
    }

    #[test]
    fn psnr_uniform_offset_of_five() {
        let a = RasterImage::filled(10, 10, 3, 100).unwrap();
        let b = RasterImage::filled(10, 10, 3, 105).unwrap();
        let expected = 10.0 * (65025.0f64 / 25.0).log10();
        let got = psnr(&a, &b).unwrap();
        assert!((got - expected).abs() < 1e-12);
        assert!((got - 34.15).abs() < 0.005);
    }

    #[test]
    fn psnr_symmetric_and_shape_checked() {
        let a = random_image(16, 8, 3, 2);
        let b = random_image(16, 8, 3, 3);
        assert_eq!(psnr(&a, &b).unwrap(), psnr(&b, &a).unwrap());
        let c = random_image(8, 16, 3, 3);
        assert!(matches!(psnr(&a, &c), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn psnr_decreases_with_error() {
        let a = RasterImage::filled(8, 8, 1, 100).unwrap();
        let mut last = f64::INFINITY;
        for d in 1..50u8 {
            let b = RasterImage::filled(8, 8, 1, 100 + d).unwrap();
            let p = psnr(&a, &b).unwrap();
            assert!(p < last);
            last = p;
        }
    }

    #[test]
    fn ssim_identity_and_constant_case() {
        let a = random_image(32, 24, 3, 4);
        assert_eq!(ssim(&a, &a).unwrap(), 1.0);
        let x = RasterImage::filled(16, 16, 1, 100).unwrap();
        let y = RasterImage::filled(16, 16, 1, 110).unwrap();
        let c1 = (0.01f64 * 255.0).powi(2);
        let expected = (2.0 * 100.0 * 110.0 + c1) / (100.0f64.powi(2) + 110.0f64.powi(2) + c1);
        let got = ssim(&x, &y).unwrap();
        assert!((got - expected).abs() < 1e-9, "{got} vs {expected}");
        assert!((got - 0.99548).abs() < 1e-5);
    }

    #[test]
    fn ssim_rejects_small_and_mismatched() {
        let a = RasterImage::filled(10, 10, 1, 0).unwrap();
        assert!(ssim(&a, &a).is_err());
        let b = RasterImage::filled(12, 11, 1, 0).unwrap();
        let c = RasterImage::filled(11, 12, 1, 0).unwrap();
        assert!(ssim(&b, &c).is_err());
    }

    #[test]
    fn ber_examples() {
        let w = random_bits(64, 64, 5);
        assert_eq!(ber(&w, &w).unwrap(), 0.0);
        assert_eq!(ber(&w, &w.complement()).unwrap(), 1.0);
        let mut v = w.clone();
        for i in 0..401 {
            let (r, c) = (i / 64, i % 64);
            v.set(r, c, 1 - w.get(r, c));
        }
        let b = ber(&w, &v).unwrap();
        assert_eq!(b, 401.0 / 4096.0);
        assert!((b * 100.0 - 9.79).abs() < 0.005);
    }

    #[test]
    fn ncc_examples() {
        let w = random_bits(16, 16, 6);
        assert_eq!(ncc(&w, &w).unwrap(), 1.0);
        let quarter = BitMatrix::from_fn(8, 8, |r, _| r < 2);
        let ones = BitMatrix::from_fn(8, 8, |_, _| true);
        assert!((ncc(&quarter, &ones).unwrap() - 0.5).abs() < 1e-12);
        let z = BitMatrix::zeros(4, 4);
        assert_eq!(ncc(&z, &z).unwrap(), 1.0);
        assert_eq!(ncc(&z, &ones.block(0, 0, 4, 4)).unwrap(), 0.0);
        assert!(ncc(&z, &ones).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn ber_is_a_metric(s1 in 0u64..10_000, s2 in 0u64..10_000, s3 in 0u64..10_000) {
            let (a, b, c) = (random_bits(12, 9, s1), random_bits(12, 9, s2), random_bits(12, 9, s3));
            prop_assert_eq!(ber(&a, &b).unwrap(), ber(&b, &a).unwrap());
            prop_assert!(ber(&a, &c).unwrap() <= ber(&a, &b).unwrap() + ber(&b, &c).unwrap() + 1e-12);
            prop_assert_eq!(ber(&a, &b).unwrap() == 0.0, a == b);
        }

        #[test]
        fn ncc_scale_invariant(s in 0u64..10_000, lambda in 0.01f64..100.0) {
            let a = random_bits(8, 8, s);
            let b = random_bits(8, 8, s + 7);
            let fa: Vec<f64> = a.bits().iter().map(|&v| v as f64).collect();
            let fb: Vec<f64> = b.bits().iter().map(|&v| v as f64).collect();
            let scaled: Vec<f64> = fb.iter().map(|v| v * lambda).collect();
            let base = ncc_values(&fa, &fb).unwrap();
            prop_assert!((ncc_values(&fa, &scaled).unwrap() - base).abs() < 1e-12);
            prop_assert!((ncc(&a, &b).unwrap() - base).abs() < 1e-12);
        }

        #[test]
        fn ssim_symmetric_and_bounded(s in 0u64..10_000) {
            let a = random_image(16, 14, 3, s);
            let b = random_image(16, 14, 3, s + 1);
            let ab = ssim(&a, &b).unwrap();
            let ba = ssim(&b, &a).unwrap();
            prop_assert!((ab - ba).abs() < 1e-12);
            prop_assert!(ab > -1.0 && ab <= 1.0);
        }
    }
}
