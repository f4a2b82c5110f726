use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::image_core::{to_u8, RasterImage};

/// i.i.d. `N(0, sigma^2)` added to every sample, then rounded and clamped.
pub fn gaussian_noise(img: &RasterImage, sigma: f64, seed: u64) -> RasterImage {
    if sigma == 0.0 {
        return img.clone();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = img.clone();
    for v in out.data_mut() {
        let z: f64 = rng.sample(StandardNormal);
        *v = to_u8(*v as f64 + sigma * z);
    }
    out
}

/// Each pixel becomes black or white (all channels, equal odds) with probability `p`.
pub fn sandpaper(img: &RasterImage, p: f64, seed: u64) -> RasterImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = img.clone();
    let ch = img.channels();
    for px in out.data_mut().chunks_exact_mut(ch) {
        let u: f64 = rng.gen();
        if u < p {
            let value = if rng.gen::<bool>() { 255 } else { 0 };
            px.iter_mut().for_each(|v| *v = value);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_severity_is_identity() {
        let img = RasterImage::new(4, 4, 3, (0..48).map(|i| (i * 5) as u8).collect()).unwrap();
        assert_eq!(gaussian_noise(&img, 0.0, 3), img);
        assert_eq!(sandpaper(&img, 0.0, 3), img);
    }

    #[test]
    fn seeded_and_deterministic() {
        let img = RasterImage::filled(64, 64, 3, 128).unwrap();
        assert_eq!(gaussian_noise(&img, 5.0, 1), gaussian_noise(&img, 5.0, 1));
        assert_ne!(gaussian_noise(&img, 5.0, 1), gaussian_noise(&img, 5.0, 2));
        assert_eq!(sandpaper(&img, 0.1, 9), sandpaper(&img, 0.1, 9));
    }

    #[test]
    fn gaussian_sample_moments() {
        let img = RasterImage::filled(256, 256, 1, 128).unwrap();
        let out = gaussian_noise(&img, 10.0, 7);
        let n = out.data().len() as f64;
        let mean = out.data().iter().map(|&v| v as f64).sum::<f64>() / n;
        let var = out
            .data()
            .iter()
            .map(|&v| (v as f64 - mean).powi(2))
            .sum::<f64>()
            / n;
        assert!((mean - 128.0).abs() < 0.2, "mean {mean}");
        // rounding adds 1/12 to the variance
        assert!((var - 100.0 - 1.0 / 12.0).abs() < 2.0, "var {var}");
    }

    #[test]
    fn sandpaper_count_is_binomial() {
        let img = RasterImage::filled(512, 512, 3, 128).unwrap();
        let out = sandpaper(&img, 0.01, 42);
        let hits: Vec<&[u8]> = out.data().chunks(3).filter(|p| p[0] != 128).collect();
        let n = 512.0 * 512.0;
        let mean = n * 0.01;
        let sd = (n * 0.01 * 0.99f64).sqrt();
        assert!(
            ((hits.len() as f64) - mean).abs() <= 3.0 * sd,
            "{} impulses",
            hits.len()
        );
        assert!(hits
            .iter()
            .all(|p| p == &[0, 0, 0] || p == &[255, 255, 255]));
        let white = hits.iter().filter(|p| p[0] == 255).count() as f64;
        let frac = white / hits.len() as f64;
        assert!((frac - 0.5).abs() < 0.05, "white fraction {frac}");
    }
}
