//! Per-channel k x k median with a sliding 256-bin histogram.

use crate::image_core::RasterImage;

/// Half-sample symmetric reflection (`-1 -> 0`, `n -> n - 1`).
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

pub fn median_filter(img: &RasterImage, kernel: usize) -> RasterImage {
    if kernel <= 1 {
        return img.clone();
    }
    let (h, w) = img.dims();
    let ch = img.channels();
    let r = (kernel / 2) as isize;
    let rank = (kernel * kernel) / 2;
    let src = img.data();
    let mut out = img.clone();
    let dst = out.data_mut();
    let cols: Vec<usize> = (-r..w as isize + r).map(|x| reflect(x, w)).collect();
    let mut rows = vec![0usize; kernel];
    for c in 0..ch {
        for y in 0..h {
            for (k, row) in rows.iter_mut().enumerate() {
                *row = reflect(y as isize + k as isize - r, h);
            }
            let mut hist = [0u32; 256];
            for &sx in &cols[..kernel] {
                for &sy in &rows {
                    hist[src[(sy * w + sx) * ch + c] as usize] += 1;
                }
            }
            for x in 0..w {
                if x > 0 {
                    let old = cols[x - 1];
                    let new = cols[x - 1 + kernel];
                    for &sy in &rows {
                        hist[src[(sy * w + old) * ch + c] as usize] -= 1;
                        hist[src[(sy * w + new) * ch + c] as usize] += 1;
                    }
                }
                let mut seen = 0usize;
                let mut m = 0usize;
                for (v, &count) in hist.iter().enumerate() {
                    seen += count as usize;
                    if seen > rank {
                        m = v;
                        break;
                    }
                }
                dst[(y * w + x) * ch + c] = m as u8;
            }
        }
    }
    out
}
