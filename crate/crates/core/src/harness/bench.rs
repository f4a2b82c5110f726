use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{peak_memory_bytes, reset_peak_memory, throughput_mpps};
use crate::aqim::{binarize, EmbedConfig};
use crate::error::{Error, Result};
use crate::image_core::RasterImage;
use crate::pipeline::{embed_bits, extract};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseStats {
    pub samples: Vec<f64>,
    pub min: f64,
    pub median: f64,
    pub mean: f64,
}

impl PhaseStats {
    pub fn from_samples(samples: Vec<f64>) -> Self {
        let mut sorted = samples.clone();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len();
        let median = if n % 2 == 1 {
            sorted[n / 2]
        } else {
            0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
        };
        Self {
            min: sorted[0],
            median,
            mean: samples.iter().sum::<f64>() / n as f64,
            samples,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchSummary {
    pub height: usize,
    pub width: usize,
    pub iterations: usize,
    pub embed: PhaseStats,
    pub extract: PhaseStats,
    /// Host megapixels over the median embed time.
    pub throughput_mpps: f64,
    pub extract_throughput_mpps: f64,
    pub peak_memory_bytes: Option<u64>,
}

/// Time `iterations` embed/extract pairs on the calling thread after one warm-up.
pub fn benchmark(
    host: &RasterImage,
    watermark: &RasterImage,
    cfg: &EmbedConfig,
    iterations: usize,
) -> Result<BenchSummary> {
    if iterations < 3 {
        return Err(Error::InvalidConfig(format!(
            "benchmark needs at least 3 iterations, got {iterations}"
        )));
    }
    cfg.validate()?;
    let wm_dims = watermark.dims();
    let run_once = || -> Result<(f64, f64)> {
        let start = Instant::now();
        let marked =
            binarize(watermark, cfg.threshold).and_then(|wm| embed_bits(host, &wm, cfg))?;
        let embed_s = start.elapsed().as_secs_f64();
        let start = Instant::now();
        extract(host, &marked, cfg, wm_dims, None)?;
        Ok((embed_s, start.elapsed().as_secs_f64()))
    };

    reset_peak_memory();
    run_once()?;
    let mut embed = Vec::with_capacity(iterations);
    let mut extract_times = Vec::with_capacity(iterations);
    for _ in 0..iterations {
        let (e, x) = run_once()?;
        embed.push(e);
        extract_times.push(x);
    }
    let embed = PhaseStats::from_samples(embed);
    let extract = PhaseStats::from_samples(extract_times);
    let pixels = host.pixel_count();
    Ok(BenchSummary {
        height: host.height(),
        width: host.width(),
        iterations,
        throughput_mpps: throughput_mpps(pixels, embed.median),
        extract_throughput_mpps: throughput_mpps(pixels, extract.median),
        embed,
        extract,
        peak_memory_bytes: peak_memory_bytes(),
    })
}
