//! Batch evaluation: baseline rows, attack sweeps and timing benchmarks.

mod bench;
mod config;
mod report;

use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::aqim::{binarize, EmbedConfig};
use crate::attacks::{self, AttackSpec};
use crate::error::{Error, Result};
use crate::image_core::{load_image, RasterImage};
use crate::metrics;
use crate::pipeline::{embed_bits, extract, resolve_defaults, WatermarkKind};

pub use bench::{benchmark, BenchSummary, PhaseStats};
pub use config::{AttackGrid, ConfigEntry, SweepConfig};
pub use report::{
    host_metadata, parse_json, read_csv, read_json, read_report, write_csv, write_json, CSV_COLUMNS,
};

/// One evaluation record.
///
/// Baseline rows (`attack == "none"`) carry host-vs-watermarked PSNR/SSIM.
/// Attack rows carry PSNR/SSIM of the attacked (and realigned) image against
/// the watermarked one, i.e. the strength of the attack.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub host_id: String,
    pub watermark_id: String,
    pub alpha: Option<f64>,
    pub level: Option<usize>,
    pub wavelet: String,
    pub attack: String,
    pub seed: u64,
    #[serde(with = "report::maybe_inf")]
    pub psnr_db: Option<f64>,
    pub ssim: Option<f64>,
    pub ber: Option<f64>,
    pub ncc: Option<f64>,
    pub embed_seconds: Option<f64>,
    pub extract_seconds: Option<f64>,
    pub throughput_mpps: Option<f64>,
    pub peak_memory_bytes: Option<u64>,
    pub error: Option<String>,
}

impl EvalRow {
    fn skeleton(
        host_id: &str,
        watermark_id: &str,
        cfg: Option<&EmbedConfig>,
        attack: String,
        seed: u64,
    ) -> Self {
        Self {
            host_id: host_id.to_string(),
            watermark_id: watermark_id.to_string(),
            alpha: cfg.map(|c| c.alpha),
            level: cfg.map(|c| c.spec.level),
            wavelet: cfg.map_or_else(String::new, |c| c.spec.family.to_string()),
            attack,
            seed,
            psnr_db: None,
            ssim: None,
            ber: None,
            ncc: None,
            embed_seconds: None,
            extract_seconds: None,
            throughput_mpps: None,
            peak_memory_bytes: None,
            error: None,
        }
    }

    /// Copy with timing and memory columns cleared, for reproducibility checks.
    pub fn without_timing(&self) -> Self {
        Self {
            embed_seconds: None,
            extract_seconds: None,
            throughput_mpps: None,
            peak_memory_bytes: None,
            ..self.clone()
        }
    }
}

/// Host megapixels per second.
pub fn throughput_mpps(pixels: usize, seconds: f64) -> f64 {
    (pixels as f64 / 1e6) / seconds
}

/// Resident-set high-water mark of this process in bytes (Linux only).
pub fn peak_memory_bytes() -> Option<u64> {
    let status = std::fs::read_to_string("/proc/self/status").ok()?;
    let line = status.lines().find(|l| l.starts_with("VmHWM:"))?;
    let kb: u64 = line.split_whitespace().nth(1)?.parse().ok()?;
    Some(kb * 1024)
}

/// Reset the high-water mark so the next reading covers only what follows.
pub fn reset_peak_memory() {
    let _ = std::fs::write("/proc/self/clear_refs", "5");
}

struct Group<'a> {
    host_id: &'a str,
    host: &'a Result<RasterImage, String>,
    watermark_id: &'a str,
    watermark: &'a Result<RasterImage, String>,
    entry: &'a ConfigEntry,
}

fn load_all(paths: &[std::path::PathBuf]) -> Vec<(String, Result<RasterImage, String>)> {
    paths
        .iter()
        .map(|p| (config::id_for(p), load_image(p).map_err(|e| e.to_string())))
        .collect()
}

fn run_group(group: &Group<'_>, attacks: &[AttackSpec]) -> Vec<EvalRow> {
    let failed = |cfg: Option<&EmbedConfig>, msg: &str| -> Vec<EvalRow> {
        std::iter::once(("none".to_string(), 0))
            .chain(attacks.iter().map(|a| (a.to_string(), a.seed)))
            .map(|(attack, seed)| {
                let mut row =
                    EvalRow::skeleton(group.host_id, group.watermark_id, cfg, attack, seed);
                row.error = Some(msg.to_string());
                row
            })
            .collect()
    };
    let (host, wm_img) = match (group.host, group.watermark) {
        (Ok(h), Ok(w)) => (h, w),
        (Err(e), _) | (_, Err(e)) => return failed(None, e),
    };
    let kind = WatermarkKind::detect(wm_img);
    let cfg = resolve_defaults(host.dims(), wm_img.dims(), kind, &group.entry.partial());
    if let Err(e) = cfg.validate() {
        return failed(Some(&cfg), &e.to_string());
    }
    let wm_dims = wm_img.dims();

    reset_peak_memory();
    let start = Instant::now();
    let embedded = binarize(wm_img, cfg.threshold).and_then(|wm| embed_bits(host, &wm, &cfg));
    let embed_seconds = start.elapsed().as_secs_f64();
    let watermarked = match embedded {
        Ok(w) => w,
        Err(e) => return failed(Some(&cfg), &e.to_string()),
    };
    let throughput = throughput_mpps(host.pixel_count(), embed_seconds);

    let mut rows = Vec::with_capacity(attacks.len() + 1);
    let mut baseline = EvalRow::skeleton(
        group.host_id,
        group.watermark_id,
        Some(&cfg),
        "none".into(),
        0,
    );
    baseline.embed_seconds = Some(embed_seconds);
    baseline.throughput_mpps = Some(throughput);
    let scored = metrics::psnr(host, &watermarked).and_then(|p| {
        let s = metrics::ssim(host, &watermarked)?;
        let ex = extract(host, &watermarked, &cfg, wm_dims, Some(wm_img))?;
        Ok((p, s, ex))
    });
    match scored {
        Ok((p, s, ex)) => {
            baseline.psnr_db = Some(p);
            baseline.ssim = Some(s);
            baseline.ber = ex.ber;
            baseline.ncc = ex.ncc;
            baseline.extract_seconds = Some(ex.extract_seconds);
        }
        Err(e) => baseline.error = Some(e.to_string()),
    }
    baseline.peak_memory_bytes = peak_memory_bytes();
    rows.push(baseline);

    for spec in attacks {
        let mut row = EvalRow::skeleton(
            group.host_id,
            group.watermark_id,
            Some(&cfg),
            spec.to_string(),
            spec.seed,
        );
        row.embed_seconds = Some(embed_seconds);
        row.throughput_mpps = Some(throughput);
        let outcome = attack_and_extract(host, &watermarked, spec).and_then(|suspect| {
            let p = metrics::psnr(&watermarked, &suspect)?;
            let s = metrics::ssim(&watermarked, &suspect)?;
            let ex = extract(host, &suspect, &cfg, wm_dims, Some(wm_img))?;
            Ok((p, s, ex))
        });
        match outcome {
            Ok((p, s, ex)) => {
                row.psnr_db = Some(p);
                row.ssim = Some(s);
                row.ber = ex.ber;
                row.ncc = ex.ncc;
                row.extract_seconds = Some(ex.extract_seconds);
            }
            Err(e) => row.error = Some(e.to_string()),
        }
        row.peak_memory_bytes = peak_memory_bytes();
        rows.push(row);
    }
    rows
}

/// Attack a watermarked image, realigning when the attack changes geometry.
pub fn attack_and_extract(
    host: &RasterImage,
    watermarked: &RasterImage,
    spec: &AttackSpec,
) -> Result<RasterImage> {
    let attacked = attacks::apply(spec, watermarked)?;
    if spec.attack.changes_dims() {
        attacks::realign(spec, &attacked, host.dims())
    } else {
        Ok(attacked)
    }
}

fn run(cfg: &SweepConfig, attacks: &[AttackSpec], jobs: usize) -> Result<Vec<EvalRow>> {
    let hosts = load_all(&cfg.hosts);
    let watermarks = load_all(&cfg.watermarks);
    let configs = cfg.effective_configs();
    let mut groups = Vec::new();
    for (host_id, host) in &hosts {
        for (watermark_id, watermark) in &watermarks {
            for entry in &configs {
                groups.push(Group {
                    host_id,
                    host,
                    watermark_id,
                    watermark,
                    entry,
                });
            }
        }
    }
    let rows: Vec<Vec<EvalRow>> = if jobs <= 1 {
        groups.iter().map(|g| run_group(g, attacks)).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::InvalidConfig(format!("worker pool: {e}")))?;
        pool.install(|| groups.par_iter().map(|g| run_group(g, attacks)).collect())
    };
    Ok(rows.into_iter().flatten().collect())
}

/// One baseline row (no attack) per host x watermark x config.
pub fn run_base_eval(cfg: &SweepConfig) -> Result<Vec<EvalRow>> {
    run_base_eval_jobs(cfg, 1)
}

pub fn run_base_eval_jobs(cfg: &SweepConfig, jobs: usize) -> Result<Vec<EvalRow>> {
    cfg.validate()?;
    run(cfg, &[], jobs)
}

/// Baseline plus one row per attack cell and seed, for each host x watermark x config.
pub fn run_attack_sweep(cfg: &SweepConfig) -> Result<Vec<EvalRow>> {
    run_attack_sweep_jobs(cfg, 1)
}

pub fn run_attack_sweep_jobs(cfg: &SweepConfig, jobs: usize) -> Result<Vec<EvalRow>> {
    cfg.validate()?;
    let attacks = cfg.attack_specs()?;
    run(cfg, &attacks, jobs)
}

/// Run a sweep and write `report.csv` and `report.json` into `dir`.
pub fn write_reports(rows: &[EvalRow], dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_csv(rows, &dir.join("report.csv"))?;
    write_json(rows, &dir.join("report.json"))
}
