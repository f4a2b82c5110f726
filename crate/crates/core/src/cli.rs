use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use lumamark::aqim::{binarize, EmbedConfig};
use lumamark::attacks::{self, AttackSpec};
use lumamark::harness::{self, EvalRow, SweepConfig};
use lumamark::image_core::{load_image, save_image, FileFormat};
use lumamark::pipeline::{self, resolve_defaults, PartialConfig, WatermarkKind};
use lumamark::wavelet::Family;
use lumamark::{metrics, Error};

/// Luminance wavelet watermarking: embed, extract, attack, evaluate, bench.
#[derive(Debug, Parser)]
#[command(name = "lumamark", version)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Embed a watermark into a host image.
    Embed(EmbedArgs),
    /// Recover a watermark by comparing a suspect image with its host.
    Extract(ExtractArgs),
    /// Apply one simulated attack to an image.
    Attack(AttackArgs),
    /// Run a batch evaluation described by a TOML sweep config.
    Evaluate(EvaluateArgs),
    /// Time repeated embed/extract runs on one host.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
struct ParamArgs {
    /// Quantization step; resolved from the level and watermark kind when omitted.
    #[arg(long, value_parser = positive_f64)]
    alpha: Option<f64>,
    /// Decomposition depth; resolved from host and watermark size when omitted.
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..=16))]
    level: Option<u32>,
    /// Daubechies family, db1 to db8.
    #[arg(long, default_value = "db3")]
    wavelet: Family,
    /// Binarization threshold on watermark luma.
    #[arg(long, default_value_t = 128)]
    threshold: u8,
}

impl ParamArgs {
    fn partial(&self) -> PartialConfig {
        PartialConfig {
            alpha: self.alpha,
            level: self.level.map(|l| l as usize),
            wavelet: Some(self.wavelet),
            threshold: Some(self.threshold),
        }
    }
}

#[derive(Debug, Args)]
struct EmbedArgs {
    #[arg(long)]
    host: PathBuf,
    #[arg(long)]
    watermark: PathBuf,
    /// Output path (PNG or BMP).
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    params: ParamArgs,
    /// Print a JSON report row instead of text.
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct ExtractArgs {
    #[arg(long)]
    host: PathBuf,
    /// Suspect (watermarked, possibly attacked) image.
    #[arg(long)]
    input: PathBuf,
    /// Watermark size as WIDTHxHEIGHT; defaults to the reference size.
    #[arg(long, value_parser = parse_size)]
    wm_size: Option<(usize, usize)>,
    /// Original watermark, for BER/NCC and tile selection.
    #[arg(long)]
    reference: Option<PathBuf>,
    /// Where to write the recovered watermark (PNG or BMP).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Undo a rotation before extraction, e.g. rotate:30.
    #[arg(long, value_parser = parse_realign)]
    realign: Option<f64>,
    #[command(flatten)]
    params: ParamArgs,
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct AttackArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Attack kind: crop, rotate, scale, gaussian, jpeg, median, resize, sandpaper.
    #[arg(long = "type")]
    kind: String,
    /// Severity as key=value, e.g. q=70, sigma=5, theta=30.
    #[arg(long = "param", value_parser = parse_kv)]
    params: Vec<(String, String)>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also write the realigned image (rotate only) to this path.
    #[arg(long)]
    realign_out: Option<PathBuf>,
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    /// Baseline rows only.
    Base,
    /// Baseline plus every attack cell.
    Sweep,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[arg(long)]
    config: PathBuf,
    /// Report directory; overrides output_dir from the config.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..=256))]
    jobs: u32,
    #[arg(long, value_enum, default_value_t = Mode::Sweep)]
    mode: Mode,
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[arg(long)]
    host: PathBuf,
    #[arg(long)]
    watermark: PathBuf,
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u32).range(3..))]
    iterations: u32,
    #[command(flatten)]
    params: ParamArgs,
    #[arg(long)]
    json: bool,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Lib(Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Lib(e) if e.is_constraint() => 4,
            CliError::Lib(e) if e.is_io() => 3,
            CliError::Lib(Error::InvalidConfig(_) | Error::BadAttackParameter(_)) => 2,
            CliError::Lib(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => f.write_str(m),
            CliError::Lib(e) => write!(f, "{e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Lib(e)
    }
}

type CliResult<T = ()> = Result<T, CliError>;

fn positive_f64(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("'{s}' is not a number"))?;
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err("must be a positive finite number".into())
    }
}

/// `WIDTHxHEIGHT` to `(height, width)`.
fn parse_size(s: &str) -> Result<(usize, usize), String> {
    let (w, h) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected WIDTHxHEIGHT, got '{s}'"))?;
    let w: usize = w
        .trim()
        .parse()
        .map_err(|_| format!("bad width in '{s}'"))?;
    let h: usize = h
        .trim()
        .parse()
        .map_err(|_| format!("bad height in '{s}'"))?;
    if w == 0 || h == 0 {
        return Err("sizes must be positive".into());
    }
    Ok((h, w))
}

fn parse_realign(s: &str) -> Result<f64, String> {
    let theta = s
        .strip_prefix("rotate:")
        .ok_or_else(|| format!("expected rotate:THETA, got '{s}'"))?;
    let v: f64 = theta.parse().map_err(|_| format!("bad angle '{theta}'"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err("angle must be finite".into())
    }
}

fn parse_kv(s: &str) -> Result<(String, String), String> {
    s.split_once('=')
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .ok_or_else(|| format!("expected key=value, got '{s}'"))
}

fn require_lossless(path: &Path) -> CliResult {
    match FileFormat::from_path(path) {
        Ok(f) if f.is_lossless() => Ok(()),
        Ok(_) => Err(CliError::Usage(format!(
            "{}: output must be PNG or BMP; lossy output would damage the watermark",
            path.display()
        ))),
        Err(e) => Err(CliError::Usage(e.to_string())),
    }
}

fn check_output(path: &Path) -> CliResult {
    FileFormat::from_path(path)
        .map(|_| ())
        .map_err(|e| CliError::Usage(e.to_string()))
}

fn id_of(path: &Path) -> String {
    path.file_stem().map_or_else(
        || path.display().to_string(),
        |s| s.to_string_lossy().into_owned(),
    )
}

fn echo_config(cfg: &EmbedConfig) {
    eprintln!(
        "config: alpha={} level={} wavelet={} threshold={}",
        cfg.alpha, cfg.spec.level, cfg.spec.family, cfg.threshold
    );
}

fn row(
    host: &Path,
    watermark: &str,
    cfg: Option<&EmbedConfig>,
    attack: String,
    seed: u64,
) -> EvalRow {
    EvalRow {
        host_id: id_of(host),
        watermark_id: watermark.to_string(),
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

fn print_json(rows: &[EvalRow]) -> CliResult {
    let text = serde_json::to_string_pretty(rows)
        .map_err(|e| CliError::Lib(Error::Report(e.to_string())))?;
    println!("{text}");
    Ok(())
}

pub fn run(cli: Cli) -> CliResult {
    match cli.command {
        Command::Embed(a) => embed(a),
        Command::Extract(a) => extract(a),
        Command::Attack(a) => attack(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Bench(a) => bench(a),
    }
}

fn embed(a: EmbedArgs) -> CliResult {
    require_lossless(&a.out)?;
    let host = load_image(&a.host)?;
    let wm = load_image(&a.watermark)?;
    let cfg = resolve_defaults(
        host.dims(),
        wm.dims(),
        WatermarkKind::detect(&wm),
        &a.params.partial(),
    );
    echo_config(&cfg);
    let res = pipeline::embed(&host, &wm, &cfg)?;
    save_image(&res.watermarked, &a.out)?;
    if a.json {
        let mut r = row(&a.host, &id_of(&a.watermark), Some(&cfg), "none".into(), 0);
        r.psnr_db = Some(res.psnr_db);
        r.ssim = Some(res.ssim);
        r.embed_seconds = Some(res.embed_seconds);
        r.throughput_mpps = Some(harness::throughput_mpps(
            host.pixel_count(),
            res.embed_seconds,
        ));
        r.peak_memory_bytes = harness::peak_memory_bytes();
        print_json(&[r])
    } else {
        println!(
            "PSNR={:.2} SSIM={:.4} embed_seconds={:.4} -> {}",
            res.psnr_db,
            res.ssim,
            res.embed_seconds,
            a.out.display()
        );
        Ok(())
    }
}

fn extract(a: ExtractArgs) -> CliResult {
    if let Some(out) = &a.out {
        require_lossless(out)?;
    }
    let host = load_image(&a.host)?;
    let mut suspect = load_image(&a.input)?;
    let reference = a.reference.as_deref().map(load_image).transpose()?;
    let wm_dims = match (a.wm_size, &reference) {
        (Some(d), _) => d,
        (None, Some(r)) => r.dims(),
        (None, None) => {
            return Err(CliError::Usage(
                "--wm-size is required when no --reference is given".into(),
            ))
        }
    };
    if let Some(theta) = a.realign {
        let spec = AttackSpec::new(attacks::Attack::Rotate { degrees: theta }, 0)?;
        suspect = attacks::realign(&spec, &suspect, host.dims())?;
    }
    let kind = reference
        .as_ref()
        .map_or(WatermarkKind::Binary, WatermarkKind::detect);
    let cfg = resolve_defaults(host.dims(), wm_dims, kind, &a.params.partial());
    echo_config(&cfg);
    let res = pipeline::extract(&host, &suspect, &cfg, wm_dims, reference.as_ref())?;
    if let Some(out) = &a.out {
        save_image(&res.tile_report.best_tile_bits.matrix().to_image(), out)?;
    }
    let (tr, tc) = res.tile_report.best_tile_index;
    if a.json {
        let wm_id = a
            .reference
            .as_deref()
            .map_or_else(|| "unknown".into(), id_of);
        let mut r = row(&a.host, &wm_id, Some(&cfg), "none".into(), 0);
        r.ber = res.ber;
        r.ncc = res.ncc;
        r.extract_seconds = Some(res.extract_seconds);
        r.peak_memory_bytes = harness::peak_memory_bytes();
        return print_json(&[r]);
    }
    match (res.ber, res.ncc) {
        (Some(ber), Some(ncc)) => println!("BER={ber:.4} NCC={ncc:.4} tile=({tr},{tc})"),
        _ => println!(
            "tile=({tr},{tc}) consensus={:.4} tiles={}",
            res.tile_report.best_score().ncc,
            res.tile_report.scores.len()
        ),
    }
    Ok(())
}

fn attack(a: AttackArgs) -> CliResult {
    check_output(&a.out)?;
    if let Some(p) = &a.realign_out {
        check_output(p)?;
    }
    let spec = AttackSpec::from_parts(
        &a.kind,
        a.params.iter().map(|(k, v)| (k.as_str(), v.as_str())),
        a.seed,
    )?;
    if a.realign_out.is_some() && !spec.attack.changes_dims() {
        return Err(CliError::Usage(format!(
            "--realign-out only applies to rotate, not {}",
            spec.attack.kind()
        )));
    }
    let img = load_image(&a.input)?;
    let attacked = spec.apply(&img)?;
    save_image(&attacked, &a.out)?;
    let compared = match &a.realign_out {
        Some(p) => {
            let back = attacks::realign(&spec, &attacked, img.dims())?;
            save_image(&back, p)?;
            Some(back)
        }
        None if attacked.same_shape(&img) => Some(attacked.clone()),
        None => None,
    };
    let quality = compared
        .map(|c| -> lumamark::Result<(f64, f64)> {
            Ok((metrics::psnr(&img, &c)?, metrics::ssim(&img, &c)?))
        })
        .transpose()?;
    if a.json {
        let mut r = row(&a.input, "none", None, spec.to_string(), spec.seed);
        if let Some((p, s)) = quality {
            r.psnr_db = Some(p);
            r.ssim = Some(s);
        }
        return print_json(&[r]);
    }
    match quality {
        Some((p, s)) => println!("{spec} PSNR={p:.2} SSIM={s:.4} -> {}", a.out.display()),
        None => println!(
            "{spec} {}x{} -> {}",
            attacked.width(),
            attacked.height(),
            a.out.display()
        ),
    }
    Ok(())
}

fn evaluate(a: EvaluateArgs) -> CliResult {
    let cfg = SweepConfig::load(&a.config)?;
    cfg.validate()?;
    let dir = a
        .out_dir
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("report"));
    let jobs = a.jobs as usize;
    let rows = match a.mode {
        Mode::Base => harness::run_base_eval_jobs(&cfg, jobs)?,
        Mode::Sweep => harness::run_attack_sweep_jobs(&cfg, jobs)?,
    };
    harness::write_reports(&rows, &dir)?;
    let failed = rows.iter().filter(|r| r.error.is_some()).count();
    if a.json {
        return print_json(&rows);
    }
    println!(
        "{} rows ({} failed) -> {}",
        rows.len(),
        failed,
        dir.join("report.csv").display()
    );
    Ok(())
}

fn bench(a: BenchArgs) -> CliResult {
    let host = load_image(&a.host)?;
    let wm = load_image(&a.watermark)?;
    let cfg = resolve_defaults(
        host.dims(),
        wm.dims(),
        WatermarkKind::detect(&wm),
        &a.params.partial(),
    );
    echo_config(&cfg);
    binarize(&wm, cfg.threshold)?;
    let s = harness::benchmark(&host, &wm, &cfg, a.iterations as usize)?;
    if a.json {
        let mut r = row(&a.host, &id_of(&a.watermark), Some(&cfg), "none".into(), 0);
        r.embed_seconds = Some(s.embed.median);
        r.extract_seconds = Some(s.extract.median);
        r.throughput_mpps = Some(s.throughput_mpps);
        r.peak_memory_bytes = s.peak_memory_bytes;
        return print_json(&[r]);
    }
    println!(
        "host {}x{}, {} iterations (+1 warm-up)",
        s.width, s.height, s.iterations
    );
    for (name, p) in [("embed", &s.embed), ("extract", &s.extract)] {
        println!(
            "{name:<8} min={:.4}s median={:.4}s mean={:.4}s",
            p.min, p.median, p.mean
        );
    }
    println!(
        "throughput embed={:.2} MP/s extract={:.2} MP/s",
        s.throughput_mpps, s.extract_throughput_mpps
    );
    if let Some(m) = s.peak_memory_bytes {
        println!("peak_rss={:.1} MB", m as f64 / (1024.0 * 1024.0));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn command_is_well_formed() {
        Cli::command().debug_assert();
    }

    #[test]
    fn size_and_realign_parsing() {
        assert_eq!(parse_size("64x32"), Ok((32, 64)));
        assert!(parse_size("64").is_err());
        assert!(parse_size("0x4").is_err());
        assert_eq!(parse_realign("rotate:-30"), Ok(-30.0));
        assert!(parse_realign("scale:2").is_err());
        assert_eq!(parse_kv("q = 70"), Ok(("q".into(), "70".into())));
    }
}
