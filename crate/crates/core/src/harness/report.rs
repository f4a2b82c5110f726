//! CSV and JSON report emission and parsing.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::EvalRow;
use crate::error::{Error, Result};

/// CSV header, in `EvalRow` field order.
pub const CSV_COLUMNS: [&str; 16] = [
    "host_id",
    "watermark_id",
    "alpha",
    "level",
    "wavelet",
    "attack",
    "seed",
    "psnr_db",
    "ssim",
    "ber",
    "ncc",
    "embed_seconds",
    "extract_seconds",
    "throughput_mpps",
    "peak_memory_bytes",
    "error",
];

/// `(key, value)` pairs describing the machine, written as `#` lines atop CSV reports.
pub fn host_metadata() -> Vec<(String, String)> {
    let cpu = std::fs::read_to_string("/proc/cpuinfo")
        .ok()
        .and_then(|info| {
            info.lines()
                .find(|l| l.starts_with("model name"))
                .and_then(|l| l.split_once(':'))
                .map(|(_, v)| v.trim().to_string())
        })
        .unwrap_or_else(|| "unknown".into());
    let cpus = std::thread::available_parallelism().map_or(1, |n| n.get());
    vec![
        ("os".into(), std::env::consts::OS.into()),
        ("arch".into(), std::env::consts::ARCH.into()),
        ("cpu".into(), cpu),
        ("logical_cpus".into(), cpus.to_string()),
    ]
}

pub fn write_csv(rows: &[EvalRow], path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv_to(rows, BufWriter::new(file))
        .map_err(|e| Error::Report(format!("{}: {e}", path.display())))
}

pub(crate) fn write_csv_to<W: Write>(
    rows: &[EvalRow],
    mut out: W,
) -> std::result::Result<(), Box<dyn std::error::Error>> {
    for (k, v) in host_metadata() {
        writeln!(out, "# {k}: {v}")?;
    }
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(out);
    w.write_record(CSV_COLUMNS)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv(path: &Path) -> Result<Vec<EvalRow>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(file);
    r.deserialize()
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::Report(format!("{}: {e}", path.display())))
}

pub fn write_json(rows: &[EvalRow], path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut out, rows)
        .map_err(|e| Error::Report(format!("{}: {e}", path.display())))?;
    out.write_all(b"\n").map_err(|e| Error::io(path, e))
}

/// Parse a JSON array of rows (a single row object is also accepted).
pub fn parse_json(text: &str) -> Result<Vec<EvalRow>> {
    #[derive(serde::Deserialize)]
    #[serde(untagged)]
    enum OneOrMany {
        Many(Vec<EvalRow>),
        One(Box<EvalRow>),
    }
    match serde_json::from_str(text) {
        Ok(OneOrMany::Many(rows)) => Ok(rows),
        Ok(OneOrMany::One(row)) => Ok(vec![*row]),
        Err(e) => Err(Error::Report(format!("json report: {e}"))),
    }
}

pub fn read_json(path: &Path) -> Result<Vec<EvalRow>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_json(&text)
}

/// Read a report, picking the parser from the extension.
pub fn read_report(path: &Path) -> Result<Vec<EvalRow>> {
    match path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase)
        .as_deref()
    {
        Some("csv") => read_csv(path),
        Some("json") => read_json(path),
        _ => Err(Error::UnsupportedFormat(path.display().to_string())),
    }
}

/// `Option<f64>` that keeps infinities through JSON (as `"inf"` / `"-inf"`).
pub(crate) mod maybe_inf {
    use std::fmt;

    use serde::de::{self, Deserializer, Visitor};
    use serde::Serializer;

    pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            None => s.serialize_none(),
            Some(x) if *x == f64::INFINITY => s.serialize_some("inf"),
            Some(x) if *x == f64::NEG_INFINITY => s.serialize_some("-inf"),
            Some(x) => s.serialize_some(x),
        }
    }

    struct Value;

    impl<'de> Visitor<'de> for Value {
        type Value = f64;

        fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
            f.write_str("a number or \"inf\"")
        }

        fn visit_f64<E: de::Error>(self, v: f64) -> Result<f64, E> {
            Ok(v)
        }

        fn visit_u64<E: de::Error>(self, v: u64) -> Result<f64, E> {
            Ok(v as f64)
        }

        fn visit_i64<E: de::Error>(self, v: i64) -> Result<f64, E> {
            Ok(v as f64)
        }

        fn visit_str<E: de::Error>(self, v: &str) -> Result<f64, E> {
            v.trim()
                .parse()
                .map_err(|_| E::invalid_value(de::Unexpected::Str(v), &self))
        }
    }

    struct Maybe;

    impl<'de> Visitor<'de> for Maybe {
        type Value = Option<f64>;

        fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
            f.write_str("an optional number")
        }

        fn visit_none<E: de::Error>(self) -> Result<Self::Value, E> {
            Ok(None)
        }

        fn visit_unit<E: de::Error>(self) -> Result<Self::Value, E> {
            Ok(None)
        }

        fn visit_some<D: Deserializer<'de>>(self, d: D) -> Result<Self::Value, D::Error> {
            d.deserialize_any(Value).map(Some)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        d.deserialize_option(Maybe)
    }
}
