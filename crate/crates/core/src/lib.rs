//! Luminance watermarking with a multi-level Daubechies wavelet transform and
//! additive quantization index modulation, plus attack simulation, quality
//! metrics and an evaluation harness.
//!
//! ```no_run
//! use lumamark::{aqim::EmbedConfig, image_core::load_image, pipeline, wavelet::WaveletSpec};
//!
//! let host = load_image("host.png")?;
//! let mark = load_image("qr.png")?;
//! let cfg = EmbedConfig::new(25.0, 128, WaveletSpec::default())?;
//! let embedded = pipeline::embed(&host, &mark, &cfg)?;
//! let found = pipeline::extract(&host, &embedded.watermarked, &cfg, (64, 64), Some(&mark))?;
//! println!("PSNR {:.2} dB, BER {:?}", embedded.psnr_db, found.ber);
//! # Ok::<(), lumamark::Error>(())
//! ```

pub mod aqim;
pub mod attacks;
pub mod error;
pub mod harness;
pub mod image_core;
pub mod metrics;
pub mod mosaic;
pub mod pipeline;
pub mod wavelet;

pub use error::{Error, Result};
