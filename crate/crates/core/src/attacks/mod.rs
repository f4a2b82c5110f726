//! Parameterized attack simulators and the geometric realignment that lets
//! non-blind extraction run on rotated images.
//!
//! Randomized attacks (Gaussian noise, sandpaper) draw from a ChaCha8 stream
//! seeded with [`AttackSpec::seed`]; Gaussian variates come from the ziggurat
//! sampler in `rand_distr`.

mod geometry;
mod median;
mod noise;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image_core::{decode_jpeg, encode_jpeg, RasterImage};

pub use geometry::{
    bilinear_resize, crop_center, nearest_resize, realign_rotation, rotate, rotated_dims,
};
pub use median::median_filter;
pub use noise::{gaussian_noise, sandpaper};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Attack {
    /// Drop a border of `ratio` of each side, keeping the centre on a black canvas.
    Crop {
        ratio: f64,
    },
    /// Counter-clockwise rotation in degrees with an enlarged canvas.
    Rotate {
        degrees: f64,
    },
    /// Bilinear resample by `factor` and back.
    Scale {
        factor: f64,
    },
    /// Additive Gaussian noise, standard deviation in gray levels.
    Gaussian {
        sigma: f64,
    },
    Jpeg {
        quality: u8,
    },
    Median {
        kernel: usize,
    },
    /// Nearest-neighbour resample by `factor` and back.
    Resize {
        factor: f64,
    },
    /// Salt-and-pepper impulses on whole pixels with probability `probability`.
    Sandpaper {
        probability: f64,
    },
}

pub const KIND_NAMES: [&str; 8] = [
    "crop",
    "rotate",
    "scale",
    "gaussian",
    "jpeg",
    "median",
    "resize",
    "sandpaper",
];

impl Attack {
    pub fn kind(&self) -> &'static str {
        match self {
            Attack::Crop { .. } => "crop",
            Attack::Rotate { .. } => "rotate",
            Attack::Scale { .. } => "scale",
            Attack::Gaussian { .. } => "gaussian",
            Attack::Jpeg { .. } => "jpeg",
            Attack::Median { .. } => "median",
            Attack::Resize { .. } => "resize",
            Attack::Sandpaper { .. } => "sandpaper",
        }
    }

    /// Name of the single parameter each kind takes.
    pub fn param_key(kind: &str) -> Result<&'static str> {
        Ok(match kind {
            "crop" => "r",
            "rotate" => "theta",
            "scale" => "s",
            "gaussian" => "sigma",
            "jpeg" => "q",
            "median" => "k",
            "resize" => "f",
            "sandpaper" => "p",
            other => {
                return Err(Error::BadAttackParameter(format!(
                    "unknown attack kind '{other}' (expected one of {})",
                    KIND_NAMES.join(", ")
                )))
            }
        })
    }

    pub fn value(&self) -> f64 {
        match *self {
            Attack::Crop { ratio } => ratio,
            Attack::Rotate { degrees } => degrees,
            Attack::Scale { factor } | Attack::Resize { factor } => factor,
            Attack::Gaussian { sigma } => sigma,
            Attack::Jpeg { quality } => quality as f64,
            Attack::Median { kernel } => kernel as f64,
            Attack::Sandpaper { probability } => probability,
        }
    }

    /// Build and validate an attack from its kind name and severity value.
    pub fn from_kind(kind: &str, value: f64) -> Result<Self> {
        let bad = |msg: String| Err(Error::BadAttackParameter(msg));
        if !value.is_finite() {
            return bad(format!("{kind}: parameter must be finite, got {value}"));
        }
        let attack = match kind {
            "crop" => Attack::Crop { ratio: value },
            "rotate" => Attack::Rotate { degrees: value },
            "scale" => Attack::Scale { factor: value },
            "gaussian" => Attack::Gaussian { sigma: value },
            "jpeg" => {
                if value.fract() != 0.0 || !(1.0..=100.0).contains(&value) {
                    return bad(format!(
                        "jpeg: q must be an integer in 1..=100, got {value}"
                    ));
                }
                Attack::Jpeg {
                    quality: value as u8,
                }
            }
            "median" => {
                if value.fract() != 0.0 || !(1.0..=255.0).contains(&value) {
                    return bad(format!(
                        "median: k must be an odd integer >= 1, got {value}"
                    ));
                }
                Attack::Median {
                    kernel: value as usize,
                }
            }
            "resize" => Attack::Resize { factor: value },
            "sandpaper" => Attack::Sandpaper { probability: value },
            other => {
                return Attack::param_key(other)
                    .and_then(|_| bad(format!("unknown kind '{other}'")))
            }
        };
        attack.validate()?;
        Ok(attack)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::BadAttackParameter(msg));
        match *self {
            Attack::Crop { ratio } if !(0.0..0.5).contains(&ratio) => {
                bad(format!("crop: r must be in [0, 0.5), got {ratio}"))
            }
            Attack::Rotate { degrees } if !degrees.is_finite() => {
                bad(format!("rotate: theta must be finite, got {degrees}"))
            }
            Attack::Scale { factor } if !(factor.is_finite() && factor > 0.0) => {
                bad(format!("scale: s must be > 0, got {factor}"))
            }
            Attack::Resize { factor } if !(factor.is_finite() && factor > 0.0) => {
                bad(format!("resize: f must be > 0, got {factor}"))
            }
            Attack::Gaussian { sigma } if !(sigma.is_finite() && sigma >= 0.0) => {
                bad(format!("gaussian: sigma must be >= 0, got {sigma}"))
            }
            Attack::Jpeg { quality } if !(1..=100).contains(&quality) => {
                bad(format!("jpeg: q must be in 1..=100, got {quality}"))
            }
            Attack::Median { kernel } if kernel == 0 || kernel % 2 == 0 => {
                bad(format!("median: k must be odd and >= 1, got {kernel}"))
            }
            Attack::Sandpaper { probability } if !(0.0..=1.0).contains(&probability) => {
                bad(format!("sandpaper: p must be in [0, 1], got {probability}"))
            }
            _ => Ok(()),
        }
    }

    pub fn is_stochastic(&self) -> bool {
        matches!(self, Attack::Gaussian { .. } | Attack::Sandpaper { .. })
    }

    pub fn changes_dims(&self) -> bool {
        matches!(self, Attack::Rotate { .. })
    }
}

/// An attack plus the seed for its random stream.
///
/// Text form: `kind=jpeg,q=30,seed=42` (seed optional, default 0).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct AttackSpec {
    pub attack: Attack,
    pub seed: u64,
}

impl AttackSpec {
    pub fn new(attack: Attack, seed: u64) -> Result<Self> {
        attack.validate()?;
        Ok(Self { attack, seed })
    }

    /// Build from a kind name and `key=value` pairs (the CLI form).
    pub fn from_parts<'a>(
        kind: &str,
        params: impl IntoIterator<Item = (&'a str, &'a str)>,
        default_seed: u64,
    ) -> Result<Self> {
        let kind = kind.trim().to_ascii_lowercase();
        let key = Attack::param_key(&kind)?;
        let mut value = None;
        let mut seed = default_seed;
        for (k, v) in params {
            let k = k.trim();
            let v = v.trim();
            if k == key {
                value = Some(v.parse::<f64>().map_err(|_| {
                    Error::BadAttackParameter(format!("{kind}: cannot parse {key}='{v}'"))
                })?);
            } else if k == "seed" {
                seed = v
                    .parse()
                    .map_err(|_| Error::BadAttackParameter(format!("cannot parse seed '{v}'")))?;
            } else {
                return Err(Error::BadAttackParameter(format!(
                    "{kind}: unexpected parameter '{k}' (expected '{key}' and optional 'seed')"
                )));
            }
        }
        let value = value.ok_or_else(|| {
            Error::BadAttackParameter(format!("{kind}: missing parameter '{key}'"))
        })?;
        Ok(Self {
            attack: Attack::from_kind(&kind, value)?,
            seed,
        })
    }

    pub fn apply(&self, img: &RasterImage) -> Result<RasterImage> {
        apply(self, img)
    }
}

impl fmt::Display for AttackSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = self.attack.kind();
        let key = Attack::param_key(kind).expect("known kind");
        write!(
            f,
            "kind={kind},{key}={},seed={}",
            self.attack.value(),
            self.seed
        )
    }
}

impl FromStr for AttackSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut kind = None;
        let mut rest = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, v) = part.split_once('=').ok_or_else(|| {
                Error::BadAttackParameter(format!("expected key=value, got '{part}'"))
            })?;
            if k.trim() == "kind" {
                kind = Some(v.trim());
            } else {
                rest.push((k, v));
            }
        }
        let kind =
            kind.ok_or_else(|| Error::BadAttackParameter(format!("missing kind in '{s}'")))?;
        AttackSpec::from_parts(kind, rest, 0)
    }
}

impl TryFrom<String> for AttackSpec {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<AttackSpec> for String {
    fn from(a: AttackSpec) -> String {
        a.to_string()
    }
}

/// Apply one attack. Every kind except `rotate` preserves dims.
pub fn apply(spec: &AttackSpec, img: &RasterImage) -> Result<RasterImage> {
    spec.attack.validate()?;
    match spec.attack {
        Attack::Crop { ratio } => Ok(crop_center(img, ratio)),
        Attack::Rotate { degrees } => Ok(rotate(img, degrees)),
        Attack::Scale { factor } => {
            let (h, w) = scaled_dims(img, factor)?;
            let small = bilinear_resize(img, h, w);
            Ok(bilinear_resize(&small, img.height(), img.width()))
        }
        Attack::Gaussian { sigma } => Ok(gaussian_noise(img, sigma, spec.seed)),
        Attack::Jpeg { quality } => decode_jpeg(&encode_jpeg(img, quality)?),
        Attack::Median { kernel } => Ok(median_filter(img, kernel)),
        Attack::Resize { factor } => {
            let (h, w) = scaled_dims(img, factor)?;
            let small = nearest_resize(img, h, w);
            Ok(nearest_resize(&small, img.height(), img.width()))
        }
        Attack::Sandpaper { probability } => Ok(sandpaper(img, probability, spec.seed)),
    }
}

fn scaled_dims(img: &RasterImage, factor: f64) -> Result<(usize, usize)> {
    let h = (img.height() as f64 * factor).round();
    let w = (img.width() as f64 * factor).round();
    if h < 1.0 || w < 1.0 || h > 1e5 || w > 1e5 {
        return Err(Error::BadAttackParameter(format!(
            "factor {factor} gives a {h}x{w} intermediate image"
        )));
    }
    Ok((h as usize, w as usize))
}

/// Undo a rotation: rotate back about the canvas centre and crop to `original_dims`.
pub fn realign(
    spec: &AttackSpec,
    attacked: &RasterImage,
    original_dims: (usize, usize),
) -> Result<RasterImage> {
    match spec.attack {
        Attack::Rotate { degrees } => realign_rotation(attacked, degrees, original_dims),
        other => Err(Error::NoRealignment(other.kind().to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip() {
        let s: AttackSpec = "kind=jpeg,q=30,seed=42".parse().unwrap();
        assert_eq!(s.attack, Attack::Jpeg { quality: 30 });
        assert_eq!(s.seed, 42);
        assert_eq!(s.to_string(), "kind=jpeg,q=30,seed=42");
        let g: AttackSpec = "kind=gaussian, sigma=0.5".parse().unwrap();
        assert_eq!(g.seed, 0);
        assert_eq!(g.to_string().parse::<AttackSpec>().unwrap(), g);
        let r: AttackSpec = "kind=rotate,theta=-30,seed=1".parse().unwrap();
        assert_eq!(r.attack, Attack::Rotate { degrees: -30.0 });
    }

    #[test]
    fn bad_parameters_rejected() {
        for text in [
            "kind=crop,r=0.5",
            "kind=crop,r=-0.1",
            "kind=scale,s=0",
            "kind=gaussian,sigma=-1",
            "kind=jpeg,q=0",
            "kind=jpeg,q=101",
            "kind=jpeg,q=50.5",
            "kind=median,k=4",
            "kind=median,k=0",
            "kind=resize,f=-2",
            "kind=sandpaper,p=1.5",
            "kind=blur,s=2",
            "kind=jpeg",
            "kind=jpeg,q=30,x=1",
            "q=30",
            "kind=rotate,theta=nan",
        ] {
            assert!(
                matches!(
                    text.parse::<AttackSpec>(),
                    Err(Error::BadAttackParameter(_))
                ),
                "{text} should be rejected"
            );
        }
    }

    #[test]
    fn realign_only_for_rotation() {
        let img = RasterImage::filled(8, 8, 1, 9).unwrap();
        let spec = AttackSpec::new(Attack::Jpeg { quality: 50 }, 0).unwrap();
        assert!(matches!(
            realign(&spec, &img, (8, 8)),
            Err(Error::NoRealignment(_))
        ));
    }

    #[test]
    fn tiny_scale_factor_rejected() {
        let img = RasterImage::filled(8, 8, 1, 9).unwrap();
        let spec = AttackSpec::new(Attack::Scale { factor: 0.01 }, 0).unwrap();
        assert!(apply(&spec, &img).is_err());
    }
}
