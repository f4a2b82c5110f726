//! Multi-level separable 2-D fast wavelet transform with periodized boundaries.
//!
//! A length-`n` signal is analysed on a period of `n` samples when `n` is even
//! and of `n + 1` samples (last sample repeated) when `n` is odd, so every level
//! produces exactly `ceil(n / 2)` approximation and detail coefficients. The
//! inverse reconstructs the extended period and truncates back to `n`.
//!
//! Conventions for one analysis step with scaling filter `h` of length `2K` and
//! wavelet filter `g[j] = (-1)^j h[2K-1-j]`:
//!
//! ```text
//! a[k] = sum_j h[j] x[(2k + j) mod p]
//! d[k] = sum_j g[j] x[(2k + j) mod p]
//! ```
//!
//! Rows are filtered first, then columns. Subband names give the horizontal
//! filter first: `lh` is horizontal low-pass / vertical high-pass.

mod filters;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image_core::Plane;

/// Daubechies family `dbK`, `K` in `1..=8`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Family(u8);

impl Family {
    pub const MAX_ORDER: u8 = 8;

    pub fn daubechies(order: u8) -> Result<Self> {
        if (1..=Self::MAX_ORDER).contains(&order) {
            Ok(Family(order))
        } else {
            Err(Error::InvalidConfig(format!(
                "wavelet family db{order} not available (db1..db8)"
            )))
        }
    }

    pub fn order(self) -> u8 {
        self.0
    }

    pub fn filter_len(self) -> usize {
        2 * self.0 as usize
    }

    pub fn lowpass(self) -> &'static [f64] {
        filters::scaling_filter(self.0)
    }

    /// Quadrature mirror of the scaling filter.
    pub fn highpass(self) -> Vec<f64> {
        let h = self.lowpass();
        let n = h.len();
        (0..n)
            .map(|j| {
                let v = h[n - 1 - j];
                if j % 2 == 0 {
                    v
                } else {
                    -v
                }
            })
            .collect()
    }
}

impl Default for Family {
    fn default() -> Self {
        Family(3)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "db{}", self.0)
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        let digits = lower.strip_prefix("db").ok_or_else(|| {
            Error::InvalidConfig(format!("unknown wavelet '{s}' (expected db1..db8)"))
        })?;
        let order: u8 = digits.parse().map_err(|_| {
            Error::InvalidConfig(format!("unknown wavelet '{s}' (expected db1..db8)"))
        })?;
        Family::daubechies(order)
    }
}

impl TryFrom<String> for Family {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Family> for String {
    fn from(f: Family) -> String {
        f.to_string()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WaveletSpec {
    pub family: Family,
    pub level: usize,
}

impl WaveletSpec {
    pub fn new(family: Family, level: usize) -> Result<Self> {
        if level == 0 {
            return Err(Error::InvalidConfig(
                "decomposition level must be >= 1".into(),
            ));
        }
        Ok(Self { family, level })
    }

    /// Deepest level a `height x width` plane supports: `floor(log2(min(h, w)))`.
    pub fn max_level(height: usize, width: usize) -> usize {
        let m = height.min(width);
        if m == 0 {
            0
        } else {
            m.ilog2() as usize
        }
    }

    pub fn check_dims(&self, height: usize, width: usize) -> Result<()> {
        if self.level == 0 {
            return Err(Error::InvalidConfig(
                "decomposition level must be >= 1".into(),
            ));
        }
        if self.level > Self::max_level(height, width) {
            return Err(Error::DecompositionTooDeep {
                level: self.level,
                needed: 1usize.checked_shl(self.level as u32).unwrap_or(usize::MAX),
                height,
                width,
            });
        }
        Ok(())
    }
}

impl Default for WaveletSpec {
    fn default() -> Self {
        Self {
            family: Family::default(),
            level: 2,
        }
    }
}

#[inline]
pub fn half(n: usize) -> usize {
    n.div_ceil(2)
}

/// Dims of the coarsest approximation band after `level` ceil-halvings.
pub fn ll_dims(height: usize, width: usize, level: usize) -> (usize, usize) {
    (0..level).fold((height, width), |(h, w), _| (half(h), half(w)))
}

/// Detail subbands of one decomposition level.
#[derive(Clone, Debug, PartialEq)]
pub struct DetailBands {
    pub lh: Plane,
    pub hl: Plane,
    pub hh: Plane,
}

/// Coefficients of an `L`-level decomposition.
///
/// `details` and `original_dims` are ordered coarsest to finest;
/// `original_dims[i]` is the size of the plane that produced `details[i]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SubbandPyramid {
    pub ll: Plane,
    pub details: Vec<DetailBands>,
    pub original_dims: Vec<(usize, usize)>,
}

impl SubbandPyramid {
    pub fn levels(&self) -> usize {
        self.details.len()
    }

    /// Dims of the plane this pyramid reconstructs to.
    pub fn source_dims(&self) -> Option<(usize, usize)> {
        self.original_dims.last().copied()
    }

    pub fn energy(&self) -> f64 {
        self.ll.energy()
            + self
                .details
                .iter()
                .map(|d| d.lh.energy() + d.hl.energy() + d.hh.energy())
                .sum::<f64>()
    }

    pub fn coefficient_count(&self) -> usize {
        self.ll.len()
            + self
                .details
                .iter()
                .map(|d| d.lh.len() + d.hl.len() + d.hh.len())
                .sum::<usize>()
    }

    fn validate(&self) -> Result<()> {
        let levels = self.details.len();
        if levels == 0 || self.original_dims.len() != levels {
            return Err(Error::CorruptPyramid(format!(
                "{} detail levels, {} dims entries",
                levels,
                self.original_dims.len()
            )));
        }
        for (i, (&(h, w), d)) in self.original_dims.iter().zip(&self.details).enumerate() {
            let expect = (half(h), half(w));
            for (name, band) in [("lh", &d.lh), ("hl", &d.hl), ("hh", &d.hh)] {
                if band.dims() != expect {
                    return Err(Error::CorruptPyramid(format!(
                        "level {i} {name} is {:?}, expected {:?}",
                        band.dims(),
                        expect
                    )));
                }
            }
            if i + 1 < levels {
                let (nh, nw) = self.original_dims[i + 1];
                if (half(nh), half(nw)) != (h, w) {
                    return Err(Error::CorruptPyramid(format!(
                        "level {i} parent {:?} does not ceil-halve level {} parent {:?}",
                        (h, w),
                        i + 1,
                        (nh, nw)
                    )));
                }
            }
        }
        let (h0, w0) = self.original_dims[0];
        if self.ll.dims() != (half(h0), half(w0)) {
            return Err(Error::CorruptPyramid(format!(
                "LL is {:?}, expected {:?}",
                self.ll.dims(),
                (half(h0), half(w0))
            )));
        }
        Ok(())
    }
}

#[inline]
fn wrap(m: usize, n: usize, period: usize) -> usize {
    let m = m % period;
    if m == n {
        n - 1
    } else {
        m
    }
}

/// One periodized analysis step of a 1-D signal.
pub fn analyze_1d(x: &[f64], lo: &[f64], hi: &[f64], approx: &mut [f64], detail: &mut [f64]) {
    let n = x.len();
    let period = n + (n & 1);
    let taps = lo.len();
    let out = half(n);
    debug_assert_eq!(approx.len(), out);
    debug_assert_eq!(detail.len(), out);
    for k in 0..out {
        let start = 2 * k;
        let (mut a, mut d) = (0.0, 0.0);
        if start + taps <= n {
            let window = &x[start..start + taps];
            for j in 0..taps {
                a += lo[j] * window[j];
                d += hi[j] * window[j];
            }
        } else {
            for j in 0..taps {
                let v = x[wrap(start + j, n, period)];
                a += lo[j] * v;
                d += hi[j] * v;
            }
        }
        approx[k] = a;
        detail[k] = d;
    }
}

/// Inverse of [`analyze_1d`]; writes `out.len()` reconstructed samples.
pub fn synthesize_1d(approx: &[f64], detail: &[f64], lo: &[f64], hi: &[f64], out: &mut [f64]) {
    let n = out.len();
    let period = n + (n & 1);
    let taps = lo.len();
    debug_assert_eq!(approx.len(), half(n));
    let mut ext = vec![0.0; period];
    for (k, (&a, &d)) in approx.iter().zip(detail).enumerate() {
        let start = 2 * k;
        if start + taps <= period {
            for j in 0..taps {
                ext[start + j] += a * lo[j] + d * hi[j];
            }
        } else {
            for j in 0..taps {
                ext[(start + j) % period] += a * lo[j] + d * hi[j];
            }
        }
    }
    out.copy_from_slice(&ext[..n]);
}

fn analyze_rows(src: &Plane, lo: &[f64], hi: &[f64]) -> (Plane, Plane) {
    let (h, w) = src.dims();
    let w2 = half(w);
    let mut low = Plane::zeros(h, w2);
    let mut high = Plane::zeros(h, w2);
    for ((row, a), d) in src
        .data()
        .chunks_exact(w)
        .zip(low.data_mut().chunks_exact_mut(w2))
        .zip(high.data_mut().chunks_exact_mut(w2))
    {
        analyze_1d(row, lo, hi, a, d);
    }
    (low, high)
}

fn analyze_cols(src: &Plane, lo: &[f64], hi: &[f64]) -> (Plane, Plane) {
    let (h, w) = src.dims();
    let h2 = half(h);
    let period = h + (h & 1);
    let mut low = Plane::zeros(h2, w);
    let mut high = Plane::zeros(h2, w);
    for k in 0..h2 {
        let a = &mut low.data_mut()[k * w..(k + 1) * w];
        for (j, &c) in lo.iter().enumerate() {
            let s = src.row(wrap(2 * k + j, h, period));
            for (o, &v) in a.iter_mut().zip(s) {
                *o += c * v;
            }
        }
        let d = &mut high.data_mut()[k * w..(k + 1) * w];
        for (j, &c) in hi.iter().enumerate() {
            let s = src.row(wrap(2 * k + j, h, period));
            for (o, &v) in d.iter_mut().zip(s) {
                *o += c * v;
            }
        }
    }
    (low, high)
}

fn synthesize_cols(low: &Plane, high: &Plane, lo: &[f64], hi: &[f64], h: usize) -> Plane {
    let w = low.width();
    let period = h + (h & 1);
    let mut ext = Plane::zeros(period, w);
    for k in 0..low.height() {
        let a = low.row(k);
        let d = high.row(k);
        for j in 0..lo.len() {
            let m = (2 * k + j) % period;
            let (cl, ch) = (lo[j], hi[j]);
            let out = &mut ext.data_mut()[m * w..(m + 1) * w];
            for ((o, &av), &dv) in out.iter_mut().zip(a).zip(d) {
                *o += cl * av + ch * dv;
            }
        }
    }
    if period == h {
        ext
    } else {
        let mut data = ext.into_data();
        data.truncate(h * w);
        Plane::new(h, w, data).expect("truncated column synthesis")
    }
}

fn synthesize_rows(low: &Plane, high: &Plane, lo: &[f64], hi: &[f64], w: usize) -> Plane {
    let h = low.height();
    let w2 = low.width();
    let mut out = Plane::zeros(h, w);
    for ((a, d), o) in low
        .data()
        .chunks_exact(w2)
        .zip(high.data().chunks_exact(w2))
        .zip(out.data_mut().chunks_exact_mut(w))
    {
        synthesize_1d(a, d, lo, hi, o);
    }
    out
}

/// Forward `spec.level`-level decomposition of `plane`.
pub fn fwt2(plane: &Plane, spec: &WaveletSpec) -> Result<SubbandPyramid> {
    let (h, w) = plane.dims();
    spec.check_dims(h, w)?;
    let lo = spec.family.lowpass();
    let hi = spec.family.highpass();
    let mut details = Vec::with_capacity(spec.level);
    let mut dims = Vec::with_capacity(spec.level);
    let mut current = plane.clone();
    for _ in 0..spec.level {
        dims.push(current.dims());
        let (row_lo, row_hi) = analyze_rows(&current, lo, &hi);
        let (ll, lh) = analyze_cols(&row_lo, lo, &hi);
        let (hl, hh) = analyze_cols(&row_hi, lo, &hi);
        details.push(DetailBands { lh, hl, hh });
        current = ll;
    }
    details.reverse();
    dims.reverse();
    Ok(SubbandPyramid {
        ll: current,
        details,
        original_dims: dims,
    })
}

/// Reconstruct the source plane from a pyramid produced with the same family.
pub fn ifwt2(pyr: &SubbandPyramid, spec: &WaveletSpec) -> Result<Plane> {
    pyr.validate()?;
    let lo = spec.family.lowpass();
    let hi = spec.family.highpass();
    let mut current = pyr.ll.clone();
    for (&(h, w), d) in pyr.original_dims.iter().zip(&pyr.details) {
        let row_lo = synthesize_cols(&current, &d.lh, lo, &hi, h);
        let row_hi = synthesize_cols(&d.hl, &d.hh, lo, &hi, h);
        current = synthesize_rows(&row_lo, &row_hi, lo, &hi, w);
    }
    Ok(current)
}
