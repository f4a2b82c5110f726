//! Watermark tiling over the approximation band and best-tile selection.

use serde::{Deserialize, Serialize};

use crate::aqim::{BitMatrix, WatermarkBits};
use crate::error::{Error, Result};
use crate::image_core::Plane;
use crate::metrics::{self, MetricConfig};

/// The watermark repeated modularly over an `h x w` target.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mosaic {
    pub bits: BitMatrix,
    pub tile_dims: (usize, usize),
    /// `(ceil(h / th), ceil(w / tw))`, counting partial edge tiles.
    pub grid: (usize, usize),
}

impl Mosaic {
    /// Number of tiles that fit entirely inside the mosaic.
    pub fn complete_tiles(&self) -> usize {
        complete_grid(self.bits.dims(), self.tile_dims).map_or(0, |(r, c)| r * c)
    }
}

fn complete_grid(dims: (usize, usize), tile: (usize, usize)) -> Option<(usize, usize)> {
    let rows = dims.0 / tile.0;
    let cols = dims.1 / tile.1;
    (rows > 0 && cols > 0).then_some((rows, cols))
}

fn capacity_error(dims: (usize, usize), tile: (usize, usize)) -> Error {
    Error::InsufficientCapacity {
        ll_height: dims.0,
        ll_width: dims.1,
        tile_height: tile.0,
        tile_width: tile.1,
    }
}

pub fn build_mosaic(wm: &WatermarkBits, ll_dims: (usize, usize)) -> Result<Mosaic> {
    let (th, tw) = wm.dims();
    let (h, w) = ll_dims;
    if h < th || w < tw {
        return Err(capacity_error(ll_dims, (th, tw)));
    }
    let src = wm.matrix();
    let bits = BitMatrix::from_fn(h, w, |r, c| src.get(r % th, c % tw) == 1);
    Ok(Mosaic {
        bits,
        tile_dims: (th, tw),
        grid: (h.div_ceil(th), w.div_ceil(tw)),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TileScore {
    pub row: usize,
    pub col: usize,
    /// NCC against the reference, or mean pairwise NCC to the other tiles
    /// when no reference is given.
    pub ncc: f64,
    /// SSIM of the {0, 255} renderings; `None` without a reference or when the
    /// tile is smaller than the SSIM window.
    pub ssim: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TileReport {
    pub scores: Vec<TileScore>,
    pub best_tile_index: (usize, usize),
    pub best_tile_bits: WatermarkBits,
    pub reference_used: bool,
}

impl TileReport {
    pub fn best_score(&self) -> &TileScore {
        let (r, c) = self.best_tile_index;
        self.scores
            .iter()
            .find(|s| s.row == r && s.col == c)
            .expect("best tile is among the scored tiles")
    }
}

fn render(bits: &BitMatrix) -> Plane {
    Plane::new(
        bits.height(),
        bits.width(),
        bits.bits().iter().map(|&b| b as f64 * 255.0).collect(),
    )
    .expect("dims match")
}

/// Score every complete tile of `recovered` and pick the best one.
///
/// With a reference the score is NCC to it; without, each tile is scored by
/// its mean NCC to every other complete tile. The first maximum in row-major
/// order wins.
pub fn split_and_score(
    recovered: &BitMatrix,
    tile_dims: (usize, usize),
    reference: Option<&WatermarkBits>,
) -> Result<TileReport> {
    let (th, tw) = tile_dims;
    if th == 0 || tw == 0 {
        return Err(Error::InvalidConfig("tile dims must be positive".into()));
    }
    if let Some(r) = reference {
        if r.dims() != tile_dims {
            return Err(Error::ShapeMismatch(format!(
                "reference is {:?}, tiles are {:?}",
                r.dims(),
                tile_dims
            )));
        }
    }
    let (rows, cols) = complete_grid(recovered.dims(), tile_dims)
        .ok_or_else(|| capacity_error(recovered.dims(), tile_dims))?;
    let tiles: Vec<((usize, usize), BitMatrix)> = (0..rows)
        .flat_map(|r| (0..cols).map(move |c| (r, c)))
        .map(|(r, c)| ((r, c), recovered.block(r * th, c * tw, th, tw)))
        .collect();

    let scores: Vec<TileScore> = match reference {
        Some(reference) => {
            let metric_cfg = MetricConfig::default();
            let ref_plane = render(reference.matrix());
            let use_ssim = th >= metric_cfg.ssim_window && tw >= metric_cfg.ssim_window;
            tiles
                .iter()
                .map(|((r, c), tile)| {
                    let ncc = metrics::ncc(tile, reference.matrix())?;
                    let ssim = if use_ssim {
                        Some(metrics::ssim_planes(
                            &render(tile),
                            &ref_plane,
                            &metric_cfg,
                        )?)
                    } else {
                        None
                    };
                    Ok(TileScore {
                        row: *r,
                        col: *c,
                        ncc,
                        ssim,
                    })
                })
                .collect::<Result<_>>()?
        }
        None => consensus_scores(&tiles),
    };

    let mut best = 0;
    for (i, s) in scores.iter().enumerate() {
        if s.ncc > scores[best].ncc {
            best = i;
        }
    }
    let best_tile_index = (scores[best].row, scores[best].col);
    let best_tile_bits = WatermarkBits::new(tiles[best].1.clone())?;
    Ok(TileReport {
        scores,
        best_tile_index,
        best_tile_bits,
        reference_used: reference.is_some(),
    })
}

/// Mean pairwise NCC of each tile to all others, in `O(tiles * bits)`.
///
/// For nonzero tiles `a`, `b`: `ncc(a, b) = <a, b> / sqrt(|a| |b|)`. Summing
/// `b / sqrt(|b|)` over all nonzero tiles once lets every tile's pairwise sum
/// be read off with one dot product, minus its own contribution `sqrt(|a|)`.
fn consensus_scores(tiles: &[((usize, usize), BitMatrix)]) -> Vec<TileScore> {
    let n = tiles.len();
    if n == 1 {
        let ((row, col), _) = tiles[0];
        return vec![TileScore {
            row,
            col,
            ncc: 1.0,
            ssim: None,
        }];
    }
    let len = tiles[0].1.len();
    let mut weighted = vec![0.0f64; len];
    let mut zero_tiles = 0usize;
    let ones: Vec<usize> = tiles.iter().map(|(_, t)| t.count_ones()).collect();
    for ((_, t), &k) in tiles.iter().zip(&ones) {
        if k == 0 {
            zero_tiles += 1;
            continue;
        }
        let inv = 1.0 / (k as f64).sqrt();
        for (acc, &b) in weighted.iter_mut().zip(t.bits()) {
            if b == 1 {
                *acc += inv;
            }
        }
    }
    tiles
        .iter()
        .zip(&ones)
        .map(|(((row, col), t), &k)| {
            let pair_sum = if k == 0 {
                (zero_tiles - 1) as f64
            } else {
                let dot: f64 = t
                    .bits()
                    .iter()
                    .zip(&weighted)
                    .filter(|(&b, _)| b == 1)
                    .map(|(_, &w)| w)
                    .sum();
                (dot - (k as f64).sqrt()) / (k as f64).sqrt()
            };
            TileScore {
                row: *row,
                col: *col,
                ncc: pair_sum / (n - 1) as f64,
                ssim: None,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_wm(h: usize, w: usize, seed: u64) -> WatermarkBits {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        WatermarkBits::new(BitMatrix::from_fn(h, w, |_, _| rng.gen_bool(0.5))).unwrap()
    }

    #[test]
    fn modular_tiling() {
        let wm = random_wm(64, 64, 1);
        let m = build_mosaic(&wm, (128, 128)).unwrap();
        assert_eq!(m.grid, (2, 2));
        assert_eq!(m.bits.get(70, 5), wm.matrix().get(6, 5));
        assert_eq!(m.complete_tiles(), 4);
        for r in 0..128 {
            for c in 0..128 {
                assert_eq!(m.bits.get(r, c), wm.matrix().get(r % 64, c % 64));
            }
        }
    }

    #[test]
    fn partial_tiles_counted_in_grid_only() {
        let wm = random_wm(64, 64, 2);
        let m = build_mosaic(&wm, (150, 140)).unwrap();
        assert_eq!(m.grid, (3, 3));
        assert_eq!(m.complete_tiles(), 4);
        assert_eq!(m.bits.dims(), (150, 140));
    }

    #[test]
    fn identity_when_dims_match() {
        let wm = random_wm(40, 24, 3);
        let m = build_mosaic(&wm, (40, 24)).unwrap();
        assert_eq!(&m.bits, wm.matrix());
        assert_eq!(m.bits.block(0, 0, 40, 24), *wm.matrix());
    }

    #[test]
    fn insufficient_capacity() {
        let wm = random_wm(64, 64, 4);
        assert!(matches!(
            build_mosaic(&wm, (63, 200)),
            Err(Error::InsufficientCapacity { .. })
        ));
        assert!(matches!(
            split_and_score(&BitMatrix::zeros(63, 200), (64, 64), None),
            Err(Error::InsufficientCapacity { .. })
        ));
    }

    #[test]
    fn exact_mosaic_scores_one_and_picks_origin() {
        let wm = random_wm(64, 64, 5);
        let m = build_mosaic(&wm, (128, 128)).unwrap();
        let rep = split_and_score(&m.bits, (64, 64), Some(&wm)).unwrap();
        assert_eq!(rep.scores.len(), 4);
        assert!(rep.scores.iter().all(|s| s.ncc == 1.0));
        assert!(rep.scores.iter().all(|s| s.ssim == Some(1.0)));
        assert_eq!(rep.best_tile_index, (0, 0));
        assert_eq!(&rep.best_tile_bits, &wm);
    }

    #[test]
    fn corrupted_tile_is_avoided() {
        let wm = random_wm(64, 64, 6);
        let mut bits = build_mosaic(&wm, (128, 128)).unwrap().bits;
        for r in 0..64 {
            for c in 0..64 {
                let b = bits.get(r, c);
                bits.set(r, c, 1 - b);
            }
        }
        let rep = split_and_score(&bits, (64, 64), Some(&wm)).unwrap();
        assert_ne!(rep.best_tile_index, (0, 0));
        assert_eq!(rep.best_score().ncc, 1.0);
        let rep = split_and_score(&bits, (64, 64), None).unwrap();
        assert_ne!(rep.best_tile_index, (0, 0));
        assert_eq!(&rep.best_tile_bits, &wm);
    }

    #[test]
    fn only_complete_tiles_scored() {
        let wm = random_wm(64, 64, 7);
        let m = build_mosaic(&wm, (130, 130)).unwrap();
        let rep = split_and_score(&m.bits, (64, 64), Some(&wm)).unwrap();
        assert_eq!(rep.scores.len(), 4);
    }

    #[test]
    fn consensus_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut plane = BitMatrix::from_fn(30, 40, |_, _| rng.gen_bool(0.3));
        // one all-zero tile and one all-zero twin exercise the degenerate rules
        for r in 0..10 {
            for c in 0..10 {
                plane.set(r, c, 0);
                plane.set(r + 10, c + 30, 0);
            }
        }
        let rep = split_and_score(&plane, (10, 10), None).unwrap();
        let tiles: Vec<BitMatrix> = (0..3)
            .flat_map(|r| (0..4).map(move |c| (r, c)))
            .map(|(r, c)| plane.block(r * 10, c * 10, 10, 10))
            .collect();
        for (i, s) in rep.scores.iter().enumerate() {
            let brute: f64 = tiles
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, t)| metrics::ncc(&tiles[i], t).unwrap())
                .sum::<f64>()
                / (tiles.len() - 1) as f64;
            assert!(
                (s.ncc - brute).abs() < 1e-12,
                "tile {i}: {} vs {brute}",
                s.ncc
            );
        }
    }

    #[test]
    fn tie_break_is_deterministic() {
        let wm = random_wm(16, 16, 9);
        let m = build_mosaic(&wm, (64, 64)).unwrap();
        let a = split_and_score(&m.bits, (16, 16), None).unwrap();
        let b = split_and_score(&m.bits, (16, 16), None).unwrap();
        assert_eq!(a.best_tile_index, (0, 0));
        assert_eq!(a.best_tile_index, b.best_tile_index);
        assert!(a.scores.iter().all(|s| s.ssim.is_none()));
    }
}
