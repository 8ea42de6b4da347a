//! Deterministic reference segmenters.
//!
//! Both score a voxel by the fraction of its box neighborhood whose windowed
//! intensity falls inside a band. The 3D variant takes the box across slices,
//! so its output varies smoothly along z; the 2D variant scores each slice on
//! its own and can drop whole slices to model independent per-slice misses.

use crate::error::{Error, Result};
use crate::volume::{Geometry, NormalizedVolume, ProbVolume};

use super::{SegmentContext, Segmenter};

pub const MAX_RADIUS: usize = 3;

/// Closed intensity interval in windowed [0, 1] units.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Band {
    pub lo: f32,
    pub hi: f32,
}

impl Band {
    pub fn new(lo: f32, hi: f32) -> Result<Self> {
        if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo > hi {
            return Err(Error::invalid(format!("band [{lo}, {hi}] must satisfy 0 <= lo <= hi <= 1")));
        }
        Ok(Band { lo, hi })
    }

    pub fn contains(&self, v: f32) -> bool {
        v >= self.lo && v <= self.hi
    }
}

/// Per-slice failure model: with probability `rate` a slice's scores are zeroed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Instability {
    pub rate: f64,
    pub seed: u64,
}

impl Instability {
    pub const NONE: Instability = Instability { rate: 0.0, seed: 0 };

    pub fn new(rate: f64, seed: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&rate) {
            return Err(Error::invalid(format!("instability rate {rate} outside [0, 1]")));
        }
        Ok(Instability { rate, seed })
    }

    /// Whether slice `slice_index` of `scan_id` is dropped. Pure function of
    /// `(seed, scan_id, slice_index)`.
    pub fn drops(&self, scan_id: &str, slice_index: usize) -> bool {
        self.rate > 0.0 && unit_hash(self.seed, scan_id, slice_index) < self.rate
    }
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// FNV-1a over `seed | scan_id | 0xFF | slice_index` (little-endian integers),
/// finished with the splitmix64 mixer and mapped to [0, 1) with 53 bits.
pub fn unit_hash(seed: u64, scan_id: &str, slice_index: usize) -> f64 {
    let mut h = FNV_OFFSET;
    let bytes = seed
        .to_le_bytes()
        .into_iter()
        .chain(scan_id.bytes())
        .chain([0xFF])
        .chain((slice_index as u64).to_le_bytes());
    for b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(FNV_PRIME);
    }
    h ^= h >> 30;
    h = h.wrapping_mul(0xbf58_476d_1ce4_e5b9);
    h ^= h >> 27;
    h = h.wrapping_mul(0x94d0_49bb_1331_11eb);
    h ^= h >> 31;
    (h >> 11) as f64 / (1u64 << 53) as f64
}

fn check_radius(radius: usize) -> Result<()> {
    if radius > MAX_RADIUS {
        return Err(Error::invalid(format!("smoothing radius {radius} exceeds {MAX_RADIUS}")));
    }
    Ok(())
}

/// Box-neighborhood in-band fraction with clamp-to-edge addressing: a box
/// reaching past the border re-reads the edge voxels, so every box holds
/// `(2r+1)^2 (2rz+1)` samples. `radius_z = 0` makes the score purely in-plane.
fn box_fraction(input: &NormalizedVolume, band: Band, radius_xy: usize, radius_z: usize) -> Vec<f32> {
    let Geometry { width, height, depth } = input.geometry();
    let (r, rz) = (radius_xy as isize, radius_z as isize);
    let clamp = |c: isize, n: usize| c.clamp(0, n as isize - 1) as usize;
    // Indicator of the edge-replicated volume, then prefix sums with a zero border.
    let (ew, eh, ed) = (width + 2 * radius_xy, height + 2 * radius_xy, depth + 2 * radius_z);
    let (pw, ph) = (ew + 1, eh + 1);
    let at = |x: usize, y: usize, z: usize| (z * ph + y) * pw + x;
    let mut prefix = vec![0u32; pw * ph * (ed + 1)];
    for z in 0..ed {
        let sz = clamp(z as isize - rz, depth);
        for y in 0..eh {
            let sy = clamp(y as isize - r, height);
            let mut row = 0u32;
            for x in 0..ew {
                let sx = clamp(x as isize - r, width);
                row += u32::from(band.contains(input.get(sx, sy, sz)));
                prefix[at(x + 1, y + 1, z + 1)] = row + prefix[at(x + 1, y, z + 1)] + prefix[at(x + 1, y + 1, z)]
                    - prefix[at(x + 1, y, z)];
            }
        }
    }
    let (bw, bz) = (2 * radius_xy + 1, 2 * radius_z + 1);
    let total = (bw * bw * bz) as f64;
    let mut out = Vec::with_capacity(input.geometry().len());
    for z in 0..depth {
        let (z0, z1) = (z, z + bz);
        for y in 0..height {
            let (y0, y1) = (y, y + bw);
            for x in 0..width {
                let (x0, x1) = (x, x + bw);
                let count = prefix[at(x1, y1, z1)] as i64
                    - prefix[at(x0, y1, z1)] as i64
                    - prefix[at(x1, y0, z1)] as i64
                    - prefix[at(x1, y1, z0)] as i64
                    + prefix[at(x0, y0, z1)] as i64
                    + prefix[at(x0, y1, z0)] as i64
                    + prefix[at(x1, y0, z0)] as i64
                    - prefix[at(x0, y0, z0)] as i64;
                out.push((count as f64 / total) as f32);
            }
        }
    }
    out
}

/// Fraction of in-band voxels in the `(2r+1)^3` box around each voxel.
pub fn segment_threshold3d(slab: &NormalizedVolume, band: Band, radius: usize) -> Result<ProbVolume> {
    check_radius(radius)?;
    let scores = box_fraction(slab, band, radius, radius);
    Ok(slab.with_voxels(slab.geometry(), scores))
}

/// In-plane box score per slice, with whole slices zeroed by `instability`.
/// Slice `z` of the input is global slice `first_slice + z` for hashing.
pub fn segment_slice2d(
    slice: &NormalizedVolume,
    band: Band,
    radius: usize,
    instability: Instability,
    first_slice: usize,
) -> Result<ProbVolume> {
    check_radius(radius)?;
    let mut scores = box_fraction(slice, band, radius, 0);
    let n = slice.geometry().slice_len();
    for (z, chunk) in scores.chunks_exact_mut(n).enumerate() {
        if instability.drops(&slice.scan_id, first_slice + z) {
            chunk.fill(0.0);
        }
    }
    Ok(slice.with_voxels(slice.geometry(), scores))
}

#[derive(Clone, Debug)]
pub struct Threshold3d {
    pub band: Band,
    pub radius: usize,
}

impl Segmenter for Threshold3d {
    fn name(&self) -> &str {
        "threshold3d"
    }

    fn segment(&self, input: &NormalizedVolume, _ctx: &SegmentContext) -> Result<ProbVolume> {
        segment_threshold3d(input, self.band, self.radius)
    }
}

#[derive(Clone, Debug)]
pub struct Slice2d {
    pub band: Band,
    pub radius: usize,
    pub instability: Instability,
}

impl Segmenter for Slice2d {
    fn name(&self) -> &str {
        "slice2d"
    }

    fn segment(&self, input: &NormalizedVolume, ctx: &SegmentContext) -> Result<ProbVolume> {
        segment_slice2d(input, self.band, self.radius, self.instability, ctx.first_slice)
    }
}
