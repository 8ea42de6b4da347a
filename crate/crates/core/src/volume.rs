//! Voxel-grid data model and the intensity transforms applied before segmentation.
//!
//! All volumes share one storage order: x varies fastest, then y, then z
//! (slice index). A slice is therefore a contiguous run of `width * height`
//! voxels, which is what the stacker relies on when cutting sub-volumes.

use std::fmt::Debug;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// In-plane edge length every slice is resampled to before segmentation.
pub const STANDARD_SLICE_SIZE: usize = 512;

/// Hounsfield value used for synthetic slices (air).
pub const AIR_HU: i16 = -1000;

/// Default probability cut applied to backend predictions.
pub const DEFAULT_THRESHOLD: f64 = 0.2;

/// On-disk element type of a native volume.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dtype {
    I16,
    U8,
    F32,
}

impl Dtype {
    pub fn as_str(self) -> &'static str {
        match self {
            Dtype::I16 => "i16",
            Dtype::U8 => "u8",
            Dtype::F32 => "f32",
        }
    }

    pub fn byte_width(self) -> usize {
        match self {
            Dtype::I16 => 2,
            Dtype::U8 => 1,
            Dtype::F32 => 4,
        }
    }
}

/// Element type of a [`Volume`].
///
/// `PAD` is the value written into padding slices by the stacker: air for
/// scans, zero for masks and real-valued maps.
pub trait Voxel: Copy + Debug + PartialEq + Send + Sync + 'static {
    const DTYPE: Dtype;
    const PAD: Self;

    fn write_le(self, out: &mut Vec<u8>);
    fn read_le(bytes: &[u8]) -> Self;

    /// Index of the first value outside the payload's legal range, if any.
    fn first_invalid(_values: &[Self]) -> Option<usize> {
        None
    }
}

impl Voxel for i16 {
    const DTYPE: Dtype = Dtype::I16;
    const PAD: Self = AIR_HU;

    fn write_le(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }

    fn read_le(bytes: &[u8]) -> Self {
        i16::from_le_bytes([bytes[0], bytes[1]])
    }
}

impl Voxel for u8 {
    const DTYPE: Dtype = Dtype::U8;
    const PAD: Self = 0;

    fn write_le(self, out: &mut Vec<u8>) {
        out.push(self);
    }

    fn read_le(bytes: &[u8]) -> Self {
        bytes[0]
    }

    fn first_invalid(values: &[Self]) -> Option<usize> {
        values.iter().position(|&v| v > 1)
    }
}

impl Voxel for f32 {
    const DTYPE: Dtype = Dtype::F32;
    const PAD: Self = 0.0;

    fn write_le(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }

    fn read_le(bytes: &[u8]) -> Self {
        f32::from_le_bytes([bytes[0], bytes[1], bytes[2], bytes[3]])
    }

    fn first_invalid(values: &[Self]) -> Option<usize> {
        values.iter().position(|v| !(0.0..=1.0).contains(v))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Geometry {
    pub width: usize,
    pub height: usize,
    pub depth: usize,
}

impl Geometry {
    pub fn new(width: usize, height: usize, depth: usize) -> Result<Self> {
        if width == 0 || height == 0 || depth == 0 {
            return Err(Error::invalid(format!(
                "volume dimensions must be positive, got {width}x{height}x{depth}"
            )));
        }
        Ok(Geometry {
            width,
            height,
            depth,
        })
    }

    pub fn slice_len(&self) -> usize {
        self.width * self.height
    }

    pub fn len(&self) -> usize {
        self.slice_len() * self.depth
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        (z * self.height + y) * self.width + x
    }

    pub fn with_depth(&self, depth: usize) -> Geometry {
        Geometry { depth, ..*self }
    }

    pub(crate) fn ensure_same(&self, other: &Geometry, what: &str) -> Result<()> {
        if self != other {
            return Err(Error::geometry(format!(
                "{what}: {}x{}x{} vs {}x{}x{}",
                self.width, self.height, self.depth, other.width, other.height, other.depth
            )));
        }
        Ok(())
    }
}

/// Grey-level mapping parameters in Hounsfield units.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowSpec {
    pub center: f64,
    pub width: f64,
}

impl WindowSpec {
    /// A typical lung window, used when no DICOM window is known.
    pub const LUNG: WindowSpec = WindowSpec {
        center: -600.0,
        width: 1500.0,
    };

    pub fn new(center: f64, width: f64) -> Result<Self> {
        let spec = WindowSpec { center, width };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.center.is_finite() {
            return Err(Error::invalid(format!(
                "window center must be finite, got {}",
                self.center
            )));
        }
        if !(self.width > 0.0) || !self.width.is_finite() {
            return Err(Error::invalid(format!(
                "window width must be positive, got {}",
                self.width
            )));
        }
        Ok(())
    }

    /// Lower edge of the window; values at or below it map to 0.
    pub fn floor(&self) -> f64 {
        self.center - self.width / 2.0
    }

    /// Linear clamp map `clamp((h - (c - w/2)) / w, 0, 1)`.
    pub fn normalize(&self, hu: f64) -> f64 {
        ((hu - self.floor()) / self.width).clamp(0.0, 1.0)
    }
}

/// Dense 3D grid with scan identity. See [`ScanVolume`], [`MaskVolume`],
/// [`ProbVolume`] and [`NormalizedVolume`] for the concrete payloads.
#[derive(Clone, Debug, PartialEq)]
pub struct Volume<T> {
    pub scan_id: String,
    geometry: Geometry,
    /// Voxel size in mm along (x, y, z), when known.
    pub spacing: Option<[f64; 3]>,
    /// Display window recorded alongside the scan, when known.
    pub window: Option<WindowSpec>,
    voxels: Vec<T>,
}

/// Hounsfield-unit CT volume.
pub type ScanVolume = Volume<i16>;
/// Binary label volume, every voxel 0 or 1.
pub type MaskVolume = Volume<u8>;
/// Backend prediction, every voxel in [0, 1].
pub type ProbVolume = Volume<f32>;
/// Windowed model input, every voxel in [0, 1].
pub type NormalizedVolume = Volume<f32>;

impl<T: Voxel> Volume<T> {
    pub fn new(scan_id: impl Into<String>, geometry: Geometry, voxels: Vec<T>) -> Result<Self> {
        let geometry = Geometry::new(geometry.width, geometry.height, geometry.depth)?;
        if voxels.len() != geometry.len() {
            return Err(Error::geometry(format!(
                "voxel count {} does not equal {}x{}x{} = {}",
                voxels.len(),
                geometry.width,
                geometry.height,
                geometry.depth,
                geometry.len()
            )));
        }
        Ok(Volume {
            scan_id: scan_id.into(),
            geometry,
            spacing: None,
            window: None,
            voxels,
        })
    }

    pub fn filled(scan_id: impl Into<String>, geometry: Geometry, value: T) -> Result<Self> {
        Self::new(scan_id, geometry, vec![value; geometry.len()])
    }

    pub fn geometry(&self) -> Geometry {
        self.geometry
    }

    pub fn width(&self) -> usize {
        self.geometry.width
    }

    pub fn height(&self) -> usize {
        self.geometry.height
    }

    pub fn depth(&self) -> usize {
        self.geometry.depth
    }

    pub fn voxels(&self) -> &[T] {
        &self.voxels
    }

    pub fn voxels_mut(&mut self) -> &mut [T] {
        &mut self.voxels
    }

    pub fn into_voxels(self) -> Vec<T> {
        self.voxels
    }

    pub fn get(&self, x: usize, y: usize, z: usize) -> T {
        self.voxels[self.geometry.index(x, y, z)]
    }

    pub fn slice(&self, z: usize) -> &[T] {
        let n = self.geometry.slice_len();
        &self.voxels[z * n..(z + 1) * n]
    }

    /// Copies slices `range` into a new volume with the same metadata.
    pub fn sub_volume(&self, range: Range<usize>) -> Result<Self> {
        if range.start >= range.end || range.end > self.depth() {
            return Err(Error::invalid(format!(
                "slice range {range:?} outside volume depth {}",
                self.depth()
            )));
        }
        let n = self.geometry.slice_len();
        let voxels = self.voxels[range.start * n..range.end * n].to_vec();
        Ok(self.with_voxels(self.geometry.with_depth(range.len()), voxels))
    }

    /// Same metadata, new payload. Caller guarantees `voxels.len() == geometry.len()`.
    pub(crate) fn with_voxels<U: Voxel>(&self, geometry: Geometry, voxels: Vec<U>) -> Volume<U> {
        debug_assert_eq!(voxels.len(), geometry.len());
        Volume {
            scan_id: self.scan_id.clone(),
            geometry,
            spacing: self.spacing,
            window: self.window,
            voxels,
        }
    }

    pub fn map<U: Voxel>(&self, f: impl Fn(T) -> U) -> Volume<U> {
        let voxels = self.voxels.iter().map(|&v| f(v)).collect();
        self.with_voxels(self.geometry, voxels)
    }

    pub fn with_spacing(mut self, spacing: [f64; 3]) -> Self {
        self.spacing = Some(spacing);
        self
    }

    pub fn with_window(mut self, window: WindowSpec) -> Self {
        self.window = Some(window);
        self
    }
}

impl Volume<u8> {
    /// Checks the binary-label invariant.
    pub fn validate_mask(&self) -> Result<()> {
        if let Some(i) = self.voxels.iter().position(|&v| v > 1) {
            return Err(Error::invalid(format!(
                "mask voxel {i} holds {}, expected 0 or 1",
                self.voxels[i]
            )));
        }
        Ok(())
    }

    pub fn count_positive(&self) -> usize {
        self.voxels.iter().filter(|&&v| v != 0).count()
    }
}

impl Volume<f32> {
    /// Checks that every value lies in [0, 1] (NaN rejected).
    pub fn validate_unit_range(&self) -> Result<()> {
        if let Some(i) = self.voxels.iter().position(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::invalid(format!(
                "voxel {i} holds {}, expected a value in [0, 1]",
                self.voxels[i]
            )));
        }
        Ok(())
    }
}

/// Output of [`apply_rescale`].
#[derive(Clone, Debug, PartialEq)]
pub struct Rescaled {
    pub values: Vec<i16>,
    /// Number of values clamped to the 16-bit signed bounds.
    pub saturated: usize,
}

/// Maps stored pixel values to Hounsfield units: `round(raw * slope + intercept)`,
/// saturating at the i16 bounds. Rounding is half away from zero.
pub fn apply_rescale(raw: &[i32], slope: f64, intercept: f64) -> Result<Rescaled> {
    if slope == 0.0 || !slope.is_finite() || !intercept.is_finite() {
        return Err(Error::invalid(format!(
            "rescale needs a finite non-zero slope and finite intercept, got slope {slope}, intercept {intercept}"
        )));
    }
    let mut saturated = 0;
    let values = raw
        .iter()
        .map(|&r| {
            let v = (r as f64 * slope + intercept).round();
            if v < i16::MIN as f64 {
                saturated += 1;
                i16::MIN
            } else if v > i16::MAX as f64 {
                saturated += 1;
                i16::MAX
            } else {
                v as i16
            }
        })
        .collect();
    Ok(Rescaled { values, saturated })
}

/// Grey-level maps a scan into the model's [0, 1] input range.
pub fn apply_window(scan: &ScanVolume, window: &WindowSpec) -> Result<NormalizedVolume> {
    window.validate()?;
    Ok(scan.map(|h| window.normalize(h as f64) as f32))
}

/// Inclusive threshold: a voxel is positive iff `prob >= t`.
///
/// The comparison runs in `f32`, the storage precision of probabilities, so a
/// stored value equal to `t` is always positive.
pub fn threshold_prob(prob: &ProbVolume, t: f64) -> Result<MaskVolume> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::invalid(format!("threshold {t} outside [0, 1]")));
    }
    let t = t as f32;
    Ok(prob.map(|p| u8::from(p >= t)))
}

/// Per-slice 2D resampling kernel for a voxel type.
pub trait Resample: Voxel {
    fn resample_slice(
        src: &[Self],
        src_w: usize,
        src_h: usize,
        dst_w: usize,
        dst_h: usize,
    ) -> Vec<Self>;
}

/// Maps destination pixel `d` to a continuous source coordinate with
/// pixel-center alignment.
#[inline]
fn source_coord(d: usize, src: usize, dst: usize) -> f64 {
    (d as f64 + 0.5) * src as f64 / dst as f64 - 0.5
}

/// Bilinear interpolation with clamp-to-edge borders; `finish` converts the
/// interpolated value back to the voxel type.
fn bilinear<T: Copy + Into<f64>>(
    src: &[T],
    src_w: usize,
    src_h: usize,
    dst_w: usize,
    dst_h: usize,
    finish: impl Fn(f64) -> T,
) -> Vec<T> {
    let axis = |src_n: usize, dst_n: usize| -> Vec<(usize, usize, f64)> {
        (0..dst_n)
            .map(|d| {
                let s = source_coord(d, src_n, dst_n).clamp(0.0, (src_n - 1) as f64);
                let i0 = s.floor() as usize;
                let i1 = (i0 + 1).min(src_n - 1);
                (i0, i1, s - i0 as f64)
            })
            .collect()
    };
    let xs = axis(src_w, dst_w);
    let ys = axis(src_h, dst_h);
    let p = |x: usize, y: usize| -> f64 { src[y * src_w + x].into() };
    let mut out = Vec::with_capacity(dst_w * dst_h);
    for &(y0, y1, fy) in &ys {
        for &(x0, x1, fx) in &xs {
            let top = p(x0, y0) * (1.0 - fx) + p(x1, y0) * fx;
            let bottom = p(x0, y1) * (1.0 - fx) + p(x1, y1) * fx;
            out.push(finish(top * (1.0 - fy) + bottom * fy));
        }
    }
    out
}

impl Resample for i16 {
    fn resample_slice(src: &[i16], src_w: usize, src_h: usize, dst_w: usize, dst_h: usize) -> Vec<i16> {
        bilinear(src, src_w, src_h, dst_w, dst_h, |v| {
            v.round().clamp(i16::MIN as f64, i16::MAX as f64) as i16
        })
    }
}

/// Bilinear; a convex combination keeps [0, 1] payloads in range.
impl Resample for f32 {
    fn resample_slice(src: &[f32], src_w: usize, src_h: usize, dst_w: usize, dst_h: usize) -> Vec<f32> {
        bilinear(src, src_w, src_h, dst_w, dst_h, |v| v as f32)
    }
}

/// Nearest-neighbor, so labels stay binary.
impl Resample for u8 {
    fn resample_slice(src: &[u8], src_w: usize, src_h: usize, dst_w: usize, dst_h: usize) -> Vec<u8> {
        // floor((d + 0.5) * src / dst) in integer arithmetic
        let nearest = |d: usize, src_n: usize, dst_n: usize| ((2 * d + 1) * src_n / (2 * dst_n)).min(src_n - 1);
        let xs: Vec<usize> = (0..dst_w).map(|d| nearest(d, src_w, dst_w)).collect();
        let mut out = Vec::with_capacity(dst_w * dst_h);
        for dy in 0..dst_h {
            let row = &src[nearest(dy, src_h, dst_h) * src_w..][..src_w];
            out.extend(xs.iter().map(|&x| row[x]));
        }
        out
    }
}

/// Resamples every slice to `width x height`; depth is unchanged.
pub fn resize<T: Resample>(volume: &Volume<T>, width: usize, height: usize) -> Result<Volume<T>> {
    let g = volume.geometry();
    if g.width < 2 || g.height < 2 {
        return Err(Error::invalid(format!(
            "cannot resample a degenerate {}x{} slice",
            g.width, g.height
        )));
    }
    let target = Geometry::new(width, height, g.depth)?;
    if target == g {
        return Ok(volume.clone());
    }
    let mut voxels = Vec::with_capacity(target.len());
    for z in 0..g.depth {
        voxels.extend(T::resample_slice(volume.slice(z), g.width, g.height, width, height));
    }
    let mut out = volume.with_voxels(target, voxels);
    out.spacing = volume.spacing.map(|[sx, sy, sz]| {
        [
            sx * g.width as f64 / width as f64,
            sy * g.height as f64 / height as f64,
            sz,
        ]
    });
    Ok(out)
}

pub fn resize_to_standard<T: Resample>(volume: &Volume<T>) -> Result<Volume<T>> {
    resize(volume, STANDARD_SLICE_SIZE, STANDARD_SLICE_SIZE)
}
