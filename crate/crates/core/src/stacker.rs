//! Decomposition of a CT volume into fixed-depth, possibly overlapping stacks,
//! and the inverse reassembly.
//!
//! Stacks use half-open slice ranges `[start, start + S)`. Consecutive starts
//! are `S - O` apart, and the final stack is padded past the end of the
//! volume so that every stack holds exactly `S` slices. Padding is dropped
//! again on reassembly; slices covered by several stacks receive the mean of
//! the covering predictions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::volume::{Geometry, ProbVolume, Volume, Voxel};

/// Tolerance when converting an overlap factor into a whole number of slices.
pub const FACTOR_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StackParams {
    pub stack_size: usize,
    #[serde(rename = "overlap_slices")]
    pub overlap: usize,
}

impl StackParams {
    pub fn new(stack_size: usize, overlap: usize) -> Result<Self> {
        if stack_size == 0 {
            return Err(Error::invalid("stack size must be at least 1"));
        }
        if overlap >= stack_size {
            return Err(Error::InvalidStackParams { stack_size, overlap });
        }
        Ok(StackParams { stack_size, overlap })
    }

    /// Converts an overlap factor into whole slices: `O = round(f * S)`,
    /// rejected unless `f * S` is an integer to within 1e-9.
    pub fn from_factor(stack_size: usize, factor: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&factor) {
            return Err(Error::invalid(format!("overlap factor {factor} outside [0, 1)")));
        }
        let exact = factor * stack_size as f64;
        let overlap = exact.round();
        if (exact - overlap).abs() > FACTOR_TOLERANCE {
            return Err(Error::invalid(format!(
                "overlap factor {factor} x stack size {stack_size} = {exact} is not a whole number of slices"
            )));
        }
        Self::new(stack_size, overlap as usize)
    }

    pub fn stride(&self) -> usize {
        self.stack_size - self.overlap
    }

    pub fn overlap_factor(&self) -> f64 {
        self.overlap as f64 / self.stack_size as f64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StackEntry {
    pub start: usize,
    pub pad: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StackPlan {
    pub total_slices: usize,
    #[serde(flatten)]
    pub params: StackParams,
    pub entries: Vec<StackEntry>,
}

impl StackPlan {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn stack_size(&self) -> usize {
        self.params.stack_size
    }

    /// Range of real (non-padding) slices covered by entry `k`.
    pub fn unpadded_range(&self, k: usize) -> std::ops::Range<usize> {
        let e = self.entries[k];
        e.start..e.start + self.params.stack_size - e.pad
    }
}

/// Number of stacks needed to cover `n` slices.
pub fn stack_count(n: usize, params: StackParams) -> usize {
    if n <= params.stack_size {
        1
    } else {
        1 + (n - params.stack_size).div_ceil(params.stride())
    }
}

pub fn plan_stacks(total_slices: usize, params: StackParams) -> Result<StackPlan> {
    if total_slices == 0 {
        return Err(Error::invalid("cannot plan stacks for an empty volume"));
    }
    let params = StackParams::new(params.stack_size, params.overlap)?;
    let stride = params.stride();
    let entries = (0..stack_count(total_slices, params))
        .map(|k| {
            let start = k * stride;
            StackEntry {
                start,
                pad: (start + params.stack_size).saturating_sub(total_slices),
            }
        })
        .collect();
    Ok(StackPlan {
        total_slices,
        params,
        entries,
    })
}

/// One extracted sub-volume of exactly `S` slices.
#[derive(Clone, Debug, PartialEq)]
pub struct StackSlab<T> {
    pub plan_index: usize,
    pub data: Volume<T>,
}

/// Cuts `volume` along z according to `plan`, filling padding slices with
/// the voxel type's pad value.
pub fn slice_into_stacks<T: Voxel>(volume: &Volume<T>, plan: &StackPlan) -> Result<Vec<StackSlab<T>>> {
    if volume.depth() != plan.total_slices {
        return Err(Error::geometry(format!(
            "volume depth {} does not match plan total {}",
            volume.depth(),
            plan.total_slices
        )));
    }
    let g = volume.geometry();
    let n = g.slice_len();
    let s = plan.stack_size();
    let slab_geometry = g.with_depth(s);
    Ok(plan
        .entries
        .iter()
        .enumerate()
        .map(|(k, e)| {
            let real = plan.unpadded_range(k);
            let mut voxels = Vec::with_capacity(slab_geometry.len());
            voxels.extend_from_slice(&volume.voxels()[real.start * n..real.end * n]);
            voxels.resize(slab_geometry.len(), T::PAD);
            debug_assert_eq!(real.len() + e.pad, s);
            StackSlab {
                plan_index: k,
                data: volume.with_voxels(slab_geometry, voxels),
            }
        })
        .collect())
}

/// Rebuilds a full-depth probability volume from per-stack predictions.
pub fn reassemble(slabs: &[StackSlab<f32>], plan: &StackPlan) -> Result<ProbVolume> {
    if slabs.len() != plan.len() {
        return Err(Error::PlanMismatch(format!(
            "{} slabs for a plan of {} stacks",
            slabs.len(),
            plan.len()
        )));
    }
    let first = &slabs[0].data;
    let s = plan.stack_size();
    let mut ordered: Vec<Option<&Volume<f32>>> = vec![None; plan.len()];
    for slab in slabs {
        let g = slab.data.geometry();
        if g.depth != s || g.width != first.width() || g.height != first.height() {
            return Err(Error::PlanMismatch(format!(
                "slab {} is {}x{}x{}, expected {}x{}x{s}",
                slab.plan_index,
                g.width,
                g.height,
                g.depth,
                first.width(),
                first.height()
            )));
        }
        match ordered.get_mut(slab.plan_index) {
            Some(slot @ None) => *slot = Some(&slab.data),
            Some(Some(_)) => return Err(Error::PlanMismatch(format!("duplicate slab {}", slab.plan_index))),
            None => return Err(Error::PlanMismatch(format!("slab index {} out of range", slab.plan_index))),
        }
    }

    let out_geometry = Geometry::new(first.width(), first.height(), plan.total_slices)?;
    let n = out_geometry.slice_len();
    let mut sums = vec![0.0f64; out_geometry.len()];
    let mut counts = vec![0u32; plan.total_slices];
    for (k, data) in ordered.iter().enumerate() {
        let data = data.expect("every slot filled above");
        let real = plan.unpadded_range(k);
        let src = &data.voxels()[..real.len() * n];
        for (acc, &v) in sums[real.start * n..real.end * n].iter_mut().zip(src) {
            *acc += v as f64;
        }
        for c in &mut counts[real] {
            *c += 1;
        }
    }
    let voxels = sums
        .chunks_exact(n)
        .zip(&counts)
        .flat_map(|(slice, &c)| slice.iter().map(move |&v| (v / c as f64) as f32))
        .collect();
    Ok(first.with_voxels(out_geometry, voxels))
}
