//! Synthetic CT phantoms with known ground truth.
//!
//! A phantom is an elliptic body cylinder of soft tissue holding two elliptic
//! lung cylinders, with ellipsoidal lesions placed strictly inside the lungs.
//! Lesion voxels draw their Hounsfield value from the lesion band; all other
//! voxels hold fixed background values outside that band, so a band detector
//! recovers the mask exactly on noiseless phantoms.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::volume::{Geometry, MaskVolume, ScanVolume, AIR_HU};

const MAX_PLACEMENT_ATTEMPTS: usize = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ellipsoid {
    /// Voxel coordinates (x, y, z) of the center.
    pub center: [f64; 3],
    /// Semi-axes in voxels along (x, y, z).
    pub radii: [f64; 3],
}

impl Ellipsoid {
    /// Interior test in product form, exact for integer offsets and radii.
    pub fn contains(&self, x: usize, y: usize, z: usize) -> bool {
        let d = [
            x as f64 - self.center[0],
            y as f64 - self.center[1],
            z as f64 - self.center[2],
        ];
        let r2 = self.radii.map(|r| r * r);
        d[0] * d[0] * r2[1] * r2[2] + d[1] * d[1] * r2[0] * r2[2] + d[2] * d[2] * r2[0] * r2[1]
            <= r2[0] * r2[1] * r2[2]
    }

    fn bounds(&self, axis: usize, n: usize) -> std::ops::Range<usize> {
        let lo = (self.center[axis] - self.radii[axis]).floor().max(0.0) as usize;
        let hi = ((self.center[axis] + self.radii[axis]).ceil() as usize + 1).min(n);
        lo..hi
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhantomSpec {
    pub seed: u64,
    pub width: usize,
    pub height: usize,
    pub depth: usize,
    pub n_lesions: usize,
    /// Inclusive lesion HU range.
    pub lesion_band: (i16, i16),
    pub lung_hu: i16,
    pub tissue_hu: i16,
    /// Semi-axis range (voxels) in-plane.
    pub radius_xy: (f64, f64),
    /// Semi-axis range (voxels) along z.
    pub radius_z: (f64, f64),
    /// Half-width of additive uniform HU jitter; 0 disables noise.
    pub noise_hu: u16,
    /// Fixed lesions used instead of random placement.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lesions: Option<Vec<Ellipsoid>>,
}

impl PhantomSpec {
    /// Default densities, radii scaled to the volume size.
    pub fn new(seed: u64, width: usize, height: usize, depth: usize, n_lesions: usize) -> Self {
        let s = width.min(height) as f64;
        let d = depth as f64;
        PhantomSpec {
            seed,
            width,
            height,
            depth,
            n_lesions,
            lesion_band: (-700, -500),
            lung_hu: -900,
            tissue_hu: 40,
            radius_xy: ((s / 20.0).max(2.0), (s / 10.0).max(3.0)),
            radius_z: ((d / 16.0).max(2.0), (d / 6.0).max(3.0)),
            noise_hu: 0,
            lesions: None,
        }
    }

    pub fn with_lesions(mut self, lesions: Vec<Ellipsoid>) -> Self {
        self.n_lesions = lesions.len();
        self.lesions = Some(lesions);
        self
    }

    pub fn layout(&self) -> Layout {
        let (w, h) = (self.width as f64, self.height as f64);
        let (cx, cy) = ((w - 1.0) / 2.0, (h - 1.0) / 2.0);
        Layout {
            body: (cx, cy, 0.45 * w, 0.42 * h),
            lungs: [
                (cx - 0.2 * w, cy, 0.15 * w, 0.3 * h),
                (cx + 0.2 * w, cy, 0.15 * w, 0.3 * h),
            ],
        }
    }

    fn validate(&self) -> Result<()> {
        if self.depth < 4 {
            return Err(Error::invalid(format!("phantom depth {} must be at least 4", self.depth)));
        }
        if self.width < 8 || self.height < 8 {
            return Err(Error::invalid(format!(
                "phantom slices {}x{} are too small (minimum 8x8)",
                self.width, self.height
            )));
        }
        let (lo, hi) = self.lesion_band;
        if lo > hi {
            return Err(Error::invalid(format!("lesion band [{lo}, {hi}] is inverted")));
        }
        for (name, v) in [("lung", self.lung_hu), ("tissue", self.tissue_hu), ("air", AIR_HU)] {
            if (lo..=hi).contains(&v) {
                return Err(Error::invalid(format!("{name} density {v} HU lies inside the lesion band")));
            }
        }
        for (name, (a, b)) in [("radius_xy", self.radius_xy), ("radius_z", self.radius_z)] {
            if !(a > 0.0) || a > b {
                return Err(Error::invalid(format!("{name} range ({a}, {b}) is invalid")));
            }
        }
        Ok(())
    }
}

/// In-plane ellipses `(cx, cy, semi_x, semi_y)` of the body and both lungs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Layout {
    pub body: (f64, f64, f64, f64),
    pub lungs: [(f64, f64, f64, f64); 2],
}

fn inside(e: (f64, f64, f64, f64), x: usize, y: usize) -> bool {
    let dx = (x as f64 - e.0) / e.2;
    let dy = (y as f64 - e.1) / e.3;
    dx * dx + dy * dy <= 1.0
}

impl Layout {
    pub fn is_lung(&self, x: usize, y: usize) -> bool {
        self.lungs.iter().any(|&l| inside(l, x, y))
    }

    pub fn is_body(&self, x: usize, y: usize) -> bool {
        inside(self.body, x, y)
    }
}

#[derive(Clone, Debug)]
pub struct Phantom {
    pub scan: ScanVolume,
    pub mask: MaskVolume,
    pub lesions: Vec<Ellipsoid>,
}

fn lesion_fits(e: &Ellipsoid, layout: &Layout, g: Geometry) -> bool {
    if e.center[2] - e.radii[2] < 0.0 || e.center[2] + e.radii[2] > (g.depth - 1) as f64 {
        return false;
    }
    let mut any = false;
    for z in e.bounds(2, g.depth) {
        for y in e.bounds(1, g.height) {
            for x in e.bounds(0, g.width) {
                if e.contains(x, y, z) {
                    if !layout.is_lung(x, y) {
                        return false;
                    }
                    any = true;
                }
            }
        }
    }
    any
}

fn place_lesions(spec: &PhantomSpec, layout: &Layout, g: Geometry, rng: &mut ChaCha8Rng) -> Result<Vec<Ellipsoid>> {
    let mut out = Vec::with_capacity(spec.n_lesions);
    for i in 0..spec.n_lesions {
        let placed = (0..MAX_PLACEMENT_ATTEMPTS).find_map(|_| {
            let lung = layout.lungs[rng.gen_range(0..2)];
            let rx = rng.gen_range(spec.radius_xy.0..=spec.radius_xy.1);
            let ry = rng.gen_range(spec.radius_xy.0..=spec.radius_xy.1);
            let rz = rng.gen_range(spec.radius_z.0..=spec.radius_z.1);
            let cx = lung.0 + rng.gen_range(-1.0..=1.0) * (lung.2 - rx).max(0.0);
            let cy = lung.1 + rng.gen_range(-1.0..=1.0) * (lung.3 - ry).max(0.0);
            let z_span = (g.depth - 1) as f64 - 2.0 * rz;
            if z_span < 0.0 {
                return None;
            }
            let cz = rz + rng.gen_range(0.0..=1.0) * z_span;
            let e = Ellipsoid {
                center: [cx.round(), cy.round(), cz.round()],
                radii: [rx, ry, rz],
            };
            lesion_fits(&e, layout, g).then_some(e)
        });
        out.push(placed.ok_or_else(|| {
            Error::invalid(format!(
                "could not place lesion {i} inside the lungs after {MAX_PLACEMENT_ATTEMPTS} attempts; reduce the radii"
            ))
        })?);
    }
    Ok(out)
}

pub fn generate_phantom(spec: &PhantomSpec) -> Result<Phantom> {
    spec.validate()?;
    let g = Geometry::new(spec.width, spec.height, spec.depth)?;
    let layout = spec.layout();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let lesions = match &spec.lesions {
        Some(fixed) => {
            for (i, e) in fixed.iter().enumerate() {
                if !lesion_fits(e, &layout, g) {
                    return Err(Error::invalid(format!("lesion {i} does not lie inside the lungs")));
                }
            }
            fixed.clone()
        }
        None => place_lesions(spec, &layout, g, &mut rng)?,
    };

    let mut mask = vec![0u8; g.len()];
    for e in &lesions {
        for z in e.bounds(2, g.depth) {
            for y in e.bounds(1, g.height) {
                for x in e.bounds(0, g.width) {
                    if e.contains(x, y, z) {
                        mask[g.index(x, y, z)] = 1;
                    }
                }
            }
        }
    }

    let background: Vec<i16> = (0..g.slice_len())
        .map(|i| {
            let (x, y) = (i % g.width, i / g.width);
            if layout.is_lung(x, y) {
                spec.lung_hu
            } else if layout.is_body(x, y) {
                spec.tissue_hu
            } else {
                AIR_HU
            }
        })
        .collect();
    let (lo, hi) = spec.lesion_band;
    let noise = spec.noise_hu as i32;
    let voxels = mask
        .iter()
        .enumerate()
        .map(|(i, &m)| {
            let base = if m == 1 {
                rng.gen_range(lo..=hi)
            } else {
                background[i % g.slice_len()]
            };
            if noise == 0 {
                base
            } else {
                (base as i32 + rng.gen_range(-noise..=noise)).clamp(i16::MIN as i32, i16::MAX as i32) as i16
            }
        })
        .collect();

    let scan_id = format!("phantom-{}", spec.seed);
    Ok(Phantom {
        scan: ScanVolume::new(scan_id.clone(), g, voxels)?,
        mask: MaskVolume::new(scan_id, g, mask)?,
        lesions,
    })
}
