//! Native on-disk volume format.
//!
//! A volume is a directory holding two files:
//!
//! * `meta.json`: scan id, geometry, dtype (`i16`, `u8` or `f32`), optional
//!   voxel spacing and optional window center/width;
//! * `voxels.raw`: the voxel payload, little-endian, x-fastest then y then z.
//!
//! Scans are stored as `i16`, masks as `u8` (0/1 only) and probability or
//! normalized volumes as `f32` in [0, 1]. Every file is written through a
//! temporary sibling and renamed into place.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::volume::{Dtype, Geometry, MaskVolume, ProbVolume, ScanVolume, Volume, Voxel, WindowSpec};

pub const META_FILE: &str = "meta.json";
pub const VOXELS_FILE: &str = "voxels.raw";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VolumeMeta {
    pub scan_id: String,
    pub width: usize,
    pub height: usize,
    pub depth: usize,
    pub dtype: Dtype,
    #[serde(default)]
    pub spacing: Option<[f64; 3]>,
    #[serde(default)]
    pub window_center: Option<f64>,
    #[serde(default)]
    pub window_width: Option<f64>,
}

impl VolumeMeta {
    pub fn geometry(&self) -> Result<Geometry> {
        Geometry::new(self.width, self.height, self.depth)
            .map_err(|e| Error::format("width/height/depth", e.to_string()))
    }

    pub fn window(&self) -> Result<Option<WindowSpec>> {
        match (self.window_center, self.window_width) {
            (Some(c), Some(w)) => WindowSpec::new(c, w)
                .map(Some)
                .map_err(|e| Error::format("window_width", e.to_string())),
            (None, None) => Ok(None),
            _ => Err(Error::format(
                "window_center",
                "window center and width must be given together",
            )),
        }
    }

    fn of<T: Voxel>(volume: &Volume<T>) -> Self {
        VolumeMeta {
            scan_id: volume.scan_id.clone(),
            width: volume.width(),
            height: volume.height(),
            depth: volume.depth(),
            dtype: T::DTYPE,
            spacing: volume.spacing,
            window_center: volume.window.map(|w| w.center),
            window_width: volume.window.map(|w| w.width),
        }
    }
}

/// Any volume kind the native format can hold, dispatched on `dtype`.
#[derive(Clone, Debug, PartialEq)]
pub enum NativeVolume {
    Scan(ScanVolume),
    Mask(MaskVolume),
    Prob(ProbVolume),
}

pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

pub(crate) fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("report types serialize");
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

pub fn write_native<T: Voxel>(dir: impl AsRef<Path>, volume: &Volume<T>) -> Result<()> {
    let dir = dir.as_ref();
    let mut raw = Vec::with_capacity(volume.voxels().len() * T::DTYPE.byte_width());
    for &v in volume.voxels() {
        v.write_le(&mut raw);
    }
    write_atomic(&dir.join(VOXELS_FILE), &raw)?;
    write_json(&dir.join(META_FILE), &VolumeMeta::of(volume))
}

pub fn read_meta(dir: impl AsRef<Path>) -> Result<VolumeMeta> {
    let path = dir.as_ref().join(META_FILE);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    serde_json::from_str(&text).map_err(|e| {
        let field = if e.to_string().contains("dtype") || e.to_string().contains("variant") {
            "dtype"
        } else {
            META_FILE
        };
        Error::format(field, e.to_string())
    })
}

/// Reads a volume whose dtype must be `T`'s.
pub fn read_native<T: Voxel>(dir: impl AsRef<Path>) -> Result<Volume<T>> {
    let dir = dir.as_ref();
    let meta = read_meta(dir)?;
    if meta.dtype != T::DTYPE {
        return Err(Error::format(
            "dtype",
            format!("expected {}, found {}", T::DTYPE.as_str(), meta.dtype.as_str()),
        ));
    }
    read_payload(dir, &meta)
}

pub fn read_native_any(dir: impl AsRef<Path>) -> Result<NativeVolume> {
    let dir = dir.as_ref();
    let meta = read_meta(dir)?;
    Ok(match meta.dtype {
        Dtype::I16 => NativeVolume::Scan(read_payload(dir, &meta)?),
        Dtype::U8 => NativeVolume::Mask(read_payload(dir, &meta)?),
        Dtype::F32 => NativeVolume::Prob(read_payload(dir, &meta)?),
    })
}

fn read_payload<T: Voxel>(dir: &Path, meta: &VolumeMeta) -> Result<Volume<T>> {
    let geometry = meta.geometry()?;
    let window = meta.window()?;
    if let Some(s) = meta.spacing {
        if s.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(Error::format("spacing", format!("{s:?} must be positive")));
        }
    }
    let path: PathBuf = dir.join(VOXELS_FILE);
    let raw = fs::read(&path).map_err(|e| Error::io(&path, e))?;
    let width = T::DTYPE.byte_width();
    let expected = geometry.len() * width;
    if raw.len() != expected {
        return Err(Error::format(
            VOXELS_FILE,
            format!(
                "length mismatch: {} bytes on disk, {expected} expected for {}x{}x{} {}",
                raw.len(),
                geometry.width,
                geometry.height,
                geometry.depth,
                T::DTYPE.as_str()
            ),
        ));
    }
    let voxels: Vec<T> = raw.chunks_exact(width).map(T::read_le).collect();
    if let Some(i) = T::first_invalid(&voxels) {
        return Err(Error::format(
            VOXELS_FILE,
            format!("voxel {i} holds {:?}, outside the legal range for {}", voxels[i], T::DTYPE.as_str()),
        ));
    }
    let mut volume = Volume::new(meta.scan_id.clone(), geometry, voxels)?;
    volume.spacing = meta.spacing;
    volume.window = window;
    Ok(volume)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn geom(w: usize, h: usize, d: usize) -> Geometry {
        Geometry::new(w, h, d).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn scan_round_trip_is_bit_exact(w in 1usize..6, h in 1usize..6, d in 1usize..5, seed in any::<i16>()) {
            let g = geom(w, h, d);
            let voxels = (0..g.len()).map(|i| seed.wrapping_mul(i as i16 + 7)).collect();
            let scan = ScanVolume::new("rt", g, voxels).unwrap()
                .with_spacing([0.7, 0.7, 2.5])
                .with_window(WindowSpec::LUNG);
            let dir = tempfile::tempdir().unwrap();
            write_native(dir.path(), &scan).unwrap();
            prop_assert_eq!(read_native::<i16>(dir.path()).unwrap(), scan);
        }
    }

    #[test]
    fn prob_round_trip_keeps_bits() {
        let g = geom(3, 1, 1);
        let prob = ProbVolume::new("p", g, vec![0.0, 0.2, 1.0 / 3.0]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_native(dir.path(), &prob).unwrap();
        let back = read_native::<f32>(dir.path()).unwrap();
        let bits = |v: &ProbVolume| v.voxels().iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&back), bits(&prob));
    }

    #[test]
    fn short_raw_file_is_length_mismatch() {
        let scan = ScanVolume::filled("s", geom(2, 2, 2), 5).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_native(dir.path(), &scan).unwrap();
        let raw_path = dir.path().join(VOXELS_FILE);
        let mut raw = fs::read(&raw_path).unwrap();
        raw.pop();
        fs::write(&raw_path, raw).unwrap();
        match read_native::<i16>(dir.path()) {
            Err(Error::Format { field, reason }) => {
                assert_eq!(field, VOXELS_FILE);
                assert!(reason.contains("length mismatch"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn corrupted_mask_byte_is_rejected() {
        let mask = MaskVolume::filled("m", geom(2, 2, 1), 1).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_native(dir.path(), &mask).unwrap();
        fs::write(dir.path().join(VOXELS_FILE), [1u8, 0, 2, 1]).unwrap();
        match read_native::<u8>(dir.path()) {
            Err(Error::Format { field, reason }) => {
                assert_eq!(field, VOXELS_FILE);
                assert!(reason.contains("voxel 2"), "{reason}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_dtype_names_the_field() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(
            dir.path().join(META_FILE),
            r#"{"scan_id":"x","width":1,"height":1,"depth":1,"dtype":"u16"}"#,
        )
        .unwrap();
        fs::write(dir.path().join(VOXELS_FILE), [0u8, 0]).unwrap();
        match read_native_any(dir.path()) {
            Err(Error::Format { field, .. }) => assert_eq!(field, "dtype"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn dtype_must_match_requested_kind() {
        let mask = MaskVolume::filled("m", geom(1, 1, 1), 0).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_native(dir.path(), &mask).unwrap();
        assert!(matches!(read_native::<i16>(dir.path()), Err(Error::Format { .. })));
        assert!(matches!(read_native_any(dir.path()).unwrap(), NativeVolume::Mask(_)));
    }

    #[test]
    fn storage_order_is_x_fastest_little_endian() {
        let g = geom(2, 2, 2);
        let scan = ScanVolume::new("o", g, (0..8).map(|i| i * 256 + 1).collect()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_native(dir.path(), &scan).unwrap();
        let raw = fs::read(dir.path().join(VOXELS_FILE)).unwrap();
        // voxel (x=1, y=0, z=0) is the second i16, value 257
        assert_eq!(&raw[2..4], &[1, 1]);
        // voxel (x=0, y=1, z=1) is index 6
        assert_eq!(i16::from_le_bytes([raw[12], raw[13]]), scan.get(0, 1, 1));
        assert_eq!(scan.get(0, 1, 1), 6 * 256 + 1);
    }
}
