//! Segmentation backends and the end-to-end prediction pipeline.

mod external;
mod pipeline;
mod reference;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::volume::{NormalizedVolume, ProbVolume, WindowSpec};

pub use external::{segment_external, External, ExternalCommand, DEFAULT_TIMEOUT};
pub use pipeline::{run_pipeline, run_pipeline_with_overlap, CallTiming, PipelineConfig, PipelineOutput};
pub use reference::{
    segment_slice2d, segment_threshold3d, unit_hash, Band, Instability, Slice2d, Threshold3d, MAX_RADIUS,
};

/// Default lesion band in Hounsfield units (ground-glass-like densities).
pub const DEFAULT_HU_BAND: (f64, f64) = (-700.0, -500.0);

/// Where the input of a backend call sits in the full scan.
#[derive(Clone, Copy, Debug)]
pub struct SegmentContext<'a> {
    pub scan_id: &'a str,
    /// Global index of the input's first slice.
    pub first_slice: usize,
}

/// A segmentation backend. Implementations must be callable from several
/// worker threads at once.
pub trait Segmenter: Send + Sync {
    fn name(&self) -> &str;

    /// Scores every voxel of `input`; the result has the input's geometry
    /// and values in [0, 1].
    fn segment(&self, input: &NormalizedVolume, ctx: &SegmentContext) -> Result<ProbVolume>;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    Threshold3d,
    Slice2d,
    External,
}

impl BackendKind {
    pub fn as_str(self) -> &'static str {
        match self {
            BackendKind::Threshold3d => "threshold3d",
            BackendKind::Slice2d => "slice2d",
            BackendKind::External => "external",
        }
    }

    fn allowed_keys(self) -> &'static [&'static str] {
        match self {
            BackendKind::Threshold3d => &["hu_lo", "hu_hi", "radius"],
            BackendKind::Slice2d => &["hu_lo", "hu_hi", "radius", "rate", "seed"],
            BackendKind::External => &["cmd", "timeout"],
        }
    }
}

/// How a scan is fed to the backend.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PipelineMode {
    /// One call per slice, each input of depth 1.
    PerSlice2d,
    /// One call per stack of `S` slices.
    Stacked3d,
}

impl FromStr for PipelineMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "2d" | "per_slice_2d" => Ok(PipelineMode::PerSlice2d),
            "3d" | "stacked_3d" => Ok(PipelineMode::Stacked3d),
            other => Err(Error::invalid(format!("unknown mode {other:?} (expected 2d or 3d)"))),
        }
    }
}

impl fmt::Display for PipelineMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PipelineMode::PerSlice2d => "2d",
            PipelineMode::Stacked3d => "3d",
        })
    }
}

/// Backend selection plus its parameters.
///
/// Textual form: `kind[:key=value;key=value...]`, e.g.
/// `slice2d:radius=1;rate=0.25;seed=7` or `external:cmd=python3 model.py;timeout=60`.
///
/// | kind          | keys                                   |
/// |---------------|----------------------------------------|
/// | `threshold3d` | `hu_lo`, `hu_hi`, `radius`             |
/// | `slice2d`     | `hu_lo`, `hu_hi`, `radius`, `rate`, `seed` |
/// | `external`    | `cmd`, `timeout` (seconds)             |
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BackendDescriptor {
    pub kind: BackendKind,
    pub mode: PipelineMode,
    pub params: BTreeMap<String, String>,
}

impl BackendDescriptor {
    pub fn new(kind: BackendKind) -> Self {
        let mode = match kind {
            BackendKind::Slice2d => PipelineMode::PerSlice2d,
            BackendKind::Threshold3d | BackendKind::External => PipelineMode::Stacked3d,
        };
        BackendDescriptor {
            kind,
            mode,
            params: BTreeMap::new(),
        }
    }

    pub fn with_mode(mut self, mode: PipelineMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_param(mut self, key: &str, value: impl ToString) -> Self {
        self.params.insert(key.to_string(), value.to_string());
        self
    }

    fn get<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        match self.params.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| Error::invalid(format!("backend parameter {key}={v:?} is not valid"))),
        }
    }

    /// Lesion band mapped through `window` into [0, 1] units.
    pub fn band(&self, window: &WindowSpec) -> Result<Band> {
        let lo = self.get("hu_lo", DEFAULT_HU_BAND.0)?;
        let hi = self.get("hu_hi", DEFAULT_HU_BAND.1)?;
        if lo > hi {
            return Err(Error::invalid(format!("HU band [{lo}, {hi}] is inverted")));
        }
        Band::new(window.normalize(lo) as f32, window.normalize(hi) as f32)
    }

    pub fn build(&self, window: &WindowSpec) -> Result<Box<dyn Segmenter>> {
        window.validate()?;
        Ok(match self.kind {
            BackendKind::Threshold3d => Box::new(Threshold3d {
                band: self.band(window)?,
                radius: self.get("radius", 1)?,
            }),
            BackendKind::Slice2d => Box::new(Slice2d {
                band: self.band(window)?,
                radius: self.get("radius", 1)?,
                instability: Instability::new(self.get("rate", 0.0)?, self.get("seed", 0)?)?,
            }),
            BackendKind::External => {
                let cmd = self
                    .params
                    .get("cmd")
                    .ok_or_else(|| Error::invalid("external backend needs cmd=<program ...>"))?;
                let timeout = self.get("timeout", DEFAULT_TIMEOUT.as_secs_f64())?;
                if !(timeout > 0.0) || !timeout.is_finite() {
                    return Err(Error::invalid(format!("timeout {timeout} must be positive")));
                }
                Box::new(External {
                    command: ExternalCommand::parse(cmd)?.with_timeout(Duration::from_secs_f64(timeout)),
                })
            }
        })
    }
}

impl FromStr for BackendDescriptor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, rest) = s.split_once(':').unwrap_or((s, ""));
        let kind = match kind.trim() {
            "threshold3d" => BackendKind::Threshold3d,
            "slice2d" => BackendKind::Slice2d,
            "external" => BackendKind::External,
            other => {
                return Err(Error::invalid(format!(
                    "unknown backend {other:?} (expected threshold3d, slice2d or external)"
                )))
            }
        };
        let mut desc = BackendDescriptor::new(kind);
        for pair in rest.split(';').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, value) = pair
                .split_once('=')
                .ok_or_else(|| Error::invalid(format!("backend parameter {pair:?} is not key=value")))?;
            let key = key.trim();
            if !kind.allowed_keys().contains(&key) {
                return Err(Error::invalid(format!(
                    "{} does not take parameter {key:?} (allowed: {})",
                    kind.as_str(),
                    kind.allowed_keys().join(", ")
                )));
            }
            desc.params.insert(key.to_string(), value.trim().to_string());
        }
        Ok(desc)
    }
}

impl fmt::Display for BackendDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.kind.as_str())?;
        for (i, (k, v)) in self.params.iter().enumerate() {
            write!(f, "{}{k}={v}", if i == 0 { ':' } else { ';' })?;
        }
        Ok(())
    }
}
