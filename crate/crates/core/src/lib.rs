//! Stack-based volumetric CT segmentation toolkit.
//!
//! The crate covers the whole path from DICOM slices to evaluated masks:
//!
//! * [`dicom`]: minimal explicit-VR little-endian reader and slice assembly;
//! * [`volume`]: voxel grids plus rescale, windowing, resizing and thresholding;
//! * [`native`]: the `meta.json` + `voxels.raw` volume directory format;
//! * [`stacker`]: overlap-factor stack planning, slicing and reassembly;
//! * [`segment`]: backends (reference 2D/3D segmenters, external programs) and the prediction pipeline;
//! * [`metrics`]: dice, prevalence, area-plots and their total variation;
//! * [`bench`]: inference timing for 2D and 3D modes;
//! * [`synth`]: seeded phantoms with exact ground truth;
//! * [`cli`]: the `ctstack` command line.

pub mod bench;
pub mod cli;
pub mod dicom;
pub mod error;
pub mod metrics;
pub mod native;
pub mod plot;
pub mod segment;
pub mod stacker;
pub mod synth;
pub mod volume;

pub use error::{Error, Result};
pub use segment::{BackendDescriptor, PipelineMode, Segmenter};
pub use stacker::{plan_stacks, StackParams, StackPlan};
pub use volume::{MaskVolume, NormalizedVolume, ProbVolume, ScanVolume, WindowSpec};
